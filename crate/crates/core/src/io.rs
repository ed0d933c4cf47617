//! Diagnostics CSV and binary state snapshots.
//!
//! Snapshot layout (`KGS1`), all integers and floats little-endian:
//!
//! | bytes            | content                                   |
//! |------------------|-------------------------------------------|
//! | 4                | magic `KGS1`                              |
//! | 4                | u32 dim                                   |
//! | 4·dim            | u32 points per axis                       |
//! | 8·dim            | f64 box length per axis                   |
//! | 8                | f64 t                                     |
//! | 4                | u32 field count                           |
//! | 16·N per field   | (re, im) f64 pairs, row-major, position   |

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rustfft::num_complex::Complex64;

use crate::diagnostics::DiagnosticsRecord;
use crate::embedding::CoupledState;
use crate::error::{KgError, Result};
use crate::evolution::Observer;
use crate::field::ComplexField;
use crate::grid::{make_grid, GridSpec, Representation};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"KGS1";

fn format_row(rec: &DiagnosticsRecord) -> String {
    let cols: Vec<String> = rec.columns().iter().map(|v| format!("{v:.16e}")).collect();
    cols.join(",")
}

/// Writes the header and one row per record (17 significant digits).
pub fn write_diagnostics_to<W: Write>(mut w: W, records: &[DiagnosticsRecord]) -> Result<()> {
    writeln!(w, "{}", DiagnosticsRecord::CSV_HEADER)?;
    for r in records {
        writeln!(w, "{}", format_row(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_diagnostics(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    write_diagnostics_to(BufWriter::new(create(path)?), records)
}

/// Reads a diagnostics CSV written by [`write_diagnostics`].
pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == DiagnosticsRecord::CSV_HEADER => {}
        _ => {
            return Err(KgError::Parse {
                line: 1,
                message: "missing diagnostics header".into(),
            })
        }
    }
    lines
        .map(|(i, l)| {
            let v: Vec<f64> = l
                .split(',')
                .map(|x| x.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| KgError::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            if v.len() != 8 {
                return Err(KgError::Parse {
                    line: i + 1,
                    message: format!("expected 8 columns, got {}", v.len()),
                });
            }
            Ok(DiagnosticsRecord {
                t: v[0],
                norm_plus: v[1],
                norm_minus: v[2],
                energy_plus: v[3],
                energy_minus: v[4],
                rho_integral: v[5],
                identity_defect: v[6],
                constraint_defect: v[7],
            })
        })
        .collect()
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(File::create(path)?)
}

/// Serializes fields sharing one grid into the snapshot layout.
pub fn encode_snapshot(t: f64, fields: &[&ComplexField]) -> Result<Vec<u8>> {
    let grid = fields
        .first()
        .ok_or_else(|| KgError::Snapshot("no fields to write".into()))?
        .grid();
    for f in fields {
        if !f.grid().same_as(grid) {
            return Err(KgError::GridMismatch);
        }
    }
    let n = grid.len();
    let mut out = Vec::with_capacity(4 + 4 + 12 * grid.dim() + 12 + fields.len() * n * 16);
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    for &p in grid.points() {
        out.extend_from_slice(&(p as u32).to_le_bytes());
    }
    for &l in grid.lengths() {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out.extend_from_slice(&t.to_le_bytes());
    out.extend_from_slice(&(fields.len() as u32).to_le_bytes());
    for f in fields {
        let pos = f.to_position();
        for v in pos.values() {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_snapshot(path: &Path, t: f64, fields: &[&ComplexField]) -> Result<()> {
    let bytes = encode_snapshot(t, fields)?;
    let mut f = create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

/// Writes ψ and χ of a coupled state.
pub fn write_state(path: &Path, state: &CoupledState) -> Result<()> {
    write_snapshot(path, state.t, &[&state.psi, &state.chi])
}

/// Decoded snapshot contents.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub grid: GridSpec,
    pub t: f64,
    pub fields: Vec<ComplexField>,
}

impl Snapshot {
    /// Interprets a two-field snapshot as (ψ, χ).
    pub fn into_state(self) -> Result<CoupledState> {
        let [psi, chi]: [ComplexField; 2] = self
            .fields
            .try_into()
            .map_err(|f: Vec<_>| KgError::Snapshot(format!("expected 2 fields, found {}", f.len())))?;
        CoupledState::new(psi, chi, self.t)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| KgError::Snapshot(format!("truncated while reading {what} at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Snapshot> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4, "magic")? != SNAPSHOT_MAGIC {
        return Err(KgError::Snapshot("bad magic bytes".into()));
    }
    let dim = c.u32("dim")? as usize;
    if !(1..=3).contains(&dim) {
        return Err(KgError::Snapshot(format!("unsupported dimension {dim}")));
    }
    let points = (0..dim)
        .map(|_| c.u32("point counts").map(|p| p as usize))
        .collect::<Result<Vec<_>>>()?;
    let lengths = (0..dim).map(|_| c.f64("box lengths")).collect::<Result<Vec<_>>>()?;
    let grid = make_grid(dim, &points, &lengths).map_err(|e| KgError::Snapshot(e.to_string()))?;
    let t = c.f64("time")?;
    let count = c.u32("field count")? as usize;
    let n = grid.len();
    let mut fields = Vec::with_capacity(count.min(16));
    for k in 0..count {
        let raw = c.take(n * 16, &format!("field {k}"))?;
        let values = raw
            .chunks_exact(16)
            .map(|b| {
                Complex64::new(
                    f64::from_le_bytes(b[..8].try_into().unwrap()),
                    f64::from_le_bytes(b[8..].try_into().unwrap()),
                )
            })
            .collect();
        fields.push(
            ComplexField::from_values(&grid, Representation::Position, values)
                .map_err(|e| KgError::Snapshot(e.to_string()))?,
        );
    }
    if c.pos != bytes.len() {
        return Err(KgError::Snapshot(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    Ok(Snapshot { grid, t, fields })
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    decode_snapshot(&fs::read(path)?)
}

/// `base` with the step number spliced in before the extension:
/// `out/state.kgs` → `out/state_00000100.kgs`.
pub fn snapshot_path_for(base: &Path, step: usize) -> PathBuf {
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}_{step:08}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{step:08}"),
    };
    base.with_file_name(name)
}

/// Streams records to a CSV file and optionally writes state snapshots.
pub struct FileObserver {
    csv: BufWriter<File>,
    snapshot_base: Option<PathBuf>,
    snapshot_stride: usize,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<PathBuf>,
}

impl FileObserver {
    pub fn create(diagnostics: &Path, snapshot_base: Option<&Path>, snapshot_stride: usize) -> Result<Self> {
        let mut csv = BufWriter::new(create(diagnostics)?);
        writeln!(csv, "{}", DiagnosticsRecord::CSV_HEADER)?;
        Ok(Self {
            csv,
            snapshot_base: snapshot_base.map(Path::to_path_buf),
            snapshot_stride,
            records: Vec::new(),
            snapshots: Vec::new(),
        })
    }

    pub fn finish(mut self) -> Result<(Vec<DiagnosticsRecord>, Vec<PathBuf>)> {
        self.csv.flush()?;
        Ok((self.records, self.snapshots))
    }
}

impl Observer for FileObserver {
    fn record(&mut self, rec: &DiagnosticsRecord) -> Result<()> {
        writeln!(self.csv, "{}", format_row(rec))?;
        self.records.push(*rec);
        Ok(())
    }

    fn snapshot_stride(&self) -> Option<usize> {
        self.snapshot_base.as_ref().map(|_| self.snapshot_stride)
    }

    fn snapshot(&mut self, step: usize, state: &CoupledState) -> Result<()> {
        if let Some(base) = &self.snapshot_base {
            let path = snapshot_path_for(base, step);
            write_state(&path, state)?;
            self.snapshots.push(path);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(grid: &GridSpec, seed: f64) -> ComplexField {
        ComplexField::from_fn(grid, |x| {
            Complex64::new((x[0] * seed).sin(), (x[0] + seed).cos() * 1e-7)
        })
    }

    #[test]
    fn header_only_for_empty_run() {
        let mut buf = Vec::new();
        write_diagnostics_to(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("{}\n", DiagnosticsRecord::CSV_HEADER)
        );
    }

    #[test]
    fn rows_have_seventeen_significant_digits() {
        let rec = DiagnosticsRecord {
            t: 0.1,
            norm_plus: 1.0 / 3.0,
            norm_minus: 0.0,
            energy_plus: -2.5,
            energy_minus: 1e-300,
            rho_integral: 7.0,
            identity_defect: 0.0,
            constraint_defect: 0.0,
        };
        let mut buf = Vec::new();
        write_diagnostics_to(&mut buf, &[rec]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let row = text.lines().nth(1).unwrap();
        assert!(row.starts_with("1.0000000000000001e-1,3.3333333333333331e-1,"), "{row}");
        assert!(!text.contains('\r'));
        let parsed: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(parsed, rec.columns().to_vec());
    }

    #[test]
    fn snapshot_size_matches_layout() {
        let g = make_grid(1, &[256], &[20.0]).unwrap();
        let bytes = encode_snapshot(0.5, &[&field(&g, 1.0), &field(&g, 2.0)]).unwrap();
        assert_eq!(bytes.len(), 8224);
        assert_eq!(&bytes[..4], b"KGS1");
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let g = make_grid(2, &[4, 6], &[1.5, 2.0]).unwrap();
        let a = field(&g, 0.3);
        let b = field(&g, 1.7);
        let snap = decode_snapshot(&encode_snapshot(3.25, &[&a, &b]).unwrap()).unwrap();
        assert_eq!(snap.t, 3.25);
        assert_eq!(snap.grid, g);
        for (orig, back) in [&a, &b].iter().zip(&snap.fields) {
            for (x, y) in orig.values().iter().zip(back.values()) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
        let state = snap.into_state().unwrap();
        assert_eq!(state.t, 3.25);
    }

    #[test]
    fn truncated_and_corrupt_snapshots_error() {
        let g = make_grid(1, &[8], &[1.0]).unwrap();
        let bytes = encode_snapshot(0.0, &[&field(&g, 1.0)]).unwrap();
        for cut in [0, 3, 7, 10, 30, bytes.len() - 1] {
            assert!(
                matches!(decode_snapshot(&bytes[..cut]), Err(KgError::Snapshot(_))),
                "cut {cut}"
            );
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_snapshot(&bad).is_err());
        let mut long = bytes.clone();
        long.push(0);
        assert!(decode_snapshot(&long).is_err());
        let mut odd = bytes;
        odd[8..12].copy_from_slice(&7u32.to_le_bytes());
        assert!(decode_snapshot(&odd).is_err());
    }

    #[test]
    fn snapshot_names() {
        assert_eq!(
            snapshot_path_for(Path::new("out/state.kgs"), 100),
            PathBuf::from("out/state_00000100.kgs")
        );
        assert_eq!(
            snapshot_path_for(Path::new("state"), 3),
            PathBuf::from("state_00000003")
        );
    }
}
