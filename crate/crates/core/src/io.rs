//! CSV exports and the binary kernel format.
//!
//! Kernel file layout (all little-endian):
//!
//! | offset | type      | field                                  |
//! |--------|-----------|----------------------------------------|
//! | 0      | [u8; 8]   | magic `FDBBKRN1`                       |
//! | 8      | f64       | t                                      |
//! | 16     | f64, f64, u64 | x grid: x_min, x_max, n            |
//! | 40     | f64, f64, u64 | x0 grid: x_min, x_max, n           |
//! | 64     | f64, u64, u64 | quadrature: v_max, n_nodes, n_panels |
//! | 88     | u64       | form (0 = derived, 1 = printed)        |
//! | 96     | f64       | meta (convergence estimate)            |
//! | 104    | f64 pairs | entries, row-major, (re, im)           |
//! | ...    | u64 + bytes | trailing UTF-8 text (resolved config) |

use std::io::{self, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};
use crate::madelung::{MadelungFields, Residual};
use crate::packet::PacketTrajectory;
use crate::propagator::{KernelForm, KernelMatrix};
use crate::quadrature::QuadratureSpec;

pub const KERNEL_MAGIC: &[u8; 8] = b"FDBBKRN1";
pub const KERNEL_HEADER_LEN: usize = 104;

/// 17 significant digits, round-trip exact for f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes each line of `text` prefixed with `# `.
pub fn write_comment_block<W: Write>(w: &mut W, text: &str) -> io::Result<()> {
    for line in text.lines() {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

pub fn write_trajectory_csv<W: Write>(w: &mut W, traj: &PacketTrajectory, comment: &str) -> io::Result<()> {
    write_comment_block(w, comment)?;
    writeln!(w, "t,q,qdot,sigma,sigmadot,action")?;
    for s in traj.states() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(s.t),
            fmt_f64(s.q),
            fmt_f64(s.qdot),
            fmt_f64(s.sigma),
            fmt_f64(s.sigmadot),
            fmt_f64(s.action)
        )?;
    }
    Ok(())
}

/// One row of a trajectory CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub q: f64,
    pub qdot: f64,
    pub sigma: f64,
    pub sigmadot: f64,
    pub action: f64,
}

/// Parses a trajectory CSV: `#` comment lines, the fixed header, then
/// rows with strictly increasing t.
pub fn parse_trajectory_csv(text: &str) -> Result<Vec<TrajectoryRow>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    match lines.next() {
        Some(h) if h.trim() == "t,q,qdot,sigma,sigmadot,action" => {}
        _ => return Err(Error::Format("missing trajectory header".into())),
    }
    let mut rows: Vec<TrajectoryRow> = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals = line
            .split(',')
            .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Format(format!("row {n}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let [t, q, qdot, sigma, sigmadot, action] = vals[..] else {
            return Err(Error::Format(format!("row {n}: expected 6 columns, got {}", vals.len())));
        };
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format(format!("row {n}: non-finite value")));
        }
        if let Some(prev) = rows.last() {
            if !(t > prev.t) {
                return Err(Error::Format(format!("row {n}: time not increasing")));
            }
        }
        rows.push(TrajectoryRow { t, q, qdot, sigma, sigmadot, action });
    }
    Ok(rows)
}

pub fn write_field_csv<W: Write>(w: &mut W, field: &ComplexField, comment: &str) -> io::Result<()> {
    write_comment_block(w, comment)?;
    writeln!(w, "x,re,im")?;
    for (i, z) in field.values().iter().enumerate() {
        writeln!(w, "{},{},{}", fmt_f64(field.grid().x(i)), fmt_f64(z.re), fmt_f64(z.im))?;
    }
    Ok(())
}

pub fn write_diagnostics_csv<W: Write>(
    w: &mut W,
    fields: &MadelungFields,
    residual: &Residual,
    comment: &str,
) -> io::Result<()> {
    write_comment_block(w, comment)?;
    writeln!(w, "x,rho,S,v_qu,V_qu,V_GP,residual")?;
    for i in 0..fields.rho.len() {
        let r = if residual.valid[i] { fmt_f64(residual.values[i]) } else { "nan".to_string() };
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt_f64(fields.grid.x(i)),
            fmt_f64(fields.rho[i]),
            fmt_f64(fields.phase[i]),
            fmt_f64(fields.velocity[i]),
            fmt_f64(fields.quantum_potential[i]),
            fmt_f64(fields.gp_potential[i]),
            r
        )?;
    }
    Ok(())
}

fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

/// Serialises a kernel plus trailing text.
pub fn encode_kernel(k: &KernelMatrix, trailer: &str) -> Vec<u8> {
    let mut buf = Vec::with_capacity(KERNEL_HEADER_LEN + 16 * k.entries.len() + 8 + trailer.len());
    buf.extend_from_slice(KERNEL_MAGIC);
    put_f64(&mut buf, k.t);
    for g in [&k.x_grid, &k.x0_grid] {
        put_f64(&mut buf, g.x_min());
        put_f64(&mut buf, g.x_max());
        put_u64(&mut buf, g.len() as u64);
    }
    put_f64(&mut buf, k.quad.v_max);
    put_u64(&mut buf, k.quad.n_nodes as u64);
    put_u64(&mut buf, k.quad.n_panels as u64);
    put_u64(&mut buf, k.form.code());
    put_f64(&mut buf, k.meta);
    for z in &k.entries {
        put_f64(&mut buf, z.re);
        put_f64(&mut buf, z.im);
    }
    put_u64(&mut buf, trailer.len() as u64);
    buf.extend_from_slice(trailer.as_bytes());
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Format("count does not fit in usize".into()))
    }
}

/// Parses a kernel file, returning the kernel and its trailing text.
pub fn decode_kernel(bytes: &[u8]) -> Result<(KernelMatrix, String)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != KERNEL_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let t = r.f64()?;
    let mut grids = [None, None];
    for g in &mut grids {
        let (lo, hi, n) = (r.f64()?, r.f64()?, r.usize()?);
        *g = Some(Grid::new(lo, hi, n).map_err(|e| Error::Format(e.to_string()))?);
    }
    let [Some(x_grid), Some(x0_grid)] = grids else { unreachable!() };
    let quad = QuadratureSpec::new(r.f64()?, r.usize()?, r.usize()?).map_err(|e| Error::Format(e.to_string()))?;
    let form = KernelForm::from_code(r.u64()?).ok_or_else(|| Error::Format("unknown kernel form".into()))?;
    let meta = r.f64()?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Format(format!("invalid time {t}")));
    }
    let count = x_grid
        .len()
        .checked_mul(x0_grid.len())
        .filter(|c| c.checked_mul(16).is_some_and(|b| b <= bytes.len()))
        .ok_or_else(|| Error::Format("entry count exceeds file size".into()))?;
    let raw = r.take(count * 16)?;
    let entries: Vec<Complex64> = raw
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Format("non-finite kernel entry".into()));
    }
    let trailer_len = r.usize()?;
    let trailer = std::str::from_utf8(r.take(trailer_len)?)
        .map_err(|e| Error::Format(format!("trailer is not UTF-8: {e}")))?
        .to_string();
    if r.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok((KernelMatrix { t, x_grid, x0_grid, quad, form, meta, entries }, trailer))
}
