//! Polar (Madelung) decomposition psi = sqrt(rho) e^{iS} of sampled fields
//! and residuals of the continuity, Hamilton-Jacobi and Euler equations.
//!
//! Derivatives are second-order central differences. Points whose stencil
//! touches the low-density mask, or the grid boundary, are excluded from
//! residual reporting.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};
use crate::params::PhysParams;

/// Relative density below which the phase is frozen and the quantum
/// potential is not evaluated.
pub const DEFAULT_RHO_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct MadelungFields {
    pub grid: Grid,
    pub rho: Vec<f64>,
    /// Unwrapped phase S, with psi = sqrt(rho) e^{iS}.
    pub phase: Vec<f64>,
    /// (hbar/m) dS/dx
    pub velocity: Vec<f64>,
    /// -(hbar^2/2m) (d^2 sqrt(rho)/dx^2) / sqrt(rho); zero where masked.
    pub quantum_potential: Vec<f64>,
    /// g rho
    pub gp_potential: Vec<f64>,
    /// rho >= rho_floor * max(rho)
    pub dense: Vec<bool>,
}

impl MadelungFields {
    /// sqrt(rho) e^{iS}.
    pub fn recompose(&self) -> ComplexField {
        let values = self.rho.iter().zip(&self.phase).map(|(r, s)| Complex64::from_polar(r.sqrt(), *s)).collect();
        ComplexField::new(self.grid, values).expect("finite decomposition")
    }

    /// Interior points whose `reach`-neighbourhood is entirely dense.
    fn interior_mask(&self, reach: usize) -> Vec<bool> {
        let n = self.rho.len();
        (0..n).map(|i| i >= reach && i + reach < n && self.dense[i - reach..=i + reach].iter().all(|&d| d)).collect()
    }
}

#[inline]
fn wrap_to_pi(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// Left-to-right unwrapping; the phase is held at its last dense value
/// across masked points.
pub fn unwrap_phase(raw: &[f64], dense: &[bool]) -> Vec<f64> {
    let first = dense.iter().position(|&d| d);
    let Some(first) = first else {
        return vec![0.0; raw.len()];
    };
    let mut out = vec![raw[first]; raw.len()];
    let mut s_ref = raw[first];
    let mut raw_ref = raw[first];
    for i in first..raw.len() {
        if dense[i] {
            s_ref += wrap_to_pi(raw[i] - raw_ref);
            raw_ref = raw[i];
        }
        out[i] = s_ref;
    }
    out
}

fn first_derivative(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - f[i - 1]) / (2.0 * dx);
    }
    d[0] = (f[1] - f[0]) / dx;
    d[n - 1] = (f[n - 1] - f[n - 2]) / dx;
    d
}

fn quantum_potential(amplitude: &[f64], dense: &[bool], dx: f64, params: &PhysParams) -> Vec<f64> {
    let n = amplitude.len();
    let c = -params.hbar() * params.hbar() / (2.0 * params.m());
    (0..n)
        .map(|i| {
            if !dense[i] {
                return 0.0;
            }
            // shifted stencil at the ends
            let j = i.clamp(1, n - 2);
            let lap = (amplitude[j + 1] - 2.0 * amplitude[j] + amplitude[j - 1]) / (dx * dx);
            c * lap / amplitude[i]
        })
        .collect()
}

/// Quantum potential computed from sqrt(rho).
pub fn quantum_potential_from_density(rho: &[f64], dense: &[bool], dx: f64, params: &PhysParams) -> Vec<f64> {
    let amp: Vec<f64> = rho.iter().map(|r| r.sqrt()).collect();
    quantum_potential(&amp, dense, dx, params)
}

/// Quantum potential computed from the amplitude phi = |psi|.
pub fn quantum_potential_from_amplitude(psi: &ComplexField, dense: &[bool], params: &PhysParams) -> Vec<f64> {
    let amp: Vec<f64> = psi.values().iter().map(|z| z.norm()).collect();
    quantum_potential(&amp, dense, psi.grid().dx(), params)
}

pub fn decompose(f: &ComplexField, params: &PhysParams, rho_floor: f64) -> Result<MadelungFields> {
    if !(rho_floor.is_finite() && rho_floor > 0.0) {
        return Err(Error::param("rho_floor", format!("must be > 0, got {rho_floor}")));
    }
    let grid = *f.grid();
    let rho = f.density();
    let peak = rho.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::DegenerateField);
    }
    let dense: Vec<bool> = rho.iter().map(|&r| r >= rho_floor * peak).collect();
    let raw: Vec<f64> = f.values().iter().map(|z| z.arg()).collect();
    let phase = unwrap_phase(&raw, &dense);
    let dx = grid.dx();
    let scale = params.hbar() / params.m();
    let velocity = first_derivative(&phase, dx).into_iter().map(|d| scale * d).collect();
    let quantum_potential = quantum_potential_from_density(&rho, &dense, dx, params);
    let gp_potential = rho.iter().map(|r| params.g() * r).collect();
    Ok(MadelungFields { grid, rho, phase, velocity, quantum_potential, gp_potential, dense })
}

/// A real residual field with the set of points it is reported on.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl Residual {
    fn new(grid: Grid, values: Vec<f64>, valid: Vec<bool>) -> Self {
        let values = values.into_iter().zip(&valid).map(|(v, &ok)| if ok { v } else { 0.0 }).collect();
        Self { grid, values, valid }
    }

    /// Max |residual| over valid points.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().zip(&self.valid).filter(|(_, &ok)| ok).map(|(v, _)| v.abs()).fold(0.0, f64::max)
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&ok| ok).count()
    }
}

fn check_pair(a: &ComplexField, b: &ComplexField, dt: f64) -> Result<()> {
    a.grid().check_same(b.grid())?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    Ok(())
}

fn and_masks(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().zip(b).map(|(x, y)| *x && *y).collect()
}

fn average(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
}

/// d(rho)/dt + d(rho v)/dx between two frames `dt` apart, evaluated at
/// their midpoint.
pub fn continuity_residual(
    f_prev: &ComplexField,
    f_next: &ComplexField,
    dt: f64,
    params: &PhysParams,
) -> Result<Residual> {
    check_pair(f_prev, f_next, dt)?;
    let a = decompose(f_prev, params, DEFAULT_RHO_FLOOR)?;
    let b = decompose(f_next, params, DEFAULT_RHO_FLOOR)?;
    let dx = a.grid.dx();
    let rho_mid = average(&a.rho, &b.rho);
    let v_mid = average(&a.velocity, &b.velocity);
    let flux: Vec<f64> = rho_mid.iter().zip(&v_mid).map(|(r, v)| r * v).collect();
    let dflux = first_derivative(&flux, dx);
    let values = (0..rho_mid.len()).map(|i| (b.rho[i] - a.rho[i]) / dt + dflux[i]).collect();
    let valid = and_masks(&a.interior_mask(1), &b.interior_mask(1));
    Ok(Residual::new(a.grid, values, valid))
}

/// hbar dS/dt + m v^2/2 + m omega^2 x^2/2 + V_qu + V_GP for a single
/// frame, with dS/dt supplied by the caller.
pub fn hamilton_jacobi_residual(f: &ComplexField, dsdt: &[f64], params: &PhysParams, omega: f64) -> Result<Residual> {
    if dsdt.len() != f.grid().len() {
        return Err(Error::GridMismatch(format!("dS/dt has {} points, field has {}", dsdt.len(), f.grid().len())));
    }
    let d = decompose(f, params, DEFAULT_RHO_FLOOR)?;
    let m = params.m();
    let values = (0..d.rho.len())
        .map(|i| {
            let x = d.grid.x(i);
            params.hbar() * dsdt[i]
                + 0.5 * m * d.velocity[i] * d.velocity[i]
                + 0.5 * m * omega * omega * x * x
                + d.quantum_potential[i]
                + d.gp_potential[i]
        })
        .collect();
    let valid = d.interior_mask(1);
    Ok(Residual::new(d.grid, values, valid))
}

/// dv/dt + v dv/dx + omega^2 x + (1/m) d(V_qu + V_GP)/dx between two
/// frames `dt` apart, evaluated at their midpoint.
pub fn euler_residual(
    f_prev: &ComplexField,
    f_next: &ComplexField,
    dt: f64,
    params: &PhysParams,
    omega: f64,
) -> Result<Residual> {
    check_pair(f_prev, f_next, dt)?;
    let a = decompose(f_prev, params, DEFAULT_RHO_FLOOR)?;
    let b = decompose(f_next, params, DEFAULT_RHO_FLOOR)?;
    let dx = a.grid.dx();
    let v_mid = average(&a.velocity, &b.velocity);
    let u_a: Vec<f64> = a.quantum_potential.iter().zip(&a.gp_potential).map(|(q, g)| q + g).collect();
    let u_b: Vec<f64> = b.quantum_potential.iter().zip(&b.gp_potential).map(|(q, g)| q + g).collect();
    let u_mid = average(&u_a, &u_b);
    let dv = first_derivative(&v_mid, dx);
    let du = first_derivative(&u_mid, dx);
    let m = params.m();
    let values = (0..v_mid.len())
        .map(|i| {
            let x = a.grid.x(i);
            (b.velocity[i] - a.velocity[i]) / dt + v_mid[i] * dv[i] + omega * omega * x + du[i] / m
        })
        .collect();
    let valid = and_masks(&a.interior_mask(2), &b.interior_mask(2));
    Ok(Residual::new(a.grid, values, valid))
}

/// Branch-free dS/dt estimate, arg(psi_next conj(psi_prev)) / dt.
pub fn phase_rate(f_prev: &ComplexField, f_next: &ComplexField, dt: f64) -> Result<Vec<f64>> {
    check_pair(f_prev, f_next, dt)?;
    Ok(f_prev.values().iter().zip(f_next.values()).map(|(a, b)| (b * a.conj()).arg() / dt).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(g: f64) -> PhysParams {
        PhysParams::natural(g).unwrap()
    }

    fn gaussian_with_momentum(grid: Grid, q: f64, sigma: f64, k: f64) -> ComplexField {
        ComplexField::from_fn(grid, |x| {
            Complex64::from_polar((PI * sigma).powf(-0.25) * (-(x - q).powi(2) / (2.0 * sigma)).exp(), k * x)
        })
        .unwrap()
    }

    #[test]
    fn wrap_into_principal_branch() {
        assert!((wrap_to_pi(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_to_pi(-3.0 * PI / 2.0) - PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_to_pi(0.5), 0.5);
    }

    #[test]
    fn unwrap_freezes_masked_points() {
        let raw = [0.1, 3.0, -3.0, 1.0, 1.1];
        let dense = [true, true, true, false, true];
        let s = unwrap_phase(&raw, &dense);
        assert_eq!(s[0], 0.1);
        assert!((s[2] - (2.0 * PI - 3.0)).abs() < 1e-14);
        assert_eq!(s[3], s[2]);
        // unwrapped relative to the frozen value
        assert!((s[4] - (s[2] + wrap_to_pi(1.1 + 3.0))).abs() < 1e-14);
    }

    #[test]
    fn plane_phase_velocity() {
        let grid = Grid::new(-10.0, 10.0, 2001).unwrap();
        let k = 2.3;
        let f = gaussian_with_momentum(grid, 0.4, 1.2, k);
        let d = decompose(&f, &params(0.0), DEFAULT_RHO_FLOOR).unwrap();
        for i in 1..grid.len() - 1 {
            if d.dense[i - 1] && d.dense[i] && d.dense[i + 1] {
                assert!((d.velocity[i] - k).abs() < 1e-8, "i={i} v={}", d.velocity[i]);
            }
        }
    }

    #[test]
    fn gaussian_quantum_potential() {
        let grid = Grid::new(-8.0, 8.0, 3201).unwrap();
        let (q, sigma) = (0.5, 1.1);
        let f = gaussian_with_momentum(grid, q, sigma, 0.0);
        let d = decompose(&f, &params(0.0), DEFAULT_RHO_FLOOR).unwrap();
        let dx = grid.dx();
        for i in 1..grid.len() - 1 {
            let u = grid.x(i) - q;
            if d.dense[i] && u.abs() < 3.0 {
                let exact = -0.5 * (u * u / (sigma * sigma) - 1.0 / sigma);
                assert!((d.quantum_potential[i] - exact).abs() < 2.0 * dx * dx, "i={i}");
            }
        }
    }

    #[test]
    fn gp_potential_at_peak() {
        let grid = Grid::new(-3.0, 3.0, 601).unwrap();
        let sigma = 1.0 / PI;
        let f = gaussian_with_momentum(grid, 0.0, sigma, 0.0);
        let d = decompose(&f, &params(2.0), DEFAULT_RHO_FLOOR).unwrap();
        assert!((d.gp_potential[300] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn recompose_reconstructs() {
        let grid = Grid::new(-6.0, 6.0, 513).unwrap();
        let f = gaussian_with_momentum(grid, -0.3, 0.8, 5.0);
        let d = decompose(&f, &params(0.0), DEFAULT_RHO_FLOOR).unwrap();
        let r = d.recompose();
        for i in 0..grid.len() {
            if d.dense[i] {
                let z = f.values()[i];
                assert!((r.values()[i] - z).norm() <= 1e-12 * z.norm());
            }
        }
    }

    #[test]
    fn density_and_amplitude_paths_agree() {
        let grid = Grid::new(-6.0, 6.0, 601).unwrap();
        let f = gaussian_with_momentum(grid, 0.2, 0.9, 1.5);
        let d = decompose(&f, &params(0.0), DEFAULT_RHO_FLOOR).unwrap();
        let via_phi = quantum_potential_from_amplitude(&f, &d.dense, &params(0.0));
        for (a, b) in d.quantum_potential.iter().zip(&via_phi) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn zero_field_is_degenerate() {
        let grid = Grid::new(-1.0, 1.0, 16).unwrap();
        let z = ComplexField::zeros(grid);
        assert_eq!(decompose(&z, &params(0.0), 1e-8), Err(Error::DegenerateField));
        assert_eq!(hamilton_jacobi_residual(&z, &[0.0; 16], &params(0.0), 1.0), Err(Error::DegenerateField));
    }

    #[test]
    fn grid_mismatch_rejected() {
        let a = gaussian_with_momentum(Grid::new(-5.0, 5.0, 64).unwrap(), 0.0, 1.0, 0.0);
        let b = gaussian_with_momentum(Grid::new(-5.0, 5.0, 65).unwrap(), 0.0, 1.0, 0.0);
        assert!(matches!(continuity_residual(&a, &b, 0.1, &params(0.0)), Err(Error::GridMismatch(_))));
        assert!(matches!(euler_residual(&a, &b, 0.1, &params(0.0), 1.0), Err(Error::GridMismatch(_))));
        assert!(matches!(hamilton_jacobi_residual(&a, &[0.0; 3], &params(0.0), 1.0), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn doubled_amplitude_violates_continuity() {
        let grid = Grid::new(-6.0, 6.0, 601).unwrap();
        let f = gaussian_with_momentum(grid, 0.0, 1.0, 0.0);
        let g = f.scale(Complex64::new(2.0, 0.0));
        let dt = 1e-2;
        let r = continuity_residual(&f, &g, dt, &params(0.0)).unwrap();
        let expected = 3.0 * (PI).powf(-0.5) / dt;
        assert!((r.values[300] - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn stationary_frames_are_dt_independent() {
        let grid = Grid::new(-8.0, 8.0, 2401).unwrap();
        let f = gaussian_with_momentum(grid, 0.0, 1.0, 0.0);
        let p = params(0.0);
        let c1 = continuity_residual(&f, &f, 1e-3, &p).unwrap();
        let c2 = continuity_residual(&f, &f, 0.5, &p).unwrap();
        assert_eq!(c1.max_abs(), 0.0);
        assert_eq!(c2.max_abs(), 0.0);
        let e1 = euler_residual(&f, &f, 1e-3, &p, 1.0).unwrap();
        let e2 = euler_residual(&f, &f, 0.5, &p, 1.0).unwrap();
        assert_eq!(e1.values, e2.values);
        let dsdt = vec![-0.5; grid.len()];
        let h = hamilton_jacobi_residual(&f, &dsdt, &p, 1.0).unwrap();
        assert!(h.max_abs() < 1e-3, "{}", h.max_abs());
    }

    #[test]
    fn phase_kick_shows_in_euler_residual() {
        let grid = Grid::new(-8.0, 8.0, 801).unwrap();
        let f = gaussian_with_momentum(grid, 0.0, 1.0, 0.0);
        let p = params(0.0);
        let dt = 1e-2;
        let kicked = |alpha: f64| {
            ComplexField::from_fn(grid, |x| {
                f.values()[grid_index(&grid, x)] * Complex64::from_polar(1.0, alpha * x * x)
            })
            .unwrap()
        };
        let base = euler_residual(&f, &f, dt, &p, 1.0).unwrap().max_abs();
        let r1 = euler_residual(&f, &kicked(0.01), dt, &p, 1.0).unwrap().max_abs();
        let r2 = euler_residual(&f, &kicked(0.02), dt, &p, 1.0).unwrap().max_abs();
        assert!(r1 > 100.0 * base.max(1e-6));
        assert!((r2 / r1 - 2.0).abs() < 0.1, "{}", r2 / r1);
    }

    fn grid_index(grid: &Grid, x: f64) -> usize {
        ((x - grid.x_min()) / grid.dx()).round() as usize
    }
}
