//! Strang split-step Fourier integrator for the 1D Gross-Pitaevskii
//! equation on a periodic grid. Used as the reference for every comparison.
//!
//! The `n` grid points are treated as one period of length `n * dx`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};
use crate::params::PhysParams;
use crate::trap::TrapProfile;

/// Relative boundary modulus above which a run is aborted.
pub const BOUNDARY_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitStepConfig {
    pub grid: Grid,
    pub dt: f64,
    pub steps_per_output: usize,
}

impl SplitStepConfig {
    pub fn new(grid: Grid, dt: f64) -> Result<Self> {
        let cfg = Self { grid, dt, steps_per_output: 1 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.grid.len().is_power_of_two() {
            return Err(Error::param("split.n", format!("must be a power of two, got {}", self.grid.len())));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("split.dt", format!("must be > 0, got {}", self.dt)));
        }
        if self.steps_per_output == 0 {
            return Err(Error::param("split.steps_per_output", "must be >= 1"));
        }
        Ok(())
    }

    /// Period of the box, `n * dx`.
    pub fn period(&self) -> f64 {
        self.grid.len() as f64 * self.grid.dx()
    }

    /// Whether the box spans at least 16 sqrt(sigma).
    pub fn fits_packet(&self, sigma: f64) -> bool {
        self.period() >= 16.0 * sigma.sqrt()
    }
}

/// Angular wavenumbers in FFT order.
pub fn wavenumbers(n: usize, dx: f64) -> Vec<f64> {
    let dk = 2.0 * PI / (n as f64 * dx);
    (0..n).map(|j| if j < n / 2 { j as f64 * dk } else { (j as f64 - n as f64) * dk }).collect()
}

struct Stepper {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    k2: Vec<f64>,
    xs: Vec<f64>,
}

impl Stepper {
    fn new(grid: &Grid) -> Self {
        let n = grid.len();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        let k2 = wavenumbers(n, grid.dx()).into_iter().map(|k| k * k).collect();
        Self { forward, inverse, scratch: vec![Complex64::new(0.0, 0.0); scratch_len], k2, xs: grid.points().collect() }
    }

    fn potential_half_step(&self, psi: &mut [Complex64], params: &PhysParams, omega: f64, half_dt: f64) {
        let (m, hbar, g) = (params.m(), params.hbar(), params.g());
        let trap = 0.5 * m * omega * omega;
        for (z, &x) in psi.iter_mut().zip(&self.xs) {
            let v = trap * x * x + g * z.norm_sqr();
            *z *= Complex64::from_polar(1.0, -v * half_dt / hbar);
        }
    }

    fn kinetic_step(&mut self, psi: &mut [Complex64], phases: &[Complex64]) {
        self.forward.process_with_scratch(psi, &mut self.scratch);
        let norm = 1.0 / psi.len() as f64;
        for (z, p) in psi.iter_mut().zip(phases) {
            *z *= p * norm;
        }
        self.inverse.process_with_scratch(psi, &mut self.scratch);
    }

    fn kinetic_phases(&self, params: &PhysParams, dt: f64) -> Vec<Complex64> {
        let c = params.hbar() * dt / (2.0 * params.m());
        self.k2.iter().map(|k2| Complex64::from_polar(1.0, -c * k2)).collect()
    }
}

fn boundary_ratio(psi: &[Complex64]) -> f64 {
    let peak = psi.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max).sqrt();
    if peak == 0.0 {
        return 0.0;
    }
    psi[0].norm().max(psi[psi.len() - 1].norm()) / peak
}

/// Evolves `psi0` from t = 0 through each of `times` (ascending, > 0),
/// returning one snapshot per requested time. Steps never exceed
/// `cfg.dt`; each segment is split into equal steps landing on its end.
pub fn split_step_snapshots(
    psi0: &ComplexField,
    cfg: &SplitStepConfig,
    params: &PhysParams,
    profile: &TrapProfile,
    times: &[f64],
) -> Result<Vec<ComplexField>> {
    check_times(times)?;
    if let Some(&t_max) = times.last() {
        profile.validate_horizon(t_max)?;
    }
    run(psi0, cfg, params, |t| profile.omega_unchecked(t), times)
}

/// As [`split_step_snapshots`] with no trap (omega = 0).
pub fn split_step_free_snapshots(
    psi0: &ComplexField,
    cfg: &SplitStepConfig,
    params: &PhysParams,
    times: &[f64],
) -> Result<Vec<ComplexField>> {
    check_times(times)?;
    run(psi0, cfg, params, |_| 0.0, times)
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("times", "output times must be finite, non-negative and ascending"));
    }
    Ok(())
}

fn run(
    psi0: &ComplexField,
    cfg: &SplitStepConfig,
    params: &PhysParams,
    omega_at: impl Fn(f64) -> f64,
    times: &[f64],
) -> Result<Vec<ComplexField>> {
    cfg.validate()?;
    cfg.grid.check_same(psi0.grid())?;
    let mut stepper = Stepper::new(&cfg.grid);
    let mut psi = psi0.values().to_vec();
    let ratio = boundary_ratio(&psi);
    if ratio > BOUNDARY_LIMIT {
        return Err(Error::BoundaryMass { t: 0.0, ratio, limit: BOUNDARY_LIMIT });
    }

    let mut out = Vec::with_capacity(times.len());
    let mut t = 0.0;
    for &t_out in times {
        let span = t_out - t;
        if span > 0.0 {
            let n_steps = (span / cfg.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let h = span / n_steps as f64;
            let phases = stepper.kinetic_phases(params, h);
            for step in 0..n_steps {
                let t0 = t + step as f64 * h;
                let omega = omega_at(t0 + 0.5 * h);
                stepper.potential_half_step(&mut psi, params, omega, 0.5 * h);
                stepper.kinetic_step(&mut psi, &phases);
                stepper.potential_half_step(&mut psi, params, omega, 0.5 * h);
                let ratio = boundary_ratio(&psi);
                if ratio > BOUNDARY_LIMIT {
                    return Err(Error::BoundaryMass { t: t0 + h, ratio, limit: BOUNDARY_LIMIT });
                }
            }
        }
        t = t_out;
        out.push(ComplexField::new(cfg.grid, psi.clone())?);
    }
    Ok(out)
}

/// Evolves `psi0` to `t_final`.
pub fn split_step_evolve(
    psi0: &ComplexField,
    cfg: &SplitStepConfig,
    params: &PhysParams,
    profile: &TrapProfile,
    t_final: f64,
) -> Result<ComplexField> {
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(Error::param("t_final", format!("must be > 0, got {t_final}")));
    }
    let mut snaps = split_step_snapshots(psi0, cfg, params, profile, &[t_final])?;
    Ok(snaps.pop().expect("one snapshot requested"))
}

/// Gross-Pitaevskii energy functional, with the kinetic term evaluated
/// spectrally on the periodic grid.
pub fn gp_energy(psi: &ComplexField, params: &PhysParams, omega: f64) -> f64 {
    let grid = psi.grid();
    let n = grid.len();
    let dx = grid.dx();
    let mut buf = psi.values().to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let k = wavenumbers(n, dx);
    // Parseval: sum |psi_x|^2 dx = (dx / n) sum |k psi_k|^2
    let kinetic: f64 = buf.iter().zip(&k).map(|(z, k)| k * k * z.norm_sqr()).sum::<f64>() * dx / n as f64;
    let (m, hbar, g) = (params.m(), params.hbar(), params.g());
    let potential: f64 = psi
        .values()
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let x = grid.x(i);
            let rho = z.norm_sqr();
            0.5 * m * omega * omega * x * x * rho + 0.5 * g * rho * rho
        })
        .sum::<f64>()
        * dx;
    hbar * hbar / (2.0 * m) * kinetic + potential
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: Grid, x0: f64, sigma: f64) -> ComplexField {
        ComplexField::from_fn(grid, |x| {
            Complex64::new((PI * sigma).powf(-0.25) * (-(x - x0).powi(2) / (2.0 * sigma)).exp(), 0.0)
        })
        .unwrap()
    }

    #[test]
    fn config_validation() {
        let g = Grid::new(-10.0, 10.0, 100).unwrap();
        assert!(SplitStepConfig::new(g, 1e-3).is_err());
        let g = Grid::new(-10.0, 10.0, 128).unwrap();
        assert!(SplitStepConfig::new(g, 0.0).is_err());
        let cfg = SplitStepConfig::new(g, 1e-3).unwrap();
        assert!(cfg.fits_packet(1.0));
        assert!(!cfg.fits_packet(2.0));
    }

    #[test]
    fn wavenumber_layout() {
        let k = wavenumbers(8, 0.5);
        let dk = 2.0 * PI / 4.0;
        assert_eq!(k[1], dk);
        assert_eq!(k[4], -4.0 * dk);
        assert_eq!(k[7], -dk);
    }

    #[test]
    fn boundary_mass_is_detected() {
        let grid = Grid::new(-4.0, 4.0, 128).unwrap();
        let psi = gaussian(grid, 3.0, 1.0);
        let p = PhysParams::natural(0.0).unwrap();
        let cfg = SplitStepConfig::new(grid, 1e-3).unwrap();
        let w = TrapProfile::constant(1.0).unwrap();
        assert!(matches!(split_step_evolve(&psi, &cfg, &p, &w, 0.1), Err(Error::BoundaryMass { .. })));
    }

    #[test]
    fn zero_field_stays_zero() {
        let grid = Grid::new(-8.0, 8.0, 64).unwrap();
        let cfg = SplitStepConfig::new(grid, 1e-2).unwrap();
        let p = PhysParams::natural(1.0).unwrap();
        let w = TrapProfile::constant(1.0).unwrap();
        let out = split_step_evolve(&ComplexField::zeros(grid), &cfg, &p, &w, 0.5).unwrap();
        assert_eq!(out.max_abs(), 0.0);
    }
}
