//! Semiclassical Gaussian packet: centre q(t), width sigma(t) and the
//! accumulated action phase, plus evaluation of the packet wavefunction.
//!
//! The density entering the width equation and the phase integrand is the
//! packet density at its centre, `(pi sigma)^(-1/2)`, which keeps the
//! system autonomous in (sigma, t) and the phase independent of x.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};
use crate::ode::{self, OdeSolution, OdeSystem, StepControl};
use crate::params::PhysParams;
use crate::trap::TrapProfile;

/// q(0), q'(0), sigma(0), sigma'(0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialConditions {
    pub x0: f64,
    pub v0: f64,
    pub a0: f64,
    pub b0: f64,
}

impl InitialConditions {
    pub fn new(x0: f64, v0: f64, a0: f64, b0: f64) -> Result<Self> {
        let ic = Self { x0, v0, a0, b0 };
        ic.validate()?;
        Ok(ic)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("ic.x0", self.x0), ("ic.v0", self.v0), ("ic.a0", self.a0), ("ic.b0", self.b0)] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if self.a0 <= 0.0 {
            return Err(Error::param("ic.a0", format!("initial width must be > 0, got {}", self.a0)));
        }
        Ok(())
    }

    pub fn initial_state(&self) -> PacketState {
        PacketState { t: 0.0, q: self.x0, qdot: self.v0, sigma: self.a0, sigmadot: self.b0, action: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketState {
    pub t: f64,
    pub q: f64,
    pub qdot: f64,
    pub sigma: f64,
    pub sigmadot: f64,
    /// Time integral of the phase integrand, in units of action.
    pub action: f64,
}

impl PacketState {
    fn from_vec(t: f64, y: &[f64; 5]) -> Self {
        Self { t, q: y[0], qdot: y[1], sigma: y[2], sigmadot: y[3], action: y[4] }
    }

    fn to_vec(self) -> [f64; 5] {
        [self.q, self.qdot, self.sigma, self.sigmadot, self.action]
    }
}

/// Time derivatives of (q, q', sigma, sigma', action).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketRates {
    pub qdot: f64,
    pub qddot: f64,
    pub sigmadot: f64,
    pub sigmaddot: f64,
    pub action_rate: f64,
}

/// Packet density at its own centre.
#[inline]
pub fn center_density(sigma: f64) -> f64 {
    (PI * sigma).powf(-0.5)
}

#[inline]
fn rates(t: f64, y: &[f64; 5], params: &PhysParams, profile: &TrapProfile) -> Result<[f64; 5]> {
    let [q, qdot, sigma, sigmadot, _] = *y;
    if !(sigma > 0.0) {
        return Err(Error::NonPositiveSigma { t });
    }
    let (m, hbar, g) = (params.m(), params.hbar(), params.g());
    let w = profile.omega_unchecked(t);
    let w2 = w * w;
    let rho_c = center_density(sigma);
    let sigmaddot = sigmadot * sigmadot / (2.0 * sigma) - 2.0 * sigma * w2 - 4.0 * g * rho_c / m
        + 2.0 * hbar * hbar / (m * m * sigma);
    let action_rate = 0.5 * m * qdot * qdot - 0.5 * m * w2 * q * q - hbar * hbar / (2.0 * m * sigma) - g * rho_c;
    Ok([qdot, -w2 * q, sigmadot, sigmaddot, action_rate])
}

pub fn packet_rhs(s: &PacketState, params: &PhysParams, profile: &TrapProfile) -> Result<PacketRates> {
    let [qdot, qddot, sigmadot, sigmaddot, action_rate] = rates(s.t, &s.to_vec(), params, profile)?;
    Ok(PacketRates { qdot, qddot, sigmadot, sigmaddot, action_rate })
}

/// Width at which the width equation is in equilibrium for a fixed trap
/// frequency.
pub fn stationary_sigma(params: &PhysParams, omega: f64) -> Result<f64> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::param("omega", format!("must be > 0, got {omega}")));
    }
    let (m, hbar, g) = (params.m(), params.hbar(), params.g());
    let natural = hbar / (m * omega);
    if g == 0.0 {
        return Ok(natural);
    }
    // balance(sigma) = omega^2 + 2 g rho_c / (m sigma) - hbar^2 / (m^2 sigma^2)
    let balance = |s: f64| omega * omega + 2.0 * g * center_density(s) / (m * s) - hbar * hbar / (m * m * s * s);
    let mut lo = natural * 1e-12;
    let mut hi = natural * 8.0;
    let (f_lo, f_hi) = (balance(lo), balance(hi));
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(Error::NoRootInBracket { lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if balance(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

struct PacketOde<'a> {
    params: &'a PhysParams,
    profile: &'a TrapProfile,
}

impl OdeSystem<5> for PacketOde<'_> {
    #[inline]
    fn rhs(&self, t: f64, y: &[f64; 5]) -> Result<[f64; 5]> {
        rates(t, y, self.params, self.profile)
    }

    fn admissible(&self, y: &[f64; 5]) -> bool {
        y[2] > 0.0
    }

    fn domain_error(&self, t: f64) -> Error {
        Error::NonPositiveSigma { t }
    }
}

/// Accepted steps of a packet integration with dense output.
#[derive(Debug, Clone)]
pub struct PacketTrajectory {
    ic: InitialConditions,
    solution: OdeSolution<5>,
}

impl PacketTrajectory {
    pub fn initial_conditions(&self) -> &InitialConditions {
        &self.ic
    }

    pub fn t_end(&self) -> f64 {
        self.solution.t_end()
    }

    pub fn len(&self) -> usize {
        self.solution.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solution.ts.is_empty()
    }

    pub fn rejected_steps(&self) -> usize {
        self.solution.rejected
    }

    /// States at the accepted steps, starting with the initial state.
    pub fn states(&self) -> impl Iterator<Item = PacketState> + '_ {
        self.solution.ts.iter().zip(&self.solution.ys).map(|(&t, y)| PacketState::from_vec(t, y))
    }

    pub fn final_state(&self) -> PacketState {
        PacketState::from_vec(self.solution.t_end(), self.solution.last())
    }

    pub fn state_at(&self, t: f64) -> Result<PacketState> {
        Ok(PacketState::from_vec(t, &self.solution.eval(t)?))
    }
}

/// Adaptive RK45 integration of the packet system from t = 0.
pub fn evolve_packet(
    ic: &InitialConditions,
    params: &PhysParams,
    profile: &TrapProfile,
    t_final: f64,
    tol: f64,
) -> Result<PacketTrajectory> {
    ic.validate()?;
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(Error::param("t_final", format!("must be > 0, got {t_final}")));
    }
    if !(1e-13..=1e-3).contains(&tol) {
        return Err(Error::param("tol", format!("must lie in [1e-13, 1e-3], got {tol}")));
    }
    profile.validate_horizon(t_final)?;
    let sys = PacketOde { params, profile };
    let solution = ode::integrate(&sys, 0.0, ic.initial_state().to_vec(), t_final, &StepControl::with_rtol(tol))?;
    Ok(PacketTrajectory { ic: *ic, solution })
}

/// Modulus and phase pieces of the packet at `x`, without the constant
/// `m v0 x0 / hbar` phase. `quadratic` is the complex coefficient of (x-q)^2.
#[inline]
pub(crate) fn packet_envelope(s: &PacketState, x: f64, params: &PhysParams, quadratic: Complex64) -> Complex64 {
    let (m, hbar) = (params.m(), params.hbar());
    let u = x - s.q;
    let exponent = quadratic * (u * u) + Complex64::new(0.0, (m * s.qdot * u + s.action) / hbar);
    exponent.exp()
}

/// Coefficient of (x-q)^2 in the packet exponent.
#[inline]
pub(crate) fn quadratic_coefficient(s: &PacketState, params: &PhysParams) -> Complex64 {
    Complex64::new(-1.0 / (2.0 * s.sigma), params.m() * s.sigmadot / (4.0 * params.hbar() * s.sigma))
}

/// Packet wavefunction at a single point for a given state.
pub fn psi_at(s: &PacketState, x: f64, ic: &InitialConditions, params: &PhysParams) -> Complex64 {
    let amplitude = (PI * s.sigma).powf(-0.25);
    let constant_phase = Complex64::from_polar(1.0, params.m() * ic.v0 * ic.x0 / params.hbar());
    amplitude * constant_phase * packet_envelope(s, x, params, quadratic_coefficient(s, params))
}

/// Samples the packet wavefunction on `grid` at a given state.
pub fn psi_from_state(s: &PacketState, grid: &Grid, ic: &InitialConditions, params: &PhysParams) -> ComplexField {
    let values: Vec<Complex64> = (0..grid.len()).into_par_iter().map(|i| psi_at(s, grid.x(i), ic, params)).collect();
    ComplexField::new(*grid, values).expect("packet samples are finite")
}

/// Samples the packet wavefunction at time `t` on `grid`.
pub fn eval_psi(
    traj: &PacketTrajectory,
    t: f64,
    grid: &Grid,
    ic: &InitialConditions,
    params: &PhysParams,
) -> Result<ComplexField> {
    let s = traj.state_at(t)?;
    let values: Vec<Complex64> = (0..grid.len()).into_par_iter().map(|i| psi_at(&s, grid.x(i), ic, params)).collect();
    ComplexField::new(*grid, values)
}

/// Density with the `(1 + u^2/sigma)` factor, as the closed form is
/// usually quoted alongside the packet. It integrates to 3/2, not 1.
pub fn eval_rho_printed(s: &PacketState, x: f64) -> f64 {
    let u2 = (x - s.q).powi(2) / s.sigma;
    center_density(s.sigma) * (-u2).exp() * (1.0 + u2)
}

/// Mean spacing between successive maxima of sigma(t), located from the
/// dense output as downward zero crossings of sigma'.
pub fn sigma_period(traj: &PacketTrajectory, samples_per_unit: usize) -> Option<f64> {
    let t_end = traj.t_end();
    let n = ((t_end * samples_per_unit as f64).ceil() as usize).max(16);
    let sdot = |t: f64| traj.state_at(t).map(|s| s.sigmadot).unwrap_or(f64::NAN);
    let mut peaks = Vec::new();
    let mut t_prev = 0.0;
    let mut f_prev = sdot(0.0);
    for i in 1..=n {
        let t = t_end * i as f64 / n as f64;
        let f = sdot(t);
        if f_prev > 0.0 && f <= 0.0 {
            let (mut lo, mut hi) = (t_prev, t);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if sdot(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            peaks.push(0.5 * (lo + hi));
        }
        t_prev = t;
        f_prev = f;
    }
    if peaks.len() < 2 {
        return None;
    }
    Some((peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn natural() -> PhysParams {
        PhysParams::natural(0.0).unwrap()
    }

    fn state(q: f64, qdot: f64, sigma: f64, sigmadot: f64) -> PacketState {
        PacketState { t: 0.0, q, qdot, sigma, sigmadot, action: 0.0 }
    }

    #[test]
    fn rhs_matches_hand_values() {
        let p = natural();
        let w2 = TrapProfile::constant(2.0).unwrap();
        for sigma in [0.3, 1.0, 5.0] {
            assert_eq!(packet_rhs(&state(1.0, 0.0, sigma, 0.1), &p, &w2).unwrap().qddot, -4.0);
        }
        let w1 = TrapProfile::constant(1.0).unwrap();
        assert_eq!(packet_rhs(&state(0.0, 0.0, 1.0, 0.0), &p, &w1).unwrap().sigmaddot, 0.0);
        assert_eq!(packet_rhs(&state(0.0, 0.0, 2.0, 0.0), &p, &w1).unwrap().sigmaddot, -3.0);
    }

    #[test]
    fn rhs_rejects_non_positive_sigma() {
        let w1 = TrapProfile::constant(1.0).unwrap();
        assert!(matches!(packet_rhs(&state(0.0, 0.0, 0.0, 0.0), &natural(), &w1), Err(Error::NonPositiveSigma { .. })));
    }

    #[test]
    fn stationary_sigma_values() {
        assert_eq!(stationary_sigma(&natural(), 1.0).unwrap(), 1.0);
        let p = PhysParams::new(1.0, 2.0, 0.0).unwrap();
        assert_eq!(stationary_sigma(&p, 4.0).unwrap(), 0.5);
        // root of 1 + s^(-3/2)/sqrt(pi) = s^(-2), found independently by
        // high-precision bisection
        let s = stationary_sigma(&PhysParams::natural(0.5).unwrap(), 1.0).unwrap();
        assert!((s - 0.721_617_504_470_741_4).abs() < 1e-12, "{s}");
        assert!(stationary_sigma(&natural(), 0.0).is_err());
    }

    #[test]
    fn strongly_attractive_has_no_equilibrium() {
        let p = PhysParams::natural(-50.0).unwrap();
        assert!(matches!(stationary_sigma(&p, 1.0), Err(Error::NoRootInBracket { .. })));
    }

    #[test]
    fn evolve_validates_inputs() {
        let w1 = TrapProfile::constant(1.0).unwrap();
        let ic = InitialConditions::new(0.0, 0.0, 1.0, 0.0).unwrap();
        assert!(evolve_packet(&ic, &natural(), &w1, 1.0, 1e-2).is_err());
        assert!(evolve_packet(&ic, &natural(), &w1, 1.0, 1e-14).is_err());
        assert!(evolve_packet(&ic, &natural(), &w1, 0.0, 1e-8).is_err());
        assert!(InitialConditions::new(0.0, 0.0, 0.0, 0.0).is_err());
        let ramp = TrapProfile::linear_ramp(1.0, -1.0).unwrap();
        assert!(evolve_packet(&ic, &natural(), &ramp, 2.0, 1e-8).is_err());
    }

    #[test]
    fn width_never_collapses() {
        // 2 hbar^2/(m^2 sigma) dominates any density term as sigma -> 0
        let w1 = TrapProfile::constant(1.0).unwrap();
        let ic = InitialConditions::new(0.0, 0.0, 1.0, -3.0).unwrap();
        for g in [-20.0, 20.0] {
            let p = PhysParams::natural(g).unwrap();
            let traj = evolve_packet(&ic, &p, &w1, 5.0, 1e-8).unwrap();
            assert!(traj.states().all(|s| s.sigma > 0.0));
        }
    }

    #[test]
    fn rho_printed_pointwise() {
        let s = state(0.5, 0.0, 2.0, 0.0);
        assert_eq!(eval_rho_printed(&s, 0.5), (PI * 2.0).powf(-0.5));
        let x = 0.5 + 2.0_f64.sqrt();
        let expected = (PI * 2.0).powf(-0.5) * 2.0 / std::f64::consts::E;
        assert!((eval_rho_printed(&s, x) - expected).abs() < 1e-15);
    }

    #[test]
    fn psi_modulus_at_centre() {
        let ic = InitialConditions::new(0.3, -0.7, 1.4, 0.2).unwrap();
        let w1 = TrapProfile::constant(1.0).unwrap();
        let traj = evolve_packet(&ic, &natural(), &w1, 2.0, 1e-10).unwrap();
        let s = traj.state_at(1.3).unwrap();
        let z = psi_at(&s, s.q, &ic, &natural());
        assert!((z.norm() - (PI * s.sigma).powf(-0.25)).abs() < 1e-14);
    }
}
