//! Propagator assembled from a one-parameter family of packet solutions.
//!
//! For a column x0 the family is the set of packets launched from
//! (x0, v0, a0, b0) for every velocity node v0. The kernel is
//!
//! K(x, x0; t) = m/(2 pi hbar) ∫ dv0 Phi(v0, x, t) Phi*(v0, x0, 0),
//!
//! where Phi is the packet rescaled to unit modulus at its own centre at
//! t = 0. The constant phase m v0 x0 / hbar of the packet cancels against
//! Phi*(v0, x0, 0), so only the envelope is evaluated.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};
use crate::packet::{evolve_packet, packet_envelope, quadratic_coefficient, InitialConditions, PacketState};
use crate::params::PhysParams;
use crate::quadrature::{QuadratureRule, QuadratureSpec};
use crate::trap::TrapProfile;

/// Input modulus at the boundary (relative to peak) above which
/// propagation logs a warning.
pub const BOUNDARY_WARN: f64 = 1e-10;

/// Number of probe rows/columns used for the convergence estimate.
pub const META_PROBES: usize = 8;

/// Exponent coefficients used in the kernel integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelForm {
    /// Coefficients of the packet itself: i m sigma'/(4 hbar sigma) - 1/(2 sigma).
    #[default]
    Derived,
    /// Coefficients as printed in the closed-form kernel:
    /// i m sigma'/(2 hbar sigma) - 1/(4 sigma^2). Kept for comparison runs.
    Printed,
}

impl KernelForm {
    pub fn as_str(&self) -> &'static str {
        match self {
            KernelForm::Derived => "derived",
            KernelForm::Printed => "printed",
        }
    }

    pub fn code(&self) -> u64 {
        match self {
            KernelForm::Derived => 0,
            KernelForm::Printed => 1,
        }
    }

    pub fn from_code(code: u64) -> Option<Self> {
        match code {
            0 => Some(KernelForm::Derived),
            1 => Some(KernelForm::Printed),
            _ => None,
        }
    }
}

impl std::str::FromStr for KernelForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "derived" => Ok(KernelForm::Derived),
            "printed" => Ok(KernelForm::Printed),
            other => Err(Error::param("kernel.form", format!("expected `derived` or `printed`, got `{other}`"))),
        }
    }
}

/// Shape of the packet family: initial width and width rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyShape {
    pub a0: f64,
    pub b0: f64,
}

impl FamilyShape {
    pub fn new(a0: f64, b0: f64) -> Result<Self> {
        if !(a0.is_finite() && a0 > 0.0) {
            return Err(Error::param("kernel.a0", format!("must be > 0, got {a0}")));
        }
        if !b0.is_finite() {
            return Err(Error::param("kernel.b0", "must be finite"));
        }
        Ok(Self { a0, b0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOptions {
    pub form: KernelForm,
    /// Relative tolerance of each packet integration.
    pub ode_tol: f64,
    /// Fail with `QuadratureDivergence` when the estimate exceeds this.
    pub meta_threshold: Option<f64>,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self { form: KernelForm::Derived, ode_tol: 1e-10, meta_threshold: None }
    }
}

/// Evolved packet states for every velocity node of one column.
#[derive(Debug, Clone)]
pub struct PacketFamily {
    x0: f64,
    sigma0: f64,
    weights: Vec<f64>,
    states: Vec<PacketState>,
}

impl PacketFamily {
    pub fn evolve(
        x0: f64,
        t: f64,
        rule: &QuadratureRule,
        shape: FamilyShape,
        params: &PhysParams,
        profile: &TrapProfile,
        ode_tol: f64,
    ) -> Result<Self> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::param("t", format!("must be >= 0, got {t}")));
        }
        let states = rule
            .nodes
            .iter()
            .map(|&v0| {
                let ic = InitialConditions::new(x0, v0, shape.a0, shape.b0)?;
                if t == 0.0 {
                    Ok(ic.initial_state())
                } else {
                    Ok(evolve_packet(&ic, params, profile, t, ode_tol)?.final_state())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { x0, sigma0: shape.a0, weights: rule.weights.clone(), states })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn states(&self) -> &[PacketState] {
        &self.states
    }

    /// Phi(v0, x, t) without the constant phase, for node `k`.
    #[inline]
    fn phi(&self, k: usize, x: f64, params: &PhysParams, form: KernelForm) -> Complex64 {
        let s = &self.states[k];
        (self.sigma0 / s.sigma).powf(0.25) * packet_envelope(s, x, params, form_coefficient(s, params, form))
    }

    /// Per-node factors of the kernel integrand, with the quadrature
    /// weight and the m/(2 pi hbar) prefactor folded in.
    fn terms(&self, params: &PhysParams, form: KernelForm) -> Vec<NodeTerm> {
        let (m, hbar) = (params.m(), params.hbar());
        let pre = m / (2.0 * PI * hbar);
        self.states
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| NodeTerm {
                scale: pre * w * (self.sigma0 / s.sigma).powf(0.25),
                q: s.q,
                quadratic: form_coefficient(s, params, form),
                wavenumber: m * s.qdot / hbar,
                phase: s.action / hbar,
            })
            .collect()
    }

    /// K(x, x0; t) for this family's x0.
    pub fn kernel_at(&self, x: f64, params: &PhysParams, form: KernelForm) -> Complex64 {
        sum_terms(&self.terms(params, form), x)
    }
}

#[inline]
fn form_coefficient(s: &PacketState, params: &PhysParams, form: KernelForm) -> Complex64 {
    match form {
        KernelForm::Derived => quadratic_coefficient(s, params),
        KernelForm::Printed => {
            Complex64::new(-1.0 / (4.0 * s.sigma * s.sigma), params.m() * s.sigmadot / (2.0 * params.hbar() * s.sigma))
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct NodeTerm {
    scale: f64,
    q: f64,
    quadratic: Complex64,
    wavenumber: f64,
    phase: f64,
}

/// Fixed-order sum over nodes of the kernel integrand at `x`.
#[inline]
fn sum_terms(terms: &[NodeTerm], x: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for t in terms {
        let u = x - t.q;
        let log_mod = t.quadratic.re * u * u;
        // below exp's underflow threshold the term is exactly zero
        if log_mod < -745.0 {
            continue;
        }
        let arg = t.quadratic.im * u * u + t.wavenumber * u + t.phase;
        acc += Complex64::from_polar(t.scale * log_mod.exp(), arg);
    }
    acc
}

/// One kernel value.
#[allow(clippy::too_many_arguments)]
pub fn kernel_eval(
    x: f64,
    x0: f64,
    t: f64,
    quad: &QuadratureSpec,
    shape: FamilyShape,
    params: &PhysParams,
    profile: &TrapProfile,
    opts: &KernelOptions,
) -> Result<Complex64> {
    quad.validate()?;
    if !(t > 0.0) {
        return Err(Error::param("t", format!("kernel needs t > 0, got {t}")));
    }
    let family = PacketFamily::evolve(x0, t, &quad.build(), shape, params, profile, opts.ode_tol)?;
    Ok(family.kernel_at(x, params, opts.form))
}

/// Sampled kernel K[i][j] = K(x_i, x0_j; t), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub t: f64,
    pub x_grid: Grid,
    pub x0_grid: Grid,
    pub quad: QuadratureSpec,
    pub form: KernelForm,
    /// Max-abs change on the probe submatrix when the node count is halved.
    pub meta: f64,
    pub entries: Vec<Complex64>,
}

impl KernelMatrix {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.x0_grid.len() + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max |K(x, x0) - K(-x, -x0)|; `None` unless both grids are symmetric.
    pub fn parity_defect(&self) -> Option<f64> {
        if !(self.x_grid.is_symmetric() && self.x0_grid.is_symmetric()) {
            return None;
        }
        let (nx, n0) = (self.x_grid.len(), self.x0_grid.len());
        let mut worst = 0.0_f64;
        for i in 0..nx {
            for j in 0..n0 {
                worst = worst.max((self.get(i, j) - self.get(nx - 1 - i, n0 - 1 - j)).norm());
            }
        }
        Some(worst)
    }

    /// Trapezoid-weighted L2 distance between two kernels on the same grids.
    pub fn l2_distance(&self, other: &KernelMatrix) -> Result<f64> {
        self.x_grid.check_same(&other.x_grid)?;
        self.x0_grid.check_same(&other.x0_grid)?;
        let n0 = self.x0_grid.len();
        let mut acc = 0.0;
        for (idx, (a, b)) in self.entries.iter().zip(&other.entries).enumerate() {
            let (i, j) = (idx / n0, idx % n0);
            acc += self.x_grid.weight(i) * self.x0_grid.weight(j) * (a - b).norm_sqr();
        }
        Ok(acc.sqrt())
    }
}

fn probe_indices(n: usize) -> Vec<usize> {
    if n <= META_PROBES {
        return (0..n).collect();
    }
    (0..META_PROBES).map(|p| p * (n - 1) / (META_PROBES - 1)).collect()
}

/// Assembles the kernel on `x_grid` x `x0_grid`. Each column has its own
/// packet family; columns are computed in parallel.
#[allow(clippy::too_many_arguments)]
pub fn build_kernel(
    x_grid: &Grid,
    x0_grid: &Grid,
    t: f64,
    quad: &QuadratureSpec,
    params: &PhysParams,
    profile: &TrapProfile,
    shape: FamilyShape,
    opts: &KernelOptions,
) -> Result<KernelMatrix> {
    quad.validate()?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::param("t", format!("kernel needs t > 0, got {t}")));
    }
    profile.validate_horizon(t)?;
    let rule = quad.build();
    let (nx, n0) = (x_grid.len(), x0_grid.len());

    let columns: Vec<Vec<Complex64>> = (0..n0)
        .into_par_iter()
        .map(|j| {
            let family = PacketFamily::evolve(x0_grid.x(j), t, &rule, shape, params, profile, opts.ode_tol)?;
            let terms = family.terms(params, opts.form);
            Ok((0..nx).map(|i| sum_terms(&terms, x_grid.x(i))).collect())
        })
        .collect::<Result<_>>()?;

    let mut entries = vec![Complex64::new(0.0, 0.0); nx * n0];
    for (j, col) in columns.iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            entries[i * n0 + j] = *z;
        }
    }

    let coarse = quad.coarsened().build();
    let rows = probe_indices(nx);
    let meta = probe_indices(n0)
        .into_par_iter()
        .map(|j| {
            let family = PacketFamily::evolve(x0_grid.x(j), t, &coarse, shape, params, profile, opts.ode_tol)?;
            let terms = family.terms(params, opts.form);
            Ok(rows.iter().map(|&i| (sum_terms(&terms, x_grid.x(i)) - entries[i * n0 + j]).norm()).fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    if let Some(threshold) = opts.meta_threshold {
        if !(meta <= threshold) {
            return Err(Error::QuadratureDivergence { estimate: meta, threshold });
        }
    }
    if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::QuadratureDivergence {
            estimate: f64::INFINITY,
            threshold: opts.meta_threshold.unwrap_or(0.0),
        });
    }

    Ok(KernelMatrix { t, x_grid: *x_grid, x0_grid: *x0_grid, quad: *quad, form: opts.form, meta, entries })
}

/// psi(x_i, t) = sum_j w_j K[i][j] psi0(x0_j), trapezoid weights in x0.
pub fn propagate(kernel: &KernelMatrix, psi0: &ComplexField) -> Result<ComplexField> {
    kernel.x0_grid.check_same(psi0.grid())?;
    let ratio = psi0.boundary_ratio();
    if ratio > BOUNDARY_WARN {
        log::warn!("input field boundary modulus {ratio:e} of peak exceeds {BOUNDARY_WARN:e}; truncation error likely");
    }
    let n0 = kernel.x0_grid.len();
    let weighted: Vec<Complex64> =
        psi0.values().iter().enumerate().map(|(j, z)| z * kernel.x0_grid.weight(j)).collect();
    let values: Vec<Complex64> = (0..kernel.x_grid.len())
        .into_par_iter()
        .map(|i| {
            let row = &kernel.entries[i * n0..(i + 1) * n0];
            row.iter().zip(&weighted).fold(Complex64::new(0.0, 0.0), |acc, (k, p)| acc + k * p)
        })
        .collect();
    ComplexField::new(kernel.x_grid, values)
}

/// Smears the velocity-integrated product Phi*(v0, x, t) Phi(v0, x', t)
/// against `test_fn` over x' and divides by 2 pi hbar / m. The packet
/// family is launched from the probe point `x` itself.
#[allow(clippy::too_many_arguments)]
pub fn completeness_check(
    t: f64,
    x: f64,
    quad: &QuadratureSpec,
    params: &PhysParams,
    profile: &TrapProfile,
    shape: FamilyShape,
    test_fn: &ComplexField,
    ode_tol: f64,
) -> Result<Complex64> {
    quad.validate()?;
    let rule = quad.build();
    let family = PacketFamily::evolve(x, t, &rule, shape, params, profile, ode_tol)?;
    let grid = test_fn.grid();
    let form = KernelForm::Derived;
    let acc: Complex64 = (0..rule.nodes.len())
        .into_par_iter()
        .map(|k| {
            let smeared = test_fn.values().iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (j, f)| {
                acc + grid.weight(j) * family.phi(k, grid.x(j), params, form) * f
            });
            rule.weights[k] * family.phi(k, x, params, form).conj() * smeared
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(acc * (params.m() / (2.0 * PI * params.hbar())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn form_round_trip() {
        for f in [KernelForm::Derived, KernelForm::Printed] {
            assert_eq!(KernelForm::from_code(f.code()), Some(f));
            assert_eq!(f.as_str().parse::<KernelForm>().unwrap(), f);
        }
        assert!("other".parse::<KernelForm>().is_err());
        assert_eq!(KernelForm::from_code(7), None);
    }

    #[test]
    fn probes_span_grid() {
        assert_eq!(probe_indices(5), vec![0, 1, 2, 3, 4]);
        let p = probe_indices(256);
        assert_eq!(p.len(), 8);
        assert_eq!(p[0], 0);
        assert_eq!(p[7], 255);
    }

    #[test]
    fn kernel_needs_positive_time() {
        let p = PhysParams::natural(0.0).unwrap();
        let w = TrapProfile::constant(1.0).unwrap();
        let q = QuadratureSpec::new(12.0, 64, 8).unwrap();
        let shape = FamilyShape::new(1.0, 0.0).unwrap();
        assert!(kernel_eval(0.0, 0.0, 0.0, &q, shape, &p, &w, &KernelOptions::default()).is_err());
        assert!(FamilyShape::new(0.0, 0.0).is_err());
    }

    #[test]
    fn zero_field_propagates_to_zero() {
        let p = PhysParams::natural(0.0).unwrap();
        let w = TrapProfile::constant(1.0).unwrap();
        let grid = Grid::symmetric(6.0, 16).unwrap();
        let q = QuadratureSpec::new(12.0, 64, 8).unwrap();
        let shape = FamilyShape::new(1.0, 0.0).unwrap();
        let k = build_kernel(&grid, &grid, 0.3, &q, &p, &w, shape, &KernelOptions::default()).unwrap();
        let out = propagate(&k, &ComplexField::zeros(grid)).unwrap();
        assert_eq!(out.max_abs(), 0.0);
        let other = Grid::symmetric(6.0, 17).unwrap();
        assert!(propagate(&k, &ComplexField::zeros(other)).is_err());
    }

    #[test]
    fn divergence_threshold_is_enforced() {
        let p = PhysParams::natural(0.0).unwrap();
        let w = TrapProfile::constant(1.0).unwrap();
        let grid = Grid::symmetric(6.0, 16).unwrap();
        let q = QuadratureSpec::new(40.0, 64, 8).unwrap();
        let shape = FamilyShape::new(1.0, 0.0).unwrap();
        let opts = KernelOptions { meta_threshold: Some(1e-12), ..Default::default() };
        assert!(matches!(
            build_kernel(&grid, &grid, 0.05, &q, &p, &w, shape, &opts),
            Err(Error::QuadratureDivergence { .. })
        ));
    }
}
