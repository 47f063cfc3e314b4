//! Composite Gauss-Legendre rules over a symmetric velocity window.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Velocity-quadrature settings: `n_nodes` Gauss-Legendre nodes split
/// evenly over `n_panels` panels covering `[-v_max, v_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub v_max: f64,
    pub n_nodes: usize,
    pub n_panels: usize,
}

impl QuadratureSpec {
    pub const MIN_NODES: usize = 64;
    pub const MIN_PER_PANEL: usize = 8;

    pub fn new(v_max: f64, n_nodes: usize, n_panels: usize) -> Result<Self> {
        let spec = Self { v_max, n_nodes, n_panels };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_max.is_finite() && self.v_max > 0.0) {
            return Err(Error::param("quad.v_max", format!("must be > 0, got {}", self.v_max)));
        }
        if self.n_nodes < Self::MIN_NODES {
            return Err(Error::param("quad.n_nodes", format!("need >= {}, got {}", Self::MIN_NODES, self.n_nodes)));
        }
        if self.n_panels == 0 || !self.n_nodes.is_multiple_of(self.n_panels) {
            return Err(Error::param("quad.n_panels", "must divide n_nodes"));
        }
        if self.nodes_per_panel() < Self::MIN_PER_PANEL {
            return Err(Error::param("quad.n_panels", format!("need >= {} nodes per panel", Self::MIN_PER_PANEL)));
        }
        Ok(())
    }

    pub fn nodes_per_panel(&self) -> usize {
        self.n_nodes / self.n_panels
    }

    /// Rule with half the nodes: half the panels when that is possible,
    /// otherwise half the nodes per panel. Used for convergence estimates,
    /// so the minimum-size invariants are not enforced on the result.
    pub fn coarsened(&self) -> Self {
        if self.n_panels >= 2 && self.n_panels.is_multiple_of(2) {
            Self { n_nodes: self.n_nodes / 2, n_panels: self.n_panels / 2, ..*self }
        } else {
            Self { n_nodes: self.n_nodes / 2, ..*self }
        }
    }

    /// Rule with twice the panels (and nodes), same nodes per panel.
    pub fn refined(&self) -> Self {
        Self { n_nodes: self.n_nodes * 2, n_panels: self.n_panels * 2, ..*self }
    }

    /// Default window half-width for a packet family of initial width
    /// `sigma0` evolved up to `t_max` in a trap of frequency `omega`.
    pub fn default_v_max(m: f64, hbar: f64, sigma0: f64, omega: f64, t_max: f64) -> f64 {
        12.0 * hbar / (m * sigma0.sqrt()) * (omega * t_max).max(1.0)
    }

    /// Smallest node count (a multiple of 8 * `panels_hint`, at least 64)
    /// whose mean node spacing resolves oscillations exp(i m v (x - x0)/hbar)
    /// with `max_separation` = max|x - x0|, with a factor 4 margin.
    pub fn nyquist_nodes(v_max: f64, m: f64, hbar: f64, max_separation: f64) -> usize {
        let spacing = PI * hbar / (m * max_separation.max(f64::MIN_POSITIVE));
        let needed = (4.0 * 2.0 * v_max / spacing).ceil() as usize;
        needed.max(Self::MIN_NODES).next_multiple_of(Self::MIN_PER_PANEL * 2)
    }

    pub fn build(&self) -> QuadratureRule {
        let per = self.nodes_per_panel().max(1);
        let (xs, ws) = gauss_legendre(per);
        let width = 2.0 * self.v_max / self.n_panels as f64;
        let mut nodes = Vec::with_capacity(per * self.n_panels);
        let mut weights = Vec::with_capacity(per * self.n_panels);
        for p in 0..self.n_panels {
            let a = -self.v_max + p as f64 * width;
            let mid = a + 0.5 * width;
            for (x, w) in xs.iter().zip(&ws) {
                nodes.push(mid + 0.5 * width * x);
                weights.push(0.5 * width * w);
            }
        }
        QuadratureRule { nodes, weights }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&v, &w)| w * f(v)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        for n in [1, 2, 3, 8, 17, 64] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n={n}");
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                assert!((got - exact).abs() < 1e-12, "n={n} deg={deg}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn nodes_sorted_and_symmetric() {
        let (x, w) = gauss_legendre(16);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        for i in 0..16 {
            assert!((x[i] + x[15 - i]).abs() < 1e-15);
            assert_eq!(w[i], w[15 - i]);
        }
    }

    #[test]
    fn composite_rule_on_oscillatory_integrand() {
        // integral of cos(k v) over [-V, V] = 2 sin(kV)/k
        let spec = QuadratureSpec::new(10.0, 256, 16).unwrap();
        let rule = spec.build();
        let k = 7.3;
        let got = rule.integrate(|v| (k * v).cos());
        assert!((got - 2.0 * (k * 10.0).sin() / k).abs() < 1e-12);
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::new(0.0, 64, 8).is_err());
        assert!(QuadratureSpec::new(1.0, 32, 4).is_err());
        assert!(QuadratureSpec::new(1.0, 64, 16).is_err());
        assert!(QuadratureSpec::new(1.0, 64, 5).is_err());
        let q = QuadratureSpec::new(1.0, 128, 8).unwrap();
        assert_eq!(q.coarsened().n_panels, 4);
        assert_eq!(q.coarsened().n_nodes, 64);
        let odd = QuadratureSpec::new(1.0, 96, 3).unwrap();
        assert_eq!(odd.coarsened().nodes_per_panel(), 16);
    }
}
