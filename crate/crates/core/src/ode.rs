//! Dormand-Prince 5(4) integrator with PI step control and 4th-order dense
//! output, for small fixed-size systems.

use crate::error::{Error, Result};

/// A first-order system y' = f(t, y) of dimension `N`.
pub trait OdeSystem<const N: usize> {
    /// May fail for states outside the system's domain; the stepper then
    /// retries with a smaller step.
    fn rhs(&self, t: f64, y: &[f64; N]) -> Result<[f64; N]>;

    /// Accepted steps must land in an admissible state.
    fn admissible(&self, _y: &[f64; N]) -> bool {
        true
    }

    /// Error reported when the domain keeps being left at ever smaller steps.
    fn domain_error(&self, t: f64) -> Error {
        Error::StepSizeUnderflow { t, h: 0.0 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    /// Per-step relative tolerance.
    pub rtol: f64,
    /// Absolute floor, scaled by max(1, |y|_inf).
    pub abs_floor: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl StepControl {
    pub fn with_rtol(rtol: f64) -> Self {
        Self { rtol, abs_floor: 1e-14, h_max: f64::INFINITY, max_steps: 1_000_000 }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Interpolation data for one accepted step.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    pub coeffs: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        std::array::from_fn(|i| r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i]))))
    }
}

/// Accepted states plus dense output over the whole integration interval.
#[derive(Debug, Clone)]
pub struct OdeSolution<const N: usize> {
    pub ts: Vec<f64>,
    pub ys: Vec<[f64; N]>,
    pub dense: Vec<DenseStep<N>>,
    pub rejected: usize,
}

impl<const N: usize> OdeSolution<N> {
    pub fn t_start(&self) -> f64 {
        self.ts[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.ts.last().expect("solution has at least one point")
    }

    pub fn last(&self) -> &[f64; N] {
        self.ys.last().expect("solution has at least one point")
    }

    /// Dense-output value at `t`; exact stored states at step endpoints.
    pub fn eval(&self, t: f64) -> Result<[f64; N]> {
        let (t0, t1) = (self.t_start(), self.t_end());
        if !(t >= t0 && t <= t1) {
            return Err(Error::TimeOutOfRange { t, t_start: t0, t_end: t1 });
        }
        // first index with ts[k] >= t
        let k = self.ts.partition_point(|&s| s < t);
        if self.ts[k] == t {
            return Ok(self.ys[k]);
        }
        Ok(self.dense[k - 1].eval(t))
    }
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        y[i] + h * acc
    })
}

fn inf_norm<const N: usize>(y: &[f64; N]) -> f64 {
    y.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn rms_scaled<const N: usize>(v: &[f64; N], scale: &[f64; N]) -> f64 {
    let s: f64 = v.iter().zip(scale).map(|(a, b)| (a / b) * (a / b)).sum();
    (s / N as f64).sqrt()
}

fn error_scale<const N: usize>(ctl: &StepControl, y0: &[f64; N], y1: &[f64; N]) -> [f64; N] {
    let floor = ctl.abs_floor * inf_norm(y1).max(1.0);
    std::array::from_fn(|i| (ctl.rtol * y0[i].abs().max(y1[i].abs())).max(floor))
}

fn initial_step<const N: usize, S: OdeSystem<N>>(
    sys: &S,
    ctl: &StepControl,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    span: f64,
) -> f64 {
    let sc = error_scale(ctl, y0, y0);
    let d0 = rms_scaled(y0, &sc);
    let d1 = rms_scaled(f0, &sc);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span).min(ctl.h_max);
    let y1 = axpy(y0, h0, &[(1.0, f0)]);
    let d2 = match sys.rhs(t0 + h0, &y1) {
        Ok(f1) => {
            let df: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
            rms_scaled(&df, &sc) / h0
        }
        Err(_) => return h0 * 0.1,
    };
    let dmax = d1.max(d2);
    let h1 = if dmax <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dmax).powf(0.2) };
    (100.0 * h0).min(h1).min(span).min(ctl.h_max)
}

/// Integrates `sys` from `(t0, y0)` to `t_final`.
pub fn integrate<const N: usize, S: OdeSystem<N>>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    t_final: f64,
    ctl: &StepControl,
) -> Result<OdeSolution<N>> {
    const SAFE: f64 = 0.9;
    const BETA: f64 = 0.04;
    const EXPO1: f64 = 0.2 - BETA * 0.75;
    const FAC_MIN: f64 = 0.2;
    const FAC_MAX: f64 = 10.0;

    if !(t_final > t0) {
        return Err(Error::param("t_final", format!("need t_final > {t0}, got {t_final}")));
    }
    let span = t_final - t0;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = sys.rhs(t, &y)?;
    let mut h = initial_step(sys, ctl, t, &y, &k1, span);
    let mut fac_old = 1e-4_f64;
    let mut last_rejected = false;

    let mut sol = OdeSolution { ts: vec![t0], ys: vec![y0], dense: Vec::new(), rejected: 0 };

    for _ in 0..ctl.max_steps {
        if t >= t_final {
            return Ok(sol);
        }
        let h_min = 1e-14 * t.abs().max(span).max(1.0);
        if h < h_min {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let last = t + h >= t_final;
        if last {
            h = t_final - t;
        }

        let stages = (|| -> Result<_> {
            let k2 = sys.rhs(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]))?;
            let k3 = sys.rhs(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = sys.rhs(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
            let k5 = sys.rhs(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
            let y6 = axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
            let k6 = sys.rhs(t + h, &y6)?;
            let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            if !sys.admissible(&y_new) {
                return Err(sys.domain_error(t + h));
            }
            let k7 = sys.rhs(t + h, &y_new)?;
            Ok((k2, k3, k4, k5, k6, k7, y_new))
        })();

        let (_k2, k3, k4, k5, k6, k7, y_new) = match stages {
            Ok(s) => s,
            Err(e) => {
                // left the domain: halve and retry
                sol.rejected += 1;
                h *= 0.5;
                last_rejected = true;
                if h < h_min {
                    return Err(match e {
                        Error::StepSizeUnderflow { .. } => sys.domain_error(t),
                        other => other,
                    });
                }
                continue;
            }
        };

        let err_vec: [f64; N] =
            std::array::from_fn(|i| h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]));
        let sc = error_scale(ctl, &y, &y_new);
        let err = rms_scaled(&err_vec, &sc);
        if !err.is_finite() {
            sol.rejected += 1;
            h *= 0.5;
            last_rejected = true;
            continue;
        }

        let fac11 = err.powf(EXPO1);
        if err <= 1.0 {
            let ydiff: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
            let bspl: [f64; N] = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
            let r4: [f64; N] = std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]);
            let r5: [f64; N] = std::array::from_fn(|i| {
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
            });
            sol.dense.push(DenseStep { t0: t, h, coeffs: [y, ydiff, bspl, r4, r5] });

            t = if last { t_final } else { t + h };
            y = y_new;
            k1 = k7;
            sol.ts.push(t);
            sol.ys.push(y);

            let mut fac = fac11 / fac_old.powf(BETA);
            fac = (fac / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = (h / fac).min(ctl.h_max);
            if last_rejected {
                h_new = h_new.min(h);
            }
            fac_old = err.max(1e-4);
            last_rejected = false;
            h = h_new;
        } else {
            sol.rejected += 1;
            h /= (fac11 / SAFE).min(1.0 / FAC_MIN);
            last_rejected = true;
        }
    }
    Err(Error::StepSizeUnderflow { t, h })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay;
    impl OdeSystem<1> for Decay {
        fn rhs(&self, _t: f64, y: &[f64; 1]) -> Result<[f64; 1]> {
            Ok([-y[0]])
        }
    }

    struct Oscillator;
    impl OdeSystem<2> for Oscillator {
        fn rhs(&self, _t: f64, y: &[f64; 2]) -> Result<[f64; 2]> {
            Ok([y[1], -y[0]])
        }
    }

    #[test]
    fn exponential_decay() {
        let sol = integrate(&Decay, 0.0, [1.0], 5.0, &StepControl::with_rtol(1e-10)).unwrap();
        assert_eq!(sol.t_end(), 5.0);
        assert!((sol.last()[0] - (-5.0_f64).exp()).abs() < 1e-12);
        for t in [0.1, 1.234, 4.99] {
            let y = sol.eval(t).unwrap()[0];
            assert!((y - (-t).exp()).abs() / (-t).exp() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn dense_output_is_continuous_and_accurate() {
        let sol = integrate(&Oscillator, 0.0, [1.0, 0.0], 10.0, &StepControl::with_rtol(1e-10)).unwrap();
        let mut worst = 0.0_f64;
        for i in 0..=2000 {
            let t = 10.0 * i as f64 / 2000.0;
            let y = sol.eval(t).unwrap();
            worst = worst.max((y[0] - t.cos()).abs());
        }
        assert!(worst < 1e-8, "worst {worst}");
        assert!(sol.eval(10.5).is_err());
        assert!(sol.eval(-0.1).is_err());
    }

    struct Drain;
    impl OdeSystem<1> for Drain {
        fn rhs(&self, t: f64, y: &[f64; 1]) -> Result<[f64; 1]> {
            if y[0] <= 0.0 {
                return Err(Error::NonPositiveSigma { t });
            }
            Ok([-1.0])
        }
        fn admissible(&self, y: &[f64; 1]) -> bool {
            y[0] > 0.0
        }
        fn domain_error(&self, t: f64) -> Error {
            Error::NonPositiveSigma { t }
        }
    }

    #[test]
    fn leaving_the_domain_reports_time() {
        match integrate(&Drain, 0.0, [1.0], 2.0, &StepControl::with_rtol(1e-8)) {
            Err(Error::NonPositiveSigma { t }) => assert!((t - 1.0).abs() < 1e-6, "t={t}"),
            other => panic!("expected domain exit, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_horizon() {
        assert!(integrate(&Decay, 1.0, [1.0], 1.0, &StepControl::with_rtol(1e-8)).is_err());
    }
}
