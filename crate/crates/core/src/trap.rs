//! Time-dependent harmonic trap frequency.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrapProfile {
    /// omega(t) = omega0
    Constant { omega0: f64 },
    /// omega(t) = omega0 + rate * t
    LinearRamp { omega0: f64, rate: f64 },
    /// omega(t) = omega0 * (1 + epsilon * sin(nu * t))
    Sinusoidal { omega0: f64, epsilon: f64, nu: f64 },
}

impl TrapProfile {
    pub fn constant(omega0: f64) -> Result<Self> {
        let p = TrapProfile::Constant { omega0 };
        p.validate()?;
        Ok(p)
    }

    pub fn linear_ramp(omega0: f64, rate: f64) -> Result<Self> {
        let p = TrapProfile::LinearRamp { omega0, rate };
        p.validate()?;
        Ok(p)
    }

    pub fn sinusoidal(omega0: f64, epsilon: f64, nu: f64) -> Result<Self> {
        let p = TrapProfile::Sinusoidal { omega0, epsilon, nu };
        p.validate()?;
        Ok(p)
    }

    /// Checks the horizon-independent invariants.
    pub fn validate(&self) -> Result<()> {
        let omega0 = self.omega0();
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(Error::param("trap.omega0", format!("must be finite and > 0, got {omega0}")));
        }
        match *self {
            TrapProfile::Constant { .. } => Ok(()),
            TrapProfile::LinearRamp { rate, .. } => {
                if rate.is_finite() {
                    Ok(())
                } else {
                    Err(Error::param("trap.rate", "must be finite"))
                }
            }
            TrapProfile::Sinusoidal { epsilon, nu, .. } => {
                if !(epsilon.is_finite() && epsilon.abs() < 1.0) {
                    return Err(Error::param("trap.epsilon", format!("need |epsilon| < 1, got {epsilon}")));
                }
                if !nu.is_finite() {
                    return Err(Error::param("trap.nu", "must be finite"));
                }
                Ok(())
            }
        }
    }

    /// Checks that omega stays positive on [0, horizon]. Only the linear
    /// ramp can fail this once `validate` has passed.
    pub fn validate_horizon(&self, horizon: f64) -> Result<()> {
        self.validate()?;
        if let TrapProfile::LinearRamp { omega0, rate } = *self {
            let end = omega0 + rate * horizon;
            if end <= 0.0 {
                return Err(Error::NonPositiveFrequency { t: horizon, omega: end });
            }
        }
        Ok(())
    }

    pub fn omega0(&self) -> f64 {
        match *self {
            TrapProfile::Constant { omega0 }
            | TrapProfile::LinearRamp { omega0, .. }
            | TrapProfile::Sinusoidal { omega0, .. } => omega0,
        }
    }

    /// omega(t), without the positivity check.
    #[inline]
    pub fn omega_unchecked(&self, t: f64) -> f64 {
        match *self {
            TrapProfile::Constant { omega0 } => omega0,
            TrapProfile::LinearRamp { omega0, rate } => omega0 + rate * t,
            TrapProfile::Sinusoidal { omega0, epsilon, nu } => omega0 * (1.0 + epsilon * (nu * t).sin()),
        }
    }

    pub fn omega(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::param("t", "time must be finite"));
        }
        let w = self.omega_unchecked(t);
        if w > 0.0 {
            Ok(w)
        } else {
            Err(Error::NonPositiveFrequency { t, omega: w })
        }
    }

    /// Whether omega(t) = omega(-t) for all t.
    pub fn is_even(&self) -> bool {
        match *self {
            TrapProfile::Constant { .. } => true,
            TrapProfile::LinearRamp { rate, .. } => rate == 0.0,
            TrapProfile::Sinusoidal { epsilon, nu, .. } => epsilon == 0.0 || nu == 0.0,
        }
    }

    pub fn potential(&self, m: f64, x: f64, t: f64) -> f64 {
        let w = self.omega_unchecked(t);
        0.5 * m * w * w * x * x
    }
}

/// Free function form of [`TrapProfile::omega`].
pub fn omega_eval(profile: &TrapProfile, t: f64) -> Result<f64> {
    profile.omega(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_each_variant() {
        assert_eq!(omega_eval(&TrapProfile::constant(1.0).unwrap(), 5.0).unwrap(), 1.0);
        let ramp = TrapProfile::linear_ramp(1.0, 0.1).unwrap();
        assert!((omega_eval(&ramp, 2.0).unwrap() - 1.2).abs() < 1e-15);
        let sin = TrapProfile::sinusoidal(1.0, 0.1, 2.0).unwrap();
        assert_eq!(omega_eval(&sin, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn negative_frequency_is_an_error() {
        let ramp = TrapProfile::linear_ramp(1.0, -0.5).unwrap();
        assert!(matches!(ramp.omega(3.0), Err(Error::NonPositiveFrequency { .. })));
        assert!(ramp.validate_horizon(1.9).is_ok());
        assert!(ramp.validate_horizon(2.0).is_err());
        assert!(ramp.omega(f64::NAN).is_err());
    }

    #[test]
    fn rejects_invalid_profiles() {
        assert!(TrapProfile::constant(0.0).is_err());
        assert!(TrapProfile::sinusoidal(1.0, 1.0, 1.0).is_err());
        assert!(TrapProfile::sinusoidal(1.0, -0.99, 1.0).is_ok());
    }

    #[test]
    fn constant_profile_is_time_independent() {
        let c = TrapProfile::constant(2.5).unwrap();
        for t in [-3.0, 0.0, 1e-9, 7.0, 1e6] {
            assert_eq!(c.omega(t).unwrap(), 2.5);
        }
    }
}
