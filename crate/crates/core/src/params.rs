use crate::error::{Error, Result};

/// Mass, quantum of action and mean-field coupling of the condensate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    m: f64,
    hbar: f64,
    g: f64,
}

impl PhysParams {
    pub fn new(m: f64, hbar: f64, g: f64) -> Result<Self> {
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::param("m", format!("mass must be finite and > 0, got {m}")));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::param("hbar", format!("must be finite and > 0, got {hbar}")));
        }
        if !g.is_finite() {
            return Err(Error::param("g", format!("must be finite, got {g}")));
        }
        Ok(Self { m, hbar, g })
    }

    /// m = hbar = 1 with the given coupling.
    pub fn natural(g: f64) -> Result<Self> {
        Self::new(1.0, 1.0, g)
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    /// Attractive interactions are allowed but callers should surface them.
    pub fn is_attractive(&self) -> bool {
        self.g < 0.0
    }

    pub fn with_g(&self, g: f64) -> Result<Self> {
        Self::new(self.m, self.hbar, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_values() {
        assert!(PhysParams::new(0.0, 1.0, 0.0).is_err());
        assert!(PhysParams::new(1.0, -1.0, 0.0).is_err());
        assert!(PhysParams::new(1.0, 1.0, f64::NAN).is_err());
        assert!(PhysParams::new(f64::INFINITY, 1.0, 0.0).is_err());
    }

    #[test]
    fn negative_g_is_flagged_not_rejected() {
        let p = PhysParams::new(1.0, 1.0, -0.3).unwrap();
        assert!(p.is_attractive());
        assert!(!PhysParams::natural(0.2).unwrap().is_attractive());
    }
}
