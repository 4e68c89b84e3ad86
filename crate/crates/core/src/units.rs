use crate::{Error, Result};

/// Physical constants shared by every computation.
///
/// `kT` is not stored: it is always `hbar * omega` (one degree of freedom of
/// the thermostat carries the oscillator's zero-point energy).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitsConstants {
    pub hbar: f64,
    pub mass: f64,
    pub omega: f64,
}

impl UnitsConstants {
    pub fn new(hbar: f64, mass: f64, omega: f64) -> Result<Self> {
        for (what, value) in [("hbar", hbar), ("mass", mass), ("omega", omega)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::NonPositive { what, value });
            }
        }
        Ok(Self { hbar, mass, omega })
    }

    /// hbar = mass = omega = 1.
    pub const fn natural() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            omega: 1.0,
        }
    }

    /// Same constants with a different particle mass.
    pub fn with_mass(self, mass: f64) -> Result<Self> {
        Self::new(self.hbar, mass, self.omega)
    }

    pub fn kt(&self) -> f64 {
        self.hbar * self.omega
    }

    /// hbar / m, the factor turning phase and log-amplitude gradients into velocities.
    pub fn hbar_over_mass(&self) -> f64 {
        self.hbar / self.mass
    }
}

impl Default for UnitsConstants {
    fn default() -> Self {
        Self::natural()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kt_is_hbar_omega() {
        let u = UnitsConstants::new(0.5, 3.0, 7.0).unwrap();
        assert_eq!(u.kt(), 3.5);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(UnitsConstants::new(0.0, 1.0, 1.0).is_err());
        assert!(UnitsConstants::new(1.0, -1.0, 1.0).is_err());
        assert!(UnitsConstants::new(1.0, 1.0, f64::NAN).is_err());
    }
}
