//! Physical constants and the internal unit system.
//!
//! Internally every quantity is expressed in units where the reduced Planck
//! constant is one. The defaults are nanometres and microseconds, so energies
//! come out in ħ/μs (angular MHz) and the harmonic length scales are O(10).

/// CODATA 2018 reduced Planck constant [J·s].
pub const HBAR: f64 = 1.054_571_817e-34;
/// CODATA 2018 elementary charge [C] (exact).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Coulomb constant 1/(4πε₀) with CODATA 2018 ε₀ [N·m²/C²].
pub const COULOMB_K: f64 = 8.987_551_792_3e9;

/// The fundamental constants a model is built from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constants {
    pub hbar: f64,
    pub e: f64,
    pub k: f64,
}

impl Constants {
    pub const CODATA: Constants = Constants {
        hbar: HBAR,
        e: ELEMENTARY_CHARGE,
        k: COULOMB_K,
    };
}

impl Default for Constants {
    fn default() -> Self {
        Self::CODATA
    }
}

/// Scales (in SI) of the internal length, time, energy and mass units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitSystem {
    pub length: f64,
    pub time: f64,
    pub energy: f64,
    pub mass: f64,
}

impl UnitSystem {
    /// Builds the unit system in which `hbar` becomes one.
    pub fn new(length: f64, time: f64, hbar: f64) -> Self {
        UnitSystem {
            length,
            time,
            energy: hbar / time,
            mass: hbar * time / (length * length),
        }
    }

    /// Nanometres and microseconds with the CODATA ħ.
    pub fn nm_us() -> Self {
        Self::new(1e-9, 1e-6, HBAR)
    }

    pub fn is_valid(&self, hbar: f64) -> bool {
        let ok = |a: f64, b: f64| ((a - b) / b).abs() < 1e-14;
        self.length > 0.0
            && self.time > 0.0
            && ok(self.energy, hbar / self.time)
            && ok(self.mass, hbar * self.time / (self.length * self.length))
    }
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self::nm_us()
    }
}
