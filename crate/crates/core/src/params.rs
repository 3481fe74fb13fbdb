//! Trap and ion parameters, equilibrium geometry and the constants of the
//! harmonic relative-coordinate model.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::units::{Constants, UnitSystem};

/// Raw physical inputs, all in SI.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalParams {
    /// Ion mass [kg].
    pub mass: f64,
    /// Polarizability of the lower Rydberg level [C²·m²/J].
    pub rho_down: f64,
    /// Polarizability of the upper Rydberg level [C²·m²/J].
    pub rho_up: f64,
    /// Angular trap frequency along x [rad/s].
    pub omega_x: f64,
    /// Angular trap frequency along z [rad/s].
    pub omega_z: f64,
    /// Static transverse field [V/m].
    pub u0: f64,
    /// Radio-frequency field gradient [V/m²].
    pub alpha: f64,
    /// Exchange energy at the equilibrium separation [J].
    pub u_ex_r0: f64,
    /// Exchange gradient at the equilibrium separation [J/m].
    pub f0: f64,
    /// Transverse centre-of-mass equilibrium [m]. When set, it is used
    /// instead of the value solved from `u0`.
    pub x0_override: Option<f64>,
    constants: Constants,
}

impl PhysicalParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mass: f64,
        rho_down: f64,
        rho_up: f64,
        omega_x: f64,
        omega_z: f64,
        u0: f64,
        alpha: f64,
        u_ex_r0: f64,
        f0: f64,
        x0_override: Option<f64>,
    ) -> Self {
        PhysicalParams {
            mass,
            rho_down,
            rho_up,
            omega_x,
            omega_z,
            u0,
            alpha,
            u_ex_r0,
            f0,
            x0_override,
            constants: Constants::CODATA,
        }
    }

    /// Two ⁸⁸Sr⁺ ions in n = 50 S/P Rydberg states.
    pub fn strontium_88() -> Self {
        Self::new(
            87.9 * 1.66e-27,
            8.9e-30,
            -3.8e-31,
            2.0 * PI * 1.6e6,
            2.0 * PI * 1.0e6,
            2.529,
            8.17e8,
            0.0,
            crate::units::HBAR * 2.0 * PI * 20e6 / 1e-6,
            Some(-0.024e-6),
        )
    }

    #[cfg(test)]
    pub(crate) fn with_constants(mut self, constants: Constants) -> Self {
        self.constants = constants;
        self
    }

    pub fn constants(&self) -> Constants {
        self.constants
    }

    pub fn reduced_mass(&self) -> f64 {
        self.mass / 2.0
    }

    pub fn total_mass(&self) -> f64 {
        2.0 * self.mass
    }

    pub fn rho_plus(&self) -> f64 {
        self.rho_up + self.rho_down
    }

    pub fn rho_minus(&self) -> f64 {
        self.rho_up - self.rho_down
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.mass,
            self.rho_down,
            self.rho_up,
            self.omega_x,
            self.omega_z,
            self.u0,
            self.alpha,
            self.u_ex_r0,
            self.f0,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::ModelInvalid("non-finite parameter".into()));
        }
        if self.mass <= 0.0 {
            return Err(Error::ModelInvalid("mass must be positive".into()));
        }
        if self.omega_x <= 0.0 || self.omega_z <= 0.0 {
            return Err(Error::ModelInvalid("trap frequencies must be positive".into()));
        }
        if self.omega_x <= self.omega_z {
            return Err(Error::ModelInvalid(
                "transverse trap frequency must exceed the axial one".into(),
            ));
        }
        Ok(())
    }
}

/// Relative-coordinate potential `V_rel(x, z)` [J] without the exchange term.
pub fn relative_potential(params: &PhysicalParams, x: f64, z: f64) -> f64 {
    let c = params.constants;
    let mu = params.reduced_mass();
    0.5 * mu * (params.omega_x.powi(2) * x * x + params.omega_z.powi(2) * z * z)
        + c.k * c.e * c.e / (x * x + z * z).sqrt()
        - params.alpha.powi(2) * params.rho_plus() * x * x / 4.0
}

/// `∂V_rel/∂z` along `x = 0`.
pub fn relative_force_z(params: &PhysicalParams, z: f64) -> f64 {
    let c = params.constants;
    stationarity_residual(
        c.k * c.e * c.e,
        params.reduced_mass() * params.omega_z.powi(2),
        z,
    )
}

fn stationarity_residual(coulomb: f64, stiffness: f64, z: f64) -> f64 {
    stiffness * z - coulomb / (z * z)
}

/// Root of `stiffness·z − coulomb/z² = 0` by bisection inside `bracket`.
///
/// The residual is strictly increasing for `z > 0`, so a sign change inside
/// the bracket pins a unique root.
pub fn solve_separation(coulomb: f64, stiffness: f64, bracket: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    let f_lo = stationarity_residual(coulomb, stiffness, lo);
    let f_hi = stationarity_residual(coulomb, stiffness, hi);
    if !(lo > 0.0 && hi > lo && f_lo < 0.0 && f_hi > 0.0) {
        return Err(Error::ModelInvalid(format!(
            "no positive equilibrium separation in [{lo:e}, {hi:e}]"
        )));
    }
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if stationarity_residual(coulomb, stiffness, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let closed = (coulomb / stiffness).cbrt();
    if ((root - closed) / closed).abs() > 1e-10 {
        return Err(Error::ModelInvalid(format!(
            "bisection root {root:e} disagrees with closed form {closed:e}"
        )));
    }
    Ok(root)
}

/// Bracket for the equilibrium separation [m].
pub const Z0_BRACKET: (f64, f64) = (0.1e-6, 100e-6);

/// Equilibrium ion separation along z [m].
pub fn solve_z0(params: &PhysicalParams) -> Result<f64> {
    params.validate()?;
    let c = params.constants;
    solve_separation(
        c.k * c.e * c.e,
        params.reduced_mass() * params.omega_z.powi(2),
        Z0_BRACKET,
    )
}

/// Stationary point of `a·X² + b·X` written as `X0 = −b / denominator`,
/// with `denominator = 2a`.
pub fn stationary_point(numerator: f64, denominator: f64) -> Result<f64> {
    if denominator == 0.0 || !denominator.is_finite() {
        return Err(Error::DegenerateTrap(
            "centre-of-mass curvature vanishes".into(),
        ));
    }
    Ok(-numerator / denominator)
}

/// Transverse centre-of-mass equilibrium solved from the static field [m].
pub fn solve_x0(params: &PhysicalParams) -> Result<f64> {
    let e = params.constants.e;
    let denom = params.total_mass() * params.omega_x.powi(2)
        - 2.0 * params.alpha.powi(2) * params.rho_plus();
    stationary_point(2.0 * e * params.u0, denom)
}

/// Effective angular frequencies `(ω̄x, ω̄z)` of the relative motion at the
/// separation `z0`.
pub fn effective_frequencies(params: &PhysicalParams, z0: f64) -> Result<(f64, f64)> {
    if z0 <= 0.0 {
        return Err(Error::ModelInvalid("separation must be positive".into()));
    }
    let c = params.constants;
    let mu = params.reduced_mass();
    let coulomb = c.k * c.e * c.e / (mu * z0.abs().powi(3));
    let wx2 = params.omega_x.powi(2) - params.alpha.powi(2) * params.rho_plus() / (2.0 * mu) - coulomb;
    let wz2 = params.omega_z.powi(2) + 2.0 * coulomb;
    if wx2 <= 0.0 || !wx2.is_finite() {
        return Err(Error::ModelInvalid(format!(
            "effective transverse frequency squared is {wx2:e}"
        )));
    }
    if wz2 <= 0.0 || !wz2.is_finite() {
        return Err(Error::ModelInvalid(format!(
            "effective axial frequency squared is {wz2:e}"
        )));
    }
    Ok((wx2.sqrt(), wz2.sqrt()))
}

/// Equilibrium configuration and harmonic constants derived from
/// [`PhysicalParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedGeometry {
    pub mu: f64,
    pub total_mass: f64,
    pub z0: f64,
    /// The value used by the model.
    pub x0: f64,
    /// The value solved from `u0`, reported alongside any override.
    pub x0_from_u0: Option<f64>,
    pub x0_overridden: bool,
    pub omega_bar_x: f64,
    pub omega_bar_z: f64,
    pub rho_plus: f64,
    pub rho_minus: f64,
}

impl DerivedGeometry {
    pub fn from_params(params: &PhysicalParams) -> Result<Self> {
        let z0 = solve_z0(params)?;
        let (omega_bar_x, omega_bar_z) = effective_frequencies(params, z0)?;
        let solved = solve_x0(params);
        let (x0, x0_from_u0) = match (params.x0_override, solved) {
            (Some(x0), s) => (x0, s.ok()),
            (None, s) => {
                let s = s?;
                (s, Some(s))
            }
        };
        let geometry = DerivedGeometry {
            mu: params.reduced_mass(),
            total_mass: params.total_mass(),
            z0,
            x0,
            x0_from_u0,
            x0_overridden: params.x0_override.is_some(),
            omega_bar_x,
            omega_bar_z,
            rho_plus: params.rho_plus(),
            rho_minus: params.rho_minus(),
        };
        let residual = relative_force_z(params, z0).abs();
        if residual >= 1e-9 * geometry.mu * omega_bar_z * omega_bar_z * z0 {
            return Err(Error::ModelInvalid(format!(
                "equilibrium residual {residual:e} too large"
            )));
        }
        Ok(geometry)
    }
}

/// Constants of the relative-coordinate model in one consistent unit system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelConstants {
    /// Reduced mass.
    pub mu: f64,
    pub omega_bar_x: f64,
    pub omega_bar_z: f64,
    pub z0: f64,
    pub x0: f64,
    /// `U_ex(r0)` [energy].
    pub u_ex_r0: f64,
    /// `F_z(r0)` [energy/length].
    pub f0: f64,
    /// Slope `α²ρ₋X0` of the `S_z` coupling [energy/length].
    pub g_slope: f64,
    /// Energy of one elementary charge displaced by one length unit in a
    /// 1 V/m field. The control field itself is always kept in V/m.
    pub field_coupling: f64,
}

impl ModelConstants {
    fn rescale(&self, length: f64, time: f64, energy: f64, mass: f64) -> Self {
        ModelConstants {
            mu: self.mu / mass,
            omega_bar_x: self.omega_bar_x * time,
            omega_bar_z: self.omega_bar_z * time,
            z0: self.z0 / length,
            x0: self.x0 / length,
            u_ex_r0: self.u_ex_r0 / energy,
            f0: self.f0 * length / energy,
            g_slope: self.g_slope * length / energy,
            field_coupling: self.field_coupling * length / energy,
        }
    }
}

/// Model constants expressed in internal units (ħ = 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InternalModel {
    pub consts: ModelConstants,
    pub units: UnitSystem,
}

impl InternalModel {
    /// Converts back to SI.
    pub fn from_internal(&self) -> ModelConstants {
        let u = &self.units;
        self.consts
            .rescale(1.0 / u.length, 1.0 / u.time, 1.0 / u.energy, 1.0 / u.mass)
    }

    /// Builds an internal model directly from SI constants.
    pub fn from_si(si: &ModelConstants, units: UnitSystem) -> Self {
        InternalModel {
            consts: si.rescale(units.length, units.time, units.energy, units.mass),
            units,
        }
    }

    pub fn mu(&self) -> f64 {
        self.consts.mu
    }

    /// Amplitude width `sqrt(ħ/(μ ω̄))` of the harmonic ground state along x.
    pub fn width_x(&self) -> f64 {
        (1.0 / (self.consts.mu * self.consts.omega_bar_x)).sqrt()
    }

    pub fn width_z(&self) -> f64 {
        (1.0 / (self.consts.mu * self.consts.omega_bar_z)).sqrt()
    }
}

pub fn to_internal(
    params: &PhysicalParams,
    geometry: &DerivedGeometry,
    units: UnitSystem,
) -> Result<InternalModel> {
    if !units.is_valid(params.constants.hbar) {
        return Err(Error::Config("unit system is inconsistent with ħ = 1".into()));
    }
    let si = ModelConstants {
        mu: geometry.mu,
        omega_bar_x: geometry.omega_bar_x,
        omega_bar_z: geometry.omega_bar_z,
        z0: geometry.z0,
        x0: geometry.x0,
        u_ex_r0: params.u_ex_r0,
        f0: params.f0,
        g_slope: params.alpha.powi(2) * geometry.rho_minus * geometry.x0,
        field_coupling: params.constants.e,
    };
    Ok(InternalModel::from_si(&si, units))
}

/// Convenience: derive the geometry and convert in one go.
pub fn build_model(params: &PhysicalParams, units: UnitSystem) -> Result<(DerivedGeometry, InternalModel)> {
    let geometry = DerivedGeometry::from_params(params)?;
    let model = to_internal(params, &geometry, units)?;
    Ok((geometry, model))
}
