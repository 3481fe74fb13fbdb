//! Spin-Hamiltonian coefficients `S`, `W`, `G` over the relative-coordinate
//! plane, the adiabatic surfaces `E±` and the adiabatic eigenbasis.
//!
//! On the basis `(|π1⟩, |π2⟩)` the spin Hamiltonian at a point is
//!
//! ```text
//! H_spin = [ S + G     W   ]
//!          [   W     S − G ]
//! ```

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::params::InternalModel;

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientFields {
    pub s: Array2<f64>,
    pub w: Array2<f64>,
    pub g: Array2<f64>,
}

/// Pointwise coefficients of the harmonic spin Hamiltonian.
pub fn coefficients_at(model: &InternalModel, qx: f64, qz: f64) -> (f64, f64, f64) {
    let c = &model.consts;
    let s = 0.5 * c.mu * (c.omega_bar_x.powi(2) * qx * qx + c.omega_bar_z.powi(2) * qz * qz);
    let w = c.u_ex_r0 + c.f0 * qz;
    let g = c.g_slope * qx;
    (s, w, g)
}

pub fn eval_coefficients(model: &InternalModel, grid: &Grid2D) -> CoefficientFields {
    let shape = grid.shape();
    let mut s = Array2::zeros(shape);
    let mut w = Array2::zeros(shape);
    let mut g = Array2::zeros(shape);
    for (i, &qx) in grid.qx.iter().enumerate() {
        for (j, &qz) in grid.qz.iter().enumerate() {
            let (si, wi, gi) = coefficients_at(model, qx, qz);
            s[[i, j]] = si;
            w[[i, j]] = wi;
            g[[i, j]] = gi;
        }
    }
    CoefficientFields { s, w, g }
}

/// `(E+, E−)` at one point.
pub fn surface_pair(s: f64, w: f64, g: f64) -> (f64, f64) {
    let r = g.hypot(w);
    (s + r, s - r)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdiabaticSurfaces {
    pub e_plus: Array2<f64>,
    pub e_minus: Array2<f64>,
    pub ci_qx: f64,
    pub ci_qz: f64,
}

/// Evaluates `E± = S ± sqrt(G² + W²)`; the intersection is attached from
/// [`ci_location`].
pub fn eval_surfaces(coeffs: &CoefficientFields, ci: (f64, f64)) -> AdiabaticSurfaces {
    let shape = coeffs.s.dim();
    let mut e_plus = Array2::zeros(shape);
    let mut e_minus = Array2::zeros(shape);
    ndarray::Zip::from(&mut e_plus)
        .and(&mut e_minus)
        .and(&coeffs.s)
        .and(&coeffs.w)
        .and(&coeffs.g)
        .for_each(|ep, em, &s, &w, &g| {
            let (p, m) = surface_pair(s, w, g);
            *ep = p;
            *em = m;
        });
    AdiabaticSurfaces {
        e_plus,
        e_minus,
        ci_qx: ci.0,
        ci_qz: ci.1,
    }
}

/// Location `(qx*, qz*)` of the conical intersection, where `G = W = 0`.
pub fn ci_location(model: &InternalModel) -> Result<(f64, f64)> {
    let c = &model.consts;
    if c.f0 == 0.0 {
        return Err(Error::NoIntersection);
    }
    // `+ 0.0` maps −0 to +0
    let ci = (0.0, -c.u_ex_r0 / c.f0 + 0.0);
    let (s, w, g) = coefficients_at(model, ci.0, ci.1);
    let (ep, em) = surface_pair(s, w, g);
    debug_assert!((ep - em).abs() < 1e-12);
    Ok(ci)
}

/// Mixing angle with `tan 2Λ = W/G`, fixed to `Λ = ½·atan2(W, G)`.
///
/// Returns `(Λ, degenerate)`; at `G = W = 0` the angle is set to zero and
/// flagged.
pub fn mixing_angle_at(w: f64, g: f64) -> (f64, bool) {
    if w == 0.0 && g == 0.0 {
        (0.0, true)
    } else {
        (0.5 * w.atan2(g), false)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixingAngle {
    pub lambda: Array2<f64>,
    /// Grid nodes where `G = W = 0`.
    pub degenerate: Vec<(usize, usize)>,
}

pub fn mixing_angle(coeffs: &CoefficientFields) -> MixingAngle {
    let mut lambda = Array2::zeros(coeffs.s.dim());
    let mut degenerate = Vec::new();
    for ((idx, l), (&w, &g)) in lambda
        .indexed_iter_mut()
        .zip(coeffs.w.iter().zip(coeffs.g.iter()))
    {
        let (angle, flag) = mixing_angle_at(w, g);
        *l = angle;
        if flag {
            degenerate.push(idx);
        }
    }
    MixingAngle { lambda, degenerate }
}

/// Adiabatic eigenvectors on the `(|π1⟩, |π2⟩)` basis:
/// `φ+ = (cos Λ, sin Λ)`, `φ− = (−sin Λ, cos Λ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdiabaticBasis {
    pub cos: Array2<f64>,
    pub sin: Array2<f64>,
}

impl AdiabaticBasis {
    pub fn plus(&self, i: usize, j: usize) -> [f64; 2] {
        [self.cos[[i, j]], self.sin[[i, j]]]
    }

    pub fn minus(&self, i: usize, j: usize) -> [f64; 2] {
        [-self.sin[[i, j]], self.cos[[i, j]]]
    }
}

pub fn adiabatic_states(coeffs: &CoefficientFields) -> AdiabaticBasis {
    let angle = mixing_angle(coeffs);
    AdiabaticBasis {
        cos: angle.lambda.mapv(f64::cos),
        sin: angle.lambda.mapv(f64::sin),
    }
}
