use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::Grid2D;

/// An `N`-component wavefunction on a [`Grid2D`].
///
/// Two components are the spinor amplitudes on `|π1⟩` and `|π2⟩`; one
/// component is a single-surface wavefunction.
#[derive(Clone, Debug, PartialEq)]
pub struct Wave<const N: usize> {
    pub comps: [Array2<C64>; N],
}

pub type SpinorField = Wave<2>;
pub type ScalarField = Wave<1>;

impl<const N: usize> Wave<N> {
    pub fn zeros(grid: &Grid2D) -> Self {
        Wave {
            comps: std::array::from_fn(|_| Array2::zeros(grid.shape())),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.comps[0].dim()
    }

    /// `Σ |ψ|² dx dz` over all components.
    pub fn norm_sqr(&self, grid: &Grid2D) -> f64 {
        self.comps
            .iter()
            .map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            * grid.cell()
    }

    /// `⟨self|other⟩` by Riemann quadrature over the grid.
    pub fn inner(&self, other: &Self, grid: &Grid2D) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (a, b) in self.comps.iter().zip(&other.comps) {
            for (x, y) in a.iter().zip(b.iter()) {
                acc += x.conj() * y;
            }
        }
        acc * grid.cell()
    }

    pub fn scale(&mut self, factor: C64) {
        for c in self.comps.iter_mut() {
            c.mapv_inplace(|v| v * factor);
        }
    }

    pub fn normalize(&mut self, grid: &Grid2D) {
        let n = self.norm_sqr(grid).sqrt();
        if n > 0.0 {
            self.scale(C64::new(1.0 / n, 0.0));
        }
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .all(|c| c.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
    }

    /// `|ψ|²` summed over components.
    pub fn density(&self) -> Array2<f64> {
        let mut d = Array2::zeros(self.shape());
        for c in &self.comps {
            d.zip_mut_with(c, |acc, v| *acc += v.norm_sqr());
        }
        d
    }

    /// `Σ qx |ψ|² dx dz`.
    pub fn expectation_qx(&self, grid: &Grid2D) -> f64 {
        let mut acc = 0.0;
        for c in &self.comps {
            for (row, &qx) in c.outer_iter().zip(&grid.qx) {
                acc += qx * row.iter().map(|v| v.norm_sqr()).sum::<f64>();
            }
        }
        acc * grid.cell()
    }

    /// `Σ_c |⟨φ|ψ_c⟩|²` for a single-component motional state `φ`.
    pub fn projector_expectation(&self, phi: &Array2<C64>, grid: &Grid2D) -> f64 {
        self.comps
            .iter()
            .map(|c| overlap(phi, c, grid).norm_sqr())
            .sum()
    }

    pub(crate) fn check_finite(&self, step: usize) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Blowup {
                step,
                what: "non-finite amplitude".into(),
            })
        }
    }
}

impl SpinorField {
    pub fn new(psi1: Array2<C64>, psi2: Array2<C64>) -> Self {
        Wave { comps: [psi1, psi2] }
    }

    pub fn psi1(&self) -> &Array2<C64> {
        &self.comps[0]
    }

    pub fn psi2(&self) -> &Array2<C64> {
        &self.comps[1]
    }
}

impl ScalarField {
    pub fn new(phi: Array2<C64>) -> Self {
        Wave { comps: [phi] }
    }

    pub fn phi(&self) -> &Array2<C64> {
        &self.comps[0]
    }
}

/// `⟨a|b⟩ = Σ conj(a)·b dx dz` for single-component arrays.
pub fn overlap(a: &Array2<C64>, b: &Array2<C64>, grid: &Grid2D) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.conj() * y;
    }
    acc * grid.cell()
}

/// Real control field sampled at the midpoints of a uniform time grid.
///
/// Samples are in V/m; times are in internal units.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlField {
    pub samples: Vec<f64>,
    pub dt: f64,
    pub t_f: f64,
}

/// Number of steps and the horizon rounded to a whole number of steps.
/// The third element reports whether rounding changed the horizon.
pub fn time_grid(t_f: f64, dt: f64) -> Result<(usize, f64, bool)> {
    if !(dt > 0.0 && dt.is_finite()) || !(t_f >= 0.0 && t_f.is_finite()) {
        return Err(Error::Config(format!("invalid time grid t_f={t_f}, dt={dt}")));
    }
    let nt = (t_f / dt).round() as usize;
    let adjusted = nt as f64 * dt;
    Ok((nt, adjusted, (adjusted - t_f).abs() > 1e-12 * t_f.max(dt)))
}

impl ControlField {
    pub fn new(samples: Vec<f64>, dt: f64) -> Self {
        let t_f = samples.len() as f64 * dt;
        ControlField { samples, dt, t_f }
    }

    pub fn zeros(nt: usize, dt: f64) -> Self {
        Self::new(vec![0.0; nt], dt)
    }

    /// Samples `f` at the step midpoints `(j + ½)·dt`.
    pub fn from_fn(nt: usize, dt: f64, f: impl Fn(f64) -> f64) -> Self {
        Self::new((0..nt).map(|j| f((j as f64 + 0.5) * dt)).collect(), dt)
    }

    pub fn nt(&self) -> usize {
        self.samples.len()
    }

    pub fn midpoint(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dt
    }

    /// `Σ u² dt`.
    pub fn fluence(&self) -> f64 {
        self.samples.iter().map(|u| u * u).sum::<f64>() * self.dt
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, u| m.max(u.abs()))
    }
}
