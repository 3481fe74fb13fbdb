//! Diagnostics of wavefunctions and trajectories.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::grid::Grid2D;
use crate::propagator::{PropagationRecord, Wave};
use crate::surfaces::AdiabaticBasis;

/// Hysteresis band of [`crossing_count`] in nm.
pub const CROSSING_BAND_NM: f64 = 0.5;

/// A uniformly sampled real time series.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub label: String,
    pub t: Vec<f64>,
    pub value: Vec<f64>,
}

impl Trace {
    pub fn new(label: impl Into<String>, t: Vec<f64>, value: Vec<f64>) -> Self {
        debug_assert_eq!(t.len(), value.len());
        Trace {
            label: label.into(),
            t,
            value,
        }
    }

    pub fn last(&self) -> Option<f64> {
        self.value.last().copied()
    }

    /// Values with `t ≥ t_from`.
    pub fn tail_from(&self, t_from: f64) -> impl Iterator<Item = f64> + '_ {
        self.t
            .iter()
            .zip(&self.value)
            .filter(move |(t, _)| **t >= t_from - 1e-12)
            .map(|(_, v)| *v)
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.value
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

pub fn expectation_qx<const N: usize>(psi: &Wave<N>, grid: &Grid2D) -> f64 {
    psi.expectation_qx(grid)
}

pub fn density<const N: usize>(psi: &Wave<N>) -> Array2<f64> {
    psi.density()
}

pub fn integrate(field: &Array2<f64>, grid: &Grid2D) -> f64 {
    field.sum() * grid.cell()
}

/// Norm evaluated from the discrete Fourier coefficients.
pub fn momentum_norm<const N: usize>(psi: &Wave<N>, grid: &Grid2D) -> f64 {
    let mut fft = Fft2::new(grid.nx, grid.nz);
    psi.comps
        .iter()
        .map(|c| {
            fft.forward_transposed(c.as_slice().expect("standard layout"))
                .iter()
                .map(|v| v.norm_sqr())
                .sum::<f64>()
        })
        .sum::<f64>()
        * grid.cell()
        / grid.len() as f64
}

pub fn qx_trace(record: &PropagationRecord, label: &str) -> Trace {
    Trace::new(label, record.times.clone(), record.qx.clone())
}

/// Target overlap along a recorded trajectory.
pub fn j1_of_t(record: &PropagationRecord) -> Result<Trace> {
    if record.j1.len() != record.times.len() {
        return Err(Error::Config("trajectory was recorded without a target".into()));
    }
    Ok(Trace::new("J1", record.times.clone(), record.j1.clone()))
}

/// Populations `(p+, p−)` of the adiabatic states.
pub fn adiabatic_populations<const N: usize>(
    psi: &Wave<N>,
    basis: &AdiabaticBasis,
    grid: &Grid2D,
) -> Result<(f64, f64)> {
    if N != 2 {
        return Err(Error::Mode {
            mode: "bo",
            what: "adiabatic populations need a two-component state".into(),
        });
    }
    let (a, b) = (&psi.comps[0], &psi.comps[1]);
    let mut plus = 0.0;
    let mut minus = 0.0;
    for (((x, y), c), s) in a.iter().zip(b.iter()).zip(basis.cos.iter()).zip(basis.sin.iter()) {
        plus += (x * *c + y * *s).norm_sqr();
        minus += (y * *c - x * *s).norm_sqr();
    }
    Ok((plus * grid.cell(), minus * grid.cell()))
}

/// Number of sign changes of `value − reference`, ignoring excursions that
/// stay inside `±band`.
pub fn crossing_count(values: &[f64], reference: f64, band: f64) -> usize {
    let mut side = 0i8;
    let mut count = 0;
    for v in values {
        let d = v - reference;
        let s = if d > band {
            1
        } else if d < -band {
            -1
        } else {
            0
        };
        if s != 0 {
            if side != 0 && s != side {
                count += 1;
            }
            side = s;
        }
    }
    count
}
