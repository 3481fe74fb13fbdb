#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex64 as C64;

use rydci::grid::{make_grid, Grid2D};
use rydci::params::{build_model, InternalModel, ModelConstants, PhysicalParams};
use rydci::surfaces::CoefficientFields;
use rydci::units::UnitSystem;

pub type M2 = [[C64; 2]; 2];

fn mul(a: &M2, b: &M2) -> M2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// `exp(m)` by scaling and squaring a truncated Taylor series.
pub fn expm(m: &M2) -> M2 {
    let norm = m.iter().flatten().map(|v| v.norm()).sum::<f64>();
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let scale = 2f64.powi(s);
    let a = m.map(|row| row.map(|v| v / scale));
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let mut sum = [[one, zero], [zero, one]];
    let mut term = sum;
    for k in 1..=24 {
        term = mul(&term, &a).map(|row| row.map(|v| v / k as f64));
        for i in 0..2 {
            for j in 0..2 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        sum = mul(&sum, &sum);
    }
    sum
}

/// `exp(−i·dt·H)` for `H = [[S + V + G, W], [W, S + V − G]]`.
pub fn dense_step(s: f64, v: f64, w: f64, g: f64, dt: f64) -> M2 {
    let mi = C64::new(0.0, -dt);
    let h = [
        [C64::new(s + v + g, 0.0), C64::new(w, 0.0)],
        [C64::new(w, 0.0), C64::new(s + v - g, 0.0)],
    ];
    expm(&h.map(|row| row.map(|x| x * mi)))
}

pub fn strontium_model() -> InternalModel {
    build_model(&PhysicalParams::strontium_88(), UnitSystem::nm_us()).unwrap().1
}

/// Two-surface model with the given couplings in nm/μs units.
pub fn synthetic_model(mu: f64, wx: f64, wz: f64, g_slope: f64, f0: f64, u_ex: f64, x0: f64) -> InternalModel {
    InternalModel {
        consts: ModelConstants {
            mu,
            omega_bar_x: wx,
            omega_bar_z: wz,
            z0: 4310.0,
            x0,
            u_ex_r0: u_ex,
            f0,
            g_slope,
            field_coupling: 1.519,
        },
        units: UnitSystem::nm_us(),
    }
}

/// The strontium trap with both spin couplings switched off.
pub fn decoupled_model() -> InternalModel {
    let c = strontium_model().consts;
    synthetic_model(c.mu, c.omega_bar_x, c.omega_bar_z, 0.0, 0.0, 0.0, c.x0)
}

pub fn grid(lx: f64, nx: usize, lz: f64, nz: usize) -> Grid2D {
    make_grid((-lx, lx, -lz, lz), nx, nz).unwrap()
}

pub fn uniform_coefficients(grid: &Grid2D, s: f64, w: f64, g: f64) -> CoefficientFields {
    CoefficientFields {
        s: Array2::from_elem(grid.shape(), s),
        w: Array2::from_elem(grid.shape(), w),
        g: Array2::from_elem(grid.shape(), g),
    }
}

/// `Σ |a − b|² dx dz` over all components.
pub fn distance_sqr(a: &[Array2<C64>], b: &[Array2<C64>], grid: &Grid2D) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>())
        .sum::<f64>()
        * grid.cell()
}
