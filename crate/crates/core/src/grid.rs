use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform periodic grid over the relative-coordinate plane.
///
/// Arrays over the grid have shape `(nx, nz)` and are row-major, so `qz` is
/// the fast index.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub nz: usize,
    pub qx_min: f64,
    pub qx_max: f64,
    pub qz_min: f64,
    pub qz_max: f64,
    pub dx: f64,
    pub dz: f64,
    pub qx: Vec<f64>,
    pub qz: Vec<f64>,
    /// Angular wavenumbers in discrete-transform order.
    pub kx: Vec<f64>,
    pub kz: Vec<f64>,
}

/// `(qx_min, qx_max, qz_min, qz_max)`.
pub type Extents = (f64, f64, f64, f64);

fn wavenumbers(n: usize, d: f64) -> Vec<f64> {
    let dk = 2.0 * PI / (n as f64 * d);
    (0..n)
        .map(|i| {
            let j = if i < n / 2 { i as isize } else { i as isize - n as isize };
            j as f64 * dk
        })
        .collect()
}

pub fn make_grid(extents: Extents, nx: usize, nz: usize) -> Result<Grid2D> {
    let (qx_min, qx_max, qz_min, qz_max) = extents;
    if ![qx_min, qx_max, qz_min, qz_max].iter().all(|v| v.is_finite())
        || qx_max <= qx_min
        || qz_max <= qz_min
    {
        return Err(Error::Config(format!("invalid grid extents {extents:?}")));
    }
    for (name, n) in [("nx", nx), ("nz", nz)] {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "{name} = {n} must be a power of two and at least 16"
            )));
        }
    }
    let dx = (qx_max - qx_min) / nx as f64;
    let dz = (qz_max - qz_min) / nz as f64;
    Ok(Grid2D {
        nx,
        nz,
        qx_min,
        qx_max,
        qz_min,
        qz_max,
        dx,
        dz,
        qx: (0..nx).map(|i| qx_min + i as f64 * dx).collect(),
        qz: (0..nz).map(|j| qz_min + j as f64 * dz).collect(),
        kx: wavenumbers(nx, dx),
        kz: wavenumbers(nz, dz),
    })
}

impl Grid2D {
    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.nz)
    }

    /// Area element `dx·dz`.
    pub fn cell(&self) -> f64 {
        self.dx * self.dz
    }

    pub fn kx_max(&self) -> f64 {
        PI / self.dx
    }

    pub fn kz_max(&self) -> f64 {
        PI / self.dz
    }

    pub fn contains(&self, qx: f64, qz: f64, margin: f64) -> bool {
        qx - margin >= self.qx_min
            && qx + margin <= self.qx_max
            && qz - margin >= self.qz_min
            && qz + margin <= self.qz_max
    }
}
