//! Two-dimensional complex FFT over row-major `(nx, nz)` buffers.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

/// Plans and scratch space for repeated spectral multiplies on one grid.
///
/// [`Fft2::spectral_multiply`] transforms along `z`, transposes, transforms
/// along `x`, multiplies by a kernel stored in the transposed `(nz, nx)`
/// layout, and undoes all of it. The kernel must carry the `1/(nx·nz)`
/// normalization.
pub struct Fft2 {
    nx: usize,
    nz: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_z: Arc<dyn Fft<f64>>,
    inv_z: Arc<dyn Fft<f64>>,
    transposed: Vec<C64>,
    scratch: Vec<C64>,
}

impl Fft2 {
    pub fn new(nx: usize, nz: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd_x = planner.plan_fft_forward(nx);
        let inv_x = planner.plan_fft_inverse(nx);
        let fwd_z = planner.plan_fft_forward(nz);
        let inv_z = planner.plan_fft_inverse(nz);
        let scratch_len = [&fwd_x, &inv_x, &fwd_z, &inv_z]
            .iter()
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Fft2 {
            nx,
            nz,
            fwd_x,
            inv_x,
            fwd_z,
            inv_z,
            transposed: vec![C64::new(0.0, 0.0); nx * nz],
            scratch: vec![C64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.nz)
    }

    pub fn spectral_multiply(&mut self, data: &mut [C64], kernel: &[C64]) {
        let (nx, nz) = (self.nx, self.nz);
        debug_assert_eq!(data.len(), nx * nz);
        debug_assert_eq!(kernel.len(), nx * nz);
        self.fwd_z.process_with_scratch(data, &mut self.scratch);
        transpose(data, &mut self.transposed, nx, nz);
        self.fwd_x.process_with_scratch(&mut self.transposed, &mut self.scratch);
        for (v, k) in self.transposed.iter_mut().zip(kernel) {
            *v *= k;
        }
        self.inv_x.process_with_scratch(&mut self.transposed, &mut self.scratch);
        transpose(&self.transposed, data, nz, nx);
        self.inv_z.process_with_scratch(data, &mut self.scratch);
    }

    /// Unnormalized forward transform, result in the transposed `(nz, nx)`
    /// layout.
    pub fn forward_transposed(&mut self, data: &[C64]) -> Vec<C64> {
        let mut rows = data.to_vec();
        self.fwd_z.process_with_scratch(&mut rows, &mut self.scratch);
        let mut out = vec![C64::new(0.0, 0.0); rows.len()];
        transpose(&rows, &mut out, self.nx, self.nz);
        self.fwd_x.process_with_scratch(&mut out, &mut self.scratch);
        out
    }
}

/// `dst[j*rows + i] = src[i*cols + j]` for a `rows × cols` source.
fn transpose(src: &[C64], dst: &mut [C64], rows: usize, cols: usize) {
    const B: usize = 16;
    for i0 in (0..rows).step_by(B) {
        for j0 in (0..cols).step_by(B) {
            for i in i0..(i0 + B).min(rows) {
                for j in j0..(j0 + B).min(cols) {
                    dst[j * rows + i] = src[i * cols + j];
                }
            }
        }
    }
}
