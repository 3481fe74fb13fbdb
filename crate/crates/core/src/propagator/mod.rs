//! Split-operator propagation of the two-surface spinor equation and its
//! single-surface limit.
//!
//! One step is the Strang product `K(dt/2)·P(u_mid, dt)·K(dt/2)` where `K` is
//! the free kinetic factor, applied in momentum space, and `P` the pointwise
//! potential factor including the control field at the step midpoint.
//! Consecutive kinetic halves are fused into one full kinetic factor during
//! long runs, so a run costs one transform pair per component per step.

mod local;
mod wave;

use ndarray::Array2;
use num_complex::Complex64 as C64;

pub use local::{spin_propagator, LocalOperator, ScalarLocal, SpinorLocal};
pub use wave::{overlap, time_grid, ControlField, ScalarField, SpinorField, Wave};

use crate::error::Result;
use crate::fft::Fft2;
use crate::grid::Grid2D;
use crate::params::InternalModel;
use crate::surfaces::CoefficientFields;

/// Steps between finiteness audits of the state.
pub const AUDIT_INTERVAL: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn reverse(self) -> bool {
        self == Direction::Backward
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kick {
    Half,
    Full,
}

/// `exp(−i(kx² + kz²)·dt/(2μ))` on the `(nx, nz)` momentum grid.
pub fn kinetic_phase(grid: &Grid2D, mu: f64, dt: f64) -> Array2<C64> {
    Array2::from_shape_fn(grid.shape(), |(i, j)| {
        let k2 = grid.kx[i].powi(2) + grid.kz[j].powi(2);
        C64::from_polar(1.0, -k2 * dt / (2.0 * mu))
    })
}

/// Kinetic kernel in the transposed `(nz, nx)` layout of [`Fft2`], including
/// the inverse-transform normalization.
fn kinetic_kernel(grid: &Grid2D, mu: f64, dt: f64) -> Vec<C64> {
    let norm = 1.0 / grid.len() as f64;
    let mut kernel = Vec::with_capacity(grid.len());
    for kz in &grid.kz {
        for kx in &grid.kx {
            let k2 = kx * kx + kz * kz;
            kernel.push(C64::from_polar(norm, -k2 * dt / (2.0 * mu)));
        }
    }
    kernel
}

/// What to record during [`Propagator::propagate_forward`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RecordSpec {
    /// Steps between trace samples; zero records only the endpoints.
    pub cadence: usize,
    /// Step indices at which full densities are kept.
    pub frame_steps: Vec<usize>,
}

impl RecordSpec {
    pub fn every(cadence: usize) -> Self {
        RecordSpec {
            cadence,
            frame_steps: Vec::new(),
        }
    }

    fn wants(&self, step: usize, nt: usize) -> bool {
        step == 0
            || step == nt
            || (self.cadence > 0 && step % self.cadence == 0)
            || self.frame_steps.contains(&step)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PropagationRecord {
    pub times: Vec<f64>,
    pub qx: Vec<f64>,
    pub norm: Vec<f64>,
    /// Target overlap, filled when a target state is supplied.
    pub j1: Vec<f64>,
    pub frames: Vec<(f64, Array2<f64>)>,
}

pub struct Propagator<const N: usize, L> {
    grid: Grid2D,
    dt: f64,
    fft: Fft2,
    kin_half: Vec<C64>,
    kin_full: Vec<C64>,
    kin_half_rev: Vec<C64>,
    kin_full_rev: Vec<C64>,
    local: L,
    coupling: Vec<f64>,
    row_phase: Vec<C64>,
    mask: Option<Array2<f64>>,
}

pub type SpinorPropagator = Propagator<2, SpinorLocal>;
pub type BoPropagator = Propagator<1, ScalarLocal>;

/// Absorbing border: `cos⁸` of the depth into a band of `width` along every
/// edge, 1 inside. Zero width gives `None`.
pub fn absorbing_mask(grid: &Grid2D, width: f64) -> Option<Array2<f64>> {
    if width <= 0.0 {
        return None;
    }
    let ramp = |axis: &[f64]| -> Vec<f64> {
        let (lo, hi) = (axis[0], axis[axis.len() - 1]);
        axis.iter()
            .map(|q| {
                let s = (q - lo).min(hi - q);
                if s >= width {
                    1.0
                } else {
                    (0.5 * std::f64::consts::PI * (width - s) / width).cos().powi(8)
                }
            })
            .collect()
    };
    let (mx, mz) = (ramp(&grid.qx), ramp(&grid.qz));
    Some(Array2::from_shape_fn(grid.shape(), |(i, j)| mx[i] * mz[j]))
}

/// Control coupling `κ·(X0 − qx/2)` per grid row [energy per V/m].
pub fn control_coupling(model: &InternalModel, grid: &Grid2D) -> Vec<f64> {
    let c = &model.consts;
    grid.qx
        .iter()
        .map(|qx| c.field_coupling * (c.x0 - 0.5 * qx))
        .collect()
}

impl SpinorPropagator {
    pub fn spinor(model: &InternalModel, grid: &Grid2D, coeffs: &CoefficientFields, dt: f64) -> Self {
        Propagator::new(
            grid.clone(),
            model.mu(),
            dt,
            SpinorLocal::new(coeffs, dt),
            control_coupling(model, grid),
        )
    }
}

impl BoPropagator {
    pub fn born_oppenheimer(model: &InternalModel, grid: &Grid2D, e_minus: &Array2<f64>, dt: f64) -> Self {
        Propagator::new(
            grid.clone(),
            model.mu(),
            dt,
            ScalarLocal::new(e_minus, dt),
            control_coupling(model, grid),
        )
    }
}

impl<const N: usize, L: LocalOperator<N>> Propagator<N, L> {
    /// `coupling[i]` multiplies the control field on row `qx[i]`.
    pub fn new(grid: Grid2D, mu: f64, dt: f64, local: L, coupling: Vec<f64>) -> Self {
        assert_eq!(coupling.len(), grid.nx);
        let kin_half = kinetic_kernel(&grid, mu, 0.5 * dt);
        let kin_full = kinetic_kernel(&grid, mu, dt);
        let conj = |v: &[C64]| v.iter().map(|c| c.conj()).collect::<Vec<_>>();
        Propagator {
            fft: Fft2::new(grid.nx, grid.nz),
            kin_half_rev: conj(&kin_half),
            kin_full_rev: conj(&kin_full),
            kin_half,
            kin_full,
            local,
            row_phase: vec![C64::new(1.0, 0.0); grid.nx],
            mask: None,
            coupling,
            grid,
            dt,
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn coupling(&self) -> &[f64] {
        &self.coupling
    }

    /// Swaps in a new per-row control coupling and returns the old one.
    pub fn replace_coupling(&mut self, coupling: Vec<f64>) -> Vec<f64> {
        assert_eq!(coupling.len(), self.grid.nx);
        std::mem::replace(&mut self.coupling, coupling)
    }

    /// Installs an absorbing mask applied after every potential factor in
    /// either direction. Steps stop being unitary while a mask is set.
    pub fn set_mask(&mut self, mask: Option<Array2<f64>>) {
        if let Some(m) = &mask {
            assert_eq!(m.dim(), self.grid.shape());
        }
        self.mask = mask;
    }

    pub fn kick(&mut self, wave: &mut Wave<N>, kick: Kick, dir: Direction) {
        let kernel = match (kick, dir) {
            (Kick::Half, Direction::Forward) => &self.kin_half,
            (Kick::Full, Direction::Forward) => &self.kin_full,
            (Kick::Half, Direction::Backward) => &self.kin_half_rev,
            (Kick::Full, Direction::Backward) => &self.kin_full_rev,
        };
        for c in wave.comps.iter_mut() {
            self.fft
                .spectral_multiply(c.as_slice_mut().expect("standard layout"), kernel);
        }
    }

    /// Full potential factor with control value `u` [V/m].
    pub fn apply_local(&mut self, wave: &mut Wave<N>, u: f64, dir: Direction) {
        let dt = self.dt;
        for (p, c) in self.row_phase.iter_mut().zip(&self.coupling) {
            *p = C64::from_polar(1.0, -u * c * dt);
        }
        self.local.apply(&mut wave.comps, &self.row_phase, dir.reverse());
        if let Some(mask) = &self.mask {
            for c in wave.comps.iter_mut() {
                c.zip_mut_with(mask, |p, m| *p *= *m);
            }
        }
    }

    /// One unfused Strang step.
    pub fn step(&mut self, wave: &mut Wave<N>, u_mid: f64, dir: Direction) {
        self.kick(wave, Kick::Half, dir);
        self.apply_local(wave, u_mid, dir);
        self.kick(wave, Kick::Half, dir);
    }

    /// Propagates across the whole field in `dir`, calling `observe(step, ψ)`
    /// with the physical state at step indices selected by `wants`.
    ///
    /// Forward runs start at step 0 and end at `nt`; backward runs start at
    /// `nt` and end at 0.
    pub fn run<W, O>(
        &mut self,
        wave: &mut Wave<N>,
        field: &ControlField,
        dir: Direction,
        wants: W,
        mut observe: O,
    ) -> Result<()>
    where
        W: Fn(usize) -> bool,
        O: FnMut(usize, &Wave<N>),
    {
        let nt = field.nt();
        let start = if dir == Direction::Forward { 0 } else { nt };
        observe(start, wave);
        if nt == 0 {
            return Ok(());
        }
        self.kick(wave, Kick::Half, dir);
        for n in 0..nt {
            let (j, landed) = match dir {
                Direction::Forward => (n, n + 1),
                Direction::Backward => (nt - 1 - n, nt - 1 - n),
            };
            self.apply_local(wave, field.samples[j], dir);
            let last = n + 1 == nt;
            if last || wants(landed) {
                self.kick(wave, Kick::Half, dir);
                observe(landed, wave);
                if !last {
                    self.kick(wave, Kick::Half, dir);
                }
            } else {
                self.kick(wave, Kick::Full, dir);
            }
            if (n + 1) % AUDIT_INTERVAL == 0 || last {
                wave.check_finite(n + 1)?;
            }
        }
        Ok(())
    }

    /// Forward propagation from `psi0` recording the traces in `spec`.
    /// When `target` is given, the overlap `Σ_c |⟨φ|ψ_c⟩|²` is recorded too.
    pub fn propagate_forward(
        &mut self,
        psi0: &Wave<N>,
        field: &ControlField,
        spec: &RecordSpec,
        target: Option<&Array2<C64>>,
    ) -> Result<(Wave<N>, PropagationRecord)> {
        let mut wave = psi0.clone();
        let mut record = PropagationRecord::default();
        let nt = field.nt();
        let grid = self.grid.clone();
        let dt = self.dt;
        self.run(
            &mut wave,
            field,
            Direction::Forward,
            |s| spec.wants(s, nt),
            |s, psi| {
                let on_cadence = s == 0 || s == nt || (spec.cadence > 0 && s % spec.cadence == 0);
                if on_cadence {
                    record.times.push(s as f64 * dt);
                    record.qx.push(psi.expectation_qx(&grid));
                    record.norm.push(psi.norm_sqr(&grid));
                    if let Some(phi) = target {
                        record.j1.push(psi.projector_expectation(phi, &grid));
                    }
                }
                if spec.frame_steps.contains(&s) {
                    record.frames.push((s as f64 * dt, psi.density()));
                }
            },
        )?;
        Ok((wave, record))
    }

    /// Evolves a terminal state back to `t = 0` under `field`.
    pub fn propagate_backward(&mut self, psi_tf: &Wave<N>, field: &ControlField) -> Result<Wave<N>> {
        let mut wave = psi_tf.clone();
        self.run(&mut wave, field, Direction::Backward, |_| false, |_, _| {})?;
        Ok(wave)
    }

    /// Final state only.
    pub fn evolve(&mut self, psi0: &Wave<N>, field: &ControlField) -> Result<Wave<N>> {
        let mut wave = psi0.clone();
        self.run(&mut wave, field, Direction::Forward, |_| false, |_, _| {})?;
        Ok(wave)
    }
}

/// Applies one potential factor to a spinor directly from coefficient fields.
///
/// This is the unoptimized form of the factor used inside
/// [`SpinorPropagator`]; `coupling[i]` is the control coupling on row `i`.
pub fn potential_step(
    psi: &SpinorField,
    coeffs: &CoefficientFields,
    coupling: &[f64],
    u_mid: f64,
    dt: f64,
) -> SpinorField {
    let mut out = psi.clone();
    for ((i, j), s) in coeffs.s.indexed_iter() {
        let m = spin_propagator(
            *s,
            u_mid * coupling[i],
            coeffs.w[[i, j]],
            coeffs.g[[i, j]],
            dt,
        );
        let (a, b) = (psi.comps[0][[i, j]], psi.comps[1][[i, j]]);
        out.comps[0][[i, j]] = m[0][0] * a + m[0][1] * b;
        out.comps[1][[i, j]] = m[1][0] * a + m[1][1] * b;
    }
    out
}

/// Strang step assembled from [`potential_step`] and the kinetic phase.
pub fn step_spinor(
    psi: &SpinorField,
    coeffs: &CoefficientFields,
    coupling: &[f64],
    u_mid: f64,
    grid: &Grid2D,
    mu: f64,
    dt: f64,
) -> SpinorField {
    let mut fft = Fft2::new(grid.nx, grid.nz);
    let kernel = kinetic_kernel(grid, mu, 0.5 * dt);
    let mut out = psi.clone();
    for c in out.comps.iter_mut() {
        fft.spectral_multiply(c.as_slice_mut().unwrap(), &kernel);
    }
    let mut out = potential_step(&out, coeffs, coupling, u_mid, dt);
    for c in out.comps.iter_mut() {
        fft.spectral_multiply(c.as_slice_mut().unwrap(), &kernel);
    }
    out
}
