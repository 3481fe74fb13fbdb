//! Objective functional and the monotonically convergent two-sweep field
//! optimization.
//!
//! Per iteration `k`:
//!
//! 1. `λ(t_f) = Ô ψ^{k−1}(t_f)` where `Ô` projects every spin component on
//!    the target motional state.
//! 2. Backward sweep: `λ` evolves under `ū^k` while `ψ^{k−1}` is carried back
//!    under `u^{k−1}`, and
//!    `ū^k = (1 − η) u^{k−1} − (η/α0) Im⟨λ|N|ψ^{k−1}⟩`.
//! 3. Forward sweep: `ψ^k` evolves under `u^k` while `λ` is carried forward
//!    under `ū^k`, and `u^k = (1 − ζ) ū^k − (ζ/α0) Im⟨λ|N|ψ^k⟩`.
//!
//! `N = −κ(X0 − qx/2)` is the control operator in `∂ψ/∂t = (A + iNu)ψ`.
//! Trajectories are never stored: the partner state of each sweep is
//! co-propagated with exact inverse steps.
//!
//! With [`UpdateRule::Exact`] the first-order value of each step is refined
//! to the maximizer of the exact per-step gain, which keeps `J` monotone at
//! finite `dt`. [`Gauge::Centered`] removes the mean of the coupling for the
//! duration of the run.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::params::InternalModel;
use crate::propagator::{
    overlap, ControlField, Direction, Kick, LocalOperator, Propagator, ScalarField, SpinorField, Wave,
};

/// Harmonic ground state of the relative motion centred at `center`,
/// normalized on the grid.
pub fn gaussian_state(model: &InternalModel, grid: &Grid2D, center: (f64, f64)) -> Array2<C64> {
    let c = &model.consts;
    let ell = (c.mu * c.mu * c.omega_bar_x * c.omega_bar_z / (std::f64::consts::PI.powi(2))).powf(0.25);
    let mut phi = Array2::from_shape_fn(grid.shape(), |(i, j)| {
        let dx = grid.qx[i] - center.0;
        let dz = grid.qz[j] - center.1;
        C64::new(
            ell * (-0.5 * c.mu * (c.omega_bar_x * dx * dx + c.omega_bar_z * dz * dz)).exp(),
            0.0,
        )
    });
    let norm = phi.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.cell();
    phi.mapv_inplace(|v| v / norm.sqrt());
    phi
}

/// Checks that a packet at `center` sits at least four density standard
/// deviations inside the grid.
pub fn check_margin(model: &InternalModel, grid: &Grid2D, center: (f64, f64)) -> Result<()> {
    let sx = model.width_x() / std::f64::consts::SQRT_2;
    let sz = model.width_z() / std::f64::consts::SQRT_2;
    let ok = center.0 - 4.0 * sx >= grid.qx_min
        && center.0 + 4.0 * sx <= grid.qx_max
        && center.1 - 4.0 * sz >= grid.qz_min
        && center.1 + 4.0 * sz <= grid.qz_max;
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "packet at ({}, {}) is closer than 4σ to the grid edge",
            center.0, center.1
        )))
    }
}

/// Initial spinor state: the Gaussian on `|π2⟩`.
pub fn initial_packet(model: &InternalModel, grid: &Grid2D, center: (f64, f64)) -> Result<SpinorField> {
    check_margin(model, grid, center)?;
    Ok(SpinorField::new(
        Array2::zeros(grid.shape()),
        gaussian_state(model, grid, center),
    ))
}

/// Initial single-surface state.
pub fn initial_packet_bo(model: &InternalModel, grid: &Grid2D, center: (f64, f64)) -> Result<ScalarField> {
    check_margin(model, grid, center)?;
    Ok(ScalarField::new(gaussian_state(model, grid, center)))
}

/// Target motional state `φd`.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetSpec {
    pub center: (f64, f64),
    pub phi: Array2<C64>,
    grid: Grid2D,
}

impl TargetSpec {
    pub fn new(model: &InternalModel, grid: &Grid2D, center: (f64, f64)) -> Result<Self> {
        check_margin(model, grid, center)?;
        Ok(TargetSpec {
            center,
            phi: gaussian_state(model, grid, center),
            grid: grid.clone(),
        })
    }

    /// Wraps an arbitrary motional state; it is normalized on `grid`.
    pub fn from_state(phi: Array2<C64>, grid: &Grid2D) -> Self {
        let mut wave = ScalarField::new(phi);
        wave.normalize(grid);
        let [phi] = wave.comps;
        TargetSpec {
            center: (f64::NAN, f64::NAN),
            phi,
            grid: grid.clone(),
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
}

/// `Ô ψ`: every component replaced by `φd·⟨φd|ψ_c⟩`.
pub fn apply_target_operator<const N: usize>(psi: &Wave<N>, target: &TargetSpec) -> Wave<N> {
    Wave {
        comps: std::array::from_fn(|c| {
            let amp = overlap(&target.phi, &psi.comps[c], &target.grid);
            target.phi.mapv(|v| v * amp)
        }),
    }
}

/// Terminal objective `⟨ψ|Ô|ψ⟩`.
pub fn j1_terminal<const N: usize>(psi: &Wave<N>, target: &TargetSpec) -> f64 {
    psi.projector_expectation(&target.phi, &target.grid)
}

/// Fluence penalty `α0 Σ u² dt`.
pub fn j2_fluence(u: &ControlField, alpha0: f64) -> f64 {
    alpha0 * u.fluence()
}

/// `Im⟨λ|N|ψ⟩` with `N = −coupling(qx)` acting on every component.
pub fn im_control_overlap<const N: usize>(
    lambda: &Wave<N>,
    psi: &Wave<N>,
    coupling: &[f64],
    grid: &Grid2D,
) -> f64 {
    let mut acc = 0.0;
    for (l, p) in lambda.comps.iter().zip(&psi.comps) {
        for ((lr, pr), c) in l.outer_iter().zip(p.outer_iter()).zip(coupling) {
            let row: f64 = lr.iter().zip(pr.iter()).map(|(a, b)| (a.conj() * b).im).sum();
            acc -= c * row;
        }
    }
    acc * grid.cell()
}

/// `ū = (1 − η) u^{k−1} − (η/α0) Im⟨λ|N|ψ^{k−1}⟩`.
pub fn backward_field_update(im_overlap: f64, u_prev: f64, eta: f64, alpha0: f64) -> f64 {
    (1.0 - eta) * u_prev - eta / alpha0 * im_overlap
}

/// `u = (1 − ζ) ū − (ζ/α0) Im⟨λ|N|ψ^k⟩`.
pub fn forward_field_update(im_overlap: f64, u_bar: f64, zeta: f64, alpha0: f64) -> f64 {
    (1.0 - zeta) * u_bar - zeta / alpha0 * im_overlap
}

/// Row-resolved overlap `ρ_i = Σ_{spin, qz} conj(λ)·ψ dx dz` along `qx[i]`.
///
/// Since the control operator depends on `qx` only, `Im⟨λ|N|ψ⟩` and the
/// exact per-step gain below are functions of these row sums.
pub fn row_overlaps<const N: usize>(lambda: &Wave<N>, psi: &Wave<N>, grid: &Grid2D, out: &mut Vec<C64>) {
    out.clear();
    out.resize(grid.nx, C64::new(0.0, 0.0));
    for (l, p) in lambda.comps.iter().zip(&psi.comps) {
        for ((lr, pr), acc) in l.outer_iter().zip(p.outer_iter()).zip(out.iter_mut()) {
            for (a, b) in lr.iter().zip(pr.iter()) {
                *acc += a.conj() * b;
            }
        }
    }
    let cell = grid.cell();
    for v in out.iter_mut() {
        *v *= cell;
    }
}

/// Gain of one time step when its field value moves from `u_ref` to `u`:
///
/// `2 Re Σ_i ρ_i (exp(−i(u − u_ref)·c_i·dt) − 1) − α0·dt·(u² − u_ref²)`.
///
/// Summed over steps, these gains add up (with the terminal term) to the
/// exact change of the discretized objective, so any choice with a
/// non-negative gain keeps the iteration monotone.
pub fn step_gain(rho: &[C64], coupling: &[f64], u_ref: f64, u: f64, alpha0: f64, dt: f64) -> f64 {
    let d = (u - u_ref) * dt;
    let mut acc = 0.0;
    for (r, c) in rho.iter().zip(coupling) {
        let th = d * c;
        let half = (0.5 * th).sin();
        // exp(−iθ) − 1 = −2 sin²(θ/2) − i sin θ
        let e = C64::new(-2.0 * half * half, -th.sin());
        acc += (r * e).re;
    }
    2.0 * acc - alpha0 * dt * (u * u - u_ref * u_ref)
}

fn step_gain_derivatives(rho: &[C64], coupling: &[f64], u_ref: f64, u: f64, alpha0: f64, dt: f64) -> (f64, f64) {
    let d = (u - u_ref) * dt;
    let (mut g1, mut g2) = (0.0, 0.0);
    for (r, c) in rho.iter().zip(coupling) {
        let z = r * C64::from_polar(1.0, -d * c);
        g1 += c * z.im;
        g2 += c * c * z.re;
    }
    (2.0 * dt * g1 - 2.0 * alpha0 * dt * u, -2.0 * dt * dt * g2 - 2.0 * alpha0 * dt)
}

/// Field value maximizing [`step_gain`], started from the first-order value
/// `u_lin`. The returned value never has a negative gain.
///
/// Newton steps are used where the gain is concave; elsewhere the iteration
/// falls back to gradient ascent starting from the step allowed by the
/// curvature bound `2dt²Σc²|ρ| + 2α0·dt`.
pub fn maximize_step_gain(rho: &[C64], coupling: &[f64], u_ref: f64, u_lin: f64, alpha0: f64, dt: f64) -> f64 {
    let gain = |u: f64| step_gain(rho, coupling, u_ref, u, alpha0, dt);
    let mut u = u_lin;
    let mut best = gain(u);
    // Backtrack toward u_ref, along which the gain initially rises.
    let mut tries = 0;
    while best < 0.0 && tries < 60 {
        u = u_ref + 0.5 * (u - u_ref);
        best = gain(u);
        tries += 1;
    }
    if best < 0.0 {
        return u_ref;
    }
    let bound = 2.0 * dt * dt * rho.iter().zip(coupling).map(|(r, c)| c * c * r.norm()).sum::<f64>() + 2.0 * alpha0 * dt;
    for _ in 0..100 {
        let (g1, g2) = step_gain_derivatives(rho, coupling, u_ref, u, alpha0, dt);
        if g1 == 0.0 {
            break;
        }
        if g2 < 0.0 {
            let next = u - g1 / g2;
            let value = gain(next);
            if value >= best {
                let done = (next - u).abs() <= 1e-13 * (1.0 + u.abs());
                u = next;
                best = value;
                if done {
                    break;
                }
                continue;
            }
        }
        // Bounded ascent step, doubled while the gain keeps rising.
        let mut step = g1 / bound;
        let mut value = gain(u + step);
        if !(value >= best) || u + step == u {
            break;
        }
        for _ in 0..60 {
            let wider = gain(u + 2.0 * step);
            if !(wider > value) {
                break;
            }
            step *= 2.0;
            value = wider;
        }
        u += step;
        best = value;
    }
    u
}

/// Rectangular pulse of `amplitude` on `[start, end]`.
pub fn rectangular_pulse(nt: usize, dt: f64, amplitude: f64, start: f64, end: f64) -> ControlField {
    ControlField::from_fn(nt, dt, |t| if t >= start && t <= end { amplitude } else { 0.0 })
}

/// `E0·exp(−(t − t0)²/(2σ²))`.
pub fn gaussian_pulse(nt: usize, dt: f64, e0: f64, t0: f64, sigma: f64) -> ControlField {
    ControlField::from_fn(nt, dt, |t| e0 * (-(t - t0).powi(2) / (2.0 * sigma * sigma)).exp())
}

/// Relative field change below which an iteration counts as a fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct McaConfig {
    pub eta: f64,
    pub zeta: f64,
    /// Fluence weight, for fields in V/m and time in internal units.
    pub alpha0: f64,
    pub max_iters: usize,
    /// Convergence threshold on `|ΔJ|`.
    pub stop_tol: f64,
    /// Consecutive iterations below `stop_tol` required to stop.
    pub patience: usize,
    /// Largest tolerated decrease of `J` between iterations.
    pub monotonic_tol: f64,
    pub rule: UpdateRule,
    pub gauge: Gauge,
}

/// How each sweep turns the overlap with the costate into a field value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum UpdateRule {
    /// The first-order formulas [`backward_field_update`] and
    /// [`forward_field_update`] as they stand.
    Linear,
    /// The first-order value refined to the maximizer of the exact gain of
    /// the discrete step ([`maximize_step_gain`]), then mixed with `η`/`ζ`.
    /// Coincides with `Linear` as `dt → 0`.
    #[default]
    Exact,
}

/// Constant added to the control coupling while optimizing.
///
/// A constant coupling term only rotates the global phase, so it leaves
/// every observable and `J1` unchanged. It does change the relative phase
/// between a state and its costate whenever they are driven by different
/// fields, which rotates the update direction and slows the iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Gauge {
    /// Coupling exactly as the propagator holds it.
    Literal,
    /// Coupling shifted by minus its mean over the initial and target
    /// densities.
    #[default]
    Centered,
}

impl Default for McaConfig {
    fn default() -> Self {
        McaConfig {
            eta: 1.0,
            zeta: 1.0,
            alpha0: 0.01,
            max_iters: 200,
            stop_tol: 1e-6,
            patience: 5,
            monotonic_tol: 1e-6,
            rule: UpdateRule::Exact,
            gauge: Gauge::Centered,
        }
    }
}

impl McaConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eta", self.eta), ("zeta", self.zeta)] {
            if !(v > 0.0 && v <= 2.0) {
                return Err(Error::Config(format!("{name} = {v} must lie in (0, 2]")));
            }
        }
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return Err(Error::Config("alpha0 must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    FixedPoint,
    MaxIters,
}

/// Histories of an optimization; index 0 is the guess.
#[derive(Clone, Debug, PartialEq)]
pub struct McaState {
    pub iteration: usize,
    pub u: ControlField,
    pub u_bar: Option<ControlField>,
    pub j: Vec<f64>,
    pub j1: Vec<f64>,
    pub j2: Vec<f64>,
    pub converged: bool,
    pub stop: StopReason,
}

impl McaState {
    /// First iteration whose `J` is within `frac` of the final gain.
    pub fn plateau_iteration(&self, frac: f64) -> usize {
        let first = self.j[0];
        let last = *self.j.last().unwrap();
        let gain = last - first;
        self.j
            .iter()
            .position(|&j| j - first >= frac * gain)
            .unwrap_or(self.j.len() - 1)
    }
}

pub struct McaOutcome<const N: usize> {
    pub state: McaState,
    pub psi_tf: Wave<N>,
}

/// Runs the two-sweep optimization starting from `guess`.
///
/// `on_iteration` is called after the guess evaluation and after every
/// iteration.
///
/// With [`Gauge::Centered`] the propagator's coupling is shifted for the
/// duration of the run and restored afterwards; `psi_tf` is then correct up
/// to a global phase.
pub fn run_mca<const N: usize, L: LocalOperator<N>>(
    prop: &mut Propagator<N, L>,
    psi0: &Wave<N>,
    target: &TargetSpec,
    guess: ControlField,
    cfg: &McaConfig,
    on_iteration: impl FnMut(&McaState),
) -> Result<McaOutcome<N>> {
    cfg.validate()?;
    if cfg.gauge == Gauge::Literal {
        return mca_loop(prop, psi0, target, guess, cfg, on_iteration);
    }
    let phi = Wave { comps: [target.phi.clone()] };
    let offset = 0.5 * (mean_coupling(prop.coupling(), psi0) + mean_coupling(prop.coupling(), &phi));
    let shifted = prop.coupling().iter().map(|c| c - offset).collect();
    let original = prop.replace_coupling(shifted);
    let out = mca_loop(prop, psi0, target, guess, cfg, on_iteration);
    prop.replace_coupling(original);
    out
}

/// `Σ_i c_i P_i` with `P_i` the normalized row probabilities of `psi`.
fn mean_coupling<const N: usize>(coupling: &[f64], psi: &Wave<N>) -> f64 {
    let mut weighted = 0.0;
    let mut total = 0.0;
    for comp in &psi.comps {
        for (row, c) in comp.outer_iter().zip(coupling) {
            let p: f64 = row.iter().map(|v| v.norm_sqr()).sum();
            weighted += c * p;
            total += p;
        }
    }
    if total > 0.0 {
        weighted / total
    } else {
        0.0
    }
}

fn mca_loop<const N: usize, L: LocalOperator<N>>(
    prop: &mut Propagator<N, L>,
    psi0: &Wave<N>,
    target: &TargetSpec,
    guess: ControlField,
    cfg: &McaConfig,
    mut on_iteration: impl FnMut(&McaState),
) -> Result<McaOutcome<N>> {
    let grid = prop.grid().clone();
    let coupling = prop.coupling().to_vec();
    let nt = guess.nt();
    let dt = guess.dt;
    let mut rho = Vec::with_capacity(grid.nx);
    // Field value for one step from the row overlaps, mixing `weight`.
    let update = |rho: &[C64], u_ref: f64, weight: f64| -> f64 {
        let im = -rho.iter().zip(&coupling).map(|(r, c)| c * r.im).sum::<f64>();
        let u_lin = backward_field_update(im, u_ref, 1.0, cfg.alpha0);
        match cfg.rule {
            UpdateRule::Linear => (1.0 - weight) * u_ref + weight * u_lin,
            UpdateRule::Exact => {
                let best = maximize_step_gain(rho, &coupling, u_ref, u_lin, cfg.alpha0, dt);
                (1.0 - weight) * u_ref + weight * best
            }
        }
    };

    let mut psi_tf = prop.evolve(psi0, &guess)?;
    let j1 = j1_terminal(&psi_tf, target);
    let j2 = j2_fluence(&guess, cfg.alpha0);
    let mut state = McaState {
        iteration: 0,
        u: guess,
        u_bar: None,
        j: vec![j1 - j2],
        j1: vec![j1],
        j2: vec![j2],
        converged: false,
        stop: StopReason::MaxIters,
    };
    if !(j1 - j2).is_finite() {
        return Err(Error::NonFiniteObjective { iteration: 0 });
    }
    on_iteration(&state);

    let mut quiet = 0;
    for k in 1..=cfg.max_iters {
        if nt == 0 {
            break;
        }
        // Backward sweep.
        let mut lambda = apply_target_operator(&psi_tf, target);
        let mut psi = psi_tf;
        let mut u_bar = vec![0.0; nt];
        let back = Direction::Backward;
        prop.kick(&mut lambda, Kick::Half, back);
        prop.kick(&mut psi, Kick::Half, back);
        for j in (0..nt).rev() {
            row_overlaps(&lambda, &psi, &grid, &mut rho);
            u_bar[j] = update(&rho, state.u.samples[j], cfg.eta);
            prop.apply_local(&mut psi, state.u.samples[j], back);
            prop.apply_local(&mut lambda, u_bar[j], back);
            let kick = if j == 0 { Kick::Half } else { Kick::Full };
            prop.kick(&mut lambda, kick, back);
            prop.kick(&mut psi, kick, back);
            if j % crate::propagator::AUDIT_INTERVAL == 0 {
                lambda.check_finite(nt - j)?;
            }
        }
        let u_bar = ControlField::new(u_bar, state.u.dt);

        // Forward sweep.
        let mut psi = psi0.clone();
        let mut u_new = vec![0.0; nt];
        let fwd = Direction::Forward;
        prop.kick(&mut lambda, Kick::Half, fwd);
        prop.kick(&mut psi, Kick::Half, fwd);
        for j in 0..nt {
            row_overlaps(&lambda, &psi, &grid, &mut rho);
            u_new[j] = update(&rho, u_bar.samples[j], cfg.zeta);
            prop.apply_local(&mut psi, u_new[j], fwd);
            prop.apply_local(&mut lambda, u_bar.samples[j], fwd);
            let kick = if j + 1 == nt { Kick::Half } else { Kick::Full };
            prop.kick(&mut lambda, kick, fwd);
            prop.kick(&mut psi, kick, fwd);
            if (j + 1) % crate::propagator::AUDIT_INTERVAL == 0 {
                psi.check_finite(j + 1)?;
            }
        }
        psi.check_finite(nt)?;
        let u_new = ControlField::new(u_new, state.u.dt);

        let j1 = j1_terminal(&psi, target);
        let j2 = j2_fluence(&u_new, cfg.alpha0);
        let j = j1 - j2;
        if !j.is_finite() {
            return Err(Error::NonFiniteObjective { iteration: k });
        }
        let previous = *state.j.last().unwrap();
        if j < previous - cfg.monotonic_tol {
            return Err(Error::Monotonicity {
                iteration: k,
                previous,
                current: j,
            });
        }
        let scale = 1.0 + state.u.max_abs();
        let fixed = state
            .u
            .samples
            .iter()
            .zip(&u_new.samples)
            .all(|(a, b)| (a - b).abs() <= FIXED_POINT_TOL * scale);

        state.iteration = k;
        state.u = u_new;
        state.u_bar = Some(u_bar);
        state.j.push(j);
        state.j1.push(j1);
        state.j2.push(j2);
        psi_tf = psi;
        on_iteration(&state);

        if fixed {
            state.converged = true;
            state.stop = StopReason::FixedPoint;
            break;
        }
        if (j - previous).abs() < cfg.stop_tol {
            quiet += 1;
            if quiet >= cfg.patience {
                state.converged = true;
                state.stop = StopReason::Converged;
                break;
            }
        } else {
            quiet = 0;
        }
    }
    Ok(McaOutcome { state, psi_tf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::params::{build_model, PhysicalParams};
    use crate::units::UnitSystem;

    fn setup() -> (InternalModel, Grid2D) {
        let (_, m) = build_model(&PhysicalParams::strontium_88(), UnitSystem::nm_us()).unwrap();
        (m, make_grid((-128.0, 128.0, -64.0, 64.0), 128, 64).unwrap())
    }

    #[test]
    fn initial_packet_properties() {
        let (m, g) = setup();
        let psi = initial_packet(&m, &g, (-11.4, 0.0)).unwrap();
        assert!((psi.norm_sqr(&g) - 1.0).abs() < 1e-12);
        assert!((psi.expectation_qx(&g) + 11.4).abs() < 1e-10);
        assert!(psi.psi1().iter().all(|v| *v == C64::new(0.0, 0.0)));
        assert!(initial_packet(&m, &g, (-120.0, 0.0)).is_err());
    }

    #[test]
    fn target_operator_cases() {
        let (m, g) = setup();
        let t = TargetSpec::new(&m, &g, (11.4, 0.0)).unwrap();
        let zero = Array2::zeros(g.shape());
        let on_target = SpinorField::new(t.phi.clone(), zero.clone());
        let projected = apply_target_operator(&on_target, &t);
        for (a, b) in projected.comps[0].iter().zip(t.phi.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!((j1_terminal(&SpinorField::new(zero.clone(), t.phi.clone()), &t) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distant_gaussian_has_vanishing_overlap() {
        let (m, g) = setup();
        let t = TargetSpec::new(&m, &g, (40.0, 0.0)).unwrap();
        let psi = initial_packet(&m, &g, (-60.0, 0.0)).unwrap();
        // |⟨φa|φb⟩|² = exp(−d²/(2 w²)) for amplitude width w.
        let d: f64 = 100.0;
        let w = m.width_x();
        let analytic = (-d * d / (2.0 * w * w)).exp();
        let sigma = w / std::f64::consts::SQRT_2;
        assert!(d >= 8.0 * sigma);
        let j1 = j1_terminal(&psi, &t);
        assert!(j1 < 1e-6);
        assert!((j1 - analytic).abs() < 1e-12);
    }

    #[test]
    fn fluence_cases() {
        assert_eq!(j2_fluence(&ControlField::zeros(100, 0.01), 0.3), 0.0);
        let u = ControlField::from_fn(1000, 0.01, |_| 2.0);
        assert!((j2_fluence(&u, 0.5) - 0.5 * 4.0 * 10.0).abs() < 1e-10);
        let rect = rectangular_pulse(10_000, 0.001, -14.39, 0.0, 0.02);
        assert_eq!(rect.samples.iter().filter(|&&v| v != 0.0).count(), 20);
        assert!((j2_fluence(&rect, 0.01) - 0.01 * 14.39f64.powi(2) * 0.02).abs() < 1e-12);
    }

    #[test]
    fn update_rules() {
        assert_eq!(backward_field_update(5.0, 2.0, 0.0, 0.1), 2.0);
        assert_eq!(forward_field_update(5.0, 2.0, 0.0, 0.1), 2.0);
        assert_eq!(backward_field_update(0.0, 2.0, 1.0, 0.1), 0.0);
        assert_eq!(forward_field_update(0.0, 2.0, 1.0, 0.1), 0.0);
        assert!((backward_field_update(0.5, 2.0, 0.5, 0.1) - (1.0 - 2.5)).abs() < 1e-15);
    }

    #[test]
    fn real_expectation_has_no_imaginary_part() {
        let (m, g) = setup();
        let psi = initial_packet(&m, &g, (-11.4, 3.0)).unwrap();
        let coupling = crate::propagator::control_coupling(&m, &g);
        assert!(im_control_overlap(&psi, &psi, &coupling, &g).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_mixing() {
        let cfg = McaConfig {
            eta: 2.5,
            ..McaConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = McaConfig {
            alpha0: 0.0,
            ..McaConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
