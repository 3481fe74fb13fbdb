//! Command implementations behind the `rydci` binary.
//!
//! Every command takes a resolved [`RunConfig`], writes its files below an
//! output directory and returns a report for the caller to print. Output
//! units are nm for lengths, μs for times, rad/μs for energies and V/m for
//! fields.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::config::{Mode, RunConfig};
use crate::control::{initial_packet, initial_packet_bo, run_mca, McaState, StopReason, TargetSpec};
use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::io;
use crate::observables::{crossing_count, CROSSING_BAND_NM};
use crate::params::{build_model, DerivedGeometry, InternalModel};
use crate::propagator::{
    absorbing_mask, BoPropagator, ControlField, LocalOperator, PropagationRecord, Propagator, RecordSpec, SpinorPropagator, Wave,
};
use crate::surfaces::{
    ci_location, coefficients_at, eval_coefficients, eval_surfaces, mixing_angle, CoefficientFields,
};

/// Environment variable that relocates relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "RYDCI_OUT";

/// Fraction of the total gain in `J` that defines the plateau iteration.
pub const PLATEAU_FRACTION: f64 = 0.99;

/// Where a command writes: `--out` wins, then `RYDCI_OUT` joined with the
/// configured directory, then the configured directory itself.
pub fn output_dir(cfg: &RunConfig, cli_out: Option<&Path>) -> PathBuf {
    if let Some(out) = cli_out {
        return out.to_path_buf();
    }
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if cfg.output.dir.is_relative() => Path::new(&root).join(&cfg.output.dir),
        _ => cfg.output.dir.clone(),
    }
}

/// Model, grid and time axis shared by all propagating commands.
pub struct Setup {
    pub geometry: DerivedGeometry,
    pub model: InternalModel,
    pub grid: Grid2D,
    pub coeffs: CoefficientFields,
    pub nt: usize,
    pub dt: f64,
    pub initial: (f64, f64),
    pub target: TargetSpec,
    /// `qx` of the intersection, reference of the crossing count.
    pub ci_qx: f64,
    pub mask: Option<Array2<f64>>,
}

impl Setup {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        let (geometry, model) = build_model(&cfg.physics.params(), cfg.unit_system()?)?;
        let grid = cfg.make_grid()?;
        let coeffs = eval_coefficients(&model, &grid);
        let (nt, dt) = cfg.time_steps()?;
        let (initial, target) = cfg.centers();
        let target = TargetSpec::new(&model, &grid, target)?;
        let ci_qx = ci_location(&model).map(|c| c.0).unwrap_or(0.0);
        let mask = absorbing_mask(&grid, cfg.grid.absorb_width_m / cfg.units.length_m);
        Ok(Setup {
            geometry,
            model,
            grid,
            coeffs,
            nt,
            dt,
            initial,
            target,
            ci_qx,
            mask,
        })
    }

    fn record_spec(&self, cfg: &RunConfig) -> RecordSpec {
        RecordSpec {
            cadence: cfg.snapshot_cadence(),
            frame_steps: cfg.frame_steps(self.nt),
        }
    }

    fn spinor(&self) -> Result<(SpinorPropagator, Wave<2>)> {
        let mut prop = SpinorPropagator::spinor(&self.model, &self.grid, &self.coeffs, self.dt);
        prop.set_mask(self.mask.clone());
        Ok((prop, initial_packet(&self.model, &self.grid, self.initial)?))
    }

    fn bo(&self) -> Result<(BoPropagator, Wave<1>)> {
        let surfaces = eval_surfaces(&self.coeffs, (self.ci_qx, 0.0));
        let mut prop = BoPropagator::born_oppenheimer(&self.model, &self.grid, &surfaces.e_minus, self.dt);
        prop.set_mask(self.mask.clone());
        Ok((prop, initial_packet_bo(&self.model, &self.grid, self.initial)?))
    }

    fn field_times(&self, field: &ControlField) -> Vec<f64> {
        (0..field.nt()).map(|j| field.midpoint(j)).collect()
    }
}

fn write_manifest(dir: &Path, cfg: &RunConfig, extra: &[(&str, String)]) -> Result<()> {
    let mut text = cfg.manifest();
    if !extra.is_empty() {
        text.push_str("\n[run]\n");
        for (k, v) in extra {
            let _ = writeln!(text, "{k} = {v:?}");
        }
    }
    io::write_text(&dir.join("manifest.toml"), &text)
}

fn write_summary(path: &Path, rows: &[(&str, String)]) -> Result<()> {
    let mut text = String::from("key,value\n");
    for (k, v) in rows {
        let _ = writeln!(text, "{k},{v}");
    }
    io::write_text(path, &text)
}

// ---------------------------------------------------------------- equilibrium

pub struct EquilibriumReport {
    pub geometry: DerivedGeometry,
    pub model: InternalModel,
    /// `(key, value, unit)` rows in display order.
    pub rows: Vec<(&'static str, f64, &'static str)>,
}

impl EquilibriumReport {
    /// Aligned `key  value  unit` text.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for (k, v, unit) in &self.rows {
            let _ = writeln!(out, "{k:<22} {:>24} {unit}", io::fmt_f64(*v));
        }
        out
    }
}

pub fn cmd_equilibrium(cfg: &RunConfig, out: &Path) -> Result<EquilibriumReport> {
    let (geometry, model) = build_model(&cfg.physics.params(), cfg.unit_system()?)?;
    let g = &geometry;
    let c = &model.consts;
    let rows = vec![
        ("z0", g.z0 * 1e6, "um"),
        ("x0", g.x0 * 1e6, "um"),
        ("x0_from_u0", g.x0_from_u0.map_or(f64::NAN, |x| x * 1e6), "um"),
        ("x0_overridden", if g.x0_overridden { 1.0 } else { 0.0 }, ""),
        ("reduced_mass", g.mu, "kg"),
        ("total_mass", g.total_mass, "kg"),
        ("omega_bar_x", g.omega_bar_x, "rad/s"),
        ("omega_bar_z", g.omega_bar_z, "rad/s"),
        ("rho_plus", g.rho_plus, "C2m2/J"),
        ("rho_minus", g.rho_minus, "C2m2/J"),
        ("mu_internal", c.mu, "hbar us/nm2"),
        ("g_slope", c.g_slope, "rad/us/nm"),
        ("f0", c.f0, "rad/us/nm"),
        ("u_ex_r0", c.u_ex_r0, "rad/us"),
        ("field_coupling", c.field_coupling, "rad/us/(V/m)/nm"),
        ("width_x", model.width_x(), "nm"),
        ("width_z", model.width_z(), "nm"),
    ];
    let report = EquilibriumReport { geometry, model, rows };
    let mut csv = String::from("key,value,unit\n");
    for (k, v, unit) in &report.rows {
        let _ = writeln!(csv, "{k},{},{unit}", io::fmt_f64(*v));
    }
    io::write_text(&out.join("equilibrium.csv"), &csv)?;
    io::write_text(&out.join("equilibrium.txt"), &report.text())?;
    write_manifest(out, cfg, &[("command", "equilibrium".into())])?;
    Ok(report)
}

// ------------------------------------------------------------------- surfaces

pub struct SurfacesReport {
    pub ci: Option<(f64, f64)>,
    pub files: Vec<PathBuf>,
}

pub fn cmd_surfaces(cfg: &RunConfig, out: &Path) -> Result<SurfacesReport> {
    let (_, model) = build_model(&cfg.physics.params(), cfg.unit_system()?)?;
    let grid = cfg.make_grid()?;
    let coeffs = eval_coefficients(&model, &grid);
    let ci = ci_location(&model).ok();
    let surfaces = eval_surfaces(&coeffs, ci.unwrap_or((f64::NAN, f64::NAN)));
    let angle = mixing_angle(&coeffs);

    let mut files = Vec::new();
    for (name, data) in [
        ("e_plus", &surfaces.e_plus),
        ("e_minus", &surfaces.e_minus),
        ("s", &coeffs.s),
        ("w", &coeffs.w),
        ("g", &coeffs.g),
        ("lambda", &angle.lambda),
    ] {
        let path = out.join(format!("{name}.csv"));
        io::write_matrix_csv(&path, &grid.qx, &grid.qz, data)?;
        files.push(path);
    }

    let slice: Vec<[f64; 6]> = grid
        .qx
        .iter()
        .map(|&x| {
            let (s, w, g) = coefficients_at(&model, x, 0.0);
            let (ep, em) = crate::surfaces::surface_pair(s, w, g);
            [x, ep, em, s, w, g]
        })
        .collect();
    let path = out.join("slice_qz0.csv");
    io::write_csv(&path, &["qx", "e_plus", "e_minus", "s", "w", "g"], &slice)?;
    files.push(path);

    let mut rows = vec![("degenerate_nodes", angle.degenerate.len().to_string())];
    match ci {
        Some((x, z)) => {
            rows.push(("ci_qx", io::fmt_f64(x)));
            rows.push(("ci_qz", io::fmt_f64(z)));
        }
        None => rows.push(("ci", "none".into())),
    }
    let path = out.join("summary.csv");
    write_summary(&path, &rows)?;
    files.push(path);
    write_manifest(out, cfg, &[("command", "surfaces".into())])?;
    Ok(SurfacesReport { ci, files })
}

// --------------------------------------------------------------------- evolve

/// Field driving a single forward propagation.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldSource {
    Zero,
    File(PathBuf),
}

#[derive(Clone, Debug)]
pub struct EvolveReport {
    pub mode: Mode,
    pub record: PropagationRecord,
    pub qx_final: f64,
    pub j1_final: f64,
    pub crossings: usize,
}

fn evolve_in<const N: usize, L: LocalOperator<N>>(
    prop: &mut Propagator<N, L>,
    psi0: &Wave<N>,
    setup: &Setup,
    field: &ControlField,
    spec: &RecordSpec,
) -> Result<PropagationRecord> {
    let (_, record) = prop.propagate_forward(psi0, field, spec, Some(&setup.target.phi))?;
    Ok(record)
}

fn forward(setup: &Setup, mode: Mode, field: &ControlField, spec: &RecordSpec) -> Result<PropagationRecord> {
    match mode {
        Mode::Bo => {
            let (mut prop, psi0) = setup.bo()?;
            evolve_in(&mut prop, &psi0, setup, field, spec)
        }
        _ => {
            let (mut prop, psi0) = setup.spinor()?;
            evolve_in(&mut prop, &psi0, setup, field, spec)
        }
    }
}

fn write_traces(dir: &Path, record: &PropagationRecord, zero: Option<&PropagationRecord>) -> Result<()> {
    match zero {
        Some(z) => {
            let rows = (0..record.times.len()).map(|i| [record.times[i], record.qx[i], z.qx[i]]);
            io::write_csv(&dir.join("qx_trace.csv"), &["t", "qx_control", "qx_zero_field"], rows)?;
        }
        None => {
            let rows = (0..record.times.len()).map(|i| [record.times[i], record.qx[i]]);
            io::write_csv(&dir.join("qx_trace.csv"), &["t", "qx"], rows)?;
        }
    }
    let rows = (0..record.times.len()).map(|i| [record.times[i], record.j1[i]]);
    io::write_csv(&dir.join("j1_trace.csv"), &["t", "j1"], rows)?;
    if !record.frames.is_empty() {
        io::write_frames(&dir.join("frames"), &record.frames)?;
    }
    Ok(())
}

pub fn cmd_evolve(cfg: &RunConfig, field: &FieldSource, out: &Path) -> Result<Vec<EvolveReport>> {
    let setup = Setup::new(cfg)?;
    let samples = match field {
        FieldSource::Zero => ControlField::zeros(setup.nt, setup.dt),
        FieldSource::File(path) => {
            let u = io::read_field_csv(path)?;
            if u.len() != setup.nt {
                return Err(Error::Config(format!(
                    "{}: field has {} samples, the run needs {}",
                    path.display(),
                    u.len(),
                    setup.nt
                )));
            }
            ControlField::new(u, setup.dt)
        }
    };
    let modes = match cfg.control.mode {
        Mode::Both => vec![Mode::Spinor, Mode::Bo],
        m => vec![m],
    };
    let spec = setup.record_spec(cfg);
    let mut reports = Vec::new();
    for mode in modes {
        let dir = if cfg.control.mode == Mode::Both {
            out.join(mode.name())
        } else {
            out.to_path_buf()
        };
        let record = forward(&setup, mode, &samples, &spec)?;
        write_traces(&dir, &record, None)?;
        let report = EvolveReport {
            mode,
            qx_final: *record.qx.last().unwrap(),
            j1_final: *record.j1.last().unwrap(),
            crossings: crossing_count(&record.qx, setup.ci_qx, CROSSING_BAND_NM),
            record,
        };
        write_summary(
            &dir.join("summary.csv"),
            &[
                ("mode", mode.name().into()),
                ("steps", setup.nt.to_string()),
                ("qx_final", io::fmt_f64(report.qx_final)),
                ("j1_final", io::fmt_f64(report.j1_final)),
                ("crossings", report.crossings.to_string()),
                ("crossing_band_nm", io::fmt_f64(CROSSING_BAND_NM)),
            ],
        )?;
        let source = match field {
            FieldSource::Zero => "zero".to_string(),
            FieldSource::File(p) => p.display().to_string(),
        };
        write_manifest(&dir, cfg, &[("command", "evolve".into()), ("mode", mode.name().into()), ("field", source)])?;
        reports.push(report);
    }
    Ok(reports)
}

// ------------------------------------------------------------------- optimize

#[derive(Clone, Debug)]
pub struct OptimizeReport {
    pub mode: Mode,
    pub dir: PathBuf,
    pub state: McaState,
    /// Trajectory under the optimized field.
    pub record: PropagationRecord,
    /// Trajectory without field.
    pub zero_field: PropagationRecord,
    pub crossings: usize,
    pub plateau: usize,
}

impl OptimizeReport {
    pub fn j1_final(&self) -> f64 {
        *self.state.j1.last().unwrap()
    }
}

fn optimize_in<const N: usize, L: LocalOperator<N>>(
    prop: &mut Propagator<N, L>,
    psi0: &Wave<N>,
    setup: &Setup,
    guess: ControlField,
    cfg: &crate::control::McaConfig,
    spec: &RecordSpec,
    progress: &mut dyn FnMut(Mode, &McaState),
    mode: Mode,
) -> Result<(McaState, PropagationRecord, PropagationRecord)> {
    let outcome = run_mca(prop, psi0, &setup.target, guess, cfg, |s| progress(mode, s))?;
    let (_, record) = prop.propagate_forward(psi0, &outcome.state.u, spec, Some(&setup.target.phi))?;
    let zero = ControlField::zeros(setup.nt, setup.dt);
    let (_, zero_record) = prop.propagate_forward(psi0, &zero, &RecordSpec::every(spec.cadence), None)?;
    Ok((outcome.state, record, zero_record))
}

/// Runs the optimization for the configured mode(s). `progress` sees every
/// iteration.
pub fn cmd_optimize(
    cfg: &RunConfig,
    out: &Path,
    mut progress: impl FnMut(Mode, &McaState),
) -> Result<Vec<OptimizeReport>> {
    let setup = Setup::new(cfg)?;
    let units = cfg.unit_system()?;
    let spec = setup.record_spec(cfg);
    let both = cfg.control.mode == Mode::Both;
    let modes = if both {
        vec![Mode::Spinor, Mode::Bo]
    } else {
        vec![cfg.control.mode]
    };
    let mut reports = Vec::new();
    for mode in modes {
        let dir = if both { out.join(mode.name()) } else { out.to_path_buf() };
        let mca = cfg.control.mca(mode)?;
        let guess = cfg.control.mode_section(mode).guess.sample(setup.nt, setup.dt, &units)?;
        let (state, record, zero_field) = match mode {
            Mode::Bo => {
                let (mut prop, psi0) = setup.bo()?;
                optimize_in(&mut prop, &psi0, &setup, guess, &mca, &spec, &mut progress, mode)?
            }
            _ => {
                let (mut prop, psi0) = setup.spinor()?;
                optimize_in(&mut prop, &psi0, &setup, guess, &mca, &spec, &mut progress, mode)?
            }
        };
        let report = OptimizeReport {
            mode,
            crossings: crossing_count(&record.qx, setup.ci_qx, CROSSING_BAND_NM),
            plateau: state.plateau_iteration(PLATEAU_FRACTION),
            dir: dir.clone(),
            state,
            record,
            zero_field,
        };
        write_optimize_outputs(&report, &setup, cfg)?;
        reports.push(report);
    }
    if both {
        let (a, b) = (&reports[0].record, &reports[1].record);
        let rows = (0..a.times.len()).map(|i| [a.times[i], a.j1[i], b.j1[i]]);
        io::write_csv(&out.join("j1_compare.csv"), &["t", "j1_spinor", "j1_bo"], rows)?;
    }
    Ok(reports)
}

fn write_optimize_outputs(r: &OptimizeReport, setup: &Setup, cfg: &RunConfig) -> Result<()> {
    let dir = &r.dir;
    let s = &r.state;
    let rows = (0..s.j.len()).map(|k| [k as f64, s.j[k], s.j1[k], s.j2[k]]);
    io::write_csv(&dir.join("convergence.csv"), &["k", "j", "j1", "j2"], rows)?;
    let t = setup.field_times(&s.u);
    let rows = t.iter().zip(&s.u.samples).map(|(t, u)| [*t, *u]);
    io::write_csv(&dir.join("field_opt.csv"), &["t", "u"], rows)?;
    write_traces(dir, &r.record, Some(&r.zero_field))?;
    let stop = match s.stop {
        StopReason::Converged => "converged",
        StopReason::FixedPoint => "fixed_point",
        StopReason::MaxIters => "max_iters",
    };
    write_summary(
        &dir.join("summary.csv"),
        &[
            ("mode", r.mode.name().into()),
            ("iterations", s.iteration.to_string()),
            ("stop", stop.into()),
            ("plateau_iteration", r.plateau.to_string()),
            ("j_final", io::fmt_f64(*s.j.last().unwrap())),
            ("j1_final", io::fmt_f64(r.j1_final())),
            ("j2_final", io::fmt_f64(*s.j2.last().unwrap())),
            ("qx_final", io::fmt_f64(*r.record.qx.last().unwrap())),
            ("qx_final_zero_field", io::fmt_f64(*r.zero_field.qx.last().unwrap())),
            ("crossings", r.crossings.to_string()),
            ("crossings_zero_field", crossing_count(&r.zero_field.qx, setup.ci_qx, CROSSING_BAND_NM).to_string()),
            ("crossing_band_nm", io::fmt_f64(CROSSING_BAND_NM)),
        ],
    )?;
    write_manifest(
        dir,
        cfg,
        &[
            ("command", "optimize".into()),
            ("mode", r.mode.name().into()),
            ("plateau_fraction", io::fmt_f64(PLATEAU_FRACTION)),
        ],
    )
}
