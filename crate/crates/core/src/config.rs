//! Run configuration.
//!
//! A run is described by one TOML file with the sections `physics`, `units`,
//! `grid`, `time`, `control`, `target` and `output`. Every quantity at this
//! boundary is SI and carries its unit in the key name (`dt_s`,
//! `alpha_v_m2`, ...). Only the physics section is mandatory; everything
//! else has defaults, and [`RunConfig::manifest`] writes the fully resolved
//! values back out.

use std::path::{Path, PathBuf};

use serde::Serialize;
use toml::{Table, Value};

use crate::control::{gaussian_pulse, rectangular_pulse, Gauge, McaConfig, UpdateRule};
use crate::error::{Error, Result};
use crate::grid::{make_grid, Grid2D};
use crate::params::PhysicalParams;
use crate::propagator::{time_grid, ControlField};
use crate::units::{UnitSystem, HBAR};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhysicsSection {
    pub mass_kg: f64,
    pub rho_down_c2m2_j: f64,
    pub rho_up_c2m2_j: f64,
    pub omega_x_rad_s: f64,
    pub omega_z_rad_s: f64,
    pub u0_v_m: f64,
    pub alpha_v_m2: f64,
    pub u_ex_r0_j: f64,
    pub f0_j_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0_m: Option<f64>,
}

impl PhysicsSection {
    pub fn params(&self) -> PhysicalParams {
        PhysicalParams::new(
            self.mass_kg,
            self.rho_down_c2m2_j,
            self.rho_up_c2m2_j,
            self.omega_x_rad_s,
            self.omega_z_rad_s,
            self.u0_v_m,
            self.alpha_v_m2,
            self.u_ex_r0_j,
            self.f0_j_m,
            self.x0_m,
        )
    }
}

impl From<&PhysicalParams> for PhysicsSection {
    fn from(p: &PhysicalParams) -> Self {
        PhysicsSection {
            mass_kg: p.mass,
            rho_down_c2m2_j: p.rho_down,
            rho_up_c2m2_j: p.rho_up,
            omega_x_rad_s: p.omega_x,
            omega_z_rad_s: p.omega_z,
            u0_v_m: p.u0,
            alpha_v_m2: p.alpha,
            u_ex_r0_j: p.u_ex_r0,
            f0_j_m: p.f0,
            x0_m: p.x0_override,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UnitsSection {
    pub length_m: f64,
    pub time_s: f64,
}

impl UnitsSection {
    pub fn system(&self) -> Result<UnitSystem> {
        if !(self.length_m > 0.0 && self.time_s > 0.0) {
            return Err(Error::Config("units must be positive".into()));
        }
        Ok(UnitSystem::new(self.length_m, self.time_s, HBAR))
    }
}

impl Default for UnitsSection {
    fn default() -> Self {
        UnitsSection {
            length_m: 1e-9,
            time_s: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSection {
    pub qx_range_m: [f64; 2],
    pub qz_range_m: [f64; 2],
    pub nx: usize,
    pub nz: usize,
    /// Width of the absorbing border; 0 keeps the boundary periodic.
    pub absorb_width_m: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            qx_range_m: [-320e-9, 320e-9],
            qz_range_m: [-64e-9, 64e-9],
            nx: 512,
            nz: 64,
            absorb_width_m: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeSection {
    pub t_final_s: f64,
    pub dt_s: f64,
    pub snapshot_every_s: f64,
    pub frame_times_s: Vec<f64>,
}

impl Default for TimeSection {
    fn default() -> Self {
        TimeSection {
            t_final_s: 10e-6,
            dt_s: 1e-9,
            snapshot_every_s: 10e-9,
            frame_times_s: vec![0.0, 5e-6, 10e-6],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Spinor,
    Bo,
    /// Both modes, one after the other, into `spinor/` and `bo/`.
    Both,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "spinor" => Ok(Mode::Spinor),
            "bo" => Ok(Mode::Bo),
            "both" => Ok(Mode::Both),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Spinor => "spinor",
            Mode::Bo => "bo",
            Mode::Both => "both",
        }
    }
}

/// Initial guess for the control field.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Guess {
    Zero,
    Rect {
        amplitude_v_m: f64,
        start_s: f64,
        end_s: f64,
    },
    Gauss {
        e0_v_m: f64,
        t0_s: f64,
        sigma_s: f64,
    },
    File {
        path: PathBuf,
    },
}

impl Guess {
    pub fn default_rect() -> Self {
        Guess::Rect {
            amplitude_v_m: -14.39,
            start_s: 0.0,
            end_s: 20e-9,
        }
    }

    pub fn default_gauss() -> Self {
        Guess::Gauss {
            e0_v_m: -0.719e-3,
            t0_s: 4e-6,
            sigma_s: 0.85e-6,
        }
    }

    /// Samples the guess on `nt` steps of length `dt` (internal time).
    pub fn sample(&self, nt: usize, dt: f64, units: &UnitSystem) -> Result<ControlField> {
        let t = |s: f64| s / units.time;
        Ok(match self {
            Guess::Zero => ControlField::zeros(nt, dt),
            Guess::Rect {
                amplitude_v_m,
                start_s,
                end_s,
            } => rectangular_pulse(nt, dt, *amplitude_v_m, t(*start_s), t(*end_s)),
            Guess::Gauss {
                e0_v_m,
                t0_s,
                sigma_s,
            } => gaussian_pulse(nt, dt, *e0_v_m, t(*t0_s), t(*sigma_s)),
            Guess::File { path } => {
                let field = crate::io::read_field_csv(path)?;
                if field.len() != nt {
                    return Err(Error::Config(format!(
                        "{}: field has {} samples, the run needs {nt}",
                        path.display(),
                        field.len()
                    )));
                }
                ControlField::new(field, dt)
            }
        })
    }
}

/// Settings specific to one dynamical mode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeSection {
    pub alpha0: f64,
    pub guess: Guess,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControlSection {
    pub mode: Mode,
    pub eta: f64,
    pub zeta: f64,
    pub max_iters: usize,
    pub stop_tol: f64,
    pub patience: usize,
    pub monotonic_tol: f64,
    pub rule: String,
    /// `centered` or `literal`.
    pub gauge: String,
    pub spinor: ModeSection,
    pub bo: ModeSection,
}

impl Default for ControlSection {
    fn default() -> Self {
        let d = McaConfig::default();
        ControlSection {
            mode: Mode::Spinor,
            eta: d.eta,
            zeta: d.zeta,
            max_iters: d.max_iters,
            stop_tol: d.stop_tol,
            patience: d.patience,
            monotonic_tol: d.monotonic_tol,
            rule: "exact".into(),
            gauge: "centered".into(),
            spinor: ModeSection {
                alpha0: 0.01,
                guess: Guess::default_rect(),
            },
            bo: ModeSection {
                alpha0: 0.1,
                guess: Guess::default_gauss(),
            },
        }
    }
}

impl ControlSection {
    pub fn mode_section(&self, mode: Mode) -> &ModeSection {
        match mode {
            Mode::Bo => &self.bo,
            _ => &self.spinor,
        }
    }

    pub fn mode_section_mut(&mut self, mode: Mode) -> &mut ModeSection {
        match mode {
            Mode::Bo => &mut self.bo,
            _ => &mut self.spinor,
        }
    }

    pub fn update_rule(&self) -> Result<UpdateRule> {
        match self.rule.as_str() {
            "exact" => Ok(UpdateRule::Exact),
            "linear" => Ok(UpdateRule::Linear),
            other => Err(Error::Config(format!("unknown update rule `{other}`"))),
        }
    }

    pub fn gauge(&self) -> Result<Gauge> {
        match self.gauge.as_str() {
            "centered" => Ok(Gauge::Centered),
            "literal" => Ok(Gauge::Literal),
            other => Err(Error::Config(format!("unknown gauge `{other}`"))),
        }
    }

    /// Algorithm settings for a single mode.
    pub fn mca(&self, mode: Mode) -> Result<McaConfig> {
        let cfg = McaConfig {
            eta: self.eta,
            zeta: self.zeta,
            alpha0: self.mode_section(mode).alpha0,
            max_iters: self.max_iters,
            stop_tol: self.stop_tol,
            patience: self.patience,
            monotonic_tol: self.monotonic_tol,
            rule: self.update_rule()?,
            gauge: self.gauge()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TargetSection {
    pub initial_m: [f64; 2],
    pub target_m: [f64; 2],
}

impl Default for TargetSection {
    fn default() -> Self {
        TargetSection {
            initial_m: [-11.4e-9, 0.0],
            target_m: [11.4e-9, 0.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into() }
    }
}

/// Fully resolved configuration of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub physics: PhysicsSection,
    pub units: UnitsSection,
    pub grid: GridSection,
    pub time: TimeSection,
    pub control: ControlSection,
    pub target: TargetSection,
    pub output: OutputSection,
}

/// Reads keys out of one table and remembers its dotted path for errors.
struct Section<'a> {
    path: String,
    table: Option<&'a Table>,
    seen: Vec<&'static str>,
}

impl<'a> Section<'a> {
    fn new(path: impl Into<String>, table: Option<&'a Table>) -> Self {
        Section {
            path: path.into(),
            table,
            seen: Vec::new(),
        }
    }

    fn key(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{}", self.path, key)
        }
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.seen.push(key);
        self.table.and_then(|t| t.get(key))
    }

    fn opt_f64(&mut self, key: &'static str) -> Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Float(v)) => Ok(Some(*v)),
            Some(Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(_) => Err(Error::Config(format!("`{}` must be a number", self.key(key)))),
        }
    }

    fn f64(&mut self, key: &'static str) -> Result<f64> {
        self.opt_f64(key)?.ok_or_else(|| Error::MissingKey(self.key(key)))
    }

    fn f64_or(&mut self, key: &'static str, default: f64) -> Result<f64> {
        Ok(self.opt_f64(key)?.unwrap_or(default))
    }

    fn usize_or(&mut self, key: &'static str, default: usize) -> Result<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(Value::Integer(v)) if *v >= 0 => Ok(*v as usize),
            Some(_) => Err(Error::Config(format!(
                "`{}` must be a non-negative integer",
                self.key(key)
            ))),
        }
    }

    fn str_or(&mut self, key: &'static str, default: &str) -> Result<String> {
        match self.raw(key) {
            None => Ok(default.to_string()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(Error::Config(format!("`{}` must be a string", self.key(key)))),
        }
    }

    fn f64_list(&mut self, key: &'static str) -> Result<Option<Vec<f64>>> {
        let path = self.key(key);
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(*x),
                    Value::Integer(x) => Ok(*x as f64),
                    _ => Err(Error::Config(format!("`{path}` must hold numbers"))),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(Error::Config(format!("`{path}` must be an array"))),
        }
    }

    fn pair_or(&mut self, key: &'static str, default: [f64; 2]) -> Result<[f64; 2]> {
        match self.f64_list(key)? {
            None => Ok(default),
            Some(v) if v.len() == 2 => Ok([v[0], v[1]]),
            Some(_) => Err(Error::Config(format!("`{}` must have two entries", self.key(key)))),
        }
    }

    fn table(&mut self, key: &'static str) -> Result<Option<&'a Table>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(t)),
            Some(_) => Err(Error::Config(format!("`{}` must be a table", self.key(key)))),
        }
    }

    /// Rejects keys that were never asked for.
    fn finish(self) -> Result<()> {
        if let Some(t) = self.table {
            if let Some(k) = t.keys().find(|k| !self.seen.contains(&k.as_str())) {
                return Err(Error::Config(format!("unknown key `{}`", self.key(k))));
            }
        }
        Ok(())
    }
}

fn parse_guess(mut s: Section<'_>, default: &Guess, base: &Path) -> Result<Guess> {
    let Some(_) = s.table else {
        return Ok(default.clone());
    };
    let kind = s.str_or("kind", "")?;
    let guess = match kind.as_str() {
        "zero" => Guess::Zero,
        "rect" => Guess::Rect {
            amplitude_v_m: s.f64("amplitude_v_m")?,
            start_s: s.f64_or("start_s", 0.0)?,
            end_s: s.f64("end_s")?,
        },
        "gauss" => Guess::Gauss {
            e0_v_m: s.f64("e0_v_m")?,
            t0_s: s.f64("t0_s")?,
            sigma_s: s.f64("sigma_s")?,
        },
        "file" => {
            let path = s.str_or("path", "")?;
            if path.is_empty() {
                return Err(Error::MissingKey(s.key("path")));
            }
            Guess::File {
                path: base.join(path),
            }
        }
        "" => return Err(Error::MissingKey(s.key("kind"))),
        other => return Err(Error::Config(format!("unknown guess kind `{other}`"))),
    };
    s.finish()?;
    Ok(guess)
}

fn parse_mode_section(mut s: Section<'_>, default: &ModeSection, base: &Path) -> Result<ModeSection> {
    let alpha0 = s.f64_or("alpha0", default.alpha0)?;
    let guess_table = s.table("guess")?;
    let guess = parse_guess(Section::new(s.key("guess"), guess_table), &default.guess, base)?;
    s.finish()?;
    Ok(ModeSection { alpha0, guess })
}

impl RunConfig {
    /// Parses TOML text; relative paths inside it resolve against `base`.
    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self> {
        let root: Table = text.parse().map_err(|e: toml::de::Error| Error::Parse {
            path: base.to_path_buf(),
            msg: e.to_string(),
        })?;
        let mut top = Section::new("", Some(&root));

        let mut s = Section::new("physics", top.table("physics")?);
        if s.table.is_none() {
            return Err(Error::MissingKey("physics".into()));
        }
        let physics = PhysicsSection {
            mass_kg: s.f64("mass_kg")?,
            rho_down_c2m2_j: s.f64("rho_down_c2m2_j")?,
            rho_up_c2m2_j: s.f64("rho_up_c2m2_j")?,
            omega_x_rad_s: s.f64("omega_x_rad_s")?,
            omega_z_rad_s: s.f64("omega_z_rad_s")?,
            u0_v_m: s.f64("u0_v_m")?,
            alpha_v_m2: s.f64("alpha_v_m2")?,
            u_ex_r0_j: s.f64("u_ex_r0_j")?,
            f0_j_m: s.f64("f0_j_m")?,
            x0_m: s.opt_f64("x0_m")?,
        };
        s.finish()?;

        let d = UnitsSection::default();
        let mut s = Section::new("units", top.table("units")?);
        let units = UnitsSection {
            length_m: s.f64_or("length_m", d.length_m)?,
            time_s: s.f64_or("time_s", d.time_s)?,
        };
        s.finish()?;

        let d = GridSection::default();
        let mut s = Section::new("grid", top.table("grid")?);
        let grid = GridSection {
            qx_range_m: s.pair_or("qx_range_m", d.qx_range_m)?,
            qz_range_m: s.pair_or("qz_range_m", d.qz_range_m)?,
            nx: s.usize_or("nx", d.nx)?,
            nz: s.usize_or("nz", d.nz)?,
            absorb_width_m: s.f64_or("absorb_width_m", d.absorb_width_m)?,
        };
        s.finish()?;

        let d = TimeSection::default();
        let mut s = Section::new("time", top.table("time")?);
        let time = TimeSection {
            t_final_s: s.f64_or("t_final_s", d.t_final_s)?,
            dt_s: s.f64_or("dt_s", d.dt_s)?,
            snapshot_every_s: s.f64_or("snapshot_every_s", d.snapshot_every_s)?,
            frame_times_s: s.f64_list("frame_times_s")?.unwrap_or(d.frame_times_s),
        };
        s.finish()?;

        let d = ControlSection::default();
        let mut s = Section::new("control", top.table("control")?);
        let spinor_table = s.table("spinor")?;
        let bo_table = s.table("bo")?;
        let control = ControlSection {
            mode: Mode::parse(&s.str_or("mode", d.mode.name())?)?,
            eta: s.f64_or("eta", d.eta)?,
            zeta: s.f64_or("zeta", d.zeta)?,
            max_iters: s.usize_or("max_iters", d.max_iters)?,
            stop_tol: s.f64_or("stop_tol", d.stop_tol)?,
            patience: s.usize_or("patience", d.patience)?,
            monotonic_tol: s.f64_or("monotonic_tol", d.monotonic_tol)?,
            rule: s.str_or("rule", &d.rule)?,
            gauge: s.str_or("gauge", &d.gauge)?,
            spinor: parse_mode_section(Section::new("control.spinor", spinor_table), &d.spinor, base)?,
            bo: parse_mode_section(Section::new("control.bo", bo_table), &d.bo, base)?,
        };
        control.update_rule()?;
        control.gauge()?;
        s.finish()?;

        let d = TargetSection::default();
        let mut s = Section::new("target", top.table("target")?);
        let target = TargetSection {
            initial_m: s.pair_or("initial_m", d.initial_m)?,
            target_m: s.pair_or("target_m", d.target_m)?,
        };
        s.finish()?;

        let mut s = Section::new("output", top.table("output")?);
        let output = OutputSection {
            dir: PathBuf::from(s.str_or("dir", "out")?),
        };
        s.finish()?;
        top.finish()?;

        let cfg = RunConfig {
            physics,
            units,
            grid,
            time,
            control,
            target,
            output,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base).map_err(|e| match e {
            Error::Parse { msg, .. } => Error::Parse {
                path: path.to_path_buf(),
                msg,
            },
            other => other,
        })
    }

    /// Defaults around the strontium parameter set.
    pub fn strontium_88() -> Self {
        RunConfig {
            physics: PhysicsSection::from(&PhysicalParams::strontium_88()),
            units: UnitsSection::default(),
            grid: GridSection::default(),
            time: TimeSection::default(),
            control: ControlSection::default(),
            target: TargetSection::default(),
            output: OutputSection::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.units.system()?;
        let t = &self.time;
        if !(t.dt_s > 0.0 && t.t_final_s >= 0.0 && t.snapshot_every_s > 0.0) {
            return Err(Error::Config("time steps must be positive".into()));
        }
        if t.frame_times_s.iter().any(|f| *f < 0.0 || *f > t.t_final_s * (1.0 + 1e-12)) {
            return Err(Error::Config("frame times must lie within [0, t_final_s]".into()));
        }
        let g = &self.grid;
        if !(g.qx_range_m[0] < g.qx_range_m[1] && g.qz_range_m[0] < g.qz_range_m[1]) {
            return Err(Error::Config("grid ranges must be increasing".into()));
        }
        let half_span = 0.5 * (g.qx_range_m[1] - g.qx_range_m[0]).min(g.qz_range_m[1] - g.qz_range_m[0]);
        if !(g.absorb_width_m >= 0.0 && g.absorb_width_m < half_span) {
            return Err(Error::Config("grid.absorb_width_m must lie in [0, half the narrower span)".into()));
        }
        Ok(())
    }

    /// Halves the grid along both axes and doubles the time step.
    pub fn fast(mut self) -> Self {
        self.grid.nx /= 2;
        self.grid.nz /= 2;
        self.time.dt_s *= 2.0;
        self.time.snapshot_every_s = self.time.snapshot_every_s.max(self.time.dt_s);
        self
    }

    pub fn unit_system(&self) -> Result<UnitSystem> {
        self.units.system()
    }

    /// Grid in internal length units.
    pub fn make_grid(&self) -> Result<Grid2D> {
        let l = self.units.length_m;
        let g = &self.grid;
        make_grid(
            (
                g.qx_range_m[0] / l,
                g.qx_range_m[1] / l,
                g.qz_range_m[0] / l,
                g.qz_range_m[1] / l,
            ),
            g.nx,
            g.nz,
        )
    }

    /// `(nt, dt)` in internal time; `t_final_s` is stretched to a whole
    /// number of steps when needed.
    pub fn time_steps(&self) -> Result<(usize, f64)> {
        let tu = self.units.time_s;
        let dt = self.time.dt_s / tu;
        let (nt, _, _) = time_grid(self.time.t_final_s / tu, dt)?;
        Ok((nt, dt))
    }

    /// Steps between trace samples.
    pub fn snapshot_cadence(&self) -> usize {
        ((self.time.snapshot_every_s / self.time.dt_s).round() as usize).max(1)
    }

    /// Step indices of the density frames.
    pub fn frame_steps(&self, nt: usize) -> Vec<usize> {
        let mut steps: Vec<usize> = self
            .time
            .frame_times_s
            .iter()
            .map(|t| ((t / self.time.dt_s).round() as usize).min(nt))
            .collect();
        steps.sort_unstable();
        steps.dedup();
        steps
    }

    /// Centres in internal length units.
    pub fn centers(&self) -> ((f64, f64), (f64, f64)) {
        let l = self.units.length_m;
        let t = &self.target;
        (
            (t.initial_m[0] / l, t.initial_m[1] / l),
            (t.target_m[0] / l, t.target_m[1] / l),
        )
    }

    /// The resolved configuration as TOML.
    pub fn manifest(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PHYSICS: &str = r#"
[physics]
mass_kg = 1.45914e-25
rho_down_c2m2_j = 8.9e-30
rho_up_c2m2_j = -3.8e-31
omega_x_rad_s = 1.0053096491487338e7
omega_z_rad_s = 6.283185307179586e6
u0_v_m = 2.529
alpha_v_m2 = 8.17e8
u_ex_r0_j = 0.0
f0_j_m = 1.3252e-20
"#;

    #[test]
    fn physics_only_file_takes_defaults() {
        let cfg = RunConfig::from_toml_str(PHYSICS, Path::new(".")).unwrap();
        assert_eq!(cfg.grid, GridSection::default());
        assert_eq!(cfg.control.mode, Mode::Spinor);
        assert_eq!(cfg.control.spinor.guess, Guess::default_rect());
        assert_eq!(cfg.physics.x0_m, None);
    }

    #[test]
    fn missing_key_is_named() {
        let text = PHYSICS.replace("alpha_v_m2 = 8.17e8\n", "");
        match RunConfig::from_toml_str(&text, Path::new(".")) {
            Err(Error::MissingKey(k)) => assert_eq!(k, "physics.alpha_v_m2"),
            other => panic!("{other:?}"),
        }
        match RunConfig::from_toml_str("[grid]\nnx = 64\n", Path::new(".")) {
            Err(Error::MissingKey(k)) => assert_eq!(k, "physics"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{PHYSICS}\n[grid]\nnxx = 64\n");
        let err = RunConfig::from_toml_str(&text, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("grid.nxx"), "{err}");
    }

    #[test]
    fn guess_sections_parse() {
        let text = format!(
            "{PHYSICS}\n[control]\nmode = \"bo\"\n[control.bo.guess]\nkind = \"rect\"\namplitude_v_m = 1.0\nend_s = 1e-8\n"
        );
        let cfg = RunConfig::from_toml_str(&text, Path::new(".")).unwrap();
        assert_eq!(cfg.control.mode, Mode::Bo);
        assert_eq!(
            cfg.control.bo.guess,
            Guess::Rect {
                amplitude_v_m: 1.0,
                start_s: 0.0,
                end_s: 1e-8
            }
        );
        let text = format!("{PHYSICS}\n[control.spinor.guess]\nkind = \"gauss\"\ne0_v_m = 1.0\n");
        match RunConfig::from_toml_str(&text, Path::new(".")) {
            Err(Error::MissingKey(k)) => assert_eq!(k, "control.spinor.guess.t0_s"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn absorbing_border_is_bounded() {
        let ok = format!("{PHYSICS}[grid]\nabsorb_width_m = 20e-9\n");
        let cfg = RunConfig::from_toml_str(&ok, Path::new(".")).unwrap();
        assert_eq!(cfg.grid.absorb_width_m, 20e-9);
        for bad in ["-1e-9", "64e-9"] {
            let text = format!("{PHYSICS}[grid]\nabsorb_width_m = {bad}\n");
            assert!(matches!(RunConfig::from_toml_str(&text, Path::new(".")), Err(Error::Config(_))));
        }
    }

    #[test]
    fn manifest_round_trips() {
        let mut cfg = RunConfig::strontium_88();
        cfg.control.bo.guess = Guess::Zero;
        let back = RunConfig::from_toml_str(&cfg.manifest(), Path::new(".")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn fast_profile_halves_the_grid() {
        let cfg = RunConfig::strontium_88().fast();
        assert_eq!((cfg.grid.nx, cfg.grid.nz), (256, 32));
        assert_eq!(cfg.time.dt_s, 2e-9);
        assert_eq!(cfg.time_steps().unwrap().0, 5000);
        assert_eq!(cfg.snapshot_cadence(), 5);
        assert_eq!(cfg.frame_steps(5000), vec![0, 2500, 5000]);
    }

    #[test]
    fn malformed_toml_is_a_parse_error() {
        let err = RunConfig::from_toml_str("[physics\n", Path::new("x")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
