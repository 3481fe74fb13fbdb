use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Args, Parser, Subcommand, ValueEnum};

use rydci::config::{Guess, Mode, RunConfig};
use rydci::runner::{self, FieldSource};
use rydci::{Error, Result};

#[derive(Parser)]
#[command(name = "rydci", version, about = "Optimal control of two trapped Rydberg ions near a conical intersection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the equilibrium geometry and print the derived constants.
    Equilibrium(Common),
    /// Export the coupling coefficients and adiabatic surfaces.
    Surfaces(Common),
    /// Single forward propagation under a zero or stored field.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// `zero` or the path of a `t,u` field file.
        #[arg(long, default_value = "zero")]
        field: String,
    },
    /// Optimize the control field.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long, value_enum)]
        seed_field: Option<SeedArg>,
        /// Field file used with `--seed-field file`.
        #[arg(long)]
        seed_file: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Run configuration; repeat to run several.
    #[arg(long, short, required = true)]
    config: Vec<PathBuf>,
    /// Output directory. With several configs, one subdirectory per config.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "default")]
    profile: Profile,
    /// Configs to run concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Spinor,
    Bo,
    Both,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Spinor => Mode::Spinor,
            ModeArg::Bo => Mode::Bo,
            ModeArg::Both => Mode::Both,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SeedArg {
    Rect,
    Gauss,
    File,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Profile {
    Default,
    Fast,
}

fn load(path: &Path, profile: Profile) -> Result<RunConfig> {
    let cfg = RunConfig::load(path)?;
    Ok(match profile {
        Profile::Default => cfg,
        Profile::Fast => cfg.fast(),
    })
}

fn out_dir(cfg: &RunConfig, common: &Common, path: &Path) -> PathBuf {
    match (&common.out, common.config.len()) {
        (Some(out), n) if n > 1 => {
            let stem = path.file_stem().unwrap_or_default();
            out.join(stem)
        }
        (out, _) => runner::output_dir(cfg, out.as_deref()),
    }
}

fn apply_seed(cfg: &mut RunConfig, seed: SeedArg, file: Option<&Path>) -> Result<()> {
    let modes: &[Mode] = match cfg.control.mode {
        Mode::Both => &[Mode::Spinor, Mode::Bo],
        Mode::Spinor => &[Mode::Spinor],
        Mode::Bo => &[Mode::Bo],
    };
    for &m in modes {
        let section = cfg.control.mode_section_mut(m);
        section.guess = match seed {
            SeedArg::Rect if matches!(section.guess, Guess::Rect { .. }) => section.guess.clone(),
            SeedArg::Rect => Guess::default_rect(),
            SeedArg::Gauss if matches!(section.guess, Guess::Gauss { .. }) => section.guess.clone(),
            SeedArg::Gauss => Guess::default_gauss(),
            SeedArg::File => match file {
                Some(p) => Guess::File { path: p.to_path_buf() },
                None if matches!(section.guess, Guess::File { .. }) => section.guess.clone(),
                None => return Err(Error::MissingKey("--seed-file".into())),
            },
        };
    }
    Ok(())
}

fn run_one(command: &Command, path: &Path) -> Result<()> {
    match command {
        Command::Equilibrium(common) => {
            let cfg = load(path, common.profile)?;
            let out = out_dir(&cfg, common, path);
            let report = runner::cmd_equilibrium(&cfg, &out)?;
            print!("{}", report.text());
        }
        Command::Surfaces(common) => {
            let cfg = load(path, common.profile)?;
            let out = out_dir(&cfg, common, path);
            let report = runner::cmd_surfaces(&cfg, &out)?;
            match report.ci {
                Some((x, z)) => println!("conical intersection at qx = {x} nm, qz = {z} nm"),
                None => println!("no conical intersection"),
            }
            println!("wrote {} files to {}", report.files.len(), out.display());
        }
        Command::Evolve { common, mode, field } => {
            let mut cfg = load(path, common.profile)?;
            if let Some(m) = mode {
                cfg.control.mode = (*m).into();
            }
            let out = out_dir(&cfg, common, path);
            let source = if field == "zero" {
                FieldSource::Zero
            } else {
                FieldSource::File(field.into())
            };
            for r in runner::cmd_evolve(&cfg, &source, &out)? {
                println!(
                    "{}: qx(t_f) = {:.6} nm, J1(t_f) = {:.6}, crossings = {}",
                    r.mode.name(),
                    r.qx_final,
                    r.j1_final,
                    r.crossings
                );
            }
        }
        Command::Optimize {
            common,
            mode,
            max_iters,
            seed_field,
            seed_file,
            quiet,
        } => {
            let mut cfg = load(path, common.profile)?;
            if let Some(m) = mode {
                cfg.control.mode = (*m).into();
            }
            if let Some(n) = max_iters {
                cfg.control.max_iters = *n;
            }
            if let Some(seed) = seed_field {
                apply_seed(&mut cfg, *seed, seed_file.as_deref())?;
            }
            let out = out_dir(&cfg, common, path);
            let reports = runner::cmd_optimize(&cfg, &out, |mode, s| {
                if !quiet {
                    let k = s.iteration;
                    eprintln!(
                        "[{}] k={k:<4} J={:.8} J1={:.8} J2={:.8}",
                        mode.name(),
                        s.j[k],
                        s.j1[k],
                        s.j2[k]
                    );
                }
            })?;
            for r in reports {
                println!(
                    "{}: J1 = {:.6} after {} iterations (plateau at {}), qx(t_f) = {:.6} nm, crossings = {} -> {}",
                    r.mode.name(),
                    r.j1_final(),
                    r.state.iteration,
                    r.plateau,
                    r.record.qx.last().unwrap(),
                    r.crossings,
                    r.dir.display()
                );
            }
        }
    }
    Ok(())
}

fn common(command: &Command) -> &Common {
    match command {
        Command::Equilibrium(c) | Command::Surfaces(c) => c,
        Command::Evolve { common, .. } | Command::Optimize { common, .. } => common,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let configs = &common(&cli.command).config;
    let jobs = common(&cli.command).jobs.clamp(1, configs.len().max(1));

    let next = AtomicUsize::new(0);
    let worst = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(path) = configs.get(i) else { break };
                if let Err(e) = run_one(&cli.command, path) {
                    eprintln!("error: {}: {e}", path.display());
                    worst.fetch_max(e.exit_code() as usize, Ordering::SeqCst);
                }
            });
        }
    });
    ExitCode::from(worst.into_inner() as u8)
}
