use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dshock::scenario::{run, OracleProblem, Problem, RiemannProblem, RunOptions, Scenario, WeakProblem};
use dshock::{Error, FluxSpec};

const SPHERICAL_PRESET: &str = include_str!("../../scenarios/spherical_converging.json");

#[derive(Parser)]
#[command(name = "dshock", version, about = "Delta-shock front tracking, balance audits and oracles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, or a file path for single-artifact commands;
    /// defaults to the scenario's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Treat advisory checks as enforced.
    #[arg(long)]
    strict: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FluxKind {
    Standard,
    Relativistic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Riemann,
    Spherical,
}

#[derive(Subcommand)]
enum Command {
    /// Run any scenario file.
    Run(Common),
    /// 1-D Riemann problem, from a scenario or from flags.
    Riemann {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        rho_l: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        rho_r: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        u_l: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        u_r: Option<f64>,
        #[arg(long, value_enum, default_value = "standard")]
        flux: FluxKind,
        #[arg(long)]
        c0: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        e0: f64,
        #[arg(long, allow_hyphen_values = true)]
        u_delta0: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long, default_value_t = 101)]
        samples: usize,
    },
    /// Spherically symmetric front.
    Spherical(Common),
    /// Sticky-particle oracle.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// Particles (riemann) or shells (spherical).
        #[arg(long = "N")]
        n: Option<usize>,
        /// Final time.
        #[arg(long = "T")]
        t: Option<f64>,
    },
    /// Weak-identity residuals of a candidate solution.
    Weakcheck {
        #[command(flatten)]
        common: Common,
        /// Scenario holding the candidate (alias of --config).
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long)]
        levels: Option<usize>,
    },
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

fn load(path: Option<&Path>) -> dshock::Result<Option<Scenario>> {
    path.map(Scenario::load).transpose()
}

fn is_file_target(out: &Path, ext: &str) -> bool {
    out.extension().is_some_and(|e| e == ext)
}

fn expect_kind(s: &Scenario, kinds: &[&str]) -> dshock::Result<()> {
    if kinds.contains(&s.problem.kind()) {
        Ok(())
    } else {
        Err(usage(format!("scenario kind `{}` does not match this subcommand", s.problem.kind())))
    }
}

fn options(out: &Path, strict: bool, single: Option<(&str, &str)>) -> RunOptions {
    let mut o = match single {
        Some((ext, artifact)) if is_file_target(out, ext) => RunOptions::single_file(out, artifact),
        _ => RunOptions::new(out),
    };
    o.strict = strict;
    o
}

fn dispatch(cli: Cli) -> dshock::Result<i32> {
    let (mut scenario, common, single) = match &cli.command {
        Command::Run(c) => {
            let s = load(c.config.as_deref())?.ok_or_else(|| usage("--config is required"))?;
            (s, c, None)
        }
        Command::Spherical(c) => {
            let s = load(c.config.as_deref())?.ok_or_else(|| usage("--config is required"))?;
            expect_kind(&s, &["spherical"])?;
            (s, c, Some(("csv", "trajectory.csv")))
        }
        Command::Riemann { common, rho_l, rho_r, u_l, u_r, flux, c0, e0, u_delta0, t_end, samples } => {
            let s = match load(common.config.as_deref())? {
                Some(s) => {
                    expect_kind(&s, &["riemann1d", "planar"])?;
                    s
                }
                None => {
                    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| usage(format!("--{name} is required without --config")));
                    let flux = match flux {
                        FluxKind::Standard => FluxSpec::Standard {},
                        FluxKind::Relativistic => {
                            FluxSpec::Relativistic { c0: c0.ok_or_else(|| usage("--c0 is required for the relativistic flux"))? }
                        }
                    };
                    Scenario {
                        name: "riemann".into(),
                        flux,
                        seed: 0,
                        output: None,
                        tolerances: Default::default(),
                        problem: Problem::Riemann1d(RiemannProblem {
                            rho_l: need(*rho_l, "rho-l")?,
                            u_l: need(*u_l, "u-l")?,
                            rho_r: need(*rho_r, "rho-r")?,
                            u_r: need(*u_r, "u-r")?,
                            e0: *e0,
                            u_delta0: *u_delta0,
                            x0: 0.0,
                            t_end: need(*t_end, "t-end")?,
                            samples: *samples,
                            support: None,
                            time_reversed: false,
                        }),
                    }
                }
            };
            (s, common, Some(("csv", "trajectory.csv")))
        }
        Command::Oracle { common, preset, n, t } => {
            let mut s = match (load(common.config.as_deref())?, preset) {
                (Some(s), _) => s,
                (None, Some(Preset::Riemann)) => Scenario {
                    name: "oracle_riemann".into(),
                    flux: FluxSpec::Standard {},
                    seed: 0,
                    output: None,
                    tolerances: Default::default(),
                    problem: Problem::Oracle(OracleProblem {
                        rho_l: 4.0,
                        u_l: 1.0,
                        rho_r: 1.0,
                        u_r: -1.0,
                        particles: 200_000,
                        half_length: 4.0,
                        t_end: 1.0,
                        samples: 10,
                        random: false,
                    }),
                },
                (None, Some(Preset::Spherical)) => Scenario::from_json(SPHERICAL_PRESET)?,
                (None, None) => return Err(usage("either --config or --preset is required")),
            };
            expect_kind(&s, &["oracle", "spherical"])?;
            match &mut s.problem {
                Problem::Oracle(p) => {
                    if let Some(n) = n {
                        p.particles = *n;
                    }
                    if let Some(t) = t {
                        p.t_end = *t;
                        p.half_length = p.half_length.max(2.0 * t + 1.0);
                    }
                }
                Problem::Spherical(p) => {
                    let o = p.oracle.as_mut().ok_or_else(|| usage("spherical scenario has no oracle section"))?;
                    if let Some(n) = n {
                        o.shells = *n;
                    }
                    if let Some(t) = t {
                        p.t_end = *t;
                    }
                }
                _ => unreachable!(),
            }
            (s, common, Some(("csv", "oracle.csv")))
        }
        Command::Weakcheck { common, solution, levels } => {
            let path = solution.as_deref().or(common.config.as_deref());
            let mut s = load(path)?.ok_or_else(|| usage("--solution is required"))?;
            expect_kind(&s, &["weakcheck", "riemann1d", "planar", "spherical"])?;
            if s.problem.kind() != "weakcheck" {
                let candidate = s.problem.clone();
                let bounds = candidate.default_box()?;
                s.problem = Problem::Weakcheck(WeakProblem {
                    candidate: Box::new(candidate),
                    bounds,
                    members: 8,
                    levels: 6,
                    points: 4,
                    perturb: 0.0,
                });
            }
            if let (Problem::Weakcheck(w), Some(k)) = (&mut s.problem, levels) {
                w.levels = *k;
            }
            (s, common, Some(("json", "report.json")))
        }
    };
    if let Some(seed) = common.seed {
        scenario.seed = seed;
    }
    let out = common
        .out
        .clone()
        .or_else(|| scenario.output.clone())
        .ok_or_else(|| usage("--out is required when the scenario has no `output`"))?;
    let outcome = run(&scenario, &options(&out, common.strict, single))?;
    for c in &outcome.checks {
        let tag = if c.passed {
            "PASS"
        } else if c.advisory {
            "WARN"
        } else {
            "FAIL"
        };
        println!("{tag} {} value={:e} tol={:e}", c.name, c.value, c.tolerance);
    }
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("DSHOCK_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: DSHOCK_THREADS must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
