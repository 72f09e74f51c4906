use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use matphi::channels::ChannelSpec;
use matphi_cli::config::{Dynamics, Experiment, ExperimentConfig, ProcessSpec, TimeGrid};
use matphi_cli::experiments::validate_file;
use matphi_cli::report::write_atomic;
use matphi_cli::{run, CliError};

/// Matrix Φ-entropy experiments: decay curves, Sobolev constants, mixing times.
#[derive(Parser, Debug)]
#[command(name = "matphi", version)]
struct Cli {
    /// Seed for random ensembles, graphs and optimizer restarts.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file; `-` or `csv` print to stdout.
    #[arg(long, global = true)]
    out: Option<String>,

    /// JSON experiment config; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Print every checked inequality with its margin to stderr.
    #[arg(long, global = true)]
    tol_report: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct GridArgs {
    /// Last time of the grid.
    #[arg(long)]
    t_max: Option<f64>,
    /// Number of grid points, including t = 0.
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Variance and Holevo decay of the depolarizing qubit channel.
    Figure1 {
        #[arg(long)]
        r: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Spectral-gap and MLSI constants of the depolarizing channel.
    Constants {
        /// Comma-separated rates.
        #[arg(long, value_delimiter = ',')]
        rates: Option<Vec<f64>>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
    },
    /// Variance and entropy decay of the jump process on {0,1}^n.
    Hypercube {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        d: Option<usize>,
        /// Ensemble with bit-string labels; random states when omitted.
        #[arg(long)]
        ensemble: Option<String>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Mixing curve and mixing times of a quantum random graph.
    Mixing {
        /// `hypercube`, `random` or a graph file.
        #[arg(long)]
        graph: Option<String>,
        #[arg(long)]
        vertices: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        c2: Option<f64>,
        #[arg(long)]
        c_chi: Option<f64>,
        /// Restarts for estimating C_χ when it is not supplied.
        #[arg(long)]
        restarts: Option<usize>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Multi-restart estimate of a Sobolev constant, one row per restart.
    SobolevEstimate {
        /// `spectral-gap` or `mlsi`.
        #[arg(long)]
        kind: Option<String>,
        /// `depolarizing` or `phase-damping`.
        #[arg(long)]
        channel: Option<String>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// H_Φ(P_t f) along a time grid.
    DecayCurve {
        /// `depolarizing`, `phase-damping` or `hypercube-jump`.
        #[arg(long)]
        channel: Option<String>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        /// `figure1`, `appendixB(ε,p₁)` or an ensemble file.
        #[arg(long)]
        ensemble: Option<String>,
        /// `variance`, `entropy` or `power:p`.
        #[arg(long)]
        phi: Option<String>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Check an ensemble or graph file.
    Validate { path: PathBuf },
}

fn dynamics_from(
    name: Option<String>,
    r: Option<f64>,
    d: Option<usize>,
    n: Option<usize>,
    p: Option<f64>,
    current: Option<Dynamics>,
) -> Result<Option<Dynamics>, CliError> {
    let given = r.is_some() || d.is_some() || n.is_some() || p.is_some();
    let name = match (name, &current) {
        (Some(n), _) => n,
        (None, _) if !given => return Ok(current),
        (None, Some(Dynamics::Channel(ChannelSpec::PhaseDamping { .. }))) => "phase-damping".into(),
        (None, Some(Dynamics::Process(_))) => "hypercube-jump".into(),
        (None, _) => "depolarizing".into(),
    };
    let (cur_r, cur_d) = match &current {
        Some(Dynamics::Channel(ChannelSpec::Depolarizing { r, d })) => (Some(*r), Some(*d)),
        Some(Dynamics::Channel(ChannelSpec::PhaseDamping { r })) => (Some(*r), None),
        Some(Dynamics::Process(ProcessSpec::HypercubeJump { d, .. })) => (None, Some(*d)),
        None => (None, None),
    };
    let r = r.or(cur_r).unwrap_or(1.0);
    let d = d.or(cur_d).unwrap_or(2);
    Ok(Some(match name.as_str() {
        "depolarizing" => Dynamics::Channel(ChannelSpec::Depolarizing { r, d }),
        "phase-damping" => Dynamics::Channel(ChannelSpec::PhaseDamping { r }),
        "hypercube-jump" | "hypercube" => {
            let (cur_n, cur_p) = match &current {
                Some(Dynamics::Process(ProcessSpec::HypercubeJump { n, p, .. })) => (Some(*n), Some(*p)),
                _ => (None, None),
            };
            Dynamics::Process(ProcessSpec::HypercubeJump {
                n: n.or(cur_n).unwrap_or(3),
                p: p.or(cur_p).unwrap_or(0.5),
                d,
            })
        }
        other => return Err(CliError::Input(format!("unknown channel {other:?}"))),
    }))
}

fn apply_grid(cfg: &mut ExperimentConfig, g: GridArgs) {
    if g.t_max.is_none() && g.points.is_none() {
        return;
    }
    let current = cfg.grid;
    cfg.grid = Some(TimeGrid {
        t_max: g.t_max.or(current.map(|c| c.t_max)).unwrap_or(3.0),
        points: g.points.or(current.map(|c| c.points)).unwrap_or(31),
    });
}

fn set<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

/// Merges the config file (if any) with the subcommand's flags.
fn build_config(cli: Cli) -> Result<(ExperimentConfig, bool), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(&p.to_string_lossy())?,
        None => ExperimentConfig::default(),
    };
    set(&mut cfg.out, cli.out);
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let exp = match cli.command {
        Command::Figure1 { r, grid } => {
            cfg.dynamics = dynamics_from(None, r, None, None, None, cfg.dynamics.take())?;
            apply_grid(&mut cfg, grid);
            Experiment::Figure1
        }
        Command::Constants { rates, restarts, m } => {
            set(&mut cfg.rates, rates);
            set(&mut cfg.restarts, restarts);
            set(&mut cfg.m, m);
            Experiment::Constants
        }
        Command::Hypercube {
            n,
            p,
            d,
            ensemble,
            grid,
        } => {
            let name = if n.is_some() || p.is_some() || d.is_some() {
                Some("hypercube-jump".to_string())
            } else {
                None
            };
            cfg.dynamics = dynamics_from(name, None, d, n, p, cfg.dynamics.take())?;
            set(&mut cfg.ensemble, ensemble);
            apply_grid(&mut cfg, grid);
            Experiment::Hypercube
        }
        Command::Mixing {
            graph,
            vertices,
            epsilon,
            c2,
            c_chi,
            restarts,
            grid,
        } => {
            set(&mut cfg.graph, graph);
            set(&mut cfg.vertices, vertices);
            set(&mut cfg.epsilon, epsilon);
            set(&mut cfg.c2, c2);
            set(&mut cfg.c_chi, c_chi);
            set(&mut cfg.restarts, restarts);
            apply_grid(&mut cfg, grid);
            Experiment::Mixing
        }
        Command::SobolevEstimate {
            kind,
            channel,
            r,
            d,
            m,
            restarts,
        } => {
            set(&mut cfg.kind, kind);
            cfg.dynamics = dynamics_from(channel, r, d, None, None, cfg.dynamics.take())?;
            set(&mut cfg.m, m);
            set(&mut cfg.restarts, restarts);
            Experiment::SobolevEstimate
        }
        Command::DecayCurve {
            channel,
            r,
            d,
            n,
            p,
            ensemble,
            phi,
            grid,
        } => {
            cfg.dynamics = dynamics_from(channel, r, d, n, p, cfg.dynamics.take())?;
            set(&mut cfg.ensemble, ensemble);
            set(&mut cfg.phi, phi);
            apply_grid(&mut cfg, grid);
            Experiment::DecayCurve
        }
        Command::Validate { .. } => unreachable!("handled before config assembly"),
    };
    if let Some(named) = cfg.experiment {
        if named != exp {
            return Err(CliError::Input(format!(
                "config is for {}, command is {}",
                named.name(),
                exp.name()
            )));
        }
    }
    cfg.experiment = Some(exp);
    Ok((cfg, cli.tol_report))
}

fn validate(path: &Path) -> ExitCode {
    match validate_file(path) {
        Ok(problems) if problems.is_empty() => {
            println!("{}: ok", path.display());
            ExitCode::SUCCESS
        }
        Ok(problems) => {
            for p in problems {
                println!("{}: {p}", path.display());
            }
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    let (cfg, tol_report) = build_config(cli)?;
    let (resolved, report) = run(&cfg)?;
    let text = report.render(&resolved);
    match resolved.out.as_deref() {
        None | Some("-") | Some("csv") => print!("{text}"),
        Some(path) => write_atomic(Path::new(path), &text)?,
    }
    if tol_report {
        for c in &report.checks {
            eprintln!("{c}");
        }
    }
    for c in report.failures() {
        eprintln!("assertion failed: {c}");
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Command::Validate { path } = &cli.command {
        return validate(path);
    }
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
