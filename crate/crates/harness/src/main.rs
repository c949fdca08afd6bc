//! Command-line front end: scenario flags, config-file ingestion, and the
//! experiment verbs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use swarm_sim::config::{ArrayForm, FloorRule, ScenarioConfig, ScenarioOverlay};
use swarm_sim::experiment;
use swarm_sim::Result;

#[derive(Parser)]
#[command(
    name = "swarm-sim",
    version,
    about = "Formation optimization experiments for position-controllable terminal swarms",
    after_help = "Precedence: built-in defaults, then --config file values, then flags.\n\
                  Exit codes: 0 success, 2 infeasible or invalid scenario, 3 solver failure."
)]
struct Cli {
    /// TOML file with scenario fields; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(flatten)]
    flags: ScenarioFlags,

    #[command(subcommand)]
    command: Command,
}

/// Scenario fields as command-line flags. Absent flags leave the config
/// file or default values in place.
#[derive(Args)]
struct ScenarioFlags {
    /// Antenna layout: ula or upa.
    #[arg(long, global = true, value_enum)]
    array: Option<ArrayForm>,
    /// Elements along the horizontal axis.
    #[arg(long, global = true)]
    m_y: Option<usize>,
    /// Elements along the vertical axis (planar arrays).
    #[arg(long, global = true)]
    m_z: Option<usize>,
    /// Elevation half-span in degrees.
    #[arg(long, global = true)]
    theta_deg: Option<f64>,
    /// Azimuth half-span in degrees.
    #[arg(long, global = true)]
    phi_deg: Option<f64>,
    /// Nearest allowed terminal range in meters.
    #[arg(long, global = true)]
    r_min: Option<f64>,
    /// Farthest allowed terminal range in meters.
    #[arg(long, global = true)]
    r_max: Option<f64>,
    /// Pairwise spacing floor in meters; 0 disables it.
    #[arg(long, global = true)]
    d_min: Option<f64>,
    /// Pairwise spacing ceiling in meters; "inf" disables it.
    #[arg(long, global = true)]
    d_max: Option<f64>,
    /// Reference SNR in dB at range r0.
    #[arg(long, global = true)]
    p_bar_db: Option<f64>,
    /// Reference range in meters.
    #[arg(long, global = true)]
    r0: Option<f64>,
    /// Terminal count; defaults to the interference-free direction budget.
    #[arg(long, global = true)]
    users: Option<usize>,
    /// Comma-separated terminal counts for sweep runs.
    #[arg(long, global = true, value_delimiter = ',')]
    k_sweep: Option<Vec<usize>>,
    /// Monte-Carlo trial count (cdf runs default to 10000).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Base seed; trial t draws from stream t of this seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Integer-boundary handling in direction-count formulas.
    #[arg(long, global = true, value_enum)]
    floor_rule: Option<FloorRule>,
    /// Direction codebook density relative to the orthogonal grid.
    #[arg(long, global = true)]
    oversampling: Option<usize>,
    /// Cap on alternating refinement rounds.
    #[arg(long, global = true)]
    max_rounds: Option<usize>,
    /// Relative gain under which the refinement stops.
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    /// Directory the result files are written into.
    #[arg(long, global = true, value_name = "DIR")]
    output_dir: Option<PathBuf>,
}

impl ScenarioFlags {
    fn overlay(&self) -> ScenarioOverlay {
        ScenarioOverlay {
            array: self.array,
            m_y: self.m_y,
            m_z: self.m_z,
            theta_deg: self.theta_deg,
            phi_deg: self.phi_deg,
            r_min: self.r_min,
            r_max: self.r_max,
            d_min: self.d_min,
            d_max: self.d_max,
            p_bar_db: self.p_bar_db,
            r0: self.r0,
            users: self.users,
            k_sweep: self.k_sweep.clone(),
            trials: self.trials,
            seed: self.seed,
            floor_rule: self.floor_rule,
            oversampling: self.oversampling,
            max_rounds: self.max_rounds,
            rel_tol: self.rel_tol,
            output_dir: self.output_dir.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form direction counts and capacity ceilings of the scenario.
    Characterize,
    /// Optimize the formation for both objectives and compare against a
    /// random baseline draw.
    Optimize,
    /// Mean rate of every scheme across a range of terminal counts.
    Sweep,
    /// Rate distribution over Monte-Carlo baseline draws.
    Cdf,
    /// Run a canned preset: 2 convergence, 3 count scaling, 4 locations,
    /// 5 interference, 6 separations, 7 rate versus count, 8 rate CDF.
    ReproduceFigure {
        #[arg(value_parser = clap::value_parser!(u8).range(2..=8))]
        figure: u8,
    },
}

/// Merges two overlays; `high` wins where both set a field.
fn merge(high: ScenarioOverlay, low: ScenarioOverlay) -> ScenarioOverlay {
    ScenarioOverlay {
        array: high.array.or(low.array),
        m_y: high.m_y.or(low.m_y),
        m_z: high.m_z.or(low.m_z),
        theta_deg: high.theta_deg.or(low.theta_deg),
        phi_deg: high.phi_deg.or(low.phi_deg),
        r_min: high.r_min.or(low.r_min),
        r_max: high.r_max.or(low.r_max),
        d_min: high.d_min.or(low.d_min),
        d_max: high.d_max.or(low.d_max),
        p_bar_db: high.p_bar_db.or(low.p_bar_db),
        r0: high.r0.or(low.r0),
        users: high.users.or(low.users),
        k_sweep: high.k_sweep.or(low.k_sweep),
        trials: high.trials.or(low.trials),
        seed: high.seed.or(low.seed),
        floor_rule: high.floor_rule.or(low.floor_rule),
        oversampling: high.oversampling.or(low.oversampling),
        max_rounds: high.max_rounds.or(low.max_rounds),
        rel_tol: high.rel_tol.or(low.rel_tol),
        output_dir: high.output_dir.or(low.output_dir),
    }
}

fn run(cli: &Cli) -> Result<()> {
    let file_overlay = match &cli.config {
        Some(path) => ScenarioOverlay::from_toml_file(path)?,
        None => ScenarioOverlay::default(),
    };
    let explicit = merge(cli.flags.overlay(), file_overlay);
    let mut cfg = ScenarioConfig::default();
    cfg.apply(&explicit);
    if explicit.trials.is_none() {
        if let Command::Cdf = cli.command {
            cfg.trials = 10_000;
        }
    }
    cfg.validate()?;

    match &cli.command {
        Command::Characterize => {
            let s = experiment::run_characterize(&cfg)?;
            println!(
                "{} elements, {} interference-free directions, rho {:.6}, ceiling {:.6} bits",
                s.elements, s.direction_budget, s.rho, s.capacity_ceiling
            );
            println!("wrote {}", s.dir.display());
        }
        Command::Optimize => {
            let s = experiment::run_optimize(&cfg)?;
            println!(
                "K={}: capacity_ub {:.6}, sic {:.6} ({} rounds), tin {:.6} ({} rounds), random {:.6}",
                s.users, s.capacity_ub, s.sic, s.sic_rounds, s.tin, s.tin_rounds, s.random
            );
            println!("wrote {}", s.dir.display());
        }
        Command::Sweep => {
            let s = experiment::run_sweep(&cfg)?;
            for p in &s.points {
                println!(
                    "K={:3}: capacity_ub {:.3}, sic {:.3}, tin {:.3}, random mean {:.3}",
                    p.k, p.capacity_ub, p.sic, p.tin, p.random_mean
                );
            }
            println!("wrote {}", s.dir.display());
        }
        Command::Cdf => {
            let s = experiment::run_cdf(&cfg)?;
            println!(
                "K={}, {} trials: random mean {:.6} in [{:.6}, {:.6}], sic {:.6}, tin {:.6}, capacity_ub {:.6}",
                s.users, s.trials, s.random_mean, s.random_min, s.random_max, s.sic, s.tin, s.capacity_ub
            );
            println!("wrote {}", s.dir.display());
        }
        Command::ReproduceFigure { figure } => {
            let reports = experiment::reproduce_figure(*figure, &cfg, &explicit)?;
            for r in &reports {
                println!("{}: {}", r.name, r.summary);
                println!("  wrote {}", r.dir.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
