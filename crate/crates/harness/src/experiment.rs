//! Experiment kinds behind the CLI verbs: scenario characterization, a
//! single optimization run, terminal-count sweeps, Monte-Carlo rate
//! distributions, and canned preset panels.
//!
//! Every experiment writes CSV tables plus a JSON manifest into its own
//! directory. Random trials draw from per-trial generator streams, so any
//! trial's outcome is independent of the trial count and of execution
//! order; rows are assembled in a fixed order to keep reruns byte-identical.

use std::path::PathBuf;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use swarm_mimo::metrics::UavPlacement;
use swarm_mimo::orthogonal::{n_upa_asymptotic, n_upa_bounds};
use swarm_mimo::{ArrayGeometry, RateObjective};

use crate::baseline::random_swarm;
use crate::config::{ArrayForm, ScenarioConfig, ScenarioOverlay};
use crate::emit::{float_field, DerivedQuantities, Emitter};
use crate::error::Result;
use crate::schemes::{self, Scheme};

/// Generator for one Monte-Carlo trial. Seed selects the run, the stream
/// index selects the trial.
fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Draws the baseline swarm of trial `trial` and scores it with linear
/// receivers.
fn random_trial_rate(cfg: &ScenarioConfig, g: &ArrayGeometry, users: usize, trial: u64) -> Result<f64> {
    let sector = cfg.sector()?;
    let limits = cfg.limits()?;
    let mut rng = trial_rng(cfg.seed, trial);
    let placements = random_swarm(&sector, &limits, users, &mut rng)?;
    schemes::tin_rate(g, &placements, cfg.p_bar(), cfg.r0)
}

/// All baseline trial rates, in trial order.
fn random_trial_rates(cfg: &ScenarioConfig, g: &ArrayGeometry, users: usize) -> Result<Vec<f64>> {
    let mut indexed: Vec<(u64, f64)> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| random_trial_rate(cfg, g, users, t).map(|r| (t, r)))
        .collect::<Result<Vec<_>>>()?;
    indexed.sort_by_key(|(t, _)| *t);
    Ok(indexed.into_iter().map(|(_, r)| r).collect())
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len().max(1) as f64
}

fn placement_rows(scheme: Scheme, placements: &[UavPlacement]) -> Vec<Vec<String>> {
    placements
        .iter()
        .enumerate()
        .map(|(i, p)| {
            vec![
                scheme.label().to_string(),
                i.to_string(),
                float_field(p.range()),
                float_field(p.direction().theta().to_degrees()),
                float_field(p.direction().phi().to_degrees()),
            ]
        })
        .collect()
}

fn interference_rows(scheme: Scheme, g: &ArrayGeometry, placements: &[UavPlacement]) -> Vec<Vec<String>> {
    let map = schemes::interference_map(g, placements);
    let mut rows = Vec::with_capacity(map.len() * map.len());
    for (i, row) in map.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            rows.push(vec![
                scheme.label().to_string(),
                i.to_string(),
                j.to_string(),
                float_field(*v),
            ]);
        }
    }
    rows
}

fn separation_rows(scheme: Scheme, placements: &[UavPlacement]) -> Vec<Vec<String>> {
    schemes::separations(placements)
        .into_iter()
        .map(|(i, j, d)| {
            vec![scheme.label().to_string(), i.to_string(), j.to_string(), float_field(d)]
        })
        .collect()
}

/// Characterization result: the direction budget and closed-form numbers of
/// the configured array/sector pair.
#[derive(Debug)]
pub struct CharacterizeSummary {
    pub dir: PathBuf,
    pub elements: usize,
    pub direction_budget: usize,
    pub rho: f64,
    pub capacity_ceiling: f64,
}

/// Closed-form counts and ceilings of the configured scenario, written as a
/// two-column metric table.
pub fn run_characterize(cfg: &ScenarioConfig) -> Result<CharacterizeSummary> {
    let started = Instant::now();
    let g = cfg.geometry()?;
    let n = cfg.direction_budget()?;
    let k = cfg.resolved_users()?;
    let ceiling = schemes::capacity_ceiling(cfg, k)?;
    let mut rows = vec![
        vec!["elements".to_string(), g.elements().to_string()],
        vec!["direction_budget".to_string(), n.to_string()],
        vec!["terminals".to_string(), k.to_string()],
        vec!["p_bar_linear".to_string(), float_field(cfg.p_bar())],
        vec!["rho".to_string(), float_field(cfg.rho())],
        vec!["capacity_ceiling_bits".to_string(), float_field(ceiling)],
    ];
    if cfg.array == ArrayForm::Upa {
        let sector = cfg.sector()?;
        let bounds = n_upa_bounds(&g, &sector)?;
        rows.push(vec!["count_lower_bound".to_string(), float_field(bounds.lower)]);
        rows.push(vec!["count_upper_bound".to_string(), float_field(bounds.upper)]);
        rows.push(vec![
            "count_asymptotic".to_string(),
            float_field(n_upa_asymptotic(g.elements(), &sector)),
        ]);
        rows.push(vec![
            "count_per_element".to_string(),
            float_field(n as f64 / g.elements() as f64),
        ]);
    }
    let mut emitter = Emitter::new(&cfg.output_dir)?;
    emitter.table("counts.csv", &["metric", "value"], &rows)?;
    emitter.timing("total_ms", started.elapsed().as_secs_f64() * 1e3);
    emitter.finish(
        "characterize",
        cfg,
        DerivedQuantities {
            p_bar_linear: cfg.p_bar(),
            rho: cfg.rho(),
            direction_budget: n,
            users: Some(k),
            k_values: None,
        },
    )?;
    Ok(CharacterizeSummary {
        dir: cfg.output_dir.clone(),
        elements: g.elements(),
        direction_budget: n,
        rho: cfg.rho(),
        capacity_ceiling: ceiling,
    })
}

/// Result of one full optimization comparison.
#[derive(Debug)]
pub struct OptimizeSummary {
    pub dir: PathBuf,
    pub users: usize,
    pub capacity_ub: f64,
    pub sic: f64,
    pub tin: f64,
    pub random: f64,
    pub sic_rounds: usize,
    pub tin_rounds: usize,
}

/// Optimizes the formation for both objectives, draws one baseline swarm,
/// and writes convergence traces, final placements, the cross-interference
/// map, and pairwise separations for all three.
pub fn run_optimize(cfg: &ScenarioConfig) -> Result<OptimizeSummary> {
    let g = cfg.geometry()?;
    let users = cfg.resolved_users()?;
    let ub = schemes::capacity_ceiling(cfg, users)?;
    let mut emitter = Emitter::new(&cfg.output_dir)?;

    let clock = Instant::now();
    let (sic_formation, sic_trace) = schemes::proposed(cfg, RateObjective::Sic, users)?;
    emitter.timing("proposed_sic_ms", clock.elapsed().as_secs_f64() * 1e3);

    let clock = Instant::now();
    let (tin_formation, tin_trace) = schemes::proposed(cfg, RateObjective::Tin, users)?;
    emitter.timing("proposed_tin_ms", clock.elapsed().as_secs_f64() * 1e3);

    let clock = Instant::now();
    let sector = cfg.sector()?;
    let limits = cfg.limits()?;
    let random_placements = random_swarm(&sector, &limits, users, &mut trial_rng(cfg.seed, 0))?;
    let random_rate = schemes::tin_rate(&g, &random_placements, cfg.p_bar(), cfg.r0)?;
    emitter.timing("baseline_ms", clock.elapsed().as_secs_f64() * 1e3);

    let rounds = sic_trace.objectives.len().max(tin_trace.objectives.len());
    let mut convergence = Vec::new();
    for (round, obj) in sic_trace.objectives.iter().enumerate() {
        convergence.push(vec![
            Scheme::ProposedSic.label().to_string(),
            round.to_string(),
            float_field(*obj),
        ]);
    }
    for (round, obj) in tin_trace.objectives.iter().enumerate() {
        convergence.push(vec![
            Scheme::ProposedTin.label().to_string(),
            round.to_string(),
            float_field(*obj),
        ]);
    }
    for round in 0..rounds {
        convergence.push(vec![
            Scheme::CapacityUb.label().to_string(),
            round.to_string(),
            float_field(ub),
        ]);
    }
    emitter.table("convergence.csv", &["scheme", "round", "objective"], &convergence)?;

    let compared = [
        (Scheme::RandomSwarm, &random_placements[..]),
        (Scheme::ProposedSic, sic_formation.placements()),
        (Scheme::ProposedTin, tin_formation.placements()),
    ];
    let mut locations = Vec::new();
    let mut interference = Vec::new();
    let mut separations = Vec::new();
    for (scheme, placements) in compared {
        locations.extend(placement_rows(scheme, placements));
        interference.extend(interference_rows(scheme, &g, placements));
        separations.extend(separation_rows(scheme, placements));
    }
    emitter.table(
        "locations.csv",
        &["scheme", "terminal", "range_m", "theta_deg", "phi_deg"],
        &locations,
    )?;
    emitter.table(
        "interference.csv",
        &["scheme", "row", "col", "value"],
        &interference,
    )?;
    emitter.table(
        "separations.csv",
        &["scheme", "i", "j", "distance_m"],
        &separations,
    )?;

    let sic = *sic_trace.objectives.last().expect("trace holds at least the seed");
    let tin = *tin_trace.objectives.last().expect("trace holds at least the seed");
    emitter.finish(
        "optimize",
        cfg,
        DerivedQuantities {
            p_bar_linear: cfg.p_bar(),
            rho: cfg.rho(),
            direction_budget: cfg.direction_budget()?,
            users: Some(users),
            k_values: None,
        },
    )?;
    Ok(OptimizeSummary {
        dir: cfg.output_dir.clone(),
        users,
        capacity_ub: ub,
        sic,
        tin,
        random: random_rate,
        sic_rounds: sic_trace.rounds(),
        tin_rounds: tin_trace.rounds(),
    })
}

/// One terminal count of a sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub k: usize,
    pub random_mean: f64,
    pub sic: f64,
    pub tin: f64,
    pub capacity_ub: f64,
}

#[derive(Debug)]
pub struct SweepSummary {
    pub dir: PathBuf,
    pub points: Vec<SweepPoint>,
}

/// Mean achieved rate versus terminal count for every scheme.
pub fn run_sweep(cfg: &ScenarioConfig) -> Result<SweepSummary> {
    let started = Instant::now();
    let g = cfg.geometry()?;
    let ks = cfg.resolved_sweep()?;
    let mut points = Vec::with_capacity(ks.len());
    for &k in &ks {
        let random_mean = mean(&random_trial_rates(cfg, &g, k)?);
        let (_, sic_trace) = schemes::proposed(cfg, RateObjective::Sic, k)?;
        let (_, tin_trace) = schemes::proposed(cfg, RateObjective::Tin, k)?;
        points.push(SweepPoint {
            k,
            random_mean,
            sic: *sic_trace.objectives.last().expect("nonempty trace"),
            tin: *tin_trace.objectives.last().expect("nonempty trace"),
            capacity_ub: schemes::capacity_ceiling(cfg, k)?,
        });
    }
    let mut rows = Vec::with_capacity(points.len() * 4);
    for p in &points {
        let entries = [
            (Scheme::RandomSwarm, p.random_mean),
            (Scheme::ProposedSic, p.sic),
            (Scheme::ProposedTin, p.tin),
            (Scheme::CapacityUb, p.capacity_ub),
        ];
        for (scheme, rate) in entries {
            rows.push(vec![p.k.to_string(), scheme.label().to_string(), float_field(rate)]);
        }
    }
    let mut emitter = Emitter::new(&cfg.output_dir)?;
    emitter.table("rate_vs_k.csv", &["k", "scheme", "mean_rate"], &rows)?;
    emitter.timing("total_ms", started.elapsed().as_secs_f64() * 1e3);
    emitter.finish(
        "sweep",
        cfg,
        DerivedQuantities {
            p_bar_linear: cfg.p_bar(),
            rho: cfg.rho(),
            direction_budget: cfg.direction_budget()?,
            users: None,
            k_values: Some(ks),
        },
    )?;
    Ok(SweepSummary { dir: cfg.output_dir.clone(), points })
}

#[derive(Debug)]
pub struct CdfSummary {
    pub dir: PathBuf,
    pub users: usize,
    pub trials: usize,
    pub random_mean: f64,
    pub random_min: f64,
    pub random_max: f64,
    pub sic: f64,
    pub tin: f64,
    pub capacity_ub: f64,
}

/// Rate distribution over Monte-Carlo baseline draws, with the
/// deterministic optimized rates and the ceiling replicated across trials
/// so every scheme's column has the same length.
pub fn run_cdf(cfg: &ScenarioConfig) -> Result<CdfSummary> {
    let started = Instant::now();
    let g = cfg.geometry()?;
    let users = cfg.resolved_users()?;
    let mut random_rates = random_trial_rates(cfg, &g, users)?;
    random_rates.sort_by(|a, b| a.total_cmp(b));
    let (_, sic_trace) = schemes::proposed(cfg, RateObjective::Sic, users)?;
    let (_, tin_trace) = schemes::proposed(cfg, RateObjective::Tin, users)?;
    let sic = *sic_trace.objectives.last().expect("nonempty trace");
    let tin = *tin_trace.objectives.last().expect("nonempty trace");
    let ub = schemes::capacity_ceiling(cfg, users)?;

    let mut rows = Vec::with_capacity(cfg.trials * 4);
    for (rank, rate) in random_rates.iter().enumerate() {
        rows.push(vec![
            Scheme::RandomSwarm.label().to_string(),
            rank.to_string(),
            float_field(*rate),
        ]);
    }
    for (scheme, rate) in [(Scheme::ProposedSic, sic), (Scheme::ProposedTin, tin), (Scheme::CapacityUb, ub)] {
        for rank in 0..cfg.trials {
            rows.push(vec![scheme.label().to_string(), rank.to_string(), float_field(rate)]);
        }
    }
    let mut emitter = Emitter::new(&cfg.output_dir)?;
    emitter.table("rate_cdf.csv", &["scheme", "rank", "rate"], &rows)?;
    emitter.timing("total_ms", started.elapsed().as_secs_f64() * 1e3);
    emitter.finish(
        "cdf",
        cfg,
        DerivedQuantities {
            p_bar_linear: cfg.p_bar(),
            rho: cfg.rho(),
            direction_budget: cfg.direction_budget()?,
            users: Some(users),
            k_values: None,
        },
    )?;
    Ok(CdfSummary {
        dir: cfg.output_dir.clone(),
        users,
        trials: cfg.trials,
        random_mean: mean(&random_rates),
        random_min: random_rates.first().copied().unwrap_or(f64::NAN),
        random_max: random_rates.last().copied().unwrap_or(f64::NAN),
        sic,
        tin,
        capacity_ub: ub,
    })
}

/// Direction-count scaling table over a list of horizontal element counts,
/// with the vertical count and sector taken from the configuration.
pub fn run_count_scan(cfg: &ScenarioConfig, m_y_list: &[usize]) -> Result<PathBuf> {
    let started = Instant::now();
    let sector = cfg.sector()?;
    let mode = cfg.floor_rule.to_mode();
    let mut rows = Vec::with_capacity(m_y_list.len());
    for &m_y in m_y_list {
        let g = ArrayGeometry::upa(m_y, cfg.m_z)?;
        let exact = swarm_mimo::orthogonal::n_upa_exact(&g, &sector, mode)?;
        let bounds = n_upa_bounds(&g, &sector)?;
        rows.push(vec![
            m_y.to_string(),
            cfg.m_z.to_string(),
            g.elements().to_string(),
            float_field(bounds.lower),
            exact.to_string(),
            float_field(bounds.upper),
            float_field(n_upa_asymptotic(g.elements(), &sector)),
        ]);
    }
    let mut emitter = Emitter::new(&cfg.output_dir)?;
    emitter.table(
        "count_scaling.csv",
        &["m_y", "m_z", "elements", "lower_bound", "exact", "upper_bound", "asymptotic"],
        &rows,
    )?;
    emitter.timing("total_ms", started.elapsed().as_secs_f64() * 1e3);
    emitter.finish(
        "count-scan",
        cfg,
        DerivedQuantities {
            p_bar_linear: cfg.p_bar(),
            rho: cfg.rho(),
            direction_budget: cfg.direction_budget()?,
            users: None,
            k_values: None,
        },
    )?;
    Ok(cfg.output_dir.clone())
}

/// What a preset panel runs.
#[derive(Debug, Clone)]
enum PanelKind {
    Optimize,
    Sweep,
    Cdf,
    CountScan(Vec<usize>),
}

/// One canned scenario of a numbered preset.
#[derive(Debug)]
pub struct PanelReport {
    pub name: String,
    pub dir: PathBuf,
    pub summary: String,
}

struct PanelSpec {
    name: &'static str,
    kind: PanelKind,
    array: ArrayForm,
    m_y: usize,
    m_z: usize,
    theta_deg: f64,
    phi_deg: f64,
    d_min: f64,
    d_max: f64,
    max_rounds: usize,
}

impl PanelSpec {
    fn ula(name: &'static str, kind: PanelKind, phi_deg: f64, d_min: f64, d_max: f64) -> Self {
        PanelSpec {
            name,
            kind,
            array: ArrayForm::Ula,
            m_y: 16,
            m_z: 1,
            theta_deg: 0.0,
            phi_deg,
            d_min,
            d_max,
            max_rounds: 10,
        }
    }

    fn upa(name: &'static str, kind: PanelKind, span_deg: f64, d_min: f64, d_max: f64) -> Self {
        PanelSpec {
            name,
            kind,
            array: ArrayForm::Upa,
            m_y: 8,
            m_z: 8,
            theta_deg: span_deg,
            phi_deg: span_deg,
            d_min,
            d_max,
            max_rounds: 15,
        }
    }
}

/// Panels of each numbered preset: convergence comparisons (2), the
/// direction-count scaling study (3), formation geometry and interference
/// studies (4 through 6), rate-versus-count sweeps (7), and rate
/// distributions (8).
fn panels_for(figure: u8) -> Result<Vec<PanelSpec>> {
    use PanelKind::{Cdf, CountScan, Optimize, Sweep};
    let spaced = (10.0, 500.0);
    let open = (0.0, f64::INFINITY);
    let panels = match figure {
        2 => vec![
            PanelSpec::ula("ula-phi60-spaced", Optimize, 60.0, spaced.0, spaced.1),
            PanelSpec::upa("upa-span60-spaced", Optimize, 60.0, spaced.0, spaced.1),
        ],
        3 => {
            let mut p = PanelSpec::upa("count-scaling", CountScan(vec![5, 10, 20, 40, 80]), 90.0, open.0, open.1);
            p.m_z = 20;
            vec![p]
        }
        4 => vec![
            PanelSpec::ula("phi90-open", Optimize, 90.0, open.0, open.1),
            PanelSpec::ula("phi60-open", Optimize, 60.0, open.0, open.1),
            PanelSpec::ula("phi90-spaced", Optimize, 90.0, spaced.0, spaced.1),
            PanelSpec::ula("phi60-spaced", Optimize, 60.0, spaced.0, spaced.1),
        ],
        5 | 6 => vec![PanelSpec::ula("phi60-spaced", Optimize, 60.0, spaced.0, spaced.1)],
        7 => vec![
            PanelSpec::ula("phi90-open", Sweep, 90.0, open.0, open.1),
            PanelSpec::ula("phi60-open", Sweep, 60.0, open.0, open.1),
            PanelSpec::ula("phi90-spaced", Sweep, 90.0, spaced.0, spaced.1),
            PanelSpec::ula("phi60-spaced", Sweep, 60.0, spaced.0, spaced.1),
        ],
        8 => vec![
            PanelSpec::ula("ula-phi90-spaced", Cdf, 90.0, spaced.0, spaced.1),
            PanelSpec::ula("ula-phi60-spaced", Cdf, 60.0, spaced.0, spaced.1),
            PanelSpec::upa("upa-span90-spaced", Cdf, 90.0, spaced.0, spaced.1),
            PanelSpec::upa("upa-span60-spaced", Cdf, 60.0, spaced.0, spaced.1),
        ],
        other => {
            return Err(crate::error::HarnessError::Config(format!(
                "no preset numbered {other}; available presets run from 2 to 8"
            )))
        }
    };
    Ok(panels)
}

/// Runs every panel of preset `figure`. Scenario-defining fields come from
/// the preset; any field the user set explicitly, in the config file or on
/// the command line, wins over the preset.
pub fn reproduce_figure(
    figure: u8,
    base: &ScenarioConfig,
    explicit: &ScenarioOverlay,
) -> Result<Vec<PanelReport>> {
    let mut reports = Vec::new();
    for spec in panels_for(figure)? {
        let mut cfg = base.clone();
        macro_rules! preset {
            ($($field:ident),*) => {
                $(if explicit.$field.is_none() { cfg.$field = spec.$field.clone(); })*
            };
        }
        preset!(array, m_y, m_z, theta_deg, phi_deg, d_min, d_max, max_rounds);
        if explicit.users.is_none() {
            cfg.users = None;
        }
        if explicit.k_sweep.is_none() {
            cfg.k_sweep = match spec.kind {
                PanelKind::Sweep => Some((1..=16).collect()),
                _ => None,
            };
        }
        if explicit.trials.is_none() {
            if let PanelKind::Cdf = spec.kind {
                cfg.trials = 10_000;
            }
        }
        cfg.output_dir = base.output_dir.join(format!("figure{figure}")).join(spec.name);
        cfg.validate()?;
        let summary = match &spec.kind {
            PanelKind::Optimize => {
                let s = run_optimize(&cfg)?;
                format!(
                    "K={}: capacity_ub {:.3}, sic {:.3}, tin {:.3}, random {:.3}",
                    s.users, s.capacity_ub, s.sic, s.tin, s.random
                )
            }
            PanelKind::Sweep => {
                let s = run_sweep(&cfg)?;
                let last = s.points.last().expect("sweep has at least one count");
                format!(
                    "K up to {}: at K={} capacity_ub {:.3}, sic {:.3}, tin {:.3}, random mean {:.3}",
                    last.k, last.k, last.capacity_ub, last.sic, last.tin, last.random_mean
                )
            }
            PanelKind::Cdf => {
                let s = run_cdf(&cfg)?;
                format!(
                    "K={}, {} trials: random mean {:.3} in [{:.3}, {:.3}], sic {:.3}, tin {:.3}, capacity_ub {:.3}",
                    s.users, s.trials, s.random_mean, s.random_min, s.random_max, s.sic, s.tin, s.capacity_ub
                )
            }
            PanelKind::CountScan(list) => {
                run_count_scan(&cfg, list)?;
                format!("element counts {list:?} with m_z={}", cfg.m_z)
            }
        };
        reports.push(PanelReport {
            name: spec.name.to_string(),
            dir: cfg.output_dir.clone(),
            summary,
        });
    }
    Ok(reports)
}
