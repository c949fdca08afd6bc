//! Scenario configuration: defaults, config-file ingestion, flag overlay,
//! and the derived quantities every experiment consumes.
//!
//! Resolution order is fixed: built-in defaults, then the config file, then
//! command-line flags. Powers enter in dB and are converted to linear scale
//! exactly once, here.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use swarm_mimo::orthogonal::{AngularSector, FloorMode};
use swarm_mimo::sca::FormationConstraints;
use swarm_mimo::{ArrayGeometry, BcdSettings, RateObjective};

use crate::error::{HarnessError, Result};

/// Antenna layout selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ArrayForm {
    /// Linear array along the y axis; `m_y` elements, `m_z` ignored.
    Ula,
    /// Planar array in the y-z plane; `m_y` by `m_z` elements.
    Upa,
}

/// Integer-boundary handling for the direction-count formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FloorRule {
    /// Floor IEEE values as computed.
    Strict,
    /// Admit boundary members dropped by infinitesimal rounding.
    Tolerant,
}

impl FloorRule {
    pub fn to_mode(self) -> FloorMode {
        match self {
            FloorRule::Strict => FloorMode::Strict,
            FloorRule::Tolerant => FloorMode::tolerant(),
        }
    }
}

/// Fully resolved experiment scenario. Field semantics match the simulation
/// study conventions: a base station array serving `users` single-antenna
/// terminals inside an angular sector, with a range window, optional
/// pairwise spacing limits, and a reference SNR quoted in dB at range `r0`.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioConfig {
    pub array: ArrayForm,
    pub m_y: usize,
    pub m_z: usize,
    /// Elevation half-span in degrees; zero for azimuth-only sectors.
    pub theta_deg: f64,
    /// Azimuth half-span in degrees.
    pub phi_deg: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// Pairwise spacing floor in meters; zero disables it.
    pub d_min: f64,
    /// Pairwise spacing ceiling in meters; infinite disables it.
    #[serde(serialize_with = "serialize_possibly_infinite")]
    pub d_max: f64,
    /// Reference SNR in dB, quoted at range `r0`.
    pub p_bar_db: f64,
    pub r0: f64,
    /// Terminal count; `None` resolves to the interference-free direction
    /// count of the array/sector pair.
    pub users: Option<usize>,
    /// Terminal counts for sweep runs; `None` resolves to `1..=N`.
    pub k_sweep: Option<Vec<usize>>,
    /// Monte-Carlo trial count for the random baseline.
    pub trials: usize,
    pub seed: u64,
    pub floor_rule: FloorRule,
    /// Direction codebook density relative to the orthogonal grid.
    pub oversampling: usize,
    /// Cap on alternating refinement rounds.
    pub max_rounds: usize,
    /// Relative objective gain under which the refinement stops.
    pub rel_tol: f64,
    pub output_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            array: ArrayForm::Ula,
            m_y: 16,
            m_z: 1,
            theta_deg: 0.0,
            phi_deg: 60.0,
            r_min: 50.0,
            r_max: 500.0,
            d_min: 10.0,
            d_max: 500.0,
            p_bar_db: 20.0,
            r0: 100.0,
            users: None,
            k_sweep: None,
            trials: 200,
            seed: 1,
            floor_rule: FloorRule::Strict,
            oversampling: 4,
            max_rounds: 15,
            rel_tol: 1e-4,
            output_dir: PathBuf::from("results"),
        }
    }
}

/// Keeps an unbounded spacing ceiling readable in JSON, where a bare
/// non-finite number would degrade to null.
fn serialize_possibly_infinite<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

/// Partial scenario as read from a config file or assembled from flags;
/// every present field overrides the corresponding resolved value.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioOverlay {
    pub array: Option<ArrayForm>,
    pub m_y: Option<usize>,
    pub m_z: Option<usize>,
    pub theta_deg: Option<f64>,
    pub phi_deg: Option<f64>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub d_min: Option<f64>,
    pub d_max: Option<f64>,
    pub p_bar_db: Option<f64>,
    pub r0: Option<f64>,
    pub users: Option<usize>,
    pub k_sweep: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub floor_rule: Option<FloorRule>,
    pub oversampling: Option<usize>,
    pub max_rounds: Option<usize>,
    pub rel_tol: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

impl ScenarioOverlay {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        toml::from_str(&text).map_err(|e| HarnessError::Config(format!(
            "{}: {e}",
            path.display()
        )))
    }
}

impl ScenarioConfig {
    /// Applies every present overlay field on top of `self`.
    pub fn apply(&mut self, overlay: &ScenarioOverlay) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &overlay.$field { self.$field = v.clone(); })*
            };
        }
        take!(
            array, m_y, m_z, theta_deg, phi_deg, r_min, r_max, d_min, d_max, p_bar_db, r0,
            trials, seed, floor_rule, oversampling, max_rounds, rel_tol, output_dir
        );
        if overlay.users.is_some() {
            self.users = overlay.users;
        }
        if overlay.k_sweep.is_some() {
            self.k_sweep = overlay.k_sweep.clone();
        }
    }

    /// Checks the invariants the experiments rely on.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.m_y == 0 || (self.array == ArrayForm::Upa && self.m_z == 0) {
            problems.push("array needs at least one element per occupied axis".to_string());
        }
        if !(self.r_min > 0.0 && self.r_min <= self.r_max) {
            problems.push(format!(
                "range window [{}, {}] must satisfy 0 < r_min <= r_max",
                self.r_min, self.r_max
            ));
        }
        if !(self.d_min >= 0.0 && self.d_min <= self.d_max) {
            problems.push(format!(
                "spacing window [{}, {}] must satisfy 0 <= d_min <= d_max",
                self.d_min, self.d_max
            ));
        }
        if !(0.0..=90.0).contains(&self.theta_deg) || !(0.0..=90.0).contains(&self.phi_deg) {
            problems.push(format!(
                "sector half-spans ({}, {}) must lie in [0, 90] degrees",
                self.theta_deg, self.phi_deg
            ));
        }
        if self.trials == 0 {
            problems.push("at least one trial is required".to_string());
        }
        if self.r0 <= 0.0 || !self.p_bar_db.is_finite() {
            problems.push("reference range must be positive and reference SNR finite".to_string());
        }
        if self.oversampling == 0 || self.max_rounds == 0 {
            problems.push("oversampling and max_rounds must be at least 1".to_string());
        }
        if let Some(ks) = &self.k_sweep {
            if ks.is_empty() || ks.contains(&0) {
                problems.push("k_sweep must list positive terminal counts".to_string());
            }
        }
        if self.users == Some(0) {
            problems.push("users must be positive".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Config(problems.join("; ")))
        }
    }

    /// Reference SNR on linear scale.
    pub fn p_bar(&self) -> f64 {
        10f64.powf(self.p_bar_db / 10.0)
    }

    /// Effective SNR at the near edge of the range window with the full
    /// array gain still excluded: `p_bar r0^2 / r_min^2`.
    pub fn rho(&self) -> f64 {
        self.p_bar() * (self.r0 / self.r_min).powi(2)
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        let g = match self.array {
            ArrayForm::Ula => ArrayGeometry::ula(self.m_y),
            ArrayForm::Upa => ArrayGeometry::upa(self.m_y, self.m_z),
        }?;
        Ok(g)
    }

    pub fn sector(&self) -> Result<AngularSector> {
        Ok(AngularSector::new(
            self.theta_deg.to_radians(),
            self.phi_deg.to_radians(),
        )?)
    }

    pub fn limits(&self) -> Result<FormationConstraints> {
        Ok(FormationConstraints::new(self.r_min, self.r_max, self.d_min, self.d_max)?)
    }

    /// Interference-free direction budget of the array/sector pair.
    pub fn direction_budget(&self) -> Result<usize> {
        let g = self.geometry()?;
        let sector = self.sector()?;
        let n = match self.array {
            ArrayForm::Ula => {
                swarm_mimo::orthogonal::n_ula(self.m_y, sector.phi_bar(), self.floor_rule.to_mode())?
            }
            ArrayForm::Upa => {
                swarm_mimo::orthogonal::n_upa_exact(&g, &sector, self.floor_rule.to_mode())?
            }
        };
        Ok(n)
    }

    /// Terminal count to run: the explicit setting, else the direction
    /// budget.
    pub fn resolved_users(&self) -> Result<usize> {
        match self.users {
            Some(k) => Ok(k),
            None => self.direction_budget(),
        }
    }

    /// Sweep counts to run: the explicit list, else `1..=N`.
    pub fn resolved_sweep(&self) -> Result<Vec<usize>> {
        match &self.k_sweep {
            Some(ks) => Ok(ks.clone()),
            None => Ok((1..=self.direction_budget()?).collect()),
        }
    }

    /// Refinement settings for the given objective.
    pub fn bcd_settings(&self, objective: RateObjective) -> BcdSettings {
        let mut s = BcdSettings::new(objective);
        s.max_rounds = self.max_rounds;
        s.rel_tol = self.rel_tol;
        s.oversampling = self.oversampling;
        s
    }

    /// Whether any pairwise spacing constraint is active.
    pub fn has_separation(&self) -> bool {
        self.d_min > 0.0 || self.d_max.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_to_the_crowded_linear_scenario() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.resolved_users().unwrap(), 13);
        assert!((cfg.p_bar() - 100.0).abs() < 1e-12);
        assert!((cfg.rho() - 400.0).abs() < 1e-12);
        assert_eq!(cfg.resolved_sweep().unwrap(), (1..=13).collect::<Vec<_>>());
    }

    #[test]
    fn overlay_wins_over_defaults_and_file_text_parses() {
        let mut cfg = ScenarioConfig::default();
        let overlay: ScenarioOverlay = toml::from_str(
            "array = \"upa\"\nm_y = 8\nm_z = 8\ntheta_deg = 60.0\nd_max = inf\nseed = 9\n",
        )
        .unwrap();
        cfg.apply(&overlay);
        assert_eq!(cfg.array, ArrayForm::Upa);
        assert_eq!((cfg.m_y, cfg.m_z), (8, 8));
        assert!(cfg.d_max.is_infinite());
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.phi_deg, 60.0);
        cfg.validate().unwrap();
        assert_eq!(cfg.resolved_users().unwrap(), 41);
    }

    #[test]
    fn bad_windows_are_rejected_with_a_diagnostic() {
        let mut cfg = ScenarioConfig::default();
        cfg.r_min = 600.0;
        cfg.trials = 0;
        let err = cfg.validate().unwrap_err();
        let text = err.to_string();
        assert!(text.contains("r_min"), "missing range complaint: {text}");
        assert!(text.contains("trial"), "missing trials complaint: {text}");
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(toml::from_str::<ScenarioOverlay>("rmin = 3.0\n").is_err());
    }
}
