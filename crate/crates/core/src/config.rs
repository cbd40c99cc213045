//! Experiment configuration files.
//!
//! A config is a TOML document; every section is optional except `mode`.
//! See `configs/demo.toml` for a complete, commented example.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::designs;
use crate::error::{Error, Result};
use crate::estimators::{EstimatorOptions, EstimatorTag};
use crate::frame::{GridFrame, Point, Rect};
use crate::gaussfield::{CovarianceSpec, LadderSpec, SuperPopulationSpec, DEFAULT_MAX_DENSE_CELLS};
use crate::montecarlo::{DesignSpec, StudyConfig};
use crate::stemmap::{HfStudyConfig, SynthSpec};
use crate::variogram::DEFAULT_BINS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Ladder,
    Stemmap,
    Demo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub frame: FrameConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub ladder: LadderConfig,
    #[serde(default = "default_designs")]
    pub designs: Vec<DesignSpec>,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<String>,
    #[serde(default)]
    pub summary: SummaryConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub stemmap: StemmapConfig,
    #[serde(default)]
    pub variogram: VariogramConfig,
    #[serde(default)]
    pub limits: LimitsConfig,
}

fn default_seed() -> u64 {
    1
}

fn default_workers() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_designs() -> Vec<DesignSpec> {
    vec![DesignSpec::srs(25), DesignSpec::sys(5, 5)]
}

fn default_estimators() -> Vec<String> {
    vec!["HT".into(), "GREG1".into(), "GREG2".into()]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameConfig {
    pub n_cols: usize,
    pub n_rows: usize,
    /// Cell side; defaults to `1 / n_cols` so the frame is one unit wide.
    pub cell_side: Option<f64>,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            n_cols: 100,
            n_rows: 100,
            cell_side: None,
        }
    }
}

impl FrameConfig {
    pub fn build(&self) -> Result<GridFrame> {
        let side = self.cell_side.unwrap_or(1.0 / self.n_cols.max(1) as f64);
        GridFrame::new(self.n_cols, self.n_rows, side, Point::default())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub beta: [f64; 3],
    pub tau2: f64,
    pub sigma2: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            beta: [0.0, 1.0, 1.0],
            tau2: 1.0,
            sigma2: 4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadderConfig {
    pub esr_start: f64,
    pub esr_end: f64,
    pub count: usize,
    /// Grows sigma2 linearly along the ladder when set.
    pub sigma2_end: Option<f64>,
}

impl Default for LadderConfig {
    fn default() -> Self {
        LadderConfig {
            esr_start: 0.03,
            esr_end: 1.0,
            count: 1000,
            sigma2_end: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SummaryConfig {
    pub replications: usize,
    pub bootstrap_b: usize,
    pub ci_level: f64,
    pub moving_average_window: usize,
    pub enumeration_budget: usize,
    pub finite_population_correction: bool,
    pub keep_replicates: bool,
}

impl Default for SummaryConfig {
    fn default() -> Self {
        let s = StudyConfig::default();
        SummaryConfig {
            replications: s.replications,
            bootstrap_b: s.bootstrap_b,
            ci_level: s.ci_level,
            moving_average_window: s.moving_average_window,
            enumeration_budget: s.enumeration_budget,
            finite_population_correction: false,
            keep_replicates: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub plots: bool,
    /// Number of ladder populations drawn as maps (first, last, evenly between).
    pub population_maps: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            plots: true,
            population_maps: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StemmapConfig {
    /// Census file; a synthetic stem map is generated when absent.
    pub stems: Option<PathBuf>,
    pub raster: Option<PathBuf>,
    pub region: [f64; 4],
    pub synth: SynthSpec,
    pub study: HfStudyConfig,
}

impl Default for StemmapConfig {
    fn default() -> Self {
        StemmapConfig {
            stems: None,
            raster: None,
            region: [0.0, 0.0, 500.0, 700.0],
            synth: SynthSpec::default(),
            study: HfStudyConfig::default(),
        }
    }
}

impl StemmapConfig {
    pub fn region(&self) -> Result<Rect> {
        let [a, b, c, d] = self.region;
        Rect::new(a, b, c, d)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariogramConfig {
    pub enabled: bool,
    pub bins: usize,
    /// Defaults to half the shorter extent.
    pub max_lag: Option<f64>,
    /// Size of the simple random sample whose residuals are examined.
    pub sample_n: usize,
    /// Ladder population used for the diagnostic; defaults to the last.
    pub population: Option<usize>,
}

impl Default for VariogramConfig {
    fn default() -> Self {
        VariogramConfig {
            enabled: true,
            bins: DEFAULT_BINS,
            max_lag: None,
            sample_n: 140,
            population: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitsConfig {
    pub max_dense_cells: usize,
}

impl Default for LimitsConfig {
    fn default() -> Self {
        LimitsConfig {
            max_dense_cells: DEFAULT_MAX_DENSE_CELLS,
        }
    }
}

/// Bundled configuration used by `run demo`.
pub const DEMO_CONFIG: &str = include_str!("../configs/demo.toml");

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with(text, &[])
    }

    /// Parses `text` after applying `key=value` overrides (dotted keys).
    pub fn from_toml_with(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn demo() -> Self {
        Self::from_toml(DEMO_CONFIG).expect("bundled demo config parses")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn is_ladder(&self) -> bool {
        matches!(self.mode, Mode::Ladder | Mode::Demo)
    }

    /// Estimator tags; unknown names are errors listing the valid ones.
    pub fn estimator_tags(&self) -> Result<Vec<EstimatorTag>> {
        self.estimators.iter().map(|s| s.parse()).collect()
    }

    pub fn study_config(&self) -> StudyConfig {
        StudyConfig {
            replications: self.summary.replications,
            master_seed: self.master_seed,
            bootstrap_b: self.summary.bootstrap_b,
            ci_level: self.summary.ci_level,
            moving_average_window: self.summary.moving_average_window,
            enumeration_budget: self.summary.enumeration_budget,
            workers: self.workers,
            estimator_options: EstimatorOptions {
                finite_population_correction: self.summary.finite_population_correction,
            },
            keep_replicates: self.summary.keep_replicates,
        }
    }

    pub fn base_spec(&self) -> Result<SuperPopulationSpec> {
        let cov = CovarianceSpec::from_esr(self.model.sigma2, self.ladder.esr_start)?;
        SuperPopulationSpec::new(self.model.beta, self.model.tau2, cov)
    }

    pub fn ladder_spec(&self) -> LadderSpec {
        LadderSpec {
            esr_start: self.ladder.esr_start,
            esr_end: self.ladder.esr_end,
            count: self.ladder.count,
            sigma2_end: self.ladder.sigma2_end,
        }
    }

    /// Every problem with the config; empty when it is runnable.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.workers == 0 {
            v.push("workers must be >= 1".into());
        }
        if let Err(e) = self.study_config().validate() {
            v.push(detail(e));
        }
        let tags: Vec<EstimatorTag> = self
            .estimators
            .iter()
            .filter_map(|s| match s.parse::<EstimatorTag>() {
                Ok(t) => Some(t),
                Err(e) => {
                    v.push(detail(e));
                    None
                }
            })
            .collect();
        if self.estimators.is_empty() {
            v.push("estimators list is empty".into());
        }
        if self.is_ladder() {
            for t in tags.iter().filter(|t| !t.is_synthetic()) {
                v.push(format!(
                    "estimator {t} needs raster covariates P90/P10/NDVI; ladder populations carry x1, x2"
                ));
            }
            let frame = match self.frame.build() {
                Ok(f) => Some(f),
                Err(e) => {
                    v.push(format!("frame: {}", detail(e)));
                    None
                }
            };
            if let Err(e) = self.ladder_spec().validate() {
                v.push(format!("ladder: {}", detail(e)));
            }
            if let Err(e) = self.base_spec() {
                v.push(format!("model: {}", detail(e)));
            }
            if self.designs.is_empty() {
                v.push("designs list is empty".into());
            }
            if let Some(f) = &frame {
                if f.len() > self.limits.max_dense_cells {
                    v.push(format!(
                        "frame has {} cells, above the dense-factorization ceiling of {} (limits.max_dense_cells)",
                        f.len(),
                        self.limits.max_dense_cells
                    ));
                }
                for d in &self.designs {
                    if let Err(e) = d.plan(f, &self.study_config()) {
                        v.push(format!("design {}: {}", d.label(), detail(e)));
                    }
                }
                if self.variogram.enabled {
                    if self.variogram.sample_n < 10 || self.variogram.sample_n > f.len() {
                        v.push(format!(
                            "variogram.sample_n must lie in [10, {}], got {}",
                            f.len(),
                            self.variogram.sample_n
                        ));
                    }
                    if let Some(p) = self.variogram.population {
                        if p >= self.ladder.count {
                            v.push(format!("variogram.population {p} is beyond the ladder of {}", self.ladder.count));
                        }
                    }
                }
            }
        } else {
            for t in tags.iter().filter(|t| t.is_synthetic()) {
                v.push(format!("estimator {t} applies to gridded populations; stem-map mode takes HF-* estimators"));
            }
            let sm = &self.stemmap;
            let region = match sm.region() {
                Ok(r) => Some(r),
                Err(e) => {
                    v.push(format!("stemmap.region: {}", detail(e)));
                    None
                }
            };
            if sm.stems.is_some() != sm.raster.is_some() {
                v.push("stemmap.stems and stemmap.raster must be given together".into());
            }
            if sm.stems.is_none() {
                if let Err(e) = sm.synth.validate() {
                    v.push(format!("stemmap.synth: {}", detail(e)));
                }
            }
            if sm.study.replications < 2 {
                v.push(format!("stemmap.study.replications must be >= 2, got {}", sm.study.replications));
            }
            if let Some(r) = region {
                for d in &sm.study.designs {
                    if let crate::stemmap::PlotDesign::Sys { k_cols, k_rows } = d {
                        if let Err(e) = designs::plot_lattice_spacing(&r, sm.study.plot_radius, *k_cols, *k_rows) {
                            v.push(format!("plot design {}: {}", d.label(), detail(e)));
                        }
                    }
                }
            }
        }
        if self.variogram.enabled && self.variogram.bins < 4 {
            v.push(format!("variogram.bins must be >= 4 for a fit, got {}", self.variogram.bins));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v.join("\n")))
        }
    }
}

fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let value = parse_scalar(raw.trim());
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut table = doc;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{part}` is not a section")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn parse_scalar(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Message of a nested config error without its category prefix.
fn detail(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}
