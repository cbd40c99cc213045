//! Tree-census stem maps, gridded covariate rasters, and the circular-plot
//! sampling study run over them.

mod index;
mod io;
mod synth;

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::designs::{self, DesignTag, PLOT_ATTEMPTS_PER_PLOT};
use crate::error::{Error, Result};
use crate::estimators::{Covariates, EstimatorTag, PreparedEstimator};
use crate::frame::{CircularPlot, GridFrame, Point, Rect};
use crate::montecarlo::{self, Harness, ReplicateRecord, StudyConfig, StudySummary, VarianceDenominator};
use crate::rng::{self, tag};
use crate::stats;

pub use index::{linear_scan, TreeIndex};
pub use io::{
    load_raster, load_stemmap, raster_from_reader, sidecar_path, stemmap_from_reader, write_raster, write_stemmap,
    MassUnit, RasterMeta, StemMapMeta,
};
pub use synth::{synthesize_stemmap, SynthSpec};

/// Unit conversions used for every density.
pub mod units {
    pub const KG_PER_MG: f64 = 1000.0;
    pub const M2_PER_HA: f64 = 10_000.0;
}

/// Radius (m) of a 100 m² circular plot.
pub fn default_plot_radius() -> f64 {
    CircularPlot::radius_for_area(100.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub x: f64,
    pub y: f64,
    /// Aboveground biomass, kg.
    pub agb: f64,
}

impl Tree {
    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Tree census over a rectangular region (m, kg).
#[derive(Clone, Debug)]
pub struct StemMap {
    trees: Vec<Tree>,
    positions: Vec<Point>,
    region: Rect,
    index: TreeIndex,
}

impl StemMap {
    pub fn new(region: Rect, trees: Vec<Tree>) -> Result<Self> {
        for (i, t) in trees.iter().enumerate() {
            if !(t.x.is_finite() && t.y.is_finite() && t.agb.is_finite()) {
                return Err(Error::InvalidFrame(format!("tree {i} has a non-finite field")));
            }
            if t.agb < 0.0 {
                return Err(Error::InvalidFrame(format!("tree {i} has negative agb {}", t.agb)));
            }
            if !region.contains(t.position()) {
                return Err(Error::InvalidFrame(format!(
                    "tree {i} at ({}, {}) lies outside the region",
                    t.x, t.y
                )));
            }
        }
        let positions: Vec<Point> = trees.iter().map(Tree::position).collect();
        let index = TreeIndex::new(region, &positions, 10.0);
        Ok(StemMap {
            trees,
            positions,
            region,
            index,
        })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn region(&self) -> Rect {
        self.region
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Indices of trees whose stems lie in the closed disk.
    pub fn trees_in(&self, plot: &CircularPlot) -> Vec<usize> {
        self.index.query(&self.positions, plot)
    }

    /// Total AGB over the census area, Mg/ha.
    pub fn mean_density(&self) -> f64 {
        let total_mg = stats::sum(self.trees.iter().map(|t| t.agb)) / units::KG_PER_MG;
        total_mg / (self.region.area() / units::M2_PER_HA)
    }
}

/// AGB density (Mg/ha) of the trees inside `plot`; the plot must lie in the region.
pub fn plot_agb_density(stemmap: &StemMap, plot: &CircularPlot) -> Result<f64> {
    if !plot.inside(&stemmap.region) {
        return Err(Error::Geometry(format!(
            "plot at ({}, {}) with radius {} crosses the stem-map boundary",
            plot.center.x, plot.center.y, plot.radius
        )));
    }
    let kg = stats::sum(stemmap.trees_in(plot).into_iter().map(|i| stemmap.trees[i].agb));
    Ok((kg / units::KG_PER_MG) / (plot.area() / units::M2_PER_HA))
}

/// Named covariate layers over a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CovariateRaster {
    pub grid: GridFrame,
    layers: BTreeMap<String, Vec<f64>>,
}

impl CovariateRaster {
    pub fn new(grid: GridFrame, layers: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        for (name, v) in &layers {
            if v.len() != grid.len() {
                return Err(Error::Shape(format!(
                    "layer {name} has {} values, grid has {} cells",
                    v.len(),
                    grid.len()
                )));
            }
            if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::InvalidFrame(format!("layer {name} has a non-finite value at cell {i}")));
            }
        }
        Ok(CovariateRaster { grid, layers })
    }

    pub fn layer(&self, name: &str) -> Option<&[f64]> {
        self.layers.get(name).map(Vec::as_slice)
    }

    pub fn layer_names(&self) -> impl Iterator<Item = &str> {
        self.layers.keys().map(String::as_str)
    }

    pub fn layers(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.layers
    }

    /// Layers as population covariates, renamed through `names`.
    pub fn covariates(&self, names: &LayerNames) -> Result<Covariates> {
        let mut cols = Vec::new();
        for (canonical, source) in names.pairs() {
            let v = self.layer(source).ok_or_else(|| {
                Error::Config(format!(
                    "raster layer `{source}` (used as {canonical}) not found; available: {}",
                    self.layer_names().collect::<Vec<_>>().join(", ")
                ))
            })?;
            cols.push((canonical.to_string(), v.to_vec()));
        }
        Covariates::new(cols)
    }
}

/// How plot-level covariates are read from the raster.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Mean over a `subgrid x subgrid` probe lattice clipped to the disk.
    ProbeLattice { subgrid: usize },
    /// Value of the cell containing the plot center.
    CenterCell,
}

impl Default for Aggregation {
    fn default() -> Self {
        Aggregation::ProbeLattice { subgrid: 20 }
    }
}

/// Probe offsets relative to the plot center.
pub fn probe_offsets(radius: f64, subgrid: usize) -> Vec<(f64, f64)> {
    let step = 2.0 * radius / subgrid as f64;
    let mut out = Vec::new();
    for j in 0..subgrid {
        for i in 0..subgrid {
            let dx = -radius + (i as f64 + 0.5) * step;
            let dy = -radius + (j as f64 + 0.5) * step;
            if dx * dx + dy * dy <= radius * radius {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Raster cells read by the probes of one plot.
fn probe_cells(raster: &CovariateRaster, plot: &CircularPlot, offsets: &[(f64, f64)]) -> Result<Vec<usize>> {
    offsets
        .iter()
        .map(|(dx, dy)| {
            let p = Point::new(plot.center.x + dx, plot.center.y + dy);
            raster.grid.locate(p).ok_or_else(|| {
                Error::Geometry(format!("probe at ({}, {}) falls outside the raster", p.x, p.y))
            })
        })
        .collect()
}

/// Plot-level value of every raster layer.
pub fn plot_covariates(
    raster: &CovariateRaster,
    plot: &CircularPlot,
    aggregation: Aggregation,
) -> Result<BTreeMap<String, f64>> {
    let cells = match aggregation {
        Aggregation::ProbeLattice { subgrid } => {
            if subgrid == 0 {
                return Err(Error::Config("probe subgrid must be >= 1".into()));
            }
            let offsets = probe_offsets(plot.radius, subgrid);
            probe_cells(raster, plot, &offsets)?
        }
        Aggregation::CenterCell => vec![raster.grid.locate(plot.center).ok_or_else(|| {
            Error::Geometry(format!(
                "plot center ({}, {}) falls outside the raster",
                plot.center.x, plot.center.y
            ))
        })?],
    };
    Ok(raster
        .layers
        .iter()
        .map(|(name, v)| (name.clone(), stats::mean(&cells.iter().map(|&c| v[c]).collect::<Vec<_>>())))
        .collect())
}

/// One sampled plot.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotObservation {
    pub plot: CircularPlot,
    pub agb_density: f64,
    pub covariates: BTreeMap<String, f64>,
}

pub fn observe_plot(
    stemmap: &StemMap,
    raster: &CovariateRaster,
    plot: CircularPlot,
    aggregation: Aggregation,
) -> Result<PlotObservation> {
    Ok(PlotObservation {
        agb_density: plot_agb_density(stemmap, &plot)?,
        covariates: plot_covariates(raster, &plot, aggregation)?,
        plot,
    })
}

/// Maps the covariate roles used by the plot estimators to raster layer names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayerNames {
    pub p90: String,
    pub p10: String,
    pub ndvi: String,
}

impl Default for LayerNames {
    fn default() -> Self {
        LayerNames {
            p90: "P90".into(),
            p10: "P10".into(),
            ndvi: "NDVI".into(),
        }
    }
}

impl LayerNames {
    fn pairs(&self) -> [(&'static str, &str); 3] {
        [("P90", &self.p90), ("P10", &self.p10), ("NDVI", &self.ndvi)]
    }
}

/// A plot design over the stem-map region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PlotDesign {
    Srs { n: usize },
    Sys { k_cols: usize, k_rows: usize },
}

impl PlotDesign {
    pub fn tag(&self) -> DesignTag {
        match self {
            PlotDesign::Srs { .. } => DesignTag::Srs,
            PlotDesign::Sys { .. } => DesignTag::Sys,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            PlotDesign::Srs { n } => *n,
            PlotDesign::Sys { k_cols, k_rows } => k_cols * k_rows,
        }
    }

    pub fn label(&self) -> String {
        match self {
            PlotDesign::Srs { n } => format!("PLOT-SRS-{n}"),
            PlotDesign::Sys { k_cols, k_rows } => format!("PLOT-SYS-{k_cols}x{k_rows}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HfStudyConfig {
    pub designs: Vec<PlotDesign>,
    /// Set from the top-level estimator list when run from a config file.
    #[serde(skip)]
    pub estimators: Vec<EstimatorTag>,
    /// Plot radius in meters.
    pub plot_radius: f64,
    pub replications: usize,
    pub aggregation: Aggregation,
    pub layers: LayerNames,
    /// Identifier written into the population_id column.
    pub population_id: usize,
}

impl Default for HfStudyConfig {
    fn default() -> Self {
        HfStudyConfig {
            designs: vec![
                PlotDesign::Srs { n: 35 },
                PlotDesign::Sys { k_cols: 5, k_rows: 7 },
                PlotDesign::Srs { n: 140 },
                PlotDesign::Sys { k_cols: 10, k_rows: 14 },
            ],
            estimators: vec![EstimatorTag::HfHt, EstimatorTag::HfGreg1, EstimatorTag::HfGreg2],
            plot_radius: default_plot_radius(),
            replications: 10_000,
            aggregation: Aggregation::default(),
            layers: LayerNames::default(),
            population_id: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct HfStudyResult {
    pub summaries: Vec<StudySummary>,
    pub records: Vec<ReplicateRecord>,
}

/// Repeated plot sampling of a stem map with raster-assisted estimators.
pub fn run_hf_study(
    stemmap: &StemMap,
    raster: &CovariateRaster,
    config: &HfStudyConfig,
    study: &StudyConfig,
) -> Result<HfStudyResult> {
    let harness = Harness::new(study.clone())?;
    run_hf_study_with(&harness, stemmap, raster, config)
}

pub fn run_hf_study_with(
    harness: &Harness,
    stemmap: &StemMap,
    raster: &CovariateRaster,
    config: &HfStudyConfig,
) -> Result<HfStudyResult> {
    let study = harness.config();
    if config.replications < 2 {
        return Err(Error::Config(format!("replications must be >= 2, got {}", config.replications)));
    }
    if let Some(t) = config.estimators.iter().find(|t| t.is_synthetic()) {
        return Err(Error::Config(format!(
            "estimator {t} applies to gridded populations, not plot samples"
        )));
    }
    let population = raster.covariates(&config.layers)?;
    let prepared = config
        .estimators
        .iter()
        .map(|&t| PreparedEstimator::new(t, &population, study.estimator_options))
        .collect::<Result<Vec<_>>>()?;
    let offsets = match config.aggregation {
        Aggregation::ProbeLattice { subgrid } if subgrid > 0 => Some(probe_offsets(config.plot_radius, subgrid)),
        Aggregation::ProbeLattice { .. } => return Err(Error::Config("probe subgrid must be >= 1".into())),
        Aggregation::CenterCell => None,
    };
    let region = stemmap.region();
    let true_mu = stemmap.mean_density();
    let layer_columns: Vec<(&str, &[f64])> = config
        .layers
        .pairs()
        .iter()
        .map(|(canonical, _)| (*canonical, population.column(canonical).expect("checked above")))
        .collect();

    let observe = |center: Point| -> Result<(f64, Vec<f64>)> {
        let plot = CircularPlot::new(center, config.plot_radius)?;
        let y = plot_agb_density(stemmap, &plot)?;
        let cells = match &offsets {
            Some(o) => probe_cells(raster, &plot, o)?,
            None => vec![raster
                .grid
                .locate(center)
                .ok_or_else(|| Error::Geometry("plot center falls outside the raster".into()))?],
        };
        let x = layer_columns
            .iter()
            .map(|(_, col)| stats::mean(&cells.iter().map(|&c| col[c]).collect::<Vec<_>>()))
            .collect();
        Ok((y, x))
    };

    let mut out = HfStudyResult::default();
    for design in &config.designs {
        let key = rng::label_key(&design.label());
        if let PlotDesign::Sys { k_cols, k_rows } = design {
            designs::plot_lattice_spacing(&region, config.plot_radius, *k_cols, *k_rows)?;
        }
        let per_replicate: Vec<Vec<(f64, f64, f64, usize)>> = harness.install(|| {
            (0..config.replications)
                .into_par_iter()
                .map(|r| {
                    let draw = match design {
                        PlotDesign::Srs { n } => {
                            let mut s = rng::stream(study.master_seed, &[tag::PLOT_SRS, key, r as u64]);
                            designs::plot_srs_draw(&region, config.plot_radius, *n, &mut s, PLOT_ATTEMPTS_PER_PLOT * n)?
                        }
                        PlotDesign::Sys { k_cols, k_rows } => {
                            let mut s = rng::stream(study.master_seed, &[tag::PLOT_SYS, key, r as u64]);
                            designs::plot_systematic_draw(&region, config.plot_radius, *k_cols, *k_rows, &mut s)?
                        }
                    };
                    let centers = draw.plots().expect("plot design yields plots");
                    let mut y_s = Vec::with_capacity(centers.len());
                    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(centers.len()); layer_columns.len()];
                    for &c in centers {
                        let (y, x) = observe(c)?;
                        y_s.push(y);
                        for (col, v) in cols.iter_mut().zip(x) {
                            col.push(v);
                        }
                    }
                    let sample = Covariates::new(
                        layer_columns
                            .iter()
                            .zip(cols)
                            .map(|((name, _), col)| (name.to_string(), col))
                            .collect(),
                    )?;
                    prepared
                        .iter()
                        .map(|est| {
                            let rec = est.estimate(&y_s, &sample)?;
                            Ok((rec.mu_hat, rec.var_hat, rec.s2, rec.p))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })?;

        for (e, &est_tag) in config.estimators.iter().enumerate() {
            let mu: Vec<f64> = per_replicate.iter().map(|row| row[e].0).collect();
            let var: Vec<f64> = per_replicate.iter().map(|row| row[e].1).collect();
            let mut summary = montecarlo::summarize(
                config.population_id,
                f64::NAN,
                design.tag(),
                key,
                est_tag,
                true_mu,
                &mu,
                &var,
                VarianceDenominator::ReplicatesMinusOne,
                study,
            );
            summary.n = design.n();
            out.summaries.push(summary);
            if study.keep_replicates {
                out.records.extend(per_replicate.iter().enumerate().map(|(r, row)| ReplicateRecord {
                    population_id: config.population_id,
                    replicate_id: r,
                    design: design.tag(),
                    estimator: est_tag,
                    mu_hat: row[e].0,
                    var_hat: row[e].1,
                    s2: row[e].2,
                    p: row[e].3,
                    n: design.n(),
                }));
            }
        }
    }
    Ok(out)
}

/// Writes the summary in the layout of a results table: one row per design,
/// size and estimator with both variances, their intervals and percent bias.
pub fn write_table1_csv<W: Write>(writer: W, summaries: &[StudySummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "design",
        "n",
        "estimator",
        "empirical_variance",
        "empirical_ci_lo",
        "empirical_ci_hi",
        "mean_estimated_variance",
        "mean_estimated_ci_lo",
        "mean_estimated_ci_hi",
        "percent_bias",
    ])?;
    let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for s in summaries {
        w.write_record(&[
            s.design.to_string(),
            s.n.to_string(),
            s.estimator.to_string(),
            s.empirical_variance.to_string(),
            f(s.ci_empirical.map(|c| c.0)),
            f(s.ci_empirical.map(|c| c.1)),
            s.mean_estimated_variance.to_string(),
            f(s.ci_mean_estimated.map(|c| c.0)),
            f(s.ci_mean_estimated.map(|c| c.1)),
            f(s.percent_bias),
        ])?;
    }
    w.flush().map_err(|e| Error::io("table csv", e))?;
    Ok(())
}

/// Markdown rendering of the same table, values rounded for reading.
pub fn table1_markdown(summaries: &[StudySummary]) -> String {
    let mut s = String::from(
        "| Design | n | Estimator | Empirical variance | Mean of estimated variances | Percent bias |\n|---|---|---|---|---|---|\n",
    );
    let ci = |c: Option<(f64, f64)>| c.map(|(a, b)| format!(" ({a:.2}, {b:.2})")).unwrap_or_default();
    for r in summaries {
        s.push_str(&format!(
            "| {} | {} | {} | {:.2}{} | {:.2}{} | {} |\n",
            r.design,
            r.n,
            r.estimator,
            r.empirical_variance,
            ci(r.ci_empirical),
            r.mean_estimated_variance,
            ci(r.ci_mean_estimated),
            r.percent_bias.map(|b| format!("{b:.2}%")).unwrap_or_else(|| "n/a".into()),
        ));
    }
    s
}
