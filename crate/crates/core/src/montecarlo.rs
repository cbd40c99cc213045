//! Repeated-sampling harness.
//!
//! For every (population, design) the harness draws replicate samples, runs
//! each requested estimator on the same samples, and summarizes: the empirical
//! variance of `mu_hat` across replicates, the mean of the estimated variances,
//! their percent difference, and percentile-bootstrap intervals for both.
//!
//! Replicate `r` always draws from the stream keyed by
//! `(master_seed, design, population, r)`, and results are gathered in
//! replicate order before any reduction, so output does not depend on the
//! worker count.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::designs::{self, DesignTag, SystematicLayout};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorOptions, EstimatorTag, PreparedEstimator};
use crate::frame::GridFrame;
use crate::gaussfield::{Population, PopulationLadder};
use crate::rng::{self, tag, Stream};
use crate::stats;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SysMode {
    /// Full enumeration when the number of starts fits the budget.
    #[default]
    Auto,
    Full,
    Sampled,
}

/// A finite-frame design in a study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DesignSpec {
    Srs {
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        replications: Option<usize>,
        /// Enumerate every size-n subset instead of sampling.
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        exhaustive: bool,
    },
    Sys {
        k_cols: usize,
        k_rows: usize,
        #[serde(default)]
        mode: SysMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        replications: Option<usize>,
    },
}

impl DesignSpec {
    pub fn srs(n: usize) -> Self {
        DesignSpec::Srs {
            n,
            replications: None,
            exhaustive: false,
        }
    }

    pub fn sys(k_cols: usize, k_rows: usize) -> Self {
        DesignSpec::Sys {
            k_cols,
            k_rows,
            mode: SysMode::Auto,
            replications: None,
        }
    }

    pub fn tag(&self) -> DesignTag {
        match self {
            DesignSpec::Srs { .. } => DesignTag::Srs,
            DesignSpec::Sys { .. } => DesignTag::Sys,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            DesignSpec::Srs { n, .. } => *n,
            DesignSpec::Sys { k_cols, k_rows, .. } => k_cols * k_rows,
        }
    }

    pub fn label(&self) -> String {
        match self {
            DesignSpec::Srs { n, .. } => format!("SRS-{n}"),
            DesignSpec::Sys { k_cols, k_rows, .. } => format!("SYS-{k_cols}x{k_rows}"),
        }
    }

    fn key(&self) -> u64 {
        rng::label_key(&self.label())
    }

    /// Resolves how replicates are produced for `frame`.
    pub fn plan(&self, frame: &GridFrame, config: &StudyConfig) -> Result<ReplicatePlan> {
        match self {
            DesignSpec::Srs {
                n,
                replications,
                exhaustive,
            } => {
                if *n < 2 || *n > frame.len() {
                    return Err(Error::Design(format!(
                        "simple random sample size must satisfy 2 <= n <= N = {}, got {n}",
                        frame.len()
                    )));
                }
                if *exhaustive {
                    let count = binomial(frame.len(), *n);
                    if count.is_none_or(|c| c > config.enumeration_budget) {
                        return Err(Error::Design(format!(
                            "exhaustive SRS of n = {n} from N = {} exceeds the enumeration budget of {}",
                            frame.len(),
                            config.enumeration_budget
                        )));
                    }
                    Ok(ReplicatePlan::AllSubsets {
                        n: *n,
                        count: count.unwrap_or(0),
                    })
                } else {
                    Ok(ReplicatePlan::Srs {
                        n: *n,
                        replications: replications.unwrap_or(config.replications),
                    })
                }
            }
            DesignSpec::Sys {
                k_cols,
                k_rows,
                mode,
                replications,
            } => {
                let layout = designs::systematic_layout(frame, *k_cols, *k_rows)?;
                let full = match mode {
                    SysMode::Full => true,
                    SysMode::Sampled => false,
                    SysMode::Auto => layout.num_starts() <= config.enumeration_budget,
                };
                if full {
                    Ok(ReplicatePlan::AllStarts(layout))
                } else {
                    Ok(ReplicatePlan::RandomStarts {
                        layout,
                        replications: replications.unwrap_or(config.replications),
                    })
                }
            }
        }
    }
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

/// How replicates of one design are generated.
#[derive(Clone, Debug, PartialEq)]
pub enum ReplicatePlan {
    Srs { n: usize, replications: usize },
    AllSubsets { n: usize, count: usize },
    AllStarts(SystematicLayout),
    RandomStarts { layout: SystematicLayout, replications: usize },
}

impl ReplicatePlan {
    pub fn replicates(&self) -> usize {
        match self {
            ReplicatePlan::Srs { replications, .. } | ReplicatePlan::RandomStarts { replications, .. } => {
                *replications
            }
            ReplicatePlan::AllSubsets { count, .. } => *count,
            ReplicatePlan::AllStarts(layout) => layout.num_starts(),
        }
    }

    pub fn denominator(&self) -> VarianceDenominator {
        match self {
            ReplicatePlan::Srs { .. } | ReplicatePlan::RandomStarts { .. } => VarianceDenominator::ReplicatesMinusOne,
            ReplicatePlan::AllSubsets { .. } | ReplicatePlan::AllStarts(_) => VarianceDenominator::Enumerated,
        }
    }
}

/// Denominator used for the empirical variance of `mu_hat`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarianceDenominator {
    /// `R - 1`, for randomly drawn replicates.
    #[serde(rename = "R-1")]
    ReplicatesMinusOne,
    /// `K`, the exact design variance over all `K` possible samples.
    #[serde(rename = "K")]
    Enumerated,
}

impl VarianceDenominator {
    pub fn as_str(self) -> &'static str {
        match self {
            VarianceDenominator::ReplicatesMinusOne => "R-1",
            VarianceDenominator::Enumerated => "K",
        }
    }

    pub fn variance(self, values: &[f64]) -> f64 {
        if values.len() < 2 {
            return 0.0;
        }
        match self {
            VarianceDenominator::ReplicatesMinusOne => stats::sample_variance(values),
            VarianceDenominator::Enumerated => stats::population_variance(values),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    /// Replicates per randomly drawn design.
    pub replications: usize,
    pub master_seed: u64,
    pub bootstrap_b: usize,
    pub ci_level: f64,
    pub moving_average_window: usize,
    /// Largest number of possible samples enumerated exhaustively.
    pub enumeration_budget: usize,
    pub workers: usize,
    pub estimator_options: EstimatorOptions,
    /// Keep per-replicate records in the output.
    pub keep_replicates: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            replications: 1000,
            master_seed: 1,
            bootstrap_b: 1000,
            ci_level: 0.95,
            moving_average_window: 51,
            enumeration_budget: 10_000,
            workers: 1,
            estimator_options: EstimatorOptions::default(),
            keep_replicates: false,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.replications < 2 {
            problems.push(format!("replications must be >= 2, got {}", self.replications));
        }
        if self.bootstrap_b < 100 {
            problems.push(format!("bootstrap_b must be >= 100, got {}", self.bootstrap_b));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            problems.push(format!("ci_level must lie in (0, 1), got {}", self.ci_level));
        }
        if self.moving_average_window == 0 {
            problems.push("moving_average_window must be >= 1".to_string());
        }
        if self.workers == 0 {
            problems.push("workers must be >= 1".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// One estimator applied to one replicate sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub population_id: usize,
    pub replicate_id: usize,
    pub design: DesignTag,
    pub estimator: EstimatorTag,
    pub mu_hat: f64,
    pub var_hat: f64,
    pub s2: f64,
    pub p: usize,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudySummary {
    pub population_id: usize,
    pub esr: f64,
    pub design: DesignTag,
    pub n: usize,
    pub estimator: EstimatorTag,
    pub replicates: usize,
    pub denominator: VarianceDenominator,
    pub true_mu: f64,
    pub mean_of_mu_hat: f64,
    pub empirical_variance: f64,
    pub ci_empirical: Option<(f64, f64)>,
    pub mean_estimated_variance: f64,
    pub ci_mean_estimated: Option<(f64, f64)>,
    pub percent_bias: Option<f64>,
}

/// `100 (mean_estimated - empirical) / empirical`.
pub fn percent_bias(mean_estimated: f64, empirical: f64) -> Result<f64> {
    if empirical.is_nan() || empirical <= 0.0 {
        return Err(Error::UndefinedBias(empirical));
    }
    Ok(100.0 * (mean_estimated - empirical) / empirical)
}

/// Statistic whose sampling distribution is bootstrapped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BootStatistic {
    Mean,
    Variance(VarianceDenominator),
}

impl BootStatistic {
    pub fn apply(self, values: &[f64]) -> f64 {
        match self {
            BootStatistic::Mean => stats::mean(values),
            BootStatistic::Variance(d) => d.variance(values),
        }
    }
}

/// Percentile bootstrap interval of `statistic` over `values`.
pub fn bootstrap_ci(
    values: &[f64],
    b: usize,
    level: f64,
    statistic: BootStatistic,
    stream: &mut Stream,
) -> Result<(f64, f64)> {
    let r = values.len();
    if r < 10 {
        return Err(Error::InsufficientData(format!("bootstrap needs at least 10 values, got {r}")));
    }
    if b < 100 {
        return Err(Error::InsufficientData(format!("bootstrap needs at least 100 resamples, got {b}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("confidence level must lie in (0, 1), got {level}")));
    }
    let mut resample = vec![0.0; r];
    let mut stats_b: Vec<f64> = (0..b)
        .map(|_| {
            for slot in resample.iter_mut() {
                *slot = values[stream.random_range(0..r)];
            }
            statistic.apply(&resample)
        })
        .collect();
    stats_b.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Ok((
        stats::quantile_sorted(&stats_b, alpha),
        stats::quantile_sorted(&stats_b, 1.0 - alpha),
    ))
}

/// Summaries of one estimator over a set of replicates.
#[allow(clippy::too_many_arguments)]
pub fn summarize(
    population_id: usize,
    esr: f64,
    design: DesignTag,
    design_key: u64,
    estimator: EstimatorTag,
    true_mu: f64,
    mu_hats: &[f64],
    var_hats: &[f64],
    denominator: VarianceDenominator,
    config: &StudyConfig,
) -> StudySummary {
    let empirical_variance = denominator.variance(mu_hats);
    let mean_estimated_variance = stats::mean(var_hats);
    let boot = |values: &[f64], stat: BootStatistic, which: u64| {
        let mut s = rng::stream(
            config.master_seed,
            &[tag::BOOTSTRAP, population_id as u64, design_key, estimator as u64, which],
        );
        bootstrap_ci(values, config.bootstrap_b, config.ci_level, stat, &mut s).ok()
    };
    StudySummary {
        population_id,
        esr,
        design,
        n: 0,
        estimator,
        replicates: mu_hats.len(),
        denominator,
        true_mu,
        mean_of_mu_hat: stats::mean(mu_hats),
        empirical_variance,
        ci_empirical: boot(mu_hats, BootStatistic::Variance(denominator), 0),
        mean_estimated_variance,
        ci_mean_estimated: boot(var_hats, BootStatistic::Mean, 1),
        percent_bias: percent_bias(mean_estimated_variance, empirical_variance).ok(),
    }
}

/// Output of one (population, design) cell.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CellResult {
    pub summaries: Vec<StudySummary>,
    pub records: Vec<ReplicateRecord>,
}

/// Owns the worker pool and study settings.
pub struct Harness {
    config: StudyConfig,
    pool: rayon::ThreadPool,
}

impl Harness {
    pub fn new(config: StudyConfig) -> Result<Self> {
        config.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", config.workers)))?;
        Ok(Harness { config, pool })
    }

    pub fn config(&self) -> &StudyConfig {
        &self.config
    }

    /// Runs `f` inside the worker pool.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }

    /// Runs every estimator in `tags` over the replicates of `design`.
    pub fn run_cell(&self, population: &Population, design: &DesignSpec, tags: &[EstimatorTag]) -> Result<CellResult> {
        self.pool.install(|| run_cell_in_pool(population, design, tags, &self.config))
    }

    /// Streams a ladder through the harness; populations are generated,
    /// summarized and dropped, at most one per worker at a time.
    pub fn run_ladder(
        &self,
        ladder: &PopulationLadder,
        designs: &[DesignSpec],
        tags: &[EstimatorTag],
    ) -> Result<LadderResult> {
        let count = ladder.ladder().count;
        let cells: Vec<Vec<CellResult>> = self.pool.install(|| {
            (0..count)
                .into_par_iter()
                .map(|k| {
                    let pop = ladder.get(k)?;
                    designs
                        .iter()
                        .map(|d| run_cell_in_pool(&pop, d, tags, &self.config))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })?;
        Ok(LadderResult::assemble(cells.into_iter().flatten(), &self.config))
    }

    /// Same as [`Harness::run_ladder`] for an explicit population sequence.
    pub fn ladder_study<I>(&self, populations: I, designs: &[DesignSpec], tags: &[EstimatorTag]) -> Result<LadderResult>
    where
        I: IntoIterator<Item = Result<Population>>,
    {
        let mut cells = Vec::new();
        for pop in populations {
            let pop = pop?;
            for d in designs {
                cells.push(self.run_cell(&pop, d, tags)?);
            }
        }
        Ok(LadderResult::assemble(cells, &self.config))
    }
}

/// Convenience wrapper building a one-off harness.
pub fn run_cell(
    population: &Population,
    design: &DesignSpec,
    tags: &[EstimatorTag],
    config: &StudyConfig,
) -> Result<CellResult> {
    Harness::new(config.clone())?.run_cell(population, design, tags)
}

fn run_cell_in_pool(
    population: &Population,
    design: &DesignSpec,
    tags: &[EstimatorTag],
    config: &StudyConfig,
) -> Result<CellResult> {
    let covariates = population.covariates();
    let prepared = tags
        .iter()
        .map(|&t| PreparedEstimator::new(t, &covariates, config.estimator_options))
        .collect::<Result<Vec<_>>>()?;
    let plan = design.plan(&population.frame, config)?;
    let pop_id = population.population_index;
    let design_key = design.key();
    let design_tag = design.tag();

    let draw = |r: usize| -> Result<Vec<usize>> {
        match &plan {
            ReplicatePlan::Srs { n, .. } => {
                let mut s = rng::stream(config.master_seed, &[tag::SRS, design_key, pop_id as u64, r as u64]);
                designs::srs_indices(population.len(), *n, &mut s)
            }
            ReplicatePlan::AllSubsets { n, .. } => Ok(nth_combination(population.len(), *n, r)),
            ReplicatePlan::AllStarts(layout) => Ok(layout.draw(r)?.cells().expect("cells").to_vec()),
            ReplicatePlan::RandomStarts { layout, .. } => {
                let mut s = rng::stream(config.master_seed, &[tag::SYS, design_key, pop_id as u64, r as u64]);
                let start = s.random_range(0..layout.num_starts());
                Ok(layout.draw(start)?.cells().expect("cells").to_vec())
            }
        }
    };

    let per_replicate: Vec<Vec<(f64, f64, f64, usize)>> = (0..plan.replicates())
        .into_par_iter()
        .map(|r| {
            let cells = draw(r)?;
            let y_s: Vec<f64> = cells.iter().map(|&i| population.y[i]).collect();
            let sample = covariates.select(&cells);
            prepared
                .iter()
                .map(|est| {
                    let rec = est.estimate(&y_s, &sample)?;
                    Ok((rec.mu_hat, rec.var_hat, rec.s2, rec.p))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let true_mu = population.mean();
    let n = design.n();
    let mut out = CellResult::default();
    for (e, &est_tag) in tags.iter().enumerate() {
        let mu: Vec<f64> = per_replicate.iter().map(|row| row[e].0).collect();
        let var: Vec<f64> = per_replicate.iter().map(|row| row[e].1).collect();
        let mut summary = summarize(
            pop_id,
            population.esr(),
            design_tag,
            design_key,
            est_tag,
            true_mu,
            &mu,
            &var,
            plan.denominator(),
            config,
        );
        summary.n = n;
        out.summaries.push(summary);
        if config.keep_replicates {
            out.records.extend(per_replicate.iter().enumerate().map(|(r, row)| ReplicateRecord {
                population_id: pop_id,
                replicate_id: r,
                design: design_tag,
                estimator: est_tag,
                mu_hat: row[e].0,
                var_hat: row[e].1,
                s2: row[e].2,
                p: row[e].3,
                n,
            }));
        }
    }
    Ok(out)
}

/// The `rank`-th size-`k` subset of `0..n` in lexicographic order.
fn nth_combination(n: usize, k: usize, mut rank: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        let remaining = k - slot - 1;
        loop {
            let block = binomial(n - next - 1, remaining).unwrap_or(usize::MAX);
            if rank < block {
                out.push(next);
                next += 1;
                break;
            }
            rank -= block;
            next += 1;
        }
    }
    out
}

/// Moving-average series of one (design, n, estimator) group over the ladder.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothedRow {
    pub design: DesignTag,
    pub n: usize,
    pub estimator: EstimatorTag,
    pub population_id: usize,
    pub esr: f64,
    pub empirical_variance: f64,
    pub mean_estimated_variance: f64,
    pub percent_bias: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LadderResult {
    pub summaries: Vec<StudySummary>,
    pub smoothed: Vec<SmoothedRow>,
    pub records: Vec<ReplicateRecord>,
}

impl LadderResult {
    fn assemble(cells: impl IntoIterator<Item = CellResult>, config: &StudyConfig) -> Self {
        let mut out = LadderResult::default();
        for c in cells {
            out.summaries.extend(c.summaries);
            out.records.extend(c.records);
        }
        out.smoothed = smooth(&out.summaries, config.moving_average_window);
        out
    }

    /// Smoothed series for one group, ordered by esr.
    pub fn series(&self, design: DesignTag, n: usize, estimator: EstimatorTag) -> Vec<&SmoothedRow> {
        self.smoothed
            .iter()
            .filter(|r| r.design == design && r.n == n && r.estimator == estimator)
            .collect()
    }
}

/// Centered moving averages per (design, n, estimator), ordered by esr.
pub fn smooth(summaries: &[StudySummary], window: usize) -> Vec<SmoothedRow> {
    let mut groups: Vec<(DesignTag, usize, EstimatorTag)> = Vec::new();
    for s in summaries {
        let key = (s.design, s.n, s.estimator);
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    let mut out = Vec::new();
    for (design, n, estimator) in groups {
        let mut rows: Vec<&StudySummary> = summaries
            .iter()
            .filter(|s| s.design == design && s.n == n && s.estimator == estimator)
            .collect();
        rows.sort_by(|a, b| a.esr.total_cmp(&b.esr).then(a.population_id.cmp(&b.population_id)));
        let emp = stats::moving_average(&rows.iter().map(|s| s.empirical_variance).collect::<Vec<_>>(), window);
        let est = stats::moving_average(&rows.iter().map(|s| s.mean_estimated_variance).collect::<Vec<_>>(), window);
        let bias = stats::moving_average(
            &rows.iter().map(|s| s.percent_bias.unwrap_or(f64::NAN)).collect::<Vec<_>>(),
            window,
        );
        for (i, s) in rows.iter().enumerate() {
            out.push(SmoothedRow {
                design,
                n,
                estimator,
                population_id: s.population_id,
                esr: s.esr,
                empirical_variance: emp[i],
                mean_estimated_variance: est[i],
                percent_bias: bias[i],
            });
        }
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const SUMMARY_HEADER: [&str; 16] = [
    "population_id",
    "esr",
    "design",
    "n",
    "estimator",
    "replicates",
    "variance_denominator",
    "true_mu",
    "mean_mu_hat",
    "empirical_variance",
    "empirical_ci_lo",
    "empirical_ci_hi",
    "mean_estimated_variance",
    "mean_estimated_ci_lo",
    "mean_estimated_ci_hi",
    "percent_bias",
];

pub fn write_summaries_csv<W: Write>(writer: W, summaries: &[StudySummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SUMMARY_HEADER)?;
    for s in summaries {
        w.write_record(&[
            s.population_id.to_string(),
            opt(s.esr.is_finite().then_some(s.esr)),
            s.design.to_string(),
            s.n.to_string(),
            s.estimator.to_string(),
            s.replicates.to_string(),
            s.denominator.as_str().to_string(),
            s.true_mu.to_string(),
            s.mean_of_mu_hat.to_string(),
            s.empirical_variance.to_string(),
            opt(s.ci_empirical.map(|c| c.0)),
            opt(s.ci_empirical.map(|c| c.1)),
            s.mean_estimated_variance.to_string(),
            opt(s.ci_mean_estimated.map(|c| c.0)),
            opt(s.ci_mean_estimated.map(|c| c.1)),
            opt(s.percent_bias),
        ])?;
    }
    w.flush().map_err(|e| Error::io("summaries csv", e))?;
    Ok(())
}

pub fn write_smoothed_csv<W: Write>(writer: W, rows: &[SmoothedRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "design",
        "n",
        "estimator",
        "population_id",
        "esr",
        "empirical_variance_ma",
        "mean_estimated_variance_ma",
        "percent_bias_ma",
    ])?;
    for r in rows {
        w.write_record(&[
            r.design.to_string(),
            r.n.to_string(),
            r.estimator.to_string(),
            r.population_id.to_string(),
            r.esr.to_string(),
            r.empirical_variance.to_string(),
            r.mean_estimated_variance.to_string(),
            opt(r.percent_bias.is_finite().then_some(r.percent_bias)),
        ])?;
    }
    w.flush().map_err(|e| Error::io("smoothed csv", e))?;
    Ok(())
}

pub fn write_replicates_csv<W: Write>(writer: W, records: &[ReplicateRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "population_id",
        "replicate_id",
        "design",
        "estimator",
        "mu_hat",
        "var_hat",
        "s2",
        "p",
        "n",
    ])?;
    for r in records {
        w.write_record(&[
            r.population_id.to_string(),
            r.replicate_id.to_string(),
            r.design.to_string(),
            r.estimator.to_string(),
            r.mu_hat.to_string(),
            r.var_hat.to_string(),
            r.s2.to_string(),
            r.p.to_string(),
            r.n.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("replicates csv", e))?;
    Ok(())
}
