//! Command-line front end.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, Mode, DEMO_CONFIG};
use crate::designs::{self, DesignTag};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorTag, PreparedEstimator};
use crate::frame::{CircularPlot, Point, Rect};
use crate::gaussfield::{GenerationOptions, PopulationLadder};
use crate::montecarlo::{self, DesignSpec, Harness, LadderResult, ReplicatePlan, StudySummary};
use crate::output::RunDir;
use crate::plot::{self, Mark, Panel, Series};
use crate::rng::{self, tag};
use crate::stemmap::{self, CovariateRaster, HfStudyConfig, StemMap};
use crate::variogram::{self, EmpiricalVariogram, ExponentialFit};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sysvar", version, about = "Repeated-sampling study of variance-estimator bias under systematic sampling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment from a config file, or `demo` for the bundled one.
    Run(RunArgs),
    /// Check a config and print derived quantities without running it.
    Validate(ValidateArgs),
    /// Write a synthetic stem map and covariate raster.
    SynthStemmap(SynthArgs),
    /// Semivariogram and exponential fit of a point data set.
    Variogram(VariogramArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Config path or `demo`.
    pub config: String,
    /// Override a config key, e.g. `--set ladder.count=10`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Worker threads (overrides `workers`).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub config: String,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Strength of the biomass-covariate link (0 = none).
    #[arg(long, default_value_t = 1.0)]
    pub signal: f64,
    #[arg(long, default_value_t = 500.0)]
    pub width: f64,
    #[arg(long, default_value_t = 700.0)]
    pub height: f64,
    #[arg(long, default_value_t = 83_801.0)]
    pub trees: f64,
}

#[derive(Debug, Args)]
pub struct VariogramArgs {
    /// Delimited file with a header and x, y and value columns.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, default_value = "value")]
    pub value_column: String,
    #[arg(long, default_value_t = variogram::DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long)]
    pub max_lag: Option<f64>,
    /// Directory for variogram.csv and variogram.svg.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// Runs a parsed command line and returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Validate(a) => {
            cmd_validate(&a);
            Ok(())
        }
        Command::SynthStemmap(a) => cmd_synth(&a),
        Command::Variogram(a) => cmd_variogram(&a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn read_config_text(source: &str) -> Result<String> {
    if source == "demo" {
        return Ok(DEMO_CONFIG.to_string());
    }
    std::fs::read_to_string(source).map_err(|e| Error::Config(format!("cannot read config {source}: {e}")))
}

/// Loads, overrides and validates a config.
pub fn load_config(source: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = read_config_text(source)?;
    let cfg = ExperimentConfig::from_toml_with(&text, overrides)?;
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let mut overrides = args.overrides.clone();
    if let Some(o) = &args.output {
        overrides.push(format!("output_dir={}", toml::Value::String(o.display().to_string())));
    }
    if let Some(w) = args.workers {
        overrides.push(format!("workers={w}"));
    }
    let cfg = load_config(&args.config, &overrides)?;
    let manifest = run_experiment(&cfg)?;
    println!(
        "wrote {} artifacts to {}",
        manifest.artifacts.len(),
        cfg.output_dir.display()
    );
    Ok(())
}

/// Runs a validated config into its output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<crate::output::Manifest> {
    let text = cfg.to_toml();
    let mode = match cfg.mode {
        Mode::Ladder => "ladder",
        Mode::Stemmap => "stemmap",
        Mode::Demo => "demo",
    };
    let mut run = RunDir::create(&cfg.output_dir, &text, mode, cfg.master_seed)?;
    let outcome = if cfg.is_ladder() {
        run_ladder_mode(cfg, &mut run)
    } else {
        run_stemmap_mode(cfg, &mut run)
    };
    match outcome {
        Ok(()) => run.finish(),
        Err(e) => {
            run.fail(&e)?;
            Err(e)
        }
    }
}

fn file_label(s: &str) -> String {
    s.to_ascii_lowercase().replace(' ', "_")
}

fn run_ladder_mode(cfg: &ExperimentConfig, run: &mut RunDir) -> Result<()> {
    let frame = cfg.frame.build()?;
    let tags = cfg.estimator_tags()?;
    let ladder = PopulationLadder::new(frame.clone(), cfg.base_spec()?, cfg.ladder_spec(), cfg.master_seed)?
        .with_options(GenerationOptions {
            max_dense_cells: cfg.limits.max_dense_cells,
        });
    let harness = Harness::new(cfg.study_config())?;
    let result = harness.run_ladder(&ladder, &cfg.designs, &tags)?;
    write_study_tables(run, &result.summaries, &result.records)?;
    run.write_with("smoothed.csv", |w| montecarlo::write_smoothed_csv(w, &result.smoothed))?;

    if cfg.output.plots {
        let count = cfg.ladder.count;
        let maps = cfg.output.population_maps.min(count);
        let picks: BTreeSet<usize> = (0..maps)
            .map(|i| if maps == 1 { 0 } else { (i * (count - 1) + (maps - 1) / 2) / (maps - 1) })
            .collect();
        for k in picks {
            let pop = ladder.get(k)?;
            let svg = plot::render_heatmap(
                &format!("population {k}, esr = {:.3}", pop.esr()),
                frame.n_cols(),
                frame.n_rows(),
                &pop.y,
            );
            run.write(&format!("population_{k:04}.svg"), svg.as_bytes())?;
        }
        for d in &cfg.designs {
            let svg = variance_figure(&result, d, &tags);
            run.write(&format!("variance_{}.svg", file_label(&d.label())), svg.as_bytes())?;
        }
        let sizes: BTreeSet<usize> = cfg.designs.iter().map(DesignSpec::n).collect();
        for n in sizes {
            let svg = bias_figure(&result, n, &tags);
            run.write(&format!("bias_n{n}.svg"), svg.as_bytes())?;
        }
    }

    if cfg.variogram.enabled {
        let k = cfg.variogram.population.unwrap_or(cfg.ladder.count - 1);
        let pop = ladder.get(k)?;
        let mut s = rng::stream(cfg.master_seed, &[tag::VARIOGRAM, k as u64]);
        let cells = designs::srs_indices(pop.len(), cfg.variogram.sample_n, &mut s)?;
        let covariates = pop.covariates();
        let sample = covariates.select(&cells);
        let y_s: Vec<f64> = cells.iter().map(|&i| pop.y[i]).collect();
        let points: Vec<Point> = cells.iter().map(|&i| frame.center_unchecked(i)).collect();
        let extent = frame.extent();
        let max_lag = cfg
            .variogram
            .max_lag
            .unwrap_or(0.5 * extent.width().min(extent.height()));
        let mut rows = Vec::new();
        for &t in &tags {
            let rec = PreparedEstimator::new(t, &covariates, cfg.study_config().estimator_options)?.estimate(&y_s, &sample)?;
            rows.push(residual_variogram(t, &points, &rec.residuals, cfg.variogram.bins, max_lag)?);
        }
        write_variograms(run, &rows, &format!("residual semivariograms, population {k}, n = {}", cells.len()), cfg.output.plots)?;
    }
    Ok(())
}

type VariogramRow = (String, EmpiricalVariogram, Option<ExponentialFit>);

fn residual_variogram(
    t: EstimatorTag,
    points: &[Point],
    residuals: &[f64],
    bins: usize,
    max_lag: f64,
) -> Result<VariogramRow> {
    let v = variogram::empirical_semivariogram(points, residuals, bins, max_lag)?;
    let fit = variogram::fit_exponential(&v).ok();
    Ok((t.to_string(), v, fit))
}

fn write_variograms(run: &mut RunDir, rows: &[VariogramRow], title: &str, plots: bool) -> Result<()> {
    run.write_with("variograms.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        for (i, (label, v, fit)) in rows.iter().enumerate() {
            variogram::write_variogram_rows(&mut csv, label, v, fit.as_ref(), i == 0)?;
        }
        csv.flush().map_err(|e| Error::io("variograms.csv", e))?;
        Ok(())
    })?;
    if plots {
        let panels: Vec<Panel> = rows.iter().map(|(label, v, fit)| variogram_panel(label, v, fit.as_ref())).collect();
        run.write("variograms.svg", plot::render_panels(title, &panels, 3).as_bytes())?;
    }
    Ok(())
}

fn variogram_panel(label: &str, v: &EmpiricalVariogram, fit: Option<&ExponentialFit>) -> Panel {
    let mut p = Panel::new(label, "distance", "semivariance").with(Series::new(
        "empirical",
        plot::BLUE,
        Mark::Points,
        v.bin_centers.iter().copied().zip(v.gamma.iter().copied()).collect(),
    ));
    if let Some(f) = fit {
        let curve = (0..=60).map(|i| {
            let d = v.max_lag * i as f64 / 60.0;
            (d, f.at(d))
        });
        p = p.with(Series::new(
            format!("fit: esr {:.3}, partial sill {:.3}", f.esr, f.partial_sill),
            plot::ORANGE,
            Mark::Line,
            curve.collect(),
        ));
    }
    p
}

fn variance_figure(result: &LadderResult, design: &DesignSpec, tags: &[EstimatorTag]) -> String {
    let panels: Vec<Panel> = tags
        .iter()
        .map(|&t| {
            let raw: Vec<&StudySummary> = result
                .summaries
                .iter()
                .filter(|s| s.design == design.tag() && s.n == design.n() && s.estimator == t)
                .collect();
            let smooth = result.series(design.tag(), design.n(), t);
            Panel::new(t.to_string(), "esr", "variance")
                .with(Series::new(
                    "empirical",
                    plot::ORANGE,
                    Mark::Points,
                    raw.iter().map(|s| (s.esr, s.empirical_variance)).collect(),
                ))
                .with(Series::new(
                    "mean estimated",
                    plot::BLUE,
                    Mark::Points,
                    raw.iter().map(|s| (s.esr, s.mean_estimated_variance)).collect(),
                ))
                .with(Series::new(
                    "",
                    plot::ORANGE,
                    Mark::Line,
                    smooth.iter().map(|r| (r.esr, r.empirical_variance)).collect(),
                ))
                .with(Series::new(
                    "",
                    plot::BLUE,
                    Mark::Line,
                    smooth.iter().map(|r| (r.esr, r.mean_estimated_variance)).collect(),
                ))
        })
        .collect();
    plot::render_panels(&format!("{} (n = {})", design.label(), design.n()), &panels, 3)
}

fn bias_figure(result: &LadderResult, n: usize, tags: &[EstimatorTag]) -> String {
    let panels: Vec<Panel> = tags
        .iter()
        .map(|&t| {
            let mut p = Panel::new(t.to_string(), "esr", "percent bias");
            p.h_line = Some(0.0);
            for (design, color) in [(DesignTag::Srs, plot::GREEN), (DesignTag::Sys, plot::PURPLE)] {
                let series = result.series(design, n, t);
                if series.is_empty() {
                    continue;
                }
                let raw: Vec<(f64, f64)> = result
                    .summaries
                    .iter()
                    .filter(|s| s.design == design && s.n == n && s.estimator == t)
                    .filter_map(|s| s.percent_bias.map(|b| (s.esr, b)))
                    .collect();
                p = p
                    .with(Series::new("", color, Mark::Points, raw))
                    .with(Series::new(
                        design.to_string(),
                        color,
                        Mark::Line,
                        series.iter().map(|r| (r.esr, r.percent_bias)).collect(),
                    ));
            }
            p
        })
        .collect();
    plot::render_panels(&format!("variance estimator percent bias, n = {n}"), &panels, 3)
}

fn write_study_tables(
    run: &mut RunDir,
    summaries: &[StudySummary],
    records: &[montecarlo::ReplicateRecord],
) -> Result<()> {
    run.write_with("summaries.csv", |w| montecarlo::write_summaries_csv(w, summaries))?;
    if !records.is_empty() {
        run.write_with("replicates.csv", |w| montecarlo::write_replicates_csv(w, records))?;
    }
    Ok(())
}

/// Stem map and raster named by the config, or a synthetic pair.
pub fn stemmap_inputs(cfg: &ExperimentConfig) -> Result<(StemMap, CovariateRaster)> {
    match (&cfg.stemmap.stems, &cfg.stemmap.raster) {
        (Some(s), Some(r)) => Ok((stemmap::load_stemmap(s)?, stemmap::load_raster(r)?)),
        _ => stemmap::synthesize_stemmap(cfg.stemmap.region()?, &cfg.stemmap.synth, cfg.master_seed),
    }
}

fn run_stemmap_mode(cfg: &ExperimentConfig, run: &mut RunDir) -> Result<()> {
    let (map, raster) = stemmap_inputs(cfg)?;
    let tags = cfg.estimator_tags()?;
    let study = HfStudyConfig {
        estimators: tags.clone(),
        ..cfg.stemmap.study.clone()
    };
    let harness = Harness::new(cfg.study_config())?;
    let result = stemmap::run_hf_study_with(&harness, &map, &raster, &study)?;
    write_study_tables(run, &result.summaries, &result.records)?;
    run.write_with("table1.csv", |w| stemmap::write_table1_csv(w, &result.summaries))?;
    run.write("table1.md", stemmap::table1_markdown(&result.summaries).as_bytes())?;

    if cfg.output.plots {
        let g = &raster.grid;
        let mut density = vec![0.0; g.len()];
        for t in map.trees() {
            if let Some(c) = g.locate(t.position()) {
                density[c] += t.agb;
            }
        }
        let to_mg_ha = 1.0 / stemmap::units::KG_PER_MG / (g.cell_area() / stemmap::units::M2_PER_HA);
        density.iter_mut().for_each(|d| *d *= to_mg_ha);
        run.write(
            "map_agb.svg",
            plot::render_heatmap("AGB density (Mg/ha)", g.n_cols(), g.n_rows(), &density).as_bytes(),
        )?;
        for (name, values) in raster.layers() {
            run.write(
                &format!("map_{}.svg", file_label(name)),
                plot::render_heatmap(name, g.n_cols(), g.n_rows(), values).as_bytes(),
            )?;
        }
    }

    if cfg.variogram.enabled {
        let region = map.region();
        let radius = study.plot_radius;
        let mut s = rng::stream(cfg.master_seed, &[tag::VARIOGRAM, tag::PLOT_SRS]);
        let n = cfg.variogram.sample_n;
        let draw = designs::plot_srs_draw(&region, radius, n, &mut s, designs::PLOT_ATTEMPTS_PER_PLOT * n)?;
        let centers = draw.plots().expect("plot draw").to_vec();
        let population = raster.covariates(&study.layers)?;
        let mut y_s = Vec::with_capacity(n);
        let mut cols: Vec<(String, Vec<f64>)> = ["P90", "P10", "NDVI"].iter().map(|c| (c.to_string(), Vec::new())).collect();
        for &c in &centers {
            let plot_disk = CircularPlot::new(c, radius)?;
            let obs = stemmap::observe_plot(&map, &raster, plot_disk, study.aggregation)?;
            y_s.push(obs.agb_density);
            for (canonical, col) in cols.iter_mut() {
                let source = match canonical.as_str() {
                    "P90" => &study.layers.p90,
                    "P10" => &study.layers.p10,
                    _ => &study.layers.ndvi,
                };
                col.push(obs.covariates[source]);
            }
        }
        let sample = crate::estimators::Covariates::new(cols)?;
        let max_lag = cfg
            .variogram
            .max_lag
            .unwrap_or(0.5 * region.width().min(region.height()));
        let mut rows = Vec::new();
        for &t in &tags {
            let rec = PreparedEstimator::new(t, &population, cfg.study_config().estimator_options)?.estimate(&y_s, &sample)?;
            rows.push(residual_variogram(t, &centers, &rec.residuals, cfg.variogram.bins, max_lag)?);
        }
        write_variograms(run, &rows, &format!("residual semivariograms, one plot sample of n = {n}"), cfg.output.plots)?;
    }
    Ok(())
}

/// Human-readable validation report; never fails.
pub fn validation_report(source: &str, overrides: &[String]) -> String {
    let mut out = String::new();
    let text = match read_config_text(source) {
        Ok(t) => t,
        Err(e) => return format!("violations:\n  - {e}\n"),
    };
    let cfg = match ExperimentConfig::from_toml_with(&text, overrides) {
        Ok(c) => c,
        Err(e) => return format!("violations:\n  - {e}\n"),
    };
    out.push_str(&format!("mode: {:?}\nmaster_seed: {}\nworkers: {}\n", cfg.mode, cfg.master_seed, cfg.workers).to_lowercase());
    if cfg.is_ladder() {
        match cfg.frame.build() {
            Ok(frame) => {
                let n_cells = frame.len();
                out.push_str(&format!(
                    "frame: {} x {} cells (N = {n_cells}), cell side {}\n",
                    frame.n_cols(),
                    frame.n_rows(),
                    frame.cell_side()
                ));
                let bytes = (n_cells * n_cells * 8) as f64;
                out.push_str(&format!(
                    "covariance factor memory: {:.1} MiB per population in flight\n",
                    bytes / (1024.0 * 1024.0)
                ));
                out.push_str(&format!("populations: {}\n", cfg.ladder.count));
                let study = cfg.study_config();
                let mut per_population = 0usize;
                for d in &cfg.designs {
                    match d.plan(&frame, &study) {
                        Ok(plan) => {
                            per_population += plan.replicates();
                            let how = match &plan {
                                ReplicatePlan::AllStarts(l) => format!(
                                    "num_starts {} (spacing {} x {}), full enumeration",
                                    l.num_starts(),
                                    l.spacing_x,
                                    l.spacing_y
                                ),
                                ReplicatePlan::RandomStarts { layout, replications } => format!(
                                    "num_starts {} (spacing {} x {}), {replications} random starts",
                                    layout.num_starts(),
                                    layout.spacing_x,
                                    layout.spacing_y
                                ),
                                ReplicatePlan::Srs { replications, .. } => format!("{replications} replicates"),
                                ReplicatePlan::AllSubsets { count, .. } => format!("all {count} subsets"),
                            };
                            out.push_str(&format!("design {}: n = {}, {how}\n", d.label(), d.n()));
                        }
                        Err(e) => out.push_str(&format!("design {}: n = {}, {e}\n", d.label(), d.n())),
                    }
                }
                out.push_str(&format!(
                    "total replicates: {} per population, {} overall\n",
                    per_population,
                    per_population * cfg.ladder.count
                ));
            }
            Err(e) => out.push_str(&format!("frame: {e}\n")),
        }
    } else {
        let sm = &cfg.stemmap;
        out.push_str(&format!(
            "stem map: {}\n",
            match &sm.stems {
                Some(p) => p.display().to_string(),
                None => format!("synthetic, region {:?}, {} expected trees", sm.region, sm.synth.target_trees),
            }
        ));
        for d in &sm.study.designs {
            out.push_str(&format!("plot design {}: n = {}, {} replicates\n", d.label(), d.n(), sm.study.replications));
        }
        if let Ok(r) = sm.region() {
            let cells = (r.width() / sm.synth.cell_side * r.height() / sm.synth.cell_side).round() as usize;
            if sm.stems.is_none() {
                out.push_str(&format!(
                    "covariance factor memory: {:.1} MiB for the latent fields\n",
                    (cells * cells * 8) as f64 / (1024.0 * 1024.0)
                ));
            }
        }
    }
    let v = cfg.violations();
    if v.is_empty() {
        out.push_str("violations: none\n");
    } else {
        out.push_str("violations:\n");
        for line in v {
            out.push_str(&format!("  - {line}\n"));
        }
    }
    out
}

fn cmd_validate(args: &ValidateArgs) {
    print!("{}", validation_report(&args.config, &args.overrides));
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let region = Rect::new(0.0, 0.0, args.width, args.height)?;
    let spec = stemmap::SynthSpec {
        signal: args.signal,
        target_trees: args.trees,
        ..stemmap::SynthSpec::default()
    };
    let (map, raster) = stemmap::synthesize_stemmap(region, &spec, args.seed)?;
    std::fs::create_dir_all(&args.output).map_err(|e| Error::io(&args.output, e))?;
    stemmap::write_stemmap(&args.output.join("stems.csv"), &map)?;
    stemmap::write_raster(&args.output.join("raster.csv"), &raster)?;
    println!(
        "{} trees, mean density {:.2} Mg/ha, raster {} x {} -> {}",
        map.len(),
        map.mean_density(),
        raster.grid.n_cols(),
        raster.grid.n_rows(),
        args.output.display()
    );
    Ok(())
}

/// Reads `x`, `y` and a value column from a delimited file.
pub fn read_points(path: &Path, value_column: &str) -> Result<(Vec<Point>, Vec<f64>)> {
    let source = path.display().to_string();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Ingestion {
        path: source.clone(),
        row: 0,
        message: e.to_string(),
    })?;
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Ingestion {
            path: source.clone(),
            row: 1,
            message: format!("missing column {name}"),
        })
    };
    let (ix, iy, iv) = (find("x")?, find("y")?, find(value_column)?);
    let mut points = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let num = |i: usize| {
            rec.get(i)
                .unwrap_or("")
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Ingestion {
                    path: source.clone(),
                    row: line,
                    message: format!("`{}` is not a finite number", rec.get(i).unwrap_or("")),
                })
        };
        points.push(Point::new(num(ix)?, num(iy)?));
        values.push(num(iv)?);
    }
    Ok((points, values))
}

fn cmd_variogram(args: &VariogramArgs) -> Result<()> {
    let (points, values) = read_points(&args.input, &args.value_column)?;
    let max_lag = args.max_lag.unwrap_or_else(|| variogram::default_max_lag(&points));
    let v = variogram::empirical_semivariogram(&points, &values, args.bins, max_lag)?;
    let fit = variogram::fit_exponential(&v);
    println!("lag,gamma,pairs");
    for i in 0..v.len() {
        println!("{},{},{}", v.bin_centers[i], v.gamma[i], v.pair_counts[i]);
    }
    match &fit {
        Ok(f) => println!(
            "fit: nugget {} partial_sill {} phi {} esr {}{}",
            f.nugget,
            f.partial_sill,
            f.phi,
            f.esr,
            if f.at_lower_bound { " (at search bound)" } else { "" }
        ),
        Err(e) => println!("fit: {e}"),
    }
    if let Some(dir) = &args.output {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut buf = Vec::new();
        variogram::write_variogram_csv(&mut buf, "input", &v, fit.as_ref().ok())?;
        let path = dir.join("variogram.csv");
        std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
        let svg = plot::render_panels("semivariogram", &[variogram_panel("input", &v, fit.as_ref().ok())], 1);
        let path = dir.join("variogram.svg");
        std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
