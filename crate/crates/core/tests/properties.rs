use proptest::prelude::*;

use sysvar::designs::{self, PLOT_ATTEMPTS_PER_PLOT};
use sysvar::estimators::{named_estimator, EstimatorTag, PreparedEstimator};
use sysvar::frame::{CircularPlot, GridFrame, Point, Rect};
use sysvar::gaussfield::{self, CovarianceSpec, SuperPopulationSpec};
use sysvar::montecarlo::{self, DesignSpec, StudyConfig, SysMode};
use sysvar::stemmap::{plot_agb_density, StemMap, Tree};
use sysvar::{rng, stats, variogram};

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn population(side: usize, esr: f64, seed: u64) -> gaussfield::Population {
    let frame = GridFrame::unit_square(side).unwrap();
    let spec = SuperPopulationSpec::new([0.0, 1.0, 1.0], 1.0, CovarianceSpec::from_esr(4.0, esr).unwrap()).unwrap();
    gaussfield::generate_population(&frame, &spec, seed, 0).unwrap()
}

fn sample(pop: &gaussfield::Population, n: usize, seed: u64) -> (Vec<usize>, Vec<f64>) {
    let draw = designs::srs_draw(&pop.frame, n, &mut rng::stream(seed, &[7])).unwrap();
    let cells = draw.cells().unwrap().to_vec();
    let y = cells.iter().map(|&i| pop.y[i]).collect();
    (cells, y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distances_symmetric_and_indices_biject(cols in 2usize..12, rows in 2usize..12, side in 0.1f64..10.0) {
        let f = GridFrame::new(cols, rows, side, Point::new(-3.0, 2.0)).unwrap();
        for i in 0..f.len() {
            let (r, c) = f.row_col(i).unwrap();
            prop_assert_eq!(f.index(r, c).unwrap(), i);
            prop_assert_eq!(f.distance(i, i).unwrap(), 0.0);
            let j = (i * 7 + 3) % f.len();
            prop_assert_eq!(f.distance(i, j).unwrap(), f.distance(j, i).unwrap());
        }
    }

    #[test]
    fn systematic_layouts_partition(kc in 2usize..6, kr in 2usize..6, sx in 1usize..5, sy in 1usize..5) {
        let f = GridFrame::new(kc * sx, kr * sy, 1.0, Point::new(0.0, 0.0)).unwrap();
        let layout = designs::systematic_layout(&f, kc, kr).unwrap();
        prop_assert_eq!(layout.num_starts(), sx * sy);
        let mut hits = vec![0u32; f.len()];
        for d in layout.enumerate() {
            prop_assert_eq!(d.len(), kc * kr);
            for &c in d.cells().unwrap() {
                hits[c] += 1;
            }
        }
        prop_assert!(hits.iter().all(|&h| h == 1));
    }

    #[test]
    fn srs_draws_are_distinct_and_in_range(n in 2usize..100, seed in any::<u64>()) {
        let f = GridFrame::unit_square(10).unwrap();
        let d = designs::srs_draw(&f, n, &mut rng::stream(seed, &[])).unwrap();
        let mut cells = d.cells().unwrap().to_vec();
        cells.sort_unstable();
        cells.dedup();
        prop_assert_eq!(cells.len(), n);
        prop_assert!(cells.iter().all(|&c| c < 100));
    }

    #[test]
    fn plot_draws_respect_boundary_and_spacing(n in 1usize..40, seed in any::<u64>(), systematic in any::<bool>()) {
        let region = Rect::new(0.0, 0.0, 500.0, 700.0).unwrap();
        let r = 100f64.sqrt() / std::f64::consts::PI.sqrt();
        let mut s = rng::stream(seed, &[]);
        let d = if systematic {
            designs::plot_systematic_draw(&region, r, 5, 7, &mut s).unwrap()
        } else {
            designs::plot_srs_draw(&region, r, n, &mut s, n * PLOT_ATTEMPTS_PER_PLOT).unwrap()
        };
        let plots = d.plots().unwrap();
        for (i, &p) in plots.iter().enumerate() {
            prop_assert!(CircularPlot::new(p, r).unwrap().inside(&region));
            for &q in &plots[..i] {
                prop_assert!(p.distance(q) >= 2.0 * r);
            }
        }
    }

    #[test]
    fn ht_is_sample_mean_and_variance_over_n(n in 2usize..80, seed in 0u64..1000) {
        let pop = population(12, 0.3, seed);
        let cov = pop.covariates();
        let (cells, y) = sample(&pop, n, seed);
        let rec = named_estimator(EstimatorTag::Ht, &y, &cov.select(&cells), &cov).unwrap();
        prop_assert!(rel(rec.mu_hat, stats::mean(&y)) <= 1e-12);
        prop_assert!(rel(rec.var_hat, stats::sample_variance(&y) / n as f64) <= 1e-12);
    }

    #[test]
    fn identity_models_have_zero_residual_sum(n in 6usize..80, seed in 0u64..1000, two in any::<bool>()) {
        let pop = population(12, 0.3, seed);
        let cov = pop.covariates();
        let (cells, y) = sample(&pop, n, seed);
        let tag = if two { EstimatorTag::Greg2 } else { EstimatorTag::Greg1 };
        let rec = named_estimator(tag, &y, &cov.select(&cells), &cov).unwrap();
        let scale: f64 = y.iter().map(|v| v.abs()).sum();
        prop_assert!(rec.residuals.iter().sum::<f64>().abs() <= 1e-10 * scale.max(1.0));
    }

    #[test]
    fn estimates_scale_with_response(n in 6usize..60, seed in 0u64..1000, c in prop_oneof![-5.0f64..-0.2, 0.2f64..5.0]) {
        let pop = population(10, 0.4, seed);
        let cov = pop.covariates();
        let (cells, y) = sample(&pop, n, seed);
        let cy: Vec<f64> = y.iter().map(|v| c * v).collect();
        let sample_cov = cov.select(&cells);
        for tag in [EstimatorTag::Ht, EstimatorTag::Greg1, EstimatorTag::Greg2] {
            let a = named_estimator(tag, &y, &sample_cov, &cov).unwrap();
            let b = named_estimator(tag, &cy, &sample_cov, &cov).unwrap();
            prop_assert!((b.mu_hat - c * a.mu_hat).abs() <= 1e-9 * (1.0 + (c * a.mu_hat).abs()));
            prop_assert!(rel(b.var_hat, c * c * a.var_hat) <= 1e-9);
        }
    }

    #[test]
    fn prepared_matches_reference(n in 6usize..60, seed in 0u64..1000) {
        let pop = population(10, 0.4, seed);
        let cov = pop.covariates();
        let (cells, y) = sample(&pop, n, seed);
        let s = cov.select(&cells);
        for tag in [EstimatorTag::Ht, EstimatorTag::Greg1, EstimatorTag::Greg2] {
            let a = named_estimator(tag, &y, &s, &cov).unwrap();
            let b = PreparedEstimator::new(tag, &cov, Default::default()).unwrap().estimate(&y, &s).unwrap();
            prop_assert!((a.mu_hat - b.mu_hat).abs() <= 1e-10 * (1.0 + a.mu_hat.abs()));
            prop_assert!(rel(a.var_hat, b.var_hat) <= 1e-10);
        }
    }

    #[test]
    fn percent_bias_is_scale_free(est in 0.01f64..100.0, emp in 0.01f64..100.0, c in 0.1f64..10.0) {
        let a = montecarlo::percent_bias(est, emp).unwrap();
        let b = montecarlo::percent_bias(c * c * est, c * c * emp).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn variogram_scales_quadratically(seed in 0u64..500, c in 0.2f64..5.0) {
        let mut s = rng::stream(seed, &[]);
        let points: Vec<Point> = (0..60).map(|_| {
            use rand::Rng;
            Point::new(s.random(), s.random())
        }).collect();
        let values: Vec<f64> = points.iter().map(|p| (4.0 * p.x).sin() + p.y + 0.1 * ((p.x * 97.0).sin())).collect();
        let scaled: Vec<f64> = values.iter().map(|v| c * v).collect();
        let a = variogram::empirical_semivariogram(&points, &values, 10, 0.7).unwrap();
        let b = variogram::empirical_semivariogram(&points, &scaled, 10, 0.7).unwrap();
        for (ga, gb) in a.gamma.iter().zip(&b.gamma) {
            prop_assert!((gb - c * c * ga).abs() <= 1e-9 * (1.0 + gb.abs()));
        }
        let fa = variogram::fit_exponential(&a).unwrap();
        let fb = variogram::fit_exponential(&b).unwrap();
        prop_assert!(rel(fa.esr, fb.esr) <= 1e-6);
        prop_assert!((fb.partial_sill - c * c * fa.partial_sill).abs() <= 1e-6 * (1.0 + fb.sill()));
        prop_assert!((fb.nugget - c * c * fa.nugget).abs() <= 1e-6 * (1.0 + fb.sill()));
    }

    #[test]
    fn plot_density_additive_and_translation_invariant(
        trees in prop::collection::vec((0u32..3840, 0u32..3840, 0.0f64..500.0), 0..80),
        dx in -64_000i32..64_000,
        dy in -64_000i32..64_000,
        split in 0usize..80,
    ) {
        let region = Rect::new(0.0, 0.0, 60.0, 60.0).unwrap();
        // Coordinates on a 1/64 m lattice keep every shift and squared
        // distance exact.
        let all: Vec<Tree> = trees
            .iter()
            .map(|&(x, y, agb)| Tree { x: x as f64 / 64.0, y: y as f64 / 64.0, agb })
            .collect();
        let plot = CircularPlot::new(Point::new(30.0, 30.0), 20.0).unwrap();
        let whole = plot_agb_density(&StemMap::new(region, all.clone()).unwrap(), &plot).unwrap();

        let k = split.min(all.len());
        let left = plot_agb_density(&StemMap::new(region, all[..k].to_vec()).unwrap(), &plot).unwrap();
        let right = plot_agb_density(&StemMap::new(region, all[k..].to_vec()).unwrap(), &plot).unwrap();
        prop_assert!((whole - left - right).abs() <= 1e-9 * (1.0 + whole));

        let (sx, sy) = (dx as f64 / 64.0, dy as f64 / 64.0);
        let moved: Vec<Tree> = all.iter().map(|t| Tree { x: t.x + sx, y: t.y + sy, agb: t.agb }).collect();
        let moved_region = region.translate(sx, sy);
        let moved_plot = CircularPlot::new(Point::new(30.0 + sx, 30.0 + sy), 20.0).unwrap();
        let shifted = plot_agb_density(&StemMap::new(moved_region, moved).unwrap(), &moved_plot).unwrap();
        prop_assert_eq!(shifted, whole);
    }
}

#[test]
fn systematic_full_enumeration_mean_is_exact() {
    for seed in 0..5 {
        let pop = population(20, 0.2 + 0.15 * seed as f64, seed);
        let config = StudyConfig {
            master_seed: seed,
            bootstrap_b: 100,
            ..StudyConfig::default()
        };
        for k in [2, 4, 5, 10] {
            let design = DesignSpec::Sys {
                k_cols: k,
                k_rows: k,
                mode: SysMode::Full,
                replications: None,
            };
            let tags = [EstimatorTag::Ht, EstimatorTag::Greg1, EstimatorTag::Greg2];
            let a = montecarlo::run_cell(&pop, &design, &tags, &config).unwrap();
            let b = montecarlo::run_cell(&pop, &design, &tags, &config).unwrap();
            assert_eq!(a.summaries, b.summaries);
            assert!(rel(a.summaries[0].mean_of_mu_hat, pop.mean()) <= 1e-10);
        }
    }
}
