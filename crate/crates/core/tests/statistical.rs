//! Seeded statistical checks on generators, designs and diagnostics.

use std::collections::BTreeMap;

use rand::Rng;
use sysvar::designs;
use sysvar::estimators::{EstimatorTag, PreparedEstimator};
use sysvar::frame::{CircularPlot, GridFrame, Point};
use sysvar::gaussfield::{self, CovarianceSpec, FieldFactor, SuperPopulationSpec, DEFAULT_MAX_DENSE_CELLS};
use sysvar::stemmap::{plot_covariates, Aggregation, CovariateRaster};
use sysvar::{rng, variogram};

#[test]
fn field_covariances_match_model() {
    let frame = GridFrame::unit_square(10).unwrap();
    let spec = CovarianceSpec::from_esr(2.0, 0.4).unwrap();
    let factor = FieldFactor::for_frame(&frame, &spec, DEFAULT_MAX_DENSE_CELLS).unwrap();
    let draws = 2000;
    let fields: Vec<Vec<f64>> = (0..draws)
        .map(|r| factor.draw(&mut rng::stream(11, &[r])))
        .collect();
    for (a, b) in [(0, 0), (0, 1), (0, 11), (45, 54), (0, 99)] {
        let ma = fields.iter().map(|f| f[a]).sum::<f64>() / draws as f64;
        let mb = fields.iter().map(|f| f[b]).sum::<f64>() / draws as f64;
        let cov = fields.iter().map(|f| (f[a] - ma) * (f[b] - mb)).sum::<f64>() / (draws - 1) as f64;
        let (saa, sbb) = (spec.sigma2, spec.sigma2);
        let sab = spec.at(frame.distance(a, b).unwrap());
        let se = ((saa * sbb + sab * sab) / draws as f64).sqrt();
        assert!((cov - sab).abs() <= 4.0 * se, "pair ({a},{b}): {cov} vs {sab} (se {se})");
    }
}

#[test]
fn srs_inclusion_is_uniform() {
    let frame = GridFrame::unit_square(10).unwrap();
    let (n, draws) = (5, 20_000);
    let mut hits = vec![0u32; frame.len()];
    for r in 0..draws {
        let d = designs::srs_draw(&frame, n, &mut rng::stream(5, &[r])).unwrap();
        for &c in d.cells().unwrap() {
            hits[c] += 1;
        }
    }
    let p = n as f64 / frame.len() as f64;
    let se = (p * (1.0 - p) / draws as f64).sqrt();
    for (c, &h) in hits.iter().enumerate() {
        let f = h as f64 / draws as f64;
        assert!((f - p).abs() <= 4.0 * se, "cell {c}: {f}");
    }
}

#[test]
fn probe_average_converges_with_subgrid() {
    let grid = GridFrame::new(12, 12, 10.0, Point::new(0.0, 0.0)).unwrap();
    let mut s = rng::stream(3, &[]);
    let values: Vec<f64> = (0..grid.len()).map(|_| s.random::<f64>() * 10.0).collect();
    let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - values.iter().cloned().fold(f64::INFINITY, f64::min);
    let raster = CovariateRaster::new(grid, BTreeMap::from([("v".to_string(), values)])).unwrap();
    let radius = 100f64.sqrt() / std::f64::consts::PI.sqrt();
    for _ in 0..200 {
        let c = Point::new(radius + s.random::<f64>() * (120.0 - 2.0 * radius), radius + s.random::<f64>() * (120.0 - 2.0 * radius));
        let plot = CircularPlot::new(c, radius).unwrap();
        for sub in [10, 20, 40] {
            let a = plot_covariates(&raster, &plot, Aggregation::ProbeLattice { subgrid: sub }).unwrap()["v"];
            let b = plot_covariates(&raster, &plot, Aggregation::ProbeLattice { subgrid: 2 * sub }).unwrap()["v"];
            assert!((a - b).abs() < spread / sub as f64, "subgrid {sub}: {a} vs {b}");
        }
    }
}

#[test]
fn residual_structure_weakens_with_covariates() {
    let frame = GridFrame::unit_square(20).unwrap();
    let points = frame.centers();
    let fixtures = 50;
    let mut ordered = 0;
    for seed in 0..fixtures {
        let esr = 0.3 + 0.5 * seed as f64 / fixtures as f64;
        let spec = SuperPopulationSpec::new([0.0, 1.0, 1.0], 1.0, CovarianceSpec::from_esr(4.0, esr).unwrap()).unwrap();
        let pop = gaussfield::generate_population(&frame, &spec, 900 + seed, 0).unwrap();
        let cov = pop.covariates();
        let cells = designs::srs_draw(&frame, 140, &mut rng::stream(seed, &[])).unwrap().cells().unwrap().to_vec();
        let y: Vec<f64> = cells.iter().map(|&i| pop.y[i]).collect();
        let at: Vec<Point> = cells.iter().map(|&i| points[i]).collect();
        let sills: Vec<f64> = [EstimatorTag::Ht, EstimatorTag::Greg1, EstimatorTag::Greg2]
            .iter()
            .map(|&t| {
                let rec = PreparedEstimator::new(t, &cov, Default::default())
                    .unwrap()
                    .estimate(&y, &cov.select(&cells))
                    .unwrap();
                let v = variogram::empirical_semivariogram(&at, &rec.residuals, variogram::DEFAULT_BINS, 0.5).unwrap();
                variogram::fit_exponential(&v).unwrap().partial_sill
            })
            .collect();
        if sills[0] >= sills[1] && sills[1] >= sills[2] {
            ordered += 1;
        }
    }
    assert!(ordered * 10 >= fixtures as usize * 8, "ordering held in {ordered} of {fixtures}");
}
