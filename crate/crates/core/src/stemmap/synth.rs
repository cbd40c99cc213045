//! Synthetic stem maps with tunable covariate signal.
//!
//! Two latent Gaussian fields on the raster grid drive everything: tree
//! intensity and per-tree biomass respond to both with strength `signal`, and
//! the raster layers are noisy affine functions of them. At `signal = 0` the
//! trees ignore the latent fields, so plot biomass carries no information
//! about the layers.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{CovariateRaster, StemMap, Tree};
use crate::error::{Error, Result};
use crate::frame::{GridFrame, Point, Rect};
use crate::gaussfield::{CovarianceSpec, FieldFactor, DEFAULT_MAX_DENSE_CELLS};
use crate::rng::{self, tag};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    /// Raster cell side, m.
    pub cell_side: f64,
    /// Expected number of trees.
    pub target_trees: f64,
    /// Effective range of the latent fields, m.
    pub latent_esr: f64,
    /// Strength of the link between biomass and the latent fields.
    pub signal: f64,
    /// Mean tree biomass, kg.
    pub mean_tree_agb: f64,
    /// Log-scale standard deviation of tree biomass.
    pub tree_log_sd: f64,
    /// Independent noise added to each layer, in latent standard deviations.
    pub covariate_noise: f64,
    pub max_dense_cells: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            cell_side: 10.0,
            target_trees: 83_801.0,
            latent_esr: 200.0,
            signal: 1.0,
            mean_tree_agb: 100.0,
            tree_log_sd: 1.0,
            covariate_noise: 0.25,
            max_dense_cells: DEFAULT_MAX_DENSE_CELLS,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let positive = [
            ("cell_side", self.cell_side),
            ("target_trees", self.target_trees),
            ("latent_esr", self.latent_esr),
            ("mean_tree_agb", self.mean_tree_agb),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                problems.push(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("signal", self.signal),
            ("tree_log_sd", self.tree_log_sd),
            ("covariate_noise", self.covariate_noise),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                problems.push(format!("{name} must be >= 0, got {v}"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

// latent loadings of tree intensity and tree biomass
const INTENSITY_L1: f64 = 0.3;
const AGB_L1: f64 = 0.5;
const AGB_L2: f64 = 0.4;

/// Builds a stem map over `region` and a matching raster with layers
/// `P90`, `P10` and `NDVI`.
pub fn synthesize_stemmap(region: Rect, spec: &SynthSpec, master_seed: u64) -> Result<(StemMap, CovariateRaster)> {
    spec.validate()?;
    let cols = region.width() / spec.cell_side;
    let rows = region.height() / spec.cell_side;
    if (cols - cols.round()).abs() > 1e-9 || (rows - rows.round()).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "region {} x {} is not a whole number of {} m cells",
            region.width(),
            region.height(),
            spec.cell_side
        )));
    }
    let grid = GridFrame::new(
        cols.round() as usize,
        rows.round() as usize,
        spec.cell_side,
        Point::new(region.x_min, region.y_min),
    )?;
    let cov = CovarianceSpec::from_esr(1.0, spec.latent_esr)?;
    let factor = FieldFactor::for_frame(&grid, &cov, spec.max_dense_cells)?;
    let l1 = factor.draw(&mut rng::stream(master_seed, &[tag::STEMMAP, 1]));
    let l2 = factor.draw(&mut rng::stream(master_seed, &[tag::STEMMAP, 2]));
    drop(factor);

    let k = spec.signal;
    let weights: Vec<f64> = l1.iter().map(|a| (k * INTENSITY_L1 * a).exp()).collect();
    let total_w: f64 = weights.iter().sum();
    let log_mu = spec.mean_tree_agb.ln() - 0.5 * spec.tree_log_sd.powi(2);
    let agb_shift = 0.5 * k * k * (AGB_L1 * AGB_L1 + AGB_L2 * AGB_L2);

    let mut trees = Vec::with_capacity(spec.target_trees as usize + 1024);
    let mut s = rng::stream(master_seed, &[tag::STEMMAP, 3]);
    for c in 0..grid.len() {
        let lambda = spec.target_trees * weights[c] / total_w;
        let count = Poisson::new(lambda)
            .map_err(|e| Error::Domain(format!("tree intensity {lambda}: {e}")))?
            .sample(&mut s) as usize;
        let (r, col) = grid.row_col(c)?;
        let x0 = region.x_min + col as f64 * spec.cell_side;
        let y0 = region.y_min + r as f64 * spec.cell_side;
        let shift = k * (AGB_L1 * l1[c] + AGB_L2 * l2[c]) - agb_shift;
        for _ in 0..count {
            let x = (x0 + s.random::<f64>() * spec.cell_side).min(region.x_max);
            let y = (y0 + s.random::<f64>() * spec.cell_side).min(region.y_max);
            let z: f64 = s.sample(StandardNormal);
            trees.push(Tree {
                x,
                y,
                agb: (log_mu + spec.tree_log_sd * z + shift).exp(),
            });
        }
    }

    let mut noise = rng::stream(master_seed, &[tag::STEMMAP, 4]);
    let mut e = || -> f64 { spec.covariate_noise * noise.sample::<f64, _>(StandardNormal) };
    let n = grid.len();
    let mut p90 = Vec::with_capacity(n);
    let mut p10 = Vec::with_capacity(n);
    let mut ndvi = Vec::with_capacity(n);
    for c in 0..n {
        p90.push(20.0 + 4.0 * (l1[c] + e()));
        p10.push(6.0 + 2.0 * (l2[c] + e()));
        ndvi.push(0.8 + 0.05 * (0.6 * l2[c] + 0.4 * l1[c] + e()));
    }
    let mut layers = BTreeMap::new();
    layers.insert("P90".to_string(), p90);
    layers.insert("P10".to_string(), p10);
    layers.insert("NDVI".to_string(), ndvi);
    Ok((StemMap::new(region, trees)?, CovariateRaster::new(grid, layers)?))
}
