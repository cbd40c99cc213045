//! Empirical semivariograms and exponential-model fits for residual fields.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame::Point;
use crate::gaussfield::{phi_to_esr, ESR_CORRELATION};

pub const DEFAULT_BINS: usize = 15;
/// Number of log-spaced range values scanned before refinement.
pub const RANGE_GRID_POINTS: usize = 40;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalVariogram {
    pub bin_centers: Vec<f64>,
    pub gamma: Vec<f64>,
    pub pair_counts: Vec<usize>,
    pub max_lag: f64,
}

impl EmpiricalVariogram {
    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    /// Shortest reported lag.
    pub fn min_lag(&self) -> f64 {
        self.bin_centers.first().copied().unwrap_or(0.0)
    }
}

/// Matheron estimator over `num_bins` equal-width bins on `(0, max_lag]`.
/// Bins without pairs are left out.
pub fn empirical_semivariogram(
    locations: &[Point],
    values: &[f64],
    num_bins: usize,
    max_lag: f64,
) -> Result<EmpiricalVariogram> {
    let n = values.len();
    if locations.len() != n {
        return Err(Error::Shape(format!("{} locations but {n} values", locations.len())));
    }
    if n < 10 {
        return Err(Error::InsufficientData(format!("semivariogram needs at least 10 points, got {n}")));
    }
    if !(max_lag > 0.0 && max_lag.is_finite()) {
        return Err(Error::Domain(format!("max_lag must be positive, got {max_lag}")));
    }
    if num_bins == 0 {
        return Err(Error::Domain("num_bins must be >= 1".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("semivariogram values must be finite".into()));
    }
    let width = max_lag / num_bins as f64;
    let mut sums = vec![0.0; num_bins];
    let mut counts = vec![0usize; num_bins];
    for i in 0..n {
        for j in i + 1..n {
            let d = locations[i].distance(locations[j]);
            if d <= 0.0 || d > max_lag {
                continue;
            }
            let b = ((d / width).ceil() as usize).clamp(1, num_bins) - 1;
            let diff = values[i] - values[j];
            sums[b] += diff * diff;
            counts[b] += 1;
        }
    }
    let mut out = EmpiricalVariogram {
        bin_centers: Vec::new(),
        gamma: Vec::new(),
        pair_counts: Vec::new(),
        max_lag,
    };
    for b in 0..num_bins {
        if counts[b] == 0 {
            continue;
        }
        out.bin_centers.push((b as f64 + 0.5) * width);
        out.gamma.push(sums[b] / (2.0 * counts[b] as f64));
        out.pair_counts.push(counts[b]);
    }
    Ok(out)
}

/// `gamma(d) = nugget + partial_sill (1 - exp(-phi d))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentialFit {
    pub nugget: f64,
    pub partial_sill: f64,
    pub phi: f64,
    pub esr: f64,
    /// The decay sits at the smallest value searched (range at the largest),
    /// or there is no spatial structure at all.
    pub at_lower_bound: bool,
    pub objective: f64,
}

impl ExponentialFit {
    pub fn at(&self, d: f64) -> f64 {
        self.nugget + self.partial_sill * (1.0 - (-self.phi * d).exp())
    }

    pub fn sill(&self) -> f64 {
        self.nugget + self.partial_sill
    }
}

/// Weighted least squares fit with weights `pairs / lag^2`.
///
/// For a fixed decay the model is linear in (nugget, partial_sill), so those
/// two are solved exactly under non-negativity and only the decay is
/// searched: a log-spaced scan of the range over `[min lag / 4, 4 max_lag]`
/// followed by golden-section refinement around the best scan point.
pub fn fit_exponential(vario: &EmpiricalVariogram) -> Result<ExponentialFit> {
    if vario.len() < 4 {
        return Err(Error::Fit(format!(
            "exponential fit needs at least 4 non-empty bins, got {}",
            vario.len()
        )));
    }
    let lags = &vario.bin_centers;
    let gamma = &vario.gamma;
    let weights: Vec<f64> = vario
        .pair_counts
        .iter()
        .zip(lags)
        .map(|(&c, &d)| c as f64 / (d * d))
        .collect();

    let esr_lo = vario.min_lag() / 4.0;
    let esr_hi = 4.0 * vario.max_lag;
    let (log_lo, log_hi) = (esr_lo.ln(), esr_hi.ln());
    let profile = |log_esr: f64| {
        let phi = -ESR_CORRELATION.ln() / log_esr.exp();
        let (a, b, obj) = profile_linear(lags, gamma, &weights, phi);
        (obj, a, b, phi)
    };

    // scan from the longest range down; ties keep the longer range
    let step = (log_hi - log_lo) / (RANGE_GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..RANGE_GRID_POINTS).map(|k| log_hi - k as f64 * step).collect();
    let scale = gamma.iter().zip(&weights).map(|(g, w)| w * g * g).sum::<f64>().max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    let mut best_k = 0;
    let mut best = profile(grid[0]);
    for (k, &g) in grid.iter().enumerate().skip(1) {
        let cand = profile(g);
        if cand.0 < best.0 - tol {
            best = cand;
            best_k = k;
        }
    }
    let mut best_log = grid[best_k];

    let lo = grid[(best_k + 1).min(RANGE_GRID_POINTS - 1)];
    let hi = grid[best_k.saturating_sub(1)];
    if hi > lo {
        let refined = golden_min(|t| profile(t).0, lo, hi, 1e-12);
        let cand = profile(refined);
        if cand.0 < best.0 - tol {
            best = cand;
            best_log = refined;
        }
    }

    let (objective, nugget, partial_sill, phi) = best;
    let no_structure = partial_sill <= 1e-12 * gamma.iter().cloned().fold(0.0, f64::max);
    let at_lower_bound = no_structure || best_log >= log_hi;
    let (phi, partial_sill) = if no_structure {
        (-ESR_CORRELATION.ln() / esr_hi, 0.0)
    } else {
        (phi, partial_sill)
    };
    Ok(ExponentialFit {
        nugget,
        partial_sill,
        phi,
        esr: phi_to_esr(phi)?,
        at_lower_bound,
        objective,
    })
}

/// Non-negative weighted least squares of `gamma ~ a + b g(d)` for fixed `phi`.
fn profile_linear(lags: &[f64], gamma: &[f64], w: &[f64], phi: f64) -> (f64, f64, f64) {
    let g: Vec<f64> = lags.iter().map(|d| 1.0 - (-phi * d).exp()).collect();
    let (mut sw, mut sg, mut sgg, mut sy, mut sgy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..lags.len() {
        sw += w[i];
        sg += w[i] * g[i];
        sgg += w[i] * g[i] * g[i];
        sy += w[i] * gamma[i];
        sgy += w[i] * g[i] * gamma[i];
    }
    let objective = |a: f64, b: f64| -> f64 {
        (0..lags.len())
            .map(|i| {
                let r = gamma[i] - a - b * g[i];
                w[i] * r * r
            })
            .sum()
    };
    let mut candidates = vec![(0.0, 0.0)];
    let det = sw * sgg - sg * sg;
    if det > 1e-14 * sw * sgg {
        let a = (sgg * sy - sg * sgy) / det;
        let b = (sw * sgy - sg * sy) / det;
        if a >= 0.0 && b >= 0.0 {
            candidates.push((a, b));
        }
    }
    if sw > 0.0 {
        candidates.push(((sy / sw).max(0.0), 0.0));
    }
    if sgg > 0.0 {
        candidates.push((0.0, (sgy / sgg).max(0.0)));
    }
    candidates
        .into_iter()
        .map(|(a, b)| (a, b, objective(a, b)))
        .fold((0.0, 0.0, f64::INFINITY), |acc, c| if c.2 < acc.2 { c } else { acc })
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv * (b - a);
    let mut d = a + inv * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Default maximum lag: half the shorter side of the bounding box of `points`.
pub fn default_max_lag(points: &[Point]) -> f64 {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    0.5 * (x1 - x0).min(y1 - y0)
}

/// Writes the bins followed by one `fit` row.
pub fn write_variogram_csv<W: Write>(
    writer: W,
    label: &str,
    vario: &EmpiricalVariogram,
    fit: Option<&ExponentialFit>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    write_variogram_rows(&mut w, label, vario, fit, true)?;
    w.flush().map_err(|e| Error::io("variogram csv", e))?;
    Ok(())
}

/// Appends the rows of one variogram to an open writer.
pub fn write_variogram_rows<W: Write>(
    w: &mut csv::Writer<W>,
    label: &str,
    vario: &EmpiricalVariogram,
    fit: Option<&ExponentialFit>,
    header: bool,
) -> Result<()> {
    if header {
        w.write_record(["label", "record", "lag", "gamma", "pairs", "nugget", "partial_sill", "phi", "esr"])?;
    }
    for i in 0..vario.len() {
        w.write_record(&[
            label.to_string(),
            "bin".to_string(),
            vario.bin_centers[i].to_string(),
            vario.gamma[i].to_string(),
            vario.pair_counts[i].to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ])?;
    }
    if let Some(f) = fit {
        w.write_record(&[
            label.to_string(),
            "fit".to_string(),
            String::new(),
            String::new(),
            String::new(),
            f.nugget.to_string(),
            f.partial_sill.to_string(),
            f.phi.to_string(),
            f.esr.to_string(),
        ])?;
    }
    Ok(())
}
