//! Model-assisted estimators of a population mean.
//!
//! Every estimator is the same two-term form driven by an assisting model
//! fitted on the sample:
//!
//! ```text
//! mu_hat   = mean(y_hat_U) + mean(y_s - y_hat_s)
//! var_hat  = s2 / n,   s2 = sum((y_hat_s - y_s)^2) / (n - p)
//! ```
//!
//! The intercept-only model reduces this to the sample mean and the sample
//! variance over `n`. With an intercept and the identity transform the
//! residual term is zero up to rounding; under the square-root transform the
//! model predicts `(X beta)^2`, residuals no longer sum to zero and the second
//! term corrects the prediction mean.

mod ols;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use ols::{ols_fit, DesignMatrix, RANK_TOLERANCE};

use crate::error::{Error, Result};
use crate::stats;

/// Named covariate columns of equal length.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Covariates {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    len: usize,
}

impl Covariates {
    pub fn new(columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let len = columns.first().map_or(0, |c| c.1.len());
        let mut out = Covariates::empty(len);
        for (name, col) in columns {
            out.push(name, col)?;
        }
        Ok(out)
    }

    /// No columns, `len` rows.
    pub fn empty(len: usize) -> Self {
        Covariates {
            names: Vec::new(),
            columns: Vec::new(),
            len,
        }
    }

    pub fn push(&mut self, name: impl Into<String>, column: Vec<f64>) -> Result<()> {
        let name = name.into();
        if column.len() != self.len {
            return Err(Error::Shape(format!(
                "covariate `{name}` has {} values, expected {}",
                column.len(),
                self.len
            )));
        }
        if self.names.contains(&name) {
            return Err(Error::Config(format!("duplicate covariate `{name}`")));
        }
        self.names.push(name);
        self.columns.push(column);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.columns[i].as_slice())
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Covariates {
        Covariates {
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| indices.iter().map(|&i| c[i]).collect()).collect(),
            len: indices.len(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    Identity,
    Sqrt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssistingModel {
    pub columns: Vec<String>,
    pub transform: Transform,
}

impl AssistingModel {
    pub fn intercept_only() -> Self {
        AssistingModel {
            columns: Vec::new(),
            transform: Transform::Identity,
        }
    }

    pub fn linear(columns: &[&str]) -> Self {
        AssistingModel {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            transform: Transform::Identity,
        }
    }

    pub fn sqrt(columns: &[&str]) -> Self {
        AssistingModel {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            transform: Transform::Sqrt,
        }
    }

    /// Number of coefficients including the intercept.
    pub fn p(&self) -> usize {
        1 + self.columns.len()
    }

    fn design(&self, covariates: &Covariates) -> Result<DesignMatrix> {
        let mut x = DesignMatrix::with_intercept(covariates.len());
        for name in &self.columns {
            let col = covariates
                .column(name)
                .ok_or_else(|| Error::Config(format!("assisting model needs covariate `{name}`")))?;
            x.push(name.clone(), col.to_vec())?;
        }
        Ok(x)
    }
}

/// The six named estimators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimatorTag {
    #[serde(rename = "HT")]
    Ht,
    #[serde(rename = "GREG1")]
    Greg1,
    #[serde(rename = "GREG2")]
    Greg2,
    #[serde(rename = "HF-HT")]
    HfHt,
    #[serde(rename = "HF-GREG1")]
    HfGreg1,
    #[serde(rename = "HF-GREG2")]
    HfGreg2,
}

impl EstimatorTag {
    pub const ALL: [EstimatorTag; 6] = [
        EstimatorTag::Ht,
        EstimatorTag::Greg1,
        EstimatorTag::Greg2,
        EstimatorTag::HfHt,
        EstimatorTag::HfGreg1,
        EstimatorTag::HfGreg2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorTag::Ht => "HT",
            EstimatorTag::Greg1 => "GREG1",
            EstimatorTag::Greg2 => "GREG2",
            EstimatorTag::HfHt => "HF-HT",
            EstimatorTag::HfGreg1 => "HF-GREG1",
            EstimatorTag::HfGreg2 => "HF-GREG2",
        }
    }

    pub fn model(self) -> AssistingModel {
        match self {
            EstimatorTag::Ht | EstimatorTag::HfHt => AssistingModel::intercept_only(),
            EstimatorTag::Greg1 => AssistingModel::linear(&["x1"]),
            EstimatorTag::Greg2 => AssistingModel::linear(&["x1", "x2"]),
            EstimatorTag::HfGreg1 => AssistingModel::sqrt(&["P90"]),
            EstimatorTag::HfGreg2 => AssistingModel::sqrt(&["P90", "P10", "NDVI"]),
        }
    }

    /// Estimators that apply to the gridded synthetic populations.
    pub fn is_synthetic(self) -> bool {
        matches!(self, EstimatorTag::Ht | EstimatorTag::Greg1 | EstimatorTag::Greg2)
    }

    pub fn valid_names() -> String {
        EstimatorTag::ALL.iter().map(|t| t.name()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for EstimatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase().replace("H-T", "HT").replace('_', "-");
        EstimatorTag::ALL
            .into_iter()
            .find(|t| t.name() == key)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown estimator `{s}`; valid estimators are {}",
                    EstimatorTag::valid_names()
                ))
            })
    }
}

/// Sample and population predictions of a fitted assisting model.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub y_hat_s: Vec<f64>,
    pub y_hat_u: Vec<f64>,
    pub coefficients: Vec<f64>,
}

fn transformed_response(transform: Transform, y_s: &[f64]) -> Result<Vec<f64>> {
    match transform {
        Transform::Identity => Ok(y_s.to_vec()),
        Transform::Sqrt => y_s
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if v >= 0.0 {
                    Ok(v.sqrt())
                } else {
                    Err(Error::Transform(format!(
                        "square-root model needs non-negative responses, unit {i} has {v}"
                    )))
                }
            })
            .collect(),
    }
}

fn back_transform(transform: Transform, mut linear: Vec<f64>) -> Vec<f64> {
    if transform == Transform::Sqrt {
        for v in &mut linear {
            *v *= *v;
        }
    }
    linear
}

/// Fits `model` on the sample and predicts for the sample and every
/// population unit. Square-root models are fitted on `sqrt(y)` and predict
/// the square of the linear predictor.
pub fn fit_and_predict(
    model: &AssistingModel,
    y_s: &[f64],
    sample: &Covariates,
    population: &Covariates,
) -> Result<Prediction> {
    if sample.len() != y_s.len() {
        return Err(Error::Shape(format!(
            "{} responses but {} sample covariate rows",
            y_s.len(),
            sample.len()
        )));
    }
    let response = transformed_response(model.transform, y_s)?;
    let xs = model.design(sample)?;
    let beta = ols_fit(&xs, &response)?;
    let xu = model.design(population)?;
    Ok(Prediction {
        y_hat_s: back_transform(model.transform, xs.predict(&beta)),
        y_hat_u: back_transform(model.transform, xu.predict(&beta)),
        coefficients: beta,
    })
}

/// `mean(y_hat_U) + mean(y_s - y_hat_s)`.
pub fn estimate_mean(y_hat_u: &[f64], y_hat_s: &[f64], y_s: &[f64]) -> Result<f64> {
    if y_hat_s.len() != y_s.len() {
        return Err(Error::Shape(format!(
            "{} fitted values for {} observations",
            y_hat_s.len(),
            y_s.len()
        )));
    }
    if y_hat_u.is_empty() || y_s.is_empty() {
        return Err(Error::Shape("empty prediction or sample vector".into()));
    }
    let correction = stats::sum(y_s.iter().zip(y_hat_s).map(|(y, f)| y - f)) / y_s.len() as f64;
    Ok(stats::mean(y_hat_u) + correction)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarianceEstimate {
    pub s2: f64,
    pub var_hat: f64,
}

/// `s2 / n` with `s2 = RSS / (n - p)`; no finite-population correction.
pub fn estimate_variance(y_hat_s: &[f64], y_s: &[f64], p: usize) -> Result<VarianceEstimate> {
    if y_hat_s.len() != y_s.len() {
        return Err(Error::Shape(format!(
            "{} fitted values for {} observations",
            y_hat_s.len(),
            y_s.len()
        )));
    }
    let n = y_s.len();
    if n <= p {
        return Err(Error::InsufficientSample { n, p });
    }
    let rss = stats::sum(y_hat_s.iter().zip(y_s).map(|(f, y)| (f - y) * (f - y)));
    let s2 = rss / (n - p) as f64;
    Ok(VarianceEstimate {
        s2,
        var_hat: s2 / n as f64,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    /// Multiply `var_hat` by `1 - n/N`. Off by default.
    #[serde(default)]
    pub finite_population_correction: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateRecord {
    pub estimator: EstimatorTag,
    pub mu_hat: f64,
    pub var_hat: f64,
    pub s2: f64,
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub n: usize,
    pub p: usize,
}

fn check_columns(tag: EstimatorTag, sample: &Covariates, population: &Covariates) -> Result<()> {
    for col in &tag.model().columns {
        for (side, cov) in [("sample", sample), ("population", population)] {
            if cov.column(col).is_none() {
                return Err(Error::Config(format!(
                    "estimator {tag} needs covariate `{col}`, missing from the {side} covariates"
                )));
            }
        }
    }
    Ok(())
}

/// Reference evaluation of a named estimator through full population
/// predictions.
pub fn named_estimator(
    tag: EstimatorTag,
    y_s: &[f64],
    sample: &Covariates,
    population: &Covariates,
) -> Result<EstimateRecord> {
    named_estimator_with(tag, y_s, sample, population, EstimatorOptions::default())
}

pub fn named_estimator_with(
    tag: EstimatorTag,
    y_s: &[f64],
    sample: &Covariates,
    population: &Covariates,
    options: EstimatorOptions,
) -> Result<EstimateRecord> {
    check_columns(tag, sample, population)?;
    let model = tag.model();
    let pred = fit_and_predict(&model, y_s, sample, population)?;
    let mu_hat = estimate_mean(&pred.y_hat_u, &pred.y_hat_s, y_s)?;
    let v = estimate_variance(&pred.y_hat_s, y_s, model.p())?;
    let var_hat = apply_fpc(v.var_hat, y_s.len(), population.len(), options);
    Ok(EstimateRecord {
        estimator: tag,
        mu_hat,
        var_hat,
        s2: v.s2,
        coefficients: pred.coefficients,
        residuals: y_s.iter().zip(&pred.y_hat_s).map(|(y, f)| y - f).collect(),
        n: y_s.len(),
        p: model.p(),
    })
}

fn apply_fpc(var_hat: f64, n: usize, big_n: usize, options: EstimatorOptions) -> f64 {
    if options.finite_population_correction {
        var_hat * (1.0 - n as f64 / big_n as f64)
    } else {
        var_hat
    }
}

/// A named estimator with the population side precomputed.
///
/// `mean(y_hat_U)` only depends on the population through the first moments
/// of the design columns (identity transform), or through their second-moment
/// matrix (square-root transform, where `mean((x'b)^2) = b' M b`). Both are
/// computed once per population, so each replicate costs O(n p^2).
#[derive(Clone, Debug)]
pub struct PreparedEstimator {
    tag: EstimatorTag,
    model: AssistingModel,
    first: Vec<f64>,
    second: Vec<Vec<f64>>,
    population_len: usize,
    options: EstimatorOptions,
}

impl PreparedEstimator {
    pub fn new(tag: EstimatorTag, population: &Covariates, options: EstimatorOptions) -> Result<Self> {
        let model = tag.model();
        for col in &model.columns {
            if population.column(col).is_none() {
                return Err(Error::Config(format!(
                    "estimator {tag} needs covariate `{col}`, missing from the population covariates"
                )));
            }
        }
        let x = model.design(population)?;
        let p = x.cols();
        let big_n = population.len() as f64;
        let first = (0..p).map(|j| stats::mean(x.column(j))).collect();
        let second = (0..p)
            .map(|j| {
                (0..p)
                    .map(|k| stats::sum(x.column(j).iter().zip(x.column(k)).map(|(a, b)| a * b)) / big_n)
                    .collect()
            })
            .collect();
        Ok(PreparedEstimator {
            tag,
            model,
            first,
            second,
            population_len: population.len(),
            options,
        })
    }

    pub fn tag(&self) -> EstimatorTag {
        self.tag
    }

    pub fn p(&self) -> usize {
        self.model.p()
    }

    fn population_prediction_mean(&self, beta: &[f64]) -> f64 {
        match self.model.transform {
            Transform::Identity => stats::sum(beta.iter().zip(&self.first).map(|(b, m)| b * m)),
            Transform::Sqrt => stats::sum(
                (0..beta.len()).flat_map(|j| (0..beta.len()).map(move |k| (j, k))).map(|(j, k)| beta[j] * self.second[j][k] * beta[k]),
            ),
        }
    }

    pub fn estimate(&self, y_s: &[f64], sample: &Covariates) -> Result<EstimateRecord> {
        if sample.len() != y_s.len() {
            return Err(Error::Shape(format!(
                "{} responses but {} sample covariate rows",
                y_s.len(),
                sample.len()
            )));
        }
        for col in &self.model.columns {
            if sample.column(col).is_none() {
                return Err(Error::Config(format!(
                    "estimator {} needs covariate `{col}`, missing from the sample covariates",
                    self.tag
                )));
            }
        }
        let response = transformed_response(self.model.transform, y_s)?;
        let xs = self.model.design(sample)?;
        let beta = ols_fit(&xs, &response)?;
        let y_hat_s = back_transform(self.model.transform, xs.predict(&beta));
        let residuals: Vec<f64> = y_s.iter().zip(&y_hat_s).map(|(y, f)| y - f).collect();
        let mu_hat = self.population_prediction_mean(&beta) + stats::mean(&residuals);
        let v = estimate_variance(&y_hat_s, y_s, self.p())?;
        Ok(EstimateRecord {
            estimator: self.tag,
            mu_hat,
            var_hat: apply_fpc(v.var_hat, y_s.len(), self.population_len, self.options),
            s2: v.s2,
            coefficients: beta,
            residuals,
            n: y_s.len(),
            p: self.p(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cov(cols: &[(&str, &[f64])]) -> Covariates {
        Covariates::new(cols.iter().map(|(n, c)| (n.to_string(), c.to_vec())).collect()).unwrap()
    }

    #[test]
    fn intercept_model_predicts_sample_mean() {
        let y = [1.0, 2.0, 3.0];
        let s = Covariates::empty(3);
        let u = Covariates::empty(10);
        let p = fit_and_predict(&AssistingModel::intercept_only(), &y, &s, &u).unwrap();
        assert!(p.y_hat_s.iter().all(|v| (v - 2.0).abs() < 1e-14));
        assert_eq!(p.y_hat_u.len(), 10);
        assert!(p.y_hat_u.iter().all(|v| (v - 2.0).abs() < 1e-14));
    }

    #[test]
    fn sqrt_model_perfect_fit() {
        let y = [1.0, 4.0, 9.0];
        let s = cov(&[("P90", &[1.0, 2.0, 3.0])]);
        let u = cov(&[("P90", &[1.0, 2.0, 3.0, 4.0])]);
        let p = fit_and_predict(&AssistingModel::sqrt(&["P90"]), &y, &s, &u).unwrap();
        assert!(p.coefficients[0].abs() < 1e-12 && (p.coefficients[1] - 1.0).abs() < 1e-12);
        for (a, b) in p.y_hat_s.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((p.y_hat_u[3] - 16.0).abs() < 1e-11);
    }

    #[test]
    fn identity_perfect_fit_has_zero_residuals() {
        let x = [0.5, 1.0, 2.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        let s = cov(&[("x1", &x)]);
        let p = fit_and_predict(&AssistingModel::linear(&["x1"]), &y, &s, &s).unwrap();
        for (a, b) in p.y_hat_s.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sqrt_rejects_negative_response() {
        let s = cov(&[("P90", &[1.0, 2.0, 3.0])]);
        let err = fit_and_predict(&AssistingModel::sqrt(&["P90"]), &[1.0, -4.0, 9.0], &s, &s).unwrap_err();
        assert!(matches!(err, Error::Transform(_)));
    }

    #[test]
    fn mean_examples() {
        assert_eq!(estimate_mean(&[10.0; 4], &[2.0, 2.0], &[1.0, 3.0]).unwrap(), 10.0);
        assert_eq!(estimate_mean(&[1.0, 3.0], &[5.0, 6.0], &[5.0, 6.0]).unwrap(), 2.0);
        assert!(matches!(estimate_mean(&[1.0], &[1.0], &[1.0, 2.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn variance_examples() {
        let v = estimate_variance(&[2.0; 3], &[1.0, 2.0, 3.0], 1).unwrap();
        assert_eq!(v.s2, 1.0);
        assert!((v.var_hat - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(estimate_variance(&[1.0, 2.0], &[1.0, 2.0], 1).unwrap().var_hat, 0.0);
        assert!(matches!(
            estimate_variance(&[1.0, 2.0], &[1.0, 2.0], 2),
            Err(Error::InsufficientSample { n: 2, p: 2 })
        ));
    }

    #[test]
    fn variance_matches_textbook_formula() {
        use rand::Rng;
        let mut rng = crate::rng::stream(5, &[]);
        for _ in 0..50 {
            let y: Vec<f64> = (0..25).map(|_| rng.random::<f64>() * 10.0 - 3.0).collect();
            let rec = named_estimator(EstimatorTag::Ht, &y, &Covariates::empty(25), &Covariates::empty(400)).unwrap();
            // classical s_y^2 / n, accumulated independently
            let ybar = y.iter().sum::<f64>() / 25.0;
            let s2y = y.iter().map(|v| (v - ybar).powi(2)).sum::<f64>() / 24.0;
            assert!((rec.var_hat - s2y / 25.0).abs() <= 1e-12 * s2y / 25.0);
        }
    }

    #[test]
    fn tags_parse() {
        assert_eq!("ht".parse::<EstimatorTag>().unwrap(), EstimatorTag::Ht);
        assert_eq!("H-T".parse::<EstimatorTag>().unwrap(), EstimatorTag::Ht);
        assert_eq!("HF-H-T".parse::<EstimatorTag>().unwrap(), EstimatorTag::HfHt);
        assert_eq!("hf_greg2".parse::<EstimatorTag>().unwrap(), EstimatorTag::HfGreg2);
        let err = "GREG3".parse::<EstimatorTag>().unwrap_err().to_string();
        assert!(err.contains("GREG2") && err.contains("HF-HT"), "{err}");
        for t in EstimatorTag::ALL {
            assert_eq!(t.name().parse::<EstimatorTag>().unwrap(), t);
        }
    }

    #[test]
    fn missing_columns_are_configuration_errors() {
        let s = cov(&[("x1", &[1.0, 2.0, 3.0, 4.0])]);
        let err = named_estimator(EstimatorTag::Greg2, &[1.0, 2.0, 3.0, 5.0], &s, &s).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("x2")), "{err}");
        assert!(PreparedEstimator::new(EstimatorTag::HfGreg1, &s, EstimatorOptions::default()).is_err());
    }

    #[test]
    fn prepared_matches_reference_path() {
        use rand::Rng;
        let mut rng = crate::rng::stream(8, &[]);
        let big_n = 300;
        let cols: Vec<Vec<f64>> = (0..3).map(|_| (0..big_n).map(|_| 1.0 + rng.random::<f64>() * 4.0).collect()).collect();
        let pop = Covariates::new(vec![
            ("x1".into(), cols[0].clone()),
            ("x2".into(), cols[1].clone()),
            ("P90".into(), cols[0].clone()),
            ("P10".into(), cols[1].clone()),
            ("NDVI".into(), cols[2].clone()),
        ])
        .unwrap();
        let y: Vec<f64> = (0..big_n).map(|i| (0.5 + cols[0][i] + 0.3 * cols[2][i] + rng.random::<f64>()).powi(2)).collect();
        let idx: Vec<usize> = (0..40).map(|k| k * 7).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        let sample = pop.select(&idx);
        for tag in EstimatorTag::ALL {
            let reference = named_estimator(tag, &ys, &sample, &pop).unwrap();
            let prepared = PreparedEstimator::new(tag, &pop, EstimatorOptions::default()).unwrap().estimate(&ys, &sample).unwrap();
            assert!((reference.mu_hat - prepared.mu_hat).abs() <= 1e-10 * reference.mu_hat.abs(), "{tag}");
            assert_eq!(reference.var_hat, prepared.var_hat, "{tag}");
        }
    }

    #[test]
    fn fpc_flag() {
        let y = [1.0, 2.0, 3.0, 6.0];
        let off = named_estimator(EstimatorTag::Ht, &y, &Covariates::empty(4), &Covariates::empty(8)).unwrap();
        let on = named_estimator_with(
            EstimatorTag::Ht,
            &y,
            &Covariates::empty(4),
            &Covariates::empty(8),
            EstimatorOptions { finite_population_correction: true },
        )
        .unwrap();
        assert!((on.var_hat - 0.5 * off.var_hat).abs() < 1e-15);
    }
}
