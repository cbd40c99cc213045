//! Synthetic populations from the super-population model
//!
//! ```text
//! y  ~ N(b0 + b1 x1 + b2 x2, tau2 I)
//! x1 ~ N(0, Sigma),  x2 ~ N(0, Sigma),  Sigma_ij = sigma2 exp(-phi d_ij)
//! ```
//!
//! Sigma is factored densely (Cholesky, lower) once per population and shared
//! by both covariates. The effective spatial range `esr` is the distance at
//! which correlation falls to 0.05, `esr = -ln(0.05) / phi`.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt::factor::{
    cholesky_in_place, cholesky_in_place_scratch, LltRegularization,
};
use faer::{Mat, Par};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{GridFrame, Point};
use crate::rng::{self, tag, Stream};

/// Correlation level that defines the effective spatial range.
pub const ESR_CORRELATION: f64 = 0.05;

/// Default ceiling on the number of cells for which a dense covariance is
/// built. 12 000 cells need ~1.15 GB for the factor.
pub const DEFAULT_MAX_DENSE_CELLS: usize = 12_000;

/// Jitter schedule as multiples of sigma2: none, then three retries.
const JITTER_SCHEDULE: [f64; 4] = [0.0, 1e-10, 1e-9, 1e-8];

fn neg_ln_esr_corr() -> f64 {
    -ESR_CORRELATION.ln()
}

pub fn esr_to_phi(esr: f64) -> Result<f64> {
    if !(esr > 0.0 && esr.is_finite()) {
        return Err(Error::Domain(format!("effective spatial range must be positive, got {esr}")));
    }
    Ok(neg_ln_esr_corr() / esr)
}

pub fn phi_to_esr(phi: f64) -> Result<f64> {
    if !(phi > 0.0 && phi.is_finite()) {
        return Err(Error::Domain(format!("decay rate must be positive, got {phi}")));
    }
    Ok(neg_ln_esr_corr() / phi)
}

/// Exponential covariance `sigma2 * exp(-phi * d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub sigma2: f64,
    pub phi: f64,
}

impl CovarianceSpec {
    pub fn new(sigma2: f64, phi: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Domain(format!("sigma2 must be positive, got {sigma2}")));
        }
        if !(phi > 0.0 && phi.is_finite()) {
            return Err(Error::Domain(format!("phi must be positive, got {phi}")));
        }
        Ok(CovarianceSpec { sigma2, phi })
    }

    pub fn from_esr(sigma2: f64, esr: f64) -> Result<Self> {
        CovarianceSpec::new(sigma2, esr_to_phi(esr)?)
    }

    pub fn esr(&self) -> f64 {
        neg_ln_esr_corr() / self.phi
    }

    #[inline]
    pub fn at(&self, distance: f64) -> f64 {
        if distance == 0.0 {
            self.sigma2
        } else {
            self.sigma2 * (-self.phi * distance).exp()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperPopulationSpec {
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub tau2: f64,
    pub covariance: CovarianceSpec,
}

impl SuperPopulationSpec {
    pub fn new(beta: [f64; 3], tau2: f64, covariance: CovarianceSpec) -> Result<Self> {
        if !(tau2 >= 0.0 && tau2.is_finite()) {
            return Err(Error::Domain(format!("tau2 must be non-negative, got {tau2}")));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Domain("regression coefficients must be finite".into()));
        }
        Ok(SuperPopulationSpec {
            beta0: beta[0],
            beta1: beta[1],
            beta2: beta[2],
            tau2,
            covariance,
        })
    }

    /// beta = (0, 1, 1), tau2 = 1, sigma2 = 4 at the given range.
    pub fn baseline(esr: f64) -> Result<Self> {
        SuperPopulationSpec::new([0.0, 1.0, 1.0], 1.0, CovarianceSpec::from_esr(4.0, esr)?)
    }

    pub fn with_covariance(mut self, covariance: CovarianceSpec) -> Self {
        self.covariance = covariance;
        self
    }
}

/// Dense covariance over the frame's cell centers.
pub fn build_covariance(frame: &GridFrame, spec: &CovarianceSpec, max_cells: usize) -> Result<Mat<f64>> {
    let n = frame.len();
    if n > max_cells {
        return Err(Error::Capacity {
            cells: n,
            ceiling: max_cells,
        });
    }
    Ok(Mat::from_fn(n, n, |i, j| spec.at(frame.distance_unchecked(i, j))))
}

/// Lower Cholesky factor of a field covariance; draws `L z` on demand.
#[derive(Clone, Debug)]
pub struct FieldFactor {
    lower: Mat<f64>,
    jitter: f64,
}

impl FieldFactor {
    pub fn for_frame(frame: &GridFrame, spec: &CovarianceSpec, max_cells: usize) -> Result<Self> {
        let n = frame.len();
        if n > max_cells {
            return Err(Error::Capacity {
                cells: n,
                ceiling: max_cells,
            });
        }
        Self::factor(n, spec, |i, j| frame.distance_unchecked(i, j))
    }

    pub fn for_points(points: &[Point], spec: &CovarianceSpec, max_cells: usize) -> Result<Self> {
        if points.len() > max_cells {
            return Err(Error::Capacity {
                cells: points.len(),
                ceiling: max_cells,
            });
        }
        Self::factor(points.len(), spec, |i, j| {
            if i == j {
                0.0
            } else {
                points[i].distance(points[j])
            }
        })
    }

    fn factor(n: usize, spec: &CovarianceSpec, distance: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut tried = Vec::new();
        let mut pivot = 0;
        let mut buffer = MemBuffer::new(cholesky_in_place_scratch::<f64>(n, Par::Seq, Default::default()));
        for rel in JITTER_SCHEDULE {
            let jitter = rel * spec.sigma2;
            tried.push(jitter);
            // Only the lower triangle is read by the factorization.
            let mut a = Mat::from_fn(n, n, |i, j| {
                if i > j {
                    spec.at(distance(i, j))
                } else if i == j {
                    spec.sigma2 + jitter
                } else {
                    0.0
                }
            });
            match cholesky_in_place(
                a.as_mut(),
                LltRegularization::default(),
                Par::Seq,
                MemStack::new(&mut buffer),
                Default::default(),
            ) {
                Ok(_) => {
                    for j in 0..n {
                        for v in &mut a.col_as_slice_mut(j)[..j] {
                            *v = 0.0;
                        }
                    }
                    return Ok(FieldFactor { lower: a, jitter });
                }
                Err(faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot { index }) => {
                    pivot = index;
                }
            }
        }
        Err(Error::Factorization {
            pivot,
            jitters: tried,
        })
    }

    pub fn len(&self) -> usize {
        self.lower.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.nrows() == 0
    }

    /// Diagonal jitter that was needed for the factorization to succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn lower(&self) -> &Mat<f64> {
        &self.lower
    }

    /// One draw of `L z` with `z` standard normal from `stream`.
    pub fn draw(&self, stream: &mut Stream) -> Vec<f64> {
        let n = self.len();
        let z: Vec<f64> = (0..n).map(|_| stream.sample(StandardNormal)).collect();
        let mut out = vec![0.0; n];
        for (j, &zj) in z.iter().enumerate() {
            let col = self.lower.col_as_slice(j);
            for i in j..n {
                out[i] += col[i] * zj;
            }
        }
        out
    }
}

/// A single zero-mean field draw over the frame.
pub fn draw_gaussian_field(frame: &GridFrame, spec: &CovarianceSpec, stream: &mut Stream) -> Result<Vec<f64>> {
    Ok(FieldFactor::for_frame(frame, spec, DEFAULT_MAX_DENSE_CELLS)?.draw(stream))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    pub frame: GridFrame,
    pub y: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub spec: SuperPopulationSpec,
    pub seed: u64,
    pub population_index: usize,
}

impl Population {
    /// Builds a population from given vectors (all of length N, finite).
    pub fn from_parts(
        frame: GridFrame,
        y: Vec<f64>,
        x1: Vec<f64>,
        x2: Vec<f64>,
        spec: SuperPopulationSpec,
    ) -> Result<Self> {
        let n = frame.len();
        for (name, v) in [("y", &y), ("x1", &x1), ("x2", &x2)] {
            if v.len() != n {
                return Err(Error::Shape(format!("{name} has length {}, frame has {n} cells", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Domain(format!("{name} contains non-finite values")));
            }
        }
        Ok(Population {
            frame,
            y,
            x1,
            x2,
            spec,
            seed: 0,
            population_index: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// True mean `mu`.
    pub fn mean(&self) -> f64 {
        crate::stats::mean(&self.y)
    }

    pub fn esr(&self) -> f64 {
        self.spec.covariance.esr()
    }

    /// Covariate columns keyed by name, as the estimators expect them.
    pub fn covariates(&self) -> crate::estimators::Covariates {
        crate::estimators::Covariates::new(vec![
            ("x1".to_string(), self.x1.clone()),
            ("x2".to_string(), self.x2.clone()),
        ])
        .expect("population covariates share a length")
    }

    /// Writes `cell_index,row,col,x1,x2,y`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["cell_index", "row", "col", "x1", "x2", "y"])?;
        for i in 0..self.len() {
            let (row, col) = (i / self.frame.n_cols(), i % self.frame.n_cols());
            w.write_record(&[
                i.to_string(),
                row.to_string(),
                col.to_string(),
                self.x1[i].to_string(),
                self.x2[i].to_string(),
                self.y[i].to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("population csv", e))?;
        Ok(())
    }
}

/// Options for population generation.
#[derive(Clone, Copy, Debug)]
pub struct GenerationOptions {
    pub max_dense_cells: usize,
}

impl Default for GenerationOptions {
    fn default() -> Self {
        GenerationOptions {
            max_dense_cells: DEFAULT_MAX_DENSE_CELLS,
        }
    }
}

pub fn generate_population(
    frame: &GridFrame,
    spec: &SuperPopulationSpec,
    master_seed: u64,
    population_index: usize,
) -> Result<Population> {
    generate_population_with(frame, spec, master_seed, population_index, GenerationOptions::default())
}

pub fn generate_population_with(
    frame: &GridFrame,
    spec: &SuperPopulationSpec,
    master_seed: u64,
    population_index: usize,
    options: GenerationOptions,
) -> Result<Population> {
    let factor = FieldFactor::for_frame(frame, &spec.covariance, options.max_dense_cells)?;
    let idx = population_index as u64;
    let x1 = factor.draw(&mut rng::stream(master_seed, &[idx, tag::X1]));
    let x2 = factor.draw(&mut rng::stream(master_seed, &[idx, tag::X2]));
    drop(factor);
    let tau = spec.tau2.sqrt();
    let mut eps_stream = rng::stream(master_seed, &[idx, tag::EPSILON]);
    let y = x1
        .iter()
        .zip(&x2)
        .map(|(a, b)| {
            let e: f64 = eps_stream.sample(StandardNormal);
            spec.beta0 + spec.beta1 * a + spec.beta2 * b + tau * e
        })
        .collect();
    Ok(Population {
        frame: frame.clone(),
        y,
        x1,
        x2,
        spec: *spec,
        seed: master_seed,
        population_index,
    })
}

/// Populations of increasing effective spatial range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderSpec {
    pub esr_start: f64,
    pub esr_end: f64,
    pub count: usize,
    /// When set, sigma2 moves linearly from the base value to this one along
    /// the ladder. Off by default: only the range changes.
    #[serde(default)]
    pub sigma2_end: Option<f64>,
}

impl LadderSpec {
    pub fn new(esr_start: f64, esr_end: f64, count: usize) -> Result<Self> {
        let l = LadderSpec {
            esr_start,
            esr_end,
            count,
            sigma2_end: None,
        };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.esr_start > 0.0 && self.esr_start < self.esr_end && self.esr_end.is_finite()) {
            return Err(Error::Domain(format!(
                "ladder needs 0 < esr_start < esr_end, got {} .. {}",
                self.esr_start, self.esr_end
            )));
        }
        if self.count < 2 {
            return Err(Error::Domain(format!("ladder needs at least 2 populations, got {}", self.count)));
        }
        if let Some(s) = self.sigma2_end {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Domain(format!("sigma2_end must be positive, got {s}")));
            }
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.esr_end - self.esr_start) / (self.count - 1) as f64
    }

    pub fn esr_at(&self, k: usize) -> f64 {
        if k + 1 == self.count {
            self.esr_end
        } else {
            self.esr_start + k as f64 * self.step()
        }
    }

    pub fn spec_at(&self, base: &SuperPopulationSpec, k: usize) -> Result<SuperPopulationSpec> {
        let sigma2 = match self.sigma2_end {
            Some(end) => {
                let t = k as f64 / (self.count - 1) as f64;
                base.covariance.sigma2 + t * (end - base.covariance.sigma2)
            }
            None => base.covariance.sigma2,
        };
        Ok(base.with_covariance(CovarianceSpec::from_esr(sigma2, self.esr_at(k))?))
    }
}

/// Lazily generated ladder; each population is produced on demand.
pub struct PopulationLadder {
    frame: GridFrame,
    base: SuperPopulationSpec,
    ladder: LadderSpec,
    master_seed: u64,
    options: GenerationOptions,
    next: usize,
}

impl PopulationLadder {
    pub fn new(frame: GridFrame, base: SuperPopulationSpec, ladder: LadderSpec, master_seed: u64) -> Result<Self> {
        ladder.validate()?;
        Ok(PopulationLadder {
            frame,
            base,
            ladder,
            master_seed,
            options: GenerationOptions::default(),
            next: 0,
        })
    }

    pub fn with_options(mut self, options: GenerationOptions) -> Self {
        self.options = options;
        self
    }

    pub fn ladder(&self) -> &LadderSpec {
        &self.ladder
    }

    /// Population `k`, independent of any other.
    pub fn get(&self, k: usize) -> Result<Population> {
        if k >= self.ladder.count {
            return Err(Error::Index {
                what: "ladder",
                index: k,
                len: self.ladder.count,
            });
        }
        let spec = self.ladder.spec_at(&self.base, k)?;
        generate_population_with(&self.frame, &spec, self.master_seed, k, self.options)
    }
}

impl Iterator for PopulationLadder {
    type Item = Result<Population>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.ladder.count {
            return None;
        }
        let k = self.next;
        self.next += 1;
        Some(self.get(k))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.ladder.count - self.next;
        (left, Some(left))
    }
}

/// Ladder generation over a fixed set of populations.
pub fn population_ladder(
    frame: &GridFrame,
    base: &SuperPopulationSpec,
    esr_start: f64,
    esr_end: f64,
    count: usize,
    master_seed: u64,
) -> Result<PopulationLadder> {
    PopulationLadder::new(frame.clone(), *base, LadderSpec::new(esr_start, esr_end, count)?, master_seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn esr_phi_conversions() {
        let phi = esr_to_phi(0.03).unwrap();
        assert!((phi - 99.857_742_451_799_7).abs() < 1e-9, "{phi}");
        assert!((esr_to_phi(-0.05f64.ln()).unwrap() - 1.0).abs() < 1e-15);
        assert!((esr_to_phi(1.0).unwrap() - 2.995_732_273_553_991).abs() < 1e-12);
        assert!(esr_to_phi(0.0).is_err());
        assert!(esr_to_phi(-1.0).is_err());
        for esr in [1e-3, 0.03, 0.5, 1.0, 17.0] {
            let back = phi_to_esr(esr_to_phi(esr).unwrap()).unwrap();
            assert!((back - esr).abs() / esr < 1e-12);
        }
    }

    #[test]
    fn covariance_entries() {
        let spec = CovarianceSpec::new(4.0, 100.0).unwrap();
        assert_eq!(spec.at(0.0), 4.0);
        assert!((spec.at(0.01) - 4.0 * (-1.0f64).exp()).abs() < 1e-12);
        assert!((spec.at(0.01) - 1.4715).abs() < 1e-4);
        let exact = CovarianceSpec::from_esr(4.0, 0.03).unwrap();
        assert!((exact.at(0.03) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn covariance_matrix_properties() {
        let f = GridFrame::unit_square(8).unwrap();
        let spec = CovarianceSpec::from_esr(4.0, 0.3).unwrap();
        let s = build_covariance(&f, &spec, 100).unwrap();
        for i in 0..f.len() {
            assert_eq!(s[(i, i)], 4.0);
            for j in 0..f.len() {
                assert_eq!(s[(i, j)], s[(j, i)]);
                assert!(s[(i, j)] > 0.0 && s[(i, j)] <= 4.0);
            }
        }
        assert!(matches!(build_covariance(&f, &spec, 63), Err(Error::Capacity { .. })));
    }

    #[test]
    fn cholesky_reconstructs_sigma() {
        for side in [10, 30, 50] {
            let f = GridFrame::unit_square(side).unwrap();
            let spec = CovarianceSpec::from_esr(4.0, 0.5).unwrap();
            let factor = FieldFactor::for_frame(&f, &spec, DEFAULT_MAX_DENSE_CELLS).unwrap();
            let l = factor.lower();
            let llt = l * l.transpose();
            let sigma = build_covariance(&f, &spec, DEFAULT_MAX_DENSE_CELLS).unwrap();
            let mut worst = 0.0f64;
            for j in 0..f.len() {
                for i in 0..f.len() {
                    worst = worst.max((llt[(i, j)] - sigma[(i, j)]).abs());
                }
            }
            assert!(worst <= 1e-8 * 4.0, "side {side}: {worst}");
        }
    }

    #[test]
    fn degenerate_noiseless_intercept() {
        let f = GridFrame::unit_square(6).unwrap();
        let spec = SuperPopulationSpec::new([5.0, 0.0, 0.0], 0.0, CovarianceSpec::from_esr(4.0, 0.2).unwrap()).unwrap();
        let p = generate_population(&f, &spec, 1, 0).unwrap();
        assert!(p.y.iter().all(|&v| v == 5.0));
        assert_eq!(p.mean(), 5.0);
    }

    #[test]
    fn generation_is_deterministic() {
        let f = GridFrame::unit_square(12).unwrap();
        let spec = SuperPopulationSpec::baseline(0.2).unwrap();
        let a = generate_population(&f, &spec, 42, 3).unwrap();
        let b = generate_population(&f, &spec, 42, 3).unwrap();
        assert_eq!(a, b);
        let c = generate_population(&f, &spec, 42, 4).unwrap();
        assert_ne!(a.x1, c.x1);
    }

    #[test]
    fn ladder_arithmetic() {
        let l = LadderSpec::new(0.03, 1.0, 1000).unwrap();
        assert!((l.step() - 0.000_970_970_97).abs() < 1e-10);
        assert_eq!(l.esr_at(0), 0.03);
        assert_eq!(l.esr_at(999), 1.0);
        let two = LadderSpec::new(0.2, 0.7, 2).unwrap();
        assert_eq!((two.esr_at(0), two.esr_at(1)), (0.2, 0.7));
        let five = LadderSpec::new(0.1, 0.5, 5).unwrap();
        for (k, want) in [0.1, 0.2, 0.3, 0.4, 0.5].iter().enumerate() {
            assert!((five.esr_at(k) - want).abs() < 1e-12);
        }
        assert!(LadderSpec::new(0.5, 0.1, 5).is_err());
        assert!(LadderSpec::new(0.1, 0.5, 1).is_err());
    }

    #[test]
    fn ladder_is_lazy_and_indexable() {
        let f = GridFrame::unit_square(5).unwrap();
        let base = SuperPopulationSpec::baseline(0.1).unwrap();
        let ladder = population_ladder(&f, &base, 0.1, 0.5, 5, 9).unwrap();
        let direct = ladder.get(2).unwrap();
        let pops: Vec<_> = ladder.collect::<Result<_>>().unwrap();
        assert_eq!(pops.len(), 5);
        assert_eq!(pops[2], direct);
        assert!((pops[4].esr() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sigma2_knob_moves_linearly() {
        let base = SuperPopulationSpec::baseline(0.1).unwrap();
        let mut l = LadderSpec::new(0.1, 0.5, 3).unwrap();
        l.sigma2_end = Some(8.0);
        assert_eq!(l.spec_at(&base, 1).unwrap().covariance.sigma2, 6.0);
        l.sigma2_end = None;
        assert_eq!(l.spec_at(&base, 2).unwrap().covariance.sigma2, 4.0);
    }

    #[test]
    fn csv_export_has_header() {
        let f = GridFrame::unit_square(3).unwrap();
        let p = generate_population(&f, &SuperPopulationSpec::baseline(0.2).unwrap(), 1, 0).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("cell_index,row,col,x1,x2,y"));
        assert_eq!(lines.count(), 9);
    }
}
