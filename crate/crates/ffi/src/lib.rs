//! C interface to `sysvar`.
//!
//! Every function returns an [`SvStatus`]; on failure the message is kept per
//! thread and can be copied out with [`sv_last_error`]. Handles are opaque and
//! must be released with their `_free` function. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sysvar::designs::{self, SystematicLayout};
use sysvar::estimators::{EstimatorOptions, EstimatorTag, PreparedEstimator};
use sysvar::frame::{GridFrame, Point};
use sysvar::gaussfield::{self, CovarianceSpec, GenerationOptions, Population, SuperPopulationSpec};
use sysvar::montecarlo::{self, DesignSpec, StudyConfig};
use sysvar::{rng, variogram, Error};

/// Result code of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    Capacity = 4,
    Factorization = 5,
    Design = 6,
    Collinearity = 7,
    InsufficientSample = 8,
    UndefinedBias = 9,
    Fit = 10,
    Numerical = 11,
    Panic = 99,
}

/// Estimator selector.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SvEstimator {
    Ht = 0,
    Greg1 = 1,
    Greg2 = 2,
}

impl From<SvEstimator> for EstimatorTag {
    fn from(e: SvEstimator) -> Self {
        match e {
            SvEstimator::Ht => EstimatorTag::Ht,
            SvEstimator::Greg1 => EstimatorTag::Greg1,
            SvEstimator::Greg2 => EstimatorTag::Greg2,
        }
    }
}

/// Point estimate and its variance estimate.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SvEstimate {
    pub mu_hat: f64,
    pub var_hat: f64,
}

/// Exponential semivariogram fit.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SvExponentialFit {
    pub nugget: f64,
    pub partial_sill: f64,
    pub phi: f64,
    pub esr: f64,
    /// Nonzero when the range sits on the search bound.
    pub at_lower_bound: i32,
}

/// Repeated-sampling summary for one population, design and estimator.
/// Confidence limits are NaN when no interval could be formed.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SvCellSummary {
    pub replicates: usize,
    pub true_mu: f64,
    pub mean_mu_hat: f64,
    pub empirical_variance: f64,
    pub empirical_ci_lo: f64,
    pub empirical_ci_hi: f64,
    pub mean_estimated_variance: f64,
    pub mean_estimated_ci_lo: f64,
    pub mean_estimated_ci_hi: f64,
    /// NaN when the empirical variance is zero.
    pub percent_bias: f64,
}

/// Grid sampling frame.
pub struct SvFrame(GridFrame);

/// Finite population with its two auxiliary variables.
pub struct SvPopulation(Population);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> SvStatus {
    match e {
        Error::Capacity { .. } => SvStatus::Capacity,
        Error::Factorization { .. } => SvStatus::Factorization,
        Error::Design(_) | Error::Layout(_) | Error::Packing { .. } => SvStatus::Design,
        Error::Collinearity { .. } => SvStatus::Collinearity,
        Error::InsufficientSample { .. } | Error::InsufficientData(_) => SvStatus::InsufficientSample,
        Error::UndefinedBias(_) => SvStatus::UndefinedBias,
        Error::Fit(_) => SvStatus::Fit,
        Error::Transform(_) => SvStatus::Numerical,
        _ => SvStatus::InvalidArgument,
    }
}

enum Fail {
    Null(&'static str),
    Small(usize, usize),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SvStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            SvStatus::NullPointer
        }
        Ok(Err(Fail::Small(need, have))) => {
            set_error(format!("buffer holds {have} values, {need} needed"));
            SvStatus::BufferTooSmall
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            SvStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn fill<T: Copy>(dst: *mut T, cap: usize, src: &[T], what: &'static str) -> Result<(), Fail> {
    if src.len() > cap {
        return Err(Fail::Small(src.len(), cap));
    }
    if src.is_empty() {
        return Ok(());
    }
    if dst.is_null() {
        return Err(Fail::Null(what));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sv_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `cap > 0`). Returns the full message length
/// excluding the terminator.
///
/// # Safety
/// `buf` must be valid for `cap` bytes or null when `cap` is 0.
#[no_mangle]
pub unsafe extern "C" fn sv_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if cap > 0 && !buf.is_null() {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates an `n_cols x n_rows` frame of square cells with its origin at 0.
///
/// # Safety
/// `out_frame` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn sv_frame_new(n_cols: usize, n_rows: usize, cell_side: f64, out_frame: *mut *mut SvFrame) -> SvStatus {
    guard(|| {
        let slot = out(out_frame, "out_frame")?;
        let f = GridFrame::new(n_cols, n_rows, cell_side, Point::new(0.0, 0.0))?;
        *slot = Box::into_raw(Box::new(SvFrame(f)));
        Ok(())
    })
}

/// # Safety
/// `frame` must come from `sv_frame_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sv_frame_free(frame: *mut SvFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}

/// Number of cells in the frame, 0 for a null handle.
///
/// # Safety
/// `frame` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sv_frame_len(frame: *const SvFrame) -> usize {
    frame.as_ref().map_or(0, |f| f.0.len())
}

/// Draws population `index` of the seeded series: two exponential-covariance
/// fields with the given variance and effective spatial range, and
/// `y = beta[0] + beta[1] x1 + beta[2] x2 + e` with `e ~ N(0, tau2)`.
///
/// # Safety
/// `frame` must be live, `beta` must point at 3 values and `out_population`
/// at a handle slot.
#[no_mangle]
pub unsafe extern "C" fn sv_population_generate(
    frame: *const SvFrame,
    beta: *const f64,
    tau2: f64,
    sigma2: f64,
    esr: f64,
    master_seed: u64,
    index: usize,
    out_population: *mut *mut SvPopulation,
) -> SvStatus {
    guard(|| {
        let f = deref(frame, "frame")?;
        let b = slice(beta, 3, "beta")?;
        let slot = out(out_population, "out_population")?;
        let spec = SuperPopulationSpec::new([b[0], b[1], b[2]], tau2, CovarianceSpec::from_esr(sigma2, esr)?)?;
        let pop = gaussfield::generate_population_with(&f.0, &spec, master_seed, index, GenerationOptions::default())?;
        *slot = Box::into_raw(Box::new(SvPopulation(pop)));
        Ok(())
    })
}

/// # Safety
/// `population` must come from `sv_population_generate` and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn sv_population_free(population: *mut SvPopulation) {
    if !population.is_null() {
        drop(Box::from_raw(population));
    }
}

/// Population size and mean of the response.
///
/// # Safety
/// `population` must be live; the out pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn sv_population_info(population: *const SvPopulation, out_len: *mut usize, out_mean: *mut f64) -> SvStatus {
    guard(|| {
        let p = deref(population, "population")?;
        if let Some(l) = out_len.as_mut() {
            *l = p.0.len();
        }
        if let Some(m) = out_mean.as_mut() {
            *m = p.0.mean();
        }
        Ok(())
    })
}

/// Copies `y`, `x1` and `x2` in row-major cell order. Any of the buffers may
/// be null to skip it; each non-null one must hold `cap` values.
///
/// # Safety
/// Non-null buffers must be valid for `cap` writes.
#[no_mangle]
pub unsafe extern "C" fn sv_population_copy(
    population: *const SvPopulation,
    y: *mut f64,
    x1: *mut f64,
    x2: *mut f64,
    cap: usize,
) -> SvStatus {
    guard(|| {
        let p = &deref(population, "population")?.0;
        for (dst, src) in [(y, &p.y), (x1, &p.x1), (x2, &p.x2)] {
            if !dst.is_null() {
                fill(dst, cap, src, "buffer")?;
            }
        }
        Ok(())
    })
}

/// Simple random sample of `n` cells without replacement, sorted. The draw is
/// a pure function of `(seed, key)`.
///
/// # Safety
/// `out_indices` must hold `cap >= n` values.
#[no_mangle]
pub unsafe extern "C" fn sv_srs_draw(
    frame: *const SvFrame,
    n: usize,
    seed: u64,
    key: u64,
    out_indices: *mut usize,
    cap: usize,
) -> SvStatus {
    guard(|| {
        let f = deref(frame, "frame")?;
        let mut s = rng::stream(seed, &[rng::tag::SRS, key]);
        let draw = designs::srs_draw(&f.0, n, &mut s)?;
        let mut cells = draw.cells().unwrap_or(&[]).to_vec();
        cells.sort_unstable();
        fill(out_indices, cap, &cells, "out_indices")
    })
}

fn layout(f: &SvFrame, k_cols: usize, k_rows: usize) -> Result<SystematicLayout, Fail> {
    Ok(designs::systematic_layout(&f.0, k_cols, k_rows)?)
}

/// Number of distinct starts of a `k_cols x k_rows` systematic layout.
///
/// # Safety
/// `frame` must be live and `out_starts` valid.
#[no_mangle]
pub unsafe extern "C" fn sv_systematic_num_starts(
    frame: *const SvFrame,
    k_cols: usize,
    k_rows: usize,
    out_starts: *mut usize,
) -> SvStatus {
    guard(|| {
        let l = layout(deref(frame, "frame")?, k_cols, k_rows)?;
        *out(out_starts, "out_starts")? = l.num_starts();
        Ok(())
    })
}

/// Cells of systematic sample `start` (in `0..num_starts`), sorted.
///
/// # Safety
/// `out_indices` must hold `cap >= k_cols * k_rows` values.
#[no_mangle]
pub unsafe extern "C" fn sv_systematic_draw(
    frame: *const SvFrame,
    k_cols: usize,
    k_rows: usize,
    start: usize,
    out_indices: *mut usize,
    cap: usize,
) -> SvStatus {
    guard(|| {
        let l = layout(deref(frame, "frame")?, k_cols, k_rows)?;
        let draw = l.draw(start)?;
        fill(out_indices, cap, draw.cells().unwrap_or(&[]), "out_indices")
    })
}

/// Mean estimate and variance estimate from the sample `indices` of a
/// population. `fpc` nonzero applies the finite population correction.
///
/// # Safety
/// `indices` must hold `n` values and `out_estimate` be valid.
#[no_mangle]
pub unsafe extern "C" fn sv_estimate(
    population: *const SvPopulation,
    estimator: SvEstimator,
    indices: *const usize,
    n: usize,
    fpc: i32,
    out_estimate: *mut SvEstimate,
) -> SvStatus {
    guard(|| {
        let p = &deref(population, "population")?.0;
        let idx = slice(indices, n, "indices")?;
        let slot = out(out_estimate, "out_estimate")?;
        if let Some(&bad) = idx.iter().find(|&&i| i >= p.len()) {
            return Err(Error::Index {
                what: "population",
                index: bad,
                len: p.len(),
            }
            .into());
        }
        let cov = p.covariates();
        let options = EstimatorOptions {
            finite_population_correction: fpc != 0,
        };
        let est = PreparedEstimator::new(estimator.into(), &cov, options)?;
        let y_s: Vec<f64> = idx.iter().map(|&i| p.y[i]).collect();
        let rec = est.estimate(&y_s, &cov.select(idx))?;
        *slot = SvEstimate {
            mu_hat: rec.mu_hat,
            var_hat: rec.var_hat,
        };
        Ok(())
    })
}

/// `100 (mean_estimated - empirical) / empirical`; fails with
/// `UndefinedBias` when `empirical <= 0`.
///
/// # Safety
/// `out_bias` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sv_percent_bias(mean_estimated: f64, empirical: f64, out_bias: *mut f64) -> SvStatus {
    guard(|| {
        let slot = out(out_bias, "out_bias")?;
        *slot = montecarlo::percent_bias(mean_estimated, empirical)?;
        Ok(())
    })
}

/// Binned semivariogram of `n` located values and its exponential fit.
/// `max_lag <= 0` uses half the largest pairwise distance.
///
/// # Safety
/// `x`, `y` and `values` must each hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn sv_fit_exponential(
    x: *const f64,
    y: *const f64,
    values: *const f64,
    n: usize,
    bins: usize,
    max_lag: f64,
    out_fit: *mut SvExponentialFit,
) -> SvStatus {
    guard(|| {
        let xs = slice(x, n, "x")?;
        let ys = slice(y, n, "y")?;
        let vs = slice(values, n, "values")?;
        let slot = out(out_fit, "out_fit")?;
        let points: Vec<Point> = xs.iter().zip(ys).map(|(&a, &b)| Point::new(a, b)).collect();
        let lag = if max_lag > 0.0 { max_lag } else { variogram::default_max_lag(&points) };
        let v = variogram::empirical_semivariogram(&points, vs, bins, lag)?;
        let f = variogram::fit_exponential(&v)?;
        *slot = SvExponentialFit {
            nugget: f.nugget,
            partial_sill: f.partial_sill,
            phi: f.phi,
            esr: f.esr,
            at_lower_bound: i32::from(f.at_lower_bound),
        };
        Ok(())
    })
}

/// Repeated sampling of one population under one design for one estimator.
/// `k_rows == 0` selects simple random sampling of `n = k_cols` cells with
/// `replications` draws; otherwise a `k_cols x k_rows` systematic design with
/// every start enumerated. Intervals use `bootstrap_b` resamples at 95%.
///
/// # Safety
/// `population` must be live and `out_summary` valid.
#[no_mangle]
pub unsafe extern "C" fn sv_run_cell(
    population: *const SvPopulation,
    k_cols: usize,
    k_rows: usize,
    estimator: SvEstimator,
    master_seed: u64,
    replications: usize,
    bootstrap_b: usize,
    out_summary: *mut SvCellSummary,
) -> SvStatus {
    guard(|| {
        let p = &deref(population, "population")?.0;
        let slot = out(out_summary, "out_summary")?;
        let design = if k_rows == 0 {
            DesignSpec::srs(k_cols)
        } else {
            DesignSpec::sys(k_cols, k_rows)
        };
        let config = StudyConfig {
            replications,
            master_seed,
            bootstrap_b,
            ..StudyConfig::default()
        };
        config.validate()?;
        let cell = montecarlo::run_cell(p, &design, &[estimator.into()], &config)?;
        let s = &cell.summaries[0];
        let (elo, ehi) = s.ci_empirical.unwrap_or((f64::NAN, f64::NAN));
        let (mlo, mhi) = s.ci_mean_estimated.unwrap_or((f64::NAN, f64::NAN));
        *slot = SvCellSummary {
            replicates: s.replicates,
            true_mu: s.true_mu,
            mean_mu_hat: s.mean_of_mu_hat,
            empirical_variance: s.empirical_variance,
            empirical_ci_lo: elo,
            empirical_ci_hi: ehi,
            mean_estimated_variance: s.mean_estimated_variance,
            mean_estimated_ci_lo: mlo,
            mean_estimated_ci_hi: mhi,
            percent_bias: s.percent_bias.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}
