//! C ABI for the poisdep library.
//!
//! Conventions:
//! - Objects cross the boundary as opaque handles (`PdSeries`, `PdDraws`,
//!   `PdPredictive`) created and freed by `pd_*_new` / `pd_*_free` pairs.
//! - Fallible calls return a [`PdStatus`]; on anything but `Ok` the
//!   thread-local message retrieved by [`pd_last_error`] explains why.
//! - Buffers are caller-allocated; `*_len` / `pd_draws_kept` report the
//!   required capacity.
//!
//! The matching declarations live in `include/poisdep.h`, which is kept in
//! sync by the `header_declares_every_symbol` test (cbindgen.toml is
//! provided for regeneration where cbindgen is available).

use std::cell::RefCell;
use std::ffi::{c_char, CString};

use poisdep::acf::{inar1_acf, type_a_acf, type_b_acf};
use poisdep::assess::{l_measure, posterior_predictive, PredictiveSummary};
use poisdep::dist::RngStream;
use poisdep::inference::{gibbs_run, GibbsConfig, InitStrategy, PosteriorDraws, Priors};
use poisdep::model::{
    CountSeries, DependenceStructure, Inar1Params, ModelKind, TypeAParams, TypeBParams,
};
use poisdep::simulate::{simulate_inar1, simulate_type_a, simulate_type_b};

/// Status codes returned by every fallible `pd_*` call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PdStatus {
    PdOk = 0,
    PdInvalidArgument = 1,
    PdDomainError = 2,
    PdInfeasible = 3,
    PdRuntimeError = 4,
}

/// Model families exposed over the ABI.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PdModelKind {
    PdTypeA = 0,
    PdTypeB = 1,
    PdInar1 = 2,
}

impl From<PdModelKind> for ModelKind {
    fn from(k: PdModelKind) -> ModelKind {
        match k {
            PdModelKind::PdTypeA => ModelKind::TypeA,
            PdModelKind::PdTypeB => ModelKind::TypeB,
            PdModelKind::PdInar1 => ModelKind::Inar1,
        }
    }
}

/// Beta/gamma prior hyperparameters.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct PdPriors {
    pub a_alpha: f64,
    pub b_alpha: f64,
    pub a_mu: f64,
    pub b_mu: f64,
}

/// MCMC settings; `pd_mcmc_config_default` fills the standard protocol
/// (16000 iterations, 1000 burn-in, thin 5, grid 512, tail 1e-12).
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct PdMcmcConfig {
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
    pub stream: u64,
    pub alpha_grid: u64,
    pub tail_tol: f64,
    pub keep_latents: bool,
}

/// Opaque count series handle.
pub struct PdSeries(CountSeries);

/// Opaque posterior draws handle.
pub struct PdDraws(PosteriorDraws);

/// Opaque posterior-predictive summary handle.
pub struct PdPredictive(PredictiveSummary);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl std::fmt::Display) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).unwrap_or_default();
    });
}

fn status_of(err: &poisdep::Error) -> PdStatus {
    match err {
        poisdep::Error::Domain(_) => PdStatus::PdDomainError,
        poisdep::Error::Infeasible(_) => PdStatus::PdInfeasible,
        poisdep::Error::Parse(_) => PdStatus::PdInvalidArgument,
        _ => PdStatus::PdRuntimeError,
    }
}

fn fail(err: poisdep::Error) -> PdStatus {
    let code = status_of(&err);
    set_error(err);
    code
}

fn invalid(msg: &str) -> PdStatus {
    set_error(msg);
    PdStatus::PdInvalidArgument
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pd_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Copy the last error message (NUL-terminated, truncated to `cap`) into
/// `buf`; returns the full message length in bytes without the NUL.
///
/// # Safety
/// `buf` must point to `cap` writable bytes (or be null to query the
/// length).
#[no_mangle]
pub unsafe extern "C" fn pd_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

#[no_mangle]
pub extern "C" fn pd_priors_default() -> PdPriors {
    PdPriors { a_alpha: 0.01, b_alpha: 0.01, a_mu: 0.01, b_mu: 0.01 }
}

#[no_mangle]
pub extern "C" fn pd_mcmc_config_default() -> PdMcmcConfig {
    PdMcmcConfig {
        iterations: 16_000,
        burn_in: 1_000,
        thin: 5,
        seed: 0,
        stream: 0,
        alpha_grid: 512,
        tail_tol: 1e-12,
        keep_latents: true,
    }
}

/// Wrap `len` observed counts into a series handle.
///
/// # Safety
/// `counts` must point to `len` readable u64 values; `out` must be a valid
/// pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn pd_series_new(
    counts: *const u64,
    len: usize,
    out: *mut *mut PdSeries,
) -> PdStatus {
    if counts.is_null() || out.is_null() || len == 0 {
        return invalid("pd_series_new: null pointer or empty series");
    }
    let slice = std::slice::from_raw_parts(counts, len);
    match CountSeries::from_counts("series", slice.to_vec()) {
        Ok(series) => {
            *out = Box::into_raw(Box::new(PdSeries(series)));
            PdStatus::PdOk
        }
        Err(e) => fail(e),
    }
}

/// # Safety
/// `s` must be a handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn pd_series_free(s: *mut PdSeries) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` must be a live series handle.
#[no_mangle]
pub unsafe extern "C" fn pd_series_len(s: *const PdSeries) -> usize {
    if s.is_null() {
        return 0;
    }
    (*s).0.len()
}

/// Copy the counts into a caller buffer of capacity `cap`.
///
/// # Safety
/// `s` must be a live handle and `out` must hold `cap` u64 slots.
#[no_mangle]
pub unsafe extern "C" fn pd_series_counts(
    s: *const PdSeries,
    out: *mut u64,
    cap: usize,
) -> PdStatus {
    if s.is_null() || out.is_null() {
        return invalid("pd_series_counts: null pointer");
    }
    let x = &(*s).0.x;
    if cap < x.len() {
        return invalid("pd_series_counts: buffer too small");
    }
    std::ptr::copy_nonoverlapping(x.as_ptr(), out, x.len());
    PdStatus::PdOk
}

/// Simulate a contiguous order-p series and return it as a new handle.
///
/// `alpha` holds either one stationary value (`alpha_len == 1`) or one
/// value per index (`alpha_len == len`). `w_divisor == 0` means the
/// default p+1. For INAR(1), `p` and `w_divisor` are ignored and `alpha`
/// must hold a single value.
///
/// # Safety
/// `alpha` must point to `alpha_len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pd_simulate(
    kind: PdModelKind,
    mu: f64,
    alpha: *const f64,
    alpha_len: usize,
    p: usize,
    len: usize,
    w_divisor: usize,
    seed: u64,
    stream: u64,
    out: *mut *mut PdSeries,
) -> PdStatus {
    if alpha.is_null() || out.is_null() || alpha_len == 0 || len == 0 {
        return invalid("pd_simulate: null pointer or empty inputs");
    }
    let alphas = std::slice::from_raw_parts(alpha, alpha_len);
    let alpha_vec = if alpha_len == 1 {
        vec![alphas[0]; len]
    } else if alpha_len == len {
        alphas.to_vec()
    } else {
        return invalid("pd_simulate: alpha_len must be 1 or len");
    };
    let mut rng = RngStream::new(seed, stream);
    let sim = match ModelKind::from(kind) {
        ModelKind::TypeA => DependenceStructure::order_p(len, p)
            .and_then(|s| simulate_type_a(&TypeAParams::new(mu, alpha_vec), &s, &mut rng)),
        ModelKind::TypeB => {
            let divisor = if w_divisor == 0 { p + 1 } else { w_divisor };
            DependenceStructure::order_p(len, p).and_then(|s| {
                simulate_type_b(&TypeBParams::new(mu, alpha_vec, divisor), &s, &mut rng)
            })
        }
        ModelKind::Inar1 => simulate_inar1(&Inar1Params::new(mu, alphas[0]), len, &mut rng),
    };
    match sim {
        Ok(sim) => {
            *out = Box::into_raw(Box::new(PdSeries(sim.x)));
            PdStatus::PdOk
        }
        Err(e) => fail(e),
    }
}

/// Run the Gibbs sampler and return a draws handle.
///
/// # Safety
/// `series` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pd_fit(
    kind: PdModelKind,
    series: *const PdSeries,
    p: usize,
    priors: PdPriors,
    config: PdMcmcConfig,
    out: *mut *mut PdDraws,
) -> PdStatus {
    if series.is_null() || out.is_null() {
        return invalid("pd_fit: null pointer");
    }
    let priors = Priors {
        a_alpha: priors.a_alpha,
        b_alpha: priors.b_alpha,
        a_mu: priors.a_mu,
        b_mu: priors.b_mu,
    };
    let cfg = GibbsConfig {
        iterations: config.iterations as usize,
        burn_in: config.burn_in as usize,
        thin: config.thin.max(1) as usize,
        seed: config.seed,
        stream: config.stream,
        alpha_grid_n: config.alpha_grid as usize,
        w_tail_tol: config.tail_tol,
        init: InitStrategy::Moments,
        keep_latents: config.keep_latents,
    };
    match gibbs_run(ModelKind::from(kind), &(*series).0, p, &priors, &cfg) {
        Ok(draws) => {
            *out = Box::into_raw(Box::new(PdDraws(draws)));
            PdStatus::PdOk
        }
        Err(e) => fail(e),
    }
}

/// # Safety
/// `d` must be a handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn pd_draws_free(d: *mut PdDraws) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Number of kept draws.
///
/// # Safety
/// `d` must be a live draws handle.
#[no_mangle]
pub unsafe extern "C" fn pd_draws_kept(d: *const PdDraws) -> usize {
    if d.is_null() {
        return 0;
    }
    (*d).0.kept()
}

/// Copy the kept mu draws into a caller buffer.
///
/// # Safety
/// `d` must be live; `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn pd_draws_mu(d: *const PdDraws, out: *mut f64, cap: usize) -> PdStatus {
    if d.is_null() || out.is_null() {
        return invalid("pd_draws_mu: null pointer");
    }
    let mu = &(*d).0.mu;
    if cap < mu.len() {
        return invalid("pd_draws_mu: buffer too small");
    }
    std::ptr::copy_nonoverlapping(mu.as_ptr(), out, mu.len());
    PdStatus::PdOk
}

/// Posterior mean of mu.
///
/// # Safety
/// `d` must be a live draws handle.
#[no_mangle]
pub unsafe extern "C" fn pd_draws_mu_mean(d: *const PdDraws) -> f64 {
    if d.is_null() {
        return f64::NAN;
    }
    (*d).0.posterior_mean_mu()
}

/// Copy the per-index posterior means of alpha (length = series length;
/// length 1 for INAR(1)).
///
/// # Safety
/// `d` must be live; `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn pd_draws_alpha_mean(
    d: *const PdDraws,
    out: *mut f64,
    cap: usize,
) -> PdStatus {
    if d.is_null() || out.is_null() {
        return invalid("pd_draws_alpha_mean: null pointer");
    }
    let means = (*d).0.posterior_mean_alpha();
    if cap < means.len() {
        return invalid("pd_draws_alpha_mean: buffer too small");
    }
    std::ptr::copy_nonoverlapping(means.as_ptr(), out, means.len());
    PdStatus::PdOk
}

/// Posterior-predictive summary for a fitted series.
///
/// # Safety
/// `draws` and `series` must be live handles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pd_posterior_predictive(
    draws: *const PdDraws,
    series: *const PdSeries,
    level: f64,
    seed: u64,
    stream: u64,
    out: *mut *mut PdPredictive,
) -> PdStatus {
    if draws.is_null() || series.is_null() || out.is_null() {
        return invalid("pd_posterior_predictive: null pointer");
    }
    let mut rng = RngStream::new(seed, stream);
    match posterior_predictive(&(*draws).0, &(*series).0, level, &mut rng) {
        Ok(pred) => {
            *out = Box::into_raw(Box::new(PdPredictive(pred)));
            PdStatus::PdOk
        }
        Err(e) => fail(e),
    }
}

/// # Safety
/// `p` must be a handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn pd_predictive_free(p: *mut PdPredictive) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Copy the per-index predictive means and variances.
///
/// # Safety
/// `pred` must be live; `mean_out`/`var_out` must each hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn pd_predictive_moments(
    pred: *const PdPredictive,
    mean_out: *mut f64,
    var_out: *mut f64,
    cap: usize,
) -> PdStatus {
    if pred.is_null() || mean_out.is_null() || var_out.is_null() {
        return invalid("pd_predictive_moments: null pointer");
    }
    let p = &(*pred).0;
    if cap < p.len() {
        return invalid("pd_predictive_moments: buffer too small");
    }
    std::ptr::copy_nonoverlapping(p.mean.as_ptr(), mean_out, p.len());
    std::ptr::copy_nonoverlapping(p.var.as_ptr(), var_out, p.len());
    PdStatus::PdOk
}

/// L(nu) for a predictive summary against the observed series.
///
/// # Safety
/// `pred` and `series` must be live handles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pd_l_measure(
    pred: *const PdPredictive,
    series: *const PdSeries,
    nu: f64,
    out: *mut f64,
) -> PdStatus {
    if pred.is_null() || series.is_null() || out.is_null() {
        return invalid("pd_l_measure: null pointer");
    }
    match l_measure(&(*pred).0, &(*series).0, nu) {
        Ok(l) => {
            *out = l;
            PdStatus::PdOk
        }
        Err(e) => fail(e),
    }
}

/// Theoretical type A autocorrelation at (t, s).
///
/// # Safety
/// `alpha` must point to `alpha_len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pd_acf_type_a(
    alpha: *const f64,
    alpha_len: usize,
    p: usize,
    t: usize,
    s: usize,
    out: *mut f64,
) -> PdStatus {
    if alpha.is_null() || out.is_null() {
        return invalid("pd_acf_type_a: null pointer");
    }
    let params = TypeAParams::new(1.0, std::slice::from_raw_parts(alpha, alpha_len).to_vec());
    match type_a_acf(&params, p, t, s) {
        Ok(v) => {
            *out = v;
            PdStatus::PdOk
        }
        Err(e) => fail(e),
    }
}

/// Theoretical type B autocorrelation at (t, s).
///
/// # Safety
/// `alpha` must point to `alpha_len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pd_acf_type_b(
    alpha: *const f64,
    alpha_len: usize,
    p: usize,
    t: usize,
    s: usize,
    out: *mut f64,
) -> PdStatus {
    if alpha.is_null() || out.is_null() {
        return invalid("pd_acf_type_b: null pointer");
    }
    let params =
        TypeBParams::new(1.0, std::slice::from_raw_parts(alpha, alpha_len).to_vec(), p + 1);
    match type_b_acf(&params, p, t, s) {
        Ok(v) => {
            *out = v;
            PdStatus::PdOk
        }
        Err(e) => fail(e),
    }
}

/// INAR(1) autocorrelation alpha^s.
#[no_mangle]
pub extern "C" fn pd_acf_inar1(alpha: f64, s: usize) -> f64 {
    inar1_acf(&Inar1Params::new(1.0, alpha), s)
}
