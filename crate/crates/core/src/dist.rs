//! Deterministic, seedable sampling primitives and log-mass evaluation.
//!
//! Everything here works in log space: discrete conditionals are carried
//! around as unnormalized log-weights and normalized by max-subtraction,
//! which keeps long factorial products finite. All samplers are pure
//! functions of (parameters, RNG state), so a replayed [`RngStream`]
//! reproduces every draw bit for bit.

use once_cell::sync::Lazy;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Distribution, Gamma, Poisson};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Maximum number of support points enumerated by
/// [`sample_unbounded_logweights`] before giving up.
const MAX_TAIL_SPAN: u64 = 1_000_000;

/// A reproducible random stream identified by `(seed, stream)`.
///
/// Identical `(seed, stream)` pairs yield identical draw sequences across
/// runs and platforms; distinct stream ids index independent ChaCha streams
/// that share no state. A single stream must be used from one logical
/// thread at a time; concurrent work should derive one stream per job.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A fresh stream with the same seed and a stream id derived from
    /// `(self.stream, salt)`. Used to fan out independent jobs.
    pub fn substream(&self, salt: u64) -> RngStream {
        RngStream::new(self.seed, derive_stream(&[self.stream, salt]))
    }

    fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix an ordered tuple of ids into a single stream id.
///
/// Order-sensitive, so `(series, kind, p)` tuples land on distinct streams.
pub fn derive_stream(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0xD6E8_FEB8_6659_FD93, |acc, &p| splitmix64(acc ^ p))
}

// ---------------------------------------------------------------------------
// log-mass evaluation
// ---------------------------------------------------------------------------

static LN_FACTORIAL_TABLE: Lazy<Vec<f64>> = Lazy::new(|| {
    // Kahan-compensated cumulative sum of ln(k); exact enough that the
    // Poisson normalization test holds to 1e-12.
    let mut table = vec![0.0f64; 4096];
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for (k, slot) in table.iter_mut().enumerate().skip(1) {
        let y = (k as f64).ln() - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
        *slot = sum;
    }
    table
});

/// ln(k!) via a precomputed table, falling back to `ln_gamma(k + 1)`.
pub fn ln_factorial(k: u64) -> f64 {
    match LN_FACTORIAL_TABLE.get(k as usize) {
        Some(&v) => v,
        None => ln_gamma(k as f64 + 1.0),
    }
}

/// ln C(n, k) for 0 <= k <= n.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Poisson log-mass: `k ln(mu) - mu - ln(k!)`.
pub fn pois_logpmf(k: u64, mu: f64) -> Result<f64> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::domain(format!("pois_logpmf: mu must be positive, got {mu}")));
    }
    Ok(k as f64 * mu.ln() - mu - ln_factorial(k))
}

/// Binomial log-mass: `ln C(n,k) + k ln(a) + (n-k) ln(1-a)`.
///
/// Boundary probabilities a in {0, 1} degenerate to point masses at k = 0
/// and k = n respectively.
pub fn binom_logpmf(k: u64, n: u64, a: f64) -> Result<f64> {
    if k > n {
        return Err(Error::domain(format!("binom_logpmf: k={k} exceeds n={n}")));
    }
    if !(a.is_finite() && (0.0..=1.0).contains(&a)) {
        return Err(Error::domain(format!("binom_logpmf: a must be in [0,1], got {a}")));
    }
    if a == 0.0 {
        return Ok(if k == 0 { 0.0 } else { f64::NEG_INFINITY });
    }
    if a == 1.0 {
        return Ok(if k == n { 0.0 } else { f64::NEG_INFINITY });
    }
    Ok(ln_choose(n, k) + k as f64 * a.ln() + (n - k) as f64 * (1.0 - a).ln())
}

// ---------------------------------------------------------------------------
// elementary samplers
// ---------------------------------------------------------------------------

/// Poisson draw. `mu = 0` is accepted as the degenerate mass at zero.
pub fn sample_poisson(mu: f64, rng: &mut RngStream) -> Result<u64> {
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(Error::domain(format!("sample_poisson: mu must be nonnegative, got {mu}")));
    }
    if mu == 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mu).map_err(|e| Error::domain(format!("sample_poisson: {e}")))?;
    let v: f64 = d.sample(rng);
    Ok(v as u64)
}

/// Binomial draw on n trials with success probability a.
pub fn sample_binomial(n: u64, a: f64, rng: &mut RngStream) -> Result<u64> {
    if !(a.is_finite() && (0.0..=1.0).contains(&a)) {
        return Err(Error::domain(format!("sample_binomial: a must be in [0,1], got {a}")));
    }
    if n == 0 {
        return Ok(0);
    }
    let d = Binomial::new(n, a).map_err(|e| Error::domain(format!("sample_binomial: {e}")))?;
    Ok(d.sample(rng))
}

/// Beta draw, clamped into the open interval (0, 1).
pub fn sample_beta(a: f64, b: f64, rng: &mut RngStream) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
        return Err(Error::domain(format!("sample_beta: parameters must be positive, got ({a}, {b})")));
    }
    let d = Beta::new(a, b).map_err(|e| Error::domain(format!("sample_beta: {e}")))?;
    let v: f64 = d.sample(rng);
    Ok(v.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
}

/// Gamma draw in shape/rate parameterization.
///
/// Valid down to very small shapes (the 0.01 prior hyperparameters used for
/// count models); the underlying boost method handles shape < 1 and the
/// result is clamped away from exact zero on underflow.
pub fn sample_gamma(shape: f64, rate: f64, rng: &mut RngStream) -> Result<f64> {
    if !(shape.is_finite() && rate.is_finite() && shape > 0.0 && rate > 0.0) {
        return Err(Error::domain(format!(
            "sample_gamma: shape and rate must be positive, got ({shape}, {rate})"
        )));
    }
    let d = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::domain(format!("sample_gamma: {e}")))?;
    let v: f64 = d.sample(rng);
    Ok(v.max(f64::MIN_POSITIVE))
}

// ---------------------------------------------------------------------------
// log-weight tables
// ---------------------------------------------------------------------------

/// Unnormalized log-weights over a contiguous integer support.
#[derive(Clone, Debug)]
pub struct LogWeightTable {
    lo: i64,
    logw: Vec<f64>,
}

impl LogWeightTable {
    /// Requires at least one finite entry; +inf and NaN are rejected.
    pub fn new(lo: i64, logw: Vec<f64>) -> Result<Self> {
        if logw.is_empty() {
            return Err(Error::infeasible("log-weight table has empty support"));
        }
        if logw.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
            return Err(Error::domain("log-weight table contains NaN or +inf"));
        }
        if !logw.iter().any(|w| w.is_finite()) {
            return Err(Error::infeasible("log-weight table has no finite entry"));
        }
        Ok(LogWeightTable { lo, logw })
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn len(&self) -> usize {
        self.logw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logw.is_empty()
    }
}

fn inverse_cdf_index(logw: &[f64], rng: &mut RngStream) -> usize {
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for &lw in logw {
        if lw.is_finite() {
            total += (lw - max).exp();
        }
    }
    let target = rng.uniform() * total;
    let mut acc = 0.0;
    let mut last_finite = 0;
    for (i, &lw) in logw.iter().enumerate() {
        if lw.is_finite() {
            acc += (lw - max).exp();
            last_finite = i;
            if acc >= target {
                return i;
            }
        }
    }
    last_finite
}

/// Exact inverse-CDF draw from a finite log-weight table.
pub fn sample_finite_logweights(table: &LogWeightTable, rng: &mut RngStream) -> i64 {
    table.lo + inverse_cdf_index(&table.logw, rng) as i64
}

/// Result of an adaptive-truncation draw over an unbounded support.
#[derive(Clone, Copy, Debug)]
pub struct TailDraw {
    pub value: u64,
    /// Largest support point enumerated before the tail bound fired.
    pub truncated_at: u64,
}

/// Draw from unnormalized log-weights on `{lower, lower+1, ...}`.
///
/// Weights are enumerated upward until a geometric majorant built from the
/// last successive ratio bounds the remaining tail below
/// `tail_tol x accumulated mass`; the draw is then exact on the enumerated
/// range. Assumes the weights eventually decay faster than any geometric
/// ratio (a `1/k!` factor guarantees this and also makes the successive
/// ratios non-increasing past the mode, which is what validates the bound).
pub fn sample_unbounded_logweights<F>(
    logw_fn: F,
    lower: u64,
    tail_tol: f64,
    rng: &mut RngStream,
) -> Result<TailDraw>
where
    F: Fn(u64) -> f64,
{
    if !(tail_tol.is_finite() && tail_tol > 0.0) {
        return Err(Error::domain(format!("tail_tol must be positive, got {tail_tol}")));
    }
    let ln_tol = tail_tol.ln();
    let mut logw: Vec<f64> = Vec::with_capacity(64);
    let mut log_mass = f64::NEG_INFINITY;
    loop {
        let k = lower + logw.len() as u64;
        let lw = logw_fn(k);
        if lw.is_nan() || lw == f64::INFINITY {
            return Err(Error::domain(format!("log-weight at {k} is {lw}")));
        }
        // A -inf after finite mass is treated as the end of the support.
        if lw == f64::NEG_INFINITY && log_mass > f64::NEG_INFINITY {
            break;
        }
        logw.push(lw);
        log_mass = log_add(log_mass, lw);
        if logw.len() >= 2 {
            let prev = logw[logw.len() - 2];
            if lw.is_finite() && prev.is_finite() && lw < prev {
                let ratio = (lw - prev).exp();
                let log_tail = lw + (ratio / (1.0 - ratio)).ln();
                if log_tail < ln_tol + log_mass {
                    break;
                }
            }
        }
        if logw.len() as u64 >= MAX_TAIL_SPAN {
            return Err(Error::infeasible(format!(
                "unbounded sampler found no tail bound within {MAX_TAIL_SPAN} points from {lower}"
            )));
        }
    }
    if !logw.iter().any(|w| w.is_finite()) {
        return Err(Error::infeasible(format!(
            "no finite log-weight at or above {lower}"
        )));
    }
    let idx = inverse_cdf_index(&logw, rng);
    Ok(TailDraw {
        value: lower + idx as u64,
        truncated_at: lower + (logw.len() - 1) as u64,
    })
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Griddy-Gibbs draw from a univariate log-density on `(lo, hi)`.
///
/// Evaluates the log-density at `grid_n` midpoints of equal cells, picks a
/// cell by its normalized mass, then places the draw uniformly inside it.
pub fn sample_grid_density<F>(
    logpdf: F,
    lo: f64,
    hi: f64,
    grid_n: usize,
    rng: &mut RngStream,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::domain(format!("grid interval ({lo}, {hi}) is invalid")));
    }
    if grid_n < 1 {
        return Err(Error::domain("grid_n must be at least 1".to_string()));
    }
    let width = (hi - lo) / grid_n as f64;
    let mut logw = Vec::with_capacity(grid_n);
    for k in 0..grid_n {
        let x = lo + (k as f64 + 0.5) * width;
        let v = logpdf(x);
        logw.push(if v.is_nan() { f64::NEG_INFINITY } else { v });
    }
    if !logw.iter().any(|w| w.is_finite()) {
        return Err(Error::infeasible(
            "grid density is zero everywhere on the interval",
        ));
    }
    let cell = inverse_cdf_index(&logw, rng);
    let v = lo + (cell as f64 + rng.uniform()) * width;
    Ok(v.clamp(lo + width * 1e-12, hi - width * 1e-12))
}
