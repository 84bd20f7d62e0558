//! Gibbs samplers for the three model families.
//!
//! Each family exposes its single-site full-conditional updates (so their
//! densities can be checked against enumeration and profile-likelihood
//! oracles) plus a driver that runs the systematic scan
//! y (ascending t) -> w (type B) -> alpha (ascending t) -> mu,
//! records thinned post-burn-in draws, and is bit-deterministic given the
//! config seed. Inference covers contiguous order-p dependence; the
//! seasonal/periodic/spatial structures are simulation-and-theory only.

mod inar1;
mod type_a;
mod type_b;

pub use inar1::Inar1Gibbs;
pub use type_a::TypeAGibbs;
pub use type_b::TypeBGibbs;

use serde::{Deserialize, Serialize};

use crate::dist::RngStream;
use crate::error::{Error, Result};
use crate::model::{CountSeries, ModelKind};

/// Beta prior (a_alpha, b_alpha) on each thinning probability and gamma
/// prior (a_mu, b_mu) on the rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Priors {
    pub a_alpha: f64,
    pub b_alpha: f64,
    pub a_mu: f64,
    pub b_mu: f64,
}

impl Default for Priors {
    fn default() -> Self {
        Priors { a_alpha: 0.01, b_alpha: 0.01, a_mu: 0.01, b_mu: 0.01 }
    }
}

impl Priors {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a_alpha", self.a_alpha),
            ("b_alpha", self.b_alpha),
            ("a_mu", self.a_mu),
            ("b_mu", self.b_mu),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("prior {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// How the chain state is initialized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum InitStrategy {
    /// mu from the sample mean (floored at 1e-3), alpha at half the
    /// feasible midpoint, y = 0, and (type B) w ~ Po(mu/(p+1)).
    Moments,
    /// Start the latents from known values (e.g. a simulator's output).
    Latents { y: Vec<u64>, w: Vec<u64> },
}

/// MCMC run settings. Defaults follow the usual protocol for these models:
/// 16,000 iterations, 1,000 burn-in, keep every 5th.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub stream: u64,
    /// Grid resolution for the non-conjugate alpha conditionals.
    pub alpha_grid_n: usize,
    /// Relative tail bound for the unbounded w conditionals.
    pub w_tail_tol: f64,
    pub init: InitStrategy,
    /// Keep per-iteration latent snapshots (needed by the posterior
    /// predictive).
    pub keep_latents: bool,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig {
            iterations: 16_000,
            burn_in: 1_000,
            thin: 5,
            seed: 0,
            stream: 0,
            alpha_grid_n: 512,
            w_tail_tol: 1e-12,
            init: InitStrategy::Moments,
            keep_latents: true,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::domain(format!(
                "burn_in ({}) must be below iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin < 1 {
            return Err(Error::domain("thin must be >= 1"));
        }
        if self.alpha_grid_n < 2 {
            return Err(Error::domain("alpha_grid_n must be >= 2"));
        }
        if !(self.w_tail_tol.is_finite() && self.w_tail_tol > 0.0) {
            return Err(Error::domain("w_tail_tol must be positive"));
        }
        Ok(())
    }

    /// Number of kept draws: (iterations - burn_in) / thin.
    pub fn kept(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// Current values of the latent variables and parameters.
///
/// Feasibility invariants (type A: x_t >= sum of y over each window;
/// type B: y_t <= min(x_t, sum of w over the window)) hold after every
/// single-site update; full sweeps assert them in debug builds.
#[derive(Clone, Debug, PartialEq)]
pub struct GibbsState {
    pub y: Vec<u64>,
    /// Type B only; empty otherwise.
    pub w: Vec<u64>,
    /// Length T for types A/B, length 1 for INAR(1).
    pub alpha: Vec<f64>,
    pub mu: f64,
}

/// Bookkeeping counters accumulated over a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainCounters {
    pub y_updates: u64,
    pub w_updates: u64,
    pub alpha_updates: u64,
    pub mu_updates: u64,
    /// Largest support point enumerated by the adaptive w sampler.
    pub max_w_truncation: u64,
}

/// Thinned post-burn-in draws plus chain diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub kind: ModelKind,
    pub p: usize,
    pub mu: Vec<f64>,
    pub alpha: Vec<Vec<f64>>,
    pub y: Option<Vec<Vec<u64>>>,
    pub w: Option<Vec<Vec<u64>>>,
    /// Running mean of mu at each kept draw.
    pub ergodic_mean_mu: Vec<f64>,
    /// Sample ACF of the kept mu chain (empty when degenerate).
    pub mu_chain_acf: Vec<f64>,
    pub counters: ChainCounters,
    pub config: GibbsConfig,
}

impl PosteriorDraws {
    pub fn kept(&self) -> usize {
        self.mu.len()
    }

    pub fn posterior_mean_mu(&self) -> f64 {
        self.mu.iter().sum::<f64>() / self.mu.len() as f64
    }

    /// Per-index posterior means of alpha.
    pub fn posterior_mean_alpha(&self) -> Vec<f64> {
        let t_len = self.alpha[0].len();
        let mut means = vec![0.0; t_len];
        for draw in &self.alpha {
            for (m, a) in means.iter_mut().zip(draw) {
                *m += a;
            }
        }
        for m in &mut means {
            *m /= self.alpha.len() as f64;
        }
        means
    }

    /// Average of the per-index alpha posterior means (the natural scalar
    /// summary under stationary thinning).
    pub fn posterior_mean_alpha_scalar(&self) -> f64 {
        let means = self.posterior_mean_alpha();
        means.iter().sum::<f64>() / means.len() as f64
    }

    pub fn quantile_mu(&self, q: f64) -> f64 {
        let mut sorted = self.mu.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
        sorted[idx]
    }
}

pub(crate) struct Recorder {
    keep_latents: bool,
    keep_w: bool,
    mu: Vec<f64>,
    alpha: Vec<Vec<f64>>,
    y: Vec<Vec<u64>>,
    w: Vec<Vec<u64>>,
    ergodic: Vec<f64>,
    mu_sum: f64,
}

impl Recorder {
    pub(crate) fn new(config: &GibbsConfig, keep_w: bool) -> Self {
        let kept = config.kept();
        Recorder {
            keep_latents: config.keep_latents,
            keep_w,
            mu: Vec::with_capacity(kept),
            alpha: Vec::with_capacity(kept),
            y: Vec::new(),
            w: Vec::new(),
            ergodic: Vec::with_capacity(kept),
            mu_sum: 0.0,
        }
    }

    pub(crate) fn record(&mut self, state: &GibbsState) {
        self.mu.push(state.mu);
        self.alpha.push(state.alpha.clone());
        self.mu_sum += state.mu;
        self.ergodic.push(self.mu_sum / self.mu.len() as f64);
        if self.keep_latents {
            self.y.push(state.y.clone());
            if self.keep_w {
                self.w.push(state.w.clone());
            }
        }
    }

    pub(crate) fn finish(
        self,
        kind: ModelKind,
        p: usize,
        counters: ChainCounters,
        config: &GibbsConfig,
    ) -> PosteriorDraws {
        let mu_chain_acf = chain_acf(&self.mu).unwrap_or_default();
        PosteriorDraws {
            kind,
            p,
            mu: self.mu,
            alpha: self.alpha,
            y: if self.keep_latents { Some(self.y) } else { None },
            w: if self.keep_latents && self.keep_w { Some(self.w) } else { None },
            ergodic_mean_mu: self.ergodic,
            mu_chain_acf,
            counters,
            config: config.clone(),
        }
    }
}

/// ACF of a real-valued chain, up to lag 50.
fn chain_acf(chain: &[f64]) -> Option<Vec<f64>> {
    let n = chain.len();
    if n < 3 {
        return None;
    }
    let max_lag = 50.min(n - 1);
    let mean = chain.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = chain.iter().map(|v| v - mean).collect();
    let denom: f64 = centered.iter().map(|c| c * c).sum();
    if denom == 0.0 {
        return None;
    }
    Some(
        (0..=max_lag)
            .map(|s| (0..n - s).map(|t| centered[t] * centered[t + s]).sum::<f64>() / denom)
            .collect(),
    )
}

/// Run the Gibbs sampler for the requested model family.
///
/// For INAR(1) the `p` argument is ignored.
pub fn gibbs_run(
    kind: ModelKind,
    data: &CountSeries,
    p: usize,
    priors: &Priors,
    config: &GibbsConfig,
) -> Result<PosteriorDraws> {
    match kind {
        ModelKind::TypeA => fit_type_a(data, p, priors, config),
        ModelKind::TypeB => fit_type_b(data, p, priors, config),
        ModelKind::Inar1 => fit_inar1(data, priors, config),
    }
}

pub fn fit_type_a(
    data: &CountSeries,
    p: usize,
    priors: &Priors,
    config: &GibbsConfig,
) -> Result<PosteriorDraws> {
    priors.validate()?;
    config.validate()?;
    let sampler = TypeAGibbs::new(data, p, priors)?;
    let mut rng = RngStream::new(config.seed, config.stream);
    let mut state = sampler.init_state(&config.init, &mut rng)?;
    let mut counters = ChainCounters::default();
    let mut rec = Recorder::new(config, false);
    for iter in 1..=config.iterations {
        sampler
            .sweep(&mut state, config, &mut rng, &mut counters)
            .map_err(|e| on_sweep_error(e, iter, &state))?;
        if should_keep(iter, config) {
            rec.record(&state);
        }
    }
    Ok(rec.finish(ModelKind::TypeA, p, counters, config))
}

pub fn fit_type_b(
    data: &CountSeries,
    p: usize,
    priors: &Priors,
    config: &GibbsConfig,
) -> Result<PosteriorDraws> {
    priors.validate()?;
    config.validate()?;
    let sampler = TypeBGibbs::new(data, p, priors)?;
    let mut rng = RngStream::new(config.seed, config.stream);
    let mut state = sampler.init_state(&config.init, &mut rng)?;
    let mut counters = ChainCounters::default();
    let mut rec = Recorder::new(config, true);
    for iter in 1..=config.iterations {
        sampler
            .sweep(&mut state, config, &mut rng, &mut counters)
            .map_err(|e| on_sweep_error(e, iter, &state))?;
        if should_keep(iter, config) {
            rec.record(&state);
        }
    }
    Ok(rec.finish(ModelKind::TypeB, p, counters, config))
}

pub fn fit_inar1(
    data: &CountSeries,
    priors: &Priors,
    config: &GibbsConfig,
) -> Result<PosteriorDraws> {
    priors.validate()?;
    config.validate()?;
    let sampler = Inar1Gibbs::new(data, priors)?;
    let mut rng = RngStream::new(config.seed, config.stream);
    let mut state = sampler.init_state(&config.init, &mut rng)?;
    let mut counters = ChainCounters::default();
    let mut rec = Recorder::new(config, false);
    for iter in 1..=config.iterations {
        sampler
            .sweep(&mut state, config, &mut rng, &mut counters)
            .map_err(|e| on_sweep_error(e, iter, &state))?;
        if should_keep(iter, config) {
            rec.record(&state);
        }
    }
    Ok(rec.finish(ModelKind::Inar1, 1, counters, config))
}

fn should_keep(iter: usize, config: &GibbsConfig) -> bool {
    iter > config.burn_in && (iter - config.burn_in).is_multiple_of(config.thin)
}

fn on_sweep_error(e: Error, iter: usize, state: &GibbsState) -> Error {
    Error::infeasible(format!(
        "gibbs sweep failed at iteration {iter}: {e}; state: mu={}, alpha={:?}, y={:?}, w={:?}",
        state.mu, state.alpha, state.y, state.w
    ))
}

/// Stationary-alpha midpoint used by the Moments initialization.
pub(crate) fn moment_alpha_init(feasible_cap: f64) -> f64 {
    0.5 * (feasible_cap / 2.0)
}

pub(crate) fn moment_mu_init(x: &[u64]) -> f64 {
    let mean = x.iter().sum::<u64>() as f64 / x.len() as f64;
    mean.max(1e-3)
}
