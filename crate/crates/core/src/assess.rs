//! Posterior-predictive summaries, the L-measure, and the model grid.
//!
//! The predictive replicate X_t^F conditions on each kept draw's sampled
//! latents rather than re-simulating latent paths: one X_t^F is drawn per
//! kept iteration, and the per-t summaries are taken across iterations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{derive_stream, sample_binomial, sample_poisson, RngStream};
use crate::error::{Error, Result};
use crate::inference::{gibbs_run, GibbsConfig, PosteriorDraws, Priors};
use crate::model::{CountSeries, DependenceStructure, ModelKind};

/// Per-index posterior-predictive moments and credible interval.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PredictiveSummary {
    /// Credible level of the (lo, hi) interval.
    pub level: f64,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub lo: Vec<u64>,
    pub hi: Vec<u64>,
}

impl PredictiveSummary {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// Sample one predictive replicate per kept draw and summarize across
/// draws. Type A and type B need latent snapshots in `draws`.
#[allow(clippy::needless_range_loop)]
pub fn posterior_predictive(
    draws: &PosteriorDraws,
    data: &CountSeries,
    level: f64,
    rng: &mut RngStream,
) -> Result<PredictiveSummary> {
    if draws.kept() == 0 {
        return Err(Error::domain("posterior predictive needs at least one kept draw"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("credible level must be in (0,1), got {level}")));
    }
    let t_len = data.len();
    let g_len = draws.kept();
    let mut reps = vec![vec![0u64; g_len]; t_len];
    match draws.kind {
        ModelKind::TypeA => {
            let y = draws.y.as_ref().ok_or_else(latents_missing)?;
            let structure = DependenceStructure::order_p(t_len, draws.p)?;
            for g in 0..g_len {
                let (mu, alpha, yg) = (draws.mu[g], &draws.alpha[g], &y[g]);
                check_draw_len(alpha.len(), t_len)?;
                for t in 1..=t_len {
                    let mut y_sum = 0u64;
                    let mut a_sum = 0.0f64;
                    for &i in structure.set(t) {
                        if i >= 1 {
                            y_sum += yg[i as usize - 1];
                            a_sum += alpha[i as usize - 1];
                        }
                    }
                    let rate = (mu * (1.0 - a_sum)).max(0.0);
                    reps[t - 1][g] = y_sum + sample_poisson(rate, rng)?;
                }
            }
        }
        ModelKind::TypeB => {
            let y = draws.y.as_ref().ok_or_else(latents_missing)?;
            for g in 0..g_len {
                let (mu, alpha, yg) = (draws.mu[g], &draws.alpha[g], &y[g]);
                check_draw_len(alpha.len(), t_len)?;
                for t in 1..=t_len {
                    let rate = (mu * (1.0 - alpha[t - 1])).max(0.0);
                    reps[t - 1][g] = yg[t - 1] + sample_poisson(rate, rng)?;
                }
            }
        }
        ModelKind::Inar1 => {
            for g in 0..g_len {
                let (mu, alpha) = (draws.mu[g], draws.alpha[g][0]);
                reps[0][g] = sample_poisson(mu, rng)?;
                for t in 2..=t_len {
                    let thinned = sample_binomial(data.x[t - 2], alpha, rng)?;
                    let rate = (mu * (1.0 - alpha)).max(0.0);
                    reps[t - 1][g] = thinned + sample_poisson(rate, rng)?;
                }
            }
        }
    }

    let mut mean = Vec::with_capacity(t_len);
    let mut var = Vec::with_capacity(t_len);
    let mut lo = Vec::with_capacity(t_len);
    let mut hi = Vec::with_capacity(t_len);
    let q_lo = (1.0 - level) / 2.0;
    let q_hi = 1.0 - q_lo;
    for samples in reps.iter_mut() {
        let n = samples.len() as f64;
        let m = samples.iter().sum::<u64>() as f64 / n;
        let v = if samples.len() > 1 {
            samples.iter().map(|&s| (s as f64 - m).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        samples.sort_unstable();
        lo.push(samples[quantile_index(q_lo, samples.len())]);
        hi.push(samples[quantile_index(q_hi, samples.len())]);
        mean.push(m);
        var.push(v);
    }
    Ok(PredictiveSummary { level, mean, var, lo, hi })
}

fn latents_missing() -> Error {
    Error::domain(
        "posterior draws carry no latent snapshots; rerun the fit with keep_latents enabled",
    )
}

fn check_draw_len(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::domain(format!(
            "draw has {got} alpha entries but the series has {want}"
        )));
    }
    Ok(())
}

fn quantile_index(q: f64, n: usize) -> usize {
    ((q * n as f64).ceil() as usize).clamp(1, n) - 1
}

/// L(nu) = (1/T) sum Var(X_t^F | x) + (nu/T) sum {E(X_t^F | x) - x_t}^2.
pub fn l_measure(pred: &PredictiveSummary, x: &CountSeries, nu: f64) -> Result<f64> {
    if pred.len() != x.len() {
        return Err(Error::domain(format!(
            "predictive summary has length {}, series has length {}",
            pred.len(),
            x.len()
        )));
    }
    if !(nu.is_finite() && nu >= 0.0) {
        return Err(Error::domain(format!("nu must be nonnegative, got {nu}")));
    }
    let t_len = x.len() as f64;
    let var_part: f64 = pred.var.iter().sum::<f64>() / t_len;
    let bias_part: f64 = pred
        .mean
        .iter()
        .zip(&x.x)
        .map(|(m, &obs)| (m - obs as f64).powi(2))
        .sum::<f64>()
        / t_len;
    Ok(var_part + nu * bias_part)
}

/// One (series, model, order) cell of the comparison table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridCell {
    pub series: String,
    pub kind: ModelKind,
    /// None for INAR(1), which has no order to sweep.
    pub p: Option<usize>,
    pub l_measure: Option<f64>,
    pub error: Option<String>,
    /// Flags the smallest L within the (series, kind) group.
    pub is_min: bool,
}

/// L-measures for every (series, kind, p) combination, with per-group
/// minima flagged.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub nu: f64,
    pub p_values: Vec<usize>,
    pub kinds: Vec<ModelKind>,
    pub rows: Vec<GridCell>,
}

/// Fit every (kind, p) to every series and compare L-measures.
///
/// INAR(1) is fitted once per series regardless of the p sweep. Cells are
/// independent jobs on streams derived from (config.stream, series, kind,
/// p), so the table is reproducible bit for bit no matter how the cells
/// are scheduled. Per-cell failures are recorded in the cell and leave the
/// rest of the table intact.
pub fn model_grid(
    series: &[CountSeries],
    kinds: &[ModelKind],
    p_values: &[usize],
    priors: &Priors,
    config: &GibbsConfig,
    nu: f64,
    level: f64,
) -> Result<ComparisonTable> {
    if series.is_empty() || kinds.is_empty() || p_values.is_empty() {
        return Err(Error::domain("model grid needs series, kinds, and p values"));
    }
    struct Job {
        series_idx: usize,
        kind: ModelKind,
        kind_idx: usize,
        p: Option<usize>,
    }
    let mut jobs = Vec::new();
    for series_idx in 0..series.len() {
        for (kind_idx, &kind) in kinds.iter().enumerate() {
            match kind {
                ModelKind::Inar1 => jobs.push(Job { series_idx, kind, kind_idx, p: None }),
                _ => {
                    for &p in p_values {
                        jobs.push(Job { series_idx, kind, kind_idx, p: Some(p) });
                    }
                }
            }
        }
    }

    let mut rows: Vec<GridCell> = jobs
        .par_iter()
        .map(|job| {
            let data = &series[job.series_idx];
            let p = job.p.unwrap_or(1);
            let ids = [
                config.stream,
                job.series_idx as u64,
                job.kind_idx as u64,
                job.p.map(|p| p as u64 + 1).unwrap_or(0),
            ];
            let fit_config = GibbsConfig {
                stream: derive_stream(&[ids[0], ids[1], ids[2], ids[3], 0]),
                keep_latents: true,
                ..config.clone()
            };
            let outcome = gibbs_run(job.kind, data, p, priors, &fit_config).and_then(|draws| {
                let mut rng = RngStream::new(
                    config.seed,
                    derive_stream(&[ids[0], ids[1], ids[2], ids[3], 1]),
                );
                let pred = posterior_predictive(&draws, data, level, &mut rng)?;
                l_measure(&pred, data, nu)
            });
            match outcome {
                Ok(l) => GridCell {
                    series: data.name.clone(),
                    kind: job.kind,
                    p: job.p,
                    l_measure: Some(l),
                    error: None,
                    is_min: false,
                },
                Err(e) => GridCell {
                    series: data.name.clone(),
                    kind: job.kind,
                    p: job.p,
                    l_measure: None,
                    error: Some(e.to_string()),
                    is_min: false,
                },
            }
        })
        .collect();

    // flag the minimum of each (series, kind) group; first wins ties
    let mut group_start = 0;
    while group_start < rows.len() {
        let key = (rows[group_start].series.clone(), rows[group_start].kind);
        let mut group_end = group_start + 1;
        while group_end < rows.len()
            && rows[group_end].series == key.0
            && rows[group_end].kind == key.1
        {
            group_end += 1;
        }
        let mut best: Option<(usize, f64)> = None;
        for (idx, row) in rows.iter().enumerate().take(group_end).skip(group_start) {
            if let Some(l) = row.l_measure {
                if best.map(|(_, bl)| l < bl).unwrap_or(true) {
                    best = Some((idx, l));
                }
            }
        }
        if let Some((idx, _)) = best {
            rows[idx].is_min = true;
        }
        group_start = group_end;
    }

    Ok(ComparisonTable { nu, p_values: p_values.to_vec(), kinds: kinds.to_vec(), rows })
}
