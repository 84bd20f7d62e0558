//! Type B full conditionals.
//!
//! The state is (y, w, alpha, mu) with the latent W rate fixed at
//! mu/(p+1), the only divisor that preserves the Poisson marginal for
//! contiguous order-p dependence. The y and alpha conditionals touch only
//! index t; the w conditional sees the window of y_{t+j} binomials its
//! count enters, with an unbounded upper support handled by an adaptive
//! tail bound.

use crate::dist::{
    ln_choose, ln_factorial, sample_finite_logweights, sample_gamma, sample_grid_density,
    sample_poisson, sample_unbounded_logweights, LogWeightTable, RngStream,
};
use crate::error::{Error, Result};
use crate::inference::{
    moment_alpha_init, moment_mu_init, ChainCounters, GibbsConfig, GibbsState, InitStrategy,
    Priors,
};
use crate::model::CountSeries;

pub struct TypeBGibbs<'a> {
    x: &'a [u64],
    p: usize,
    priors: Priors,
}

impl<'a> TypeBGibbs<'a> {
    pub fn new(data: &'a CountSeries, p: usize, priors: &Priors) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::domain("type B inference needs at least one observation"));
        }
        Ok(TypeBGibbs { x: &data.x, p, priors: *priors })
    }

    pub fn horizon(&self) -> usize {
        self.x.len()
    }

    pub fn order(&self) -> usize {
        self.p
    }

    fn w_at(w: &[u64], i: i64) -> u64 {
        if i >= 1 && (i as usize) <= w.len() {
            w[i as usize - 1]
        } else {
            0
        }
    }

    fn anchors(&self, t: usize) -> std::ops::RangeInclusive<usize> {
        t..=(t + self.p).min(self.x.len())
    }

    /// sum_{i=0}^{p} w_{anchor-i}, optionally skipping latent index `skip`.
    fn window_w_sum(&self, w: &[u64], anchor: usize, skip: Option<usize>) -> u64 {
        (0..=self.p as i64)
            .map(|i| anchor as i64 - i)
            .filter(|&idx| Some(idx) != skip.map(|s| s as i64))
            .map(|idx| Self::w_at(w, idx))
            .sum()
    }

    /// m_t = min(x_t, sum of w over the window at t).
    pub fn m_bound(&self, state: &GibbsState, t: usize) -> u64 {
        self.x[t - 1].min(self.window_w_sum(&state.w, t, None))
    }

    /// Unnormalized log-mass of y_t = v given the rest (-inf off support).
    pub fn log_cond_y(&self, state: &GibbsState, t: usize, v: u64) -> f64 {
        let x_t = self.x[t - 1];
        let s_t = self.window_w_sum(&state.w, t, None);
        if v > x_t.min(s_t) {
            return f64::NEG_INFINITY;
        }
        let alpha_t = state.alpha[t - 1];
        let coef = alpha_t.ln() - state.mu.ln() - 2.0 * (1.0 - alpha_t).ln();
        v as f64 * coef - ln_factorial(x_t - v) - ln_factorial(v) - ln_factorial(s_t - v)
    }

    /// Exact draw from the y_t conditional on {0, ..., m_t}.
    pub fn update_y_t(&self, state: &mut GibbsState, t: usize, rng: &mut RngStream) -> Result<u64> {
        let m = self.m_bound(state, t);
        let logw: Vec<f64> = (0..=m).map(|v| self.log_cond_y(state, t, v)).collect();
        let table = LogWeightTable::new(0, logw)?;
        let v = sample_finite_logweights(&table, rng) as u64;
        state.y[t - 1] = v;
        Ok(v)
    }

    /// Lower support bound h_t: the smallest w_t keeping every window sum
    /// at least its binomial count y_{t+j}.
    pub fn h_bound(&self, state: &GibbsState, t: usize) -> i64 {
        self.anchors(t)
            .map(|anchor| {
                state.y[anchor - 1] as i64
                    - self.window_w_sum(&state.w, anchor, Some(t)) as i64
            })
            .max()
            .expect("anchor range is never empty")
    }

    /// Unnormalized log-mass of w_t = v given the rest (-inf off support).
    pub fn log_cond_w(&self, state: &GibbsState, t: usize, v: u64) -> f64 {
        let mut coef = (state.mu / (self.p as f64 + 1.0)).ln();
        let mut binom = 0.0;
        for anchor in self.anchors(t) {
            coef += (1.0 - state.alpha[anchor - 1]).ln();
            let total = self.window_w_sum(&state.w, anchor, Some(t)) + v;
            let y_j = state.y[anchor - 1];
            if total < y_j {
                return f64::NEG_INFINITY;
            }
            binom += ln_choose(total, y_j);
        }
        binom + v as f64 * coef - ln_factorial(v)
    }

    fn draw_w(
        &self,
        state: &GibbsState,
        t: usize,
        tail_tol: f64,
        rng: &mut RngStream,
    ) -> Result<crate::dist::TailDraw> {
        let lower = self.h_bound(state, t).max(0) as u64;
        sample_unbounded_logweights(|v| self.log_cond_w(state, t, v), lower, tail_tol, rng)
            .map_err(|e| {
                Error::infeasible(format!("w conditional at t={t} failed its tail bound: {e}"))
            })
    }

    /// Adaptive-truncation draw from the w_t conditional on
    /// {max(0, h_t), max(0, h_t)+1, ...}.
    pub fn update_w_t(
        &self,
        state: &mut GibbsState,
        t: usize,
        tail_tol: f64,
        rng: &mut RngStream,
    ) -> Result<u64> {
        let draw = self.draw_w(state, t, tail_tol, rng)?;
        state.w[t - 1] = draw.value;
        Ok(draw.value)
    }

    /// Unnormalized log-density of alpha_t = a on (0, 1).
    pub fn log_cond_alpha(&self, state: &GibbsState, t: usize, a: f64) -> f64 {
        if !(a > 0.0 && a < 1.0) {
            return f64::NEG_INFINITY;
        }
        let y_t = state.y[t - 1];
        let s_t = self.window_w_sum(&state.w, t, None);
        let e2 = self.priors.b_alpha + self.x[t - 1] as f64 + s_t as f64 - 2.0 * y_t as f64 - 1.0;
        (self.priors.a_alpha + y_t as f64 - 1.0) * a.ln() + e2 * (1.0 - a).ln() + state.mu * a
    }

    /// Griddy-Gibbs draw of alpha_t on (0, 1).
    pub fn update_alpha_t(
        &self,
        state: &mut GibbsState,
        t: usize,
        grid_n: usize,
        rng: &mut RngStream,
    ) -> Result<f64> {
        let a = sample_grid_density(|a| self.log_cond_alpha(state, t, a), 0.0, 1.0, grid_n, rng)?;
        state.alpha[t - 1] = a;
        Ok(a)
    }

    /// Gamma(shape, rate) parameters of the mu conditional:
    /// shape = a_mu + sum(x + w - y), rate = b_mu + T(p+2)/(p+1) - sum alpha.
    pub fn mu_conditional(&self, state: &GibbsState) -> (f64, f64) {
        let t_len = self.x.len() as f64;
        let mut net = 0.0;
        for t in 0..self.x.len() {
            net += self.x[t] as f64 + state.w[t] as f64 - state.y[t] as f64;
        }
        let shape = self.priors.a_mu + net;
        let rate = self.priors.b_mu + t_len * (self.p as f64 + 2.0) / (self.p as f64 + 1.0)
            - state.alpha.iter().sum::<f64>();
        (shape, rate)
    }

    pub fn update_mu(&self, state: &mut GibbsState, rng: &mut RngStream) -> Result<f64> {
        let (shape, rate) = self.mu_conditional(state);
        if shape <= 0.0 || rate <= 0.0 {
            return Err(Error::infeasible(format!(
                "mu conditional got nonpositive shape/rate ({shape}, {rate})"
            )));
        }
        let mu = sample_gamma(shape, rate, rng)?;
        state.mu = mu;
        Ok(mu)
    }

    /// One systematic scan: all y_t, all w_t, all alpha_t (ascending t),
    /// then mu.
    pub fn sweep(
        &self,
        state: &mut GibbsState,
        config: &GibbsConfig,
        rng: &mut RngStream,
        counters: &mut ChainCounters,
    ) -> Result<()> {
        for t in 1..=self.x.len() {
            self.update_y_t(state, t, rng)?;
            counters.y_updates += 1;
        }
        for t in 1..=self.x.len() {
            let draw = self.draw_w(state, t, config.w_tail_tol, rng)?;
            state.w[t - 1] = draw.value;
            counters.max_w_truncation = counters.max_w_truncation.max(draw.truncated_at);
            counters.w_updates += 1;
        }
        for t in 1..=self.x.len() {
            self.update_alpha_t(state, t, config.alpha_grid_n, rng)?;
            counters.alpha_updates += 1;
        }
        self.update_mu(state, rng)?;
        counters.mu_updates += 1;
        debug_assert!(self.is_feasible(state));
        Ok(())
    }

    pub fn init_state(&self, init: &InitStrategy, rng: &mut RngStream) -> Result<GibbsState> {
        let t_len = self.x.len();
        let mu = moment_mu_init(self.x);
        let alpha0 = moment_alpha_init(1.0);
        let (y, w) = match init {
            InitStrategy::Moments => {
                let w_rate = mu / (self.p as f64 + 1.0);
                let w: Vec<u64> = (0..t_len)
                    .map(|_| sample_poisson(w_rate, rng))
                    .collect::<Result<_>>()?;
                (vec![0u64; t_len], w)
            }
            InitStrategy::Latents { y, w } => {
                if y.len() != t_len || w.len() != t_len {
                    return Err(Error::domain(format!(
                        "latent init lengths ({}, {}) do not match horizon {t_len}",
                        y.len(),
                        w.len()
                    )));
                }
                (y.clone(), w.clone())
            }
        };
        let state = GibbsState { y, w, alpha: vec![alpha0; t_len], mu };
        if !self.is_feasible(&state) {
            return Err(Error::infeasible("initial latents violate the window counts"));
        }
        Ok(state)
    }

    /// 0 <= y_t <= min(x_t, window w sum) for all t.
    pub fn is_feasible(&self, state: &GibbsState) -> bool {
        (1..=self.x.len()).all(|t| {
            state.y[t - 1] <= self.x[t - 1].min(self.window_w_sum(&state.w, t, None))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_sum_exp(v: &[f64]) -> f64 {
        let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
    }

    fn state(y: Vec<u64>, w: Vec<u64>, alpha: Vec<f64>, mu: f64) -> GibbsState {
        GibbsState { y, w, alpha, mu }
    }

    #[test]
    fn zero_w_window_forces_zero_y() {
        let data = CountSeries::from_counts("d", vec![3, 2]).unwrap();
        let sampler = TypeBGibbs::new(&data, 1, &Priors::default()).unwrap();
        let mut st = state(vec![0, 0], vec![0, 0], vec![0.5, 0.5], 2.0);
        let mut rng = RngStream::new(1, 0);
        for _ in 0..50 {
            assert_eq!(sampler.update_y_t(&mut st, 1, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn tiny_alpha_concentrates_y_at_zero() {
        let data = CountSeries::from_counts("d", vec![5, 2]).unwrap();
        let sampler = TypeBGibbs::new(&data, 1, &Priors::default()).unwrap();
        let mut st = state(vec![0, 0], vec![3, 2], vec![1e-12, 0.5], 2.0);
        let mut rng = RngStream::new(2, 0);
        for _ in 0..200 {
            assert_eq!(sampler.update_y_t(&mut st, 1, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn y_conditional_matches_joint_section() {
        // T=2, p=1, x=(1,2), w=(1,1), alpha=0.5, mu=2: enumerate the
        // augmented joint over y_1
        let data = CountSeries::from_counts("d", vec![1, 2]).unwrap();
        let sampler = TypeBGibbs::new(&data, 1, &Priors::default()).unwrap();
        let st = state(vec![0, 0], vec![1, 1], vec![0.5, 0.5], 2.0);

        let joint = |y1: u64| -> f64 {
            let x = [1u64, 2];
            let w = [1u64, 1];
            let y = [y1, 0];
            let alpha = [0.5, 0.5];
            let mu = 2.0;
            let mut lp = 0.0;
            for t in 1..=2usize {
                let s_t = w[t - 1] + if t >= 2 { w[t - 2] } else { 0 };
                if y[t - 1] > x[t - 1].min(s_t) {
                    return f64::NEG_INFINITY;
                }
                lp += crate::dist::pois_logpmf(x[t - 1] - y[t - 1], mu * (1.0 - alpha[t - 1]))
                    .unwrap();
                lp += crate::dist::binom_logpmf(y[t - 1], s_t, alpha[t - 1]).unwrap();
                lp += crate::dist::pois_logpmf(w[t - 1], mu / 2.0).unwrap();
            }
            lp
        };

        let m = sampler.m_bound(&st, 1);
        assert_eq!(m, 1);
        let cond: Vec<f64> = (0..=m).map(|v| sampler.log_cond_y(&st, 1, v)).collect();
        let oracle: Vec<f64> = (0..=m).map(joint).collect();
        let (cn, on) = (log_sum_exp(&cond), log_sum_exp(&oracle));
        for v in 0..=m as usize {
            assert!(
                ((cond[v] - cn) - (oracle[v] - on)).abs() < 1e-12,
                "v={v}: {} vs {}",
                cond[v] - cn,
                oracle[v] - on
            );
        }
    }

    #[test]
    fn w_conditional_reduces_to_poisson_when_uncoupled() {
        // all y in the window zero and alpha -> 0: w_t ~ Po(mu/(p+1))
        let data = CountSeries::from_counts("d", vec![4, 3]).unwrap();
        let sampler = TypeBGibbs::new(&data, 1, &Priors::default()).unwrap();
        let st = state(vec![0, 0], vec![2, 1], vec![1e-300, 1e-300], 3.0);
        let rate = 1.5; // mu / (p+1)
        let logw: Vec<f64> = (0..=40).map(|v| sampler.log_cond_w(&st, 1, v)).collect();
        let norm = log_sum_exp(&logw);
        for (v, lw) in logw.iter().enumerate() {
            let expect = crate::dist::pois_logpmf(v as u64, rate).unwrap();
            // the Poisson itself normalizes to ~1 over 0..=40 at this rate
            assert!(
                ((lw - norm) - expect).abs() < 1e-10,
                "v={v}: {} vs {expect}",
                lw - norm
            );
        }
    }

    #[test]
    fn w_draws_respect_forced_lower_bound() {
        // big y_{t+1} with no other w support forces w_t >= h_t > 0
        let data = CountSeries::from_counts("d", vec![1, 6]).unwrap();
        let sampler = TypeBGibbs::new(&data, 1, &Priors::default()).unwrap();
        let mut st = state(vec![0, 5], vec![3, 0], vec![0.5, 0.9], 4.0);
        let h = sampler.h_bound(&st, 1);
        assert_eq!(h, 5); // y_2 - w_2 = 5
        let mut rng = RngStream::new(3, 0);
        for _ in 0..200 {
            let v = sampler.update_w_t(&mut st, 1, 1e-12, &mut rng).unwrap();
            assert!(v >= 5, "v={v}");
            st.w[0] = 3; // reset so the bound stays at 5
        }
    }

    #[test]
    fn alpha_conditional_reduces_to_beta_for_small_mu() {
        let data = CountSeries::from_counts("d", vec![3]).unwrap();
        let priors = Priors { a_alpha: 1.0, b_alpha: 1.0, ..Priors::default() };
        let sampler = TypeBGibbs::new(&data, 0, &priors).unwrap();
        let mut st = state(vec![2], vec![4], vec![0.5], 1e-12);
        let mut rng = RngStream::new(4, 0);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sampler.update_alpha_t(&mut st, 1, 512, &mut rng).unwrap();
        }
        // Beta(a + y, b + x + S - 2y) = Beta(3, 4), mean 3/7
        let expect = 3.0 / 7.0;
        let mean = sum / n as f64;
        assert!((mean - expect).abs() < 0.005, "mean={mean} expect={expect}");
    }

    #[test]
    fn alpha_conditional_is_finite_at_boundary_exponent() {
        // y_t = x_t = sum w: the (1-a) exponent bottoms out at b_alpha - 1
        let data = CountSeries::from_counts("d", vec![3]).unwrap();
        let sampler = TypeBGibbs::new(&data, 0, &Priors::default()).unwrap();
        let st = state(vec![3], vec![3], vec![0.5], 2.0);
        for a in [0.1, 0.5, 0.9, 0.99] {
            assert!(sampler.log_cond_alpha(&st, 1, a).is_finite());
        }
    }

    #[test]
    fn alpha_grid_refinement_total_variation() {
        let data = CountSeries::from_counts("d", vec![5, 2]).unwrap();
        let sampler = TypeBGibbs::new(&data, 1, &Priors::default()).unwrap();
        let st = state(vec![2, 1], vec![2, 3], vec![0.4, 0.6], 3.0);

        let cell_masses = |n: usize| -> Vec<f64> {
            let width = 1.0 / n as f64;
            let logw: Vec<f64> = (0..n)
                .map(|k| sampler.log_cond_alpha(&st, 1, (k as f64 + 0.5) * width))
                .collect();
            let norm = log_sum_exp(&logw);
            logw.iter().map(|l| (l - norm).exp()).collect()
        };

        let coarse = cell_masses(512);
        let fine = cell_masses(4096);
        let agg: Vec<f64> = (0..512).map(|k| fine[8 * k..8 * (k + 1)].iter().sum()).collect();
        let tv = 0.5 * coarse.iter().zip(&agg).map(|(a, b)| (a - b).abs()).sum::<f64>();
        assert!(tv < 0.01, "tv={tv}");
    }

    #[test]
    fn mu_conditional_plain_arithmetic() {
        let data = CountSeries::from_counts("d", vec![2, 3]).unwrap();
        let priors = Priors::default();
        let sampler = TypeBGibbs::new(&data, 0, &priors).unwrap();
        // y = w = 0, alpha = 0: Ga(a + sum x, b + 2T)
        let st = state(vec![0, 0], vec![0, 0], vec![0.0, 0.0], 2.0);
        let (shape, rate) = sampler.mu_conditional(&st);
        assert!((shape - (priors.a_mu + 5.0)).abs() < 1e-12);
        assert!((rate - (priors.b_mu + 4.0)).abs() < 1e-12);
    }

    #[test]
    fn mu_conditional_matches_joint_profile() {
        let data = CountSeries::from_counts("d", vec![1, 2]).unwrap();
        let priors = Priors { a_alpha: 1.0, b_alpha: 1.0, a_mu: 1.2, b_mu: 0.9 };
        let sampler = TypeBGibbs::new(&data, 1, &priors).unwrap();
        let st = state(vec![1, 1], vec![1, 1], vec![0.4, 0.55], 2.0);

        let joint_mu = |mu: f64| -> f64 {
            let x = [1u64, 2];
            let mut lp = (priors.a_mu - 1.0) * mu.ln() - priors.b_mu * mu;
            for t in 1..=2usize {
                let s_t = st.w[t - 1] + if t >= 2 { st.w[t - 2] } else { 0 };
                lp += crate::dist::pois_logpmf(x[t - 1] - st.y[t - 1], mu * (1.0 - st.alpha[t - 1]))
                    .unwrap();
                lp += crate::dist::binom_logpmf(st.y[t - 1], s_t, st.alpha[t - 1]).unwrap();
                lp += crate::dist::pois_logpmf(st.w[t - 1], mu / 2.0).unwrap();
            }
            lp
        };

        let (shape, rate) = sampler.mu_conditional(&st);
        let gamma_logpdf = |mu: f64| (shape - 1.0) * mu.ln() - rate * mu;
        let offset = joint_mu(1.0) - gamma_logpdf(1.0);
        let mut worst = 0.0f64;
        for k in 0..200 {
            let mu = 0.1 + (20.0 - 0.1) * (k as f64 + 0.5) / 200.0;
            worst = worst.max((joint_mu(mu) - gamma_logpdf(mu) - offset).abs());
        }
        assert!(worst < 1e-8, "max profile deviation {worst}");
    }

    #[test]
    fn alpha_conditional_matches_joint_profile() {
        let data = CountSeries::from_counts("d", vec![1, 2]).unwrap();
        let priors = Priors { a_alpha: 0.7, b_alpha: 1.4, a_mu: 1.0, b_mu: 1.0 };
        let sampler = TypeBGibbs::new(&data, 1, &priors).unwrap();
        let st = state(vec![1, 1], vec![1, 1], vec![0.4, 0.55], 2.0);

        for t in 1..=2usize {
            let joint_alpha = |a: f64| -> f64 {
                let x = [1u64, 2];
                let mut alpha = st.alpha.clone();
                alpha[t - 1] = a;
                let mut lp =
                    (priors.a_alpha - 1.0) * a.ln() + (priors.b_alpha - 1.0) * (1.0 - a).ln();
                for u in 1..=2usize {
                    let s_u = st.w[u - 1] + if u >= 2 { st.w[u - 2] } else { 0 };
                    lp += crate::dist::pois_logpmf(
                        x[u - 1] - st.y[u - 1],
                        st.mu * (1.0 - alpha[u - 1]),
                    )
                    .unwrap();
                    lp += crate::dist::binom_logpmf(st.y[u - 1], s_u, alpha[u - 1]).unwrap();
                    lp += crate::dist::pois_logpmf(st.w[u - 1], st.mu / 2.0).unwrap();
                }
                lp
            };

            let a0 = 0.5;
            let offset = joint_alpha(a0) - sampler.log_cond_alpha(&st, t, a0);
            let mut worst = 0.0f64;
            for k in 0..200 {
                let a = (k as f64 + 0.5) / 200.0;
                worst = worst.max((joint_alpha(a) - sampler.log_cond_alpha(&st, t, a) - offset).abs());
            }
            assert!(worst < 1e-8, "t={t}: max profile deviation {worst}");
        }
    }
}
