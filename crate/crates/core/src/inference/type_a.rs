//! Type A full conditionals.
//!
//! The augmented likelihood keeps only (x, y): the first hierarchy level is
//! marginalized out, so a state is (y, alpha, mu). Every update below works
//! on the window of observations x_{t+j}, j = 0..p, that the coordinate
//! enters; anchors beyond the data horizon simply drop out of products and
//! extrema. Latent indices <= 0 are zero by convention.

use crate::dist::{
    ln_factorial, sample_finite_logweights, sample_gamma, sample_grid_density, LogWeightTable,
    RngStream,
};
use crate::error::{Error, Result};
use crate::inference::{
    moment_alpha_init, moment_mu_init, ChainCounters, GibbsConfig, GibbsState, InitStrategy,
    Priors,
};
use crate::model::CountSeries;

pub struct TypeAGibbs<'a> {
    x: &'a [u64],
    p: usize,
    priors: Priors,
    sum_x: u64,
}

impl<'a> TypeAGibbs<'a> {
    pub fn new(data: &'a CountSeries, p: usize, priors: &Priors) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::domain("type A inference needs at least one observation"));
        }
        Ok(TypeAGibbs { x: &data.x, p, priors: *priors, sum_x: data.x.iter().sum() })
    }

    pub fn horizon(&self) -> usize {
        self.x.len()
    }

    pub fn order(&self) -> usize {
        self.p
    }

    fn y_at(y: &[u64], i: i64) -> u64 {
        if i >= 1 && (i as usize) <= y.len() {
            y[i as usize - 1]
        } else {
            0
        }
    }

    fn alpha_at(alpha: &[f64], i: i64) -> f64 {
        if i >= 1 && (i as usize) <= alpha.len() {
            alpha[i as usize - 1]
        } else {
            0.0
        }
    }

    /// Anchors t+j, j = 0..p, clipped to the data horizon.
    fn anchors(&self, t: usize) -> std::ops::RangeInclusive<usize> {
        t..=(t + self.p).min(self.x.len())
    }

    /// sum_{i=0}^{p} y_{anchor-i}, optionally skipping latent index `skip`.
    fn window_y_sum(&self, y: &[u64], anchor: usize, skip: Option<usize>) -> u64 {
        (0..=self.p as i64)
            .map(|i| anchor as i64 - i)
            .filter(|&idx| Some(idx) != skip.map(|s| s as i64))
            .map(|idx| Self::y_at(y, idx))
            .sum()
    }

    fn window_alpha_sum(&self, alpha: &[f64], anchor: usize, skip: Option<usize>) -> f64 {
        (0..=self.p as i64)
            .map(|i| anchor as i64 - i)
            .filter(|&idx| Some(idx) != skip.map(|s| s as i64))
            .map(|idx| Self::alpha_at(alpha, idx))
            .sum()
    }

    /// Upper support bound c_t: the largest y_t keeping every window count
    /// x_{t+j} - sum y_{t+j-i} nonnegative.
    pub fn c_bound(&self, state: &GibbsState, t: usize) -> i64 {
        self.anchors(t)
            .map(|anchor| {
                self.x[anchor - 1] as i64 - self.window_y_sum(&state.y, anchor, Some(t)) as i64
            })
            .min()
            .expect("anchor range is never empty")
    }

    /// Unnormalized log-mass of y_t = v given the rest (-inf off support).
    pub fn log_cond_y(&self, state: &GibbsState, t: usize, v: u64) -> f64 {
        let alpha_t = state.alpha[t - 1];
        let mut coef = alpha_t.ln();
        let mut n_anchors = 0.0;
        let mut tail = 0.0;
        for anchor in self.anchors(t) {
            n_anchors += 1.0;
            let a_sum = self.window_alpha_sum(&state.alpha, anchor, None);
            coef -= (1.0 - a_sum).ln();
            let rest = self.window_y_sum(&state.y, anchor, Some(t));
            match self.x[anchor - 1].checked_sub(rest + v) {
                Some(count) => tail -= ln_factorial(count),
                None => return f64::NEG_INFINITY,
            }
        }
        coef += (1.0 - n_anchors) * state.mu.ln();
        v as f64 * coef - ln_factorial(v) + tail
    }

    /// Exact draw from the y_t conditional on {0, ..., c_t}.
    pub fn update_y_t(&self, state: &mut GibbsState, t: usize, rng: &mut RngStream) -> Result<u64> {
        let c = self.c_bound(state, t);
        if c < 0 {
            return Err(Error::infeasible(format!(
                "y window at t={t} admits no value (c_t = {c}); state invariant breached"
            )));
        }
        let logw: Vec<f64> = (0..=c as u64).map(|v| self.log_cond_y(state, t, v)).collect();
        let table = LogWeightTable::new(0, logw)?;
        let v = sample_finite_logweights(&table, rng) as u64;
        state.y[t - 1] = v;
        Ok(v)
    }

    /// Upper support bound d_t for alpha_t (capped at 1).
    pub fn d_bound(&self, state: &GibbsState, t: usize) -> f64 {
        self.anchors(t)
            .map(|anchor| 1.0 - self.window_alpha_sum(&state.alpha, anchor, Some(t)))
            .fold(1.0f64, f64::min)
    }

    /// Unnormalized log-density of alpha_t = a given the rest.
    ///
    /// At interior t this is the printed beta-like kernel with the e^{p mu a}
    /// tilt; near the horizon the tilt exponent shrinks to
    /// (number of anchors - 1) mu a because the missing innovation terms
    /// contribute no e^{mu a} factor.
    pub fn log_cond_alpha(&self, state: &GibbsState, t: usize, a: f64) -> f64 {
        if !(a > 0.0 && a < 1.0) {
            return f64::NEG_INFINITY;
        }
        let y_t = state.y[t - 1];
        let mut lp = (self.priors.a_alpha + y_t as f64 - 1.0) * a.ln()
            + (self.priors.b_alpha - 1.0) * (1.0 - a).ln();
        let mut n_anchors = 0.0;
        for anchor in self.anchors(t) {
            n_anchors += 1.0;
            let rest = self.window_alpha_sum(&state.alpha, anchor, Some(t));
            let slack = 1.0 - rest - a;
            if slack <= 0.0 {
                return f64::NEG_INFINITY;
            }
            let window = self.window_y_sum(&state.y, anchor, None);
            let count = match self.x[anchor - 1].checked_sub(window) {
                Some(c) => c,
                None => return f64::NEG_INFINITY,
            };
            lp += count as f64 * slack.ln();
        }
        lp + (n_anchors - 1.0) * state.mu * a
    }

    /// Griddy-Gibbs draw of alpha_t on (0, min(d_t, 1)).
    pub fn update_alpha_t(
        &self,
        state: &mut GibbsState,
        t: usize,
        grid_n: usize,
        rng: &mut RngStream,
    ) -> Result<f64> {
        let hi = self.d_bound(state, t).min(1.0);
        if hi <= 0.0 {
            return Err(Error::infeasible(format!(
                "alpha window at t={t} admits no value (d_t = {hi}); state invariant breached"
            )));
        }
        let a = sample_grid_density(|a| self.log_cond_alpha(state, t, a), 0.0, hi, grid_n, rng)?;
        state.alpha[t - 1] = a;
        Ok(a)
    }

    /// Gamma(shape, rate) parameters of the mu conditional.
    ///
    /// shape = a_mu + sum x - sum of lagged y; rate = b_mu + T - sum of
    /// lagged alpha. The rate subtracts the lagged thinning mass: the
    /// window rates mu(1 - sum alpha) contribute e^{-mu(1 - ...)} each, so
    /// the total e^{-mu .} coefficient is T minus the lag sums (plus the
    /// sum alpha_t from the y terms, which cancels the i = 0 lag).
    pub fn mu_conditional(&self, state: &GibbsState) -> (f64, f64) {
        let t_len = self.x.len();
        let mut lag_y = 0u64;
        let mut lag_alpha = 0.0f64;
        for t in 1..=t_len as i64 {
            for i in 1..=self.p as i64 {
                lag_y += Self::y_at(&state.y, t - i);
                lag_alpha += Self::alpha_at(&state.alpha, t - i);
            }
        }
        let shape = self.priors.a_mu + self.sum_x as f64 - lag_y as f64;
        let rate = self.priors.b_mu + t_len as f64 - lag_alpha;
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

    /// One systematic scan: all y_t, all alpha_t (ascending t), then mu.
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
            self.update_alpha_t(state, t, config.alpha_grid_n, rng)?;
            counters.alpha_updates += 1;
        }
        self.update_mu(state, rng)?;
        counters.mu_updates += 1;
        debug_assert!(self.is_feasible(state));
        Ok(())
    }

    pub fn init_state(&self, init: &InitStrategy, _rng: &mut RngStream) -> Result<GibbsState> {
        let t_len = self.x.len();
        let mu = moment_mu_init(self.x);
        let alpha0 = moment_alpha_init(1.0 / (self.p as f64 + 1.0));
        let y = match init {
            InitStrategy::Moments => vec![0u64; t_len],
            InitStrategy::Latents { y, .. } => {
                if y.len() != t_len {
                    return Err(Error::domain(format!(
                        "latent init has length {}, expected {t_len}",
                        y.len()
                    )));
                }
                y.clone()
            }
        };
        let state = GibbsState { y, w: Vec::new(), alpha: vec![alpha0; t_len], mu };
        if !self.is_feasible(&state) {
            return Err(Error::infeasible("initial latents violate the window counts"));
        }
        Ok(state)
    }

    /// x_t >= sum of y over every window.
    pub fn is_feasible(&self, state: &GibbsState) -> bool {
        (1..=self.x.len())
            .all(|anchor| self.x[anchor - 1] >= self.window_y_sum(&state.y, anchor, None))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_sum_exp(v: &[f64]) -> f64 {
        let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
    }

    fn state(y: Vec<u64>, alpha: Vec<f64>, mu: f64) -> GibbsState {
        GibbsState { y, w: Vec::new(), alpha, mu }
    }

    #[test]
    fn p0_y_conditional_is_binomial() {
        // with no temporal coupling the y_t conditional collapses to the
        // exact thinning posterior Bin(x_t, alpha_t)
        let data = CountSeries::from_counts("d", vec![5, 2, 7]).unwrap();
        let sampler = TypeAGibbs::new(&data, 0, &Priors::default()).unwrap();
        let st = state(vec![0, 0, 0], vec![0.3, 0.6, 0.12], 2.7);
        for t in 1..=3 {
            let x_t = data.x[t - 1];
            let logw: Vec<f64> = (0..=x_t).map(|v| sampler.log_cond_y(&st, t, v)).collect();
            let norm = log_sum_exp(&logw);
            for v in 0..=x_t {
                let expect = crate::dist::binom_logpmf(v, x_t, st.alpha[t - 1]).unwrap();
                let got = logw[v as usize] - norm;
                assert!((got - expect).abs() < 1e-10, "t={t} v={v}: {got} vs {expect}");
            }
        }
    }

    #[test]
    fn zero_window_forces_zero_draw() {
        let data = CountSeries::from_counts("d", vec![0, 0, 5]).unwrap();
        let sampler = TypeAGibbs::new(&data, 1, &Priors::default()).unwrap();
        let mut st = state(vec![0, 0, 0], vec![0.2, 0.2, 0.2], 2.0);
        let mut rng = RngStream::new(1, 0);
        assert_eq!(sampler.c_bound(&st, 1), 0);
        for _ in 0..50 {
            assert_eq!(sampler.update_y_t(&mut st, 1, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn y_conditional_matches_joint_section() {
        // brute force: vary y_1 in the full augmented joint and normalize
        let data = CountSeries::from_counts("d", vec![2, 1, 2]).unwrap();
        let sampler = TypeAGibbs::new(&data, 1, &Priors::default()).unwrap();
        let st = state(vec![0, 0, 0], vec![0.2, 0.2, 0.2], 2.0);

        let joint = |y1: u64| -> f64 {
            let y = [y1, 0, 0];
            let x = [2u64, 1, 2];
            let alpha = [0.2, 0.2, 0.2];
            let mu = 2.0;
            let mut lp = 0.0;
            for t in 1..=3usize {
                let y_sum = y[t - 1] + if t >= 2 { y[t - 2] } else { 0 };
                let a_sum = alpha[t - 1] + if t >= 2 { alpha[t - 2] } else { 0.0 };
                if x[t - 1] < y_sum {
                    return f64::NEG_INFINITY;
                }
                lp += crate::dist::pois_logpmf(x[t - 1] - y_sum, mu * (1.0 - a_sum)).unwrap();
                lp += crate::dist::pois_logpmf(y[t - 1], mu * alpha[t - 1]).unwrap();
            }
            lp
        };

        let c = sampler.c_bound(&st, 1);
        assert_eq!(c, 1); // min(x_1, x_2 - y_2... ) = min(2, 1)
        let cond: Vec<f64> = (0..=c as u64).map(|v| sampler.log_cond_y(&st, 1, v)).collect();
        let oracle: Vec<f64> = (0..=c as u64).map(joint).collect();
        let (cn, on) = (log_sum_exp(&cond), log_sum_exp(&oracle));
        for v in 0..=c as usize {
            assert!(
                ((cond[v] - cn) - (oracle[v] - on)).abs() < 1e-12,
                "v={v}: {} vs {}",
                cond[v] - cn,
                oracle[v] - on
            );
        }
    }

    #[test]
    fn p0_alpha_conditional_is_conjugate_beta() {
        // p = 0 and flat priors: the conditional is Beta(1 + y, 1 + x - y)
        let data = CountSeries::from_counts("d", vec![4]).unwrap();
        let priors = Priors { a_alpha: 1.0, b_alpha: 1.0, ..Priors::default() };
        let sampler = TypeAGibbs::new(&data, 0, &priors).unwrap();
        let mut st = state(vec![2], vec![0.5], 3.0);
        let mut rng = RngStream::new(7, 0);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sampler.update_alpha_t(&mut st, 1, 512, &mut rng).unwrap();
        }
        let mean = sum / n as f64;
        let expect = (2.0 + 1.0) / (4.0 + 2.0); // Beta(3, 3) mean
        assert!((mean - expect).abs() < 0.005, "mean={mean} expect={expect}");
    }

    #[test]
    fn alpha_draws_stay_below_support_bound() {
        let data = CountSeries::from_counts("d", vec![6, 3, 4, 5]).unwrap();
        let sampler = TypeAGibbs::new(&data, 1, &Priors::default()).unwrap();
        let mut st = state(vec![3, 0, 1, 2], vec![0.3, 0.3, 0.3, 0.3], 4.0);
        let mut rng = RngStream::new(8, 0);
        for _ in 0..500 {
            for t in 1..=4 {
                let d = sampler.d_bound(&st, t).min(1.0);
                let a = sampler.update_alpha_t(&mut st, t, 256, &mut rng).unwrap();
                assert!(a > 0.0 && a < d, "t={t} a={a} d={d}");
            }
        }
    }

    #[test]
    fn alpha_grid_refinement_total_variation() {
        // y_t >= 1 keeps the density grid-resolvable under the 0.01 prior
        // (at y_t = 0 the alpha^{a_alpha-1} spike defeats any uniform grid)
        let data = CountSeries::from_counts("d", vec![6, 3, 4, 5]).unwrap();
        let sampler = TypeAGibbs::new(&data, 1, &Priors::default()).unwrap();
        let st = state(vec![2, 1, 1, 2], vec![0.3, 0.3, 0.3, 0.3], 4.0);
        let t = 2;
        let hi = sampler.d_bound(&st, t).min(1.0);

        let cell_masses = |n: usize| -> Vec<f64> {
            let width = hi / n as f64;
            let logw: Vec<f64> = (0..n)
                .map(|k| sampler.log_cond_alpha(&st, t, (k as f64 + 0.5) * width))
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
    fn mu_conditional_reduces_to_poisson_gamma_conjugacy() {
        let data = CountSeries::from_counts("d", vec![3, 5, 1]).unwrap();
        let priors = Priors::default();
        // p = 0: no lag terms at all
        let sampler = TypeAGibbs::new(&data, 0, &priors).unwrap();
        let st = state(vec![1, 2, 0], vec![0.4, 0.4, 0.4], 2.0);
        let (shape, rate) = sampler.mu_conditional(&st);
        assert!((shape - (priors.a_mu + 9.0)).abs() < 1e-12);
        assert!((rate - (priors.b_mu + 3.0)).abs() < 1e-12);

        // p >= 1 with all alpha, y = 0 degenerates the same way
        let sampler = TypeAGibbs::new(&data, 1, &priors).unwrap();
        let st = state(vec![0, 0, 0], vec![0.0, 0.0, 0.0], 2.0);
        let (shape, rate) = sampler.mu_conditional(&st);
        assert!((shape - (priors.a_mu + 9.0)).abs() < 1e-12);
        assert!((rate - (priors.b_mu + 3.0)).abs() < 1e-12);
    }

    #[test]
    fn mu_conditional_matches_joint_profile() {
        // the sign of the lagged-alpha term in the rate is settled here:
        // the gamma log-density must track the mu-section of
        // prior x augmented likelihood up to a constant
        let data = CountSeries::from_counts("d", vec![2, 1, 2]).unwrap();
        let priors = Priors { a_alpha: 1.0, b_alpha: 1.0, a_mu: 1.5, b_mu: 0.7 };
        let sampler = TypeAGibbs::new(&data, 1, &priors).unwrap();
        let st = state(vec![1, 0, 1], vec![0.25, 0.15, 0.3], 2.0);

        let joint_mu = |mu: f64| -> f64 {
            let x = [2u64, 1, 2];
            let (y, alpha) = (&st.y, &st.alpha);
            let mut lp = (priors.a_mu - 1.0) * mu.ln() - priors.b_mu * mu;
            for t in 1..=3usize {
                let y_sum = y[t - 1] + if t >= 2 { y[t - 2] } else { 0 };
                let a_sum = alpha[t - 1] + if t >= 2 { alpha[t - 2] } else { 0.0 };
                lp += crate::dist::pois_logpmf(x[t - 1] - y_sum, mu * (1.0 - a_sum)).unwrap();
                lp += crate::dist::pois_logpmf(y[t - 1], mu * alpha[t - 1]).unwrap();
            }
            lp
        };

        let (shape, rate) = sampler.mu_conditional(&st);
        let gamma_logpdf = |mu: f64| (shape - 1.0) * mu.ln() - rate * mu;

        let mu0 = 1.0;
        let offset = joint_mu(mu0) - gamma_logpdf(mu0);
        let mut worst = 0.0f64;
        for k in 0..200 {
            let mu = 0.1 + (20.0 - 0.1) * (k as f64 + 0.5) / 200.0;
            let dev = (joint_mu(mu) - gamma_logpdf(mu) - offset).abs();
            worst = worst.max(dev);
        }
        assert!(worst < 1e-8, "max profile deviation {worst}");
    }

    #[test]
    fn alpha_conditional_matches_joint_profile() {
        let data = CountSeries::from_counts("d", vec![2, 1, 2]).unwrap();
        let priors = Priors { a_alpha: 0.8, b_alpha: 1.3, a_mu: 1.0, b_mu: 1.0 };
        let sampler = TypeAGibbs::new(&data, 1, &priors).unwrap();
        let st = state(vec![1, 0, 1], vec![0.25, 0.15, 0.3], 2.0);

        for t in 1..=3usize {
            let joint_alpha = |a: f64| -> f64 {
                let x = [2u64, 1, 2];
                let mut alpha = st.alpha.clone();
                alpha[t - 1] = a;
                let mut lp = (priors.a_alpha - 1.0) * a.ln()
                    + (priors.b_alpha - 1.0) * (1.0 - a).ln();
                for u in 1..=3usize {
                    let y_sum = st.y[u - 1] + if u >= 2 { st.y[u - 2] } else { 0 };
                    let a_sum = alpha[u - 1] + if u >= 2 { alpha[u - 2] } else { 0.0 };
                    lp += crate::dist::pois_logpmf(x[u - 1] - y_sum, st.mu * (1.0 - a_sum))
                        .unwrap();
                    lp += crate::dist::pois_logpmf(st.y[u - 1], st.mu * alpha[u - 1]).unwrap();
                }
                lp
            };

            let hi = sampler.d_bound(&st, t).min(1.0);
            let a0 = hi / 2.0;
            let offset = joint_alpha(a0) - sampler.log_cond_alpha(&st, t, a0);
            let mut worst = 0.0f64;
            for k in 0..200 {
                let a = hi * (k as f64 + 0.5) / 200.0;
                let dev = (joint_alpha(a) - sampler.log_cond_alpha(&st, t, a) - offset).abs();
                worst = worst.max(dev);
            }
            assert!(worst < 1e-8, "t={t}: max profile deviation {worst}");
        }
    }
}
