//! Data-augmented Gibbs sampler for the INAR(1) baseline.
//!
//! The augmentation introduces the thinned counts y_t = alpha o x_{t-1}
//! for t = 2..T; X_1 is conditioned on its stationary Po(mu) law so the
//! first observation also informs mu. The state stores alpha as a
//! length-one vector.

use crate::dist::{
    binom_logpmf, pois_logpmf, sample_finite_logweights, sample_gamma, sample_grid_density,
    LogWeightTable, RngStream,
};
use crate::error::{Error, Result};
use crate::inference::{ChainCounters, GibbsConfig, GibbsState, InitStrategy, Priors};
use crate::model::CountSeries;

pub struct Inar1Gibbs<'a> {
    x: &'a [u64],
    priors: Priors,
}

impl<'a> Inar1Gibbs<'a> {
    pub fn new(data: &'a CountSeries, priors: &Priors) -> Result<Self> {
        if data.len() < 2 {
            return Err(Error::domain("INAR(1) inference needs at least two observations"));
        }
        Ok(Inar1Gibbs { x: &data.x, priors: *priors })
    }

    pub fn horizon(&self) -> usize {
        self.x.len()
    }

    /// Unnormalized log-mass of y_t = v for t in 2..=T (-inf off support).
    pub fn log_cond_y(&self, state: &GibbsState, t: usize, v: u64) -> f64 {
        debug_assert!(t >= 2);
        let (prev, cur) = (self.x[t - 2], self.x[t - 1]);
        if v > prev.min(cur) {
            return f64::NEG_INFINITY;
        }
        let alpha = state.alpha[0];
        let rate = state.mu * (1.0 - alpha);
        let binom = match binom_logpmf(v, prev, alpha) {
            Ok(l) => l,
            Err(_) => return f64::NEG_INFINITY,
        };
        let pois = match pois_logpmf(cur - v, rate) {
            Ok(l) => l,
            Err(_) => return f64::NEG_INFINITY,
        };
        binom + pois
    }

    /// Exact draw of the thinned count on {0, ..., min(x_{t-1}, x_t)}.
    pub fn update_y_t(&self, state: &mut GibbsState, t: usize, rng: &mut RngStream) -> Result<u64> {
        let m = self.x[t - 2].min(self.x[t - 1]);
        let logw: Vec<f64> = (0..=m).map(|v| self.log_cond_y(state, t, v)).collect();
        let table = LogWeightTable::new(0, logw)?;
        let v = sample_finite_logweights(&table, rng) as u64;
        state.y[t - 1] = v;
        Ok(v)
    }

    /// Unnormalized log-density of alpha on (0, 1):
    /// a^{a_alpha + sum y - 1} (1-a)^{b_alpha + sum(x_{t-1} - y_t) + sum(x_t - y_t) - 1}
    /// e^{mu (T-1) a}.
    pub fn log_cond_alpha(&self, state: &GibbsState, a: f64) -> f64 {
        if !(a > 0.0 && a < 1.0) {
            return f64::NEG_INFINITY;
        }
        let t_len = self.x.len();
        let mut sum_y = 0u64;
        let mut sum_miss = 0u64; // x_{t-1} - y_t
        let mut sum_innov = 0u64; // x_t - y_t
        for t in 2..=t_len {
            let y = state.y[t - 1];
            sum_y += y;
            sum_miss += self.x[t - 2] - y;
            sum_innov += self.x[t - 1] - y;
        }
        (self.priors.a_alpha + sum_y as f64 - 1.0) * a.ln()
            + (self.priors.b_alpha + sum_miss as f64 + sum_innov as f64 - 1.0) * (1.0 - a).ln()
            + state.mu * (t_len as f64 - 1.0) * a
    }

    pub fn update_alpha(
        &self,
        state: &mut GibbsState,
        grid_n: usize,
        rng: &mut RngStream,
    ) -> Result<f64> {
        let a = sample_grid_density(|a| self.log_cond_alpha(state, a), 0.0, 1.0, grid_n, rng)?;
        state.alpha[0] = a;
        Ok(a)
    }

    /// Gamma(shape, rate) of the mu conditional, treating X_1 ~ Po(mu):
    /// shape = a_mu + x_1 + sum_{t>=2}(x_t - y_t),
    /// rate = b_mu + 1 + (T-1)(1 - alpha).
    pub fn mu_conditional(&self, state: &GibbsState) -> (f64, f64) {
        let t_len = self.x.len();
        let innov: u64 = (2..=t_len).map(|t| self.x[t - 1] - state.y[t - 1]).sum();
        let shape = self.priors.a_mu + self.x[0] as f64 + innov as f64;
        let rate =
            self.priors.b_mu + 1.0 + (t_len as f64 - 1.0) * (1.0 - state.alpha[0]);
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

    pub fn sweep(
        &self,
        state: &mut GibbsState,
        config: &GibbsConfig,
        rng: &mut RngStream,
        counters: &mut ChainCounters,
    ) -> Result<()> {
        for t in 2..=self.x.len() {
            self.update_y_t(state, t, rng)?;
            counters.y_updates += 1;
        }
        self.update_alpha(state, config.alpha_grid_n, rng)?;
        counters.alpha_updates += 1;
        self.update_mu(state, rng)?;
        counters.mu_updates += 1;
        debug_assert!(self.is_feasible(state));
        Ok(())
    }

    pub fn init_state(&self, init: &InitStrategy, _rng: &mut RngStream) -> Result<GibbsState> {
        let t_len = self.x.len();
        let mu = super::moment_mu_init(self.x);
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
        let state = GibbsState { y, w: Vec::new(), alpha: vec![super::moment_alpha_init(1.0)], mu };
        if !self.is_feasible(&state) {
            return Err(Error::infeasible("initial thinned counts are infeasible"));
        }
        Ok(state)
    }

    pub fn is_feasible(&self, state: &GibbsState) -> bool {
        (2..=self.x.len()).all(|t| state.y[t - 1] <= self.x[t - 2].min(self.x[t - 1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(y: Vec<u64>, alpha: f64, mu: f64) -> GibbsState {
        GibbsState { y, w: Vec::new(), alpha: vec![alpha], mu }
    }

    #[test]
    fn y_draws_respect_both_counts() {
        let data = CountSeries::from_counts("d", vec![3, 5, 1, 4]).unwrap();
        let sampler = Inar1Gibbs::new(&data, &Priors::default()).unwrap();
        let mut st = state(vec![0; 4], 0.6, 3.0);
        let mut rng = RngStream::new(1, 0);
        for _ in 0..200 {
            for t in 2..=4 {
                let v = sampler.update_y_t(&mut st, t, &mut rng).unwrap();
                assert!(v <= data.x[t - 2].min(data.x[t - 1]));
            }
        }
    }

    #[test]
    fn alpha_conditional_reduces_to_beta_for_small_mu() {
        // mu -> 0 and unit priors: Beta(1 + sum y, 1 + sum(x_{t-1}-y) + sum(x_t-y))
        let data = CountSeries::from_counts("d", vec![3, 2, 4]).unwrap();
        let priors = Priors { a_alpha: 1.0, b_alpha: 1.0, ..Priors::default() };
        let sampler = Inar1Gibbs::new(&data, &priors).unwrap();
        let st = state(vec![0, 1, 2], 0.5, 1e-300);
        // sums: y = 3, miss = (3-1)+(2-2) = 2, innov = (2-1)+(4-2) = 3
        let beta_logpdf =
            |a: f64| (1.0 + 3.0 - 1.0) * a.ln() + (1.0 + 2.0 + 3.0 - 1.0) * (1.0 - a).ln();
        let offset = sampler.log_cond_alpha(&st, 0.5) - beta_logpdf(0.5);
        for k in 0..200 {
            let a = (k as f64 + 0.5) / 200.0;
            let dev = (sampler.log_cond_alpha(&st, a) - beta_logpdf(a) - offset).abs();
            assert!(dev < 1e-8, "a={a}: {dev}");
        }
    }

    #[test]
    fn conditionals_match_joint_profiles() {
        let data = CountSeries::from_counts("d", vec![2, 4, 1, 3]).unwrap();
        let priors = Priors { a_alpha: 0.9, b_alpha: 1.1, a_mu: 1.3, b_mu: 0.8 };
        let sampler = Inar1Gibbs::new(&data, &priors).unwrap();
        let st = state(vec![0, 1, 1, 1], 0.45, 2.5);

        let joint = |alpha: f64, mu: f64| -> f64 {
            let x = [2u64, 4, 1, 3];
            let mut lp = (priors.a_alpha - 1.0) * alpha.ln()
                + (priors.b_alpha - 1.0) * (1.0 - alpha).ln()
                + (priors.a_mu - 1.0) * mu.ln()
                - priors.b_mu * mu;
            lp += crate::dist::pois_logpmf(x[0], mu).unwrap();
            for t in 2..=4usize {
                let y = st.y[t - 1];
                lp += crate::dist::binom_logpmf(y, x[t - 2], alpha).unwrap();
                lp += crate::dist::pois_logpmf(x[t - 1] - y, mu * (1.0 - alpha)).unwrap();
            }
            lp
        };

        // alpha section
        let offset = joint(0.5, st.mu) - sampler.log_cond_alpha(&st, 0.5);
        let mut worst = 0.0f64;
        for k in 0..200 {
            let a = (k as f64 + 0.5) / 200.0;
            worst = worst.max((joint(a, st.mu) - sampler.log_cond_alpha(&st, a) - offset).abs());
        }
        assert!(worst < 1e-8, "alpha profile deviation {worst}");

        // mu section
        let (shape, rate) = sampler.mu_conditional(&st);
        let gamma_logpdf = |mu: f64| (shape - 1.0) * mu.ln() - rate * mu;
        let offset = joint(st.alpha[0], 1.0) - gamma_logpdf(1.0);
        let mut worst = 0.0f64;
        for k in 0..200 {
            let mu = 0.1 + (20.0 - 0.1) * (k as f64 + 0.5) / 200.0;
            worst = worst.max((joint(st.alpha[0], mu) - gamma_logpdf(mu) - offset).abs());
        }
        assert!(worst < 1e-8, "mu profile deviation {worst}");
    }
}
