//! Count series, dependence structures, and model parameter containers.
//!
//! A [`DependenceStructure`] stores, for every observed index t, the ordered
//! list D_t of latent indices that feed observation t. Storing the sets
//! explicitly lets one simulation code path serve contiguous order-p,
//! seasonal, periodic, and spatial designs. Latent indices <= 0 are kept in
//! the lists and resolved by the zero convention: latents and thinning
//! probabilities are identically zero there, which keeps the Poisson
//! marginal exact even at boundary times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which of the three model families an object refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "typeA")]
    TypeA,
    #[serde(rename = "typeB")]
    TypeB,
    #[serde(rename = "inar1")]
    Inar1,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::TypeA => "typeA",
            ModelKind::TypeB => "typeB",
            ModelKind::Inar1 => "inar1",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "typea" | "a" => Ok(ModelKind::TypeA),
            "typeb" | "b" => Ok(ModelKind::TypeB),
            "inar1" | "ar" | "inar" => Ok(ModelKind::Inar1),
            other => Err(Error::parse(format!("unknown model kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An observed series of nonnegative integer counts with per-index labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountSeries {
    pub name: String,
    pub labels: Vec<String>,
    pub x: Vec<u64>,
}

impl CountSeries {
    pub fn new(name: impl Into<String>, labels: Vec<String>, x: Vec<u64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::domain("count series must have length >= 1"));
        }
        if labels.len() != x.len() {
            return Err(Error::domain(format!(
                "labels ({}) and counts ({}) differ in length",
                labels.len(),
                x.len()
            )));
        }
        Ok(CountSeries { name: name.into(), labels, x })
    }

    /// Series with labels "1".."T".
    pub fn from_counts(name: impl Into<String>, x: Vec<u64>) -> Result<Self> {
        let labels = (1..=x.len()).map(|t| t.to_string()).collect();
        CountSeries::new(name, labels, x)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Tag describing how a dependence structure was built.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructureKind {
    OrderP { p: usize },
    Seasonal { s: usize, p: usize },
    Periodic { s: usize, orders: Vec<usize> },
    Spatial,
}

/// Per-index sets D_t of latent indices contributing to observation t.
///
/// Indices are 1-based; entries <= 0 are boundary indices resolved by the
/// zero convention. For temporal kinds every entry is <= t and the list is
/// strictly decreasing, so iteration order is deterministic.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependenceStructure {
    horizon: usize,
    kind: StructureKind,
    sets: Vec<Vec<i64>>,
}

impl DependenceStructure {
    /// D_t = (t, t-1, ..., t-p).
    pub fn order_p(horizon: usize, p: usize) -> Result<Self> {
        if horizon < 1 {
            return Err(Error::domain("horizon must be >= 1"));
        }
        let sets = (1..=horizon as i64)
            .map(|t| (0..=p as i64).map(|i| t - i).collect())
            .collect();
        Ok(DependenceStructure { horizon, kind: StructureKind::OrderP { p }, sets })
    }

    /// D_t = (t, t-s, t-2s, ..., t-ps) for seasonality s.
    pub fn seasonal(horizon: usize, p: usize, s: usize) -> Result<Self> {
        if s < 1 {
            return Err(Error::domain(format!("seasonality must be >= 1, got {s}")));
        }
        if horizon < 1 {
            return Err(Error::domain("horizon must be >= 1"));
        }
        let sets = (1..=horizon as i64)
            .map(|t| (0..=p as i64).map(|i| t - (s as i64) * i).collect())
            .collect();
        Ok(DependenceStructure { horizon, kind: StructureKind::Seasonal { s, p }, sets })
    }

    /// Periodic orders (p_1, ..., p_s): index t = (r-1)s + m gets order p_m.
    pub fn periodic(horizon: usize, s: usize, orders: &[usize]) -> Result<Self> {
        if s < 1 || orders.len() != s {
            return Err(Error::domain(format!(
                "periodic orders must have length s = {s}, got {}",
                orders.len()
            )));
        }
        if horizon < 1 {
            return Err(Error::domain("horizon must be >= 1"));
        }
        let sets = (1..=horizon as i64)
            .map(|t| {
                let m = ((t - 1) % s as i64) as usize; // month index, 0-based
                (0..=orders[m] as i64).map(|i| t - i).collect()
            })
            .collect();
        Ok(DependenceStructure {
            horizon,
            kind: StructureKind::Periodic { s, orders: orders.to_vec() },
            sets,
        })
    }

    /// Spatial neighborhoods, taken exactly as provided (1-based site ids).
    ///
    /// Whether a site belongs to its own neighborhood is the caller's
    /// choice; empty neighborhoods give independence.
    pub fn spatial(neighbors: &[Vec<usize>]) -> Result<Self> {
        let horizon = neighbors.len();
        if horizon < 1 {
            return Err(Error::domain("adjacency must cover >= 1 site"));
        }
        let mut sets = Vec::with_capacity(horizon);
        for (site, adj) in neighbors.iter().enumerate() {
            for &j in adj {
                if j < 1 || j > horizon {
                    return Err(Error::domain(format!(
                        "site {}: neighbor index {j} out of range 1..={horizon}",
                        site + 1
                    )));
                }
            }
            sets.push(adj.iter().map(|&j| j as i64).collect());
        }
        Ok(DependenceStructure { horizon, kind: StructureKind::Spatial, sets })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn kind(&self) -> &StructureKind {
        &self.kind
    }

    /// D_t for 1-based t (boundary entries <= 0 included).
    pub fn set(&self, t: usize) -> &[i64] {
        &self.sets[t - 1]
    }

    /// The contiguous order p when this is an order-p structure.
    pub fn contiguous_order(&self) -> Option<usize> {
        match self.kind {
            StructureKind::OrderP { p } => Some(p),
            _ => None,
        }
    }
}

/// Type A parameters: marginal rate and per-index thinning probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeAParams {
    pub mu: f64,
    pub alpha: Vec<f64>,
}

impl TypeAParams {
    pub fn new(mu: f64, alpha: Vec<f64>) -> Self {
        TypeAParams { mu, alpha }
    }

    /// Constant thinning probability (the strictly stationary case).
    pub fn stationary(mu: f64, alpha: f64, horizon: usize) -> Self {
        TypeAParams { mu, alpha: vec![alpha; horizon] }
    }

    /// alpha_t with the zero convention for t <= 0.
    pub fn alpha_at(&self, t: i64) -> f64 {
        if t >= 1 && (t as usize) <= self.alpha.len() {
            self.alpha[t as usize - 1]
        } else {
            0.0
        }
    }
}

/// Type B parameters. `w_divisor` is the denominator of the latent W rate
/// mu / w_divisor; it defaults to p+1, which is the only choice that keeps
/// the Po(mu) marginal for contiguous order-p dependence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeBParams {
    pub mu: f64,
    pub alpha: Vec<f64>,
    pub w_divisor: usize,
}

impl TypeBParams {
    pub fn new(mu: f64, alpha: Vec<f64>, w_divisor: usize) -> Self {
        TypeBParams { mu, alpha, w_divisor }
    }

    pub fn stationary(mu: f64, alpha: f64, horizon: usize, p: usize) -> Self {
        TypeBParams { mu, alpha: vec![alpha; horizon], w_divisor: p + 1 }
    }

    pub fn alpha_at(&self, t: i64) -> f64 {
        if t >= 1 && (t as usize) <= self.alpha.len() {
            self.alpha[t as usize - 1]
        } else {
            0.0
        }
    }
}

/// INAR(1) parameters: X_t = alpha o X_{t-1} + Po(mu(1-alpha)) innovations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inar1Params {
    pub mu: f64,
    pub alpha: f64,
}

impl Inar1Params {
    pub fn new(mu: f64, alpha: f64) -> Self {
        Inar1Params { mu, alpha }
    }
}

/// First constraint violation found by [`validate_type_a`] / [`validate_type_b`].
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    /// 1-based index where the constraint first fails (0 for global ones).
    pub t: usize,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.t > 0 {
            write!(f, "at t={}: {}", self.t, self.message)
        } else {
            f.write_str(&self.message)
        }
    }
}

/// Type A validity: mu > 0, alpha_t > 0, and for every t the thinning
/// probabilities over D_t sum strictly below 1 (boundary indices drop out
/// via the zero convention).
pub fn validate_type_a(
    params: &TypeAParams,
    structure: &DependenceStructure,
) -> std::result::Result<(), Violation> {
    let horizon = structure.horizon();
    if params.alpha.len() != horizon {
        return Err(Violation {
            t: 0,
            message: format!(
                "alpha has length {}, structure horizon is {horizon}",
                params.alpha.len()
            ),
        });
    }
    if !(params.mu.is_finite() && params.mu > 0.0) {
        return Err(Violation { t: 0, message: format!("mu must be positive, got {}", params.mu) });
    }
    for (idx, &a) in params.alpha.iter().enumerate() {
        if !(a.is_finite() && a > 0.0) {
            return Err(Violation {
                t: idx + 1,
                message: format!("alpha must be positive, got {a}"),
            });
        }
    }
    for t in 1..=horizon {
        let sum: f64 = structure.set(t).iter().map(|&i| params.alpha_at(i)).sum();
        if sum >= 1.0 {
            return Err(Violation {
                t,
                message: format!("thinning probabilities over D_t sum to {sum} >= 1"),
            });
        }
    }
    Ok(())
}

/// Type B validity: mu > 0, w_divisor >= 1, and alpha_t in (0,1); no sum
/// constraint is required.
pub fn validate_type_b(
    params: &TypeBParams,
    structure: &DependenceStructure,
) -> std::result::Result<(), Violation> {
    if params.alpha.len() != structure.horizon() {
        return Err(Violation {
            t: 0,
            message: format!(
                "alpha has length {}, structure horizon is {}",
                params.alpha.len(),
                structure.horizon()
            ),
        });
    }
    if !(params.mu.is_finite() && params.mu > 0.0) {
        return Err(Violation { t: 0, message: format!("mu must be positive, got {}", params.mu) });
    }
    if params.w_divisor < 1 {
        return Err(Violation { t: 0, message: "w_divisor must be >= 1".into() });
    }
    for (idx, &a) in params.alpha.iter().enumerate() {
        if !(a.is_finite() && a > 0.0 && a < 1.0) {
            return Err(Violation {
                t: idx + 1,
                message: format!("alpha must lie in (0,1), got {a}"),
            });
        }
    }
    Ok(())
}

/// INAR(1) validity: mu > 0 and alpha in (0,1), so the innovation rate
/// mu(1-alpha) is positive.
pub fn validate_inar1(params: &Inar1Params) -> std::result::Result<(), Violation> {
    if !(params.mu.is_finite() && params.mu > 0.0) {
        return Err(Violation { t: 0, message: format!("mu must be positive, got {}", params.mu) });
    }
    if !(params.alpha.is_finite() && params.alpha > 0.0 && params.alpha < 1.0) {
        return Err(Violation {
            t: 0,
            message: format!("alpha must lie in (0,1), got {}", params.alpha),
        });
    }
    Ok(())
}
