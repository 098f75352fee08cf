//! Flip probability vectors `p_1..p_{N_max}`.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, q, qi, Q};

/// The vector `{p_α}` with `p_0 = 0` and `p_α = 0` for `α > N_max`.
#[derive(Debug, Clone)]
pub struct FlipProbabilities {
    // p[0] = 0, p[α] for 1 <= α <= n_max.
    p: Vec<Q>,
    pf: Vec<f64>,
}

impl FlipProbabilities {
    /// Takes `p_1..p_{N_max}` and checks `1 = p_1 ≥ p_2 ≥ … ≥ 0` and `α·p_α ≤ 1`.
    pub fn new(values: Vec<Q>) -> Result<FlipProbabilities> {
        if values.is_empty() {
            return Err(Error::Invariant("need at least p_1".into()));
        }
        if !values[0].is_one() {
            return Err(Error::Invariant(format!(
                "p_1 must be 1, got {}",
                rational::fmt(&values[0])
            )));
        }
        for (i, w) in values.windows(2).enumerate() {
            if w[1] > w[0] {
                return Err(Error::Invariant(format!("p_{} > p_{}", i + 2, i + 1)));
            }
        }
        if values.last().is_some_and(|x| x < &Q::zero()) {
            return Err(Error::Invariant("negative probability".into()));
        }
        for (i, x) in values.iter().enumerate() {
            if qi(i as i64 + 1) * x > Q::one() {
                return Err(Error::Invariant(format!("{}·p_{} > 1", i + 1, i + 1)));
            }
        }
        let mut p = vec![Q::zero()];
        p.extend(values);
        let pf = p.iter().map(rational::to_f64).collect();
        Ok(FlipProbabilities { p, pf })
    }

    /// Vigoda's vector: `p_2 = 13/42`, zero from `α = 7` on.
    pub fn vigoda() -> FlipProbabilities {
        Self::new(vec![qi(1), q(13, 42), q(1, 6), q(2, 21), q(1, 21), q(1, 84)]).expect("valid preset")
    }

    /// The alternative vector with `p_2 = 463/1500`.
    pub fn alt() -> FlipProbabilities {
        Self::new(vec![
            qi(1),
            q(463, 1500),
            q(1, 6),
            q(287, 3000),
            q(29, 600),
            q(71, 3000),
        ])
        .expect("valid preset")
    }

    /// Glauber-like vector: only singletons flip.
    pub fn singletons() -> FlipProbabilities {
        Self::new(vec![qi(1)]).expect("valid preset")
    }

    pub fn n_max(&self) -> usize {
        self.p.len() - 1
    }

    /// `p_α`, zero outside `1..=N_max`.
    pub fn p(&self, alpha: usize) -> Q {
        self.p.get(alpha).cloned().unwrap_or_else(Q::zero)
    }

    pub fn p_ref(&self, alpha: usize) -> Option<&Q> {
        self.p.get(alpha)
    }

    pub fn pf(&self, alpha: usize) -> f64 {
        self.pf.get(alpha).copied().unwrap_or(0.0)
    }

    /// `p_1..p_{N_max}`.
    pub fn values(&self) -> &[Q] {
        &self.p[1..]
    }

    /// The optional strengthening `α·p_{α−2} ≤ 3` for `α ≥ 3`.
    pub fn satisfies_cap3(&self) -> bool {
        (3..=self.n_max() + 2).all(|a| qi(a as i64) * self.p(a - 2) <= qi(3))
    }

    pub fn to_json(&self) -> String {
        let file = ProbFile {
            p: self.values().iter().map(rational::fmt).collect(),
        };
        serde_json::to_string(&file).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<FlipProbabilities> {
        let file: ProbFile = serde_json::from_str(text).map_err(|e| Error::Input(e.to_string()))?;
        let values = file.p.iter().map(|s| rational::parse(s)).collect::<Result<Vec<_>>>()?;
        Self::new(values)
    }
}

impl PartialEq for FlipProbabilities {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p
    }
}

impl Eq for FlipProbabilities {}

#[derive(Serialize, Deserialize)]
struct ProbFile {
    p: Vec<String>,
}

/// Numeric types the coupling code can run in: exact rationals or `f64`.
pub trait Weight: Clone + PartialOrd + num_traits::Num {
    fn prob(probs: &FlipProbabilities, alpha: usize) -> Self;
    fn from_count(x: usize) -> Self;
}

impl Weight for BigRational {
    fn prob(probs: &FlipProbabilities, alpha: usize) -> Self {
        probs.p(alpha)
    }
    fn from_count(x: usize) -> Self {
        qi(x as i64)
    }
}

impl Weight for f64 {
    fn prob(probs: &FlipProbabilities, alpha: usize) -> Self {
        probs.pf(alpha)
    }
    fn from_count(x: usize) -> Self {
        x as f64
    }
}
