//! Floating-point oracles at a fixed `ε`: the finite-horizon conditional
//! entropy by full enumeration, a Monte Carlo entropy-rate estimate, and
//! plug-in evaluation of an expansion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expansion::ExpansionResult;
use crate::hmm::HmmModel;
use crate::linalg::stationary_f64;
use crate::rational::to_f64;
use crate::series::{Precision, RealSum};
use crate::tree::{walk, SequenceTree, WalkStats};

/// Default cap on `A^{n+1}` for [`exact_hn`] (binary alphabets up to `n = 16`).
pub const DEFAULT_SEQUENCE_BUDGET: u128 = 1 << 17;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("ε = {0} is outside (0, 1/2]")]
    Epsilon(f64),
    #[error("{symbols}^{length} sequences exceed the enumeration budget {budget}")]
    Budget {
        symbols: usize,
        length: usize,
        budget: u128,
    },
    #[error("sample length {0} is below 1000")]
    Samples(usize),
    #[error("Δ(ε) has a negative entry or a row that does not sum to 1 at ε = {0}")]
    NotStochastic(f64),
    #[error("Δ(ε) has no unique stationary distribution at ε = {0}")]
    NoStationary(f64),
    #[error("forward recursion underflow at step {step}: mass {mass}")]
    Underflow { step: usize, mass: f64 },
}

fn check_eps(eps: f64) -> Result<(), NumericError> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(NumericError::Epsilon(eps));
    }
    Ok(())
}

/// `Δ(ε)` in double precision with its stationary vector.
struct Instance {
    rows: Vec<Vec<f64>>,
    /// `leaf[a][i] = Σ_{j : Φ(j)=a} Δ_ij`.
    leaf: Vec<Vec<f64>>,
    by_symbol: Vec<Vec<usize>>,
    phi: Vec<usize>,
    pi: Vec<f64>,
}

impl Instance {
    fn new(model: &HmmModel, eps: f64) -> Result<Self, NumericError> {
        let rows = model.eval(eps);
        for row in &rows {
            if row.iter().any(|x| *x < 0.0) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(NumericError::NotStochastic(eps));
            }
        }
        let pi = stationary_f64(&rows).ok_or(NumericError::NoStationary(eps))?;
        let by_symbol: Vec<Vec<usize>> = (0..model.symbols()).map(|a| model.states_for(a).to_vec()).collect();
        let leaf = by_symbol
            .iter()
            .map(|cols| rows.iter().map(|r| cols.iter().map(|&j| r[j]).sum()).collect())
            .collect();
        Ok(Self {
            rows,
            leaf,
            by_symbol,
            phi: model.phi().to_vec(),
            pi,
        })
    }

    /// Per-symbol masses `b · Δ_a · 1`.
    fn masses(&self, belief: &[f64]) -> Vec<f64> {
        self.leaf
            .iter()
            .map(|r| belief.iter().zip(r).map(|(b, x)| b * x).sum())
            .collect()
    }
}

struct NumNode {
    prob: f64,
    belief: Vec<f64>,
    masses: Vec<f64>,
    total: f64,
}

struct NumericTree<'a> {
    inst: &'a Instance,
}

impl NumericTree<'_> {
    fn node(&self, prob: f64, belief: Vec<f64>) -> NumNode {
        let masses = self.inst.masses(&belief);
        let total = masses.iter().sum();
        NumNode {
            prob,
            belief,
            masses,
            total,
        }
    }
}

impl SequenceTree for NumericTree<'_> {
    type Node = NumNode;
    type Leaf = f64;

    fn symbols(&self) -> usize {
        self.inst.by_symbol.len()
    }

    fn child(&self, node: &NumNode, symbol: usize) -> Option<NumNode> {
        let mass = node.masses[symbol];
        if mass <= 0.0 {
            return None;
        }
        let mut next = vec![0.0; node.belief.len()];
        for &j in &self.inst.by_symbol[symbol] {
            next[j] = node
                .belief
                .iter()
                .zip(&self.inst.rows)
                .map(|(b, r)| b * r[j])
                .sum::<f64>()
                / mass;
        }
        Some(self.node(node.prob * mass / node.total, next))
    }

    /// `−p(z) log p(z_0 | prefix)`.
    fn leaf(&self, node: &NumNode, symbol: usize) -> Option<f64> {
        let mass = node.masses[symbol];
        if mass <= 0.0 {
            return None;
        }
        let cond = mass / node.total;
        Some(-node.prob * cond * cond.ln())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactHnConfig {
    /// Upper bound on `A^{n+1}`.
    pub budget: u128,
    pub precision: Precision,
}

impl Default for ExactHnConfig {
    fn default() -> Self {
        Self {
            budget: DEFAULT_SEQUENCE_BUDGET,
            precision: Precision::Extended,
        }
    }
}

/// `H_n(ε) = H(Z_0 | Z_{-n}^{-1})` in nats, by summing over every sequence of
/// length `n + 1` with double-precision beliefs.
pub fn exact_hn(model: &HmmModel, n: usize, eps: f64) -> Result<f64, NumericError> {
    exact_hn_with(model, n, eps, &ExactHnConfig::default()).map(|(h, _)| h)
}

pub fn exact_hn_with(
    model: &HmmModel,
    n: usize,
    eps: f64,
    cfg: &ExactHnConfig,
) -> Result<(f64, WalkStats), NumericError> {
    check_eps(eps)?;
    let symbols = model.symbols();
    let size = (symbols as u128).checked_pow(n as u32 + 1).unwrap_or(u128::MAX);
    if size > cfg.budget {
        return Err(NumericError::Budget {
            symbols,
            length: n + 1,
            budget: cfg.budget,
        });
    }
    let inst = Instance::new(model, eps)?;
    let tree = NumericTree { inst: &inst };
    let root = tree.node(1.0, inst.pi.clone());
    let precision = cfg.precision;
    let (sum, stats) = walk(
        &tree,
        vec![root],
        n,
        || RealSum::new(precision),
        |acc, _, x| acc.add(x),
        |mut a, b| {
            a.merge(&b);
            a
        },
    );
    Ok((sum.value(), stats))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: usize,
    pub burnin: usize,
    pub seed: u64,
    pub eps: f64,
}

impl McConfig {
    pub fn validate(&self) -> Result<(), NumericError> {
        check_eps(self.eps)?;
        if self.samples < 1000 {
            return Err(NumericError::Samples(self.samples));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub block_len: usize,
    pub blocks: usize,
    /// Largest `|Σ belief − 1|` seen along the path.
    pub max_simplex_drift: f64,
}

/// Bootstrap resamples for the standard error.
const BOOTSTRAP_RESAMPLES: usize = 400;

/// `−(1/N) log p(z_1^N)` along one sampled path, after `burnin` steps that
/// move the hidden chain and the filter but are not counted.
///
/// The generator is ChaCha8 seeded from `seed`; the same seed reproduces the
/// same estimate bit for bit. The standard error comes from a
/// non-overlapping block bootstrap with block length `⌊√N⌋`.
pub fn mc_entropy(model: &HmmModel, cfg: &McConfig) -> Result<McEstimate, NumericError> {
    cfg.validate()?;
    let inst = Instance::new(model, cfg.eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cumulative: Vec<Vec<f64>> = inst
        .rows
        .iter()
        .map(|r| {
            r.iter()
                .scan(0.0, |s, x| {
                    *s += x;
                    Some(*s)
                })
                .collect()
        })
        .collect();
    let draw = |cum: &[f64], rng: &mut ChaCha8Rng| {
        let u = rng.random::<f64>() * cum[cum.len() - 1];
        cum.partition_point(|c| *c <= u).min(cum.len() - 1)
    };
    let pi_cum: Vec<f64> = inst
        .pi
        .iter()
        .scan(0.0, |s, x| {
            *s += x;
            Some(*s)
        })
        .collect();

    let mut y = draw(&pi_cum, &mut rng);
    let mut belief = inst.pi.clone();
    let mut drift: f64 = 0.0;
    let mut logs = Vec::with_capacity(cfg.samples);
    let single = model.symbols() == 1;
    for step in 0..cfg.burnin + cfg.samples {
        y = draw(&cumulative[y], &mut rng);
        let z = inst.phi[y];
        let masses = inst.masses(&belief);
        let total: f64 = masses.iter().sum();
        let cond = masses[z] / total;
        if !(cond > 0.0 && cond.is_finite()) {
            return Err(NumericError::Underflow { step, mass: cond });
        }
        let mut next = vec![0.0; belief.len()];
        for &j in &inst.by_symbol[z] {
            next[j] = belief.iter().zip(&inst.rows).map(|(b, r)| b * r[j]).sum();
        }
        let s: f64 = next.iter().sum();
        if !(s > 0.0 && s.is_finite()) {
            return Err(NumericError::Underflow { step, mass: s });
        }
        for b in &mut next {
            *b /= s;
        }
        drift = drift.max((next.iter().sum::<f64>() - 1.0).abs());
        belief = next;
        if step >= cfg.burnin {
            logs.push(if single { 0.0 } else { -cond.ln() });
        }
    }

    let n = logs.len();
    let mut total = RealSum::new(Precision::Extended);
    for x in &logs {
        total.add(*x);
    }
    let estimate = total.value() / n as f64;
    let block_len = ((n as f64).sqrt() as usize).max(1);
    let blocks = n / block_len;
    let means: Vec<f64> = (0..blocks)
        .map(|b| logs[b * block_len..(b + 1) * block_len].iter().sum::<f64>() / block_len as f64)
        .collect();
    let mut boot = ChaCha8Rng::seed_from_u64(cfg.seed);
    boot.set_stream(1);
    let resampled: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..blocks).map(|_| means[boot.random_range(0..blocks)]).sum::<f64>() / blocks as f64)
        .collect();
    let mean = resampled.iter().sum::<f64>() / resampled.len() as f64;
    let var = resampled.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (resampled.len() - 1) as f64;
    Ok(McEstimate {
        estimate,
        stderr: var.sqrt(),
        block_len,
        blocks,
        max_simplex_drift: drift,
    })
}

/// `h0 + Σ f_j ε^j log ε + Σ g_j ε^j`.
pub fn eval_expansion(r: &ExpansionResult, eps: f64) -> f64 {
    let log = eps.ln();
    let mut acc = RealSum::new(Precision::Extended);
    acc.add(r.h0);
    for (j, f) in r.f.iter().enumerate() {
        acc.add(to_f64(f) * eps.powi(j as i32 + 1) * log);
    }
    for (j, g) in r.g.iter().enumerate() {
        acc.add(g * eps.powi(j as i32 + 1));
    }
    acc.value()
}

/// Whether the remainder of an order-`k` expansion shrinks at least like
/// `ε^{k+1}` between `eps_hi > eps_lo`, up to a factor-2 allowance for log
/// factors: `err(eps_hi) / err(eps_lo) ≥ (eps_hi/eps_lo)^{k+1} / 2`.
pub fn remainder_law_holds(k: usize, eps_hi: f64, err_hi: f64, eps_lo: f64, err_lo: f64) -> bool {
    let required = (eps_hi / eps_lo).powi(k as i32 + 1) / 2.0;
    err_lo == 0.0 && err_hi == 0.0 || err_hi >= required * err_lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{bsc_model, MarkovInput};
    use crate::rational::rational;
    use crate::series::TruncSeries;

    fn ordentlich() -> HmmModel {
        bsc_model(&MarkovInput::ordentlich(rational(1, 2)).unwrap()).unwrap()
    }

    #[test]
    fn single_symbol_is_zero() {
        let m = HmmModel::new(vec![vec![TruncSeries::one(1)]], vec![0], 1).unwrap();
        assert_eq!(exact_hn(&m, 6, 0.1).unwrap(), 0.0);
        let cfg = McConfig {
            samples: 2000,
            burnin: 10,
            seed: 1,
            eps: 0.1,
        };
        assert_eq!(mc_entropy(&m, &cfg).unwrap().estimate, 0.0);
    }

    #[test]
    fn iid_uniform_is_log_two() {
        let input = MarkovInput::binary(rational(1, 2), rational(1, 2)).unwrap();
        let m = bsc_model(&input).unwrap();
        let h = exact_hn(&m, 8, 0.05).unwrap();
        assert!((h - std::f64::consts::LN_2).abs() < 1e-12);
        let est = mc_entropy(
            &m,
            &McConfig {
                samples: 20_000,
                burnin: 100,
                seed: 3,
                eps: 0.05,
            },
        )
        .unwrap();
        assert!((est.estimate - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn monotone_in_horizon() {
        let m = ordentlich();
        let mut prev = f64::INFINITY;
        for n in 4..=12 {
            let h = exact_hn(&m, n, 0.05).unwrap();
            assert!(h <= prev + 1e-14, "n = {n}");
            prev = h;
        }
    }

    #[test]
    fn budget_and_argument_errors() {
        let m = ordentlich();
        assert!(matches!(exact_hn(&m, 17, 0.1), Err(NumericError::Budget { .. })));
        assert_eq!(exact_hn(&m, 4, 0.0), Err(NumericError::Epsilon(0.0)));
        let cfg = McConfig {
            samples: 10,
            burnin: 0,
            seed: 0,
            eps: 0.1,
        };
        assert_eq!(mc_entropy(&m, &cfg), Err(NumericError::Samples(10)));
    }

    #[test]
    fn mc_is_reproducible() {
        let cfg = McConfig {
            samples: 5000,
            burnin: 100,
            seed: 42,
            eps: 0.05,
        };
        let a = mc_entropy(&ordentlich(), &cfg).unwrap();
        let b = mc_entropy(&ordentlich(), &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.max_simplex_drift < 1e-12);
    }

    #[test]
    fn shares_tree_with_exact_path() {
        use crate::expansion::{bound_at, BoundKind};
        let m = ordentlich();
        for (num, den) in [(1, 100), (1, 1000), (1, 7)] {
            let eps = rational(num, den);
            let exact = bound_at(&m, 8, &eps, BoundKind::Upper).unwrap();
            let numeric = exact_hn(&m, 8, num as f64 / den as f64).unwrap();
            assert!((exact - numeric).abs() < 1e-13, "{exact} vs {numeric}");
        }
    }

    #[test]
    fn remainder_law() {
        assert!(remainder_law_holds(0, 1e-3, 1e-3, 1e-4, 1e-4));
        assert!(!remainder_law_holds(1, 1e-3, 1e-6, 1e-4, 1e-7));
        assert!(remainder_law_holds(1, 1e-3, 1e-6, 1e-4, 1e-8));
    }
}
