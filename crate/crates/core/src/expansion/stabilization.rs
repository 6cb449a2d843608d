//! Randomized check that conditional-probability coefficients stabilize:
//! two histories sharing their last `n + 1` symbols, each with conditional
//! order at most `k` over the shared part, give the same coefficients `b_j`
//! of `p(z_0 | history)` for `j ≤ n − 4k − 1`.
//!
//! Three start conventions are exercised: the stationary start, starts
//! conditioned on a hidden state before the history, and arbitrary analytic
//! start beliefs.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::forward::{integer_row, ScaledModel};
use crate::hmm::{adjugate_row, HmmModel};
use crate::linalg::stationary_f64;
use crate::rational::{format_rational, integer, Rational};
use crate::series::{Order, TruncSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Both histories start from the stationary distribution.
    Stationary,
    /// Each history additionally conditions on a hidden state before it.
    HiddenState,
    /// The shared window alone, from two random analytic start beliefs.
    StartBelief,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilizationConfig {
    pub n: usize,
    pub k: usize,
    /// Pairs tested per variant.
    pub trials: usize,
    pub seed: u64,
    /// Histories extend the shared window by up to this many symbols.
    pub max_prefix: usize,
    /// Noise level used to sample plausible sequences.
    pub sample_eps: f64,
}

impl StabilizationConfig {
    pub fn new(n: usize, k: usize, trials: usize, seed: u64) -> Self {
        Self {
            n,
            k,
            trials,
            seed,
            max_prefix: 4,
            sample_eps: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub variant: Variant,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub start: String,
    pub degree: usize,
    pub left_coeff: String,
    pub right_coeff: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VariantSummary {
    pub variant: Variant,
    /// Pairs meeting the order condition and compared.
    pub tested: usize,
    /// Sampled pairs violating the order condition or of probability zero.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StabilizationReport {
    pub n: usize,
    pub k: usize,
    /// Largest compared degree `n − 4k − 1`; `None` when the range is empty.
    pub max_degree: Option<usize>,
    pub summaries: Vec<VariantSummary>,
    pub counterexamples: Vec<Counterexample>,
}

impl StabilizationReport {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Highest truncation tried before a pair is declared inconclusive.
const MAX_TRUNC: usize = 96;

struct Sampler {
    rows: Vec<Vec<f64>>,
    start: Vec<f64>,
    phi: Vec<usize>,
}

impl Sampler {
    fn new(model: &HmmModel, eps: f64) -> Self {
        let rows = model.eval(eps);
        let start = stationary_f64(&rows).unwrap_or_else(|| vec![1.0 / rows.len() as f64; rows.len()]);
        Self {
            rows,
            start,
            phi: model.phi().to_vec(),
        }
    }

    fn draw(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                return i;
            }
            u -= w;
        }
        weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
    }

    fn outputs(&self, len: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut y = Self::draw(&self.start, rng);
        (0..len)
            .map(|_| {
                y = Self::draw(&self.rows[y], rng);
                self.phi[y]
            })
            .collect()
    }
}

/// Totals of the unnormalised integer forward vector after each prefix of
/// `z`; they are proportional to `p_s(prefix)` up to a power of `D`.
fn forward_totals(scaled: &ScaledModel, l: usize, start: &[TruncSeries], z: &[usize]) -> Vec<Vec<BigInt>> {
    let mut v = integer_row(start, l);
    let mut totals = Vec::with_capacity(z.len() + 1);
    let mut first = vec![BigInt::zero(); l + 1];
    for e in &v {
        for (t, c) in first.iter_mut().zip(e) {
            *t += c;
        }
    }
    totals.push(first);
    for &a in z {
        let (next, total) = scaled.step(&v, a);
        v = next;
        totals.push(total);
    }
    totals
}

fn poly_ord(p: &[BigInt]) -> Order {
    p.iter().position(|c| !c.is_zero()).map_or(Order::TruncatedZero, Order::Finite)
}

enum Start {
    Stationary,
    Vertex(usize),
    Belief(Vec<TruncSeries>),
}

impl Start {
    fn describe(&self) -> String {
        match self {
            Start::Stationary => "stationary".into(),
            Start::Vertex(y) => format!("hidden state {y}"),
            Start::Belief(v) => {
                let parts: Vec<String> = v
                    .iter()
                    .map(|s| {
                        let c: Vec<String> = s.coeffs().iter().map(format_rational).collect();
                        format!("[{}]", c.join(", "))
                    })
                    .collect();
                format!("belief {}", parts.join(" "))
            }
        }
    }

    fn row(&self, padded: &Padded) -> Option<Vec<TruncSeries>> {
        let (model, stationary, _) = padded;
        let l = model.trunc_len();
        match self {
            Start::Stationary => stationary.clone(),
            Start::Vertex(y) => Some(
                (0..model.states())
                    .map(|i| if i == *y { TruncSeries::one(l) } else { TruncSeries::zero(l) })
                    .collect(),
            ),
            Start::Belief(v) => Some(v.iter().map(|s| s.with_trunc_len(l)).collect()),
        }
    }
}

/// `p(z_0 | history)` through degree `need` when the shared window (the
/// last `n + 1` symbols) has conditional order at most `k`.
enum Conditional {
    Series(TruncSeries),
    /// Order condition violated or zero probability.
    Excluded,
}

/// A model zero-padded to some truncation, with its stationary adjugate row.
type Padded = (HmmModel, Option<Vec<TruncSeries>>, ScaledModel);

/// Padded models by truncation length; building the adjugate dominates
/// otherwise.
struct PaddedCache<'a> {
    model: &'a HmmModel,
    by_len: RefCell<HashMap<usize, Rc<Padded>>>,
}

impl<'a> PaddedCache<'a> {
    fn new(model: &'a HmmModel) -> Self {
        Self {
            model,
            by_len: RefCell::new(HashMap::new()),
        }
    }

    fn get(&self, l: usize) -> Rc<Padded> {
        self.by_len
            .borrow_mut()
            .entry(l)
            .or_insert_with(|| {
                let m = self.model.with_trunc_len(l);
                let row = adjugate_row(&m).ok().map(|a| a.row);
                let scaled = ScaledModel::new(&m);
                Rc::new((m, row, scaled))
            })
            .clone()
    }
}

fn conditional(
    cache: &PaddedCache,
    start: &Start,
    z: &[usize],
    n: usize,
    k: usize,
    need: usize,
) -> Conditional {
    let early = z.len() - n - 1;
    let mut l = need + 2 * k + 8;
    while l <= MAX_TRUNC {
        let padded = cache.get(l);
        let Some(row) = start.row(&padded) else {
            l *= 2;
            continue;
        };
        let totals = forward_totals(&padded.2, l, &row, z);
        let (o_early, o_pre) = (poly_ord(&totals[early]), poly_ord(&totals[z.len() - 1]));
        if let (Order::Finite(a), Order::Finite(b)) = (o_early, o_pre) {
            if b - a > k {
                return Conditional::Excluded;
            }
            let full = &totals[z.len()];
            if l - b >= need {
                if full.iter().all(Zero::is_zero) {
                    return Conditional::Excluded;
                }
                let series = |p: &[BigInt], scale: &BigInt| {
                    TruncSeries::from_coeffs(p.iter().map(|c| Rational::from_integer(c * scale)), l)
                };
                let prefix = series(&totals[z.len() - 1], padded.2.denom());
                let c = series(full, &BigInt::one()).div(&prefix).expect("prefix mass is non-zero");
                return Conditional::Series(c.truncate(need));
            }
        }
        l *= 2;
    }
    Conditional::Excluded
}

fn compare(
    out: &mut Vec<Counterexample>,
    variant: Variant,
    (left, a): (&[usize], &TruncSeries),
    (right, b): (&[usize], &TruncSeries),
    start: String,
    max_degree: Option<usize>,
) {
    let Some(top) = max_degree else { return };
    if let Some(j) = (0..=top).find(|&j| a.coeff(j) != b.coeff(j)) {
        out.push(Counterexample {
            variant,
            left: left.to_vec(),
            right: right.to_vec(),
            start,
            degree: j,
            left_coeff: format_rational(a.coeff(j)),
            right_coeff: format_rational(b.coeff(j)),
        });
    }
}

fn random_belief(model: &HmmModel, rng: &mut ChaCha8Rng) -> Vec<TruncSeries> {
    loop {
        let v: Vec<TruncSeries> = (0..model.states())
            .map(|_| {
                if rng.random_bool(0.25) {
                    return TruncSeries::zero(2);
                }
                let lead = rng.random_range(0..=2usize);
                let coeffs = (0..=2).map(|d| {
                    if d < lead {
                        integer(0)
                    } else if d == lead {
                        integer(rng.random_range(1..=4))
                    } else {
                        integer(rng.random_range(-2..=3))
                    }
                });
                TruncSeries::from_coeffs(coeffs, 2)
            })
            .collect();
        if v.iter().any(|s| !s.is_zero()) {
            return v;
        }
    }
}

/// [`stabilization_check_with`] under default sampling settings.
pub fn stabilization_check(
    model: &HmmModel,
    n: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> StabilizationReport {
    stabilization_check_with(model, &StabilizationConfig::new(n, k, trials, seed))
}

pub fn stabilization_check_with(model: &HmmModel, cfg: &StabilizationConfig) -> StabilizationReport {
    let (n, k) = (cfg.n, cfg.k);
    let max_degree = (n + 1).checked_sub(4 * k + 2).map(|_| n - 4 * k - 1);
    let need = max_degree.unwrap_or(0);
    let sampler = Sampler::new(model, cfg.sample_eps);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut counterexamples = Vec::new();
    let mut summaries = Vec::new();
    let attempts = cfg.trials.saturating_mul(50).max(1);
    let cache = PaddedCache::new(model);

    for variant in [Variant::Stationary, Variant::HiddenState, Variant::StartBelief] {
        let mut summary = VariantSummary {
            variant,
            tested: 0,
            skipped: 0,
        };
        for _ in 0..attempts {
            if summary.tested >= cfg.trials {
                break;
            }
            let window = sampler.outputs(n + 1, &mut rng);
            let pre_a = sampler.outputs(rng.random_range(0..=cfg.max_prefix), &mut rng);
            let pre_b = sampler.outputs(rng.random_range(0..=cfg.max_prefix), &mut rng);
            let za: Vec<usize> = pre_a.iter().chain(&window).copied().collect();
            let zb: Vec<usize> = pre_b.iter().chain(&window).copied().collect();
            let cond = |start: &Start, z: &[usize]| conditional(&cache, start, z, n, k, need);
            let ok = match variant {
                Variant::Stationary => {
                    match (cond(&Start::Stationary, &za), cond(&Start::Stationary, &zb)) {
                        (Conditional::Series(a), Conditional::Series(b)) => {
                            compare(&mut counterexamples, variant, (&za, &a), (&zb, &b), "stationary".into(), max_degree);
                            true
                        }
                        _ => false,
                    }
                }
                Variant::HiddenState => {
                    let ya = Start::Vertex(rng.random_range(0..model.states()));
                    let yb = Start::Vertex(rng.random_range(0..model.states()));
                    let all = [
                        cond(&ya, &za),
                        cond(&yb, &zb),
                        cond(&Start::Stationary, &za),
                        cond(&Start::Stationary, &zb),
                    ];
                    if let [Conditional::Series(a), Conditional::Series(b), Conditional::Series(c), Conditional::Series(d)] = &all {
                        let label = format!("{} / {}", ya.describe(), yb.describe());
                        compare(&mut counterexamples, variant, (&za, a), (&zb, b), label.clone(), max_degree);
                        compare(&mut counterexamples, variant, (&za, a), (&za, c), label.clone(), max_degree);
                        compare(&mut counterexamples, variant, (&zb, b), (&zb, d), label, max_degree);
                        true
                    } else {
                        false
                    }
                }
                Variant::StartBelief => {
                    let va = Start::Belief(random_belief(model, &mut rng));
                    let vb = Start::Belief(random_belief(model, &mut rng));
                    match (cond(&va, &window), cond(&vb, &window)) {
                        (Conditional::Series(a), Conditional::Series(b)) => {
                            let label = format!("{} / {}", va.describe(), vb.describe());
                            compare(&mut counterexamples, variant, (&window, &a), (&window, &b), label, max_degree);
                            true
                        }
                        _ => false,
                    }
                }
            };
            if ok {
                summary.tested += 1;
            } else {
                summary.skipped += 1;
            }
        }
        summaries.push(summary);
    }
    StabilizationReport {
        n,
        k,
        max_degree,
        summaries,
        counterexamples,
    }
}
