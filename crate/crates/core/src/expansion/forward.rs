//! Exact forward recursion over the sequence tree.
//!
//! Everything is kept as unnormalised integer polynomials: with `D` the
//! common denominator of all coefficients of `Δ`, a node at depth `d` stores
//! `N = r · (DΔ_{z_1}) ⋯ (DΔ_{z_d})` for an integer start row `r`, so
//! `p(z) = N·1 / (D^d · σ)` where `σ = r·1`. No division happens until a
//! leaf, and no coefficient through the truncation is ever lost.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::hmm::{AdjugateRow, HmmModel};
use crate::rational::{common_denominator, ln_positive, Rational};
use crate::series::{Precision, RealSum, TruncSeries};
use crate::tree::SequenceTree;

type Poly = Vec<BigInt>;
type Sparse = Vec<(usize, BigInt)>;

fn ord(p: &[BigInt]) -> Option<usize> {
    p.iter().position(|c| !c.is_zero())
}

/// `out += v · e`, truncated at `out.len() - 1`.
fn mac(out: &mut [BigInt], v: &[BigInt], e: &Sparse) {
    let l = out.len();
    for (d, c) in e {
        for (t, x) in v.iter().enumerate().take(l.saturating_sub(*d)) {
            if !x.is_zero() {
                out[t + d] += x * c;
            }
        }
    }
}

fn sparse(s: &TruncSeries, scale: &BigInt) -> Sparse {
    s.coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(d, c)| {
            let v = c * Rational::from_integer(scale.clone());
            debug_assert!(v.is_integer());
            (d, v.to_integer())
        })
        .collect()
}

/// A ratio of big integers as the nearest-ish double.
pub(crate) fn ratio_f64(num: &BigInt, den: &BigInt) -> f64 {
    if let (Some(a), Some(b)) = (num.to_f64(), den.to_f64()) {
        if a.is_finite() && b.is_finite() && b != 0.0 {
            return a / b;
        }
    }
    crate::rational::to_f64(&Rational::new(num.clone(), den.clone()))
}

/// `Δ` scaled to integers.
pub(crate) struct ScaledModel {
    l: usize,
    denom: BigInt,
    /// `columns[j]`: non-zero `(i, DΔ_ij)`.
    columns: Vec<Vec<(usize, Sparse)>>,
    /// `leaf_rows[a][i] = Σ_{j : Φ(j) = a} DΔ_ij`.
    leaf_rows: Vec<Vec<Sparse>>,
    by_symbol: Vec<Vec<usize>>,
    states: usize,
}

impl ScaledModel {
    pub(crate) fn new(model: &HmmModel) -> Self {
        let l = model.trunc_len();
        let denom = common_denominator(model.delta().iter().flatten().flat_map(|e| e.coeffs()));
        let b = model.states();
        let columns = (0..b)
            .map(|j| {
                (0..b)
                    .filter(|&i| !model.entry(i, j).is_zero())
                    .map(|i| (i, sparse(model.entry(i, j), &denom)))
                    .collect()
            })
            .collect();
        let leaf_rows = (0..model.symbols())
            .map(|a| {
                (0..b)
                    .map(|i| {
                        let mut sum = TruncSeries::zero(l);
                        for &j in model.states_for(a) {
                            sum.add_assign_truncated(model.entry(i, j));
                        }
                        sparse(&sum, &denom)
                    })
                    .collect()
            })
            .collect();
        Self {
            l,
            denom,
            columns,
            leaf_rows,
            by_symbol: (0..model.symbols()).map(|a| model.states_for(a).to_vec()).collect(),
            states: b,
        }
    }
}

impl ScaledModel {
    pub(crate) fn denom(&self) -> &BigInt {
        &self.denom
    }

    /// `v · DΔ_a` (empty entries for states outside `a`) and its total.
    pub(crate) fn step(&self, v: &[Poly], symbol: usize) -> (Vec<Poly>, Poly) {
        let l = self.l;
        let mut next = vec![Vec::new(); self.states];
        let mut total = vec![BigInt::zero(); l + 1];
        for &j in &self.by_symbol[symbol] {
            let mut acc = vec![BigInt::zero(); l + 1];
            for (i, e) in &self.columns[j] {
                if !v[*i].is_empty() {
                    mac(&mut acc, &v[*i], e);
                }
            }
            if acc.iter().all(Zero::is_zero) {
                continue;
            }
            for (t, c) in total.iter_mut().zip(&acc) {
                *t += c;
            }
            next[j] = acc;
        }
        (next, total)
    }
}

/// A row of series scaled by a common denominator into integer polynomials
/// of length `l + 1`; zero series become empty.
pub(crate) fn integer_row(row: &[TruncSeries], l: usize) -> Vec<Poly> {
    let scale = common_denominator(row.iter().flat_map(|e| e.coeffs()));
    row.iter()
        .map(|s| {
            if s.is_zero() {
                return Vec::new();
            }
            let mut p: Poly = s
                .coeffs()
                .iter()
                .map(|c| (c * Rational::from_integer(scale.clone())).to_integer())
                .collect();
            p.resize(l + 1, BigInt::zero());
            p
        })
        .collect()
}

/// Integer start rows derived from an adjugate row.
pub(crate) struct StartRows {
    /// `r`, scaled to integers.
    pub row: Vec<Poly>,
    /// `σ = Σ r`.
    pub sum: Poly,
    /// `ord σ`.
    pub shift: usize,
}

impl StartRows {
    pub(crate) fn from_adjugate(adj: &AdjugateRow) -> Self {
        let scale = common_denominator(adj.row.iter().flat_map(|e| e.coeffs()));
        let to_poly = |s: &TruncSeries| -> Poly {
            s.coeffs()
                .iter()
                .map(|c| (c * Rational::from_integer(scale.clone())).to_integer())
                .collect()
        };
        let row: Vec<Poly> = adj.row.iter().map(to_poly).collect();
        let sum = to_poly(&adj.sum);
        let shift = ord(&sum).expect("adjugate row sum is non-zero");
        Self { row, sum, shift }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct EngineParams {
    /// Sequences whose probability has order above this are pruned.
    pub prune_ord: usize,
    /// Highest plain coefficient reported.
    pub plain_deg: usize,
    /// Leaves also carry their exact probability series.
    pub enumerate: bool,
    pub precision: Precision,
}

pub(crate) struct Node {
    v: Vec<Poly>,
    total: Poly,
    ord: usize,
}

pub(crate) struct Leaf {
    /// `ord p(z_0 | prefix)`.
    pub shift: usize,
    /// `N·1` at degrees `s0 ..= s0 + prune_ord`.
    pub mass: Poly,
    /// Plain coefficients `0..=plain_deg` of `−p(z) log p(z_0 | prefix)`.
    pub plain: Vec<f64>,
    pub prob: Option<TruncSeries>,
}

pub(crate) struct ExactTree<'a> {
    model: &'a ScaledModel,
    params: EngineParams,
    s0: usize,
    /// `1/τ = T / c_T` with `τ = σ / ε^{s0}`, degrees `0..=L − s0`.
    tau_inv_num: Poly,
    /// `c_T · D^{n+1}`: common denominator of leaf probabilities.
    leaf_den: BigInt,
    tau_inv: TruncSeries,
    leaf_scale: Rational,
}

impl<'a> ExactTree<'a> {
    /// Tree for sequences of length `prefix_len + 1`. Requires
    /// `L − s0 ≥ prune_ord`, checked by the caller.
    pub(crate) fn new(
        model: &'a ScaledModel,
        start: &StartRows,
        prefix_len: usize,
        params: EngineParams,
    ) -> Self {
        let s0 = start.shift;
        let tl = model.l - s0;
        assert!(tl >= params.prune_ord, "truncation starved");
        let tau = TruncSeries::from_coeffs(
            start.sum[s0..].iter().map(|c| Rational::from_integer(c.clone())),
            tl,
        );
        let tau_inv = TruncSeries::one(tl).div(&tau).expect("τ(0) ≠ 0");
        let c_t = common_denominator(tau_inv.coeffs());
        let tau_inv_num = tau_inv
            .coeffs()
            .iter()
            .map(|c| (c * Rational::from_integer(c_t.clone())).to_integer())
            .collect();
        let d_pow = num_traits::pow(model.denom.clone(), prefix_len + 1);
        let leaf_den = &c_t * &d_pow;
        let leaf_scale = Rational::new(BigInt::from(1), d_pow);
        Self {
            model,
            params,
            s0,
            tau_inv_num,
            leaf_den,
            tau_inv,
            leaf_scale,
        }
    }

    pub(crate) fn roots_stationary(&self, start: &StartRows) -> Vec<Node> {
        vec![Node {
            v: start.row.clone(),
            total: start.sum.clone(),
            ord: start.shift,
        }]
    }

    /// One root per hidden state `y`, weighted by `π_y`; roots whose weight
    /// already exceeds the pruning order are dropped (returned as a count).
    pub(crate) fn roots_per_state(&self, start: &StartRows) -> (Vec<Node>, u64) {
        let mut roots = Vec::new();
        let mut dropped = 0;
        for (y, r) in start.row.iter().enumerate() {
            match ord(r) {
                Some(o) if o - self.s0 <= self.params.prune_ord => {
                    let mut v = vec![Vec::new(); self.model.states];
                    v[y] = r.clone();
                    roots.push(Node {
                        v,
                        total: r.clone(),
                        ord: o,
                    });
                }
                _ => dropped += 1,
            }
        }
        (roots, dropped)
    }

    fn keep(&self, o: Option<usize>) -> Option<usize> {
        o.filter(|&o| o - self.s0 <= self.params.prune_ord)
    }

    /// `Σ_t x_t y_{n−t}` for `n ≤ top`, with `x` read from offset `s0`.
    fn convolve_tau(&self, x: &[BigInt], top: usize) -> Vec<BigInt> {
        (0..=top)
            .map(|n| {
                let mut acc = BigInt::zero();
                for t in 0..=n {
                    let a = &x[t];
                    if !a.is_zero() {
                        acc += a * &self.tau_inv_num[n - t];
                    }
                }
                acc
            })
            .collect()
    }

    /// Coefficients `0..=top` of `Σ over leaves` accumulated masses.
    pub(crate) fn mass_series(&self, acc: &[BigInt]) -> Vec<Rational> {
        self.convolve_tau(acc, acc.len() - 1)
            .into_iter()
            .map(|c| Rational::new(c, self.leaf_den.clone()))
            .collect()
    }
}

impl SequenceTree for ExactTree<'_> {
    type Node = Node;
    type Leaf = Leaf;

    fn symbols(&self) -> usize {
        self.model.by_symbol.len()
    }

    fn child(&self, node: &Node, symbol: usize) -> Option<Node> {
        let (v, total) = self.model.step(&node.v, symbol);
        let o = self.keep(ord(&total))?;
        debug_assert!(o >= node.ord, "order decreased along an extension");
        Some(Node { v, total, ord: o })
    }

    fn leaf(&self, node: &Node, symbol: usize) -> Option<Leaf> {
        let l = self.model.l;
        let mut next = vec![BigInt::zero(); l + 1];
        for (i, x) in node.v.iter().enumerate() {
            if !x.is_empty() {
                mac(&mut next, x, &self.model.leaf_rows[symbol][i]);
            }
        }
        let a_ord = self.keep(ord(&next))?;
        let p = self.params;
        let shift = a_ord - node.ord;
        let p_ord = a_ord - self.s0;
        let mass: Poly = next[self.s0..=self.s0 + p.prune_ord].to_vec();

        let mut plain = vec![0.0; p.plain_deg + 1];
        if p_ord <= p.plain_deg {
            let w = p.plain_deg - p_ord;
            let probs = self.convolve_tau(&next[self.s0..], p.plain_deg);
            let probs: Vec<f64> = probs.iter().map(|c| ratio_f64(c, &self.leaf_den)).collect();
            let num = TruncSeries::from_coeffs(
                next[a_ord..=a_ord + w].iter().map(|c| Rational::from_integer(c.clone())),
                w,
            );
            let den = TruncSeries::from_coeffs(
                node.total[node.ord..=node.ord + w]
                    .iter()
                    .map(|c| Rational::from_integer(c * &self.model.denom)),
                w,
            );
            let u = num.div(&den).expect("leading prefix mass is non-zero");
            let log_u = u.log_expand().expect("positive leading conditional");
            let mut logs = log_u.plain().to_vec();
            // u(0) as an exact ratio keeps ln accurate for tiny conditionals
            logs[0] = ln_positive(&Rational::new(
                next[a_ord].clone(),
                &node.total[node.ord] * &self.model.denom,
            ));
            for (deg, out) in plain.iter_mut().enumerate().skip(p_ord) {
                let mut acc = RealSum::new(p.precision);
                for t in p_ord..=deg {
                    acc.add(probs[t] * logs[deg - t]);
                }
                *out = -acc.value();
            }
        }
        let prob = p.enumerate.then(|| {
            let shifted = TruncSeries::from_coeffs(
                next[self.s0..].iter().map(|c| Rational::from_integer(c.clone())),
                l - self.s0,
            );
            shifted.mul_truncated(&self.tau_inv).scale(&self.leaf_scale)
        });
        Some(Leaf {
            shift,
            mass,
            plain,
            prob,
        })
    }
}

/// Per-block accumulator for the bound sums.
pub(crate) struct BoundAcc {
    pub log_mass: Poly,
    pub kept_mass: Poly,
    pub plain: Vec<RealSum>,
    pub max_shift: usize,
}

impl BoundAcc {
    pub(crate) fn new(params: &EngineParams) -> Self {
        Self {
            log_mass: vec![BigInt::zero(); params.prune_ord + 1],
            kept_mass: vec![BigInt::zero(); params.prune_ord + 1],
            plain: vec![RealSum::new(params.precision); params.plain_deg + 1],
            max_shift: 0,
        }
    }

    pub(crate) fn add_leaf(&mut self, leaf: &Leaf) {
        let m = BigInt::from(leaf.shift);
        for ((lm, km), x) in self.log_mass.iter_mut().zip(&mut self.kept_mass).zip(&leaf.mass) {
            if !x.is_zero() {
                if leaf.shift > 0 {
                    *lm += x * &m;
                }
                *km += x;
            }
        }
        for (acc, x) in self.plain.iter_mut().zip(&leaf.plain) {
            acc.add(*x);
        }
        self.max_shift = self.max_shift.max(leaf.shift);
    }

    pub(crate) fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.log_mass.iter_mut().zip(other.log_mass) {
            *a += b;
        }
        for (a, b) in self.kept_mass.iter_mut().zip(other.kept_mass) {
            *a += b;
        }
        for (a, b) in self.plain.iter_mut().zip(&other.plain) {
            a.merge(b);
        }
        self.max_shift = self.max_shift.max(other.max_shift);
        self
    }
}
