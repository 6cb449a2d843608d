//! Hidden Markov chains with series-valued transition matrices.
//!
//! A model is a `B × B` matrix `Δ(ε)` of truncated series together with an
//! output map `Φ` from hidden states to symbols `0..A`. Symbol sequences are
//! stored oldest first: position `0` is the earliest observation.

mod classify;
mod file;
mod stationary;

use std::sync::OnceLock;

use num_traits::Signed;
use thiserror::Error;

use crate::rational::Rational;
use crate::series::{SeriesError, TruncSeries};

pub use classify::{check_normal, classify, ClassKind, Classification, NormalityViolation, SymbolDetail};
pub use file::{ModelFile, ModelFileError};
pub use stationary::{adjugate_row, stationary_series, AdjugateRow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HmmError {
    #[error("model has no states")]
    Empty,
    #[error("transition matrix row {row} has {len} entries, expected {states}")]
    NotSquare { row: usize, len: usize, states: usize },
    #[error("entry ({row}, {col}) has truncation {found}, expected {expected}")]
    TruncationMismatch {
        row: usize,
        col: usize,
        found: usize,
        expected: usize,
    },
    #[error("output map covers {found} states, expected {states}")]
    PhiLength { found: usize, states: usize },
    #[error("state {state} maps to symbol {symbol}, alphabet size is {symbols}")]
    SymbolOutOfRange {
        state: usize,
        symbol: usize,
        symbols: usize,
    },
    #[error("symbol {0} labels no state")]
    UnusedSymbol(usize),
    #[error("entry ({row}, {col}) has a negative leading coefficient")]
    NegativeLeading { row: usize, col: usize },
    #[error("row {row} does not sum to the constant series 1")]
    RowSum { row: usize },
    #[error("unknown symbol {0}")]
    UnknownSymbol(usize),
    #[error("belief vector has {found} entries, model has {states} states")]
    BeliefLength { found: usize, states: usize },
    #[error("belief entries do not sum to the constant series 1")]
    BeliefNotNormalized,
    #[error("belief entry {0} has a negative leading coefficient")]
    BeliefNegative(usize),
    #[error("symbol {symbol} has probability zero through degree {trunc_len} after this belief")]
    ZeroMass { symbol: usize, trunc_len: usize },
    #[error("adjugate of I - Δ vanishes through degree {0}; increase the truncation length")]
    AdjugateVanishes(usize),
    #[error("stationary vector has a negative leading coefficient at state {0}")]
    StationaryNegative(usize),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// `Δ(ε)` plus the output map `Φ`.
#[derive(Debug, Clone)]
pub struct HmmModel {
    delta: Vec<Vec<TruncSeries>>,
    phi: Vec<usize>,
    symbols: usize,
    by_symbol: Vec<Vec<usize>>,
    stationary: OnceLock<Result<BeliefVector, HmmError>>,
}

impl PartialEq for HmmModel {
    fn eq(&self, other: &Self) -> bool {
        self.delta == other.delta && self.phi == other.phi && self.symbols == other.symbols
    }
}

impl HmmModel {
    /// Validates and builds a model. Every entry must share one truncation
    /// length, have a non-negative leading coefficient, and every row must sum
    /// to the constant series `1` exactly. Every symbol in `0..symbols` must
    /// label at least one state.
    pub fn new(
        delta: Vec<Vec<TruncSeries>>,
        phi: Vec<usize>,
        symbols: usize,
    ) -> Result<Self, HmmError> {
        let states = delta.len();
        if states == 0 {
            return Err(HmmError::Empty);
        }
        let trunc = delta[0].first().map_or(0, TruncSeries::trunc_len);
        for (row, entries) in delta.iter().enumerate() {
            if entries.len() != states {
                return Err(HmmError::NotSquare {
                    row,
                    len: entries.len(),
                    states,
                });
            }
            for (col, e) in entries.iter().enumerate() {
                if e.trunc_len() != trunc {
                    return Err(HmmError::TruncationMismatch {
                        row,
                        col,
                        found: e.trunc_len(),
                        expected: trunc,
                    });
                }
                if e.leading().is_some_and(|(_, c)| c.is_negative()) {
                    return Err(HmmError::NegativeLeading { row, col });
                }
            }
            let mut sum = TruncSeries::zero(trunc);
            for e in entries {
                sum = sum.add(e)?;
            }
            if sum != TruncSeries::one(trunc) {
                return Err(HmmError::RowSum { row });
            }
        }
        if phi.len() != states {
            return Err(HmmError::PhiLength {
                found: phi.len(),
                states,
            });
        }
        let mut by_symbol = vec![Vec::new(); symbols];
        for (state, &symbol) in phi.iter().enumerate() {
            if symbol >= symbols {
                return Err(HmmError::SymbolOutOfRange {
                    state,
                    symbol,
                    symbols,
                });
            }
            by_symbol[symbol].push(state);
        }
        if let Some(unused) = by_symbol.iter().position(Vec::is_empty) {
            return Err(HmmError::UnusedSymbol(unused));
        }
        Ok(Self {
            delta,
            phi,
            symbols,
            by_symbol,
            stationary: OnceLock::new(),
        })
    }

    pub fn states(&self) -> usize {
        self.delta.len()
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn trunc_len(&self) -> usize {
        self.delta[0][0].trunc_len()
    }

    pub fn delta(&self) -> &[Vec<TruncSeries>] {
        &self.delta
    }

    pub fn entry(&self, row: usize, col: usize) -> &TruncSeries {
        &self.delta[row][col]
    }

    pub fn phi(&self) -> &[usize] {
        &self.phi
    }

    /// States labelled `symbol`, ascending.
    pub fn states_for(&self, symbol: usize) -> &[usize] {
        &self.by_symbol[symbol]
    }

    /// The same chain at a different truncation length. Entries are treated
    /// as polynomials: growing the truncation pads with zero coefficients.
    pub fn with_trunc_len(&self, trunc_len: usize) -> Self {
        let delta = self
            .delta
            .iter()
            .map(|row| row.iter().map(|e| e.with_trunc_len(trunc_len)).collect())
            .collect();
        Self {
            delta,
            phi: self.phi.clone(),
            symbols: self.symbols,
            by_symbol: self.by_symbol.clone(),
            stationary: OnceLock::new(),
        }
    }

    /// `Δ_a`: the columns of states labelled `a`, every other column zero.
    pub fn restrict(&self, symbol: usize) -> Result<Vec<Vec<TruncSeries>>, HmmError> {
        if symbol >= self.symbols {
            return Err(HmmError::UnknownSymbol(symbol));
        }
        let zero = TruncSeries::zero(self.trunc_len());
        Ok(self
            .delta
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, e)| {
                        if self.phi[j] == symbol {
                            e.clone()
                        } else {
                            zero.clone()
                        }
                    })
                    .collect()
            })
            .collect())
    }

    /// Degree-0 coefficient matrix `Δ(0)`.
    pub fn at_zero(&self) -> Vec<Vec<Rational>> {
        self.delta
            .iter()
            .map(|row| row.iter().map(|e| e.coeff(0).clone()).collect())
            .collect()
    }

    /// `Δ(ε)` evaluated numerically.
    pub fn eval(&self, eps: f64) -> Vec<Vec<f64>> {
        self.delta
            .iter()
            .map(|row| row.iter().map(|e| e.eval(eps)).collect())
            .collect()
    }

    /// Cached [`stationary_series`].
    pub fn stationary(&self) -> Result<&BeliefVector, HmmError> {
        self.stationary
            .get_or_init(|| stationary_series(self))
            .as_ref()
            .map_err(Clone::clone)
    }
}

/// A point of the probability simplex as a function of `ε`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeliefVector {
    entries: Vec<TruncSeries>,
}

impl BeliefVector {
    /// Checks that the entries share a truncation, sum to `1` exactly and
    /// have non-negative leading coefficients.
    pub fn new(entries: Vec<TruncSeries>) -> Result<Self, HmmError> {
        let trunc = entries.first().ok_or(HmmError::Empty)?.trunc_len();
        let mut sum = TruncSeries::zero(trunc);
        for (i, e) in entries.iter().enumerate() {
            sum = sum.add(e)?;
            if e.leading().is_some_and(|(_, c)| c.is_negative()) {
                return Err(HmmError::BeliefNegative(i));
            }
        }
        if sum != TruncSeries::one(trunc) {
            return Err(HmmError::BeliefNotNormalized);
        }
        Ok(Self { entries })
    }

    /// The simplex vertex `e_state`.
    pub fn vertex(state: usize, states: usize, trunc_len: usize) -> Self {
        let entries = (0..states)
            .map(|i| {
                if i == state {
                    TruncSeries::one(trunc_len)
                } else {
                    TruncSeries::zero(trunc_len)
                }
            })
            .collect();
        Self { entries }
    }

    pub fn entries(&self) -> &[TruncSeries] {
        &self.entries
    }

    pub fn trunc_len(&self) -> usize {
        self.entries[0].trunc_len()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Numeric value at `ε`.
    pub fn eval(&self, eps: f64) -> Vec<f64> {
        self.entries.iter().map(|e| e.eval(eps)).collect()
    }
}

/// `x · Δ_a` restricted to the columns labelled `a`, one series per state.
fn unnormalized_step(
    x: &BeliefVector,
    model: &HmmModel,
    symbol: usize,
) -> Result<Vec<TruncSeries>, HmmError> {
    if symbol >= model.symbols() {
        return Err(HmmError::UnknownSymbol(symbol));
    }
    if x.len() != model.states() {
        return Err(HmmError::BeliefLength {
            found: x.len(),
            states: model.states(),
        });
    }
    let trunc = x.trunc_len().min(model.trunc_len());
    let mut out = vec![TruncSeries::zero(trunc); model.states()];
    for &j in model.states_for(symbol) {
        let acc = &mut out[j];
        for (i, xi) in x.entries.iter().enumerate() {
            if xi.is_zero() || model.entry(i, j).is_zero() {
                continue;
            }
            acc.add_assign_truncated(&xi.mul_truncated(model.entry(i, j)));
        }
    }
    Ok(out)
}

/// One step of the belief iteration: returns `r_a(x) = x Δ_a 1` and
/// `f_a(x) = x Δ_a / r_a(x)`.
///
/// The division shifts out the order of the mass, so the new belief is known
/// through degree `L − ord(mass)`. A mass that vanishes through the stored
/// truncation is reported as [`HmmError::ZeroMass`]; callers prune it.
pub fn belief_step(
    x: &BeliefVector,
    model: &HmmModel,
    symbol: usize,
) -> Result<(TruncSeries, BeliefVector), HmmError> {
    let y = unnormalized_step(x, model, symbol)?;
    let trunc = y[0].trunc_len();
    let mut mass = TruncSeries::zero(trunc);
    for e in &y {
        mass.add_assign_truncated(e);
    }
    if mass.ord().is_truncated_zero() {
        return Err(HmmError::ZeroMass {
            symbol,
            trunc_len: trunc,
        });
    }
    let entries = y
        .iter()
        .map(|e| e.div(&mass))
        .collect::<Result<Vec<_>, _>>()?;
    debug_assert!(BeliefVector::new(entries.clone()).is_ok());
    Ok((mass, BeliefVector { entries }))
}

/// Belief after consuming `z` from `start`, together with `p_start(z)`.
/// Returns `Ok(None)` when some step has zero mass through the truncation.
pub fn filter_from(
    model: &HmmModel,
    start: &BeliefVector,
    z: &[usize],
) -> Result<Option<(TruncSeries, BeliefVector)>, HmmError> {
    let mut prob = TruncSeries::one(start.trunc_len());
    let mut belief = start.clone();
    for &a in z {
        match belief_step(&belief, model, a) {
            Ok((mass, next)) => {
                prob = prob.mul_truncated(&mass);
                belief = next;
            }
            Err(HmmError::ZeroMass { .. }) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    Ok(Some((prob, belief)))
}

/// `p_v(z) = v Δ_{z_0} ⋯ Δ_{z_{n-1}} 1` for a start belief `v`, as a product
/// of belief-step masses. A zero mass yields the zero series.
pub fn seq_prob_from(
    model: &HmmModel,
    start: &BeliefVector,
    z: &[usize],
) -> Result<TruncSeries, HmmError> {
    let mut prob = TruncSeries::one(start.trunc_len());
    let mut belief = start.clone();
    for &a in z {
        match belief_step(&belief, model, a) {
            Ok((mass, next)) => {
                prob = prob.mul_truncated(&mass);
                belief = next;
            }
            Err(HmmError::ZeroMass { trunc_len, .. }) => {
                return Ok(TruncSeries::zero(trunc_len.min(prob.trunc_len())))
            }
            Err(e) => return Err(e),
        }
    }
    Ok(prob)
}

/// `p(z)` under the stationary start `π(ε)`.
pub fn seq_prob(model: &HmmModel, z: &[usize]) -> Result<TruncSeries, HmmError> {
    seq_prob_from(model, model.stationary()?, z)
}

/// `p_v(last | z)`: the belief after `z` dotted through `Δ_last 1`.
pub fn cond_prob_from(
    model: &HmmModel,
    start: &BeliefVector,
    z: &[usize],
    last: usize,
) -> Result<TruncSeries, HmmError> {
    if last >= model.symbols() {
        return Err(HmmError::UnknownSymbol(last));
    }
    let mut belief = start.clone();
    for &a in z {
        belief = belief_step(&belief, model, a)?.1;
    }
    let y = unnormalized_step(&belief, model, last)?;
    let mut mass = TruncSeries::zero(y[0].trunc_len());
    for e in &y {
        mass.add_assign_truncated(e);
    }
    Ok(mass)
}

/// `p(last | z)` under the stationary start. Fails with
/// [`HmmError::ZeroMass`] when the prefix itself has zero probability.
pub fn cond_prob(model: &HmmModel, z: &[usize], last: usize) -> Result<TruncSeries, HmmError> {
    cond_prob_from(model, model.stationary()?, z, last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{bsc_model, MarkovInput};
    use crate::rational::{integer, rational};
    use crate::series::Order;
    use num_traits::{One, Zero};

    fn is_one(s: &TruncSeries) -> bool {
        s.coeff(0).is_one() && s.coeffs()[1..].iter().all(Zero::is_zero)
    }

    fn constant_model(p: &[&[Rational]], phi: Vec<usize>, symbols: usize, l: usize) -> HmmModel {
        let delta = p
            .iter()
            .map(|row| row.iter().map(|c| TruncSeries::constant(c.clone(), l)).collect())
            .collect();
        HmmModel::new(delta, phi, symbols).unwrap()
    }

    fn ordentlich(p: Rational) -> HmmModel {
        bsc_model(&MarkovInput::ordentlich(p).unwrap()).unwrap()
    }

    #[test]
    fn construction_rejects_bad_models() {
        let l = 2;
        let half = TruncSeries::constant(rational(1, 2), l);
        let one = TruncSeries::one(l);
        let zero = TruncSeries::zero(l);
        assert_eq!(
            HmmModel::new(vec![vec![half.clone(), zero.clone()], vec![one.clone(), zero.clone()]], vec![0, 1], 2),
            Err(HmmError::RowSum { row: 0 })
        );
        assert_eq!(
            HmmModel::new(vec![vec![one.clone(), zero.clone()], vec![one.clone(), zero.clone()]], vec![0, 0], 2),
            Err(HmmError::UnusedSymbol(1))
        );
        let neg = TruncSeries::from_coeffs([integer(0), integer(-1)], l);
        let comp = TruncSeries::from_coeffs([integer(1), integer(1)], l);
        assert_eq!(
            HmmModel::new(vec![vec![neg, comp], vec![one.clone(), zero.clone()]], vec![0, 1], 2),
            Err(HmmError::NegativeLeading { row: 0, col: 0 })
        );
        assert!(matches!(
            HmmModel::new(vec![vec![one.clone()]], vec![3], 1),
            Err(HmmError::SymbolOutOfRange { .. })
        ));
    }

    #[test]
    fn restrict_partitions_columns() {
        let model = ordentlich(rational(1, 2));
        let d0 = model.restrict(0).unwrap();
        for row in &d0 {
            // states (0,1) and (1,0) emit 1
            assert!(row[1].is_zero() && row[2].is_zero());
            assert!(!row[0].is_zero());
        }
        let d1 = model.restrict(1).unwrap();
        for (i, row) in model.delta().iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                assert_eq!(&d0[i][j].add(&d1[i][j]).unwrap(), e);
            }
        }
        assert_eq!(model.restrict(2), Err(HmmError::UnknownSymbol(2)));

        let single = constant_model(&[&[integer(1)]], vec![0], 1, 3);
        assert_eq!(single.restrict(0).unwrap(), single.delta().to_vec());
    }

    #[test]
    fn stationary_of_constant_and_doubly_stochastic() {
        let m = constant_model(
            &[&[rational(1, 2), rational(1, 2)], &[integer(1), integer(0)]],
            vec![0, 1],
            2,
            2,
        );
        let pi = m.stationary().unwrap();
        assert_eq!(pi.entries()[0], TruncSeries::constant(rational(2, 3), 2));
        assert_eq!(pi.entries()[1], TruncSeries::constant(rational(1, 3), 2));

        let q = rational(1, 4);
        let ds = constant_model(
            &[
                &[q.clone(), q.clone(), q.clone(), q.clone()],
                &[integer(0), rational(1, 2), rational(1, 2), integer(0)],
                &[rational(1, 2), integer(0), rational(1, 4), rational(1, 4)],
                &[rational(1, 4), rational(1, 4), integer(0), rational(1, 2)],
            ],
            vec![0, 0, 1, 1],
            2,
            1,
        );
        for e in ds.stationary().unwrap().entries() {
            assert_eq!(e, &TruncSeries::constant(q.clone(), 1));
        }
    }

    #[test]
    fn stationary_of_bsc_model() {
        // π(ε) = (π_X0 (1−ε), π_X0 ε, π_X1 (1−ε), π_X1 ε)
        let model = ordentlich(rational(1, 2)).with_trunc_len(4);
        let pi = model.stationary().unwrap();
        let l = pi.trunc_len();
        let px = [rational(2, 3), rational(1, 3)];
        for (s, e) in pi.entries().iter().enumerate() {
            let p = &px[s / 2];
            let want = if s % 2 == 0 {
                TruncSeries::from_coeffs([p.clone(), -p.clone()], l)
            } else {
                TruncSeries::from_coeffs([integer(0), p.clone()], l)
            };
            assert_eq!(e, &want, "state {s}");
        }
        // π Δ = π coefficientwise
        for j in 0..4 {
            let mut acc = TruncSeries::zero(l);
            for i in 0..4 {
                acc.add_assign_truncated(&pi.entries()[i].mul_truncated(model.entry(i, j)));
            }
            assert_eq!(acc, pi.entries()[j]);
        }
    }

    #[test]
    fn single_symbol_belief_step() {
        let m = constant_model(
            &[&[rational(1, 3), rational(2, 3)], &[rational(1, 2), rational(1, 2)]],
            vec![0, 0],
            1,
            2,
        );
        let x = BeliefVector::vertex(0, 2, 2);
        let (mass, next) = belief_step(&x, &m, 0).unwrap();
        assert_eq!(mass, TruncSeries::one(2));
        assert_eq!(next.entries()[1], TruncSeries::constant(rational(2, 3), 2));
        assert_eq!(seq_prob(&m, &[]).unwrap(), TruncSeries::one(2));
    }

    #[test]
    fn black_hole_step_forgets_start_at_order_zero() {
        let input = MarkovInput::binary(rational(2, 3), rational(1, 4)).unwrap();
        let model = bsc_model(&input).unwrap().with_trunc_len(3);
        let a = BeliefVector::vertex(0, 4, 3);
        let b = BeliefVector::vertex(3, 4, 3);
        for sym in 0..2 {
            let na = belief_step(&a, &model, sym).unwrap().1;
            let nb = belief_step(&b, &model, sym).unwrap().1;
            for (x, y) in na.entries().iter().zip(nb.entries()) {
                assert_eq!(x.coeff(0), y.coeff(0));
            }
        }
    }

    #[test]
    fn ordentlich_hand_values() {
        let model = ordentlich(rational(1, 2)).with_trunc_len(4);
        let pi = model.stationary().unwrap();
        // p(Z=0) at ε=0 equals P(X=0) = 2/3
        let (mass, _) = belief_step(pi, &model, 0).unwrap();
        assert_eq!(mass.coeff(0), &rational(2, 3));
        // "11" is forbidden by the input chain: ord ≥ 1
        let p11 = seq_prob(&model, &[1, 1]).unwrap();
        assert!(p11.coeff(0).is_zero());
        assert_eq!(p11.ord(), Order::Finite(1));
        let c = cond_prob(&model, &[1], 1).unwrap();
        assert!(c.coeff(0).is_zero());
        // conditionals sum to one
        let total = cond_prob(&model, &[0, 1], 0)
            .unwrap()
            .add(&cond_prob(&model, &[0, 1], 1).unwrap())
            .unwrap();
        assert!(is_one(&total));
        let singles = seq_prob(&model, &[0]).unwrap().add(&seq_prob(&model, &[1]).unwrap()).unwrap();
        assert!(is_one(&singles));
    }

    #[test]
    fn cond_prob_matches_ratio_of_sequence_probabilities() {
        let model = ordentlich(rational(1, 3)).with_trunc_len(6);
        let z = [0, 1, 0, 0, 1];
        let joint = seq_prob(&model, &[&z[..], &[1]].concat()).unwrap();
        let prefix = seq_prob(&model, &z).unwrap();
        let ratio = joint.truncate(prefix.trunc_len().min(joint.trunc_len())).div(&prefix.truncate(prefix.trunc_len().min(joint.trunc_len()))).unwrap();
        let direct = cond_prob(&model, &z, 1).unwrap();
        let l = ratio.trunc_len().min(direct.trunc_len());
        assert_eq!(ratio.truncate(l), direct.truncate(l));
    }
}
