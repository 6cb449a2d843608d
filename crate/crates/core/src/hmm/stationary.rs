//! Series-valued stationary vector from the adjugate of `I − Δ(ε)`.
//!
//! For `ε > 0` the chain is irreducible, so `I − Δ(ε)` has rank `B − 1` and
//! every non-zero row of its adjugate is proportional to the stationary
//! vector. Minors are expanded by cofactors, memoised over column subsets;
//! the expansion never divides, so it is exact in the truncated series ring.

use std::collections::HashMap;

use num_traits::Signed;

use super::{BeliefVector, HmmError, HmmModel};
use crate::rational::Rational;
use crate::series::{Order, TruncSeries};

/// One row of `adj(I − Δ(ε))` and its entry sum.
#[derive(Debug, Clone)]
pub struct AdjugateRow {
    pub index: usize,
    pub row: Vec<TruncSeries>,
    pub sum: TruncSeries,
}

fn i_minus_delta(model: &HmmModel) -> Vec<Vec<TruncSeries>> {
    let l = model.trunc_len();
    (0..model.states())
        .map(|i| {
            (0..model.states())
                .map(|j| {
                    let neg = model.entry(i, j).neg();
                    if i == j {
                        neg.add(&TruncSeries::one(l)).expect("equal truncation")
                    } else {
                        neg
                    }
                })
                .collect()
        })
        .collect()
}

/// Determinant of the submatrix of `m` keeping `rows` and `cols`.
fn minor_det(m: &[Vec<TruncSeries>], rows: &[usize], cols: &[usize], l: usize) -> TruncSeries {
    let n = rows.len();
    if n == 0 {
        return TruncSeries::one(l);
    }
    // dp[mask]: signed sum over assignments of the first popcount(mask) rows
    // onto the column positions in mask.
    let mut dp: HashMap<u32, TruncSeries> = HashMap::new();
    dp.insert(0, TruncSeries::one(l));
    for (r, &row) in rows.iter().enumerate() {
        let mut next: HashMap<u32, TruncSeries> = HashMap::new();
        for (mask, acc) in &dp {
            debug_assert_eq!(mask.count_ones() as usize, r);
            for (c, &col) in cols.iter().enumerate() {
                if mask & (1 << c) != 0 {
                    continue;
                }
                let entry = &m[row][col];
                if entry.is_zero() {
                    continue;
                }
                let inversions = (mask >> (c + 1)).count_ones();
                let mut term = acc.mul_truncated(entry);
                if inversions % 2 == 1 {
                    term = term.neg();
                }
                next.entry(mask | (1 << c))
                    .and_modify(|t| t.add_assign_truncated(&term))
                    .or_insert(term);
            }
        }
        next.retain(|_, v| !v.is_zero());
        dp = next;
    }
    dp.remove(&((1u32 << n) - 1)).unwrap_or_else(|| TruncSeries::zero(l))
}

/// Row `i` of the adjugate: `adj[i][j] = (−1)^{i+j} det(M without row j, col i)`.
fn adjugate_row_at(m: &[Vec<TruncSeries>], i: usize, l: usize) -> Vec<TruncSeries> {
    let b = m.len();
    let cols: Vec<usize> = (0..b).filter(|&c| c != i).collect();
    (0..b)
        .map(|j| {
            let rows: Vec<usize> = (0..b).filter(|&r| r != j).collect();
            let det = minor_det(m, &rows, &cols, l);
            if (i + j) % 2 == 1 {
                det.neg()
            } else {
                det
            }
        })
        .collect()
}

/// The adjugate row with minimal entry-sum order (lowest index on ties),
/// sign-normalised so the sum has a positive leading coefficient.
pub fn adjugate_row(model: &HmmModel) -> Result<AdjugateRow, HmmError> {
    assert!(model.states() <= 24, "adjugate expansion supports at most 24 states");
    let l = model.trunc_len();
    let m = i_minus_delta(model);
    let mut best: Option<AdjugateRow> = None;
    let mut all_rows = Vec::new();
    for i in 0..model.states() {
        let row = adjugate_row_at(&m, i, l);
        let mut sum = TruncSeries::zero(l);
        for e in &row {
            sum.add_assign_truncated(e);
        }
        let ord = sum.ord();
        if cfg!(debug_assertions) {
            all_rows.push((row.clone(), sum.clone()));
        }
        if !ord.is_truncated_zero() && best.as_ref().is_none_or(|b| ord < b.sum.ord()) {
            best = Some(AdjugateRow { index: i, row, sum });
        }
        if ord == Order::Finite(0) && !cfg!(debug_assertions) {
            break;
        }
    }
    let mut best = best.ok_or(HmmError::AdjugateVanishes(l))?;
    if best.sum.leading().is_some_and(|(_, c)| c.is_negative()) {
        best.row = best.row.iter().map(TruncSeries::neg).collect();
        best.sum = best.sum.neg();
    }
    if cfg!(debug_assertions) {
        debug_assert_proportional(&best, &all_rows);
    }
    Ok(best)
}

fn debug_assert_proportional(best: &AdjugateRow, rows: &[(Vec<TruncSeries>, TruncSeries)]) {
    for (row, sum) in rows {
        if sum.is_zero() {
            continue;
        }
        for (a, b) in row.iter().zip(&best.row) {
            let lhs = a.mul_truncated(&best.sum);
            let rhs = b.mul_truncated(sum);
            assert_eq!(lhs, rhs, "adjugate rows are not proportional");
        }
    }
}

/// `π(ε)`: the selected adjugate row divided by its sum.
///
/// When the sum has order `s > 0` the result is known through degree `L − s`.
pub fn stationary_series(model: &HmmModel) -> Result<BeliefVector, HmmError> {
    let adj = adjugate_row(model)?;
    let entries = adj
        .row
        .iter()
        .map(|e| e.div(&adj.sum))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, e) in entries.iter().enumerate() {
        if e.leading().is_some_and(|(_, c): (usize, &Rational)| c.is_negative()) {
            return Err(HmmError::StationaryNegative(i));
        }
    }
    BeliefVector::new(entries)
}
