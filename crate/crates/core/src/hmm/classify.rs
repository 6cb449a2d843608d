//! Black Hole / weak Black Hole classification of `Δ(0)` and the normal
//! parameterization check.

use num_traits::{Signed, Zero};
use serde::Serialize;

use super::HmmModel;
use crate::linalg::{rank, strongly_connected};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClassKind {
    BlackHole,
    WeakBlackHole,
    Neither,
}

/// Shape of `Δ_a(0)` for one symbol `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SymbolDetail {
    AllZero,
    /// Rank one, every column strictly positive or all zero.
    RankOnePositiveColumns,
    RankOneOther,
    HigherRank,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub kind: ClassKind,
    pub per_symbol: Vec<SymbolDetail>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum NormalityViolation {
    /// The support graph of `Δ(ε)`, `ε > 0`, is not strongly connected.
    Reducible,
    /// `Δ(0)` is not a weak Black Hole; lists the symbols with rank ≥ 2.
    NotWeakBlackHole { symbols: Vec<usize> },
}

pub fn classify(model: &HmmModel) -> Classification {
    let d0 = model.at_zero();
    let per_symbol: Vec<SymbolDetail> = (0..model.symbols())
        .map(|a| {
            let cols = model.states_for(a);
            let sub: Vec<Vec<_>> = d0
                .iter()
                .map(|row| cols.iter().map(|&j| row[j].clone()).collect())
                .collect();
            match rank(&sub) {
                0 => SymbolDetail::AllZero,
                1 => {
                    let positive_or_zero = (0..cols.len()).all(|c| {
                        sub.iter().all(|row| row[c].is_positive())
                            || sub.iter().all(|row| row[c].is_zero())
                    });
                    if positive_or_zero {
                        SymbolDetail::RankOnePositiveColumns
                    } else {
                        SymbolDetail::RankOneOther
                    }
                }
                _ => SymbolDetail::HigherRank,
            }
        })
        .collect();
    let kind = if per_symbol
        .iter()
        .all(|d| *d == SymbolDetail::RankOnePositiveColumns)
    {
        ClassKind::BlackHole
    } else if per_symbol.contains(&SymbolDetail::HigherRank) {
        ClassKind::Neither
    } else {
        ClassKind::WeakBlackHole
    };
    Classification { kind, per_symbol }
}

/// Normal parameterization: entries analytic (true by representation),
/// `Δ(ε)` irreducible for `ε > 0`, and `Δ(0)` a weak Black Hole (a Black
/// Hole qualifies).
pub fn check_normal(model: &HmmModel) -> Result<(), Vec<NormalityViolation>> {
    let mut violations = Vec::new();
    if !strongly_connected(model.states(), |i, j| !model.entry(i, j).is_zero()) {
        violations.push(NormalityViolation::Reducible);
    }
    let class = classify(model);
    if class.kind == ClassKind::Neither {
        let symbols = class
            .per_symbol
            .iter()
            .enumerate()
            .filter(|(_, d)| **d == SymbolDetail::HigherRank)
            .map(|(a, _)| a)
            .collect();
        violations.push(NormalityViolation::NotWeakBlackHole { symbols });
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}
