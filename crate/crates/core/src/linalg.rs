//! Small dense linear-algebra helpers: exact rank and stationary vectors over
//! the rationals, a double-precision stationary solver, and strong
//! connectivity of a support pattern.

use num_traits::{One, Zero};

use crate::rational::Rational;

/// Rank of a dense rational matrix by fraction-exact Gaussian elimination.
pub fn rank(matrix: &[Vec<Rational>]) -> usize {
    let mut m: Vec<Vec<Rational>> = matrix.to_vec();
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        let inv = m[rank][col].recip();
        for r in (rank + 1)..rows {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] * &inv;
            for c in col..cols {
                let delta = &factor * &m[rank][c];
                m[r][c] -= delta;
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Stationary row vector of an irreducible row-stochastic rational matrix.
///
/// Solves `π (I − P) = 0`, `Σ π = 1` exactly. Returns `None` when the system
/// is singular (no unique stationary vector).
pub fn stationary_exact(p: &[Vec<Rational>]) -> Option<Vec<Rational>> {
    let n = p.len();
    // Unknowns π_0..π_{n-1}; equations are columns of (I − P)ᵀ, last one
    // replaced by normalization.
    let mut a: Vec<Vec<Rational>> = (0..n)
        .map(|j| {
            let mut row: Vec<Rational> = (0..n)
                .map(|i| {
                    let id = if i == j { Rational::one() } else { Rational::zero() };
                    id - &p[i][j]
                })
                .collect();
            row.push(Rational::zero());
            row
        })
        .collect();
    a[n - 1] = vec![Rational::one(); n + 1];
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let inv = a[col][col].recip();
        for c in col..=n {
            a[col][c] *= &inv;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for c in col..=n {
                let delta = &factor * &a[col][c];
                a[r][c] -= delta;
            }
        }
    }
    Some(a.into_iter().map(|row| row[n].clone()).collect())
}

/// Stationary vector of a row-stochastic `f64` matrix by Gaussian
/// elimination with partial pivoting.
pub fn stationary_f64(p: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = p.len();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut row: Vec<f64> = (0..n)
                .map(|i| if i == j { 1.0 } else { 0.0 } - p[i][j])
                .collect();
            row.push(0.0);
            row
        })
        .collect();
    a[n - 1] = vec![1.0; n + 1];
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for c in col..=n {
                a[r][c] -= factor * a[col][c];
            }
        }
    }
    let mut pi: Vec<f64> = (0..n).map(|i| (a[i][n] / a[i][i]).max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= total);
    Some(pi)
}

/// Whether the directed graph with `edge(i, j)` is strongly connected.
pub fn strongly_connected(n: usize, edge: impl Fn(usize, usize) -> bool) -> bool {
    if n == 0 {
        return false;
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let e = if forward { edge(i, j) } else { edge(j, i) };
                if e && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}
