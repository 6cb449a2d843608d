//! Asymptotic expansion of the entropy rate around `ε = 0`:
//!
//! `H(Z) = h0 + Σ_{j=1}^{k+1} f_j ε^j log ε + Σ_{j=1}^{k} g_j ε^j + O(ε^{k+1})`.
//!
//! The coefficients are read off the Birch upper bound
//! `H_n = −Σ p(z) log p(z_0 | z_{-n}^{-1})` at horizon `n0 = 6k + 6`, summed
//! over the sequences with `ord p(z) ≤ k + 1`; the lower bound conditions on
//! the hidden state before the window and must agree coefficientwise.
//!
//! Series are handled at working truncation `L = 2k + 2 + slack`. Dividing
//! by the stationary normaliser costs `ord σ` degrees; when that leaves too
//! few, the computation is retried with doubled slack.

mod forward;
mod stabilization;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hmm::{adjugate_row, check_normal, HmmError, HmmModel, NormalityViolation};
use crate::rational::{format_rational, parse_rational, Rational, RationalParseError};
use crate::series::{LogSeries, Precision, TruncSeries};
use crate::tree::{walk, WalkStats};

use forward::{BoundAcc, EngineParams, ExactTree, ScaledModel, StartRows};

pub use stabilization::{
    stabilization_check, Counterexample, StabilizationConfig, StabilizationReport, Variant,
    VariantSummary,
};

/// Largest gap tolerated between upper- and lower-bound plain coefficients.
pub const PLAIN_AGREEMENT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpansionError {
    #[error("model is not normally parameterized: {0:?}")]
    NotNormal(Vec<NormalityViolation>),
    #[error("horizon n = {n} is below the required 6k + 6 = {required}")]
    HorizonTooShort { n: usize, required: usize },
    #[error("order k = {k} exceeds the configured maximum {max}")]
    OrderGuard { k: usize, max: usize },
    #[error("truncation starved: stationary normaliser has order {shift} at L = {trunc_len} after {retries} retries")]
    Starved {
        trunc_len: usize,
        shift: usize,
        retries: usize,
    },
    #[error("upper and lower bounds disagree: {0}")]
    BoundDisagreement(String),
    #[error("discarded probability mass is non-zero at degree {degree}")]
    DiscardedMass { degree: usize },
    #[error(transparent)]
    Hmm(#[from] HmmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionConfig {
    /// Extra truncation degrees on top of `2k + 2`.
    pub slack: usize,
    /// Guard on the requested order.
    pub max_k: usize,
    /// Also compute the lower bound and require agreement.
    pub verify: bool,
    pub precision: Precision,
    /// Slack doublings before giving up.
    pub max_retries: usize,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self {
            slack: 4,
            max_k: 2,
            verify: false,
            precision: Precision::Double,
            max_retries: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Upper,
    Lower,
}

/// Bookkeeping of one bound computation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub trunc_len: usize,
    pub slack: usize,
    pub retries: usize,
    /// `ord` of the stationary normaliser.
    pub stationary_shift: usize,
    /// Largest conditional order met at a leaf.
    pub max_order_shift: usize,
    pub sequences: u64,
    pub pruned: u64,
    /// Coefficients `0..=k+1` of the probability of the pruned sequences.
    pub discarded_mass: Vec<Rational>,
}

/// A Birch bound as a log-series through `ε^k` (plain) and `ε^{k+1} log ε`.
/// The plain coefficient of `ε^{k+1}` is not reported and stored as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundExpansion {
    pub kind: BoundKind,
    pub n: usize,
    pub k: usize,
    pub series: LogSeries,
    pub diagnostics: Diagnostics,
}

/// Outcome of comparing the two bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundAgreement {
    pub logpart_equal: bool,
    pub max_plain_gap: f64,
    pub lower: Diagnostics,
}

impl BoundAgreement {
    pub fn agrees(&self) -> bool {
        self.logpart_equal && self.max_plain_gap <= PLAIN_AGREEMENT_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionResult {
    pub k: usize,
    pub h0: f64,
    /// `f_1 ..= f_{k+1}`.
    pub f: Vec<Rational>,
    /// `g_1 ..= g_k`.
    pub g: Vec<f64>,
    /// Horizon of the bound the coefficients were read from.
    pub n0: usize,
    pub diagnostics: Diagnostics,
    pub verification: Option<BoundAgreement>,
}

/// Theorem horizon `6k + 6`.
pub fn horizon(k: usize) -> usize {
    6 * k + 6
}

impl ExpansionResult {
    /// Reads `h0`, `f`, `g` off a log-series window of order `k`.
    pub fn from_window(k: usize, series: &LogSeries, n0: usize) -> Self {
        Self {
            k,
            h0: series.plain()[0],
            f: series.logpart().coeffs()[1..=k + 1].to_vec(),
            g: series.plain()[1..=k].to_vec(),
            n0,
            diagnostics: Diagnostics::default(),
            verification: None,
        }
    }

    pub fn to_document(&self) -> ExpansionDocument {
        ExpansionDocument {
            k: self.k,
            n0: self.n0,
            h0: format_real(self.h0),
            f: self.f.iter().map(format_rational).collect(),
            g: self.g.iter().map(|x| format_real(*x)).collect(),
            diagnostics: DiagnosticsDocument::from(&self.diagnostics),
            verification: self.verification.as_ref().map(|v| VerificationDocument {
                agrees: v.agrees(),
                logpart_equal: v.logpart_equal,
                max_plain_gap: format_real(v.max_plain_gap),
                lower: DiagnosticsDocument::from(&v.lower),
            }),
        }
    }

    pub fn from_document(doc: &ExpansionDocument) -> Result<Self, DocumentError> {
        let real = |s: &str| s.parse::<f64>().map_err(|_| DocumentError::Real(s.to_string()));
        if doc.f.len() != doc.k + 1 || doc.g.len() != doc.k {
            return Err(DocumentError::Length);
        }
        Ok(Self {
            k: doc.k,
            h0: real(&doc.h0)?,
            f: doc.f.iter().map(|s| parse_rational(s)).collect::<Result<_, _>>()?,
            g: doc.g.iter().map(|s| real(s)).collect::<Result<_, _>>()?,
            n0: doc.n0,
            diagnostics: doc.diagnostics.to_diagnostics()?,
            verification: doc
                .verification
                .as_ref()
                .map(|v| -> Result<_, DocumentError> {
                    Ok(BoundAgreement {
                        logpart_equal: v.logpart_equal,
                        max_plain_gap: real(&v.max_plain_gap)?,
                        lower: v.lower.to_diagnostics()?,
                    })
                })
                .transpose()?,
        })
    }

    /// The expansion as a log-series window.
    pub fn to_log_series(&self) -> LogSeries {
        let mut plain = vec![self.h0];
        plain.extend(&self.g);
        plain.push(0.0);
        let logpart = TruncSeries::from_coeffs(
            std::iter::once(Rational::zero()).chain(self.f.iter().cloned()),
            self.k + 1,
        );
        LogSeries::new(plain, logpart).expect("window lengths match")
    }
}

/// Shortest decimal that round-trips to the same double.
pub fn format_real(x: f64) -> String {
    format!("{x:e}")
}

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("invalid real `{0}`")]
    Real(String),
    #[error(transparent)]
    Rational(#[from] RationalParseError),
    #[error("coefficient lists do not match k")]
    Length,
}

/// Serialized [`ExpansionResult`]: rationals as `"num/den"`, reals as
/// round-tripping decimal strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionDocument {
    pub k: usize,
    pub n0: usize,
    pub h0: String,
    pub f: Vec<String>,
    pub g: Vec<String>,
    pub diagnostics: DiagnosticsDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsDocument {
    pub trunc_len: usize,
    pub slack: usize,
    pub retries: usize,
    pub stationary_shift: usize,
    pub max_order_shift: usize,
    pub sequences: u64,
    pub pruned: u64,
    pub discarded_mass: Vec<String>,
}

impl From<&Diagnostics> for DiagnosticsDocument {
    fn from(d: &Diagnostics) -> Self {
        Self {
            trunc_len: d.trunc_len,
            slack: d.slack,
            retries: d.retries,
            stationary_shift: d.stationary_shift,
            max_order_shift: d.max_order_shift,
            sequences: d.sequences,
            pruned: d.pruned,
            discarded_mass: d.discarded_mass.iter().map(format_rational).collect(),
        }
    }
}

impl DiagnosticsDocument {
    fn to_diagnostics(&self) -> Result<Diagnostics, DocumentError> {
        Ok(Diagnostics {
            trunc_len: self.trunc_len,
            slack: self.slack,
            retries: self.retries,
            stationary_shift: self.stationary_shift,
            max_order_shift: self.max_order_shift,
            sequences: self.sequences,
            pruned: self.pruned,
            discarded_mass: self
                .discarded_mass
                .iter()
                .map(|s| parse_rational(s))
                .collect::<Result<_, _>>()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationDocument {
    pub agrees: bool,
    pub logpart_equal: bool,
    pub max_plain_gap: String,
    pub lower: DiagnosticsDocument,
}

fn check_horizon(n: usize, k: usize) -> Result<(), ExpansionError> {
    let required = horizon(k);
    if n < required {
        return Err(ExpansionError::HorizonTooShort { n, required });
    }
    Ok(())
}

fn check_order(k: usize, config: &ExpansionConfig) -> Result<(), ExpansionError> {
    if k > config.max_k {
        return Err(ExpansionError::OrderGuard {
            k,
            max: config.max_k,
        });
    }
    Ok(())
}

/// A model at working truncation with its integer start rows, retrying
/// with doubled slack while the stationary normaliser starves the window.
struct Prepared {
    scaled: ScaledModel,
    start: StartRows,
    trunc_len: usize,
    slack: usize,
    retries: usize,
}

fn prepare(model: &HmmModel, k: usize, config: &ExpansionConfig) -> Result<Prepared, ExpansionError> {
    let need = k + 1;
    let mut slack = config.slack;
    let mut retries = 0;
    loop {
        let l = 2 * k + 2 + slack;
        let working = model.with_trunc_len(l);
        let outcome = match adjugate_row(&working) {
            Ok(adj) => {
                let start = StartRows::from_adjugate(&adj);
                if l - start.shift >= need {
                    return Ok(Prepared {
                        scaled: ScaledModel::new(&working),
                        start,
                        trunc_len: l,
                        slack,
                        retries,
                    });
                }
                ExpansionError::Starved {
                    trunc_len: l,
                    shift: start.shift,
                    retries,
                }
            }
            Err(HmmError::AdjugateVanishes(_)) => ExpansionError::Starved {
                trunc_len: l,
                shift: l + 1,
                retries,
            },
            Err(e) => return Err(e.into()),
        };
        if retries >= config.max_retries {
            return Err(outcome);
        }
        retries += 1;
        slack = (slack * 2).max(1);
    }
}

fn params(k: usize, config: &ExpansionConfig, enumerate: bool) -> EngineParams {
    EngineParams {
        prune_ord: k + 1,
        plain_deg: k,
        enumerate,
        precision: config.precision,
    }
}

fn run_bound(
    model: &HmmModel,
    n: usize,
    k: usize,
    kind: BoundKind,
    config: &ExpansionConfig,
) -> Result<BoundExpansion, ExpansionError> {
    check_normal(model).map_err(ExpansionError::NotNormal)?;
    check_horizon(n, k)?;
    check_order(k, config)?;
    let prep = prepare(model, k, config)?;
    let p = params(k, config, false);
    let tree = ExactTree::new(&prep.scaled, &prep.start, n, p);
    let (roots, dropped) = match kind {
        BoundKind::Upper => (tree.roots_stationary(&prep.start), 0),
        BoundKind::Lower => tree.roots_per_state(&prep.start),
    };
    let (acc, stats) = walk(
        &tree,
        roots,
        n,
        || BoundAcc::new(&p),
        |acc, _, leaf| acc.add_leaf(&leaf),
        BoundAcc::merge,
    );
    let stats = WalkStats {
        pruned: stats.pruned + dropped,
        ..stats
    };

    let kept = tree.mass_series(&acc.kept_mass);
    let discarded: Vec<Rational> = kept
        .iter()
        .enumerate()
        .map(|(t, c)| if t == 0 { Rational::one() - c } else { -c.clone() })
        .collect();
    if let Some(degree) = discarded.iter().position(|c| !c.is_zero()) {
        return Err(ExpansionError::DiscardedMass { degree });
    }
    let logpart = TruncSeries::from_coeffs(
        tree.mass_series(&acc.log_mass).into_iter().map(|c| -c),
        k + 1,
    );
    let mut plain: Vec<f64> = acc.plain.iter().map(|s| s.value()).collect();
    plain.push(0.0);
    Ok(BoundExpansion {
        kind,
        n,
        k,
        series: LogSeries::new(plain, logpart).expect("window lengths match"),
        diagnostics: Diagnostics {
            trunc_len: prep.trunc_len,
            slack: prep.slack,
            retries: prep.retries,
            stationary_shift: prep.start.shift,
            max_order_shift: acc.max_shift,
            sequences: stats.sequences,
            pruned: stats.pruned,
            discarded_mass: discarded,
        },
    })
}

/// Birch upper bound `H_n = H(Z_0 | Z_{-n}^{-1})` through order `k`.
pub fn birch_upper(
    model: &HmmModel,
    n: usize,
    k: usize,
    config: &ExpansionConfig,
) -> Result<BoundExpansion, ExpansionError> {
    run_bound(model, n, k, BoundKind::Upper, config)
}

/// Birch lower bound `H(Z_0 | Z_{-n}^{-1}, Y_{-n-1})` through order `k`.
pub fn birch_lower(
    model: &HmmModel,
    n: usize,
    k: usize,
    config: &ExpansionConfig,
) -> Result<BoundExpansion, ExpansionError> {
    run_bound(model, n, k, BoundKind::Lower, config)
}

/// Compares two bounds on `f_1 ..= f_{k+1}` (exactly) and on the plain
/// coefficients `ε^0 ..= ε^k`.
pub fn compare_bounds(upper: &BoundExpansion, lower: &BoundExpansion) -> BoundAgreement {
    let k = upper.k;
    let logpart_equal = upper.series.logpart() == lower.series.logpart();
    let max_plain_gap = (0..=k)
        .map(|j| (upper.series.plain()[j] - lower.series.plain()[j]).abs())
        .fold(0.0, f64::max);
    BoundAgreement {
        logpart_equal,
        max_plain_gap,
        lower: lower.diagnostics.clone(),
    }
}

/// Expansion of order `k` read from the upper bound at horizon `n ≥ 6k+6`.
pub fn expand_at(
    model: &HmmModel,
    k: usize,
    n: usize,
    config: &ExpansionConfig,
) -> Result<ExpansionResult, ExpansionError> {
    check_order(k, config)?;
    let upper = birch_upper(model, n, k, config)?;
    let mut result = ExpansionResult::from_window(k, &upper.series, n);
    result.diagnostics = upper.diagnostics.clone();
    if config.verify {
        let lower = birch_lower(model, n, k, config)?;
        let agreement = compare_bounds(&upper, &lower);
        if !agreement.agrees() {
            return Err(ExpansionError::BoundDisagreement(format!(
                "logpart equal: {}, max plain gap {:e}; upper logpart {:?}, lower logpart {:?}",
                agreement.logpart_equal,
                agreement.max_plain_gap,
                upper.series.logpart(),
                lower.series.logpart()
            )));
        }
        result.verification = Some(agreement);
    }
    Ok(result)
}

/// Expansion of order `k` at the theorem horizon `n0 = 6k + 6`.
pub fn expand(
    model: &HmmModel,
    k: usize,
    config: &ExpansionConfig,
) -> Result<ExpansionResult, ExpansionError> {
    expand_at(model, k, horizon(k), config)
}

/// Sequences of length `n + 1` with `ord p(z) ≤ k + 1`, in lexicographic
/// order, with their exact probability series (truncation `L − ord σ`).
pub fn enumerate_sequences(
    model: &HmmModel,
    n: usize,
    k: usize,
) -> Result<Vec<(Vec<usize>, TruncSeries)>, ExpansionError> {
    check_normal(model).map_err(ExpansionError::NotNormal)?;
    let config = ExpansionConfig::default();
    let prep = prepare(model, k, &config)?;
    let p = params(k, &config, true);
    let tree = ExactTree::new(&prep.scaled, &prep.start, n, p);
    let (out, _) = walk(
        &tree,
        tree.roots_stationary(&prep.start),
        n,
        Vec::new,
        |acc: &mut Vec<(Vec<usize>, TruncSeries)>, seq, leaf| {
            acc.push((seq.to_vec(), leaf.prob.expect("enumeration leaves carry probabilities")))
        },
        |mut a, b| {
            a.extend(b);
            a
        },
    );
    Ok(out)
}

/// `H_n` (or its lower counterpart) of the constant chain `Δ(ε)` at an
/// exact rational `ε`, with exact probabilities and one rounding per
/// logarithm. Zero-probability branches are skipped; nothing else is pruned.
pub fn bound_at(
    model: &HmmModel,
    n: usize,
    eps: &Rational,
    kind: BoundKind,
) -> Result<f64, ExpansionError> {
    let delta = model
        .delta()
        .iter()
        .map(|row| {
            row.iter()
                .map(|e| {
                    let v = e
                        .coeffs()
                        .iter()
                        .rev()
                        .fold(Rational::zero(), |acc, c| acc * eps + c);
                    TruncSeries::constant(v, 0)
                })
                .collect()
        })
        .collect();
    let at = HmmModel::new(delta, model.phi().to_vec(), model.symbols())?;
    let adj = adjugate_row(&at)?;
    let start = StartRows::from_adjugate(&adj);
    let scaled = ScaledModel::new(&at);
    let p = EngineParams {
        prune_ord: 0,
        plain_deg: 0,
        enumerate: false,
        precision: Precision::Extended,
    };
    let tree = ExactTree::new(&scaled, &start, n, p);
    let (roots, _) = match kind {
        BoundKind::Upper => (tree.roots_stationary(&start), 0),
        BoundKind::Lower => tree.roots_per_state(&start),
    };
    let (acc, _) = walk(
        &tree,
        roots,
        n,
        || BoundAcc::new(&p),
        |acc, _, leaf| acc.add_leaf(&leaf),
        BoundAcc::merge,
    );
    Ok(acc.plain[0].value())
}
