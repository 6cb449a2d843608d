//! JSON model files.
//!
//! ```json
//! {
//!   "states": 2,
//!   "symbols": 2,
//!   "truncation": 1,
//!   "phi": [0, 1],
//!   "delta": [[["1/2"], ["1/2"]], [["1"], ["0"]]]
//! }
//! ```
//!
//! `delta[i][j]` lists the coefficients of `ε^0, ε^1, …` of entry `(i, j)` as
//! exact rationals. Arrays may be shorter than `truncation + 1`; missing
//! coefficients are zero. Symbols and states are numbered from zero.
//! Serialization drops trailing zero coefficients (keeping at least one), so
//! parse → serialize → parse is the identity and serialize is canonical.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{HmmError, HmmModel};
use crate::rational::{format_rational, parse_rational, RationalParseError};
use crate::series::TruncSeries;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub states: usize,
    pub symbols: usize,
    pub truncation: usize,
    pub phi: Vec<usize>,
    pub delta: Vec<Vec<Vec<String>>>,
}

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("model file syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("declared {declared} states but delta has {found} rows")]
    StateCount { declared: usize, found: usize },
    #[error("entry ({row}, {col}) lists {found} coefficients, truncation allows {max}")]
    TooManyCoefficients {
        row: usize,
        col: usize,
        found: usize,
        max: usize,
    },
    #[error("entry ({row}, {col}) coefficient {degree}: {source}")]
    Rational {
        row: usize,
        col: usize,
        degree: usize,
        source: RationalParseError,
    },
    #[error(transparent)]
    Invalid(#[from] HmmError),
}

impl ModelFile {
    pub fn from_model(model: &HmmModel) -> Self {
        let delta = model
            .delta()
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| {
                        let keep = e.coeffs().iter().rposition(|c| !num_traits::Zero::is_zero(c));
                        let end = keep.map_or(1, |k| k + 1);
                        e.coeffs()[..end].iter().map(format_rational).collect()
                    })
                    .collect()
            })
            .collect();
        Self {
            states: model.states(),
            symbols: model.symbols(),
            truncation: model.trunc_len(),
            phi: model.phi().to_vec(),
            delta,
        }
    }

    pub fn to_model(&self) -> Result<HmmModel, ModelFileError> {
        if self.delta.len() != self.states {
            return Err(ModelFileError::StateCount {
                declared: self.states,
                found: self.delta.len(),
            });
        }
        let mut delta = Vec::with_capacity(self.states);
        for (row, entries) in self.delta.iter().enumerate() {
            let mut parsed = Vec::with_capacity(entries.len());
            for (col, coeffs) in entries.iter().enumerate() {
                if coeffs.len() > self.truncation + 1 {
                    return Err(ModelFileError::TooManyCoefficients {
                        row,
                        col,
                        found: coeffs.len(),
                        max: self.truncation + 1,
                    });
                }
                let values = coeffs
                    .iter()
                    .enumerate()
                    .map(|(degree, text)| {
                        parse_rational(text).map_err(|source| ModelFileError::Rational {
                            row,
                            col,
                            degree,
                            source,
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                parsed.push(TruncSeries::from_coeffs(values, self.truncation));
            }
            delta.push(parsed);
        }
        Ok(HmmModel::new(delta, self.phi.clone(), self.symbols)?)
    }
}

impl HmmModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelFile::from_model(self)).expect("model file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelFileError> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| ModelFileError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        file.to_model()
    }
}
