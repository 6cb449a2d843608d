use std::fs;

use anyhow::anyhow;
use entropy_asymptotics::channels::{bec_model, bsc_model, ge_model, MarkovInput};
use entropy_asymptotics::hmm::{HmmModel, ModelFile, ModelFileError};
use entropy_asymptotics::rational::{integer, parse_rational, Rational};
use sha2::{Digest, Sha256};

use crate::args::{ModelArgs, Preset};
use crate::failure::{Failure, Outcome};

pub fn rational_arg(flag: &str, text: &str) -> Outcome<Rational> {
    parse_rational(text).map_err(|e| Failure::parse(anyhow!("--{flag} {text:?}: {e}")))
}

/// A noise level given either as an exact rational or a decimal.
pub fn real_arg(flag: &str, text: &str) -> Outcome<f64> {
    if let Ok(r) = parse_rational(text) {
        return Ok(entropy_asymptotics::rational::to_f64(&r));
    }
    text.trim()
        .parse::<f64>()
        .map_err(|_| Failure::parse(anyhow!("--{flag} {text:?}: not a number")))
}

fn input(args: &ModelArgs) -> Outcome<MarkovInput> {
    let built = match (&args.pi, &args.pi00, &args.pi11) {
        (Some(p), _, _) => MarkovInput::ordentlich(rational_arg("pi", p)?),
        (None, Some(a), Some(b)) => MarkovInput::binary(rational_arg("pi00", a)?, rational_arg("pi11", b)?),
        _ => {
            return Err(Failure::validation(anyhow!(
                "presets need --pi, or both --pi00 and --pi11"
            )))
        }
    };
    built.map_err(Failure::validation)
}

pub fn load(args: &ModelArgs) -> Outcome<HmmModel> {
    if let Some(path) = &args.model {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::validation(anyhow!("reading {}: {e}", path.display())))?;
        return HmmModel::from_json(&text).map_err(|e| {
            let code = match e {
                ModelFileError::Syntax { .. } | ModelFileError::Rational { .. } => crate::failure::PARSE,
                _ => crate::failure::VALIDATION,
            };
            Failure::new(code, e).context(format!("model file {}", path.display()))
        });
    }
    let preset = args
        .preset
        .ok_or_else(|| Failure::validation(anyhow!("give --model FILE or --preset")))?;
    let input = input(args)?;
    let model = match preset {
        Preset::Bsc => bsc_model(&input),
        Preset::Bec => bec_model(&input),
        Preset::Ge => {
            let q0 = rational_arg("q0", &args.q0)?;
            let kappa = rational_arg("kappa", &args.kappa)?;
            ge_model(&input, q0.clone(), integer(1) - q0, kappa)
        }
    };
    model.map_err(Failure::validation)
}

/// SHA-256 of the canonical model file.
pub fn model_hash(model: &HmmModel) -> String {
    let canonical = serde_json::to_vec(&ModelFile::from_model(model)).expect("model file serializes");
    hex::encode(Sha256::digest(&canonical))
}
