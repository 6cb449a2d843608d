use anyhow::anyhow;
use entropy_asymptotics::expansion::{
    birch_lower, birch_upper, compare_bounds, expand_at, format_real, horizon, BoundExpansion,
    DiagnosticsDocument, ExpansionConfig, ExpansionError,
};
use entropy_asymptotics::hmm::{check_normal, classify, HmmModel, ModelFile};
use entropy_asymptotics::numeric::{
    eval_expansion, exact_hn_with, mc_entropy, remainder_law_holds, ExactHnConfig, McConfig,
};
use entropy_asymptotics::rational::format_rational;
use entropy_asymptotics::series::Precision;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::Command;
use crate::failure::{Failure, Outcome};
use crate::manifest::write_atomic;
use crate::source::{load, model_hash, real_arg};

/// The result of one command, before it is wrapped into a manifest.
pub struct Run {
    pub model_hash: String,
    pub payload: Value,
    /// One human-readable line for stderr.
    pub summary: String,
    /// Set when the run completed but violated a checked law.
    pub law_failure: Option<String>,
}

fn expansion_failure(e: ExpansionError) -> Failure {
    match e {
        ExpansionError::BoundDisagreement(_) => Failure::new(crate::failure::LAW, e),
        other => Failure::validation(other),
    }
}

fn bound_document(b: &BoundExpansion) -> Value {
    json!({
        "kind": b.kind,
        "plain": b.series.plain().iter().map(|x| format_real(*x)).collect::<Vec<_>>(),
        "logpart": b.series.logpart().coeffs().iter().map(format_rational).collect::<Vec<_>>(),
        "diagnostics": DiagnosticsDocument::from(&b.diagnostics),
    })
}

#[derive(Serialize)]
struct CompareRow {
    eps: String,
    expansion: String,
    exact: String,
    gap: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_stderr: Option<String>,
    /// `|mc − exact| / stderr`.
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_sigma: Option<String>,
}

fn write_csv(path: &std::path::Path, rows: &[CompareRow]) -> Outcome<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Failure::validation(anyhow!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::validation(anyhow!("csv: {e}")))?;
    write_atomic(path, &bytes)
}

/// Runs `cmd`. During a replay, files the command would write (model files,
/// CSV tables) are left alone.
pub fn run(cmd: &Command, replaying: bool) -> Outcome<Run> {
    let model: HmmModel = load(cmd.model())?;
    let hash = model_hash(&model);
    let done = |payload: Value, summary: String| Run {
        model_hash: hash.clone(),
        payload,
        summary,
        law_failure: None,
    };
    match cmd {
        Command::Detect { .. } => {
            let c = classify(&model);
            let violations = check_normal(&model).err().unwrap_or_default();
            let summary = format!("{:?}; normal: {}", c.kind, violations.is_empty());
            Ok(done(
                json!({
                    "kind": c.kind,
                    "per_symbol": c.per_symbol,
                    "normal": violations.is_empty(),
                    "violations": violations,
                }),
                summary,
            ))
        }
        Command::Expand {
            k,
            n,
            verify,
            slack,
            extended,
            ..
        } => {
            let cfg = ExpansionConfig {
                slack: *slack,
                verify: *verify,
                precision: if *extended { Precision::Extended } else { Precision::Double },
                ..Default::default()
            };
            let r = expand_at(&model, *k, n.unwrap_or_else(|| horizon(*k)), &cfg).map_err(expansion_failure)?;
            let doc = r.to_document();
            let summary = format!("h0 = {}, f = [{}], g = [{}]", doc.h0, doc.f.join(", "), doc.g.join(", "));
            Ok(done(serde_json::to_value(doc).expect("document serializes"), summary))
        }
        Command::Bounds { k, n, .. } => {
            let n = n.unwrap_or_else(|| horizon(*k));
            let cfg = ExpansionConfig::default();
            let upper = birch_upper(&model, n, *k, &cfg).map_err(expansion_failure)?;
            let lower = birch_lower(&model, n, *k, &cfg).map_err(expansion_failure)?;
            let agreement = compare_bounds(&upper, &lower);
            let summary = format!(
                "n = {n}, k = {k}: logpart equal {}, max plain gap {:e}",
                agreement.logpart_equal, agreement.max_plain_gap
            );
            Ok(done(
                json!({
                    "n": n,
                    "k": k,
                    "upper": bound_document(&upper),
                    "lower": bound_document(&lower),
                    "agreement": {
                        "agrees": agreement.agrees(),
                        "logpart_equal": agreement.logpart_equal,
                        "max_plain_gap": format_real(agreement.max_plain_gap),
                    },
                }),
                summary,
            ))
        }
        Command::Compare {
            k,
            eps,
            n,
            samples,
            seed,
            burnin,
            budget,
            csv,
            ..
        } => {
            let mut levels = eps
                .iter()
                .map(|e| real_arg("eps", e))
                .collect::<Outcome<Vec<f64>>>()?;
            if levels.is_empty() {
                return Err(Failure::validation(anyhow!("--eps needs at least one value")));
            }
            levels.sort_by(|a, b| b.total_cmp(a));
            let r = expand_at(&model, *k, n.unwrap_or_else(|| horizon(*k)), &ExpansionConfig::default())
                .map_err(expansion_failure)?;
            let exact_cfg = ExactHnConfig {
                budget: budget.unwrap_or(ExactHnConfig::default().budget),
                ..Default::default()
            };
            let mut rows = Vec::new();
            let mut errors = Vec::new();
            for &e in &levels {
                let expansion = eval_expansion(&r, e);
                let exact = exact_hn_with(&model, r.n0, e, &exact_cfg)
                    .map_err(Failure::validation)?
                    .0;
                let gap = (exact - expansion).abs();
                errors.push(gap);
                let mc = if *samples > 0 {
                    let cfg = McConfig {
                        samples: *samples,
                        burnin: *burnin,
                        seed: *seed,
                        eps: e,
                    };
                    Some(mc_entropy(&model, &cfg).map_err(Failure::validation)?)
                } else {
                    None
                };
                let sigma = mc.map(|m| {
                    let d = (m.estimate - exact).abs();
                    if d == 0.0 { 0.0 } else { d / m.stderr }
                });
                rows.push(CompareRow {
                    eps: format_real(e),
                    expansion: format_real(expansion),
                    exact: format_real(exact),
                    gap: format_real(gap),
                    mc: mc.map(|m| format_real(m.estimate)),
                    mc_stderr: mc.map(|m| format_real(m.stderr)),
                    mc_sigma: sigma.map(format_real),
                });
            }
            let mut law = Vec::new();
            let mut law_failure = None;
            for i in 1..levels.len() {
                let holds = remainder_law_holds(*k, levels[i - 1], errors[i - 1], levels[i], errors[i]);
                let ratio = if errors[i] == 0.0 { f64::INFINITY } else { errors[i - 1] / errors[i] };
                if !holds && law_failure.is_none() {
                    law_failure = Some(format!(
                        "remainder did not shrink like eps^{} between {:e} and {:e} (ratio {ratio:.3})",
                        k + 1,
                        levels[i - 1],
                        levels[i]
                    ));
                }
                law.push(json!({
                    "eps_hi": format_real(levels[i - 1]),
                    "eps_lo": format_real(levels[i]),
                    "ratio": format_real(ratio),
                    "holds": holds,
                }));
            }
            if let (Some(path), false) = (csv, replaying) {
                write_csv(path, &rows)?;
            }
            let summary = rows
                .iter()
                .map(|r| format!("eps {}: gap {}", r.eps, r.gap))
                .collect::<Vec<_>>()
                .join("; ");
            Ok(Run {
                model_hash: hash,
                payload: json!({
                    "k": k,
                    "n0": r.n0,
                    "expansion": r.to_document(),
                    "rows": rows,
                    "law": law,
                }),
                summary,
                law_failure,
            })
        }
        Command::Mc {
            eps,
            samples,
            seed,
            burnin,
            ..
        } => {
            let cfg = McConfig {
                samples: *samples,
                burnin: *burnin,
                seed: *seed,
                eps: real_arg("eps", eps)?,
            };
            let est = mc_entropy(&model, &cfg).map_err(Failure::validation)?;
            let summary = format!("{} ± {}", est.estimate, est.stderr);
            Ok(done(serde_json::to_value(est).expect("estimate serializes"), summary))
        }
        Command::EmitModel { path, .. } => {
            let file = ModelFile::from_model(&model);
            if !replaying {
                write_atomic(path, model.to_json().as_bytes())?;
            }
            let summary = format!("{} states, {} symbols -> {}", file.states, file.symbols, path.display());
            Ok(done(json!({ "model": file }), summary))
        }
    }
}
