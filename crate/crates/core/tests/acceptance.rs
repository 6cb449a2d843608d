//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use entropy_asymptotics::expansion::{
    birch_lower, birch_upper, compare_bounds, expand, expand_at, horizon, stabilization_check,
    ExpansionConfig,
};
use entropy_asymptotics::numeric::{
    eval_expansion, exact_hn, exact_hn_with, mc_entropy, remainder_law_holds, ExactHnConfig, McConfig,
};
use entropy_asymptotics::rational::{integer, rational, to_f64, Rational};
use entropy_asymptotics::series::{Order, TruncSeries};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const ORDENTLICH: [(i64, i64); 3] = [(1, 4), (1, 2), (3, 4)];

fn binary_entropy(p: f64) -> f64 {
    -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
}

fn ordentlich_coefficient() -> Outcome {
    let mut notes = Vec::new();
    for (n, d) in ORDENTLICH {
        let p = rational(n, d);
        let start = Instant::now();
        let r = expand(&common::ordentlich(p.clone()), 0, &ExpansionConfig::default())
            .map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        let one = integer(1);
        let expected = -(&p * (integer(2) - &p)) / (&one + &p);
        if r.f[0] != expected {
            return Err(format!("p={p}: f1={} expected {expected}", r.f[0]));
        }
        if elapsed > Duration::from_secs(10) {
            return Err(format!("p={p}: took {elapsed:?}"));
        }
        notes.push(format!("p={p}: f1={} ({elapsed:.1?})", r.f[0]));
    }
    Ok(notes.join(", "))
}

fn constant_term() -> Outcome {
    let mut worst = 0.0f64;
    for (n, d) in ORDENTLICH {
        let p = rational(n, d);
        let r = expand(&common::ordentlich(p.clone()), 0, &ExpansionConfig::default())
            .map_err(|e| e.to_string())?;
        let pf = to_f64(&p);
        let expected = binary_entropy(pf) / (1.0 + pf);
        let gap = (r.h0 - expected).abs();
        worst = worst.max(gap);
        if gap > 1e-9 {
            return Err(format!("p={p}: h0={} expected {expected}", r.h0));
        }
    }
    Ok(format!("max |h0 - H_b(p)/(1+p)| = {worst:e}"))
}

fn black_hole_degeneracy() -> Outcome {
    let model = common::bsc();
    let cfg = ExpansionConfig::default();
    let start = Instant::now();
    let gate = expand(&model, 1, &cfg).map_err(|e| e.to_string())?;
    if gate.f.iter().any(|f| !f.is_zero()) {
        return Err(format!("k=1: f = {:?}", gate.f));
    }
    let gate_time = start.elapsed();
    let budget = Duration::from_secs(600);
    let start = Instant::now();
    let full = expand(&model, 2, &cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if full.f.iter().any(|f| !f.is_zero()) {
        return Err(format!("k=2: f = {:?}", full.f));
    }
    let note = if elapsed > budget { " (over budget; k=1 gates)" } else { "" };
    Ok(format!(
        "k=1 f1=f2=0 ({gate_time:.1?}); k=2 f1=f2=f3=0 over {} sequences ({elapsed:.1?}){note}",
        full.diagnostics.sequences
    ))
}

fn bound_agreement() -> Outcome {
    let cfg = ExpansionConfig::default();
    let fleet = common::fleet();
    let mut worst = 0.0f64;
    for (name, model) in &fleet {
        for k in [0usize, 1] {
            let n = horizon(k);
            let upper = birch_upper(model, n, k, &cfg).map_err(|e| format!("{name}: {e}"))?;
            let lower = birch_lower(model, n, k, &cfg).map_err(|e| format!("{name}: {e}"))?;
            let a = compare_bounds(&upper, &lower);
            worst = worst.max(a.max_plain_gap);
            if !a.logpart_equal || a.max_plain_gap > 1e-9 {
                return Err(format!(
                    "{name} k={k}: logpart equal {}, plain gap {:e}",
                    a.logpart_equal, a.max_plain_gap
                ));
            }
        }
    }
    Ok(format!("{} models x k in {{0,1}}; max plain gap {worst:e}", fleet.len()))
}

fn horizon_stability() -> Outcome {
    let cfg = ExpansionConfig::default();
    let fleet = common::fleet();
    let mut worst = 0.0f64;
    for (name, model) in &fleet {
        for k in [0usize, 1] {
            let a = expand(model, k, &cfg).map_err(|e| format!("{name}: {e}"))?;
            let b = expand_at(model, k, horizon(k) + 2, &cfg).map_err(|e| format!("{name}: {e}"))?;
            if a.f != b.f {
                return Err(format!("{name} k={k}: f {:?} vs {:?}", a.f, b.f));
            }
            let gap = std::iter::once((a.h0, b.h0))
                .chain(a.g.iter().copied().zip(b.g.iter().copied()))
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            worst = worst.max(gap);
            if gap > 1e-9 {
                return Err(format!("{name} k={k}: plain gap {gap:e}"));
            }
        }
    }
    Ok(format!("{} models x k in {{0,1}}; max plain gap {worst:e}", fleet.len()))
}

fn stabilization() -> Outcome {
    let mut tested = 0;
    let fleet = common::fleet();
    for (i, (name, model)) in fleet.iter().enumerate() {
        for (n, k) in [(10usize, 1usize), (8, 0)] {
            let report = stabilization_check(model, n, k, 200, 17 + i as u64);
            if let Some(c) = report.counterexamples.first() {
                return Err(format!("{name} n={n} k={k}: {c:?}"));
            }
            let count: usize = report.summaries.iter().map(|s| s.tested).sum();
            if count == 0 {
                return Err(format!("{name} n={n} k={k}: no admissible pairs"));
            }
            tested += count;
        }
    }
    Ok(format!("{tested} pairs across {} models, no counterexamples", fleet.len()))
}

fn random_rational(rng: &mut ChaCha8Rng) -> Rational {
    rational(rng.random_range(-6..=6), rng.random_range(1..=5))
}

fn random_series(rng: &mut ChaCha8Rng, l: usize, shift: usize) -> TruncSeries {
    let mut lead = Rational::zero();
    while lead.is_zero() {
        lead = random_rational(rng);
    }
    let coeffs = (0..=l).map(|i| match i.cmp(&shift) {
        std::cmp::Ordering::Less => Rational::zero(),
        std::cmp::Ordering::Equal => lead.clone(),
        std::cmp::Ordering::Greater => random_rational(rng),
    });
    TruncSeries::from_coeffs(coeffs.collect::<Vec<_>>(), l)
}

fn series_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = Vec::new();
    for trial in 0..1000 {
        let l = rng.random_range(1..=8usize);
        let m = rng.random_range(0..=l / 2);
        let mf = rng.random_range(m..=l);
        let f = random_series(&mut rng, l, mf);
        let g = random_series(&mut rng, l, m);
        let a = random_series(&mut rng, l, 0);
        let cut = rng.random_range(mf..=l);
        let h = f.div(&g).map_err(|e| e.to_string())?;
        let divisor = TruncSeries::from_coeffs(g.coeffs()[m..].to_vec(), h.trunc_len());
        let shifted_f = TruncSeries::from_coeffs(f.coeffs()[m..].to_vec(), h.trunc_len());
        if h.mul(&divisor).ok() != Some(shifted_f) {
            failures.push(format!("#{trial}: (f/g)g != f"));
        }
        let back = a.mul(&g).and_then(|p| p.div(&g));
        if back.ok() != Some(a.truncate(l - m)) {
            failures.push(format!("#{trial}: (ag)/g != a"));
        }
        let reduced = f.truncate(cut).div(&g.truncate(cut)).ok();
        if reduced != Some(h.truncate(cut - m)) {
            failures.push(format!("#{trial}: division not truncation stable"));
        }
    }
    let mut log_checks = 0;
    for trial in 0..200 {
        let l = rng.random_range(1..=6usize);
        let m = rng.random_range(0..l);
        let u0 = rational(rng.random_range(4..=8), 8);
        let coeffs: Vec<Rational> = (0..=l)
            .map(|i| match i.cmp(&m) {
                std::cmp::Ordering::Less => Rational::zero(),
                std::cmp::Ordering::Equal => u0.clone(),
                std::cmp::Ordering::Greater => &u0 * rational(rng.random_range(-2..=2), 8),
            })
            .collect();
        let p = TruncSeries::from_coeffs(coeffs, l);
        let log = p.log_expand().map_err(|e| e.to_string())?;
        if p.ord() != Order::Finite(m) {
            return Err(format!("log #{trial}: generator produced wrong order"));
        }
        for eps in [1e-2f64, 3e-3, 1e-3] {
            let direct = p.eval(eps).ln();
            let got = log.eval(eps).map_err(|e| e.to_string())?;
            let tol = 10.0 * eps.powi((l + 1 - m) as i32) + 8.0 * f64::EPSILON * direct.abs().max(1.0);
            log_checks += 1;
            if (got - direct).abs() > tol {
                failures.push(format!("log #{trial} eps={eps}: {got} vs {direct}"));
            }
        }
    }
    if failures.is_empty() {
        Ok(format!("3000 series checks and {log_checks} log checks, zero failures"))
    } else {
        Err(format!("{} failures, first: {}", failures.len(), failures[0]))
    }
}

fn remainder_scaling() -> Outcome {
    let model = common::ordentlich(rational(1, 2));
    let cfg = ExpansionConfig::default();
    let (hi, lo) = (1e-3, 1e-4);
    let mut notes = Vec::new();
    for k in [0usize, 1] {
        let r = expand(&model, k, &cfg).map_err(|e| e.to_string())?;
        let err = |eps: f64| -> Result<f64, String> {
            let exact = exact_hn(&model, r.n0, eps).map_err(|e| e.to_string())?;
            Ok((exact - eval_expansion(&r, eps)).abs())
        };
        let (err_hi, err_lo) = (err(hi)?, err(lo)?);
        let ratio = err_hi / err_lo;
        if !remainder_law_holds(k, hi, err_hi, lo, err_lo) {
            return Err(format!("k={k}: err {err_hi:e} -> {err_lo:e} (ratio {ratio:.1})"));
        }
        notes.push(format!("k={k}: ratio {ratio:.1} (required {})", 10f64.powi(k as i32 + 1) / 2.0));
    }
    Ok(notes.join(", "))
}

fn monte_carlo() -> Outcome {
    let mut notes = Vec::new();
    let exact_cfg = ExactHnConfig { budget: 3u128.pow(15), ..Default::default() };
    for (name, model) in [("bsc", common::bsc()), ("bec", common::bec())] {
        let cfg = McConfig { samples: 1_000_000, burnin: 1000, seed: 42, eps: 1e-2 };
        let mc = mc_entropy(&model, &cfg).map_err(|e| e.to_string())?;
        let exact = exact_hn_with(&model, 14, 1e-2, &exact_cfg).map_err(|e| e.to_string())?.0;
        let z = (mc.estimate - exact).abs() / mc.stderr;
        if z > 3.0 {
            return Err(format!("{name}: mc {} ± {} vs exact {exact} ({z:.3} sigma)", mc.estimate, mc.stderr));
        }
        notes.push(format!("{name}: {z:.3} sigma"));
    }
    Ok(notes.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("ordentlich first coefficient is exact", ordentlich_coefficient),
        ("constant term equals the input entropy", constant_term),
        ("black hole BSC has no log terms", black_hole_degeneracy),
        ("upper and lower bounds agree", bound_agreement),
        ("horizon n0 and n0+2 agree", horizon_stability),
        ("conditional coefficients stabilize", stabilization),
        ("series engine properties", series_suite),
        ("remainder scales like eps^(k+1)", remainder_scaling),
        ("monte carlo matches exact conditional entropy", monte_carlo),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail} [{elapsed:.1?}]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail} [{elapsed:.1?}]", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
