#![allow(dead_code)]

use entropy_asymptotics::channels::{bec_model, bsc_model, ge_model, MarkovInput};
use entropy_asymptotics::hmm::{check_normal, HmmModel};
use entropy_asymptotics::rational::{integer, rational, Rational};
use entropy_asymptotics::series::TruncSeries;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn input() -> MarkovInput {
    MarkovInput::binary(rational(1, 3), rational(1, 4)).unwrap()
}

pub fn ordentlich(p: Rational) -> HmmModel {
    bsc_model(&MarkovInput::ordentlich(p).unwrap()).unwrap()
}

pub fn bsc() -> HmmModel {
    bsc_model(&input()).unwrap()
}

pub fn bec() -> HmmModel {
    bec_model(&input()).unwrap()
}

pub fn ge() -> HmmModel {
    ge_model(&input(), rational(1, 2), rational(1, 2), integer(2)).unwrap()
}

pub fn presets() -> Vec<(String, HmmModel)> {
    vec![("bsc".into(), bsc()), ("bec".into(), bec()), ("ge".into(), ge())]
}

fn weights(rng: &mut ChaCha8Rng, len: usize, zero_chance: f64) -> Vec<Rational> {
    loop {
        let raw: Vec<i64> = (0..len)
            .map(|_| if rng.random_bool(zero_chance) { 0 } else { rng.random_range(1..=4) })
            .collect();
        let total: i64 = raw.iter().sum();
        if total > 0 {
            return raw.iter().map(|&w| rational(w, total)).collect();
        }
    }
}

/// `Δ(ε) = (1 − ε − ε²)Δ0 + εR1 + ε²R2` over a binary alphabet, where every
/// block of `Δ0` is rank ≤ 1 and `R1`, `R2` are strictly positive stochastic
/// matrices.
pub fn random_weak_black_hole(seed: u64) -> HmmModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = rng.random_range(2..=4usize);
    let mut phi = vec![0, 1];
    phi.extend((2..states).map(|_| rng.random_range(0..2usize)));
    let cols: Vec<Vec<usize>> = (0..2)
        .map(|a| (0..states).filter(|&s| phi[s] == a).collect())
        .collect();
    let v: Vec<Vec<Rational>> = cols.iter().map(|c| weights(&mut rng, c.len(), 0.3)).collect();
    let strict = |rng: &mut ChaCha8Rng| -> Vec<Vec<Rational>> {
        (0..states).map(|_| weights(rng, states, 0.0)).collect()
    };
    let r1 = strict(&mut rng);
    let r2 = strict(&mut rng);
    let mut delta = Vec::with_capacity(states);
    for y in 0..states {
        let c = weights(&mut rng, 2, 0.3);
        let mut row = vec![Rational::from_integer(0.into()); states];
        for a in 0..2 {
            for (i, &s) in cols[a].iter().enumerate() {
                row[s] = &c[a] * &v[a][i];
            }
        }
        delta.push(
            (0..states)
                .map(|s| {
                    let d0 = row[s].clone();
                    TruncSeries::from_coeffs(
                        [d0.clone(), &r1[y][s] - &d0, &r2[y][s] - &d0],
                        2,
                    )
                })
                .collect(),
        );
    }
    let model = HmmModel::new(delta, phi, 2).unwrap();
    check_normal(&model).unwrap();
    model
}

pub fn fleet() -> Vec<(String, HmmModel)> {
    let mut out = presets();
    out.extend((0..20).map(|i| (format!("random#{i}"), random_weak_black_hole(1000 + i))));
    out
}
