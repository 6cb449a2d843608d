//! Markov inputs passed through memoryless channels with i.i.d. channel
//! states, realized as [`HmmModel`]s.
//!
//! Hidden states are triples `(block, c, e)` of an input block (the last `m`
//! input symbols, oldest most significant), a channel state and an error
//! event, indexed as `(block · |C| + c) · |E| + e` — alphabetical order when
//! `m = 1`. The transition matrix is
//! `Δ_{(b,c,e),(b',d,f)} = P(b → b') · q_d · p(f | x(b'), d)`.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::expansion::{expand, ExpansionConfig, ExpansionError, ExpansionResult};
use crate::hmm::{HmmError, HmmModel};
use crate::linalg::{stationary_exact, strongly_connected};
use crate::rational::{ln_positive, to_f64, Rational};
use crate::series::{LogSeries, Precision, RealSum, TruncSeries};

/// Output symbol of an erasure in [`bec_model`]; `0` and `1` are the inputs.
pub const ERASURE: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("input order must be at least 1")]
    ZeroOrder,
    #[error("input alphabet must have at least one symbol")]
    EmptyAlphabet,
    #[error("input alphabet has {0} symbols; this channel needs a binary input")]
    NotBinary(usize),
    #[error("input chain has too many blocks ({0})")]
    TooManyBlocks(u128),
    #[error("transition table has {found} rows of the wrong shape, expected {rows} rows of {cols}")]
    TransitionShape { found: usize, rows: usize, cols: usize },
    #[error("transition row {0} has a negative entry")]
    NegativeTransition(usize),
    #[error("transition row {0} does not sum to 1")]
    TransitionRowSum(usize),
    #[error("the blocked input chain is reducible")]
    Reducible,
    #[error("channel state probabilities must be non-negative and sum to 1")]
    StateProbabilities,
    #[error("kappa must be positive")]
    Kappa,
    #[error("noise table shape does not match |X| × |C| × |E|")]
    NoiseShape,
    #[error("noise series have different truncation lengths")]
    NoiseTruncation,
    #[error("noise p(·|x={x}, c={c}) does not sum to 1")]
    NoiseRowSum { x: usize, c: usize },
    #[error("noise p(e={e}|x={x}, c={c}) has a negative leading coefficient")]
    NoiseNegative { x: usize, c: usize, e: usize },
    #[error("output map sends (x={x}, c={c}, e={e}) to {z}, outside the output alphabet")]
    OutputRange { x: usize, c: usize, e: usize, z: usize },
    #[error("no noiseless embedding: input symbol {x} is not mapped to a fixed output with probability 1 at ε = 0")]
    Embedding { x: usize },
    #[error("noiseless embedding is not one-to-one: inputs {x} and {y} share output {z}")]
    EmbeddingNotInjective { x: usize, y: usize, z: usize },
    #[error(transparent)]
    Hmm(#[from] HmmError),
}

/// A stationary Markov input of order `m` over `0..alphabet`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkovInput {
    order: usize,
    alphabet: usize,
    /// `transitions[block][a] = P(X_t = a | last m symbols = block)`.
    transitions: Vec<Vec<Rational>>,
}

impl MarkovInput {
    pub fn new(
        order: usize,
        alphabet: usize,
        transitions: Vec<Vec<Rational>>,
    ) -> Result<Self, ChannelError> {
        if order == 0 {
            return Err(ChannelError::ZeroOrder);
        }
        if alphabet == 0 {
            return Err(ChannelError::EmptyAlphabet);
        }
        let blocks = (alphabet as u128).checked_pow(order as u32).unwrap_or(u128::MAX);
        if blocks > 4096 {
            return Err(ChannelError::TooManyBlocks(blocks));
        }
        let blocks = blocks as usize;
        if transitions.len() != blocks || transitions.iter().any(|r| r.len() != alphabet) {
            return Err(ChannelError::TransitionShape {
                found: transitions.len(),
                rows: blocks,
                cols: alphabet,
            });
        }
        for (b, row) in transitions.iter().enumerate() {
            if row.iter().any(Signed::is_negative) {
                return Err(ChannelError::NegativeTransition(b));
            }
            if !row.iter().sum::<Rational>().is_one() {
                return Err(ChannelError::TransitionRowSum(b));
            }
        }
        let input = Self {
            order,
            alphabet,
            transitions,
        };
        let lifted = input.blocked();
        if !strongly_connected(blocks, |i, j| !lifted[i][j].is_zero()) {
            return Err(ChannelError::Reducible);
        }
        Ok(input)
    }

    /// A first-order chain with transition matrix `pi`.
    pub fn first_order(pi: Vec<Vec<Rational>>) -> Result<Self, ChannelError> {
        let alphabet = pi.len();
        Self::new(1, alphabet, pi)
    }

    /// Binary first-order chain `[[π00, 1−π00], [1−π11, π11]]`.
    pub fn binary(pi00: Rational, pi11: Rational) -> Result<Self, ChannelError> {
        let one = Rational::one();
        Self::first_order(vec![
            vec![pi00.clone(), &one - &pi00],
            vec![&one - &pi11, pi11],
        ])
    }

    /// The chain `[[1−p, p], [1, 0]]` (no two consecutive ones).
    pub fn ordentlich(p: Rational) -> Result<Self, ChannelError> {
        Self::binary(Rational::one() - p, Rational::zero())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn transitions(&self) -> &[Vec<Rational>] {
        &self.transitions
    }

    /// Number of `m`-blocks, `|X|^m`.
    pub fn blocks(&self) -> usize {
        self.transitions.len()
    }

    /// Most recent symbol of a block.
    pub fn last_symbol(&self, block: usize) -> usize {
        block % self.alphabet
    }

    /// The block reached from `block` by emitting `a`.
    pub fn next_block(&self, block: usize, a: usize) -> usize {
        (block * self.alphabet + a) % self.blocks()
    }

    fn blocked(&self) -> Vec<Vec<Rational>> {
        let n = self.blocks();
        let mut p = vec![vec![Rational::zero(); n]; n];
        for (b, row) in p.iter_mut().enumerate() {
            for a in 0..self.alphabet {
                row[self.next_block(b, a)] += &self.transitions[b][a];
            }
        }
        p
    }

    /// Stationary distribution over blocks.
    pub fn stationary_blocks(&self) -> Vec<Rational> {
        stationary_exact(&self.blocked()).expect("irreducible chain has a stationary vector")
    }

    /// Stationary marginal of a single input symbol.
    pub fn stationary_symbols(&self) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.alphabet];
        for (b, p) in self.stationary_blocks().into_iter().enumerate() {
            out[self.last_symbol(b)] += p;
        }
        out
    }
}

/// The order-1 chain on `|X|^m` blocks induced by an order-`m` input
/// (de Bruijn lift). For `m = 1` this is the input matrix itself.
pub fn blocked_markov(input: &MarkovInput) -> Vec<Vec<Rational>> {
    input.blocked()
}

/// Entropy rate of the input chain in nats.
pub fn markov_entropy(input: &MarkovInput) -> f64 {
    let pi = input.stationary_blocks();
    let mut total = RealSum::new(Precision::Extended);
    for (b, row) in input.transitions.iter().enumerate() {
        let weight = to_f64(&pi[b]);
        for p in row.iter().filter(|p| p.is_positive()) {
            total.add(-weight * to_f64(p) * ln_positive(p));
        }
    }
    total.value()
}

/// The generic memoryless channel: i.i.d. states `c` with probabilities
/// `q_c`, error events `e ~ p(e | x, c)` and outputs `z = Φ(x, c, e)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemorylessChannelSpec {
    pub state_probs: Vec<Rational>,
    /// `noise[x][c][e] = p(e | x, c)`.
    pub noise: Vec<Vec<Vec<TruncSeries>>>,
    /// `output[x][c][e] = Φ(x, c, e)`.
    pub output: Vec<Vec<Vec<usize>>>,
    pub outputs: usize,
}

impl MemorylessChannelSpec {
    pub fn states(&self) -> usize {
        self.state_probs.len()
    }

    pub fn errors(&self) -> usize {
        self.noise.first().and_then(|r| r.first()).map_or(0, Vec::len)
    }

    fn trunc_len(&self) -> usize {
        self.noise[0][0][0].trunc_len()
    }

    /// `p(z | x) = Σ_c q_c Σ_{e : Φ(x,c,e) = z} p(e | x, c)`.
    pub fn output_law(&self, x: usize, z: usize) -> TruncSeries {
        let mut acc = TruncSeries::zero(self.trunc_len());
        for (c, q) in self.state_probs.iter().enumerate() {
            for (e, p) in self.noise[x][c].iter().enumerate() {
                if self.output[x][c][e] == z {
                    acc.add_assign_truncated(&p.scale(q));
                }
            }
        }
        acc
    }

    /// Checks the spec against an input alphabet of size `inputs`.
    pub fn validate(&self, inputs: usize) -> Result<(), ChannelError> {
        let states = self.states();
        let errors = self.errors();
        if self.state_probs.iter().any(Signed::is_negative)
            || !self.state_probs.iter().sum::<Rational>().is_one()
        {
            return Err(ChannelError::StateProbabilities);
        }
        fn shaped<T>(t: &[Vec<Vec<T>>], inputs: usize, states: usize, errors: usize) -> bool {
            t.len() == inputs && t.iter().all(|r| r.len() == states && r.iter().all(|s| s.len() == errors))
        }
        if errors == 0
            || !shaped(&self.noise, inputs, states, errors)
            || !shaped(&self.output, inputs, states, errors)
        {
            return Err(ChannelError::NoiseShape);
        }
        let l = self.trunc_len();
        for x in 0..inputs {
            for c in 0..states {
                let mut sum = TruncSeries::zero(l);
                for e in 0..errors {
                    let p = &self.noise[x][c][e];
                    if p.trunc_len() != l {
                        return Err(ChannelError::NoiseTruncation);
                    }
                    if p.leading().is_some_and(|(_, v)| v.is_negative()) {
                        return Err(ChannelError::NoiseNegative { x, c, e });
                    }
                    let z = self.output[x][c][e];
                    if z >= self.outputs {
                        return Err(ChannelError::OutputRange { x, c, e, z });
                    }
                    sum.add_assign_truncated(p);
                }
                if sum != TruncSeries::one(l) {
                    return Err(ChannelError::NoiseRowSum { x, c });
                }
            }
        }
        self.embedding(inputs).map(|_| ())
    }

    /// The noiseless embedding `x ↦ z(x)` with `p(z(x) | x, c)(0) = 1` for all `c`.
    pub fn embedding(&self, inputs: usize) -> Result<Vec<usize>, ChannelError> {
        let mut map: Vec<usize> = Vec::with_capacity(inputs);
        for x in 0..inputs {
            let z = (0..self.outputs).find(|&z| {
                (0..self.states()).all(|c| {
                    let mut at_zero = Rational::zero();
                    for (e, p) in self.noise[x][c].iter().enumerate() {
                        if self.output[x][c][e] == z {
                            at_zero += p.coeff(0);
                        }
                    }
                    at_zero.is_one()
                })
            });
            let z = z.ok_or(ChannelError::Embedding { x })?;
            if let Some(y) = map.iter().position(|&w| w == z) {
                return Err(ChannelError::EmbeddingNotInjective { x: y, y: x, z });
            }
            map.push(z);
        }
        Ok(map)
    }

    /// Realizes a channel law `p(z | x, c)` in the noise framework with
    /// `E = X × C × Z`: `p(e = (x,c,z) | x', c') = p(z | x, c)` when
    /// `(x, c) = (x', c')` and `0` otherwise; `Φ(x', c', (x,c,z)) = z`.
    pub fn from_channel_law(
        state_probs: Vec<Rational>,
        law: &[Vec<Vec<TruncSeries>>],
        outputs: usize,
    ) -> Result<Self, ChannelError> {
        let inputs = law.len();
        let states = state_probs.len();
        if inputs == 0 || law.iter().any(|r| r.len() != states || r.iter().any(|s| s.len() != outputs)) {
            return Err(ChannelError::NoiseShape);
        }
        let l = law[0][0][0].trunc_len();
        let errors = inputs * states * outputs;
        let index = |x: usize, c: usize, z: usize| (x * states + c) * outputs + z;
        let mut noise = vec![vec![vec![TruncSeries::zero(l); errors]; states]; inputs];
        let mut output = vec![vec![vec![0; errors]; states]; inputs];
        for xp in 0..inputs {
            for cp in 0..states {
                for x in 0..inputs {
                    for c in 0..states {
                        for z in 0..outputs {
                            let e = index(x, c, z);
                            output[xp][cp][e] = z;
                            if (x, c) == (xp, cp) {
                                noise[xp][cp][e] = law[x][c][z].clone();
                            }
                        }
                    }
                }
            }
        }
        let spec = Self {
            state_probs,
            noise,
            output,
            outputs,
        };
        spec.validate(inputs)?;
        Ok(spec)
    }
}

fn affine(constant: &Rational, slope: &Rational) -> TruncSeries {
    TruncSeries::from_coeffs([constant.clone(), slope.clone()], 1)
}

/// `1 − ε·rate` and `ε·rate` as affine series.
fn flip_pair(rate: &Rational) -> (TruncSeries, TruncSeries) {
    (affine(&Rational::one(), &-rate.clone()), affine(&Rational::zero(), rate))
}

/// Binary symmetric noise `p(1) = ε`, `Φ(x, e) = x ⊕ e`.
pub fn bsc_spec() -> MemorylessChannelSpec {
    let (keep, flip) = flip_pair(&Rational::one());
    MemorylessChannelSpec {
        state_probs: vec![Rational::one()],
        noise: vec![vec![vec![keep.clone(), flip.clone()]]; 2],
        output: vec![vec![vec![0, 1]], vec![vec![1, 0]]],
        outputs: 2,
    }
}

/// Erasure noise `p(1) = ε`, `Φ(x, 0) = x`, `Φ(x, 1) = ERASURE`.
pub fn bec_spec() -> MemorylessChannelSpec {
    let (keep, flip) = flip_pair(&Rational::one());
    MemorylessChannelSpec {
        state_probs: vec![Rational::one()],
        noise: vec![vec![vec![keep.clone(), flip.clone()]]; 2],
        output: vec![vec![vec![0, ERASURE]], vec![vec![1, ERASURE]]],
        outputs: 3,
    }
}

/// Gilbert–Elliott noise with i.i.d. states: crossover `ε` in state 0 and
/// `κε` in state 1, `Φ(x, c, e) = x ⊕ e`.
pub fn ge_spec(q0: Rational, q1: Rational, kappa: Rational) -> Result<MemorylessChannelSpec, ChannelError> {
    if q0.is_negative() || q1.is_negative() || !(&q0 + &q1).is_one() {
        return Err(ChannelError::StateProbabilities);
    }
    if !kappa.is_positive() {
        return Err(ChannelError::Kappa);
    }
    let (k0, f0) = flip_pair(&Rational::one());
    let (k1, f1) = flip_pair(&kappa);
    let per_state = vec![vec![k0, f0], vec![k1, f1]];
    Ok(MemorylessChannelSpec {
        state_probs: vec![q0, q1],
        noise: vec![per_state.clone(), per_state],
        output: vec![vec![vec![0, 1]; 2], vec![vec![1, 0]; 2]],
        outputs: 2,
    })
}

/// Builds `Δ_{(b,c,e),(b',d,f)} = P(b → b') · q_d · p(f | x(b'), d)` with
/// `Φ(b, c, e) = Φ(x(b), c, e)`.
pub fn build_memoryless(
    input: &MarkovInput,
    spec: &MemorylessChannelSpec,
) -> Result<HmmModel, ChannelError> {
    spec.validate(input.alphabet())?;
    let (cs, es) = (spec.states(), spec.errors());
    let l = spec.trunc_len();
    let per_block = cs * es;
    let n = input.blocks() * per_block;
    let zero = TruncSeries::zero(l);
    let mut delta = vec![vec![zero.clone(); n]; n];
    let mut phi = vec![0; n];
    for b in 0..input.blocks() {
        let x = input.last_symbol(b);
        for c in 0..cs {
            for e in 0..es {
                phi[b * per_block + c * es + e] = spec.output[x][c][e];
            }
        }
        // all rows of block b are identical
        let mut row = vec![zero.clone(); n];
        for a in 0..input.alphabet() {
            let pb = &input.transitions()[b][a];
            if pb.is_zero() {
                continue;
            }
            let target = input.next_block(b, a);
            for (d, q) in spec.state_probs.iter().enumerate() {
                let w = pb * q;
                for f in 0..es {
                    row[target * per_block + d * es + f] = spec.noise[a][d][f].scale(&w);
                }
            }
        }
        for r in 0..per_block {
            delta[b * per_block + r] = row.clone();
        }
    }
    Ok(HmmModel::new(delta, phi, spec.outputs)?)
}

fn require_binary(input: &MarkovInput) -> Result<(), ChannelError> {
    if input.alphabet() != 2 {
        return Err(ChannelError::NotBinary(input.alphabet()));
    }
    Ok(())
}

/// Binary input through BSC(ε): states `(block, e)`, `Φ = x ⊕ e`.
///
/// Built directly rather than through [`build_memoryless`]; the two
/// constructions agree state for state.
pub fn bsc_model(input: &MarkovInput) -> Result<HmmModel, ChannelError> {
    require_binary(input)?;
    let n = 2 * input.blocks();
    let mut delta = vec![vec![TruncSeries::zero(1); n]; n];
    for (i, row) in delta.iter_mut().enumerate() {
        let b = i / 2;
        for a in 0..2 {
            let p = &input.transitions()[b][a];
            let t = input.next_block(b, a);
            row[2 * t] = affine(p, &-p.clone());
            row[2 * t + 1] = affine(&Rational::zero(), p);
        }
    }
    let phi = (0..n).map(|i| input.last_symbol(i / 2) ^ (i % 2)).collect();
    Ok(HmmModel::new(delta, phi, 2)?)
}

/// Binary input through BEC(ε); the erasure is output symbol [`ERASURE`].
pub fn bec_model(input: &MarkovInput) -> Result<HmmModel, ChannelError> {
    require_binary(input)?;
    build_memoryless(input, &bec_spec())
}

/// Binary input through the i.i.d.-state Gilbert–Elliott channel with
/// `ε_0 = ε`, `ε_1 = κε`; states `(block, c, e)`.
pub fn ge_model(
    input: &MarkovInput,
    q0: Rational,
    q1: Rational,
    kappa: Rational,
) -> Result<HmmModel, ChannelError> {
    require_binary(input)?;
    build_memoryless(input, &ge_spec(q0, q1, kappa)?)
}

#[derive(Debug, Error)]
pub enum MutualInformationError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
}

/// `H(Z)` and `H(Z|X)` expanded in the same window; `I(X; Z)` is their
/// difference.
#[derive(Debug, Clone)]
pub struct MutualInformation {
    pub output_entropy: ExpansionResult,
    pub conditional_entropy: ExpansionResult,
}

impl MutualInformation {
    /// `(h0, f, g)` of `I(X; Z) = H(Z) − H(Z|X)`.
    pub fn information(&self) -> (f64, Vec<Rational>, Vec<f64>) {
        let (a, b) = (&self.output_entropy, &self.conditional_entropy);
        let f = a.f.iter().zip(&b.f).map(|(x, y)| x - y).collect();
        let g = a.g.iter().zip(&b.g).map(|(x, y)| x - y).collect();
        (a.h0 - b.h0, f, g)
    }
}

/// `H(Z|X) = −Σ_{x,z} p(x) p(z|x) log p(z|x)` as a log-series, reported
/// through `ε^k` (plain) and `ε^{k+1} log ε`.
pub fn conditional_entropy_series(
    input: &MarkovInput,
    spec: &MemorylessChannelSpec,
    k: usize,
) -> Result<LogSeries, ChannelError> {
    spec.validate(input.alphabet())?;
    let px = input.stationary_symbols();
    let laws: Vec<Vec<TruncSeries>> = (0..input.alphabet())
        .map(|x| (0..spec.outputs).map(|z| spec.output_law(x, z)).collect())
        .collect();
    let max_ord = laws
        .iter()
        .flatten()
        .filter_map(|s| s.ord().finite())
        .max()
        .unwrap_or(0);
    let l = (k + 2 + max_ord).max(spec.trunc_len());
    let mut plain = vec![RealSum::new(Precision::Extended); k + 1];
    let mut logpart = TruncSeries::zero(k + 1);
    for (x, row) in laws.iter().enumerate() {
        if px[x].is_zero() {
            continue;
        }
        for law in row {
            let law = law.with_trunc_len(l);
            if law.is_zero() {
                continue;
            }
            let term = law.log_expand().map_err(HmmError::from)?.mul_series(&law);
            let weight = -px[x].clone();
            logpart.add_assign_truncated(&term.logpart().truncate(k + 1).scale(&weight));
            let w = to_f64(&weight);
            for (j, acc) in plain.iter_mut().enumerate() {
                acc.add(w * term.plain()[j]);
            }
        }
    }
    let mut plain: Vec<f64> = plain.iter().map(RealSum::value).collect();
    plain.push(0.0);
    Ok(LogSeries::new(plain, logpart).expect("matching window"))
}

/// Expands `H(Z)` (Birch bounds at the theorem horizon) and `H(Z|X)`
/// (finite sum) for the channel `spec` driven by `input`.
pub fn mutual_information_expansion(
    input: &MarkovInput,
    spec: &MemorylessChannelSpec,
    k: usize,
    config: &ExpansionConfig,
) -> Result<MutualInformation, MutualInformationError> {
    let model = build_memoryless(input, spec)?;
    let output_entropy = expand(&model, k, config)?;
    let cond = conditional_entropy_series(input, spec, k)?;
    let conditional_entropy = ExpansionResult::from_window(k, &cond, 0);
    Ok(MutualInformation {
        output_entropy,
        conditional_entropy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::{classify, ClassKind};
    use crate::rational::{integer, rational};

    #[test]
    fn blocked_lift_of_order_two() {
        let h = rational(1, 2);
        let uniform = MarkovInput::new(2, 2, vec![vec![h.clone(), h.clone()]; 4]).unwrap();
        let p = blocked_markov(&uniform);
        // de Bruijn edges: b → (2b + a) mod 4
        for (b, row) in p.iter().enumerate() {
            for (t, v) in row.iter().enumerate() {
                let edge = t == (2 * b) % 4 || t == (2 * b + 1) % 4;
                assert_eq!(v, &if edge { h.clone() } else { integer(0) });
            }
        }
        let mut rows = vec![vec![h.clone(), h.clone()]; 4];
        rows[3] = vec![integer(1), integer(0)];
        let forbid = MarkovInput::new(2, 2, rows).unwrap();
        let p = blocked_markov(&forbid);
        assert!(p[3][2].is_one());
        assert!(p[3][3].is_zero());
    }

    #[test]
    fn input_validation() {
        assert_eq!(MarkovInput::ordentlich(integer(0)), Err(ChannelError::Reducible));
        assert_eq!(
            MarkovInput::first_order(vec![vec![rational(1, 2), rational(1, 3)], vec![integer(1), integer(0)]]),
            Err(ChannelError::TransitionRowSum(0))
        );
        assert!(matches!(
            MarkovInput::new(1, 2, vec![vec![integer(1), integer(0)]]),
            Err(ChannelError::TransitionShape { .. })
        ));
    }

    #[test]
    fn bsc_displayed_matrix() {
        let input = MarkovInput::binary(rational(1, 3), rational(3, 5)).unwrap();
        let model = bsc_model(&input).unwrap();
        let pi = input.transitions();
        for i in 0..4 {
            for j in 0..4 {
                let p = &pi[i / 2][j / 2];
                let want = if j % 2 == 0 {
                    affine(p, &-p.clone())
                } else {
                    affine(&integer(0), p)
                };
                assert_eq!(model.entry(i, j), &want);
            }
        }
        assert_eq!(model.phi(), &[0, 1, 1, 0]);
        assert_eq!(model.entry(0, 1).coeff(1), &pi[0][0]);
        assert_eq!(classify(&model).kind, ClassKind::BlackHole);
        let weak = bsc_model(&MarkovInput::ordentlich(rational(1, 2)).unwrap()).unwrap();
        assert_eq!(classify(&weak).kind, ClassKind::WeakBlackHole);
    }

    #[test]
    fn generic_framework_matches_direct_bsc() {
        let input = MarkovInput::binary(rational(1, 4), rational(2, 3)).unwrap();
        assert_eq!(build_memoryless(&input, &bsc_spec()).unwrap(), bsc_model(&input).unwrap());
    }

    #[test]
    fn bec_restrictions() {
        let input = MarkovInput::binary(rational(1, 4), rational(2, 3)).unwrap();
        let model = bec_model(&input).unwrap();
        assert_eq!(model.symbols(), 3);
        assert_eq!(model.phi(), &[0, ERASURE, 1, ERASURE]);
        let de = model.restrict(ERASURE).unwrap();
        let pi = input.transitions();
        for i in 0..4 {
            for j in 0..4 {
                let want = if j % 2 == 1 { pi[i / 2][j / 2].clone() } else { integer(0) };
                assert!(de[i][j].coeff(0).is_zero());
                assert_eq!(de[i][j].coeff(1), &want);
            }
        }
        assert_eq!(classify(&model).kind, ClassKind::WeakBlackHole);
    }

    #[test]
    fn ge_displayed_structure() {
        let input = MarkovInput::binary(rational(1, 3), rational(1, 2)).unwrap();
        let (q0, q1, kappa) = (rational(1, 4), rational(3, 4), integer(2));
        let model = ge_model(&input, q0.clone(), q1.clone(), kappa.clone()).unwrap();
        assert_eq!(model.states(), 8);
        // alphabetical (x, c, e); Φ = x ⊕ e
        assert_eq!(model.phi(), &[0, 1, 0, 1, 1, 0, 1, 0]);
        let pi = input.transitions();
        let q = [&q0, &q1];
        let rate = [integer(1), kappa];
        for i in 0..8 {
            for j in 0..8 {
                let (y, d, f) = (j / 4, (j / 2) % 2, j % 2);
                let w = &pi[i / 4][y] * q[d];
                let want = if f == 0 {
                    affine(&w, &-(&w * &rate[d]))
                } else {
                    affine(&integer(0), &(&w * &rate[d]))
                };
                assert_eq!(model.entry(i, j), &want, "({i}, {j})");
            }
        }
        assert_eq!(classify(&model).kind, ClassKind::BlackHole);
        let weak = ge_model(&MarkovInput::ordentlich(rational(1, 2)).unwrap(), q0, q1, integer(3)).unwrap();
        assert_eq!(classify(&weak).kind, ClassKind::WeakBlackHole);
    }

    #[test]
    fn ge_rejects_bad_parameters() {
        let input = MarkovInput::ordentlich(rational(1, 2)).unwrap();
        assert_eq!(
            ge_model(&input, rational(1, 2), rational(1, 3), integer(1)),
            Err(ChannelError::StateProbabilities)
        );
        assert_eq!(
            ge_model(&input, rational(1, 2), rational(1, 2), integer(0)),
            Err(ChannelError::Kappa)
        );
    }

    #[test]
    fn embedding_is_required() {
        let mut spec = bsc_spec();
        spec.output[1] = vec![vec![0, 1]];
        assert!(matches!(
            build_memoryless(&MarkovInput::ordentlich(rational(1, 2)).unwrap(), &spec),
            Err(ChannelError::EmbeddingNotInjective { .. })
        ));
        let mut bad = bsc_spec();
        bad.noise[0][0] = vec![TruncSeries::constant(rational(1, 2), 1); 2];
        assert!(matches!(
            bad.validate(2),
            Err(ChannelError::Embedding { x: 0 })
        ));
    }

    #[test]
    fn markov_entropy_values() {
        let perm = MarkovInput::binary(integer(0), integer(0)).unwrap();
        assert_eq!(markov_entropy(&perm), 0.0);
        let iid = MarkovInput::binary(rational(1, 2), rational(1, 2)).unwrap();
        assert!((markov_entropy(&iid) - std::f64::consts::LN_2).abs() < 1e-15);
        let ord = MarkovInput::ordentlich(rational(1, 2)).unwrap();
        let want = (2.0 / 3.0) * std::f64::consts::LN_2;
        assert!((markov_entropy(&ord) - want).abs() < 1e-15);
    }

    #[test]
    fn bsc_conditional_entropy_closed_form() {
        // −(1−ε) log(1−ε) − ε log ε = −ε log ε + ε − ε²/2 + …
        let input = MarkovInput::ordentlich(rational(1, 2)).unwrap();
        let h = conditional_entropy_series(&input, &bsc_spec(), 1).unwrap();
        assert_eq!(h.logpart().coeffs(), &[integer(0), integer(-1), integer(0)]);
        assert!(h.plain()[0].abs() < 1e-15);
        assert!((h.plain()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn channel_law_embedding_matches_bsc_probabilities() {
        let (keep, flip) = flip_pair(&integer(1));
        let law = vec![vec![vec![keep.clone(), flip.clone()]], vec![vec![flip, keep]]];
        let spec = MemorylessChannelSpec::from_channel_law(vec![integer(1)], &law, 2).unwrap();
        assert_eq!(spec.errors(), 4);
        let input = MarkovInput::binary(rational(1, 4), rational(2, 3)).unwrap();
        let embedded = build_memoryless(&input, &spec).unwrap();
        let direct = bsc_model(&input).unwrap();
        for x in 0..2 {
            for z in 0..2 {
                assert_eq!(spec.output_law(x, z), bsc_spec().output_law(x, z));
            }
        }
        let l = 6;
        let (a, b) = (embedded.with_trunc_len(l), direct.with_trunc_len(l));
        for len in 0..=4 {
            for code in 0..(1usize << len) {
                let z: Vec<usize> = (0..len).map(|i| (code >> i) & 1).collect();
                assert_eq!(
                    crate::hmm::seq_prob(&a, &z).unwrap(),
                    crate::hmm::seq_prob(&b, &z).unwrap(),
                    "{z:?}"
                );
            }
        }
    }
}
