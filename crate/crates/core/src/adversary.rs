//! Eavesdropper models and security experiments.
//!
//! Eve measures in the computational basis and forwards the collapsed state
//! (intercept-resend). The receiver in these experiments is physical: after
//! the inverse key circuit it performs a sampled projective measurement, so a
//! disturbed copy is read correctly with probability `|c_b|^2` for Eve's
//! outcome `b`, giving a per-copy intact probability of `sum_b |c_b|^4`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use rand::Rng;

use crate::bits::BitString;
use crate::cipher::{encrypt_block, CipherBlock, PlainBlock};
use crate::error::{Error, Result};
use crate::keyschedule::{
    inverse_of, key_circuit, key_circuit_ablated, keyspace_size, run_circuit, Ablation, CipherKey,
};
use crate::statevector::StateVector;
use crate::util::{binomial_half_width, log2_biguint, next_permutation};

/// Largest key space [`brute_force_key_recovery`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    /// 95% binomial half-width, when the value is an empirical proportion.
    pub half_width: Option<f64>,
}

impl Estimate {
    fn exact(name: &str, value: f64) -> Self {
        Estimate { name: name.into(), value, half_width: None }
    }

    fn proportion(name: &str, hits: u64, trials: u64) -> Self {
        let value = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
        Estimate { name: name.into(), value, half_width: Some(binomial_half_width(value, trials)) }
    }
}

/// Outcome of an attack experiment, as plain data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttackReport {
    pub attack: String,
    pub trials: u64,
    pub counts: Vec<(String, u64)>,
    pub estimates: Vec<Estimate>,
    /// Arbitrary-precision results.
    pub exact: Vec<(String, BigUint)>,
    pub parameters: Vec<(String, String)>,
}

impl AttackReport {
    pub fn estimate(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }

    pub fn count(&self, name: &str) -> Option<u64> {
        self.counts.iter().find(|c| c.0 == name).map(|c| c.1)
    }

    pub fn exact_value(&self, name: &str) -> Option<&BigUint> {
        self.exact.iter().find(|c| c.0 == name).map(|c| &c.1)
    }

    fn param(mut self, name: &str, value: impl ToString) -> Self {
        self.parameters.push((name.into(), value.to_string()));
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interception {
    pub forwarded: StateVector,
    pub bits: BitString,
}

/// Measure the transiting state and pass the collapsed result on.
pub fn intercept_measure<R: Rng + ?Sized>(c: &StateVector, rng: &mut R) -> Interception {
    let outcome = c.measure_all(rng);
    Interception { forwarded: outcome.collapsed, bits: outcome.bits }
}

/// `sum_b |c_b|^4`: probability that an intercepted copy still reads back
/// as the original plaintext.
pub fn collision_probability(state: &StateVector) -> f64 {
    state.amplitudes().iter().map(|a| a.norm_sqr() * a.norm_sqr()).sum()
}

/// Physical receiver: undo the key circuit, then measure every qubit.
pub fn receiver_readout<R: Rng + ?Sized>(key: &CipherKey, received: &StateVector, rng: &mut R) -> Result<BitString> {
    let state = run_circuit(received, &inverse_of(&key_circuit(key)?))?;
    Ok(state.measure_all(rng).bits)
}

/// Repetition protocol: Alice sends `repetitions` independent encryptions
/// of the same block, Eve optionally intercepts each, and the receiver reads
/// each copy out physically. A trial is flagged when any copy reads back as
/// something other than the block sent (the per-copy integrity failure) or
/// the copies disagree with one another.
pub fn detection_experiment<R: Rng + ?Sized>(
    key: &CipherKey,
    plain: &PlainBlock,
    repetitions: usize,
    eve_on: bool,
    trials: u64,
    rng: &mut R,
) -> Result<AttackReport> {
    if repetitions == 0 {
        return Err(Error::input("at least one repetition is required"));
    }
    let sent = encrypt_block(key, plain)?.state;
    let inverse = inverse_of(&key_circuit(key)?);
    let collision = collision_probability(&sent);

    let (mut flagged, mut disagreements, mut intact) = (0u64, 0u64, 0u64);
    let mut readouts = Vec::with_capacity(repetitions);
    for _ in 0..trials {
        readouts.clear();
        for _ in 0..repetitions {
            let received = if eve_on { intercept_measure(&sent, rng).forwarded } else { sent.clone() };
            let recovered = run_circuit(&received, &inverse)?;
            readouts.push(recovered.measure_all(rng).bits);
        }
        let corrupted = readouts.iter().filter(|b| **b != plain.bits).count();
        intact += (repetitions - corrupted) as u64;
        let disagree = readouts.windows(2).any(|w| w[0] != w[1]);
        disagreements += disagree as u64;
        flagged += (corrupted > 0 || disagree) as u64;
    }
    let copies = trials * repetitions as u64;
    let predicted = if eve_on { 1.0 - libm::pow(collision, repetitions as f64) } else { 0.0 };
    Ok(AttackReport {
        attack: "intercept".into(),
        trials,
        counts: vec![
            ("flagged".into(), flagged),
            ("disagreements".into(), disagreements),
            ("copies".into(), copies),
            ("copies_intact".into(), intact),
        ],
        estimates: vec![
            Estimate::proportion("detection_rate", flagged, trials),
            Estimate::proportion("disagreement_rate", disagreements, trials),
            Estimate::proportion("undetected_copy_rate", intact, copies),
            Estimate::exact("collision_probability", collision),
            Estimate::exact("predicted_detection_rate", predicted),
        ],
        ..Default::default()
    }
    .param("n", key.n)
    .param("repetitions", repetitions)
    .param("eve", eve_on)
    .param("plaintext", &plain.bits))
}

/// `arccos(|cos theta|)`: the angle in `[0, pi/2]` that marginals can reveal.
pub fn folded_angle(theta: f64) -> f64 {
    libm::acos(libm::fabs(libm::cos(theta)).min(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsAttack {
    pub estimates: Vec<f64>,
    /// Folded true angle of the unitary on each qubit.
    pub truth: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rms_residual: f64,
    pub samples: u64,
}

impl StatsAttack {
    pub fn report(&self, ablation: Ablation) -> AttackReport {
        let mut estimates: Vec<Estimate> = self
            .estimates
            .iter()
            .enumerate()
            .map(|(i, &v)| Estimate::exact(&format!("theta_hat_{}", i + 1), v))
            .collect();
        estimates.extend(
            self.residuals.iter().enumerate().map(|(i, &v)| Estimate::exact(&format!("residual_{}", i + 1), v)),
        );
        estimates.push(Estimate::exact("rms_residual", self.rms_residual));
        AttackReport { attack: "stats".into(), trials: self.samples, estimates, ..Default::default() }
            .param("ablation", format!("{ablation:?}"))
            .param("n", self.estimates.len())
    }
}

/// Estimate each qubit's unitary from the per-qubit outcome frequencies of
/// `samples` intercepted copies of one ciphertext, assuming the step-1-only
/// relation `p(0) = cos^2` (plaintext bit 0) or `sin^2` (bit 1).
pub fn marginal_estimation_attack<R: Rng + ?Sized>(
    key: &CipherKey,
    ablation: Ablation,
    plain: &PlainBlock,
    samples: u64,
    rng: &mut R,
) -> Result<StatsAttack> {
    if samples == 0 {
        return Err(Error::input("at least one sample is required"));
    }
    if plain.bits.len() != key.n {
        return Err(Error::input(format!("{}-bit plaintext for a {}-qubit key", plain.bits.len(), key.n)));
    }
    let c = run_circuit(&StateVector::basis_state(key.n, &plain.bits)?, &key_circuit_ablated(key, ablation)?)?;
    let mut zeros = vec![0u64; key.n];
    for _ in 0..samples {
        let seen = intercept_measure(&c, rng).bits;
        for (z, &b) in zeros.iter_mut().zip(seen.as_slice()) {
            *z += !b as u64;
        }
    }
    let mut estimates = Vec::with_capacity(key.n);
    let mut truth = Vec::with_capacity(key.n);
    for q in 1..=key.n {
        let root = libm::sqrt(zeros[q - 1] as f64 / samples as f64);
        estimates.push(if plain.bits.bit(q) { libm::asin(root) } else { libm::acos(root) });
        truth.push(folded_angle(key.angle(q)));
    }
    let residuals: Vec<f64> = estimates.iter().zip(&truth).map(|(e, t)| libm::fabs(e - t)).collect();
    let rms_residual = libm::sqrt(residuals.iter().map(|r| r * r).sum::<f64>() / key.n as f64);
    Ok(StatsAttack { estimates, truth, residuals, rms_residual, samples })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    pub enumerated: u64,
    pub consistent: Vec<CipherKey>,
}

impl BruteForce {
    pub fn report(&self, n: usize, grid: u32) -> AttackReport {
        AttackReport {
            attack: "brute".into(),
            trials: self.enumerated,
            counts: vec![("enumerated".into(), self.enumerated), ("consistent".into(), self.consistent.len() as u64)],
            exact: vec![("keyspace".into(), keyspace_size(n, grid).exact)],
            ..Default::default()
        }
        .param("n", n)
        .param("N", grid)
    }
}

/// Every key of the `(n, grid)` key space whose encryption of `plain` has
/// fidelity at least `1 - 1e-9` with `known`.
pub fn brute_force_key_recovery(n: usize, grid: u32, plain: &PlainBlock, known: &CipherBlock) -> Result<BruteForce> {
    let space = keyspace_size(n, grid).exact;
    if space > BigUint::from(BRUTE_FORCE_LIMIT) {
        return Err(Error::resource(format!(
            "key space of {space} keys exceeds the brute-force limit of {BRUTE_FORCE_LIMIT}"
        )));
    }
    if plain.bits.len() != n || known.state.n() != n {
        return Err(Error::input(format!("known pair does not match block size {n}")));
    }
    let h = n / 2;
    let downstream: Vec<usize> = (n - h + 1..=n).collect();
    let theta_count = (grid as u64).pow(n as u32);
    let mut consistent = Vec::new();
    let mut enumerated = 0u64;

    let mut pairing: Vec<usize> = (1..=h).collect();
    loop {
        let mut order: Vec<usize> = (1..=h).collect();
        loop {
            let mut key = CipherKey {
                n,
                grid,
                theta: vec![0; n],
                step3_pairs: downstream.iter().copied().zip(pairing.iter().copied()).collect(),
                step4_upstream_order: order.clone(),
                mode2_pairing: None,
                iv: None,
            };
            for code in 0..theta_count {
                let mut rest = code;
                for slot in key.theta.iter_mut().rev() {
                    *slot = (rest % grid as u64) as u32;
                    rest /= grid as u64;
                }
                enumerated += 1;
                if encrypt_block(&key, plain)?.state.fidelity(&known.state)? >= 1.0 - 1e-9 {
                    consistent.push(key.clone());
                }
            }
            if !next_permutation(&mut order) {
                break;
            }
        }
        if !next_permutation(&mut pairing) {
            break;
        }
    }
    Ok(BruteForce { enumerated, consistent })
}

/// Counting bounds on gate-sequence configurations of length `length`:
/// chains where each gate's control is the previous target (lower) and
/// unrestricted ordered pairs (upper).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigCountBounds {
    pub n: usize,
    pub length: u64,
    pub lower: BigUint,
    pub upper: BigUint,
}

impl ConfigCountBounds {
    pub fn log2_lower(&self) -> f64 {
        log2_biguint(&self.lower)
    }

    pub fn log2_upper(&self) -> f64 {
        log2_biguint(&self.upper)
    }

    pub fn report(&self) -> AttackReport {
        AttackReport {
            attack: "bounds".into(),
            estimates: vec![
                Estimate::exact("log2_lower", self.log2_lower()),
                Estimate::exact("log2_upper", self.log2_upper()),
            ],
            exact: vec![("lower".into(), self.lower.clone()), ("upper".into(), self.upper.clone())],
            ..Default::default()
        }
        .param("n", self.n)
        .param("L", self.length)
    }
}

pub fn config_count_bounds(n: usize, length: u64) -> Result<ConfigCountBounds> {
    if n < 2 || length < 1 {
        return Err(Error::input(format!("bounds need n >= 2 and L >= 1, got n={n}, L={length}")));
    }
    let exp = u32::try_from(length).map_err(|_| Error::resource(format!("sequence length {length} too large")))?;
    let n_big = BigUint::from(n);
    let lower = &n_big * BigUint::from(n - 1).pow(exp);
    let upper = BigUint::from(n * n - n).pow(exp);
    Ok(ConfigCountBounds { n, length, lower, upper })
}
