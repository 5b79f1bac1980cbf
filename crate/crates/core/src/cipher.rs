//! Single-block encryption and decryption.

use alloc::format;
use alloc::string::String;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::keyschedule::{inverse_circuit, key_circuit, key_steps, run_circuit, CipherKey};
use crate::statevector::StateVector;

/// Maximum deviation from a pure basis state tolerated when reading bits back.
pub const PURITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlainBlock {
    pub bits: BitString,
}

impl PlainBlock {
    pub fn new(bits: BitString) -> Self {
        PlainBlock { bits }
    }
}

impl From<BitString> for PlainBlock {
    fn from(bits: BitString) -> Self {
        PlainBlock { bits }
    }
}

/// How a ciphertext block was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeTag {
    Single,
    /// Ciphertext of the measured-IV chaining mode.
    Mode1,
    /// Collapsed copy carrying the measured IV of the next mode 1 block.
    Mode1IvCarrier,
    /// Joint register of the entangling chaining mode.
    Mode2,
}

impl ModeTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ModeTag::Single => "single",
            ModeTag::Mode1 => "m1",
            ModeTag::Mode1IvCarrier => "m1-iv",
            ModeTag::Mode2 => "m2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(ModeTag::Single),
            "m1" => Ok(ModeTag::Mode1),
            "m1-iv" => Ok(ModeTag::Mode1IvCarrier),
            "m2" => Ok(ModeTag::Mode2),
            other => Err(Error::input(format!("unknown block mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CipherBlock {
    pub state: StateVector,
    pub block_index: usize,
    pub mode: ModeTag,
}

/// Computational basis encoding of a classical block.
pub fn encode_plaintext(bits: &BitString) -> Result<StateVector> {
    StateVector::basis_state(bits.len(), bits)
}

pub fn encrypt_block(key: &CipherKey, plain: &PlainBlock) -> Result<CipherBlock> {
    if plain.bits.len() != key.n {
        return Err(Error::input(format!("plaintext block of {} bits for a {}-qubit key", plain.bits.len(), key.n)));
    }
    let state = run_circuit(&encode_plaintext(&plain.bits)?, &key_circuit(key)?)?;
    Ok(CipherBlock { state, block_index: 0, mode: ModeTag::Single })
}

/// Reads a state that should be a computational basis state, rejecting
/// anything with more than [`PURITY_TOLERANCE`] weight off the dominant index.
pub fn read_basis_state(state: &StateVector, context: impl FnOnce() -> String) -> Result<BitString> {
    let (index, p) = state.dominant_basis();
    if p < 1.0 - PURITY_TOLERANCE {
        return Err(Error::Integrity { context: context(), max_probability: p });
    }
    Ok(BitString::from_index(state.n(), index))
}

pub fn decrypt_block(key: &CipherKey, block: &CipherBlock) -> Result<PlainBlock> {
    if block.state.n() != key.n {
        return Err(Error::input(format!("{}-qubit ciphertext for a {}-qubit key", block.state.n(), key.n)));
    }
    let recovered = run_circuit(&block.state, &inverse_circuit(key)?)?;
    let bits = read_basis_state(&recovered, || format!("block {}", block.block_index))?;
    Ok(PlainBlock { bits })
}

/// Gates spent in each of the four steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateCounts {
    pub step1: usize,
    pub step2: usize,
    pub step3: usize,
    pub step4: usize,
}

impl GateCounts {
    pub fn total(&self) -> usize {
        self.step1 + self.step2 + self.step3 + self.step4
    }
}

pub fn gate_count(key: &CipherKey) -> Result<GateCounts> {
    let [s1, s2, s3, s4] = key_steps(key)?;
    Ok(GateCounts { step1: s1.len(), step2: s2.len(), step3: s3.len(), step4: s4.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keyschedule::generate_key;
    use alloc::vec::Vec;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bits(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn plain(s: &str) -> PlainBlock {
        PlainBlock::new(bits(s))
    }

    fn random_bits<R: Rng>(n: usize, rng: &mut R) -> BitString {
        BitString::new((0..n).map(|_| rng.random()).collect())
    }

    #[test]
    fn plaintext_encoding() {
        assert_eq!(encode_plaintext(&bits("00101")).unwrap().dominant_basis(), (5, 1.0));
        assert_eq!(encode_plaintext(&bits("0000")).unwrap(), StateVector::zero(4).unwrap());
        assert_eq!(encode_plaintext(&bits("1")).unwrap().dominant_basis(), (1, 1.0));
    }

    #[test]
    fn zero_angle_key_gives_basis_ciphertext() {
        // U(0) = diag(1, -1) and CNOTs permute basis states, so the ciphertext
        // is +/- a basis state; simulate the permutation classically.
        let mut key = generate_key(4, 16, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        key.theta = alloc::vec![0; 4];
        let p = bits("1011");
        let ct = encrypt_block(&key, &PlainBlock::new(p.clone())).unwrap();
        let mut expected: Vec<bool> = p.as_slice().to_vec();
        for g in key_circuit(&key).unwrap() {
            if let crate::GateOp::Cnot { control, target } = g {
                expected[target - 1] ^= expected[control - 1];
            }
        }
        let expected = BitString::new(expected);
        let (idx, prob) = ct.state.dominant_basis();
        assert!((prob - 1.0).abs() < 1e-12);
        assert_eq!(idx, expected.to_index());
        let m = ct.state.marginals();
        for q in 1..=4 {
            assert_eq!(m[q - 1], if expected.bit(q) { 0.0 } else { 1.0 });
        }
    }

    #[test]
    fn two_qubit_ciphertext_matches_matrix_product() {
        use core::f64::consts::FRAC_PI_4;
        let key = CipherKey {
            n: 2,
            grid: 8,
            theta: alloc::vec![1, 1],
            step3_pairs: alloc::vec![(2, 1)],
            step4_upstream_order: alloc::vec![1],
            mode2_pairing: None,
            iv: None,
        };
        let ct = encrypt_block(&key, &plain("00")).unwrap();

        // Independent oracle: 4x4 real matrices multiplied explicitly.
        type M = [[f64; 4]; 4];
        let mul = |a: &M, b: &M| {
            let mut c = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
                }
            }
            c
        };
        let (c, s) = (FRAC_PI_4.cos(), FRAC_PI_4.sin());
        let u = [[c, s], [s, -c]];
        let mut uu = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                uu[i][j] = u[i >> 1][j >> 1] * u[i & 1][j & 1];
            }
        }
        let perm = |f: fn(usize) -> usize| {
            let mut m = [[0.0; 4]; 4];
            for i in 0..4 {
                m[f(i)][i] = 1.0;
            }
            m
        };
        let cx12 = perm(|i| if i & 2 != 0 { i ^ 1 } else { i });
        let cx21 = perm(|i| if i & 1 != 0 { i ^ 2 } else { i });
        // Steps 2, 3, 4: [1->2], [2->1], [2->1, 1->2]
        let total = [cx12, cx21, cx21, cx12].iter().fold(uu, |acc, g| mul(g, &acc));
        for (i, amp) in ct.state.amplitudes().iter().enumerate() {
            assert!((amp - Complex64::new(total[i][0], 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn round_trip_at_n8() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let key = generate_key(8, 256, &mut rng).unwrap();
            let p = PlainBlock::new(random_bits(8, &mut rng));
            let ct = encrypt_block(&key, &p).unwrap();
            assert!((ct.state.norm_sqr() - 1.0).abs() < 1e-9);
            assert_eq!(decrypt_block(&key, &ct).unwrap(), p);
        }
    }

    #[test]
    fn exhaustive_round_trip_small_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 2..=4 {
            for _ in 0..5 {
                let key = generate_key(n, 4, &mut rng).unwrap();
                for idx in 0..1usize << n {
                    let p = PlainBlock::new(BitString::from_index(n, idx));
                    assert_eq!(decrypt_block(&key, &encrypt_block(&key, &p).unwrap()).unwrap(), p);
                }
            }
        }
    }

    #[test]
    fn wrong_key_never_passes_as_pure() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let key = generate_key(8, 256, &mut rng).unwrap();
            let p = PlainBlock::new(random_bits(8, &mut rng));
            let ct = encrypt_block(&key, &p).unwrap();
            let mut wrong = key.clone();
            let q = rng.random_range(0..8);
            wrong.theta[q] = (wrong.theta[q] + 1 + rng.random_range(0..254)) % 256;
            match decrypt_block(&wrong, &ct) {
                Err(Error::Integrity { max_probability, .. }) => assert!(max_probability < 1.0 - 1e-9),
                Ok(out) => {
                    let state = run_circuit(&ct.state, &inverse_circuit(&wrong).unwrap()).unwrap();
                    assert!(state.dominant_basis().1 >= 1.0 - 1e-9);
                    let _ = out;
                }
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn distinct_plaintexts_give_orthogonal_ciphertexts() {
        let key = generate_key(5, 256, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let cts: Vec<StateVector> = (0..32)
            .map(|i| encrypt_block(&key, &PlainBlock::new(BitString::from_index(5, i))).unwrap().state)
            .collect();
        for i in 0..32 {
            for j in (i + 1)..32 {
                assert!(cts[i].fidelity(&cts[j]).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn guarded_ciphertext_marginals_are_informative() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let key = generate_key(8, 256, &mut rng).unwrap();
            let ct = encrypt_block(&key, &PlainBlock::new(random_bits(8, &mut rng))).unwrap();
            for p in ct.state.marginals() {
                assert!(p > 1e-4 && p < 1.0 - 1e-4, "marginal {p}");
            }
        }
    }

    #[test]
    fn gate_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = gate_count(&generate_key(8, 256, &mut rng).unwrap()).unwrap();
        assert_eq!((c.step1, c.step2, c.step3, c.step4), (8, 7, 4, 8));
        let c = gate_count(&generate_key(2, 4, &mut rng).unwrap()).unwrap();
        assert_eq!((c.step1, c.step2, c.step3, c.step4), (2, 1, 1, 2));
        for n in 2..=24 {
            let c = gate_count(&generate_key(n, 64, &mut rng).unwrap()).unwrap();
            assert!(c.total() <= 4 * n);
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let key = generate_key(4, 16, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(matches!(encrypt_block(&key, &plain("101")), Err(Error::Input(_))));
        let ct = CipherBlock { state: StateVector::zero(3).unwrap(), block_index: 0, mode: ModeTag::Single };
        assert!(matches!(decrypt_block(&key, &ct), Err(Error::Input(_))));
    }
}
