//! Chaining modes for multi-block messages.
//!
//! Mode 1 (measured IV): `|C_i> = E(P_i xor M(|C_{i-1}>))`, where
//! `M(|C_{i-1}>)` is the measurement of a second, independently prepared
//! copy of the previous ciphertext. The collapsed copy travels with block `i`
//! as an IV carrier so the receiver can read the IV without a classical side
//! channel.
//!
//! Mode 2 (entangling): every qubit of `C_{i-1}` controls a CNOT onto a
//! distinct qubit of the basis-encoded `P_i` before `P_i` is encrypted. The
//! blocks end up entangled, so the whole message is one joint register.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::bits::BitString;
use crate::cipher::{encode_plaintext, encrypt_block, read_basis_state, CipherBlock, ModeTag, PlainBlock};
use crate::error::{Error, Result};
use crate::keyschedule::{inverse_of, key_circuit, run_circuit_in_place, CipherKey, GateOp};
use crate::statevector::{StateVector, MAX_QUBITS};
use crate::util::is_permutation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Mode1Measured,
    Mode2Entangling,
}

impl Mode {
    pub fn tag(self) -> &'static str {
        match self {
            Mode::Mode1Measured => "m1",
            Mode::Mode2Entangling => "m2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeConfig {
    pub mode: Mode,
    pub iv: BitString,
    /// Qubit `q` of block `i-1` controls qubit `pairing[q-1]` of block `i`.
    /// Used by mode 2 only.
    pub mode2_pairing: Option<Vec<usize>>,
}

impl ModeConfig {
    /// Mode settings carried by the key, with a zero IV and identity pairing
    /// when the key leaves them out.
    pub fn from_key(key: &CipherKey, mode: Mode) -> Self {
        ModeConfig {
            mode,
            iv: key.iv_or_zero(),
            mode2_pairing: match mode {
                Mode::Mode1Measured => None,
                Mode::Mode2Entangling => Some(key.pairing()),
            },
        }
    }

    fn validate(&self, n: usize, expected: Mode) -> Result<()> {
        if self.mode != expected {
            return Err(Error::input(format!("{} configuration passed to {}", self.mode.tag(), expected.tag())));
        }
        if self.iv.len() != n {
            return Err(Error::input(format!("IV of {} bits for block size {n}", self.iv.len())));
        }
        if let Some(p) = &self.mode2_pairing {
            if !is_permutation(p, &(1..=n).collect::<Vec<_>>()) {
                return Err(Error::input(format!("pairing {p:?} is not a permutation of 1..={n}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Transmission {
    Mode1 {
        n: usize,
        blocks: Vec<CipherBlock>,
        /// `iv_carriers[i]` is the collapsed copy whose bits are the IV of
        /// `blocks[i + 1]`.
        iv_carriers: Vec<StateVector>,
    },
    Mode2 {
        n: usize,
        block_count: usize,
        joint: StateVector,
    },
}

impl Transmission {
    pub fn mode(&self) -> Mode {
        match self {
            Transmission::Mode1 { .. } => Mode::Mode1Measured,
            Transmission::Mode2 { .. } => Mode::Mode2Entangling,
        }
    }

    pub fn block_size(&self) -> usize {
        match *self {
            Transmission::Mode1 { n, .. } | Transmission::Mode2 { n, .. } => n,
        }
    }

    pub fn block_count(&self) -> usize {
        match self {
            Transmission::Mode1 { blocks, .. } => blocks.len(),
            Transmission::Mode2 { block_count, .. } => *block_count,
        }
    }

    /// Per-block marginal vectors (`p(|0>)` for every qubit of every block).
    pub fn block_marginals(&self) -> Vec<Vec<f64>> {
        match self {
            Transmission::Mode1 { blocks, .. } => blocks.iter().map(|b| b.state.marginals()).collect(),
            Transmission::Mode2 { n, joint, .. } => joint.marginals().chunks(*n).map(<[f64]>::to_vec).collect(),
        }
    }
}

fn check_blocks(key: &CipherKey, blocks: &[PlainBlock]) -> Result<()> {
    if let Some((i, b)) = blocks.iter().enumerate().find(|(_, b)| b.bits.len() != key.n) {
        return Err(Error::input(format!("block {} has {} bits, the key expects {}", i + 1, b.bits.len(), key.n)));
    }
    Ok(())
}

pub fn mode1_encrypt<R: Rng + ?Sized>(
    key: &CipherKey,
    blocks: &[PlainBlock],
    cfg: &ModeConfig,
    rng: &mut R,
) -> Result<Transmission> {
    cfg.validate(key.n, Mode::Mode1Measured)?;
    check_blocks(key, blocks)?;
    let mut iv = cfg.iv.clone();
    let mut out = Vec::with_capacity(blocks.len());
    let mut carriers = Vec::with_capacity(blocks.len().saturating_sub(1));
    for (i, p) in blocks.iter().enumerate() {
        let input = PlainBlock::new(p.bits.xor(&iv)?);
        let mut block = encrypt_block(key, &input)?;
        block.block_index = i + 1;
        block.mode = ModeTag::Mode1;
        if i + 1 < blocks.len() {
            // A second preparation from the same classical input, never a clone.
            let copy = encrypt_block(key, &input)?;
            let measured = copy.state.measure_all(rng);
            iv = measured.bits;
            carriers.push(measured.collapsed);
        }
        out.push(block);
    }
    Ok(Transmission::Mode1 { n: key.n, blocks: out, iv_carriers: carriers })
}

pub fn mode1_decrypt(key: &CipherKey, cfg: &ModeConfig, t: &Transmission) -> Result<Vec<PlainBlock>> {
    let Transmission::Mode1 { n, blocks, iv_carriers } = t else {
        return Err(Error::input("mode 2 transmission passed to the mode 1 decryptor"));
    };
    cfg.validate(key.n, Mode::Mode1Measured)?;
    if *n != key.n {
        return Err(Error::input(format!("transmission block size {n} does not match key size {}", key.n)));
    }
    if iv_carriers.len() + 1 != blocks.len() && !(blocks.is_empty() && iv_carriers.is_empty()) {
        return Err(Error::input(format!("{} IV carriers for {} blocks", iv_carriers.len(), blocks.len())));
    }
    let inverse = inverse_of(&key_circuit(key)?);
    let mut iv = cfg.iv.clone();
    let mut out = Vec::with_capacity(blocks.len());
    for (i, block) in blocks.iter().enumerate() {
        if block.state.n() != key.n {
            return Err(Error::input(format!("block {} has {} qubits", i + 1, block.state.n())));
        }
        let mut state = block.state.clone();
        run_circuit_in_place(&mut state, &inverse)?;
        let bits = read_basis_state(&state, || format!("block {}", i + 1))?;
        out.push(PlainBlock::new(bits.xor(&iv)?));
        if let Some(carrier) = iv_carriers.get(i) {
            if carrier.n() != key.n {
                return Err(Error::input(format!("IV carrier {} has {} qubits", i + 2, carrier.n())));
            }
            iv = read_basis_state(carrier, || format!("IV carrier for block {}", i + 2))?;
        }
    }
    Ok(out)
}

fn chaining_gates(n: usize, block: usize, pairing: &[usize]) -> impl Iterator<Item = GateOp> + '_ {
    let prev = (block - 1) * n;
    let next = block * n;
    pairing.iter().enumerate().map(move |(q, &t)| GateOp::Cnot { control: prev + q + 1, target: next + t })
}

fn joint_size(n: usize, m: usize) -> Result<usize> {
    let total = n.checked_mul(m).ok_or_else(|| Error::resource("joint register size overflows"))?;
    if total > MAX_QUBITS {
        return Err(Error::resource(format!(
            "{m} blocks of {n} qubits need {total} qubits, the joint register caps at {MAX_QUBITS}"
        )));
    }
    Ok(total)
}

pub fn mode2_encrypt(key: &CipherKey, blocks: &[PlainBlock], cfg: &ModeConfig) -> Result<Transmission> {
    cfg.validate(key.n, Mode::Mode2Entangling)?;
    check_blocks(key, blocks)?;
    let n = key.n;
    joint_size(n, blocks.len())?;
    let pairing = cfg.mode2_pairing.clone().unwrap_or_else(|| (1..=n).collect());
    let circuit = key_circuit(key)?;
    let Some((first, rest)) = blocks.split_first() else {
        return Err(Error::input("mode 2 needs at least one block"));
    };

    let mut joint = encode_plaintext(&first.bits.xor(&cfg.iv)?)?;
    run_circuit_in_place(&mut joint, &circuit)?;
    for (i, p) in rest.iter().enumerate() {
        joint = joint.tensor(&encode_plaintext(&p.bits)?)?;
        let chain: Vec<GateOp> = chaining_gates(n, i + 1, &pairing).collect();
        run_circuit_in_place(&mut joint, &chain)?;
        let shifted: Vec<GateOp> = circuit.iter().map(|g| g.shifted((i + 1) * n)).collect();
        run_circuit_in_place(&mut joint, &shifted)?;
    }
    Ok(Transmission::Mode2 { n, block_count: blocks.len(), joint })
}

/// Peels blocks off the end of the joint register: undo the key circuit on
/// the last block, undo its chaining CNOTs, read it, drop it.
pub fn mode2_decrypt(key: &CipherKey, cfg: &ModeConfig, t: &Transmission) -> Result<Vec<PlainBlock>> {
    let Transmission::Mode2 { n, block_count, joint } = t else {
        return Err(Error::input("mode 1 transmission passed to the mode 2 decryptor"));
    };
    cfg.validate(key.n, Mode::Mode2Entangling)?;
    if *n != key.n || joint.n() != n * block_count || *block_count == 0 {
        return Err(Error::input(format!(
            "{}-qubit register for {block_count} blocks of {n} (key size {})",
            joint.n(),
            key.n
        )));
    }
    let n = *n;
    let pairing = cfg.mode2_pairing.clone().unwrap_or_else(|| (1..=n).collect());
    let inverse = inverse_of(&key_circuit(key)?);
    let mut state = joint.clone();
    let mut out = Vec::with_capacity(*block_count);
    for block in (1..*block_count).rev() {
        let shifted: Vec<GateOp> = inverse.iter().map(|g| g.shifted(block * n)).collect();
        run_circuit_in_place(&mut state, &shifted)?;
        let chain: Vec<GateOp> = chaining_gates(n, block, &pairing).collect();
        run_circuit_in_place(&mut state, &inverse_of(&chain))?;
        let dist = state.range_distribution(block * n + 1, n)?;
        let (value, p) =
            dist.iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        if p < 1.0 - crate::cipher::PURITY_TOLERANCE {
            return Err(Error::Integrity { context: format!("block {}", block + 1), max_probability: p });
        }
        out.push(PlainBlock::new(BitString::from_index(n, value)));
        state = state.take_low_qubits(n, value)?;
    }
    run_circuit_in_place(&mut state, &inverse)?;
    let first = read_basis_state(&state, || "block 1".into())?;
    out.push(PlainBlock::new(first.xor(&cfg.iv)?));
    out.reverse();
    Ok(out)
}
