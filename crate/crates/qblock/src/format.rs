//! JSON file formats: statevectors, keys, transmissions and reports.
//!
//! Floats are written with 17 significant digits and parsed with
//! round-trip precision, so amplitudes survive a write/read bit-exactly.

use std::collections::BTreeMap;
use std::io;

use num_bigint::BigUint;
use num_complex::Complex64;
use qblock_core::adversary::AttackReport;
use qblock_core::keyschedule::KEY_VERSION;
use qblock_core::modes::Transmission;
use qblock_core::statevector::NORM_TOLERANCE;
use qblock_core::{BitString, CipherBlock, CipherKey, ModeTag, StateVector, MAX_QUBITS};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::error::CliError;

/// Compact JSON with every float written as `{:.16e}`.
struct SignificantDigits;

impl Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SignificantDigits);
    value.serialize(&mut ser).map_err(|e| CliError::Format(e.to_string()))?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub n: usize,
    pub amps: Vec<[f64; 2]>,
}

impl From<&StateVector> for StateFile {
    fn from(s: &StateVector) -> Self {
        StateFile { n: s.n(), amps: s.amplitudes().iter().map(|a| [a.re, a.im]).collect() }
    }
}

fn check_shape(n: usize, len: usize) -> Result<(), CliError> {
    if n == 0 || n > MAX_QUBITS {
        return Err(CliError::Parse(format!("statevector of {n} qubits is outside 1..={MAX_QUBITS}")));
    }
    if len != 1 << n {
        return Err(CliError::Parse(format!("{n} qubits need {} amplitudes, found {len}", 1usize << n)));
    }
    Ok(())
}

fn build_state(n: usize, amps: &[[f64; 2]]) -> Result<StateVector, CliError> {
    check_shape(n, amps.len())?;
    let amps: Vec<Complex64> = amps.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        // Parsed fine but is not a physical state: the payload was altered.
        return Err(CliError::Tampered(format!("statevector norm is {norm:.12}, expected 1")));
    }
    Ok(StateVector::from_amplitudes(n, amps)?)
}

impl TryFrom<&StateFile> for StateVector {
    type Error = CliError;

    fn try_from(f: &StateFile) -> Result<Self, CliError> {
        build_state(f.n, &f.amps)
    }
}

/// A statevector file plus block metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CipherBlockFile {
    pub n: usize,
    pub amps: Vec<[f64; 2]>,
    pub block_index: usize,
    pub mode: String,
}

impl CipherBlockFile {
    fn wrap(state: &StateVector, block_index: usize, mode: ModeTag) -> Self {
        let StateFile { n, amps } = state.into();
        CipherBlockFile { n, amps, block_index, mode: mode.as_str().into() }
    }

    fn tag(&self) -> Result<ModeTag, CliError> {
        ModeTag::parse(&self.mode).map_err(|e| CliError::Parse(e.to_string()))
    }
}

impl From<&CipherBlock> for CipherBlockFile {
    fn from(b: &CipherBlock) -> Self {
        CipherBlockFile::wrap(&b.state, b.block_index, b.mode)
    }
}

impl TryFrom<&CipherBlockFile> for CipherBlock {
    type Error = CliError;

    fn try_from(f: &CipherBlockFile) -> Result<Self, CliError> {
        Ok(CipherBlock { state: build_state(f.n, &f.amps)?, block_index: f.block_index, mode: f.tag()? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyFile {
    pub version: u32,
    pub n: usize,
    #[serde(rename = "N")]
    pub grid: u32,
    pub theta: Vec<u32>,
    pub step3_pairs: Vec<[usize; 2]>,
    pub step4_upstream_order: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode2_pairing: Option<Vec<usize>>,
    /// Chaining IV as a bit string such as `"0110"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iv: Option<String>,
}

impl From<&CipherKey> for KeyFile {
    fn from(k: &CipherKey) -> Self {
        KeyFile {
            version: KEY_VERSION,
            n: k.n,
            grid: k.grid,
            theta: k.theta.clone(),
            step3_pairs: k.step3_pairs.iter().map(|&(d, u)| [d, u]).collect(),
            step4_upstream_order: k.step4_upstream_order.clone(),
            mode2_pairing: k.mode2_pairing.clone(),
            iv: k.iv.as_ref().map(ToString::to_string),
        }
    }
}

impl TryFrom<&KeyFile> for CipherKey {
    type Error = CliError;

    fn try_from(f: &KeyFile) -> Result<Self, CliError> {
        if f.version != KEY_VERSION {
            return Err(CliError::Parse(format!("unsupported key version {}", f.version)));
        }
        let iv =
            f.iv.as_deref()
                .map(str::parse::<BitString>)
                .transpose()
                .map_err(|e| CliError::Parse(format!("key iv: {e}")))?;
        let key = CipherKey {
            n: f.n,
            grid: f.grid,
            theta: f.theta.clone(),
            step3_pairs: f.step3_pairs.iter().map(|&[d, u]| (d, u)).collect(),
            step4_upstream_order: f.step4_upstream_order.clone(),
            mode2_pairing: f.mode2_pairing.clone(),
            iv,
        };
        key.validate()?;
        Ok(key)
    }
}

pub fn key_to_json(key: &CipherKey) -> Result<String, CliError> {
    to_json(&KeyFile::from(key))
}

pub fn key_from_json(text: &str) -> Result<CipherKey, CliError> {
    CipherKey::try_from(&from_json::<KeyFile>(text)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmissionFile {
    pub mode: String,
    pub n: usize,
    pub m: usize,
    pub iv_public: bool,
    /// Mode 1: block 1, then the IV carrier and ciphertext of each later
    /// block in turn. Mode 2: the single joint register.
    pub payload: Vec<CipherBlockFile>,
}

impl From<&Transmission> for TransmissionFile {
    fn from(t: &Transmission) -> Self {
        let payload = match t {
            Transmission::Mode1 { blocks, iv_carriers, .. } => {
                let mut out = Vec::with_capacity(blocks.len() + iv_carriers.len());
                for (i, b) in blocks.iter().enumerate() {
                    if i > 0 {
                        out.push(CipherBlockFile::wrap(&iv_carriers[i - 1], b.block_index, ModeTag::Mode1IvCarrier));
                    }
                    out.push(b.into());
                }
                out
            }
            Transmission::Mode2 { joint, .. } => vec![CipherBlockFile::wrap(joint, 1, ModeTag::Mode2)],
        };
        TransmissionFile {
            mode: t.mode().tag().into(),
            n: t.block_size(),
            m: t.block_count(),
            iv_public: false,
            payload,
        }
    }
}

impl TryFrom<&TransmissionFile> for Transmission {
    type Error = CliError;

    fn try_from(f: &TransmissionFile) -> Result<Self, CliError> {
        let expect = |entry: &CipherBlockFile, tag: ModeTag| -> Result<(), CliError> {
            if entry.tag()? != tag || entry.n != f.n && tag != ModeTag::Mode2 {
                return Err(CliError::Parse(format!(
                    "payload entry {:?} of {} qubits where a {:?} entry of {} qubits belongs",
                    entry.mode,
                    entry.n,
                    tag.as_str(),
                    f.n
                )));
            }
            Ok(())
        };
        match f.mode.as_str() {
            "m1" => {
                let want = if f.m == 0 { 0 } else { 2 * f.m - 1 };
                if f.payload.len() != want {
                    return Err(CliError::Parse(format!(
                        "mode 1 transmission of {} blocks needs {want} payload entries, found {}",
                        f.m,
                        f.payload.len()
                    )));
                }
                let mut blocks = Vec::with_capacity(f.m);
                let mut iv_carriers = Vec::with_capacity(f.m.saturating_sub(1));
                for (i, entry) in f.payload.iter().enumerate() {
                    if i % 2 == 0 {
                        expect(entry, ModeTag::Mode1)?;
                        blocks.push(CipherBlock::try_from(entry)?);
                    } else {
                        expect(entry, ModeTag::Mode1IvCarrier)?;
                        iv_carriers.push(build_state(entry.n, &entry.amps)?);
                    }
                }
                Ok(Transmission::Mode1 { n: f.n, blocks, iv_carriers })
            }
            "m2" => {
                let [entry] = f.payload.as_slice() else {
                    return Err(CliError::Parse(format!(
                        "mode 2 transmission carries one joint register, found {} entries",
                        f.payload.len()
                    )));
                };
                expect(entry, ModeTag::Mode2)?;
                if f.n.checked_mul(f.m) != Some(entry.n) {
                    return Err(CliError::Parse(format!(
                        "joint register of {} qubits for {} blocks of {}",
                        entry.n, f.m, f.n
                    )));
                }
                Ok(Transmission::Mode2 { n: f.n, block_count: f.m, joint: build_state(entry.n, &entry.amps)? })
            }
            other => Err(CliError::Parse(format!("unknown transmission mode {other:?}"))),
        }
    }
}

pub fn transmission_to_json(t: &Transmission) -> Result<String, CliError> {
    to_json(&TransmissionFile::from(t))
}

pub fn transmission_from_json(text: &str) -> Result<Transmission, CliError> {
    Transmission::try_from(&from_json::<TransmissionFile>(text)?)
}

/// Output of `analyze`. Matrix entry `[m][j]` relates ciphertext qubit `m+1`
/// to key angle (or plaintext bit) `j+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisFile {
    pub kind: String,
    pub ablation: String,
    pub n: usize,
    pub matrix: Vec<Vec<bool>>,
    pub row_counts: Vec<usize>,
    pub col_counts: Vec<usize>,
    pub pass: bool,
    pub epsilon: f64,
    pub grid: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plaintext: Option<String>,
    /// Numerically measured dependences, when the kind measures them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric_matrix: Option<Vec<Vec<bool>>>,
    /// Fraction of entries where `numeric_matrix` equals `matrix`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agreement: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric_subset: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem1: Option<Theorem1File>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Theorem1File {
    pub circuits: usize,
    pub depth: usize,
    pub locality_checks: u64,
    pub transfer_checks: u64,
    pub retention_checks: u64,
    pub locality_violations: usize,
    pub transfer_violations: usize,
    pub retention_violations: usize,
    /// First few violations as `[circuit, gate, qubit, param]`, tagged by check.
    pub examples: Vec<(String, [usize; 4])>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateFile {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackFile {
    pub attack: String,
    pub trials: u64,
    pub parameters: BTreeMap<String, String>,
    pub counts: BTreeMap<String, u64>,
    pub estimates: BTreeMap<String, EstimateFile>,
    /// Exact integers as decimal strings.
    pub exact: BTreeMap<String, String>,
}

impl From<&AttackReport> for AttackFile {
    fn from(r: &AttackReport) -> Self {
        AttackFile {
            attack: r.attack.clone(),
            trials: r.trials,
            parameters: r.parameters.iter().cloned().collect(),
            counts: r.counts.iter().cloned().collect(),
            estimates: r
                .estimates
                .iter()
                .map(|e| (e.name.clone(), EstimateFile { value: e.value, half_width: e.half_width }))
                .collect(),
            exact: r.exact.iter().map(|(k, v)| (k.clone(), v.to_string())).collect(),
        }
    }
}

impl AttackFile {
    pub fn exact_value(&self, name: &str) -> Option<BigUint> {
        self.exact.get(name)?.parse().ok()
    }
}
