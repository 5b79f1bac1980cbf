//! Key generation and the four-step key circuit.
//!
//! 1. A reflection `U(theta_i)` on every qubit, `theta_i = 2*pi*k_i/N`.
//! 2. The snowball chain `CNOT(i -> i+1)` for `i = 1..n-1`, in ascending order.
//! 3. `CNOT(down -> up)` for every (downstream, upstream) pair.
//! 4. A zigzag chain alternating between downstream qubits (descending) and
//!    upstream qubits (in the key's permuted order).
//!
//! Upstream qubits are `1..=floor(n/2)`, downstream `floor(n/2)+1..=n`. For
//! odd `n` the smallest downstream qubit is left unpaired in step 3 and opens
//! the step-4 chain.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_4, PI};

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::statevector::{StateVector, MAX_QUBITS};
use crate::util::{factorial, is_permutation, log2_biguint};

/// Current key file version.
pub const KEY_VERSION: u32 = 1;

/// Angles closer than this to a multiple of pi/4 are rejected by [`generate_key`].
pub const GUARD_TOLERANCE: f64 = 1e-3;

/// One circuit element. Qubit indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateOp {
    SingleU { qubit: usize, theta: f64 },
    Cnot { control: usize, target: usize },
}

impl GateOp {
    pub fn check(&self, n: usize) -> Result<()> {
        let in_range = |q: usize| (1..=n).contains(&q);
        match *self {
            GateOp::SingleU { qubit, .. } if !in_range(qubit) => {
                Err(Error::input(format!("U on qubit {qubit} outside 1..={n}")))
            }
            GateOp::Cnot { control, target } if !in_range(control) || !in_range(target) => {
                Err(Error::input(format!("CNOT {control}->{target} outside 1..={n}")))
            }
            GateOp::Cnot { control, target } if control == target => {
                Err(Error::input(format!("CNOT {control}->{target} has control = target")))
            }
            _ => Ok(()),
        }
    }

    /// The same gate acting `offset` qubits further down a joint register.
    pub fn shifted(self, offset: usize) -> GateOp {
        match self {
            GateOp::SingleU { qubit, theta } => GateOp::SingleU { qubit: qubit + offset, theta },
            GateOp::Cnot { control, target } => GateOp::Cnot { control: control + offset, target: target + offset },
        }
    }

    pub(crate) fn apply_in_place(&self, state: &mut StateVector) -> Result<()> {
        match *self {
            GateOp::SingleU { qubit, theta } => state.apply_single_in_place(qubit, theta),
            GateOp::Cnot { control, target } => state.apply_cnot_in_place(control, target),
        }
    }
}

/// Runs `circuit` on a copy of `state`.
pub fn run_circuit(state: &StateVector, circuit: &[GateOp]) -> Result<StateVector> {
    let mut out = state.clone();
    run_circuit_in_place(&mut out, circuit)?;
    Ok(out)
}

pub(crate) fn run_circuit_in_place(state: &mut StateVector, circuit: &[GateOp]) -> Result<()> {
    circuit.iter().try_for_each(|g| g.apply_in_place(state))
}

/// Truncations of the key circuit used as baselines in the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ablation {
    #[default]
    Full,
    Step1Only,
    Steps12,
    Steps123,
}

impl Ablation {
    fn steps(self) -> usize {
        match self {
            Ablation::Full => 4,
            Ablation::Step1Only => 1,
            Ablation::Steps12 => 2,
            Ablation::Steps123 => 3,
        }
    }
}

/// The pre-shared key: every parameter of the key circuit, plus the chaining
/// material used by the modes of operation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CipherKey {
    pub n: usize,
    /// Angle grid size `N`.
    pub grid: u32,
    pub theta: Vec<u32>,
    /// `(downstream, upstream)` pairs, ascending by downstream index.
    pub step3_pairs: Vec<(usize, usize)>,
    pub step4_upstream_order: Vec<usize>,
    /// Mode 2 pairing: qubit `q` of the previous block controls qubit
    /// `mode2_pairing[q-1]` of the next. Identity when absent.
    pub mode2_pairing: Option<Vec<usize>>,
    /// Initialization vector for the chaining modes.
    pub iv: Option<BitString>,
}

fn upstream_count(n: usize) -> usize {
    n / 2
}

fn upstream(n: usize) -> impl Iterator<Item = usize> {
    1..=upstream_count(n)
}

/// Downstream qubits that take part in step 3, ascending.
fn paired_downstream(n: usize) -> impl Iterator<Item = usize> {
    (n - upstream_count(n) + 1)..=n
}

/// Downstream order visited by the step-4 chain.
fn step4_downstream(n: usize) -> Vec<usize> {
    let h = upstream_count(n);
    let mut order = Vec::with_capacity(n - h);
    if n % 2 == 1 {
        order.push(h + 1);
    }
    order.extend((n - h + 1..=n).rev());
    order
}

pub fn grid_angle(k: u32, grid: u32) -> f64 {
    2.0 * PI * k as f64 / grid as f64
}

/// True if `theta` stays clear of every multiple of pi/4.
pub fn is_guarded_angle(theta: f64) -> bool {
    let r = theta - libm::floor(theta / FRAC_PI_4) * FRAC_PI_4;
    r.min(FRAC_PI_4 - r) > GUARD_TOLERANCE
}

/// Whether any grid value passes the guard. Grids dividing 8 only contain
/// multiples of pi/4.
pub fn grid_admits_guard(grid: u32) -> bool {
    grid > 0 && 8 % grid != 0
}

impl CipherKey {
    pub fn angle(&self, qubit: usize) -> f64 {
        grid_angle(self.theta[qubit - 1], self.grid)
    }

    pub fn is_guarded(&self) -> bool {
        self.theta.iter().all(|&k| is_guarded_angle(grid_angle(k, self.grid)))
    }

    pub fn upstream_count(&self) -> usize {
        upstream_count(self.n)
    }

    /// The effective mode 2 pairing (identity by default).
    pub fn pairing(&self) -> Vec<usize> {
        self.mode2_pairing.clone().unwrap_or_else(|| (1..=self.n).collect())
    }

    pub fn iv_or_zero(&self) -> BitString {
        self.iv.clone().unwrap_or_else(|| BitString::zeros(self.n))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if !(2..=MAX_QUBITS).contains(&n) {
            return Err(Error::key(format!("block size {n} outside 2..={MAX_QUBITS}")));
        }
        if self.grid < 2 {
            return Err(Error::key(format!("angle grid size {} < 2", self.grid)));
        }
        if self.theta.len() != n {
            return Err(Error::key(format!("{} angle indices for {n} qubits", self.theta.len())));
        }
        if let Some(k) = self.theta.iter().find(|&&k| k >= self.grid) {
            return Err(Error::key(format!("angle index {k} outside [0, {})", self.grid)));
        }
        let downs: Vec<usize> = self.step3_pairs.iter().map(|p| p.0).collect();
        let ups: Vec<usize> = self.step3_pairs.iter().map(|p| p.1).collect();
        let expected_downs: Vec<usize> = paired_downstream(n).collect();
        let expected_ups: Vec<usize> = upstream(n).collect();
        if downs != expected_downs || !is_permutation(&ups, &expected_ups) {
            return Err(Error::key(format!(
                "step-3 pairs {:?} are not a bijection from downstream {:?} onto upstream {:?}",
                self.step3_pairs, expected_downs, expected_ups
            )));
        }
        if !is_permutation(&self.step4_upstream_order, &expected_ups) {
            return Err(Error::key(format!(
                "step-4 order {:?} is not a permutation of {:?}",
                self.step4_upstream_order, expected_ups
            )));
        }
        if let Some(pairing) = &self.mode2_pairing {
            let all: Vec<usize> = (1..=n).collect();
            if !is_permutation(pairing, &all) {
                return Err(Error::key(format!("mode 2 pairing {pairing:?} is not a permutation of 1..={n}")));
            }
        }
        if let Some(iv) = &self.iv {
            if iv.len() != n {
                return Err(Error::key(format!("IV of length {} for block size {n}", iv.len())));
            }
        }
        Ok(())
    }
}

/// Draws a key uniformly over pairings and step-4 orders, with angle indices
/// uniform over the guarded part of the grid. When the grid has no guarded
/// value (N dividing 8) the angles are drawn from the whole grid.
pub fn generate_key<R: Rng + ?Sized>(n: usize, grid: u32, rng: &mut R) -> Result<CipherKey> {
    if !(2..=MAX_QUBITS).contains(&n) {
        return Err(Error::input(format!("block size {n} outside 2..={MAX_QUBITS}")));
    }
    if grid < 2 {
        return Err(Error::input(format!("angle grid size {grid} < 2")));
    }
    let guard = grid_admits_guard(grid);
    let theta = (0..n)
        .map(|_| loop {
            let k = rng.random_range(0..grid);
            if !guard || is_guarded_angle(grid_angle(k, grid)) {
                break k;
            }
        })
        .collect();
    let mut targets: Vec<usize> = upstream(n).collect();
    targets.shuffle(rng);
    let step3_pairs = paired_downstream(n).zip(targets).collect();
    let mut order: Vec<usize> = upstream(n).collect();
    order.shuffle(rng);
    Ok(CipherKey { n, grid, theta, step3_pairs, step4_upstream_order: order, mode2_pairing: None, iv: None })
}

/// Gates of each step, in application order.
pub fn key_steps(key: &CipherKey) -> Result<[Vec<GateOp>; 4]> {
    key.validate()?;
    let n = key.n;
    let step1 = (1..=n).map(|q| GateOp::SingleU { qubit: q, theta: key.angle(q) }).collect();
    let step2 = (1..n).map(|i| GateOp::Cnot { control: i, target: i + 1 }).collect();
    let step3 = key.step3_pairs.iter().map(|&(down, up)| GateOp::Cnot { control: down, target: up }).collect();

    let downs = step4_downstream(n);
    let sigma = &key.step4_upstream_order;
    let mut step4 = Vec::with_capacity(2 * sigma.len());
    for (t, &up) in sigma.iter().enumerate() {
        step4.push(GateOp::Cnot { control: downs[t], target: up });
        let next = downs.get(t + 1).copied().unwrap_or(downs[t]);
        step4.push(GateOp::Cnot { control: up, target: next });
    }
    Ok([step1, step2, step3, step4])
}

pub fn key_circuit(key: &CipherKey) -> Result<Vec<GateOp>> {
    key_circuit_ablated(key, Ablation::Full)
}

pub fn key_circuit_ablated(key: &CipherKey, ablation: Ablation) -> Result<Vec<GateOp>> {
    Ok(key_steps(key)?.into_iter().take(ablation.steps()).flatten().collect())
}

/// Every gate is an involution, so the inverse is the reversed gate list.
pub fn inverse_of(circuit: &[GateOp]) -> Vec<GateOp> {
    circuit.iter().rev().copied().collect()
}

pub fn inverse_circuit(key: &CipherKey) -> Result<Vec<GateOp>> {
    Ok(inverse_of(&key_circuit(key)?))
}

/// Exact key count `N^n * (h!)^2` with `h = floor(n/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Keyspace {
    pub exact: BigUint,
    pub log2: f64,
}

/// Step-1 angle choices times step-3 pairings times step-4 upstream orders.
/// Odd `n` uses `h = floor(n/2)` for both factorials since the extra
/// downstream qubit has a fixed role.
pub fn keyspace_size(n: usize, grid: u32) -> Keyspace {
    let h = upstream_count(n);
    let f = factorial(h);
    let exact = BigUint::from(grid).pow(n as u32) * &f * &f;
    let log2 = log2_biguint(&exact);
    Keyspace { exact, log2 }
}
