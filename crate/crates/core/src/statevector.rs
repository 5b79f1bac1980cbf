//! Dense pure-state simulator over at most [`MAX_QUBITS`] qubits.
//!
//! Qubit 1 is the most significant bit of the basis index, so the ket
//! `|b1 b2 … bn>` lives at index `sum(b_i * 2^(n-i))`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Upper bound on the register size, including joint multi-block registers.
pub const MAX_QUBITS: usize = 24;

/// Tolerance on `sum |amp|^2 = 1`.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

/// Result of a projective measurement of every qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOutcome {
    pub bits: BitString,
    pub collapsed: StateVector,
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::input("a register needs at least one qubit"));
    }
    if n > MAX_QUBITS {
        return Err(Error::resource(format!("{n} qubits requested, the simulator caps registers at {MAX_QUBITS}")));
    }
    Ok(())
}

impl StateVector {
    /// `|0…0>` on `n` qubits.
    pub fn zero(n: usize) -> Result<Self> {
        Self::basis_index(n, 0)
    }

    pub fn basis_state(n: usize, bits: &BitString) -> Result<Self> {
        if bits.len() != n {
            return Err(Error::input(format!("bitstring of length {} for a {n}-qubit register", bits.len())));
        }
        Self::basis_index(n, bits.to_index())
    }

    pub fn basis_index(n: usize, index: usize) -> Result<Self> {
        check_size(n)?;
        let len = 1usize << n;
        if index >= len {
            return Err(Error::input(format!("basis index {index} out of range for {n} qubits")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); len];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    /// Builds a state from explicit amplitudes; rejects unnormalized input.
    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_size(n)?;
        if amps.len() != 1usize << n {
            return Err(Error::input(format!(
                "{} amplitudes supplied for {n} qubits (expected {})",
                amps.len(),
                1usize << n
            )));
        }
        let state = StateVector { n, amps };
        let norm = state.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::input(format!("amplitudes have squared norm {norm}, expected 1")));
        }
        Ok(state)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn mask(&self, q: usize) -> Result<usize> {
        if q == 0 || q > self.n {
            return Err(Error::input(format!("qubit {q} out of range 1..={}", self.n)));
        }
        Ok(1usize << (self.n - q))
    }

    /// Applies the real reflection `U(theta) = [[cos, sin], [sin, -cos]]` to qubit `q`.
    pub fn apply_single(&self, q: usize, theta: f64) -> Result<StateVector> {
        let mut out = self.clone();
        out.apply_single_in_place(q, theta)?;
        Ok(out)
    }

    pub fn apply_cnot(&self, control: usize, target: usize) -> Result<StateVector> {
        let mut out = self.clone();
        out.apply_cnot_in_place(control, target)?;
        Ok(out)
    }

    pub(crate) fn apply_single_in_place(&mut self, q: usize, theta: f64) -> Result<()> {
        let mask = self.mask(q)?;
        let (s, c) = libm::sincos(theta);
        for idx in 0..self.amps.len() {
            if idx & mask == 0 {
                let a = self.amps[idx];
                let b = self.amps[idx | mask];
                self.amps[idx] = a * c + b * s;
                self.amps[idx | mask] = a * s - b * c;
            }
        }
        Ok(())
    }

    pub(crate) fn apply_cnot_in_place(&mut self, control: usize, target: usize) -> Result<()> {
        if control == target {
            return Err(Error::input(format!("CNOT control and target are both qubit {control}")));
        }
        let cmask = self.mask(control)?;
        let tmask = self.mask(target)?;
        for idx in 0..self.amps.len() {
            if idx & cmask != 0 && idx & tmask == 0 {
                self.amps.swap(idx, idx | tmask);
            }
        }
        Ok(())
    }

    /// Probability of reading qubit `q` as 0.
    pub fn marginal_p0(&self, q: usize) -> Result<f64> {
        let mask = self.mask(q)?;
        Ok(self.amps.iter().enumerate().filter(|(idx, _)| idx & mask == 0).map(|(_, a)| a.norm_sqr()).sum())
    }

    /// `marginal_p0` for every qubit, in qubit order.
    pub fn marginals(&self) -> Vec<f64> {
        let mut p0 = vec![0.0; self.n];
        for (idx, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            for (i, slot) in p0.iter_mut().enumerate() {
                if idx & (1usize << (self.n - 1 - i)) == 0 {
                    *slot += p;
                }
            }
        }
        p0
    }

    /// Samples every qubit in the computational basis.
    pub fn measure_all<R: Rng + ?Sized>(&self, rng: &mut R) -> MeasurementOutcome {
        let index = self.sample_index(rng);
        MeasurementOutcome {
            bits: BitString::from_index(self.n, index),
            collapsed: StateVector::basis_index(self.n, index).expect("index drawn from this register"),
        }
    }

    pub(crate) fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let r: f64 = rng.random::<f64>() * self.norm_sqr();
        let mut acc = 0.0;
        let mut last_nonzero = 0;
        for (idx, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p > 0.0 {
                last_nonzero = idx;
                acc += p;
                if r < acc {
                    return idx;
                }
            }
        }
        last_nonzero
    }

    /// Joint register with `self`'s qubits first.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let n = self.n + other.n;
        if n > MAX_QUBITS {
            return Err(Error::resource(format!(
                "tensor product of {} and {} qubits exceeds the {MAX_QUBITS}-qubit cap",
                self.n, other.n
            )));
        }
        let mut amps = Vec::with_capacity(1usize << n);
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        Ok(StateVector { n, amps })
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::input(format!("fidelity between {}- and {}-qubit states", self.n, other.n)));
        }
        let overlap: Complex64 = self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum();
        Ok(overlap.norm_sqr().min(1.0))
    }

    /// Index and probability of the most likely basis state.
    pub fn dominant_basis(&self) -> (usize, f64) {
        self.amps.iter().enumerate().map(|(i, a)| (i, a.norm_sqr())).fold((0, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        })
    }

    /// Distribution over the `len` qubits starting at qubit `first`, other
    /// qubits traced out. Entry `k` is the probability that those qubits read
    /// the `len`-bit string with index `k`.
    pub fn range_distribution(&self, first: usize, len: usize) -> Result<Vec<f64>> {
        if first == 0 || len == 0 || first + len - 1 > self.n {
            return Err(Error::input(format!("qubit range {first}..{} out of range 1..={}", first + len, self.n)));
        }
        let shift = self.n - (first + len - 1);
        let width = (1usize << len) - 1;
        let mut dist = vec![0.0; 1usize << len];
        for (idx, a) in self.amps.iter().enumerate() {
            dist[(idx >> shift) & width] += a.norm_sqr();
        }
        Ok(dist)
    }

    /// Purity `Tr(rho^2)` of the reduced state of the first `split` qubits.
    /// A product state gives 1; entanglement across the cut lowers it.
    pub fn subsystem_purity(&self, split: usize) -> Result<f64> {
        if split == 0 || split >= self.n {
            return Err(Error::input(format!("cut after qubit {split} does not split {} qubits", self.n)));
        }
        let rows = 1usize << split;
        let cols = 1usize << (self.n - split);
        // rho_A = A A^dagger where A[r][c] = amp[r * cols + c].
        let mut purity = 0.0;
        for r1 in 0..rows {
            for r2 in 0..rows {
                let mut entry = Complex64::new(0.0, 0.0);
                for c in 0..cols {
                    entry += self.amps[r1 * cols + c] * self.amps[r2 * cols + c].conj();
                }
                purity += entry.norm_sqr();
            }
        }
        Ok(purity)
    }

    /// Keeps the amplitudes whose last `len` qubits read `value`, dropping
    /// those qubits. The caller is expected to have established that the
    /// discarded qubits are (numerically) in that basis state.
    pub(crate) fn take_low_qubits(&self, len: usize, value: usize) -> Result<StateVector> {
        if len == 0 || len >= self.n {
            return Err(Error::input(format!("cannot drop {len} of {} qubits", self.n)));
        }
        let stride = 1usize << len;
        let amps: Vec<Complex64> = self.amps.iter().skip(value).step_by(stride).copied().collect();
        Ok(StateVector { n: self.n - len, amps })
    }
}
