//! Confusion and diffusion measurements.
//!
//! Three views of "ciphertext qubit m depends on key unitary U_j":
//!
//! - [`symbolic_dependences`] propagates dependence sets by union: a
//!   single-qubit unitary adds itself, a CNOT copies the control's set into
//!   the target's.
//! - [`parity_dependences`] propagates the same sets by symmetric difference.
//!   When every unitary precedes every CNOT the network only permutes basis
//!   states, each ciphertext bit is the XOR of a subset of the
//!   post-unitary bits, and that subset is exactly the set of unitaries the
//!   marginal can depend on.
//! - [`numeric_dependence_matrix`] perturbs one key angle at a time and
//!   watches the simulated marginals.
//!
//! For key circuits `numeric ⊆ parity ⊆ symbolic` holds entrywise.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::cipher::{encode_plaintext, PlainBlock};
use crate::error::{Error, Result};
use crate::keyschedule::{is_guarded_angle, key_circuit_ablated, run_circuit, Ablation, CipherKey, GateOp};
use crate::statevector::StateVector;

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_PROBES: usize = 8;

/// `n x n` boolean matrix; entry `(m, j)` says ciphertext qubit `m` depends on
/// key unitary `U_j`. Both indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependenceMatrix {
    n: usize,
    rows: Vec<u32>,
}

impl DependenceMatrix {
    pub fn empty(n: usize) -> Self {
        DependenceMatrix { n, rows: vec![0; n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, m: usize, j: usize) -> bool {
        self.rows[m - 1] >> (j - 1) & 1 == 1
    }

    pub fn set(&mut self, m: usize, j: usize) {
        self.rows[m - 1] |= 1 << (j - 1);
    }

    pub fn row_counts(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.count_ones() as usize).collect()
    }

    pub fn col_counts(&self) -> Vec<usize> {
        (1..=self.n).map(|j| (1..=self.n).filter(|&m| self.get(m, j)).count()).collect()
    }

    /// Row `m` as a sorted list of unitary labels.
    pub fn row(&self, m: usize) -> Vec<usize> {
        (1..=self.n).filter(|&j| self.get(m, j)).collect()
    }

    pub fn entries(&self) -> Vec<Vec<bool>> {
        (1..=self.n).map(|m| (1..=self.n).map(|j| self.get(m, j)).collect()).collect()
    }

    pub fn is_subset_of(&self, other: &DependenceMatrix) -> bool {
        self.n == other.n && self.rows.iter().zip(&other.rows).all(|(a, b)| a & !b == 0)
    }

    /// Number of entries on which the two matrices agree.
    pub fn agreement(&self, other: &DependenceMatrix) -> usize {
        let mask = if self.n == 32 { u32::MAX } else { (1u32 << self.n) - 1 };
        self.rows.iter().zip(&other.rows).map(|(a, b)| (!(a ^ b) & mask).count_ones() as usize).sum()
    }
}

fn check_circuit(circuit: &[GateOp], n: usize) -> Result<()> {
    if n == 0 || n > 32 {
        return Err(Error::input(format!("dependence matrices support 1..=32 qubits, got {n}")));
    }
    circuit.iter().try_for_each(|g| g.check(n))
}

/// Union propagation. A single-qubit unitary on qubit `q` is labelled `U_q`.
pub fn symbolic_dependences(circuit: &[GateOp], n: usize) -> Result<DependenceMatrix> {
    check_circuit(circuit, n)?;
    let mut m = DependenceMatrix::empty(n);
    for g in circuit {
        match *g {
            GateOp::SingleU { qubit, .. } => m.set(qubit, qubit),
            GateOp::Cnot { control, target } => m.rows[target - 1] |= m.rows[control - 1],
        }
    }
    Ok(m)
}

/// Symmetric-difference propagation; exact for circuits in which no
/// single-qubit unitary follows a CNOT.
pub fn parity_dependences(circuit: &[GateOp], n: usize) -> Result<DependenceMatrix> {
    check_circuit(circuit, n)?;
    let mut m = DependenceMatrix::empty(n);
    let mut seen_cnot = false;
    for g in circuit {
        match *g {
            GateOp::SingleU { qubit, .. } => {
                if seen_cnot {
                    return Err(Error::input(
                        "parity propagation needs every single-qubit unitary before the first CNOT",
                    ));
                }
                m.set(qubit, qubit);
            }
            GateOp::Cnot { control, target } => {
                seen_cnot = true;
                m.rows[target - 1] ^= m.rows[control - 1];
            }
        }
    }
    Ok(m)
}

/// Alternative grid indices probed for angle index `k` on a grid of size `grid`.
pub fn probe_indices(k: u32, grid: u32, probes: usize) -> Vec<u32> {
    let mut out: Vec<u32> = (1..=probes as u64)
        .map(|a| (a * grid as u64 / (probes as u64 + 1)) as u32)
        .filter(|&off| off != 0)
        .map(|off| (k + off) % grid)
        .collect();
    out.dedup();
    if out.is_empty() && grid > 1 {
        out.push((k + 1) % grid);
    }
    out
}

fn ciphertext_marginals(key: &CipherKey, ablation: Ablation, plain: &PlainBlock) -> Result<Vec<f64>> {
    let circuit = key_circuit_ablated(key, ablation)?;
    Ok(run_circuit(&encode_plaintext(&plain.bits)?, &circuit)?.marginals())
}

fn check_knobs(key: &CipherKey, plain: &PlainBlock, epsilon: f64) -> Result<()> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::input(format!("threshold {epsilon} must be positive")));
    }
    if plain.bits.len() != key.n {
        return Err(Error::input(format!("plaintext of {} bits for a {}-qubit key", plain.bits.len(), key.n)));
    }
    Ok(())
}

/// Entry `(m, j)` is set when moving angle `j` to one of `probes` other grid
/// values changes qubit `m`'s marginal by more than `epsilon`.
pub fn numeric_dependence_matrix(
    key: &CipherKey,
    ablation: Ablation,
    plain: &PlainBlock,
    epsilon: f64,
    probes: usize,
) -> Result<DependenceMatrix> {
    check_knobs(key, plain, epsilon)?;
    if probes < 2 {
        return Err(Error::input(format!("need at least 2 probes, got {probes}")));
    }
    let base = ciphertext_marginals(key, ablation, plain)?;
    let mut matrix = DependenceMatrix::empty(key.n);
    for j in 1..=key.n {
        let mut probe = key.clone();
        for alt in probe_indices(key.theta[j - 1], key.grid, probes) {
            probe.theta[j - 1] = alt;
            let moved = ciphertext_marginals(&probe, ablation, plain)?;
            for (m, (a, b)) in base.iter().zip(&moved).enumerate() {
                if (a - b).abs() > epsilon {
                    matrix.set(m + 1, j);
                }
            }
        }
    }
    Ok(matrix)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionReport {
    pub matrix: DependenceMatrix,
    pub row_counts: Vec<usize>,
    pub pass: bool,
}

/// Passes when every ciphertext qubit symbolically depends on more than
/// half of the key unitaries.
pub fn confusion_check(key: &CipherKey, ablation: Ablation) -> Result<ConfusionReport> {
    let matrix = symbolic_dependences(&key_circuit_ablated(key, ablation)?, key.n)?;
    let row_counts = matrix.row_counts();
    let pass = row_counts.iter().all(|&c| 2 * c > key.n);
    Ok(ConfusionReport { matrix, row_counts, pass })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionProfile {
    pub n: usize,
    /// `counts[j-1]`: ciphertext qubits whose marginal moves when plaintext bit `j` flips.
    pub counts: Vec<usize>,
    pub epsilon: f64,
    /// Entry `(m, j)`: qubit `m` moved when bit `j` flipped.
    pub changed: DependenceMatrix,
    pub pass: bool,
}

pub fn diffusion_profile(
    key: &CipherKey,
    ablation: Ablation,
    plain: &PlainBlock,
    epsilon: f64,
) -> Result<DiffusionProfile> {
    check_knobs(key, plain, epsilon)?;
    let base = ciphertext_marginals(key, ablation, plain)?;
    let mut changed = DependenceMatrix::empty(key.n);
    for j in 1..=key.n {
        let flipped = PlainBlock::new(plain.bits.flipped(j));
        let moved = ciphertext_marginals(key, ablation, &flipped)?;
        for (m, (a, b)) in base.iter().zip(&moved).enumerate() {
            if (a - b).abs() > epsilon {
                changed.set(m + 1, j);
            }
        }
    }
    let counts = changed.col_counts();
    let pass = counts.iter().all(|&c| 2 * c >= key.n);
    Ok(DiffusionProfile { n: key.n, counts, epsilon, changed, pass })
}

/// Gate of a circuit whose single-qubit angles are free parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamGate {
    /// Reflection on `qubit` with angle `params[param]`.
    U {
        qubit: usize,
        param: usize,
    },
    Cnot {
        control: usize,
        target: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamCircuit {
    pub n: usize,
    pub gates: Vec<ParamGate>,
    pub params: Vec<f64>,
}

impl ParamCircuit {
    fn validate(&self) -> Result<()> {
        for g in &self.gates {
            let op = match *g {
                ParamGate::U { qubit, param } => {
                    if param >= self.params.len() {
                        return Err(Error::input(format!("parameter {param} has no value")));
                    }
                    GateOp::SingleU { qubit, theta: 0.0 }
                }
                ParamGate::Cnot { control, target } => GateOp::Cnot { control, target },
            };
            op.check(self.n)?;
        }
        Ok(())
    }

    /// Marginals after every gate, starting from `|0…0>`.
    pub fn marginal_trajectory(&self, params: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut state = StateVector::zero(self.n)?;
        let mut out = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            match *g {
                ParamGate::U { qubit, param } => state.apply_single_in_place(qubit, params[param])?,
                ParamGate::Cnot { control, target } => state.apply_cnot_in_place(control, target)?,
            }
            out.push(state.marginals());
        }
        Ok(out)
    }
}

fn random_guarded_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let t = rng.random::<f64>() * 2.0 * PI;
        if is_guarded_angle(t) {
            return t;
        }
    }
}

/// A reflection on every qubit followed by `depth` gates, each a fresh
/// reflection on a random qubit or a CNOT on a random ordered pair with
/// equal probability.
pub fn random_param_circuit<R: Rng + ?Sized>(n: usize, depth: usize, rng: &mut R) -> ParamCircuit {
    let mut gates = Vec::with_capacity(n + depth);
    let mut params = Vec::new();
    let mut fresh_u = |qubit: usize, rng: &mut R, gates: &mut Vec<ParamGate>| {
        gates.push(ParamGate::U { qubit, param: params.len() });
        params.push(random_guarded_angle(rng));
    };
    for q in 1..=n {
        fresh_u(q, rng, &mut gates);
    }
    for _ in 0..depth {
        if rng.random_bool(0.5) {
            let q = rng.random_range(1..=n);
            fresh_u(q, rng, &mut gates);
        } else {
            let control = rng.random_range(1..=n);
            let target = (control + rng.random_range(0..n - 1)) % n + 1;
            gates.push(ParamGate::Cnot { control, target });
        }
    }
    ParamCircuit { n, gates, params }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theorem1Check {
    /// Moving a unitary's angle changes no other qubit's marginal.
    Locality,
    /// After `CNOT(c -> t)`, `t` depends on everything `c` depended on.
    Transfer,
    /// After `CNOT(c -> t)`, `c` keeps its dependences.
    Retention,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Violation {
    pub circuit: usize,
    /// 0-based gate position.
    pub gate: usize,
    pub check: Theorem1Check,
    pub qubit: usize,
    pub param: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Config {
    pub epsilon: f64,
    pub probes: usize,
    /// Random gates appended after the initial reflection layer.
    pub depth: usize,
}

impl Theorem1Config {
    pub fn for_qubits(n: usize) -> Self {
        Theorem1Config { epsilon: DEFAULT_EPSILON, probes: DEFAULT_PROBES, depth: 2 * n }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Theorem1Report {
    pub n: usize,
    pub circuits: usize,
    pub locality_checks: u64,
    pub transfer_checks: u64,
    pub retention_checks: u64,
    pub violations: Vec<Theorem1Violation>,
}

impl Theorem1Report {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, check: Theorem1Check) -> usize {
        self.violations.iter().filter(|v| v.check == check).count()
    }
}

/// Runs the locality, transfer and retention checks on every gate of one circuit.
pub fn check_param_circuit(
    circuit: &ParamCircuit,
    cfg: &Theorem1Config,
    index: usize,
    report: &mut Theorem1Report,
) -> Result<()> {
    circuit.validate()?;
    let base = circuit.marginal_trajectory(&circuit.params)?;
    // moved[p][k][m]: some probe of parameter p moved qubit m's marginal after gate k.
    let mut moved = Vec::with_capacity(circuit.params.len());
    for p in 0..circuit.params.len() {
        let mut flags = vec![vec![false; circuit.n]; circuit.gates.len()];
        let mut params = circuit.params.clone();
        for a in 1..=cfg.probes {
            params[p] = circuit.params[p] + 2.0 * PI * a as f64 / (cfg.probes + 1) as f64;
            let traj = circuit.marginal_trajectory(&params)?;
            for (k, (b, t)) in base.iter().zip(&traj).enumerate() {
                for m in 0..circuit.n {
                    flags[k][m] |= (b[m] - t[m]).abs() > cfg.epsilon;
                }
            }
        }
        moved.push(flags);
    }

    let violation = |gate, check, qubit, param| Theorem1Violation { circuit: index, gate, check, qubit, param };
    for (k, g) in circuit.gates.iter().enumerate() {
        match *g {
            ParamGate::U { qubit, param } => {
                report.locality_checks += 1;
                if let Some(m) = (1..=circuit.n).find(|&m| m != qubit && moved[param][k][m - 1]) {
                    report.violations.push(violation(k, Theorem1Check::Locality, m, param));
                }
            }
            ParamGate::Cnot { control, target } => {
                if k == 0 {
                    continue;
                }
                for (p, flags) in moved.iter().enumerate() {
                    if !flags[k - 1][control - 1] {
                        continue;
                    }
                    report.transfer_checks += 1;
                    if !flags[k][target - 1] {
                        report.violations.push(violation(k, Theorem1Check::Transfer, target, p));
                    }
                    report.retention_checks += 1;
                    if !flags[k][control - 1] {
                        report.violations.push(violation(k, Theorem1Check::Retention, control, p));
                    }
                }
            }
        }
    }
    report.circuits += 1;
    Ok(())
}

/// Checks the dependence creation and propagation rules on `trials` random
/// circuits over `n` qubits.
pub fn verify_theorem1<R: Rng + ?Sized>(
    n: usize,
    trials: usize,
    rng: &mut R,
    cfg: &Theorem1Config,
) -> Result<Theorem1Report> {
    if !(2..=6).contains(&n) {
        return Err(Error::input(format!("dependence-rule checks run on 2..=6 qubits, got {n}")));
    }
    if cfg.epsilon.is_nan() || cfg.epsilon <= 0.0 || cfg.probes == 0 {
        return Err(Error::input("threshold and probe count must be positive"));
    }
    let mut report = Theorem1Report { n, ..Default::default() };
    for i in 0..trials {
        let circuit = random_param_circuit(n, cfg.depth, rng);
        check_param_circuit(&circuit, cfg, i, &mut report)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitString;
    use crate::keyschedule::{generate_key, key_circuit};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cx(control: usize, target: usize) -> GateOp {
        GateOp::Cnot { control, target }
    }

    fn u(q: usize) -> GateOp {
        GateOp::SingleU { qubit: q, theta: 0.3 }
    }

    fn rows(m: &DependenceMatrix) -> Vec<Vec<usize>> {
        (1..=m.n()).map(|r| m.row(r)).collect()
    }

    fn random_plain<R: Rng>(n: usize, rng: &mut R) -> PlainBlock {
        PlainBlock::new(BitString::new((0..n).map(|_| rng.random()).collect()))
    }

    #[test]
    fn snowball_chain_accumulates() {
        let circuit = [u(1), u(2), u(3), u(4), cx(1, 2), cx(2, 3), cx(3, 4)];
        let m = symbolic_dependences(&circuit, 4).unwrap();
        assert_eq!(rows(&m), [vec![1], vec![1, 2], vec![1, 2, 3], vec![1, 2, 3, 4]]);
    }

    #[test]
    fn chain_order_matters() {
        let m = symbolic_dependences(&[u(1), u(2), u(3), cx(2, 3), cx(1, 2)], 3).unwrap();
        assert_eq!(m.row(3), [2, 3]);
    }

    #[test]
    fn parity_cancels_repeated_transfers() {
        let circuit = [u(1), u(2), cx(1, 2), cx(1, 2)];
        assert_eq!(symbolic_dependences(&circuit, 2).unwrap().row(2), [1, 2]);
        assert_eq!(parity_dependences(&circuit, 2).unwrap().row(2), [2]);
        assert!(parity_dependences(&[u(1), cx(1, 2), u(2)], 2).is_err());
    }

    #[test]
    fn step3_gives_every_row_a_majority() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in (2..=24).step_by(2) {
            let key = generate_key(n, 64, &mut rng).unwrap();
            let m = symbolic_dependences(&key_circuit_ablated(&key, Ablation::Steps123).unwrap(), n).unwrap();
            assert!(m.row_counts().iter().all(|&c| 2 * c > n));
        }
    }

    #[test]
    fn symbolic_majorities_for_every_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 2..=24 {
            for _ in 0..5 {
                let key = generate_key(n, 64, &mut rng).unwrap();
                let m = symbolic_dependences(&key_circuit(&key).unwrap(), n).unwrap();
                assert!(m.row_counts().iter().all(|&c| 2 * c > n), "n={n} rows {:?}", m.row_counts());
                assert!(m.col_counts().iter().all(|&c| 2 * c > n), "n={n} cols {:?}", m.col_counts());
            }
        }
    }

    #[test]
    fn step1_only_numeric_matrix_is_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let key = generate_key(6, 256, &mut rng).unwrap();
            let p = random_plain(6, &mut rng);
            let m = numeric_dependence_matrix(&key, Ablation::Step1Only, &p, 1e-6, 8).unwrap();
            assert_eq!(rows(&m), (1..=6).map(|q| vec![q]).collect::<Vec<_>>());
        }
    }

    #[test]
    fn numeric_is_bounded_by_parity_and_symbolic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (mut agree_parity, mut total) = (0, 0);
        for _ in 0..30 {
            let key = generate_key(8, 256, &mut rng).unwrap();
            let p = random_plain(8, &mut rng);
            let circuit = key_circuit(&key).unwrap();
            let numeric = numeric_dependence_matrix(&key, Ablation::Full, &p, 1e-6, 8).unwrap();
            let parity = parity_dependences(&circuit, 8).unwrap();
            let symbolic = symbolic_dependences(&circuit, 8).unwrap();
            assert!(numeric.is_subset_of(&parity));
            assert!(parity.is_subset_of(&symbolic));
            agree_parity += numeric.agreement(&parity);
            total += 64;
        }
        assert!(agree_parity as f64 >= 0.99 * total as f64, "{agree_parity}/{total}");
    }

    #[test]
    fn confusion_on_ablations() {
        let key = generate_key(8, 256, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let full = confusion_check(&key, Ablation::Full).unwrap();
        assert!(full.pass);
        assert!(full.row_counts.iter().all(|&c| c >= 5));
        let s1 = confusion_check(&key, Ablation::Step1Only).unwrap();
        assert!(!s1.pass);
        assert_eq!(s1.row_counts, [1; 8]);
        let s12 = confusion_check(&key, Ablation::Steps12).unwrap();
        assert!(!s12.pass);
        assert_eq!(s12.row_counts, [1, 2, 3, 4, 5, 6, 7, 8]);
    }

    #[test]
    fn diffusion_on_step1_only_is_local() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let key = generate_key(8, 256, &mut rng).unwrap();
        let d = diffusion_profile(&key, Ablation::Step1Only, &random_plain(8, &mut rng), 1e-6).unwrap();
        assert_eq!(d.counts, [1; 8]);
        assert!(!d.pass);
    }

    #[test]
    fn diffusion_counts_are_bounded_by_dependence_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let key = generate_key(8, 256, &mut rng).unwrap();
            let circuit = key_circuit(&key).unwrap();
            let d = diffusion_profile(&key, Ablation::Full, &random_plain(8, &mut rng), 1e-6).unwrap();
            let sym = symbolic_dependences(&circuit, 8).unwrap().col_counts();
            let par = parity_dependences(&circuit, 8).unwrap().col_counts();
            for j in 0..8 {
                assert!(d.counts[j] <= par[j] && par[j] <= sym[j]);
            }
            // Flipping bit j moves qubit m exactly when U_j sits in m's parity row.
            assert_eq!(d.changed, parity_dependences(&circuit, 8).unwrap());
        }
    }

    #[test]
    fn two_qubit_transfer_matches_closed_form() {
        let circuit = ParamCircuit {
            n: 2,
            gates: vec![
                ParamGate::U { qubit: 1, param: 0 },
                ParamGate::U { qubit: 2, param: 1 },
                ParamGate::Cnot { control: 1, target: 2 },
            ],
            params: vec![0.4, 1.1],
        };
        let traj = circuit.marginal_trajectory(&circuit.params).unwrap();
        let (a1, a2, b1, b2) = (0.4f64.cos(), 0.4f64.sin(), 1.1f64.cos(), 1.1f64.sin());
        let expected = a1 * a1 * b1 * b1 + a2 * a2 * b2 * b2;
        assert!((traj[2][1] - expected).abs() < 1e-12);
        let moved = circuit.marginal_trajectory(&[0.9, 1.1]).unwrap();
        assert!((moved[2][1] - traj[2][1]).abs() > 1e-6);
        // Control retains its dependence on its own unitary.
        assert!((moved[2][0] - traj[2][0]).abs() > 1e-6);

        let mut report = Theorem1Report { n: 2, ..Default::default() };
        check_param_circuit(&circuit, &Theorem1Config::for_qubits(2), 0, &mut report).unwrap();
        assert!(report.pass());
        assert_eq!(report.transfer_checks, 1);
    }

    #[test]
    fn three_qubit_snowball_matches_closed_form() {
        let circuit = ParamCircuit {
            n: 3,
            gates: vec![
                ParamGate::U { qubit: 1, param: 0 },
                ParamGate::U { qubit: 2, param: 1 },
                ParamGate::U { qubit: 3, param: 2 },
                ParamGate::Cnot { control: 1, target: 2 },
                ParamGate::Cnot { control: 2, target: 3 },
            ],
            params: vec![0.3, 2.2, 1.0],
        };
        let last = circuit.marginal_trajectory(&circuit.params).unwrap().pop().unwrap();
        let sq = |t: f64| (t.cos().powi(2), t.sin().powi(2));
        let ((a1, a2), (b1, b2), (c1, c2)) = (sq(0.3), sq(2.2), sq(1.0));
        let expected = (a1 * b1 + a2 * b2) * c1 + (a1 * b2 + a2 * b1) * c2;
        assert!((last[2] - expected).abs() < 1e-12);
        let mut report = Theorem1Report::default();
        check_param_circuit(&circuit, &Theorem1Config::for_qubits(3), 0, &mut report).unwrap();
        assert!(report.pass());
    }

    #[test]
    fn repeated_cnot_is_a_transfer_counterexample() {
        let circuit = ParamCircuit {
            n: 2,
            gates: vec![
                ParamGate::U { qubit: 1, param: 0 },
                ParamGate::U { qubit: 2, param: 1 },
                ParamGate::Cnot { control: 1, target: 2 },
                ParamGate::Cnot { control: 1, target: 2 },
            ],
            params: vec![0.4, 1.1],
        };
        let mut report = Theorem1Report::default();
        check_param_circuit(&circuit, &Theorem1Config::for_qubits(2), 0, &mut report).unwrap();
        assert_eq!(report.count(Theorem1Check::Transfer), 1);
        assert_eq!(report.count(Theorem1Check::Retention), 0);
        assert_eq!(report.violations[0].gate, 3);
        assert_eq!(report.violations[0].param, 0);
    }

    #[test]
    fn locality_and_retention_always_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 2..=6 {
            let report = verify_theorem1(n, 20, &mut rng, &Theorem1Config::for_qubits(n)).unwrap();
            assert_eq!(report.count(Theorem1Check::Locality), 0);
            assert_eq!(report.count(Theorem1Check::Retention), 0);
            assert!(report.locality_checks > 0 && report.retention_checks > 0);
        }
        assert!(verify_theorem1(7, 1, &mut rng, &Theorem1Config::for_qubits(7)).is_err());
    }

    #[test]
    fn probes_are_distinct_grid_values() {
        let p = probe_indices(10, 256, 8);
        assert_eq!(p.len(), 8);
        assert!(p.iter().all(|&k| k != 10 && k < 256));
        assert_eq!(probe_indices(1, 2, 8), [0]);
    }

    proptest::proptest! {
        #[test]
        fn appending_gates_never_removes_symbolic_dependences(
            seed in 0u64..1000, extra in proptest::collection::vec((1usize..=6, 1usize..6), 1..10),
        ) {
            let key = generate_key(6, 64, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let mut circuit = key_circuit(&key).unwrap();
            let mut before = symbolic_dependences(&circuit, 6).unwrap();
            for (c, off) in extra {
                circuit.push(cx(c, (c - 1 + off) % 6 + 1));
                let after = symbolic_dependences(&circuit, 6).unwrap();
                proptest::prop_assert!(before.is_subset_of(&after));
                before = after;
            }
        }
    }
}
