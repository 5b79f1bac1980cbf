//! Command-line surface.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qblock_core::adversary::{
    brute_force_key_recovery, config_count_bounds, detection_experiment, marginal_estimation_attack, AttackReport,
};
use qblock_core::analysis::{
    confusion_check, diffusion_profile, numeric_dependence_matrix, parity_dependences, verify_theorem1,
    DependenceMatrix, Theorem1Check, Theorem1Config,
};
use qblock_core::keyschedule::{key_circuit_ablated, keyspace_size};
use qblock_core::modes::{mode1_decrypt, mode1_encrypt, mode2_decrypt, mode2_encrypt, Mode, ModeConfig};
use qblock_core::{encrypt_block, generate_key, Ablation, BitString, CipherKey, PlainBlock};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::{exit, CliError};
use crate::format::{
    key_from_json, key_to_json, to_json, transmission_from_json, transmission_to_json, AnalysisFile, AttackFile,
    Theorem1File,
};
use crate::pack::{blocks_to_bytes, bytes_to_blocks};

#[derive(Debug, Parser)]
#[command(name = "qblock", version, about = "Quantum block cipher simulator")]
pub struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Print a machine-readable JSON summary on stdout.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a key file.
    Keygen(KeygenArgs),
    /// Encrypt a byte file into a transmission file.
    Encrypt(EncryptArgs),
    /// Decrypt a transmission file back into bytes.
    Decrypt(DecryptArgs),
    /// Measure confusion, diffusion or the dependence rules.
    Analyze(AnalyzeArgs),
    /// Run an attack experiment.
    #[command(subcommand)]
    Attack(AttackCommand),
    /// Print the key space size.
    Keyspace(KeyspaceArgs),
}

#[derive(Debug, Args)]
pub struct KeygenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long = "N", default_value_t = 256)]
    pub grid: u32,
    #[arg(long)]
    pub out: PathBuf,
    /// Also draw a random block-to-block pairing for mode 2.
    #[arg(long)]
    pub random_pairing: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    M1,
    M2,
}

#[derive(Debug, Args)]
pub struct EncryptArgs {
    #[arg(long)]
    pub key: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::M1)]
    pub mode: ModeArg,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecryptArgs {
    #[arg(long)]
    pub key: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalysisKind {
    Confusion,
    Diffusion,
    /// Confusion under exact XOR propagation of dependences.
    Parity,
    Theorem1,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum AblationArg {
    #[default]
    Full,
    Step1Only,
    Steps12,
    Steps123,
}

impl From<AblationArg> for Ablation {
    fn from(a: AblationArg) -> Self {
        match a {
            AblationArg::Full => Ablation::Full,
            AblationArg::Step1Only => Ablation::Step1Only,
            AblationArg::Steps12 => Ablation::Steps12,
            AblationArg::Steps123 => Ablation::Steps123,
        }
    }
}

impl AblationArg {
    fn name(self) -> &'static str {
        match self {
            AblationArg::Full => "full",
            AblationArg::Step1Only => "step1-only",
            AblationArg::Steps12 => "steps12",
            AblationArg::Steps123 => "steps123",
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Key to analyze. Not used by theorem1, which draws random circuits.
    #[arg(long)]
    pub key: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: AnalysisKind,
    #[arg(long, value_enum, default_value_t = AblationArg::Full)]
    pub ablate: AblationArg,
    /// Marginal change counted as a dependence.
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    /// Probe angles tried per parameter.
    #[arg(long, default_value_t = 8)]
    pub grid: usize,
    /// Random circuits for theorem1.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Qubits for theorem1 (2 to 6).
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Gates after the initial reflection layer for theorem1 (default 2n).
    #[arg(long)]
    pub depth: Option<usize>,
    /// Plaintext block for numeric measurements (default all zeros).
    #[arg(long)]
    pub plaintext: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KeySource {
    /// Key file; without it a key is generated from --seed.
    #[arg(long)]
    pub key: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long = "N", default_value_t = 256)]
    pub grid: u32,
    /// Plaintext block (default all zeros).
    #[arg(long)]
    pub plaintext: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum AttackCommand {
    /// Intercept-resend against repeated copies of one block.
    Intercept {
        #[command(flatten)]
        source: KeySource,
        /// Copies sent per trial.
        #[arg(long, default_value_t = 5)]
        r: usize,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Leave the channel alone (baseline).
        #[arg(long)]
        no_eve: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate key angles from intercepted measurement statistics.
    Stats {
        #[command(flatten)]
        source: KeySource,
        #[arg(long, value_enum, default_value_t = AblationArg::Full)]
        ablate: AblationArg,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive key search from one known plaintext/ciphertext pair.
    Brute {
        #[arg(long)]
        n: usize,
        #[arg(long = "N")]
        grid: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Counting bounds on gate-sequence configurations.
    Bounds {
        #[arg(long)]
        n: usize,
        #[arg(long = "L")]
        length: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct KeyspaceArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long = "N")]
    pub grid: u32,
}

/// Key generation as done by `keygen`: the key circuit, then the IV, then
/// the optional mode 2 pairing, all from one stream.
pub fn seeded_key<R: Rng + ?Sized>(
    n: usize,
    grid: u32,
    random_pairing: bool,
    rng: &mut R,
) -> Result<CipherKey, CliError> {
    let mut key = generate_key(n, grid, rng)?;
    key.iv = Some(BitString::new((0..n).map(|_| rng.random()).collect()));
    if random_pairing {
        let mut pairing: Vec<usize> = (1..=n).collect();
        pairing.shuffle(rng);
        key.mode2_pairing = Some(pairing);
    }
    Ok(key)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn with_path(path: &Path, err: CliError) -> CliError {
    match err {
        CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    }
}

pub fn load_key(path: &Path) -> Result<CipherKey, CliError> {
    key_from_json(&read_text(path)?).map_err(|e| with_path(path, e))
}

fn distinct(input: &Path, out: &Path) -> Result<(), CliError> {
    if input == out {
        return Err(CliError::Input(format!("input and output are both {}", input.display())));
    }
    Ok(())
}

fn plaintext(arg: &Option<String>, n: usize) -> Result<PlainBlock, CliError> {
    let bits = match arg {
        Some(text) => text.parse::<BitString>()?,
        None => BitString::zeros(n),
    };
    if bits.len() != n {
        return Err(CliError::Input(format!("plaintext {bits} has {} bits, the key expects {n}", bits.len())));
    }
    Ok(PlainBlock::new(bits))
}

fn positive(name: &str, ok: bool) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Input(format!("--{name} must be positive")))
    }
}

/// Runs one command, writing human or JSON output to `stdout`, and returns
/// the exit code for commands that complete.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<u8, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let mut say = |human: String, machine: serde_json::Value| -> Result<(), CliError> {
        let text = if cli.json { machine.to_string() } else { human };
        writeln!(stdout, "{text}").map_err(|e| CliError::io("<stdout>", e))
    };
    match &cli.command {
        Command::Keygen(a) => {
            let key = seeded_key(a.n, a.grid, a.random_pairing, &mut rng)?;
            write_file(&a.out, key_to_json(&key)?)?;
            let space = keyspace_size(a.n, a.grid);
            say(
                format!(
                    "wrote {}-qubit key (N = {}) to {}\nkeyspace: {} keys, log2 = {:.2}",
                    a.n,
                    a.grid,
                    a.out.display(),
                    space.exact,
                    space.log2
                ),
                json!({"out": a.out, "n": a.n, "N": a.grid, "keyspace": space.exact.to_string(), "log2_keyspace": space.log2}),
            )?;
        }
        Command::Encrypt(a) => {
            distinct(&a.input, &a.out)?;
            let key = load_key(&a.key)?;
            let bytes = fs::read(&a.input).map_err(|e| CliError::io(&a.input, e))?;
            let blocks = bytes_to_blocks(&bytes, key.n)?;
            let t = match a.mode {
                ModeArg::M1 => {
                    mode1_encrypt(&key, &blocks, &ModeConfig::from_key(&key, Mode::Mode1Measured), &mut rng)?
                }
                ModeArg::M2 => mode2_encrypt(&key, &blocks, &ModeConfig::from_key(&key, Mode::Mode2Entangling))?,
            };
            write_file(&a.out, transmission_to_json(&t)?)?;
            say(
                format!(
                    "encrypted {} blocks of {} bits ({}) to {}",
                    blocks.len(),
                    key.n,
                    t.mode().tag(),
                    a.out.display()
                ),
                json!({"out": a.out, "mode": t.mode().tag(), "n": key.n, "m": blocks.len()}),
            )?;
        }
        Command::Decrypt(a) => {
            distinct(&a.input, &a.out)?;
            let key = load_key(&a.key)?;
            let t = transmission_from_json(&read_text(&a.input)?).map_err(|e| with_path(&a.input, e))?;
            let cfg = ModeConfig::from_key(&key, t.mode());
            let blocks = match t.mode() {
                Mode::Mode1Measured => mode1_decrypt(&key, &cfg, &t)?,
                Mode::Mode2Entangling => mode2_decrypt(&key, &cfg, &t)?,
            };
            let bytes = blocks_to_bytes(&blocks)?;
            write_file(&a.out, &bytes)?;
            say(
                format!("decrypted {} blocks ({} bytes) to {}", blocks.len(), bytes.len(), a.out.display()),
                json!({"out": a.out, "mode": t.mode().tag(), "m": blocks.len(), "bytes": bytes.len()}),
            )?;
        }
        Command::Analyze(a) => {
            let report = analyze(a, &mut rng)?;
            let text = to_json(&report)?;
            if let Some(out) = &a.out {
                write_file(out, &text)?;
            }
            let verdict = if report.pass { "pass" } else { "fail" };
            let human = match &report.theorem1 {
                Some(t) => format!(
                    "theorem1 on {} circuits of {} qubits: {} locality, {} transfer, {} retention violations: {verdict}",
                    t.circuits, report.n, t.locality_violations, t.transfer_violations, t.retention_violations
                ),
                None => format!(
                    "{} ({}): row counts {:?}, column counts {:?}: {verdict}",
                    report.kind, report.ablation, report.row_counts, report.col_counts
                ),
            };
            say(human, serde_json::from_str(&text).map_err(|e| CliError::Format(e.to_string()))?)?;
            if !report.pass {
                return Ok(exit::ANALYSIS_FAILED);
            }
        }
        Command::Attack(a) => {
            let (report, out) = attack(a, &mut rng)?;
            let file = AttackFile::from(&report);
            let text = to_json(&file)?;
            if let Some(out) = out {
                write_file(out, &text)?;
            }
            say(describe_attack(&file), serde_json::from_str(&text).map_err(|e| CliError::Format(e.to_string()))?)?;
        }
        Command::Keyspace(a) => {
            let space = keyspace_size(a.n, a.grid);
            say(
                format!("keyspace({}, {}) = {} (log2 = {:.4})", a.n, a.grid, space.exact, space.log2),
                json!({"n": a.n, "N": a.grid, "keyspace": space.exact.to_string(), "log2_keyspace": space.log2}),
            )?;
        }
    }
    Ok(exit::SUCCESS)
}

fn fraction(count: usize, total: usize) -> f64 {
    count as f64 / total as f64
}

fn analyze(a: &AnalyzeArgs, rng: &mut ChaCha8Rng) -> Result<AnalysisFile, CliError> {
    positive("epsilon", a.epsilon > 0.0)?;
    positive("grid", a.grid > 0)?;
    positive("trials", a.trials > 0)?;
    let ablation = Ablation::from(a.ablate);
    let mut file = AnalysisFile {
        kind: format!("{:?}", a.kind).to_lowercase(),
        ablation: a.ablate.name().into(),
        n: 0,
        matrix: Vec::new(),
        row_counts: Vec::new(),
        col_counts: Vec::new(),
        pass: false,
        epsilon: a.epsilon,
        grid: a.grid,
        plaintext: None,
        numeric_matrix: None,
        agreement: None,
        numeric_subset: None,
        theorem1: None,
    };
    if a.kind == AnalysisKind::Theorem1 {
        let n = a.n;
        let cfg = Theorem1Config { epsilon: a.epsilon, probes: a.grid, depth: a.depth.unwrap_or(2 * n) };
        let report = verify_theorem1(n, a.trials, rng, &cfg)?;
        file.n = n;
        file.pass = report.pass();
        file.theorem1 = Some(Theorem1File {
            circuits: report.circuits,
            depth: cfg.depth,
            locality_checks: report.locality_checks,
            transfer_checks: report.transfer_checks,
            retention_checks: report.retention_checks,
            locality_violations: report.count(Theorem1Check::Locality),
            transfer_violations: report.count(Theorem1Check::Transfer),
            retention_violations: report.count(Theorem1Check::Retention),
            examples: report
                .violations
                .iter()
                .take(10)
                .map(|v| (format!("{:?}", v.check).to_lowercase(), [v.circuit, v.gate, v.qubit, v.param]))
                .collect(),
        });
        return Ok(file);
    }

    let path = a.key.as_deref().ok_or_else(|| CliError::Input(format!("--key is required for {}", file.kind)))?;
    let key = load_key(path)?;
    let plain = plaintext(&a.plaintext, key.n)?;
    file.n = key.n;
    file.plaintext = Some(plain.bits.to_string());
    let fill = |file: &mut AnalysisFile, m: &DependenceMatrix| {
        file.matrix = m.entries();
        file.row_counts = m.row_counts();
        file.col_counts = m.col_counts();
    };
    let compare = |file: &mut AnalysisFile, reference: &DependenceMatrix| -> Result<(), CliError> {
        let numeric = numeric_dependence_matrix(&key, ablation, &plain, a.epsilon, a.grid)?;
        file.agreement = Some(fraction(numeric.agreement(reference), key.n * key.n));
        file.numeric_subset = Some(numeric.is_subset_of(reference));
        file.numeric_matrix = Some(numeric.entries());
        Ok(())
    };
    match a.kind {
        AnalysisKind::Confusion => {
            let report = confusion_check(&key, ablation)?;
            fill(&mut file, &report.matrix);
            file.pass = report.pass;
            compare(&mut file, &report.matrix)?;
        }
        AnalysisKind::Parity => {
            let parity = parity_dependences(&key_circuit_ablated(&key, ablation)?, key.n)?;
            fill(&mut file, &parity);
            file.pass = parity.row_counts().iter().all(|&c| 2 * c > key.n);
            compare(&mut file, &parity)?;
        }
        AnalysisKind::Diffusion => {
            let profile = diffusion_profile(&key, ablation, &plain, a.epsilon)?;
            fill(&mut file, &profile.changed);
            file.pass = profile.pass;
        }
        AnalysisKind::Theorem1 => unreachable!("handled above"),
    }
    Ok(file)
}

fn resolve_key(source: &KeySource, rng: &mut ChaCha8Rng) -> Result<(CipherKey, PlainBlock), CliError> {
    let key = match &source.key {
        Some(path) => load_key(path)?,
        None => seeded_key(source.n, source.grid, false, rng)?,
    };
    let plain = plaintext(&source.plaintext, key.n)?;
    Ok((key, plain))
}

fn attack<'a>(a: &'a AttackCommand, rng: &mut ChaCha8Rng) -> Result<(AttackReport, Option<&'a PathBuf>), CliError> {
    Ok(match a {
        AttackCommand::Intercept { source, r, trials, no_eve, out } => {
            positive("r", *r > 0)?;
            positive("trials", *trials > 0)?;
            let (key, plain) = resolve_key(source, rng)?;
            (detection_experiment(&key, &plain, *r, !no_eve, *trials, rng)?, out.as_ref())
        }
        AttackCommand::Stats { source, ablate, samples, out } => {
            positive("samples", *samples > 0)?;
            let (key, plain) = resolve_key(source, rng)?;
            let result = marginal_estimation_attack(&key, (*ablate).into(), &plain, *samples, rng)?;
            (result.report((*ablate).into()), out.as_ref())
        }
        AttackCommand::Brute { n, grid, out } => {
            let key = generate_key(*n, *grid, rng)?;
            let plain = PlainBlock::new(BitString::new((0..*n).map(|_| rng.random()).collect()));
            let known = encrypt_block(&key, &plain)?;
            let found = brute_force_key_recovery(*n, *grid, &plain, &known)?;
            let mut report = found.report(*n, *grid);
            report.counts.push(("true_key_found".into(), found.consistent.contains(&key) as u64));
            report.parameters.push(("plaintext".into(), plain.bits.to_string()));
            (report, out.as_ref())
        }
        AttackCommand::Bounds { n, length, out } => (config_count_bounds(*n, *length)?.report(), out.as_ref()),
    })
}

fn describe_attack(file: &AttackFile) -> String {
    let mut lines = vec![match file.trials {
        0 => format!("attack {}", file.attack),
        t => format!("attack {} ({t} trials)", file.attack),
    }];
    lines.extend(file.counts.iter().map(|(k, v)| format!("  {k}: {v}")));
    lines.extend(file.estimates.iter().map(|(k, e)| match e.half_width {
        Some(h) => format!("  {k}: {:.6} +/- {h:.6}", e.value),
        None => format!("  {k}: {:.6}", e.value),
    }));
    lines.extend(file.exact.iter().map(|(k, v)| format!("  {k}: {v}")));
    lines.join("\n")
}
