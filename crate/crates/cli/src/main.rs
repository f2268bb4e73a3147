//! `order-recovery`: simulate, decode and analyze order-finding spectra.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use order_recovery::analysis::{analyze, plots, AnalysisConfig};
use order_recovery::dataset::{
    generate_sweep, import_histogram, load_dataset, save_dataset, summarize, SweepConfig,
};
use order_recovery::features::features_from_decode;
use order_recovery::numtheory::MAX_PRECISION;
use order_recovery::spectrum::{default_sectors, noisy_mixture, sample_counts};
use order_recovery::{
    decode, is_recoverable, Error, Instance, KernelFamily, NoiseConfig, Sector, Spectrum,
    SpectrumData,
};

/// Environment variable naming the directory for outputs without `--out`.
const OUT_DIR_VAR: &str = "ORDER_RECOVERY_OUT_DIR";

const EXIT_USAGE: u8 = 2;
const EXIT_ANALYSIS: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "order-recovery",
    version,
    about = "Recoverability analysis for noisy quantum order finding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a noisy precision-register distribution.
    #[command(allow_negative_numbers = true)]
    Simulate(SimulateArgs),
    /// Decode a spectrum file and print the verdict.
    Decode(SpectrumArgs),
    /// Print the four recoverability features of a spectrum file.
    Features(SpectrumArgs),
    /// Generate, import or summarize labeled datasets.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Run the AUROC / forest / importance / tree analysis on a dataset
    /// (all sections unless some are selected).
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// Modulus.
    #[arg(long = "N", value_name = "N")]
    n: u64,
    /// Base, coprime to N.
    #[arg(long)]
    a: u64,
    /// Precision qubits (Q = 2^t).
    #[arg(long)]
    t: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Gaussian,
    Box,
}

impl From<KernelArg> for KernelFamily {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Gaussian => KernelFamily::Gaussian,
            KernelArg::Box => KernelFamily::Box,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Weight leaked into competing sectors.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Broadening width of the intended comb family.
    #[arg(long, default_value_t = 0.0)]
    sigma0: f64,
    /// Competing sectors as h:nu:sigma,... (default: every other shift,
    /// equal weights, width sigma0).
    #[arg(long, value_delimiter = ',', value_parser = parse_sector)]
    sectors: Option<Vec<Sector>>,
    /// Uniform admixture.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, value_enum, default_value = "gaussian")]
    kernel: KernelArg,
    /// Finite-shot histogram; omit for the exact distribution.
    #[arg(long)]
    shots: Option<u64>,
    /// Seed for finite-shot sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Spectrum JSON path [default: spectrum.json in $ORDER_RECOVERY_OUT_DIR].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Spectrum JSON (probabilities or counts).
    spectrum: PathBuf,
    #[command(flatten)]
    instance: InstanceArgs,
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Run a synthetic sweep; without --config the built-in default grid.
    Generate {
        /// Sweep config (TOML).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dataset path [default: dataset.jsonl in $ORDER_RECOVERY_OUT_DIR].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Label a y,count CSV histogram.
    Import {
        /// CSV with y,count rows.
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        instance: InstanceArgs,
        /// Dataset path [default: imported.jsonl in $ORDER_RECOVERY_OUT_DIR].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print recoverability counts per instance.
    Summarize {
        /// Dataset file.
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Dataset file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Single-feature AUROC table.
    #[arg(long)]
    auroc: bool,
    /// Interpretable decision tree.
    #[arg(long)]
    tree: bool,
    /// Cross-validated random forest.
    #[arg(long)]
    forest: bool,
    /// Permutation importance.
    #[arg(long)]
    perm: bool,
    /// Cross-validation folds.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Seed for folds, forests and permutations.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trees per forest.
    #[arg(long, default_value_t = 200)]
    trees: usize,
    /// Permutation repeats per feature and fold.
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    /// Depth limit of the interpretable tree.
    #[arg(long, default_value_t = 3)]
    tree_depth: usize,
    /// Report JSON path [default: report.json in $ORDER_RECOVERY_OUT_DIR].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for CSV plot data.
    #[arg(long)]
    plots: Option<PathBuf>,
    /// Also write SVG renderings into the plots directory.
    #[arg(long, requires = "plots")]
    svg: bool,
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn flag(flag: &str, err: Error) -> Self {
        CliError::usage(format!("invalid --{flag}: {err}"))
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Analysis(_) => EXIT_ANALYSIS,
            Error::Io { .. } => EXIT_IO,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: err.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

/// `println!` that tolerates a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(io::stdout().lock(), $($arg)*);
    }};
}

fn parse_sector(item: &str) -> Result<Sector, String> {
    let parts: Vec<&str> = item.trim().split(':').collect();
    let [h, nu, sigma] = parts[..] else {
        return Err(format!("expected h:nu:sigma, got {item:?}"));
    };
    Ok(Sector {
        h: h.parse().map_err(|e| format!("bad h in {item:?}: {e}"))?,
        nu: nu.parse().map_err(|e| format!("bad nu in {item:?}: {e}"))?,
        sigma: sigma
            .parse()
            .map_err(|e| format!("bad sigma in {item:?}: {e}"))?,
    })
}

impl InstanceArgs {
    /// Validates flag by flag so the message names the offending one.
    fn resolve(&self) -> CliResult<Instance> {
        if self.n < 2 {
            return Err(CliError::usage(format!(
                "invalid --N: must be >= 2, got {}",
                self.n
            )));
        }
        if self.t == 0 || self.t > MAX_PRECISION {
            return Err(CliError::usage(format!(
                "invalid --t: must be in 1..={MAX_PRECISION}, got {}",
                self.t
            )));
        }
        Instance::new(self.n, self.a, self.t).map_err(|e| CliError::flag("a", e))
    }
}

fn check_unit(flag: &str, v: f64) -> CliResult {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "invalid --{flag}: must be in [0, 1], got {v}"
        )))
    }
}

fn check_width(flag: &str, v: f64) -> CliResult {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "invalid --{flag}: must be finite and >= 0, got {v}"
        )))
    }
}

fn default_out(name: &str) -> PathBuf {
    std::env::var_os(OUT_DIR_VAR)
        .map(PathBuf::from)
        .unwrap_or_default()
        .join(name)
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, contents).map_err(|e| {
        Error::Io {
            path: path.to_path_buf(),
            source: e,
        }
        .into()
    })
}

fn to_json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
    bytes.push(b'\n');
    bytes
}

fn read_spectrum(path: &Path, instance: &Instance) -> CliResult<Spectrum> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let data: SpectrumData = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    if data.precision() != instance.precision() {
        return Err(CliError::usage(format!(
            "invalid --t: spectrum file has t={}, --t is {}",
            data.precision(),
            instance.precision()
        )));
    }
    Ok(data.to_spectrum())
}

fn simulate(args: &SimulateArgs) -> CliResult {
    let instance = args.instance.resolve()?;
    check_unit("epsilon", args.epsilon)?;
    check_unit("lambda", args.lambda)?;
    check_width("sigma0", args.sigma0)?;
    if args.shots == Some(0) {
        return Err(CliError::usage("invalid --shots: must be positive"));
    }
    let sectors = match &args.sectors {
        Some(s) => s.clone(),
        None if args.epsilon > 0.0 => {
            default_sectors(&instance, args.sigma0).map_err(|e| CliError::flag("sectors", e))?
        }
        None => Vec::new(),
    };
    let cfg = NoiseConfig {
        epsilon: args.epsilon,
        sectors,
        sigma0: args.sigma0,
        lambda_uniform: args.lambda,
        kernel: args.kernel.into(),
        shots: args.shots,
        seed: args.seed,
    };
    let exact = noisy_mixture(&instance, &cfg).map_err(|e| CliError::flag("sectors", e))?;
    let (bytes, spec) = match args.shots {
        Some(shots) => {
            let counts = sample_counts(&exact, shots, args.seed)?;
            (to_json(&counts), counts.to_spectrum())
        }
        None => (to_json(&exact), exact),
    };
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| default_out("spectrum.json"));
    write_file(&out, &bytes)?;
    let decoded = decode(&spec, &instance)?;
    let features = features_from_decode(&spec, &decoded);
    say!(
        "{instance}: Q={} H_norm={:.6} -> {}",
        instance.q(),
        features.h_norm,
        out.display()
    );
    Ok(())
}

fn verdict(instance: &Instance, decoded: &order_recovery::DecodeResult) -> String {
    let ok = is_recoverable(decoded, instance.order());
    match decoded.r_calc {
        Some(r) => format!(
            "recoverable: {ok} (r_calc={r}, r_true={})",
            instance.order()
        ),
        None => format!("recoverable: {ok} (M_ver=0)"),
    }
}

fn decode_cmd(args: &SpectrumArgs) -> CliResult {
    let instance = args.instance.resolve()?;
    let spec = read_spectrum(&args.spectrum, &instance)?;
    let decoded = decode(&spec, &instance)?;
    let mut stdout = io::stdout().lock();
    let _ = stdout.write_all(&to_json(&decoded));
    let _ = writeln!(stdout, "{}", verdict(&instance, &decoded));
    Ok(())
}

fn features_cmd(args: &SpectrumArgs) -> CliResult {
    let instance = args.instance.resolve()?;
    let spec = read_spectrum(&args.spectrum, &instance)?;
    let decoded = decode(&spec, &instance)?;
    let _ = io::stdout().write_all(&to_json(&features_from_decode(&spec, &decoded)));
    Ok(())
}

fn dataset_cmd(cmd: &DatasetCommand) -> CliResult {
    match cmd {
        DatasetCommand::Generate { config, out } => {
            let cfg = match config {
                Some(path) => SweepConfig::load(path)?,
                None => SweepConfig::default(),
            };
            let records = generate_sweep(&cfg)?;
            let out = out.clone().unwrap_or_else(|| default_out("dataset.jsonl"));
            save_dataset(&records, &out)?;
            say!("{}", summarize(&records)?.headline());
            say!("wrote {} records to {}", records.len(), out.display());
        }
        DatasetCommand::Import {
            input,
            instance,
            out,
        } => {
            let instance = instance.resolve()?;
            let record = import_histogram(input, instance)?;
            let out = out.clone().unwrap_or_else(|| default_out("imported.jsonl"));
            save_dataset(std::slice::from_ref(&record), &out)?;
            say!("{}", verdict(&instance, &record.decode));
        }
        DatasetCommand::Summarize { input } => {
            let records = load_dataset(input)?;
            let _ = write!(io::stdout().lock(), "{}", summarize(&records)?);
        }
    }
    Ok(())
}

fn analyze_cmd(args: &AnalyzeArgs) -> CliResult {
    if args.k < 2 {
        return Err(CliError::usage(format!(
            "invalid --k: must be >= 2, got {}",
            args.k
        )));
    }
    if args.trees == 0 {
        return Err(CliError::usage("invalid --trees: must be positive"));
    }
    if args.repeats == 0 {
        return Err(CliError::usage("invalid --repeats: must be positive"));
    }
    let records = load_dataset(&args.input)?;
    let all = !(args.auroc || args.tree || args.forest || args.perm);
    let mut cfg = AnalysisConfig {
        k: args.k,
        seed: args.seed,
        perm_repeats: args.repeats,
        single_feature: all || args.auroc,
        cv_forest: all || args.forest,
        permutation: all || args.perm,
        interpretable_tree: all || args.tree,
        ..AnalysisConfig::default()
    };
    cfg.forest.n_trees = args.trees;
    cfg.forest.seed = args.seed;
    cfg.tree.max_depth = Some(args.tree_depth);
    let report = analyze(&records, &cfg)?;

    let out = args
        .out
        .clone()
        .unwrap_or_else(|| default_out("report.json"));
    write_file(&out, &to_json(&report))?;
    if let Some(dir) = &args.plots {
        for (name, contents) in plots::render_all(&records, &report, args.svg) {
            write_file(&dir.join(name), contents.as_bytes())?;
        }
    }
    let _ = io::stdout().write_all(report.to_text().as_bytes());
    say!("\nreport written to {}", out.display());
    Ok(())
}

fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Decode(a) => decode_cmd(a),
        Command::Features(a) => features_cmd(a),
        Command::Dataset(c) => dataset_cmd(c),
        Command::Analyze(a) => analyze_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
