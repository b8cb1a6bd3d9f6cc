//! Command-line front end: audits, sweeps, the membership-inference and
//! ridge baselines, and synthetic dataset generation. All logic lives in the
//! library; this binary parses flags and prints summaries.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dpaudit::attacks::AttackKind;
use dpaudit::error::Error;
use dpaudit::harness::{
    run_audit, run_mi_baseline, run_ridge_study, run_sweep, save_result, sweep_csv,
    synth_dataset, write_dataset_csv, AuditConfig, AuditResult, DataSource, MiConfig, NoiseLevel,
    RidgeStudyConfig, SweepSpec, SynthSpec,
};
use dpaudit::numerics::RngStream;
use dpaudit::trainer::{ModelSpec, SgdConfig};

#[derive(Parser)]
#[command(
    name = "dpaudit",
    version,
    about = "Empirical privacy auditing for DP-SGD via poisoning attacks"
)]
struct Cli {
    /// Worker threads for trial execution; any value yields identical results.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one poisoning audit and report the epsilon lower bound.
    Audit(AuditArgs),
    /// Audit a grid of clip norms, noise levels, init scales, and poison sizes.
    Sweep(SweepArgs),
    /// Membership-inference baseline (loss-threshold attack).
    Mi(MiArgs),
    /// Output-perturbation ridge regression study with closed-form checks.
    Ridge(RidgeArgs),
    /// Generate a synthetic dataset CSV.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Lr,
    Fnn,
}

#[derive(Clone, Copy, ValueEnum)]
enum AttackArg {
    Backdoor,
    Clipbkd,
    FeatureClipbkd,
}

impl From<AttackArg> for AttackKind {
    fn from(a: AttackArg) -> Self {
        match a {
            AttackArg::Backdoor => AttackKind::Backdoor,
            AttackArg::Clipbkd => AttackKind::ClipBkd,
            AttackArg::FeatureClipbkd => AttackKind::FeatureClipBkd,
        }
    }
}

#[derive(Args)]
struct DataArgs {
    /// CSV dataset: header row, a `label` column, numeric feature columns.
    #[arg(long, conflicts_with = "synthetic")]
    data: Option<PathBuf>,
    /// Synthetic spec, e.g. "n=1000,d=20,sep=4,decay=0.7" or "n=600,image=14x14".
    #[arg(long)]
    synthetic: Option<String>,
}

impl DataArgs {
    fn source(&self) -> Result<DataSource, Error> {
        match (&self.data, &self.synthetic) {
            (Some(path), None) => Ok(DataSource::Csv { path: path.clone() }),
            (None, Some(spec)) => Ok(DataSource::Synth { spec: SynthSpec::parse(spec)? }),
            (None, None) => Ok(DataSource::Synth { spec: SynthSpec::default() }),
            (Some(_), Some(_)) => {
                Err(Error::InvalidConfig("pass either --data or --synthetic".into()))
            }
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Model family.
    #[arg(long, value_enum, default_value = "lr")]
    model: ModelArg,
    /// Clipping norm C; "none" trains unclipped.
    #[arg(long, default_value = "1")]
    clip: String,
    /// DP-SGD noise multiplier sigma.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Claimed epsilon for this setting; "inf" pairs with sigma = 0.
    #[arg(long, default_value = "inf")]
    eps_th: String,
    /// Multiplier on the Glorot init std; 0 is the fixed initialization.
    #[arg(long, default_value_t = 1.0)]
    init_scale: f64,
    #[arg(long, default_value_t = 8)]
    epochs: usize,
    /// Mini-batch size.
    #[arg(long, default_value_t = 100)]
    batch: usize,
    /// Learning rate.
    #[arg(long, default_value_t = 0.15)]
    lr: f64,
    /// L2 regularization strength.
    #[arg(long, default_value_t = 0.0)]
    l2: f64,
    /// Mechanism delta, also used by the group-privacy conversion.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
}

fn parse_optional_f64(text: &str, what: &str) -> Result<Option<f64>, Error> {
    match text {
        "none" | "inf" | "unclipped" => Ok(None),
        _ => text
            .parse::<f64>()
            .map(Some)
            .map_err(|_| Error::InvalidConfig(format!("bad {what} value `{text}`"))),
    }
}

impl TrainArgs {
    fn sgd(&self) -> Result<SgdConfig, Error> {
        Ok(SgdConfig {
            clip_norm: parse_optional_f64(&self.clip, "--clip")?,
            noise_multiplier: self.noise,
            epochs: self.epochs,
            batch_size: self.batch,
            learning_rate: self.lr,
            init_scale: self.init_scale,
            l2_reg: self.l2,
            claimed_eps_th: parse_optional_f64(&self.eps_th, "--eps-th")?,
            delta: self.delta,
            sampling: Default::default(),
        })
    }

    fn model_spec(&self) -> ModelSpec {
        match self.model {
            ModelArg::Lr => ModelSpec::logistic(),
            ModelArg::Fnn => ModelSpec::fnn(),
        }
    }
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    train: TrainArgs,
    /// Attack used to build the dataset pair.
    #[arg(long, value_enum, default_value = "clipbkd")]
    attack: AttackArg,
    /// Rows replaced by poison.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Estimation trainings per arm.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Calibration trainings per arm (paper protocol: 500).
    #[arg(long, default_value_t = 100)]
    calibration: usize,
    /// Confidence level: the bound holds with probability 1 - alpha.
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Master seed; counts replay exactly from (config, seed).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for the result JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl AuditArgs {
    fn config(&self) -> Result<AuditConfig, Error> {
        let mut cfg = AuditConfig::new(
            self.attack.into(),
            self.data.source()?,
            self.train.sgd()?,
            self.train.model_spec(),
        );
        cfg.k = self.k;
        cfg.trials = self.trials;
        cfg.calibration_trials = self.calibration;
        cfg.alpha = self.alpha;
        cfg.delta = self.train.delta;
        cfg.master_seed = self.seed;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    train: TrainArgs,
    #[arg(long, value_enum, default_value = "clipbkd")]
    attack: AttackArg,
    /// Comma-separated clip norms; "none" allowed, e.g. "0.5,1,2".
    #[arg(long, default_value = "0.5,1,2")]
    clips: String,
    /// Comma-separated sigma:eps_th pairs, e.g. "0.04:2,0.02:4,0:inf".
    #[arg(long, default_value = "0.02:4,0:inf")]
    noises: String,
    /// Comma-separated init scales.
    #[arg(long, default_value = "0,1")]
    init_scales: String,
    /// Comma-separated poison sizes.
    #[arg(long, default_value = "1,2,4,8")]
    ks: String,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 100)]
    calibration: usize,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for per-audit JSONs and the aggregate sweep.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_list<T, F: Fn(&str) -> Result<T, Error>>(text: &str, f: F) -> Result<Vec<T>, Error> {
    text.split(',').map(|part| f(part.trim())).collect()
}

impl SweepArgs {
    fn spec(&self) -> Result<SweepSpec, Error> {
        let clip_norms = parse_list(&self.clips, |s| parse_optional_f64(s, "--clips"))?;
        let noise_levels = parse_list(&self.noises, |s| {
            let (sigma, eps) = s.split_once(':').ok_or_else(|| {
                Error::InvalidConfig(format!("noise level `{s}` is not sigma:eps_th"))
            })?;
            Ok(NoiseLevel {
                sigma: sigma
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("bad sigma `{sigma}`")))?,
                eps_th: parse_optional_f64(eps, "eps_th")?,
            })
        })?;
        let init_scales = parse_list(&self.init_scales, |s| {
            s.parse().map_err(|_| Error::InvalidConfig(format!("bad init scale `{s}`")))
        })?;
        let poison_counts = parse_list(&self.ks, |s| {
            s.parse().map_err(|_| Error::InvalidConfig(format!("bad poison size `{s}`")))
        })?;
        Ok(SweepSpec { clip_norms, noise_levels, init_scales, poison_counts })
    }

    fn base_config(&self) -> Result<AuditConfig, Error> {
        let mut cfg = AuditConfig::new(
            self.attack.into(),
            self.data.source()?,
            self.train.sgd()?,
            self.train.model_spec(),
        );
        cfg.trials = self.trials;
        cfg.calibration_trials = self.calibration;
        cfg.alpha = self.alpha;
        cfg.delta = self.train.delta;
        cfg.master_seed = self.seed;
        Ok(cfg)
    }
}

#[derive(Args)]
struct MiArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    train: TrainArgs,
    /// Total membership queries (half members, half non-members).
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Models trained; the advantage is averaged across them.
    #[arg(long, default_value_t = 10)]
    models: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RidgeArgs {
    /// Design rows.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Design columns.
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Claimed epsilon of the output-perturbation mechanism.
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long, default_value_t = 1e-5)]
    delta: f64,
    /// Monte-Carlo releases per arm.
    #[arg(long, default_value_t = 5000)]
    trials: usize,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Multiplier on the DP-calibrated noise (>= 1).
    #[arg(long, default_value_t = 1.0)]
    noise_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Synthetic spec, e.g. "n=6000,d=20,sep=4".
    #[arg(long, default_value = "n=1000,d=20,sep=4,decay=0.7")]
    synthetic: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

fn print_summary(result: &AuditResult) {
    println!(
        "counts: ct0={} ct1={} over t={} trials per arm (failed pairs: {})",
        result.counts.ct0, result.counts.ct1, result.counts.t, result.failed_trials
    );
    println!(
        "eps_lb = {:.4}  (p0_hat {:.5}, p1_hat {:.5}, k {}, delta {:e}, alpha {})",
        result.estimate.eps_lb,
        result.estimate.p0_hat,
        result.estimate.p1_hat,
        result.estimate.k,
        result.estimate.delta,
        result.estimate.alpha
    );
    if result.estimate.used_complement || result.estimate.used_arm_swap {
        println!(
            "  (complement used: {}, arm swap used: {})",
            result.estimate.used_complement, result.estimate.used_arm_swap
        );
    }
    if let Some(ceiling) = result.eps_opt {
        println!("eps_opt ceiling at this budget: {ceiling:.4}");
    }
    match result.eps_th {
        Some(e) => println!("claimed eps_th: {e}"),
        None => println!("claimed eps_th: infinite"),
    }
    if let Some(acc) = &result.accuracy {
        println!("training accuracy: min {:.3} mean {:.3} max {:.3}", acc.min, acc.mean, acc.max);
    }
    for warning in &result.warnings {
        println!("warning: {warning}");
    }
    println!("wall time: {:.2}s", result.wall_time_secs);
}

fn save(result: &AuditResult, out: &Option<PathBuf>) -> Result<(), Error> {
    if let Some(dir) = out {
        let path = save_result(result, dir)?;
        println!("result written to {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Audit(args) => {
            let cfg = args.config()?;
            let result = run_audit(&cfg)?;
            print_summary(&result);
            save(&result, &args.out)
        }
        Command::Sweep(args) => {
            let spec = args.spec()?;
            let base = args.base_config()?;
            let output = run_sweep(&spec, &base)?;
            print!("{}", sweep_csv(&output.rows));
            for failure in &output.failures {
                eprintln!("cell failed: {failure}");
            }
            if let Some(dir) = &args.out {
                std::fs::create_dir_all(dir)?;
                for result in &output.results {
                    save_result(result, dir)?;
                }
                let csv_path = dir.join("sweep.csv");
                std::fs::write(&csv_path, sweep_csv(&output.rows))?;
                println!("sweep table written to {}", csv_path.display());
            }
            Ok(())
        }
        Command::Mi(args) => {
            let cfg = MiConfig {
                samples: args.samples,
                models: args.models,
                sgd: args.train.sgd()?,
                model: args.train.model_spec(),
                data: args.data.source()?,
                master_seed: args.seed,
            };
            let result = run_mi_baseline(&cfg)?;
            println!("membership advantage: {:.4}", result.estimate.p0_hat);
            print_summary(&result);
            save(&result, &args.out)
        }
        Command::Ridge(args) => {
            let cfg = RidgeStudyConfig {
                n: args.n,
                dim: args.d,
                lambda: args.lambda,
                eps: args.eps,
                delta: args.delta,
                trials: args.trials,
                alpha: args.alpha,
                noise_scale: args.noise_scale,
                master_seed: args.seed,
            };
            let (result, outcome) = run_ridge_study(&cfg)?;
            println!(
                "closed-form residual {:.2e}, release noise std {:.4}, analytic lower bound {:.4}",
                outcome.closed_form_residual, outcome.noise_std, outcome.analytic_lower_bound
            );
            print_summary(&result);
            save(&result, &args.out)
        }
        Command::Synth(args) => {
            let spec = SynthSpec::parse(&args.synthetic)?;
            let data = synth_dataset(&spec, RngStream::new(args.seed, 0))?;
            write_dataset_csv(&data, &args.out)?;
            println!(
                "wrote {} rows x {} features to {}",
                data.n(),
                data.dim(),
                args.out.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
