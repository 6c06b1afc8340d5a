//! Command-line front end: bound computation, training, experiment sweeps and plots.
//!
//! Exit codes: 0 on success, 1 on usage or validation errors, 2 on numerical failure.

pub mod manifest;
pub mod plot;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hqlip::classical::{lip_empirical, lip_product, lip_sdp, ClassicalMethod, DenseNet, Norm};
use hqlip::hybrid::{hybrid_lip_bound, hybrid_lip_lower_in, BoundOptions, HybridModel};
use hqlip::qlip::{lipschitz_exact, lipschitz_sampling, subgradient_from_observables, SubgradientConfig};
use hqlip::quantum::{heisenberg_observables, CircuitSpec};
use hqlip::train::{iris_model, train, Dataset, MetricsLog, TrainConfig, TrainMethod};
use hqlip::{Error, Result};
use serde_json::{json, Value};

use manifest::{ExperimentId, Manifest};
use plot::{emit_plot, PlotKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hqlip", version, about = "Certified Lipschitz bounds for classical, quantum and hybrid models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lipschitz constant of a quantum circuit under trace distance and total variation.
    Qlip(QlipArgs),
    /// Lipschitz bound of a dense network.
    Netlip(NetlipArgs),
    /// Composed Lipschitz bound of a hybrid model.
    Hyblip(HyblipArgs),
    /// Train a hybrid model and write per-epoch metrics.
    Train(TrainArgs),
    /// Run a frozen experiment sweep and write its metrics and plot.
    Experiment(ExperimentArgs),
    /// Render a metrics CSV as an SVG plot.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum QlipMethod {
    Exact,
    Subgradient,
    Sampling,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NetMethod {
    Sdp,
    Product,
    Empirical,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum HybMethod {
    Sdp,
    Product,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NormArg {
    L1,
    L2,
    Linf,
}

impl From<NormArg> for Norm {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::L1 => Norm::L1,
            NormArg::L2 => Norm::L2,
            NormArg::Linf => Norm::Linf,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Naive,
    Pgd,
    Lipreg,
}

impl From<MethodArg> for TrainMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Naive => TrainMethod::Naive,
            MethodArg::Pgd => TrainMethod::Pgd,
            MethodArg::Lipreg => TrainMethod::Lipreg,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ExperimentArg {
    Figure1,
    Figure2,
    Figure3,
}

impl From<ExperimentArg> for ExperimentId {
    fn from(e: ExperimentArg) -> Self {
        match e {
            ExperimentArg::Figure1 => ExperimentId::Figure1,
            ExperimentArg::Figure2 => ExperimentId::Figure2,
            ExperimentArg::Figure3 => ExperimentId::Figure3,
        }
    }
}

#[derive(Debug, Args)]
pub struct QlipArgs {
    /// Circuit JSON file.
    #[arg(long)]
    pub circuit: PathBuf,
    #[arg(long, value_enum, default_value = "exact")]
    pub method: QlipMethod,
    /// State pairs for the sampling method.
    #[arg(long, default_value_t = 10_000)]
    pub pairs: usize,
    /// Iterations per restart for the subgradient method.
    #[arg(long, default_value_t = SubgradientConfig::default().iters)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NetlipArgs {
    /// Dense network JSON file.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "sdp")]
    pub method: NetMethod,
    #[arg(long, value_enum, default_value = "l2")]
    pub norm: NormArg,
    /// Sample points for the empirical lower bound.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HyblipArgs {
    /// Hybrid model JSON file.
    #[arg(long)]
    pub model: PathBuf,
    /// Certifier for dense segments.
    #[arg(long, value_enum, default_value = "sdp")]
    pub method: HybMethod,
    #[arg(long, value_enum, default_value = "l2")]
    pub norm: NormArg,
    /// Input pairs for the sampled lower witness; 0 skips it.
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Hybrid model JSON; defaults to the built-in Iris architecture.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Feature CSV with a trailing label column; defaults to the bundled Iris table.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Circuit layers of the built-in architecture.
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, value_enum, default_value = "naive")]
    pub method: MethodArg,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().lr)]
    pub lr: f64,
    #[arg(long, default_value_t = TrainConfig::default().batch)]
    pub batch: usize,
    #[arg(long = "lambda", default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = TrainConfig::default().eps)]
    pub eps: f64,
    #[arg(long, default_value_t = TrainConfig::default().pgd_steps)]
    pub pgd_steps: usize,
    /// PGD step; defaults to eps / 4.
    #[arg(long)]
    pub step_size: Option<f64>,
    #[arg(long, value_enum, default_value = "l2")]
    pub norm: NormArg,
    /// Relabel every row to this class.
    #[arg(long)]
    pub uniform_label: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Metrics CSV output.
    #[arg(long)]
    pub out: PathBuf,
    /// Write the trained model JSON here.
    #[arg(long)]
    pub save_model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub id: ExperimentArg,
    /// Output directory for `<id>.csv` and `<id>.svg`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Override the manifest epoch count.
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Metrics CSV written by `train` or `experiment`.
    #[arg(long)]
    pub metrics: PathBuf,
    /// epochs, lambda, methods, auto, or an experiment id.
    #[arg(long, default_value = "auto")]
    pub kind: String,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INVALID
    }
}

pub fn execute(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Qlip(a) => emit_json(&qlip(a)?, a.out.as_deref()),
        Command::Netlip(a) => emit_json(&netlip(a)?, a.out.as_deref()),
        Command::Hyblip(a) => emit_json(&hyblip(a)?, a.out.as_deref()),
        Command::Train(a) => train_cmd(a),
        Command::Experiment(a) => experiment(a).map(|_| ()),
        Command::Plot(a) => plot_cmd(a),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}

fn emit_json(v: &Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    println!("{text}");
    if let Some(path) = out {
        fs::write(path, text + "\n")?;
    }
    Ok(())
}

pub fn qlip(a: &QlipArgs) -> Result<Value> {
    let c: CircuitSpec = read_json(&a.circuit)?;
    let report = match a.method {
        QlipMethod::Exact => lipschitz_exact(&c)?,
        QlipMethod::Subgradient => {
            let cfg = SubgradientConfig {
                iters: a.iters,
                ..SubgradientConfig::default()
            };
            subgradient_from_observables(&heisenberg_observables(&c)?, cfg, a.seed)?
        }
        QlipMethod::Sampling => lipschitz_sampling(&c, a.pairs, a.seed)?,
    };
    let mut v = json!({ "k_star": report.k_star, "method": report.method.as_str() });
    if let Some(s) = report.sign_pattern {
        v["sign_pattern"] = json!(s);
    }
    Ok(v)
}

pub fn netlip(a: &NetlipArgs) -> Result<Value> {
    let net: DenseNet = read_json(&a.model)?;
    let norm = Norm::from(a.norm);
    let report = match a.method {
        NetMethod::Product => lip_product(&net, norm),
        NetMethod::Empirical => lip_empirical(&net, a.samples, a.seed, norm)?,
        NetMethod::Sdp if norm != Norm::L2 => {
            return Err(Error::InvalidConfig("the sdp method certifies the l2 norm only".into()))
        }
        NetMethod::Sdp => match lip_sdp(&net, hqlip::classical::SDP_BUDGET) {
            Err(Error::UseProductBound) => lip_product(&net, norm),
            other => other?,
        },
    };
    Ok(serde_json::to_value(report)?)
}

pub fn hyblip(a: &HyblipArgs) -> Result<Value> {
    let m: HybridModel = read_json(&a.model)?;
    let norm = Norm::from(a.norm);
    let opts = BoundOptions {
        norm,
        classical: match a.method {
            HybMethod::Sdp => ClassicalMethod::Sdp,
            HybMethod::Product => ClassicalMethod::Product,
        },
        lower_samples: a.samples,
        seed: a.seed,
        ..BoundOptions::default()
    };
    let report = hybrid_lip_bound(&m, &opts)?;
    let mut v = serde_json::to_value(&report)?;
    if a.samples > 0 {
        v["lower"] = json!(hybrid_lip_lower_in(&m, a.samples, a.seed, norm)?);
    }
    Ok(v)
}

fn write_log(log: &MetricsLog, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    log.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn train_cmd(a: &TrainArgs) -> Result<()> {
    let mut data = match &a.data {
        Some(p) => Dataset::from_csv(File::open(p)?, a.seed)?,
        None => Dataset::iris(a.seed),
    }
    .scaled();
    if let Some(class) = a.uniform_label {
        data = data.with_uniform_labels(class);
    }
    let mut model = match &a.model {
        Some(p) => read_json(p)?,
        None => iris_model(a.layers, a.seed)?,
    };
    let cfg = TrainConfig {
        method: a.method.into(),
        epochs: a.epochs,
        lr: a.lr,
        batch: a.batch,
        lambda: a.lambda,
        eps: a.eps,
        pgd_steps: a.pgd_steps,
        step_size: a.step_size,
        norm: a.norm.into(),
        seed: a.seed,
    };
    let log = train(&mut model, &data, &cfg)?;
    write_log(&log, &a.out)?;
    if let Some(p) = &a.save_model {
        fs::write(p, serde_json::to_string_pretty(&model)? + "\n")?;
    }
    if let Some(r) = log.last() {
        println!(
            "epoch {} loss {:.4} train_acc {:.3} test_acc {:.3} lip_hybrid {:.4}",
            r.epoch, r.loss, r.train_acc, r.test_acc, r.lip_hybrid
        );
    }
    Ok(())
}

/// Runs a sweep, writing `<out>/<id>.csv` and `<out>/<id>.svg`.
pub fn experiment(a: &ExperimentArgs) -> Result<MetricsLog> {
    let id = ExperimentId::from(a.id);
    let log = Manifest::bundled().get(id).execute(a.seed, a.epochs)?;
    fs::create_dir_all(&a.out)?;
    let csv_path = a.out.join(format!("{id}.csv"));
    write_log(&log, &csv_path)?;
    let svg_path = a.out.join(format!("{id}.svg"));
    fs::write(&svg_path, emit_plot(&log, PlotKind::for_experiment(id))?)?;
    println!("wrote {} and {}", csv_path.display(), svg_path.display());
    Ok(log)
}

fn plot_cmd(a: &PlotArgs) -> Result<()> {
    let kind: PlotKind = a.kind.parse()?;
    let log = MetricsLog::read_csv(File::open(&a.metrics)?)?;
    fs::write(&a.out, emit_plot(&log, kind)?)?;
    Ok(())
}
