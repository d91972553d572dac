//! Command-line front end: expansion and admissibility queries, orbit
//! inspection, operator numerics, and experiment execution.
//!
//! Exit codes: 0 on success, 2 on usage errors (from the argument parser),
//! 1 on runtime errors.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use beta_adic::adic;
use beta_adic::beta::Beta;
use beta_adic::experiments::{
    json_num, run_experiment, write_outputs, ExperimentConfig, ExperimentKind, ObservableSpec,
    Thresholds, WindowSpec,
};
use beta_adic::ratio::parse_ratio;
use beta_adic::skew::Observable;
use beta_adic::spectral::{self, SigmaMethodSpec};
use beta_adic::word::Word;

#[derive(Parser)]
#[command(name = "beta-adic", version, about = "expansions, the adic successor, and ergodic experiments over beta-maps")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Greedy digits of a point.
    Expand {
        #[arg(long, default_value = "5/2")]
        beta: String,
        /// Point in [0,1) (or 1 for the expansion-of-one rule), as p/q or decimal.
        #[arg(long)]
        x: String,
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
    /// Admissibility of a digit word.
    Admissible {
        #[arg(long, default_value = "5/2")]
        beta: String,
        /// Comma-separated digits.
        #[arg(long)]
        word: String,
    },
    /// Successor (or predecessor) in reverse lexicographic order.
    Tau {
        #[arg(long, default_value = "5/2")]
        beta: String,
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 1)]
        steps: u64,
        /// Apply the inverse instead.
        #[arg(long)]
        inverse: bool,
    },
    /// Walk an orbit and print step, word, value per line.
    Orbit {
        #[arg(long, default_value = "5/2")]
        beta: String,
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 10)]
        steps: u64,
        /// `tau` for the successor orbit, `shift` for the base map orbit.
        #[arg(long, default_value = "tau")]
        map: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Invariant density on bin midpoints as CSV (columns: x, value).
    Density {
        #[arg(long, default_value = "5/2")]
        beta: String,
        #[arg(long, default_value_t = 4096)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Asymptotic variance of the default observable.
    Sigma {
        #[arg(long, default_value = "5/2")]
        beta: String,
        /// `spectral` or `mc`.
        #[arg(long, default_value = "spectral")]
        method: String,
        #[arg(long, default_value_t = 4096)]
        bins: usize,
        #[arg(long, default_value_t = 2000)]
        n: u64,
        #[arg(long, default_value_t = 3000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run an experiment and persist JSON/CSV (and optionally SVG) reports.
    Experiment {
        #[command(subcommand)]
        kind: ExperimentCmd,
    },
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Central limit check for scaled Birkhoff sums.
    Clt(ExpArgs),
    /// Occupancy distribution against the exponential chi-squared laws.
    Ds(ExpArgs),
    /// Pointwise occupancy identity at the block rank.
    LemmaFinal(ExpArgs),
    /// Occupancy growth: sup/mean ratios and normalized-mean exponent.
    Bre(ExpArgs),
    /// Local-limit profiles on preimage trees.
    Llt(ExpArgs),
}

#[derive(Args)]
struct ExpArgs {
    /// Config file (key = value with an [experiment] block); flags override.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    /// Output directory for the report files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the SVG figure.
    #[arg(long)]
    plot: bool,
}

/// Config file shape: top-level keys plus one nested experiment block.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CliFile {
    #[serde(default)]
    beta: Option<String>,
    #[serde(default)]
    out_dir: Option<PathBuf>,
    #[serde(default)]
    plot: Option<bool>,
    #[serde(default)]
    observable: Option<ObservableSpec>,
    #[serde(default)]
    experiment: Option<ExperimentBlock>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentBlock {
    #[serde(default)]
    kind: Option<ExperimentKind>,
    #[serde(default)]
    n: Option<u64>,
    #[serde(default)]
    schedule: Option<Vec<u64>>,
    #[serde(default)]
    trials: Option<u64>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    depth: Option<usize>,
    #[serde(default)]
    window: Option<WindowSpec>,
    #[serde(default)]
    delta: Option<f64>,
    #[serde(default)]
    epsilon: Option<f64>,
    #[serde(default)]
    bins: Option<usize>,
    #[serde(default)]
    block_scale: Option<f64>,
    #[serde(default)]
    sigma2_override: Option<f64>,
    #[serde(default)]
    thresholds: Option<Thresholds>,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}

type DynError = Box<dyn std::error::Error>;

fn load_beta(s: &str) -> Result<Beta, DynError> {
    Ok(Beta::from_str_depth(s, beta_adic::beta::DEFAULT_ONE_DEPTH)?)
}

fn run(cli: Cli) -> Result<(), DynError> {
    match cli.cmd {
        Cmd::Expand { beta, x, depth } => {
            let b = load_beta(&beta)?;
            let xv = parse_ratio(&x)?;
            let word = if xv == parse_ratio("1")? {
                b.one_word(depth)?
            } else {
                b.expand(&xv, depth)?.0
            };
            println!("{word}");
            Ok(())
        }
        Cmd::Admissible { beta, word } => {
            let b = load_beta(&beta)?;
            let w: Word = word.parse()?;
            println!("{}", b.is_admissible(&w)?);
            Ok(())
        }
        Cmd::Tau {
            beta,
            word,
            steps,
            inverse,
        } => {
            let b = load_beta(&beta)?;
            let mut w: Word = word.parse()?;
            if !b.is_admissible(&w)? {
                return Err(format!("word {w} is not admissible for beta = {beta}").into());
            }
            for _ in 0..steps {
                w = if inverse {
                    adic::predecessor(&b, &w)?
                } else {
                    adic::successor(&b, &w)?.word
                };
            }
            println!("{w}");
            Ok(())
        }
        Cmd::Orbit {
            beta,
            word,
            steps,
            map,
            out,
        } => {
            let b = load_beta(&beta)?;
            let mut w: Word = word.parse()?;
            if !b.is_admissible(&w)? {
                return Err(format!("word {w} is not admissible for beta = {beta}").into());
            }
            let mut lines = String::from("step,word,value\n");
            for step in 0..=steps {
                lines.push_str(&format!(
                    "{},\"{}\",{}\n",
                    step,
                    w,
                    json_num(b.value_f64_of(&w))
                ));
                if step == steps {
                    break;
                }
                w = match map.as_str() {
                    "tau" => adic::successor(&b, &w)?.word,
                    "shift" => w.shift(1),
                    other => return Err(format!("unknown map `{other}`").into()),
                };
            }
            emit(out.as_deref(), &lines)?;
            Ok(())
        }
        Cmd::Density { beta, bins, out } => {
            let b = load_beta(&beta)?;
            let op = spectral::build_ulam(&b, bins, None);
            let dens = op.invariant_density(1e-13)?;
            let mut csv = String::from("x,value\n");
            for (i, v) in dens.values.iter().enumerate() {
                let x = (i as f64 + 0.5) / bins as f64;
                csv.push_str(&format!("{},{}\n", json_num(x), json_num(*v)));
            }
            emit(out.as_deref(), &csv)?;
            Ok(())
        }
        Cmd::Sigma {
            beta,
            method,
            bins,
            n,
            trials,
            seed,
        } => {
            let b = load_beta(&beta)?;
            let obs = Observable::first_digit(&b);
            let spec = match method.as_str() {
                "spectral" => SigmaMethodSpec::Spectral { bins, dt: 1e-3 },
                "mc" => SigmaMethodSpec::MonteCarlo { n, trials, seed },
                other => return Err(format!("unknown method `{other}`").into()),
            };
            let est = spectral::sigma_squared(&b, &obs, spec)?;
            println!(
                "sigma2={} method={} stderr={}",
                json_num(est.sigma2),
                est.method,
                json_num(est.stderr)
            );
            Ok(())
        }
        Cmd::Experiment { kind } => run_experiment_cmd(kind),
    }
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), DynError> {
    match out {
        Some(path) => {
            std::fs::write(path, content)?;
            println!("wrote {}", path.display());
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn run_experiment_cmd(cmd: ExperimentCmd) -> Result<(), DynError> {
    let (kind, args) = match cmd {
        ExperimentCmd::Clt(a) => (ExperimentKind::Clt, a),
        ExperimentCmd::Ds(a) => (ExperimentKind::Ds, a),
        ExperimentCmd::LemmaFinal(a) => (ExperimentKind::LemmaFinal, a),
        ExperimentCmd::Bre(a) => (ExperimentKind::Bre, a),
        ExperimentCmd::Llt(a) => (ExperimentKind::Llt, a),
    };

    let mut cfg = ExperimentConfig::new(kind);
    // Desk-scale defaults per experiment.
    match kind {
        ExperimentKind::Clt => {
            cfg.n = 10_000;
            cfg.trials = 10_000;
        }
        ExperimentKind::Ds => {
            cfg.n = 100_000;
            cfg.trials = 2_000;
        }
        ExperimentKind::LemmaFinal => {
            cfg.n = 100_000;
            cfg.trials = 500;
        }
        ExperimentKind::Bre => {
            cfg.trials = 1_000;
        }
        ExperimentKind::Llt => {
            cfg.n = 16;
            cfg.trials = 0;
        }
    }

    let mut out_dir = PathBuf::from("out");
    let mut plot = args.plot;

    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        let file: CliFile = toml::from_str(&text)?;
        if let Some(beta) = file.beta {
            cfg.beta = beta;
        }
        if let Some(dir) = file.out_dir {
            out_dir = dir;
        }
        if let Some(p) = file.plot {
            plot = plot || p;
        }
        if let Some(obs) = file.observable {
            cfg.observable = obs;
        }
        if let Some(block) = file.experiment {
            if let Some(file_kind) = block.kind {
                if file_kind != kind {
                    return Err(format!(
                        "config kind `{file_kind}` does not match subcommand `{kind}`"
                    )
                    .into());
                }
            }
            if let Some(v) = block.n {
                cfg.n = v;
            }
            if let Some(v) = block.schedule {
                cfg.schedule = Some(v);
            }
            if let Some(v) = block.trials {
                cfg.trials = v;
            }
            if let Some(v) = block.seed {
                cfg.seed = v;
            }
            if let Some(v) = block.depth {
                cfg.depth = v;
            }
            if let Some(v) = block.window {
                cfg.window = Some(v);
            }
            if let Some(v) = block.delta {
                cfg.delta = v;
            }
            if let Some(v) = block.epsilon {
                cfg.epsilon = v;
            }
            if let Some(v) = block.bins {
                cfg.bins = v;
            }
            if let Some(v) = block.block_scale {
                cfg.block_scale = v;
            }
            if let Some(v) = block.sigma2_override {
                cfg.sigma2_override = Some(v);
            }
            if let Some(v) = block.thresholds {
                cfg.thresholds = v;
            }
        }
    }

    // Flags override file values.
    if let Some(v) = args.beta {
        cfg.beta = v;
    }
    if let Some(v) = args.n {
        cfg.n = v;
    }
    if let Some(v) = args.trials {
        cfg.trials = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.depth {
        cfg.depth = v;
    }
    if let Some(v) = args.bins {
        cfg.bins = v;
    }
    if let Some(dir) = args.out {
        out_dir = dir;
    }

    let output = run_experiment(&cfg)?;
    let paths = write_outputs(&out_dir, &output, plot)?;
    let mut line = output.report.stdout_line();
    line.push_str(&format!(" json={}", paths.json.display()));
    println!("{line}");
    Ok(())
}
