use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use jointgc::model::read_bank;
use jointgc::ngc::{
    aggregate_matrix, causal_indexes, emit_graph, extract_tensor, lag_indexes, lag_matrix, ngc_threshold,
    read_matrix_csv, variable_usage_rate, write_lag_csv, write_matrix_csv, write_tensor_json, GroupNorm, Layout,
    LAG_EXCLUSION_FRACTION,
};
use jointgc::pipeline::{
    run_cohort, run_pair, run_sweep, PreprocessSettings, RunConfig, SweepAxis, GRAPH_FILE, LAG_FILE, MATRIX_FILE,
    TENSOR_FILE,
};
use jointgc::preprocess::io::{load_dataset, write_dataset, Manifest};
use jointgc::preprocess::AgentSpec;
use jointgc::synth::{
    conditional_gc_oracle, gen_coupled_agents, gen_var, linear_gc_oracle, CoupledAgentSpec, SynthData, VarSpec,
};
use jointgc::{Error, Result};
use log::info;
use ndarray::Array2;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "jointgc",
    version,
    about = "Neural Granger causality between two interacting agents"
)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, env = "JOINTGC_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Coupled,
    Var,
}

#[derive(Subcommand)]
enum Command {
    /// Turn a manifest of marker or velocity trials into a normalized velocity dataset.
    Preprocess {
        #[arg(long)]
        manifest: PathBuf,
        /// Run config whose `preprocess` overrides are applied.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and analyze each pair separately, keeping the weight banks.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Only this pair (by name).
        #[arg(long)]
        pair: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Read causality out of a saved weight bank.
    Extract {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Fixed threshold; default is the mean off-diagonal strength.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, default_value = "l2")]
        norm: String,
    },
    /// Run every pair, then the cohort statistics.
    Cohort {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Repeat the cohort run over values of one hyperparameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// lambda, sampling_rate, max_lag (seconds), hidden_units, learning_rate or input_type.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Simulate a dataset with known causal structure.
    Synth {
        #[arg(long, value_enum, default_value = "coupled")]
        kind: SynthKind,
        /// Generator spec as JSON; defaults are used when absent.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Linear Granger tests on a dataset, pairwise unless `--conditional`.
    Oracle {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        max_lag: usize,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
        /// Condition every test on all other channels instead of the target alone.
        #[arg(long)]
        conditional: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a matrix CSV as a DOT graph.
    Graph {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        /// Index of the second agent's first channel; inferred from labels when absent.
        #[arg(long)]
        agent_split: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Preprocess { manifest, config, out } => preprocess(&manifest, config.as_deref(), &out),
        Command::Train {
            config,
            pair,
            out,
            seed,
        } => {
            let mut config = load_config(&config, out, seed)?;
            config.write_banks = true;
            let indices: Vec<usize> = match &pair {
                Some(name) => vec![config
                    .pairs
                    .iter()
                    .position(|p| &p.name == name)
                    .ok_or_else(|| Error::Config(format!("no pair named `{name}`")))?],
                None => (0..config.pairs.len()).collect(),
            };
            for i in indices {
                let report = run_pair(&config, i)?;
                println!(
                    "{}: mean R2 {}, usage rate {:.3}",
                    report.pair,
                    fmt_opt(report.mean_r2),
                    report.usage_rate
                );
            }
            Ok(())
        }
        Command::Extract {
            bank,
            out,
            threshold,
            norm,
        } => extract(&bank, &out, threshold, &norm),
        Command::Cohort { config, out, seed } => {
            let config = load_config(&config, out, seed)?;
            let report = run_cohort(&config)?;
            print!("{}", report.render_text());
            Ok(())
        }
        Command::Sweep {
            config,
            axis,
            values,
            out,
            seed,
        } => {
            let config = load_config(&config, out, seed)?;
            let axis: SweepAxis = axis.parse()?;
            let table = run_sweep(&config, axis, &values)?;
            print!("{}", table.to_text());
            Ok(())
        }
        Command::Synth { kind, spec, seed, out } => synth(kind, spec.as_deref(), seed, &out),
        Command::Oracle {
            manifest,
            max_lag,
            alpha,
            conditional,
            out,
        } => oracle(&manifest, max_lag, alpha, conditional, &out),
        Command::Graph {
            matrix,
            threshold,
            agent_split,
            out,
        } => {
            let m = read_matrix_csv(&matrix, agent_split)?;
            let threshold = threshold.unwrap_or_else(|| ngc_threshold(&m));
            emit_graph(&m, threshold, &out)
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.3}"))
}

fn load_config(path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<RunConfig> {
    let mut config = RunConfig::load(path)?;
    if let Some(out) = out {
        config.out_dir = out;
    }
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok(config)
}

fn rows<T: Clone>(a: &Array2<T>) -> Vec<Vec<T>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn write_json(value: &serde_json::Value, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Input(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.into(),
        source: e,
    })
}

fn preprocess(manifest_path: &Path, config: Option<&Path>, out: &Path) -> Result<()> {
    let manifest = Manifest::load(manifest_path)?;
    let settings = match config {
        Some(path) => RunConfig::load(path)?.preprocess,
        None => PreprocessSettings::default(),
    };
    let dataset = load_dataset(manifest_path, &manifest, &settings.apply(manifest.pair_config()))?;
    let written = write_dataset(&dataset, out, &manifest.agents)?;
    info!("wrote {}", written.display());
    println!(
        "{} trials x {} frames x {} channels at {} Hz -> {}",
        dataset.n_trials(),
        dataset.frames(),
        dataset.n_channels(),
        dataset.sampling_rate,
        written.display()
    );
    Ok(())
}

fn extract(bank_path: &Path, out: &Path, threshold: Option<f64>, norm: &str) -> Result<()> {
    let norm = match norm {
        "l2" => GroupNorm::L2,
        "l1" => GroupNorm::L1,
        other => return Err(Error::Config(format!("unknown group norm `{other}` (l2 or l1)"))),
    };
    let (bank, manifest) = read_bank(bank_path)?;
    let layout = Layout {
        labels: manifest.labels.clone(),
        agent_split: manifest.agent_split,
    };
    let tensor = extract_tensor(&bank, manifest.sampling_rate, layout, norm)?;
    let matrix = aggregate_matrix(&tensor);
    let threshold = threshold.unwrap_or_else(|| ngc_threshold(&matrix));
    let lags = lag_matrix(&tensor, threshold);
    create_dir(out)?;
    write_matrix_csv(&matrix, &out.join(MATRIX_FILE))?;
    write_tensor_json(&tensor, &out.join(TENSOR_FILE))?;
    write_lag_csv(&lags, &out.join(LAG_FILE))?;
    emit_graph(&matrix, threshold, &out.join(GRAPH_FILE))?;
    let summary = json!({
        "bank": bank_path,
        "indexes": causal_indexes(&matrix),
        "usage_rate": variable_usage_rate(&matrix),
        "threshold": threshold,
        "lag_indexes": lag_indexes(&lags, LAG_EXCLUSION_FRACTION),
        "r2": bank.r2,
        "mean_r2": bank.mean_r2(),
    });
    write_json(&summary, &out.join("indexes.json"))
}

fn synth(kind: SynthKind, spec: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<()> {
    let read = |path: &Path| -> Result<String> {
        std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        })
    };
    let parse_err = |path: &Path, e: serde_json::Error| Error::Json {
        path: path.into(),
        source: e,
    };
    let (data, agents, spec_json): (SynthData, Vec<String>, serde_json::Value) = match kind {
        SynthKind::Coupled => {
            let mut s: CoupledAgentSpec = match spec {
                Some(p) => serde_json::from_str(&read(p)?).map_err(|e| parse_err(p, e))?,
                None => CoupledAgentSpec::default(),
            };
            if let Some(seed) = seed {
                s.seed = seed;
            }
            (gen_coupled_agents(&s)?, s.agents.to_vec(), json!(s))
        }
        SynthKind::Var => {
            let mut s: VarSpec = match spec {
                Some(p) => serde_json::from_str(&read(p)?).map_err(|e| parse_err(p, e))?,
                None => VarSpec::random(10, 3, 0.2, 1000, 1, seed.unwrap_or(0))?,
            };
            if let Some(seed) = seed {
                s.seed = seed;
            }
            (gen_var(&s)?, vec!["a".into(), "b".into()], json!(s))
        }
    };
    let agents: Vec<AgentSpec> = agents
        .into_iter()
        .map(|id| AgentSpec {
            id,
            handedness: Default::default(),
        })
        .collect();
    let manifest = write_dataset(&data.dataset, out, &agents)?;
    let truth = json!({
        "labels": data.dataset.labels(),
        "agent_split": data.dataset.agent_split,
        "adjacency": rows(&data.truth),
        "lags_s": rows(&data.truth_lags),
        "spec": spec_json,
    });
    write_json(&truth, &out.join("truth.json"))?;
    println!("{}", manifest.display());
    Ok(())
}

fn oracle(manifest_path: &Path, max_lag: usize, alpha: f64, conditional: bool, out: &Path) -> Result<()> {
    let manifest = Manifest::load(manifest_path)?;
    let dataset = load_dataset(manifest_path, &manifest, &manifest.pair_config())?;
    let result = if conditional {
        conditional_gc_oracle(&dataset, max_lag, alpha)?
    } else {
        linear_gc_oracle(&dataset, max_lag, alpha)?
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let body = json!({
        "labels": dataset.labels(),
        "agent_split": dataset.agent_split,
        "max_lag": result.max_lag,
        "alpha": result.alpha,
        "conditional": conditional,
        "p_values": rows(&result.p_values),
        "adjacency": rows(&result.adjacency),
    });
    write_json(&body, out)
}
