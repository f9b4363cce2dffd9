use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ctxopt::harness::{
    self, ablate_mprev, compare, write_trace, Experiment, ExperimentConfig, HarnessError, Method, MethodSummary,
    PolicyFile, PreoptArtifact, Resources,
};
use ctxopt::mogpr::MogprModel;

#[derive(Parser)]
#[command(name = "ctxopt", version, about = "Contextual warm starting for CMA-ES")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the master seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    parallel: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Cws,
    Cold,
    Wscma,
    CcmaesApprox,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Cws => Method::Cws,
            MethodArg::Cold => Method::Cold,
            MethodArg::Wscma => Method::Wscma,
            MethodArg::CcmaesApprox => Method::CcmaesApprox,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the pre-optimization tasks and write dataset.json.
    Preopt(Common),
    /// Fit the multi-output GP to a dataset and write model.json.
    FitGp {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Run one method on every trial and write trial_<id>.csv.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Previously fitted model; fitted from the dataset when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Trained policy for ccmaes-approx; trained and saved when omitted.
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Full comparison: results.csv, curves.csv and summary.json.
    Compare(Common),
    /// Vary the number of pre-optimized tasks for CMA-ES-CWS.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [5, 10, 15, 20])]
        m_values: Vec<usize>,
    },
}

fn load_config(common: &Common) -> harness::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_summary(rows: &[MethodSummary]) {
    println!(
        "{:<16} {:>9} {:>12} {:>12} {:>12} {:>12}",
        "method", "solved", "median", "q1", "q3", "median_f"
    );
    for s in rows {
        println!(
            "{:<16} {:>4}/{:<4} {:>12.1} {:>12.1} {:>12.1} {:>12.3e}",
            s.method, s.successes, s.trials, s.median_evals, s.q1_evals, s.q3_evals, s.median_best_f
        );
    }
}

fn experiment_for(cfg: ExperimentConfig, dataset: Option<&PreoptArtifact>) -> harness::Result<Experiment> {
    match dataset {
        Some(art) => {
            if art.seed != cfg.seed {
                log::info!("using the dataset seed {} instead of {}", art.seed, cfg.seed);
            }
            Experiment::from_artifact(cfg, art)
        }
        None => Experiment::new(cfg),
    }
}

fn run(cli: Cli) -> harness::Result<()> {
    match cli.command {
        Command::Preopt(common) => {
            let cfg = load_config(&common)?;
            fs::create_dir_all(&common.out)?;
            let exp = Experiment::new(cfg)?;
            let art = harness::with_pool(common.parallel, || exp.preoptimize())??;
            let path = common.out.join("dataset.json");
            art.save(&path)?;
            println!("{} pairs, {} evaluations -> {}", art.dataset.len(), art.preopt_evals, path.display());
        }
        Command::FitGp { common, dataset } => {
            let cfg = load_config(&common)?;
            fs::create_dir_all(&common.out)?;
            let art = PreoptArtifact::load(&dataset)?;
            let exp = experiment_for(cfg, Some(&art))?;
            let model = harness::with_pool(common.parallel, || exp.fit_model(&art.dataset))??;
            let path = common.out.join("model.json");
            model.save(&path, Some(&dataset))?;
            println!(
                "log marginal likelihood {:.6} -> {}",
                model.log_marginal_likelihood(),
                path.display()
            );
        }
        Command::Run {
            common,
            method,
            dataset,
            model,
            policy,
        } => {
            let method = Method::from(method);
            let cfg = load_config(&common)?;
            fs::create_dir_all(&common.out)?;
            let art = dataset.as_deref().map(PreoptArtifact::load).transpose()?;
            let exp = experiment_for(cfg, art.as_ref())?;
            let res = resources(&exp, method, art.as_ref(), model.as_deref(), policy.as_deref(), &common)?;
            let records = exp.run_trials(&[method], &res, common.parallel)?;
            for r in &records {
                write_trace(&common.out.join(format!("trial_{}.csv", r.trial)), &[r])?;
            }
            print_summary(&harness::summarize(&records));
        }
        Command::Compare(common) => {
            let cfg = load_config(&common)?;
            let outcome = compare(&cfg, &common.out, common.parallel)?;
            print_summary(&outcome.summary.methods);
            println!("pre-optimization evaluations: {}", outcome.summary.preopt_evals);
        }
        Command::Ablate { common, m_values } => {
            let cfg = load_config(&common)?;
            let outcome = ablate_mprev(&cfg, &m_values, &common.out, common.parallel)?;
            print_summary(&outcome.summary.methods);
        }
    }
    Ok(())
}

fn resources(
    exp: &Experiment,
    method: Method,
    art: Option<&PreoptArtifact>,
    model: Option<&Path>,
    policy: Option<&Path>,
    common: &Common,
) -> harness::Result<Resources> {
    let dataset = art.map(|a| a.dataset.clone());
    if method.needs_dataset() && dataset.as_ref().is_none_or(|d| d.is_empty()) {
        return Err(HarnessError::MissingDataset(method));
    }
    let mut res = Resources {
        dataset,
        ..Default::default()
    };
    match method {
        Method::Cws => {
            res.model = Some(match model {
                Some(path) => MogprModel::load(path)?,
                None => {
                    let data = res.dataset.as_ref().expect("checked above");
                    harness::with_pool(common.parallel, || exp.fit_model(data))??
                }
            });
        }
        Method::CcmaesApprox => {
            res.policy = Some(match policy {
                Some(path) => PolicyFile::load(path)?.into_policy()?,
                None => {
                    let p = exp.train_policy()?;
                    PolicyFile::from_policy(&p, exp.cfg.ccmaes_budget()).save(&common.out.join("policy.json"))?;
                    p
                }
            });
        }
        Method::Cold | Method::Wscma => {}
    }
    Ok(res)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                HarnessError::Usage(_) | HarnessError::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
