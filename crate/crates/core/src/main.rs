use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bayes_ratio::config::StudyConfig;
use bayes_ratio::studies::{self, Setup};
use bayes_ratio::{Error, Result};

#[derive(Parser)]
#[command(name = "bayes-ratio", version, about = "Ratio estimators for Bayesian inverse problems")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.directory`).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overwrite existing data files.
    #[arg(long, global = true)]
    force: bool,
    /// Start from the published experiment's scale instead of the defaults.
    #[arg(long, global = true)]
    paper_scale: bool,
    /// Estimator seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// KL truncation order J.
    #[arg(long, global = true)]
    modes: Option<usize>,
    /// Number of observations m.
    #[arg(long, global = true)]
    observations: Option<usize>,
    /// Noise variance sigma^2.
    #[arg(long, global = true)]
    noise_variance: Option<f64>,
    /// Any field as `section.key=value` (TOML value syntax), repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic observations from a truth field on the reference mesh.
    GenerateData,
    /// Discretisation error |Q_h/Z_h - Q_2h/Z_2h| over the configured widths.
    HStudy,
    /// Sampling error against N for MC, QMC and MLMC.
    NStudy,
    /// Cost to reach RMSE tolerances, per method.
    CostStudy,
    /// Sampling error while sweeping the noise level and the observation count.
    RobustnessStudy,
    /// Build a lattice generating vector by component-by-component search.
    CbcBuild {
        /// Number of points.
        #[arg(long, default_value_t = 4096)]
        n: u64,
        /// Dimension (default: the number of KL modes).
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Compute and store the KL basis tables.
    KlCache,
}

fn load_config(g: &Global) -> Result<StudyConfig> {
    let mut config = match &g.config {
        Some(path) => StudyConfig::load(path)?,
        None if g.paper_scale => StudyConfig::paper_scale(),
        None => StudyConfig::default(),
    };
    if !g.set.is_empty() {
        let mut value: toml::Value = toml::Value::try_from(&config).map_err(|e| Error::parse("config", e.to_string()))?;
        for item in &g.set {
            apply_override(&mut value, item)?;
        }
        config = value.try_into().map_err(|e: toml::de::Error| Error::parse("--set", e.to_string()))?;
    }
    if let Some(dir) = &g.output {
        config.output.directory = dir.clone();
    }
    if let Some(seed) = g.seed {
        config.estimator.seed = seed;
    }
    if let Some(j) = g.modes {
        config.problem.modes = j;
    }
    if let Some(m) = g.observations {
        config.problem.observations = m;
    }
    if let Some(s) = g.noise_variance {
        config.problem.noise_variance = s;
    }
    config.validate()?;
    Ok(config)
}

fn apply_override(root: &mut toml::Value, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::parse("--set", format!("expected key=value, got {item:?}")))?;
    let parsed: toml::Value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut node = root;
    let parts: Vec<&str> = key.trim().split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::parse("--set", format!("{key}: not a table")))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli.global)?;
    if let Some(threads) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    log::info!("config hash {}", config.hash());
    match cli.command {
        Command::GenerateData => {
            let path = studies::cmd_generate_data(&config, cli.global.force)?;
            println!("wrote {}", path.display());
        }
        Command::KlCache => {
            let path = studies::cmd_kl_cache(&config)?;
            println!("wrote {}", path.display());
        }
        Command::CbcBuild { n, dim } => {
            let dim = dim.unwrap_or(config.problem.modes);
            let path = studies::cmd_cbc_build(&config, n, dim)?;
            println!("wrote {}", path.display());
        }
        Command::HStudy => {
            let study = studies::h_study(&Setup::new(config)?)?;
            print!("{}", body(study.table.text()));
        }
        Command::NStudy => {
            let study = studies::n_study(&Setup::new(config)?)?;
            print!("{}", body(study.table.text()));
        }
        Command::CostStudy => {
            let study = studies::cost_study(&Setup::new(config)?)?;
            print!("{}", body(study.table.text()));
        }
        Command::RobustnessStudy => {
            let study = studies::robustness_study(&Setup::new(config)?)?;
            print!("{}", body(study.table.text()));
        }
    }
    Ok(())
}

/// Table rows and fit lines, without the configuration echo.
fn body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("#   ") && !l.starts_with("# config"))
        .map(|l| format!("{l}\n"))
        .collect()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
