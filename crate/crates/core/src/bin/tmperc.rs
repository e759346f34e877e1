use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use tmperc::harness::experiments::{analysis_table, analyze, run_dichotomy, run_intervention};
use tmperc::harness::{validate, with_jobs, ExperimentConfig, Format, Table};

#[derive(Parser)]
#[command(
    name = "tmperc",
    version,
    about = "Bootstrap percolation experiments on templated multisection graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print Φ, t* and the assumption report for every sweep point.
    Analytic(Common),
    /// Simulate each sweep point around its critical seed count.
    Dichotomy(Common),
    /// Run intervention sweeps and compare outcomes with the predictions.
    Intervene(Common),
    /// Check the engine and residual formula against brute-force oracles.
    Validate {
        #[arg(long, default_value_t = 500)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `output` or `results`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, short)]
    jobs: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

impl Common {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        let mut config = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config.master_seed = seed;
        }
        Ok(config)
    }

    fn save(&self, config: &ExperimentConfig, tables: &[&Table]) -> anyhow::Result<()> {
        let dir = self
            .out_dir
            .clone()
            .or_else(|| config.output.clone())
            .unwrap_or_else(|| PathBuf::from("results"))
            .join(&config.name);
        let hash = config.hash();
        for table in tables {
            let path = table.save(&dir, self.format, &hash)?;
            eprintln!("wrote {} ({} rows)", path.display(), table.rows.len());
        }
        let resolved = dir.join("config.toml");
        std::fs::write(&resolved, toml::to_string(config)?)
            .with_context(|| resolved.display().to_string())?;
        Ok(())
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Analytic(args) => {
            let config = args.load()?;
            let table = analysis_table(&analyze(&config)?);
            table.write(args.format, &config.hash(), std::io::stdout().lock())?;
        }
        Command::Dichotomy(args) => {
            let config = args.load()?;
            if config.intervention.is_some() {
                bail!(
                    "{} has an [intervention] section; use `tmperc intervene`",
                    args.config.display()
                );
            }
            let out = with_jobs(args.jobs, || run_dichotomy(&config))??;
            args.save(&config, &[&out.runs, &out.summary])?;
        }
        Command::Intervene(args) => {
            let config = args.load()?;
            let out = with_jobs(args.jobs, || run_intervention(&config))??;
            args.save(&config, &[&out.runs, &out.summary])?;
        }
        Command::Validate { instances, seed } => {
            let table = validate::report(instances, seed)?;
            table.write(Format::Csv, "-", std::io::stdout().lock())?;
            let failed = table
                .rows
                .iter()
                .filter(|row| row[3].as_bool() != Some(true))
                .count();
            if failed > 0 {
                bail!("{failed} check(s) failed");
            }
        }
    }
    Ok(())
}
