//! `gpmpc` — run the learned-dynamics control experiments from the command
//! line: collect data, train models, sweep training sizes, fly the closed
//! loop, and render reports.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use gp_core::save_model;
use harness_cli::{
    collect_data, render_summary, run_tracking, steps_csv, sweep_csv, train_subsystems,
    training_sweep, ExperimentConfig, ExperimentSummary, TrackingSummary,
};

#[derive(Parser)]
#[command(
    name = "gpmpc",
    about = "Learned-dynamics receding-horizon control experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML experiment configuration; a preset is used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed every stage of the experiment derives its randomness from.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Preset selector when no config file is given: elliptical | lorenz |
    /// lorenz-paper | paper-noise.
    #[arg(long, global = true)]
    trajectory: Option<String>,

    /// Override the prediction horizon from the config.
    #[arg(long, global = true)]
    horizon: Option<usize>,

    /// Directory reports and datasets are written into.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Verify the run's acceptance assertions and exit nonzero on failure.
    #[arg(long, global = true)]
    check: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Collect transitions with the baseline controller and write datasets.
    Collect,
    /// Collect data and train both subsystem models.
    Train,
    /// Chart training/test MSE and predicted variance over training sizes.
    Sweep,
    /// Run the full hierarchical closed loop and write the step table.
    Track,
    /// Render the summary file of a previous run.
    Report,
}

fn resolve_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut config = match (&cli.config, &cli.trajectory) {
        (Some(path), _) => ExperimentConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        (None, Some(kind)) => ExperimentConfig::preset(kind)?,
        (None, None) => ExperimentConfig::elliptical_paper(),
    };
    if let Some(h) = cli.horizon {
        config.mpc.horizon = h;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    if !matches!(cli.command, Command::Report) {
        std::fs::create_dir_all(&cli.out)
            .with_context(|| format!("creating output directory {}", cli.out.display()))?;
    }
    match cli.command {
        Command::Collect => run_collect(&cli),
        Command::Train => run_train(&cli),
        Command::Sweep => run_sweep(&cli),
        Command::Track => run_track(&cli),
        Command::Report => run_report(&cli),
    }
}

fn run_collect(cli: &Cli) -> anyhow::Result<()> {
    let config = resolve_config(cli)?;
    let started = Instant::now();
    let data = collect_data(&config, config.gp.training_size, cli.seed)?;
    data.translational
        .write_csv(&cli.out.join("translational.csv"))?;
    data.rotational.write_csv(&cli.out.join("rotational.csv"))?;
    let summary = ExperimentSummary {
        command: "collect".into(),
        seed: cli.seed,
        config_toml: config.to_toml_string(),
        translational_hash: data.translational.content_hash(),
        rotational_hash: data.rotational.content_hash(),
        sweep: None,
        tracking: None,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    summary.write(&cli.out.join("summary.json"))?;
    println!(
        "collected {} transitions per subsystem into {}",
        data.translational.len(),
        cli.out.display()
    );
    Ok(())
}

fn run_train(cli: &Cli) -> anyhow::Result<()> {
    let config = resolve_config(cli)?;
    let started = Instant::now();
    let data = collect_data(&config, config.gp.training_size, cli.seed)?;
    let models = train_subsystems(&data, &config.gp, cli.seed ^ 0x517c_c1b7_2722_0a95)?;
    data.translational
        .write_csv(&cli.out.join("translational.csv"))?;
    data.rotational.write_csv(&cli.out.join("rotational.csv"))?;
    save_model(
        &models.translational,
        &cli.out.join("translational_model.json"),
        "translational.csv",
    )?;
    save_model(
        &models.rotational,
        &cli.out.join("rotational_model.json"),
        "rotational.csv",
    )?;
    for (name, model) in [
        ("translational", &models.translational),
        ("rotational (scaled)", &models.rotational),
    ] {
        for (dim, report) in model.reports().iter().enumerate() {
            println!(
                "{name} dim {dim}: log marginal likelihood {:.3}, {}",
                report.log_marginal_likelihood,
                if report.converged {
                    "converged"
                } else {
                    "iteration-capped"
                }
            );
        }
    }
    let summary = ExperimentSummary {
        command: "train".into(),
        seed: cli.seed,
        config_toml: config.to_toml_string(),
        translational_hash: data.translational.content_hash(),
        rotational_hash: data.rotational.content_hash(),
        sweep: None,
        tracking: None,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    summary.write(&cli.out.join("summary.json"))?;
    Ok(())
}

fn default_sizes(count: usize) -> Vec<usize> {
    let mut sizes: Vec<usize> = [10, 50, 100, 189]
        .into_iter()
        .filter(|&s| s <= count)
        .collect();
    if sizes.last() != Some(&count) && count >= 1 {
        sizes.push(count);
    }
    sizes
}

fn run_sweep(cli: &Cli) -> anyhow::Result<()> {
    let config = resolve_config(cli)?;
    let started = Instant::now();
    let data = collect_data(&config, config.gp.training_size, cli.seed)?;
    let sizes = default_sizes(data.translational.len());
    let report = training_sweep(&data, &sizes, &config.gp, cli.seed ^ 0x517c_c1b7_2722_0a95)?;
    std::fs::write(cli.out.join("sweep.csv"), sweep_csv(&report))?;
    let summary = ExperimentSummary {
        command: "sweep".into(),
        seed: cli.seed,
        config_toml: config.to_toml_string(),
        translational_hash: report.translational_hash.clone(),
        rotational_hash: report.rotational_hash.clone(),
        sweep: Some(report.cells.clone()),
        tracking: None,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    summary.write(&cli.out.join("summary.json"))?;
    println!("{}", render_summary(&summary));

    if cli.check {
        let full = *sizes.last().expect("at least one size");
        let smallest = sizes[0];
        for subsystem in ["translational", "rotational"] {
            let cell = |size: usize| {
                report
                    .cells
                    .iter()
                    .find(|c| c.subsystem == subsystem && c.size == size)
                    .expect("cell exists")
            };
            let full_cell = cell(full);
            let small_cell = cell(smallest);
            if full_cell.failed || small_cell.failed {
                bail!("{subsystem}: sweep contains failed cells");
            }
            if full_cell.training_mse != full_cell.test_mse {
                bail!("{subsystem}: full-size training and test MSE differ");
            }
            if full_cell.test_mse > small_cell.test_mse {
                bail!("{subsystem}: test MSE grew from size {smallest} to {full}");
            }
            if full_cell.average_variance > small_cell.average_variance {
                bail!("{subsystem}: predicted variance grew from size {smallest} to {full}");
            }
        }
        println!("sweep checks passed");
    }
    Ok(())
}

fn run_track(cli: &Cli) -> anyhow::Result<()> {
    let config = resolve_config(cli)?;
    let started = Instant::now();
    let (report, _models, data) = run_tracking(&config, cli.seed)?;
    std::fs::write(cli.out.join("steps.csv"), steps_csv(&report))?;
    let summary = ExperimentSummary {
        command: "track".into(),
        seed: cli.seed,
        config_toml: config.to_toml_string(),
        translational_hash: data.translational.content_hash(),
        rotational_hash: data.rotational.content_hash(),
        sweep: None,
        tracking: Some(TrackingSummary::from(&report)),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    summary.write(&cli.out.join("summary.json"))?;
    println!("{}", render_summary(&summary));

    if cli.check {
        if report.input_violations > 0 {
            bail!("{} input-bound violations", report.input_violations);
        }
        if report.failed {
            bail!(
                "fail-safe engaged on {} of {} steps",
                report.failsafe_steps,
                report.steps.len()
            );
        }
        println!("tracking checks passed");
    }
    Ok(())
}

fn run_report(cli: &Cli) -> anyhow::Result<()> {
    let path = cli.out.join("summary.json");
    let summary = ExperimentSummary::read(&path)
        .with_context(|| format!("reading {}", path.display()))?;
    print!("{}", render_summary(&summary));
    Ok(())
}
