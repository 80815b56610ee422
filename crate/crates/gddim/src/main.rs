use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gddim::config::Config;
use gddim::dataset::make_dataset;
use gddim::error::{Error, Result};
use gddim::experiment::{run_experiment, ExperimentSpec};
use gddim::family::Family;
use gddim::io::{fmt_f64, read_points_csv, write_points_csv, Points};
use gddim::metrics::{energy_distance, mode_coverage, sliced_wasserstein, MetricReport};
use gddim::sampler::{sample, MomentSource, SampleMode};
use gddim::schedule::{Schedule, ScheduleKind};
use gddim::trainer::{train, TrainConfig};
use gddim::{AtomicDataDistribution, Checkpoint};

#[derive(Parser)]
#[command(name = "gddim", about = "Generalized denoising diffusion with location-scale noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a mean/variance approximator on a toy dataset.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        schedule: Option<String>,
        #[arg(long = "T")]
        t_max: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        data_n: Option<usize>,
        #[arg(long)]
        stop_grad: Option<bool>,
        /// Loss log CSV path (defaults to <out>.loss.csv).
        #[arg(long)]
        loss_log: Option<PathBuf>,
    },
    /// Generate samples from a checkpoint or an exact-atom oracle.
    Sample {
        #[arg(long, conflicts_with = "oracle_atoms")]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        oracle_atoms: Option<PathBuf>,
        /// Required with --oracle-atoms.
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        schedule: Option<String>,
        #[arg(long = "T")]
        t_max: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value = "mean_var")]
        mode: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate generated samples against a reference point cloud.
    Eval {
        #[arg(long)]
        generated: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 128)]
        n_projections: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Optional centers CSV for mode coverage.
        #[arg(long)]
        centers: Option<PathBuf>,
        #[arg(long, default_value_t = 0.3)]
        radius: f64,
    },
    /// Oracle-driven sampling from a finite-atom data prior.
    Oracle {
        #[arg(long)]
        atoms: PathBuf,
        #[arg(long)]
        family: String,
        #[arg(long, default_value = "linear")]
        schedule: String,
        #[arg(long = "T", default_value_t = 1000)]
        t_max: usize,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 10_000)]
        n_samples: usize,
        #[arg(long, default_value = "mean_var")]
        mode: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train/sample/eval over a family-by-schedule grid.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Comma-separated family tags.
        #[arg(long)]
        families: Option<String>,
        /// Comma-separated schedule tags.
        #[arg(long)]
        schedules: Option<String>,
        #[arg(long = "T")]
        t_max: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        data_n: Option<usize>,
        #[arg(long)]
        eval_n: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        train_seed: Option<u64>,
        #[arg(long)]
        sample_seed: Option<u64>,
        #[arg(long)]
        metric_seed: Option<u64>,
    },
    /// Run the fast invariant suite.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train {
            config,
            out,
            family,
            schedule,
            t_max,
            iterations,
            batch,
            lr,
            seed,
            dataset,
            data_n,
            stop_grad,
            loss_log,
        } => {
            let mut cfg = match config {
                Some(p) => Config::from_file(&p)?,
                None => Config::empty(),
            };
            // flags win over file values
            if let Some(v) = family {
                cfg.set("family", v);
            }
            if let Some(v) = schedule {
                cfg.set("schedule", v);
            }
            if let Some(v) = t_max {
                cfg.set("T", v.to_string());
            }
            if let Some(v) = iterations {
                cfg.set("iterations", v.to_string());
            }
            if let Some(v) = batch {
                cfg.set("batch", v.to_string());
            }
            if let Some(v) = lr {
                cfg.set("lr", v.to_string());
            }
            if let Some(v) = seed {
                cfg.set("seed", v.to_string());
            }
            if let Some(v) = dataset {
                cfg.set("dataset", v);
            }
            if let Some(v) = data_n {
                cfg.set("data_n", v.to_string());
            }
            if let Some(v) = stop_grad {
                cfg.set("stop_grad", v.to_string());
            }

            let train_cfg = train_config_from(&cfg)?;
            let data = make_dataset(&train_cfg.dataset, train_cfg.data_n, train_cfg.seed)?;
            let (ckpt, log) = train(&train_cfg, &data)?;
            ckpt.save(&out)?;

            let log_path = loss_log.unwrap_or_else(|| {
                let mut p = out.as_os_str().to_owned();
                p.push(".loss.csv");
                PathBuf::from(p)
            });
            let mut csv = String::from("iteration,loss_mu,loss_var\n");
            for row in &log {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    row.iteration,
                    fmt_f64(row.loss_mu),
                    fmt_f64(row.loss_var)
                ));
            }
            std::fs::write(&log_path, csv)?;
            println!("wrote checkpoint to {} and loss log to {}", out.display(), log_path.display());
            Ok(ExitCode::SUCCESS)
        }

        Command::Sample {
            checkpoint,
            oracle_atoms,
            family,
            schedule,
            t_max,
            n,
            steps,
            mode,
            seed,
            out,
        } => {
            let mode = SampleMode::parse(&mode)?;
            let batch = match (checkpoint, oracle_atoms) {
                (Some(ckpt_path), None) => {
                    let ckpt = Checkpoint::load(&ckpt_path)?;
                    let sched = Schedule::build(ckpt.schedule_kind, ckpt.t_max)?;
                    let source = MomentSource::Net(&ckpt.net);
                    let d = ckpt.net.config().dim;
                    sample(n, d, &sched, &ckpt.family, &source, mode, steps, seed)?
                }
                (None, Some(atoms_path)) => {
                    let dist = AtomicDataDistribution::from_csv(&atoms_path)?;
                    let fam = Family::parse(&family.ok_or_else(|| {
                        Error::Config("--family is required with --oracle-atoms".into())
                    })?)?;
                    let kind = ScheduleKind::parse(&schedule.unwrap_or_else(|| "linear".into()))?;
                    let sched = Schedule::build(kind, t_max.unwrap_or(1000))?;
                    let source = MomentSource::Oracle(&dist);
                    sample(n, dist.dim(), &sched, &fam, &source, mode, steps, seed)?
                }
                _ => {
                    return Err(Error::Config(
                        "exactly one of --checkpoint or --oracle-atoms is required".into(),
                    ))
                }
            };
            let pts = Points::new(batch.points.clone(), batch.d)?;
            write_points_csv(&out, &pts, &batch.meta.to_pairs())?;
            println!("wrote {} samples to {}", batch.n, out.display());
            Ok(ExitCode::SUCCESS)
        }

        Command::Eval { generated, reference, out, n_projections, seed, centers, radius } => {
            let gen = read_points_csv(&generated)?;
            let reference = read_points_csv(&reference)?;
            if gen.d != reference.d {
                return Err(Error::Config(format!(
                    "dimension mismatch: generated d={} vs reference d={}",
                    gen.d, reference.d
                )));
            }
            let sw = sliced_wasserstein(&gen.data, &reference.data, gen.d, n_projections, seed)?;
            let ed = energy_distance(&gen.data, &reference.data, gen.d)?;
            let coverage = match centers {
                Some(p) => {
                    let c = read_points_csv(&p)?;
                    Some(mode_coverage(&gen.data, gen.d, &c.data, radius)?)
                }
                None => None,
            };
            let report = MetricReport {
                sliced_wasserstein: sw,
                energy_distance: ed,
                mode_coverage: coverage,
                n_generated: gen.n,
                n_reference: reference.n,
                seed,
            };
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::Format(format!("report serialization: {e}")))?;
            std::fs::write(&out, json)?;
            println!("sliced_wasserstein={sw} energy_distance={ed}");
            Ok(ExitCode::SUCCESS)
        }

        Command::Oracle { atoms, family, schedule, t_max, steps, n_samples, mode, seed, out } => {
            let dist = AtomicDataDistribution::from_csv(&atoms)?;
            let fam = Family::parse(&family)?;
            let kind = ScheduleKind::parse(&schedule)?;
            let sched = Schedule::build(kind, t_max)?;
            let mode = SampleMode::parse(&mode)?;
            let source = MomentSource::Oracle(&dist);
            let batch = sample(n_samples, dist.dim(), &sched, &fam, &source, mode, steps, seed)?;
            let pts = Points::new(batch.points.clone(), batch.d)?;
            write_points_csv(&out, &pts, &batch.meta.to_pairs())?;
            println!("wrote {} oracle samples to {}", batch.n, out.display());
            Ok(ExitCode::SUCCESS)
        }

        Command::Experiment {
            config,
            out_dir,
            families,
            schedules,
            t_max,
            steps,
            dataset,
            data_n,
            eval_n,
            iterations,
            batch,
            lr,
            train_seed,
            sample_seed,
            metric_seed,
        } => {
            let mut cfg = match config {
                Some(p) => Config::from_file(&p)?,
                None => Config::empty(),
            };
            if let Some(v) = families {
                cfg.set("families", v);
            }
            if let Some(v) = schedules {
                cfg.set("schedules", v);
            }
            if let Some(v) = t_max {
                cfg.set("T", v.to_string());
            }
            if let Some(v) = steps {
                cfg.set("sample_steps", v.to_string());
            }
            if let Some(v) = dataset {
                cfg.set("dataset", v);
            }
            if let Some(v) = data_n {
                cfg.set("data_n", v.to_string());
            }
            if let Some(v) = eval_n {
                cfg.set("eval_n", v.to_string());
            }
            if let Some(v) = iterations {
                cfg.set("iterations", v.to_string());
            }
            if let Some(v) = batch {
                cfg.set("batch", v.to_string());
            }
            if let Some(v) = lr {
                cfg.set("lr", v.to_string());
            }
            if let Some(v) = train_seed {
                cfg.set("train_seed", v.to_string());
            }
            if let Some(v) = sample_seed {
                cfg.set("sample_seed", v.to_string());
            }
            if let Some(v) = metric_seed {
                cfg.set("metric_seed", v.to_string());
            }

            let mut spec = ExperimentSpec::default_grid(out_dir);
            if let Some(f) = cfg.get("families") {
                let fams: Vec<String> = f.split(',').map(|s| s.trim().to_string()).collect();
                let scheds: Vec<String> = cfg
                    .get_or("schedules", "linear,cosine")
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .collect();
                spec.cells = fams
                    .iter()
                    .flat_map(|f| scheds.iter().map(move |s| (f.clone(), s.clone())))
                    .collect();
            } else if let Some(s) = cfg.get("schedules") {
                let scheds: Vec<String> = s.split(',').map(|x| x.trim().to_string()).collect();
                let mut fams: Vec<String> = Vec::new();
                for (f, _) in &spec.cells {
                    if !fams.contains(f) {
                        fams.push(f.clone());
                    }
                }
                spec.cells = fams
                    .iter()
                    .flat_map(|f| scheds.iter().map(move |s| (f.clone(), s.clone())))
                    .collect();
            }
            spec.t_max = cfg.get_usize("T", spec.t_max)?;
            spec.steps = cfg.get_usize("sample_steps", spec.steps)?;
            spec.dataset = cfg.get_or("dataset", &spec.dataset);
            spec.data_n = cfg.get_usize("data_n", spec.data_n)?;
            spec.eval_n = cfg.get_usize("eval_n", spec.eval_n)?;
            spec.iterations = cfg.get_usize("iterations", spec.iterations)?;
            spec.batch = cfg.get_usize("batch", spec.batch)?;
            spec.lr = cfg.get_f64("lr", spec.lr)?;
            spec.train_seed = cfg.get_u64("train_seed", spec.train_seed)?;
            spec.sample_seed = cfg.get_u64("sample_seed", spec.sample_seed)?;
            spec.metric_seed = cfg.get_u64("metric_seed", spec.metric_seed)?;

            let rows = run_experiment(&spec)?;
            let failures = rows.iter().filter(|r| r.outcome.is_err()).count();
            for row in &rows {
                match &row.outcome {
                    Ok(rep) => println!(
                        "{:<14} {:<7} sw={:.4} ed={:.4}",
                        row.family, row.schedule, rep.sliced_wasserstein, rep.energy_distance
                    ),
                    Err(e) => println!("{:<14} {:<7} ERROR {e}", row.family, row.schedule),
                }
            }
            if failures > 0 {
                eprintln!("{failures} of {} cells failed", rows.len());
                Ok(ExitCode::from(3))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }

        Command::Selftest => {
            let (checks, all) = gddim::selftest::selftest();
            gddim::selftest::print_report(&checks);
            if all {
                println!("selftest: all checks passed");
                Ok(ExitCode::SUCCESS)
            } else {
                Err(Error::Numerical("selftest failed".into()))
            }
        }
    }
}

fn train_config_from(cfg: &Config) -> Result<TrainConfig> {
    let family = Family::parse(&cfg.get_or("family", "gaussian"))?;
    let schedule_kind = ScheduleKind::parse(&cfg.get_or("schedule", "linear"))?;
    let mut tc = TrainConfig::toy_default(family, schedule_kind);
    tc.t_max = cfg.get_usize("T", tc.t_max)?;
    tc.batch = cfg.get_usize("batch", tc.batch)?;
    tc.iterations = cfg.get_usize("iterations", tc.iterations)?;
    tc.lr = cfg.get_f64("lr", tc.lr)?;
    tc.seed = cfg.get_u64("seed", tc.seed)?;
    tc.dataset = cfg.get_or("dataset", &tc.dataset);
    tc.data_n = cfg.get_usize("data_n", tc.data_n)?;
    tc.stop_grad = cfg.get_bool("stop_grad", tc.stop_grad)?;
    Ok(tc)
}
