//! Family-by-schedule grid runner producing a toy-scale comparison table.
//!
//! Each cell trains an approximator, generates samples, and evaluates them
//! against held-out data. Cell failures are recorded in the results table
//! rather than aborting the grid; heavy- or light-tailed families are
//! allowed to diverge and still produce a row.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dataset::{make_dataset, ring8_normalized_centers};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::io::fmt_f64;
use crate::metrics::{energy_distance, mode_coverage, sliced_wasserstein, MetricReport};
use crate::sampler::{sample, MomentSource, SampleMode};
use crate::schedule::{Schedule, ScheduleKind};
use crate::trainer::{train, TrainConfig};

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSpec {
    /// (family tag, schedule tag) cells.
    pub cells: Vec<(String, String)>,
    pub t_max: usize,
    pub steps: usize,
    pub dataset: String,
    /// Training-set size.
    pub data_n: usize,
    /// Generated/reference set size per cell.
    pub eval_n: usize,
    pub iterations: usize,
    pub batch: usize,
    pub lr: f64,
    pub train_seed: u64,
    pub sample_seed: u64,
    pub metric_seed: u64,
    pub n_projections: usize,
    /// Radius for ring8 mode coverage.
    pub coverage_radius: f64,
    #[serde(skip)]
    pub out_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn default_grid(out_dir: PathBuf) -> ExperimentSpec {
        let families = ["gaussian", "laplace", "student_t:3", "gg:1.5", "gg:2.5", "uniform"];
        let schedules = ["linear", "cosine"];
        let cells = families
            .iter()
            .flat_map(|f| schedules.iter().map(move |s| (f.to_string(), s.to_string())))
            .collect();
        ExperimentSpec {
            cells,
            t_max: 1000,
            steps: 100,
            dataset: "ring8".to_string(),
            data_n: 10_000,
            eval_n: 10_000,
            iterations: 20_000,
            batch: 256,
            lr: 1e-3,
            train_seed: 2023,
            sample_seed: 2025,
            metric_seed: 2026,
            n_projections: 128,
            coverage_radius: 0.3,
            out_dir,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() {
            return Err(Error::Config("experiment grid has no cells".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CellRow {
    pub family: String,
    pub schedule: String,
    pub outcome: std::result::Result<MetricReport, String>,
}

fn sanitize(tag: &str) -> String {
    tag.replace([':', '.'], "-")
}

fn run_cell(spec: &ExperimentSpec, family_tag: &str, schedule_tag: &str) -> Result<MetricReport> {
    let family = Family::parse(family_tag)?;
    let schedule_kind = ScheduleKind::parse(schedule_tag)?;
    let mut cfg = TrainConfig::toy_default(family, schedule_kind);
    cfg.t_max = spec.t_max;
    cfg.batch = spec.batch;
    cfg.iterations = spec.iterations;
    cfg.lr = spec.lr;
    cfg.seed = spec.train_seed;
    cfg.dataset = spec.dataset.clone();
    cfg.data_n = spec.data_n;

    let data = make_dataset(&spec.dataset, spec.data_n, spec.train_seed)?;
    let (ckpt, loss_log) = train(&cfg, &data)?;

    let stem = format!("{}_{}", sanitize(family_tag), schedule_tag);
    ckpt.save(&spec.out_dir.join(format!("ckpt_{stem}.bin")))?;
    let mut log_csv = String::from("iteration,loss_mu,loss_var\n");
    for row in &loss_log {
        log_csv.push_str(&format!(
            "{},{},{}\n",
            row.iteration,
            fmt_f64(row.loss_mu),
            fmt_f64(row.loss_var)
        ));
    }
    fs::write(spec.out_dir.join(format!("loss_{stem}.csv")), log_csv)?;

    let sched = Schedule::build(schedule_kind, spec.t_max)?;
    let source = MomentSource::Net(&ckpt.net);
    let batch = sample(
        spec.eval_n,
        data.d,
        &sched,
        &family,
        &source,
        SampleMode::MeanAndVariance,
        spec.steps,
        spec.sample_seed,
    )?;
    crate::io::write_points_csv(
        &spec.out_dir.join(format!("samples_{stem}.csv")),
        &crate::io::Points::new(batch.points.clone(), batch.d)?,
        &batch.meta.to_pairs(),
    )?;

    // held-out reference drawn with an independent seed
    let reference = make_dataset(&spec.dataset, spec.eval_n, spec.train_seed.wrapping_add(1))?;

    let sw = sliced_wasserstein(
        &batch.points,
        &reference.data,
        data.d,
        spec.n_projections,
        spec.metric_seed,
    )?;
    let ed = energy_distance(&batch.points, &reference.data, data.d)?;
    let coverage = if spec.dataset == "ring8" {
        let centers: Vec<f64> = ring8_normalized_centers(spec.data_n, spec.train_seed)
            .into_iter()
            .flatten()
            .collect();
        Some(mode_coverage(&batch.points, data.d, &centers, spec.coverage_radius)?)
    } else {
        None
    };
    Ok(MetricReport {
        sliced_wasserstein: sw,
        energy_distance: ed,
        mode_coverage: coverage,
        n_generated: batch.n,
        n_reference: reference.n,
        seed: spec.metric_seed,
    })
}

/// Run every cell, writing results.csv and manifest.json to the output
/// directory. Returns the per-cell rows; failed cells carry their error.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<CellRow>> {
    spec.validate()?;
    fs::create_dir_all(&spec.out_dir)?;

    let manifest = serde_json::to_string_pretty(spec)
        .map_err(|e| Error::Format(format!("manifest serialization: {e}")))?;
    fs::write(spec.out_dir.join("manifest.json"), manifest)?;

    let mut rows = Vec::new();
    for (family, schedule) in &spec.cells {
        eprintln!("[experiment] cell {family} / {schedule}");
        let outcome = run_cell(spec, family, schedule).map_err(|e| e.to_string());
        rows.push(CellRow { family: family.clone(), schedule: schedule.clone(), outcome });
    }

    let mut csv =
        String::from("family,schedule,status,sliced_wasserstein,energy_distance,mode_coverage\n");
    for row in &rows {
        match &row.outcome {
            Ok(report) => {
                let cov = report
                    .mode_coverage
                    .map(|c| fmt_f64(c))
                    .unwrap_or_else(|| "NA".to_string());
                csv.push_str(&format!(
                    "{},{},ok,{},{},{}\n",
                    row.family,
                    row.schedule,
                    fmt_f64(report.sliced_wasserstein),
                    fmt_f64(report.energy_distance),
                    cov
                ));
            }
            Err(msg) => {
                csv.push_str(&format!(
                    "{},{},error:{},NA,NA,NA\n",
                    row.family,
                    row.schedule,
                    msg.replace([',', '\n'], ";")
                ));
            }
        }
    }
    fs::write(spec.out_dir.join("results.csv"), csv)?;
    Ok(rows)
}

/// Load the SW column of a results.csv produced by `run_experiment`.
pub fn read_results_csv(path: &Path) -> Result<Vec<(String, String, Option<f64>)>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 4 {
            return Err(Error::Format(format!("bad results row '{line}'")));
        }
        let sw = if fields[2] == "ok" { fields[3].parse::<f64>().ok() } else { None };
        out.push((fields[0].to_string(), fields[1].to_string(), sw));
    }
    Ok(out)
}
