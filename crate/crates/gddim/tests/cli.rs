//! End-to-end tests of the command-line interface: artifact round trips,
//! flag/config merging, and the exit-code contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gddim::Checkpoint;

fn gddim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gddim"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("failed to spawn gddim")
}

fn assert_code(out: &Output, expected: i32) {
    let code = out.status.code().unwrap_or(-1);
    assert_eq!(
        code,
        expected,
        "exit code {code} != {expected}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn train_sample_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    // config file provides most settings, flags override two of them
    fs::write(
        p.join("train.cfg"),
        "# toy run\nfamily = laplace\nschedule = cosine\nT = 200\niterations = 300\n\
         batch = 32\ndata_n = 512\ndataset = ring8\nseed = 11\n",
    )
    .unwrap();
    let out = gddim(
        &["train", "--config", "train.cfg", "--out", "m.ckpt", "--family", "gaussian", "--T", "150"],
        p,
    );
    assert_code(&out, 0);

    // flags must have beaten the file values
    let ckpt = Checkpoint::load(&p.join("m.ckpt")).unwrap();
    assert_eq!(ckpt.family.tag(), "gaussian");
    assert_eq!(ckpt.t_max, 150);
    assert!(p.join("m.ckpt.loss.csv").exists());

    let out = gddim(
        &["sample", "--checkpoint", "m.ckpt", "--n", "400", "--steps", "30", "--seed", "5",
          "--out", "gen.csv"],
        p,
    );
    assert_code(&out, 0);

    let out = gddim(
        &["sample", "--checkpoint", "m.ckpt", "--n", "400", "--steps", "30", "--seed", "6",
          "--out", "ref.csv"],
        p,
    );
    assert_code(&out, 0);

    let out = gddim(
        &["eval", "--generated", "gen.csv", "--reference", "ref.csv", "--out", "report.json"],
        p,
    );
    assert_code(&out, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(p.join("report.json")).unwrap()).unwrap();
    assert!(report["sliced_wasserstein"].as_f64().unwrap() >= 0.0);
    assert_eq!(report["n_generated"].as_u64().unwrap(), 400);
}

#[test]
fn sample_rerun_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("atoms.csv"), "0.5,-1.0\n0.5,1.0\n").unwrap();
    let args = ["oracle", "--atoms", "atoms.csv", "--family", "laplace", "--T", "300",
        "--steps", "40", "--n-samples", "200", "--seed", "9", "--out", "a.csv"];
    assert_code(&gddim(&args, p), 0);
    let mut args2 = args;
    args2[args.len() - 1] = "b.csv";
    assert_code(&gddim(&args2, p), 0);
    assert_eq!(fs::read(p.join("a.csv")).unwrap(), fs::read(p.join("b.csv")).unwrap());
}

#[test]
fn oracle_samples_land_on_atoms() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("atoms.csv"), "0.5,-1.0\n0.5,1.0\n").unwrap();
    let out = gddim(
        &["oracle", "--atoms", "atoms.csv", "--family", "gaussian", "--T", "1000",
          "--steps", "100", "--n-samples", "500", "--seed", "3", "--out", "o.csv"],
        p,
    );
    assert_code(&out, 0);
    let pts = gddim::io::read_points_csv(&p.join("o.csv")).unwrap();
    assert_eq!(pts.n, 500);
    let near = pts
        .data
        .iter()
        .filter(|&&x| (x - 1.0).abs().min((x + 1.0).abs()) < 0.05)
        .count();
    assert!(near > 490, "only {near}/500 samples near the atoms");
}

#[test]
fn validation_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    // unknown family tag
    let out = gddim(&["train", "--out", "x.ckpt", "--family", "cauchy", "--iterations", "1"], p);
    assert_code(&out, 1);
    // student-t needs df > 2 for finite variance
    let out =
        gddim(&["train", "--out", "x.ckpt", "--family", "student_t:2", "--iterations", "1"], p);
    assert_code(&out, 1);
    // missing checkpoint file
    let out = gddim(&["sample", "--checkpoint", "nope.ckpt", "--out", "y.csv"], p);
    assert_code(&out, 1);
    // neither checkpoint nor atoms
    let out = gddim(&["sample", "--out", "y.csv"], p);
    assert_code(&out, 1);
}

#[test]
fn numerical_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    // a checkpoint poisoned with non-finite parameters must fail the
    // sampler's moment validation, not silently emit NaN samples
    let cfg = gddim::NetConfig::new(1, 4, vec![8]);
    let net = gddim::Approximator::from_params(cfg.clone(), vec![f64::NAN; cfg.param_len()])
        .unwrap();
    let ckpt = Checkpoint {
        family: gddim::Family::gaussian(),
        schedule_kind: gddim::ScheduleKind::Linear,
        t_max: 100,
        net,
    };
    ckpt.save(&p.join("bad.ckpt")).unwrap();
    let out = gddim(
        &["sample", "--checkpoint", "bad.ckpt", "--n", "10", "--steps", "10", "--out", "y.csv"],
        p,
    );
    assert_code(&out, 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("numerical") || stderr.contains("non-finite"), "stderr: {stderr}");
}

#[test]
fn partial_grid_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    // student_t:2 is rejected per-cell; the gaussian cell still completes
    let out = gddim(
        &["experiment", "--out-dir", "grid", "--families", "gaussian,student_t:2",
          "--schedules", "linear", "--T", "50", "--steps", "10", "--iterations", "20",
          "--batch", "8", "--data-n", "64", "--eval-n", "64"],
        p,
    );
    assert_code(&out, 3);
    let results = fs::read_to_string(p.join("grid/results.csv")).unwrap();
    assert!(results.lines().any(|l| l.starts_with("gaussian,linear,ok,")), "{results}");
    assert!(results.lines().any(|l| l.starts_with("student_t:2,linear,error:")), "{results}");
    assert!(p.join("grid/manifest.json").exists());
}

#[test]
fn selftest_passes_cli() {
    let dir = tempfile::tempdir().unwrap();
    let out = gddim(&["selftest"], dir.path());
    assert_code(&out, 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS"), "{stdout}");
}
