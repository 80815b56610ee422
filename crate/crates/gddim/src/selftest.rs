//! Fast invariant suite behind the `selftest` CLI command.

use rand::{RngCore, SeedableRng};

use crate::family::{standard_normal, uniform_open01, Family, LocScale, Rng};
use crate::net::{Approximator, NetConfig};
use crate::sampler::{reverse_step, MomentSource, SampleMode};
use crate::schedule::{Schedule, ScheduleKind};

pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Run the fast invariant checks. Prints one line per check and returns
/// whether all of them passed.
pub fn selftest() -> (Vec<CheckResult>, bool) {
    let checks = vec![
        moment_round_trips(),
        reverse_step_identity(),
        ddim_equivalence(),
        gradient_spot_check(),
    ];
    let all = checks.iter().all(|c| c.passed);
    (checks, all)
}

pub fn print_report(checks: &[CheckResult]) {
    println!("{:<28} {:<6} detail", "check", "status");
    for c in checks {
        println!(
            "{:<28} {:<6} {}",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.detail
        );
    }
}

fn moment_round_trips() -> CheckResult {
    let mut rng = Rng::seed_from_u64(101);
    let families = ["gaussian", "laplace", "student_t:3", "gg:1.5", "gg:2.5", "uniform"];
    let mut worst = 0.0f64;
    for tag in families {
        let fam = Family::parse(tag).unwrap();
        for _ in 0..200 {
            let p = LocScale {
                loc: 4.0 * uniform_open01(&mut rng) - 2.0,
                scale: 2.0 * uniform_open01(&mut rng) + 1e-3,
            };
            let (m, v) = fam.locscale_to_moments(p);
            let back = fam.moments_to_locscale(m, v).unwrap();
            let rel = ((back.loc - p.loc).abs() / p.loc.abs().max(1.0))
                .max((back.scale - p.scale).abs() / p.scale);
            worst = worst.max(rel);
        }
    }
    CheckResult {
        name: "moment_round_trips",
        passed: worst < 1e-12,
        detail: format!("worst relative error {worst:.3e}"),
    }
}

fn reverse_step_identity() -> CheckResult {
    let mut rng = Rng::seed_from_u64(102);
    let mut worst = 0.0f64;
    for kind in [ScheduleKind::Linear, ScheduleKind::Cosine] {
        let sched = Schedule::build(kind, 1000).unwrap();
        let fam = Family::gaussian();
        for _ in 0..200 {
            let x0 = 2.0 * uniform_open01(&mut rng) - 1.0;
            let z = standard_normal(&mut rng);
            let t = 2 + (rng.next_u64() % 999) as usize;
            let s = (rng.next_u64() % t as u64) as usize;
            let x_t = sched.f(t) * x0 + sched.g(t) * z;
            let (mean, var) = (vec![z], vec![0.0]);
            let src = MomentSource::Constant { mean: &mean, variance: &var };
            let x_s =
                reverse_step(&[x_t], t, s, &sched, &fam, &src, SampleMode::MeanOnly, &mut rng)
                    .unwrap();
            let direct = sched.f(s) * x0 + sched.g(s) * z;
            let rel = (x_s[0] - direct).abs() / direct.abs().max(1.0);
            worst = worst.max(rel);
        }
    }
    CheckResult {
        name: "reverse_step_identity",
        passed: worst < 1e-10,
        detail: format!("worst relative error {worst:.3e}"),
    }
}

fn ddim_equivalence() -> CheckResult {
    let mut rng = Rng::seed_from_u64(103);
    let sched = Schedule::build(ScheduleKind::Linear, 1000).unwrap();
    let fam = Family::gaussian();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let t = 2 + (rng.next_u64() % 998) as usize;
        let s = (rng.next_u64() % t as u64) as usize;
        let x_t = standard_normal(&mut rng);
        let eps_hat = standard_normal(&mut rng);
        let ab_t = sched.alpha_bar(t);
        let ab_s = sched.alpha_bar(s);
        let x0_hat = (x_t - (1.0 - ab_t).sqrt() * eps_hat) / ab_t.sqrt();
        let ddim = ab_s.sqrt() * x0_hat + (1.0 - ab_s).sqrt() * eps_hat;
        let (mean, var) = (vec![eps_hat], vec![0.0]);
        let src = MomentSource::Constant { mean: &mean, variance: &var };
        let ours = reverse_step(&[x_t], t, s, &sched, &fam, &src, SampleMode::MeanOnly, &mut rng)
            .unwrap();
        worst = worst.max((ours[0] - ddim).abs());
    }
    CheckResult {
        name: "ddim_equivalence",
        passed: worst < 1e-10,
        detail: format!("worst absolute error {worst:.3e}"),
    }
}

fn gradient_spot_check() -> CheckResult {
    let cfg = NetConfig::new(2, 4, vec![8, 8]);
    let mut net = Approximator::init(cfg, 17);
    let xs = vec![0.3, -0.8, 1.1, 0.2];
    let ts = vec![3usize, 40];
    let t_max = 100;

    let loss = |net: &Approximator| {
        let c = net.forward_batch(&xs, &ts, t_max).unwrap();
        let n = c.mu.len() as f64;
        (c.mu.iter().map(|m| m * m).sum::<f64>()
            + c.var.iter().map(|v| v * v).sum::<f64>())
            / n
    };
    let cache = net.forward_batch(&xs, &ts, t_max).unwrap();
    let n = cache.mu.len() as f64;
    let d_mu: Vec<f64> = cache.mu.iter().map(|m| 2.0 * m / n).collect();
    let d_var: Vec<f64> = cache.var.iter().map(|v| 2.0 * v / n).collect();
    let grad = net.backward(&cache, &d_mu, &d_var);

    let mut rng = Rng::seed_from_u64(18);
    let eps = 1e-5;
    let plen = net.params().len();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let k = (rng.next_u64() as usize) % plen;
        let orig = net.params()[k];
        net.params_mut()[k] = orig + eps;
        let up = loss(&net);
        net.params_mut()[k] = orig - eps;
        let dn = loss(&net);
        net.params_mut()[k] = orig;
        let fd = (up - dn) / (2.0 * eps);
        let denom = fd.abs().max(grad[k].abs()).max(1e-8);
        worst = worst.max((fd - grad[k]).abs() / denom);
    }
    CheckResult {
        name: "gradient_spot_check",
        passed: worst < 1e-4,
        detail: format!("worst relative error {worst:.3e}"),
    }
}
