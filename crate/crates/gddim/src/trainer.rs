//! Monte-Carlo method-of-moments training of the mean/variance approximator.
//!
//! Two squared losses are minimized jointly with equal weights: the mean
//! head regresses the forward noise z, and the variance head regresses the
//! squared residual (z - sg[mu])^2, with the residual treated as a constant
//! (stop-gradient) by default so the variance objective only trains the
//! variance parameters.

use rand::{RngCore, SeedableRng};

use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::family::{Family, Rng};
use crate::io::Points;
use crate::net::{Approximator, NetConfig};
use crate::schedule::{Schedule, ScheduleKind};

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub family: Family,
    pub schedule_kind: ScheduleKind,
    pub t_max: usize,
    pub batch: usize,
    pub iterations: usize,
    pub lr: f64,
    pub seed: u64,
    pub dataset: String,
    pub data_n: usize,
    pub stop_grad: bool,
    pub hidden: Vec<usize>,
    pub time_embed_dim: usize,
}

impl TrainConfig {
    pub fn toy_default(family: Family, schedule_kind: ScheduleKind) -> TrainConfig {
        TrainConfig {
            family,
            schedule_kind,
            t_max: 1000,
            batch: 256,
            iterations: 20_000,
            lr: 1e-3,
            seed: 0,
            dataset: "ring8".to_string(),
            data_n: 10_000,
            stop_grad: true,
            hidden: vec![64, 64, 64],
            time_embed_dim: 16,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch < 2 {
            return Err(Error::Config(format!("batch size must be >= 2, got {}", self.batch)));
        }
        if !(self.lr > 0.0) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        Ok(())
    }
}

/// One row of the training loss log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRow {
    pub iteration: usize,
    pub loss_mu: f64,
    pub loss_var: f64,
}

/// Corrupt x0 to step t: x_t = f(t) x0 + g(t) z with fresh standardized z
/// per dimension. Returns both x_t and the noise draw.
pub fn forward_corrupt(
    x0: &[f64],
    t: usize,
    sched: &Schedule,
    family: &Family,
    rng: &mut Rng,
) -> (Vec<f64>, Vec<f64>) {
    let f = sched.f(t);
    let g = sched.g(t);
    let z: Vec<f64> = (0..x0.len()).map(|_| family.draw_standard(rng)).collect();
    let x_t: Vec<f64> = x0.iter().zip(&z).map(|(&x, &zi)| f * x + g * zi).collect();
    (x_t, z)
}

/// Evaluate the two moment-matching losses on a batch of data points,
/// drawing t uniformly from {1..T} per example. No gradients.
pub fn mom_loss(
    net: &Approximator,
    batch: &[f64],
    d: usize,
    sched: &Schedule,
    family: &Family,
    rng: &mut Rng,
) -> Result<(f64, f64)> {
    let b = batch.len() / d;
    if b == 0 {
        return Err(Error::Config("mom_loss needs a nonempty batch".into()));
    }
    let mut xs = Vec::with_capacity(b * d);
    let mut zs = Vec::with_capacity(b * d);
    let mut ts = Vec::with_capacity(b);
    for r in 0..b {
        let t = 1 + (rng.next_u64() % sched.t_max() as u64) as usize;
        let (x_t, z) = forward_corrupt(&batch[r * d..(r + 1) * d], t, sched, family, rng);
        xs.extend(x_t);
        zs.extend(z);
        ts.push(t);
    }
    let cache = net.forward_batch(&xs, &ts, sched.t_max())?;
    let n = (b * d) as f64;
    let mut loss_mu = 0.0;
    let mut loss_var = 0.0;
    for i in 0..b * d {
        let r = zs[i] - cache.mu[i];
        loss_mu += r * r;
        let dv = r * r - cache.var[i];
        loss_var += dv * dv;
    }
    Ok((loss_mu / n, loss_var / n))
}

/// Train an approximator on a dataset with Adam (beta1 = 0.9, beta2 = 0.999,
/// eps = 1e-8). Fully reproducible given cfg.seed.
pub fn train(cfg: &TrainConfig, data: &Points) -> Result<(Checkpoint, Vec<LossRow>)> {
    cfg.validate()?;
    if data.n == 0 {
        return Err(Error::Config("empty dataset".into()));
    }
    let sched = Schedule::build(cfg.schedule_kind, cfg.t_max)?;
    let d = data.d;
    let net_cfg = NetConfig::new(d, cfg.time_embed_dim, cfg.hidden.clone());
    let mut net = Approximator::init(net_cfg, cfg.seed);

    let mut rng = Rng::seed_from_u64(cfg.seed);
    rng.set_stream(0x7261696e); // training stream, distinct from init

    let plen = net.params().len();
    let mut adam_m = vec![0.0; plen];
    let mut adam_v = vec![0.0; plen];
    let (beta1, beta2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);

    let b = cfg.batch;
    let mut log = Vec::new();
    let mut xs = vec![0.0; b * d];
    let mut zs = vec![0.0; b * d];
    let mut ts = vec![0usize; b];

    for iter in 0..cfg.iterations {
        for r in 0..b {
            let row = data.row((rng.next_u64() % data.n as u64) as usize);
            let t = 1 + (rng.next_u64() % cfg.t_max as u64) as usize;
            ts[r] = t;
            let f = sched.f(t);
            let g = sched.g(t);
            for i in 0..d {
                let z = cfg.family.draw_standard(&mut rng);
                zs[r * d + i] = z;
                xs[r * d + i] = f * row[i] + g * z;
            }
        }
        let cache = net.forward_batch(&xs, &ts, cfg.t_max)?;
        let n = (b * d) as f64;
        let mut loss_mu = 0.0;
        let mut loss_var = 0.0;
        let mut d_mu = vec![0.0; b * d];
        let mut d_var = vec![0.0; b * d];
        for i in 0..b * d {
            let r = zs[i] - cache.mu[i];
            loss_mu += r * r;
            d_mu[i] = -2.0 * r / n;
            let dv = r * r - cache.var[i];
            loss_var += dv * dv;
            d_var[i] = -2.0 * dv / n;
            if !cfg.stop_grad {
                d_mu[i] += -4.0 * r * dv / n;
            }
        }
        loss_mu /= n;
        loss_var /= n;
        if !loss_mu.is_finite() || !loss_var.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite loss at iteration {iter}: loss_mu={loss_mu}, loss_var={loss_var}"
            )));
        }
        if iter % 100 == 0 || iter + 1 == cfg.iterations {
            log.push(LossRow { iteration: iter, loss_mu, loss_var });
        }

        let grad = net.backward(&cache, &d_mu, &d_var);
        let step = (iter + 1) as f64;
        let bc1 = 1.0 - beta1.powf(step);
        let bc2 = 1.0 - beta2.powf(step);
        let params = net.params_mut();
        for k in 0..plen {
            adam_m[k] = beta1 * adam_m[k] + (1.0 - beta1) * grad[k];
            adam_v[k] = beta2 * adam_v[k] + (1.0 - beta2) * grad[k] * grad[k];
            let mhat = adam_m[k] / bc1;
            let vhat = adam_v[k] / bc2;
            params[k] -= cfg.lr * mhat / (vhat.sqrt() + eps);
        }
    }

    let ckpt = Checkpoint {
        family: cfg.family,
        schedule_kind: cfg.schedule_kind,
        t_max: cfg.t_max,
        net,
    };
    Ok((ckpt, log))
}
