//! Discrete noise schedules and the coefficient functions of the forward
//! and reverse recurrences.
//!
//! A schedule stores the cumulative retention sequence alpha_bar with
//! alpha_bar[0] = 1 and alpha_bar strictly decreasing. The data scale is
//! f(t) = sqrt(alpha_bar[t]) and the noise scale g(t) = sqrt(1 - alpha_bar[t]),
//! so f^2 + g^2 = 1 at every step.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Linear,
    Cosine,
}

impl ScheduleKind {
    pub fn parse(tag: &str) -> Result<ScheduleKind> {
        match tag {
            "linear" => Ok(ScheduleKind::Linear),
            "cosine" => Ok(ScheduleKind::Cosine),
            _ => Err(Error::InvalidParameter(format!(
                "unknown schedule '{tag}' (expected linear | cosine)"
            ))),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            ScheduleKind::Linear => "linear",
            ScheduleKind::Cosine => "cosine",
        }
    }
}

/// Coefficients of a reverse jump t -> s:
/// x_s = f_bar * x_t + g_bar * z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCoeffs {
    /// f(s) / f(t)
    pub f_bar: f64,
    /// g(s) - f(s) g(t) / f(t)
    pub g_bar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    kind: ScheduleKind,
    t_max: usize,
    /// alpha_bar[t] for t = 0..=T, alpha_bar[0] = 1.
    alpha_bar: Vec<f64>,
}

impl Schedule {
    /// Build a schedule of T steps.
    ///
    /// Linear: per-step variances beta_t linearly spaced over [1e-4, 0.02]
    /// scaled by 1000/T (clamped below 1 so alpha_t stays positive at small T).
    /// Cosine: squared-cosine alpha_bar with offset 0.008, per-step alpha_t
    /// clipped to at least 0.001.
    pub fn build(kind: ScheduleKind, t_max: usize) -> Result<Schedule> {
        if t_max < 2 {
            return Err(Error::Config(format!("schedule requires T >= 2, got {t_max}")));
        }
        let mut alpha_bar = Vec::with_capacity(t_max + 1);
        alpha_bar.push(1.0);
        match kind {
            ScheduleKind::Linear => {
                let scale = 1000.0 / t_max as f64;
                let (beta_lo, beta_hi) = (1e-4, 0.02);
                for t in 1..=t_max {
                    let frac = (t - 1) as f64 / (t_max - 1) as f64;
                    let beta = ((beta_lo + frac * (beta_hi - beta_lo)) * scale).min(0.999);
                    alpha_bar.push(alpha_bar[t - 1] * (1.0 - beta));
                }
            }
            ScheduleKind::Cosine => {
                let raw = |t: f64| {
                    let arg = ((t / t_max as f64 + 0.008) / 1.008) * PI / 2.0;
                    arg.cos().powi(2)
                };
                let norm = raw(0.0);
                for t in 1..=t_max {
                    let ratio = (raw(t as f64) / norm) / (raw((t - 1) as f64) / norm);
                    let alpha = ratio.max(0.001);
                    alpha_bar.push(alpha_bar[t - 1] * alpha);
                }
            }
        }
        let sched = Schedule { kind, t_max, alpha_bar };
        for t in 1..=t_max {
            if !(sched.alpha_bar[t] < sched.alpha_bar[t - 1]) {
                return Err(Error::Numerical(format!(
                    "alpha_bar not strictly decreasing at t={t}"
                )));
            }
        }
        if !(sched.alpha_bar[t_max] > 0.0 && sched.alpha_bar[t_max] < 1e-3) {
            return Err(Error::Numerical(format!(
                "terminal alpha_bar {} outside (0, 1e-3)",
                sched.alpha_bar[t_max]
            )));
        }
        Ok(sched)
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bar[t]
    }

    /// Data scale f(t) = sqrt(alpha_bar[t]).
    pub fn f(&self, t: usize) -> f64 {
        self.alpha_bar[t].sqrt()
    }

    /// Noise scale g(t) = sqrt(1 - alpha_bar[t]).
    pub fn g(&self, t: usize) -> f64 {
        (1.0 - self.alpha_bar[t]).sqrt()
    }

    /// Coefficients for the jump t -> s, s <= t. Multi-step jumps (s < t-1)
    /// are valid; the recurrence holds for any pair.
    pub fn coeffs(&self, t: usize, s: usize) -> Result<StepCoeffs> {
        if s > t || t > self.t_max {
            return Err(Error::Config(format!(
                "coeffs requires s <= t <= T, got t={t}, s={s}, T={}",
                self.t_max
            )));
        }
        let ft = self.f(t);
        if ft == 0.0 {
            return Err(Error::Numerical(format!("degenerate schedule: f({t}) = 0")));
        }
        let f_bar = self.f(s) / ft;
        let g_bar = self.g(s) - self.f(s) * self.g(t) / ft;
        Ok(StepCoeffs { f_bar, g_bar })
    }
}

/// Evenly spaced (rounded) strictly decreasing index sequence from T to 0.
pub fn subsample_steps(t_max: usize, n_steps: usize) -> Result<Vec<usize>> {
    if n_steps < 1 || n_steps > t_max {
        return Err(Error::Config(format!(
            "need 1 <= n_steps <= T, got n_steps={n_steps}, T={t_max}"
        )));
    }
    let mut out = Vec::with_capacity(n_steps + 1);
    for k in 0..=n_steps {
        let idx = (t_max as f64 * (n_steps - k) as f64 / n_steps as f64).round() as usize;
        out.push(idx);
    }
    for w in out.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::Config(format!(
                "subsample_steps produced non-decreasing pair {} -> {}",
                w[0], w[1]
            )));
        }
    }
    Ok(out)
}
