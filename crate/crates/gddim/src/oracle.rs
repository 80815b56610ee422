//! Exact posterior moments E[z|x_t] and Var[z|x_t] for finite-atom data
//! priors.
//!
//! Given atoms a with weights w, the noise z is deterministic once (x_t, a)
//! is fixed: z_a = (x_t - f(t) a) / g(t). The posterior over atoms is a
//! finite mixture, so the conditional moments are plain weighted sums with
//! no quadrature anywhere in the implementation path.

use std::path::Path;

use crate::error::{Error, Result};
use crate::family::Family;
use crate::io::read_points_csv;
use crate::schedule::Schedule;

#[derive(Debug, Clone, PartialEq)]
pub struct AtomicDataDistribution {
    /// Row-major n_atoms x dim.
    atoms: Vec<f64>,
    dim: usize,
    /// Normalized to sum to 1.
    weights: Vec<f64>,
}

/// Posterior over atoms at a probe point.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub weights: Vec<f64>,
    /// True when every atom had zero likelihood (support miss under a
    /// bounded family) and a uniform fallback was returned.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMoments {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl AtomicDataDistribution {
    pub fn new(atoms: Vec<f64>, dim: usize, weights: Vec<f64>) -> Result<AtomicDataDistribution> {
        if dim == 0 || atoms.is_empty() || atoms.len() % dim != 0 {
            return Err(Error::InvalidParameter(format!(
                "atom matrix of length {} incompatible with dim {dim}",
                atoms.len()
            )));
        }
        let n = atoms.len() / dim;
        if weights.len() != n {
            return Err(Error::InvalidParameter(format!(
                "{} weights for {n} atoms",
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter("atom weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter("atom weights sum to zero".into()));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(AtomicDataDistribution { atoms, dim, weights })
    }

    /// Equal-weight atoms.
    pub fn uniform(atoms: Vec<f64>, dim: usize) -> Result<AtomicDataDistribution> {
        let n = atoms.len() / dim.max(1);
        AtomicDataDistribution::new(atoms, dim, vec![1.0; n])
    }

    /// The canonical 1D two-atom benchmark {-1: 0.5, +1: 0.5}.
    pub fn two_atoms() -> AtomicDataDistribution {
        AtomicDataDistribution::new(vec![-1.0, 1.0], 1, vec![0.5, 0.5]).unwrap()
    }

    /// Load atoms from CSV. Each row is `weight, coord_1, ..., coord_d`.
    pub fn from_csv(path: &Path) -> Result<AtomicDataDistribution> {
        let pts = read_points_csv(path)?;
        if pts.d < 2 {
            return Err(Error::Format(format!(
                "{}: atom rows need a weight column plus at least one coordinate",
                path.display()
            )));
        }
        let dim = pts.d - 1;
        let mut atoms = Vec::with_capacity(pts.n * dim);
        let mut weights = Vec::with_capacity(pts.n);
        for i in 0..pts.n {
            let row = pts.row(i);
            weights.push(row[0]);
            atoms.extend_from_slice(&row[1..]);
        }
        AtomicDataDistribution::new(atoms, dim, weights)
    }

    pub fn n_atoms(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.atoms[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Posterior over atoms given x_t at step t.
    pub fn posterior_over_atoms(
        &self,
        x_t: &[f64],
        t: usize,
        sched: &Schedule,
        family: &Family,
    ) -> Result<Posterior> {
        let g = sched.g(t);
        if g == 0.0 {
            return Err(Error::Numerical(format!("degenerate time t={t}: g(t) = 0")));
        }
        let f = sched.f(t);
        let n = self.n_atoms();
        let mut logw = Vec::with_capacity(n);
        for a in 0..n 	{
            let atom = self.atom(a);
            let mut lw = self.weights[a].ln();
            for i in 0..self.dim {
                lw += family.log_pdf((x_t[i] - f * atom[i]) / g);
            }
            logw.push(lw);
        }
        let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            // total support miss: flagged uniform fallback, never NaN
            return Ok(Posterior {
                weights: vec![1.0 / n as f64; n],
                degenerate: true,
            });
        }
        let mut weights: Vec<f64> = logw.iter().map(|&lw| (lw - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok(Posterior { weights, degenerate: false })
    }

    /// Exact conditional mean and per-dimension variance of z given x_t.
    pub fn oracle_moments(
        &self,
        x_t: &[f64],
        t: usize,
        sched: &Schedule,
        family: &Family,
    ) -> Result<PosteriorMoments> {
        let post = self.posterior_over_atoms(x_t, t, sched, family)?;
        let f = sched.f(t);
        let g = sched.g(t);
        let mut mean = vec![0.0; self.dim];
        let mut second = vec![0.0; self.dim];
        for a in 0..self.n_atoms() {
            let atom = self.atom(a);
            let w = post.weights[a];
            for i in 0..self.dim {
                let z = (x_t[i] - f * atom[i]) / g;
                mean[i] += w * z;
                second[i] += w * z * z;
            }
        }
        let variance = second
            .iter()
            .zip(&mean)
            .map(|(&s, &m)| (s - m * m).max(0.0))
            .collect();
        Ok(PosteriorMoments { mean, variance })
    }
}
