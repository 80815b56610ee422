//! Small differentiable approximator: a shared MLP trunk with a mean head
//! and a strictly positive variance head, plus exact reverse-mode gradients
//! over the flat parameter vector.
//!
//! The input to the trunk is the data point concatenated with a sinusoidal
//! embedding of t/T. All arithmetic is f64 and fully deterministic: the same
//! parameters and inputs produce bit-identical outputs.

use rand::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::family::Rng;
use crate::special::{sigmoid, softplus};

/// Floor added to the softplus output of the variance head.
pub const VAR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetConfig {
    /// Data dimensionality d.
    pub dim: usize,
    /// Sinusoidal time-embedding width.
    pub time_embed_dim: usize,
    /// Trunk hidden-layer widths.
    pub hidden: Vec<usize>,
}

impl NetConfig {
    pub fn new(dim: usize, time_embed_dim: usize, hidden: Vec<usize>) -> NetConfig {
        NetConfig { dim, time_embed_dim, hidden }
    }

    /// Default toy-scale architecture.
    pub fn default_for_dim(dim: usize) -> NetConfig {
        NetConfig::new(dim, 16, vec![64, 64, 64])
    }

    fn input_width(&self) -> usize {
        self.dim + self.time_embed_dim
    }

    /// (out, in) shapes of every linear layer: trunk, then mean head, then
    /// variance head.
    fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::new();
        let mut prev = self.input_width();
        for &h in &self.hidden {
            shapes.push((h, prev));
            prev = h;
        }
        shapes.push((self.dim, prev)); // mean head
        shapes.push((self.dim, prev)); // variance head
        shapes
    }

    pub fn param_len(&self) -> usize {
        self.layer_shapes().iter().map(|&(o, i)| o * i + o).sum()
    }
}

/// Sinusoidal embedding of t/T at geometrically spaced frequencies.
/// Pure function of (t, t_max, dim).
pub fn time_embedding(t: usize, t_max: usize, dim: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), dim);
    let tau = t as f64 / t_max as f64;
    let pairs = dim / 2;
    for i in 0..pairs {
        let omega = if pairs > 1 {
            1000f64.powf(i as f64 / (pairs - 1) as f64)
        } else {
            1.0
        };
        out[2 * i] = (omega * tau).sin();
        out[2 * i + 1] = (omega * tau).cos();
    }
    if dim % 2 == 1 {
        out[dim - 1] = tau;
    }
}

/// Forward-pass cache of one batch, consumed by [`Approximator::backward`].
pub struct BatchCache {
    batch: usize,
    /// B x input_width
    input: Vec<f64>,
    /// pre-activations of each trunk layer, B x width
    pre: Vec<Vec<f64>>,
    /// post-activations of each trunk layer, B x width
    act: Vec<Vec<f64>>,
    /// B x d
    pub mu: Vec<f64>,
    /// pre-softplus variance head output, B x d
    var_raw: Vec<f64>,
    /// B x d, componentwise >= VAR_FLOOR
    pub var: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Approximator {
    cfg: NetConfig,
    params: Vec<f64>,
}

fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

fn silu_deriv(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

impl Approximator {
    /// All-zero parameters.
    pub fn zeros(cfg: NetConfig) -> Approximator {
        let n = cfg.param_len();
        Approximator { cfg, params: vec![0.0; n] }
    }

    /// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases.
    pub fn init(cfg: NetConfig, seed: u64) -> Approximator {
        let mut rng = Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(cfg.param_len());
        for (out, inp) in cfg.layer_shapes() {
            let a = 1.0 / (inp as f64).sqrt();
            for _ in 0..out * inp {
                let u = ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
                params.push(a * (2.0 * u - 1.0));
            }
            params.extend(std::iter::repeat(0.0).take(out));
        }
        Approximator { cfg, params }
    }

    pub fn from_params(cfg: NetConfig, params: Vec<f64>) -> Result<Approximator> {
        if params.len() != cfg.param_len() {
            return Err(Error::Format(format!(
                "parameter vector length {} does not match architecture ({} expected)",
                params.len(),
                cfg.param_len()
            )));
        }
        Ok(Approximator { cfg, params })
    }

    pub fn config(&self) -> &NetConfig {
        &self.cfg
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Offsets of (weights, biases) for each layer in the flat vector.
    fn layer_offsets(&self) -> Vec<(usize, usize, usize, usize)> {
        // (w_off, b_off, out, in)
        let mut offs = Vec::new();
        let mut cursor = 0;
        for (out, inp) in self.cfg.layer_shapes() {
            offs.push((cursor, cursor + out * inp, out, inp));
            cursor += out * inp + out;
        }
        offs
    }

    /// Evaluate a batch; xs is row-major B x d, ts holds one step index per row.
    pub fn forward_batch(&self, xs: &[f64], ts: &[usize], t_max: usize) -> Result<BatchCache> {
        let d = self.cfg.dim;
        let b = ts.len();
        if xs.len() != b * d {
            return Err(Error::Config(format!(
                "batch shape mismatch: {} values for {} rows of dim {d}",
                xs.len(),
                b
            )));
        }
        if xs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite input to approximator".into()));
        }
        let e = self.cfg.time_embed_dim;
        let n0 = self.cfg.input_width();
        let mut input = vec![0.0; b * n0];
        let mut emb = vec![0.0; e];
        for r in 0..b {
            input[r * n0..r * n0 + d].copy_from_slice(&xs[r * d..(r + 1) * d]);
            time_embedding(ts[r], t_max, e, &mut emb);
            input[r * n0 + d..(r + 1) * n0].copy_from_slice(&emb);
        }

        let offs = self.layer_offsets();
        let n_trunk = self.cfg.hidden.len();
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(n_trunk);
        let mut act: Vec<Vec<f64>> = Vec::with_capacity(n_trunk);
        for l in 0..n_trunk {
            let (w_off, b_off, out, inp) = offs[l];
            let mut z = vec![0.0; b * out];
            {
                let (src, src_w): (&[f64], usize) = if l == 0 {
                    (&input, n0)
                } else {
                    (&act[l - 1], self.cfg.hidden[l - 1])
                };
                self.linear(src, src_w, w_off, b_off, out, inp, b, &mut z);
            }
            let a: Vec<f64> = z.iter().map(|&v| silu(v)).collect();
            pre.push(z);
            act.push(a);
        }
        let top: &[f64] = if n_trunk == 0 { &input } else { act.last().unwrap() };
        let top_w = if n_trunk == 0 { n0 } else { *self.cfg.hidden.last().unwrap() };

        let (wm, bm, _, _) = offs[n_trunk];
        let mut mu = vec![0.0; b * d];
        self.linear(top, top_w, wm, bm, d, top_w, b, &mut mu);

        let (wv, bv, _, _) = offs[n_trunk + 1];
        let mut var_raw = vec![0.0; b * d];
        self.linear(top, top_w, wv, bv, d, top_w, b, &mut var_raw);
        let var: Vec<f64> = var_raw.iter().map(|&v| softplus(v) + VAR_FLOOR).collect();

        Ok(BatchCache { batch: b, input, pre, act, mu, var_raw, var })
    }

    /// Single-point evaluation: returns (mu, var).
    pub fn forward_one(&self, x: &[f64], t: usize, t_max: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let cache = self.forward_batch(x, &[t], t_max)?;
        Ok((cache.mu, cache.var))
    }

    fn linear(
        &self,
        input: &[f64],
        in_w: usize,
        w_off: usize,
        b_off: usize,
        out: usize,
        inp: usize,
        batch: usize,
        dst: &mut [f64],
    ) {
        debug_assert_eq!(in_w, inp);
        let w = &self.params[w_off..w_off + out * inp];
        let bias = &self.params[b_off..b_off + out];
        for r in 0..batch {
            let row = &input[r * inp..(r + 1) * inp];
            let drow = &mut dst[r * out..(r + 1) * out];
            for o in 0..out {
                let wrow = &w[o * inp..(o + 1) * inp];
                let mut acc = bias[o];
                for i in 0..inp {
                    acc += wrow[i] * row[i];
                }
                drow[o] = acc;
            }
        }
    }

    /// Exact reverse-mode gradient of a scalar loss with respect to all
    /// parameters, given upstream gradients d(loss)/d(mu) and d(loss)/d(var)
    /// for every batch element.
    pub fn backward(&self, cache: &BatchCache, d_mu: &[f64], d_var: &[f64]) -> Vec<f64> {
        let d = self.cfg.dim;
        let b = cache.batch;
        debug_assert_eq!(d_mu.len(), b * d);
        debug_assert_eq!(d_var.len(), b * d);

        let offs = self.layer_offsets();
        let n_trunk = self.cfg.hidden.len();
        let n0 = self.cfg.input_width();
        let top_w = if n_trunk == 0 { n0 } else { *self.cfg.hidden.last().unwrap() };
        let top: &[f64] = if n_trunk == 0 { &cache.input } else { cache.act.last().unwrap() };

        let mut grad = vec![0.0; self.params.len()];

        // variance head: chain through softplus
        let d_raw: Vec<f64> = d_var
            .iter()
            .zip(&cache.var_raw)
            .map(|(&g, &z)| g * sigmoid(z))
            .collect();

        let mut d_top = vec![0.0; b * top_w];
        self.linear_backward(&offs[n_trunk], top, top_w, d_mu, d, b, &mut grad, &mut d_top);
        self.linear_backward(&offs[n_trunk + 1], top, top_w, &d_raw, d, b, &mut grad, &mut d_top);

        // trunk, last layer to first
        let mut d_out = d_top;
        for l in (0..n_trunk).rev() {
            let (_, _, out, inp) = offs[l];
            // through SiLU
            let pre = &cache.pre[l];
            for v in 0..b * out {
                d_out[v] *= silu_deriv(pre[v]);
            }
            let below: &[f64] = if l == 0 { &cache.input } else { &cache.act[l - 1] };
            let mut d_below = vec![0.0; b * inp];
            self.linear_backward(&offs[l], below, inp, &d_out, out, b, &mut grad, &mut d_below);
            d_out = d_below;
        }
        grad
    }

    fn linear_backward(
        &self,
        off: &(usize, usize, usize, usize),
        input: &[f64],
        inp_w: usize,
        d_out: &[f64],
        out: usize,
        batch: usize,
        grad: &mut [f64],
        d_input: &mut [f64],
    ) {
        let &(w_off, b_off, out_n, inp) = off;
        debug_assert_eq!(out, out_n);
        debug_assert_eq!(inp_w, inp);
        let w = &self.params[w_off..w_off + out * inp];
        for r in 0..batch {
            let row = &input[r * inp..(r + 1) * inp];
            let dor = &d_out[r * out..(r + 1) * out];
            let dir = &mut d_input[r * inp..(r + 1) * inp];
            for o in 0..out {
                let g = dor[o];
                if g == 0.0 {
                    continue;
                }
                let wrow = &w[o * inp..(o + 1) * inp];
                let gw = &mut grad[w_off + o * inp..w_off + (o + 1) * inp];
                for i in 0..inp {
                    gw[i] += g * row[i];
                    dir[i] += g * wrow[i];
                }
                grad[b_off + o] += g;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> NetConfig {
        NetConfig::new(2, 4, vec![8, 8])
    }

    #[test]
    fn zero_params_known_output() {
        let net = Approximator::zeros(small_cfg());
        let (mu, var) = net.forward_one(&[0.3, -1.2], 17, 100).unwrap();
        let expected_var = softplus(0.0) + VAR_FLOOR;
        for i in 0..2 {
            assert_eq!(mu[i], 0.0);
            assert!((var[i] - expected_var).abs() < 1e-15);
        }
    }

    #[test]
    fn variance_positive_random_nets() {
        let mut worst = f64::INFINITY;
        for seed in 0..20u64 {
            let net = Approximator::init(small_cfg(), seed);
            let mut rng = Rng::seed_from_u64(seed + 1000);
            for _ in 0..500 {
                let x = [
                    4.0 * crate::family::uniform_open01(&mut rng) - 2.0,
                    4.0 * crate::family::uniform_open01(&mut rng) - 2.0,
                ];
                let t = 1 + (rng.next_u64() % 100) as usize;
                let (_, var) = net.forward_one(&x, t, 100).unwrap();
                for v in var {
                    worst = worst.min(v);
                }
            }
        }
        assert!(worst >= VAR_FLOOR);
    }

    #[test]
    fn deterministic_forward() {
        let net = Approximator::init(small_cfg(), 3);
        let a = net.forward_one(&[0.1, 0.2], 5, 50).unwrap();
        let b = net.forward_one(&[0.1, 0.2], 5, 50).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_input_rejected() {
        let net = Approximator::zeros(small_cfg());
        assert!(net.forward_one(&[f64::NAN, 0.0], 1, 10).is_err());
        assert!(net.forward_one(&[f64::INFINITY, 0.0], 1, 10).is_err());
    }

    // Independent straight-line re-evaluation of the same arithmetic.
    fn naive_forward(net: &Approximator, x: &[f64], t: usize, t_max: usize) -> (Vec<f64>, Vec<f64>) {
        let cfg = net.config();
        let mut emb = vec![0.0; cfg.time_embed_dim];
        time_embedding(t, t_max, cfg.time_embed_dim, &mut emb);
        let mut cur: Vec<f64> = x.iter().chain(emb.iter()).copied().collect();
        let p = net.params();
        let mut cursor = 0usize;
        let mut widths = vec![cfg.dim + cfg.time_embed_dim];
        widths.extend(cfg.hidden.iter().copied());
        for l in 0..cfg.hidden.len() {
            let (inp, out) = (widths[l], widths[l + 1]);
            let mut nxt = vec![0.0; out];
            for o in 0..out {
                let mut acc = p[cursor + out * inp + o];
                for i in 0..inp {
                    acc += p[cursor + o * inp + i] * cur[i];
                }
                nxt[o] = acc * sigmoid(acc);
            }
            cursor += out * inp + out;
            cur = nxt;
        }
        let top_w = *widths.last().unwrap();
        let head = |cursor: usize| {
            let mut h = vec![0.0; cfg.dim];
            for o in 0..cfg.dim {
                let mut acc = p[cursor + cfg.dim * top_w + o];
                for i in 0..top_w {
                    acc += p[cursor + o * top_w + i] * cur[i];
                }
                h[o] = acc;
            }
            h
        };
        let mu = head(cursor);
        let raw = head(cursor + cfg.dim * top_w + cfg.dim);
        let var = raw.iter().map(|&r| softplus(r) + VAR_FLOOR).collect();
        (mu, var)
    }

    #[test]
    fn matches_straight_line_reevaluation() {
        let net = Approximator::init(small_cfg(), 99);
        let x = [0.7, -0.4];
        let (mu, var) = net.forward_one(&x, 23, 100).unwrap();
        let (nmu, nvar) = naive_forward(&net, &x, 23, 100);
        for i in 0..2 {
            assert!((mu[i] - nmu[i]).abs() < 1e-12);
            assert!((var[i] - nvar[i]).abs() < 1e-12);
        }
    }

    // scalar test loss: L = mean(mu^2) + mean(var^2)
    fn test_loss(net: &Approximator, xs: &[f64], ts: &[usize], t_max: usize) -> f64 {
        let c = net.forward_batch(xs, ts, t_max).unwrap();
        let n = c.mu.len() as f64;
        let a: f64 = c.mu.iter().map(|m| m * m).sum::<f64>() / n;
        let b: f64 = c.var.iter().map(|v| v * v).sum::<f64>() / n;
        a + b
    }

    #[test]
    fn finite_difference_gradient() {
        let cfg = small_cfg();
        let mut net = Approximator::init(cfg, 7);
        let xs = vec![0.3, -0.8, 1.1, 0.2, -0.5, 0.9];
        let ts = vec![3usize, 40, 77];
        let t_max = 100;

        let cache = net.forward_batch(&xs, &ts, t_max).unwrap();
        let n = cache.mu.len() as f64;
        let d_mu: Vec<f64> = cache.mu.iter().map(|m| 2.0 * m / n).collect();
        let d_var: Vec<f64> = cache.var.iter().map(|v| 2.0 * v / n).collect();
        let grad = net.backward(&cache, &d_mu, &d_var);

        let eps = 1e-5;
        let plen = net.params().len();
        let mut rng = Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 100 {
            let k = (rng.next_u64() as usize) % plen;
            let orig = net.params()[k];
            net.params_mut()[k] = orig + eps;
            let up = test_loss(&net, &xs, &ts, t_max);
            net.params_mut()[k] = orig - eps;
            let dn = test_loss(&net, &xs, &ts, t_max);
            net.params_mut()[k] = orig;
            let fd = (up - dn) / (2.0 * eps);
            let denom = fd.abs().max(grad[k].abs()).max(1e-8);
            assert!(
                (fd - grad[k]).abs() / denom < 1e-4,
                "param {k}: fd {fd} vs analytic {}",
                grad[k]
            );
            checked += 1;
        }
    }

    #[test]
    fn zero_upstream_gradient_gives_zero() {
        let net = Approximator::init(small_cfg(), 1);
        let xs = vec![0.5, 0.5];
        let cache = net.forward_batch(&xs, &[10], 100).unwrap();
        let grad = net.backward(&cache, &[0.0, 0.0], &[0.0, 0.0]);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn duplicated_batch_mean_reduction_golden() {
        // under mean reduction, duplicating the batch leaves the gradient
        // of the mean loss unchanged
        let net = Approximator::init(small_cfg(), 4);
        let xs1 = vec![0.2, -0.9];
        let ts1 = vec![12usize];
        let xs2 = vec![0.2, -0.9, 0.2, -0.9];
        let ts2 = vec![12usize, 12];
        let t_max = 100;

        let grad_of = |xs: &[f64], ts: &[usize]| {
            let c = net.forward_batch(xs, ts, t_max).unwrap();
            let n = c.mu.len() as f64;
            let d_mu: Vec<f64> = c.mu.iter().map(|m| 2.0 * m / n).collect();
            let d_var = vec![0.0; c.var.len()];
            net.backward(&c, &d_mu, &d_var)
        };
        let g1 = grad_of(&xs1, &ts1);
        let g2 = grad_of(&xs2, &ts2);
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn time_embedding_pure_function() {
        let mut a = vec![0.0; 16];
        let mut b = vec![0.0; 16];
        time_embedding(42, 1000, 16, &mut a);
        time_embedding(42, 1000, 16, &mut b);
        assert_eq!(a, b);
        time_embedding(43, 1000, 16, &mut b);
        assert_ne!(a, b);
    }
}
