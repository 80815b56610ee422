//! Toy 2D datasets used in place of image data, plus CSV-backed datasets.
//!
//! Built-in sets are normalized to zero mean and unit per-dimension variance
//! by construction; CSV input is returned as stored in the file.

use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::family::{standard_normal, uniform_open01, Rng};
use crate::io::{read_points_csv, Points};

/// Centers of the ring8 mixture before normalization: radius 2, equally
/// spaced angles.
pub fn ring8_raw_centers() -> Vec<[f64; 2]> {
    (0..8)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / 8.0;
            [2.0 * theta.cos(), 2.0 * theta.sin()]
        })
        .collect()
}

/// ring8 centers mapped through the same normalization applied to a
/// generated dataset of the given seed/size.
pub fn ring8_normalized_centers(n: usize, seed: u64) -> Vec<[f64; 2]> {
    let raw = make_raw(DatasetName::Ring8, n, seed);
    let stats = Stats::of(&raw, 2);
    ring8_raw_centers()
        .iter()
        .map(|c| [(c[0] - stats.mean[0]) / stats.std[0], (c[1] - stats.mean[1]) / stats.std[1]])
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DatasetName {
    Ring8,
    TwoMoons,
    Checkerboard,
}

struct Stats {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Stats {
    fn of(data: &[f64], d: usize) -> Stats {
        let n = data.len() / d;
        let mut mean = vec![0.0; d];
        for row in data.chunks(d) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut var = vec![0.0; d];
        for row in data.chunks(d) {
            for i in 0..d {
                let c = row[i] - mean[i];
                var[i] += c * c;
            }
        }
        let std = var.iter().map(|v| (v / n as f64).sqrt()).collect();
        Stats { mean, std }
    }
}

fn make_raw(name: DatasetName, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * 2);
    match name {
        DatasetName::Ring8 => {
            let centers = ring8_raw_centers();
            for _ in 0..n {
                let k = (uniform_open01(&mut rng) * 8.0) as usize % 8;
                data.push(centers[k][0] + 0.1 * standard_normal(&mut rng));
                data.push(centers[k][1] + 0.1 * standard_normal(&mut rng));
            }
        }
        DatasetName::TwoMoons => {
            for _ in 0..n {
                let theta = std::f64::consts::PI * uniform_open01(&mut rng);
                let (x, y) = if uniform_open01(&mut rng) < 0.5 {
                    (theta.cos(), theta.sin())
                } else {
                    (1.0 - theta.cos(), 0.5 - theta.sin())
                };
                data.push(x + 0.05 * standard_normal(&mut rng));
                data.push(y + 0.05 * standard_normal(&mut rng));
            }
        }
        DatasetName::Checkerboard => {
            for _ in 0..n {
                let x = 4.0 * uniform_open01(&mut rng) - 2.0;
                let shift = if uniform_open01(&mut rng) < 0.5 { 0.0 } else { -2.0 };
                let y = uniform_open01(&mut rng) + shift + (x.floor().rem_euclid(2.0));
                data.push(x);
                data.push(y);
            }
        }
    }
    data
}

/// Build a named dataset: ring8 | two_moons | checkerboard | from_csv:<path>.
pub fn make_dataset(name: &str, n: usize, seed: u64) -> Result<Points> {
    if let Some(path) = name.strip_prefix("from_csv:") {
        return read_points_csv(std::path::Path::new(path));
    }
    let which = match name {
        "ring8" => DatasetName::Ring8,
        "two_moons" => DatasetName::TwoMoons,
        "checkerboard" => DatasetName::Checkerboard,
        _ => {
            return Err(Error::Config(format!(
                "unknown dataset '{name}' (expected ring8 | two_moons | checkerboard | from_csv:<path>)"
            )))
        }
    };
    if n == 0 {
        return Err(Error::Config("dataset size must be positive".into()));
    }
    let mut data = make_raw(which, n, seed);
    let stats = Stats::of(&data, 2);
    for row in data.chunks_mut(2) {
        for i in 0..2 {
            row[i] = (row[i] - stats.mean[i]) / stats.std[i];
        }
    }
    Points::new(data, 2)
}
