//! Distribution distances between generated and reference point clouds.

use rand::{RngCore, SeedableRng};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{standard_normal, Rng};

#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub sliced_wasserstein: f64,
    pub energy_distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode_coverage: Option<f64>,
    pub n_generated: usize,
    pub n_reference: usize,
    pub seed: u64,
}

/// Average over random unit projections of the 1D 2-Wasserstein distance
/// between the projected samples. Unequal sizes are handled by subsampling
/// the larger set with the metric seed, so the value is symmetric in its
/// arguments given the same seed.
pub fn sliced_wasserstein(
    a: &[f64],
    b: &[f64],
    d: usize,
    n_projections: usize,
    seed: u64,
) -> Result<f64> {
    let (na, nb) = (a.len() / d, b.len() / d);
    if na < 2 || nb < 2 {
        return Err(Error::Config("sliced_wasserstein needs at least 2 points per set".into()));
    }
    if n_projections == 0 {
        return Err(Error::Config("need at least one projection".into()));
    }
    let mut rng = Rng::seed_from_u64(seed);
    let m = na.min(nb);
    // subsample the larger set; drawing depends only on sizes, not order
    let idx_a = subsample_indices(&mut rng, na, m);
    let idx_b = subsample_indices(&mut rng, nb, m);

    let mut total = 0.0;
    let mut pa = vec![0.0; m];
    let mut pb = vec![0.0; m];
    for _ in 0..n_projections {
        let mut dir = vec![0.0; d];
        loop {
            let mut norm = 0.0;
            for v in dir.iter_mut() {
                *v = standard_normal(&mut rng);
                norm += *v * *v;
            }
            if norm > 1e-24 {
                let norm = norm.sqrt();
                for v in dir.iter_mut() {
                    *v /= norm;
                }
                break;
            }
        }
        project(a, d, &idx_a, &dir, &mut pa);
        project(b, d, &idx_b, &dir, &mut pb);
        pa.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pb.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for i in 0..m {
            let diff = pa[i] - pb[i];
            total += diff * diff;
        }
    }
    Ok((total / (n_projections * m) as f64).sqrt())
}

fn subsample_indices(rng: &mut Rng, n: usize, m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    if m < n {
        // partial Fisher-Yates
        for i in 0..m {
            let j = i + (rng.next_u64() as usize) % (n - i);
            idx.swap(i, j);
        }
        idx.truncate(m);
    }
    idx
}

fn project(pts: &[f64], d: usize, idx: &[usize], dir: &[f64], out: &mut [f64]) {
    for (o, &i) in out.iter_mut().zip(idx) {
        let row = &pts[i * d..(i + 1) * d];
        *o = row.iter().zip(dir).map(|(x, w)| x * w).sum();
    }
}

/// Energy distance in V-statistic form: 2 E||a-b|| - E||a-a'|| - E||b-b'||
/// over all pairs.
pub fn energy_distance(a: &[f64], b: &[f64], d: usize) -> Result<f64> {
    let (na, nb) = (a.len() / d, b.len() / d);
    if na == 0 || nb == 0 {
        return Err(Error::Config("energy_distance needs nonempty sets".into()));
    }
    let cross = mean_cross_distance(a, na, b, nb, d);
    let within_a = mean_within_distance(a, na, d);
    let within_b = mean_within_distance(b, nb, d);
    Ok(2.0 * cross - within_a - within_b)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn mean_cross_distance(a: &[f64], na: usize, b: &[f64], nb: usize, d: usize) -> f64 {
    let mut total = 0.0;
    for i in 0..na {
        let ra = &a[i * d..(i + 1) * d];
        for j in 0..nb {
            total += dist(ra, &b[j * d..(j + 1) * d]);
        }
    }
    total / (na * nb) as f64
}

fn mean_within_distance(a: &[f64], n: usize, d: usize) -> f64 {
    let mut total = 0.0;
    for i in 0..n {
        let ri = &a[i * d..(i + 1) * d];
        for j in i + 1..n {
            total += dist(ri, &a[j * d..(j + 1) * d]);
        }
    }
    // V-statistic over all ordered pairs; the diagonal contributes zero
    2.0 * total / (n * n) as f64
}

/// Fraction of centers having at least one generated point within radius.
pub fn mode_coverage(points: &[f64], d: usize, centers: &[f64], radius: f64) -> Result<f64> {
    if centers.is_empty() || centers.len() % d != 0 {
        return Err(Error::Config("centers must be nonempty with matching dim".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::Config("radius must be positive".into()));
    }
    let nc = centers.len() / d;
    let n = points.len() / d;
    let mut covered = 0usize;
    for c in 0..nc {
        let center = &centers[c * d..(c + 1) * d];
        for i in 0..n {
            if dist(center, &points[i * d..(i + 1) * d]) <= radius {
                covered += 1;
                break;
            }
        }
    }
    Ok(covered as f64 / nc as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(seed: u64, n: usize, shift: f64) -> Vec<f64> {
        let mut rng = Rng::seed_from_u64(seed);
        (0..2 * n).map(|_| standard_normal(&mut rng) + shift).collect()
    }

    #[test]
    fn sw_identical_sets_zero() {
        let a = cloud(1, 500, 0.0);
        let v = sliced_wasserstein(&a, &a, 2, 32, 7).unwrap();
        assert!(v < 1e-12, "{v}");
    }

    #[test]
    fn sw_separation_monotone() {
        let a = cloud(1, 2000, 0.0);
        let b = cloud(2, 2000, 0.0);
        let b_shift: Vec<f64> = b.iter().map(|v| v + 1.0).collect();
        let same = sliced_wasserstein(&a, &b, 2, 64, 5).unwrap();
        let apart = sliced_wasserstein(&a, &b_shift, 2, 64, 5).unwrap();
        assert!(same < apart, "{same} vs {apart}");
    }

    #[test]
    fn sw_1d_matches_direct_sorted_wasserstein() {
        let a: Vec<f64> = cloud(3, 800, 0.0);
        let b: Vec<f64> = cloud(4, 800, 0.3);
        let a1 = &a[..400];
        let b1 = &b[..400];
        let sw = sliced_wasserstein(a1, b1, 1, 8, 11).unwrap();

        // independent direct 1D implementation
        let mut sa = a1.to_vec();
        let mut sb = b1.to_vec();
        sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
        sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let direct = (sa
            .iter()
            .zip(&sb)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            / sa.len() as f64)
            .sqrt();
        assert!((sw - direct).abs() < 1e-10, "{sw} vs {direct}");
    }

    #[test]
    fn sw_symmetric_bit_identical() {
        let a = cloud(5, 300, 0.0);
        let b = cloud(6, 500, 0.5);
        let ab = sliced_wasserstein(&a, &b, 2, 16, 9).unwrap();
        let ba = sliced_wasserstein(&b, &a, 2, 16, 9).unwrap();
        assert_eq!(ab.to_bits(), ba.to_bits());
    }

    #[test]
    fn sw_scale_homogeneity() {
        let a = cloud(7, 1000, 0.0);
        let b = cloud(8, 1000, 0.4);
        let a2: Vec<f64> = a.iter().map(|v| 2.0 * v).collect();
        let b2: Vec<f64> = b.iter().map(|v| 2.0 * v).collect();
        let base = sliced_wasserstein(&a, &b, 2, 32, 13).unwrap();
        let scaled = sliced_wasserstein(&a2, &b2, 2, 32, 13).unwrap();
        assert!((scaled - 2.0 * base).abs() < 1e-8, "{scaled} vs {}", 2.0 * base);
    }

    #[test]
    fn energy_identical_zero_and_symmetric() {
        let a = cloud(9, 300, 0.0);
        let b = cloud(10, 300, 0.2);
        assert!(energy_distance(&a, &a, 2).unwrap().abs() < 1e-10);
        let ab = energy_distance(&a, &b, 2).unwrap();
        let ba = energy_distance(&b, &a, 2).unwrap();
        assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn energy_far_clouds_large() {
        let a = cloud(11, 400, 0.0);
        let b = cloud(12, 400, 0.0);
        let far: Vec<f64> = b.iter().map(|v| v + 20.0).collect();
        let baseline = energy_distance(&a, &b, 2).unwrap().abs().max(1e-12);
        let apart = energy_distance(&a, &far, 2).unwrap();
        assert!(apart > 10.0 * baseline, "{apart} vs {baseline}");
    }

    #[test]
    fn energy_small_sets_exhaustive_pair_sum() {
        let a = [0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let b = [2.0, 0.0, 3.0, 0.0, 2.0, 1.0, 3.0, 1.0];
        let got = energy_distance(&a, &b, 2).unwrap();

        // hand-rolled exhaustive oracle over all pairs
        let pt = |s: &[f64], i: usize| [s[2 * i], s[2 * i + 1]];
        let dd = |p: [f64; 2], q: [f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        let mut cross = 0.0;
        let mut wa = 0.0;
        let mut wb = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                cross += dd(pt(&a, i), pt(&b, j));
                wa += dd(pt(&a, i), pt(&a, j));
                wb += dd(pt(&b, i), pt(&b, j));
            }
        }
        let expected = 2.0 * cross / 16.0 - wa / 16.0 - wb / 16.0;
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn mode_coverage_cases() {
        let centers = [0.0, 0.0, 5.0, 5.0];
        assert_eq!(mode_coverage(&centers, 2, &centers, 0.1).unwrap(), 1.0);
        let far = [100.0, 100.0];
        assert_eq!(mode_coverage(&far, 2, &centers, 0.1).unwrap(), 0.0);
        let half = [0.05, 0.0];
        assert_eq!(mode_coverage(&half, 2, &centers, 0.1).unwrap(), 0.5);
    }
}
