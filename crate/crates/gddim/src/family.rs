//! Location-scale noise families in standardized (mean 0, variance 1) form.
//!
//! Every family is stored together with the constant `c` such that
//! `z = c * z_canonical(loc=0, scale=1)` has unit variance. The forward
//! process always draws standardized noise, so schedules transfer between
//! families unchanged and the terminal state has the same second moment
//! regardless of the family.

use std::fmt;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::special::{gamma_fn, ln_gamma};

pub type Rng = rand_chacha::ChaCha8Rng;

/// Uniform draw in the open interval (0, 1).
pub fn uniform_open01(rng: &mut Rng) -> f64 {
    (((rng.next_u64() >> 11) as f64) + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draw (Box-Muller, cosine branch only so each call
/// consumes a fixed amount of rng state).
pub fn standard_normal(rng: &mut Rng) -> f64 {
    let u1 = uniform_open01(rng);
    let u2 = uniform_open01(rng);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Gamma(shape, 1) draw by Marsaglia-Tsang acceptance-rejection.
/// Shapes below 1 use the boost G(a) = G(a+1) * U^(1/a).
pub fn gamma_sample(rng: &mut Rng, shape: f64) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        let boost = uniform_open01(rng).powf(1.0 / shape);
        return gamma_sample(rng, shape + 1.0) * boost;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let mut x = standard_normal(rng);
        let mut v = 1.0 + c * x;
        while v <= 0.0 {
            x = standard_normal(rng);
            v = 1.0 + c * x;
        }
        let v = v * v * v;
        let u = uniform_open01(rng);
        if u < 1.0 - 0.0331 * x * x * x * x
            || u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln())
        {
            return d * v;
        }
    }
}

/// Which location-scale family the noise is drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyKind {
    Gaussian,
    Laplace,
    /// Requires df > 2 so the standardized form has finite variance.
    StudentT { df: f64 },
    /// Requires beta > 0; beta = 2 reduces to the Gaussian.
    GeneralizedGaussian { beta: f64 },
    Uniform,
}

/// Canonical location and scale of a family member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocScale {
    pub loc: f64,
    pub scale: f64,
}

/// A noise family standardized to mean 0, variance 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Family {
    kind: FamilyKind,
    /// c such that z = c * z_canonical(0, 1) has variance 1.
    std_constant: f64,
}

impl Family {
    pub fn new(kind: FamilyKind) -> Result<Family> {
        let std_constant = match kind {
            FamilyKind::Gaussian => 1.0,
            // canonical Laplace(0,1) has variance 2
            FamilyKind::Laplace => 1.0 / 2f64.sqrt(),
            FamilyKind::StudentT { df } => {
                if !(df > 2.0) {
                    return Err(Error::InvalidParameter(format!(
                        "student_t requires df > 2, got {df}"
                    )));
                }
                ((df - 2.0) / df).sqrt()
            }
            FamilyKind::GeneralizedGaussian { beta } => {
                if !(beta > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "gg requires beta > 0, got {beta}"
                    )));
                }
                // canonical variance Γ(3/β)/Γ(1/β)
                (gamma_fn(1.0 / beta) / gamma_fn(3.0 / beta)).sqrt()
            }
            // canonical U(-1, 1) has variance 1/3
            FamilyKind::Uniform => 3f64.sqrt(),
        };
        Ok(Family { kind, std_constant })
    }

    pub fn gaussian() -> Family {
        Family::new(FamilyKind::Gaussian).unwrap()
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn std_constant(&self) -> f64 {
        self.std_constant
    }

    /// One standardized draw (mean 0, variance 1).
    pub fn draw_standard(&self, rng: &mut Rng) -> f64 {
        let canonical = match self.kind {
            FamilyKind::Gaussian => standard_normal(rng),
            FamilyKind::Laplace => {
                let u = uniform_open01(rng);
                if u < 0.5 {
                    (2.0 * u).ln()
                } else {
                    -(2.0 * (1.0 - u)).ln()
                }
            }
            FamilyKind::StudentT { df } => {
                let n = standard_normal(rng);
                // chi-square(df) = 2 * Gamma(df/2, 1)
                let chi2 = 2.0 * gamma_sample(rng, df / 2.0);
                n / (chi2 / df).sqrt()
            }
            FamilyKind::GeneralizedGaussian { beta } => {
                let g = gamma_sample(rng, 1.0 / beta);
                let mag = g.powf(1.0 / beta);
                if uniform_open01(rng) < 0.5 {
                    -mag
                } else {
                    mag
                }
            }
            FamilyKind::Uniform => 2.0 * uniform_open01(rng) - 1.0,
        };
        self.std_constant * canonical
    }

    /// n i.i.d. standardized draws.
    pub fn sample_standard(&self, rng: &mut Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.draw_standard(rng)).collect()
    }

    /// Log density of the standardized family at z; -inf outside support.
    pub fn log_pdf(&self, z: f64) -> f64 {
        let c = self.std_constant;
        let x = z / c;
        let canonical = match self.kind {
            FamilyKind::Gaussian => {
                -0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            FamilyKind::Laplace => -x.abs() - 2f64.ln(),
            FamilyKind::StudentT { df } => {
                ln_gamma((df + 1.0) / 2.0)
                    - ln_gamma(df / 2.0)
                    - 0.5 * (df * std::f64::consts::PI).ln()
                    - 0.5 * (df + 1.0) * (1.0 + x * x / df).ln()
            }
            FamilyKind::GeneralizedGaussian { beta } => {
                (beta / 2.0).ln() - ln_gamma(1.0 / beta) - x.abs().powf(beta)
            }
            FamilyKind::Uniform => {
                if x.abs() <= 1.0 {
                    -2f64.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        };
        canonical - c.ln()
    }

    /// Canonical (loc, scale) of the member with the given mean and variance.
    pub fn moments_to_locscale(&self, mean: f64, variance: f64) -> Result<LocScale> {
        if variance < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "variance must be non-negative, got {variance}"
            )));
        }
        let scale = (variance / self.canonical_unit_variance()).sqrt();
        Ok(LocScale { loc: mean, scale })
    }

    /// Mean and variance of the member with canonical parameters p.
    pub fn locscale_to_moments(&self, p: LocScale) -> (f64, f64) {
        (p.loc, p.scale * p.scale * self.canonical_unit_variance())
    }

    /// Variance of the canonical (loc 0, scale 1) member.
    fn canonical_unit_variance(&self) -> f64 {
        match self.kind {
            FamilyKind::Gaussian => 1.0,
            FamilyKind::Laplace => 2.0,
            FamilyKind::StudentT { df } => df / (df - 2.0),
            FamilyKind::GeneralizedGaussian { .. } | FamilyKind::Uniform => {
                // 1 / c^2 by definition of the standardization constant
                1.0 / (self.std_constant * self.std_constant)
            }
        }
    }

    /// Parse a CLI tag: gaussian | laplace | student_t:<df> | gg:<beta> | uniform.
    pub fn parse(tag: &str) -> Result<Family> {
        let kind = if tag == "gaussian" {
            FamilyKind::Gaussian
        } else if tag == "laplace" {
            FamilyKind::Laplace
        } else if tag == "uniform" {
            FamilyKind::Uniform
        } else if let Some(df) = tag.strip_prefix("student_t:") {
            let df: f64 = df
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad df in '{tag}'")))?;
            FamilyKind::StudentT { df }
        } else if let Some(beta) = tag.strip_prefix("gg:") {
            let beta: f64 = beta
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad beta in '{tag}'")))?;
            FamilyKind::GeneralizedGaussian { beta }
        } else {
            return Err(Error::InvalidParameter(format!(
                "unknown family '{tag}' (expected gaussian | laplace | student_t:<df> | gg:<beta> | uniform)"
            )));
        };
        Family::new(kind)
    }

    pub fn tag(&self) -> String {
        match self.kind {
            FamilyKind::Gaussian => "gaussian".to_string(),
            FamilyKind::Laplace => "laplace".to_string(),
            FamilyKind::StudentT { df } => format!("student_t:{df}"),
            FamilyKind::GeneralizedGaussian { beta } => format!("gg:{beta}"),
            FamilyKind::Uniform => "uniform".to_string(),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> Rng {
        Rng::seed_from_u64(seed)
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(Family::new(FamilyKind::StudentT { df: 2.0 }).is_err());
        assert!(Family::new(FamilyKind::StudentT { df: 1.5 }).is_err());
        assert!(Family::new(FamilyKind::GeneralizedGaussian { beta: 0.0 }).is_err());
        assert!(Family::new(FamilyKind::GeneralizedGaussian { beta: -1.0 }).is_err());
        assert!(Family::parse("student_t:2").is_err());
        assert!(Family::parse("nonsense").is_err());
    }

    #[test]
    fn tag_round_trip() {
        for tag in ["gaussian", "laplace", "student_t:3", "gg:1.5", "gg:2.5", "uniform"] {
            let fam = Family::parse(tag).unwrap();
            assert_eq!(fam.tag(), tag);
            assert_eq!(Family::parse(&fam.tag()).unwrap().kind(), fam.kind());
        }
    }

    #[test]
    fn gaussian_log_pdf_at_mode() {
        let fam = Family::gaussian();
        let expected = -0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((fam.log_pdf(0.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn uniform_outside_support() {
        let fam = Family::parse("uniform").unwrap();
        assert_eq!(fam.log_pdf(2.0), f64::NEG_INFINITY);
        assert_eq!(fam.log_pdf(-1.8), f64::NEG_INFINITY);
        assert!(fam.log_pdf(1.7).is_finite()); // 1.7 < sqrt(3)
    }

    #[test]
    fn uniform_draws_in_support() {
        let fam = Family::parse("uniform").unwrap();
        let mut r = rng(7);
        let bound = 3f64.sqrt();
        for z in fam.sample_standard(&mut r, 10_000) {
            assert!(z.abs() <= bound);
        }
    }

    #[test]
    fn gaussian_mc_standardization() {
        let fam = Family::gaussian();
        let mut r = rng(11);
        let zs = fam.sample_standard(&mut r, 1_000_000);
        let mean = zs.iter().sum::<f64>() / zs.len() as f64;
        let var = zs.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / zs.len() as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn gg2_matches_gaussian_log_pdf() {
        let gg2 = Family::parse("gg:2").unwrap();
        let gauss = Family::gaussian();
        for i in 0..1000 {
            let z = -8.0 + 16.0 * i as f64 / 999.0;
            assert!(
                (gg2.log_pdf(z) - gauss.log_pdf(z)).abs() < 1e-10,
                "z={z}: {} vs {}",
                gg2.log_pdf(z),
                gauss.log_pdf(z)
            );
        }
    }

    #[test]
    fn moment_map_examples() {
        let gauss = Family::gaussian();
        let p = gauss.moments_to_locscale(1.5, 4.0).unwrap();
        assert_eq!(p.loc, 1.5);
        assert!((p.scale - 2.0).abs() < 1e-15);
        let (m, v) = gauss.locscale_to_moments(LocScale { loc: 1.0, scale: 2.0 });
        assert_eq!((m, v), (1.0, 4.0));

        // Laplace: Var = 2 scale^2
        let lap = Family::parse("laplace").unwrap();
        let p = lap.moments_to_locscale(0.0, 2.0).unwrap();
        assert!((p.scale - 1.0).abs() < 1e-15);

        // Student-t(3): Var = scale^2 df/(df-2)
        let t3 = Family::parse("student_t:3").unwrap();
        let p = t3.moments_to_locscale(0.0, 3.0).unwrap();
        assert!((p.scale - 1.0).abs() < 1e-15);

        // Uniform U(loc-scale, loc+scale): Var = scale^2/3
        let uni = Family::parse("uniform").unwrap();
        let (m, v) = uni.locscale_to_moments(LocScale { loc: 0.0, scale: 1.0 });
        assert!((m, v - 1.0 / 3.0) == (0.0, v - 1.0 / 3.0) && (v - 1.0 / 3.0).abs() < 1e-15);

        // GG(1.5): Var = Γ(3/1.5)/Γ(1/1.5) at unit scale
        let gg = Family::parse("gg:1.5").unwrap();
        let (m, v) = gg.locscale_to_moments(LocScale { loc: 0.0, scale: 1.0 });
        assert_eq!(m, 0.0);
        let expected = gamma_fn(3.0 / 1.5) / gamma_fn(1.0 / 1.5);
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn negative_variance_rejected() {
        assert!(Family::gaussian().moments_to_locscale(0.0, -1.0).is_err());
    }

    #[test]
    fn determinism() {
        for tag in ["gaussian", "laplace", "student_t:3", "gg:1.5", "uniform"] {
            let fam = Family::parse(tag).unwrap();
            let a = fam.sample_standard(&mut rng(42), 100);
            let b = fam.sample_standard(&mut rng(42), 100);
            assert_eq!(a, b);
        }
    }
}
