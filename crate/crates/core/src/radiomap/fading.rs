use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::{RadioError, Result};

/// Nakagami-m fading power `f²`: Gamma(shape = m, scale = 1/m), unit mean.
#[derive(Debug, Clone, Copy)]
pub struct NakagamiFading {
    gamma: Gamma<f64>,
}

impl NakagamiFading {
    pub fn new(m: f64) -> Result<Self> {
        if !(m >= 0.5) || !m.is_finite() {
            return Err(RadioError::Domain(format!("nakagami m must be >= 0.5, got {m}")));
        }
        let gamma = Gamma::new(m, 1.0 / m).map_err(|e| RadioError::Domain(e.to_string()))?;
        Ok(Self { gamma })
    }
}

impl Distribution<f64> for NakagamiFading {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.gamma.sample(rng)
    }
}

/// One power coefficient draw.
pub fn sample_fading<R: Rng + ?Sized>(m: f64, rng: &mut R) -> Result<f64> {
    Ok(NakagamiFading::new(m)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ContinuousCDF, Gamma as GammaCdf};

    fn draws(m: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = NakagamiFading::new(m).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        (mean, xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n)
    }

    #[test]
    fn invalid_shape() {
        assert!(NakagamiFading::new(0.4).is_err());
        assert!(NakagamiFading::new(f64::NAN).is_err());
    }

    #[test]
    fn unit_mean_for_common_shapes() {
        for (i, m) in [0.5, 1.0, 3.0].into_iter().enumerate() {
            let (mean, var) = mean_var(&draws(m, 100_000, 40 + i as u64));
            assert!((mean - 1.0).abs() < 0.02, "m={m} mean={mean}");
            // variance of Gamma(m, 1/m) is 1/m
            assert!((var - 1.0 / m).abs() < 0.1 / m, "m={m} var={var}");
        }
    }

    #[test]
    fn large_m_concentrates() {
        let (mean, var) = mean_var(&draws(1e5, 100_000, 7));
        assert!((mean - 1.0).abs() < 1e-3);
        assert!(var < 1e-4);
    }

    #[test]
    fn ks_distance_against_gamma_cdf() {
        for (m, seed) in [(0.5, 1), (1.0, 2), (3.0, 3)] {
            let mut xs = draws(m, 100_000, seed);
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let cdf = GammaCdf::new(m, m).unwrap(); // statrs: shape, rate
            let n = xs.len() as f64;
            let ks = xs
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let f = cdf.cdf(x);
                    (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
                })
                .fold(0.0, f64::max);
            assert!(ks < 0.01, "m={m} ks={ks}");
        }
    }
}
