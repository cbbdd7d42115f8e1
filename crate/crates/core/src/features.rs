//! Feature assembly from stacked measurements and the 1-bit mean-threshold
//! quantizer.

use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::channel::Measurement;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Measurements stacked per phase.
    pub m_samples: usize,
    pub n_antennas: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            m_samples: 16,
            n_antennas: 32,
        }
    }
}

impl FeatureConfig {
    pub fn block_length(&self) -> usize {
        2 * self.m_samples * self.n_antennas
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_samples == 0 || self.n_antennas == 0 {
            return Err(Error::param("m_samples", "M and N_b must be positive"));
        }
        let n = self.block_length();
        if !n.is_power_of_two() {
            return Err(Error::param(
                "m_samples",
                format!("block length 2*M*N_b = {n} is not a power of two"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

/// Concatenates the measurements into one row, then emits all real parts
/// followed by all imaginary parts in the same order.
pub fn assemble_features(measurements: &[Measurement], cfg: &FeatureConfig) -> Result<FeatureVector> {
    if measurements.len() != cfg.m_samples {
        return Err(Error::dim("assemble_features: measurement count", cfg.m_samples, measurements.len()));
    }
    if let Some(bad) = measurements.iter().find(|m| m.values.len() != cfg.n_antennas) {
        return Err(Error::dim("assemble_features: measurement length", cfg.n_antennas, bad.values.len()));
    }
    let row = measurements.iter().flat_map(|m| m.values.iter());
    let values = row
        .clone()
        .map(|z| z.re)
        .chain(row.map(|z| z.im))
        .collect();
    Ok(FeatureVector { values })
}

/// `bit_j = 1` iff `x_j >= mean(x)`.
pub fn quantize(x: &FeatureVector) -> Result<BitVector> {
    if x.values.is_empty() {
        return Err(Error::param("x", "cannot quantize an empty feature vector"));
    }
    let gamma = x.values.iter().sum::<f64>() / x.values.len() as f64;
    Ok(BitVector::from_bools(x.values.iter().map(|&v| v >= gamma)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn meas(vals: &[(f64, f64)]) -> Measurement {
        Measurement {
            values: vals.iter().map(|&(re, im)| Complex64::new(re, im)).collect(),
        }
    }

    fn fv(values: &[f64]) -> FeatureVector {
        FeatureVector {
            values: values.to_vec(),
        }
    }

    #[test]
    fn single_measurement_splits_re_im() {
        let cfg = FeatureConfig {
            m_samples: 1,
            n_antennas: 1,
        };
        let x = assemble_features(&[meas(&[(3.0, 4.0)])], &cfg).unwrap();
        assert_eq!(x.values, vec![3.0, 4.0]);
    }

    #[test]
    fn real_block_precedes_imaginary_block() {
        let cfg = FeatureConfig {
            m_samples: 2,
            n_antennas: 1,
        };
        let x = assemble_features(&[meas(&[(1.0, 2.0)]), meas(&[(3.0, 4.0)])], &cfg).unwrap();
        assert_eq!(x.values, vec![1.0, 3.0, 2.0, 4.0]);
    }

    #[test]
    fn default_geometry_gives_1024() {
        let cfg = FeatureConfig::default();
        cfg.validate().unwrap();
        let ms = vec![meas(&[(0.5, -0.5); 32]); 16];
        assert_eq!(assemble_features(&ms, &cfg).unwrap().values.len(), 1024);
    }

    #[test]
    fn wrong_shapes_are_rejected() {
        let cfg = FeatureConfig {
            m_samples: 2,
            n_antennas: 2,
        };
        assert!(assemble_features(&[meas(&[(1.0, 1.0), (1.0, 1.0)])], &cfg).is_err());
        assert!(assemble_features(&[meas(&[(1.0, 1.0)]), meas(&[(1.0, 1.0)])], &cfg).is_err());
        assert!(FeatureConfig { m_samples: 3, n_antennas: 1 }.validate().is_err());
    }

    #[test]
    fn quantizer_examples() {
        assert_eq!(quantize(&fv(&[1.0, -1.0, 1.0, -1.0])).unwrap().as_slice(), &[1, 0, 1, 0]);
        assert_eq!(quantize(&fv(&[2.5, 2.5, 2.5])).unwrap().as_slice(), &[1, 1, 1]);
        assert_eq!(quantize(&fv(&[0.5, 0.1, 0.9, 0.5])).unwrap().as_slice(), &[1, 0, 1, 1]);
        assert!(quantize(&fv(&[])).is_err());
    }

    #[test]
    fn balanced_on_symmetric_input() {
        let mut rng = crate::rng::seeded(5);
        let n = 1 << 16;
        let x = fv(&(0..n).map(|_| rng.sample(StandardNormal)).collect::<Vec<f64>>());
        let ones = quantize(&x).unwrap().count_ones() as f64 / n as f64;
        assert!((ones - 0.5).abs() < 3.0 * 0.5 / (n as f64).sqrt(), "{ones}");
    }

    // Integer-valued inputs keep the mean exact under shifts and scales, so
    // the ">=" boundary is not perturbed by rounding.
    proptest! {
        #[test]
        fn shift_invariant(xs in proptest::collection::vec(-1000i32..1000, 1..64), c in -1000i32..1000) {
            let x = fv(&xs.iter().map(|&v| v as f64).collect::<Vec<_>>());
            let shifted = fv(&xs.iter().map(|&v| (v + c) as f64).collect::<Vec<_>>());
            prop_assert_eq!(quantize(&x).unwrap(), quantize(&shifted).unwrap());
        }

        #[test]
        fn positive_scale_invariant(xs in proptest::collection::vec(-1000i32..1000, 1..64), a in 1i32..64) {
            let x = fv(&xs.iter().map(|&v| v as f64).collect::<Vec<_>>());
            let scaled = fv(&xs.iter().map(|&v| (v * a) as f64).collect::<Vec<_>>());
            prop_assert_eq!(quantize(&x).unwrap(), quantize(&scaled).unwrap());
        }
    }
}
