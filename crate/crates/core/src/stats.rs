//! Student-t quantiles, sequential estimation with the Chow-Robbins stopping
//! rule, and the Scale and SumCov curve metrics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

/// `p`-quantile of Student's t with `df` degrees of freedom.
pub fn t_quantile(p: f64, df: u64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) || df < 1 {
        return Err(Error::Config(format!(
            "t quantile needs 0 < p < 1 and df >= 1, got p={p}, df={df}"
        )));
    }
    let t = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| Error::Config(e.to_string()))?;
    Ok(t.inverse_cdf(p))
}

fn z_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequentialParams {
    /// Target half-width.
    pub epsilon: f64,
    /// Risk; the interval has confidence `1 - kappa`.
    pub kappa: f64,
    pub min_samples: usize,
    pub max_samples: usize,
}

impl Default for SequentialParams {
    fn default() -> Self {
        SequentialParams {
            epsilon: 0.05,
            kappa: 0.1,
            min_samples: 60,
            max_samples: 100_000,
        }
    }
}

impl SequentialParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.epsilon > 0.0
            && self.epsilon < 1.0
            && self.kappa > 0.0
            && self.kappa < 1.0
            && self.min_samples >= 2
            && self.min_samples <= self.max_samples;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "sequential parameters need 0 < epsilon < 1, 0 < kappa < 1 and \
                 2 <= min_samples <= max_samples, got {self:?}"
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Converged,
    MaxSamples,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageEstimate {
    pub mean: f64,
    pub samples: usize,
    pub half_width: f64,
    pub std_dev: f64,
    pub stopped: StopReason,
}

/// Half-width of the two-sided `1 - kappa` Student-t interval for the mean.
pub fn half_width(values: &[f64], kappa: f64) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Empty("half-width needs at least two samples"));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(t_quantile(1.0 - kappa / 2.0, (n - 1) as u64)? * var.sqrt() / (n as f64).sqrt())
}

/// Draws from `sampler` until the Student-t half-width is at most
/// `epsilon` (after at least `min_samples` draws) or `max_samples` is hit.
/// The sampler receives the zero-based draw index.
pub fn sequential_estimate<E>(
    params: &SequentialParams,
    mut sampler: impl FnMut(usize) -> Result<f64, E>,
) -> Result<CoverageEstimate, E>
where
    E: From<Error>,
{
    params.validate()?;
    let level = 1.0 - params.kappa / 2.0;
    // The t quantile is never below the normal one, which lets most
    // iterations skip the t computation.
    let z = z_quantile(level);
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    let mut i = 0usize;
    loop {
        let x = sampler(i)?;
        i += 1;
        // Welford update
        let delta = x - mean;
        mean += delta / i as f64;
        m2 += delta * (x - mean);
        if i < params.min_samples {
            continue;
        }
        let s = (m2.max(0.0) / (i - 1) as f64).sqrt();
        let scale = s / (i as f64).sqrt();
        let done_at_max = i >= params.max_samples;
        if z * scale <= params.epsilon || done_at_max {
            let h = t_quantile(level, (i - 1) as u64)? * scale;
            if h <= params.epsilon || done_at_max {
                return Ok(CoverageEstimate {
                    mean,
                    samples: i,
                    half_width: h,
                    std_dev: s,
                    stopped: if h <= params.epsilon {
                        StopReason::Converged
                    } else {
                        StopReason::MaxSamples
                    },
                });
            }
        }
    }
}

/// Which entries of a curve SumCov adds up.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SumCovMode {
    /// Every entry up to and including the last one of the terminating
    /// run of failures.
    #[default]
    ThroughTermination,
    /// Only entries up to the Scale size.
    UpToScale,
}

impl std::str::FromStr for SumCovMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "through-termination" => Ok(SumCovMode::ThroughTermination),
            "up-to-scale" => Ok(SumCovMode::UpToScale),
            _ => Err(Error::Config(format!("unknown sumcov mode `{s}`"))),
        }
    }
}

/// Index of the last entry of the first run of `zeta` consecutive entries
/// below `tau`.
fn termination_index(curve: &[(usize, f64)], tau: f64, zeta: usize) -> Option<usize> {
    let mut run = 0;
    for (i, &(_, c)) in curve.iter().enumerate() {
        if c < tau {
            run += 1;
            if run >= zeta {
                return Some(i);
            }
        } else {
            run = 0;
        }
    }
    None
}

fn check_curve(curve: &[(usize, f64)], zeta: usize) -> Result<()> {
    if curve.is_empty() {
        return Err(Error::Empty("coverage curve"));
    }
    if zeta == 0 {
        return Err(Error::Config("zeta must be at least 1".into()));
    }
    if curve.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::Config("curve sizes must be strictly increasing".into()));
    }
    Ok(())
}

/// Largest size before the first run of `zeta` consecutive sizes with
/// coverage below `tau`; the last size if there is no such run, and 0 if
/// the run starts at the first entry.
pub fn scale_metric(curve: &[(usize, f64)], tau: f64, zeta: usize) -> Result<usize> {
    check_curve(curve, zeta)?;
    Ok(match termination_index(curve, tau, zeta) {
        Some(end) => {
            let start = end + 1 - zeta;
            if start == 0 {
                0
            } else {
                curve[start - 1].0
            }
        }
        None => curve.last().unwrap().0,
    })
}

pub fn sumcov_metric(curve: &[(usize, f64)], tau: f64, zeta: usize, mode: SumCovMode) -> Result<f64> {
    check_curve(curve, zeta)?;
    let end = termination_index(curve, tau, zeta).unwrap_or(curve.len() - 1);
    let entries = &curve[..=end];
    Ok(match mode {
        SumCovMode::ThroughTermination => entries.iter().map(|e| e.1).sum(),
        SumCovMode::UpToScale => {
            let scale = scale_metric(curve, tau, zeta)?;
            entries.iter().filter(|e| e.0 <= scale).map(|e| e.1).sum()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_reference_values() {
        assert!((t_quantile(0.95, 9).unwrap() - 1.833113).abs() < 1e-6);
        assert!((t_quantile(0.975, 9).unwrap() - 2.262157).abs() < 1e-6);
        for df in [1, 2, 7, 100] {
            assert!(t_quantile(0.5, df).unwrap().abs() < 1e-12);
        }
        assert!(t_quantile(0.0, 3).is_err());
        assert!(t_quantile(0.5, 0).is_err());
    }

    #[test]
    fn quantile_approaches_normal() {
        let q = t_quantile(0.975, 1000).unwrap();
        assert!((q - 1.959964).abs() < 1e-2);
        assert!(q > 1.959964);
    }

    #[test]
    fn constant_samplers_stop_at_min_samples() {
        let p = SequentialParams::default();
        for v in [0.0, 1.0] {
            let est = sequential_estimate::<Error>(&p, |_| Ok(v)).unwrap();
            assert_eq!(est.samples, p.min_samples);
            assert_eq!(est.mean, v);
            assert_eq!(est.half_width, 0.0);
            assert_eq!(est.stopped, StopReason::Converged);
        }
    }

    #[test]
    fn max_samples_caps_the_loop() {
        let p = SequentialParams {
            epsilon: 0.001,
            max_samples: 50,
            min_samples: 10,
            ..Default::default()
        };
        let est = sequential_estimate::<Error>(&p, |i| Ok((i % 2) as f64)).unwrap();
        assert_eq!(est.samples, 50);
        assert_eq!(est.stopped, StopReason::MaxSamples);
    }

    #[test]
    fn stored_samples_reproduce_half_width() {
        let p = SequentialParams::default();
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 3 == 0) as u8 as f64).collect();
        let est = sequential_estimate::<Error>(&p, |i| Ok(xs[i])).unwrap();
        let h = half_width(&xs[..est.samples], p.kappa).unwrap();
        assert!((h - est.half_width).abs() < 1e-9);
        assert!(h <= p.epsilon);
        let before = half_width(&xs[..est.samples - 1], p.kappa).unwrap();
        assert!(before > p.epsilon || est.samples - 1 < p.min_samples);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let p = SequentialParams {
            min_samples: 1,
            ..Default::default()
        };
        assert!(sequential_estimate::<Error>(&p, |_| Ok(1.0)).is_err());
    }

    #[test]
    fn scale_examples() {
        let a = [(1, 1.0), (2, 1.0), (3, 0.2), (4, 0.2), (5, 0.2)];
        assert_eq!(scale_metric(&a, 0.3, 2).unwrap(), 2);
        let b = [(1, 1.0), (2, 0.1), (3, 0.9), (4, 0.1), (5, 0.1)];
        assert_eq!(scale_metric(&b, 0.3, 2).unwrap(), 3);
        let c = [(1, 1.0), (2, 0.5)];
        assert_eq!(scale_metric(&c, 0.3, 2).unwrap(), 2);
        let d = [(3, 0.0), (4, 0.0)];
        assert_eq!(scale_metric(&d, 0.3, 2).unwrap(), 0);
        assert!(scale_metric(&[], 0.3, 2).is_err());
    }

    #[test]
    fn sumcov_examples() {
        let a = [(1, 1.0), (2, 1.0), (3, 0.2), (4, 0.2)];
        let m = SumCovMode::ThroughTermination;
        assert!((sumcov_metric(&a, 0.3, 2, m).unwrap() - 2.4).abs() < 1e-12);
        assert!((sumcov_metric(&a, 0.3, 2, SumCovMode::UpToScale).unwrap() - 2.0).abs() < 1e-12);
        let z = [(1, 0.0), (2, 0.0), (3, 0.0)];
        assert_eq!(sumcov_metric(&z, 0.3, 2, m).unwrap(), 0.0);
        assert!((sumcov_metric(&[(5, 0.7)], 0.3, 2, m).unwrap() - 0.7).abs() < 1e-12);
        // entries after the terminating run are excluded
        let e = [(1, 1.0), (2, 0.0), (3, 0.0), (4, 1.0)];
        assert_eq!(sumcov_metric(&e, 0.3, 2, m).unwrap(), 1.0);
    }
}
