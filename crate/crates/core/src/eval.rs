//! Scaling evaluation: statistical coverage at every valid size from the
//! smallest upward, with a sequential stopping rule per size and a stop
//! after `zeta` consecutive sizes below `tau`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::csp;
use crate::domains::{self, descriptor};
use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::runner::{rollout_rng, run_policy};
use crate::seeds::derive_seed;
use crate::stats::{self, CoverageEstimate, SequentialParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalParams {
    pub sequential: SequentialParams,
    /// Base plan-length bound; the bound at size `n` is `l0 + n`.
    pub l0: usize,
    pub tau: f64,
    pub zeta: usize,
    /// Largest size evaluated.
    pub max_size: usize,
    pub max_consecutive_invalid: usize,
    pub seed: u64,
    /// Salt mixed into every rollout stream.
    pub salt: u64,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams {
            sequential: SequentialParams::default(),
            l0: 60,
            tau: 0.3,
            zeta: 2,
            max_size: 200,
            max_consecutive_invalid: 1000,
            seed: 0,
            salt: 0,
        }
    }
}

impl EvalParams {
    pub fn validate(&self) -> Result<()> {
        self.sequential.validate()?;
        if self.zeta == 0 || self.l0 == 0 || !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::Config(format!(
                "evaluation needs zeta >= 1, l0 >= 1 and 0 <= tau <= 1, got zeta={}, l0={}, tau={}",
                self.zeta, self.l0, self.tau
            )));
        }
        Ok(())
    }

    pub fn bound_at(&self, n: usize) -> usize {
        self.l0 + n
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub size: usize,
    pub estimate: CoverageEstimate,
    /// Plan-length bound used for every run at this size.
    pub bound: usize,
    pub solved: usize,
    pub total_runs: usize,
    /// Mean steps over solved runs; absent when none was solved.
    pub mean_plan_length: Option<f64>,
    /// Outcome of every run in draw order.
    pub outcomes: Vec<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalStop {
    ConsecutiveFails,
    MaxSize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingCurve {
    pub domain: String,
    pub policy: String,
    pub points: Vec<CurvePoint>,
    pub skipped_sizes: Vec<usize>,
    pub stopped: EvalStop,
}

impl ScalingCurve {
    /// `(n, coverage)` pairs for the metrics.
    pub fn coverage(&self) -> Vec<(usize, f64)> {
        self.points.iter().map(|p| (p.size, p.estimate.mean)).collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "size",
            "coverage",
            "half_width",
            "samples",
            "solved",
            "mean_plan_length",
        ])?;
        for p in &self.points {
            w.write_record([
                p.size.to_string(),
                format!("{:.6}", p.estimate.mean),
                format!("{:.6}", p.estimate.half_width),
                p.estimate.samples.to_string(),
                p.solved.to_string(),
                p.mean_plan_length.map(|m| format!("{m:.6}")).unwrap_or_default(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

pub fn evaluate_scaling(
    policy: &mut dyn Policy,
    domain: &str,
    params: &EvalParams,
) -> Result<ScalingCurve> {
    params.validate()?;
    let desc = descriptor(domain)?;
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    let mut fails = 0;
    let mut invalid_run = 0;
    let mut n = 1;
    let stopped = loop {
        n += 1;
        if n > params.max_size {
            break EvalStop::MaxSize;
        }
        if !csp::has_solution(&desc.csp, n as u64) {
            skipped.push(n);
            invalid_run += 1;
            if invalid_run >= params.max_consecutive_invalid {
                return Err(Error::Validation(format!(
                    "{invalid_run} consecutive sizes without a valid composition (last {n})"
                )));
            }
            continue;
        }
        invalid_run = 0;
        let compositions = csp::solve_all(&desc.csp, n as u64)?;
        let bound = params.bound_at(n);
        let mut outcomes = Vec::new();
        let mut solved_steps = Vec::new();
        let estimate = stats::sequential_estimate::<Error>(&params.sequential, |i| {
            // Fresh composition and layout for every run.
            let seed = derive_seed(params.seed, &[n as u64, i as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let assignment = csp::sample_uniform(&compositions, &mut rng)?;
            let input = desc.input_from(assignment, &mut rng);
            let instance = domains::generate_instance(domain, &input, seed)?;
            let mut run_rng = rollout_rng(&instance, params.salt);
            let run = run_policy(policy, &instance, bound, &mut run_rng);
            outcomes.push(run.solved);
            if run.solved {
                solved_steps.push(run.steps);
            }
            Ok(if run.solved { 1.0 } else { 0.0 })
        })?;
        let mean_plan_length = (!solved_steps.is_empty())
            .then(|| solved_steps.iter().sum::<usize>() as f64 / solved_steps.len() as f64);
        let below = estimate.mean < params.tau;
        points.push(CurvePoint {
            size: n,
            solved: solved_steps.len(),
            total_runs: outcomes.len(),
            estimate,
            bound,
            mean_plan_length,
            outcomes,
        });
        fails = if below { fails + 1 } else { 0 };
        if fails >= params.zeta {
            break EvalStop::ConsecutiveFails;
        }
        if n == params.max_size {
            break EvalStop::MaxSize;
        }
    };
    Ok(ScalingCurve {
        domain: domain.to_owned(),
        policy: policy.name(),
        points,
        skipped_sizes: skipped,
        stopped,
    })
}

/// Mean plan length of solved runs per size; sizes without a solved run
/// are left out.
pub fn plan_length_curve(curve: &ScalingCurve) -> Vec<(usize, f64)> {
    curve
        .points
        .iter()
        .filter_map(|p| p.mean_plan_length.map(|m| (p.size, m)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{bernoulli_policy, BernoulliSpec};

    fn quick() -> EvalParams {
        EvalParams {
            sequential: SequentialParams {
                min_samples: 5,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn always_fail_stops_after_zeta_valid_sizes() {
        let mut p = bernoulli_policy(BernoulliSpec::constant(0.0));
        let curve = evaluate_scaling(&mut p, "gripper", &quick()).unwrap();
        assert_eq!(curve.stopped, EvalStop::ConsecutiveFails);
        assert_eq!(curve.points.len(), 2);
        assert_eq!(curve.points[0].size, 5);
        assert_eq!(curve.skipped_sizes, vec![2, 3, 4]);
        assert!(curve.points.iter().all(|p| p.estimate.mean == 0.0));
        assert!(plan_length_curve(&curve).is_empty());
    }

    #[test]
    fn always_succeed_runs_to_max_size() {
        let mut p = bernoulli_policy(BernoulliSpec::constant(1.0));
        let params = EvalParams {
            max_size: 10,
            ..quick()
        };
        let curve = evaluate_scaling(&mut p, "gripper", &params).unwrap();
        assert_eq!(curve.stopped, EvalStop::MaxSize);
        assert_eq!(curve.points.last().unwrap().size, 10);
        for pt in &curve.points {
            assert_eq!(pt.estimate.mean, 1.0);
            assert_eq!(pt.estimate.samples, 5);
            assert_eq!(pt.bound, params.l0 + pt.size);
        }
        let csv = curve.to_csv().unwrap();
        assert!(csv.starts_with("size,coverage,half_width,samples,solved,mean_plan_length\n"));
        assert_eq!(csv.lines().count(), 7);
    }
}
