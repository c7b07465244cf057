use std::f64::consts::{E, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::markov::{check_ergodic, stationary_for_shape};
use super::model::{ModelKind, ProcessModel};
use super::{ModelError, Side};
use crate::seed::rng_for;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMode {
    Analytic,
    MonteCarlo,
}

/// Standard errors of a Monte-Carlo rate estimate, all zero for analytic reports.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RateErrors {
    pub h1: f64,
    pub h2: f64,
    pub h12: f64,
    pub mi: f64,
}

/// Entropy rates in bits per symbol and the mutual information rate
/// `mi = h1 + h2 - h12`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub h1: f64,
    pub h2: f64,
    pub h12: f64,
    pub mi: f64,
    pub mode: EntropyMode,
    pub stderr: RateErrors,
}

/// Shannon entropy in bits, with 0 log 0 = 0.
pub(crate) fn shannon_bits(pmf: impl IntoIterator<Item = f64>) -> f64 {
    pmf.into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum::<f64>()
        + 0.0
}

fn report(h1: f64, h2: f64, h12: f64, mi: f64) -> EntropyReport {
    EntropyReport {
        h1,
        h2,
        h12,
        // + 0.0 turns a -0.0 into 0.0
        mi: mi + 0.0,
        mode: EntropyMode::Analytic,
        stderr: RateErrors::default(),
    }
}

pub(crate) fn analytic(model: &ProcessModel) -> Result<EntropyReport, ModelError> {
    match &model.kind {
        ModelKind::Iid(t) => {
            let h1 = shannon_bits(
                (0..t.k1).map(|a| (0..t.k2).map(|b| t.joint[a * t.k2 + b]).sum::<f64>()),
            );
            let h2 = shannon_bits(
                (0..t.k2).map(|b| (0..t.k1).map(|a| t.joint[a * t.k2 + b]).sum::<f64>()),
            );
            let h12 = shannon_bits(t.joint.iter().copied());
            Ok(report(h1, h2, h12, h1 + h2 - h12))
        }
        ModelKind::Gaussian(g) => {
            let h_single = 0.5 * (2.0 * PI * E).log2();
            let h12 = (2.0 * PI * E * (1.0 - g.rho * g.rho).sqrt()).log2();
            let mi = -0.5 * (1.0 - g.rho * g.rho).log2();
            Ok(report(h_single, h_single, h12, mi))
        }
        ModelKind::Markov(t) => {
            let shape = &t.shape;
            check_ergodic(shape, &t.kernel)?;
            let pi = stationary_for_shape(shape, &t.kernel)?;
            // Conditional entropies of the next pair, and of each of its
            // components, given the previous l pairs.
            let (mut h1, mut h2, mut h12) = (0.0, 0.0, 0.0);
            let mut m1 = vec![0.0; shape.k1];
            let mut m2 = vec![0.0; shape.k2];
            for (block, &weight) in pi.iter().enumerate() {
                if weight == 0.0 {
                    continue;
                }
                let row = &t.kernel[block * shape.pairs..(block + 1) * shape.pairs];
                m1.iter_mut().for_each(|x| *x = 0.0);
                m2.iter_mut().for_each(|x| *x = 0.0);
                for (pair, &p) in row.iter().enumerate() {
                    let (a, b) = shape.split_pair(pair);
                    m1[a as usize] += p;
                    m2[b as usize] += p;
                }
                h12 += weight * shannon_bits(row.iter().copied());
                h1 += weight * shannon_bits(m1.iter().copied());
                h2 += weight * shannon_bits(m2.iter().copied());
            }
            Ok(report(h1, h2, h12, h1 + h2 - h12))
        }
    }
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl ProcessModel {
    /// Monte-Carlo rates: averages of `-(1/m) log2 f_m` over `trials`
    /// independently sampled blocks. Trial `t` draws from the stream derived
    /// from `(seed, "entropy", t)`, so the result does not depend on the
    /// thread count.
    pub fn estimate_entropy_rates(&self, m: usize, trials: usize, seed: u64) -> Result<EntropyReport, ModelError> {
        if trials == 0 {
            return Err(ModelError::InvalidArgument("trials must be at least 1".into()));
        }
        if m < self.min_length() {
            return Err(ModelError::TooShort {
                m,
                order: self.min_length(),
            });
        }
        let samples: Vec<[f64; 4]> = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_for(seed, "entropy", t);
                let (u1, u2) = self.sample_pair(m, &mut rng)?;
                let scale = -1.0 / m as f64;
                let r12 = scale * self.log_joint_unchecked(u1.as_ref(), u2.as_ref()) + 0.0;
                let r1 = scale * self.log_marginal_unchecked(Side::First, u1.as_ref()) + 0.0;
                let r2 = scale * self.log_marginal_unchecked(Side::Second, u2.as_ref()) + 0.0;
                Ok([r1, r2, r12, r1 + r2 - r12])
            })
            .collect::<Result<_, ModelError>>()?;
        let column = |k: usize| mean_and_stderr(&samples.iter().map(|s| s[k]).collect::<Vec<_>>());
        let (h1, e1) = column(0);
        let (h2, e2) = column(1);
        let (h12, e12) = column(2);
        let (mi, emi) = column(3);
        Ok(EntropyReport {
            h1,
            h2,
            h12,
            mi,
            mode: EntropyMode::MonteCarlo,
            stderr: RateErrors {
                h1: e1,
                h2: e2,
                h12: e12,
                mi: emi,
            },
        })
    }
}
