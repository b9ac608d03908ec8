//! Monte Carlo summaries and two-sample comparison.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("step sizes must be strictly decreasing and positive: {0:?}")]
    NotDecreasing(Vec<f64>),
}

/// Two-sample Kolmogorov-Smirnov distance: the largest gap between the
/// empirical distribution functions.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = if a[i].total_cmp(&b[j]).is_le() { a[i] } else { b[j] };
        while i < a.len() && a[i].total_cmp(&v).is_le() {
            i += 1;
        }
        while j < b.len() && b[j].total_cmp(&v).is_le() {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// One-sample Kolmogorov-Smirnov distance between the empirical
/// distribution of `a` and a continuous distribution function `cdf`.
pub fn ks_against<F: Fn(f64) -> f64>(a: &[f64], cdf: F) -> Result<f64, StatsError> {
    if a.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut a = a.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    let n = a.len() as f64;
    Ok(a.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    }))
}

/// Neumaier's compensated sum.
#[derive(Clone, Copy, Debug, Default)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    fn value(self) -> f64 {
        self.s + self.c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`; zero below two values.
    pub std_err: f64,
    pub min: f64,
    pub max: f64,
    pub seeds: Vec<u64>,
}

/// Mean, standard error and range of `values`, reduced in `path_id`
/// order with compensated sums so the result does not depend on the
/// order the values arrived in. An empty input gives `n = 0` and NaN
/// statistics.
pub fn mc_estimate(values: &[(u64, f64)], seeds: &[u64]) -> SampleSummary {
    let mut v = values.to_vec();
    v.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let n = v.len();
    let mut seeds = seeds.to_vec();
    seeds.sort_unstable();
    seeds.dedup();
    if n == 0 {
        return SampleSummary { n, mean: f64::NAN, std_err: f64::NAN, min: f64::NAN, max: f64::NAN, seeds };
    }
    let mut sum = Sum::default();
    v.iter().for_each(|(_, x)| sum.add(*x));
    let mean = sum.value() / n as f64;
    let mut sq = Sum::default();
    v.iter().for_each(|(_, x)| sq.add((x - mean) * (x - mean)));
    let std_err = if n > 1 { (sq.value() / (n - 1) as f64).sqrt() / (n as f64).sqrt() } else { 0.0 };
    let min = v.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let max = v.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    SampleSummary { n, mean, std_err, min, max, seeds }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub dt: f64,
    pub estimate: f64,
    pub std_err: f64,
}

/// Estimate of a terminal functional at each step size. `sample(dt, id)`
/// produces the value of path `id`; paths run in parallel and are reduced
/// by id.
pub fn refinement_study<E, F>(dts: &[f64], n_paths: u64, seed: u64, sample: F) -> Result<Vec<RefinementRow>, E>
where
    E: From<StatsError> + Send,
    F: Fn(f64, u64) -> Result<f64, E> + Sync,
{
    if dts.iter().any(|d| !(*d > 0.0)) || dts.windows(2).any(|w| w[1] >= w[0]) {
        return Err(StatsError::NotDecreasing(dts.to_vec()).into());
    }
    dts.iter()
        .map(|&dt| {
            let vals = (0..n_paths).into_par_iter().map(|id| sample(dt, id).map(|v| (id, v))).collect::<Result<Vec<_>, E>>()?;
            let s = mc_estimate(&vals, &[seed]);
            Ok(RefinementRow { dt, estimate: s.mean, std_err: s.std_err })
        })
        .collect()
}
