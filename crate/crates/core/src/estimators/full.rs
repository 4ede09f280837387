//! Estimators built on full `n`-vertex simulations of the one-way model:
//! count covariances, the standardized sample, Wick moments and the
//! increment bound.

use serde::{Deserialize, Serialize};

use super::oracle::{analytic_p, expected_count, tightness_bound};
use super::small::{estimate_c, CMethod, Placement};
use super::McConfig;
use crate::counting::PatternCounter;
use crate::dynamics::{build_one_way_trajectory, OneWayParams};
use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::patterns::VoterPattern;
use crate::rng::{MasterSeed, StreamRng};
use crate::stats::{bootstrap_se, covariance, mean, mean_and_se, EstimateWithError};

/// Pattern counts of every replication at every checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRuns {
    pub n: usize,
    pub patterns: Vec<VoterPattern>,
    pub times: Vec<f64>,
    /// `values[r][i * times.len() + p]` is `X_i(t_p)` in replication `r`.
    pub values: Vec<Vec<f64>>,
}

impl CountRuns {
    pub fn dim(&self) -> usize {
        self.patterns.len() * self.times.len()
    }

    pub fn coordinate(&self, pattern: usize, time: usize) -> usize {
        pattern * self.times.len() + time
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[k]).collect()
    }
}

fn check_times(times: &[f64]) -> Result<f64> {
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::UnsortedTimes);
    }
    match times.last() {
        None => Err(Error::InvalidParameter {
            name: "times",
            reason: "no checkpoint times".into(),
        }),
        Some(_) if times[0] < 0.0 => Err(Error::TimeOutOfRange {
            time: times[0],
            horizon: f64::INFINITY,
        }),
        Some(&last) => Ok(last),
    }
}

/// Simulates `mc.replications` independent `n`-vertex systems (with
/// `params.n`) and counts every pattern at every checkpoint. Edges are
/// generated only where the counting search probes them. A single
/// replication is allowed here; the estimators built on top need two.
pub fn simulate_count_runs(
    params: &OneWayParams,
    patterns: &[VoterPattern],
    times: &[f64],
    mc: &McConfig,
) -> Result<CountRuns> {
    let last = check_times(times)?;
    let sys = OneWayParams {
        horizon: last.max(f64::MIN_POSITIVE),
        ..*params
    };
    sys.validate()?;
    let counters = patterns.iter().map(PatternCounter::new).collect::<Result<Vec<_>>>()?;
    let master = MasterSeed(mc.seed);
    let values = map_indexed(mc.replications, mc.workers, |r| {
        let traj = build_one_way_trajectory(&sys, master.replication(r as u64)).expect("validated parameters");
        let mut row = vec![0.0; counters.len() * times.len()];
        for (p, &t) in times.iter().enumerate() {
            let view = traj.view_at(t).expect("time within horizon");
            for (i, c) in counters.iter().enumerate() {
                row[i * times.len() + p] = c.count(&view) as f64;
            }
        }
        row
    });
    Ok(CountRuns {
        n: params.n,
        patterns: patterns.to_vec(),
        times: times.to_vec(),
        values,
    })
}

/// Covariance of two full counts together with its `n`-scaled version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullCovariance {
    pub n: usize,
    pub covariance: EstimateWithError,
    /// `Cov / n^{V_i + V_j - 1}`.
    pub scaled: EstimateWithError,
    pub mean_i: EstimateWithError,
    pub mean_j: EstimateWithError,
}

/// Sample covariance of `X_i(s)` and `X_j(t)` from `runs`.
pub fn covariance_from_runs(runs: &CountRuns, i: usize, s: usize, j: usize, t: usize) -> Result<FullCovariance> {
    let a = runs.column(runs.coordinate(i, s));
    let b = runs.column(runs.coordinate(j, t));
    let cov = covariance(&a, &b)?;
    let exponent = runs.patterns[i].vertex_count() + runs.patterns[j].vertex_count() - 1;
    let scale = (runs.n as f64).powi(exponent as i32);
    Ok(FullCovariance {
        n: runs.n,
        covariance: cov,
        scaled: cov.scaled(1.0 / scale),
        mean_i: mean_and_se(&a)?,
        mean_j: mean_and_se(&b)?,
    })
}

/// `Cov(X_{n,i}(s), X_{n,j}(t))` from full simulations on `n` vertices.
#[allow(clippy::too_many_arguments)]
pub fn estimate_full_covariance(
    n: usize,
    hi: &VoterPattern,
    hj: &VoterPattern,
    s: f64,
    t: f64,
    params: &OneWayParams,
    mc: &McConfig,
) -> Result<FullCovariance> {
    let need = hi.vertex_count() + hj.vertex_count();
    if n < need {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!("need at least {need} vertices"),
        });
    }
    let mut times = vec![s, t];
    times.sort_by(f64::total_cmp);
    times.dedup();
    let runs = simulate_count_runs(&params.with_n(n), &[hi.clone(), hj.clone()], &times, mc)?;
    let pos = |x: f64| times.iter().position(|&y| y == x).expect("time listed");
    covariance_from_runs(&runs, 0, pos(s), 1, pos(t))
}

/// Where the mean used for centering came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// `n! P_H(t) / ((n - V)! A(H))` with `P_H` from closed form or quadrature.
    Analytic,
    /// Mean over the replications.
    Pooled,
}

/// `(X_i(t_p) - E X_i(t_p)) / n^{V_i - 1/2}` per replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizedSample {
    pub n: usize,
    pub patterns: Vec<VoterPattern>,
    pub times: Vec<f64>,
    /// Same coordinate layout as [`CountRuns`].
    pub values: Vec<Vec<f64>>,
    pub centering: Vec<Centering>,
    pub means: Vec<f64>,
}

impl StandardizedSample {
    pub fn dim(&self) -> usize {
        self.patterns.len() * self.times.len()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[k]).collect()
    }
}

/// Means per coordinate: analytic when `params` is given and a reference
/// value exists, pooled otherwise.
fn centers(runs: &CountRuns, params: Option<&OneWayParams>) -> Result<Vec<(f64, Centering)>> {
    let mut out = Vec::with_capacity(runs.dim());
    for (i, h) in runs.patterns.iter().enumerate() {
        for (p, &t) in runs.times.iter().enumerate() {
            let analytic = match params {
                Some(params) => analytic_p(h, t, params)?,
                None => None,
            };
            out.push(match analytic {
                Some(prob) => (expected_count(runs.n, h, prob)?, Centering::Analytic),
                None => (mean(&runs.column(runs.coordinate(i, p))), Centering::Pooled),
            });
        }
    }
    Ok(out)
}

/// Centers and scales the counts. Pass the model parameters to center with
/// the exact expectation wherever it is available.
pub fn standardize(runs: &CountRuns, params: Option<&OneWayParams>) -> Result<StandardizedSample> {
    if runs.values.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: runs.values.len(),
        });
    }
    let centers = centers(runs, params)?;
    let scales: Vec<f64> = runs
        .patterns
        .iter()
        .flat_map(|h| {
            let s = (runs.n as f64).powf(h.vertex_count() as f64 - 0.5);
            std::iter::repeat_n(s, runs.times.len())
        })
        .collect();
    let values = runs
        .values
        .iter()
        .map(|row| {
            row.iter()
                .zip(&centers)
                .zip(&scales)
                .map(|((x, (m, _)), s)| (x - m) / s)
                .collect()
        })
        .collect();
    Ok(StandardizedSample {
        n: runs.n,
        patterns: runs.patterns.clone(),
        times: runs.times.clone(),
        values,
        centering: centers.iter().map(|c| c.1).collect(),
        means: centers.iter().map(|c| c.0).collect(),
    })
}

/// Independently estimated `C` values for every pair of coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceTargets {
    pub patterns: Vec<VoterPattern>,
    pub times: Vec<f64>,
    /// Row-major `dim x dim`, symmetric.
    pub entries: Vec<EstimateWithError>,
}

impl CovarianceTargets {
    pub fn dim(&self) -> usize {
        self.patterns.len() * self.times.len()
    }

    pub fn get(&self, a: usize, b: usize) -> EstimateWithError {
        self.entries[a * self.dim() + b]
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }

    /// `sigma^2 = sum_{a,b} w_a w_b C_ab` with its SE, treating the distinct
    /// entries as independent estimates.
    pub fn quadratic_form(&self, weights: &[f64]) -> Result<EstimateWithError> {
        let d = self.dim();
        if weights.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: weights.len(),
            });
        }
        let mut value = 0.0;
        let mut var = 0.0;
        let mut reps = usize::MAX;
        for a in 0..d {
            for b in a..d {
                let e = self.get(a, b);
                let coef = weights[a] * weights[b] * if a == b { 1.0 } else { 2.0 };
                value += coef * e.value;
                var += (coef * e.std_error).powi(2);
                reps = reps.min(e.replications);
            }
        }
        Ok(EstimateWithError::new(value, var.sqrt(), reps))
    }
}

/// Seed for the `k`-th independent entry derived from a base seed.
pub(crate) fn derived_seed(base: u64, k: u64) -> u64 {
    base.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Estimates `C_{H_i,H_j}(t_p,t_q)` for every pair of coordinates, each entry
/// with its own seed.
pub fn estimate_c_targets(
    patterns: &[VoterPattern],
    times: &[f64],
    params: &OneWayParams,
    mc: &McConfig,
    method: CMethod,
) -> Result<CovarianceTargets> {
    let nt = times.len();
    let d = patterns.len() * nt;
    let mut entries = vec![EstimateWithError::exact(0.0); d * d];
    let mut k = 0;
    for a in 0..d {
        for b in a..d {
            let (i, p) = (a / nt, a % nt);
            let (j, q) = (b / nt, b % nt);
            let run = McConfig {
                seed: derived_seed(mc.seed, k),
                ..*mc
            };
            let e = estimate_c(
                &patterns[i],
                &patterns[j],
                times[p],
                times[q],
                params,
                &run,
                method,
                Placement::Shared,
            )?;
            entries[a * d + b] = e;
            entries[b * d + a] = e;
            k += 1;
        }
    }
    Ok(CovarianceTargets {
        patterns: patterns.to_vec(),
        times: times.to_vec(),
        entries,
    })
}

/// Largest moment order accepted by [`wick_moments`].
pub const MAX_WICK_ORDER: u32 = 6;

/// Empirical moment of the weighted sum against its Gaussian target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WickMoment {
    pub order: u32,
    pub empirical: EstimateWithError,
    /// `sigma^z (z-1)!!` for even `z`, 0 for odd `z`.
    pub target: EstimateWithError,
}

impl WickMoment {
    pub fn agrees(&self, k: f64) -> bool {
        self.empirical.agrees_with(&self.target, k)
    }
}

fn double_factorial(k: u32) -> f64 {
    (1..=k).rev().step_by(2).map(f64::from).product()
}

/// Moments `E xi^z`, `z = 1..=z_max`, of `xi = <weights, X*>` with bootstrap
/// SEs, against Gaussian targets built from `sigma2`.
pub fn wick_moments(
    sample: &StandardizedSample,
    weights: &[f64],
    z_max: u32,
    sigma2: EstimateWithError,
    resamples: usize,
    rng: &mut StreamRng,
) -> Result<Vec<WickMoment>> {
    if z_max > MAX_WICK_ORDER {
        return Err(Error::InvalidParameter {
            name: "z_max",
            reason: format!("at most {MAX_WICK_ORDER}"),
        });
    }
    if weights.len() != sample.dim() {
        return Err(Error::DimensionMismatch {
            expected: sample.dim(),
            got: weights.len(),
        });
    }
    let xi: Vec<f64> = sample
        .values
        .iter()
        .map(|row| row.iter().zip(weights).map(|(x, w)| x * w).sum())
        .collect();
    let mut out = Vec::new();
    for z in 1..=z_max {
        let power = |xs: &[f64]| mean(&xs.iter().map(|x| x.powi(z as i32)).collect::<Vec<_>>());
        let value = power(&xi);
        let se = bootstrap_se(&xi, resamples, rng, power);
        let target = if z % 2 == 1 {
            EstimateWithError::exact(0.0)
        } else {
            // d/d(sigma^2) of (sigma^2)^{z/2} is (z/2)(sigma^2)^{z/2-1}
            let half = (z / 2) as i32;
            let c = double_factorial(z - 1);
            EstimateWithError::new(
                c * sigma2.value.powi(half),
                c * half as f64 * sigma2.value.abs().powi(half - 1) * sigma2.std_error,
                sigma2.replications,
            )
        };
        out.push(WickMoment {
            order: z,
            empirical: EstimateWithError::new(value, se, xi.len()),
            target,
        });
    }
    Ok(out)
}

/// One increment-moment estimate against the closed-form bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessResult {
    pub i: usize,
    pub j: usize,
    pub r: f64,
    pub s: f64,
    pub t: f64,
    /// `E |X*_i(t) - X*_i(s)|^2 |X*_j(s) - X*_j(r)|^2`.
    pub lhs: EstimateWithError,
    pub rhs: f64,
}

impl TightnessResult {
    pub fn holds(&self, k: f64) -> bool {
        self.lhs.value <= self.rhs + k * self.lhs.std_error
    }
}

/// Estimates the fourth-order increment moment for every pattern pair and
/// every `(r, s, t)` triple, from one set of `n`-vertex simulations.
pub fn tightness_check(
    n: usize,
    patterns: &[VoterPattern],
    triples: &[(f64, f64, f64)],
    params: &OneWayParams,
    mc: &McConfig,
) -> Result<Vec<TightnessResult>> {
    if let Some(&(r, s, t)) = triples.iter().find(|(r, s, t)| !(r <= s && s <= t && *r >= 0.0)) {
        return Err(Error::InvalidParameter {
            name: "triples",
            reason: format!("need 0 <= r <= s <= t, got ({r}, {s}, {t})"),
        });
    }
    let mut times: Vec<f64> = triples.iter().flat_map(|&(r, s, t)| [r, s, t]).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let runs = simulate_count_runs(&params.with_n(n), patterns, &times, mc)?;
    let sample = standardize(&runs, Some(params))?;
    let pos = |x: f64| times.iter().position(|&y| y == x).expect("time listed");
    let mut out = Vec::new();
    for &(r, s, t) in triples {
        for i in 0..patterns.len() {
            for j in 0..patterns.len() {
                let (ti, si) = (runs.coordinate(i, pos(t)), runs.coordinate(i, pos(s)));
                let (sj, rj) = (runs.coordinate(j, pos(s)), runs.coordinate(j, pos(r)));
                let products: Vec<f64> = sample
                    .values
                    .iter()
                    .map(|row| (row[ti] - row[si]).powi(2) * (row[sj] - row[rj]).powi(2))
                    .collect();
                out.push(TightnessResult {
                    i,
                    j,
                    r,
                    s,
                    t,
                    lhs: mean_and_se(&products)?,
                    rhs: tightness_bound(&patterns[i], &patterns[j], params, r, t),
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::Opinion::{Minus as M, Plus as P};

    fn mc(r: usize) -> McConfig {
        McConfig {
            replications: r,
            seed: 17,
            workers: 1,
        }
    }

    #[test]
    fn constant_runs_standardize_to_zero() {
        let runs = CountRuns {
            n: 10,
            patterns: vec![VoterPattern::edge(P, P)],
            times: vec![1.0],
            values: vec![vec![5.0]; 4],
        };
        let s = standardize(&runs, None).unwrap();
        assert!(s.values.iter().all(|row| row[0] == 0.0));
        assert_eq!(s.centering, vec![Centering::Pooled]);
    }

    #[test]
    fn degenerate_triple_gives_zero_increment() {
        let params = OneWayParams::default();
        let pats = [VoterPattern::edge(P, P), VoterPattern::edge(P, M)];
        let res = tightness_check(12, &pats, &[(0.5, 0.5, 1.0)], &params, &mc(20)).unwrap();
        assert!(res.iter().all(|r| r.lhs.value == 0.0));
    }

    #[test]
    fn double_factorials() {
        assert_eq!(double_factorial(1), 1.0);
        assert_eq!(double_factorial(3), 3.0);
        assert_eq!(double_factorial(5), 15.0);
    }

    #[test]
    fn quadratic_form_counts_off_diagonal_twice() {
        let e = |v| EstimateWithError::new(v, 0.1, 10);
        let targets = CovarianceTargets {
            patterns: vec![VoterPattern::edge(P, P)],
            times: vec![1.0, 2.0],
            entries: vec![e(1.0), e(0.5), e(0.5), e(2.0)],
        };
        let s = targets.quadratic_form(&[1.0, 1.0]).unwrap();
        assert!((s.value - 4.0).abs() < 1e-15);
        assert!((s.std_error - (0.01f64 + 0.04 + 0.01).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn runs_are_deterministic_across_workers() {
        let params = OneWayParams {
            n: 15,
            ..Default::default()
        };
        let pats = [VoterPattern::edge(P, P)];
        let one = simulate_count_runs(&params, &pats, &[0.5, 1.0], &mc(30)).unwrap();
        let many = simulate_count_runs(&params, &pats, &[0.5, 1.0], &McConfig { workers: 3, ..mc(30) }).unwrap();
        assert_eq!(one, many);
    }
}
