//! Disjoint-placement moment constants of the two-way model.
//!
//! Each replication splits `[n]` into `floor(n / V)` disjoint blocks of `V`
//! consecutive labels. By exchangeability every block, and every set of
//! distinct blocks, has the same joint law, so the mixed moments are averaged
//! over all block subsets of each replication, which uses the whole graph
//! instead of one fixed placement.

use serde::{Deserialize, Serialize};

use super::full::CountRuns;
use super::McConfig;
use crate::counting::{indicator, PatternCounter};
use crate::dynamics::{TwoWayEngine, TwoWayParams};
use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::patterns::{automorphism_count, enumerate_labeled_copies, LabeledVoterGraph, VoterPattern};
use crate::rng::MasterSeed;
use crate::stats::{covariance, mean, mean_and_se, EstimateWithError};

/// Which block tuples enter the moment average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockPooling {
    /// Only the first `z` blocks, one fixed placement per replication.
    Fixed,
    /// Every set of `z` distinct blocks.
    Pooled,
}

/// Per-replication block statistics of a two-way simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoWayRuns {
    pub n: usize,
    pub pattern: VoterPattern,
    pub times: Vec<f64>,
    /// `|G_v(H)|`, the number of labeled copies on one block.
    pub copies_per_block: usize,
    /// `block_means[r][p][b]`: fraction of the copies on block `b` present at
    /// `t_p` in replication `r`.
    pub block_means: Vec<Vec<Vec<f64>>>,
    /// `counts[r][p]`: full count `X_n(t_p)`.
    pub counts: Vec<Vec<f64>>,
}

impl TwoWayRuns {
    pub fn blocks(&self) -> usize {
        self.n / self.pattern.vertex_count()
    }

    pub fn time_index(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&s| s == t)
            .ok_or_else(|| Error::InvalidParameter {
                name: "t",
                reason: format!("{t} is not a simulated checkpoint"),
            })
    }

    /// Pooled estimate of `P_H(t_p)` over all blocks and replications.
    pub fn p_hat(&self, p: usize) -> f64 {
        let per_rep: Vec<f64> = self.block_means.iter().map(|r| mean(&r[p])).collect();
        mean(&per_rep)
    }
}

/// Streams one two-way run per replication through every checkpoint and
/// records block indicators and the full count.
pub fn simulate_two_way_blocks(
    params: &TwoWayParams,
    h: &VoterPattern,
    times: &[f64],
    mc: &McConfig,
) -> Result<TwoWayRuns> {
    mc.check()?;
    let v = h.vertex_count();
    if params.n < 2 * v {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!("need at least {} vertices for two disjoint placements", 2 * v),
        });
    }
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::UnsortedTimes);
    }
    let horizon = times.last().copied().unwrap_or(0.0);
    if let Some(&bad) = times.iter().find(|&&t| t < 0.0) {
        return Err(Error::TimeOutOfRange { time: bad, horizon });
    }
    let sys = params.with_horizon(horizon.max(f64::MIN_POSITIVE));
    sys.validate()?;
    let blocks = params.n / v;
    let copies: Vec<Vec<LabeledVoterGraph>> = (0..blocks)
        .map(|b| enumerate_labeled_copies(&(b * v..(b + 1) * v).collect::<Vec<_>>(), h))
        .collect::<Result<_>>()?;
    let per_block = copies[0].len();
    let counter = PatternCounter::new(h)?;
    let master = MasterSeed(mc.seed);
    let rows = map_indexed(mc.replications, mc.workers, |r| {
        let mut engine = TwoWayEngine::new(&sys, master.replication(r as u64)).expect("validated parameters");
        let mut means = Vec::with_capacity(times.len());
        let mut counts = Vec::with_capacity(times.len());
        for &t in times {
            engine.advance_to(t, |_, _| {});
            means.push(
                copies
                    .iter()
                    .map(|block| {
                        let present = block
                            .iter()
                            .filter(|c| indicator(c, &engine).expect("labels within range"))
                            .count();
                        present as f64 / per_block as f64
                    })
                    .collect(),
            );
            counts.push(counter.count(&engine) as f64);
        }
        (means, counts)
    });
    let (block_means, counts) = rows.into_iter().unzip();
    Ok(TwoWayRuns {
        n: params.n,
        pattern: h.clone(),
        times: times.to_vec(),
        copies_per_block: per_block,
        block_means,
        counts,
    })
}

/// Pattern counts of independent two-way runs at every checkpoint, in the
/// layout of [`CountRuns`].
pub fn simulate_two_way_counts(
    params: &TwoWayParams,
    patterns: &[VoterPattern],
    times: &[f64],
    mc: &McConfig,
) -> Result<CountRuns> {
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::UnsortedTimes);
    }
    let horizon = times.last().copied().unwrap_or(0.0);
    if let Some(&bad) = times.iter().find(|&&t| t < 0.0) {
        return Err(Error::TimeOutOfRange { time: bad, horizon });
    }
    let sys = params.with_horizon(horizon.max(f64::MIN_POSITIVE));
    sys.validate()?;
    let counters = patterns.iter().map(PatternCounter::new).collect::<Result<Vec<_>>>()?;
    let master = MasterSeed(mc.seed);
    let values = map_indexed(mc.replications, mc.workers, |r| {
        let mut engine = TwoWayEngine::new(&sys, master.replication(r as u64)).expect("validated parameters");
        let mut row = vec![0.0; counters.len() * times.len()];
        for (p, &t) in times.iter().enumerate() {
            engine.advance_to(t, |_, _| {});
            for (i, c) in counters.iter().enumerate() {
                row[i * times.len() + p] = c.count(&engine) as f64;
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

/// Elementary symmetric polynomial `e_z(xs)`.
fn elementary_symmetric(xs: &[f64], z: usize) -> f64 {
    let mut e = vec![0.0; z + 1];
    e[0] = 1.0;
    for &x in xs {
        for k in (1..=z.min(xs.len())).rev() {
            e[k] += x * e[k - 1];
        }
    }
    e[z]
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product()
}

/// `E prod_k (I(h_k) - P)` over `z` disjoint placements, per copy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisjointMoment {
    pub n: usize,
    pub t: f64,
    pub z: usize,
    /// Divided by `A(H)^z`, the two-way constant as defined.
    pub normalized: EstimateWithError,
    /// Per-copy mixed moment without normalization.
    pub raw: EstimateWithError,
    /// Plug-in mean used for centering; it comes from the same runs, which
    /// biases the moment by `O(1 / R)`.
    pub p_hat: f64,
    pub pooling: BlockPooling,
}

/// Mixed central moment of order `z` over disjoint blocks at `t_p`.
pub fn disjoint_moment(runs: &TwoWayRuns, p: usize, z: usize, pooling: BlockPooling) -> Result<DisjointMoment> {
    let blocks = runs.blocks();
    if z < 2 || z > blocks {
        return Err(Error::InvalidParameter {
            name: "z",
            reason: format!("need 2 <= z <= {blocks} disjoint placements"),
        });
    }
    let p_hat = runs.p_hat(p);
    let used = match pooling {
        BlockPooling::Fixed => z,
        BlockPooling::Pooled => blocks,
    };
    let tuples = binomial(used, z);
    let w: Vec<f64> = runs
        .block_means
        .iter()
        .map(|rep| {
            let centered: Vec<f64> = rep[p][..used].iter().map(|x| x - p_hat).collect();
            elementary_symmetric(&centered, z) / tuples
        })
        .collect();
    let raw = mean_and_se(&w)?;
    if z == 2 {
        // covariance of [0, 1]-valued means with a common plug-in centre
        assert!(
            raw.value.abs() <= 0.25 + 1e-12,
            "indicator covariance {} outside [-1/4, 1/4]",
            raw.value
        );
    }
    let a = automorphism_count(&runs.pattern)? as f64;
    Ok(DisjointMoment {
        n: runs.n,
        t: runs.times[p],
        z,
        normalized: raw.scaled(a.powi(-(z as i32))),
        raw,
        p_hat,
        pooling,
    })
}

/// `Var(X_n(t_p)) / n^{2V}`, the variance of the count at the scale used for
/// the two-way limit.
pub fn scaled_count_variance(runs: &TwoWayRuns, p: usize) -> Result<EstimateWithError> {
    let x: Vec<f64> = runs.counts.iter().map(|c| c[p]).collect();
    let scale = (runs.n as f64).powi(2 * runs.pattern.vertex_count() as i32);
    Ok(covariance(&x, &x)?.scaled(1.0 / scale))
}

/// Both normalizations of the two-way covariance constant and the count
/// variance diagnostic at one `(n, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CPrimeEstimate {
    pub moment: DisjointMoment,
    pub count_variance: EstimateWithError,
}

/// Estimates the covariance constant of two disjoint placements of `h` in the
/// two-way model on `n` vertices at time `t`.
pub fn estimate_cprime(
    n: usize,
    h: &VoterPattern,
    t: f64,
    params: &TwoWayParams,
    mc: &McConfig,
) -> Result<CPrimeEstimate> {
    let runs = simulate_two_way_blocks(&params.with_n(n), h, &[t], mc)?;
    Ok(CPrimeEstimate {
        moment: disjoint_moment(&runs, 0, 2, BlockPooling::Pooled)?,
        count_variance: scaled_count_variance(&runs, 0)?,
    })
}

/// Estimates the order-`z` constant of `z` disjoint placements.
pub fn estimate_cz(
    n: usize,
    h: &VoterPattern,
    t: f64,
    z: usize,
    params: &TwoWayParams,
    mc: &McConfig,
) -> Result<DisjointMoment> {
    if n < z * h.vertex_count() {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!(
                "need at least {} vertices for {z} disjoint placements",
                z * h.vertex_count()
            ),
        });
    }
    let runs = simulate_two_way_blocks(&params.with_n(n), h, &[t], mc)?;
    disjoint_moment(&runs, 0, z, BlockPooling::Pooled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::Opinion::Plus as P;

    fn mc(r: usize) -> McConfig {
        McConfig {
            replications: r,
            seed: 5,
            workers: 1,
        }
    }

    #[test]
    fn elementary_symmetric_matches_direct_sums() {
        let xs = [0.3, -1.2, 2.0, 0.7];
        let mut e2 = 0.0;
        let mut e3 = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                e2 += xs[i] * xs[j];
                for k in j + 1..4 {
                    e3 += xs[i] * xs[j] * xs[k];
                }
            }
        }
        assert!((elementary_symmetric(&xs, 2) - e2).abs() < 1e-12);
        assert!((elementary_symmetric(&xs, 3) - e3).abs() < 1e-12);
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(5, 0), 1.0);
    }

    #[test]
    fn frozen_opinions_give_zero_covariance() {
        let params = TwoWayParams {
            beta: 0.0,
            ..Default::default()
        };
        let h = VoterPattern::edge(P, P);
        let est = estimate_cprime(40, &h, 1.0, &params, &mc(400)).unwrap();
        let zero = EstimateWithError::exact(0.0);
        assert!(est.moment.raw.agrees_with(&zero, 4.0), "{:?}", est.moment.raw);
        assert_eq!(est.moment.normalized.value, est.moment.raw.value / 4.0);
    }

    #[test]
    fn fixed_pooling_uses_first_blocks() {
        let runs = TwoWayRuns {
            n: 6,
            pattern: VoterPattern::edge(P, P),
            times: vec![1.0],
            copies_per_block: 1,
            block_means: vec![vec![vec![1.0, 1.0, 0.0]], vec![vec![0.0, 0.0, 1.0]]],
            counts: vec![vec![1.0], vec![1.0]],
        };
        let fixed = disjoint_moment(&runs, 0, 2, BlockPooling::Fixed).unwrap();
        assert!((fixed.raw.value - 0.25).abs() < 1e-15);
        let pooled = disjoint_moment(&runs, 0, 2, BlockPooling::Pooled).unwrap();
        assert!((pooled.raw.value - (0.25 - 0.25 - 0.25 + 0.25 - 0.25 - 0.25) / 6.0).abs() < 1e-15);
        assert!(disjoint_moment(&runs, 0, 4, BlockPooling::Pooled).is_err());
    }

    #[test]
    fn too_few_vertices_is_rejected() {
        let h = VoterPattern::edge(P, P);
        assert!(estimate_cprime(3, &h, 1.0, &TwoWayParams::default(), &mc(10)).is_err());
        assert!(estimate_cz(5, &h, 1.0, 3, &TwoWayParams::default(), &mc(10)).is_err());
    }
}
