//! Estimators that only need a handful of vertices: `P_H(t)` and the
//! covariance constant `C_{H,H'}(s,t)`.
//!
//! The law of a placement does not depend on which labels it uses, so these
//! run on systems with exactly as many vertices as the placements need.

use serde::{Deserialize, Serialize};

use super::McConfig;
use crate::dynamics::{build_one_way_trajectory, graphon_value, vertex_type, OneWayParams, OneWayTrajectory};
use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::patterns::{enumerate_labeled_copies, LabeledVoterGraph, VoterPattern};
use crate::rng::MasterSeed;
use crate::stats::{covariance, mean_and_se, EstimateWithError};

/// How placement indicators are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CMethod {
    /// Simulate the edges and use the indicator itself.
    Naive,
    /// Simulate only opinion paths and replace each indicator by its
    /// conditional expectation given the paths.
    RaoBlackwell,
}

/// Relative position of the two label sets in [`estimate_c`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// The sets share exactly one vertex (the definition of `C`).
    Shared,
    /// The sets are disjoint; in the one-way model the covariance is zero.
    Disjoint,
}

fn system(params: &OneWayParams, n: usize, horizon: f64) -> OneWayParams {
    // the horizon only needs to cover the query times
    OneWayParams {
        n,
        horizon: horizon.max(f64::MIN_POSITIVE),
        ..*params
    }
}

/// Indicator or its conditional expectation, summed over `copies` at time `t`.
fn copy_sum(traj: &OneWayTrajectory, copies: &[LabeledVoterGraph], t: f64, method: CMethod) -> f64 {
    let mut total = 0.0;
    match method {
        CMethod::Naive => {
            for h in copies {
                let present = h.vertices().all(|(l, o)| traj.path(l).opinion_at(t) == o)
                    && h.edges().iter().all(|&(u, v)| traj.edge_active(u, v, t));
                total += present as u8 as f64;
            }
        }
        CMethod::RaoBlackwell => {
            let types: Vec<f64> = traj.paths().iter().map(|p| vertex_type(p, 0.0, t)).collect();
            for h in copies {
                if h.vertices().any(|(l, o)| traj.path(l).opinion_at(t) != o) {
                    continue;
                }
                // distinct edges are conditionally independent given the paths
                total += h
                    .edges()
                    .iter()
                    .map(|&(u, v)| graphon_value(traj.params(), t, types[u], types[v]))
                    .product::<f64>();
            }
        }
    }
    total
}

fn estimate_p(
    h: &VoterPattern,
    t: f64,
    params: &OneWayParams,
    mc: &McConfig,
    method: CMethod,
) -> Result<EstimateWithError> {
    mc.check()?;
    let v = h.vertex_count();
    let sys = system(params, v, t);
    sys.validate()?;
    let copy = [LabeledVoterGraph::place(h, &(0..v).collect::<Vec<_>>())?];
    let master = MasterSeed(mc.seed);
    let values = map_indexed(mc.replications, mc.workers, |r| {
        let traj = build_one_way_trajectory(&sys, master.replication(r as u64)).expect("validated parameters");
        copy_sum(&traj, &copy, t, method)
    });
    mean_and_se(&values)
}

/// Plain Monte Carlo estimate of `P_H(t)` on a `V(H)`-vertex system.
pub fn mc_estimate_p(h: &VoterPattern, t: f64, params: &OneWayParams, mc: &McConfig) -> Result<EstimateWithError> {
    estimate_p(h, t, params, mc, CMethod::Naive)
}

/// Rao-Blackwellized estimate of `P_H(t)`. Uses the same vertex streams as
/// [`mc_estimate_p`], so for edgeless patterns the two agree run by run.
pub fn rb_estimate_p(h: &VoterPattern, t: f64, params: &OneWayParams, mc: &McConfig) -> Result<EstimateWithError> {
    estimate_p(h, t, params, mc, CMethod::RaoBlackwell)
}

/// Label sets `(v1, v2)` for two patterns under `placement`.
pub fn placement_labels(v1: usize, v2: usize, placement: Placement) -> (Vec<usize>, Vec<usize>) {
    match placement {
        Placement::Shared => overlap_labels(v1, v2, 1),
        Placement::Disjoint => overlap_labels(v1, v2, 0),
    }
}

/// Label sets of two patterns that share exactly `k` labels.
pub fn overlap_labels(v1: usize, v2: usize, k: usize) -> (Vec<usize>, Vec<usize>) {
    let first: Vec<usize> = (0..v1).collect();
    let second: Vec<usize> = (0..k).chain(v1..v1 + v2 - k).collect();
    (first, second)
}

/// Covariance of the summed indicators over `G_{v1}(H)` at `s` and
/// `G_{v2}(H')` at `t` for label sets sharing exactly `k` vertices.
///
/// Rao-Blackwellization is exact when `k <= 1`: such placements have no edge
/// in common, and distinct edges are independent given the opinion paths, so
/// the conditional covariance vanishes and only the covariance of the
/// conditional expectations remains. With `k >= 2` a common edge makes the
/// conditional covariance nonzero, so the naive method is required.
#[allow(clippy::too_many_arguments)]
pub fn estimate_overlap_covariance(
    h: &VoterPattern,
    h2: &VoterPattern,
    s: f64,
    t: f64,
    k: usize,
    params: &OneWayParams,
    mc: &McConfig,
    method: CMethod,
) -> Result<EstimateWithError> {
    mc.check()?;
    if k > h.vertex_count().min(h2.vertex_count()) || (k >= 2 && method == CMethod::RaoBlackwell) {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: format!("overlap {k} is not supported with {method:?}"),
        });
    }
    let (v1, v2) = overlap_labels(h.vertex_count(), h2.vertex_count(), k);
    let n = v1.iter().chain(&v2).max().map_or(0, |m| m + 1);
    let sys = system(params, n, s.max(t));
    sys.validate()?;
    let copies1 = enumerate_labeled_copies(&v1, h)?;
    let copies2 = enumerate_labeled_copies(&v2, h2)?;
    let master = MasterSeed(mc.seed);
    let pairs = map_indexed(mc.replications, mc.workers, |r| {
        let traj = build_one_way_trajectory(&sys, master.replication(r as u64)).expect("validated parameters");
        (
            copy_sum(&traj, &copies1, s, method),
            copy_sum(&traj, &copies2, t, method),
        )
    });
    let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    covariance(&a, &b)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `C_{H,H'}(s,t)`: covariance of the summed indicators over `G_{v1}(H)` at
/// `s` and `G_{v2}(H')` at `t`, divided by `(V-1)!(V'-1)!`. The
/// Rao-Blackwell variant is exact at all `s, t`; see
/// [`estimate_overlap_covariance`].
#[allow(clippy::too_many_arguments)]
pub fn estimate_c(
    h: &VoterPattern,
    h2: &VoterPattern,
    s: f64,
    t: f64,
    params: &OneWayParams,
    mc: &McConfig,
    method: CMethod,
    placement: Placement,
) -> Result<EstimateWithError> {
    let k = match placement {
        Placement::Shared => 1,
        Placement::Disjoint => 0,
    };
    let cov = estimate_overlap_covariance(h, h2, s, t, k, params, mc, method)?;
    let scale = factorial(h.vertex_count() - 1) * factorial(h2.vertex_count() - 1);
    Ok(cov.scaled(1.0 / scale))
}

/// `Cov(X_i(s), X_j(t))` at finite `n`, summed over label-set overlaps:
/// `sum_k C(n, V) C(V, k) C(n - V, V' - k) D_k` with `D_k` the covariance of
/// summed indicators on two sets sharing `k` labels. Disjoint sets are
/// independent in the one-way model, so `k` starts at 1. The `k = 1` term
/// uses `method`, larger overlaps the naive method; every term gets its own
/// seed.
#[allow(clippy::too_many_arguments)]
pub fn finite_n_covariance(
    n: usize,
    h: &VoterPattern,
    h2: &VoterPattern,
    s: f64,
    t: f64,
    params: &OneWayParams,
    mc: &McConfig,
    method: CMethod,
) -> Result<EstimateWithError> {
    let (v1, v2) = (h.vertex_count(), h2.vertex_count());
    let binom = |a: usize, b: usize| -> f64 {
        if b > a {
            0.0
        } else {
            (0..b).map(|i| (a - i) as f64 / (i + 1) as f64).product()
        }
    };
    let mut value = 0.0;
    let mut var = 0.0;
    let mut reps = usize::MAX;
    for k in 1..=v1.min(v2) {
        let pairs = binom(n, v1) * binom(v1, k) * binom(n - v1, v2 - k);
        let run = McConfig {
            seed: super::full::derived_seed(mc.seed, k as u64),
            ..*mc
        };
        let m = if k == 1 { method } else { CMethod::Naive };
        let d = estimate_overlap_covariance(h, h2, s, t, k, params, &run, m)?;
        value += pairs * d.value;
        var += (pairs * d.std_error).powi(2);
        reps = reps.min(d.replications);
    }
    Ok(EstimateWithError::new(value, var.sqrt(), reps))
}
