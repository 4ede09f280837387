//! Closed-form and quadrature values used as references.

use super::quadrature::adaptive_simpson;
use crate::dynamics::{graphon_value, marginal, transition_probability, OneWayParams};
use crate::error::{Error, Result};
use crate::patterns::{enumerate_labeled_copies, labeled_copy_count, Opinion, VoterPattern};

/// Absolute tolerance of the edge-probability quadrature.
pub const QUADRATURE_TOL: f64 = 1e-8;

/// Slack allowed on the type domain before a query is rejected.
const TYPE_SLACK: f64 = 1e-9;

/// Limiting edge probability between vertices of types `u` and `v` at time
/// `t` (zero initial types, so types live in `[0, 1 - e^{-t}]`).
pub fn graphon_h(t: f64, u: f64, v: f64, params: &OneWayParams) -> Result<f64> {
    let upper = 1.0 - (-t).exp();
    for value in [u, v] {
        if !(-TYPE_SLACK..=upper + TYPE_SLACK).contains(&value) {
            return Err(Error::TypeDomain { value, upper });
        }
    }
    Ok(graphon_value(params, t, u, v))
}

const OPINIONS: [Opinion; 2] = [Opinion::Plus, Opinion::Minus];

/// `P(x(s) = a, x(t) = o)` for `s <= t`.
fn joint(params: &OneWayParams, a: Opinion, s: f64, o: Opinion, t: f64) -> f64 {
    marginal(params, a, s) * transition_probability(params, a, o, t - s)
}

/// Probability that a fixed edge is active at `t` with endpoint opinions
/// `o1`, `o2`.
///
/// Conditioning on the last ring: with probability `e^{-t}` there is none and
/// the initial Bernoulli(p0) state survives; otherwise the last ring is at `s`
/// with density `e^{-(t-s)}` and succeeds with the ring probability of the
/// opinions at `s`.
pub fn analytic_p_edge(t: f64, o1: Opinion, o2: Opinion, params: &OneWayParams) -> Result<f64> {
    let no_ring = (-t).exp() * params.p0 * marginal(params, o1, t) * marginal(params, o2, t);
    let integrand = |s: f64| {
        let mut acc = 0.0;
        for a in OPINIONS {
            let ja = joint(params, a, s, o1, t);
            for b in OPINIONS {
                acc += params.ring_probability(a, b) * ja * joint(params, b, s, o2, t);
            }
        }
        (-(t - s)).exp() * acc
    };
    Ok(no_ring + adaptive_simpson(integrand, 0.0, t, QUADRATURE_TOL)?)
}

/// `P_H(t)` when a closed form or quadrature is available: single vertices,
/// single edges, and two isolated vertices.
pub fn analytic_p(h: &VoterPattern, t: f64, params: &OneWayParams) -> Result<Option<f64>> {
    Ok(match (h.vertex_count(), h.edge_count()) {
        (1, 0) => Some(marginal(params, h.opinion(0), t)),
        (2, 0) => Some(marginal(params, h.opinion(0), t) * marginal(params, h.opinion(1), t)),
        (2, 1) => Some(analytic_p_edge(t, h.opinion(0), h.opinion(1), params)?),
        _ => None,
    })
}

/// `E X_n(t) = n! P / ((n - V)! A(H))`.
pub fn expected_count(n: usize, h: &VoterPattern, p: f64) -> Result<f64> {
    Ok(labeled_copy_count(n, h)? as f64 * p)
}

/// `C_{H,H'}(s,t)` for two-vertex patterns when `pi_+ = pi_-`.
///
/// With an opinion-blind edge law the two edges of the shared-vertex
/// placements are independent of each other and of every opinion, so the
/// covariance reduces to that of functions of the shared vertex's opinion at
/// `s` and `t`, weighted by the edge probabilities. Returns `None` outside
/// that setting.
pub fn analytic_c_flat(
    h: &VoterPattern,
    h2: &VoterPattern,
    s: f64,
    t: f64,
    params: &OneWayParams,
) -> Result<Option<f64>> {
    if params.pi_plus != params.pi_minus || h.vertex_count() != 2 || h2.vertex_count() != 2 {
        return Ok(None);
    }
    if s > t {
        return analytic_c_flat(h2, h, t, s, params);
    }
    let edge = |x: f64| params.p0 * (-x).exp() + params.pi_plus * (1.0 - (-x).exp());
    // expected number of matching copies given the shared vertex's opinion
    let given = |p: &VoterPattern, a: Opinion, x: f64| -> Result<f64> {
        Ok(enumerate_labeled_copies(&[0, 1], p)?
            .iter()
            .filter(|c| c.opinion_of(0) == Some(a))
            .map(|c| marginal(params, c.opinion_of(1).expect("label in copy"), x))
            .sum())
    };
    let mut cross = 0.0;
    let mut mean_f = 0.0;
    let mut mean_g = 0.0;
    for a in OPINIONS {
        let f = given(h, a, s)?;
        mean_f += marginal(params, a, s) * f;
        mean_g += marginal(params, a, t) * given(h2, a, t)?;
        for b in OPINIONS {
            cross += joint(params, a, s, b, t) * f * given(h2, b, t)?;
        }
    }
    let weight = |p: &VoterPattern, x: f64| if p.edge_count() == 1 { edge(x) } else { 1.0 };
    Ok(Some(weight(h, s) * weight(h2, t) * (cross - mean_f * mean_g)))
}

/// `F_ij = 4 max(gamma_-+, gamma_+-, pi_+, pi_-) (V_i + E_i + V_j + E_j)`.
pub fn tightness_constant(hi: &VoterPattern, hj: &VoterPattern, params: &OneWayParams) -> f64 {
    let rate = params
        .gamma_mp
        .max(params.gamma_pm)
        .max(params.pi_plus)
        .max(params.pi_minus);
    let size = hi.vertex_count() + hi.edge_count() + hj.vertex_count() + hj.edge_count();
    4.0 * rate * size as f64
}

/// `((2 (V_i + V_j) - 2)!)^3 F_ij^2 |t - r|^2`.
pub fn tightness_bound(hi: &VoterPattern, hj: &VoterPattern, params: &OneWayParams, r: f64, t: f64) -> f64 {
    let k = 2 * (hi.vertex_count() + hj.vertex_count()) - 2;
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    let f = tightness_constant(hi, hj, params);
    fact.powi(3) * f * f * (t - r) * (t - r)
}
