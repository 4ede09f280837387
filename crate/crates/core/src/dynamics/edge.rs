use rand::Rng;
use rand_distr::Exp1;

use super::params::OneWayParams;
use super::path::{vertex_type, OpinionPath};

/// Ring process of one edge on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeHistory {
    pub initial: bool,
    /// `(ring time, active after the ring)`, increasing in time.
    pub rings: Vec<(f64, bool)>,
}

impl EdgeHistory {
    /// Outcome of the last ring at or before `t`, else the initial state.
    #[inline]
    pub fn active_at(&self, t: f64) -> bool {
        let k = self.rings.partition_point(|&(s, _)| s <= t);
        if k == 0 {
            self.initial
        } else {
            self.rings[k - 1].1
        }
    }

    /// Ring times at which the state actually changes.
    pub fn changes(&self) -> impl Iterator<Item = (f64, bool)> + '_ {
        let mut state = self.initial;
        self.rings.iter().filter_map(move |&(s, a)| {
            if a != state {
                state = a;
                Some((s, a))
            } else {
                None
            }
        })
    }
}

/// Samples the full ring sequence of edge `{u, v}` given both endpoint
/// paths. Each ring draws one uniform and compares it with the ring
/// probability for the opinions current at the ring time.
pub fn sample_edge_history<R: Rng + ?Sized>(
    params: &OneWayParams,
    path_u: &OpinionPath,
    path_v: &OpinionPath,
    rng: &mut R,
) -> EdgeHistory {
    let initial = rng.random::<f64>() < params.p0;
    let mut rings = Vec::new();
    let mut t = 0.0;
    loop {
        let gap: f64 = rng.sample(Exp1);
        t += gap;
        if t > params.horizon {
            break;
        }
        let p = params.ring_probability(path_u.opinion_at(t), path_v.opinion_at(t));
        rings.push((t, rng.random::<f64>() < p));
    }
    EdgeHistory { initial, rings }
}

/// Graphon value `p0 e^{-t} + (pi+ (u+v) + pi- (2(1-e^{-t}) - u - v)) / 2`,
/// without domain checks; clamped to `[0, 1]`.
#[inline]
pub(crate) fn graphon_value(params: &OneWayParams, t: f64, u: f64, v: f64) -> f64 {
    let decay = (-t).exp();
    let mass = 1.0 - decay;
    let value = params.p0 * decay
        + 0.5 * (params.pi_plus * u + params.pi_minus * (mass - u) + params.pi_plus * v + params.pi_minus * (mass - v));
    value.clamp(0.0, 1.0)
}

/// Exact `P(edge active at t | both opinion paths)`.
///
/// Given the paths the last ring before `t` is at `t - s` with density
/// `e^{-s}`, and the ring probability is affine in the two `+` indicators, so
/// the conditional probability only depends on the two types (with zero
/// initial type).
pub fn conditional_edge_prob(path_u: &OpinionPath, path_v: &OpinionPath, t: f64, params: &OneWayParams) -> f64 {
    let yu = vertex_type(path_u, 0.0, t);
    let yv = vertex_type(path_v, 0.0, t);
    graphon_value(params, t, yu, yv)
}
