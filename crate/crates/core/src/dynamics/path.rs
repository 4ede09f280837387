use rand::Rng;
use rand_distr::Exp1;

use super::params::OneWayParams;
use crate::error::{Error, Result};
use crate::patterns::Opinion;

/// Piecewise-constant opinion trajectory of one vertex on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionPath {
    pub initial: Opinion,
    /// Strictly increasing flip times in `(0, T]`.
    pub flips: Vec<f64>,
}

impl OpinionPath {
    pub fn constant(o: Opinion) -> Self {
        Self {
            initial: o,
            flips: Vec::new(),
        }
    }

    /// Right-continuous: a flip at exactly `t` is already in effect.
    #[inline]
    pub fn opinion_at(&self, t: f64) -> Opinion {
        let k = self.flips.partition_point(|&f| f <= t);
        if k % 2 == 0 {
            self.initial
        } else {
            self.initial.flip()
        }
    }

    /// Maximal intervals on which the opinion is `+`, clipped to `[0, t]`.
    pub fn plus_intervals(&self, t: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mut start = 0.0;
        let mut current = self.initial;
        let mut flips = self.flips.iter().copied().take_while(move |&f| f <= t);
        let mut done = false;
        std::iter::from_fn(move || loop {
            if done {
                return None;
            }
            let (end, next) = match flips.next() {
                Some(f) => (f, current.flip()),
                None => {
                    done = true;
                    (t, current)
                }
            };
            let piece = (start, end, current);
            start = end;
            current = next;
            if piece.2.is_plus() && piece.1 > piece.0 {
                return Some((piece.0, piece.1));
            }
        })
    }
}

/// Samples the two-state chain exactly by alternating exponential holding
/// times.
pub fn simulate_opinion_path<R: Rng + ?Sized>(params: &OneWayParams, rng: &mut R) -> OpinionPath {
    let initial = if rng.random::<f64>() < params.q0 {
        Opinion::Plus
    } else {
        Opinion::Minus
    };
    let mut flips = Vec::new();
    let mut state = initial;
    let mut t = 0.0;
    loop {
        let rate = params.leave_rate(state);
        if rate <= 0.0 {
            break;
        }
        let hold: f64 = rng.sample(Exp1);
        t += hold / rate;
        if t > params.horizon {
            break;
        }
        flips.push(t);
        state = state.flip();
    }
    OpinionPath { initial, flips }
}

/// Closed-form `P(x(t) = +)` for the two-state chain.
pub fn analytic_p_plus(t: f64, params: &OneWayParams) -> f64 {
    let lambda = params.gamma_mp + params.gamma_pm;
    if lambda == 0.0 {
        return params.q0;
    }
    let q_inf = params.gamma_mp / lambda;
    q_inf + (params.q0 - q_inf) * (-lambda * t).exp()
}

/// `P(x(s + tau) = to | x(s) = from)`.
pub fn transition_probability(params: &OneWayParams, from: Opinion, to: Opinion, tau: f64) -> f64 {
    let lambda = params.gamma_mp + params.gamma_pm;
    if lambda == 0.0 {
        return if from == to { 1.0 } else { 0.0 };
    }
    let q_inf = params.gamma_mp / lambda;
    let decay = (-lambda * tau).exp();
    let to_plus = match from {
        Opinion::Plus => q_inf + (1.0 - q_inf) * decay,
        Opinion::Minus => q_inf * (1.0 - decay),
    };
    if to.is_plus() {
        to_plus
    } else {
        1.0 - to_plus
    }
}

/// `P(x(t) = o)`.
pub fn marginal(params: &OneWayParams, o: Opinion, t: f64) -> f64 {
    let p = analytic_p_plus(t, params);
    if o.is_plus() {
        p
    } else {
        1.0 - p
    }
}

/// Generalized type `y(t) = e^{-t} y0 + int_0^t e^{-s} 1{x(t-s) = +} ds`,
/// summed exactly over the `+` pieces of the path.
pub fn vertex_type(path: &OpinionPath, y0: f64, t: f64) -> f64 {
    let mut y = (-t).exp() * y0;
    for (a, b) in path.plus_intervals(t) {
        y += (-(t - b)).exp() - (-(t - a)).exp();
    }
    y
}

/// Same as [`vertex_type`] but rejects times outside `[0, horizon]`.
pub fn vertex_type_checked(path: &OpinionPath, y0: f64, t: f64, horizon: f64) -> Result<f64> {
    if !(0.0..=horizon).contains(&t) {
        return Err(Error::TimeOutOfRange { time: t, horizon });
    }
    Ok(vertex_type(path, y0, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::MasterSeed;
    use Opinion::{Minus as M, Plus as P};

    #[test]
    fn zero_rates_give_constant_path() {
        let params = OneWayParams {
            gamma_mp: 0.0,
            gamma_pm: 0.0,
            ..Default::default()
        };
        let mut rng = MasterSeed(1).aux(0);
        for _ in 0..100 {
            assert!(simulate_opinion_path(&params, &mut rng).flips.is_empty());
        }
    }

    #[test]
    fn absorbing_plus_flips_at_most_once() {
        let params = OneWayParams {
            gamma_mp: 1.0,
            gamma_pm: 0.0,
            q0: 0.0,
            ..Default::default()
        };
        let mut rng = MasterSeed(2).aux(0);
        let mut flipped = 0usize;
        let runs = 20_000;
        for _ in 0..runs {
            let p = simulate_opinion_path(&params, &mut rng);
            assert_eq!(p.initial, M);
            assert!(p.flips.len() <= 1);
            flipped += p.flips.len();
        }
        // P(Exp(1) <= 4)
        let expect = 1.0 - (-4.0f64).exp();
        let freq = flipped as f64 / runs as f64;
        let se = (expect * (1.0 - expect) / runs as f64).sqrt();
        assert!((freq - expect).abs() < 4.0 * se);
    }

    #[test]
    fn analytic_marginal_examples() {
        let p = OneWayParams {
            gamma_mp: 1.0,
            gamma_pm: 1.0,
            q0: 0.0,
            ..Default::default()
        };
        assert_eq!(analytic_p_plus(0.0, &p), 0.0);
        assert!((analytic_p_plus(1.0, &p) - 0.5 * (1.0 - (-2.0f64).exp())).abs() < 1e-15);
        assert!((analytic_p_plus(1.0, &p) - 0.43233).abs() < 1e-5);
        let sym = OneWayParams::default();
        assert_eq!(analytic_p_plus(3.0, &sym), 0.5);
        let frozen = OneWayParams {
            gamma_mp: 0.0,
            gamma_pm: 0.0,
            q0: 0.3,
            ..Default::default()
        };
        assert_eq!(analytic_p_plus(2.0, &frozen), 0.3);
    }

    #[test]
    fn transition_rows_sum_to_one() {
        let p = OneWayParams {
            gamma_mp: 0.7,
            gamma_pm: 0.2,
            ..Default::default()
        };
        for &from in &[P, M] {
            for &tau in &[0.0, 0.3, 2.0] {
                let s = transition_probability(&p, from, P, tau) + transition_probability(&p, from, M, tau);
                assert!((s - 1.0).abs() < 1e-14);
            }
            assert_eq!(transition_probability(&p, from, from, 0.0), 1.0);
        }
    }

    #[test]
    fn type_examples() {
        let t = 1.7;
        let plus = OpinionPath::constant(P);
        let minus = OpinionPath::constant(M);
        assert!((vertex_type(&plus, 0.0, t) - (1.0 - (-t).exp())).abs() < 1e-15);
        assert_eq!(vertex_type(&minus, 0.0, t), 0.0);
        assert!((vertex_type(&minus, 1.0, t) - (-t).exp()).abs() < 1e-15);
        // + on [0, 1), - afterwards: int_{t-1}^{t} e^{-s} ds
        let path = OpinionPath {
            initial: P,
            flips: vec![1.0],
        };
        let want = (-(t - 1.0)).exp() - (-t).exp();
        assert!((vertex_type(&path, 0.0, t) - want).abs() < 1e-15);
        assert!(vertex_type_checked(&path, 0.0, 5.0, 4.0).is_err());
    }

    #[test]
    fn opinion_query_is_right_continuous() {
        let path = OpinionPath {
            initial: M,
            flips: vec![0.5, 1.5],
        };
        assert_eq!(path.opinion_at(0.0), M);
        assert_eq!(path.opinion_at(0.5), P);
        assert_eq!(path.opinion_at(1.49), P);
        assert_eq!(path.opinion_at(1.5), M);
    }
}
