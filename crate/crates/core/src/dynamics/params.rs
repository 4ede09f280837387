use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::patterns::Opinion;

/// Longest supported time horizon; keeps exponential weights well conditioned.
pub const MAX_HORIZON: f64 = 100.0;

fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("{p} is not a probability"),
        });
    }
    Ok(())
}

fn check_rate(name: &'static str, r: f64) -> Result<()> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("{r} is not a nonnegative rate"),
        });
    }
    Ok(())
}

fn check_common(n: usize, horizon: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "need at least one vertex".into(),
        });
    }
    if !(horizon > 0.0 && horizon <= MAX_HORIZON) {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: format!("{horizon} not in (0, {MAX_HORIZON}]"),
        });
    }
    Ok(())
}

/// Probability that a ring leaves the edge active, given the endpoint opinions.
/// Mixed pairs use the average of the two agreeing probabilities.
#[inline]
pub fn ring_probability(pi_plus: f64, pi_minus: f64, a: Opinion, b: Opinion) -> f64 {
    match (a, b) {
        (Opinion::Plus, Opinion::Plus) => pi_plus,
        (Opinion::Minus, Opinion::Minus) => pi_minus,
        _ => 0.5 * (pi_plus + pi_minus),
    }
}

/// Parameters of the one-way model: opinions evolve on their own, edges
/// follow the opinions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneWayParams {
    pub n: usize,
    pub p0: f64,
    /// Rate of switching from `-` to `+`.
    pub gamma_mp: f64,
    /// Rate of switching from `+` to `-`.
    pub gamma_pm: f64,
    pub pi_plus: f64,
    pub pi_minus: f64,
    pub q0: f64,
    pub horizon: f64,
}

impl Default for OneWayParams {
    fn default() -> Self {
        Self {
            n: 100,
            p0: 0.1,
            gamma_mp: 0.5,
            gamma_pm: 0.5,
            pi_plus: 0.8,
            pi_minus: 0.2,
            q0: 0.5,
            horizon: 4.0,
        }
    }
}

impl OneWayParams {
    pub fn validate(&self) -> Result<()> {
        check_common(self.n, self.horizon)?;
        check_probability("p0", self.p0)?;
        check_probability("pi_plus", self.pi_plus)?;
        check_probability("pi_minus", self.pi_minus)?;
        check_probability("q0", self.q0)?;
        check_rate("gamma_mp", self.gamma_mp)?;
        check_rate("gamma_pm", self.gamma_pm)
    }

    #[inline]
    pub fn ring_probability(&self, a: Opinion, b: Opinion) -> f64 {
        ring_probability(self.pi_plus, self.pi_minus, a, b)
    }

    /// Rate of leaving opinion `o`.
    #[inline]
    pub fn leave_rate(&self, o: Opinion) -> f64 {
        match o {
            Opinion::Plus => self.gamma_pm,
            Opinion::Minus => self.gamma_mp,
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }
}

/// Parameters of the two-way (co-evolutionary) model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoWayParams {
    pub n: usize,
    pub p0: f64,
    pub beta: f64,
    pub pi_plus: f64,
    pub pi_minus: f64,
    pub q0: f64,
    pub horizon: f64,
}

impl Default for TwoWayParams {
    fn default() -> Self {
        Self {
            n: 100,
            p0: 0.1,
            beta: 0.66,
            pi_plus: 0.8,
            pi_minus: 0.2,
            q0: 0.5,
            horizon: 4.0,
        }
    }
}

impl TwoWayParams {
    pub fn validate(&self) -> Result<()> {
        check_common(self.n, self.horizon)?;
        check_probability("p0", self.p0)?;
        check_probability("pi_plus", self.pi_plus)?;
        check_probability("pi_minus", self.pi_minus)?;
        check_probability("q0", self.q0)?;
        check_rate("beta", self.beta)
    }

    #[inline]
    pub fn ring_probability(&self, a: Opinion, b: Opinion) -> f64 {
        ring_probability(self.pi_plus, self.pi_minus, a, b)
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    /// The one-way model with frozen opinions has the same law as the
    /// two-way model with `beta = 0`.
    pub fn frozen_one_way(&self) -> OneWayParams {
        OneWayParams {
            n: self.n,
            p0: self.p0,
            gamma_mp: 0.0,
            gamma_pm: 0.0,
            pi_plus: self.pi_plus,
            pi_minus: self.pi_minus,
            q0: self.q0,
            horizon: self.horizon,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_bad_values() {
        assert!(OneWayParams::default().validate().is_ok());
        assert!(TwoWayParams::default().validate().is_ok());
        let bad = OneWayParams {
            p0: 1.5,
            ..Default::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(Error::InvalidParameter { name: "p0", .. })
        ));
        let bad = OneWayParams {
            gamma_pm: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TwoWayParams {
            horizon: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TwoWayParams {
            n: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn mixed_pairs_average() {
        let p = OneWayParams::default();
        assert_eq!(p.ring_probability(Opinion::Plus, Opinion::Minus), 0.5);
        assert_eq!(p.ring_probability(Opinion::Minus, Opinion::Minus), 0.2);
    }
}
