use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 50;

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance
/// `tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut worst = 0.0f64;
    let value = refine(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut worst);
    if worst > tol {
        return Err(Error::Quadrature {
            achieved: worst,
            requested: tol,
        });
    }
    Ok(value)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    worst: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *worst = worst.max(delta.abs() / 15.0);
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, worst)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_smooth_functions() {
        let v = adaptive_simpson(|x| (-x).exp(), 0.0, 3.0, 1e-10).unwrap();
        assert!((v - (1.0 - (-3.0f64).exp())).abs() < 1e-10);
        let v = adaptive_simpson(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
        assert_eq!(adaptive_simpson(|x| x, 1.0, 1.0, 1e-8).unwrap(), 0.0);
    }

    #[test]
    fn reports_failure_on_singularity() {
        let r = adaptive_simpson(|x| if x > 0.0 { 1.0 / x } else { 1e300 }, 0.0, 1.0, 1e-12);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
