//! Principal branch of the Lambert W function.
//!
//! `W0(y)` solves `w * exp(w) = y` with `w >= -1`, defined for
//! `y >= -1/e`. Evaluated by a piecewise initial guess refined with
//! Halley iterations.

use crate::error::{Error, Result};

const MAX_ITERS: usize = 50;

/// W0(y) for y >= -1/e.
pub fn lambert_w0(y: f64) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::invalid("y", format!("non-finite argument {y}")));
    }
    let branch_point = -(-1.0f64).exp(); // -1/e
    if y < branch_point {
        // Tiny round-off below the branch point maps to the branch value.
        if y > branch_point - 1e-15 {
            return Ok(-1.0);
        }
        return Err(Error::Domain(format!(
            "lambert_w0 argument {y} below -1/e = {branch_point}"
        )));
    }
    if y == 0.0 {
        return Ok(0.0);
    }

    let mut w = initial_guess(y, branch_point);
    for _ in 0..MAX_ITERS {
        let ew = w.exp();
        let f = w * ew - y;
        // Halley step: f' = e^w (w + 1), f'' = e^w (w + 2).
        let denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * (w + 1.0));
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let delta = f / denom;
        w -= delta;
        if w < -1.0 {
            w = -1.0;
        }
        if delta.abs() <= 1e-16 * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w)
}

fn initial_guess(y: f64, branch_point: f64) -> f64 {
    if y > std::f64::consts::E {
        // log - loglog asymptotics for large arguments
        let l1 = y.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    } else if y > -0.25 {
        if y.abs() < 1e-3 {
            // series around 0
            y * (1.0 - y + 1.5 * y * y)
        } else {
            (1.0 + y).ln().max(-0.999)
        }
    } else {
        // series around the branch point
        let p = (2.0 * (1.0 - y / branch_point).max(0.0)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_points() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        let w = lambert_w0(std::f64::consts::E).unwrap();
        assert!((w - 1.0).abs() < 1e-14);
        let w = lambert_w0(-(-1.0f64).exp()).unwrap();
        assert!((w + 1.0).abs() < 1e-6);
    }

    #[test]
    fn omega_constant() {
        // Newton iteration oracle on w*e^w = 1, frozen to 1e-15.
        let expected = 0.567_143_290_409_783_8;
        let w = lambert_w0(1.0).unwrap();
        assert!((w - expected).abs() < 1e-14, "{w}");
    }

    #[test]
    fn defining_identity_wide_range() {
        for i in 0..=6000 {
            let y = 10f64.powf(-12.0 + 24.0 * i as f64 / 6000.0);
            let w = lambert_w0(y).unwrap();
            let resid = (w * w.exp() - y).abs() / y.max(1.0);
            assert!(resid <= 1e-13, "y={y} w={w} resid={resid}");
        }
        let bp = -(-1.0f64).exp();
        for i in 0..1000 {
            let y = bp * (1.0 - i as f64 / 1000.0);
            let w = lambert_w0(y).unwrap();
            let resid = (w * w.exp() - y).abs();
            assert!(resid <= 1e-12, "y={y} w={w} resid={resid}");
            assert!(w >= -1.0);
        }
    }

    #[test]
    fn monotone() {
        let mut prev = f64::NEG_INFINITY;
        let bp = -(-1.0f64).exp();
        for i in 0..=2000 {
            let y = bp + (1e6 - bp) * i as f64 / 2000.0;
            let w = lambert_w0(y).unwrap();
            assert!(w >= prev - 1e-12, "y={y}");
            prev = w;
        }
    }

    #[test]
    fn rejects_out_of_domain() {
        assert!(lambert_w0(-1.0).is_err());
        assert!(lambert_w0(f64::NAN).is_err());
        assert!(lambert_w0(f64::INFINITY).is_err());
    }
}
