//! Flat functions, smooth steps and plateau bumps, as values and as jets.

use crate::jet::JetSeries;

/// `exp(-1/u)` for `u > 0`, else 0.
pub fn flat(u: f64) -> f64 {
    if u > 0.0 {
        libm::exp(-1.0 / u)
    } else {
        0.0
    }
}

/// Smooth monotone step: 0 for `u ≤ 0`, 1 for `u ≥ 1`.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = flat(u);
        a / (a + flat(1.0 - u))
    }
}

/// 1 on `[-1/2, 1/2]`, 0 outside `(-1, 1)`, smooth in between.
pub fn plateau_bump(t: f64) -> f64 {
    let a = t.abs();
    if a <= 0.5 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        smooth_step(2.0 * (1.0 - a))
    }
}

pub fn flat_jet(u: &JetSeries) -> JetSeries {
    if u.value() > 0.0 {
        u.recip().expect("positive value").scale(-1.0).exp()
    } else {
        u.zeros_like()
    }
}

pub fn smooth_step_jet(u: &JetSeries) -> JetSeries {
    let v = u.value();
    if v <= 0.0 {
        u.zeros_like()
    } else if v >= 1.0 {
        JetSeries::constant(u.center(), u.order(), 1.0)
    } else {
        let a = flat_jet(u);
        let b = flat_jet(&u.affine(-1.0, 1.0));
        &a * &(&a + &b).recip().expect("positive denominator")
    }
}

/// Jet of `B(t(x))` given the jet of `t`.
pub fn plateau_bump_jet(t: &JetSeries) -> JetSeries {
    let v = t.value();
    if v.abs() <= 0.5 {
        JetSeries::constant(t.center(), t.order(), 1.0)
    } else if v.abs() >= 1.0 {
        t.zeros_like()
    } else if v > 0.0 {
        smooth_step_jet(&t.affine(-2.0, 2.0))
    } else {
        smooth_step_jet(&t.affine(2.0, 2.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_limits_and_symmetry() {
        assert_eq!(smooth_step(-0.3), 0.0);
        assert_eq!(smooth_step(1.2), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
        for u in [0.1, 0.3, 0.77] {
            assert!((smooth_step(u) + smooth_step(1.0 - u) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn bump_profile() {
        assert_eq!(plateau_bump(0.4), 1.0);
        assert_eq!(plateau_bump(-0.5), 1.0);
        assert_eq!(plateau_bump(1.0), 0.0);
        let v = plateau_bump(0.75);
        assert!(v > 0.0 && v < 1.0);
    }

    #[test]
    fn jet_value_matches_scalar() {
        for t in [-0.9, -0.6, 0.2, 0.55, 0.8, 0.99] {
            let j = plateau_bump_jet(&JetSeries::variable(t, 3));
            assert!((j.value() - plateau_bump(t)).abs() < 1e-15);
        }
    }

    #[test]
    fn jet_derivative_matches_difference() {
        let t = 0.7;
        let h = 1e-5;
        let j = plateau_bump_jet(&JetSeries::variable(t, 1));
        let fd = (plateau_bump(t + h) - plateau_bump(t - h)) / (2.0 * h);
        assert!((j.derivative(1) - fd).abs() < 1e-6);
    }
}
