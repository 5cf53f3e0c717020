//! Bounded loss functions and robust scale equations.
//!
//! The rho family used throughout the crate is of the hyperbolic-tangent
//! type: quadratic near zero, a smooth tanh transition, and a flat plateau
//! beyond `c` so that a single wild residual carries bounded influence.
//! M-scales solve `mean(rho(r_i / s)) = delta`; the default `delta` is the
//! expectation of rho under the standard normal, making the scale consistent
//! at the Gaussian.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use thiserror::Error;

/// Errors from the kernel layer.
#[derive(Debug, Error)]
pub enum KernelError {
    #[error("invalid rho parameters: {0}")]
    InvalidParams(String),
    #[error("M-scale requires at least 2 finite residuals")]
    InsufficientResiduals,
    #[error("M-scale equation has no positive solution (residuals concentrate at zero)")]
    ZeroScale,
}

/// Parameters of the hyperbolic-tangent rho function.
///
/// `a` is the plateau height, derived from the other four so that the
/// pieces join continuously at `|z| = c`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RhoTanhParams {
    pub b: f64,
    pub c: f64,
    pub q1: f64,
    pub q2: f64,
    pub a: f64,
}

impl RhoTanhParams {
    /// Build a parameter set, validating `0 < b < c` and `q1, q2 > 0`.
    pub fn new(b: f64, c: f64, q1: f64, q2: f64) -> Result<Self, KernelError> {
        if !(b > 0.0 && c > b) {
            return Err(KernelError::InvalidParams(format!(
                "need 0 < b < c, got b = {b}, c = {c}"
            )));
        }
        if !(q1 > 0.0 && q2 > 0.0) {
            return Err(KernelError::InvalidParams(format!(
                "need q1, q2 > 0, got q1 = {q1}, q2 = {q2}"
            )));
        }
        let a = b * b / 2.0 + (q1 / q2) * (q2 * (c - b)).cosh().ln();
        Ok(Self { b, c, q1, q2, a })
    }
}

impl Default for RhoTanhParams {
    fn default() -> Self {
        Self::new(1.5, 4.0, 1.54, 0.86).expect("default parameters are valid")
    }
}

/// The rho function: `z^2/2` on `[0, b]`, a tanh transition on `[b, c]`,
/// constant `a` beyond `c`. Even in `z`.
pub fn rho_tanh(z: f64, p: &RhoTanhParams) -> f64 {
    let az = z.abs();
    if az <= p.b {
        az * az / 2.0
    } else if az <= p.c {
        p.a - (p.q1 / p.q2) * (p.q2 * (p.c - az)).cosh().ln()
    } else {
        p.a
    }
}

/// Derivative of [`rho_tanh`] in `z`.
pub fn psi_tanh(z: f64, p: &RhoTanhParams) -> f64 {
    let az = z.abs();
    if az <= p.b {
        z
    } else if az <= p.c {
        p.q1 * (p.q2 * (p.c - az)).tanh() * z.signum()
    } else {
        0.0
    }
}

/// Weight function `psi(z)/z`, with the removable singularity at 0 set to 1.
pub fn weight_tanh(z: f64, p: &RhoTanhParams) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        psi_tanh(z, p) / z
    }
}

/// 64-point Gauss-Hermite rule, as `(node, weight)` pairs for the weight
/// function `exp(-x^2)`. Computed once via Golub-Welsch on the Jacobi
/// matrix of the Hermite recurrence.
fn gauss_hermite_64() -> &'static Vec<(f64, f64)> {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = 64;
        let mut jacobi = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            let b = (i as f64 / 2.0).sqrt();
            jacobi[(i, i - 1)] = b;
            jacobi[(i - 1, i)] = b;
        }
        let eig = jacobi.symmetric_eigen();
        let mu0 = std::f64::consts::PI.sqrt();
        let mut rule: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let node = eig.eigenvalues[k];
                let first = eig.eigenvectors[(0, k)];
                (node, mu0 * first * first)
            })
            .collect();
        rule.sort_by(|a, b| a.0.total_cmp(&b.0));
        rule
    })
}

/// `E[rho_tanh(Z)]` for standard normal `Z`, by 64-point Gauss-Hermite
/// quadrature. Cached per parameter set.
pub fn gaussian_rho_expectation(p: &RhoTanhParams) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<[u64; 4], f64>>> = OnceLock::new();
    let key = [p.b.to_bits(), p.c.to_bits(), p.q1.to_bits(), p.q2.to_bits()];
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&v) = cache.lock().expect("quadrature cache poisoned").get(&key) {
        return v;
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    let v: f64 = gauss_hermite_64()
        .iter()
        .map(|&(x, w)| w * rho_tanh(sqrt2 * x, p))
        .sum::<f64>()
        * inv_sqrt_pi;
    cache.lock().expect("quadrature cache poisoned").insert(key, v);
    v
}

/// M-scale: the `s > 0` solving `mean(rho_tanh(r_i / s)) = delta`.
///
/// Solved by bisection on `ln s`; the defining function is monotone in `s`.
/// Fails with [`KernelError::ZeroScale`] when the equation has no positive
/// root, i.e. when too many residuals are exactly zero.
pub fn mscale(residuals: &[f64], p: &RhoTanhParams, delta: f64) -> Result<f64, KernelError> {
    let finite: Vec<f64> = residuals.iter().copied().filter(|r| r.is_finite()).collect();
    if finite.len() < 2 {
        return Err(KernelError::InsufficientResiduals);
    }
    if !(delta > 0.0 && delta < p.a) {
        return Err(KernelError::InvalidParams(format!(
            "delta must lie in (0, a); got {delta} with a = {}",
            p.a
        )));
    }
    let n = finite.len() as f64;
    let nonzero: Vec<f64> = finite.iter().copied().filter(|r| *r != 0.0).collect();
    if nonzero.is_empty() {
        return Err(KernelError::ZeroScale);
    }
    // As s -> 0 the mean tends to a * (#nonzero / n); if that cannot reach
    // delta the scale implodes to zero.
    if p.a * nonzero.len() as f64 / n <= delta {
        return Err(KernelError::ZeroScale);
    }
    let g = |s: f64| finite.iter().map(|&r| rho_tanh(r / s, p)).sum::<f64>() / n - delta;
    let min_nz = nonzero.iter().fold(f64::INFINITY, |m, &r| m.min(r.abs()));
    let max_abs = finite.iter().fold(0.0_f64, |m, &r| m.max(r.abs()));
    let mut lo = min_nz / p.c;
    let mut hi = max_abs * 10.0;
    for _ in 0..200 {
        if g(lo) > 0.0 {
            break;
        }
        lo /= 10.0;
    }
    for _ in 0..200 {
        if g(hi) < 0.0 {
            break;
        }
        hi *= 10.0;
    }
    let mut tlo = lo.ln();
    let mut thi = hi.ln();
    for _ in 0..200 {
        let mid = 0.5 * (tlo + thi);
        if g(mid.exp()) > 0.0 {
            tlo = mid;
        } else {
            thi = mid;
        }
        if thi - tlo < 1e-14 {
            break;
        }
    }
    Ok((0.5 * (tlo + thi)).exp())
}

/// [`mscale`] with the Gaussian-consistent `delta = E[rho(Z)]`.
pub fn mscale_consistent(residuals: &[f64], p: &RhoTanhParams) -> Result<f64, KernelError> {
    mscale(residuals, p, gaussian_rho_expectation(p))
}

/// Probability that a case contains at least one outlying cell when each of
/// its `d` cells is independently contaminated with rate `eps_cell`:
/// `1 - (1 - eps_cell)^d`.
pub fn case_contamination_probability(eps_cell: f64, d: u32) -> f64 {
    debug_assert!((0.0..=1.0).contains(&eps_cell));
    debug_assert!(d >= 1);
    1.0 - (1.0 - eps_cell).powi(d as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::Distribution;

    /// Simpson-rule oracle for E[rho(Z)], independent of the Gauss-Hermite
    /// path used in production.
    fn simpson_rho_expectation(p: &RhoTanhParams) -> f64 {
        let lo = -10.0;
        let hi = 10.0;
        let n = 20_000; // even
        let h = (hi - lo) / n as f64;
        let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let f = |z: f64| rho_tanh(z, p) * phi(z);
        let mut acc = f(lo) + f(hi);
        for i in 1..n {
            let z = lo + i as f64 * h;
            acc += if i % 2 == 1 { 4.0 * f(z) } else { 2.0 * f(z) };
        }
        acc * h / 3.0
    }

    #[test]
    fn rho_values_at_reference_points() {
        let p = RhoTanhParams::default();
        assert_eq!(rho_tanh(0.0, &p), 0.0);
        assert_eq!(rho_tanh(1.0, &p), 0.5);
        // a = 1.125 + (1.54/0.86) ln cosh(2.15)
        let a_expected = 1.125 + (1.54 / 0.86) * (2.15_f64).cosh().ln();
        assert_relative_eq!(p.a, a_expected, epsilon = 1e-15);
        assert_relative_eq!(rho_tanh(5.0, &p), a_expected, epsilon = 1e-15);
        assert_relative_eq!(p.a, 3.7576, epsilon = 1e-3);
    }

    #[test]
    fn rho_is_even_monotone_bounded_continuous() {
        let p = RhoTanhParams::default();
        let mut prev = 0.0;
        let mut z = 0.0;
        while z <= 8.0 {
            let v = rho_tanh(z, &p);
            assert_eq!(v, rho_tanh(-z, &p));
            assert!(v + 1e-12 >= prev, "rho not monotone at {z}");
            assert!(v <= p.a + 1e-12);
            // continuity on the dense grid
            assert!((rho_tanh(z + 5e-4, &p) - v).abs() < 5e-3);
            prev = v;
            z += 1e-3;
        }
    }

    #[test]
    fn psi_quadratic_and_plateau_zones() {
        let p = RhoTanhParams::default();
        assert_eq!(psi_tanh(1.0, &p), 1.0);
        assert_eq!(weight_tanh(1.0, &p), 1.0);
        assert_eq!(psi_tanh(4.5, &p), 0.0);
        assert_eq!(weight_tanh(4.5, &p), 0.0);
        assert_eq!(weight_tanh(0.0, &p), 1.0);
    }

    #[test]
    fn psi_jump_at_b_is_small() {
        let p = RhoTanhParams::default();
        let left = psi_tanh(p.b - 1e-8, &p);
        let right = psi_tanh(p.b + 1e-8, &p);
        assert!((left - right).abs() <= 0.02, "jump {} too large", left - right);
    }

    #[test]
    fn psi_matches_finite_difference_of_rho() {
        let p = RhoTanhParams::default();
        let h = 1e-6;
        let mut z: f64 = -6.0;
        while z <= 6.0 {
            let near_kink = (z.abs() - p.b).abs() < 1e-3 || (z.abs() - p.c).abs() < 1e-3;
            if !near_kink {
                let fd = (rho_tanh(z + h, &p) - rho_tanh(z - h, &p)) / (2.0 * h);
                assert!(
                    (fd - psi_tanh(z, &p)).abs() < 1e-6,
                    "psi mismatch at z = {z}: fd {fd} vs {}",
                    psi_tanh(z, &p)
                );
            }
            z += 0.01;
        }
    }

    #[test]
    fn weight_lies_in_unit_interval_and_vanishes_beyond_c() {
        let p = RhoTanhParams::default();
        let mut z = -8.0;
        while z <= 8.0 {
            let w = weight_tanh(z, &p);
            assert!((0.0..=1.0 + 1e-12).contains(&w), "weight {w} at {z}");
            if z.abs() >= p.c {
                assert_eq!(w, 0.0);
            } else {
                assert!(w > 0.0, "weight should be positive inside (-c, c) at {z}");
            }
            z += 0.01;
        }
    }

    #[test]
    fn gauss_hermite_matches_simpson_and_moments() {
        // Pure quadratic rho (b pushed out) turns E[rho] into E[Z^2]/2.
        let quad = RhoTanhParams::new(1e6, 2e6, 1.54, 0.86).unwrap();
        assert_relative_eq!(gaussian_rho_expectation(&quad), 0.5, epsilon = 1e-12);

        // rho has curvature kinks at b and c, so the 64-point rule is only
        // accurate to a few 1e-4 there; the Simpson oracle pins it down.
        let p = RhoTanhParams::default();
        let gh = gaussian_rho_expectation(&p);
        let simpson = simpson_rho_expectation(&p);
        assert_relative_eq!(gh, simpson, epsilon = 5e-4);
        assert!(gh > 0.0 && gh < p.a);
    }

    #[test]
    fn mscale_closed_form_pair() {
        // residuals {1,-1}, delta = 0.5: rho(1/s) = 0.5 in the quadratic zone
        // gives s = 1.
        let p = RhoTanhParams::default();
        let s = mscale(&[1.0, -1.0], &p, 0.5).unwrap();
        assert_relative_eq!(s, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn mscale_gaussian_consistency_monte_carlo() {
        let p = RhoTanhParams::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let normal = rand_distr::StandardNormal;
        let sample: Vec<f64> = (0..10_000).map(|_| normal.sample(&mut rng)).collect();
        let s = mscale_consistent(&sample, &p).unwrap();
        assert!((s - 1.0).abs() < 0.05, "M-scale {s} should be near 1");
    }

    #[test]
    fn mscale_errors() {
        let p = RhoTanhParams::default();
        assert!(matches!(
            mscale(&[0.0, 0.0, 0.0], &p, 0.4),
            Err(KernelError::ZeroScale)
        ));
        assert!(matches!(
            mscale(&[1.0], &p, 0.4),
            Err(KernelError::InsufficientResiduals)
        ));
        // implosion: one nonzero among many zeros cannot reach delta
        let mut v = vec![0.0; 20];
        v.push(3.0);
        assert!(matches!(mscale(&v, &p, 0.5), Err(KernelError::ZeroScale)));
    }

    #[test]
    fn mscale_bounded_influence_of_one_added_residual() {
        let p = RhoTanhParams::default();
        let delta = gaussian_rho_expectation(&p);
        let base = vec![0.8, -1.1, 0.3, 1.9, -0.4, 0.7, -2.2, 1.0];
        let s0 = mscale(&base, &p, delta).unwrap();
        // Adding a residual beyond c*s never decreases the scale, and the
        // result does not depend on how far beyond it lies (plateau).
        let mut with_big = base.clone();
        with_big.push(10.0 * p.c * s0);
        let s1 = mscale(&with_big, &p, delta).unwrap();
        let mut with_huge = base.clone();
        with_huge.push(1e9);
        let s2 = mscale(&with_huge, &p, delta).unwrap();
        assert!(s1 >= s0);
        assert_relative_eq!(s1, s2, epsilon = 1e-8);
        // The added point shifts the total rho mass by at most a.
        let total = |r: &[f64], s: f64| r.iter().map(|&x| rho_tanh(x / s, &p)).sum::<f64>();
        let shift = (total(&with_huge, s0) - total(&base, s0)).abs();
        assert!(shift <= p.a + 1e-12);
    }

    #[test]
    fn contamination_probability_reference_values() {
        let p14 = case_contamination_probability(0.05, 14);
        let p70 = case_contamination_probability(0.05, 70);
        assert!((0.51..=0.52).contains(&p14), "got {p14}");
        assert!((0.97..=0.98).contains(&p70), "got {p70}");
        assert_eq!(case_contamination_probability(0.0, 7), 0.0);
    }

    proptest! {
        #[test]
        fn mscale_is_scale_equivariant(
            v in proptest::collection::vec(-10.0_f64..10.0, 5..40),
            k in 0.01_f64..100.0,
        ) {
            let p = RhoTanhParams::default();
            let delta = 0.4;
            prop_assume!(v.iter().filter(|r| **r != 0.0).count() as f64 * p.a
                > delta * v.len() as f64);
            let s = mscale(&v, &p, delta);
            prop_assume!(s.is_ok());
            let s = s.unwrap();
            let scaled: Vec<f64> = v.iter().map(|&r| k * r).collect();
            let sk = mscale(&scaled, &p, delta).unwrap();
            prop_assert!((sk - k * s).abs() <= 1e-8 * (1.0 + k * s));
        }

        #[test]
        fn rho_bounded_by_plateau(z in -1e9_f64..1e9) {
            let p = RhoTanhParams::default();
            let v = rho_tanh(z, &p);
            prop_assert!((0.0..=p.a).contains(&v));
        }
    }
}
