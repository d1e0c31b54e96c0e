mod common;

use adasi_core::{IntervalUnion, NullDistribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::integrate;

fn gaussian_pdf(scale: f64) -> impl Fn(f64) -> f64 {
    move |z: f64| (-0.5 * (z / scale).powi(2)).exp() / (scale * (2.0 * std::f64::consts::PI).sqrt())
}

/// Chi density written out independently of the library's log-space form.
fn chi_pdf(k: f64) -> impl Fn(f64) -> f64 {
    let norm = 2f64.powf(k / 2.0 - 1.0) * libm::tgamma(k / 2.0);
    move |z: f64| {
        if z <= 0.0 {
            0.0
        } else {
            z.powf(k - 1.0) * (-0.5 * z * z).exp() / norm
        }
    }
}

/// Reference mass over `[lo, hi]`, with infinite ends clipped where the
/// remaining tail is far below the tolerance.
fn reference(pdf: &dyn Fn(f64) -> f64, lo: f64, hi: f64, reach: f64) -> f64 {
    integrate(pdf, lo.max(-reach), hi.min(reach), 1e-14)
}

#[test]
fn gaussian_mass_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let scale: f64 = rng.random_range(0.2..5.0);
        let dist = NullDistribution::gaussian(scale).unwrap();
        let mut a: f64 = rng.random_range(-8.0..8.0) * scale;
        let mut b: f64 = rng.random_range(-8.0..8.0) * scale;
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        match rng.random_range(0..6) {
            0 => a = f64::NEG_INFINITY,
            1 => b = f64::INFINITY,
            _ => {}
        }
        let got = dist.mass(&IntervalUnion::interval(a, b).unwrap());
        let want = reference(&gaussian_pdf(scale), a, b, 40.0 * scale);
        assert!(
            (got - want).abs() <= 1e-10,
            "scale {scale} [{a}, {b}]: {got} vs {want}"
        );
    }
}

#[test]
fn chi_mass_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for i in 0..1000 {
        let k = (1 + i % 10) as f64;
        let dist = NullDistribution::chi(k).unwrap();
        let mut a: f64 = rng.random_range(0.0..8.0);
        let mut b: f64 = rng.random_range(0.0..8.0);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        match rng.random_range(0..6) {
            0 => a = 0.0,
            1 => b = f64::INFINITY,
            _ => {}
        }
        let got = dist.mass(&IntervalUnion::interval(a, b).unwrap());
        // chi(1) has a finite jump at 0 and chi(k<2) is not smooth there;
        // split the reference integral at 1 to keep the quadrature accurate.
        let pdf = chi_pdf(k);
        let want = if a < 1.0 && b > 1.0 {
            reference(&pdf, a, 1.0, 60.0) + reference(&pdf, 1.0, b, 60.0)
        } else {
            reference(&pdf, a, b, 60.0)
        };
        assert!(
            (got - want).abs() <= 1e-10,
            "dof {k} [{a}, {b}]: {got} vs {want}"
        );
    }
}

#[test]
fn log_mass_agrees_with_mass() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for i in 0..1000 {
        let dist = if i % 2 == 0 {
            NullDistribution::standard_normal()
        } else {
            NullDistribution::chi((1 + i % 10) as f64).unwrap()
        };
        let lo: f64 = rng.random_range(-5.0..30.0);
        let hi = lo + rng.random_range(0.0..3.0);
        let b = IntervalUnion::interval(lo, hi).unwrap();
        let m = dist.mass(&b);
        if m > 1e-300 {
            let lm = dist.log_mass(&b);
            assert!(
                (lm.exp() - m).abs() <= 1e-10 * m.max(1e-300) + 1e-300,
                "[{lo}, {hi}]"
            );
            assert!(
                (lm - m.ln()).abs() <= 1e-9,
                "[{lo}, {hi}]: {lm} vs {}",
                m.ln()
            );
        }
    }
}
