use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use grazing_core::bounds::{check_young, random_mixture};
use grazing_core::collision::{q_gain, q_loss, q_total, weak_form_q_detailed, QuadratureSpec};
use grazing_core::geometry::{post_collision, CollisionPair};
use grazing_core::grid::{Distribution, GridSpec};
use grazing_core::kernel::KernelParams;
use grazing_core::Vec3;

fn vec3() -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-6.0f64..6.0).prop_map(Vec3::from)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn collision_map_keeps_relative_speed_and_centre_of_mass(v in vec3(), w in vec3(), dir in vec3()) {
        prop_assume!(dir.norm() > 1e-3);
        let sigma = dir.normalize();
        let (a, b) = post_collision(&CollisionPair::new(v, w), &sigma).unwrap();
        // Relative speed is preserved and the pair's centre of mass is fixed.
        prop_assert!(((a - b).norm() - (v - w).norm()).abs() <= 1e-12 * (1.0 + (v - w).norm()));
        prop_assert!(((a + b) - (v + w)).norm() <= 1e-12 * (1.0 + v.norm() + w.norm()));
    }

    #[test]
    fn beta_k_is_monotone_in_k_below_the_swap(eps in 0.02f64..1.0, gamma in -3.0f64..-0.2, t in 0.0f64..3.0) {
        let p = KernelParams::new(eps, gamma).unwrap();
        let x = eps.powf(-1.0 / gamma) * t.exp();
        // In the active window m/2 <= 1/2, so higher powers are smaller.
        let b2 = p.beta_k(x, 2.0).unwrap();
        let b3 = p.beta_k(x, 3.0).unwrap();
        let b4 = p.beta_k(x, 4.0).unwrap();
        prop_assert!(b2 > b3 && b3 > b4 && b4 > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn weak_form_vanishes_on_invariants(seed in any::<u64>(), eps in 0.05f64..1.0, gamma in -3.0f64..-0.5) {
        let grid = GridSpec::new(8, 4.0).unwrap();
        let f = random_mixture(grid, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let params = KernelParams::new(eps, gamma).unwrap();
        let quad = QuadratureSpec::default();
        for phi in grazing_core::test_functions::TestFunction::invariants() {
            let w = weak_form_q_detailed(&f, &phi, &params, &quad);
            prop_assert!(w.value.abs() <= 1e-12 * w.magnitude, "{:?}: {} vs {}", phi, w.value, w.magnitude);
        }
    }

    #[test]
    fn gain_is_nonnegative_and_bounded_by_created_mass(seed in any::<u64>(), eps in 0.05f64..1.0) {
        let grid = GridSpec::new(8, 4.0).unwrap();
        let f = random_mixture(grid, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let params = KernelParams::new(eps, -2.0).unwrap();
        let gain = q_gain(&f, &params, &QuadratureSpec::default()).unwrap();
        prop_assert!(gain.values().iter().all(|v| *v >= 0.0));
        // Post-collision pairs that leave the box are dropped, never created.
        let created = 8.0 / eps * f.mass() * f.mass();
        prop_assert!(gain.mass() <= created * (1.0 + 1e-12));
    }
}

#[test]
fn loss_is_the_constant_rate_term() {
    let grid = GridSpec::new(8, 3.0).unwrap();
    let f = Distribution::maxwellian(grid, 0.7, Vec3::new(0.2, 0.0, 0.0), 0.8).unwrap();
    let params = KernelParams::new(0.25, -3.0).unwrap();
    let loss = q_loss(&f, &params);
    let rate = 8.0 / 0.25 * f.mass();
    for (l, v) in loss.values().iter().zip(f.values()) {
        assert_relative_eq!(*l, rate * v, max_relative = 1e-14);
    }
}

#[test]
fn collision_operator_commutes_with_reflection() {
    // The azimuthal frame is not reflection covariant, so agreement is only
    // up to the M = 16 quadrature and interpolation error.
    let grid = GridSpec::new(10, 4.0).unwrap();
    let f = random_mixture(grid, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let n = grid.n();
    let flip = |d: &Distribution| {
        Distribution::from_fn(grid, |v| d.interpolate(&Vec3::new(-v.x, v.y, v.z))).unwrap()
    };
    let params = KernelParams::new(0.3, -2.0).unwrap();
    let quad = QuadratureSpec::default();
    let a = q_total(&flip(&f), &params, &quad).unwrap();
    let b = q_total(&f, &params, &quad).unwrap();
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let diff = a[grid.index(i, j, k)] - b[grid.index(n - 1 - i, j, k)];
                worst = worst.max(diff.abs());
            }
        }
    }
    assert!(worst <= 0.05 * scale, "worst {worst} scale {scale}");
}

/// The gain bound `||Q+(f, h)||_r <= (16/eps) ||f||_p ||h||_q` fails for
/// `q > 1` when `f` is narrow and `h` wide: for small `eps` the gain tends to
/// `(8/eps) mass(h) f`, so the ratio tends to `||f||_r / (2 ||h||_q)`.
#[test]
fn young_bound_fails_for_narrow_f_and_wide_h() {
    let grid = GridSpec::new(16, 4.0).unwrap();
    let f = Distribution::maxwellian(grid, 1.0, Vec3::zeros(), 0.36).unwrap();
    let h = Distribution::maxwellian(grid, 1.0, Vec3::zeros(), 2.25).unwrap();
    let params = KernelParams::new(0.1, -3.0).unwrap();
    let quad = QuadratureSpec::default();

    let holds = check_young(&f, &h, (1.0, 1.0, 1.0), &params, &quad, 0).unwrap();
    assert!(holds.pass && holds.lhs / holds.rhs <= 0.5 + 1e-9);

    let broken = check_young(&f, &h, (1.0, 2.0, 2.0), &params, &quad, 0).unwrap();
    let limit = f.lp_norm(2.0).unwrap() / (2.0 * h.lp_norm(2.0).unwrap());
    assert!(!broken.pass);
    let ratio = broken.lhs / broken.rhs;
    assert!(ratio > 1.5 && ratio < limit, "ratio {ratio}, grazing limit {limit}");
}
