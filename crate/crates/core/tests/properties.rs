//! Property tests over randomized geometry: path regularity of the coupled
//! construction, purity of the keyed randomness, and kernel symmetries.

use proptest::prelude::*;
use rwde::env::Environment;
use rwde::kernel::{covariance_exact, Kernel};
use rwde::rng::{gaussian_at, poisson_count_at, uniform_at, Key, Tag};
use rwde::walk::{trajectory_from, WalkParams};

fn dyadic(range: std::ops::Range<i32>) -> impl Strategy<Value = f64> {
    // Multiples of 1/64 inside the range; already on the snap grid.
    (range.start * 64..range.end * 64).prop_map(|k| k as f64 / 64.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trajectories_are_lipschitz_and_reach_lattice(
        x in dyadic(-8..8),
        y in dyadic(0..6),
        seed in 0u64..1_000_000,
        delta in 0u32..5,
    ) {
        let env = Environment::iid_symmetric();
        let params = WalkParams::with_max_ellipticity(delta as f64 * 0.08).unwrap();
        let traj = trajectory_from(&mut env.sampler(seed), &params, (x, y), 10.0).unwrap();
        let pts = traj.points();
        for pair in pts.windows(2) {
            let dx = (pair[1].0 - pair[0].0).abs();
            let dt = pair[1].1 - pair[0].1;
            prop_assert!(dx <= dt, "segment steeper than the light cone");
            prop_assert!(dt > 0.0);
        }
        // After at most 3 time units the walk is on the node chain: all
        // later breakpoints are integers.
        for &(px, pt) in pts.iter().filter(|p| p.1 >= y + 3.0) {
            if pt < y + 10.0 {
                prop_assert_eq!(px, px.round());
                prop_assert_eq!(pt, pt.round());
            }
        }
    }

    #[test]
    fn coupled_starts_never_cross(
        x1 in dyadic(-6..0),
        gap in dyadic(0..4),
        y in dyadic(0..4),
        seed in 0u64..1_000_000,
    ) {
        let env = Environment::iid_symmetric();
        let params = WalkParams::new(0.2, 0.25).unwrap();
        let a = trajectory_from(&mut env.sampler(seed), &params, (x1, y), 8.0).unwrap();
        let b = trajectory_from(&mut env.sampler(seed), &params, (x1 + gap, y), 8.0).unwrap();
        for k in 0..=32 {
            let t = k as f64 * 0.25;
            prop_assert!(a.position(t) <= b.position(t));
        }
    }

    #[test]
    fn keyed_randomness_is_pure(
        seed in any::<u64>(),
        a in any::<i64>(),
        b in any::<i64>(),
        mean in 0.0f64..40.0,
    ) {
        let k = Key::new(seed, Tag::EnvNoise, &[a, b]);
        prop_assert_eq!(uniform_at(k).to_bits(), uniform_at(k).to_bits());
        prop_assert_eq!(gaussian_at(k).to_bits(), gaussian_at(k).to_bits());
        let u = uniform_at(k);
        prop_assert!((0.0..1.0).contains(&u));
        let p = poisson_count_at(k, mean).unwrap();
        prop_assert_eq!(p, poisson_count_at(k, mean).unwrap());
    }

    #[test]
    fn kernel_reflection_symmetry_carries_to_covariance(
        dx in -6i64..6,
        dy in -6i64..6,
    ) {
        for kernel in [
            Kernel::BargmannFock { scale: 1.0 },
            Kernel::RationalQuadratic { alpha: 3.0 },
            Kernel::Figure1,
        ] {
            prop_assert_eq!(kernel.q(dx, dy).to_bits(), kernel.q(-dx, dy).to_bits());
            let a = covariance_exact(&kernel, (dx, dy), 8).unwrap();
            let b = covariance_exact(&kernel, (-dx, dy), 8).unwrap();
            prop_assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
        }
    }
}
