use moving_well::quadrature::AdaptiveQuadrature;
use moving_well::spectral::SpectralState;
use moving_well::verify::orthonormality_check;
use moving_well::{time_phase_integral, Complex64, MovingMode, PhysicalConstants, WellGeometry};
use proptest::prelude::*;

/// Random geometry plus a time safely inside its validity window.
fn geometry_and_time() -> impl Strategy<Value = (WellGeometry, f64)> {
    (0.5..2.0f64, -0.5..0.5f64, -0.5..0.5f64, 0.5..2.0f64, 0.5..2.0f64, 0.0..1.0f64).prop_map(
        |(a, ul, ur, hbar, mass, frac)| {
            let g = WellGeometry::new(a, ul, ur, PhysicalConstants::new(hbar, mass).unwrap()).unwrap();
            let t_hi = g.validity_horizon().map_or(5.0, |h| (0.8 * h).min(5.0));
            (g, frac * t_hi)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn comoving_round_trip((g, t) in geometry_and_time(), s in 0.0..1.0f64) {
        let (l, r) = g.wall_positions(t).unwrap();
        let x = l + s * (r - l);
        let xb = g.to_comoving(x, t).unwrap();
        prop_assert!((0.0..=g.a() * (1.0 + 1e-12)).contains(&xb));
        let back = g.from_comoving(xb, t).unwrap();
        prop_assert!((back - x).abs() <= 1e-12 * (1.0 + x.abs()));
    }

    #[test]
    fn scale_factor_is_affine((g, t) in geometry_and_time()) {
        let l = g.scale_factor(t).unwrap();
        prop_assert!((l - (1.0 + g.delta() * t / g.a())).abs() <= 1e-14);
        prop_assert!(l > 0.0);
        prop_assert!((g.width(t).unwrap() - g.a() * l).abs() <= 1e-13);
    }

    #[test]
    fn modes_vanish_on_both_walls((g, t) in geometry_and_time(), n in 1u32..12) {
        let mode = MovingMode::new(g, n).unwrap();
        let (l, r) = g.wall_positions(t).unwrap();
        prop_assert_eq!(mode.eval(l, t).unwrap(), Complex64::new(0.0, 0.0));
        prop_assert_eq!(mode.eval(r, t).unwrap(), Complex64::new(0.0, 0.0));
        prop_assert_eq!(mode.eval(l - 1e-3, t).unwrap(), Complex64::new(0.0, 0.0));
        prop_assert_eq!(mode.eval(r + 1e-3, t).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn modes_stay_orthonormal((g, t) in geometry_and_time()) {
        let dev = orthonormality_check(&g, 5, t, 1e-13).unwrap();
        prop_assert!(dev <= 1e-10, "deviation {dev:e}");
    }

    #[test]
    fn superposition_is_linear(
        (g, t) in geometry_and_time(),
        c in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 3),
        s in 0.0..1.0f64,
    ) {
        let coeffs: Vec<Complex64> = c.iter().map(|&(re, im)| Complex64::new(re, im) / 3.0).collect();
        let state = SpectralState::new(g, coeffs.clone()).unwrap();
        let (l, r) = g.wall_positions(t).unwrap();
        let x = l + s * (r - l);
        let direct: Complex64 = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * MovingMode::new(g, k as u32 + 1).unwrap().eval(x, t).unwrap())
            .sum();
        prop_assert!((state.eval(x, t).unwrap() - direct).norm() <= 1e-13);
    }

    #[test]
    fn tau_matches_quadrature((g, t) in geometry_and_time()) {
        let q = AdaptiveQuadrature::new(1e-15).unwrap();
        let oracle = q
            .integrate(|s: f64| (1.0 + g.delta() * s / g.a()).powi(-2), 0.0, t)
            .unwrap()
            .value;
        prop_assert!((time_phase_integral(&g, t).unwrap() - oracle).abs() <= 1e-12);
    }
}
