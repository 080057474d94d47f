//! Properties that span several modules, over random states and geometries.

use std::f64::consts::PI;

use dickenet_core::dicke::{mass_distribution, rotation, CollectiveAxis, DickeState, EnsembleDims};
use dickenet_core::gravity::{GravityContext, ReferenceNode};
use dickenet_core::linalg::max_abs_diff;
use dickenet_core::measurement::{
    position_observable_expectation, signal_local_analytic, signal_nonlocal_analytic,
};
use dickenet_core::network::{apply_local, evolve_gravity, seed_state, unitary_from_profile, SeedSpec};
use dickenet_core::Complex64;
use proptest::prelude::*;

fn profile() -> impl Strategy<Value = DickeState> {
    (1usize..=10).prop_flat_map(|n| {
        prop::collection::vec((0.05f64..1.0, 0.0f64..2.0 * PI), n).prop_map(move |parts| {
            let d = EnsembleDims::new(n).unwrap();
            let amps = std::iter::once(Complex64::new(0.0, 0.0))
                .chain(parts.into_iter().map(|(r, p)| Complex64::from_polar(r, p)))
                .collect();
            DickeState::normalize(d, amps).unwrap()
        })
    })
}

fn context() -> impl Strategy<Value = GravityContext> {
    (-2.0f64..2.0, -2.0f64..2.0, 0usize..3).prop_map(|(a, b, r)| {
        GravityContext::new(1.0, 1.0, 1.0)
            .unwrap()
            .with_constants(1.0, 1.0)
            .unwrap()
            .with_potentials(a, b)
            .unwrap()
            .with_reference([ReferenceNode::A, ReferenceNode::B, ReferenceNode::Midpoint][r])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn position_observable_matches_closed_form(psi in profile(), ctx in context(), phi0 in -PI..PI, t in 0.0f64..5.0) {
        let d = psi.dims();
        let u = unitary_from_profile(&psi).unwrap();
        let prepared = apply_local(&u, &u, &seed_state(d, SeedSpec::new(phi0, 0.0).unwrap()).unwrap()).unwrap();
        let evolved = evolve_gravity(&prepared, &ctx, t).unwrap();
        let w = mass_distribution(&psi);
        let closed = signal_nonlocal_analytic(&w, &ctx, phi0, t);
        prop_assert!((position_observable_expectation(&evolved) - closed).abs() < 1e-12);
        prop_assert!(closed.abs() <= 1.0 + 1e-12);
        prop_assert!(signal_local_analytic(&w, &ctx, phi0, t).abs() <= 0.5 + 1e-12);
    }

    #[test]
    fn profile_unitary_fixes_vacuum_and_hits_target(psi in profile()) {
        let u = unitary_from_profile(&psi).unwrap();
        prop_assert!((u.element(0, 0) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        for l in 0..psi.dims().dim() {
            prop_assert!((u.element(l, 1) - psi.amplitude(l)).norm() < 1e-12);
        }
    }

    #[test]
    fn rotations_about_one_axis_compose(n in 1usize..20, polar in 0.0f64..PI, azimuth in 0.0f64..2.0 * PI, a in -PI..PI, b in -PI..PI) {
        let d = EnsembleDims::new(n).unwrap();
        let axis = CollectiveAxis::from_angles(polar, azimuth);
        let composed = &rotation(d, axis, a) * &rotation(d, axis, b);
        prop_assert!(max_abs_diff(composed.matrix(), rotation(d, axis, a + b).matrix()) < 1e-10);
    }
}
