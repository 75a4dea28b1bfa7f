use kobalt_core::dynamics::{classify, orbit_estimator, Automorphism, ClassifyOptions, Verdict};
use kobalt_core::models::SiegelDomain;
use kobalt_core::CVector;
use proptest::prelude::*;

fn siegel_point() -> impl Strategy<Value = CVector> {
    (-2.0f64..2.0, 1e-3f64..3.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(x, h, a, b)| {
        let z = kobalt_core::Complex64::new(a, b);
        CVector::new([kobalt_core::Complex64::new(x, z.norm_sqr().powi(2) + h), z])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cayley_round_trip(q in siegel_point()) {
        let s = SiegelDomain::power(2).unwrap();
        let e = s.cayley_map(&q).unwrap();
        prop_assert!(s.ellipsoid().unwrap().domain().contains(&e));
        prop_assert!(s.cayley_inverse(&e).unwrap().distance(&q) < 1e-9 * (1.0 + q.norm()));
    }

    #[test]
    fn conjugated_maps_preserve_the_ellipsoid(q in siegel_point(), s in -1.0f64..1.0, t in 0.5f64..2.0) {
        let siegel = SiegelDomain::power(2).unwrap();
        let dom = siegel.ellipsoid().unwrap().domain();
        let e = siegel.cayley_map(&q).unwrap();
        let phi = Automorphism::siegel_translation(2, s)
            .compose(&Automorphism::siegel_dilation(&[2], t).unwrap())
            .conjugate_by_cayley(&siegel);
        let moved = phi.apply(&e).unwrap();
        prop_assert!(dom.contains(&moved));
        prop_assert!(phi.apply_inverse(&moved).unwrap().distance(&e) < 1e-8);
    }
}

#[test]
fn siegel_unitary_conjugate_is_elliptic() {
    let siegel = SiegelDomain::power(2).unwrap();
    let dom = siegel.ellipsoid().unwrap().domain();
    let phi = Automorphism::siegel_unitary(&[2], 0.9).conjugate_by_cayley(&siegel);
    let est = orbit_estimator(&dom).unwrap();
    let c = classify(&est, &phi, &CVector::real(&[0.1, 0.3]), ClassifyOptions::default()).unwrap();
    assert_eq!(c.verdict, Verdict::Elliptic);
}
