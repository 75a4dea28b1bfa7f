use kobalt_core::kobayashi::{dist_disk, dist_halfplane};
use kobalt_core::models::{ball, DomainSpec, PolynomialEllipsoid};
use kobalt_core::{CVector, Complex64, DistanceEstimator};
use proptest::prelude::*;

/// `artanh |phi_a(z)|` via `1 - |phi_a(z)|^2 = (1 - |a|^2)(1 - |z|^2) / |1 - <z, a>|^2`.
fn ball_exact(a: &CVector, z: &CVector) -> f64 {
    let t = (1.0 - a.norm_sqr()) * (1.0 - z.norm_sqr()) / (Complex64::new(1.0, 0.0) - z.dot(a)).norm_sqr();
    (1.0 - t).max(0.0).sqrt().atanh()
}

fn ball_point() -> impl Strategy<Value = CVector> {
    (prop::array::uniform4(-1.0f64..1.0), 0.0f64..0.85).prop_filter_map("zero direction", |(v, r)| {
        let u = CVector::from_real(&v).normalized()?;
        Some(u.scale(r))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ball_brackets_contain_the_closed_form(p in ball_point(), q in ball_point()) {
        let est = DistanceEstimator::new(ball(2, 1.0).unwrap()).unwrap();
        let iv = est.interval(&p, &q).unwrap();
        let exact = ball_exact(&p, &q);
        prop_assert!(iv.lower <= exact + 1e-9 && exact <= iv.upper + 1e-9, "{exact} not in [{}, {}]", iv.lower, iv.upper);
    }

    #[test]
    fn disk_and_half_plane_agree_through_the_cayley_transform(
        a in (0.0f64..0.95, 0.0f64..6.28), b in (0.0f64..0.95, 0.0f64..6.28)
    ) {
        let (a, b) = (Complex64::from_polar(a.0, a.1), Complex64::from_polar(b.0, b.1));
        let one = Complex64::new(1.0, 0.0);
        let to_h = |z: Complex64| Complex64::i() * (one + z) / (one - z);
        let d = dist_disk(a, b).unwrap();
        let h = dist_halfplane(to_h(a), to_h(b)).unwrap();
        prop_assert!((d - h).abs() < 1e-8 * (1.0 + d), "{d} vs {h}");
    }
}

#[test]
fn ellipsoid_brackets_are_symmetric_within_width() {
    let dom = PolynomialEllipsoid::power(2).unwrap().domain();
    let est = DistanceEstimator::new(dom).unwrap();
    let p = CVector::real(&[0.3, -0.4]);
    let q = CVector::new([Complex64::new(-0.2, 0.5), Complex64::new(0.1, 0.3)]);
    let (pq, qp) = (est.interval(&p, &q).unwrap(), est.interval(&q, &p).unwrap());
    assert!(pq.lower <= qp.upper + 1e-12 && qp.lower <= pq.upper + 1e-12);
}

#[test]
fn every_spec_kind_builds_a_bounded_domain() {
    for text in [
        r#"{"kind":"ball","dim":3,"radius":2}"#,
        r#"{"kind":"ellipsoid","dim":2,"weights":[3]}"#,
        r#"{"kind":"siegel","dim":2,"weights":[2]}"#,
        r#"{"kind":"flat_face","dim":2,"face_radius":0.5}"#,
    ] {
        let spec = DomainSpec::from_json(text).unwrap();
        let dom = spec.build().unwrap().bounded().unwrap();
        assert!(dom.contains(dom.center()), "{text}");
        assert!(dom.probe(20, 3).unwrap().passes(), "{text}");
    }
}
