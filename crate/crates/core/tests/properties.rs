use proptest::prelude::*;

use finsler_core::config::parse_config;
use finsler_core::contact::{ContactGeometry, ContactTriple};
use finsler_core::curvature::{flag_curvature, hh_curvature, CurvatureSample};
use finsler_core::ehresmann::{check_pi_theta, homogeneity_residuals};
use finsler_core::fd::{fd_partial_auto, multi_indices, relative_error};
use finsler_core::geometry::{Geometry, Part};
use finsler_core::jet::jet_eval;
use finsler_core::metric::{fundamental_tensor, FinslerMetric, SquaredNorm};
use finsler_core::point::BasePoint;
use finsler_core::suite::{run_suite, sample_points};

fn metric(i: usize) -> FinslerMetric {
    [FinslerMetric::euclidean(3).unwrap(), FinslerMetric::heisenberg3(), FinslerMetric::randers3()][i].clone()
}

fn point() -> impl Strategy<Value = BasePoint> {
    (prop::array::uniform3(-1.0f64..1.0), prop::array::uniform3(-2.0f64..2.0))
        .prop_filter("away from the zero section", |(_, y)| y.iter().map(|v| v * v).sum::<f64>() > 0.25)
        .prop_map(|(x, y)| BasePoint::new(x.to_vec(), y.to_vec()).unwrap())
}

fn vec3() -> impl Strategy<Value = Vec<f64>> {
    prop::array::uniform3(-1.0f64..1.0).prop_map(|a| a.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn f_is_positively_homogeneous(p in point(), which in 0usize..3, l in 0.1f64..5.0) {
        let f = metric(which);
        let a = f.f_value(&p.scaled(l)).unwrap();
        let b = l * f.f_value(&p).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        let g0 = fundamental_tensor(&f, &p).unwrap();
        let g1 = fundamental_tensor(&f, &p.scaled(l)).unwrap();
        prop_assert!((g0 - g1).amax() < 1e-10);
    }

    #[test]
    fn jets_agree_with_finite_differences(p in point()) {
        let f = FinslerMetric::randers3();
        let sq = SquaredNorm(&f);
        let jet = jet_eval(&sq, &p, 3).unwrap();
        for alpha in multi_indices(6, 3) {
            let r = relative_error(jet.partial(&alpha).unwrap(), fd_partial_auto(&sq, &p, &alpha).unwrap());
            prop_assert!(r < 1e-4, "{:?} {}", alpha, r);
        }
    }

    #[test]
    fn ehresmann_splitting(p in point(), which in 0usize..3, x in vec3()) {
        let f = metric(which);
        prop_assert!(check_pi_theta(&f, &p, &x, 1e-9).unwrap().pass);
        let (rg, rn) = homogeneity_residuals(&f, &p, &[0.5, 2.0]).unwrap();
        prop_assert!(rg < 1e-9 && rn < 1e-9);
    }

    #[test]
    fn curvature_is_antisymmetric(p in point(), which in 0usize..3, x in vec3(), y in vec3(), z in vec3()) {
        let geo = Geometry::at(&metric(which), &p).unwrap();
        let (fx, fy, fz) = (geo.const_field(&x), geo.const_field(&y), geo.const_field(&z));
        let (c1, a1) = hh_curvature(&geo, &fx, &fy, &fz).unwrap();
        let (c2, _) = hh_curvature(&geo, &fy, &fx, &fz).unwrap();
        for i in 0..3 {
            prop_assert!((c1[i] + c2[i]).abs() < 1e-9);
            prop_assert!((c1[i] - a1[i]).abs() < 1e-5);
        }
    }

    #[test]
    fn flag_is_even_and_scale_free(p in point(), l in vec3(), k in 0.2f64..4.0) {
        prop_assume!((l[0] * l[0] + l[1] * l[1]) > 1e-2);
        let geo = Geometry::at(&FinslerMetric::heisenberg3(), &p).unwrap();
        let cg = ContactGeometry::new(&geo, &ContactTriple::heisenberg3()).unwrap();
        let cs = CurvatureSample::at(&geo).unwrap();
        let a = flag_curvature(&cg, &cs, &l).unwrap().k;
        let neg: Vec<f64> = l.iter().map(|v| -k * v).collect();
        let b = flag_curvature(&cg, &cs, &neg).unwrap().k;
        prop_assert!((a - b).abs() < 1e-10);
        prop_assert!((a - 1.0).abs() < 1e-4);
    }

    #[test]
    fn operators_kill_xi_for_the_cartan_frame(p in point()) {
        let geo = Geometry::at(&FinslerMetric::randers3(), &p).unwrap();
        let cg = ContactGeometry::new(&geo, &ContactTriple::cartan_frame(3).unwrap()).unwrap();
        for part in [Part::H, Part::V] {
            let alg = cg.operator_algebra(&cg.operator(part).unwrap()).unwrap();
            prop_assert!(alg.on_xi < 1e-9, "{:?}", alg);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn sampler_is_bounded_and_reproducible(seed in any::<u64>()) {
        let a = sample_points(3, 20, seed);
        prop_assert_eq!(&a, &sample_points(3, 20, seed));
        for p in &a {
            prop_assert!(p.x.iter().all(|c| c.abs() <= 1.0));
            prop_assert!(p.y_norm() >= 0.5 - 1e-12 && p.y_norm() <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn suite_is_deterministic(seed in 0u64..1000) {
        let cfg = parse_config(&format!(r#"{{"metric": "randers3", "triple": "cartan-frame", "sampler": {{"seed": {seed}, "count": 2}}}}"#)).unwrap();
        let bits = |o: finsler_core::suite::SuiteOutput| o.report.entries.iter().map(|e| e.residual.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(run_suite(&cfg)), bits(run_suite(&cfg)));
    }
}
