use conedbar::geometry::{blowup_map, distance_bounds, inverse_blowup, Chart, ChartPoint, ConeModel};
use conedbar::cauchy::{ChartField, CauchyTransform, DiscGrid};
use conedbar::obstruction::{rr_dims, Dim, Triviality};
use conedbar::C;
use proptest::prelude::*;

fn triviality() -> impl Strategy<Value = Triviality> {
    prop_oneof![Just(Triviality::Trivial), Just(Triviality::NonTrivial)]
}

fn point() -> impl Strategy<Value = (bool, f64, f64, f64, f64)> {
    (any::<bool>(), -2.0..2.0f64, -2.0..2.0f64, -1.5..1.5f64, -1.5..1.5f64)
}

fn chart_point((b, tr, ti, sr, si): (bool, f64, f64, f64, f64)) -> ChartPoint<f64> {
    ChartPoint::new(if b { Chart::A } else { Chart::B }, C::new(tr, ti), C::new(sr, si))
}

proptest! {
    #[test]
    fn riemann_roch_holds_wherever_dims_are_exact(g in 0u32..5, d in -30i64..30, t in triviality()) {
        if let (Dim::Exact(h0), Dim::Exact(h1)) = rr_dims(g, d, t) {
            prop_assert_eq!(h0 as i64 - h1 as i64, d + 1 - i64::from(g));
        }
    }

    #[test]
    fn serre_duality_swaps_h0_and_h1(g in 0u32..2, d in -30i64..30, t in triviality()) {
        let (h0, h1) = rr_dims(g, d, t);
        let (k0, k1) = rr_dims(g, 2 * i64::from(g) - 2 - d, t);
        prop_assert_eq!(h0, k1);
        prop_assert_eq!(h1, k0);
    }

    #[test]
    fn high_genus_is_exact_outside_the_special_window(g in 2u32..6, d in -30i64..30, t in triviality()) {
        let special = (0..=2 * i64::from(g) - 2).contains(&d);
        let (h0, h1) = rr_dims(g, d, t);
        if !special {
            prop_assert!(h0.exact().is_some() && h1.exact().is_some());
        }
    }

    #[test]
    fn chart_transition_is_an_involution_and_commutes_with_blowup(e in 1u32..6, p in point()) {
        let cone = ConeModel::new(e).unwrap();
        let p = chart_point(p);
        prop_assume!(p.base.norm() > 0.05);
        let q = p.transition(&cone).unwrap();
        let back = q.transition(&cone).unwrap();
        prop_assert!((back.base - p.base).norm() < 1e-12 * (1.0 + p.base.norm()));
        prop_assert!((back.fiber - p.fiber).norm() < 1e-9 * (1.0 + p.fiber.norm()));
        let (zp, zq) = (blowup_map(&cone, &p), blowup_map(&cone, &q));
        let scale = 1.0 + zp.norm();
        for (a, b) in zp.coords.iter().zip(&zq.coords) {
            prop_assert!((a - b).norm() < 1e-10 * scale);
        }
        prop_assert!(zp.cone_residual() < 1e-10);
    }

    #[test]
    fn inverse_blowup_recovers_off_the_exceptional_curve(e in 1u32..6, p in point()) {
        let cone = ConeModel::new(e).unwrap();
        let p = chart_point(p);
        prop_assume!(p.fiber.norm() > 0.05);
        let z = blowup_map(&cone, &p);
        let q = inverse_blowup(&cone, &z).unwrap();
        let w = blowup_map(&cone, &q);
        for (a, b) in z.coords.iter().zip(&w.coords) {
            prop_assert!((a - b).norm() < 1e-9 * (1.0 + z.norm()));
        }
    }

    #[test]
    fn distance_bounds_are_ordered_symmetric_and_homogeneous(
        e in 1u32..5, p in point(), q in point(), lambda in 0.1..10.0f64,
    ) {
        let cone = ConeModel::new(e).unwrap();
        let z = blowup_map(&cone, &chart_point(p));
        let w = blowup_map(&cone, &chart_point(q));
        let (lo, hi) = distance_bounds(&z, &w);
        prop_assert!(lo <= hi * (1.0 + 1e-12));
        let (lo2, hi2) = distance_bounds(&w, &z);
        prop_assert!((lo - lo2).abs() <= 1e-12 * (1.0 + lo));
        prop_assert!((hi - hi2).abs() <= 1e-12 * (1.0 + hi));
        let (ls, hs) = distance_bounds(&z.scale(lambda), &w.scale(lambda));
        prop_assert!((ls - lambda * lo).abs() <= 1e-9 * (1.0 + lambda * lo));
        prop_assert!((hs - lambda * hi).abs() <= 1e-9 * (1.0 + lambda * hi));
    }

    #[test]
    fn cauchy_transform_is_linear(
        c in (-2.0..2.0f64, -2.0..2.0f64),
        k in 0i32..4,
        a in (-1.0..1.0f64, -1.0..1.0f64),
    ) {
        let grid = DiscGrid::new(1.0, 8, 16).unwrap();
        let f = ChartField::from_fn(grid, |w: C<f64>| C::new(1.0 - w.norm_sqr(), 0.0) * w.powi(k));
        let g = ChartField::from_fn(grid, |w: C<f64>| C::new(w.re, -w.im * w.re));
        let c = C::new(c.0, c.1);
        let combo = f.axpy(c, &g).unwrap();
        let (tf, tg, tc) = (
            CauchyTransform::new(&f).unwrap(),
            CauchyTransform::new(&g).unwrap(),
            CauchyTransform::new(&combo).unwrap(),
        );
        let a = C::new(a.0, a.1) * 1.5;
        let lhs = tc.eval(a);
        let rhs = tf.eval(a) + tg.eval(a) * c;
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
    }
}
