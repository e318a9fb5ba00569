use std::f64::consts::PI;
use std::sync::Arc;

use conedbar::bundle::{BundleFunction, BundleOptions};
use conedbar::cone::*;
use conedbar::cp1::{fubini_study_form, solve_scalar_cp1, Cp1Options};
use conedbar::geometry::{AmbientPoint, Chart, ConeModel};
use conedbar::quadrature::PolyBump;
use conedbar::{DiscGrid64, C};

type Cx = C<f64>;

fn cone(e: u32) -> ConeModel {
    ConeModel::new(e).unwrap()
}

#[test]
fn exact_smooth_forms_are_weakly_closed() {
    for seed in [1, 2] {
        let form = generate_test_form(cone(2), 1.0, TestFormKind::ExactSmooth, seed).unwrap();
        let u = form.potential().unwrap().clone();
        let battery = default_battery(2, 1.0);
        assert!(battery.len() >= 20);
        let r = weak_dbar_residual(&u, form.pullback().as_ref(), &battery, 16);
        assert!(r < 1e-8, "seed {seed}: {r}");
    }
}

#[test]
fn zero_pair_has_zero_weak_residual() {
    let f = BundleFunction::<f64>::zero(1);
    let g = ConeForm::zero(cone(1), 1.0);
    assert_eq!(weak_dbar_residual(&f, g.pullback().as_ref(), &default_battery(1, 1.0), 6), 0.0);
}

#[test]
fn singular_form_has_finite_l2_norm() {
    let form = generate_test_form(cone(2), 1.0f64, TestFormKind::ExactSingular, 3).unwrap();
    let n: Vec<f64> = [8, 16, 32].iter().map(|&n| lp_norm(&form, Norm::L2, &ConeQuadrature::new(2, 1.0, n, n))).collect();
    assert!(n.iter().all(|v| v.is_finite()));
    // Successive differences shrink: the quadrature converges.
    assert!((n[2] - n[1]).abs() < 0.5 * (n[1] - n[0]).abs(), "{n:?}");
    // The sup norm grows as the quadrature approaches the apex.
    let s1 = lp_norm(&form, Norm::Sup, &ConeQuadrature::new(2, 1.0, 8, 8));
    let s2 = lp_norm(&form, Norm::Sup, &ConeQuadrature::new(2, 1.0, 8, 32));
    assert!(s2 > 1.5 * s1, "{s1} {s2}");
}

#[test]
fn bounded_random_form_has_finite_sup() {
    let form = generate_test_form(cone(2), 0.8f64, TestFormKind::BoundedRandom, 4).unwrap();
    let s1 = lp_norm(&form, Norm::Sup, &ConeQuadrature::new(2, 0.8, 8, 8));
    let s2 = lp_norm(&form, Norm::Sup, &ConeQuadrature::new(2, 0.8, 8, 32));
    assert!(s1.is_finite() && s1 > 0.0);
    assert!(s2 < 1.5 * s1, "{s1} {s2}");
}

#[test]
fn volume_of_the_ball_in_c2() {
    // Y_1 = C², so the unit function has squared L² norm π² ε⁴ / 2.
    let eps = 0.7f64;
    let one = BundleFunction::new(1, |_, _, ss: &[Cx]| vec![C::new(1.0, 0.0); ss.len()]);
    let want = PI * PI * eps.powi(4) / 2.0;
    for n in [8, 16] {
        let q = ConeQuadrature::new(1, eps, n, n);
        let v = function_norm(&cone(1), &one, Norm::L2, &q).powi(2);
        assert!((v - want).abs() < 1e-6 * want, "n = {n}: {v} vs {want}");
    }
}

#[test]
fn norms_are_homogeneous() {
    let q = ConeQuadrature::new(2, 1.0, 8, 8);
    let form = generate_test_form(cone(2), 1.0f64, TestFormKind::ExactSmooth, 9).unwrap();
    for norm in [Norm::L2, Norm::Sup] {
        let a = lp_norm(&form, norm, &q);
        let b = lp_norm(&form.scaled(2.0), norm, &q);
        assert!((b - 2.0 * a).abs() <= 1e-12 * b, "{a} {b}");
    }
    assert_eq!(lp_norm(&ConeForm::zero(cone(2), 1.0), Norm::L2, &q), 0.0);
    assert_eq!(lp_norm(&ConeForm::zero(cone(2), 1.0), Norm::Sup, &q), 0.0);
}

fn transfer_family() -> Vec<Arc<dyn Fn(&AmbientPoint<f64>) -> Cx + Send + Sync>> {
    vec![
        Arc::new(|_z: &AmbientPoint<f64>| C::new(1.0, 0.0)),
        Arc::new(|z: &AmbientPoint<f64>| z.coords[0] + z.coords[1].conj()),
        Arc::new(|z: &AmbientPoint<f64>| C::new((-z.norm().powi(2) * 3.0).exp(), 0.0)),
        Arc::new(|z: &AmbientPoint<f64>| z.coords.last().unwrap() * 2.0 + 0.5),
    ]
}

#[test]
fn norm_transfer_is_exact_for_the_plane() {
    let (lo, hi) = norm_transfer_check(&cone(1), 1.0, 1.0, &transfer_family(), 12).unwrap();
    assert!((lo - 1.0).abs() < 1e-8 && (hi - 1.0).abs() < 1e-8, "[{lo}, {hi}]");
}

#[test]
fn norm_transfer_respects_distortion_bounds() {
    let (lo, hi) = norm_transfer_check(&cone(2), 1.0, 1.0, &transfer_family(), 12).unwrap();
    let (cmin, cmax) = transfer_bounds(&cone(2), 1.0).unwrap();
    assert_eq!((cmin, cmax), (1.0, 6.0));
    assert!(lo >= cmin - 1e-12 && hi <= cmax + 1e-12, "[{lo}, {hi}]");
    let zero: Vec<Arc<dyn Fn(&AmbientPoint<f64>) -> Cx + Send + Sync>> =
        vec![Arc::new(|_z: &AmbientPoint<f64>| C::new(0.0, 0.0))];
    assert!(norm_transfer_check(&cone(2), 1.0, 1.0, &zero, 6).is_none());
}

fn radial_pairs(c: &ConeModel, eps: f64, n: usize) -> Vec<(AmbientPoint<f64>, AmbientPoint<f64>)> {
    sample_pairs(c, eps, 4 * n, 7).into_iter().skip(1).step_by(4).collect()
}

#[test]
fn holder_quotient_of_square_root() {
    let c = cone(2);
    let f = |z: &AmbientPoint<f64>| C::new(z.norm().sqrt(), 0.0);
    let q = holder_quotient(&f, &radial_pairs(&c, 1.0, 200), 0.5, false);
    assert!(q <= 1.0 + 1e-6, "{q}");
    let g = |z: &AmbientPoint<f64>| C::new(z.norm(), 0.0);
    let all = sample_pairs(&c, 1.0, 400, 3);
    assert!(holder_quotient(&g, &all, 0.5, false) <= 1.0 + 1e-9);
    let k = |_z: &AmbientPoint<f64>| C::new(2.0, -1.0);
    assert_eq!(holder_quotient(&k, &all, 0.5, false), 0.0);
}

#[test]
fn pairs_straddle_the_apex() {
    let pairs = sample_pairs(&cone(3), 1.0f64, 40, 1);
    let straddling = pairs
        .iter()
        .filter(|(z, w)| {
            let (lo, hi) = conedbar::geometry::distance_bounds(z, w);
            (hi - (z.norm() + w.norm())).abs() < 1e-12 && (lo - hi).abs() < 1e-12 && !w.is_apex()
        })
        .count();
    assert!(straddling >= 10);
    assert!(pairs.iter().any(|(_, w)| w.is_apex()));
}

#[test]
fn weak_residual_of_manufactured_pair() {
    let form = generate_test_form(cone(1), 1.0, TestFormKind::BoundedRandom, 5).unwrap();
    let u = form.potential().unwrap().clone();
    let r = weak_dbar_residual(&u, form.pullback().as_ref(), &default_battery(1, 1.0), 12);
    assert!(r < 1e-4, "{r}");
}

#[test]
fn weak_residual_across_the_seam_decreases() {
    let battery: Vec<(Chart, PolyBump<f64>)> = (0..8)
        .map(|i| {
            let chart = if i % 2 == 0 { Chart::A } else { Chart::B };
            (chart, PolyBump { center: Cx::from_polar(1.0, 0.8 * i as f64), radius: 0.1 })
        })
        .collect();
    let mut res = Vec::new();
    for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
        let g = fubini_study_form(DiscGrid64::chart(h).unwrap());
        let u = solve_scalar_cp1(&g, &Cp1Options::default()).unwrap();
        let f = |c: Chart, t: Cx| u.eval(c, t);
        let gg = |c: Chart, t: Cx| {
            let v = t / (1.0 + t.norm_sqr()).powi(2);
            if c == Chart::A {
                -v
            } else {
                v
            }
        };
        res.push(weak_dbar_residual_cp1(f, gg, &battery, 24));
    }
    assert!(res[1] < res[0] && res[2] < res[1], "{res:?}");
}

fn opts(h: f64) -> ConeOptions<f64> {
    ConeOptions {
        bundle: BundleOptions { base_h: h, fiber_rings: 16, ..Default::default() },
        mu_max: 8,
        ..Default::default()
    }
}

#[test]
fn l2_solve_of_zero() {
    let r = solve_l2(&ConeForm::zero(cone(2), 1.0), &opts(1.0 / 16.0)).unwrap();
    assert_eq!(r.l2_out, 0.0);
    assert_eq!(r.constant_estimate, 0.0);
    assert!(r.obstruction.clean);
}

#[test]
fn bounded_solve_of_zero() {
    let r = solve_bounded(&ConeForm::zero(cone(2), 1.0), &opts(1.0 / 16.0)).unwrap();
    assert_eq!(r.sup_out, 0.0);
}

#[test]
fn bounded_solve_rejects_unbounded_forms() {
    let form = generate_test_form(cone(2), 1.0, TestFormKind::ExactSingular, 1).unwrap();
    assert!(solve_bounded(&form, &opts(1.0 / 16.0)).is_err());
}

fn opts_rings(h: f64, rings: usize) -> ConeOptions<f64> {
    let mut o = opts(h);
    o.bundle.fiber_rings = rings;
    o
}

#[test]
fn l2_pipeline_on_exact_smooth_input() {
    let form = generate_test_form(cone(2), 1.0, TestFormKind::ExactSmooth, 1).unwrap();
    let coarse = solve_l2(&form, &opts(1.0 / 16.0)).unwrap();
    let fine = solve_l2(&form, &opts(1.0 / 32.0)).unwrap();
    for r in [&coarse, &fine] {
        assert!(r.weak_residual < 1e-2, "{}", r.weak_residual);
        assert!(r.residual < 1e-2, "{}", r.residual);
        assert!(r.obstruction.clean);
        assert!(r.constant_estimate > 0.0 && r.constant_estimate.is_finite());
    }
    let drift = fine.constant_estimate / coarse.constant_estimate;
    assert!((0.5..2.0).contains(&drift), "{drift}");
}

#[test]
fn l2_pipeline_on_singular_input_reports_a_vanishing_class() {
    let form = generate_test_form(cone(2), 1.0, TestFormKind::ExactSingular, 0).unwrap();
    let r = solve_l2(&form, &opts_rings(1.0 / 16.0, 32)).unwrap();
    assert!(r.weak_residual < 1e-2, "{}", r.weak_residual);
    let class = r.obstruction.entries.get(&-1).expect("O(-2) coefficient is obstructed");
    assert!(class.max_abs() < 1e-4, "{}", class.max_abs());
    assert!(r.obstruction.clean);
}

#[test]
fn l2_pipeline_in_the_smooth_case() {
    let form = generate_test_form(cone(1), 1.0, TestFormKind::ExactSingular, 2).unwrap();
    let r = solve_l2(&form, &opts_rings(1.0 / 16.0, 32)).unwrap();
    assert!(r.weak_residual < 1e-2, "{}", r.weak_residual);
    assert!(r.obstruction.entries.is_empty());
}

#[test]
fn bounded_pipeline_recovers_the_potential_and_is_continuous_at_the_apex() {
    let form = generate_test_form(cone(2), 1.0, TestFormKind::BoundedRandom, 3).unwrap();
    let coarse = solve_bounded(&form, &opts(1.0 / 16.0)).unwrap();
    let fine = solve_bounded(&form, &opts(1.0 / 32.0)).unwrap();
    let diff = fine.eta.axpy(C::new(-1.0, 0.0), form.potential().unwrap());
    let (rem, scale) = holomorphic_remainder(2, 1.0, &diff, 8);
    assert!(rem < 1e-2 * scale, "{rem} vs {scale}");
    assert!(fine.weak_residual < 1e-2, "{}", fine.weak_residual);
    assert!(fine.weak_residual < coarse.weak_residual, "{} {}", coarse.weak_residual, fine.weak_residual);
    for r in [&coarse, &fine] {
        assert!(r.oscillation_exponent.unwrap() >= 0.4, "{:?}", r.oscillation);
    }
    let growth = fine.holder_quotient / coarse.holder_quotient;
    assert!(growth < 2.0, "{growth}");
}
