use conedbar::cauchy::{probe_points, DiscGrid};
use conedbar::cp1::*;
use conedbar::geometry::Chart;
use conedbar::{Error, C};

type Cx = C<f64>;

fn grid(n: f64) -> DiscGrid<f64> {
    DiscGrid::chart(1.0 / n).unwrap()
}

fn opts() -> Cp1Options<f64> {
    Cp1Options::default()
}

#[test]
fn zero_form_gives_zero_section() {
    let g = BundleForm::zeros(0, grid(16.0));
    let u = solve_scalar_cp1(&g, &opts()).unwrap();
    for w in probe_points(1.0, 30) {
        assert_eq!(u.eval(Chart::A, w), Cx::new(0.0, 0.0));
        assert_eq!(u.eval(Chart::B, w), Cx::new(0.0, 0.0));
    }
}

#[test]
fn scalar_solution_recovers_fubini_study_potential() {
    let g = fubini_study_form(grid(64.0));
    let u = solve_scalar_cp1(&g, &opts()).unwrap();
    let f0 = |c: Chart, w: Cx| match c {
        Chart::A => 1.0 / (1.0 + w.norm_sqr()),
        Chart::B => w.norm_sqr() / (1.0 + w.norm_sqr()),
    };
    let k = u.eval(Chart::A, Cx::new(0.0, 0.0)) - f0(Chart::A, Cx::new(0.0, 0.0));
    let mut worst: f64 = 0.0;
    for c in [Chart::A, Chart::B] {
        for w in probe_points(1.3, 80) {
            worst = worst.max((u.eval(c, w) - f0(c, w) - k).norm());
        }
    }
    assert!(worst < 1e-3, "Sg - f0 varies by {worst}");
    assert!(dbar_residual(&u, &g, 4) < 1e-3);
}

#[test]
fn bundle_solver_matches_scalar_for_trivial_bundle() {
    let g = fubini_study_form(grid(32.0));
    let a = solve_scalar_cp1(&g, &opts()).unwrap();
    let b = solve_bundle_cp1(&g, &opts()).unwrap();
    let shift = a.eval(Chart::A, Cx::new(0.0, 0.0)) - b.eval(Chart::A, Cx::new(0.0, 0.0));
    for w in probe_points(1.0, 40) {
        assert!((a.eval(Chart::A, w) - b.eval(Chart::A, w) - shift).norm() < 1e-6);
    }
}

fn manufactured(m: i64, seed: u64, n: f64) -> f64 {
    let s = SmoothSection::random(m, seed).unwrap();
    let g = s.form(grid(n));
    let u = solve_bundle_cp1(&g, &opts()).unwrap();
    assert!(u.transition_mismatch() < 1e-8, "transition {}", u.transition_mismatch());
    dbar_residual(&u, &g, 2)
}

#[test]
fn manufactured_degree_two() {
    let r = manufactured(2, 7, 64.0);
    assert!(r < 1e-3, "residual {r}");
}

#[test]
fn manufactured_degree_minus_one() {
    let r = manufactured(-1, 11, 64.0);
    assert!(r < 1e-3, "residual {r}");
}

#[test]
fn residual_converges_at_second_order() {
    let r: Vec<f64> = [16.0, 32.0, 64.0].iter().map(|&n| manufactured(1, 3, n)).collect();
    let order = (r[0] / r[2]).log2() / 2.0;
    assert!(order >= 1.8, "residuals {r:?}");
}

#[test]
fn negative_degrees_are_redirected() {
    let g = BundleForm::zeros(-2, grid(16.0));
    assert_eq!(solve_bundle_cp1(&g, &opts()).unwrap_err(), Error::ObstructedDegree { m: -2 });
    assert!(solve_scalar_cp1(&BundleForm::zeros(1, grid(16.0)), &opts()).is_err());
}

#[test]
fn incompatible_seam_is_rejected() {
    let g = BundleForm::from_fn(0, grid(32.0), |_| Cx::new(1.0, 0.0), |_| Cx::new(0.0, 0.0));
    assert!(matches!(solve_scalar_cp1(&g, &opts()), Err(Error::SeamMismatch { .. })));
}

#[test]
fn exact_form_has_no_obstruction() {
    let s = SmoothSection::random(-2, 5).unwrap();
    let g = s.form(grid(64.0));
    let (c, partial) = cech_obstruction(&g, &opts()).unwrap();
    assert_eq!(c.len(), 1);
    assert!(c.values[0].norm() < 1e-6, "contour {}", c.values[0]);
    assert!(c.pairing[0].norm() < 1e-6, "pairing {}", c.pairing[0]);
    assert!(dbar_residual(&partial, &g, 2) < 1e-3);
}

#[test]
fn smeared_cocycle_has_unit_class() {
    let g = smeared_cocycle(-2, -1, grid(64.0));
    let (c, partial) = cech_obstruction(&g, &opts()).unwrap();
    assert!((c.values[0] - 1.0).norm() < 1e-4, "contour {}", c.values[0]);
    assert!((c.pairing[0] - 1.0).norm() < 1e-4, "pairing {}", c.pairing[0]);
    let rep = obstruction_representative(&c, g.grid());
    let rest = g.axpy(Cx::new(-1.0, 0.0), &rep).unwrap();
    let r = dbar_residual(&partial, &rest, 2);
    assert!(r < 1e-3, "partial residual {r}");
    assert!(partial.transition_mismatch() < 1e-8);
}

#[test]
fn obstruction_length_tracks_degree() {
    let g = smeared_cocycle(-3, -2, grid(64.0));
    let (c, _) = cech_obstruction(&g, &opts()).unwrap();
    assert_eq!(c.len(), 2);
    assert!(c.values[0].norm() < 1e-4);
    assert!((c.values[1] - 1.0).norm() < 1e-4, "{:?}", c.values);
}

#[test]
fn solver_is_linear() {
    let gr = grid(16.0);
    let g1 = SmoothSection::random(1, 1).unwrap().form(gr);
    let g2 = SmoothSection::random(1, 2).unwrap().form(gr);
    let a = Cx::new(0.7, -1.3);
    let lhs = solve_bundle_cp1(&g2.axpy(a, &g1).unwrap(), &opts()).unwrap();
    let s1 = solve_bundle_cp1(&g1, &opts()).unwrap();
    let s2 = solve_bundle_cp1(&g2, &opts()).unwrap();
    for c in [Chart::A, Chart::B] {
        for w in probe_points(1.2, 30) {
            let d = lhs.eval(c, w) - (s1.eval(c, w) * a + s2.eval(c, w));
            assert!(d.norm() < 1e-10, "{d}");
        }
    }
}

#[test]
fn holomorphic_sections_have_riemann_roch_dimension() {
    for m in -3..=3 {
        let (dim, sv) = holomorphic_dimension(m, 1.0 / 32.0, 1e-6).unwrap();
        assert_eq!(dim, (m + 1).max(0) as usize, "m = {m}, singular values {sv:?}");
    }
}

#[test]
fn holder_quotient_is_refinement_stable() {
    // |t - c|^{-1/4} times a cutoff: in L^4, so Sg is C^{1/2}
    let c = Cx::new(0.13, -0.07);
    let cut = conedbar::quadrature::RadialStep::new(0.5, 0.8);
    let raw = move |t: Cx| Cx::new((t - c).norm().powf(-0.25) * (1.0 - cut.value(t)), 0.0);
    let quotient = |n: f64| {
        let g0 = BundleForm::from_fn(0, grid(n), raw, |_| Cx::new(0.0, 0.0));
        let l4 = g0.g_a.lp_norm(4.0);
        let g = BundleForm::from_fn(0, grid(n), move |t| raw(t) / l4, |_| Cx::new(0.0, 0.0));
        let u = solve_scalar_cp1(&g, &opts()).unwrap();
        holder_quotient(|w| u.eval(Chart::A, w), &probe_points(1.0, 150), 0.5)
    };
    let (q1, q2) = (quotient(32.0), quotient(64.0));
    assert!(q1.is_finite() && q2 < 10.0, "{q1} {q2}");
    assert!((q1 / q2 - 1.0).abs() < 0.25, "{q1} {q2}");
}
