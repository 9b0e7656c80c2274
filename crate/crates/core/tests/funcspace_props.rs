use opgeom::funcspace::{
    apply_b1, f_transform_default, project_to_cpsi, psi, psi_norm, EvaluationGrid, Function01, Polynomial, REGISTRY,
};
use proptest::prelude::*;

fn grid() -> EvaluationGrid {
    EvaluationGrid::chebyshev(257).unwrap()
}

fn in_cpsi(name: &str) -> Function01 {
    let f = Function01::registry(name).unwrap();
    if name == "osc" {
        Function01::psi_times(&f)
    } else {
        project_to_cpsi(&f)
    }
}

fn poly_strategy() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec(-5.0f64..5.0, 1..7).prop_map(Polynomial::new)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn psi_norm_is_homogeneous(i in 0usize..REGISTRY.len(), c in -1e3f64..1e3) {
        let g = grid();
        let f = in_cpsi(REGISTRY[i]);
        let a = psi_norm(&f.scale(c), &g).unwrap().value;
        let b = c.abs() * psi_norm(&f, &g).unwrap().value;
        prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * b.max(1e-300), "{a} vs {b}");
    }

    #[test]
    fn psi_norm_triangle(i in 0usize..REGISTRY.len(), j in 0usize..REGISTRY.len(), a in -3.0f64..3.0) {
        let g = grid();
        let (f, h) = (in_cpsi(REGISTRY[i]).scale(a), in_cpsi(REGISTRY[j]));
        let lhs = psi_norm(&f.add(&h), &g).unwrap().value;
        let rhs = psi_norm(&f, &g).unwrap().value + psi_norm(&h, &g).unwrap().value;
        prop_assert!(lhs <= rhs + 1e-12);
    }

    #[test]
    fn b1_is_idempotent(p in poly_strategy(), x in 0.0f64..=1.0) {
        let f = Function01::polynomial("p", p);
        let once = apply_b1(&f);
        let twice = apply_b1(&once);
        prop_assert!((once.eval(x) - twice.eval(x)).abs() <= 1e-15 * (1.0 + once.eval(x).abs()));
    }

    #[test]
    fn projection_vanishes_at_endpoints(p in poly_strategy()) {
        let f1 = project_to_cpsi(&Function01::polynomial("p", p));
        prop_assert_eq!(f1.eval(0.0), 0.0);
        prop_assert_eq!(f1.eval(1.0), 0.0);
    }

    #[test]
    fn f_transform_is_linear(i in 0usize..REGISTRY.len(), j in 0usize..REGISTRY.len(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let f = Function01::registry(REGISTRY[i]).unwrap();
        let h = Function01::registry(REGISTRY[j]).unwrap();
        let lhs = f_transform_default(&Function01::lin_comb(a, &f, b, &h)).unwrap();
        let (ff, fh) = (f_transform_default(&f).unwrap(), f_transform_default(&h).unwrap());
        for &x in grid().points().iter().step_by(16) {
            let rhs = a * ff.eval(x) + b * fh.eval(x);
            prop_assert!((lhs.eval(x) - rhs).abs() <= 1e-10, "x={x}: {} vs {rhs}", lhs.eval(x));
        }
    }
}

#[test]
fn f_transform_lands_in_cpsi() {
    let g = grid();
    for name in REGISTRY {
        let f = Function01::registry(name).unwrap();
        let fe = f.clone();
        let abs = Function01::from_fn(format!("|{name}|"), move |x| fe.eval(x).abs()).with_hint(f.hint().clone());
        let a = psi_norm(&f_transform_default(&f).unwrap(), &g).unwrap().value;
        let b = psi_norm(&f_transform_default(&abs).unwrap(), &g).unwrap().value;
        assert!(a.is_finite() && a <= b + 1e-10, "{name}: {a} vs {b}");
    }
}

#[test]
fn grid_excludes_endpoints() {
    for count in [3usize, 33, 1001] {
        let g = EvaluationGrid::chebyshev(count).unwrap();
        let p = g.points();
        assert!(p[0] > 0.0 && p[p.len() - 1] < 1.0);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
    }
    assert!(EvaluationGrid::chebyshev(2).is_err());
}

#[test]
fn psi_norm_reports_its_argmax() {
    let g = grid();
    let f = in_cpsi("sin_pi");
    let est = psi_norm(&f, &g).unwrap();
    let x = est.argmax_point;
    assert!(est.value >= (f.eval(x) / psi(x)).abs() - 1e-15);
}
