use approx::assert_relative_eq;
use opgeom::special::{bernstein_basis, beta, mkz_basis_weight, LogDomainValue};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn partition_of_unity(n in 0u64..=64, x in 0.0f64..=1.0) {
        let s: f64 = (0..=n).map(|k| bernstein_basis(n, k, x).unwrap()).sum();
        prop_assert!((s - 1.0).abs() <= 1e-12, "n={n} x={x} sum={s}");
    }

    #[test]
    fn basis_symmetry(n in 0u64..=64, frac in 0.0f64..=1.0, x in 0.0f64..=1.0) {
        let k = (frac * n as f64).floor() as u64;
        let a = bernstein_basis(n, k, x).unwrap();
        let b = bernstein_basis(n, n - k, 1.0 - x).unwrap();
        prop_assert!((a - b).abs() <= 1e-13, "{a} vs {b}");
    }

    #[test]
    fn beta_is_symmetric(a in 1e-3f64..50.0, b in 1e-3f64..50.0) {
        prop_assert_eq!(beta(a, b).unwrap(), beta(b, a).unwrap());
    }

    #[test]
    fn mkz_partial_sums_increase_to_one(n in 1u64..=24, x in 0.0f64..0.95) {
        let mut s = 0.0;
        for k in 0..=600 {
            let next = s + mkz_basis_weight(n, k, x).unwrap();
            prop_assert!(next >= s);
            s = next;
        }
        prop_assert!(s <= 1.0 + 1e-12, "sum {s}");
    }

    #[test]
    fn log_domain_round_trip(m in 1.0f64..10.0, e in -17i32..=17, neg: bool) {
        let v = if neg { -m } else { m } * 10f64.powi(e);
        let back = LogDomainValue::from_f64(v).to_f64();
        assert_relative_eq!(back, v, max_relative = 1e-14);
    }
}

#[test]
fn zero_sign_means_zero() {
    let z = LogDomainValue::from_f64(0.0);
    assert_eq!(z.sign, 0);
    assert_eq!(z.to_f64(), 0.0);
    assert_eq!(LogDomainValue { log_abs: 5.0, sign: 0 }.to_f64(), 0.0);
}
