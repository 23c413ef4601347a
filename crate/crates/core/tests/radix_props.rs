use num_bigint::BigUint;
use num_rational::BigRational;
use proptest::prelude::*;
use streche_core::radix::{frac_digits, int_digits, parse_decimal, pow, DecimalValue, Sign};

proptest! {
    #[test]
    fn int_digits_recompose(m in 0u64..10_000, r in 2u32..=6) {
        let n = 16;
        let d = int_digits(&BigUint::from(m), r, n).unwrap();
        prop_assert_eq!(d.len(), n + 1);
        prop_assert!(d.digits().iter().all(|&x| x < r));
        prop_assert_eq!(d.recompose_int(), BigUint::from(m));
    }

    #[test]
    fn int_digits_capacity_is_r_pow_n_plus_one(r in 2u32..=10, n in 1usize..8) {
        let cap = pow(r, n + 1);
        prop_assert!(int_digits(&(&cap - 1u32), r, n).is_ok());
        prop_assert!(int_digits(&cap, r, n).is_err());
    }

    #[test]
    fn decimal_text_roundtrip(int in 0u64..1_000_000_000, frac in 0u64..1000, neg: bool) {
        let text = format!("{}{int}.{frac:03}", if neg { "-" } else { "" });
        let v = parse_decimal(&text, 3).unwrap();
        let expected = BigRational::new(
            (i128::from(int) * 1000 + i128::from(frac)).into(),
            1000.into(),
        );
        let expected = if neg { -expected } else { expected };
        prop_assert_eq!(v.to_rational(), expected);
        prop_assert_eq!(v.is_negative(), neg && (int > 0 || frac > 0));
    }

    #[test]
    fn frac_digits_recompose(frac in 0u64..1000, base in prop::sample::select(vec![10u32, 100, 1000, 20, 50])) {
        let v = DecimalValue::new(Sign::Positive, BigUint::from(3u8), frac, 3).unwrap();
        let d = frac_digits(&v, base).unwrap();
        prop_assert!(d.digits().iter().all(|&x| x < base));
        prop_assert_eq!(d.recompose_frac(), BigRational::new(frac.into(), 1000.into()));
    }
}

#[test]
fn base_ten_yields_n_d_digits_most_significant_first() {
    let v = parse_decimal("3.14", 3).unwrap();
    assert_eq!(frac_digits(&v, 10).unwrap().digits(), &[1, 4, 0]);
    let w = parse_decimal("0.007", 3).unwrap();
    assert_eq!(frac_digits(&w, 10).unwrap().digits(), &[0, 0, 7]);
}
