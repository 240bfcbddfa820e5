//! Property tests for the core invariants.

use num_rational::BigRational;
use proptest::prelude::*;

use postlie::enveloping::{PbwElement, StructureConstants};
use postlie::expmap::{expm, logm};
use postlie::matrix::{bracket, Matrix, NumMatrix};
use postlie::splitting::{Side, SplittingSpec};

fn matrix_strategy(dim: usize) -> impl Strategy<Value = NumMatrix> {
    prop::collection::vec(-1.0f64..1.0, dim * dim).prop_map(move |data| {
        Matrix::from_fn(dim, |i, j| data[i * dim + j])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_antisymmetry_and_jacobi(
        a in matrix_strategy(3),
        b in matrix_strategy(3),
        c in matrix_strategy(3),
    ) {
        let ab = bracket(&a, &b).unwrap();
        let ba = bracket(&b, &a).unwrap();
        let scale = ab.frobenius_norm().max(1.0);
        prop_assert!((&ab + &ba).frobenius_norm() <= 1e-12 * scale);
        let jac = &(&bracket(&a, &bracket(&b, &c).unwrap()).unwrap()
            + &bracket(&b, &bracket(&c, &a).unwrap()).unwrap())
            + &bracket(&c, &bracket(&a, &b).unwrap()).unwrap();
        let scale = a.frobenius_norm() * b.frobenius_norm() * c.frobenius_norm();
        prop_assert!(jac.frobenius_norm() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn projections_sum_to_input(a in matrix_strategy(4), qr in any::<bool>()) {
        let spec = if qr {
            SplittingSpec::qr_skew(4)
        } else {
            SplittingSpec::lower_triangular(4)
        };
        let p = spec.project(Side::Plus, &a).unwrap();
        let m = spec.project(Side::Minus, &a).unwrap();
        prop_assert!((&(&p + &m) - &a).frobenius_norm() <= 1e-15 * a.frobenius_norm().max(1.0));
    }

    #[test]
    fn matrix_json_round_trip(a in matrix_strategy(3)) {
        let s = serde_json::to_string(&a).unwrap();
        let back: NumMatrix = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(a, back);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn expm_logm_round_trip(raw in matrix_strategy(4)) {
        prop_assume!(raw.frobenius_norm() > 1e-6);
        let a = raw.scale(&(0.5 / raw.frobenius_norm()));
        let back = logm(&expm(&a).unwrap()).unwrap();
        prop_assert!((&back - &a).frobenius_norm() <= 1e-11);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pbw_straightening_well_defined(
        word in prop::collection::vec(0u8..3, 2..5),
        swap_at in any::<prop::sample::Index>(),
    ) {
        // normalize(…x_j x_i…) = normalize(…x_i x_j…) + normalize(…[x_j,x_i]…)
        let sc = StructureConstants::sl2();
        let one = BigRational::from_integer(1.into());
        let p = swap_at.index(word.len() - 1);
        let direct = PbwElement::normalize_word(&sc, &word, one.clone(), 8);
        let mut swapped = word.clone();
        swapped.swap(p, p + 1);
        let mut alt = PbwElement::normalize_word(&sc, &swapped, one.clone(), 8);
        let consts = sc.bracket_basis(word[p] as usize, word[p + 1] as usize).to_vec();
        for (k, c) in consts.iter().enumerate() {
            if num_traits::Zero::is_zero(c) {
                continue;
            }
            let mut corrected = Vec::with_capacity(word.len() - 1);
            corrected.extend_from_slice(&word[..p]);
            corrected.push(k as u8);
            corrected.extend_from_slice(&word[p + 2..]);
            alt = alt
                .add(&PbwElement::normalize_word(&sc, &corrected, c.clone(), 8))
                .unwrap();
        }
        prop_assert_eq!(direct, alt);
    }

    #[test]
    fn graded_series_horner_matches_naive(
        raw in matrix_strategy(3),
        t in 0.01f64..0.2,
    ) {
        prop_assume!(raw.frobenius_norm() > 1e-6);
        let spec = SplittingSpec::qr_skew(3);
        let x = raw.scale(&(1.0 / raw.frobenius_norm()));
        let series = postlie::magnus::magnus_coefficients(&spec, &x, 5).unwrap();
        let horner = series.eval(&t);
        let mut naive: NumMatrix = Matrix::zeros(3);
        for n in 1..=5 {
            naive = &naive + &series.coefficient(n).scale(&t.powi(n as i32));
        }
        prop_assert!((&horner - &naive).frobenius_norm() <= 1e-13);
    }
}
