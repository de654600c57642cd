use lab_core::action::{apply_word, c0_dist_to_id, eval_point, eval_word, word_bounds, GridSpec};
use lab_core::certify::Interval;
use lab_core::diffeo::{presets, GeneratorMap, GeneratorSet};
use lab_core::words::{enumerate_positive, Letter, Word};
use lab_core::zassenhaus::{build_wreath_pair, wreath_normal_form, WreathPair};
use proptest::prelude::*;
use std::sync::OnceLock;

fn generator() -> impl Strategy<Value = GeneratorMap> {
    prop_oneof![
        (0.5f64..2.0).prop_map(|l| GeneratorMap::mobius("h", l).unwrap()),
        (-3.0f64..3.0).prop_map(|c| GeneratorMap::polybump("h", c).unwrap()),
        (0.05f64..0.45, 0.05f64..0.9, 0.55f64..0.95).prop_filter_map("monotone spline", |(x, y, x2)| {
            let y2 = y + (0.99 - y) * 0.5;
            GeneratorMap::spline("h", &[(0.0, 0.0), (x, y), (x2, y2), (1.0, 1.0)], 1.0, 1.0).ok()
        }),
    ]
}

fn pair() -> impl Strategy<Value = GeneratorSet> {
    prop_oneof![
        Just(presets::pp()),
        (0.6f64..1.8, -2.0f64..2.0).prop_map(|(l, c)| {
            GeneratorSet::new(vec![GeneratorMap::mobius("f", l).unwrap(), GeneratorMap::polybump("g", c).unwrap()])
                .unwrap()
        }),
    ]
}

fn word(max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0usize..4, 0..=max_len).prop_map(|ix| Word::reduce(ix.into_iter().map(Letter::from_index)))
}

fn wreath() -> &'static WreathPair {
    static PAIR: OnceLock<WreathPair> = OnceLock::new();
    PAIR.get_or_init(|| build_wreath_pair(0.1, Interval::new(0.40, 0.41).unwrap(), 3).unwrap())
}

fn central_diff(set: &GeneratorSet, w: &Word, x: f64) -> f64 {
    let h = 1e-6;
    (eval_point(w, x + h, set).unwrap() - eval_point(w, x - h, set).unwrap()) / (2.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn generators_are_increasing_and_fix_endpoints(g in generator(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        prop_assert!(g.eval_value(0.0).unwrap().abs() < 1e-15);
        prop_assert!((g.eval_value(1.0).unwrap() - 1.0).abs() < 1e-15);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(g.eval_value(lo).unwrap() <= g.eval_value(hi).unwrap());
        prop_assert!(g.eval_deriv(a).unwrap() > 0.0);
    }

    #[test]
    fn inverse_round_trips(g in generator(), x in 0.0f64..=1.0) {
        let y = g.eval_value(x).unwrap();
        prop_assert!((g.eval_inverse(y).unwrap() - x).abs() < 1e-10);
        prop_assert!((g.eval_value(g.eval_inverse(x).unwrap()).unwrap() - x).abs() < 1e-10);
    }

    #[test]
    fn derivative_matches_finite_difference(g in generator(), x in 0.01f64..0.99) {
        let h = 1e-6;
        let fd = (g.eval_value(x + h).unwrap() - g.eval_value(x - h).unwrap()) / (2.0 * h);
        prop_assert!((fd - g.eval_deriv(x).unwrap()).abs() < 1e-5 * g.eval_deriv(x).unwrap().max(1.0));
    }

    #[test]
    fn global_bounds_contain_sampled_derivatives(g in generator(), x in 0.0f64..=1.0) {
        let b = g.global_bounds();
        let d = g.eval_deriv(x).unwrap();
        prop_assert!(b.der_inf <= d + 1e-12 && d <= b.der_sup + 1e-12);
    }

    #[test]
    fn chain_product_matches_letters_and_difference(set in pair(), w in word(12), x in 0.01f64..0.99) {
        let t = apply_word(&w, x, &set).unwrap();
        let naive: f64 = t.letter_derivs.iter().product();
        prop_assert!((t.chain_product - naive).abs() <= 1e-12 * naive.abs());
        let fd = central_diff(&set, &w, x);
        prop_assert!((fd - t.chain_product).abs() <= 1e-4 * t.chain_product.abs().max(1.0));
    }

    #[test]
    fn word_times_inverse_is_identity(set in pair(), w in word(10), x in 0.0f64..=1.0) {
        // Undoing a contraction amplifies the rounding of y by 1 / w'(x).
        let (y, d) = eval_word(&w, x, &set).unwrap();
        let tol = 1e-10 + 1e-13 / d.min(1.0);
        prop_assert!((eval_point(&w.invert(), y, &set).unwrap() - x).abs() < tol);
        prop_assert!(w.concat_reduce(&w.invert()).is_empty());
    }

    #[test]
    fn derivative_stays_inside_composed_bounds(set in pair(), w in word(8), x in 0.0f64..=1.0) {
        let b = word_bounds(&w, &set).unwrap();
        let (_, d) = eval_word(&w, x, &set).unwrap();
        prop_assert!(b.der_inf * (1.0 - 1e-12) <= d && d <= b.der_sup * (1.0 + 1e-12));
    }

    #[test]
    fn c0_bound_dominates_dense_samples(set in pair(), w in word(6), seed in 0u64..1000) {
        let est = c0_dist_to_id(&w, GridSpec::new(200).unwrap(), &set).unwrap();
        for k in 0..2000u64 {
            let x = ((k * 7919 + seed) % 2000) as f64 / 1999.0;
            let d = (eval_point(&w, x, &set).unwrap() - x).abs();
            prop_assert!(d <= est.certified_bound + 1e-12);
        }
        prop_assert!(est.certified_bound - est.grid_max <= 1.0 / 200.0 + 1e-15);
    }

    #[test]
    fn reduction_is_canonical(ix in prop::collection::vec(0usize..4, 0..30)) {
        let letters: Vec<Letter> = ix.into_iter().map(Letter::from_index).collect();
        let w = Word::reduce(letters.iter().copied());
        prop_assert!(w.is_reduced());
        prop_assert_eq!(Word::reduce(w.letters().iter().copied()), w.clone());
        prop_assert_eq!(w.invert().invert(), w);
    }

    #[test]
    fn normal_form_is_a_homomorphism(a in word(20), b in word(20)) {
        let set = &wreath().set;
        let ab = wreath_normal_form(&a.concat_reduce(&b), set).unwrap();
        let prod = wreath_normal_form(&a, set).unwrap().mul(&wreath_normal_form(&b, set).unwrap());
        prop_assert_eq!(ab, prod);
    }
}

#[test]
fn positive_word_counts() {
    for k in 1..=12usize {
        assert_eq!(enumerate_positive(k).count() as u64, (1u64 << (k + 1)) - 2);
    }
}
