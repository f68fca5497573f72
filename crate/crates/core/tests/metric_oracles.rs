mod support {
    pub mod oracle;
    pub mod suite;
}

use memelabel_core::metrics::{cohen_kappa, evaluate, fleiss_from_vectors, LabelVector};
use proptest::prelude::*;
use support::{oracle, suite};

#[test]
fn random_instances_match_oracles() {
    let outcome = suite::run(10_000, 0x5EED);
    assert!(outcome.failures.is_empty(), "{:?}", &outcome.failures[..outcome.failures.len().min(5)]);
    assert!(outcome.passed(1e-12), "{outcome:?}");
}

#[test]
fn oracle_agrees_on_hand_values() {
    assert_eq!(oracle::cohen(&[0, 0, 1, 1], &[1, 1, 0, 0], 2), Some(-1.0));
    let k = oracle::cohen(&[0, 0, 1, 1, 0, 1], &[0, 1, 1, 1, 0, 0], 2).unwrap();
    assert!((k - 1.0 / 3.0).abs() < 1e-12);
    let e = oracle::evaluate(&[0, 0, 1, 1], &[0, 1, 1, 1], 2);
    assert_eq!(e.accuracy, 0.75);
    assert!((e.macro_f1 - 11.0 / 15.0).abs() < 1e-12);
}

fn named(k: usize, classes: &[usize], order: &[usize], names: &[String]) -> LabelVector {
    LabelVector::new(names.to_vec(), order.iter().map(|&i| (format!("i{i}"), names[classes[i]].clone())))
        .unwrap_or_else(|e| panic!("k={k}: {e}"))
}

fn instance() -> impl Strategy<Value = (usize, Vec<usize>, Vec<usize>, Vec<usize>, Vec<usize>)> {
    (2usize..=6, 1usize..=80).prop_flat_map(|(k, n)| {
        (
            Just(k),
            proptest::collection::vec(0..k, n),
            proptest::collection::vec(0..k, n),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            Just((0..k).collect::<Vec<_>>()).prop_shuffle(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn symmetric_and_in_range((k, a, b, _, _) in instance()) {
        let names: Vec<String> = (0..k).map(|c| format!("c{c}")).collect();
        let order: Vec<usize> = (0..a.len()).collect();
        let va = named(k, &a, &order, &names);
        let vb = named(k, &b, &order, &names);
        let ab = cohen_kappa(&va, &vb);
        let ba = cohen_kappa(&vb, &va);
        prop_assert_eq!(&ab, &ba);
        if let Ok(kappa) = ab {
            prop_assert!((-1.0..=1.0).contains(&kappa));
        }
    }

    #[test]
    fn permutation_invariant((k, a, b, perm, _) in instance()) {
        let names: Vec<String> = (0..k).map(|c| format!("c{c}")).collect();
        let order: Vec<usize> = (0..a.len()).collect();
        let base = (named(k, &a, &order, &names), named(k, &b, &order, &names));
        let shuffled = (named(k, &a, &perm, &names), named(k, &b, &perm, &names));
        // b shuffled independently of a: alignment is by id
        let mut rev = perm.clone();
        rev.reverse();
        let cross = named(k, &b, &rev, &names);
        prop_assert_eq!(cohen_kappa(&base.0, &base.1), cohen_kappa(&shuffled.0, &shuffled.1));
        prop_assert_eq!(cohen_kappa(&base.0, &base.1), cohen_kappa(&base.0, &cross));
        let e1 = evaluate(&base.0, &base.1).unwrap();
        let e2 = evaluate(&shuffled.0, &cross).unwrap();
        prop_assert_eq!(e1.accuracy, e2.accuracy);
        prop_assert_eq!(e1.macro_f1, e2.macro_f1);
        let f1 = fleiss_from_vectors(&[&base.0, &base.1]);
        let f2 = fleiss_from_vectors(&[&shuffled.0, &cross]);
        prop_assert_eq!(f1, f2);
    }

    #[test]
    fn renaming_invariant((k, a, b, _, rename) in instance()) {
        let names: Vec<String> = (0..k).map(|c| format!("c{c}")).collect();
        let renamed: Vec<String> = (0..k).map(|c| format!("r{}", rename[c])).collect();
        let order: Vec<usize> = (0..a.len()).collect();
        let (va, vb) = (named(k, &a, &order, &names), named(k, &b, &order, &names));
        let (ra, rb) = (named(k, &a, &order, &renamed), named(k, &b, &order, &renamed));
        prop_assert_eq!(cohen_kappa(&va, &vb), cohen_kappa(&ra, &rb));
        let e1 = evaluate(&va, &vb).unwrap();
        let e2 = evaluate(&ra, &rb).unwrap();
        prop_assert_eq!(e1.accuracy, e2.accuracy);
        prop_assert!((e1.macro_f1 - e2.macro_f1).abs() < 1e-15);
    }
}
