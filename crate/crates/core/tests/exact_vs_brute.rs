use percodyn_core::brute_oracle::{expectation, pivotal_prob, static_prob, two_time_prob, TinyTree};
use percodyn_core::exact::{influence_table, subtree_connect_table, survival_and_moments, two_time_survival};
use percodyn_core::TreeProfile;
use proptest::prelude::*;

fn tiny_profile() -> impl Strategy<Value = TreeProfile> {
    let degrees = prop_oneof![
        Just(vec![1u32]),
        Just(vec![2]),
        Just(vec![3]),
        Just(vec![2, 1]),
        Just(vec![1, 3]),
        Just(vec![2, 2]),
        Just(vec![3, 1]),
        Just(vec![1, 2, 1]),
        Just(vec![2, 1, 1]),
        Just(vec![1, 1, 3]),
    ];
    (degrees, prop::collection::vec(0.2f64..0.8, 3))
        .prop_map(|(d, p)| TreeProfile::new(d.clone(), p[..d.len()].to_vec()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn statics_match_enumeration(prof in tiny_profile()) {
        let n = prof.depth();
        let tiny = TinyTree::from_profile(&prof, n).unwrap();
        let st = survival_and_moments(&prof, n).unwrap();
        let surv = static_prob(&tiny, |c| tiny.root_reaches(c, n)).unwrap();
        let one = static_prob(&tiny, |c| tiny.connected_count(c, n) == 1).unwrap();
        let second = expectation(&tiny, |c| (tiny.connected_count(c, n) as f64).powi(2)).unwrap();
        prop_assert!((st.survival - surv).abs() < 1e-12);
        prop_assert!((st.exactly_one() - one).abs() < 1e-12);
        prop_assert!((st.second_moment_ratio * prof.w(n) * prof.w(n) - second).abs() < 1e-12);
    }

    #[test]
    fn influences_match_enumeration(prof in tiny_profile()) {
        let n = prof.depth();
        let tiny = TinyTree::from_profile(&prof, n).unwrap();
        let inf = influence_table(&prof, n).unwrap();
        for e in 0..tiny.edge_count() {
            let brute = pivotal_prob(&tiny, e, |c| tiny.root_reaches(c, n)).unwrap();
            prop_assert!((inf.influence(tiny.edge_level(e)) - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn two_time_matches_enumeration(prof in tiny_profile(), t in 0.0f64..3.0) {
        let n = prof.depth();
        let tiny = TinyTree::from_profile(&prof, n).unwrap();
        let exact = two_time_survival(&prof, 0, n, t).unwrap();
        let brute = two_time_prob(&tiny, t, |a, b| tiny.root_reaches(a, n) && tiny.root_reaches(b, n)).unwrap();
        prop_assert!((exact.q_t - brute).abs() < 1e-12);
        prop_assert!(exact.q_t <= exact.q + 1e-15);
        prop_assert!(exact.q_t >= exact.q * exact.q - 1e-15);
    }
}

#[test]
fn frozen_ternary_survival() {
    // degrees (3, 3), p = 0.4
    let prof = TreeProfile::homogeneous(3, 0.4, 2).unwrap();
    let a = subtree_connect_table(&prof, 2).unwrap();
    assert!((a[1] - 0.784).abs() < 1e-15);
    let frozen = 1.0 - (1.0 - 0.4 * 0.784f64).powi(3);
    assert!((a[0] - frozen).abs() < 1e-15);
    let tiny = TinyTree::from_profile(&prof, 2).unwrap();
    let brute = static_prob(&tiny, |c| tiny.root_reaches(c, 2)).unwrap();
    assert!((brute - frozen).abs() < 1e-13);
}

#[test]
fn frozen_binary_two_time() {
    let prof = TreeProfile::homogeneous(2, 0.5, 1).unwrap();
    let q = two_time_survival(&prof, 0, 1, std::f64::consts::LN_2).unwrap();
    assert!((q.q_t - 0.640625).abs() < 1e-15);
}
