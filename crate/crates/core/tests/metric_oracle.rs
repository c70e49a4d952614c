mod common;

use common::{handcrafted_lists, oracle_metrics};
use molgen::metrics::{canonical_set, evaluate_metrics};

#[test]
fn metrics_agree_with_pairwise_oracle() {
    let lists = handcrafted_lists();
    assert_eq!(lists.len(), 20);
    for (k, (generated, training)) in lists.iter().enumerate() {
        assert!(generated.len() <= 50);
        let r = evaluate_metrics(generated, &canonical_set(training));
        let want = oracle_metrics(generated, training);
        assert_eq!((r.validity, r.uniqueness, r.novelty, r.vun), want, "list {k}");
        assert!(r.vun <= r.validity.min(r.novelty));
    }
}

#[test]
fn worked_values() {
    let lists = handcrafted_lists();
    let first = evaluate_metrics(&lists[0].0, &canonical_set(&lists[0].1));
    assert_eq!(first.validity, 0.5);
    let second = evaluate_metrics(&lists[1].0, &canonical_set(&lists[1].1));
    assert_eq!(second.uniqueness, 2.0 / 3.0);
    assert_eq!(second.novelty, 0.5);
}
