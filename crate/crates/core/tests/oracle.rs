mod common;

use std::collections::BTreeSet;

use common::brute_force;
use relhem::classify::{classify, search, Budget};
use relhem::groups::equivalence_group;
use relhem::hemisystem::geometry;

#[test]
fn raw_search_matches_brute_force_q2() {
    let oracle = brute_force();
    let geom = geometry(1).unwrap();
    let res = search(&geom, &[], &[], &Budget::default(), None).unwrap();
    assert!(res.complete);
    let found: BTreeSet<Vec<u32>> = res.solutions.iter().map(|s| s.ones().map(|l| l as u32).collect()).collect();
    assert_eq!(found.len(), res.solutions.len());
    assert_eq!(found, oracle);
}

#[test]
fn orbit_reps_sizes_sum_to_raw_q2() {
    let geom = geometry(1).unwrap();
    let e = equivalence_group(geom.field_arc()).unwrap();
    let c = classify(&geom, &e, &Budget::default(), 1 << 16).unwrap();
    assert_eq!(c.total(), brute_force().len());
}
