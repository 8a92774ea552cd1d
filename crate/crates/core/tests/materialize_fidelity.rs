//! materialized vectors hold exactly the elements their layouts select.

mod common;

use common::fidelity::check_all;
use hec_core::corpus;

#[test]
fn corpus_sites_are_faithful_under_reachable_layouts() {
    let (pairs, slots) = check_all(&corpus::all_reduced()).unwrap_or_else(|e| panic!("{e}"));
    assert!(pairs > 100, "{pairs}");
    assert!(slots > 0);
}

#[test]
fn enumeration_covers_rolls_and_tiles() {
    let mut roll = 0;
    let mut tiled = 0;
    let mut total = 0;
    for (t, shape) in common::fidelity::corpus_sites(&corpus::all_reduced(), 256) {
        for l in common::fidelity::reachable_layouts(&t, &shape, 256, 2000) {
            total += 1;
            roll += l.to_string().starts_with("roll(") as usize;
            tiled += (l.tilings() > 0) as usize;
        }
    }
    println!("{total} layouts, {roll} rolled, {tiled} tiled");
    assert!(roll > 0 && tiled > 0);
}
