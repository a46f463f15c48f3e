//! Distributed dense vector behavior with 64-bit maps beyond the 32-bit
//! range. Runs in the dual and 64-only build modes.

#![cfg(not(feature = "no_64bit_global_indices"))]

mod common;

use dualgid::{run_on_ranks, BlockMap, ModifyMode, MultiVector};

const BASE: i64 = 3_000_000_000;

#[test]
fn wide_vectors_reduce_like_narrow_ones() {
    let out = run_on_ranks(2, |comm| {
        let map = BlockMap::new_uniform_i64(10, BASE, &comm).unwrap();
        let mut a = MultiVector::new(&map, 1).unwrap();
        a.put_scalar(1.0);
        (a.dot(&a).unwrap()[0], a.norm2().unwrap()[0], a.global_length64())
    });
    assert!(out.iter().all(|&t| t == (10.0, 10f64.sqrt(), 10)));
}

#[test]
fn accumulation_lands_on_the_owner_of_a_wide_index() {
    let out = run_on_ranks(2, |comm| {
        let map = BlockMap::new_uniform_i64(4, BASE, &comm).unwrap();
        let mut v = MultiVector::new(&map, 1).unwrap();
        for _ in 0..2 {
            v.modify_global_value(BASE + 3, 0, 0, 1.0, ModifyMode::SumInto)
                .unwrap();
        }
        v.column(0).to_vec()
    });
    assert_eq!(out[0], vec![0.0, 0.0]);
    assert_eq!(out[1], vec![0.0, 2.0]);
}
