//! Distributed dense vector behavior with 32-bit maps. Runs in the dual
//! and 32-only build modes.

#![cfg(not(feature = "no_32bit_global_indices"))]

mod common;

use common::TestRng;
use dualgid::{run_on_ranks, BlockMap, ModifyMode, ModifyStatus, MultiVector};

#[test]
fn dot_of_ones_over_two_ranks_is_the_global_length() {
    let out = run_on_ranks(2, |comm| {
        let map = BlockMap::new_uniform_i32(10, 0, &comm).unwrap();
        let mut a = MultiVector::new(&map, 1).unwrap();
        a.put_scalar(1.0);
        (a.dot(&a).unwrap()[0], a.global_length64())
    });
    assert!(out.iter().all(|&t| t == (10.0, 10)));
}

#[test]
fn reductions_are_identical_on_every_rank() {
    let out = run_on_ranks(4, |comm| {
        let map = BlockMap::new_uniform_i32(37, 0, &comm).unwrap();
        let mut a = MultiVector::new(&map, 2).unwrap();
        let mut b = MultiVector::new(&map, 2).unwrap();
        a.set_random(1);
        b.set_random(2);
        let dots: Vec<u64> = a.dot(&b).unwrap().iter().map(|v| v.to_bits()).collect();
        let norms: Vec<u64> = a.norm2().unwrap().iter().map(|v| v.to_bits()).collect();
        (dots, norms)
    });
    assert!(out.iter().all(|t| *t == out[0]));
}

#[test]
fn norm_squared_tracks_self_dot() {
    for ranks in [1, 2, 4] {
        run_on_ranks(ranks, |comm| {
            let mut rng = TestRng::new(5 + comm.rank() as u64);
            let map = BlockMap::new_uniform_i32(101, 0, &comm).unwrap();
            let mut a = MultiVector::new(&map, 1).unwrap();
            for _ in 0..20 {
                for slot in a.column_mut(0) {
                    *slot = rng.signed_unit() * 10.0;
                }
                let norm = a.norm2().unwrap()[0];
                let dot = a.dot(&a).unwrap()[0];
                assert!(
                    (norm * norm - dot).abs() <= 1e-15 * dot.abs().max(1.0),
                    "norm^2 {} vs dot {dot}",
                    norm * norm
                );
            }
        });
    }
}

#[test]
fn modification_reaches_only_the_owning_rank() {
    let out = run_on_ranks(2, |comm| {
        let map = BlockMap::new_uniform_i32(10, 0, &comm).unwrap();
        let mut v = MultiVector::new(&map, 1).unwrap();
        let status = v
            .modify_global_value_i32(7, 0, 0, 4.5, ModifyMode::Replace)
            .unwrap();
        let local_sum: f64 = v.column(0).iter().sum();
        (status, local_sum)
    });
    assert_eq!(out[0], (ModifyStatus::NotOwned, 0.0));
    assert_eq!(out[1], (ModifyStatus::Applied, 4.5));
}

#[test]
fn batch_modification_counts_unowned_indices() {
    let out = run_on_ranks(2, |comm| {
        let map = BlockMap::new_uniform_i32(10, 0, &comm).unwrap();
        let mut v = MultiVector::new(&map, 1).unwrap();
        v.modify_global_values_i32(&[0, 4, 9], &[1.0, 2.0, 3.0], 0, ModifyMode::SumInto)
            .unwrap()
    });
    assert_eq!(out, vec![1, 2]);
}
