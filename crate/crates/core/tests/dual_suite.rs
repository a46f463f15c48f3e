//! Width-interaction contracts that require both widths in one build:
//! narrow accessors failing against 64-bit objects, the prohibition on
//! mixing widths, and the equivalence of the two widths on identical index
//! sets. Runs only in the dual compilation mode.

#![cfg(not(any(feature = "no_32bit_global_indices", feature = "no_64bit_global_indices")))]

mod common;

use common::{insert_at_width, matrix_from_triples, random_spd_triples, TestRng};
use dualgid::{
    cg_solve, run_on_ranks, BlockMap, Comm, CrsGraph, CrsMatrix, Error, IndexWidth, ModifyMode,
    MultiVector, Preconditioner, RowMatrix, ValueMode,
};

fn assert_width_error<T: std::fmt::Debug>(result: Result<T, Error>, what: &str) {
    match result {
        Err(Error::WrongWidth(_)) => {}
        other => panic!("{what}: expected a width error, got {other:?}"),
    }
}

fn assert_mix_error<T: std::fmt::Debug>(result: Result<T, Error>, what: &str) {
    match result {
        Err(Error::WidthMix(_)) => {}
        other => panic!("{what}: expected a width-mix error, got {other:?}"),
    }
}

/// Every narrow accessor must error against 64-bit objects on every call,
/// including values that would fit 32 bits.
#[test]
fn narrow_accessors_always_error_on_wide_objects() {
    let comm = Comm::serial();
    // Small values on purpose: fitting is not enough, the state decides.
    let map = BlockMap::new_from_list_i64(-1, &[5, 7, 9], 0, &comm).unwrap();
    assert_width_error(map.gid(0), "GID");
    assert_width_error(map.lid_i32(5), "LID(i32)");
    assert_width_error(map.my_gid_i32(5), "MyGID(i32)");
    assert_width_error(map.my_global_elements_i32(), "MyGlobalElements view");
    assert_width_error(
        map.my_global_elements_into_i32(&mut [0; 3]),
        "MyGlobalElements narrow copy",
    );
    assert_width_error(map.index_base(), "IndexBase");
    assert_width_error(map.num_global_elements(), "NumGlobalElements");
    assert_width_error(map.num_global_points(), "NumGlobalPoints");
    assert_width_error(map.min_my_gid(), "MinMyGID");
    assert_width_error(map.max_my_gid(), "MaxMyGID");
    assert_width_error(map.min_all_gid(), "MinAllGID");
    assert_width_error(map.max_all_gid(), "MaxAllGID");

    let mut v = MultiVector::new(&map, 1).unwrap();
    assert_width_error(v.global_length(), "GlobalLength");
    assert_width_error(
        v.modify_global_value_i32(5, 0, 0, 1.0, ModifyMode::Replace),
        "narrow ReplaceGlobalValue",
    );
    assert_width_error(
        v.modify_global_values_i32(&[5], &[1.0], 0, ModifyMode::SumInto),
        "narrow ReplaceGlobalValues",
    );

    let mut g = CrsGraph::new(&map).unwrap();
    assert_width_error(g.insert_global_indices_i32(5, &[5]), "narrow InsertGlobalIndices");
    assert_width_error(g.remove_global_indices_i32(5), "narrow RemoveGlobalIndices");
    assert_width_error(
        g.extract_global_row_i32(5, &mut [0; 4]),
        "narrow ExtractGlobalRowCopy",
    );
    assert_width_error(g.global_row_view_i32(5), "narrow ExtractGlobalRowView");
    assert_width_error(g.num_global_rows(), "graph NumGlobalRows");
    assert_width_error(g.num_global_indices_i32(5), "graph NumGlobalIndices");
    g.insert_global_indices(5, &[5, 7]).unwrap();
    g.insert_global_indices(7, &[7]).unwrap();
    g.insert_global_indices(9, &[9]).unwrap();
    g.fill_complete(&map, &map).unwrap();
    assert_width_error(g.num_global_entries(), "graph NumGlobalEntries");
    assert_width_error(g.num_global_cols(), "graph NumGlobalCols");
    assert_width_error(g.num_global_diagonals(), "graph NumGlobalDiagonals");
    assert_width_error(g.num_global_block_rows(), "graph NumGlobalBlockRows");
    assert_width_error(g.num_global_block_cols(), "graph NumGlobalBlockCols");
    assert_width_error(
        g.num_global_block_diagonals(),
        "graph NumGlobalBlockDiagonals",
    );

    let mut m = CrsMatrix::new(&map).unwrap();
    assert_width_error(
        m.insert_global_values_i32(5, &[5], &[1.0]),
        "narrow InsertGlobalValues",
    );
    m.insert_global_values(5, &[5], &[2.0]).unwrap();
    m.insert_global_values(7, &[7], &[2.0]).unwrap();
    m.insert_global_values(9, &[9], &[2.0]).unwrap();
    assert_width_error(
        m.modify_global_values_i32(5, &[5], &[1.0], ValueMode::Replace),
        "narrow ReplaceGlobalValues",
    );
    m.fill_complete(&map, &map).unwrap();
    assert_width_error(
        m.extract_global_row_values_i32(5, &mut [0; 4], &mut [0.0; 4]),
        "narrow matrix extraction",
    );
    assert_width_error(m.num_global_nonzeros(), "NumGlobalNonzeros");
    assert_width_error(m.num_global_rows(), "RowMatrix NumGlobalRows");
    assert_width_error(m.num_global_cols(), "RowMatrix NumGlobalCols");
    assert_width_error(m.num_global_diagonals(), "RowMatrix NumGlobalDiagonals");
}

/// Wide single-width entry points are just as strict against 32-bit
/// objects.
#[test]
fn wide_only_accessors_error_on_narrow_objects() {
    let comm = Comm::serial();
    let map = BlockMap::new_from_list_i32(-1, &[1, 2], 0, &comm).unwrap();
    assert_width_error(map.my_global_elements_i64(), "MyGlobalElements64 view");
    let mut v = MultiVector::new(&map, 1).unwrap();
    assert_width_error(
        v.modify_global_value(1, 0, 0, 1.0, ModifyMode::Replace),
        "wide ReplaceGlobalValue",
    );
    let mut g = CrsGraph::new(&map).unwrap();
    assert_width_error(g.insert_global_indices(1, &[1]), "wide InsertGlobalIndices");
    assert_width_error(g.global_row_view_i64(1), "wide ExtractGlobalRowView");
    let mut m = CrsMatrix::new(&map).unwrap();
    assert_width_error(
        m.insert_global_values(1, &[1], &[1.0]),
        "wide InsertGlobalValues",
    );
}

/// Pairing a 32-bit object with a 64-bit object errors for every
/// width-sensitive operation.
#[test]
fn width_mixing_is_prohibited_everywhere() {
    let comm = Comm::serial();
    let gids: Vec<i64> = (0..4).collect();
    let narrow: Vec<i32> = gids.iter().map(|&g| g as i32).collect();
    let map32 = BlockMap::new_from_list_i32(-1, &narrow, 0, &comm).unwrap();
    let map64 = BlockMap::new_from_list_i64(-1, &gids, 0, &comm).unwrap();
    assert!(!map32.global_indices_match(&map64));

    // Dense operations.
    let mut a32 = MultiVector::new(&map32, 1).unwrap();
    let a64 = MultiVector::new(&map64, 1).unwrap();
    assert_mix_error(a32.dot(&a64), "dot");
    assert_mix_error(a32.update(1.0, &a64, 0.0), "update");

    // Fill-complete with a mismatched domain or range map.
    let mut g64 = CrsGraph::new(&map64).unwrap();
    g64.insert_global_indices(0, &[0]).unwrap();
    assert_mix_error(g64.fill_complete(&map32, &map64), "fill-complete domain");
    assert_mix_error(g64.fill_complete(&map64, &map32), "fill-complete range");

    // Multiply with mixed operands (and the solver on top of it).
    let mut m64 = CrsMatrix::new(&map64).unwrap();
    for g in 0..4 {
        m64.insert_global_values(g, &[g], &[1.0]).unwrap();
    }
    m64.fill_complete(&map64, &map64).unwrap();
    let x32 = MultiVector::new(&map32, 1).unwrap();
    let mut y64 = MultiVector::new(&map64, 1).unwrap();
    assert_mix_error(m64.multiply(&x32, &mut y64), "multiply x");
    let x64 = MultiVector::new(&map64, 1).unwrap();
    let mut y32 = MultiVector::new(&map32, 1).unwrap();
    assert_mix_error(m64.multiply(&x64, &mut y32), "multiply y");
    let b32 = MultiVector::new(&map32, 1).unwrap();
    let mut x32b = MultiVector::new(&map32, 1).unwrap();
    assert_mix_error(
        cg_solve(&m64, &b32, &mut x32b, 1e-8, 10, Preconditioner::None),
        "solver",
    );
}

/// A 32-bit map and a 64-bit map built from the same index list answer
/// every query identically.
#[test]
fn widths_are_equivalent_on_identical_index_lists() {
    for ranks in [1, 2, 4] {
        run_on_ranks(ranks, |comm| {
            let mut rng = TestRng::new(1234);
            let mut pool: Vec<i64> = (0..400).map(|_| rng.below(100_000) as i64).collect();
            pool.sort_unstable();
            pool.dedup();
            let mine: Vec<i64> = pool
                .iter()
                .enumerate()
                .filter(|(k, _)| (k % comm.size() as usize) == comm.rank() as usize)
                .map(|(_, &g)| g)
                .collect();
            let narrow: Vec<i32> = mine.iter().map(|&g| g as i32).collect();
            let map32 = BlockMap::new_from_list_i32(-1, &narrow, 0, &comm).unwrap();
            let map64 = BlockMap::new_from_list_i64(-1, &mine, 0, &comm).unwrap();

            assert_eq!(map32.num_global_elements64(), map64.num_global_elements64());
            assert_eq!(map32.min_all_gid64(), map64.min_all_gid64());
            assert_eq!(map32.max_all_gid64(), map64.max_all_gid64());
            assert_eq!(map32.min_my_gid64(), map64.min_my_gid64());
            assert_eq!(map32.max_my_gid64(), map64.max_my_gid64());

            for lid in 0..map32.num_my_elements() {
                assert_eq!(map32.gid64(lid), map64.gid64(lid));
            }
            let queries: Vec<i64> = (0..100).map(|_| rng.below(110_000) as i64).collect();
            for &q in &queries {
                assert_eq!(map32.lid(q).unwrap(), map64.lid(q).unwrap());
            }
            let d32 = map32.directory_entries(&queries, true, true, false).unwrap();
            let d64 = map64.directory_entries(&queries, true, true, false).unwrap();
            assert_eq!(d32.procs, d64.procs);
            assert_eq!(d32.lids, d64.lids);
            assert_eq!(d32.sizes, d64.sizes);
        });
    }
}

/// The same sparse problem built at both widths produces bitwise-identical
/// multiply output and identical solver trajectories.
#[test]
fn widths_are_equivalent_on_identical_matrices() {
    let mut rng = TestRng::new(777);
    let n = 60i64;
    let triples = random_spd_triples(&mut rng, n);
    for ranks in [1, 2, 4] {
        let triples = triples.clone();
        run_on_ranks(ranks, move |comm| {
            let mut per_width = Vec::new();
            for width in [IndexWidth::I32, IndexWidth::I64] {
                let (map, m) = matrix_from_triples(&comm, width, n, 0, &triples);
                let mut x = MultiVector::new(&map, 1).unwrap();
                x.set_random(5);
                let y = common::apply(&m, &x);
                let mut sol = MultiVector::new(&map, 1).unwrap();
                let report =
                    cg_solve(&m, &y, &mut sol, 1e-10, 200, Preconditioner::Jacobi).unwrap();
                per_width.push((
                    common::vector_by_gid(&map, &y),
                    report.converged,
                    report.iterations,
                    report.final_relative_residual.to_bits(),
                    m.num_global_nonzeros64().unwrap(),
                ));
            }
            assert_eq!(per_width[0], per_width[1]);
        });
    }
}

/// The same random sparsity pattern built at both widths produces the
/// same column-map index sequence and the same packed CRS arrays.
#[test]
fn widths_build_identical_graph_structures() {
    let mut rng = TestRng::new(4242);
    for trial in 0..8 {
        let n = 10 + rng.below(60) as i64;
        let triples = random_spd_triples(&mut rng, n);
        let ranks = 1 + (trial % 3) as i32;
        let triples2 = triples.clone();
        run_on_ranks(ranks, move |comm| {
            let mut shapes = Vec::new();
            for width in [IndexWidth::I32, IndexWidth::I64] {
                let (_, m) = matrix_from_triples(&comm, width, n, 0, &triples2);
                let col_map = m.col_map().unwrap();
                let col_gids: Vec<i64> = (0..col_map.num_my_elements())
                    .map(|l| col_map.gid64(l))
                    .collect();
                let (ptr, idx) = m.graph().index_data_i32().unwrap().local_packed();
                shapes.push((col_gids, ptr.to_vec(), idx.to_vec()));
            }
            assert_eq!(shapes[0], shapes[1]);
        });
    }
}

/// Insertion width must match the object width even when the map widths
/// would allow a lossless conversion.
#[test]
fn insertion_entry_points_are_width_strict() {
    let comm = Comm::serial();
    let map64 = BlockMap::new_from_list_i64(-1, &[0, 1], 0, &comm).unwrap();
    let mut m = CrsMatrix::new(&map64).unwrap();
    assert_width_error(
        m.insert_global_values_i32(0, &[0], &[1.0]),
        "narrow insert into wide matrix",
    );
    let map32 = BlockMap::new_from_list_i32(-1, &[0, 1], 0, &comm).unwrap();
    let mut m = CrsMatrix::new(&map32).unwrap();
    insert_at_width(&mut m, IndexWidth::I32, 0, 0, 1.0);
    assert_width_error(
        m.insert_global_values(1, &[1], &[1.0]),
        "wide insert into narrow matrix",
    );
}
