//! Distributed graph and matrix behavior with 64-bit maps whose indices
//! start beyond the 32-bit range. Runs in the dual and 64-only build modes.

#![cfg(not(feature = "no_64bit_global_indices"))]

mod common;

use dualgid::{run_on_ranks, BlockMap, Comm, CrsMatrix, MultiVector, RowMatrix};

const BASE: i64 = 3_000_000_000;

fn laplacian_1d_ll(n: i64, comm: &Comm) -> (BlockMap, CrsMatrix) {
    let map = BlockMap::new_uniform_i64(n, BASE, comm).unwrap();
    let mut m = CrsMatrix::new(&map).unwrap();
    for lid in 0..map.num_my_elements() {
        let row = map.gid64(lid);
        let mut cols = vec![row];
        let mut vals = vec![2.0];
        if row > BASE {
            cols.push(row - 1);
            vals.push(-1.0);
        }
        if row + 1 < BASE + n {
            cols.push(row + 1);
            vals.push(-1.0);
        }
        m.insert_global_values(row, &cols, &vals).unwrap();
    }
    m.fill_complete(&map, &map).unwrap();
    (map, m)
}

#[test]
fn wide_laplacian_multiply_keeps_the_boundary_pattern() {
    for ranks in [1, 2, 4] {
        let collected: Vec<(i64, u64)> = run_on_ranks(ranks, |comm| {
            let (map, m) = laplacian_1d_ll(64, &comm);
            let mut x = MultiVector::new(&map, 1).unwrap();
            x.put_scalar(1.0);
            let y = common::apply(&m, &x);
            common::vector_by_gid(&map, &y)
        })
        .into_iter()
        .flatten()
        .collect();
        for (gid, bits) in collected {
            let expected = if gid == BASE || gid == BASE + 63 { 1.0 } else { 0.0 };
            assert_eq!(f64::from_bits(bits), expected, "entry {gid}");
        }
    }
}

#[test]
fn wide_counts_and_storage_survive_the_offset() {
    let out = run_on_ranks(2, |comm| {
        let (_, m) = laplacian_1d_ll(16, &comm);
        (
            m.num_global_nonzeros64().unwrap(),
            m.num_global_rows64().unwrap(),
            m.num_global_diagonals64().unwrap(),
            m.storage_stats().bytes_per_packed_column_index,
            m.storage_stats().bytes_per_global_index_pre_fill,
        )
    });
    assert!(out.iter().all(|&t| t == (46, 16, 16, 4, 8)));
}

#[test]
fn offset_invariance_of_multiply_bits() {
    // The same problem at offsets 0 and 3e9 (both 64-bit) must multiply to
    // identical bits at a fixed rank count.
    for ranks in [1, 2] {
        let runs: Vec<Vec<Vec<u64>>> = [0i64, BASE]
            .iter()
            .map(|&offset| {
                run_on_ranks(ranks, move |comm| {
                    let map = BlockMap::new_uniform_i64(32, offset, &comm).unwrap();
                    let mut m = CrsMatrix::new(&map).unwrap();
                    for lid in 0..map.num_my_elements() {
                        let row = map.gid64(lid);
                        let k = row - offset;
                        let mut cols = vec![row];
                        let mut vals = vec![2.0 + (k % 3) as f64];
                        if k > 0 {
                            cols.push(row - 1);
                            vals.push(-1.0 - (k % 2) as f64);
                        }
                        if k + 1 < 32 {
                            cols.push(row + 1);
                            vals.push(-0.5);
                        }
                        m.insert_global_values(row, &cols, &vals).unwrap();
                    }
                    m.fill_complete(&map, &map).unwrap();
                    let mut x = MultiVector::new(&map, 1).unwrap();
                    for lid in 0..map.num_my_elements() {
                        let k = map.gid64(lid) - offset;
                        x.column_mut(0)[lid as usize] = ((k * 13 + 5) % 19) as f64 / 19.0;
                    }
                    let y = common::apply(&m, &x);
                    y.column(0).iter().map(|v| v.to_bits()).collect::<Vec<_>>()
                })
            })
            .collect();
        assert_eq!(runs[0], runs[1], "offset changed bits at rank count {ranks}");
    }
}

#[test]
fn wide_extraction_and_row_queries() {
    let comm = Comm::serial();
    let (map, m) = laplacian_1d_ll(4, &comm);
    let mut cols = [0i64; 3];
    let mut vals = [0f64; 3];
    let n = m
        .extract_global_row_values(BASE + 1, &mut cols, &mut vals)
        .unwrap();
    assert_eq!(n, 3);
    assert_eq!(cols, [BASE, BASE + 1, BASE + 2]);
    assert_eq!(vals, [-1.0, 2.0, -1.0]);
    assert_eq!(m.graph().num_global_indices64(BASE + 1), 3);
    assert_eq!(m.graph().num_global_indices64(BASE - 5), -1);
    assert_eq!(map.max_all_gid64(), BASE + 3);
    let mut tiny_cols = [0i64; 1];
    let mut tiny_vals = [0f64; 1];
    assert!(matches!(
        m.extract_global_row_values(BASE + 1, &mut tiny_cols, &mut tiny_vals),
        Err(dualgid::Error::Capacity { required: 3 })
    ));
}

#[test]
fn write_erases_the_offset() {
    let dir = std::env::temp_dir().join("dualgid_offset_tests");
    std::fs::create_dir_all(&dir).unwrap();
    let comm = Comm::serial();
    let (_, shifted) = laplacian_1d_ll(6, &comm);
    let shifted_path = dir.join("shifted.mtx");
    dualgid::write_coordinate_file(&shifted, &shifted_path).unwrap();

    // The same matrix built at offset 0.
    let map = BlockMap::new_uniform_i64(6, 0, &comm).unwrap();
    let mut plain = CrsMatrix::new(&map).unwrap();
    for row in 0..6i64 {
        let mut cols = vec![row];
        let mut vals = vec![2.0];
        if row > 0 {
            cols.push(row - 1);
            vals.push(-1.0);
        }
        if row + 1 < 6 {
            cols.push(row + 1);
            vals.push(-1.0);
        }
        plain.insert_global_values(row, &cols, &vals).unwrap();
    }
    plain.fill_complete(&map, &map).unwrap();
    let plain_path = dir.join("plain.mtx");
    dualgid::write_coordinate_file(&plain, &plain_path).unwrap();

    assert_eq!(
        std::fs::read_to_string(&shifted_path).unwrap(),
        std::fs::read_to_string(&plain_path).unwrap(),
        "files must be identical regardless of the construction offset"
    );
}
