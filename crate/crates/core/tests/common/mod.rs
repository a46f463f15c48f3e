//! Shared test support: deterministic random streams and independent
//! oracles (dense direct solve, brute-force matrix-vector product,
//! pair-sort permutation). Everything here is implemented against plain
//! slices so it cannot share a code path with the library it checks.

#![allow(dead_code)]

use dualgid::{BlockMap, Comm, CrsMatrix, MultiVector, RowMatrix};
use std::collections::HashMap;

/// SplitMix64; kept independent of the library's internal stream.
pub struct TestRng {
    state: u64,
}

impl TestRng {
    pub fn new(seed: u64) -> TestRng {
        TestRng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn signed_unit(&mut self) -> f64 {
        2.0 * self.unit() - 1.0
    }
}

/// Dense direct solve of `A x = b` by Gaussian elimination with partial
/// pivoting. `a` is row-major `n x n` and is consumed.
pub fn dense_solve(n: usize, a: &mut [f64], b: &mut [f64]) -> Vec<f64> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    for k in 0..n {
        let mut pivot = k;
        for r in k + 1..n {
            if a[r * n + k].abs() > a[pivot * n + k].abs() {
                pivot = r;
            }
        }
        if pivot != k {
            for c in 0..n {
                a.swap(k * n + c, pivot * n + c);
            }
            b.swap(k, pivot);
        }
        let d = a[k * n + k];
        assert!(d.abs() > 0.0, "singular oracle system");
        for r in k + 1..n {
            let f = a[r * n + k] / d;
            if f != 0.0 {
                for c in k..n {
                    a[r * n + c] -= f * a[k * n + c];
                }
                b[r] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut acc = b[k];
        for c in k + 1..n {
            acc -= a[k * n + c] * x[c];
        }
        x[k] = acc / a[k * n + k];
    }
    x
}

/// Brute-force `y = A x` over global triples.
pub fn brute_force_spmv(
    triples: &[(i64, i64, f64)],
    x: &HashMap<i64, f64>,
) -> HashMap<i64, f64> {
    let mut y = HashMap::new();
    for &(i, j, v) in triples {
        *y.entry(i).or_insert(0.0) += v * x[&j];
    }
    y
}

/// Random symmetric positive definite pattern on rows `0..n` (0-based
/// global indices, no offset): strictly diagonally dominant with a random
/// symmetric off-diagonal pattern. Triples are emitted one per (row, col).
pub fn random_spd_triples(rng: &mut TestRng, n: i64) -> Vec<(i64, i64, f64)> {
    let mut upper: Vec<(i64, i64, f64)> = Vec::new();
    let per_row = 1 + rng.below(4) as i64;
    for i in 0..n {
        for _ in 0..per_row {
            let j = rng.below(n as u64) as i64;
            if j > i {
                upper.push((i, j, rng.signed_unit()));
            }
        }
    }
    upper.sort_by_key(|&(i, j, _)| (i, j));
    upper.dedup_by_key(|&mut (i, j, _)| (i, j));

    let mut row_sums = vec![0.0f64; n as usize];
    for &(i, j, v) in &upper {
        row_sums[i as usize] += v.abs();
        row_sums[j as usize] += v.abs();
    }
    let mut triples = Vec::with_capacity(2 * upper.len() + n as usize);
    for i in 0..n {
        triples.push((i, i, row_sums[i as usize] + 1.0 + rng.unit()));
    }
    for &(i, j, v) in &upper {
        triples.push((i, j, v));
        triples.push((j, i, v));
    }
    triples.sort_by_key(|&(i, j, _)| (i, j));
    triples
}

/// Collects every locally owned entry of a filled matrix as global triples.
pub fn collect_local_triples(matrix: &CrsMatrix) -> Vec<(i64, i64, f64)> {
    let map = matrix.row_map();
    let mut cols = vec![0i64; 64];
    let mut vals = vec![0f64; 64];
    let mut out = Vec::new();
    for lid in 0..map.num_my_elements() {
        let row = map.gid64(lid);
        loop {
            match matrix.extract_global_row_values(row, &mut cols, &mut vals) {
                Ok(count) => {
                    for k in 0..count {
                        out.push((row, cols[k], vals[k]));
                    }
                    break;
                }
                Err(dualgid::Error::Capacity { required }) => {
                    cols.resize(required, 0);
                    vals.resize(required, 0.0);
                }
                Err(e) => panic!("extraction failed: {e}"),
            }
        }
    }
    out
}

/// Brute-force ownership oracle: gathers every rank's index list (padded
/// to a common count, since collectives take equal counts per rank) and
/// scans it into gid -> (owner, lid).
pub fn gather_and_scan(comm: &Comm, mine: &[i64]) -> HashMap<i64, (i32, i32)> {
    let max = comm
        .reduce_all(dualgid::ReduceOp::Max, &[mine.len() as i64])
        .expect("reduce")[0] as usize;
    let mut padded = mine.to_vec();
    padded.resize(max, i64::MIN);
    let flat = comm.gather_all(&padded).expect("gather");
    let mut oracle = HashMap::new();
    for rank in 0..comm.size() as usize {
        for lid in 0..max {
            let g = flat[rank * max + lid];
            if g != i64::MIN {
                oracle.entry(g).or_insert((rank as i32, lid as i32));
            }
        }
    }
    oracle
}

/// The local slice of a distributed vector keyed by global index.
pub fn vector_by_gid(map: &BlockMap, v: &MultiVector) -> Vec<(i64, u64)> {
    (0..map.num_my_elements())
        .map(|lid| (map.gid64(lid), v.column(0)[lid as usize].to_bits()))
        .collect()
}

/// Builds a matrix over a uniform map `[offset, offset + n)` from 0-based
/// triples, inserting only locally owned rows, then fill-completes. Works
/// through the width-dispatch construction path so callers choose the
/// width at runtime.
pub fn matrix_from_triples(
    comm: &Comm,
    width: dualgid::IndexWidth,
    n: i64,
    offset: i64,
    triples: &[(i64, i64, f64)],
) -> (BlockMap, CrsMatrix) {
    let map = dualgid::uniform_map_for_width(width, n, offset, comm).expect("map construction");
    let mut m = CrsMatrix::new(&map).expect("matrix construction");
    for &(i, j, v) in triples {
        let row = i + offset;
        if map.lid(row).expect("valid width") >= 0 {
            insert_at_width(&mut m, width, row, j + offset, v);
        }
    }
    m.fill_complete(&map, &map).expect("fill-complete");
    (map, m)
}

/// Width-dispatched single-entry insertion through the public entry points.
pub fn insert_at_width(m: &mut CrsMatrix, width: dualgid::IndexWidth, row: i64, col: i64, v: f64) {
    #[cfg(not(feature = "no_32bit_global_indices"))]
    if width == dualgid::IndexWidth::I32 {
        m.insert_global_values_i32(row as i32, &[col as i32], &[v])
            .expect("narrow insertion");
        return;
    }
    #[cfg(not(feature = "no_64bit_global_indices"))]
    if width == dualgid::IndexWidth::I64 {
        m.insert_global_values(row, &[col], &[v]).expect("wide insertion");
        return;
    }
    let _ = (m, width, row, col, v);
    panic!("width excluded from this build");
}

/// `y = A x` into a fresh vector on the range map.
pub fn apply(matrix: &CrsMatrix, x: &MultiVector) -> MultiVector {
    let mut y = MultiVector::new(matrix.range_map().expect("filled"), 1).expect("vector");
    matrix.multiply(x, &mut y).expect("multiply");
    y
}
