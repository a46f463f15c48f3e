//! Synthetic problem generator for exercising both index widths on small
//! problems.
//!
//! The width switch and global index offset let a desk-size grid behave
//! like a problem that genuinely needs 64-bit indices: the structure and
//! the values are unchanged, only the addressing shifts.

use crate::block_map::{uniform_map_for_width, BlockMap};
use crate::comm::Comm;
use crate::crs_matrix::CrsMatrix;
use crate::error::{Error, Result};
use crate::index::IndexWidth;
use crate::multivector::MultiVector;
use crate::row_matrix::RowMatrix;

/// Available generated problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GalleryKind {
    /// 5-point Laplacian on an `nx` by `ny` grid: diagonal 4, grid
    /// neighbors -1, row/column index `offset + j * nx + i`.
    Laplace2d,
}

/// A generated problem: matrix plus solution/right-hand-side vectors with
/// `b = A * xexact` and `xexact = 1`.
#[derive(Debug)]
pub struct GalleryProblem {
    pub map: BlockMap,
    pub matrix: CrsMatrix,
    pub x: MultiVector,
    pub b: MultiVector,
    pub xexact: MultiVector,
}

/// Builds a gallery problem over a uniform row map at the requested width.
/// Collective.
pub fn generate_crs_problem(
    kind: GalleryKind,
    nx: i32,
    ny: i32,
    width: IndexWidth,
    gid_offset: i64,
    comm: &Comm,
) -> Result<GalleryProblem> {
    let GalleryKind::Laplace2d = kind;
    if nx < 1 || ny < 1 {
        return Err(Error::Contract(format!(
            "grid extents must be at least 1, got {nx} x {ny}"
        )));
    }
    let n = i64::from(nx) * i64::from(ny);
    if width == IndexWidth::I32 {
        let last = gid_offset + n - 1;
        if i32::try_from(gid_offset).is_err() || i32::try_from(last).is_err() {
            return Err(Error::WidthRange { value: last });
        }
    }

    let map = uniform_map_for_width(width, n, gid_offset, comm)?;
    let mut matrix = CrsMatrix::new(&map)?;
    let (nx64, ny64) = (i64::from(nx), i64::from(ny));
    for lid in 0..map.num_my_elements() {
        let gid = map.gid64(lid);
        let k = gid - gid_offset;
        let (i, j) = (k % nx64, k / nx64);
        let mut cols = vec![gid];
        let mut vals = vec![4.0];
        if i > 0 {
            cols.push(gid - 1);
            vals.push(-1.0);
        }
        if i + 1 < nx64 {
            cols.push(gid + 1);
            vals.push(-1.0);
        }
        if j > 0 {
            cols.push(gid - nx64);
            vals.push(-1.0);
        }
        if j + 1 < ny64 {
            cols.push(gid + nx64);
            vals.push(-1.0);
        }
        matrix.insert_internal(gid, &cols, &vals)?;
    }
    matrix.fill_complete(&map, &map)?;

    let x = MultiVector::new(&map, 1)?;
    let mut xexact = MultiVector::new(&map, 1)?;
    xexact.put_scalar(1.0);
    let mut b = MultiVector::new(&map, 1)?;
    matrix.multiply(&xexact, &mut b)?;

    Ok(GalleryProblem {
        map,
        matrix,
        x,
        b,
        xexact,
    })
}
