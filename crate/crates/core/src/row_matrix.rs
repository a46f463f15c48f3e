//! The abstract row-matrix surface consumed by solvers.
//!
//! The surface is deliberately width-portable: the suffix-64 queries and
//! the apply operation are valid for matrices of either index width and in
//! every compilation mode, so a consumer written against this trait never
//! needs a width branch. The narrow count queries come with default
//! implementations that error on 64-bit matrices, matching the map
//! convention.

#[cfg(not(feature = "no_32bit_global_indices"))]
use crate::error::Error;
use crate::error::Result;
use crate::index::WidthState;
use crate::multivector::MultiVector;

/// Real-valued double-precision row-oriented sparse matrix surface.
pub trait RowMatrix {
    /// True once the matrix has been fill-completed; the query and apply
    /// operations below require it.
    fn filled(&self) -> bool;

    /// The global index width of the underlying row map.
    fn width_state(&self) -> WidthState;

    fn num_global_nonzeros64(&self) -> Result<i64>;
    fn num_global_rows64(&self) -> Result<i64>;
    fn num_global_cols64(&self) -> Result<i64>;
    fn num_global_diagonals64(&self) -> Result<i64>;

    /// `y = A * x`. Collective.
    fn multiply(&self, x: &MultiVector, y: &mut MultiVector) -> Result<()>;

    /// Copies the locally owned diagonal entries into `diagonal` (one
    /// column on the row map); absent diagonal entries yield zero.
    fn extract_diagonal_copy(&self, diagonal: &mut MultiVector) -> Result<()>;

    #[cfg(not(feature = "no_32bit_global_indices"))]
    fn num_global_nonzeros(&self) -> Result<i32> {
        narrow_count(self.width_state(), self.num_global_nonzeros64()?)
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    fn num_global_rows(&self) -> Result<i32> {
        narrow_count(self.width_state(), self.num_global_rows64()?)
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    fn num_global_cols(&self) -> Result<i32> {
        narrow_count(self.width_state(), self.num_global_cols64()?)
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    fn num_global_diagonals(&self) -> Result<i32> {
        narrow_count(self.width_state(), self.num_global_diagonals64()?)
    }
}

#[cfg(not(feature = "no_32bit_global_indices"))]
fn narrow_count(state: WidthState, value: i64) -> Result<i32> {
    match state {
        WidthState::I32 => i32::try_from(value).map_err(|_| Error::WidthRange { value }),
        found => Err(Error::wrong_width(
            "narrow row-matrix counts require a 32-bit matrix",
            found,
        )),
    }
}
