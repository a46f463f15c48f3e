//! Distributed sparse linear algebra with runtime-selectable global index
//! width.
//!
//! Every distributed object is laid out by a [`BlockMap`] constructed with
//! either 32-bit or 64-bit global indices; the map records its width and
//! every dependent object (vectors, graphs, matrices) inherits and checks
//! it. Local indices stay 32-bit regardless, so per-rank storage and the
//! memory-bound kernels do not pay for wide global extents.
//!
//! The accessor naming follows one convention throughout:
//!
//! * `*64` accessors return `i64`, are valid for objects of either width
//!   and exist in every compilation mode.
//! * Narrow accessors return or store `i32` and error unconditionally when
//!   called against a 64-bit object.
//! * Combining objects of different widths errors; runtime width is chosen
//!   once, at map construction.
//!
//! Three compilation modes are selected through cargo features: the default
//! dual-width build, `no_64bit_global_indices` (32-bit only) and
//! `no_32bit_global_indices` (64-bit only). The single-width modes hide the
//! other width's constructors and single-width accessors at compile time;
//! width-portable code keeps compiling in all three (see
//! [`block_map::uniform_map_for_width`]).
//!
//! Multi-rank behavior is provided by an in-process simulated communicator
//! ([`comm::run_on_ranks`]) whose collectives are deterministic, so
//! distributed runs are reproducible without an external launcher.

#[cfg(all(feature = "no_32bit_global_indices", feature = "no_64bit_global_indices"))]
compile_error!(
    "features no_32bit_global_indices and no_64bit_global_indices are mutually exclusive: \
     at least one global index width must remain enabled"
);

pub mod block_map;
pub mod comm;
pub mod containers;
pub mod crs_graph;
pub mod crs_matrix;
pub mod distribution;
pub mod error;
pub mod gallery;
pub mod index;
pub mod io;
pub mod multivector;
pub mod row_matrix;
pub mod solver;
pub mod util;

pub use block_map::{uniform_map_for_width, BlockMap};
pub use comm::{run_on_ranks, Comm, CommScalar, ReduceOp};
pub use containers::{IndexVector, SerialDenseIndexVector};
pub use crs_graph::{CrsGraph, IndexData};
pub use crs_matrix::{CrsMatrix, StorageStats, ValueMode};
pub use distribution::{CommPlan, DirectoryEntries, PlanDirection};
pub use error::{Error, Result};
pub use gallery::{generate_crs_problem, GalleryKind, GalleryProblem};
pub use index::{GlobalIndex, IndexWidth, WidthState};
pub use io::{count_entries, read_coordinate_file, write_coordinate_file, CoordinateCounts};
pub use multivector::{ModifyMode, ModifyStatus, MultiVector};
pub use row_matrix::RowMatrix;
pub use solver::{cg_solve, Preconditioner, SolveReport};
pub use util::sort_with_companions;

/// Concrete container aliases per index width.
pub type IndexVector32 = IndexVector<i32>;
pub type IndexVector64 = IndexVector<i64>;
pub type SerialDenseIndexVector32 = SerialDenseIndexVector<i32>;
pub type SerialDenseIndexVector64 = SerialDenseIndexVector<i64>;
