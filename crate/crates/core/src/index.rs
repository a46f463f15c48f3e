//! Global index widths, the per-object width state, and the scalar trait
//! that lets internal code be written once for both widths.
//!
//! Public entry points are never generic: callers pick a width through the
//! constructor or accessor they call, and every object records the width it
//! was built with as a [`WidthState`]. The [`GlobalIndex`] trait exists so
//! the internals (map layout, graph index stores, file readers) are written
//! a single time.

use crate::containers::{IndexVector, SerialDenseIndexVector};
use num_traits::{NumAssign, PrimInt, Signed};
use std::fmt;
use std::hash::Hash;

/// A valid global index width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndexWidth {
    I32,
    I64,
}

impl fmt::Display for IndexWidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexWidth::I32 => write!(f, "32-bit"),
            IndexWidth::I64 => write!(f, "64-bit"),
        }
    }
}

/// The width state an object carries from construction onward.
///
/// `Invalid` occurs only for default-constructed maps; every constructor
/// that takes index arguments produces `I32` or `I64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WidthState {
    #[default]
    Invalid,
    I32,
    I64,
}

impl WidthState {
    /// The valid width, if any.
    pub fn width(self) -> Option<IndexWidth> {
        match self {
            WidthState::Invalid => None,
            WidthState::I32 => Some(IndexWidth::I32),
            WidthState::I64 => Some(IndexWidth::I64),
        }
    }

    pub fn is_valid(self) -> bool {
        !matches!(self, WidthState::Invalid)
    }

    /// True iff both states are valid and equal. Objects whose states do not
    /// match must never interact.
    pub fn matches(self, other: WidthState) -> bool {
        self.is_valid() && self == other
    }
}

impl From<IndexWidth> for WidthState {
    fn from(w: IndexWidth) -> WidthState {
        match w {
            IndexWidth::I32 => WidthState::I32,
            IndexWidth::I64 => WidthState::I64,
        }
    }
}

impl fmt::Display for WidthState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WidthState::Invalid => write!(f, "invalid"),
            WidthState::I32 => write!(f, "32-bit"),
            WidthState::I64 => write!(f, "64-bit"),
        }
    }
}

/// Integer scalar usable as a global index: `i32` or `i64`.
///
/// Width-generic internal code selects its storage through this trait; the
/// associated types map a width onto its dense container family at compile
/// time.
pub trait GlobalIndex:
    PrimInt + Signed + NumAssign + Hash + Send + Sync + fmt::Debug + fmt::Display + 'static
{
    const WIDTH: IndexWidth;

    /// Distributed dense container for this width.
    type Vector;
    /// Rank-local resizable dense container for this width.
    type SerialDenseVector;

    /// Lossless widening.
    fn to_gid64(self) -> i64;

    /// Range-checked narrowing from a 64-bit value.
    fn from_gid64(gid: i64) -> Option<Self>;
}

impl GlobalIndex for i32 {
    const WIDTH: IndexWidth = IndexWidth::I32;
    type Vector = IndexVector<i32>;
    type SerialDenseVector = SerialDenseIndexVector<i32>;

    fn to_gid64(self) -> i64 {
        i64::from(self)
    }

    fn from_gid64(gid: i64) -> Option<i32> {
        i32::try_from(gid).ok()
    }
}

impl GlobalIndex for i64 {
    const WIDTH: IndexWidth = IndexWidth::I64;
    type Vector = IndexVector<i64>;
    type SerialDenseVector = SerialDenseIndexVector<i64>;

    fn to_gid64(self) -> i64 {
        self
    }

    fn from_gid64(gid: i64) -> Option<i64> {
        Some(gid)
    }
}
