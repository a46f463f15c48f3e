//! The distribution descriptor: which rank owns which global indices.
//!
//! A `BlockMap` is constructed at one of two index widths and records that
//! width for the rest of its life. Accessors follow the suffix-64
//! convention:
//!
//! * `*64` accessors return `i64`, work for maps of either width, and exist
//!   in every compilation mode.
//! * Their narrow (non-suffixed) counterparts return `i32` and error
//!   unconditionally on 64-bit maps — even when the value would fit — so a
//!   narrow caller can never silently truncate.
//! * Accessors taking an `i64` argument (`lid`, `my_gid`) are lossless for
//!   both widths and exist in every mode.
//!
//! Local indices are always `i32`: only global extents grow to 64 bits.

use crate::comm::{Comm, ReduceOp};
use crate::distribution::{Directory, DirectoryEntries};
use crate::error::{Error, Result};
use crate::index::{IndexWidth, WidthState};
use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

#[derive(Debug)]
enum GidStorage {
    None,
    I32(Vec<i32>),
    I64(Vec<i64>),
}

impl GidStorage {
    fn len(&self) -> usize {
        match self {
            GidStorage::None => 0,
            GidStorage::I32(v) => v.len(),
            GidStorage::I64(v) => v.len(),
        }
    }

    fn gid64(&self, lid: usize) -> i64 {
        match self {
            GidStorage::None => unreachable!("no storage on an invalid map"),
            GidStorage::I32(v) => i64::from(v[lid]),
            GidStorage::I64(v) => v[lid],
        }
    }
}

#[derive(Debug)]
struct MapData {
    comm: Comm,
    width: WidthState,
    num_global_elements: i64,
    index_base: i64,
    element_size: i32,
    gids: GidStorage,
    /// GID -> LID lookup for non-contiguous maps; contiguous maps resolve
    /// arithmetically.
    lid_lookup: Option<HashMap<i64, i32>>,
    contiguous: bool,
    /// For contiguous maps: rank r owns GIDs
    /// `[rank_starts[r], rank_starts[r+1])`. Lets the directory answer
    /// ownership queries without any messages.
    rank_starts: Option<Vec<i64>>,
    distributed_global: bool,
    min_my_gid: i64,
    max_my_gid: i64,
    min_all_gid: i64,
    max_all_gid: i64,
    directory: OnceLock<Directory>,
}

/// Distribution descriptor for map-based objects. Cheap to clone; clones
/// share the underlying layout.
#[derive(Clone, Debug)]
pub struct BlockMap {
    data: Arc<MapData>,
}

/// Uniform (even) division of `num_global` elements over `size` ranks:
/// every rank gets `num_global / size`, and the first `num_global % size`
/// ranks get one more.
pub(crate) fn uniform_share(num_global: i64, size: i32, rank: i32) -> (i64, i64) {
    let p = i64::from(size);
    let r = i64::from(rank);
    let base_count = num_global / p;
    let remainder = num_global % p;
    let count = base_count + if r < remainder { 1 } else { 0 };
    let start = r * base_count + r.min(remainder);
    (start, count)
}

impl BlockMap {
    /// Map with no width state. Only the width-state queries are
    /// meaningful; everything else reports emptiness or errors.
    pub fn new_invalid() -> BlockMap {
        BlockMap {
            data: Arc::new(MapData {
                comm: Comm::serial(),
                width: WidthState::Invalid,
                num_global_elements: 0,
                index_base: 0,
                element_size: 1,
                gids: GidStorage::None,
                lid_lookup: None,
                contiguous: false,
                rank_starts: None,
                distributed_global: false,
                min_my_gid: -1,
                max_my_gid: -1,
                min_all_gid: -1,
                max_all_gid: -1,
                directory: OnceLock::new(),
            }),
        }
    }

    // ----- constructors, 32-bit family -----

    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn new_uniform_i32(num_global: i32, index_base: i32, comm: &Comm) -> Result<BlockMap> {
        Self::new_uniform_blocks_i32(num_global, 1, index_base, comm)
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn new_uniform_blocks_i32(
        num_global: i32,
        element_size: i32,
        index_base: i32,
        comm: &Comm,
    ) -> Result<BlockMap> {
        build_uniform(
            IndexWidth::I32,
            i64::from(num_global),
            element_size,
            i64::from(index_base),
            comm,
        )
    }

    /// Builds a map from this rank's global index list. Passing -1 for
    /// `num_global_or_sentinel` lets the constructor compute the global
    /// count; any other value is validated against the computed count.
    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn new_from_list_i32(
        num_global_or_sentinel: i32,
        my_gids: &[i32],
        index_base: i32,
        comm: &Comm,
    ) -> Result<BlockMap> {
        Self::new_from_list_blocks_i32(num_global_or_sentinel, my_gids, 1, index_base, comm)
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn new_from_list_blocks_i32(
        num_global_or_sentinel: i32,
        my_gids: &[i32],
        element_size: i32,
        index_base: i32,
        comm: &Comm,
    ) -> Result<BlockMap> {
        let wide: Vec<i64> = my_gids.iter().map(|&g| i64::from(g)).collect();
        build_from_list(
            IndexWidth::I32,
            i64::from(num_global_or_sentinel),
            &wide,
            element_size,
            i64::from(index_base),
            comm,
        )
    }

    // ----- constructors, 64-bit family -----

    #[cfg(not(feature = "no_64bit_global_indices"))]
    pub fn new_uniform_i64(num_global: i64, index_base: i64, comm: &Comm) -> Result<BlockMap> {
        Self::new_uniform_blocks_i64(num_global, 1, index_base, comm)
    }

    #[cfg(not(feature = "no_64bit_global_indices"))]
    pub fn new_uniform_blocks_i64(
        num_global: i64,
        element_size: i32,
        index_base: i64,
        comm: &Comm,
    ) -> Result<BlockMap> {
        build_uniform(IndexWidth::I64, num_global, element_size, index_base, comm)
    }

    /// 64-bit counterpart of [`BlockMap::new_from_list_i32`].
    #[cfg(not(feature = "no_64bit_global_indices"))]
    pub fn new_from_list_i64(
        num_global_or_sentinel: i64,
        my_gids: &[i64],
        index_base: i64,
        comm: &Comm,
    ) -> Result<BlockMap> {
        Self::new_from_list_blocks_i64(num_global_or_sentinel, my_gids, 1, index_base, comm)
    }

    #[cfg(not(feature = "no_64bit_global_indices"))]
    pub fn new_from_list_blocks_i64(
        num_global_or_sentinel: i64,
        my_gids: &[i64],
        element_size: i32,
        index_base: i64,
        comm: &Comm,
    ) -> Result<BlockMap> {
        build_from_list(
            IndexWidth::I64,
            num_global_or_sentinel,
            my_gids,
            element_size,
            index_base,
            comm,
        )
    }

    // ----- width state -----

    pub fn width_state(&self) -> WidthState {
        self.data.width
    }

    /// True if the map was created with 32-bit global indices.
    pub fn global_indices_i32(&self) -> bool {
        self.data.width == WidthState::I32
    }

    /// True if the map was created with 64-bit global indices.
    pub fn global_indices_i64(&self) -> bool {
        self.data.width == WidthState::I64
    }

    /// True if the map was created with width `G` — the compile-time
    /// counterpart of the two queries above.
    pub fn global_indices_are<G: crate::index::GlobalIndex>(&self) -> bool {
        self.data.width == WidthState::from(G::WIDTH)
    }

    pub fn global_indices_valid(&self) -> bool {
        self.data.width.is_valid()
    }

    /// True iff both maps have the same valid width. Objects whose maps do
    /// not match must never be combined.
    pub fn global_indices_match(&self, other: &BlockMap) -> bool {
        self.data.width.matches(other.data.width)
    }

    // ----- plain queries -----

    pub fn comm(&self) -> &Comm {
        &self.data.comm
    }

    pub fn num_my_elements(&self) -> i32 {
        self.data.gids.len() as i32
    }

    pub fn element_size(&self) -> i32 {
        self.data.element_size
    }

    pub fn num_my_points(&self) -> i32 {
        self.num_my_elements() * self.data.element_size
    }

    pub fn is_contiguous(&self) -> bool {
        self.data.contiguous
    }

    pub fn is_distributed_global(&self) -> bool {
        self.data.distributed_global
    }

    /// Structural equality of the local layout: width, global extents and
    /// this rank's index list.
    pub fn same_as(&self, other: &BlockMap) -> bool {
        if Arc::ptr_eq(&self.data, &other.data) {
            return true;
        }
        if self.data.width != other.data.width
            || self.data.num_global_elements != other.data.num_global_elements
            || self.data.index_base != other.data.index_base
            || self.data.element_size != other.data.element_size
            || self.num_my_elements() != other.num_my_elements()
        {
            return false;
        }
        (0..self.data.gids.len()).all(|l| self.data.gids.gid64(l) == other.data.gids.gid64(l))
    }

    // ----- suffix-64 accessors: valid for both widths, in all modes -----

    pub fn index_base64(&self) -> i64 {
        self.data.index_base
    }

    pub fn num_global_elements64(&self) -> i64 {
        self.data.num_global_elements
    }

    pub fn num_global_points64(&self) -> i64 {
        self.data.num_global_elements * i64::from(self.data.element_size)
    }

    pub fn min_my_gid64(&self) -> i64 {
        self.data.min_my_gid
    }

    pub fn max_my_gid64(&self) -> i64 {
        self.data.max_my_gid
    }

    pub fn min_all_gid64(&self) -> i64 {
        self.data.min_all_gid
    }

    pub fn max_all_gid64(&self) -> i64 {
        self.data.max_all_gid
    }

    /// Global index owned at local index `lid`, for maps of either width.
    /// Out-of-range local indices return the sentinel `index_base - 1`.
    pub fn gid64(&self, lid: i32) -> i64 {
        if lid < 0 || (lid as usize) >= self.data.gids.len() {
            return self.data.index_base - 1;
        }
        self.data.gids.gid64(lid as usize)
    }

    /// Local index owning `gid` on this rank, or -1 when the index is not
    /// local. Lossless for maps of either width.
    pub fn lid(&self, gid: i64) -> Result<i32> {
        if !self.data.width.is_valid() {
            return Err(Error::InvalidWidthState("LID query on an invalid map".into()));
        }
        Ok(self.lid_internal(gid))
    }

    /// Ownership predicate: exactly `lid(gid) >= 0`.
    pub fn my_gid(&self, gid: i64) -> Result<bool> {
        Ok(self.lid(gid)? >= 0)
    }

    /// Dual-width view of this rank's global index list: exactly one of the
    /// two views is populated, matching the map's width. Works in every
    /// compilation mode.
    pub fn my_global_elements(&self) -> (Option<&[i32]>, Option<&[i64]>) {
        match &self.data.gids {
            GidStorage::None => (None, None),
            GidStorage::I32(v) => (Some(v), None),
            GidStorage::I64(v) => (None, Some(v)),
        }
    }

    /// Copies this rank's global indices into a 64-bit buffer. Lossless for
    /// both widths.
    pub fn my_global_elements_into_i64(&self, buffer: &mut [i64]) -> Result<()> {
        let n = self.data.gids.len();
        if !self.data.width.is_valid() {
            return Err(Error::InvalidWidthState(
                "element copy from an invalid map".into(),
            ));
        }
        if buffer.len() < n {
            return Err(Error::Capacity { required: n });
        }
        for (l, slot) in buffer.iter_mut().enumerate().take(n) {
            *slot = self.data.gids.gid64(l);
        }
        Ok(())
    }

    // ----- narrow accessors: error on 64-bit maps, hidden in 64-only mode -----

    /// Global index at `lid` as `i32`. Errors on 64-bit maps in all cases,
    /// even when the value would fit.
    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn gid(&self, lid: i32) -> Result<i32> {
        self.require_i32("GID")?;
        Ok(self.gid64(lid) as i32)
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn lid_i32(&self, gid: i32) -> Result<i32> {
        self.require_i32("LID")?;
        Ok(self.lid_internal(i64::from(gid)))
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn my_gid_i32(&self, gid: i32) -> Result<bool> {
        self.require_i32("MyGID")?;
        Ok(self.lid_internal(i64::from(gid)) >= 0)
    }

    /// Narrow view of this rank's global indices; errors on 64-bit maps.
    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn my_global_elements_i32(&self) -> Result<&[i32]> {
        match &self.data.gids {
            GidStorage::I32(v) => Ok(v),
            _ => Err(Error::wrong_width(
                "narrow element view requires a 32-bit map",
                self.data.width,
            )),
        }
    }

    /// Copies this rank's global indices into a narrow buffer. Errors on
    /// 64-bit maps: narrowing is never performed.
    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn my_global_elements_into_i32(&self, buffer: &mut [i32]) -> Result<()> {
        let v = self.my_global_elements_i32()?;
        if buffer.len() < v.len() {
            return Err(Error::Capacity { required: v.len() });
        }
        buffer[..v.len()].copy_from_slice(v);
        Ok(())
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn index_base(&self) -> Result<i32> {
        self.require_i32("IndexBase")?;
        Ok(self.data.index_base as i32)
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn num_global_elements(&self) -> Result<i32> {
        self.require_i32("NumGlobalElements")?;
        Ok(self.data.num_global_elements as i32)
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn num_global_points(&self) -> Result<i32> {
        self.require_i32("NumGlobalPoints")?;
        Ok(self.num_global_points64() as i32)
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn min_my_gid(&self) -> Result<i32> {
        self.require_i32("MinMyGID")?;
        Ok(self.data.min_my_gid as i32)
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn max_my_gid(&self) -> Result<i32> {
        self.require_i32("MaxMyGID")?;
        Ok(self.data.max_my_gid as i32)
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn min_all_gid(&self) -> Result<i32> {
        self.require_i32("MinAllGID")?;
        Ok(self.data.min_all_gid as i32)
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn max_all_gid(&self) -> Result<i32> {
        self.require_i32("MaxAllGID")?;
        Ok(self.data.max_all_gid as i32)
    }

    // ----- wide-only accessor: errors on 32-bit maps, hidden in 32-only mode -----

    /// Wide view of this rank's global indices; errors on 32-bit maps
    /// (there is no 64-bit storage to view).
    #[cfg(not(feature = "no_64bit_global_indices"))]
    pub fn my_global_elements_i64(&self) -> Result<&[i64]> {
        match &self.data.gids {
            GidStorage::I64(v) => Ok(v),
            _ => Err(Error::wrong_width(
                "wide element view requires a 64-bit map",
                self.data.width,
            )),
        }
    }

    // ----- directory -----

    /// Resolves each query index to its owning rank (and optionally the
    /// owner-local index and element size). Unowned indices resolve to -1.
    /// Collective: every rank of the communicator must call together with
    /// the same flags.
    ///
    /// When a global index is owned by several ranks (column maps),
    /// `high_rank_sharing` selects the highest owning rank; otherwise the
    /// lowest wins.
    pub fn directory_entries(
        &self,
        gids: &[i64],
        want_lids: bool,
        want_sizes: bool,
        high_rank_sharing: bool,
    ) -> Result<DirectoryEntries> {
        if !self.data.width.is_valid() {
            return Err(Error::InvalidWidthState(
                "directory query on an invalid map".into(),
            ));
        }
        let dir = match self.data.directory.get() {
            Some(d) => d,
            None => {
                let built = Directory::build(self)?;
                let _ = self.data.directory.set(built);
                self.data.directory.get().expect("directory just built")
            }
        };
        dir.entries(self, gids, want_lids, want_sizes, high_rank_sharing)
    }

    // ----- crate-internal helpers -----

    pub(crate) fn lid_internal(&self, gid: i64) -> i32 {
        match &self.data.lid_lookup {
            Some(lookup) => lookup.get(&gid).copied().unwrap_or(-1),
            None => {
                // Contiguous (or empty): arithmetic from this rank's range.
                if self.data.gids.len() > 0
                    && gid >= self.data.min_my_gid
                    && gid <= self.data.max_my_gid
                {
                    (gid - self.data.min_my_gid) as i32
                } else {
                    -1
                }
            }
        }
    }

    pub(crate) fn rank_starts(&self) -> Option<&[i64]> {
        self.data.rank_starts.as_deref()
    }

    pub(crate) fn gid64_unchecked(&self, lid: usize) -> i64 {
        self.data.gids.gid64(lid)
    }
}

fn min_max_my(gids: &[i64], index_base: i64) -> (i64, i64) {
    if gids.is_empty() {
        (index_base - 1, index_base - 1)
    } else {
        (
            gids.iter().copied().min().expect("nonempty"),
            gids.iter().copied().max().expect("nonempty"),
        )
    }
}

fn store_at_width(width: IndexWidth, gids: Vec<i64>) -> GidStorage {
    match width {
        IndexWidth::I32 => GidStorage::I32(gids.into_iter().map(|g| g as i32).collect()),
        IndexWidth::I64 => GidStorage::I64(gids),
    }
}

fn check_i32_range(width: IndexWidth, extreme: i64) -> Result<()> {
    if width == IndexWidth::I32 && i32::try_from(extreme).is_err() {
        return Err(Error::WidthRange { value: extreme });
    }
    Ok(())
}

fn build_uniform(
    width: IndexWidth,
    num_global: i64,
    element_size: i32,
    index_base: i64,
    comm: &Comm,
) -> Result<BlockMap> {
    if num_global < 0 {
        return Err(Error::Contract(format!(
            "global element count must be nonnegative, got {num_global}"
        )));
    }
    if element_size < 1 {
        return Err(Error::Contract(format!(
            "element size must be at least 1, got {element_size}"
        )));
    }
    check_i32_range(width, index_base)?;
    if num_global > 0 {
        let last = index_base
            .checked_add(num_global - 1)
            .ok_or(Error::WidthRange { value: i64::MAX })?;
        check_i32_range(width, last)?;
    }

    let size = comm.size();
    let (my_start, my_count) = uniform_share(num_global, size, comm.rank());
    let gids: Vec<i64> = (0..my_count).map(|i| index_base + my_start + i).collect();
    let (min_my, max_my) = min_max_my(&gids, index_base);

    let mut rank_starts = Vec::with_capacity(size as usize + 1);
    for r in 0..size {
        rank_starts.push(index_base + uniform_share(num_global, size, r).0);
    }
    rank_starts.push(index_base + num_global);

    Ok(BlockMap {
        data: Arc::new(MapData {
            comm: comm.clone(),
            width: WidthState::from(width),
            num_global_elements: num_global,
            index_base,
            element_size,
            gids: store_at_width(width, gids),
            lid_lookup: None,
            contiguous: true,
            rank_starts: Some(rank_starts),
            distributed_global: size > 1 && num_global > 0,
            min_my_gid: min_my,
            max_my_gid: max_my,
            min_all_gid: if num_global > 0 { index_base } else { index_base - 1 },
            max_all_gid: if num_global > 0 {
                index_base + num_global - 1
            } else {
                index_base - 1
            },
            directory: OnceLock::new(),
        }),
    })
}

fn build_from_list(
    width: IndexWidth,
    num_global_or_sentinel: i64,
    my_gids: &[i64],
    element_size: i32,
    index_base: i64,
    comm: &Comm,
) -> Result<BlockMap> {
    // Local validation first; the verdict is agreed collectively so no rank
    // is left blocked in the reductions below.
    let mut local_error: Option<Error> = None;
    if my_gids.len() > i32::MAX as usize {
        local_error = Some(Error::Contract(
            "local element count exceeds the 32-bit local index range".into(),
        ));
    }
    if local_error.is_none() && element_size < 1 {
        local_error = Some(Error::Contract(format!(
            "element size must be at least 1, got {element_size}"
        )));
    }
    if local_error.is_none() {
        if let Err(e) = check_i32_range(width, index_base) {
            local_error = Some(e);
        }
    }
    if local_error.is_none() {
        let mut seen = HashMap::with_capacity(my_gids.len());
        for &g in my_gids {
            if g < index_base {
                local_error = Some(Error::Contract(format!(
                    "global index {g} is below the index base {index_base}"
                )));
                break;
            }
            if seen.insert(g, ()).is_some() {
                local_error = Some(Error::Contract(format!(
                    "global index {g} appears twice on this rank"
                )));
                break;
            }
        }
    }
    comm.agree_on_error(local_error)?;

    let my_count = my_gids.len() as i64;
    let totals = comm.reduce_all(ReduceOp::Sum, &[my_count])?;
    let computed = totals[0];
    if num_global_or_sentinel != -1 && num_global_or_sentinel != computed {
        return Err(Error::CountMismatch {
            stated: num_global_or_sentinel,
            computed,
        });
    }

    let (min_my, max_my) = min_max_my(my_gids, index_base);
    let extremes = comm.reduce_all(
        ReduceOp::Min,
        &[
            if my_gids.is_empty() { i64::MAX } else { min_my },
            if my_gids.is_empty() { i64::MAX } else { -max_my },
        ],
    )?;
    let (min_all, max_all) = if computed == 0 {
        (index_base - 1, index_base - 1)
    } else {
        (extremes[0], -extremes[1])
    };

    // Contiguity: every rank holds an ascending +1 run and the runs chain
    // across ranks in rank order.
    let local_run = my_gids
        .windows(2)
        .all(|w| w[1] == w[0] + 1);
    let run_meta = comm.gather_all(&[
        if local_run { 1i64 } else { 0 },
        my_count,
        if my_gids.is_empty() { 0 } else { my_gids[0] },
    ])?;
    let mut contiguous = computed >= 0;
    let mut expected_next: Option<i64> = None;
    let mut rank_starts = Vec::with_capacity(comm.size() as usize + 1);
    let mut cursor = min_all;
    for r in 0..comm.size() as usize {
        let (run, count, first) = (run_meta[3 * r], run_meta[3 * r + 1], run_meta[3 * r + 2]);
        if run == 0 {
            contiguous = false;
        }
        rank_starts.push(cursor);
        if count > 0 {
            if let Some(exp) = expected_next {
                if first != exp {
                    contiguous = false;
                }
            }
            expected_next = Some(first + count);
            cursor = first + count;
        }
    }
    rank_starts.push(cursor);

    let all_own_all = comm.reduce_all(
        ReduceOp::Min,
        &[if my_count == computed { 1i64 } else { 0 }],
    )?[0] == 1;
    let distributed_global = comm.size() > 1 && computed > 0 && !all_own_all;

    let lid_lookup = if contiguous {
        None
    } else {
        Some(
            my_gids
                .iter()
                .enumerate()
                .map(|(l, &g)| (g, l as i32))
                .collect(),
        )
    };

    Ok(BlockMap {
        data: Arc::new(MapData {
            comm: comm.clone(),
            width: WidthState::from(width),
            num_global_elements: computed,
            index_base,
            element_size,
            gids: store_at_width(width, my_gids.to_vec()),
            lid_lookup,
            contiguous,
            rank_starts: if contiguous { Some(rank_starts) } else { None },
            distributed_global,
            min_my_gid: min_my,
            max_my_gid: max_my,
            min_all_gid: min_all,
            max_all_gid: max_all,
            directory: OnceLock::new(),
        }),
    })
}

/// Width-dispatched from-list construction for internal machinery (column
/// maps, readers); present in every compilation mode.
pub(crate) fn new_from_list_internal(
    width: IndexWidth,
    num_global_or_sentinel: i64,
    my_gids: &[i64],
    index_base: i64,
    comm: &Comm,
) -> Result<BlockMap> {
    build_from_list(width, num_global_or_sentinel, my_gids, 1, index_base, comm)
}

impl BlockMap {
    #[cfg(not(feature = "no_32bit_global_indices"))]
    fn require_i32(&self, what: &str) -> Result<()> {
        match self.data.width {
            WidthState::I32 => Ok(()),
            found => Err(Error::wrong_width(
                &format!("narrow accessor {what} requires a 32-bit map"),
                found,
            )),
        }
    }
}

/// Builds a uniform map at a runtime-chosen width.
///
/// This is the multi-mode dispatch pattern: each width branch is compiled
/// only when its interface exists, the function itself compiles in all
/// three modes, and a width excluded from the build reports
/// [`Error::WidthExcluded`] instead of disappearing from the signature.
pub fn uniform_map_for_width(
    width: IndexWidth,
    num_global: i64,
    index_base: i64,
    comm: &Comm,
) -> Result<BlockMap> {
    #[cfg(not(feature = "no_32bit_global_indices"))]
    if width == IndexWidth::I32 {
        let num = i32::try_from(num_global).map_err(|_| Error::WidthRange { value: num_global })?;
        let base = i32::try_from(index_base).map_err(|_| Error::WidthRange { value: index_base })?;
        return BlockMap::new_uniform_i32(num, base, comm);
    }
    #[cfg(not(feature = "no_64bit_global_indices"))]
    if width == IndexWidth::I64 {
        return BlockMap::new_uniform_i64(num_global, index_base, comm);
    }
    Err(Error::WidthExcluded { width })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_share_divides_evenly() {
        // 10 over 3 ranks: counts (4, 3, 3), starts (0, 4, 7).
        assert_eq!(uniform_share(10, 3, 0), (0, 4));
        assert_eq!(uniform_share(10, 3, 1), (4, 3));
        assert_eq!(uniform_share(10, 3, 2), (7, 3));
        assert_eq!(uniform_share(0, 4, 2), (0, 0));
    }

    /// The dispatch pattern must compile and behave in every mode: present
    /// widths construct, excluded widths report their exclusion.
    #[test]
    fn width_dispatch_works_in_every_mode() {
        let comm = Comm::serial();
        #[cfg(not(feature = "no_32bit_global_indices"))]
        {
            let map = uniform_map_for_width(IndexWidth::I32, 5, 0, &comm).unwrap();
            assert!(map.global_indices_i32());
        }
        #[cfg(feature = "no_32bit_global_indices")]
        {
            assert!(matches!(
                uniform_map_for_width(IndexWidth::I32, 5, 0, &comm),
                Err(Error::WidthExcluded { .. })
            ));
        }
        #[cfg(not(feature = "no_64bit_global_indices"))]
        {
            let map = uniform_map_for_width(IndexWidth::I64, 5, 0, &comm).unwrap();
            assert!(map.global_indices_i64());
        }
        #[cfg(feature = "no_64bit_global_indices")]
        {
            assert!(matches!(
                uniform_map_for_width(IndexWidth::I64, 5, 0, &comm),
                Err(Error::WidthExcluded { .. })
            ));
        }
    }

    #[test]
    fn invalid_map_reports_invalid_state() {
        let map = BlockMap::new_invalid();
        assert_eq!(map.width_state(), WidthState::Invalid);
        assert!(!map.global_indices_valid());
        assert!(!map.global_indices_i32());
        assert!(!map.global_indices_i64());
        assert!(!map.global_indices_match(&BlockMap::new_invalid()));
        assert!(matches!(map.lid(0), Err(Error::InvalidWidthState(_))));
        assert_eq!(map.gid64(0), -1);
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    mod narrow {
        use super::super::*;

        #[test]
        fn serial_uniform_ten_elements() {
            let comm = Comm::serial();
            let map = BlockMap::new_uniform_i32(10, 0, &comm).unwrap();
            assert_eq!(map.num_my_elements(), 10);
            assert_eq!(map.num_global_elements64(), 10);
            assert!(map.global_indices_i32());
            assert!(!map.global_indices_i64());
            assert!(map.global_indices_are::<i32>());
            assert!(!map.global_indices_are::<i64>());
            assert!(map.is_contiguous());
            assert!(!map.is_distributed_global());
            for lid in 0..10 {
                assert_eq!(map.gid64(lid), i64::from(lid));
                assert_eq!(map.gid(lid).unwrap(), lid);
                assert_eq!(map.lid(i64::from(lid)).unwrap(), lid);
            }
            assert_eq!(map.gid64(10), -1);
            assert_eq!(map.lid(10).unwrap(), -1);
        }

        #[test]
        fn empty_map_uses_sentinel_aggregates() {
            let comm = Comm::serial();
            let map = BlockMap::new_uniform_i32(0, 0, &comm).unwrap();
            assert_eq!(map.num_global_elements64(), 0);
            assert_eq!(map.min_all_gid64(), -1);
            assert_eq!(map.max_all_gid64(), -1);
            assert_eq!(map.min_my_gid64(), -1);
        }

        #[test]
        fn from_list_computes_aggregates() {
            let comm = Comm::serial();
            let map = BlockMap::new_from_list_i32(-1, &[3, 1, 2], 0, &comm).unwrap();
            assert_eq!(map.num_global_elements64(), 3);
            assert_eq!(map.min_all_gid64(), 1);
            assert_eq!(map.max_all_gid64(), 3);
            assert!(!map.is_contiguous());
            assert_eq!(map.lid(3).unwrap(), 0);
            assert_eq!(map.lid(1).unwrap(), 1);
            assert_eq!(map.lid(7).unwrap(), -1);
        }

        #[test]
        fn stated_count_mismatch_is_rejected() {
            let comm = Comm::serial();
            let err = BlockMap::new_from_list_i32(3, &[0, 1], 0, &comm);
            assert!(matches!(
                err,
                Err(Error::CountMismatch {
                    stated: 3,
                    computed: 2
                })
            ));
        }

        #[test]
        fn duplicate_local_gid_is_rejected() {
            let comm = Comm::serial();
            let err = BlockMap::new_from_list_i32(-1, &[4, 4], 0, &comm);
            assert!(matches!(err, Err(Error::Contract(_))));
        }

        #[test]
        fn gid_below_index_base_is_rejected() {
            let comm = Comm::serial();
            let err = BlockMap::new_from_list_i32(-1, &[5, 2], 3, &comm);
            assert!(matches!(err, Err(Error::Contract(_))));
        }

        #[test]
        fn uniform_extent_must_fit_narrow_width() {
            let comm = Comm::serial();
            let err = BlockMap::new_uniform_i32(i32::MAX, 10, &comm);
            assert!(matches!(err, Err(Error::WidthRange { .. })));
        }

        #[test]
        fn sentinel_uses_index_base_minus_one() {
            let comm = Comm::serial();
            let map = BlockMap::new_from_list_i32(-1, &[5, 7, 9], 5, &comm).unwrap();
            assert_eq!(map.gid64(17), 4);
        }

        #[test]
        fn blocks_scale_points() {
            let comm = Comm::serial();
            let map = BlockMap::new_uniform_blocks_i32(3, 2, 0, &comm).unwrap();
            assert_eq!(map.num_global_points64(), 6);
            assert_eq!(map.num_my_points(), 6);
            assert_eq!(map.element_size(), 2);
        }
    }

    #[cfg(not(feature = "no_64bit_global_indices"))]
    mod wide {
        use super::super::*;

        #[test]
        fn wide_map_stores_values_beyond_i32() {
            let comm = Comm::serial();
            let base = 3_000_000_000i64;
            let map = BlockMap::new_from_list_i64(-1, &[base, base + 1], 0, &comm).unwrap();
            assert!(map.global_indices_i64());
            assert_eq!(map.max_all_gid64(), base + 1);
            assert_eq!(map.lid(base + 1).unwrap(), 1);
            let (narrow, wide) = map.my_global_elements();
            assert!(narrow.is_none());
            assert_eq!(wide.unwrap(), &[base, base + 1]);
        }

        #[test]
        fn contiguous_from_list_is_detected() {
            let comm = Comm::serial();
            let map = BlockMap::new_from_list_i64(-1, &[10, 11, 12], 0, &comm).unwrap();
            assert!(map.is_contiguous());
            assert_eq!(map.lid(11).unwrap(), 1);
        }
    }
}
