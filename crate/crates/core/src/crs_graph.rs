//! Row-distributed sparsity pattern with a global-insert /
//! fill-complete lifecycle.
//!
//! Until fill-complete, rows hold sorted sets of global column indices at
//! the graph's width. Fill-complete constructs the column map, converts
//! every stored global column to a packed 32-bit local index and freezes
//! the pattern. Index data lives in one of two width-specific stores; the
//! store matching the row map's width is populated while indices are
//! global, and the packed local form always lives in the 32-bit store —
//! local indices never grow past 32 bits regardless of the map width.

use crate::block_map::BlockMap;
use crate::comm::ReduceOp;
use crate::error::{Error, Result};
use crate::index::{GlobalIndex, IndexWidth, WidthState};

/// Width-specific index store: per-row global column sets before
/// fill-complete, and (in the 32-bit instance) the packed local form after.
#[derive(Debug, Default)]
pub struct IndexData<G: GlobalIndex> {
    global_rows: Vec<Vec<G>>,
    local_row_ptr: Vec<i32>,
    local_indices: Vec<i32>,
}

impl<G: GlobalIndex> IndexData<G> {
    fn with_rows(rows: usize) -> IndexData<G> {
        IndexData {
            global_rows: vec![Vec::new(); rows],
            local_row_ptr: Vec::new(),
            local_indices: Vec::new(),
        }
    }

    /// Sorted global column indices of one row (meaningful while indices
    /// are global).
    pub fn global_row(&self, lid: i32) -> &[G] {
        &self.global_rows[lid as usize]
    }

    /// Packed local-index CRS arrays `(row_ptr, indices)` (meaningful after
    /// indices have been made local; populated only in the 32-bit store).
    pub fn local_packed(&self) -> (&[i32], &[i32]) {
        (&self.local_row_ptr, &self.local_indices)
    }

    /// Inserts `col` into the sorted row set; returns the position and
    /// whether a new entry was created.
    fn insert_col(&mut self, lid: usize, col: G) -> (usize, bool) {
        let row = &mut self.global_rows[lid];
        match row.binary_search(&col) {
            Ok(pos) => (pos, false),
            Err(pos) => {
                row.insert(pos, col);
                (pos, true)
            }
        }
    }
}

/// Row-distributed sparsity pattern.
#[derive(Debug)]
pub struct CrsGraph {
    row_map: BlockMap,
    col_map: Option<BlockMap>,
    domain_map: Option<BlockMap>,
    range_map: Option<BlockMap>,
    data32: IndexData<i32>,
    data64: IndexData<i64>,
    filled: bool,
    indices_are_global: bool,
    indices_are_local: bool,
    num_global_entries: i64,
    num_global_diagonals: i64,
    /// Column-map local index -> domain-map local index, for the owned
    /// (leading) section of the column map.
    owned_col_domain_lids: Vec<i32>,
    /// Remote column global indices (the trailing column-map section) and
    /// their owning ranks, in column-map order.
    remote_col_gids: Vec<i64>,
    remote_col_procs: Vec<i32>,
}

impl CrsGraph {
    /// Empty pattern over `row_map`'s rows.
    pub fn new(row_map: &BlockMap) -> Result<CrsGraph> {
        if !row_map.width_state().is_valid() {
            return Err(Error::InvalidWidthState(
                "graph requires a constructed row map".into(),
            ));
        }
        if row_map.element_size() != 1 {
            return Err(Error::Contract(
                "graph row maps must have element size 1".into(),
            ));
        }
        let rows = row_map.num_my_elements() as usize;
        let width = row_map.width_state();
        Ok(CrsGraph {
            row_map: row_map.clone(),
            col_map: None,
            domain_map: None,
            range_map: None,
            data32: if width == WidthState::I32 {
                IndexData::with_rows(rows)
            } else {
                IndexData::default()
            },
            data64: if width == WidthState::I64 {
                IndexData::with_rows(rows)
            } else {
                IndexData::default()
            },
            filled: false,
            indices_are_global: true,
            indices_are_local: false,
            num_global_entries: 0,
            num_global_diagonals: 0,
            owned_col_domain_lids: Vec::new(),
            remote_col_gids: Vec::new(),
            remote_col_procs: Vec::new(),
        })
    }

    pub fn row_map(&self) -> &BlockMap {
        &self.row_map
    }

    /// Column map; exists after fill-complete.
    pub fn col_map(&self) -> Option<&BlockMap> {
        self.col_map.as_ref()
    }

    pub fn domain_map(&self) -> Option<&BlockMap> {
        self.domain_map.as_ref()
    }

    pub fn range_map(&self) -> Option<&BlockMap> {
        self.range_map.as_ref()
    }

    pub fn filled(&self) -> bool {
        self.filled
    }

    pub fn indices_are_global(&self) -> bool {
        self.indices_are_global
    }

    pub fn indices_are_local(&self) -> bool {
        self.indices_are_local
    }

    pub fn width_state(&self) -> WidthState {
        self.row_map.width_state()
    }

    // ----- insertion and removal -----

    /// Unions `cols` into the row's column set. 64-bit entry point:
    /// requires a 64-bit graph.
    #[cfg(not(feature = "no_64bit_global_indices"))]
    pub fn insert_global_indices(&mut self, global_row: i64, cols: &[i64]) -> Result<()> {
        self.require_width(IndexWidth::I64, "64-bit InsertGlobalIndices")?;
        let lid = self.insertable_row(global_row)?;
        for &c in cols {
            self.data64.insert_col(lid, c);
        }
        Ok(())
    }

    /// Narrow counterpart of [`CrsGraph::insert_global_indices`]; requires
    /// a 32-bit graph.
    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn insert_global_indices_i32(&mut self, global_row: i32, cols: &[i32]) -> Result<()> {
        self.require_width(IndexWidth::I32, "narrow InsertGlobalIndices")?;
        let lid = self.insertable_row(i64::from(global_row))?;
        for &c in cols {
            self.data32.insert_col(lid, c);
        }
        Ok(())
    }

    /// Empties the row's column set. Addressing by `i64` is lossless for
    /// both widths.
    pub fn remove_global_indices(&mut self, global_row: i64) -> Result<()> {
        let lid = self.insertable_row(global_row)?;
        match self.width_state() {
            WidthState::I32 => self.data32.global_rows[lid].clear(),
            WidthState::I64 => self.data64.global_rows[lid].clear(),
            WidthState::Invalid => unreachable!("graphs always have a valid width"),
        }
        Ok(())
    }

    /// Narrow remove; errors on 64-bit graphs.
    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn remove_global_indices_i32(&mut self, global_row: i32) -> Result<()> {
        self.require_width(IndexWidth::I32, "narrow RemoveGlobalIndices")?;
        self.remove_global_indices(i64::from(global_row))
    }

    // ----- fill-complete -----

    /// Builds the column map, converts global columns to packed 32-bit
    /// local indices and freezes the pattern. Collective. The range map
    /// must equal the row map; the domain map describes the column space.
    pub fn fill_complete(&mut self, domain_map: &BlockMap, range_map: &BlockMap) -> Result<()> {
        let comm = self.row_map.comm().clone();
        let mut local_error: Option<Error> = None;
        if self.filled {
            local_error = Some(Error::Lifecycle(
                "fill-complete was already called on this graph".into(),
            ));
        } else if !self.row_map.global_indices_match(domain_map)
            || !self.row_map.global_indices_match(range_map)
        {
            local_error = Some(Error::WidthMix(format!(
                "row map is {}, domain map is {}, range map is {}",
                self.row_map.width_state(),
                domain_map.width_state(),
                range_map.width_state()
            )));
        } else if domain_map.element_size() != 1 || range_map.element_size() != 1 {
            local_error = Some(Error::Contract(
                "graph domain and range maps must have element size 1".into(),
            ));
        } else if !range_map.same_as(&self.row_map) {
            local_error = Some(Error::Contract(
                "the range map must equal the row map".into(),
            ));
        }
        comm.agree_on_error(local_error)?;

        // Referenced global columns, sorted unique.
        let rows = self.row_map.num_my_elements() as usize;
        let mut referenced: Vec<i64> = Vec::new();
        for lid in 0..rows {
            match self.width_state() {
                WidthState::I32 => {
                    referenced.extend(self.data32.global_rows[lid].iter().map(|&c| i64::from(c)))
                }
                WidthState::I64 => referenced.extend(self.data64.global_rows[lid].iter()),
                WidthState::Invalid => unreachable!("graphs always have a valid width"),
            }
        }
        referenced.sort_unstable();
        referenced.dedup();

        // Owned columns first, ordered by domain-map local index; then
        // remote columns grouped by owning rank, ascending index within a
        // rank.
        let mut owned: Vec<(i32, i64)> = Vec::new();
        let mut remote: Vec<i64> = Vec::new();
        for &g in &referenced {
            let lid = domain_map.lid_internal(g);
            if lid >= 0 {
                owned.push((lid, g));
            } else {
                remote.push(g);
            }
        }
        owned.sort_unstable();

        let entries = domain_map.directory_entries(&remote, false, false, false)?;
        let mut local_error = None;
        if let Some(pos) = entries.procs.iter().position(|&p| p < 0) {
            local_error = Some(Error::InvalidColumn { gid: remote[pos] });
        }
        comm.agree_on_error(local_error)?;

        let mut remote_pairs: Vec<(i32, i64)> = entries
            .procs
            .iter()
            .copied()
            .zip(remote.iter().copied())
            .collect();
        remote_pairs.sort_unstable();

        let col_gids: Vec<i64> = owned
            .iter()
            .map(|&(_, g)| g)
            .chain(remote_pairs.iter().map(|&(_, g)| g))
            .collect();
        let col_map = crate::block_map::new_from_list_internal(
            self.width_state().width().expect("valid graph width"),
            -1,
            &col_gids,
            domain_map.index_base64(),
            &comm,
        )?;

        // Pack rows in ascending global column order (the row sets are
        // already sorted), translating to column-map local indices.
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut local_indices = Vec::new();
        let mut my_diagonals = 0i64;
        row_ptr.push(0i32);
        for lid in 0..rows {
            let row_gid = self.row_map.gid64_unchecked(lid);
            let mut has_diagonal = false;
            match self.width_state() {
                WidthState::I32 => {
                    for &c in &self.data32.global_rows[lid] {
                        let cl = col_map.lid_internal(i64::from(c));
                        debug_assert!(cl >= 0);
                        local_indices.push(cl);
                        has_diagonal |= i64::from(c) == row_gid;
                    }
                }
                WidthState::I64 => {
                    for &c in &self.data64.global_rows[lid] {
                        let cl = col_map.lid_internal(c);
                        debug_assert!(cl >= 0);
                        local_indices.push(cl);
                        has_diagonal |= c == row_gid;
                    }
                }
                WidthState::Invalid => unreachable!("graphs always have a valid width"),
            }
            if has_diagonal {
                my_diagonals += 1;
            }
            row_ptr.push(local_indices.len() as i32);
        }

        let totals = comm.reduce_all(
            ReduceOp::Sum,
            &[local_indices.len() as i64, my_diagonals],
        )?;
        self.num_global_entries = totals[0];
        self.num_global_diagonals = totals[1];

        self.owned_col_domain_lids = owned.iter().map(|&(l, _)| l).collect();
        self.remote_col_gids = remote_pairs.iter().map(|&(_, g)| g).collect();
        self.remote_col_procs = remote_pairs.iter().map(|&(p, _)| p).collect();

        // Release the global stores; the packed local form lives in the
        // 32-bit store for both widths.
        self.data32.global_rows = Vec::new();
        self.data64.global_rows = Vec::new();
        self.data32.local_row_ptr = row_ptr;
        self.data32.local_indices = local_indices;

        self.col_map = Some(col_map);
        self.domain_map = Some(domain_map.clone());
        self.range_map = Some(range_map.clone());
        self.filled = true;
        self.indices_are_global = false;
        self.indices_are_local = true;
        Ok(())
    }

    // ----- extraction -----

    /// Copies the row's global column indices (ascending) into `buffer` and
    /// returns the count. Lossless for both widths; works before and after
    /// fill-complete (afterwards, packed local indices are translated back
    /// through the column map).
    pub fn extract_global_row(&self, global_row: i64, buffer: &mut [i64]) -> Result<usize> {
        let lid = self.owned_row(global_row)?;
        let count = self.row_len(lid);
        if buffer.len() < count {
            return Err(Error::Capacity { required: count });
        }
        if self.indices_are_local {
            let col_map = self.col_map.as_ref().expect("filled graph has a column map");
            let (ptr, idx) = self.data32.local_packed();
            let start = ptr[lid as usize] as usize;
            for (i, &c) in idx[start..start + count].iter().enumerate() {
                buffer[i] = col_map.gid64(c);
            }
        } else {
            match self.width_state() {
                WidthState::I32 => {
                    for (i, &c) in self.data32.global_row(lid).iter().enumerate() {
                        buffer[i] = i64::from(c);
                    }
                }
                WidthState::I64 => {
                    buffer[..count].copy_from_slice(self.data64.global_row(lid));
                }
                WidthState::Invalid => unreachable!("graphs always have a valid width"),
            }
        }
        Ok(count)
    }

    /// Narrow extraction; errors on 64-bit graphs.
    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn extract_global_row_i32(&self, global_row: i32, buffer: &mut [i32]) -> Result<usize> {
        self.require_width(IndexWidth::I32, "narrow ExtractGlobalRowCopy")?;
        let lid = self.owned_row(i64::from(global_row))?;
        let count = self.row_len(lid);
        if buffer.len() < count {
            return Err(Error::Capacity { required: count });
        }
        if self.indices_are_local {
            let col_map = self.col_map.as_ref().expect("filled graph has a column map");
            let (ptr, idx) = self.data32.local_packed();
            let start = ptr[lid as usize] as usize;
            for (i, &c) in idx[start..start + count].iter().enumerate() {
                buffer[i] = col_map.gid64(c) as i32;
            }
        } else {
            buffer[..count].copy_from_slice(self.data32.global_row(lid));
        }
        Ok(count)
    }

    /// Borrowed view of a row's global column indices. Exists only at the
    /// graph's width and only while indices are global.
    #[cfg(not(feature = "no_64bit_global_indices"))]
    pub fn global_row_view_i64(&self, global_row: i64) -> Result<&[i64]> {
        self.require_width(IndexWidth::I64, "wide ExtractGlobalRowView")?;
        if self.indices_are_local {
            return Err(Error::Lifecycle(
                "global row views require indices to still be global".into(),
            ));
        }
        let lid = self.owned_row(global_row)?;
        Ok(self.data64.global_row(lid))
    }

    /// Narrow counterpart of [`CrsGraph::global_row_view_i64`].
    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn global_row_view_i32(&self, global_row: i32) -> Result<&[i32]> {
        self.require_width(IndexWidth::I32, "narrow ExtractGlobalRowView")?;
        if self.indices_are_local {
            return Err(Error::Lifecycle(
                "global row views require indices to still be global".into(),
            ));
        }
        let lid = self.owned_row(i64::from(global_row))?;
        Ok(self.data32.global_row(lid))
    }

    // ----- counts -----

    pub fn num_my_rows(&self) -> i32 {
        self.row_map.num_my_elements()
    }

    pub fn num_my_entries(&self) -> i32 {
        if self.indices_are_local {
            self.data32.local_indices.len() as i32
        } else {
            let rows = self.row_map.num_my_elements();
            (0..rows).map(|l| self.row_len(l) as i32).sum()
        }
    }

    /// Global row count; valid for both widths, available before fill.
    pub fn num_global_rows64(&self) -> i64 {
        self.row_map.num_global_elements64()
    }

    pub fn num_global_block_rows64(&self) -> i64 {
        self.num_global_rows64()
    }

    pub fn num_global_cols64(&self) -> Result<i64> {
        Ok(self.filled_domain()?.num_global_elements64())
    }

    pub fn num_global_block_cols64(&self) -> Result<i64> {
        self.num_global_cols64()
    }

    pub fn num_global_entries64(&self) -> Result<i64> {
        self.require_filled("NumGlobalEntries64")?;
        Ok(self.num_global_entries)
    }

    pub fn num_global_diagonals64(&self) -> Result<i64> {
        self.require_filled("NumGlobalDiagonals64")?;
        Ok(self.num_global_diagonals)
    }

    pub fn num_global_block_diagonals64(&self) -> Result<i64> {
        self.num_global_diagonals64()
    }

    /// Column count of one owned row; -1 when the row is not local.
    pub fn num_global_indices64(&self, global_row: i64) -> i64 {
        let lid = self.row_map.lid_internal(global_row);
        if lid < 0 {
            -1
        } else {
            self.row_len(lid) as i64
        }
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn num_global_rows(&self) -> Result<i32> {
        self.narrow_count(self.num_global_rows64(), "NumGlobalRows")
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn num_global_block_rows(&self) -> Result<i32> {
        self.narrow_count(self.num_global_block_rows64(), "NumGlobalBlockRows")
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn num_global_cols(&self) -> Result<i32> {
        let v = self.num_global_cols64()?;
        self.narrow_count(v, "NumGlobalCols")
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn num_global_block_cols(&self) -> Result<i32> {
        let v = self.num_global_block_cols64()?;
        self.narrow_count(v, "NumGlobalBlockCols")
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn num_global_entries(&self) -> Result<i32> {
        let v = self.num_global_entries64()?;
        self.narrow_count(v, "NumGlobalEntries")
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn num_global_diagonals(&self) -> Result<i32> {
        let v = self.num_global_diagonals64()?;
        self.narrow_count(v, "NumGlobalDiagonals")
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn num_global_block_diagonals(&self) -> Result<i32> {
        let v = self.num_global_block_diagonals64()?;
        self.narrow_count(v, "NumGlobalBlockDiagonals")
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn num_global_indices_i32(&self, global_row: i32) -> Result<i32> {
        self.require_width(IndexWidth::I32, "narrow NumGlobalIndices")?;
        Ok(self.num_global_indices64(i64::from(global_row)) as i32)
    }

    // ----- width-specific index data access -----

    /// Reference to the 64-bit index store. Requires a 64-bit row map with
    /// indices not yet made local.
    pub fn index_data_i64(&self) -> Result<&IndexData<i64>> {
        if self.width_state() != WidthState::I64 {
            return Err(Error::wrong_width(
                "the 64-bit index store requires a 64-bit map",
                self.width_state(),
            ));
        }
        if self.indices_are_local {
            return Err(Error::Lifecycle(
                "the 64-bit index store is released once indices have been made local".into(),
            ));
        }
        Ok(&self.data64)
    }

    /// Reference to the 32-bit index store. Works for 32-bit graphs, and
    /// for 64-bit graphs once indices have been made local (the packed
    /// local form is 32-bit for both widths).
    pub fn index_data_i32(&self) -> Result<&IndexData<i32>> {
        match self.width_state() {
            WidthState::I32 => Ok(&self.data32),
            WidthState::I64 if self.indices_are_local => Ok(&self.data32),
            found => Err(Error::wrong_width(
                "the 32-bit index store requires a 32-bit map or locally indexed data",
                found,
            )),
        }
    }

    // ----- crate-internal helpers -----

    /// Inserts one column and reports (position, newly created) so matrix
    /// values can stay aligned with the row set.
    pub(crate) fn insert_col_internal(&mut self, lid: i32, col: i64) -> Result<(usize, bool)> {
        match self.width_state() {
            WidthState::I32 => {
                let narrow = i32::from_gid64(col).ok_or(Error::WidthRange { value: col })?;
                Ok(self.data32.insert_col(lid as usize, narrow))
            }
            WidthState::I64 => Ok(self.data64.insert_col(lid as usize, col)),
            WidthState::Invalid => unreachable!("graphs always have a valid width"),
        }
    }

    /// Position of `col` within the row, against global sets before fill
    /// and against the packed (globally ascending) form afterwards.
    pub(crate) fn row_position(&self, lid: i32, col: i64) -> Option<usize> {
        if self.indices_are_local {
            let col_map = self.col_map.as_ref().expect("filled graph has a column map");
            let (ptr, idx) = self.data32.local_packed();
            let row = &idx[ptr[lid as usize] as usize..ptr[lid as usize + 1] as usize];
            row.binary_search_by_key(&col, |&c| col_map.gid64(c)).ok()
        } else {
            match self.width_state() {
                WidthState::I32 => {
                    let narrow = i32::from_gid64(col)?;
                    self.data32.global_row(lid).binary_search(&narrow).ok()
                }
                WidthState::I64 => self.data64.global_row(lid).binary_search(&col).ok(),
                WidthState::Invalid => None,
            }
        }
    }

    pub(crate) fn row_len(&self, lid: i32) -> usize {
        if self.indices_are_local {
            let (ptr, _) = self.data32.local_packed();
            (ptr[lid as usize + 1] - ptr[lid as usize]) as usize
        } else {
            match self.width_state() {
                WidthState::I32 => self.data32.global_row(lid).len(),
                WidthState::I64 => self.data64.global_row(lid).len(),
                WidthState::Invalid => 0,
            }
        }
    }

    pub(crate) fn packed(&self) -> (&[i32], &[i32]) {
        self.data32.local_packed()
    }

    pub(crate) fn owned_col_domain_lids(&self) -> &[i32] {
        &self.owned_col_domain_lids
    }

    pub(crate) fn remote_cols(&self) -> (&[i64], &[i32]) {
        (&self.remote_col_gids, &self.remote_col_procs)
    }

    /// Row handle for mutation: not filled and locally owned.
    pub(crate) fn insertable_row(&self, global_row: i64) -> Result<usize> {
        if self.filled {
            return Err(Error::Lifecycle(
                "the pattern is frozen once fill-complete has run".into(),
            ));
        }
        let lid = self.row_map.lid_internal(global_row);
        if lid < 0 {
            return Err(Error::NotOwned { gid: global_row });
        }
        Ok(lid as usize)
    }

    /// Row handle for queries: locally owned (any lifecycle phase).
    pub(crate) fn owned_row(&self, global_row: i64) -> Result<i32> {
        let lid = self.row_map.lid_internal(global_row);
        if lid < 0 {
            return Err(Error::NotOwned { gid: global_row });
        }
        Ok(lid)
    }

    fn require_width(&self, width: IndexWidth, what: &str) -> Result<()> {
        if self.width_state() != WidthState::from(width) {
            return Err(Error::wrong_width(
                &format!("{what} requires a {width} graph"),
                self.width_state(),
            ));
        }
        Ok(())
    }

    fn require_filled(&self, what: &str) -> Result<()> {
        if !self.filled {
            return Err(Error::Lifecycle(format!(
                "{what} requires a fill-completed graph"
            )));
        }
        Ok(())
    }

    fn filled_domain(&self) -> Result<&BlockMap> {
        self.domain_map.as_ref().ok_or_else(|| {
            Error::Lifecycle("the domain map exists after fill-complete".into())
        })
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    fn narrow_count(&self, value: i64, what: &str) -> Result<i32> {
        if self.width_state() != WidthState::I32 {
            return Err(Error::wrong_width(
                &format!("narrow {what} requires a 32-bit graph"),
                self.width_state(),
            ));
        }
        i32::try_from(value).map_err(|_| Error::WidthRange { value })
    }
}
