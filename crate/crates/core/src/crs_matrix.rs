//! Row-distributed sparse matrix in compressed row storage over a
//! [`CrsGraph`].
//!
//! Values are `f64` and stay aligned one-to-one with the graph's entries:
//! per-row sorted lists while global insertion is open, a packed CRS array
//! after fill-complete. Duplicate contributions to one (row, column) merge
//! by summation. After fill the pattern is frozen but values stay mutable.
//!
//! The distributed multiply fetches off-rank input entries through a
//! communication plan built at fill time, placing them in column-map order
//! before the local kernel runs. The kernel accumulates each row in packed
//! (globally ascending) column order, so results are bitwise identical
//! across rank counts and index widths.

use crate::block_map::BlockMap;
use crate::crs_graph::CrsGraph;
use crate::distribution::{CommPlan, PlanDirection};
use crate::error::{Error, Result};
use crate::index::{IndexWidth, WidthState};
use crate::multivector::MultiVector;
use crate::row_matrix::RowMatrix;

/// How a value modification combines with an existing entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueMode {
    Replace,
    SumInto,
}

/// Physical widths of the matrix's current stores, in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StorageStats {
    /// Packed local column index width after fill-complete (0 before).
    pub bytes_per_packed_column_index: i32,
    pub bytes_per_value: i32,
    /// Width of global column indices held before fill-complete.
    pub bytes_per_global_index_pre_fill: i32,
}

/// Import schedule for off-rank multiply inputs.
#[derive(Debug)]
struct ImportPlan {
    plan: CommPlan,
    /// Domain-map local index per plan export slot (values this rank sends).
    export_domain_lids: Vec<i32>,
}

/// Row-distributed CRS matrix.
#[derive(Debug)]
pub struct CrsMatrix {
    graph: CrsGraph,
    /// Pre-fill: per-row values parallel to the graph's sorted row sets.
    row_values: Vec<Vec<f64>>,
    /// Post-fill: packed values parallel to the graph's packed indices.
    packed_values: Vec<f64>,
    import: Option<ImportPlan>,
}

impl CrsMatrix {
    /// Empty matrix over `row_map`'s rows.
    pub fn new(row_map: &BlockMap) -> Result<CrsMatrix> {
        let graph = CrsGraph::new(row_map)?;
        let rows = row_map.num_my_elements() as usize;
        Ok(CrsMatrix {
            graph,
            row_values: vec![Vec::new(); rows],
            packed_values: Vec::new(),
            import: None,
        })
    }

    pub fn graph(&self) -> &CrsGraph {
        &self.graph
    }

    pub fn row_map(&self) -> &BlockMap {
        self.graph.row_map()
    }

    pub fn col_map(&self) -> Option<&BlockMap> {
        self.graph.col_map()
    }

    pub fn domain_map(&self) -> Option<&BlockMap> {
        self.graph.domain_map()
    }

    pub fn range_map(&self) -> Option<&BlockMap> {
        self.graph.range_map()
    }

    pub fn filled(&self) -> bool {
        self.graph.filled()
    }

    pub fn width_state(&self) -> WidthState {
        self.graph.width_state()
    }

    // ----- insertion -----

    /// Inserts values into an owned row; contributions to a column already
    /// present in the row accumulate. 64-bit entry point: requires a 64-bit
    /// matrix.
    #[cfg(not(feature = "no_64bit_global_indices"))]
    pub fn insert_global_values(
        &mut self,
        global_row: i64,
        cols: &[i64],
        values: &[f64],
    ) -> Result<()> {
        self.require_width(IndexWidth::I64, "64-bit InsertGlobalValues")?;
        self.insert_internal(global_row, cols, values)
    }

    /// Narrow counterpart of [`CrsMatrix::insert_global_values`]; requires
    /// a 32-bit matrix.
    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn insert_global_values_i32(
        &mut self,
        global_row: i32,
        cols: &[i32],
        values: &[f64],
    ) -> Result<()> {
        self.require_width(IndexWidth::I32, "narrow InsertGlobalValues")?;
        let wide: Vec<i64> = cols.iter().map(|&c| i64::from(c)).collect();
        self.insert_internal(i64::from(global_row), &wide, values)
    }

    pub(crate) fn insert_internal(
        &mut self,
        global_row: i64,
        cols: &[i64],
        values: &[f64],
    ) -> Result<()> {
        if cols.len() != values.len() {
            return Err(Error::Contract(format!(
                "column count {} != value count {}",
                cols.len(),
                values.len()
            )));
        }
        let lid = self.graph.insertable_row(global_row)?;
        for (&c, &v) in cols.iter().zip(values.iter()) {
            let (pos, created) = self.graph.insert_col_internal(lid as i32, c)?;
            if created {
                self.row_values[lid].insert(pos, v);
            } else {
                self.row_values[lid][pos] += v;
            }
        }
        Ok(())
    }

    // ----- value modification -----

    /// Replaces or accumulates into entries that already exist in the
    /// pattern; missing (row, column) targets are counted in the returned
    /// value and skipped. Allowed before and after fill. 64-bit entry
    /// point: requires a 64-bit matrix.
    #[cfg(not(feature = "no_64bit_global_indices"))]
    pub fn modify_global_values(
        &mut self,
        global_row: i64,
        cols: &[i64],
        values: &[f64],
        mode: ValueMode,
    ) -> Result<usize> {
        self.require_width(IndexWidth::I64, "64-bit ReplaceGlobalValues/SumIntoGlobalValues")?;
        self.modify_internal(global_row, cols, values, mode)
    }

    /// Narrow counterpart of [`CrsMatrix::modify_global_values`].
    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn modify_global_values_i32(
        &mut self,
        global_row: i32,
        cols: &[i32],
        values: &[f64],
        mode: ValueMode,
    ) -> Result<usize> {
        self.require_width(IndexWidth::I32, "narrow ReplaceGlobalValues/SumIntoGlobalValues")?;
        let wide: Vec<i64> = cols.iter().map(|&c| i64::from(c)).collect();
        self.modify_internal(i64::from(global_row), &wide, values, mode)
    }

    fn modify_internal(
        &mut self,
        global_row: i64,
        cols: &[i64],
        values: &[f64],
        mode: ValueMode,
    ) -> Result<usize> {
        if cols.len() != values.len() {
            return Err(Error::Contract(format!(
                "column count {} != value count {}",
                cols.len(),
                values.len()
            )));
        }
        let lid = self.graph.owned_row(global_row)?;
        let mut missing = 0usize;
        for (&c, &v) in cols.iter().zip(values.iter()) {
            match self.graph.row_position(lid, c) {
                Some(pos) => {
                    let slot = if self.graph.indices_are_local() {
                        let (ptr, _) = self.graph.packed();
                        &mut self.packed_values[ptr[lid as usize] as usize + pos]
                    } else {
                        &mut self.row_values[lid as usize][pos]
                    };
                    match mode {
                        ValueMode::Replace => *slot = v,
                        ValueMode::SumInto => *slot += v,
                    }
                }
                None => missing += 1,
            }
        }
        Ok(missing)
    }

    // ----- fill-complete -----

    /// Freezes the pattern, packs the values and builds the import plan
    /// that feeds off-rank entries to [`CrsMatrix::multiply`]. Collective.
    pub fn fill_complete(&mut self, domain_map: &BlockMap, range_map: &BlockMap) -> Result<()> {
        self.graph.fill_complete(domain_map, range_map)?;
        self.packed_values = std::mem::take(&mut self.row_values).into_iter().flatten().collect();

        // The import plan exists whenever the domain layout is distributed;
        // ranks with no remote columns still participate as exporters.
        self.import = None;
        if domain_map.is_distributed_global() {
            let (remote_gids, remote_procs) = self.graph.remote_cols();
            let (plan, export_gids, _) = CommPlan::create_from_recvs(
                domain_map.comm(),
                remote_gids,
                remote_procs,
                true,
            )?;
            let export_domain_lids = export_gids
                .iter()
                .map(|&g| {
                    let lid = domain_map.lid_internal(g);
                    debug_assert!(lid >= 0, "exported index must be domain-owned");
                    lid
                })
                .collect();
            self.import = Some(ImportPlan {
                plan,
                export_domain_lids,
            });
        }
        Ok(())
    }

    // ----- extraction -----

    /// Copies an owned row's column indices (ascending) and the values
    /// aligned with them. Lossless for both widths; works before and after
    /// fill.
    pub fn extract_global_row_values(
        &self,
        global_row: i64,
        col_buffer: &mut [i64],
        value_buffer: &mut [f64],
    ) -> Result<usize> {
        let count = self.graph.extract_global_row(global_row, col_buffer)?;
        if value_buffer.len() < count {
            return Err(Error::Capacity { required: count });
        }
        let lid = self.graph.owned_row(global_row)?;
        if self.graph.indices_are_local() {
            let (ptr, _) = self.graph.packed();
            let start = ptr[lid as usize] as usize;
            value_buffer[..count].copy_from_slice(&self.packed_values[start..start + count]);
        } else {
            value_buffer[..count].copy_from_slice(&self.row_values[lid as usize]);
        }
        Ok(count)
    }

    /// Narrow extraction; errors on 64-bit matrices.
    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn extract_global_row_values_i32(
        &self,
        global_row: i32,
        col_buffer: &mut [i32],
        value_buffer: &mut [f64],
    ) -> Result<usize> {
        let count = self.graph.extract_global_row_i32(global_row, col_buffer)?;
        if value_buffer.len() < count {
            return Err(Error::Capacity { required: count });
        }
        let lid = self.graph.owned_row(i64::from(global_row))?;
        if self.graph.indices_are_local() {
            let (ptr, _) = self.graph.packed();
            let start = ptr[lid as usize] as usize;
            value_buffer[..count].copy_from_slice(&self.packed_values[start..start + count]);
        } else {
            value_buffer[..count].copy_from_slice(&self.row_values[lid as usize]);
        }
        Ok(count)
    }

    // ----- storage report -----

    pub fn storage_stats(&self) -> StorageStats {
        StorageStats {
            bytes_per_packed_column_index: if self.filled() {
                std::mem::size_of::<i32>() as i32
            } else {
                0
            },
            bytes_per_value: std::mem::size_of::<f64>() as i32,
            bytes_per_global_index_pre_fill: match self.width_state() {
                WidthState::I32 => 4,
                WidthState::I64 => 8,
                WidthState::Invalid => 0,
            },
        }
    }

    fn require_width(&self, width: IndexWidth, what: &str) -> Result<()> {
        if self.width_state() != WidthState::from(width) {
            return Err(Error::wrong_width(
                &format!("{what} requires a {width} matrix"),
                self.width_state(),
            ));
        }
        Ok(())
    }

    fn require_filled(&self, what: &str) -> Result<()> {
        if !self.filled() {
            return Err(Error::Lifecycle(format!(
                "{what} requires a fill-completed matrix"
            )));
        }
        Ok(())
    }

    /// Gathers the multiply input for one column into column-map order:
    /// owned entries read locally, remote entries through the import plan.
    fn gather_column_input(&self, x_column: &[f64]) -> Result<Vec<f64>> {
        let owned = self.graph.owned_col_domain_lids();
        let remote_len = self.graph.remote_cols().0.len();
        let mut full = Vec::with_capacity(owned.len() + remote_len);
        for &dl in owned {
            full.push(x_column[dl as usize]);
        }
        match &self.import {
            Some(import) => {
                let mut send = Vec::with_capacity(import.export_domain_lids.len() * 8);
                for &dl in &import.export_domain_lids {
                    send.extend_from_slice(&x_column[dl as usize].to_le_bytes());
                }
                let received = import.plan.execute(PlanDirection::Forward, 8, &send)?;
                debug_assert_eq!(received.len(), remote_len * 8);
                for item in received.chunks_exact(8) {
                    full.push(f64::from_le_bytes(item.try_into().expect("f64 item")));
                }
            }
            None => debug_assert_eq!(remote_len, 0),
        }
        Ok(full)
    }
}

impl RowMatrix for CrsMatrix {
    fn filled(&self) -> bool {
        CrsMatrix::filled(self)
    }

    fn width_state(&self) -> WidthState {
        CrsMatrix::width_state(self)
    }

    fn num_global_nonzeros64(&self) -> Result<i64> {
        self.graph.num_global_entries64()
    }

    fn num_global_rows64(&self) -> Result<i64> {
        Ok(self.graph.num_global_rows64())
    }

    fn num_global_cols64(&self) -> Result<i64> {
        self.graph.num_global_cols64()
    }

    fn num_global_diagonals64(&self) -> Result<i64> {
        self.graph.num_global_diagonals64()
    }

    /// `y = A * x` with `x` on the domain map and `y` on the range map.
    fn multiply(&self, x: &MultiVector, y: &mut MultiVector) -> Result<()> {
        self.require_filled("Multiply")?;
        let domain = self.domain_map().expect("filled matrix has a domain map");
        let range = self.range_map().expect("filled matrix has a range map");
        if !self.row_map().global_indices_match(x.map())
            || !self.row_map().global_indices_match(y.map())
        {
            return Err(Error::WidthMix(format!(
                "matrix is {}, x is {}, y is {}",
                self.width_state(),
                x.map().width_state(),
                y.map().width_state()
            )));
        }
        if !x.map().same_as(domain) {
            return Err(Error::Contract(
                "x must be laid out like the domain map".into(),
            ));
        }
        if !y.map().same_as(range) {
            return Err(Error::Contract(
                "y must be laid out like the range map".into(),
            ));
        }
        if x.num_vectors() != y.num_vectors() {
            return Err(Error::Contract(format!(
                "column counts differ: x has {}, y has {}",
                x.num_vectors(),
                y.num_vectors()
            )));
        }

        let (ptr, idx) = self.graph.packed();
        let rows = self.row_map().num_my_elements() as usize;
        for c in 0..x.num_vectors() {
            let full = self.gather_column_input(x.column(c))?;
            let out = y.column_mut(c);
            for r in 0..rows {
                let mut acc = 0.0;
                for k in ptr[r] as usize..ptr[r + 1] as usize {
                    acc += self.packed_values[k] * full[idx[k] as usize];
                }
                out[r] = acc;
            }
        }
        Ok(())
    }

    fn extract_diagonal_copy(&self, diagonal: &mut MultiVector) -> Result<()> {
        self.require_filled("ExtractDiagonalCopy")?;
        if !self.row_map().global_indices_match(diagonal.map()) {
            return Err(Error::WidthMix(format!(
                "matrix is {}, diagonal is {}",
                self.width_state(),
                diagonal.map().width_state()
            )));
        }
        if !diagonal.map().same_as(self.row_map()) {
            return Err(Error::Contract(
                "the diagonal vector must be laid out like the row map".into(),
            ));
        }
        let rows = self.row_map().num_my_elements();
        let (ptr, _) = self.graph.packed();
        let out = diagonal.column_mut(0);
        for lid in 0..rows {
            let gid = self.row_map().gid64(lid);
            out[lid as usize] = match self.graph.row_position(lid, gid) {
                Some(pos) => self.packed_values[ptr[lid as usize] as usize + pos],
                None => 0.0,
            };
        }
        Ok(())
    }
}
