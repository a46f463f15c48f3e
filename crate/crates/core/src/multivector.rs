//! Map-distributed dense vectors of `f64`.
//!
//! Values are always double precision regardless of the map's index width;
//! only addressing is width-sensitive. Reductions (`dot`, `norm2`) are
//! collective and combine per-rank partials in fixed rank order, so results
//! are identical on every rank and bitwise reproducible at a fixed rank
//! count.

use crate::block_map::BlockMap;
use crate::comm::ReduceOp;
use crate::error::{Error, Result};
use crate::index::WidthState;
use crate::util::Rng;

/// How a global-index-addressed modification combines with the stored entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModifyMode {
    Replace,
    SumInto,
}

/// Outcome of a global-index-addressed modification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModifyStatus {
    Applied,
    /// The addressed index lives on another rank; nothing changed here.
    NotOwned,
}

/// One or more dense columns distributed by a map.
#[derive(Debug, Clone)]
pub struct MultiVector {
    map: BlockMap,
    num_vectors: i32,
    /// Column-major: `values[c * my_length + row]`.
    values: Vec<f64>,
}

impl MultiVector {
    /// Zero-initialized multivector with `num_vectors` columns.
    pub fn new(map: &BlockMap, num_vectors: i32) -> Result<MultiVector> {
        if !map.width_state().is_valid() {
            return Err(Error::InvalidWidthState(
                "multivector requires a constructed map".into(),
            ));
        }
        if num_vectors < 1 {
            return Err(Error::Contract(format!(
                "column count must be at least 1, got {num_vectors}"
            )));
        }
        let len = map.num_my_points() as usize * num_vectors as usize;
        Ok(MultiVector {
            map: map.clone(),
            num_vectors,
            values: vec![0.0; len],
        })
    }

    pub fn map(&self) -> &BlockMap {
        &self.map
    }

    pub fn num_vectors(&self) -> i32 {
        self.num_vectors
    }

    /// Local point count per column.
    pub fn my_length(&self) -> i32 {
        self.map.num_my_points()
    }

    /// Global point count, valid for maps of either width and present in
    /// every compilation mode.
    pub fn global_length64(&self) -> i64 {
        self.map.num_global_points64()
    }

    /// Narrow global length; errors on 64-bit maps in all cases.
    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn global_length(&self) -> Result<i32> {
        match self.map.width_state() {
            WidthState::I32 => Ok(self.global_length64() as i32),
            found => Err(Error::wrong_width(
                "narrow GlobalLength requires a 32-bit map",
                found,
            )),
        }
    }

    pub fn column(&self, vector: i32) -> &[f64] {
        let len = self.map.num_my_points() as usize;
        let c = vector as usize;
        &self.values[c * len..(c + 1) * len]
    }

    pub fn column_mut(&mut self, vector: i32) -> &mut [f64] {
        let len = self.map.num_my_points() as usize;
        let c = vector as usize;
        &mut self.values[c * len..(c + 1) * len]
    }

    // ----- global-index-addressed modification -----

    /// Modifies the entry for `gid` (point `block_offset` within the
    /// element) in column `vector`. 64-bit entry point: requires a 64-bit
    /// map. Unowned indices report [`ModifyStatus::NotOwned`] and change
    /// nothing; there is no cross-rank forwarding.
    #[cfg(not(feature = "no_64bit_global_indices"))]
    pub fn modify_global_value(
        &mut self,
        gid: i64,
        block_offset: i32,
        vector: i32,
        value: f64,
        mode: ModifyMode,
    ) -> Result<ModifyStatus> {
        if self.map.width_state() != WidthState::I64 {
            return Err(Error::wrong_width(
                "64-bit ReplaceGlobalValue/SumIntoGlobalValue requires a 64-bit map",
                self.map.width_state(),
            ));
        }
        self.modify_internal(gid, block_offset, vector, value, mode)
    }

    /// Narrow counterpart of [`MultiVector::modify_global_value`]; errors on
    /// 64-bit maps.
    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn modify_global_value_i32(
        &mut self,
        gid: i32,
        block_offset: i32,
        vector: i32,
        value: f64,
        mode: ModifyMode,
    ) -> Result<ModifyStatus> {
        if self.map.width_state() != WidthState::I32 {
            return Err(Error::wrong_width(
                "narrow ReplaceGlobalValue/SumIntoGlobalValue requires a 32-bit map",
                self.map.width_state(),
            ));
        }
        self.modify_internal(i64::from(gid), block_offset, vector, value, mode)
    }

    /// Batch modification by global index (element point 0 per index).
    /// Returns the number of indices that were not locally owned.
    #[cfg(not(feature = "no_64bit_global_indices"))]
    pub fn modify_global_values(
        &mut self,
        gids: &[i64],
        values: &[f64],
        vector: i32,
        mode: ModifyMode,
    ) -> Result<usize> {
        if self.map.width_state() != WidthState::I64 {
            return Err(Error::wrong_width(
                "64-bit ReplaceGlobalValues/ChangeValues requires a 64-bit map",
                self.map.width_state(),
            ));
        }
        self.modify_batch_internal(gids.iter().copied(), values, vector, mode)
    }

    /// Narrow counterpart of [`MultiVector::modify_global_values`].
    #[cfg(not(feature = "no_32bit_global_indices"))]
    pub fn modify_global_values_i32(
        &mut self,
        gids: &[i32],
        values: &[f64],
        vector: i32,
        mode: ModifyMode,
    ) -> Result<usize> {
        if self.map.width_state() != WidthState::I32 {
            return Err(Error::wrong_width(
                "narrow ReplaceGlobalValues/ChangeValues requires a 32-bit map",
                self.map.width_state(),
            ));
        }
        self.modify_batch_internal(gids.iter().map(|&g| i64::from(g)), values, vector, mode)
    }

    fn modify_batch_internal(
        &mut self,
        gids: impl ExactSizeIterator<Item = i64>,
        values: &[f64],
        vector: i32,
        mode: ModifyMode,
    ) -> Result<usize> {
        if gids.len() != values.len() {
            return Err(Error::Contract(format!(
                "index count {} != value count {}",
                gids.len(),
                values.len()
            )));
        }
        let mut not_owned = 0usize;
        for (gid, &v) in gids.zip(values.iter()) {
            match self.modify_internal(gid, 0, vector, v, mode)? {
                ModifyStatus::Applied => {}
                ModifyStatus::NotOwned => not_owned += 1,
            }
        }
        Ok(not_owned)
    }

    pub(crate) fn modify_internal(
        &mut self,
        gid: i64,
        block_offset: i32,
        vector: i32,
        value: f64,
        mode: ModifyMode,
    ) -> Result<ModifyStatus> {
        if vector < 0 || vector >= self.num_vectors {
            return Err(Error::Contract(format!(
                "column {vector} out of range (columns {})",
                self.num_vectors
            )));
        }
        if block_offset < 0 || block_offset >= self.map.element_size() {
            return Err(Error::Contract(format!(
                "block offset {block_offset} out of range (element size {})",
                self.map.element_size()
            )));
        }
        let lid = self.map.lid_internal(gid);
        if lid < 0 {
            return Ok(ModifyStatus::NotOwned);
        }
        let at = lid * self.map.element_size() + block_offset;
        let slot = &mut self.column_mut(vector)[at as usize];
        match mode {
            ModifyMode::Replace => *slot = value,
            ModifyMode::SumInto => *slot += value,
        }
        Ok(ModifyStatus::Applied)
    }

    // ----- dense operations -----

    pub fn put_scalar(&mut self, value: f64) {
        self.values.fill(value);
    }

    /// Fills with deterministic pseudo-random values in (-1, 1). The stream
    /// depends on the seed, the rank and the column, so runs at a fixed
    /// rank count reproduce exactly.
    pub fn set_random(&mut self, seed: u64) {
        let rank = self.map.comm().rank() as u64;
        for c in 0..self.num_vectors {
            let mut rng = Rng::new(
                seed ^ rank.wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    ^ (c as u64).wrapping_mul(0xD1B5_4A32_D192_ED03),
            );
            for slot in self.column_mut(c) {
                *slot = rng.next_signed_unit();
            }
        }
    }

    /// Per-column dot products with `other`. Collective.
    pub fn dot(&self, other: &MultiVector) -> Result<Vec<f64>> {
        self.check_compatible(other)?;
        let len = self.map.num_my_points() as usize;
        let mut partials = Vec::with_capacity(self.num_vectors as usize);
        for c in 0..self.num_vectors {
            let (a, b) = (self.column(c), other.column(c));
            let mut acc = 0.0;
            for i in 0..len {
                acc += a[i] * b[i];
            }
            partials.push(acc);
        }
        self.map.comm().reduce_all(ReduceOp::Sum, &partials)
    }

    /// Per-column 2-norms. Collective.
    pub fn norm2(&self) -> Result<Vec<f64>> {
        let sums = self.dot(self)?;
        Ok(sums.into_iter().map(f64::sqrt).collect())
    }

    /// `self <- alpha * x + beta * self`, elementwise per column.
    pub fn update(&mut self, alpha: f64, x: &MultiVector, beta: f64) -> Result<()> {
        self.check_compatible(x)?;
        let len = self.map.num_my_points() as usize;
        for c in 0..self.num_vectors {
            let xs = x.column(c).to_vec();
            let a = self.column_mut(c);
            for i in 0..len {
                a[i] = alpha * xs[i] + beta * a[i];
            }
        }
        Ok(())
    }

    fn check_compatible(&self, other: &MultiVector) -> Result<()> {
        if !self.map.global_indices_match(other.map()) {
            return Err(Error::WidthMix(format!(
                "operand maps are {} and {}",
                self.map.width_state(),
                other.map.width_state()
            )));
        }
        if self.map.num_my_points() != other.map.num_my_points() {
            return Err(Error::Contract(format!(
                "local lengths differ: {} vs {}",
                self.map.num_my_points(),
                other.map.num_my_points()
            )));
        }
        if self.num_vectors != other.num_vectors {
            return Err(Error::Contract(format!(
                "column counts differ: {} vs {}",
                self.num_vectors, other.num_vectors
            )));
        }
        Ok(())
    }
}
