//! Width-specific dense index containers.
//!
//! [`IndexVector`] is a map-distributed array of global indices;
//! [`SerialDenseIndexVector`] is its rank-local resizable counterpart. Both
//! are generic over the index scalar so internal code selects the family at
//! compile time through [`GlobalIndex`](crate::index::GlobalIndex); the
//! crate root exports the concrete `*32`/`*64` aliases.

use crate::block_map::BlockMap;
use crate::error::{Error, Result};
use crate::index::GlobalIndex;

/// Map-distributed dense vector of global indices. Stores indices only; no
/// arithmetic is provided.
#[derive(Debug, Clone)]
pub struct IndexVector<G: GlobalIndex> {
    map: BlockMap,
    values: Vec<G>,
}

impl<G: GlobalIndex> IndexVector<G> {
    /// Zero-initialized vector with one entry per locally owned map element.
    pub fn new(map: &BlockMap) -> Result<IndexVector<G>> {
        if !map.width_state().is_valid() {
            return Err(Error::InvalidWidthState(
                "index vector requires a constructed map".into(),
            ));
        }
        Ok(IndexVector {
            map: map.clone(),
            values: vec![G::zero(); map.num_my_elements() as usize],
        })
    }

    pub fn map(&self) -> &BlockMap {
        &self.map
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, lid: i32) -> Result<G> {
        self.check_lid(lid)?;
        Ok(self.values[lid as usize])
    }

    pub fn set(&mut self, lid: i32, value: G) -> Result<()> {
        self.check_lid(lid)?;
        self.values[lid as usize] = value;
        Ok(())
    }

    pub fn put_value(&mut self, value: G) {
        self.values.fill(value);
    }

    pub fn values(&self) -> &[G] {
        &self.values
    }

    pub fn extract_copy(&self) -> Vec<G> {
        self.values.clone()
    }

    fn check_lid(&self, lid: i32) -> Result<()> {
        if lid < 0 || lid as usize >= self.values.len() {
            return Err(Error::Contract(format!(
                "local index {lid} out of range (length {})",
                self.values.len()
            )));
        }
        Ok(())
    }
}

/// Rank-local resizable dense vector of global indices.
#[derive(Debug, Clone, Default)]
pub struct SerialDenseIndexVector<G: GlobalIndex> {
    values: Vec<G>,
}

impl<G: GlobalIndex> SerialDenseIndexVector<G> {
    pub fn new() -> SerialDenseIndexVector<G> {
        SerialDenseIndexVector { values: Vec::new() }
    }

    pub fn sized(len: usize) -> SerialDenseIndexVector<G> {
        SerialDenseIndexVector {
            values: vec![G::zero(); len],
        }
    }

    /// Grows or shrinks to `len`. Existing prefix values are preserved; new
    /// entries are zero.
    pub fn resize(&mut self, len: usize) {
        self.values.resize(len, G::zero());
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, at: usize) -> Result<G> {
        self.values.get(at).copied().ok_or_else(|| {
            Error::Contract(format!("index {at} out of range (length {})", self.values.len()))
        })
    }

    pub fn set(&mut self, at: usize, value: G) -> Result<()> {
        let len = self.values.len();
        match self.values.get_mut(at) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(Error::Contract(format!(
                "index {at} out of range (length {len})"
            ))),
        }
    }

    pub fn as_slice(&self) -> &[G] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::IndexWidth;
    use std::any::TypeId;

    #[test]
    fn resize_preserves_prefix() {
        let mut v = SerialDenseIndexVector::<i64>::sized(2);
        v.set(0, 3_000_000_000).unwrap();
        v.set(1, 7).unwrap();
        v.resize(4);
        assert_eq!(v.as_slice(), &[3_000_000_000, 7, 0, 0]);
        v.resize(1);
        assert_eq!(v.as_slice(), &[3_000_000_000]);
    }

    #[test]
    fn width_selector_picks_matching_family() {
        assert_eq!(<i32 as GlobalIndex>::WIDTH, IndexWidth::I32);
        assert_eq!(<i64 as GlobalIndex>::WIDTH, IndexWidth::I64);
        assert_eq!(
            TypeId::of::<<i32 as GlobalIndex>::Vector>(),
            TypeId::of::<IndexVector<i32>>()
        );
        assert_eq!(
            TypeId::of::<<i64 as GlobalIndex>::SerialDenseVector>(),
            TypeId::of::<SerialDenseIndexVector<i64>>()
        );
        assert_eq!(std::mem::size_of::<i32>(), 4);
        assert_eq!(std::mem::size_of::<i64>(), 8);
    }

    #[cfg(not(feature = "no_32bit_global_indices"))]
    #[test]
    fn index_vector_tracks_map_length() {
        let comm = crate::comm::Comm::serial();
        let map = BlockMap::new_uniform_i32(5, 0, &comm).unwrap();
        let mut v = IndexVector::<i32>::new(&map).unwrap();
        assert_eq!(v.len(), 5);
        v.put_value(9);
        v.set(2, -4).unwrap();
        assert_eq!(v.extract_copy(), vec![9, 9, -4, 9, 9]);
        assert!(matches!(v.get(5), Err(Error::Contract(_))));
        assert!(matches!(v.set(-1, 0), Err(Error::Contract(_))));
    }

    #[test]
    fn index_vector_rejects_invalid_map() {
        let map = BlockMap::new_invalid();
        assert!(matches!(
            IndexVector::<i64>::new(&map),
            Err(Error::InvalidWidthState(_))
        ));
    }
}
