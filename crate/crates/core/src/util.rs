//! Small rank-local utilities: companion-array sorting and a deterministic
//! random stream.

use crate::error::{Error, Result};

/// Sorts `keys` and applies the same permutation to every companion array.
///
/// Keys may be `i32` or `i64` (any totally ordered copyable type works).
/// Companion lists may be empty. Equal keys are ordered by original
/// position, so the realized permutation is deterministic; callers should
/// still not rely on the order of companions under equal keys.
pub fn sort_with_companions<K: Ord + Copy>(
    ascending: bool,
    keys: &mut [K],
    double_companions: &mut [&mut [f64]],
    int_companions: &mut [&mut [i32]],
    long_companions: &mut [&mut [i64]],
) -> Result<()> {
    let n = keys.len();
    for c in double_companions.iter() {
        if c.len() != n {
            return Err(Error::Contract(format!(
                "companion length {} != key length {n}",
                c.len()
            )));
        }
    }
    for c in int_companions.iter() {
        if c.len() != n {
            return Err(Error::Contract(format!(
                "companion length {} != key length {n}",
                c.len()
            )));
        }
    }
    for c in long_companions.iter() {
        if c.len() != n {
            return Err(Error::Contract(format!(
                "companion length {} != key length {n}",
                c.len()
            )));
        }
    }

    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_unstable_by(|&a, &b| {
        let ord = keys[a].cmp(&keys[b]);
        let ord = if ascending { ord } else { ord.reverse() };
        ord.then(a.cmp(&b))
    });

    apply_permutation(keys, &perm);
    for c in double_companions.iter_mut() {
        apply_permutation(c, &perm);
    }
    for c in int_companions.iter_mut() {
        apply_permutation(c, &perm);
    }
    for c in long_companions.iter_mut() {
        apply_permutation(c, &perm);
    }
    Ok(())
}

fn apply_permutation<T: Copy>(values: &mut [T], perm: &[usize]) {
    let scratch: Vec<T> = perm.iter().map(|&i| values[i]).collect();
    values.copy_from_slice(&scratch);
}

/// SplitMix64 stream; deterministic across platforms.
#[derive(Debug, Clone)]
pub(crate) struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in (-1, 1).
    pub fn next_signed_unit(&mut self) -> f64 {
        let u = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        2.0 * u - 1.0
    }
}
