//! The polar transform and code specifications.
//!
//! The transform is `x = u F^{⊗n}` over GF(2) with `F = [[1, 0], [1, 1]]`, in
//! natural index order (no bit reversal), so it is its own inverse.

use crate::error::{invalid, Result};

/// Checks that `len` is a power of two and returns its exponent.
pub fn log2_exact(len: usize) -> Result<u32> {
    if len == 0 || !len.is_power_of_two() {
        return invalid(format!("length {len} is not a power of two"));
    }
    Ok(len.trailing_zeros())
}

/// In-place polar transform. `bits.len()` must be a power of two.
pub fn polar_transform_in_place(bits: &mut [u8]) -> Result<()> {
    let len = bits.len();
    log2_exact(len)?;
    let mut half = 1;
    while half < len {
        for block in bits.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (l, h) in lo.iter_mut().zip(hi.iter()) {
                *l ^= *h;
            }
        }
        half *= 2;
    }
    Ok(())
}

pub fn polar_transform(u: &[u8]) -> Result<Vec<u8>> {
    let mut x = u.to_vec();
    polar_transform_in_place(&mut x)?;
    Ok(x)
}

/// One polar code: block length `N = 2^n`, the frozen/information partition
/// and the values carried by frozen positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSpec {
    n: u32,
    frozen: Vec<bool>,
    frozen_values: Vec<u8>,
    info: Vec<usize>,
}

impl CodeSpec {
    /// Builds a code from its frozen indices (any order); frozen values are zero.
    pub fn new(n: u32, frozen_indices: &[usize]) -> Result<Self> {
        if n == 0 || n > 24 {
            return invalid(format!("exponent {n} out of range 1..=24"));
        }
        let len = 1usize << n;
        let mut frozen = vec![false; len];
        for &i in frozen_indices {
            if i >= len {
                return invalid(format!("frozen index {i} outside [0, {len})"));
            }
            frozen[i] = true;
        }
        Ok(Self::from_mask(n, frozen))
    }

    /// Builds a code from its information indices (any order).
    pub fn from_info(n: u32, info_indices: &[usize]) -> Result<Self> {
        if n == 0 || n > 24 {
            return invalid(format!("exponent {n} out of range 1..=24"));
        }
        let len = 1usize << n;
        let mut frozen = vec![true; len];
        for &i in info_indices {
            if i >= len {
                return invalid(format!("info index {i} outside [0, {len})"));
            }
            frozen[i] = false;
        }
        Ok(Self::from_mask(n, frozen))
    }

    fn from_mask(n: u32, frozen: Vec<bool>) -> Self {
        let info = (0..frozen.len()).filter(|&i| !frozen[i]).collect();
        let frozen_values = vec![0; frozen.len()];
        CodeSpec {
            n,
            frozen,
            frozen_values,
            info,
        }
    }

    /// Replaces the frozen values. `values` has one entry per frozen index,
    /// in ascending index order.
    pub fn with_frozen_values(mut self, values: &[u8]) -> Result<Self> {
        let frozen_count = self.len() - self.info.len();
        if values.len() != frozen_count {
            return invalid(format!(
                "expected {frozen_count} frozen values, got {}",
                values.len()
            ));
        }
        let mut it = values.iter();
        for i in 0..self.len() {
            if self.frozen[i] {
                let v = *it.next().expect("counted above");
                if v > 1 {
                    return invalid("frozen values must be bits");
                }
                self.frozen_values[i] = v;
            }
        }
        Ok(self)
    }

    pub fn exponent(&self) -> u32 {
        self.n
    }

    /// Block length N.
    pub fn len(&self) -> usize {
        self.frozen.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of information bits K.
    pub fn info_count(&self) -> usize {
        self.info.len()
    }

    pub fn rate(&self) -> f64 {
        self.info.len() as f64 / self.len() as f64
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen
    }

    /// Value at index `i` if frozen (0 for information indices).
    pub fn frozen_value(&self, i: usize) -> u8 {
        self.frozen_values[i]
    }

    /// Information indices in ascending order.
    pub fn info_indices(&self) -> &[usize] {
        &self.info
    }

    pub fn frozen_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.frozen[i]).collect()
    }

    /// Places `message` on the information indices (ascending) and frozen
    /// values elsewhere, giving the u-domain vector.
    pub fn place(&self, message: &[u8]) -> Result<Vec<u8>> {
        if message.len() != self.info.len() {
            return invalid(format!(
                "message has {} bits, code carries {}",
                message.len(),
                self.info.len()
            ));
        }
        let mut u = self.frozen_values.clone();
        for (&idx, &bit) in self.info.iter().zip(message) {
            u[idx] = bit & 1;
        }
        Ok(u)
    }
}

/// Encodes `message` into a codeword of length N.
pub fn encode(message: &[u8], spec: &CodeSpec) -> Result<Vec<u8>> {
    let mut u = spec.place(message)?;
    polar_transform_in_place(&mut u)?;
    Ok(u)
}

/// Reads the information bits out of a u-domain vector.
pub fn extract_message(u_hat: &[u8], spec: &CodeSpec) -> Result<Vec<u8>> {
    if u_hat.len() != spec.len() {
        return invalid(format!(
            "u-vector has {} bits, code length is {}",
            u_hat.len(),
            spec.len()
        ));
    }
    Ok(spec.info.iter().map(|&i| u_hat[i]).collect())
}
