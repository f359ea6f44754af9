//! Privacy amplification with random binary Toeplitz matrices.
//!
//! A Toeplitz matrix of size `m × n` is fixed by its first row and column,
//! i.e. `n + m − 1` bits, which are drawn from a generator seeded with the
//! public function index. The family is 2-universal: for `x ≠ y` the
//! probability over the index that `Tx = Ty` is `2^−m`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::pipeline::BitStream;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashFunctionFamily {
    input_length: usize,
    output_length: usize,
}

impl HashFunctionFamily {
    pub fn new(input_length: usize, output_length: usize) -> Result<Self> {
        if output_length == 0 || output_length >= input_length {
            return Err(Error::invalid(format!(
                "output length {output_length} must lie in [1, {input_length})"
            )));
        }
        Ok(Self {
            input_length,
            output_length,
        })
    }

    pub fn input_length(&self) -> usize {
        self.input_length
    }

    pub fn output_length(&self) -> usize {
        self.output_length
    }

    /// Diagonals of the matrix selected by `function_index`; entry `(i, j)`
    /// is `diagonals[i + n − 1 − j]`.
    pub fn diagonals(&self, function_index: u64) -> Vec<u8> {
        let mut rng = rng_from_seed(function_index);
        (0..self.input_length + self.output_length - 1)
            .map(|_| rng.random_range(0..=1u8))
            .collect()
    }

    /// `T x` over GF(2).
    pub fn apply(&self, bits: &[u8], function_index: u64) -> Result<Vec<u8>> {
        if bits.len() != self.input_length {
            return Err(Error::LengthMismatch {
                left: bits.len(),
                right: self.input_length,
            });
        }
        let t = self.diagonals(function_index);
        let n = self.input_length;
        Ok((0..self.output_length)
            .map(|i| {
                bits.iter()
                    .enumerate()
                    .fold(0u8, |acc, (j, &x)| acc ^ (t[i + n - 1 - j] & x))
            })
            .collect())
    }
}

/// Compresses `bits` with the family member `function_index`.
pub fn privacy_amplify(
    bits: &BitStream,
    family: &HashFunctionFamily,
    function_index: u64,
) -> Result<BitStream> {
    let out = family.apply(bits.bits(), function_index)?;
    BitStream::from_bits(out, bits.provenance())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::Provenance;

    fn stream(bits: Vec<u8>) -> BitStream {
        BitStream::from_bits(bits, Provenance::Combined).unwrap()
    }

    #[test]
    fn zero_maps_to_zero() {
        let f = HashFunctionFamily::new(32, 8).unwrap();
        let out = privacy_amplify(&stream(vec![0; 32]), &f, 77).unwrap();
        assert_eq!(out.bits(), &[0; 8]);
    }

    #[test]
    fn deterministic_in_index() {
        let f = HashFunctionFamily::new(16, 5).unwrap();
        let x: Vec<u8> = (0..16).map(|i| (i % 3 == 0) as u8).collect();
        let a = privacy_amplify(&stream(x.clone()), &f, 3).unwrap();
        let b = privacy_amplify(&stream(x), &f, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
    }

    #[test]
    fn matches_explicit_matrix() {
        let f = HashFunctionFamily::new(5, 3).unwrap();
        let t = f.diagonals(11);
        let x = [1u8, 0, 1, 1, 0];
        let mut expected = vec![0u8; 3];
        for (i, e) in expected.iter_mut().enumerate() {
            for (j, &xj) in x.iter().enumerate() {
                // constant along diagonals: T[i][j] = T[i+1][j+1]
                let entry = t[(i as isize - j as isize + 4) as usize];
                *e ^= entry & xj;
            }
        }
        assert_eq!(f.apply(&x, 11).unwrap(), expected);
    }

    #[test]
    fn linear() {
        let f = HashFunctionFamily::new(20, 6).unwrap();
        let x: Vec<u8> = (0..20).map(|i| (i * 7 % 5 < 2) as u8).collect();
        let y: Vec<u8> = (0..20).map(|i| (i * 3 % 4 == 1) as u8).collect();
        let xy: Vec<u8> = x.iter().zip(&y).map(|(a, b)| a ^ b).collect();
        let hx = f.apply(&x, 8).unwrap();
        let hy = f.apply(&y, 8).unwrap();
        let hxy = f.apply(&xy, 8).unwrap();
        for k in 0..6 {
            assert_eq!(hxy[k], hx[k] ^ hy[k]);
        }
    }

    #[test]
    fn invalid_lengths() {
        assert!(HashFunctionFamily::new(8, 8).is_err());
        assert!(HashFunctionFamily::new(8, 0).is_err());
        let f = HashFunctionFamily::new(8, 4).unwrap();
        assert!(f.apply(&[0; 7], 1).is_err());
    }
}
