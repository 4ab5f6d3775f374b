use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the general `(k, n)` XOR scheme.
///
/// The secret is cut into `prime - 1` pieces of `piece_bits` bits each, and
/// every share carries `prime - 1` rows of the same size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub k: usize,
    pub n: usize,
    #[serde(rename = "n_p")]
    pub prime: usize,
    pub piece_bits: u32,
}

impl ThresholdParams {
    /// Builds parameters using the smallest prime `>= n`.
    pub fn new(k: usize, n: usize, piece_bits: u32) -> Result<Self> {
        Self::with_prime(k, n, smallest_prime_at_least(n.max(2)), piece_bits)
    }

    pub fn with_prime(k: usize, n: usize, prime: usize, piece_bits: u32) -> Result<Self> {
        let p = ThresholdParams {
            k,
            n,
            prime,
            piece_bits,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidParams(format!("k = {} must be at least 2", self.k)));
        }
        if self.n < self.k {
            return Err(Error::InvalidParams(format!(
                "n = {} must be at least k = {}",
                self.n, self.k
            )));
        }
        if !is_prime(self.prime) {
            return Err(Error::InvalidParams(format!("n_p = {} is not prime", self.prime)));
        }
        if self.prime < self.n {
            return Err(Error::InvalidParams(format!(
                "n_p = {} must be at least n = {}",
                self.prime, self.n
            )));
        }
        if self.piece_bits == 0 || !self.piece_bits.is_multiple_of(8) {
            return Err(Error::InvalidParams(format!(
                "piece size {} bits must be a positive multiple of 8",
                self.piece_bits
            )));
        }
        Ok(())
    }

    /// Number of secret pieces (and of rows per share).
    pub fn pieces(&self) -> usize {
        self.prime - 1
    }

    pub fn piece_octets(&self) -> usize {
        self.piece_bits as usize / 8
    }

    /// Length of a whole secret (and of one share) in octets.
    pub fn secret_octets(&self) -> usize {
        self.pieces() * self.piece_octets()
    }

    /// True for the `(2, 3)` parameters served by the specialized block path.
    pub fn is_two_of_three(&self) -> bool {
        self.k == 2 && self.n == 3 && self.prime == 3
    }
}

pub fn is_prime(v: usize) -> bool {
    if v < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= v {
        if v.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn smallest_prime_at_least(v: usize) -> usize {
    (v.max(2)..).find(|&p| is_prime(p)).expect("primes are unbounded")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_selection() {
        assert_eq!(smallest_prime_at_least(3), 3);
        assert_eq!(smallest_prime_at_least(4), 5);
        assert_eq!(smallest_prime_at_least(8), 11);
        assert_eq!(ThresholdParams::new(3, 5, 8).unwrap().prime, 5);
        assert_eq!(ThresholdParams::new(2, 4, 8).unwrap().prime, 5);
    }

    #[test]
    fn validation() {
        assert!(ThresholdParams::with_prime(2, 3, 4, 8).is_err());
        assert!(ThresholdParams::with_prime(2, 5, 3, 8).is_err());
        assert!(ThresholdParams::with_prime(1, 3, 3, 8).is_err());
        assert!(ThresholdParams::with_prime(4, 3, 3, 8).is_err());
        assert!(ThresholdParams::with_prime(2, 3, 3, 12).is_err());
        let p = ThresholdParams::with_prime(2, 3, 3, 1024).unwrap();
        assert!(p.is_two_of_three());
        assert_eq!(p.secret_octets(), 256);
    }
}
