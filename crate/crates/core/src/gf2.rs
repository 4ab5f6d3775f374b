//! Dense matrices over GF(2), packed 64 columns per word.

#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64);
        BitMatrix {
            rows,
            cols,
            words,
            data: vec![0; rows * words],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.words + c / 64] >> (c % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let w = &mut self.data[r * self.words + c / 64];
        let mask = 1u64 << (c % 64);
        if v {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, r: usize, c: usize) {
        self.data[r * self.words + c / 64] ^= 1u64 << (c % 64);
    }

    /// Column indices set in row `r`, ascending.
    pub fn row_ones(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.cols).filter(move |&c| self.get(r, c))
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in self.row_ones(r) {
                t.set(c, r, true);
            }
        }
        t
    }

    pub fn mul(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = BitMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in self.row_ones(r) {
                out.xor_row_from(r, other, k);
            }
        }
        out
    }

    fn xor_row_from(&mut self, dst: usize, src: &BitMatrix, src_row: usize) {
        debug_assert_eq!(self.words, src.words);
        let (a, b) = (dst * self.words, src_row * src.words);
        for w in 0..self.words {
            self.data[a + w] ^= src.data[b + w];
        }
    }

    fn xor_rows(&mut self, dst: usize, src: usize) {
        let (a, b) = (dst * self.words, src * self.words);
        for w in 0..self.words {
            let v = self.data[b + w];
            self.data[a + w] ^= v;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.words {
            self.data.swap(a * self.words + w, b * self.words + w);
        }
    }

    /// Solves `self · X = rhs` for `X`, with free variables set to zero.
    ///
    /// Returns `None` when some column of `rhs` is outside the column space
    /// of `self`.
    pub fn solve(&self, rhs: &BitMatrix) -> Option<BitMatrix> {
        assert_eq!(self.rows, rhs.rows, "dimension mismatch");
        let mut a = self.clone();
        let mut b = rhs.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..a.cols {
            if row == a.rows {
                break;
            }
            let Some(p) = (row..a.rows).find(|&r| a.get(r, col)) else {
                continue;
            };
            a.swap_rows(row, p);
            b.swap_rows(row, p);
            for r in 0..a.rows {
                if r != row && a.get(r, col) {
                    a.xor_rows(r, row);
                    b.xor_rows(r, row);
                }
            }
            pivots.push(col);
            row += 1;
        }
        // Rows below the rank must have a zero right-hand side.
        for r in row..b.rows {
            if b.data[r * b.words..(r + 1) * b.words].iter().any(|&w| w != 0) {
                return None;
            }
        }
        let mut x = BitMatrix::zeros(a.cols, b.cols);
        for (r, &col) in pivots.iter().enumerate() {
            x.xor_row_from(col, &b, r);
        }
        Some(x)
    }

    pub fn identity(n: usize) -> BitMatrix {
        let mut m = BitMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }
}

impl std::fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let line: String = (0..self.cols).map(|c| if self.get(r, c) { '1' } else { '0' }).collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn from_rows(rows: &[&str]) -> BitMatrix {
        let mut m = BitMatrix::zeros(rows.len(), rows[0].len());
        for (r, s) in rows.iter().enumerate() {
            for (c, ch) in s.chars().enumerate() {
                m.set(r, c, ch == '1');
            }
        }
        m
    }

    #[test]
    fn solves_small_system() {
        let a = from_rows(&["110", "011", "001"]);
        let x = a.solve(&BitMatrix::identity(3)).unwrap();
        assert_eq!(a.mul(&x), BitMatrix::identity(3));
    }

    #[test]
    fn detects_inconsistent_system() {
        let a = from_rows(&["11", "11"]);
        let b = from_rows(&["1", "0"]);
        assert!(a.solve(&b).is_none());
    }

    #[test]
    fn wide_rows_cross_word_boundary() {
        let mut m = BitMatrix::zeros(2, 130);
        m.set(0, 0, true);
        m.set(0, 129, true);
        m.flip(1, 64);
        assert_eq!(m.row_ones(0).collect::<Vec<_>>(), vec![0, 129]);
        assert_eq!(m.row_ones(1).collect::<Vec<_>>(), vec![64]);
        assert_eq!(m.transpose().transpose(), m);
    }

    proptest! {
        #[test]
        fn solution_satisfies_system(bits in proptest::collection::vec(any::<bool>(), 12 * 9), rhs in proptest::collection::vec(any::<bool>(), 12 * 3)) {
            let mut a = BitMatrix::zeros(12, 9);
            for (i, &v) in bits.iter().enumerate() {
                a.set(i / 9, i % 9, v);
            }
            // Build a right-hand side inside the column space.
            let mut x0 = BitMatrix::zeros(9, 3);
            for (i, &v) in rhs.iter().take(27).enumerate() {
                x0.set(i / 3, i % 3, v);
            }
            let b = a.mul(&x0);
            let x = a.solve(&b).expect("consistent by construction");
            prop_assert_eq!(a.mul(&x), b);
        }
    }
}
