//! Row-major packed bit matrices.
//!
//! Each row is stored as `ceil(cols / 64)` little-endian `u64` words: column
//! `c` lives in word `c / 64` at bit `c % 64`. Bits past `cols` in the last
//! word of a row are always zero, so whole-word popcounts are exact.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    data: Vec<u64>,
}

pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = words_for(cols);
        BitMatrix {
            rows,
            cols,
            words_per_row,
            data: vec![0; rows * words_per_row],
        }
    }

    /// Assembles a matrix from already packed rows. Every row must have
    /// `ceil(cols / 64)` words with clean padding.
    pub(crate) fn from_rows(rows: Vec<Vec<u64>>, cols: usize) -> Self {
        let words_per_row = words_for(cols);
        let n = rows.len();
        let mut data = Vec::with_capacity(n * words_per_row);
        for row in rows {
            debug_assert_eq!(row.len(), words_per_row);
            data.extend_from_slice(&row);
        }
        let m = BitMatrix {
            rows: n,
            cols,
            words_per_row,
            data,
        };
        debug_assert!(m.padding_is_clean());
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u64] {
        let start = r * self.words_per_row;
        &self.data[start..start + self.words_per_row]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        (self.row(r)[c / 64] >> (c % 64)) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols);
        let w = &mut self.data[r * self.words_per_row + c / 64];
        let mask = 1u64 << (c % 64);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    /// Number of set bits in row `r`.
    pub fn row_count_ones(&self, r: usize) -> usize {
        self.row(r).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Unpacks one row into a vector of booleans.
    pub fn row_bits(&self, r: usize) -> Vec<bool> {
        (0..self.cols).map(|c| self.get(r, c)).collect()
    }

    fn padding_is_clean(&self) -> bool {
        let tail = self.cols % 64;
        if tail == 0 || self.words_per_row == 0 {
            return true;
        }
        let mask = !0u64 << tail;
        (0..self.rows).all(|r| self.row(r)[self.words_per_row - 1] & mask == 0)
    }
}

/// Calls `f(index)` for each set bit of a packed word slice, in ascending order.
#[inline]
pub fn for_each_set_bit(words: &[u64], mut f: impl FnMut(usize)) {
    for (wi, &w) in words.iter().enumerate() {
        let mut w = w;
        while w != 0 {
            let tz = w.trailing_zeros() as usize;
            f(wi * 64 + tz);
            w &= w - 1;
        }
    }
}
