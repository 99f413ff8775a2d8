use std::fmt::Write as _;

use crate::{Error, Result};

/// A packed descriptor output. Bit `k` lives in byte `k / 8` at position
/// `k % 8`, least significant first; padding bits of the last byte are zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    bits: usize,
    bytes: Vec<u8>,
}

impl Signature {
    pub fn zeros(bits: usize) -> Self {
        Signature {
            bits,
            bytes: vec![0; bits.div_ceil(8)],
        }
    }

    pub fn from_bits(bits: impl IntoIterator<Item = bool>) -> Self {
        let mut bytes = Vec::new();
        let mut len = 0;
        for (k, on) in bits.into_iter().enumerate() {
            if k % 8 == 0 {
                bytes.push(0);
            }
            bytes[k / 8] |= u8::from(on) << (k % 8);
            len = k + 1;
        }
        Signature { bits: len, bytes }
    }

    pub fn len(&self) -> usize {
        self.bits
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn get(&self, k: usize) -> bool {
        assert!(k < self.bits);
        (self.bytes[k / 8] >> (k % 8)) & 1 == 1
    }

    pub fn set(&mut self, k: usize, on: bool) {
        assert!(k < self.bits);
        if on {
            self.bytes[k / 8] |= 1 << (k % 8);
        } else {
            self.bytes[k / 8] &= !(1 << (k % 8));
        }
    }

    /// Lowercase hex, byte 0 first: `2 * ceil(bits / 8)` characters.
    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(self.bytes.len() * 2);
        for b in &self.bytes {
            write!(s, "{b:02x}").unwrap();
        }
        s
    }

    pub fn from_hex(hex: &str, bits: usize) -> Result<Self> {
        let bad = || Error::Format(format!("`{hex}` is not a {bits}-bit hex signature"));
        if hex.len() != 2 * bits.div_ceil(8) {
            return Err(bad());
        }
        let bytes = (0..hex.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| bad()))
            .collect::<Result<Vec<u8>>>()?;
        let tail = bits % 8;
        if tail != 0 && bytes.last().is_some_and(|&b| b >> tail != 0) {
            return Err(bad());
        }
        Ok(Signature { bits, bytes })
    }
}

/// Hamming distance via 64-bit popcounts.
pub fn hamming(a: &Signature, b: &Signature) -> Result<u32> {
    if a.bits != b.bits {
        return Err(Error::Usage(format!(
            "cannot compare a {}-bit signature with a {}-bit one",
            a.bits, b.bits
        )));
    }
    Ok(hamming_bytes(&a.bytes, &b.bytes))
}

#[inline]
pub(crate) fn hamming_bytes(a: &[u8], b: &[u8]) -> u32 {
    let mut dist = 0;
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in ca.by_ref().zip(cb.by_ref()) {
        let x = u64::from_le_bytes(x.try_into().unwrap());
        let y = u64::from_le_bytes(y.try_into().unwrap());
        dist += (x ^ y).count_ones();
    }
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        dist += (x ^ y).count_ones();
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive(a: &Signature, b: &Signature) -> u32 {
        (0..a.len()).filter(|&k| a.get(k) != b.get(k)).count() as u32
    }

    #[test]
    fn trivial_distances() {
        let zero = Signature::zeros(256);
        let ones = Signature::from_bits(std::iter::repeat_n(true, 256));
        assert_eq!(hamming(&zero, &zero).unwrap(), 0);
        assert_eq!(hamming(&zero, &ones).unwrap(), 256);
        assert_eq!(ones.bytes().len(), 32);
    }

    #[test]
    fn three_positions() {
        let a = Signature::zeros(256);
        let mut b = Signature::zeros(256);
        for k in [3, 100, 255] {
            b.set(k, true);
        }
        assert_eq!(naive(&a, &b), 3);
        assert_eq!(hamming(&a, &b).unwrap(), 3);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(hamming(&Signature::zeros(8), &Signature::zeros(16)), Err(Error::Usage(_))));
    }

    #[test]
    fn packing_order_and_hex() {
        let s = Signature::from_bits([true, false, false, false, false, false, false, false, false, true]);
        assert_eq!(s.bytes(), &[0x01, 0x02]);
        assert_eq!(s.to_hex(), "0102");
        assert_eq!(Signature::from_hex("0102", 10).unwrap(), s);
        // padding bit 10 set
        assert!(Signature::from_hex("0106", 10).is_err());
        assert!(Signature::from_hex("01", 10).is_err());
    }

    proptest! {
        #[test]
        fn popcount_equals_naive(len in prop::sample::select(vec![8usize, 64, 256, 300]), seed in any::<u64>()) {
            let mut rng = crate::rng::Rng::new(seed);
            let a = Signature::from_bits((0..len).map(|_| rng.bernoulli(0.5)));
            let b = Signature::from_bits((0..len).map(|_| rng.bernoulli(0.5)));
            prop_assert_eq!(hamming(&a, &b).unwrap(), naive(&a, &b));
        }

        #[test]
        fn hex_round_trip(bits in proptest::collection::vec(any::<bool>(), 1..300)) {
            let s = Signature::from_bits(bits.iter().copied());
            prop_assert_eq!(Signature::from_hex(&s.to_hex(), bits.len()).unwrap(), s);
        }
    }
}
