//! Bit-level set representations.
//!
//! States of a frame are dense indices below 64, so subsets of states are
//! plain `u64` masks. Subsets of algebra carriers can be larger and use
//! [`BitSet`].

use std::fmt;

/// Subset of frame states as a bitmask.
pub type Mask = u64;

#[inline]
pub fn full(n: usize) -> Mask {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

#[inline]
pub fn bit(i: usize) -> Mask {
    1u64 << i
}

#[inline]
pub fn has(m: Mask, i: usize) -> bool {
    m >> i & 1 == 1
}

#[inline]
pub fn subset(a: Mask, b: Mask) -> bool {
    a & !b == 0
}

/// Indices of set bits in ascending order.
pub fn members(m: Mask) -> impl Iterator<Item = usize> {
    let mut rest = m;
    std::iter::from_fn(move || {
        if rest == 0 {
            None
        } else {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(i)
        }
    })
}

pub fn from_indices<I: IntoIterator<Item = usize>>(it: I) -> Mask {
    it.into_iter().fold(0, |m, i| m | bit(i))
}

/// Image of a mask under an index map.
pub fn image(m: Mask, f: &[usize]) -> Mask {
    members(m).fold(0, |acc, i| acc | bit(f[i]))
}

/// Preimage of a mask under an index map.
pub fn preimage(m: Mask, f: &[usize]) -> Mask {
    f.iter()
        .enumerate()
        .filter(|(_, &y)| has(m, y))
        .fold(0, |acc, (x, _)| acc | bit(x))
}

/// Fixed-capacity bitset over `0..len`, ordered lexicographically on words.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitSet {
    words: Vec<u64>,
    len: usize,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn full(len: usize) -> Self {
        let mut s = BitSet::new(len);
        for i in 0..len {
            s.insert(i);
        }
        s
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(len: usize, it: I) -> Self {
        let mut s = BitSet::new(len);
        for i in it {
            s.insert(i);
        }
        s
    }

    pub fn capacity(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        if i < self.len {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_subset(&self, other: &BitSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            members(w).map(move |b| wi * 64 + b)
        })
    }

    pub fn intersect(&self, other: &BitSet) -> BitSet {
        BitSet {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
            len: self.len,
        }
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_helpers() {
        assert_eq!(full(3), 0b111);
        assert_eq!(full(64), u64::MAX);
        assert_eq!(members(0b1010).collect::<Vec<_>>(), vec![1, 3]);
        assert!(subset(0b010, 0b110));
        assert!(!subset(0b011, 0b110));
        // f = [1, 1, 0]: preimage of {1} is {0, 1}
        assert_eq!(preimage(0b10, &[1, 1, 0]), 0b011);
        assert_eq!(image(0b101, &[1, 1, 0]), 0b011);
    }

    #[test]
    fn bitset_basics() {
        let mut s = BitSet::new(130);
        s.insert(0);
        s.insert(129);
        assert!(s.contains(129));
        assert!(!s.contains(128));
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 129]);
        let t = BitSet::from_indices(130, [0, 5]);
        assert_eq!(s.intersect(&t).iter().collect::<Vec<_>>(), vec![0]);
        assert!(!t.is_subset(&s));
        s.remove(129);
        assert_eq!(s.count(), 1);
    }
}
