use bitvec::prelude::*;

/// Open/closed assignment to the edges of a region, indexed by edge id.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    bits: BitVec<u64, Lsb0>,
}

impl Configuration {
    pub fn all_closed(num_edges: usize) -> Configuration {
        Configuration { bits: bitvec![u64, Lsb0; 0; num_edges] }
    }

    pub fn all_open(num_edges: usize) -> Configuration {
        Configuration { bits: bitvec![u64, Lsb0; 1; num_edges] }
    }

    /// Low `num_edges` bits of `mask`, bit `e` giving edge `e`.
    pub fn from_mask(mask: u64, num_edges: usize) -> Configuration {
        assert!(num_edges <= 64);
        let mut c = Configuration::all_closed(num_edges);
        c.set_mask(mask);
        c
    }

    pub fn from_bools(open: &[bool]) -> Configuration {
        Configuration { bits: open.iter().copied().collect() }
    }

    pub fn set_mask(&mut self, mask: u64) {
        let n = self.bits.len();
        assert!(n <= 64);
        if n > 0 {
            self.bits[..n].store_le::<u64>(mask & full_mask(n));
        }
    }

    /// Packs a configuration of at most 64 edges into a mask.
    pub fn to_mask(&self) -> u64 {
        let n = self.bits.len();
        assert!(n <= 64);
        if n == 0 {
            0
        } else {
            self.bits[..n].load_le::<u64>()
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn is_open(&self, e: u32) -> bool {
        debug_assert!((e as usize) < self.bits.len());
        (self.bits.as_raw_slice()[(e >> 6) as usize] >> (e & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, e: u32, open: bool) {
        debug_assert!((e as usize) < self.bits.len());
        let word = &mut self.bits.as_raw_mut_slice()[(e >> 6) as usize];
        let bit = 1u64 << (e & 63);
        if open {
            *word |= bit;
        } else {
            *word &= !bit;
        }
    }

    /// Number of open edges `|omega|`.
    pub fn count_open(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn open_edges(&self) -> impl Iterator<Item = u32> + '_ {
        self.bits.iter_ones().map(|e| e as u32)
    }

    pub fn complement(&self) -> Configuration {
        Configuration { bits: !self.bits.clone() }
    }

    pub fn fill(&mut self, open: bool) {
        self.bits.fill(open);
    }

    /// Pointwise order: every edge open here is open in `other`.
    pub fn le(&self, other: &Configuration) -> bool {
        self.bits.len() == other.bits.len()
            && self.bits.as_raw_slice().iter().zip(other.bits.as_raw_slice()).all(|(a, b)| a & !b == 0)
    }

    /// First edge open here but closed in `other`.
    pub fn first_excess(&self, other: &Configuration) -> Option<u32> {
        self.bits.iter_ones().find(|&e| !other.bits[e]).map(|e| e as u32)
    }
}

pub(crate) fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_round_trip_and_order() {
        let c = Configuration::from_mask(0b1011, 5);
        assert_eq!(c.to_mask(), 0b1011);
        assert_eq!(c.count_open(), 3);
        assert!(c.is_open(0) && !c.is_open(2));
        let d = c.complement();
        assert_eq!(d.to_mask(), 0b10100);
        assert!(Configuration::all_closed(5).le(&c));
        assert!(c.le(&Configuration::all_open(5)));
        assert!(!c.le(&d));
        assert_eq!(c.first_excess(&d), Some(0));
    }
}
