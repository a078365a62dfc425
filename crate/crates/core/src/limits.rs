//! Size caps shared by every exhaustive loop in the crate.

use crate::error::{Error, Result};

/// Caps on exhaustive enumeration. Every search that could blow up checks
/// one of these before doing any work and fails with [`Error::SizeGuard`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Limits {
    /// Number of upsets a single `upsets` call may produce.
    pub max_upsets: u128,
    /// Carrier size of a table-backed lattice or algebra.
    pub max_algebra: usize,
    /// Valuations (frame side) or assignments (algebra side) per validity check.
    pub max_valuations: u128,
    /// Candidate maps scanned by morphism / image searches.
    pub max_maps: u128,
    /// Largest `n` accepted by poset enumeration.
    pub max_enum_n: usize,
    /// States of a CIN frame (neighbourhoods are stored as 64-bit families over subsets).
    pub max_cin_states: usize,
    /// Labelled structures examined while building a universe.
    pub max_universe: u128,
    /// Subalgebra scan: largest algebra whose subsets are enumerated.
    pub max_subalgebra_scan: usize,
    /// Largest algebra for which lattice laws are re-verified on construction.
    pub eager_check: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_upsets: 1 << 20,
            max_algebra: 4096,
            max_valuations: 1 << 22,
            max_maps: 1 << 24,
            max_enum_n: 5,
            max_cin_states: 6,
            max_universe: 1 << 22,
            max_subalgebra_scan: 8,
            eager_check: 256,
        }
    }
}

impl Limits {
    /// Shrinks the enumeration caps to respect a soft memory budget in bytes.
    pub fn with_memory_budget(mut self, bytes: u64) -> Self {
        // roughly 256 bytes per stored structure, 16 per upset mask
        let structures = (bytes / 256).max(1) as u128;
        let masks = (bytes / 16).max(1) as u128;
        self.max_universe = self.max_universe.min(structures);
        self.max_upsets = self.max_upsets.min(masks);
        self
    }

    pub(crate) fn check(&self, what: &'static str, required: u128, cap: u128) -> Result<()> {
        if required > cap {
            Err(Error::guard(what, required, cap))
        } else {
            Ok(())
        }
    }
}

/// Parses a memory size such as `512M`, `2G`, `65536` or `64k`.
pub fn parse_memory(text: &str) -> Option<u64> {
    let t = text.trim();
    let (digits, mult) = match t.chars().last()? {
        'k' | 'K' => (&t[..t.len() - 1], 1u64 << 10),
        'm' | 'M' => (&t[..t.len() - 1], 1 << 20),
        'g' | 'G' => (&t[..t.len() - 1], 1 << 30),
        _ => (t, 1),
    };
    digits.trim().parse::<u64>().ok()?.checked_mul(mult)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn memory_suffixes() {
        assert_eq!(parse_memory("64k"), Some(65536));
        assert_eq!(parse_memory("2G"), Some(2 << 30));
        assert_eq!(parse_memory("100"), Some(100));
        assert_eq!(parse_memory("x"), None);
    }

    #[test]
    fn budget_only_shrinks() {
        let l = Limits::default().with_memory_budget(1 << 40);
        assert_eq!(l, Limits::default());
        let small = Limits::default().with_memory_budget(1 << 20);
        assert_eq!(small.max_universe, 4096);
    }
}
