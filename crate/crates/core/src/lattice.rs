//! Finite distributive lattices, Heyting algebras of upsets, prime filters,
//! and the Birkhoff units `η` and `θ`.

use crate::bits::{self, BitSet, Mask};
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::order::{Poset, PosetMap, MAX_POSET};

/// Lattices at or above this size find prime filters through join-irreducibles
/// instead of testing every principal filter literally.
pub const JOIN_IRREDUCIBLE_THRESHOLD: usize = 256;

/// A finite distributive lattice given by explicit meet and join tables.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FinDL {
    size: usize,
    meet: Vec<u16>,
    join: Vec<u16>,
    top: usize,
    bottom: usize,
}

impl FinDL {
    /// Builds a lattice from tables, validating the lattice laws and
    /// distributivity when `size <= limits.eager_check`.
    pub fn from_tables(
        size: usize,
        meet: Vec<u16>,
        join: Vec<u16>,
        top: usize,
        bottom: usize,
        limits: &Limits,
    ) -> Result<FinDL> {
        limits.check("lattice size", size as u128, limits.max_algebra as u128)?;
        if size == 0 || meet.len() != size * size || join.len() != size * size {
            return Err(Error::InvalidAlgebra("table shape does not match size".into()));
        }
        if top >= size || bottom >= size {
            return Err(Error::InvalidAlgebra("top or bottom out of range".into()));
        }
        if let Some(&bad) = meet.iter().chain(&join).find(|&&v| v as usize >= size) {
            return Err(Error::InvalidAlgebra(format!("table entry {bad} out of range")));
        }
        let dl = FinDL {
            size,
            meet,
            join,
            top,
            bottom,
        };
        if size <= limits.eager_check {
            dl.check_laws()?;
        }
        Ok(dl)
    }

    /// The sublattice of a powerset given by `sets`, which must be closed
    /// under `∩` and `∪`. Elements are indexed in ascending mask order.
    pub fn from_sets(sets: &[Mask], limits: &Limits) -> Result<FinDL> {
        let mut sorted = sets.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let n = sorted.len();
        limits.check("lattice size", n as u128, limits.max_algebra as u128)?;
        let index = |m: Mask| -> Result<u16> {
            sorted
                .binary_search(&m)
                .map(|i| i as u16)
                .map_err(|_| Error::InvalidAlgebra(format!("set family not closed at {m:#b}")))
        };
        let mut meet = vec![0; n * n];
        let mut join = vec![0; n * n];
        for (i, &a) in sorted.iter().enumerate() {
            for (j, &b) in sorted.iter().enumerate() {
                meet[i * n + j] = index(a & b)?;
                join[i * n + j] = index(a | b)?;
            }
        }
        let bottom = sorted.iter().fold(Mask::MAX, |acc, &m| acc & m);
        let top = sorted.iter().fold(0, |acc, &m| acc | m);
        FinDL::from_tables(
            n,
            meet,
            join,
            index(top)? as usize,
            index(bottom)? as usize,
            limits,
        )
    }

    fn check_laws(&self) -> Result<()> {
        let n = self.size;
        let fail = |what: &str, w: &[usize]| Err(Error::InvalidAlgebra(format!("{what} fails at {w:?}")));
        for a in 0..n {
            if self.meet(a, a) != a || self.join(a, a) != a {
                return fail("idempotence", &[a]);
            }
            if self.meet(a, self.top) != a || self.join(a, self.bottom) != a {
                return fail("bounds", &[a]);
            }
            for b in 0..n {
                if self.meet(a, b) != self.meet(b, a) || self.join(a, b) != self.join(b, a) {
                    return fail("commutativity", &[a, b]);
                }
                if self.meet(a, self.join(a, b)) != a || self.join(a, self.meet(a, b)) != a {
                    return fail("absorption", &[a, b]);
                }
                for c in 0..n {
                    if self.meet(a, self.meet(b, c)) != self.meet(self.meet(a, b), c)
                        || self.join(a, self.join(b, c)) != self.join(self.join(a, b), c)
                    {
                        return fail("associativity", &[a, b, c]);
                    }
                    if self.meet(a, self.join(b, c))
                        != self.join(self.meet(a, b), self.meet(a, c))
                    {
                        return fail("distributivity", &[a, b, c]);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn bottom(&self) -> usize {
        self.bottom
    }

    #[inline]
    pub fn meet(&self, a: usize, b: usize) -> usize {
        self.meet[a * self.size + b] as usize
    }

    #[inline]
    pub fn join(&self, a: usize, b: usize) -> usize {
        self.join[a * self.size + b] as usize
    }

    #[inline]
    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.meet(a, b) == a
    }

    /// `↑a` as a subset of the carrier.
    pub fn principal_filter(&self, a: usize) -> BitSet {
        BitSet::from_indices(self.size, (0..self.size).filter(|&b| self.leq(a, b)))
    }

    /// Literal filter test: contains `⊤`, up-closed, meet-closed.
    pub fn is_filter(&self, s: &BitSet) -> bool {
        s.contains(self.top)
            && s.iter().all(|a| {
                (0..self.size).all(|b| !self.leq(a, b) || s.contains(b))
                    && s.iter().all(|b| s.contains(self.meet(a, b)))
            })
    }

    /// Literal prime filter test: a proper filter with `a ∨ b ∈ s ⇒ a ∈ s or b ∈ s`.
    pub fn is_prime_filter(&self, s: &BitSet) -> bool {
        !s.contains(self.bottom)
            && self.is_filter(s)
            && (0..self.size).all(|a| {
                s.contains(a)
                    || (0..self.size).all(|b| s.contains(b) || !s.contains(self.join(a, b)))
            })
    }

    /// `j ≠ ⊥` with exactly one lower cover.
    pub fn is_join_irreducible(&self, j: usize) -> bool {
        if j == self.bottom {
            return false;
        }
        let below: Vec<usize> = (0..self.size)
            .filter(|&a| a != j && self.leq(a, j))
            .collect();
        let maximal = below
            .iter()
            .filter(|&&a| !below.iter().any(|&b| b != a && self.leq(a, b)))
            .count();
        maximal == 1
    }
}

/// A finite Heyting algebra: a distributive lattice with an implication table.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FinHA {
    dl: FinDL,
    imp: Vec<u16>,
}

impl FinHA {
    /// Computes `a → b` as the largest `c` with `a ∧ c ≤ b`.
    pub fn from_lattice(dl: FinDL) -> FinHA {
        let n = dl.size();
        let mut imp = vec![0u16; n * n];
        for a in 0..n {
            for b in 0..n {
                let c = (0..n)
                    .filter(|&c| dl.leq(dl.meet(a, c), b))
                    .fold(dl.bottom(), |acc, c| dl.join(acc, c));
                imp[a * n + b] = c as u16;
            }
        }
        FinHA { dl, imp }
    }

    /// Accepts a given implication table after checking residuation
    /// (when small enough for the eager check).
    pub fn with_implication(dl: FinDL, imp: Vec<u16>, limits: &Limits) -> Result<FinHA> {
        let n = dl.size();
        if imp.len() != n * n || imp.iter().any(|&v| v as usize >= n) {
            return Err(Error::InvalidAlgebra("implication table has wrong shape".into()));
        }
        let ha = FinHA { dl, imp };
        if n <= limits.eager_check {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if ha.leq(ha.meet(a, c), b) != ha.leq(c, ha.imp(a, b)) {
                            return Err(Error::InvalidAlgebra(format!(
                                "residuation fails at ({a}, {b}, {c})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(ha)
    }

    pub fn lattice(&self) -> &FinDL {
        &self.dl
    }

    pub fn size(&self) -> usize {
        self.dl.size
    }

    pub fn top(&self) -> usize {
        self.dl.top
    }

    pub fn bottom(&self) -> usize {
        self.dl.bottom
    }

    #[inline]
    pub fn meet(&self, a: usize, b: usize) -> usize {
        self.dl.meet(a, b)
    }

    #[inline]
    pub fn join(&self, a: usize, b: usize) -> usize {
        self.dl.join(a, b)
    }

    #[inline]
    pub fn imp(&self, a: usize, b: usize) -> usize {
        self.imp[a * self.dl.size + b] as usize
    }

    #[inline]
    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.dl.leq(a, b)
    }
}

/// The Heyting algebra of upsets of a poset, remembering which upset each
/// element stands for.
#[derive(Clone, Debug)]
pub struct UpsetAlgebra {
    pub poset: Poset,
    pub upsets: Vec<Mask>,
    pub ha: FinHA,
}

impl UpsetAlgebra {
    pub fn index(&self, m: Mask) -> Option<usize> {
        self.upsets.binary_search(&m).ok()
    }
}

/// Intersections as meets, unions as joins, and
/// `a → b = {x | ∀y ≥ x. y ∈ a ⇒ y ∈ b}`.
pub fn up_algebra(p: &Poset, limits: &Limits) -> Result<UpsetAlgebra> {
    let upsets = p.upsets(limits)?;
    let dl = FinDL::from_sets(&upsets, limits)?;
    let n = upsets.len();
    let mut imp = vec![0u16; n * n];
    for (i, &a) in upsets.iter().enumerate() {
        for (j, &b) in upsets.iter().enumerate() {
            let c = p.implication(a, b);
            imp[i * n + j] = upsets.binary_search(&c).expect("implication is an upset") as u16;
        }
    }
    let ha = FinHA::with_implication(dl, imp, limits)?;
    Ok(UpsetAlgebra {
        poset: p.clone(),
        upsets,
        ha,
    })
}

/// Prime filters of a finite lattice ordered by inclusion, together with
/// `θ(a) = {p | a ∈ p}` for every element.
#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Prime filters, each the principal filter of the join-irreducible
    /// `generators[i]`; sorted by generator index.
    pub filters: Vec<BitSet>,
    pub generators: Vec<usize>,
    pub poset: Poset,
    theta: Vec<Mask>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    /// `θ(a)` as a set of prime-filter indices.
    #[inline]
    pub fn theta(&self, a: usize) -> Mask {
        self.theta[a]
    }

    pub fn theta_table(&self) -> &[Mask] {
        &self.theta
    }

    pub fn all(&self) -> Mask {
        bits::full(self.len())
    }

    pub fn position(&self, filter: &BitSet) -> Option<usize> {
        self.filters.iter().position(|f| f == filter)
    }

    /// Element `a` with `θ(a) = d`, if any.
    pub fn theta_preimage(&self, d: Mask) -> Option<usize> {
        self.theta.iter().position(|&t| t == d)
    }
}

/// All prime filters of `dl`, ordered by inclusion.
pub fn prime_filters(dl: &FinDL, limits: &Limits) -> Result<Spectrum> {
    limits.check("prime filter scan", dl.size() as u128, limits.max_algebra as u128)?;
    let generators: Vec<usize> = if dl.size() < JOIN_IRREDUCIBLE_THRESHOLD {
        (0..dl.size())
            .filter(|&a| dl.is_prime_filter(&dl.principal_filter(a)))
            .collect()
    } else {
        (0..dl.size()).filter(|&a| dl.is_join_irreducible(a)).collect()
    };
    spectrum_from_generators(dl, generators)
}

/// Join-irreducible route only; used to cross-check [`prime_filters`].
pub fn prime_filters_via_join_irreducibles(dl: &FinDL) -> Result<Spectrum> {
    let generators = (0..dl.size()).filter(|&a| dl.is_join_irreducible(a)).collect();
    spectrum_from_generators(dl, generators)
}

fn spectrum_from_generators(dl: &FinDL, generators: Vec<usize>) -> Result<Spectrum> {
    if generators.len() > MAX_POSET {
        return Err(Error::guard(
            "prime filters",
            generators.len() as u128,
            MAX_POSET as u128,
        ));
    }
    let filters: Vec<BitSet> = generators.iter().map(|&j| dl.principal_filter(j)).collect();
    let k = filters.len();
    // ↑j ⊆ ↑j' iff j' ≤ j
    let poset = Poset::from_leq(k, |i, j| dl.leq(generators[j], generators[i]))?;
    let theta = (0..dl.size())
        .map(|a| {
            (0..k)
                .filter(|&i| filters[i].contains(a))
                .fold(0, |acc, i| acc | bits::bit(i))
        })
        .collect();
    Ok(Spectrum {
        filters,
        generators,
        poset,
        theta,
    })
}

/// Exhaustive subset scan for prime filters (tiny lattices only); the
/// result is sorted by each filter's least element.
pub fn prime_filters_by_scan(dl: &FinDL) -> Vec<BitSet> {
    let n = dl.size();
    assert!(n <= 20, "subset scan limited to 20 elements");
    let mut out: Vec<(usize, BitSet)> = Vec::new();
    for m in 0u64..(1 << n) {
        let s = BitSet::from_indices(n, bits::members(m));
        if dl.is_prime_filter(&s) {
            let least = s.iter().find(|&a| s.iter().all(|b| dl.leq(a, b))).unwrap();
            out.push((least, s));
        }
    }
    out.sort();
    out.into_iter().map(|(_, s)| s).collect()
}

/// `η(x) = {a ∈ Up(P) | x ∈ a}` as a map into the spectrum of `up_algebra(P)`.
pub fn eta(ua: &UpsetAlgebra, spectrum: &Spectrum) -> Result<PosetMap> {
    let n = ua.poset.size();
    let graph = (0..n)
        .map(|x| {
            let filter = BitSet::from_indices(
                ua.upsets.len(),
                (0..ua.upsets.len()).filter(|&i| bits::has(ua.upsets[i], x)),
            );
            spectrum
                .position(&filter)
                .ok_or_else(|| Error::InvalidAlgebra(format!("eta({x}) is not a prime filter")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PosetMap(graph))
}

/// Closed: `D = ⋂{θ(a) | D ⊆ θ(a)}`.
pub fn is_closed_upset(spectrum: &Spectrum, d: Mask) -> bool {
    let meet = spectrum
        .theta_table()
        .iter()
        .filter(|&&t| bits::subset(d, t))
        .fold(spectrum.all(), |acc, &t| acc & t);
    meet == d
}

/// Open: `D = ⋃{θ(a) | θ(a) ⊆ D}`.
pub fn is_open_upset(spectrum: &Spectrum, d: Mask) -> bool {
    let join = spectrum
        .theta_table()
        .iter()
        .filter(|&&t| bits::subset(t, d))
        .fold(0, |acc, &t| acc | t);
    join == d
}
