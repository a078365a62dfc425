//! Finite posets on dense indices, their upsets, monotone maps and p-morphisms.

use std::collections::BTreeMap;

use crate::bits::{self, Mask};
use crate::error::{Error, Result};
use crate::limits::Limits;

pub const MAX_POSET: usize = 64;

/// A finite partial order on `0..size`, stored as principal up- and downsets.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Poset {
    up: Vec<Mask>,
    down: Vec<Mask>,
}

impl Poset {
    /// Builds the reflexive-transitive closure of `pairs` (read as `a ≤ b`)
    /// and rejects it if antisymmetry fails.
    pub fn new(size: usize, pairs: &[(usize, usize)]) -> Result<Poset> {
        if size > MAX_POSET {
            return Err(Error::guard("poset size", size as u128, MAX_POSET as u128));
        }
        let mut up: Vec<Mask> = (0..size).map(bits::bit).collect();
        for &(a, b) in pairs {
            for i in [a, b] {
                if i >= size {
                    return Err(Error::IndexOutOfRange { index: i, size });
                }
            }
            up[a] |= bits::bit(b);
        }
        // Warshall on rows
        for k in 0..size {
            for i in 0..size {
                if bits::has(up[i], k) {
                    up[i] |= up[k];
                }
            }
        }
        for (i, &row) in up.iter().enumerate() {
            for j in bits::members(row) {
                if j != i && bits::has(up[j], i) {
                    return Err(Error::Cycle(i.min(j), i.max(j)));
                }
            }
        }
        Ok(Poset::from_up(up))
    }

    fn from_up(up: Vec<Mask>) -> Poset {
        let n = up.len();
        let mut down = vec![0; n];
        for (i, &row) in up.iter().enumerate() {
            for j in bits::members(row) {
                down[j] |= bits::bit(i);
            }
        }
        Poset { up, down }
    }

    /// Builds a poset from an order predicate that is already reflexive,
    /// transitive and antisymmetric.
    pub fn from_leq(size: usize, leq: impl Fn(usize, usize) -> bool) -> Result<Poset> {
        let mut pairs = Vec::new();
        for i in 0..size {
            for j in 0..size {
                if leq(i, j) {
                    pairs.push((i, j));
                }
            }
        }
        let p = Poset::new(size, &pairs)?;
        for i in 0..size {
            for j in 0..size {
                if p.leq(i, j) != leq(i, j) {
                    return Err(Error::InvalidAlgebra(format!(
                        "order predicate is not transitive at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(p)
    }

    pub fn discrete(n: usize) -> Poset {
        Poset::from_up((0..n).map(bits::bit).collect())
    }

    pub fn chain(n: usize) -> Poset {
        Poset::from_up((0..n).map(|i| bits::full(n) & !bits::full(i)).collect())
    }

    pub fn size(&self) -> usize {
        self.up.len()
    }

    pub fn all(&self) -> Mask {
        bits::full(self.size())
    }

    #[inline]
    pub fn leq(&self, x: usize, y: usize) -> bool {
        bits::has(self.up[x], y)
    }

    /// `↑x`
    #[inline]
    pub fn up(&self, x: usize) -> Mask {
        self.up[x]
    }

    /// `↓x`
    #[inline]
    pub fn down(&self, x: usize) -> Mask {
        self.down[x]
    }

    pub fn is_upset(&self, m: Mask) -> bool {
        bits::members(m).all(|x| bits::subset(self.up[x], m))
    }

    pub fn is_downset(&self, m: Mask) -> bool {
        bits::members(m).all(|x| bits::subset(self.down[x], m))
    }

    pub fn up_closure(&self, m: Mask) -> Mask {
        bits::members(m).fold(0, |acc, x| acc | self.up[x])
    }

    pub fn down_closure(&self, m: Mask) -> Mask {
        bits::members(m).fold(0, |acc, x| acc | self.down[x])
    }

    /// Heyting implication on upsets: `{x | ∀y ≥ x. y ∈ a ⇒ y ∈ b}`.
    pub fn implication(&self, a: Mask, b: Mask) -> Mask {
        (0..self.size())
            .filter(|&x| self.up[x] & a & !b == 0)
            .fold(0, |acc, x| acc | bits::bit(x))
    }

    /// Strict order pairs `x < y`; a valid generator list for [`Poset::new`].
    pub fn strict_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.size())
            .flat_map(|x| {
                bits::members(self.up[x] & !bits::bit(x)).map(move |y| (x, y))
            })
            .collect()
    }

    /// Covering pairs `x ⋖ y` (Hasse diagram edges).
    pub fn covers(&self) -> Vec<(usize, usize)> {
        self.strict_pairs()
            .into_iter()
            .filter(|&(x, y)| {
                let between = self.up[x] & self.down[y] & !bits::bit(x) & !bits::bit(y);
                between == 0
            })
            .collect()
    }

    /// Order dual.
    pub fn dual(&self) -> Poset {
        Poset {
            up: self.down.clone(),
            down: self.up.clone(),
        }
    }

    /// Product order on `a × b`, element `(i, j)` at index `i * |b| + j`.
    pub fn product(a: &Poset, b: &Poset) -> Result<Poset> {
        let (n, m) = (a.size(), b.size());
        if n * m > MAX_POSET {
            return Err(Error::guard("product poset", (n * m) as u128, MAX_POSET as u128));
        }
        let up = (0..n * m)
            .map(|k| {
                let (i, j) = (k / m, k % m);
                let mut row = 0;
                for i2 in bits::members(a.up[i]) {
                    for j2 in bits::members(b.up[j]) {
                        row |= bits::bit(i2 * m + j2);
                    }
                }
                row
            })
            .collect();
        Ok(Poset::from_up(up))
    }

    /// Restriction to `keep`, renumbered in ascending order.
    pub fn induced(&self, keep: Mask) -> (Poset, Vec<usize>) {
        let inclusion: Vec<usize> = bits::members(keep).collect();
        let up = inclusion
            .iter()
            .map(|&x| {
                inclusion
                    .iter()
                    .enumerate()
                    .filter(|(_, &y)| self.leq(x, y))
                    .fold(0, |acc, (j, _)| acc | bits::bit(j))
            })
            .collect();
        (Poset::from_up(up), inclusion)
    }

    /// Relabels along `perm`, where new element `i` is old element `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Poset {
        let mut inverse = vec![0; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        let up = perm
            .iter()
            .map(|&old| bits::image(self.up[old], &inverse))
            .collect();
        Poset::from_up(up)
    }

    /// All upsets in ascending mask order, including `∅` and the carrier.
    pub fn upsets(&self, limits: &Limits) -> Result<Vec<Mask>> {
        let mut out = Vec::new();
        self.upsets_rec(0, 0, 0, limits.max_upsets, &mut out)?;
        out.sort_unstable();
        Ok(out)
    }

    fn upsets_rec(
        &self,
        i: usize,
        inside: Mask,
        outside: Mask,
        cap: u128,
        out: &mut Vec<Mask>,
    ) -> Result<()> {
        if i == self.size() {
            if out.len() as u128 >= cap {
                return Err(Error::guard("upsets", out.len() as u128 + 1, cap));
            }
            out.push(inside);
            return Ok(());
        }
        if bits::has(inside | outside, i) {
            return self.upsets_rec(i + 1, inside, outside, cap, out);
        }
        self.upsets_rec(i + 1, inside, outside | self.down[i], cap, out)?;
        self.upsets_rec(i + 1, inside | self.up[i], outside, cap, out)
    }

    /// Canonical code: the minimal row-major `≤`-matrix over all relabellings.
    pub fn canonical_code(&self) -> u64 {
        let n = self.size();
        assert!(n <= 8, "canonical code needs at most 8 elements");
        let mut best = u64::MAX;
        for perm in permutations(n) {
            let mut code = 0u64;
            for i in 0..n {
                for j in 0..n {
                    if self.leq(perm[i], perm[j]) {
                        code |= 1 << (i * n + j);
                    }
                }
            }
            best = best.min(code);
        }
        best
    }
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..n).collect();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

/// A total function between poset carriers, given by its graph.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct PosetMap(pub Vec<usize>);

impl PosetMap {
    pub fn identity(n: usize) -> PosetMap {
        PosetMap((0..n).collect())
    }

    pub fn constant(n: usize, value: usize) -> PosetMap {
        PosetMap(vec![value; n])
    }

    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.0[x]
    }

    pub fn check_total(&self, dom: &Poset, cod: &Poset) -> Result<()> {
        if self.0.len() != dom.size() {
            return Err(Error::input(
                "map",
                format!("map has {} entries, domain has {}", self.0.len(), dom.size()),
            ));
        }
        match self.0.iter().find(|&&y| y >= cod.size()) {
            Some(&y) => Err(Error::IndexOutOfRange {
                index: y,
                size: cod.size(),
            }),
            None => Ok(()),
        }
    }

    pub fn is_monotone(&self, dom: &Poset, cod: &Poset) -> bool {
        (0..dom.size()).all(|x| {
            bits::members(dom.up(x)).all(|y| cod.leq(self.0[x], self.0[y]))
        })
    }

    /// Back condition for `≤`: `f(x) ≤ z'` implies some `z ≥ x` with `f(z) = z'`.
    pub fn has_back_condition(&self, dom: &Poset, cod: &Poset) -> bool {
        (0..dom.size()).all(|x| bits::image(dom.up(x), &self.0) == cod.up(self.0[x]))
    }

    /// Monotone plus back condition for `≤`.
    pub fn is_p_morphism(&self, dom: &Poset, cod: &Poset) -> bool {
        self.check_total(dom, cod).is_ok()
            && self.is_monotone(dom, cod)
            && self.has_back_condition(dom, cod)
    }

    /// Order embedding: `x ≤ y` iff `f(x) ≤ f(y)`.
    pub fn is_embedding(&self, dom: &Poset, cod: &Poset) -> bool {
        (0..dom.size()).all(|x| {
            (0..dom.size()).all(|y| dom.leq(x, y) == cod.leq(self.0[x], self.0[y]))
        })
    }

    pub fn is_surjective(&self, cod_size: usize) -> bool {
        bits::from_indices(self.0.iter().copied()) == bits::full(cod_size)
    }

    /// `g ∘ self`
    pub fn then(&self, g: &PosetMap) -> PosetMap {
        PosetMap(self.0.iter().map(|&y| g.0[y]).collect())
    }

    /// `f⁻¹[m]`
    pub fn preimage(&self, m: Mask) -> Mask {
        bits::preimage(m, &self.0)
    }

    /// `f[m]`
    pub fn image(&self, m: Mask) -> Mask {
        bits::image(m, &self.0)
    }

    /// Every map `0..n → 0..m` in lexicographic order.
    pub fn all_maps(n: usize, m: usize) -> impl Iterator<Item = PosetMap> {
        let total = if m == 0 { usize::from(n == 0) } else { m.pow(n as u32) };
        (0..total).map(move |mut k| {
            let mut g = vec![0; n];
            for slot in g.iter_mut().rev() {
                *slot = k % m;
                k /= m;
            }
            PosetMap(g)
        })
    }
}

/// Coproduct (disjoint union) with its injections.
pub fn coproduct(parts: &[Poset]) -> Result<(Poset, Vec<PosetMap>)> {
    if parts.is_empty() {
        return Err(Error::input("parts", "coproduct of an empty list"));
    }
    let total: usize = parts.iter().map(Poset::size).sum();
    if total > MAX_POSET {
        return Err(Error::guard("coproduct size", total as u128, MAX_POSET as u128));
    }
    let mut up = Vec::with_capacity(total);
    let mut injections = Vec::with_capacity(parts.len());
    let mut offset = 0;
    for p in parts {
        up.extend((0..p.size()).map(|x| p.up(x) << offset));
        injections.push(PosetMap((offset..offset + p.size()).collect()));
        offset += p.size();
    }
    Ok((Poset::from_up(up), injections))
}

/// One poset per isomorphism class on `n` points, sorted by canonical code.
pub fn enumerate_posets(n: usize, limits: &Limits) -> Result<Vec<Poset>> {
    limits.check("poset enumeration n", n as u128, limits.max_enum_n.min(8) as u128)?;
    // every class has a natural labelling (x ≤ y implies x ≤ y as integers)
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let mut classes: BTreeMap<u64, Poset> = BTreeMap::new();
    for choice in 0u64..(1 << pairs.len()) {
        let mut up: Vec<Mask> = (0..n).map(bits::bit).collect();
        for (k, &(i, j)) in pairs.iter().enumerate() {
            if bits::has(choice, k) {
                up[i] |= bits::bit(j);
            }
        }
        let transitive = (0..n).all(|i| {
            bits::members(up[i]).all(|j| bits::subset(up[j], up[i]))
        });
        if !transitive {
            continue;
        }
        let p = Poset::from_up(up);
        classes.entry(p.canonical_code()).or_insert(p);
    }
    Ok(classes.into_keys().map(|code| from_code(n, code)).collect())
}

fn from_code(n: usize, code: u64) -> Poset {
    let up = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| code >> (i * n + j) & 1 == 1)
                .fold(0, |acc, j| acc | bits::bit(j))
        })
        .collect();
    Poset::from_up(up)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lim() -> Limits {
        Limits::default()
    }

    #[test]
    fn validate_examples() {
        let one = Poset::new(1, &[]).unwrap();
        assert_eq!(one.size(), 1);
        let c2 = Poset::new(2, &[(0, 1)]).unwrap();
        assert!(c2.leq(0, 1) && !c2.leq(1, 0) && c2.leq(1, 1));
        assert_eq!(Poset::new(2, &[(0, 1), (1, 0)]), Err(Error::Cycle(0, 1)));
        assert!(matches!(
            Poset::new(2, &[(0, 2)]),
            Err(Error::IndexOutOfRange { index: 2, .. })
        ));
    }

    #[test]
    fn transitive_closure_is_applied() {
        let p = Poset::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(p.leq(0, 2));
        assert_eq!(p, Poset::chain(3));
        assert_eq!(p.covers(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn upset_examples() {
        let c2 = Poset::chain(2);
        assert_eq!(c2.upsets(&lim()).unwrap(), vec![0b00, 0b10, 0b11]);
        assert_eq!(Poset::discrete(2).upsets(&lim()).unwrap().len(), 4);
        let v = Poset::new(3, &[(0, 1), (0, 2)]).unwrap();
        assert_eq!(
            v.upsets(&lim()).unwrap(),
            vec![0b000, 0b010, 0b100, 0b110, 0b111]
        );
    }

    #[test]
    fn upset_cap() {
        let l = Limits {
            max_upsets: 3,
            ..Limits::default()
        };
        assert!(matches!(
            Poset::discrete(2).upsets(&l),
            Err(Error::SizeGuard { .. })
        ));
        assert_eq!(Poset::chain(2).upsets(&l).unwrap().len(), 3);
    }

    #[test]
    fn p_morphism_examples() {
        let c2 = Poset::chain(2);
        let pt = Poset::discrete(1);
        assert!(PosetMap::identity(2).is_p_morphism(&c2, &c2));
        assert!(PosetMap::constant(2, 0).is_p_morphism(&c2, &pt));
        // antichain onto C2: f(0) = 0 ≤ 1 but nothing above 0 maps to 1
        let f = PosetMap(vec![0, 1]);
        assert!(f.is_monotone(&Poset::discrete(2), &c2));
        assert!(!f.is_p_morphism(&Poset::discrete(2), &c2));
    }

    #[test]
    fn coproduct_examples() {
        let c2 = Poset::chain(2);
        let (u, inj) = coproduct(&[c2.clone(), c2.clone()]).unwrap();
        assert_eq!(u.size(), 4);
        assert!(u.leq(2, 3) && !u.leq(1, 2));
        for i in &inj {
            assert!(i.is_p_morphism(&c2, &u) && i.is_embedding(&c2, &u));
        }
        let (single, _) = coproduct(std::slice::from_ref(&c2)).unwrap();
        assert_eq!(single, c2);
        let (mixed, _) = coproduct(&[c2.clone(), Poset::discrete(1)]).unwrap();
        assert_eq!(mixed.size(), 3);
        assert_eq!(mixed.upsets(&lim()).unwrap().len(), 6);
        assert!(coproduct(&[]).is_err());
    }

    /// Brute force over all relations on labelled points with an
    /// independent isomorphism test by trying every bijection.
    fn brute_force_classes(n: usize) -> usize {
        let mut reps: Vec<Vec<Vec<bool>>> = Vec::new();
        for rel in 0u64..(1 << (n * n)) {
            let r = |i: usize, j: usize| rel >> (i * n + j) & 1 == 1;
            let ok = (0..n).all(|i| r(i, i))
                && (0..n).all(|i| (0..n).all(|j| i == j || !(r(i, j) && r(j, i))))
                && (0..n).all(|i| {
                    (0..n).all(|j| (0..n).all(|k| !(r(i, j) && r(j, k)) || r(i, k)))
                });
            if !ok {
                continue;
            }
            let m: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| r(i, j)).collect()).collect();
            let iso = |a: &Vec<Vec<bool>>, b: &Vec<Vec<bool>>| {
                permutations(n)
                    .iter()
                    .any(|p| (0..n).all(|i| (0..n).all(|j| a[i][j] == b[p[i]][p[j]])))
            };
            if !reps.iter().any(|q| iso(q, &m)) {
                reps.push(m);
            }
        }
        reps.len()
    }

    #[test]
    fn enumeration_counts() {
        let counts: Vec<usize> = (1..=5)
            .map(|n| enumerate_posets(n, &lim()).unwrap().len())
            .collect();
        assert_eq!(counts, vec![1, 2, 5, 16, 63]);
        assert_eq!(brute_force_classes(3), 5);
        assert!(matches!(
            enumerate_posets(6, &lim()),
            Err(Error::SizeGuard { .. })
        ));
    }

    #[test]
    fn enumerated_posets_are_closed_and_distinct() {
        for n in 1..=4 {
            let ps = enumerate_posets(n, &lim()).unwrap();
            let mut codes: Vec<u64> = ps.iter().map(Poset::canonical_code).collect();
            codes.dedup();
            assert_eq!(codes.len(), ps.len());
            for p in &ps {
                assert_eq!(&Poset::new(n, &p.strict_pairs()).unwrap(), p);
            }
        }
    }

    #[test]
    fn upsets_form_a_lattice() {
        for n in 1..=4 {
            for p in enumerate_posets(n, &lim()).unwrap() {
                let ups = p.upsets(&lim()).unwrap();
                assert_eq!(ups.first(), Some(&0));
                assert_eq!(ups.last(), Some(&p.all()));
                for &a in &ups {
                    assert!(p.is_upset(a));
                    for &b in &ups {
                        assert!(ups.binary_search(&(a | b)).is_ok());
                        assert!(ups.binary_search(&(a & b)).is_ok());
                    }
                }
            }
        }
    }

    #[test]
    fn p_morphisms_compose() {
        let ps = enumerate_posets(2, &lim()).unwrap();
        let p3 = enumerate_posets(3, &lim()).unwrap();
        for a in &p3 {
            assert!(PosetMap::identity(3).is_p_morphism(a, a));
            for b in &ps {
                for f in PosetMap::all_maps(3, 2).filter(|f| f.is_p_morphism(a, b)) {
                    for c in &ps {
                        for g in PosetMap::all_maps(2, 2).filter(|g| g.is_p_morphism(b, c)) {
                            assert!(f.then(&g).is_p_morphism(a, c));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn coproduct_upset_count_is_product() {
        let ps: Vec<Poset> = (1..=3)
            .flat_map(|n| enumerate_posets(n, &lim()).unwrap())
            .collect();
        for a in &ps {
            for b in &ps {
                let (u, _) = coproduct(&[a.clone(), b.clone()]).unwrap();
                assert_eq!(
                    u.upsets(&lim()).unwrap().len(),
                    a.upsets(&lim()).unwrap().len() * b.upsets(&lim()).unwrap().len()
                );
            }
        }
    }

    #[test]
    fn permutations_lexicographic() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(3)[1], vec![0, 2, 1]);
        assert_eq!(permutations(0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn product_and_dual() {
        let c2 = Poset::chain(2);
        let d = c2.dual();
        assert!(d.leq(1, 0));
        let sq = Poset::product(&c2, &c2).unwrap();
        assert_eq!(sq.upsets(&lim()).unwrap().len(), 6);
    }
}
