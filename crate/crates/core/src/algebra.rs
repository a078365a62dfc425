//! Finite modal algebras: Heyting algebras with operator tables, complex
//! algebras of frames, algebraic evaluation, and the H, S, P operations.

use std::collections::BTreeMap;

use crate::bits::{BitSet, Mask};
use crate::error::{Error, Result};
use crate::frame::{self, Frame};
use crate::lattice::{self, FinDL, FinHA};
use crate::limits::Limits;
use crate::syntax::{DagOps, Formula, FormulaDag, Kind, Modality};

/// Operator tables by element index. Unary tables have one entry per
/// element, the binary `⊰` table is row-major.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Ops {
    Box(Vec<u16>),
    Tri(Vec<u16>),
    Cin { nec: Vec<u16>, pos: Vec<u16> },
    Si(Vec<u16>),
}

impl Ops {
    pub fn kind(&self) -> Kind {
        match self {
            Ops::Box(_) => Kind::Box,
            Ops::Tri(_) => Kind::Im,
            Ops::Cin { .. } => Kind::Cin,
            Ops::Si(_) => Kind::Si,
        }
    }
}

/// A finite Heyting algebra with operators for one signature.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ModalAlgebra {
    ha: FinHA,
    ops: Ops,
    /// For complex algebras: the upset each element stands for.
    sets: Option<Vec<Mask>>,
}

pub type Assignment = BTreeMap<String, usize>;

impl ModalAlgebra {
    /// Checks table shapes and the signature's equations: box operators
    /// preserve `⊤` and `∧`, `▽` is monotone, cin and si are unconstrained.
    pub fn new(ha: FinHA, ops: Ops) -> Result<ModalAlgebra> {
        let n = ha.size();
        let (unary, binary): (Vec<&Vec<u16>>, Option<&Vec<u16>>) = match &ops {
            Ops::Box(t) | Ops::Tri(t) => (vec![t], None),
            Ops::Cin { nec, pos } => (vec![nec, pos], None),
            Ops::Si(t) => (vec![], Some(t)),
        };
        for t in &unary {
            if t.len() != n {
                return Err(Error::InvalidAlgebra(format!("operator table has {} entries for {n} elements", t.len())));
            }
        }
        if let Some(t) = binary {
            if t.len() != n * n {
                return Err(Error::InvalidAlgebra("binary operator table has the wrong size".into()));
            }
        }
        if unary.iter().copied().chain(binary).any(|t| t.iter().any(|&v| v as usize >= n)) {
            return Err(Error::InvalidAlgebra("operator value out of range".into()));
        }
        let alg = ModalAlgebra { ha, ops, sets: None };
        match &alg.ops {
            Ops::Box(t) => {
                if t[alg.ha.top()] as usize != alg.ha.top() {
                    return Err(Error::InvalidAlgebra("box does not preserve top".into()));
                }
                for a in 0..n {
                    for b in 0..n {
                        let lhs = alg.ha.meet(t[a] as usize, t[b] as usize);
                        if lhs != t[alg.ha.meet(a, b)] as usize {
                            return Err(Error::InvalidAlgebra(format!("box does not preserve meets at ({a}, {b})")));
                        }
                    }
                }
            }
            Ops::Tri(t) => {
                for a in 0..n {
                    for b in 0..n {
                        if alg.ha.leq(a, b) && !alg.ha.leq(t[a] as usize, t[b] as usize) {
                            return Err(Error::InvalidAlgebra(format!("tri is not monotone at ({a}, {b})")));
                        }
                    }
                }
            }
            Ops::Cin { .. } | Ops::Si(_) => {}
        }
        Ok(alg)
    }

    pub fn kind(&self) -> Kind {
        self.ops.kind()
    }

    pub fn ha(&self) -> &FinHA {
        &self.ha
    }

    pub fn ops(&self) -> &Ops {
        &self.ops
    }

    pub fn size(&self) -> usize {
        self.ha.size()
    }

    /// The upsets behind the elements of a complex algebra.
    pub fn sets(&self) -> Option<&[Mask]> {
        self.sets.as_deref()
    }

    /// Attaches the sets the elements stand for.
    pub fn with_sets(mut self, sets: Vec<Mask>) -> Result<ModalAlgebra> {
        if sets.len() != self.size() {
            return Err(Error::InvalidAlgebra(format!("{} sets for {} elements", sets.len(), self.size())));
        }
        self.sets = Some(sets);
        Ok(self)
    }

    /// `m(a)` or `a m b`.
    #[inline]
    pub fn apply(&self, m: Modality, a: usize, b: usize) -> usize {
        (match (&self.ops, m) {
            (Ops::Box(t), Modality::Box) | (Ops::Tri(t), Modality::Tri) => t[a],
            (Ops::Cin { nec, .. }, Modality::Box) => nec[a],
            (Ops::Cin { pos, .. }, Modality::Dia) => pos[a],
            (Ops::Si(t), Modality::Sto) => t[a * self.size() + b],
            _ => panic!("modality {m:?} is not in the {} signature", self.kind()),
        }) as usize
    }

    /// The two-element Boolean algebra `{0 = ⊥, 1 = ⊤}` with the given tables.
    pub fn two(ops: Ops) -> Result<ModalAlgebra> {
        let dl = FinDL::from_sets(&[0, 1], &Limits::default())?;
        ModalAlgebra::new(FinHA::from_lattice(dl), ops)
    }
}

struct AlgOps<'a>(&'a ModalAlgebra);

impl DagOps<usize> for AlgOps<'_> {
    fn top(&self) -> usize {
        self.0.ha.top()
    }
    fn bot(&self) -> usize {
        self.0.ha.bottom()
    }
    fn and(&self, a: usize, b: usize) -> usize {
        self.0.ha.meet(a, b)
    }
    fn or(&self, a: usize, b: usize) -> usize {
        self.0.ha.join(a, b)
    }
    fn imp(&self, a: usize, b: usize) -> usize {
        self.0.ha.imp(a, b)
    }
    fn modal(&self, m: Modality, a: usize, b: usize) -> usize {
        self.0.apply(m, a, b)
    }
}

/// `𝕏⁺`: the upset algebra with the operators the frame induces.
pub fn complex_algebra(x: &Frame, limits: &Limits) -> Result<ModalAlgebra> {
    let ua = lattice::up_algebra(x.poset(), limits)?;
    let ups = &ua.upsets;
    let idx = |m: Mask| ua.index(m).expect("modal operators map upsets to upsets") as u16;
    let unary = |m: Modality| ups.iter().map(|&a| idx(x.modal_op(m, a, 0))).collect::<Vec<_>>();
    let ops = match x.kind() {
        Kind::Box => Ops::Box(unary(Modality::Box)),
        Kind::Im => Ops::Tri(unary(Modality::Tri)),
        Kind::Cin => Ops::Cin {
            nec: unary(Modality::Box),
            pos: unary(Modality::Dia),
        },
        Kind::Si => {
            limits.check("binary table", (ups.len() * ups.len()) as u128, 1 << 24)?;
            Ops::Si(
                ups.iter()
                    .flat_map(|&a| ups.iter().map(move |&b| (a, b)))
                    .map(|(a, b)| idx(x.modal_op(Modality::Sto, a, b)))
                    .collect(),
            )
        }
    };
    let mut alg = ModalAlgebra::new(ua.ha.clone(), ops)?;
    alg.sets = Some(ua.upsets.clone());
    Ok(alg)
}

/// Value of `φ` under an assignment of letters to elements.
pub fn algebra_eval(a: &ModalAlgebra, phi: &Formula, asg: &Assignment) -> Result<usize> {
    phi.check_signature(a.kind())?;
    let dag = FormulaDag::new(std::slice::from_ref(phi));
    let vals = dag
        .letters
        .iter()
        .map(|p| {
            let v = *asg.get(p).ok_or_else(|| Error::MissingLetter(p.clone()))?;
            if v >= a.size() {
                return Err(Error::IndexOutOfRange { index: v, size: a.size() });
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    dag.eval_into(&vals, &AlgOps(a), &mut out);
    Ok(out[dag.roots[0]])
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AlgValidity {
    pub valid: bool,
    pub counterexample: Option<Assignment>,
}

fn assignment_count(a: &ModalAlgebra, k: usize, limits: &Limits) -> Result<()> {
    limits.check(
        "assignments",
        (a.size() as u128).saturating_pow(k as u32),
        limits.max_valuations,
    )
}

/// `φ` evaluates to `⊤` under every assignment.
pub fn algebra_validates(a: &ModalAlgebra, phi: &Formula, limits: &Limits) -> Result<AlgValidity> {
    phi.check_signature(a.kind())?;
    let dag = FormulaDag::new(std::slice::from_ref(phi));
    let k = dag.letters.len();
    assignment_count(a, k, limits)?;
    let elems: Vec<usize> = (0..a.size()).collect();
    let ops = AlgOps(a);
    let mut out = Vec::new();
    let mut bad = None;
    frame::for_each_assignment(&elems, k, |vals| {
        dag.eval_into(vals, &ops, &mut out);
        if out[dag.roots[0]] != a.ha.top() {
            bad = Some(vals.to_vec());
            false
        } else {
            true
        }
    });
    Ok(AlgValidity {
        valid: bad.is_none(),
        counterexample: bad.map(|v| dag.letters.iter().cloned().zip(v).collect()),
    })
}

/// For each root of `dag`, whether the algebra validates it.
pub fn algebra_validity_vector(a: &ModalAlgebra, dag: &FormulaDag, limits: &Limits) -> Result<BitSet> {
    let k = dag.letters.len();
    assignment_count(a, k, limits)?;
    let elems: Vec<usize> = (0..a.size()).collect();
    let ops = AlgOps(a);
    let top = a.ha.top();
    let mut valid = BitSet::full(dag.roots.len());
    let mut out = Vec::new();
    frame::for_each_assignment(&elems, k, |vals| {
        dag.eval_into(vals, &ops, &mut out);
        for (i, &r) in dag.roots.iter().enumerate() {
            if out[r] != top {
                valid.remove(i);
            }
        }
        true
    });
    Ok(valid)
}

/// The algebra on `elements` (ascending), if they form a subalgebra.
pub fn restrict_to(a: &ModalAlgebra, elements: &[usize], limits: &Limits) -> Result<Option<ModalAlgebra>> {
    let n = a.size();
    let mut pos = vec![usize::MAX; n];
    for (i, &e) in elements.iter().enumerate() {
        pos[e] = i;
    }
    let inside = |e: usize| pos[e] != usize::MAX;
    let ha = &a.ha;
    if !inside(ha.top()) || !inside(ha.bottom()) {
        return Ok(None);
    }
    let k = elements.len();
    let mut meet = Vec::with_capacity(k * k);
    let mut join = Vec::with_capacity(k * k);
    let mut imp = Vec::with_capacity(k * k);
    for &x in elements {
        for &y in elements {
            for (table, v) in [(&mut meet, ha.meet(x, y)), (&mut join, ha.join(x, y)), (&mut imp, ha.imp(x, y))] {
                if !inside(v) {
                    return Ok(None);
                }
                table.push(pos[v] as u16);
            }
        }
    }
    let unary = |t: &Vec<u16>| -> Option<Vec<u16>> {
        elements
            .iter()
            .map(|&x| {
                let v = t[x] as usize;
                inside(v).then(|| pos[v] as u16)
            })
            .collect()
    };
    let ops = match &a.ops {
        Ops::Box(t) => unary(t).map(Ops::Box),
        Ops::Tri(t) => unary(t).map(Ops::Tri),
        Ops::Cin { nec, pos: p } => unary(nec).zip(unary(p)).map(|(nec, pos)| Ops::Cin { nec, pos }),
        Ops::Si(t) => elements
            .iter()
            .flat_map(|&x| elements.iter().map(move |&y| t[x * n + y] as usize))
            .map(|v| inside(v).then(|| pos[v] as u16))
            .collect::<Option<Vec<_>>>()
            .map(Ops::Si),
    };
    let Some(ops) = ops else { return Ok(None) };
    let dl = FinDL::from_tables(k, meet, join, pos[ha.top()], pos[ha.bottom()], limits)?;
    let sub_ha = FinHA::with_implication(dl, imp, limits)?;
    let mut sub = ModalAlgebra::new(sub_ha, ops)?;
    sub.sets = a.sets.as_ref().map(|s| elements.iter().map(|&e| s[e]).collect());
    Ok(Some(sub))
}

/// All subalgebras with their element lists, by exhaustive subset scan.
pub fn subalgebras(a: &ModalAlgebra, limits: &Limits) -> Result<Vec<(Vec<usize>, ModalAlgebra)>> {
    let n = a.size();
    limits.check("subalgebra scan", n as u128, limits.max_subalgebra_scan as u128)?;
    let mut out = Vec::new();
    for m in 0u64..(1 << n) {
        let elements: Vec<usize> = crate::bits::members(m).collect();
        if let Some(sub) = restrict_to(a, &elements, limits)? {
            out.push((elements, sub));
        }
    }
    Ok(out)
}

/// `A × B` with component-wise operations; `(i, j)` has index `i·|B| + j`.
pub fn product(a: &ModalAlgebra, b: &ModalAlgebra, limits: &Limits) -> Result<ModalAlgebra> {
    if a.kind() != b.kind() {
        return Err(Error::KindMismatch {
            expected: a.kind(),
            found: b.kind(),
        });
    }
    let (n, m) = (a.size(), b.size());
    let k = n * m;
    limits.check("product size", k as u128, limits.max_algebra as u128)?;
    let pair = |i: usize, j: usize| (i * m + j) as u16;
    let mut meet = Vec::with_capacity(k * k);
    let mut join = Vec::with_capacity(k * k);
    let mut imp = Vec::with_capacity(k * k);
    for x in 0..k {
        for y in 0..k {
            let (x1, x2, y1, y2) = (x / m, x % m, y / m, y % m);
            meet.push(pair(a.ha.meet(x1, y1), b.ha.meet(x2, y2)));
            join.push(pair(a.ha.join(x1, y1), b.ha.join(x2, y2)));
            imp.push(pair(a.ha.imp(x1, y1), b.ha.imp(x2, y2)));
        }
    }
    let unary = |mo: Modality| -> Vec<u16> {
        (0..k).map(|x| pair(a.apply(mo, x / m, 0), b.apply(mo, x % m, 0))).collect()
    };
    let ops = match a.kind() {
        Kind::Box => Ops::Box(unary(Modality::Box)),
        Kind::Im => Ops::Tri(unary(Modality::Tri)),
        Kind::Cin => Ops::Cin {
            nec: unary(Modality::Box),
            pos: unary(Modality::Dia),
        },
        Kind::Si => Ops::Si(
            (0..k * k)
                .map(|xy| {
                    let (x, y) = (xy / k, xy % k);
                    pair(
                        a.apply(Modality::Sto, x / m, y / m),
                        b.apply(Modality::Sto, x % m, y % m),
                    )
                })
                .collect(),
        ),
    };
    let dl = FinDL::from_tables(k, meet, join, pair(a.ha.top(), b.ha.top()) as usize, pair(a.ha.bottom(), b.ha.bottom()) as usize, limits)?;
    let ha = FinHA::with_implication(dl, imp, limits)?;
    ModalAlgebra::new(ha, ops)
}

/// A violated homomorphism condition and the elements it fails at.
pub type HomFailure = (&'static str, Vec<usize>);

/// The first operation `h` fails to preserve, with its arguments.
pub fn homomorphism_failure(h: &[usize], a: &ModalAlgebra, b: &ModalAlgebra) -> Option<HomFailure> {
    if h.len() != a.size() || h.iter().any(|&v| v >= b.size()) || a.kind() != b.kind() {
        return Some(("shape", vec![]));
    }
    let (ha, hb) = (&a.ha, &b.ha);
    if h[ha.top()] != hb.top() {
        return Some(("top", vec![ha.top()]));
    }
    if h[ha.bottom()] != hb.bottom() {
        return Some(("bottom", vec![ha.bottom()]));
    }
    for x in 0..a.size() {
        for y in 0..a.size() {
            if h[ha.meet(x, y)] != hb.meet(h[x], h[y]) {
                return Some(("meet", vec![x, y]));
            }
            if h[ha.join(x, y)] != hb.join(h[x], h[y]) {
                return Some(("join", vec![x, y]));
            }
            if h[ha.imp(x, y)] != hb.imp(h[x], h[y]) {
                return Some(("implication", vec![x, y]));
            }
        }
    }
    for &m in a.kind().modalities() {
        if m.arity() == 1 {
            if let Some(x) = (0..a.size()).find(|&x| h[a.apply(m, x, 0)] != b.apply(m, h[x], 0)) {
                return Some((m.keyword(), vec![x]));
            }
        } else {
            for x in 0..a.size() {
                if let Some(y) = (0..a.size()).find(|&y| h[a.apply(m, x, y)] != b.apply(m, h[x], h[y])) {
                    return Some((m.keyword(), vec![x, y]));
                }
            }
        }
    }
    None
}

/// Preserves `⊤, ⊥, ∧, ∨, →` and every operator.
pub fn check_modal_homomorphism(h: &[usize], a: &ModalAlgebra, b: &ModalAlgebra) -> bool {
    homomorphism_failure(h, a, b).is_none()
}

/// All homomorphisms `A → B` (only surjective ones if asked), found by
/// backtracking over elements in index order with early pruning.
pub fn homomorphisms(a: &ModalAlgebra, b: &ModalAlgebra, surjective: bool, limits: &Limits) -> Result<Vec<Vec<usize>>> {
    if a.kind() != b.kind() {
        return Err(Error::KindMismatch {
            expected: a.kind(),
            found: b.kind(),
        });
    }
    limits.check(
        "homomorphism search",
        (b.size() as u128).saturating_pow(a.size() as u32),
        limits.max_maps,
    )?;
    let mut out = Vec::new();
    let mut h = vec![usize::MAX; a.size()];
    search(a, b, surjective, 0, &mut h, &mut out);
    Ok(out)
}

fn consistent(a: &ModalAlgebra, b: &ModalAlgebra, h: &[usize], x: usize) -> bool {
    let (ha, hb) = (&a.ha, &b.ha);
    let set = |e: usize| h[e] != usize::MAX;
    let agree = |e: usize, v: usize| !set(e) || h[e] == v;
    if x == ha.top() && h[x] != hb.top() || x == ha.bottom() && h[x] != hb.bottom() {
        return false;
    }
    for y in (0..a.size()).filter(|&y| set(y)) {
        for (p, q) in [(x, y), (y, x)] {
            if !agree(ha.meet(p, q), hb.meet(h[p], h[q]))
                || !agree(ha.join(p, q), hb.join(h[p], h[q]))
                || !agree(ha.imp(p, q), hb.imp(h[p], h[q]))
            {
                return false;
            }
            for &m in a.kind().modalities() {
                if m.arity() == 2 && !agree(a.apply(m, p, q), b.apply(m, h[p], h[q])) {
                    return false;
                }
            }
        }
    }
    for &m in a.kind().modalities() {
        if m.arity() == 1 && !agree(a.apply(m, x, 0), b.apply(m, h[x], 0)) {
            return false;
        }
        // h(y) for y with m(y) = x is constrained too
        if m.arity() == 1 {
            for y in (0..a.size()).filter(|&y| set(y) && a.apply(m, y, 0) == x) {
                if b.apply(m, h[y], 0) != h[x] {
                    return false;
                }
            }
        }
    }
    true
}

fn search(a: &ModalAlgebra, b: &ModalAlgebra, surjective: bool, x: usize, h: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if x == a.size() {
        let hits = h.iter().fold(vec![false; b.size()], |mut acc, &v| {
            acc[v] = true;
            acc
        });
        if (!surjective || hits.iter().all(|&t| t)) && check_modal_homomorphism(h, a, b) {
            out.push(h.clone());
        }
        return;
    }
    for v in 0..b.size() {
        h[x] = v;
        if consistent(a, b, h, x) {
            search(a, b, surjective, x + 1, h, out);
        }
    }
    h[x] = usize::MAX;
}

/// A surjective homomorphism `A → B`, if one exists.
pub fn is_homomorphic_image(a: &ModalAlgebra, b: &ModalAlgebra, limits: &Limits) -> Result<Option<Vec<usize>>> {
    Ok(homomorphisms(a, b, true, limits)?.into_iter().next())
}
