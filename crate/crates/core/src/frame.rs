//! Frames of the four kinds as `(i, T)`-dialgebras: validation, model
//! checking, frame validity, morphisms and the frame constructions.

use std::collections::BTreeMap;

use crate::bits::{self, BitSet, Mask};
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::order::{self, Poset, PosetMap};
use crate::syntax::{DagOps, Formula, FormulaDag, Kind, Modality};

/// A family of subsets of a carrier with at most 6 points: bit `s` is set
/// iff the subset with mask `s` belongs to the family.
pub type Family = u64;

#[inline]
pub fn family_has(fam: Family, s: Mask) -> bool {
    bits::has(fam, s as usize)
}

/// Members of an upward-closed family given by its minimal elements.
#[inline]
pub fn antichain_has(minimal: &[Mask], a: Mask) -> bool {
    minimal.iter().any(|&m| bits::subset(m, a))
}

/// The `⊆`-minimal elements, sorted ascending.
pub fn minimal_elements(sets: impl IntoIterator<Item = Mask>) -> Vec<Mask> {
    let mut all: Vec<Mask> = sets.into_iter().collect();
    all.sort_unstable();
    all.dedup();
    let keep: Vec<Mask> = all
        .iter()
        .copied()
        .filter(|&a| !all.iter().any(|&b| b != a && bits::subset(b, a)))
        .collect();
    keep
}

/// Dialgebra structure `γ : X → T X`, stored per state.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Structure {
    /// `R[x]`
    Box(Vec<Mask>),
    /// Minimal members of `N(x)`; `N(x)` is their upward closure in `Up(X)`.
    Im(Vec<Vec<Mask>>),
    /// `(N□(x), N◇(x))`
    Cin(Vec<(Family, Family)>),
    /// `R_s[x]`
    Si(Vec<Mask>),
}

impl Structure {
    pub fn kind(&self) -> Kind {
        match self {
            Structure::Box(_) => Kind::Box,
            Structure::Im(_) => Kind::Im,
            Structure::Cin(_) => Kind::Cin,
            Structure::Si(_) => Kind::Si,
        }
    }

    fn len(&self) -> usize {
        match self {
            Structure::Box(r) | Structure::Si(r) => r.len(),
            Structure::Im(n) => n.len(),
            Structure::Cin(n) => n.len(),
        }
    }
}

/// An element of `T X` for the kind's functor `T`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum TValue {
    /// `P_up X`: an upset, ordered by reverse inclusion.
    Upset(Mask),
    /// `M X`: an upward-closed family of upsets, by its minimal members.
    Family(Vec<Mask>),
    /// `N X`: a pair of arbitrary subset families.
    Pair(Family, Family),
    /// `P_s X`: an arbitrary subset, ordered by reverse inclusion.
    Subset(Mask),
}

/// Membership of `t` in the predicate lifting of `m` applied to `a` (and `b`
/// for the binary lifting). `all` is the carrier.
pub fn lifting_holds(t: &TValue, m: Modality, a: Mask, b: Mask, all: Mask) -> bool {
    match (t, m) {
        (TValue::Upset(r), Modality::Box) => bits::subset(*r, a),
        (TValue::Family(w), Modality::Tri) => antichain_has(w, a),
        (TValue::Pair(w1, _), Modality::Box) => family_has(*w1, a),
        (TValue::Pair(_, w2), Modality::Dia) => !family_has(*w2, all & !a),
        (TValue::Subset(c), Modality::Sto) => c & a & !b == 0,
        _ => panic!("lifting {m:?} does not apply to {t:?}"),
    }
}

/// A frame: a poset with a dialgebra structure of one of the four kinds.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Frame {
    poset: Poset,
    structure: Structure,
}

impl Frame {
    /// Validates the kind's frame condition. Im antichains are normalised.
    pub fn new(poset: Poset, structure: Structure) -> Result<Frame> {
        let n = poset.size();
        if structure.len() != n {
            return Err(Error::input(
                "structure",
                format!("{} entries for {} states", structure.len(), n),
            ));
        }
        let structure = match structure {
            Structure::Im(fams) => Structure::Im(fams.into_iter().map(minimal_elements).collect()),
            other => other,
        };
        let frame = Frame { poset, structure };
        frame.validate()?;
        Ok(frame)
    }

    pub fn new_box(poset: Poset, rel: &[(usize, usize)]) -> Result<Frame> {
        let r = relation_rows(poset.size(), rel)?;
        Frame::new(poset, Structure::Box(r))
    }

    pub fn new_si(poset: Poset, rel: &[(usize, usize)]) -> Result<Frame> {
        let r = relation_rows(poset.size(), rel)?;
        Frame::new(poset, Structure::Si(r))
    }

    /// Im frame from complete neighbourhood families; checks that every
    /// member is an upset and that each family is closed under upset supersets.
    pub fn new_im(poset: Poset, families: Vec<Vec<Mask>>, limits: &Limits) -> Result<Frame> {
        let ups = poset.upsets(limits)?;
        for (x, fam) in families.iter().enumerate() {
            for &a in fam {
                if !poset.is_upset(a) {
                    return Err(Error::condition(
                        format!("N({x}) contains a set that is not an upset"),
                        bits::members(a).collect(),
                    ));
                }
                if let Some(&b) = ups.iter().find(|&&b| bits::subset(a, b) && !fam.contains(&b)) {
                    return Err(Error::condition(
                        format!("N({x}) is not closed under upset supersets"),
                        vec![x, a as usize, b as usize],
                    ));
                }
            }
        }
        Frame::new(poset, Structure::Im(families))
    }

    pub fn new_cin(poset: Poset, nbox: Vec<Vec<Mask>>, ndia: Vec<Vec<Mask>>, limits: &Limits) -> Result<Frame> {
        let n = poset.size();
        limits.check("cin states", n as u128, limits.max_cin_states.min(6) as u128)?;
        if nbox.len() != n || ndia.len() != n {
            return Err(Error::input("structure", "one neighbourhood pair per state required"));
        }
        let pack = |fam: &[Mask]| -> Result<Family> {
            fam.iter().try_fold(0, |acc, &s| {
                if bits::subset(s, bits::full(n)) {
                    Ok(acc | bits::bit(s as usize))
                } else {
                    Err(Error::condition("neighbourhood member outside the carrier", vec![s as usize]))
                }
            })
        };
        let pairs = nbox
            .iter()
            .zip(&ndia)
            .map(|(b, d)| Ok((pack(b)?, pack(d)?)))
            .collect::<Result<Vec<_>>>()?;
        Frame::new(poset, Structure::Cin(pairs))
    }

    fn validate(&self) -> Result<()> {
        let p = &self.poset;
        let n = p.size();
        let all = p.all();
        match &self.structure {
            Structure::Box(r) => {
                if let Some(x) = r.iter().position(|&row| !bits::subset(row, all)) {
                    return Err(Error::condition("relation leaves the carrier", vec![x]));
                }
                for x in 0..n {
                    // x ≤ y R z ⇒ x R z
                    for y in bits::members(p.up(x)) {
                        if let Some(z) = bits::members(r[y] & !r[x]).next() {
                            return Err(Error::condition("x <= y R z implies x R z", vec![x, y, z]));
                        }
                    }
                    // x R y ≤ z ⇒ x R z
                    for y in bits::members(r[x]) {
                        if let Some(z) = bits::members(p.up(y) & !r[x]).next() {
                            return Err(Error::condition("x R y <= z implies x R z", vec![x, y, z]));
                        }
                    }
                }
            }
            Structure::Si(r) => {
                if let Some(x) = r.iter().position(|&row| !bits::subset(row, all)) {
                    return Err(Error::condition("relation leaves the carrier", vec![x]));
                }
                for x in 0..n {
                    for y in bits::members(p.up(x)) {
                        if let Some(z) = bits::members(r[y] & !r[x]).next() {
                            return Err(Error::condition("x <= y R_s z implies x R_s z", vec![x, y, z]));
                        }
                    }
                }
            }
            Structure::Im(fams) => {
                for (x, fam) in fams.iter().enumerate() {
                    if let Some(&a) = fam.iter().find(|&&a| !bits::subset(a, all) || !p.is_upset(a)) {
                        return Err(Error::condition(
                            format!("N({x}) contains a set that is not an upset"),
                            bits::members(a).collect(),
                        ));
                    }
                }
                for x in 0..n {
                    for y in bits::members(p.up(x)) {
                        if let Some(&a) = fams[x].iter().find(|&&a| !antichain_has(&fams[y], a)) {
                            return Err(Error::condition(
                                "x <= y implies N(x) subset of N(y)",
                                vec![x, y, a as usize],
                            ));
                        }
                    }
                }
            }
            Structure::Cin(pairs) => {
                if n > 6 {
                    return Err(Error::guard("cin states", n as u128, 6));
                }
                let subsets = bits::full(1 << n);
                for (x, &(b, d)) in pairs.iter().enumerate() {
                    if !bits::subset(b, subsets) || !bits::subset(d, subsets) {
                        return Err(Error::condition("neighbourhood member outside the carrier", vec![x]));
                    }
                }
                for x in 0..n {
                    for y in bits::members(p.up(x)) {
                        let (bx, dx) = pairs[x];
                        let (by, dy) = pairs[y];
                        if let Some(s) = bits::members(bx & !by).next() {
                            return Err(Error::condition(
                                "x <= y implies N_box(x) subset of N_box(y)",
                                vec![x, y, s],
                            ));
                        }
                        if let Some(s) = bits::members(dy & !dx).next() {
                            return Err(Error::condition(
                                "x <= y implies N_dia(x) superset of N_dia(y)",
                                vec![x, y, s],
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> Kind {
        self.structure.kind()
    }

    pub fn size(&self) -> usize {
        self.poset.size()
    }

    pub fn poset(&self) -> &Poset {
        &self.poset
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    /// `R[x]` for box and si frames.
    pub fn successors(&self, x: usize) -> Mask {
        match &self.structure {
            Structure::Box(r) | Structure::Si(r) => r[x],
            _ => panic!("{} frames have no relation", self.kind()),
        }
    }

    /// `γ(x)`
    pub fn gamma(&self, x: usize) -> TValue {
        match &self.structure {
            Structure::Box(r) => TValue::Upset(r[x]),
            Structure::Im(n) => TValue::Family(n[x].clone()),
            Structure::Cin(n) => TValue::Pair(n[x].0, n[x].1),
            Structure::Si(r) => TValue::Subset(r[x]),
        }
    }

    /// The operator a modality induces on upsets:
    /// `{x | γ(x) ∈ λ(a, b)}`; `b` is ignored for unary modalities.
    pub fn modal_op(&self, m: Modality, a: Mask, b: Mask) -> Mask {
        let n = self.size();
        let all = self.poset.all();
        let collect = |pred: &dyn Fn(usize) -> bool| {
            (0..n).filter(|&x| pred(x)).fold(0, |acc, x| acc | bits::bit(x))
        };
        match (&self.structure, m) {
            (Structure::Box(r), Modality::Box) => collect(&|x| bits::subset(r[x], a)),
            (Structure::Im(w), Modality::Tri) => collect(&|x| antichain_has(&w[x], a)),
            (Structure::Cin(w), Modality::Box) => collect(&|x| family_has(w[x].0, a)),
            (Structure::Cin(w), Modality::Dia) => collect(&|x| !family_has(w[x].1, all & !a)),
            (Structure::Si(r), Modality::Sto) => collect(&|x| r[x] & a & !b == 0),
            _ => panic!("modality {m:?} is not in the {} signature", self.kind()),
        }
    }

    /// Relabels states: new state `i` is old state `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Frame {
        let n = self.size();
        let mut inverse = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        let remap = |m: Mask| bits::image(m, &inverse);
        let structure = match &self.structure {
            Structure::Box(r) => Structure::Box(perm.iter().map(|&o| remap(r[o])).collect()),
            Structure::Si(r) => Structure::Si(perm.iter().map(|&o| remap(r[o])).collect()),
            Structure::Im(w) => Structure::Im(
                perm.iter()
                    .map(|&o| minimal_elements(w[o].iter().map(|&a| remap(a))))
                    .collect(),
            ),
            Structure::Cin(w) => {
                let fam = |f: Family| {
                    (0..1u64 << n)
                        .filter(|&s| family_has(f, bits::image(s, perm)))
                        .fold(0, |acc, s| acc | bits::bit(s as usize))
                };
                Structure::Cin(perm.iter().map(|&o| (fam(w[o].0), fam(w[o].1))).collect())
            }
        };
        Frame {
            poset: self.poset.permuted(perm),
            structure,
        }
    }

    fn encode(&self, out: &mut Vec<u64>) {
        out.clear();
        out.push(self.kind() as u64);
        out.push(self.size() as u64);
        out.extend((0..self.size()).map(|x| self.poset.up(x)));
        match &self.structure {
            Structure::Box(r) | Structure::Si(r) => out.extend(r),
            Structure::Im(w) => {
                for fam in w {
                    out.push(fam.len() as u64);
                    out.extend(fam);
                }
            }
            Structure::Cin(w) => {
                for &(b, d) in w {
                    out.push(b);
                    out.push(d);
                }
            }
        }
    }

    /// Isomorphism-invariant certificate: the least encoding over all
    /// relabellings.
    pub fn certificate(&self) -> Vec<u64> {
        let n = self.size();
        assert!(n <= 8, "certificates need at most 8 states");
        let mut best: Option<Vec<u64>> = None;
        let mut buf = Vec::new();
        for perm in order::permutations(n) {
            self.relabel(&perm).encode(&mut buf);
            if best.as_ref().is_none_or(|b| buf < *b) {
                best = Some(buf.clone());
            }
        }
        best.unwrap_or_default()
    }
}

fn relation_rows(n: usize, rel: &[(usize, usize)]) -> Result<Vec<Mask>> {
    let mut rows = vec![0; n];
    for &(a, b) in rel {
        for i in [a, b] {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, size: n });
            }
        }
        rows[a] |= bits::bit(b);
    }
    Ok(rows)
}

pub fn validate_frame(poset: Poset, structure: Structure) -> Result<Frame> {
    Frame::new(poset, structure)
}

// ---------------------------------------------------------------- semantics

/// Letters to upsets.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Valuation(pub BTreeMap<String, Mask>);

impl Valuation {
    pub fn new() -> Valuation {
        Valuation::default()
    }

    pub fn with(mut self, letter: &str, value: Mask) -> Valuation {
        self.0.insert(letter.to_string(), value);
        self
    }

    pub fn get(&self, letter: &str) -> Result<Mask> {
        self.0
            .get(letter)
            .copied()
            .ok_or_else(|| Error::MissingLetter(letter.to_string()))
    }

    /// Every value must be an upset of `p`.
    pub fn check(&self, p: &Poset) -> Result<()> {
        for (letter, &v) in &self.0 {
            if !bits::subset(v, p.all()) || !p.is_upset(v) {
                return Err(Error::condition(
                    format!("valuation of `{letter}` is not an upset"),
                    bits::members(v).collect(),
                ));
            }
        }
        Ok(())
    }
}

/// A frame with a valuation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Model {
    pub frame: Frame,
    pub valuation: Valuation,
}

impl Model {
    pub fn new(frame: Frame, valuation: Valuation) -> Result<Model> {
        valuation.check(frame.poset())?;
        Ok(Model { frame, valuation })
    }

    pub fn truth_set(&self, phi: &Formula) -> Result<Mask> {
        truth_set(&self.frame, &self.valuation, phi)
    }

    pub fn satisfies(&self, x: usize, phi: &Formula) -> Result<bool> {
        satisfies(&self.frame, &self.valuation, x, phi)
    }
}

/// Upset operations of a frame, for evaluating a [`FormulaDag`].
pub struct FrameOps<'a>(pub &'a Frame);

impl DagOps<Mask> for FrameOps<'_> {
    fn top(&self) -> Mask {
        self.0.poset.all()
    }
    fn bot(&self) -> Mask {
        0
    }
    fn and(&self, a: Mask, b: Mask) -> Mask {
        a & b
    }
    fn or(&self, a: Mask, b: Mask) -> Mask {
        a | b
    }
    fn imp(&self, a: Mask, b: Mask) -> Mask {
        self.0.poset.implication(a, b)
    }
    fn modal(&self, m: Modality, a: Mask, b: Mask) -> Mask {
        self.0.modal_op(m, a, b)
    }
}

fn check_inputs(frame: &Frame, phi: &Formula) -> Result<()> {
    phi.check_signature(frame.kind())
}

/// `⟦φ⟧`, computed bottom-up over shared subformulas.
pub fn truth_set(frame: &Frame, v: &Valuation, phi: &Formula) -> Result<Mask> {
    check_inputs(frame, phi)?;
    let dag = FormulaDag::new(std::slice::from_ref(phi));
    let letters = dag
        .letters
        .iter()
        .map(|p| v.get(p))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    dag.eval_into(&letters, &FrameOps(frame), &mut out);
    Ok(out[dag.roots[0]])
}

/// `M, x ⊩ φ`, evaluated clause by clause through the predicate liftings.
pub fn satisfies(frame: &Frame, v: &Valuation, x: usize, phi: &Formula) -> Result<bool> {
    check_inputs(frame, phi)?;
    if x >= frame.size() {
        return Err(Error::IndexOutOfRange { index: x, size: frame.size() });
    }
    sat(frame, v, x, phi)
}

fn sat(frame: &Frame, v: &Valuation, x: usize, phi: &Formula) -> Result<bool> {
    let p = frame.poset();
    let extension = |psi: &Formula| -> Result<Mask> {
        (0..frame.size()).try_fold(0, |acc, y| {
            Ok(if sat(frame, v, y, psi)? { acc | bits::bit(y) } else { acc })
        })
    };
    Ok(match phi {
        Formula::Top => true,
        Formula::Bot => false,
        Formula::Letter(q) => bits::has(v.get(q)?, x),
        Formula::And(a, b) => sat(frame, v, x, a)? && sat(frame, v, x, b)?,
        Formula::Or(a, b) => sat(frame, v, x, a)? || sat(frame, v, x, b)?,
        Formula::Imp(a, b) => {
            let mut ok = true;
            for y in bits::members(p.up(x)) {
                if sat(frame, v, y, a)? && !sat(frame, v, y, b)? {
                    ok = false;
                    break;
                }
            }
            ok
        }
        Formula::Box(a) | Formula::Dia(a) | Formula::Tri(a) => {
            let ea = extension(a)?;
            lifting_holds(&frame.gamma(x), phi.modality().unwrap(), ea, 0, p.all())
        }
        Formula::Sto(a, b) => {
            let (ea, eb) = (extension(a)?, extension(b)?);
            lifting_holds(&frame.gamma(x), Modality::Sto, ea, eb, p.all())
        }
    })
}

/// Outcome of a validity check.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Validity {
    pub valid: bool,
    /// First refuting valuation in canonical order, with a refuting state.
    pub counterexample: Option<(Valuation, usize)>,
}

/// Calls `visit` on every assignment of upsets to `k` letters, in odometer
/// order with the first letter most significant. Stops early on `false`.
pub(crate) fn for_each_assignment<T: Copy>(
    values: &[T],
    k: usize,
    mut visit: impl FnMut(&[T]) -> bool,
) {
    if values.is_empty() && k > 0 {
        return;
    }
    let mut idx = vec![0usize; k];
    let mut cur: Vec<T> = idx.iter().map(|&i| values[i]).collect();
    loop {
        if !visit(&cur) {
            return;
        }
        let mut pos = k;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < values.len() {
                cur[pos] = values[idx[pos]];
                break;
            }
            idx[pos] = 0;
            cur[pos] = values[0];
        }
    }
}

/// `𝕏 ⊩ φ`, quantifying over valuations of the letters of `φ` only.
pub fn frame_validates(frame: &Frame, phi: &Formula, limits: &Limits) -> Result<Validity> {
    check_inputs(frame, phi)?;
    let ups = frame.poset().upsets(limits)?;
    let dag = FormulaDag::new(std::slice::from_ref(phi));
    let k = dag.letters.len();
    limits.check(
        "valuations",
        (ups.len() as u128).saturating_pow(k as u32),
        limits.max_valuations,
    )?;
    let all = frame.poset().all();
    let ops = FrameOps(frame);
    let mut out = Vec::new();
    let mut refuted = None;
    for_each_assignment(&ups, k, |vals| {
        dag.eval_into(vals, &ops, &mut out);
        let t = out[dag.roots[0]];
        if t != all {
            let state = (all & !t).trailing_zeros() as usize;
            refuted = Some((vals.to_vec(), state));
            false
        } else {
            true
        }
    });
    Ok(match refuted {
        None => Validity {
            valid: true,
            counterexample: None,
        },
        Some((vals, state)) => Validity {
            valid: false,
            counterexample: Some((
                Valuation(dag.letters.iter().cloned().zip(vals).collect()),
                state,
            )),
        },
    })
}

/// For each root of `dag`, whether the frame validates it.
pub fn validity_vector(frame: &Frame, dag: &FormulaDag, limits: &Limits) -> Result<BitSet> {
    let ups = frame.poset().upsets(limits)?;
    let k = dag.letters.len();
    limits.check(
        "valuations",
        (ups.len() as u128).saturating_pow(k as u32),
        limits.max_valuations,
    )?;
    let all = frame.poset().all();
    let ops = FrameOps(frame);
    let mut valid = BitSet::full(dag.roots.len());
    let mut out = Vec::new();
    for_each_assignment(&ups, k, |vals| {
        dag.eval_into(vals, &ops, &mut out);
        for (i, &r) in dag.roots.iter().enumerate() {
            if out[r] != all {
                valid.remove(i);
            }
        }
        true
    });
    Ok(valid)
}

// ---------------------------------------------------------------- morphisms

/// `T f` applied to an element of `T(dom)`.
pub fn functor_action(
    kind: Kind,
    f: &PosetMap,
    dom: &Poset,
    cod: &Poset,
    value: &TValue,
    limits: &Limits,
) -> Result<TValue> {
    let pre_family = |w: Family| -> Family {
        (0..1u64 << cod.size())
            .filter(|&s| family_has(w, f.preimage(s)))
            .fold(0, |acc, s| acc | bits::bit(s as usize))
    };
    let _ = dom;
    Ok(match (kind, value) {
        (Kind::Box, TValue::Upset(a)) => TValue::Upset(f.image(*a)),
        (Kind::Si, TValue::Subset(a)) => TValue::Subset(f.image(*a)),
        (Kind::Im, TValue::Family(w)) => {
            let ups = cod.upsets(limits)?;
            TValue::Family(minimal_elements(
                ups.into_iter().filter(|&a| antichain_has(w, f.preimage(a))),
            ))
        }
        (Kind::Cin, TValue::Pair(w1, w2)) => {
            limits.check("cin states", cod.size() as u128, 6)?;
            TValue::Pair(pre_family(*w1), pre_family(*w2))
        }
        _ => {
            return Err(Error::input(
                "value",
                format!("{value:?} is not an element of the {kind} functor"),
            ))
        }
    })
}

/// Both routes to deciding whether a map is a frame morphism.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MorphismCheck {
    /// p-morphism for the orders.
    pub p_morphism: bool,
    /// The kind-specific morphism conditions.
    pub conditions: bool,
    /// `T f ∘ γ = γ' ∘ f`.
    pub square: bool,
    /// First failing state or element for the kind-specific conditions.
    pub witness: Option<Vec<usize>>,
}

impl MorphismCheck {
    pub fn holds(&self) -> bool {
        self.p_morphism && self.conditions
    }
}

fn ensure_same_kind(a: &Frame, b: &Frame) -> Result<()> {
    if a.kind() != b.kind() {
        return Err(Error::KindMismatch {
            expected: a.kind(),
            found: b.kind(),
        });
    }
    Ok(())
}

/// Kind conditions and the dialgebra square, reported separately.
pub fn check_frame_morphism(f: &PosetMap, x: &Frame, y: &Frame, limits: &Limits) -> Result<MorphismCheck> {
    ensure_same_kind(x, y)?;
    f.check_total(x.poset(), y.poset())?;
    let (px, py) = (x.poset(), y.poset());
    let p_morphism = f.is_p_morphism(px, py);
    let witness = kind_conditions(f, x, y, limits)?;
    let mut square = p_morphism;
    if square {
        for s in 0..x.size() {
            let lhs = functor_action(x.kind(), f, px, py, &x.gamma(s), limits)?;
            if lhs != y.gamma(f.apply(s)) {
                square = false;
                break;
            }
        }
    }
    Ok(MorphismCheck {
        p_morphism,
        conditions: witness.is_none(),
        square,
        witness,
    })
}

/// Kind-specific conditions; `Some(witness)` on the first failure.
fn kind_conditions(f: &PosetMap, x: &Frame, y: &Frame, limits: &Limits) -> Result<Option<Vec<usize>>> {
    let n = x.size();
    match (x.structure(), y.structure()) {
        (Structure::Box(r), Structure::Box(r2)) | (Structure::Si(r), Structure::Si(r2)) => {
            for s in 0..n {
                // forth: s R t ⇒ f(s) R' f(t)
                if let Some(t) = bits::members(r[s]).find(|&t| !bits::has(r2[f.apply(s)], f.apply(t))) {
                    return Ok(Some(vec![s, t]));
                }
                // back: f(s) R' t' ⇒ ∃t. s R t, f(t) = t'
                let hit = f.image(r[s]);
                if let Some(t2) = bits::members(r2[f.apply(s)] & !hit).next() {
                    return Ok(Some(vec![s, t2]));
                }
            }
        }
        (Structure::Im(w), Structure::Im(w2)) => {
            let ups = y.poset().upsets(limits)?;
            for s in 0..n {
                for &a in &ups {
                    if antichain_has(&w[s], f.preimage(a)) != antichain_has(&w2[f.apply(s)], a) {
                        return Ok(Some(vec![s, a as usize]));
                    }
                }
            }
        }
        (Structure::Cin(w), Structure::Cin(w2)) => {
            for s in 0..n {
                for a in 0..1u64 << y.size() {
                    let pa = f.preimage(a);
                    let (b1, d1) = w[s];
                    let (b2, d2) = w2[f.apply(s)];
                    if family_has(b1, pa) != family_has(b2, a) || family_has(d1, pa) != family_has(d2, a) {
                        return Ok(Some(vec![s, a as usize]));
                    }
                }
            }
        }
        _ => unreachable!("kinds checked"),
    }
    Ok(None)
}

/// Decides the morphism property; the kind conditions and the dialgebra
/// square must agree, otherwise [`Error::Incoherent`].
pub fn is_frame_morphism(f: &PosetMap, x: &Frame, y: &Frame, limits: &Limits) -> Result<bool> {
    let c = check_frame_morphism(f, x, y, limits)?;
    if c.holds() != c.square {
        return Err(Error::Incoherent(format!(
            "morphism conditions ({}) and dialgebra square ({}) disagree for {:?}",
            c.holds(),
            c.square,
            f.0
        )));
    }
    Ok(c.holds())
}

/// Bijective morphism that is an order embedding.
pub fn is_frame_isomorphism(f: &PosetMap, x: &Frame, y: &Frame, limits: &Limits) -> Result<bool> {
    Ok(x.size() == y.size()
        && f.is_surjective(y.size())
        && f.is_embedding(x.poset(), y.poset())
        && is_frame_morphism(f, x, y, limits)?)
}

// ------------------------------------------------------------ constructions

/// Coproduct of frames of one kind with its injections.
pub fn disjoint_union(frames: &[Frame], limits: &Limits) -> Result<(Frame, Vec<PosetMap>)> {
    let first = frames.first().ok_or_else(|| Error::input("frames", "empty list"))?;
    for f in frames {
        ensure_same_kind(first, f)?;
    }
    let posets: Vec<Poset> = frames.iter().map(|f| f.poset().clone()).collect();
    let (poset, inj) = order::coproduct(&posets)?;
    let n = poset.size();
    let offsets: Vec<usize> = inj.iter().map(|i| i.0.first().copied().unwrap_or(0)).collect();
    let structure = match first.kind() {
        Kind::Box | Kind::Si => {
            let rows = frames
                .iter()
                .zip(&offsets)
                .flat_map(|(fr, &o)| (0..fr.size()).map(move |x| fr.successors(x) << o))
                .collect();
            if first.kind() == Kind::Box {
                Structure::Box(rows)
            } else {
                Structure::Si(rows)
            }
        }
        Kind::Im => Structure::Im(
            frames
                .iter()
                .zip(&offsets)
                .flat_map(|(fr, &o)| {
                    let Structure::Im(w) = fr.structure() else { unreachable!() };
                    w.iter().map(move |fam| fam.iter().map(|&a| a << o).collect())
                })
                .collect(),
        ),
        Kind::Cin => {
            limits.check("cin states", n as u128, limits.max_cin_states.min(6) as u128)?;
            let mut pairs = Vec::with_capacity(n);
            for (fr, &o) in frames.iter().zip(&offsets) {
                let Structure::Cin(w) = fr.structure() else { unreachable!() };
                let part = bits::full(fr.size()) << o;
                // a ∈ N(x_k) iff a ∩ X_k ∈ N_k(x_k)
                let trace = |fam: Family| {
                    (0..1u64 << n)
                        .filter(|&a| family_has(fam, (a & part) >> o))
                        .fold(0, |acc, a| acc | bits::bit(a as usize))
                };
                pairs.extend(w.iter().map(|&(b, d)| (trace(b), trace(d))));
            }
            Structure::Cin(pairs)
        }
    };
    Ok((Frame::new(poset, structure)?, inj))
}

/// Keeps the states in `keep`, renumbered ascending, with every structure
/// traced onto them. Returns the frame and its inclusion map, or `None`
/// when the traced structure is not a frame.
fn restrict(frame: &Frame, keep: Mask) -> Option<(Frame, PosetMap)> {
    let (poset, inclusion) = frame.poset().induced(keep);
    let squeeze = |m: Mask| bits::preimage(m, &inclusion);
    let structure = match frame.structure() {
        Structure::Box(r) => Structure::Box(inclusion.iter().map(|&x| squeeze(r[x])).collect()),
        Structure::Si(r) => Structure::Si(inclusion.iter().map(|&x| squeeze(r[x])).collect()),
        Structure::Im(w) => Structure::Im(
            inclusion
                .iter()
                .map(|&x| w[x].iter().filter(|&&a| bits::subset(a, keep)).map(|&a| squeeze(a)).collect())
                .collect(),
        ),
        Structure::Cin(w) => {
            let k = inclusion.len();
            let sub = |fam: Family| {
                (0..1u64 << k)
                    .filter(|&b| family_has(fam, bits::image(b, &inclusion)))
                    .fold(0, |acc, b| acc | bits::bit(b as usize))
            };
            Structure::Cin(inclusion.iter().map(|&x| (sub(w[x].0), sub(w[x].1))).collect())
        }
    };
    let sub = Frame::new(poset, structure).ok()?;
    Some((sub, PosetMap(inclusion)))
}

/// The smallest subframe containing `seeds`, closed under `≤` and the
/// relation (box and si frames).
pub fn generate_subframe(frame: &Frame, seeds: Mask) -> Result<(Frame, PosetMap)> {
    if !matches!(frame.kind(), Kind::Box | Kind::Si) {
        return Err(Error::Unsupported {
            kind: frame.kind(),
            reason: "no closure operation generates subframes of neighbourhood frames",
        });
    }
    if seeds == 0 || !bits::subset(seeds, frame.poset().all()) {
        return Err(Error::input("seeds", "seed set must be a non-empty set of states"));
    }
    let mut closed = seeds;
    loop {
        let next = bits::members(closed).fold(closed, |acc, x| {
            acc | frame.poset().up(x) | frame.successors(x)
        });
        if next == closed {
            break;
        }
        closed = next;
    }
    restrict(frame, closed).ok_or_else(|| Error::Incoherent("closed subset is not a subframe".into()))
}

/// `f : X' → X` is a frame morphism and an order embedding.
pub fn generated_subframe_check(f: &PosetMap, sub: &Frame, frame: &Frame, limits: &Limits) -> Result<bool> {
    Ok(f.is_embedding(sub.poset(), frame.poset()) && is_frame_morphism(f, sub, frame, limits)?)
}

/// The subframe on `keep` if the inclusion of `keep` with the traced
/// structure is a generated subframe; the traced structure is the only
/// candidate, since the inclusion must reflect every neighbourhood.
pub fn subframe_on(frame: &Frame, keep: Mask, limits: &Limits) -> Result<Option<(Frame, PosetMap)>> {
    if keep == 0 || !frame.poset().is_upset(keep) {
        return Ok(None);
    }
    match restrict(frame, keep) {
        Some((sub, inc)) if generated_subframe_check(&inc, &sub, frame, limits)? => Ok(Some((sub, inc))),
        _ => Ok(None),
    }
}

/// Every generated subframe carried by a non-empty subset of states.
pub fn generated_subframes(frame: &Frame, limits: &Limits) -> Result<Vec<(Mask, Frame, PosetMap)>> {
    let mut out = Vec::new();
    for keep in frame.poset().upsets(limits)? {
        if let Some((sub, inc)) = subframe_on(frame, keep, limits)? {
            out.push((keep, sub, inc));
        }
    }
    Ok(out)
}

/// Surjective frame morphism.
pub fn p_morphic_image_check(f: &PosetMap, x: &Frame, y: &Frame, limits: &Limits) -> Result<bool> {
    Ok(f.is_surjective(y.size()) && is_frame_morphism(f, x, y, limits)?)
}

/// Result of a budgeted search for p-morphic images.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ImageSearch {
    /// Candidate index and the first surjective morphism found onto it.
    pub found: Vec<(usize, PosetMap)>,
    /// Maps examined.
    pub maps_tried: u128,
    /// The budget ran out before every candidate was settled.
    pub partial: bool,
}

/// Scans candidates in order, and for each the maps in lexicographic order,
/// for a surjective frame morphism from `x`.
pub fn find_p_morphic_images(x: &Frame, candidates: &[Frame], budget: u128, limits: &Limits) -> Result<ImageSearch> {
    let mut found = Vec::new();
    let mut tried = 0u128;
    for (i, y) in candidates.iter().enumerate() {
        if y.kind() != x.kind() || y.size() > x.size() || y.size() == 0 {
            continue;
        }
        for f in PosetMap::all_maps(x.size(), y.size()) {
            if tried >= budget {
                return Ok(ImageSearch {
                    found,
                    maps_tried: tried,
                    partial: true,
                });
            }
            tried += 1;
            if f.is_surjective(y.size())
                && f.is_p_morphism(x.poset(), y.poset())
                && is_frame_morphism(&f, x, y, limits)?
            {
                found.push((i, f));
                break;
            }
        }
    }
    Ok(ImageSearch {
        found,
        maps_tried: tried,
        partial: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn lim() -> Limits {
        Limits::default()
    }

    /// C2 with R = {(0,1), (1,1)}.
    fn b1() -> Frame {
        Frame::new_box(Poset::chain(2), &[(0, 1), (1, 1)]).unwrap()
    }

    #[test]
    fn box_condition_examples() {
        assert!(Frame::new_box(Poset::chain(2), &[(0, 1), (1, 1)]).is_ok());
        let err = Frame::new_box(Poset::chain(2), &[(1, 1)]).unwrap_err();
        assert_eq!(err, Error::condition("x <= y R z implies x R z", vec![0, 1, 1]));
        assert!(Frame::new_box(Poset::chain(2), &[]).is_ok());
    }

    #[test]
    fn si_condition_examples() {
        let err = Frame::new_si(Poset::chain(2), &[(1, 0)]).unwrap_err();
        assert_eq!(err, Error::condition("x <= y R_s z implies x R_s z", vec![0, 1, 0]));
        // R_s need not be up-closed in its second argument
        assert!(Frame::new_si(Poset::chain(2), &[(0, 0), (1, 0)]).is_ok());
    }

    #[test]
    fn im_and_cin_conditions() {
        let c2 = Poset::chain(2);
        // N(0) = {{1},{0,1}} but N(1) = ∅ violates monotonicity
        let err = Frame::new_im(c2.clone(), vec![vec![0b10, 0b11], vec![]], &lim()).unwrap_err();
        assert!(matches!(err, Error::FrameCondition { .. }));
        let err = Frame::new_im(c2.clone(), vec![vec![0b10], vec![0b10]], &lim()).unwrap_err();
        assert!(matches!(err, Error::FrameCondition { ref condition, .. } if condition.contains("closed")));
        let err = Frame::new_im(c2.clone(), vec![vec![0b01, 0b11], vec![0b01, 0b11]], &lim()).unwrap_err();
        assert!(matches!(err, Error::FrameCondition { ref condition, .. } if condition.contains("upset")));
        assert!(Frame::new_im(c2.clone(), vec![vec![], vec![0b11]], &lim()).is_ok());
        // cin: N◇ must shrink going up
        let err = Frame::new_cin(c2.clone(), vec![vec![], vec![]], vec![vec![], vec![0b01]], &lim()).unwrap_err();
        assert!(matches!(err, Error::FrameCondition { .. }));
        assert!(Frame::new_cin(c2, vec![vec![0b01], vec![0b01]], vec![vec![0b01], vec![]], &lim()).is_ok());
    }

    #[test]
    fn box_model_examples() {
        let v = Valuation::new().with("p", 0b10);
        let f = b1();
        let boxp = parse("box p", Kind::Box).unwrap();
        assert!(satisfies(&f, &v, 0, &boxp).unwrap());
        let p = parse("p", Kind::Box).unwrap();
        assert!(!satisfies(&f, &v, 0, &p).unwrap());
        assert!(satisfies(&f, &v, 1, &p).unwrap());
        assert_eq!(truth_set(&f, &v, &parse("p -> F", Kind::Box).unwrap()).unwrap(), 0);
        assert_eq!(
            truth_set(&f, &v, &parse("q", Kind::Box).unwrap()),
            Err(Error::MissingLetter("q".into()))
        );
        assert!(matches!(
            truth_set(&f, &v, &parse("tri p", Kind::Im).unwrap()),
            Err(Error::Signature { .. })
        ));
    }

    #[test]
    fn cin_point_example() {
        let f = Frame::new_cin(Poset::discrete(1), vec![vec![]], vec![vec![]], &lim()).unwrap();
        let v = Valuation::new();
        assert!(!satisfies(&f, &v, 0, &parse("box T", Kind::Cin).unwrap()).unwrap());
        assert!(satisfies(&f, &v, 0, &parse("dia T", Kind::Cin).unwrap()).unwrap());
        let ax = parse("box T <-> T", Kind::Cin).unwrap();
        assert!(!frame_validates(&f, &ax, &lim()).unwrap().valid);
    }

    #[test]
    fn validity_examples() {
        let f = b1();
        for text in ["box T <-> T", "box p & box q <-> box (p & q)"] {
            assert!(frame_validates(&f, &parse(text, Kind::Box).unwrap(), &lim()).unwrap().valid);
        }
        let empty = Frame::new_box(Poset::chain(2), &[]).unwrap();
        assert!(frame_validates(&empty, &Formula::nec(Formula::Bot), &lim()).unwrap().valid);
        // □p → p: V(p) = ∅ is fine, V(p) = {1} refutes it at 0
        let t = frame_validates(&f, &parse("box p -> p", Kind::Box).unwrap(), &lim()).unwrap();
        assert!(!t.valid);
        let (v, x) = t.counterexample.unwrap();
        assert_eq!(v.get("p").unwrap(), 0b10);
        assert_eq!(x, 0);
    }

    #[test]
    fn functor_action_examples() {
        let c2 = Poset::chain(2);
        let id = PosetMap::identity(2);
        for a in c2.upsets(&lim()).unwrap() {
            assert_eq!(
                functor_action(Kind::Box, &id, &c2, &c2, &TValue::Upset(a), &lim()).unwrap(),
                TValue::Upset(a)
            );
        }
        let pt = Poset::discrete(1);
        let k = PosetMap::constant(2, 0);
        // M f (W) = {a' ∈ Up(point) | f⁻¹(a') ∈ W}; W = ↑{{1}} contains f⁻¹({0}) = {0,1}
        let w = TValue::Family(vec![0b10]);
        assert_eq!(
            functor_action(Kind::Im, &k, &c2, &pt, &w, &lim()).unwrap(),
            TValue::Family(vec![0b1])
        );
        let w = TValue::Family(vec![0b00]);
        assert_eq!(
            functor_action(Kind::Im, &k, &c2, &pt, &w, &lim()).unwrap(),
            TValue::Family(vec![0b0])
        );
        assert_eq!(
            functor_action(Kind::Si, &k, &c2, &pt, &TValue::Subset(0b01), &lim()).unwrap(),
            TValue::Subset(0b1)
        );
        assert_eq!(
            functor_action(Kind::Si, &k, &c2, &pt, &TValue::Subset(0), &lim()).unwrap(),
            TValue::Subset(0)
        );
    }

    #[test]
    fn disjoint_union_examples() {
        let (u, inj) = disjoint_union(&[b1(), b1()], &lim()).unwrap();
        assert_eq!(u.size(), 4);
        assert_eq!(u.successors(0), 0b0010);
        assert_eq!(u.successors(2), 0b1000);
        for i in &inj {
            assert!(is_frame_morphism(i, &b1(), &u, &lim()).unwrap());
        }
        let (one, _) = disjoint_union(&[b1()], &lim()).unwrap();
        assert_eq!(one, b1());
    }

    #[test]
    fn generated_subframe_examples() {
        let (sub, inc) = generate_subframe(&b1(), 0b10).unwrap();
        assert_eq!(sub.size(), 1);
        assert_eq!(sub.successors(0), 0b1);
        assert_eq!(inc.0, vec![1]);
        assert!(generated_subframe_check(&inc, &sub, &b1(), &lim()).unwrap());
        let (whole, _) = generate_subframe(&b1(), 0b01).unwrap();
        assert_eq!(whole, b1());
        let im = Frame::new_im(Poset::discrete(1), vec![vec![1]], &lim()).unwrap();
        assert!(matches!(generate_subframe(&im, 1), Err(Error::Unsupported { .. })));
    }

    #[test]
    fn image_examples() {
        let pt = Frame::new_box(Poset::discrete(1), &[(0, 0)]).unwrap();
        let k = PosetMap::constant(2, 0);
        assert!(p_morphic_image_check(&k, &b1(), &pt, &lim()).unwrap());
        assert!(p_morphic_image_check(&PosetMap::identity(2), &b1(), &b1(), &lim()).unwrap());
        let found = find_p_morphic_images(&b1(), &[b1(), pt], 1000, &lim()).unwrap();
        assert_eq!(found.found.len(), 2);
        assert!(!found.partial);
        let cut = find_p_morphic_images(&b1(), &[b1(), Frame::new_box(Poset::discrete(1), &[(0, 0)]).unwrap()], 1, &lim()).unwrap();
        assert!(cut.partial);
    }

    #[test]
    fn certificates_identify_relabellings() {
        let f = Frame::new_box(Poset::new(3, &[(0, 1)]).unwrap(), &[(2, 2), (0, 1), (1, 1)]).unwrap();
        let g = f.relabel(&[2, 0, 1]);
        assert_ne!(f, g);
        assert_eq!(f.certificate(), g.certificate());
        assert_ne!(f.certificate(), b1().certificate());
    }
}
