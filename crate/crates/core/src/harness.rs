//! Frame universes, axiomatic classes and closure audits, plus the
//! deterministic corpus shared by the property suites.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{self, Mask};
use crate::duality;
use crate::error::{Error, Result};
use crate::frame::{self, Family, Frame, Structure};
use crate::limits::Limits;
use crate::order::{enumerate_posets, Poset};
use crate::syntax::{enumerate_formulas, Formula, Kind};

/// Frames of one kind, one per isomorphism class, up to a size bound.
#[derive(Clone, Debug)]
pub struct Universe {
    pub kind: Kind,
    pub max_size: usize,
    pub frames: Vec<Frame>,
    /// Set when the frames are a sample rather than every class.
    pub sampled: bool,
    index: HashMap<Vec<u64>, usize>,
}

impl Universe {
    pub fn from_frames(kind: Kind, max_size: usize, frames: Vec<Frame>, sampled: bool) -> Result<Universe> {
        let mut u = Universe {
            kind,
            max_size,
            frames: Vec::new(),
            sampled,
            index: HashMap::new(),
        };
        for f in frames {
            if f.kind() != kind {
                return Err(Error::KindMismatch {
                    expected: kind,
                    found: f.kind(),
                });
            }
            u.insert(f);
        }
        Ok(u)
    }

    fn insert(&mut self, f: Frame) -> bool {
        let cert = f.certificate();
        if self.index.contains_key(&cert) {
            return false;
        }
        self.index.insert(cert, self.frames.len());
        self.frames.push(f);
        true
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Index of the member isomorphic to `f`.
    pub fn find(&self, f: &Frame) -> Option<usize> {
        if f.kind() != self.kind || f.size() > 8 {
            return None;
        }
        self.index.get(&f.certificate()).copied()
    }
}

/// Largest `n` accepted by [`build_universe`] per kind.
pub fn universe_cap(kind: Kind) -> usize {
    match kind {
        Kind::Box | Kind::Si => 4,
        Kind::Im | Kind::Cin => 3,
    }
}

/// Every frame of the kind on 1 to `n` states, up to isomorphism.
pub fn build_universe(kind: Kind, n: usize, limits: &Limits) -> Result<Universe> {
    limits.check("universe size", n as u128, universe_cap(kind) as u128)?;
    let mut u = Universe::from_frames(kind, n, Vec::new(), false)?;
    for m in 1..=n {
        for p in enumerate_posets(m, limits)? {
            let mut budget = limits.max_universe;
            frames_on(kind, &p, limits, &mut budget, &mut |f| {
                u.insert(f);
            })?;
        }
    }
    Ok(u)
}

fn spend(budget: &mut u128) -> Result<()> {
    if *budget == 0 {
        return Err(Error::guard("universe frames", u128::MAX, 0));
    }
    *budget -= 1;
    Ok(())
}

/// Calls `emit` on every frame of the kind on the poset `p`.
fn frames_on(kind: Kind, p: &Poset, limits: &Limits, budget: &mut u128, emit: &mut dyn FnMut(Frame)) -> Result<()> {
    let m = p.size();
    match kind {
        Kind::Box | Kind::Si => {
            // box relations are the upsets of P^op × P, si ones of P^op × |P|
            let second = if kind == Kind::Box { p.clone() } else { Poset::discrete(m) };
            let prod = Poset::product(&p.dual(), &second)?;
            let ups = prod.upsets(limits)?;
            for s in ups {
                spend(budget)?;
                let rows: Vec<Mask> = (0..m).map(|x| (s >> (x * m)) & bits::full(m)).collect();
                let st = if kind == Kind::Box { Structure::Box(rows) } else { Structure::Si(rows) };
                emit(Frame::new(p.clone(), st)?);
            }
        }
        Kind::Im => {
            let ups = p.upsets(limits)?;
            let lattice = Poset::from_leq(ups.len(), |i, j| bits::subset(ups[i], ups[j]))?;
            let families = lattice.upsets(limits)?;
            let mut choice = vec![0usize; m];
            assign(m, families.len(), &mut choice, 0, &|x, y, cx, cy| {
                // x ≤ y ⇒ N(x) ⊆ N(y)
                !p.leq(x, y) || bits::subset(families[cx], families[cy])
            }, &mut |choice| {
                spend(budget)?;
                let st = choice
                    .iter()
                    .map(|&c| bits::members(families[c]).map(|i| ups[i]).collect())
                    .collect();
                emit(Frame::new(p.clone(), Structure::Im(st))?);
                Ok(())
            })?;
        }
        Kind::Cin => {
            if m > 3 {
                return Err(Error::guard("cin universe states", m as u128, 3));
            }
            let per = 1usize << (1 << m);
            let raw = (per as u128).pow(2 * m as u32);
            limits.check("cin universe raw structures", raw, limits.max_universe)?;
            let pair = |c: usize| ((c / per) as Family, (c % per) as Family);
            let mut choice = vec![0usize; m];
            assign(m, per * per, &mut choice, 0, &|x, y, cx, cy| {
                let ((bx, dx), (by, dy)) = (pair(cx), pair(cy));
                !p.leq(x, y) || (bits::subset(bx, by) && bits::subset(dy, dx))
            }, &mut |choice| {
                spend(budget)?;
                let st = choice.iter().map(|&c| pair(c)).collect();
                emit(Frame::new(p.clone(), Structure::Cin(st))?);
                Ok(())
            })?;
        }
    }
    Ok(())
}

/// Backtracking over per-state choices in `0..options`, pruning with the
/// pairwise constraint `ok(x, y, choice_x, choice_y)` against earlier states.
fn assign(
    m: usize,
    options: usize,
    choice: &mut Vec<usize>,
    i: usize,
    ok: &dyn Fn(usize, usize, usize, usize) -> bool,
    visit: &mut dyn FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    if i == m {
        return visit(choice);
    }
    for c in 0..options {
        if (0..i).all(|j| ok(j, i, choice[j], c) && ok(i, j, c, choice[j])) {
            choice[i] = c;
            assign(m, options, choice, i + 1, ok, visit)?;
        }
    }
    Ok(())
}

/// A random poset on `n` points: random pairs `i < j` closed transitively.
pub fn random_poset(n: usize, rng: &mut ChaCha8Rng) -> Poset {
    let density = rng.gen_range(0.0..0.8);
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|_| rng.gen_bool(density))
        .collect();
    Poset::new(n, &pairs).expect("pairs respect the natural order")
}

/// `count` random frames on `n` states: a random poset and a random
/// structure closed under the kind's frame condition. Not deduplicated.
pub fn sample_frames(kind: Kind, n: usize, count: usize, seed: u64, limits: &Limits) -> Result<Vec<Frame>> {
    if kind == Kind::Cin && n > 6 {
        return Err(Error::guard("cin states", n as u128, 6));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 32) ^ kind as u64);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let p = random_poset(n, &mut rng);
        let density = rng.gen_range(0.05..0.7);
        let st = match kind {
            Kind::Box | Kind::Si => {
                let raw: Vec<Mask> = (0..n)
                    .map(|_| (0..n).filter(|_| rng.gen_bool(density)).fold(0, |acc, y| acc | bits::bit(y)))
                    .collect();
                let rows = (0..n)
                    .map(|x| {
                        let reach = bits::members(p.up(x)).fold(0, |acc, y| acc | raw[y]);
                        if kind == Kind::Box {
                            p.up_closure(reach)
                        } else {
                            reach
                        }
                    })
                    .collect();
                if kind == Kind::Box {
                    Structure::Box(rows)
                } else {
                    Structure::Si(rows)
                }
            }
            Kind::Im => {
                let ups = p.upsets(limits)?;
                let raw: Vec<Vec<Mask>> = (0..n)
                    .map(|_| ups.iter().copied().filter(|_| rng.gen_bool(density / 2.0)).collect())
                    .collect();
                Structure::Im(
                    (0..n)
                        .map(|x| bits::members(p.down(x)).flat_map(|y| raw[y].iter().copied()).collect())
                        .collect(),
                )
            }
            Kind::Cin => {
                let subsets = 1usize << n;
                let mut fam = |d: f64| {
                    (0..subsets).filter(|_| rng.gen_bool(d)).fold(0 as Family, |acc, s| acc | bits::bit(s))
                };
                let raw: Vec<(Family, Family)> = (0..n).map(|_| (fam(density / 2.0), fam(density / 2.0))).collect();
                Structure::Cin(
                    (0..n)
                        .map(|x| {
                            let b = bits::members(p.down(x)).fold(0, |acc, y| acc | raw[y].0);
                            let d = bits::members(p.up(x)).fold(0, |acc, y| acc | raw[y].1);
                            (b, d)
                        })
                        .collect(),
                )
            }
        };
        out.push(Frame::new(p, st)?);
    }
    Ok(out)
}

/// Indices of the frames of `u` validating every formula of `phis`.
pub fn fr_class(phis: &[Formula], u: &Universe, limits: &Limits) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, f) in u.frames.iter().enumerate() {
        if validates_all(f, phis, limits)?.is_none() {
            out.push(i);
        }
    }
    Ok(out)
}

/// The first formula of `phis` the frame refutes, with its counterexample.
fn validates_all(f: &Frame, phis: &[Formula], limits: &Limits) -> Result<Option<Witness>> {
    for phi in phis {
        let v = frame::frame_validates(f, phi, limits)?;
        if let Some((val, state)) = v.counterexample {
            return Ok(Some(Witness {
                frames: Vec::new(),
                formula: Some(phi.to_string()),
                valuation: Some(val.0.iter().map(|(p, &m)| (p.clone(), bits::members(m).collect())).collect()),
                state: Some(state),
                note: String::new(),
            }));
        }
    }
    Ok(None)
}

/// Evidence for a failed audit property.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Witness {
    /// Universe indices of the frames involved.
    pub frames: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valuation: Option<BTreeMap<String, Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<usize>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

/// One audited closure property.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct PropertyResult {
    pub property: String,
    pub passed: bool,
    /// Instances examined.
    pub checked: u64,
    /// The budget ran out before every instance was examined.
    pub partial: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct AuditReport {
    pub kind: Kind,
    pub max_size: usize,
    pub universe_size: usize,
    pub class_size: usize,
    pub axioms: Vec<String>,
    pub properties: Vec<PropertyResult>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.passed)
    }

    pub fn partial(&self) -> bool {
        self.properties.iter().any(|p| p.partial)
    }
}

/// Bounds for [`audit_closure`].
#[derive(Clone, Copy, Debug)]
pub struct AuditBudget {
    /// Maps examined per frame in the p-morphic image search.
    pub image_maps: u128,
    /// Disjoint unions are formed for pairs whose sizes add up to at most
    /// `max_size + union_extra`.
    pub union_extra: usize,
}

impl Default for AuditBudget {
    fn default() -> Self {
        AuditBudget {
            image_maps: 1 << 20,
            union_extra: 1,
        }
    }
}

struct Class<'a> {
    universe: &'a Universe,
    members: BTreeSet<usize>,
    axioms: Option<&'a [Formula]>,
}

impl Class<'_> {
    /// Membership up to isomorphism. Frames not found in the universe are
    /// members iff they validate the axioms; without axioms they are not.
    fn contains(&self, f: &Frame, limits: &Limits) -> Result<(bool, Option<Witness>)> {
        if f.size() <= self.universe.max_size {
            if let Some(i) = self.universe.find(f) {
                return Ok((self.members.contains(&i), None));
            }
        }
        match self.axioms {
            Some(phis) => {
                let w = validates_all(f, phis, limits)?;
                Ok((w.is_none(), w))
            }
            None => Ok((false, None)),
        }
    }
}

/// Audits `K` (indices into `u`) for closure under disjoint unions,
/// generated subframes and p-morphic images, and for closure under and
/// reflection of prime filter extensions. `axioms`, when given, decides
/// membership of frames outside the universe.
pub fn audit_closure(
    k: &[usize],
    u: &Universe,
    axioms: Option<&[Formula]>,
    budget: &AuditBudget,
    limits: &Limits,
) -> Result<AuditReport> {
    let class = Class {
        universe: u,
        members: k.iter().copied().collect(),
        axioms,
    };
    let members: Vec<usize> = class.members.iter().copied().collect();
    let mut properties = Vec::new();

    // disjoint unions of pairs
    let mut res = PropertyResult::new("disjoint_unions");
    'du: for (a, &i) in members.iter().enumerate() {
        for &j in &members[a..] {
            let (x, y) = (&u.frames[i], &u.frames[j]);
            if x.size() + y.size() > u.max_size + budget.union_extra {
                continue;
            }
            let (sum, _) = frame::disjoint_union(&[x.clone(), y.clone()], limits)?;
            res.checked += 1;
            let (inside, w) = class.contains(&sum, limits)?;
            if !inside {
                let mut w = w.unwrap_or_else(|| Witness::note("union lies outside the class"));
                w.frames = vec![i, j];
                res.fail(w);
                break 'du;
            }
        }
    }
    properties.push(res);

    // generated subframes
    let mut res = PropertyResult::new("generated_subframes");
    'gs: for &i in &members {
        for (keep, sub, _) in frame::generated_subframes(&u.frames[i], limits)? {
            res.checked += 1;
            let (inside, w) = class.contains(&sub, limits)?;
            if !inside {
                let mut w = w.unwrap_or_else(|| Witness::note("generated subframe lies outside the class"));
                w.frames = vec![i];
                w.note = format!("states {:?}: {}", bits::members(keep).collect::<Vec<_>>(), w.note);
                res.fail(w);
                break 'gs;
            }
        }
    }
    properties.push(res);

    // p-morphic images landing outside K
    let mut res = PropertyResult::new("p_morphic_images");
    let outside: Vec<usize> = (0..u.len()).filter(|i| !class.members.contains(i)).collect();
    let candidates: Vec<Frame> = outside.iter().map(|&i| u.frames[i].clone()).collect();
    for &i in &members {
        let search = frame::find_p_morphic_images(&u.frames[i], &candidates, budget.image_maps, limits)?;
        res.checked += search.maps_tried as u64;
        res.partial |= search.partial;
        if let Some((c, f)) = search.found.first() {
            let mut w = Witness::note(format!("surjective morphism {:?}", f.0));
            w.frames = vec![i, outside[*c]];
            res.fail(w);
            break;
        }
    }
    properties.push(res);

    // prime filter extensions, both directions
    let mut closure = PropertyResult::new("pfe_closure");
    let mut reflection = PropertyResult::new("pfe_reflection");
    if u.kind == Kind::Cin && u.frames.iter().any(|f| f.size() > 6) {
        return Err(Error::guard("cin states", 7, 6));
    }
    for (i, x) in u.frames.iter().enumerate() {
        let ext = duality::pfe(x, limits)?;
        let (pe_inside, _) = class.contains(&ext.frame, limits)?;
        let x_inside = class.members.contains(&i);
        if x_inside {
            closure.checked += 1;
            if !pe_inside && closure.passed {
                let mut w = Witness::note("extension lies outside the class");
                w.frames = vec![i];
                closure.fail(w);
            }
        }
        if pe_inside {
            reflection.checked += 1;
            if !x_inside && reflection.passed {
                let mut w = Witness::note("extension inside the class but the frame is not");
                w.frames = vec![i];
                reflection.fail(w);
            }
        }
    }
    properties.push(closure);
    properties.push(reflection);

    Ok(AuditReport {
        kind: u.kind,
        max_size: u.max_size,
        universe_size: u.len(),
        class_size: members.len(),
        axioms: axioms.map(|a| a.iter().map(|f| f.to_string()).collect()).unwrap_or_default(),
        properties,
    })
}

impl PropertyResult {
    fn new(property: &str) -> PropertyResult {
        PropertyResult {
            property: property.to_string(),
            passed: true,
            checked: 0,
            partial: false,
            witness: None,
        }
    }

    fn fail(&mut self, w: Witness) {
        self.passed = false;
        self.witness = Some(w);
    }
}

impl Witness {
    fn note(text: impl Into<String>) -> Witness {
        Witness {
            frames: Vec::new(),
            formula: None,
            valuation: None,
            state: None,
            note: text.into(),
        }
    }
}

/// The frames and formulas every property suite runs over.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub kind: Kind,
    pub frames: Vec<Frame>,
    pub formulas: Vec<Formula>,
}

/// Number of sampled cin frames per size beyond the exhaustive part.
pub const CIN_SAMPLES: [(usize, usize); 2] = [(2, 60), (3, 30)];

/// All frames of the kind on at most 3 states (cin: all on 1 state plus a
/// seeded sample on 2 and 3 states) and all formulas of depth at most 2
/// over `p`, `q`.
pub fn corpus(kind: Kind, seed: u64, limits: &Limits) -> Result<Corpus> {
    let frames = match kind {
        Kind::Cin => {
            let mut frames = build_universe(kind, 1, limits)?.frames;
            for (n, count) in CIN_SAMPLES {
                frames.extend(sample_frames(kind, n, count, seed, limits)?);
            }
            frames
        }
        _ => build_universe(kind, 3, limits)?.frames,
    };
    Ok(Corpus {
        kind,
        frames,
        formulas: enumerate_formulas(kind, &["p", "q"], 2),
    })
}
