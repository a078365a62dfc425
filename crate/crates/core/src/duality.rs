//! Prime filter extensions. Prime filters of `L A` are represented by their
//! generator traces; on top of these sit `ρ♭`, the right inverses `τ` and
//! `σ`, dual frames of modal algebras and the extensions of frames and
//! models. A free distributive lattice oracle certifies the trace
//! representation on small algebras.

use std::collections::{BTreeMap, BTreeSet};

use crate::algebra::{self, ModalAlgebra, Ops};
use crate::bits::{self, BitSet, Mask};
use crate::error::{Error, Result};
use crate::frame::{self, antichain_has, family_has, minimal_elements, Family, Frame, Model, Structure, TValue, Valuation};
use crate::lattice::{self, FinDL, FinHA, Spectrum};
use crate::limits::Limits;
use crate::order::{Poset, PosetMap};
use crate::syntax::{self, Formula, Kind, Modality};

/// A prime filter `Q` of `L A` by the generators it contains: `{a | □̇a ∈ Q}`
/// for box, `{a | ▽̇a ∈ Q}` for im, and the `□̇` and `◇̇` traces for cin.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum LDualPoint {
    Box(BitSet),
    Im(BitSet),
    Cin(BitSet, BitSet),
}

impl LDualPoint {
    pub fn kind(&self) -> Kind {
        match self {
            LDualPoint::Box(_) => Kind::Box,
            LDualPoint::Im(_) => Kind::Im,
            LDualPoint::Cin(..) => Kind::Cin,
        }
    }

    /// Inclusion of the prime filters, i.e. of the traces.
    pub fn leq(&self, other: &LDualPoint) -> bool {
        match (self, other) {
            (LDualPoint::Box(a), LDualPoint::Box(b)) | (LDualPoint::Im(a), LDualPoint::Im(b)) => a.is_subset(b),
            (LDualPoint::Cin(a1, a2), LDualPoint::Cin(b1, b2)) => a1.is_subset(b1) && a2.is_subset(b2),
            _ => false,
        }
    }

    /// The trace of `{c ∈ L A | L h (c) ∈ Q}` for `h : A → B` and `Q` over `B`.
    pub fn pull_back(&self, h: &[usize]) -> LDualPoint {
        let pull = |s: &BitSet| BitSet::from_indices(h.len(), (0..h.len()).filter(|&a| s.contains(h[a])));
        match self {
            LDualPoint::Box(s) => LDualPoint::Box(pull(s)),
            LDualPoint::Im(s) => LDualPoint::Im(pull(s)),
            LDualPoint::Cin(s, t) => LDualPoint::Cin(pull(s), pull(t)),
        }
    }
}

/// Which right inverse of `ρ♭` builds the dual structure.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum Variant {
    #[default]
    Tau,
    /// Only defined for im.
    Sigma,
}

/// `pf′ A` for a finite Heyting algebra together with `θ′`.
#[derive(Clone, Debug)]
pub struct DualSpace<'a> {
    pub ha: &'a FinHA,
    pub spectrum: Spectrum,
}

impl<'a> DualSpace<'a> {
    pub fn new(ha: &'a FinHA, limits: &Limits) -> Result<DualSpace<'a>> {
        let spectrum = lattice::prime_filters(ha.lattice(), limits)?;
        Ok(DualSpace { ha, spectrum })
    }

    pub fn poset(&self) -> &Poset {
        &self.spectrum.poset
    }

    #[inline]
    pub fn theta(&self, a: usize) -> Mask {
        self.spectrum.theta(a)
    }

    fn all(&self) -> Mask {
        self.spectrum.all()
    }

    fn elements(&self) -> std::ops::Range<usize> {
        0..self.ha.size()
    }

    fn trace(&self, pred: impl Fn(usize) -> bool) -> BitSet {
        BitSet::from_indices(self.ha.size(), self.elements().filter(|&a| pred(a)))
    }

    fn cin_guard(&self) -> Result<()> {
        if self.spectrum.len() > 6 {
            return Err(Error::guard("cin dual points", self.spectrum.len() as u128, 6));
        }
        Ok(())
    }

    /// `ρ♭`: box `{a | D ⊆ θ′(a)}`, im `{a | θ′(a) ∈ W}`, cin
    /// `({a | θ′(a) ∈ W₁}, {a | pf′A ∖ θ′(a) ∉ W₂})`.
    pub fn rho_flat(&self, t: &TValue) -> Result<LDualPoint> {
        let all = self.all();
        Ok(match t {
            TValue::Upset(d) => LDualPoint::Box(self.trace(|a| bits::subset(*d, self.theta(a)))),
            TValue::Family(w) => LDualPoint::Im(self.trace(|a| antichain_has(w, self.theta(a)))),
            TValue::Pair(w1, w2) => LDualPoint::Cin(
                self.trace(|a| family_has(*w1, self.theta(a))),
                self.trace(|a| !family_has(*w2, all & !self.theta(a))),
            ),
            TValue::Subset(_) => {
                return Err(Error::Unsupported {
                    kind: Kind::Si,
                    reason: "no dual of the strict implication functor",
                })
            }
        })
    }

    /// `τ(Q)`. For im the three clauses are evaluated as stated and the
    /// image and closed clauses must agree where both apply.
    pub fn tau(&self, q: &LDualPoint, limits: &Limits) -> Result<TValue> {
        let all = self.all();
        Ok(match q {
            LDualPoint::Box(f) => TValue::Upset(f.iter().fold(all, |acc, a| acc & self.theta(a))),
            LDualPoint::Im(g) => {
                let closed_clause =
                    |d: Mask| self.elements().all(|a| !bits::subset(d, self.theta(a)) || g.contains(a));
                let ups = self.poset().upsets(limits)?;
                let closed: Vec<Mask> = ups
                    .iter()
                    .copied()
                    .filter(|&d| lattice::is_closed_upset(&self.spectrum, d))
                    .collect();
                let mut members = Vec::new();
                for &d in &ups {
                    let by_image = self.spectrum.theta_preimage(d).map(|a| g.contains(a));
                    let by_closed = closed.contains(&d).then(|| closed_clause(d));
                    let member = match (by_image, by_closed) {
                        (Some(x), Some(y)) if x != y => {
                            return Err(Error::Incoherent(format!(
                                "tau image clause says {x}, closed clause says {y} at {d:#b}"
                            )))
                        }
                        (Some(x), _) | (None, Some(x)) => x,
                        (None, None) => closed
                            .iter()
                            .any(|&c| bits::subset(c, d) && closed_clause(c)),
                    };
                    if member {
                        members.push(d);
                    }
                }
                TValue::Family(minimal_elements(members))
            }
            LDualPoint::Cin(s, t) => {
                self.cin_guard()?;
                let w1 = s.iter().fold(0, |acc: Family, a| acc | bits::bit(self.theta(a) as usize));
                let w2 = self
                    .elements()
                    .filter(|&a| !t.contains(a))
                    .fold(0, |acc: Family, a| acc | bits::bit((all & !self.theta(a)) as usize));
                TValue::Pair(w1, w2)
            }
        })
    }

    /// `σ(Q)` for im: an open `D` is a member iff some `θ′(a) ⊆ D` has
    /// `▽̇a ∈ Q`; any other `D` iff all its open supersets are.
    pub fn sigma(&self, q: &LDualPoint, limits: &Limits) -> Result<TValue> {
        let LDualPoint::Im(g) = q else {
            return Err(Error::Unsupported {
                kind: q.kind(),
                reason: "sigma is defined for im only",
            });
        };
        let open_clause = |d: Mask| g.iter().any(|a| bits::subset(self.theta(a), d));
        let ups = self.poset().upsets(limits)?;
        let open: Vec<Mask> = ups
            .iter()
            .copied()
            .filter(|&d| lattice::is_open_upset(&self.spectrum, d))
            .collect();
        let members = ups.iter().copied().filter(|&d| {
            if open.contains(&d) {
                open_clause(d)
            } else {
                open.iter().filter(|&&e| bits::subset(d, e)).all(|&e| open_clause(e))
            }
        });
        Ok(TValue::Family(minimal_elements(members.collect::<Vec<_>>())))
    }

    pub fn right_inverse(&self, variant: Variant, q: &LDualPoint, limits: &Limits) -> Result<TValue> {
        match variant {
            Variant::Tau => self.tau(q, limits),
            Variant::Sigma => self.sigma(q, limits),
        }
    }
}

/// Every prime filter of `L A` as a generator trace, in a fixed order: box
/// by the generating element of the filter, im by upset mask, cin
/// lexicographically by the two masks.
pub fn l_dual_points(kind: Kind, ha: &FinHA, limits: &Limits) -> Result<Vec<LDualPoint>> {
    let n = ha.size();
    match kind {
        Kind::Box => Ok((0..n).map(|a| LDualPoint::Box(ha.lattice().principal_filter(a))).collect()),
        Kind::Im => {
            if n > 64 {
                return Err(Error::guard("algebra as a poset", n as u128, 64));
            }
            let order = Poset::from_leq(n, |a, b| ha.leq(a, b))?;
            Ok(order
                .upsets(limits)?
                .into_iter()
                .map(|u| LDualPoint::Im(BitSet::from_indices(n, bits::members(u))))
                .collect())
        }
        Kind::Cin => {
            let count = 1u128 << (2 * n).min(127);
            limits.check("cin dual points", count, limits.max_universe)?;
            let subsets: Vec<BitSet> = (0..1u64 << n)
                .map(|m| BitSet::from_indices(n, bits::members(m)))
                .collect();
            Ok(subsets
                .iter()
                .flat_map(|s| subsets.iter().map(move |t| LDualPoint::Cin(s.clone(), t.clone())))
                .collect())
        }
        Kind::Si => Err(Error::Unsupported {
            kind,
            reason: "no dual of the strict implication functor",
        }),
    }
}

/// The trace of `(pf α)(q) = α⁻¹(q)` for a prime filter `q` of the base algebra.
pub fn trace_of(alg: &ModalAlgebra, q: &BitSet) -> Result<LDualPoint> {
    let n = alg.size();
    let pick = |m: Modality| BitSet::from_indices(n, (0..n).filter(|&a| q.contains(alg.apply(m, a, 0))));
    Ok(match alg.kind() {
        Kind::Box => LDualPoint::Box(pick(Modality::Box)),
        Kind::Im => LDualPoint::Im(pick(Modality::Tri)),
        Kind::Cin => LDualPoint::Cin(pick(Modality::Box), pick(Modality::Dia)),
        Kind::Si => {
            return Err(Error::Unsupported {
                kind: Kind::Si,
                reason: "no dual of the strict implication functor",
            })
        }
    })
}

/// `A_τ` (or `A_σ`): prime filters of the base algebra with the structure
/// obtained by applying the right inverse to each trace.
pub fn dual_frame(alg: &ModalAlgebra, limits: &Limits) -> Result<(Frame, Spectrum)> {
    dual_frame_with(alg, Variant::Tau, limits)
}

pub fn dual_frame_with(alg: &ModalAlgebra, variant: Variant, limits: &Limits) -> Result<(Frame, Spectrum)> {
    if alg.kind() == Kind::Si {
        return Err(Error::Unsupported {
            kind: Kind::Si,
            reason: "the dual frame of a strict implication algebra is not defined",
        });
    }
    if variant == Variant::Sigma && alg.kind() != Kind::Im {
        return Err(Error::Unsupported {
            kind: alg.kind(),
            reason: "sigma is defined for im only",
        });
    }
    let space = DualSpace::new(alg.ha(), limits)?;
    let values = space
        .spectrum
        .filters
        .iter()
        .map(|q| space.right_inverse(variant, &trace_of(alg, q)?, limits))
        .collect::<Result<Vec<_>>>()?;
    let structure = match alg.kind() {
        Kind::Box => Structure::Box(values.into_iter().map(|v| expect_upset(&v)).collect()),
        Kind::Im => Structure::Im(
            values
                .into_iter()
                .map(|v| match v {
                    TValue::Family(w) => w,
                    _ => unreachable!(),
                })
                .collect(),
        ),
        Kind::Cin => Structure::Cin(
            values
                .into_iter()
                .map(|v| match v {
                    TValue::Pair(a, b) => (a, b),
                    _ => unreachable!(),
                })
                .collect(),
        ),
        Kind::Si => unreachable!(),
    };
    let frame = Frame::new(space.spectrum.poset.clone(), structure)?;
    Ok((frame, space.spectrum))
}

fn expect_upset(v: &TValue) -> Mask {
    match v {
        TValue::Upset(d) => *d,
        _ => unreachable!(),
    }
}

/// A prime filter extension with the data connecting it to the frame.
#[derive(Clone, Debug)]
pub struct Extension {
    pub frame: Frame,
    /// `η(x) = {a | x ∈ a}` as a map into the extension.
    pub eta: PosetMap,
    pub algebra: ModalAlgebra,
    pub spectrum: Spectrum,
}

impl Extension {
    /// `θ′(a)` for an upset `a` of the original frame.
    pub fn theta_prime(&self, a: Mask) -> Option<Mask> {
        let sets = self.algebra.sets()?;
        sets.binary_search(&a).ok().map(|i| self.spectrum.theta(i))
    }
}

/// `pe 𝕏 = (𝕏⁺)_τ`; for si the structure is
/// `p R q ⟺ ∀a, b. a ⊰ b ∈ p ∧ a ∈ q ⇒ b ∈ q`.
pub fn pfe(x: &Frame, limits: &Limits) -> Result<Extension> {
    pfe_with(x, Variant::Tau, limits)
}

pub fn pfe_with(x: &Frame, variant: Variant, limits: &Limits) -> Result<Extension> {
    let alg = algebra::complex_algebra(x, limits)?;
    let (frame, spectrum) = if x.kind() == Kind::Si {
        if variant == Variant::Sigma {
            return Err(Error::Unsupported {
                kind: Kind::Si,
                reason: "sigma is defined for im only",
            });
        }
        si_extension(&alg, limits)?
    } else {
        dual_frame_with(&alg, variant, limits)?
    };
    let sets = alg.sets().expect("complex algebra");
    let eta = (0..x.size())
        .map(|s| {
            let filter = BitSet::from_indices(sets.len(), (0..sets.len()).filter(|&i| bits::has(sets[i], s)));
            spectrum
                .position(&filter)
                .ok_or_else(|| Error::Incoherent(format!("eta({s}) is not a prime filter")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Extension {
        frame,
        eta: PosetMap(eta),
        algebra: alg,
        spectrum,
    })
}

fn si_extension(alg: &ModalAlgebra, limits: &Limits) -> Result<(Frame, Spectrum)> {
    let spectrum = lattice::prime_filters(alg.ha().lattice(), limits)?;
    let n = alg.size();
    let k = spectrum.len();
    let rows = (0..k)
        .map(|p| {
            let fp = &spectrum.filters[p];
            (0..k)
                .filter(|&q| {
                    let fq = &spectrum.filters[q];
                    (0..n).all(|a| {
                        !fq.contains(a)
                            || (0..n).all(|b| !fp.contains(alg.apply(Modality::Sto, a, b)) || fq.contains(b))
                    })
                })
                .fold(0, |acc, q| acc | bits::bit(q))
        })
        .collect();
    let frame = Frame::new(spectrum.poset.clone(), Structure::Si(rows))?;
    Ok((frame, spectrum))
}

/// `pe 𝕄` with `V^pe(p) = θ′(V(p))`.
pub fn pfe_model(m: &Model, limits: &Limits) -> Result<(Model, Extension)> {
    pfe_model_with(m, Variant::Tau, limits)
}

pub fn pfe_model_with(m: &Model, variant: Variant, limits: &Limits) -> Result<(Model, Extension)> {
    let ext = pfe_with(&m.frame, variant, limits)?;
    let mut v = Valuation::new();
    for (p, &a) in &m.valuation.0 {
        let t = ext
            .theta_prime(a)
            .ok_or_else(|| Error::input(format!("valuation.{p}"), "not an upset"))?;
        v = v.with(p, t);
    }
    let model = Model::new(ext.frame.clone(), v)?;
    Ok((model, ext))
}

/// Whether every `□`-neighbourhood is an upset and every `◇`-neighbourhood
/// a downset. Other kinds always qualify.
pub fn is_upset_normal(x: &Frame) -> bool {
    x == &upset_normal_form(x)
}

/// For cin frames, keep only the `□`-neighbourhoods that are upsets and the
/// `◇`-neighbourhoods that are downsets; the modal operators on upsets are
/// unchanged. Other kinds are returned as they are.
pub fn upset_normal_form(x: &Frame) -> Frame {
    let Structure::Cin(pairs) = x.structure() else {
        return x.clone();
    };
    let p = x.poset();
    let subsets = 0..1u64 << x.size();
    let ups: Family = subsets.clone().filter(|&s| p.is_upset(s)).fold(0, |acc, s| acc | bits::bit(s as usize));
    let downs: Family = subsets.filter(|&s| p.is_downset(s)).fold(0, |acc, s| acc | bits::bit(s as usize));
    let pairs = pairs.iter().map(|&(b, d)| (b & ups, d & downs)).collect();
    Frame::new(p.clone(), Structure::Cin(pairs)).expect("intersection keeps the monotonicity conditions")
}

/// `θ′ : A → (A_τ)⁺` as element indices, with the first failing
/// homomorphism condition if it is not a modal homomorphism.
pub fn theta_prime_morphism(
    alg: &ModalAlgebra,
    limits: &Limits,
) -> Result<(Vec<usize>, Option<algebra::HomFailure>)> {
    let (dual, spectrum) = dual_frame(alg, limits)?;
    let target = algebra::complex_algebra(&dual, limits)?;
    let sets = target.sets().expect("complex algebra");
    let h = (0..alg.size())
        .map(|a| {
            sets.binary_search(&spectrum.theta(a))
                .map_err(|_| Error::Incoherent(format!("theta({a}) is not an upset of the dual")))
        })
        .collect::<Result<Vec<_>>>()?;
    let failure = algebra::homomorphism_failure(&h, alg, &target);
    Ok((h, failure))
}

pub fn check_theta_prime_morphism(alg: &ModalAlgebra, limits: &Limits) -> Result<bool> {
    Ok(theta_prime_morphism(alg, limits)?.1.is_none())
}

/// `h⁻¹ : pf′B → pf′A` for a Heyting homomorphism `h : A → B`.
pub fn inverse_image_map(h: &[usize], a: &DualSpace, b: &DualSpace) -> Result<PosetMap> {
    b.spectrum
        .filters
        .iter()
        .map(|p| {
            let pulled = BitSet::from_indices(h.len(), (0..h.len()).filter(|&x| p.contains(h[x])));
            a.spectrum
                .position(&pulled)
                .ok_or_else(|| Error::Incoherent("inverse image of a prime filter is not prime".into()))
        })
        .collect::<Result<Vec<_>>>()
        .map(PosetMap)
}

/// `T(h⁻¹) ∘ τ_B = τ_A ∘ pf(L h)` checked on every point of
/// `l_dual_points(B)`; returns the first point where the square fails.
pub fn tau_naturality_failure(
    h: &[usize],
    a: &ModalAlgebra,
    b: &ModalAlgebra,
    variant: Variant,
    limits: &Limits,
) -> Result<Option<LDualPoint>> {
    if a.kind() != b.kind() {
        return Err(Error::KindMismatch {
            expected: a.kind(),
            found: b.kind(),
        });
    }
    let kind = a.kind();
    let sa = DualSpace::new(a.ha(), limits)?;
    let sb = DualSpace::new(b.ha(), limits)?;
    let f = inverse_image_map(h, &sa, &sb)?;
    for q in l_dual_points(kind, b.ha(), limits)? {
        let lhs = sa.right_inverse(variant, &q.pull_back(h), limits)?;
        let tb = sb.right_inverse(variant, &q, limits)?;
        let rhs = frame::functor_action(kind, &f, sb.poset(), sa.poset(), &tb, limits)?;
        if lhs != rhs {
            return Ok(Some(q));
        }
    }
    Ok(None)
}

pub fn check_tau_naturality(h: &[usize], a: &ModalAlgebra, b: &ModalAlgebra, limits: &Limits) -> Result<bool> {
    Ok(tau_naturality_failure(h, a, b, Variant::Tau, limits)?.is_none())
}

/// First point of `l_dual_points` where `ρ♭` fails to undo the right inverse.
pub fn right_inverse_failure(kind: Kind, ha: &FinHA, variant: Variant, limits: &Limits) -> Result<Option<LDualPoint>> {
    let space = DualSpace::new(ha, limits)?;
    for q in l_dual_points(kind, ha, limits)? {
        let t = space.right_inverse(variant, &q, limits)?;
        if space.rho_flat(&t)? != q {
            return Ok(Some(q));
        }
    }
    Ok(None)
}

// ------------------------------------------------------------------ oracle

/// `L A` built as the sublattice of `2^V` generated by the generator
/// vectors, where `V` is the set of two-valued generator assignments that
/// satisfy the signature's stock rank-1 axioms.
#[derive(Clone, Debug)]
pub struct FreeDLOracle {
    pub kind: Kind,
    /// The generated sublattice of `2^V` with its elements, when it fits
    /// under `max_algebra`.
    pub lattice: Option<(FinDL, Vec<Mask>)>,
    /// Generator assignments, each as the set of generators it makes true.
    pub valuations: Vec<BitSet>,
    algebra_size: usize,
    /// Valuations making each generator true: `□̇a` (or `▽̇a`) at `a`, cin
    /// `◇̇a` at `|A| + a`.
    vectors: Vec<Mask>,
}

impl FreeDLOracle {
    /// Caps on `|A|`: box 8, im 4, cin 3.
    pub fn new(kind: Kind, ha: &FinHA, limits: &Limits) -> Result<FreeDLOracle> {
        let n = ha.size();
        let cap: usize = match kind {
            Kind::Box => 8,
            Kind::Im => 4,
            Kind::Cin => 3,
            Kind::Si => {
                return Err(Error::Unsupported {
                    kind,
                    reason: "no dual of the strict implication functor",
                })
            }
        };
        if n > cap {
            return Err(Error::guard("free lattice oracle", n as u128, cap as u128));
        }
        let gens = if kind == Kind::Cin { 2 * n } else { n };
        let axioms = syntax::stock_axioms(kind);
        let valuations: Vec<BitSet> = (0..1u64 << gens)
            .map(|m| BitSet::from_indices(gens, bits::members(m)))
            .filter(|v| axioms.iter().all(|ax| respects(kind, ha, v, &ax.lhs, &ax.rhs)))
            .collect();
        if valuations.len() > 64 {
            return Err(Error::guard("oracle valuations", valuations.len() as u128, 64));
        }
        let vectors: Vec<Mask> = (0..gens)
            .map(|g| {
                (0..valuations.len())
                    .filter(|&i| valuations[i].contains(g))
                    .fold(0, |acc, i| acc | bits::bit(i))
            })
            .collect();
        let lattice = generated_sublattice(&vectors, valuations.len(), limits)?;
        Ok(FreeDLOracle {
            kind,
            lattice,
            valuations,
            algebra_size: n,
            vectors,
        })
    }

    /// Prime filters of the oracle lattice as generator traces, with their
    /// inclusion order.
    pub fn traces(&self, limits: &Limits) -> Result<(Vec<LDualPoint>, Poset)> {
        match &self.lattice {
            Some((lat, sorted)) => {
                let spectrum = lattice::prime_filters(lat, limits)?;
                let points = spectrum
                    .filters
                    .iter()
                    .map(|p| self.point(|g| p.contains(sorted.binary_search(&self.vectors[g]).expect("generator in lattice"))))
                    .collect();
                Ok((points, spectrum.poset))
            }
            None => self.point_traces(),
        }
    }

    /// Prime filters read off the valuations: in a finite sublattice of
    /// `2^V` every prime filter is `{x | v ∈ x}` for some `v ∈ V`, and
    /// `{x | v ∈ x} ⊆ {x | w ∈ x}` iff every generator true at `v` is true
    /// at `w`.
    pub fn point_traces(&self) -> Result<(Vec<LDualPoint>, Poset)> {
        let points: Vec<LDualPoint> = self.valuations.iter().map(|v| self.point(|g| v.contains(g))).collect();
        let poset = Poset::from_leq(points.len(), |i, j| self.valuations[i].is_subset(&self.valuations[j]))?;
        Ok((points, poset))
    }

    fn point(&self, holds: impl Fn(usize) -> bool) -> LDualPoint {
        let n = self.algebra_size;
        let part = |offset: usize| BitSet::from_indices(n, (0..n).filter(|&a| holds(offset + a)));
        match self.kind {
            Kind::Box => LDualPoint::Box(part(0)),
            Kind::Im => LDualPoint::Im(part(0)),
            _ => LDualPoint::Cin(part(0), part(n)),
        }
    }

    /// Whether `points` lists exactly the oracle's prime filters, with trace
    /// inclusion matching filter inclusion.
    pub fn matches(&self, points: &[LDualPoint], limits: &Limits) -> Result<bool> {
        let (traces, order) = self.traces(limits)?;
        let ours: BTreeMap<String, usize> = points.iter().enumerate().map(|(i, p)| (format!("{p:?}"), i)).collect();
        if ours.len() != points.len() || traces.len() != points.len() {
            return Ok(false);
        }
        if !traces.iter().all(|t| ours.contains_key(&format!("{t:?}"))) {
            return Ok(false);
        }
        for i in 0..traces.len() {
            for j in 0..traces.len() {
                if order.leq(i, j) != traces[i].leq(&traces[j]) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

fn generated_sublattice(vectors: &[Mask], width: usize, limits: &Limits) -> Result<Option<(FinDL, Vec<Mask>)>> {
    let mut sets: BTreeSet<Mask> = vectors.iter().copied().collect();
    sets.insert(0);
    sets.insert(bits::full(width));
    loop {
        let current: Vec<Mask> = sets.iter().copied().collect();
        let before = sets.len();
        for &x in &current {
            for &y in &current {
                sets.insert(x & y);
                sets.insert(x | y);
            }
        }
        if sets.len() == before {
            break;
        }
        if sets.len() > limits.max_algebra {
            return Ok(None);
        }
    }
    let sorted: Vec<Mask> = sets.into_iter().collect();
    let lattice = FinDL::from_sets(&sorted, limits)?;
    Ok(Some((lattice, sorted)))
}

/// Two-valued reading of a rank-1 axiom: modal atoms take the generator
/// value at their argument, computed in `A`, under every assignment of the
/// letters to elements of `A`.
fn respects(kind: Kind, ha: &FinHA, v: &BitSet, lhs: &Formula, rhs: &Formula) -> bool {
    let mut letters: Vec<String> = lhs.letters().into_iter().chain(rhs.letters()).collect();
    letters.sort();
    letters.dedup();
    let n = ha.size();
    let mut asg = vec![0usize; letters.len()];
    loop {
        let env: BTreeMap<&str, usize> = letters.iter().map(String::as_str).zip(asg.iter().copied()).collect();
        if outer(kind, ha, v, lhs, &env) != outer(kind, ha, v, rhs, &env) {
            return false;
        }
        let mut i = 0;
        while i < asg.len() {
            asg[i] += 1;
            if asg[i] < n {
                break;
            }
            asg[i] = 0;
            i += 1;
        }
        if i == asg.len() {
            return true;
        }
    }
}

fn outer(kind: Kind, ha: &FinHA, v: &BitSet, phi: &Formula, env: &BTreeMap<&str, usize>) -> bool {
    let n = ha.size();
    match phi {
        Formula::Top => true,
        Formula::Bot => false,
        Formula::And(a, b) => outer(kind, ha, v, a, env) && outer(kind, ha, v, b, env),
        Formula::Or(a, b) => outer(kind, ha, v, a, env) || outer(kind, ha, v, b, env),
        Formula::Box(a) | Formula::Tri(a) => v.contains(inner(ha, a, env)),
        Formula::Dia(a) if kind == Kind::Cin => v.contains(n + inner(ha, a, env)),
        _ => panic!("not a rank-1 outer formula: {phi}"),
    }
}

fn inner(ha: &FinHA, phi: &Formula, env: &BTreeMap<&str, usize>) -> usize {
    match phi {
        Formula::Top => ha.top(),
        Formula::Bot => ha.bottom(),
        Formula::Letter(p) => env[p.as_str()],
        Formula::And(a, b) => ha.meet(inner(ha, a, env), inner(ha, b, env)),
        Formula::Or(a, b) => ha.join(inner(ha, a, env), inner(ha, b, env)),
        Formula::Imp(a, b) => ha.imp(inner(ha, a, env), inner(ha, b, env)),
        _ => panic!("nested modality under a rank-1 modality: {phi}"),
    }
}

/// The two-element algebra whose operators are all the identity.
pub fn identity_two(kind: Kind) -> Result<ModalAlgebra> {
    let id = vec![0u16, 1];
    ModalAlgebra::two(match kind {
        Kind::Box => Ops::Box(id),
        Kind::Im => Ops::Tri(id),
        Kind::Cin => Ops::Cin { nec: id.clone(), pos: id },
        Kind::Si => Ops::Si(vec![1, 1, 0, 1]),
    })
}
