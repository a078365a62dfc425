//! JSON readers and writers for frames, valuations, algebras and extension
//! results. Reader errors carry the JSON path of the offending value.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::algebra::{ModalAlgebra, Ops};
use crate::bits::{self, Mask};
use crate::error::{Error, Result};
use crate::frame::{Frame, Structure, Valuation};
use crate::lattice::{FinDL, FinHA};
use crate::limits::Limits;
use crate::order::{Poset, PosetMap};
use crate::syntax::Kind;

/// Wire form of a frame. `leq` lists generating pairs of the order; `rel`
/// is used by box and si frames; `nbhd` lists, per state, upsets whose
/// upward closure among upsets is `N(x)`; `nbox` and `ndia` list the
/// members of the cin neighbourhoods.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameJson {
    pub kind: Kind,
    pub size: usize,
    #[serde(default)]
    pub leq: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbhd: Option<Vec<Vec<Vec<usize>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbox: Option<Vec<Vec<Vec<usize>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ndia: Option<Vec<Vec<Vec<usize>>>>,
}

fn syntax_error(e: serde_json::Error) -> Error {
    Error::input("$", format!("{e}"))
}

fn pair(path: String, p: &[usize], n: usize) -> Result<(usize, usize)> {
    match p {
        [a, b] if *a < n && *b < n => Ok((*a, *b)),
        [_, _] => Err(Error::input(path, format!("state index out of range for {n} states"))),
        _ => Err(Error::input(path, "expected a pair [i, j]")),
    }
}

fn state_set(path: String, s: &[usize], n: usize) -> Result<Mask> {
    s.iter().enumerate().try_fold(0, |acc, (k, &x)| {
        if x < n {
            Ok(acc | bits::bit(x))
        } else {
            Err(Error::input(format!("{path}[{k}]"), format!("state {x} out of range for {n} states")))
        }
    })
}

fn families(path: &str, fams: &[Vec<Vec<usize>>], n: usize) -> Result<Vec<Vec<Mask>>> {
    if fams.len() != n {
        return Err(Error::input(path, format!("expected {n} entries, found {}", fams.len())));
    }
    fams.iter()
        .enumerate()
        .map(|(x, fam)| {
            fam.iter()
                .enumerate()
                .map(|(k, s)| state_set(format!("{path}[{x}][{k}]"), s, n))
                .collect()
        })
        .collect()
}

fn forbid<T>(field: &Option<T>, name: &str, kind: Kind) -> Result<()> {
    if field.is_some() {
        return Err(Error::input(format!("$.{name}"), format!("not used by {kind} frames")));
    }
    Ok(())
}

fn require<'a, T>(field: &'a Option<T>, name: &str, kind: Kind) -> Result<&'a T> {
    field
        .as_ref()
        .ok_or_else(|| Error::input(format!("$.{name}"), format!("required for {kind} frames")))
}

impl FrameJson {
    pub fn to_frame(&self, limits: &Limits) -> Result<Frame> {
        let n = self.size;
        if n == 0 || n > 64 {
            return Err(Error::input("$.size", "must be between 1 and 64"));
        }
        let leq = self
            .leq
            .iter()
            .enumerate()
            .map(|(i, p)| pair(format!("$.leq[{i}]"), p, n))
            .collect::<Result<Vec<_>>>()?;
        let poset = Poset::new(n, &leq).map_err(|e| Error::input("$.leq", e.to_string()))?;
        let kind = self.kind;
        match kind {
            Kind::Box | Kind::Si => {
                forbid(&self.nbhd, "nbhd", kind)?;
                forbid(&self.nbox, "nbox", kind)?;
                forbid(&self.ndia, "ndia", kind)?;
                let rel = require(&self.rel, "rel", kind)?
                    .iter()
                    .enumerate()
                    .map(|(i, p)| pair(format!("$.rel[{i}]"), p, n))
                    .collect::<Result<Vec<_>>>()?;
                if kind == Kind::Box {
                    Frame::new_box(poset, &rel)
                } else {
                    Frame::new_si(poset, &rel)
                }
            }
            Kind::Im => {
                forbid(&self.rel, "rel", kind)?;
                forbid(&self.nbox, "nbox", kind)?;
                forbid(&self.ndia, "ndia", kind)?;
                let fams = families("$.nbhd", require(&self.nbhd, "nbhd", kind)?, n)?;
                for (x, fam) in fams.iter().enumerate() {
                    if let Some(k) = fam.iter().position(|&a| !poset.is_upset(a)) {
                        return Err(Error::input(format!("$.nbhd[{x}][{k}]"), "not an upset"));
                    }
                }
                Frame::new(poset, Structure::Im(fams))
            }
            Kind::Cin => {
                forbid(&self.rel, "rel", kind)?;
                forbid(&self.nbhd, "nbhd", kind)?;
                if n > limits.max_cin_states.min(6) {
                    return Err(Error::guard("cin states", n as u128, limits.max_cin_states.min(6) as u128));
                }
                let nbox = families("$.nbox", require(&self.nbox, "nbox", kind)?, n)?;
                let ndia = families("$.ndia", require(&self.ndia, "ndia", kind)?, n)?;
                Frame::new_cin(poset, nbox, ndia, limits)
            }
        }
    }

    pub fn from_frame(f: &Frame) -> FrameJson {
        let n = f.size();
        let p = f.poset();
        let leq = p.covers().into_iter().map(|(a, b)| vec![a, b]).collect();
        let list = |m: Mask| bits::members(m).collect::<Vec<_>>();
        let fam_list = |fam: u64| bits::members(fam).map(|s| list(s as Mask)).collect::<Vec<_>>();
        let mut out = FrameJson {
            kind: f.kind(),
            size: n,
            leq,
            rel: None,
            nbhd: None,
            nbox: None,
            ndia: None,
        };
        match f.structure() {
            Structure::Box(r) | Structure::Si(r) => {
                out.rel = Some(
                    (0..n)
                        .flat_map(|x| bits::members(r[x]).map(move |y| vec![x, y]))
                        .collect(),
                );
            }
            Structure::Im(w) => {
                out.nbhd = Some(w.iter().map(|fam| fam.iter().map(|&a| list(a)).collect()).collect());
            }
            Structure::Cin(w) => {
                out.nbox = Some(w.iter().map(|&(b, _)| fam_list(b)).collect());
                out.ndia = Some(w.iter().map(|&(_, d)| fam_list(d)).collect());
            }
        }
        out
    }
}

pub fn read_frame(text: &str, limits: &Limits) -> Result<Frame> {
    let fj: FrameJson = serde_json::from_str(text).map_err(syntax_error)?;
    fj.to_frame(limits)
}

pub fn frame_to_value(f: &Frame) -> Value {
    serde_json::to_value(FrameJson::from_frame(f)).expect("frame serialises")
}

pub fn write_frame(f: &Frame) -> String {
    serde_json::to_string(&FrameJson::from_frame(f)).expect("frame serialises")
}

/// `{"p": [0, 2], ...}`; every value must be an upset of `poset`.
pub fn read_valuation(text: &str, poset: &Poset) -> Result<Valuation> {
    let raw: BTreeMap<String, Vec<usize>> = serde_json::from_str(text).map_err(syntax_error)?;
    let mut v = Valuation::new();
    for (p, states) in raw {
        let m = state_set(format!("$.{p}"), &states, poset.size())?;
        if !poset.is_upset(m) {
            return Err(Error::input(format!("$.{p}"), "not an upset"));
        }
        v = v.with(&p, m);
    }
    Ok(v)
}

pub fn write_valuation(v: &Valuation) -> String {
    let raw: BTreeMap<&str, Vec<usize>> = v.0.iter().map(|(p, &m)| (p.as_str(), bits::members(m).collect())).collect();
    serde_json::to_string(&raw).expect("valuation serialises")
}

/// Wire form of a modal algebra: square tables indexed by element, the
/// operator tables under `ops` keyed by modality, and for complex algebras
/// the upset behind each element.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraJson {
    pub kind: Kind,
    pub size: usize,
    pub top: usize,
    pub bottom: usize,
    pub meet: Vec<Vec<usize>>,
    pub join: Vec<Vec<usize>>,
    pub imp: Vec<Vec<usize>>,
    pub ops: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sets: Option<Vec<Vec<usize>>>,
}

fn square(path: &str, t: &[Vec<usize>], n: usize) -> Result<Vec<u16>> {
    if t.len() != n {
        return Err(Error::input(path, format!("expected {n} rows")));
    }
    let mut out = Vec::with_capacity(n * n);
    for (i, row) in t.iter().enumerate() {
        if row.len() != n {
            return Err(Error::input(format!("{path}[{i}]"), format!("expected {n} entries")));
        }
        for (j, &v) in row.iter().enumerate() {
            if v >= n {
                return Err(Error::input(format!("{path}[{i}][{j}]"), "element out of range"));
            }
            out.push(v as u16);
        }
    }
    Ok(out)
}

fn rows(t: &[u16], n: usize) -> Vec<Vec<usize>> {
    t.chunks(n.max(1)).map(|r| r.iter().map(|&v| v as usize).collect()).collect()
}

impl AlgebraJson {
    pub fn from_algebra(a: &ModalAlgebra) -> AlgebraJson {
        let n = a.size();
        let ha = a.ha();
        let table = |f: &dyn Fn(usize, usize) -> usize| -> Vec<Vec<usize>> {
            (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect()
        };
        let unary = |t: &[u16]| Value::from(t.iter().map(|&v| v as u64).collect::<Vec<_>>());
        let mut ops = BTreeMap::new();
        match a.ops() {
            Ops::Box(t) => {
                ops.insert("box".to_string(), unary(t));
            }
            Ops::Tri(t) => {
                ops.insert("tri".to_string(), unary(t));
            }
            Ops::Cin { nec, pos } => {
                ops.insert("box".to_string(), unary(nec));
                ops.insert("dia".to_string(), unary(pos));
            }
            Ops::Si(t) => {
                ops.insert("sto".to_string(), serde_json::to_value(rows(t, n)).expect("table"));
            }
        }
        AlgebraJson {
            kind: a.kind(),
            size: n,
            top: ha.top(),
            bottom: ha.bottom(),
            meet: table(&|i, j| ha.meet(i, j)),
            join: table(&|i, j| ha.join(i, j)),
            imp: table(&|i, j| ha.imp(i, j)),
            ops,
            sets: a.sets().map(|s| s.iter().map(|&m| bits::members(m).collect()).collect()),
        }
    }

    pub fn to_algebra(&self, limits: &Limits) -> Result<ModalAlgebra> {
        let n = self.size;
        if n == 0 || n > u16::MAX as usize {
            return Err(Error::input("$.size", "out of range"));
        }
        let meet = square("$.meet", &self.meet, n)?;
        let join = square("$.join", &self.join, n)?;
        let imp = square("$.imp", &self.imp, n)?;
        let dl = FinDL::from_tables(n, meet, join, self.top, self.bottom, limits)?;
        let ha = FinHA::with_implication(dl, imp, limits)?;
        let unary = |name: &str| -> Result<Vec<u16>> {
            let path = format!("$.ops.{name}");
            let v = self
                .ops
                .get(name)
                .ok_or_else(|| Error::input(&path, format!("required for {} algebras", self.kind)))?;
            let t: Vec<usize> = serde_json::from_value(v.clone()).map_err(|e| Error::input(&path, e.to_string()))?;
            if t.len() != n {
                return Err(Error::input(&path, format!("expected {n} entries")));
            }
            if let Some(i) = t.iter().position(|&x| x >= n) {
                return Err(Error::input(format!("{path}[{i}]"), "element out of range"));
            }
            Ok(t.into_iter().map(|x| x as u16).collect())
        };
        let expected: &[&str] = match self.kind {
            Kind::Box => &["box"],
            Kind::Im => &["tri"],
            Kind::Cin => &["box", "dia"],
            Kind::Si => &["sto"],
        };
        if let Some(k) = self.ops.keys().find(|k| !expected.contains(&k.as_str())) {
            return Err(Error::input(format!("$.ops.{k}"), format!("not an operator of {} algebras", self.kind)));
        }
        let ops = match self.kind {
            Kind::Box => Ops::Box(unary("box")?),
            Kind::Im => Ops::Tri(unary("tri")?),
            Kind::Cin => Ops::Cin {
                nec: unary("box")?,
                pos: unary("dia")?,
            },
            Kind::Si => {
                let v = self.ops.get("sto").ok_or_else(|| Error::input("$.ops.sto", "required for si algebras"))?;
                let t: Vec<Vec<usize>> =
                    serde_json::from_value(v.clone()).map_err(|e| Error::input("$.ops.sto", e.to_string()))?;
                Ops::Si(square("$.ops.sto", &t, n)?)
            }
        };
        let alg = ModalAlgebra::new(ha, ops)?;
        match &self.sets {
            None => Ok(alg),
            Some(sets) => {
                let masks = sets
                    .iter()
                    .enumerate()
                    .map(|(i, s)| state_set(format!("$.sets[{i}]"), s, 64))
                    .collect::<Result<Vec<_>>>()?;
                alg.with_sets(masks)
            }
        }
    }
}

pub fn read_algebra(text: &str, limits: &Limits) -> Result<ModalAlgebra> {
    let aj: AlgebraJson = serde_json::from_str(text).map_err(syntax_error)?;
    aj.to_algebra(limits)
}

pub fn write_algebra(a: &ModalAlgebra) -> String {
    serde_json::to_string(&AlgebraJson::from_algebra(a)).expect("algebra serialises")
}

/// A map of states as a JSON array, `[f(0), f(1), ...]`.
pub fn read_map(text: &str) -> Result<PosetMap> {
    let v: Vec<usize> = serde_json::from_str(text).map_err(syntax_error)?;
    Ok(PosetMap(v))
}

/// `{"frame": ..., "eta": [[x, η(x)], ...]}`
pub fn extension_to_value(frame: &Frame, eta: &PosetMap) -> Value {
    let eta: Vec<[usize; 2]> = eta.0.iter().enumerate().map(|(x, &q)| [x, q]).collect();
    serde_json::json!({ "frame": frame_to_value(frame), "eta": eta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::complex_algebra;
    use crate::harness::build_universe;

    fn lim() -> Limits {
        Limits::default()
    }

    #[test]
    fn frames_round_trip() {
        for kind in [Kind::Box, Kind::Im, Kind::Si] {
            for f in build_universe(kind, 2, &lim()).unwrap().frames {
                assert_eq!(read_frame(&write_frame(&f), &lim()).unwrap(), f);
            }
        }
        for f in build_universe(Kind::Cin, 1, &lim()).unwrap().frames {
            assert_eq!(read_frame(&write_frame(&f), &lim()).unwrap(), f);
        }
    }

    #[test]
    fn algebras_round_trip() {
        for kind in Kind::ALL {
            for f in build_universe(kind, 1, &lim()).unwrap().frames {
                let a = complex_algebra(&f, &lim()).unwrap();
                assert_eq!(read_algebra(&write_algebra(&a), &lim()).unwrap(), a);
            }
        }
    }

    #[test]
    fn errors_carry_paths() {
        let err = read_frame(r#"{"kind":"box","size":2,"leq":[[0,1]],"rel":[[0,5]]}"#, &lim()).unwrap_err();
        assert!(matches!(err, Error::Input { ref path, .. } if path == "$.rel[0]"));
        let err = read_frame(r#"{"kind":"im","size":2,"leq":[[0,1]],"nbhd":[[[0]],[[0]]]}"#, &lim()).unwrap_err();
        assert!(matches!(err, Error::Input { ref path, .. } if path == "$.nbhd[0][0]"));
        let err = read_frame(r#"{"kind":"im","size":1,"rel":[]}"#, &lim()).unwrap_err();
        assert!(matches!(err, Error::Input { ref path, .. } if path == "$.rel"));
        let err = read_valuation(r#"{"p":[0]}"#, &Poset::chain(2)).unwrap_err();
        assert!(matches!(err, Error::Input { ref path, .. } if path == "$.p"));
    }

    #[test]
    fn violated_condition_is_reported_with_witness() {
        let err = read_frame(r#"{"kind":"box","size":2,"leq":[[0,1]],"rel":[[1,1]]}"#, &lim()).unwrap_err();
        assert_eq!(err, Error::condition("x <= y R z implies x R z", vec![0, 1, 1]));
    }
}
