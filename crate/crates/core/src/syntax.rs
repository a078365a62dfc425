//! Formulas, signatures, the text parser and printer, rank-1 classification,
//! substitution and exhaustive formula generation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four frame kinds, each fixing a modal signature.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// Relational `□`.
    Box,
    /// Monotone neighbourhoods, `▽`.
    Im,
    /// Coupled neighbourhoods, `□` and `◇`.
    Cin,
    /// Strict implication `⊰`.
    Si,
}

impl Kind {
    pub const ALL: [Kind; 4] = [Kind::Box, Kind::Im, Kind::Cin, Kind::Si];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Box => "box",
            Kind::Im => "im",
            Kind::Cin => "cin",
            Kind::Si => "si",
        }
    }

    pub fn modalities(self) -> &'static [Modality] {
        match self {
            Kind::Box => &[Modality::Box],
            Kind::Im => &[Modality::Tri],
            Kind::Cin => &[Modality::Box, Modality::Dia],
            Kind::Si => &[Modality::Sto],
        }
    }

    pub fn allows(self, m: Modality) -> bool {
        self.modalities().contains(&m)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Kind> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::input("kind", format!("unknown kind `{s}` (box, im, cin, si)")))
    }
}

/// A signature is fixed by its frame kind.
pub type Signature = Kind;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Modality {
    Box,
    Dia,
    Tri,
    Sto,
}

impl Modality {
    pub fn keyword(self) -> &'static str {
        match self {
            Modality::Box => "box",
            Modality::Dia => "dia",
            Modality::Tri => "tri",
            Modality::Sto => "~>",
        }
    }

    pub fn arity(self) -> usize {
        if self == Modality::Sto {
            2
        } else {
            1
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Formula {
    Top,
    Bot,
    Letter(String),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Imp(Box<Formula>, Box<Formula>),
    Box(Box<Formula>),
    Dia(Box<Formula>),
    Tri(Box<Formula>),
    Sto(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn letter(name: &str) -> Formula {
        Formula::Letter(name.to_string())
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn imp(a: Formula, b: Formula) -> Formula {
        Formula::Imp(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::and(Formula::imp(a.clone(), b.clone()), Formula::imp(b, a))
    }

    pub fn nec(a: Formula) -> Formula {
        Formula::Box(Box::new(a))
    }

    pub fn dia(a: Formula) -> Formula {
        Formula::Dia(Box::new(a))
    }

    pub fn tri(a: Formula) -> Formula {
        Formula::Tri(Box::new(a))
    }

    pub fn sto(a: Formula, b: Formula) -> Formula {
        Formula::Sto(Box::new(a), Box::new(b))
    }

    pub fn modal(m: Modality, args: Vec<Formula>) -> Formula {
        let mut it = args.into_iter();
        let mut next = || Box::new(it.next().expect("missing modal argument"));
        match m {
            Modality::Box => Formula::Box(next()),
            Modality::Dia => Formula::Dia(next()),
            Modality::Tri => Formula::Tri(next()),
            Modality::Sto => {
                let a = next();
                Formula::Sto(a, next())
            }
        }
    }

    /// The outermost modality, if any.
    pub fn modality(&self) -> Option<Modality> {
        match self {
            Formula::Box(_) => Some(Modality::Box),
            Formula::Dia(_) => Some(Modality::Dia),
            Formula::Tri(_) => Some(Modality::Tri),
            Formula::Sto(..) => Some(Modality::Sto),
            _ => None,
        }
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Top | Formula::Bot | Formula::Letter(_) => vec![],
            Formula::Box(a) | Formula::Dia(a) | Formula::Tri(a) => vec![a],
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) | Formula::Sto(a, b) => {
                vec![a, b]
            }
        }
    }

    /// Rebuilds this node with new children (same arity).
    fn with_children(&self, mut kids: Vec<Formula>) -> Formula {
        let mut take = || Box::new(kids.remove(0));
        match self {
            Formula::Top | Formula::Bot | Formula::Letter(_) => self.clone(),
            Formula::Box(_) => Formula::Box(take()),
            Formula::Dia(_) => Formula::Dia(take()),
            Formula::Tri(_) => Formula::Tri(take()),
            Formula::And(..) => {
                let a = take();
                Formula::And(a, take())
            }
            Formula::Or(..) => {
                let a = take();
                Formula::Or(a, take())
            }
            Formula::Imp(..) => {
                let a = take();
                Formula::Imp(a, take())
            }
            Formula::Sto(..) => {
                let a = take();
                Formula::Sto(a, take())
            }
        }
    }

    pub fn letters(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_letters(&mut out);
        out
    }

    fn collect_letters(&self, out: &mut BTreeSet<String>) {
        if let Formula::Letter(p) = self {
            out.insert(p.clone());
        }
        for c in self.children() {
            c.collect_letters(out);
        }
    }

    /// Simultaneous substitution; letters outside `map` stay put.
    pub fn substitute(&self, map: &BTreeMap<String, Formula>) -> Formula {
        match self {
            Formula::Letter(p) => map.get(p).cloned().unwrap_or_else(|| self.clone()),
            _ => self.with_children(self.children().into_iter().map(|c| c.substitute(map)).collect()),
        }
    }

    /// Renames letters injectively or not; a special case of substitution.
    pub fn rename(&self, names: &BTreeMap<String, String>) -> Formula {
        let map = names
            .iter()
            .map(|(k, v)| (k.clone(), Formula::Letter(v.clone())))
            .collect();
        self.substitute(&map)
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Construction depth: atoms have depth 0.
    pub fn depth(&self) -> usize {
        self.children().iter().map(|c| c.depth() + 1).max().unwrap_or(0)
    }

    pub fn modal_depth(&self) -> usize {
        let inner = self.children().iter().map(|c| c.modal_depth()).max().unwrap_or(0);
        inner + usize::from(self.modality().is_some())
    }

    /// Fails on the first modality outside the signature of `kind`.
    pub fn check_signature(&self, kind: Kind) -> Result<()> {
        if let Some(m) = self.modality() {
            if !kind.allows(m) {
                return Err(Error::Signature {
                    modality: m.keyword(),
                    kind,
                });
            }
        }
        self.children().into_iter().try_for_each(|c| c.check_signature(kind))
    }

    /// No implication, and every letter occurrence sits under exactly one
    /// modal operator.
    pub fn is_rank1(&self) -> bool {
        self.rank1_at(0)
    }

    fn rank1_at(&self, modal_depth: usize) -> bool {
        match self {
            Formula::Imp(..) => false,
            Formula::Letter(_) => modal_depth == 1,
            _ => {
                let d = modal_depth + usize::from(self.modality().is_some());
                self.children().into_iter().all(|c| c.rank1_at(d))
            }
        }
    }
}

/// A rank-1 axiom candidate `lhs ↔ rhs`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct AxiomPair {
    pub lhs: Formula,
    pub rhs: Formula,
}

impl AxiomPair {
    pub fn is_rank1(&self) -> bool {
        self.lhs.is_rank1() && self.rhs.is_rank1()
    }

    pub fn as_formula(&self) -> Formula {
        Formula::iff(self.lhs.clone(), self.rhs.clone())
    }

    pub fn letters(&self) -> BTreeSet<String> {
        let mut l = self.lhs.letters();
        l.extend(self.rhs.letters());
        l
    }
}

impl fmt::Display for AxiomPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <-> {}", self.lhs, self.rhs)
    }
}

pub fn is_rank1(phi: &Formula) -> bool {
    phi.is_rank1()
}

pub fn is_rank1_axiom(ax: &AxiomPair) -> bool {
    ax.is_rank1()
}

pub fn substitute(phi: &Formula, map: &BTreeMap<String, Formula>) -> Formula {
    phi.substitute(map)
}

pub fn letters(phi: &Formula) -> BTreeSet<String> {
    phi.letters()
}

/// The rank-1 axioms that come with each signature.
pub fn stock_axioms(kind: Kind) -> Vec<AxiomPair> {
    let texts: &[&str] = match kind {
        Kind::Box => &["box T <-> T", "box p & box q <-> box (p & q)"],
        Kind::Im => &["tri (p & q) & tri p <-> tri (p & q)"],
        Kind::Cin | Kind::Si => &[],
    };
    texts
        .iter()
        .map(|t| parse_axiom(t, kind).expect("stock axiom parses"))
        .collect()
}

// ---------------------------------------------------------------- printing

const PREC_IMP: u8 = 1;
const PREC_OR: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_UNARY: u8 = 4;

impl Formula {
    fn prec(&self) -> u8 {
        match self {
            Formula::Imp(..) | Formula::Sto(..) => PREC_IMP,
            Formula::Or(..) => PREC_OR,
            Formula::And(..) => PREC_AND,
            _ => PREC_UNARY,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            f.write_str("(")?;
            self.write_at(f, 0)?;
            return f.write_str(")");
        }
        match self {
            Formula::Top => f.write_str("T"),
            Formula::Bot => f.write_str("F"),
            Formula::Letter(p) => f.write_str(p),
            Formula::And(a, b) => {
                a.write_at(f, PREC_AND)?;
                f.write_str(" & ")?;
                b.write_at(f, PREC_UNARY)
            }
            Formula::Or(a, b) => {
                a.write_at(f, PREC_OR)?;
                f.write_str(" | ")?;
                b.write_at(f, PREC_AND)
            }
            Formula::Imp(a, b) | Formula::Sto(a, b) => {
                let op = if matches!(self, Formula::Imp(..)) { "->" } else { "~>" };
                a.write_at(f, PREC_OR)?;
                write!(f, " {op} ")?;
                // right-associative, but never mixing the two arrows bare
                let same = std::mem::discriminant(self) == std::mem::discriminant(b.as_ref());
                b.write_at(f, if same { PREC_IMP } else { PREC_OR })
            }
            Formula::Box(a) | Formula::Dia(a) | Formula::Tri(a) => {
                write!(f, "{} ", self.modality().unwrap().keyword())?;
                a.write_at(f, PREC_UNARY)
            }
        }
    }

    /// Unicode rendering for human-facing output.
    pub fn pretty(&self) -> String {
        self.to_string()
            .replace("<->", "↔")
            .replace("->", "→")
            .replace("~>", "⥽")
            .replace(" & ", " ∧ ")
            .replace(" | ", " ∨ ")
            .replace("box ", "□")
            .replace("dia ", "◇")
            .replace("tri ", "▽")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

// ----------------------------------------------------------------- parsing

#[derive(Clone, PartialEq, Eq, Debug)]
enum Tok {
    Top,
    Bot,
    Ident(String),
    Modal(Modality),
    And,
    Or,
    Imp,
    Sto,
    Iff,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Top => "`T`".into(),
            Tok::Bot => "`F`".into(),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Modal(m) => format!("`{}`", m.keyword()),
            Tok::And => "`&`".into(),
            Tok::Or => "`|`".into(),
            Tok::Imp => "`->`".into(),
            Tok::Sto => "`~>`".into(),
            Tok::Iff => "`<->`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            match &text[start..i] {
                "T" => Tok::Top,
                "F" => Tok::Bot,
                "box" => Tok::Modal(Modality::Box),
                "dia" => Tok::Modal(Modality::Dia),
                "tri" => Tok::Modal(Modality::Tri),
                word => Tok::Ident(word.to_string()),
            }
        } else {
            let rest = &text[i..];
            let (tok, len) = if rest.starts_with("<->") {
                (Tok::Iff, 3)
            } else if rest.starts_with("->") {
                (Tok::Imp, 2)
            } else if rest.starts_with("~>") {
                (Tok::Sto, 2)
            } else {
                match c {
                    b'&' => (Tok::And, 1),
                    b'|' => (Tok::Or, 1),
                    b'(' => (Tok::LParen, 1),
                    b')' => (Tok::RParen, 1),
                    _ => {
                        let ch = rest.chars().next().unwrap();
                        return Err(Error::Parse {
                            position: start,
                            message: format!("unexpected character `{ch}`"),
                        });
                    }
                }
            };
            i += len;
            tok
        };
        out.push((start, tok));
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    kind: Kind,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            position: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {}, found {}", tok.describe(), self.peek().describe()))
        }
    }

    /// `imp ('<->' imp)?`, returning both sides when `<->` is present.
    fn iff(&mut self) -> Result<(Formula, Option<Formula>)> {
        let (lhs, _) = self.imp()?;
        if *self.peek() == Tok::Iff {
            self.bump();
            let (rhs, _) = self.imp()?;
            if *self.peek() == Tok::Iff {
                return self.error("chained `<->` needs parentheses");
            }
            Ok((lhs, Some(rhs)))
        } else {
            Ok((lhs, None))
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        Ok(match self.iff()? {
            (lhs, Some(rhs)) => Formula::iff(lhs, rhs),
            (lhs, None) => lhs,
        })
    }

    /// Right-associative arrows; returns the bare top-level arrow used.
    fn imp(&mut self) -> Result<(Formula, Option<Tok>)> {
        let lhs = self.or()?;
        let op = self.peek().clone();
        if op != Tok::Imp && op != Tok::Sto {
            return Ok((lhs, None));
        }
        let at = self.offset();
        self.bump();
        let (rhs, inner) = self.imp()?;
        if inner.is_some_and(|t| t != op) {
            return Err(Error::Parse {
                position: at,
                message: "`->` and `~>` cannot be mixed without parentheses".into(),
            });
        }
        let f = if op == Tok::Imp {
            Formula::imp(lhs, rhs)
        } else {
            self.check(Modality::Sto, at)?;
            Formula::sto(lhs, rhs)
        };
        Ok((f, Some(op)))
    }

    fn or(&mut self) -> Result<Formula> {
        let mut f = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            f = Formula::or(f, self.and()?);
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<Formula> {
        let mut f = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn check(&self, m: Modality, position: usize) -> Result<()> {
        if self.kind.allows(m) {
            Ok(())
        } else {
            let _ = position;
            Err(Error::Signature {
                modality: m.keyword(),
                kind: self.kind,
            })
        }
    }

    fn unary(&mut self) -> Result<Formula> {
        let at = self.offset();
        match self.bump() {
            Tok::Modal(m) => {
                self.check(m, at)?;
                let arg = self.unary()?;
                Ok(Formula::modal(m, vec![arg]))
            }
            Tok::Top => Ok(Formula::Top),
            Tok::Bot => Ok(Formula::Bot),
            Tok::Ident(p) => Ok(Formula::Letter(p)),
            Tok::LParen => {
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            other => Err(Error::Parse {
                position: at,
                message: format!("expected a formula, found {}", other.describe()),
            }),
        }
    }
}

fn parser(text: &str, kind: Kind) -> Result<Parser> {
    Ok(Parser {
        toks: tokenize(text)?,
        pos: 0,
        kind,
    })
}

/// Parses a formula; `a <-> b` becomes `(a -> b) & (b -> a)`.
pub fn parse(text: &str, kind: Kind) -> Result<Formula> {
    let mut p = parser(text, kind)?;
    let f = p.formula()?;
    p.expect(Tok::End)?;
    Ok(f)
}

/// Parses `lhs <-> rhs` with a top-level `<->`.
pub fn parse_axiom(text: &str, kind: Kind) -> Result<AxiomPair> {
    let mut p = parser(text, kind)?;
    let (lhs, rhs) = p.iff()?;
    p.expect(Tok::End)?;
    match rhs {
        Some(rhs) => Ok(AxiomPair { lhs, rhs }),
        None => Err(Error::Parse {
            position: text.len(),
            message: "axiom needs a top-level `<->`".into(),
        }),
    }
}

/// One formula per non-empty line; `#` starts a comment.
pub fn parse_formula_list(text: &str, kind: Kind) -> Result<Vec<Formula>> {
    text.lines()
        .enumerate()
        .map(|(i, line)| (i, line.split('#').next().unwrap_or("").trim()))
        .filter(|(_, line)| !line.is_empty())
        .map(|(i, line)| {
            parse(line, kind).map_err(|e| Error::input(format!("line {}", i + 1), e.to_string()))
        })
        .collect()
}

// -------------------------------------------------------------- generation

/// Every formula of construction depth at most `depth` over `letters`, with
/// shallower formulas first; deterministic.
pub fn enumerate_formulas(kind: Kind, letters: &[&str], depth: usize) -> Vec<Formula> {
    let mut all: Vec<Formula> = vec![Formula::Top, Formula::Bot];
    all.extend(letters.iter().map(|p| Formula::letter(p)));
    let mut seen: BTreeSet<Formula> = all.iter().cloned().collect();
    for _ in 0..depth {
        let prev = all.clone();
        let mut push = |f: Formula| {
            if seen.insert(f.clone()) {
                all.push(f);
            }
        };
        for a in &prev {
            for b in &prev {
                push(Formula::and(a.clone(), b.clone()));
                push(Formula::or(a.clone(), b.clone()));
                push(Formula::imp(a.clone(), b.clone()));
            }
        }
        for &m in kind.modalities() {
            if m.arity() == 1 {
                for a in &prev {
                    push(Formula::modal(m, vec![a.clone()]));
                }
            } else {
                for a in &prev {
                    for b in &prev {
                        push(Formula::modal(m, vec![a.clone(), b.clone()]));
                    }
                }
            }
        }
    }
    all
}

/// A random formula of depth at most `depth`.
pub fn random_formula<R: Rng>(kind: Kind, letters: &[&str], depth: usize, rng: &mut R) -> Formula {
    if depth == 0 || rng.gen_ratio(1, 4) {
        let k = rng.gen_range(0..letters.len() + 2);
        return match k {
            0 => Formula::Top,
            1 => Formula::Bot,
            _ => Formula::letter(letters[k - 2]),
        };
    }
    let mods = kind.modalities();
    let choice = rng.gen_range(0..3 + mods.len());
    let sub = |rng: &mut R| random_formula(kind, letters, depth - 1, rng);
    match choice {
        0 => Formula::and(sub(rng), sub(rng)),
        1 => Formula::or(sub(rng), sub(rng)),
        2 => Formula::imp(sub(rng), sub(rng)),
        k => {
            let m = mods[k - 3];
            let args = (0..m.arity()).map(|_| sub(rng)).collect();
            Formula::modal(m, args)
        }
    }
}

/// Hash-consed node of a [`FormulaDag`]; children are earlier node indices.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Node {
    Top,
    Bot,
    Letter(usize),
    And(usize, usize),
    Or(usize, usize),
    Imp(usize, usize),
    Modal(Modality, usize, usize),
}

/// Many formulas sharing subterms, in topological order, for evaluating a
/// whole corpus in one pass.
#[derive(Clone, Debug)]
pub struct FormulaDag {
    pub letters: Vec<String>,
    pub nodes: Vec<Node>,
    /// Node of each input formula, in input order.
    pub roots: Vec<usize>,
}

impl FormulaDag {
    pub fn new(formulas: &[Formula]) -> FormulaDag {
        let letters: Vec<String> = formulas
            .iter()
            .flat_map(|f| f.letters())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut dag = FormulaDag {
            letters,
            nodes: Vec::new(),
            roots: Vec::new(),
        };
        let mut index: HashMap<Node, usize> = HashMap::new();
        for f in formulas {
            let r = dag.intern(f, &mut index);
            dag.roots.push(r);
        }
        dag
    }

    fn intern(&mut self, f: &Formula, index: &mut HashMap<Node, usize>) -> usize {
        let node = match f {
            Formula::Top => Node::Top,
            Formula::Bot => Node::Bot,
            Formula::Letter(p) => Node::Letter(self.letters.binary_search(p).unwrap()),
            Formula::And(a, b) => Node::And(self.intern(a, index), self.intern(b, index)),
            Formula::Or(a, b) => Node::Or(self.intern(a, index), self.intern(b, index)),
            Formula::Imp(a, b) => Node::Imp(self.intern(a, index), self.intern(b, index)),
            Formula::Box(a) | Formula::Dia(a) | Formula::Tri(a) => {
                let i = self.intern(a, index);
                Node::Modal(f.modality().unwrap(), i, i)
            }
            Formula::Sto(a, b) => {
                Node::Modal(Modality::Sto, self.intern(a, index), self.intern(b, index))
            }
        };
        *index.entry(node).or_insert_with(|| {
            self.nodes.push(node);
            self.nodes.len() - 1
        })
    }

    /// Evaluates every node given the letter values and the connectives of
    /// some algebra of values.
    pub fn eval_into<V: Copy>(
        &self,
        letters: &[V],
        ops: &impl DagOps<V>,
        out: &mut Vec<V>,
    ) {
        out.clear();
        for &node in &self.nodes {
            let v = match node {
                Node::Top => ops.top(),
                Node::Bot => ops.bot(),
                Node::Letter(i) => letters[i],
                Node::And(a, b) => ops.and(out[a], out[b]),
                Node::Or(a, b) => ops.or(out[a], out[b]),
                Node::Imp(a, b) => ops.imp(out[a], out[b]),
                Node::Modal(m, a, b) => ops.modal(m, out[a], out[b]),
            };
            out.push(v);
        }
    }
}

/// Interpretation of the connectives used by [`FormulaDag::eval_into`].
pub trait DagOps<V> {
    fn top(&self) -> V;
    fn bot(&self) -> V;
    fn and(&self, a: V, b: V) -> V;
    fn or(&self, a: V, b: V) -> V;
    fn imp(&self, a: V, b: V) -> V;
    /// Unary modalities ignore `b`.
    fn modal(&self, m: Modality, a: V, b: V) -> V;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> Formula {
        Formula::letter(s)
    }

    #[test]
    fn parses_stock_axioms() {
        let ax = parse_axiom("box T <-> T", Kind::Box).unwrap();
        assert_eq!(ax.lhs, Formula::nec(Formula::Top));
        assert_eq!(ax.rhs, Formula::Top);
        let ax = parse_axiom("box p & box q <-> box (p & q)", Kind::Box).unwrap();
        assert_eq!(
            ax.lhs,
            Formula::and(Formula::nec(p("p")), Formula::nec(p("q")))
        );
        assert_eq!(ax.rhs, Formula::nec(Formula::and(p("p"), p("q"))));
        let f = parse("box T <-> T", Kind::Box).unwrap();
        assert_eq!(f, Formula::iff(Formula::nec(Formula::Top), Formula::Top));
    }

    #[test]
    fn signature_errors() {
        assert_eq!(
            parse("tri p", Kind::Box),
            Err(Error::Signature {
                modality: "tri",
                kind: Kind::Box
            })
        );
        assert!(parse("p ~> q", Kind::Im).is_err());
        assert!(parse("box p & dia q", Kind::Cin).is_ok());
    }

    #[test]
    fn precedence_and_associativity() {
        let f = parse("p | q & r -> s -> t", Kind::Box).unwrap();
        let expect = Formula::imp(
            Formula::or(p("p"), Formula::and(p("q"), p("r"))),
            Formula::imp(p("s"), p("t")),
        );
        assert_eq!(f, expect);
        let g = parse("a & b & c", Kind::Box).unwrap();
        assert_eq!(g, Formula::and(Formula::and(p("a"), p("b")), p("c")));
        let h = parse("box p & q", Kind::Box).unwrap();
        assert_eq!(h, Formula::and(Formula::nec(p("p")), p("q")));
    }

    #[test]
    fn mixed_arrows_need_parentheses() {
        let err = parse("p -> q ~> r", Kind::Si).unwrap_err();
        assert!(matches!(err, Error::Parse { position: 2, .. }));
        assert!(parse("p -> (q ~> r)", Kind::Si).is_ok());
        assert!(parse("p ~> q ~> r", Kind::Si).is_ok());
    }

    #[test]
    fn parse_errors_have_positions() {
        assert!(matches!(parse("p &", Kind::Box), Err(Error::Parse { position: 3, .. })));
        assert!(matches!(parse("(p", Kind::Box), Err(Error::Parse { position: 2, .. })));
        assert!(matches!(parse("p $ q", Kind::Box), Err(Error::Parse { position: 2, .. })));
        assert!(parse_axiom("box p", Kind::Box).is_err());
        assert!(parse("p <-> q <-> r", Kind::Box).is_err());
    }

    #[test]
    fn rank1_examples() {
        assert!(parse_axiom("box T <-> T", Kind::Box).unwrap().is_rank1());
        assert!(parse_axiom("tri (p & q) & tri p <-> tri (p & q)", Kind::Im)
            .unwrap()
            .is_rank1());
        assert!(!parse("p -> box p", Kind::Box).unwrap().is_rank1());
        assert!(!parse("box box p", Kind::Box).unwrap().is_rank1());
        assert!(!parse("p & box q", Kind::Box).unwrap().is_rank1());
        assert!(parse("p ~> q", Kind::Si).unwrap().is_rank1());
        for k in Kind::ALL {
            for ax in stock_axioms(k) {
                assert!(ax.is_rank1(), "{ax}");
            }
        }
    }

    #[test]
    fn substitution_examples() {
        let mut map = BTreeMap::new();
        map.insert("p".to_string(), Formula::and(p("q"), p("r")));
        assert_eq!(
            Formula::nec(p("p")).substitute(&map),
            Formula::nec(Formula::and(p("q"), p("r")))
        );
        assert_eq!(Formula::Top.substitute(&map), Formula::Top);
        let f = parse("box p & (q -> p)", Kind::Box).unwrap();
        assert_eq!(
            f.letters().into_iter().collect::<Vec<_>>(),
            vec!["p".to_string(), "q".to_string()]
        );
        // simultaneous: p ↦ q, q ↦ p swaps
        let mut swap = BTreeMap::new();
        swap.insert("p".to_string(), p("q"));
        swap.insert("q".to_string(), p("p"));
        assert_eq!(
            Formula::imp(p("p"), p("q")).substitute(&swap),
            Formula::imp(p("q"), p("p"))
        );
    }

    #[test]
    fn printer_examples() {
        let f = parse("(p -> q) -> r", Kind::Box).unwrap();
        assert_eq!(f.to_string(), "(p -> q) -> r");
        let g = parse("p -> (q ~> r)", Kind::Si).unwrap();
        assert_eq!(g.to_string(), "p -> (q ~> r)");
        let h = parse("box (p & q) | box p", Kind::Box).unwrap();
        assert_eq!(h.to_string(), "box (p & q) | box p");
        assert_eq!(h.pretty(), "□(p ∧ q) ∨ □p");
    }

    #[test]
    fn formula_counts_match_grammar() {
        // depth ≤ 1 over {p}: 3 atoms, 3 binary connectives over 3×3 pairs, 3 boxes
        assert_eq!(enumerate_formulas(Kind::Box, &["p"], 1).len(), 3 + 27 + 3);
        assert_eq!(enumerate_formulas(Kind::Cin, &["p"], 1).len(), 3 + 27 + 6);
        assert_eq!(enumerate_formulas(Kind::Si, &["p"], 1).len(), 3 + 36);
        assert_eq!(enumerate_formulas(Kind::Box, &["p", "q"], 1).len(), 56);
        // depth 2 over {p, q}: 56 old + new binary and modal terms
        assert_eq!(
            enumerate_formulas(Kind::Box, &["p", "q"], 2).len(),
            56 + (3 * 56 * 56 - 48) + (56 - 4)
        );
    }

    #[test]
    fn round_trip_over_corpus() {
        for k in Kind::ALL {
            for f in enumerate_formulas(k, &["p", "q"], 2) {
                let text = f.to_string();
                assert_eq!(parse(&text, k).unwrap(), f, "{text}");
            }
        }
    }

    #[test]
    fn dag_shares_subterms() {
        let fs = enumerate_formulas(Kind::Box, &["p"], 1);
        let dag = FormulaDag::new(&fs);
        assert_eq!(dag.nodes.len(), fs.len());
        assert_eq!(dag.letters, vec!["p".to_string()]);
        let dag2 = FormulaDag::new(&[Formula::and(p("p"), p("p")), p("p")]);
        assert_eq!(dag2.nodes.len(), 2);
        assert_eq!(dag2.roots, vec![1, 0]);
    }

    #[test]
    fn random_formulas_are_deterministic() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let f = random_formula(Kind::Si, &["p", "q"], 3, &mut a);
            assert_eq!(f, random_formula(Kind::Si, &["p", "q"], 3, &mut b));
            assert!(f.depth() <= 3);
            assert!(f.check_signature(Kind::Si).is_ok());
        }
    }
}
