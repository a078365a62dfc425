//! The `gtw` command line: frame checking, model checking, complex
//! algebras, prime filter extensions, frame constructions, universes and
//! closure audits.
//!
//! Exit codes: 0 success, 1 property failure, 2 usage or input error,
//! 3 size guard.

pub mod dot;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use gtw_core::bits::{self, Mask};
use gtw_core::duality::{self, Variant};
use gtw_core::frame::{self, Frame};
use gtw_core::harness::{self, AuditBudget, Universe};
use gtw_core::limits::parse_memory;
use gtw_core::syntax::{self, Formula};
use gtw_core::{algebra, json as wire, Error, Kind, Limits};

#[derive(Parser, Debug)]
#[command(name = "gtw", version, about = "Finite frames, complex algebras and prime filter extensions")]
struct Cli {
    /// Seed for every sampled universe
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Cap on the upsets of a single poset
    #[arg(long, global = true)]
    max_upsets: Option<u128>,

    /// Cap on the size of table-backed algebras
    #[arg(long, global = true)]
    max_algebra: Option<usize>,

    /// Cap on valuations per validity check
    #[arg(long, global = true)]
    max_valuations: Option<u128>,

    /// Cap on maps scanned by morphism searches
    #[arg(long, global = true)]
    max_maps: Option<u128>,

    /// Cap on structures examined while building a universe
    #[arg(long, global = true)]
    max_universe: Option<u128>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    Tau,
    Sigma,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a formula, print its syntax tree and rank-1 status
    Parse {
        #[arg(long, value_parser = parse_kind)]
        sig: Kind,
        #[arg(long)]
        formula: String,
    },
    /// Validate a frame file
    CheckFrame {
        #[arg(long)]
        frame: PathBuf,
    },
    /// Print the truth set of a formula in a model
    Mc {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        valuation: PathBuf,
        #[arg(long)]
        formula: String,
    },
    /// Decide frame validity, with a counterexample
    Valid {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        formula: String,
    },
    /// Print the complex algebra
    Ca {
        #[arg(long)]
        frame: PathBuf,
    },
    /// Print the prime filter extension and the map eta
    Pe {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long, value_enum, default_value = "tau")]
        variant: VariantArg,
    },
    /// Disjoint union of frames
    Du {
        #[arg(long, num_args = 1.., required = true)]
        frames: Vec<PathBuf>,
    },
    /// Subframe generated by a set of states
    Gensub {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        seed_states: Vec<usize>,
    },
    /// Check whether a map is a frame morphism
    Morph {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        to: PathBuf,
    },
    /// List the frames of a universe
    Enum {
        #[arg(long, value_parser = parse_kind)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        /// Sample this many frames on exactly n states instead
        #[arg(long)]
        sample: Option<usize>,
    },
    /// Frames of a universe validating every formula of an axiom file
    Fr {
        #[arg(long, value_parser = parse_kind)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        axioms: PathBuf,
        #[arg(long)]
        sample: Option<usize>,
    },
    /// Closure audit of the class an axiom file defines
    Audit {
        #[arg(long, value_parser = parse_kind)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        axioms: PathBuf,
        #[arg(long)]
        sample: Option<usize>,
        /// Maps examined per frame in the p-morphic image search
        #[arg(long)]
        image_budget: Option<u128>,
    },
    /// Graphviz rendering of a frame
    Dot {
        #[arg(long)]
        frame: PathBuf,
    },
}

fn parse_kind(s: &str) -> Result<Kind, String> {
    s.parse::<Kind>().map_err(|e| e.to_string())
}

/// Why a command did not succeed.
#[derive(Debug)]
enum Failure {
    Property(String),
    Usage(String),
    Guard(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Property(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Guard(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Property(m) | Failure::Usage(m) | Failure::Guard(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        match e {
            Error::SizeGuard { .. } => Failure::Guard(m),
            Error::FrameCondition { .. } | Error::Incoherent(_) => Failure::Property(m),
            _ => Failure::Usage(m),
        }
    }
}

type Outcome = Result<(), Failure>;

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
                return 2;
            }
            let _ = write!(out, "{text}");
            return 0;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn limits(cli: &Cli) -> Result<Limits, Failure> {
    let mut l = Limits::default();
    if let Ok(text) = std::env::var("GTW_MAX_MEM") {
        let bytes = parse_memory(&text).ok_or_else(|| Failure::Usage(format!("GTW_MAX_MEM: cannot read `{text}`")))?;
        l = l.with_memory_budget(bytes);
    }
    if let Some(v) = cli.max_upsets {
        l.max_upsets = v;
    }
    if let Some(v) = cli.max_algebra {
        l.max_algebra = v;
    }
    if let Some(v) = cli.max_valuations {
        l.max_valuations = v;
    }
    if let Some(v) = cli.max_maps {
        l.max_maps = v;
    }
    if let Some(v) = cli.max_universe {
        l.max_universe = v;
    }
    Ok(l)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn with_path(path: &Path, e: Error) -> Failure {
    let f = Failure::from(e);
    let m = format!("{}: {}", path.display(), f.message());
    match f {
        Failure::Property(_) => Failure::Property(m),
        Failure::Usage(_) => Failure::Usage(m),
        Failure::Guard(_) => Failure::Guard(m),
    }
}

fn load_frame(path: &Path, limits: &Limits) -> Result<Frame, Failure> {
    wire::read_frame(&read(path)?, limits).map_err(|e| with_path(path, e))
}

fn emit(out: &mut dyn Write, text: &str) -> Outcome {
    writeln!(out, "{text}").map_err(|e| Failure::Usage(format!("write failed: {e}")))
}

fn emit_json(out: &mut dyn Write, v: &Value) -> Outcome {
    emit(out, &serde_json::to_string(v).expect("json"))
}

fn states(m: Mask) -> Vec<usize> {
    bits::members(m).collect()
}

fn universe(kind: Kind, n: usize, sample: Option<usize>, seed: u64, limits: &Limits) -> Result<Universe, Failure> {
    Ok(match sample {
        Some(count) => Universe::from_frames(kind, n, harness::sample_frames(kind, n, count, seed, limits)?, true)?,
        None => harness::build_universe(kind, n, limits)?,
    })
}

fn axioms(path: &Path, kind: Kind) -> Result<Vec<Formula>, Failure> {
    syntax::parse_formula_list(&read(path)?, kind).map_err(|e| with_path(path, e))
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Outcome {
    let limits = limits(cli)?;
    let lim = &limits;
    match &cli.command {
        Command::Parse { sig, formula } => {
            let phi = syntax::parse(formula, *sig)?;
            let yes_no = |b: bool| if b { "yes" } else { "no" };
            match syntax::parse_axiom(formula, *sig) {
                Ok(ax) => {
                    emit(out, &ax.to_string())?;
                    emit(out, &format!("ast: {:?} <-> {:?}", ax.lhs, ax.rhs))?;
                    emit(out, &format!("rank-1 axiom: {}", yes_no(ax.is_rank1())))
                }
                Err(_) => {
                    emit(out, &phi.to_string())?;
                    emit(out, &format!("ast: {phi:?}"))?;
                    emit(out, &format!("rank-1: {}", yes_no(phi.is_rank1())))
                }
            }
        }
        Command::CheckFrame { frame } => {
            let f = load_frame(frame, lim)?;
            emit(out, &format!("valid {} frame with {} states", f.kind(), f.size()))
        }
        Command::Mc {
            frame,
            valuation,
            formula,
        } => {
            let f = load_frame(frame, lim)?;
            let v = wire::read_valuation(&read(valuation)?, f.poset()).map_err(|e| with_path(valuation, e))?;
            let phi = syntax::parse(formula, f.kind())?;
            let t = frame::truth_set(&f, &v, &phi)?;
            emit_json(out, &json!(states(t)))
        }
        Command::Valid { frame, formula } => {
            let f = load_frame(frame, lim)?;
            let phi = syntax::parse(formula, f.kind())?;
            let v = frame::frame_validates(&f, &phi, lim)?;
            match v.counterexample {
                None => emit(out, "valid"),
                Some((val, x)) => {
                    emit(out, "not valid")?;
                    emit(out, &format!("counterexample: {} at state {x}", wire::write_valuation(&val)))?;
                    Err(Failure::Property(format!("{phi} is refuted at state {x}")))
                }
            }
        }
        Command::Ca { frame } => {
            let f = load_frame(frame, lim)?;
            emit(out, &wire::write_algebra(&algebra::complex_algebra(&f, lim)?))
        }
        Command::Pe { frame, variant } => {
            let f = load_frame(frame, lim)?;
            let variant = match variant {
                VariantArg::Tau => Variant::Tau,
                VariantArg::Sigma => Variant::Sigma,
            };
            let ext = duality::pfe_with(&f, variant, lim)?;
            emit_json(out, &wire::extension_to_value(&ext.frame, &ext.eta))
        }
        Command::Du { frames } => {
            let fs = frames.iter().map(|p| load_frame(p, lim)).collect::<Result<Vec<_>, _>>()?;
            let (sum, _) = frame::disjoint_union(&fs, lim)?;
            emit(out, &wire::write_frame(&sum))
        }
        Command::Gensub { frame, seed_states } => {
            let f = load_frame(frame, lim)?;
            if let Some(&x) = seed_states.iter().find(|&&x| x >= f.size()) {
                return Err(Failure::Usage(format!("--seed-states: state {x} out of range")));
            }
            let seeds = bits::from_indices(seed_states.iter().copied());
            let (sub, inc) = match f.kind() {
                Kind::Box | Kind::Si => frame::generate_subframe(&f, seeds)?,
                _ => frame::subframe_on(&f, f.poset().up_closure(seeds), lim)?.ok_or_else(|| {
                    Failure::Property("the upset generated by the seeds carries no generated subframe".into())
                })?,
            };
            emit_json(out, &json!({ "frame": wire::frame_to_value(&sub), "inclusion": inc.0 }))
        }
        Command::Morph { map, from, to } => {
            let x = load_frame(from, lim)?;
            let y = load_frame(to, lim)?;
            let f = wire::read_map(&read(map)?).map_err(|e| with_path(map, e))?;
            let holds = frame::is_frame_morphism(&f, &x, &y, lim)?;
            let c = frame::check_frame_morphism(&f, &x, &y, lim)?;
            emit(out, &format!("p-morphism: {}", c.p_morphism))?;
            emit(out, &format!("conditions: {}", c.conditions))?;
            emit(out, &format!("square: {}", c.square))?;
            if let Some(w) = &c.witness {
                emit(out, &format!("witness: {w:?}"))?;
            }
            if holds {
                emit(out, "frame morphism")
            } else {
                emit(out, "not a frame morphism")?;
                Err(Failure::Property("not a frame morphism".into()))
            }
        }
        Command::Enum { kind, n, sample } => {
            let u = universe(*kind, *n, *sample, cli.seed, lim)?;
            let frames: Vec<Value> = u.frames.iter().map(wire::frame_to_value).collect();
            emit_json(out, &Value::from(frames))
        }
        Command::Fr { kind, n, axioms: path, sample } => {
            let phis = axioms(path, *kind)?;
            let u = universe(*kind, *n, *sample, cli.seed, lim)?;
            let members = harness::fr_class(&phis, &u, lim)?;
            let frames: Vec<Value> = members.iter().map(|&i| wire::frame_to_value(&u.frames[i])).collect();
            emit_json(
                out,
                &json!({ "universe_size": u.len(), "members": members, "frames": frames }),
            )
        }
        Command::Audit {
            kind,
            n,
            axioms: path,
            sample,
            image_budget,
        } => {
            let phis = axioms(path, *kind)?;
            let u = universe(*kind, *n, *sample, cli.seed, lim)?;
            let members = harness::fr_class(&phis, &u, lim)?;
            let mut budget = AuditBudget::default();
            if let Some(b) = image_budget {
                budget.image_maps = *b;
            }
            let report = harness::audit_closure(&members, &u, Some(&phis), &budget, lim)?;
            emit(out, &serde_json::to_string_pretty(&report).expect("report"))?;
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Property("audit failed".into()))
            }
        }
        Command::Dot { frame } => {
            let f = load_frame(frame, lim)?;
            write!(out, "{}", dot::frame_to_dot(&f)).map_err(|e| Failure::Usage(format!("write failed: {e}")))
        }
    }
}
