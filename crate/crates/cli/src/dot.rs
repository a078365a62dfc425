//! Graphviz export. Order covers are solid edges drawn upward; the modal
//! structure is dashed and labelled.

use std::fmt::Write;

use gtw_core::bits::{self, Mask};
use gtw_core::frame::{Frame, Structure};

fn set_label(m: Mask) -> String {
    let items: Vec<String> = bits::members(m).map(|x| x.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

pub fn frame_to_dot(f: &Frame) -> String {
    let mut out = String::new();
    let n = f.size();
    writeln!(out, "digraph frame {{").unwrap();
    writeln!(out, "  rankdir=BT;").unwrap();
    writeln!(out, "  node [shape=circle];").unwrap();
    for x in 0..n {
        writeln!(out, "  s{x} [label=\"{x}\"];").unwrap();
    }
    for (a, b) in f.poset().covers() {
        writeln!(out, "  s{a} -> s{b};").unwrap();
    }
    let mut sets: Vec<Mask> = Vec::new();
    let mut set_node = |out: &mut String, m: Mask| -> usize {
        if let Some(i) = sets.iter().position(|&s| s == m) {
            return i;
        }
        sets.push(m);
        let i = sets.len() - 1;
        writeln!(out, "  u{i} [shape=box, label=\"{}\"];", set_label(m)).unwrap();
        i
    };
    match f.structure() {
        Structure::Box(r) | Structure::Si(r) => {
            let label = if matches!(f.structure(), Structure::Box(_)) { "R" } else { "R_s" };
            for (x, &row) in r.iter().enumerate() {
                for y in bits::members(row) {
                    writeln!(out, "  s{x} -> s{y} [style=dashed, color=blue, label=\"{label}\"];").unwrap();
                }
            }
        }
        Structure::Im(w) => {
            for (x, fam) in w.iter().enumerate() {
                for &a in fam {
                    let i = set_node(&mut out, a);
                    writeln!(out, "  s{x} -> u{i} [style=dashed, color=blue, label=\"N\"];").unwrap();
                }
            }
        }
        Structure::Cin(w) => {
            for (x, &(b, d)) in w.iter().enumerate() {
                for (fam, label, color) in [(b, "N_box", "blue"), (d, "N_dia", "red")] {
                    for s in bits::members(fam) {
                        let i = set_node(&mut out, s as Mask);
                        writeln!(out, "  s{x} -> u{i} [style=dashed, color={color}, label=\"{label}\"];").unwrap();
                    }
                }
            }
        }
    }
    writeln!(out, "}}").unwrap();
    out
}
