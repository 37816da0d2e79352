//! Line-oriented lattice files.
//!
//! ```text
//! lattice tree 3 1
//! 0 0 0: 1 2 3
//! 1 1 1: 0
//! 2 1 1: 0
//! 3 1 1: 0
//! ```
//!
//! Each vertex line is `v shell boundary: w1 w2 ...` with `-` for an unset
//! shell and out-edges in argument order.

use std::fmt::Write as _;

use super::{Lattice, LatticeKind, Tiling};
use crate::error::{Error, Result};

pub(super) fn write(lattice: &Lattice) -> String {
    let mut out = String::with_capacity(16 * lattice.vertex_count() + lattice.edge_count() * 6);
    let _ = writeln!(out, "lattice {}", lattice.kind());
    for v in 0..lattice.vertex_count() {
        let _ = write!(out, "{v} ");
        match lattice.shell(v) {
            Some(s) => {
                let _ = write!(out, "{s}");
            }
            None => out.push('-'),
        }
        let _ = write!(out, " {}:", u8::from(lattice.is_boundary(v)));
        for w in lattice.out_edges(v) {
            let _ = write!(out, " {w}");
        }
        out.push('\n');
    }
    out
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn num(line: usize, tok: Option<&str>, what: &str) -> Result<u32> {
    let tok = tok.ok_or_else(|| perr(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| perr(line, format!("bad {what}: {tok:?}")))
}

fn parse_header(line: &str) -> Result<LatticeKind> {
    let mut toks = line.split_ascii_whitespace();
    if toks.next() != Some("lattice") {
        return Err(perr(1, "header must start with `lattice`"));
    }
    let kind = match toks.next() {
        Some("tree") => LatticeKind::Tree {
            q: num(1, toks.next(), "q")?,
            depth: num(1, toks.next(), "depth")?,
        },
        Some("hyperbolic") => LatticeKind::Hyperbolic {
            p: num(1, toks.next(), "p")?,
            q: num(1, toks.next(), "q")?,
            shells: num(1, toks.next(), "shells")?,
        },
        Some("euclidean") => {
            let p = num(1, toks.next(), "p")?;
            let q = num(1, toks.next(), "q")?;
            let tiling = Tiling::from_pq(p, q)
                .ok_or_else(|| perr(1, format!("{{{p},{q}}} is not a Euclidean tiling")))?;
            LatticeKind::Euclidean {
                tiling,
                width: num(1, toks.next(), "width")?,
                height: num(1, toks.next(), "height")?,
            }
        }
        Some("toom") => LatticeKind::Toom {
            width: num(1, toks.next(), "width")?,
            height: num(1, toks.next(), "height")?,
        },
        Some("custom") => LatticeKind::Custom,
        Some(other) => return Err(perr(1, format!("unknown lattice kind {other:?}"))),
        None => return Err(perr(1, "missing lattice kind")),
    };
    if let Some(extra) = toks.next() {
        return Err(perr(1, format!("unexpected token {extra:?} in header")));
    }
    Ok(kind)
}

pub(super) fn parse(text: &str) -> Result<Lattice> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| perr(1, "empty input"))?;
    let kind = parse_header(header)?;
    let mut edges = Vec::new();
    let mut shells = Vec::new();
    let mut boundary = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let (head, tail) = line
            .split_once(':')
            .ok_or_else(|| perr(lineno, "missing `:` after vertex fields"))?;
        let mut toks = head.split_ascii_whitespace();
        let v = num(lineno, toks.next(), "vertex index")?;
        if v as usize != edges.len() {
            return Err(perr(
                lineno,
                format!("expected vertex {}, found {v}", edges.len()),
            ));
        }
        let shell = match toks.next() {
            Some("-") => None,
            tok => Some(num(lineno, tok, "shell")?),
        };
        let flag = match toks.next() {
            Some("0") => false,
            Some("1") => true,
            other => return Err(perr(lineno, format!("boundary flag must be 0 or 1, got {other:?}"))),
        };
        if let Some(extra) = toks.next() {
            return Err(perr(lineno, format!("unexpected token {extra:?}")));
        }
        let out = tail
            .split_ascii_whitespace()
            .map(|t| num(lineno, Some(t), "out-edge"))
            .collect::<Result<Vec<_>>>()?;
        edges.push(out);
        shells.push(shell);
        boundary.push(flag);
    }
    Lattice::from_parts(kind, edges, shells, boundary).map_err(|e| match e {
        Error::Lattice(msg) => perr(0, msg),
        other => other,
    })
}
