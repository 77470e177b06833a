//! Line-oriented certificate files.
//!
//! ```text
//! vcert-certificate 1
//! kind vcc-safety
//! k 2
//! variables x1 x2 y1 y2
//! eta_lb 0.001
//! eta 0.0013 0.0010
//! gamma
//! rho
//! lambda none
//! assignment 1 2
//! matrix A
//! 0 1
//! 1 0
//! function 1
//! -19.489*x1^2*y1 + 10.356
//! function 2
//! 19.575*x1^2*y1 + 10.356
//! gram step[1] 3f1c...
//! ```
//!
//! Function headers may carry automaton indices, `function 1 q=0` for
//! ranking functions and `function 1 q=0 p=1` for closures (0-based).
//! Function numbers and assignment entries are 1-based. Lines starting
//! with `#` and blank lines are ignored. Gram hashes are informational;
//! loaded certificates carry no Gram matrices.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::poly::{Polynomial, VariableSpace};
use crate::sosprog::GramCertificate;
use crate::synth::{CertificateKind, FnKey, VectorCertificate};

pub const HEADER: &str = "vcert-certificate 1";

fn floats(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

/// SHA-256 over the Gram and multiplier matrices, entries in row-major order.
pub fn gram_hash(g: &GramCertificate) -> String {
    let mut h = Sha256::new();
    let mut feed = |m: &nalgebra::DMatrix<f64>| {
        h.update((m.nrows() as u64).to_le_bytes());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                h.update(m[(r, c)].to_le_bytes());
            }
        }
    };
    feed(&g.principal);
    for (m, _, _) in &g.multipliers {
        feed(m);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_certificate(c: &VectorCertificate) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{HEADER}");
    let _ = writeln!(s, "kind {}", c.kind);
    let _ = writeln!(s, "k {}", c.k);
    let _ = writeln!(s, "variables {}", c.space.names().join(" "));
    let _ = writeln!(s, "eta_lb {:?}", c.eta_lb);
    for (key, v) in [("eta", &c.eta), ("gamma", &c.gamma), ("rho", &c.rho)] {
        let _ = writeln!(s, "{}", format!("{key} {}", floats(v)).trim_end());
    }
    match c.lambda {
        Some(l) => {
            let _ = writeln!(s, "lambda {l:?}");
        }
        None => s.push_str("lambda none\n"),
    }
    let asg: Vec<String> = c.assignment.iter().map(|a| (a + 1).to_string()).collect();
    let _ = writeln!(s, "{}", format!("assignment {}", asg.join(" ")).trim_end());
    for (name, m) in &c.matrices {
        let _ = writeln!(s, "matrix {name}");
        for row in m {
            let _ = writeln!(s, "{}", floats(row));
        }
    }
    for (key, p) in &c.functions {
        let _ = write!(s, "function {}", key.i + 1);
        if let Some(q) = key.q {
            let _ = write!(s, " q={q}");
        }
        if let Some(p) = key.p {
            let _ = write!(s, " p={p}");
        }
        let _ = writeln!(s, "\n{}", p.to_text());
    }
    for g in &c.grams {
        let _ = writeln!(s, "gram {} {}", g.label.replace(' ', "_"), gram_hash(g));
    }
    s
}

/// Trim trailing whitespace from every line so files written on any
/// platform compare equal.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_floats(line: usize, toks: &[&str]) -> Result<Vec<f64>> {
    toks.iter().map(|t| t.parse::<f64>().map_err(|_| Error::parse(line, format!("`{t}` is not a number")))).collect()
}

pub fn read_certificate(text: &str) -> Result<VectorCertificate> {
    let all: Vec<(usize, &str)> = lines(text).collect();
    let mut it = all.into_iter().peekable();
    match it.next() {
        Some((_, HEADER)) => {}
        Some((n, l)) => return Err(Error::parse(n, format!("expected `{HEADER}`, found `{l}`"))),
        None => return Err(Error::parse(1, "empty certificate file")),
    }
    let mut kind = None;
    let mut k = None;
    let mut space: Option<VariableSpace> = None;
    let mut eta_lb = 0.0;
    let (mut eta, mut gamma, mut rho) = (Vec::new(), Vec::new(), Vec::new());
    let mut lambda = None;
    let mut assignment = Vec::new();
    let mut matrices = BTreeMap::new();
    let mut functions = BTreeMap::new();
    while let Some((n, line)) = it.next() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let rest = &toks[1..];
        match toks[0] {
            "kind" => {
                let name = rest.first().copied().unwrap_or("");
                kind = Some(
                    CertificateKind::from_name(name)
                        .ok_or_else(|| Error::parse(n, format!("unknown certificate kind `{name}`")))?,
                );
            }
            "k" => {
                let v = rest.first().and_then(|t| t.parse::<usize>().ok()).filter(|v| *v > 0);
                k = Some(v.ok_or_else(|| Error::parse(n, "k must be a positive integer"))?);
            }
            "variables" => {
                space = Some(VariableSpace::new(rest.iter().copied()).map_err(|e| Error::parse(n, e.to_string()))?);
            }
            "eta_lb" => {
                eta_lb = *parse_floats(n, rest)?.first().ok_or_else(|| Error::parse(n, "missing value"))?;
            }
            "eta" => eta = parse_floats(n, rest)?,
            "gamma" => gamma = parse_floats(n, rest)?,
            "rho" => rho = parse_floats(n, rest)?,
            "lambda" => {
                lambda = match rest {
                    ["none"] => None,
                    [v] => Some(parse_floats(n, &[v])?[0]),
                    _ => return Err(Error::parse(n, "lambda takes one value or `none`")),
                }
            }
            "assignment" => {
                assignment = rest
                    .iter()
                    .map(|t| match t.parse::<usize>() {
                        Ok(v) if v > 0 => Ok(v - 1),
                        _ => Err(Error::parse(n, format!("assignment entry `{t}` must be a positive integer"))),
                    })
                    .collect::<Result<_>>()?;
            }
            "matrix" => {
                let name = rest.first().ok_or_else(|| Error::parse(n, "matrix needs a name"))?.to_string();
                let size = k.ok_or_else(|| Error::parse(n, "`k` must precede matrices"))?;
                let mut m = Vec::with_capacity(size);
                for _ in 0..size {
                    let (rn, row) = it.next().ok_or_else(|| Error::parse(n, format!("matrix {name} is truncated")))?;
                    let toks: Vec<&str> = row.split_whitespace().collect();
                    let r = parse_floats(rn, &toks)?;
                    if r.len() != size {
                        return Err(Error::parse(
                            rn,
                            format!("matrix {name} row has {} entries, expected {size}", r.len()),
                        ));
                    }
                    m.push(r);
                }
                matrices.insert(name, m);
            }
            "function" => {
                let sp = space.as_ref().ok_or_else(|| Error::parse(n, "`variables` must precede functions"))?;
                let i = rest
                    .first()
                    .and_then(|t| t.parse::<usize>().ok())
                    .filter(|i| *i > 0)
                    .ok_or_else(|| Error::parse(n, "function number must be a positive integer"))?;
                let mut key = FnKey::plain(i - 1);
                for t in &rest[1..] {
                    let (tag, v) =
                        t.split_once('=').ok_or_else(|| Error::parse(n, format!("bad function tag `{t}`")))?;
                    let v: usize = v.parse().map_err(|_| Error::parse(n, format!("bad index in `{t}`")))?;
                    match tag {
                        "q" => key.q = Some(v),
                        "p" => key.p = Some(v),
                        _ => return Err(Error::parse(n, format!("unknown function tag `{tag}`"))),
                    }
                }
                let (pn, body) = it.next().ok_or_else(|| Error::parse(n, "function has no polynomial"))?;
                let p = Polynomial::parse(sp, body).map_err(|e| Error::parse(pn, e.to_string()))?;
                if functions.insert(key, p).is_some() {
                    return Err(Error::parse(n, "function declared twice"));
                }
            }
            "gram" => {}
            other => return Err(Error::parse(n, format!("unknown directive `{other}`"))),
        }
    }
    let kind = kind.ok_or_else(|| Error::parse(0, "missing `kind`"))?;
    let k = k.ok_or_else(|| Error::parse(0, "missing `k`"))?;
    let space = space.ok_or_else(|| Error::parse(0, "missing `variables`"))?;
    if let Some(key) = functions.keys().find(|key| key.i >= k) {
        return Err(Error::validation(format!("function {} exceeds k = {k}", key.i + 1)));
    }
    let cert = VectorCertificate {
        kind,
        k,
        space,
        functions,
        matrices,
        eta,
        gamma,
        rho,
        lambda,
        assignment,
        eta_lb,
        grams: Vec::new(),
    };
    cert.check_invariants()?;
    Ok(cert)
}
