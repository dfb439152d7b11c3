//! CPLEX-style LP text export, streamed straight from the parameters so
//! instances far above the build cap can still be written, plus a reader
//! that either checks the syntax as bytes arrive or materialises the file.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::lp::lp_size;
use crate::profile::{prefix_sum, profile_name, Profiles};
use crate::simplex::Sense;
use crate::{check_params, BoundsError};

const TERMS_PER_LINE: usize = 8;
const FLUSH_AT: usize = 1 << 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LpStats {
    pub rows: u64,
    pub terms: u64,
    pub bytes: u64,
}

struct RowWriter<'a, W: Write> {
    out: &'a mut W,
    buf: Vec<u8>,
    in_row: usize,
    stats: LpStats,
}

impl<W: Write> RowWriter<'_, W> {
    fn raw(&mut self, s: &[u8]) -> io::Result<()> {
        self.buf.extend_from_slice(s);
        if self.buf.len() >= FLUSH_AT {
            self.flush()?;
        }
        Ok(())
    }

    fn flush(&mut self) -> io::Result<()> {
        self.stats.bytes += self.buf.len() as u64;
        self.out.write_all(&self.buf)?;
        self.buf.clear();
        Ok(())
    }

    fn start(&mut self, name: &str) -> io::Result<()> {
        self.in_row = 0;
        self.stats.rows += 1;
        self.raw(b" ")?;
        self.raw(name.as_bytes())?;
        self.raw(b":")
    }

    fn term(&mut self, coef: i64, parts: &[&[u8]]) -> io::Result<()> {
        if self.in_row > 0 && self.in_row.is_multiple_of(TERMS_PER_LINE) {
            self.buf.extend_from_slice(b"\n  ");
        }
        let sign: &[u8] = if coef < 0 {
            b" -"
        } else if self.in_row > 0 {
            b" +"
        } else {
            b""
        };
        self.buf.extend_from_slice(sign);
        let mag = coef.unsigned_abs();
        if mag != 1 {
            self.buf.extend_from_slice(format!(" {mag}").as_bytes());
        }
        self.buf.push(b' ');
        for p in parts {
            self.buf.extend_from_slice(p);
        }
        self.in_row += 1;
        self.stats.terms += 1;
        if self.buf.len() >= FLUSH_AT {
            self.flush()?;
        }
        Ok(())
    }

    fn end(&mut self, rel: &str, rhs: &str) -> io::Result<()> {
        self.raw(format!(" {rel} {rhs}\n").as_bytes())
    }
}

/// Streams LP(k, β, β⁻) to `out`. Row and term order match `build_lp`.
pub fn write_lp<W: Write>(k: usize, beta: u32, beta_minus: u32, out: &mut W) -> Result<LpStats, BoundsError> {
    check_params(k, beta, beta_minus)?;
    let size = lp_size(k, beta);
    let pr = Profiles::new(k, beta);
    let np = pr
        .count()
        .filter(|&c| c <= u32::MAX as u64)
        .ok_or_else(|| BoundsError::InvalidParams("profile count does not fit in memory".into()))?;
    let names: Vec<String> = (0..np)
        .map(|i| {
            let mut b = vec![0; k];
            pr.entries(i, &mut b);
            profile_name(&b)
        })
        .collect();
    let js: Vec<String> = (1..=k).map(|j| j.to_string()).collect();

    let mut w = RowWriter { out, buf: Vec::with_capacity(FLUSH_AT + 4096), in_row: 0, stats: LpStats::default() };
    w.raw(format!("\\ factor-revealing LP k={k} beta={beta} beta_minus={beta_minus}\n").as_bytes())?;
    w.raw(
        format!(
            "\\ variables {} (x {}, nP {np}, nQ {np}, r 1)\nMinimize\n obj: r\nSubject To\n",
            size.vars, size.x_vars
        )
        .as_bytes(),
    )?;

    let mut buf = vec![0u32; k];
    for side in *b"PQ" {
        for idx in 0..np {
            pr.entries(idx, &mut buf);
            let own = &names[idx as usize];
            for j in 1..=k {
                let coef = buf[j - 1] as i64;
                let s = prefix_sum(&buf, j);
                if coef == 0 && s > beta {
                    continue;
                }
                let tag = if side == b'P' { "bp" } else { "bq" };
                w.start(&format!("{tag}_{own}_{j}"))?;
                if coef != 0 {
                    let var: &[u8] = if side == b'P' { b"nP_" } else { b"nQ_" };
                    w.term(coef, &[var, own.as_bytes()])?;
                }
                if s <= beta {
                    let mut res = Ok(());
                    let jb = js[j - 1].as_bytes();
                    pr.for_each_bounded(j, beta - s, &mut |other| {
                        if res.is_err() {
                            return;
                        }
                        let o = names[pr.index(other) as usize].as_bytes();
                        res = if side == b'P' {
                            w.term(-1, &[b"x_", own.as_bytes(), b"_", o, b"_", jb])
                        } else {
                            w.term(-1, &[b"x_", o, b"_", own.as_bytes(), b"_", jb])
                        };
                    });
                    res?;
                }
                w.end("=", "0")?;
            }
        }
    }

    w.start("sumq")?;
    for name in &names {
        w.term(1, &[b"nQ_", name.as_bytes()])?;
    }
    w.term(-1, &[b"r"])?;
    w.end("=", "0")?;
    w.start("sump")?;
    for name in &names {
        w.term(1, &[b"nP_", name.as_bytes()])?;
    }
    w.end("=", "1")?;

    w.start("edges")?;
    for j in 1..=k {
        let jb = js[j - 1].as_bytes();
        for p in 0..np {
            pr.entries(p, &mut buf);
            let s = prefix_sum(&buf, j);
            if s > beta {
                continue;
            }
            let pn = names[p as usize].as_bytes();
            let mut res = Ok(());
            pr.for_each_bounded(j, beta - s, &mut |q| {
                if res.is_ok() {
                    let qn = names[pr.index(q) as usize].as_bytes();
                    res = w.term(1, &[b"x_", pn, b"_", qn, b"_", jb]);
                }
            });
            res?;
        }
    }
    w.end(">=", &format!("{}", beta_minus as f64 / 2.0))?;
    w.raw(b"Bounds\n r >= 0\nEnd\n")?;
    w.flush()?;
    Ok(w.stats)
}

pub fn export_lp_file(k: usize, beta: u32, beta_minus: u32, path: &Path) -> Result<LpStats, BoundsError> {
    let mut out = BufWriter::new(File::create(path)?);
    let stats = write_lp(k, beta, beta_minus, &mut out)?;
    out.flush()?;
    Ok(stats)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedRow {
    pub name: String,
    pub terms: Vec<(f64, String)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParsedLp {
    /// `(k, β, β⁻)` from the header comment.
    pub header: Option<(usize, u32, u32)>,
    pub objective: Vec<(f64, String)>,
    pub rows: Vec<ParsedRow>,
    pub bounds: Vec<(String, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Done,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Expect {
    Name,
    Term,
    Rhs(Sense),
}

/// Incremental reader. Feed it bytes through `Write`, then call `finish`.
/// With `keep` off it only validates and counts.
pub struct LpChecker {
    keep: bool,
    partial: Vec<u8>,
    line: usize,
    section: Section,
    expect: Expect,
    sign: f64,
    coef: Option<f64>,
    row: Option<ParsedRow>,
    row_names: HashSet<String>,
    parsed: ParsedLp,
    stats: LpStats,
    error: Option<BoundsError>,
}

fn valid_name(s: &str) -> bool {
    let b = s.as_bytes();
    matches!(b.first(), Some(c) if c.is_ascii_alphabetic() || *c == b'_')
        && b.iter().all(|&c| c.is_ascii_alphanumeric() || c == b'_' || c == b'.')
}

impl LpChecker {
    pub fn new(keep: bool) -> Self {
        Self {
            keep,
            partial: Vec::new(),
            line: 0,
            section: Section::Preamble,
            expect: Expect::Name,
            sign: 1.0,
            coef: None,
            row: None,
            row_names: HashSet::new(),
            parsed: ParsedLp::default(),
            stats: LpStats::default(),
            error: None,
        }
    }

    fn err(&self, msg: impl Into<String>) -> BoundsError {
        BoundsError::Parse { line: self.line, msg: msg.into() }
    }

    fn header(&mut self, text: &str) {
        let mut vals = [None; 3];
        for tok in text.split_ascii_whitespace() {
            for (i, key) in ["k=", "beta=", "beta_minus="].iter().enumerate() {
                if let Some(v) = tok.strip_prefix(key) {
                    vals[i] = v.parse::<u64>().ok();
                }
            }
        }
        if let [Some(k), Some(b), Some(bm)] = vals {
            self.parsed.header = Some((k as usize, b as u32, bm as u32));
        }
    }

    fn feed_line(&mut self, raw: &[u8]) -> Result<(), BoundsError> {
        self.line += 1;
        let text = std::str::from_utf8(raw).map_err(|_| self.err("not UTF-8"))?;
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Ok(());
        }
        if let Some(c) = trimmed.strip_prefix('\\') {
            if self.parsed.header.is_none() {
                self.header(c);
            }
            return Ok(());
        }
        let keyword = |words: &[&str]| words.iter().any(|w| trimmed.eq_ignore_ascii_case(w));
        let next = if trimmed.len() > 10 {
            None
        } else if keyword(&["minimize", "minimum", "min"]) {
            Some(Section::Objective)
        } else if keyword(&["subject to", "st", "s.t."]) {
            Some(Section::Constraints)
        } else if keyword(&["bounds"]) {
            Some(Section::Bounds)
        } else if keyword(&["end"]) {
            Some(Section::Done)
        } else {
            None
        };
        if let Some(next) = next {
            if self.expect != Expect::Name {
                return Err(self.err("section ends inside a row"));
            }
            let order = |s: Section| s as u8;
            if order(next) <= order(self.section) {
                return Err(self.err(format!("section {trimmed} out of order")));
            }
            self.section = next;
            return Ok(());
        }
        match self.section {
            Section::Preamble => Err(self.err("content before the objective section")),
            Section::Done => Err(self.err("content after End")),
            Section::Bounds => self.bound_line(trimmed),
            Section::Objective | Section::Constraints => {
                for tok in trimmed.split_ascii_whitespace() {
                    self.token(tok)?;
                }
                if self.section == Section::Objective && self.expect == Expect::Term {
                    self.close_objective()?;
                }
                Ok(())
            }
        }
    }

    fn bound_line(&mut self, line: &str) -> Result<(), BoundsError> {
        let toks: Vec<&str> = line.split_ascii_whitespace().collect();
        match toks.as_slice() {
            [name, ">=", v] if valid_name(name) => {
                let v: f64 = v.parse().map_err(|_| self.err(format!("bad bound {v}")))?;
                if self.keep {
                    self.parsed.bounds.push((name.to_string(), v));
                }
                Ok(())
            }
            _ => Err(self.err(format!("unsupported bound line `{line}`"))),
        }
    }

    fn close_objective(&mut self) -> Result<(), BoundsError> {
        let row = self.row.take().ok_or_else(|| self.err("empty objective"))?;
        if self.coef.is_some() {
            return Err(self.err("dangling coefficient in objective"));
        }
        if self.keep {
            self.parsed.objective = row.terms;
        }
        self.expect = Expect::Name;
        Ok(())
    }

    fn token(&mut self, tok: &str) -> Result<(), BoundsError> {
        match self.expect {
            Expect::Name => {
                let name = tok.strip_suffix(':').filter(|n| valid_name(n));
                let name = name.ok_or_else(|| self.err(format!("expected `name:`, found `{tok}`")))?;
                if self.section == Section::Constraints && !self.row_names.insert(name.to_string()) {
                    return Err(self.err(format!("duplicate row {name}")));
                }
                self.row = Some(ParsedRow { name: name.into(), terms: Vec::new(), sense: Sense::Eq, rhs: 0.0 });
                self.expect = Expect::Term;
                self.sign = 1.0;
                self.coef = None;
            }
            Expect::Term => {
                let rel = match tok {
                    "=" => Some(Sense::Eq),
                    ">=" => Some(Sense::Ge),
                    "<=" => Some(Sense::Le),
                    _ => None,
                };
                if let Some(sense) = rel {
                    if self.section != Section::Constraints {
                        return Err(self.err("relation in objective"));
                    }
                    if self.coef.is_some() || self.row.as_ref().is_some_and(|r| r.terms.is_empty()) {
                        return Err(self.err("relation without a preceding term"));
                    }
                    self.expect = Expect::Rhs(sense);
                } else if tok == "+" || tok == "-" {
                    if self.coef.is_some() {
                        return Err(self.err("sign after coefficient"));
                    }
                    self.sign = if tok == "-" { -1.0 } else { 1.0 };
                } else if tok.as_bytes()[0].is_ascii_digit() || tok.as_bytes()[0] == b'.' {
                    let v: f64 = tok.parse().map_err(|_| self.err(format!("bad number `{tok}`")))?;
                    if self.coef.is_some() {
                        return Err(self.err("two coefficients in a row"));
                    }
                    self.coef = Some(v);
                } else if valid_name(tok) {
                    let c = self.sign * self.coef.take().unwrap_or(1.0);
                    self.sign = 1.0;
                    if self.section == Section::Constraints {
                        self.stats.terms += 1;
                    }
                    let keep = self.keep;
                    let row = self.row.as_mut().expect("row open");
                    if keep {
                        row.terms.push((c, tok.to_string()));
                    } else if row.terms.is_empty() {
                        // Remember that the row is non-empty without storing it.
                        row.terms.push((c, String::new()));
                    }
                } else {
                    return Err(self.err(format!("bad token `{tok}`")));
                }
            }
            Expect::Rhs(sense) => {
                let v: f64 = tok.parse().map_err(|_| self.err(format!("bad right-hand side `{tok}`")))?;
                let mut row = self.row.take().expect("row open");
                row.sense = sense;
                row.rhs = v;
                self.stats.rows += 1;
                if self.keep {
                    self.parsed.rows.push(row);
                }
                self.expect = Expect::Name;
            }
        }
        Ok(())
    }

    pub fn stats(&self) -> LpStats {
        self.stats
    }

    pub fn finish(mut self) -> Result<ParsedLp, BoundsError> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        if !self.partial.is_empty() {
            let rest = std::mem::take(&mut self.partial);
            self.feed_line(&rest)?;
        }
        if self.section != Section::Done {
            return Err(self.err("missing End"));
        }
        if self.parsed.header.is_none() {
            return Err(self.err("missing (k, beta, beta_minus) header comment"));
        }
        Ok(self.parsed)
    }
}

impl Write for LpChecker {
    fn write(&mut self, data: &[u8]) -> io::Result<usize> {
        if self.error.is_some() {
            return Ok(data.len());
        }
        self.stats.bytes += data.len() as u64;
        let mut rest = data;
        while let Some(pos) = rest.iter().position(|&b| b == b'\n') {
            let res = if self.partial.is_empty() {
                self.feed_line(&rest[..pos])
            } else {
                self.partial.extend_from_slice(&rest[..pos]);
                let line = std::mem::take(&mut self.partial);
                let r = self.feed_line(&line);
                self.partial = line;
                self.partial.clear();
                r
            };
            if let Err(e) = res {
                self.error = Some(e);
                return Ok(data.len());
            }
            rest = &rest[pos + 1..];
        }
        self.partial.extend_from_slice(rest);
        Ok(data.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

pub fn parse_lp(text: &str) -> Result<ParsedLp, BoundsError> {
    let mut c = LpChecker::new(true);
    c.write_all(text.as_bytes())?;
    c.finish()
}
