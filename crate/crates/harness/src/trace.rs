//! Update traces. Text format:
//!
//! ```text
//! # comment
//! n 10 delta 3 m 12
//! + 0 1
//! - 0 1
//! ```
//!
//! Vertices are 0-indexed. Blank lines and `#` comments are ignored.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use hedcs::graph::{EdgeKey, GraphError, VertexId};
use hedcs::matching::UpdateKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// ChaCha stream used for trace generation. Engine ranks use stream 0 of
/// the same seed, so the adversary never sees the engine's randomness.
pub const TRACE_STREAM: u64 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {msg}")]
    Illegal { line: usize, msg: String },
    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub n: usize,
    pub delta_cap: usize,
    pub m_cap: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub op: UpdateKind,
    pub u: VertexId,
    pub v: VertexId,
}

impl TraceEvent {
    pub fn insert(e: EdgeKey) -> Self {
        Self { op: UpdateKind::Insert, u: e.u(), v: e.v() }
    }

    pub fn delete(e: EdgeKey) -> Self {
        Self { op: UpdateKind::Delete, u: e.u(), v: e.v() }
    }

    /// Fails on self-loops, which only an unvalidated trace can hold.
    pub fn edge(&self) -> Result<EdgeKey, GraphError> {
        EdgeKey::new(self.u, self.v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub header: TraceHeader,
    pub events: Vec<TraceEvent>,
    /// Source line of each event; empty for generated traces.
    pub lines: Vec<usize>,
}

impl Trace {
    pub fn new(header: TraceHeader) -> Self {
        Self { header, events: Vec::new(), lines: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Line number of event `i`, counting the header as line 1 when the
    /// trace was not parsed from text.
    pub fn line_of(&self, i: usize) -> usize {
        self.lines.get(i).copied().unwrap_or(i + 2)
    }

    pub fn parse(text: &str) -> Result<Self, TraceError> {
        let mut header = None;
        let mut events = Vec::new();
        let mut lines = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let toks: Vec<&str> = body.split_whitespace().collect();
            let syntax = |msg: String| TraceError::Syntax { line, msg };
            let num = |s: &str| s.parse::<usize>().map_err(|_| syntax(format!("`{s}` is not a non-negative integer")));
            if header.is_none() {
                match toks.as_slice() {
                    ["n", n, "delta", d, "m", m] => {
                        header = Some(TraceHeader { n: num(n)?, delta_cap: num(d)?, m_cap: num(m)? })
                    }
                    _ => return Err(syntax(format!("expected `n <N> delta <D> m <M>`, found `{body}`"))),
                }
                continue;
            }
            let op = match toks.first() {
                Some(&"+") => UpdateKind::Insert,
                Some(&"-") => UpdateKind::Delete,
                _ => return Err(syntax(format!("expected `+ u v` or `- u v`, found `{body}`"))),
            };
            let [_, u, v] = toks.as_slice() else {
                return Err(syntax(format!("expected `+ u v` or `- u v`, found `{body}`")));
            };
            let (u, v) = (num(u)?, num(v)?);
            if u > VertexId::MAX as usize || v > VertexId::MAX as usize {
                return Err(syntax("vertex id too large".into()));
            }
            events.push(TraceEvent { op, u: u as VertexId, v: v as VertexId });
            lines.push(line);
        }
        let header = header.ok_or(TraceError::Syntax { line: 1, msg: "missing header".into() })?;
        Ok(Self { header, events, lines })
    }

    /// Parses and then checks legality.
    pub fn load(text: &str) -> Result<Self, TraceError> {
        let t = Self::parse(text)?;
        t.validate()?;
        Ok(t)
    }

    pub fn write<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let h = self.header;
        writeln!(out, "n {} delta {} m {}", h.n, h.delta_cap, h.m_cap)?;
        for ev in &self.events {
            let c = if ev.op == UpdateKind::Insert { '+' } else { '-' };
            writeln!(out, "{c} {} {}", ev.u, ev.v)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ASCII")
    }

    /// Rejects self-loops, out-of-range vertices, double inserts, phantom
    /// deletes and cap violations, naming the offending line.
    pub fn validate(&self) -> Result<(), TraceError> {
        let h = self.header;
        let mut present = std::collections::HashSet::new();
        let mut deg = vec![0usize; h.n];
        for (i, ev) in self.events.iter().enumerate() {
            let illegal = |msg: String| TraceError::Illegal { line: self.line_of(i), msg };
            if ev.u as usize >= h.n || ev.v as usize >= h.n {
                return Err(illegal(format!("vertex out of range for n = {}", h.n)));
            }
            let e = EdgeKey::new(ev.u, ev.v).map_err(|_| illegal(format!("self-loop at {}", ev.u)))?;
            match ev.op {
                UpdateKind::Insert => {
                    if !present.insert(e) {
                        return Err(illegal(format!("insert of present edge {e}")));
                    }
                    deg[e.u() as usize] += 1;
                    deg[e.v() as usize] += 1;
                    if deg[e.u() as usize] > h.delta_cap || deg[e.v() as usize] > h.delta_cap {
                        return Err(illegal(format!("insert of {e} exceeds degree cap {}", h.delta_cap)));
                    }
                    if present.len() > h.m_cap {
                        return Err(illegal(format!("insert of {e} exceeds edge cap {}", h.m_cap)));
                    }
                }
                UpdateKind::Delete => {
                    if !present.remove(&e) {
                        return Err(illegal(format!("delete of absent edge {e}")));
                    }
                    deg[e.u() as usize] -= 1;
                    deg[e.v() as usize] -= 1;
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Random,
    SlidingWindow,
    InsertOnly,
    Churn,
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceKind::Random => "random",
            TraceKind::SlidingWindow => "sliding_window",
            TraceKind::InsertOnly => "insert_only",
            TraceKind::Churn => "churn",
        })
    }
}

impl FromStr for TraceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(TraceKind::Random),
            "sliding_window" | "sliding-window" => Ok(TraceKind::SlidingWindow),
            "insert_only" | "insert-only" => Ok(TraceKind::InsertOnly),
            "churn" => Ok(TraceKind::Churn),
            _ => Err(format!("unknown trace kind `{s}`")),
        }
    }
}

/// Present-edge bookkeeping shared by the generators.
struct State {
    header: TraceHeader,
    rng: ChaCha8Rng,
    present: Vec<EdgeKey>,
    pos: BTreeMap<EdgeKey, usize>,
    deg: Vec<usize>,
    events: Vec<TraceEvent>,
}

impl State {
    fn room(&self) -> bool {
        self.present.len() < self.header.m_cap
    }

    /// Tries a bounded number of random pairs; `None` if all were blocked.
    fn random_insertable(&mut self) -> Option<EdgeKey> {
        let n = self.header.n as VertexId;
        for _ in 0..64 {
            let (a, b) = (self.rng.gen_range(0..n), self.rng.gen_range(0..n));
            let Ok(e) = EdgeKey::new(a, b) else { continue };
            if self.deg[a as usize] < self.header.delta_cap
                && self.deg[b as usize] < self.header.delta_cap
                && !self.pos.contains_key(&e)
            {
                return Some(e);
            }
        }
        None
    }

    fn insert(&mut self, e: EdgeKey) {
        self.pos.insert(e, self.present.len());
        self.present.push(e);
        self.deg[e.u() as usize] += 1;
        self.deg[e.v() as usize] += 1;
        self.events.push(TraceEvent::insert(e));
    }

    fn delete_at(&mut self, i: usize) {
        let e = self.present.swap_remove(i);
        self.pos.remove(&e);
        if let Some(&moved) = self.present.get(i) {
            self.pos.insert(moved, i);
        }
        self.deg[e.u() as usize] -= 1;
        self.deg[e.v() as usize] -= 1;
        self.events.push(TraceEvent::delete(e));
    }

    fn delete_random(&mut self) {
        let i = self.rng.gen_range(0..self.present.len());
        self.delete_at(i);
    }
}

/// Deterministic in `seed`; draws from [`TRACE_STREAM`].
pub fn generate_trace(
    kind: TraceKind,
    n: usize,
    delta_cap: usize,
    m_cap: usize,
    length: usize,
    seed: u64,
) -> Result<Trace, TraceError> {
    if n < 2 || delta_cap == 0 || m_cap == 0 {
        return Err(TraceError::Infeasible("need n >= 2, delta_cap >= 1 and m_cap >= 1".into()));
    }
    if n > VertexId::MAX as usize {
        return Err(TraceError::Infeasible("n too large".into()));
    }
    let capacity = m_cap.min(n * delta_cap.min(n - 1) / 2);
    if kind == TraceKind::InsertOnly && length > capacity {
        return Err(TraceError::Infeasible(format!(
            "{length} insertions cannot fit under m_cap = {m_cap}, delta_cap = {delta_cap}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(TRACE_STREAM);
    let header = TraceHeader { n, delta_cap, m_cap };
    let mut s = State {
        header,
        rng,
        present: Vec::new(),
        pos: BTreeMap::new(),
        deg: vec![0; n],
        events: Vec::with_capacity(length),
    };
    // Target occupancy for churn and window sizes.
    let target = (capacity * 9 / 10).max(1);
    let mut stalls = 0usize;
    let mut window = VecDeque::new();
    while s.events.len() < length {
        let before = s.events.len();
        match kind {
            TraceKind::InsertOnly => {
                if let Some(e) = s.random_insertable() {
                    s.insert(e);
                }
            }
            TraceKind::Random => {
                let want_insert = s.present.is_empty() || (s.room() && s.rng.gen_bool(0.5));
                if want_insert {
                    if let Some(e) = s.random_insertable() {
                        s.insert(e);
                    } else if !s.present.is_empty() {
                        s.delete_random();
                    }
                } else {
                    s.delete_random();
                }
            }
            TraceKind::Churn => {
                let p_insert = if s.present.len() < target { 0.8 } else { 0.5 };
                let want_insert = s.present.is_empty() || (s.room() && s.rng.gen_bool(p_insert));
                if want_insert {
                    if let Some(e) = s.random_insertable() {
                        s.insert(e);
                    } else if !s.present.is_empty() {
                        s.delete_random();
                    }
                } else {
                    s.delete_random();
                }
            }
            TraceKind::SlidingWindow => {
                let evict = s.present.len() >= target;
                let fresh = if evict { None } else { s.random_insertable() };
                if let Some(e) = fresh {
                    s.insert(e);
                    window.push_back(e);
                } else if let Some(oldest) = window.pop_front() {
                    let i = s.pos[&oldest];
                    s.delete_at(i);
                }
            }
        }
        if s.events.len() == before {
            stalls += 1;
            if stalls > 10_000 {
                return Err(TraceError::Infeasible(format!(
                    "generator stalled after {} events; caps too tight",
                    s.events.len()
                )));
            }
        } else {
            stalls = 0;
        }
    }
    Ok(Trace { header, events: s.events, lines: Vec::new() })
}
