//! Edmonds-style alternating-tree search with blossom contraction.
//!
//! One search per free root. State arrays are reset through a touched
//! list so a search costs time proportional to the tree it grows rather
//! than to `n`.

use super::{Matching, MatchingError, UNMATCHED};
use crate::graph::{GraphView, VertexId};

/// Vertex count above which [`maximum_matching_exact`] refuses to run.
pub const DEFAULT_EXACT_VERTEX_BOUND: usize = 2000;

const NONE: u32 = u32::MAX;

/// Work accounting of one matcher invocation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MatcherStats {
    /// Adjacency entries read, including the initial copy of the view.
    pub edge_visits: u64,
    pub augmentations: u64,
    pub passes: u32,
}

struct Search {
    adj: Vec<Vec<u32>>,
    mate: Vec<u32>,
    parent: Vec<u32>,
    base: Vec<u32>,
    depth: Vec<u32>,
    used: Vec<bool>,
    in_blossom: Vec<bool>,
    lca_mark: Vec<bool>,
    seen: Vec<bool>,
    touched: Vec<u32>,
    queue: Vec<u32>,
    visits: u64,
}

impl Search {
    fn from_view<G: GraphView>(view: &G) -> Self {
        let n = view.vertex_count();
        let mut visits = 0u64;
        let adj: Vec<Vec<u32>> = (0..n as VertexId)
            .map(|v| {
                let row: Vec<u32> = view.neighbors(v).collect();
                visits += row.len() as u64;
                row
            })
            .collect();
        Self {
            adj,
            mate: vec![NONE; n],
            parent: vec![NONE; n],
            base: (0..n as u32).collect(),
            depth: vec![0; n],
            used: vec![false; n],
            in_blossom: vec![false; n],
            lca_mark: vec![false; n],
            seen: vec![false; n],
            touched: Vec::new(),
            queue: Vec::new(),
            visits,
        }
    }

    fn greedy(&mut self) {
        for v in 0..self.adj.len() {
            if self.mate[v] != NONE {
                continue;
            }
            for i in 0..self.adj[v].len() {
                self.visits += 1;
                let w = self.adj[v][i];
                if self.mate[w as usize] == NONE {
                    self.mate[v] = w;
                    self.mate[w as usize] = v as u32;
                    break;
                }
            }
        }
    }

    fn touch(&mut self, v: u32) {
        if !self.seen[v as usize] {
            self.seen[v as usize] = true;
            self.touched.push(v);
        }
    }

    fn reset(&mut self) {
        for &v in &self.touched {
            let v = v as usize;
            self.parent[v] = NONE;
            self.base[v] = v as u32;
            self.used[v] = false;
            self.depth[v] = 0;
            self.seen[v] = false;
        }
        self.touched.clear();
        self.queue.clear();
    }

    fn lca(&mut self, mut a: u32, mut b: u32) -> u32 {
        let mut marked = Vec::new();
        loop {
            a = self.base[a as usize];
            self.lca_mark[a as usize] = true;
            marked.push(a);
            if self.mate[a as usize] == NONE {
                break;
            }
            a = self.parent[self.mate[a as usize] as usize];
        }
        let found = loop {
            b = self.base[b as usize];
            if self.lca_mark[b as usize] {
                break b;
            }
            b = self.parent[self.mate[b as usize] as usize];
        };
        for v in marked {
            self.lca_mark[v as usize] = false;
        }
        found
    }

    fn mark_path(&mut self, mut v: u32, b: u32, mut child: u32) {
        while self.base[v as usize] != b {
            let m = self.mate[v as usize];
            self.in_blossom[self.base[v as usize] as usize] = true;
            self.in_blossom[self.base[m as usize] as usize] = true;
            self.parent[v as usize] = child;
            child = m;
            v = self.parent[m as usize];
        }
    }

    /// Grows an alternating tree from `root`. Even vertices at depth
    /// `limit` or more are not expanded. Returns the free endpoint of an
    /// augmenting path if one is found.
    fn find_path(&mut self, root: u32, limit: u32) -> Option<u32> {
        self.touch(root);
        self.used[root as usize] = true;
        self.queue.push(root);
        let mut head = 0;
        while head < self.queue.len() {
            let v = self.queue[head];
            head += 1;
            if self.depth[v as usize] >= limit {
                continue;
            }
            for i in 0..self.adj[v as usize].len() {
                self.visits += 1;
                let to = self.adj[v as usize][i];
                if self.base[v as usize] == self.base[to as usize] || self.mate[v as usize] == to {
                    continue;
                }
                let to_mate = self.mate[to as usize];
                if to == root || (to_mate != NONE && self.parent[to_mate as usize] != NONE) {
                    let cur = self.lca(v, to);
                    let tree: Vec<u32> = self.touched.clone();
                    self.mark_path(v, cur, to);
                    self.mark_path(to, cur, v);
                    let cur_depth = self.depth[cur as usize];
                    for &i in &tree {
                        let iu = i as usize;
                        if self.in_blossom[self.base[iu] as usize] {
                            self.base[iu] = cur;
                            if !self.used[iu] {
                                self.used[iu] = true;
                                self.depth[iu] = cur_depth;
                                self.queue.push(i);
                            }
                        }
                    }
                    for &i in &tree {
                        self.in_blossom[i as usize] = false;
                    }
                } else if self.parent[to as usize] == NONE {
                    self.touch(to);
                    self.parent[to as usize] = v;
                    if to_mate == NONE {
                        return Some(to);
                    }
                    self.touch(to_mate);
                    self.used[to_mate as usize] = true;
                    self.depth[to_mate as usize] = self.depth[v as usize] + 1;
                    self.queue.push(to_mate);
                }
            }
        }
        None
    }

    fn augment(&mut self, mut v: u32) {
        while v != NONE {
            let pv = self.parent[v as usize];
            let ppv = self.mate[pv as usize];
            self.mate[v as usize] = pv;
            self.mate[pv as usize] = v;
            v = ppv;
            self.visits += 1;
        }
    }

    /// One sweep over free vertices; returns the number of augmentations.
    fn pass(&mut self, limit: u32) -> u64 {
        let mut found = 0;
        for r in 0..self.adj.len() as u32 {
            if self.mate[r as usize] != NONE || self.adj[r as usize].is_empty() {
                continue;
            }
            let end = self.find_path(r, limit);
            if let Some(end) = end {
                self.augment(end);
                found += 1;
            }
            self.reset();
        }
        found
    }

    fn finish(self, passes: u32, augmentations: u64) -> (Matching, MatcherStats) {
        let mate = self.mate.into_iter().map(|m| if m == NONE { UNMATCHED } else { m }).collect();
        (Matching::from_mates(mate), MatcherStats { edge_visits: self.visits, augmentations, passes })
    }
}

/// Maximum-cardinality matching of `view`, refusing views with more than
/// [`DEFAULT_EXACT_VERTEX_BOUND`] vertices.
pub fn maximum_matching_exact<G: GraphView>(view: &G) -> Result<Matching, MatchingError> {
    maximum_matching_exact_bounded(view, DEFAULT_EXACT_VERTEX_BOUND)
}

pub fn maximum_matching_exact_bounded<G: GraphView>(view: &G, bound: usize) -> Result<Matching, MatchingError> {
    let n = view.vertex_count();
    if n > bound {
        return Err(MatchingError::SizeBound { n, bound });
    }
    let mut s = Search::from_view(view);
    s.greedy();
    // A root with no augmenting path never regains one, so one sweep is enough.
    let aug = s.pass(u32::MAX);
    Ok(s.finish(1, aug).0)
}

/// A matching of size at least `(1 - epsilon) * mu(view)`.
///
/// Starts from a greedy maximal matching and then repeatedly augments
/// along alternating paths holding at most `ceil(1/epsilon)` matched
/// edges until a full sweep finds none.
pub fn approx_max_matching<G: GraphView>(view: &G, epsilon: f64) -> Matching {
    approx_max_matching_with_stats(view, epsilon).0
}

pub fn approx_max_matching_with_stats<G: GraphView>(view: &G, epsilon: f64) -> (Matching, MatcherStats) {
    assert!(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1), got {epsilon}");
    let limit = (1.0 / epsilon).ceil() as u32;
    let mut s = Search::from_view(view);
    s.greedy();
    let mut passes = 0;
    let mut total = 0;
    loop {
        passes += 1;
        let found = s.pass(limit);
        total += found;
        if found == 0 {
            break;
        }
    }
    s.finish(passes, total)
}
