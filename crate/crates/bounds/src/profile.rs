//! Degree profiles: vectors in {0,…,β}^k, indexed in lexicographic order
//! with the first entry most significant.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Profiles {
    pub k: usize,
    pub beta: u32,
}

impl Profiles {
    pub fn new(k: usize, beta: u32) -> Self {
        Self { k, beta }
    }

    pub fn radix(&self) -> u64 {
        self.beta as u64 + 1
    }

    /// `(β+1)^k`, or `None` on overflow.
    pub fn count(&self) -> Option<u64> {
        self.radix().checked_pow(self.k as u32)
    }

    pub fn entries(&self, mut idx: u64, out: &mut [u32]) {
        let radix = self.radix();
        for slot in out.iter_mut().rev() {
            *slot = (idx % radix) as u32;
            idx /= radix;
        }
    }

    pub fn index(&self, entries: &[u32]) -> u64 {
        entries.iter().fold(0, |acc, &e| acc * self.radix() + e as u64)
    }

    /// Calls `f` on every profile whose first `j` entries sum to at most
    /// `budget`, in lexicographic order. Entries after `j` are free.
    pub fn for_each_bounded(&self, j: usize, budget: u32, f: &mut impl FnMut(&[u32])) {
        let mut cur = vec![0u32; self.k];
        self.rec(0, j, budget, &mut cur, f);
    }

    fn rec(&self, pos: usize, j: usize, left: u32, cur: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
        if pos == self.k {
            f(cur);
            return;
        }
        let top = if pos < j { left.min(self.beta) } else { self.beta };
        for v in 0..=top {
            cur[pos] = v;
            let rest = if pos < j { left - v } else { left };
            self.rec(pos + 1, j, rest, cur, f);
        }
    }
}

pub fn prefix_sum(p: &[u32], j: usize) -> u32 {
    p[..j].iter().sum()
}

/// Entries joined by dots, e.g. `1.0`.
pub fn profile_name(p: &[u32]) -> String {
    let mut s = String::new();
    for (i, v) in p.iter().enumerate() {
        if i > 0 {
            s.push('.');
        }
        s.push_str(&v.to_string());
    }
    s
}

/// `C(n, r)` in u128, saturating.
pub(crate) fn binomial(n: u64, r: u64) -> u128 {
    let r = r.min(n.saturating_sub(r));
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}
