use std::collections::{HashMap, VecDeque};

use super::order::flatten;
use super::{Discretized, LayoutParams, Orderings};

/// Lines held level across each adjacent step pair.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Anchors {
    /// `kept[s]` lists lines with equal y at steps `s` and `s + 1`.
    pub kept: Vec<Vec<usize>>,
    /// Raw LCS anchors rejected as infeasible.
    pub dropped: usize,
}

/// Longest common subsequence; ties prefer skipping from `b` first, which
/// keeps earlier elements of `a`.
pub fn lcs(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (n, m) = (a.len(), b.len());
    let mut dp = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            dp[i][j] = if a[i] == b[j] { dp[i + 1][j + 1] + 1 } else { dp[i + 1][j].max(dp[i][j + 1]) };
        }
    }
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(dp[0][0]);
    while i < n && j < m {
        if a[i] == b[j] {
            out.push(a[i]);
            i += 1;
            j += 1;
        } else if dp[i][j + 1] >= dp[i + 1][j] {
            j += 1;
        } else {
            i += 1;
        }
    }
    out
}

/// For each adjacent step pair, the LCS of the two orderings.
pub fn align(orderings: &Orderings) -> Vec<Vec<usize>> {
    let flat: Vec<Vec<usize>> = orderings.iter().map(|o| flatten(o)).collect();
    flat.windows(2).map(|w| lcs(&w[0], &w[1])).collect()
}

/// Every session at every step is a rigid block: members sit `innerGap`
/// apart. Block variables are the y of each block's first member.
pub(crate) struct Blocks {
    /// `(step, top-to-bottom position)` to block id.
    pub ids: Vec<Vec<usize>>,
    /// Block height (first to last member).
    pub height: Vec<f64>,
    /// Per step, line to `(block, offset within block)`.
    pub line_at: Vec<HashMap<usize, (usize, f64)>>,
}

impl Blocks {
    pub fn new(orderings: &Orderings, params: &LayoutParams) -> Self {
        let mut ids = Vec::new();
        let mut height = Vec::new();
        let mut line_at = Vec::new();
        for groups in orderings {
            let mut row = Vec::new();
            let mut map = HashMap::new();
            for g in groups {
                let b = height.len();
                row.push(b);
                height.push((g.members.len() - 1) as f64 * params.inner_gap);
                for (i, &l) in g.members.iter().enumerate() {
                    map.insert(l, (b, i as f64 * params.inner_gap));
                }
            }
            ids.push(row);
            line_at.push(map);
        }
        Self { ids, height, line_at }
    }

    pub fn len(&self) -> usize {
        self.height.len()
    }

    /// Separation constraints `y[hi] - y[lo] >= w` between neighbouring
    /// blocks of each step.
    pub fn separations(&self, params: &LayoutParams) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for row in &self.ids {
            for w in row.windows(2) {
                out.push((w[0], w[1], self.height[w[0]] + params.min_gap));
            }
        }
        out
    }
}

/// Difference constraints `d[to] >= d[from] + w` with a feasible potential
/// kept up to date, so each new constraint is checked for a positive cycle
/// by relaxing from its head only.
struct DifferenceSystem {
    out: Vec<Vec<(usize, f64)>>,
    d: Vec<f64>,
}

const EPS: f64 = 1e-9;

impl DifferenceSystem {
    fn new(n: usize) -> Self {
        Self { out: vec![Vec::new(); n], d: vec![0.0; n] }
    }

    /// Adds an edge known to be consistent (used for the initial system).
    fn add_trusted(&mut self, from: usize, to: usize, w: f64) {
        self.out[from].push((to, w));
    }

    /// Longest-path potentials for the trusted system.
    fn settle(&mut self) {
        let n = self.d.len();
        for _ in 0..n.max(1) {
            let mut changed = false;
            for u in 0..n {
                for &(v, w) in &self.out[u] {
                    if self.d[u] + w > self.d[v] + EPS {
                        self.d[v] = self.d[u] + w;
                        changed = true;
                    }
                }
            }
            if !changed {
                return;
            }
        }
    }

    /// Adds all edges or none. Fails if they close a positive cycle.
    fn try_add(&mut self, edges: &[(usize, usize, f64)]) -> bool {
        let saved_d = self.d.clone();
        let mut added = 0;
        let mut ok = true;
        for &(u, v, w) in edges {
            self.out[u].push((v, w));
            added += 1;
            if !self.relax_from(u, v, w) {
                ok = false;
                break;
            }
        }
        if !ok {
            for &(u, _, _) in edges[..added].iter().rev() {
                self.out[u].pop();
            }
            self.d = saved_d;
        }
        ok
    }

    /// Restores feasibility after adding `u -> v`; reaching `u` again means
    /// a positive cycle through the new edge.
    fn relax_from(&mut self, u: usize, v: usize, w: f64) -> bool {
        if self.d[u] + w <= self.d[v] + EPS {
            return true;
        }
        self.d[v] = self.d[u] + w;
        let mut queue = VecDeque::from([v]);
        let mut pops = 0usize;
        let limit = self.d.len() * self.d.len() + 16;
        while let Some(x) = queue.pop_front() {
            pops += 1;
            if pops > limit {
                return false;
            }
            for i in 0..self.out[x].len() {
                let (y, wy) = self.out[x][i];
                if self.d[x] + wy > self.d[y] + EPS {
                    if y == u {
                        return false;
                    }
                    self.d[y] = self.d[x] + wy;
                    queue.push_back(y);
                }
            }
        }
        true
    }
}

/// Keeps the LCS anchors that are jointly satisfiable with the gap rules.
///
/// Two lines in different sessions at one step and in the same session at
/// the next cannot both stay level, since their distance must change from at
/// least `minGap` to exactly `innerGap`. Anchors are admitted greedily, step
/// pair by step pair in LCS order, and any anchor that would make the
/// constraint system infeasible is dropped.
pub fn feasible_anchors(disc: &Discretized, orderings: &Orderings, raw: &[Vec<usize>], params: &LayoutParams) -> Anchors {
    let blocks = Blocks::new(orderings, params);
    let mut sys = DifferenceSystem::new(blocks.len());
    for (lo, hi, w) in blocks.separations(params) {
        sys.add_trusted(lo, hi, w);
    }
    sys.settle();

    let mut kept = vec![Vec::new(); raw.len()];
    let mut dropped = 0;
    for (s, lines) in raw.iter().enumerate() {
        // members of a fragment that spans both steps go first so its block
        // stays a rectangle; LCS anchors fill in around them
        let continuing = continuing_lines(disc, orderings, s);
        let rest = lines.iter().copied().filter(|l| !continuing.contains(l));
        for l in continuing.iter().copied().chain(rest) {
            let (b0, o0) = blocks.line_at[s][&l];
            let (b1, o1) = blocks.line_at[s + 1][&l];
            // y = Y[b] + o, so Y[b1] - Y[b0] = o0 - o1
            let c = o0 - o1;
            if sys.try_add(&[(b0, b1, c), (b1, b0, -c)]) {
                kept[s].push(l);
            } else if lines.contains(&l) {
                dropped += 1;
            }
        }
    }
    Anchors { kept, dropped }
}

/// Lines whose session at step `s` belongs to the same fragment as their
/// session at `s + 1`, top to bottom.
fn continuing_lines(disc: &Discretized, orderings: &Orderings, s: usize) -> Vec<usize> {
    let fragment_of = |step: usize, l: usize| {
        orderings[step]
            .iter()
            .find(|g| g.members.contains(&l))
            .map(|g| &disc.sessions[step][g.session].fragment_id)
    };
    flatten(&orderings[s])
        .into_iter()
        .filter(|&l| matches!((fragment_of(s, l), fragment_of(s + 1, l)), (Some(a), Some(b)) if a == b))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::tests::frag;
    use crate::layout::{discretize, order_lines};

    #[test]
    fn lcs_examples() {
        // abc / cab
        assert_eq!(lcs(&[0, 1, 2], &[2, 0, 1]), vec![0, 1]);
        assert_eq!(lcs(&[0, 1, 2], &[0, 1, 2]), vec![0, 1, 2]);
        assert_eq!(lcs(&[5], &[5]), vec![5]);
        assert_eq!(lcs(&[1, 2], &[3]), Vec::<usize>::new());
    }

    #[test]
    fn joining_lines_cannot_both_stay_level() {
        let fs = [frag("f1", &["a"], 0, 0), frag("f2", &["b"], 0, 0), frag("f3", &["a", "b"], 1, 1)];
        let d = discretize(&fs).unwrap();
        let p = LayoutParams::default();
        let o = order_lines(&d, &p);
        let raw = align(&o);
        assert_eq!(raw[0].len(), 2);
        let a = feasible_anchors(&d, &o, &raw, &p);
        assert_eq!(a.kept[0].len(), 1);
        assert_eq!(a.dropped, 1);
    }

    #[test]
    fn unchanged_sessions_keep_every_anchor() {
        let fs = [frag("f1", &["a", "b"], 0, 2), frag("f2", &["c"], 0, 2)];
        let d = discretize(&fs).unwrap();
        let p = LayoutParams::default();
        let o = order_lines(&d, &p);
        let a = feasible_anchors(&d, &o, &align(&o), &p);
        assert_eq!(a.dropped, 0);
        assert!(a.kept.iter().all(|k| k.len() == 3));
    }
}
