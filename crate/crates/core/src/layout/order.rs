use super::{Discretized, LayoutParams};

/// A session's slot in a step ordering: its members, top to bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    /// Index into the step's session list.
    pub session: usize,
    pub members: Vec<usize>,
}

/// Per step, the groups from top to bottom.
pub type Orderings = Vec<Vec<Group>>;

/// Steps with at most this many session-contiguous orderings are optimized
/// exhaustively against their neighbours; larger steps use adjacent swaps.
const EXHAUSTIVE_LIMIT: usize = 5040;
const MAX_REFINE_PASSES: usize = 64;

pub(crate) fn flatten(groups: &[Group]) -> Vec<usize> {
    groups.iter().flat_map(|g| g.members.iter().copied()).collect()
}

/// Sessions in input order, members in fragment order.
pub fn narrative_order(disc: &Discretized) -> Orderings {
    disc.sessions
        .iter()
        .map(|ss| ss.iter().enumerate().map(|(i, s)| Group { session: i, members: s.members.clone() }).collect())
        .collect()
}

/// Number of line pairs present in both orders whose relative order differs.
pub fn crossings_between(a: &[usize], b: &[usize]) -> usize {
    let seq: Vec<usize> = a.iter().filter_map(|l| b.iter().position(|m| m == l)).collect();
    let mut n = 0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                n += 1;
            }
        }
    }
    n
}

pub fn total_crossings(orderings: &Orderings) -> usize {
    let flat: Vec<Vec<usize>> = orderings.iter().map(|o| flatten(o)).collect();
    flat.windows(2).map(|w| crossings_between(&w[0], &w[1])).sum()
}

/// Crossing-reducing order: barycenter sweeps from the narrative order, the
/// best sweep kept, then per-step local search until nothing improves. The
/// result never has more crossings than the narrative order.
pub fn order_lines(disc: &Discretized, params: &LayoutParams) -> Orderings {
    let free = vec![true; disc.steps.len()];
    reorder(narrative_order(disc), &free, params.ordering_sweeps)
}

/// Optimizes only the steps marked in `free`, starting from `initial`.
pub(crate) fn reorder(initial: Orderings, free: &[bool], sweeps: usize) -> Orderings {
    let t = initial.len();
    let mut best = initial.clone();
    let mut best_cost = total_crossings(&best);
    let mut cur = initial;
    for _ in 0..sweeps {
        for s in 1..t {
            if free[s] {
                let reference = flatten(&cur[s - 1]);
                barycenter(&mut cur[s], &reference);
            }
        }
        for s in (0..t.saturating_sub(1)).rev() {
            if free[s] {
                let reference = flatten(&cur[s + 1]);
                barycenter(&mut cur[s], &reference);
            }
        }
        let cost = total_crossings(&cur);
        if cost < best_cost {
            best = cur.clone();
            best_cost = cost;
        }
        if best_cost == 0 {
            break;
        }
    }
    refine(&mut best, free);
    best
}

/// Reorders groups by the mean reference position of their members, and
/// members likewise. Lines absent from the reference keep their own relative
/// position. Sorting is stable, so ties keep the current order.
fn barycenter(groups: &mut [Group], reference: &[usize]) {
    let flat = flatten(groups);
    let norm = |pos: usize, len: usize| if len > 1 { pos as f64 / (len - 1) as f64 } else { 0.5 };
    let key = |l: usize| match reference.iter().position(|&r| r == l) {
        Some(p) => norm(p, reference.len()),
        None => norm(flat.iter().position(|&m| m == l).unwrap(), flat.len()),
    };
    for g in groups.iter_mut() {
        g.members.sort_by(|&a, &b| key(a).total_cmp(&key(b)));
    }
    groups.sort_by(|a, b| {
        let ka = a.members.iter().map(|&l| key(l)).sum::<f64>() / a.members.len() as f64;
        let kb = b.members.iter().map(|&l| key(l)).sum::<f64>() / b.members.len() as f64;
        ka.total_cmp(&kb)
    });
}

fn local_cost(orderings: &Orderings, s: usize, candidate: &[usize]) -> usize {
    let mut c = 0;
    if s > 0 {
        c += crossings_between(&flatten(&orderings[s - 1]), candidate);
    }
    if s + 1 < orderings.len() {
        c += crossings_between(candidate, &flatten(&orderings[s + 1]));
    }
    c
}

/// Coordinate descent over steps; each step takes its best ordering given
/// its neighbours. Only strict improvements are accepted, so this terminates
/// and never increases the total.
fn refine(orderings: &mut Orderings, free: &[bool]) {
    for _ in 0..MAX_REFINE_PASSES {
        let mut improved = false;
        for s in 0..orderings.len() {
            if !free[s] {
                continue;
            }
            let current = local_cost(orderings, s, &flatten(&orderings[s]));
            if current == 0 {
                continue;
            }
            let better = if arrangement_count(&orderings[s]) <= EXHAUSTIVE_LIMIT {
                best_exhaustive(orderings, s, current)
            } else {
                best_by_swaps(orderings, s, current)
            };
            if let Some(g) = better {
                orderings[s] = g;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
}

fn factorial(n: usize) -> usize {
    (1..=n).try_fold(1usize, |acc, k| acc.checked_mul(k)).unwrap_or(usize::MAX)
}

fn arrangement_count(groups: &[Group]) -> usize {
    groups
        .iter()
        .map(|g| factorial(g.members.len()))
        .try_fold(factorial(groups.len()), |acc, k| acc.checked_mul(k))
        .unwrap_or(usize::MAX)
}

/// All permutations of `0..n` in lexicographic order.
pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else { return out };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}

/// Every session-contiguous arrangement of one step.
pub(crate) fn arrangements(groups: &[Group]) -> Vec<Vec<Group>> {
    let mut partial: Vec<Vec<Group>> = permutations(groups.len())
        .into_iter()
        .map(|p| p.into_iter().map(|i| groups[i].clone()).collect())
        .collect();
    for gi in 0..groups.len() {
        let mut next = Vec::new();
        for arr in &partial {
            let members = &arr[gi].members;
            for p in permutations(members.len()) {
                let mut a = arr.clone();
                a[gi].members = p.iter().map(|&i| members[i]).collect();
                next.push(a);
            }
        }
        partial = next;
    }
    partial
}

fn best_exhaustive(orderings: &Orderings, s: usize, current: usize) -> Option<Vec<Group>> {
    let mut best: Option<(usize, Vec<Group>)> = None;
    for cand in arrangements(&orderings[s]) {
        let c = local_cost(orderings, s, &flatten(&cand));
        if c < best.as_ref().map_or(current, |b| b.0) {
            best = Some((c, cand));
        }
    }
    best.map(|b| b.1)
}

fn best_by_swaps(orderings: &Orderings, s: usize, mut current: usize) -> Option<Vec<Group>> {
    let mut groups = orderings[s].clone();
    let mut changed = false;
    loop {
        let mut improved = false;
        for i in 0..groups.len().saturating_sub(1) {
            groups.swap(i, i + 1);
            let c = local_cost(orderings, s, &flatten(&groups));
            if c < current {
                current = c;
                improved = true;
            } else {
                groups.swap(i, i + 1);
            }
        }
        for g in 0..groups.len() {
            for i in 0..groups[g].members.len().saturating_sub(1) {
                groups[g].members.swap(i, i + 1);
                let c = local_cost(orderings, s, &flatten(&groups));
                if c < current {
                    current = c;
                    improved = true;
                } else {
                    groups[g].members.swap(i, i + 1);
                }
            }
        }
        if !improved {
            break;
        }
        changed = true;
    }
    changed.then_some(groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::discretize;
    use crate::layout::tests::frag;

    #[test]
    fn permutations_are_lexicographic() {
        assert_eq!(permutations(3), vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0]
        ]);
        assert_eq!(permutations(0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn arrangements_keep_sessions_together() {
        let groups = vec![Group { session: 0, members: vec![0, 1] }, Group { session: 1, members: vec![2] }];
        let all = arrangements(&groups);
        assert_eq!(all.len(), 4);
        assert_eq!(arrangement_count(&groups), 4);
    }

    #[test]
    fn crossing_count() {
        assert_eq!(crossings_between(&[0, 1], &[1, 0]), 1);
        assert_eq!(crossings_between(&[0, 1, 2], &[2, 0, 1]), 2);
        assert_eq!(crossings_between(&[0, 1, 2], &[1, 3]), 0);
    }

    #[test]
    fn joining_pair_needs_no_crossing() {
        let d = discretize(&[frag("f1", &["a"], 0, 0), frag("f2", &["b"], 0, 0), frag("f3", &["b", "a"], 1, 1)]).unwrap();
        let o = order_lines(&d, &LayoutParams::default());
        assert_eq!(total_crossings(&o), 0);
    }

    #[test]
    fn heuristic_beats_a_bad_narrative_order() {
        // narrative order forces a crossing at every step
        let d = discretize(&[
            frag("f1", &["a"], 0, 0),
            frag("f2", &["b"], 0, 0),
            frag("f3", &["b"], 1, 1),
            frag("f4", &["a"], 1, 1),
            frag("f5", &["a"], 2, 2),
            frag("f6", &["b"], 2, 2),
        ])
        .unwrap();
        assert_eq!(total_crossings(&narrative_order(&d)), 2);
        assert_eq!(total_crossings(&order_lines(&d, &LayoutParams::default())), 0);
    }
}
