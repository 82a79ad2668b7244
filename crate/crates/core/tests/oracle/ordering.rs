//! Exact minimum crossings over all session-contiguous orderings.
//!
//! Crossings only couple adjacent steps, so the exhaustive search over the
//! product of per-step orderings collapses to a shortest path over steps.
//! Candidate orderings are every permutation of the step's active lines that
//! keeps each session contiguous, found by plain filtering.

use std::collections::BTreeMap;

use storyexp_core::model::{EntityId, Fragment};

/// Per step (in time order), the sessions as lists of entity ids.
pub fn steps_of(fragments: &[Fragment]) -> Vec<Vec<Vec<EntityId>>> {
    let mut by_step: BTreeMap<usize, Vec<Vec<EntityId>>> = BTreeMap::new();
    for f in fragments.iter().filter(|f| !f.persons.is_empty()) {
        for s in f.interval.start..=f.interval.end {
            by_step.entry(s).or_default().push(f.persons.clone());
        }
    }
    by_step.into_values().collect()
}

fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

fn contiguous(order: &[EntityId], sessions: &[Vec<EntityId>]) -> bool {
    sessions.iter().all(|s| {
        let pos: Vec<usize> = s.iter().map(|m| order.iter().position(|o| o == m).unwrap()).collect();
        pos.iter().max().unwrap() - pos.iter().min().unwrap() + 1 == pos.len()
    })
}

pub fn valid_orderings(sessions: &[Vec<EntityId>]) -> Vec<Vec<EntityId>> {
    let all: Vec<EntityId> = sessions.iter().flatten().cloned().collect();
    permutations(&all).into_iter().filter(|p| contiguous(p, sessions)).collect()
}

pub fn crossings(a: &[EntityId], b: &[EntityId]) -> usize {
    let mut n = 0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            if let (Some(x), Some(y)) = (b.iter().position(|v| v == &a[i]), b.iter().position(|v| v == &a[j])) {
                if x > y {
                    n += 1;
                }
            }
        }
    }
    n
}

/// Total crossings of a sequence of step orderings.
pub fn total(orders: &[Vec<EntityId>]) -> usize {
    orders.windows(2).map(|w| crossings(&w[0], &w[1])).sum()
}

/// The optimum over every combination of per-step orderings.
pub fn optimum(fragments: &[Fragment]) -> usize {
    let steps = steps_of(fragments);
    let cands: Vec<Vec<Vec<EntityId>>> = steps.iter().map(|s| valid_orderings(s)).collect();
    let Some(first) = cands.first() else { return 0 };
    let mut cost: Vec<usize> = vec![0; first.len()];
    for s in 1..cands.len() {
        cost = cands[s]
            .iter()
            .map(|o| cands[s - 1].iter().zip(&cost).map(|(p, c)| c + crossings(p, o)).min().unwrap())
            .collect();
    }
    cost.into_iter().min().unwrap()
}
