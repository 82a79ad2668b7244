use std::collections::BTreeSet;

use super::order::{narrative_order, reorder, Group};
use super::{discretize, package, Discretized, LayoutError, LayoutParams, LayoutSpec, Orderings, StepSpec};
use crate::model::{EntityId, Fragment, FragmentId};

/// Re-lays out only the neighbourhood of the changed fragments.
///
/// Steps covered by a changed fragment, before or after the change, plus one
/// step either side form the halo. Every other step keeps its previous
/// ordering verbatim; the halo is reordered against those fixed neighbours
/// and compaction runs over the whole layout. When the halo spans more than
/// half the steps a full relayout is done instead and flagged.
pub fn incremental_update(
    prev: &LayoutSpec,
    changed: &[FragmentId],
    fragments: &[Fragment],
    params: &LayoutParams,
) -> Result<LayoutSpec, LayoutError> {
    params.validate()?;
    if changed.is_empty() {
        return Ok(prev.clone());
    }
    let disc = discretize(fragments)?;
    let t = disc.steps.len();
    let full = |disc: &Discretized| {
        let o = super::order_lines(disc, params);
        package(disc, &o, fragments, params, true)
    };
    if t == 0 {
        return Ok(full(&disc));
    }
    let value_of: Vec<usize> = disc.steps.iter().map(|s| s.source_steps[0]).collect();
    let index_of = |v: usize| value_of.binary_search(&v);

    let mut touched: BTreeSet<usize> = BTreeSet::new();
    for id in changed {
        for f in fragments.iter().filter(|f| &f.id == id && f.is_valid()) {
            touched.extend(f.interval.steps().filter_map(|v| index_of(v).ok()));
        }
        for st in prev.steps.iter().filter(|st| st.sessions.iter().any(|s| &s.fragment_id == id)) {
            for &v in &st.source_steps {
                match index_of(v) {
                    Ok(i) => {
                        touched.insert(i);
                    }
                    // the step disappeared; its former neighbours are affected
                    Err(i) => {
                        touched.insert(i.min(t - 1));
                        touched.insert(i.saturating_sub(1));
                    }
                }
            }
        }
    }
    let mut halo: BTreeSet<usize> = BTreeSet::new();
    for &s in &touched {
        halo.insert(s.saturating_sub(1));
        halo.insert(s);
        halo.insert((s + 1).min(t - 1));
    }

    let mut initial: Orderings = narrative_order(&disc);
    for s in 0..t {
        if halo.contains(&s) {
            continue;
        }
        match previous_step(prev, &disc, s) {
            Some(old) => initial[s] = groups_from(&disc, s, &old.ordering),
            None => {
                halo.insert(s);
            }
        }
    }
    if halo.len() * 2 > t {
        return Ok(full(&disc));
    }
    let free: Vec<bool> = (0..t).map(|s| halo.contains(&s)).collect();
    let orderings = reorder(initial, &free, params.ordering_sweeps);
    Ok(package(&disc, &orderings, fragments, params, false))
}

/// The previous step with the same source steps and identical sessions.
fn previous_step<'a>(prev: &'a LayoutSpec, disc: &Discretized, s: usize) -> Option<&'a StepSpec> {
    let old = prev.steps.iter().find(|st| st.source_steps == disc.steps[s].source_steps)?;
    let now = &disc.sessions[s];
    if old.sessions.len() != now.len() {
        return None;
    }
    let same = now.iter().all(|n| {
        old.sessions.iter().any(|o| {
            o.fragment_id == n.fragment_id
                && o.members.len() == n.members.len()
                && n.members.iter().all(|&l| o.members.contains(&disc.lines[l]))
        })
    });
    same.then_some(old)
}

/// Groups for step `s` arranged to reproduce `ordering` exactly.
fn groups_from(disc: &Discretized, s: usize, ordering: &[EntityId]) -> Vec<Group> {
    let pos = |l: usize| ordering.iter().position(|id| id == &disc.lines[l]).unwrap_or(usize::MAX);
    let mut groups: Vec<Group> = disc.sessions[s]
        .iter()
        .enumerate()
        .map(|(i, sess)| {
            let mut members = sess.members.clone();
            members.sort_by_key(|&l| pos(l));
            Group { session: i, members }
        })
        .collect();
    groups.sort_by_key(|g| pos(g.members[0]));
    groups
}
