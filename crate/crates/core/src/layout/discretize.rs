use std::collections::{BTreeSet, HashMap};

use super::LayoutError;
use crate::model::{EntityId, Fragment, FragmentId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeStep {
    pub index: usize,
    pub source_steps: Vec<usize>,
}

/// One fragment at one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub fragment_id: FragmentId,
    /// Position of the fragment in the input (narrative order).
    pub fragment_index: usize,
    /// Line indices in the fragment's person order.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discretized {
    pub steps: Vec<TimeStep>,
    /// Line index to entity, in order of first appearance.
    pub lines: Vec<EntityId>,
    /// Sessions per step, in narrative order.
    pub sessions: Vec<Vec<Session>>,
}

impl Discretized {
    pub fn line_index(&self, id: &EntityId) -> Option<usize> {
        self.lines.iter().position(|l| l == id)
    }

    /// Whether line `l` has a segment at `step`.
    pub fn is_active(&self, step: usize, l: usize) -> bool {
        self.sessions[step].iter().any(|s| s.members.contains(&l))
    }
}

/// Compresses interval values into dense steps. Fragments without persons
/// are skipped; a person in two fragments at one step is an error.
pub fn discretize(fragments: &[Fragment]) -> Result<Discretized, LayoutError> {
    let valid: Vec<(usize, &Fragment)> = fragments.iter().enumerate().filter(|(_, f)| f.is_valid()).collect();
    let values: BTreeSet<usize> = valid.iter().flat_map(|(_, f)| f.interval.steps()).collect();
    let index: HashMap<usize, usize> = values.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let steps: Vec<TimeStep> = values.iter().enumerate().map(|(i, &v)| TimeStep { index: i, source_steps: vec![v] }).collect();

    let mut lines: Vec<EntityId> = Vec::new();
    let mut line_of: HashMap<EntityId, usize> = HashMap::new();
    // register lines by first appearance in time, then narrative order
    let mut by_time = valid.clone();
    by_time.sort_by_key(|(i, f)| (f.interval.start, *i));
    for (_, f) in &by_time {
        for p in &f.persons {
            if !line_of.contains_key(p) {
                line_of.insert(p.clone(), lines.len());
                lines.push(p.clone());
            }
        }
    }

    let mut sessions: Vec<Vec<Session>> = vec![Vec::new(); steps.len()];
    let mut owner: HashMap<(usize, usize), &FragmentId> = HashMap::new();
    for (fi, f) in &valid {
        let mut members: Vec<usize> = Vec::new();
        for p in &f.persons {
            let l = line_of[p];
            if !members.contains(&l) {
                members.push(l);
            }
        }
        for v in f.interval.steps() {
            let s = index[&v];
            for &l in &members {
                if let Some(prev) = owner.insert((s, l), &f.id) {
                    return Err(LayoutError::OverlapConflict {
                        entity: lines[l].clone(),
                        step: v,
                        first: prev.clone(),
                        second: f.id.clone(),
                    });
                }
            }
            sessions[s].push(Session { fragment_id: f.id.clone(), fragment_index: *fi, members: members.clone() });
        }
    }
    Ok(Discretized { steps, lines, sessions })
}
