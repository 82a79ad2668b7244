//! Seeded random edit scripts against a document, checking the model's
//! invariants after every step.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use storyexp_core::model::{FragmentDraft, FragmentEdit, FragmentPatch, ReplayState};
use storyexp_core::{EntityId, EntityKind, EntitySource, FragmentId, Metrics, StoryDocument};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzReport {
    pub ops: usize,
    pub applied: usize,
    pub rejected: usize,
    /// Metrics of a layout of the final state, when one exists.
    pub metrics: Option<Metrics>,
}

fn random_edit(doc: &StoryDocument, rng: &mut ChaCha8Rng, counter: &mut usize) -> FragmentEdit {
    let persons: Vec<EntityId> =
        doc.entities().iter().filter(|e| e.kind == EntityKind::Person).map(|e| e.id.clone()).collect();
    let fragments: Vec<FragmentId> = doc.fragments().iter().map(|f| f.id.clone()).collect();
    let any_fragment = |rng: &mut ChaCha8Rng| match fragments.choose(rng) {
        Some(f) if rng.random_bool(0.95) => f.clone(),
        _ => FragmentId("f-missing".into()),
    };
    let pick_persons = |rng: &mut ChaCha8Rng| {
        let mut p = persons.clone();
        p.shuffle(rng);
        p.truncate(rng.random_range(1..=3.min(p.len().max(1))));
        p
    };
    *counter += 1;
    match rng.random_range(0..100) {
        0..25 => FragmentEdit::Create { draft: FragmentDraft { persons: pick_persons(rng), ..Default::default() } },
        25..45 => {
            let start = rng.random_range(-1..8);
            FragmentEdit::SetInterval {
                id: any_fragment(rng),
                start_step: start,
                end_step: start + rng.random_range(-1..3),
            }
        }
        45..60 => FragmentEdit::Update {
            id: any_fragment(rng),
            patch: FragmentPatch { persons: Some(pick_persons(rng)), ..Default::default() },
        },
        60..70 => FragmentEdit::Merge {
            a: any_fragment(rng),
            b: any_fragment(rng),
        },
        70..80 => FragmentEdit::Delete { id: any_fragment(rng) },
        80..97 => {
            let id = persons.choose(rng).cloned().unwrap_or_else(|| EntityId("e-missing".into()));
            let name = if rng.random_bool(0.2) {
                // often a clash with another entity's name
                doc.entities().choose(rng).map(|e| e.canonical_name.to_uppercase()).unwrap_or_default()
            } else {
                format!("Person {counter}")
            };
            FragmentEdit::RenameEntity { id, name }
        }
        _ => FragmentEdit::DeleteEntity {
            id: persons.choose(rng).cloned().unwrap_or_else(|| EntityId("e-missing".into())),
        },
    }
}

/// Applies `ops` random single-edit batches. A rejected batch must leave the
/// document as it was; an accepted one must keep it valid. The operation log
/// must replay to the final state.
pub fn fuzz(doc: &mut StoryDocument, seed: u64, ops: usize) -> Result<FuzzReport, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = FuzzReport { ops, applied: 0, rejected: 0, metrics: None };
    let mut counter = 0;
    for i in 0..ops {
        // deletions drain the cast; keep a few persons around
        let people = doc.entities().iter().filter(|e| e.kind == EntityKind::Person).count();
        for k in people..3 {
            doc.add_entity(EntityKind::Person, &format!("Seed person {i}-{k}"), EntitySource::Manual, 1.0)?;
        }
        let edit = random_edit(doc, &mut rng, &mut counter);
        let mut next = doc.clone();
        match next.apply_edits(std::slice::from_ref(&edit)) {
            Ok(_) => {
                next.validate().map_err(|m| {
                    CliError::invalid("InvariantViolated", format!("after op {i} ({edit:?}): {m}"))
                })?;
                *doc = next;
                report.applied += 1;
            }
            Err(_) => report.rejected += 1,
        }
    }
    let replayed = ReplayState::replay(doc.op_log());
    if replayed.entities != doc.entities() || replayed.fragments != doc.fragments() {
        return Err(CliError::invalid("ReplayMismatch", "operation log does not replay to the document"));
    }
    report.metrics = crate::pipeline::layout(doc, &doc.layout_params).ok().map(|l| l.metrics);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_outcome() {
        let base = StoryDocument::new("d", "t", vec!["text".into()]);
        let (mut a, mut b) = (base.clone(), base);
        let ra = fuzz(&mut a, 7, 300).unwrap();
        let rb = fuzz(&mut b, 7, 300).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(a.fragments(), b.fragments());
        assert!(ra.applied > 100 && ra.rejected > 10, "{ra:?}");
    }
}
