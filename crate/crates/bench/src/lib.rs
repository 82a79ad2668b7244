//! Seeded inputs shared by the benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use storyexp_core::gesture::{prototype_ink, GestureKind, Point, Stroke};
use storyexp_core::model::{FragmentDraft, StoryDocument};
use storyexp_core::{EntityKind, EntitySource, Fragment};

/// A document with `persons` characters and `fragments` fragments, each
/// fragment on its own step with one to three members.
pub fn story(seed: u64, persons: usize, fragments: usize) -> StoryDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut doc = StoryDocument::new(format!("bench-{seed}"), "bench", vec!["text".into()]);
    let ids: Vec<_> = (0..persons)
        .map(|i| doc.add_entity(EntityKind::Person, &format!("P{i}"), EntitySource::Manual, 1.0).unwrap())
        .collect();
    for _ in 0..fragments {
        let mut ps = ids.clone();
        ps.shuffle(&mut rng);
        ps.truncate(rng.random_range(1..=3.min(persons)));
        doc.create_fragment(FragmentDraft { persons: ps, ..Default::default() }).unwrap();
    }
    doc
}

pub fn fragments(seed: u64, persons: usize, fragments: usize) -> Vec<Fragment> {
    story(seed, persons, fragments).layout_fragments()
}

/// Prototype ink of `kind` with uniform jitter of `amount` pixels.
pub fn jittered_ink(kind: GestureKind, seed: u64, amount: f64) -> Vec<Stroke> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    prototype_ink(kind)
        .into_iter()
        .map(|s| {
            Stroke::new(
                s.points
                    .iter()
                    .map(|p| Point {
                        x: p.x + rng.random_range(-amount..=amount),
                        y: p.y + rng.random_range(-amount..=amount),
                        t: p.t,
                    })
                    .collect(),
            )
        })
        .collect()
}
