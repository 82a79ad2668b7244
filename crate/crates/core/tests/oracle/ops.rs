//! Random operation sequences against a document, checked after every step
//! against a shadow model that tracks ids and names on its own.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use storyexp_core::model::{
    AnnotationId, EntityId, EntityKind, EntitySource, FragmentDraft, FragmentId, FragmentPatch, ReplayState,
    StoryDocument, TextSpan,
};
use storyexp_core::GestureKind;

pub const PAGE: &str = "The soldier met the witch on the high road, and the dog with eyes as big as teacups sat on the chest.";

#[derive(Debug, Clone)]
struct ShadowEntity {
    id: EntityId,
    kind: EntityKind,
    name: String,
    former: Vec<String>,
}

#[derive(Debug, Clone)]
struct ShadowFragment {
    id: FragmentId,
    persons: Vec<EntityId>,
    time: Option<EntityId>,
    place: Option<EntityId>,
}

#[derive(Debug, Default)]
struct Shadow {
    entities: Vec<ShadowEntity>,
    fragments: Vec<ShadowFragment>,
    annotations: Vec<(AnnotationId, Option<EntityId>)>,
}

impl Shadow {
    fn of_kind(&self, kind: EntityKind) -> Vec<&ShadowEntity> {
        self.entities.iter().filter(|e| e.kind == kind).collect()
    }

    fn name(&self, id: &EntityId) -> &str {
        &self.entities.iter().find(|e| &e.id == id).unwrap().name
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct FuzzStats {
    pub applied: usize,
    pub renames: usize,
    pub rejected_duplicates: usize,
    pub entity_deletes: usize,
}

/// Runs `n_ops` random operations; panics with the seed and step on the
/// first disagreement with the shadow model.
pub fn run(seed: u64, n_ops: usize) -> (StoryDocument, FuzzStats) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut doc = StoryDocument::new(format!("fuzz-{seed}"), "fuzz", vec![PAGE.to_owned()]);
    let mut sh = Shadow::default();
    let mut stats = FuzzStats::default();
    let mut fresh = 0usize;
    let page_len = PAGE.chars().count();
    let kinds = [EntityKind::Person, EntityKind::Person, EntityKind::Place, EntityKind::Time];

    for step in 0..n_ops {
        let roll = rng.random_range(0..100);
        match roll {
            0..=11 => {
                let kind = *kinds.choose(&mut rng).unwrap();
                fresh += 1;
                let name = format!("{} {fresh}", kind.as_str());
                let id = doc.add_entity(kind, &name, EntitySource::Manual, rng.random_range(0.0..=1.0)).unwrap();
                sh.entities.push(ShadowEntity { id, kind, name, former: Vec::new() });
            }
            12..=27 => {
                let Some(i) = pick(&mut rng, sh.entities.len()) else { continue };
                let own_old = !sh.entities[i].former.is_empty() && rng.random_bool(0.25);
                let name = if own_old {
                    sh.entities[i].former.choose(&mut rng).unwrap().clone()
                } else {
                    fresh += 1;
                    format!("renamed {fresh}")
                };
                doc.rename_entity(&sh.entities[i].id.clone(), &name).unwrap();
                let e = &mut sh.entities[i];
                let old = std::mem::replace(&mut e.name, name.clone());
                e.former.retain(|f| f != &name);
                e.former.push(old);
                stats.renames += 1;
            }
            28..=31 => {
                let Some(i) = pick(&mut rng, sh.entities.len()) else { continue };
                let kind = sh.entities[i].kind;
                let others: Vec<String> =
                    sh.of_kind(kind).into_iter().filter(|o| o.id != sh.entities[i].id).map(|o| o.name.clone()).collect();
                let Some(taken) = others.choose(&mut rng) else { continue };
                let before = doc.clone();
                let err = doc.rename_entity(&sh.entities[i].id.clone(), &taken.to_uppercase()).unwrap_err();
                assert_eq!(err.name(), "DuplicateName", "seed {seed} step {step}");
                assert_eq!(doc, before, "seed {seed} step {step}: refused rename changed the document");
                stats.rejected_duplicates += 1;
            }
            32..=46 => {
                let persons = random_persons(&mut rng, &sh);
                if persons.is_empty() {
                    continue;
                }
                let time = random_role(&mut rng, &sh, EntityKind::Time);
                let place = random_role(&mut rng, &sh, EntityKind::Place);
                let a = rng.random_range(0..page_len - 1);
                let b = rng.random_range(a + 1..=page_len);
                let id = doc
                    .create_fragment(FragmentDraft {
                        persons: persons.clone(),
                        time: time.clone(),
                        place: place.clone(),
                        spans: vec![TextSpan::new(0, a, b)],
                        ..Default::default()
                    })
                    .unwrap();
                let mut dedup = Vec::new();
                for p in persons {
                    if !dedup.contains(&p) {
                        dedup.push(p);
                    }
                }
                sh.fragments.push(ShadowFragment { id, persons: dedup, time, place });
            }
            47..=56 => {
                let Some(i) = pick(&mut rng, sh.fragments.len()) else { continue };
                let persons = random_persons(&mut rng, &sh);
                if persons.is_empty() {
                    continue;
                }
                let time = random_role(&mut rng, &sh, EntityKind::Time);
                let id = sh.fragments[i].id.clone();
                doc.update_fragment(
                    &id,
                    FragmentPatch { persons: Some(persons.clone()), time: Some(time.clone()), ..Default::default() },
                )
                .unwrap();
                let f = &mut sh.fragments[i];
                f.persons.clear();
                for p in persons {
                    if !f.persons.contains(&p) {
                        f.persons.push(p);
                    }
                }
                f.time = time;
            }
            57..=62 => {
                if sh.fragments.len() < 2 {
                    continue;
                }
                let i = rng.random_range(0..sh.fragments.len());
                let mut j = rng.random_range(0..sh.fragments.len() - 1);
                if j >= i {
                    j += 1;
                }
                let (a, b) = (sh.fragments[i].clone(), sh.fragments[j].clone());
                doc.merge_fragments(&a.id, &b.id).unwrap();
                let fa = &mut sh.fragments[i];
                for p in &b.persons {
                    if !fa.persons.contains(p) {
                        fa.persons.push(p.clone());
                    }
                }
                fa.time = a.time.or(b.time);
                fa.place = a.place.or(b.place);
                sh.fragments.retain(|f| f.id != b.id);
            }
            63..=67 => {
                let Some(i) = pick(&mut rng, sh.fragments.len()) else { continue };
                let id = sh.fragments.remove(i).id;
                doc.delete_fragment(&id).unwrap();
            }
            68..=74 => {
                let Some(i) = pick(&mut rng, sh.entities.len()) else { continue };
                let id = sh.entities.remove(i).id;
                let outcome = doc.delete_entity(&id).unwrap();
                let mut modified = Vec::new();
                let mut invalid = Vec::new();
                for f in &mut sh.fragments {
                    let before = f.persons.len() + usize::from(f.time.is_some()) + usize::from(f.place.is_some());
                    f.persons.retain(|p| p != &id);
                    f.time = f.time.take().filter(|t| t != &id);
                    f.place = f.place.take().filter(|p| p != &id);
                    let after = f.persons.len() + usize::from(f.time.is_some()) + usize::from(f.place.is_some());
                    if after != before {
                        modified.push(f.id.clone());
                        if f.persons.is_empty() {
                            invalid.push(f.id.clone());
                        }
                    }
                }
                for a in &mut sh.annotations {
                    if a.1.as_ref() == Some(&id) {
                        a.1 = None;
                    }
                }
                assert_eq!(outcome.modified_fragments, modified, "seed {seed} step {step}");
                assert_eq!(outcome.invalid_fragments, invalid, "seed {seed} step {step}");
                stats.entity_deletes += 1;
            }
            75..=82 => {
                let Some(i) = pick(&mut rng, sh.fragments.len()) else { continue };
                let s = rng.random_range(-1..20i64);
                let e = s + rng.random_range(-1..4i64);
                let r = doc.set_fragment_interval(&sh.fragments[i].id.clone(), s, e);
                assert_eq!(r.is_ok(), s >= 0 && e >= s, "seed {seed} step {step}: interval [{s}, {e}]");
            }
            83..=91 => {
                let entity = pick(&mut rng, sh.entities.len()).map(|i| sh.entities[i].id.clone());
                let a = rng.random_range(0..page_len - 1);
                let b = rng.random_range(a + 1..=page_len);
                let gesture = *GestureKind::ALL.choose(&mut rng).unwrap();
                let id = doc.add_annotation(0, gesture, vec![TextSpan::new(0, a, b)], entity.clone(), Vec::new()).unwrap();
                sh.annotations.push((id, entity));
            }
            _ => {
                let Some(i) = pick(&mut rng, sh.annotations.len()) else { continue };
                let entity = pick(&mut rng, sh.entities.len()).map(|k| sh.entities[k].id.clone());
                doc.set_annotation_entity(&sh.annotations[i].0.clone(), entity.clone()).unwrap();
                sh.annotations[i].1 = entity;
            }
        }
        stats.applied += 1;
        check(&doc, &sh).unwrap_or_else(|m| panic!("seed {seed} step {step}: {m}"));
    }
    (doc, stats)
}

fn pick(rng: &mut ChaCha8Rng, len: usize) -> Option<usize> {
    (len > 0).then(|| rng.random_range(0..len))
}

fn random_persons(rng: &mut ChaCha8Rng, sh: &Shadow) -> Vec<EntityId> {
    let persons = sh.of_kind(EntityKind::Person);
    if persons.is_empty() {
        return Vec::new();
    }
    // duplicates on purpose; the document keeps first occurrences
    (0..rng.random_range(1..=4)).map(|_| persons.choose(rng).unwrap().id.clone()).collect()
}

fn random_role(rng: &mut ChaCha8Rng, sh: &Shadow, kind: EntityKind) -> Option<EntityId> {
    if rng.random_bool(0.4) {
        return None;
    }
    sh.of_kind(kind).choose(rng).map(|e| e.id.clone())
}

fn check(doc: &StoryDocument, sh: &Shadow) -> Result<(), String> {
    doc.validate()?;
    let ids: Vec<_> = doc.entities().iter().map(|e| (&e.id, e.kind, e.canonical_name.as_str())).collect();
    let want: Vec<_> = sh.entities.iter().map(|e| (&e.id, e.kind, e.name.as_str())).collect();
    if ids != want {
        return Err(format!("entities {ids:?} vs shadow {want:?}"));
    }
    for e in &sh.entities {
        for old in &e.former {
            match doc.find_entity(Some(e.kind), old) {
                Some(found) if found.id == e.id => {}
                other => return Err(format!("former name {old:?} of {} resolves to {:?}", e.id, other.map(|o| &o.id))),
            }
        }
    }
    if doc.fragments().len() != sh.fragments.len() {
        return Err(format!("{} fragments vs shadow {}", doc.fragments().len(), sh.fragments.len()));
    }
    for (f, s) in doc.fragments().iter().zip(&sh.fragments) {
        if f.id != s.id || f.persons != s.persons || f.time != s.time || f.place != s.place {
            return Err(format!("fragment {} differs from shadow {}", f.id, s.id));
        }
        let view = doc.fragment_view(&f.id).unwrap();
        let names: Vec<&str> = s.persons.iter().map(|p| sh.name(p)).collect();
        if view.persons != names
            || view.time.as_deref() != s.time.as_ref().map(|t| sh.name(t))
            || view.place.as_deref() != s.place.as_ref().map(|p| sh.name(p))
        {
            return Err(format!("fragment {} shows stale names: {view}", f.id));
        }
    }
    let anns: Vec<_> = doc.annotations().iter().map(|a| (&a.id, &a.entity)).collect();
    let want: Vec<_> = sh.annotations.iter().map(|(a, e)| (a, e)).collect();
    if anns != want {
        return Err(format!("annotations {anns:?} vs shadow {want:?}"));
    }
    Ok(())
}

/// The operation log alone reproduces the live entity, fragment and
/// annotation sets.
pub fn replay_matches(doc: &StoryDocument) -> bool {
    let r = ReplayState::replay(doc.op_log());
    r.entities == doc.entities() && r.fragments == doc.fragments() && r.annotations == doc.annotations()
}
