use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use storyexp_core::model::{EntityId, Fragment, FragmentId, Interval};

pub fn fragment(id: &str, persons: &[String], start: usize, end: usize) -> Fragment {
    Fragment {
        id: FragmentId(id.to_owned()),
        persons: persons.iter().map(|p| EntityId(p.clone())).collect(),
        time: None,
        place: None,
        event_summary: String::new(),
        keywords: Vec::new(),
        spans: Vec::new(),
        page_range: None,
        interval: Interval::new(start, end),
    }
}

/// Random single-step fragments: at each step a random subset of the lines
/// is split into random sessions. Every step has at least one session.
pub fn random_story(seed: u64, max_lines: usize, max_steps: usize) -> Vec<Fragment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_lines = rng.random_range(1..=max_lines);
    let n_steps = rng.random_range(1..=max_steps);
    let names: Vec<String> = (0..n_lines).map(|i| format!("p{i}")).collect();
    let mut out = Vec::new();
    for s in 0..n_steps {
        let mut active: Vec<String> = names.iter().filter(|_| rng.random_bool(0.75)).cloned().collect();
        if active.is_empty() {
            active.push(names[rng.random_range(0..n_lines)].clone());
        }
        active.shuffle(&mut rng);
        let mut rest = &active[..];
        while !rest.is_empty() {
            let k = rng.random_range(1..=rest.len().min(3));
            out.push(fragment(&format!("f{}", out.len()), &rest[..k], s, s));
            rest = &rest[k..];
        }
    }
    // narrative order need not follow time
    out.shuffle(&mut rng);
    out
}

/// Like [`random_story`] but some fragments span several steps.
pub fn random_spanning_story(seed: u64, max_lines: usize, max_steps: usize) -> Vec<Fragment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_lines = rng.random_range(1..=max_lines);
    let n_steps = rng.random_range(1..=max_steps);
    let mut busy_until = vec![None::<usize>; n_lines];
    let mut out = Vec::new();
    for s in 0..n_steps {
        let mut free: Vec<usize> = (0..n_lines).filter(|&l| busy_until[l].is_none_or(|e| e < s)).collect();
        free.retain(|_| rng.random_bool(0.7));
        free.shuffle(&mut rng);
        let mut rest = &free[..];
        while !rest.is_empty() {
            let k = rng.random_range(1..=rest.len().min(3));
            let end = (s + rng.random_range(0..=2)).min(n_steps - 1);
            let persons: Vec<String> = rest[..k].iter().map(|l| format!("p{l}")).collect();
            for &l in &rest[..k] {
                busy_until[l] = Some(end);
            }
            out.push(fragment(&format!("f{}", out.len()), &persons, s, end));
            rest = &rest[k..];
        }
    }
    if out.is_empty() {
        out.push(fragment("f0", &["p0".to_owned()], 0, 0));
    }
    out.shuffle(&mut rng);
    out
}
