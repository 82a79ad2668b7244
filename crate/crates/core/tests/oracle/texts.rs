use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PERSONS: &[&str] = &["Anna", "Karl", "Mr. Brown", "Professor Lind", "Clover", "Mrs. Ñúñez", "Zoë", "Harry"];
const PLACES: &[&str] = &["London", "Hogwarts", "Oldtown", "Riverbend", "Diagon Alley", "the Mill"];
const TIMES: &[&str] = &["on Monday", "at midnight", "that night", "on 12 March 1851", "in the morning", "on Christmas Eve"];
const VERBS: &[&str] = &["walked", "ran", "looked", "spoke", "waited", "laughed", "slept", "wrote"];
const FILLER: &[&str] = &["the old soldier", "a grey cat", "the witch", "nobody", "a tinder box", "the dog"];
const OPENERS: &[&str] = &["", "", "Later ", "Then ", "Suddenly ", "Still "];

/// A few sentences of story-like prose mixing names, places, times and
/// plain lower-case nouns.
pub fn story_text(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=6);
    let mut out = Vec::new();
    for _ in 0..n {
        let who = if rng.random_bool(0.7) { PERSONS.choose(&mut rng).unwrap() } else { FILLER.choose(&mut rng).unwrap() };
        let opener = OPENERS.choose(&mut rng).unwrap();
        let mut s = format!("{opener}{who} {}", VERBS.choose(&mut rng).unwrap());
        if rng.random_bool(0.6) {
            let prep = ["to", "at", "in", "from", "near"].choose(&mut rng).unwrap();
            s.push_str(&format!(" {prep} {}", PLACES.choose(&mut rng).unwrap()));
        }
        if rng.random_bool(0.4) {
            s.push_str(&format!(" {}", TIMES.choose(&mut rng).unwrap()));
        }
        if rng.random_bool(0.4) {
            s.push_str(&format!(" with {}", if rng.random_bool(0.5) { PERSONS } else { FILLER }.choose(&mut rng).unwrap()));
        }
        let mut chars = s.chars();
        let first = chars.next().unwrap().to_uppercase().collect::<String>();
        out.push(format!("{first}{}.", chars.as_str()));
    }
    out.join(" ")
}
