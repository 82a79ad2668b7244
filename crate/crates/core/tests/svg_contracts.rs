use std::collections::{BTreeMap, BTreeSet, HashSet};

use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roxmltree::{Document, Node};

use storyexp_core::extract::WeightedTerm;
use storyexp_core::layout::compute_layout;
use storyexp_core::model::{EntityKind, EntitySource, FragmentDraft, StoryDocument};
use storyexp_core::render::{
    layout_wordcloud, render_fragment_diagram, render_location_bands, render_minimap, render_storyline,
    render_time_points, Region, Viewport, Window,
};
use storyexp_core::render::FontMetrics;
use storyexp_core::{LayoutParams, LayoutSpec, SceneConfig};

const KEYWORDS: &[&str] = &["tinder", "box", "witch", "dog", "copper", "silver", "gold", "castle", "princess", "tree"];

fn random_document(seed: u64) -> StoryDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = StoryDocument::new("svg", "svg <&> test", vec!["Once upon a time there was a soldier.".into()]);
    let persons: Vec<_> = (0..rng.random_range(2..=7))
        .map(|i| d.add_entity(EntityKind::Person, &format!("Person \"{i}\" & co"), EntitySource::Manual, 1.0).unwrap())
        .collect();
    let places: Vec<_> = (0..rng.random_range(0..=2))
        .map(|i| d.add_entity(EntityKind::Place, &format!("place {i}"), EntitySource::Manual, 1.0).unwrap())
        .collect();
    let times: Vec<_> = (0..rng.random_range(0..=2))
        .map(|i| d.add_entity(EntityKind::Time, &format!("day {i}"), EntitySource::Manual, 1.0).unwrap())
        .collect();
    for k in 0..rng.random_range(3..=10) {
        let n = rng.random_range(1..=3.min(persons.len()));
        let who: Vec<_> = persons.choose_multiple(&mut rng, n).cloned().collect();
        let keywords = (0..rng.random_range(0..=3)).map(|_| KEYWORDS.choose(&mut rng).unwrap().to_string()).collect();
        d.create_fragment(FragmentDraft {
            persons: who,
            place: if rng.random_bool(0.6) { places.choose(&mut rng).cloned() } else { None },
            time: if rng.random_bool(0.5) { times.choose(&mut rng).cloned() } else { None },
            event_summary: Some(format!("event <{k}>")),
            keywords,
            ..Default::default()
        })
        .unwrap();
    }
    d
}

fn scene(seed: u64) -> (StoryDocument, LayoutSpec, String) {
    let doc = random_document(seed);
    let layout = compute_layout(&doc.layout_fragments(), &LayoutParams::default()).unwrap();
    let svg = render_storyline(&layout, &doc, &SceneConfig::default()).svg;
    (doc, layout, svg)
}

fn class_is(n: &Node, class: &str) -> bool {
    n.attribute("class").is_some_and(|c| c.split_whitespace().any(|x| x == class))
}

fn numbers(d: &str) -> Vec<f64> {
    d.split(|c: char| c.is_ascii_alphabetic() || c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().unwrap())
        .collect()
}

#[test]
fn storyline_scene_has_one_element_per_model_object() {
    for seed in 0..40 {
        let (doc, layout, svg) = scene(seed);
        let xml = Document::parse(&svg).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{svg}"));
        let ids: Vec<&str> = xml.descendants().filter_map(|n| n.attribute("id")).collect();
        let unique: HashSet<&str> = ids.iter().copied().collect();
        assert_eq!(ids.len(), unique.len(), "seed {seed}: duplicate ids");

        let paths: BTreeSet<&str> =
            xml.descendants().filter(|n| class_is(n, "character-line")).map(|n| n.attribute("id").unwrap()).collect();
        let live = doc.layout_fragments();
        let in_story: BTreeSet<&str> = live.iter().flat_map(|f| f.persons.iter().map(|p| p.as_str())).collect();
        assert_eq!(paths, in_story, "seed {seed}");

        let blocks = xml.descendants().filter(|n| class_is(n, "block")).count();
        assert_eq!(blocks, doc.fragments().len(), "seed {seed}");

        let legend = xml.descendants().filter(|n| class_is(n, "legend-item")).count();
        let persons = doc.entities().iter().filter(|e| e.kind == EntityKind::Person).count();
        assert_eq!(legend, persons, "seed {seed}");

        // names round-trip through escaping
        for e in doc.entities().iter().filter(|e| paths.contains(e.id.as_str())) {
            let path = xml.descendants().find(|n| n.attribute("id") == Some(e.id.as_str())).unwrap();
            assert_eq!(path.attribute("data-name"), Some(e.canonical_name.as_str()));
        }
        assert!(layout.blocks.len() == blocks);
    }
}

#[test]
fn keywords_sit_inside_their_block_group() {
    for seed in 0..40 {
        let (doc, layout, svg) = scene(seed);
        let xml = Document::parse(&svg).unwrap();
        for kw in xml.descendants().filter(|n| class_is(n, "keyword")) {
            let owner = kw.ancestors().find(|a| class_is(a, "block"));
            assert!(owner.is_some(), "seed {seed}: keyword outside any block");
        }
        for b in &layout.blocks {
            let g = xml.descendants().find(|n| n.attribute("id") == Some(b.fragment_id.as_str())).unwrap();
            let shown: Vec<&str> = g.descendants().filter(|n| class_is(n, "keyword")).filter_map(|n| n.text()).collect();
            let terms: Vec<&str> = b.keyword_anchors.iter().map(|k| k.term.as_str()).collect();
            assert_eq!(shown, terms, "seed {seed}");
            let f = doc.fragment(&b.fragment_id).unwrap();
            for t in terms {
                assert!(f.keywords.iter().any(|k| k == t), "seed {seed}: {t} is not a keyword of {}", f.id);
            }
        }
    }
}

#[test]
fn character_paths_run_left_to_right_through_their_layout_points() {
    let cfg = SceneConfig::default();
    for seed in 0..40 {
        let (_, layout, svg) = scene(seed);
        let xml = Document::parse(&svg).unwrap();
        for line in layout.lines.iter().filter(|l| !l.segments.is_empty()) {
            let path = xml.descendants().find(|n| n.attribute("id") == Some(line.entity_id.as_str())).unwrap();
            let d = path.attribute("d").unwrap();
            assert_eq!(d.matches('M').count(), runs(&line.segments.iter().map(|s| s.step).collect::<Vec<_>>()));
            let pts: Vec<(f64, f64)> = numbers(d).chunks(2).map(|c| (c[0], c[1])).collect();
            assert!(pts.windows(2).all(|w| w[1].0 >= w[0].0), "seed {seed}: {d}");
            for s in &line.segments {
                let x = s.step as f64 * cfg.px_per_step;
                let hit = pts.iter().any(|&(px, py)| (px - x).abs() < 0.01 && (py - s.y * cfg.px_per_unit).abs() < 0.01);
                assert!(hit, "seed {seed}: {} misses step {} at y {}", line.entity_id, s.step, s.y);
            }
        }
    }
}

fn runs(steps: &[usize]) -> usize {
    steps.windows(2).filter(|w| w[1] != w[0] + 1).count() + usize::from(!steps.is_empty())
}

#[test]
fn time_points_and_bands_follow_the_fragments() {
    for seed in 0..40 {
        let (doc, layout, svg) = scene(seed);
        let xml = Document::parse(&svg).unwrap();
        let marked: BTreeSet<usize> = layout
            .steps
            .iter()
            .filter(|st| st.sessions.iter().any(|s| doc.fragment(&s.fragment_id).unwrap().time.is_some()))
            .map(|st| st.index)
            .collect();
        let drawn: BTreeSet<usize> = xml
            .descendants()
            .filter(|n| class_is(n, "time-point"))
            .map(|n| n.attribute("id").unwrap().trim_start_matches("time-").parse().unwrap())
            .collect();
        assert_eq!(drawn, marked, "seed {seed}");

        let mut fill_of_place: BTreeMap<&str, &str> = BTreeMap::new();
        let bands: Vec<Node> = xml.descendants().filter(|n| class_is(n, "location-band")).collect();
        let with_place = doc.fragments().iter().filter(|f| f.place.is_some()).count();
        assert_eq!(bands.len(), with_place, "seed {seed}");
        for b in &bands {
            let place = b.attribute("data-place").unwrap();
            let fill = b.attribute("fill").unwrap();
            assert_eq!(*fill_of_place.entry(place).or_insert(fill), fill, "seed {seed}: one place, two colors");
        }
        let distinct: HashSet<&&str> = fill_of_place.values().collect();
        assert_eq!(distinct.len(), fill_of_place.len().min(SceneConfig::default().palette.len()));

        // the standalone layers are well-formed fragments of the same scene
        let bands_svg = render_location_bands(&layout, doc.fragments(), &SceneConfig::default());
        Document::parse(&bands_svg).unwrap();
        let tp = render_time_points(&layout, &marked.iter().copied().collect::<Vec<_>>(), &SceneConfig::default()).unwrap();
        assert_eq!(Document::parse(&tp).unwrap().descendants().filter(|n| class_is(n, "time-point")).count(), marked.len());
    }
}

#[test]
fn unknown_time_point_step_is_an_error() {
    let (_, layout, _) = scene(1);
    let err = render_time_points(&layout, &[layout.steps.len() + 3], &SceneConfig::default()).unwrap_err();
    assert_eq!(err.name(), "UnknownStep");
}

#[test]
fn small_viewport_scales_and_warns() {
    let (doc, layout, _) = scene(3);
    let cfg = SceneConfig { viewport: Some(Viewport { width: 200.0, height: 100.0 }), ..Default::default() };
    let out = render_storyline(&layout, &doc, &cfg);
    assert_eq!(out.warnings.len(), 1);
    assert!(out.warnings[0].starts_with("ViewportTooSmall"));
    let xml = Document::parse(&out.svg).unwrap();
    let root = xml.root_element();
    assert_eq!(root.attribute("width"), Some("200"));
    assert_eq!(root.attribute("height"), Some("100"));
    assert!(xml.descendants().any(|n| n.attribute("id") == Some("warning")));
}

#[test]
fn fragment_diagram_has_a_sector_per_person() {
    for seed in 0..20 {
        let doc = random_document(seed);
        for f in doc.fragments() {
            let svg = render_fragment_diagram(f, &doc, &SceneConfig::default());
            let xml = Document::parse(&svg).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            let sectors: Vec<Node> = xml.descendants().filter(|n| class_is(n, "person-sector")).collect();
            assert_eq!(sectors.len(), f.persons.len());
            let sweep: f64 = sectors.iter().map(|s| s.attribute("data-sweep").unwrap().parse::<f64>().unwrap()).sum();
            assert!((sweep - 360.0).abs() < 1e-6, "seed {seed}: sectors sweep {sweep}");
            let terms: BTreeSet<&str> =
                xml.descendants().filter(|n| class_is(n, "cloud-term")).filter_map(|n| n.text()).collect();
            let kws: BTreeSet<&str> = f.keywords.iter().map(String::as_str).collect();
            assert!(terms.is_subset(&kws));
        }
    }
}

#[test]
fn minimap_window_stays_inside_the_extent() {
    let (_, layout, _) = scene(7);
    let cfg = SceneConfig::default();
    for (x, y, w, h) in [(-50.0, -50.0, 2.0, 2.0), (0.5, 0.5, 1.0, 1.0), (100.0, 100.0, 3.0, 1.0), (0.0, 0.0, 1e6, 1e6)] {
        let m = render_minimap(&layout, Window { x, y, width: w, height: h }, &cfg);
        Document::parse(&m.svg).unwrap();
        let (win, ext) = (m.window, m.extent);
        assert!(win.x >= ext.x - 1e-9 && win.x + win.width <= ext.x + ext.width + 1e-9);
        assert!(win.y >= ext.y - 1e-9 && win.y + win.height <= ext.y + ext.height + 1e-9);
    }
}

fn overlaps(a: &[f64; 4], b: &[f64; 4]) -> bool {
    a[0] < b[2] && b[0] < a[2] && a[1] < b[3] && b[1] < a[3]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn word_cloud_boxes_are_disjoint_and_inside(
        words in prop::collection::btree_map("[a-z]{1,12}", 0.01f64..10.0, 0..30),
        w in 60.0f64..400.0, h in 40.0f64..300.0,
    ) {
        let terms: Vec<WeightedTerm> = words.iter().map(|(t, &weight)| WeightedTerm { term: t.clone(), weight }).collect();
        let region = Region { x: 10.0, y: 20.0, width: w, height: h };
        let cloud = layout_wordcloud(&terms, region, &FontMetrics::default());
        let boxes: Vec<[f64; 4]> = cloud.placed.iter().map(|p| p.bbox()).collect();
        for (i, a) in boxes.iter().enumerate() {
            prop_assert!(region.contains(a), "{:?} outside", a);
            for b in &boxes[i + 1..] {
                prop_assert!(!overlaps(a, b), "{:?} overlaps {:?}", a, b);
            }
        }
        let mut seen: Vec<&str> = cloud.placed.iter().map(|p| p.term.as_str()).chain(cloud.skipped.iter().map(String::as_str)).collect();
        seen.sort_unstable();
        let want: Vec<&str> = words.keys().map(String::as_str).collect();
        prop_assert_eq!(seen, want);
    }
}
