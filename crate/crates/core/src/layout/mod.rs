//! Storyline layout: fragments become character lines over discrete time
//! steps.
//!
//! The pipeline has four stages, each usable on its own:
//! [`discretize`] compresses fragment intervals into dense steps and groups
//! characters into sessions, [`order_lines`] picks a vertical order per step
//! that keeps sessions contiguous and avoids crossings, [`align`] and
//! [`feasible_anchors`] choose which lines stay straight between steps, and
//! [`compact`] assigns y coordinates by quadratic minimization.
//! [`compute_layout`] runs all of them and packages a [`LayoutSpec`].

mod align;
mod compact;
mod discretize;
mod incremental;
mod metrics;
mod order;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{EntityId, Fragment, FragmentId};

pub use align::{align, feasible_anchors, lcs, Anchors};
pub use compact::{compact, Compaction, MAX_SWEEPS, TOLERANCE};
pub use discretize::{discretize, Discretized, Session, TimeStep};
pub use incremental::incremental_update;
pub use metrics::metrics;
pub use order::{crossings_between, narrative_order, order_lines, total_crossings, Group, Orderings};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct LayoutParams {
    /// Vertical gap between neighbouring sessions, at least.
    pub min_gap: f64,
    /// Exact vertical gap between members of one session.
    pub inner_gap: f64,
    /// Weight of squared vertical movement between steps.
    pub wiggle_weight: f64,
    /// Weight of squared distance from the axis.
    pub whitespace_weight: f64,
    pub ordering_sweeps: usize,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self { min_gap: 3.0, inner_gap: 1.0, wiggle_weight: 1.0, whitespace_weight: 0.1, ordering_sweeps: 8 }
    }
}

impl LayoutParams {
    pub fn validate(&self) -> Result<(), LayoutError> {
        let bad = |m: &str| Err(LayoutError::InvalidParams(m.to_owned()));
        if !(self.min_gap > 0.0 && self.min_gap.is_finite()) || !(self.inner_gap > 0.0 && self.inner_gap.is_finite()) {
            return bad("gaps must be positive");
        }
        if !(self.wiggle_weight >= 0.0 && self.wiggle_weight.is_finite())
            || !(self.whitespace_weight >= 0.0 && self.whitespace_weight.is_finite())
        {
            return bad("weights must be non-negative");
        }
        Ok(())
    }

    /// Applies one `key=value` override. Keys use the serialized names;
    /// `alpha`, `beta` and `sweeps` are accepted as short forms.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), LayoutError> {
        let bad = || LayoutError::InvalidParams(format!("bad value for {key}: {value:?}"));
        let real = || value.trim().parse::<f64>().map_err(|_| bad());
        match key.trim() {
            "minGap" => self.min_gap = real()?,
            "innerGap" => self.inner_gap = real()?,
            "wiggleWeight" | "alpha" => self.wiggle_weight = real()?,
            "whitespaceWeight" | "beta" => self.whitespace_weight = real()?,
            "orderingSweeps" | "sweeps" => self.ordering_sweeps = value.trim().parse().map_err(|_| bad())?,
            other => return Err(LayoutError::InvalidParams(format!("unknown parameter {other:?}"))),
        }
        Ok(())
    }
}

impl FromStr for LayoutParams {
    type Err = LayoutError;

    /// Parses comma-separated `key=value` pairs over the defaults.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Self::default();
        for pair in s.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| LayoutError::InvalidParams(format!("expected key=value, got {pair:?}")))?;
            p.set(k, v)?;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayoutError {
    #[error("{entity} is in fragments {first} and {second} at step {step}")]
    OverlapConflict { entity: EntityId, step: usize, first: FragmentId, second: FragmentId },
    #[error("invalid layout parameters: {0}")]
    InvalidParams(String),
}

impl LayoutError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::OverlapConflict { .. } => "OverlapConflict",
            Self::InvalidParams(_) => "InvalidParams",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Metrics {
    pub crossings: usize,
    pub wiggles: usize,
    pub whitespace: f64,
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "crossings={}, wiggles={}, whitespace={:.4}", self.crossings, self.wiggles, self.whitespace)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionSpec {
    pub fragment_id: FragmentId,
    pub members: Vec<EntityId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StepSpec {
    pub index: usize,
    /// Fragment interval values compressed into this step.
    pub source_steps: Vec<usize>,
    pub sessions: Vec<SessionSpec>,
    /// Top-to-bottom line order.
    pub ordering: Vec<EntityId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub step: usize,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LineSpec {
    pub entity_id: EntityId,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordAnchor {
    pub term: String,
    pub x: f64,
    pub y: f64,
}

/// The rectangle a fragment occupies, in step units horizontally and layout
/// units vertically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BlockSpec {
    pub fragment_id: FragmentId,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    #[serde(default)]
    pub keyword_anchors: Vec<KeywordAnchor>,
}

/// A line held level between `step` and `step + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnchorSpec {
    pub step: usize,
    pub entity_id: EntityId,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct LayoutFlags {
    /// Compaction hit its sweep limit; coordinates are the best iterate.
    pub non_convergence: bool,
    /// An incremental update fell back to a full relayout.
    pub full_relayout: bool,
    pub compaction_sweeps: usize,
    /// LCS anchors dropped because they contradicted the gap constraints.
    pub dropped_anchors: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LayoutSpec {
    pub steps: Vec<StepSpec>,
    pub lines: Vec<LineSpec>,
    pub blocks: Vec<BlockSpec>,
    #[serde(default)]
    pub anchors: Vec<AnchorSpec>,
    pub metrics: Metrics,
    #[serde(default)]
    pub flags: LayoutFlags,
}

impl LayoutSpec {
    pub fn line(&self, id: &EntityId) -> Option<&LineSpec> {
        self.lines.iter().find(|l| &l.entity_id == id)
    }

    pub fn block(&self, id: &FragmentId) -> Option<&BlockSpec> {
        self.blocks.iter().find(|b| &b.fragment_id == id)
    }

    /// y of `id` at `step`, if the line is present there.
    pub fn y_at(&self, id: &EntityId, step: usize) -> Option<f64> {
        self.line(id)?.segments.iter().find(|s| s.step == step).map(|s| s.y)
    }

    /// Checks ordering, gap and block invariants; returns the first
    /// violation found.
    pub fn check(&self, params: &LayoutParams) -> Result<(), String> {
        const EPS: f64 = 1e-9;
        for st in &self.steps {
            let members: Vec<&EntityId> = st.sessions.iter().flat_map(|s| &s.members).collect();
            if members.len() != st.ordering.len() {
                return Err(format!("step {}: ordering does not cover the sessions", st.index));
            }
            let session_of = |id: &EntityId| st.sessions.iter().position(|s| s.members.contains(id));
            for s in &st.sessions {
                let pos: Vec<usize> = s
                    .members
                    .iter()
                    .map(|m| st.ordering.iter().position(|o| o == m).ok_or(format!("step {}: {m} unordered", st.index)))
                    .collect::<Result<_, _>>()?;
                let (lo, hi) = (pos.iter().min().unwrap(), pos.iter().max().unwrap());
                if hi - lo + 1 != pos.len() {
                    return Err(format!("step {}: session {} is not contiguous", st.index, s.fragment_id));
                }
            }
            for w in st.ordering.windows(2) {
                let y0 = self.y_at(&w[0], st.index).ok_or(format!("step {}: {} has no y", st.index, w[0]))?;
                let y1 = self.y_at(&w[1], st.index).ok_or(format!("step {}: {} has no y", st.index, w[1]))?;
                let same = session_of(&w[0]) == session_of(&w[1]);
                let gap = y1 - y0;
                if same && (gap - params.inner_gap).abs() > EPS {
                    return Err(format!("step {}: inner gap {gap} between {} and {}", st.index, w[0], w[1]));
                }
                if !same && gap < params.min_gap - EPS {
                    return Err(format!("step {}: gap {gap} between {} and {}", st.index, w[0], w[1]));
                }
            }
        }
        for a in &self.anchors {
            match (self.y_at(&a.entity_id, a.step), self.y_at(&a.entity_id, a.step + 1)) {
                (Some(y0), Some(y1)) if (y0 - y1).abs() <= EPS => {}
                _ => return Err(format!("anchor {} at step {} is not level", a.entity_id, a.step)),
            }
        }
        Ok(())
    }
}

/// Full pipeline from fragments to a packaged layout.
pub fn compute_layout(fragments: &[Fragment], params: &LayoutParams) -> Result<LayoutSpec, LayoutError> {
    params.validate()?;
    let disc = discretize(fragments)?;
    let orderings = order_lines(&disc, params);
    Ok(package(&disc, &orderings, fragments, params, false))
}

pub(crate) fn package(
    disc: &Discretized,
    orderings: &Orderings,
    fragments: &[Fragment],
    params: &LayoutParams,
    full_relayout: bool,
) -> LayoutSpec {
    let raw = align(orderings);
    let anchors = feasible_anchors(disc, orderings, &raw, params);
    let comp = compact(disc, orderings, &anchors, params);

    let steps: Vec<StepSpec> = disc
        .steps
        .iter()
        .map(|t| StepSpec {
            index: t.index,
            source_steps: t.source_steps.clone(),
            sessions: disc.sessions[t.index]
                .iter()
                .map(|s| SessionSpec {
                    fragment_id: s.fragment_id.clone(),
                    members: s.members.iter().map(|&l| disc.lines[l].clone()).collect(),
                })
                .collect(),
            ordering: order::flatten(&orderings[t.index]).into_iter().map(|l| disc.lines[l].clone()).collect(),
        })
        .collect();

    let lines: Vec<LineSpec> = disc
        .lines
        .iter()
        .enumerate()
        .map(|(l, id)| LineSpec {
            entity_id: id.clone(),
            segments: (0..disc.steps.len())
                .filter_map(|s| comp.y[s][l].map(|y| Segment { step: s, y }))
                .collect(),
        })
        .collect();

    let mut blocks = Vec::new();
    for f in fragments.iter().filter(|f| f.is_valid()) {
        let covered: Vec<usize> = disc
            .sessions
            .iter()
            .enumerate()
            .filter(|(_, ss)| ss.iter().any(|s| s.fragment_id == f.id))
            .map(|(i, _)| i)
            .collect();
        let (Some(&x0), Some(&x1)) = (covered.first(), covered.last()) else { continue };
        let mut y0 = f64::INFINITY;
        let mut y1 = f64::NEG_INFINITY;
        for &s in &covered {
            let sess = disc.sessions[s].iter().find(|ss| ss.fragment_id == f.id).unwrap();
            for &l in &sess.members {
                let y = comp.y[s][l].expect("session member has a y");
                y0 = y0.min(y);
                y1 = y1.max(y);
            }
        }
        let cx = (x0 + x1) as f64 / 2.0;
        let keyword_anchors = f
            .keywords
            .iter()
            .enumerate()
            .map(|(i, k)| KeywordAnchor { term: k.clone(), x: cx, y: y1 + params.inner_gap * (i as f64 + 1.0) })
            .collect();
        blocks.push(BlockSpec { fragment_id: f.id.clone(), x0: x0 as f64, x1: x1 as f64, y0, y1, keyword_anchors });
    }

    let anchors_out: Vec<AnchorSpec> = anchors
        .kept
        .iter()
        .enumerate()
        .flat_map(|(s, ls)| ls.iter().map(move |&l| (s, l)))
        .map(|(s, l)| AnchorSpec { step: s, entity_id: disc.lines[l].clone() })
        .collect();

    let mut spec = LayoutSpec {
        steps,
        lines,
        blocks,
        anchors: anchors_out,
        metrics: Metrics { crossings: 0, wiggles: 0, whitespace: 0.0 },
        flags: LayoutFlags {
            non_convergence: !comp.converged,
            full_relayout,
            compaction_sweeps: comp.sweeps,
            dropped_anchors: anchors.dropped,
            objective: comp.objective,
        },
    };
    spec.metrics = metrics(&spec);
    spec
}
