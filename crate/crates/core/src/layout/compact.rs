use nalgebra::{DMatrix, DVector};

use super::align::Blocks;
use super::order::flatten;
use super::{Anchors, Discretized, LayoutParams, Orderings};

/// Convergence threshold on the largest coordinate update in one sweep.
pub const TOLERANCE: f64 = 1e-6;
pub const MAX_SWEEPS: usize = 10_000;
/// Added to the Hessian diagonal when the whitespace weight is zero, which
/// would otherwise leave vertical translation undetermined.
const RIDGE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Compaction {
    /// `y[step][line]`, `None` where the line is absent.
    pub y: Vec<Vec<Option<f64>>>,
    /// α·Σ(Δy)² + β·Σy² at the returned coordinates.
    pub objective: f64,
    pub sweeps: usize,
    pub converged: bool,
}

/// Union-find over blocks with the offset of each block from its root.
struct Merged {
    parent: Vec<usize>,
    offset: Vec<f64>,
}

impl Merged {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), offset: vec![0.0; n] }
    }

    /// Root of `b` and `Y[b] - Y[root]`.
    fn find(&mut self, b: usize) -> (usize, f64) {
        if self.parent[b] == b {
            return (b, 0.0);
        }
        let p = self.parent[b];
        let (root, off_p) = self.find(p);
        self.parent[b] = root;
        self.offset[b] += off_p;
        (root, self.offset[b])
    }

    /// Records `Y[b1] - Y[b0] = c`.
    fn union(&mut self, b0: usize, b1: usize, c: f64) {
        let (r0, o0) = self.find(b0);
        let (r1, o1) = self.find(b1);
        if r0 == r1 {
            return;
        }
        // Y[r1] = Y[b1] - o1 = Y[b0] + c - o1 = Y[r0] + o0 + c - o1
        let (lo, hi) = if r0 < r1 { (r0, r1) } else { (r1, r0) };
        let shift = if r0 < r1 { o0 + c - o1 } else { -(o0 + c - o1) };
        self.parent[hi] = lo;
        self.offset[hi] = shift;
    }
}

/// Minimizes α·Σ(y[s+1,l] − y[s,l])² + β·Σy² subject to the gap rules and
/// the anchors, by Hildreth's dual coordinate ascent.
///
/// Sessions are rigid and anchored blocks share one variable, so only the
/// separation inequalities between neighbouring sessions remain. Sweeps stop
/// once no coordinate moves more than [`TOLERANCE`] or after
/// [`MAX_SWEEPS`]; a final propagation pass then makes every gap hold.
pub fn compact(disc: &Discretized, orderings: &Orderings, anchors: &Anchors, params: &LayoutParams) -> Compaction {
    let t = orderings.len();
    let n_lines = disc.lines.len();
    let blocks = Blocks::new(orderings, params);
    let nb = blocks.len();

    let mut merged = Merged::new(nb);
    for (s, lines) in anchors.kept.iter().enumerate() {
        for &l in lines {
            let (b0, o0) = blocks.line_at[s][&l];
            let (b1, o1) = blocks.line_at[s + 1][&l];
            merged.union(b0, b1, o0 - o1);
        }
    }
    let mut var_of_root = vec![usize::MAX; nb];
    let mut var = vec![0; nb];
    let mut base = vec![0.0; nb];
    let mut n_vars = 0;
    for b in 0..nb {
        let (r, o) = merged.find(b);
        if var_of_root[r] == usize::MAX {
            var_of_root[r] = n_vars;
            n_vars += 1;
        }
        var[b] = var_of_root[r];
        base[b] = o;
    }

    // every present (step, line) as (variable, constant offset)
    let mut at: Vec<Vec<Option<(usize, f64)>>> = vec![vec![None; n_lines]; t];
    for s in 0..t {
        for l in flatten(&orderings[s]) {
            let (b, o) = blocks.line_at[s][&l];
            at[s][l] = Some((var[b], base[b] + o));
        }
    }

    let alpha = params.wiggle_weight;
    let beta = params.whitespace_weight;
    let mut h = DMatrix::<f64>::zeros(n_vars, n_vars);
    let mut g = DVector::<f64>::zeros(n_vars);
    for s in 0..t {
        for l in 0..n_lines {
            if let Some((v, c)) = at[s][l] {
                h[(v, v)] += 2.0 * beta;
                g[v] += 2.0 * beta * c;
                if let Some((v2, c2)) = at.get(s + 1).and_then(|row| row[l]) {
                    if v2 != v {
                        let d = c2 - c;
                        h[(v, v)] += 2.0 * alpha;
                        h[(v2, v2)] += 2.0 * alpha;
                        h[(v, v2)] -= 2.0 * alpha;
                        h[(v2, v)] -= 2.0 * alpha;
                        g[v2] += 2.0 * alpha * d;
                        g[v] -= 2.0 * alpha * d;
                    }
                }
            }
        }
    }
    if beta == 0.0 {
        for v in 0..n_vars {
            h[(v, v)] += RIDGE;
        }
    }

    // z[hi] - z[lo] >= rhs
    let mut cons: Vec<(usize, usize, f64)> = Vec::new();
    for (lo, hi, w) in blocks.separations(params) {
        if var[lo] != var[hi] {
            cons.push((var[lo], var[hi], w + base[lo] - base[hi]));
        }
    }

    let (mut z, sweeps, converged) = if n_vars == 0 {
        (DVector::zeros(0), 0, true)
    } else {
        hildreth(&h, &g, &cons)
    };

    // propagate downward until every separation holds
    for _ in 0..=n_vars {
        let mut changed = false;
        for &(lo, hi, rhs) in &cons {
            if z[hi] - z[lo] < rhs {
                z[hi] = z[lo] + rhs;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let y: Vec<Vec<Option<f64>>> =
        at.iter().map(|row| row.iter().map(|e| e.map(|(v, c)| z[v] + c)).collect()).collect();
    let objective = objective(&y, alpha, beta);
    Compaction { y, objective, sweeps, converged }
}

fn hildreth(h: &DMatrix<f64>, g: &DVector<f64>, cons: &[(usize, usize, f64)]) -> (DVector<f64>, usize, bool) {
    let p = match h.clone().cholesky() {
        Some(c) => c.inverse(),
        None => h.clone().try_inverse().unwrap_or_else(|| DMatrix::identity(h.nrows(), h.ncols())),
    };
    let mut z = -(&p * g);
    if cons.is_empty() {
        return (z, 0, true);
    }
    let denom: Vec<f64> = cons.iter().map(|&(lo, hi, _)| p[(hi, hi)] + p[(lo, lo)] - 2.0 * p[(hi, lo)]).collect();
    let mut lambda = vec![0.0; cons.len()];
    let n = z.len();
    for sweep in 1..=MAX_SWEEPS {
        let mut max_step: f64 = 0.0;
        for (i, &(lo, hi, rhs)) in cons.iter().enumerate() {
            let residual = rhs - (z[hi] - z[lo]);
            let step = (residual / denom[i]).max(-lambda[i]);
            if step == 0.0 {
                continue;
            }
            lambda[i] += step;
            for k in 0..n {
                let dz = step * (p[(k, hi)] - p[(k, lo)]);
                z[k] += dz;
                max_step = max_step.max(dz.abs());
            }
        }
        if max_step < TOLERANCE {
            return (z, sweep, true);
        }
    }
    (z, MAX_SWEEPS, false)
}

/// α·Σ(Δy)² over consecutive steps where the line is present, plus β·Σy².
pub(crate) fn objective(y: &[Vec<Option<f64>>], alpha: f64, beta: f64) -> f64 {
    let mut total = 0.0;
    for s in 0..y.len() {
        for l in 0..y[s].len() {
            if let Some(v) = y[s][l] {
                total += beta * v * v;
                if let Some(Some(w)) = y.get(s + 1).map(|row| row[l]) {
                    total += alpha * (w - v) * (w - v);
                }
            }
        }
    }
    total
}
