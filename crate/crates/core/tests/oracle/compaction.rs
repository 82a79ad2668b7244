//! Dense primal active-set solve of the compaction quadratic program.
//!
//! Variables are y per active (step, line). Session members are tied by
//! equalities, anchors by equalities across steps, neighbouring sessions by
//! `≥ minGap` inequalities. A feasible start comes from longest paths over
//! the difference constraints; every equality-constrained subproblem is a
//! dense KKT system solved with an SVD.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use storyexp_core::layout::{Anchors, LayoutParams, Orderings};

/// `coef · y >= rhs`, or `== rhs` when `eq`.
struct Row {
    i: usize,
    j: usize,
    /// `y[j] - y[i]` compared with `rhs`.
    rhs: f64,
    eq: bool,
}

pub struct Solution {
    /// `y[step][line]`.
    pub y: Vec<Vec<Option<f64>>>,
    pub objective: f64,
    pub iterations: usize,
}

pub fn objective(y: &[Vec<Option<f64>>], alpha: f64, beta: f64) -> f64 {
    let mut f = 0.0;
    for s in 0..y.len() {
        for l in 0..y[s].len() {
            if let Some(v) = y[s][l] {
                f += beta * v * v;
                if s + 1 < y.len() {
                    if let Some(w) = y[s + 1][l] {
                        f += alpha * (w - v).powi(2);
                    }
                }
            }
        }
    }
    f
}

pub fn solve(n_lines: usize, orderings: &Orderings, anchors: &Anchors, params: &LayoutParams) -> Solution {
    let t = orderings.len();
    let mut var: HashMap<(usize, usize), usize> = HashMap::new();
    for (s, groups) in orderings.iter().enumerate() {
        for g in groups {
            for &l in &g.members {
                let k = var.len();
                var.insert((s, l), k);
            }
        }
    }
    let n = var.len();

    let mut rows = Vec::new();
    for (s, groups) in orderings.iter().enumerate() {
        for g in groups {
            for w in g.members.windows(2) {
                rows.push(Row { i: var[&(s, w[0])], j: var[&(s, w[1])], rhs: params.inner_gap, eq: true });
            }
        }
        for w in groups.windows(2) {
            let (a, b) = (*w[0].members.last().unwrap(), w[1].members[0]);
            rows.push(Row { i: var[&(s, a)], j: var[&(s, b)], rhs: params.min_gap, eq: false });
        }
    }
    for (s, kept) in anchors.kept.iter().enumerate() {
        for &l in kept {
            rows.push(Row { i: var[&(s, l)], j: var[&(s + 1, l)], rhs: 0.0, eq: true });
        }
    }

    // Hessian of α·Σ(Δy)² + β·Σy²; the linear term is zero
    let mut h = DMatrix::<f64>::zeros(n, n);
    for (&(s, l), &k) in &var {
        h[(k, k)] += 2.0 * params.whitespace_weight;
        if let Some(&m) = var.get(&(s + 1, l)) {
            h[(k, k)] += 2.0 * params.wiggle_weight;
            h[(m, m)] += 2.0 * params.wiggle_weight;
            h[(k, m)] -= 2.0 * params.wiggle_weight;
            h[(m, k)] -= 2.0 * params.wiggle_weight;
        }
    }
    if params.whitespace_weight == 0.0 {
        for k in 0..n {
            h[(k, k)] += 1e-9;
        }
    }

    let normal = |r: &Row| {
        let mut a = DVector::<f64>::zeros(n);
        a[r.j] += 1.0;
        a[r.i] -= 1.0;
        a
    };

    let mut x = feasible_start(n, &rows);

    // working set: independent equalities, then active inequalities
    let mut work: Vec<usize> = Vec::new();
    for (k, r) in rows.iter().enumerate() {
        if r.eq && independent(&rows, &work, k, n) {
            work.push(k);
        }
    }
    for (k, r) in rows.iter().enumerate() {
        if !r.eq && (x[r.j] - x[r.i] - r.rhs).abs() < 1e-12 && independent(&rows, &work, k, n) {
            work.push(k);
        }
    }

    let mut iterations = 0;
    for _ in 0..10_000 {
        iterations += 1;
        let g = &h * &x;
        let m = work.len();
        let mut kkt = DMatrix::<f64>::zeros(n + m, n + m);
        kkt.view_mut((0, 0), (n, n)).copy_from(&h);
        for (c, &k) in work.iter().enumerate() {
            let a = normal(&rows[k]);
            for v in 0..n {
                kkt[(n + c, v)] = a[v];
                kkt[(v, n + c)] = a[v];
            }
        }
        let mut rhs = DVector::<f64>::zeros(n + m);
        for v in 0..n {
            rhs[v] = -g[v];
        }
        let sol = kkt.svd(true, true).solve(&rhs, 1e-12).expect("svd solve");
        let p = sol.rows(0, n).into_owned();
        // stationarity: H p + g + Aᵀ ν = 0 with ν = sol tail; λ = -ν for a·x ≥ b
        let lambda: Vec<f64> = (0..m).map(|c| -sol[n + c]).collect();

        if p.amax() < 1e-11 {
            let worst = work
                .iter()
                .enumerate()
                .filter(|(_, &k)| !rows[k].eq)
                .map(|(c, _)| (c, lambda[c]))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match worst {
                Some((c, l)) if l < -1e-9 => {
                    work.remove(c);
                }
                _ => break,
            }
            continue;
        }

        let mut step = 1.0;
        let mut blocking = None;
        for (k, r) in rows.iter().enumerate() {
            if r.eq || work.contains(&k) {
                continue;
            }
            let ap = p[r.j] - p[r.i];
            if ap < -1e-14 {
                let slack = x[r.j] - x[r.i] - r.rhs;
                let a = (slack / -ap).max(0.0);
                if a < step {
                    step = a;
                    blocking = Some(k);
                }
            }
        }
        x += step * &p;
        if let Some(k) = blocking {
            work.push(k);
        }
    }

    let mut y = vec![vec![None; n_lines]; t];
    for (&(s, l), &k) in &var {
        y[s][l] = Some(x[k]);
    }
    let objective = objective(&y, params.wiggle_weight, params.whitespace_weight);
    Solution { y, objective, iterations }
}

/// Longest paths from an all-zero start satisfy every `y[j] - y[i] >= w`.
fn feasible_start(n: usize, rows: &[Row]) -> DVector<f64> {
    let mut edges = Vec::new();
    for r in rows {
        edges.push((r.i, r.j, r.rhs));
        if r.eq {
            edges.push((r.j, r.i, -r.rhs));
        }
    }
    let mut d = vec![0.0f64; n];
    for _ in 0..=n {
        let mut changed = false;
        for &(i, j, w) in &edges {
            if d[i] + w > d[j] + 1e-12 {
                d[j] = d[i] + w;
                changed = true;
            }
        }
        if !changed {
            return DVector::from_vec(d);
        }
    }
    panic!("constraint system is infeasible");
}

fn independent(rows: &[Row], work: &[usize], k: usize, n: usize) -> bool {
    let mut a = DMatrix::<f64>::zeros(work.len() + 1, n);
    for (c, &w) in work.iter().chain(std::iter::once(&k)).enumerate() {
        a[(c, rows[w].j)] += 1.0;
        a[(c, rows[w].i)] -= 1.0;
    }
    a.rank(1e-9) == work.len() + 1
}
