//! Pareto convex hull of evaluated region points, realizing time sharing.
//!
//! Points are compared in minimize-orientation coordinates (−R, Rf1, Rf2,
//! D): a point is redundant when some convex combination of the others
//! dominates it componentwise. The membership test is a small feasibility
//! LP solved with a dense two-phase simplex.

use crate::region::RegionPoint;

/// Minimize-orientation coordinates of a region point.
fn coords(p: &RegionPoint, with_rf2: bool) -> Vec<f64> {
    let mut v = vec![-p.r_max, p.rf1_min];
    if with_rf2 {
        v.push(p.rf2_min.unwrap_or(0.0));
    }
    v.push(p.achieved_d);
    v
}

/// Feasibility of { λ ≥ 0, Σλ = 1, Σ λ_j p_j ≤ target + tol } via a
/// phase-one simplex with Bland's rule. `points` are the candidate
/// dominators in minimize orientation.
fn dominated_by_hull(points: &[Vec<f64>], target: &[f64], tol: f64) -> bool {
    let n = points.len();
    if n == 0 {
        return false;
    }
    let d = target.len();
    // Shift all coordinates to be nonnegative; Σλ = 1 keeps the inequality
    // system equivalent under a common shift.
    let mut shift = vec![0.0f64; d];
    for k in 0..d {
        let mut lo = target[k];
        for p in points {
            lo = lo.min(p[k]);
        }
        shift[k] = -lo;
    }

    // Tableau variables: λ_1..λ_n, slacks s_1..s_d, one artificial a for the
    // Σλ = 1 row. Rows: d inequality rows (slack basis) + 1 equality row
    // (artificial basis). Phase one minimizes a.
    let cols = n + d + 1;
    let rows = d + 1;
    let mut t = vec![vec![0.0f64; cols + 1]; rows];
    for k in 0..d {
        for (j, p) in points.iter().enumerate() {
            t[k][j] = p[k] + shift[k];
        }
        t[k][n + k] = 1.0;
        t[k][cols] = target[k] + shift[k] + tol;
    }
    t[d][..n].fill(1.0);
    t[d][n + d] = 1.0;
    t[d][cols] = 1.0;

    let mut basis: Vec<usize> = (0..d).map(|k| n + k).collect();
    basis.push(n + d);

    // Objective row: minimize the artificial variable = 1 − Σλ (from its row).
    let mut obj = vec![0.0f64; cols + 1];
    for j in 0..=cols {
        obj[j] = -t[d][j];
    }
    obj[n + d] = 0.0;

    for _ in 0..10_000 {
        // Bland's rule: first column with a negative reduced cost.
        let entering = (0..cols).find(|&j| obj[j] < -1e-12 && !basis.contains(&j));
        let Some(e) = entering else { break };
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for (r, row) in t.iter().enumerate() {
            if row[e] > 1e-12 {
                let ratio = row[cols] / row[e];
                if ratio < best_ratio - 1e-15
                    || (ratio < best_ratio + 1e-15
                        && leave.map(|l| basis[r] < basis[l]).unwrap_or(true))
                {
                    best_ratio = ratio;
                    leave = Some(r);
                }
            }
        }
        let Some(l) = leave else { break };
        let pivot = t[l][e];
        for v in t[l].iter_mut() {
            *v /= pivot;
        }
        let pivot_row = t[l].clone();
        for (r, row) in t.iter_mut().enumerate() {
            if r != l && row[e].abs() > 1e-15 {
                let factor = row[e];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
            }
        }
        if obj[e].abs() > 1e-15 {
            let factor = obj[e];
            for (v, pv) in obj.iter_mut().zip(&pivot_row) {
                *v -= factor * pv;
            }
        }
        basis[l] = e;
    }

    // Feasible iff the artificial variable is (numerically) zero.
    let artificial_value = basis
        .iter()
        .position(|&b| b == n + d)
        .map(|r| t[r][cols])
        .unwrap_or(0.0);
    artificial_value.abs() <= 1e-9
}

/// True iff `query` lies in the free-disposal convex hull of `points`
/// (some convex combination dominates it in every coordinate up to `tol`).
pub fn hull_contains(points: &[RegionPoint], query: &RegionPoint, tol: f64) -> bool {
    let with_rf2 = points.iter().all(|p| p.rf2_min.is_some()) && query.rf2_min.is_some();
    let vecs: Vec<Vec<f64>> = points.iter().map(|p| coords(p, with_rf2)).collect();
    dominated_by_hull(&vecs, &coords(query, with_rf2), tol)
}

/// Extreme points of the Pareto convex hull: drops every point dominated by
/// a convex combination of the others. Input order is preserved; exact
/// duplicates keep their first occurrence.
pub fn convex_hull_points(points: &[RegionPoint]) -> Vec<RegionPoint> {
    if points.len() <= 1 {
        return points.to_vec();
    }
    let with_rf2 = points.iter().all(|p| p.rf2_min.is_some());
    let vecs: Vec<Vec<f64>> = points.iter().map(|p| coords(p, with_rf2)).collect();

    let mut unique: Vec<usize> = Vec::new();
    'outer: for i in 0..vecs.len() {
        for &j in &unique {
            if vecs[i]
                .iter()
                .zip(&vecs[j])
                .all(|(a, b)| (a - b).abs() <= 1e-12)
            {
                continue 'outer;
            }
        }
        unique.push(i);
    }

    let mut keep = Vec::new();
    for &i in &unique {
        let others: Vec<Vec<f64>> = unique
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| vecs[j].clone())
            .collect();
        if !dominated_by_hull(&others, &vecs[i], 1e-12) {
            keep.push(points[i].clone());
        }
    }
    if keep.is_empty() {
        // All points coincide after deduplication.
        keep.push(points[unique[0]].clone());
    }
    keep
}
