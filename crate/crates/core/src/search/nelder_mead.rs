//! Derivative-free simplex descent with Euclidean projection onto
//! probability simplexes. The objective is piecewise smooth (estimator
//! argmins introduce kinks), so no gradients are assumed.

/// Projects `row` onto the probability simplex in Euclidean norm.
pub fn project_simplex(row: &mut [f64]) {
    let n = row.len();
    if n == 0 {
        return;
    }
    let mut sorted: Vec<f64> = row.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut rho = 0usize;
    let mut theta = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if v - t > 0.0 {
            rho = i;
            theta = t;
        }
    }
    let _ = rho;
    for v in row.iter_mut() {
        *v = (*v - theta).max(0.0);
    }
    // Guard against accumulated float error.
    let sum: f64 = row.iter().sum();
    if sum > 0.0 {
        row.iter_mut().for_each(|v| *v /= sum);
    } else {
        row.iter_mut().for_each(|v| *v = 1.0 / n as f64);
    }
}

pub struct NelderMeadResult {
    pub best: Vec<f64>,
    pub best_value: f64,
    pub iterations: usize,
}

/// Minimizes `f` starting from the given non-degenerate simplex of
/// `dim + 1` vertices. Stops after `max_iter` iterations or when the
/// objective spread across the simplex falls below `tol`.
pub fn minimize(
    f: &mut dyn FnMut(&[f64]) -> f64,
    init: Vec<Vec<f64>>,
    max_iter: usize,
    tol: f64,
) -> NelderMeadResult {
    let dim = init[0].len();
    assert!(init.len() == dim + 1, "need dim+1 vertices");
    let mut simplex: Vec<(Vec<f64>, f64)> = init
        .into_iter()
        .map(|x| {
            let v = f(&x);
            (x, v)
        })
        .collect();
    let mut iterations = 0;

    for _ in 0..max_iter {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        if (simplex[dim].1 - simplex[0].1).abs() <= tol {
            break;
        }
        let centroid: Vec<f64> = (0..dim)
            .map(|i| simplex[..dim].iter().map(|(x, _)| x[i]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();
        let point_at = |coef: f64| -> Vec<f64> {
            (0..dim)
                .map(|i| centroid[i] + coef * (centroid[i] - worst.0[i]))
                .collect()
        };

        let reflected = point_at(1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = point_at(2.0);
            let fe = f(&expanded);
            simplex[dim] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
        } else {
            let contracted = if fr < worst.1 {
                point_at(0.5)
            } else {
                point_at(-0.5)
            };
            let fc = f(&contracted);
            if fc < worst.1.min(fr) {
                simplex[dim] = (contracted, fc);
            } else {
                // Shrink toward the best vertex.
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = entry
                        .0
                        .iter()
                        .zip(&best)
                        .map(|(&xi, &bi)| bi + 0.5 * (xi - bi))
                        .collect();
                    let v = f(&x);
                    *entry = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    NelderMeadResult {
        best: simplex[0].0.clone(),
        best_value: simplex[0].1,
        iterations,
    }
}
