//! Derivative-free minimization (Nelder–Mead).

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Convergence when the spread of simplex values falls below this.
    pub f_tol: f64,
    /// ...and the simplex diameter falls below this.
    pub x_tol: f64,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 4000,
            f_tol: 1e-10,
            x_tol: 1e-7,
            initial_step: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimize `f` starting from `x0` with the standard Nelder–Mead
/// coefficients (1, 2, 1/2, 1/2).
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let d = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    simplex.push(x0.to_vec());
    for i in 0..d {
        let mut p = x0.to_vec();
        p[i] += opts.initial_step;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| eval(p, &mut evals)).collect();

    let mut converged = false;
    let mut centroid = vec![0.0; d];
    let mut trial = vec![0.0; d];
    let mut trial2 = vec![0.0; d];
    while evals < opts.max_evals {
        // Order vertices by value.
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[d] - values[0];
        let diameter = simplex[1..]
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread.abs() <= opts.f_tol && diameter <= opts.x_tol {
            converged = true;
            break;
        }

        for c in centroid.iter_mut() {
            *c = 0.0;
        }
        for p in &simplex[..d] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / d as f64;
            }
        }
        let worst = simplex[d].clone();
        for k in 0..d {
            trial[k] = centroid[k] + (centroid[k] - worst[k]);
        }
        let fr = eval(&trial, &mut evals);
        if fr < values[0] {
            for k in 0..d {
                trial2[k] = centroid[k] + 2.0 * (centroid[k] - worst[k]);
            }
            let fe = eval(&trial2, &mut evals);
            if fe < fr {
                simplex[d].copy_from_slice(&trial2);
                values[d] = fe;
            } else {
                simplex[d].copy_from_slice(&trial);
                values[d] = fr;
            }
            continue;
        }
        if fr < values[d - 1] {
            simplex[d].copy_from_slice(&trial);
            values[d] = fr;
            continue;
        }
        // Contraction (outside if the reflection improved on the worst).
        let outside = fr < values[d];
        for k in 0..d {
            trial2[k] = if outside {
                centroid[k] + 0.5 * (trial[k] - centroid[k])
            } else {
                centroid[k] + 0.5 * (worst[k] - centroid[k])
            };
        }
        let fc = eval(&trial2, &mut evals);
        if fc < values[d].min(fr) {
            simplex[d].copy_from_slice(&trial2);
            values[d] = fc;
            continue;
        }
        // Shrink toward the best vertex.
        let best = simplex[0].clone();
        for i in 1..=d {
            for k in 0..d {
                simplex[i][k] = best[k] + 0.5 * (simplex[i][k] - best[k]);
            }
            values[i] = eval(&simplex[i], &mut evals);
        }
    }

    let (bi, _) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("simplex is non-empty");
    Minimum {
        x: simplex[bi].clone(),
        value: values[bi],
        evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(
            f,
            &[-1.2, 1.0],
            NelderMeadOptions {
                max_evals: 10_000,
                f_tol: 1e-14,
                x_tol: 1e-9,
                initial_step: 0.5,
            },
        );
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn minimizes_quadratic_in_five_dims() {
        let f = |x: &[f64]| {
            x.iter()
                .enumerate()
                .map(|(i, v)| (i as f64 + 1.0) * (v - i as f64).powi(2))
                .sum()
        };
        let m = nelder_mead(f, &[0.0; 5], NelderMeadOptions::default());
        for (i, v) in m.x.iter().enumerate() {
            assert!((v - i as f64).abs() < 1e-4, "{i}: {v}");
        }
    }
}
