//! Learning sparse dual vectors from sample patterns.
//!
//! Each row minimizes `w' G w + lambda |w|_1` over the unit sphere, where `G`
//! is the second-moment matrix of the training subpatterns, by proximal
//! gradient steps followed by renormalization. Later rows see `G` deflated
//! by the earlier ones so they converge to new directions.

use alloc::vec;
use alloc::vec::Vec;

use crate::{rng, LearnError};

#[derive(Debug, Clone, PartialEq)]
pub struct LearnOptions {
    /// Number of dual vectors to learn.
    pub rows: usize,
    /// Weight of the l1 penalty.
    pub sparsity: f64,
    /// Gradient step; `None` picks `1 / (2 trace(G))`.
    pub step: Option<f64>,
    pub max_iterations: usize,
    /// Largest accepted `|w . x|` with `w` scaled to unit max magnitude.
    pub tolerance: f64,
    /// Minimum nonzero magnitude targeted by the final rescaling.
    pub eta: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for LearnOptions {
    fn default() -> Self {
        LearnOptions {
            rows: 1,
            sparsity: 0.0,
            step: None,
            max_iterations: 200_000,
            tolerance: 1e-6,
            eta: 0.5,
            restarts: 3,
            seed: 1,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(w: &mut [f64]) -> bool {
    let norm = libm::sqrt(dot(w, w));
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    w.iter_mut().for_each(|v| *v /= norm);
    true
}

fn residual(w: &[f64], patterns: &[Vec<f64>]) -> f64 {
    let max = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if max == 0.0 {
        return f64::INFINITY;
    }
    patterns.iter().map(|x| dot(w, x).abs() / max).fold(0.0, f64::max)
}

/// Learns `options.rows` dual vectors for the subpatterns of `members`.
///
/// Every returned row `w` satisfies `|w . x| <= tolerance` (with `w` scaled to
/// unit max magnitude) for all training subpatterns. Rows are finally scaled
/// up so that their smallest nonzero entry reaches `eta` when it falls short.
pub fn learn_dual_vectors(
    patterns: &[Vec<u32>],
    members: &[usize],
    options: &LearnOptions,
) -> Result<Vec<Vec<f64>>, LearnError> {
    if patterns.is_empty() {
        return Err(LearnError::NoPatterns);
    }
    if members.is_empty() || options.rows == 0 {
        return Err(LearnError::InvalidOption("need at least one member and one row"));
    }
    if !(options.sparsity >= 0.0 && options.tolerance > 0.0 && options.eta > 0.0) || options.max_iterations == 0 {
        return Err(LearnError::InvalidOption("penalty, tolerance, eta and iterations must be positive"));
    }
    if options.step.is_some_and(|s| !(s > 0.0)) {
        return Err(LearnError::InvalidOption("step must be positive"));
    }
    if patterns.iter().any(|p| members.iter().any(|&j| j >= p.len())) {
        return Err(LearnError::InvalidOption("member id outside the pattern length"));
    }
    let n = members.len();
    let subs: Vec<Vec<f64>> = patterns.iter().map(|p| members.iter().map(|&j| p[j] as f64).collect()).collect();
    let mut gram = vec![0.0; n * n];
    for x in &subs {
        for a in 0..n {
            for b in 0..n {
                gram[a * n + b] += x[a] * x[b];
            }
        }
    }
    let scale = 1.0 / subs.len() as f64;
    gram.iter_mut().for_each(|v| *v *= scale);
    let trace: f64 = (0..n).map(|a| gram[a * n + a]).sum();
    // added to the Gram matrix along every learned direction
    let deflation = trace + 1.0;

    let mut rng = rng::from_seed(options.seed);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut grad = vec![0.0; n];
    for _ in 0..options.rows {
        let lipschitz = 2.0 * (trace + deflation * rows.len() as f64);
        let step = options.step.unwrap_or(1.0 / lipschitz.max(1e-300));
        let mut best_residual = f64::INFINITY;
        let mut found = None;
        for _ in 0..options.restarts.max(1) {
            let mut w: Vec<f64> = (0..n).map(|_| rng::symmetric(&mut rng, 1.0)).collect();
            if !normalize(&mut w) {
                continue;
            }
            let mut ok = true;
            for _ in 0..options.max_iterations {
                for a in 0..n {
                    grad[a] = 2.0 * dot(&gram[a * n..(a + 1) * n], &w);
                }
                for r in &rows {
                    let c = 2.0 * deflation * dot(r, &w);
                    for a in 0..n {
                        grad[a] += c * r[a];
                    }
                }
                let shrink = step * options.sparsity;
                for a in 0..n {
                    let v = w[a] - step * grad[a];
                    w[a] = if v > shrink {
                        v - shrink
                    } else if v < -shrink {
                        v + shrink
                    } else {
                        0.0
                    };
                }
                if !normalize(&mut w) {
                    ok = false;
                    break;
                }
                if residual(&w, &subs) <= options.tolerance {
                    break;
                }
            }
            if !ok {
                // all entries thresholded away: retry from a new start
                continue;
            }
            let res = residual(&w, &subs);
            if res <= options.tolerance {
                found = Some(w);
                break;
            }
            best_residual = best_residual.min(res);
        }
        match found {
            Some(w) => rows.push(w),
            None => {
                return Err(LearnError::NotConverged { iterations: options.max_iterations, residual: best_residual })
            }
        }
    }
    for w in &mut rows {
        let max = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        w.iter_mut().for_each(|v| *v /= max);
        let min = w.iter().filter(|v| **v != 0.0).fold(f64::INFINITY, |a, v| a.min(v.abs()));
        if min < options.eta {
            let up = options.eta / min;
            w.iter_mut().for_each(|v| *v *= up);
        }
    }
    Ok(rows)
}
