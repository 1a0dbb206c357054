//! Error probabilities of noisy neurons, single-error correction estimates,
//! density evolution and threshold selection.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use rand::RngCore;

use crate::degree::DegreeDistribution;
use crate::model::{Cluster, NetworkModel, NoiseSpec, Thresholds};
use crate::recall::intra_cluster_correct;
use crate::{rng, AnalysisError};

/// Probabilities that a neuron changes its output purely because of internal
/// noise when its noiseless input is zero: `(pi0, p0)` for constraint and
/// pattern neurons.
pub fn noiseless_flip_probs(upsilon: f64, nu: f64, phi: f64, psi: f64) -> (f64, f64) {
    let pi0 = if nu > 0.0 { ((nu - psi) / nu).max(0.0) } else { 0.0 };
    let p0 = if upsilon > 0.0 { ((upsilon - phi) / upsilon).max(0.0) } else { 0.0 };
    (pi0, p0)
}

/// Upper bound on the probability that a constraint neuron touched by one
/// error stays silent.
pub fn pi1_upper_bound(nu: f64, psi: f64, eta: f64) -> Result<f64, AnalysisError> {
    if eta < psi {
        return Err(AnalysisError::InvalidRegime { eta, psi });
    }
    if !(0.0..1.0).contains(&nu) || psi <= 0.0 {
        return Err(AnalysisError::InvalidArgument("need 0 <= nu < 1 and psi > 0"));
    }
    if nu == 0.0 {
        return Ok(0.0);
    }
    Ok(((nu - (eta - psi)) / (2.0 * nu)).max(0.0))
}

/// Shape of one cluster as seen by the single-error analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStats {
    pub n: usize,
    pub m: usize,
    /// Pattern-neuron degrees inside the cluster.
    pub degrees: Vec<u32>,
    pub mean_degree: f64,
}

impl ClusterStats {
    pub fn new(m: usize, degrees: Vec<u32>) -> Self {
        let n = degrees.len();
        let mean_degree = degrees.iter().map(|&d| d as f64).sum::<f64>() / n.max(1) as f64;
        ClusterStats { n, m, degrees, mean_degree }
    }

    pub fn from_cluster(cluster: &Cluster) -> Self {
        Self::new(cluster.n_constraints(), cluster.pattern_degrees().to_vec())
    }
}

const EXACT_BINOMIAL_MAX: usize = 64;

fn ln_choose(n: usize, k: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// `Pr{Bin(n, p) = k}` for every `k`. Exact in log space up to degree 64,
/// continuity-corrected normal approximation above.
pub fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let p = p.clamp(0.0, 1.0);
    if p == 0.0 || p == 1.0 {
        let mut out = vec![0.0; n + 1];
        out[if p == 0.0 { 0 } else { n }] = 1.0;
        return out;
    }
    if n <= EXACT_BINOMIAL_MAX {
        let (lp, lq) = (libm::log(p), libm::log1p(-p));
        return (0..=n)
            .map(|k| libm::exp(ln_choose(n, k) + k as f64 * lp + (n - k) as f64 * lq))
            .collect();
    }
    let mean = n as f64 * p;
    let sd = libm::sqrt(n as f64 * p * (1.0 - p));
    let cdf = |x: f64| 0.5 * (1.0 + libm::erf((x - mean) / (sd * core::f64::consts::SQRT_2)));
    let mut out: Vec<f64> = (0..=n).map(|k| cdf(k as f64 + 0.5) - cdf(k as f64 - 0.5)).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    out
}

/// Probability that a clean pattern neuron of degree `d` with backward sum
/// `o` changes state.
pub fn q1(o: f64, d: f64, upsilon: f64, phi: f64) -> f64 {
    let g = o / d;
    if upsilon == 0.0 {
        return if g.abs() >= phi { 1.0 } else { 0.0 };
    }
    let up = ((upsilon - (phi - g)) / (2.0 * upsilon)).clamp(0.0, 1.0);
    let down = ((upsilon - (phi + g)) / (2.0 * upsilon)).clamp(0.0, 1.0);
    (up + down).min(1.0)
}

/// Probability that the corrupted neuron of degree `d1` fails to move in the
/// right direction when `j` of its constraints stay silent.
pub fn q2(j: usize, d1: usize, upsilon: f64, phi: f64) -> f64 {
    let (j, d1f) = (j as f64, d1 as f64);
    if upsilon == 0.0 {
        return if (d1f - j) / d1f < phi { 1.0 } else { 0.0 };
    }
    if j >= (1.0 + upsilon - phi) * d1f {
        1.0
    } else if j <= (1.0 - upsilon - phi) * d1f {
        ((upsilon - phi) / upsilon).max(0.0)
    } else {
        ((upsilon + phi - (d1f - j) / d1f) / (2.0 * upsilon)).clamp(0.0, 1.0)
    }
}

/// Average of `q1` for a clean neuron of degree `dj` in a cluster with mean
/// degree `mean_degree` and `m` constraints.
fn q1_bar_degree(dj: usize, mean_degree: f64, m: usize, upsilon: f64, phi: f64, pi1: f64) -> f64 {
    let share = (mean_degree / m as f64).clamp(0.0, 1.0);
    // inner average over e ~ Bin(bc, 1/2), shared by every b >= bc
    let by_bc: Vec<f64> = (0..=dj)
        .map(|bc| {
            binomial_pmf(bc, 0.5)
                .iter()
                .enumerate()
                .map(|(e, &w_e)| w_e * q1((2 * e) as f64 - bc as f64, dj as f64, upsilon, phi))
                .sum()
        })
        .collect();
    let mut total = 0.0;
    for (b, &w_b) in binomial_pmf(dj, share).iter().enumerate() {
        if w_b == 0.0 {
            continue;
        }
        let inner: f64 = binomial_pmf(b, 1.0 - pi1).iter().zip(&by_bc).map(|(w, s)| w * s).sum();
        total += w_b * inner;
    }
    total
}

/// `(P1, Pc1)` of one cluster: the per-neuron mistake probability with one
/// external error and the probability that every neuron decides correctly.
pub fn analytic_p1(stats: &ClusterStats, upsilon: f64, phi: f64, pi1: f64) -> (f64, f64) {
    let n = stats.n.max(1) as f64;
    let k = stats.degrees.len().max(1) as f64;
    let mut by_degree: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
    let (mut q1_sum, mut q2_sum) = (0.0, 0.0);
    for &d in &stats.degrees {
        let (a, b) = *by_degree.entry(d).or_insert_with(|| {
            let d = d as usize;
            let q1b = q1_bar_degree(d, stats.mean_degree, stats.m, upsilon, phi, pi1);
            let q2b = binomial_pmf(d, pi1).iter().enumerate().map(|(j, &w)| w * q2(j, d, upsilon, phi)).sum::<f64>();
            (q1b, q2b)
        });
        q1_sum += a;
        q2_sum += b;
    }
    let (q1_bar, q2_bar) = (q1_sum / k, q2_sum / k);
    let p1 = (q2_bar + (n - 1.0) * q1_bar) / n;
    (p1, libm::pow(1.0 - p1, n))
}

/// Grid search for the pattern threshold minimizing `1 - Pc1` averaged over
/// clusters. Ties go to the larger threshold.
pub fn optimize_threshold_phi(
    upsilon: f64,
    pi1: f64,
    stats: &[ClusterStats],
    phi_grid: &[f64],
) -> Result<(f64, Vec<(f64, f64)>), AnalysisError> {
    if stats.is_empty() || phi_grid.is_empty() {
        return Err(AnalysisError::InvalidArgument("empty cluster list or threshold grid"));
    }
    if phi_grid.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
        return Err(AnalysisError::InvalidArgument("thresholds must lie in (0, 1]"));
    }
    let curve: Vec<(f64, f64)> = phi_grid
        .iter()
        .map(|&phi| {
            let pc = stats.iter().map(|s| analytic_p1(s, upsilon, phi, pi1).1).sum::<f64>() / stats.len() as f64;
            (phi, 1.0 - pc)
        })
        .collect();
    let mut best = curve[0];
    for &(phi, pe) in &curve[1..] {
        if pe < best.1 || (pe == best.1 && phi > best.0) {
            best = (phi, pe);
        }
    }
    Ok((best.0, curve))
}

/// One row of a correction-probability table.
#[derive(Debug, Clone, PartialEq)]
pub struct PciRow {
    pub upsilon: f64,
    pub nu: f64,
    pub i: usize,
    /// Total attempts over all clusters.
    pub trials: usize,
    pub p_ci: f64,
    pub ci_halfwidth: f64,
}

/// Monte-Carlo probability that one cluster corrects `i` random `±1` errors.
///
/// Every cluster receives `trials` attempts on its slice of `reference`;
/// an attempt succeeds when the intra-cluster loop restores the slice
/// exactly.
#[allow(clippy::too_many_arguments)]
pub fn estimate_pci<R: RngCore + ?Sized>(
    model: &NetworkModel,
    reference: &[u32],
    i: usize,
    noise: &NoiseSpec,
    thresholds: &Thresholds,
    t_max: usize,
    trials: usize,
    rng: &mut R,
) -> Result<PciRow, AnalysisError> {
    let min_size = model.clusters().iter().map(|c| c.n_members()).min().unwrap_or(0);
    if i == 0 || i > min_size {
        return Err(AnalysisError::InvalidArgument("error count must lie in 1..=min cluster size"));
    }
    if trials == 0 || t_max == 0 {
        return Err(AnalysisError::InvalidArgument("trials and t_max must be positive"));
    }
    if reference.len() != model.n() {
        return Err(AnalysisError::InvalidArgument("reference pattern has the wrong length"));
    }
    let q = model.q();
    let mut successes = 0usize;
    let mut truth = Vec::new();
    let mut local = Vec::new();
    for cluster in model.clusters() {
        cluster.gather(reference, &mut truth);
        for _ in 0..trials {
            local.clear();
            local.extend_from_slice(&truth);
            for pos in rng::sample_distinct(rng, cluster.n_members(), i) {
                let up = rng::coin(rng, 0.5);
                let x = local[pos] as i64 + if up { 1 } else { -1 };
                local[pos] = x.clamp(0, q as i64 - 1) as u32;
            }
            intra_cluster_correct(cluster, &mut local, q, thresholds, noise, t_max, rng);
            successes += (local == truth) as usize;
        }
    }
    let total = trials * model.l();
    let p = successes as f64 / total as f64;
    Ok(PciRow {
        upsilon: noise.upsilon,
        nu: noise.nu,
        i,
        trials: total,
        p_ci: p,
        ci_halfwidth: 1.96 * libm::sqrt(p * (1.0 - p) / total as f64),
    })
}

fn check_distributions(lambda: &DegreeDistribution, rho: &DegreeDistribution) -> Result<(), AnalysisError> {
    if lambda.is_empty() || rho.is_empty() {
        return Err(AnalysisError::DegenerateDistribution);
    }
    Ok(())
}

/// Cluster-side failure probability after one round when a fraction `z` of
/// incoming messages is in error.
fn big_pi(z: f64, rho: &DegreeDistribution, pc: &[f64]) -> f64 {
    let mut fact = 1.0;
    let mut zp = 1.0;
    let mut s = 0.0;
    for (k, &p) in pc.iter().enumerate() {
        if k > 0 {
            fact *= k as f64;
            zp *= z;
        }
        if p != 0.0 {
            s += p * zp / fact * rho.derivative(k, 1.0 - z);
        }
    }
    (1.0 - s).clamp(0.0, 1.0)
}

/// One density-evolution update `z -> epsilon * lambda(Pi(z))`.
pub fn de_recursion_step(
    z: f64,
    epsilon: f64,
    lambda: &DegreeDistribution,
    rho: &DegreeDistribution,
    pc: &[f64],
) -> f64 {
    epsilon * lambda.eval(big_pi(z, rho, pc))
}

/// Density-evolution trajectory from `z(0) = epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeResult {
    pub epsilon: f64,
    pub trajectory: Vec<f64>,
    pub final_value: f64,
    pub success: bool,
    pub threshold: Option<f64>,
}

/// Iterates the recursion until it drops below `tol`, stalls, or hits
/// `max_iterations`.
pub fn de_trajectory(
    epsilon: f64,
    lambda: &DegreeDistribution,
    rho: &DegreeDistribution,
    pc: &[f64],
    tol: f64,
    max_iterations: usize,
) -> Result<DeResult, AnalysisError> {
    check_distributions(lambda, rho)?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(AnalysisError::InvalidArgument("epsilon must lie in [0, 1]"));
    }
    let mut z = epsilon;
    let mut trajectory = vec![z];
    for _ in 0..max_iterations {
        if z < tol {
            break;
        }
        let next = de_recursion_step(z, epsilon, lambda, rho, pc).clamp(0.0, 1.0);
        trajectory.push(next);
        let stalled = (z - next).abs() <= 1e-15;
        z = next;
        if stalled {
            break;
        }
    }
    Ok(DeResult { epsilon, trajectory, final_value: z, success: z < tol, threshold: None })
}

fn below_diagonal(
    epsilon: f64,
    lambda: &DegreeDistribution,
    rho: &DegreeDistribution,
    pc: &[f64],
    tol: f64,
    grid: usize,
) -> bool {
    if epsilon <= tol {
        return false;
    }
    let steps = grid.max(2) - 1;
    (0..=steps).all(|k| {
        let z = tol + (epsilon - tol) * k as f64 / steps as f64;
        de_recursion_step(z, epsilon, lambda, rho, pc) < z
    })
}

/// Largest `epsilon` for which `epsilon * lambda(Pi(z)) < z` on a uniform
/// grid of `[tol, epsilon]`, found by bisection to `tol`.
pub fn de_threshold(
    lambda: &DegreeDistribution,
    rho: &DegreeDistribution,
    pc: &[f64],
    tol: f64,
    grid: usize,
) -> Result<f64, AnalysisError> {
    check_distributions(lambda, rho)?;
    if !(tol > 0.0 && tol < 1.0) || grid < 2 {
        return Err(AnalysisError::InvalidArgument("need 0 < tol < 1 and at least two grid points"));
    }
    if below_diagonal(1.0, lambda, rho, pc, tol, grid) {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if below_diagonal(mid, lambda, rho, pc, tol, grid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn flip_probabilities() {
        assert_eq!(noiseless_flip_probs(0.3, 0.4, 0.5, 0.5), (0.0, 0.0));
        let (pi0, p0) = noiseless_flip_probs(0.8, 0.5, 0.6, 0.25);
        assert!(close(pi0, 0.5, 1e-15));
        assert!(close(p0, 0.25, 1e-15));
        assert_eq!(noiseless_flip_probs(0.0, 0.0, 0.5, 0.5), (0.0, 0.0));
    }

    #[test]
    fn pi1_bound_values() {
        assert!(close(pi1_upper_bound(0.3, 0.2, 0.4).unwrap(), 1.0 / 6.0, 1e-15));
        assert!(close(pi1_upper_bound(0.3, 0.2, 0.2).unwrap(), 0.5, 1e-15));
        assert_eq!(pi1_upper_bound(0.2, 0.2, 0.5).unwrap(), 0.0);
        assert!(matches!(pi1_upper_bound(0.2, 0.5, 0.4), Err(AnalysisError::InvalidRegime { .. })));
    }

    /// The case formula for `q1` as written.
    fn q1_cases(o: f64, d: f64, ups: f64, phi: f64) -> f64 {
        if o.abs() >= (ups + phi) * d {
            1.0
        } else if o.abs() <= (ups - phi).abs() * d {
            ((ups - phi) / ups).max(0.0)
        } else if (o - phi * d).abs() <= ups * d {
            (ups - (phi - o / d)) / (2.0 * ups)
        } else {
            (ups - (phi + o / d)) / (2.0 * ups)
        }
    }

    #[test]
    fn q1_matches_case_formula() {
        for d in [3.0, 7.0, 20.0] {
            for o in -20..=20 {
                for ups in [0.05, 0.2, 0.5, 0.8] {
                    for phi in [0.1, 0.5, 0.7, 0.95] {
                        let o = o as f64;
                        if o.abs() > d {
                            continue;
                        }
                        assert!(close(q1(o, d, ups, phi), q1_cases(o, d, ups, phi), 1e-12), "{o} {d} {ups} {phi}");
                    }
                }
            }
        }
    }

    #[test]
    fn binomial_sums_to_one() {
        for n in [0, 1, 5, 64, 65, 200] {
            let s: f64 = binomial_pmf(n, 0.3).iter().sum();
            assert!(close(s, 1.0, 1e-9), "{n}");
        }
        let pmf = binomial_pmf(4, 0.5);
        assert!(close(pmf[2], 6.0 / 16.0, 1e-14));
    }

    #[test]
    fn noiseless_corrupted_neuron_always_moves() {
        for d1 in 1..30 {
            for phi in [0.1, 0.5, 0.99] {
                assert_eq!(q2(0, d1, 0.0, phi), 0.0);
            }
        }
        // one member per constraint: clean neurons never share a constraint
        let lone = ClusterStats::new(1_000_000, vec![1; 10]);
        let (p1, pc1) = analytic_p1(&lone, 0.0, 0.9, 0.0);
        assert!(p1 < 1e-5 && pc1 > 0.9999);
    }

    #[test]
    fn no_shared_constraints_reduces_to_p0() {
        // mean degree 0 relative to m forces b = 0
        let stats = ClusterStats { n: 10, m: 5, degrees: vec![4; 10], mean_degree: 0.0 };
        let q = q1_bar_degree(4, 0.0, 5, 0.8, 0.6, 0.0);
        assert!(close(q, 0.25, 1e-15));
        let (p1, _) = analytic_p1(&stats, 0.8, 0.6, 0.0);
        let q2_bar = q2(0, 4, 0.8, 0.6);
        assert!(close(p1, (q2_bar + 9.0 * 0.25) / 10.0, 1e-15));
    }

    #[test]
    fn de_special_case() {
        let lambda = DegreeDistribution::from_coefficients(&[(3, 1.0)]);
        let rho = DegreeDistribution::from_coefficients(&[(6, 1.0)]);
        // lambda(z) = z^2, rho(z) = z^5
        let z: f64 = 0.2;
        let expected = 0.4 * (1.0 - 0.8f64.powi(5)).powi(2);
        assert!(close(de_recursion_step(z, 0.4, &lambda, &rho, &[1.0, 0.0, 0.0]), expected, 1e-15));
        assert!(close(de_recursion_step(0.0, 0.4, &lambda, &rho, &[1.0]), 0.0, 1e-15));
    }

    #[test]
    fn zero_correction_gives_zero_threshold() {
        let lambda = DegreeDistribution::regular(3);
        let rho = DegreeDistribution::regular(6);
        assert_eq!(de_threshold(&lambda, &rho, &[0.0, 0.0], 1e-6, 1000).unwrap(), 0.0);
        let empty = DegreeDistribution::from_node_degrees([]);
        assert_eq!(
            de_threshold(&empty, &rho, &[1.0], 1e-6, 1000),
            Err(AnalysisError::DegenerateDistribution)
        );
    }

    #[test]
    fn trajectory_below_threshold_succeeds() {
        let lambda = DegreeDistribution::regular(3);
        let rho = DegreeDistribution::regular(6);
        let eps = de_threshold(&lambda, &rho, &[1.0], 1e-6, 2000).unwrap();
        assert!(eps > 0.3 && eps < 0.5, "{eps}");
        let ok = de_trajectory(eps - 0.01, &lambda, &rho, &[1.0], 1e-6, 10_000).unwrap();
        assert!(ok.success);
        assert!(ok.trajectory.windows(2).all(|w| w[1] <= w[0]));
        let bad = de_trajectory(eps + 0.01, &lambda, &rho, &[1.0], 1e-6, 10_000).unwrap();
        assert!(!bad.success);
    }
}
