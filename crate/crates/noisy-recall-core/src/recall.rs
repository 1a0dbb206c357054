//! Noisy neural update rules, intra-cluster correction and sequential peeling.

use alloc::vec::Vec;
use rand::RngCore;

use crate::model::{Cluster, NetworkModel, NoiseSpec, PatternNoise, RecallOutcome, Thresholds};
use crate::rng;

/// Constraint neuron output for weighted input `h`.
///
/// `h = psi` fires `+1`; `h = -psi` stays silent.
#[inline]
pub fn constraint_update(h: f64, psi: f64) -> i8 {
    if h >= psi {
        1
    } else if h >= -psi {
        0
    } else {
        -1
    }
}

/// Pattern neuron update: step against the sign of `g` when `|g| >= phi`,
/// then saturate into `0..q`.
#[inline]
pub fn pattern_update(x: u32, g: f64, phi: f64, q: u32) -> u32 {
    let mut v = x as i64;
    if g.abs() >= phi {
        v -= if g > 0.0 { 1 } else { -1 };
    }
    v.clamp(0, q as i64 - 1) as u32
}

#[inline]
fn pattern_noise<R: RngCore + ?Sized>(rng: &mut R, noise: &NoiseSpec) -> f64 {
    if noise.upsilon == 0.0 {
        return 0.0;
    }
    match noise.pattern_law {
        PatternNoise::Uniform => rng::symmetric(rng, noise.upsilon),
        PatternNoise::Flip => {
            let u: f64 = rand::Rng::random(rng);
            if u < noise.upsilon / 2.0 {
                1.0
            } else if u < noise.upsilon {
                -1.0
            } else {
                0.0
            }
        }
    }
}

#[inline]
fn constraint_noise<R: RngCore + ?Sized>(rng: &mut R, nu: f64) -> f64 {
    if nu == 0.0 {
        0.0
    } else {
        rng::symmetric(rng, nu)
    }
}

#[inline]
fn weighted_sum(row: &[f64], x: &[u32]) -> f64 {
    row.iter().zip(x).map(|(w, &v)| w * v as f64).sum()
}

/// Scratch buffers reused across clusters.
#[derive(Default)]
struct Scratch {
    y: Vec<i8>,
    g: Vec<f64>,
    local: Vec<u32>,
    snapshot: Vec<u32>,
}

fn correct_in_place<R: RngCore + ?Sized>(
    cluster: &Cluster,
    x: &mut [u32],
    q: u32,
    t: &Thresholds,
    noise: &NoiseSpec,
    t_max: usize,
    rng: &mut R,
    y: &mut Vec<i8>,
    g: &mut Vec<f64>,
) -> bool {
    let m = cluster.n_constraints();
    let n = cluster.n_members();
    let deg = cluster.pattern_degrees();
    y.clear();
    y.resize(m, 0);
    g.clear();
    g.resize(n, 0.0);
    let noiseless = noise.nu == 0.0 && noise.upsilon == 0.0;
    for _ in 0..t_max {
        for (i, yi) in y.iter_mut().enumerate() {
            let h = weighted_sum(cluster.row(i), x) + constraint_noise(rng, noise.nu);
            *yi = constraint_update(h, t.psi);
        }
        g.iter_mut().for_each(|v| *v = 0.0);
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0 {
                continue;
            }
            let yi = yi as f64;
            for (gj, &s) in g.iter_mut().zip(cluster.sign_row(i)) {
                *gj += s as f64 * yi;
            }
        }
        let mut moved = false;
        for j in 0..n {
            let gj = g[j] / deg[j] as f64 + pattern_noise(rng, noise);
            let next = pattern_update(x[j], gj, t.phi, q);
            moved |= next != x[j];
            x[j] = next;
        }
        // without noise every later round would repeat this one
        if !moved && noiseless {
            break;
        }
    }
    (0..m).all(|i| weighted_sum(cluster.row(i), x).abs() <= t.psi)
}

/// Runs `t_max` synchronous rounds of intra-cluster correction on the local
/// state of `cluster`. Returns whether a final noiseless check finds every
/// `|h_i| <= psi`.
pub fn intra_cluster_correct<R: RngCore + ?Sized>(
    cluster: &Cluster,
    local: &mut [u32],
    q: u32,
    thresholds: &Thresholds,
    noise: &NoiseSpec,
    t_max: usize,
    rng: &mut R,
) -> bool {
    let (mut y, mut g) = (Vec::new(), Vec::new());
    correct_in_place(cluster, local, q, thresholds, noise, t_max, rng, &mut y, &mut g)
}

/// One noisy forward pass; true iff every constraint neuron stays silent.
pub fn cluster_satisfied<R: RngCore + ?Sized>(
    cluster: &Cluster,
    local: &[u32],
    thresholds: &Thresholds,
    noise: &NoiseSpec,
    rng: &mut R,
) -> bool {
    (0..cluster.n_constraints()).all(|i| {
        let h = weighted_sum(cluster.row(i), local) + constraint_noise(rng, noise.nu);
        constraint_update(h, thresholds.psi) == 0
    })
}

/// Iteration budgets for [`sequential_peeling`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeelingLimits {
    /// Rounds of intra-cluster correction per visit.
    pub t_max: usize,
    /// Outer rounds over all clusters.
    pub t_outer: usize,
}

impl Default for PeelingLimits {
    fn default() -> Self {
        PeelingLimits { t_max: 10, t_outer: 40 }
    }
}

/// Round-robin peeling over all clusters with state reversion.
///
/// Every outer round visits the clusters in order. An unsatisfied cluster is
/// snapshotted and corrected; the correction is kept only if the cluster is
/// satisfied afterwards. Recall succeeds after a round in which every cluster
/// was found satisfied and no state changed. `truth` is only used to score
/// the outcome.
pub fn sequential_peeling<R: RngCore + ?Sized>(
    model: &NetworkModel,
    truth: &[u32],
    initial: &[u32],
    thresholds: &Thresholds,
    noise: &NoiseSpec,
    limits: PeelingLimits,
    rng: &mut R,
) -> RecallOutcome {
    let mut state = initial.to_vec();
    let q = model.q();
    let mut sc = Scratch::default();
    let mut converged = alloc::vec![false; model.l()];
    let mut rounds = 0;
    let mut success = false;
    while rounds < limits.t_outer {
        rounds += 1;
        let mut changed = false;
        for (l, cluster) in model.clusters().iter().enumerate() {
            cluster.gather(&state, &mut sc.local);
            if cluster_satisfied(cluster, &sc.local, thresholds, noise, rng) {
                converged[l] = true;
                continue;
            }
            sc.snapshot.clear();
            sc.snapshot.extend_from_slice(&sc.local);
            correct_in_place(
                cluster,
                &mut sc.local,
                q,
                thresholds,
                noise,
                limits.t_max,
                rng,
                &mut sc.y,
                &mut sc.g,
            );
            if cluster_satisfied(cluster, &sc.local, thresholds, noise, rng) {
                converged[l] = true;
                if sc.local != sc.snapshot {
                    changed = true;
                    for (&gid, &v) in cluster.members().iter().zip(&sc.local) {
                        state[gid] = v;
                    }
                }
            } else {
                converged[l] = false;
            }
        }
        if !changed && converged.iter().all(|&c| c) {
            success = true;
            break;
        }
    }
    let symbol_errors = state.iter().zip(truth).filter(|(a, b)| a != b).count();
    RecallOutcome {
        final_state: state,
        symbol_errors,
        pattern_error: symbol_errors > 0,
        outer_iterations: rounds,
        declared_failure: !success,
        per_cluster_converged: converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn constraint_cases() {
        assert_eq!(constraint_update(0.7, 0.5), 1);
        assert_eq!(constraint_update(0.3, 0.5), 0);
        assert_eq!(constraint_update(-0.6, 0.5), -1);
        assert_eq!(constraint_update(0.5, 0.5), 1);
        assert_eq!(constraint_update(-0.5, 0.5), 0);
    }

    #[test]
    fn pattern_cases() {
        assert_eq!(pattern_update(3, 0.9, 0.8, 4), 2);
        assert_eq!(pattern_update(0, 0.9, 0.8, 4), 0);
        assert_eq!(pattern_update(2, 0.5, 0.8, 4), 2);
        assert_eq!(pattern_update(3, -0.9, 0.8, 4), 3);
        assert_eq!(pattern_update(1, -0.8, 0.8, 4), 2);
    }

    fn toy_cluster() -> Cluster {
        // 4 members, patterns satisfy x0 - x1 = x2 - x3 = 0 and x0 - x2 = 0
        Cluster::new(
            0,
            vec![0, 1, 2, 3],
            3,
            vec![
                1.0, -1.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, -1.0, //
                1.0, 1.0, -1.0, -1.0,
            ],
        )
        .unwrap()
    }

    #[test]
    fn clean_state_is_fixed_point() {
        let c = toy_cluster();
        let t = Thresholds::new(0.5, 0.8, 1.0).unwrap();
        let mut rng = rng::from_seed(1);
        let noise = NoiseSpec::internal(0.7, 0.4);
        let mut x = vec![2, 2, 2, 2];
        assert!(intra_cluster_correct(&c, &mut x, 5, &t, &noise, 10, &mut rng));
        assert_eq!(x, vec![2, 2, 2, 2]);
        assert!(cluster_satisfied(&c, &x, &t, &noise, &mut rng));
    }

    #[test]
    fn single_error_corrected_on_toy_cluster() {
        let c = toy_cluster();
        let t = Thresholds::new(0.5, 0.9, 1.0).unwrap();
        let noise = NoiseSpec::noiseless();
        for pos in 0..4 {
            for sign in [-1i64, 1] {
                let mut x = vec![2u32; 4];
                x[pos] = (2 + sign) as u32;
                let mut rng = rng::from_seed(0);
                assert!(intra_cluster_correct(&c, &mut x, 5, &t, &noise, 2, &mut rng));
                assert_eq!(x, vec![2, 2, 2, 2], "pos {pos} sign {sign}");
            }
        }
    }
}
