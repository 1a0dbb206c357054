//! Domain types shared by the generator, recall engine and analysis.

use alloc::vec::Vec;

use crate::ModelError;

/// Relative slack when checking weights against the recorded minimum magnitude.
const ETA_SLACK: f64 = 1e-12;

/// One cluster: a bipartite graph between its member pattern neurons and its
/// constraint neurons.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    index: usize,
    members: Vec<usize>,
    m: usize,
    /// Row-major `m x n_l`.
    weights: Vec<f64>,
    degrees: Vec<u32>,
    signs: Vec<i8>,
}

impl Cluster {
    /// `weights` is row-major with `m` rows and `members.len()` columns.
    pub fn new(index: usize, members: Vec<usize>, m: usize, weights: Vec<f64>) -> Result<Self, ModelError> {
        let n_l = members.len();
        let bad = |reason| ModelError::InvalidCluster { cluster: index, reason };
        if m == 0 || n_l == 0 {
            return Err(bad("needs at least one constraint and one member"));
        }
        if weights.len() != m * n_l {
            return Err(bad("weight matrix has the wrong size"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(bad("non-finite weight"));
        }
        let mut seen = members.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(bad("duplicate member"));
        }
        for row in weights.chunks_exact(n_l) {
            if row.iter().all(|&w| w == 0.0) {
                return Err(bad("all-zero constraint row"));
            }
        }
        let mut degrees = alloc::vec![0u32; n_l];
        let signs: Vec<i8> = weights
            .iter()
            .map(|&w| if w > 0.0 { 1 } else if w < 0.0 { -1 } else { 0 })
            .collect();
        for row in signs.chunks_exact(n_l) {
            for (d, &s) in degrees.iter_mut().zip(row) {
                *d += (s != 0) as u32;
            }
        }
        if degrees.contains(&0) {
            return Err(bad("member without any constraint"));
        }
        Ok(Cluster { index, members, m, weights, degrees, signs })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// Global pattern-neuron ids, in local column order.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// Number of member pattern neurons `n_l`.
    pub fn n_members(&self) -> usize {
        self.members.len()
    }

    /// Number of constraint neurons `m_l`.
    pub fn n_constraints(&self) -> usize {
        self.m
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.members.len();
        &self.weights[i * n..(i + 1) * n]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.members.len() + j]
    }

    pub(crate) fn sign_row(&self, i: usize) -> &[i8] {
        let n = self.members.len();
        &self.signs[i * n..(i + 1) * n]
    }

    /// Nonzero count of every column.
    pub fn pattern_degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn min_abs_weight(&self) -> f64 {
        self.weights
            .iter()
            .filter(|w| **w != 0.0)
            .fold(f64::INFINITY, |a, w| a.min(w.abs()))
    }

    /// Weighted sums `W x` for a local state.
    pub fn syndrome(&self, local: &[u32]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.members.len())
            .map(|row| row.iter().zip(local).map(|(w, &x)| w * x as f64).sum())
            .collect()
    }

    /// Copies the member entries of a global state.
    pub fn gather(&self, global: &[u32], local: &mut Vec<u32>) {
        local.clear();
        local.extend(self.members.iter().map(|&g| global[g]));
    }
}

/// The full clustered memory.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    n: usize,
    q: u32,
    s: u32,
    eta: f64,
    clusters: Vec<Cluster>,
}

impl NetworkModel {
    pub fn new(n: usize, q: u32, s: u32, eta: f64, clusters: Vec<Cluster>) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::InvalidParameter("n must be positive"));
        }
        if q < 2 {
            return Err(ModelError::InvalidParameter("Q must be at least 2"));
        }
        if s == 0 {
            return Err(ModelError::InvalidParameter("S must be at least 1"));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(ModelError::InvalidParameter("eta must be positive"));
        }
        if clusters.is_empty() {
            return Err(ModelError::InvalidParameter("at least one cluster"));
        }
        let mut covered = alloc::vec![false; n];
        for c in &clusters {
            for &id in c.members() {
                if id >= n {
                    return Err(ModelError::MemberOutOfRange { id, n });
                }
                covered[id] = true;
            }
            let w = c.min_abs_weight();
            if w < eta * (1.0 - ETA_SLACK) {
                return Err(ModelError::WeightBelowEta { weight: w, eta });
            }
        }
        if let Some(j) = covered.iter().position(|c| !c) {
            return Err(ModelError::Uncovered(j));
        }
        Ok(NetworkModel { n, q, s, eta, clusters })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Alphabet size: states live in `0..q`.
    pub fn q(&self) -> u32 {
        self.q
    }

    /// External-error amplitude bound recorded with the model.
    pub fn s(&self) -> u32 {
        self.s
    }

    /// Minimum nonzero weight magnitude.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    /// Number of clusters `L`.
    pub fn l(&self) -> usize {
        self.clusters.len()
    }

    /// Largest `|W x|` entry over every cluster.
    pub fn max_syndrome(&self, state: &[u32]) -> f64 {
        let mut local = Vec::new();
        let mut worst: f64 = 0.0;
        for c in &self.clusters {
            c.gather(state, &mut local);
            for h in c.syndrome(&local) {
                worst = worst.max(h.abs());
            }
        }
        worst
    }

    /// Number of clusters each pattern neuron belongs to.
    pub fn membership_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.n];
        for c in &self.clusters {
            for &id in c.members() {
                counts[id] += 1;
            }
        }
        counts
    }
}

/// Law of the pattern-neuron internal noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PatternNoise {
    /// `u ~ Uniform[-upsilon, upsilon]`.
    #[default]
    Uniform,
    /// `u = +1` or `-1` each with probability `upsilon / 2`, else 0.
    Flip,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub upsilon: f64,
    pub nu: f64,
    pub epsilon: f64,
    pub s: u32,
    pub pattern_law: PatternNoise,
}

impl NoiseSpec {
    pub fn new(upsilon: f64, nu: f64, epsilon: f64, s: u32) -> Result<Self, ModelError> {
        let spec = NoiseSpec { upsilon, nu, epsilon, s, pattern_law: PatternNoise::Uniform };
        spec.validate()?;
        Ok(spec)
    }

    /// Internal noise only.
    pub fn internal(upsilon: f64, nu: f64) -> Self {
        NoiseSpec { upsilon, nu, epsilon: 0.0, s: 1, pattern_law: PatternNoise::Uniform }
    }

    pub fn noiseless() -> Self {
        Self::internal(0.0, 0.0)
    }

    pub fn with_law(mut self, law: PatternNoise) -> Self {
        self.pattern_law = law;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(0.0..1.0).contains(&self.upsilon) {
            return Err(ModelError::InvalidParameter("upsilon must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.nu) {
            return Err(ModelError::InvalidParameter("nu must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(ModelError::InvalidParameter("epsilon must lie in [0, 1]"));
        }
        if self.s == 0 {
            return Err(ModelError::InvalidParameter("S must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub psi: f64,
    pub phi: f64,
    pub eta: f64,
}

impl Thresholds {
    pub fn new(psi: f64, phi: f64, eta: f64) -> Result<Self, ModelError> {
        let t = Thresholds { psi, phi, eta };
        if !(psi > 0.0 && phi > 0.0) {
            return Err(ModelError::InvalidParameter("psi and phi must be positive"));
        }
        Ok(t)
    }

    /// Noise cannot cause a firing or an update on its own, and a single
    /// weight always clears the firing threshold.
    pub fn is_safe(&self, noise: &NoiseSpec) -> bool {
        self.psi > noise.nu && self.phi > noise.upsilon && self.eta >= self.psi
    }
}

/// Result of one recall trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RecallOutcome {
    pub final_state: Vec<u32>,
    pub symbol_errors: usize,
    pub pattern_error: bool,
    pub outer_iterations: usize,
    pub declared_failure: bool,
    pub per_cluster_converged: Vec<bool>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toy() -> Cluster {
        Cluster::new(0, vec![0, 1, 2], 2, vec![1.0, -1.0, 0.0, 0.0, 0.5, -0.5]).unwrap()
    }

    #[test]
    fn degrees_are_column_counts() {
        let c = toy();
        assert_eq!(c.pattern_degrees(), &[1, 2, 1]);
        assert_eq!(c.min_abs_weight(), 0.5);
        assert_eq!(c.syndrome(&[2, 2, 2]), vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_zero_rows_and_isolated_members() {
        assert!(Cluster::new(0, vec![0, 1], 2, vec![1.0, -1.0, 0.0, 0.0]).is_err());
        assert!(Cluster::new(0, vec![0, 1], 1, vec![1.0, 0.0]).is_err());
        assert!(Cluster::new(0, vec![0, 0], 1, vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn model_checks_coverage_and_eta() {
        assert!(NetworkModel::new(3, 4, 1, 0.5, vec![toy()]).is_ok());
        assert_eq!(NetworkModel::new(4, 4, 1, 0.5, vec![toy()]), Err(ModelError::Uncovered(3)));
        assert!(matches!(
            NetworkModel::new(3, 4, 1, 0.6, vec![toy()]),
            Err(ModelError::WeightBelowEta { .. })
        ));
    }

    #[test]
    fn noise_validation() {
        assert!(NoiseSpec::new(0.99, 0.0, 1.0, 1).is_ok());
        assert!(NoiseSpec::new(1.0, 0.0, 0.1, 1).is_err());
        assert!(NoiseSpec::new(0.0, 0.0, 1.1, 1).is_err());
        assert!(NoiseSpec::new(0.0, 0.0, 0.1, 0).is_err());
    }
}
