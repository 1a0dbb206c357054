//! Synthetic clustered networks with a known pattern subspace.
//!
//! Patterns are built from a latent graph on `k = floor(r n)` vertices with
//! one edge per pattern neuron: `x_e = offset + c_a + c_b` for the endpoints
//! `a, b` of edge `e` and binary coefficients `c`. A cluster owns a vertex
//! subset; its members are the edges of the min-degree core of the induced
//! subgraph, and its constraint rows span the integer null space of the
//! core's unsigned incidence matrix, mixed by a random full-rank matrix.
//! Every pattern therefore has a zero syndrome in every cluster, and the
//! `2^k` coefficient vectors give `2^k` distinct patterns.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use rand::RngCore;

use crate::degree::DegreeDistribution;
use crate::linalg;
use crate::model::{Cluster, NetworkModel, NoiseSpec};
use crate::rng;
use crate::GeneratorError;

/// Parameters of the synthetic network.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    /// Pattern neurons.
    pub n: usize,
    /// Clusters.
    pub l: usize,
    /// Target mean members per cluster.
    pub mean_cluster_size: f64,
    /// Target mean constraint neurons per cluster.
    pub mean_constraints: f64,
    /// Global pattern-space dimension ratio, `k = floor(r n)`.
    pub r: f64,
    /// Alphabet size.
    pub q: u32,
    /// External-error amplitude recorded with the model.
    pub s: u32,
    /// Probability that a mixing coefficient is nonzero; lower values give
    /// sparser dual vectors.
    pub dual_density: f64,
    /// Minimum vertex degree kept inside a cluster.
    pub min_core_degree: usize,
    /// Smallest nonzero weight magnitude after rescaling.
    pub min_weight: f64,
    pub max_repair_rounds: usize,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            n: 400,
            l: 50,
            mean_cluster_size: 40.0,
            mean_constraints: 20.0,
            r: 0.15,
            q: 16,
            s: 1,
            dual_density: 1.0,
            min_core_degree: 3,
            min_weight: 0.5,
            max_repair_rounds: 500,
            seed: 1,
        }
    }
}

impl GeneratorSpec {
    /// Latent vertex count `k`.
    pub fn k(&self) -> usize {
        libm::floor(self.r * self.n as f64 + 1e-9) as usize
    }

    /// Latent vertices per cluster.
    pub fn vertices_per_cluster(&self) -> usize {
        let target = libm::round(self.mean_cluster_size - self.mean_constraints).max(1.0) as usize;
        target.min(self.k())
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        use GeneratorError::InvalidSpec as E;
        if self.n == 0 || self.l == 0 {
            return Err(E("n and L must be positive"));
        }
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(E("r must lie in (0, 1)"));
        }
        if !(self.mean_cluster_size > 0.0 && self.mean_constraints > 0.0) {
            return Err(E("mean cluster size and constraint count must be positive"));
        }
        if self.mean_constraints >= self.mean_cluster_size {
            return Err(E("clusters need fewer constraints than members"));
        }
        if self.mean_cluster_size * (self.l as f64) < self.n as f64 {
            return Err(E("mean cluster size times L must cover n"));
        }
        if !(self.dual_density > 0.0 && self.dual_density <= 1.0) {
            return Err(E("dual density must lie in (0, 1]"));
        }
        if !(self.min_weight > 0.0 && self.min_weight.is_finite()) {
            return Err(E("min weight must be positive"));
        }
        if self.min_core_degree < 2 {
            return Err(E("min core degree must be at least 2"));
        }
        if self.s == 0 {
            return Err(E("S must be at least 1"));
        }
        Ok(())
    }
}

/// Generator of the admissible pattern set.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternBasis {
    k: usize,
    offset: u32,
    edges: Vec<(usize, usize)>,
}

impl PatternBasis {
    pub fn new(k: usize, offset: u32, edges: Vec<(usize, usize)>) -> Self {
        PatternBasis { k, offset, edges }
    }

    /// Dimension of the pattern space.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.edges.len()
    }

    /// Constant added to every entry.
    pub fn offset(&self) -> u32 {
        self.offset
    }

    /// Endpoints of the latent edge behind each pattern neuron.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Coefficient alphabet size (coefficients are 0 or 1).
    pub fn alphabet(&self) -> u32 {
        2
    }

    /// Basis vector `f`: the incidence vector of latent vertex `f`.
    pub fn vector(&self, f: usize) -> Vec<i64> {
        self.edges.iter().map(|&(a, b)| (a == f) as i64 + (b == f) as i64).collect()
    }

    /// Exact rank of the basis vectors.
    pub fn rank(&self) -> usize {
        let rows: Vec<Vec<i64>> = (0..self.k).map(|f| self.vector(f)).collect();
        linalg::rank(&rows, self.n()).unwrap_or_else(|_| linalg::rank_mod_p(&rows, self.n()))
    }

    /// Pattern for a binary coefficient vector.
    pub fn pattern(&self, coeffs: &[bool]) -> Vec<u32> {
        self.edges
            .iter()
            .map(|&(a, b)| self.offset + coeffs[a] as u32 + coeffs[b] as u32)
            .collect()
    }

    /// Uniformly random stored pattern.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Vec<u32> {
        let coeffs: Vec<bool> = (0..self.k).map(|_| rng::coin(rng, 0.5)).collect();
        self.pattern(&coeffs)
    }
}

/// Clusters contracted to single nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractedGraph {
    l: usize,
    n: usize,
    adjacency: Vec<bool>,
    pub lambda: DegreeDistribution,
    pub rho: DegreeDistribution,
}

impl ContractedGraph {
    /// Whether pattern neuron `j` belongs to cluster `l`.
    pub fn adjacent(&self, l: usize, j: usize) -> bool {
        self.adjacency[l * self.n + j]
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.adjacency.chunks_exact(self.n).map(|r| r.iter().filter(|&&b| b).count()).collect()
    }

    pub fn column_sums(&self) -> Vec<usize> {
        (0..self.n).map(|j| (0..self.l).filter(|&l| self.adjacent(l, j)).count()).collect()
    }
}

/// Contracted graph and edge-perspective degree distributions of a model.
pub fn contract_and_degree_distributions(model: &NetworkModel) -> ContractedGraph {
    let (l, n) = (model.l(), model.n());
    let mut adjacency = vec![false; l * n];
    for (i, c) in model.clusters().iter().enumerate() {
        for &j in c.members() {
            adjacency[i * n + j] = true;
        }
    }
    let g = ContractedGraph {
        l,
        n,
        adjacency,
        lambda: DegreeDistribution::from_node_degrees([]),
        rho: DegreeDistribution::from_node_degrees([]),
    };
    let lambda = DegreeDistribution::from_node_degrees(g.column_sums());
    let rho = DegreeDistribution::from_node_degrees(g.row_sums());
    ContractedGraph { lambda, rho, ..g }
}

/// i.i.d. external errors: 0 with probability `1 - epsilon`, otherwise a
/// uniformly chosen nonzero value in `-S..=S`.
pub fn sample_external_error<R: RngCore + ?Sized>(n: usize, noise: &NoiseSpec, rng: &mut R) -> Vec<i32> {
    let s = noise.s.max(1) as usize;
    (0..n)
        .map(|_| {
            if !rng::coin(rng, noise.epsilon) {
                return 0;
            }
            let v = rng::index(rng, 2 * s) as i32;
            if v < s as i32 {
                v - s as i32
            } else {
                v - s as i32 + 1
            }
        })
        .collect()
}

/// `pattern + error`, saturated into `0..q`.
pub fn corrupt(pattern: &[u32], error: &[i32], q: u32) -> Vec<u32> {
    pattern
        .iter()
        .zip(error)
        .map(|(&x, &z)| (x as i64 + z as i64).clamp(0, q as i64 - 1) as u32)
        .collect()
}

/// Per-cluster product of the repair loop.
struct Local {
    /// Global edge ids of the members, ascending.
    members: Vec<usize>,
    /// Integer null-space basis restricted to `members`.
    basis: Vec<Vec<i64>>,
}

fn peel_core(edges: &[(usize, usize)], ids: &mut Vec<usize>, min_degree: usize, k: usize) {
    let mut deg = vec![0usize; k];
    loop {
        deg.iter_mut().for_each(|d| *d = 0);
        for &e in ids.iter() {
            deg[edges[e].0] += 1;
            deg[edges[e].1] += 1;
        }
        let before = ids.len();
        ids.retain(|&e| deg[edges[e].0] >= min_degree && deg[edges[e].1] >= min_degree);
        if ids.len() == before {
            return;
        }
    }
}

fn parallel_columns(basis: &[Vec<i64>], ncols: usize) -> bool {
    let col = |j: usize| -> Vec<i64> { basis.iter().map(|r| r[j]).collect() };
    let cols: Vec<Vec<i64>> = (0..ncols).map(col).collect();
    for a in 0..ncols {
        for b in a + 1..ncols {
            let (x, y) = (&cols[a], &cols[b]);
            // x and y parallel iff x_i y_j == x_j y_i for all i, j
            let pivot = x.iter().position(|&v| v != 0);
            let Some(p) = pivot else { continue };
            if y[p] == 0 {
                continue;
            }
            if x.iter().zip(y).all(|(&xi, &yi)| xi * y[p] == yi * x[p]) {
                return true;
            }
        }
    }
    false
}

fn local_structure(
    edges: &[(usize, usize)],
    in_cluster: &[bool],
    min_degree: usize,
    k: usize,
) -> Result<Option<Local>, GeneratorError> {
    let mut ids: Vec<usize> = (0..edges.len())
        .filter(|&e| in_cluster[edges[e].0] && in_cluster[edges[e].1])
        .collect();
    peel_core(edges, &mut ids, min_degree, k);
    if ids.is_empty() {
        return Ok(None);
    }
    let mut verts: Vec<usize> = ids.iter().flat_map(|&e| [edges[e].0, edges[e].1]).collect();
    verts.sort_unstable();
    verts.dedup();
    let inc: Vec<Vec<i64>> = verts
        .iter()
        .map(|&v| ids.iter().map(|&e| (edges[e].0 == v) as i64 + (edges[e].1 == v) as i64).collect())
        .collect();
    let basis = linalg::nullspace(&inc, ids.len())
        .map_err(|_| GeneratorError::Infeasible("overflow in exact null-space computation"))?;
    if basis.is_empty() {
        return Ok(None);
    }
    // members whose column vanishes in every constraint are dropped
    let keep: Vec<usize> = (0..ids.len()).filter(|&j| basis.iter().any(|r| r[j] != 0)).collect();
    let members: Vec<usize> = keep.iter().map(|&j| ids[j]).collect();
    let basis: Vec<Vec<i64>> = basis.iter().map(|r| keep.iter().map(|&j| r[j]).collect()).collect();
    if parallel_columns(&basis, members.len()) {
        return Ok(None);
    }
    Ok(Some(Local { members, basis }))
}

fn random_subset<R: RngCore + ?Sized>(rng: &mut R, k: usize, u: usize) -> Vec<bool> {
    let mut mask = vec![false; k];
    for v in rng::sample_distinct(rng, k, u) {
        mask[v] = true;
    }
    mask
}

fn covered_pairs(sets: &[Vec<bool>]) -> Vec<(usize, usize)> {
    let mut pairs = BTreeSet::new();
    for set in sets {
        let verts: Vec<usize> = (0..set.len()).filter(|&v| set[v]).collect();
        for (i, &a) in verts.iter().enumerate() {
            for &b in &verts[i + 1..] {
                pairs.insert((a, b));
            }
        }
    }
    pairs.into_iter().collect()
}

fn mixing_matrix<R: RngCore + ?Sized>(rng: &mut R, m: usize, density: f64) -> Result<Vec<Vec<i64>>, GeneratorError> {
    // entries in {-1, -0.5, 0.5, 1}, stored in half units
    const VALUES: [i64; 4] = [-2, -1, 1, 2];
    for _ in 0..1000 {
        let mix: Vec<Vec<i64>> = (0..m)
            .map(|_| {
                (0..m)
                    .map(|_| if rng::coin(rng, density) { VALUES[rng::index(rng, 4)] } else { 0 })
                    .collect()
            })
            .collect();
        if linalg::rank_mod_p(&mix, m) == m {
            return Ok(mix);
        }
    }
    Err(GeneratorError::Infeasible("no full-rank mixing matrix at this dual density"))
}

/// Mixing matrices tried per cluster before settling for the least dominated.
const MIXING_ATTEMPTS: usize = 200;

/// Counts columns `e` whose single error also drives some other column `j`
/// to a full-strength update: every row touching `j` touches `e`, with one
/// common sign ratio.
fn dominated_columns(w: &[i64], m: usize, nl: usize) -> usize {
    let dominates = |e: usize, j: usize| {
        let mut ratio = 0i64;
        for i in 0..m {
            let (wj, we) = (w[i * nl + j], w[i * nl + e]);
            if wj == 0 {
                continue;
            }
            if we == 0 {
                return false;
            }
            let r = wj.signum() * we.signum();
            if ratio != 0 && ratio != r {
                return false;
            }
            ratio = r;
        }
        true
    };
    (0..nl).filter(|&e| (0..nl).any(|j| j != e && dominates(e, j))).count()
}

/// Builds a model whose clusters all annihilate every pattern of the returned
/// basis.
pub fn construct_subspace_model(spec: &GeneratorSpec) -> Result<(NetworkModel, PatternBasis), GeneratorError> {
    spec.validate()?;
    let k = spec.k();
    let u = spec.vertices_per_cluster();
    let n = spec.n;
    if k < 3 || u <= spec.min_core_degree {
        return Err(GeneratorError::Infeasible("too few latent vertices per cluster for the core degree"));
    }
    if spec.q < 3 {
        return Err(GeneratorError::Infeasible("Q must be at least 3 to hold the pattern alphabet"));
    }
    let mut rng = rng::from_seed(spec.seed);
    let mut sets: Vec<Vec<bool>> = (0..spec.l).map(|_| random_subset(&mut rng, k, u)).collect();
    let mut pairs = covered_pairs(&sets);
    if pairs.len() < n {
        return Err(GeneratorError::Infeasible("clusters cover fewer vertex pairs than pattern neurons"));
    }
    let mut edges: Vec<(usize, usize)> = rng::sample_distinct(&mut rng, pairs.len(), n)
        .into_iter()
        .map(|i| pairs[i])
        .collect();
    let mut locals: Vec<Option<Local>> = Vec::new();
    let mut done = false;
    for _ in 0..spec.max_repair_rounds {
        locals = sets
            .iter()
            .map(|set| local_structure(&edges, set, spec.min_core_degree, k))
            .collect::<Result<_, _>>()?;
        let mut resampled = false;
        for (set, local) in sets.iter_mut().zip(&locals) {
            if local.is_none() {
                *set = random_subset(&mut rng, k, u);
                resampled = true;
            }
        }
        if resampled {
            pairs = covered_pairs(&sets);
        }
        let mut covered = vec![false; n];
        for local in locals.iter().flatten() {
            for &e in &local.members {
                covered[e] = true;
            }
        }
        let mut missing: Vec<usize> = (0..n).filter(|&e| !covered[e]).collect();
        if missing.is_empty() && !resampled {
            let basis = PatternBasis::new(k, 0, edges.clone());
            let rows: Vec<Vec<i64>> = (0..k).map(|f| basis.vector(f)).collect();
            if linalg::rank_mod_p(&rows, n) == k {
                done = true;
                break;
            }
            if (0..k).any(|v| sets.iter().all(|set| !set[v])) {
                // no cluster can ever hold this vertex
                let i = rng::index(&mut rng, spec.l);
                sets[i] = random_subset(&mut rng, k, u);
                pairs = covered_pairs(&sets);
                continue;
            }
            let mut degree = vec![0usize; k];
            for &(a, b) in &edges {
                degree[a] += 1;
                degree[b] += 1;
            }
            if let Some(v) = (0..k).find(|&v| degree[v] == 0) {
                // a lone edge would be peeled off again, so seed a whole star
                let homes: Vec<usize> = (0..spec.l).filter(|&i| sets[i][v]).collect();
                let home = &sets[homes[rng::index(&mut rng, homes.len())]];
                let mut others: Vec<usize> = (0..k).filter(|&w| w != v && home[w]).collect();
                for _ in 0..spec.min_core_degree.min(others.len()) {
                    let w = others.swap_remove(rng::index(&mut rng, others.len()));
                    edges[rng::index(&mut rng, n)] = (v.min(w), v.max(w));
                }
                continue;
            }
            // bipartite: move one neuron to a fresh pair
            missing.push(rng::index(&mut rng, n));
        }
        let mut present: BTreeSet<(usize, usize)> = edges.iter().copied().collect();
        for e in missing {
            if pairs.len() <= present.len() {
                return Err(GeneratorError::Infeasible("not enough vertex pairs to place every neuron"));
            }
            present.remove(&edges[e]);
            loop {
                let p = pairs[rng::index(&mut rng, pairs.len())];
                if present.insert(p) {
                    edges[e] = p;
                    break;
                }
            }
        }
    }
    if !done {
        return Err(GeneratorError::Infeasible("repair loop did not reach full pattern rank with every neuron covered"));
    }
    let mut clusters = Vec::with_capacity(spec.l);
    let mut integer_weights = Vec::with_capacity(spec.l);
    for local in locals.into_iter().flatten() {
        let m = local.basis.len();
        let nl = local.members.len();
        let mut best: Option<(usize, Vec<i64>)> = None;
        for _ in 0..MIXING_ATTEMPTS {
            let mix = mixing_matrix(&mut rng, m, spec.dual_density)?;
            let mut w = vec![0i64; m * nl];
            for i in 0..m {
                for (t, &c) in mix[i].iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    for j in 0..nl {
                        w[i * nl + j] += c * local.basis[t][j];
                    }
                }
            }
            let bad = dominated_columns(&w, m, nl);
            if best.as_ref().is_none_or(|(b, _)| bad < *b) {
                best = Some((bad, w));
            }
            if bad == 0 {
                break;
            }
        }
        let (_, w) = best.expect("at least one mixing attempt");
        integer_weights.push((local.members, m, w));
    }
    let min_int = integer_weights
        .iter()
        .flat_map(|(_, _, w)| w.iter())
        .filter(|&&v| v != 0)
        .map(|v| v.unsigned_abs())
        .min()
        .ok_or(GeneratorError::Infeasible("no nonzero weights"))?;
    for (index, (members, m, w)) in integer_weights.into_iter().enumerate() {
        let weights: Vec<f64> = w.iter().map(|&v| v as f64 / min_int as f64 * spec.min_weight).collect();
        clusters.push(Cluster::new(index, members, m, weights)?);
    }
    let eta = clusters.iter().map(|c| c.min_abs_weight()).fold(f64::INFINITY, f64::min);
    let model = NetworkModel::new(n, spec.q, spec.s, eta, clusters)?;
    let offset = (spec.q - 3) / 2;
    Ok((model, PatternBasis::new(k, offset, edges)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_values_match_amplitude() {
        let mut rng = rng::from_seed(4);
        let noise = NoiseSpec::new(0.0, 0.0, 1.0, 3).unwrap();
        let z = sample_external_error(5000, &noise, &mut rng);
        assert!(z.iter().all(|&v| v != 0 && (-3..=3).contains(&v)));
        let noise = NoiseSpec::new(0.0, 0.0, 1.0, 1).unwrap();
        let z = sample_external_error(5000, &noise, &mut rng);
        assert!(z.iter().all(|&v| v == 1 || v == -1));
    }

    #[test]
    fn corruption_saturates() {
        assert_eq!(corrupt(&[0, 3, 2], &[-1, 1, 1], 4), vec![0, 3, 3]);
    }

    #[test]
    fn core_peeling_drops_pendant_edges() {
        // triangle 0-1-2 plus pendant 2-3
        let edges = [(0, 1), (1, 2), (0, 2), (2, 3)];
        let mut ids = vec![0, 1, 2, 3];
        peel_core(&edges, &mut ids, 2, 4);
        assert_eq!(ids, vec![0, 1, 2]);
    }
}
