use alloc::vec;
use alloc::vec::Vec;

/// Edge-perspective degree distribution.
///
/// `coeff(j)` is the fraction of edges attached to nodes of degree `j`; the
/// polynomial is `f(z) = sum_j coeff(j) z^(j-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    coeffs: Vec<f64>,
}

impl DegreeDistribution {
    /// Build from the node degrees of one side of a bipartite graph.
    pub fn from_node_degrees(degrees: impl IntoIterator<Item = usize>) -> Self {
        let mut counts: Vec<f64> = Vec::new();
        let mut edges = 0.0;
        for d in degrees {
            if d == 0 {
                continue;
            }
            if counts.len() <= d {
                counts.resize(d + 1, 0.0);
            }
            counts[d] += d as f64;
            edges += d as f64;
        }
        if edges > 0.0 {
            for c in &mut counts {
                *c /= edges;
            }
        }
        DegreeDistribution { coeffs: counts }
    }

    /// Build from explicit coefficients indexed by degree. Index 0 is ignored.
    pub fn from_coefficients(coeffs: &[(usize, f64)]) -> Self {
        let max = coeffs.iter().map(|&(d, _)| d).max().unwrap_or(0);
        let mut c = vec![0.0; max + 1];
        for &(d, v) in coeffs {
            if d > 0 {
                c[d] += v;
            }
        }
        DegreeDistribution { coeffs: c }
    }

    /// Regular distribution: every edge sees degree `d`.
    pub fn regular(d: usize) -> Self {
        Self::from_coefficients(&[(d, 1.0)])
    }

    pub fn coeff(&self, degree: usize) -> f64 {
        self.coeffs.get(degree).copied().unwrap_or(0.0)
    }

    /// `(degree, coefficient)` for every nonzero coefficient.
    pub fn terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|&(d, &c)| d > 0 && c != 0.0)
            .map(|(d, &c)| (d, c))
    }

    pub fn max_degree(&self) -> usize {
        self.terms().map(|(d, _)| d).max().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.terms().next().is_none()
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.derivative(0, z)
    }

    /// `k`-th derivative at `z`. Horner form over the exponents `j - 1 - k`.
    pub fn derivative(&self, k: usize, z: f64) -> f64 {
        let top = self.coeffs.len();
        if top <= k + 1 {
            return 0.0;
        }
        let mut acc = 0.0;
        for j in (k + 1..top).rev() {
            let c = self.coeffs[j];
            // (j-1)! / (j-1-k)!
            let mut f = 1.0;
            for t in 0..k {
                f *= (j - 1 - t) as f64;
            }
            acc = acc * z + c * f;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn edge_perspective_weights_by_degree() {
        // 2 nodes of degree 3 and 3 nodes of degree 2: six edges each
        let d = DegreeDistribution::from_node_degrees([3, 3, 2, 2, 2]);
        assert!(close(d.coeff(2), 0.5, 1e-15));
        assert!(close(d.coeff(3), 0.5, 1e-15));
        assert!(close(d.eval(0.4), 0.5 * 0.4 + 0.5 * 0.16, 1e-15));
    }

    #[test]
    fn derivatives_vanish_above_max_degree() {
        let d = DegreeDistribution::regular(4);
        assert!(close(d.eval(1.0), 1.0, 1e-15));
        assert!(close(d.derivative(1, 0.5), 3.0 * 0.25, 1e-15));
        assert!(close(d.derivative(3, 0.3), 6.0, 1e-15));
        assert_eq!(d.derivative(4, 0.3), 0.0);
        assert_eq!(d.derivative(7, 0.3), 0.0);
    }

    #[test]
    fn single_degree_one() {
        let d = DegreeDistribution::from_node_degrees([1, 1, 1]);
        assert_eq!(d.eval(0.0), 1.0);
        assert_eq!(d.eval(0.7), 1.0);
    }
}
