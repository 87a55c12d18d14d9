//! One-dimensional Gauss–Legendre nodal basis and its tensor-product use.

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 8;

/// Lagrange basis on the `r + 1` Gauss–Legendre points of [-1, 1].
///
/// The same points serve as quadrature nodes (collocation), so the mass
/// matrix of the tensor-product basis is diagonal.
#[derive(Debug, Clone)]
pub struct TensorBasis {
    degree: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    bary: Vec<f64>,
    /// Row-major `diff[i * n + j] = l_j'(xi_i)`.
    diff: Vec<f64>,
    /// `weighted_diff[a * n + i] = w_a l_i'(xi_a)`.
    weighted_diff: Vec<f64>,
    trace_left: Vec<f64>,
    trace_right: Vec<f64>,
}

/// Builds the Gauss–Legendre basis of polynomial degree `r`.
pub fn gauss_legendre(r: usize) -> Result<TensorBasis> {
    TensorBasis::new(r)
}

impl TensorBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::UnsupportedDegree(degree));
        }
        let n = degree + 1;
        let (nodes, weights) = legendre_rule(n);

        let mut bary = vec![1.0; n];
        for j in 0..n {
            for k in 0..n {
                if k != j {
                    bary[j] /= nodes[j] - nodes[k];
                }
            }
        }

        let mut diff = vec![0.0; n * n];
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                if i != j {
                    let d = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                    diff[i * n + j] = d;
                    row_sum += d;
                }
            }
            diff[i * n + i] = -row_sum;
        }

        let mut weighted_diff = vec![0.0; n * n];
        for a in 0..n {
            for i in 0..n {
                weighted_diff[a * n + i] = weights[a] * diff[a * n + i];
            }
        }

        let mut basis = TensorBasis {
            degree,
            nodes,
            weights,
            bary,
            diff,
            weighted_diff,
            trace_left: Vec::new(),
            trace_right: Vec::new(),
        };
        basis.trace_left = basis.lagrange_values(-1.0);
        basis.trace_right = basis.lagrange_values(1.0);
        Ok(basis)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of 1D nodes, `r + 1`.
    pub fn n1(&self) -> usize {
        self.degree + 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `D1[i][j] = l_j'(xi_i)`.
    pub fn diff(&self, i: usize, j: usize) -> f64 {
        self.diff[i * self.n1() + j]
    }

    pub fn diff_matrix(&self) -> &[f64] {
        &self.diff
    }

    pub fn weighted_diff(&self) -> &[f64] {
        &self.weighted_diff
    }

    /// `l_j(-1)` for all j.
    pub fn trace_left(&self) -> &[f64] {
        &self.trace_left
    }

    /// `l_j(+1)` for all j.
    pub fn trace_right(&self) -> &[f64] {
        &self.trace_right
    }

    /// Values `l_j(x)` of all Lagrange polynomials (barycentric form).
    ///
    /// At a node the result is the exact unit vector.
    pub fn lagrange_values(&self, x: f64) -> Vec<f64> {
        let n = self.n1();
        let mut out = vec![0.0; n];
        if let Some(k) = self.nodes.iter().position(|&xi| xi == x) {
            out[k] = 1.0;
            return out;
        }
        let mut denom = 0.0;
        for j in 0..n {
            let t = self.bary[j] / (x - self.nodes[j]);
            out[j] = t;
            denom += t;
        }
        for v in &mut out {
            *v /= denom;
        }
        out
    }

    /// Applies the differentiation matrix to nodal values along one line.
    pub fn differentiate(&self, values: &[f64]) -> Vec<f64> {
        let n = self.n1();
        (0..n)
            .map(|i| (0..n).map(|j| self.diff[i * n + j] * values[j]).sum())
            .collect()
    }
}

/// Gauss–Legendre nodes (increasing, exactly symmetric) and weights.
fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess for the i-th largest root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}
