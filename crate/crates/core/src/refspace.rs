//! Reference-square machinery: Gauss–Lobatto–Legendre nodes, Gauss–Legendre
//! quadrature, the nodal tensor-product `Q_p` basis and its interpolant.
//!
//! Everything lives on `[0,1]`. Tensor node `(i, j)` (i along ξ, j along η)
//! has the lexicographic index `i + (p + 1) j`.

use crate::error::{Error, Result};

/// Legendre polynomial `P_n(t)` and its derivative on `[-1,1]`.
fn legendre(n: usize, t: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, t);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let dp = if (1.0 - t * t).abs() > 1e-300 {
        n * (p0 - t * p1) / (1.0 - t * t)
    } else {
        // endpoint value P_n'(±1) = (±1)^{n+1} n(n+1)/2
        t.powi(n as i32 + 1) * n * (n + 1.0) / 2.0
    };
    (p1, dp)
}

/// Gauss–Lobatto–Legendre nodes of one degree, ascending in `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    degree: usize,
    nodes: Vec<f64>,
}

impl NodeSet {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

/// `gll_nodes`: the endpoints and the roots of `P_p'` mapped to `[0,1]`.
///
/// Interior roots are found by Newton on `P_p'` from Chebyshev–Gauss–Lobatto
/// seeds; only the lower half is computed and the rest mirrored, so the set
/// is exactly symmetric about ½.
pub fn gll_nodes(p: usize) -> Result<NodeSet> {
    if p < 1 {
        return Err(Error::InvalidParameter(format!("GLL degree {p} < 1")));
    }
    let mut t = vec![0.0; p + 1];
    t[0] = -1.0;
    t[p] = 1.0;
    for j in 1..=(p / 2) {
        let mut x = -(std::f64::consts::PI * j as f64 / p as f64).cos();
        for _ in 0..100 {
            // P_p'' from the Legendre ODE: (1 − x²) P'' = 2x P' − p(p+1) P
            let (pn, dpn) = legendre(p, x);
            let ddpn = (2.0 * x * dpn - (p * (p + 1)) as f64 * pn) / (1.0 - x * x);
            let dx = dpn / ddpn;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        t[j] = x;
    }
    let mut nodes = vec![0.0; p + 1];
    for j in 0..=(p / 2) {
        nodes[j] = 0.5 * (1.0 + t[j]);
        nodes[p - j] = 1.0 - nodes[j];
    }
    if p % 2 == 0 {
        nodes[p / 2] = 0.5;
    }
    Ok(NodeSet { degree: p, nodes })
}

/// A quadrature rule on `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// `gauss_rule`: the `n`-point Gauss–Legendre rule on `[0,1]`.
pub fn gauss_rule(n: usize) -> Result<QuadratureRule> {
    if n < 1 {
        return Err(Error::InvalidParameter(format!("quadrature size {n} < 1")));
    }
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // i-th root counted from -1
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 1.0 / ((1.0 - x * x) * dp * dp);
        points[i] = 0.5 * (1.0 + x);
        points[n - 1 - i] = 1.0 - points[i];
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.5;
    }
    Ok(QuadratureRule { points, weights })
}

/// Nodal Lagrange basis on a [`NodeSet`], evaluated in the first barycentric
/// form `l_j(x) = w_j Π_{k≠j} (x − x_k)` with precomputed weights. Products
/// never divide by `x − x_k`, so evaluation at or near nodes is stable.
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(nodes: &NodeSet) -> Self {
        let x = nodes.nodes().to_vec();
        let weights = (0..x.len())
            .map(|j| {
                let prod: f64 = (0..x.len()).filter(|&k| k != j).map(|k| x[j] - x[k]).product();
                1.0 / prod
            })
            .collect();
        Self { nodes: x, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Values and derivatives of all basis functions at `x`.
    pub fn eval(&self, x: f64, values: &mut [f64], derivs: &mut [f64]) {
        let n = self.nodes.len();
        // prefix/suffix products with their derivatives
        let mut pre = vec![(1.0, 0.0); n + 1];
        for k in 0..n {
            let (v, d) = pre[k];
            let f = x - self.nodes[k];
            pre[k + 1] = (v * f, d * f + v);
        }
        let mut suf = vec![(1.0, 0.0); n + 1];
        for k in (0..n).rev() {
            let (v, d) = suf[k + 1];
            let f = x - self.nodes[k];
            suf[k] = (v * f, d * f + v);
        }
        for j in 0..n {
            let (pv, pd) = pre[j];
            let (sv, sd) = suf[j + 1];
            values[j] = self.weights[j] * pv * sv;
            derivs[j] = self.weights[j] * (pd * sv + pv * sd);
        }
    }

    pub fn values(&self, x: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        let mut d = vec![0.0; self.len()];
        self.eval(x, &mut v, &mut d);
        v
    }
}

/// Tensor-product `Q_p` nodal basis on the reference square.
#[derive(Debug, Clone)]
pub struct TensorBasis {
    degree: usize,
    nodes: NodeSet,
    line: LagrangeBasis,
}

/// Values and reference gradients of all `(p+1)²` basis functions at a point.
#[derive(Debug, Clone, Default)]
pub struct BasisValues {
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
}

impl TensorBasis {
    pub fn new(p: usize) -> Result<Self> {
        let nodes = gll_nodes(p)?;
        let line = LagrangeBasis::new(&nodes);
        Ok(Self { degree: p, nodes, line })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn line(&self) -> &LagrangeBasis {
        &self.line
    }

    pub fn len(&self) -> usize {
        (self.degree + 1) * (self.degree + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + (self.degree + 1) * j
    }

    /// `basis_eval`.
    pub fn eval(&self, xi: f64, eta: f64) -> BasisValues {
        let n = self.degree + 1;
        let (mut vx, mut dx) = (vec![0.0; n], vec![0.0; n]);
        let (mut vy, mut dy) = (vec![0.0; n], vec![0.0; n]);
        self.line.eval(xi, &mut vx, &mut dx);
        self.line.eval(eta, &mut vy, &mut dy);
        let mut out = BasisValues { values: vec![0.0; n * n], grads: vec![[0.0; 2]; n * n] };
        for j in 0..n {
            for i in 0..n {
                let k = i + n * j;
                out.values[k] = vx[i] * vy[j];
                out.grads[k] = [dx[i] * vy[j], vx[i] * dy[j]];
            }
        }
        out
    }
}

/// Nodal coefficients of the tensor Gauss–Lobatto interpolant, lexicographic.
pub fn gll_interpolate(f: impl Fn(f64, f64) -> f64, p: usize) -> Result<Vec<f64>> {
    let nodes = gll_nodes(p)?;
    let x = nodes.nodes();
    let mut c = Vec::with_capacity((p + 1) * (p + 1));
    for &eta in x {
        for &xi in x {
            c.push(f(xi, eta));
        }
    }
    Ok(c)
}

/// Evaluates the interpolant with coefficients `coeffs` at `(ξ, η)`.
pub fn eval_interpolant(basis: &TensorBasis, coeffs: &[f64], xi: f64, eta: f64) -> (f64, [f64; 2]) {
    let b = basis.eval(xi, eta);
    let mut v = 0.0;
    let mut g = [0.0; 2];
    for (k, &c) in coeffs.iter().enumerate() {
        v += c * b.values[k];
        g[0] += c * b.grads[k][0];
        g[1] += c * b.grads[k][1];
    }
    (v, g)
}
