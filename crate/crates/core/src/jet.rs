//! Pointwise geometry of a graph `Γ(f) ⊂ R^{n+m}` from a single jet.
//!
//! Every function here sees only `(x, f(x), Df(x), D²f(x))`. The ambient
//! metric is Euclidean, so Christoffel terms vanish and the minimal surface
//! operator reduces to `g^{ij} f^A_{ij}`.
//!
//! Frames follow the singular value decomposition of `Df`: domain
//! directions `a_i` with `Df a_i = λ_i v_i`, tangent vectors
//! `e_i = (a_i, λ_i v_i) / √(1+λ_i²)` and normal vectors
//! `e_{n+α} = (−λ_α a_α, v_α) / √(1+λ_α²)`.

use crate::linalg::{dot, fix_sign, norm, spd_inverse, sym_eigen, Mat};
use thiserror::Error;

/// Largest supported base or fibre dimension.
pub const MAX_DIM: usize = 8;

/// Relative threshold below which a singular value counts as zero.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    /// Base or fibre dimension outside `1..=MAX_DIM`.
    #[error("dimensions n={n}, m={m} outside 1..={MAX_DIM}")]
    Dimension { n: usize, m: usize },
    /// Array shapes disagree with `(n, m)`.
    #[error("shape mismatch: {0}")]
    Shape(&'static str),
    /// A Hessian block is not symmetric.
    #[error("hessian of component {component} asymmetric by {gap:e}")]
    AsymmetricHessian { component: usize, gap: f64 },
    /// A jet entry is NaN or infinite.
    #[error("non-finite jet entry")]
    NonFinite,
}

/// Value, Jacobian and Hessian of a map `R^n → R^m` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointJet {
    pub x: Vec<f64>,
    pub value: Vec<f64>,
    /// `m × n`, `jac[(A, i)] = ∂f^A/∂x_i`.
    pub jac: Mat,
    /// One symmetric `n × n` block per component.
    pub hess: Vec<Mat>,
}

impl PointJet {
    /// Builds a jet and checks its shape, finiteness and Hessian symmetry.
    pub fn new(x: Vec<f64>, value: Vec<f64>, jac: Mat, hess: Vec<Mat>) -> Result<Self, JetError> {
        let jet = Self {
            x,
            value,
            jac,
            hess,
        };
        jet.validate()?;
        Ok(jet)
    }

    /// Jet of an affine map `x ↦ value + jac·(y − x)` evaluated at `x`.
    pub fn affine(x: Vec<f64>, value: Vec<f64>, jac: Mat) -> Self {
        let n = x.len();
        let hess = vec![Mat::zeros(n, n); value.len()];
        Self {
            x,
            value,
            jac,
            hess,
        }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn m(&self) -> usize {
        self.value.len()
    }

    pub fn validate(&self) -> Result<(), JetError> {
        let (n, m) = (self.n(), self.m());
        if !(1..=MAX_DIM).contains(&n) || !(1..=MAX_DIM).contains(&m) {
            return Err(JetError::Dimension { n, m });
        }
        if self.jac.rows() != m || self.jac.cols() != n {
            return Err(JetError::Shape("jac must be m × n"));
        }
        if self.hess.len() != m || self.hess.iter().any(|h| h.rows() != n || h.cols() != n) {
            return Err(JetError::Shape("hess must be m blocks of n × n"));
        }
        let finite = self.x.iter().chain(&self.value).all(|v| v.is_finite())
            && self.jac.as_slice().iter().all(|v| v.is_finite())
            && self
                .hess
                .iter()
                .all(|h| h.as_slice().iter().all(|v| v.is_finite()));
        if !finite {
            return Err(JetError::NonFinite);
        }
        for (component, h) in self.hess.iter().enumerate() {
            let gap = h.asymmetry();
            if gap > 1e-12 * h.max_abs().max(1.0) {
                return Err(JetError::AsymmetricHessian { component, gap });
            }
        }
        Ok(())
    }

    /// Vector-valued second derivative `D²f(u, w) ∈ R^m`.
    pub fn hess_apply(&self, u: &[f64], w: &[f64]) -> Vec<f64> {
        self.hess.iter().map(|h| dot(u, &h.mul_vec(w))).collect()
    }
}

/// Induced metric `g = I + JᵀJ`, its inverse and determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricPair {
    pub g: Mat,
    pub ginv: Mat,
    pub detg: f64,
}

/// Singular values of `Df` with the adapted domain and target frames.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularData {
    /// `n` values sorted descending, zero-padded past the rank.
    pub lambdas: Vec<f64>,
    /// Columns are the domain directions `a_1..a_n`.
    pub u_frame: Mat,
    /// Columns are the target directions `a_{n+1}..a_{n+m}`.
    pub v_frame: Mat,
    pub rank: usize,
}

impl SingularData {
    /// Tangent frame `e_1..e_n` as vectors in `R^{n+m}`.
    pub fn tangent_frame(&self) -> Vec<Vec<f64>> {
        let n = self.u_frame.rows();
        let m = self.v_frame.rows();
        (0..n)
            .map(|i| {
                let lam = if i < self.rank { self.lambdas[i] } else { 0.0 };
                let s = (1.0 + lam * lam).sqrt();
                let mut e = Vec::with_capacity(n + m);
                e.extend(self.u_frame.column(i).iter().map(|a| a / s));
                if i < self.rank {
                    e.extend(self.v_frame.column(i).iter().map(|v| lam * v / s));
                } else {
                    e.extend(std::iter::repeat_n(0.0, m));
                }
                e
            })
            .collect()
    }

    /// Normal frame `e_{n+1}..e_{n+m}` as vectors in `R^{n+m}`.
    pub fn normal_frame(&self) -> Vec<Vec<f64>> {
        let n = self.u_frame.rows();
        let m = self.v_frame.rows();
        (0..m)
            .map(|a| {
                let mut e = Vec::with_capacity(n + m);
                if a < self.rank {
                    let lam = self.lambdas[a];
                    let s = (1.0 + lam * lam).sqrt();
                    e.extend(self.u_frame.column(a).iter().map(|u| -lam * u / s));
                    e.extend(self.v_frame.column(a).iter().map(|v| v / s));
                } else {
                    e.extend(std::iter::repeat_n(0.0, n));
                    e.extend(self.v_frame.column(a));
                }
                e
            })
            .collect()
    }

    /// `√(1+λ_α²)` for the normal direction `α`, or 1 past the rank.
    fn normal_scale(&self, alpha: usize) -> f64 {
        if alpha < self.rank {
            (1.0 + self.lambdas[alpha].powi(2)).sqrt()
        } else {
            1.0
        }
    }
}

/// Second fundamental form in the adapted frames.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondFundamental {
    /// `h[α]` is the symmetric `n × n` block `⟨A(e_i, e_j), e_{n+α}⟩`.
    pub h: Vec<Mat>,
    pub normsq: f64,
}

pub fn induced_metric(jet: &PointJet) -> MetricPair {
    let n = jet.n();
    let jtj = jet.jac.transpose().matmul(&jet.jac);
    let g = Mat::from_fn(n, n, |i, j| {
        let v = if i == j { 1.0 } else { 0.0 };
        // average the two triangles so g is exactly symmetric
        v + 0.5 * (jtj[(i, j)] + jtj[(j, i)])
    });
    let (ginv, detg) = spd_inverse(&g).expect("I + JᵀJ is positive definite");
    MetricPair { g, ginv, detg }
}

pub fn singular_values(jet: &PointJet) -> SingularData {
    let (n, m) = (jet.n(), jet.m());
    let jtj = jet.jac.transpose().matmul(&jet.jac);
    let (_, a) = sym_eigen(&jtj);

    // recompute λ_i = |J a_i| which is accurate even for tiny values
    let mut pairs: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..n)
        .map(|i| {
            let ai = a.column(i);
            let jai = jet.jac.mul_vec(&ai);
            (norm(&jai), ai, jai)
        })
        .collect();
    pairs.sort_by(|p, q| q.0.partial_cmp(&p.0).unwrap_or(std::cmp::Ordering::Equal));

    let lmax = pairs.first().map_or(0.0, |p| p.0);
    let cut = RANK_TOL * lmax.max(1.0);
    let rank = pairs.iter().filter(|p| p.0 >= cut).count().min(m);

    let mut u_frame = Mat::zeros(n, n);
    let mut lambdas = vec![0.0; n];
    let mut targets: Vec<Vec<f64>> = Vec::with_capacity(m);
    for (i, (lam, ai, jai)) in pairs.into_iter().enumerate() {
        u_frame.set_column(i, &ai);
        if i < rank {
            lambdas[i] = lam;
            targets.push(jai.iter().map(|v| v / lam).collect());
        }
    }
    complete_orthonormal(&mut targets, m);
    let mut v_frame = Mat::zeros(m, m);
    for (k, t) in targets.iter().enumerate() {
        v_frame.set_column(k, t);
    }
    SingularData {
        lambdas,
        u_frame,
        v_frame,
        rank,
    }
}

/// Extends an orthonormal family to a basis of `R^dim` by Gram–Schmidt over
/// the standard basis in index order. Added vectors are sign-fixed.
fn complete_orthonormal(family: &mut Vec<Vec<f64>>, dim: usize) {
    for k in 0..dim {
        if family.len() == dim {
            break;
        }
        let mut c = vec![0.0; dim];
        c[k] = 1.0;
        // two passes keep the result orthogonal to rounding level
        for _ in 0..2 {
            for f in family.iter() {
                let p = dot(&c, f);
                c.iter_mut().zip(f).for_each(|(x, y)| *x -= p * y);
            }
        }
        let len = norm(&c);
        if len > 1e-8 {
            c.iter_mut().for_each(|x| *x /= len);
            fix_sign(&mut c);
            family.push(c);
        }
    }
}

/// `*Ω = 1 / √Π(1 + λ_i²)`.
pub fn star_omega(lambdas: &[f64]) -> f64 {
    1.0 / lambdas.iter().map(|l| 1.0 + l * l).product::<f64>().sqrt()
}

/// Diagonal of the S-tensor in the tangent frame, `(1 − λ_i²)/(1 + λ_i²)`.
pub fn s_tensor_diag(lambdas: &[f64]) -> Vec<f64> {
    lambdas
        .iter()
        .map(|l| (1.0 - l * l) / (1.0 + l * l))
        .collect()
}

/// `ε′` matching a length-decreasing margin `eps`: the value of `S_ii` at
/// `λ_i = 1 − eps`.
pub fn eps_prime(eps: f64) -> f64 {
    let q = (1.0 - eps).powi(2);
    (1.0 - q) / (1.0 + q)
}

/// Smallest eigenvalue of `S − ε′ g` restricted to the tangent space.
///
/// Both tensors are diagonal in the orthonormal frame `e_i`, where the
/// induced metric is the identity, so the eigenvalues are `S_ii − ε′`.
pub fn p_tensor_min_eig(lambdas: &[f64], eps: f64) -> f64 {
    let ep = eps_prime(eps);
    s_tensor_diag(lambdas)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
        - ep
}

pub fn second_fundamental(jet: &PointJet) -> SecondFundamental {
    second_fundamental_with(jet, &singular_values(jet))
}

pub(crate) fn second_fundamental_with(jet: &PointJet, sd: &SingularData) -> SecondFundamental {
    let (n, m) = (jet.n(), jet.m());
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let l = if i < sd.rank { sd.lambdas[i] } else { 0.0 };
            (1.0 + l * l).sqrt()
        })
        .collect();
    let cols: Vec<Vec<f64>> = (0..n).map(|i| sd.u_frame.column(i)).collect();
    // D²f(a_i, a_j) ∈ R^m for all pairs
    let mut pulled = vec![vec![Vec::new(); n]; n];
    for i in 0..n {
        for j in i..n {
            let v = jet.hess_apply(&cols[i], &cols[j]);
            pulled[i][j] = v.clone();
            pulled[j][i] = v;
        }
    }
    let mut h = Vec::with_capacity(m);
    let mut normsq = 0.0;
    for alpha in 0..m {
        let va = sd.v_frame.column(alpha);
        let na = sd.normal_scale(alpha);
        let block = Mat::from_fn(n, n, |i, j| {
            dot(&va, &pulled[i][j]) / (scale[i] * scale[j] * na)
        });
        normsq += block.as_slice().iter().map(|x| x * x).sum::<f64>();
        h.push(block);
    }
    SecondFundamental { h, normsq }
}

/// `R^A = g^{ij} f^A_{ij}`.
pub fn mss_residual(jet: &PointJet) -> Vec<f64> {
    mss_residual_with(jet, &induced_metric(jet))
}

pub(crate) fn mss_residual_with(jet: &PointJet, metric: &MetricPair) -> Vec<f64> {
    let n = jet.n();
    jet.hess
        .iter()
        .map(|h| {
            let mut r = 0.0;
            for i in 0..n {
                for j in 0..n {
                    r += metric.ginv[(i, j)] * h[(i, j)];
                }
            }
            r
        })
        .collect()
}

/// Removes the tangential part of `v ∈ R^{n+m}` using an orthonormal
/// tangent frame.
fn normal_part(v: &[f64], tangent: &[Vec<f64>]) -> Vec<f64> {
    let mut out = v.to_vec();
    for e in tangent {
        let p = dot(v, e);
        out.iter_mut().zip(e).for_each(|(o, x)| *o -= p * x);
    }
    out
}

/// Mean curvature vector `H = (0, g^{ij} f_{ij})^⊥` and `|H|²`.
pub fn mean_curvature(jet: &PointJet) -> (Vec<f64>, f64) {
    let sd = singular_values(jet);
    let r = mss_residual(jet);
    mean_curvature_with(jet, &sd, &r)
}

pub(crate) fn mean_curvature_with(jet: &PointJet, sd: &SingularData, r: &[f64]) -> (Vec<f64>, f64) {
    let mut v = vec![0.0; jet.n()];
    v.extend_from_slice(r);
    let h = normal_part(&v, &sd.tangent_frame());
    let nsq = dot(&h, &h);
    (h, nsq)
}

/// `H + (c/2) F^⊥` with position vector `F = (x, f(x))`.
pub fn shrinker_residual(jet: &PointJet, c: f64) -> Vec<f64> {
    let sd = singular_values(jet);
    let (mut h, _) = mean_curvature_with(jet, &sd, &mss_residual(jet));
    if c != 0.0 {
        let mut pos = jet.x.clone();
        pos.extend_from_slice(&jet.value);
        let perp = normal_part(&pos, &sd.tangent_frame());
        h.iter_mut().zip(&perp).for_each(|(a, p)| *a += 0.5 * c * p);
    }
    h
}

/// All pointwise quantities the flow monitors need, sharing one SVD.
#[derive(Debug, Clone)]
pub struct JetGeometry {
    pub metric: MetricPair,
    pub singular: SingularData,
    pub residual: Vec<f64>,
    pub mean_curvature: Vec<f64>,
    pub h_normsq: f64,
    pub star_omega: f64,
}

pub fn analyze(jet: &PointJet) -> JetGeometry {
    let metric = induced_metric(jet);
    let singular = singular_values(jet);
    let residual = mss_residual_with(jet, &metric);
    let (mean_curvature, h_normsq) = mean_curvature_with(jet, &singular, &residual);
    let star_omega = star_omega(&singular.lambdas);
    JetGeometry {
        metric,
        singular,
        residual,
        mean_curvature,
        h_normsq,
        star_omega,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jet(jac: Vec<Vec<f64>>, hess: Vec<Vec<Vec<f64>>>) -> PointJet {
        let m = jac.len();
        let n = jac[0].len();
        PointJet::new(
            vec![0.0; n],
            vec![0.0; m],
            Mat::from_rows(&jac),
            hess.iter().map(|h| Mat::from_rows(h)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn metric_of_single_slope() {
        let j = jet(vec![vec![0.5, 0.0]], vec![vec![vec![0.0; 2]; 2]]);
        let mp = induced_metric(&j);
        assert_eq!(mp.g, Mat::from_rows(&[vec![1.25, 0.0], vec![0.0, 1.0]]));
        assert!((mp.detg - 1.25).abs() < 1e-15);
    }

    #[test]
    fn diagonal_singular_values_are_sorted() {
        let j = jet(
            vec![vec![0.3, 0.0], vec![0.0, 0.4]],
            vec![vec![vec![0.0; 2]; 2]; 2],
        );
        let sd = singular_values(&j);
        assert!((sd.lambdas[0] - 0.4).abs() < 1e-15);
        assert!((sd.lambdas[1] - 0.3).abs() < 1e-15);
        assert_eq!(sd.rank, 2);
    }

    #[test]
    fn rank_one_jacobian() {
        let j = jet(
            vec![vec![1.0, 1.0], vec![0.0, 0.0]],
            vec![vec![vec![0.0; 2]; 2]; 2],
        );
        let sd = singular_values(&j);
        assert!((sd.lambdas[0] - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(sd.lambdas[1], 0.0);
        assert_eq!(sd.rank, 1);
        // completing vector is orthogonal to the image direction (1, 0)
        assert!(sd.v_frame[(0, 1)].abs() < 1e-15);
        assert!((sd.v_frame[(1, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_jets_are_rejected() {
        let bad = PointJet::new(
            vec![0.0; 2],
            vec![0.0],
            Mat::zeros(1, 2),
            vec![Mat::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]])],
        );
        assert!(matches!(bad, Err(JetError::AsymmetricHessian { .. })));
        let big = PointJet::new(vec![0.0; 9], vec![0.0], Mat::zeros(1, 9), vec![Mat::zeros(9, 9)]);
        assert!(matches!(big, Err(JetError::Dimension { .. })));
    }

    #[test]
    fn star_omega_values() {
        assert_eq!(star_omega(&[0.0, 0.0]), 1.0);
        assert!((star_omega(&[1.0, 1.0]) - 0.5).abs() < 1e-15);
        assert!((star_omega(&[0.5, 0.0]) - 1.0 / 1.25f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn s_and_p_tensor_values() {
        assert_eq!(s_tensor_diag(&[0.0, 1.0, 0.5]), vec![1.0, 0.0, 0.6]);
        assert!((p_tensor_min_eig(&[0.0, 0.0], 0.5) - 0.4).abs() < 1e-15);
        assert!(p_tensor_min_eig(&[0.7, 0.2], 0.3).abs() < 1e-15);
        let expected = (1.0 - 0.04) / 1.04 - eps_prime(0.3);
        assert!((p_tensor_min_eig(&[0.2, 0.1], 0.3) - expected).abs() < 1e-15);
        assert!(expected > 0.0);
    }

    #[test]
    fn parabola_vertex_curvature() {
        let j = jet(vec![vec![0.0]], vec![vec![vec![1.0]]]);
        let sf = second_fundamental(&j);
        assert!((sf.h[0][(0, 0)] - 1.0).abs() < 1e-15);
        let j2 = jet(vec![vec![0.0]], vec![vec![vec![2.0]]]);
        assert_eq!(mss_residual(&j2), vec![2.0]);
    }

    #[test]
    fn unit_sphere_pole() {
        let j = jet(
            vec![vec![0.0, 0.0]],
            vec![vec![vec![-1.0, 0.0], vec![0.0, -1.0]]],
        );
        let (h, nsq) = mean_curvature(&j);
        assert!((nsq - 4.0).abs() < 1e-14);
        assert!((h[2] + 2.0).abs() < 1e-14);
        // |H|² exceeds |A|² here, only |H|² ≤ n|A|² holds in general
        assert!((second_fundamental(&j).normsq - 2.0).abs() < 1e-14);
    }

    #[test]
    fn constant_map_shrinker_residual() {
        let mut j = jet(vec![vec![0.0, 0.0]], vec![vec![vec![0.0; 2]; 2]]);
        j.value = vec![-3.0];
        j.x = vec![0.7, -0.2];
        let r = shrinker_residual(&j, 1.0);
        assert!((norm(&r) - 1.5).abs() < 1e-15);
    }
}
