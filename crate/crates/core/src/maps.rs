//! Analytic boundary map families with exact jets.
//!
//! Every family is defined on all of `R^n` (or on the stated chart for the
//! closed-form solutions), so the same map serves as boundary data, as
//! initial data `f₀ = ψ` and as a reference solution.

use crate::jet::PointJet;
use crate::linalg::Mat;
use serde::{Deserialize, Serialize};

/// A map `R^n → R^m` with exact value, Jacobian and Hessian.
pub trait SmoothMap: Send + Sync {
    fn m(&self) -> usize;

    fn jet(&self, x: &[f64]) -> PointJet;

    fn value(&self, x: &[f64]) -> Vec<f64> {
        self.jet(x).value
    }
}

/// One monomial `coeff · Π x_i^{powers_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

/// `amplitude · sin(wave · x + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigMode {
    pub amplitude: f64,
    pub wave: Vec<f64>,
    #[serde(default)]
    pub phase: f64,
}

/// Homogeneous quadratic maps whose restriction to the unit sphere is a
/// sphere map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadraticBase {
    /// `R^4 → R^3`, restricting to the Hopf fibration `S³ → S²`.
    Hopf,
    /// `R^2 → R^2`, `z ↦ z²`, the degree-two map of the circle. Holomorphic,
    /// so every scaling of it is already a minimal graph.
    Winding,
}

/// Boundary data families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryMap {
    Constant {
        value: Vec<f64>,
    },
    /// `offset + matrix · x`, `matrix` given as `m` rows.
    Linear {
        offset: Vec<f64>,
        matrix: Vec<Vec<f64>>,
    },
    /// One monomial list per component, total degree at most 4.
    Polynomial {
        components: Vec<Vec<Monomial>>,
    },
    /// One sine mode per component.
    Trigonometric {
        components: Vec<TrigMode>,
    },
    /// `scale · q(x)` with `q` a homogeneous quadratic sphere map.
    LawsonOsserman {
        scale: f64,
        base: QuadraticBase,
    },
    /// `log(cos x₁ / cos x₂)` on `|x₁|, |x₂| < π/2`, a minimal graph.
    Scherk,
    /// Upper hemisphere `√(r² − |x − c|²)`.
    SphereCap {
        center: Vec<f64>,
        radius: f64,
    },
    Scaled {
        factor: f64,
        map: Box<BoundaryMap>,
    },
}

pub const MAX_POLY_DEGREE: u32 = 4;

impl BoundaryMap {
    /// Checks that the map is well formed for base dimension `n`.
    pub fn validate(&self, n: usize) -> Result<(), String> {
        match self {
            BoundaryMap::Constant { value } => {
                if value.is_empty() {
                    return Err("constant map needs at least one component".into());
                }
            }
            BoundaryMap::Linear { offset, matrix } => {
                if offset.len() != matrix.len() || offset.is_empty() {
                    return Err("linear map needs one matrix row per offset entry".into());
                }
                if matrix.iter().any(|r| r.len() != n) {
                    return Err(format!("linear map rows must have length {n}"));
                }
            }
            BoundaryMap::Polynomial { components } => {
                if components.is_empty() {
                    return Err("polynomial map needs at least one component".into());
                }
                for t in components.iter().flatten() {
                    if t.powers.len() != n {
                        return Err(format!("monomial powers must have length {n}"));
                    }
                    if t.powers.iter().sum::<u32>() > MAX_POLY_DEGREE {
                        return Err(format!("monomial degree exceeds {MAX_POLY_DEGREE}"));
                    }
                }
            }
            BoundaryMap::Trigonometric { components } => {
                if components.is_empty() {
                    return Err("trigonometric map needs at least one component".into());
                }
                if components.iter().any(|c| c.wave.len() != n) {
                    return Err(format!("wave vectors must have length {n}"));
                }
            }
            BoundaryMap::LawsonOsserman { base, .. } => {
                let need = match base {
                    QuadraticBase::Hopf => 4,
                    QuadraticBase::Winding => 2,
                };
                if n != need {
                    return Err(format!("{base:?} base needs n = {need}"));
                }
            }
            BoundaryMap::Scherk => {
                if n != 2 {
                    return Err("Scherk graph needs n = 2".into());
                }
            }
            BoundaryMap::SphereCap { center, radius } => {
                if center.len() != n || !(*radius > 0.0) {
                    return Err("sphere cap needs a centre in R^n and a positive radius".into());
                }
            }
            BoundaryMap::Scaled { map, .. } => return map.validate(n),
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> BoundaryMap {
        BoundaryMap::Scaled {
            factor,
            map: Box::new(self.clone()),
        }
    }

    /// Global bounds `(w, sup|Dψ|, sup|D²ψ|)` over all of `R^n`, when the
    /// family admits them in closed form.
    pub fn global_bounds(&self, n: usize) -> Option<(f64, f64, f64)> {
        match self {
            BoundaryMap::Constant { .. } => Some((0.0, 0.0, 0.0)),
            BoundaryMap::Trigonometric { components } => {
                let w = components
                    .iter()
                    .filter(|c| c.wave.iter().any(|k| *k != 0.0))
                    .map(|c| 2.0 * c.amplitude.abs())
                    .fold(0.0, f64::max);
                // |Dψ v|² = Σ A² cos²θ (k·v)² ≤ |diag(A) K v|²
                let ak = Mat::from_fn(components.len(), n, |a, i| {
                    components[a].amplitude * components[a].wave[i]
                });
                let d1 = crate::hypothesis::spectral_norm(&ak);
                // |D²ψ(τ,τ)|² ≤ Σ A² (k·τ)⁴, the sup of the stacked forms A k kᵀ
                let forms: Vec<Mat> = components
                    .iter()
                    .map(|c| {
                        Mat::from_fn(n, n, |i, j| c.amplitude.abs() * c.wave[i] * c.wave[j])
                    })
                    .collect();
                let d2 = crate::hypothesis::quadratic_sup(&forms).ok()?;
                Some((w, d1, d2))
            }
            BoundaryMap::Scaled { factor, map } => map
                .global_bounds(n)
                .map(|(w, a, b)| (factor.abs() * w, factor.abs() * a, factor.abs() * b)),
            _ => None,
        }
    }
}

fn pow_deriv(x: f64, p: u32, order: u32) -> f64 {
    match order {
        0 => x.powi(p as i32),
        1 if p >= 1 => p as f64 * x.powi(p as i32 - 1),
        2 if p >= 2 => (p * (p - 1)) as f64 * x.powi(p as i32 - 2),
        _ => 0.0,
    }
}

fn monomial_jet(t: &Monomial, x: &[f64], grad: &mut [f64], hess: &mut Mat) -> f64 {
    let n = x.len();
    let mut orders = vec![0u32; n];
    let eval = |orders: &[u32]| -> f64 {
        t.coeff
            * x.iter()
                .zip(&t.powers)
                .zip(orders)
                .map(|((&xi, &p), &o)| pow_deriv(xi, p, o))
                .product::<f64>()
    };
    let v = eval(&orders);
    for i in 0..n {
        orders[i] = 1;
        grad[i] += eval(&orders);
        for j in i..n {
            orders[j] += 1;
            let d = eval(&orders);
            orders[j] -= 1;
            hess[(i, j)] += d;
            if i != j {
                hess[(j, i)] += d;
            }
        }
        orders[i] = 0;
    }
    v
}

/// Value, gradient and Hessian of each component of a homogeneous quadratic
/// map given by symmetric matrices `Q_A` as `q^A(x) = xᵀ Q_A x`.
fn quadratic_jet(forms: &[Mat], x: &[f64]) -> (Vec<f64>, Mat, Vec<Mat>) {
    let n = x.len();
    let m = forms.len();
    let mut value = vec![0.0; m];
    let mut jac = Mat::zeros(m, n);
    let mut hess = Vec::with_capacity(m);
    for (a, q) in forms.iter().enumerate() {
        let qx = q.mul_vec(x);
        value[a] = crate::linalg::dot(x, &qx);
        for i in 0..n {
            jac[(a, i)] = 2.0 * qx[i];
        }
        hess.push(q.scale(2.0));
    }
    (value, jac, hess)
}

fn base_forms(base: QuadraticBase) -> Vec<Mat> {
    let sym = |n: usize, entries: &[(usize, usize, f64)]| {
        let mut q = Mat::zeros(n, n);
        for &(i, j, v) in entries {
            if i == j {
                q[(i, i)] += v;
            } else {
                q[(i, j)] += 0.5 * v;
                q[(j, i)] += 0.5 * v;
            }
        }
        q
    };
    match base {
        // z1 = x1 + i x2, z2 = x3 + i x4:
        // (|z1|² − |z2|², 2 Re z1 z̄2, 2 Im z1 z̄2)
        QuadraticBase::Hopf => vec![
            sym(4, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, -1.0), (3, 3, -1.0)]),
            sym(4, &[(0, 2, 2.0), (1, 3, 2.0)]),
            sym(4, &[(1, 2, 2.0), (0, 3, -2.0)]),
        ],
        QuadraticBase::Winding => vec![
            sym(2, &[(0, 0, 1.0), (1, 1, -1.0)]),
            sym(2, &[(0, 1, 2.0)]),
        ],
    }
}

impl SmoothMap for BoundaryMap {
    fn m(&self) -> usize {
        match self {
            BoundaryMap::Constant { value } => value.len(),
            BoundaryMap::Linear { offset, .. } => offset.len(),
            BoundaryMap::Polynomial { components } => components.len(),
            BoundaryMap::Trigonometric { components } => components.len(),
            BoundaryMap::LawsonOsserman { base, .. } => match base {
                QuadraticBase::Hopf => 3,
                QuadraticBase::Winding => 2,
            },
            BoundaryMap::Scherk | BoundaryMap::SphereCap { .. } => 1,
            BoundaryMap::Scaled { map, .. } => map.m(),
        }
    }

    fn jet(&self, x: &[f64]) -> PointJet {
        let n = x.len();
        let m = self.m();
        let (value, jac, hess) = match self {
            BoundaryMap::Constant { value } => {
                (value.clone(), Mat::zeros(m, n), vec![Mat::zeros(n, n); m])
            }
            BoundaryMap::Linear { offset, matrix } => {
                let jac = Mat::from_rows(matrix);
                let lx = jac.mul_vec(x);
                let value = offset.iter().zip(&lx).map(|(a, b)| a + b).collect();
                (value, jac, vec![Mat::zeros(n, n); m])
            }
            BoundaryMap::Polynomial { components } => {
                let mut value = vec![0.0; m];
                let mut jac = Mat::zeros(m, n);
                let mut hess = vec![Mat::zeros(n, n); m];
                for (a, terms) in components.iter().enumerate() {
                    let mut grad = vec![0.0; n];
                    for t in terms {
                        value[a] += monomial_jet(t, x, &mut grad, &mut hess[a]);
                    }
                    for i in 0..n {
                        jac[(a, i)] = grad[i];
                    }
                }
                (value, jac, hess)
            }
            BoundaryMap::Trigonometric { components } => {
                let mut value = vec![0.0; m];
                let mut jac = Mat::zeros(m, n);
                let mut hess = Vec::with_capacity(m);
                for (a, c) in components.iter().enumerate() {
                    let theta = crate::linalg::dot(&c.wave, x) + c.phase;
                    let (s, co) = theta.sin_cos();
                    value[a] = c.amplitude * s;
                    for i in 0..n {
                        jac[(a, i)] = c.amplitude * co * c.wave[i];
                    }
                    hess.push(Mat::from_fn(n, n, |i, j| {
                        -c.amplitude * s * c.wave[i] * c.wave[j]
                    }));
                }
                (value, jac, hess)
            }
            BoundaryMap::LawsonOsserman { scale, base } => {
                let forms: Vec<Mat> = base_forms(*base).iter().map(|q| q.scale(*scale)).collect();
                quadratic_jet(&forms, x)
            }
            BoundaryMap::Scherk => {
                let (t1, t2) = (x[0].tan(), x[1].tan());
                let (c1, c2) = (x[0].cos(), x[1].cos());
                let value = vec![(c1 / c2).ln()];
                let jac = Mat::from_rows(&[vec![-t1, t2]]);
                let hess = vec![Mat::from_rows(&[
                    vec![-1.0 / (c1 * c1), 0.0],
                    vec![0.0, 1.0 / (c2 * c2)],
                ])];
                (value, jac, hess)
            }
            BoundaryMap::SphereCap { center, radius } => {
                let y: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                let f = (radius * radius - crate::linalg::dot(&y, &y)).sqrt();
                let jac = Mat::from_fn(1, n, |_, i| -y[i] / f);
                let hess = vec![Mat::from_fn(n, n, |i, j| {
                    let id = if i == j { 1.0 } else { 0.0 };
                    -id / f - y[i] * y[j] / (f * f * f)
                })];
                (vec![f], jac, hess)
            }
            BoundaryMap::Scaled { factor, map } => {
                let j = map.jet(x);
                let value = j.value.iter().map(|v| factor * v).collect();
                let jac = j.jac.scale(*factor);
                let hess = j.hess.iter().map(|h| h.scale(*factor)).collect();
                (value, jac, hess)
            }
        };
        PointJet {
            x: x.to_vec(),
            value,
            jac,
            hess,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hopf_maps_sphere_to_sphere() {
        let map = BoundaryMap::LawsonOsserman {
            scale: 1.0,
            base: QuadraticBase::Hopf,
        };
        let x = [0.5, -0.5, 0.5, 0.5];
        let v = map.value(&x);
        let r: f64 = v.iter().map(|a| a * a).sum();
        assert!((r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn winding_is_z_squared() {
        let map = BoundaryMap::LawsonOsserman {
            scale: 2.0,
            base: QuadraticBase::Winding,
        };
        let v = map.value(&[0.3, 0.4]);
        assert!((v[0] - 2.0 * (0.09 - 0.16)).abs() < 1e-15);
        assert!((v[1] - 2.0 * 0.24).abs() < 1e-15);
    }

    #[test]
    fn polynomial_degree_is_capped() {
        let p = BoundaryMap::Polynomial {
            components: vec![vec![Monomial {
                coeff: 1.0,
                powers: vec![3, 2],
            }]],
        };
        assert!(p.validate(2).is_err());
    }

    #[test]
    fn trig_global_bounds() {
        let t = BoundaryMap::Trigonometric {
            components: vec![TrigMode {
                amplitude: 0.1,
                wave: vec![std::f64::consts::PI, 0.0],
                phase: 0.0,
            }],
        };
        let (w, d1, d2) = t.global_bounds(2).unwrap();
        assert!((w - 0.2).abs() < 1e-15);
        assert!((d1 - 0.1 * std::f64::consts::PI).abs() < 1e-14);
        assert!((d2 - 0.1 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
    }
}
