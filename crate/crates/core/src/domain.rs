//! Analytic domains, their signed distance and boundary curvature data.
//!
//! Signed distance is negative inside `E`. The distance to the boundary
//! `d(x) = dist(x, ∂E)` and its derivatives are available in a band of
//! width `η₀` where `d` is `C²`.

use crate::linalg::Mat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("invalid domain: {0}")]
    Invalid(String),
    /// The query point lies outside `Ē`.
    #[error("point outside the domain (signed distance {0:e})")]
    OutsideDomain(f64),
    /// `d(x) ≥ η₀`, where `d` is not guaranteed to be `C²`.
    #[error("distance {d:e} not below the reach bound {eta0:e}")]
    BeyondReach { d: f64, eta0: f64 },
    /// Inside a box corner region, where `d` is only Lipschitz.
    #[error("point within the corner band of a box")]
    NearMedialAxis,
}

/// Analytic description of the computational domain.
///
/// `Exterior` is the complement of a ball truncated to the shell
/// `inner < |x − center| < truncation`; the outer sphere is an auxiliary
/// boundary that does not enter the boundary geometry constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Annulus { center: Vec<f64>, inner: f64, outer: f64 },
    Exterior { center: Vec<f64>, inner: f64, truncation: f64 },
}

/// Reach and curvature data of `∂E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryGeometry {
    pub eta0: f64,
    pub c0: f64,
    /// Largest `|eigenvalue|` of `Hess d` over the band `E_{η₀}`.
    pub hess_d_bound: f64,
    pub strictly_convex: bool,
}

/// `d`, `∇d` and `Hess d` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceJet {
    pub d: f64,
    pub grad: Vec<f64>,
    pub hess: Mat,
}

fn radial(center: &[f64], x: &[f64]) -> (f64, Vec<f64>) {
    let diff: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
    let rho = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
    (rho, diff)
}

/// Jet of `s·(|x − c| − r0)` for a sphere, `s = ±1`.
fn sphere_distance(center: &[f64], x: &[f64], r0: f64, s: f64) -> DistanceJet {
    let (rho, diff) = radial(center, x);
    let n = x.len();
    let u: Vec<f64> = diff.iter().map(|v| v / rho).collect();
    let grad: Vec<f64> = u.iter().map(|v| s * v).collect();
    let hess = Mat::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        s * (id - u[i] * u[j]) / rho
    });
    DistanceJet {
        d: s * (rho - r0),
        grad,
        hess,
    }
}

impl DomainSpec {
    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Box { lower, .. } => lower.len(),
            DomainSpec::Ball { center, .. }
            | DomainSpec::Annulus { center, .. }
            | DomainSpec::Exterior { center, .. } => center.len(),
        }
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        let n = self.dim();
        if !(1..=crate::jet::MAX_DIM).contains(&n) {
            return Err(DomainError::Invalid(format!("dimension {n} unsupported")));
        }
        let bad = |s: &str| Err(DomainError::Invalid(s.to_string()));
        match self {
            DomainSpec::Box { lower, upper } => {
                if upper.len() != n {
                    return bad("box corners differ in dimension");
                }
                if lower.iter().zip(upper).any(|(l, u)| !(u > l)) {
                    return bad("box needs lower < upper on every axis");
                }
            }
            DomainSpec::Ball { radius, .. } => {
                if !(*radius > 0.0) {
                    return bad("ball radius must be positive");
                }
            }
            DomainSpec::Annulus { inner, outer, .. } => {
                if !(*inner > 0.0 && outer > inner) {
                    return bad("annulus needs 0 < inner < outer");
                }
            }
            DomainSpec::Exterior {
                inner, truncation, ..
            } => {
                if !(*inner > 0.0) {
                    return bad("excluded ball radius must be positive");
                }
                if !(*truncation > 2.0 * inner) {
                    return bad("truncation radius must exceed the excluded diameter");
                }
            }
        }
        let coords: Vec<f64> = match self {
            DomainSpec::Box { lower, upper } => lower.iter().chain(upper).copied().collect(),
            DomainSpec::Ball { center, .. }
            | DomainSpec::Annulus { center, .. }
            | DomainSpec::Exterior { center, .. } => center.clone(),
        };
        if coords.iter().any(|c| !c.is_finite()) {
            return bad("non-finite coordinate");
        }
        Ok(())
    }

    /// Signed distance, negative inside.
    pub fn sdf(&self, x: &[f64]) -> f64 {
        match self {
            DomainSpec::Box { lower, upper } => {
                let mut outside = 0.0;
                let mut inside = f64::NEG_INFINITY;
                for ((xi, l), u) in x.iter().zip(lower).zip(upper) {
                    let q = (l - xi).max(xi - u);
                    outside += q.max(0.0).powi(2);
                    inside = inside.max(q);
                }
                if outside > 0.0 {
                    outside.sqrt()
                } else {
                    inside
                }
            }
            DomainSpec::Ball { center, radius } => radial(center, x).0 - radius,
            DomainSpec::Annulus {
                center,
                inner,
                outer,
            } => {
                let rho = radial(center, x).0;
                (inner - rho).max(rho - outer)
            }
            DomainSpec::Exterior {
                center,
                inner,
                truncation,
            } => {
                let rho = radial(center, x).0;
                (inner - rho).max(rho - truncation)
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.sdf(x) <= 0.0
    }

    /// Axis-aligned bounding box `(lower, upper)` of the computational domain.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            DomainSpec::Box { lower, upper } => (lower.clone(), upper.clone()),
            DomainSpec::Ball { center, radius: r }
            | DomainSpec::Annulus {
                center, outer: r, ..
            }
            | DomainSpec::Exterior {
                center,
                truncation: r,
                ..
            } => (
                center.iter().map(|c| c - r).collect(),
                center.iter().map(|c| c + r).collect(),
            ),
        }
    }

    /// Thinnest extent of the domain, used for the resolution check.
    pub fn thinnest(&self) -> f64 {
        match self {
            DomainSpec::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| u - l)
                .fold(f64::INFINITY, f64::min),
            DomainSpec::Ball { radius, .. } => 2.0 * radius,
            DomainSpec::Annulus { inner, outer, .. } => outer - inner,
            DomainSpec::Exterior {
                inner, truncation, ..
            } => truncation - inner,
        }
    }

    /// Boundary component of a point on or near `∂E`: 0 for the inner
    /// sphere of an annular shell, 1 for its outer sphere, 0 otherwise.
    pub fn component(&self, x: &[f64]) -> u8 {
        match self {
            DomainSpec::Annulus {
                center,
                inner,
                outer: r,
            }
            | DomainSpec::Exterior {
                center,
                inner,
                truncation: r,
            } => {
                let rho = radial(center, x).0;
                if rho - inner <= r - rho {
                    0
                } else {
                    1
                }
            }
            _ => 0,
        }
    }

    /// Diameter of the excluded compact set of an exterior domain.
    pub fn excluded_diameter(&self) -> Option<f64> {
        match self {
            DomainSpec::Exterior { inner, .. } => Some(2.0 * inner),
            _ => None,
        }
    }

    /// The same exterior domain truncated at a different radius.
    pub fn with_truncation(&self, r: f64) -> Option<DomainSpec> {
        match self {
            DomainSpec::Exterior { center, inner, .. } => Some(DomainSpec::Exterior {
                center: center.clone(),
                inner: *inner,
                truncation: r,
            }),
            _ => None,
        }
    }

    /// Distance to `∂E` with derivatives, valid for `d < η₀`.
    pub fn distance_jet(&self, x: &[f64]) -> Result<DistanceJet, DomainError> {
        let sdf = self.sdf(x);
        if sdf > 1e-12 {
            return Err(DomainError::OutsideDomain(sdf));
        }
        let eta0 = estimate_c0_eta0(self).eta0;
        let d = (-sdf).max(0.0);
        if d >= eta0 {
            return Err(DomainError::BeyondReach { d, eta0 });
        }
        let n = x.len();
        Ok(match self {
            DomainSpec::Box { lower, upper } => {
                let mut faces: Vec<(f64, usize, f64)> = Vec::with_capacity(2 * n);
                for i in 0..n {
                    faces.push((x[i] - lower[i], i, 1.0));
                    faces.push((upper[i] - x[i], i, -1.0));
                }
                faces.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                if n > 1 && faces[1].0 < eta0 {
                    return Err(DomainError::NearMedialAxis);
                }
                let (dist, axis, s) = faces[0];
                let mut grad = vec![0.0; n];
                grad[axis] = s;
                DistanceJet {
                    d: dist.max(0.0),
                    grad,
                    hess: Mat::zeros(n, n),
                }
            }
            DomainSpec::Ball { center, radius } => sphere_distance(center, x, *radius, -1.0),
            DomainSpec::Annulus {
                center,
                inner,
                outer: r,
            }
            | DomainSpec::Exterior {
                center,
                inner,
                truncation: r,
            } => {
                if self.component(x) == 0 {
                    sphere_distance(center, x, *inner, 1.0)
                } else {
                    sphere_distance(center, x, *r, -1.0)
                }
            }
        })
        .map(|mut j: DistanceJet| {
            j.d = j.d.max(0.0);
            j
        })
    }
}

/// Reach `η₀` of the distance function and the constant `c₀` with
/// `−Δd ≥ −c₀` on `E_{η₀}`.
///
/// Per shape:
/// - ball of radius `r`: `η₀ = r/2`, `c₀ = 0` since the ball is strictly
///   convex;
/// - box: `η₀ = 0.45·(shortest half-edge)`, `c₀ = 0` since faces are flat;
/// - annulus `(r_in, r)`: `η₀ = min(r_in/2, (r − r_in)/2)` and
///   `c₀ = n·max(1/r_in, 1/(r − η₀))`;
/// - exterior of a ball of radius `a`: `η₀ = a/2`, `c₀ = n/a`, independent
///   of the truncation radius.
pub fn estimate_c0_eta0(spec: &DomainSpec) -> BoundaryGeometry {
    let n = spec.dim() as f64;
    match spec {
        DomainSpec::Box { lower, upper } => {
            let half = lower
                .iter()
                .zip(upper)
                .map(|(l, u)| 0.5 * (u - l))
                .fold(f64::INFINITY, f64::min);
            BoundaryGeometry {
                eta0: 0.45 * half,
                c0: 0.0,
                hess_d_bound: 0.0,
                strictly_convex: false,
            }
        }
        DomainSpec::Ball { radius, .. } => BoundaryGeometry {
            eta0: 0.5 * radius,
            c0: 0.0,
            hess_d_bound: 2.0 / radius,
            strictly_convex: true,
        },
        DomainSpec::Annulus { inner, outer, .. } => {
            let eta0 = (0.5 * inner).min(0.5 * (outer - inner));
            let bound = (1.0 / inner).max(1.0 / (outer - eta0));
            BoundaryGeometry {
                eta0,
                c0: n * bound,
                hess_d_bound: bound,
                strictly_convex: false,
            }
        }
        DomainSpec::Exterior { inner, .. } => BoundaryGeometry {
            eta0: 0.5 * inner,
            c0: n / inner,
            hess_d_bound: 1.0 / inner,
            strictly_convex: false,
        },
    }
}
