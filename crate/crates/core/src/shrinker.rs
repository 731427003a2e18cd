//! Self-shrinker and Gaussian density tools on discrete graph states.
//!
//! Quadratures run over the nodes of `Ē` with the same area elements as
//! the flow's area monitor, so `f_functional(·, 0)` reproduces the area
//! bit for bit.

use crate::domain::DomainSpec;
use crate::flow::{area_elements, boundary_jacobian, jet_at, GraphState};
use crate::grid::{build_grid, NodeKind};
use crate::jet::PointJet;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShrinkerError {
    #[error("invalid density query: {0}")]
    InvalidQuery(String),
    /// The kernel's effective support is not covered by the state.
    #[error("undercoverage: {0}")]
    Undercoverage(String),
    #[error("reflection needs a box with a face on x_n = 0 and zero trace there: {0}")]
    Reflection(String),
}

/// Centre and scale of a Gaussian density evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityQuery {
    /// `Y ∈ R^{n+m}`.
    pub center: Vec<f64>,
    /// `T − t > 0`.
    pub time_gap: f64,
    /// Radius where the cutoff `φ` reaches zero.
    pub cutoff: f64,
    pub truncation: f64,
}

impl DensityQuery {
    /// Query with unit cutoff and truncation `6√(T − t)` clipped below by
    /// the cutoff.
    pub fn new(center: Vec<f64>, time_gap: f64) -> Result<DensityQuery, ShrinkerError> {
        let truncation = (6.0 * time_gap.sqrt()).max(1.0);
        DensityQuery::with(center, time_gap, 1.0, truncation)
    }

    pub fn with(center: Vec<f64>, time_gap: f64, cutoff: f64, truncation: f64) -> Result<DensityQuery, ShrinkerError> {
        if !(time_gap > 0.0 && time_gap.is_finite()) {
            return Err(ShrinkerError::InvalidQuery("time gap must be positive".into()));
        }
        if !(cutoff > 0.0) {
            return Err(ShrinkerError::InvalidQuery("cutoff must be positive".into()));
        }
        if truncation < 6.0 * time_gap.sqrt() {
            return Err(ShrinkerError::InvalidQuery(
                "truncation must be at least 6 sqrt(time gap)".into(),
            ));
        }
        Ok(DensityQuery {
            center,
            time_gap,
            cutoff,
            truncation,
        })
    }

    /// Radius beyond which the integrand vanishes.
    pub fn support(&self) -> f64 {
        self.cutoff.min(self.truncation)
    }
}

/// `(4πτ)^{−n/2} exp(−|y − Y|²/(4τ))` with `τ = T − t` and `n` the
/// dimension of the graph.
pub fn backward_kernel(y: &[f64], query: &DensityQuery, n: usize) -> f64 {
    let tau = query.time_gap;
    let r2: f64 = y
        .iter()
        .zip(&query.center)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    (4.0 * PI * tau).powf(-(n as f64) / 2.0) * (-r2 / (4.0 * tau)).exp()
}

/// Cutoff profile: 1 on `[0, ½]`, quintic smoothstep down to 0 at 1.
pub fn phi_profile(s: f64) -> f64 {
    if s <= 0.5 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let u = 2.0 * (1.0 - s);
        u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
    }
}

fn position(state: &GraphState, node: usize) -> Vec<f64> {
    let mut y = state.grid.position(node);
    y.extend_from_slice(state.value(node));
    y
}

/// `∫ exp(−c|z|²/4) dH^n` over the graph.
pub fn f_functional(state: &GraphState, c: f64) -> f64 {
    let mut total = 0.0;
    for (node, wsg) in area_elements(state) {
        if c == 0.0 {
            total += wsg;
        } else {
            let y = position(state, node);
            let r2: f64 = y.iter().map(|v| v * v).sum();
            total += (-c * r2 / 4.0).exp() * wsg;
        }
    }
    total
}

/// `∫ φ(|y − Y|/cutoff) ρ(y) dH^n` over the graph.
///
/// Fails with [`ShrinkerError::Undercoverage`] when the grid cannot resolve
/// the kernel (`h > √(2τ)`) or when the support reaches the auxiliary
/// truncation sphere of an exterior domain.
pub fn gaussian_density(state: &GraphState, query: &DensityQuery) -> Result<f64, ShrinkerError> {
    let grid = &*state.grid;
    let n = grid.n();
    if query.center.len() != n + state.m {
        return Err(ShrinkerError::InvalidQuery(format!(
            "centre must have {} coordinates",
            n + state.m
        )));
    }
    let h = grid.h.iter().copied().fold(0.0, f64::max);
    if h > (2.0 * query.time_gap).sqrt() {
        return Err(ShrinkerError::Undercoverage(format!(
            "spacing {h} exceeds the kernel width {}",
            (2.0 * query.time_gap).sqrt()
        )));
    }
    if let DomainSpec::Exterior {
        center, truncation, ..
    } = &grid.spec
    {
        let base: f64 = query.center[..n]
            .iter()
            .zip(center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let tail = (-(truncation - base).max(0.0).powi(2) / (4.0 * query.time_gap)).exp();
        if base + query.support() > *truncation && tail > 1e-8 {
            return Err(ShrinkerError::Undercoverage(
                "kernel support crosses the truncation sphere".into(),
            ));
        }
    }
    let terms: Vec<f64> = area_elements(state)
        .par_iter()
        .map(|&(node, wsg)| {
            let y = position(state, node);
            let dist: f64 = y
                .iter()
                .zip(&query.center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if dist >= query.support() {
                return 0.0;
            }
            phi_profile(dist / query.cutoff) * backward_kernel(&y, query, n) * wsg
        })
        .collect();
    Ok(terms.iter().sum())
}

/// Parabolic dilation `x ↦ ι(x − Y_base)`, `f ↦ ι(f − Y_fibre)`,
/// `t ↦ ι²(t − T)`.
pub fn parabolic_dilate(state: &GraphState, y: &[f64], t_ref: f64, iota: f64) -> GraphState {
    let n = state.n();
    let (yb, yf) = y.split_at(n);
    let grid = Arc::new(state.grid.dilated(iota, yb));
    let m = state.m;
    let map = |vals: &[f64]| -> Vec<f64> {
        vals.iter()
            .enumerate()
            .map(|(k, v)| if v.is_nan() { f64::NAN } else { iota * (v - yf[k % m]) })
            .collect()
    };
    GraphState {
        grid,
        m,
        t: iota * iota * (state.t - t_ref),
        values: map(&state.values),
        point_values: map(&state.point_values),
    }
}

/// Result of the odd reflection across `x_n = 0`.
#[derive(Debug, Clone)]
pub struct Reflection {
    pub state: GraphState,
    /// Largest jump of `∂²f/∂x_n²` across the hyperplane.
    pub hessian_jump: f64,
}

/// Odd extension `f(x', −x_n) = −f(x', x_n)` of a state on a box with its
/// lower face in `x_n = 0`.
pub fn reflect_halfspace(state: &GraphState) -> Result<Reflection, ShrinkerError> {
    let grid = &*state.grid;
    let n = grid.n();
    let m = state.m;
    let DomainSpec::Box { lower, upper } = &grid.spec else {
        return Err(ShrinkerError::Reflection("domain is not a box".into()));
    };
    if lower[n - 1] != 0.0 {
        return Err(ShrinkerError::Reflection("lower face is not x_n = 0".into()));
    }
    let last = n - 1;
    let mut trace: f64 = 0.0;
    for node in 0..grid.len() {
        if grid.coords(node)[last] == 0 {
            trace = state.value(node).iter().fold(trace, |t, v| t.max(v.abs()));
        }
    }
    if trace > 1e-10 {
        return Err(ShrinkerError::Reflection(format!("trace {trace:e} on the hyperplane")));
    }
    let mut lo = lower.clone();
    lo[last] = -upper[last];
    let spec = DomainSpec::Box {
        lower: lo,
        upper: upper.clone(),
    };
    let doubled = build_grid(&spec, grid.h[last]).map_err(|e| ShrinkerError::Reflection(e.to_string()))?;
    let half = grid.dims[last] - 1;
    if doubled.dims[last] != 2 * half + 1 || doubled.dims[..last] != grid.dims[..last] {
        return Err(ShrinkerError::Reflection("doubled lattice does not align".into()));
    }
    let mut values = vec![f64::NAN; doubled.len() * m];
    for node in 0..doubled.len() {
        let mut c = doubled.coords(node);
        let k = c[last] as i64 - half as i64;
        let sign = if k < 0 { -1.0 } else { 1.0 };
        c[last] = k.unsigned_abs() as usize;
        let src = grid.index(&c);
        for a in 0..m {
            values[node * m + a] = sign * state.values[src * m + a];
        }
    }
    let mut jump: f64 = 0.0;
    let h = grid.h[last];
    for node in 0..grid.len() {
        let c = grid.coords(node);
        if c[last] != 0 || grid.dims[last] < 3 {
            continue;
        }
        let mut c1 = c.clone();
        c1[last] = 1;
        let mut c2 = c;
        c2[last] = 2;
        let (q1, q2) = (grid.index(&c1), grid.index(&c2));
        for a in 0..m {
            let d2 = (state.values[node * m + a] - 2.0 * state.values[q1 * m + a] + state.values[q2 * m + a]) / (h * h);
            // the mirrored side has second derivative −d2
            jump = jump.max(2.0 * d2.abs());
        }
    }
    let out = GraphState {
        grid: Arc::new(doubled),
        m,
        t: state.t,
        values,
        point_values: Vec::new(),
    };
    Ok(Reflection {
        state: out,
        hessian_jump: jump,
    })
}

/// Jet at any node of `Ē`: finite differences in the interior, one-sided
/// Jacobian with zero Hessian on pinned boundary nodes.
pub fn node_jet(state: &GraphState, node: usize) -> PointJet {
    if state.grid.kinds[node] == NodeKind::Interior {
        jet_at(state, node)
    } else {
        PointJet::affine(
            state.grid.position(node),
            state.value(node).to_vec(),
            boundary_jacobian(state, node),
        )
    }
}
