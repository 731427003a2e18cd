//! Smallness hypotheses on the boundary data and the boundary barrier.
//!
//! Sup-norms over continuous regions are taken over a two-level sample
//! cloud: nodes and boundary points, then the same plus cell midpoints.
//! The growth between the levels is added once more on top of the finer
//! value, so sampled norms err on the large side.

use crate::domain::{BoundaryGeometry, DomainSpec};
use crate::grid::{Grid, NodeKind, Sample};
use crate::linalg::{dot, sym_eigen, Mat};
use crate::maps::{BoundaryMap, SmoothMap};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// Number of deterministic restarts for the quadratic-form supremum.
pub const RESTARTS: usize = 32;

/// Directions in the dense verification of the quadratic-form supremum.
pub const DENSE_DIRECTIONS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HypothesisError {
    #[error("delta {delta} outside (0, {delta0})")]
    DeltaOutOfRange { delta: f64, delta0: f64 },
    #[error("margin c = {0} outside (0, 1)")]
    MarginOutOfRange(f64),
    #[error("barrier parameters violate 1 - 4 c0 (1 + mu) delta > 0 (value {0})")]
    BarrierPositivity(f64),
    #[error("quadratic-form supremum not verified: power iteration {power}, dense sampling {dense}")]
    SupremumMismatch { power: f64, dense: f64 },
    #[error("no sample points in the requested region")]
    EmptyRegion,
}

/// Where a sup-norm is taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// `E_δ = {x ∈ Ē : d(x) < δ}`.
    Band(f64),
    /// All of `Ē`.
    All,
}

/// Largest singular value.
pub fn spectral_norm(a: &Mat) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    let ata = a.transpose().matmul(a);
    sym_eigen(&ata).0[0].max(0.0).sqrt()
}

fn max_abs_eig(q: &Mat) -> f64 {
    let (vals, _) = sym_eigen(q);
    vals.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `|(τᵀQ_A τ)_A|` for a unit direction.
fn stacked(forms: &[Mat], tau: &[f64]) -> f64 {
    forms
        .iter()
        .map(|q| dot(tau, &q.mul_vec(tau)).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn normalize(v: &mut [f64]) -> bool {
    let l = dot(v, v).sqrt();
    if l > 0.0 && l.is_finite() {
        v.iter_mut().for_each(|x| *x /= l);
        true
    } else {
        false
    }
}

/// Deterministic starting directions: coordinate axes, then a
/// low-discrepancy sequence in the cube mapped to the sphere.
fn start_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    for i in 0..n.min(count) {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        out.push(e);
    }
    // additive recurrence with the generalized golden ratio of dimension n
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (n as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=n).map(|k| phi.powi(-(k as i32)).fract()).collect();
    let mut k = 1usize;
    while out.len() < count {
        let mut v: Vec<f64> = alpha
            .iter()
            .map(|a| 2.0 * (0.5 + k as f64 * a).fract() - 1.0)
            .collect();
        k += 1;
        if normalize(&mut v) {
            out.push(v);
        }
    }
    out
}

/// Shifted power iteration for `max_{|τ|=1} Σ_A (τᵀQ_Aτ)²` from the given
/// starts. Returns the square root of the best value found.
fn power_sup(forms: &[Mat], starts: &[Vec<f64>]) -> f64 {
    let shift = 3.0 * forms.iter().map(|q| q.norm().powi(2)).sum::<f64>();
    if shift == 0.0 {
        return 0.0;
    }
    let mut best: f64 = 0.0;
    for s in starts {
        let mut tau = s.clone();
        let mut prev = stacked(forms, &tau);
        for _ in 0..2000 {
            let mut next: Vec<f64> = tau.iter().map(|t| shift * t).collect();
            for q in forms {
                let qt = q.mul_vec(&tau);
                let val = dot(&tau, &qt);
                next.iter_mut().zip(&qt).for_each(|(a, b)| *a += val * b);
            }
            if !normalize(&mut next) {
                break;
            }
            tau = next;
            let cur = stacked(forms, &tau);
            if (cur - prev).abs() <= 1e-15 * cur.max(1e-300) {
                prev = cur;
                break;
            }
            prev = cur;
        }
        best = best.max(prev);
    }
    best
}

fn dense_sup(forms: &[Mat], n: usize) -> f64 {
    if n == 2 {
        return (0..DENSE_DIRECTIONS)
            .map(|k| {
                let th = std::f64::consts::PI * k as f64 / DENSE_DIRECTIONS as f64;
                stacked(forms, &[th.cos(), th.sin()])
            })
            .fold(0.0, f64::max);
    }
    start_directions(n, DENSE_DIRECTIONS)
        .iter()
        .map(|t| stacked(forms, t))
        .fold(0.0, f64::max)
}

/// `sup_{|τ|=1} |D²ψ(τ,τ)|` for stacked symmetric forms `Q_A`, with the
/// vector norm taken across components.
///
/// A single form reduces to its largest absolute eigenvalue. Several forms
/// use shifted power iteration from [`RESTARTS`] fixed directions, checked
/// against [`DENSE_DIRECTIONS`] sampled directions.
pub fn quadratic_sup(forms: &[Mat]) -> Result<f64, HypothesisError> {
    let Some(first) = forms.first() else {
        return Ok(0.0);
    };
    let n = first.rows();
    if forms.len() == 1 || n == 1 {
        return Ok(quadratic_sup_fast(forms));
    }
    let power = power_sup(forms, &start_directions(n, RESTARTS));
    let dense = dense_sup(forms, n);
    if dense > power + 1e-6 * power.max(1.0) {
        return Err(HypothesisError::SupremumMismatch { power, dense });
    }
    Ok(power.max(dense))
}

/// Unverified variant used per sample point; starts from the axes and the
/// dominant eigenvectors of each form.
pub(crate) fn quadratic_sup_fast(forms: &[Mat]) -> f64 {
    let Some(first) = forms.first() else {
        return 0.0;
    };
    let n = first.rows();
    if n == 1 {
        return forms.iter().map(|q| q[(0, 0)].powi(2)).sum::<f64>().sqrt();
    }
    if forms.len() == 1 {
        return max_abs_eig(first);
    }
    let mut starts = start_directions(n, n + 2);
    for q in forms {
        let (vals, vecs) = sym_eigen(q);
        let k = if vals[0].abs() >= vals[n - 1].abs() { 0 } else { n - 1 };
        starts.push(vecs.column(k));
    }
    power_sup(forms, &starts)
}

/// Largest absolute eigenvalue of each Hessian block.
fn component_sups(hess: &[Mat]) -> Vec<f64> {
    hess.iter().map(max_abs_eig).collect()
}

/// Per-sample data for the boundary map on `Ē`.
#[derive(Debug, Clone)]
pub struct SampleCloud {
    pub m: usize,
    /// 0 for nodes and boundary points, 1 for midpoints.
    pub level: Vec<u8>,
    pub depth: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub d2_comp: Vec<Vec<f64>>,
    pub positions: Vec<Vec<f64>>,
}

impl SampleCloud {
    pub fn build(psi: &BoundaryMap, grid: &Grid) -> SampleCloud {
        let n = grid.n();
        let mut positions: Vec<(Vec<f64>, u8)> = Vec::new();
        for node in grid.closure_nodes() {
            positions.push((grid.position(node), 0));
        }
        for p in &grid.points {
            positions.push((p.x.clone(), 0));
        }
        for node in grid.closure_nodes() {
            let x = grid.position(node);
            for axis in 0..n {
                if let Some(q) = grid.neighbour(node, axis, 1) {
                    if grid.kinds[q] != NodeKind::Outside {
                        let mut mid = x.clone();
                        mid[axis] += 0.5 * grid.h[axis];
                        if grid.spec.contains(&mid) {
                            positions.push((mid, 1));
                        }
                    }
                }
            }
        }
        for &p in &grid.interior {
            let x = grid.position(p);
            for (axis, arms) in grid.stencil(p).axes.iter().enumerate() {
                for (k, arm) in arms.iter().enumerate() {
                    if let Sample::Point(_) = arm.sample {
                        let mut mid = x.clone();
                        let s = if k == 0 { -1.0 } else { 1.0 };
                        mid[axis] += 0.5 * s * arm.dist;
                        positions.push((mid, 1));
                    }
                }
            }
        }
        let spec = &grid.spec;
        let data: Vec<_> = positions
            .par_iter()
            .map(|(x, _)| {
                let jet = psi.jet(x);
                let d1 = spectral_norm(&jet.jac);
                let d2 = quadratic_sup_fast(&jet.hess);
                let d2c = component_sups(&jet.hess);
                let depth = (-spec.sdf(x)).max(0.0);
                (depth, jet.value, d1, d2, d2c)
            })
            .collect();
        let mut cloud = SampleCloud {
            m: psi.m(),
            level: Vec::with_capacity(data.len()),
            depth: Vec::with_capacity(data.len()),
            values: Vec::with_capacity(data.len()),
            d1: Vec::with_capacity(data.len()),
            d2: Vec::with_capacity(data.len()),
            d2_comp: Vec::with_capacity(data.len()),
            positions: Vec::with_capacity(data.len()),
        };
        for ((x, level), (depth, v, d1, d2, d2c)) in positions.into_iter().zip(data) {
            cloud.level.push(level);
            cloud.depth.push(depth);
            cloud.values.push(v);
            cloud.d1.push(d1);
            cloud.d2.push(d2);
            cloud.d2_comp.push(d2c);
            cloud.positions.push(x);
        }
        cloud
    }

    fn in_region(&self, k: usize, region: Region) -> bool {
        match region {
            Region::All => true,
            Region::Band(delta) => self.depth[k] < delta,
        }
    }

    /// Two-level sampled supremum of `field` with the refinement gap added.
    fn refined_sup(&self, region: Region, field: impl Fn(usize) -> f64) -> Option<(f64, f64)> {
        let mut coarse = f64::NEG_INFINITY;
        let mut fine = f64::NEG_INFINITY;
        for k in 0..self.level.len() {
            if !self.in_region(k, region) {
                continue;
            }
            let v = field(k);
            fine = fine.max(v);
            if self.level[k] == 0 {
                coarse = coarse.max(v);
            }
        }
        if fine == f64::NEG_INFINITY {
            return None;
        }
        if coarse == f64::NEG_INFINITY {
            coarse = fine;
        }
        let gap = (fine - coarse).max(0.0);
        Some((fine + gap, gap))
    }

    /// Per-component range `sup ψ^A − inf ψ^A` over level-0 samples.
    pub fn oscillations(&self) -> Vec<f64> {
        (0..self.m)
            .map(|a| {
                let (lo, hi) = self
                    .values
                    .iter()
                    .zip(&self.level)
                    .filter(|(_, l)| **l == 0)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (v, _)| {
                        (lo.min(v[a]), hi.max(v[a]))
                    });
                if hi >= lo {
                    hi - lo
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Per-component bounds `(inf ψ^A, sup ψ^A)` over level-0 samples.
    pub fn component_bounds(&self) -> Vec<(f64, f64)> {
        (0..self.m)
            .map(|a| {
                self.values
                    .iter()
                    .zip(&self.level)
                    .filter(|(_, l)| **l == 0)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (v, _)| {
                        (lo.min(v[a]), hi.max(v[a]))
                    })
            })
            .collect()
    }

    pub fn norms(&self, region: Region) -> Result<SupNorms, HypothesisError> {
        let (dpsi, gap_d1) = self
            .refined_sup(region, |k| self.d1[k])
            .ok_or(HypothesisError::EmptyRegion)?;
        let (d2psi, gap_d2) = self
            .refined_sup(region, |k| self.d2[k])
            .ok_or(HypothesisError::EmptyRegion)?;
        let d2psi_comp = (0..self.m)
            .map(|a| {
                self.refined_sup(region, |k| self.d2_comp[k][a])
                    .map_or(0.0, |v| v.0)
            })
            .collect();
        Ok(SupNorms {
            dpsi,
            d2psi,
            d2psi_comp,
            gap_d1,
            gap_d2,
        })
    }

    /// Re-evaluates `|D²ψ|` at the sample attaining the sampled maximum with
    /// the verified routine, catching a missed maximum of the fast path.
    pub fn verify_d2_argmax(&self, psi: &BoundaryMap) -> Result<(), HypothesisError> {
        let Some(k) = (0..self.d2.len()).max_by(|&a, &b| self.d2[a].total_cmp(&self.d2[b])) else {
            return Ok(());
        };
        let verified = quadratic_sup(&psi.jet(&self.positions[k]).hess)?;
        if verified > self.d2[k] + 1e-6 * verified.max(1.0) {
            return Err(HypothesisError::SupremumMismatch {
                power: self.d2[k],
                dense: verified,
            });
        }
        Ok(())
    }
}

/// Sampled sup-norms of the boundary map over a region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupNorms {
    pub dpsi: f64,
    pub d2psi: f64,
    /// `sup |D²ψ^A|` per component.
    pub d2psi_comp: Vec<f64>,
    pub gap_d1: f64,
    pub gap_d2: f64,
}

/// `w(ψ) = max_A (sup ψ^A − inf ψ^A)` over the samples of `Ē`.
pub fn oscillation(psi: &BoundaryMap, grid: &Grid) -> f64 {
    let mut lo = vec![f64::INFINITY; psi.m()];
    let mut hi = vec![f64::NEG_INFINITY; psi.m()];
    let mut visit = |x: &[f64]| {
        let v = psi.value(x);
        for a in 0..v.len() {
            lo[a] = lo[a].min(v[a]);
            hi[a] = hi[a].max(v[a]);
        }
    };
    for node in grid.closure_nodes() {
        visit(&grid.position(node));
    }
    for p in &grid.points {
        visit(&p.x);
    }
    lo.iter()
        .zip(&hi)
        .map(|(l, h)| if h >= l { h - l } else { 0.0 })
        .fold(0.0, f64::max)
}

/// `(sup|Dψ|, sup|D²ψ|)` over a region, with the refinement gap included.
pub fn sup_norms(psi: &BoundaryMap, grid: &Grid, region: Region) -> Result<(f64, f64), HypothesisError> {
    let cloud = SampleCloud::build(psi, grid);
    cloud.verify_d2_argmax(psi)?;
    let s = cloud.norms(region)?;
    Ok((s.dpsi, s.d2psi))
}

/// `δ₀ = η₀` if `c₀ = 0`, else `½ min(1/(8c₀(1+μ)), η₀)`.
pub fn delta0(geom: &BoundaryGeometry, mu: f64) -> f64 {
    if geom.c0 == 0.0 {
        geom.eta0
    } else {
        0.5 * (1.0 / (8.0 * geom.c0 * (1.0 + mu))).min(geom.eta0)
    }
}

/// Which hypothesis a report evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Condition {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub condition: Condition,
    pub n: usize,
    pub w_psi: f64,
    pub sup_dpsi_band: f64,
    pub sup_d2psi_band: f64,
    pub sup_dpsi_global: f64,
    pub sup_d2psi_global: f64,
    pub delta: f64,
    pub delta0: f64,
    pub lhs_condition: f64,
    /// The right-hand threshold, 1 for condition A and `1 − c` for B.
    pub threshold: f64,
    pub pass: bool,
    /// `1 − lhs`, clamped at zero.
    pub eps: f64,
    /// Refinement gap already included in the sampled norms.
    pub sampling_gap: f64,
}

/// Boundary-map norms that enter the hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiNorms {
    pub w: f64,
    /// Per-component oscillation `ω^A`.
    pub omega: Vec<f64>,
    pub band: SupNorms,
    pub global: SupNorms,
}

impl PsiNorms {
    pub fn sample(psi: &BoundaryMap, grid: &Grid, delta: f64) -> Result<PsiNorms, HypothesisError> {
        let cloud = SampleCloud::build(psi, grid);
        Self::from_cloud(&cloud, psi, grid, delta)
    }

    pub fn from_cloud(
        cloud: &SampleCloud,
        psi: &BoundaryMap,
        grid: &Grid,
        delta: f64,
    ) -> Result<PsiNorms, HypothesisError> {
        cloud.verify_d2_argmax(psi)?;
        let omega = cloud.oscillations();
        let mut w = omega.iter().copied().fold(0.0, f64::max);
        let band = cloud.norms(Region::Band(delta))?;
        let mut global = cloud.norms(Region::All)?;
        // an exterior domain is unbounded; use closed-form bounds when known
        if let DomainSpec::Exterior { .. } = grid.spec {
            if let Some((gw, g1, g2)) = psi.global_bounds(grid.n()) {
                w = w.max(gw);
                global.dpsi = global.dpsi.max(g1);
                global.d2psi = global.d2psi.max(g2);
            }
        }
        Ok(PsiNorms {
            w,
            omega,
            band,
            global,
        })
    }
}

fn condition_a_lhs(n: usize, norms: &PsiNorms, delta: f64) -> f64 {
    let band = norms.w / delta + norms.band.dpsi + 32.0 * n as f64 * delta * norms.band.d2psi;
    band.max(norms.global.dpsi)
}

fn condition_b_lhs(n: usize, norms: &PsiNorms, delta: f64) -> f64 {
    norms.w / delta + norms.global.dpsi + 32.0 * n as f64 * delta * norms.global.d2psi
}

/// Evaluates condition A from precomputed norms. `μ = 1` throughout.
pub fn condition_a_report(n: usize, norms: &PsiNorms, geom: &BoundaryGeometry, delta: f64) -> Result<HypothesisReport, HypothesisError> {
    let d0 = delta0(geom, 1.0);
    if !(delta > 0.0 && delta < d0) {
        return Err(HypothesisError::DeltaOutOfRange { delta, delta0: d0 });
    }
    let lhs = condition_a_lhs(n, norms, delta);
    Ok(HypothesisReport {
        condition: Condition::A,
        n,
        w_psi: norms.w,
        sup_dpsi_band: norms.band.dpsi,
        sup_d2psi_band: norms.band.d2psi,
        sup_dpsi_global: norms.global.dpsi,
        sup_d2psi_global: norms.global.d2psi,
        delta,
        delta0: d0,
        lhs_condition: lhs,
        threshold: 1.0,
        pass: lhs < 1.0 && delta < d0,
        eps: (1.0 - lhs).max(0.0),
        sampling_gap: norms.band.gap_d1 + norms.band.gap_d2 + norms.global.gap_d1,
    })
}

/// Evaluates condition B from precomputed norms.
pub fn condition_b_report(
    n: usize,
    norms: &PsiNorms,
    geom: &BoundaryGeometry,
    delta: f64,
    c: f64,
) -> Result<HypothesisReport, HypothesisError> {
    if !(c > 0.0 && c < 1.0) {
        return Err(HypothesisError::MarginOutOfRange(c));
    }
    let d0 = delta0(geom, 1.0);
    if !(delta > 0.0 && delta < d0) {
        return Err(HypothesisError::DeltaOutOfRange { delta, delta0: d0 });
    }
    let lhs = condition_b_lhs(n, norms, delta);
    Ok(HypothesisReport {
        condition: Condition::B,
        n,
        w_psi: norms.w,
        sup_dpsi_band: norms.band.dpsi,
        sup_d2psi_band: norms.band.d2psi,
        sup_dpsi_global: norms.global.dpsi,
        sup_d2psi_global: norms.global.d2psi,
        delta,
        delta0: d0,
        lhs_condition: lhs,
        threshold: 1.0 - c,
        pass: lhs < 1.0 - c,
        eps: (1.0 - lhs).max(0.0),
        sampling_gap: norms.global.gap_d1 + norms.global.gap_d2,
    })
}

pub fn check_condition_a(
    psi: &BoundaryMap,
    grid: &Grid,
    geom: &BoundaryGeometry,
    delta: f64,
) -> Result<HypothesisReport, HypothesisError> {
    let d0 = delta0(geom, 1.0);
    if !(delta > 0.0 && delta < d0) {
        return Err(HypothesisError::DeltaOutOfRange { delta, delta0: d0 });
    }
    let norms = PsiNorms::sample(psi, grid, delta)?;
    condition_a_report(grid.n(), &norms, geom, delta)
}

pub fn check_condition_b(
    psi: &BoundaryMap,
    grid: &Grid,
    geom: &BoundaryGeometry,
    delta: f64,
    c: f64,
) -> Result<HypothesisReport, HypothesisError> {
    if !(c > 0.0 && c < 1.0) {
        return Err(HypothesisError::MarginOutOfRange(c));
    }
    let d0 = delta0(geom, 1.0);
    if !(delta > 0.0 && delta < d0) {
        return Err(HypothesisError::DeltaOutOfRange { delta, delta0: d0 });
    }
    let norms = PsiNorms::sample(psi, grid, delta)?;
    condition_b_report(grid.n(), &norms, geom, delta, c)
}

/// Scans `δ = δ₀·k/65`, `k = 1..=64`, and returns the one with the
/// smallest condition-A left side, with its report.
pub fn auto_delta_a(
    cloud: &SampleCloud,
    psi: &BoundaryMap,
    grid: &Grid,
    geom: &BoundaryGeometry,
) -> Result<(f64, HypothesisReport), HypothesisError> {
    let d0 = delta0(geom, 1.0);
    let mut best: Option<(f64, HypothesisReport)> = None;
    for k in 1..=64 {
        let delta = d0 * k as f64 / 65.0;
        let norms = match PsiNorms::from_cloud(cloud, psi, grid, delta) {
            Ok(v) => v,
            Err(HypothesisError::EmptyRegion) => continue,
            Err(e) => return Err(e),
        };
        let rep = condition_a_report(grid.n(), &norms, geom, delta)?;
        if best.as_ref().is_none_or(|(_, b)| rep.lhs_condition < b.lhs_condition) {
            best = Some((delta, rep));
        }
    }
    best.ok_or(HypothesisError::EmptyRegion)
}

/// Same scan for condition B with margin `c`.
pub fn auto_delta_b(
    cloud: &SampleCloud,
    psi: &BoundaryMap,
    grid: &Grid,
    geom: &BoundaryGeometry,
    c: f64,
) -> Result<(f64, HypothesisReport), HypothesisError> {
    let d0 = delta0(geom, 1.0);
    let mut best: Option<(f64, HypothesisReport)> = None;
    for k in 1..=64 {
        let delta = d0 * k as f64 / 65.0;
        let norms = match PsiNorms::from_cloud(cloud, psi, grid, delta) {
            Ok(v) => v,
            Err(HypothesisError::EmptyRegion) => continue,
            Err(e) => return Err(e),
        };
        let rep = condition_b_report(grid.n(), &norms, geom, delta, c)?;
        if best.as_ref().is_none_or(|(_, b)| rep.lhs_condition < b.lhs_condition) {
            best = Some((delta, rep));
        }
    }
    best.ok_or(HypothesisError::EmptyRegion)
}

/// Coefficient of the `δ|D²ψ|` term in the boundary gradient bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum GradientConstant {
    /// `16n(1+μ)`, valid for every domain.
    #[default]
    Unified,
    /// `4n(1+μ)`, valid when `c₀ = 0`.
    BallSharp,
}

/// `w/δ + |Dψ| + 16n(1+μ)δ|D²ψ|`, the ceiling for `sup_{∂E}|Df_t|`.
pub fn boundary_gradient_bound(w: f64, dpsi: f64, d2psi: f64, delta: f64, mu: f64, n: usize) -> f64 {
    boundary_gradient_bound_with(w, dpsi, d2psi, delta, mu, n, GradientConstant::Unified)
}

pub fn boundary_gradient_bound_with(
    w: f64,
    dpsi: f64,
    d2psi: f64,
    delta: f64,
    mu: f64,
    n: usize,
    constant: GradientConstant,
) -> f64 {
    let k = match constant {
        GradientConstant::Unified => 16.0,
        GradientConstant::BallSharp => 4.0,
    };
    w / delta + dpsi + k * n as f64 * (1.0 + mu) * delta * d2psi
}

/// `ν = 4(1+μ)δ² / (1 − 4c₀(1+μ)δ) · (c₀ω/δ + n|D²ψ^A|)`.
pub fn barrier_nu(omega: f64, delta: f64, mu: f64, c0: f64, n: usize, d2psi_a: f64) -> Result<f64, HypothesisError> {
    let denom = 1.0 - 4.0 * c0 * (1.0 + mu) * delta;
    if !(denom > 0.0) {
        return Err(HypothesisError::BarrierPositivity(denom));
    }
    Ok(4.0 * (1.0 + mu) * delta * delta / denom * (c0 * omega / delta + n as f64 * d2psi_a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta0_cases() {
        let g = BoundaryGeometry {
            eta0: 10.0,
            c0: 1.0,
            hess_d_bound: 0.5,
            strictly_convex: false,
        };
        assert_eq!(delta0(&g, 1.0), 1.0 / 32.0);
        let ball = BoundaryGeometry {
            eta0: 0.5,
            c0: 0.0,
            hess_d_bound: 2.0,
            strictly_convex: true,
        };
        assert_eq!(delta0(&ball, 1.0), 0.5);
    }

    #[test]
    fn gradient_bound_arithmetic() {
        let b = boundary_gradient_bound(0.1, 0.3, 0.05, 0.2, 1.0, 2);
        assert!((b - 1.44).abs() < 1e-12);
        let sharp = boundary_gradient_bound_with(0.1, 0.3, 0.05, 0.2, 1.0, 2, GradientConstant::BallSharp);
        assert!((sharp - (0.5 + 0.3 + 0.16)).abs() < 1e-12);
    }

    #[test]
    fn barrier_nu_arithmetic() {
        let nu = barrier_nu(0.1, 1.0 / 32.0, 1.0, 1.0, 2, 1.0).unwrap();
        assert!((nu - 0.65 / 12.0).abs() < 1e-15);
        assert!(barrier_nu(0.1, 0.2, 1.0, 1.0, 2, 1.0).is_err());
        assert_eq!(barrier_nu(0.3, 0.1, 1.0, 0.0, 2, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_sup_of_stacked_forms() {
        // (x², y²): sup over the circle of √(x⁴ + y⁴) is 1 at the axes
        let q1 = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        let q2 = Mat::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0]]);
        assert!((quadratic_sup(&[q1, q2]).unwrap() - 1.0).abs() < 1e-12);
        // (2xy, x² − y²): |·| = 1 on the whole circle
        let a = Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let b = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]);
        assert!((quadratic_sup(&[a, b]).unwrap() - 1.0).abs() < 1e-12);
    }
}
