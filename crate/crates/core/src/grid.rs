//! Cartesian grids over analytic domains with Shortley–Weller arms.
//!
//! Nodes are classified from the signed distance. Interior nodes carry a
//! stencil: per axis a minus and plus arm, per axis pair four diagonal
//! arms. An arm whose segment leaves `Ē` is cut at the boundary crossing,
//! which becomes an off-grid boundary point with a pinned value.

use crate::domain::{DomainError, DomainSpec};
use thiserror::Error;

/// Nodes with `|sdf| ≤ PIN_TOL·h` are pinned boundary nodes.
pub const PIN_TOL: f64 = 1e-6;

/// Interior nodes required across the thinnest extent of the domain.
pub const MIN_NODES_ACROSS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("spacing must be positive and finite, got {0}")]
    BadSpacing(f64),
    #[error("under-resolved: {across} interior nodes across the thinnest extent, need {MIN_NODES_ACROSS}")]
    UnderResolved { across: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Boundary,
    Outside,
}

/// Where a stencil arm reads its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sample {
    Node(u32),
    Point(u32),
}

/// Axis arm with its length (not a fraction of `h`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arm {
    pub sample: Sample,
    pub dist: f64,
}

/// Diagonal arm with its signed displacement along the two axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagArm {
    pub sample: Sample,
    pub di: f64,
    pub dj: f64,
}

/// Signs of the four diagonal arms of a pair, in storage order. The first
/// two serve `g^{ij} ≥ 0`, the last two `g^{ij} < 0`.
pub const DIAG_SIGNS: [(f64, f64); 4] = [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)];

#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    /// `axes[i] = [minus, plus]`.
    pub axes: Vec<[Arm; 2]>,
    /// Pairs `(i, j)`, `i < j`, in lexicographic order.
    pub diags: Vec<[DiagArm; 4]>,
}

impl Stencil {
    pub fn touches_boundary(&self, grid: &Grid) -> bool {
        self.axes.iter().flatten().any(|a| match a.sample {
            Sample::Point(_) => true,
            Sample::Node(q) => grid.kinds[q as usize] == NodeKind::Boundary,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    pub x: Vec<f64>,
    pub component: u8,
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub spec: DomainSpec,
    /// Node counts per axis.
    pub dims: Vec<usize>,
    /// Spacing per axis.
    pub h: Vec<f64>,
    pub origin: Vec<f64>,
    /// Lattice coordinate of node 0; shared lattices share this frame.
    pub lattice_offset: Vec<i64>,
    pub kinds: Vec<NodeKind>,
    /// Interior node indices in increasing order.
    pub interior: Vec<usize>,
    /// `stencil_of[node]` indexes `stencils` for interior nodes.
    pub stencil_of: Vec<u32>,
    pub stencils: Vec<Stencil>,
    pub points: Vec<BoundaryPoint>,
    /// Quadrature weight per node, zero for outside nodes.
    pub weights: Vec<f64>,
}

impl Grid {
    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn h_min(&self) -> f64 {
        self.h.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn coords(&self, node: usize) -> Vec<usize> {
        let mut rest = node;
        self.dims
            .iter()
            .map(|&d| {
                let c = rest % d;
                rest /= d;
                c
            })
            .collect()
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (c, d) in coords.iter().zip(&self.dims) {
            idx += c * stride;
            stride *= d;
        }
        idx
    }

    pub fn position(&self, node: usize) -> Vec<f64> {
        self.coords(node)
            .iter()
            .enumerate()
            .map(|(i, &c)| self.origin[i] + c as f64 * self.h[i])
            .collect()
    }

    /// Integer lattice coordinates in the shared frame.
    pub fn lattice(&self, node: usize) -> Vec<i64> {
        self.coords(node)
            .iter()
            .zip(&self.lattice_offset)
            .map(|(&c, o)| c as i64 + o)
            .collect()
    }

    /// Node at a lattice coordinate, if it lies on this grid.
    pub fn node_at_lattice(&self, lat: &[i64]) -> Option<usize> {
        let mut coords = Vec::with_capacity(lat.len());
        for ((l, o), &d) in lat.iter().zip(&self.lattice_offset).zip(&self.dims) {
            let c = l - o;
            if c < 0 || c as usize >= d {
                return None;
            }
            coords.push(c as usize);
        }
        Some(self.index(&coords))
    }

    /// Neighbour one step along `axis` in direction `dir = ±1`.
    pub fn neighbour(&self, node: usize, axis: usize, dir: i64) -> Option<usize> {
        let mut c = self.coords(node);
        let k = c[axis] as i64 + dir;
        if k < 0 || k as usize >= self.dims[axis] {
            return None;
        }
        c[axis] = k as usize;
        Some(self.index(&c))
    }

    pub fn stencil(&self, node: usize) -> &Stencil {
        &self.stencils[self.stencil_of[node] as usize]
    }

    /// Interior and boundary nodes, the samples of `Ē` that sit on the lattice.
    pub fn closure_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.kinds[i] != NodeKind::Outside)
    }

    /// Pinned boundary nodes.
    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.kinds[i] == NodeKind::Boundary)
    }

    /// Distance to `∂E` at a node, clamped at zero.
    pub fn depth(&self, node: usize) -> f64 {
        (-self.spec.sdf(&self.position(node))).max(0.0)
    }

    /// Membership in the band `E_δ = {x ∈ Ē : d(x) < δ}`.
    pub fn in_band(&self, node: usize, delta: f64) -> bool {
        self.kinds[node] != NodeKind::Outside && self.depth(node) < delta
    }

    /// Interior nodes whose axis arms reach a boundary value.
    pub fn first_layer(&self) -> Vec<usize> {
        self.interior
            .iter()
            .copied()
            .filter(|&p| self.stencil(p).touches_boundary(self))
            .collect()
    }

    /// Sum of quadrature weights, an approximation of `|E|`.
    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// The grid under `x ↦ ι(x − y)`.
    pub fn dilated(&self, iota: f64, y: &[f64]) -> Grid {
        let map = |x: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(a, b)| iota * (a - b)).collect() };
        let spec = match &self.spec {
            DomainSpec::Box { lower, upper } => DomainSpec::Box {
                lower: map(lower),
                upper: map(upper),
            },
            DomainSpec::Ball { center, radius } => DomainSpec::Ball {
                center: map(center),
                radius: iota * radius,
            },
            DomainSpec::Annulus {
                center,
                inner,
                outer,
            } => DomainSpec::Annulus {
                center: map(center),
                inner: iota * inner,
                outer: iota * outer,
            },
            DomainSpec::Exterior {
                center,
                inner,
                truncation,
            } => DomainSpec::Exterior {
                center: map(center),
                inner: iota * inner,
                truncation: iota * truncation,
            },
        };
        let vol = iota.powi(self.n() as i32);
        let scale_arm = |a: Arm| Arm {
            dist: iota * a.dist,
            ..a
        };
        Grid {
            spec,
            dims: self.dims.clone(),
            h: self.h.iter().map(|h| iota * h).collect(),
            origin: map(&self.origin),
            lattice_offset: self.lattice_offset.clone(),
            kinds: self.kinds.clone(),
            interior: self.interior.clone(),
            stencil_of: self.stencil_of.clone(),
            stencils: self
                .stencils
                .iter()
                .map(|s| Stencil {
                    axes: s.axes.iter().map(|[a, b]| [scale_arm(*a), scale_arm(*b)]).collect(),
                    diags: s
                        .diags
                        .iter()
                        .map(|d| {
                            d.map(|a| DiagArm {
                                di: iota * a.di,
                                dj: iota * a.dj,
                                ..a
                            })
                        })
                        .collect(),
                })
                .collect(),
            points: self
                .points
                .iter()
                .map(|p| BoundaryPoint {
                    x: map(&p.x),
                    component: p.component,
                })
                .collect(),
            weights: self.weights.iter().map(|w| w * vol).collect(),
        }
    }
}

/// Locates the first boundary crossing on the segment `p → p + disp`, as a
/// fraction of the segment, or `None` if the segment stays inside `Ē`.
fn crossing(spec: &DomainSpec, p: &[f64], disp: &[f64], end_outside: bool) -> Option<f64> {
    const SUB: usize = 4;
    let at = |t: f64| -> Vec<f64> { p.iter().zip(disp).map(|(a, d)| a + t * d).collect() };
    let mut hi = None;
    for k in 1..SUB {
        let t = k as f64 / SUB as f64;
        if spec.sdf(&at(t)) > 0.0 {
            hi = Some(t);
            break;
        }
    }
    let mut hi = match (hi, end_outside) {
        (Some(t), _) => t,
        (None, true) => 1.0,
        (None, false) => return None,
    };
    let mut lo = hi - 1.0 / SUB as f64;
    if lo < 0.0 {
        lo = 0.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if spec.sdf(&at(mid)) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-17 {
            break;
        }
    }
    Some(lo.max(f64::MIN_POSITIVE))
}

/// Builds the grid. Boxes get per-axis spacings that divide the edges
/// exactly; curved domains use the lattice `center + h·Z^n`.
pub fn build_grid(spec: &DomainSpec, target_h: f64) -> Result<Grid, GridError> {
    spec.validate()?;
    if !(target_h > 0.0 && target_h.is_finite()) {
        return Err(GridError::BadSpacing(target_h));
    }
    let n = spec.dim();
    let (lo, hi) = spec.bounds();

    let (dims, h, origin, lattice_offset) = match spec {
        DomainSpec::Box { .. } => {
            let mut dims = Vec::new();
            let mut h = Vec::new();
            for i in 0..n {
                let len = hi[i] - lo[i];
                let cells = (len / target_h).round().max(1.0) as usize;
                dims.push(cells + 1);
                h.push(len / cells as f64);
            }
            (dims, h, lo.clone(), vec![0i64; n])
        }
        DomainSpec::Ball { center, .. }
        | DomainSpec::Annulus { center, .. }
        | DomainSpec::Exterior { center, .. } => {
            let radius = 0.5 * (hi[0] - lo[0]);
            let k = (radius / target_h).ceil() as i64 + 1;
            let dims = vec![(2 * k + 1) as usize; n];
            let origin = center.iter().map(|c| c - k as f64 * target_h).collect();
            (dims, vec![target_h; n], origin, vec![-k; n])
        }
    };

    let across = match spec {
        DomainSpec::Box { .. } => dims
            .iter()
            .map(|d| d.saturating_sub(2))
            .min()
            .unwrap_or(0),
        _ => ((spec.thinnest() / target_h).ceil() as usize).saturating_sub(1),
    };
    if across < MIN_NODES_ACROSS {
        return Err(GridError::UnderResolved { across });
    }

    let total: usize = dims.iter().product();
    let mut grid = Grid {
        spec: spec.clone(),
        dims,
        h,
        origin,
        lattice_offset,
        kinds: vec![NodeKind::Outside; total],
        interior: Vec::new(),
        stencil_of: vec![u32::MAX; total],
        stencils: Vec::new(),
        points: Vec::new(),
        weights: vec![0.0; total],
    };
    let hmin = grid.h_min();

    let is_box = matches!(spec, DomainSpec::Box { .. });
    for node in 0..total {
        let kind = if is_box {
            let c = grid.coords(node);
            if c.iter().zip(&grid.dims).any(|(&k, &d)| k == 0 || k + 1 == d) {
                NodeKind::Boundary
            } else {
                NodeKind::Interior
            }
        } else {
            let s = spec.sdf(&grid.position(node));
            if s.abs() <= PIN_TOL * hmin {
                NodeKind::Boundary
            } else if s < 0.0 {
                NodeKind::Interior
            } else {
                NodeKind::Outside
            }
        };
        grid.kinds[node] = kind;
        if kind == NodeKind::Interior {
            grid.interior.push(node);
        }
    }

    // arms; boundary points are deduplicated per (node, direction) only,
    // since the same crossing is seen from one node per direction
    let interior = grid.interior.clone();
    let mut stencils = Vec::with_capacity(interior.len());
    let mut points: Vec<BoundaryPoint> = Vec::new();
    for &p in &interior {
        let xp = grid.position(p);
        let cp = grid.coords(p);
        let mut arm_to = |offsets: &[(usize, i64)]| -> (Sample, f64) {
            let mut c = cp.clone();
            let mut disp = vec![0.0; n];
            for &(axis, dir) in offsets {
                c[axis] = (c[axis] as i64 + dir) as usize;
                disp[axis] = dir as f64 * grid.h[axis];
            }
            let q = grid.index(&c);
            let kind = grid.kinds[q];
            let cut = if is_box {
                None
            } else {
                crossing(spec, &xp, &disp, kind == NodeKind::Outside)
            };
            match cut {
                Some(t) if !(kind == NodeKind::Boundary && t > 1.0 - 1e-9) => {
                    let x: Vec<f64> = xp.iter().zip(&disp).map(|(a, d)| a + t * d).collect();
                    let component = spec.component(&x);
                    points.push(BoundaryPoint { x, component });
                    (Sample::Point((points.len() - 1) as u32), t)
                }
                _ => (Sample::Node(q as u32), 1.0),
            }
        };
        let mut axes = Vec::with_capacity(n);
        for i in 0..n {
            let (sm, tm) = arm_to(&[(i, -1)]);
            let (sp, tp) = arm_to(&[(i, 1)]);
            axes.push([
                Arm {
                    sample: sm,
                    dist: tm * grid.h[i],
                },
                Arm {
                    sample: sp,
                    dist: tp * grid.h[i],
                },
            ]);
        }
        let mut diags = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                let arms = DIAG_SIGNS.map(|(si, sj)| {
                    let (s, t) = arm_to(&[(i, si as i64), (j, sj as i64)]);
                    DiagArm {
                        sample: s,
                        di: t * si * grid.h[i],
                        dj: t * sj * grid.h[j],
                    }
                });
                diags.push(arms);
            }
        }
        grid.stencil_of[p] = stencils.len() as u32;
        stencils.push(Stencil { axes, diags });
    }
    grid.stencils = stencils;
    grid.points = points;
    grid.weights = quadrature_weights(&grid, is_box);
    Ok(grid)
}

/// Trapezoid weights on boxes; inside fraction of each dual cell on curved
/// domains, with outside nodes handing their share to the deepest
/// neighbour in `Ē`.
fn quadrature_weights(grid: &Grid, is_box: bool) -> Vec<f64> {
    let n = grid.n();
    let cell: f64 = grid.h.iter().product();
    let mut w = vec![0.0; grid.len()];
    if is_box {
        for (node, wt) in w.iter_mut().enumerate() {
            let c = grid.coords(node);
            *wt = c
                .iter()
                .zip(&grid.dims)
                .zip(&grid.h)
                .map(|((&k, &d), h)| if k == 0 || k + 1 == d { 0.5 * h } else { *h })
                .product();
        }
        return w;
    }
    const SUB: usize = 8;
    let samples = SUB.pow(n as u32);
    let fraction = |node: usize| -> f64 {
        let x = grid.position(node);
        let mut inside = 0usize;
        let mut y = vec![0.0; n];
        for s in 0..samples {
            let mut r = s;
            for i in 0..n {
                let k = r % SUB;
                r /= SUB;
                y[i] = x[i] + ((k as f64 + 0.5) / SUB as f64 - 0.5) * grid.h[i];
            }
            if grid.spec.sdf(&y) <= 0.0 {
                inside += 1;
            }
        }
        inside as f64 / samples as f64
    };
    let reach = grid.h.iter().map(|h| h * h).sum::<f64>().sqrt();
    for node in 0..grid.len() {
        let s = grid.spec.sdf(&grid.position(node));
        if s > reach {
            continue;
        }
        let wt = if s < -reach { cell } else { fraction(node) * cell };
        if wt == 0.0 {
            continue;
        }
        if grid.kinds[node] != NodeKind::Outside {
            w[node] += wt;
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for axis in 0..n {
            for dir in [-1, 1] {
                if let Some(q) = grid.neighbour(node, axis, dir) {
                    if grid.kinds[q] != NodeKind::Outside {
                        let sq = grid.spec.sdf(&grid.position(q));
                        if best.is_none_or(|(b, _)| sq < b) {
                            best = Some((sq, q));
                        }
                    }
                }
            }
        }
        if let Some((_, q)) = best {
            w[q] += wt;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_box_counts() {
        let g = build_grid(
            &DomainSpec::Box {
                lower: vec![0.0, 0.0],
                upper: vec![1.0, 1.0],
            },
            1.0 / 64.0,
        )
        .unwrap();
        assert_eq!(g.interior.len(), 63 * 63);
        assert_eq!(g.boundary_nodes().count(), 4 * 64);
        assert!((g.measure() - 1.0).abs() < 1e-12);
        assert!(g.points.is_empty());
    }

    #[test]
    fn ball_arms_hit_the_circle() {
        let spec = DomainSpec::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        };
        let g = build_grid(&spec, 1.0 / 32.0).unwrap();
        for &p in &g.interior {
            assert!(spec.sdf(&g.position(p)) < 0.0);
            for arms in &g.stencil(p).axes {
                for a in arms {
                    let frac = a.dist / g.h[0];
                    assert!(frac > 0.0 && frac <= 1.0);
                    if let Sample::Point(k) = a.sample {
                        assert!(spec.sdf(&g.points[k as usize].x).abs() < 1e-14);
                    }
                }
            }
        }
        assert!((g.measure() - std::f64::consts::PI).abs() < 2e-3);
    }

    #[test]
    fn annulus_components_are_tagged() {
        let spec = DomainSpec::Annulus {
            center: vec![0.0, 0.0],
            inner: 0.5,
            outer: 1.0,
        };
        let g = build_grid(&spec, 1.0 / 32.0).unwrap();
        let inner = g.points.iter().filter(|p| p.component == 0).count();
        let outer = g.points.iter().filter(|p| p.component == 1).count();
        assert!(inner > 0 && outer > inner);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let spec = DomainSpec::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        };
        assert!(matches!(
            build_grid(&spec, 0.3),
            Err(GridError::UnderResolved { .. })
        ));
    }
}
