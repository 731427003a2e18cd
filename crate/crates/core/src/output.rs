//! Plain-text artifacts: monitor CSV, field dump, run report, exterior
//! decay table.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! bits give equal text and the files can be compared byte for byte.

use crate::domain::BoundaryGeometry;
use crate::flow::{GraphState, InvariantReport, MonitorRecord};
use crate::hypothesis::HypothesisReport;
use crate::linalg::Mat;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

/// Shortest round-trip text for `x`, in exponent form outside
/// `[1e-4, 1e16)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !x.is_finite() || (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub const MONITOR_HEADER: &str =
    "t,max_lambda,min_star_omega,min_p_eig,area,dissipation,residual_sup,boundary_grad_sup,barrier_min,dt";

pub fn monitors_csv(records: &[MonitorRecord]) -> String {
    let mut s = String::with_capacity(64 * (records.len() + 1));
    s.push_str(MONITOR_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            num(r.t),
            num(r.max_lambda),
            num(r.min_star_omega),
            num(r.min_p_eig),
            num(r.area),
            num(r.dissipation),
            num(r.residual_sup),
            num(r.boundary_grad_sup),
            num(r.barrier_min),
            num(r.dt)
        );
    }
    s
}

/// Header lines `# key=value`, then one row `index x_1..x_n f^1..f^m` per
/// node of `Ē`.
pub fn field_dat(state: &GraphState, geometry: &BoundaryGeometry) -> String {
    let grid = &*state.grid;
    let mut s = String::new();
    let _ = writeln!(s, "# n={} m={}", grid.n(), state.m);
    let dims: Vec<String> = grid.dims.iter().map(|d| d.to_string()).collect();
    let _ = writeln!(s, "# dims={}", dims.join(" "));
    let hs: Vec<String> = grid.h.iter().map(|&h| num(h)).collect();
    let _ = writeln!(s, "# h={}", hs.join(" "));
    let _ = writeln!(s, "# t={}", num(state.t));
    let domain = toml::to_string(&grid.spec).unwrap_or_default();
    let _ = writeln!(s, "# domain={}", domain.trim().replace('\n', "; "));
    let _ = writeln!(
        s,
        "# eta0={} c0={} hess_d_bound={} strictly_convex={}",
        num(geometry.eta0),
        num(geometry.c0),
        num(geometry.hess_d_bound),
        geometry.strictly_convex
    );
    for node in grid.closure_nodes() {
        let _ = write!(s, "{node}");
        for x in grid.position(node) {
            let _ = write!(s, " {}", num(x));
        }
        for v in state.value(node) {
            let _ = write!(s, " {}", num(*v));
        }
        s.push('\n');
    }
    s
}

pub fn hypothesis_section(rep: &HypothesisReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[hypothesis]");
    let _ = writeln!(s, "condition = {:?}", rep.condition);
    let _ = writeln!(s, "w_psi = {}", num(rep.w_psi));
    let _ = writeln!(s, "sup_dpsi_band = {}", num(rep.sup_dpsi_band));
    let _ = writeln!(s, "sup_d2psi_band = {}", num(rep.sup_d2psi_band));
    let _ = writeln!(s, "sup_dpsi_global = {}", num(rep.sup_dpsi_global));
    let _ = writeln!(s, "sup_d2psi_global = {}", num(rep.sup_d2psi_global));
    let _ = writeln!(s, "delta = {}", num(rep.delta));
    let _ = writeln!(s, "delta0 = {}", num(rep.delta0));
    let _ = writeln!(s, "lhs = {}", num(rep.lhs_condition));
    let _ = writeln!(s, "threshold = {}", num(rep.threshold));
    let _ = writeln!(s, "sampling_gap = {}", num(rep.sampling_gap));
    let _ = writeln!(s, "eps = {}", num(rep.eps));
    let _ = writeln!(s, "pass = {}", rep.pass);
    s
}

pub fn geometry_section(g: &BoundaryGeometry) -> String {
    format!(
        "[geometry]\neta0 = {}\nc0 = {}\nhess_d_bound = {}\nstrictly_convex = {}\n",
        num(g.eta0),
        num(g.c0),
        num(g.hess_d_bound),
        g.strictly_convex
    )
}

pub fn invariant_section(rep: &InvariantReport) -> String {
    let mut s = String::from("[invariants]\n");
    for c in &rep.clauses {
        let _ = writeln!(
            s,
            "{} = {} worst={} limit={} at_t={}",
            c.name,
            if c.pass { "pass" } else { "FAIL" },
            num(c.worst),
            num(c.limit),
            num(c.worst_t)
        );
    }
    let _ = writeln!(s, "all = {}", if rep.pass() { "pass" } else { "FAIL" });
    s
}

/// One row of the exterior decay table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRow {
    pub radius: f64,
    pub sup_dev: f64,
    pub samples: usize,
}

pub fn exterior_csv(rows: &[DecayRow]) -> String {
    let mut s = String::from("probe_radius,sup_df_minus_l,samples\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{}", num(r.radius), num(r.sup_dev), r.samples);
    }
    s
}

pub fn matrix_line(m: &Mat) -> String {
    let rows: Vec<String> = (0..m.rows())
        .map(|i| {
            let cols: Vec<String> = (0..m.cols()).map(|j| num(m[(i, j)])).collect();
            format!("[{}]", cols.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

pub fn summary_line(mode: &str, outcome: &str, residual: f64, max_lambda: f64) -> String {
    format!(
        "mode={mode} outcome={outcome} residual={} max_lambda={}",
        num(residual),
        num(max_lambda)
    )
}

pub fn write(dir: &Path, name: &str, contents: &str) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)
}
