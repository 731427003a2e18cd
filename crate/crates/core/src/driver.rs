//! Run orchestration for the four modes and the exit-code contract.
//!
//! Each `*_run` function does the numerical work and returns a typed
//! result; [`run`] turns that into a [`RunReport`] with an exit code, the
//! stdout summary line and the files to write.

use crate::config::{ConfigError, DensityCase, Mode, RunConfig};
use crate::domain::{estimate_c0_eta0, BoundaryGeometry, DomainSpec};
use crate::flow::{
    check_invariants, min_star_omega, run_to_steady, time_step, BarrierSetup, GraphState, InvariantContext,
    InvariantReport, MonitorSettings, Outcome, RunResult, CONSISTENCY_C,
};
use crate::grid::{build_grid, Grid, GridError};
use crate::hypothesis::{
    auto_delta_a, auto_delta_b, boundary_gradient_bound_with, condition_a_report, condition_b_report,
    spectral_norm, Condition, GradientConstant, HypothesisError, HypothesisReport, PsiNorms, SampleCloud,
};
use crate::jet::{shrinker_residual, singular_values, star_omega};
use crate::linalg::Mat;
use crate::maps::{BoundaryMap, SmoothMap};
use crate::output::{self, num, DecayRow};
use crate::shrinker::{gaussian_density, node_jet, DensityQuery, ShrinkerError};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_BLOW_UP: i32 = 3;
pub const EXIT_MAX_STEPS: i32 = 4;
/// Invariant violation, oracle mismatch or a non-monotone decay table.
pub const EXIT_VIOLATION: i32 = 5;
pub const EXIT_EXTERIOR_AGREEMENT: i32 = 6;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("grid: {0}")]
    Grid(#[from] GridError),
    #[error("hypothesis: {0}")]
    Hypothesis(#[from] HypothesisError),
    #[error("density: {0}")]
    Shrinker(#[from] ShrinkerError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl DriverError {
    pub fn exit_code(&self) -> i32 {
        match self {
            DriverError::Hypothesis(HypothesisError::SupremumMismatch { .. }) => EXIT_VIOLATION,
            DriverError::Shrinker(ShrinkerError::Undercoverage(_)) => EXIT_VIOLATION,
            _ => EXIT_CONFIG,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Run the flow even when the hypothesis check fails.
    pub force: bool,
    /// Overrides the configured output directory.
    pub out: Option<PathBuf>,
}

/// What a finished run hands back to the command line.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub exit_code: i32,
    pub summary: String,
    /// `(file name, contents)` pairs.
    pub files: Vec<(&'static str, String)>,
}

impl RunReport {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| *n == name).map(|(_, s)| s.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), DriverError> {
        for (name, text) in &self.files {
            output::write(dir, name, text).map_err(|source| DriverError::Io {
                path: dir.join(name),
                source,
            })?;
        }
        Ok(())
    }
}

/// Dispatches on `cfg.mode` and writes the artifacts when an output
/// directory is known.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunReport, DriverError> {
    let report = match cfg.mode {
        Mode::Solve => solve_report(cfg, opts.force)?,
        Mode::CheckHypothesis => check_report(cfg)?,
        Mode::DensityOracle => density_report(cfg)?,
        Mode::Exterior => exterior_report(cfg, opts.force)?,
    };
    if let Some(dir) = opts.out.as_ref().or(cfg.output.as_ref()) {
        report.write_to(dir)?;
    }
    Ok(report)
}

/// Hypothesis data shared by the solve and exterior modes.
#[derive(Debug, Clone)]
pub struct HypothesisStage {
    pub geometry: BoundaryGeometry,
    pub norms: PsiNorms,
    pub report: HypothesisReport,
}

/// Evaluates condition A (`condition = A`) or B on `grid`, scanning for `δ`
/// when the configuration leaves it open.
pub fn evaluate_hypothesis(
    cfg: &RunConfig,
    psi: &BoundaryMap,
    grid: &Grid,
    geometry: BoundaryGeometry,
    condition: Condition,
) -> Result<HypothesisStage, DriverError> {
    let cloud = SampleCloud::build(psi, grid);
    let n = grid.n();
    let c = cfg.hypothesis.c;
    let delta = match cfg.hypothesis.delta {
        Some(d) => d,
        None => match condition {
            Condition::A => auto_delta_a(&cloud, psi, grid, &geometry)?.0,
            Condition::B => auto_delta_b(&cloud, psi, grid, &geometry, c)?.0,
        },
    };
    let norms = PsiNorms::from_cloud(&cloud, psi, grid, delta)?;
    let report = match condition {
        Condition::A => condition_a_report(n, &norms, &geometry, delta)?,
        Condition::B => condition_b_report(n, &norms, &geometry, delta, c)?,
    };
    Ok(HypothesisStage {
        geometry,
        norms,
        report,
    })
}

/// `min *Ω(ψ)` over the pinned nodes and boundary points.
pub fn boundary_star_omega(psi: &dyn SmoothMap, grid: &Grid) -> f64 {
    let nodes = grid.boundary_nodes().map(|q| grid.position(q));
    let points = grid.points.iter().map(|p| p.x.clone());
    nodes
        .chain(points)
        .map(|x| star_omega(&singular_values(&psi.jet(&x)).lambdas))
        .fold(1.0, f64::min)
}

fn monitor_settings(
    cfg: &RunConfig,
    psi: &BoundaryMap,
    grid: &Grid,
    stage: &HypothesisStage,
) -> Result<MonitorSettings, DriverError> {
    let cloud_bounds = SampleCloud::build(psi, grid).component_bounds();
    let barrier = if cfg.hypothesis.barrier {
        Some(BarrierSetup::new(
            grid,
            psi,
            stage.report.delta,
            1.0,
            stage.geometry.c0,
            stage.norms.omega.clone(),
            &stage.norms.band.d2psi_comp,
        )?)
    } else {
        None
    };
    Ok(MonitorSettings {
        eps: stage.report.eps,
        bounds: cloud_bounds,
        barrier,
    })
}

fn invariant_context(
    cfg: &RunConfig,
    psi: &BoundaryMap,
    state0: &GraphState,
    stage: &HypothesisStage,
    dt: f64,
) -> InvariantContext {
    let grid = &*state0.grid;
    let h = grid.h.iter().copied().fold(0.0, f64::max);
    let n = grid.n();
    let constant = if cfg.hypothesis.ball_sharp_constant && stage.geometry.c0 == 0.0 {
        GradientConstant::BallSharp
    } else {
        GradientConstant::Unified
    };
    let rep = &stage.report;
    let (dpsi, d2psi) = match rep.condition {
        Condition::A => (rep.sup_dpsi_band, rep.sup_d2psi_band),
        Condition::B => (rep.sup_dpsi_global, rep.sup_d2psi_global),
    };
    InvariantContext {
        eps: rep.eps,
        tol_grid: 5.0 * h,
        tol_consistency: CONSISTENCY_C * (h * h + dt),
        tol_bounds: 1e-10,
        initial_star_omega: min_star_omega(state0),
        boundary_star_omega: boundary_star_omega(psi, grid),
        gradient_bound: boundary_gradient_bound_with(rep.w_psi, dpsi, d2psi, rep.delta, 1.0, n, constant),
        n,
    }
}

/// A flow run on one domain together with everything checked about it.
#[derive(Debug, Clone)]
pub struct SolveRun {
    pub grid: Arc<Grid>,
    pub hypothesis: HypothesisStage,
    /// `None` when the hypothesis failed and the run was not forced.
    pub flow: Option<FlowRun>,
}

#[derive(Debug, Clone)]
pub struct FlowRun {
    pub result: RunResult,
    pub context: InvariantContext,
    pub invariants: InvariantReport,
}

impl SolveRun {
    pub fn exit_code(&self) -> i32 {
        let Some(flow) = &self.flow else {
            return EXIT_HYPOTHESIS;
        };
        match flow.result.outcome {
            Outcome::BlowUp => EXIT_BLOW_UP,
            Outcome::MaxSteps => EXIT_MAX_STEPS,
            Outcome::Converged if !flow.invariants.pass() => EXIT_VIOLATION,
            Outcome::Converged => EXIT_OK,
        }
    }
}

/// Hypothesis check, flow to steady state and invariant audit on `spec`.
pub fn solve_on(
    cfg: &RunConfig,
    spec: &DomainSpec,
    psi: &BoundaryMap,
    condition: Condition,
    geometry: BoundaryGeometry,
    force: bool,
) -> Result<SolveRun, DriverError> {
    let grid = Arc::new(build_grid(spec, cfg.h)?);
    let hypothesis = evaluate_hypothesis(cfg, psi, &grid, geometry, condition)?;
    if !hypothesis.report.pass && !force {
        return Ok(SolveRun {
            grid,
            hypothesis,
            flow: None,
        });
    }
    let monitors = monitor_settings(cfg, psi, &grid, &hypothesis)?;
    let state0 = GraphState::from_map(grid.clone(), psi);
    let settings = cfg.flow.settings();
    let dt = time_step(&grid, settings.cfl);
    let context = invariant_context(cfg, psi, &state0, &hypothesis, dt);
    let result = run_to_steady(state0, &settings, &monitors);
    let invariants = check_invariants(&result.records, &context);
    Ok(SolveRun {
        grid,
        hypothesis,
        flow: Some(FlowRun {
            result,
            context,
            invariants,
        }),
    })
}

pub fn solve_run(cfg: &RunConfig, force: bool) -> Result<SolveRun, DriverError> {
    let spec = cfg.domain()?;
    let psi = cfg.boundary()?;
    solve_on(cfg, spec, psi, Condition::A, estimate_c0_eta0(spec), force)
}

fn last_record(flow: &FlowRun) -> (f64, f64) {
    flow.result
        .records
        .last()
        .map_or((f64::NAN, f64::NAN), |r| (r.residual_sup, r.max_lambda))
}

fn solve_report(cfg: &RunConfig, force: bool) -> Result<RunReport, DriverError> {
    let run = solve_run(cfg, force)?;
    let mut report = output::geometry_section(&run.hypothesis.geometry);
    report.push_str(&output::hypothesis_section(&run.hypothesis.report));
    let mut files = Vec::new();
    let summary = match &run.flow {
        None => {
            report.push_str("[flow]\nskipped = hypothesis failed\n");
            output::summary_line("solve", "hypothesis_failed", f64::NAN, f64::NAN)
        }
        Some(flow) => {
            report.push_str(&flow_section(flow));
            report.push_str(&output::invariant_section(&flow.invariants));
            files.push(("monitors.csv", output::monitors_csv(&flow.result.records)));
            files.push(("field.dat", output::field_dat(&flow.result.state, &run.hypothesis.geometry)));
            let (r, l) = last_record(flow);
            output::summary_line("solve", flow.result.outcome.label(), r, l)
        }
    };
    files.insert(0, ("report.txt", report));
    Ok(RunReport {
        exit_code: run.exit_code(),
        summary,
        files,
    })
}

fn flow_section(flow: &FlowRun) -> String {
    let (r, l) = last_record(flow);
    let mut s = format!(
        "[flow]\noutcome = {}\nsteps = {}\nt = {}\nresidual_sup = {}\nmax_lambda = {}\n",
        flow.result.outcome.label(),
        flow.result.steps,
        num(flow.result.state.t),
        num(r),
        num(l)
    );
    if let Some(e) = &flow.result.error {
        s.push_str(&format!("error = {e}\n"));
    }
    s.push_str(&format!(
        "tol_grid = {}\ntol_consistency = {}\ngradient_bound = {}\n",
        num(flow.context.tol_grid),
        num(flow.context.tol_consistency),
        num(flow.context.gradient_bound)
    ));
    s
}

fn check_report(cfg: &RunConfig) -> Result<RunReport, DriverError> {
    let spec = cfg.domain()?;
    let psi = cfg.boundary()?;
    let geometry = estimate_c0_eta0(spec);
    let (grid, condition) = match spec {
        DomainSpec::Exterior { .. } => {
            let r = cfg
                .exterior
                .as_ref()
                .and_then(|e| e.radii.last().copied())
                .and_then(|r| spec.with_truncation(r))
                .unwrap_or_else(|| spec.clone());
            (build_grid(&r, cfg.h)?, Condition::B)
        }
        _ => (build_grid(spec, cfg.h)?, Condition::A),
    };
    let stage = evaluate_hypothesis(cfg, psi, &grid, geometry, condition)?;
    let mut report = output::geometry_section(&geometry);
    report.push_str(&output::hypothesis_section(&stage.report));
    let outcome = if stage.report.pass { "pass" } else { "fail" };
    Ok(RunReport {
        exit_code: if stage.report.pass { EXIT_OK } else { EXIT_HYPOTHESIS },
        summary: output::summary_line("check", outcome, f64::NAN, f64::NAN),
        files: vec![("report.txt", report)],
    })
}

/// Computed and expected value of one oracle comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub case: DensityCase,
    pub computed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

/// Sup of the `c = 1` shrinker residual of the radius-2 sphere cap over the
/// interior nodes of `[−1, 1]²` at spacing `h`.
pub fn sphere_cap_residual(h: f64) -> Result<f64, DriverError> {
    let spec = DomainSpec::Box {
        lower: vec![-1.0, -1.0],
        upper: vec![1.0, 1.0],
    };
    let grid = Arc::new(build_grid(&spec, h)?);
    let cap = BoundaryMap::SphereCap {
        center: vec![0.0, 0.0],
        radius: 2.0,
    };
    let state = GraphState::from_map(grid.clone(), &cap);
    Ok(grid
        .interior
        .iter()
        .map(|&p| shrinker_residual(&node_jet(&state, p), 1.0)[..].iter().fold(0.0f64, |a, v| a.max(v.abs())))
        .fold(0.0, f64::max))
}

pub fn density_run(cfg: &RunConfig) -> Result<OracleResult, DriverError> {
    let d = cfg
        .density
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid("density mode needs [density]".into()))?;
    let square = DomainSpec::Box {
        lower: vec![-1.0, -1.0],
        upper: vec![1.0, 1.0],
    };
    let density = |spec: &DomainSpec, value: f64| -> Result<f64, DriverError> {
        let grid = Arc::new(build_grid(spec, cfg.h)?);
        let state = GraphState::from_map(grid, &BoundaryMap::Constant { value: vec![value] });
        let q = DensityQuery::new(vec![0.0; 3], d.time_gap)?;
        Ok(gaussian_density(&state, &q)?)
    };
    let (computed, expected, detail) = match d.case {
        DensityCase::Plane => (density(&square, 0.0)?, 1.0, "plane through the centre".to_string()),
        DensityCase::OffsetPlane => (
            density(&square, d.offset)?,
            (-d.offset * d.offset / (4.0 * d.time_gap)).exp(),
            format!("plane at fibre offset {}", d.offset),
        ),
        DensityCase::HalfPlane => {
            let half = DomainSpec::Box {
                lower: vec![0.0, -1.0],
                upper: vec![1.0, 1.0],
            };
            (density(&half, 0.0)?, 0.5, "half-plane, centre on the edge".to_string())
        }
        DensityCase::SphereCap => {
            let coarse = sphere_cap_residual(cfg.h)?;
            let fine = sphere_cap_residual(cfg.h / 2.0)?;
            let order = (coarse / fine).log2();
            return Ok(OracleResult {
                case: d.case,
                computed: order,
                expected: 2.0,
                tolerance: 0.2,
                pass: order >= 1.8,
                detail: format!("residual sup {} at h, {} at h/2", num(coarse), num(fine)),
            });
        }
    };
    Ok(OracleResult {
        case: d.case,
        computed,
        expected,
        tolerance: d.tolerance,
        pass: (computed - expected).abs() <= d.tolerance,
        detail,
    })
}

fn density_report(cfg: &RunConfig) -> Result<RunReport, DriverError> {
    let r = density_run(cfg)?;
    let report = format!(
        "[density]\ncase = {:?}\ndetail = {}\ncomputed = {}\nexpected = {}\ntolerance = {}\npass = {}\n",
        r.case,
        r.detail,
        num(r.computed),
        num(r.expected),
        num(r.tolerance),
        r.pass
    );
    Ok(RunReport {
        exit_code: if r.pass { EXIT_OK } else { EXIT_VIOLATION },
        summary: output::summary_line("density", if r.pass { "pass" } else { "mismatch" }, (r.computed - r.expected).abs(), f64::NAN),
        files: vec![("report.txt", report)],
    })
}

/// Per-shell summary in an exterior run.
#[derive(Debug, Clone)]
pub struct ShellSummary {
    pub radius: f64,
    pub outcome: Outcome,
    pub residual: f64,
    pub max_lambda: f64,
    pub delta0: f64,
    pub invariants_pass: bool,
}

#[derive(Debug, Clone)]
pub struct ExteriorReport {
    pub hypothesis: HypothesisReport,
    pub shells: Vec<ShellSummary>,
    /// Sup difference of shells `k` and `k+1` on their common nodes
    /// inside the first truncation sphere.
    pub agreement: Vec<f64>,
    /// Asymptotic gradient estimate, `m × n`.
    pub l_estimate: Mat,
    /// RMS of `|Df − l|_F` over the fitting annulus.
    pub fit_residual: f64,
    pub decay: Vec<DecayRow>,
    /// Final state on the largest shell.
    pub state: Option<GraphState>,
    pub exit_code: i32,
}

impl ExteriorReport {
    pub fn decay_non_increasing(&self) -> bool {
        self.decay.windows(2).all(|w| w[1].sup_dev <= w[0].sup_dev)
    }

    pub fn agreement_non_increasing(&self) -> bool {
        self.agreement.windows(2).all(|w| w[1] <= w[0])
    }
}

fn radius_from(center: &[f64], x: &[f64]) -> f64 {
    x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt()
}

/// Sup difference on interior nodes common to both shells with radius
/// below `r1`. The shells share one lattice, so nodes are matched exactly.
pub fn shell_agreement(a: &GraphState, b: &GraphState, center: &[f64], r1: f64) -> f64 {
    let (ga, gb) = (&*a.grid, &*b.grid);
    let mut sup: f64 = 0.0;
    for &p in &ga.interior {
        let x = ga.position(p);
        if radius_from(center, &x) >= r1 {
            continue;
        }
        let Some(q) = gb.node_at_lattice(&ga.lattice(p)) else {
            continue;
        };
        if gb.kinds[q] != crate::grid::NodeKind::Interior {
            continue;
        }
        for (u, v) in a.value(p).iter().zip(b.value(q)) {
            sup = sup.max((u - v).abs());
        }
    }
    sup
}

/// Component-wise least-squares constant fit of `Df` over interior nodes
/// with radius in `[r_lo, r_hi]`; returns `(l, rms |Df − l|_F)`.
pub fn fit_asymptotic_gradient(state: &GraphState, center: &[f64], r_lo: f64, r_hi: f64) -> (Mat, f64) {
    let grid = &*state.grid;
    let (n, m) = (grid.n(), state.m);
    let jacs: Vec<Mat> = grid
        .interior
        .iter()
        .filter(|&&p| {
            let r = radius_from(center, &grid.position(p));
            r >= r_lo && r <= r_hi
        })
        .map(|&p| node_jet(state, p).jac)
        .collect();
    if jacs.is_empty() {
        return (Mat::zeros(m, n), f64::NAN);
    }
    let mut l = Mat::zeros(m, n);
    for j in &jacs {
        l = Mat::from_fn(m, n, |a, i| l[(a, i)] + j[(a, i)]);
    }
    let l = l.scale(1.0 / jacs.len() as f64);
    let ms = jacs.iter().map(|j| j.sub(&l).norm().powi(2)).sum::<f64>() / jacs.len() as f64;
    (l, ms.sqrt())
}

/// `sup |Df − l|` (operator norm) over interior nodes within `h/2` of the
/// probe sphere of radius `rho`.
pub fn probe_deviation(state: &GraphState, center: &[f64], l: &Mat, rho: f64) -> DecayRow {
    let grid = &*state.grid;
    let band = 0.5 * grid.h.iter().copied().fold(0.0, f64::max);
    let mut sup: f64 = 0.0;
    let mut samples = 0;
    for &p in &grid.interior {
        if (radius_from(center, &grid.position(p)) - rho).abs() > band {
            continue;
        }
        samples += 1;
        sup = sup.max(spectral_norm(&node_jet(state, p).jac.sub(l)));
    }
    DecayRow {
        radius: rho,
        sup_dev: sup,
        samples,
    }
}

pub fn exterior_run(cfg: &RunConfig, force: bool) -> Result<ExteriorReport, DriverError> {
    let spec = cfg.domain()?;
    let psi = cfg.boundary()?;
    let ext = cfg
        .exterior
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid("exterior mode needs [exterior]".into()))?;
    let DomainSpec::Exterior { center, .. } = spec else {
        return Err(ConfigError::Invalid("exterior mode needs an exterior domain".into()).into());
    };
    let geometry = estimate_c0_eta0(spec);
    let mut shells = Vec::new();
    let mut states: Vec<GraphState> = Vec::new();
    let mut first_report: Option<HypothesisReport> = None;
    let mut exit_code = EXIT_OK;
    for &r in &ext.radii {
        let shell = spec
            .with_truncation(r)
            .ok_or_else(|| ConfigError::Invalid(format!("cannot truncate at {r}")))?;
        let run = solve_on(cfg, &shell, psi, Condition::B, geometry, force)?;
        let rep = run.hypothesis.report.clone();
        first_report.get_or_insert_with(|| rep.clone());
        let code = run.exit_code();
        let Some(flow) = run.flow else {
            exit_code = EXIT_HYPOTHESIS;
            break;
        };
        let (residual, max_lambda) = last_record(&flow);
        shells.push(ShellSummary {
            radius: r,
            outcome: flow.result.outcome.clone(),
            residual,
            max_lambda,
            delta0: rep.delta0,
            invariants_pass: flow.invariants.pass(),
        });
        states.push(flow.result.state);
        if code != EXIT_OK {
            exit_code = code;
            break;
        }
    }
    let hypothesis = first_report.expect("radius schedule is non-empty");
    let agreement: Vec<f64> = states
        .windows(2)
        .map(|w| shell_agreement(&w[0], &w[1], center, ext.radii[0]))
        .collect();
    let (mut l_estimate, mut fit_residual, mut decay) = (Mat::zeros(psi.m(), spec.dim()), f64::NAN, Vec::new());
    if exit_code == EXIT_OK {
        let last = states.last().expect("at least one shell solved");
        let mut probes = ext.probes.clone();
        probes.sort_by(f64::total_cmp);
        let r_hi = probes[probes.len() - 1];
        let r_lo = if probes.len() > 1 { probes[probes.len() - 2] } else { 0.5 * r_hi };
        (l_estimate, fit_residual) = fit_asymptotic_gradient(last, center, r_lo, r_hi);
        decay = probes
            .iter()
            .map(|&rho| probe_deviation(last, center, &l_estimate, rho))
            .collect();
    }
    let mut report = ExteriorReport {
        hypothesis,
        shells,
        agreement,
        l_estimate,
        fit_residual,
        decay,
        state: states.pop(),
        exit_code,
    };
    if report.exit_code == EXIT_OK {
        if !report.agreement_non_increasing() {
            report.exit_code = EXIT_EXTERIOR_AGREEMENT;
        } else if !report.decay_non_increasing() {
            report.exit_code = EXIT_VIOLATION;
        }
    }
    Ok(report)
}

fn exterior_report(cfg: &RunConfig, force: bool) -> Result<RunReport, DriverError> {
    let ext = exterior_run(cfg, force)?;
    let spec = cfg.domain()?;
    let geometry = estimate_c0_eta0(spec);
    let mut report = output::geometry_section(&geometry);
    report.push_str(&output::hypothesis_section(&ext.hypothesis));
    report.push_str("[exterior]\n");
    for s in &ext.shells {
        report.push_str(&format!(
            "shell r={} outcome={} residual={} max_lambda={} delta0={} invariants={}\n",
            num(s.radius),
            s.outcome.label(),
            num(s.residual),
            num(s.max_lambda),
            num(s.delta0),
            if s.invariants_pass { "pass" } else { "FAIL" }
        ));
    }
    for (k, a) in ext.agreement.iter().enumerate() {
        report.push_str(&format!("agreement {}-{} = {}\n", k + 1, k + 2, num(*a)));
    }
    report.push_str(&format!(
        "l_estimate = {}\nfit_residual = {}\n",
        output::matrix_line(&ext.l_estimate),
        num(ext.fit_residual)
    ));
    let mut files = vec![("report.txt", report), ("exterior.csv", output::exterior_csv(&ext.decay))];
    if let Some(state) = &ext.state {
        files.push(("field.dat", output::field_dat(state, &geometry)));
    }
    let last = ext.shells.last();
    let outcome = last.map_or("hypothesis_failed", |s| s.outcome.label());
    let summary = output::summary_line(
        "exterior",
        outcome,
        last.map_or(f64::NAN, |s| s.residual),
        last.map_or(f64::NAN, |s| s.max_lambda),
    );
    Ok(RunReport {
        exit_code: ext.exit_code,
        summary,
        files,
    })
}
