use mssflow::domain::{estimate_c0_eta0, DomainSpec};
use mssflow::grid::{build_grid, Grid};
use proptest::prelude::*;
use std::sync::OnceLock;

fn shapes() -> Vec<DomainSpec> {
    vec![
        DomainSpec::Ball {
            center: vec![0.1, -0.2],
            radius: 1.3,
        },
        DomainSpec::Ball {
            center: vec![0.0, 0.0, 0.0],
            radius: 1.0,
        },
        DomainSpec::Annulus {
            center: vec![0.0, 0.0],
            inner: 0.5,
            outer: 1.0,
        },
        DomainSpec::Exterior {
            center: vec![0.0, 0.0],
            inner: 1.0,
            truncation: 5.0,
        },
        DomainSpec::Box {
            lower: vec![-1.0, 0.0],
            upper: vec![1.0, 1.5],
        },
    ]
}

/// A point at depth `t·η₀` below a boundary point picked by `angle`.
fn band_point(spec: &DomainSpec, angle: f64, t: f64, outer: bool) -> Vec<f64> {
    let eta0 = estimate_c0_eta0(spec).eta0;
    let depth = t * eta0;
    match spec {
        DomainSpec::Ball { center, radius } => {
            let mut x = center.clone();
            x[0] += (radius - depth) * angle.cos();
            x[1] += (radius - depth) * angle.sin();
            x
        }
        DomainSpec::Annulus { center, inner, outer: r }
        | DomainSpec::Exterior { center, inner, truncation: r } => {
            let rho = if outer { r - depth } else { inner + depth };
            vec![center[0] + rho * angle.cos(), center[1] + rho * angle.sin()]
        }
        DomainSpec::Box { lower, upper } => {
            // middle of the lower x₂ face, shifted along it away from corners
            let s = 0.5 + 0.2 * angle.sin();
            vec![lower[0] + s * (upper[0] - lower[0]), lower[1] + depth]
        }
    }
}

fn planar_grids() -> &'static [Grid] {
    static GRIDS: OnceLock<Vec<Grid>> = OnceLock::new();
    GRIDS.get_or_init(|| {
        shapes()
            .iter()
            .filter(|s| s.dim() == 2)
            .map(|s| build_grid(s, 0.03125).unwrap())
            .collect()
    })
}

fn distance(spec: &DomainSpec, x: &[f64]) -> f64 {
    -spec.sdf(x)
}

fn fd_hessian(spec: &DomainSpec, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let at = |di: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(i, s) in di {
            y[i] += s * h;
        }
        distance(spec, &y)
    };
    let d0 = distance(spec, x);
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        (at(&[(i, 1.0)]) - 2.0 * d0 + at(&[(i, -1.0)])) / (h * h)
                    } else {
                        (at(&[(i, 1.0), (j, 1.0)]) - at(&[(i, 1.0), (j, -1.0)]) - at(&[(i, -1.0), (j, 1.0)])
                            + at(&[(i, -1.0), (j, -1.0)]))
                            / (4.0 * h * h)
                    }
                })
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn gradient_of_distance_is_a_unit_vector(k in 0usize..5, angle in 0.0..std::f64::consts::TAU, t in 0.0..0.95f64, outer: bool) {
        let spec = &shapes()[k];
        let x = band_point(spec, angle, t, outer);
        let dj = spec.distance_jet(&x).unwrap();
        let g: f64 = dj.grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((g - 1.0).abs() < 1e-10);
        prop_assert!((dj.d - distance(spec, &x)).abs() < 1e-12);
    }

    #[test]
    fn hessian_of_distance_converges_at_second_order(k in 0usize..5, angle in 0.0..std::f64::consts::TAU, t in 0.1..0.9f64, outer: bool) {
        let spec = &shapes()[k];
        let x = band_point(spec, angle, t, outer);
        let hess = spec.distance_jet(&x).unwrap().hess;
        let err = |h: f64| {
            let fd = fd_hessian(spec, &x, h);
            let mut e: f64 = 0.0;
            for (i, row) in fd.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    e = e.max((v - hess[(i, j)]).abs());
                }
            }
            e
        };
        let (e1, e2) = (err(0.02), err(0.01));
        // ratio 4 in exact arithmetic; allow rounding in the second differences
        prop_assert!(e2 <= e1 / 3.0 || e2 < 1e-7, "errors {e1} then {e2}");
    }

    #[test]
    fn band_membership_is_monotone(k in 0usize..4, d1 in 0.0..0.3f64, extra in 0.0..0.3f64) {
        let grid = &planar_grids()[k];
        let d2 = d1 + extra;
        for node in 0..grid.len() {
            if grid.in_band(node, d1) {
                prop_assert!(grid.in_band(node, d2));
            }
        }
    }
}

#[test]
fn exterior_reach_is_independent_of_truncation() {
    let base = DomainSpec::Exterior {
        center: vec![0.0, 0.0],
        inner: 1.0,
        truncation: 4.5,
    };
    let g0 = estimate_c0_eta0(&base);
    for r in [5.25, 6.0, 40.0] {
        assert_eq!(estimate_c0_eta0(&base.with_truncation(r).unwrap()), g0);
    }
}
