//! Mean curvature flow solver for the Dirichlet problem of the minimal
//! surface system `g^{ij}(f) f^A_{ij} = 0` in arbitrary codimension.
//!
//! A boundary map `ψ: Ē → R^m` is checked against the smallness
//! hypotheses, its graph is flowed by the non-parametric mean curvature
//! flow with the boundary pinned, and the steady limit is returned as a
//! minimal graph. Along the way the solver monitors the quantities that
//! the existence theory controls: singular values, `*Ω`, the S-tensor
//! margin, area decay and the boundary gradient barrier.
//!
//! ```
//! use mssflow::domain::DomainSpec;
//! use mssflow::jet::{singular_values, star_omega, PointJet};
//! use mssflow::linalg::Mat;
//!
//! let jet = PointJet::affine(vec![0.0, 0.0], vec![0.0], Mat::from_rows(&[vec![0.75, 0.0]]));
//! let sd = singular_values(&jet);
//! assert_eq!(sd.lambdas, vec![0.75, 0.0]);
//! assert!((star_omega(&sd.lambdas) - 0.8).abs() < 1e-15);
//!
//! let ball = DomainSpec::Ball { center: vec![0.0, 0.0], radius: 1.0 };
//! assert!(ball.sdf(&[0.5, 0.0]) < 0.0);
//! ```

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod domain;
pub mod driver;
pub mod flow;
pub mod grid;
pub mod hypothesis;
pub mod jet;
pub mod linalg;
pub mod maps;
pub mod output;
pub mod shrinker;
