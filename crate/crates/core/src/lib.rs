//! Numerical workbench for gauge theories of the centrally extended
//! Poincare group.
//!
//! The modules follow the flow of a computation: an [`algebra`] is gauged by
//! field configurations built from [`expr`] strings ([`fields`]), whose
//! curvatures and torsion come from [`geometry`]. [`gauge`] checks
//! invariance numerically and [`dynamics`] evaluates field equations and
//! integrates charged test particles.
//!
//! Conventions: signature diag(+,-,-,-), `c = 1`, tetrads `k[row][col]` with
//! the row as the upper coordinate index.

pub mod algebra;
pub mod dynamics;
pub mod exec;
pub mod expr;
pub mod fields;
pub mod gauge;
pub mod geometry;
pub mod grid;
pub mod tensor;

pub use algebra::{build_extended_poincare, build_poincare, AlgebraSpec, BracketConvention, LambdaVector};
pub use exec::Exec;
pub use expr::{parse, Expr};
pub use fields::{FieldConfig, FieldError, PointFrame};
pub use grid::GridSpec;
