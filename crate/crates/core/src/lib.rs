//! Immersed finite elements for elliptic interface eigenvalue problems.
//!
//! The discretization uses Crouzeix–Raviart P1-nonconforming elements on
//! triangulations that do not resolve the material interface. On elements cut
//! by the interface the shape functions are replaced by piecewise-affine
//! functions that are continuous at the two cut points and carry a continuous
//! conormal flux across the chord joining them. An interior-penalty term on
//! edge jumps stabilizes the nonconforming space, and the resulting symmetric
//! generalized eigenproblem `A x = λ M x` is solved with a shift-invert block
//! Krylov iteration.
//!
//! Module map:
//!
//! - [`geometry`]: level-set interfaces, edge crossings, cut-element decomposition
//! - [`mesh`]: triangulations of squares and disks with edge topology
//! - [`basis`]: standard and immersed local shape functions, interpolation
//! - [`assembly`]: sparse stiffness, penalty, mass and load assembly, broken norms
//! - [`eigsolve`]: generalized symmetric eigensolver and source solver
//! - [`oracle`]: Bessel functions and exact eigenvalues for circular interfaces
//! - [`study`]: convergence studies, reports, and field export

pub mod assembly;
pub mod basis;
pub mod eigsolve;
pub mod error;
pub mod geometry;
pub mod mesh;
pub mod oracle;
pub mod quadrature;
pub mod sparse;
pub mod study;

pub use error::{Error, Result};
pub use geometry::{LevelSetInterface, Point, Side};
pub use mesh::Mesh;
