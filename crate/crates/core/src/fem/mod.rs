//! Lagrange finite elements on triangles.

pub mod assembly;
pub mod quadrature;
pub mod space;
pub mod sparse;
pub mod vtk;

pub use assembly::{
    apply_dirichlet, assemble_convection, assemble_divergence, assemble_mass, assemble_stiffness,
    assemble_vector_laplacian_and_symgrad, DirichletSet, Weight,
};
pub use quadrature::{quadrature_rule, QuadratureRule};
pub use space::{integrate, Degree, FeFunction, FeSpace, QPoint, ValueKind};
pub use sparse::{CsrMatrix, TripletBuilder};
