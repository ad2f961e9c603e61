//! Fully discrete finite element scheme for the Keller–Segel chemotaxis
//! system
//!
//! ```text
//!   ∂t u - Δu + ∇·(u ∇v) = 0,    ∂t v - Δv + v = u    in Ω = [-1/2, 1/2]^2
//! ```
//!
//! with homogeneous Neumann conditions. Space is discretized with P1 elements
//! on acute macroelement meshes, mass lumping and a barycentric chemotaxis
//! quadrature; time with a linear, decoupled semi-implicit step. On acute
//! meshes the `u`-matrix is an M-matrix for small enough `k / h^2`, which
//! gives nodal positivity; the [`diagnostics`] module tracks positivity,
//! mass, `L¹` bounds and the discrete energies along a run.
//!
//! ```no_run
//! use ks_core::{build_macro_mesh, initial, run, MacroKind, SchemeConfig};
//!
//! let mesh = build_macro_mesh(50, MacroKind::Acute);
//! let (u0, v0) = initial::interpolate_pair(&mesh, initial::nonblowup_data(70.0))?;
//! let out = run(&mesh, u0, v0, SchemeConfig::new(1e-4, 50))?;
//! assert!(out.records.iter().all(|r| r.positivity_u));
//! # Ok::<(), ks_core::Error>(())
//! ```

pub mod diagnostics;
pub mod error;
pub mod fem;
pub mod initial;
pub mod linsolve;
pub mod mesh;
pub mod scheme;
pub mod sparse;
pub mod vtk;

pub use diagnostics::{
    emit_records, energy_e0, energy_e1, moser_trudinger_pair, read_records, restriction_indicators,
    IndicatorConfig, MoserTrudinger, RestrictionIndicators, StepRecord,
};
pub use error::{Error, Result, SolverError, SolverFailure};
pub use fem::{
    assemble_chemotaxis, assemble_lumped_mass, assemble_stiffness, discrete_laplacian,
    nodal_interpolate, norms, FeFunction, LumpedMass, Norms, P1Space,
};
pub use linsolve::SolverKind;
pub use mesh::{
    acuteness_report, build_macro_mesh, load_mesh, mesh_size, save_mesh, AngleReport, MacroKind,
    Mesh, Point2,
};
pub use scheme::{run, run_with, u_step, v_step, RunOutput, Scheme, SchemeConfig, SchemeState};
pub use sparse::{SparseOperator, SparsityPattern};
