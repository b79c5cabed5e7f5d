//! Dominant invariant subspaces of large sparse symmetric matrices by
//! Riemannian optimization on the Grassmann manifold.
//!
//! The central objective is `φ(X) = −½ Tr(XᵀAX)` over orthonormal `n × p`
//! blocks. Steepest descent and Polak–Ribière conjugate gradient take exact
//! steps along the polar retraction; subspace iteration (optionally with a
//! Chebyshev filter) and LOBCG serve as baselines.

pub mod dense;
pub mod error;
pub mod linesearch;
pub mod operators;
pub mod solvers;
pub mod subspace;
pub mod theory;

pub use error::{Error, Result};
pub use linesearch::{
    bracket, compute_branch_coefficients, dphi_of_mu, get_mu, phi_of_mu, Bracket, BranchCoefficients,
    LineSearchOutcome, StepKind,
};
pub use operators::{block_matvec, load_matrix_market, AffineOperator, FdGrid, SparseSymmetricMatrix};
pub use solvers::{
    chebyshev_filter, lobcg, matvec_cache_update, rcg, rsd, si_chebyshev, solve, solve_observed, subspace_iteration,
    IterationRecord, IterationView, Method, SolveResult, SolverConfig, SolverTrace, Target,
};
pub use subspace::{
    objective, polar_retraction, principal_angles, random_orthonormal, rayleigh_ritz, riemannian_gradient,
    sym_eig_small, tangent_project, GradientEval, OrthonormalBasis, PrincipalAngles, RitzPairs,
    SmallSpectralDecomp, TangentBlock,
};
