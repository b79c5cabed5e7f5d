//! Dense reference spectra and executable checks of the convergence theory.

pub mod checks;
pub mod oracle;
pub mod rate;
pub mod suites;

pub use checks::{
    a_factor, spectral_norm, check_global_sublinear, check_grad_norm_bound, check_growth_and_dominance, check_local_rate,
    check_sufficient_decrease, lobcg_one_step_dominance, point_at_distance, CheckReport, CheckSummary,
    DominanceSample, C_Q,
};
pub use oracle::{dense_eig_oracle, fd_spectrum, random_spd, SpectrumInfo};
pub use rate::{fit_rate, RateFit};
pub use suites::{run_suite, Suite};
