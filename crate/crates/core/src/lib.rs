//! Nonsmooth blind deconvolution toolkit.
//!
//! Recovering a pair (w̄, x̄) from bilinear measurements
//! y_i = <a_i, w><x, b_i> can be posed as minimizing the average absolute
//! residual — a nonsmooth, nonconvex but well-structured objective. This
//! crate implements the pieces needed to study and solve that formulation:
//!
//! * [`linalg`] — signal pairs and an O(d) rank-two factorization of the
//!   residual matrix w xᵀ - w̄ x̄ᵀ, with a closed-form 2 × 2 SVD;
//! * [`population`] — the infinite-data (population) objective in closed
//!   form, its subgradients, and a classifier for its stationary points;
//! * [`sample`] — Gaussian measurement ensembles, the empirical objective
//!   and its subgradients, and a classifier for approximate stationarity;
//! * [`solver`] — the Polyak subgradient method, which needs no step-size
//!   tuning because the minimum value is known to be zero;
//! * [`experiments`] — seeded, reproducible experiment drivers: recovery
//!   phase grids over (oversampling ratio, initialization scale), Monte
//!   Carlo estimates, and landscape surveys.
//!
//! Randomness is always explicit: every driver takes a 64-bit seed and
//! produces identical results for identical seeds, independent of thread
//! count (see [`rng`]).

pub mod error;
pub mod experiments;
pub mod fmt;
pub mod linalg;
pub mod population;
pub mod rng;
pub mod sample;
pub mod solver;

pub use error::{Error, Result};
pub use experiments::{
    init_cube, init_gaussian, landscape_survey, monte_carlo_population, phase_grid_csv,
    run_phase_grid, InitKind, MonteCarloEstimate, PhaseCell, PhaseGridConfig, SurveyHistogram,
};
pub use linalg::{
    orthonormal_basis_2, rank_two_decompose, singular_values, svd_2x2, Mat2,
    RankTwoRepresentation, SignalPair, SingularPair, TwoByTwoSvd,
};
pub use population::{
    classify_population_point, elliptic_e, population_gradient_sv, population_objective,
    population_series, population_subgradient, population_value_sv, PopulationClass,
    PopulationGradientSV, PopulationWitness,
};
pub use rng::{derive_seed, gaussian_vector, SeededRng};
pub use sample::{
    classify_sample_point, concentration_gap, delta_rate, generate_measurements, sample_subgradient,
    sample_value, EnsembleRecord, MeasurementEnsemble, SampleClass, SampleFlag, SampleWitness,
};
pub use solver::{
    polyak_step, rebalance, relative_error, run_polyak, PolyakConfig, SolveResult, Termination,
    TraceRecord,
};
