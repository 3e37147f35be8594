//! Randomized experiment drivers: initialization schemes, the (ν, C)
//! phase-transition grid, Monte Carlo estimation of the population
//! objective, and landscape surveys that classify where solver runs land.
//!
//! # Seeding discipline
//!
//! Every random quantity is drawn from a child generator derived from a
//! single master seed and an index path (see [`crate::rng::derive_seed`]):
//!
//! * grid trials use `[nu_index, c_index, trial, stream]`,
//! * surveys use `[0, 0]` for the shared ensemble and `[1, start]` for inits,
//!
//! with stream 0 for the measurement ensemble and stream 1 for the starting
//! point. Outputs are therefore a pure function of the configuration —
//! independent of worker count, scheduling, and execution order — and any
//! cell or trial can be reproduced in isolation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fmt::g17;
use crate::linalg::{SignalPair, SingularPair};
use crate::rng::SeededRng;
use crate::sample::{classify_sample_point, delta_rate, generate_measurements};
use crate::solver::{run_polyak, PolyakConfig};
use crate::Result;

/// Stream tag for the measurement ensemble of a trial.
const STREAM_ENSEMBLE: u64 = 0;
/// Stream tag for the starting point of a trial.
const STREAM_INIT: u64 = 1;

/// Which distribution supplies starting points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    /// Each coordinate i.i.d. uniform on [-ν, ν].
    Cube,
    /// w ~ N(0, (ν²/d1) I), x ~ N(0, (ν²/d2) I), so both factor norms
    /// concentrate near ν.
    Gaussian,
}

impl std::str::FromStr for InitKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "cube" => Ok(Self::Cube),
            "gaussian" => Ok(Self::Gaussian),
            other => Err(format!("unknown init kind `{other}` (expected cube|gaussian)")),
        }
    }
}

impl std::fmt::Display for InitKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Cube => "cube",
            Self::Gaussian => "gaussian",
        })
    }
}

/// Uniform starting point on the cube [-ν, ν]^(d1+d2); w coordinates are
/// drawn first, then x.
pub fn init_cube(rng: &mut SeededRng, nu: f64, d1: usize, d2: usize) -> SignalPair {
    assert!(nu > 0.0, "nu must be positive");
    let w = (0..d1).map(|_| rng.uniform_in(-nu, nu)).collect();
    let x = (0..d2).map(|_| rng.uniform_in(-nu, nu)).collect();
    SignalPair::new(w, x)
}

/// Gaussian starting point with per-factor scaling ν/√d, w first. The norms
/// of both factors then concentrate near ν regardless of dimension.
pub fn init_gaussian(rng: &mut SeededRng, nu: f64, d1: usize, d2: usize) -> SignalPair {
    assert!(nu > 0.0, "nu must be positive");
    let sw = nu / (d1 as f64).sqrt();
    let sx = nu / (d2 as f64).sqrt();
    let w = (0..d1).map(|_| sw * rng.standard_normal()).collect();
    let x = (0..d2).map(|_| sx * rng.standard_normal()).collect();
    SignalPair::new(w, x)
}

fn draw_init(kind: InitKind, rng: &mut SeededRng, nu: f64, d1: usize, d2: usize) -> SignalPair {
    match kind {
        InitKind::Cube => init_cube(rng, nu, d1, d2),
        InitKind::Gaussian => init_gaussian(rng, nu, d1, d2),
    }
}

/// Specification of a phase-transition grid run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGridConfig {
    pub d1: usize,
    pub d2: usize,
    /// Initialization scales (the ν axis).
    pub nu_values: Vec<f64>,
    /// Oversampling ratios C = m/(d1+d2) (the C axis).
    pub c_values: Vec<usize>,
    /// Random instances per cell.
    pub trials: usize,
    pub init_kind: InitKind,
    pub master_seed: u64,
    pub solver: PolyakConfig,
}

/// Aggregated outcome of one (ν, C) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub nu: f64,
    pub c: usize,
    /// Measurement count C·(d1+d2).
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    /// successes / trials.
    pub frequency: f64,
}

/// Run the full grid: for every (ν, C) cell and trial, generate a fresh
/// ensemble with truth (e1, e1) and m = C·(d1+d2) measurements, draw a
/// starting point, run the subgradient method, and tally successes.
///
/// Trials execute concurrently on the current rayon pool; the cell list is
/// always ν-major (all C for the first ν, then the next ν) and identical
/// across runs with the same config.
pub fn run_phase_grid(cfg: &PhaseGridConfig) -> Vec<PhaseCell> {
    assert!(cfg.d1 >= 1 && cfg.d2 >= 1, "dimensions must be positive");
    assert!(cfg.trials >= 1, "trials must be >= 1");
    assert!(
        !cfg.nu_values.is_empty() && cfg.nu_values.iter().all(|&v| v > 0.0),
        "nu_values must be nonempty and positive"
    );
    assert!(
        !cfg.c_values.is_empty() && cfg.c_values.iter().all(|&c| c >= 1),
        "c_values must be nonempty and >= 1"
    );

    let truth = SignalPair::canonical(cfg.d1, cfg.d2);
    let d_sum = cfg.d1 + cfg.d2;

    // One task per (cell, trial). Seeds depend only on the indices, and the
    // indexed collect puts outcomes back in task order, so scheduling cannot
    // influence the result.
    let mut tasks = Vec::with_capacity(cfg.nu_values.len() * cfg.c_values.len() * cfg.trials);
    for ni in 0..cfg.nu_values.len() {
        for ci in 0..cfg.c_values.len() {
            for t in 0..cfg.trials {
                tasks.push((ni, ci, t));
            }
        }
    }
    let outcomes: Vec<bool> = tasks
        .par_iter()
        .map(|&(ni, ci, t)| {
            let path = [ni as u64, ci as u64, t as u64];
            let m = cfg.c_values[ci] * d_sum;
            let ens_rng = SeededRng::derive(
                cfg.master_seed,
                &[path[0], path[1], path[2], STREAM_ENSEMBLE],
            );
            let ens = generate_measurements(ens_rng, &truth, m);
            let mut init_rng =
                SeededRng::derive(cfg.master_seed, &[path[0], path[1], path[2], STREAM_INIT]);
            let init = draw_init(cfg.init_kind, &mut init_rng, cfg.nu_values[ni], cfg.d1, cfg.d2);
            run_polyak(&ens, &init, &cfg.solver).success
        })
        .collect();

    let mut cells = Vec::with_capacity(cfg.nu_values.len() * cfg.c_values.len());
    for (chunk, group) in outcomes.chunks(cfg.trials).enumerate() {
        let ni = chunk / cfg.c_values.len();
        let ci = chunk % cfg.c_values.len();
        let successes = group.iter().filter(|&&s| s).count();
        cells.push(PhaseCell {
            nu: cfg.nu_values[ni],
            c: cfg.c_values[ci],
            m: cfg.c_values[ci] * d_sum,
            trials: cfg.trials,
            successes,
            frequency: successes as f64 / cfg.trials as f64,
        });
    }
    cells
}

/// Phase grid as CSV with header `nu,C,m,trials,successes,frequency`, one
/// row per cell in grid order. Floats carry 17 significant digits.
pub fn phase_grid_csv(cells: &[PhaseCell]) -> String {
    let mut out = String::from("nu,C,m,trials,successes,frequency\n");
    for cell in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            g17(cell.nu),
            cell.c,
            cell.m,
            cell.trials,
            cell.successes,
            g17(cell.frequency)
        ));
    }
    out
}

/// Sample mean and standard error from a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Monte Carlo estimate of the population objective at singular values
/// (s1, s2): the mean of |s1·a·b + s2·a'·b'| over n draws of four
/// independent standard normals (drawn in the order a, b, a', b').
///
/// The standard error uses the n-1 variance denominator. Estimates from
/// disjoint generator streams are independent and can be pooled.
pub fn monte_carlo_population(rng: &mut SeededRng, s: SingularPair, n: usize) -> MonteCarloEstimate {
    assert!(n >= 2, "need at least two draws for a standard error");
    // Welford's running mean/variance: one pass, no cancellation at large n.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n {
        let a1 = rng.standard_normal();
        let b1 = rng.standard_normal();
        let a2 = rng.standard_normal();
        let b2 = rng.standard_normal();
        let v = (s.s1 * a1 * b1 + s.s2 * a2 * b2).abs();
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let variance = m2 / (n - 1) as f64;
    MonteCarloEstimate {
        estimate: mean,
        std_error: (variance / n as f64).sqrt(),
    }
}

/// Where the terminal points of a survey landed, as counts over the
/// stationarity certificate's conditions.
///
/// A terminal point can satisfy several conditions at once, so the three
/// flag counts may sum to more than `n_starts`; `unclassified` counts points
/// matching none of them at the surveyed constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyHistogram {
    pub near_zero: usize,
    pub near_solution: usize,
    pub near_orthogonal: usize,
    pub unclassified: usize,
    pub n_starts: usize,
}

impl SurveyHistogram {
    /// CSV with header `class,count`, one row per bucket.
    pub fn to_csv(&self) -> String {
        format!(
            "class,count\nnear_zero,{}\nnear_solution,{}\nnear_orthogonal,{}\nunclassified,{}\n",
            self.near_zero, self.near_solution, self.near_orthogonal, self.unclassified
        )
    }
}

/// Run the solver from `n_starts` unit-scale Gaussian starting points on one
/// shared ensemble with truth (e1, e1) and m = oversampling·(d1+d2), then
/// classify every terminal point against the stationarity certificate at
/// rate Δ = delta_rate(d1, d2, m) and constant `c`.
///
/// Fails when m is too small for the rate to be defined (oversampling 1).
pub fn landscape_survey(
    d1: usize,
    d2: usize,
    oversampling: usize,
    n_starts: usize,
    master_seed: u64,
    solver: &PolyakConfig,
    c: f64,
) -> Result<SurveyHistogram> {
    assert!(n_starts >= 1, "n_starts must be >= 1");
    assert!(oversampling >= 1, "oversampling must be >= 1");
    let m = oversampling * (d1 + d2);
    let delta = delta_rate(d1, d2, m)?;
    let truth = SignalPair::canonical(d1, d2);
    let ens = generate_measurements(
        SeededRng::derive(master_seed, &[STREAM_ENSEMBLE, 0]),
        &truth,
        m,
    );

    let classes: Vec<_> = (0..n_starts)
        .into_par_iter()
        .map(|start| {
            let mut rng = SeededRng::derive(master_seed, &[STREAM_INIT, start as u64]);
            let init = init_gaussian(&mut rng, 1.0, d1, d2);
            let result = run_polyak(&ens, &init, solver);
            classify_sample_point(&result.final_point, &truth, delta, c)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut hist = SurveyHistogram {
        near_zero: 0,
        near_solution: 0,
        near_orthogonal: 0,
        unclassified: 0,
        n_starts,
    };
    for class in &classes {
        if class.near_zero {
            hist.near_zero += 1;
        }
        if class.near_solution {
            hist.near_solution += 1;
        }
        if class.near_orthogonal {
            hist.near_orthogonal += 1;
        }
        if class.is_unclassified() {
            hist.unclassified += 1;
        }
    }
    Ok(hist)
}
