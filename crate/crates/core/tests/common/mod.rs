//! Shared fixtures for the integration suites: finite-difference and Monte
//! Carlo oracles that deliberately avoid the library's optimized code paths,
//! plus the frozen-seed experiment protocols that the determinism checks
//! re-run and byte-compare.
#![allow(dead_code)]

use std::sync::OnceLock;

use deconv_core::{
    concentration_gap, derive_seed, fmt::g17, gaussian_vector, generate_measurements,
    init_gaussian, phase_grid_csv, run_phase_grid, run_polyak, InitKind, PhaseCell,
    PhaseGridConfig, PolyakConfig, SeededRng, SignalPair,
};

pub fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
    assert!(
        (got - want).abs() <= tol,
        "{what}: got {got}, want {want} (tol {tol})"
    );
}

pub fn random_pair(rng: &mut SeededRng, d1: usize, d2: usize) -> SignalPair {
    SignalPair::new(gaussian_vector(rng, d1), gaussian_vector(rng, d2))
}

/// p + t·dir on the concatenated vector.
pub fn shifted(p: &SignalPair, dir: &SignalPair, t: f64) -> SignalPair {
    SignalPair::new(
        p.w.iter().zip(&dir.w).map(|(a, d)| a + t * d).collect(),
        p.x.iter().zip(&dir.x).map(|(a, d)| a + t * d).collect(),
    )
}

/// Central finite difference of `f` at `p` along `dir`.
pub fn central_fd(f: impl Fn(&SignalPair) -> f64, p: &SignalPair, dir: &SignalPair, h: f64) -> f64 {
    (f(&shifted(p, dir, h)) - f(&shifted(p, dir, -h))) / (2.0 * h)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Monte Carlo estimate of E|aᵀ(w xᵀ - w̄ x̄ᵀ)b| over fresh Gaussian vectors
/// a, b — the defining expectation, computed without any spectral reduction.
/// Returns (mean, standard error).
pub fn mc_residual_objective(
    rng: &mut SeededRng,
    p: &SignalPair,
    truth: &SignalPair,
    n: usize,
) -> (f64, f64) {
    let (d1, d2) = p.dims();
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n {
        let a = gaussian_vector(rng, d1);
        let b = gaussian_vector(rng, d2);
        let v = (dot(&a, &p.w) * dot(&p.x, &b) - dot(&a, &truth.w) * dot(&truth.x, &b)).abs();
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let se = (m2 / ((n - 1) as f64) / n as f64).sqrt();
    (mean, se)
}

// --- frozen experiment protocols -------------------------------------------
//
// The three randomized protocols below are pure functions of their master
// seeds. The first run of each is cached; the rerun-determinism check calls
// the builders a second time and compares the CSV text byte for byte.

pub const GAUSS_GRID_SEED: u64 = 101;
pub const CUBE_GRID_SEED: u64 = 102;
pub const CONCENTRATION_SEED: u64 = 801;
pub const RECOVERY_SEED: u64 = 901;

pub struct PhaseProtocol {
    pub cells: Vec<PhaseCell>,
    pub csv: String,
}

/// The desk-scale phase grid: d = (50, 25), ν ∈ {2⁴, 2⁷, 2¹⁰}, C ∈ {1..8},
/// ten trials per cell.
pub fn desk_grid(init_kind: InitKind, master_seed: u64) -> PhaseProtocol {
    let cfg = PhaseGridConfig {
        d1: 50,
        d2: 25,
        nu_values: vec![16.0, 128.0, 1024.0],
        c_values: (1..=8).collect(),
        trials: 10,
        init_kind,
        master_seed,
        solver: PolyakConfig::default(),
    };
    let cells = run_phase_grid(&cfg);
    let csv = phase_grid_csv(&cells);
    PhaseProtocol { cells, csv }
}

pub fn gauss_grid() -> &'static PhaseProtocol {
    static CACHE: OnceLock<PhaseProtocol> = OnceLock::new();
    CACHE.get_or_init(|| desk_grid(InitKind::Gaussian, GAUSS_GRID_SEED))
}

pub fn cube_grid() -> &'static PhaseProtocol {
    static CACHE: OnceLock<PhaseProtocol> = OnceLock::new();
    CACHE.get_or_init(|| desk_grid(InitKind::Cube, CUBE_GRID_SEED))
}

/// Concentration sweep: d = (5, 5), m ∈ {4, 16, 64}·(d1+d2+1), one fixed set
/// of 100 unit-scale probes, ten ensemble replications. Returns the gap table
/// as (replication, m, gap) rows plus its CSV rendering.
pub fn concentration_protocol(master_seed: u64) -> (Vec<(u64, usize, f64)>, String) {
    let (d1, d2) = (5, 5);
    let truth = SignalPair::canonical(d1, d2);
    let mut probe_rng = SeededRng::new(derive_seed(master_seed, &[2]));
    let probes: Vec<SignalPair> = (0..100).map(|_| random_pair(&mut probe_rng, d1, d2)).collect();

    let mut rows = Vec::new();
    for rep in 0..10u64 {
        for factor in [4usize, 16, 64] {
            let m = factor * (d1 + d2 + 1);
            let ens = generate_measurements(
                SeededRng::derive(master_seed, &[rep, factor as u64]),
                &truth,
                m,
            );
            let gap = concentration_gap(&ens, &probes).unwrap();
            rows.push((rep, m, gap));
        }
    }
    let mut csv = String::from("replication,m,gap\n");
    for &(rep, m, gap) in &rows {
        csv.push_str(&format!("{rep},{m},{}\n", g17(gap)));
    }
    (rows, csv)
}

pub fn concentration_cached() -> &'static (Vec<(u64, usize, f64)>, String) {
    static CACHE: OnceLock<(Vec<(u64, usize, f64)>, String)> = OnceLock::new();
    CACHE.get_or_init(|| concentration_protocol(CONCENTRATION_SEED))
}

pub struct RecoveryTrial {
    pub trial: u64,
    pub iterations: usize,
    pub final_value: f64,
    pub relative_error: f64,
    pub success: bool,
}

/// Recovery protocol at C = 8: d1 = d2 = 10, m = C·(d1+d2) = 160, ten
/// Gaussian-init trials at unit scale.
pub fn recovery_protocol(master_seed: u64) -> (Vec<RecoveryTrial>, String) {
    let truth = SignalPair::canonical(10, 10);
    let cfg = PolyakConfig::default();
    let mut rows = Vec::new();
    for trial in 0..10u64 {
        let ens = generate_measurements(
            SeededRng::derive(master_seed, &[trial, 0]),
            &truth,
            160,
        );
        let mut init_rng = SeededRng::derive(master_seed, &[trial, 1]);
        let init = init_gaussian(&mut init_rng, 1.0, 10, 10);
        let result = run_polyak(&ens, &init, &cfg);
        rows.push(RecoveryTrial {
            trial,
            iterations: result.iterations,
            final_value: result.final_value,
            relative_error: result.relative_error,
            success: result.success,
        });
    }
    let mut csv = String::from("trial,iterations,final_value,relative_error,success\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.trial,
            r.iterations,
            g17(r.final_value),
            g17(r.relative_error),
            r.success
        ));
    }
    (rows, csv)
}

pub fn recovery_cached() -> &'static (Vec<RecoveryTrial>, String) {
    static CACHE: OnceLock<(Vec<RecoveryTrial>, String)> = OnceLock::new();
    CACHE.get_or_init(|| recovery_protocol(RECOVERY_SEED))
}

/// Probe ensembles of this size were used to freeze the protocol; exposed so
/// tests can assert the bookkeeping stayed in sync.
pub fn desk_cell_count() -> usize {
    3 * 8
}
