//! Polyak subgradient method.
//!
//! The objective interpolates (its minimum value is exactly zero), which
//! makes Polyak's classical step length available with no tuning: from the
//! current pair, step by (f - min) / |g|^2 along the negative subgradient,
//! treating (w, x) as one concatenated vector. On sharp instances this
//! converges linearly; the driver here adds the standard stopping rules
//! (value threshold, iteration cap, zero subgradient), success measured by
//! product-space relative error, and an optional sampled trace.
//!
//! Between iterations the driver renormalizes the pair to equal factor norms
//! (see [`rebalance`]). The objective depends on (w, x) only through the
//! outer product w xᵀ, so this changes neither the value nor the relative
//! error of any iterate — it only picks the best-conditioned representative
//! of the current scaling class. Without it, subgradient steps amplify any
//! norm imbalance between the factors: far from the solution set the smaller
//! factor collapses toward zero while the larger one freezes, and runs
//! started at a large scale stall next to a spurious configuration instead
//! of converging. With the renormalization, the distance to the solution
//! set contracts at a scale-free rate, which is what makes recovery
//! insensitive to the initialization radius.

use serde::{Deserialize, Serialize};

use crate::fmt::g17;
use crate::linalg::{norm, norm_sq, residual_frobenius, SignalPair};
use crate::sample::MeasurementEnsemble;
use crate::{Error, Result};

/// Stopping rules and success threshold for [`run_polyak`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyakConfig {
    /// Iteration cap.
    pub max_iters: usize,
    /// Stop as soon as the objective falls below this.
    pub f_stop: f64,
    /// Known minimum value of the objective (zero for interpolation).
    pub min_value: f64,
    /// A run counts as a success when the final relative error is at most this.
    pub success_rel_err: f64,
    /// Record a trace row every this many iterations (0 = no trace).
    pub trace_every: usize,
}

impl Default for PolyakConfig {
    fn default() -> Self {
        Self {
            max_iters: 100_000,
            f_stop: 1e-10,
            min_value: 0.0,
            success_rel_err: 1e-6,
            trace_every: 0,
        }
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Objective fell below `f_stop`.
    ValueTol,
    /// Iteration cap reached.
    MaxIters,
    /// The selected subgradient was exactly zero (the step is undefined);
    /// the iterate sits on a stationary point of the sample objective.
    ZeroSubgradient,
}

/// One sampled trace row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub value: f64,
    pub relative_error: f64,
}

/// Outcome of a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    #[serde(rename = "final")]
    pub final_point: SignalPair,
    pub iterations: usize,
    pub final_value: f64,
    pub relative_error: f64,
    pub success: bool,
    pub termination: Termination,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub trace: Vec<TraceRecord>,
}

impl SolveResult {
    /// The trace as CSV with header `iteration,value,relative_error`.
    /// Floats carry 17 significant digits, so the file parses back exactly.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,value,relative_error\n");
        for r in &self.trace {
            out.push_str(&format!(
                "{},{},{}\n",
                r.iteration,
                g17(r.value),
                g17(r.relative_error)
            ));
        }
        out
    }
}

/// One Polyak step: p - ((f_val - min_value) / |g|^2) g on the concatenated
/// vector. A zero subgradient returns p unchanged; the caller is expected to
/// stop (see [`Termination::ZeroSubgradient`]).
pub fn polyak_step(p: &SignalPair, f_val: f64, g: &SignalPair, min_value: f64) -> SignalPair {
    let gnorm_sq = norm_sq(&g.w) + norm_sq(&g.x);
    if gnorm_sq == 0.0 {
        return p.clone();
    }
    let step = (f_val - min_value) / gnorm_sq;
    SignalPair::new(
        p.w.iter().zip(&g.w).map(|(a, b)| a - step * b).collect(),
        p.x.iter().zip(&g.x).map(|(a, b)| a - step * b).collect(),
    )
}

/// Replace (w, x) by the representative (w/γ, γx), γ = √(‖w‖/‖x‖), of its
/// scaling class with equal factor norms (each becomes √(‖w‖‖x‖)).
///
/// The sample objective and the product-space relative error are invariant
/// under this map, so it may be interleaved freely with subgradient steps;
/// [`run_polyak`] applies it after every step to keep the parametrization
/// well conditioned. Pairs with a zero (or nonfinite) factor norm are
/// returned unchanged.
pub fn rebalance(p: &SignalPair) -> SignalPair {
    let nw = norm(&p.w);
    let nx = norm(&p.x);
    if !(nw > 0.0 && nx > 0.0) || !nw.is_finite() || !nx.is_finite() {
        return p.clone();
    }
    let gamma = (nx / nw).sqrt();
    SignalPair::new(
        p.w.iter().map(|v| v * gamma).collect(),
        p.x.iter().map(|v| v / gamma).collect(),
    )
}

/// Product-space relative error |w xᵀ - w̄ x̄ᵀ|_F / |w̄ x̄ᵀ|_F.
///
/// Invariant under the scaling ambiguity (w, x) -> (a w, x / a), which is
/// exactly the identifiability class of the problem. Undefined for truths
/// with a zero factor.
pub fn relative_error(p: &SignalPair, truth: &SignalPair) -> Result<f64> {
    let denom = truth.product_norm();
    if denom == 0.0 {
        return Err(Error::DegenerateTruth);
    }
    Ok(residual_frobenius(p, truth) / denom)
}

/// Run Polyak's method on an ensemble from `init` until one of the stopping
/// rules fires. Non-convergence is reported in the result, never as an error.
pub fn run_polyak(ens: &MeasurementEnsemble, init: &SignalPair, cfg: &PolyakConfig) -> SolveResult {
    assert!(cfg.max_iters >= 1, "max_iters must be >= 1");
    assert!(cfg.f_stop >= 0.0, "f_stop must be >= 0");
    let truth = ens.truth();
    assert!(
        norm(&truth.w) > 0.0 && norm(&truth.x) > 0.0,
        "ensemble truth must have nonzero factors"
    );

    let rel = |p: &SignalPair| relative_error(p, truth).expect("truth checked nonzero");

    let mut p = rebalance(init);
    let mut trace = Vec::new();
    let mut iteration = 0;
    let (final_value, termination) = loop {
        let (f, g) = ens.value_and_subgradient(&p);
        if cfg.trace_every > 0 && iteration % cfg.trace_every == 0 {
            trace.push(TraceRecord {
                iteration,
                value: f,
                relative_error: rel(&p),
            });
        }
        if f < cfg.f_stop {
            break (f, Termination::ValueTol);
        }
        if iteration >= cfg.max_iters {
            break (f, Termination::MaxIters);
        }
        if norm_sq(&g.w) + norm_sq(&g.x) == 0.0 {
            break (f, Termination::ZeroSubgradient);
        }
        p = rebalance(&polyak_step(&p, f, &g, cfg.min_value));
        iteration += 1;
    };

    let relative_error = rel(&p);
    if cfg.trace_every > 0 {
        let last_traced = trace.last().map(|r: &TraceRecord| r.iteration);
        if last_traced != Some(iteration) {
            trace.push(TraceRecord {
                iteration,
                value: final_value,
                relative_error,
            });
        }
    }

    SolveResult {
        final_point: p,
        iterations: iteration,
        final_value,
        relative_error,
        success: relative_error <= cfg.success_rel_err,
        termination,
        trace,
    }
}
