//! Finite-sample objective over Gaussian measurement ensembles.
//!
//! An ensemble is m sensing pairs (a_i, b_i) with observations
//! y_i = <a_i, w̄><x̄, b_i>; the sample objective is the average absolute
//! residual
//!
//! ```text
//!     f(w, x) = (1/m) sum_i |<a_i, w><x, b_i> - y_i|.
//! ```
//!
//! Besides evaluation and subgradients, this module carries the
//! sample-complexity rate Δ = ((d1+d2+1)/m · log(m/(d1+d2+1)))^(1/8), a
//! classifier that tests a point against the three conditions every
//! near-stationary point of the sample objective provably satisfies (near
//! zero / near a solution / near orthogonal), and an empirical measure of how
//! far sample values drift from population values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, residual_frobenius, SignalPair};
use crate::rng::SeededRng;

/// Default value for the hidden-constant knob `c` in [`classify_sample_point`].
pub const DEFAULT_CLASSIFY_CONSTANT: f64 = 1.0;

/// m sensing pairs with their observations, plus the pair that generated
/// them. Rows are contiguous (`a` is m × d1 row-major, `b` is m × d2), since
/// every evaluation is a sweep of per-row dot products.
///
/// Ensembles remember the seed of the generator they were drawn from;
/// [`MeasurementEnsemble::record`] exports (seed, dims, truth) and
/// [`MeasurementEnsemble::from_record`] regenerates the full ensemble
/// bit-for-bit, so matrices never need to be serialized.
#[derive(Debug, Clone)]
pub struct MeasurementEnsemble {
    seed: u64,
    d1: usize,
    d2: usize,
    m: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    y: Vec<f64>,
    truth: SignalPair,
}

impl MeasurementEnsemble {
    pub fn dims(&self) -> (usize, usize) {
        (self.d1, self.d2)
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false // m >= 1 by construction
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn truth(&self) -> &SignalPair {
        &self.truth
    }

    pub fn row_a(&self, i: usize) -> &[f64] {
        &self.a[i * self.d1..(i + 1) * self.d1]
    }

    pub fn row_b(&self, i: usize) -> &[f64] {
        &self.b[i * self.d2..(i + 1) * self.d2]
    }

    pub fn observation(&self, i: usize) -> f64 {
        self.y[i]
    }

    /// Objective value at p: (1/m) Σ |<a_i, w><x, b_i> - y_i|.
    pub fn value(&self, p: &SignalPair) -> f64 {
        assert_eq!(p.dims(), (self.d1, self.d2), "dimension mismatch");
        let mut sum = 0.0;
        for i in 0..self.m {
            let r = dot(self.row_a(i), &p.w) * dot(self.row_b(i), &p.x) - self.y[i];
            sum += r.abs();
        }
        sum / self.m as f64
    }

    /// A subgradient at p: (1/m) Σ s_i (<x, b_i> a_i, <a_i, w> b_i) with
    /// s_i = sign(residual_i) and sign(0) = 0 — the canonical selection,
    /// which reports a zero subgradient at exact solutions.
    pub fn subgradient(&self, p: &SignalPair) -> SignalPair {
        self.value_and_subgradient(p).1
    }

    /// Value and subgradient in one sweep over the rows (the solver calls
    /// this every iteration; the dot products are shared).
    pub fn value_and_subgradient(&self, p: &SignalPair) -> (f64, SignalPair) {
        assert_eq!(p.dims(), (self.d1, self.d2), "dimension mismatch");
        let mut sum = 0.0;
        let mut gw = vec![0.0; self.d1];
        let mut gx = vec![0.0; self.d2];
        for i in 0..self.m {
            let aw = dot(self.row_a(i), &p.w);
            let xb = dot(self.row_b(i), &p.x);
            let r = aw * xb - self.y[i];
            sum += r.abs();
            if r != 0.0 {
                let s = r.signum();
                crate::linalg::axpy(&mut gw, s * xb, self.row_a(i));
                crate::linalg::axpy(&mut gx, s * aw, self.row_b(i));
            }
        }
        let inv_m = 1.0 / self.m as f64;
        for v in gw.iter_mut().chain(gx.iter_mut()) {
            *v *= inv_m;
        }
        (sum * inv_m, SignalPair::new(gw, gx))
    }

    /// The compact regeneration record for this ensemble.
    pub fn record(&self) -> EnsembleRecord {
        EnsembleRecord {
            seed: self.seed,
            d1: self.d1,
            d2: self.d2,
            m: self.m,
            truth: self.truth.clone(),
        }
    }

    /// Regenerate an ensemble from its record. Bit-identical to the original:
    /// generation consumes a fresh stream seeded by `record.seed`.
    pub fn from_record(record: &EnsembleRecord) -> Result<Self> {
        if record.truth.dims() != (record.d1, record.d2) {
            return Err(Error::Record(format!(
                "truth dims {:?} disagree with (d1, d2) = ({}, {})",
                record.truth.dims(),
                record.d1,
                record.d2
            )));
        }
        if record.m == 0 {
            return Err(Error::Record("m must be >= 1".into()));
        }
        Ok(generate_measurements(
            SeededRng::new(record.seed),
            &record.truth,
            record.m,
        ))
    }
}

/// Serializable description of an ensemble: everything needed to regenerate
/// it, nothing more.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub seed: u64,
    pub d1: usize,
    pub d2: usize,
    pub m: usize,
    pub truth: SignalPair,
}

impl EnsembleRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("record serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Record(e.to_string()))
    }
}

/// Draw an ensemble of m measurements of `truth`.
///
/// Takes the generator by value: an ensemble owns its stream from the seed
/// onward, which is what lets [`EnsembleRecord`] regenerate it exactly.
/// Generation order is fixed — for each i, row a_i then row b_i.
pub fn generate_measurements(
    mut rng: SeededRng,
    truth: &SignalPair,
    m: usize,
) -> MeasurementEnsemble {
    assert!(m >= 1, "need at least one measurement");
    let (d1, d2) = truth.dims();
    let seed = rng.seed();
    let mut a = Vec::with_capacity(m * d1);
    let mut b = Vec::with_capacity(m * d2);
    for _ in 0..m {
        for _ in 0..d1 {
            a.push(rng.standard_normal());
        }
        for _ in 0..d2 {
            b.push(rng.standard_normal());
        }
    }
    let y = (0..m)
        .map(|i| dot(&a[i * d1..(i + 1) * d1], &truth.w) * dot(&b[i * d2..(i + 1) * d2], &truth.x))
        .collect();
    MeasurementEnsemble {
        seed,
        d1,
        d2,
        m,
        a,
        b,
        y,
        truth: truth.clone(),
    }
}

/// Free-function form of [`MeasurementEnsemble::value`].
pub fn sample_value(ens: &MeasurementEnsemble, p: &SignalPair) -> f64 {
    ens.value(p)
}

/// Free-function form of [`MeasurementEnsemble::subgradient`].
pub fn sample_subgradient(ens: &MeasurementEnsemble, p: &SignalPair) -> SignalPair {
    ens.subgradient(p)
}

/// The dimension-to-sample rate Δ = ((d1+d2+1)/m · log(m/(d1+d2+1)))^(1/8).
///
/// Only defined in the overdetermined regime m > d1 + d2 + 1 (where the
/// logarithm is positive).
pub fn delta_rate(d1: usize, d2: usize, m: usize) -> Result<f64> {
    let threshold = d1 + d2 + 1;
    if m <= threshold {
        return Err(Error::RateUndefined { m, threshold });
    }
    let ratio = threshold as f64 / m as f64;
    Ok((ratio * (1.0 / ratio).ln()).powf(0.125))
}

/// One of the three regions that approximate stationary points of the sample
/// objective concentrate around: the origin, the solution set, or the
/// orthogonal spurious set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleFlag {
    NearZero,
    NearSolution,
    NearOrthogonal,
}

/// Scalars the classifier thresholds are applied to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleWitness {
    /// ‖(w, x)‖ of the classified point.
    pub pair_norm: f64,
    /// ‖w xᵀ - w̄ x̄ᵀ‖_F.
    pub residual_norm: f64,
    /// <w, w̄> and <x, x̄>.
    pub truth_overlap_w: f64,
    pub truth_overlap_x: f64,
    /// The norm ratio ‖(w,x)‖ / ‖(w̄,x̄)‖ clamped below by 1.
    pub nu: f64,
}

/// Outcome of [`classify_sample_point`]: which of the three conditions hold.
/// Non-exclusive — stationary points of well-sampled instances satisfy at
/// least one, while an arbitrary point may satisfy none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleClass {
    pub near_zero: bool,
    pub near_solution: bool,
    pub near_orthogonal: bool,
    /// The Δ the thresholds were evaluated with.
    pub delta: f64,
    pub witness: SampleWitness,
}

impl SampleClass {
    pub fn flags(&self) -> Vec<SampleFlag> {
        let mut flags = Vec::new();
        if self.near_zero {
            flags.push(SampleFlag::NearZero);
        }
        if self.near_solution {
            flags.push(SampleFlag::NearSolution);
        }
        if self.near_orthogonal {
            flags.push(SampleFlag::NearOrthogonal);
        }
        flags
    }

    pub fn is_unclassified(&self) -> bool {
        !(self.near_zero || self.near_solution || self.near_orthogonal)
    }
}

/// Test a point against the three near-stationarity conditions at rate
/// `delta`, with all hidden constants collapsed into the single knob `c`
/// (default [`DEFAULT_CLASSIFY_CONSTANT`]):
///
/// * near zero:       ‖(w,x)‖ ≤ c·Δ·‖(w̄,x̄)‖
/// * near solution:   ‖X‖_F ≤ c·(ν²+1)·Δ·‖w̄x̄ᵀ‖_F
/// * near orthogonal: |<w,w̄>| ≤ c·(ν²+1)·Δ·‖(w,x)‖·‖w̄‖ and the same for x
///
/// with ν = ‖(w,x)‖ / ‖(w̄,x̄)‖ clamped below by 1. Matrix norms are
/// Frobenius throughout, computed by inner-product expansion (on rank-two
/// matrices this differs from the operator norm by at most √2, which `c`
/// absorbs).
pub fn classify_sample_point(
    p: &SignalPair,
    truth: &SignalPair,
    delta: f64,
    c: f64,
) -> Result<SampleClass> {
    assert!(delta > 0.0, "delta must be positive");
    assert!(c > 0.0, "c must be positive");
    let nw = norm(&truth.w);
    let nx = norm(&truth.x);
    if nw == 0.0 || nx == 0.0 {
        return Err(Error::DegenerateTruth);
    }

    let pair_norm = p.norm();
    let truth_norm = truth.norm();
    let nu = (pair_norm / truth_norm).max(1.0);
    let witness = SampleWitness {
        pair_norm,
        residual_norm: residual_frobenius(p, truth),
        truth_overlap_w: dot(&p.w, &truth.w),
        truth_overlap_x: dot(&p.x, &truth.x),
        nu,
    };

    let growth = c * (nu * nu + 1.0) * delta;
    Ok(SampleClass {
        near_zero: pair_norm <= c * delta * truth_norm,
        near_solution: witness.residual_norm <= growth * nw * nx,
        near_orthogonal: witness.truth_overlap_w.abs() <= growth * pair_norm * nw
            && witness.truth_overlap_x.abs() <= growth * pair_norm * nx,
        delta,
        witness,
    })
}

/// Worst relative deviation between sample and population objectives over a
/// probe set: max over probes of |f_sample - f_population| / ‖X‖_F.
///
/// Probes with X = 0 carry no information (both objectives vanish) and are
/// skipped; it is an error for every probe to be degenerate.
pub fn concentration_gap(ens: &MeasurementEnsemble, probes: &[SignalPair]) -> Result<f64> {
    let mut gap: Option<f64> = None;
    for p in probes {
        let denom = residual_frobenius(p, ens.truth());
        if denom == 0.0 {
            continue;
        }
        let g = (ens.value(p) - crate::population::population_objective(p, ens.truth())).abs()
            / denom;
        gap = Some(gap.map_or(g, |cur| cur.max(g)));
    }
    gap.ok_or(Error::NoUsableProbes)
}
