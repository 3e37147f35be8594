//! Float formatting for machine-readable output.
//!
//! CSV emitters (solver traces, phase grids, concentration tables) all print
//! floats through [`g17`]: 17 significant digits in scientific notation.
//! 17 digits are enough to pin down any `f64` exactly, so files written here
//! can be parsed back bit-for-bit, and identical runs produce byte-identical
//! output.

/// Format `x` with 17 significant digits, e.g. `6.3661977236758138e-1`.
pub fn g17(x: f64) -> String {
    format!("{x:.16e}")
}
