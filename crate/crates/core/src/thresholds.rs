//! Verdict thresholds shared by the CLI reports, the `check` harness and the
//! acceptance tests. Change a number here and every consumer follows.

/// Half-width of the window around an expected log-log slope.
pub const SLOPE_WINDOW: f64 = 0.2;

/// Tighter window used for the BMO^1 growth rate of the unbounded example.
pub const BMO_SLOPE_WINDOW: f64 = 0.15;

/// A profile "vanishes" when its last sample is below this fraction of the first.
pub const DECAY_RATIO: f64 = 0.1;

/// Growth factor (last / first) that marks a profile as unbounded.
pub const UNBOUNDED_GROWTH: f64 = 5.0;

/// A profile is "bounded" when max / min across radii stays below this.
pub const BOUNDED_SPREAD: f64 = 5.0;

/// Relative change allowed when the prefix grid is doubled.
pub const SUP_REFINEMENT_LIMIT: f64 = 0.05;

/// Floor used in ratio tests so constants do not produce 0/0.
pub const RATIO_FLOOR: f64 = 1e-12;

/// Minimum number of points in a slope fit.
pub const MIN_FIT_POINTS: usize = 5;

/// Winding-number curves must stay this far from the origin.
pub const WINDING_EPS: f64 = 1e-6;

/// Rounding residual allowed when converting a total argument change to an integer.
pub const WINDING_ROUNDING: f64 = 0.05;

/// Margin for "bounded away from zero near the boundary".
pub const FREDHOLM_MARGIN: f64 = 1e-3;

/// Truncation tail allowed in the kernel expansion of the operator Berezin transform.
pub const KERNEL_TAIL: f64 = 1e-6;

/// Hankel projection tail allowed relative to the computed value.
pub const HANKEL_TAIL_FRACTION: f64 = 1e-4;

/// Upper bound accepted for the measured oscillation constant
/// `max omega(f^) / max(||f||_BWMO, floor)` over the test suite.
pub const OSCILLATION_CONSTANT_MAX: f64 = 100.0;

/// Essential-norm estimate below which a symbol is classified compact.
pub const COMPACT_ESSENTIAL_NORM: f64 = 0.05;

/// Tail-to-head ratio for diagonal decay in the compactness check.
pub const DIAGONAL_DECAY: f64 = 0.1;

/// Outer radii used whenever a boundary limit is approximated.
pub const BOUNDARY_LADDER: [f64; 5] = [0.9, 0.95, 0.99, 0.995, 0.999];

/// Default number of lattice radii between 0.9 and 0.999.
pub const DEFAULT_RADII: usize = 12;

/// Default number of lattice angles for non-radial symbols.
pub const DEFAULT_ANGLES: usize = 32;

/// `n` radii geometric in `1 - r` between `1 - r = 0.1` and `1 - r = 0.001`.
pub fn default_radii(n: usize) -> Vec<f64> {
    geometric_radii(0.9, 0.999, n)
}

/// `n` radii from `r_first` to `r_last`, geometrically spaced in `1 - r`.
pub fn geometric_radii(r_first: f64, r_last: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "need at least two radii");
    let (h0, h1) = ((1.0 - r_first).ln(), (1.0 - r_last).ln());
    (0..n)
        .map(|i| 1.0 - (h0 + (h1 - h0) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
