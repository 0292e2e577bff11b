//! Integration over polar rectangles, boxes, hyperbolic discs and the whole
//! disc, plus cumulative ("prefix") tables of box integrals.
//!
//! All integrals are taken against normalized area `dA = rho drho dphi / pi`.
//! Radial panels are split at symbol breakpoints and, for oscillatory
//! symbols, at every zero of the oscillation, so each panel holds at most
//! half a period. Integrals reaching `|w| = 1` go through [`RadialRule`].

use std::f64::consts::{PI, TAU};
use std::num::NonZeroUsize;
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{box_of, DiscRegion, Point, PolarBox};
use crate::symbols::{oscillation_zero, oscillation_zero_gap, Symbol};

pub const MAX_NODES: usize = 64;

/// Panels integrated per parallel work item. Fixed so that the summation
/// order, and hence every result bit, is independent of the thread count.
const CHUNK: u64 = 1024;

/// Refuse plans with more panels than this.
pub const MAX_PANELS: u64 = 200_000_000;

/// Terms of the alternating tail fed to the Euler transform.
const EULER_TERMS: usize = 20;

static RULES: OnceLock<Vec<Vec<(f64, f64)>>> = OnceLock::new();

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> &'static [(f64, f64)] {
    assert!((1..=MAX_NODES).contains(&n), "rule size {n} out of range");
    let rules = RULES.get_or_init(|| {
        (0..=MAX_NODES)
            .map(|k| match NonZeroUsize::new(k) {
                Some(k) => GaussLegendre::new(k).as_node_weight_pairs().to_vec(),
                None => Vec::new(),
            })
            .collect()
    });
    &rules[n]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Base panels per unit of the integration variable range.
    pub panels: usize,
    /// Gauss–Legendre nodes per panel.
    pub nodes: usize,
    /// Absolute tolerance.
    pub tolerance: f64,
    /// Bisect panels whose two-level estimates disagree.
    pub refine: bool,
    pub max_depth: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            panels: 4,
            nodes: 8,
            tolerance: 1e-9,
            refine: true,
            max_depth: 12,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.panels == 0 || !(2..=MAX_NODES / 2).contains(&self.nodes) {
            return Err(Error::BadParameters(format!(
                "need panels >= 1 and 2 <= nodes <= {}",
                MAX_NODES / 2
            )));
        }
        if !(self.tolerance > 0.0) || self.max_depth > 20 {
            return Err(Error::BadParameters("tolerance must be positive, depth <= 20".into()));
        }
        Ok(())
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: Complex64,
    /// Estimated absolute error.
    pub error: f64,
    pub converged: bool,
}

impl QuadResult {
    pub fn zero() -> Self {
        Self {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            converged: true,
        }
    }

    pub fn plus(self, other: QuadResult) -> Self {
        Self {
            value: self.value + other.value,
            error: self.error + other.error,
            converged: self.converged && other.converged,
        }
    }

    pub fn scaled(self, c: f64) -> Self {
        Self {
            value: self.value * c,
            error: self.error * c.abs(),
            converged: self.converged,
        }
    }

    /// The value if the error estimate meets `tolerance` (which may be looser
    /// than the one the integral was run at), else [`Error::ToleranceNotReached`].
    pub fn require(self, tolerance: f64) -> Result<Complex64> {
        if self.error <= tolerance && self.value.is_finite() {
            Ok(self.value)
        } else {
            Err(Error::ToleranceNotReached {
                value: self.value.norm(),
                error: self.error,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// one-dimensional adaptive Gauss
// ---------------------------------------------------------------------------

/// Value of a (possibly nested) integrand at one node.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Acc {
    value: Complex64,
    abs: f64,
    err: f64,
    ok: bool,
}

impl Acc {
    fn point(v: Complex64) -> Self {
        Self {
            value: v,
            abs: v.norm(),
            err: 0.0,
            ok: true,
        }
    }

    fn nested(q: QuadResult) -> Self {
        Self {
            value: q.value,
            abs: q.value.norm(),
            err: q.error,
            ok: q.converged,
        }
    }

    fn zero() -> Self {
        Self::point(Complex64::new(0.0, 0.0))
    }

    fn with_noise(mut self, noise: f64) -> Self {
        self.err += noise;
        self
    }

    fn add(&mut self, o: Acc) {
        self.value += o.value;
        self.abs += o.abs;
        self.err += o.err;
        self.ok &= o.ok;
    }
}

fn apply_rule<F: Fn(f64) -> Acc>(f: &F, x0: f64, x1: f64, rule: &[(f64, f64)]) -> Acc {
    let h = 0.5 * (x1 - x0);
    let c = 0.5 * (x0 + x1);
    let mut acc = Acc::zero();
    for &(x, w) in rule {
        let s = f(c + h * x);
        acc.value += s.value * (w * h);
        acc.abs += s.abs * (w * h).abs();
        acc.err += s.err * (w * h).abs();
        acc.ok &= s.ok;
    }
    acc
}

/// Composite rule with `pieces` equal sub-panels of `[x0, x1]`.
fn composite<F: Fn(f64) -> Acc>(f: &F, x0: f64, x1: f64, pieces: usize, rule: &[(f64, f64)]) -> Acc {
    let step = (x1 - x0) / pieces as f64;
    let mut acc = Acc::zero();
    for k in 0..pieces {
        let a = x0 + step * k as f64;
        let b = if k + 1 == pieces { x1 } else { a + step };
        acc.add(apply_rule(f, a, b, rule));
    }
    acc
}

/// Per-panel state of the global scheme: `fine` uses `2^(level + 1)`
/// sub-panels and `diff` is its distance to the `2^level` estimate.
#[derive(Debug, Clone, Copy)]
struct Leaf {
    fine: Acc,
    diff: f64,
    level: u32,
    /// Relative evaluation noise of the integrand on this panel, in units of
    /// machine epsilon.
    condition: f64,
}

impl Leaf {
    fn noisy(&self) -> bool {
        self.diff <= 64.0 * f64::EPSILON * self.condition * self.fine.abs
    }

    /// The estimate with its discrepancy added to the error, except at noise
    /// level where the discrepancies are pooled separately.
    fn total(&self) -> Acc {
        let mut a = self.fine;
        if !self.noisy() {
            a.err += self.diff;
        }
        a
    }
}

/// Globally adaptive integration over `n` fixed panels. `eval(i, pieces)`
/// is the composite estimate on panel `i` and `condition(i)` the relative
/// evaluation noise there in units of machine epsilon. Every panel starts
/// with a two-level estimate; the panel with the largest discrepancy is then
/// subdivided further until the summed discrepancy meets `tol`, the
/// remaining ones are at noise level, or the depth limit is reached.
///
/// Returns the per-panel results in panel order and the root-sum-square of
/// the noise-level discrepancies, which come from independent rounding and
/// so do not add up linearly.
fn global_adapt<E, C>(n: u64, cfg: &QuadratureConfig, tol: f64, eval: E, condition: C) -> (Vec<Acc>, f64)
where
    E: Fn(u64, usize) -> Acc + Sync,
    C: Fn(u64) -> f64 + Sync,
{
    let start = |i: u64| {
        let whole = eval(i, 1);
        let fine = eval(i, 2);
        Leaf {
            fine,
            diff: (fine.value - whole.value).norm(),
            level: 0,
            condition: condition(i),
        }
    };
    let mut leaves: Vec<Leaf> = if n <= CHUNK {
        (0..n).map(start).collect()
    } else {
        let parts: Vec<Vec<Leaf>> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).map(start).collect())
            .collect();
        parts.into_iter().flatten().collect()
    };
    if cfg.refine {
        let mut heap: BinaryHeap<(Key, Reverse<u64>)> = leaves
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.noisy())
            .map(|(i, l)| (Key(l.diff), Reverse(i as u64)))
            .collect();
        let mut excess: f64 = leaves.iter().filter(|l| !l.noisy()).map(|l| l.diff).sum();
        while excess > tol {
            let Some((_, Reverse(i))) = heap.pop() else { break };
            let leaf = &mut leaves[i as usize];
            if leaf.level as usize >= cfg.max_depth {
                leaf.fine.ok = false;
                continue;
            }
            let level = leaf.level + 1;
            let fine = eval(i, 1 << (level + 1));
            let diff = (fine.value - leaf.fine.value).norm();
            excess -= leaf.diff;
            *leaf = Leaf {
                fine,
                diff,
                level,
                condition: leaf.condition,
            };
            if !leaf.noisy() {
                excess += diff;
                heap.push((Key(diff), Reverse(i)));
            }
        }
        if excess > tol {
            // whatever is still queued could not be resolved
            for (_, Reverse(i)) in heap {
                leaves[i as usize].fine.ok = false;
            }
        }
    }
    let noise = leaves
        .iter()
        .filter(|l| l.noisy())
        .map(|l| l.diff * l.diff)
        .sum::<f64>()
        .sqrt();
    (leaves.iter().map(Leaf::total).collect(), noise)
}

/// Total order on discrepancies for the refinement queue.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn sum_acc(parts: &[Acc]) -> Acc {
    let mut acc = Acc::zero();
    for p in parts {
        acc.add(*p);
    }
    acc
}

/// Panels stuck at the depth limit (kinks of `|f - c|`) are acceptable when
/// the summed error estimate still meets the tolerance.
fn finish(acc: Acc, tol: f64) -> QuadResult {
    QuadResult {
        value: acc.value,
        error: acc.err,
        converged: acc.ok || acc.err <= tol,
    }
}

// ---------------------------------------------------------------------------
// radial panel plans
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    /// Oscillation zeros `m_lo..=m_hi` strictly inside `(a, b)`.
    knots: Option<(f64, u64, u64)>,
    /// Integrate in `t = 1 - rho`; set for segments inside `[1/2, 1)`,
    /// where `1 - rho` of every edge is exact.
    flip: bool,
    oscillation: Option<f64>,
}

impl Segment {
    fn panel_count(&self) -> u64 {
        match self.knots {
            None => 1,
            Some((_, lo, hi)) => hi - lo + 2,
        }
    }

    fn edge(&self, j: u64) -> f64 {
        match self.knots {
            None => {
                if j == 0 {
                    self.a
                } else {
                    self.b
                }
            }
            Some((e, lo, hi)) => {
                if j == 0 {
                    self.a
                } else if j > hi - lo + 1 {
                    self.b
                } else {
                    oscillation_zero(e, lo + j - 1)
                }
            }
        }
    }

    /// `1 - edge(j)`, with knots computed directly in the boundary distance.
    fn gap_edge(&self, j: u64) -> f64 {
        match self.knots {
            Some((e, lo, hi)) if j > 0 && j <= hi - lo + 1 => oscillation_zero_gap(e, lo + j - 1),
            _ => 1.0 - self.edge(j),
        }
    }
}

/// Zeros of the oscillation strictly inside `(a, b)`, as an index range.
pub fn knot_range(exponent: f64, a: f64, b: f64) -> Option<(u64, u64)> {
    if b >= 1.0 || b <= a {
        return None;
    }
    let index_above = |x: f64| -> u64 {
        // smallest m with rho_m > x
        let mut m = ((1.0 - x).powf(-exponent) / PI).floor().max(0.0) as u64 + 1;
        while m > 1 && oscillation_zero(exponent, m - 1) > x {
            m -= 1;
        }
        while oscillation_zero(exponent, m) <= x {
            m += 1;
        }
        m
    };
    let lo = index_above(a);
    let hi_excl = index_above(b.max(a));
    // knots equal to b are dropped
    let mut hi = hi_excl.checked_sub(1)?;
    while hi >= lo && oscillation_zero(exponent, hi) >= b {
        hi = hi.checked_sub(1)?;
    }
    (hi >= lo).then_some((lo, hi))
}

/// Panel edges on `[a, b]` (with `b < 1` whenever oscillation knots are used).
#[derive(Debug, Clone)]
pub struct RadialPlan {
    segments: Vec<Segment>,
    offsets: Vec<u64>,
}

impl RadialPlan {
    /// `uniform` equal panels, split at `extra` edges and at the zeros of an
    /// oscillation with the given exponent.
    pub fn new(a: f64, b: f64, extra: &[f64], uniform: usize, oscillation: Option<f64>) -> Result<Self> {
        if !(b >= a) {
            return Err(Error::BadParameters(format!("empty radial range [{a}, {b}]")));
        }
        let mut edges: Vec<f64> = (0..=uniform.max(1))
            .map(|i| a + (b - a) * i as f64 / uniform.max(1) as f64)
            .collect();
        edges.extend(extra.iter().copied().filter(|&x| x > a && x < b));
        edges.sort_by(f64::total_cmp);
        edges.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * x.abs().max(1e-300));
        *edges.last_mut().expect("nonempty") = b;
        edges[0] = a;
        let mut segments = Vec::with_capacity(edges.len());
        let mut offsets = vec![0u64];
        for w in edges.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            let knots = oscillation
                .and_then(|e| knot_range(e, w[0], w[1]).map(|(lo, hi)| (e, lo, hi)));
            let seg = Segment {
                a: w[0],
                b: w[1],
                knots,
                flip: w[0] >= 0.5,
                oscillation,
            };
            let total = offsets.last().copied().unwrap_or(0) + seg.panel_count();
            if total > MAX_PANELS {
                return Err(Error::BadParameters(format!(
                    "radial range [{a}, {b}] needs more than {MAX_PANELS} panels"
                )));
            }
            offsets.push(total);
            segments.push(seg);
        }
        Ok(Self { segments, offsets })
    }

    /// Plan for a symbol on `[a, b]`, `b < 1`.
    pub fn for_symbol(f: &Symbol, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Self> {
        Self::new(a, b, &f.flags().radial_breaks, cfg.panels, f.oscillation_exponent())
    }

    pub fn len(&self) -> u64 {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn start(&self) -> f64 {
        self.segments.first().map_or(0.0, |s| s.a)
    }

    pub fn end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.b)
    }

    pub fn panel(&self, idx: u64) -> (f64, f64) {
        let s = self.offsets.partition_point(|&o| o <= idx) - 1;
        let seg = &self.segments[s];
        let j = idx - self.offsets[s];
        (seg.edge(j), seg.edge(j + 1))
    }

    /// Composite estimate of `int f(rho, 1 - rho) drho` on panel `idx`.
    fn panel_composite<F: Fn(f64, f64) -> Acc>(&self, idx: u64, pieces: usize, rule: &[(f64, f64)], f: &F) -> Acc {
        let s = self.offsets.partition_point(|&o| o <= idx) - 1;
        let seg = &self.segments[s];
        let j = idx - self.offsets[s];
        if seg.flip {
            let (t0, t1) = (seg.gap_edge(j + 1), seg.gap_edge(j));
            if t1 <= t0 {
                return Acc::zero();
            }
            composite(&|t: f64| f(1.0 - t, t), t0, t1, pieces, rule)
        } else {
            let (x0, x1) = (seg.edge(j), seg.edge(j + 1));
            if x1 <= x0 {
                return Acc::zero();
            }
            composite(&|x: f64| f(x, 1.0 - x), x0, x1, pieces, rule)
        }
    }

    /// Phase sensitivity `1 + b t^-b` at the outer end of panel `idx`: the
    /// phase `t^-b` is computed with relative error ~ `b eps`.
    fn panel_condition(&self, idx: u64) -> f64 {
        let s = self.offsets.partition_point(|&o| o <= idx) - 1;
        let seg = &self.segments[s];
        match seg.oscillation {
            Some(e) => {
                let j = idx - self.offsets[s];
                let t = seg.gap_edge(j + 1).max(f64::MIN_POSITIVE);
                1.0 + e * t.powf(-e)
            }
            None => 1.0,
        }
    }

    /// Boundary distances `(1 - x0, 1 - x1)` of panel `idx`, exact at knots.
    pub fn panel_gaps(&self, idx: u64) -> (f64, f64) {
        let s = self.offsets.partition_point(|&o| o <= idx) - 1;
        let seg = &self.segments[s];
        let j = idx - self.offsets[s];
        (seg.gap_edge(j), seg.gap_edge(j + 1))
    }

    /// All panel edges, in increasing order.
    pub fn edges(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() as usize + 1);
        out.push(self.start());
        for i in 0..self.len() {
            out.push(self.panel(i).1);
        }
        out
    }
}

/// Adaptive integral of `f(rho, 1 - rho)` over the panels of `plan`.
fn integrate_plan_acc<F>(plan: &RadialPlan, cfg: &QuadratureConfig, tol: f64, f: F) -> QuadResult
where
    F: Fn(f64, f64) -> Acc + Sync,
{
    let rule = gauss_legendre(cfg.nodes);
    let (parts, noise) = global_adapt(
        plan.len(),
        cfg,
        tol,
        |i, pieces| plan.panel_composite(i, pieces, rule, &f),
        |i| plan.panel_condition(i),
    );
    finish(sum_acc(&parts).with_noise(noise), tol)
}

/// Adaptive integral of `f(rho, 1 - rho)` over the panels of `plan`. Panels
/// inside `[1/2, 1)` place their nodes in the boundary distance, so `f`
/// should take that argument over `1 - rho` when it matters.
pub fn integrate_plan<F>(plan: &RadialPlan, cfg: &QuadratureConfig, tol: f64, f: F) -> QuadResult
where
    F: Fn(f64, f64) -> Complex64 + Sync,
{
    integrate_plan_acc(plan, cfg, tol, |x, t| Acc::point(f(x, t)))
}

/// Adaptive integral over `[a, b]` split into `panels` equal pieces plus `extra` edges.
fn integrate_interval_acc<F>(a: f64, b: f64, extra: &[f64], panels: usize, cfg: &QuadratureConfig, tol: f64, f: F) -> QuadResult
where
    F: Fn(f64) -> Acc + Sync,
{
    match RadialPlan::new(a, b, extra, panels, None) {
        Ok(mut plan) => {
            // a plain interval, not a radius
            plan.segments.iter_mut().for_each(|s| s.flip = false);
            integrate_plan_acc(&plan, cfg, tol, |x, _| f(x))
        }
        Err(_) => QuadResult {
            value: Complex64::new(f64::NAN, 0.0),
            error: f64::INFINITY,
            converged: false,
        },
    }
}

// ---------------------------------------------------------------------------
// polar rectangles and boxes
// ---------------------------------------------------------------------------

/// Angular panel count proportional to the angular width.
fn angular_panels(width: f64, cfg: &QuadratureConfig) -> usize {
    cfg.panels * ((width / (0.5 * PI)).ceil() as usize).max(1)
}

/// `int_{rho_lo}^{rho_hi} int_{phi_lo}^{phi_hi} f dA` with `rho_hi < 1`.
pub fn integrate_polar_rect(f: &Symbol, rect: &PolarBox, cfg: &QuadratureConfig) -> Result<QuadResult> {
    cfg.validate()?;
    if rect.rho_hi >= 1.0 {
        return Err(Error::BadParameters(
            "polar rectangle touches the boundary circle; use a boundary rule".into(),
        ));
    }
    let tol = cfg.tolerance;
    let plan = RadialPlan::for_symbol(f, rect.rho_lo, rect.rho_hi, cfg)?;
    let width = rect.phi_hi - rect.phi_lo;
    if width <= 0.0 || rect.rho_hi <= rect.rho_lo {
        return Ok(QuadResult::zero());
    }
    if f.is_radial() {
        let phi = rect.phi_lo;
        let scale = width / PI;
        let inner = integrate_plan(&plan, cfg, tol / scale, |r, t| f.eval_gap(r, t, phi) * r);
        return Ok(inner.scaled(scale));
    }
    let inner_tol = 0.1 * tol / width;
    let out = integrate_interval_acc(
        rect.phi_lo,
        rect.phi_hi,
        &[],
        angular_panels(width, cfg),
        cfg,
        0.9 * tol,
        |phi| Acc::nested(integrate_plan(&plan, cfg, inner_tol, |r, t| f.eval_gap(r, t, phi) * (r / PI))),
    );
    Ok(out)
}

/// `int_{B} f dA` for a polar box.
pub fn integrate_box(f: &Symbol, b: &PolarBox, cfg: &QuadratureConfig) -> Result<QuadResult> {
    integrate_polar_rect(f, b, cfg)
}

/// Box average `f^(z)`.
pub fn box_average(f: &Symbol, z: Point, cfg: &QuadratureConfig) -> Result<QuadResult> {
    let b = box_of(z);
    let area = b.area();
    Ok(integrate_box(f, &b, &cfg.with_tolerance(cfg.tolerance * area))?.scaled(1.0 / area))
}

// ---------------------------------------------------------------------------
// hyperbolic discs
// ---------------------------------------------------------------------------

/// Angle at the origin subtended by the intersection of the circle `|w| = rho`
/// with a Euclidean disc of center distance `c` and radius `rad`.
/// Half-angle (Heron) form, accurate at the tangent radii.
pub fn lens_angle(rho: f64, c: f64, rad: f64) -> f64 {
    if rho + c <= rad {
        return TAU;
    }
    if rho <= c - rad || rho >= c + rad {
        return 0.0;
    }
    lens_from_sides(rad + c - rho, rad + rho - c, rho + c - rad, rho + c + rad)
}

/// Triangle with sides `rad, rho, c` given through `s - 2 rho`, `s - 2 c`,
/// `s - 2 rad` and the perimeter `s`; half of the lens angle is the angle
/// opposite `rad`.
fn lens_from_sides(sa: f64, sb: f64, sc: f64, s: f64) -> f64 {
    let t = ((sa * sb) / (s * sc)).max(0.0).sqrt();
    4.0 * t.atan()
}

/// Boundary radii of the Euclidean disc `|w - center| < rad` along the ray at `phi`.
fn ray_chord(center: Complex64, rad: f64, phi: f64) -> Option<(f64, f64)> {
    let p = (center.conj() * Complex64::from_polar(1.0, phi)).re;
    let q = center.norm_sqr() - rad * rad;
    let disc = p * p - q;
    if disc <= 0.0 {
        return None;
    }
    let root = disc.sqrt();
    if q < 0.0 {
        return Some((0.0, p + root));
    }
    if p <= 0.0 {
        return None;
    }
    let outer = p + root;
    Some((q / outer, outer))
}

/// Map between `rho` on `[lo, hi]` and `psi` on `[0, pi]`, `rho = lo + h (1 - cos psi)`.
#[derive(Clone, Copy)]
struct CosineMap {
    lo: f64,
    hi: f64,
}

impl CosineMap {
    fn half(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    fn rho(&self, psi: f64) -> f64 {
        let h = self.half();
        if psi <= 0.5 * PI {
            self.lo + 2.0 * h * (0.5 * psi).sin().powi(2)
        } else {
            self.hi - 2.0 * h * (0.5 * psi).cos().powi(2)
        }
    }

    fn psi(&self, rho: f64) -> f64 {
        let h = self.half();
        if rho <= self.lo + h {
            2.0 * (((rho - self.lo) / (2.0 * h)).max(0.0).sqrt()).min(1.0).asin()
        } else {
            PI - 2.0 * (((self.hi - rho) / (2.0 * h)).max(0.0).sqrt()).min(1.0).asin()
        }
    }

    /// `(rho, 1 - rho, rho - lo, hi - rho)`, each difference computed
    /// without cancellation.
    fn sides(&self, psi: f64) -> (f64, f64, f64, f64) {
        let h = self.half();
        let below = 2.0 * h * (0.5 * psi).sin().powi(2);
        let above = 2.0 * h * (0.5 * psi).cos().powi(2);
        if psi <= 0.5 * PI {
            (self.lo + below, (1.0 - self.lo) - below, below, above)
        } else {
            (self.hi - above, (1.0 - self.hi) + above, below, above)
        }
    }

    fn jacobian(&self, psi: f64) -> f64 {
        self.half() * psi.sin()
    }
}

/// `int_{D} f dA` over a hyperbolic disc.
pub fn integrate_disc(f: &Symbol, d: &DiscRegion, cfg: &QuadratureConfig) -> Result<QuadResult> {
    cfg.validate()?;
    let center = d.euclidean_center();
    let rad = d.euclidean_radius();
    let c = center.norm();
    if c + rad >= 1.0 {
        return Err(Error::BadParameters("disc is not relatively compact".into()));
    }
    let tol = cfg.tolerance;
    if f.is_radial() {
        let mut total = QuadResult::zero();
        let ring_lo = (c - rad).abs();
        if d.contains_origin || c < rad {
            // full circles for rho < rad - c
            let plan = RadialPlan::for_symbol(f, 0.0, ring_lo, cfg)?;
            total = total.plus(integrate_plan(&plan, cfg, 0.5 * tol, |r, t| f.eval_gap(r, t, 0.0) * (2.0 * r)));
        }
        if c > 0.0 {
            let map = CosineMap {
                lo: ring_lo,
                hi: c + rad,
            };
            // uniform in psi, knots mapped from rho
            let uniform: Vec<f64> = (1..cfg.panels * 2).map(|i| map.rho(PI * i as f64 / (cfg.panels * 2) as f64)).collect();
            let mut extra = uniform;
            extra.extend(f.flags().radial_breaks.iter().copied());
            let plan_rho = RadialPlan::new(map.lo, map.hi, &extra, 1, f.oscillation_exponent())?;
            let psi_plan = MappedPlan {
                plan: &plan_rho,
                map,
            };
            total = total.plus(psi_plan.integrate(cfg, 0.5 * tol, |psi| {
                let (r, t, below, above) = map.sides(psi);
                let lens = if c >= rad {
                    lens_from_sides(above, below, r + c - rad, r + c + rad)
                } else {
                    lens_from_sides(above, r + rad - c, below, r + c + rad)
                };
                f.eval_gap(r, t, 0.0) * (lens * r / PI * map.jacobian(psi))
            }));
        }
        return Ok(total);
    }

    let oscillation = f.oscillation_exponent();
    let breaks = f.flags().radial_breaks.clone();
    let radial_at = |phi: f64, inner_tol: f64| -> Acc {
        match ray_chord(center, rad, phi) {
            None => Acc::zero(),
            Some((r1, r2)) => match RadialPlan::new(r1, r2, &breaks, cfg.panels, oscillation) {
                Ok(plan) => Acc::nested(integrate_plan(&plan, cfg, inner_tol, |r, t| f.eval_gap(r, t, phi) * (r / PI))),
                Err(_) => Acc {
                    value: Complex64::new(f64::NAN, 0.0),
                    abs: f64::NAN,
                    err: f64::INFINITY,
                    ok: false,
                },
            },
        }
    };
    if c <= rad {
        let inner_tol = 0.1 * tol / TAU;
        return Ok(integrate_interval_acc(0.0, TAU, &[], cfg.panels * 4, cfg, 0.9 * tol, |phi| {
            radial_at(phi, inner_tol)
        }));
    }
    // phi = theta + theta0 sin u smooths the square-root behaviour at the tangent rays
    let theta = center.arg();
    let theta0 = (rad / c).asin();
    let inner_tol = 0.1 * tol / (2.0 * theta0);
    Ok(integrate_interval_acc(-0.5 * PI, 0.5 * PI, &[], cfg.panels * 2, cfg, 0.9 * tol, |u| {
        let mut a = radial_at(theta + theta0 * u.sin(), inner_tol);
        let jac = theta0 * u.cos();
        a.value *= jac;
        a.abs *= jac;
        a.err *= jac;
        a
    }))
}

/// Average of `f` over a hyperbolic disc, normalized by its closed-form area.
pub fn disc_average(f: &Symbol, d: &DiscRegion, cfg: &QuadratureConfig) -> Result<QuadResult> {
    let area = d.area_closed_form();
    Ok(integrate_disc(f, d, &cfg.with_tolerance(cfg.tolerance * area))?.scaled(1.0 / area))
}

struct MappedPlan<'a> {
    plan: &'a RadialPlan,
    map: CosineMap,
}

impl MappedPlan<'_> {
    fn integrate<F: Fn(f64) -> Complex64 + Sync>(&self, cfg: &QuadratureConfig, tol: f64, f: F) -> QuadResult {
        let rule = gauss_legendre(cfg.nodes);
        let g = |x: f64| Acc::point(f(x));
        let (parts, noise) = global_adapt(
            self.plan.len(),
            cfg,
            tol,
            |i, pieces| {
                let (r0, r1) = self.plan.panel(i);
                let (x0, x1) = (self.map.psi(r0), self.map.psi(r1));
                if x1 > x0 {
                    composite(&g, x0, x1, pieces, rule)
                } else {
                    Acc::zero()
                }
            },
            // psi is quantized too, and d rho / d psi <= half
            |i| {
                let t = self.plan.panel_gaps(i).1.max(f64::MIN_POSITIVE);
                self.plan.panel_condition(i) * (1.0 + PI * self.map.half() / t)
            },
        );
        finish(sum_acc(&parts).with_noise(noise), tol)
    }
}

// ---------------------------------------------------------------------------
// integrals reaching the boundary circle
// ---------------------------------------------------------------------------

/// Fixed nodes and weights for `int_a^1 g(rho) drho`, where `g` is a symbol
/// part times a weight that is smooth on the scale `sigma` near `rho = 1`.
///
/// Non-oscillatory parts use panels graded geometrically toward 1. For a
/// pure oscillation the panels between consecutive zeros are summed
/// directly up to a zero `rho_M`, and the remaining alternating series of
/// panel integrals is summed with an Euler transform of `EULER_TERMS` further
/// panels; the transform weights are folded into the node weights.
#[derive(Debug, Clone)]
pub struct RadialRule {
    pub nodes: Vec<f64>,
    /// `1 - nodes[i]` to full relative precision.
    pub gaps: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RadialRule {
    pub fn to_boundary(a: f64, breaks: &[f64], oscillation: Option<f64>, sigma: f64, panels: usize, nodes: usize) -> Result<Self> {
        Self::build(a, breaks, oscillation, sigma, panels, nodes, 1.0, EULER_TERMS)
    }

    /// Rule for one boundary part of a symbol.
    pub fn for_part(part: &Symbol, a: f64, sigma: f64, cfg: &QuadratureConfig) -> Result<Self> {
        Self::to_boundary(a, &part.flags().radial_breaks, pure_exponent(part), sigma, cfg.panels, cfg.nodes)
    }

    /// Finer rule used for error estimates: doubled nodes, later start of the
    /// tail transform and more transform terms.
    pub fn check_for_part(part: &Symbol, a: f64, sigma: f64, cfg: &QuadratureConfig) -> Result<Self> {
        Self::build(
            a,
            &part.flags().radial_breaks,
            pure_exponent(part),
            sigma,
            cfg.panels * 2,
            (cfg.nodes * 2).min(MAX_NODES),
            0.5,
            EULER_TERMS + 8,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        a: f64,
        breaks: &[f64],
        oscillation: Option<f64>,
        sigma: f64,
        panels: usize,
        nodes: usize,
        stop_scale: f64,
        euler_terms: usize,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&a) || !(sigma > 0.0) {
            return Err(Error::BadParameters(format!("boundary rule from {a} with scale {sigma}")));
        }
        let rule = gauss_legendre(nodes);
        let mut out = RadialRule {
            nodes: Vec::new(),
            gaps: Vec::new(),
            weights: Vec::new(),
        };
        // panels given by their edges' boundary distances t0 > t1
        let push_panel = |t0: f64, t1: f64, scale: f64, out: &mut RadialRule| {
            let h = 0.5 * (t0 - t1);
            let c = 0.5 * (t0 + t1);
            for &(x, w) in rule {
                let t = c + h * x;
                out.nodes.push(1.0 - t);
                out.gaps.push(t);
                out.weights.push(w * h * scale);
            }
        };
        match oscillation {
            None => {
                let mut edges: Vec<f64> = (0..panels).map(|i| a + 0.5 * (1.0 - a) * i as f64 / panels as f64).collect();
                let mut u = 0.5 * (1.0 - a);
                while u > 1e-16 {
                    edges.push(1.0 - u);
                    u *= 0.5;
                }
                edges.extend(breaks.iter().copied().filter(|&x| x > a && x < 1.0));
                edges.push(1.0);
                edges.sort_by(f64::total_cmp);
                edges.dedup();
                for w in edges.windows(2) {
                    let (t0, t1) = (1.0 - w[0], 1.0 - w[1]);
                    // resolve weights like rho^(1/sigma) that vary on scale sigma
                    let pieces = if t1 > 40.0 * sigma {
                        1
                    } else {
                        ((t0 - t1) / (4.0 * sigma)).ceil().clamp(1.0, 16.0) as usize
                    };
                    let h = (t0 - t1) / pieces as f64;
                    for j in 0..pieces {
                        push_panel(t0 - j as f64 * h, t0 - (j + 1) as f64 * h, 1.0, &mut out);
                    }
                }
            }
            Some(b) => {
                let u_stop = stop_scale * (sigma * b / (20.0 * PI)).powf(1.0 / (1.0 + b));
                let mut m = ((u_stop.min(1.0 - a)).powf(-b) / PI).ceil() as u64;
                // the tail transform needs the whole tail past every break
                let last_break = breaks.iter().copied().filter(|&x| x < 1.0).fold(a, f64::max);
                let first_above_a = knot_range(b, last_break, 1.0 - 1e-300)
                    .map(|(lo, _)| lo)
                    .unwrap_or_else(|| ((1.0 - last_break).powf(-b) / PI).ceil() as u64 + 1);
                m = m.max(first_above_a + 32).max(32);
                let rho_m = oscillation_zero(b, m);
                let plan = RadialPlan::new(a, rho_m, breaks, panels, Some(b))?;
                for i in 0..plan.len() {
                    let (t0, t1) = plan.panel_gaps(i);
                    if t0 > t1 {
                        push_panel(t0, t1, 1.0, &mut out);
                    }
                }
                // E = sum_j C(K, j) T_j / 2^K with T_j the partial sums of the
                // tail panels; panel i carries sum_{j > i} C(K, j) / 2^K.
                let k = euler_terms;
                let binom = binomials(k);
                let denom = 2f64.powi(k as i32);
                for i in 0..k {
                    let factor: f64 = binom[i + 1..].iter().sum::<f64>() / denom;
                    let t0 = oscillation_zero_gap(b, m + i as u64);
                    let t1 = oscillation_zero_gap(b, m + i as u64 + 1);
                    push_panel(t0, t1, factor, &mut out);
                }
            }
        }
        Ok(out)
    }

    /// `sum_i w_i g(rho_i, 1 - rho_i)`.
    pub fn integrate<F: Fn(f64, f64) -> Complex64>(&self, g: F) -> Complex64 {
        (0..self.nodes.len())
            .map(|i| g(self.nodes[i], self.gaps[i]) * self.weights[i])
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn pure_exponent(part: &Symbol) -> Option<f64> {
    part.flags().oscillation.filter(|o| o.pure).map(|o| o.exponent)
}

fn binomials(k: usize) -> Vec<f64> {
    let mut row = vec![1.0f64];
    for _ in 0..k {
        let mut next = vec![1.0; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row
}

/// Boundary parts of `f`, or an error when the symbol cannot be split.
pub fn boundary_parts(f: &Symbol) -> Result<Vec<Symbol>> {
    f.boundary_parts().ok_or_else(|| {
        Error::BadParameters(format!(
            "{}: products of oscillating factors cannot be integrated up to the boundary",
            f.name()
        ))
    })
}

/// `int_a^1 f(rho, phi) weight(rho) drho` with an error estimate from a finer rule.
pub fn radial_integral_to_boundary<W>(f: &Symbol, phi: f64, a: f64, sigma: f64, cfg: &QuadratureConfig, weight: W) -> Result<QuadResult>
where
    W: Fn(f64) -> f64,
{
    let mut total = QuadResult::zero();
    for part in boundary_parts(f)? {
        let coarse = RadialRule::for_part(&part, a, sigma, cfg)?;
        let fine = RadialRule::check_for_part(&part, a, sigma, cfg)?;
        let g = |r: f64, t: f64| part.eval_gap(r, t, phi) * weight(r);
        let v0 = coarse.integrate(g);
        let v1 = fine.integrate(g);
        let error = (v1 - v0).norm();
        total = total.plus(QuadResult {
            value: v1,
            error,
            converged: error.is_finite(),
        });
    }
    total.converged &= total.error <= cfg.tolerance.max(64.0 * f64::EPSILON * total.value.norm());
    Ok(total)
}

/// `int_D g(w) dA(w)` over the whole disc, for `g = f * weight` with the
/// weight concentrated near the direction `focus` on scale `sigma`.
pub fn full_disc_integral<W>(f: &Symbol, focus: Option<f64>, sigma: f64, cfg: &QuadratureConfig, weight: W) -> Result<QuadResult>
where
    W: Fn(f64, f64) -> f64 + Sync,
{
    cfg.validate()?;
    let parts = boundary_parts(f)?;
    let fine_rules: Vec<(Symbol, RadialRule, RadialRule)> = parts
        .into_iter()
        .map(|p| {
            let c = RadialRule::for_part(&p, 0.0, sigma, cfg)?;
            let fi = RadialRule::check_for_part(&p, 0.0, sigma, cfg)?;
            Ok((p, c, fi))
        })
        .collect::<Result<_>>()?;
    let radial_at = |phi: f64| -> Acc {
        let mut acc = Acc::zero();
        for (p, c, fi) in &fine_rules {
            let g = |r: f64, t: f64| p.eval_gap(r, t, phi) * (weight(r, phi) * r / PI);
            let v0 = c.integrate(g);
            let v1 = fi.integrate(g);
            acc.add(Acc {
                value: v1,
                abs: v1.norm(),
                err: (v1 - v0).norm(),
                ok: true,
            });
        }
        acc
    };
    let (lo, hi, edges) = match focus {
        None => (0.0, TAU, Vec::new()),
        Some(theta) => {
            let mut e = Vec::new();
            let mut d = sigma.min(PI);
            while d < PI {
                e.push(theta - d);
                e.push(theta + d);
                d *= 2.0;
            }
            e.push(theta);
            (theta - PI, theta + PI, e)
        }
    };
    let out = integrate_interval_acc(lo, hi, &edges, cfg.panels * 4, cfg, cfg.tolerance, radial_at);
    Ok(out)
}

/// Tensor Gauss–Legendre rule with `n x n` nodes on a polar rectangle.
fn tensor_gauss(f: &Symbol, rect: &PolarBox, n: usize) -> Complex64 {
    let rule = gauss_legendre(n);
    let (hr, cr) = (0.5 * (rect.rho_hi - rect.rho_lo), 0.5 * (rect.rho_hi + rect.rho_lo));
    let (hp, cp) = (0.5 * (rect.phi_hi - rect.phi_lo), 0.5 * (rect.phi_hi + rect.phi_lo));
    let mut total = Complex64::new(0.0, 0.0);
    for &(x, wx) in rule {
        let r = cr + hr * x;
        let row: Complex64 = rule.iter().map(|&(y, wy)| f.eval(r, cp + hp * y) * wy).sum();
        total += row * (wx * r);
    }
    total * (hr * hp / PI)
}

// ---------------------------------------------------------------------------
// prefix tables
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum PrefixData {
    /// `(rows) x (cols)` row-major cumulative integrals.
    Dense(Vec<Complex64>),
    /// Cumulative `(1/pi) int f rho drho`, per row; radial symbols only.
    Separable(Vec<Complex64>),
}

/// Cumulative integrals `S[i][j] = int_{[rho_0, rho_i] x [phi_0, phi_j]} f dA`
/// over a grid on `B(z)`. Any sub-box with grid corners is four lookups.
#[derive(Debug, Clone)]
pub struct PrefixTable {
    pub z: Point,
    pub region: PolarBox,
    pub rho: Vec<f64>,
    pub phi: Vec<f64>,
    data: PrefixData,
    pub error: f64,
    pub converged: bool,
}

impl PrefixTable {
    /// Grid with `grid.0` radial and `grid.1` angular intervals. For radial
    /// symbols every oscillation zero inside the box is also a grid line.
    pub fn build(f: &Symbol, z: Point, grid: (usize, usize), cfg: &QuadratureConfig) -> Result<Self> {
        cfg.validate()?;
        if grid.0 == 0 || grid.1 == 0 {
            return Err(Error::BadParameters("prefix grid needs at least one cell".into()));
        }
        let region = box_of(z);
        let phi: Vec<f64> = (0..=grid.1)
            .map(|j| region.phi_lo + (region.phi_hi - region.phi_lo) * j as f64 / grid.1 as f64)
            .collect();
        let tol = cfg.tolerance * region.area();
        if f.is_radial() {
            let plan = RadialPlan::new(region.rho_lo, region.rho_hi, &f.flags().radial_breaks, grid.0, f.oscillation_exponent())?;
            let rho = plan.edges();
            let n = plan.len();
            let width = region.phi_hi - region.phi_lo;
            let rule = gauss_legendre(cfg.nodes);
            let g = |r: f64, t: f64| Acc::point(f.eval_gap(r, t, 0.0) * (r / PI));
            let (cells, noise) = global_adapt(
                n,
                cfg,
                tol / width,
                |i, pieces| plan.panel_composite(i, pieces, rule, &g),
                |i| plan.panel_condition(i),
            );
            let mut cum = Vec::with_capacity(n as usize + 1);
            let mut run = Complex64::new(0.0, 0.0);
            let (mut error, mut ok) = (noise, true);
            cum.push(run);
            for a in cells {
                run += a.value;
                error += a.err;
                ok &= a.ok;
                cum.push(run);
            }
            return Ok(Self {
                z,
                region,
                rho,
                phi,
                data: PrefixData::Separable(cum),
                error: error * width,
                converged: ok || error * width <= tol,
            });
        }
        let rho: Vec<f64> = (0..=grid.0)
            .map(|i| region.rho_lo + (region.rho_hi - region.rho_lo) * i as f64 / grid.0 as f64)
            .collect();
        let (nr, np) = (grid.0, grid.1);
        let cell_cfg = cfg.with_tolerance(tol / (nr * np) as f64);
        let smooth = f.flags().oscillation.is_none()
            && f.flags().continuous
            && !f.flags().radial_breaks.iter().any(|&b| b > region.rho_lo && b < region.rho_hi);
        let cells: Vec<Result<QuadResult>> = (0..nr * np)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / np, k % np);
                let rect = PolarBox {
                    rho_lo: rho[i],
                    rho_hi: rho[i + 1],
                    phi_lo: phi[j],
                    phi_hi: phi[j + 1],
                };
                if smooth {
                    // tensor Gauss at two orders settles almost every cell
                    let coarse = tensor_gauss(f, &rect, cfg.nodes);
                    let fine = tensor_gauss(f, &rect, (2 * cfg.nodes).min(MAX_NODES));
                    let error = (fine - coarse).norm();
                    if error <= cell_cfg.tolerance {
                        return Ok(QuadResult {
                            value: fine,
                            error,
                            converged: true,
                        });
                    }
                }
                integrate_polar_rect(f, &rect, &cell_cfg)
            })
            .collect();
        let mut data = vec![Complex64::new(0.0, 0.0); (nr + 1) * (np + 1)];
        let (mut error, mut ok) = (0.0, true);
        for i in 0..nr {
            for j in 0..np {
                let q = cells[i * np + j].clone()?;
                error += q.error;
                ok &= q.converged;
                let idx = (i + 1) * (np + 1) + (j + 1);
                data[idx] = q.value + data[i * (np + 1) + (j + 1)] + data[(i + 1) * (np + 1) + j]
                    - data[i * (np + 1) + j];
            }
        }
        Ok(Self {
            z,
            region,
            rho,
            phi,
            data: PrefixData::Dense(data),
            error,
            converged: ok,
        })
    }

    pub fn rows(&self) -> usize {
        self.rho.len()
    }

    pub fn cols(&self) -> usize {
        self.phi.len()
    }

    /// `S[i][j]`.
    pub fn value(&self, i: usize, j: usize) -> Complex64 {
        match &self.data {
            PrefixData::Dense(d) => d[i * self.phi.len() + j],
            PrefixData::Separable(cum) => cum[i] * (self.phi[j] - self.phi[0]),
        }
    }

    pub fn total(&self) -> Complex64 {
        self.value(self.rows() - 1, self.cols() - 1)
    }

    /// Integral over `[rho_i0, rho_i1] x [phi_j0, phi_j1]` by inclusion–exclusion.
    pub fn rect(&self, i0: usize, j0: usize, i1: usize, j1: usize) -> Complex64 {
        self.value(i1, j1) - self.value(i0, j1) - self.value(i1, j0) + self.value(i0, j0)
    }

    /// Closed-form normalized area of `[rho_0, rho_i] x [phi_0, phi_j]`.
    pub fn area(&self, i: usize, j: usize) -> f64 {
        (self.phi[j] - self.phi[0]) * (self.rho[i] * self.rho[i] - self.rho[0] * self.rho[0]) / TAU
    }
}
