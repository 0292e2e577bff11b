//! Finite sections of Toeplitz and Hankel operators on A² in the orthonormal
//! basis `e_n(w) = sqrt(n + 1) w^n`, reproducing kernels and Berezin
//! transforms.
//!
//! Matrix entries are `<f e_n, e_m> = sqrt((m+1)(n+1)) 2 int_0^1 fhat_{m-n}(rho)
//! rho^{m+n+1} drho`, where `fhat_k(rho)` is the `k`-th angular Fourier
//! coefficient of `f` on the circle of radius `rho`. The angular coefficients
//! come from an FFT at every radial node, the radial integral from a
//! [`RadialRule`] per boundary part of the symbol.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Warning};
use crate::geometry::{mobius_c, Point};
use crate::matrix::{self, ComplexMatrix};
use crate::oscillation::averaging_local;
use crate::quadrature::{
    boundary_parts, full_disc_integral, radial_integral_to_boundary, QuadResult, QuadratureConfig, RadialRule,
};
use crate::symbols::{annulus_part, constant_real, Symbol, SymbolFlags};
use crate::thresholds::{HANKEL_TAIL_FRACTION, KERNEL_TAIL, UNBOUNDED_GROWTH};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Radius beyond which the reflection check warns about slow kernel decay.
pub const REFLECTION_RADIUS: f64 = 0.7;

/// Cap on angular samples per radial node for symbols of unknown width.
const MAX_ANGULAR_SAMPLES: usize = 8192;

/// Taylor coefficients of an element of A² in the `e_n` basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    coeffs: Vec<Complex64>,
}

impl CoefficientVector {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Dimension("empty coefficient vector".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::BadParameters("coefficients must be finite".into()));
        }
        Ok(Self { coeffs })
    }

    /// `e_k` as a vector of length `len`.
    pub fn basis(len: usize, k: usize) -> Result<Self> {
        if k >= len {
            return Err(Error::Dimension(format!("e_{k} in a space of dimension {len}")));
        }
        let mut c = vec![ZERO; len];
        c[k] = Complex64::new(1.0, 0.0);
        Self::new(c)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Index of the last nonzero coefficient.
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| *c != ZERO).unwrap_or(0)
    }

    pub fn norm(&self) -> f64 {
        matrix::norm(&self.coeffs)
    }

    /// `sum_n c_n e_n(w)`.
    pub fn eval(&self, w: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(ZERO, |acc, (n, &c)| acc * w + c * ((n + 1) as f64).sqrt())
    }
}

/// Reproducing kernel `K_z(w) = (1 - w conj(z))^-2` at a base point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelPoint {
    pub z: Point,
}

impl KernelPoint {
    pub fn new(z: Point) -> Self {
        Self { z }
    }

    pub fn kernel(&self, w: Complex64) -> Complex64 {
        let d = Complex64::new(1.0, 0.0) - w * self.z.value().conj();
        (d * d).inv()
    }

    /// `||K_z||^2 = K_z(z) = (1 - |z|^2)^-2`.
    pub fn norm_sq(&self) -> f64 {
        (1.0 - self.z.r() * self.z.r()).powi(-2)
    }

    /// `k_z = K_z / ||K_z||`.
    pub fn normalized(&self, w: Complex64) -> Complex64 {
        self.kernel(w) / self.norm_sq().sqrt()
    }

    /// `c_n = sqrt(n + 1) conj(z)^n` for `n < len`.
    pub fn coefficients(&self, len: usize) -> CoefficientVector {
        let zb = self.z.value().conj();
        let mut p = Complex64::new(1.0, 0.0);
        let c = (0..len)
            .map(|n| {
                let v = p * ((n + 1) as f64).sqrt();
                p *= zb;
                v
            })
            .collect();
        CoefficientVector { coeffs: c }
    }

    /// `sum_{n >= len} |c_n|^2 / ||K_z||^2 = t^len (len + 1 - len t)`, `t = |z|^2`.
    pub fn tail_mass(&self, len: usize) -> f64 {
        let t = self.z.r() * self.z.r();
        let n = len as f64;
        t.powf(n) * (n + 1.0 - n * t)
    }

    /// `int |k_z|^2 dA` by quadrature over the disc.
    pub fn normalization(&self, cfg: &QuadratureConfig) -> Result<QuadResult> {
        let z = self.z.value();
        let s2 = self.z.r() * self.z.r();
        full_disc_integral(
            &constant_real(1.0),
            Some(self.z.theta()),
            1.0 - self.z.r(),
            cfg,
            move |r, p| {
                let d = (Complex64::new(1.0, 0.0) - z.conj() * Complex64::from_polar(r, p)).norm_sqr();
                (1.0 - s2).powi(2) / (d * d)
            },
        )
    }
}

// ---------------------------------------------------------------------------
// Toeplitz sections
// ---------------------------------------------------------------------------

/// Rectangular block `0 <= m < rows`, `0 <= n < cols` of `T_f`.
#[derive(Debug, Clone)]
pub struct Section {
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub entries: Vec<Complex64>,
    /// Largest entry difference between the working and the check rules.
    pub error: f64,
    /// Entries with `|m - n| > band` are zero by construction.
    pub band: usize,
}

impl Section {
    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.entries[m * self.cols + n]
    }

    pub fn apply(&self, g: &[Complex64]) -> Result<Vec<Complex64>> {
        if g.len() != self.cols {
            return Err(Error::Dimension(format!("vector of length {} for {} columns", g.len(), self.cols)));
        }
        Ok((0..self.rows)
            .map(|m| {
                self.entries[m * self.cols..(m + 1) * self.cols]
                    .iter()
                    .zip(g)
                    .map(|(&a, &b)| a * b)
                    .sum()
            })
            .collect())
    }

    pub fn into_matrix(self) -> Result<ComplexMatrix> {
        if self.rows != self.cols {
            return Err(Error::Dimension(format!("{} x {} section is not square", self.rows, self.cols)));
        }
        ComplexMatrix::from_vec(self.rows, self.entries)
    }
}

/// Angular modes `fhat_k(rho)`, `|k| <= kmax`, stored at index `k + kmax`.
fn angular_modes(part: &Symbol, rho: f64, gap: f64, kmax: usize, samples: usize, planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let mut out = vec![ZERO; 2 * kmax + 1];
    if part.is_radial() {
        out[kmax] = part.eval_gap(rho, gap, 0.0);
        return out;
    }
    let fft = planner.plan_fft_forward(samples);
    let mut buf: Vec<Complex64> = (0..samples)
        .map(|j| part.eval_gap(rho, gap, 2.0 * PI * j as f64 / samples as f64))
        .collect();
    fft.process(&mut buf);
    let scale = 1.0 / samples as f64;
    for k in -(kmax as i64)..=(kmax as i64) {
        out[(k + kmax as i64) as usize] = buf[k.rem_euclid(samples as i64) as usize] * scale;
    }
    out
}

/// `2 sum_i w_i fhat_{m-n}(rho_i) rho_i^{m+n+1}`, without the `sqrt((m+1)(n+1))`.
fn raw_section(parts: &[(Symbol, RadialRule)], rows: usize, cols: usize, band: usize, samples: usize) -> Vec<Complex64> {
    let kmax = band;
    let maxpow = rows + cols;
    // per node: weight, modes and powers
    let nodes: Vec<(f64, Vec<Complex64>, Vec<f64>)> = parts
        .iter()
        .flat_map(|(p, rule)| (0..rule.len()).map(move |i| (p, rule, i)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map_init(FftPlanner::new, |planner, (p, rule, i)| {
            let (rho, gap, w) = (rule.nodes[i], rule.gaps[i], rule.weights[i]);
            let modes = angular_modes(p, rho, gap, kmax, samples, planner);
            let lr = (-gap).ln_1p();
            let pows = (0..=maxpow).map(|k| (k as f64 * lr).exp()).collect();
            (w, modes, pows)
        })
        .collect();
    (0..rows)
        .into_par_iter()
        .flat_map_iter(|m| {
            let nodes = &nodes;
            (0..cols).map(move |n| {
                if m.abs_diff(n) > band {
                    return ZERO;
                }
                let k = (m as i64 - n as i64 + kmax as i64) as usize;
                let p = m + n + 1;
                nodes.iter().map(|(w, modes, pows)| modes[k] * (w * pows[p])).sum::<Complex64>() * 2.0
            })
        })
        .collect()
}

fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// Block of `T_f` with rows `m < rows` and columns `n < cols`.
pub fn toeplitz_section(f: &Symbol, rows: usize, cols: usize, cfg: &QuadratureConfig) -> Result<Section> {
    cfg.validate()?;
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension("empty section".into()));
    }
    let span = rows.max(cols) - 1;
    let band = if f.is_radial() {
        0
    } else {
        f.flags().fourier_width.unwrap_or(span).min(span)
    };
    let sigma = 1.0 / (rows + cols) as f64;
    let parts = boundary_parts(f)?;
    let coarse: Vec<(Symbol, RadialRule)> = parts
        .iter()
        .map(|p| Ok((p.clone(), RadialRule::for_part(p, 0.0, sigma, cfg)?)))
        .collect::<Result<_>>()?;
    let fine: Vec<(Symbol, RadialRule)> = parts
        .iter()
        .map(|p| Ok((p.clone(), RadialRule::check_for_part(p, 0.0, sigma, cfg)?)))
        .collect::<Result<_>>()?;
    let scaled_diff = |a: &[Complex64], b: &mut [Complex64]| {
        let mut error = 0.0f64;
        for m in 0..rows {
            for n in 0..cols {
                let s = (((m + 1) * (n + 1)) as f64).sqrt();
                let i = m * cols + n;
                b[i] *= s;
                error = error.max((b[i] - a[i] * s).norm());
            }
        }
        error
    };
    let (b, error) = match (f.is_radial(), f.flags().fourier_width) {
        (true, _) | (false, Some(_)) => {
            // exact angular modes for finite width
            let m = if f.is_radial() { 1 } else { next_pow2(2 * band + 1) };
            let a = raw_section(&coarse, rows, cols, band, m);
            let mut b = raw_section(&fine, rows, cols, band, m);
            let e = scaled_diff(&a, &mut b);
            (b, e)
        }
        (false, None) => {
            // double the angular samples until aliasing drops below tolerance
            let mut m = next_pow2(4 * (band + 1)).max(64);
            loop {
                let a = raw_section(&coarse, rows, cols, band, m);
                let mut b = raw_section(&fine, rows, cols, band, 2 * m);
                let e = scaled_diff(&a, &mut b);
                let scale = b.iter().map(|c| c.norm()).fold(1.0, f64::max);
                if e <= cfg.tolerance * scale || m >= MAX_ANGULAR_SAMPLES {
                    break (b, e);
                }
                m *= 2;
            }
        }
    };
    if b.iter().any(|c| !c.is_finite()) {
        return Err(Error::ToleranceNotReached {
            value: f64::NAN,
            error: f64::INFINITY,
        });
    }
    Ok(Section {
        rows,
        cols,
        entries: b,
        error,
        band,
    })
}

fn require_section(s: Section, cfg: &QuadratureConfig) -> Result<Section> {
    let scale = s.entries.iter().map(|c| c.norm()).fold(1.0, f64::max);
    if s.error <= cfg.tolerance * scale {
        Ok(s)
    } else {
        Err(Error::ToleranceNotReached {
            value: scale,
            error: s.error,
        })
    }
}

/// `N x N` finite section of `T_f`.
pub fn toeplitz_matrix(f: &Symbol, n: usize, cfg: &QuadratureConfig) -> Result<ComplexMatrix> {
    require_section(toeplitz_section(f, n, n, cfg)?, cfg)?.into_matrix()
}

/// `d_n = 2 (n + 1) int_0^1 f(rho) rho^{2n+1} drho` for a radial symbol.
pub fn toeplitz_radial_diag(f: &Symbol, n: usize, cfg: &QuadratureConfig) -> Result<Vec<Complex64>> {
    if !f.is_radial() {
        return Err(Error::BadParameters(format!("{} is not radial", f.name())));
    }
    let s = require_section(toeplitz_section(f, n, n, cfg)?, cfg)?;
    Ok((0..n).map(|i| s.get(i, i)).collect())
}

// ---------------------------------------------------------------------------
// Berezin transforms
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BerezinRoute {
    /// `int f o phi_z dA`.
    Mobius,
    /// `int f |k_z|^2 dA`.
    Kernel,
}

/// Möbius composition for bounded smooth symbols; the kernel integral where
/// composition would destroy radial structure (radial, oscillating,
/// unbounded or piecewise symbols).
pub fn berezin_route(f: &Symbol) -> BerezinRoute {
    let fl = f.flags();
    if f.is_radial() || fl.oscillation.is_some() || !fl.radial_breaks.is_empty() || fl.bound.is_none() {
        BerezinRoute::Kernel
    } else {
        BerezinRoute::Mobius
    }
}

pub fn berezin_symbol_via(f: &Symbol, z: Point, route: BerezinRoute, cfg: &QuadratureConfig) -> Result<QuadResult> {
    let s = z.r();
    let zc = z.value();
    let sigma = 1.0 - s;
    match route {
        BerezinRoute::Mobius => full_disc_integral(&f.compose_mobius(zc), Some(z.theta()), sigma, cfg, |_, _| 1.0),
        BerezinRoute::Kernel if f.is_radial() => {
            let s2 = s * s;
            radial_integral_to_boundary(f, 0.0, 0.0, sigma, cfg, move |r| {
                let q = 1.0 - r * r * s2;
                (1.0 - s2).powi(2) * 2.0 * r * (1.0 + r * r * s2) / (q * q * q)
            })
        }
        BerezinRoute::Kernel => {
            let s2 = s * s;
            full_disc_integral(f, Some(z.theta()), sigma, cfg, move |r, p| {
                let d = (Complex64::new(1.0, 0.0) - zc.conj() * Complex64::from_polar(r, p)).norm_sqr();
                (1.0 - s2).powi(2) / (d * d)
            })
        }
    }
}

/// Berezin transform `f~(z)`.
pub fn berezin_symbol(f: &Symbol, z: Point, cfg: &QuadratureConfig) -> Result<Complex64> {
    berezin_symbol_via(f, z, berezin_route(f), cfg)?.require(cfg.tolerance.max(1e-7))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerezinValue {
    pub value: Complex64,
    /// Kernel mass beyond the truncation, relative to `||K_z||^2`.
    pub tail_mass: f64,
    pub warnings: Vec<Warning>,
}

/// `<T K_z, K_z> / <K_z, K_z>` with `K_z` truncated to the section size.
pub fn berezin_operator(t: &ComplexMatrix, z: Point) -> BerezinValue {
    let kp = KernelPoint::new(z);
    let c = kp.coefficients(t.dim());
    let tc = t.mul_vec(c.as_slice()).expect("kernel vector matches the section");
    let value = matrix::dot(c.as_slice(), &tc) / c.norm().powi(2);
    let tail_mass = kp.tail_mass(t.dim());
    let mut warnings = Vec::new();
    if tail_mass > KERNEL_TAIL {
        warnings.push(Warning::Truncation { tail: tail_mass });
    }
    BerezinValue {
        value,
        tail_mass,
        warnings,
    }
}

// ---------------------------------------------------------------------------
// strong limits, Hankel operators, semi-commutators
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub cuts: Vec<f64>,
    /// `||T_{chi f} g||` for the annuli between successive cuts; the last
    /// entry is the part outside the final cut.
    pub residuals: Vec<f64>,
    pub warnings: Vec<Warning>,
}

impl TruncationReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.residuals.windows(2).all(|w| w[1] < w[0])
    }
}

/// Cauchy residuals of `T_{chi_rho f} g` as the cut `rho` moves to the circle.
///
/// Whether the averaging functional stays bounded is checked on a small
/// lattice at the first and last cut; growth only produces a warning.
pub fn truncation_convergence(
    f: &Symbol,
    g: &CoefficientVector,
    cuts: &[f64],
    n: usize,
    cfg: &QuadratureConfig,
) -> Result<TruncationReport> {
    if cuts.is_empty() || cuts.iter().any(|&c| !(c > 0.0 && c < 1.0)) || cuts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadParameters(format!("cuts {cuts:?} must increase inside (0, 1)")));
    }
    if g.len() > n {
        return Err(Error::Dimension(format!("input of length {} for N = {n}", g.len())));
    }
    let mut residuals = Vec::with_capacity(cuts.len());
    for (i, &a) in cuts.iter().enumerate() {
        let b = cuts.get(i + 1).copied().unwrap_or(1.0);
        let part = annulus_part(f, a, b)?;
        let s = toeplitz_section(&part, n, g.len(), cfg)?;
        if s.error > cfg.tolerance.max(1e-7) {
            return Err(Error::ToleranceNotReached {
                value: f64::NAN,
                error: s.error,
            });
        }
        residuals.push(matrix::norm(&s.apply(g.as_slice())?));
    }
    let warnings = averaging_check(f, cuts[0], cuts[cuts.len() - 1], cfg);
    Ok(TruncationReport {
        cuts: cuts.to_vec(),
        residuals,
        warnings,
    })
}

fn averaging_check(f: &Symbol, inner: f64, outer: f64, cfg: &QuadratureConfig) -> Vec<Warning> {
    let angles = if f.is_radial() { 1 } else { 4 };
    let sup_at = |r: f64| -> Result<f64> {
        (0..angles)
            .map(|k| averaging_local(f, Point::polar(r, 2.0 * PI * k as f64 / angles as f64), (16, 16), cfg).map(|o| o.value))
            .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))
    };
    match (sup_at(inner), sup_at(outer)) {
        (Ok(a), Ok(b)) => {
            let growth = b / a.max(f64::MIN_POSITIVE);
            if growth > UNBOUNDED_GROWTH {
                vec![Warning::AveragingUnbounded { growth }]
            } else {
                Vec::new()
            }
        }
        (Err(e), _) | (_, Err(e)) => vec![Warning::Precondition(format!("averaging check failed: {e}"))],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HankelReport {
    /// `||H_f g||^2`.
    pub norm_sq: f64,
    /// `||f g||^2` in L².
    pub l2_sq: f64,
    /// `||P(f g)||^2` from the first `len` coefficients.
    pub projected_sq: f64,
    pub len: usize,
    /// Coefficient mass that may lie beyond `len`.
    pub tail: f64,
}

impl HankelReport {
    pub fn norm(&self) -> f64 {
        self.norm_sq.sqrt()
    }
}

/// `||H_f g||^2 = ||f g||^2 - ||P(f g)||^2` with `P(f g)` expanded to `len`
/// coefficients.
pub fn hankel_norm_applied(f: &Symbol, g: &CoefficientVector, len: usize, cfg: &QuadratureConfig) -> Result<HankelReport> {
    if len < g.len() {
        return Err(Error::Dimension(format!("{len} coefficients for an input of length {}", g.len())));
    }
    let gg = g.clone();
    let l2_sq = full_disc_integral(&f.abs_pow(2.0), None, 0.5 / g.len() as f64, cfg, move |r, p| {
        gg.eval(Complex64::from_polar(r, p)).norm_sqr()
    })?
    .require(cfg.tolerance.max(1e-7))?
    .re;
    let s = require_section(toeplitz_section(f, len, g.len(), cfg)?, cfg)?;
    let c = s.apply(g.as_slice())?;
    let projected_sq: f64 = c.iter().map(|x| x.norm_sqr()).sum();
    let exact = f.flags().fourier_width.is_some_and(|w| len > g.degree() + w);
    let tail = if exact {
        0.0
    } else {
        c[3 * len / 4..].iter().map(|x| x.norm_sqr()).sum()
    };
    let norm_sq = (l2_sq - projected_sq).max(0.0);
    if tail > HANKEL_TAIL_FRACTION * norm_sq.max(cfg.tolerance) {
        return Err(Error::TailBoundExceeded { tail, value: norm_sq });
    }
    Ok(HankelReport {
        norm_sq,
        l2_sq,
        projected_sq,
        len,
        tail,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiCommutator {
    /// `||(T_f T_g - T_{fg}) e_0||` from finite sections.
    pub sections: f64,
    /// `||P M_f H_g e_0||` from the pointwise Hankel image.
    pub hankel: f64,
}

impl SemiCommutator {
    pub fn gap(&self) -> f64 {
        (self.sections - self.hankel).abs()
    }
}

/// Both sides of `(T_f T_g - T_{fg}) e_0 = -P M_f H_g e_0`, by independent
/// routes: matrix products of sections, and quadrature of `f (g - P g)`.
pub fn semi_commutator(f: &Symbol, g: &Symbol, n: usize, cfg: &QuadratureConfig) -> Result<SemiCommutator> {
    let tf = toeplitz_matrix(f, n, cfg)?;
    let tg0 = require_section(toeplitz_section(g, n, 1, cfg)?, cfg)?.entries;
    let tfg0 = require_section(toeplitz_section(&f.mul(g), n, 1, cfg)?, cfg)?.entries;
    let lhs: Vec<Complex64> = tf.mul_vec(&tg0)?.iter().zip(&tfg0).map(|(a, b)| a - b).collect();

    let pg = CoefficientVector::new(tg0)?;
    let gc = g.clone();
    let flags = SymbolFlags {
        radial: false,
        bound: None,
        oscillation: None,
        fourier_width: g.flags().fourier_width.map(|w| w.max(n - 1)),
        continuous: g.flags().continuous,
        real_valued: false,
        nonnegative: false,
        ..g.flags().clone()
    };
    let h = Symbol::new(format!("H[{}]e0", g.name()), flags, move |r, p| {
        gc.eval(r, p) - pg.eval(Complex64::from_polar(r, p))
    });
    let rhs = require_section(toeplitz_section(&f.mul(&h), n, 1, cfg)?, cfg)?.entries;
    Ok(SemiCommutator {
        sections: matrix::norm(&lhs),
        hankel: matrix::norm(&rhs),
    })
}

// ---------------------------------------------------------------------------
// reflection
// ---------------------------------------------------------------------------

/// Matrix of `U_z h = (h o phi_z) (1 - |z|^2) / (1 - conj(z) w)^2` on the
/// first `n` basis vectors, from Taylor coefficients sampled on the circle.
pub fn reflection_matrix(z: Point, n: usize) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::Dimension("empty reflection matrix".into()));
    }
    let s = z.r();
    let zc = z.value();
    // aliasing decays like |z|^(samples - n)
    let extra = if s > 0.0 { (60.0 / -s.ln()).ceil() as usize } else { 0 };
    let samples = next_pow2(2 * n + extra).max(64);
    let fft = FftPlanner::new().plan_fft_forward(samples);
    let one = Complex64::new(1.0, 0.0);
    let cols: Vec<Vec<Complex64>> = (0..n)
        .map(|k| {
            let mut buf: Vec<Complex64> = (0..samples)
                .map(|j| {
                    let w = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / samples as f64);
                    let d = one - zc.conj() * w;
                    mobius_c(zc, w).powu(k as u32) * ((k + 1) as f64).sqrt() * (1.0 - s * s) / (d * d)
                })
                .collect();
            fft.process(&mut buf);
            buf
        })
        .collect();
    let scale = 1.0 / samples as f64;
    Ok(ComplexMatrix::from_fn(n, |m, k| cols[k][m] * scale / ((m + 1) as f64).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionReport {
    /// Frobenius norm of `U_z T_f U_z - T_{f o phi_z}` on the leading half block.
    pub discrepancy: f64,
    pub warnings: Vec<Warning>,
}

/// Working size for the products in [`reflection_check`]: `U_z` spreads
/// `e_n` over roughly `n (1 + |z|) / (1 - |z|)` coefficients.
pub fn reflection_work_size(z: Point, n: usize) -> usize {
    let s = z.r();
    let spread = (n / 2) as f64 * (1.0 + s) / (1.0 - s);
    ((1.5 * spread).ceil() as usize + 64).max(n).min(REFLECTION_MAX_SIZE)
}

/// Cap on the working size of the reflection check.
pub const REFLECTION_MAX_SIZE: usize = 768;

/// `||U_z T_f U_z - T_{f o phi_z}||_F` on the leading `(N/2) x (N/2)` block.
/// The products are formed at [`reflection_work_size`], so the block is free
/// of truncation effects unless the size cap is hit.
pub fn reflection_check(f: &Symbol, z: Point, n: usize, cfg: &QuadratureConfig) -> Result<ReflectionReport> {
    if !f.is_bounded() {
        return Err(Error::BadParameters(format!("{} is not bounded", f.name())));
    }
    if n < 2 {
        return Err(Error::Dimension("reflection check needs N >= 2".into()));
    }
    let work = reflection_work_size(z, n);
    let u = reflection_matrix(z, work)?;
    let tf = toeplitz_matrix(f, work, cfg)?;
    let tc = toeplitz_matrix(&f.compose_mobius(z.value()), n / 2, cfg)?;
    let d = u.mul(&tf)?.mul(&u)?.leading(n / 2).sub(&tc)?;
    let mut warnings = Vec::new();
    if z.r() > REFLECTION_RADIUS || work == REFLECTION_MAX_SIZE {
        warnings.push(Warning::Truncation {
            tail: KernelPoint::new(z).tail_mass(work),
        });
    }
    Ok(ReflectionReport {
        discrepancy: d.frobenius_norm(),
        warnings,
    })
}
