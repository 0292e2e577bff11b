//! Spectral probes: eigenvalues of finite sections, cluster sets of the
//! averaged symbol on circles near the boundary, essential-norm estimates,
//! winding numbers and Fredholm indices, and the determinant test for
//! matrix symbols.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Warning};
use crate::geometry::Point;
use crate::matrix::ComplexMatrix;
use crate::operator::berezin_symbol;
use crate::oscillation::{box_average, bwmo_local};
use crate::quadrature::QuadratureConfig;
use crate::symbols::{MatrixSymbol, Symbol};
use crate::thresholds::{DECAY_RATIO, FREDHOLM_MARGIN, UNBOUNDED_GROWTH, WINDING_EPS, WINDING_ROUNDING};

pub use crate::eigen::{eigenpairs, eigenvalues, Eigenpair};

/// Samples per curve are doubled up to this many while a curve is under-resolved.
pub const MAX_CURVE_SAMPLES: usize = 4096;

/// Which boundary proxy of the symbol is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transform {
    /// `f^`, the box average.
    BoxAverage,
    /// `f~`, the Berezin transform.
    Berezin,
}

impl Transform {
    pub fn eval(self, f: &Symbol, z: Point, cfg: &QuadratureConfig) -> Result<Complex64> {
        match self {
            Transform::BoxAverage => box_average(f, z, cfg),
            Transform::Berezin => berezin_symbol(f, z, cfg),
        }
    }
}

/// Closed curve `theta -> f^(r e^{i theta})` (or `f~`), uniformly sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSamples {
    pub radius: f64,
    pub angles: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl CurveSamples {
    pub fn new(radius: f64, values: Vec<Complex64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::BadParameters("empty curve".into()));
        }
        let n = values.len();
        Ok(Self {
            radius,
            angles: (0..n).map(|k| TAU * k as f64 / n as f64).collect(),
            values,
        })
    }

    pub fn min_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `theta,re,im` lines under a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta,re,im\n");
        for (t, v) in self.angles.iter().zip(&self.values) {
            s.push_str(&format!("{t},{},{}\n", v.re, v.im));
        }
        s
    }
}

/// Sample `which` of `f` on the circle of radius `r` at `angles` points.
pub fn sample_curve(f: &Symbol, r: f64, angles: usize, which: Transform, cfg: &QuadratureConfig) -> Result<CurveSamples> {
    if !(r > 0.0 && r < 1.0) || angles == 0 {
        return Err(Error::BadParameters(format!("curve at radius {r} with {angles} samples")));
    }
    let values = if f.is_radial() {
        // constant on circles
        vec![which.eval(f, Point::polar(r, 0.0), cfg)?; angles]
    } else {
        (0..angles)
            .into_par_iter()
            .map(|k| which.eval(f, Point::polar(r, TAU * k as f64 / angles as f64), cfg))
            .collect::<Result<Vec<_>>>()?
    };
    CurveSamples::new(r, values)
}

/// Winding number about 0 from unwrapped argument increments.
pub fn winding_number(c: &CurveSamples) -> Result<i64> {
    let min = c.min_modulus();
    if !(min > WINDING_EPS) {
        return Err(Error::CurveThroughZero { min_modulus: min });
    }
    let n = c.values.len();
    let mut total = 0.0;
    for k in 0..n {
        let d = (c.values[(k + 1) % n] / c.values[k]).arg();
        if d.abs() >= 0.5 * PI {
            return Err(Error::UnderResolved { samples: n });
        }
        total += d;
    }
    let w = total / TAU;
    let rounded = w.round();
    if (w - rounded).abs() >= WINDING_ROUNDING {
        return Err(Error::UnderResolved { samples: n });
    }
    Ok(rounded as i64)
}

/// Winding number of the sampled curve, doubling the samples while the
/// argument increments are too coarse.
pub fn winding_on_circle(f: &Symbol, r: f64, angles: usize, which: Transform, cfg: &QuadratureConfig) -> Result<(i64, CurveSamples)> {
    let mut n = angles.max(4);
    loop {
        let c = sample_curve(f, r, n, which, cfg)?;
        match winding_number(&c) {
            Ok(w) => return Ok((w, c)),
            Err(Error::UnderResolved { .. }) if 2 * n <= MAX_CURVE_SAMPLES => n *= 2,
            Err(e) => return Err(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSet {
    pub which: Transform,
    pub radii: Vec<f64>,
    /// `(radius, theta, value)`.
    pub points: Vec<(f64, f64, Complex64)>,
    /// Largest modulus on each circle.
    pub max_modulus: Vec<f64>,
}

impl ClusterSet {
    /// Outer-circle max modulus over inner-circle max modulus.
    pub fn contraction(&self) -> f64 {
        let first = self.max_modulus[0];
        let last = self.max_modulus[self.max_modulus.len() - 1];
        if first == 0.0 {
            if last == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            last / first
        }
    }
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0 && r < 1.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadParameters(format!("radii {radii:?} must increase inside (0, 1)")));
    }
    Ok(())
}

/// Values of `f^` or `f~` on circles, tagged by radius.
pub fn cluster_set(f: &Symbol, radii: &[f64], angles: usize, which: Transform, cfg: &QuadratureConfig) -> Result<ClusterSet> {
    check_radii(radii)?;
    let mut points = Vec::new();
    let mut max_modulus = Vec::new();
    for &r in radii {
        let c = sample_curve(f, r, if f.is_radial() { 1 } else { angles }, which, cfg)?;
        max_modulus.push(c.max_modulus());
        points.extend(c.angles.iter().zip(&c.values).map(|(&t, &v)| (r, t, v)));
    }
    Ok(ClusterSet {
        which,
        radii: radii.to_vec(),
        points,
        max_modulus,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssentialNormEstimate {
    /// Max `|f^|` on the outermost circle.
    pub estimate: f64,
    pub radii: Vec<f64>,
    pub max_modulus: Vec<f64>,
    pub warnings: Vec<Warning>,
}

/// `max |f^|` on the outermost sampled circle, with the per-circle maxima
/// as the trend toward the boundary.
pub fn essential_norm_estimate(f: &Symbol, radii: &[f64], angles: usize, cfg: &QuadratureConfig) -> Result<EssentialNormEstimate> {
    let cs = cluster_set(f, radii, angles, Transform::BoxAverage, cfg)?;
    let mut warnings = Vec::new();
    let growth = cs.contraction();
    if growth > UNBOUNDED_GROWTH {
        warnings.push(Warning::Precondition(format!("|f^| grows by {growth:.2} across the radii")));
    }
    Ok(EssentialNormEstimate {
        estimate: *cs.max_modulus.last().expect("radii checked"),
        radii: cs.radii,
        max_modulus: cs.max_modulus,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub which: Transform,
    pub radii: Vec<f64>,
    /// `-wind` on each circle.
    pub indices: Vec<i64>,
    pub min_modulus: Vec<f64>,
    pub samples: Vec<usize>,
    /// Index on the outermost circle, agreed by the last two circles.
    pub index: i64,
}

/// `-wind` of the boundary curve on a ladder of circles. The outer two circles
/// must agree; a curve that runs into 0, or whose minimum modulus collapses
/// toward the boundary, is not Fredholm.
pub fn fredholm_index(f: &Symbol, radii: &[f64], angles: usize, which: Transform, cfg: &QuadratureConfig) -> Result<IndexReport> {
    check_radii(radii)?;
    if radii.len() < 2 {
        return Err(Error::BadParameters("the index ladder needs two radii".into()));
    }
    let mut indices = Vec::new();
    let mut min_modulus = Vec::new();
    let mut samples = Vec::new();
    for &r in radii {
        let c = sample_curve(f, r, angles.max(4), which, cfg)?;
        min_modulus.push(c.min_modulus());
        let (w, c) = match winding_number(&c) {
            Ok(w) => (w, c),
            Err(Error::CurveThroughZero { min_modulus }) => {
                return Err(Error::NotFredholm(format!("curve at r = {r} reaches {min_modulus:e}")));
            }
            Err(Error::UnderResolved { .. }) => winding_on_circle(f, r, 2 * angles.max(4), which, cfg)?,
            Err(e) => return Err(e),
        };
        indices.push(-w);
        samples.push(c.values.len());
    }
    let outer = *min_modulus.last().expect("two radii");
    if outer < FREDHOLM_MARGIN || outer < DECAY_RATIO * min_modulus[0] {
        return Err(Error::NotFredholm(format!(
            "min |curve| falls from {:.3e} to {outer:.3e} toward the boundary",
            min_modulus[0]
        )));
    }
    let k = indices.len();
    if indices[k - 1] != indices[k - 2] {
        return Err(Error::Unstable(indices));
    }
    Ok(IndexReport {
        which,
        radii: radii.to_vec(),
        index: indices[k - 1],
        indices,
        min_modulus,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub fredholm: bool,
    /// `min |det f~|` over the two outermost circles.
    pub margin: f64,
    pub threshold: f64,
    pub radii: Vec<f64>,
    pub min_det: Vec<f64>,
    pub warnings: Vec<Warning>,
}

/// Determinant of a small complex matrix by LU with partial pivoting.
pub fn determinant(m: &ComplexMatrix) -> Complex64 {
    let n = m.dim();
    let mut a = m.as_slice().to_vec();
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i * n + k].norm().total_cmp(&a[j * n + k].norm())).unwrap_or(k);
        if a[p * n + k].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            det = -det;
        }
        let piv = a[k * n + k];
        det *= piv;
        for i in k + 1..n {
            let f = a[i * n + k] / piv;
            for j in k..n {
                let v = a[k * n + j];
                a[i * n + j] -= f * v;
            }
        }
    }
    det
}

/// `det` of the entrywise Berezin matrix on the sampled circles; Fredholm
/// when its minimum modulus over the two outermost circles exceeds
/// [`FREDHOLM_MARGIN`].
pub fn block_fredholm_check(f: &MatrixSymbol, radii: &[f64], angles: usize, cfg: &QuadratureConfig) -> Result<BlockReport> {
    check_radii(radii)?;
    if radii.len() < 2 {
        return Err(Error::BadParameters("the block check needs two radii".into()));
    }
    let n = f.dim();
    let warnings = block_preconditions(f, radii, cfg);
    let all_radial = (0..n).all(|i| (0..n).all(|j| f.entry(i, j).is_radial()));
    let per_circle = if all_radial { 1 } else { angles.max(1) };
    let mut min_det = Vec::new();
    for &r in radii {
        let dets = (0..per_circle)
            .into_par_iter()
            .map(|k| {
                let z = Point::polar(r, TAU * k as f64 / per_circle as f64);
                let mut vals = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        vals.push(berezin_symbol(f.entry(i, j), z, cfg)?);
                    }
                }
                Ok(determinant(&ComplexMatrix::from_vec(n, vals)?).norm())
            })
            .collect::<Result<Vec<f64>>>()?;
        min_det.push(dets.into_iter().fold(f64::INFINITY, f64::min));
    }
    let k = min_det.len();
    let margin = min_det[k - 1].min(min_det[k - 2]);
    Ok(BlockReport {
        fredholm: margin > FREDHOLM_MARGIN,
        margin,
        threshold: FREDHOLM_MARGIN,
        radii: radii.to_vec(),
        min_det,
        warnings,
    })
}

/// Entries should have vanishing weak oscillation and bounded `f^`; checked on
/// the first and last circle at one angle.
fn block_preconditions(f: &MatrixSymbol, radii: &[f64], cfg: &QuadratureConfig) -> Vec<Warning> {
    let (r0, r1) = (radii[0], radii[radii.len() - 1]);
    let mut out = Vec::new();
    for i in 0..f.dim() {
        for j in 0..f.dim() {
            let e = f.entry(i, j);
            let osc = |r: f64| bwmo_local(e, Point::polar(r, 0.0), (16, 16), cfg).map(|o| o.value);
            let avg = |r: f64| box_average(e, Point::polar(r, 0.0), cfg).map(|v| v.norm());
            match (osc(r0), osc(r1), avg(r0), avg(r1)) {
                (Ok(o0), Ok(o1), Ok(a0), Ok(a1)) => {
                    if o1 > o0.max(1e-12) {
                        out.push(Warning::Precondition(format!("entry ({i}, {j}): weak oscillation does not decrease")));
                    }
                    if a1 > UNBOUNDED_GROWTH * a0.max(1e-12) {
                        out.push(Warning::Precondition(format!("entry ({i}, {j}): averages grow toward the boundary")));
                    }
                }
                _ => out.push(Warning::Precondition(format!("entry ({i}, {j}): precondition check failed"))),
            }
        }
    }
    out
}

/// Eigenvalues of the `N`-section with the boundary cluster set and the
/// essential-norm estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub n: usize,
    pub eigenvalues: Vec<Complex64>,
    pub cluster: ClusterSet,
    pub essential_norm: f64,
}

impl SpectrumReport {
    pub fn build(section: &ComplexMatrix, f: &Symbol, radii: &[f64], angles: usize, cfg: &QuadratureConfig) -> Result<Self> {
        let eigenvalues = eigenvalues(section)?;
        let cluster = cluster_set(f, radii, angles, Transform::BoxAverage, cfg)?;
        let essential_norm = *cluster.max_modulus.last().expect("radii checked");
        Ok(Self {
            n: section.dim(),
            eigenvalues,
            cluster,
            essential_norm,
        })
    }
}
