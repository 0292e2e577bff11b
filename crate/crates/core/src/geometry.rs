//! Disc geometry: Möbius maps, the Bergman metric, hyperbolic discs, the
//! polar boxes `B(z)` / `B(z, zeta)` and the dyadic box decomposition.
//!
//! Boxes keep their angular interval *unreduced*: `phi_hi` may exceed `2 pi`
//! when a box straddles the positive real axis. Membership reduces a query
//! angle modulo `2 pi` into `[phi_lo, phi_hi]` at the last moment, so every
//! integral over a box is an integral over one ordinary rectangle in
//! `(rho, phi)`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used by membership tests against box edges.
const EDGE_EPS: f64 = 1e-12;

/// Point of the open unit disc in polar form, `theta` normalized to `[0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    r: f64,
    theta: f64,
}

impl Point {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&r) || !theta.is_finite() {
            return Err(Error::BadParameters(format!(
                "point needs 0 <= r < 1 and finite angle, got r = {r}, theta = {theta}"
            )));
        }
        let theta = if r == 0.0 { 0.0 } else { normalize_angle(theta) };
        Ok(Self { r, theta })
    }

    /// Polar point; panics outside the disc. Intended for literals in tests
    /// and fixed lattices.
    pub fn polar(r: f64, theta: f64) -> Self {
        Self::new(r, theta).expect("point outside the unit disc")
    }

    pub fn from_complex(w: Complex64) -> Result<Self> {
        Self::new(w.norm(), w.arg())
    }

    pub fn origin() -> Self {
        Self { r: 0.0, theta: 0.0 }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.r, self.theta)
    }
}

/// Reduce an angle into `[0, 2 pi)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Disc automorphism `phi_z(w) = (z - w) / (1 - w conj(z))`, an involution
/// interchanging `0` and `z`.
pub fn mobius_c(z: Complex64, w: Complex64) -> Complex64 {
    (z - w) / (1.0 - w * z.conj())
}

pub fn mobius(z: Point, w: Point) -> Complex64 {
    mobius_c(z.value(), w.value())
}

/// Bergman (hyperbolic) distance `atanh |phi_z(w)|`.
pub fn bergman_distance_c(z: Complex64, w: Complex64) -> f64 {
    // atanh of the pseudo-hyperbolic distance, written as 1/2 log((1+t)/(1-t))
    let t = mobius_c(z, w).norm().min(1.0);
    0.5 * ((1.0 + t) / (1.0 - t)).ln()
}

pub fn bergman_distance(z: Point, w: Point) -> f64 {
    bergman_distance_c(z.value(), w.value())
}

/// Polar rectangle `[rho_lo, rho_hi] x [phi_lo, phi_hi]`. The angular
/// interval is stored unreduced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarBox {
    pub rho_lo: f64,
    pub rho_hi: f64,
    pub phi_lo: f64,
    pub phi_hi: f64,
}

impl PolarBox {
    pub fn new(rho_lo: f64, rho_hi: f64, phi_lo: f64, phi_hi: f64) -> Result<Self> {
        if !(0.0 <= rho_lo && rho_lo <= rho_hi && rho_hi <= 1.0)
            || !(phi_lo <= phi_hi && phi_hi - phi_lo <= TAU + EDGE_EPS)
        {
            return Err(Error::BadParameters(format!(
                "invalid polar box [{rho_lo}, {rho_hi}] x [{phi_lo}, {phi_hi}]"
            )));
        }
        Ok(Self {
            rho_lo,
            rho_hi,
            phi_lo,
            phi_hi,
        })
    }

    /// The whole disc `[0, 1) x [0, 2 pi)`.
    pub fn full_disc() -> Self {
        Self {
            rho_lo: 0.0,
            rho_hi: 1.0,
            phi_lo: 0.0,
            phi_hi: TAU,
        }
    }

    pub fn width(&self) -> f64 {
        self.phi_hi - self.phi_lo
    }

    /// Normalized area `(1/pi) * int rho drho dphi`.
    pub fn area(&self) -> f64 {
        self.width() * (self.rho_hi * self.rho_hi - self.rho_lo * self.rho_lo) / TAU
    }

    pub fn is_degenerate(&self) -> bool {
        self.rho_hi <= self.rho_lo || self.phi_hi <= self.phi_lo
    }

    /// Angle of a point expressed in this box's unreduced coordinate, if the
    /// reduced angle falls inside the angular interval.
    pub fn unreduced_angle(&self, theta: f64) -> Option<f64> {
        let offset = (theta - self.phi_lo).rem_euclid(TAU);
        if offset <= self.width() + EDGE_EPS {
            Some(self.phi_lo + offset.min(self.width()))
        } else if TAU - offset <= EDGE_EPS {
            Some(self.phi_lo)
        } else {
            None
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        p.r() >= self.rho_lo - EDGE_EPS
            && p.r() <= self.rho_hi + EDGE_EPS
            && self.unreduced_angle(p.theta()).is_some()
    }

    /// Containment of another rectangle expressed in the same unreduced chart.
    pub fn contains_box(&self, other: &PolarBox) -> bool {
        other.rho_lo >= self.rho_lo - EDGE_EPS
            && other.rho_hi <= self.rho_hi + EDGE_EPS
            && other.phi_lo >= self.phi_lo - EDGE_EPS
            && other.phi_hi <= self.phi_hi + EDGE_EPS
    }

    /// Unreduced `(rho, phi)` coordinates of a member point.
    pub fn chart(&self, p: Point) -> Result<(f64, f64)> {
        if p.r() < self.rho_lo - EDGE_EPS || p.r() > self.rho_hi + EDGE_EPS {
            return Err(outside(p));
        }
        let phi = self.unreduced_angle(p.theta()).ok_or_else(|| outside(p))?;
        Ok((p.r().clamp(self.rho_lo, self.rho_hi), phi))
    }
}

fn outside(p: Point) -> Error {
    Error::PointOutsideBox {
        r: p.r(),
        theta: p.theta(),
    }
}

/// `B(z) = [r, 1 - (1-r)/2] x [theta, theta + pi (1-r)]`.
pub fn box_of(z: Point) -> PolarBox {
    let h = 1.0 - z.r();
    PolarBox {
        rho_lo: z.r(),
        rho_hi: 1.0 - 0.5 * h,
        phi_lo: z.theta(),
        phi_hi: z.theta() + PI * h,
    }
}

/// Closed form `|B(z)| = h^2/2 - 3h^3/8`, `h = 1 - r`, in the normalized measure.
pub fn box_area(z: Point) -> f64 {
    let h = 1.0 - z.r();
    h * h * (0.5 - 0.375 * h)
}

/// `B(z, zeta) = [r, r~] x [theta, theta~]` with `theta~` read in the
/// unreduced chart of `B(z)`.
pub fn sub_box(z: Point, zeta: Point) -> Result<PolarBox> {
    let b = box_of(z);
    let (rho, phi) = b.chart(zeta)?;
    Ok(PolarBox {
        rho_lo: b.rho_lo,
        rho_hi: rho,
        phi_lo: b.phi_lo,
        phi_hi: phi,
    })
}

/// Rectangle spanned by two ordered points of `B(z)` in its unreduced chart.
pub fn rectangle_between(z: Point, lower: Point, upper: Point) -> Result<PolarBox> {
    let b = box_of(z);
    let (r1, p1) = b.chart(lower)?;
    let (r2, p2) = b.chart(upper)?;
    if r1 > r2 || p1 > p2 {
        return Err(Error::OrderViolation(format!(
            "({r1}, {p1}) is not below ({r2}, {p2}) in B(z)"
        )));
    }
    Ok(PolarBox {
        rho_lo: r1,
        rho_hi: r2,
        phi_lo: p1,
        phi_hi: p2,
    })
}

/// Partial order on `B(z)`: coordinatewise in the unreduced chart.
pub fn precsim(zeta1: Point, zeta2: Point, z: Point) -> Result<bool> {
    let b = box_of(z);
    let (r1, p1) = b.chart(zeta1)?;
    let (r2, p2) = b.chart(zeta2)?;
    Ok(r1 <= r2 && p1 <= p2)
}

/// Hyperbolic disc `D(z, r_h)` in polar presentation.
///
/// The boundary radii `r1(phi) < r2(phi)` are found by bisection on
/// `rho -> beta(z, rho e^{i phi}) - r_h`. When the disc contains the origin
/// the angular range is the full circle and `r1 = 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscRegion {
    pub center: Point,
    pub radius: f64,
    /// Angular half-width around `center.theta()` (`pi` when the origin is inside).
    pub theta0: f64,
    pub contains_origin: bool,
    pub angles: Vec<f64>,
    pub r_inner: Vec<f64>,
    pub r_outer: Vec<f64>,
}

/// Default boundary sampling of [`hyperbolic_disc`].
pub const DISC_BOUNDARY_SAMPLES: usize = 128;

impl DiscRegion {
    fn distance_along(&self, phi: f64, rho: f64) -> f64 {
        bergman_distance_c(self.center.value(), Complex64::from_polar(rho, phi))
    }

    /// Minimizer of the distance to the center along the ray at angle `phi`.
    fn closest_on_ray(&self, phi: f64) -> (f64, f64) {
        // sublevel sets of beta(z, .) are convex, so the distance is unimodal on a ray
        let (mut a, mut b) = (0.0_f64, 1.0_f64);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (self.distance_along(phi, c), self.distance_along(phi, d));
        for _ in 0..90 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = self.distance_along(phi, c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = self.distance_along(phi, d);
            }
        }
        let rho = 0.5 * (a + b);
        (rho, self.distance_along(phi, rho))
    }

    fn bisect(&self, phi: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
        let g = |rho: f64| self.distance_along(phi, rho) - self.radius;
        let (glo, ghi) = (g(lo), g(hi));
        if glo.signum() == ghi.signum() {
            return Err(Error::RootFindFailure(format!(
                "no sign change on [{lo}, {hi}] at angle {phi}"
            )));
        }
        let rising = glo < 0.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if (g(mid) < 0.0) == rising {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-16 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Boundary radii `(r1, r2)` along the ray at angle `phi`, or `None` if
    /// the ray misses the disc.
    pub fn boundary_at(&self, phi: f64) -> Result<Option<(f64, f64)>> {
        let (rho_min, d_min) = self.closest_on_ray(phi);
        if d_min >= self.radius {
            return Ok(None);
        }
        let inner = if self.contains_origin {
            0.0
        } else {
            self.bisect(phi, 0.0, rho_min)?
        };
        let outer = self.bisect(phi, rho_min, 1.0 - f64::EPSILON)?;
        Ok(Some((inner, outer)))
    }

    /// Euclidean center of the (Euclidean) disc `D(z, r_h)`.
    pub fn euclidean_center(&self) -> Complex64 {
        let s = self.radius.tanh();
        let z = self.center.value();
        let zz = z.norm_sqr();
        z * ((1.0 - s * s) / (1.0 - s * s * zz))
    }

    /// Euclidean radius of `D(z, r_h)`.
    pub fn euclidean_radius(&self) -> f64 {
        let s = self.radius.tanh();
        let zz = self.center.value().norm_sqr();
        s * (1.0 - zz) / (1.0 - s * s * zz)
    }

    /// Radial extent `[rho_min, rho_max]` of the region.
    pub fn radial_extent(&self) -> (f64, f64) {
        let c = self.euclidean_center().norm();
        let rad = self.euclidean_radius();
        ((c - rad).max(0.0), (c + rad).min(1.0))
    }

    /// Angular measure of `{phi : rho e^{i phi} in D}` for a circle of radius `rho`.
    pub fn angular_measure(&self, rho: f64) -> f64 {
        let c = self.euclidean_center().norm();
        let rad = self.euclidean_radius();
        if rho <= 0.0 {
            return if c < rad { TAU } else { 0.0 };
        }
        if rho + c <= rad {
            return TAU;
        }
        if rho <= c - rad || rho >= c + rad {
            return 0.0;
        }
        let cosine = (rho * rho + c * c - rad * rad) / (2.0 * rho * c);
        2.0 * cosine.clamp(-1.0, 1.0).acos()
    }

    /// Normalized area, closed form `R^2`.
    pub fn area_closed_form(&self) -> f64 {
        self.euclidean_radius().powi(2)
    }

    pub fn contains(&self, w: Complex64) -> bool {
        w.norm() < 1.0 && bergman_distance_c(self.center.value(), w) < self.radius
    }
}

/// Hyperbolic disc `D(z, r_h)` with `n_angles` sampled boundary rays.
pub fn hyperbolic_disc(z: Point, r_h: f64, n_angles: usize) -> Result<DiscRegion> {
    if !(r_h > 0.0) || !r_h.is_finite() {
        return Err(Error::BadParameters(format!("hyperbolic radius {r_h}")));
    }
    if n_angles < 2 {
        return Err(Error::BadParameters("need at least two boundary samples".into()));
    }
    let contains_origin = bergman_distance_c(z.value(), Complex64::new(0.0, 0.0)) < r_h;
    let mut region = DiscRegion {
        center: z,
        radius: r_h,
        theta0: PI,
        contains_origin,
        angles: Vec::new(),
        r_inner: Vec::new(),
        r_outer: Vec::new(),
    };
    if !contains_origin {
        // the set of ray directions meeting a convex region is an interval
        let (mut lo, mut hi) = (0.0_f64, PI);
        for _ in 0..70 {
            let mid = 0.5 * (lo + hi);
            let (_, d) = region.closest_on_ray(z.theta() + mid);
            if d < r_h {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        region.theta0 = 0.5 * (lo + hi);
    }
    let (start, span) = if contains_origin {
        (0.0, TAU)
    } else {
        (z.theta() - region.theta0, 2.0 * region.theta0)
    };
    for k in 0..n_angles {
        // open interval: avoid the tangent rays where r1 = r2
        let phi = if contains_origin {
            start + span * k as f64 / n_angles as f64
        } else {
            start + span * (k as f64 + 0.5) / n_angles as f64
        };
        let (r1, r2) = region.boundary_at(phi)?.ok_or_else(|| {
            Error::RootFindFailure(format!("sample ray at angle {phi} misses the disc"))
        })?;
        region.angles.push(phi);
        region.r_inner.push(r1);
        region.r_outer.push(r2);
    }
    Ok(region)
}

/// Dyadic decomposition: level `k` has centers `r_k = 1 - 2^-k` at angles
/// `j pi 2^-k`, `j < 2^(k+1)`; each `B(z_{k,j})` spans `[r_k, r_{k+1}]`
/// radially, so the boxes of levels `0..=max_level` tile
/// `|z| <= 1 - 2^-(max_level+1)` with disjoint interiors.
pub fn disc_decomposition(max_level: usize) -> Vec<(Point, PolarBox)> {
    let mut out = Vec::new();
    for k in 0..=max_level {
        let r = 1.0 - 0.5f64.powi(k as i32);
        let count = 1usize << (k + 1);
        for j in 0..count {
            let z = Point::polar(r, j as f64 * PI / (1u64 << k) as f64);
            out.push((z, box_of(z)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn mobius_examples() {
        let z = Point::polar(0.6, 1.1);
        assert!((mobius(z, Point::origin()) - z.value()).norm() < 1e-15);
        assert!(mobius(z, z).norm() < 1e-15);
        let w = Point::polar(0.3, 2.0);
        assert!((mobius(Point::origin(), w) + w.value()).norm() < 1e-15);
    }

    #[test]
    fn bergman_distance_on_the_radius() {
        let d = bergman_distance(Point::origin(), Point::polar(0.5, 0.0));
        assert!((d - 0.5 * 3f64.ln()).abs() < 1e-15);
        // hyperbolic length element |dw| / (1 - |w|^2) integrated along [0, 1/2]
        let gl = gauss_quad::GaussLegendre::new(20.try_into().unwrap());
        let len = gl.integrate(0.0, 0.5, |t| 1.0 / (1.0 - t * t));
        assert!((d - len).abs() < 1e-13);
        assert_eq!(bergman_distance(Point::polar(0.4, 1.0), Point::polar(0.4, 1.0)), 0.0);
    }

    #[test]
    fn box_examples() {
        let b = box_of(Point::origin());
        assert_eq!((b.rho_lo, b.rho_hi, b.phi_lo, b.phi_hi), (0.0, 0.5, 0.0, PI));
        let b = box_of(Point::polar(0.5, 0.0));
        assert_eq!((b.rho_lo, b.rho_hi), (0.5, 0.75));
        assert!((b.phi_hi - PI / 2.0).abs() < 1e-15);
        let b = box_of(Point::polar(0.9, 6.0));
        assert_eq!(b.phi_lo, 6.0);
        assert!((b.phi_hi - (6.0 + 0.1 * PI)).abs() < 1e-12);
        assert!(b.phi_hi > TAU);
    }

    #[test]
    fn box_area_closed_form() {
        assert!((box_area(Point::origin()) - 0.125).abs() < 1e-16);
        assert!((box_area(Point::polar(0.5, 0.3)) - 5.0 / 64.0).abs() < 1e-16);
        for r in [0.0, 0.3, 0.5, 0.9, 0.99] {
            let z = Point::polar(r, 1.0);
            assert!((box_area(z) - box_of(z).area()).abs() < 1e-15);
        }
        let h = 1e-4;
        let ratio = box_area(Point::polar(1.0 - h, 0.0)) / (0.5 * h * h);
        assert!((ratio - 1.0).abs() < 1e-3);
    }

    #[test]
    fn sub_box_cases() {
        let z = Point::polar(0.4, 2.0);
        let b = box_of(z);
        let corner = Point::polar(b.rho_hi, b.phi_hi);
        let full = sub_box(z, corner).unwrap();
        assert!((full.rho_hi - b.rho_hi).abs() < 1e-15 && (full.phi_hi - b.phi_hi).abs() < 1e-12);
        let degenerate = sub_box(z, z).unwrap();
        assert_eq!(degenerate.area(), 0.0);
        assert!(degenerate.is_degenerate());

        let z = Point::polar(0.9, 6.2);
        let zeta = Point::polar(0.92, 0.05);
        let sb = sub_box(z, zeta).unwrap();
        assert!((sb.phi_lo - 6.2).abs() < 1e-15);
        assert!((sb.phi_hi - (TAU + 0.05)).abs() < 1e-12);
        assert!(box_of(z).contains(zeta));

        let outside = Point::polar(0.92, 1.0);
        assert!(matches!(sub_box(z, outside), Err(Error::PointOutsideBox { .. })));
        assert!(sub_box(z, Point::polar(0.5, 6.25)).is_err());
    }

    #[test]
    fn precsim_cases() {
        let z = Point::polar(0.5, 0.0);
        let zeta = Point::polar(0.6, 0.5);
        assert!(precsim(z, zeta, z).unwrap());
        assert!(precsim(zeta, zeta, z).unwrap());
        assert!(!precsim(Point::polar(0.6, 0.3), Point::polar(0.55, 0.4), z).unwrap());
        assert!(precsim(Point::polar(0.3, 0.1), zeta, z).is_err());
    }

    #[test]
    fn hyperbolic_disc_at_origin_is_euclidean() {
        for r_h in [0.3, 1.0, 2.0] {
            let d = hyperbolic_disc(Point::origin(), r_h, 16).unwrap();
            assert!(d.contains_origin);
            for (&r1, &r2) in d.r_inner.iter().zip(&d.r_outer) {
                assert_eq!(r1, 0.0);
                assert!((r2 - f64::tanh(r_h)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hyperbolic_disc_boundary_matches_closed_form() {
        let z = Point::polar(0.9, 0.7);
        let d = hyperbolic_disc(z, 1.0, DISC_BOUNDARY_SAMPLES).unwrap();
        assert!(!d.contains_origin);
        let cc = d.euclidean_center();
        let rad = d.euclidean_radius();
        for k in 0..d.angles.len() {
            let phi = d.angles[k];
            for rho in [d.r_inner[k], d.r_outer[k]] {
                let w = Complex64::from_polar(rho, phi);
                assert!((bergman_distance_c(z.value(), w) - 1.0).abs() < 1e-10);
                assert!(((w - cc).norm() - rad).abs() < 1e-10);
            }
        }
        // tangent direction from the closed form
        let theta0 = (rad / cc.norm()).asin();
        assert!((d.theta0 - theta0).abs() < 1e-9);
        let _ = c(0.0, 0.0);
    }

    #[test]
    fn decomposition_counts_and_area() {
        let boxes = disc_decomposition(0);
        assert_eq!(boxes.len(), 2);
        assert!(boxes.iter().all(|(_, b)| b.rho_lo == 0.0 && b.rho_hi == 0.5));
        for level in 1..=8 {
            let boxes = disc_decomposition(level);
            assert_eq!(boxes.len(), (1 << (level + 2)) - 2);
            let total: f64 = boxes.iter().map(|(z, _)| box_area(*z)).sum();
            let expected = (1.0 - 0.5f64.powi(level as i32 + 1)).powi(2);
            assert!((total - expected).abs() / expected < 1e-10);
        }
    }
}
