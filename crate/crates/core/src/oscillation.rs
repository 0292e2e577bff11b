//! Mean-oscillation functionals: box, sub-box and disc averages, local BMO^p
//! quantities, the pointwise oscillation `omega`, and the weak (sub-box)
//! oscillation functionals built on prefix tables.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{box_area, box_of, hyperbolic_disc, precsim, rectangle_between, sub_box, Point, PolarBox};
use crate::profile::RadialProfile;
use crate::quadrature::{self, integrate_box, PrefixTable, QuadratureConfig};
use crate::symbols::{constant, Symbol, SymbolFlags};
use crate::thresholds::{RATIO_FLOOR, SUP_REFINEMENT_LIMIT};

/// Boundary rays sampled when a hyperbolic disc is built for averaging.
const DISC_RAYS: usize = 16;

/// Smallest prefix grid accepted by the sup-type functionals.
pub const MIN_GRID: usize = 16;

/// Sample grid of `D(z, 1)` used by `omega` before refinement.
pub const OMEGA_SAMPLES: (usize, usize) = (8, 8);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub z: Point,
    pub functional: String,
    pub value: f64,
    /// Prefix or sample grid used for the reported value.
    pub grid: Option<(usize, usize)>,
    /// Relative change of the sup between the coarse and the doubled grid.
    pub refinement_delta: Option<f64>,
    pub quad_error: f64,
    pub converged: bool,
}

/// `f^(z)`: average over `B(z)`.
pub fn box_average(f: &Symbol, z: Point, cfg: &QuadratureConfig) -> Result<Complex64> {
    quadrature::box_average(f, z, cfg)?.require(cfg.tolerance.max(1e-7))
}

/// `f^(z, zeta) = |B(z)|^-1 int_{B(z, zeta)} f dA`.
pub fn partial_average(f: &Symbol, z: Point, zeta: Point, cfg: &QuadratureConfig) -> Result<Complex64> {
    let b = sub_box(z, zeta)?;
    let area = box_area(z);
    if b.is_degenerate() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let q = integrate_box(f, &b, &cfg.with_tolerance(cfg.tolerance * area))?;
    Ok(q.value / area)
}

/// Average over the hyperbolic disc `D(z, r_h)`.
pub fn disc_average(f: &Symbol, z: Point, r_h: f64, cfg: &QuadratureConfig) -> Result<Complex64> {
    let d = hyperbolic_disc(z, r_h, DISC_RAYS)?;
    quadrature::disc_average(f, &d, cfg)?.require(cfg.tolerance.max(1e-7))
}

/// `|D|^-1 int_D |f - f_D|^p dA` over `D = D(z, r_h)`.
pub fn bmo_local(f: &Symbol, z: Point, p: f64, r_h: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::BadParameters(format!("BMO exponent {p} < 1")));
    }
    let d = hyperbolic_disc(z, r_h, DISC_RAYS)?;
    let mean = quadrature::disc_average(f, &d, cfg)?.require(cfg.tolerance.max(1e-7))?;
    let dev = f.sub(&constant(mean)).abs_pow(p);
    let q = quadrature::disc_average(&dev, &d, cfg)?;
    Ok(q.require(cfg.tolerance.max(1e-7))?.re.max(0.0))
}

/// `f^` as a symbol: every evaluation integrates `f` over `B(w)`.
pub fn average_symbol(f: &Symbol, cfg: &QuadratureConfig) -> Symbol {
    let inner = f.clone();
    let cfg = *cfg;
    let flags = SymbolFlags {
        radial: f.is_radial(),
        bound: f.flags().bound,
        oscillation: None,
        integrability: crate::symbols::Integrability::L1,
        fourier_width: if f.is_radial() { Some(0) } else { None },
        continuous: true,
        real_valued: f.flags().real_valued,
        nonnegative: f.flags().nonnegative,
        radial_breaks: Vec::new(),
    };
    Symbol::new(format!("avg[{}]", f.name()), flags, move |r, phi| {
        quadrature::box_average(&inner, Point::polar(r.min(1.0 - 1e-15), phi), &cfg)
            .map(|q| q.value)
            .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    })
}

/// Points of a `(rays, steps)` sample grid of the closed disc `D(z, 1)`.
fn omega_samples(f: &Symbol, z: Point, samples: (usize, usize)) -> Result<Vec<Complex64>> {
    let (rays, steps) = samples;
    let d = hyperbolic_disc(z, 1.0, rays.max(2))?;
    if f.is_radial() {
        // only |w| matters
        let (lo, hi) = d.radial_extent();
        let n = rays * steps;
        return Ok((0..n)
            .map(|k| Complex64::from_polar(lo + (hi - lo) * k as f64 / (n - 1) as f64, z.theta()))
            .collect());
    }
    let mut pts = Vec::with_capacity(rays * steps);
    for ((&phi, &r1), &r2) in d.angles.iter().zip(&d.r_inner).zip(&d.r_outer) {
        for k in 0..steps {
            let rho = r1 + (r2 - r1) * k as f64 / (steps - 1) as f64;
            pts.push(Complex64::from_polar(rho, phi));
        }
    }
    Ok(pts)
}

/// `omega(f)(z) = sup_{w in D(z,1)} |f(z) - f(w)|` on a sample grid, refined once.
pub fn oscillation_omega(f: &Symbol, z: Point, cfg: &QuadratureConfig) -> Result<OscillationReport> {
    let _ = cfg;
    if !f.flags().continuous {
        return Err(Error::BadParameters(format!("{} is not flagged continuous", f.name())));
    }
    let center = f.eval(z.r(), z.theta());
    let sup_on = |samples: (usize, usize)| -> Result<f64> {
        let pts = omega_samples(f, z, samples)?;
        let vals: Vec<f64> = pts.par_iter().map(|w| (f.at(*w) - center).norm()).collect();
        Ok(vals.into_iter().fold(0.0, f64::max))
    };
    let coarse = sup_on(OMEGA_SAMPLES)?;
    let fine_grid = (OMEGA_SAMPLES.0 * 2, OMEGA_SAMPLES.1 * 2);
    let fine = sup_on(fine_grid)?.max(coarse);
    Ok(OscillationReport {
        z,
        functional: format!("omega[{}]", f.name()),
        value: fine,
        grid: Some(fine_grid),
        refinement_delta: Some((fine - coarse) / fine.max(RATIO_FLOOR)),
        quad_error: 0.0,
        converged: fine.is_finite(),
    })
}

fn check_grid(grid: (usize, usize)) -> Result<()> {
    if grid.0 < MIN_GRID || grid.1 < MIN_GRID {
        return Err(Error::BadParameters(format!(
            "prefix grid {grid:?} is below {MIN_GRID}x{MIN_GRID}"
        )));
    }
    Ok(())
}

/// Largest `|S[i][j] - c * area(i, j)| / |B(z)|` over all grid corners.
fn corner_sup(t: &PrefixTable, c: Option<Complex64>) -> f64 {
    let denom = box_area(t.z);
    let (rows, cols) = (t.rows(), t.cols());
    (0..rows)
        .into_par_iter()
        .map(|i| {
            let mut m = 0.0f64;
            for j in 0..cols {
                let mut v = t.value(i, j);
                if let Some(c) = c {
                    v -= c * t.area(i, j);
                }
                m = m.max(v.norm());
            }
            m
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max)
        / denom
}

fn sup_with_refinement<F>(f: &Symbol, z: Point, grid: (usize, usize), cfg: &QuadratureConfig, name: &str, sup: F) -> Result<OscillationReport>
where
    F: Fn(&PrefixTable) -> f64,
{
    check_grid(grid)?;
    let coarse_t = PrefixTable::build(f, z, grid, cfg)?;
    let fine_grid = (grid.0 * 2, grid.1 * 2);
    let fine_t = PrefixTable::build(f, z, fine_grid, cfg)?;
    let (coarse, fine) = (sup(&coarse_t), sup(&fine_t));
    let delta = (fine - coarse).abs() / fine.max(RATIO_FLOOR);
    // sups that sit at the level of the quadrature error carry no signal
    let noise = 10.0 * (fine_t.error + coarse_t.error) / box_area(z) + 1e-12;
    if delta > SUP_REFINEMENT_LIMIT && (fine - coarse).abs() > noise {
        return Err(Error::RefinementUnstable {
            delta,
            limit: SUP_REFINEMENT_LIMIT,
        });
    }
    Ok(OscillationReport {
        z,
        functional: format!("{name}[{}]", f.name()),
        value: fine,
        grid: Some(fine_grid),
        refinement_delta: Some(delta),
        quad_error: fine_t.error / box_area(z),
        converged: fine_t.converged && coarse_t.converged,
    })
}

/// `sup_zeta |f^(z, zeta)|` over prefix-table corners.
pub fn averaging_local(f: &Symbol, z: Point, grid: (usize, usize), cfg: &QuadratureConfig) -> Result<OscillationReport> {
    sup_with_refinement(f, z, grid, cfg, "averaging", |t| corner_sup(t, None))
}

/// `sup_zeta |int_{B(z,zeta)} (f - f^(z)) dA| / |B(z)|` over prefix-table corners.
pub fn bwmo_local(f: &Symbol, z: Point, grid: (usize, usize), cfg: &QuadratureConfig) -> Result<OscillationReport> {
    sup_with_refinement(f, z, grid, cfg, "bwmo", |t| {
        let mean = t.total() / box_area(t.z);
        corner_sup(t, Some(mean))
    })
}

/// Lattice of evaluation points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
}

impl Lattice {
    pub fn new(radii: Vec<f64>, n_angles: usize) -> Result<Self> {
        if radii.is_empty() || n_angles == 0 {
            return Err(Error::BadParameters("empty lattice".into()));
        }
        let angles = (0..n_angles).map(|k| TAU * k as f64 / n_angles as f64).collect();
        Ok(Self { radii, angles })
    }

    /// One angle for radial symbols, `n_angles` otherwise.
    pub fn for_symbol(f: &Symbol, radii: Vec<f64>, n_angles: usize) -> Result<Self> {
        Self::new(radii, if f.is_radial() { 1 } else { n_angles })
    }

    pub fn points(&self) -> Vec<Point> {
        self.radii
            .iter()
            .flat_map(|&r| self.angles.iter().map(move |&t| Point::polar(r, t)))
            .collect()
    }
}

/// Per-radius sup over lattice angles of a pointwise functional.
pub fn lattice_profile<F>(label: &str, lattice: &Lattice, eval: F) -> Result<RadialProfile>
where
    F: Fn(Point) -> Result<f64> + Sync,
{
    let pts = lattice.points();
    let vals: Vec<Result<f64>> = pts.par_iter().map(|&z| eval(z)).collect();
    let na = lattice.angles.len();
    let mut values = Vec::with_capacity(lattice.radii.len());
    for chunk in vals.chunks(na) {
        let mut m = 0.0f64;
        for v in chunk {
            m = m.max(v.clone()?);
        }
        values.push(m);
    }
    RadialProfile::new(label, lattice.radii.clone(), values)
}

/// Radii `1 - (1 - r_k) q^(j / sub)`, `j < sub`, filling the cell from
/// `radii[k]` toward `radii[k + 1]` (`q` is the cell's ratio of boundary
/// distances; the last cell repeats the previous ratio).
pub fn cell_radii(radii: &[f64], k: usize, sub: usize) -> Vec<f64> {
    let h = 1.0 - radii[k];
    let q = if k + 1 < radii.len() {
        (1.0 - radii[k + 1]) / h
    } else if k > 0 {
        h / (1.0 - radii[k - 1])
    } else {
        1.0
    };
    let sub = sub.max(1);
    (0..sub).map(|j| 1.0 - h * q.powf(j as f64 / sub as f64)).collect()
}

/// Like [`lattice_profile`], with each radius standing for its whole cell:
/// the value at `radii[k]` is the sup over `sub` radii of the cell and all
/// lattice angles. Functionals whose size oscillates with the phase of the
/// symbol at the box (such as `|f^|`) are bounded by power laws only in this
/// envelope sense.
pub fn envelope_profile<F>(label: &str, lattice: &Lattice, sub: usize, eval: F) -> Result<RadialProfile>
where
    F: Fn(Point) -> Result<f64> + Sync,
{
    let radii = &lattice.radii;
    let pts: Vec<(usize, Point)> = (0..radii.len())
        .flat_map(|k| {
            cell_radii(radii, k, sub)
                .into_iter()
                .flat_map(move |r| lattice.angles.iter().map(move |&t| (k, Point::polar(r, t))))
        })
        .collect();
    let vals: Vec<Result<f64>> = pts.par_iter().map(|&(_, z)| eval(z)).collect();
    let mut values = vec![0.0f64; radii.len()];
    for ((k, _), v) in pts.iter().zip(vals) {
        values[*k] = values[*k].max(v?);
    }
    RadialProfile::new(label, radii.clone(), values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormReport {
    pub value: f64,
    pub argmax: Point,
    pub lattice: Lattice,
    pub grid: (usize, usize),
    pub max_refinement_delta: f64,
}

/// Max of `bwmo_local` over the lattice (an under-approximation of the sup over the disc).
pub fn bwmo_seminorm(f: &Symbol, lattice: &Lattice, grid: (usize, usize), cfg: &QuadratureConfig) -> Result<SeminormReport> {
    let pts = lattice.points();
    if pts.is_empty() {
        return Err(Error::BadParameters("empty lattice".into()));
    }
    let reports: Vec<Result<OscillationReport>> = pts.par_iter().map(|&z| bwmo_local(f, z, grid, cfg)).collect();
    let mut best = (0.0f64, pts[0]);
    let mut delta = 0.0f64;
    for (rep, &z) in reports.into_iter().zip(&pts) {
        let rep = rep?;
        if rep.value > best.0 {
            best = (rep.value, z);
        }
        delta = delta.max(rep.refinement_delta.unwrap_or(0.0));
    }
    Ok(SeminormReport {
        value: best.0,
        argmax: best.1,
        lattice: lattice.clone(),
        grid,
        max_refinement_delta: delta,
    })
}

/// Per-radius sup over angles of `bwmo_local`.
pub fn vwmo_profile(f: &Symbol, lattice: &Lattice, grid: (usize, usize), cfg: &QuadratureConfig) -> Result<RadialProfile> {
    lattice_profile(&format!("bwmo[{}]", f.name()), lattice, |z| Ok(bwmo_local(f, z, grid, cfg)?.value))
}

/// Corners `w_j` with signs such that `sum_j s_j int_{B(z, w_j)} g = int_{B(zeta1, zeta2)} g`.
pub fn inclusion_exclusion_corners(z: Point, zeta1: Point, zeta2: Point) -> Result<[(Point, i8); 4]> {
    if !precsim(z, zeta1, z)? || !precsim(zeta1, zeta2, z)? {
        return Err(Error::OrderViolation("need z <= zeta1 <= zeta2 in B(z)".into()));
    }
    let b = box_of(z);
    let (rho1, phi1) = b.chart(zeta1)?;
    let (rho2, phi2) = b.chart(zeta2)?;
    Ok([
        (zeta2, 1),
        (Point::polar(rho1, phi2), -1),
        (Point::polar(rho2, phi1), -1),
        (zeta1, 1),
    ])
}

/// `|f^(z) - f^_K|` with `K = B(z~, zeta)` averaged over its own area.
pub fn subbox_average_gap(f: &Symbol, z: Point, z_tilde: Point, zeta: Point, cfg: &QuadratureConfig) -> Result<f64> {
    let k: PolarBox = rectangle_between(z, z_tilde, zeta)?;
    let ratio = box_area(z) / k.area();
    if !(ratio <= 2.0) {
        return Err(Error::AreaRatioViolation { ratio });
    }
    let fz = box_average(f, z, cfg)?;
    let fk = integrate_box(f, &k, &cfg.with_tolerance(cfg.tolerance * k.area()))?.value / k.area();
    Ok((fz - fk).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{constant_real, example45, rand_smooth, re_w, zk};

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn constants() {
        let c = constant_real(2.5);
        let z = Point::polar(0.93, 1.1);
        assert!((box_average(&c, z, &cfg()).unwrap().re - 2.5).abs() < 1e-10);
        assert!((disc_average(&c, z, 1.0, &cfg()).unwrap().re - 2.5).abs() < 1e-10);
        assert!(bmo_local(&c, z, 1.0, 1.0, &cfg()).unwrap() < 1e-10);
        assert_eq!(oscillation_omega(&c, z, &cfg()).unwrap().value, 0.0);
        assert!(bwmo_local(&c, z, (16, 16), &cfg()).unwrap().value < 1e-10);
        let avg = averaging_local(&constant_real(1.0), z, (16, 16), &cfg()).unwrap();
        assert!((avg.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn harmonic_mean_value_at_origin() {
        let v = disc_average(&re_w(), Point::origin(), 1.0, &cfg()).unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn partial_average_edges() {
        let f = rand_smooth(1);
        let z = Point::polar(0.9, 0.5);
        assert_eq!(partial_average(&f, z, z, &cfg()).unwrap(), Complex64::new(0.0, 0.0));
        let b = box_of(z);
        let corner = Point::polar(b.rho_hi, b.phi_hi);
        let full = partial_average(&f, z, corner, &cfg()).unwrap();
        assert!((full - box_average(&f, z, &cfg()).unwrap()).norm() < 1e-10);
        assert!(partial_average(&f, z, Point::polar(0.5, 0.5), &cfg()).is_err());
    }

    #[test]
    fn origin_box_average_of_w() {
        // B(0) is the upper half disc of radius 1/2: int w dA = 2 (1/2)^3 / 3 * 2i / pi... / area 1/8
        let v = box_average(&zk(1), Point::origin(), &cfg()).unwrap();
        let exact = Complex64::new(0.0, 2.0 / (3.0 * std::f64::consts::PI));
        assert!((v - exact).norm() < 1e-12, "{v}");
    }

    #[test]
    fn corners_reproduce_rectangle() {
        let z = Point::polar(0.9, 6.0);
        let b = box_of(z);
        let z1 = Point::polar(0.91, b.phi_lo + 0.05);
        let z2 = Point::polar(0.93, b.phi_lo + 0.2);
        let corners = inclusion_exclusion_corners(z, z1, z2).unwrap();
        let g = rand_smooth(4);
        let mut lhs = Complex64::new(0.0, 0.0);
        for (w, s) in corners {
            let sb = sub_box(z, w).unwrap();
            lhs += integrate_box(&g, &sb, &cfg()).unwrap().value * s as f64;
        }
        let rect = rectangle_between(z, z1, z2).unwrap();
        let rhs = integrate_box(&g, &rect, &cfg()).unwrap().value;
        assert!((lhs - rhs).norm() < 1e-8 * box_area(z));
        assert!(inclusion_exclusion_corners(z, z2, z1).is_err());
    }

    #[test]
    fn bwmo_matches_averaging_of_shifted_symbol() {
        let f = rand_smooth(11);
        let z = Point::polar(0.95, 2.0);
        let a = bwmo_local(&f, z, (16, 16), &cfg()).unwrap().value;
        let mean = box_average(&f, z, &cfg()).unwrap();
        let g = f.sub(&constant(mean));
        let b = averaging_local(&g, z, (16, 16), &cfg()).unwrap().value;
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn omega_of_identity_is_order_one_minus_r() {
        let mut ratios = Vec::new();
        for r in [0.99, 0.995, 0.999] {
            let w = oscillation_omega(&zk(1), Point::polar(r, 0.3), &cfg()).unwrap().value;
            ratios.push(w / (1.0 - r));
        }
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |a, &x| (a.0.min(x), a.1.max(x)));
        assert!(hi / lo < 1.1 && hi < 10.0, "{ratios:?}");
    }

    #[test]
    fn gap_requires_area_ratio() {
        let f = example45(1.0, 1.0).unwrap();
        let z = Point::polar(0.9, 0.0);
        let b = box_of(z);
        let small = Point::polar(0.91, b.phi_lo + 0.01);
        assert!(matches!(
            subbox_average_gap(&f, z, z, small, &cfg()),
            Err(Error::AreaRatioViolation { .. })
        ));
        let corner = Point::polar(b.rho_hi, b.phi_hi);
        assert!(subbox_average_gap(&constant_real(3.0), z, z, corner, &cfg()).unwrap() < 1e-10);
    }
}
