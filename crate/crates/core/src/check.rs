//! Named invariant suite run by `bergman-osc check` and required green before
//! anchors are regenerated.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eigen::eigenvalues;
use crate::geometry::{box_area, box_of, disc_decomposition, sub_box, Point};
use crate::matrix::ComplexMatrix;
use crate::operator::{berezin_symbol, semi_commutator, toeplitz_matrix, truncation_convergence, CoefficientVector};
use crate::oscillation::{bwmo_local, inclusion_exclusion_corners};
use crate::quadrature::{integrate_box, QuadratureConfig};
use crate::spectra::{block_fredholm_check, fredholm_index, Transform};
use crate::study::{example45_row, ProfileSettings};
use crate::symbols::{abs2, constant, constant_real, conj_zk, example45, rand_smooth, zk, MatrixSymbol};
use crate::thresholds::{default_radii, BOUNDARY_LADDER};

/// Deliberate defects for testing the harness itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// `h^2/2 - 3h^3/4` in place of the box area.
    AreaFormula,
}

impl std::str::FromStr for Fault {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "area-formula" => Ok(Fault::AreaFormula),
            _ => Err(crate::Error::Parse(format!("unknown fault {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOptions {
    /// Only the checks that finish in a few seconds.
    pub fast: bool,
    pub fault: Option<Fault>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Wall time; left out of serialized reports so they stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub options: CheckOptions,
    pub outcomes: Vec<CheckOutcome>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.outcomes.iter().filter(|o| !o.passed).map(|o| o.name.as_str()).collect()
    }
}

type CheckFn = fn(&Ctx) -> std::result::Result<String, String>;

struct Ctx {
    cfg: QuadratureConfig,
    fault: Option<Fault>,
}

impl Ctx {
    fn area(&self, z: Point) -> f64 {
        match self.fault {
            Some(Fault::AreaFormula) => {
                let h = 1.0 - z.r();
                h * h * (0.5 - 0.75 * h)
            }
            None => box_area(z),
        }
    }
}

fn ensure(ok: bool, detail: String) -> std::result::Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn box_area_formula(c: &Ctx) -> std::result::Result<String, String> {
    let mut worst = 0.0f64;
    for r in [0.0, 0.5, 0.9, 0.99] {
        let z = Point::polar(r, 1.0);
        let quad = integrate_box(&constant_real(1.0), &box_of(z), &c.cfg).map_err(err)?.value.re;
        worst = worst.max((c.area(z) - quad).abs() / quad);
    }
    ensure(worst < 1e-10, format!("max relative deviation {worst:.2e}"))
}

fn decomposition_telescopes(c: &Ctx) -> std::result::Result<String, String> {
    let mut worst = 0.0f64;
    for level in 1..=8 {
        let total: f64 = disc_decomposition(level).iter().map(|(z, _)| c.area(*z)).sum();
        let expected = (1.0 - 0.5f64.powi(level as i32 + 1)).powi(2);
        worst = worst.max((total - expected).abs() / expected);
    }
    ensure(worst < 1e-10, format!("max relative deviation {worst:.2e}"))
}

fn inclusion_exclusion(c: &Ctx) -> std::result::Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let mut worst = 0.0f64;
    for k in 0..20 {
        let g = rand_smooth(k);
        let z = Point::polar(rng.gen_range(0.0..0.95), rng.gen_range(0.0..6.28));
        let b = box_of(z);
        let (r1, r2) = {
            let (a, d) = (rng.gen_range(b.rho_lo..b.rho_hi), rng.gen_range(b.rho_lo..b.rho_hi));
            (a.min(d), a.max(d))
        };
        let (p1, p2) = {
            let (a, d) = (rng.gen_range(b.phi_lo..b.phi_hi), rng.gen_range(b.phi_lo..b.phi_hi));
            (a.min(d), a.max(d))
        };
        let (zeta1, zeta2) = (Point::polar(r1, p1), Point::polar(r2, p2));
        let corners = inclusion_exclusion_corners(z, zeta1, zeta2).map_err(err)?;
        let mut lhs = Complex64::new(0.0, 0.0);
        for (w, s) in corners {
            lhs += s as f64 * integrate_box(&g, &sub_box(z, w).map_err(err)?, &c.cfg).map_err(err)?.value;
        }
        let direct = crate::geometry::PolarBox::new(r1, r2, p1, p2).map_err(err)?;
        let rhs = integrate_box(&g, &direct, &c.cfg).map_err(err)?.value;
        worst = worst.max((lhs - rhs).norm() / c.area(z));
    }
    ensure(worst < 1e-8, format!("max defect / |B(z)| = {worst:.2e}"))
}

fn toeplitz_closed_forms(c: &Ctx) -> std::result::Result<String, String> {
    let id = toeplitz_matrix(&constant_real(1.0), 64, &c.cfg).map_err(err)?;
    let e1 = id.sub(&ComplexMatrix::identity(64)).map_err(err)?.max_abs();
    let t = toeplitz_matrix(&abs2(), 64, &c.cfg).map_err(err)?;
    let mut e2 = 0.0f64;
    for i in 0..64 {
        for j in 0..64 {
            let want = if i == j { (i + 1) as f64 / (i + 2) as f64 } else { 0.0 };
            e2 = e2.max((t[(i, j)] - want).norm() / want.max(1.0));
        }
    }
    ensure(e1 < 1e-12 && e2 < 1e-10, format!("identity {e1:.2e}, |w|^2 diagonal {e2:.2e}"))
}

fn berezin_fixed_points(c: &Ctx) -> std::result::Result<String, String> {
    let mut worst = 0.0f64;
    for (r, t) in [(0.2, 0.3), (0.6, 2.0), (0.85, 4.0)] {
        let z = Point::polar(r, t);
        let cst = Complex64::new(1.5, -0.5);
        worst = worst.max((berezin_symbol(&constant(cst), z, &c.cfg).map_err(err)? - cst).norm());
        for k in 1..=2 {
            worst = worst.max((berezin_symbol(&zk(k), z, &c.cfg).map_err(err)? - z.value().powu(k)).norm());
        }
    }
    ensure(worst < 1e-8, format!("max deviation {worst:.2e}"))
}

fn eigen_oracles(_: &Ctx) -> std::result::Result<String, String> {
    let mut m = ComplexMatrix::zeros(3);
    m[(0, 2)] = Complex64::new(1.0, 0.0);
    m[(1, 0)] = Complex64::new(1.0, 0.0);
    m[(2, 1)] = Complex64::new(1.0, 0.0);
    let e = eigenvalues(&m).map_err(err)?;
    let worst = e.iter().map(|v| (v.powu(3) - 1.0).norm()).fold(0.0, f64::max);
    ensure(worst < 1e-8, format!("max |lambda^3 - 1| = {worst:.2e}"))
}

fn shift_index(c: &Ctx) -> std::result::Result<String, String> {
    let rep = fredholm_index(&zk(1), &BOUNDARY_LADDER, 32, Transform::BoxAverage, &c.cfg).map_err(err)?;
    ensure(rep.index == -1, format!("index {}", rep.index))
}

fn bwmo_of_constants(c: &Ctx) -> std::result::Result<String, String> {
    let v = bwmo_local(&constant_real(2.0), Point::polar(0.95, 1.0), (16, 16), &c.cfg).map_err(err)?.value;
    ensure(v < 1e-12, format!("value {v:.2e}"))
}

fn example45_types(c: &Ctx) -> std::result::Result<String, String> {
    let settings = ProfileSettings {
        radii: default_radii(12),
        angles: 1,
        grid: (16, 16),
    };
    let one = example45_row(1.0, 1.0, &settings, &c.cfg).map_err(err)?;
    let three_halves = example45_row(1.5, 1.0, &settings, &c.cfg).map_err(err)?;
    let ok = one.vwmo_holds()
        && one.bmo1_bounded() == Some(true)
        && three_halves.vwmo_holds()
        && three_halves.bmo1_bounded() == Some(false)
        && three_halves.integrable;
    ensure(ok, format!("(1,1): {}; (1.5,1): {}", one.summary, three_halves.summary))
}

fn truncation_residuals(c: &Ctx) -> std::result::Result<String, String> {
    let f = example45(1.5, 1.0).map_err(err)?;
    let e0 = CoefficientVector::basis(1, 0).map_err(err)?;
    let rep = truncation_convergence(&f, &e0, &[0.9, 0.99, 0.999], 16, &c.cfg).map_err(err)?;
    let last = rep.residuals[rep.residuals.len() - 1];
    ensure(rep.strictly_decreasing() && last < 1e-3, format!("residuals {:?}", rep.residuals))
}

fn semi_commutator_routes(c: &Ctx) -> std::result::Result<String, String> {
    let s = semi_commutator(&rand_smooth(1), &rand_smooth(2), 64, &c.cfg).map_err(err)?;
    ensure(s.gap() < 1e-6, format!("sections {:.6e}, hankel {:.6e}", s.sections, s.hankel))
}

fn block_check(c: &Ctx) -> std::result::Result<String, String> {
    let radii = [0.99, 0.999];
    let good = MatrixSymbol::diagonal(vec![zk(1), conj_zk(1)]).map_err(err)?;
    let bad = MatrixSymbol::diagonal(vec![zk(1), example45(1.0, 1.0).map_err(err)?]).map_err(err)?;
    let g = block_fredholm_check(&good, &radii, 4, &c.cfg).map_err(err)?;
    let b = block_fredholm_check(&bad, &radii, 4, &c.cfg).map_err(err)?;
    ensure(g.fredholm && !b.fredholm, format!("margins {:.3e} and {:.3e}", g.margin, b.margin))
}

const CHECKS: &[(&str, bool, CheckFn)] = &[
    ("geometry.box_area_formula", true, box_area_formula),
    ("geometry.decomposition_telescopes", true, decomposition_telescopes),
    ("oscillation.inclusion_exclusion", true, inclusion_exclusion),
    ("oscillation.bwmo_of_constants", true, bwmo_of_constants),
    ("operator.toeplitz_closed_forms", true, toeplitz_closed_forms),
    ("operator.berezin_fixed_points", true, berezin_fixed_points),
    ("spectra.eigen_oracles", true, eigen_oracles),
    ("spectra.shift_index", true, shift_index),
    ("study.example45_types", false, example45_types),
    ("operator.truncation_residuals", false, truncation_residuals),
    ("operator.semi_commutator_routes", false, semi_commutator_routes),
    ("spectra.block_check", false, block_check),
];

/// Names of the checks, in run order, with their membership in the fast subset.
pub fn check_names() -> Vec<(&'static str, bool)> {
    CHECKS.iter().map(|(n, fast, _)| (*n, *fast)).collect()
}

pub fn run_checks(options: CheckOptions, cfg: &QuadratureConfig) -> CheckReport {
    let ctx = Ctx {
        cfg: *cfg,
        fault: options.fault,
    };
    let outcomes = CHECKS
        .iter()
        .filter(|(_, fast, _)| *fast || !options.fast)
        .map(|(name, _, f)| {
            let t = Instant::now();
            let res = f(&ctx);
            let seconds = t.elapsed().as_secs_f64();
            let (passed, detail) = match res {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckOutcome {
                name: name.to_string(),
                passed,
                detail,
                seconds,
            }
        })
        .collect();
    CheckReport { options, outcomes }
}
