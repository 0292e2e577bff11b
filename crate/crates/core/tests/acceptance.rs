//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use bergman_osc::eigen::eigenvalues;
use bergman_osc::geometry::{box_area, box_of, disc_decomposition, sub_box, Point, PolarBox};
use bergman_osc::matrix::ComplexMatrix;
use bergman_osc::operator::*;
use bergman_osc::oscillation::*;
use bergman_osc::quadrature::{gauss_legendre, integrate_box, QuadratureConfig};
use bergman_osc::spectra::*;
use bergman_osc::study::{functional_profile, sampled_sup, Functional, ProfileSettings};
use bergman_osc::symbols::*;
use bergman_osc::thresholds::*;
use bergman_osc::Error;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

/// Composite tensor Gauss over a polar rectangle in the normalized measure.
fn tensor_oracle(f: &Symbol, b: &PolarBox, pieces: usize) -> Complex64 {
    let rule = gauss_legendre(20);
    let mut acc = Complex64::new(0.0, 0.0);
    let (dr, dp) = ((b.rho_hi - b.rho_lo) / pieces as f64, (b.phi_hi - b.phi_lo) / pieces as f64);
    for i in 0..pieces {
        for j in 0..pieces {
            let (r0, p0) = (b.rho_lo + i as f64 * dr, b.phi_lo + j as f64 * dp);
            for &(x, wx) in rule {
                let rho = r0 + 0.5 * dr * (x + 1.0);
                for &(y, wy) in rule {
                    let phi = p0 + 0.5 * dp * (y + 1.0);
                    acc += f.eval(rho, phi) * (wx * wy * 0.25 * dr * dp * rho / PI);
                }
            }
        }
    }
    acc
}

/// `Ci(x)` from its power series.
fn cosine_integral(x: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..60 {
        term *= -x * x / ((2 * k - 1) as f64 * (2 * k) as f64);
        sum += term / (2 * k) as f64;
    }
    EULER_GAMMA + x.ln() + sum
}

fn abs2_berezin(t: f64) -> f64 {
    1.0 - (1.0 - t) * ((1.0 - t) * (-t).ln_1p() + t) / (t * t)
}

fn c1_geometry() -> Outcome {
    let one = constant_real(1.0);
    let mut area = 0.0f64;
    for r in [0.0, 0.5, 0.9, 0.99] {
        let z = Point::polar(r, 0.7);
        let quad = tensor_oracle(&one, &box_of(z), 2).re;
        area = area.max((box_area(z) - quad).abs() / quad);
    }
    let mut tele = 0.0f64;
    for level in 0..=8 {
        let total: f64 = disc_decomposition(level).iter().map(|(z, _)| box_area(*z)).sum();
        let outer = 1.0 - 0.5f64.powi(level as i32 + 1);
        tele = tele.max((total - outer * outer).abs() / (outer * outer));
    }
    ensure(area < 1e-10 && tele < 1e-10, format!("area rel {area:.1e}, telescoping rel {tele:.1e}"))
}

fn c2_inclusion_exclusion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let g = rand_smooth(100 + k);
        let z = Point::polar(rng.gen_range(0.0..0.99), rng.gen_range(0.0..2.0 * PI));
        let b = box_of(z);
        let mut pick = |lo: f64, hi: f64| {
            let (a, c) = (rng.gen_range(lo..hi), rng.gen_range(lo..hi));
            (a.min(c), a.max(c))
        };
        let (r1, r2) = pick(b.rho_lo, b.rho_hi);
        let (p1, p2) = pick(b.phi_lo, b.phi_hi);
        let corners = inclusion_exclusion_corners(z, Point::polar(r1, p1), Point::polar(r2, p2)).map_err(e)?;
        let mut lhs = Complex64::new(0.0, 0.0);
        for (w, s) in corners {
            lhs += s as f64 * integrate_box(&g, &sub_box(z, w).map_err(e)?, &cfg()).map_err(e)?.value;
        }
        let rhs = tensor_oracle(&g, &PolarBox::new(r1, r2, p1, p2).map_err(e)?, 2);
        worst = worst.max((lhs - rhs).norm() / box_area(z));
    }
    ensure(worst <= 1e-8, format!("max defect {worst:.1e} |B(z)| over 100 triples"))
}

fn c3_toeplitz_closed_forms() -> Outcome {
    let id = toeplitz_matrix(&constant_real(1.0), 64, &cfg()).map_err(e)?;
    let d1 = id.sub(&ComplexMatrix::identity(64)).map_err(e)?.max_abs();
    let t = toeplitz_matrix(&abs2(), 64, &cfg()).map_err(e)?;
    let mut d2 = 0.0f64;
    let mut off = 0.0f64;
    for i in 0..64 {
        for j in 0..64 {
            if i == j {
                let want = (i + 1) as f64 / (i + 2) as f64;
                d2 = d2.max((t[(i, i)] - want).norm() / want);
            } else {
                off = off.max(t[(i, j)].norm());
            }
        }
    }
    ensure(
        d1 <= 1e-12 && d2 <= 1e-10 && off <= 1e-12,
        format!("identity {d1:.1e}, |w|^2 diagonal rel {d2:.1e}, off-diagonal {off:.1e}"),
    )
}

fn c4_berezin_fixed_points() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut dc, mut dz, mut da) = (0.0f64, 0.0f64, 0.0f64);
    let c = Complex64::new(-0.3, 1.7);
    for _ in 0..20 {
        let z = Point::polar(0.9 * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..2.0 * PI));
        dc = dc.max((berezin_symbol(&constant(c), z, &cfg()).map_err(e)? - c).norm());
        for k in 1..=3 {
            dz = dz.max((berezin_symbol(&zk(k), z, &cfg()).map_err(e)? - z.value().powu(k)).norm());
        }
        let t = z.r() * z.r();
        let want = if t == 0.0 { 0.5 } else { abs2_berezin(t) };
        da = da.max((berezin_symbol(&abs2(), z, &cfg()).map_err(e)?.re - want).abs());
    }
    ensure(
        dc <= 1e-10 && dz <= 1e-8 && da <= 1e-7,
        format!("constants {dc:.1e}, z^k {dz:.1e}, |w|^2 {da:.1e}"),
    )
}

fn settings(angles: usize) -> ProfileSettings {
    ProfileSettings {
        radii: default_radii(DEFAULT_RADII),
        angles,
        grid: (16, 16),
    }
}

fn c5_type_one() -> Outcome {
    let f = example45(1.5, 1.0).map_err(e)?;
    let s = settings(1);
    let vwmo = functional_profile(&f, Functional::Vwmo, &s, &cfg()).map_err(e)?;
    let bmo = functional_profile(&f, Functional::Bmo1, &s, &cfg()).map_err(e)?;
    let fhat = functional_profile(&f, Functional::Fhat, &s, &cfg()).map_err(e)?;
    let (sv, sb, sf) = (
        vwmo.slope().unwrap_or(f64::NAN),
        bmo.slope().unwrap_or(f64::NAN),
        fhat.slope().unwrap_or(f64::NAN),
    );
    let l1 = f.flags().integrability == Integrability::L1;
    let growth = bmo.last() / bmo.first();
    ensure(
        (sv - 1.0).abs() <= SLOPE_WINDOW
            && (sb + 0.5).abs() <= BMO_SLOPE_WINDOW
            && growth > UNBOUNDED_GROWTH
            && (sf - 1.0).abs() <= SLOPE_WINDOW
            && l1,
        format!("VWMO slope {sv:.3}, BMO1 slope {sb:.3} (last/first {growth:.1}), |f^| slope {sf:.3}, L1 {l1}"),
    )
}

fn c6_type_two() -> Outcome {
    let f = example45(1.0, 1.0).map_err(e)?;
    let sup = sampled_sup(&f, 0.999_999, 200_000, 1);
    let s = settings(1);
    let vwmo = functional_profile(&f, Functional::Vwmo, &s, &cfg()).map_err(e)?;
    let bmo = functional_profile(&f, Functional::Bmo1, &s, &cfg()).map_err(e)?;
    let tail = vwmo.last() / vwmo.first();
    ensure(
        sup <= 2.0 && tail < DECAY_RATIO && bmo.spread() < BOUNDED_SPREAD,
        format!("sup {sup:.4}, VWMO tail/head {tail:.3}, BMO1 max/min {:.2}", bmo.spread()),
    )
}

fn c7_oscillation_of_average() -> Outcome {
    let radii = geometric_radii(0.9, 0.999, 6);
    let suite: Vec<(Symbol, bool)> = vec![
        (constant_real(2.0), false),
        (rand_smooth(1), true),
        (rand_smooth(2), true),
        (example45(1.0, 1.0).map_err(e)?, true),
        (example45(1.5, 1.0).map_err(e)?, true),
        (z_plus_conj(), true),
    ];
    let mut c_max = 0.0f64;
    let mut notes = Vec::new();
    let mut ok = true;
    for (f, vanishing) in &suite {
        let lattice = Lattice::for_symbol(f, radii.clone(), 6).map_err(e)?;
        let semi = bwmo_seminorm(f, &lattice, (16, 16), &cfg()).map_err(e)?.value;
        let fhat = average_symbol(f, &cfg());
        let omega = lattice_profile("omega", &lattice, |z| Ok(oscillation_omega(&fhat, z, &cfg())?.value)).map_err(e)?;
        let ratio = omega.max() / semi.max(RATIO_FLOOR);
        if omega.max() > RATIO_FLOOR {
            c_max = c_max.max(ratio);
        }
        if *vanishing {
            let tail = omega.last() / omega.first();
            ok &= tail < DECAY_RATIO;
            notes.push(format!("{} {tail:.3}", f.name()));
        } else {
            ok &= omega.max() <= RATIO_FLOOR.sqrt();
        }
    }
    ok &= c_max.is_finite() && c_max < OSCILLATION_CONSTANT_MAX;
    ensure(ok, format!("C = {c_max:.2}; omega tail/head: {}", notes.join(", ")))
}

fn c8_compactness() -> Outcome {
    let f = example45(1.0, 1.0).map_err(e)?;
    let d = toeplitz_radial_diag(&f, 256, &cfg()).map_err(e)?;
    // d_0 = 1/4 + 2 int_2^inf sin(u)/u^2 du = 1/4 + sin 2 - 2 Ci(2)
    let d0 = 0.25 + 2f64.sin() - 2.0 * cosine_integral(2.0);
    let d0_err = (d[0].re - d0).abs();
    let all = d.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tail = d[128..].iter().map(|v| v.norm()).fold(0.0, f64::max);
    let cs = cluster_set(&f, &BOUNDARY_LADDER, 8, Transform::BoxAverage, &cfg()).map_err(e)?;
    let en = essential_norm_estimate(&f, &BOUNDARY_LADDER, 8, &cfg()).map_err(e)?;
    ensure(
        d0_err < 1e-10 && tail <= DIAGONAL_DECAY * all && cs.contraction() < DECAY_RATIO && en.estimate < COMPACT_ESSENTIAL_NORM,
        format!(
            "d_0 error {d0_err:.1e}, tail/sup {:.1e}, cluster outer/inner {:.3}, essential norm {:.2e}",
            tail / all,
            cs.contraction(),
            en.estimate
        ),
    )
}

fn c9_index() -> Outcome {
    let outer = [0.995, 0.999];
    let mut found = Vec::new();
    for k in 1..=3u32 {
        found.push(fredholm_index(&zk(k), &outer, 32, Transform::BoxAverage, &cfg()).map_err(e)?.index);
    }
    let c = example45(1.0, 1.0).map_err(e)?;
    let plus_one = fredholm_index(&c.add(&constant_real(1.0)), &BOUNDARY_LADDER, 32, Transform::BoxAverage, &cfg()).map_err(e)?.index;
    let bare = fredholm_index(&c, &BOUNDARY_LADDER, 32, Transform::BoxAverage, &cfg());
    let not_fredholm = matches!(bare, Err(Error::NotFredholm(_)));
    ensure(
        found == vec![-1, -2, -3] && plus_one == 0 && not_fredholm,
        format!("z^k: {found:?}, example45 + 1: {plus_one}, example45 alone NotFredholm: {not_fredholm}"),
    )
}

fn frozen_truncation_anchor() -> Option<f64> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/anchors.json");
    let table = bergman_osc::anchors::read_table(&path).ok()??;
    table.anchors.iter().find(|a| a.quantity.starts_with("truncation_residual")).map(|a| a.value)
}

fn c10_strong_limit() -> Outcome {
    let f = example45(1.5, 1.0).map_err(e)?;
    let e0 = CoefficientVector::basis(1, 0).map_err(e)?;
    let rep = truncation_convergence(&f, &e0, &[0.9, 0.99, 0.999], 16, &cfg()).map_err(e)?;
    let last = *rep.residuals.last().unwrap();
    let anchor = frozen_truncation_anchor();
    let matches_anchor = anchor.is_some_and(|a| (a - last).abs() <= 1e-6 * a.abs().max(1e-12) + 1e-12);
    ensure(
        rep.strictly_decreasing() && last < 1e-3 && matches_anchor,
        format!("residuals {:?}, anchor {anchor:?}", rep.residuals.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>()),
    )
}

fn c11_semi_commutator() -> Outcome {
    let mut gaps = Vec::new();
    for (f, g) in [(rand_smooth(1), rand_smooth(2)), (z_plus_conj(), conj_zk(2).add(&zk(1)))] {
        let s = semi_commutator(&f, &g, 64, &cfg()).map_err(e)?;
        gaps.push((s.sections, s.gap()));
    }
    ensure(
        gaps.iter().all(|(_, g)| *g <= 1e-6),
        format!("(norm, gap): {}", gaps.iter().map(|(n, g)| format!("({n:.4}, {g:.1e})")).collect::<Vec<_>>().join(", ")),
    )
}

fn c12_block() -> Outcome {
    let radii = [0.99, 0.999];
    let good = MatrixSymbol::diagonal(vec![zk(1), conj_zk(1)]).map_err(e)?;
    let bad = MatrixSymbol::diagonal(vec![zk(1), example45(1.0, 1.0).map_err(e)?]).map_err(e)?;
    let g = block_fredholm_check(&good, &radii, 8, &cfg()).map_err(e)?;
    let b = block_fredholm_check(&bad, &radii, 8, &cfg()).map_err(e)?;
    ensure(
        g.fredholm && !b.fredholm,
        format!("diag(z, conj z): {} margin {:.3e}; diag(z, example45): {} margin {:.3e}", g.fredholm, g.margin, b.fredholm, b.margin),
    )
}

fn spectral_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut rest = b.to_vec();
    let mut worst = 0.0f64;
    for x in a {
        let (k, d) = rest
            .iter()
            .enumerate()
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        worst = worst.max(d);
        rest.swap_remove(k);
    }
    worst
}

fn c13_eigensolver() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let n = 40;
    let d: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
    let diag = spectral_distance(&eigenvalues(&ComplexMatrix::from_diagonal(&d)).map_err(e)?, &d);
    let mut comp = ComplexMatrix::zeros(3);
    comp[(0, 2)] = Complex64::new(1.0, 0.0);
    comp[(1, 0)] = Complex64::new(1.0, 0.0);
    comp[(2, 1)] = Complex64::new(1.0, 0.0);
    let roots: Vec<Complex64> = (0..3).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 3.0)).collect();
    let companion = spectral_distance(&eigenvalues(&comp).map_err(e)?, &roots);
    // unitary Q from Gram-Schmidt
    let a = ComplexMatrix::from_fn(n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let mut cols: Vec<Vec<Complex64>> = Vec::new();
    for j in 0..n {
        let mut v: Vec<Complex64> = (0..n).map(|i| a[(i, j)]).collect();
        for q in &cols {
            let p: Complex64 = q.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            v.iter_mut().zip(q).for_each(|(x, y)| *x -= p * y);
        }
        let nv = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= nv);
        cols.push(v);
    }
    let q = ComplexMatrix::from_fn(n, |i, j| cols[j][i]);
    let conj = q.mul(&ComplexMatrix::from_diagonal(&d)).map_err(e)?.mul(&q.adjoint()).map_err(e)?;
    let unitary = spectral_distance(&eigenvalues(&conj).map_err(e)?, &d);

    let work = || -> Result<Vec<u64>, Error> {
        let t = toeplitz_matrix(&rand_smooth(5), 48, &cfg())?;
        let mut bits: Vec<u64> = eigenvalues(&t)?.iter().flat_map(|v| [v.re.to_bits(), v.im.to_bits()]).collect();
        let lattice = Lattice::new(vec![0.9, 0.95, 0.99, 0.995, 0.999], 4)?;
        let p = vwmo_profile(&rand_smooth(5), &lattice, (16, 16), &cfg())?;
        bits.extend(p.values.iter().map(|v| v.to_bits()));
        Ok(bits)
    };
    let pool = |k| rayon::ThreadPoolBuilder::new().num_threads(k).build().unwrap();
    let one = pool(1).install(work).map_err(e)?;
    let four = pool(4).install(work).map_err(e)?;
    let same = one == four;
    ensure(
        diag <= 1e-8 && companion <= 1e-8 && unitary <= 1e-8 && same,
        format!("diagonal {diag:.1e}, companion {companion:.1e}, unitary conjugation {unitary:.1e}, threads 1 vs 4 bit-exact {same}"),
    )
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 13] = [
        ("geometry exactness", 5, c1_geometry),
        ("inclusion-exclusion identity", 20, c2_inclusion_exclusion),
        ("Toeplitz closed forms", 10, c3_toeplitz_closed_forms),
        ("Berezin fixed points", 30, c4_berezin_fixed_points),
        ("example45 type (i), (b, beta) = (1.5, 1)", 180, c5_type_one),
        ("example45 type (ii), (b, beta) = (1, 1)", 120, c6_type_two),
        ("oscillation of the average bounded by BWMO", 120, c7_oscillation_of_average),
        ("compactness chain for example45(1, 1)", 180, c8_compactness),
        ("Fredholm index", 60, c9_index),
        ("strong-limit truncation residuals", 60, c10_strong_limit),
        ("semi-commutator routes", 30, c11_semi_commutator),
        ("block Fredholm check", 60, c12_block),
        ("eigensolver oracles and determinism", 30, c13_eigensolver),
    ];
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (k, (name, budget, run)) in criteria.iter().enumerate() {
        let id = format!("{}", k + 1);
        if filter.as_ref().is_some_and(|f| f != &id) {
            continue;
        }
        let t = Instant::now();
        let res = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let took = t.elapsed();
        let over = took > Duration::from_secs(*budget);
        let (tag, detail) = match &res {
            Ok(d) if !over => ("PASS", d.clone()),
            Ok(d) => ("FAIL", format!("{d}; over the {budget} s budget")),
            Err(d) => ("FAIL", d.clone()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("{tag} criterion {id:>2}: {name}: {detail} [{:.1} s]", took.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
