use std::f64::consts::TAU;

use bergman_osc::geometry::{box_area, box_of, hyperbolic_disc, sub_box, Point};
use bergman_osc::oscillation::*;
use bergman_osc::quadrature::{gauss_legendre, integrate_box, PrefixTable, QuadratureConfig};
use bergman_osc::symbols::*;
use bergman_osc::thresholds::{geometric_radii, DECAY_RATIO, OSCILLATION_CONSTANT_MAX};
use bergman_osc::Error;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

/// About `n + 1` evenly spaced indices of `0..len`, ends included.
fn subsample(len: usize, n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..=n).map(|k| k * (len - 1) / n).collect();
    v.dedup();
    v
}

#[test]
fn prefix_sups_agree_with_direct_quadrature() {
    for f in [rand_smooth(7), example45(1.0, 1.0).unwrap(), example45(1.5, 1.0).unwrap()] {
        for r in [0.5, 0.95, 0.999] {
            let z = Point::polar(r, 0.3);
            let area = box_area(z);
            let t = PrefixTable::build(&f, z, (16, 16), &cfg()).unwrap();
            let mean = t.total() / area;
            let (mut avg_prefix, mut avg_direct) = (0.0f64, 0.0f64);
            let (mut bw_prefix, mut bw_direct) = (0.0f64, 0.0f64);
            for &i in &subsample(t.rows(), 7) {
                for &j in &subsample(t.cols(), 7) {
                    let b = sub_box(z, Point::polar(t.rho[i], t.phi[j])).unwrap();
                    let direct = integrate_box(&f, &b, &cfg().with_tolerance(1e-9 * area)).unwrap().value;
                    let prefix = t.value(i, j);
                    assert!((direct - prefix).norm() <= 1e-7 * area, "{} r = {r} ({i}, {j})", f.name());
                    avg_prefix = avg_prefix.max(prefix.norm() / area);
                    avg_direct = avg_direct.max(direct.norm() / area);
                    bw_prefix = bw_prefix.max((prefix - mean * t.area(i, j)).norm() / area);
                    bw_direct = bw_direct.max((direct - mean * b.area()).norm() / area);
                }
            }
            assert!((avg_prefix - avg_direct).abs() <= 1e-7);
            assert!((bw_prefix - bw_direct).abs() <= 1e-7);
        }
    }
}

fn small_lattice() -> Lattice {
    Lattice::new(vec![0.5, 0.9, 0.99], 4).unwrap()
}

fn seminorm(f: &Symbol) -> f64 {
    bwmo_seminorm(f, &small_lattice(), (16, 16), &cfg()).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 4, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn seminorm_is_homogeneous_and_subadditive(seed in 0u64..500, re in -3.0..3.0f64, im in -3.0..3.0f64) {
        let (f, g) = (rand_smooth(seed), rand_smooth(seed + 1));
        let a = Complex64::new(re, im);
        let (sf, sg) = (seminorm(&f), seminorm(&g));
        prop_assert!((seminorm(&f.scale(a)) - a.norm() * sf).abs() <= 1e-8 * (1.0 + a.norm() * sf));
        prop_assert!(seminorm(&f.add(&g)) <= sf + sg + 1e-8);
    }
}

/// `sup |int_K (f - f^(z))| / |B(z)|` over grid rectangles `K` of `B(z)`.
fn sub_box_oscillation(f: &Symbol, z: Point) -> f64 {
    let t = PrefixTable::build(f, z, (16, 16), &cfg()).unwrap();
    let mean = t.total() / box_area(z);
    let (rows, cols) = (subsample(t.rows(), 16), subsample(t.cols(), 16));
    let mut sup = 0.0f64;
    for (a, &i0) in rows.iter().enumerate() {
        for &i1 in &rows[a + 1..] {
            for (b, &j0) in cols.iter().enumerate() {
                for &j1 in &cols[b + 1..] {
                    let area = t.area(i1, j1) - t.area(i0, j1) - t.area(i1, j0) + t.area(i0, j0);
                    sup = sup.max((t.rect(i0, j0, i1, j1) - mean * area).norm());
                }
            }
        }
    }
    sup / box_area(z)
}

#[test]
fn sub_box_oscillation_vanishes_at_the_boundary() {
    let radii = geometric_radii(0.9, 0.999, 6);
    for f in [example45(1.0, 1.0).unwrap(), rand_smooth(3), z_plus_conj()] {
        let lattice = Lattice::for_symbol(&f, radii.clone(), 4).unwrap();
        let p = lattice_profile("sub-box", &lattice, |z| Ok(sub_box_oscillation(&f, z))).unwrap();
        assert!(p.last() < DECAY_RATIO * p.first(), "{}: {:?}", f.name(), p.values);
    }
}

/// Admissible `(z~, zeta)` in `B(z)`: corners near opposite ends of the box.
fn admissible(rng: &mut ChaCha8Rng, z: Point) -> (Point, Point) {
    let b = box_of(z);
    let at = |s: f64, t: f64| Point::polar(b.rho_lo + s * (b.rho_hi - b.rho_lo), b.phi_lo + t * b.width());
    (
        at(rng.gen_range(0.0..0.1), rng.gen_range(0.0..0.1)),
        at(rng.gen_range(0.9..1.0), rng.gen_range(0.9..1.0)),
    )
}

#[test]
fn sub_box_gap_is_controlled_by_the_seminorm() {
    let f = rand_smooth(5);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = bwmo_seminorm(&f, &Lattice::new(geometric_radii(0.3, 0.99, 6), 8).unwrap(), (16, 16), &cfg()).unwrap().value;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let z = Point::polar(rng.gen_range(0.3..0.99), rng.gen_range(0.0..TAU));
        let (lo, hi) = admissible(&mut rng, z);
        match subbox_average_gap(&f, z, lo, hi, &cfg()) {
            Ok(g) => worst = worst.max(g),
            Err(Error::AreaRatioViolation { .. }) => continue,
            Err(e) => panic!("{e}"),
        }
    }
    let c = worst / s;
    println!("gap constant C = {c:.3} (seminorm {s:.3e})");
    assert!(c.is_finite() && c < OSCILLATION_CONSTANT_MAX);
}

#[test]
fn sub_box_gap_vanishes_for_example45() {
    let f = example45(1.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let radii = geometric_radii(0.9, 0.999, 5);
    let sups: Vec<f64> = radii
        .iter()
        .map(|&r| {
            let z = Point::polar(r, 0.0);
            (0..20)
                .map(|_| {
                    let (lo, hi) = admissible(&mut rng, z);
                    subbox_average_gap(&f, z, lo, hi, &cfg()).unwrap()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(sups[4] < DECAY_RATIO * sups[0], "{sups:?}");
}

/// Average of `f` over `D(z, 1)` by a fixed rule: 12 rays times 6 Gauss nodes.
fn coarse_disc_average(f: &Symbol, z: Point) -> Complex64 {
    let d = hyperbolic_disc(z, 1.0, 12).unwrap();
    let rule = gauss_legendre(6);
    let (mut acc, mut mass) = (Complex64::new(0.0, 0.0), 0.0);
    for ((phi, r1), r2) in d.angles.iter().zip(&d.r_inner).zip(&d.r_outer) {
        for &(x, w) in rule {
            let rho = r1 + 0.5 * (r2 - r1) * (x + 1.0);
            let wt = w * 0.5 * (r2 - r1) * rho;
            acc += f.eval(rho, *phi) * wt;
            mass += wt;
        }
    }
    acc / mass
}

#[test]
fn disc_average_decomposition_smoke() {
    let f = rand_smooth(4);
    let inner = f.clone();
    let flags = SymbolFlags {
        fourier_width: None,
        continuous: true,
        ..f.flags().clone()
    };
    let loose = cfg().with_tolerance(1e-6);
    let f1 = Symbol::new("disc-avg", flags, move |r, phi| {
        disc_average(&inner, Point::polar(r.min(1.0 - 1e-12), phi), 1.0, &loose).unwrap()
    });
    let rest = f.sub(&f1).abs_pow(1.0);
    for r in [0.5, 0.99] {
        let z = Point::polar(r, 1.0);
        let ba = coarse_disc_average(&rest, z).norm();
        let w = oscillation_omega(&f1, z, &cfg()).unwrap().value;
        assert!(ba.is_finite() && ba < 10.0, "r = {r}: {ba}");
        assert!(w.is_finite() && w < 10.0, "r = {r}: {w}");
    }
}
