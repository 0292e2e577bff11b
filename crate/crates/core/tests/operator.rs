use bergman_osc::geometry::Point;
use bergman_osc::matrix::ComplexMatrix;
use bergman_osc::operator::*;
use bergman_osc::quadrature::{radial_integral_to_boundary, QuadratureConfig};
use bergman_osc::symbols::*;
use bergman_osc::{Error, Warning};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn abs2_berezin(t: f64) -> f64 {
    if t == 0.0 {
        return 0.5;
    }
    1.0 - (1.0 - t) * ((1.0 - t) * (-t).ln_1p() + t) / (t * t)
}

#[test]
fn radial_diagonal_matches_direct_integrals() {
    let f = example45(1.5, 1.0).unwrap();
    let d = toeplitz_radial_diag(&f, 40, &cfg()).unwrap();
    for n in [0usize, 7, 39] {
        let sigma = 0.5 / (n + 1) as f64;
        let direct = radial_integral_to_boundary(&f, 0.0, 0.0, sigma, &cfg(), |r| 2.0 * (n + 1) as f64 * r.powi(2 * n as i32 + 1))
            .unwrap()
            .value;
        assert!((d[n] - direct).norm() < 1e-9, "n = {n}: {} vs {}", d[n], direct);
    }
}

#[test]
fn coordinate_section_self_converges() {
    let t = toeplitz_matrix(&zk(1), 32, &cfg()).unwrap();
    let fine = toeplitz_matrix(&zk(1), 32, &QuadratureConfig { panels: 16, nodes: 24, ..cfg() }).unwrap();
    assert!(t.sub(&fine).unwrap().max_abs() < 1e-13);
}

#[test]
fn sections_are_hermitian_positive_and_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for f in [z_plus_conj(), abs2(), re_w(), rand_smooth(5).add(&rand_smooth(5).conj())] {
        let t = toeplitz_matrix(&f, 32, &cfg()).unwrap();
        assert!(t.hermitian_defect() < 1e-10, "{}", f.name());
    }
    let pos = abs2().add(&re_w().abs_pow(2.0));
    let t = toeplitz_matrix(&pos, 24, &cfg()).unwrap();
    for _ in 0..100 {
        let v: Vec<Complex64> = (0..24).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let q = bergman_osc::matrix::dot(&v, &t.mul_vec(&v).unwrap()).re;
        assert!(q >= -1e-10);
    }
    for f in [rand_smooth(11), z_plus_conj(), example45(1.0, 1.0).unwrap()] {
        let t = toeplitz_matrix(&f, 48, &cfg()).unwrap();
        let sup = f.flags().bound.unwrap();
        assert!(t.norm2_estimate(200) <= sup * (1.0 + 1e-9), "{}", f.name());
    }
}

#[test]
fn finite_width_gives_exact_band() {
    let f = rand_smooth(2);
    let w = f.flags().fourier_width.unwrap();
    let t = toeplitz_matrix(&f, 24, &cfg()).unwrap();
    assert_eq!(t.bandwidth(), w);
}

#[test]
fn kernel_normalization_up_to_095() {
    for (r, th) in [(0.0, 0.0), (0.5, 1.0), (0.9, 4.0), (0.95, 2.5)] {
        let v = KernelPoint::new(Point::polar(r, th)).normalization(&cfg()).unwrap();
        assert!((v.value.re - 1.0).abs() < 1e-9, "r = {r}: {}", v.value);
    }
}

#[test]
fn berezin_fixed_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let c = Complex64::new(2.0, -1.0);
    for _ in 0..20 {
        let z = Point::polar(rng.gen_range(0.0..0.9), rng.gen_range(0.0..6.28));
        assert!((berezin_symbol(&constant(c), z, &cfg()).unwrap() - c).norm() < 1e-10);
        for k in 1..=3 {
            let v = berezin_symbol(&zk(k), z, &cfg()).unwrap();
            assert!((v - z.value().powu(k)).norm() < 1e-8, "k = {k} at {z:?}");
        }
        let t = z.r() * z.r();
        let v = berezin_symbol(&abs2(), z, &cfg()).unwrap();
        assert!((v.re - abs2_berezin(t)).abs() < 1e-7);
    }
}

#[test]
fn berezin_kernel_and_mobius_routes_agree() {
    let f = rand_smooth(4);
    for (r, th) in [(0.3, 0.2), (0.8, 2.0), (0.95, 5.0)] {
        let z = Point::polar(r, th);
        let a = berezin_symbol_via(&f, z, BerezinRoute::Mobius, &cfg()).unwrap();
        let b = berezin_symbol_via(&f, z, BerezinRoute::Kernel, &cfg()).unwrap();
        assert!((a.value - b.value).norm() < 1e-9, "r = {r}: {} vs {}", a.value, b.value);
    }
}

#[test]
fn operator_berezin_matches_symbol_berezin() {
    let f = rand_smooth(6);
    let t = toeplitz_matrix(&f, 128, &cfg()).unwrap();
    for (r, th) in [(0.0, 0.0), (0.5, 1.0), (0.9, 3.0)] {
        let z = Point::polar(r, th);
        let op = berezin_operator(&t, z);
        assert!(op.warnings.is_empty());
        let sym = berezin_symbol(&f, z, &cfg()).unwrap();
        assert!((op.value - sym).norm() < 1e-6, "r = {r}: {} vs {}", op.value, sym);
    }
    assert!((berezin_operator(&ComplexMatrix::identity(8), Point::polar(0.4, 0.0)).value.re - 1.0).abs() < 1e-15);
    let w = berezin_operator(&ComplexMatrix::identity(8), Point::polar(0.9, 0.0));
    assert!(matches!(w.warnings[0], Warning::Truncation { .. }));
}

#[test]
fn limit_definition_of_berezin_transform() {
    let f = example45(1.0, 1.0).unwrap();
    let t = toeplitz_matrix(&f, 128, &cfg()).unwrap();
    for r in [0.3, 0.6, 0.9] {
        let z = Point::polar(r, 0.0);
        let a = berezin_operator(&t, z).value;
        let b = berezin_symbol(&f, z, &cfg()).unwrap();
        assert!((a - b).norm() < 1e-5, "r = {r}: {a} vs {b}");
    }
}

#[test]
fn truncation_residuals() {
    let e0 = CoefficientVector::basis(1, 0).unwrap();
    let cuts = [0.9, 0.99, 0.999];
    for (b, beta) in [(1.0, 1.0), (1.5, 1.0)] {
        let f = example45(b, beta).unwrap();
        let rep = truncation_convergence(&f, &e0, &cuts, 16, &cfg()).unwrap();
        eprintln!("{b} {beta}: {:?} {:?}", rep.residuals, rep.warnings);
        assert!(rep.strictly_decreasing());
        assert!(rep.residuals[2] < 1e-3);
    }
    let g = CoefficientVector::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.5)]).unwrap();
    let rep = truncation_convergence(&rand_smooth(1), &g, &cuts, 8, &cfg()).unwrap();
    assert!(rep.strictly_decreasing(), "{:?}", rep.residuals);
}

#[test]
fn hankel_values() {
    let e0 = CoefficientVector::basis(1, 0).unwrap();
    for k in 1..=3 {
        let h = hankel_norm_applied(&zk(k), &e0, 8, &cfg()).unwrap();
        assert!(h.norm_sq < 1e-8);
    }
    let h = hankel_norm_applied(&conj_zk(1), &e0, 8, &cfg()).unwrap();
    assert!((h.norm_sq - 0.5).abs() < 1e-9);
    let g = CoefficientVector::basis(3, 2).unwrap();
    // ||sqrt(3) w^2 |w|^2||^2 = 3/5, and P keeps (3/4) e_2
    let h = hankel_norm_applied(&abs2(), &g, 8, &cfg()).unwrap();
    let l2 = 0.6;
    let p = 0.75f64.powi(2);
    assert!((h.norm_sq - (l2 - p)).abs() < 1e-9, "{h:?}");
}

#[test]
fn semi_commutator_routes_agree() {
    for (f, g) in [(rand_smooth(1), rand_smooth(2)), (z_plus_conj(), rand_harmonic(3))] {
        let s = semi_commutator(&f, &g, 64, &cfg()).unwrap();
        assert!(s.gap() < 1e-6, "{s:?}");
        assert!(s.sections > 1e-3);
    }
}

#[test]
fn reflection_identity() {
    let one = constant_real(1.0);
    let r = reflection_check(&one, Point::polar(0.5, 0.7), 96, &cfg()).unwrap();
    assert!(r.discrepancy < 1e-8, "{r:?}");
    let r = reflection_check(&rand_smooth(8), Point::origin(), 32, &cfg()).unwrap();
    assert!(r.discrepancy < 1e-12, "{r:?}");
    let r = reflection_check(&re_w(), Point::polar(0.5, 0.0), 96, &cfg()).unwrap();
    assert!(r.discrepancy < 1e-4, "{r:?}");
    assert!(r.warnings.is_empty());
    let r = reflection_check(&re_w(), Point::polar(0.8, 0.0), 32, &cfg()).unwrap();
    assert!(!r.warnings.is_empty());
    assert!(matches!(
        reflection_check(&example45(1.5, 1.0).unwrap(), Point::origin(), 8, &cfg()),
        Err(Error::BadParameters(_))
    ));
}
