//! Symbols: functions on the disc in polar form, with the metadata the
//! integrators and operator builders rely on.
//!
//! A symbol whose values oscillate like `sin((1 - rho)^-b)` near the boundary
//! carries [`Oscillation`] metadata. Integrators place radial panel edges on
//! the zeros `rho_m = 1 - (m pi)^(-1/b)` and, for integrals that run all the
//! way to `|w| = 1`, sum the resulting alternating panel series with an
//! Euler transform. That extrapolation is only valid for a *zero-mean*
//! oscillation, so sums of oscillatory and smooth symbols keep both parts
//! (see [`Symbol::boundary_split`]).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::mobius_c;

/// `(rho, 1 - rho, phi) -> value`.
type EvalFn = dyn Fn(f64, f64, f64) -> Complex64 + Send + Sync;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Integrability {
    L1,
    L1Loc,
}

/// Boundary oscillation `sin((1 - rho)^-exponent)`. `pure` means the symbol is
/// (near the boundary) an oscillation with smooth amplitude and nothing else.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Oscillation {
    pub exponent: f64,
    pub pure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolFlags {
    pub radial: bool,
    /// `Some(M)` when `|f| <= M` everywhere.
    pub bound: Option<f64>,
    pub oscillation: Option<Oscillation>,
    pub integrability: Integrability,
    /// Largest `|k|` with a nonzero angular Fourier mode, when finite.
    pub fourier_width: Option<usize>,
    pub continuous: bool,
    pub real_valued: bool,
    pub nonnegative: bool,
    /// Radii where the symbol may jump; quadrature panels are split there.
    pub radial_breaks: Vec<f64>,
}

impl SymbolFlags {
    fn smooth_bounded(bound: f64) -> Self {
        Self {
            radial: false,
            bound: Some(bound),
            oscillation: None,
            integrability: Integrability::L1,
            fourier_width: None,
            continuous: true,
            real_valued: false,
            nonnegative: false,
            radial_breaks: Vec::new(),
        }
    }
}

/// Smooth and oscillatory parts of a mixed symbol.
#[derive(Clone)]
pub struct BoundarySplit {
    pub smooth: Symbol,
    pub oscillatory: Symbol,
}

/// A measurable function on the disc, evaluated at `(rho, phi)`.
#[derive(Clone)]
pub struct Symbol {
    name: String,
    eval: Arc<EvalFn>,
    flags: SymbolFlags,
    split: Option<Arc<BoundarySplit>>,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol")
            .field("name", &self.name)
            .field("flags", &self.flags)
            .finish()
    }
}

impl Symbol {
    pub fn new<F>(name: impl Into<String>, flags: SymbolFlags, eval: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
    {
        Self::with_gap(name, flags, move |r, _, p| eval(r, p))
    }

    /// Like [`Symbol::new`], for closures `(rho, 1 - rho, phi)` that need the
    /// boundary distance to full relative precision.
    pub fn with_gap<F>(name: impl Into<String>, flags: SymbolFlags, eval: F) -> Self
    where
        F: Fn(f64, f64, f64) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            flags,
            split: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn flags(&self) -> &SymbolFlags {
        &self.flags
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    #[inline]
    pub fn eval(&self, rho: f64, phi: f64) -> Complex64 {
        (self.eval)(rho, 1.0 - rho, phi)
    }

    /// Evaluate with the boundary distance `gap = 1 - rho` supplied by the
    /// caller; near the circle `rho` alone does not resolve fast oscillations.
    #[inline]
    pub fn eval_gap(&self, rho: f64, gap: f64, phi: f64) -> Complex64 {
        (self.eval)(rho, gap, phi)
    }

    #[inline]
    pub fn at(&self, w: Complex64) -> Complex64 {
        self.eval(w.norm(), w.arg())
    }

    /// Smooth/oscillatory decomposition for mixed symbols.
    pub fn boundary_split(&self) -> Option<&BoundarySplit> {
        self.split.as_deref()
    }

    pub fn is_radial(&self) -> bool {
        self.flags.radial
    }

    pub fn is_bounded(&self) -> bool {
        self.flags.bound.is_some()
    }

    pub fn oscillation_exponent(&self) -> Option<f64> {
        self.flags.oscillation.map(|o| o.exponent)
    }

    /// Parts for integrals that reach the boundary circle: each part is
    /// either non-oscillatory or purely oscillatory. `None` when the
    /// symbol mixes oscillations in a way no part can isolate.
    pub fn boundary_parts(&self) -> Option<Vec<Symbol>> {
        match (&self.flags.oscillation, &self.split) {
            (None, _) => Some(vec![self.clone()]),
            (Some(o), _) if o.pure => Some(vec![self.clone()]),
            (Some(_), Some(s)) => {
                let mut parts = s.smooth.boundary_parts()?;
                parts.extend(s.oscillatory.boundary_parts()?);
                Some(parts)
            }
            _ => None,
        }
    }

    /// Pointwise sum.
    pub fn add(&self, other: &Symbol) -> Symbol {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        let fa = &self.flags;
        let fb = &other.flags;
        let oscillation = combine_oscillation_sum(fa.oscillation, fb.oscillation);
        let flags = SymbolFlags {
            radial: fa.radial && fb.radial,
            bound: fa.bound.zip(fb.bound).map(|(x, y)| x + y),
            oscillation,
            integrability: if fa.integrability == Integrability::L1
                && fb.integrability == Integrability::L1
            {
                Integrability::L1
            } else {
                Integrability::L1Loc
            },
            fourier_width: fa.fourier_width.zip(fb.fourier_width).map(|(x, y)| x.max(y)),
            continuous: fa.continuous && fb.continuous,
            real_valued: fa.real_valued && fb.real_valued,
            nonnegative: fa.nonnegative && fb.nonnegative,
            radial_breaks: merge_breaks(&fa.radial_breaks, &fb.radial_breaks),
        };
        let mut out = Symbol::with_gap(
            format!("{} + {}", self.name, other.name),
            flags,
            move |r, t, p| a(r, t, p) + b(r, t, p),
        );
        out.split = sum_split(self, other);
        out
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Symbol) -> Symbol {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        let fa = &self.flags;
        let fb = &other.flags;
        let oscillation = match (fa.oscillation, fb.oscillation) {
            (None, None) => None,
            (Some(o), None) if fb.continuous && fb.bound.is_some() => Some(o),
            (None, Some(o)) if fa.continuous && fa.bound.is_some() => Some(o),
            (Some(x), None) | (None, Some(x)) => Some(Oscillation {
                exponent: x.exponent,
                pure: false,
            }),
            (Some(x), Some(y)) => Some(Oscillation {
                exponent: x.exponent.max(y.exponent),
                pure: false,
            }),
        };
        let integrability = match (fa.bound, fb.bound) {
            (Some(_), _) => fb.integrability,
            (_, Some(_)) => fa.integrability,
            _ => Integrability::L1Loc,
        };
        let flags = SymbolFlags {
            radial: fa.radial && fb.radial,
            bound: fa.bound.zip(fb.bound).map(|(x, y)| x * y),
            oscillation,
            integrability,
            fourier_width: fa.fourier_width.zip(fb.fourier_width).map(|(x, y)| x + y),
            continuous: fa.continuous && fb.continuous,
            real_valued: fa.real_valued && fb.real_valued,
            nonnegative: fa.nonnegative && fb.nonnegative,
            radial_breaks: merge_breaks(&fa.radial_breaks, &fb.radial_breaks),
        };
        let mut out = Symbol::with_gap(
            format!("({}) * ({})", self.name, other.name),
            flags,
            move |r, t, p| a(r, t, p) * b(r, t, p),
        );
        // (s + o) * g = s g + o g for smooth bounded g
        let smooth_factor = |x: &Symbol| x.flags.oscillation.is_none() && x.flags.bound.is_some();
        if let (Some(s), true) = (&self.split, smooth_factor(other)) {
            out.split = Some(Arc::new(BoundarySplit {
                smooth: s.smooth.mul(other),
                oscillatory: s.oscillatory.mul(other),
            }));
        } else if let (Some(s), true) = (&other.split, smooth_factor(self)) {
            out.split = Some(Arc::new(BoundarySplit {
                smooth: self.mul(&s.smooth),
                oscillatory: self.mul(&s.oscillatory),
            }));
        }
        out
    }

    /// Multiply by a complex scalar.
    pub fn scale(&self, c: Complex64) -> Symbol {
        let k = constant(c);
        let mut out = k.mul(self).with_name(format!("{}*({})", fmt_complex(c), self.name));
        out.flags.nonnegative = self.flags.nonnegative && c.im == 0.0 && c.re >= 0.0;
        out.flags.real_valued = self.flags.real_valued && c.im == 0.0;
        out.flags.bound = self.flags.bound.map(|m| m * c.norm());
        out.flags.integrability = self.flags.integrability;
        out
    }

    pub fn sub(&self, other: &Symbol) -> Symbol {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
            .with_name(format!("{} - ({})", self.name, other.name))
    }

    /// Pointwise modulus raised to `p`.
    pub fn abs_pow(&self, p: f64) -> Symbol {
        let a = self.eval.clone();
        let mut flags = self.flags.clone();
        flags.bound = flags.bound.map(|m| m.powf(p));
        flags.oscillation = flags.oscillation.map(|o| Oscillation {
            exponent: o.exponent,
            pure: false,
        });
        flags.fourier_width = if flags.radial { Some(0) } else { None };
        flags.real_valued = true;
        flags.nonnegative = true;
        if p > 1.0 && self.flags.bound.is_none() {
            flags.integrability = Integrability::L1Loc;
        }
        Symbol::with_gap(format!("|{}|^{}", self.name, p), flags, move |r, t, ph| {
            Complex64::new(a(r, t, ph).norm().powf(p), 0.0)
        })
    }

    pub fn conj(&self) -> Symbol {
        let a = self.eval.clone();
        let mut out = Symbol::with_gap(format!("conj({})", self.name), self.flags.clone(), move |r, t, p| {
            a(r, t, p).conj()
        });
        if let Some(s) = &self.split {
            out.split = Some(Arc::new(BoundarySplit {
                smooth: s.smooth.conj(),
                oscillatory: s.oscillatory.conj(),
            }));
        }
        out
    }

    /// `f o phi_z`. Oscillation alignment is lost under composition.
    pub fn compose_mobius(&self, z: Complex64) -> Symbol {
        let a = self.eval.clone();
        let mut flags = self.flags.clone();
        flags.radial = z == Complex64::new(0.0, 0.0) && self.flags.radial;
        flags.fourier_width = if z == Complex64::new(0.0, 0.0) {
            self.flags.fourier_width
        } else {
            None
        };
        flags.oscillation = flags.oscillation.map(|o| Oscillation {
            exponent: o.exponent,
            pure: false,
        });
        flags.radial_breaks.clear();
        Symbol::new(format!("({})∘φ[{}]", self.name, fmt_complex(z)), flags, move |r, p| {
            let w = mobius_c(z, Complex64::from_polar(r, p));
            let rho = w.norm();
            a(rho, 1.0 - rho, w.arg())
        })
    }
}

fn combine_oscillation_sum(a: Option<Oscillation>, b: Option<Oscillation>) -> Option<Oscillation> {
    match (a, b) {
        (None, None) => None,
        (Some(o), None) | (None, Some(o)) => Some(Oscillation {
            exponent: o.exponent,
            pure: false,
        }),
        (Some(x), Some(y)) => Some(Oscillation {
            exponent: x.exponent.max(y.exponent),
            pure: x.pure && y.pure && x.exponent == y.exponent,
        }),
    }
}

fn sum_split(a: &Symbol, b: &Symbol) -> Option<Arc<BoundarySplit>> {
    if a.flags.oscillation.is_none() && b.flags.oscillation.is_none() {
        return None;
    }
    let parts = |s: &Symbol| -> Option<(Option<Symbol>, Option<Symbol>)> {
        match (&s.flags.oscillation, &s.split) {
            (None, _) => Some((Some(s.clone()), None)),
            (Some(o), _) if o.pure => Some((None, Some(s.clone()))),
            (Some(_), Some(sp)) => Some((Some(sp.smooth.clone()), Some(sp.oscillatory.clone()))),
            _ => None,
        }
    };
    let (sa, oa) = parts(a)?;
    let (sb, ob) = parts(b)?;
    if (sa.is_none() && sb.is_none()) || (oa.is_none() && ob.is_none()) {
        return None;
    }
    let join = |x: Option<Symbol>, y: Option<Symbol>| match (x, y) {
        (Some(x), Some(y)) => Some(x.add(&y)),
        (x, None) => x,
        (None, y) => y,
    };
    let smooth = join(sa, sb);
    let osc = join(oa, ob);
    match (smooth, osc) {
        (Some(s), Some(o)) => Some(Arc::new(BoundarySplit {
            smooth: s,
            oscillatory: o,
        })),
        _ => None,
    }
}

fn merge_breaks(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = a.iter().chain(b).copied().collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn fmt_complex(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else {
        format!("({}{:+}i)", c.re, c.im)
    }
}

/// Constant symbol.
pub fn constant(c: Complex64) -> Symbol {
    let mut flags = SymbolFlags::smooth_bounded(c.norm());
    flags.radial = true;
    flags.fourier_width = Some(0);
    flags.real_valued = c.im == 0.0;
    flags.nonnegative = c.im == 0.0 && c.re >= 0.0;
    Symbol::new(format!("const({})", fmt_complex(c)), flags, move |_, _| c)
}

pub fn constant_real(c: f64) -> Symbol {
    constant(Complex64::new(c, 0.0))
}

/// `w^k`.
pub fn zk(k: u32) -> Symbol {
    let mut flags = SymbolFlags::smooth_bounded(1.0);
    flags.radial = k == 0;
    flags.fourier_width = Some(k as usize);
    flags.real_valued = k == 0;
    flags.nonnegative = k == 0;
    Symbol::new(format!("zk({k})"), flags, move |r, p| {
        Complex64::from_polar(r.powi(k as i32), k as f64 * p)
    })
}

/// `conj(w)^k`.
pub fn conj_zk(k: u32) -> Symbol {
    zk(k).conj().with_name(format!("conjzk({k})"))
}

/// `|w|^2`.
pub fn abs2() -> Symbol {
    let mut flags = SymbolFlags::smooth_bounded(1.0);
    flags.radial = true;
    flags.fourier_width = Some(0);
    flags.real_valued = true;
    flags.nonnegative = true;
    Symbol::new("abs2", flags, |r, _| Complex64::new(r * r, 0.0))
}

/// `Re w`.
pub fn re_w() -> Symbol {
    let mut flags = SymbolFlags::smooth_bounded(1.0);
    flags.fourier_width = Some(1);
    flags.real_valued = true;
    Symbol::new("re", flags, |r, p| Complex64::new(r * p.cos(), 0.0))
}

/// `w + conj(w) = 2 Re w`.
pub fn z_plus_conj() -> Symbol {
    let mut flags = SymbolFlags::smooth_bounded(2.0);
    flags.fourier_width = Some(1);
    flags.real_valued = true;
    Symbol::new("zpluszbar", flags, |r, p| Complex64::new(2.0 * r * p.cos(), 0.0))
}

/// Random bounded harmonic polynomial `sum_{k<=K} a_k w^k + b_k conj(w)^k`.
pub fn rand_harmonic(seed: u64) -> Symbol {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6861_726d);
    let k_max = 4usize;
    let mut coeffs = Vec::new();
    for k in 0..=k_max {
        let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / (1.0 + k as f64);
        let b = if k == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / (1.0 + k as f64)
        };
        coeffs.push((a, b));
    }
    let bound: f64 = coeffs.iter().map(|(a, b)| a.norm() + b.norm()).sum();
    let mut flags = SymbolFlags::smooth_bounded(bound);
    flags.fourier_width = Some(k_max);
    Symbol::new(format!("rand_harmonic({seed})"), flags, move |r, p| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, (a, b)) in coeffs.iter().enumerate() {
            let rk = r.powi(k as i32);
            let e = Complex64::from_polar(rk, k as f64 * p);
            acc += a * e + b * e.conj();
        }
        acc
    })
}

/// Random smooth symbol `sum_{|k|<=K} rho^|k| q_k(rho^2) e^{ik phi}` with
/// polynomial `q_k`, coefficients drawn from a seeded ChaCha generator.
pub fn rand_smooth(seed: u64) -> Symbol {
    const K: i32 = 4;
    const DEGREE: usize = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes: Vec<(i32, Vec<Complex64>)> = Vec::new();
    for k in -K..=K {
        let damp = 1.0 / (1.0 + k.abs() as f64);
        let q = (0..=DEGREE)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * damp)
            .collect();
        modes.push((k, q));
    }
    let bound: f64 = modes.iter().flat_map(|(_, q)| q.iter()).map(|c| c.norm()).sum();
    let mut flags = SymbolFlags::smooth_bounded(bound);
    flags.fourier_width = Some(K as usize);
    Symbol::new(format!("rand({seed})"), flags, move |r, p| {
        let r2 = r * r;
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, q) in &modes {
            let mut poly = Complex64::new(0.0, 0.0);
            for c in q.iter().rev() {
                poly = poly * r2 + c;
            }
            acc += poly * Complex64::from_polar(r.powi(k.abs()), *k as f64 * p);
        }
        acc
    })
}

/// `f(rho e^{i theta}) = sin((1-rho)^-b) / (rho (1-rho)^(b-beta))` for
/// `rho >= 1/2`, and `1` for `rho < 1/2`; requires `b >= beta > 0`.
pub fn example45(b: f64, beta: f64) -> Result<Symbol> {
    if !(beta > 0.0 && b >= beta && b.is_finite()) {
        return Err(Error::BadParameters(format!(
            "example45 needs b >= beta > 0, got b = {b}, beta = {beta}"
        )));
    }
    let gap = b - beta;
    let flags = SymbolFlags {
        radial: true,
        bound: if gap == 0.0 { Some(2.0) } else { None },
        oscillation: Some(Oscillation {
            exponent: b,
            pure: true,
        }),
        integrability: if gap < 1.0 {
            Integrability::L1
        } else {
            Integrability::L1Loc
        },
        fourier_width: Some(0),
        continuous: false,
        real_valued: true,
        nonnegative: false,
        radial_breaks: vec![0.5],
    };
    Ok(Symbol::with_gap(format!("example45(b={b},beta={beta})"), flags, move |r, t, _| {
        Complex64::new(example45_value(b, beta, r, t), 0.0)
    }))
}

#[inline]
fn example45_value(b: f64, beta: f64, r: f64, t: f64) -> f64 {
    if r < 0.5 {
        1.0
    } else if t <= 0.0 {
        0.0
    } else {
        t.powf(-b).sin() * t.powf(beta - b) / r
    }
}

/// Boundary distance `(m pi)^(-1/b)` of the `m`-th oscillation zero.
pub fn oscillation_zero_gap(exponent: f64, m: u64) -> f64 {
    (m as f64 * PI).powf(-1.0 / exponent)
}

/// Zeros `rho_m = 1 - (m pi)^(-1/b)` of the oscillation factor.
pub fn oscillation_zero(exponent: f64, m: u64) -> f64 {
    1.0 - oscillation_zero_gap(exponent, m)
}

/// `chi_{|w| <= rho_cut} f`.
pub fn truncate(f: &Symbol, rho_cut: f64) -> Result<Symbol> {
    if !(rho_cut > 0.0 && rho_cut < 1.0) {
        return Err(Error::BadParameters(format!("truncation radius {rho_cut}")));
    }
    let inner = f.clone();
    let mut flags = f.flags.clone();
    flags.integrability = Integrability::L1;
    flags.continuous = false;
    flags.radial_breaks = merge_breaks(&flags.radial_breaks, &[rho_cut]);
    // the boundary never sees the oscillation any more
    flags.oscillation = flags.oscillation.map(|o| Oscillation {
        exponent: o.exponent,
        pure: true,
    });
    let sym = Symbol::with_gap(format!("truncate({}, {rho_cut})", f.name), flags, move |r, t, p| {
        if r > rho_cut {
            Complex64::new(0.0, 0.0)
        } else {
            inner.eval_gap(r, t, p)
        }
    });
    Ok(sym)
}

/// Indicator of the annulus `a < |w| <= b` times `f` (used for strong-limit
/// residuals). `b = 1` keeps everything outside `a`, including the boundary
/// behaviour.
pub fn annulus_part(f: &Symbol, a: f64, b: f64) -> Result<Symbol> {
    if !(0.0 <= a && a < b && b <= 1.0) {
        return Err(Error::BadParameters(format!("annulus ({a}, {b}]")));
    }
    let inner = f.clone();
    let mut flags = f.flags.clone();
    if b < 1.0 {
        flags.integrability = Integrability::L1;
        flags.oscillation = flags.oscillation.map(|o| Oscillation {
            exponent: o.exponent,
            pure: true,
        });
    }
    flags.continuous = false;
    flags.radial_breaks = merge_breaks(&flags.radial_breaks, &[a, b]);
    flags.radial_breaks.retain(|&x| x < 1.0);
    let mut out = Symbol::with_gap(format!("annulus({}, {a}, {b})", f.name), flags, move |r, t, p| {
        if r > a && r <= b {
            inner.eval_gap(r, t, p)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    if b == 1.0 {
        if let Some(s) = &f.split {
            out.split = Some(Arc::new(BoundarySplit {
                smooth: annulus_part(&s.smooth, a, b)?,
                oscillatory: annulus_part(&s.oscillatory, a, b)?,
            }));
        }
    }
    Ok(out)
}

/// Named symbols used by the test suite and the CLI.
pub fn standard_library(seed: u64) -> Vec<(String, Symbol)> {
    let mut v = vec![
        ("one".to_string(), constant_real(1.0)),
        ("const(2)".to_string(), constant_real(2.0)),
        ("abs2".to_string(), abs2()),
        ("re".to_string(), re_w()),
        ("zpluszbar".to_string(), z_plus_conj()),
        (format!("rand_harmonic({seed})"), rand_harmonic(seed)),
        (format!("rand({seed})"), rand_smooth(seed)),
        (format!("rand({})", seed + 1), rand_smooth(seed + 1)),
    ];
    for k in 1..=3 {
        v.push((format!("zk({k})"), zk(k)));
        v.push((format!("conjzk({k})"), conj_zk(k)));
    }
    v.push((
        "example45(b=1,beta=1)".to_string(),
        example45(1.0, 1.0).expect("valid parameters"),
    ));
    v.push((
        "example45(b=1.5,beta=1)".to_string(),
        example45(1.5, 1.0).expect("valid parameters"),
    ));
    v
}

/// Matrix of scalar symbols.
#[derive(Debug, Clone)]
pub struct MatrixSymbol {
    entries: Vec<Vec<Symbol>>,
}

impl MatrixSymbol {
    pub fn new(entries: Vec<Vec<Symbol>>) -> Result<Self> {
        let n = entries.len();
        if n == 0 || entries.iter().any(|row| row.len() != n) {
            return Err(Error::Dimension("matrix symbol must be square and nonempty".into()));
        }
        Ok(Self { entries })
    }

    pub fn diagonal(diag: Vec<Symbol>) -> Result<Self> {
        let n = diag.len();
        let zero = constant_real(0.0);
        let entries = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { diag[i].clone() } else { zero.clone() })
                    .collect()
            })
            .collect();
        Self::new(entries)
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &Symbol {
        &self.entries[i][j]
    }
}

// ---------------------------------------------------------------------------
// expression grammar
// ---------------------------------------------------------------------------

/// Parse a symbol expression.
///
/// ```text
/// expr   := term (('+' | '-') term)*
/// term   := unary ('*' unary)*
/// unary  := '-' unary | atom
/// atom   := number | call | '(' expr ')'
/// call   := name '(' [arg (',' arg)*] ')'
/// arg    := ident '=' number | expr
/// ```
///
/// Names: `const(c)`, `zk(k)`, `conjzk(k)`, `abs2()`, `re()`,
/// `zpluszbar()`, `rand(seed)`, `rand_harmonic(seed)`,
/// `example45(b=..., beta=...)`, `truncate(expr, rho=...)`, `conj(expr)`.
pub fn parse_symbol(src: &str) -> Result<Symbol> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let sym = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(Error::Parse(format!("trailing input in {src:?}")));
    }
    Ok(sym.with_name(src.trim().to_string()))
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_digit()
                    || chars[i] == '.'
                    || chars[i] == 'e'
                    || chars[i] == 'E'
                    || ((chars[i] == '-' || chars[i] == '+')
                        && i > start
                        && (chars[i - 1] == 'e' || chars[i - 1] == 'E')))
            {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {text:?}")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*(),=".contains(c) {
            out.push(Tok::Sym(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character {c:?}")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

enum Arg {
    Named(String, f64),
    Expr(Symbol, Option<f64>),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(Error::Parse(format!("expected {c:?} at token {}", self.pos)))
        }
    }

    fn expr(&mut self) -> Result<Symbol> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                let rhs = self.term()?;
                acc = acc.add(&rhs);
            } else if self.eat('-') {
                let rhs = self.term()?;
                acc = acc.sub(&rhs);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Symbol> {
        let mut acc = self.unary()?;
        while self.eat('*') {
            let rhs = self.unary()?;
            acc = acc.mul(&rhs);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Symbol> {
        if self.eat('-') {
            let inner = self.unary()?;
            return Ok(inner.scale(Complex64::new(-1.0, 0.0)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Symbol> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(constant_real(v))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                self.expect('(')?;
                let mut args = Vec::new();
                if !self.eat(')') {
                    loop {
                        args.push(self.arg()?);
                        if self.eat(')') {
                            break;
                        }
                        self.expect(',')?;
                    }
                }
                build_call(&name, args)
            }
            None => Err(Error::Parse("unexpected end of expression".into())),
            Some(t) => Err(Error::Parse(format!("unexpected token {t:?}"))),
        }
    }

    fn arg(&mut self) -> Result<Arg> {
        if let (Some(Tok::Ident(name)), Some(Tok::Sym('='))) =
            (self.tokens.get(self.pos).cloned(), self.tokens.get(self.pos + 1).cloned())
        {
            self.pos += 2;
            let neg = self.eat('-');
            return match self.peek().cloned() {
                Some(Tok::Num(v)) => {
                    self.pos += 1;
                    Ok(Arg::Named(name, if neg { -v } else { v }))
                }
                other => Err(Error::Parse(format!("expected number after {name}=, got {other:?}"))),
            };
        }
        let start = self.pos;
        let e = self.expr()?;
        // plain numeric literal arguments are also usable as numbers
        let literal = match (&self.tokens[start..self.pos], self.tokens.get(start)) {
            ([Tok::Num(v)], _) => Some(*v),
            ([Tok::Sym('-'), Tok::Num(v)], _) => Some(-*v),
            _ => None,
        };
        Ok(Arg::Expr(e, literal))
    }
}

fn number_arg(args: &[Arg], idx: usize, name: &str) -> Option<f64> {
    for a in args {
        if let Arg::Named(n, v) = a {
            if n == name {
                return Some(*v);
            }
        }
    }
    args.iter()
        .filter_map(|a| match a {
            Arg::Expr(_, lit) => Some(*lit),
            _ => None,
        })
        .nth(idx)
        .flatten()
}

fn require(args: &[Arg], idx: usize, name: &str, call: &str) -> Result<f64> {
    number_arg(args, idx, name).ok_or_else(|| Error::Parse(format!("{call} needs argument {name}")))
}

fn nonneg_int(v: f64, what: &str) -> Result<u32> {
    if v < 0.0 || v.fract() != 0.0 || v > 64.0 {
        return Err(Error::Parse(format!("{what} must be a small nonnegative integer")));
    }
    Ok(v as u32)
}

fn seed_arg(args: &[Arg], call: &str) -> Result<u64> {
    let s = require(args, 0, "seed", call)?;
    if s < 0.0 || s.fract() != 0.0 || s > u64::MAX as f64 {
        return Err(Error::Parse("seed must be a nonnegative integer".into()));
    }
    Ok(s as u64)
}

fn build_call(name: &str, args: Vec<Arg>) -> Result<Symbol> {
    match name {
        "const" | "c" => {
            let re = require(&args, 0, "re", name).or_else(|_| require(&args, 0, "c", name))?;
            let im = number_arg(&args, 1, "im").unwrap_or(0.0);
            Ok(constant(Complex64::new(re, im)))
        }
        "zk" | "z" => {
            let k = if name == "z" && args.is_empty() {
                1
            } else {
                nonneg_int(require(&args, 0, "k", name)?, "k")?
            };
            Ok(zk(k))
        }
        "conjzk" | "zbar" => {
            let k = if name == "zbar" && args.is_empty() {
                1
            } else {
                nonneg_int(require(&args, 0, "k", name)?, "k")?
            };
            Ok(conj_zk(k))
        }
        "abs2" => Ok(abs2()),
        "re" => Ok(re_w()),
        "zpluszbar" => Ok(z_plus_conj()),
        "rand" | "rand_smooth" => Ok(rand_smooth(seed_arg(&args, name)?)),
        "rand_harmonic" => Ok(rand_harmonic(seed_arg(&args, name)?)),
        "example45" => {
            let b = require(&args, 0, "b", name)?;
            let beta = require(&args, 1, "beta", name)?;
            example45(b, beta).map_err(|e| Error::Parse(e.to_string()))
        }
        "truncate" => {
            let inner = match args.first() {
                Some(Arg::Expr(e, _)) => e.clone(),
                _ => return Err(Error::Parse("truncate needs a symbol argument".into())),
            };
            let rho = match args.get(1) {
                Some(Arg::Named(n, v)) if n == "rho" => *v,
                Some(Arg::Expr(_, Some(v))) => *v,
                _ => return Err(Error::Parse("truncate needs rho=...".into())),
            };
            truncate(&inner, rho).map_err(|e| Error::Parse(e.to_string()))
        }
        "conj" => match args.first() {
            Some(Arg::Expr(e, _)) => Ok(e.conj()),
            _ => Err(Error::Parse("conj needs a symbol argument".into())),
        },
        other => Err(Error::Parse(format!("unknown symbol {other:?}"))),
    }
}
