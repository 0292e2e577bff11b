//! Dense complex eigenvalues: balancing, Householder reduction to upper
//! Hessenberg form and single-shift QR with Wilkinson shifts and deflation.
//! Eigenvectors, when asked for, come from inverse iteration on the original
//! matrix.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{self, ComplexMatrix};

/// Largest matrix accepted by the solver.
pub const MAX_DIM: usize = 512;

/// QR sweeps allowed per eigenvalue before giving up.
const MAX_SWEEPS: usize = 60;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub value: Complex64,
    /// Unit vector.
    pub vector: Vec<Complex64>,
    /// `||T v - lambda v|| / ||T||_F`.
    pub residual: f64,
}

/// Dense row-major work array.
struct Work {
    n: usize,
    a: Vec<Complex64>,
}

impl Work {
    #[inline]
    fn at(&self, i: usize, j: usize) -> Complex64 {
        self.a[i * self.n + j]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut Complex64 {
        &mut self.a[i * self.n + j]
    }
}

fn l1(c: Complex64) -> f64 {
    c.re.abs() + c.im.abs()
}

/// Diagonal similarity by powers of two so rows and columns have comparable norms.
fn balance(w: &mut Work) {
    let n = w.n;
    let radix = 2.0f64;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let (mut c, mut r) = (0.0, 0.0);
            for j in 0..n {
                if j != i {
                    c += l1(w.at(j, i));
                    r += l1(w.at(i, j));
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let (mut cc, mut rr) = (c, r);
            while cc < rr / radix {
                f *= radix;
                cc *= radix * radix;
            }
            while cc >= rr * radix {
                f /= radix;
                rr *= radix * radix;
            }
            if (cc + rr) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    *w.at_mut(i, j) /= f;
                    *w.at_mut(j, i) *= f;
                }
            }
        }
    }
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg(w: &mut Work) {
    let n = w.n;
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex64> = (k + 1..n).map(|i| w.at(i, k)).collect();
        let norm = matrix::norm(&x);
        if norm == 0.0 {
            continue;
        }
        let phase = if x[0] == ZERO { Complex64::new(1.0, 0.0) } else { x[0] / x[0].norm() };
        let alpha = -phase * norm;
        let mut v = x;
        v[0] -= alpha;
        let vn = matrix::norm(&v);
        if vn == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|c| *c /= vn);
        // rows: A <- (I - 2 v v^H) A
        for j in 0..n {
            let s: Complex64 = (0..v.len()).map(|i| v[i].conj() * w.at(k + 1 + i, j)).sum();
            for i in 0..v.len() {
                *w.at_mut(k + 1 + i, j) -= v[i] * s * 2.0;
            }
        }
        // columns: A <- A (I - 2 v v^H)
        for i in 0..n {
            let s: Complex64 = (0..v.len()).map(|j| w.at(i, k + 1 + j) * v[j]).sum();
            for j in 0..v.len() {
                *w.at_mut(i, k + 1 + j) -= s * v[j].conj() * 2.0;
            }
        }
        for i in k + 2..n {
            *w.at_mut(i, k) = ZERO;
        }
    }
}

/// `(c, s)` with `[c s; -conj(s) c] [a; b] = [r; 0]`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let (na, nb) = (a.norm(), b.norm());
    if nb == 0.0 {
        return (1.0, ZERO);
    }
    if na == 0.0 {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    let r = na.hypot(nb);
    (na / r, (a / na) * b.conj() / r)
}

/// Eigenvalue of the trailing 2x2 block closer to its last diagonal entry.
fn wilkinson(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m1 = (a + d) * 0.5 + disc;
    let m2 = (a + d) * 0.5 - disc;
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// All eigenvalues of `t`, in the order of the diagonal of the final Schur form.
pub fn eigenvalues(t: &ComplexMatrix) -> Result<Vec<Complex64>> {
    let n = t.dim();
    if n > MAX_DIM {
        return Err(Error::Dimension(format!("{n} exceeds the solver limit {MAX_DIM}")));
    }
    let mut w = Work {
        n,
        a: t.as_slice().to_vec(),
    };
    balance(&mut w);
    hessenberg(&mut w);
    let eps = f64::EPSILON;
    let scale = w.a.iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut eig = vec![ZERO; n];
    let mut found = 0usize;
    let mut hi = n as isize - 1;
    let mut sweeps = 0usize;
    while hi >= 0 {
        let h = hi as usize;
        // locate the top of the unreduced block ending at h
        let mut l = h;
        while l > 0 {
            let s = w.at(l - 1, l - 1).norm() + w.at(l, l).norm();
            let s = if s == 0.0 { scale } else { s };
            if w.at(l, l - 1).norm() <= eps * s {
                *w.at_mut(l, l - 1) = ZERO;
                break;
            }
            l -= 1;
        }
        if l == h {
            eig[h] = w.at(h, h);
            found += 1;
            hi -= 1;
            sweeps = 0;
            continue;
        }
        sweeps += 1;
        if sweeps > MAX_SWEEPS {
            return Err(Error::NoConvergence { converged: found, n });
        }
        let mu = if sweeps % 11 == 0 {
            // exceptional shift breaks cycles
            w.at(h, h) + Complex64::new(w.at(h, h - 1).norm() * 0.75, 0.0)
        } else {
            wilkinson(w.at(h - 1, h - 1), w.at(h - 1, h), w.at(h, h - 1), w.at(h, h))
        };
        qr_sweep(&mut w, l, h, mu);
    }
    Ok(eig)
}

/// One explicit shifted QR step on the active block `l..=h`.
fn qr_sweep(w: &mut Work, l: usize, h: usize, mu: Complex64) {
    for k in l..=h {
        *w.at_mut(k, k) -= mu;
    }
    let mut rot = Vec::with_capacity(h - l);
    for k in l..h {
        let (c, s) = givens(w.at(k, k), w.at(k + 1, k));
        for j in k..=h {
            let (x, y) = (w.at(k, j), w.at(k + 1, j));
            *w.at_mut(k, j) = x * c + s * y;
            *w.at_mut(k + 1, j) = -s.conj() * x + y * c;
        }
        rot.push((c, s));
    }
    for (idx, &(c, s)) in rot.iter().enumerate() {
        let k = l + idx;
        for i in l..=(k + 1).min(h) {
            let (x, y) = (w.at(i, k), w.at(i, k + 1));
            *w.at_mut(i, k) = x * c + y * s.conj();
            *w.at_mut(i, k + 1) = -x * s + y * c;
        }
    }
    for k in l..=h {
        *w.at_mut(k, k) += mu;
    }
}

/// LU with partial pivoting; solves `a x = b` in place.
fn lu_solve(mut a: Vec<Complex64>, n: usize, b: &mut [Complex64]) {
    let tiny = f64::EPSILON * a.iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i * n + k].norm().total_cmp(&a[j * n + k].norm())).unwrap_or(k);
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            b.swap(k, p);
        }
        if a[k * n + k].norm() < tiny {
            a[k * n + k] = Complex64::new(tiny, 0.0);
        }
        let piv = a[k * n + k];
        for i in k + 1..n {
            let f = a[i * n + k] / piv;
            if f == ZERO {
                continue;
            }
            for j in k..n {
                let v = a[k * n + j];
                a[i * n + j] -= f * v;
            }
            b[i] = b[i] - f * b[k];
        }
    }
    for k in (0..n).rev() {
        let s: Complex64 = (k + 1..n).map(|j| a[k * n + j] * b[j]).sum();
        b[k] = (b[k] - s) / a[k * n + k];
    }
}

/// Eigenvalues with eigenvectors from a few steps of inverse iteration.
pub fn eigenpairs(t: &ComplexMatrix) -> Result<Vec<Eigenpair>> {
    let n = t.dim();
    let values = eigenvalues(t)?;
    let norm = t.frobenius_norm().max(f64::MIN_POSITIVE);
    Ok(values
        .into_iter()
        .enumerate()
        .map(|(idx, lambda)| {
            // a relative nudge keeps the shifted matrix invertible
            let shift = lambda + Complex64::new(norm * 1e-10, norm * 1e-10);
            let mut v: Vec<Complex64> = (0..n)
                .map(|i| Complex64::new(1.0 + ((i * 7 + idx * 3) % 11) as f64 * 0.1, 0.0))
                .collect();
            let mut best = (f64::INFINITY, v.clone());
            for _ in 0..3 {
                let a = t.add_identity(-shift).as_slice().to_vec();
                lu_solve(a, n, &mut v);
                let vn = matrix::norm(&v);
                if !(vn.is_finite() && vn > 0.0) {
                    break;
                }
                v.iter_mut().for_each(|c| *c /= vn);
                let tv = t.mul_vec(&v).expect("square");
                let r: Vec<Complex64> = tv.iter().zip(&v).map(|(a, b)| a - lambda * b).collect();
                let res = matrix::norm(&r) / norm;
                if res < best.0 {
                    best = (res, v.clone());
                }
            }
            Eigenpair {
                value: lambda,
                vector: best.1,
                residual: best.0,
            }
        })
        .collect())
}
