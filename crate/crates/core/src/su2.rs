//! Spin-j representation of su(2), displacement exponentials and diagonal
//! Wigner d-matrix elements.
//!
//! Basis ordering is fixed to `m = j, j-1, ..., -j`: row/column 0 is `|j,j>`.
//! Spins travel as the integers `two_j = 2j` and `two_m = 2m`.

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, I};

/// Dense `J_+`, `J_-`, `J_3`, `J_2` for one spin.
#[derive(Debug, Clone)]
pub struct SU2Rep {
    two_j: u32,
    pub j_plus: CMatrix,
    pub j_minus: CMatrix,
    pub j3: CMatrix,
    pub j2: CMatrix,
    spectrum: OnceLock<Arc<LadderSpectrum>>,
}

impl SU2Rep {
    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.two_j as usize + 1
    }

    /// Row index of `|j,m>`.
    pub fn index_of(&self, two_m: i64) -> Result<usize> {
        check_projection(self.two_j as i64, two_m)?;
        Ok(((self.two_j as i64 - two_m) / 2) as usize)
    }

    /// `2m` carried by basis row `index`.
    pub fn two_m_at(&self, index: usize) -> i64 {
        self.two_j as i64 - 2 * index as i64
    }

    pub fn basis_ket(&self, two_m: i64) -> Result<CVector> {
        let idx = self.index_of(two_m)?;
        let mut v = CVector::zeros(self.dim());
        v[idx] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn identity(&self) -> CMatrix {
        CMatrix::identity(self.dim(), self.dim())
    }

    fn spectrum(&self) -> &LadderSpectrum {
        self.spectrum.get_or_init(|| Arc::new(LadderSpectrum::compute(self.two_j)))
    }
}

fn check_projection(two_j: i64, two_m: i64) -> Result<()> {
    if two_j < 0 || two_m.abs() > two_j || (two_j - two_m) % 2 != 0 {
        return Err(Error::InvalidSpin { two_j, two_m });
    }
    Ok(())
}

/// `<j,m+1|J_+|j,m>` for the pair of rows `(r, r+1)`, i.e. `sqrt((r+1)(2j-r))`.
fn ladder_entry_squared(two_j: u32, r: usize) -> u64 {
    (r as u64 + 1) * (two_j as u64 - r as u64)
}

pub fn build_rep(two_j: i64) -> Result<SU2Rep> {
    if two_j < 0 || two_j > u32::MAX as i64 {
        return Err(Error::InvalidSpin { two_j, two_m: 0 });
    }
    let two_j = two_j as u32;
    let dim = two_j as usize + 1;
    let zero = Complex64::new(0.0, 0.0);

    let mut j_plus = CMatrix::from_element(dim, dim, zero);
    for r in 0..dim - 1 {
        j_plus[(r, r + 1)] = Complex64::new((ladder_entry_squared(two_j, r) as f64).sqrt(), 0.0);
    }
    let j_minus = j_plus.adjoint();
    let j3 = CMatrix::from_fn(dim, dim, |r, c| {
        if r == c {
            Complex64::new((two_j as f64 - 2.0 * r as f64) / 2.0, 0.0)
        } else {
            zero
        }
    });
    let j2 = (&j_plus - &j_minus) / (2.0 * I);

    Ok(SU2Rep { two_j, j_plus, j_minus, j3, j2, spectrum: OnceLock::new() })
}

/// `exp(zeta J_+ - conj(zeta) J_-)`.
///
/// The Hermitian generator `i(zeta J_+ - conj(zeta) J_-)` is tridiagonal and
/// unitarily gauge-equivalent (diagonal phases) to `|zeta| (J_+ + J_-)` in real
/// form. Its eigenbasis is found once per spin, polished to double-double
/// precision, and the exponential is assembled in double-double before the
/// final rounding. Entries therefore keep full relative precision even where
/// they are exponentially small.
pub fn su2_displacement(rep: &SU2Rep, zeta: Complex64) -> CMatrix {
    let dim = rep.dim();
    if zeta == Complex64::new(0.0, 0.0) || dim == 1 {
        return rep.identity();
    }
    let radius = zeta.norm();
    let gauge = zeta.arg() + std::f64::consts::FRAC_PI_2;
    let spec = rep.spectrum();

    // The spectrum of J_+ + J_- is {2m}, so every phase is a power of one.
    let (sin1, cos1) = dd_sin_cos(radius);
    let mut powers = vec![(TwoFloat::from(0.0), TwoFloat::from(1.0))];
    for p in 1..dim {
        let (s, c) = powers[p - 1];
        powers.push((s * cos1 + c * sin1, c * cos1 - s * sin1));
    }
    let rotations: Vec<(TwoFloat, TwoFloat)> = spec
        .levels
        .iter()
        .map(|&two_m| {
            let (s, c) = powers[two_m.unsigned_abs() as usize];
            if two_m < 0 {
                (-s, c)
            } else {
                (s, c)
            }
        })
        .collect();

    let mut out = rep.identity();
    for r in 0..dim {
        for c in r..dim {
            let mut re = TwoFloat::from(0.0);
            let mut im = TwoFloat::from(0.0);
            for (k, (sin, cos)) in rotations.iter().enumerate() {
                let w = spec.vector(r, k) * spec.vector(c, k);
                re += w * *cos;
                im -= w * *sin;
            }
            let w = Complex64::new(f64::from(re), f64::from(im));
            let shift = (r as f64 - c as f64) * gauge;
            out[(r, c)] = w * Complex64::from_polar(1.0, -shift);
            if r != c {
                out[(c, r)] = w * Complex64::from_polar(1.0, shift);
            }
        }
    }
    out
}

/// Eigendecomposition of the real tridiagonal `J_+ + J_-` in double-double.
#[derive(Debug)]
struct LadderSpectrum {
    dim: usize,
    /// Eigenvalues rounded to the exact integers `2m`.
    levels: Vec<i64>,
    /// Row-major, eigenvectors in columns.
    vectors: Vec<TwoFloat>,
}

impl LadderSpectrum {
    const MAX_REFINEMENTS: usize = 6;

    fn vector(&self, row: usize, k: usize) -> TwoFloat {
        self.vectors[row * self.dim + k]
    }

    fn compute(two_j: u32) -> Self {
        let dim = two_j as usize + 1;
        let offdiag: Vec<TwoFloat> = (0..dim.saturating_sub(1))
            .map(|r| TwoFloat::from(ladder_entry_squared(two_j, r) as f64).sqrt())
            .collect();

        let seed = DMatrix::<f64>::from_fn(dim, dim, |r, c| {
            if c == r + 1 {
                f64::from(offdiag[r])
            } else if r == c + 1 {
                f64::from(offdiag[c])
            } else {
                0.0
            }
        });
        let eig = seed.symmetric_eigen();
        let mut vectors: Vec<TwoFloat> =
            (0..dim * dim).map(|i| TwoFloat::from(eig.eigenvectors[(i / dim, i % dim)])).collect();
        let mut eigenvalues: Vec<TwoFloat> = eig.eigenvalues.iter().map(|&e| TwoFloat::from(e)).collect();

        for _ in 0..Self::MAX_REFINEMENTS {
            let step = refine_eigenpairs(dim, &offdiag, &mut vectors, &mut eigenvalues);
            if step < 1e-31 {
                break;
            }
        }
        let levels = eigenvalues
            .iter()
            .map(|&e| {
                let n = f64::from(e).round();
                debug_assert!(f64::from(e - TwoFloat::from(n)).abs() < 1e-20);
                n as i64
            })
            .collect();
        LadderSpectrum { dim, levels, vectors }
    }
}

/// One Ogita-Aishima refinement step for a symmetric tridiagonal matrix with
/// zero diagonal and simple spectrum. Returns the largest correction applied.
fn refine_eigenpairs(
    dim: usize,
    offdiag: &[TwoFloat],
    vectors: &mut [TwoFloat],
    eigenvalues: &mut [TwoFloat],
) -> f64 {
    let zero = TwoFloat::from(0.0);
    let at = |v: &[TwoFloat], r: usize, c: usize| v[r * dim + c];

    // A X
    let mut ax = vec![zero; dim * dim];
    for r in 0..dim {
        for k in 0..dim {
            let mut acc = zero;
            if r > 0 {
                acc += offdiag[r - 1] * at(vectors, r - 1, k);
            }
            if r + 1 < dim {
                acc += offdiag[r] * at(vectors, r + 1, k);
            }
            ax[r * dim + k] = acc;
        }
    }

    // R = 1 - X^T X,  S = X^T A X
    let mut gram = vec![zero; dim * dim];
    let mut proj = vec![zero; dim * dim];
    for a in 0..dim {
        for b in 0..dim {
            let mut g = zero;
            let mut p = zero;
            for r in 0..dim {
                let xa = at(vectors, r, a);
                g += xa * at(vectors, r, b);
                p += xa * ax[r * dim + b];
            }
            gram[a * dim + b] = if a == b { TwoFloat::from(1.0) - g } else { -g };
            proj[a * dim + b] = p;
        }
    }

    for i in 0..dim {
        eigenvalues[i] = proj[i * dim + i] / (TwoFloat::from(1.0) - gram[i * dim + i]);
    }

    let mut corr = vec![zero; dim * dim];
    let mut largest: f64 = 0.0;
    for i in 0..dim {
        for k in 0..dim {
            let e = if i == k {
                gram[i * dim + i] / 2.0
            } else {
                (proj[i * dim + k] + eigenvalues[k] * gram[i * dim + k]) / (eigenvalues[k] - eigenvalues[i])
            };
            largest = largest.max(f64::from(e).abs());
            corr[i * dim + k] = e;
        }
    }

    // X <- X + X E
    let old = vectors.to_vec();
    for r in 0..dim {
        for k in 0..dim {
            let mut acc = zero;
            for i in 0..dim {
                acc += old[r * dim + i] * corr[i * dim + k];
            }
            vectors[r * dim + k] = old[r * dim + k] + acc;
        }
    }
    largest
}

/// `(sin x, cos x)` to double-double accuracy.
fn dd_sin_cos(x: f64) -> (TwoFloat, TwoFloat) {
    // pi/2 split over three doubles.
    const PIO2: [f64; 3] = [std::f64::consts::FRAC_PI_2, 6.123233995736766e-17, -1.4973849048591698e-33];
    let k = (x / PIO2[0]).round();
    let r = TwoFloat::from(x)
        - TwoFloat::from(k) * TwoFloat::from(PIO2[0])
        - TwoFloat::from(k) * TwoFloat::from(PIO2[1])
        - TwoFloat::from(k) * TwoFloat::from(PIO2[2]);
    let r2 = r * r;
    let mut term_s = r;
    let mut term_c = TwoFloat::from(1.0);
    let mut sin = r;
    let mut cos = TwoFloat::from(1.0);
    let mut n = 1.0;
    while f64::from(term_s).abs() > 1e-40 || f64::from(term_c).abs() > 1e-40 {
        term_c = -term_c * r2 / (n * (n + 1.0));
        term_s = -term_s * r2 / ((n + 1.0) * (n + 2.0));
        cos += term_c;
        sin += term_s;
        n += 2.0;
    }
    match (k as i64).rem_euclid(4) {
        0 => (sin, cos),
        1 => (cos, -sin),
        2 => (-sin, -cos),
        _ => (-cos, sin),
    }
}

fn ln_binomial(n: i64, k: i64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

fn binomial(n: i64, k: i64) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Above this `2j` the binomials go through log-gamma.
const LOG_BINOMIAL_THRESHOLD: i64 = 30;

/// `d^j_{mm}(theta)`.
pub fn wigner_d_diag(two_j: i64, two_m: i64, theta: f64) -> Result<f64> {
    check_projection(two_j, two_m)?;
    if !theta.is_finite() {
        return Err(Error::OutOfRange(format!("theta = {theta}")));
    }
    if theta == 0.0 {
        return Ok(1.0);
    }
    let j_plus_m = (two_j + two_m) / 2;
    let j_minus_m = (two_j - two_m) / 2;
    let (s, c) = (theta / 2.0).sin_cos();

    let mut sum = 0.0;
    for k in 0..=j_plus_m.min(j_minus_m) {
        let cos_pow = two_j - 2 * k;
        let sin_pow = 2 * k;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let term = if two_j > LOG_BINOMIAL_THRESHOLD {
            if (cos_pow > 0 && c == 0.0) || (sin_pow > 0 && s == 0.0) {
                0.0
            } else {
                let mut ln = ln_binomial(j_plus_m, k) + ln_binomial(j_minus_m, k);
                let mut sgn = sign;
                if cos_pow > 0 {
                    ln += cos_pow as f64 * c.abs().ln();
                    if c < 0.0 && cos_pow % 2 == 1 {
                        sgn = -sgn;
                    }
                }
                if sin_pow > 0 {
                    ln += sin_pow as f64 * s.abs().ln();
                }
                sgn * ln.exp()
            }
        } else {
            sign * binomial(j_plus_m, k)
                * binomial(j_minus_m, k)
                * c.powi(cos_pow as i32)
                * s.powi(sin_pow as i32)
        };
        sum += term;
    }
    Ok(sum)
}
