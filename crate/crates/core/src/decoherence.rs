//! Decoherence factor `F_kl(t) = <j,m| V_k(t)' V_l(t) |j,m>`.
//!
//! Three routes are provided: the explicit matrix element, the closed form
//! `exp[-m (b_l b_k* - b_k b_l*)] d^j_mm(2 |b_l - b_k|)`, and the
//! `cos^{2j}` law of the collinear special case. The closed form is exact
//! when the two displacement parameters are collinear; otherwise its error
//! is third order in `|beta|` and is measured rather than assumed.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::invariant::DisplacementParams;
use crate::linalg::{CMatrix, CVector};
use crate::phase::{BranchEvolution, PhaseTrace};
use crate::su2::{build_rep, su2_displacement, wigner_d_diag};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Direct,
    ClosedForm,
    SpecialCase,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::ClosedForm => "closed_form",
            Method::SpecialCase => "special_case",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceTrace {
    pub grid: TimeGrid,
    pub values: Vec<Complex64>,
    pub two_j: u32,
    pub two_m: i64,
    pub branch_k: usize,
    pub branch_l: usize,
    pub method: Method,
}

impl DecoherenceTrace {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    /// `max_i |F_a(t_i) - F_b(t_i)|`.
    pub fn max_difference(&self, other: &DecoherenceTrace) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(Error::LengthMismatch { expected: self.values.len(), found: other.values.len() });
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }
}

fn basis_index(two_j: u32, two_m: i64) -> Result<usize> {
    let tj = two_j as i64;
    if two_m.abs() > tj || (tj - two_m) % 2 != 0 {
        return Err(Error::InvalidSpin { two_j: tj, two_m });
    }
    Ok(((tj - two_m) / 2) as usize)
}

/// Explicit `<j,m| V_k' V_l |j,m>` at every node.
#[allow(clippy::too_many_arguments)]
pub fn decoherence_direct(
    vk: &[CMatrix],
    vl: &[CMatrix],
    grid: &TimeGrid,
    two_j: u32,
    two_m: i64,
    branch_k: usize,
    branch_l: usize,
) -> Result<DecoherenceTrace> {
    let r = basis_index(two_j, two_m)?;
    grid.check_len(vk.len())?;
    grid.check_len(vl.len())?;
    let dim = two_j as usize + 1;
    let mut ket = CVector::zeros(dim);
    ket[r] = Complex64::new(1.0, 0.0);
    let values = vk
        .iter()
        .zip(vl)
        .map(|(a, b)| {
            if a.shape() != (dim, dim) || b.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch { expected: dim, found: a.nrows().max(b.nrows()) });
            }
            Ok((a * &ket).dotc(&(b * &ket)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecoherenceTrace { grid: *grid, values, two_j, two_m, branch_k, branch_l, method: Method::Direct })
}

/// Closed form at one instant.
pub fn decoherence_closed(beta_k: Complex64, beta_l: Complex64, two_j: u32, two_m: i64) -> Result<Complex64> {
    let m = two_m as f64 / 2.0;
    // b_l b_k* - b_k b_l* is purely imaginary.
    let exponent = -m * (beta_l * beta_k.conj() - beta_k * beta_l.conj());
    let prefactor = Complex64::from_polar(1.0, exponent.im);
    let d = wigner_d_diag(two_j as i64, two_m, 2.0 * (beta_l - beta_k).norm())?;
    Ok(prefactor * d)
}

#[allow(clippy::too_many_arguments)]
pub fn decoherence_closed_trace(
    dk: &DisplacementParams,
    dl: &DisplacementParams,
    grid: &TimeGrid,
    two_j: u32,
    two_m: i64,
    branch_k: usize,
    branch_l: usize,
) -> Result<DecoherenceTrace> {
    grid.check_len(dk.beta.len())?;
    grid.check_len(dl.beta.len())?;
    let values = dk
        .beta
        .iter()
        .zip(&dl.beta)
        .map(|(&bk, &bl)| decoherence_closed(bk, bl, two_j, two_m))
        .collect::<Result<Vec<_>>>()?;
    Ok(DecoherenceTrace { grid: *grid, values, two_j, two_m, branch_k, branch_l, method: Method::ClosedForm })
}

/// `cos(alpha)^{2j}` with `alpha = int_0^t (c_k - c_l)/2 dt'`.
pub fn special_case_factor(two_j: u32, alpha: f64) -> f64 {
    alpha.cos().powi(two_j as i32)
}

pub fn special_case_trace(
    alpha: &[f64],
    grid: &TimeGrid,
    two_j: u32,
    branch_k: usize,
    branch_l: usize,
) -> Result<DecoherenceTrace> {
    grid.check_len(alpha.len())?;
    let values = alpha.iter().map(|&a| Complex64::new(special_case_factor(two_j, a), 0.0)).collect();
    Ok(DecoherenceTrace {
        grid: *grid,
        values,
        two_j,
        two_m: two_j as i64,
        branch_k,
        branch_l,
        method: Method::SpecialCase,
    })
}

/// `|cos alpha|^{2j}` for each `2j`, evaluated as `exp(2j ln|cos alpha|)`.
pub fn classical_limit_scan(alpha: f64, two_js: &[u32]) -> Vec<f64> {
    let c = alpha.cos().abs();
    two_js
        .iter()
        .map(|&tj| {
            if tj == 0 {
                1.0
            } else if c == 0.0 {
                0.0
            } else {
                (tj as f64 * c.ln()).exp()
            }
        })
        .collect()
}

/// Largest `2j` for which the scan falls back to explicit matrices.
pub const DIRECT_SCAN_MAX_TWO_J: u32 = 200;

/// `|<j,j| V(0)' V(-alpha) |j,j>|` from explicit matrices.
pub fn collapse_direct(alpha: f64, two_j: u32) -> Result<f64> {
    if two_j > DIRECT_SCAN_MAX_TWO_J {
        return Err(Error::OutOfRange(format!("two_j = {two_j} above {DIRECT_SCAN_MAX_TWO_J}")));
    }
    let rep = build_rep(two_j as i64)?;
    let vk = rep.identity();
    let vl = su2_displacement(&rep, Complex64::new(-alpha, 0.0));
    let ket = rep.basis_ket(two_j as i64)?;
    Ok((vk * &ket).dotc(&(vl * &ket)).norm())
}

/// True if the sequence strictly decreases.
pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

/// `exp(i [phi_l - phi_k]) F_kl`, the full overlap of the detector states
/// attached to levels `k` and `l`.
pub fn branch_overlap(
    f: &DecoherenceTrace,
    phase_k: &PhaseTrace,
    phase_l: &PhaseTrace,
) -> Result<Vec<Complex64>> {
    if phase_k.two_m != f.two_m || phase_l.two_m != f.two_m {
        return Err(Error::InvalidSpin { two_j: f.two_j as i64, two_m: phase_k.two_m });
    }
    if phase_k.grid != f.grid || phase_l.grid != f.grid {
        return Err(Error::InvalidGrid("phase traces and decoherence trace differ".into()));
    }
    Ok(f.values
        .iter()
        .enumerate()
        .map(|(i, v)| v * Complex64::from_polar(1.0, phase_l.total(i) - phase_k.total(i)))
        .collect())
}

/// Overlap series for every ordered pair of branches. `out[k][l][i]` is
/// `<D_k(t_i)|D_l(t_i)>` for detector states starting in `|j,m>` frames.
pub fn pairwise_overlaps(branches: &[BranchEvolution], two_m: i64) -> Result<Vec<Vec<Vec<Complex64>>>> {
    let Some(first) = branches.first() else {
        return Ok(Vec::new());
    };
    let grid = *first.grid();
    let two_j = first.label.two_j();
    let mut out = vec![vec![Vec::new(); branches.len()]; branches.len()];
    for (k, bk) in branches.iter().enumerate() {
        for (l, bl) in branches.iter().enumerate() {
            let f = decoherence_direct(&bk.v, &bl.v, &grid, two_j, two_m, k, l)?;
            let pk = bk.phase_for(two_m).ok_or(Error::InvalidSpin { two_j: two_j as i64, two_m })?;
            let pl = bl.phase_for(two_m).ok_or(Error::InvalidSpin { two_j: two_j as i64, two_m })?;
            out[k][l] = branch_overlap(&f, pk, pl)?;
        }
    }
    Ok(out)
}

/// Reduced density matrix of the measured system,
/// `rho_kl(t) = c_k c_l* <D_l(t)|D_k(t)>`, one matrix per node.
pub fn reduced_coherence(amplitudes: &[Complex64], overlaps: &[Vec<Vec<Complex64>>]) -> Result<Vec<CMatrix>> {
    let n = amplitudes.len();
    let total: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm: total.sqrt() });
    }
    if overlaps.len() != n || overlaps.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: overlaps.len() });
    }
    let steps = overlaps.first().and_then(|r| r.first()).map_or(0, Vec::len);
    for row in overlaps {
        for series in row {
            if series.len() != steps {
                return Err(Error::LengthMismatch { expected: steps, found: series.len() });
            }
        }
    }
    Ok((0..steps)
        .map(|i| CMatrix::from_fn(n, n, |k, l| amplitudes[k] * amplitudes[l].conj() * overlaps[l][k][i]))
        .collect())
}
