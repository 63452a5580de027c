//! Direct propagation of `i d/dt psi = H(t) psi` by the exponential midpoint
//! rule, `psi_{i+1} = exp(-i h H(t_i + h/2)) psi_i`. Each step is unitary and
//! the scheme is second order. It shares nothing with the invariant route
//! apart from the Hamiltonian itself.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::linalg::{expm_hermitian, hermiticity_defect, CMatrix, CVector};
use crate::model::Branch;
use crate::su2::SU2Rep;

pub const HERMITIAN_TOL: f64 = 1e-10;

fn step_unitary<H>(hamiltonian: &H, t: f64, h: f64) -> Result<CMatrix>
where
    H: Fn(f64) -> Result<CMatrix>,
{
    let sample = hamiltonian(t + 0.5 * h)?;
    let deviation = hermiticity_defect(&sample);
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(expm_hermitian(&sample, h))
}

pub fn direct_propagate<H>(hamiltonian: H, psi0: &CVector, grid: &TimeGrid) -> Result<Vec<CVector>>
where
    H: Fn(f64) -> Result<CMatrix>,
{
    let norm = psi0.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm });
    }
    let h = grid.h();
    let mut states = Vec::with_capacity(grid.len());
    states.push(psi0.clone());
    for i in 0..grid.steps() {
        let u = step_unitary(&hamiltonian, grid.node(i), h)?;
        if u.ncols() != psi0.len() {
            return Err(Error::DimensionMismatch { expected: psi0.len(), found: u.ncols() });
        }
        let next = u * &states[i];
        states.push(next);
    }
    Ok(states)
}

/// Accumulated step product `U(t_i)`, `U(t0) = 1`.
pub fn unitary_propagator<H>(hamiltonian: H, grid: &TimeGrid) -> Result<Vec<CMatrix>>
where
    H: Fn(f64) -> Result<CMatrix>,
{
    let h = grid.h();
    let dim = hamiltonian(grid.t0())?.nrows();
    let mut out = Vec::with_capacity(grid.len());
    out.push(CMatrix::identity(dim, dim));
    for i in 0..grid.steps() {
        let u = step_unitary(&hamiltonian, grid.node(i), h)?;
        let next = u * &out[i];
        out.push(next);
    }
    Ok(out)
}

/// Direct propagation of one branch.
pub fn propagate_branch(
    branch: &Branch,
    rep: &SU2Rep,
    psi0: &CVector,
    grid: &TimeGrid,
) -> Result<Vec<CVector>> {
    direct_propagate(|t| branch.hamiltonian(t, rep), psi0, grid)
}

/// `min_i |<a_i|b_i>|`.
pub fn fidelity(a: &[CVector], b: &[CVector]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { expected: a.len(), found: b.len() });
    }
    let mut worst = f64::INFINITY;
    for (x, y) in a.iter().zip(b) {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
        }
        worst = worst.min(x.dotc(y).norm());
    }
    Ok(if a.is_empty() { 1.0 } else { worst })
}
