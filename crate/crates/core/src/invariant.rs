//! Lewis-Riesenfeld invariant of a branch Hamiltonian.
//!
//! The invariant is `I = m_hat . J` with `m_hat = (sin l cos g, sin l sin g, cos l)`.
//! Its angles follow the auxiliary equations
//!
//! ```text
//! l' = c sin(theta) sin(phi - g)
//! g' = c [cos(theta) - sin(theta) cot(l) cos(phi - g)]
//! ```
//!
//! and `V = exp(beta J_+ - beta* J_-)` with `beta = -(l/2) e^{-i g}` carries `J_3`
//! onto `I`. The transformed Hamiltonian `V'HV - iV'dV/dt` is then
//! `[c (n_hat . m_hat) + g' (1 - cos l)] J_3 + f`; note the factor `c` on the
//! first term, which is required for consistency with the spherical form of `H`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::linalg::{commutator, max_abs, max_abs_diff, CMatrix, I};
use crate::model::{hamiltonian_from_spherical, SphericalParams};
use crate::su2::{su2_displacement, SU2Rep};

pub const DEFAULT_EPS_SING: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryTrajectory {
    pub grid: TimeGrid,
    pub lambda: Vec<f64>,
    /// Unwrapped.
    pub gamma: Vec<f64>,
    /// Right-hand side of the `gamma` equation at the nodes.
    pub gamma_dot: Vec<f64>,
    /// Every sample had `g = 0`: `lambda` stays at its initial value and
    /// `gamma` advances at `w1 - w2`.
    pub degenerate: bool,
}

impl AuxiliaryTrajectory {
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn beta(&self, i: usize) -> Complex64 {
        beta_of(self.lambda[i], self.gamma[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementParams {
    pub beta: Vec<Complex64>,
}

/// Right-hand side `(lambda', gamma')` of the auxiliary equations.
pub fn auxiliary_rhs(sp: &SphericalParams, lambda: f64, gamma: f64) -> (f64, f64) {
    let (st, ct) = sp.theta.sin_cos();
    if sp.degenerate || st == 0.0 {
        return (0.0, sp.c * ct);
    }
    let (s, c) = (sp.phi - gamma).sin_cos();
    (sp.c * st * s, sp.c * (ct - st * c / lambda.tan()))
}

pub fn integrate_auxiliary<S>(
    spherical: S,
    lambda0: f64,
    gamma0: f64,
    grid: &TimeGrid,
    eps_sing: f64,
) -> Result<AuxiliaryTrajectory>
where
    S: Fn(f64) -> SphericalParams,
{
    integrate_auxiliary_with(spherical, lambda0, gamma0, grid, eps_sing, auxiliary_rhs)
}

/// Classic RK4 on the auxiliary pair with a caller-supplied right-hand side.
/// Schedules are re-evaluated at every stage time.
pub fn integrate_auxiliary_with<S, R>(
    spherical: S,
    lambda0: f64,
    gamma0: f64,
    grid: &TimeGrid,
    eps_sing: f64,
    rhs: R,
) -> Result<AuxiliaryTrajectory>
where
    S: Fn(f64) -> SphericalParams,
    R: Fn(&SphericalParams, f64, f64) -> (f64, f64),
{
    if !lambda0.is_finite() || !gamma0.is_finite() {
        return Err(Error::NonFinite { t: grid.t0() });
    }
    let h = grid.h();
    let n = grid.len();
    let mut lambda = Vec::with_capacity(n);
    let mut gamma = Vec::with_capacity(n);
    let mut gamma_dot = Vec::with_capacity(n);
    let mut degenerate = true;

    // Stage evaluation with the singularity guard.
    let mut eval = |t_node: f64, sp: &SphericalParams, l: f64, g: f64| -> Result<(f64, f64)> {
        if !sp.degenerate {
            degenerate = false;
            if l.sin().abs() < eps_sing {
                return Err(Error::Singularity { t: t_node, eps: eps_sing });
            }
        }
        let d = rhs(sp, l, g);
        if !d.0.is_finite() || !d.1.is_finite() {
            return Err(Error::NonFinite { t: t_node });
        }
        Ok(d)
    };

    let (mut l, mut g) = (lambda0, gamma0);
    let mut sp = spherical(grid.t0());
    for i in 0..n {
        let t = grid.node(i);
        let k1 = eval(t, &sp, l, g)?;
        lambda.push(l);
        gamma.push(g);
        gamma_dot.push(k1.1);
        if i + 1 == n {
            break;
        }
        let sp_mid = spherical(t + 0.5 * h);
        let k2 = eval(t, &sp_mid, l + 0.5 * h * k1.0, g + 0.5 * h * k1.1)?;
        let k3 = eval(t, &sp_mid, l + 0.5 * h * k2.0, g + 0.5 * h * k2.1)?;
        let t_next = grid.node(i + 1);
        let sp_next = spherical(t_next);
        let k4 = eval(t, &sp_next, l + h * k3.0, g + h * k3.1)?;
        l += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        g += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        if !l.is_finite() || !g.is_finite() {
            return Err(Error::NonFinite { t: t_next });
        }
        sp = sp_next;
    }

    Ok(AuxiliaryTrajectory { grid: *grid, lambda, gamma, gamma_dot, degenerate })
}

pub fn beta_of(lambda: f64, gamma: f64) -> Complex64 {
    Complex64::from_polar(-0.5 * lambda, -gamma)
}

pub fn beta_from_aux(traj: &AuxiliaryTrajectory) -> DisplacementParams {
    DisplacementParams { beta: traj.lambda.iter().zip(&traj.gamma).map(|(&l, &g)| beta_of(l, g)).collect() }
}

/// `(1/2) sin(l) e^{-ig} J_+ + (1/2) sin(l) e^{ig} J_- + cos(l) J_3`.
pub fn invariant_matrix(lambda: f64, gamma: f64, rep: &SU2Rep) -> CMatrix {
    let up = Complex64::from_polar(0.5 * lambda.sin(), -gamma);
    &rep.j_plus * up + &rep.j_minus * up.conj() + &rep.j3 * Complex64::new(lambda.cos(), 0.0)
}

pub fn build_v(beta: Complex64, rep: &SU2Rep) -> CMatrix {
    su2_displacement(rep, beta)
}

/// `V(t_i)` at every node.
pub fn v_samples(params: &DisplacementParams, rep: &SU2Rep) -> Vec<CMatrix> {
    params.beta.iter().map(|&b| build_v(b, rep)).collect()
}

/// `max_i |V' I V - J_3|` over the nodes.
pub fn check_transformed_invariant(traj: &AuxiliaryTrajectory, rep: &SU2Rep) -> f64 {
    (0..traj.len())
        .map(|i| {
            let inv = invariant_matrix(traj.lambda[i], traj.gamma[i], rep);
            let v = build_v(traj.beta(i), rep);
            max_abs_diff(&(v.adjoint() * inv * v), &rep.j3)
        })
        .fold(0.0, f64::max)
}

/// Largest residual of `dI/dt + (1/i)[I, H] = 0` at interior nodes, with the
/// time derivative taken by central differences.
pub fn check_invariant_ode(
    traj: &AuxiliaryTrajectory,
    hamiltonians: &[CMatrix],
    rep: &SU2Rep,
) -> Result<f64> {
    let grid = &traj.grid;
    grid.check_len(hamiltonians.len())?;
    grid.check_len(traj.len())?;
    if grid.len() < 3 {
        return Err(Error::InvalidGrid("need at least one interior node".into()));
    }
    let h = grid.h();
    let inv: Vec<CMatrix> =
        (0..traj.len()).map(|i| invariant_matrix(traj.lambda[i], traj.gamma[i], rep)).collect();
    let mut worst: f64 = 0.0;
    for i in 1..traj.len() - 1 {
        let didt = (&inv[i + 1] - &inv[i - 1]) / Complex64::new(2.0 * h, 0.0);
        let comm = commutator(&inv[i], &hamiltonians[i])?;
        let residual = didt + comm / I;
        worst = worst.max(max_abs(&residual));
    }
    Ok(worst)
}

/// `J_3` coefficient of the transformed Hamiltonian at node `i`:
/// `c [cos l cos theta + sin l sin theta cos(g - phi)] + g' (1 - cos l)`.
pub fn transformed_h_coefficient(
    traj: &AuxiliaryTrajectory,
    spherical: &[SphericalParams],
    i: usize,
) -> Result<f64> {
    traj.grid.check_len(spherical.len())?;
    if i >= traj.len() {
        return Err(Error::OutOfRange(format!("node {i} of {}", traj.len())));
    }
    Ok(projected_coupling(&spherical[i], traj.lambda[i], traj.gamma[i])
        + traj.gamma_dot[i] * (1.0 - traj.lambda[i].cos()))
}

/// `c (n_hat . m_hat)`.
pub(crate) fn projected_coupling(sp: &SphericalParams, lambda: f64, gamma: f64) -> f64 {
    sp.c * (lambda.cos() * sp.theta.cos() + lambda.sin() * sp.theta.sin() * (gamma - sp.phi).cos())
}

/// Deviation of `V'HV - iV'dV/dt` from `coefficient J_3 + f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformDefect {
    /// Max entry of the full difference over all nodes.
    pub total: f64,
    /// Max off-diagonal entry of `V'HV - iV'dV/dt` over all nodes.
    pub off_diagonal: f64,
}

/// Checks the transformed Hamiltonian with `dV/dt` from finite differences
/// (central inside, second-order one-sided at the ends).
pub fn transformed_hamiltonian_defect(
    traj: &AuxiliaryTrajectory,
    spherical: &[SphericalParams],
    rep: &SU2Rep,
) -> Result<TransformDefect> {
    let grid = &traj.grid;
    grid.check_len(spherical.len())?;
    let n = traj.len();
    let h = grid.h();
    let vs: Vec<CMatrix> = (0..n).map(|i| build_v(traj.beta(i), rep)).collect();
    let two_h = Complex64::new(2.0 * h, 0.0);
    let mut total: f64 = 0.0;
    let mut off: f64 = 0.0;
    for i in 0..n {
        let vdot = if i == 0 {
            (&vs[1] * Complex64::new(4.0, 0.0) - &vs[0] * Complex64::new(3.0, 0.0) - &vs[2]) / two_h
        } else if i == n - 1 {
            (&vs[n - 1] * Complex64::new(3.0, 0.0) - &vs[n - 2] * Complex64::new(4.0, 0.0) + &vs[n - 3])
                / two_h
        } else {
            (&vs[i + 1] - &vs[i - 1]) / two_h
        };
        let ham = hamiltonian_from_spherical(&spherical[i], rep);
        let vd = vs[i].adjoint();
        let transformed = &vd * ham * &vs[i] - vd * vdot * I;
        let coeff = transformed_h_coefficient(traj, spherical, i)?;
        let expect =
            &rep.j3 * Complex64::new(coeff, 0.0) + rep.identity() * Complex64::new(spherical[i].f, 0.0);
        total = total.max(max_abs_diff(&transformed, &expect));
        for r in 0..rep.dim() {
            for c in 0..rep.dim() {
                if r != c {
                    off = off.max(transformed[(r, c)].norm());
                }
            }
        }
    }
    Ok(TransformDefect { total, off_diagonal: off })
}

/// Largest deviation of the sorted spectrum of `I(t_i)` from `{j, ..., -j}`.
pub fn invariant_spectrum_drift(traj: &AuxiliaryTrajectory, rep: &SU2Rep) -> f64 {
    let expect: Vec<f64> = (0..rep.dim()).map(|r| rep.two_m_at(r) as f64 / 2.0).collect();
    (0..traj.len())
        .map(|i| {
            let inv = invariant_matrix(traj.lambda[i], traj.gamma[i], rep);
            let mut ev: Vec<f64> = inv.symmetric_eigen().eigenvalues.iter().copied().collect();
            ev.sort_by(|a, b| b.total_cmp(a));
            ev.iter().zip(&expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}
