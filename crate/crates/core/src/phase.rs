//! Dynamical and geometric phases and assembly of the invariant-based
//! solution `psi(t) = sum_m C_m exp(i phi_m(t)) V(t) |j,m>`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{cumulative_trapezoid, TimeGrid};
use crate::invariant::{
    auxiliary_rhs, beta_from_aux, beta_of, build_v, integrate_auxiliary_with, projected_coupling, v_samples,
    AuxiliaryTrajectory, DisplacementParams,
};
use crate::linalg::{CMatrix, CVector};
use crate::model::{Branch, SphericalParams, SubspaceLabel};
use crate::su2::SU2Rep;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrace {
    pub grid: TimeGrid,
    pub two_m: i64,
    pub dynamical: Vec<f64>,
    pub geometric: Vec<f64>,
}

impl PhaseTrace {
    pub fn total(&self, i: usize) -> f64 {
        self.dynamical[i] + self.geometric[i]
    }
}

/// `-int_0^t { m c (n_hat . m_hat) + f } dt'`, composite trapezoid.
pub fn dynamical_phase(
    two_m: i64,
    traj: &AuxiliaryTrajectory,
    spherical: &[SphericalParams],
) -> Result<Vec<f64>> {
    traj.grid.check_len(spherical.len())?;
    traj.grid.check_len(traj.len())?;
    let m = two_m as f64 / 2.0;
    let integrand: Vec<f64> = spherical
        .iter()
        .enumerate()
        .map(|(i, sp)| m * projected_coupling(sp, traj.lambda[i], traj.gamma[i]) + sp.f)
        .collect();
    Ok(cumulative_trapezoid(traj.grid.h(), &integrand).into_iter().map(|x| -x).collect())
}

/// `-m int_0^t gamma' (1 - cos lambda) dt'`, composite trapezoid.
pub fn geometric_phase(two_m: i64, traj: &AuxiliaryTrajectory) -> Vec<f64> {
    let m = two_m as f64 / 2.0;
    let integrand: Vec<f64> =
        traj.gamma_dot.iter().zip(&traj.lambda).map(|(gd, l)| gd * (1.0 - l.cos())).collect();
    cumulative_trapezoid(traj.grid.h(), &integrand).into_iter().map(|x| -m * x).collect()
}

/// Solid angle `2 pi (1 - cos lambda)` enclosed by one precession cycle at
/// fixed polar angle `lambda`.
pub fn cyclic_solid_angle(lambda: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&lambda) {
        return Err(Error::OutOfRange(format!("lambda = {lambda} not in [0, pi]")));
    }
    Ok(2.0 * PI * (1.0 - lambda.cos()))
}

pub fn phase_trace(
    two_m: i64,
    traj: &AuxiliaryTrajectory,
    spherical: &[SphericalParams],
) -> Result<PhaseTrace> {
    Ok(PhaseTrace {
        grid: traj.grid,
        two_m,
        dynamical: dynamical_phase(two_m, traj, spherical)?,
        geometric: geometric_phase(two_m, traj),
    })
}

const NORM_TOL: f64 = 1e-10;

/// `C_m = <j,m| V(t0)' |psi0>`.
pub fn coefficients_from_initial(psi0: &CVector, v0: &CMatrix) -> Result<Vec<Complex64>> {
    if psi0.len() != v0.nrows() {
        return Err(Error::DimensionMismatch { expected: v0.nrows(), found: psi0.len() });
    }
    let norm = psi0.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    Ok((v0.adjoint() * psi0).iter().copied().collect())
}

/// `psi(t_i) = sum_m C_m exp(i [phi_d + phi_g]_m(t_i)) V(t_i) |j,m>`.
/// `phases[r]` must belong to basis row `r`.
pub fn assemble_solution(
    coefficients: &[Complex64],
    phases: &[PhaseTrace],
    vs: &[CMatrix],
) -> Result<Vec<CVector>> {
    let dim = coefficients.len();
    if phases.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: phases.len() });
    }
    let Some(first) = phases.first() else {
        return Ok(Vec::new());
    };
    let grid = first.grid;
    grid.check_len(vs.len())?;
    for p in phases {
        if p.grid != grid {
            return Err(Error::InvalidGrid("phase traces on different grids".into()));
        }
        grid.check_len(p.dynamical.len())?;
    }
    vs.iter()
        .enumerate()
        .map(|(i, v)| {
            if v.nrows() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.nrows() });
            }
            let rotated = CVector::from_iterator(
                dim,
                coefficients.iter().zip(phases).map(|(c, p)| c * Complex64::from_polar(1.0, p.total(i))),
            );
            Ok(v * rotated)
        })
        .collect()
}

/// Initial angles of the auxiliary equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AuxInit {
    /// `lambda0 = theta(t0)`, `gamma0 = phi(t0)`.
    Aligned,
    Explicit {
        lambda0: f64,
        gamma0: f64,
    },
}

impl AuxInit {
    pub fn resolve(&self, sp0: &SphericalParams) -> (f64, f64) {
        match *self {
            AuxInit::Aligned => (sp0.theta, sp0.phi),
            AuxInit::Explicit { lambda0, gamma0 } => (lambda0, gamma0),
        }
    }
}

/// `V(t0) |j,m>`: eigenstate of the initial invariant with eigenvalue `m`.
pub fn aligned_state(rep: &SU2Rep, lambda0: f64, gamma0: f64, two_m: i64) -> Result<CVector> {
    Ok(build_v(beta_of(lambda0, gamma0), rep) * rep.basis_ket(two_m)?)
}

/// Everything computed for one `(n, k)` branch.
#[derive(Debug, Clone)]
pub struct BranchEvolution {
    pub label: SubspaceLabel,
    pub level: usize,
    pub spherical: Vec<SphericalParams>,
    pub trajectory: AuxiliaryTrajectory,
    pub displacement: DisplacementParams,
    pub v: Vec<CMatrix>,
    /// One trace per basis row, `m = j` first.
    pub phases: Vec<PhaseTrace>,
    pub coefficients: Vec<Complex64>,
    pub states: Vec<CVector>,
}

impl BranchEvolution {
    pub fn grid(&self) -> &TimeGrid {
        &self.trajectory.grid
    }

    pub fn phase_for(&self, two_m: i64) -> Option<&PhaseTrace> {
        self.phases.iter().find(|p| p.two_m == two_m)
    }
}

/// Solve one branch through its invariant.
pub fn evolve_branch(
    branch: &Branch,
    level: usize,
    rep: &SU2Rep,
    grid: &TimeGrid,
    psi0: &CVector,
    init: AuxInit,
    eps_sing: f64,
) -> Result<BranchEvolution> {
    evolve_branch_with(branch, level, rep, grid, psi0, init, eps_sing, auxiliary_rhs)
}

/// [`evolve_branch`] with a replaceable auxiliary right-hand side.
#[allow(clippy::too_many_arguments)]
pub fn evolve_branch_with<R>(
    branch: &Branch,
    level: usize,
    rep: &SU2Rep,
    grid: &TimeGrid,
    psi0: &CVector,
    init: AuxInit,
    eps_sing: f64,
    rhs: R,
) -> Result<BranchEvolution>
where
    R: Fn(&SphericalParams, f64, f64) -> (f64, f64),
{
    if rep.two_j() != branch.label.two_j() {
        return Err(Error::DimensionMismatch {
            expected: branch.label.two_j() as usize + 1,
            found: rep.dim(),
        });
    }
    let spherical: Vec<SphericalParams> = grid.nodes().map(|t| branch.spherical(t)).collect();
    let (lambda0, gamma0) = init.resolve(&spherical[0]);
    let trajectory = integrate_auxiliary_with(|t| branch.spherical(t), lambda0, gamma0, grid, eps_sing, rhs)?;
    let displacement = beta_from_aux(&trajectory);
    let v = v_samples(&displacement, rep);
    let phases = (0..rep.dim())
        .map(|r| phase_trace(rep.two_m_at(r), &trajectory, &spherical))
        .collect::<Result<Vec<_>>>()?;
    let coefficients = coefficients_from_initial(psi0, &v[0])?;
    let states = assemble_solution(&coefficients, &phases, &v)?;
    Ok(BranchEvolution {
        label: branch.label,
        level,
        spherical,
        trajectory,
        displacement,
        v,
        phases,
        coefficients,
        states,
    })
}
