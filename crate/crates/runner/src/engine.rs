//! A validated config turned into branches, representation and initial state.

use cini_core::decoherence::{decoherence_direct, DecoherenceTrace};
use cini_core::grid::TimeGrid;
use cini_core::invariant::{
    auxiliary_rhs, build_v, check_invariant_ode, check_transformed_invariant, integrate_auxiliary_with,
    AuxiliaryTrajectory,
};
use cini_core::linalg::CVector;
use cini_core::model::{Branch, SphericalParams};
use cini_core::oracle::{fidelity, propagate_branch};
use cini_core::phase::{aligned_state, evolve_branch_with, BranchEvolution};
use cini_core::su2::{build_rep, SU2Rep};
use num_complex::Complex64;

use crate::config::{InitialState, RunConfig};
use crate::error::{RunError, RunResult};

/// Deliberate defects used as negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Negate the auxiliary right-hand side.
    FlipAuxSign,
}

impl Fault {
    pub fn rhs(self) -> impl Fn(&SphericalParams, f64, f64) -> (f64, f64) + Copy {
        move |sp, l, g| {
            let (a, b) = auxiliary_rhs(sp, l, g);
            match self {
                Fault::None => (a, b),
                Fault::FlipAuxSign => (-a, -b),
            }
        }
    }
}

pub struct Prepared {
    pub config: RunConfig,
    pub grid: TimeGrid,
    pub rep: SU2Rep,
    pub branches: Vec<Branch>,
    pub psi0: CVector,
    pub fault: Fault,
}

/// Per-level numbers reported by `simulate` and `sweep`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSummary {
    pub level: usize,
    pub degenerate: bool,
    pub min_fidelity: f64,
    pub invariant_residual: f64,
    pub transformed_invariant_defect: f64,
}

impl Prepared {
    pub fn new(config: RunConfig, fault: Fault) -> RunResult<Self> {
        config.validate()?;
        let grid = config.time_grid()?;
        let rep = build_rep(config.label.two_j() as i64)?;
        let branches: Vec<Branch> = config
            .levels
            .iter()
            .map(|lvl| Branch::new(config.detector.clone(), lvl.clone(), config.label))
            .collect();
        let psi0 = match &config.initial_state {
            InitialState::Fock => rep.basis_ket(config.label.two_m())?,
            InitialState::AlignedM(m) => {
                let sp0 = branches[0].spherical(grid.t0());
                let (l0, g0) = config.aux_init_for(0).resolve(&sp0);
                aligned_state(&rep, l0, g0, (2.0 * m) as i64)?
            }
            InitialState::Explicit(v) => {
                CVector::from_iterator(v.len(), v.iter().map(|[a, b]| Complex64::new(*a, *b)))
            }
        };
        Ok(Prepared { config, grid, rep, branches, psi0, fault })
    }

    pub fn levels(&self) -> usize {
        self.branches.len()
    }

    pub fn two_j(&self) -> u32 {
        self.config.label.two_j()
    }

    pub fn decoherence_two_m(&self) -> i64 {
        self.config.decoherence_two_m()
    }

    fn check_level(&self, k: usize) -> RunResult<()> {
        if k >= self.levels() {
            return Err(RunError::Usage(format!("level {k} out of range (have {})", self.levels())));
        }
        Ok(())
    }

    pub fn trajectory(&self, k: usize) -> RunResult<AuxiliaryTrajectory> {
        self.check_level(k)?;
        let b = &self.branches[k];
        let (l0, g0) = self.config.aux_init_for(k).resolve(&b.spherical(self.grid.t0()));
        Ok(integrate_auxiliary_with(
            |t| b.spherical(t),
            l0,
            g0,
            &self.grid,
            self.config.eps_sing,
            self.fault.rhs(),
        )?)
    }

    pub fn evolve(&self, k: usize) -> RunResult<BranchEvolution> {
        self.check_level(k)?;
        Ok(evolve_branch_with(
            &self.branches[k],
            k,
            &self.rep,
            &self.grid,
            &self.psi0,
            self.config.aux_init_for(k),
            self.config.eps_sing,
            self.fault.rhs(),
        )?)
    }

    pub fn evolve_all(&self) -> RunResult<Vec<BranchEvolution>> {
        (0..self.levels()).map(|k| self.evolve(k)).collect()
    }

    pub fn oracle(&self, k: usize) -> RunResult<Vec<CVector>> {
        self.check_level(k)?;
        Ok(propagate_branch(&self.branches[k], &self.rep, &self.psi0, &self.grid)?)
    }

    pub fn summarize(&self, ev: &BranchEvolution, oracle: &[CVector]) -> RunResult<LevelSummary> {
        let hs = self
            .grid
            .nodes()
            .map(|t| self.branches[ev.level].hamiltonian(t, &self.rep))
            .collect::<cini_core::Result<Vec<_>>>()?;
        Ok(LevelSummary {
            level: ev.level,
            degenerate: ev.trajectory.degenerate,
            min_fidelity: fidelity(&ev.states, oracle)?,
            invariant_residual: check_invariant_ode(&ev.trajectory, &hs, &self.rep)?,
            transformed_invariant_defect: check_transformed_invariant(&ev.trajectory, &self.rep),
        })
    }

    /// `<j,m| V_k' V_l |j,m>` at every node.
    pub fn decoherence(&self, ek: &BranchEvolution, el: &BranchEvolution) -> RunResult<DecoherenceTrace> {
        Ok(decoherence_direct(
            &ek.v,
            &el.v,
            &self.grid,
            self.two_j(),
            self.decoherence_two_m(),
            ek.level,
            el.level,
        )?)
    }

    /// `F_kl(t1)` from the two terminal unitaries only.
    pub fn terminal_decoherence(&self, k: usize, l: usize) -> RunResult<Complex64> {
        let tk = self.trajectory(k)?;
        let tl = if l == k { tk.clone() } else { self.trajectory(l)? };
        let last = self.grid.len() - 1;
        let vk = build_v(tk.beta(last), &self.rep);
        let vl = build_v(tl.beta(last), &self.rep);
        let ket = self.rep.basis_ket(self.decoherence_two_m())?;
        Ok((vk * &ket).dotc(&(vl * ket)))
    }

    /// Same physics on a different grid over the same interval.
    pub fn with_grid(&self, grid: TimeGrid) -> Prepared {
        let mut config = self.config.clone();
        config.grid.t0 = grid.t0();
        config.grid.t1 = grid.t1();
        config.grid.steps = grid.steps();
        Prepared {
            config,
            grid,
            rep: self.rep.clone(),
            branches: self.branches.clone(),
            psi0: self.psi0.clone(),
            fault: self.fault,
        }
    }
}

/// `alpha(t) = (lambda_k(t0) - lambda_l(t0))/2 + int (c_k - c_l)/2`, if both
/// branches sit in the collinear special case (`theta = phi = pi/2`,
/// `gamma0 = 0`) and `m = j`.
pub fn special_case_alpha(p: &Prepared, k: usize, l: usize) -> Option<Vec<f64>> {
    use std::f64::consts::FRAC_PI_2;
    if p.decoherence_two_m() != p.two_j() as i64 {
        return None;
    }
    let tol = 1e-12;
    let mut starts = [0.0; 2];
    for (slot, idx) in [k, l].into_iter().enumerate() {
        let b = &p.branches[idx];
        let sp0 = b.spherical(p.grid.t0());
        let (l0, g0) = p.config.aux_init_for(idx).resolve(&sp0);
        if g0 != 0.0 {
            return None;
        }
        starts[slot] = l0;
        for t in p.grid.nodes() {
            let sp = b.spherical(t);
            if sp.degenerate || (sp.theta - FRAC_PI_2).abs() > tol || (sp.phi - FRAC_PI_2).abs() > tol {
                return None;
            }
        }
    }
    let diff: Vec<f64> =
        p.grid.nodes().map(|t| 0.5 * (p.branches[k].spherical(t).c - p.branches[l].spherical(t).c)).collect();
    let offset = 0.5 * (starts[0] - starts[1]);
    Some(cini_core::grid::cumulative_trapezoid(p.grid.h(), &diff).into_iter().map(|a| a + offset).collect())
}
