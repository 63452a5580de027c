use std::f64::consts::PI;

use cini_core::grid::TimeGrid;
use cini_core::invariant::{integrate_auxiliary, invariant_matrix, transformed_hamiltonian_defect};
use cini_core::linalg::{det_modulus, expm_hermitian, max_abs_diff, unitarity_defect, CMatrix, CVector};
use cini_core::model::{Branch, ComplexSchedule, DetectorParams, LevelParams, Schedule, SubspaceLabel};
use cini_core::oracle::{direct_propagate, propagate_branch, unitary_propagator};
use cini_core::phase::{evolve_branch, geometric_phase, AuxInit};
use cini_core::su2::{build_rep, SU2Rep};
use num_complex::Complex64;

fn driven(label: SubspaceLabel) -> Branch {
    Branch::new(
        DetectorParams {
            omega1: Schedule::Sum(vec![
                Schedule::Constant(1.4),
                Schedule::Cosine { amplitude: 0.3, omega: 0.9, delta: 0.0 },
            ]),
            omega2: Schedule::Constant(0.6),
        },
        LevelParams {
            energy: Schedule::Linear { a: 0.1, b: -0.05 },
            coupling: ComplexSchedule {
                amplitude: Schedule::Sum(vec![
                    Schedule::Constant(0.6),
                    Schedule::Cosine { amplitude: 0.25, omega: 1.7, delta: 0.3 },
                ]),
                phase: Schedule::Linear { a: 0.4, b: 0.2 },
            },
        },
        label,
    )
}

fn fock(rep: &SU2Rep, two_m: i64) -> CVector {
    rep.basis_ket(two_m).unwrap()
}

fn max_state_error(a: &[CVector], b: &[CVector]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn oracle_is_second_order() {
    let label = SubspaceLabel::new(2, 1);
    let rep = build_rep(3).unwrap();
    let branch = driven(label);
    let psi0 = fock(&rep, 1);
    let end = |steps: usize| {
        let grid = TimeGrid::new(0.0, 2.0, steps).unwrap();
        propagate_branch(&branch, &rep, &psi0, &grid).unwrap().pop().unwrap()
    };
    let reference = end(200 * 8);
    let e1 = (end(200) - &reference).norm();
    let e2 = (end(400) - &reference).norm();
    let ratio = e1 / e2;
    assert!((3.5..4.6).contains(&ratio), "ratio {ratio}, errors {e1:e} {e2:e}");
}

#[test]
fn oracle_norm_drift_over_many_steps() {
    let rep = build_rep(4).unwrap();
    let branch = driven(SubspaceLabel::new(3, 1));
    let grid = TimeGrid::new(0.0, 10.0, 10_000).unwrap();
    let states = propagate_branch(&branch, &rep, &fock(&rep, 2), &grid).unwrap();
    let drift = states.iter().map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max);
    assert!(drift <= 1e-12, "{drift:e}");
}

#[test]
fn propagator_constant_hamiltonian() {
    let rep = build_rep(2).unwrap();
    let h: CMatrix = &rep.j_plus * Complex64::new(0.3, -0.2)
        + &rep.j_minus * Complex64::new(0.3, 0.2)
        + &rep.j3 * Complex64::new(0.7, 0.0);
    let grid = TimeGrid::new(0.0, 1.0, 50).unwrap();
    let us = unitary_propagator(|_| Ok(h.clone()), &grid).unwrap();
    assert!(max_abs_diff(us.last().unwrap(), &expm_hermitian(&h, 1.0)) <= 1e-8);
    for u in &us {
        assert!(unitarity_defect(u) <= 1e-10);
        assert!((det_modulus(u) - 1.0).abs() <= 1e-10);
    }
    let zero = unitary_propagator(|_| Ok(CMatrix::zeros(3, 3)), &grid).unwrap();
    assert!(zero.iter().all(|u| max_abs_diff(u, &rep.identity()) == 0.0));
}

#[test]
fn invariant_expectation_constant_along_oracle() {
    // <psi|I|psi> is conserved exactly; along the oracle it drifts as h^2.
    let rep = build_rep(2).unwrap();
    let branch = driven(SubspaceLabel::new(1, 1));
    let drift = |steps: usize| {
        let grid = TimeGrid::new(0.0, 3.0, steps).unwrap();
        let traj = integrate_auxiliary(|t| branch.spherical(t), 0.7, 0.2, &grid, 1e-9).unwrap();
        let psi0 = CVector::from_vec(vec![
            Complex64::new(0.6, 0.0),
            Complex64::new(0.0, 0.48),
            Complex64::new(0.64, 0.0),
        ]);
        let states = direct_propagate(|t| branch.hamiltonian(t, &rep), &psi0, &grid).unwrap();
        let expect: Vec<f64> = states
            .iter()
            .enumerate()
            .map(|(i, s)| s.dotc(&(invariant_matrix(traj.lambda[i], traj.gamma[i], &rep) * s)).re)
            .collect();
        expect.iter().map(|e| (e - expect[0]).abs()).fold(0.0, f64::max)
    };
    let (d1, d2) = (drift(300), drift(600));
    assert!(d1 < 1e-4, "{d1:e}");
    assert!((3.3..4.7).contains(&(d1 / d2)), "{d1:e} {d2:e}");
}

#[test]
fn auxiliary_rk4_is_fourth_order() {
    let branch = driven(SubspaceLabel::new(1, 0));
    let end = |steps: usize| {
        let grid = TimeGrid::new(0.0, 4.0, steps).unwrap();
        let t = integrate_auxiliary(|t| branch.spherical(t), 0.9, -0.3, &grid, 1e-9).unwrap();
        (*t.lambda.last().unwrap(), *t.gamma.last().unwrap())
    };
    let reference = end(40 * 8);
    let err = |s| {
        let (l, g) = end(s);
        (l - reference.0).abs().max((g - reference.1).abs())
    };
    let ratio = err(40) / err(80);
    assert!((13.0..19.0).contains(&ratio), "{ratio}");
}

#[test]
fn transformed_hamiltonian_is_diagonal_to_second_order() {
    let rep = build_rep(3).unwrap();
    let branch = driven(SubspaceLabel::new(2, 1));
    let defect = |steps: usize| {
        let grid = TimeGrid::new(0.0, 2.0, steps).unwrap();
        let sp: Vec<_> = grid.nodes().map(|t| branch.spherical(t)).collect();
        let traj = integrate_auxiliary(|t| branch.spherical(t), 1.2, 0.5, &grid, 1e-9).unwrap();
        transformed_hamiltonian_defect(&traj, &sp, &rep).unwrap()
    };
    let (a, b) = (defect(200), defect(400));
    assert!(a.total < 1e-3);
    assert!((3.3..4.7).contains(&(a.total / b.total)), "{} {}", a.total, b.total);
    assert!(b.off_diagonal <= b.total);
}

#[test]
fn assembled_solution_tracks_oracle() {
    let label = SubspaceLabel::new(2, 2);
    let rep = build_rep(4).unwrap();
    let branch = driven(label);
    let grid = TimeGrid::new(0.0, 3.0, 3000).unwrap();
    let psi0 = fock(&rep, 0);
    let ev = evolve_branch(&branch, 0, &rep, &grid, &psi0, AuxInit::Aligned, 1e-9).unwrap();
    let oracle = propagate_branch(&branch, &rep, &psi0, &grid).unwrap();
    assert!(max_state_error(&ev.states, &oracle) < 1e-5);
    let explicit =
        evolve_branch(&branch, 0, &rep, &grid, &psi0, AuxInit::Explicit { lambda0: 2.0, gamma0: -1.0 }, 1e-9)
            .unwrap();
    // Different invariants, same physical state.
    assert!(max_state_error(&explicit.states, &ev.states) < 1e-5);
}

#[test]
fn geometric_phase_depends_only_on_path() {
    // Running the same loop twice as fast leaves the geometric phase unchanged.
    let loop_traj = |speed: f64| {
        let grid = TimeGrid::new(0.0, 2.0 * PI / speed, 4000).unwrap();
        let mut traj = integrate_auxiliary(
            |_| cini_core::model::SphericalParams {
                c: speed,
                theta: 0.0,
                phi: 0.0,
                f: 0.0,
                degenerate: true,
            },
            1.0,
            0.0,
            &grid,
            1e-9,
        )
        .unwrap();
        traj.lambda = grid.nodes().map(|t| 1.0 + 0.3 * (speed * t).sin()).collect();
        traj
    };
    let slow = geometric_phase(3, &loop_traj(1.0));
    let fast = geometric_phase(3, &loop_traj(2.0));
    assert!((slow.last().unwrap() - fast.last().unwrap()).abs() < 1e-10);
}
