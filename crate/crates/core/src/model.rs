//! Parameter schedules and the fixed-`(n, k)` subspace Hamiltonian.
//!
//! In the sector with total boson number `2n` the detector bilinears act as
//! spin-`j` generators with `j = n`, so the branch Hamiltonian is
//! `E_k + g_k J_+ + g_k* J_- + (w1 - w2) J_3 + n (w1 + w2)`. The same operator
//! written on the sphere is `c (n_hat . J) + f` with
//! `n_hat = (sin theta cos phi, sin theta sin phi, cos theta)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::su2::SU2Rep;

/// Real function of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    Constant(f64),
    /// `a + b t`
    Linear {
        a: f64,
        b: f64,
    },
    /// `amplitude cos(omega t + delta)`
    Cosine {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        delta: f64,
    },
    Sum(Vec<Schedule>),
}

impl Schedule {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Schedule::Constant(a) => *a,
            Schedule::Linear { a, b } => a + b * t,
            Schedule::Cosine { amplitude, omega, delta } => amplitude * (omega * t + delta).cos(),
            Schedule::Sum(parts) => parts.iter().map(|p| p.eval(t)).sum(),
        }
    }

    /// True if the value cannot change with `t`.
    pub fn is_constant(&self) -> bool {
        match self {
            Schedule::Constant(_) => true,
            Schedule::Linear { b, .. } => *b == 0.0,
            Schedule::Cosine { amplitude, omega, .. } => *amplitude == 0.0 || *omega == 0.0,
            Schedule::Sum(parts) => parts.iter().all(Schedule::is_constant),
        }
    }

    /// True if the schedule is identically zero.
    pub fn is_zero(&self) -> bool {
        self.is_constant() && self.eval(0.0) == 0.0
    }
}

pub fn eval_schedule(s: &Schedule, t: f64) -> f64 {
    s.eval(t)
}

/// `g(t) = r(t) exp(i chi(t))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexSchedule {
    pub amplitude: Schedule,
    pub phase: Schedule,
}

impl ComplexSchedule {
    pub fn zero() -> Self {
        ComplexSchedule { amplitude: Schedule::Constant(0.0), phase: Schedule::Constant(0.0) }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        Complex64::from_polar(self.amplitude.eval(t), self.phase.eval(t))
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude.is_zero()
    }
}

/// Energy `E_k` and coupling `g_k` of one measured-system level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelParams {
    pub energy: Schedule,
    pub coupling: ComplexSchedule,
}

/// Detector mode frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    pub omega1: Schedule,
    pub omega2: Schedule,
}

/// Fock occupations `(n1, n2)`, equivalently `|j, m>` with
/// `2j = n1 + n2`, `2m = n1 - n2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubspaceLabel {
    pub n1: u32,
    pub n2: u32,
}

impl SubspaceLabel {
    pub fn new(n1: u32, n2: u32) -> Self {
        SubspaceLabel { n1, n2 }
    }

    /// The subspace containing `|j, m>`.
    pub fn from_spin(two_j: u32, two_m: i64) -> Result<Self> {
        let tj = two_j as i64;
        if two_m.abs() > tj || (tj - two_m) % 2 != 0 {
            return Err(Error::InvalidSpin { two_j: tj, two_m });
        }
        Ok(SubspaceLabel { n1: ((tj + two_m) / 2) as u32, n2: ((tj - two_m) / 2) as u32 })
    }

    pub fn two_j(&self) -> u32 {
        self.n1 + self.n2
    }

    pub fn two_m(&self) -> i64 {
        self.n1 as i64 - self.n2 as i64
    }

    /// Eigenvalue of `N = (a1' a1 + a2' a2) / 2`.
    pub fn n(&self) -> f64 {
        (self.n1 + self.n2) as f64 / 2.0
    }
}

/// Spherical form of the branch Hamiltonian at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalParams {
    pub c: f64,
    pub theta: f64,
    pub phi: f64,
    pub f: f64,
    /// `g = 0`: `phi` (and `theta` when also `c = 0`) fixed to 0 by convention.
    pub degenerate: bool,
}

impl SphericalParams {
    /// `(w1 - w2, g)` rebuilt from `(c, theta, phi)`.
    pub fn physical(&self) -> (f64, Complex64) {
        let detuning = self.c * self.theta.cos();
        let g = Complex64::from_polar(0.5 * self.c * self.theta.sin(), -self.phi);
        (detuning, g)
    }

    /// Unit vector of the su(2) part.
    pub fn axis(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }
}

pub fn spherical_from_physical(det: &DetectorParams, lvl: &LevelParams, n: f64, t: f64) -> SphericalParams {
    let w1 = det.omega1.eval(t);
    let w2 = det.omega2.eval(t);
    let g = lvl.coupling.eval(t);
    let detuning = w1 - w2;
    let r = g.norm();
    let f = lvl.energy.eval(t) + n * (w1 + w2);

    if r == 0.0 {
        let theta = if detuning < 0.0 { PI } else { 0.0 };
        return SphericalParams { c: detuning.abs(), theta, phi: 0.0, f, degenerate: true };
    }
    let c = detuning.hypot(2.0 * r);
    let theta = (2.0 * r).atan2(detuning);
    let mut phi = -g.arg();
    if phi <= -PI {
        phi += 2.0 * PI;
    }
    SphericalParams { c, theta, phi, f, degenerate: false }
}

fn check_dim(rep: &SU2Rep, label: &SubspaceLabel) -> Result<()> {
    if rep.two_j() != label.two_j() {
        return Err(Error::DimensionMismatch { expected: label.two_j() as usize + 1, found: rep.dim() });
    }
    Ok(())
}

/// `E + g J_+ + g* J_- + (w1 - w2) J_3 + n (w1 + w2)` at time `t`.
pub fn hamiltonian_matrix(
    det: &DetectorParams,
    lvl: &LevelParams,
    label: &SubspaceLabel,
    t: f64,
    rep: &SU2Rep,
) -> Result<CMatrix> {
    check_dim(rep, label)?;
    let w1 = det.omega1.eval(t);
    let w2 = det.omega2.eval(t);
    let g = lvl.coupling.eval(t);
    let shift = lvl.energy.eval(t) + label.n() * (w1 + w2);
    Ok(&rep.j_plus * g
        + &rep.j_minus * g.conj()
        + &rep.j3 * Complex64::new(w1 - w2, 0.0)
        + rep.identity() * Complex64::new(shift, 0.0))
}

/// `c [ (1/2) sin(theta) e^{-i phi} J_+ + (1/2) sin(theta) e^{i phi} J_- + cos(theta) J_3 ] + f`.
pub fn hamiltonian_from_spherical(sp: &SphericalParams, rep: &SU2Rep) -> CMatrix {
    let half = 0.5 * sp.c * sp.theta.sin();
    let up = Complex64::from_polar(half, -sp.phi);
    &rep.j_plus * up
        + &rep.j_minus * up.conj()
        + &rep.j3 * Complex64::new(sp.c * sp.theta.cos(), 0.0)
        + rep.identity() * Complex64::new(sp.f, 0.0)
}

/// One `(n, k)` branch: detector, level `k` and the boson-number sector.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub detector: DetectorParams,
    pub level: LevelParams,
    pub label: SubspaceLabel,
}

impl Branch {
    pub fn new(detector: DetectorParams, level: LevelParams, label: SubspaceLabel) -> Self {
        Branch { detector, level, label }
    }

    pub fn spherical(&self, t: f64) -> SphericalParams {
        spherical_from_physical(&self.detector, &self.level, self.label.n(), t)
    }

    pub fn hamiltonian(&self, t: f64, rep: &SU2Rep) -> Result<CMatrix> {
        hamiltonian_matrix(&self.detector, &self.level, &self.label, t, rep)
    }

    /// Coupling vanishes at every time.
    pub fn is_uncoupled(&self) -> bool {
        self.level.coupling.is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermiticity_defect, max_abs_diff};
    use crate::su2::build_rep;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn constant_detector(w1: f64, w2: f64) -> DetectorParams {
        DetectorParams { omega1: Schedule::Constant(w1), omega2: Schedule::Constant(w2) }
    }

    fn level(e: f64, g: Complex64) -> LevelParams {
        LevelParams {
            energy: Schedule::Constant(e),
            coupling: ComplexSchedule {
                amplitude: Schedule::Constant(g.norm()),
                phase: Schedule::Constant(g.arg()),
            },
        }
    }

    #[test]
    fn schedule_values() {
        assert_eq!(eval_schedule(&Schedule::Constant(2.5), 7.0), 2.5);
        assert_eq!(eval_schedule(&Schedule::Linear { a: 1.0, b: 2.0 }, 3.0), 7.0);
        let cosine = Schedule::Cosine { amplitude: 2.0, omega: PI, delta: 0.0 };
        assert!((eval_schedule(&cosine, 1.0) + 2.0).abs() < 1e-15);
        let sum = Schedule::Sum(vec![Schedule::Constant(1.0), Schedule::Linear { a: 0.0, b: 1.0 }]);
        assert_eq!(sum.eval(4.0), 5.0);
        assert!(!sum.is_constant());
    }

    #[test]
    fn schedule_json_encoding() {
        let s: Schedule = serde_json::from_str(
            r#"{"sum": [{"constant": 1.0}, {"cosine": {"amplitude": 0.5, "omega": 2.0}}]}"#,
        )
        .unwrap();
        assert_eq!(s.eval(0.0), 1.5);
        assert!(serde_json::from_str::<Schedule>(r#"{"linear": {"a": 1, "b": 2, "c": 3}}"#).is_err());
        assert!(serde_json::from_str::<Schedule>(r#"{"quadratic": 1}"#).is_err());
        let text = serde_json::to_string(&Schedule::Linear { a: 1.0, b: -2.0 }).unwrap();
        assert_eq!(text, r#"{"linear":{"a":1.0,"b":-2.0}}"#);
    }

    #[test]
    fn complex_schedule_modulus() {
        let g = ComplexSchedule {
            amplitude: Schedule::Cosine { amplitude: 0.7, omega: 1.3, delta: 0.2 },
            phase: Schedule::Linear { a: 0.1, b: 0.9 },
        };
        for t in [0.0, 0.4, 2.2, 9.0] {
            assert!((g.eval(t).norm() - g.amplitude.eval(t).abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn spherical_examples() {
        let sp = spherical_from_physical(
            &constant_detector(1.0, 1.0),
            &level(0.0, Complex64::new(0.5, 0.0)),
            0.5,
            0.0,
        );
        assert!((sp.c - 1.0).abs() < 1e-15);
        assert!((sp.theta - PI / 2.0).abs() < 1e-15);
        assert_eq!(sp.phi, 0.0);
        assert!(!sp.degenerate);

        let sp = spherical_from_physical(
            &constant_detector(1.5, 0.5),
            &level(0.0, Complex64::new(0.0, 0.0)),
            0.5,
            0.0,
        );
        assert_eq!((sp.c, sp.theta, sp.phi, sp.degenerate), (1.0, 0.0, 0.0, true));

        let sp = spherical_from_physical(
            &constant_detector(1.0, 0.0),
            &level(0.0, Complex64::new(0.0, -0.5)),
            0.0,
            0.0,
        );
        assert!((sp.c - 2f64.sqrt()).abs() < 1e-15);
        assert!((sp.theta - PI / 4.0).abs() < 1e-15);
        assert!((sp.phi - PI / 2.0).abs() < 1e-15);
        let (detuning, g) = sp.physical();
        assert!((detuning - 1.0).abs() < 1e-12);
        assert!((g - Complex64::new(0.0, -0.5)).norm() < 1e-12);
    }

    #[test]
    fn fully_degenerate_convention() {
        let sp = spherical_from_physical(
            &constant_detector(0.3, 0.3),
            &level(1.0, Complex64::new(0.0, 0.0)),
            2.0,
            0.0,
        );
        assert_eq!((sp.c, sp.theta, sp.phi), (0.0, 0.0, 0.0));
        assert!((sp.f - 2.2).abs() < 1e-15);
    }

    #[test]
    fn uncoupled_hamiltonian_is_diagonal() {
        let rep = build_rep(3).unwrap();
        let label = SubspaceLabel::new(2, 1);
        let det = constant_detector(1.2, 0.4);
        let lvl = level(0.3, Complex64::new(0.0, 0.0));
        let h = hamiltonian_matrix(&det, &lvl, &label, 0.0, &rep).unwrap();
        let f = 0.3 + 1.5 * 1.6;
        for r in 0..4 {
            let m = rep.two_m_at(r) as f64 / 2.0;
            assert!((h[(r, r)].re - (f + m * 0.8)).abs() < 1e-14);
        }
        assert_eq!(h.iter().filter(|z| z.norm() > 0.0).count(), 4);
    }

    #[test]
    fn spin_half_pure_coupling() {
        let rep = build_rep(1).unwrap();
        let label = SubspaceLabel::new(1, 0);
        let det = constant_detector(0.0, 0.0);
        let lvl = level(0.0, Complex64::new(0.5, 0.0));
        let h = hamiltonian_matrix(&det, &lvl, &label, 0.0, &rep).unwrap();
        assert_eq!(h[(0, 1)], Complex64::new(0.5, 0.0));
        assert_eq!(h[(1, 0)], Complex64::new(0.5, 0.0));
        assert_eq!(h[(0, 0)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let rep = build_rep(2).unwrap();
        let det = constant_detector(1.0, 0.0);
        let lvl = level(0.0, Complex64::new(0.1, 0.0));
        assert!(hamiltonian_matrix(&det, &lvl, &SubspaceLabel::new(2, 1), 0.0, &rep).is_err());
    }

    #[test]
    fn both_forms_agree_on_random_schedules() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rep = build_rep(4).unwrap();
        let label = SubspaceLabel::new(3, 1);
        for _ in 0..10 {
            let mut sched = || {
                Schedule::Sum(vec![
                    Schedule::Constant(rng.random_range(-1.0..1.0)),
                    Schedule::Cosine {
                        amplitude: rng.random_range(-1.0..1.0),
                        omega: rng.random_range(0.0..3.0),
                        delta: rng.random_range(0.0..6.0),
                    },
                ])
            };
            let det = DetectorParams { omega1: sched(), omega2: sched() };
            let lvl = LevelParams {
                energy: sched(),
                coupling: ComplexSchedule { amplitude: sched(), phase: sched() },
            };
            for _ in 0..10 {
                let t = rng.random_range(0.0..10.0);
                let h = hamiltonian_matrix(&det, &lvl, &label, t, &rep).unwrap();
                let sp = spherical_from_physical(&det, &lvl, label.n(), t);
                let h10 = hamiltonian_from_spherical(&sp, &rep);
                assert!(hermiticity_defect(&h) <= 1e-12);
                assert!(max_abs_diff(&h, &h10) <= 1e-12);
                assert!(sp.theta >= 0.0 && sp.theta <= PI);
                assert!(sp.phi > -PI && sp.phi <= PI);
            }
        }
    }

    #[test]
    fn label_quantum_numbers() {
        let l = SubspaceLabel::new(3, 1);
        assert_eq!((l.two_j(), l.two_m(), l.n()), (4, 2, 2.0));
        assert_eq!(SubspaceLabel::from_spin(4, 2).unwrap(), l);
        assert!(SubspaceLabel::from_spin(4, 1).is_err());
    }
}
