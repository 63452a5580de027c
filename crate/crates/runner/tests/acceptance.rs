//! Acceptance criteria, one line each. Exits non-zero if any fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use cini_runner::config::{builtin, RunConfig};
use cini_runner::engine::Fault;
use cini_runner::verify::{
    check_algebra, check_classical_limit, check_closed_form_collinear, check_closed_form_noncollinear,
    check_geometric_phase, check_invariant_residual, check_oracle_fidelity, check_special_case_analytic,
    check_special_case_law, check_transformed_invariant, closed_form_discrepancy, CheckResult,
};

type Criterion = (&'static str, Box<dyn FnOnce() -> Outcome>);

struct Outcome {
    passed: bool,
    detail: String,
}

fn from_checks(checks: &[CheckResult]) -> Outcome {
    Outcome {
        passed: checks.iter().all(|c| c.passed),
        detail: checks.iter().map(CheckResult::line).collect::<Vec<_>>().join(" | "),
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let took = start.elapsed();
    o.detail = format!("{} [{:.2} s]", o.detail, took.as_secs_f64());
    if let Some(limit) = limit {
        if took > limit {
            o.passed = false;
            o.detail.push_str(&format!(" exceeds {} s", limit.as_secs()));
        }
    }
    o
}

fn named(names: &[&str]) -> Vec<(String, RunConfig)> {
    names.iter().map(|n| (n.to_string(), builtin(n).expect("built-in config"))).collect()
}

fn verify_exit(extra: &[&str]) -> (Option<i32>, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cini")).arg("verify").args(extra).output().expect("cini runs");
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code(), text)
}

fn criterion_10() -> Outcome {
    let (pristine, _) = verify_exit(&[]);
    let (faulty, text) = verify_exit(&["--inject-fault", "flip-aux-sign"]);
    let named_failure = text
        .lines()
        .find(|l| l.starts_with("FAIL "))
        .map(|l| l.split_whitespace().nth(1).unwrap_or("").to_string());
    Outcome {
        passed: pristine == Some(0) && faulty == Some(3) && named_failure.is_some(),
        detail: format!(
            "pristine exit {pristine:?}, sign-flipped exit {faulty:?}, first failing check {}",
            named_failure.unwrap_or_else(|| "none".into())
        ),
    }
}

fn main() -> ExitCode {
    let five = Some(Duration::from_secs(5));
    let criteria: Vec<Criterion> = vec![
        ("1 algebra suite", Box::new(move || timed(five, || from_checks(&[check_algebra()])))),
        (
            "2 transformed invariant",
            Box::new(move || timed(five, || from_checks(&[check_transformed_invariant()]))),
        ),
        (
            "3 invariant residual",
            Box::new(|| {
                timed(None, || {
                    from_checks(&[check_invariant_residual(
                        &named(&["special_case", "sinusoidal_drive"]),
                        Fault::None,
                    )])
                })
            }),
        ),
        (
            "4 special-case auxiliary solution",
            Box::new(|| timed(None, || from_checks(&[check_special_case_analytic(Fault::None)]))),
        ),
        (
            "5 oracle fidelity",
            Box::new(|| {
                timed(Some(Duration::from_secs(30)), || {
                    from_checks(&[check_oracle_fidelity(
                        &named(&["fixed_point", "sinusoidal_drive", "special_case"]),
                        Fault::None,
                    )])
                })
            }),
        ),
        ("6 cos^2j law", Box::new(|| timed(None, || from_checks(&[check_special_case_law(Fault::None)])))),
        (
            "7 classical limit",
            Box::new(|| timed(None, || from_checks(&[check_classical_limit(Fault::None)]))),
        ),
        ("8 geometric phase", Box::new(|| timed(None, || from_checks(&[check_geometric_phase()])))),
        (
            "9 closed form",
            Box::new(|| {
                timed(None, || {
                    let table = closed_form_discrepancy().expect("discrepancy table");
                    let mut o =
                        from_checks(&[check_closed_form_collinear(), check_closed_form_noncollinear(&table)]);
                    o.passed &= table.len() >= 3;
                    o
                })
            }),
        ),
        ("10 verify exit codes", Box::new(|| timed(None, criterion_10))),
    ];

    let mut failures = 0;
    for (name, run) in criteria {
        let o = run();
        if !o.passed {
            failures += 1;
        }
        println!("{} criterion {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} failed", failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
