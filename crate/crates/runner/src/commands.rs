//! `simulate`, `decohere` and `sweep`.

use std::fmt::Write as _;
use std::path::Path;

use cini_core::decoherence::{
    decoherence_closed_trace, pairwise_overlaps, reduced_coherence, special_case_trace, strictly_decreasing,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{parse_config, two_m_of, RunConfig, Task};
use crate::engine::{special_case_alpha, Fault, LevelSummary, Prepared};
use crate::error::{RunError, RunResult};
use crate::output::{
    fmt_f64, write_aux, write_decoherence, write_density, write_phases, write_states, OutputDir,
};

fn twom_tag(two_m: i64) -> String {
    format!("twom{two_m}")
}

/// Aux trajectories, phases, assembled and oracle states, and the per-level
/// summary. Tasks listed in the config run afterwards.
pub fn cmd_simulate(config: RunConfig, out_dir: &Path) -> RunResult<String> {
    let p = Prepared::new(config, Fault::None)?;
    let mut out = OutputDir::create(out_dir)?;
    let two_m = p.decoherence_two_m();
    let mut text = String::new();
    let mut summaries = Vec::new();
    let mut evolutions = Vec::new();
    for k in 0..p.levels() {
        let ev = p.evolve(k)?;
        let oracle = p.oracle(k)?;
        let s = p.summarize(&ev, &oracle)?;
        write_aux(&mut out, &format!("aux_k{k}.csv"), &ev.trajectory)?;
        let phase = ev.phase_for(two_m).expect("validated projection");
        write_phases(&mut out, &format!("phases_k{k}_{}.csv", twom_tag(two_m)), phase)?;
        write_states(&mut out, &format!("state_k{k}.csv"), &p.grid, &ev.states)?;
        write_states(&mut out, &format!("oracle_k{k}.csv"), &p.grid, &oracle)?;
        writeln!(
            text,
            "level {k}: min fidelity {:.16e}, invariant residual {:.3e}, |V'IV - J3| {:.3e}{}",
            s.min_fidelity,
            s.invariant_residual,
            s.transformed_invariant_defect,
            if s.degenerate { " (uncoupled)" } else { "" }
        )
        .unwrap();
        summaries.push(s);
        evolutions.push(ev);
    }
    out.write_csv(
        "summary.csv",
        &[
            "level",
            "two_j",
            "degenerate",
            "min_fidelity",
            "invariant_residual",
            "transformed_invariant_defect",
        ],
        summaries.iter().map(|s| summary_row(s, p.two_j())),
    )?;

    for task in &p.config.tasks {
        match task {
            Task::Decohere { k, l } => {
                let line = decohere_into(&p, &evolutions[*k], &evolutions[*l], &mut out)?;
                text.push_str(&line);
            }
            Task::ReducedCoherence { amplitudes } => {
                let amps: Vec<Complex64> = amplitudes.iter().map(|[a, b]| Complex64::new(*a, *b)).collect();
                let overlaps = pairwise_overlaps(&evolutions, two_m)?;
                let rho = reduced_coherence(&amps, &overlaps)?;
                write_density(&mut out, "reduced_coherence.csv", &p.grid, &rho)?;
                writeln!(text, "reduced coherence written for {} levels", amps.len()).unwrap();
            }
        }
    }
    out.write_metadata("simulate", json!({ "config": p.config }))?;
    Ok(text)
}

fn summary_row(s: &LevelSummary, two_j: u32) -> Vec<String> {
    vec![
        s.level.to_string(),
        two_j.to_string(),
        s.degenerate.to_string(),
        fmt_f64(s.min_fidelity),
        fmt_f64(s.invariant_residual),
        fmt_f64(s.transformed_invariant_defect),
    ]
}

/// Writes the direct, closed-form and (if applicable) special-case traces.
fn decohere_into(
    p: &Prepared,
    ek: &cini_core::phase::BranchEvolution,
    el: &cini_core::phase::BranchEvolution,
    out: &mut OutputDir,
) -> RunResult<String> {
    let (k, l) = (ek.level, el.level);
    let two_m = p.decoherence_two_m();
    let direct = p.decoherence(ek, el)?;
    let closed =
        decoherence_closed_trace(&ek.displacement, &el.displacement, &p.grid, p.two_j(), two_m, k, l)?;
    let gap_closed = direct.max_difference(&closed)?;
    write_decoherence(out, &format!("decoherence_k{k}_l{l}_direct.csv"), &direct)?;
    write_decoherence(out, &format!("decoherence_k{k}_l{l}_closed_form.csv"), &closed)?;
    let mut gap_special = None;
    if let Some(alpha) = special_case_alpha(p, k, l) {
        let special = special_case_trace(&alpha, &p.grid, p.two_j(), k, l)?;
        gap_special = Some(direct.max_difference(&special)?);
        write_decoherence(out, &format!("decoherence_k{k}_l{l}_special_case.csv"), &special)?;
    }
    let terminal = *direct.values.last().expect("non-empty grid");
    out.write_csv(
        &format!("decohere_summary_k{k}_l{l}.csv"),
        &[
            "k",
            "l",
            "two_j",
            "two_m",
            "terminal_abs_F",
            "max_direct_minus_closed",
            "max_direct_minus_special",
        ],
        [vec![
            k.to_string(),
            l.to_string(),
            p.two_j().to_string(),
            two_m.to_string(),
            fmt_f64(terminal.norm()),
            fmt_f64(gap_closed),
            gap_special.map(fmt_f64).unwrap_or_default(),
        ]],
    )?;
    let mut line = format!(
        "decoherence ({k},{l}): |F(t1)| {:.16e}, max |direct - closed| {:.3e}",
        terminal.norm(),
        gap_closed
    );
    if let Some(g) = gap_special {
        write!(line, ", max |direct - cos^2j| {g:.3e}").unwrap();
    }
    line.push('\n');
    Ok(line)
}

pub fn cmd_decohere(config: RunConfig, k: usize, l: usize, out_dir: &Path) -> RunResult<String> {
    let p = Prepared::new(config, Fault::None)?;
    for idx in [k, l] {
        if idx >= p.levels() {
            return Err(RunError::Usage(format!("level {idx} out of range (have {})", p.levels())));
        }
    }
    let mut out = OutputDir::create(out_dir)?;
    let ek = p.evolve(k)?;
    let el = if l == k { ek.clone() } else { p.evolve(l)? };
    let text = decohere_into(&p, &ek, &el, &mut out)?;
    out.write_metadata("decohere", json!({ "config": p.config, "k": k, "l": l }))?;
    Ok(text)
}

/// Sweep axis: the spin, or any numeric leaf addressed by a JSON pointer.
#[derive(Debug, Clone, PartialEq)]
pub enum Axis {
    TwoJ,
    J,
    Pointer(String),
}

impl Axis {
    pub fn parse(s: &str) -> RunResult<Self> {
        match s {
            "two_j" => Ok(Axis::TwoJ),
            "j" => Ok(Axis::J),
            p if p.starts_with('/') => Ok(Axis::Pointer(p.to_string())),
            other => Err(RunError::Usage(format!(
                "unknown axis {other}; use two_j, j, or a JSON pointer such as /levels/0/energy/constant"
            ))),
        }
    }

    /// Config with the axis set to `value`.
    pub fn apply(&self, base: &RunConfig, value: f64) -> RunResult<RunConfig> {
        match self {
            Axis::TwoJ | Axis::J => {
                let twice = if *self == Axis::J { 2.0 * value } else { value };
                if !(twice >= 0.0 && twice.fract() == 0.0 && twice <= u32::MAX as f64) {
                    return Err(RunError::Usage(format!("{value} is not a valid spin")));
                }
                let two_j = twice as u32;
                let mut cfg = base.clone();
                cfg.label = cini_core::model::SubspaceLabel::new(two_j, 0);
                cfg.decoherence_m = None;
                if let Some(m) = base.decoherence_m {
                    two_m_of(two_j, m, "decoherence_m")?;
                    cfg.decoherence_m = Some(m);
                }
                cfg.validate()?;
                Ok(cfg)
            }
            Axis::Pointer(ptr) => {
                let mut doc = serde_json::to_value(base).expect("config serializes");
                let slot = doc
                    .pointer_mut(ptr)
                    .ok_or_else(|| RunError::Usage(format!("pointer {ptr} does not exist in the config")))?;
                if !slot.is_number() {
                    return Err(RunError::Usage(format!("pointer {ptr} does not address a number")));
                }
                *slot = if ptr.ends_with("/steps") || ptr.ends_with("/n1") || ptr.ends_with("/n2") {
                    if value < 0.0 || value.fract() != 0.0 {
                        return Err(RunError::Usage(format!("{ptr} needs a non-negative integer")));
                    }
                    json!(value as u64)
                } else {
                    json!(value)
                };
                parse_config(&doc.to_string())
            }
        }
    }
}

pub fn parse_values(list: &str) -> RunResult<Vec<f64>> {
    let values: Vec<f64> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| RunError::Usage(format!("cannot parse sweep value {s:?}"))))
        .collect::<RunResult<_>>()?;
    if values.is_empty() {
        return Err(RunError::Usage("sweep needs at least one value".into()));
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub two_j: u32,
    pub terminal_abs_f: f64,
    pub min_fidelity: f64,
    pub invariant_residual: f64,
    pub transformed_invariant_defect: f64,
}

/// Decoherence pair of a config: its first `decohere` task, else `(0, 1)`.
pub fn default_pair(cfg: &RunConfig) -> (usize, usize) {
    cfg.tasks
        .iter()
        .find_map(|t| match t {
            Task::Decohere { k, l } => Some((*k, *l)),
            _ => None,
        })
        .unwrap_or((0, 1.min(cfg.levels.len() - 1)))
}

pub fn sweep_row(cfg: RunConfig, value: f64) -> RunResult<SweepRow> {
    let (k, l) = default_pair(&cfg);
    let p = Prepared::new(cfg, Fault::None)?;
    let evolutions = p.evolve_all()?;
    let mut min_fidelity = f64::INFINITY;
    let mut residual: f64 = 0.0;
    let mut defect: f64 = 0.0;
    for ev in &evolutions {
        let s = p.summarize(ev, &p.oracle(ev.level)?)?;
        min_fidelity = min_fidelity.min(s.min_fidelity);
        residual = residual.max(s.invariant_residual);
        defect = defect.max(s.transformed_invariant_defect);
    }
    let f = p.decoherence(&evolutions[k], &evolutions[l])?;
    Ok(SweepRow {
        value,
        two_j: p.two_j(),
        terminal_abs_f: f.values.last().expect("non-empty grid").norm(),
        min_fidelity,
        invariant_residual: residual,
        transformed_invariant_defect: defect,
    })
}

/// One row per value in input order; the values run in parallel.
pub fn run_sweep(config: &RunConfig, axis: &Axis, values: &[f64]) -> RunResult<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(RunError::Usage("sweep needs at least one value".into()));
    }
    let configs = values.iter().map(|&v| axis.apply(config, v)).collect::<RunResult<Vec<_>>>()?;
    configs.into_par_iter().zip(values.par_iter()).map(|(cfg, &v)| sweep_row(cfg, v)).collect()
}

pub fn cmd_sweep(config: RunConfig, axis: &str, values: &str, out_dir: &Path) -> RunResult<String> {
    let axis_parsed = Axis::parse(axis)?;
    let values = parse_values(values)?;
    let rows = run_sweep(&config, &axis_parsed, &values)?;
    let mut out = OutputDir::create(out_dir)?;
    out.write_csv(
        "sweep.csv",
        &[
            "value",
            "two_j",
            "terminal_abs_F",
            "min_fidelity",
            "invariant_residual",
            "transformed_invariant_defect",
        ],
        rows.iter().map(|r| {
            vec![
                fmt_f64(r.value),
                r.two_j.to_string(),
                fmt_f64(r.terminal_abs_f),
                fmt_f64(r.min_fidelity),
                fmt_f64(r.invariant_residual),
                fmt_f64(r.transformed_invariant_defect),
            ]
        }),
    )?;
    let mags: Vec<f64> = rows.iter().map(|r| r.terminal_abs_f).collect();
    let monotone = strictly_decreasing(&mags);
    out.write_metadata(
        "sweep",
        json!({ "config": config, "axis": axis, "values": values, "monotone_decreasing": monotone }),
    )?;
    let mut text = String::new();
    for r in &rows {
        writeln!(
            text,
            "{axis} = {}: |F(t1)| {:.16e}, min fidelity {:.16e}",
            r.value, r.terminal_abs_f, r.min_fidelity
        )
        .unwrap();
    }
    writeln!(text, "monotone_decreasing = {monotone}").unwrap();
    Ok(text)
}
