use anyhow::Result;
use bouncer::airy::airy_zero;
use bouncer::basis::Bouncer;
use bouncer::checks::{run_checks, CheckOptions, CheckOutcome};
use bouncer::interferometry::interference_trace;
use bouncer::propagator::{qfi_numeric_points, NumericQfiOptions};
use bouncer::qfi::{freefall_overlap, freefall_phase, qfi_freefall_gaussian, qfi_freefall_long_time, BoundQfi, GaussianPacket, QfiModel};
use bouncer::spectrum::{delta_from_field, table1, total_energy, unperturbed_energy, FieldConfig, Spin};
use bouncer::units::PEV;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{Column, Table};

/// The field for single-field commands, honouring the inflated-δ override.
fn field(sys: &Bouncer, rc: &RunConfig) -> Result<FieldConfig> {
    Ok(match rc.delta_override {
        Some(d) => FieldConfig::inflated(sys, d)?,
        None => delta_from_field(sys, rc.field_tesla)?,
    })
}

pub fn spectrum(rc: &RunConfig) -> Result<Table> {
    let sys = rc.system()?;
    let field = field(&sys, rc)?;
    let k = rc.levels.len();
    let (mut gamma, mut e, mut up, mut down, mut shift) =
        (Vec::with_capacity(k), Vec::with_capacity(k), Vec::with_capacity(k), Vec::with_capacity(k), Vec::with_capacity(k));
    for &n in &rc.levels {
        let rec_up = total_energy(&sys, n, Spin::Up, &field)?;
        let rec_down = total_energy(&sys, n, Spin::Down, &field)?;
        gamma.push(airy_zero(n)?);
        e.push(unperturbed_energy(&sys, n)? / PEV);
        up.push(rec_up.e_ns / PEV);
        down.push(rec_down.e_ns / PEV);
        shift.push(rec_up.shift / PEV);
    }
    Ok(Table::default()
        .with("n", Column::Int(rc.levels.iter().map(|&n| n as i64).collect()))
        .with("gamma_n", Column::Float(gamma))
        .with("E_n_peV", Column::Float(e))
        .with("E_up_peV", Column::Float(up))
        .with("E_down_peV", Column::Float(down))
        .with("shift_up_peV", Column::Float(shift)))
}

pub fn table1_cmd(rc: &RunConfig) -> Result<Table> {
    let sys = rc.system()?;
    let rows = table1(&sys, &rc.fields_tesla, &rc.levels)?;
    Ok(Table::default()
        .with("B_tesla", Column::Float(rows.iter().map(|r| r.b_tesla).collect()))
        .with("delta", Column::Float(rows.iter().map(|r| r.delta).collect()))
        .with("n", Column::Int(rows.iter().map(|r| r.n as i64).collect()))
        .with("shift_up_peV", Column::Float(rows.iter().map(|r| r.shift_pev).collect())))
}

pub fn interference(rc: &RunConfig) -> Result<Table> {
    let sys = rc.system()?;
    let field = field(&sys, rc)?;
    let tr = interference_trace(&sys, &rc.times(), &field, rc.level, true)?;
    Ok(Table::default()
        .with("t_s", Column::Float(tr.times))
        .with("p", Column::Float(tr.probability))
        .with("phase_rad", Column::Float(tr.phase))
        .with("visibility", Column::Float(tr.visibility)))
}

pub fn qfi(rc: &RunConfig) -> Result<Table> {
    let sys = rc.system()?;
    let times = rc.times();
    let bound = BoundQfi::new(&sys, rc.level)?;
    let (mut t_col, mut model_col, mut f_col) = (Vec::new(), Vec::new(), Vec::new());
    let mut flagged = 0usize;
    for &model in &rc.models {
        let values: Vec<f64> = match model {
            QfiModel::Numeric => {
                let opts = NumericQfiOptions { epsilon: rc.epsilon, grid: rc.grid };
                let pts = qfi_numeric_points(&sys, rc.level, &times, &opts)?;
                flagged += pts.iter().filter(|p| p.flagged).count();
                pts.iter().map(|p| p.qfi.max(0.0)).collect()
            }
            QfiModel::FreeFall => times.iter().map(|&t| qfi_freefall_long_time(&sys, t)).collect(),
            closed => {
                let curve = bound.curve(closed, &times)?;
                flagged += curve.flagged.iter().filter(|f| **f).count();
                curve.values
            }
        };
        t_col.extend_from_slice(&times);
        model_col.extend(std::iter::repeat(model.label().to_string()).take(times.len()));
        f_col.extend(values);
    }
    if flagged > 0 {
        eprintln!("warning: {flagged} QFI samples lie outside their model's validity window or failed the epsilon-halving test");
    }
    Ok(Table::default()
        .with("t_s", Column::Float(t_col))
        .with("model", Column::Text(model_col))
        .with("F_Q", Column::Float(f_col)))
}

pub fn freefall(rc: &RunConfig) -> Result<Table> {
    let sys = rc.system()?;
    let delta = field(&sys, rc)?.delta;
    let packet = GaussianPacket::centred(rc.sigma_m);
    let times = rc.times();
    let mut closed = Vec::with_capacity(times.len());
    let mut mag = Vec::with_capacity(times.len());
    for &t in &times {
        closed.push(qfi_freefall_gaussian(&sys, &packet, t)?);
        mag.push(freefall_overlap(&sys, &packet, t, delta)?.norm());
    }
    let limit = times.iter().map(|&t| qfi_freefall_long_time(&sys, t)).collect();
    let phi = times.iter().map(|&t| freefall_phase(&sys, t, delta)).collect();
    Ok(Table::default()
        .with("t_s", Column::Float(times))
        .with("F_Q_closed", Column::Float(closed))
        .with("F_Q_t6_limit", Column::Float(limit))
        .with("phi_g", Column::Float(phi))
        .with("overlap_mag", Column::Float(mag)))
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<CheckOutcome>,
}

pub fn check(rc: &RunConfig, propagator: bool) -> Result<CheckReport> {
    let sys = rc.system()?;
    let opts = CheckOptions { tolerance_scale: rc.tolerance_scale, propagator };
    let checks = run_checks(&sys, &opts);
    let failed = checks.iter().filter(|c| !c.passed).count();
    Ok(CheckReport {
        tool: "bouncer",
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: rc.hash(),
        passed: checks.len() - failed,
        failed,
        checks,
    })
}

/// Fixed-width table for a terminal.
pub fn check_table(report: &CheckReport) -> String {
    let mut s = format!("{:<6} {:<16} {:<44} {:>11} {:>11} {:>11}\n", "status", "module", "check", "value", "tolerance", "margin");
    for c in &report.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        s.push_str(&format!(
            "{status:<6} {:<16} {:<44} {:>11.3e} {:>11.3e} {:>11.3e}\n",
            c.module, c.name, c.value, c.tolerance, c.margin
        ));
        if !c.detail.is_empty() {
            s.push_str(&format!("       {}\n", c.detail));
        }
    }
    s.push_str(&format!("{} passed, {} failed\n", report.passed, report.failed));
    s
}
