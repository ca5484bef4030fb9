//! Post-run verification and summaries.
//!
//! Each configured tolerance becomes one named check against the diagnostic
//! history; results render both as a human summary and as flat `key = value`
//! lines for scripts. A check that cannot be evaluated (wrong model mode,
//! not enough usable samples) reports `info`, never a silent pass.

use std::fmt::Write as _;

use oldroyd2d::diag::{self, DiagnosticsRecord};
use oldroyd2d::ModelParams;

use crate::config::Checks;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Info,
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub observed: String,
    pub target: String,
    pub verdict: Verdict,
}

impl CheckResult {
    fn pass_fail(name: &'static str, ok: bool, observed: String, target: String) -> Self {
        CheckResult {
            name,
            observed,
            target,
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        }
    }

    fn info(name: &'static str, why: String) -> Self {
        CheckResult {
            name,
            observed: why,
            target: String::new(),
            verdict: Verdict::Info,
        }
    }
}

fn max_residual(
    records: &[DiagnosticsRecord],
    field: impl Fn(&DiagnosticsRecord) -> Option<f64>,
) -> Option<f64> {
    records
        .iter()
        .filter_map(|r| field(r).map(f64::abs))
        .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
}

fn joint_l2(r: &DiagnosticsRecord) -> f64 {
    let u = diag::lookup(&r.lp_norms_u, 2.0).unwrap_or(0.0);
    let tau = diag::lookup(&r.lp_norms_tau, 2.0).unwrap_or(0.0);
    u.hypot(tau)
}

fn joint_grad(r: &DiagnosticsRecord) -> f64 {
    r.grad_l2_u.hypot(r.grad_l2_tau)
}

fn fit_check(
    name: &'static str,
    records: &[DiagnosticsRecord],
    quantity: impl Fn(&DiagnosticsRecord) -> f64,
    window: Option<(f64, f64)>,
    slope_range: (f64, f64),
    r2_min: f64,
) -> CheckResult {
    let Some(window) = window else {
        return CheckResult::info(name, "no fit window configured".into());
    };
    match diag::decay_exponent_fit(records, quantity, window) {
        Ok((slope, r2)) => CheckResult::pass_fail(
            name,
            slope >= slope_range.0 && slope <= slope_range.1 && r2 >= r2_min,
            format!("slope {slope:.4}, r2 {r2:.4}"),
            format!(
                "slope in [{}, {}], r2 >= {r2_min}",
                slope_range.0, slope_range.1
            ),
        ),
        Err(e) => CheckResult::info(name, format!("insufficient signal for a fit: {e}")),
    }
}

pub fn run_checks(
    records: &[DiagnosticsRecord],
    params: &ModelParams,
    checks: &Checks,
    fit_window: Option<(f64, f64)>,
) -> Vec<CheckResult> {
    let mut out = Vec::new();
    if let Some(tol) = checks.tau_identity_tol {
        out.push(match max_residual(records, |r| r.tau_identity_residual) {
            Some(worst) => CheckResult::pass_fail(
                "tau_identity",
                worst <= tol,
                format!("{worst:.3e}"),
                format!("<= {tol:.3e}"),
            ),
            None => CheckResult::info(
                "tau_identity",
                "residual not tracked (needs co-rotation mode)".into(),
            ),
        });
    }
    if let Some(tol) = checks.lp_margin_tol {
        out.push(match diag::tau_lp_decay_check(records, params) {
            Ok(worst) => CheckResult::pass_fail(
                "lp_margin",
                worst <= tol,
                format!("{worst:.3e}"),
                format!("<= {tol:.3e}"),
            ),
            Err(e) => CheckResult::info("lp_margin", format!("not evaluable: {e}")),
        });
    }
    if let Some(tol) = checks.energy_residual_tol {
        out.push(match max_residual(records, |r| r.velocity_energy_residual) {
            Some(worst) => CheckResult::pass_fail(
                "energy_budget",
                worst <= tol,
                format!("{worst:.3e}"),
                format!("<= {tol:.3e}"),
            ),
            None => CheckResult::info(
                "energy_budget",
                "residual not tracked (needs an inviscid run)".into(),
            ),
        });
    }
    if let Some(tol) = checks.monotone_tol {
        out.push(match diag::monotonicity_check_e_eta(records, params) {
            Ok(worst) => CheckResult::pass_fail(
                "e_eta_monotone",
                worst <= tol,
                format!("worst dE/dt {worst:.3e}"),
                format!("<= {tol:.3e}"),
            ),
            Err(e) => CheckResult::info("e_eta_monotone", format!("not evaluable: {e}")),
        });
    }
    if let Some(range) = checks.fit_l2 {
        out.push(fit_check(
            "fit_l2",
            records,
            joint_l2,
            fit_window,
            range,
            checks.r2_min,
        ));
    }
    if let Some(range) = checks.fit_grad {
        out.push(fit_check(
            "fit_grad",
            records,
            joint_grad,
            fit_window,
            range,
            checks.r2_min,
        ));
    }
    out
}

pub fn any_failed(results: &[CheckResult]) -> bool {
    results.iter().any(|r| r.verdict == Verdict::Fail)
}

/// Human-readable run summary.
pub fn render_text(records: &[DiagnosticsRecord], results: &[CheckResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "run summary");
    if let (Some(first), Some(last)) = (records.first(), records.last()) {
        let _ = writeln!(out, "  records: {}", records.len());
        let _ = writeln!(out, "  time span: {} .. {}", first.t, last.t);
        let _ = writeln!(
            out,
            "  |u|_2: {:.6e} -> {:.6e}",
            joint_l2_u(first),
            joint_l2_u(last)
        );
        let _ = writeln!(
            out,
            "  |tau|_2: {:.6e} -> {:.6e}",
            l2_tau(first),
            l2_tau(last)
        );
        let _ = writeln!(out, "  E_eta: {:.6e} -> {:.6e}", first.e_eta, last.e_eta);
    } else {
        let _ = writeln!(out, "  records: 0");
    }
    if results.is_empty() {
        let _ = writeln!(out, "checks: none configured");
    } else {
        let _ = writeln!(out, "checks");
        for r in results {
            let line = match r.verdict {
                Verdict::Pass => format!("PASS ({} vs {})", r.observed, r.target),
                Verdict::Fail => format!("FAIL ({} vs {})", r.observed, r.target),
                Verdict::Info => format!("info ({})", r.observed),
            };
            let _ = writeln!(out, "  {}: {line}", r.name);
        }
    }
    let overall = if any_failed(results) { "FAIL" } else { "PASS" };
    let _ = writeln!(out, "overall: {overall}");
    out
}

/// Flat machine-readable mirror of the summary.
pub fn render_kv(records: &[DiagnosticsRecord], results: &[CheckResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "records = {}", records.len());
    if let Some(last) = records.last() {
        let _ = writeln!(out, "t_final = {}", last.t);
        let _ = writeln!(out, "l2_u_final = {}", joint_l2_u(last));
        let _ = writeln!(out, "l2_tau_final = {}", l2_tau(last));
        let _ = writeln!(out, "e_eta_final = {}", last.e_eta);
    }
    for r in results {
        let verdict = match r.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Info => "info",
        };
        let _ = writeln!(out, "check.{} = {verdict}", r.name);
        let _ = writeln!(out, "check.{}.observed = {}", r.name, r.observed);
    }
    let overall = if any_failed(results) { "fail" } else { "pass" };
    let _ = writeln!(out, "overall = {overall}");
    out
}

fn joint_l2_u(r: &DiagnosticsRecord) -> f64 {
    diag::lookup(&r.lp_norms_u, 2.0).unwrap_or(f64::NAN)
}

fn l2_tau(r: &DiagnosticsRecord) -> f64 {
    diag::lookup(&r.lp_norms_tau, 2.0).unwrap_or(f64::NAN)
}

/// Read back a diagnostics CSV produced by a run. Tabulated norms recover the
/// columns that were written out (`p = 2` and `p = inf` for the stress).
pub fn read_csv(text: &str) -> Result<Vec<DiagnosticsRecord>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty CSV")?;
    if header != diag::CSV_HEADER {
        return Err(format!(
            "unexpected CSV header; expected '{}'",
            diag::CSV_HEADER
        ));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let ncols = diag::CSV_HEADER.split(',').count();
        if cells.len() != ncols {
            return Err(format!(
                "row {}: expected {ncols} columns, got {}",
                i + 2,
                cells.len()
            ));
        }
        let num = |j: usize| -> Result<f64, String> {
            cells[j]
                .parse()
                .map_err(|_| format!("row {}: bad number '{}'", i + 2, cells[j]))
        };
        let opt = |j: usize| -> Result<Option<f64>, String> {
            if cells[j].is_empty() {
                Ok(None)
            } else {
                num(j).map(Some)
            }
        };
        records.push(DiagnosticsRecord {
            t: num(0)?,
            lp_norms_u: opt(1)?.map_or(vec![], |v| vec![(2.0, v)]),
            lp_norms_tau: [(2.0, opt(2)?), (f64::INFINITY, opt(3)?)]
                .into_iter()
                .filter_map(|(p, v)| v.map(|v| (p, v)))
                .collect(),
            h1_u: num(4)?,
            h1_tau: num(5)?,
            grad_l2_u: num(6)?,
            grad_l2_tau: num(7)?,
            e_eta: num(8)?,
            h_eta: num(9)?,
            eta: num(10)?,
            lowfreq_energy: num(11)?,
            splitting_radius: num(12)?,
            b1: num(13)?,
            b2: num(14)?,
            tau_identity_residual: opt(15)?,
            velocity_energy_residual: opt(16)?,
            gamma_lp: opt(17)?.map_or(vec![], |v| vec![(2.0, v)]),
            besov_neg: vec![],
            besov_m_sigma: opt(18)?,
            b0_infty1_tau_integral: opt(19)?,
        });
    }
    Ok(records)
}
