//! Run orchestration: initial data, segmented time integration with
//! snapshots, diagnostics CSV, configured checks, and the run summary.
//!
//! Everything written is deterministic for a fixed config: generators are
//! seeded, snapshot times are snapped onto the step grid, and numbers are
//! serialized with the shortest round-trip representation.

use std::fs;
use std::path::PathBuf;

use oldroyd2d::diag::{self, DiagnosticsRecord};
use oldroyd2d::initial::{generate, superpose};
use oldroyd2d::{CoreError, Fft2d, Integrator, Tracker};

use crate::config::RunConfig;
use crate::report::{self, CheckResult};
use crate::snapshot::write_snapshot;

pub struct RunArtifacts {
    pub records: Vec<DiagnosticsRecord>,
    pub results: Vec<CheckResult>,
    /// `(t, reason)` when the integration stopped at the blow-up guard.
    pub blowup: Option<(f64, String)>,
    pub summary_text: String,
    pub out_dir: PathBuf,
}

/// Snapshot times aligned with states the stepper actually visits: with a
/// fixed step they are rounded to the nearest multiple of `dt`, then clamped
/// to the run interval and deduplicated.
fn snapshot_schedule(cfg: &RunConfig) -> Vec<f64> {
    let mut times: Vec<f64> = cfg
        .outputs
        .snapshots
        .iter()
        .map(|&t| {
            if cfg.stepper.adapt {
                t
            } else {
                (t / cfg.stepper.dt).round() * cfg.stepper.dt
            }
        })
        .filter(|&t| t >= 0.0 && t <= cfg.stepper.t_end)
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

fn snapshot_name(t: f64) -> String {
    format!("state_t{t}.snap")
}

pub fn run_experiment(cfg: &RunConfig) -> Result<RunArtifacts, String> {
    let out_dir = cfg.outputs.dir.clone();
    fs::create_dir_all(&out_dir)
        .map_err(|e| format!("cannot create output dir '{}': {e}", out_dir.display()))?;
    fs::write(out_dir.join("config.echo"), crate::config::echo(cfg))
        .map_err(|e| format!("cannot write config echo: {e}"))?;

    let fft = Fft2d::new(cfg.grid.n);
    let mut state = generate(&cfg.initial, &cfg.grid, cfg.outputs.seed, &fft)
        .map_err(|e| format!("initial data: {e}"))?;
    if let Some(second) = &cfg.initial2 {
        let other = generate(second, &cfg.grid, cfg.outputs.seed.wrapping_add(1), &fft)
            .map_err(|e| format!("second initial data: {e}"))?;
        state = superpose(&state, &other, &cfg.grid).map_err(|e| format!("superpose: {e}"))?;
    }

    let mut integ = Integrator::new(cfg.grid, cfg.params, cfg.stepper, &fft)
        .map_err(|e| format!("integrator: {e}"))?;
    let mut tracker = Tracker::new(cfg.diag.clone(), cfg.params, cfg.grid, &fft)
        .map_err(|e| format!("diagnostics: {e}"))?;

    let schedule = snapshot_schedule(cfg);
    let mut blowup = None;
    let mut last_seen = f64::NEG_INFINITY;

    // Segment boundaries: each snapshot time, then the final time. run()
    // observes the segment start state again, so equal-t observations are
    // dropped here to keep the record sequence strictly increasing.
    let mut targets: Vec<f64> = schedule.iter().copied().filter(|&t| t > state.t).collect();
    targets.push(cfg.stepper.t_end.max(state.t));

    for &t_snap in schedule.iter().filter(|&&t| t <= state.t) {
        write_snapshot(&out_dir.join(snapshot_name(t_snap)), &state, &cfg.grid, &fft)?;
    }
    for target in targets {
        integ.cfg.t_end = target;
        let outcome = integ.run(state.clone(), cfg.cadence, |s| {
            if s.t == last_seen {
                return Ok(());
            }
            last_seen = s.t;
            tracker.observe(s)
        });
        match outcome {
            Ok(run) => state = run.final_state,
            Err(CoreError::BlowUp { t, h1, reason }) => {
                blowup = Some((t, format!("{reason} (H1 level {h1:.3e})")));
                break;
            }
            Err(e) => return Err(format!("integration failed: {e}")),
        }
        if schedule.contains(&target) {
            write_snapshot(&out_dir.join(snapshot_name(target)), &state, &cfg.grid, &fft)?;
        }
    }

    let records = tracker.into_records();
    if cfg.outputs.csv {
        let mut bytes = Vec::new();
        diag::write_csv(&records, &mut bytes).map_err(|e| format!("csv: {e}"))?;
        fs::write(out_dir.join("series.csv"), bytes)
            .map_err(|e| format!("cannot write series.csv: {e}"))?;
    }

    let results = report::run_checks(&records, &cfg.params, &cfg.checks, cfg.fit_window);
    let mut summary_text = report::render_text(&records, &results);
    let mut kv = report::render_kv(&records, &results);
    if let Some((t, reason)) = &blowup {
        summary_text.push_str(&format!("run stopped early: blow-up at t = {t} ({reason})\n"));
        kv.push_str(&format!("blowup = true\nblowup.t = {t}\n"));
    } else {
        kv.push_str("blowup = false\n");
    }
    fs::write(out_dir.join("summary.txt"), &summary_text)
        .map_err(|e| format!("cannot write summary.txt: {e}"))?;
    fs::write(out_dir.join("summary.kv"), kv)
        .map_err(|e| format!("cannot write summary.kv: {e}"))?;

    Ok(RunArtifacts {
        records,
        results,
        blowup,
        summary_text,
        out_dir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_str;

    fn tiny_config(dir: &std::path::Path) -> RunConfig {
        let text = format!(
            "\
grid.n = 32
grid.length = 6.283185307179586
model.rotation = corotation
model.a = 1.0
stepper.dt = 0.01
stepper.t_end = 0.05
initial.name = taylor_green
initial.amplitude = 0.1
diagnostics.cadence = 0.01
diagnostics.b0_every = 0
outputs.dir = {}
outputs.snapshots = 0,0.024
checks.tau_identity_tol = 1e-3
",
            dir.display()
        );
        parse_str(&text).unwrap()
    }

    #[test]
    fn run_produces_deterministic_artifacts_and_snapped_snapshots() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config(&dir.path().join("a"));
        let art = run_experiment(&cfg).unwrap();
        assert!(art.blowup.is_none());
        assert!(!art.records.is_empty());
        assert_eq!(art.records.last().unwrap().t, 0.05);
        // strictly increasing after segment-boundary dedup
        for w in art.records.windows(2) {
            assert!(w[1].t > w[0].t);
        }
        // 0.024 snaps onto the step grid at 0.02
        assert!(cfg.outputs.dir.join("state_t0.snap").exists());
        assert!(cfg.outputs.dir.join("state_t0.02.snap").exists());
        assert!(cfg.outputs.dir.join("summary.txt").exists());
        assert!(cfg.outputs.dir.join("config.echo").exists());

        let cfg_b = tiny_config(&dir.path().join("b"));
        run_experiment(&cfg_b).unwrap();
        let a = fs::read(cfg.outputs.dir.join("series.csv")).unwrap();
        let b = fs::read(cfg_b.outputs.dir.join("series.csv")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn echo_of_parsed_echo_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config(dir.path());
        let echo = crate::config::echo(&cfg);
        let again = crate::config::echo(&parse_str(&echo).unwrap());
        assert_eq!(echo, again);
    }
}
