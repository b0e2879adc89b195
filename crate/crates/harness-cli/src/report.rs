//! Report emission: deterministic CSV tables plus one JSON summary per run.
//!
//! CSV content is a pure function of the experiment outputs — floating-point
//! values are printed with the shortest round-trip representation — so a
//! repeated experiment with the same config and seed produces byte-identical
//! files. Wall-clock timings live only in the JSON summary.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::sweep::{SweepCell, SweepReport};
use crate::tracking::TrackingReport;

/// Aggregate statistics of a tracking run, without the per-step table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrackingSummary {
    pub rmse_per_axis: [f64; 3],
    pub rmse_position: f64,
    pub final_quarter_rmse: f64,
    pub characteristic_radius: f64,
    pub input_violations: usize,
    pub mean_outer_iterations: f64,
    pub mean_inner_iterations: f64,
    pub failsafe_steps: usize,
    pub failed: bool,
    pub steps: usize,
    pub wall_time_s: f64,
}

impl From<&TrackingReport> for TrackingSummary {
    fn from(report: &TrackingReport) -> Self {
        Self {
            rmse_per_axis: report.rmse_per_axis,
            rmse_position: report.rmse_position,
            final_quarter_rmse: report.final_quarter_rmse,
            characteristic_radius: report.characteristic_radius,
            input_violations: report.input_violations,
            mean_outer_iterations: report.mean_outer_iterations,
            mean_inner_iterations: report.mean_inner_iterations,
            failsafe_steps: report.failsafe_steps,
            failed: report.failed,
            steps: report.steps.len(),
            wall_time_s: report.wall_time_s,
        }
    }
}

/// The single summary file every subcommand writes: what ran, with which
/// config and seed, over which data, and what came out.
///
/// Position metrics are in raw meters; all rotational-loop quantities are in
/// the scaled observation space, as flagged by their field names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub command: String,
    pub seed: u64,
    /// Full TOML snapshot of the configuration the run used.
    pub config_toml: String,
    /// Content hash of the translational dataset (raw space).
    pub translational_hash: String,
    /// Content hash of the rotational dataset (scaled space).
    pub rotational_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepCell>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tracking: Option<TrackingSummary>,
    pub wall_time_s: f64,
}

impl ExperimentSummary {
    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Renders the per-step table of a tracking run.
pub fn steps_csv(report: &TrackingReport) -> String {
    let mut out = String::from(
        "step,t,ref_x,ref_y,ref_z,x,y,z,thrust,ux,uy,roll_torque,pitch_torque,yaw_torque,\
         roll_setpoint,pitch_setpoint,outer_iterations,inner_iterations,outer_cost,\
         inner_cost_scaled,outer_failsafe,inner_failsafe\n",
    );
    for r in &report.steps {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.step,
            r.t,
            r.reference[0],
            r.reference[1],
            r.reference[2],
            r.position[0],
            r.position[1],
            r.position[2],
            r.thrust,
            r.ux,
            r.uy,
            r.roll_torque,
            r.pitch_torque,
            r.yaw_torque,
            r.roll_setpoint,
            r.pitch_setpoint,
            r.outer_iterations,
            r.inner_iterations,
            r.outer_cost,
            r.inner_cost_scaled,
            r.outer_failsafe,
            r.inner_failsafe
        )
        .expect("writing to a string cannot fail");
    }
    out
}

/// Renders the sweep table.
pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out =
        String::from("subsystem,space,size,training_mse,test_mse,average_variance,converged_dimensions,failed\n");
    for c in &report.cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            c.subsystem,
            c.space,
            c.size,
            c.training_mse,
            c.test_mse,
            c.average_variance,
            c.converged_dimensions,
            c.failed
        )
        .expect("writing to a string cannot fail");
    }
    out
}

/// Human-readable rendering of a summary for the `report` subcommand.
pub fn render_summary(summary: &ExperimentSummary) -> String {
    let mut out = String::new();
    writeln!(out, "command: {}", summary.command).unwrap();
    writeln!(out, "seed: {}", summary.seed).unwrap();
    writeln!(out, "translational dataset (raw): {}", summary.translational_hash).unwrap();
    writeln!(out, "rotational dataset (scaled): {}", summary.rotational_hash).unwrap();
    writeln!(out, "wall time: {:.2}s", summary.wall_time_s).unwrap();
    if let Some(cells) = &summary.sweep {
        writeln!(out, "\ntraining sweep (MSE in each subsystem's space):").unwrap();
        writeln!(
            out,
            "{:<14} {:>6} {:>8} {:>13} {:>13} {:>13} {:>5}",
            "subsystem", "space", "size", "training mse", "test mse", "avg variance", "ok"
        )
        .unwrap();
        for c in cells {
            writeln!(
                out,
                "{:<14} {:>6} {:>8} {:>13.4e} {:>13.4e} {:>13.4e} {:>5}",
                c.subsystem,
                c.space,
                c.size,
                c.training_mse,
                c.test_mse,
                c.average_variance,
                if c.failed { "fail" } else { "ok" }
            )
            .unwrap();
        }
    }
    if let Some(t) = &summary.tracking {
        writeln!(out, "\ntracking ({} steps, positions in meters):", t.steps).unwrap();
        writeln!(
            out,
            "  rmse per axis: [{:.4}, {:.4}, {:.4}]",
            t.rmse_per_axis[0], t.rmse_per_axis[1], t.rmse_per_axis[2]
        )
        .unwrap();
        writeln!(out, "  rmse position: {:.4}", t.rmse_position).unwrap();
        writeln!(
            out,
            "  final-quarter rmse: {:.4} ({:.1}% of characteristic radius {:.3})",
            t.final_quarter_rmse,
            100.0 * t.final_quarter_rmse / t.characteristic_radius,
            t.characteristic_radius
        )
        .unwrap();
        writeln!(out, "  input violations: {}", t.input_violations).unwrap();
        writeln!(
            out,
            "  mean iterations: outer {:.2}, inner {:.2} (scaled loop)",
            t.mean_outer_iterations, t.mean_inner_iterations
        )
        .unwrap();
        writeln!(
            out,
            "  failsafe steps: {} — run {}",
            t.failsafe_steps,
            if t.failed { "FAILED" } else { "ok" }
        )
        .unwrap();
    }
    out
}
