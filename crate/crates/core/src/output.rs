//! CSV and JSON emission for trajectories, ensembles, and reports.
//!
//! CSV numbers are written with 17 significant digits so downstream plotting
//! and re-analysis lose nothing. Headers and JSON keys are part of the
//! output contract and pinned by golden tests.

use crate::analysis::{ConvergenceReport, DiscrepancyReport};
use crate::sim::{EnsembleSample, EnsembleSummary, Trajectory};
use serde_json::json;
use std::io::{self, Write};
use std::path::Path;

/// Full-precision float formatting used in every CSV cell.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.17e}")
}

pub const TRAJECTORY_HEADER_PREFIX: &str = "step";
pub const NORMS_HEADER: &str = "step,norm,sample_id";
pub const SYNC_NORMS_HEADER: &str = "step,norm";
pub const CONSENSUS_HEADER: &str = "sample_id,seed,converged,consensus_step,consensus_value,spread";

/// `trajectory.csv`: step, one column per agent, then the 2-norm.
pub fn write_trajectory_csv<W: Write>(mut w: W, t: &Trajectory) -> io::Result<()> {
    let n = t.states.first().map(|x| x.len()).unwrap_or(0);
    let mut header = String::from(TRAJECTORY_HEADER_PREFIX);
    for i in 1..=n {
        header.push_str(&format!(",x_{i}"));
    }
    header.push_str(",norm");
    writeln!(w, "{header}")?;
    for (k, x) in t.states.iter().enumerate() {
        write!(w, "{k}")?;
        for v in x {
            write!(w, ",{}", fmt_f64(*v))?;
        }
        writeln!(w, ",{}", fmt_f64(t.norm_track[k]))?;
    }
    Ok(())
}

/// `norms.csv`: per-sample per-step 2-norm tracks.
pub fn write_norms_csv<W: Write>(mut w: W, samples: &[EnsembleSample]) -> io::Result<()> {
    writeln!(w, "{NORMS_HEADER}")?;
    for s in samples {
        for (k, norm) in s.norm_track.iter().enumerate() {
            writeln!(w, "{k},{},{}", fmt_f64(*norm), s.sample_id)?;
        }
    }
    Ok(())
}

/// `sync.csv`: the synchronous reference norm track.
pub fn write_sync_norms_csv<W: Write>(mut w: W, t: &Trajectory) -> io::Result<()> {
    writeln!(w, "{SYNC_NORMS_HEADER}")?;
    for (k, norm) in t.norm_track.iter().enumerate() {
        writeln!(w, "{k},{}", fmt_f64(*norm))?;
    }
    Ok(())
}

/// `consensus.csv`: one row per Monte Carlo sample.
pub fn write_consensus_csv<W: Write>(mut w: W, samples: &[EnsembleSample]) -> io::Result<()> {
    writeln!(w, "{CONSENSUS_HEADER}")?;
    for s in samples {
        match s.consensus {
            Some(c) => writeln!(
                w,
                "{},{},true,{},{},{}",
                s.sample_id,
                s.seed,
                c.step,
                fmt_f64(c.value),
                fmt_f64(c.spread)
            )?,
            None => writeln!(w, "{},{},false,,,", s.sample_id, s.seed)?,
        }
    }
    Ok(())
}

/// `summary.json`: ensemble statistics plus the discrepancy report and the
/// structural analysis.
pub fn ensemble_summary_json(
    ensemble: &EnsembleSummary,
    discrepancy: Option<&DiscrepancyReport>,
    report: Option<&ConvergenceReport>,
) -> serde_json::Value {
    json!({
        "samples": ensemble.samples.len(),
        "non_converged": ensemble.non_converged,
        "consensus_mean": ensemble.mean,
        "consensus_std": ensemble.std,
        "consensus_min": ensemble.min,
        "consensus_max": ensemble.max,
        "consensus_values": ensemble.consensus_values(),
        "discrepancy": discrepancy.map(|d| serde_json::to_value(d).expect("report serializes")),
        "analysis": report.map(|r| serde_json::to_value(r).expect("report serializes")),
    })
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sim::{monte_carlo, run_sync, DelayKind, DelayModel, CONSENSUS_TOL};

    #[test]
    fn trajectory_header_is_stable() {
        let f = fixtures::example1_matrix();
        let t = run_sync(&f, &fixtures::EXAMPLE_X0, 3, CONSENSUS_TOL);
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("step,x_1,x_2,x_3,x_4,x_5,norm\n"));
        assert_eq!(text.lines().count(), 5); // header + 4 states
    }

    #[test]
    fn csv_cells_carry_full_precision() {
        let f = fixtures::example1_matrix();
        let t = run_sync(&f, &fixtures::EXAMPLE_X0, 1, CONSENSUS_TOL);
        let mut buf = Vec::new();
        write_sync_norms_csv(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cell = text.lines().nth(1).unwrap().split(',').nth(1).unwrap();
        let parsed: f64 = cell.parse().unwrap();
        assert_eq!(parsed, t.norm_track[0]);
    }

    #[test]
    fn consensus_csv_handles_non_converged() {
        let f = fixtures::example1_matrix();
        let dm = DelayModel {
            kind: DelayKind::Uniform,
            tau_d: 2,
            seed: 1,
        };
        // far too few steps to converge
        let mc = monte_carlo(&f, &fixtures::EXAMPLE_X0, &dm, 2, 3, CONSENSUS_TOL).unwrap();
        let mut buf = Vec::new();
        write_consensus_csv(&mut buf, &mc.samples).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().contains(",false,"));
    }
}
