//! Tabular and JSON emission of benchmark results.
//!
//! Four artifacts land in the output directory:
//! - `summary.csv` — one row per run: headline metrics and the termination
//!   reason.
//! - `series_<run>.csv` — exploration progress over simulated time for run
//!   `<run>` (the index in `summary.csv`).
//! - `timings.csv` — per-run mean wall-clock cost of the three computation
//!   stages of a cycle, in milliseconds.
//! - `report.json` — aggregate statistics (median/mean/min/max) per
//!   (scenario, policy).
//!
//! Floating-point columns are printed with 17 significant digits so every
//! f64 round-trips exactly; the parse-back helpers below are used by tests
//! to assert that.

use crate::mission::{BenchmarkReport, MissionLog, SeriesPoint};
use crate::planning::fmt;
use serde::Serialize;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

pub const SUMMARY_HEADER: &str =
    "run,scenario,policy,seed,completion_s,energy_J,mean_power_W,entropy_bits,termination";
pub const SERIES_HEADER: &str = "t_s,explored_fraction,cum_energy_J,entropy_bits";
pub const TIMINGS_HEADER: &str =
    "run,scenario,policy,cycles,clustering_ms,trajectory_generation_ms,energy_estimation_ms";

fn io_ctx(err: io::Error, path: &Path) -> io::Error {
    io::Error::new(err.kind(), format!("{}: {err}", path.display()))
}

/// Write all benchmark artifacts into `dir` (created if absent).
/// Returns the paths written.
pub fn emit_outputs(dir: &Path, report: &BenchmarkReport) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| io_ctx(e, dir))?;
    let mut written = Vec::new();

    let p = dir.join("summary.csv");
    fs::write(&p, summary_csv(report)).map_err(|e| io_ctx(e, &p))?;
    written.push(p);

    for (run, mission) in report.missions.iter().enumerate() {
        let p = dir.join(format!("series_{run}.csv"));
        fs::write(&p, series_csv(&mission.series)).map_err(|e| io_ctx(e, &p))?;
        written.push(p);
    }

    let p = dir.join("timings.csv");
    fs::write(&p, timings_csv(report)).map_err(|e| io_ctx(e, &p))?;
    written.push(p);

    let p = dir.join("report.json");
    fs::write(&p, report_json(report)).map_err(|e| io_ctx(e, &p))?;
    written.push(p);

    Ok(written)
}

pub fn summary_csv(report: &BenchmarkReport) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for (run, m) in report.missions.iter().enumerate() {
        let s = &m.summary;
        let mut line = String::new();
        let _ = write!(
            FmtWriter(&mut line),
            "{run},{},{},{},{},{},{},{},{}",
            s.scenario,
            s.policy.as_str(),
            s.seed,
            fmt(s.completion_s),
            fmt(s.energy_j),
            fmt(s.mean_power_w),
            fmt(s.entropy_bits),
            s.termination.as_str()
        );
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn series_csv(series: &[SeriesPoint]) -> String {
    let mut out = String::from(SERIES_HEADER);
    out.push('\n');
    for p in series {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt(p.t_s),
            fmt(p.explored_fraction),
            fmt(p.cum_energy_j),
            fmt(p.entropy_bits)
        ));
    }
    out
}

pub fn timings_csv(report: &BenchmarkReport) -> String {
    let mut out = String::from(TIMINGS_HEADER);
    out.push('\n');
    for (run, m) in report.missions.iter().enumerate() {
        let n = m.cycles.len();
        let (mut clu, mut traj, mut en) = (0.0f64, 0.0f64, 0.0f64);
        for c in &m.cycles {
            clu += c.timings.clustering_s;
            traj += c.timings.trajectory_s;
            en += c.timings.energy_s;
        }
        let scale = if n > 0 { 1e3 / n as f64 } else { 0.0 };
        out.push_str(&format!(
            "{run},{},{},{n},{},{},{}\n",
            m.summary.scenario,
            m.summary.policy.as_str(),
            fmt(clu * scale),
            fmt(traj * scale),
            fmt(en * scale)
        ));
    }
    out
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    runs: usize,
    base_seed: u64,
    stats: &'a [crate::mission::PolicyStats],
}

pub fn report_json(report: &BenchmarkReport) -> String {
    let doc = ReportDoc {
        runs: report.runs,
        base_seed: report.base_seed,
        stats: &report.stats,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serialization cannot fail");
    s.push('\n');
    s
}

/// Parse a `series_<run>.csv` produced by [`series_csv`] back into points.
pub fn read_series_csv(text: &str) -> Result<Vec<SeriesPoint>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == SERIES_HEADER => {}
        other => return Err(format!("bad series header: {other:?}")),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(format!("series row {i}: expected 4 columns, got {}", cols.len()));
        }
        let f = |j: usize| -> Result<f64, String> {
            cols[j].parse().map_err(|e| format!("series row {i} col {j}: {e}"))
        };
        out.push(SeriesPoint {
            t_s: f(0)?,
            explored_fraction: f(1)?,
            cum_energy_j: f(2)?,
            entropy_bits: f(3)?,
        });
    }
    Ok(out)
}

/// One parsed `summary.csv` row.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub run: usize,
    pub scenario: String,
    pub policy: String,
    pub seed: u64,
    pub completion_s: f64,
    pub energy_j: f64,
    pub mean_power_w: f64,
    pub entropy_bits: f64,
    pub termination: String,
}

pub fn read_summary_csv(text: &str) -> Result<Vec<SummaryRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == SUMMARY_HEADER => {}
        other => return Err(format!("bad summary header: {other:?}")),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 9 {
            return Err(format!("summary row {i}: expected 9 columns, got {}", cols.len()));
        }
        let f = |j: usize| -> Result<f64, String> {
            cols[j].parse().map_err(|e| format!("summary row {i} col {j}: {e}"))
        };
        out.push(SummaryRow {
            run: cols[0].parse().map_err(|e| format!("summary row {i} run: {e}"))?,
            scenario: cols[1].to_string(),
            policy: cols[2].to_string(),
            seed: cols[3].parse().map_err(|e| format!("summary row {i} seed: {e}"))?,
            completion_s: f(4)?,
            energy_j: f(5)?,
            mean_power_w: f(6)?,
            entropy_bits: f(7)?,
            termination: cols[8].to_string(),
        });
    }
    Ok(out)
}

/// Append a human-readable digest of one mission to a writer (used by the
/// CLI to narrate progress).
pub fn write_mission_digest(w: &mut impl Write, run: usize, m: &MissionLog) -> io::Result<()> {
    let s = &m.summary;
    writeln!(
        w,
        "run {run:>3}  {}/{} seed {}  {:>10.3} s  {:>12.3} J  {:>8.3} W  explored {:.4}  {}",
        s.scenario,
        s.policy.as_str(),
        s.seed,
        s.completion_s,
        s.energy_j,
        s.mean_power_w,
        s.explored_fraction,
        s.termination.as_str()
    )
}

/// `write!` adapter so `summary_csv` can use the formatting machinery
/// without pulling in `std::fmt::Write` at every call site.
struct FmtWriter<'a>(&'a mut String);

impl std::fmt::Write for FmtWriter<'_> {
    fn write_str(&mut self, s: &str) -> std::fmt::Result {
        self.0.push_str(s);
        Ok(())
    }
}

use std::fmt::Write as _;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::MissionConfig;
    use crate::mission::run_benchmark;
    use crate::policy::PolicyKind;
    use crate::world::{Aabb, Scenario, StartPose};

    fn tiny_report() -> BenchmarkReport {
        let sc = Scenario {
            name: "tiny".into(),
            wall_thickness: 0.2,
            bounds: Aabb::new([0.0, 0.0, 0.0], [6.0, 6.0, 2.0]),
            start: StartPose { position: [3.0, 3.0, 1.0], yaw: 0.0 },
            obstacles: vec![],
        };
        let mut cfg = MissionConfig::default();
        cfg.termination.max_cycles = 3;
        run_benchmark(&[sc], &cfg, &[PolicyKind::EnergyAware, PolicyKind::Nearest], 2, 5)
    }

    #[test]
    fn emitted_files_have_pinned_shapes_and_round_trip() {
        let report = tiny_report();
        let dir = tempfile::tempdir().unwrap();
        let written = emit_outputs(dir.path(), &report).unwrap();
        assert_eq!(written.len(), report.missions.len() + 3);

        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(summary.starts_with(SUMMARY_HEADER));
        let rows = read_summary_csv(&summary).unwrap();
        assert_eq!(rows.len(), 4, "runs x policies");
        for (i, row) in rows.iter().enumerate() {
            let m = &report.missions[i].summary;
            assert_eq!(row.run, i);
            assert_eq!(row.scenario, m.scenario);
            assert_eq!(row.policy, m.policy.as_str());
            assert_eq!(row.seed, m.seed);
            assert_eq!(row.completion_s, m.completion_s, "f64 must round-trip exactly");
            assert_eq!(row.energy_j, m.energy_j);
            assert_eq!(row.mean_power_w, m.mean_power_w);
            assert_eq!(row.entropy_bits, m.entropy_bits);
            assert_eq!(row.termination, m.termination.as_str());
        }

        for (run, mission) in report.missions.iter().enumerate() {
            let text =
                fs::read_to_string(dir.path().join(format!("series_{run}.csv"))).unwrap();
            let parsed = read_series_csv(&text).unwrap();
            assert_eq!(parsed, mission.series, "series round-trip must be lossless");
        }

        let timings = fs::read_to_string(dir.path().join("timings.csv")).unwrap();
        assert!(timings.starts_with(TIMINGS_HEADER));
        assert_eq!(timings.lines().count(), 1 + report.missions.len());

        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap())
                .unwrap();
        assert_eq!(json["runs"], 2);
        assert_eq!(json["base_seed"], 5);
        let stats = json["stats"].as_array().unwrap();
        assert_eq!(stats.len(), 2);
        assert_eq!(stats[0]["scenario"], "tiny");
        assert_eq!(stats[0]["policy"], "eaae");
        let med = stats[0]["energy_j"]["median"].as_f64().unwrap();
        assert_eq!(med, report.stats[0].energy_j.median, "json floats round-trip");
    }

    #[test]
    fn parsers_reject_malformed_input() {
        assert!(read_series_csv("nope\n1,2,3,4\n").is_err());
        assert!(read_series_csv(&format!("{SERIES_HEADER}\n1,2,3\n")).is_err());
        assert!(read_series_csv(&format!("{SERIES_HEADER}\n1,2,x,4\n")).is_err());
        assert!(read_summary_csv("bad header\n").is_err());
        let ok = read_series_csv(&format!("{SERIES_HEADER}\n0,0.5,1e3,0.25\n")).unwrap();
        assert_eq!(ok.len(), 1);
        assert_eq!(ok[0].cum_energy_j, 1000.0);
    }
}
