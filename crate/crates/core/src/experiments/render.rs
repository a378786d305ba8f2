use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::ExperimentReport;
use crate::curve::write_curve_csv;
use crate::error::Result;
use crate::svg::{render_frame, render_overlay, ViewBox};

pub const SUMMARY_FILE: &str = "summary.json";
pub const TIMESERIES_FILE: &str = "timeseries.csv";

/// Writes `summary.json`, and when the run produced samples also the
/// timeseries, one CSV per snapshot and SVG frames of the initial, near-`t0`,
/// near-`t1` and final curves plus an overlay of all snapshots.
pub fn render_report(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let summary = dir.join(SUMMARY_FILE);
    let mut text = serde_json::to_string_pretty(&report.summary())?;
    text.push('\n');
    fs::write(&summary, text)?;
    written.push(summary);

    let Some(flow) = report.flow.as_ref().filter(|f| !f.samples.is_empty()) else {
        return Ok(written);
    };
    let ts = dir.join(TIMESERIES_FILE);
    flow.write_timeseries(BufWriter::new(fs::File::create(&ts)?))?;
    written.push(ts);

    let snap_dir = dir.join("snapshots");
    fs::create_dir_all(&snap_dir)?;
    for (k, snap) in flow.snapshots.iter().enumerate() {
        let p = snap_dir.join(format!("snapshot_{k:05}.csv"));
        write_curve_csv(&snap.curve, BufWriter::new(fs::File::create(&p)?))?;
        written.push(p);
    }

    let curves: Vec<_> = flow.snapshots.iter().map(|s| &s.curve).chain([&flow.final_curve]).collect();
    let view = ViewBox::fit(curves.iter().copied(), 0.05);
    let mut frames = vec![("initial", &flow.snapshots[0].curve, flow.snapshots[0].t)];
    if let (Some(t0), Some(t1)) = (report.t0, report.t1) {
        let s0 = flow.snapshot_near(t0);
        let s1 = flow.snapshot_near(t1);
        frames.push(("near_t0", &s0.curve, s0.t));
        frames.push(("near_t1", &s1.curve, s1.t));
    }
    frames.push(("final", &flow.final_curve, flow.final_sample().t));
    for (name, curve, t) in frames {
        let p = dir.join(format!("{name}.svg"));
        fs::write(&p, render_frame(curve, &view, &format!("{name}, t = {t:.6e}")))?;
        written.push(p);
    }
    let p = dir.join("overlay.svg");
    fs::write(&p, render_overlay(&curves, &view, "snapshots"))?;
    written.push(p);
    Ok(written)
}
