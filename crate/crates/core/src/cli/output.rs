use std::fs;
use std::path::Path;

use serde_json::json;

use super::Params;

pub struct Plot {
    pub x: usize,
    pub ys: Vec<usize>,
    pub log_y: bool,
}

pub struct Report {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub results: serde_json::Value,
    pub checks: Vec<(String, bool)>,
    pub plot: Option<Plot>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }
}

pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

pub fn version_line() -> String {
    format!("# teich-recur {}", env!("CARGO_PKG_VERSION"))
}

fn csv_text(report: &Report) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&report.header).map_err(|e| e.to_string())?;
    for row in &report.rows {
        w.write_record(row).map_err(|e| e.to_string())?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    Ok(format!("{}\n{body}", version_line()))
}

fn gnuplot(kind: &str, report: &Report, plot: &Plot) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\nset key autotitle columnhead\n");
    s.push_str(&format!("set xlabel '{}'\n", report.header[plot.x]));
    if plot.log_y {
        s.push_str("set logscale y\n");
    }
    s.push_str(&format!("set terminal pngcairo size 900,600\nset output '{kind}.png'\n"));
    let series: Vec<String> = plot
        .ys
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let file = if i == 0 { format!("'{kind}.csv'") } else { "''".to_string() };
            format!("{file} skip 1 using {}:{} with lines", plot.x + 1, y + 1)
        })
        .collect();
    s.push_str(&format!("plot {}\n", series.join(", \\\n     ")));
    s
}

/// Writes `<out>/<kind>.csv`, `<out>/<kind>.json` and, on request, `<out>/<kind>.gp`.
pub fn write(out: &Path, kind: &str, params: &Params, report: &Report, plot: bool) -> Result<(), String> {
    fs::create_dir_all(out).map_err(|e| format!("cannot create {}: {e}", out.display()))?;
    let csv_path = out.join(format!("{kind}.csv"));
    fs::write(&csv_path, csv_text(report)?).map_err(|e| format!("cannot write {}: {e}", csv_path.display()))?;
    let checks: serde_json::Map<String, serde_json::Value> = report.checks.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let summary = json!({
        "kind": kind,
        "version": env!("CARGO_PKG_VERSION"),
        "config": params,
        "results": report.results,
        "checks": checks,
        "pass": report.passed(),
    });
    let json_path = out.join(format!("{kind}.json"));
    let text = serde_json::to_string_pretty(&summary).map_err(|e| e.to_string())?;
    fs::write(&json_path, text + "\n").map_err(|e| format!("cannot write {}: {e}", json_path.display()))?;
    if plot {
        if let Some(spec) = &report.plot {
            let gp = out.join(format!("{kind}.gp"));
            fs::write(&gp, gnuplot(kind, report, spec)).map_err(|e| format!("cannot write {}: {e}", gp.display()))?;
        }
    }
    Ok(())
}
