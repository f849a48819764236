use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{DriftError, Result};

use super::BenchResult;

/// One line of the results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub injection: String,
    pub intensity: f64,
    pub trend: String,
    pub detector: String,
    pub auc: f64,
    pub auc_std: f64,
    pub runs: usize,
    pub seed: u64,
    pub config_hash: String,
}

/// AUC against intensity for one detector on one dataset/injection/trend.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Curve {
    pub dataset: String,
    pub injection: String,
    pub trend: String,
    pub detector: String,
    /// `(intensity, auc, auc_std)`, ascending in intensity.
    pub points: Vec<(f64, f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct Summary {
    pub rows: Vec<ResultRow>,
    pub curves: Vec<Curve>,
}

impl BenchResult {
    pub fn rows(&self) -> Vec<ResultRow> {
        self.cells
            .iter()
            .map(|c| ResultRow {
                dataset: c.key.dataset.to_string(),
                injection: c.key.injection.to_string(),
                intensity: c.key.intensity,
                trend: c.key.trend.to_string(),
                detector: c.key.detector.to_string(),
                auc: c.auc,
                auc_std: c.auc_std,
                runs: c.runs,
                seed: self.config.master_seed,
                config_hash: self.config_hash.clone(),
            })
            .collect()
    }
}

pub fn summarize(result: &BenchResult) -> Summary {
    let rows = result.rows();
    let curves = curves(&rows);
    Summary { rows, curves }
}

/// Groups rows into curves, keeping first-appearance order of the groups.
pub fn curves(rows: &[ResultRow]) -> Vec<Curve> {
    let mut out: Vec<Curve> = Vec::new();
    for r in rows {
        let pos = out.iter().position(|c| {
            c.dataset == r.dataset
                && c.injection == r.injection
                && c.trend == r.trend
                && c.detector == r.detector
        });
        let point = (r.intensity, r.auc, r.auc_std);
        match pos {
            Some(i) => out[i].points.push(point),
            None => out.push(Curve {
                dataset: r.dataset.clone(),
                injection: r.injection.clone(),
                trend: r.trend.clone(),
                detector: r.detector.clone(),
                points: vec![point],
            }),
        }
    }
    for c in &mut out {
        c.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    out
}

pub fn write_results_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record([
            "dataset", "injection", "intensity", "trend", "detector", "auc", "auc_std", "runs",
            "seed", "config_hash",
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a results table; malformed records report their 1-based line.
pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        let row: ResultRow = rec.map_err(|e| DriftError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_curves_csv<W: Write>(curves: &[Curve], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "dataset", "injection", "trend", "detector", "intensity", "auc", "auc_std",
    ])?;
    for c in curves {
        for &(x, auc, std) in &c.points {
            w.write_record([
                c.dataset.clone(),
                c.injection.clone(),
                c.trend.clone(),
                c.detector.clone(),
                x.to_string(),
                auc.to_string(),
                std.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_failures_csv<W: Write>(result: &BenchResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dataset", "injection", "intensity", "trend", "detector", "error"])?;
    for f in &result.failures {
        let k = &f.key;
        w.write_record([
            k.dataset.to_string(),
            k.injection.to_string(),
            k.intensity.to_string(),
            k.trend.to_string(),
            k.detector.to_string(),
            f.message.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// One SVG line chart per dataset/injection/trend, keyed by file stem
/// `dataset_injection_trend`.
pub fn render_svg(curves: &[Curve]) -> BTreeMap<String, String> {
    let mut groups: BTreeMap<String, Vec<&Curve>> = BTreeMap::new();
    for c in curves {
        let stem = format!("{}_{}_trend-{}", c.dataset, c.injection, c.trend);
        groups.entry(stem).or_default().push(c);
    }
    groups
        .into_iter()
        .map(|(stem, cs)| {
            let title = format!("{} / {} / trend {}", cs[0].dataset, cs[0].injection, cs[0].trend);
            (stem, chart(&title, &cs))
        })
        .collect()
}

fn chart(title: &str, curves: &[&Curve]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const L: f64 = 60.0;
    const R: f64 = 150.0;
    const T: f64 = 40.0;
    const B: f64 = 50.0;
    let xs = curves.iter().flat_map(|c| c.points.iter().map(|p| p.0));
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
        (a.min(x), b.max(x))
    });
    if !(x1 > x0) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let px = |x: f64| L + (x - x0) / (x1 - x0) * (W - L - R);
    let py = |y: f64| H - B - y * (H - T - B);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        (L + W - R) / 2.0,
        escape(title)
    );
    for i in 0..=4 {
        let y = f64::from(i) / 4.0;
        let _ = writeln!(
            s,
            r##"<line x1="{L}" y1="{0:.1}" x2="{1}" y2="{0:.1}" stroke="#ddd"/><text x="{2}" y="{3:.1}" text-anchor="end">{y:.2}</text>"##,
            py(y),
            W - R,
            L - 6.0,
            py(y) + 4.0
        );
    }
    for i in 0..=4 {
        let x = x0 + (x1 - x0) * f64::from(i) / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            px(x),
            H - B + 18.0,
            trim(x)
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{L}" y="{T}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - L - R,
        H - T - B
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">intensity</text>"#,
        (L + W - R) / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">ROC-AUC</text>"#,
        (T + H - B) / 2.0
    );
    for (i, c) in curves.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = c
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", px(p.0), py(p.1.clamp(0.0, 1.0))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = T + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{ly}" x2="{1}" y2="{ly}" stroke="{colour}" stroke-width="2"/><text x="{2}" y="{3}">{4}</text>"#,
            W - R + 12.0,
            W - R + 32.0,
            W - R + 38.0,
            ly + 4.0,
            escape(&c.detector)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn trim(x: f64) -> String {
    let s = format!("{x:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
