//! Self-contained SVG line plots from a summary CSV.
//!
//! Each series becomes one `<polyline>` and one legend entry
//! (`<text class="legend">`), so the output is easy to inspect structurally.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::fit::median_excess;
use crate::summary::{parse_summary, read_trace, SummaryRow};
use crate::BenchError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    /// Median excess risk against `n`, log-log.
    ExcessVsN,
    /// Replicate-mean test error against samples at the largest `n`, log x.
    TestErrorVsIteration,
}

impl PlotKind {
    fn required_columns(self) -> &'static [&'static str] {
        match self {
            Self::ExcessVsN => &["algorithm", "n", "excess_risk"],
            Self::TestErrorVsIteration => &["algorithm", "n", "trace_file"],
        }
    }
}

impl FromStr for PlotKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "excess-vs-n" => Ok(Self::ExcessVsN),
            "testerror-vs-iteration" => Ok(Self::TestErrorVsIteration),
            _ => Err(BenchError::Input(format!(
                "unknown plot kind '{s}' (excess-vs-n, testerror-vs-iteration)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Reads `summary`, builds one series per selected algorithm and writes an
/// SVG to `out`. `algorithms = None` plots every algorithm present; an empty
/// selection is an error. Returns the plotted series.
pub fn emit_plot(
    summary: &Path,
    kind: PlotKind,
    algorithms: Option<&[String]>,
    title: &str,
    out: &Path,
) -> Result<Vec<Series>, BenchError> {
    let f = std::fs::File::open(summary).map_err(|e| BenchError::io(summary, e))?;
    let rows = parse_summary(f, kind.required_columns())?;
    let names = select(&rows, algorithms)?;
    let base = summary.parent().unwrap_or(Path::new("."));
    let series: Vec<Series> = names
        .iter()
        .map(|name| match kind {
            PlotKind::ExcessVsN => Ok(Series {
                name: name.clone(),
                points: median_excess(&rows, name)
                    .into_iter()
                    .map(|(n, e)| (n as f64, e))
                    .filter(|p| p.1 > 0.0)
                    .collect(),
            }),
            PlotKind::TestErrorVsIteration => test_error_curve(&rows, name, base),
        })
        .collect::<Result<_, BenchError>>()?;
    if series.iter().all(|s| s.points.is_empty()) {
        return Err(BenchError::Input(
            "nothing to plot: every selected series is empty".into(),
        ));
    }
    let svg = match kind {
        PlotKind::ExcessVsN => render_svg(title, "n", "median excess risk", true, true, &series),
        PlotKind::TestErrorVsIteration => {
            render_svg(title, "samples", "test error", true, false, &series)
        }
    };
    std::fs::write(out, svg).map_err(|e| BenchError::io(out, e))?;
    Ok(series)
}

fn select(rows: &[SummaryRow], algorithms: Option<&[String]>) -> Result<Vec<String>, BenchError> {
    let mut present: Vec<String> = Vec::new();
    for r in rows {
        if !present.contains(&r.algorithm) {
            present.push(r.algorithm.clone());
        }
    }
    match algorithms {
        None if present.is_empty() => Err(BenchError::Input("summary has no rows".into())),
        None => Ok(present),
        Some([]) => Err(BenchError::Input("empty algorithm filter".into())),
        Some(list) => {
            if let Some(bad) = list.iter().find(|a| !present.contains(a)) {
                return Err(BenchError::Input(format!(
                    "algorithm '{bad}' is not in the summary"
                )));
            }
            Ok(list.to_vec())
        }
    }
}

/// Mean test error per checkpoint over the replicates at the largest `n`.
pub fn test_error_curve(
    rows: &[SummaryRow],
    algorithm: &str,
    base: &Path,
) -> Result<Series, BenchError> {
    let mine: Vec<&SummaryRow> = rows
        .iter()
        .filter(|r| r.algorithm == algorithm && r.ok())
        .collect();
    let n_max = mine.iter().map(|r| r.n).max().unwrap_or(0);
    let mut acc: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for r in mine.iter().filter(|r| r.n == n_max) {
        let Some(file) = &r.trace_file else { continue };
        for t in read_trace(&base.join(file))? {
            if let Some(e) = t.test_error {
                let slot = acc.entry(t.samples).or_insert((0.0, 0));
                slot.0 += e;
                slot.1 += 1;
            }
        }
    }
    if acc.is_empty() {
        return Err(BenchError::Input(format!(
            "{algorithm}: traces carry no test_error values"
        )));
    }
    Ok(Series {
        name: algorithm.to_string(),
        points: acc
            .into_iter()
            .map(|(s, (sum, k))| (s as f64, sum / k as f64))
            .collect(),
    })
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn range(vals: impl Iterator<Item = f64>, log: bool) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite() && (!log || *v > 0.0))
        .map(|v| if log { v.log10() } else { v })
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

pub fn render_svg(
    title: &str,
    x_label: &str,
    y_label: &str,
    log_x: bool,
    log_y: bool,
    series: &[Series],
) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let (x0, x1) = range(all().map(|p| p.0), log_x);
    let (y0, y1) = range(all().map(|p| p.1), log_y);
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (if log_x { x.log10() } else { x } - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (if log_y { y.log10() } else { y } - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let fmt = |v: f64, log: bool| {
            if log {
                format!("{:.3e}", 10f64.powf(v))
            } else {
                format!("{v:.4}")
            }
        };
        let (px, py) = (LEFT + f * pw, TOP + ph - f * ph);
        let _ = writeln!(
            s,
            r#"<text x="{px}" y="{}" text-anchor="middle">{}</text>"#,
            TOP + ph + 16.0,
            fmt(xv, log_x)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{py}" text-anchor="end">{}</text>"#,
            LEFT - 4.0,
            fmt(yv, log_y)
        );
    }
    let axis = |l: &str, log: bool| {
        if log {
            format!("{} (log)", escape(l))
        } else {
            escape(l)
        }
    };
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 12.0,
        axis(x_label, log_x)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        axis(y_label, log_y)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|p| (!log_x || p.0 > 0.0) && (!log_y || p.1 > 0.0))
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = W - RIGHT + 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text class="legend" x="{}" y="{}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(&ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}
