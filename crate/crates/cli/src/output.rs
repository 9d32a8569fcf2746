use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::CliError;
use crate::experiment::{averaged_slack, slack_summaries, Outcome};

pub const TRACE_COLUMNS: [&str; 14] = [
    "run_id",
    "variant",
    "p",
    "seed",
    "k",
    "theta",
    "comms",
    "rel_err",
    "consensus_err",
    "objective",
    "kkt_residual",
    "lemma2_slack",
    "thm1_slack",
    "thm2_slack",
];

pub const CHECK_COLUMNS: [&str; 9] = [
    "run_id", "variant", "p", "seed", "check", "min_slack", "k", "tolerance", "status",
];

fn output_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Output {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Output {
        path: path.display().to_string(),
        source: e.into(),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_trace_csv(path: &Path, outcomes: &[Outcome]) -> Result<(), CliError> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    w.write_record(TRACE_COLUMNS).map_err(&err)?;
    for o in outcomes {
        let run_id = o.spec.run_id.to_string();
        let p = o.spec.p.to_string();
        let seed = o.spec.seed.to_string();
        for r in &o.trace.records {
            let theta = match r.theta {
                Some(true) => "1",
                Some(false) => "0",
                None => "",
            };
            w.write_record([
                run_id.as_str(),
                o.variant.as_str(),
                p.as_str(),
                seed.as_str(),
                &r.k.to_string(),
                theta,
                &r.comms.to_string(),
                &opt(r.rel_err),
                &r.consensus_err.to_string(),
                &opt(r.objective),
                &opt(r.kkt_residual),
                &opt(r.lemma2_slack),
                &opt(r.thm1_slack),
                &opt(r.thm2_slack),
            ])
            .map_err(&err)?;
        }
    }
    w.flush().map_err(output_err(path))
}

/// One row per (run, inequality); status is `pass` or `fail`.
pub fn write_checks_csv(path: &Path, outcomes: &[Outcome]) -> Result<(), CliError> {
    use flexatc::analysis::{CHECK_AVERAGED, SLACK_TOL};
    let err = csv_err(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    w.write_record(CHECK_COLUMNS).map_err(&err)?;
    for o in outcomes {
        let head = [o.spec.run_id.to_string(), o.variant.clone(), o.spec.p.to_string(), o.spec.seed.to_string()];
        for s in slack_summaries(&o.trace) {
            let failed = o.trace.violation.is_some_and(|v| v.check == s.check);
            let status = if failed { "fail" } else { "pass" };
            let tolerance = o
                .trace
                .violation
                .filter(|v| v.check == s.check)
                .map_or(SLACK_TOL, |v| v.tolerance);
            let row = [
                s.check.to_string(),
                s.min_slack.to_string(),
                s.k.to_string(),
                tolerance.to_string(),
                status.to_string(),
            ];
            w.write_record(head.iter().chain(&row)).map_err(&err)?;
        }
        if let Some((lhs, bound)) = o.averaged {
            let (slack, ok) = averaged_slack(lhs, bound);
            let row = [
                CHECK_AVERAGED.to_string(),
                slack.to_string(),
                o.trace.iterations().to_string(),
                (SLACK_TOL * (1.0 + bound)).to_string(),
                if ok { "pass" } else { "fail" }.to_string(),
            ];
            w.write_record(head.iter().chain(&row)).map_err(&err)?;
        }
    }
    w.flush().map_err(output_err(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut f = std::fs::File::create(path).map_err(output_err(path))?;
    f.write_all(text.as_bytes()).map_err(output_err(path))
}

/// Final error, communication count and when the target was first reached.
pub fn summary_line(o: &Outcome, target: f64) -> String {
    let t = &o.trace;
    let last = t.records.last();
    let final_err = last.and_then(|r| r.rel_err).map_or("n/a".to_string(), |e| format!("{e:.3e}"));
    let reached = match t.first_reaching(target) {
        Some(r) => format!("k = {} (comms {})", r.k, r.comms),
        None => "not reached".to_string(),
    };
    format!(
        "run {} [{} p={} seed={}] final rel_err {} | comms {} | iterations {} | to {:.0e}: {}",
        o.spec.run_id,
        o.variant,
        o.spec.p,
        o.spec.seed,
        final_err,
        t.total_comms(),
        t.iterations(),
        target,
        reached,
    )
}

const WIDTH: f64 = 1100.0;
const HEIGHT: f64 = 460.0;
const PANEL_W: f64 = 440.0;
const PANEL_H: f64 = 320.0;
const TOP: f64 = 50.0;
const PANEL_LEFT: [f64; 2] = [80.0, 620.0];
const MAX_POINTS: usize = 2000;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

type Point = (f64, f64, f64);

/// Curve of one (variant, p) pair: `(k, comms, rel_err)` per record.
pub struct Curve {
    pub label: String,
    pub points: Vec<Point>,
}

/// First seed of every (variant, p) pair, in grid order.
pub fn curves(outcomes: &[Outcome]) -> Vec<Curve> {
    let mut seen: Vec<(usize, u64)> = Vec::new();
    let mut out = Vec::new();
    for o in outcomes {
        let key = (o.spec.variant, o.spec.p.to_bits());
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let points = o
            .trace
            .records
            .iter()
            .filter_map(|r| {
                let e = r.rel_err?;
                (e > 0.0 && e.is_finite()).then_some((r.k as f64, r.comms as f64, e))
            })
            .collect();
        out.push(Curve {
            label: format!("{} p={}", o.variant, o.spec.p),
            points,
        });
    }
    out
}

fn thin<T: Copy>(points: &[T]) -> Vec<T> {
    if points.len() <= MAX_POINTS {
        return points.to_vec();
    }
    let stride = points.len().div_ceil(MAX_POINTS);
    let mut out: Vec<T> = points.iter().step_by(stride).copied().collect();
    if !(points.len() - 1).is_multiple_of(stride) {
        out.push(points[points.len() - 1]);
    }
    out
}

struct Axis {
    x_max: f64,
    log_lo: f64,
    log_hi: f64,
}

impl Axis {
    fn px(&self, left: f64, x: f64) -> f64 {
        left + PANEL_W * x / self.x_max
    }

    fn py(&self, e: f64) -> f64 {
        TOP + PANEL_H * (self.log_hi - e.log10()) / (self.log_hi - self.log_lo)
    }
}

fn panel_axis(curves: &[Curve], x_of: fn(&Point) -> f64) -> Axis {
    let all = curves.iter().flat_map(|c| c.points.iter());
    let (mut x_max, mut lo, mut hi) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for pt in all {
        x_max = x_max.max(x_of(pt));
        lo = lo.min(pt.2.log10());
        hi = hi.max(pt.2.log10());
    }
    if !lo.is_finite() {
        (lo, hi) = (-1.0, 0.0);
    }
    let (mut log_lo, mut log_hi) = (lo.floor(), hi.ceil());
    if log_hi <= log_lo {
        log_hi = log_lo + 1.0;
    }
    if log_hi - log_lo < 1.0 {
        log_lo = log_hi - 1.0;
    }
    Axis {
        x_max: if x_max > 0.0 { x_max } else { 1.0 },
        log_lo,
        log_hi,
    }
}

/// Two panels with a log error axis: error vs iteration and error vs
/// communications. One polyline per curve per panel.
pub fn render_svg(curves: &[Curve]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let panels: [(&str, fn(&Point) -> f64); 2] =
        [("iteration", |p| p.0), ("communications", |p| p.1)];
    for (i, (xlabel, x_of)) in panels.into_iter().enumerate() {
        let left = PANEL_LEFT[i];
        let axis = panel_axis(curves, x_of);
        let _ = writeln!(
            s,
            r##"<rect x="{left}" y="{TOP}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#333"/>"##
        );
        let mut dec = axis.log_lo;
        while dec <= axis.log_hi {
            let y = axis.py(10f64.powf(dec));
            let _ = writeln!(
                s,
                r##"<line x1="{left}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{dec}</text>"##,
                left + PANEL_W,
                left - 6.0,
                y + 4.0,
            );
            dec += 1.0;
        }
        for t in 0..=4 {
            let xv = axis.x_max * t as f64 / 4.0;
            let x = axis.px(left, xv);
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                TOP + PANEL_H + 18.0,
                format_tick(xv),
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xlabel}</text>"#,
            left + PANEL_W / 2.0,
            TOP + PANEL_H + 38.0,
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">relative error vs {xlabel}</text>"#,
            left + PANEL_W / 2.0,
            TOP - 14.0,
        );
        for (c, curve) in curves.iter().enumerate() {
            let pts: Vec<String> = thin(&curve.points)
                .iter()
                .map(|pt| format!("{:.2},{:.2}", axis.px(left, x_of(pt)), axis.py(pt.2)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                PALETTE[c % PALETTE.len()],
                pts.join(" "),
            );
        }
    }
    for (c, curve) in curves.iter().enumerate() {
        let y = TOP + PANEL_H + 60.0 + 14.0 * (c / 4) as f64;
        let x = PANEL_LEFT[0] + 250.0 * (c % 4) as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            x + 24.0,
            PALETTE[c % PALETTE.len()],
            x + 30.0,
            y + 4.0,
            escape(&curve.label),
        );
    }
    s.push_str("</svg>\n");
    s
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v >= 1e5 {
        format!("{v:.1e}")
    } else if v.fract() == 0.0 {
        format!("{v}")
    } else {
        format!("{v:.1}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
