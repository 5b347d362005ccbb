//! Minimal static line and scatter charts for the figure CSVs.

use std::fmt::Write;

use super::Figure;

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if !log {
            lo = lo.min(0.0);
        }
        if hi - lo < 1e-12 {
            hi = lo + 1.0;
        }
        Axis { lo, hi, log }
    }

    fn map(&self, v: f64, from: f64, to: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        from + (v - self.lo) / (self.hi - self.lo) * (to - from)
    }

    fn label(&self, t: f64) -> String {
        let v = self.lo + t * (self.hi - self.lo);
        if self.log {
            format!("1e{v:.1}")
        } else {
            format!("{v:.3}")
        }
    }
}

type Series = (String, Vec<(f64, f64)>);

fn chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series], lines: bool, log: bool) -> String {
    let xs = Axis::fit(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)), log);
    let ys = Axis::fit(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)), log);
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#, W / 2.0);
    let (x0, x1, y0, y1) = (PAD, W - PAD, H - PAD, PAD);
    let _ = writeln!(out, r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" stroke="black" fill="none"/>"#);
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let (x, y) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let _ = writeln!(out, r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#, y0 + 16.0, xs.label(t));
        let _ = writeln!(out, r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#, x0 - 4.0, ys.label(t));
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(out, r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{ylabel}</text>"#, H / 2.0, H / 2.0);
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<(f64, f64)> = pts
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite() && (!log || (*x > 0.0 && *y > 0.0)))
            .map(|&(x, y)| (xs.map(x, x0, x1), ys.map(y, y0, y1)))
            .collect();
        if lines && pts.len() > 1 {
            let d: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(out, r#"<polyline points="{}" stroke="{color}" fill="none"/>"#, d.join(" "));
        }
        for (x, y) in &pts {
            let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"#);
        }
        let ly = PAD + 14.0 * i as f64;
        let _ = writeln!(out, r#"<text x="{}" y="{ly}" fill="{color}">{name}</text>"#, x0 + 10.0);
    }
    out.push_str("</svg>\n");
    out
}

fn grouped<T>(rows: &[T], code: impl Fn(&T) -> &str, point: impl Fn(&T) -> Option<(f64, f64)>) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for r in rows {
        let name = code(r);
        if out.last().is_none_or(|s| s.0 != name) {
            out.push((name.to_string(), Vec::new()));
        }
        if let Some(p) = point(r) {
            out.last_mut().expect("pushed").1.push(p);
        }
    }
    out
}

/// Left panel: empirical minimal time against `1 / Delta`.
pub fn left_panel(fig: &Figure) -> String {
    let series = grouped(
        &fig.left,
        |r| &r.code,
        |r| r.empirical_tmin.filter(|_| r.delta > 0).map(|t| (1.0 / r.delta as f64, t)),
    );
    chart("Minimal time against 1/Delta", "1/Delta", "T_min", &series, false, false)
}

/// Right panel: anchored proxy of `T(f, rho)`, log-log.
pub fn right_panel(fig: &Figure) -> String {
    let series = grouped(&fig.right, |r| &r.code, |r| Some((r.rho, r.proxy_t)));
    chart("Proxy T(f, rho)", "rho", "T", &series, true, true)
}
