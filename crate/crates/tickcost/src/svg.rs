//! Static SVG line and bar charts.

use std::fmt::Write;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 380.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

pub struct Series {
    pub name: String,
    /// `None` leaves a gap.
    pub values: Vec<Option<f64>>,
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<text x=\"{}\" y=\"22\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    );
}

fn fmt_tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e6).contains(&a) {
        format!("{v:.2e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

fn axes(out: &mut String, lo: f64, hi: f64) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(out, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>");
    let _ = writeln!(out, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>");
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let y = y0 - (y0 - y1) * k as f64 / 4.0;
        let _ = writeln!(out, "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{x0}\" y2=\"{y:.2}\" stroke=\"black\"/>", x0 - 4.0);
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            x0 - 6.0,
            y + 4.0,
            escape(&fmt_tick(v))
        );
    }
}

fn legend(out: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 14.0 * i as f64;
        let x = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            out,
            "<rect x=\"{x}\" y=\"{y}\" width=\"10\" height=\"10\" fill=\"{}\"/><text x=\"{}\" y=\"{}\">{}</text>",
            COLORS[i % COLORS.len()],
            x + 14.0,
            y + 9.0,
            escape(name)
        );
    }
}

fn range(values: impl Iterator<Item = f64>, include_zero: bool) -> (f64, f64) {
    let (mut lo, mut hi) = if include_zero { (0.0, 0.0) } else { (f64::INFINITY, f64::NEG_INFINITY) };
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (if include_zero && lo == 0.0 { 0.0 } else { lo - pad }, hi + pad)
}

/// Series over a shared x axis labelled by `x_labels` (first, middle, last
/// are printed).
pub fn line_chart(title: &str, x_labels: &[String], series: &[Series]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let n = x_labels.len().max(1);
    let (lo, hi) = range(series.iter().flat_map(|s| s.values.iter().flatten().copied()), false);
    axes(&mut out, lo, hi);
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let px = |i: usize| if n > 1 { x0 + (x1 - x0) * i as f64 / (n - 1) as f64 } else { (x0 + x1) / 2.0 };
    let py = |v: f64| y0 - (y0 - y1) * (v - lo) / (hi - lo);
    for i in [0, n / 2, n - 1] {
        if let Some(l) = x_labels.get(i) {
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
                px(i),
                y0 + 18.0,
                escape(l)
            );
        }
    }
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut segment: Vec<String> = Vec::new();
        let flush = |segment: &mut Vec<String>, out: &mut String| {
            if segment.len() > 1 {
                let _ = writeln!(
                    out,
                    "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\" points=\"{}\"/>",
                    segment.join(" ")
                );
            } else if let Some(p) = segment.first() {
                let (x, y) = p.split_once(',').expect("point");
                let _ = writeln!(out, "<circle cx=\"{x}\" cy=\"{y}\" r=\"1.5\" fill=\"{color}\"/>");
            }
            segment.clear();
        };
        for (i, v) in s.values.iter().enumerate() {
            match v {
                Some(v) if v.is_finite() => segment.push(format!("{:.2},{:.2}", px(i), py(*v))),
                _ => flush(&mut segment, &mut out),
            }
        }
        flush(&mut segment, &mut out);
    }
    legend(&mut out, &series.iter().map(|s| s.name.as_str()).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

/// Grouped bars: one group per category, one bar per series.
pub fn bar_chart(title: &str, categories: &[String], series: &[Series]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let (lo, hi) = range(series.iter().flat_map(|s| s.values.iter().flatten().copied()), true);
    axes(&mut out, lo, hi);
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let groups = categories.len().max(1);
    let gw = (x1 - x0) / groups as f64;
    let bw = 0.8 * gw / series.len().max(1) as f64;
    let py = |v: f64| y0 - (y0 - y1) * (v - lo) / (hi - lo);
    for (g, cat) in categories.iter().enumerate() {
        let gx = x0 + gw * g as f64;
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            gx + gw / 2.0,
            y0 + 18.0,
            escape(cat)
        );
        for (k, s) in series.iter().enumerate() {
            if let Some(Some(v)) = s.values.get(g) {
                let (top, bottom) = (py(v.max(0.0)), py(v.min(0.0)));
                let _ = writeln!(
                    out,
                    "<rect x=\"{:.2}\" y=\"{top:.2}\" width=\"{bw:.2}\" height=\"{:.2}\" fill=\"{}\"><title>{}</title></rect>",
                    gx + 0.1 * gw + bw * k as f64,
                    (bottom - top).max(0.0),
                    COLORS[k % COLORS.len()],
                    escape(&format!("{} {}: {v}", s.name, cat))
                );
            }
        }
    }
    legend(&mut out, &series.iter().map(|s| s.name.as_str()).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn balanced(svg: &str) -> bool {
        // Every element either self-closes or has a matching close tag.
        let mut stack = Vec::new();
        let mut rest = svg;
        while let Some(i) = rest.find('<') {
            rest = &rest[i + 1..];
            let end = rest.find('>').unwrap();
            let tag = &rest[..end];
            rest = &rest[end + 1..];
            if tag.starts_with('?') || tag.ends_with('/') {
                continue;
            }
            let name = tag.trim_start_matches('/').split_whitespace().next().unwrap();
            if tag.starts_with('/') {
                if stack.pop() != Some(name.to_string()) {
                    return false;
                }
            } else {
                stack.push(name.to_string());
            }
        }
        stack.is_empty()
    }

    #[test]
    fn charts_are_well_formed() {
        let s = vec![
            Series { name: "a<b".into(), values: vec![Some(1.0), None, Some(3.0), Some(2.0)] },
            Series { name: "c".into(), values: vec![Some(-1.0), Some(0.5), None, None] },
        ];
        let x: Vec<String> = (0..4).map(|i| format!("d{i}")).collect();
        let line = line_chart("t & u", &x, &s);
        assert!(balanced(&line));
        assert!(line.contains("a&lt;b") && line.contains("t &amp; u"));
        let bar = bar_chart("bars", &x, &s);
        assert!(balanced(&bar));
        // Five bars plus two legend swatches.
        assert_eq!(bar.matches("<rect x=").count(), 7);
    }

    #[test]
    fn empty_series_still_render() {
        assert!(balanced(&line_chart("e", &[], &[])));
        assert!(balanced(&bar_chart("e", &[], &[])));
    }
}
