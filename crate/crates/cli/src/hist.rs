use std::fmt::Write as _;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

/// Equal-width bins over `[min, max]`; the maximum lands in the last bin.
/// A constant sample gets a unit-wide range centred on its value.
pub fn histogram(values: &[f64], bins: usize) -> Vec<Bin> {
    assert!(bins >= 1 && !values.is_empty());
    let (mut lo, mut hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &x in values {
        let i = (((x - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| Bin {
            lo: lo + width * i as f64,
            hi: if i + 1 == bins { hi } else { lo + width * (i + 1) as f64 },
            count,
        })
        .collect()
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

/// Minimal standalone bar chart.
pub fn render_svg(bins: &[Bin], x_label: &str, title: &str) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let max_count = bins.iter().map(|b| b.count).max().unwrap_or(0).max(1);
    let bar_w = plot_w / bins.len() as f64;
    let base = TOP + plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
    for (i, b) in bins.iter().enumerate() {
        let h = plot_h * b.count as f64 / max_count as f64;
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4a78a8" stroke="white" stroke-width="0.5"/>"##,
            LEFT + bar_w * i as f64,
            base - h,
            bar_w,
            h
        );
    }
    let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#, LEFT + plot_w);
    let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{base}" stroke="black"/>"#);

    let first = bins.first().map_or(0.0, |b| b.lo);
    let last = bins.last().map_or(0.0, |b| b.hi);
    for j in 0..=4 {
        let f = j as f64 / 4.0;
        let x = LEFT + plot_w * f;
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{base}" x2="{x:.2}" y2="{}" stroke="black"/>"#, base + 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            base + 18.0,
            tick(first + (last - first) * f)
        );
        let y = base - plot_h * f;
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            y + 4.0,
            (max_count as f64 * f).round()
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">count</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );
    s.push_str("</svg>\n");
    s
}

fn tick(x: f64) -> String {
    let s = format!("{x:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_cover_the_sample() {
        let xs = [0.0, 0.1, 0.5, 0.99, 1.0];
        let h = histogram(&xs, 2);
        assert_eq!(h.len(), 2);
        assert_eq!(h[0].lo, 0.0);
        assert_eq!(h[1].hi, 1.0);
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn constant_sample() {
        let h = histogram(&[3.0; 4], 3);
        assert_eq!(h.iter().map(|b| b.count).sum::<u64>(), 4);
        assert!(h[0].lo < 3.0 && h[2].hi > 3.0);
    }

    #[test]
    fn svg_is_self_contained() {
        let svg = render_svg(&histogram(&[1.0, 2.0, 2.5], 4), "L <n=50>", "t");
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("L &lt;n=50&gt;"));
        assert_eq!(svg.matches("fill=\"#4a78a8\"").count(), 4);
    }
}
