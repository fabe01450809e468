//! Data-map scatter plot as SVG: variability on x, confidence on y, one
//! marker per sample colored by region. Output is byte-deterministic for a
//! given input.

use std::fmt::Write as _;

use crate::cartography::{DataMapPoint, Region};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const X_MAX: f64 = 0.5;

pub fn region_color(region: Region) -> &'static str {
    match region {
        Region::EasyToLearn => "#1f77b4",
        Region::Ambiguous => "#d62728",
        Region::HardToLearn => "#2ca02c",
    }
}

fn region_label(region: Region) -> &'static str {
    match region {
        Region::EasyToLearn => "easy-to-learn",
        Region::Ambiguous => "ambiguous",
        Region::HardToLearn => "hard-to-learn",
    }
}

pub fn render_datamap(points: &[DataMapPoint], title: &str) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |v: f64| LEFT + v.clamp(0.0, X_MAX) / X_MAX * plot_w;
    let sy = |c: f64| TOP + (1.0 - c.clamp(0.0, 1.0)) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(
        s,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        s,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"black\"/>"
    );
    for i in 0..=5 {
        let v = i as f64 * 0.1;
        let x = sx(v);
        let _ = writeln!(
            s,
            "<text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{v:.1}</text>",
            TOP + plot_h + 16.0
        );
    }
    for i in 0..=5 {
        let c = i as f64 * 0.2;
        let y = sy(c);
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{c:.1}</text>",
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">variability</text>",
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">confidence</text>",
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );
    let _ = writeln!(s, "<g id=\"points\">");
    for p in points {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{}\" fill-opacity=\"0.7\" class=\"{}\"/>",
            sx(p.variability),
            sy(p.confidence),
            region_color(p.region),
            p.region.as_str()
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "<g id=\"legend\">");
    for (i, region) in Region::ALL.iter().enumerate() {
        let n = points.iter().filter(|p| p.region == *region).count();
        let y = TOP + 20.0 + 22.0 * i as f64;
        let x = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"{}\"/>",
            y - 9.0,
            region_color(*region)
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{y:.1}\" font-size=\"12\">{} ({n})</text>",
            x + 16.0,
            region_label(*region)
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(id: &str, v: f64, c: f64, region: Region) -> DataMapPoint {
        DataMapPoint {
            id: id.into(),
            variability: v,
            confidence: c,
            correctness: 1.0,
            region,
        }
    }

    #[test]
    fn one_circle_per_point() {
        let pts = vec![
            point("a", 0.1, 0.9, Region::EasyToLearn),
            point("b", 0.4, 0.5, Region::Ambiguous),
            point("c", 0.05, 0.1, Region::HardToLearn),
        ];
        let svg = render_datamap(&pts, "map <test>");
        assert!(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("map &lt;test&gt;"));
        assert_eq!(svg, render_datamap(&pts, "map <test>"));
    }
}
