//! SVG rendering of a configuration: open edges solid, open dual edges
//! dashed, a crossing witness in red on top.

use std::fmt::Write;

use rcquad::events::CrossingPath;
use rcquad::lattice::Region;
use rcquad::measure::Configuration;

pub fn render(
    region: &Region,
    config: &Configuration,
    witness: Option<&CrossingPath>,
    scale: f64,
    title: &str,
) -> String {
    let r = region.rect();
    let margin = 1.0;
    let width = (r.b - r.a) as f64 + 2.0 * (margin + 1.0);
    let height = (r.d - r.c) as f64 + 2.0 * (margin + 1.0);
    let px = |x: f64| (x - r.a as f64 + margin + 1.0) * scale;
    let py = |y: f64| (r.d as f64 - y + margin + 1.0) * scale;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        width * scale,
        height * scale,
        width * scale,
        height * scale
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let stroke = (scale / 8.0).max(1.0);
    for (e, &[u, v]) in region.edges().iter().enumerate() {
        let (a, b) = (region.site(u), region.site(v));
        let (x1, y1, x2, y2) = (a.x as f64, a.y as f64, b.x as f64, b.y as f64);
        if config.is_open(e as u32) {
            let _ = writeln!(
                s,
                r##"<line class="open" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#000000" stroke-width="{stroke}"/>"##,
                px(x1),
                py(y1),
                px(x2),
                py(y2)
            );
        } else {
            // The dual edge crosses the primal one at its midpoint.
            let (mx, my) = ((x1 + x2) / 2.0, (y1 + y2) / 2.0);
            let (dx, dy) = ((y2 - y1) / 2.0, (x1 - x2) / 2.0);
            let _ = writeln!(
                s,
                r##"<line class="dual" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#1f6fd1" stroke-width="{stroke}" stroke-dasharray="{} {}"/>"##,
                px(mx - dx),
                py(my - dy),
                px(mx + dx),
                py(my + dy),
                scale / 5.0,
                scale / 8.0
            );
        }
    }
    if let Some(path) = witness {
        let pts: Vec<String> = path
            .vertices
            .iter()
            .map(|&v| {
                let site = region.site(v);
                format!("{},{}", px(site.x as f64), py(site.y as f64))
            })
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline class="witness" points="{}" fill="none" stroke="#d62728" stroke-width="{}"/>"##,
            pts.join(" "),
            2.0 * stroke
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
