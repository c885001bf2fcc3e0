//! Static SVG drawings of a realization.

use std::fmt::Write as _;

use nambu_linkage::{LinkageSpec, Point};

/// Bars as solid segments, marked diagonals dashed, base vertices as filled
/// squares, other vertices as small circles. The view box is padded by 10%
/// of the bounding box on every side and `y` points up.
pub fn render(spec: &LinkageSpec, positions: &[Point]) -> String {
    let (mut lo, mut hi) = (positions[0], positions[0]);
    for p in positions {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let extent = hi - lo;
    let diameter = extent.x.max(extent.y).max(1e-9);
    let pad_x = 0.1 * if extent.x > 0.0 { extent.x } else { diameter };
    let pad_y = 0.1 * if extent.y > 0.0 { extent.y } else { diameter };
    let (x0, y0) = (lo.x - pad_x, -(hi.y + pad_y));
    let (w, h) = (extent.x + 2.0 * pad_x, extent.y + 2.0 * pad_y);
    let stroke = diameter / 100.0;
    let marker = 3.0 * stroke;

    let mut out = String::new();
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0:.6} {y0:.6} {w:.6} {h:.6}" width="600" height="{:.0}">"#,
        600.0 * h / w
    )
    .unwrap();
    writeln!(
        out,
        r#"<g transform="scale(1,-1)" stroke="black" stroke-width="{stroke:.6}" stroke-linecap="round">"#
    )
    .unwrap();
    for e in spec.edges() {
        let (a, b) = (positions[e.a], positions[e.b]);
        writeln!(
            out,
            r#"<line class="bar" x1="{:.6}" y1="{:.6}" x2="{:.6}" y2="{:.6}"/>"#,
            a.x, a.y, b.x, b.y
        )
        .unwrap();
    }
    for d in spec.diagonals() {
        let (a, b) = (positions[d.a], positions[d.b]);
        writeln!(
            out,
            r#"<line class="diagonal" x1="{:.6}" y1="{:.6}" x2="{:.6}" y2="{:.6}" stroke="gray" stroke-dasharray="{:.6} {:.6}"/>"#,
            a.x,
            a.y,
            b.x,
            b.y,
            4.0 * stroke,
            3.0 * stroke
        )
        .unwrap();
    }
    for (v, p) in positions.iter().enumerate() {
        if spec.is_base(v) {
            writeln!(
                out,
                r#"<rect class="base" x="{:.6}" y="{:.6}" width="{:.6}" height="{:.6}" fill="black"/>"#,
                p.x - marker,
                p.y - marker,
                2.0 * marker,
                2.0 * marker
            )
            .unwrap();
        } else {
            writeln!(
                out,
                r#"<circle class="joint" cx="{:.6}" cy="{:.6}" r="{:.6}" fill="white"/>"#,
                p.x, p.y, marker
            )
            .unwrap();
        }
    }
    writeln!(out, "</g>").unwrap();
    for (v, p) in positions.iter().enumerate() {
        writeln!(
            out,
            r#"<text x="{:.6}" y="{:.6}" font-size="{:.6}">{}</text>"#,
            p.x + 1.5 * marker,
            -p.y - 1.5 * marker,
            5.0 * marker,
            spec.name(v)
        )
        .unwrap();
    }
    writeln!(out, "</svg>").unwrap();
    out
}
