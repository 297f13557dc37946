//! Deterministic SVG rendering: class scatter plots and part previews.

use crate::disasm::PartMesh;
use crate::geometry::{classify_sides, SideKey};

use super::ReportError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;

/// One scatter point: position and class label.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    pub class: String,
}

/// Renders a class scatter in SVG 1.1.
///
/// Classes get distinct marker shapes in first-appearance-in-label-order:
/// circles, then squares, then triangles (cycling with distinct fills
/// beyond three). Output bytes are a pure function of the input.
pub fn render_scatter(
    points: &[ScatterPoint],
    x_label: &str,
    y_label: &str,
    class_order: &[String],
) -> Result<String, ReportError> {
    if points.is_empty() {
        return Err(ReportError::NoPoints);
    }
    for p in points {
        if !(p.x.is_finite() && p.y.is_finite()) {
            return Err(ReportError::NonFiniteCoordinate { x: p.x, y: p.y });
        }
    }

    let (x_min, x_max) = padded_range(points.iter().map(|p| p.x));
    let (y_min, y_max) = padded_range(points.iter().map(|p| p.y));
    let sx = |x: f64| MARGIN + (x - x_min) / (x_max - x_min) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y_min) / (y_max - y_min) * (HEIGHT - 2.0 * MARGIN);

    // Classes in caller-specified order; unknown labels go last,
    // alphabetically.
    let mut classes: Vec<&str> = Vec::new();
    for c in class_order {
        if points.iter().any(|p| &p.class == c) {
            classes.push(c);
        }
    }
    let mut extra: Vec<&str> = points
        .iter()
        .map(|p| p.class.as_str())
        .filter(|c| !classes.contains(c))
        .collect();
    extra.sort_unstable();
    extra.dedup();
    classes.extend(extra);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
        w = WIDTH,
        h = HEIGHT
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    ));
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN
    ));
    svg.push_str(&format!(
        "<text x=\"{x}\" y=\"{y}\" text-anchor=\"middle\" font-size=\"14\">{label}</text>\n",
        x = WIDTH / 2.0,
        y = HEIGHT - 12.0,
        label = escape(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{y}\" text-anchor=\"middle\" font-size=\"14\" \
         transform=\"rotate(-90 16 {y})\">{label}</text>\n",
        y = HEIGHT / 2.0,
        label = escape(y_label)
    ));
    // Range labels at the axis ends.
    svg.push_str(&format!(
        "<text x=\"{m}\" y=\"{y}\" font-size=\"11\">{v}</text>\n",
        m = MARGIN,
        y = HEIGHT - MARGIN + 16.0,
        v = round3(x_min)
    ));
    svg.push_str(&format!(
        "<text x=\"{x}\" y=\"{y}\" text-anchor=\"end\" font-size=\"11\">{v}</text>\n",
        x = WIDTH - MARGIN,
        y = HEIGHT - MARGIN + 16.0,
        v = round3(x_max)
    ));
    svg.push_str(&format!(
        "<text x=\"{x}\" y=\"{y}\" text-anchor=\"end\" font-size=\"11\">{v}</text>\n",
        x = MARGIN - 6.0,
        y = HEIGHT - MARGIN,
        v = round3(y_min)
    ));
    svg.push_str(&format!(
        "<text x=\"{x}\" y=\"{y}\" text-anchor=\"end\" font-size=\"11\">{v}</text>\n",
        x = MARGIN - 6.0,
        y = MARGIN + 4.0,
        v = round3(y_max)
    ));

    // Points, grouped by class for a stable element order.
    for (ci, class) in classes.iter().enumerate() {
        for p in points.iter().filter(|p| p.class == *class) {
            svg.push_str(&marker(ci, sx(p.x), sy(p.y)));
        }
    }

    // Legend.
    for (ci, class) in classes.iter().enumerate() {
        let lx = WIDTH - MARGIN - 110.0;
        let ly = MARGIN + 8.0 + 20.0 * ci as f64;
        svg.push_str(&marker(ci, lx, ly));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{y}\" font-size=\"12\">{label}</text>\n",
            x = lx + 12.0,
            y = ly + 4.0,
            label = escape(class)
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Marker shapes by class rank: circle, square, triangle (paper
/// iconography for good/medium/poor), cycling with alternate fills.
fn marker(class_rank: usize, x: f64, y: f64) -> String {
    let fills = ["black", "dimgray", "darkgray"];
    let fill = fills[(class_rank / 3) % fills.len()];
    match class_rank % 3 {
        0 => format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"5\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
            x, y, fill
        ),
        1 => format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"9\" height=\"9\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
            x - 4.5,
            y - 4.5,
            fill
        ),
        _ => format!(
            "<polygon points=\"{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
            x,
            y - 5.5,
            x - 5.0,
            y + 4.5,
            x + 5.0,
            y + 4.5,
            fill
        ),
    }
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in values {
        min = min.min(v);
        max = max.max(v);
    }
    if min == max {
        // Degenerate extent: pad to a visible range.
        let pad = if min == 0.0 { 1.0 } else { min.abs() * 0.1 };
        (min - pad, max + pad)
    } else {
        let pad = (max - min) * 0.05;
        (min - pad, max + pad)
    }
}

fn round3(v: f64) -> String {
    format!("{}", (v * 1000.0).round() / 1000.0)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Orthographic wireframe projections of a part onto the xy, xz, and yz
/// planes, in that order.
///
/// Each projection draws every distinct element side once, sorted by side
/// key, so the bytes are deterministic.
pub fn render_part_preview(part: &PartMesh) -> Result<[String; 3], ReportError> {
    if !part.has_surface_elements() {
        return Err(ReportError::NoSurfaceElements {
            part_id: part.part_id,
        });
    }
    // Any threshold works here: only side keys are needed, not classes.
    let classification =
        classify_sides(part, 20.0).map_err(|e| ReportError::Geometry(Box::new(e)))?;
    let sides: Vec<SideKey> = classification.sides.keys().copied().collect();

    type Project = fn(&[f64; 3]) -> (f64, f64);
    let planes: [(&str, Project); 3] = [
        ("xy", |c| (c[0], c[1])),
        ("xz", |c| (c[0], c[2])),
        ("yz", |c| (c[1], c[2])),
    ];
    let mut out: Vec<String> = Vec::with_capacity(3);
    for (name, project) in planes {
        let mut svg = String::new();
        let projected: Vec<((f64, f64), (f64, f64))> = sides
            .iter()
            .map(|key| {
                let (a, b) = key.nodes();
                (
                    project(&part.nodes[&a].coords()),
                    project(&part.nodes[&b].coords()),
                )
            })
            .collect();
        let (x_min, x_max) = padded_range(
            projected
                .iter()
                .flat_map(|(a, b)| [a.0, b.0].into_iter()),
        );
        let (y_min, y_max) = padded_range(
            projected
                .iter()
                .flat_map(|(a, b)| [a.1, b.1].into_iter()),
        );
        let size = 320.0;
        let scale = (size - 20.0) / (x_max - x_min).max(y_max - y_min);
        let sx = |x: f64| 10.0 + (x - x_min) * scale;
        let sy = |y: f64| size - 10.0 - (y - y_min) * scale;
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
             width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">\n",
            s = size
        ));
        svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        svg.push_str(&format!(
            "<text x=\"8\" y=\"16\" font-size=\"12\">part {} ({})</text>\n",
            part.part_id, name
        ));
        for ((ax, ay), (bx, by)) in &projected {
            svg.push_str(&format!(
                "<line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" \
                 stroke=\"black\" stroke-width=\"0.8\"/>\n",
                sx(*ax),
                sy(*ay),
                sx(*bx),
                sy(*by)
            ));
        }
        svg.push_str("</svg>\n");
        out.push(svg);
    }
    Ok([
        out[0].clone(),
        out[1].clone(),
        out[2].clone(),
    ])
}
