//! CSV, JSON and SVG outputs of a run.
//!
//! All CSV numbers are printed with `{:.16e}` (17 significant digits) and
//! read back to the identical `f64`. Not-applicable history cells are empty.

use std::fmt::Write as _;
use std::path::Path;

use disco_core::domains::{bounding_box, BoundingBox, GaussianMixture, LabeledBatch};
use disco_core::metrics::{AssignmentMatrix, CoverageReport, LandscapeGrid};
use disco_core::trainer::History;
use disco_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};

pub const HISTORY_HEADER: [&str; 9] = [
    "iteration",
    "l_gan_b",
    "l_const_a",
    "l_gan_a",
    "l_const_b",
    "l_g_total",
    "l_d_a",
    "l_d_b",
    "l_d_total",
];

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).at(path)?;
    Ok(csv::Writer::from_writer(file))
}

pub fn write_history_csv(history: &History, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(HISTORY_HEADER)?;
    for r in history.reports() {
        w.write_record([
            r.iteration.to_string(),
            num(r.l_gan_b),
            opt(r.l_const_a),
            opt(r.l_gan_a),
            opt(r.l_const_b),
            num(r.l_g_total),
            opt(r.l_d_a),
            num(r.l_d_b),
            num(r.l_d_total),
        ])?;
    }
    w.flush().at(path)
}

pub fn write_assignment_csv(am: &AssignmentMatrix, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["a_mode", "b_mode", "mass"])?;
    for i in 0..am.source_modes() {
        for j in 0..am.target_modes() {
            w.write_record([i.to_string(), j.to_string(), num(am.get(i, j))])?;
        }
    }
    w.flush().at(path)
}

fn bad_csv(path: &Path, message: String) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, message),
    }
}

/// Reads a dense `assignment.csv` back. The per-mode sample count is not
/// stored in the file and must be supplied.
pub fn read_assignment_csv(path: &Path, samples_per_mode: usize) -> Result<AssignmentMatrix> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut cells = Vec::new();
    for rec in rdr.deserialize() {
        let (i, j, mass): (usize, usize, f64) = rec?;
        cells.push((i, j, mass));
    }
    let rows = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
    let cols = cells.iter().map(|c| c.1 + 1).max().unwrap_or(0);
    if cells.len() != rows * cols {
        return Err(bad_csv(
            path,
            format!("{} cells for a {rows}x{cols} matrix", cells.len()),
        ));
    }
    let mut m = Matrix::zeros(rows, cols);
    for (i, j, mass) in cells {
        m[(i, j)] = mass;
    }
    Ok(AssignmentMatrix::new(m, samples_per_mode)?)
}

/// Rows in grid order: `x` varies fastest.
pub fn write_landscape_csv(grid: &LandscapeGrid, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["x", "y", "d_value"])?;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let p = grid.point(i, j);
            w.write_record([num(p[0]), num(p[1]), num(grid.value(i, j))])?;
        }
    }
    w.flush().at(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageJson {
    pub covered_modes: usize,
    pub target_modes: usize,
    pub coverage_fraction: f64,
    pub collapse_count: usize,
    /// Most frequent target mode for each source mode.
    pub argmax: Vec<usize>,
}

impl CoverageJson {
    pub fn new(am: &AssignmentMatrix, report: &CoverageReport) -> Self {
        CoverageJson {
            covered_modes: report.covered_modes,
            target_modes: am.target_modes(),
            coverage_fraction: report.coverage_fraction,
            collapse_count: report.collapse_count,
            argmax: am.row_argmax(),
        }
    }
}

/// Contents of `coverage.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageFile {
    pub tau: f64,
    pub samples_per_mode: usize,
    pub a_to_b: CoverageJson,
    pub b_to_a: Option<CoverageJson>,
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).at(path)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).at(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Colours for source modes 0..5; later modes reuse them cyclically.
pub const PALETTE: [&str; 5] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"];

pub const SVG_SIZE: f64 = 600.0;
pub const SVG_PAD: f64 = 20.0;

/// Data-to-pixel map of the scatter plot. The bounding box fills the square
/// `[PAD, SIZE - PAD]²`; `y` points up:
///
/// ```text
/// px = PAD + (x - min_x) / (max_x - min_x) * (SIZE - 2 PAD)
/// py = PAD + (max_y - y) / (max_y - min_y) * (SIZE - 2 PAD)
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewport {
    pub bbox: BoundingBox,
}

impl Viewport {
    pub fn for_domain(mix_b: &GaussianMixture, margin: f64) -> Self {
        Viewport {
            bbox: bounding_box(mix_b, margin),
        }
    }

    pub fn to_pixel(&self, p: [f64; 2]) -> (f64, f64) {
        let span = SVG_SIZE - 2.0 * SVG_PAD;
        let b = &self.bbox;
        let px = SVG_PAD + (p[0] - b.min[0]) / b.width() * span;
        let py = SVG_PAD + (b.max[1] - p[1]) / b.height() * span;
        (px, py)
    }
}

/// Grey level for a discriminator value: 55 (dark) at 0 up to 255 (white)
/// at 1, so the coloured circles stay visible everywhere.
pub fn landscape_grey(d: f64) -> u8 {
    (55.0 + 200.0 * d.clamp(0.0, 1.0)).round() as u8
}

fn push_landscape(svg: &mut String, vp: &Viewport, grid: &LandscapeGrid) {
    // Each grid value paints the cell centred on its sample point; runs of
    // equal grey along a row are merged into one rectangle.
    let dx = grid.bbox.width() / (grid.nx - 1) as f64;
    let dy = grid.bbox.height() / (grid.ny - 1) as f64;
    svg.push_str(
        "<g class=\"landscape\" clip-path=\"url(#plot)\" shape-rendering=\"crispEdges\">\n",
    );
    for j in 0..grid.ny {
        let mut i = 0;
        while i < grid.nx {
            let g = landscape_grey(grid.value(i, j));
            let mut end = i + 1;
            while end < grid.nx && landscape_grey(grid.value(end, j)) == g {
                end += 1;
            }
            let p0 = grid.point(i, j);
            let p1 = grid.point(end - 1, j);
            let (x0, y0) = vp.to_pixel([p0[0] - dx / 2.0, p0[1] + dy / 2.0]);
            let (x1, y1) = vp.to_pixel([p1[0] + dx / 2.0, p1[1] - dy / 2.0]);
            let _ = writeln!(
                svg,
                "<rect x=\"{x0:.2}\" y=\"{y0:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"rgb({g},{g},{g})\"/>",
                x1 - x0,
                y1 - y0
            );
            i = end;
        }
    }
    svg.push_str("</g>\n");
}

/// Renders translated points (labelled by source mode) over the modes of
/// `mix_b`. Each B mode gets an `x` glyph; each point a filled circle in
/// `PALETTE[label % 5]`.
pub fn render_scatter_svg(
    points: &LabeledBatch,
    mix_b: &GaussianMixture,
    landscape: Option<&LandscapeGrid>,
    margin: f64,
) -> Result<String> {
    if !points.points.is_finite() {
        return Err(disco_core::Error::Numeric("scatter points must be finite".into()).into());
    }
    let vp = Viewport::for_domain(mix_b, margin);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_SIZE}\" height=\"{SVG_SIZE}\" viewBox=\"0 0 {SVG_SIZE} {SVG_SIZE}\">"
    );
    let span = SVG_SIZE - 2.0 * SVG_PAD;
    let _ = writeln!(
        svg,
        "<defs><clipPath id=\"plot\"><rect x=\"{SVG_PAD}\" y=\"{SVG_PAD}\" width=\"{span}\" height=\"{span}\"/></clipPath></defs>"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{SVG_SIZE}\" height=\"{SVG_SIZE}\" fill=\"white\"/>"
    );
    if let Some(grid) = landscape {
        push_landscape(&mut svg, &vp, grid);
    }
    let _ = writeln!(
        svg,
        "<rect class=\"axes\" x=\"{SVG_PAD}\" y=\"{SVG_PAD}\" width=\"{span}\" height=\"{span}\" fill=\"none\" stroke=\"black\"/>"
    );

    svg.push_str("<g class=\"samples\" clip-path=\"url(#plot)\" fill-opacity=\"0.6\">\n");
    for (k, &label) in points.labels.iter().enumerate() {
        let row = points.points.row(k);
        let (cx, cy) = vp.to_pixel([row[0], row[1]]);
        let colour = PALETTE[label % PALETTE.len()];
        let _ = writeln!(svg, "<circle cx=\"{cx:.3}\" cy=\"{cy:.3}\" r=\"2.5\" fill=\"{colour}\" data-mode=\"{label}\"/>");
    }
    svg.push_str("</g>\n");

    svg.push_str("<g class=\"modes\" stroke=\"black\" stroke-width=\"2\">\n");
    for (j, mode) in mix_b.modes().iter().enumerate() {
        let (x, y) = vp.to_pixel(mode.mean);
        let s = 6.0;
        let _ = writeln!(
            svg,
            "<path class=\"mode\" data-mode=\"{j}\" d=\"M{:.3} {:.3}L{:.3} {:.3}M{:.3} {:.3}L{:.3} {:.3}\"/>",
            x - s,
            y - s,
            x + s,
            y + s,
            x - s,
            y + s,
            x + s,
            y - s
        );
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}

pub fn write_scatter_svg(
    points: &LabeledBatch,
    mix_b: &GaussianMixture,
    landscape: Option<&LandscapeGrid>,
    margin: f64,
    path: &Path,
) -> Result<()> {
    let svg = render_scatter_svg(points, mix_b, landscape, margin)?;
    std::fs::write(path, svg).at(path)
}
