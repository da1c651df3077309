//! Visual encoding of an aggregated CAM: each feature becomes a square
//! centred in its grid cell. Fill color encodes impact on a blue-white-red
//! diverging map; square area shrinks linearly with variability, down to a
//! minimum so the color stays visible. The grid wraps row-major like lines
//! of text.
//!
//! These formulas are shared by the SVG exporter and the browser UI.

use std::fmt::Write;

use crate::aggregate::AggregatedCam;
use crate::error::{Error, Result};

pub const COLOR_NEGATIVE: [u8; 3] = [0x3b, 0x4c, 0xc0];
pub const COLOR_NEUTRAL: [u8; 3] = [0xf7, 0xf7, 0xf7];
pub const COLOR_POSITIVE: [u8; 3] = [0xb4, 0x04, 0x26];

pub const DEFAULT_WRAP_WIDTH: usize = 150;
pub const DEFAULT_CELL_SIZE: f64 = 10.0;
pub const DEFAULT_MIN_AREA_FRACTION: f64 = 0.04;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub wrap_width: usize,
    pub cell_size: f64,
    pub min_area_fraction: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            wrap_width: DEFAULT_WRAP_WIDTH,
            cell_size: DEFAULT_CELL_SIZE,
            min_area_fraction: DEFAULT_MIN_AREA_FRACTION,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.wrap_width == 0 {
            return Err(Error::InvalidConfig("wrap width must be >= 1".into()));
        }
        if !(self.cell_size > 0.0) || !self.cell_size.is_finite() {
            return Err(Error::InvalidConfig("cell size must be positive".into()));
        }
        if !(self.min_area_fraction > 0.0 && self.min_area_fraction < 1.0) {
            return Err(Error::InvalidConfig("minimum area fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn rows(&self, length: usize) -> usize {
        length.div_ceil(self.wrap_width)
    }
}

/// Diverging colormap: -1 blue, 0 white, +1 red, linear in RGB on each half.
pub fn impact_color(impact: f64) -> [u8; 3] {
    let t = if impact.is_nan() { 0.0 } else { impact.clamp(-1.0, 1.0) };
    let (end, f) = if t < 0.0 { (COLOR_NEGATIVE, -t) } else { (COLOR_POSITIVE, t) };
    let mut rgb = [0u8; 3];
    for i in 0..3 {
        let a = f64::from(COLOR_NEUTRAL[i]);
        let b = f64::from(end[i]);
        rgb[i] = (a + (b - a) * f).round() as u8;
    }
    rgb
}

pub fn hex_color(rgb: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2])
}

/// Side length of the square: area fraction is
/// `min_area + (1 - variability) * (1 - min_area)`.
pub fn square_side(variability: f64, spec: &GridSpec) -> f64 {
    let v = if variability.is_nan() { 1.0 } else { variability.clamp(0.0, 1.0) };
    let m = spec.min_area_fraction;
    spec.cell_size * (m + (1.0 - v) * (1.0 - m)).sqrt()
}

/// Static SVG of the glyph grid: one `<rect>` per feature, with a `<title>`
/// tooltip carrying index, impact and variability.
pub fn render_svg(cam: &AggregatedCam, spec: &GridSpec) -> Result<String> {
    spec.validate()?;
    if cam.impact.len() != cam.variability.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} impact values but {} variability values",
            cam.impact.len(),
            cam.variability.len()
        )));
    }
    let length = cam.impact.len();
    let cols = spec.wrap_width.min(length.max(1));
    let width = cols as f64 * spec.cell_size;
    let height = spec.rows(length) as f64 * spec.cell_size;
    let mut svg = String::with_capacity(160 * length + 256);
    let _ = writeln!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" style="background:#ffffff" data-class="{}" data-agg="{}" data-var="{}">"##,
        cam.class_index, cam.agg_method, cam.var_method
    );
    for (i, (&impact, &var)) in cam.impact.iter().zip(&cam.variability).enumerate() {
        let side = square_side(var, spec);
        let inset = (spec.cell_size - side) / 2.0;
        let x = (i % spec.wrap_width) as f64 * spec.cell_size + inset;
        let y = (i / spec.wrap_width) as f64 * spec.cell_size + inset;
        let _ = writeln!(
            svg,
            r##"<rect x="{x:.4}" y="{y:.4}" width="{side:.4}" height="{side:.4}" fill="{}"><title>feature {i}: impact {impact:.4}, variability {var:.4}</title></rect>"##,
            hex_color(impact_color(impact))
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
