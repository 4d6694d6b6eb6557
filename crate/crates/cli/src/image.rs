//! Qualitative PNG emission: latent grids rendered as RGB panels and a
//! small rasterized line chart for the guidance sweep.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use recat_core::LatentGrid;

use crate::error::{CliError, Result};

/// Plain RGB8 raster.
pub struct Canvas {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Canvas {
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let mut pixels = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            pixels.extend_from_slice(&rgb);
        }
        Self { width, height, pixels }
    }

    pub fn set(&mut self, x: i64, y: i64, rgb: [u8; 3]) {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return;
        }
        let i = (y as usize * self.width + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn fill_rect(&mut self, x: i64, y: i64, w: usize, h: usize, rgb: [u8; 3]) {
        for dy in 0..h as i64 {
            for dx in 0..w as i64 {
                self.set(x + dx, y + dy, rgb);
            }
        }
    }

    pub fn line(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, rgb: [u8; 3]) {
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        loop {
            self.set(x, y, rgb);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    pub fn text(&mut self, x: i64, y: i64, s: &str, scale: usize, rgb: [u8; 3]) {
        let mut cx = x;
        for ch in s.chars() {
            let rows = glyph(ch);
            for (ry, bits) in rows.iter().enumerate() {
                for rx in 0..5 {
                    if bits >> (4 - rx) & 1 == 1 {
                        self.fill_rect(
                            cx + (rx * scale) as i64,
                            y + (ry * scale) as i64,
                            scale,
                            scale,
                            rgb,
                        );
                    }
                }
            }
            cx += (6 * scale) as i64;
        }
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut enc = png::Encoder::new(BufWriter::new(file), self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc
            .write_header()
            .map_err(|e| CliError::Format(format!("png: {e}")))?;
        writer
            .write_image_data(&self.pixels)
            .map_err(|e| CliError::Format(format!("png: {e}")))?;
        Ok(())
    }
}

/// Text width in pixels for [`Canvas::text`].
pub fn text_width(s: &str, scale: usize) -> usize {
    s.chars().count() * 6 * scale
}

/// 5×7 glyphs for the handful of characters the charts and grids need.
fn glyph(ch: char) -> [u8; 7] {
    match ch {
        '0' => [0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e],
        '1' => [0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e],
        '2' => [0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f],
        '3' => [0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e],
        '4' => [0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02],
        '5' => [0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e],
        '6' => [0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e],
        '7' => [0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
        '8' => [0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e],
        '9' => [0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c],
        '.' => [0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c],
        '-' => [0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00],
        '_' => [0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1f],
        ' ' => [0x00; 7],
        'a' => [0x00, 0x00, 0x0e, 0x01, 0x0f, 0x11, 0x0f],
        'c' => [0x00, 0x00, 0x0e, 0x10, 0x10, 0x11, 0x0e],
        'd' => [0x01, 0x01, 0x0f, 0x11, 0x11, 0x11, 0x0f],
        'e' => [0x00, 0x00, 0x0e, 0x11, 0x1f, 0x10, 0x0e],
        'g' => [0x00, 0x0f, 0x11, 0x11, 0x0f, 0x01, 0x0e],
        'i' => [0x04, 0x00, 0x0c, 0x04, 0x04, 0x04, 0x0e],
        'k' => [0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12],
        'm' => [0x00, 0x00, 0x1a, 0x15, 0x15, 0x15, 0x15],
        'n' => [0x00, 0x00, 0x16, 0x19, 0x11, 0x11, 0x11],
        'o' => [0x00, 0x00, 0x0e, 0x11, 0x11, 0x11, 0x0e],
        'p' => [0x00, 0x00, 0x1e, 0x11, 0x1e, 0x10, 0x10],
        'r' => [0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10],
        's' => [0x00, 0x00, 0x0f, 0x10, 0x0e, 0x01, 0x1e],
        't' => [0x08, 0x08, 0x1c, 0x08, 0x08, 0x09, 0x06],
        'u' => [0x00, 0x00, 0x11, 0x11, 0x11, 0x13, 0x0d],
        'v' => [0x00, 0x00, 0x11, 0x11, 0x11, 0x0a, 0x04],
        'F' => [0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x10],
        'I' => [0x0e, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e],
        'D' => [0x1e, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1e],
        _ => [0x1f, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1f],
    }
}

fn to_byte(v: f64) -> u8 {
    (((v.clamp(-1.0, 1.0) + 1.0) / 2.0) * 255.0).round() as u8
}

/// Map latent channels 0–2 linearly from [−1, 1] to RGB; grayscale from
/// channel 0 when fewer than three channels exist.
pub fn latent_rgb(g: &LatentGrid, h: usize, w: usize) -> [u8; 3] {
    let (c, _, _) = g.shape();
    if c >= 3 {
        [
            to_byte(g.get(0, h, w)),
            to_byte(g.get(1, h, w)),
            to_byte(g.get(2, h, w)),
        ]
    } else {
        let v = to_byte(g.get(0, h, w));
        [v, v, v]
    }
}

const CELL_SCALE: usize = 12;
const GUTTER: usize = 2;
const BG: [u8; 3] = [236, 236, 236];

/// Side-by-side grid: one row per sample, one column per panel, each
/// latent pixel blown up to a CELL_SCALE square.
pub fn panel_grid(rows: &[Vec<&LatentGrid>]) -> Result<Canvas> {
    let n_rows = rows.len();
    let n_cols = rows.first().map_or(0, Vec::len);
    if n_rows == 0 || n_cols == 0 {
        return Err(CliError::Shape("panel grid needs at least one cell".into()));
    }
    let (_, gh, gw) = rows[0][0].shape();
    let cell_w = gw * CELL_SCALE;
    let cell_h = gh * CELL_SCALE;
    let width = n_cols * cell_w + (n_cols + 1) * GUTTER;
    let height = n_rows * cell_h + (n_rows + 1) * GUTTER;
    let mut canvas = Canvas::filled(width, height, BG);
    for (r, row) in rows.iter().enumerate() {
        for (c, g) in row.iter().enumerate() {
            let (_, h, w) = g.shape();
            if (h, w) != (gh, gw) {
                return Err(CliError::Shape("panel grid cells disagree on size".into()));
            }
            let x0 = (GUTTER + c * (cell_w + GUTTER)) as i64;
            let y0 = (GUTTER + r * (cell_h + GUTTER)) as i64;
            for ph in 0..h {
                for pw in 0..w {
                    canvas.fill_rect(
                        x0 + (pw * CELL_SCALE) as i64,
                        y0 + (ph * CELL_SCALE) as i64,
                        CELL_SCALE,
                        CELL_SCALE,
                        latent_rgb(g, ph, pw),
                    );
                }
            }
        }
    }
    Ok(canvas)
}

pub struct Series<'a> {
    pub label: &'a str,
    pub color: [u8; 3],
    /// (x, y) points, already sorted by x.
    pub points: Vec<(f64, f64)>,
}

/// Rasterized line chart with labeled axes, used for the ω-sweep plot.
pub fn line_chart(series: &[Series<'_>], x_label: &str, y_label: &str) -> Result<Canvas> {
    if series.is_empty() || series.iter().any(|s| s.points.is_empty()) {
        return Err(CliError::Shape("chart needs at least one point per series".into()));
    }
    let (width, height) = (640usize, 420usize);
    let (left, right, top, bottom) = (78i64, 24i64, 34i64, 52i64);
    let (x0, y0) = (left, height as i64 - bottom);
    let (x1, y1) = (width as i64 - right, top);
    let mut canvas = Canvas::filled(width, height, [255, 255, 255]);

    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    if xmax == xmin {
        xmax = xmin + 1.0;
    }
    if ymax == ymin {
        ymax = ymin + 1.0;
    }
    let pad = 0.06 * (ymax - ymin);
    let (ymin, ymax) = (ymin - pad, ymax + pad);
    let px = |x: f64| x0 + ((x - xmin) / (xmax - xmin) * (x1 - x0) as f64).round() as i64;
    let py = |y: f64| y0 - ((y - ymin) / (ymax - ymin) * (y0 - y1) as f64).round() as i64;

    let axis = [40, 40, 40];
    canvas.line(x0, y0, x1, y0, axis);
    canvas.line(x0, y0, x0, y1, axis);
    canvas.text(
        (x0 + (x1 - x0) / 2 - text_width(x_label, 2) as i64 / 2).max(0),
        height as i64 - 24,
        x_label,
        2,
        axis,
    );
    canvas.text(6, 8, y_label, 2, axis);

    // x ticks at each distinct x in the first series
    for &(x, _) in &series[0].points {
        let tx = px(x);
        canvas.line(tx, y0, tx, y0 + 4, axis);
        let label = trim_float(x);
        canvas.text(tx - text_width(&label, 1) as i64 / 2, y0 + 8, &label, 1, axis);
    }
    // five y ticks
    for k in 0..=4 {
        let yv = ymin + (ymax - ymin) * k as f64 / 4.0;
        let ty = py(yv);
        canvas.line(x0 - 4, ty, x0, ty, axis);
        let label = trim_float_sig(yv);
        canvas.text(x0 - 8 - text_width(&label, 1) as i64, ty - 3, &label, 1, axis);
    }

    for s in series {
        for pair in s.points.windows(2) {
            canvas.line(
                px(pair[0].0),
                py(pair[0].1),
                px(pair[1].0),
                py(pair[1].1),
                s.color,
            );
        }
        for &(x, y) in &s.points {
            canvas.fill_rect(px(x) - 2, py(y) - 2, 5, 5, s.color);
        }
    }

    let mut ly = y1 + 6;
    for s in series {
        let lx = x1 - 10 - text_width(s.label, 1) as i64 - 14;
        canvas.fill_rect(lx, ly, 10, 7, s.color);
        canvas.text(lx + 14, ly, s.label, 1, axis);
        ly += 14;
    }
    Ok(canvas)
}

fn trim_float(x: f64) -> String {
    let s = format!("{x:.1}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

fn trim_float_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs();
    if (0.01..1000.0).contains(&mag) {
        format!("{x:.3}")
    } else {
        format!("{x:.2e}")
    }
}
