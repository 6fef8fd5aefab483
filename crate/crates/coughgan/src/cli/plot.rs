//! Deterministic PNG rendering: training-history curves and grayscale
//! spectrogram grids. Rasterization is integer Bresenham on a fixed canvas,
//! so reruns are byte-identical.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};

const MARGIN: u32 = 10;
const PALETTE: [[u8; 3]; 8] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [127, 127, 127],
];

/// One named series of y-values indexed by position.
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

/// Parses a history CSV (header row + numeric columns) into per-column
/// series. A leading `epoch` column is treated as the index and dropped.
pub fn parse_history_csv(path: &Path) -> Result<Vec<Series>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Format(format!("bad CSV header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::Format(format!("bad CSV row {}: {e}", i + 1)))?;
        for (c, field) in row.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Format(format!("non-numeric value {field:?} in row {}", i + 1)))?;
            columns[c].push(v);
        }
    }
    Ok(headers
        .into_iter()
        .zip(columns)
        .filter(|(name, _)| name != "epoch")
        .map(|(name, values)| Series { name, values })
        .collect())
}

fn draw_line(img: &mut RgbImage, x0: i64, y0: i64, x1: i64, y1: i64, color: Rgb<u8>) {
    let (mut x, mut y) = (x0, y0);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
            img.put_pixel(x as u32, y as u32, color);
        }
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

/// Renders every series into one 800x480 chart with shared x (index) and a
/// y-range spanning all finite values.
pub fn render_curves(series: &[Series], path: &Path) -> Result<()> {
    if series.is_empty() || series.iter().all(|s| s.values.is_empty()) {
        return Err(Error::Format("no series to plot".into()));
    }
    let (width, height) = (800u32, 480u32);
    let mut img = RgbImage::from_pixel(width, height, Rgb([255, 255, 255]));

    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    let mut x_max = 1usize;
    for s in series {
        x_max = x_max.max(s.values.len().saturating_sub(1)).max(1);
        for &v in &s.values {
            if v.is_finite() {
                y_min = y_min.min(v);
                y_max = y_max.max(v);
            }
        }
    }
    if !y_min.is_finite() {
        return Err(Error::Format("no finite values to plot".into()));
    }
    if y_max == y_min {
        y_max = y_min + 1.0;
    }

    let plot_w = (width - 2 * MARGIN) as f64;
    let plot_h = (height - 2 * MARGIN) as f64;
    let to_px = |i: usize, v: f64| -> (i64, i64) {
        let x = MARGIN as f64 + plot_w * i as f64 / x_max as f64;
        let y = MARGIN as f64 + plot_h * (1.0 - (v - y_min) / (y_max - y_min));
        (x.round() as i64, y.round() as i64)
    };

    // axes
    let axis = Rgb([0, 0, 0]);
    draw_line(
        &mut img,
        MARGIN as i64,
        MARGIN as i64,
        MARGIN as i64,
        (height - MARGIN) as i64,
        axis,
    );
    draw_line(
        &mut img,
        MARGIN as i64,
        (height - MARGIN) as i64,
        (width - MARGIN) as i64,
        (height - MARGIN) as i64,
        axis,
    );

    for (si, s) in series.iter().enumerate() {
        let color = Rgb(PALETTE[si % PALETTE.len()]);
        for i in 1..s.values.len() {
            let (x0, y0) = to_px(i - 1, s.values[i - 1]);
            let (x1, y1) = to_px(i, s.values[i]);
            draw_line(&mut img, x0, y0, x1, y1, color);
        }
        // series swatch in the top-left corner, one row per series
        let sy = MARGIN + 4 + 6 * si as u32;
        for dx in 0..24 {
            if sy < height && MARGIN + 4 + dx < width {
                img.put_pixel(MARGIN + 4 + dx, sy, color);
            }
        }
    }

    img.save(path)
        .map_err(|e| Error::Format(format!("cannot write {}: {e}", path.display())))
}

/// Renders spectrogram records (each `rows x cols`, values in [lo, hi]) into
/// a grayscale grid, 4 cells per row, each pixel scaled up 4x.
pub fn render_spectrogram_grid(
    records: &[(&str, &[f64])],
    rows: usize,
    cols: usize,
    lo: f64,
    hi: f64,
    path: &Path,
) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Format("no spectrograms to plot".into()));
    }
    let scale = 4u32;
    let grid_cols = records.len().min(4);
    let grid_rows = records.len().div_ceil(4);
    let pad = 2u32;
    let cell_w = cols as u32 * scale;
    let cell_h = rows as u32 * scale;
    let width = grid_cols as u32 * (cell_w + pad) + pad;
    let height = grid_rows as u32 * (cell_h + pad) + pad;
    let mut img = RgbImage::from_pixel(width, height, Rgb([32, 32, 32]));

    for (idx, (_, values)) in records.iter().enumerate() {
        if values.len() != rows * cols {
            return Err(Error::Shape {
                expected: vec![rows, cols],
                got: vec![values.len()],
                context: "spectrogram record".into(),
            });
        }
        let gx = (idx % 4) as u32 * (cell_w + pad) + pad;
        let gy = (idx / 4) as u32 * (cell_h + pad) + pad;
        for r in 0..rows {
            for c in 0..cols {
                let v = values[r * cols + c].clamp(lo, hi);
                let level = ((v - lo) / (hi - lo) * 255.0).round() as u8;
                // low mel bands at the bottom, like the usual orientation
                let py = gy + (rows - 1 - r) as u32 * scale;
                let px = gx + c as u32 * scale;
                for dy in 0..scale {
                    for dx in 0..scale {
                        img.put_pixel(px + dx, py + dy, Rgb([level, level, level]));
                    }
                }
            }
        }
    }
    img.save(path)
        .map_err(|e| Error::Format(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn curves_render_deterministically() {
        let dir = tempfile::tempdir().unwrap();
        let series = vec![
            Series {
                name: "loss".into(),
                values: (0..1000).map(|i| (i as f64 * 0.01).sin()).collect(),
            },
            Series {
                name: "acc".into(),
                values: (0..1000).map(|i| i as f64 / 1000.0).collect(),
            },
        ];
        let a = dir.path().join("a.png");
        let b = dir.path().join("b.png");
        render_curves(&series, &a).unwrap();
        render_curves(&series, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn history_csv_parses_and_drops_epoch_column() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "epoch,loss,acc").unwrap();
        writeln!(f, "0,0.5,0.7").unwrap();
        writeln!(f, "1,0.4,0.8").unwrap();
        f.flush().unwrap();
        let series = parse_history_csv(f.path()).unwrap();
        assert_eq!(series.len(), 2);
        assert_eq!(series[0].name, "loss");
        assert_eq!(series[0].values, vec![0.5, 0.4]);
    }

    #[test]
    fn malformed_csv_is_a_format_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "epoch,loss").unwrap();
        writeln!(f, "0,not_a_number").unwrap();
        f.flush().unwrap();
        assert!(matches!(
            parse_history_csv(f.path()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn eight_records_make_a_two_by_four_grid() {
        let dir = tempfile::tempdir().unwrap();
        let values = vec![-40.0; 128 * 24];
        let records: Vec<(&str, &[f64])> = (0..8).map(|_| ("r", values.as_slice())).collect();
        let path = dir.path().join("grid.png");
        render_spectrogram_grid(&records, 128, 24, -80.0, 0.0, &path).unwrap();
        let img = image::open(&path).unwrap();
        // 4 cells wide, 2 tall with 2px padding and 4x upscale
        assert_eq!(img.width(), 4 * (24 * 4 + 2) + 2);
        assert_eq!(img.height(), 2 * (128 * 4 + 2) + 2);
    }
}
