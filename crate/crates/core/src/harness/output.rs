use std::path::Path;

use image::{Rgb, RgbImage};

use super::sweep::{Metric, RateGrid, SweepRecord, SweepResult};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "beta1,beta2,replication,seed,unserved1,unserved2,served1,arrived1,served2,arrived2,final_q_total,final_d_total";

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

/// Writes one row per record; an empty result gives a header-only file.
pub fn write_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    w.write_record(CSV_HEADER.split(',')).map_err(|e| csv_error(path, e))?;
    for r in &result.records {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<SweepResult> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "unexpected CSV header".into(),
        });
    }
    let records = r
        .deserialize::<SweepRecord>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| csv_error(path, e))?;
    Ok(SweepResult {
        records,
        failures: Vec::new(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatmapOptions {
    /// Side of one grid cell in pixels.
    pub cell_px: u32,
    /// Draws the line `beta1 + beta2 = bound`.
    pub bound: Option<f64>,
}

impl Default for HeatmapOptions {
    fn default() -> Self {
        HeatmapOptions {
            cell_px: 24,
            bound: None,
        }
    }
}

// Samples of the viridis colormap, evenly spaced over [0, 1].
const PALETTE: [[u8; 3]; 9] = [
    [68, 1, 84],
    [71, 44, 122],
    [59, 81, 139],
    [44, 113, 142],
    [33, 144, 141],
    [39, 173, 129],
    [92, 200, 99],
    [170, 220, 50],
    [253, 231, 37],
];

const MISSING: Rgb<u8> = Rgb([128, 128, 128]);
const LINE: Rgb<u8> = Rgb([255, 255, 255]);

fn color(v: f64) -> Rgb<u8> {
    if v.is_nan() {
        return MISSING;
    }
    let x = v.clamp(0.0, 1.0) * (PALETTE.len() - 1) as f64;
    let i = (x.floor() as usize).min(PALETTE.len() - 2);
    let f = x - i as f64;
    let (a, b) = (PALETTE[i], PALETTE[i + 1]);
    Rgb(std::array::from_fn(|k| {
        (a[k] as f64 + f * (b[k] as f64 - a[k] as f64)).round() as u8
    }))
}

/// Rasterizes a grid: beta1 to the right, beta2 upward.
pub fn heatmap_image(grid: &RateGrid, opts: &HeatmapOptions) -> RgbImage {
    let (n1, n2) = grid.shape();
    let px = opts.cell_px.max(1);
    let (w, h) = (n1 as u32 * px, n2 as u32 * px);
    let mut img = RgbImage::new(w, h);
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            let c = color(grid.get(i1, i2));
            let top = (n2 - 1 - i2) as u32 * px;
            for y in top..top + px {
                for x in i1 as u32 * px..(i1 as u32 + 1) * px {
                    img.put_pixel(x, y, c);
                }
            }
        }
    }
    if let Some(bound) = opts.bound {
        draw_diagonal(&mut img, grid, px, bound);
    }
    img
}

fn draw_diagonal(img: &mut RgbImage, grid: &RateGrid, px: u32, bound: f64) {
    let (n1, n2) = grid.shape();
    if n1 < 2 || n2 < 2 {
        return;
    }
    let step1 = (grid.beta1[n1 - 1] - grid.beta1[0]) / (n1 - 1) as f64;
    let step2 = (grid.beta2[n2 - 1] - grid.beta2[0]) / (n2 - 1) as f64;
    if step1 <= 0.0 || step2 <= 0.0 {
        return;
    }
    let half = px as f64 / 2.0;
    let (w, h) = img.dimensions();
    // One pixel column at a time, filling the vertical run between columns.
    let y_at = |x: f64| -> f64 {
        let b1 = grid.beta1[0] + (x - half) / px as f64 * step1;
        let b2 = bound - b1;
        let up = (b2 - grid.beta2[0]) / step2 * px as f64 + half;
        h as f64 - up
    };
    for x in 0..w {
        let (y0, y1) = (y_at(x as f64), y_at(x as f64 + 1.0));
        let (lo, hi) = (y0.min(y1).floor(), y0.max(y1).ceil());
        for y in lo as i64..=hi as i64 {
            if y >= 0 && (y as u32) < h {
                img.put_pixel(x, y as u32, LINE);
            }
        }
    }
}

/// Renders one metric of a sweep to an image file; the format follows the
/// extension.
pub fn render_heatmap(result: &SweepResult, path: &Path, metric: Metric, opts: &HeatmapOptions) -> Result<()> {
    if result.records.is_empty() {
        return Err(Error::Argument("cannot render an empty sweep".into()));
    }
    heatmap_image(&result.grid(metric), opts)
        .save(path)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Format {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n1: usize, n2: usize, f: impl Fn(usize, usize) -> f64) -> RateGrid {
        RateGrid {
            beta1: (0..n1).map(|i| i as f64 * 0.1).collect(),
            beta2: (0..n2).map(|i| i as f64 * 0.1).collect(),
            values: (0..n1 * n2).map(|k| f(k / n2, k % n2)).collect(),
        }
    }

    #[test]
    fn scale_is_monotone_in_brightness() {
        let luma = |c: Rgb<u8>| 0.299 * c[0] as f64 + 0.587 * c[1] as f64 + 0.114 * c[2] as f64;
        let mut last = -1.0;
        for k in 0..=100 {
            let l = luma(color(k as f64 / 100.0));
            assert!(l >= last - 0.5);
            last = l;
        }
        assert_eq!(color(-3.0), color(0.0));
        assert_eq!(color(7.0), color(1.0));
    }

    #[test]
    fn single_cell() {
        let img = heatmap_image(
            &grid(1, 1, |_, _| 0.0),
            &HeatmapOptions {
                cell_px: 1,
                bound: Some(1.0),
            },
        );
        assert_eq!(img.dimensions(), (1, 1));
        assert_eq!(*img.get_pixel(0, 0), color(0.0));
    }

    #[test]
    fn constant_grid_is_uniform() {
        let img = heatmap_image(
            &grid(3, 4, |_, _| 0.0),
            &HeatmapOptions {
                cell_px: 5,
                bound: None,
            },
        );
        assert_eq!(img.dimensions(), (15, 20));
        assert!(img.pixels().all(|p| *p == color(0.0)));
    }

    #[test]
    fn beta2_points_up() {
        let img = heatmap_image(
            &grid(1, 2, |_, i2| i2 as f64),
            &HeatmapOptions {
                cell_px: 1,
                bound: None,
            },
        );
        assert_eq!(*img.get_pixel(0, 0), color(1.0));
        assert_eq!(*img.get_pixel(0, 1), color(0.0));
    }

    #[test]
    fn diagonal_crosses_the_corners() {
        let img = heatmap_image(
            &grid(5, 5, |_, _| 0.0),
            &HeatmapOptions {
                cell_px: 4,
                bound: Some(0.4),
            },
        );
        // (0, 0.4) is the top-left cell centre, (0.4, 0) the bottom-right one.
        assert_eq!(*img.get_pixel(2, 2), LINE);
        assert_eq!(*img.get_pixel(18, 18), LINE);
        assert_eq!(*img.get_pixel(2, 18), color(0.0));
    }
}
