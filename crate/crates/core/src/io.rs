//! Image, mask and energy-trace files. PNG and PGM/PPM are supported.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, ImageGrid};
use crate::solver::EnergyTrace;

/// Highlight color for mask boundaries in overlays.
pub const BOUNDARY_COLOR: [u8; 3] = [255, 0, 0];

fn image_err(path: &Path) -> impl FnOnce(image::ImageError) -> Error + '_ {
    move |source| match source {
        image::ImageError::IoError(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        source => Error::Image {
            path: path.to_path_buf(),
            source,
        },
    }
}

fn format_for(path: &Path) -> Result<ImageFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("png") => Ok(ImageFormat::Png),
        Some("pgm" | "ppm" | "pnm" | "pbm") => Ok(ImageFormat::Pnm),
        _ => Err(Error::UnsupportedImage {
            path: path.to_path_buf(),
            message: "expected a .png, .pgm or .ppm file".into(),
        }),
    }
}

/// Decodes a grayscale or color image and rescales it to `[0, 1]`.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageGrid> {
    let path = path.as_ref();
    format_for(path)?;
    let img = image::open(path).map_err(image_err(path))?;
    decode(img)
}

fn decode(img: DynamicImage) -> Result<ImageGrid> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let color = img.color();
    let sixteen = color.bytes_per_pixel() / color.channel_count().max(1) >= 2;
    match (color.has_color(), sixteen) {
        (false, false) => {
            let raw: Vec<f64> = img.to_luma8().into_raw().into_iter().map(f64::from).collect();
            ImageGrid::from_raw(h, w, 1, &raw, 255.0)
        }
        (false, true) => {
            let raw: Vec<f64> = img.to_luma16().into_raw().into_iter().map(f64::from).collect();
            ImageGrid::from_raw(h, w, 1, &raw, 65535.0)
        }
        (true, false) => {
            let raw: Vec<f64> = img.to_rgb8().into_raw().into_iter().map(f64::from).collect();
            ImageGrid::from_raw(h, w, 3, &raw, 255.0)
        }
        (true, true) => {
            let raw: Vec<f64> = img.to_rgb16().into_raw().into_iter().map(f64::from).collect();
            ImageGrid::from_raw(h, w, 3, &raw, 65535.0)
        }
    }
}

/// Writes a mask as 8-bit grayscale: foreground 255, background 0.
pub fn save_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let format = format_for(path)?;
    let bytes = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    let img = GrayImage::from_raw(mask.cols() as u32, mask.rows() as u32, bytes)
        .expect("buffer matches mask shape");
    img.save_with_format(path, format).map_err(image_err(path))
}

/// Reads a mask; pixels with luma >= 128 are foreground.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    format_for(path)?;
    let img = image::open(path).map_err(image_err(path))?.to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    BinaryMask::new(h, w, img.into_raw().into_iter().map(|v| v >= 128).collect())
}

fn is_boundary(mask: &BinaryMask, r: usize, c: usize) -> bool {
    if !mask.get(r, c) {
        return false;
    }
    [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)].iter().any(|&(dr, dc)| {
        let (nr, nc) = (r as isize + dr, c as isize + dc);
        nr >= 0
            && nc >= 0
            && (nr as usize) < mask.rows()
            && (nc as usize) < mask.cols()
            && !mask.get(nr as usize, nc as usize)
    })
}

/// Renders the image with the mask boundary (foreground pixels 4-adjacent to
/// background) drawn in [`BOUNDARY_COLOR`].
pub fn render_overlay(image: &ImageGrid, mask: &BinaryMask) -> Result<RgbImage> {
    image.shape().ensure_same(mask.shape())?;
    let mut out = RgbImage::new(image.cols() as u32, image.rows() as u32);
    for r in 0..image.rows() {
        for c in 0..image.cols() {
            let px = if is_boundary(mask, r, c) {
                Rgb(BOUNDARY_COLOR)
            } else {
                let level = |ch: usize| (image.get(r, c, ch) * 255.0).round() as u8;
                if image.channels() >= 3 {
                    Rgb([level(0), level(1), level(2)])
                } else {
                    let v = level(0);
                    Rgb([v, v, v])
                }
            };
            out.put_pixel(c as u32, r as u32, px);
        }
    }
    Ok(out)
}

pub fn save_overlay(image: &ImageGrid, mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let format = format_for(path)?;
    render_overlay(image, mask)?
        .save_with_format(path, format)
        .map_err(image_err(path))
}

/// Writes an image (1 or 3 channels) as 8-bit.
pub fn save_image(image: &ImageGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let format = format_for(path)?;
    let bytes: Vec<u8> = image
        .values()
        .iter()
        .map(|v| (v * 255.0).round() as u8)
        .collect();
    let (w, h) = (image.cols() as u32, image.rows() as u32);
    let dynamic = match image.channels() {
        1 => DynamicImage::ImageLuma8(GrayImage::from_raw(w, h, bytes).expect("gray buffer")),
        3 => DynamicImage::ImageRgb8(RgbImage::from_raw(w, h, bytes).expect("rgb buffer")),
        n => {
            return Err(Error::UnsupportedImage {
                path: path.to_path_buf(),
                message: format!("cannot encode {n} channels"),
            })
        }
    };
    dynamic.save_with_format(path, format).map_err(image_err(path))
}

/// Energy CSV with header
/// `iter,total,fidelity,perimeter,predicted_flips,accepted_flips,rejected_flips,fg_components,bg_components`.
pub fn write_energy_csv(trace: &EnergyTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    for record in &trace.records {
        writer.serialize(record)?;
    }
    writer.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}
