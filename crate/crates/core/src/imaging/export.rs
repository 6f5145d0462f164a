use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GrayImage, ImagingMethod};
use crate::error::{Error, Result};

/// Metadata written next to an exported PNG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSidecar {
    pub method: ImagingMethod,
    /// Half-open `[start, end)` series indices of the imaged window.
    pub window: (usize, usize),
    pub value_range: (f64, f64),
}

/// Encodes the normalized image as 8-bit grayscale PNG.
pub fn write_png<W: Write>(image: &GrayImage, out: W) -> Result<()> {
    let side = u32::try_from(image.side()).map_err(|_| Error::ShapeMismatch("image too large".into()))?;
    let mut encoder = png::Encoder::new(out, side, side);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let bytes: Vec<u8> = image
        .normalized()
        .pixels()
        .iter()
        .map(|p| (p * 255.0).round() as u8)
        .collect();
    let mut writer = encoder.write_header().map_err(std::io::Error::other)?;
    writer.write_image_data(&bytes).map_err(std::io::Error::other)?;
    writer.finish().map_err(std::io::Error::other)?;
    Ok(())
}

/// Writes `<stem>.png` and `<stem>.json` into `dir`.
pub fn export_png(image: &GrayImage, sidecar: &ImageSidecar, dir: &Path, stem: &str) -> Result<()> {
    write_png(image, BufWriter::new(File::create(dir.join(format!("{stem}.png")))?))?;
    let json = serde_json::to_string_pretty(sidecar).map_err(std::io::Error::other)?;
    std::fs::write(dir.join(format!("{stem}.json")), json)?;
    Ok(())
}
