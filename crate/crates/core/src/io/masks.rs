use std::path::Path;

use image::ImageReader;

use super::{read_text, IoError};
use crate::instances::{GeoTransform, InstanceError, MaskPair};

/// 8-bit grayscale raster (PGM or any format the image crate decodes),
/// row-major, top row first. Wider samples are scaled down to 8 bits.
pub fn read_mask(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u8>), IoError> {
    let path = path.as_ref();
    let image_err = |message: String| IoError::Image { path: path.to_path_buf(), message };
    let img = ImageReader::open(path)
        .map_err(super::io_err(path))?
        .with_guessed_format()
        .map_err(super::io_err(path))?
        .decode()
        .map_err(|e| image_err(e.to_string()))?
        .into_luma8();
    let (w, h) = img.dimensions();
    Ok((w as usize, h as usize, img.into_raw()))
}

/// Six world-file coefficients `A D B E C F`, one per line, with `(C, F)`
/// the center of the upper-left pixel.
pub fn read_world_file(path: impl AsRef<Path>) -> Result<GeoTransform, IoError> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let bad = |message: String| IoError::Format { source_name: path.display().to_string(), message };
    let values: Vec<f64> = text
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| bad(format!("not a number: {t:?}"))))
        .collect::<Result<_, _>>()?;
    let coeffs: [f64; 6] = values
        .try_into()
        .map_err(|v: Vec<f64>| bad(format!("expected 6 coefficients, found {}", v.len())))?;
    Ok(GeoTransform::from_world_file(coeffs)?)
}

/// Loads both probability channels; without a world file, coordinates are
/// pixel units with rows growing downward.
pub fn read_mask_pair(
    building: impl AsRef<Path>,
    border: impl AsRef<Path>,
    world_file: Option<&Path>,
) -> Result<MaskPair, IoError> {
    let (bw, bh, b) = read_mask(building)?;
    let (rw, rh, r) = read_mask(border)?;
    if (bw, bh) != (rw, rh) {
        return Err(InstanceError::DimensionMismatch { building: (bw, bh), border: (rw, rh) }.into());
    }
    let geo = match world_file {
        Some(p) => read_world_file(p)?,
        None => GeoTransform::identity(),
    };
    Ok(MaskPair::new(bw, bh, b, r, geo)?)
}
