//! Lossless image I/O: 8-bit RGB PNG and a raw `.rgb` dump
//! (`width: u32 LE`, `height: u32 LE`, then row-major RGB bytes).

use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, RgbImage};
use thiserror::Error;

use super::{DegradeError, ImageBuffer};

#[derive(Debug, Error)]
pub enum ImageIoError {
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("png codec error: {0}")]
    Png(#[from] image::ImageError),
    #[error("raw image is truncated ({0} bytes)")]
    RawTruncated(usize),
    #[error(transparent)]
    Buffer(#[from] DegradeError),
}

fn io_err(path: &Path, source: std::io::Error) -> ImageIoError {
    ImageIoError::Io { path: path.display().to_string(), source }
}

pub fn encode_png(img: &ImageBuffer) -> Result<Vec<u8>, ImageIoError> {
    let rgb = RgbImage::from_raw(img.width(), img.height(), img.pixels().to_vec())
        .expect("buffer length checked at construction");
    let mut out = Cursor::new(Vec::new());
    rgb.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

/// Decodes any PNG, converting to 8-bit RGB.
pub fn decode_png(bytes: &[u8]) -> Result<ImageBuffer, ImageIoError> {
    let decoded = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.into_rgb8();
    let (w, h) = decoded.dimensions();
    Ok(ImageBuffer::new(w, h, decoded.into_raw())?)
}

pub fn read_png(path: &Path) -> Result<ImageBuffer, ImageIoError> {
    decode_png(&std::fs::read(path).map_err(|e| io_err(path, e))?)
}

pub fn write_png(img: &ImageBuffer, path: &Path) -> Result<(), ImageIoError> {
    std::fs::write(path, encode_png(img)?).map_err(|e| io_err(path, e))
}

pub fn encode_raw(img: &ImageBuffer) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + img.pixels().len());
    out.extend_from_slice(&img.width().to_le_bytes());
    out.extend_from_slice(&img.height().to_le_bytes());
    out.extend_from_slice(img.pixels());
    out
}

pub fn decode_raw(bytes: &[u8]) -> Result<ImageBuffer, ImageIoError> {
    if bytes.len() < 8 {
        return Err(ImageIoError::RawTruncated(bytes.len()));
    }
    let w = u32::from_le_bytes(bytes[0..4].try_into().expect("4 bytes"));
    let h = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    Ok(ImageBuffer::new(w, h, bytes[8..].to_vec())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ImageBuffer {
        ImageBuffer::from_fn(13, 9, |x, y| [x as u8 * 19, y as u8 * 27, (x * y) as u8])
    }

    #[test]
    fn png_round_trip_is_lossless() {
        let img = sample();
        assert_eq!(decode_png(&encode_png(&img).unwrap()).unwrap(), img);
    }

    #[test]
    fn png_encoding_is_deterministic() {
        assert_eq!(encode_png(&sample()).unwrap(), encode_png(&sample()).unwrap());
    }

    #[test]
    fn raw_layout() {
        let img = sample();
        let raw = encode_raw(&img);
        assert_eq!(&raw[..8], &[13, 0, 0, 0, 9, 0, 0, 0]);
        assert_eq!(raw.len(), 8 + 13 * 9 * 3);
        assert_eq!(decode_raw(&raw).unwrap(), img);
        assert!(matches!(decode_raw(&raw[..5]), Err(ImageIoError::RawTruncated(5))));
        assert!(matches!(decode_raw(&raw[..20]), Err(ImageIoError::Buffer(_))));
    }

    #[test]
    fn garbage_png_is_error() {
        assert!(matches!(decode_png(b"not a png"), Err(ImageIoError::Png(_))));
    }
}
