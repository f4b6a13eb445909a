//! Procedural, seeded image degradation.
//!
//! Each fault category maps to a closed-form kernel driven by a scalar
//! strength in `[0, 1]`. Kernels work in `f64` and quantize once at the end
//! (clamp to `[0, 255]`, round half to even). All randomness comes from
//! [`CounterRng`](crate::rng::CounterRng), so output bytes do not depend on
//! iteration order or thread count.

mod canvas;
pub mod io;
mod kernels;

use thiserror::Error;

use crate::scenario::{FaultCategory, FaultScenario};

pub use kernels::{KernelConstants, DEFAULT_CONSTANTS};

/// Smallest width or height accepted by the kernels.
pub const MIN_SIDE: u32 = 8;

/// Default evaluation frame edge.
pub const DEFAULT_SIDE: u32 = 224;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DegradeError {
    #[error("image {width}x{height} is below the {min}x{min} minimum", min = MIN_SIDE)]
    UnsupportedSize { width: u32, height: u32 },
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error("pixel buffer holds {actual} bytes, expected {expected}")]
    BadBufferLength { expected: usize, actual: usize },
    #[error("strength {0} outside [0, 1]")]
    InvalidStrength(String),
}

/// Row-major 8-bit RGB raster.
#[derive(Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for ImageBuffer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ImageBuffer")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl ImageBuffer {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, DegradeError> {
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(DegradeError::BadBufferLength { expected, actual: pixels.len() });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let pixels = rgb.iter().copied().cycle().take(width as usize * height as usize * 3).collect();
        Self { width, height, pixels }
    }

    /// Builds an image from a per-pixel function of `(x, y)`.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Self {
        let mut pixels = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                pixels.extend_from_slice(&f(x, y));
            }
        }
        Self { width, height, pixels }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn check_size(&self) -> Result<(), DegradeError> {
        if self.width < MIN_SIDE || self.height < MIN_SIDE {
            return Err(DegradeError::UnsupportedSize { width: self.width, height: self.height });
        }
        Ok(())
    }
}

/// What to apply: category, strength and the seed for any randomness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradationSpec {
    pub category: FaultCategory,
    pub strength: f64,
    pub seed: u64,
}

impl DegradationSpec {
    pub fn new(category: FaultCategory, strength: f64, seed: u64) -> Result<Self, DegradeError> {
        if !(0.0..=1.0).contains(&strength) {
            return Err(DegradeError::InvalidStrength(strength.to_string()));
        }
        Ok(Self { category, strength, seed })
    }
}

impl From<&FaultScenario> for DegradationSpec {
    fn from(s: &FaultScenario) -> Self {
        Self { category: s.category, strength: s.strength, seed: s.seed }
    }
}

/// Applies one fault with the default engine constants.
pub fn apply_fault(image: &ImageBuffer, spec: &DegradationSpec) -> Result<ImageBuffer, DegradeError> {
    apply_fault_with(image, spec, &DEFAULT_CONSTANTS)
}

pub fn apply_fault_with(
    image: &ImageBuffer,
    spec: &DegradationSpec,
    constants: &KernelConstants,
) -> Result<ImageBuffer, DegradeError> {
    image.check_size()?;
    if !(0.0..=1.0).contains(&spec.strength) {
        return Err(DegradeError::InvalidStrength(spec.strength.to_string()));
    }
    if spec.strength == 0.0 {
        return Ok(image.clone());
    }
    Ok(kernels::run(image, spec, constants))
}

/// Mean absolute per-channel difference, scaled to `[0, 1]`.
pub fn degradation_magnitude(original: &ImageBuffer, degraded: &ImageBuffer) -> Result<f64, DegradeError> {
    if original.width != degraded.width || original.height != degraded.height {
        return Err(DegradeError::DimensionMismatch(
            original.width,
            original.height,
            degraded.width,
            degraded.height,
        ));
    }
    if original.pixels.is_empty() {
        return Ok(0.0);
    }
    let total: u64 = original
        .pixels
        .iter()
        .zip(&degraded.pixels)
        .map(|(a, b)| a.abs_diff(*b) as u64)
        .sum();
    Ok(total as f64 / (original.pixels.len() as f64 * 255.0))
}
