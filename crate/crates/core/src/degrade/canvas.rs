//! Floating-point working buffer shared by the kernels.

use rayon::prelude::*;

use super::ImageBuffer;

#[derive(Clone, Debug)]
pub(crate) struct Canvas {
    pub w: usize,
    pub h: usize,
    pub data: Vec<f64>,
}

impl Canvas {
    pub fn from_image(img: &ImageBuffer) -> Self {
        Self {
            w: img.width() as usize,
            h: img.height() as usize,
            data: img.pixels().iter().map(|&v| v as f64).collect(),
        }
    }

    /// Clamp to `[0, 255]`, then round half to even.
    pub fn quantize(&self) -> ImageBuffer {
        let pixels = self.data.iter().map(|v| v.clamp(0.0, 255.0).round_ties_even() as u8).collect();
        ImageBuffer::new(self.w as u32, self.h as u32, pixels).expect("canvas shape is consistent")
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.w + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Pixel lookup with edge replication.
    #[inline]
    pub fn at_clamped(&self, x: isize, y: isize) -> [f64; 3] {
        let xc = x.clamp(0, self.w as isize - 1) as usize;
        let yc = y.clamp(0, self.h as isize - 1) as usize;
        self.at(xc, yc)
    }

    /// Bilinear sample at pixel-index coordinates with edge replication.
    #[inline]
    pub fn bilinear(&self, x: f64, y: f64) -> [f64; 3] {
        let x = x.clamp(0.0, (self.w - 1) as f64);
        let y = y.clamp(0.0, (self.h - 1) as f64);
        let x0 = x.floor() as isize;
        let y0 = y.floor() as isize;
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let a = self.at_clamped(x0, y0);
        let b = self.at_clamped(x0 + 1, y0);
        let c = self.at_clamped(x0, y0 + 1);
        let d = self.at_clamped(x0 + 1, y0 + 1);
        let mut out = [0.0; 3];
        for ch in 0..3 {
            let top = a[ch] + (b[ch] - a[ch]) * fx;
            let bottom = c[ch] + (d[ch] - c[ch]) * fx;
            out[ch] = top + (bottom - top) * fy;
        }
        out
    }

    /// New canvas from a per-pixel function, evaluated row-parallel.
    pub fn map_pixels<F>(&self, f: F) -> Canvas
    where
        F: Fn(usize, usize) -> [f64; 3] + Sync,
    {
        let w = self.w;
        let mut data = vec![0.0; self.data.len()];
        data.par_chunks_mut(w * 3).enumerate().for_each(|(y, row)| {
            for x in 0..w {
                row[x * 3..x * 3 + 3].copy_from_slice(&f(x, y));
            }
        });
        Canvas { w, h: self.h, data }
    }

    /// In-place row-parallel update; the closure sees one row at a time.
    pub fn update_rows<F>(&mut self, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync,
    {
        let w = self.w;
        self.data.par_chunks_mut(w * 3).enumerate().for_each(|(y, row)| f(y, row));
    }

    /// 3x3 box blur with edge replication, applied where `mask(x, y)` holds.
    pub fn box_blur3<M>(&self, mask: M) -> Canvas
    where
        M: Fn(usize, usize) -> bool + Sync,
    {
        self.map_pixels(|x, y| {
            if !mask(x, y) {
                return self.at(x, y);
            }
            let mut acc = [0.0; 3];
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    let p = self.at_clamped(x as isize + dx, y as isize + dy);
                    for ch in 0..3 {
                        acc[ch] += p[ch];
                    }
                }
            }
            acc.map(|v| v / 9.0)
        })
    }
}
