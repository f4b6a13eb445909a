//! Per-category kernels and the engine constants table.

use super::canvas::Canvas;
use super::{DegradationSpec, ImageBuffer};
use crate::rng::CounterRng;
use crate::scenario::FaultCategory;

/// Every tunable the kernels use. `s` below is the scenario strength.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelConstants {
    /// FOG target color and `alpha(row) = s * (base + gradient * (1 - row / h))`.
    pub fog_color: [f64; 3],
    pub fog_base: f64,
    pub fog_gradient: f64,
    /// DUST_STORM tint and uniform `alpha = dust_alpha * s`.
    pub dust_color: [f64; 3],
    pub dust_alpha: f64,
    pub frost_color: [f64; 3],
    /// Value-noise lattice spacing in pixels.
    pub frost_cell: f64,
    /// Frost mask level above which the 3x3 blur is applied.
    pub frost_blur_mask: f64,
    /// RAIN streak count is `round(rain_streaks * s)`.
    pub rain_streaks: f64,
    pub rain_length: (f64, f64),
    pub rain_angle_jitter_deg: f64,
    pub rain_alpha: f64,
    pub rain_color: [f64; 3],
    /// Strength above which rain gets a 3x3 blur pass.
    pub rain_blur_above: f64,
    /// MOTION_BLUR radius is `round(motion_radius * s)`, kernel `1 + 2 * radius`.
    pub motion_radius: f64,
    /// CAMERA_SHAKE per-axis offset bound is `round(shake_px * s)`.
    pub shake_px: f64,
    pub shake_copies: usize,
    /// CHROMATIC_ABERRATION shift is `round(chroma_px * s)`.
    pub chroma_px: f64,
    /// Radial coefficients `k = coeff * s`.
    pub barrel_k: f64,
    pub fisheye_k: f64,
    pub lens_k: f64,
    pub lens_chroma_px: f64,
    /// PERSPECTIVE_DISTORTION top-corner inset is `round(inset * s * w)`.
    pub perspective_inset: f64,
    /// CAMERA_YAW shear angle at full strength, degrees.
    pub yaw_deg: f64,
    /// DEAD_PIXELS share of the frame at full strength.
    pub dead_fraction: f64,
    pub banding_amplitude: f64,
    pub banding_period: (f64, f64),
    pub heat_sigma: f64,
    pub heat_tint: f64,
    /// HW_OVERHEAT frozen band height as a share of the frame.
    pub overheat_band: f64,
    /// CAMERA_FAILURE black band height is `round(s * h * failure_band)`.
    pub failure_band: f64,
    pub failure_noise_at: f64,
    pub glare_radius: f64,
    pub glare_intensity: f64,
    /// GLARE_OCCLUSION quadrilateral covers at most `glare_quad_area * s` of the frame.
    pub glare_quad_area: f64,
    pub glare_gray: f64,
    pub low_light_gain: f64,
    pub low_light_sigma: f64,
    pub low_light_vignette: f64,
    pub night_blue: f64,
    pub night_red: f64,
    pub night_scale: f64,
}

pub const DEFAULT_CONSTANTS: KernelConstants = KernelConstants {
    fog_color: [200.0, 200.0, 200.0],
    fog_base: 0.35,
    fog_gradient: 0.65,
    dust_color: [180.0, 150.0, 110.0],
    dust_alpha: 0.8,
    frost_color: [255.0, 255.0, 255.0],
    frost_cell: 16.0,
    frost_blur_mask: 0.6,
    rain_streaks: 200.0,
    rain_length: (8.0, 20.0),
    rain_angle_jitter_deg: 10.0,
    rain_alpha: 0.35,
    rain_color: [220.0, 220.0, 230.0],
    rain_blur_above: 0.5,
    motion_radius: 7.0,
    shake_px: 6.0,
    shake_copies: 3,
    chroma_px: 5.0,
    barrel_k: 0.5,
    fisheye_k: 1.2,
    lens_k: 0.35,
    lens_chroma_px: 2.0,
    perspective_inset: 0.25,
    yaw_deg: 10.0,
    dead_fraction: 0.05,
    banding_amplitude: 40.0,
    banding_period: (8.0, 32.0),
    heat_sigma: 12.0,
    heat_tint: 10.0,
    overheat_band: 0.2,
    failure_band: 0.5,
    failure_noise_at: 0.9,
    glare_radius: 0.4,
    glare_intensity: 220.0,
    glare_quad_area: 0.15,
    glare_gray: 128.0,
    low_light_gain: 0.8,
    low_light_sigma: 10.0,
    low_light_vignette: 1.5,
    night_blue: 40.0,
    night_red: 20.0,
    night_scale: 0.3,
};

// RNG stream ids, one per random quantity.
const S_FROST: u64 = 1;
const S_RAIN: u64 = 2;
const S_SHAKE: u64 = 3;
const S_DEAD: u64 = 4;
const S_BANDING: u64 = 5;
const S_NOISE: u64 = 6;
const S_BAND_POS: u64 = 7;
const S_FAILURE_NOISE: u64 = 8;
const S_GLARE: u64 = 9;

pub(super) fn run(image: &ImageBuffer, spec: &DegradationSpec, k: &KernelConstants) -> ImageBuffer {
    use FaultCategory::*;
    let src = Canvas::from_image(image);
    let s = spec.strength;
    let rng = CounterRng::new(spec.seed);
    let out = match spec.category {
        Fog => fog(&src, s, k),
        DustStorm => blend_uniform(&src, k.dust_color, k.dust_alpha * s),
        FrostCoating => frost(&src, s, &rng, k),
        Rain => rain(&src, s, &rng, k),
        MotionBlur => motion_blur(&src, (k.motion_radius * s).round() as usize),
        CameraShake => shake(&src, s, &rng, k),
        LensVignetting => vignette(&src, s),
        ChromaticAberration => chromatic(&src, (k.chroma_px * s).round() as isize),
        BarrelDistortion => radial(&src, k.barrel_k * s),
        FishEye => radial(&src, k.fisheye_k * s),
        LensDistortion => chromatic(&radial(&src, k.lens_k * s), (k.lens_chroma_px * s).round() as isize),
        PerspectiveDistortion => perspective(&src, (k.perspective_inset * s * src.w as f64).round()),
        CameraYaw => yaw(&src, (k.yaw_deg * s).to_radians().tan()),
        DeadPixels => dead_pixels(src, s, &rng, k),
        CameraBanding => banding(src, s, &rng, k),
        SensorHeat => sensor_heat(src, s, &rng, k),
        HwOverheat => overheat(sensor_heat(src, s, &rng, k), s, &rng, k),
        CameraFailure => camera_failure(src, s, &rng, k),
        GlareOcclusion => glare(src, s, &rng, k, false),
        BrightReflection => glare(src, s, &rng, k, true),
        LowLightTunnel => low_light(src, s, &rng, k),
        ColorShiftNight => color_shift_night(src, s, k),
    };
    out.quantize()
}

fn lerp3(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t]
}

fn fog(src: &Canvas, s: f64, k: &KernelConstants) -> Canvas {
    let h = src.h as f64;
    src.map_pixels(|x, y| {
        let alpha = s * (k.fog_base + k.fog_gradient * (1.0 - y as f64 / h));
        lerp3(src.at(x, y), k.fog_color, alpha)
    })
}

fn blend_uniform(src: &Canvas, color: [f64; 3], alpha: f64) -> Canvas {
    src.map_pixels(|x, y| lerp3(src.at(x, y), color, alpha))
}

/// Smooth value noise in `[0, 1]` on a lattice of `cell` pixels.
fn value_noise(rng: &CounterRng, stream: u64, x: f64, y: f64, cell: f64) -> f64 {
    let gx = x / cell;
    let gy = y / cell;
    let x0 = gx.floor();
    let y0 = gy.floor();
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let tx = smooth(gx - x0);
    let ty = smooth(gy - y0);
    let node = |ix: f64, iy: f64| rng.uniform(stream, ((iy as u64) << 32) | ix as u64);
    let top = node(x0, y0) + (node(x0 + 1.0, y0) - node(x0, y0)) * tx;
    let bottom = node(x0, y0 + 1.0) + (node(x0 + 1.0, y0 + 1.0) - node(x0, y0 + 1.0)) * tx;
    top + (bottom - top) * ty
}

fn frost(src: &Canvas, s: f64, rng: &CounterRng, k: &KernelConstants) -> Canvas {
    let mask = |x: usize, y: usize| value_noise(rng, S_FROST, x as f64, y as f64, k.frost_cell);
    let coated = src.map_pixels(|x, y| lerp3(src.at(x, y), k.frost_color, s * mask(x, y)));
    coated.box_blur3(|x, y| mask(x, y) > k.frost_blur_mask)
}

struct Streak {
    a: (f64, f64),
    b: (f64, f64),
    x_range: (isize, isize),
    y_range: (isize, isize),
}

fn rain(src: &Canvas, s: f64, rng: &CounterRng, k: &KernelConstants) -> Canvas {
    let count = (k.rain_streaks * s).round() as u64;
    let streaks: Vec<Streak> = (0..count)
        .map(|i| {
            let base = i * 5;
            let cx = rng.uniform(S_RAIN, base) * src.w as f64;
            let cy = rng.uniform(S_RAIN, base + 1) * src.h as f64;
            let len = rng.uniform_range(S_RAIN, base + 2, k.rain_length.0, k.rain_length.1);
            let angle = (90.0
                + rng.uniform_range(S_RAIN, base + 3, -k.rain_angle_jitter_deg, k.rain_angle_jitter_deg))
            .to_radians();
            let (dx, dy) = (0.5 * len * angle.cos(), 0.5 * len * angle.sin());
            let a = (cx - dx, cy - dy);
            let b = (cx + dx, cy + dy);
            Streak {
                a,
                b,
                x_range: ((a.0.min(b.0) - 1.0).floor() as isize, (a.0.max(b.0) + 1.0).ceil() as isize),
                y_range: ((a.1.min(b.1) - 1.0).floor() as isize, (a.1.max(b.1) + 1.0).ceil() as isize),
            }
        })
        .collect();

    let mut out = src.clone();
    let w = out.w as isize;
    out.update_rows(|y, row| {
        let yi = y as isize;
        let py = y as f64;
        // Composite in streak order so overlaps resolve identically on every run.
        for st in streaks.iter().filter(|st| st.y_range.0 <= yi && yi <= st.y_range.1) {
            for x in st.x_range.0.max(0)..=st.x_range.1.min(w - 1) {
                let d = segment_distance((x as f64, py), st.a, st.b);
                let coverage = (1.0 - d).clamp(0.0, 1.0);
                if coverage <= 0.0 {
                    continue;
                }
                let alpha = k.rain_alpha * coverage;
                let i = x as usize * 3;
                for ch in 0..3 {
                    row[i + ch] += (k.rain_color[ch] - row[i + ch]) * alpha;
                }
            }
        }
    });
    if s > k.rain_blur_above {
        out.box_blur3(|_, _| true)
    } else {
        out
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let (wx, wy) = (p.0 - a.0, p.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 { ((wx * vx + wy * vy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (qx, qy) = (a.0 + t * vx - p.0, a.1 + t * vy - p.1);
    (qx * qx + qy * qy).sqrt()
}

fn motion_blur(src: &Canvas, radius: usize) -> Canvas {
    if radius == 0 {
        return src.clone();
    }
    let r = radius as isize;
    let n = (2 * radius + 1) as f64;
    src.map_pixels(|x, y| {
        let mut acc = [0.0; 3];
        for dx in -r..=r {
            let p = src.at_clamped(x as isize + dx, y as isize);
            for ch in 0..3 {
                acc[ch] += p[ch];
            }
        }
        acc.map(|v| v / n)
    })
}

fn shake(src: &Canvas, s: f64, rng: &CounterRng, k: &KernelConstants) -> Canvas {
    let bound = (k.shake_px * s).round();
    let offsets: Vec<(isize, isize)> = (0..k.shake_copies as u64)
        .map(|j| {
            let dx = (bound * (2.0 * rng.uniform(S_SHAKE, 2 * j) - 1.0)).round() as isize;
            let dy = (bound * (2.0 * rng.uniform(S_SHAKE, 2 * j + 1) - 1.0)).round() as isize;
            (dx, dy)
        })
        .collect();
    let n = offsets.len() as f64;
    src.map_pixels(|x, y| {
        let mut acc = [0.0; 3];
        for &(dx, dy) in &offsets {
            let p = src.at_clamped(x as isize - dx, y as isize - dy);
            for ch in 0..3 {
                acc[ch] += p[ch];
            }
        }
        acc.map(|v| v / n)
    })
}

fn center_and_rmax(c: &Canvas) -> ((f64, f64), f64) {
    let cx = (c.w as f64 - 1.0) / 2.0;
    let cy = (c.h as f64 - 1.0) / 2.0;
    ((cx, cy), (cx * cx + cy * cy).sqrt())
}

fn vignette(src: &Canvas, s: f64) -> Canvas {
    let ((cx, cy), rmax) = center_and_rmax(src);
    src.map_pixels(|x, y| {
        let r2 = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)) / (rmax * rmax);
        src.at(x, y).map(|v| v * (1.0 - s * r2))
    })
}

fn chromatic(src: &Canvas, shift: isize) -> Canvas {
    if shift == 0 {
        return src.clone();
    }
    src.map_pixels(|x, y| {
        let (xi, yi) = (x as isize, y as isize);
        [src.at_clamped(xi - shift, yi)[0], src.at(x, y)[1], src.at_clamped(xi + shift, yi)[2]]
    })
}

/// Inverse radial map `r_src = r_dst * (1 + k * (r_dst / r_max)^2)`.
fn radial(src: &Canvas, k: f64) -> Canvas {
    let ((cx, cy), rmax) = center_and_rmax(src);
    src.map_pixels(|x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        let scale = 1.0 + k * (dx * dx + dy * dy) / (rmax * rmax);
        src.bilinear(cx + dx * scale, cy + dy * scale)
    })
}

fn perspective(src: &Canvas, inset: f64) -> Canvas {
    if inset <= 0.0 {
        return src.clone();
    }
    let (wm, hm) = ((src.w - 1) as f64, (src.h - 1) as f64);
    let dst = [(inset, 0.0), (wm - inset, 0.0), (wm, hm), (0.0, hm)];
    let rect = [(0.0, 0.0), (wm, 0.0), (wm, hm), (0.0, hm)];
    let hmat = homography(&dst, &rect);
    src.map_pixels(|x, y| {
        let (u, v) = (x as f64, y as f64);
        let den = hmat[6] * u + hmat[7] * v + 1.0;
        let sx = (hmat[0] * u + hmat[1] * v + hmat[2]) / den;
        let sy = (hmat[3] * u + hmat[4] * v + hmat[5]) / den;
        src.bilinear(sx, sy)
    })
}

/// Solves for the 8 free entries of the projective map taking `from[i]` to `to[i]`.
fn homography(from: &[(f64, f64); 4], to: &[(f64, f64); 4]) -> [f64; 8] {
    let mut m = [[0.0f64; 9]; 8];
    for i in 0..4 {
        let (u, v) = from[i];
        let (x, y) = to[i];
        m[2 * i] = [u, v, 1.0, 0.0, 0.0, 0.0, -u * x, -v * x, x];
        m[2 * i + 1] = [0.0, 0.0, 0.0, u, v, 1.0, -u * y, -v * y, y];
    }
    for col in 0..8 {
        let pivot = (col..8)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .expect("non-empty range");
        m.swap(col, pivot);
        let p = m[col][col];
        m[col][col..].iter_mut().for_each(|v| *v /= p);
        let pivot_row = m[col];
        for (r, row) in m.iter_mut().enumerate() {
            if r != col {
                let f = row[col];
                for (v, pv) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *v -= f * pv;
                }
            }
        }
    }
    let mut h = [0.0; 8];
    for (i, slot) in h.iter_mut().enumerate() {
        *slot = m[i][8];
    }
    h
}

fn yaw(src: &Canvas, shear: f64) -> Canvas {
    let half = src.h as f64 / 2.0;
    src.map_pixels(|x, y| src.bilinear(x as f64 + shear * (y as f64 - half), y as f64))
}

fn dead_pixels(mut c: Canvas, s: f64, rng: &CounterRng, k: &KernelConstants) -> Canvas {
    let total = c.w * c.h;
    let count = (k.dead_fraction * s * c.w as f64 * c.h as f64).floor() as usize;
    if count == 0 {
        return c;
    }
    // Lowest `count` keys win; the chosen set only grows with strength.
    let mut keys: Vec<(u64, usize)> = (0..total).map(|i| (rng.u64_at(S_DEAD, i as u64), i)).collect();
    if count < total {
        keys.select_nth_unstable(count - 1);
    }
    for &(_, i) in &keys[..count.min(total)] {
        c.data[i * 3..i * 3 + 3].fill(0.0);
    }
    c
}

fn banding(mut c: Canvas, s: f64, rng: &CounterRng, k: &KernelConstants) -> Canvas {
    let amplitude = k.banding_amplitude * s;
    let period = rng.uniform_range(S_BANDING, 0, k.banding_period.0, k.banding_period.1);
    c.update_rows(|y, row| {
        let offset = amplitude * (std::f64::consts::TAU * y as f64 / period).sin();
        row.iter_mut().for_each(|v| *v += offset);
    });
    c
}

fn sensor_heat(mut c: Canvas, s: f64, rng: &CounterRng, k: &KernelConstants) -> Canvas {
    let sigma = k.heat_sigma * s;
    let tint = k.heat_tint * s;
    let w = c.w;
    c.update_rows(|y, row| {
        for (i, v) in row.iter_mut().enumerate() {
            let idx = (y * w * 3 + i) as u64;
            *v += sigma * rng.normal(S_NOISE, idx);
            if i % 3 != 1 {
                *v += tint;
            }
        }
    });
    c
}

fn overheat(mut c: Canvas, s: f64, rng: &CounterRng, k: &KernelConstants) -> Canvas {
    let rows = (k.overheat_band * s * c.h as f64).round() as usize;
    if rows == 0 {
        return c;
    }
    let start = 1 + (rng.uniform(S_BAND_POS, 0) * (c.h - 1) as f64) as usize;
    let stride = c.w * 3;
    let frozen = c.data[(start - 1) * stride..start * stride].to_vec();
    for y in start..(start + rows).min(c.h) {
        c.data[y * stride..(y + 1) * stride].copy_from_slice(&frozen);
    }
    c
}

fn camera_failure(mut c: Canvas, s: f64, rng: &CounterRng, k: &KernelConstants) -> Canvas {
    if s >= k.failure_noise_at {
        let w = c.w;
        c.update_rows(|y, row| {
            for (i, v) in row.iter_mut().enumerate() {
                *v = 255.0 * rng.uniform(S_FAILURE_NOISE, (y * w * 3 + i) as u64);
            }
        });
        return c;
    }
    let rows = (s * c.h as f64 * k.failure_band).round() as usize;
    let start = (rng.uniform(S_BAND_POS, 0) * c.h as f64) as usize;
    let stride = c.w * 3;
    // The band wraps around the bottom edge so its height is exact.
    for i in 0..rows.min(c.h) {
        let y = (start + i) % c.h;
        c.data[y * stride..(y + 1) * stride].fill(0.0);
    }
    c
}

fn glare(mut c: Canvas, s: f64, rng: &CounterRng, k: &KernelConstants, bottom_third: bool) -> Canvas {
    let (w, h) = (c.w as f64, c.h as f64);
    let cx = rng.uniform(S_GLARE, 0) * w;
    let cy = if bottom_third {
        h * (2.0 + rng.uniform(S_GLARE, 1)) / 3.0
    } else {
        rng.uniform(S_GLARE, 1) * h
    };
    let radius = k.glare_radius * s * w;
    let peak = k.glare_intensity * s;
    let quad = (!bottom_third).then(|| occluder(w, h, s, rng, k));
    c.update_rows(|y, row| {
        let py = y as f64;
        for x in 0..row.len() / 3 {
            let px = x as f64;
            let d = ((px - cx).powi(2) + (py - cy).powi(2)).sqrt();
            if radius > 0.0 && d < radius {
                let add = peak * (1.0 - d / radius).powi(2);
                row[x * 3..x * 3 + 3].iter_mut().for_each(|v| *v += add);
            }
            if let Some(q) = &quad {
                if inside_convex(q, (px, py)) {
                    row[x * 3..x * 3 + 3].fill(k.glare_gray);
                }
            }
        }
    });
    c
}

/// Quadrilateral inscribed in a seeded box whose area is `glare_quad_area * s` of the frame.
fn occluder(w: f64, h: f64, s: f64, rng: &CounterRng, k: &KernelConstants) -> [(f64, f64); 4] {
    let area = k.glare_quad_area * s * w * h;
    let aspect = rng.uniform_range(S_GLARE, 2, 0.5, 2.0);
    let (bw, bh) = ((area * aspect).sqrt(), (area / aspect).sqrt());
    let (bx, by) = (rng.uniform(S_GLARE, 3) * w - bw / 2.0, rng.uniform(S_GLARE, 4) * h - bh / 2.0);
    let t: Vec<f64> = (5..9).map(|i| rng.uniform_range(S_GLARE, i, 0.2, 0.8)).collect();
    // Clockwise in image coordinates: top, right, bottom, left edge points.
    [
        (bx + t[0] * bw, by),
        (bx + bw, by + t[1] * bh),
        (bx + t[2] * bw, by + bh),
        (bx, by + t[3] * bh),
    ]
}

fn inside_convex(q: &[(f64, f64); 4], p: (f64, f64)) -> bool {
    (0..4).all(|i| {
        let a = q[i];
        let b = q[(i + 1) % 4];
        (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) >= 0.0
    })
}

fn low_light(mut c: Canvas, s: f64, rng: &CounterRng, k: &KernelConstants) -> Canvas {
    let gain = 1.0 - k.low_light_gain * s;
    let sigma = k.low_light_sigma * s;
    let w = c.w;
    c.update_rows(|y, row| {
        for (i, v) in row.iter_mut().enumerate() {
            *v = *v * gain + sigma * rng.normal(S_NOISE, (y * w * 3 + i) as u64);
        }
    });
    vignette(&c, (k.low_light_vignette * s).min(1.0))
}

fn color_shift_night(mut c: Canvas, s: f64, k: &KernelConstants) -> Canvas {
    let scale = 1.0 - k.night_scale * s;
    c.update_rows(|_, row| {
        for px in row.chunks_exact_mut(3) {
            px[0] = (px[0] - k.night_red * s) * scale;
            px[1] *= scale;
            px[2] = (px[2] + k.night_blue * s) * scale;
        }
    });
    c
}
