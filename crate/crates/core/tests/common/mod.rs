//! Synthetic test images shared by the integration and acceptance targets.
#![allow(dead_code)]

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stationary noise texture description: per-channel mean, noise std and
/// box-blur radius (which sets the gradient statistics).
#[derive(Debug, Clone, Copy)]
pub struct NoiseTexture {
    pub mean: [f32; 3],
    pub std: f32,
    pub blur: usize,
}

pub const QUADRANTS: [NoiseTexture; 4] = [
    NoiseTexture {
        mean: [0.70, 0.30, 0.25],
        std: 0.06,
        blur: 0,
    },
    NoiseTexture {
        mean: [0.25, 0.60, 0.30],
        std: 0.08,
        blur: 1,
    },
    NoiseTexture {
        mean: [0.30, 0.35, 0.75],
        std: 0.07,
        blur: 2,
    },
    NoiseTexture {
        mean: [0.55, 0.55, 0.50],
        std: 0.10,
        blur: 3,
    },
];

fn box_blur(field: &mut [f32], w: usize, h: usize, r: usize) {
    if r == 0 {
        return;
    }
    let mut tmp = vec![0.0f32; field.len()];
    let n = (2 * r + 1) as f32;
    for y in 0..h {
        for x in 0..w {
            let s: f32 = (0..=2 * r).map(|k| field[y * w + (x + k + w - r) % w]).sum();
            tmp[y * w + x] = s / n;
        }
    }
    for y in 0..h {
        for x in 0..w {
            let s: f32 = (0..=2 * r).map(|k| tmp[((y + k + h - r) % h) * w + x]).sum();
            field[y * w + x] = s / n;
        }
    }
}

/// One noise field per channel with zero mean and unit std.
fn unit_noise(w: usize, h: usize, blur: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let mut f: Vec<f32> = (0..w * h).map(|_| rng.random::<f32>() - 0.5).collect();
    box_blur(&mut f, w, h, blur);
    let mean = f.iter().sum::<f32>() / f.len() as f32;
    let var = f.iter().map(|v| (v - mean) * (v - mean)).sum::<f32>() / f.len() as f32;
    let sd = var.sqrt().max(1e-9);
    f.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    f
}

/// Interleaved RGB8 pixels of a `w` x `h` patch of `t`.
pub fn noise_patch(t: NoiseTexture, w: usize, h: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields: Vec<Vec<f32>> = (0..3).map(|_| unit_noise(w, h, t.blur, &mut rng)).collect();
    let mut out = Vec::with_capacity(w * h * 3);
    for i in 0..w * h {
        for (field, mean) in fields.iter().zip(t.mean) {
            let v = (mean + t.std * field[i]).clamp(0.0, 1.0);
            out.push((v * 255.0).round() as u8);
        }
    }
    out
}

/// `size` x `size` RGB8 image with one texture from [`QUADRANTS`] per quadrant
/// (top-left, top-right, bottom-left, bottom-right).
pub fn quadrant_mosaic(size: usize, seed: u64) -> image::RgbImage {
    let half = size / 2;
    let patches: Vec<Vec<u8>> = QUADRANTS
        .iter()
        .enumerate()
        .map(|(i, &t)| noise_patch(t, half, half, seed.wrapping_add(i as u64)))
        .collect();
    image::RgbImage::from_fn(size as u32, size as u32, |x, y| {
        let (x, y) = (x as usize, y as usize);
        let q = usize::from(x >= half) + 2 * usize::from(y >= half);
        let i = ((y % half) * half + x % half) * 3;
        image::Rgb([patches[q][i], patches[q][i + 1], patches[q][i + 2]])
    })
}

/// Quadrant index of pixel (x, y) in a mosaic of side `size`.
pub fn quadrant_of(x: usize, y: usize, size: usize) -> usize {
    usize::from(x >= size / 2) + 2 * usize::from(y >= size / 2)
}

pub fn noise_image(t: NoiseTexture, w: usize, h: usize, seed: u64) -> image::RgbImage {
    image::RgbImage::from_raw(w as u32, h as u32, noise_patch(t, w, h, seed)).expect("buffer size matches")
}

pub fn constant_image(w: usize, h: usize, rgb: [u8; 3]) -> image::RgbImage {
    image::RgbImage::from_pixel(w as u32, h as u32, image::Rgb(rgb))
}

pub fn save(img: &image::RgbImage, path: &Path) {
    if let Some(p) = path.parent() {
        std::fs::create_dir_all(p).unwrap();
    }
    img.save(path).unwrap();
}
