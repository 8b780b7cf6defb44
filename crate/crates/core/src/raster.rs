//! Float raster container, PNG/JPEG decoding glue, color conversion and the
//! per-pixel feature planes (color plus Sobel gradients) used by the grid
//! statistics.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageError, ImageFormat};

use crate::error::{Error, Result};

/// Row-major float image with 1 or 3 interleaved channels, values in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Raster {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidParam(format!(
                "raster channels must be 1 or 3, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidParam(format!(
                "raster data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParam(format!("raster value {v} outside [0,1]")));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Builds a raster from values already known to be in range.
    pub(crate) fn from_parts(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn constant(width: usize, height: usize, channels: usize, value: f32) -> Self {
        assert!(channels == 1 || channels == 3);
        let value = value.clamp(0.0, 1.0);
        Self::from_parts(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds a raster whose pixel at (x, y) is `f(x, y)` (one value per channel).
    pub fn from_fn<F>(width: usize, height: usize, channels: usize, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> [f32; 3],
    {
        assert!(channels == 1 || channels == 3);
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                let px = f(x, y);
                data.extend(px[..channels].iter().map(|v| v.clamp(0.0, 1.0)));
            }
        }
        Self::from_parts(width, height, channels, data)
    }

    pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != width * height * 3 {
            return Err(Error::InvalidParam("rgb8 buffer length mismatch".into()));
        }
        let data = bytes.iter().map(|&b| f32::from(b) / 255.0).collect();
        Ok(Self::from_parts(width, height, 3, data))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Copies one channel out as a single-channel raster.
    pub fn channel(&self, c: usize) -> Raster {
        assert!(c < self.channels);
        let data = self.data.iter().skip(c).step_by(self.channels).copied().collect();
        Self::from_parts(self.width, self.height, 1, data)
    }

    /// Interleaves three single-channel rasters of equal size.
    pub fn merge_rgb(r: &Raster, g: &Raster, b: &Raster) -> Raster {
        assert!(r.channels == 1 && g.channels == 1 && b.channels == 1);
        assert!(r.width == g.width && g.width == b.width && r.height == g.height && g.height == b.height);
        let mut data = Vec::with_capacity(r.data.len() * 3);
        for i in 0..r.data.len() {
            data.extend([r.data[i], g.data[i], b.data[i]]);
        }
        Self::from_parts(r.width, r.height, 3, data)
    }

    /// Copies the rectangle at (x, y) with size w x h. Panics if it leaves the raster.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Raster {
        assert!(x + w <= self.width && y + h <= self.height, "crop outside raster");
        let mut data = Vec::with_capacity(w * h * self.channels);
        for row in y..y + h {
            let start = (row * self.width + x) * self.channels;
            data.extend_from_slice(&self.data[start..start + w * self.channels]);
        }
        Self::from_parts(w, h, self.channels, data)
    }

    /// Applies `f` to every value, clamping the result into [0,1].
    pub fn map(&self, mut f: impl FnMut(f32) -> f32) -> Raster {
        let data = self.data.iter().map(|&v| f(v).clamp(0.0, 1.0)).collect();
        Self::from_parts(self.width, self.height, self.channels, data)
    }

    /// Applies `f` to every RGB pixel of a 3-channel raster, clamping the result.
    pub fn map_pixels(&self, mut f: impl FnMut([f32; 3]) -> [f32; 3]) -> Raster {
        assert_eq!(self.channels, 3, "map_pixels needs a 3-channel raster");
        let mut data = Vec::with_capacity(self.data.len());
        for px in self.data.chunks_exact(3) {
            data.extend(f([px[0], px[1], px[2]]).map(|v| v.clamp(0.0, 1.0)));
        }
        Self::from_parts(self.width, self.height, 3, data)
    }

    /// Snaps every value to the nearest 8-bit level, so that an 8-bit PNG
    /// round trip reproduces the raster exactly.
    pub fn quantize_8bit(&self) -> Raster {
        self.map(|v| f32::from(to_u8(v)) / 255.0)
    }

    /// Returns a copy of a 1-channel raster replicated into 3 channels, or a clone of a 3-channel one.
    pub fn to_rgb(&self) -> Raster {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        Self::from_parts(self.width, self.height, 3, data)
    }

    pub fn to_rgb8(&self) -> Vec<u8> {
        self.to_rgb().data.iter().map(|&v| to_u8(v)).collect()
    }

    pub fn encode_png_rgb8(&self) -> Result<Vec<u8>> {
        let img = image::RgbImage::from_raw(self.width as u32, self.height as u32, self.to_rgb8())
            .expect("buffer sized from raster");
        encode_png(DynamicImage::ImageRgb8(img))
    }

    pub fn encode_png_gray8(&self) -> Result<Vec<u8>> {
        let img = image::GrayImage::from_raw(self.width as u32, self.height as u32, self.luma_values(to_u8))
            .expect("buffer sized from raster");
        encode_png(DynamicImage::ImageLuma8(img))
    }

    pub fn encode_png_gray16(&self) -> Result<Vec<u8>> {
        let img = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(
            self.width as u32,
            self.height as u32,
            self.luma_values(to_u16),
        )
        .expect("buffer sized from raster");
        encode_png(DynamicImage::ImageLuma16(img))
    }

    fn luma_values<T>(&self, conv: fn(f32) -> T) -> Vec<T> {
        assert_eq!(self.channels, 1, "grayscale export needs a 1-channel raster");
        self.data.iter().map(|&v| conv(v)).collect()
    }
}

pub fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn to_u16(v: f32) -> u16 {
    (f64::from(v.clamp(0.0, 1.0)) * 65535.0).round() as u16
}

fn encode_png(img: DynamicImage) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    Ok(out.into_inner())
}

/// Decodes PNG or JPEG bytes into a 3-channel raster. 8-bit samples map to
/// v/255 and 16-bit samples to v/65535; grayscale is replicated and alpha dropped.
pub fn decode_to_raster(bytes: &[u8]) -> Result<Raster> {
    let format = image::guess_format(bytes).map_err(|_| Error::UnsupportedFormat)?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Jpeg) {
        return Err(Error::UnsupportedFormat);
    }
    let img = image::load_from_memory_with_format(bytes, format).map_err(|e| match e {
        ImageError::Unsupported(_) => Error::UnsupportedFormat,
        other => Error::CorruptImage(other.to_string()),
    })?;
    Ok(dynamic_to_raster(img))
}

pub fn load_raster(path: &Path) -> Result<Raster> {
    let bytes = std::fs::read(path)?;
    decode_to_raster(&bytes)
}

fn dynamic_to_raster(img: DynamicImage) -> Raster {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let sixteen_bit = matches!(
        img,
        DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_)
            | DynamicImage::ImageRgb16(_)
            | DynamicImage::ImageRgba16(_)
    );
    let data = if sixteen_bit {
        img.to_rgb16()
            .into_raw()
            .into_iter()
            .map(|v| (f64::from(v) / 65535.0) as f32)
            .collect()
    } else {
        img.to_rgb8()
            .into_raw()
            .into_iter()
            .map(|v| f32::from(v) / 255.0)
            .collect()
    };
    Raster::from_parts(w, h, 3, data)
}

/// Bilinear downscale so the longest edge equals `target`. Rasters already
/// within the target are returned unchanged; no upscaling happens.
pub fn resize_longest_edge(r: &Raster, target: usize) -> Raster {
    let target = target.max(1);
    let long = r.width.max(r.height);
    if long <= target {
        return r.clone();
    }
    let scale = target as f64 / long as f64;
    let (nw, nh) = if r.width >= r.height {
        (target, ((r.height as f64 * scale).round() as usize).max(1))
    } else {
        (((r.width as f64 * scale).round() as usize).max(1), target)
    };
    resize_bilinear(r, nw, nh)
}

/// Bilinear resampling to an explicit size, with pixel-center alignment and edge clamping.
pub fn resize_bilinear(r: &Raster, nw: usize, nh: usize) -> Raster {
    if nw == r.width && nh == r.height {
        return r.clone();
    }
    let axis = |dst: usize, src_len: usize, dst_len: usize| {
        let s = ((dst as f64 + 0.5) * src_len as f64 / dst_len as f64 - 0.5).clamp(0.0, (src_len - 1) as f64);
        let i0 = s.floor() as usize;
        let i1 = (i0 + 1).min(src_len - 1);
        (i0, i1, (s - i0 as f64) as f32)
    };
    let xs: Vec<_> = (0..nw).map(|x| axis(x, r.width, nw)).collect();
    let ch = r.channels;
    let mut data = Vec::with_capacity(nw * nh * ch);
    for y in 0..nh {
        let (y0, y1, ty) = axis(y, r.height, nh);
        for &(x0, x1, tx) in &xs {
            for c in 0..ch {
                let a = r.get(x0, y0, c);
                let b = r.get(x1, y0, c);
                let d = r.get(x0, y1, c);
                let e = r.get(x1, y1, c);
                let top = a + (b - a) * tx;
                let bottom = d + (e - d) * tx;
                data.push((top + (bottom - top) * ty).clamp(0.0, 1.0));
            }
        }
    }
    Raster::from_parts(nw, nh, ch, data)
}

/// Standard RGB to HSV, hue normalized by 360 degrees. Achromatic pixels get hue 0.
pub fn rgb_to_hsv_pixel(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let d = max - min;
    let h = if d <= 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / d).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / d + 2.0)
    } else {
        60.0 * ((r - g) / d + 4.0)
    };
    let s = if max <= 0.0 { 0.0 } else { d / max };
    ((h / 360.0).rem_euclid(1.0), s, max)
}

/// Inverse of [`rgb_to_hsv_pixel`]; `h` is in turns (1.0 == 360 degrees).
pub fn hsv_to_rgb_pixel(h: f64, s: f64, v: f64) -> (f64, f64, f64) {
    let h6 = h.rem_euclid(1.0) * 6.0;
    let c = v * s;
    let x = c * (1.0 - ((h6 % 2.0) - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match h6 as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    (r + m, g + m, b + m)
}

/// Splits a 3-channel raster into hue, saturation and value planes.
pub fn rgb_to_hsv(r: &Raster) -> (Raster, Raster, Raster) {
    assert_eq!(r.channels, 3, "rgb_to_hsv needs a 3-channel raster");
    let n = r.width * r.height;
    let (mut hs, mut ss, mut vs) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for px in r.data.chunks_exact(3) {
        let (h, s, v) = rgb_to_hsv_pixel(f64::from(px[0]), f64::from(px[1]), f64::from(px[2]));
        hs.push(h as f32);
        ss.push(s as f32);
        vs.push(v as f32);
    }
    (
        Raster::from_parts(r.width, r.height, 1, hs),
        Raster::from_parts(r.width, r.height, 1, ss),
        Raster::from_parts(r.width, r.height, 1, vs),
    )
}

/// Number of feature planes: R, G, B and a horizontal and vertical gradient for each.
pub const FEATURE_PLANES: usize = 9;

/// Nine same-sized planes in [0,1]: R, G, B, then (dx, dy) of R, of G and of B.
/// A zero gradient encodes as 0.5.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    width: usize,
    height: usize,
    planes: Vec<Vec<f32>>,
}

impl FeatureStack {
    /// Assembles a stack from nine precomputed planes of `width * height` values in [0,1].
    pub fn from_planes(width: usize, height: usize, planes: Vec<Vec<f32>>) -> Result<Self> {
        if planes.len() != FEATURE_PLANES || planes.iter().any(|p| p.len() != width * height) {
            return Err(Error::InvalidParam(format!(
                "feature stack needs {FEATURE_PLANES} planes of {width}x{height}"
            )));
        }
        if planes.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParam("feature values must be in [0,1]".into()));
        }
        Ok(Self { width, height, planes })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn plane(&self, i: usize) -> &[f32] {
        &self.planes[i]
    }

    /// Plane index of the horizontal gradient of color channel `c`.
    pub const fn dx_plane(c: usize) -> usize {
        3 + 2 * c
    }

    /// Plane index of the vertical gradient of color channel `c`.
    pub const fn dy_plane(c: usize) -> usize {
        4 + 2 * c
    }
}

/// Computes color and 3x3 Sobel gradient planes with edge replication. Raw
/// responses in [-4, 4] are remapped to (g/4 + 1)/2.
pub fn compute_features(r: &Raster) -> Result<FeatureStack> {
    assert_eq!(r.channels, 3, "compute_features needs a 3-channel raster");
    let (w, h) = (r.width, r.height);
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: 3,
        });
    }
    let mut planes = Vec::with_capacity(FEATURE_PLANES);
    let colors: Vec<Vec<f32>> = (0..3).map(|c| r.channel(c).into_data()).collect();
    for c in &colors {
        planes.push(c.clone());
    }
    for c in &colors {
        let (dx, dy) = sobel(c, w, h);
        planes.push(dx);
        planes.push(dy);
    }
    Ok(FeatureStack {
        width: w,
        height: h,
        planes,
    })
}

fn sobel(p: &[f32], w: usize, h: usize) -> (Vec<f32>, Vec<f32>) {
    let at = |x: isize, y: isize| -> f32 {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        p[y * w + x]
    };
    let mut dx = Vec::with_capacity(w * h);
    let mut dy = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let (tl, t, tr) = (at(x - 1, y - 1), at(x, y - 1), at(x + 1, y - 1));
            let (l, rr) = (at(x - 1, y), at(x + 1, y));
            let (bl, b, br) = (at(x - 1, y + 1), at(x, y + 1), at(x + 1, y + 1));
            let gx = (tr + 2.0 * rr + br) - (tl + 2.0 * l + bl);
            let gy = (bl + 2.0 * b + br) - (tl + 2.0 * t + tr);
            dx.push((gx / 8.0 + 0.5).clamp(0.0, 1.0));
            dy.push((gy / 8.0 + 0.5).clamp(0.0, 1.0));
        }
    }
    (dx, dy)
}
