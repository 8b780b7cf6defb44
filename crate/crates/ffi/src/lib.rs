//! C ABI over texmine for region detection and material generation.
//!
//! All objects are opaque handles owned by the caller and released with the
//! matching `*_free` function. Every fallible call returns a [`TmStatus`];
//! on failure `tm_last_error_message` describes what went wrong on the
//! calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use texmine::detect::{CropBounds, DetectParams, TextureCrop};
use texmine::grid::GridParams;
use texmine::pbr::{generate_material, MapKind, PbrMaterial, Provenance};
use texmine::pipeline::{analyze_raster, DetectionSettings};
use texmine::raster::{decode_to_raster, resize_longest_edge, Raster};
use texmine::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnsupportedFormat = 3,
    CorruptImage = 4,
    ImageTooSmall = 5,
    OutOfRange = 6,
    BufferTooSmall = 7,
    Io = 8,
    Panic = 9,
    Internal = 10,
}

/// Output maps of a material.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TmMapKind {
    Albedo = 0,
    Roughness = 1,
    Metallic = 2,
    Height = 3,
    Normal = 4,
    Transmission = 5,
}

impl From<TmMapKind> for MapKind {
    fn from(k: TmMapKind) -> Self {
        match k {
            TmMapKind::Albedo => MapKind::Albedo,
            TmMapKind::Roughness => MapKind::Roughness,
            TmMapKind::Metallic => MapKind::Metallic,
            TmMapKind::Height => MapKind::Height,
            TmMapKind::Normal => MapKind::Normal,
            TmMapKind::Transmission => MapKind::Transmission,
        }
    }
}

/// Detection parameters. Start from `tm_detect_params_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmDetectParams {
    pub cell_px: usize,
    pub bins: usize,
    pub threshold: f64,
    pub min_cells: usize,
    pub max_cells: usize,
    pub flat_std: f64,
    pub overlap_iou: f64,
    /// Images are downscaled so their longest edge is at most this.
    pub resize_long_edge: usize,
    pub min_crop_px: usize,
    pub max_crop_px: usize,
}

impl From<&TmDetectParams> for DetectionSettings {
    fn from(p: &TmDetectParams) -> Self {
        DetectionSettings {
            resize_long_edge: p.resize_long_edge,
            grid: GridParams {
                cell_px: p.cell_px,
                bins: p.bins,
            },
            detect: DetectParams {
                threshold: p.threshold,
                min_cells: p.min_cells,
                max_cells: p.max_cells,
                flat_std: p.flat_std,
                overlap_iou: p.overlap_iou,
            },
            bounds: CropBounds {
                min_px: p.min_crop_px,
                max_px: p.max_crop_px,
            },
        }
    }
}

/// A detected region in pixels of the analyzed (resized) image.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmRegion {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
    pub max_pair_distance: f64,
}

/// Decoded image, values in [0,1].
pub struct TmRaster(Raster);

/// Regions found by `tm_detect`, with their crops.
pub struct TmRegionList(Vec<TextureCrop>);

/// A generated material bundle.
pub struct TmMaterial(PbrMaterial);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> TmStatus {
    match e {
        Error::UnsupportedFormat => TmStatus::UnsupportedFormat,
        Error::CorruptImage(_) => TmStatus::CorruptImage,
        Error::ImageTooSmall { .. } | Error::GridTooSmall { .. } => TmStatus::ImageTooSmall,
        Error::InvalidParam(_) | Error::ShapeMismatch(_) => TmStatus::InvalidArgument,
        e if e.is_io() => TmStatus::Io,
        _ => TmStatus::Internal,
    }
}

fn fail(status: TmStatus, msg: &str) -> TmStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), TmStatus>) -> TmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TmStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(TmStatus::Panic, &format!("internal panic: {msg}"))
        }
    }
}

fn check(e: Error) -> TmStatus {
    fail(status_of(&e), &e.to_string())
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, TmStatus> {
    // SAFETY: caller passes either null or a pointer obtained from this library
    unsafe { p.as_ref() }.ok_or_else(|| fail(TmStatus::NullPointer, &format!("{what} is null")))
}

fn out_ptr<T>(out: *mut *mut T) -> Result<(), TmStatus> {
    if out.is_null() {
        Err(fail(TmStatus::NullPointer, "output pointer is null"))
    } else {
        Ok(())
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or "" after a success.
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn tm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Decodes a PNG or JPEG held in memory.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tm_raster_decode(data: *const u8, len: usize, out: *mut *mut TmRaster) -> TmStatus {
    guard(|| {
        out_ptr(out)?;
        if data.is_null() {
            return Err(fail(TmStatus::NullPointer, "data is null"));
        }
        // SAFETY: caller guarantees `len` readable bytes at `data`
        let bytes = unsafe { std::slice::from_raw_parts(data, len) };
        let r = decode_to_raster(bytes).map_err(check)?;
        // SAFETY: checked non-null above
        unsafe { *out = Box::into_raw(Box::new(TmRaster(r))) };
        Ok(())
    })
}

/// Wraps interleaved 8-bit RGB pixels (`width * height * 3` bytes).
///
/// # Safety
/// `data` must point to `width * height * 3` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tm_raster_from_rgb8(
    data: *const u8,
    width: usize,
    height: usize,
    out: *mut *mut TmRaster,
) -> TmStatus {
    guard(|| {
        out_ptr(out)?;
        if data.is_null() {
            return Err(fail(TmStatus::NullPointer, "data is null"));
        }
        let len = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(3))
            .ok_or_else(|| fail(TmStatus::InvalidArgument, "image size overflows"))?;
        // SAFETY: caller guarantees `len` readable bytes at `data`
        let bytes = unsafe { std::slice::from_raw_parts(data, len) };
        let r = Raster::from_rgb8(width, height, bytes).map_err(check)?;
        // SAFETY: checked non-null above
        unsafe { *out = Box::into_raw(Box::new(TmRaster(r))) };
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a live raster handle.
#[no_mangle]
pub unsafe extern "C" fn tm_raster_width(r: *const TmRaster) -> usize {
    // SAFETY: see function contract
    unsafe { r.as_ref() }.map_or(0, |r| r.0.width())
}

/// # Safety
/// `r` must be null or a live raster handle.
#[no_mangle]
pub unsafe extern "C" fn tm_raster_height(r: *const TmRaster) -> usize {
    // SAFETY: see function contract
    unsafe { r.as_ref() }.map_or(0, |r| r.0.height())
}

/// # Safety
/// `r` must be null or a handle from this library not freed before.
#[no_mangle]
pub unsafe extern "C" fn tm_raster_free(r: *mut TmRaster) {
    if !r.is_null() {
        // SAFETY: handle came from Box::into_raw
        drop(unsafe { Box::from_raw(r) });
    }
}

/// Defaults used by the `texmine` command line tool.
#[no_mangle]
pub extern "C" fn tm_detect_params_default() -> TmDetectParams {
    let s = DetectionSettings::default();
    TmDetectParams {
        cell_px: s.grid.cell_px,
        bins: s.grid.bins,
        threshold: s.detect.threshold,
        min_cells: s.detect.min_cells,
        max_cells: s.detect.max_cells,
        flat_std: s.detect.flat_std,
        overlap_iou: s.detect.overlap_iou,
        resize_long_edge: s.resize_long_edge,
        min_crop_px: s.bounds.min_px,
        max_crop_px: s.bounds.max_px,
    }
}

/// Detects uniform regions and cuts their crops exactly as one
/// image of `texmine extract` is processed.
///
/// # Safety
/// `raster` and `params` must be live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tm_detect(
    raster: *const TmRaster,
    params: *const TmDetectParams,
    out: *mut *mut TmRegionList,
) -> TmStatus {
    guard(|| {
        out_ptr(out)?;
        // SAFETY: see function contract
        let r = unsafe { deref(raster, "raster") }?;
        // SAFETY: see function contract
        let p = unsafe { deref(params, "params") }?;
        let s = DetectionSettings::from(p);
        if s.resize_long_edge == 0 || s.bounds.min_px > s.bounds.max_px {
            return Err(fail(
                TmStatus::InvalidArgument,
                "need resize_long_edge >= 1 and min_crop_px <= max_crop_px",
            ));
        }
        let resized = resize_longest_edge(&r.0, s.resize_long_edge);
        let a = analyze_raster(&resized, &s, "image").map_err(check)?;
        let crops = a
            .crops
            .into_iter()
            .map(|c| TextureCrop {
                raster: c.raster.quantize_8bit(),
                ..c
            })
            .collect();
        // SAFETY: checked non-null above
        unsafe { *out = Box::into_raw(Box::new(TmRegionList(crops))) };
        Ok(())
    })
}

/// # Safety
/// `list` must be null or a live region list.
#[no_mangle]
pub unsafe extern "C" fn tm_region_list_len(list: *const TmRegionList) -> usize {
    // SAFETY: see function contract
    unsafe { list.as_ref() }.map_or(0, |l| l.0.len())
}

/// # Safety
/// `list` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tm_region_list_get(list: *const TmRegionList, index: usize, out: *mut TmRegion) -> TmStatus {
    guard(|| {
        // SAFETY: see function contract
        let l = unsafe { deref(list, "list") }?;
        if out.is_null() {
            return Err(fail(TmStatus::NullPointer, "output pointer is null"));
        }
        let c =
            l.0.get(index)
                .ok_or_else(|| fail(TmStatus::OutOfRange, &format!("region {index} of {}", l.0.len())))?;
        let region = TmRegion {
            x: c.rect.x,
            y: c.rect.y,
            w: c.rect.w,
            h: c.rect.h,
            max_pair_distance: c.max_pair_distance,
        };
        // SAFETY: checked non-null above
        unsafe { *out = region };
        Ok(())
    })
}

/// # Safety
/// `list` must be null or a handle from this library not freed before.
#[no_mangle]
pub unsafe extern "C" fn tm_region_list_free(list: *mut TmRegionList) {
    if !list.is_null() {
        // SAFETY: handle came from Box::into_raw
        drop(unsafe { Box::from_raw(list) });
    }
}

/// Generates the material for region `index` of `list` with `seed`.
///
/// # Safety
/// `list` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tm_material_generate(
    list: *const TmRegionList,
    index: usize,
    seed: u64,
    out: *mut *mut TmMaterial,
) -> TmStatus {
    guard(|| {
        out_ptr(out)?;
        // SAFETY: see function contract
        let l = unsafe { deref(list, "list") }?;
        let crop =
            l.0.get(index)
                .ok_or_else(|| fail(TmStatus::OutOfRange, &format!("region {index} of {}", l.0.len())))?;
        let m = generate_material(crop, seed);
        // SAFETY: checked non-null above
        unsafe { *out = Box::into_raw(Box::new(TmMaterial(m))) };
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a live material.
#[no_mangle]
pub unsafe extern "C" fn tm_material_width(m: *const TmMaterial) -> usize {
    // SAFETY: see function contract
    unsafe { m.as_ref() }.map_or(0, |m| m.0.width())
}

/// # Safety
/// `m` must be null or a live material.
#[no_mangle]
pub unsafe extern "C" fn tm_material_height(m: *const TmMaterial) -> usize {
    // SAFETY: see function contract
    unsafe { m.as_ref() }.map_or(0, |m| m.0.height_px())
}

/// Number of floats in a map: width * height * (3 for albedo and normal, else 1).
///
/// # Safety
/// `m` must be null or a live material.
#[no_mangle]
pub unsafe extern "C" fn tm_material_map_len(m: *const TmMaterial, kind: TmMapKind) -> usize {
    // SAFETY: see function contract
    unsafe { m.as_ref() }.map_or(0, |m| m.0.map(kind.into()).data().len())
}

/// Copies a map, row-major and channel-interleaved, into `buf`.
///
/// # Safety
/// `m` must be live and `buf` must have room for `len` floats.
#[no_mangle]
pub unsafe extern "C" fn tm_material_map(m: *const TmMaterial, kind: TmMapKind, buf: *mut f32, len: usize) -> TmStatus {
    guard(|| {
        // SAFETY: see function contract
        let m = unsafe { deref(m, "material") }?;
        if buf.is_null() {
            return Err(fail(TmStatus::NullPointer, "buffer is null"));
        }
        let data = m.0.map(kind.into()).data();
        if len < data.len() {
            return Err(fail(
                TmStatus::BufferTooSmall,
                &format!("need {} floats, got {len}", data.len()),
            ));
        }
        // SAFETY: buffer holds at least data.len() floats and does not alias our storage
        unsafe { ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len()) };
        Ok(())
    })
}

/// The material's generation recipe as JSON. Free with `tm_string_free`.
///
/// # Safety
/// `m` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tm_material_recipes_json(m: *const TmMaterial, out: *mut *mut c_char) -> TmStatus {
    guard(|| {
        out_ptr(out)?;
        // SAFETY: see function contract
        let m = unsafe { deref(m, "material") }?;
        let json = match &m.0.provenance {
            Provenance::Recipes { recipes } => serde_json::to_string(recipes),
            p => serde_json::to_string(p),
        }
        .map_err(|e| fail(TmStatus::Internal, &e.to_string()))?;
        let c = CString::new(json).map_err(|e| fail(TmStatus::Internal, &e.to_string()))?;
        // SAFETY: checked non-null above
        unsafe { *out = c.into_raw() };
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library not freed before.
#[no_mangle]
pub unsafe extern "C" fn tm_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: string came from CString::into_raw
        drop(unsafe { CString::from_raw(s) });
    }
}

/// # Safety
/// `m` must be null or a handle from this library not freed before.
#[no_mangle]
pub unsafe extern "C" fn tm_material_free(m: *mut TmMaterial) {
    if !m.is_null() {
        // SAFETY: handle came from Box::into_raw
        drop(unsafe { Box::from_raw(m) });
    }
}

/// Reads the thread's last error message into an owned string.
pub fn last_error() -> String {
    // SAFETY: pointer is valid until the next library call on this thread
    unsafe { CStr::from_ptr(tm_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}
