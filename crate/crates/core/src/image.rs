//! Image buffers for frames, masks, and normal maps, plus the PNG codecs
//! used by the dataset format.
//!
//! Normal maps are stored as 16-bit RGB PNG with the affine encoding
//! `enc = round((n + 1) / 2 * 65535)` per channel, vectors in camera space.

use crate::error::{Error, Result};

/// RGB image, channels in [0,1], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[f64; 3]>,
}

/// Single-channel coverage/mask image in [0,1], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

/// Per-pixel camera-space vectors; unit length wherever the subject mask is
/// set, zero on background.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[f64; 3]>,
}

macro_rules! impl_image_common {
    ($ty:ident, $pixel:ty, $zero:expr) => {
        impl $ty {
            pub fn new(width: usize, height: usize) -> Self {
                $ty {
                    width,
                    height,
                    data: vec![$zero; width * height],
                }
            }

            #[inline]
            pub fn idx(&self, x: usize, y: usize) -> usize {
                y * self.width + x
            }

            #[inline]
            pub fn get(&self, x: usize, y: usize) -> $pixel {
                self.data[y * self.width + x]
            }

            #[inline]
            pub fn set(&mut self, x: usize, y: usize, v: $pixel) {
                self.data[y * self.width + x] = v;
            }

            pub fn same_size<T>(&self, other: &T) -> bool
            where
                T: HasSize,
            {
                (self.width, self.height) == other.size()
            }
        }

        impl HasSize for $ty {
            fn size(&self) -> (usize, usize) {
                (self.width, self.height)
            }
        }
    };
}

pub trait HasSize {
    fn size(&self) -> (usize, usize);
}

impl_image_common!(RgbImage, [f64; 3], [0.0; 3]);
impl_image_common!(MaskImage, f64, 0.0);
impl_image_common!(NormalImage, [f64; 3], [0.0; 3]);

impl MaskImage {
    /// Bilinear sample at pixel coordinates (pixel centers at i+0.5).
    /// Returns None outside the image rectangle.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> Option<f64> {
        if x < 0.0 || y < 0.0 || x >= self.width as f64 || y >= self.height as f64 {
            return None;
        }
        let u = x - 0.5;
        let v = y - 0.5;
        let x0 = u.floor();
        let y0 = v.floor();
        let fx = u - x0;
        let fy = v - y0;
        let clamp_x = |i: i64| i.clamp(0, self.width as i64 - 1) as usize;
        let clamp_y = |i: i64| i.clamp(0, self.height as i64 - 1) as usize;
        let (x0i, x1i) = (clamp_x(x0 as i64), clamp_x(x0 as i64 + 1));
        let (y0i, y1i) = (clamp_y(y0 as i64), clamp_y(y0 as i64 + 1));
        let v00 = self.get(x0i, y0i);
        let v10 = self.get(x1i, y0i);
        let v01 = self.get(x0i, y1i);
        let v11 = self.get(x1i, y1i);
        Some(v00 * (1.0 - fx) * (1.0 - fy) + v10 * fx * (1.0 - fy) + v01 * (1.0 - fx) * fy + v11 * fx * fy)
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.len() != self.width * self.height {
            return Err(Error::InvalidImage("mask buffer size mismatch".into()));
        }
        if !self.data.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidImage("mask has non-finite values".into()));
        }
        Ok(())
    }
}

impl NormalImage {
    /// Check that vectors under the mask are unit length within 1e-3.
    pub fn validate_under_mask(&self, mask: &MaskImage) -> Result<()> {
        if !self.same_size(mask) {
            return Err(Error::DimensionMismatch(format!(
                "normal {}x{} vs mask {}x{}",
                self.width, self.height, mask.width, mask.height
            )));
        }
        for (i, n) in self.data.iter().enumerate() {
            if mask.data[i] > 0.5 {
                let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                if (len - 1.0).abs() >= 1e-3 {
                    return Err(Error::InvalidImage(format!(
                        "normal at pixel {i} not unit length under mask (|n| = {len})"
                    )));
                }
            }
        }
        Ok(())
    }
}

// --- PNG codecs -----------------------------------------------------------

fn quantize_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Normal channel encoding: `round((n + 1) / 2 * 65535)`.
pub fn encode_normal_channel(n: f64) -> u16 {
    (((n + 1.0) * 0.5 * 65535.0).round()).clamp(0.0, 65535.0) as u16
}

/// Inverse of [`encode_normal_channel`] up to 1/65535 quantization.
pub fn decode_normal_channel(e: u16) -> f64 {
    e as f64 / 65535.0 * 2.0 - 1.0
}

pub fn encode_rgb_png(img: &RgbImage) -> Vec<u8> {
    let mut buf = image::RgbImage::new(img.width as u32, img.height as u32);
    for y in 0..img.height {
        for x in 0..img.width {
            let p = img.get(x, y);
            buf.put_pixel(
                x as u32,
                y as u32,
                image::Rgb([quantize_u8(p[0]), quantize_u8(p[1]), quantize_u8(p[2])]),
            );
        }
    }
    let mut out = Vec::new();
    image::DynamicImage::ImageRgb8(buf)
        .write_to(&mut std::io::Cursor::new(&mut out), image::ImageFormat::Png)
        .expect("png encode to memory");
    out
}

pub fn encode_mask_png(img: &MaskImage) -> Vec<u8> {
    let mut buf = image::GrayImage::new(img.width as u32, img.height as u32);
    for y in 0..img.height {
        for x in 0..img.width {
            buf.put_pixel(x as u32, y as u32, image::Luma([quantize_u8(img.get(x, y))]));
        }
    }
    let mut out = Vec::new();
    image::DynamicImage::ImageLuma8(buf)
        .write_to(&mut std::io::Cursor::new(&mut out), image::ImageFormat::Png)
        .expect("png encode to memory");
    out
}

pub fn encode_normal_png(img: &NormalImage) -> Vec<u8> {
    let mut buf: image::ImageBuffer<image::Rgb<u16>, Vec<u16>> =
        image::ImageBuffer::new(img.width as u32, img.height as u32);
    for y in 0..img.height {
        for x in 0..img.width {
            let n = img.get(x, y);
            buf.put_pixel(
                x as u32,
                y as u32,
                image::Rgb([
                    encode_normal_channel(n[0]),
                    encode_normal_channel(n[1]),
                    encode_normal_channel(n[2]),
                ]),
            );
        }
    }
    let mut out = Vec::new();
    image::DynamicImage::ImageRgb16(buf)
        .write_to(&mut std::io::Cursor::new(&mut out), image::ImageFormat::Png)
        .expect("png encode to memory");
    out
}

pub fn decode_rgb_png(bytes: &[u8]) -> Result<RgbImage> {
    let dyn_img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::InvalidImage(format!("png decode: {e}")))?;
    let rgb = dyn_img.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let mut out = RgbImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let p = rgb.get_pixel(x as u32, y as u32).0;
            out.set(x, y, [p[0] as f64 / 255.0, p[1] as f64 / 255.0, p[2] as f64 / 255.0]);
        }
    }
    Ok(out)
}

pub fn decode_mask_png(bytes: &[u8]) -> Result<MaskImage> {
    let dyn_img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::InvalidImage(format!("png decode: {e}")))?;
    let gray = dyn_img.to_luma8();
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let mut out = MaskImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            out.set(x, y, gray.get_pixel(x as u32, y as u32).0[0] as f64 / 255.0);
        }
    }
    Ok(out)
}

/// Decode a 16-bit normal PNG. Vectors are renormalized where `mask > 0.5`
/// when a mask is supplied; elsewhere the raw decoded values are kept.
pub fn decode_normal_png(bytes: &[u8], mask: Option<&MaskImage>) -> Result<NormalImage> {
    let dyn_img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::InvalidImage(format!("png decode: {e}")))?;
    let rgb16 = dyn_img.to_rgb16();
    let (w, h) = (rgb16.width() as usize, rgb16.height() as usize);
    let mut out = NormalImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let p = rgb16.get_pixel(x as u32, y as u32).0;
            let mut n = [
                decode_normal_channel(p[0]),
                decode_normal_channel(p[1]),
                decode_normal_channel(p[2]),
            ];
            if let Some(m) = mask {
                if x < m.width && y < m.height && m.get(x, y) > 0.5 {
                    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                    if len > 1e-12 {
                        n = [n[0] / len, n[1] / len, n[2] / len];
                    }
                }
            }
            out.set(x, y, n);
        }
    }
    Ok(out)
}

// --- Resampling -----------------------------------------------------------

fn resize_channels<const C: usize>(
    src: &[[f64; C]],
    sw: usize,
    sh: usize,
    dw: usize,
    dh: usize,
) -> Vec<[f64; C]> {
    // Box average when downscaling by integer factors, bilinear otherwise.
    let mut out = vec![[0.0; C]; dw * dh];
    if sw % dw == 0 && sh % dh == 0 {
        let kx = sw / dw;
        let ky = sh / dh;
        let inv = 1.0 / (kx * ky) as f64;
        for y in 0..dh {
            for x in 0..dw {
                let mut acc = [0.0; C];
                for j in 0..ky {
                    for i in 0..kx {
                        let s = src[(y * ky + j) * sw + x * kx + i];
                        for c in 0..C {
                            acc[c] += s[c];
                        }
                    }
                }
                for c in 0..C {
                    acc[c] *= inv;
                }
                out[y * dw + x] = acc;
            }
        }
    } else {
        for y in 0..dh {
            for x in 0..dw {
                let u = (x as f64 + 0.5) * sw as f64 / dw as f64 - 0.5;
                let v = (y as f64 + 0.5) * sh as f64 / dh as f64 - 0.5;
                let x0 = u.floor().clamp(0.0, (sw - 1) as f64) as usize;
                let y0 = v.floor().clamp(0.0, (sh - 1) as f64) as usize;
                let x1 = (x0 + 1).min(sw - 1);
                let y1 = (y0 + 1).min(sh - 1);
                let fx = (u - x0 as f64).clamp(0.0, 1.0);
                let fy = (v - y0 as f64).clamp(0.0, 1.0);
                let mut acc = [0.0; C];
                for c in 0..C {
                    let a = src[y0 * sw + x0][c] * (1.0 - fx) + src[y0 * sw + x1][c] * fx;
                    let b = src[y1 * sw + x0][c] * (1.0 - fx) + src[y1 * sw + x1][c] * fx;
                    acc[c] = a * (1.0 - fy) + b * fy;
                }
                out[y * dw + x] = acc;
            }
        }
    }
    out
}

impl RgbImage {
    pub fn resized(&self, w: usize, h: usize) -> RgbImage {
        RgbImage {
            width: w,
            height: h,
            data: resize_channels(&self.data, self.width, self.height, w, h),
        }
    }
}

impl MaskImage {
    pub fn resized(&self, w: usize, h: usize) -> MaskImage {
        let wrapped: Vec<[f64; 1]> = self.data.iter().map(|&v| [v]).collect();
        let data = resize_channels(&wrapped, self.width, self.height, w, h)
            .into_iter()
            .map(|v| v[0])
            .collect();
        MaskImage {
            width: w,
            height: h,
            data,
        }
    }
}

impl NormalImage {
    /// Resize and renormalize pixels that stay clearly foreground.
    pub fn resized(&self, w: usize, h: usize) -> NormalImage {
        let mut data = resize_channels(&self.data, self.width, self.height, w, h);
        for n in &mut data {
            let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            if len > 0.5 {
                *n = [n[0] / len, n[1] / len, n[2] / len];
            }
        }
        NormalImage {
            width: w,
            height: h,
            data,
        }
    }
}
