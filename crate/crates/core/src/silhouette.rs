//! Target shadow images, binarization, resampling and overlap metrics.

use std::path::Path;

use image::{ColorType, DynamicImage, GrayImage};
use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

/// Row-major single-channel image; row 0 is the top.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Real> Image<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("image has zero size".into()));
        }
        if data.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                found: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: T) -> Self {
        assert!(width > 0 && height > 0, "image has zero size");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> T) -> Self {
        assert!(width > 0 && height > 0, "image has zero size");
        let data = (0..height)
            .flat_map(|row| (0..width).map(move |col| (col, row)))
            .map(|(col, row)| f(col, row))
            .collect();
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> T {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, col: usize, row: usize, v: T) {
        self.data[row * self.width + col] = v;
    }

    pub fn same_shape<U: Real>(&self, other: &Image<U>) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: other.width,
                right_height: other.height,
            });
        }
        Ok(())
    }

    /// Foreground mask: `value >= threshold`.
    pub fn mask(&self, threshold: T) -> Vec<bool> {
        self.data.iter().map(|&v| v >= threshold).collect()
    }

    pub fn binarized(&self, threshold: T) -> Self {
        let data = self
            .data
            .iter()
            .map(|&v| if v >= threshold { T::one() } else { T::zero() })
            .collect();
        Self {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub fn cast<U: Real>(&self) -> Image<U> {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
        }
    }

    /// Quantizes `[0,1]` values to 8-bit gray.
    pub fn to_gray8(&self) -> GrayImage {
        let bytes = self
            .data
            .iter()
            .map(|v| (v.to_f64_lossy().clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        GrayImage::from_raw(self.width as u32, self.height as u32, bytes)
            .expect("buffer length matches dimensions")
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_gray8()
            .save_with_format(path, image::ImageFormat::Png)?;
        Ok(())
    }

    fn resample_nearest(&self, width: usize, height: usize) -> Self {
        let (sw, sh) = (self.width, self.height);
        Self::from_fn(width, height, |col, row| {
            let sc = ((col * 2 + 1) * sw / (width * 2)).min(sw - 1);
            let sr = ((row * 2 + 1) * sh / (height * 2)).min(sh - 1);
            self.get(sc, sr)
        })
    }

    fn resample_bilinear(&self, width: usize, height: usize) -> Self {
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        let max_c = (self.width - 1) as f64;
        let max_r = (self.height - 1) as f64;
        Self::from_fn(width, height, |col, row| {
            let x = ((col as f64 + 0.5) * sx - 0.5).clamp(0.0, max_c);
            let y = ((row as f64 + 0.5) * sy - 0.5).clamp(0.0, max_r);
            let (x0, y0) = (x.floor() as usize, y.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(self.width - 1), (y0 + 1).min(self.height - 1));
            let (fx, fy) = (T::lit(x - x0 as f64), T::lit(y - y0 as f64));
            let one = T::one();
            let top = self.get(x0, y0) * (one - fx) + self.get(x1, y0) * fx;
            let bottom = self.get(x0, y1) * (one - fx) + self.get(x1, y1) * fx;
            top * (one - fy) + bottom * fy
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetMode {
    #[default]
    Binary,
    Grayscale,
}

/// A target shadow: per-pixel values in `[0,1]` with 1 meaning shadow.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetImage<T> {
    image: Image<T>,
    mode: TargetMode,
}

impl<T: Real> TargetImage<T> {
    /// Wraps an image, checking the value range for the mode.
    pub fn new(image: Image<T>, mode: TargetMode) -> Result<Self> {
        for &v in image.data() {
            let ok = match mode {
                TargetMode::Binary => v == T::zero() || v == T::one(),
                TargetMode::Grayscale => v >= T::zero() && v <= T::one(),
            };
            if !ok {
                return Err(Error::InvalidArgument(format!(
                    "target value {v} not allowed in {mode:?} mode"
                )));
            }
        }
        Ok(Self { image, mode })
    }

    /// Binary target from a boolean mask.
    pub fn from_mask(width: usize, height: usize, mask: &[bool]) -> Result<Self> {
        let data = mask
            .iter()
            .map(|&m| if m { T::one() } else { T::zero() })
            .collect();
        Self::new(Image::new(width, height, data)?, TargetMode::Binary)
    }

    pub fn image(&self) -> &Image<T> {
        &self.image
    }

    pub fn mode(&self) -> TargetMode {
        self.mode
    }

    pub fn width(&self) -> usize {
        self.image.width
    }

    pub fn height(&self) -> usize {
        self.image.height
    }

    /// Nearest-neighbor for binary targets, bilinear for grayscale.
    pub fn resampled(&self, width: usize, height: usize) -> Self {
        if width == self.width() && height == self.height() {
            return self.clone();
        }
        let image = match self.mode {
            TargetMode::Binary => self.image.resample_nearest(width, height),
            TargetMode::Grayscale => self.image.resample_bilinear(width, height),
        };
        Self { image, mode: self.mode }
    }
}

/// Loads an 8-bit gray or RGB PNG/PGM as a target.
///
/// RGB is reduced to luminance. In binary mode a pixel is foreground iff
/// `luma/255 >= threshold`, flipped when `invert` is set; in grayscale mode
/// the value is `luma/255` (or `1 - luma/255` when inverted).
pub fn load_target<T: Real>(
    path: impl AsRef<Path>,
    threshold: f64,
    mode: TargetMode,
    invert: bool,
) -> Result<TargetImage<T>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold must lie in (0,1), got {threshold}"
        )));
    }
    let path = path.as_ref();
    let decoded = image::ImageReader::open(path)?
        .with_guessed_format()?
        .decode()?;
    decode_target(decoded, threshold, mode, invert)
}

fn decode_target<T: Real>(
    decoded: DynamicImage,
    threshold: f64,
    mode: TargetMode,
    invert: bool,
) -> Result<TargetImage<T>> {
    match decoded.color() {
        ColorType::L8 | ColorType::La8 | ColorType::Rgb8 | ColorType::Rgba8 => {}
        other => {
            return Err(Error::UnsupportedImage(format!(
                "only 8-bit gray or RGB images are supported, got {other:?}"
            )))
        }
    }
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::UnsupportedImage("zero-size image".into()));
    }
    let luma = decoded.to_luma8();
    let data = luma
        .as_raw()
        .iter()
        .map(|&b| {
            let v = f64::from(b) / 255.0;
            match mode {
                TargetMode::Binary => {
                    if (v >= threshold) != invert {
                        T::one()
                    } else {
                        T::zero()
                    }
                }
                TargetMode::Grayscale => T::lit(if invert { 1.0 - v } else { v }),
            }
        })
        .collect();
    TargetImage::new(Image::new(w, h, data)?, mode)
}

fn overlap_counts<T: Real>(a: &Image<T>, b: &Image<T>, threshold: T) -> Result<(usize, usize, usize)> {
    a.same_shape(b)?;
    let mut inter = 0;
    let mut count_a = 0;
    let mut count_b = 0;
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let (fa, fb) = (x >= threshold, y >= threshold);
        count_a += usize::from(fa);
        count_b += usize::from(fb);
        inter += usize::from(fa && fb);
    }
    Ok((inter, count_a, count_b))
}

/// Intersection over union of the two foregrounds. Two empty foregrounds score 1.
pub fn iou<T: Real>(a: &Image<T>, b: &Image<T>, threshold: T) -> Result<f64> {
    let (inter, ca, cb) = overlap_counts(a, b, threshold)?;
    let union = ca + cb - inter;
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// Dice score `2|A∩B| / (|A|+|B|)`. Two empty foregrounds score 1.
pub fn dice<T: Real>(a: &Image<T>, b: &Image<T>, threshold: T) -> Result<f64> {
    let (inter, ca, cb) = overlap_counts(a, b, threshold)?;
    let total = ca + cb;
    Ok(if total == 0 { 1.0 } else { 2.0 * inter as f64 / total as f64 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewMetric {
    pub name: String,
    pub iou: f64,
    pub dice: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub views: Vec<ViewMetric>,
    pub mean_iou: f64,
    pub mean_dice: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal_consistency: Option<f64>,
}

impl MetricReport {
    /// Scores `(name, rendered, target)` triples.
    pub fn compute<'a, T: Real>(
        views: impl IntoIterator<Item = (String, &'a Image<T>, &'a Image<T>)>,
        threshold: T,
    ) -> Result<Self> {
        let mut out = Vec::new();
        for (name, rendered, target) in views {
            out.push(ViewMetric {
                name,
                iou: iou(rendered, target, threshold)?,
                dice: dice(rendered, target, threshold)?,
            });
        }
        Ok(Self::from_views(out))
    }

    pub fn from_views(views: Vec<ViewMetric>) -> Self {
        let n = views.len().max(1) as f64;
        let mean_iou = views.iter().map(|v| v.iou).sum::<f64>() / n;
        let mean_dice = views.iter().map(|v| v.dice).sum::<f64>() / n;
        Self {
            views,
            mean_iou,
            mean_dice,
            normal_consistency: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
