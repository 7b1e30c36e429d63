//! 8-bit PNG/JPEG boundary. Samples become `v / 255` on load and
//! `round_half_up(v * 255)` on save; nothing else in the crate quantizes.

use std::io::Cursor;
use std::path::Path;

use image::codecs::jpeg::JpegEncoder;
use image::{DynamicImage, ExtendedColorType, GrayImage, ImageFormat, RgbImage};

use super::buffer::ImageBuf;
use crate::error::{Error, Result};

/// `v * 255` rounded half up, clamped to a byte.
pub fn quantize(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn dequantize(b: u8) -> f64 {
    f64::from(b) / 255.0
}

pub fn to_bytes(img: &ImageBuf) -> Vec<u8> {
    img.data().iter().map(|&v| quantize(v)).collect()
}

pub fn from_bytes(width: usize, height: usize, channels: usize, bytes: &[u8]) -> Result<ImageBuf> {
    ImageBuf::new(
        width,
        height,
        channels,
        bytes.iter().map(|&b| dequantize(b)).collect(),
    )
}

fn from_dynamic(decoded: DynamicImage) -> Result<ImageBuf> {
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    if decoded.color().has_color() {
        from_bytes(w, h, 3, decoded.to_rgb8().as_raw())
    } else {
        from_bytes(w, h, 1, decoded.to_luma8().as_raw())
    }
}

fn to_dynamic(img: &ImageBuf) -> Result<DynamicImage> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let bytes = to_bytes(img);
    let out = match img.channels() {
        1 => GrayImage::from_raw(w, h, bytes).map(DynamicImage::ImageLuma8),
        _ => RgbImage::from_raw(w, h, bytes).map(DynamicImage::ImageRgb8),
    };
    out.ok_or_else(|| Error::Shape("buffer does not match its dimensions".into()))
}

/// Reads a PNG or JPEG file. Alpha is dropped; gray stays single channel.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageBuf> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let format = image::guess_format(&bytes).map_err(|e| Error::Format(e.to_string()))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Jpeg) {
        return Err(Error::Format(format!("{format:?} is not PNG or JPEG")));
    }
    let decoded = image::load_from_memory_with_format(&bytes, format)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    from_dynamic(decoded)
}

/// Writes an 8-bit PNG.
pub fn save_image(img: &ImageBuf, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut encoded = Vec::new();
    to_dynamic(img)?
        .write_to(&mut Cursor::new(&mut encoded), ImageFormat::Png)
        .map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(path, encoded).map_err(|e| Error::io(path, e))
}

/// Lossy JPEG encode/decode round trip at `quality` (1..=100).
pub fn jpeg_round_trip(img: &ImageBuf, quality: u8) -> Result<ImageBuf> {
    let quality = quality.clamp(1, 100);
    let bytes = to_bytes(img);
    let color = if img.channels() == 1 {
        ExtendedColorType::L8
    } else {
        ExtendedColorType::Rgb8
    };
    let mut encoded = Vec::new();
    JpegEncoder::new_with_quality(&mut encoded, quality)
        .encode(&bytes, img.width() as u32, img.height() as u32, color)
        .map_err(|e| Error::Format(e.to_string()))?;
    let decoded = image::load_from_memory_with_format(&encoded, ImageFormat::Jpeg)
        .map_err(|e| Error::Format(e.to_string()))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    if img.channels() == 1 {
        from_bytes(w, h, 1, decoded.to_luma8().as_raw())
    } else {
        from_bytes(w, h, 3, decoded.to_rgb8().as_raw())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantization_examples() {
        assert_eq!(quantize(1.0), 255);
        assert_eq!(quantize(0.5), 128);
        assert_eq!(quantize(0.0), 0);
    }

    #[test]
    fn quantize_inverts_dequantize_for_every_byte() {
        for b in 0..=255u8 {
            assert_eq!(quantize(dequantize(b)), b);
        }
    }

    #[test]
    fn png_round_trip_every_byte_value() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ramp.png");
        let ramp = ImageBuf::from_fn(256, 1, 1, |x, _, _| dequantize(x as u8)).unwrap();
        save_image(&ramp, &path).unwrap();
        assert_eq!(load_image(&path).unwrap(), ramp);

        let rgb = ImageBuf::from_fn(16, 16, 3, |x, y, c| dequantize((x * 16 + y + c * 7) as u8)).unwrap();
        let path = dir.path().join("rgb.png");
        save_image(&rgb, &path).unwrap();
        assert_eq!(load_image(&path).unwrap(), rgb);
    }

    #[test]
    fn load_examples() {
        let dir = tempfile::tempdir().unwrap();
        let white = dir.path().join("white.png");
        RgbImage::from_pixel(2, 2, image::Rgb([255, 255, 255])).save(&white).unwrap();
        let img = load_image(&white).unwrap();
        assert_eq!(img.channels(), 3);
        assert!(img.data().iter().all(|&v| v == 1.0));

        let black = dir.path().join("black.png");
        GrayImage::from_pixel(1, 1, image::Luma([0])).save(&black).unwrap();
        let img = load_image(&black).unwrap();
        assert_eq!((img.channels(), img.data()), (1, &[0.0][..]));

        let rgba = dir.path().join("rgba.png");
        image::RgbaImage::from_pixel(1, 1, image::Rgba([10, 20, 30, 40])).save(&rgba).unwrap();
        let img = load_image(&rgba).unwrap();
        assert_eq!(img.pixel(0, 0), &[10.0 / 255.0, 20.0 / 255.0, 30.0 / 255.0]);
    }

    #[test]
    fn load_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_image(dir.path().join("missing.png")), Err(Error::Io { .. })));
        let junk = dir.path().join("junk.png");
        std::fs::write(&junk, b"definitely not an image").unwrap();
        assert!(matches!(load_image(&junk), Err(Error::Format(_))));
    }

    #[test]
    fn save_to_unwritable_path_is_io_error() {
        let img = ImageBuf::filled(1, 1, 1, 0.5).unwrap();
        let err = save_image(&img, "/nonexistent-dir/sub/out.png").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn jpeg_quality_100_is_close() {
        let img = ImageBuf::from_fn(32, 32, 3, |x, y, c| ((x * 7 + y * 3 + c * 11) % 64) as f64 / 63.0)
            .unwrap();
        let back = jpeg_round_trip(&img, 100).unwrap();
        let mae: f64 = img
            .data()
            .iter()
            .zip(back.data())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / img.data().len() as f64;
        assert!(mae < 0.02, "mae {mae}");
    }
}
