//! Text-map rasterization, 6-channel tensor composition and raster IO.
//!
//! A text-map is a 3-channel 8-bit raster the size of the source image: each
//! word box is filled with its quantized score triple, overlaps combine by
//! per-channel max, everything else stays 0. Maps and source images share one
//! buffer type ([`Raster3`]); [`Tensor6`] concatenates the two for export.
//!
//! Binary container (also used for text-map files with channel count 3):
//! magic `T6CH`, little-endian u32 width, u32 height, u8 channel count, then
//! `width * height * channels` bytes, row-major and pixel-interleaved.

use std::io::Cursor;

use thiserror::Error;

use crate::geometry::PixelBox;
use crate::lexicon::{Category, LexiconStats};
use crate::ocr::OcrDocument;
use crate::real::Real;
use crate::scoring::{score_word_with, ScoreConfig, ScoreTriple};

/// Interleaved 3-channel 8-bit raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster3 {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

/// A rendered text-map. Same layout as any other 3-channel raster.
pub type TextMap = Raster3;

/// 6-channel 8-bit tensor: `[image-R, image-G, image-B, map-R, map-G, map-B]`
/// per pixel, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tensor6 {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("dimension mismatch: image is {image_w}x{image_h}, map is {map_w}x{map_h}")]
    DimensionMismatch {
        image_w: u32,
        image_h: u32,
        map_w: u32,
        map_h: u32,
    },
    #[error("bad magic: expected `T6CH`")]
    BadMagic,
    #[error("truncated file: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("trailing data: expected {expected} bytes, found {found}")]
    TrailingData { expected: usize, found: usize },
    #[error("unsupported channel count: expected {expected}, found {found}")]
    UnsupportedChannels { expected: u8, found: u8 },
    #[error("invalid dimensions {width}x{height}")]
    BadDimensions { width: u32, height: u32 },
    #[error("png: {0}")]
    Png(String),
}

impl Raster3 {
    /// All-zero raster. Dimensions must be positive.
    pub fn new_zero(width: u32, height: u32) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        Self {
            width,
            height,
            data: vec![0; width as usize * height as usize * 3],
        }
    }

    pub fn from_data(width: u32, height: u32, data: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::BadDimensions { width, height });
        }
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(RasterError::Truncated {
                expected,
                found: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    fn index(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 3
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = self.index(x, y);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = self.index(x, y);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Fills `bbox` with `rgb`, combining per channel by max.
    pub fn fill_box_max(&mut self, bbox: &PixelBox, rgb: [u8; 3]) {
        let x1 = bbox.x1().min(self.width);
        let y1 = bbox.y1().min(self.height);
        for y in bbox.y0()..y1 {
            for x in bbox.x0()..x1 {
                let i = self.index(x, y);
                for (c, &v) in rgb.iter().enumerate() {
                    self.data[i + c] = self.data[i + c].max(v);
                }
            }
        }
    }

    /// Fills `bbox` with `rgb`, overwriting. Out-of-bounds parts are clipped.
    pub fn fill_box(&mut self, bbox: &PixelBox, rgb: [u8; 3]) {
        let x1 = bbox.x1().min(self.width);
        let y1 = bbox.y1().min(self.height);
        for y in bbox.y0().min(self.height)..y1 {
            for x in bbox.x0().min(self.width)..x1 {
                self.set(x, y, rgb);
            }
        }
    }

    pub fn fill(&mut self, rgb: [u8; 3]) {
        for px in self.data.chunks_exact_mut(3) {
            px.copy_from_slice(&rgb);
        }
    }
}

/// Round-half-up quantization of a score in `[0, 1]` to 8 bits.
pub fn quantize<S: Real>(score: S) -> u8 {
    let v = (score * S::from_u8(255).expect("255 fits")).round();
    v.to_u8().unwrap_or(if v > S::zero() { 255 } else { 0 })
}

/// Renders the text-map of `doc` for `category` with default scoring config.
pub fn render_textmap<S: Real>(
    doc: &OcrDocument,
    stats: &LexiconStats<S>,
    category: Category,
) -> TextMap {
    render_textmap_with(doc, stats, category, &ScoreConfig::default())
}

/// Renders the text-map of `doc` for `category`.
///
/// Each word box is filled with `round(score * 255)` per channel; overlapping
/// words combine per pixel by max, so word order never matters.
pub fn render_textmap_with<S: Real>(
    doc: &OcrDocument,
    stats: &LexiconStats<S>,
    category: Category,
    config: &ScoreConfig,
) -> TextMap {
    let mut map = Raster3::new_zero(doc.width, doc.height);
    for word in &doc.words {
        let triple = score_word_with(stats, word, category, config);
        map.fill_box_max(&word.bbox, quantize_triple(&triple));
    }
    map
}

pub fn quantize_triple<S: Real>(triple: &ScoreTriple<S>) -> [u8; 3] {
    [
        quantize(triple.red),
        quantize(triple.green),
        quantize(triple.blue),
    ]
}

/// Concatenates a source image with its text-map into a 6-channel tensor.
pub fn compose_6ch(image: &Raster3, map: &TextMap) -> Result<Tensor6, RasterError> {
    if image.width != map.width || image.height != map.height {
        return Err(RasterError::DimensionMismatch {
            image_w: image.width,
            image_h: image.height,
            map_w: map.width,
            map_h: map.height,
        });
    }
    let pixels = image.width as usize * image.height as usize;
    let mut data = Vec::with_capacity(pixels * 6);
    for i in 0..pixels {
        data.extend_from_slice(&image.data[i * 3..i * 3 + 3]);
        data.extend_from_slice(&map.data[i * 3..i * 3 + 3]);
    }
    Ok(Tensor6 {
        width: image.width,
        height: image.height,
        data,
    })
}

impl Tensor6 {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    /// Channel value at a pixel; channels 0-2 are the image, 3-5 the map.
    pub fn at(&self, x: u32, y: u32, channel: usize) -> u8 {
        self.data[(y as usize * self.width as usize + x as usize) * 6 + channel]
    }
}

const MAGIC: &[u8; 4] = b"T6CH";
const HEADER_LEN: usize = 13;

fn write_container(width: u32, height: u32, channels: u8, payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&width.to_le_bytes());
    out.extend_from_slice(&height.to_le_bytes());
    out.push(channels);
    out.extend_from_slice(payload);
    out
}

fn read_container(bytes: &[u8], expected_channels: u8) -> Result<(u32, u32, &[u8]), RasterError> {
    if bytes.len() < HEADER_LEN {
        return Err(RasterError::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(RasterError::BadMagic);
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let channels = bytes[12];
    if channels != expected_channels {
        return Err(RasterError::UnsupportedChannels {
            expected: expected_channels,
            found: channels,
        });
    }
    if width == 0 || height == 0 {
        return Err(RasterError::BadDimensions { width, height });
    }
    let payload_len = (width as u64)
        .checked_mul(height as u64)
        .and_then(|p| p.checked_mul(u64::from(channels)))
        .and_then(|p| usize::try_from(p).ok())
        .ok_or(RasterError::BadDimensions { width, height })?;
    let expected = HEADER_LEN + payload_len;
    if bytes.len() < expected {
        return Err(RasterError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(RasterError::TrailingData {
            expected,
            found: bytes.len(),
        });
    }
    Ok((width, height, &bytes[HEADER_LEN..]))
}

/// Serializes a tensor. The output is exactly `13 + w*h*6` bytes.
pub fn write_tensor6(t: &Tensor6) -> Vec<u8> {
    write_container(t.width, t.height, 6, &t.data)
}

pub fn read_tensor6(bytes: &[u8]) -> Result<Tensor6, RasterError> {
    let (width, height, payload) = read_container(bytes, 6)?;
    Ok(Tensor6 {
        width,
        height,
        data: payload.to_vec(),
    })
}

/// Serializes a 3-channel raster (text-map binary) in the same container.
pub fn write_raster3_bin(r: &Raster3) -> Vec<u8> {
    write_container(r.width, r.height, 3, &r.data)
}

pub fn read_raster3_bin(bytes: &[u8]) -> Result<Raster3, RasterError> {
    let (width, height, payload) = read_container(bytes, 3)?;
    Ok(Raster3 {
        width,
        height,
        data: payload.to_vec(),
    })
}

/// Encodes a raster as an 8-bit RGB PNG (lossless).
pub fn write_png(r: &Raster3) -> Result<Vec<u8>, RasterError> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(Cursor::new(&mut out), r.width, r.height);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| RasterError::Png(e.to_string()))?;
        writer
            .write_image_data(&r.data)
            .map_err(|e| RasterError::Png(e.to_string()))?;
    }
    Ok(out)
}

/// Decodes an 8-bit PNG into a 3-channel raster. Alpha, if present, is
/// dropped; grayscale is expanded.
pub fn read_png(bytes: &[u8]) -> Result<Raster3, RasterError> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|e| RasterError::Png(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| RasterError::Png(e.to_string()))?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(RasterError::Png(format!(
            "unsupported bit depth {:?}",
            info.bit_depth
        )));
    }
    let pixels = info.width as usize * info.height as usize;
    let data: Vec<u8> = match info.color_type {
        png::ColorType::Rgb => buf[..pixels * 3].to_vec(),
        png::ColorType::Rgba => {
            let mut d = Vec::with_capacity(pixels * 3);
            for px in buf[..pixels * 4].chunks_exact(4) {
                d.extend_from_slice(&px[..3]);
            }
            d
        }
        png::ColorType::Grayscale => {
            let mut d = Vec::with_capacity(pixels * 3);
            for &g in &buf[..pixels] {
                d.extend_from_slice(&[g, g, g]);
            }
            d
        }
        other => {
            return Err(RasterError::Png(format!("unsupported color type {other:?}")));
        }
    };
    Raster3::from_data(info.width, info.height, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{build_stats, AnnotatedDocument, GroundTruthRegion};
    use crate::ocr::OcrWord;

    fn word(text: &str, bbox: [u32; 4]) -> OcrWord {
        OcrWord {
            raw_text: text.to_string(),
            bbox: PixelBox::new(bbox[0], bbox[1], bbox[2], bbox[3]).unwrap(),
            confidence: 1.0,
        }
    }

    /// Stats where "solo" scores red 1.0 for ingredients.
    fn solo_stats() -> LexiconStats<f64> {
        let doc = AnnotatedDocument::new(
            OcrDocument {
                doc_id: "s".into(),
                width: 64,
                height: 64,
                words: vec![word("solo", [0, 0, 8, 8])],
            },
            vec![GroundTruthRegion {
                category: Category::Ingredients,
                bbox: PixelBox::new(0, 0, 32, 32).unwrap(),
            }],
        )
        .unwrap();
        build_stats(&[doc], 1.0).unwrap()
    }

    #[test]
    fn empty_document_renders_all_zero() {
        let doc = OcrDocument {
            doc_id: "d".into(),
            width: 8,
            height: 8,
            words: vec![],
        };
        let map = render_textmap(&doc, &solo_stats(), Category::Ingredients);
        assert!(map.data().iter().all(|&b| b == 0));
    }

    #[test]
    fn single_word_fills_exactly_its_box() {
        // "solo" has red = 1.0; box [2,2,5,4) covers 3x2 = 6 pixels.
        let doc = OcrDocument {
            doc_id: "d".into(),
            width: 8,
            height: 8,
            words: vec![word("solo", [2, 2, 5, 4])],
        };
        let map = render_textmap(&doc, &solo_stats(), Category::Ingredients);
        let mut red_255 = 0;
        for y in 0..8 {
            for x in 0..8 {
                let [r, _, _] = map.get(x, y);
                let inside = (2..5).contains(&x) && (2..4).contains(&y);
                if inside {
                    assert_eq!(r, 255, "at ({x}, {y})");
                    red_255 += 1;
                } else {
                    assert_eq!(r, 0, "at ({x}, {y})");
                }
            }
        }
        assert_eq!(red_255, 6);
    }

    #[test]
    fn quantization_rounds_half_up() {
        assert_eq!(quantize(0.4f64), 102);
        assert_eq!(quantize(0.6f64), 153);
        assert_eq!(quantize(0.0f64), 0);
        assert_eq!(quantize(1.0f64), 255);
        // 0.5/255 boundary: 127.5 rounds away from zero -> 128
        assert_eq!(quantize(127.5f64 / 255.0), 128);
    }

    #[test]
    fn overlap_combines_by_max() {
        let mut map = Raster3::new_zero(8, 8);
        let b = PixelBox::new(1, 1, 4, 4).unwrap();
        map.fill_box_max(&b, [quantize(0.4f64), 0, 0]);
        map.fill_box_max(&b, [quantize(0.6f64), 0, 0]);
        assert_eq!(map.get(2, 2)[0], 153);
        // Reverse order gives the same result.
        let mut map2 = Raster3::new_zero(8, 8);
        map2.fill_box_max(&b, [quantize(0.6f64), 0, 0]);
        map2.fill_box_max(&b, [quantize(0.4f64), 0, 0]);
        assert_eq!(map, map2);
    }

    #[test]
    fn compose_concatenates_channels() {
        let mut image = Raster3::new_zero(8, 8);
        image.fill([10, 20, 30]);
        let mut map = Raster3::new_zero(8, 8);
        map.set(3, 4, [100, 0, 200]);
        let t = compose_6ch(&image, &map).unwrap();
        assert_eq!(
            [t.at(3, 4, 0), t.at(3, 4, 1), t.at(3, 4, 2)],
            [10, 20, 30]
        );
        assert_eq!(
            [t.at(3, 4, 3), t.at(3, 4, 4), t.at(3, 4, 5)],
            [100, 0, 200]
        );
        assert_eq!(t.at(0, 0, 3), 0);
    }

    #[test]
    fn compose_rejects_dimension_mismatch() {
        let image = Raster3::new_zero(8, 8);
        let map = Raster3::new_zero(16, 16);
        let err = compose_6ch(&image, &map).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("8x8") && msg.contains("16x16"), "{msg}");
    }

    #[test]
    fn tensor_round_trip_and_size() {
        let mut image = Raster3::new_zero(5, 3);
        image.fill([1, 2, 3]);
        let mut map = Raster3::new_zero(5, 3);
        map.set(4, 2, [9, 8, 7]);
        let t = compose_6ch(&image, &map).unwrap();
        let bytes = write_tensor6(&t);
        assert_eq!(bytes.len(), 13 + 5 * 3 * 6);
        assert_eq!(read_tensor6(&bytes).unwrap(), t);
    }

    #[test]
    fn tensor_read_errors() {
        let t = compose_6ch(&Raster3::new_zero(4, 4), &Raster3::new_zero(4, 4)).unwrap();
        let bytes = write_tensor6(&t);

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(read_tensor6(&bad_magic), Err(RasterError::BadMagic)));

        let truncated = &bytes[..bytes.len() - 5];
        assert!(matches!(
            read_tensor6(truncated),
            Err(RasterError::Truncated { .. })
        ));

        // A 3-channel container is not a tensor file.
        let map_bytes = write_raster3_bin(&Raster3::new_zero(4, 4));
        assert!(matches!(
            read_tensor6(&map_bytes),
            Err(RasterError::UnsupportedChannels {
                expected: 6,
                found: 3
            })
        ));
    }

    #[test]
    fn raster_bin_round_trip() {
        let mut r = Raster3::new_zero(7, 2);
        r.set(6, 1, [200, 100, 50]);
        let bytes = write_raster3_bin(&r);
        assert_eq!(bytes.len(), 13 + 7 * 2 * 3);
        assert_eq!(read_raster3_bin(&bytes).unwrap(), r);
    }

    #[test]
    fn png_round_trip_is_pixel_exact() {
        let mut r = Raster3::new_zero(9, 4);
        for (i, b) in r.data.iter_mut().enumerate() {
            *b = (i * 7 % 256) as u8;
        }
        let bytes = write_png(&r).unwrap();
        let back = read_png(&bytes).unwrap();
        assert_eq!(back, r);
        // Re-encode equality.
        assert_eq!(write_png(&back).unwrap(), bytes);
    }

    #[test]
    fn png_one_red_pixel() {
        let mut r = Raster3::new_zero(1, 1);
        r.set(0, 0, [255, 0, 0]);
        let back = read_png(&write_png(&r).unwrap()).unwrap();
        assert_eq!(back.get(0, 0), [255, 0, 0]);
    }

    #[test]
    fn png_all_zero_round_trip() {
        let r = Raster3::new_zero(6, 6);
        let back = read_png(&write_png(&r).unwrap()).unwrap();
        assert!(back.data().iter().all(|&b| b == 0));
    }
}
