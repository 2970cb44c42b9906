//! Deterministic baseline region detector over a text-map.
//!
//! Pipeline: per-pixel relevance (max of the 3 channels), binarization,
//! morphological closing with a square structuring element, 4-connected
//! components via union-find, then one box per component with the mean
//! relevance of its pre-closing foreground pixels as confidence.

use crate::geometry::PixelBox;
use crate::lexicon::Category;
use crate::raster::TextMap;
use crate::real::{from_u64, Real};
use crate::Score;

/// Detector knobs. `binarize_threshold` is inclusive: a pixel is foreground
/// when its relevance is >= the threshold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectorParams {
    pub binarize_threshold: u8,
    /// Radius of the square closing element; 0 disables closing.
    pub close_radius: u32,
    /// Components whose bounding box covers fewer px^2 are dropped.
    pub min_area: u64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            binarize_threshold: 128,
            close_radius: 8,
            min_area: 400,
        }
    }
}

/// One detected region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionBox<S: Real = Score> {
    pub bbox: PixelBox,
    pub confidence: S,
    pub category: Category,
}

/// Runs the baseline detector on a text-map.
///
/// Output is sorted by descending confidence, ties broken by (y0, x0).
/// Confidences are exact ratios of integer sums, so ordering never depends on
/// pixel traversal order.
pub fn detect_regions<S: Real>(
    map: &TextMap,
    category: Category,
    params: &DetectorParams,
) -> Vec<DetectionBox<S>> {
    let w = map.width() as usize;
    let h = map.height() as usize;

    let relevance = relevance_map(map);
    let original = binarize(&relevance, params.binarize_threshold);
    let closed = close(&original, w, h, params.close_radius);

    let labels = label_components(&closed, w, h);

    #[derive(Clone)]
    struct Component {
        min_x: usize,
        min_y: usize,
        max_x: usize,
        max_y: usize,
        relevance_sum: u64,
        original_count: u64,
    }

    let mut components: Vec<Option<Component>> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let Some(label) = labels[i] else { continue };
            if label >= components.len() {
                components.resize(label + 1, None);
            }
            let comp = components[label].get_or_insert(Component {
                min_x: x,
                min_y: y,
                max_x: x,
                max_y: y,
                relevance_sum: 0,
                original_count: 0,
            });
            comp.min_x = comp.min_x.min(x);
            comp.min_y = comp.min_y.min(y);
            comp.max_x = comp.max_x.max(x);
            comp.max_y = comp.max_y.max(y);
            if original[i] {
                comp.relevance_sum += u64::from(relevance[i]);
                comp.original_count += 1;
            }
        }
    }

    let mut out: Vec<DetectionBox<S>> = Vec::new();
    for comp in components.into_iter().flatten() {
        let bbox = PixelBox::new(
            comp.min_x as u32,
            comp.min_y as u32,
            comp.max_x as u32 + 1,
            comp.max_y as u32 + 1,
        )
        .expect("component box is non-degenerate");
        if bbox.area() < params.min_area {
            continue;
        }
        let confidence = if comp.original_count == 0 {
            S::zero()
        } else {
            from_u64::<S>(comp.relevance_sum) / (from_u64::<S>(comp.original_count * 255))
        };
        out.push(DetectionBox {
            bbox,
            confidence,
            category,
        });
    }

    sort_detections(&mut out);
    out
}

/// Descending confidence, ties by (y0, x0).
pub fn sort_detections<S: Real>(detections: &mut [DetectionBox<S>]) {
    detections.sort_by(|a, b| {
        b.confidence
            .partial_cmp(&a.confidence)
            .expect("confidences are never NaN")
            .then_with(|| a.bbox.y0().cmp(&b.bbox.y0()))
            .then_with(|| a.bbox.x0().cmp(&b.bbox.x0()))
    });
}

fn relevance_map(map: &TextMap) -> Vec<u8> {
    map.data()
        .chunks_exact(3)
        .map(|px| px[0].max(px[1]).max(px[2]))
        .collect()
}

fn binarize(relevance: &[u8], threshold: u8) -> Vec<bool> {
    relevance.iter().map(|&v| v >= threshold).collect()
}

/// Morphological closing (dilate then erode) with a `(2r+1)^2` square element.
/// Windows are clipped at the image border, which keeps closing extensive:
/// every foreground pixel of the input survives.
fn close(mask: &[bool], w: usize, h: usize, radius: u32) -> Vec<bool> {
    if radius == 0 {
        return mask.to_vec();
    }
    let r = radius as usize;
    let dilated = window_filter(mask, w, h, r, false);
    window_filter(&dilated, w, h, r, true)
}

/// Separable square-window filter via per-line prefix sums.
/// `require_all = false` computes dilation (any foreground in the window),
/// `true` computes erosion (window entirely foreground).
fn window_filter(mask: &[bool], w: usize, h: usize, r: usize, require_all: bool) -> Vec<bool> {
    let horizontal = line_filter(mask, w, h, r, require_all, true);
    line_filter(&horizontal, w, h, r, require_all, false)
}

fn line_filter(
    mask: &[bool],
    w: usize,
    h: usize,
    r: usize,
    require_all: bool,
    rows: bool,
) -> Vec<bool> {
    let (lines, len) = if rows { (h, w) } else { (w, h) };
    let mut out = vec![false; w * h];
    let mut prefix = vec![0u32; len + 1];
    for line in 0..lines {
        let at = |i: usize| if rows { line * w + i } else { i * w + line };
        for i in 0..len {
            prefix[i + 1] = prefix[i] + u32::from(mask[at(i)]);
        }
        for i in 0..len {
            let lo = i.saturating_sub(r);
            let hi = (i + r + 1).min(len);
            let count = prefix[hi] - prefix[lo];
            out[at(i)] = if require_all {
                count as usize == hi - lo
            } else {
                count > 0
            };
        }
    }
    out
}

/// Two-pass 4-connected component labeling with union-find.
/// Returns dense labels in first-encounter (row-major) order.
fn label_components(mask: &[bool], w: usize, h: usize) -> Vec<Option<usize>> {
    let mut parent: Vec<usize> = Vec::new();
    let mut raw = vec![usize::MAX; w * h];

    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !mask[i] {
                continue;
            }
            let left = if x > 0 && mask[i - 1] {
                Some(raw[i - 1])
            } else {
                None
            };
            let up = if y > 0 && mask[i - w] {
                Some(raw[i - w])
            } else {
                None
            };
            raw[i] = match (left, up) {
                (None, None) => {
                    let label = parent.len();
                    parent.push(label);
                    label
                }
                (Some(l), None) => find(&mut parent, l),
                (None, Some(u)) => find(&mut parent, u),
                (Some(l), Some(u)) => {
                    let rl = find(&mut parent, l);
                    let ru = find(&mut parent, u);
                    let root = rl.min(ru);
                    parent[rl] = root;
                    parent[ru] = root;
                    root
                }
            };
        }
    }

    // Second pass: resolve roots and compact to dense labels.
    let mut dense: Vec<Option<usize>> = vec![None; parent.len()];
    let mut next = 0;
    let mut out = vec![None; w * h];
    for (i, &label) in raw.iter().enumerate() {
        if label == usize::MAX {
            continue;
        }
        let root = find(&mut parent, label);
        let d = *dense[root].get_or_insert_with(|| {
            let d = next;
            next += 1;
            d
        });
        out[i] = Some(d);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Raster3;

    fn map_with(boxes: &[([u32; 4], u8)], w: u32, h: u32) -> TextMap {
        let mut map = Raster3::new_zero(w, h);
        for (b, v) in boxes {
            let bbox = PixelBox::new(b[0], b[1], b[2], b[3]).unwrap();
            map.fill_box_max(&bbox, [*v, 0, 0]);
        }
        map
    }

    #[test]
    fn all_zero_map_detects_nothing() {
        let map = Raster3::new_zero(64, 64);
        let got: Vec<DetectionBox<f64>> =
            detect_regions(&map, Category::Ingredients, &DetectorParams::default());
        assert!(got.is_empty());
    }

    #[test]
    fn solid_rectangle_is_detected_exactly() {
        let map = map_with(&[([10, 10, 50, 30], 200)], 64, 64);
        let got: Vec<DetectionBox<f64>> =
            detect_regions(&map, Category::Ingredients, &DetectorParams::default());
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].bbox, PixelBox::new(10, 10, 50, 30).unwrap());
        assert_eq!(got[0].confidence, 200.0 / 255.0);
        assert_eq!(got[0].category, Category::Ingredients);
    }

    #[test]
    fn gap_wider_than_twice_radius_stays_split() {
        let params = DetectorParams {
            close_radius: 4,
            min_area: 50,
            ..Default::default()
        };
        // Gap of 9 > 2 * 4 -> two components.
        let map = map_with(&[([5, 5, 20, 25], 220), ([29, 5, 44, 25], 220)], 64, 64);
        let got: Vec<DetectionBox<f64>> = detect_regions(&map, Category::Ingredients, &params);
        assert_eq!(got.len(), 2);

        // Gap of 8 <= 2 * 4 -> merged into one spanning box.
        let map = map_with(&[([5, 5, 20, 25], 220), ([28, 5, 43, 25], 220)], 64, 64);
        let got: Vec<DetectionBox<f64>> = detect_regions(&map, Category::Ingredients, &params);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].bbox, PixelBox::new(5, 5, 43, 25).unwrap());
    }

    #[test]
    fn min_area_filters_small_components() {
        let params = DetectorParams {
            close_radius: 0,
            min_area: 100,
            ..Default::default()
        };
        let map = map_with(&[([0, 0, 5, 5], 255), ([20, 20, 40, 40], 255)], 64, 64);
        let got: Vec<DetectionBox<f64>> = detect_regions(&map, Category::Ingredients, &params);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].bbox, PixelBox::new(20, 20, 40, 40).unwrap());
    }

    #[test]
    fn below_threshold_pixels_are_background() {
        let map = map_with(&[([10, 10, 40, 40], 127)], 64, 64);
        let got: Vec<DetectionBox<f64>> =
            detect_regions(&map, Category::Ingredients, &DetectorParams::default());
        assert!(got.is_empty());
        // Exactly at the threshold is foreground.
        let map = map_with(&[([10, 10, 40, 40], 128)], 64, 64);
        let got: Vec<DetectionBox<f64>> =
            detect_regions(&map, Category::Ingredients, &DetectorParams::default());
        assert_eq!(got.len(), 1);
    }

    #[test]
    fn confidence_averages_only_original_pixels() {
        // Two blocks bridged by closing; the bridge pixels are not original
        // foreground and do not dilute the confidence.
        let params = DetectorParams {
            close_radius: 4,
            min_area: 10,
            ..Default::default()
        };
        let map = map_with(&[([0, 0, 10, 10], 200), ([14, 0, 24, 10], 150)], 32, 32);
        let got: Vec<DetectionBox<f64>> = detect_regions(&map, Category::Ingredients, &params);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].bbox, PixelBox::new(0, 0, 24, 10).unwrap());
        // 100 px at 200 plus 100 px at 150 over 200 px of max intensity.
        assert_eq!(got[0].confidence, 35000.0 / 51000.0);
    }

    #[test]
    fn raising_threshold_never_grows_foreground() {
        let map = map_with(
            &[([3, 3, 20, 15], 130), ([30, 20, 60, 50], 180), ([1, 40, 9, 60], 250)],
            64, 64,
        );
        let relevance = relevance_map(&map);
        let mut prev = binarize(&relevance, 0).iter().filter(|&&b| b).count();
        for t in 1..=255u32 {
            let count = binarize(&relevance, t as u8).iter().filter(|&&b| b).count();
            assert!(count <= prev, "threshold {t} grew foreground");
            prev = count;
        }
    }

    #[test]
    fn closing_is_extensive() {
        let map = map_with(&[([5, 5, 9, 9], 255), ([60, 60, 64, 64], 255)], 64, 64);
        let relevance = relevance_map(&map);
        let original = binarize(&relevance, 128);
        let closed = close(&original, 64, 64, 8);
        for (i, &fg) in original.iter().enumerate() {
            if fg {
                assert!(closed[i], "closing dropped original pixel {i}");
            }
        }
    }

    #[test]
    fn labels_are_4_connected() {
        // Diagonal pixels are separate components under 4-connectivity.
        let mut map = Raster3::new_zero(4, 4);
        map.set(0, 0, [255, 0, 0]);
        map.set(1, 1, [255, 0, 0]);
        let relevance = relevance_map(&map);
        let mask = binarize(&relevance, 128);
        let labels = label_components(&mask, 4, 4);
        assert_ne!(labels[0], labels[5]);
        assert!(labels[0].is_some() && labels[5].is_some());
    }

    #[test]
    fn output_order_is_confidence_then_position() {
        let params = DetectorParams {
            close_radius: 0,
            min_area: 4,
            ..Default::default()
        };
        let map = map_with(
            &[
                ([0, 0, 4, 4], 200),
                ([20, 0, 24, 4], 250),
                ([0, 20, 4, 24], 200),
            ],
            32,
            32,
        );
        let got: Vec<DetectionBox<f64>> = detect_regions(&map, Category::Ingredients, &params);
        assert_eq!(got.len(), 3);
        assert_eq!(got[0].bbox.x0(), 20); // highest confidence first
        assert_eq!(got[1].bbox, PixelBox::new(0, 0, 4, 4).unwrap()); // tie: smaller y0
        assert_eq!(got[2].bbox, PixelBox::new(0, 20, 4, 24).unwrap());
    }
}
