//! Detection evaluation: IoU matching, precision/recall/accuracy and
//! qualitative overlays.
//!
//! Matching follows the conventional detection protocol: predictions below
//! the confidence gate are dropped, survivors are matched greedily in
//! confidence order to the unmatched ground-truth box with the highest IoU,
//! and a match counts only when that IoU reaches the threshold. Accuracy is
//! `tp / (tp + fp + fn)`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::detector::DetectionBox;
use crate::geometry::PixelBox;
use crate::lexicon::{Category, GroundTruthRegion};
use crate::raster::Raster3;
use crate::real::{ratio, Real};
use crate::Score;

/// Matching thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalParams<S: Real = Score> {
    /// Minimum IoU for a prediction to claim a ground-truth box; in (0, 1].
    pub iou_threshold: S,
    /// Predictions below this confidence are dropped before matching.
    pub confidence_threshold: S,
}

impl<S: Real> Default for EvalParams<S> {
    fn default() -> Self {
        Self {
            iou_threshold: S::from_f64(0.5).expect("0.5"),
            confidence_threshold: S::from_f64(0.7).expect("0.7"),
        }
    }
}

/// Intersection over union of two boxes, half-open semantics.
pub fn iou<S: Real>(a: &PixelBox, b: &PixelBox) -> S {
    ratio(a.intersection_area(b), a.union_area(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchLabel {
    TruePositive,
    FalsePositive,
    FalseNegative,
}

/// A prediction or ground-truth box with its match outcome. Ground-truth
/// boxes (false negatives) carry no confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledBox<S: Real = Score> {
    pub bbox: PixelBox,
    pub category: Category,
    pub label: MatchLabel,
    pub confidence: Option<S>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CategoryCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub false_negatives: u64,
}

impl CategoryCounts {
    pub fn add(&mut self, other: &CategoryCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.false_negatives += other.false_negatives;
    }
}

/// Match result for one document.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome<S: Real = Score> {
    /// Counts for every category (zero-filled for absent ones).
    pub counts: BTreeMap<Category, CategoryCounts>,
    /// Every gated prediction labeled TP/FP plus every unmatched GT as FN.
    pub boxes: Vec<LabeledBox<S>>,
}

/// Matches predictions against ground truth, independently per category.
pub fn match_detections<S: Real>(
    preds: &[DetectionBox<S>],
    gts: &[GroundTruthRegion],
    params: &EvalParams<S>,
) -> MatchOutcome<S> {
    let mut counts: BTreeMap<Category, CategoryCounts> = Category::ALL
        .iter()
        .map(|c| (*c, CategoryCounts::default()))
        .collect();
    let mut boxes = Vec::new();

    for category in Category::ALL {
        let mut kept: Vec<&DetectionBox<S>> = preds
            .iter()
            .filter(|p| p.category == category && p.confidence >= params.confidence_threshold)
            .collect();
        kept.sort_by(|a, b| {
            b.confidence
                .partial_cmp(&a.confidence)
                .expect("confidences are never NaN")
                .then_with(|| a.bbox.y0().cmp(&b.bbox.y0()))
                .then_with(|| a.bbox.x0().cmp(&b.bbox.x0()))
        });
        let gt_boxes: Vec<&GroundTruthRegion> =
            gts.iter().filter(|g| g.category == category).collect();
        let mut gt_taken = vec![false; gt_boxes.len()];

        let entry = counts.get_mut(&category).unwrap();
        entry.false_negatives += gt_boxes.len() as u64;

        for pred in kept {
            // Best unmatched GT by IoU; ties go to the lowest index.
            let mut best: Option<(usize, S)> = None;
            for (gi, gt) in gt_boxes.iter().enumerate() {
                if gt_taken[gi] {
                    continue;
                }
                let overlap = iou::<S>(&pred.bbox, &gt.bbox);
                if best.is_none_or(|(_, b)| overlap > b) {
                    best = Some((gi, overlap));
                }
            }
            let matched = match best {
                Some((gi, overlap)) if overlap >= params.iou_threshold => {
                    gt_taken[gi] = true;
                    true
                }
                _ => false,
            };
            if matched {
                entry.tp += 1;
                entry.false_negatives -= 1;
            } else {
                entry.fp += 1;
            }
            boxes.push(LabeledBox {
                bbox: pred.bbox,
                category,
                label: if matched {
                    MatchLabel::TruePositive
                } else {
                    MatchLabel::FalsePositive
                },
                confidence: Some(pred.confidence),
            });
        }

        for (gi, gt) in gt_boxes.iter().enumerate() {
            if !gt_taken[gi] {
                boxes.push(LabeledBox {
                    bbox: gt.bbox,
                    category,
                    label: MatchLabel::FalseNegative,
                    confidence: None,
                });
            }
        }
    }

    MatchOutcome { counts, boxes }
}

/// Metrics for one category (or the totals row).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryMetrics<S: Real = Score> {
    pub counts: CategoryCounts,
    pub precision: S,
    pub recall: S,
    pub accuracy: S,
}

/// Per-category metrics plus a totals row over summed counts.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport<S: Real = Score> {
    pub per_category: BTreeMap<Category, CategoryMetrics<S>>,
    pub totals: CategoryMetrics<S>,
}

fn metrics_from_counts<S: Real>(c: CategoryCounts) -> CategoryMetrics<S> {
    CategoryMetrics {
        counts: c,
        precision: ratio(c.tp, c.tp + c.fp),
        recall: ratio(c.tp, c.tp + c.false_negatives),
        accuracy: ratio(c.tp, c.tp + c.fp + c.false_negatives),
    }
}

/// Computes the report from per-category counts. Division-by-zero yields 0.
pub fn compute_report<S: Real>(counts: &BTreeMap<Category, CategoryCounts>) -> EvalReport<S> {
    let mut per_category = BTreeMap::new();
    let mut total = CategoryCounts::default();
    for category in Category::ALL {
        let c = counts.get(&category).copied().unwrap_or_default();
        total.add(&c);
        per_category.insert(category, metrics_from_counts(c));
    }
    EvalReport {
        per_category,
        totals: metrics_from_counts(total),
    }
}

impl<S: Real> EvalReport<S> {
    /// Report file: per category and totals, metric values rounded to 4
    /// decimals (counts stay exact).
    pub fn to_json(&self) -> Vec<u8> {
        #[derive(Serialize)]
        struct Row {
            tp: u64,
            fp: u64,
            #[serde(rename = "fn")]
            false_negatives: u64,
            precision: f64,
            recall: f64,
            accuracy: f64,
        }
        fn row<S: Real>(m: &CategoryMetrics<S>) -> Row {
            Row {
                tp: m.counts.tp,
                fp: m.counts.fp,
                false_negatives: m.counts.false_negatives,
                precision: round4(m.precision),
                recall: round4(m.recall),
                accuracy: round4(m.accuracy),
            }
        }
        let mut map: BTreeMap<String, Row> = self
            .per_category
            .iter()
            .map(|(c, m)| (c.to_string(), row(m)))
            .collect();
        map.insert("totals".to_string(), row(&self.totals));
        let mut out = serde_json::to_vec_pretty(&map).expect("report serialize");
        out.push(b'\n');
        out
    }

    /// Plain-text table with one row per category plus totals.
    pub fn render_table(&self) -> String {
        let mut lines = vec![format!(
            "{:<18} {:>6} {:>6} {:>6} {:>10} {:>10} {:>10}",
            "category", "tp", "fp", "fn", "precision", "recall", "accuracy"
        )];
        let mut push = |name: &str, m: &CategoryMetrics<S>| {
            lines.push(format!(
                "{:<18} {:>6} {:>6} {:>6} {:>10.4} {:>10.4} {:>10.4}",
                name,
                m.counts.tp,
                m.counts.fp,
                m.counts.false_negatives,
                round4(m.precision),
                round4(m.recall),
                round4(m.accuracy),
            ));
        };
        for (category, m) in &self.per_category {
            push(category.as_str(), m);
        }
        push("totals", &self.totals);
        lines.join("\n")
    }
}

fn round4<S: Real>(v: S) -> f64 {
    let v = v.to_f64().expect("metric fits in f64");
    (v * 10000.0).round() / 10000.0
}

// ---------------------------------------------------------------------------
// Overlay rendering
// ---------------------------------------------------------------------------

const COLOR_TP: [u8; 3] = [0, 255, 0];
const COLOR_FP: [u8; 3] = [0, 0, 255];
const COLOR_FN: [u8; 3] = [255, 0, 255];
const OUTLINE: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverlayOptions {
    /// Draw each prediction's confidence next to its box.
    pub show_confidence: bool,
}

impl Default for OverlayOptions {
    fn default() -> Self {
        Self {
            show_confidence: true,
        }
    }
}

/// Draws labeled boxes over a copy of `image`: true positives green, false
/// positives blue, false negatives fuchsia, 3-pixel outlines drawn inward.
/// Boxes reaching outside the image are clipped.
pub fn render_eval_overlay<S: Real>(
    image: &Raster3,
    boxes: &[LabeledBox<S>],
    options: &OverlayOptions,
) -> Raster3 {
    let mut out = image.clone();
    for b in boxes {
        let color = match b.label {
            MatchLabel::TruePositive => COLOR_TP,
            MatchLabel::FalsePositive => COLOR_FP,
            MatchLabel::FalseNegative => COLOR_FN,
        };
        draw_outline(&mut out, &b.bbox, color);
        if options.show_confidence {
            if let Some(conf) = b.confidence {
                let text = format!("{:.2}", conf.to_f64().unwrap_or(0.0));
                draw_text(&mut out, &b.bbox, &text, color);
            }
        }
    }
    out
}

fn draw_outline(image: &mut Raster3, bbox: &PixelBox, color: [u8; 3]) {
    let x1 = bbox.x1().min(image.width());
    let y1 = bbox.y1().min(image.height());
    for y in bbox.y0().min(image.height())..y1 {
        for x in bbox.x0().min(image.width())..x1 {
            let near_edge = x - bbox.x0() < OUTLINE
                || bbox.x1() - 1 - x < OUTLINE
                || y - bbox.y0() < OUTLINE
                || bbox.y1() - 1 - y < OUTLINE;
            if near_edge {
                image.set(x, y, color);
            }
        }
    }
}

// 3x5 glyphs for confidence labels, one bit per pixel, rows top to bottom.
const GLYPH_W: u32 = 3;
const GLYPH_H: u32 = 5;
const GLYPH_SCALE: u32 = 2;

fn glyph(c: char) -> [u8; 5] {
    match c {
        '0' => [0b111, 0b101, 0b101, 0b101, 0b111],
        '1' => [0b010, 0b110, 0b010, 0b010, 0b111],
        '2' => [0b111, 0b001, 0b111, 0b100, 0b111],
        '3' => [0b111, 0b001, 0b111, 0b001, 0b111],
        '4' => [0b101, 0b101, 0b111, 0b001, 0b001],
        '5' => [0b111, 0b100, 0b111, 0b001, 0b111],
        '6' => [0b111, 0b100, 0b111, 0b101, 0b111],
        '7' => [0b111, 0b001, 0b010, 0b010, 0b010],
        '8' => [0b111, 0b101, 0b111, 0b101, 0b111],
        '9' => [0b111, 0b101, 0b111, 0b001, 0b111],
        '.' => [0b000, 0b000, 0b000, 0b000, 0b010],
        _ => [0b000; 5],
    }
}

/// Draws `text` just above the box's top-left corner (or just below the top
/// edge when there is no room), clipped to the image.
fn draw_text(image: &mut Raster3, bbox: &PixelBox, text: &str, color: [u8; 3]) {
    let text_h = GLYPH_H * GLYPH_SCALE;
    let y_top = if bbox.y0() > text_h {
        bbox.y0() - text_h - 1
    } else {
        // no room above: draw inside, below the top outline
        bbox.y0() + OUTLINE + 1
    };
    let mut x_pen = bbox.x0();
    for c in text.chars() {
        let rows = glyph(c);
        for (gy, row) in rows.iter().enumerate() {
            for gx in 0..GLYPH_W {
                if row & (1 << (GLYPH_W - 1 - gx)) == 0 {
                    continue;
                }
                for sy in 0..GLYPH_SCALE {
                    for sx in 0..GLYPH_SCALE {
                        let x = x_pen + gx * GLYPH_SCALE + sx;
                        let y = y_top + gy as u32 * GLYPH_SCALE + sy;
                        if x < image.width() && y < image.height() {
                            image.set(x, y, color);
                        }
                    }
                }
            }
        }
        x_pen += (GLYPH_W + 1) * GLYPH_SCALE;
    }
}
