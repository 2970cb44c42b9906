//! Axis-aligned pixel rectangles with half-open bounds.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// A rectangle `[x0, x1) x [y0, y1)` in integer pixel coordinates.
///
/// Both bounds are exclusive on the high side, so `width = x1 - x0` and a box
/// never has zero area.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct PixelBox {
    x0: u32,
    y0: u32,
    x1: u32,
    y1: u32,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{0}")]
pub struct BoxError(pub String);

impl PixelBox {
    pub fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> Result<Self, BoxError> {
        if x0 >= x1 || y0 >= y1 {
            return Err(BoxError(format!(
                "coordinates out of order or degenerate: [{x0}, {y0}, {x1}, {y1}]"
            )));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn from_i64(x0: i64, y0: i64, x1: i64, y1: i64) -> Result<Self, BoxError> {
        let check = |v: i64, name: &str| -> Result<u32, BoxError> {
            if v < 0 {
                Err(BoxError(format!("negative coordinate {name} = {v}")))
            } else {
                u32::try_from(v).map_err(|_| BoxError(format!("coordinate {name} = {v} too large")))
            }
        };
        let b = Self::new(
            check(x0, "x0")?,
            check(y0, "y0")?,
            check(x1, "x1")?,
            check(y1, "y1")?,
        )?;
        Ok(b)
    }

    pub fn x0(&self) -> u32 {
        self.x0
    }

    pub fn y0(&self) -> u32 {
        self.y0
    }

    pub fn x1(&self) -> u32 {
        self.x1
    }

    pub fn y1(&self) -> u32 {
        self.y1
    }

    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> u64 {
        u64::from(self.width()) * u64::from(self.height())
    }

    pub fn intersection(&self, other: &PixelBox) -> Option<PixelBox> {
        let x0 = self.x0.max(other.x0);
        let y0 = self.y0.max(other.y0);
        let x1 = self.x1.min(other.x1);
        let y1 = self.y1.min(other.y1);
        if x0 < x1 && y0 < y1 {
            Some(PixelBox { x0, y0, x1, y1 })
        } else {
            None
        }
    }

    pub fn intersection_area(&self, other: &PixelBox) -> u64 {
        self.intersection(other).map_or(0, |b| b.area())
    }

    pub fn union_area(&self, other: &PixelBox) -> u64 {
        self.area() + other.area() - self.intersection_area(other)
    }

    /// True when `other`'s center point lies inside this box.
    ///
    /// The center may sit on a half-pixel; the test is exact because it
    /// compares doubled coordinates: `c in [lo, hi)` iff `2c in [2lo, 2hi)`.
    pub fn contains_center_of(&self, other: &PixelBox) -> bool {
        let cx2 = u64::from(other.x0) + u64::from(other.x1);
        let cy2 = u64::from(other.y0) + u64::from(other.y1);
        cx2 >= 2 * u64::from(self.x0)
            && cx2 < 2 * u64::from(self.x1)
            && cy2 >= 2 * u64::from(self.y0)
            && cy2 < 2 * u64::from(self.y1)
    }

    /// Clips raw (possibly out-of-range) coordinates to `[0,w) x [0,h)` image
    /// bounds. Returns `None` when nothing remains.
    pub fn clamp_raw(
        x0: i64,
        y0: i64,
        x1: i64,
        y1: i64,
        width: u32,
        height: u32,
    ) -> Option<PixelBox> {
        let cx0 = x0.clamp(0, i64::from(width));
        let cy0 = y0.clamp(0, i64::from(height));
        let cx1 = x1.clamp(0, i64::from(width));
        let cy1 = y1.clamp(0, i64::from(height));
        if cx0 < cx1 && cy0 < cy1 {
            Some(PixelBox {
                x0: cx0 as u32,
                y0: cy0 as u32,
                x1: cx1 as u32,
                y1: cy1 as u32,
            })
        } else {
            None
        }
    }

    pub fn contained_in(&self, width: u32, height: u32) -> bool {
        self.x1 <= width && self.y1 <= height
    }
}

impl fmt::Display for PixelBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}, {}]", self.x0, self.y0, self.x1, self.y1)
    }
}

impl Serialize for PixelBox {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        (self.x0, self.y0, self.x1, self.y1).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PixelBox {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [x0, y0, x1, y1] = <[i64; 4]>::deserialize(deserializer)?;
        PixelBox::from_i64(x0, y0, x1, y1).map_err(serde::de::Error::custom)
    }
}
