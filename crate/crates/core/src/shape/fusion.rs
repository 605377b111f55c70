use crate::error::{Error, Result};
use crate::imaging::BoundingBox;

/// Minimum overlap with the location proposal for a shape box to be used.
pub const SHAPE_MIN_IOU: f64 = 0.5;
/// Largest area ratio, either way, between an accepted shape box and the
/// location proposal.
pub const SHAPE_MAX_AREA_RATIO: f64 = 1.5;

/// Intersection over union; 0 when the union is empty.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    a.iou(b)
}

/// Selects the candidate with the largest summed IoU against both
/// proposals. Ties go to the candidate closest in area to `b_b`, then to the
/// lexicographically smallest `(x, y, w, h)`. Returns the winner and its
/// objective.
pub fn fuse_shape(candidates: &[BoundingBox], b_b: &BoundingBox, b_m: &BoundingBox) -> Result<(BoundingBox, f64)> {
    let key = |c: &BoundingBox| (iou(c, b_b) + iou(c, b_m), (c.area() - b_b.area()).abs());
    let mut best: Option<(BoundingBox, f64, f64)> = None;
    for c in candidates {
        let (score, area_gap) = key(c);
        let better = match &best {
            None => true,
            Some((b, s, g)) => {
                score > *s
                    || (score == *s && area_gap < *g)
                    || (score == *s && area_gap == *g && (c.x, c.y, c.w, c.h) < (b.x, b.y, b.w, b.h))
            }
        };
        if better {
            best = Some((*c, score, area_gap));
        }
    }
    best.map(|(b, s, _)| (b, s)).ok_or(Error::NoCandidates)
}

/// Applies a shape box to the location proposal. The shape box replaces
/// the location when the two overlap enough and have similar areas;
/// otherwise the location is kept.
pub fn apply_shape(location: &BoundingBox, shape: &BoundingBox) -> BoundingBox {
    let ratio = shape.area() / location.area();
    let similar = ratio <= SHAPE_MAX_AREA_RATIO && ratio * SHAPE_MAX_AREA_RATIO >= 1.0;
    if similar && iou(location, shape) >= SHAPE_MIN_IOU {
        *shape
    } else {
        *location
    }
}
