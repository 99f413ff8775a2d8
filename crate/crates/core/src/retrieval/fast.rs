//! FAST-9 corner detection with sum-of-absolute-differences scoring and 3x3
//! non-maximum suppression.

use super::Image;
use crate::{Error, Result};

/// Bresenham circle of radius 3, clockwise from the top.
const CIRCLE: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

const ARC: usize = 9;

/// Keypoints closer than this to any border cannot hold a 64x64 patch.
pub const PATCH_BORDER: usize = 32;

/// Smallest image the detector accepts.
pub const MIN_IMAGE_SIDE: usize = 71;

pub const DEFAULT_MAX_KEYPOINTS: usize = 75;
pub const DEFAULT_FAST_THRESHOLD: u8 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Keypoint {
    pub x: usize,
    pub y: usize,
    pub score: u32,
}

/// Segment-test score of one pixel: for the (unique) contiguous arc of at
/// least 9 circle pixels that are all brighter than `center + t` or all
/// darker than `center - t`, the sum of `|I_p - I_center| - t` over the arc.
/// Zero when no such arc exists.
pub(crate) fn corner_score(img: &Image, x: usize, y: usize, threshold: u8) -> u32 {
    let c = img.get(x, y) as i32;
    let t = threshold as i32;
    let mut diffs = [0i32; 16];
    for (d, (dx, dy)) in diffs.iter_mut().zip(CIRCLE) {
        *d = img.get((x as i32 + dx) as usize, (y as i32 + dy) as usize) as i32 - c;
    }
    let mut best = 0u32;
    for sign in [1, -1] {
        let passes = |i: usize| sign * diffs[i % 16] > t;
        if (0..16).all(passes) {
            best = best.max(diffs.iter().map(|d| (d.abs() - t) as u32).sum());
            continue;
        }
        // start right after a failing pixel so no arc wraps past the start
        let start = (0..16).find(|&i| !passes(i)).unwrap() + 1;
        let mut run = 0;
        let mut sum = 0u32;
        for i in start..start + 16 {
            if passes(i) {
                run += 1;
                sum += (diffs[i % 16].abs() - t) as u32;
            } else {
                if run >= ARC {
                    best = best.max(sum);
                }
                run = 0;
                sum = 0;
            }
        }
        if run >= ARC {
            best = best.max(sum);
        }
    }
    best
}

/// Detects up to `max_keypoints` FAST-9 corners at least 32 pixels from every
/// border, strongest first (ties by row, then column).
pub fn detect_fast(img: &Image, threshold: u8, max_keypoints: usize) -> Result<Vec<Keypoint>> {
    let (w, h) = (img.width(), img.height());
    if w < MIN_IMAGE_SIDE || h < MIN_IMAGE_SIDE {
        return Err(Error::Param(format!(
            "image is {w}x{h}; FAST with patch extraction needs at least {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}"
        )));
    }
    let mut scores = vec![0u32; w * h];
    for y in 3..h - 3 {
        for x in 3..w - 3 {
            scores[y * w + x] = corner_score(img, x, y, threshold);
        }
    }

    let mut keypoints = Vec::new();
    for y in PATCH_BORDER..=h - PATCH_BORDER {
        for x in PATCH_BORDER..=w - PATCH_BORDER {
            let idx = y * w + x;
            let s = scores[idx];
            if s == 0 {
                continue;
            }
            // ties go to the earlier pixel in raster order
            let is_max = (-1i32..=1)
                .flat_map(|dy| (-1i32..=1).map(move |dx| (dx, dy)))
                .filter(|&d| d != (0, 0))
                .all(|(dx, dy)| {
                    let n = ((y as i32 + dy) as usize) * w + (x as i32 + dx) as usize;
                    scores[n] < s || (scores[n] == s && n > idx)
                });
            if is_max {
                keypoints.push(Keypoint { x, y, score: s });
            }
        }
    }
    keypoints.sort_by(|a, b| b.score.cmp(&a.score).then(a.y.cmp(&b.y)).then(a.x.cmp(&b.x)));
    keypoints.truncate(max_keypoints);
    Ok(keypoints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn constant_image_has_no_corners() {
        let img = Image::from_fn(128, 128, |_, _| 90);
        assert!(detect_fast(&img, 20, 75).unwrap().is_empty());
    }

    #[test]
    fn square_corners_are_found() {
        let (x0, y0, x1, y1) = (50usize, 60usize, 90usize, 100usize);
        let img = Image::from_fn(150, 160, |x, y| if (x0..=x1).contains(&x) && (y0..=y1).contains(&y) { 220 } else { 30 });
        let kps = detect_fast(&img, 20, 75).unwrap();
        for (cx, cy) in [(x0, y0), (x1, y0), (x0, y1), (x1, y1)] {
            assert!(
                kps.iter().any(|k| k.x.abs_diff(cx) <= 1 && k.y.abs_diff(cy) <= 1),
                "corner ({cx}, {cy}) missing from {kps:?}"
            );
        }
    }

    #[test]
    fn corner_rich_image_saturates_budget() {
        let mut rng = Rng::new(4);
        let blocks: Vec<u8> = (0..32 * 32).map(|_| rng.below(256) as u8).collect();
        let img = Image::from_fn(256, 256, |x, y| blocks[(y / 8) * 32 + x / 8]);
        let kps = detect_fast(&img, 20, 75).unwrap();
        assert_eq!(kps.len(), 75);
        assert!(kps.windows(2).all(|w| w[0].score >= w[1].score));
        for k in &kps {
            assert!(k.x >= 32 && k.y >= 32 && k.x <= 224 && k.y <= 224);
        }
    }

    #[test]
    fn too_small_image() {
        let img = Image::from_fn(70, 200, |_, _| 0);
        assert!(matches!(detect_fast(&img, 20, 75), Err(Error::Param(_))));
    }

    #[test]
    fn isolated_bright_pixel_scores_full_circle() {
        let img = Image::from_fn(20, 20, |x, y| if (x, y) == (10, 10) { 200 } else { 100 });
        // every circle pixel is 100 darker than the center
        assert_eq!(corner_score(&img, 10, 10, 20), 16 * 80);
        assert_eq!(corner_score(&img, 5, 5, 20), 0);
    }

    #[test]
    fn arc_of_eight_is_not_a_corner() {
        let mut img = Image::from_fn(20, 20, |_, _| 100);
        for (dx, dy) in &CIRCLE[..8] {
            img.set((10 + dx) as usize, (10 + dy) as usize, 200);
        }
        assert_eq!(corner_score(&img, 10, 10, 20), 0);
        let (dx, dy) = CIRCLE[8];
        img.set((10 + dx) as usize, (10 + dy) as usize, 200);
        assert_eq!(corner_score(&img, 10, 10, 20), 9 * 80);
    }
}
