//! CS-LBP histogram vectors.
//!
//! Every interior pixel gets a 4-bit center-symmetric code from its eight
//! radius-1 neighbours: bit `i` is set when neighbour `i` exceeds the
//! opposite neighbour `i + 4` by more than the threshold (intensities scaled
//! to `[0, 1]`). Codes are histogrammed over a `grid x grid` layout of square
//! cells, concatenated cell-major, then L2-normalised, clipped at 0.2 and
//! normalised again.

use crate::dataset::{Patch, PATCH_SIZE};
use crate::{Error, Result};

pub const LBP_BINS: usize = 16;
const CLIP: f64 = 0.2;

/// Neighbour offsets `(dx, dy)`; entries `i` and `i + 4` are opposite.
const NEIGHBOURS: [(i32, i32); 8] = [(1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1)];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LbpParams {
    /// Comparison threshold on intensities scaled to `[0, 1]`.
    pub threshold: f64,
    /// Cells per side; must divide 64.
    pub grid: usize,
}

impl Default for LbpParams {
    fn default() -> Self {
        LbpParams {
            threshold: 0.01,
            grid: 4,
        }
    }
}

impl LbpParams {
    /// Vector length: `grid^2 * 16`.
    pub fn dim(&self) -> usize {
        self.grid * self.grid * LBP_BINS
    }

    /// Recovers the grid from a vector length, as stored in pool files.
    pub fn with_dim(dim: usize, threshold: f64) -> Result<Self> {
        let cells = dim / LBP_BINS;
        let grid = (cells as f64).sqrt().round() as usize;
        let p = LbpParams { threshold, grid };
        p.validate()?;
        if p.dim() != dim {
            return Err(Error::Param(format!("LBP vector length {dim} is not 16 * grid^2")));
        }
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid == 0 || !PATCH_SIZE.is_multiple_of(self.grid) {
            return Err(Error::Param(format!("LBP grid {} must divide {PATCH_SIZE}", self.grid)));
        }
        if !(self.threshold >= 0.0 && self.threshold.is_finite()) {
            return Err(Error::Param(format!("LBP threshold {} must be non-negative", self.threshold)));
        }
        Ok(())
    }
}

/// A normalised LBP histogram vector.
#[derive(Clone, Debug, PartialEq)]
pub struct LbpVector {
    components: Vec<f64>,
}

impl LbpVector {
    /// Wraps raw components without normalising them.
    pub fn from_components(components: Vec<f64>) -> Self {
        LbpVector { components }
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn norm(&self) -> f64 {
        self.components.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Raw per-cell code counts, cell-major, bin-minor.
pub(crate) fn cs_lbp_histogram(patch: &Patch, params: &LbpParams) -> Vec<u32> {
    let cell = PATCH_SIZE / params.grid;
    let mut hist = vec![0u32; params.dim()];
    let px = |x: i32, y: i32| patch.get(x as usize, y as usize) as f64 / 255.0;
    for y in 1..PATCH_SIZE as i32 - 1 {
        for x in 1..PATCH_SIZE as i32 - 1 {
            let mut code = 0usize;
            for i in 0..4 {
                let (ax, ay) = NEIGHBOURS[i];
                let (bx, by) = NEIGHBOURS[i + 4];
                if px(x + ax, y + ay) - px(x + bx, y + by) > params.threshold {
                    code |= 1 << i;
                }
            }
            let c = (y as usize / cell) * params.grid + x as usize / cell;
            hist[c * LBP_BINS + code] += 1;
        }
    }
    hist
}

fn l2_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|c| *c /= norm);
    }
}

pub fn extract_lbp_vector(patch: &Patch, params: &LbpParams) -> LbpVector {
    let mut v: Vec<f64> = cs_lbp_histogram(patch, params).into_iter().map(f64::from).collect();
    l2_normalize(&mut v);
    v.iter_mut().for_each(|c| *c = c.min(CLIP));
    l2_normalize(&mut v);
    LbpVector { components: v }
}
