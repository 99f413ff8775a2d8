use crate::dataset::{Patch, PATCH_PIXELS, PATCH_SIZE};

/// A patch after Gaussian smoothing, as real intensities.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothedPatch {
    values: Vec<f64>,
}

impl SmoothedPatch {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * PATCH_SIZE + x]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Normalised 1-D Gaussian taps for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

#[inline]
fn clamp_index(i: i64) -> usize {
    i.clamp(0, PATCH_SIZE as i64 - 1) as usize
}

/// Separable Gaussian blur with clamp-to-edge borders. `sigma = 0` copies
/// the patch unchanged.
pub fn preprocess_patch(patch: &Patch, sigma: f64) -> SmoothedPatch {
    let src: Vec<f64> = patch.as_bytes().iter().map(|&v| v as f64).collect();
    if sigma <= 0.0 {
        return SmoothedPatch { values: src };
    }
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as i64;

    let mut tmp = vec![0.0; PATCH_PIXELS];
    for y in 0..PATCH_SIZE {
        let row = &src[y * PATCH_SIZE..(y + 1) * PATCH_SIZE];
        for x in 0..PATCH_SIZE {
            tmp[y * PATCH_SIZE + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * row[clamp_index(x as i64 + k as i64 - r)])
                .sum();
        }
    }
    let mut out = vec![0.0; PATCH_PIXELS];
    for y in 0..PATCH_SIZE {
        for x in 0..PATCH_SIZE {
            out[y * PATCH_SIZE + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * tmp[clamp_index(y as i64 + k as i64 - r) * PATCH_SIZE + x])
                .sum();
        }
    }
    SmoothedPatch { values: out }
}
