//! Patch-pair datasets: the Brown et al. benchmark layout, a synthetic
//! stand-in for desk-scale experiments, and planted bit-response instances
//! used to check the selectors against a known ground truth.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::bitgen::ResponseMatrix;
use crate::bits::BitMatrix;
use crate::rng::Rng;
use crate::{Error, Result};

pub const PATCH_SIZE: usize = 64;
pub const PATCH_PIXELS: usize = PATCH_SIZE * PATCH_SIZE;

const MOSAIC_SIZE: usize = 1024;
const TILES_PER_ROW: usize = MOSAIC_SIZE / PATCH_SIZE;
const TILES_PER_MOSAIC: usize = TILES_PER_ROW * TILES_PER_ROW;

/// A 64x64 grayscale patch stored row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct Patch {
    pixels: Box<[u8; PATCH_PIXELS]>,
}

impl Patch {
    pub fn from_pixels(pixels: &[u8]) -> Result<Self> {
        let pixels: Box<[u8; PATCH_PIXELS]> = pixels
            .to_vec()
            .into_boxed_slice()
            .try_into()
            .map_err(|v: Box<[u8]>| {
                Error::Param(format!(
                    "a patch needs {PATCH_PIXELS} pixels, got {}",
                    v.len()
                ))
            })?;
        Ok(Patch { pixels })
    }

    pub fn constant(value: u8) -> Self {
        Patch {
            pixels: Box::new([value; PATCH_PIXELS]),
        }
    }

    /// Builds a patch from a function of `(x, y)`.
    pub fn from_fn(mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut pixels = Box::new([0u8; PATCH_PIXELS]);
        for y in 0..PATCH_SIZE {
            for x in 0..PATCH_SIZE {
                pixels[y * PATCH_SIZE + x] = f(x, y);
            }
        }
        Patch { pixels }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * PATCH_SIZE + x]
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.pixels[..]
    }
}

impl fmt::Debug for Patch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sum: u64 = self.pixels.iter().map(|&p| p as u64).sum();
        write!(f, "Patch {{ mean: {:.2} }}", sum as f64 / PATCH_PIXELS as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Match,
    NonMatch,
}

impl Label {
    pub fn is_match(self) -> bool {
        self == Label::Match
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatchPair {
    pub a: usize,
    pub b: usize,
    pub label: Label,
}

/// Labeled patch pairs over a shared list of patches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairSet {
    name: String,
    patches: Vec<Patch>,
    pairs: Vec<PatchPair>,
}

impl PairSet {
    pub fn new(name: impl Into<String>, patches: Vec<Patch>, pairs: Vec<PatchPair>) -> Result<Self> {
        if let Some((k, p)) = pairs
            .iter()
            .enumerate()
            .find(|(_, p)| p.a >= patches.len() || p.b >= patches.len())
        {
            return Err(Error::Usage(format!(
                "pair {k} references patch ({}, {}) but only {} patches exist",
                p.a,
                p.b,
                patches.len()
            )));
        }
        Ok(PairSet {
            name: name.into(),
            patches,
            pairs,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn pairs(&self) -> &[PatchPair] {
        &self.pairs
    }

    pub fn labels(&self) -> Vec<Label> {
        self.pairs.iter().map(|p| p.label).collect()
    }

    pub fn match_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.label.is_match()).count()
    }

    /// Serialises to the `PAIRSET v1` container: a header line, raw patch
    /// bytes, then one `a b 0|1` line per pair (1 = match).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.patches.len() * PATCH_PIXELS + self.pairs.len() * 16 + 32);
        writeln!(out, "PAIRSET v1 {} {}", self.patches.len(), self.pairs.len()).unwrap();
        for p in &self.patches {
            out.extend_from_slice(p.as_bytes());
        }
        for p in &self.pairs {
            writeln!(out, "{} {} {}", p.a, p.b, u8::from(p.label.is_match())).unwrap();
        }
        out
    }

    pub fn from_bytes(name: impl Into<String>, bytes: &[u8]) -> Result<Self> {
        let header_end = bytes
            .iter()
            .position(|&c| c == b'\n')
            .ok_or_else(|| Error::Format("pair set container has no header line".into()))?;
        let header = std::str::from_utf8(&bytes[..header_end])
            .map_err(|_| Error::Format("pair set header is not UTF-8".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (num_patches, num_pairs) = match fields.as_slice() {
            ["PAIRSET", "v1", np, nq] => (parse_usize(np, "patch count")?, parse_usize(nq, "pair count")?),
            _ => return Err(Error::Format(format!("bad pair set header `{header}`"))),
        };
        let body_start = header_end + 1;
        let pairs_start = num_patches
            .checked_mul(PATCH_PIXELS)
            .and_then(|n| n.checked_add(body_start))
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| Error::Format(format!("pair set truncated: expected {num_patches} patches")))?;
        let patches = bytes[body_start..pairs_start]
            .chunks_exact(PATCH_PIXELS)
            .map(Patch::from_pixels)
            .collect::<Result<Vec<_>>>()?;
        let text = std::str::from_utf8(&bytes[pairs_start..])
            .map_err(|_| Error::Format("pair lines are not UTF-8".into()))?;
        let mut pairs = Vec::with_capacity(num_pairs);
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Format(format!("pair line {}: `{line}`", lineno + 1));
            if f.len() != 3 {
                return Err(bad());
            }
            let a = f[0].parse().map_err(|_| bad())?;
            let b = f[1].parse().map_err(|_| bad())?;
            let label = match f[2] {
                "1" => Label::Match,
                "0" => Label::NonMatch,
                _ => return Err(bad()),
            };
            pairs.push(PatchPair { a, b, label });
        }
        if pairs.len() != num_pairs {
            return Err(Error::Format(format!(
                "header announces {num_pairs} pairs, found {}",
                pairs.len()
            )));
        }
        PairSet::new(name, patches, pairs).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    /// Reads a `PAIRSET v1` container; the set is named after the file stem.
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        PairSet::from_bytes(name, &bytes)
    }
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::Format(format!("invalid {what} `{s}`")))
}

/// One line of a Brown pair file: `pid1 3dpt1 u1 pid2 3dpt2 u2 u3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BrownPairLine {
    pub patch_a: usize,
    pub point_a: i64,
    pub patch_b: usize,
    pub point_b: i64,
}

impl BrownPairLine {
    pub fn parse(line: &str, lineno: usize) -> Result<Self> {
        let bad = || Error::Format(format!("pair file line {lineno}: expected 7 integers, got `{line}`"));
        let fields: Vec<i64> = line
            .split_whitespace()
            .map(|t| t.parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        if fields.len() != 7 || fields[0] < 0 || fields[3] < 0 {
            return Err(bad());
        }
        Ok(BrownPairLine {
            patch_a: fields[0] as usize,
            point_a: fields[1],
            patch_b: fields[3] as usize,
            point_b: fields[4],
        })
    }

    pub fn label(&self) -> Label {
        if self.point_a == self.point_b {
            Label::Match
        } else {
            Label::NonMatch
        }
    }
}

/// Loads one Brown subset (Liberty, Notre Dame or Yosemite layout).
///
/// Only patches referenced by the pair file are kept. They are stored in
/// ascending order of their global index, and pair indices are remapped
/// accordingly; the global index of patch `i` is `source_ids[i]` in the
/// returned [`BrownSubset`].
pub fn load_brown_subset(root: &Path, pair_file: &str) -> Result<BrownSubset> {
    let info_path = root.join("info.txt");
    let info = fs::read_to_string(&info_path).map_err(|e| Error::io(&info_path, e))?;
    let num_patches = info.lines().filter(|l| !l.trim().is_empty()).count();

    let pairs_path = root.join(pair_file);
    let text = fs::read_to_string(&pairs_path).map_err(|e| Error::io(&pairs_path, e))?;
    let mut lines = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = BrownPairLine::parse(line, i + 1)?;
        for pid in [parsed.patch_a, parsed.patch_b] {
            if pid >= num_patches {
                return Err(Error::Format(format!(
                    "pair file line {}: patch {pid} beyond the {num_patches} patches listed in info.txt",
                    i + 1
                )));
            }
        }
        lines.push(parsed);
    }

    // global id -> compact index, ascending
    let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
    for l in &lines {
        remap.insert(l.patch_a, 0);
        remap.insert(l.patch_b, 0);
    }
    for (i, v) in remap.values_mut().enumerate() {
        *v = i;
    }

    let mut patches = Vec::with_capacity(remap.len());
    let mut current: Option<(usize, Vec<u8>)> = None;
    for &pid in remap.keys() {
        let mosaic = pid / TILES_PER_MOSAIC;
        if current.as_ref().map(|(m, _)| *m) != Some(mosaic) {
            current = Some((mosaic, read_mosaic(&root.join(format!("patches{mosaic:04}.bmp")))?));
        }
        let (_, pixels) = current.as_ref().unwrap();
        patches.push(extract_tile(pixels, pid % TILES_PER_MOSAIC));
    }

    let pairs = lines
        .iter()
        .map(|l| PatchPair {
            a: remap[&l.patch_a],
            b: remap[&l.patch_b],
            label: l.label(),
        })
        .collect();
    let name = root
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "brown".into());
    Ok(BrownSubset {
        pairs: PairSet::new(name, patches, pairs)?,
        source_ids: remap.into_keys().collect(),
    })
}

/// A loaded Brown subset together with the global patch ids it kept.
#[derive(Clone, Debug)]
pub struct BrownSubset {
    pub pairs: PairSet,
    pub source_ids: Vec<usize>,
}

fn read_mosaic(path: &Path) -> Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Bmp).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        source: e,
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w != MOSAIC_SIZE || h != MOSAIC_SIZE {
        return Err(Error::Format(format!(
            "{}: mosaic is {w}x{h}, expected {MOSAIC_SIZE}x{MOSAIC_SIZE}",
            path.display()
        )));
    }
    use image::DynamicImage::*;
    let pixels = match img {
        ImageLuma8(g) => g.into_raw(),
        ImageRgb8(rgb) => rgb.into_raw().chunks_exact(3).map(|c| c[0]).collect(),
        ImageRgba8(rgba) => rgba.into_raw().chunks_exact(4).map(|c| c[0]).collect(),
        other => {
            return Err(Error::Format(format!(
                "{}: unsupported mosaic pixel format {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    Ok(pixels)
}

fn extract_tile(mosaic: &[u8], tile: usize) -> Patch {
    let (ty, tx) = (tile / TILES_PER_ROW, tile % TILES_PER_ROW);
    Patch::from_fn(|x, y| mosaic[(ty * PATCH_SIZE + y) * MOSAIC_SIZE + tx * PATCH_SIZE + x])
}

/// Synthetic labeled pairs: one random base patch per class, members are the
/// base with each pixel independently resampled with probability
/// `noise_level`. All within-class pairs are matches; the same number of
/// random cross-class pairs are non-matches.
pub fn generate_synthetic_pairset(
    seed: u64,
    num_classes: usize,
    patches_per_class: usize,
    noise_level: f64,
) -> Result<PairSet> {
    if num_classes < 2 {
        return Err(Error::Param(format!(
            "need at least 2 classes for non-matching pairs, got {num_classes}"
        )));
    }
    if patches_per_class < 2 {
        return Err(Error::Param(format!(
            "need at least 2 patches per class for matching pairs, got {patches_per_class}"
        )));
    }
    if !(0.0..=1.0).contains(&noise_level) {
        return Err(Error::Param(format!("noise level {noise_level} outside [0, 1]")));
    }

    let mut rng = Rng::new(seed);
    let mut patches = Vec::with_capacity(num_classes * patches_per_class);
    for _ in 0..num_classes {
        let base: Vec<u8> = (0..PATCH_PIXELS).map(|_| rng.below(256) as u8).collect();
        for _ in 0..patches_per_class {
            let member: Vec<u8> = base
                .iter()
                .map(|&v| if rng.unit() < noise_level { rng.below(256) as u8 } else { v })
                .collect();
            patches.push(Patch::from_pixels(&member)?);
        }
    }

    let mut pairs = Vec::new();
    for c in 0..num_classes {
        let off = c * patches_per_class;
        for i in 0..patches_per_class {
            for j in i + 1..patches_per_class {
                pairs.push(PatchPair {
                    a: off + i,
                    b: off + j,
                    label: Label::Match,
                });
            }
        }
    }
    let num_matches = pairs.len();
    let total = patches.len();
    while pairs.len() < 2 * num_matches {
        let a = rng.below_usize(total);
        let b = rng.below_usize(total);
        if a / patches_per_class != b / patches_per_class {
            pairs.push(PatchPair {
                a,
                b,
                label: Label::NonMatch,
            });
        }
    }
    PairSet::new(format!("synth-{seed}"), patches, pairs)
}

/// Bit layout of a planted selection problem: which pool bits carry signal
/// and how noisy each one is.
///
/// For an informative bit with flip rate `f`, the disagreement on pair `k`
/// equals "pair is a non-match", flipped with probability `f`. Noise bits
/// respond independently at random on every patch.
#[derive(Clone, Debug)]
pub struct PlantedLayout {
    flip_rates: Vec<Option<f64>>,
}

impl PlantedLayout {
    /// Informative bits are scattered over the pool by a seeded shuffle.
    pub fn new(seed: u64, informative_flip_rates: &[f64], noise_bits: usize) -> Self {
        let total = informative_flip_rates.len() + noise_bits;
        let order = Rng::new(seed).sample_without_replacement(total, total);
        let mut flip_rates = vec![None; total];
        for (slot, &rate) in order.iter().zip(informative_flip_rates) {
            flip_rates[*slot] = Some(rate);
        }
        PlantedLayout { flip_rates }
    }

    pub fn pool_size(&self) -> usize {
        self.flip_rates.len()
    }

    pub fn flip_rate(&self, bit: usize) -> Option<f64> {
        self.flip_rates[bit]
    }

    pub fn informative_bits(&self) -> Vec<usize> {
        (0..self.flip_rates.len())
            .filter(|&p| self.flip_rates[p].is_some())
            .collect()
    }

    /// Draws `num_pairs` pairs (even index = match, odd = non-match), each
    /// over its own two patches, and the responses of every pool bit.
    pub fn sample(&self, seed: u64, num_pairs: usize) -> PlantedInstance {
        let mut rng = Rng::new(seed);
        let num_patches = 2 * num_pairs;
        let pairs: Vec<PatchPair> = (0..num_pairs)
            .map(|k| PatchPair {
                a: 2 * k,
                b: 2 * k + 1,
                label: if k % 2 == 0 { Label::Match } else { Label::NonMatch },
            })
            .collect();
        let mut m = BitMatrix::zeros(self.pool_size(), num_patches);
        for (p, rate) in self.flip_rates.iter().enumerate() {
            for (k, pair) in pairs.iter().enumerate() {
                let ra = rng.bernoulli(0.5);
                let rb = match rate {
                    Some(f) => {
                        let disagree = !pair.label.is_match() ^ rng.bernoulli(*f);
                        ra ^ disagree
                    }
                    None => rng.bernoulli(0.5),
                };
                m.set(p, 2 * k, ra);
                m.set(p, 2 * k + 1, rb);
            }
        }
        PlantedInstance {
            responses: ResponseMatrix::from_matrix(m),
            pairs,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlantedInstance {
    pub responses: ResponseMatrix,
    pub pairs: Vec<PatchPair>,
}

impl PlantedInstance {
    pub fn labels(&self) -> Vec<Label> {
        self.pairs.iter().map(|p| p.label).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_counts() {
        let ps = generate_synthetic_pairset(1, 10, 4, 0.1).unwrap();
        // 10 classes x C(4,2) within-class pairs
        let brute: usize = (0..10)
            .map(|_| (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).filter(|(i, j)| i < j).count())
            .sum();
        assert_eq!(brute, 60);
        assert_eq!(ps.match_count(), 60);
        assert_eq!(ps.pairs().len(), 120);
        assert_eq!(ps.patches().len(), 40);
        for p in ps.pairs() {
            let same_class = p.a / 4 == p.b / 4;
            assert_eq!(same_class, p.label.is_match());
        }
    }

    #[test]
    fn zero_noise_matches_are_identical() {
        let ps = generate_synthetic_pairset(5, 3, 3, 0.0).unwrap();
        for p in ps.pairs().iter().filter(|p| p.label.is_match()) {
            assert_eq!(ps.patches()[p.a], ps.patches()[p.b]);
        }
    }

    #[test]
    fn synthetic_is_deterministic() {
        let a = generate_synthetic_pairset(11, 4, 3, 0.3).unwrap();
        let b = generate_synthetic_pairset(11, 4, 3, 0.3).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        let c = generate_synthetic_pairset(12, 4, 3, 0.3).unwrap();
        assert_ne!(a.to_bytes(), c.to_bytes());
    }

    #[test]
    fn synthetic_parameter_errors() {
        assert!(matches!(generate_synthetic_pairset(1, 1, 4, 0.1), Err(Error::Param(_))));
        assert!(matches!(generate_synthetic_pairset(1, 3, 1, 0.1), Err(Error::Param(_))));
        assert!(matches!(generate_synthetic_pairset(1, 3, 3, 1.5), Err(Error::Param(_))));
    }

    #[test]
    fn container_round_trip() {
        let ps = generate_synthetic_pairset(2, 3, 2, 0.5).unwrap();
        let bytes = ps.to_bytes();
        let back = PairSet::from_bytes(ps.name(), &bytes).unwrap();
        assert_eq!(back, ps);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn container_rejects_garbage() {
        assert!(matches!(PairSet::from_bytes("x", b"PAIRSET v2 0 0\n"), Err(Error::Format(_))));
        assert!(matches!(PairSet::from_bytes("x", b"PAIRSET v1 1 0\n"), Err(Error::Format(_))));
        assert!(matches!(PairSet::from_bytes("x", b"PAIRSET v1 0 1\n0 0 1\n"), Err(Error::Format(_))));
    }

    #[test]
    fn brown_line_labels() {
        assert_eq!(BrownPairLine::parse("0 7 0 1 7 0 0", 1).unwrap().label(), Label::Match);
        assert_eq!(BrownPairLine::parse("0 7 0 1 9 0 0", 1).unwrap().label(), Label::NonMatch);
        let err = BrownPairLine::parse("0 7 0 1", 12).unwrap_err();
        assert!(err.to_string().contains("line 12"), "{err}");
    }

    #[test]
    fn pairset_rejects_out_of_range() {
        let err = PairSet::new(
            "x",
            vec![Patch::constant(0)],
            vec![PatchPair { a: 0, b: 1, label: Label::Match }],
        );
        assert!(matches!(err, Err(Error::Usage(_))));
    }

    #[test]
    fn planted_disagreement_tracks_label() {
        let layout = PlantedLayout::new(1, &[0.0; 4], 4);
        let inst = layout.sample(2, 50);
        for p in layout.informative_bits() {
            for pair in &inst.pairs {
                let m = inst.responses.matrix();
                let disagree = m.get(p, pair.a) ^ m.get(p, pair.b);
                assert_eq!(disagree, !pair.label.is_match());
            }
        }
    }
}
