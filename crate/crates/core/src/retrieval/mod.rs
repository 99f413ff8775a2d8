//! Keypoint-based image retrieval: FAST detection, per-image signature sets,
//! match counting, threshold tuning and precision@k.

mod fast;
mod matching;

pub use fast::{detect_fast, Keypoint, DEFAULT_FAST_THRESHOLD, DEFAULT_MAX_KEYPOINTS, MIN_IMAGE_SIDE, PATCH_BORDER};
pub use matching::{match_count, matched_distances, MatchTable};

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::bitgen::BitPool;
use crate::dataset::{Patch, PATCH_SIZE};
use crate::rng::Rng;
use crate::selection::{compute_signature, Descriptor, Signature};
use crate::{Error, Result};

/// 8-bit grayscale image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Param(format!("image dimensions {width}x{height} must be positive")));
        }
        if pixels.len() != width * height {
            return Err(Error::Usage(format!(
                "{} pixels given for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Image { width, height, pixels })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0);
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Image { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// Decodes a PNG or BMP file; color images are converted to luma.
    pub fn open(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let img = image::load_from_memory(&bytes).map_err(|e| Error::Image {
            path: path.to_path_buf(),
            source: e,
        })?;
        let gray = img.to_luma8();
        Image::new(gray.width() as usize, gray.height() as usize, gray.into_raw())
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        image::save_buffer_with_format(
            path,
            &self.pixels,
            self.width as u32,
            self.height as u32,
            image::ExtendedColorType::L8,
            image::ImageFormat::Png,
        )
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Image {
                path: path.to_path_buf(),
                source: other,
            },
        })
    }
}

/// The 64x64 crop covering columns `x-32..=x+31` and rows `y-32..=y+31`.
pub fn extract_patch(image: &Image, kp: &Keypoint) -> Result<Patch> {
    let half = PATCH_SIZE / 2;
    if kp.x < half || kp.y < half || kp.x + half > image.width() || kp.y + half > image.height() {
        return Err(Error::Usage(format!(
            "keypoint ({}, {}) too close to the border of a {}x{} image",
            kp.x,
            kp.y,
            image.width(),
            image.height()
        )));
    }
    Ok(Patch::from_fn(|x, y| image.get(kp.x - half + x, kp.y - half + y)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatabaseImage {
    pub name: String,
    pub group: String,
    pub image: Image,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexEntry {
    pub name: String,
    pub group: String,
    pub signatures: Vec<Signature>,
}

/// Signature sets of a database; every signature has `signature_bits` bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageIndex {
    entries: Vec<IndexEntry>,
    bits: usize,
}

impl ImageIndex {
    pub fn new(entries: Vec<IndexEntry>, bits: usize) -> Result<Self> {
        if let Some(e) = entries.iter().find(|e| e.signatures.iter().any(|s| s.len() != bits)) {
            return Err(Error::Usage(format!("image `{}` has signatures that are not {bits} bits", e.name)));
        }
        Ok(ImageIndex { entries, bits })
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn signature_bits(&self) -> usize {
        self.bits
    }

    pub fn total_signatures(&self) -> usize {
        self.entries.iter().map(|e| e.signatures.len()).sum()
    }
}

/// Signatures of the patches around the FAST keypoints of one image.
pub fn image_signatures(
    image: &Image,
    descriptor: &Descriptor,
    pool: &BitPool,
    fast_threshold: u8,
    max_keypoints: usize,
) -> Result<Vec<Signature>> {
    detect_fast(image, fast_threshold, max_keypoints)?
        .iter()
        .map(|kp| compute_signature(descriptor, pool, &extract_patch(image, kp)?))
        .collect()
}

pub fn index_images(
    images: &[DatabaseImage],
    descriptor: &Descriptor,
    pool: &BitPool,
    fast_threshold: u8,
    max_keypoints: usize,
) -> Result<ImageIndex> {
    descriptor.check_pool(pool.len())?;
    let entries = images
        .par_iter()
        .map(|img| {
            Ok(IndexEntry {
                name: img.name.clone(),
                group: img.group.clone(),
                signatures: image_signatures(&img.image, descriptor, pool, fast_threshold, max_keypoints)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ImageIndex::new(entries, descriptor.len())
}

/// Parses `path group_id` lines. Blank lines and `#` comments are skipped;
/// relative paths are resolved against `base_dir`.
pub fn parse_manifest(text: &str, base_dir: &Path) -> Result<Vec<(PathBuf, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (path, group) = line
            .rsplit_once(char::is_whitespace)
            .map(|(p, g)| (p.trim_end(), g))
            .filter(|(p, _)| !p.is_empty())
            .ok_or_else(|| Error::Format(format!("manifest line {}: expected `path group_id`", i + 1)))?;
        out.push((base_dir.join(path), group.to_string()));
    }
    if out.is_empty() {
        return Err(Error::Format("manifest lists no images".into()));
    }
    Ok(out)
}

/// Loads every image of a manifest. Image names are the paths as written.
pub fn load_database(manifest: &Path) -> Result<Vec<DatabaseImage>> {
    let text = fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
    let base = manifest.parent().unwrap_or(Path::new(""));
    let listed = parse_manifest(&text, base)?;
    listed
        .par_iter()
        .map(|(path, group)| {
            Ok(DatabaseImage {
                name: path.strip_prefix(base).unwrap_or(path).display().to_string(),
                group: group.clone(),
                image: Image::open(path)?,
            })
        })
        .collect()
}

/// Writes each image as `<name>.png` under `dir` plus a `manifest.txt`
/// listing them; returns the manifest path.
pub fn write_database(images: &[DatabaseImage], dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::new();
    for img in images {
        if img.name.contains(char::is_whitespace) || img.group.contains(char::is_whitespace) {
            return Err(Error::Param(format!("image name `{}` or group contains whitespace", img.name)));
        }
        let file = format!("{}.png", img.name);
        img.image.write_png(&dir.join(&file))?;
        writeln!(manifest, "{file} {}", img.group).unwrap();
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub const RESULTS_HEADER: &str = "query_id,rank,retrieved_id,match_count";

/// Ranked results of every query (ids are index positions, ranks start at 1).
pub fn results_csv(table: &MatchTable, k: usize, threshold: u32) -> Result<String> {
    let ranked = (0..table.len())
        .into_par_iter()
        .map(|q| table.retrieve(q, k, threshold))
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for (q, list) in ranked.iter().enumerate() {
        for (rank, (id, count)) in list.iter().enumerate() {
            writeln!(out, "{q},{},{id},{count}", rank + 1).unwrap();
        }
    }
    Ok(out)
}

pub fn summary_line(k: usize, precision: f64, threshold: u32) -> String {
    format!("precision_at_k,{k},{precision},threshold,{threshold}")
}

pub const SYNTH_IMAGE_SIDE: usize = 192;

/// `groups` scenes of random overlapping rectangles, each rendered
/// `per_group` times with independent uniform noise in `[-noise, noise]`.
pub fn synthetic_database(seed: u64, groups: usize, per_group: usize, noise: u8) -> Result<Vec<DatabaseImage>> {
    if groups == 0 || per_group == 0 {
        return Err(Error::Param("synthetic database needs at least one group and one image per group".into()));
    }
    let mut rng = Rng::new(seed);
    let side = SYNTH_IMAGE_SIDE;
    let mut out = Vec::with_capacity(groups * per_group);
    for g in 0..groups {
        let mut base = vec![rng.below(256) as u8; side * side];
        for _ in 0..24 {
            let w = 8 + rng.below_usize(40);
            let h = 8 + rng.below_usize(40);
            let x0 = rng.below_usize(side - w);
            let y0 = rng.below_usize(side - h);
            let v = rng.below(256) as u8;
            for y in y0..y0 + h {
                base[y * side + x0..y * side + x0 + w].fill(v);
            }
        }
        for v in 0..per_group {
            let span = 2 * noise as u64 + 1;
            let pixels = base
                .iter()
                .map(|&p| (p as i64 + rng.below(span) as i64 - noise as i64).clamp(0, 255) as u8)
                .collect();
            out.push(DatabaseImage {
                name: format!("g{g:03}_v{v:02}"),
                group: format!("g{g:03}"),
                image: Image::new(side, side, pixels)?,
            });
        }
    }
    Ok(out)
}
