//! Raster input, sRGB to CIELAB conversion and the plain-text label-map format.
//!
//! Images are read from binary PPM (`P6`) files. Label maps (segmentations and
//! ground truths alike) use a small text format:
//!
//! ```text
//! width height
//! id id id ...      <- `height` lines of `width` non-negative integers
//! ```

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageIoError {
    #[error("file not found: {0}")]
    NotFound(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("label map dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid token {token:?} on line {line}")]
    InvalidToken { line: usize, token: String },
    #[error("invalid image: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, ImageIoError>;

/// An 8-bit sRGB raster, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        check_shape(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// A `width`×`height` image filled with one color.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        Self::new(width, height, vec![rgb; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        f: impl Fn(usize, usize) -> [u8; 3],
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [[u8; 3]] {
        &mut self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }
}

/// A CIELAB raster, row-major, same shape as the sRGB source.
#[derive(Clone, Debug, PartialEq)]
pub struct LabImage {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
}

impl LabImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        check_shape(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }
}

fn check_shape(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(ImageIoError::Invalid(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    if width.checked_mul(height) != Some(len) {
        return Err(ImageIoError::Invalid(format!(
            "{width}x{height} image needs {} pixels, got {len}",
            width.saturating_mul(height)
        )));
    }
    Ok(())
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => ImageIoError::NotFound(path.display().to_string()),
        _ => ImageIoError::Io(e),
    })
}

/// Loads a binary PPM (`P6`) file.
pub fn load_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    decode_ppm(&read_file(path.as_ref())?)
}

struct HeaderCursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ImageIoError::MalformedHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImageIoError::MalformedHeader(format!("{what} out of range")))
    }
}

/// Decodes an in-memory binary PPM. Only 8-bit data (maxval ≤ 255) is
/// accepted; a maxval below 255 is rescaled to the full range.
pub fn decode_ppm(data: &[u8]) -> Result<RgbImage> {
    if data.len() < 2 || &data[..2] != b"P6" {
        return Err(ImageIoError::MalformedHeader("missing P6 magic".into()));
    }
    let mut cur = HeaderCursor { data, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(ImageIoError::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 255 {
        return Err(ImageIoError::MalformedHeader(format!(
            "unsupported maxval {maxval}"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    match data.get(cur.pos) {
        Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
        _ => {
            return Err(ImageIoError::MalformedHeader(
                "no whitespace after maxval".into(),
            ))
        }
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| ImageIoError::MalformedHeader("dimensions overflow".into()))?;
    let body = &data[cur.pos..];
    if body.len() < expected {
        return Err(ImageIoError::Truncated {
            expected,
            found: body.len(),
        });
    }
    let scale = |v: u8| -> u8 {
        if maxval == 255 {
            v
        } else {
            ((v.min(maxval as u8) as u32 * 255 + maxval as u32 / 2) / maxval as u32) as u8
        }
    };
    let pixels = body[..expected]
        .chunks_exact(3)
        .map(|c| [scale(c[0]), scale(c[1]), scale(c[2])])
        .collect();
    RgbImage::new(width, height, pixels)
}

pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.reserve(img.pixels.len() * 3);
    for p in &img.pixels {
        out.extend_from_slice(p);
    }
    out
}

pub fn write_ppm(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_ppm(img))?;
    Ok(())
}

// sRGB (IEC 61966-2-1) linear RGB -> XYZ, D65.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];
const D65_WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];
const LAB_EPSILON: f64 = 216.0 / 24389.0;
const LAB_KAPPA: f64 = 24389.0 / 27.0;

fn srgb_to_linear(c: u8) -> f64 {
    let v = c as f64 / 255.0;
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    if t > LAB_EPSILON {
        t.cbrt()
    } else {
        (LAB_KAPPA * t + 16.0) / 116.0
    }
}

/// Converts one sRGB triple to CIELAB (D65).
pub fn srgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let lin = rgb.map(srgb_to_linear);
    let mut f = [0.0; 3];
    for (i, row) in RGB_TO_XYZ.iter().enumerate() {
        let xyz = row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2];
        f[i] = lab_f(xyz / D65_WHITE[i]);
    }
    let l = (116.0 * f[1] - 16.0).clamp(0.0, 100.0);
    [l, 500.0 * (f[0] - f[1]), 200.0 * (f[1] - f[2])]
}

pub fn rgb_to_lab(img: &RgbImage) -> LabImage {
    // only 256^3 possible inputs but real images repeat colors heavily
    let mut cache: HashMap<[u8; 3], [f64; 3]> = HashMap::new();
    let pixels = img
        .pixels
        .iter()
        .map(|&p| *cache.entry(p).or_insert_with(|| srgb_to_lab(p)))
        .collect();
    LabImage {
        width: img.width,
        height: img.height,
        pixels,
    }
}

/// A per-pixel region map with dense ids in `0..region_count`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Labeling {
    width: usize,
    height: usize,
    ids: Vec<usize>,
    region_count: usize,
}

impl Labeling {
    /// Builds a labeling from arbitrary non-negative ids, renumbering them
    /// densely by first occurrence in row-major order.
    pub fn from_ids(width: usize, height: usize, ids: Vec<usize>) -> Result<Self> {
        check_shape(width, height, ids.len())?;
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let ids: Vec<usize> = ids
            .into_iter()
            .map(|id| {
                let next = remap.len();
                *remap.entry(id).or_insert(next)
            })
            .collect();
        Ok(Self {
            width,
            height,
            ids,
            region_count: remap.len(),
        })
    }

    /// A labeling with every pixel in region 0.
    pub fn single_region(width: usize, height: usize) -> Result<Self> {
        Self::from_ids(width, height, vec![0; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> usize) -> Result<Self> {
        let mut ids = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                ids.push(f(x, y));
            }
        }
        Self::from_ids(width, height, ids)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn region_count(&self) -> usize {
        self.region_count
    }

    pub fn get(&self, x: usize, y: usize) -> usize {
        self.ids[y * self.width + x]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.region_count];
        for &id in &self.ids {
            sizes[id] += 1;
        }
        sizes
    }

    pub fn same_shape(&self, other: &Labeling) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.ids.len() * 4 + 16);
        out.push_str(&format!("{} {}\n", self.width, self.height));
        for row in self.ids.chunks(self.width) {
            let line: Vec<String> = row.iter().map(usize::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| ImageIoError::MalformedHeader("empty label map".into()))?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(ImageIoError::MalformedHeader(format!(
                "expected \"width height\", got {header:?}"
            )));
        }
        let parse_dim = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| ImageIoError::MalformedHeader(format!("bad dimension {s:?}")))
        };
        let (width, height) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
        if width == 0 || height == 0 {
            return Err(ImageIoError::MalformedHeader(format!(
                "zero dimension {width}x{height}"
            )));
        }
        let mut ids = Vec::with_capacity(width * height);
        let mut rows = 0;
        for (lineno, line) in lines {
            let before = ids.len();
            for tok in line.split_whitespace() {
                let id = tok
                    .parse::<usize>()
                    .map_err(|_| ImageIoError::InvalidToken {
                        line: lineno + 1,
                        token: tok.to_string(),
                    })?;
                ids.push(id);
            }
            if ids.len() - before != width {
                return Err(ImageIoError::DimensionMismatch(format!(
                    "line {} has {} ids, expected {width}",
                    lineno + 1,
                    ids.len() - before
                )));
            }
            rows += 1;
        }
        if rows != height {
            return Err(ImageIoError::DimensionMismatch(format!(
                "found {rows} rows, expected {height}"
            )));
        }
        Self::from_ids(width, height, ids)
    }
}

pub fn read_label_map(path: impl AsRef<Path>) -> Result<Labeling> {
    let bytes = read_file(path.as_ref())?;
    let text = String::from_utf8(bytes)
        .map_err(|_| ImageIoError::MalformedHeader("label map is not utf-8".into()))?;
    Labeling::parse(&text)
}

pub fn write_label_map(labeling: &Labeling, path: impl AsRef<Path>) -> Result<()> {
    let mut file = io::BufWriter::new(fs::File::create(path)?);
    file.write_all(labeling.to_text().as_bytes())?;
    file.flush()?;
    Ok(())
}
