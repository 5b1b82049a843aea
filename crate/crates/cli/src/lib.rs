//! Dataset harness behind the `pixcomm` binary.
//!
//! A dataset is a flat directory of `<stem>.ppm` images, each with ground
//! truths named `<stem>.gt<i>.labels` in the text label-map format. Every
//! command sorts entries by stem and seeds each image from the global seed
//! and its stem, so output bytes never depend on scheduling.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use pixcomm::communities::{detect, MeanStd};
use pixcomm::imageio::{load_image, read_label_map, rgb_to_lab, write_label_map, write_ppm};
use pixcomm::metrics::{default_tolerance, evaluate, MetricReport};
use pixcomm::pixelgraph::{build_pixel_grid, grid_stats};
use pixcomm::segmentation::{overlay_boundaries, presegment};
use pixcomm::{Algorithm, GridParams, LabImage, Labeling, SegmentParams};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

/// Target region counts used when none are given.
pub const DEFAULT_KS: [usize; 9] = [200, 400, 600, 800, 1000, 1500, 2000, 2500, 5000];

/// Grid settings swept by `grid-stats` and `community-stats` by default.
pub const DEFAULT_SWEEP: [(usize, f64); 6] = [
    (1, 0.0),
    (2, 0.0),
    (5, 0.0),
    (1, 0.98),
    (2, 0.98),
    (5, 0.98),
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub grid: GridParams,
    pub algorithm: Algorithm,
    pub ks: Vec<usize>,
    pub seed: u64,
    /// Boundary recall tolerance in pixels; `None` picks one per image size.
    pub tolerance: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridParams::default(),
            algorithm: Algorithm::Infomap,
            ks: DEFAULT_KS.to_vec(),
            seed: 0,
            tolerance: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        ensure!(
            !self.ks.is_empty(),
            "at least one target region count is required"
        );
        ensure!(self.ks[0] > 0, "target region counts must be positive");
        ensure!(
            self.ks.windows(2).all(|w| w[0] < w[1]),
            "target region counts must be strictly increasing, got {:?}",
            self.ks
        );
        Ok(())
    }

    fn segment_params(&self, stem: &str) -> SegmentParams {
        SegmentParams {
            grid: self.grid,
            algorithm: self.algorithm,
            seed: image_seed(self.seed, stem),
        }
    }
}

/// Per-image seed: the first eight bytes of SHA-256 over the global seed and
/// the image stem.
pub fn image_seed(global: u64, stem: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(global.to_le_bytes());
    hasher.update(stem.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetEntry {
    pub stem: String,
    pub image: PathBuf,
    /// Sorted by ground-truth index.
    pub ground_truths: Vec<PathBuf>,
}

/// Lists the images of a dataset directory with their ground truths, sorted
/// by stem. Images without ground truth are listed with none.
pub fn discover(dir: &Path) -> Result<Vec<DatasetEntry>> {
    let mut images = BTreeMap::new();
    let mut truths: BTreeMap<String, Vec<(usize, PathBuf)>> = BTreeMap::new();
    for item in fs::read_dir(dir).with_context(|| format!("reading dataset {}", dir.display()))? {
        let path = item?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some(stem) = name.strip_suffix(".ppm") {
            images.insert(stem.to_string(), path.clone());
        } else if let Some(rest) = name.strip_suffix(".labels") {
            if let Some((stem, index)) = rest.rsplit_once(".gt") {
                if let Ok(i) = index.parse::<usize>() {
                    truths
                        .entry(stem.to_string())
                        .or_default()
                        .push((i, path.clone()));
                }
            }
        }
    }
    Ok(images
        .into_iter()
        .map(|(stem, image)| {
            let mut gts = truths.remove(&stem).unwrap_or_default();
            gts.sort();
            DatasetEntry {
                ground_truths: gts.into_iter().map(|(_, p)| p).collect(),
                stem,
                image,
            }
        })
        .collect())
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentSummary {
    pub k_requested: usize,
    pub k_actual: usize,
    pub initial_regions: usize,
    pub shortfall: bool,
}

/// Segments one image to `k` regions and writes the label map, plus a copy
/// of the image with region borders painted when `overlay` is given.
pub fn cmd_segment(
    config: &RunConfig,
    k: usize,
    image: &Path,
    out: &Path,
    overlay: Option<&Path>,
) -> Result<SegmentSummary> {
    config.validate()?;
    ensure!(k > 0, "target region count must be positive");
    let rgb = load_image(image)?;
    let lab = rgb_to_lab(&rgb);
    let pre = presegment(&lab, &config.segment_params(&stem_of(image)))?;
    let merged = pre.merge(k)?;
    write_label_map(&merged.labeling, out)?;
    if let Some(path) = overlay {
        write_ppm(
            &overlay_boundaries(&rgb, &merged.labeling, [255, 0, 0])?,
            path,
        )?;
    }
    Ok(SegmentSummary {
        k_requested: k,
        k_actual: merged.labeling.region_count(),
        initial_regions: merged.initial_regions,
        shortfall: merged.shortfall,
    })
}

/// One CSV row: a per-image score, or a per-K aggregate when `image` is
/// `mean` or `std`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreRow {
    pub image: String,
    pub k_requested: usize,
    pub k_actual: f64,
    pub rec: f64,
    pub ue: f64,
    pub ue_levin: f64,
    pub ev: f64,
    pub co: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Evaluation {
    /// Per-image rows grouped by image, then the aggregate rows.
    pub rows: Vec<ScoreRow>,
    /// `(stem, message)` for every entry that could not be scored.
    pub failures: Vec<(String, String)>,
}

/// Keeps the least favorable value of each metric over the ground truths.
/// Compactness and region count do not depend on the ground truth.
pub fn worst_case(image: &str, k: usize, reports: &[MetricReport]) -> ScoreRow {
    let first = reports.first().expect("at least one ground truth");
    let min = |f: fn(&MetricReport) -> f64| reports.iter().map(f).fold(f64::INFINITY, f64::min);
    let max = |f: fn(&MetricReport) -> f64| reports.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    ScoreRow {
        image: image.to_string(),
        k_requested: k,
        k_actual: first.k_actual as f64,
        rec: min(|r| r.rec),
        ue: max(|r| r.ue),
        ue_levin: max(|r| r.ue_levin),
        ev: min(|r| r.ev),
        co: first.co,
    }
}

/// Mean and population standard deviation rows for every K, over the
/// per-image rows.
pub fn aggregate(rows: &[ScoreRow], ks: &[usize]) -> Vec<ScoreRow> {
    let mut out = Vec::new();
    for &k in ks {
        let at_k: Vec<&ScoreRow> = rows.iter().filter(|r| r.k_requested == k).collect();
        let col =
            |f: fn(&ScoreRow) -> f64| MeanStd::of(&at_k.iter().map(|r| f(r)).collect::<Vec<_>>());
        let cols = [
            col(|r| r.k_actual),
            col(|r| r.rec),
            col(|r| r.ue),
            col(|r| r.ue_levin),
            col(|r| r.ev),
            col(|r| r.co),
        ];
        if cols[0].is_none() {
            continue;
        }
        let cols = cols.map(|c| c.expect("same row count in every column"));
        for (tag, pick) in [
            ("mean", (|m: MeanStd| m.mean) as fn(MeanStd) -> f64),
            ("std", |m| m.std),
        ] {
            out.push(ScoreRow {
                image: tag.to_string(),
                k_requested: k,
                k_actual: pick(cols[0]),
                rec: pick(cols[1]),
                ue: pick(cols[2]),
                ue_levin: pick(cols[3]),
                ev: pick(cols[4]),
                co: pick(cols[5]),
            });
        }
    }
    out
}

fn score_entry(config: &RunConfig, entry: &DatasetEntry) -> Result<Vec<ScoreRow>> {
    if entry.ground_truths.is_empty() {
        bail!("no ground truth found for {}", entry.image.display());
    }
    let lab = rgb_to_lab(&load_image(&entry.image)?);
    let truths = entry
        .ground_truths
        .iter()
        .map(|p| {
            let gt = read_label_map(p)?;
            ensure!(
                (gt.width(), gt.height()) == (lab.width(), lab.height()),
                "{} is {}x{} but the image is {}x{}",
                p.display(),
                gt.width(),
                gt.height(),
                lab.width(),
                lab.height()
            );
            Ok(gt)
        })
        .collect::<Result<Vec<Labeling>>>()?;
    let tolerance = config
        .tolerance
        .unwrap_or_else(|| default_tolerance(lab.width(), lab.height()));
    let pre = presegment(&lab, &config.segment_params(&entry.stem))?;
    let mut rows = Vec::with_capacity(config.ks.len());
    for &k in &config.ks {
        let merged = pre.merge(k)?;
        if merged.shortfall {
            log::warn!(
                "{}: only {} regions before merging, asked for {k}",
                entry.stem,
                merged.initial_regions
            );
        }
        let reports = truths
            .iter()
            .map(|gt| evaluate(&lab, gt, &merged.labeling, tolerance))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(worst_case(&entry.stem, k, &reports));
    }
    Ok(rows)
}

/// Segments every image of the dataset once per K and scores it against its
/// ground truths. Entries that fail are reported and skipped.
pub fn cmd_evaluate(config: &RunConfig, dir: &Path) -> Result<Evaluation> {
    config.validate()?;
    let entries = discover(dir)?;
    ensure!(!entries.is_empty(), "no images in {}", dir.display());
    let results: Vec<Result<Vec<ScoreRow>>> =
        entries.par_iter().map(|e| score_entry(config, e)).collect();
    let mut eval = Evaluation::default();
    for (entry, result) in entries.iter().zip(results) {
        match result {
            Ok(rows) => eval.rows.extend(rows),
            Err(e) => eval.failures.push((entry.stem.clone(), format!("{e:#}"))),
        }
    }
    let aggregates = aggregate(&eval.rows, &config.ks);
    eval.rows.extend(aggregates);
    Ok(eval)
}

pub fn write_scores<W: Write>(rows: &[ScoreRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "image",
        "k_requested",
        "k_actual",
        "rec",
        "ue",
        "ue_levin",
        "ev",
        "co",
    ])?;
    for r in rows {
        w.write_record([
            r.image.clone(),
            r.k_requested.to_string(),
            r.k_actual.to_string(),
            r.rec.to_string(),
            r.ue.to_string(),
            r.ue_levin.to_string(),
            r.ev.to_string(),
            r.co.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_failures<W: Write>(failures: &[(String, String)], mut out: W) -> Result<()> {
    for (stem, message) in failures {
        writeln!(out, "{stem}\t{message}")?;
    }
    Ok(())
}

fn load_dataset_images(dir: &Path) -> Result<Vec<(String, LabImage)>> {
    let entries = discover(dir)?;
    ensure!(!entries.is_empty(), "no images in {}", dir.display());
    entries
        .par_iter()
        .map(|e| Ok((e.stem.clone(), rgb_to_lab(&load_image(&e.image)?))))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridStatsRow {
    pub radius: usize,
    pub rho: f64,
    pub images: usize,
    pub vertices: f64,
    pub edges: f64,
    pub total_weight: f64,
}

/// Mean vertex count, edge count and total edge weight of the grid over the
/// dataset, for each `(radius, rho)`.
pub fn cmd_grid_stats(dir: &Path, sweep: &[(usize, f64)], sigma: f64) -> Result<Vec<GridStatsRow>> {
    let images = load_dataset_images(dir)?;
    let n = images.len() as f64;
    sweep
        .iter()
        .map(|&(radius, rho)| {
            let params = GridParams::new(radius, rho, sigma)?;
            let stats = images
                .par_iter()
                .map(|(_, img)| Ok(grid_stats(&build_pixel_grid(img, params)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(GridStatsRow {
                radius,
                rho,
                images: stats.len(),
                vertices: stats.iter().map(|s| s.vertex_count as f64).sum::<f64>() / n,
                edges: stats.iter().map(|s| s.edge_count as f64).sum::<f64>() / n,
                total_weight: stats.iter().map(|s| s.total_weight).sum::<f64>() / n,
            })
        })
        .collect()
}

pub fn write_grid_stats<W: Write>(rows: &[GridStatsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "radius",
        "rho",
        "images",
        "vertices",
        "edges",
        "total_weight",
    ])?;
    for r in rows {
        w.write_record([
            r.radius.to_string(),
            r.rho.to_string(),
            r.images.to_string(),
            r.vertices.to_string(),
            r.edges.to_string(),
            r.total_weight.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommunityStatsRow {
    pub algorithm: Algorithm,
    pub radius: usize,
    pub rho: f64,
    pub images: usize,
    pub count: MeanStd,
    pub max_size: MeanStd,
    pub min_size: MeanStd,
}

/// Community count and extreme community sizes before any merging, for each
/// algorithm and grid setting.
pub fn cmd_community_stats(
    config: &RunConfig,
    dir: &Path,
    algorithms: &[Algorithm],
    sweep: &[(usize, f64)],
) -> Result<Vec<CommunityStatsRow>> {
    let images = load_dataset_images(dir)?;
    let mut rows = Vec::new();
    for &algorithm in algorithms {
        for &(radius, rho) in sweep {
            let params = GridParams::new(radius, rho, config.grid.sigma)?;
            let per_image = images
                .par_iter()
                .map(|(stem, img)| {
                    let grid = build_pixel_grid(img, params)?;
                    let part = detect(grid.graph(), algorithm, image_seed(config.seed, stem));
                    let sizes = part.sizes();
                    Ok((
                        part.community_count() as f64,
                        sizes.iter().copied().max().unwrap_or(0) as f64,
                        sizes.iter().copied().min().unwrap_or(0) as f64,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let col = |f: fn(&(f64, f64, f64)) -> f64| {
                MeanStd::of(&per_image.iter().map(f).collect::<Vec<_>>())
                    .expect("dataset is not empty")
            };
            rows.push(CommunityStatsRow {
                algorithm,
                radius,
                rho,
                images: per_image.len(),
                count: col(|s| s.0),
                max_size: col(|s| s.1),
                min_size: col(|s| s.2),
            });
        }
    }
    Ok(rows)
}

pub fn write_community_stats<W: Write>(rows: &[CommunityStatsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "algorithm",
        "radius",
        "rho",
        "images",
        "count_mean",
        "count_std",
        "max_mean",
        "max_std",
        "min_mean",
        "min_std",
    ])?;
    for r in rows {
        w.write_record([
            r.algorithm.name().to_string(),
            r.radius.to_string(),
            r.rho.to_string(),
            r.images.to_string(),
            r.count.mean.to_string(),
            r.count.std.to_string(),
            r.max_size.mean.to_string(),
            r.max_size.std.to_string(),
            r.min_size.mean.to_string(),
            r.min_size.std.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
