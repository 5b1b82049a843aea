//! From graph communities to a labeling with a requested number of
//! superpixels.
//!
//! A partition of grid nodes becomes a pixel labeling in which every region is
//! 4-connected (pixels without a grid node become singletons). Regions are then
//! merged on the radius-1 region adjacency graph, always taking the smallest
//! region and folding it into its most similar neighbor (Gaussian similarity of
//! mean Lab colors), until the requested count is reached.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

use crate::communities::{detect, Algorithm, Partition};
use crate::imageio::{ImageIoError, LabImage, Labeling, RgbImage};
use crate::pixelgraph::{
    build_pixel_grid, edge_weight, squared_distance, GridError, GridParams, PixelGrid,
};

#[derive(Debug, Error)]
pub enum SegmentationError {
    #[error("target superpixel count must be >= 1")]
    ZeroTarget,
    #[error("labeling is {lw}x{lh} but image is {iw}x{ih}")]
    DimensionMismatch {
        lw: usize,
        lh: usize,
        iw: usize,
        ih: usize,
    },
    #[error("partition covers {got} nodes, grid has {expected}")]
    PartitionSize { expected: usize, got: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Image(#[from] ImageIoError),
}

pub type Result<T> = std::result::Result<T, SegmentationError>;

/// Projects a partition of grid nodes onto the pixels. Each community is split
/// into its 4-connected pixel components and every pixel missing from the
/// grid becomes its own region. Region ids follow row-major first occurrence.
pub fn partition_to_labeling(part: &Partition, grid: &PixelGrid) -> Result<Labeling> {
    if part.len() != grid.node_count() {
        return Err(SegmentationError::PartitionSize {
            expected: grid.node_count(),
            got: part.len(),
        });
    }
    let (w, h) = (grid.width(), grid.height());
    let community = |p: usize| grid.node_of(p).map(|n| part.community_of(n));
    let mut ids = vec![usize::MAX; w * h];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if ids[start] != usize::MAX {
            continue;
        }
        ids[start] = next;
        if let Some(c) = community(start) {
            queue.push_back(start);
            while let Some(p) = queue.pop_front() {
                for q in neighbors4(p, w, h) {
                    if ids[q] == usize::MAX && community(q) == Some(c) {
                        ids[q] = next;
                        queue.push_back(q);
                    }
                }
            }
        }
        next += 1;
    }
    Ok(Labeling::from_ids(w, h, ids)?)
}

pub(crate) fn neighbors4(p: usize, w: usize, h: usize) -> impl Iterator<Item = usize> {
    let (x, y) = (p % w, p / w);
    [
        (x > 0).then(|| p - 1),
        (x + 1 < w).then(|| p + 1),
        (y > 0).then(|| p - w),
        (y + 1 < h).then(|| p + w),
    ]
    .into_iter()
    .flatten()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub size: usize,
    color_sum: [f64; 3],
}

impl Region {
    pub fn mean_color(&self) -> [f64; 3] {
        let n = self.size as f64;
        self.color_sum.map(|s| s / n)
    }
}

/// Regions of a labeling with their sizes, mean colors and 4-adjacency.
#[derive(Clone, Debug)]
pub struct RegionAdjacencyGraph {
    base: Labeling,
    regions: Vec<Region>,
    adjacency: Vec<BTreeSet<usize>>,
}

pub fn build_rag(labeling: &Labeling, img: &LabImage) -> Result<RegionAdjacencyGraph> {
    let (w, h) = (labeling.width(), labeling.height());
    if (w, h) != (img.width(), img.height()) {
        return Err(SegmentationError::DimensionMismatch {
            lw: w,
            lh: h,
            iw: img.width(),
            ih: img.height(),
        });
    }
    let k = labeling.region_count();
    let mut regions = vec![
        Region {
            size: 0,
            color_sum: [0.0; 3]
        };
        k
    ];
    let mut adjacency = vec![BTreeSet::new(); k];
    let ids = labeling.ids();
    for (p, &id) in ids.iter().enumerate() {
        let r = &mut regions[id];
        r.size += 1;
        for c in 0..3 {
            r.color_sum[c] += img.pixels()[p][c];
        }
        let (x, y) = (p % w, p / w);
        for q in [(x + 1 < w).then(|| p + 1), (y + 1 < h).then(|| p + w)]
            .into_iter()
            .flatten()
        {
            if ids[q] != id {
                adjacency[id].insert(ids[q]);
                adjacency[ids[q]].insert(id);
            }
        }
    }
    Ok(RegionAdjacencyGraph {
        base: labeling.clone(),
        regions,
        adjacency,
    })
}

impl RegionAdjacencyGraph {
    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn neighbors(&self, region: usize) -> &BTreeSet<usize> {
        &self.adjacency[region]
    }

    /// Number of adjacent region pairs.
    pub fn adjacency_count(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn labeling(&self) -> &Labeling {
        &self.base
    }
}

#[derive(Clone, Debug)]
pub struct MergeOutcome {
    pub labeling: Labeling,
    pub initial_regions: usize,
    /// The starting labeling already had fewer regions than requested.
    pub shortfall: bool,
    /// Merges performed below `|I| / (10K)`, below `|I| / K`, and above it.
    pub merges_by_phase: [usize; 3],
}

/// Merges regions down to `k`. The smallest region (lowest id on ties) is
/// folded into the neighbor with the most similar mean color (larger, then
/// lower id on ties) while more than `k` regions remain. Merges are tallied
/// by size class: below `|I|/(10k)`, below `|I|/k`, and the rest.
pub fn merge_to_k(rag: &RegionAdjacencyGraph, k: usize, sigma: f64) -> Result<MergeOutcome> {
    if k == 0 {
        return Err(SegmentationError::ZeroTarget);
    }
    let base = &rag.base;
    let image_size = base.len() as f64;
    let small = image_size / (10.0 * k as f64);
    let medium = image_size / k as f64;

    let mut regions = rag.regions.clone();
    let mut adjacency = rag.adjacency.clone();
    let mut parent: Vec<usize> = (0..regions.len()).collect();
    let mut by_size: BTreeSet<(usize, usize)> = regions
        .iter()
        .enumerate()
        .map(|(i, r)| (r.size, i))
        .collect();
    let mut merges_by_phase = [0; 3];

    while by_size.len() > k {
        let (size, source) = by_size.pop_first().expect("more than k regions");
        let source_mean = regions[source].mean_color();
        let similarity = |r: usize| {
            let mean = regions[r].mean_color();
            (
                edge_weight(source_mean, mean, sigma),
                squared_distance(source_mean, mean),
            )
        };
        // most similar first; distance breaks ties where the Gaussian underflows
        let target = adjacency[source].iter().copied().min_by(|&a, &b| {
            let (wa, da) = similarity(a);
            let (wb, db) = similarity(b);
            wb.total_cmp(&wa)
                .then(da.total_cmp(&db))
                .then(regions[b].size.cmp(&regions[a].size))
                .then(a.cmp(&b))
        });
        let Some(target) = target else {
            // only possible for a disconnected adjacency graph
            by_size.insert((size, source));
            break;
        };
        let phase = if (size as f64) < small {
            0
        } else if (size as f64) < medium {
            1
        } else {
            2
        };
        merges_by_phase[phase] += 1;

        by_size.remove(&(regions[target].size, target));
        let absorbed = std::mem::replace(
            &mut regions[source],
            Region {
                size: 0,
                color_sum: [0.0; 3],
            },
        );
        let t = &mut regions[target];
        t.size += absorbed.size;
        for c in 0..3 {
            t.color_sum[c] += absorbed.color_sum[c];
        }
        by_size.insert((t.size, target));

        let moved = std::mem::take(&mut adjacency[source]);
        for n in moved {
            adjacency[n].remove(&source);
            if n != target {
                adjacency[n].insert(target);
                adjacency[target].insert(n);
            }
        }
        parent[source] = target;
    }

    let root = |mut r: usize, parent: &[usize]| {
        while parent[r] != r {
            r = parent[r];
        }
        r
    };
    let mut resolved = vec![0; parent.len()];
    for (r, slot) in resolved.iter_mut().enumerate() {
        *slot = root(r, &parent);
    }
    let ids = base.ids().iter().map(|&id| resolved[id]).collect();
    let labeling = Labeling::from_ids(base.width(), base.height(), ids)?;
    Ok(MergeOutcome {
        labeling,
        initial_regions: rag.region_count(),
        shortfall: rag.region_count() < k,
        merges_by_phase,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentParams {
    pub grid: GridParams,
    pub algorithm: Algorithm,
    pub seed: u64,
}

impl Default for SegmentParams {
    fn default() -> Self {
        Self {
            grid: GridParams::default(),
            algorithm: Algorithm::Infomap,
            seed: 0,
        }
    }
}

/// Everything computed before merging; reusable for several target counts.
#[derive(Clone, Debug)]
pub struct Presegmentation {
    pub communities: Partition,
    pub rag: RegionAdjacencyGraph,
    pub sigma: f64,
}

impl Presegmentation {
    pub fn region_count(&self) -> usize {
        self.rag.region_count()
    }

    pub fn merge(&self, k: usize) -> Result<MergeOutcome> {
        merge_to_k(&self.rag, k, self.sigma)
    }
}

/// Grid construction, community detection, connectivity enforcement and
/// adjacency graph for one image.
pub fn presegment(img: &LabImage, params: &SegmentParams) -> Result<Presegmentation> {
    let grid = build_pixel_grid(img, params.grid)?;
    let communities = detect(grid.graph(), params.algorithm, params.seed);
    let labeling = partition_to_labeling(&communities, &grid)?;
    let rag = build_rag(&labeling, img)?;
    Ok(Presegmentation {
        communities,
        rag,
        sigma: params.grid.sigma,
    })
}

/// The full pipeline: grid, communities, connected regions, merging to `k`.
pub fn segment(img: &LabImage, params: &SegmentParams, k: usize) -> Result<MergeOutcome> {
    if k == 0 {
        return Err(SegmentationError::ZeroTarget);
    }
    presegment(img, params)?.merge(k)
}

/// Paints region boundaries (pixels whose right or bottom neighbor differs)
/// over a copy of the image.
pub fn overlay_boundaries(img: &RgbImage, labeling: &Labeling, color: [u8; 3]) -> Result<RgbImage> {
    if (img.width(), img.height()) != (labeling.width(), labeling.height()) {
        return Err(SegmentationError::DimensionMismatch {
            lw: labeling.width(),
            lh: labeling.height(),
            iw: img.width(),
            ih: img.height(),
        });
    }
    let mask = crate::metrics::boundary_pixels(labeling);
    let mut out = img.clone();
    for (px, &b) in out.pixels_mut().iter_mut().zip(&mask) {
        if b {
            *px = color;
        }
    }
    Ok(out)
}
