//! The r-pixel grid: pixels joined to every pixel on the same row or column
//! within axis distance `radius`, weighted by a Gaussian of their CIELAB
//! distance and filtered by a similarity threshold.

use std::io::{self, Write};

use thiserror::Error;

use crate::graph::WeightedGraph;
use crate::imageio::LabImage;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("empty image")]
    EmptyImage,
    #[error("radius must be >= 1, got {0}")]
    BadRadius(usize),
    #[error("threshold must lie in [0, 1), got {0}")]
    BadThreshold(f64),
    #[error("sigma must be positive and finite, got {0}")]
    BadSigma(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridParams {
    pub radius: usize,
    /// Edges with similarity `<= rho` are dropped.
    pub rho: f64,
    pub sigma: f64,
}

impl GridParams {
    pub const DEFAULT_RADIUS: usize = 5;
    pub const DEFAULT_RHO: f64 = 0.98;
    pub const DEFAULT_SIGMA: f64 = 125.0;

    pub fn new(radius: usize, rho: f64, sigma: f64) -> Result<Self, GridError> {
        let p = Self { radius, rho, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.radius < 1 {
            return Err(GridError::BadRadius(self.radius));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(GridError::BadThreshold(self.rho));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(GridError::BadSigma(self.sigma));
        }
        Ok(())
    }
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            radius: Self::DEFAULT_RADIUS,
            rho: Self::DEFAULT_RHO,
            sigma: Self::DEFAULT_SIGMA,
        }
    }
}

pub fn squared_distance(p: [f64; 3], q: [f64; 3]) -> f64 {
    let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

/// Gaussian similarity `exp(-|p - q|² / (2σ²))` of two Lab colors.
pub fn edge_weight(p: [f64; 3], q: [f64; 3], sigma: f64) -> f64 {
    (-squared_distance(p, q) / (2.0 * sigma * sigma)).exp()
}

/// Weighted graph over the pixels of an image that keep at least one edge.
#[derive(Clone, Debug)]
pub struct PixelGrid {
    width: usize,
    height: usize,
    params: GridParams,
    /// node -> row-major pixel index
    pixels: Vec<usize>,
    /// pixel -> node, `u32::MAX` for pixels dropped by the threshold
    node_of_pixel: Vec<u32>,
    graph: WeightedGraph,
}

const NO_NODE: u32 = u32::MAX;

pub fn build_pixel_grid(img: &LabImage, params: GridParams) -> Result<PixelGrid, GridError> {
    params.validate()?;
    let (width, height) = (img.width(), img.height());
    if img.is_empty() {
        return Err(GridError::EmptyImage);
    }
    let lab = img.pixels();
    let two_sigma_sq = 2.0 * params.sigma * params.sigma;
    let mut edges: Vec<(u32, u32, f64)> = Vec::new();
    let mut keeps_edge = vec![false; width * height];
    for y in 0..height {
        for x in 0..width {
            let p = y * width + x;
            let right = (1..=params.radius)
                .take_while(|d| x + d < width)
                .map(|d| p + d);
            let down = (1..=params.radius)
                .take_while(|d| y + d < height)
                .map(|d| p + d * width);
            for q in right.chain(down) {
                let w = (-squared_distance(lab[p], lab[q]) / two_sigma_sq).exp();
                if w > params.rho {
                    edges.push((p as u32, q as u32, w));
                    keeps_edge[p] = true;
                    keeps_edge[q] = true;
                }
            }
        }
    }
    let mut node_of_pixel = vec![NO_NODE; width * height];
    let mut pixels = Vec::new();
    for (p, &keep) in keeps_edge.iter().enumerate() {
        if keep {
            node_of_pixel[p] = pixels.len() as u32;
            pixels.push(p);
        }
    }
    let graph = WeightedGraph::from_unique_edges(
        pixels.len(),
        edges.iter().map(|&(p, q, w)| {
            (
                node_of_pixel[p as usize] as usize,
                node_of_pixel[q as usize] as usize,
                w,
            )
        }),
    );
    Ok(PixelGrid {
        width,
        height,
        params,
        pixels,
        node_of_pixel,
        graph,
    })
}

impl PixelGrid {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn params(&self) -> GridParams {
        self.params
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn node_count(&self) -> usize {
        self.pixels.len()
    }

    /// Row-major pixel index of a node.
    pub fn pixel_of(&self, node: usize) -> usize {
        self.pixels[node]
    }

    /// Node of a pixel, `None` if the pixel was isolated by the threshold.
    pub fn node_of(&self, pixel: usize) -> Option<usize> {
        match self.node_of_pixel[pixel] {
            NO_NODE => None,
            n => Some(n as usize),
        }
    }

    /// Writes one `u v w` line per undirected edge, `u < v` as row-major
    /// pixel indices.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (a, b, w) in self.graph.edges() {
            writeln!(out, "{} {} {}", self.pixels[a], self.pixels[b], w)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridStats {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub total_weight: f64,
}

pub fn grid_stats(grid: &PixelGrid) -> GridStats {
    GridStats {
        vertex_count: grid.node_count(),
        edge_count: grid.graph.edge_count(),
        total_weight: grid.graph.total_weight(),
    }
}

/// Number of edges of an unfiltered grid, from the per-row/column count.
pub fn unfiltered_edge_count(width: usize, height: usize, radius: usize) -> usize {
    let line = |len: usize| -> usize { (1..=radius).map(|d| len.saturating_sub(d)).sum() };
    height * line(width) + width * line(height)
}
