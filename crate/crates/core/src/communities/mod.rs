//! Community detection on weighted graphs: label propagation, Louvain
//! modularity optimization and greedy two-level map-equation minimization.

mod infomap;
mod label_propagation;
mod louvain;
mod quality;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::graph::WeightedGraph;

pub use infomap::{infomap, InfomapConfig, InfomapResult};
pub use label_propagation::{label_propagation, LabelPropagationConfig, LabelPropagationResult};
pub use louvain::{louvain, LouvainConfig, LouvainResult};
pub use quality::{map_equation, modularity};

#[derive(Debug, Error, PartialEq)]
pub enum CommunityError {
    #[error("graph has zero total weight")]
    ZeroWeight,
    #[error("partition covers {got} nodes, graph has {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("unknown algorithm {0:?} (expected label-propagation, louvain or infomap)")]
    UnknownAlgorithm(String),
}

/// Assignment of every graph node to a community, ids dense in
/// `0..community_count` and numbered by first occurrence in node order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    assignment: Vec<usize>,
    community_count: usize,
}

impl Partition {
    pub fn from_labels<I: IntoIterator<Item = usize>>(labels: I) -> Self {
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let assignment: Vec<usize> = labels
            .into_iter()
            .map(|l| {
                let next = remap.len();
                *remap.entry(l).or_insert(next)
            })
            .collect();
        Self {
            assignment,
            community_count: remap.len(),
        }
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            assignment: (0..n).collect(),
            community_count: n,
        }
    }

    pub fn single_community(n: usize) -> Self {
        Self {
            assignment: vec![0; n],
            community_count: usize::from(n > 0),
        }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn community_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn community_count(&self) -> usize {
        self.community_count
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.community_count];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    pub(crate) fn check_covers(&self, g: &WeightedGraph) -> Result<(), CommunityError> {
        if self.len() != g.node_count() {
            return Err(CommunityError::SizeMismatch {
                expected: g.node_count(),
                got: self.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    LabelPropagation,
    Louvain,
    Infomap,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [
        Algorithm::LabelPropagation,
        Algorithm::Louvain,
        Algorithm::Infomap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::LabelPropagation => "label-propagation",
            Algorithm::Louvain => "louvain",
            Algorithm::Infomap => "infomap",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = CommunityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "label-propagation" | "lp" | "labelpropagation" => Ok(Algorithm::LabelPropagation),
            "louvain" => Ok(Algorithm::Louvain),
            "infomap" => Ok(Algorithm::Infomap),
            _ => Err(CommunityError::UnknownAlgorithm(s.to_string())),
        }
    }
}

/// Runs `algorithm` with its default settings and the given seed.
pub fn detect(g: &WeightedGraph, algorithm: Algorithm, seed: u64) -> Partition {
    match algorithm {
        Algorithm::LabelPropagation => {
            label_propagation(
                g,
                &LabelPropagationConfig {
                    seed,
                    ..Default::default()
                },
            )
            .partition
        }
        Algorithm::Louvain => {
            louvain(
                g,
                &LouvainConfig {
                    seed,
                    ..Default::default()
                },
            )
            .partition
        }
        Algorithm::Infomap => {
            infomap(
                g,
                &InfomapConfig {
                    seed,
                    ..Default::default()
                },
            )
            .partition
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self {
            mean,
            std: var.sqrt(),
        })
    }
}

/// Community count and extreme community sizes, summarized over a batch of
/// partitions (one per image).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommunityStats {
    pub partitions: usize,
    pub community_count: MeanStd,
    pub max_size: MeanStd,
    pub min_size: MeanStd,
}

pub fn community_stats(partitions: &[Partition]) -> Result<CommunityStats, CommunityError> {
    let nonempty: Vec<&Partition> = partitions.iter().filter(|p| !p.is_empty()).collect();
    if nonempty.is_empty() {
        return Err(CommunityError::EmptyBatch);
    }
    let mut counts = Vec::new();
    let mut maxes = Vec::new();
    let mut mins = Vec::new();
    for p in nonempty {
        let sizes = p.sizes();
        counts.push(p.community_count() as f64);
        maxes.push(*sizes.iter().max().unwrap() as f64);
        mins.push(*sizes.iter().min().unwrap() as f64);
    }
    Ok(CommunityStats {
        partitions: counts.len(),
        community_count: MeanStd::of(&counts).unwrap(),
        max_size: MeanStd::of(&maxes).unwrap(),
        min_size: MeanStd::of(&mins).unwrap(),
    })
}
