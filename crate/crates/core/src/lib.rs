//! Superpixels through community detection.
//!
//! The pipeline builds a weighted r-pixel grid over the CIELAB pixels of an
//! image ([`pixelgraph`]), partitions it with label propagation, Louvain or a
//! map-equation optimizer ([`communities`]), turns the communities into
//! connected regions and merges them down to the requested number of
//! superpixels ([`segmentation`]). [`metrics`] scores the result against
//! ground truth and intrinsically.
//!
//! ```no_run
//! use pixcomm::{imageio, segmentation::{segment, SegmentParams}};
//!
//! let rgb = imageio::load_image("house.ppm").unwrap();
//! let lab = imageio::rgb_to_lab(&rgb);
//! let out = segment(&lab, &SegmentParams::default(), 1000).unwrap();
//! println!("{} superpixels", out.labeling.region_count());
//! ```

pub mod communities;
pub mod graph;
pub mod imageio;
pub mod metrics;
pub mod pixelgraph;
pub mod segmentation;

pub use communities::{Algorithm, Partition};
pub use graph::WeightedGraph;
pub use imageio::{LabImage, Labeling, RgbImage};
pub use pixelgraph::{GridParams, PixelGrid};
pub use segmentation::SegmentParams;
