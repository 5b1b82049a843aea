use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Partition;
use crate::graph::WeightedGraph;

#[derive(Clone, Debug)]
pub struct LabelPropagationConfig {
    pub seed: u64,
    pub max_sweeps: usize,
    /// Count each neighbor's label by edge weight; `false` counts neighbors.
    pub weighted: bool,
}

impl Default for LabelPropagationConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_sweeps: 100,
            weighted: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LabelPropagationResult {
    pub partition: Partition,
    /// `false` when the sweep cap was hit before a sweep without changes.
    pub converged: bool,
    pub sweeps: usize,
}

/// Asynchronous label propagation. Every node starts with its own index as
/// label; each sweep visits the nodes in a seeded random order and gives each
/// node the label carrying the most incident weight among its neighbors. A
/// node whose current label is among the best keeps it, otherwise the lowest
/// best label wins. Stops after a sweep that changes nothing.
pub fn label_propagation(
    g: &WeightedGraph,
    config: &LabelPropagationConfig,
) -> LabelPropagationResult {
    let n = g.node_count();
    let mut labels: Vec<usize> = (0..n).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // per-label accumulated weight, reset through `touched`
    let mut score = vec![0.0f64; n];
    let mut touched: Vec<usize> = Vec::new();

    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < config.max_sweeps {
        sweeps += 1;
        order.shuffle(&mut rng);
        let mut changed = 0usize;
        for &u in &order {
            for (v, w) in g.neighbors(u) {
                let l = labels[v];
                if score[l] == 0.0 {
                    touched.push(l);
                }
                score[l] += if config.weighted { w } else { 1.0 };
            }
            if touched.is_empty() {
                continue;
            }
            let best = touched.iter().map(|&l| score[l]).fold(f64::MIN, f64::max);
            let tol = 1e-12 * best.abs().max(1.0);
            let current = labels[u];
            if score[current] < best - tol {
                let winner = touched
                    .iter()
                    .copied()
                    .filter(|&l| score[l] >= best - tol)
                    .min()
                    .unwrap();
                labels[u] = winner;
                changed += 1;
            }
            for l in touched.drain(..) {
                score[l] = 0.0;
            }
        }
        if changed == 0 {
            converged = true;
            break;
        }
    }
    LabelPropagationResult {
        partition: Partition::from_labels(labels),
        converged,
        sweeps,
    }
}
