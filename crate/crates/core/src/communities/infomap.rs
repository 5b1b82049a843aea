use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::quality::{map_equation_of, plogp};
use super::Partition;
use crate::graph::WeightedGraph;

#[derive(Clone, Debug)]
pub struct InfomapConfig {
    pub seed: u64,
    /// Minimum codelength decrease (bits) for a move to count.
    pub tolerance: f64,
    /// Record the map equation of the working partition after every accepted
    /// move (recomputed from scratch, so only for small graphs).
    pub trace: bool,
}

impl Default for InfomapConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            tolerance: 1e-12,
            trace: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct InfomapResult {
    pub partition: Partition,
    /// Two-level codelength of `partition`; 0 for a graph without edges.
    pub codelength: f64,
    pub levels: usize,
    pub codelength_trace: Vec<f64>,
}

/// Per-module flow statistics, in units of `1 / 2W`.
struct Modules {
    exit: Vec<f64>,
    flow: Vec<f64>,
    total_exit: f64,
}

impl Modules {
    /// The partition-dependent part of the map equation, given the sums it
    /// is made of. The node-entropy term is constant and left out.
    fn cost(total_exit: f64, exit_terms: f64, module_terms: f64) -> f64 {
        plogp(total_exit) - 2.0 * exit_terms + module_terms
    }
}

/// Greedy two-level map-equation minimization. Starts from singletons, moves
/// single nodes to the neighboring module that lowers the codelength most,
/// and contracts modules into super-nodes between levels, stopping when a
/// level makes no move.
pub fn infomap(g: &WeightedGraph, config: &InfomapConfig) -> InfomapResult {
    let n = g.node_count();
    let mut trace = Vec::new();
    if g.total_weight() <= 0.0 {
        return InfomapResult {
            partition: Partition::singletons(n),
            codelength: 0.0,
            levels: 0,
            codelength_trace: trace,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut membership: Vec<usize> = (0..n).collect();
    let mut level_graph = g.clone();
    let mut levels = 0;
    loop {
        let mut tracer = |level_assignment: &[usize]| {
            if config.trace {
                let composed: Vec<usize> =
                    membership.iter().map(|&m| level_assignment[m]).collect();
                trace.push(map_equation_of(g, &composed).expect("positive weight"));
            }
        };
        let (assignment, moved) = move_nodes(&level_graph, config.tolerance, &mut rng, &mut tracer);
        if !moved {
            break;
        }
        levels += 1;
        let level_part = Partition::from_labels(assignment);
        for m in membership.iter_mut() {
            *m = level_part.community_of(*m);
        }
        if level_part.community_count() == level_graph.node_count() {
            break;
        }
        level_graph = level_graph.contract(level_part.assignment(), level_part.community_count());
    }
    let mut partition = Partition::from_labels(membership);
    let mut codelength = map_equation_of(g, partition.assignment()).expect("positive weight");
    // the one-module solution is never reached by single-node moves when
    // every intermediate merge costs bits
    let one = Partition::single_community(n);
    let one_len = map_equation_of(g, one.assignment()).expect("positive weight");
    if one_len < codelength - config.tolerance {
        partition = one;
        codelength = one_len;
        if config.trace {
            trace.push(codelength);
        }
    }
    InfomapResult {
        partition,
        codelength,
        levels,
        codelength_trace: trace,
    }
}

fn move_nodes(
    g: &WeightedGraph,
    tolerance: f64,
    rng: &mut ChaCha8Rng,
    on_move: &mut impl FnMut(&[usize]),
) -> (Vec<usize>, bool) {
    let n = g.node_count();
    let two_w = 2.0 * g.total_weight();
    let node_flow: Vec<f64> = (0..n).map(|u| g.strength(u) / two_w).collect();
    // flow leaving each node towards other nodes
    let node_out: Vec<f64> = (0..n)
        .map(|u| (g.strength(u) - 2.0 * g.self_loop(u)) / two_w)
        .collect();
    let mut comm: Vec<usize> = (0..n).collect();
    let mut m = Modules {
        exit: node_out.clone(),
        flow: node_flow.clone(),
        total_exit: node_out.iter().sum(),
    };
    let mut exit_terms: f64 = m.exit.iter().map(|&q| plogp(q)).sum();
    let mut module_terms: f64 = m.exit.iter().zip(&m.flow).map(|(q, p)| plogp(q + p)).sum();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut link = vec![0.0f64; n];
    let mut seen = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut any_move = false;
    loop {
        let mut moved = false;
        for &u in &order {
            let from = comm[u];
            for (v, wt) in g.neighbors(u) {
                let c = comm[v];
                if !seen[c] {
                    seen[c] = true;
                    touched.push(c);
                }
                link[c] += wt / two_w;
            }
            let out_u = node_out[u];
            let p_u = node_flow[u];
            let old_cost = Modules::cost(m.total_exit, exit_terms, module_terms);
            let from_exit = m.exit[from] - out_u + 2.0 * link[from];
            let from_flow = m.flow[from] - p_u;

            let mut best: Option<(usize, f64, f64, f64, f64)> = None;
            for &to in &touched {
                if to == from {
                    continue;
                }
                let to_exit = m.exit[to] + out_u - 2.0 * link[to];
                let to_flow = m.flow[to] + p_u;
                let total_exit = m.total_exit - m.exit[from] - m.exit[to] + from_exit + to_exit;
                let new_exit_terms = exit_terms - plogp(m.exit[from]) - plogp(m.exit[to])
                    + plogp(from_exit)
                    + plogp(to_exit);
                let new_module_terms = module_terms
                    - plogp(m.exit[from] + m.flow[from])
                    - plogp(m.exit[to] + m.flow[to])
                    + plogp(from_exit + from_flow)
                    + plogp(to_exit + to_flow);
                let delta = Modules::cost(total_exit, new_exit_terms, new_module_terms) - old_cost;
                if best.is_none_or(|b| delta < b.1) {
                    best = Some((to, delta, to_exit, new_exit_terms, new_module_terms));
                }
            }
            for c in touched.drain(..) {
                link[c] = 0.0;
                seen[c] = false;
            }
            let Some((to, delta, to_exit, new_exit_terms, new_module_terms)) = best else {
                continue;
            };
            if delta >= -tolerance {
                continue;
            }
            m.total_exit = m.total_exit - m.exit[from] - m.exit[to] + from_exit + to_exit;
            m.exit[from] = from_exit.max(0.0);
            m.exit[to] = to_exit.max(0.0);
            m.flow[from] = from_flow.max(0.0);
            m.flow[to] += p_u;
            exit_terms = new_exit_terms;
            module_terms = new_module_terms;
            comm[u] = to;
            moved = true;
            any_move = true;
            on_move(&comm);
        }
        if !moved {
            break;
        }
        // refresh the running sums to keep rounding from accumulating
        m.total_exit = m.exit.iter().sum();
        exit_terms = m.exit.iter().map(|&q| plogp(q)).sum();
        module_terms = m.exit.iter().zip(&m.flow).map(|(q, p)| plogp(q + p)).sum();
    }
    (comm, any_move)
}
