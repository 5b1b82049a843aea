use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::quality::modularity_of;
use super::Partition;
use crate::graph::WeightedGraph;

#[derive(Clone, Debug)]
pub struct LouvainConfig {
    pub seed: u64,
    /// Minimum modularity gain for a move to count.
    pub tolerance: f64,
    /// Record the modularity of the working partition after every accepted
    /// move (recomputed from scratch, so only for small graphs).
    pub trace: bool,
    /// Exchange passes tried (each in a fresh random order) before the
    /// refinement gives up.
    pub exchange_attempts: usize,
}

impl Default for LouvainConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            tolerance: 1e-12,
            trace: false,
            exchange_attempts: 32,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LouvainResult {
    pub partition: Partition,
    pub levels: usize,
    pub modularity_trace: Vec<f64>,
}

/// Louvain modularity optimization: local moves to the neighboring community
/// of largest gain until a full pass changes nothing, then contraction of the
/// communities into super-nodes, repeated until a level makes no move.
///
/// The aggregated result is then refined on the input graph, first by plain
/// node moves, then by an exchange pass that also takes losing moves and
/// keeps the best prefix of the sequence, and re-aggregated, until no stage
/// improves modularity.
pub fn louvain(g: &WeightedGraph, config: &LouvainConfig) -> LouvainResult {
    let n = g.node_count();
    let mut trace = Vec::new();
    if g.total_weight() <= 0.0 {
        return LouvainResult {
            partition: Partition::singletons(n),
            levels: 0,
            modularity_trace: trace,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut membership: Vec<usize> = (0..n).collect();
    let mut levels = 0;
    for _ in 0..MAX_ROUNDS {
        levels += aggregate_levels(g, &mut membership, config, &mut rng, &mut trace);
        let mut tracer = |assignment: &[usize]| {
            if config.trace {
                trace.push(modularity_of(g, assignment).expect("positive weight"));
            }
        };
        let (refined, moved) = move_nodes(
            g,
            membership.clone(),
            config.tolerance,
            &mut rng,
            &mut tracer,
        );
        if moved {
            membership = Partition::from_labels(refined).assignment().to_vec();
            continue;
        }
        let improved = (0..config.exchange_attempts).find_map(|_| {
            let (refined, improved) =
                exchange_pass(g, membership.clone(), config.tolerance, &mut rng);
            improved.then_some(refined)
        });
        let Some(refined) = improved else {
            break;
        };
        membership = Partition::from_labels(refined).assignment().to_vec();
        if config.trace {
            trace.push(modularity_of(g, &membership).expect("positive weight"));
        }
    }
    LouvainResult {
        partition: Partition::from_labels(membership),
        levels,
        modularity_trace: trace,
    }
}

const MAX_ROUNDS: usize = 32;

/// Runs the move-and-contract levels starting from the communities in
/// `membership` (dense ids), updating it in place. Returns the number of
/// levels that moved something.
fn aggregate_levels(
    g: &WeightedGraph,
    membership: &mut [usize],
    config: &LouvainConfig,
    rng: &mut ChaCha8Rng,
    trace: &mut Vec<f64>,
) -> usize {
    let groups = membership.iter().max().map_or(0, |m| m + 1);
    let mut level_graph = g.contract(membership, groups);
    let mut levels = 0;
    loop {
        let mut tracer = |level_assignment: &[usize]| {
            if config.trace {
                let composed: Vec<usize> =
                    membership.iter().map(|&m| level_assignment[m]).collect();
                trace.push(modularity_of(g, &composed).expect("positive weight"));
            }
        };
        let start = (0..level_graph.node_count()).collect();
        let (assignment, moved) =
            move_nodes(&level_graph, start, config.tolerance, rng, &mut tracer);
        if !moved {
            return levels;
        }
        levels += 1;
        let level_part = Partition::from_labels(assignment);
        for m in membership.iter_mut() {
            *m = level_part.community_of(*m);
        }
        if level_part.community_count() == level_graph.node_count() {
            return levels;
        }
        level_graph = level_graph.contract(level_part.assignment(), level_part.community_count());
    }
}

fn move_nodes(
    g: &WeightedGraph,
    mut comm: Vec<usize>,
    tolerance: f64,
    rng: &mut ChaCha8Rng,
    on_move: &mut impl FnMut(&[usize]),
) -> (Vec<usize>, bool) {
    let n = g.node_count();
    let w = g.total_weight();
    let two_w = 2.0 * w;
    let mut tot = vec![0.0; n];
    for u in 0..n {
        tot[comm[u]] += g.strength(u);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut link = vec![0.0f64; n];
    let mut seen = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut any_move = false;
    loop {
        let mut moved = false;
        for &u in &order {
            let current = comm[u];
            let k = g.strength(u);
            for (v, wt) in g.neighbors(u) {
                let c = comm[v];
                if !seen[c] {
                    seen[c] = true;
                    touched.push(c);
                }
                link[c] += wt;
            }
            tot[current] -= k;
            let gain = |c: usize| link[c] - tot[c] * k / two_w;
            let stay = gain(current);
            let mut best = current;
            let mut best_gain = stay;
            for &c in &touched {
                let g_c = gain(c);
                if g_c > best_gain {
                    best = c;
                    best_gain = g_c;
                }
            }
            if best != current && (best_gain - stay) / w <= tolerance {
                best = current;
            }
            tot[best] += k;
            comm[u] = best;
            for c in touched.drain(..) {
                link[c] = 0.0;
                seen[c] = false;
            }
            if best != current {
                moved = true;
                any_move = true;
                on_move(&comm);
            }
        }
        if !moved {
            break;
        }
    }
    (comm, any_move)
}

/// One Kernighan-Lin style pass: every node, in seeded order, is moved to
/// its best other community (a neighboring one or a fresh empty one)
/// whatever the gain, and the sequence is rolled back to its best prefix.
/// Returns whether modularity improved.
fn exchange_pass(
    g: &WeightedGraph,
    mut comm: Vec<usize>,
    tolerance: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, bool) {
    let n = g.node_count();
    let w = g.total_weight();
    let two_w = 2.0 * w;
    let mut tot = vec![0.0; n];
    let mut members = vec![0usize; n];
    for u in 0..n {
        tot[comm[u]] += g.strength(u);
        members[comm[u]] += 1;
    }
    let mut empty: Vec<usize> = (0..n).rev().filter(|&c| members[c] == 0).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut link = vec![0.0f64; n];
    let mut seen = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut log: Vec<(usize, usize)> = Vec::new();
    let (mut q, mut best_q, mut best_len) = (0.0, 0.0, 0);
    for &u in &order {
        let current = comm[u];
        let k = g.strength(u);
        for (v, wt) in g.neighbors(u) {
            let c = comm[v];
            if !seen[c] {
                seen[c] = true;
                touched.push(c);
            }
            link[c] += wt;
        }
        tot[current] -= k;
        members[current] -= 1;
        let gain = |c: usize| link[c] - tot[c] * k / two_w;
        let stay = gain(current);
        let mut target: Option<(usize, f64)> = None;
        for &c in &touched {
            if c != current && target.is_none_or(|(_, b)| gain(c) > b) {
                target = Some((c, gain(c)));
            }
        }
        // a fresh community has no link and no strength: gain 0
        if members[current] > 0 && target.is_none_or(|(_, b)| 0.0 > b) {
            target = empty.last().map(|&c| (c, 0.0));
        }
        let dest = target.map_or(current, |(c, _)| c);
        if let Some((_, g_c)) = target {
            q += (g_c - stay) / w;
            log.push((u, current));
            if empty.last() == Some(&dest) {
                empty.pop();
            }
            if members[current] == 0 {
                empty.push(current);
            }
        }
        tot[dest] += k;
        members[dest] += 1;
        comm[u] = dest;
        for c in touched.drain(..) {
            link[c] = 0.0;
            seen[c] = false;
        }
        if q > best_q + tolerance {
            best_q = q;
            best_len = log.len();
        }
    }
    for &(u, from) in log[best_len..].iter().rev() {
        comm[u] = from;
    }
    (comm, best_len > 0)
}
