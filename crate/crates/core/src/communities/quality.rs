//! Partition quality functions.

use super::{CommunityError, Partition};
use crate::graph::WeightedGraph;

pub(crate) fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

fn community_bound(assignment: &[usize]) -> usize {
    assignment.iter().max().map_or(0, |m| m + 1)
}

/// Newman modularity `Σ_c [in_c / W − (tot_c / 2W)²]`, where `in_c` is the
/// weight inside community `c` and `tot_c` the summed strength of its nodes.
pub fn modularity(g: &WeightedGraph, part: &Partition) -> Result<f64, CommunityError> {
    part.check_covers(g)?;
    modularity_of(g, part.assignment())
}

pub(crate) fn modularity_of(
    g: &WeightedGraph,
    assignment: &[usize],
) -> Result<f64, CommunityError> {
    let w = g.total_weight();
    if w <= 0.0 {
        return Err(CommunityError::ZeroWeight);
    }
    let k = community_bound(assignment);
    let mut inside = vec![0.0; k];
    let mut tot = vec![0.0; k];
    for u in 0..g.node_count() {
        let c = assignment[u];
        tot[c] += g.strength(u);
        inside[c] += g.self_loop(u);
        for (v, wt) in g.neighbors(u) {
            if u < v && assignment[v] == c {
                inside[c] += wt;
            }
        }
    }
    Ok(inside
        .iter()
        .zip(&tot)
        .map(|(i, t)| i / w - (t / (2.0 * w)).powi(2))
        .sum())
}

/// Two-level map equation (bits per step) for an undirected random walk
/// without teleportation, visit rates proportional to node strength.
pub fn map_equation(g: &WeightedGraph, part: &Partition) -> Result<f64, CommunityError> {
    part.check_covers(g)?;
    map_equation_of(g, part.assignment())
}

pub(crate) fn map_equation_of(
    g: &WeightedGraph,
    assignment: &[usize],
) -> Result<f64, CommunityError> {
    let w2 = 2.0 * g.total_weight();
    if w2 <= 0.0 {
        return Err(CommunityError::ZeroWeight);
    }
    let k = community_bound(assignment);
    let mut exit = vec![0.0; k];
    let mut flow = vec![0.0; k];
    let mut node_terms = 0.0;
    for u in 0..g.node_count() {
        let c = assignment[u];
        let p = g.strength(u) / w2;
        flow[c] += p;
        node_terms += plogp(p);
        for (v, wt) in g.neighbors(u) {
            if assignment[v] != c {
                exit[c] += wt / w2;
            }
        }
    }
    let total_exit: f64 = exit.iter().sum();
    let exit_terms: f64 = exit.iter().map(|&q| plogp(q)).sum();
    let module_terms: f64 = exit.iter().zip(&flow).map(|(q, p)| plogp(q + p)).sum();
    Ok((plogp(total_exit) - 2.0 * exit_terms - node_terms + module_terms).max(0.0))
}
