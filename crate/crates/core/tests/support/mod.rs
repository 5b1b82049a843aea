//! Brute-force reference implementations used as test oracles. Everything
//! here is written straight from the defining formulas and shares no code
//! with the library beyond its data types.
#![allow(dead_code)]

use pixcomm::{LabImage, Labeling, WeightedGraph};

/// Dense symmetric weight matrix (diagonal holds self-loop weight).
pub fn dense(g: &WeightedGraph) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut a = vec![vec![0.0; n]; n];
    for (u, v, w) in g.edges() {
        a[u][v] += w;
        a[v][u] += w;
    }
    for (u, row) in a.iter_mut().enumerate() {
        row[u] += g.self_loop(u);
    }
    a
}

/// All set partitions of `0..n` as restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, n: usize, cur: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for c in 0..=max {
            cur.push(c);
            rec(i + 1, n, cur, if c == max { max + 1 } else { max }, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
    } else {
        rec(0, n, &mut Vec::new(), 0, &mut out);
    }
    out
}

/// `Q = 1/2W · Σ_ij [A_ij − s_i s_j / 2W] δ(c_i, c_j)` with `A_ii = 2·loop`.
pub fn modularity(g: &WeightedGraph, assign: &[usize]) -> f64 {
    let a = dense(g);
    let n = a.len();
    let mut adj = a.clone();
    for (i, row) in adj.iter_mut().enumerate() {
        row[i] *= 2.0;
    }
    let s: Vec<f64> = adj.iter().map(|r| r.iter().sum()).collect();
    let two_w: f64 = s.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if assign[i] == assign[j] {
                q += adj[i][j] - s[i] * s[j] / two_w;
            }
        }
    }
    q / two_w
}

fn entropy(probs: &[f64]) -> f64 {
    let total: f64 = probs.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| {
            let x = p / total;
            -x * x.log2()
        })
        .sum()
}

/// Two-level map equation straight from its entropy form.
pub fn map_equation(g: &WeightedGraph, assign: &[usize]) -> f64 {
    let a = dense(g);
    let n = a.len();
    let s: Vec<f64> = (0..n).map(|i| a[i].iter().sum::<f64>() + a[i][i]).collect();
    let two_w: f64 = s.iter().sum();
    let modules = assign.iter().max().map_or(0, |m| m + 1);
    let mut q = vec![0.0; modules];
    for i in 0..n {
        for j in 0..n {
            if i != j && assign[i] != assign[j] {
                q[assign[i]] += a[i][j] / two_w;
            }
        }
    }
    let q_total: f64 = q.iter().sum();
    let mut l = q_total * entropy(&q);
    for (m, &exit) in q.iter().enumerate() {
        let mut parts = vec![exit];
        parts.extend((0..n).filter(|&i| assign[i] == m).map(|i| s[i] / two_w));
        let weight: f64 = parts.iter().sum();
        l += weight * entropy(&parts);
    }
    l
}

pub fn best_modularity(g: &WeightedGraph) -> f64 {
    set_partitions(g.node_count())
        .iter()
        .map(|p| modularity(g, p))
        .fold(f64::MIN, f64::max)
}

pub fn best_map_equation(g: &WeightedGraph) -> f64 {
    set_partitions(g.node_count())
        .iter()
        .map(|p| map_equation(g, p))
        .fold(f64::MAX, f64::min)
}

/// Every node's label carries at least as much incident weight as any other
/// label around it.
pub fn is_label_fixed_point(g: &WeightedGraph, labels: &[usize], weighted: bool) -> bool {
    let a = dense(g);
    let n = a.len();
    (0..n).all(|u| {
        let mut per_label = std::collections::HashMap::new();
        for v in 0..n {
            if v != u && a[u][v] > 0.0 {
                *per_label.entry(labels[v]).or_insert(0.0) += if weighted { a[u][v] } else { 1.0 };
            }
        }
        let own = per_label.get(&labels[u]).copied().unwrap_or(0.0);
        per_label.values().all(|&w| own >= w - 1e-9)
    })
}

pub fn is_boundary(l: &Labeling, x: usize, y: usize) -> bool {
    let id = l.get(x, y);
    (x + 1 < l.width() && l.get(x + 1, y) != id) || (y + 1 < l.height() && l.get(x, y + 1) != id)
}

pub fn recall(gt: &Labeling, seg: &Labeling, tol: usize) -> f64 {
    let (w, h) = (gt.width(), gt.height());
    let (mut tp, mut fneg) = (0, 0);
    for y in 0..h {
        for x in 0..w {
            if !is_boundary(gt, x, y) {
                continue;
            }
            let mut hit = false;
            for yy in 0..h {
                for xx in 0..w {
                    let cheb = x.abs_diff(xx).max(y.abs_diff(yy));
                    if cheb <= tol && is_boundary(seg, xx, yy) {
                        hit = true;
                    }
                }
            }
            if hit {
                tp += 1
            } else {
                fneg += 1
            }
        }
    }
    if tp + fneg == 0 {
        1.0
    } else {
        tp as f64 / (tp + fneg) as f64
    }
}

fn segments(l: &Labeling) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); l.region_count()];
    for (p, &id) in l.ids().iter().enumerate() {
        out[id].push(p);
    }
    out
}

pub fn undersegmentation(gt: &Labeling, seg: &Labeling) -> f64 {
    let mut total = 0usize;
    for g in segments(gt) {
        for s in segments(seg) {
            let inter = s.iter().filter(|p| g.contains(p)).count();
            if inter > 0 {
                let outside = s.len() - inter;
                total += inter.min(outside);
            }
        }
    }
    total as f64 / gt.len() as f64
}

pub fn ue_levin(gt: &Labeling, seg: &Labeling) -> f64 {
    let gts = segments(gt);
    let segs = segments(seg);
    let mut total = 0.0;
    for g in &gts {
        let covering: usize = segs
            .iter()
            .filter(|s| s.iter().any(|p| g.contains(p)))
            .map(|s| s.len())
            .sum();
        total += (covering as f64 - g.len() as f64) / g.len() as f64;
    }
    total / gts.len() as f64
}

pub fn explained_variation(img: &LabImage, seg: &Labeling) -> f64 {
    let px = img.pixels();
    let mean_of = |idx: &[usize]| {
        let mut m = [0.0; 3];
        for &p in idx {
            for c in 0..3 {
                m[c] += px[p][c];
            }
        }
        m.map(|v| v / idx.len() as f64)
    };
    let all: Vec<usize> = (0..px.len()).collect();
    let mu = mean_of(&all);
    let dist2 =
        |a: [f64; 3], b: [f64; 3]| (0..3).map(|c| (a[c] - b[c]) * (a[c] - b[c])).sum::<f64>();
    let den: f64 = px.iter().map(|&p| dist2(p, mu)).sum();
    if den == 0.0 {
        return 1.0;
    }
    let num: f64 = segments(seg)
        .iter()
        .map(|s| s.len() as f64 * dist2(mean_of(s), mu))
        .sum();
    num / den
}

/// Perimeter counted as `4A − 2·(4-adjacent pairs inside the region)`.
pub fn compactness(seg: &Labeling) -> f64 {
    let w = seg.width();
    let mut total = 0.0;
    for s in segments(seg) {
        let mut inner_pairs = 0;
        for &p in &s {
            for &q in &s {
                let (px, py, qx, qy) = (p % w, p / w, q % w, q / w);
                if p < q && px.abs_diff(qx) + py.abs_diff(qy) == 1 {
                    inner_pairs += 1;
                }
            }
        }
        let area = s.len() as f64;
        let perimeter = (4 * s.len() - 2 * inner_pairs) as f64;
        total += area * 4.0 * std::f64::consts::PI * area / (perimeter * perimeter);
    }
    total / seg.len() as f64
}

/// True if every region of `l` is 4-connected.
pub fn regions_connected(l: &Labeling) -> bool {
    let (w, h) = (l.width(), l.height());
    segments(l).iter().all(|s| {
        let mut seen = vec![false; w * h];
        let mut stack = vec![s[0]];
        seen[s[0]] = true;
        let mut count = 0;
        while let Some(p) = stack.pop() {
            count += 1;
            let (x, y) = (p % w, p / w);
            let mut nb = Vec::new();
            if x > 0 {
                nb.push(p - 1);
            }
            if x + 1 < w {
                nb.push(p + 1);
            }
            if y > 0 {
                nb.push(p - w);
            }
            if y + 1 < h {
                nb.push(p + w);
            }
            for q in nb {
                if !seen[q] && l.ids()[q] == l.ids()[p] {
                    seen[q] = true;
                    stack.push(q);
                }
            }
        }
        count == s.len()
    })
}

/// Edges of an unfiltered r-pixel grid, by testing every pixel pair.
pub fn enumerate_grid_edges(w: usize, h: usize, r: usize) -> usize {
    let mut count = 0;
    for p in 0..w * h {
        for q in p + 1..w * h {
            let (px, py, qx, qy) = (p % w, p / w, q % w, q / w);
            let same_row = py == qy && px.abs_diff(qx) <= r;
            let same_col = px == qx && py.abs_diff(qy) <= r;
            if same_row || same_col {
                count += 1;
            }
        }
    }
    count
}
