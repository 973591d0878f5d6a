//! Minimum vertex cover, vertex classification relative to a cover, and the
//! structural bounds the pipeline relies on.
//!
//! The cover is computed on the underlying undirected graph by a bounded
//! search tree with degree-1 and high-degree reduction rules (classic
//! branch-and-bound; exponential only in the optimum size, which stays tiny
//! at desk scale). The pipeline also accepts a user-supplied cover.

use crate::model::{ConstrainedLevelGraph, Violation, V};
use std::collections::{BTreeSet, HashMap, HashSet};

/// Partition of `V \ C` into the structural categories used by the solver.
#[derive(Clone, Debug)]
pub struct Classification {
    /// The cover, sorted.
    pub cover: Vec<V>,
    /// Degree-0 vertices.
    pub isolated: Vec<V>,
    /// Degree-1 vertices with their unique cover neighbor.
    pub leaves: Vec<(V, V)>,
    /// Degree-2 source/sink vertices with their cover pair (sorted) and a
    /// `top` flag: `true` iff the ear lies strictly above both neighbors.
    pub ears: Vec<(V, (V, V), bool)>,
    /// Degree-2 non-ear vertices with their cover pair `(lower, upper)`.
    pub transitions: Vec<(V, (V, V))>,
    /// Degree-≥3 vertices outside the cover.
    pub high: Vec<V>,
}

impl Classification {
    pub fn k(&self) -> usize {
        self.cover.len()
    }

    /// Ears grouped per (sorted) cover pair.
    pub fn ears_by_pair(&self) -> HashMap<(V, V), Vec<(V, bool)>> {
        let mut m: HashMap<(V, V), Vec<(V, bool)>> = HashMap::new();
        for &(v, pair, top) in &self.ears {
            m.entry(pair).or_default().push((v, top));
        }
        m
    }

    /// Transitions grouped per cover pair `(lower, upper)`.
    pub fn transitions_by_pair(&self) -> HashMap<(V, V), Vec<V>> {
        let mut m: HashMap<(V, V), Vec<V>> = HashMap::new();
        for &(v, pair) in &self.transitions {
            m.entry(pair).or_default().push(v);
        }
        m
    }

    /// Leaves grouped per cover neighbor.
    pub fn leaves_by_cover(&self) -> HashMap<V, Vec<V>> {
        let mut m: HashMap<V, Vec<V>> = HashMap::new();
        for &(v, c) in &self.leaves {
            m.entry(c).or_default().push(v);
        }
        m
    }
}

/// Computes a minimum vertex cover of the underlying undirected graph.
/// Deterministic for a fixed instance (no randomness; ties broken by vertex
/// index), though not guaranteed lexicographically least.
pub fn min_vertex_cover(g: &ConstrainedLevelGraph) -> HashSet<V> {
    let mut adj: Vec<BTreeSet<V>> = vec![BTreeSet::new(); g.n()];
    for &(t, h) in g.edges() {
        adj[t].insert(h);
        adj[h].insert(t);
    }
    // Greedy upper bound: repeatedly take the max-degree vertex.
    let mut work = adj.clone();
    let mut greedy: HashSet<V> = HashSet::new();
    loop {
        let v = (0..work.len()).max_by_key(|&v| work[v].len());
        match v {
            Some(v) if !work[v].is_empty() => {
                greedy.insert(v);
                let ns: Vec<V> = work[v].iter().copied().collect();
                for n in ns {
                    work[n].remove(&v);
                }
                work[v].clear();
            }
            _ => break,
        }
    }
    let mut best: HashSet<V> = greedy;
    let mut chosen: Vec<V> = Vec::new();
    branch(&mut adj, &mut chosen, &mut best);
    best
}

fn branch(adj: &mut Vec<BTreeSet<V>>, chosen: &mut Vec<V>, best: &mut HashSet<V>) {
    if chosen.len() >= best.len() {
        return;
    }
    // Reduction: take the neighbor of any degree-1 vertex.
    if let Some(v) = (0..adj.len()).find(|&v| adj[v].len() == 1) {
        let u = *adj[v].iter().next().unwrap();
        let removed = take_vertex(adj, u);
        chosen.push(u);
        branch(adj, chosen, best);
        chosen.pop();
        untake_vertex(adj, u, removed);
        return;
    }
    // Branch on a maximum-degree vertex.
    let v = match (0..adj.len()).filter(|&v| !adj[v].is_empty()).max_by_key(|&v| adj[v].len()) {
        Some(v) => v,
        None => {
            // No edges left: chosen is a cover.
            if chosen.len() < best.len() {
                *best = chosen.iter().copied().collect();
            }
            return;
        }
    };
    // Take v.
    let removed = take_vertex(adj, v);
    chosen.push(v);
    branch(adj, chosen, best);
    chosen.pop();
    untake_vertex(adj, v, removed);
    // Or take all of N(v).
    let ns: Vec<V> = adj[v].iter().copied().collect();
    if chosen.len() + ns.len() < best.len() {
        let mut undo = Vec::new();
        for &u in &ns {
            undo.push((u, take_vertex(adj, u)));
            chosen.push(u);
        }
        branch(adj, chosen, best);
        for &(u, ref removed) in undo.iter().rev() {
            untake_vertex(adj, u, removed.clone());
            chosen.pop();
        }
    }
}

fn take_vertex(adj: &mut [BTreeSet<V>], v: V) -> Vec<V> {
    let ns: Vec<V> = adj[v].iter().copied().collect();
    for &n in &ns {
        adj[n].remove(&v);
    }
    adj[v].clear();
    ns
}

fn untake_vertex(adj: &mut [BTreeSet<V>], v: V, removed: Vec<V>) {
    for &n in &removed {
        adj[n].insert(v);
        adj[v].insert(n);
    }
}

/// Classifies `V \ C` into isolated / leaves / ears / transitions / high
/// vertices. Errors with a witness edge if `C` is not a cover.
pub fn classify_vertices(
    g: &ConstrainedLevelGraph,
    cover: &HashSet<V>,
) -> Result<Classification, Violation> {
    for &(t, h) in g.edges() {
        if !cover.contains(&t) && !cover.contains(&h) {
            return Err(Violation(format!(
                "not a cover: edge ({}, {}) has no endpoint in C",
                g.name(t),
                g.name(h)
            )));
        }
    }
    let adj = g.neighbors();
    let mut c = Classification {
        cover: {
            let mut cv: Vec<V> = cover.iter().copied().collect();
            cv.sort();
            cv
        },
        isolated: Vec::new(),
        leaves: Vec::new(),
        ears: Vec::new(),
        transitions: Vec::new(),
        high: Vec::new(),
    };
    for v in 0..g.n() {
        if cover.contains(&v) {
            continue;
        }
        match adj[v].len() {
            0 => c.isolated.push(v),
            1 => c.leaves.push((v, adj[v][0])),
            2 => {
                let (a, b) = (adj[v][0], adj[v][1]);
                let pair = if a <= b { (a, b) } else { (b, a) };
                let lv = g.level(v);
                if lv > g.level(a) && lv > g.level(b) {
                    c.ears.push((v, pair, true));
                } else if lv < g.level(a) && lv < g.level(b) {
                    c.ears.push((v, pair, false));
                } else {
                    let (lo, hi) = if g.level(a) < g.level(b) { (a, b) } else { (b, a) };
                    c.transitions.push((v, (lo, hi)));
                }
            }
            _ => c.high.push(v),
        }
    }
    Ok(c)
}

/// Report of the `|V≥3(C)| ≤ 2k` structural bound (holds for planar
/// inputs; a violation implies non-planarity and lets the pipeline reject
/// early).
#[derive(Clone, Debug)]
pub struct StructuralReport {
    pub k: usize,
    pub high_count: usize,
    pub bound: usize,
    pub ok: bool,
}

pub fn check_structural_bounds(g: &ConstrainedLevelGraph, cover: &HashSet<V>) -> StructuralReport {
    let classification = classify_vertices(g, cover).expect("C must be a cover");
    let k = cover.len();
    StructuralReport {
        k,
        high_count: classification.high.len(),
        bound: 2 * k,
        ok: classification.high.len() <= 2 * k,
    }
}

/// Convenience used by tests: builds a level instance from a plain edge
/// list with all tails on level 1 and heads on level 2 (bipartite-style).
#[cfg(test)]
pub fn bipartite_instance(left: usize, right: usize, edges: &[(usize, usize)]) -> ConstrainedLevelGraph {
    use crate::level::Level;
    let mut vertices = Vec::new();
    for i in 0..left {
        vertices.push((format!("l{i}"), Level::int(1)));
    }
    for j in 0..right {
        vertices.push((format!("r{j}"), Level::int(2)));
    }
    let edges: Vec<(String, String)> = edges
        .iter()
        .map(|&(i, j)| (format!("l{i}"), format!("r{j}")))
        .collect();
    ConstrainedLevelGraph::build(vertices, edges, vec![]).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_instance;

    /// Instance C: a star with center c and three leaves.
    fn instance_c() -> ConstrainedLevelGraph {
        parse_instance(
            r#"{"vertices":[{"id":"c","level":2},{"id":"l1","level":1},
                            {"id":"l2","level":3},{"id":"l3","level":3}],
                "edges":[["l1","c"],["c","l2"],["c","l3"]],"constraints":[]}"#,
        )
        .unwrap()
    }

    /// Instance D: a single top ear v over the pair (c_a, c_b).
    fn instance_d() -> ConstrainedLevelGraph {
        parse_instance(
            r#"{"vertices":[{"id":"ca","level":1},{"id":"cb","level":3},
                            {"id":"v","level":4}],
                "edges":[["ca","v"],["cb","v"]],"constraints":[]}"#,
        )
        .unwrap()
    }

    #[test]
    fn star_cover_is_center() {
        let g = instance_c();
        let cover = min_vertex_cover(&g);
        assert_eq!(cover.len(), 1);
        assert!(cover.contains(&g.vertex("c").unwrap()));
    }

    #[test]
    fn four_cycle_cover_two() {
        // Cycle over two levels: l0-r0-l1-r1-l0.
        let g = bipartite_instance(2, 2, &[(0, 0), (1, 0), (1, 1), (0, 1)]);
        assert_eq!(min_vertex_cover(&g).len(), 2);
    }

    #[test]
    fn matching_instance_cover_two() {
        let g = parse_instance(
            r#"{"vertices":[{"id":"a1","level":1},{"id":"a2","level":1},
                            {"id":"b1","level":2},{"id":"b2","level":2}],
                "edges":[["a1","b1"],["a2","b2"]],"constraints":[]}"#,
        )
        .unwrap();
        let cover = min_vertex_cover(&g);
        assert_eq!(cover.len(), 2);
        // Exhaustive cross-check: no single vertex covers both edges.
        for v in 0..g.n() {
            let single: HashSet<V> = [v].into_iter().collect();
            assert!(classify_vertices(&g, &single).is_err());
        }
    }

    #[test]
    fn classify_star_and_ear() {
        let g = instance_c();
        let c: HashSet<V> = [g.vertex("c").unwrap()].into_iter().collect();
        let cl = classify_vertices(&g, &c).unwrap();
        assert_eq!(cl.leaves.len(), 3);
        assert!(cl.ears.is_empty() && cl.transitions.is_empty() && cl.high.is_empty());

        let g = instance_d();
        let c: HashSet<V> = [g.vertex("ca").unwrap(), g.vertex("cb").unwrap()]
            .into_iter()
            .collect();
        let cl = classify_vertices(&g, &c).unwrap();
        assert_eq!(cl.ears.len(), 1);
        let (v, _, top) = cl.ears[0];
        assert_eq!(v, g.vertex("v").unwrap());
        assert!(top);
    }

    #[test]
    fn classify_transition() {
        let g = parse_instance(
            r#"{"vertices":[{"id":"ca","level":1},{"id":"p","level":2},
                            {"id":"cb","level":3}],
                "edges":[["ca","p"],["p","cb"]],"constraints":[]}"#,
        )
        .unwrap();
        let c: HashSet<V> = [g.vertex("ca").unwrap(), g.vertex("cb").unwrap()]
            .into_iter()
            .collect();
        let cl = classify_vertices(&g, &c).unwrap();
        assert_eq!(cl.transitions.len(), 1);
    }

    #[test]
    fn structural_bounds() {
        // K_{2,3}, cover = the 2-side: the 3-side has degree 2, so it is
        // all ears/transitions and the high-degree class is empty.
        let g = bipartite_instance(2, 3, &[(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]);
        let c: HashSet<V> = [g.vertex("l0").unwrap(), g.vertex("l1").unwrap()]
            .into_iter()
            .collect();
        let r = check_structural_bounds(&g, &c);
        assert!(r.ok && r.high_count == 0);

        // K_{3,5} (non-planar), cover = the 3-side: 5 <= 6 still passes.
        let edges: Vec<(usize, usize)> = (0..3).flat_map(|i| (0..5).map(move |j| (i, j))).collect();
        let g = bipartite_instance(3, 5, &edges);
        let c: HashSet<V> = (0..3).map(|i| g.vertex(&format!("l{i}")).unwrap()).collect();
        let r = check_structural_bounds(&g, &c);
        assert!(r.ok && r.high_count == 5);

        // Deliberately wrong cover-size claim on a non-planar K_{2,5}-like
        // supergraph: take K_{3,5} but give only a size-2 "cover" — not a
        // cover at all, classify_vertices reports it.
        let c2: HashSet<V> = (0..2).map(|i| g.vertex(&format!("l{i}")).unwrap()).collect();
        assert!(classify_vertices(&g, &c2).is_err());

        // True violation requires non-planar input: K_{3,7} with the 3-side
        // as cover gives |V>=3| = 7 > 6 and the pipeline rejects early.
        let edges: Vec<(usize, usize)> = (0..3).flat_map(|i| (0..7).map(move |j| (i, j))).collect();
        let g = bipartite_instance(3, 7, &edges);
        let c: HashSet<V> = (0..3).map(|i| g.vertex(&format!("l{i}")).unwrap()).collect();
        let r = check_structural_bounds(&g, &c);
        assert!(!r.ok && r.high_count == 7);
    }

    #[test]
    fn classification_is_partition() {
        let g = instance_c();
        let c: HashSet<V> = [g.vertex("c").unwrap()].into_iter().collect();
        let cl = classify_vertices(&g, &c).unwrap();
        let mut all: Vec<V> = cl.cover.clone();
        all.extend(cl.isolated.iter());
        all.extend(cl.leaves.iter().map(|&(v, _)| v));
        all.extend(cl.ears.iter().map(|&(v, _, _)| v));
        all.extend(cl.transitions.iter().map(|&(v, _)| v));
        all.extend(cl.high.iter());
        all.sort();
        assert_eq!(all, (0..g.n()).collect::<Vec<_>>());
    }
}
