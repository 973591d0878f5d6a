//! Problem instance representation: level graph + per-level partial orders.
//!
//! A constrained level graph consists of a directed graph, an exact rational
//! level (y-coordinate) per vertex with every edge pointing strictly upward,
//! and, per level, a set of ordered pairs `u ≺ v` whose transitive closure
//! must be respected by the left-to-right vertex order of any drawing.
//!
//! Vertex ids are opaque strings externally and dense `usize` indices
//! internally; the instance owns the symbol table for round-tripping.

use crate::level::Level;
use std::collections::{BTreeMap, HashMap, HashSet};

/// Dense internal vertex index.
pub type V = usize;
/// Dense internal edge index (into `ConstrainedLevelGraph::edges`).
pub type E = usize;

/// A constrained level graph (the problem instance).
#[derive(Clone, Debug)]
pub struct ConstrainedLevelGraph {
    names: Vec<String>,
    index: HashMap<String, V>,
    levels: Vec<Level>,
    edges: Vec<(V, V)>,
    /// Per level: the raw constraint pairs `(u, v)` meaning `u ≺ v`.
    constraints: BTreeMap<Level, Vec<(V, V)>>,
}

/// One violated instance invariant, with a human-readable witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation(pub String);

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Errors from instance construction and parsing.
#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("semantic error: {0}")]
    Semantic(String),
}

impl ConstrainedLevelGraph {
    /// Builds an instance from parts, checking all invariants.
    pub fn build(
        vertices: Vec<(String, Level)>,
        edges: Vec<(String, String)>,
        constraints: Vec<(Level, Vec<(String, String)>)>,
    ) -> Result<Self, ParseError> {
        let mut names = Vec::with_capacity(vertices.len());
        let mut levels = Vec::with_capacity(vertices.len());
        let mut index = HashMap::new();
        for (name, level) in vertices {
            if index.insert(name.clone(), names.len()).is_some() {
                return Err(ParseError::Semantic(format!(
                    "duplicate vertex id {name:?}"
                )));
            }
            names.push(name);
            levels.push(level);
        }
        let look = |name: &str| -> Result<V, ParseError> {
            index
                .get(name)
                .copied()
                .ok_or_else(|| ParseError::Semantic(format!("unknown vertex id {name:?}")))
        };
        let mut e = Vec::with_capacity(edges.len());
        let mut seen_edges = HashSet::new();
        for (t, h) in &edges {
            let (t, h) = (look(t)?, look(h)?);
            if levels[t] >= levels[h] {
                return Err(ParseError::Semantic(format!(
                    "edge ({}, {}) does not go strictly upward: level {} >= level {}",
                    names[t], names[h], levels[t], levels[h]
                )));
            }
            if !seen_edges.insert((t, h)) {
                return Err(ParseError::Semantic(format!(
                    "parallel input edge ({}, {})",
                    names[t], names[h]
                )));
            }
            e.push((t, h));
        }
        let mut cons: BTreeMap<Level, Vec<(V, V)>> = BTreeMap::new();
        for (level, pairs) in constraints {
            for (u, w) in pairs {
                let (u, w) = (look(&u)?, look(&w)?);
                if levels[u] != level || levels[w] != level {
                    return Err(ParseError::Semantic(format!(
                        "constraint {} ≺ {} does not relate two vertices of level {}",
                        names[u], names[w], level
                    )));
                }
                cons.entry(level).or_default().push((u, w));
            }
        }
        let g = ConstrainedLevelGraph {
            names,
            index,
            levels,
            edges: e,
            constraints: cons,
        };
        if let Some(v) = g.validate().into_iter().next() {
            return Err(ParseError::Semantic(v.0));
        }
        Ok(g)
    }

    /// Number of vertices.
    pub fn n(&self) -> usize {
        self.names.len()
    }

    /// The directed edges as `(tail, head)` index pairs.
    pub fn edges(&self) -> &[(V, V)] {
        &self.edges
    }

    /// The level of vertex `v`.
    pub fn level(&self, v: V) -> Level {
        self.levels[v]
    }

    /// The external name of vertex `v`.
    pub fn name(&self, v: V) -> &str {
        &self.names[v]
    }

    /// Looks up a vertex by external name.
    pub fn vertex(&self, name: &str) -> Option<V> {
        self.index.get(name).copied()
    }

    /// Raw constraint pairs per level.
    pub fn constraints(&self) -> &BTreeMap<Level, Vec<(V, V)>> {
        &self.constraints
    }

    /// All distinct occupied levels, ascending.
    pub fn occupied_levels(&self) -> Vec<Level> {
        let mut ls: Vec<Level> = self.levels.clone();
        ls.sort();
        ls.dedup();
        ls
    }

    /// Vertices grouped by level, ascending.
    pub fn vertices_by_level(&self) -> BTreeMap<Level, Vec<V>> {
        let mut m: BTreeMap<Level, Vec<V>> = BTreeMap::new();
        for v in 0..self.n() {
            m.entry(self.levels[v]).or_default().push(v);
        }
        m
    }

    /// Undirected neighbor lists.
    pub fn neighbors(&self) -> Vec<Vec<V>> {
        let mut adj = vec![Vec::new(); self.n()];
        for &(t, h) in &self.edges {
            adj[t].push(h);
            adj[h].push(t);
        }
        adj
    }

    /// Degree of every vertex (undirected).
    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0usize; self.n()];
        for &(t, h) in &self.edges {
            d[t] += 1;
            d[h] += 1;
        }
        d
    }

    /// The transitive closure of a level's constraints as a pair set.
    /// Returns `None` if the closure is cyclic (not a partial order).
    pub fn constraint_closure(&self, level: Level) -> Option<HashSet<(V, V)>> {
        let pairs = match self.constraints.get(&level) {
            Some(p) => p.clone(),
            None => return Some(HashSet::new()),
        };
        transitive_closure(&pairs)
    }

    /// Checks all instance invariants, returning every violation found.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for &(t, h) in &self.edges {
            if self.levels[t] >= self.levels[h] {
                out.push(Violation(format!(
                    "edge ({}, {}) does not go strictly upward",
                    self.names[t], self.names[h]
                )));
            }
        }
        for (level, pairs) in &self.constraints {
            for &(u, w) in pairs {
                if self.levels[u] != *level || self.levels[w] != *level {
                    out.push(Violation(format!(
                        "constraint {} ≺ {} relates vertices not both on level {}",
                        self.names[u], self.names[w], level
                    )));
                }
                if u == w {
                    out.push(Violation(format!(
                        "reflexive constraint {} ≺ {}",
                        self.names[u], self.names[u]
                    )));
                }
            }
            if transitive_closure(pairs).is_none() {
                out.push(Violation(format!(
                    "constraints on level {level} are cyclic (not a partial order)"
                )));
            }
        }
        out
    }

    /// Remaps levels to integer ranks `1..h` preserving relative order.
    /// Idempotent; constraints are carried over.
    pub fn normalize_levels(&self) -> ConstrainedLevelGraph {
        let occupied = self.occupied_levels();
        let rank: HashMap<Level, Level> = occupied
            .iter()
            .enumerate()
            .map(|(i, l)| (*l, Level::int(i as i64 + 1)))
            .collect();
        ConstrainedLevelGraph {
            names: self.names.clone(),
            index: self.index.clone(),
            levels: self.levels.iter().map(|l| rank[l]).collect(),
            edges: self.edges.clone(),
            constraints: self
                .constraints
                .iter()
                .map(|(l, p)| (rank[l], p.clone()))
                .collect(),
        }
    }

    /// Subdivides every edge on each occupied level it passes through, so
    /// that every edge of the result spans two consecutive occupied levels.
    /// Subdivision vertices carry no constraints. The map records, per
    /// original edge index, the chain of subdivision vertices (bottom-up);
    /// an already-proper edge maps to an empty chain.
    pub fn properize(&self) -> (ConstrainedLevelGraph, Vec<Vec<V>>) {
        let occupied = self.occupied_levels();
        let mut g = self.clone();
        let mut map = Vec::with_capacity(self.edges.len());
        let mut new_edges = Vec::new();
        for (ei, &(t, h)) in self.edges.iter().enumerate() {
            let between: Vec<Level> = occupied
                .iter()
                .copied()
                .filter(|l| *l > self.levels[t] && *l < self.levels[h])
                .collect();
            let mut chain = Vec::with_capacity(between.len());
            let mut prev = t;
            for level in between {
                let name = format!("__sub_{ei}_{}", chain.len());
                debug_assert!(!g.index.contains_key(&name));
                let v = g.names.len();
                g.index.insert(name.clone(), v);
                g.names.push(name);
                g.levels.push(level);
                new_edges.push((prev, v));
                chain.push(v);
                prev = v;
            }
            new_edges.push((prev, h));
            map.push(chain);
        }
        g.edges = new_edges;
        (g, map)
    }
}

/// Transitive closure of a relation given as pairs; `None` if cyclic.
pub fn transitive_closure(pairs: &[(V, V)]) -> Option<HashSet<(V, V)>> {
    let mut closure: HashSet<(V, V)> = pairs.iter().copied().collect();
    loop {
        let mut added = Vec::new();
        for &(a, b) in &closure {
            for &(c, d) in &closure {
                if b == c && !closure.contains(&(a, d)) {
                    added.push((a, d));
                }
            }
        }
        if added.is_empty() {
            break;
        }
        closure.extend(added);
    }
    if closure.iter().any(|&(a, b)| a == b) {
        None
    } else {
        Some(closure)
    }
}
