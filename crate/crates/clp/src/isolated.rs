//! Reinsertion of isolated vertices into a solved drawing.
//!
//! The solver strips degree-0 vertices up front: they never interact with
//! edges, so a drawing of the remaining graph extends to the full instance
//! by merging each isolated vertex into its level's left-to-right order,
//! respecting the per-level constraints. The merged order always exists
//! when the input drawing validates (the union of the drawn order and the
//! constraint closure is a partial order); a cycle therefore indicates a
//! corrupted input and is reported as an error rather than repaired.

use crate::embedding::{Item, LevelEmbedding, Row, Scene, VRef};
use crate::model::{ConstrainedLevelGraph, V};
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IsolatedError {
    /// The drawn order plus the constraints admit no linear extension.
    #[error("input embedding violates its own constraints at level {0}")]
    Cycle(String),
}

/// Merges every degree-0 vertex of `g` into `emb` (a drawing of the
/// non-isolated part). Placement is deterministic: a vertex with
/// constraint predecessors goes immediately after the last of them; one
/// with only successors goes immediately before the first; an
/// unconstrained vertex is appended at the end of its level.
pub fn insert_isolated(
    g: &ConstrainedLevelGraph,
    emb: &LevelEmbedding,
) -> Result<LevelEmbedding, IsolatedError> {
    let mut degree = vec![0usize; g.n()];
    for &(t, h) in g.edges() {
        degree[t] += 1;
        degree[h] += 1;
    }
    let isolated: Vec<V> = (0..g.n()).filter(|&v| degree[v] == 0).collect();
    if isolated.is_empty() {
        return Ok(emb.clone());
    }
    let mut scene = Scene::from_embedding(g, emb.clone());
    let mut levels: Vec<_> = isolated.iter().map(|&v| g.level(v)).collect();
    levels.sort();
    levels.dedup();
    for level in levels {
        let closure = g
            .constraint_closure(level)
            .ok_or_else(|| IsolatedError::Cycle(level.to_string()))?;
        let mut pending: Vec<V> = isolated
            .iter()
            .copied()
            .filter(|&v| g.level(v) == level)
            .collect();
        pending.sort();
        let ri = scene.ensure_row(level);
        // Insert in topological order among the pending vertices
        // themselves (ties by vertex id).
        let mut placed: HashSet<V> = HashSet::new();
        while !pending.is_empty() {
            let next = pending
                .iter()
                .copied()
                .find(|&v| {
                    !closure
                        .iter()
                        .any(|&(a, b)| b == v && pending.contains(&a) && !placed.contains(&a))
                })
                .ok_or_else(|| IsolatedError::Cycle(level.to_string()))?;
            pending.retain(|&v| v != next);
            placed.insert(next);
            let row = &scene.emb.rows[ri];
            let pos_of = |u: V| -> Option<usize> {
                row.items
                    .iter()
                    .position(|it| *it == Item::Vertex(VRef::Base(u)))
            };
            let last_pred = closure
                .iter()
                .filter(|&&(_, b)| b == next)
                .filter_map(|&(a, _)| pos_of(a))
                .max();
            let first_succ = closure
                .iter()
                .filter(|&&(a, _)| a == next)
                .filter_map(|&(_, b)| pos_of(b))
                .min();
            let pos = match (last_pred, first_succ) {
                (Some(p), Some(s)) if p >= s => {
                    return Err(IsolatedError::Cycle(level.to_string()))
                }
                (Some(p), _) => p + 1,
                (None, Some(s)) => s,
                (None, None) => row.items.len(),
            };
            scene.emb.rows[ri]
                .items
                .insert(pos, Item::Vertex(VRef::Base(next)));
        }
    }
    // Rows created for all-isolated levels start empty of tokens already;
    // drop any row that somehow ended up without items.
    scene.emb.rows.retain(|r: &Row| !r.items.is_empty());
    Ok(scene.emb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_instance;
    use crate::level::Level;
    use crate::validator::{check_embedding, CheckOptions};

    fn base_emb(_g: &ConstrainedLevelGraph, orders: &[(i64, &[V])]) -> LevelEmbedding {
        LevelEmbedding {
            rows: orders
                .iter()
                .map(|&(l, vs)| Row {
                    level: Level::int(l),
                    items: vs.iter().map(|&v| Item::Vertex(VRef::Base(v))).collect(),
                })
                .collect(),
            aug: Default::default(),
        }
    }

    #[test]
    fn constrained_isolated_goes_after_predecessor() {
        // a1, a2 drawn in that order; isolated x with a1 ≺ x.
        let g = parse_instance(
            r#"{"vertices":[{"id":"a1","level":1},{"id":"a2","level":1},
                            {"id":"x","level":1},{"id":"b","level":2}],
                "edges":[["a1","b"],["a2","b"]],
                "constraints":[{"level":1,"pairs":[["a1","x"]]}]}"#,
        )
        .unwrap();
        let emb = base_emb(&g, &[(1, &[0, 1]), (2, &[3])]);
        let out = insert_isolated(&g, &emb).unwrap();
        let row: Vec<Item> = out.rows[0].items.clone();
        assert_eq!(
            row,
            vec![
                Item::Vertex(VRef::Base(0)),
                Item::Vertex(VRef::Base(2)),
                Item::Vertex(VRef::Base(1)),
            ]
        );
        assert!(check_embedding(&g, &out, CheckOptions::default())
            .violations
            .is_empty());
    }

    #[test]
    fn no_isolated_is_identity() {
        let g = parse_instance(
            r#"{"vertices":[{"id":"a","level":1},{"id":"b","level":2}],
                "edges":[["a","b"]],"constraints":[]}"#,
        )
        .unwrap();
        let emb = base_emb(&g, &[(1, &[0]), (2, &[1])]);
        let out = insert_isolated(&g, &emb).unwrap();
        assert_eq!(out.rows.len(), emb.rows.len());
        assert_eq!(out.rows[0].items, emb.rows[0].items);
    }

    #[test]
    fn unconstrained_isolated_appends_at_level_end() {
        let g = parse_instance(
            r#"{"vertices":[{"id":"a1","level":1},{"id":"a2","level":1},
                            {"id":"x","level":1},{"id":"b","level":2}],
                "edges":[["a1","b"],["a2","b"]],"constraints":[]}"#,
        )
        .unwrap();
        let emb = base_emb(&g, &[(1, &[0, 1]), (2, &[3])]);
        let out = insert_isolated(&g, &emb).unwrap();
        assert_eq!(
            out.rows[0].items.last(),
            Some(&Item::Vertex(VRef::Base(2)))
        );
    }

    #[test]
    fn successor_only_goes_before_it_and_cycle_errors() {
        let g = parse_instance(
            r#"{"vertices":[{"id":"a1","level":1},{"id":"a2","level":1},
                            {"id":"x","level":1},{"id":"b","level":2}],
                "edges":[["a1","b"],["a2","b"]],
                "constraints":[{"level":1,"pairs":[["x","a1"]]}]}"#,
        )
        .unwrap();
        let emb = base_emb(&g, &[(1, &[0, 1]), (2, &[3])]);
        let out = insert_isolated(&g, &emb).unwrap();
        assert_eq!(out.rows[0].items[0], Item::Vertex(VRef::Base(2)));

        // x after a2 but before a1 contradicts the drawn order (a1, a2).
        let g2 = parse_instance(
            r#"{"vertices":[{"id":"a1","level":1},{"id":"a2","level":1},
                            {"id":"x","level":1},{"id":"b","level":2}],
                "edges":[["a1","b"],["a2","b"]],
                "constraints":[{"level":1,"pairs":[["a2","x"],["x","a1"]]}]}"#,
        )
        .unwrap();
        assert!(insert_isolated(&g2, &emb).is_err());
    }

    #[test]
    fn all_isolated_level_creates_row() {
        let g = parse_instance(
            r#"{"vertices":[{"id":"a","level":1},{"id":"b","level":2},
                            {"id":"x","level":3}],
                "edges":[["a","b"]],"constraints":[]}"#,
        )
        .unwrap();
        let emb = base_emb(&g, &[(1, &[0]), (2, &[1])]);
        let out = insert_isolated(&g, &emb).unwrap();
        assert_eq!(out.rows.len(), 3);
        assert!(check_embedding(&g, &out, CheckOptions::default())
            .violations
            .is_empty());
    }
}
