//! Compatible edge orderings: serialize an embedding into a left-to-right
//! edge order and rebuild the embedding from it.
//!
//! Extraction peels the drawing from the left: an edge is *left-visible*
//! when, on every row its curve touches, its item (endpoint vertex or
//! passage token) is the leftmost item still carrying a live edge.
//! Peeling always removes a left-visible edge; among several, the one with
//! the topmost lower endpoint wins, ties broken by edge id. The removal
//! sequence is the order.
//!
//! Reconstruction replays the order in reverse, inserting each edge as far
//! left as possible on each row it spans. An insertion is realizable only
//! if every already-placed endpoint sits at position 0 of its row; a
//! permutation violating that yields nothing. Reconstruction is how the
//! candidate enumeration turns abstract permutations into drawings, and
//! the round trip (extract, then rebuild) is the identity on valid
//! embeddings without isolated vertices.

use crate::embedding::{ERef, Item, LevelEmbedding, Scene, VRef};
use crate::model::ConstrainedLevelGraph;
use std::collections::{HashMap, HashSet};

/// Extracts the canonical compatible order of all non-horizontal edges
/// present in the embedding. Returns `None` only if peeling gets stuck,
/// which cannot happen on a crossing-free embedding.
pub fn compatible_order_of(scene: &Scene) -> Option<Vec<ERef>> {
    let mut remaining: HashSet<ERef> = scene
        .present_nonhorizontal_edges()
        .into_iter()
        .filter(|&e| scene.edge_is_present(e))
        .collect();
    // Incidence of vertices to non-horizontal edges, for relevance.
    let mut incident: HashMap<VRef, Vec<ERef>> = HashMap::new();
    for &e in &remaining {
        let (t, h) = scene.endpoints(e);
        incident.entry(t).or_default().push(e);
        incident.entry(h).or_default().push(e);
    }
    let total = remaining.len();
    let mut order = Vec::with_capacity(total);
    while !remaining.is_empty() {
        let mut best: Option<(crate::level::Level, ERef)> = None;
        for &e in &remaining {
            if !left_visible(scene, e, &remaining, &incident) {
                continue;
            }
            let (lo, _) = scene.span(e);
            match best {
                Some((bl, be)) if (bl, std::cmp::Reverse(be)) >= (lo, std::cmp::Reverse(e)) => {}
                _ => best = Some((lo, e)),
            }
        }
        let (_, e) = best?;
        order.push(e);
        remaining.remove(&e);
    }
    Some(order)
}

/// Whether `e`'s item is the leftmost live item on every row in its span.
fn left_visible(
    scene: &Scene,
    e: ERef,
    remaining: &HashSet<ERef>,
    incident: &HashMap<VRef, Vec<ERef>>,
) -> bool {
    let (lo, hi) = scene.span(e);
    for (ri, row) in scene.emb.rows.iter().enumerate() {
        if row.level < lo || row.level > hi {
            continue;
        }
        let leftmost = row.items.iter().find(|item| match item {
            Item::Passage(pe) => remaining.contains(pe),
            Item::Vertex(v) => incident
                .get(v)
                .is_some_and(|es| es.iter().any(|ie| remaining.contains(ie))),
        });
        let mine = match scene.edge_pos_on_row(e, ri) {
            Some(p) => &scene.emb.rows[ri].items[p],
            None => return false,
        };
        match leftmost {
            Some(item) if item == mine => {}
            _ => return false,
        }
    }
    true
}

/// Inserts edge `e` as far left as possible: its endpoints and passage
/// tokens all land at position 0 of their rows (creating rows as needed).
/// Fails — without mutating the scene — when an already-placed endpoint is
/// not at position 0 of its row, or when `e` is horizontal.
pub fn insert_edge_leftmost(scene: &mut Scene, e: ERef) -> bool {
    if scene.is_horizontal(e) {
        return false;
    }
    let (t, h) = scene.endpoints(e);
    for v in [t, h] {
        if let Some((ri, pi)) = scene.emb.find_vertex(v) {
            if pi != 0 || scene.emb.rows[ri].level != scene.vlevel(v) {
                return false;
            }
        }
    }
    let (lo, hi) = scene.span(e);
    // Endpoint rows first (creation populates them with existing tokens).
    for v in [t, h] {
        let ri = scene.ensure_row(scene.vlevel(v));
        if scene.emb.find_vertex(v).is_none() {
            scene.emb.rows[ri].items.insert(0, Item::Vertex(v));
        }
    }
    for ri in scene.rows_strictly_between(lo, hi) {
        // A row created between a parallel strand's endpoints may already
        // hold a speculative token for this edge; leftmost wins.
        scene.emb.rows[ri].items.retain(|it| *it != Item::Passage(e));
        scene.emb.rows[ri].items.insert(0, Item::Passage(e));
    }
    true
}

/// Rebuilds the embedding encoded by `order` (a permutation of the
/// non-horizontal edges) over instance `g` with augmentation registry
/// `aug`. Returns `None` when the order is not realizable by leftmost
/// insertion.
pub fn embedding_from_order(
    g: &ConstrainedLevelGraph,
    aug: &crate::embedding::AugRegistry,
    order: &[ERef],
) -> Option<LevelEmbedding> {
    let mut scene = Scene::new(g);
    scene.emb.aug = aug.clone();
    for &e in order.iter().rev() {
        if !insert_edge_leftmost(&mut scene, e) {
            return None;
        }
    }
    Some(scene.emb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{rows_from_orders, Scene};
    use crate::io::parse_instance;
    use crate::level::Level;

    fn instance_a() -> ConstrainedLevelGraph {
        parse_instance(
            r#"{"vertices":[{"id":"a1","level":1},{"id":"a2","level":1},
                            {"id":"b1","level":2},{"id":"b2","level":2}],
                "edges":[["a1","b1"],["a2","b2"]],
                "constraints":[{"level":1,"pairs":[["a1","a2"]]},
                               {"level":2,"pairs":[["b1","b2"]]}]}"#,
        )
        .unwrap()
    }

    fn canonical_a(g: &ConstrainedLevelGraph) -> LevelEmbedding {
        rows_from_orders(
            g,
            &[
                (Level::int(1), crate::embedding::name_items(g, &["a1", "a2"])),
                (Level::int(2), crate::embedding::name_items(g, &["b1", "b2"])),
            ],
        )
    }

    #[test]
    fn instance_a_order_is_left_to_right() {
        let g = instance_a();
        let scene = Scene::from_embedding(&g, canonical_a(&g));
        let order = compatible_order_of(&scene).unwrap();
        assert_eq!(order, vec![ERef::Base(0), ERef::Base(1)]);
    }

    #[test]
    fn single_edge_order_is_identity() {
        let g = parse_instance(
            r#"{"vertices":[{"id":"u","level":1},{"id":"v","level":2}],
                "edges":[["u","v"]],"constraints":[]}"#,
        )
        .unwrap();
        let emb = rows_from_orders(
            &g,
            &[
                (Level::int(1), crate::embedding::name_items(&g, &["u"])),
                (Level::int(2), crate::embedding::name_items(&g, &["v"])),
            ],
        );
        let scene = Scene::from_embedding(&g, emb);
        assert_eq!(compatible_order_of(&scene).unwrap(), vec![ERef::Base(0)]);
    }

    /// Two nested top ears over the pair (u@1, w@2): the outer ear's left
    /// edge peels first.
    fn nested_ears() -> (ConstrainedLevelGraph, LevelEmbedding) {
        let g = parse_instance(
            r#"{"vertices":[{"id":"u","level":1},{"id":"w","level":2},
                            {"id":"vin","level":3},{"id":"vout","level":4}],
                "edges":[["u","vin"],["w","vin"],["u","vout"],["w","vout"]],
                "constraints":[]}"#,
        )
        .unwrap();
        let vx = |n: &str| Item::Vertex(VRef::Base(g.vertex(n).unwrap()));
        let tok = |i: usize| Item::Passage(ERef::Base(i));
        // Edge ids: 0=(u,vin) 1=(w,vin) 2=(u,vout) 3=(w,vout).
        let emb = rows_from_orders(
            &g,
            &[
                (Level::int(1), vec![vx("u")]),
                (Level::int(2), vec![tok(2), tok(0), vx("w")]),
                (Level::int(3), vec![tok(2), vx("vin"), tok(3)]),
                (Level::int(4), vec![vx("vout")]),
            ],
        );
        (g, emb)
    }

    #[test]
    fn nested_ears_peel_outer_left_edge_first() {
        let (g, emb) = nested_ears();
        let scene = Scene::from_embedding(&g, emb);
        let order = compatible_order_of(&scene).unwrap();
        assert_eq!(
            order,
            vec![ERef::Base(2), ERef::Base(0), ERef::Base(1), ERef::Base(3)]
        );
    }

    #[test]
    fn round_trip_identity() {
        let samples: Vec<(ConstrainedLevelGraph, LevelEmbedding)> = {
            let g = instance_a();
            let e = canonical_a(&g);
            let mut v = vec![(g, e)];
            v.push(nested_ears());
            v
        };
        for (g, emb) in samples {
            let scene = Scene::from_embedding(&g, emb.clone());
            let order = compatible_order_of(&scene).unwrap();
            let rebuilt = embedding_from_order(&g, &emb.aug, &order).unwrap();
            assert_eq!(rebuilt, emb);
        }
    }

    #[test]
    fn mirrored_order_gives_mirrored_embedding() {
        let g = instance_a();
        let emb =
            embedding_from_order(&g, &Default::default(), &[ERef::Base(1), ERef::Base(0)])
                .unwrap();
        let a2 = g.vertex("a2").unwrap();
        let a1 = g.vertex("a1").unwrap();
        let p2 = emb.find_vertex(VRef::Base(a2)).unwrap();
        let p1 = emb.find_vertex(VRef::Base(a1)).unwrap();
        assert!(p2.1 < p1.1, "a2 must end up left of a1");
    }

    #[test]
    fn unrealizable_permutation_rejected() {
        // Edges 0=(u1,w) 1=(u2,w) 2=(u1,x). The order [0, 2, 1] forces w
        // to already sit right of x when edge 0 arrives.
        let g = parse_instance(
            r#"{"vertices":[{"id":"u1","level":1},{"id":"u2","level":1},
                            {"id":"w","level":2},{"id":"x","level":2}],
                "edges":[["u1","w"],["u2","w"],["u1","x"]],"constraints":[]}"#,
        )
        .unwrap();
        assert!(embedding_from_order(
            &g,
            &Default::default(),
            &[ERef::Base(0), ERef::Base(2), ERef::Base(1)]
        )
        .is_none());
        // A consistent order of the same edges is realizable.
        assert!(embedding_from_order(
            &g,
            &Default::default(),
            &[ERef::Base(1), ERef::Base(0), ERef::Base(2)]
        )
        .is_some());
    }

    #[test]
    fn round_trip_on_oracle_embeddings() {
        let g = parse_instance(
            r#"{"vertices":[{"id":"a","level":1},{"id":"b","level":1},
                            {"id":"c","level":2},{"id":"d","level":3}],
                "edges":[["a","c"],["b","c"],["b","d"],["a","d"]],
                "constraints":[]}"#,
        )
        .unwrap();
        let mut checked = 0usize;
        crate::oracle::for_each_solution(&g, 1_000_000, |emb| {
            let scene = Scene::from_embedding(&g, emb.clone());
            let order = compatible_order_of(&scene).unwrap();
            let rebuilt = embedding_from_order(&g, &emb.aug, &order).unwrap();
            assert_eq!(&rebuilt, emb);
            checked += 1;
            std::ops::ControlFlow::Continue(())
        })
        .unwrap();
        assert!(checked > 0);
    }
}
