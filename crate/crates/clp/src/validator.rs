//! Drawing validator: decides whether an embedding is a constrained level
//! planar drawing of an instance. Every solver in this crate gates its
//! output through [`check_embedding`].

use crate::embedding::{ERef, Item, LevelEmbedding, Scene, VRef};
use crate::model::{ConstrainedLevelGraph, Violation, V};
use std::collections::{HashMap, HashSet};

/// Validation outcome: `ok()` iff no violations were recorded.
#[derive(Clone, Debug, Default)]
pub struct Verdict {
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
    fn push(&mut self, msg: String) {
        self.violations.push(Violation(msg));
    }
}

/// Options for [`check_embedding`].
#[derive(Clone, Copy, Debug, Default)]
pub struct CheckOptions {
    /// Strip the augmentation registry and validate the restriction to the
    /// input graph only.
    pub ignore_augmentation: bool,
}

/// Full validation of an embedding against its instance: structural
/// invariants, crossing-freeness between consecutive rows, and per-level
/// constraint conformance. Lists every violated condition with witnesses.
pub fn check_embedding(
    g: &ConstrainedLevelGraph,
    emb: &LevelEmbedding,
    options: CheckOptions,
) -> Verdict {
    let restricted;
    let emb = if options.ignore_augmentation {
        restricted = emb.restrict_to_base();
        &restricted
    } else {
        emb
    };
    let scene = Scene::from_embedding(g, emb.clone());
    check_scene(&scene, false)
}

/// Core checks shared by the public validator and by internal validation of
/// partial drawings (core candidates contain only a vertex subset; with
/// `partial`, absent base vertices and their edges are simply out of scope).
pub fn check_scene(scene: &Scene, partial: bool) -> Verdict {
    let mut verdict = Verdict::default();
    let g = scene.g;
    let emb = &scene.emb;

    // Rows sorted strictly ascending.
    for w in emb.rows.windows(2) {
        if w[0].level >= w[1].level {
            verdict.push(format!(
                "rows out of order: level {} before {}",
                w[0].level, w[1].level
            ));
        }
    }

    // Every vertex appears exactly once, on its own level's row.
    let mut seen: HashMap<VRef, (usize, usize)> = HashMap::new();
    for (ri, row) in emb.rows.iter().enumerate() {
        for (pi, item) in row.items.iter().enumerate() {
            if let Item::Vertex(v) = *item {
                if seen.insert(v, (ri, pi)).is_some() {
                    verdict.push(format!("vertex {} appears more than once", vname(scene, v)));
                }
                if scene.vlevel(v) != row.level {
                    verdict.push(format!(
                        "vertex {} placed on level {} but assigned level {}",
                        vname(scene, v),
                        row.level,
                        scene.vlevel(v)
                    ));
                }
            }
        }
    }
    if !partial {
        for v in 0..g.n() {
            if !seen.contains_key(&VRef::Base(v)) {
                verdict.push(format!("vertex {} missing from embedding", g.name(v)));
            }
        }
    }
    for i in 0..emb.aug.vertices.len() {
        if !seen.contains_key(&VRef::Aug(i)) {
            verdict.push(format!(
                "augmentation vertex {} missing from embedding",
                emb.aug.vertices[i].name
            ));
        }
    }

    // Token placement: edges in scope are those whose endpoints are placed.
    let mut in_scope: Vec<ERef> = Vec::new();
    for e in scene.all_edge_refs() {
        let (t, h) = scene.endpoints(e);
        let placed = seen.contains_key(&t) && seen.contains_key(&h);
        if placed {
            in_scope.push(e);
        } else if !partial {
            verdict.push(format!("edge {} has an unplaced endpoint", ename(scene, e)));
        }
    }
    let scope_set: HashSet<ERef> = in_scope.iter().copied().collect();
    let mut token_count: HashMap<(ERef, usize), usize> = HashMap::new();
    for (ri, row) in emb.rows.iter().enumerate() {
        for item in &row.items {
            if let Item::Passage(e) = *item {
                *token_count.entry((e, ri)).or_insert(0) += 1;
                if !scope_set.contains(&e) {
                    verdict.push(format!(
                        "token of edge {} whose endpoints are not both placed",
                        ename(scene, e)
                    ));
                } else if scene.is_horizontal(e) {
                    verdict.push(format!(
                        "horizontal edge {} has a passage token",
                        ename(scene, e)
                    ));
                } else if !scene.crosses(e, row.level) {
                    verdict.push(format!(
                        "edge {} has a token on level {} outside its span",
                        ename(scene, e),
                        row.level
                    ));
                }
            }
        }
    }
    for &e in &in_scope {
        if scene.is_horizontal(e) {
            continue;
        }
        let (lo, hi) = scene.span(e);
        for (ri, row) in emb.rows.iter().enumerate() {
            if row.level > lo && row.level < hi {
                match token_count.get(&(e, ri)).copied().unwrap_or(0) {
                    1 => {}
                    0 => verdict.push(format!(
                        "edge {} missing its token on level {}",
                        ename(scene, e),
                        row.level
                    )),
                    k => verdict.push(format!(
                        "edge {} has {k} tokens on level {}",
                        ename(scene, e),
                        row.level
                    )),
                }
            }
        }
    }

    // Token-only rows are only meaningful as augmentation levels.
    if emb.aug.vertices.is_empty() && emb.aug.edges.is_empty() {
        for row in &emb.rows {
            if !row.items.is_empty()
                && row.items.iter().all(|i| matches!(i, Item::Passage(_)))
            {
                verdict.push(format!(
                    "level {} carries only passage tokens and no vertex",
                    row.level
                ));
            }
        }
    }

    // Horizontal edges join consecutive items of one row.
    for (ai, ae) in emb.aug.edges.iter().enumerate() {
        if scene.is_horizontal(ERef::Aug(ai)) {
            let (pt, ph) = (seen.get(&ae.tail), seen.get(&ae.head));
            if let (Some(&(rt, it)), Some(&(rh, ih))) = (pt, ph) {
                if rt != rh || it.abs_diff(ih) != 1 {
                    verdict.push(format!(
                        "horizontal edge {} endpoints are not consecutive on one level",
                        ename(scene, ERef::Aug(ai))
                    ));
                }
            }
        }
    }

    // Crossing-freeness per consecutive row pair.
    for ri in 0..emb.rows.len().saturating_sub(1) {
        let (lo, hi) = (emb.rows[ri].level, emb.rows[ri + 1].level);
        let mut present: Vec<(ERef, usize, usize)> = Vec::new();
        for &e in &in_scope {
            if scene.is_horizontal(e) {
                continue;
            }
            let (elo, ehi) = scene.span(e);
            if elo <= lo && ehi >= hi {
                if let (Some(a), Some(b)) = (
                    scene.edge_pos_on_row(e, ri),
                    scene.edge_pos_on_row(e, ri + 1),
                ) {
                    present.push((e, a, b));
                }
            }
        }
        if count_strict_inversions(&present) > 0 {
            // Slow pass only on failure, to produce witnesses.
            for x in 0..present.len() {
                for y in x + 1..present.len() {
                    let (e, a1, b1) = present[x];
                    let (f, a2, b2) = present[y];
                    if (a1 < a2 && b1 > b2) || (a2 < a1 && b2 > b1) {
                        verdict.push(format!(
                            "edges {} and {} cross between levels {} and {}",
                            ename(scene, e),
                            ename(scene, f),
                            lo,
                            hi
                        ));
                    }
                }
            }
        }
    }

    // Per-level constraint conformance (restricted to placed vertices).
    for (level, _) in g.constraints() {
        let closure = match g.constraint_closure(*level) {
            Some(c) => c,
            None => {
                verdict.push(format!("constraints on level {level} are cyclic"));
                continue;
            }
        };
        for (u, w) in closure {
            let (pu, pw) = (seen.get(&VRef::Base(u)), seen.get(&VRef::Base(w)));
            if let (Some(&(ru, iu)), Some(&(rw, iw))) = (pu, pw) {
                debug_assert_eq!(ru, rw);
                if iu >= iw {
                    verdict.push(format!(
                        "constraint violated: {} ≺ {} but order is reversed on level {}",
                        g.name(u),
                        g.name(w),
                        level
                    ));
                }
            }
        }
    }

    verdict
}

/// Counts strictly inverting pairs among `(edge, pos_low, pos_high)`
/// entries via merge sort on the second coordinate after sorting by the
/// first. Ties (shared endpoints) never count.
fn count_strict_inversions(entries: &[(ERef, usize, usize)]) -> usize {
    let mut v: Vec<(usize, usize)> = entries.iter().map(|&(_, a, b)| (a, b)).collect();
    v.sort();
    // After sorting by (a, b), a strict inversion is a pair i < j with
    // a_i < a_j and b_i > b_j. Count pairs with b_i > b_j and a_i != a_j.
    // Merge sort counting with tie groups on `a` handled by skipping
    // same-`a` comparisons: count all (b) inversions, then subtract
    // inversions within equal-`a` groups (within a group b is sorted
    // ascending, so there are none to subtract — sorting by (a, b) makes
    // same-`a` runs already ascending in b).
    let bs: Vec<usize> = v.iter().map(|&(_, b)| b).collect();
    count_inversions(&bs)
}

fn count_inversions(xs: &[usize]) -> usize {
    fn go(xs: &mut Vec<usize>) -> usize {
        if xs.len() <= 1 {
            return 0;
        }
        let mid = xs.len() / 2;
        let mut right = xs.split_off(mid);
        let mut count = go(xs) + go(&mut right);
        let mut merged = Vec::with_capacity(xs.len() + right.len());
        let (mut i, mut j) = (0, 0);
        while i < xs.len() && j < right.len() {
            if xs[i] <= right[j] {
                merged.push(xs[i]);
                i += 1;
            } else {
                count += xs.len() - i;
                merged.push(right[j]);
                j += 1;
            }
        }
        merged.extend_from_slice(&xs[i..]);
        merged.extend_from_slice(&right[j..]);
        *xs = merged;
        count
    }
    let mut v = xs.to_vec();
    go(&mut v)
}

fn vname(scene: &Scene, v: VRef) -> String {
    match v {
        VRef::Base(v) => scene.g.name(v).to_string(),
        VRef::Aug(i) => scene.emb.aug.vertices[i].name.clone(),
    }
}

fn ename(scene: &Scene, e: ERef) -> String {
    let (t, h) = scene.endpoints(e);
    format!("({}, {})", vname(scene, t), vname(scene, h))
}

/// Per-level counts of ears (w.r.t. cover `C`) in a validated drawing;
/// flags any level exceeding the `2|C|` bound, which would falsify either
/// the cover or the validator.
pub fn ears_per_level_audit(
    g: &ConstrainedLevelGraph,
    cover: &HashSet<V>,
    emb: &LevelEmbedding,
) -> Vec<(crate::level::Level, usize, bool)> {
    let classification = crate::cover::classify_vertices(g, cover).expect("C must be a cover");
    let mut counts: HashMap<crate::level::Level, usize> = HashMap::new();
    for &(v, _, _) in &classification.ears {
        *counts.entry(g.level(v)).or_insert(0) += 1;
    }
    let _ = emb;
    let bound = 2 * cover.len();
    let mut out: Vec<(crate::level::Level, usize, bool)> = counts
        .into_iter()
        .map(|(l, c)| (l, c, c > bound))
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{name_items, rows_from_orders};
    use crate::io::parse_instance;
    use crate::level::Level;

    fn instance_a() -> ConstrainedLevelGraph {
        parse_instance(
            r#"{
                "vertices": [
                    {"id": "a1", "level": 1}, {"id": "a2", "level": 1},
                    {"id": "b1", "level": 2}, {"id": "b2", "level": 2}
                ],
                "edges": [["a1","b1"], ["a2","b2"]],
                "constraints": [
                    {"level": 1, "pairs": [["a1","a2"]]},
                    {"level": 2, "pairs": [["b1","b2"]]}
                ]
            }"#,
        )
        .unwrap()
    }

    fn emb_of(g: &ConstrainedLevelGraph, l1: &[&str], l2: &[&str]) -> LevelEmbedding {
        rows_from_orders(
            g,
            &[
                (Level::int(1), name_items(g, l1)),
                (Level::int(2), name_items(g, l2)),
            ],
        )
    }

    #[test]
    fn accepts_canonical_instance_a() {
        let g = instance_a();
        let emb = emb_of(&g, &["a1", "a2"], &["b1", "b2"]);
        assert!(check_embedding(&g, &emb, CheckOptions::default()).ok());
    }

    #[test]
    fn detects_crossing() {
        let g = instance_a();
        let emb = emb_of(&g, &["a1", "a2"], &["b2", "b1"]);
        let verdict = check_embedding(&g, &emb, CheckOptions::default());
        assert!(!verdict.ok());
        assert!(verdict.violations.iter().any(|v| v.0.contains("cross")));
    }

    #[test]
    fn detects_constraint_violation() {
        let g = instance_a();
        let emb = emb_of(&g, &["a2", "a1"], &["b2", "b1"]);
        let verdict = check_embedding(&g, &emb, CheckOptions::default());
        assert!(!verdict.ok());
        assert!(verdict
            .violations
            .iter()
            .any(|v| v.0.contains("constraint violated")));
    }

    #[test]
    fn detects_structural_problems() {
        let g = instance_a();
        // Missing vertex b2.
        let emb = emb_of(&g, &["a1", "a2"], &["b1"]);
        let verdict = check_embedding(&g, &emb, CheckOptions::default());
        assert!(verdict
            .violations
            .iter()
            .any(|v| v.0.contains("missing from embedding")));
        // Duplicated vertex.
        let emb = emb_of(&g, &["a1", "a2", "a1"], &["b1", "b2"]);
        let verdict = check_embedding(&g, &emb, CheckOptions::default());
        assert!(verdict
            .violations
            .iter()
            .any(|v| v.0.contains("more than once")));
    }

    #[test]
    fn crossing_check_symmetric() {
        // Same instance, both row orders swapped: mirrored drawing has the
        // same (zero) crossing count; the check does not depend on edge
        // enumeration order.
        let g = parse_instance(
            r#"{"vertices":[{"id":"a1","level":1},{"id":"a2","level":1},
                            {"id":"b1","level":2},{"id":"b2","level":2}],
                "edges":[["a1","b1"],["a2","b2"]],"constraints":[]}"#,
        )
        .unwrap();
        let ok = emb_of(&g, &["a2", "a1"], &["b2", "b1"]);
        assert!(check_embedding(&g, &ok, CheckOptions::default()).ok());
    }

    #[test]
    fn inversion_counter() {
        assert_eq!(count_inversions(&[1, 2, 3]), 0);
        assert_eq!(count_inversions(&[3, 2, 1]), 3);
        assert_eq!(count_inversions(&[2, 1, 3]), 1);
    }
}
