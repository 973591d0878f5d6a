//! Transition insertion (Step 2 of the fixed-parameter solver).
//!
//! A *transition* of a cover pair (c_lo, c_hi) is a degree-2 non-cover
//! vertex adjacent to both with a level strictly between theirs; its curve
//! must run the full height of the pair's strip, so in a crossing-free
//! drawing it hugs one of the parallel core edges joining the pair (its
//! *divider*), in the divider's *vicinity* — the sliver between the two
//! containing no cover vertex.
//!
//! For each pair, the strip splits into regions r_1 … r_{j+1} between the
//! dividers e_1 … e_j. Everything that must be ordered horizontally — the
//! connected components of g − pair containing a cover vertex (pinned to
//! a region by the core embedding, or free to float outside the strip),
//! the pair's transitions, and the pair's leaves — forms a relation R:
//! same-level constraint pairs, region indices, and transitive closure.
//! Mutual R-reachability involving a transition or two pinned components
//! is a contradiction (those members cannot interleave), rejecting the
//! core candidate. Otherwise every transition gets the leftmost vicinity
//! index consistent with R, and the group at each divider is drawn hugging
//! the divider's left side in R-topological order.

use crate::cover::classify_vertices;
use crate::embedding::{ERef, Item, LevelEmbedding, Scene, VRef};
use crate::model::{ConstrainedLevelGraph, V};
use crate::validator::check_scene;
use std::collections::{HashMap, HashSet};

/// Where one transition ended up.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransitionPlacement {
    pub vertex: V,
    /// The divider edge whose left side the transition hugs.
    pub divider: ERef,
    /// The cover pair `(lower, upper)`.
    pub pair: (V, V),
}

/// Step 2 output: the embedding with all transitions drawn, plus the
/// divider assignment Step 3 needs for normalization.
#[derive(Clone, Debug)]
pub struct TransitionOutcome {
    pub emb: LevelEmbedding,
    pub placements: Vec<TransitionPlacement>,
}

/// True iff the closed region between divider `e` and transition `t`'s
/// curve contains no cover vertex: on every row of the pair's open strip,
/// no cover vertex sits strictly between `t`'s item and the divider's.
pub fn vicinity_check(
    scene: &Scene,
    t: V,
    pair: (V, V),
    e: ERef,
    cover: &HashSet<V>,
) -> bool {
    let g = scene.g;
    let (lo, hi) = (g.level(pair.0), g.level(pair.1));
    let t_edges: Vec<ERef> = (0..g.edges().len())
        .filter(|&ei| {
            let (a, b) = g.edges()[ei];
            a == t || b == t
        })
        .map(ERef::Base)
        .collect();
    for (ri, row) in scene.emb.rows.iter().enumerate() {
        if row.level <= lo || row.level >= hi {
            continue;
        }
        let pos_e = match scene.edge_pos_on_row(e, ri) {
            Some(p) => p,
            None => continue,
        };
        let pos_t = if row.level == g.level(t) {
            scene.emb.find_vertex(VRef::Base(t)).map(|(_, p)| p)
        } else {
            t_edges.iter().find_map(|&te| scene.edge_pos_on_row(te, ri))
        };
        let pos_t = match pos_t {
            Some(p) => p,
            None => continue,
        };
        let (a, b) = (pos_t.min(pos_e), pos_t.max(pos_e));
        for p in a + 1..b {
            if let Item::Vertex(VRef::Base(v)) = row.items[p] {
                if cover.contains(&v) {
                    return false;
                }
            }
        }
    }
    true
}

/// One horizontally-ordered member of a pair's strip.
#[derive(Clone, Debug)]
enum Member {
    /// Component of g − pair containing a cover vertex; `region` is its
    /// pinned region index (1-based), `None` when it floats outside the
    /// strip.
    Fixed { verts: Vec<V>, region: Option<usize> },
    Transition(V),
    Leaf(V),
}

impl Member {
    fn verts(&self) -> Vec<V> {
        match self {
            Member::Fixed { verts, .. } => verts.clone(),
            Member::Transition(v) | Member::Leaf(v) => vec![*v],
        }
    }
}

/// Inserts every transition vertex into the core embedding. `None` means
/// this core candidate cannot host its transitions.
pub fn insert_transitions(
    g: &ConstrainedLevelGraph,
    cover: &HashSet<V>,
    core_emb: &LevelEmbedding,
) -> Option<TransitionOutcome> {
    let cl = classify_vertices(g, cover).ok()?;
    let mut scene = Scene::from_embedding(g, core_emb.clone());
    let mut placements = Vec::new();

    let mut by_pair: Vec<((V, V), Vec<V>)> = cl
        .transitions_by_pair()
        .into_iter()
        .map(|(p, mut ts)| {
            ts.sort();
            (p, ts)
        })
        .collect();
    by_pair.sort();

    for (pair, ts) in by_pair {
        let dividers = divider_edges(&scene, pair);
        if dividers.is_empty() {
            return None;
        }
        let assignment = assign_vicinities(g, cover, &scene, pair, &ts, dividers.len())?;
        // Draw each group hugging its divider's left side; processing a
        // group left-to-right keeps earlier members further left.
        for &(t, w) in &assignment {
            draw_transition(&mut scene, t, pair, dividers[w - 1]);
            placements.push(TransitionPlacement {
                vertex: t,
                divider: dividers[w - 1],
                pair,
            });
        }
        for &(t, w) in &assignment {
            if !vicinity_check(&scene, t, pair, dividers[w - 1], cover) {
                return None;
            }
        }
    }

    if !check_scene(&scene, true).ok() {
        return None;
    }
    Some(TransitionOutcome {
        emb: scene.emb,
        placements,
    })
}

/// All core edges joining exactly the pair, left-to-right.
pub fn divider_edges(scene: &Scene, pair: (V, V)) -> Vec<ERef> {
    let g = scene.g;
    let want: HashSet<VRef> = [VRef::Base(pair.0), VRef::Base(pair.1)].into_iter().collect();
    let mut out: Vec<ERef> = scene
        .present_nonhorizontal_edges()
        .into_iter()
        .filter(|&e| {
            let (a, b) = scene.endpoints(e);
            [a, b].into_iter().collect::<HashSet<_>>() == want && scene.edge_is_present(e)
        })
        .collect();
    let (lo, hi) = (g.level(pair.0), g.level(pair.1));
    let (lo, hi) = if lo < hi { (lo, hi) } else { (hi, lo) };
    if let Some(&ri) = scene.rows_strictly_between(lo, hi).first() {
        out.sort_by_key(|&e| scene.edge_pos_on_row(e, ri));
    } else {
        out.sort();
    }
    out
}

/// Computes, per transition of the pair, a vicinity index in 1..=j, in
/// left-to-right drawing order. `None` rejects the candidate.
fn assign_vicinities(
    g: &ConstrainedLevelGraph,
    cover: &HashSet<V>,
    scene: &Scene,
    pair: (V, V),
    ts: &[V],
    j: usize,
) -> Option<Vec<(V, usize)>> {
    let members = build_members(g, cover, scene, pair, ts)?;
    let m = members.len();
    // Relation R: same-level constraints (1), region order (2), closure (3).
    let mut r = vec![vec![false; m]; m];
    let mut owner: HashMap<V, usize> = HashMap::new();
    for (i, mem) in members.iter().enumerate() {
        for v in mem.verts() {
            owner.insert(v, i);
        }
    }
    for level in g.constraints().keys() {
        let closure = g.constraint_closure(*level)?;
        for (x, y) in closure {
            if let (Some(&a), Some(&b)) = (owner.get(&x), owner.get(&y)) {
                if a != b {
                    r[a][b] = true;
                }
            }
        }
    }
    for (a, ma) in members.iter().enumerate() {
        for (b, mb) in members.iter().enumerate() {
            if let (
                Member::Fixed { region: Some(wa), .. },
                Member::Fixed { region: Some(wb), .. },
            ) = (ma, mb)
            {
                if wa < wb {
                    r[a][b] = true;
                }
            }
        }
    }
    for mid in 0..m {
        for a in 0..m {
            for b in 0..m {
                if r[a][mid] && r[mid][b] {
                    r[a][b] = true;
                }
            }
        }
    }
    // Contradiction scan: mutual reachability means the members must
    // interleave in one column, impossible for transitions (full-height
    // curves) and for two region-pinned components.
    for a in 0..m {
        for b in a + 1..m {
            if r[a][b] && r[b][a] {
                let involved = [&members[a], &members[b]];
                let transitions = involved
                    .iter()
                    .filter(|x| matches!(x, Member::Transition(_)))
                    .count();
                let pinned = involved
                    .iter()
                    .filter(|x| matches!(x, Member::Fixed { region: Some(_), .. }))
                    .count();
                if transitions > 0 || pinned == 2 {
                    return None;
                }
            }
        }
    }
    // Floating components squeezed between transitions cannot exist.
    for (a, ma) in members.iter().enumerate() {
        if let Member::Fixed { region: None, .. } = ma {
            let pushed_right = (0..m)
                .any(|b| matches!(members[b], Member::Transition(_)) && r[b][a]);
            let pushed_left = (0..m)
                .any(|b| matches!(members[b], Member::Transition(_)) && r[a][b]);
            if pushed_right && pushed_left {
                return None;
            }
        }
    }
    // Vicinity bounds per transition from pinned components.
    let t_index: HashMap<V, usize> = ts.iter().map(|&t| (t, owner[&t])).collect();
    let mut bounds: HashMap<V, (usize, usize)> = HashMap::new();
    for &t in ts {
        let ti = t_index[&t];
        let mut lo = 1usize;
        let mut hi = j;
        for (b, mb) in members.iter().enumerate() {
            if let Member::Fixed { region: Some(w), .. } = mb {
                if r[b][ti] {
                    lo = lo.max(*w);
                }
                if r[ti][b] {
                    if *w < 2 {
                        return None;
                    }
                    hi = hi.min(*w - 1);
                }
            }
        }
        if lo > hi {
            return None;
        }
        bounds.insert(t, (lo, hi));
    }
    // Propagate transition-transition order; process in R-topological
    // order (acyclic among transitions after the contradiction scan).
    let mut order: Vec<V> = ts.to_vec();
    order.sort_by_key(|&t| {
        let ti = t_index[&t];
        let preds = ts.iter().filter(|&&u| r[t_index[&u]][ti]).count();
        (preds, t)
    });
    let mut vic: HashMap<V, usize> = HashMap::new();
    for &t in &order {
        let ti = t_index[&t];
        let (mut lo, hi) = bounds[&t];
        for &u in ts {
            if u != t && r[t_index[&u]][ti] {
                if let Some(&wu) = vic.get(&u) {
                    lo = lo.max(wu);
                }
            }
        }
        if lo > hi {
            return None;
        }
        vic.insert(t, lo);
    }
    // Emit left-to-right: vicinity ascending, then topological position.
    let mut out: Vec<(V, usize)> = order.iter().map(|&t| (t, vic[&t])).collect();
    let pos: HashMap<V, usize> = order.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    out.sort_by_key(|&(t, w)| (w, pos[&t]));
    Some(out)
}

/// ℳ for one pair: pinned/floating components, transitions, pair leaves.
fn build_members(
    g: &ConstrainedLevelGraph,
    cover: &HashSet<V>,
    scene: &Scene,
    pair: (V, V),
    ts: &[V],
) -> Option<Vec<Member>> {
    let cl = classify_vertices(g, cover).ok()?;
    let n = g.n();
    let mut dsu: Vec<usize> = (0..n).collect();
    fn find(dsu: &mut Vec<usize>, mut x: usize) -> usize {
        while dsu[x] != x {
            dsu[x] = dsu[dsu[x]];
            x = dsu[x];
        }
        x
    }
    let banned = |v: V| v == pair.0 || v == pair.1;
    for &(t, h) in g.edges() {
        if !banned(t) && !banned(h) {
            let (rt, rh) = (find(&mut dsu, t), find(&mut dsu, h));
            if rt != rh {
                dsu[rt] = rh;
            }
        }
    }
    let mut comps: HashMap<usize, Vec<V>> = HashMap::new();
    for v in 0..n {
        if banned(v) {
            continue;
        }
        let r = find(&mut dsu, v);
        comps.entry(r).or_default().push(v);
    }
    let dividers = divider_edges(scene, pair);
    let (plo, phi) = (g.level(pair.0), g.level(pair.1));
    let (plo, phi) = if plo < phi { (plo, phi) } else { (phi, plo) };
    let mut members = Vec::new();
    let mut comp_keys: Vec<usize> = comps.keys().copied().collect();
    comp_keys.sort();
    for key in comp_keys {
        let verts = comps.remove(&key).unwrap();
        if !verts.iter().any(|v| cover.contains(v)) {
            continue;
        }
        // Pin the component by its cover vertices drawn inside the strip.
        let mut region: Option<usize> = None;
        for &v in &verts {
            if !cover.contains(&v) {
                continue;
            }
            let lv = g.level(v);
            if lv <= plo || lv >= phi {
                continue;
            }
            let (ri, p) = scene.emb.find_vertex(VRef::Base(v))?;
            let left = dividers
                .iter()
                .filter(|&&d| scene.edge_pos_on_row(d, ri).is_some_and(|q| q < p))
                .count();
            let w = left + 1;
            match region {
                None => region = Some(w),
                Some(prev) if prev != w => return None,
                _ => {}
            }
        }
        members.push(Member::Fixed { verts, region });
    }
    for &t in ts {
        members.push(Member::Transition(t));
    }
    for &(leaf, c) in &cl.leaves {
        if c == pair.0 || c == pair.1 {
            members.push(Member::Leaf(leaf));
        }
    }
    Some(members)
}

/// Draws transition `t` immediately left of `divider`: vertex on its row,
/// and a token of the appropriate incident edge on every other row of the
/// pair's open strip, each at the divider's current position.
fn draw_transition(scene: &mut Scene, t: V, pair: (V, V), divider: ERef) {
    let g = scene.g;
    let lt = g.level(t);
    let (plo, phi) = (g.level(pair.0), g.level(pair.1));
    let (plo, phi) = if plo < phi { (plo, phi) } else { (phi, plo) };
    let edge_id = |a: V, b: V| -> ERef {
        ERef::Base(
            (0..g.edges().len())
                .find(|&e| g.edges()[e] == (a, b) || g.edges()[e] == (b, a))
                .expect("transition edge exists"),
        )
    };
    let (lower, upper) = if g.level(pair.0) < g.level(pair.1) {
        (pair.0, pair.1)
    } else {
        (pair.1, pair.0)
    };
    let e_low = edge_id(lower, t);
    let e_high = edge_id(t, upper);
    let ri_t = scene.ensure_row(lt);
    let p = scene
        .edge_pos_on_row(divider, ri_t)
        .expect("divider crosses the strip");
    scene.emb.rows[ri_t].items.insert(p, Item::Vertex(VRef::Base(t)));
    let strip_rows: Vec<usize> = scene.rows_strictly_between(plo, phi);
    for ri in strip_rows {
        let level = scene.emb.rows[ri].level;
        if level == lt {
            continue;
        }
        let e = if level < lt { e_low } else { e_high };
        let p = scene
            .edge_pos_on_row(divider, ri)
            .expect("divider crosses the strip");
        scene.emb.rows[ri].items.insert(p, Item::Passage(e));
    }
}
