//! Candidate-core enumeration (Step 1 of the fixed-parameter solver).
//!
//! The *core* of a drawing consists of the cover vertices, the non-cover
//! vertices with three or more neighbors, and a bounded roster of stand-in
//! ears representing the extremal ears of each cover pair, together with
//! visibility edges between cover vertices (non-horizontal and
//! horizontal). This module enumerates every combinatorially distinct
//! drawing such a core can have:
//!
//! 1. visibility-edge multisets over cover pairs (pruned by a per-pair
//!    multiplicity bound, a global edge cap, and cover connectivity),
//! 2. stand-in ear rosters at the finitely many candidate levels,
//! 3. all realizable embeddings of the chosen edge set, built by inserting
//!    the edges in a fixed order while branching over every crossing-free
//!    placement, with memoized partial states.
//!
//! Each surviving embedding is checked against the level constraints and
//! deduplicated by a canonical signature in which stand-in ears and
//! parallel visibility strands are interchangeable. The guarantee carried
//! through the pipeline: if the instance is drawable at all, one of the
//! yielded candidates is the core of some valid drawing.

use crate::cover::classify_vertices;
use crate::edge_order::compatible_order_of;
use crate::step3::curve_conflicts;
use crate::embedding::{
    AugEdge, AugEdgeKind, AugRegistry, AugVertex, ERef, Item, LevelEmbedding, Scene, VRef,
};
use crate::level::Level;
use crate::model::{ConstrainedLevelGraph, Violation, E, V};
use crate::validator::check_scene;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::ops::ControlFlow;

/// Enumeration budgets. All are completeness-critical: a true core larger
/// than a cap cannot be found. Defaults follow the structural bounds of
/// the underlying theory and are configurable from the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    /// Maximum number of non-horizontal visibility edges.
    pub m_vis: usize,
    /// Maximum number of stand-in ears in a roster.
    pub roster: usize,
    /// Multiplier `a` in the traversal-sequence length bound `a·k²`.
    pub traversal_factor: usize,
}

impl Caps {
    /// Default caps for cover size `k`: the cover-induced part of a planar
    /// core has at most `3k − 5` edges (`k − 1` suffice below `k = 3`),
    /// rosters stay within `14k`, traversal sequences within `4k²`.
    pub fn for_k(k: usize) -> Self {
        Caps {
            m_vis: if k >= 3 { 3 * k - 5 } else { k.saturating_sub(1) },
            roster: 14 * k,
            traversal_factor: 4,
        }
    }
}

/// One candidate core drawing.
#[derive(Clone, Debug)]
pub struct CoreCandidate {
    /// The realized embedding (cover, high-degree vertices, stand-in ears,
    /// visibility edges).
    pub emb: LevelEmbedding,
    /// Canonical compatible order of the candidate's non-horizontal edges.
    pub order: Vec<ERef>,
    /// Dedup signature (stand-ins renamed by pair and level rank).
    pub signature: String,
}

/// All candidate levels for a new stand-in ear of `pair`, given the
/// already-placed roster. Returns the midpoints directly above and below
/// every *anchor* level; anchors are: cover levels, levels of non-cover
/// vertices with ≥ 3 neighbors, placed-roster levels, the instance's
/// extremal levels, every ear level, and the extremal levels of the
/// components of `g − pair` (plus placed stand-ins) that contain a cover
/// vertex. Midpoints are taken against the adjacent occupied level, or
/// half a unit past the extremes. Whether a level actually hosts an ear of
/// `pair` is the caller's filter.
pub fn candidate_levels(
    g: &ConstrainedLevelGraph,
    cover: &HashSet<V>,
    placed: &[((V, V), Level)],
    pair: (V, V),
) -> BTreeSet<Level> {
    let cl = classify_vertices(g, cover).expect("cover required");
    let mut anchors: BTreeSet<Level> = BTreeSet::new();
    for &v in cover {
        anchors.insert(g.level(v));
    }
    for &v in &cl.high {
        anchors.insert(g.level(v));
    }
    for &(_, l) in placed {
        anchors.insert(l);
    }
    let occupied_g = g.occupied_levels();
    if let (Some(&lo), Some(&hi)) = (occupied_g.first(), occupied_g.last()) {
        anchors.insert(lo);
        anchors.insert(hi);
    }
    for &(v, _, _) in &cl.ears {
        anchors.insert(g.level(v));
    }
    anchors.extend(component_extremes(g, placed, pair, cover));

    // Occupied levels (instance + placed stand-ins) for midpoint targets.
    let mut occupied: BTreeSet<Level> = occupied_g.into_iter().collect();
    occupied.extend(placed.iter().map(|&(_, l)| l));

    let mut out = BTreeSet::new();
    for &a in &anchors {
        let above = occupied.range((
            std::ops::Bound::Excluded(a),
            std::ops::Bound::Unbounded,
        ));
        out.insert(match above.clone().next() {
            Some(&b) => a.midpoint(&b),
            None => a.midpoint(&a.plus_one()),
        });
        let below = occupied.range(..a).next_back();
        out.insert(match below {
            Some(&b) => b.midpoint(&a),
            None => a.minus_one().midpoint(&a),
        });
    }
    out
}

/// Extremal levels of the components of `g − pair` (with placed stand-ins
/// attached to their pair members) that contain a cover vertex.
fn component_extremes(
    g: &ConstrainedLevelGraph,
    placed: &[((V, V), Level)],
    pair: (V, V),
    cover: &HashSet<V>,
) -> BTreeSet<Level> {
    let n = g.n();
    let total = n + placed.len();
    let mut dsu: Vec<usize> = (0..total).collect();
    fn find(dsu: &mut Vec<usize>, mut x: usize) -> usize {
        while dsu[x] != x {
            dsu[x] = dsu[dsu[x]];
            x = dsu[x];
        }
        x
    }
    let union = |dsu: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(dsu, a), find(dsu, b));
        if ra != rb {
            dsu[ra] = rb;
        }
    };
    let banned = |v: V| v == pair.0 || v == pair.1;
    for &(t, h) in g.edges() {
        if !banned(t) && !banned(h) {
            union(&mut dsu, t, h);
        }
    }
    for (i, &((a, b), _)) in placed.iter().enumerate() {
        if !banned(a) {
            union(&mut dsu, n + i, a);
        }
        if !banned(b) {
            union(&mut dsu, n + i, b);
        }
    }
    let level_of = |x: usize| -> Level {
        if x < n {
            g.level(x)
        } else {
            placed[x - n].1
        }
    };
    let mut has_cover: HashMap<usize, bool> = HashMap::new();
    let mut extremes: HashMap<usize, (Level, Level)> = HashMap::new();
    for x in 0..total {
        if x < n && banned(x) {
            continue;
        }
        let r = find(&mut dsu, x);
        let l = level_of(x);
        let e = extremes.entry(r).or_insert((l, l));
        e.0 = e.0.min(l);
        e.1 = e.1.max(l);
        if x < n && cover.contains(&x) {
            has_cover.insert(r, true);
        }
    }
    let mut out = BTreeSet::new();
    for (r, (lo, hi)) in extremes {
        if has_cover.get(&r).copied().unwrap_or(false) {
            out.insert(lo);
            out.insert(hi);
        }
    }
    out
}

struct Enumerator<'g, F> {
    g: &'g ConstrainedLevelGraph,
    cover_set: HashSet<V>,
    cover: Vec<V>,
    high: Vec<V>,
    /// Graph ears by (sorted cover pair, top flag) — roster hosts.
    ears_by_pair_side: BTreeMap<((V, V), bool), usize>,
    core_edges: Vec<E>,
    cc_graph_edges: HashMap<(V, V), usize>,
    caps: Caps,
    yielded: HashSet<String>,
    f: F,
}

/// Enumerates every candidate core, calling `f` on each; `f` may stop the
/// stream. Returns an error if `cover` is not a vertex cover of `g`.
pub fn enumerate_candidates<F>(
    g: &ConstrainedLevelGraph,
    cover: &HashSet<V>,
    caps: &Caps,
    f: F,
) -> Result<ControlFlow<()>, Violation>
where
    F: FnMut(CoreCandidate) -> ControlFlow<()>,
{
    let cl = classify_vertices(g, cover)?;
    let mut ears_by_pair_side: BTreeMap<((V, V), bool), usize> = BTreeMap::new();
    for &(_, pair, top) in &cl.ears {
        *ears_by_pair_side.entry((pair, top)).or_insert(0) += 1;
    }
    let core_set: BTreeSet<V> = cl.cover.iter().chain(cl.high.iter()).copied().collect();
    let core_edges: Vec<E> = (0..g.edges().len())
        .filter(|&e| {
            let (t, h) = g.edges()[e];
            core_set.contains(&t) && core_set.contains(&h)
        })
        .collect();
    let mut cc_graph_edges: HashMap<(V, V), usize> = HashMap::new();
    for &(t, h) in g.edges() {
        if cover.contains(&t) && cover.contains(&h) {
            let key = (t.min(h), t.max(h));
            *cc_graph_edges.entry(key).or_insert(0) += 1;
        }
    }
    let mut en = Enumerator {
        g,
        cover_set: cover.clone(),
        cover: cl.cover.clone(),
        high: cl.high.clone(),
        ears_by_pair_side,
        core_edges,
        cc_graph_edges,
        caps: *caps,
        yielded: HashSet::new(),
        f,
    };
    Ok(en.run())
}

impl<'g, F: FnMut(CoreCandidate) -> ControlFlow<()>> Enumerator<'g, F> {
    fn run(&mut self) -> ControlFlow<()> {
        let k = self.cover.len();
        let edge_cap = if k >= 3 { 3 * k - 5 } else { k.saturating_sub(1) };
        let graph_cc_total: usize = self.cc_graph_edges.values().sum();
        let budget = edge_cap
            .saturating_sub(graph_cc_total)
            .min(self.caps.m_vis);

        // Non-horizontal visibility slots: cover pairs on distinct levels,
        // with per-pair multiplicity bound:
        // (graph ∥ visibility strands between the pair) ≤ (cover vertices
        // strictly between their levels) + 1 — two parallel strands must
        // enclose a cover vertex to be combinatorially distinct.
        let mut vis_slots: Vec<((V, V), usize)> = Vec::new();
        let mut horiz_slots: Vec<(V, V)> = Vec::new();
        for i in 0..self.cover.len() {
            for j in i + 1..self.cover.len() {
                let (a, b) = (self.cover[i], self.cover[j]);
                let (la, lb) = (self.g.level(a), self.g.level(b));
                if la == lb {
                    horiz_slots.push((a, b));
                    continue;
                }
                let (lo, hi) = if la < lb { (la, lb) } else { (lb, la) };
                let between = self
                    .cover
                    .iter()
                    .filter(|&&c| self.g.level(c) > lo && self.g.level(c) < hi)
                    .count();
                let existing = self.cc_graph_edges.get(&(a, b)).copied().unwrap_or(0);
                let max_mult = (between + 1).saturating_sub(existing);
                if max_mult > 0 {
                    vis_slots.push(((a, b), max_mult));
                }
            }
        }

        let rosters = self.collect_rosters();
        let mut mults = vec![0usize; vis_slots.len()];
        self.rec_multiplicities(&vis_slots, &horiz_slots, &rosters, budget, 0, &mut mults)
    }

    /// Odometer over per-pair visibility multiplicities within the budget.
    fn rec_multiplicities(
        &mut self,
        vis_slots: &[((V, V), usize)],
        horiz_slots: &[(V, V)],
        rosters: &[Vec<((V, V), Level)>],
        budget: usize,
        idx: usize,
        mults: &mut Vec<usize>,
    ) -> ControlFlow<()> {
        if idx == vis_slots.len() {
            let used: usize = mults.iter().sum();
            for mask in 0usize..1 << horiz_slots.len() {
                let horiz: Vec<(V, V)> = horiz_slots
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &p)| p)
                    .collect();
                // Horizontal edges count against the same edge cap.
                if used + horiz.len() > budget {
                    continue;
                }
                if !self.cover_connected(vis_slots, mults, &horiz) {
                    continue;
                }
                for roster in rosters {
                    self.evaluate(vis_slots, mults, &horiz, roster)?;
                }
            }
            return ControlFlow::Continue(());
        }
        let spent: usize = mults[..idx].iter().sum();
        let max_here = vis_slots[idx].1.min(budget - spent.min(budget));
        for m in 0..=max_here.min(budget.saturating_sub(spent)) {
            mults[idx] = m;
            self.rec_multiplicities(vis_slots, horiz_slots, rosters, budget, idx + 1, mults)?;
        }
        mults[idx] = 0;
        ControlFlow::Continue(())
    }

    /// The cover must be connected by its graph, visibility, and
    /// horizontal edges (a core of a valid drawing always is).
    fn cover_connected(
        &self,
        vis_slots: &[((V, V), usize)],
        mults: &[usize],
        horiz: &[(V, V)],
    ) -> bool {
        if self.cover.len() <= 1 {
            return true;
        }
        let index: HashMap<V, usize> = self
            .cover
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i))
            .collect();
        let mut dsu: Vec<usize> = (0..self.cover.len()).collect();
        fn find(dsu: &mut Vec<usize>, mut x: usize) -> usize {
            while dsu[x] != x {
                dsu[x] = dsu[dsu[x]];
                x = dsu[x];
            }
            x
        }
        let join = |dsu: &mut Vec<usize>, a: V, b: V| {
            let (ra, rb) = (find(dsu, index[&a]), find(dsu, index[&b]));
            if ra != rb {
                dsu[ra] = rb;
            }
        };
        for &(a, b) in self.cc_graph_edges.keys() {
            join(&mut dsu, a, b);
        }
        for (i, &((a, b), _)) in vis_slots.iter().enumerate() {
            if mults[i] > 0 {
                join(&mut dsu, a, b);
            }
        }
        for &(a, b) in horiz {
            join(&mut dsu, a, b);
        }
        let r0 = find(&mut dsu, 0);
        (1..self.cover.len()).all(|i| find(&mut dsu, i) == r0)
    }

    /// All roster sets (lists of (pair, level)), deduplicated by canonical
    /// content, grown one stand-in at a time so candidate levels can react
    /// to prior placements.
    fn collect_rosters(&self) -> Vec<Vec<((V, V), Level)>> {
        let pairs: BTreeSet<(V, V)> = self
            .ears_by_pair_side
            .keys()
            .map(|&(p, _)| p)
            .collect();
        let mut out: Vec<Vec<((V, V), Level)>> = Vec::new();
        // Exact level values distinguish states that are combinatorially
        // identical (fresh midpoints refine forever); deduplicate by the
        // interleaving pattern of stand-in levels among the instance levels
        // and each other instead.
        let base_levels: BTreeSet<Level> = self.g.occupied_levels().into_iter().collect();
        let canon = |placed: &[((V, V), Level)]| -> Vec<((V, V), usize)> {
            let mut all = base_levels.clone();
            all.extend(placed.iter().map(|&(_, l)| l));
            let ranks: Vec<Level> = all.into_iter().collect();
            let mut key: Vec<((V, V), usize)> = placed
                .iter()
                .map(|&(p, l)| (p, ranks.binary_search(&l).unwrap()))
                .collect();
            key.sort();
            key
        };
        let mut seen: HashSet<Vec<((V, V), usize)>> = HashSet::new();
        let mut stack: Vec<Vec<((V, V), Level)>> = vec![Vec::new()];
        seen.insert(Vec::new());
        let k = self.cover.len();
        while let Some(placed) = stack.pop() {
            out.push(placed.clone());
            if placed.len() >= self.caps.roster {
                continue;
            }
            for &pair in &pairs {
                let (lu, lw) = (self.g.level(pair.0), self.g.level(pair.1));
                let (plo, phi) = if lu < lw { (lu, lw) } else { (lw, lu) };
                for level in candidate_levels(self.g, &self.cover_set, &placed, pair) {
                    let top = level > phi;
                    if !top && level >= plo {
                        continue; // not an ear position for this pair
                    }
                    let graph_side = self
                        .ears_by_pair_side
                        .get(&(pair, top))
                        .copied()
                        .unwrap_or(0);
                    let side_cap = 2 * graph_side.min(2) + k.saturating_sub(2);
                    if side_cap == 0 {
                        continue;
                    }
                    let used = placed
                        .iter()
                        .filter(|&&(pp, l)| {
                            pp == pair && ((top && l > phi) || (!top && l < plo))
                        })
                        .count();
                    if used >= side_cap {
                        continue;
                    }
                    let mut next = placed.clone();
                    next.push((pair, level));
                    next.sort();
                    if seen.insert(canon(&next)) {
                        stack.push(next);
                    }
                }
            }
        }
        out
    }

    /// Builds the augmentation for one (visibility, horizontal, roster)
    /// choice and explores all realizable embeddings of its edges.
    fn evaluate(
        &mut self,
        vis_slots: &[((V, V), usize)],
        mults: &[usize],
        horiz: &[(V, V)],
        roster: &[((V, V), Level)],
    ) -> ControlFlow<()> {
        let mut aug = AugRegistry::default();
        for (ri, &((u, w), level)) in roster.iter().enumerate() {
            let vi = aug.vertices.len();
            aug.vertices.push(AugVertex {
                name: format!("standin_{}_{}_{ri}", self.g.name(u), self.g.name(w)),
                level,
                pair: Some((u, w)),
            });
            for &c in &[u, w] {
                let (tail, head) = if level > self.g.level(c) {
                    (VRef::Base(c), VRef::Aug(vi))
                } else {
                    (VRef::Aug(vi), VRef::Base(c))
                };
                aug.edges.push(AugEdge {
                    tail,
                    head,
                    kind: AugEdgeKind::Ear,
                });
            }
        }
        for (i, &((a, b), _)) in vis_slots.iter().enumerate() {
            for _ in 0..mults[i] {
                let (tail, head) = if self.g.level(a) < self.g.level(b) {
                    (VRef::Base(a), VRef::Base(b))
                } else {
                    (VRef::Base(b), VRef::Base(a))
                };
                aug.edges.push(AugEdge {
                    tail,
                    head,
                    kind: AugEdgeKind::Visibility,
                });
            }
        }
        for &(a, b) in horiz {
            aug.edges.push(AugEdge {
                tail: VRef::Base(a),
                head: VRef::Base(b),
                kind: AugEdgeKind::Horizontal,
            });
        }

        let mut edges: Vec<ERef> = self.core_edges.iter().map(|&e| ERef::Base(e)).collect();
        edges.extend(
            aug.edges
                .iter()
                .enumerate()
                .filter(|(_, e)| e.kind != AugEdgeKind::Horizontal)
                .map(|(i, _)| ERef::Aug(i)),
        );

        let mut scene = Scene::new(self.g);
        scene.emb.aug = aug;
        let mut seen_partial: HashSet<(usize, String)> = HashSet::new();
        self.insertion_dfs(&scene, &edges, &mut seen_partial)
    }

    /// Explores all embeddings of `remaining`, inserting the edges in a
    /// fixed order and branching over every crossing-free placement of
    /// each. Any final arrangement restricted to a prefix of the order is
    /// itself crossing-free, so a fixed order reaches every embedding and
    /// avoids the factorial redundancy of order branching.
    fn insertion_dfs(
        &mut self,
        scene: &Scene<'g>,
        remaining: &[ERef],
        seen: &mut HashSet<(usize, String)>,
    ) -> ControlFlow<()> {
        let Some((&e, rest)) = remaining.split_first() else {
            return self.finalize(scene);
        };
        let mut options: Vec<Scene<'g>> = Vec::new();
        let _ = edge_placements(scene, e, &mut |s| {
            options.push(s);
            ControlFlow::Continue(())
        });
        for s in options {
            if seen.insert((rest.len(), rows_signature(&s.emb))) {
                self.insertion_dfs(&s, rest, seen)?;
            }
        }
        ControlFlow::Continue(())
    }

    /// Places edge-less core vertices (every possible position), then
    /// checks horizontal attachment and constraints, deduplicates, yields.
    fn finalize(&mut self, scene: &Scene<'g>) -> ControlFlow<()> {
        let unplaced: Vec<V> = self
            .cover
            .iter()
            .chain(self.high.iter())
            .copied()
            .filter(|&v| scene.emb.find_vertex(VRef::Base(v)).is_none())
            .collect();
        self.place_unplaced(scene, &unplaced)
    }

    fn place_unplaced(&mut self, scene: &Scene<'g>, unplaced: &[V]) -> ControlFlow<()> {
        match unplaced.split_first() {
            None => self.finish_candidate(scene),
            Some((&v, rest)) => {
                let mut base = scene.clone();
                let ri = base.ensure_row(self.g.level(v));
                let nitems = base.emb.rows[ri].items.len();
                for pos in 0..=nitems {
                    let mut s2 = base.clone();
                    s2.emb.rows[ri].items.insert(pos, Item::Vertex(VRef::Base(v)));
                    self.place_unplaced(&s2, rest)?;
                }
                ControlFlow::Continue(())
            }
        }
    }

    fn finish_candidate(&mut self, scene: &Scene<'g>) -> ControlFlow<()> {
        // Horizontal visibility edges must join two consecutive items.
        for ae in &scene.emb.aug.edges {
            if ae.kind != AugEdgeKind::Horizontal {
                continue;
            }
            let (pt, ph) = match (
                scene.emb.find_vertex(ae.tail),
                scene.emb.find_vertex(ae.head),
            ) {
                (Some(a), Some(b)) => (a, b),
                _ => return ControlFlow::Continue(()),
            };
            if pt.0 != ph.0 || pt.1.abs_diff(ph.1) != 1 {
                return ControlFlow::Continue(());
            }
        }
        if !check_scene(scene, true).ok() {
            return ControlFlow::Continue(());
        }
        let signature = canonical_signature(scene);
        if !self.yielded.insert(signature.clone()) {
            return ControlFlow::Continue(());
        }
        let order = match compatible_order_of(scene) {
            Some(o) => o,
            None => return ControlFlow::Continue(()),
        };
        (self.f)(CoreCandidate {
            emb: scene.emb.clone(),
            order,
            signature,
        })
    }
}

/// Verbatim row rendering — partial-state memo key.
pub(crate) fn rows_signature(emb: &LevelEmbedding) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    for row in &emb.rows {
        let _ = write!(s, "{}:{:?};", row.level, row.items);
    }
    s
}

/// Yields every crossing-free way of adding non-horizontal edge `e` to
/// `scene`. Endpoint rows are created on demand; an unplaced endpoint may
/// sit at any position of its row, and the edge gets a passage token at
/// every position of each existing row strictly between its endpoint
/// levels. Each seam between consecutive rows of the span is pruned as
/// soon as both of the edge's positions on it are fixed, so a completed
/// placement never crosses another curve.
fn edge_placements<'g>(
    scene: &Scene<'g>,
    e: ERef,
    sink: &mut dyn FnMut(Scene<'g>) -> ControlFlow<()>,
) -> ControlFlow<()> {
    if scene.is_horizontal(e) {
        return ControlFlow::Continue(());
    }
    let mut base = scene.clone();
    let (t, h) = base.endpoints(e);
    for v in [t, h] {
        let level = base.vlevel(v);
        base.ensure_row(level);
    }
    let (lo, hi) = base.span(e);
    // A row created between two already-placed endpoints carries a
    // speculative token for this edge; drop it before enumerating.
    for row in &mut base.emb.rows {
        row.items.retain(|it| *it != Item::Passage(e));
    }
    // One pending item per row of the span, bottom to top; already-placed
    // endpoints contribute none.
    let mut steps: Vec<(usize, Item)> = Vec::new();
    for (ri, row) in base.emb.rows.iter().enumerate() {
        if row.level < lo || row.level > hi {
            continue;
        }
        if row.level == lo || row.level == hi {
            let v = if base.vlevel(t) == row.level { t } else { h };
            if base.emb.find_vertex(v).is_none() {
                steps.push((ri, Item::Vertex(v)));
            }
        } else {
            steps.push((ri, Item::Passage(e)));
        }
    }
    // When the top endpoint was already placed, the seam below its row is
    // never the "row just placed" during the descent and needs an explicit
    // final check.
    let top = if base.vlevel(t) == hi { t } else { h };
    let top_seam = base
        .emb
        .find_vertex(top)
        .map(|(ri, _)| ri - 1)
        .filter(|_| lo < hi);
    place_steps(&base, e, lo, &steps, top_seam, sink)
}

/// Recursive helper for [`edge_placements`]: puts down the pending items
/// row by row, checking the seam below each row once its item is placed.
fn place_steps<'g>(
    scene: &Scene<'g>,
    e: ERef,
    lo: Level,
    steps: &[(usize, Item)],
    top_seam: Option<usize>,
    sink: &mut dyn FnMut(Scene<'g>) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let Some((&(ri, item), rest)) = steps.split_first() else {
        if let Some(s) = top_seam {
            if curve_conflicts(scene, s, e) {
                return ControlFlow::Continue(());
            }
        }
        return sink(scene.clone());
    };
    let check_below = scene.emb.rows[ri].level > lo;
    for pos in 0..=scene.emb.rows[ri].items.len() {
        let mut next = scene.clone();
        next.emb.rows[ri].items.insert(pos, item);
        if check_below && curve_conflicts(&next, ri - 1, e) {
            continue;
        }
        place_steps(&next, e, lo, rest, top_seam, sink)?;
    }
    ControlFlow::Continue(())
}

/// Canonical candidate signature: stand-in ears are renamed to
/// (pair, rank of level within the pair's roster), parallel visibility
/// strands between one pair render identically, and the roster itself is
/// appended in canonical order.
pub fn canonical_signature(scene: &Scene) -> String {
    use std::fmt::Write;
    let aug = &scene.emb.aug;
    // Rank stand-ins per pair by level.
    let mut by_pair: HashMap<(V, V), Vec<(Level, usize)>> = HashMap::new();
    for (i, av) in aug.vertices.iter().enumerate() {
        if let Some(pair) = av.pair {
            by_pair.entry(pair).or_default().push((av.level, i));
        }
    }
    let mut rank: HashMap<usize, ((V, V), usize)> = HashMap::new();
    for (pair, mut list) in by_pair {
        list.sort();
        for (r, &(_, i)) in list.iter().enumerate() {
            rank.insert(i, (pair, r));
        }
    }
    let vtag = |v: VRef| -> String {
        match v {
            VRef::Base(b) => format!("v{b}"),
            VRef::Aug(i) => {
                let (pair, r) = rank[&i];
                format!("s{}:{}:{r}", pair.0, pair.1)
            }
        }
    };
    let etag = |e: ERef| -> String {
        match e {
            ERef::Base(b) => format!("e{b}"),
            ERef::Aug(i) => {
                let ae = &aug.edges[i];
                format!("a{:?}({},{})", ae.kind, vtag(ae.tail), vtag(ae.head))
            }
        }
    };
    let mut s = String::new();
    for row in &scene.emb.rows {
        let _ = write!(s, "{}[", row.level);
        for item in &row.items {
            match item {
                Item::Vertex(v) => {
                    let _ = write!(s, "{} ", vtag(*v));
                }
                Item::Passage(e) => {
                    let _ = write!(s, "|{} ", etag(*e));
                }
            }
        }
        let _ = write!(s, "]");
    }
    let mut roster: Vec<String> = aug
        .vertices
        .iter()
        .filter_map(|av| av.pair.map(|p| format!("R{}:{}@{}", p.0, p.1, av.level)))
        .collect();
    roster.sort();
    let _ = write!(s, "#{}", roster.join(","));
    // Edges spanning adjacent rows leave no passage tokens, so the row
    // rendering alone cannot tell candidates with different augmentation
    // edge sets apart; append the edge multiset.
    let mut aedges: Vec<String> = (0..aug.edges.len()).map(|i| etag(ERef::Aug(i))).collect();
    aedges.sort();
    let _ = write!(s, "${}", aedges.join(","));
    s
}

/// Collects up to `limit` candidates (no limit when `None`).
pub fn collect_candidates(
    g: &ConstrainedLevelGraph,
    cover: &HashSet<V>,
    caps: &Caps,
    limit: Option<usize>,
) -> Result<Vec<CoreCandidate>, Violation> {
    let mut out = Vec::new();
    let _ = enumerate_candidates(g, cover, caps, |c| {
        out.push(c);
        if limit.is_some_and(|l| out.len() >= l) {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_instance;

    /// Two cover vertices on levels 1 and 3 and one shared top ear at 4.
    fn instance_d() -> ConstrainedLevelGraph {
        parse_instance(
            r#"{"vertices":[{"id":"ca","level":1},{"id":"cb","level":3},
                            {"id":"v","level":4}],
                "edges":[["ca","v"],["cb","v"]],"constraints":[]}"#,
        )
        .unwrap()
    }

    #[test]
    fn candidate_levels_instance_d() {
        let g = instance_d();
        let cover: HashSet<V> =
            [g.vertex("ca").unwrap(), g.vertex("cb").unwrap()].into_iter().collect();
        let pair = (g.vertex("ca").unwrap(), g.vertex("cb").unwrap());
        let got = candidate_levels(&g, &cover, &[], pair);
        let want: BTreeSet<Level> = [
            Level::new(1, 2),
            Level::int(2),
            Level::new(7, 2),
            Level::new(9, 2),
        ]
        .into_iter()
        .collect();
        assert_eq!(got, want);
    }

    /// Candidates whose rows coincide but whose visibility edges join
    /// different cover pairs are distinct: edges between adjacent levels
    /// leave no passage tokens, so the rows alone cannot tell them apart.
    /// A three-edge matching needs this — only one visibility pairing
    /// admits the constrained completion.
    #[test]
    fn candidates_differ_by_visibility_pair_alone() {
        let g = parse_instance(
            r#"{"vertices":[{"id":"v0","level":2},{"id":"v1","level":1},
                            {"id":"v2","level":2},{"id":"v3","level":1},
                            {"id":"v4","level":2},{"id":"v5","level":1}],
                "edges":[["v3","v2"],["v1","v4"],["v5","v0"]],
                "constraints":[{"level":1,"pairs":[["v5","v3"]]},
                               {"level":2,"pairs":[["v0","v2"],["v2","v4"]]}]}"#,
        )
        .unwrap();
        let cover: HashSet<V> = [
            g.vertex("v3").unwrap(),
            g.vertex("v4").unwrap(),
            g.vertex("v5").unwrap(),
        ]
        .into_iter()
        .collect();
        let cands = collect_candidates(&g, &cover, &Caps::for_k(3), None).unwrap();
        let mut edge_sets: BTreeSet<String> = BTreeSet::new();
        for c in &cands {
            edge_sets.insert(format!("{:?}", c.emb.aug.edges));
        }
        assert_eq!(cands.len(), edge_sets.len());
        let v3 = VRef::Base(g.vertex("v3").unwrap());
        let v4 = VRef::Base(g.vertex("v4").unwrap());
        let has_v3_v4_only = cands.iter().any(|c| {
            let vis: Vec<_> = c
                .emb
                .aug
                .edges
                .iter()
                .filter(|ae| ae.kind == AugEdgeKind::Visibility)
                .collect();
            vis.len() == 1 && vis[0].tail == v3 && vis[0].head == v4
        });
        assert!(has_v3_v4_only);
    }

    #[test]
    fn candidate_levels_two_bare_cover_vertices() {
        let g = parse_instance(
            r#"{"vertices":[{"id":"c1","level":1},{"id":"c2","level":2}],
                "edges":[],"constraints":[]}"#,
        )
        .unwrap();
        let cover: HashSet<V> = [0, 1].into_iter().collect();
        let got = candidate_levels(&g, &cover, &[], (0, 1));
        for l in [Level::new(1, 2), Level::new(3, 2), Level::new(5, 2)] {
            assert!(got.contains(&l), "missing {l}");
        }
    }

    #[test]
    fn candidate_levels_react_to_placed_standins() {
        let g = instance_d();
        let cover: HashSet<V> = [0, 1].into_iter().collect();
        let placed = vec![((0, 1), Level::new(9, 2))];
        let got = candidate_levels(&g, &cover, &placed, (0, 1));
        // The placed stand-in at 9/2 is an anchor and an occupied level:
        // midpoints directly above it and between 4 and 9/2 appear.
        assert!(got.contains(&Level::new(17, 4)));
        assert!(got.contains(&Level::int(5)));
    }

    #[test]
    fn bare_edge_instance_yields_single_candidate() {
        let g = parse_instance(
            r#"{"vertices":[{"id":"c1","level":1},{"id":"c2","level":2}],
                "edges":[["c1","c2"]],"constraints":[]}"#,
        )
        .unwrap();
        let cover: HashSet<V> = [0, 1].into_iter().collect();
        let cands =
            collect_candidates(&g, &cover, &Caps::for_k(2), None).unwrap();
        assert_eq!(cands.len(), 1);
        let emb = &cands[0].emb;
        assert_eq!(emb.rows.len(), 2);
        assert!(emb.aug.vertices.is_empty());
        assert_eq!(cands[0].order, vec![ERef::Base(0)]);
    }

    #[test]
    fn instance_d_contains_standin_candidate() {
        let g = instance_d();
        let cover: HashSet<V> = [0, 1].into_iter().collect();
        let cands =
            collect_candidates(&g, &cover, &Caps::for_k(2), None).unwrap();
        assert!(!cands.is_empty());
        // Some candidate has a stand-in ear of (ca, cb) above level 3 plus
        // at least one ca–cb visibility edge.
        let found = cands.iter().any(|c| {
            let has_standin = c
                .emb
                .aug
                .vertices
                .iter()
                .any(|av| av.pair == Some((0, 1)) && av.level > Level::int(3));
            let has_vis = c
                .emb
                .aug
                .edges
                .iter()
                .any(|ae| ae.kind == AugEdgeKind::Visibility);
            has_standin && has_vis
        });
        assert!(found, "expected a stand-in + visibility candidate");
        // Rosters stay within two stand-ins per the per-side caps.
        assert!(cands
            .iter()
            .all(|c| c.emb.aug.vertices.len() <= Caps::for_k(2).roster));
    }

    #[test]
    fn infeasible_instance_still_has_candidates() {
        let g = parse_instance(
            r#"{"vertices":[{"id":"a1","level":1},{"id":"a2","level":1},
                            {"id":"b1","level":2},{"id":"b2","level":2}],
                "edges":[["a1","b1"],["a2","b2"]],
                "constraints":[{"level":1,"pairs":[["a1","a2"]]},
                               {"level":2,"pairs":[["b2","b1"]]}]}"#,
        )
        .unwrap();
        let cover: HashSet<V> =
            [g.vertex("a1").unwrap(), g.vertex("a2").unwrap()].into_iter().collect();
        let cands =
            collect_candidates(&g, &cover, &Caps::for_k(2), None).unwrap();
        assert!(!cands.is_empty());
    }

    #[test]
    fn candidates_validate_and_respect_constraints() {
        let g = instance_d();
        let cover: HashSet<V> = [0, 1].into_iter().collect();
        for c in collect_candidates(&g, &cover, &Caps::for_k(2), None).unwrap() {
            let scene = Scene::from_embedding(&g, c.emb.clone());
            assert!(check_scene(&scene, true).ok(), "candidate must validate");
        }
    }

    #[test]
    fn single_cover_vertex_candidate() {
        // Star: center c@2 with leaves on 1 and 3; core is just c.
        let g = parse_instance(
            r#"{"vertices":[{"id":"c","level":2},{"id":"x","level":1},
                            {"id":"y","level":3}],
                "edges":[["x","c"],["c","y"]],"constraints":[]}"#,
        )
        .unwrap();
        let cover: HashSet<V> = [g.vertex("c").unwrap()].into_iter().collect();
        let cands =
            collect_candidates(&g, &cover, &Caps::for_k(1), None).unwrap();
        assert_eq!(cands.len(), 1);
        assert_eq!(cands[0].emb.rows.len(), 1);
        assert_eq!(cands[0].emb.rows[0].items.len(), 1);
    }
}
