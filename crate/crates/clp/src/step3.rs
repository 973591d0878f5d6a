//! Leaf and ear insertion (second half of Step 3).
//!
//! Starting from a core drawing with transitions in place, this module
//! normalizes the drawing ([`crate::cells::augment_normalize`]), cuts it
//! into cells, enumerates channels, and then searches for a completion
//! that inserts every real ear and leaf:
//!
//! * ears are drawn as *hats* — two edges from the cover pair meeting at
//!   the ear vertex — enumerated over all crossing-free positions;
//! * leaves are drawn inside channels, organized into *waves*: each wave
//!   activates a set of channels whose sources do not interfere
//!   (property T1), and a channel once deactivated never returns
//!   (property T2). Within a wave, leaves are inserted greedily subject
//!   to their same-level predecessor constraints.
//!
//! A successful completion returns the final embedding together with a
//! [`Certificate`] recording the channel set, the traversal sequence of
//! waves, per-level insertion sequences, and ear orientations; the
//! certificate is audited against the structural properties the search
//! maintains by construction.

use crate::cells::{
    augment_normalize, channel_count_report, decompose_cells, enumerate_channels, t1_compatible,
    usable_by, CellDecomposition, Channel, ChannelCountReport,
};
use crate::core_enum::{rows_signature, Caps};
use crate::cover::{classify_vertices, Classification};
use crate::embedding::{ERef, Item, LevelEmbedding, Scene, VRef};
use crate::level::Level;
use crate::model::{ConstrainedLevelGraph, E, V};
use crate::transitions::TransitionOutcome;
use crate::validator::check_scene;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::cell::Cell;
use std::ops::ControlFlow;

/// Which side of its pair's column an ear ends up on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

/// Proof artifacts of a successful completion.
#[derive(Clone, Debug)]
pub struct Certificate {
    /// All channels enumerated over the normalized core.
    pub channels: Vec<Channel>,
    /// The traversal sequence: wave `j` (1-based) activated `traversal[j-1]`.
    pub traversal: Vec<BTreeSet<usize>>,
    /// Per level: leaves in insertion order with their wave index.
    pub insertion: BTreeMap<Level, Vec<(V, usize)>>,
    /// The channel each leaf was drawn in.
    pub leaf_channels: BTreeMap<V, usize>,
    /// Per level: ear orientations.
    pub orientations: BTreeMap<Level, Vec<(V, Side)>>,
    /// Channel-count audit.
    pub channel_report: ChannelCountReport,
    /// Violations of the traversal/insertion properties (empty on a
    /// healthy run; populated defensively, never silently dropped).
    pub audit: Vec<String>,
}

/// Outcome of the completion search for one core candidate.
#[derive(Clone, Debug)]
pub enum Step3Result {
    Found(LevelEmbedding, Box<Certificate>),
    No,
    Exhausted,
}

/// Crossing test between rows `ri` and `ri + 1`: two curves touching both
/// rows must not swap sides. Tolerant of partially inserted curves (a
/// curve missing from either row is ignored).
fn rows_conflict(scene: &Scene, ri: usize) -> bool {
    if ri + 1 >= scene.emb.rows.len() {
        return false;
    }
    let la = scene.emb.rows[ri].level;
    let lb = scene.emb.rows[ri + 1].level;
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for e in scene.all_edge_refs() {
        if scene.is_horizontal(e) {
            continue;
        }
        let (lo, hi) = scene.span(e);
        if !(lo <= la && hi >= lb) {
            continue;
        }
        if let (Some(pa), Some(pb)) = (
            scene.edge_pos_on_row(e, ri),
            scene.edge_pos_on_row(e, ri + 1),
        ) {
            pairs.push((pa, pb));
        }
    }
    for i in 0..pairs.len() {
        for j in 0..pairs.len() {
            if pairs[i].0 < pairs[j].0 && pairs[i].1 > pairs[j].1 {
                return true;
            }
        }
    }
    false
}

/// Like [`rows_conflict`] restricted to inversions involving one curve;
/// sufficient after an insertion that only touched that curve, and much
/// cheaper than the full pairwise scan.
pub(crate) fn curve_conflicts(scene: &Scene, ri: usize, e: ERef) -> bool {
    if ri + 1 >= scene.emb.rows.len() {
        return false;
    }
    let la = scene.emb.rows[ri].level;
    let lb = scene.emb.rows[ri + 1].level;
    let (lo, hi) = scene.span(e);
    if !(lo <= la && hi >= lb) {
        return false;
    }
    // One pass per row gives O(1) curve position lookups.
    let row_map = |ri: usize| {
        let mut verts: HashMap<VRef, usize> = HashMap::new();
        let mut tokens: HashMap<ERef, usize> = HashMap::new();
        for (p, it) in scene.emb.rows[ri].items.iter().enumerate() {
            match *it {
                Item::Vertex(v) => {
                    verts.insert(v, p);
                }
                Item::Passage(f) => {
                    tokens.insert(f, p);
                }
            }
        }
        (verts, tokens)
    };
    let (va, ta) = row_map(ri);
    let (vb, tb) = row_map(ri + 1);
    let pos = |f: ERef, verts: &HashMap<VRef, usize>, tokens: &HashMap<ERef, usize>| {
        tokens.get(&f).copied().or_else(|| {
            let (t, h) = scene.endpoints(f);
            verts.get(&t).copied().or_else(|| verts.get(&h).copied())
        })
    };
    let (pa, pb) = match (pos(e, &va, &ta), pos(e, &vb, &tb)) {
        (Some(a), Some(b)) => (a, b),
        _ => return false,
    };
    for f in scene.all_edge_refs() {
        if f == e || scene.is_horizontal(f) {
            continue;
        }
        let (flo, fhi) = scene.span(f);
        if !(flo <= la && fhi >= lb) {
            continue;
        }
        if let (Some(qa), Some(qb)) = (pos(f, &va, &ta), pos(f, &vb, &tb)) {
            if (pa < qa && pb > qb) || (qa < pa && qb > pb) {
                return true;
            }
        }
    }
    false
}

/// The two base edges incident to a degree-2 vertex.
fn incident_edges(g: &ConstrainedLevelGraph, x: V) -> Vec<E> {
    g.edges()
        .iter()
        .enumerate()
        .filter(|(_, &(t, h))| t == x || h == x)
        .map(|(i, _)| i)
        .collect()
}

/// Enumerates every crossing-free insertion of ear `x`'s hat into `scene`,
/// feeding each resulting scene to `sink`.
fn enumerate_hat<'g>(
    scene: &Scene<'g>,
    x: V,
    nodes: &Cell<u64>,
    budget: u64,
    sink: &mut dyn FnMut(Scene<'g>) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let g = scene.g;
    let apex = g.level(x);
    let mut base = scene.clone();
    base.ensure_row(apex);
    let edges: Vec<ERef> = incident_edges(g, x).into_iter().map(ERef::Base).collect();
    // Rows needing new items, in ascending order.
    let mut affected: Vec<(usize, Vec<Item>)> = Vec::new();
    for ri in 0..base.emb.rows.len() {
        let l = base.emb.rows[ri].level;
        let mut items = Vec::new();
        for &e in &edges {
            let (lo, hi) = base.span(e);
            if lo < l && l < hi {
                items.push(Item::Passage(e));
            }
        }
        if l == apex {
            items.push(Item::Vertex(VRef::Base(x)));
        }
        if !items.is_empty() {
            affected.push((ri, items));
        }
    }
    rec_rows(&base, &affected, 0, nodes, budget, sink)
}

/// Recursive placement of one new curve bundle across its affected rows.
fn rec_rows<'g>(
    scene: &Scene<'g>,
    affected: &[(usize, Vec<Item>)],
    idx: usize,
    nodes: &Cell<u64>,
    budget: u64,
    sink: &mut dyn FnMut(Scene<'g>) -> ControlFlow<()>,
) -> ControlFlow<()> {
    if nodes.get() >= budget {
        return ControlFlow::Break(());
    }
    nodes.set(nodes.get() + 1);
    if idx == affected.len() {
        // Final guard against the row beyond the last affected one.
        if let Some(&(ri, _)) = affected.last() {
            if rows_conflict(scene, ri) {
                return ControlFlow::Continue(());
            }
        }
        return sink(scene.clone());
    }
    let (ri, items) = &affected[idx];
    let len = scene.emb.rows[*ri].items.len();
    let orders: Vec<Vec<Item>> = if items.len() == 2 {
        vec![items.clone(), vec![items[1], items[0]]]
    } else {
        vec![items.clone()]
    };
    for order in &orders {
        if order.len() == 1 {
            for i in (0..=len).rev() {
                let mut s = scene.clone();
                s.emb.rows[*ri].items.insert(i, order[0]);
                if *ri > 0 && rows_conflict(&s, ri - 1) {
                    continue;
                }
                rec_rows(&s, affected, idx + 1, nodes, budget, sink)?;
            }
        } else {
            for i in (0..=len).rev() {
                for j in (i..=len).rev() {
                    let mut s = scene.clone();
                    s.emb.rows[*ri].items.insert(j, order[1]);
                    s.emb.rows[*ri].items.insert(i, order[0]);
                    if *ri > 0 && rows_conflict(&s, ri - 1) {
                        continue;
                    }
                    rec_rows(&s, affected, idx + 1, nodes, budget, sink)?;
                }
            }
        }
    }
    ControlFlow::Continue(())
}

/// Inserts every real ear of the instance, in every order and position
/// (deduplicated by drawing), feeding each complete scene to `sink`.
fn insert_ears_dfs<'g>(
    scene: &Scene<'g>,
    remaining: &[V],
    memo: &mut HashSet<String>,
    nodes: &Cell<u64>,
    budget: u64,
    sink: &mut dyn FnMut(Scene<'g>) -> ControlFlow<()>,
) -> ControlFlow<()> {
    if remaining.is_empty() {
        return sink(scene.clone());
    }
    let mut key = rows_signature(&scene.emb);
    for v in remaining {
        key.push_str(&format!(",{v}"));
    }
    if !memo.insert(key) {
        return ControlFlow::Continue(());
    }
    for (i, &x) in remaining.iter().enumerate() {
        let rest: Vec<V> = remaining
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &v)| v)
            .collect();
        enumerate_hat(scene, x, nodes, budget, &mut |s| {
            if !check_scene(&s, true).violations.is_empty() {
                return ControlFlow::Continue(());
            }
            insert_ears_dfs(&s, &rest, memo, nodes, budget, sink)
        })?;
    }
    ControlFlow::Continue(())
}

/// Insertion-index interval allowed by `chain` on row `ri` (intersection
/// of the chain cells covering the row's level).
fn corridor_interval(
    deco: &CellDecomposition,
    chain: &[usize],
    scene: &Scene,
    ri: usize,
) -> Option<(usize, usize)> {
    let l = scene.emb.rows[ri].level;
    let mut acc: Option<(usize, usize)> = None;
    for &ci in chain {
        let (lo, hi) = deco.bands[deco.cells[ci].band];
        let covers = lo.map_or(true, |a| l >= a) && hi.map_or(true, |b| l <= b);
        if !covers {
            continue;
        }
        let (a, b) = deco.interval_on_row(scene, ci, ri);
        acc = Some(match acc {
            None => (a, b),
            Some((x, y)) => (x.max(a), y.min(b)),
        });
    }
    acc.filter(|&(a, b)| a <= b)
}

struct Success<'g> {
    scene: Scene<'g>,
    records: Vec<(V, usize, usize)>,
    waves: Vec<BTreeSet<usize>>,
}

/// The wave-structured leaf search.
struct LeafEngine<'g, 'a> {
    g: &'g ConstrainedLevelGraph,
    deco: &'a CellDecomposition,
    channels: &'a [Channel],
    /// Pairwise T1 compatibility over the pristine normalized scene.
    compat: Vec<Vec<bool>>,
    /// leaf -> usable channel indices.
    usable: HashMap<V, Vec<usize>>,
    /// leaf -> same-level constraint predecessors that are leaves.
    preds: HashMap<V, Vec<V>>,
    cap_waves: usize,
    memo: HashSet<String>,
    nodes: u64,
    budget: u64,
    exhausted: bool,
}

impl<'g, 'a> LeafEngine<'g, 'a> {
    fn search(
        &mut self,
        scene: &Scene<'g>,
        remaining: &BTreeSet<V>,
        waves: &[BTreeSet<usize>],
        current: &BTreeSet<usize>,
        closed: &BTreeSet<usize>,
        records: &[(V, usize, usize)],
    ) -> Option<Success<'g>> {
        if self.nodes >= self.budget {
            self.exhausted = true;
            return None;
        }
        self.nodes += 1;
        if remaining.is_empty() {
            let mut all_waves = waves.to_vec();
            if !current.is_empty() {
                all_waves.push(current.clone());
            }
            return Some(Success {
                scene: scene.clone(),
                records: records.to_vec(),
                waves: all_waves,
            });
        }
        let key = format!(
            "{}|{:?}|{:?}|{:?}|{}",
            rows_signature(&scene.emb),
            remaining,
            current,
            closed,
            waves.len()
        );
        if !self.memo.insert(key) {
            return None;
        }
        let choosable: Vec<V> = remaining
            .iter()
            .copied()
            .filter(|w| {
                self.preds
                    .get(w)
                    .map_or(true, |ps| ps.iter().all(|p| !remaining.contains(p)))
            })
            .collect();
        for &w in &choosable {
            // Channels already open first, then newly openable ones.
            let mut cands: Vec<usize> = self
                .usable
                .get(&w)
                .cloned()
                .unwrap_or_default()
                .into_iter()
                .filter(|c| {
                    if current.contains(c) {
                        return true;
                    }
                    !closed.contains(c) && current.iter().all(|&o| self.compat[o][*c])
                })
                .collect();
            cands.sort_by_key(|c| !current.contains(c));
            for c in cands {
                let mut options: Vec<Scene<'g>> = Vec::new();
                let _ = self.leaf_insertions(scene, w, c, &mut |s| {
                    options.push(s);
                    ControlFlow::Continue(())
                });
                for s in options {
                    let mut rem = remaining.clone();
                    rem.remove(&w);
                    let mut cur = current.clone();
                    cur.insert(c);
                    let mut recs = records.to_vec();
                    recs.push((w, waves.len() + 1, c));
                    if let Some(win) = self.search(&s, &rem, waves, &cur, closed, &recs) {
                        return Some(win);
                    }
                    if self.exhausted {
                        return None;
                    }
                }
            }
        }
        // Close the current wave and continue in a fresh one.
        if !current.is_empty() && waves.len() + 1 < self.cap_waves {
            let mut ws = waves.to_vec();
            ws.push(current.clone());
            let mut cl = closed.clone();
            cl.extend(current.iter().copied());
            let empty = BTreeSet::new();
            if let Some(win) = self.search(scene, remaining, &ws, &empty, &cl, records) {
                return Some(win);
            }
        }
        None
    }

    /// Enumerates crossing-free drawings of leaf `w`'s edge inside channel
    /// `c`'s corridor.
    fn leaf_insertions(
        &mut self,
        scene: &Scene<'g>,
        w: V,
        c: usize,
        sink: &mut dyn FnMut(Scene<'g>) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let g = self.g;
        let ch = &self.channels[c];
        let v = ch.v;
        let e = ERef::Base(
            incident_edges(g, w)
                .into_iter()
                .next()
                .expect("leaves have one edge"),
        );
        let (lw, lv) = (g.level(w), g.level(v));
        let mut base = scene.clone();
        base.ensure_row(lw);
        let (lo, hi) = if lw < lv { (lw, lv) } else { (lv, lw) };
        let mut rows: Vec<usize> = base.rows_strictly_between(lo, hi);
        rows.push(base.emb.row_at(lw).expect("leaf row ensured"));
        rows.sort();
        if !ch.up {
            rows.reverse();
        }
        self.rec_leaf(&base, w, e, ch, &rows, 0, sink)
    }

    fn rec_leaf(
        &mut self,
        scene: &Scene<'g>,
        w: V,
        e: ERef,
        ch: &Channel,
        rows: &[usize],
        idx: usize,
        sink: &mut dyn FnMut(Scene<'g>) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if self.nodes >= self.budget {
            self.exhausted = true;
            return ControlFlow::Break(());
        }
        self.nodes += 1;
        if idx == rows.len() {
            // Guard the row beyond the far end of the new curve.
            let last = rows[rows.len() - 1];
            let guard = if ch.up { last } else { last.wrapping_sub(1) };
            if guard < scene.emb.rows.len() && curve_conflicts(scene, guard, e) {
                return ControlFlow::Continue(());
            }
            // No full scene check here: the insertion touched only the new
            // curve and the leaf vertex, and the per-row checks above cover
            // both; the pipeline re-validates every completed scene.
            return sink(scene.clone());
        }
        let ri = rows[idx];
        let lw = self.g.level(w);
        let item = if scene.emb.rows[ri].level == lw {
            Item::Vertex(VRef::Base(w))
        } else {
            Item::Passage(e)
        };
        let (a, b) = match corridor_interval(self.deco, &ch.cells, scene, ri) {
            Some(x) => x,
            None => return ControlFlow::Continue(()),
        };
        // Same-level constraints involving `w` restrict its own row
        // directly; check them before the crossing scan.
        let own_row = scene.emb.rows[ri].level == lw;
        let pairs: Vec<(V, V)> = if own_row {
            self.g
                .constraints()
                .get(&lw)
                .map(|ps| {
                    ps.iter()
                        .filter(|&&(x, y)| x == w || y == w)
                        .copied()
                        .collect()
                })
                .unwrap_or_default()
        } else {
            Vec::new()
        };
        'positions: for p in (a..=b).rev() {
            if own_row {
                for &(x, y) in &pairs {
                    let other = if x == w { y } else { x };
                    if let Some(q) = scene.emb.rows[ri]
                        .items
                        .iter()
                        .position(|it| *it == Item::Vertex(VRef::Base(other)))
                    {
                        // Position after insertion at p: items at q >= p shift.
                        let q = if q >= p { q + 1 } else { q };
                        let ok = if x == w { p < q } else { q < p };
                        if !ok {
                            continue 'positions;
                        }
                    }
                }
            }
            let mut s = scene.clone();
            s.emb.rows[ri].items.insert(p, item);
            // Check against the neighbor row on the source side, which is
            // already final; only the new curve can introduce an inversion.
            let toward = if ch.up { ri.wrapping_sub(1) } else { ri };
            if toward < s.emb.rows.len() && curve_conflicts(&s, toward, e) {
                continue;
            }
            self.rec_leaf(&s, w, e, ch, rows, idx + 1, sink)?;
        }
        ControlFlow::Continue(())
    }
}

/// Orientation label for a placed ear: `Left` iff its apex lies left of
/// every structure joining its cover pair on the apex row.
fn orientation_of(scene: &Scene, x: V, pair: (V, V)) -> Side {
    let (ri, px) = match scene.emb.find_vertex(VRef::Base(x)) {
        Some(p) => p,
        None => return Side::Right,
    };
    // A structure joins the pair when both endpoints belong to it; a
    // stand-in ear of the pair counts as either member.
    let member = |v: VRef| match v {
        VRef::Base(b) => b == pair.0 || b == pair.1,
        VRef::Aug(i) => scene.emb.aug.vertices[i].pair == Some(pair),
    };
    let mut best: Option<usize> = None;
    for e in scene.all_edge_refs() {
        let (t, h) = scene.endpoints(e);
        if !(member(t) && member(h)) {
            continue;
        }
        if let Some(p) = scene.edge_pos_on_row(e, ri) {
            best = Some(best.map_or(p, |q: usize| q.min(p)));
        }
    }
    match best {
        Some(p) if px < p => Side::Left,
        _ => Side::Right,
    }
}

/// Audits a finished run: T2 intervals, insertion-sequence properties
/// I1–I4, and channel usability (I3). T1 holds per wave by construction
/// and is re-checked here against the pristine normalized scene.
#[allow(clippy::too_many_arguments)]
fn audit_certificate(
    g: &ConstrainedLevelGraph,
    deco: &CellDecomposition,
    scene_t: &Scene,
    channels: &[Channel],
    traversal: &[BTreeSet<usize>],
    records: &[(V, usize, usize)],
    usable: &HashMap<V, Vec<usize>>,
    preds: &HashMap<V, Vec<V>>,
) -> Vec<String> {
    let mut out = Vec::new();
    // T1 per wave.
    for (j, set) in traversal.iter().enumerate() {
        let refs: Vec<&Channel> = set.iter().map(|&c| &channels[c]).collect();
        if !t1_compatible(deco, scene_t, g, &refs) {
            out.push(format!("wave {} violates T1", j + 1));
        }
    }
    // T2: activity of each channel is one interval.
    let mut active: HashMap<usize, Vec<usize>> = HashMap::new();
    for (j, set) in traversal.iter().enumerate() {
        for &c in set {
            active.entry(c).or_default().push(j);
        }
    }
    for (c, js) in &active {
        if js.windows(2).any(|w| w[1] != w[0] + 1) {
            out.push(format!("channel {c} active on a non-interval (T2)"));
        }
    }
    // I1: each leaf inserted exactly once.
    let mut seen = HashSet::new();
    for &(w, _, _) in records {
        if !seen.insert(w) {
            out.push(format!("leaf {w} inserted twice (I1)"));
        }
    }
    let mut per_level: BTreeMap<Level, Vec<(V, usize, usize)>> = BTreeMap::new();
    for &(w, j, c) in records {
        per_level.entry(g.level(w)).or_default().push((w, j, c));
    }
    for (l, seq) in &per_level {
        // I2: wave indices are non-decreasing along each level sequence.
        if seq.windows(2).any(|w| w[1].1 < w[0].1) {
            out.push(format!("level {l}: wave indices decrease (I2)"));
        }
        // I3: the channel is usable and active in the recorded wave.
        for &(w, j, c) in seq {
            if !usable.get(&w).is_some_and(|u| u.contains(&c)) {
                out.push(format!("leaf {w} drawn in unusable channel {c} (I3)"));
            }
            if j == 0 || j > traversal.len() || !traversal[j - 1].contains(&c) {
                out.push(format!("leaf {w}: channel {c} inactive in wave {j} (I3)"));
            }
        }
        // I4: same-level predecessors first.
        for (i, &(w, _, _)) in seq.iter().enumerate() {
            if let Some(ps) = preds.get(&w) {
                for p in ps {
                    if seq.iter().skip(i + 1).any(|&(x, _, _)| x == *p) {
                        out.push(format!("leaf {w} precedes its predecessor {p} (I4)"));
                    }
                }
            }
        }
    }
    out
}

/// Runs the full Step-3 completion for one core candidate with transitions
/// already inserted. The instance must have no isolated vertices (the
/// pipeline strips and reinserts those separately).
pub fn claim15_pipeline(
    g: &ConstrainedLevelGraph,
    cover: &HashSet<V>,
    core_emb: &LevelEmbedding,
    t_out: &TransitionOutcome,
    caps: &Caps,
    nodes: &mut u64,
    budget: u64,
) -> Step3Result {
    let cl = match classify_vertices(g, cover) {
        Ok(c) => c,
        Err(_) => return Step3Result::No,
    };
    let (core_plus, t_plus, info) = augment_normalize(g, core_emb, &t_out.emb, &t_out.placements);
    let core_scene = Scene::from_embedding(g, core_plus);
    let deco = decompose_cells(&core_scene, &info);
    let scene_t = Scene::from_embedding(g, t_plus);
    let channels = enumerate_channels(&deco, &scene_t, cover);
    let channel_report = channel_count_report(&deco, &channels, cover.len());

    // Usable channels per leaf.
    let mut usable: HashMap<V, Vec<usize>> = HashMap::new();
    for &(w, v) in &cl.leaves {
        let u: Vec<usize> = channels
            .iter()
            .enumerate()
            .filter(|(_, c)| usable_by(&deco, g, c, w, v))
            .map(|(i, _)| i)
            .collect();
        if u.is_empty() {
            return Step3Result::No;
        }
        usable.insert(w, u);
    }
    // Same-level leaf predecessors from the constraint closure.
    let leaf_set: HashSet<V> = cl.leaves.iter().map(|&(w, _)| w).collect();
    let mut preds: HashMap<V, Vec<V>> = HashMap::new();
    for &(w, _) in &cl.leaves {
        let closure = match g.constraint_closure(g.level(w)) {
            Some(c) => c,
            None => return Step3Result::No,
        };
        for (a, b) in closure {
            if b == w && leaf_set.contains(&a) {
                preds.entry(w).or_default().push(a);
            }
        }
    }

    let union: BTreeSet<usize> = usable.values().flatten().copied().collect();
    let k = cover.len();
    let cap_waves = (caps.traversal_factor * k * k).min(2 * union.len() + 1).max(1);
    let compat: Vec<Vec<bool>> = (0..channels.len())
        .map(|i| {
            (0..channels.len())
                .map(|j| t1_compatible(&deco, &scene_t, g, &[&channels[i], &channels[j]]))
                .collect()
        })
        .collect();

    let ears: Vec<V> = cl.ears.iter().map(|&(v, _, _)| v).collect();
    let mut ear_memo = HashSet::new();
    let mut result = Step3Result::No;
    let node_cell = Cell::new(*nodes);
    let flow = insert_ears_dfs(
        &scene_t,
        &ears,
        &mut ear_memo,
        &node_cell,
        budget,
        &mut |scene_with_ears| {
            let mut engine = LeafEngine {
                g,
                deco: &deco,
                channels: &channels,
                compat: compat.clone(),
                usable: usable.clone(),
                preds: preds.clone(),
                cap_waves,
                memo: HashSet::new(),
                nodes: node_cell.get(),
                budget,
                exhausted: false,
            };
            let remaining: BTreeSet<V> = leaf_set.iter().copied().collect();
            let win = engine.search(
                &scene_with_ears,
                &remaining,
                &[],
                &BTreeSet::new(),
                &BTreeSet::new(),
                &[],
            );
            node_cell.set(engine.nodes);
            if engine.exhausted {
                result = Step3Result::Exhausted;
                return ControlFlow::Break(());
            }
            if let Some(win) = win {
                // Soundness gate: the finished drawing must validate.
                if !check_scene(&win.scene, false).violations.is_empty() {
                    return ControlFlow::Continue(());
                }
                let mut insertion: BTreeMap<Level, Vec<(V, usize)>> = BTreeMap::new();
                let mut leaf_channels = BTreeMap::new();
                for &(w, j, c) in &win.records {
                    insertion.entry(g.level(w)).or_default().push((w, j));
                    leaf_channels.insert(w, c);
                }
                let mut orientations: BTreeMap<Level, Vec<(V, Side)>> = BTreeMap::new();
                for &(x, pair, _) in &cl.ears {
                    orientations
                        .entry(g.level(x))
                        .or_default()
                        .push((x, orientation_of(&win.scene, x, pair)));
                }
                let audit = audit_certificate(
                    g,
                    &deco,
                    &scene_t,
                    &channels,
                    &win.waves,
                    &win.records,
                    &usable,
                    &preds,
                );
                result = Step3Result::Found(
                    win.scene.emb.clone(),
                    Box::new(Certificate {
                        channels: channels.clone(),
                        traversal: win.waves,
                        insertion,
                        leaf_channels,
                        orientations,
                        channel_report,
                        audit,
                    }),
                );
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        },
    );
    *nodes = node_cell.get();
    if matches!(result, Step3Result::No)
        && flow == ControlFlow::Break(())
        && *nodes >= budget
    {
        return Step3Result::Exhausted;
    }
    result
}

/// Enumerates canonical traversal sequences over the usable channels:
/// sequences of nonempty, pairwise-T1-compatible channel sets where
/// consecutive sets differ and a deactivated channel never returns.
/// The empty sequence is included.
pub fn enumerate_traversal_sequences(
    deco: &CellDecomposition,
    scene_t: &Scene,
    g: &ConstrainedLevelGraph,
    channels: &[Channel],
    usable_union: &BTreeSet<usize>,
    k: usize,
    caps: &Caps,
) -> Vec<Vec<BTreeSet<usize>>> {
    let cap = (caps.traversal_factor * k * k)
        .min(2 * usable_union.len() + 1)
        .max(1);
    let ids: Vec<usize> = usable_union.iter().copied().collect();
    // All nonempty T1-compatible subsets.
    let mut sets: Vec<BTreeSet<usize>> = Vec::new();
    for mask in 1u64..(1 << ids.len()) {
        let set: BTreeSet<usize> = ids
            .iter()
            .enumerate()
            .filter(|&(i, _)| mask >> i & 1 == 1)
            .map(|(_, &c)| c)
            .collect();
        let refs: Vec<&Channel> = set.iter().map(|&c| &channels[c]).collect();
        if t1_compatible(deco, scene_t, g, &refs) {
            sets.push(set);
        }
    }
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Vec<BTreeSet<usize>>> = vec![Vec::new()];
    for _ in 0..cap {
        let mut next = Vec::new();
        for seq in &frontier {
            let prev = seq.last();
            let departed: BTreeSet<usize> = {
                let mut seen: BTreeSet<usize> = BTreeSet::new();
                for s in seq {
                    seen.extend(s.iter().copied());
                }
                match prev {
                    Some(p) => seen.difference(p).copied().collect(),
                    None => BTreeSet::new(),
                }
            };
            for s in &sets {
                if Some(s) == prev || s.intersection(&departed).next().is_some() {
                    continue;
                }
                let mut ext = seq.clone();
                ext.push(s.clone());
                out.push(ext.clone());
                next.push(ext);
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    out
}

/// Greedy per-level insertion sequence for a given traversal sequence:
/// walks the waves in order, inserting any leaf whose same-level
/// predecessors are done and which has a usable channel active in the
/// current wave. Returns `None` when some leaf never becomes insertable.
pub fn build_insertion_sequence(
    leaves: &[V],
    preds: &HashMap<V, Vec<V>>,
    usable: &HashMap<V, Vec<usize>>,
    traversal: &[BTreeSet<usize>],
) -> Option<Vec<(V, usize)>> {
    let mut remaining: BTreeSet<V> = leaves.iter().copied().collect();
    let mut out = Vec::new();
    for (j0, wave) in traversal.iter().enumerate() {
        let j = j0 + 1;
        loop {
            let pick = remaining.iter().copied().find(|w| {
                preds
                    .get(w)
                    .map_or(true, |ps| ps.iter().all(|p| !remaining.contains(p)))
                    && usable
                        .get(w)
                        .is_some_and(|u| u.iter().any(|c| wave.contains(c)))
            });
            match pick {
                Some(w) => {
                    remaining.remove(&w);
                    out.push((w, j));
                }
                None => break,
            }
        }
    }
    if remaining.is_empty() {
        Some(out)
    } else {
        None
    }
}

/// Enumerates the distinct ear orientations realizable for the ears of one
/// level (all crossing-free hat placements, labelled and deduplicated).
pub fn enumerate_ear_orientations(
    scene: &Scene,
    cl: &Classification,
    level: Level,
    nodes: &mut u64,
    budget: u64,
) -> Vec<Vec<(V, Side)>> {
    let ears: Vec<(V, (V, V))> = cl
        .ears
        .iter()
        .filter(|&&(v, _, _)| scene.g.level(v) == level)
        .map(|&(v, p, _)| (v, p))
        .collect();
    let ids: Vec<V> = ears.iter().map(|&(v, _)| v).collect();
    let mut memo = HashSet::new();
    let mut out: BTreeSet<Vec<(V, Side)>> = BTreeSet::new();
    let node_cell = Cell::new(*nodes);
    let _ = insert_ears_dfs(scene, &ids, &mut memo, &node_cell, budget, &mut |s| {
        let mut labels: Vec<(V, Side)> = ears
            .iter()
            .map(|&(v, p)| (v, orientation_of(&s, v, p)))
            .collect();
        labels.sort();
        out.insert(labels);
        ControlFlow::Continue(())
    });
    *nodes = node_cell.get();
    out.into_iter().collect()
}
