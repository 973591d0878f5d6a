//! Normalization and cell decomposition (first half of Step 3).
//!
//! Before leaves and ears are inserted, the core drawing is *normalized*:
//! every divider edge that hosts transitions gets two parallel copies
//! enclosing exactly its transition group, and every quad face between two
//! consecutive same-side stand-in ears of a pair gets copies of the outer
//! ear's edges, carving out a central *ear-face* reserved for the pair's
//! real ears. The normalized core is then cut into *cells*: horizontal
//! bands between consecutive occupied core levels, split at every curve
//! crossing the whole band. Cells drive the leaf machinery: a *channel*
//! `(v, r, R)` is a y-monotone chain `R` of vertically passable cells from
//! a cell incident to cover vertex `v` to a target cell `r`, and leaf
//! edges are drawn inside channels.
//!
//! Everything here is combinatorial: a cell is a level range plus its two
//! bounding curves, and all geometry questions reduce to item positions on
//! rows.

use crate::embedding::{AugEdge, AugEdgeKind, ERef, Item, LevelEmbedding, Scene, VRef};
use crate::level::Level;
use crate::model::{ConstrainedLevelGraph, V};
use crate::transitions::TransitionPlacement;
use std::collections::{HashMap, HashSet};

/// One carved ear-face: the central region between `left_copy` and
/// `right_copy`, reserved for real ears of `pair` on this side with levels
/// in `(inner, outer)`.
#[derive(Clone, Debug)]
pub struct EarFace {
    pub pair: (V, V),
    pub top: bool,
    /// Level of the inner stand-in.
    pub inner: Level,
    /// Level of the outer stand-in.
    pub outer: Level,
    pub left_copy: ERef,
    pub right_copy: ERef,
}

/// Bookkeeping produced by normalization.
#[derive(Clone, Debug, Default)]
pub struct NormalizeInfo {
    pub faces: Vec<EarFace>,
    /// Per transition-hosting divider: (host, left copy, right copy).
    pub divider_enclosures: Vec<(ERef, ERef, ERef)>,
}

/// Adds the normalization copies to both the bare core embedding and the
/// transition-bearing one (shared augmentation registry, same indices).
pub fn augment_normalize(
    g: &ConstrainedLevelGraph,
    core_emb: &LevelEmbedding,
    t_emb: &LevelEmbedding,
    placements: &[TransitionPlacement],
) -> (LevelEmbedding, LevelEmbedding, NormalizeInfo) {
    let mut core = Scene::from_embedding(g, core_emb.clone());
    let mut tsc = Scene::from_embedding(g, t_emb.clone());
    let mut info = NormalizeInfo::default();

    // Flanking copies around each transition-hosting divider.
    let mut groups: HashMap<ERef, Vec<V>> = HashMap::new();
    for p in placements {
        groups.entry(p.divider).or_default().push(p.vertex);
    }
    let mut hosts: Vec<ERef> = groups.keys().copied().collect();
    hosts.sort();
    for host in hosts {
        let group = &groups[&host];
        let (lo, hi) = tsc.span(host);
        // The bare core needs at least one row inside the span so the copy
        // order around the host is recorded.
        if core.rows_strictly_between(lo, hi).is_empty() {
            core.ensure_row(lo.midpoint(&hi));
        }
        let left = add_copy_both(&mut core, &mut tsc, host, |s, ri| {
            // Immediately left of the group's leftmost curve (the bare
            // core has no transitions: left of the host itself).
            group
                .iter()
                .filter_map(|&t| transition_pos_on_row(s, t, ri))
                .chain(s.edge_pos_on_row(host, ri))
                .min()
                .expect("host crosses its own strip")
        });
        let right = add_copy_both(&mut core, &mut tsc, host, |s, ri| {
            s.edge_pos_on_row(host, ri).expect("host present") + 1
        });
        info.divider_enclosures.push((host, left, right));
    }

    // Ear-face copies between consecutive same-side stand-ins.
    let mut standins: HashMap<((V, V), bool), Vec<(Level, usize)>> = HashMap::new();
    for (i, av) in core.emb.aug.vertices.iter().enumerate() {
        if let Some(pair) = av.pair {
            let top = av.level > g.level(pair.0).max(g.level(pair.1));
            standins.entry((pair, top)).or_default().push((av.level, i));
        }
    }
    let mut keys: Vec<((V, V), bool)> = standins.keys().copied().collect();
    keys.sort();
    for key in keys {
        let (pair, top) = key;
        let mut list = standins[&key].clone();
        // Inner to outer: ascending levels on top, descending below.
        list.sort();
        if !top {
            list.reverse();
        }
        for w in list.windows(2) {
            let (inner_level, _) = w[0];
            let (outer_level, outer_idx) = w[1];
            // The outer stand-in's two edges, left one first.
            let mut es: Vec<ERef> = core
                .emb
                .aug
                .edges
                .iter()
                .enumerate()
                .filter(|(_, ae)| {
                    ae.kind == AugEdgeKind::Ear
                        && (ae.tail == VRef::Aug(outer_idx) || ae.head == VRef::Aug(outer_idx))
                })
                .map(|(i, _)| ERef::Aug(i))
                .collect();
            // Order by position on the inner stand-in's row (inside both
            // edges' spans).
            let ri = core
                .emb
                .row_at(inner_level)
                .expect("inner stand-in row exists");
            es.sort_by_key(|&e| core.edge_pos_on_row(e, ri));
            let (e_left, e_right) = (es[0], es[1]);
            let left_copy = add_copy_both(&mut core, &mut tsc, e_left, |s, ri| {
                s.edge_pos_on_row(e_left, ri).expect("present") + 1
            });
            let right_copy = add_copy_both(&mut core, &mut tsc, e_right, |s, ri| {
                s.edge_pos_on_row(e_right, ri).expect("present")
            });
            info.faces.push(EarFace {
                pair,
                top,
                inner: inner_level,
                outer: outer_level,
                left_copy,
                right_copy,
            });
        }
    }

    (core.emb, tsc.emb, info)
}

/// Position of transition `t`'s curve (vertex or either incident edge
/// token) on row `ri`, if it touches the row.
fn transition_pos_on_row(scene: &Scene, t: V, ri: usize) -> Option<usize> {
    let row = &scene.emb.rows[ri];
    for (pi, item) in row.items.iter().enumerate() {
        match *item {
            Item::Vertex(VRef::Base(v)) if v == t => return Some(pi),
            Item::Passage(ERef::Base(e)) => {
                let (a, b) = scene.g.edges()[e];
                if a == t || b == t {
                    return Some(pi);
                }
            }
            _ => {}
        }
    }
    None
}

/// Appends a copy of `host` to both scenes (same augmentation index) and
/// lays its tokens at `place(scene, row)`-computed positions on every row
/// strictly inside the host's span. Returns the copy's edge reference.
fn add_copy_both<'g>(
    core: &mut Scene<'g>,
    tsc: &mut Scene<'g>,
    host: ERef,
    place: impl Fn(&Scene, usize) -> usize,
) -> ERef {
    let (t, h) = core.endpoints(host);
    debug_assert_eq!(core.emb.aug.edges.len(), tsc.emb.aug.edges.len());
    let idx = core.emb.aug.edges.len();
    let copy = AugEdge {
        tail: t,
        head: h,
        kind: AugEdgeKind::Copy,
    };
    core.emb.aug.edges.push(copy.clone());
    tsc.emb.aug.edges.push(copy);
    let e = ERef::Aug(idx);
    for scene in [core, tsc] {
        let (lo, hi) = scene.span(host);
        for ri in scene.rows_strictly_between(lo, hi) {
            let p = place(scene, ri);
            scene.emb.rows[ri].items.insert(p, Item::Passage(e));
        }
    }
    e
}

/// One cell: a band of levels between two bounding curves (`None` =
/// unbounded on that side).
#[derive(Clone, Debug)]
pub struct Cell {
    pub band: usize,
    pub left: Option<ERef>,
    pub right: Option<ERef>,
    pub ear_face: bool,
    pub has_transitions: bool,
}

/// Bands (level ranges; `None` = half-plane) and their cells, computed on
/// the normalized bare core.
#[derive(Clone, Debug)]
pub struct CellDecomposition {
    pub bands: Vec<(Option<Level>, Option<Level>)>,
    pub cells: Vec<Cell>,
}

impl CellDecomposition {
    /// Band index whose open interior contains `level`, or whose boundary
    /// equals it (preferring the band below when `level` is a boundary and
    /// `from_below` is set).
    pub fn band_of(&self, level: Level, from_below: bool) -> Option<usize> {
        for (i, &(lo, hi)) in self.bands.iter().enumerate() {
            let above_lo = lo.map_or(true, |l| level > l);
            let below_hi = hi.map_or(true, |h| level < h);
            if above_lo && below_hi {
                return Some(i);
            }
            if from_below && hi == Some(level) {
                return Some(i);
            }
            if !from_below && lo == Some(level) {
                return Some(i);
            }
        }
        None
    }

    /// Insertion-index interval of `cell` on row `ri` of `scene`:
    /// positions `p` with `lo ≤ p ≤ hi` insert strictly between the cell's
    /// bounding curves.
    pub fn interval_on_row(&self, scene: &Scene, cell: usize, ri: usize) -> (usize, usize) {
        let c = &self.cells[cell];
        let lo = c
            .left
            .and_then(|e| scene.edge_pos_on_row(e, ri))
            .map_or(0, |p| p + 1);
        let hi = c
            .right
            .and_then(|e| scene.edge_pos_on_row(e, ri))
            .unwrap_or(scene.emb.rows[ri].items.len());
        (lo, hi)
    }

    /// Whether a y-monotone curve can pass from `a` (band i) into `b`
    /// (band i+1) through the shared row `ri` of `scene`.
    pub fn passable(&self, scene: &Scene, a: usize, b: usize, ri: usize) -> bool {
        let (la, ha) = self.interval_on_row(scene, a, ri);
        let (lb, hb) = self.interval_on_row(scene, b, ri);
        la.max(lb) <= ha.min(hb)
    }
}

/// Cuts the normalized bare core into cells.
pub fn decompose_cells(core_plus: &Scene, info: &NormalizeInfo) -> CellDecomposition {
    let rows = &core_plus.emb.rows;
    let mut bands: Vec<(Option<Level>, Option<Level>)> = Vec::new();
    if rows.is_empty() {
        bands.push((None, None));
    } else {
        bands.push((None, Some(rows[0].level)));
        for w in rows.windows(2) {
            bands.push((Some(w[0].level), Some(w[1].level)));
        }
        bands.push((Some(rows[rows.len() - 1].level), None));
    }
    let mut cells = Vec::new();
    for (bi, &(lo, hi)) in bands.iter().enumerate() {
        let crossing: Vec<ERef> = match (lo, hi) {
            (Some(lo), Some(hi)) => {
                let ri = core_plus.emb.row_at(lo).expect("band boundary is a row");
                let mut es: Vec<ERef> = core_plus
                    .present_nonhorizontal_edges()
                    .into_iter()
                    .filter(|&e| {
                        if !core_plus.edge_is_present(e) {
                            return false;
                        }
                        let (elo, ehi) = core_plus.span(e);
                        elo <= lo && ehi >= hi
                    })
                    .collect();
                es.sort_by_key(|&e| core_plus.edge_pos_on_row(e, ri));
                es
            }
            _ => Vec::new(),
        };
        let mut bounds: Vec<(Option<ERef>, Option<ERef>)> = Vec::new();
        if crossing.is_empty() {
            bounds.push((None, None));
        } else {
            bounds.push((None, Some(crossing[0])));
            for w in crossing.windows(2) {
                bounds.push((Some(w[0]), Some(w[1])));
            }
            bounds.push((Some(crossing[crossing.len() - 1]), None));
        }
        for (left, right) in bounds {
            cells.push(Cell {
                band: bi,
                left,
                right,
                ear_face: false,
                has_transitions: false,
            });
        }
    }
    let mut deco = CellDecomposition { bands, cells };
    flag_regions(&mut deco, core_plus, info);
    deco
}

/// Marks ear-face cells and transition-bearing cells: those lying between
/// a carved region's two copies within the copies' common span.
fn flag_regions(deco: &mut CellDecomposition, scene: &Scene, info: &NormalizeInfo) {
    let enclosures: Vec<(ERef, ERef, bool)> = info
        .faces
        .iter()
        .map(|f| (f.left_copy, f.right_copy, true))
        .chain(
            info.divider_enclosures
                .iter()
                .map(|&(_, l, r)| (l, r, false)),
        )
        .collect();
    for ci in 0..deco.cells.len() {
        let band = deco.cells[ci].band;
        let (lo, hi) = deco.bands[band];
        let (lo, hi) = match (lo, hi) {
            (Some(a), Some(b)) => (a, b),
            _ => continue,
        };
        let ri = scene.emb.row_at(lo).expect("band boundary row");
        for &(cl, cr, is_ear) in &enclosures {
            let (sl, sh) = scene.span(cl);
            if !(sl <= lo && sh >= hi) {
                continue;
            }
            let (pl, pr) = match (
                scene.edge_pos_on_row(cl, ri),
                scene.edge_pos_on_row(cr, ri),
            ) {
                (Some(a), Some(b)) => (a, b),
                _ => continue,
            };
            let (clo, chi) = deco.interval_on_row(scene, ci, ri);
            // Cell interval nested within the enclosure's interval.
            if clo > pl && chi <= pr + 1 && chi >= clo {
                let cell = &mut deco.cells[ci];
                if is_ear {
                    cell.ear_face = true;
                } else {
                    cell.has_transitions = true;
                }
            }
        }
    }
}

/// A channel `(v, r, R)`: `cells` is the y-monotone chain from the cell
/// incident to `v` to the target `r = cells.last()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Channel {
    pub v: V,
    pub up: bool,
    pub cells: Vec<usize>,
}

impl Channel {
    pub fn target(&self) -> usize {
        *self.cells.last().expect("channels are nonempty")
    }
}

/// Enumerates all channels from every cover vertex over the transition-
/// bearing normalized scene. Ear-face cells are excluded from membership.
pub fn enumerate_channels(
    deco: &CellDecomposition,
    scene_t: &Scene,
    cover: &HashSet<V>,
) -> Vec<Channel> {
    let mut out = Vec::new();
    let mut cvs: Vec<V> = cover.iter().copied().collect();
    cvs.sort();
    for v in cvs {
        let (rv, pv) = match scene_t.emb.find_vertex(VRef::Base(v)) {
            Some(x) => x,
            None => continue,
        };
        let level = scene_t.emb.rows[rv].level;
        for up in [true, false] {
            let band = match deco.band_of(level, !up) {
                Some(b) => b,
                None => continue,
            };
            // Start cells: v on their row boundary within the interval.
            for ci in 0..deco.cells.len() {
                if deco.cells[ci].band != band || deco.cells[ci].ear_face {
                    continue;
                }
                let (lo, hi) = deco.interval_on_row(scene_t, ci, rv);
                // The vertex at position pv is incident when an insertion
                // index next to it lies in the open interval.
                if !(lo <= pv + 1 && pv <= hi) {
                    continue;
                }
                grow_chain(deco, scene_t, v, up, vec![ci], &mut out);
            }
        }
    }
    out
}

fn grow_chain(
    deco: &CellDecomposition,
    scene_t: &Scene,
    v: V,
    up: bool,
    chain: Vec<usize>,
    out: &mut Vec<Channel>,
) {
    out.push(Channel {
        v,
        up,
        cells: chain.clone(),
    });
    let last = *chain.last().unwrap();
    let band = deco.cells[last].band;
    let next_band = if up {
        band + 1
    } else if band == 0 {
        return;
    } else {
        band - 1
    };
    if next_band >= deco.bands.len() {
        return;
    }
    // Shared row between the two bands.
    let boundary = if up {
        deco.bands[band].1
    } else {
        deco.bands[band].0
    };
    let boundary = match boundary {
        Some(l) => l,
        None => return,
    };
    let ri = match scene_t.emb.row_at(boundary) {
        Some(r) => r,
        None => return,
    };
    for ci in 0..deco.cells.len() {
        if deco.cells[ci].band != next_band || deco.cells[ci].ear_face {
            continue;
        }
        if deco.passable(scene_t, last, ci, ri) {
            let mut next = chain.clone();
            next.push(ci);
            grow_chain(deco, scene_t, v, up, next, out);
        }
    }
}

/// Whether leaf `w` (with cover neighbor `v`) can use channel `c`: the
/// chain runs in `w`'s direction and its target band reaches `γ(w)`.
pub fn usable_by(
    deco: &CellDecomposition,
    g: &ConstrainedLevelGraph,
    c: &Channel,
    w: V,
    v: V,
) -> bool {
    if c.v != v {
        return false;
    }
    let (lw, lv) = (g.level(w), g.level(v));
    if (lw > lv) != c.up {
        return false;
    }
    let (lo, hi) = deco.bands[deco.cells[c.target()].band];
    if c.up {
        lo.is_some_and(|l| lw > l) && hi.map_or(true, |h| lw <= h)
    } else {
        hi.is_some_and(|h| lw < h) && lo.map_or(true, |l| lw >= l)
    }
    // All intermediate bands are covered by construction (the chain is a
    // staircase), so reaching the band is sufficient.
}

/// Property T1 for a set of channels: for any two with distinct sources,
/// the source level line of one must not cut the interior of the other's
/// chain — i.e. the chain has no passable vertical step across that row.
pub fn t1_compatible(
    deco: &CellDecomposition,
    scene_t: &Scene,
    g: &ConstrainedLevelGraph,
    set: &[&Channel],
) -> bool {
    for a in set {
        for b in set {
            if a.v == b.v {
                continue;
            }
            let line = g.level(a.v);
            for w in b.cells.windows(2) {
                let (x, y) = (w[0], w[1]);
                let shared = if b.up {
                    deco.bands[deco.cells[x].band].1
                } else {
                    deco.bands[deco.cells[x].band].0
                };
                if shared != Some(line) {
                    continue;
                }
                if let Some(ri) = scene_t.emb.row_at(line) {
                    if deco.passable(scene_t, x, y, ri) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Channel-count audit (the quadratic counting bound).
#[derive(Clone, Copy, Debug)]
pub struct ChannelCountReport {
    pub cells: usize,
    pub channels: usize,
    pub bound: usize,
    pub ok: bool,
}

pub fn channel_count_report(
    deco: &CellDecomposition,
    channels: &[Channel],
    k: usize,
) -> ChannelCountReport {
    let cells = deco.cells.len();
    let bound = cells * (4 * cells + 2 * k);
    ChannelCountReport {
        cells,
        channels: channels.len(),
        bound,
        ok: channels.len() <= bound,
    }
}
