//! Combinatorial level embeddings.
//!
//! A drawing's combinatorial class is recorded as, per occupied level, the
//! left-to-right sequence of items: vertices and *passage tokens* (an edge
//! crossing that level line strictly between its endpoints). Augmentation
//! objects (visibility edges, stand-in ears from refined visibility
//! extensions, normalization copies) live in a registry next to the rows so
//! an embedding is self-describing even beyond the input graph.
//!
//! Invariants (enforced by the validator):
//! - every vertex appears exactly once, on its own level's row;
//! - every non-horizontal edge has exactly one token on every row whose
//!   level lies strictly between its endpoint levels (rows created by
//!   augmentation carry tokens of *all* edges crossing them, so the
//!   left-to-right order on every row is total);
//! - no two edge curves invert between consecutive rows;
//! - horizontal edges join two consecutive items of one row.

use crate::level::Level;
use crate::model::{ConstrainedLevelGraph, E, V};
use std::collections::HashMap;

/// Reference to a vertex: part of the input graph or of the augmentation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VRef {
    Base(V),
    Aug(usize),
}

/// Reference to an edge: part of the input graph or of the augmentation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ERef {
    Base(E),
    Aug(usize),
}

/// One item of a row: a vertex or an edge-passage token.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Item {
    Vertex(VRef),
    Passage(ERef),
}

/// An augmentation vertex (stand-in ear or subdivision-like helper).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AugVertex {
    pub name: String,
    pub level: Level,
    /// For stand-in ears: the cover pair the ear belongs to.
    pub pair: Option<(V, V)>,
}

/// What an augmentation edge is for. Only affects bookkeeping; geometry
/// treats every non-horizontal edge identically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AugEdgeKind {
    /// Non-horizontal visibility edge between two cover vertices.
    Visibility,
    /// Horizontal visibility edge (same-level consecutive vertices).
    Horizontal,
    /// Edge to a stand-in ear.
    Ear,
    /// Normalization copy of another edge (Step 3 augmentation).
    Copy,
}

/// An augmentation edge. For non-horizontal edges, `tail` is the lower
/// endpoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AugEdge {
    pub tail: VRef,
    pub head: VRef,
    pub kind: AugEdgeKind,
}

/// Registry of all augmentation objects referenced by an embedding.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AugRegistry {
    pub vertices: Vec<AugVertex>,
    pub edges: Vec<AugEdge>,
}

/// One level line of the embedding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row {
    pub level: Level,
    pub items: Vec<Item>,
}

/// A combinatorial level embedding (rows sorted by level, ascending).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LevelEmbedding {
    pub rows: Vec<Row>,
    pub aug: AugRegistry,
}

impl LevelEmbedding {
    pub fn new() -> Self {
        Self::default()
    }

    /// Index of the row at exactly `level`, if present.
    pub fn row_at(&self, level: Level) -> Option<usize> {
        self.rows.binary_search_by(|r| r.level.cmp(&level)).ok()
    }

    /// Position of `v` as `(row index, item index)`.
    pub fn find_vertex(&self, v: VRef) -> Option<(usize, usize)> {
        for (ri, row) in self.rows.iter().enumerate() {
            for (pi, item) in row.items.iter().enumerate() {
                if *item == Item::Vertex(v) {
                    return Some((ri, pi));
                }
            }
        }
        None
    }

    /// Drops all augmentation items, then all rows left without a vertex.
    /// The result is an embedding of the input graph alone.
    pub fn restrict_to_base(&self) -> LevelEmbedding {
        let rows = self
            .rows
            .iter()
            .map(|row| Row {
                level: row.level,
                items: row
                    .items
                    .iter()
                    .filter(|it| match it {
                        Item::Vertex(VRef::Base(_)) | Item::Passage(ERef::Base(_)) => true,
                        _ => false,
                    })
                    .copied()
                    .collect(),
            })
            .filter(|row| {
                row.items
                    .iter()
                    .any(|it| matches!(it, Item::Vertex(_)))
            })
            .collect();
        LevelEmbedding {
            rows,
            aug: AugRegistry::default(),
        }
    }
}

/// An embedding paired with its instance: resolves levels and endpoints of
/// both base and augmentation objects, and offers the mutation helpers the
/// pipeline builds drawings with.
#[derive(Clone, Debug)]
pub struct Scene<'g> {
    pub g: &'g ConstrainedLevelGraph,
    pub emb: LevelEmbedding,
}

impl<'g> Scene<'g> {
    pub fn new(g: &'g ConstrainedLevelGraph) -> Self {
        Scene {
            g,
            emb: LevelEmbedding::new(),
        }
    }

    pub fn from_embedding(g: &'g ConstrainedLevelGraph, emb: LevelEmbedding) -> Self {
        Scene { g, emb }
    }

    /// The level of a vertex reference.
    pub fn vlevel(&self, v: VRef) -> Level {
        match v {
            VRef::Base(v) => self.g.level(v),
            VRef::Aug(i) => self.emb.aug.vertices[i].level,
        }
    }

    /// Endpoints of an edge reference, lower endpoint first (horizontal
    /// edges keep registry order).
    pub fn endpoints(&self, e: ERef) -> (VRef, VRef) {
        match e {
            ERef::Base(e) => {
                let (t, h) = self.g.edges()[e];
                (VRef::Base(t), VRef::Base(h))
            }
            ERef::Aug(i) => {
                let ae = &self.emb.aug.edges[i];
                (ae.tail, ae.head)
            }
        }
    }

    /// Whether an edge is horizontal (only augmentation edges can be).
    pub fn is_horizontal(&self, e: ERef) -> bool {
        match e {
            ERef::Base(_) => false,
            ERef::Aug(i) => self.emb.aug.edges[i].kind == AugEdgeKind::Horizontal,
        }
    }

    /// Endpoint levels of a non-horizontal edge, `(lower, upper)`.
    pub fn span(&self, e: ERef) -> (Level, Level) {
        let (t, h) = self.endpoints(e);
        let (a, b) = (self.vlevel(t), self.vlevel(h));
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Whether non-horizontal edge `e` strictly crosses `level`.
    pub fn crosses(&self, e: ERef, level: Level) -> bool {
        if self.is_horizontal(e) {
            return false;
        }
        let (lo, hi) = self.span(e);
        lo < level && level < hi
    }

    /// The position of edge `e` on row `ri`: its passage token, or the
    /// position of an endpoint vertex lying on that row.
    pub fn edge_pos_on_row(&self, e: ERef, ri: usize) -> Option<usize> {
        let row = &self.emb.rows[ri];
        let (t, h) = self.endpoints(e);
        for (pi, item) in row.items.iter().enumerate() {
            match *item {
                Item::Passage(pe) if pe == e => return Some(pi),
                Item::Vertex(v) if v == t || v == h => return Some(pi),
                _ => {}
            }
        }
        None
    }

    /// All non-horizontal edges present in the embedding (base edges of the
    /// instance that appear, plus non-horizontal augmentation edges).
    pub fn present_nonhorizontal_edges(&self) -> Vec<ERef> {
        let mut out = Vec::new();
        for ei in 0..self.g.edges().len() {
            out.push(ERef::Base(ei));
        }
        for (i, ae) in self.emb.aug.edges.iter().enumerate() {
            if ae.kind != AugEdgeKind::Horizontal {
                out.push(ERef::Aug(i));
            }
        }
        out
    }

    /// Ensures a row exists at `level`; if created, it is populated with
    /// passage tokens for every edge crossing it, in strip order. Returns
    /// the row index.
    ///
    /// Only call with `edges` = every non-horizontal edge that may cross
    /// the level (the default helper scans base + augmentation edges whose
    /// endpoints are already placed).
    pub fn ensure_row(&mut self, level: Level) -> usize {
        if let Some(ri) = self.emb.row_at(level) {
            return ri;
        }
        let insert_at = self
            .emb
            .rows
            .partition_point(|r| r.level < level);
        // Collect crossing edges among those with both endpoints placed or
        // tokens present in adjacent rows.
        let mut crossing: Vec<ERef> = Vec::new();
        for e in self.all_edge_refs() {
            if self.is_horizontal(e) {
                continue;
            }
            if self.edge_is_present(e) && self.crosses(e, level) {
                crossing.push(e);
            }
        }
        // Order by position in the adjacent rows: primary = row below (or
        // above if none below), secondary = the other row; ties broken by
        // edge id (only truly parallel strands can tie on both).
        let below = insert_at.checked_sub(1);
        let above = if insert_at < self.emb.rows.len() {
            Some(insert_at)
        } else {
            None
        };
        let key = |s: &Self, e: ERef| -> (usize, usize) {
            let b = below.and_then(|ri| s.edge_pos_on_row(e, ri)).unwrap_or(0);
            let a = above.and_then(|ri| s.edge_pos_on_row(e, ri)).unwrap_or(0);
            (b, a)
        };
        crossing.sort_by(|&x, &y| key(self, x).cmp(&key(self, y)).then(x.cmp(&y)));
        let items = crossing.into_iter().map(Item::Passage).collect();
        self.emb.rows.insert(insert_at, Row { level, items });
        insert_at
    }

    /// Every edge reference in scope (base + augmentation).
    pub fn all_edge_refs(&self) -> Vec<ERef> {
        let mut out: Vec<ERef> = (0..self.g.edges().len()).map(ERef::Base).collect();
        out.extend((0..self.emb.aug.edges.len()).map(ERef::Aug));
        out
    }

    /// An edge counts as present when its lower endpoint vertex is placed
    /// in some row (drawing construction places endpoints and tokens
    /// together).
    pub fn edge_is_present(&self, e: ERef) -> bool {
        let (t, h) = self.endpoints(e);
        self.emb.find_vertex(t).is_some() && self.emb.find_vertex(h).is_some()
    }

    /// Rows strictly between two levels (ascending row indices).
    pub fn rows_strictly_between(&self, lo: Level, hi: Level) -> Vec<usize> {
        self.emb
            .rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.level > lo && r.level < hi)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Builds the canonical row skeleton for a set of placed base vertices:
/// one row per occupied level, in the given per-level item orders.
pub fn rows_from_orders(
    g: &ConstrainedLevelGraph,
    orders: &[(Level, Vec<Item>)],
) -> LevelEmbedding {
    let mut rows: Vec<Row> = orders
        .iter()
        .map(|(l, items)| Row {
            level: *l,
            items: items.clone(),
        })
        .collect();
    rows.sort_by(|a, b| a.level.cmp(&b.level));
    let _ = g;
    LevelEmbedding {
        rows,
        aug: AugRegistry::default(),
    }
}

/// Convenience: map external names to `Item::Vertex` entries for tests.
pub fn name_items(g: &ConstrainedLevelGraph, names: &[&str]) -> Vec<Item> {
    names
        .iter()
        .map(|n| Item::Vertex(VRef::Base(g.vertex(n).expect("unknown vertex name"))))
        .collect()
}

/// Lookup helper used across modules: positions of every item of a row.
pub fn positions_of(row: &Row) -> HashMap<Item, usize> {
    row.items
        .iter()
        .enumerate()
        .map(|(i, it)| (*it, i))
        .collect()
}
