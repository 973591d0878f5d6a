//! Drawing export: SVG and Graphviz DOT.
//!
//! Both exporters refuse embeddings that do not validate, so a rendered
//! picture is always crossing-free. Coordinates are derived directly from
//! the embedding: a vertex sits at (sequence position · unit, level rank ·
//! unit) with level ranks growing downward in SVG, and every edge is a
//! polyline bending at each of its passage tokens. Output is deterministic.

use crate::embedding::{ERef, Item, LevelEmbedding, VRef};
use crate::model::ConstrainedLevelGraph;
use crate::validator::{check_embedding, CheckOptions};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("embedding fails validation: {0}")]
    Invalid(String),
}

const UNIT: f64 = 60.0;
const MARGIN: f64 = 40.0;
const RADIUS: f64 = 9.0;

fn validate(g: &ConstrainedLevelGraph, emb: &LevelEmbedding) -> Result<(), ExportError> {
    let verdict = check_embedding(
        g,
        emb,
        CheckOptions {
            ignore_augmentation: true,
        },
    );
    match verdict.violations.first() {
        Some(v) => Err(ExportError::Invalid(format!("{v:?}"))),
        None => Ok(()),
    }
}

/// Pixel coordinates of every base item, plus per-edge bend points.
fn layout(
    emb: &LevelEmbedding,
) -> (
    BTreeMap<usize, (f64, f64)>,       // vertex id -> point
    BTreeMap<usize, Vec<(f64, f64)>>,  // edge id -> bends, top to bottom
) {
    let mut vertices = BTreeMap::new();
    let mut bends: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for (ri, row) in emb.rows.iter().enumerate() {
        let y = MARGIN + ri as f64 * UNIT;
        for (pos, item) in row.items.iter().enumerate() {
            let x = MARGIN + pos as f64 * UNIT;
            match *item {
                Item::Vertex(VRef::Base(v)) => {
                    vertices.insert(v, (x, y));
                }
                Item::Passage(ERef::Base(e)) => {
                    bends.entry(e).or_default().push((x, y));
                }
                _ => {}
            }
        }
    }
    (vertices, bends)
}

/// Renders the embedding as a standalone SVG document.
pub fn export_svg(
    g: &ConstrainedLevelGraph,
    emb: &LevelEmbedding,
) -> Result<String, ExportError> {
    validate(g, emb)?;
    let (vertices, bends) = layout(emb);
    let max_x = emb
        .rows
        .iter()
        .map(|r| r.items.len())
        .max()
        .unwrap_or(0)
        .saturating_sub(1) as f64;
    let width = 2.0 * MARGIN + max_x * UNIT;
    let height = 2.0 * MARGIN + (emb.rows.len().saturating_sub(1)) as f64 * UNIT;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    )
    .unwrap();
    for (e, &(t, h)) in g.edges().iter().enumerate() {
        let (Some(&pt), Some(&ph)) = (vertices.get(&t), vertices.get(&h)) else {
            continue;
        };
        // Polyline from tail down through the bends to the head.
        let mut points: Vec<(f64, f64)> = vec![pt];
        points.extend(bends.get(&e).cloned().unwrap_or_default());
        points.push(ph);
        points.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let path: Vec<String> = points.iter().map(|(x, y)| format!("{x},{y}")).collect();
        writeln!(
            out,
            r#"  <polyline points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#,
            path.join(" ")
        )
        .unwrap();
    }
    for (v, &(x, y)) in &vertices {
        writeln!(
            out,
            r#"  <circle cx="{x}" cy="{y}" r="{RADIUS}" fill="white" stroke="black"/>"#
        )
        .unwrap();
        writeln!(
            out,
            r#"  <text x="{x}" y="{}" font-size="10" text-anchor="middle">{}</text>"#,
            y + 3.5,
            g.name(*v)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Renders the embedding as a Graphviz DOT digraph with one rank per
/// level; same-rank vertices appear in embedding order.
pub fn export_dot(
    g: &ConstrainedLevelGraph,
    emb: &LevelEmbedding,
) -> Result<String, ExportError> {
    validate(g, emb)?;
    let mut out = String::from("digraph g {\n  rankdir=TB;\n  node [shape=circle];\n");
    for row in &emb.rows {
        let names: Vec<String> = row
            .items
            .iter()
            .filter_map(|it| match *it {
                Item::Vertex(VRef::Base(v)) => Some(format!("\"{}\"", g.name(v))),
                _ => None,
            })
            .collect();
        if names.is_empty() {
            continue;
        }
        writeln!(out, "  {{ rank=same; {}; }}", names.join("; ")).unwrap();
        // Invisible chain pins the left-to-right order within the rank.
        if names.len() > 1 {
            writeln!(out, "  {} [style=invis];", names.join(" -> ")).unwrap();
        }
    }
    for &(t, h) in g.edges() {
        writeln!(out, "  \"{}\" -> \"{}\";", g.name(t), g.name(h)).unwrap();
    }
    out.push_str("}\n");
    Ok(out)
}
