//! JSON (de)serialization of instances and embeddings.
//!
//! Instance format:
//! ```json
//! {
//!   "vertices": [{"id": "a1", "level": 1}, ...],
//!   "edges": [["a1", "b1"], ...],
//!   "constraints": [{"level": 1, "pairs": [["a1", "a2"]]}, ...]
//! }
//! ```
//! Levels are decimal or integer JSON numbers (parsed exactly — no float
//! round-trip) or strings `"p/q"` for general rationals.
//!
//! Embedding format:
//! ```json
//! {
//!   "levels": [{"level": 1, "items": [{"v": "a1"}, {"e": ["u","w",0]}]}],
//!   "augmented": {"vertices": [...], "edges": [...]}
//! }
//! ```
//! The third component of an `"e"` item picks among parallel edges with the
//! same endpoints: the input-graph edge (if any) is 0, augmentation edges
//! follow in registry order.

use crate::embedding::{
    AugEdge, AugEdgeKind, AugRegistry, AugVertex, ERef, Item, LevelEmbedding, Row, VRef,
};
use crate::level::Level;
use crate::model::{ConstrainedLevelGraph, ParseError};
use serde_json::{json, Map, Value};

fn level_from_value(v: &Value) -> Result<Level, ParseError> {
    match v {
        Value::Number(n) => Level::parse_decimal(&n.to_string())
            .ok_or_else(|| ParseError::Semantic(format!("unrepresentable level {n}"))),
        Value::String(s) => {
            if let Some((p, q)) = s.split_once('/') {
                let p: i64 = p
                    .trim()
                    .parse()
                    .map_err(|_| ParseError::Syntax(format!("bad rational level {s:?}")))?;
                let q: i64 = q
                    .trim()
                    .parse()
                    .map_err(|_| ParseError::Syntax(format!("bad rational level {s:?}")))?;
                if q == 0 {
                    return Err(ParseError::Semantic(format!("zero denominator in {s:?}")));
                }
                Ok(Level::new(p, q))
            } else {
                Level::parse_decimal(s)
                    .ok_or_else(|| ParseError::Syntax(format!("bad level literal {s:?}")))
            }
        }
        other => Err(ParseError::Syntax(format!(
            "level must be a number or string, got {other}"
        ))),
    }
}

fn level_to_value(l: Level) -> Value {
    if l.denom() == 1 {
        return json!(l.numer());
    }
    // Emit an exact decimal when the denominator divides a power of ten.
    let mut den = l.denom();
    let mut num = l.numer() as i128;
    let mut digits = 0u32;
    while den % 2 == 0 {
        den /= 2;
        num *= 5;
        digits += 1;
    }
    while den % 5 == 0 {
        den /= 5;
        num *= 2;
        digits += 1;
    }
    if den == 1 && digits <= 18 {
        let sign = if num < 0 { "-" } else { "" };
        let mag = num.unsigned_abs();
        let pow = 10u128.pow(digits);
        let txt = format!("{sign}{}.{:0width$}", mag / pow, mag % pow, width = digits as usize);
        return Value::Number(serde_json::Number::from_string_unchecked(txt));
    }
    json!(format!("{}/{}", l.numer(), l.denom()))
}

fn as_str<'a>(v: &'a Value, what: &str) -> Result<&'a str, ParseError> {
    v.as_str()
        .ok_or_else(|| ParseError::Syntax(format!("{what} must be a string, got {v}")))
}

/// Parses an instance document. Syntax errors carry serde_json's
/// line/column report; semantic errors name the offending object.
pub fn parse_instance(text: &str) -> Result<ConstrainedLevelGraph, ParseError> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| ParseError::Syntax(e.to_string()))?;
    let obj = root
        .as_object()
        .ok_or_else(|| ParseError::Syntax("top level must be an object".into()))?;
    let mut vertices = Vec::new();
    for v in obj
        .get("vertices")
        .and_then(Value::as_array)
        .ok_or_else(|| ParseError::Syntax("missing \"vertices\" array".into()))?
    {
        let vo = v
            .as_object()
            .ok_or_else(|| ParseError::Syntax("vertex entries must be objects".into()))?;
        let id = as_str(
            vo.get("id")
                .ok_or_else(|| ParseError::Syntax("vertex missing \"id\"".into()))?,
            "vertex id",
        )?;
        let level = level_from_value(
            vo.get("level")
                .ok_or_else(|| ParseError::Syntax(format!("vertex {id:?} missing \"level\"")))?,
        )?;
        vertices.push((id.to_string(), level));
    }
    let mut edges = Vec::new();
    for e in obj.get("edges").and_then(Value::as_array).unwrap_or(&vec![]) {
        let pair = e
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| ParseError::Syntax(format!("edge must be a 2-array, got {e}")))?;
        edges.push((
            as_str(&pair[0], "edge tail")?.to_string(),
            as_str(&pair[1], "edge head")?.to_string(),
        ));
    }
    let mut constraints = Vec::new();
    for c in obj
        .get("constraints")
        .and_then(Value::as_array)
        .unwrap_or(&vec![])
    {
        let co = c
            .as_object()
            .ok_or_else(|| ParseError::Syntax("constraint entries must be objects".into()))?;
        let level = level_from_value(
            co.get("level")
                .ok_or_else(|| ParseError::Syntax("constraint missing \"level\"".into()))?,
        )?;
        let mut pairs = Vec::new();
        for p in co
            .get("pairs")
            .and_then(Value::as_array)
            .ok_or_else(|| ParseError::Syntax("constraint missing \"pairs\" array".into()))?
        {
            let pair = p
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| ParseError::Syntax(format!("pair must be a 2-array, got {p}")))?;
            pairs.push((
                as_str(&pair[0], "pair first")?.to_string(),
                as_str(&pair[1], "pair second")?.to_string(),
            ));
        }
        constraints.push((level, pairs));
    }
    ConstrainedLevelGraph::build(vertices, edges, constraints)
}

/// Serializes an instance back to its document form.
pub fn instance_to_json(g: &ConstrainedLevelGraph) -> Value {
    let vertices: Vec<Value> = (0..g.n())
        .map(|v| json!({"id": g.name(v), "level": level_to_value(g.level(v))}))
        .collect();
    let edges: Vec<Value> = g
        .edges()
        .iter()
        .map(|&(t, h)| json!([g.name(t), g.name(h)]))
        .collect();
    let constraints: Vec<Value> = g
        .constraints()
        .iter()
        .map(|(l, pairs)| {
            json!({
                "level": level_to_value(*l),
                "pairs": pairs
                    .iter()
                    .map(|&(u, w)| json!([g.name(u), g.name(w)]))
                    .collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({"vertices": vertices, "edges": edges, "constraints": constraints})
}

fn vref_name<'a>(g: &'a ConstrainedLevelGraph, aug: &'a AugRegistry, v: VRef) -> &'a str {
    match v {
        VRef::Base(v) => g.name(v),
        VRef::Aug(i) => &aug.vertices[i].name,
    }
}

/// Parallel index of an edge among all edges sharing its (tail, head)
/// names: input edge first, augmentation edges in registry order.
fn parallel_index(g: &ConstrainedLevelGraph, aug: &AugRegistry, e: ERef) -> usize {
    let names = |er: ERef| -> (String, String) {
        match er {
            ERef::Base(i) => {
                let (t, h) = g.edges()[i];
                (g.name(t).to_string(), g.name(h).to_string())
            }
            ERef::Aug(i) => {
                let ae = &aug.edges[i];
                (
                    vref_name(g, aug, ae.tail).to_string(),
                    vref_name(g, aug, ae.head).to_string(),
                )
            }
        }
    };
    let key = names(e);
    let mut idx = 0;
    for bi in 0..g.edges().len() {
        let er = ERef::Base(bi);
        if names(er) == key {
            if er == e {
                return idx;
            }
            idx += 1;
        }
    }
    for ai in 0..aug.edges.len() {
        let er = ERef::Aug(ai);
        if names(er) == key {
            if er == e {
                return idx;
            }
            idx += 1;
        }
    }
    unreachable!("edge not found among its own parallels")
}

fn kind_name(k: AugEdgeKind) -> &'static str {
    match k {
        AugEdgeKind::Visibility => "visibility",
        AugEdgeKind::Horizontal => "horizontal",
        AugEdgeKind::Ear => "ear",
        AugEdgeKind::Copy => "copy",
    }
}

fn kind_from_name(s: &str) -> Result<AugEdgeKind, ParseError> {
    Ok(match s {
        "visibility" => AugEdgeKind::Visibility,
        "horizontal" => AugEdgeKind::Horizontal,
        "ear" => AugEdgeKind::Ear,
        "copy" => AugEdgeKind::Copy,
        other => {
            return Err(ParseError::Semantic(format!(
                "unknown augmentation edge kind {other:?}"
            )))
        }
    })
}

/// Serializes an embedding (with its augmentation registry).
pub fn embedding_to_json(g: &ConstrainedLevelGraph, emb: &LevelEmbedding) -> Value {
    let levels: Vec<Value> = emb
        .rows
        .iter()
        .map(|row| {
            let items: Vec<Value> = row
                .items
                .iter()
                .map(|item| match *item {
                    Item::Vertex(v) => json!({"v": vref_name(g, &emb.aug, v)}),
                    Item::Passage(e) => {
                        let (t, h) = match e {
                            ERef::Base(i) => {
                                let (t, h) = g.edges()[i];
                                (VRef::Base(t), VRef::Base(h))
                            }
                            ERef::Aug(i) => (emb.aug.edges[i].tail, emb.aug.edges[i].head),
                        };
                        json!({"e": [
                            vref_name(g, &emb.aug, t),
                            vref_name(g, &emb.aug, h),
                            parallel_index(g, &emb.aug, e),
                        ]})
                    }
                })
                .collect();
            json!({"level": level_to_value(row.level), "items": items})
        })
        .collect();
    let aug_vertices: Vec<Value> = emb
        .aug
        .vertices
        .iter()
        .map(|av| {
            let mut m = Map::new();
            m.insert("id".into(), json!(av.name));
            m.insert("level".into(), level_to_value(av.level));
            if let Some((u, w)) = av.pair {
                m.insert("pair".into(), json!([g.name(u), g.name(w)]));
            }
            Value::Object(m)
        })
        .collect();
    let aug_edges: Vec<Value> = emb
        .aug
        .edges
        .iter()
        .map(|ae| {
            json!({
                "tail": vref_name(g, &emb.aug, ae.tail),
                "head": vref_name(g, &emb.aug, ae.head),
                "kind": kind_name(ae.kind),
            })
        })
        .collect();
    json!({
        "levels": levels,
        "augmented": {"vertices": aug_vertices, "edges": aug_edges},
    })
}

/// Parses an embedding document against its instance.
pub fn parse_embedding(
    g: &ConstrainedLevelGraph,
    text: &str,
) -> Result<LevelEmbedding, ParseError> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| ParseError::Syntax(e.to_string()))?;
    let obj = root
        .as_object()
        .ok_or_else(|| ParseError::Syntax("top level must be an object".into()))?;

    // Augmentation registry first, so items can refer to it.
    let mut aug = AugRegistry::default();
    if let Some(a) = obj.get("augmented").and_then(Value::as_object) {
        for av in a.get("vertices").and_then(Value::as_array).unwrap_or(&vec![]) {
            let o = av
                .as_object()
                .ok_or_else(|| ParseError::Syntax("augmented vertex must be an object".into()))?;
            let name = as_str(
                o.get("id")
                    .ok_or_else(|| ParseError::Syntax("augmented vertex missing id".into()))?,
                "augmented vertex id",
            )?
            .to_string();
            let level = level_from_value(
                o.get("level")
                    .ok_or_else(|| ParseError::Syntax("augmented vertex missing level".into()))?,
            )?;
            let pair = match o.get("pair").and_then(Value::as_array) {
                Some(p) if p.len() == 2 => {
                    let u = g
                        .vertex(as_str(&p[0], "pair member")?)
                        .ok_or_else(|| ParseError::Semantic("unknown pair member".into()))?;
                    let w = g
                        .vertex(as_str(&p[1], "pair member")?)
                        .ok_or_else(|| ParseError::Semantic("unknown pair member".into()))?;
                    Some((u, w))
                }
                _ => None,
            };
            aug.vertices.push(AugVertex { name, level, pair });
        }
        let resolve = |name: &str, aug: &AugRegistry| -> Result<VRef, ParseError> {
            if let Some(v) = g.vertex(name) {
                return Ok(VRef::Base(v));
            }
            aug.vertices
                .iter()
                .position(|av| av.name == name)
                .map(VRef::Aug)
                .ok_or_else(|| ParseError::Semantic(format!("unknown vertex {name:?}")))
        };
        for ae in a.get("edges").and_then(Value::as_array).unwrap_or(&vec![]) {
            let o = ae
                .as_object()
                .ok_or_else(|| ParseError::Syntax("augmented edge must be an object".into()))?;
            let tail = resolve(
                as_str(
                    o.get("tail")
                        .ok_or_else(|| ParseError::Syntax("augmented edge missing tail".into()))?,
                    "tail",
                )?,
                &aug,
            )?;
            let head = resolve(
                as_str(
                    o.get("head")
                        .ok_or_else(|| ParseError::Syntax("augmented edge missing head".into()))?,
                    "head",
                )?,
                &aug,
            )?;
            let kind = kind_from_name(as_str(
                o.get("kind")
                    .ok_or_else(|| ParseError::Syntax("augmented edge missing kind".into()))?,
                "kind",
            )?)?;
            aug.edges.push(AugEdge { tail, head, kind });
        }
    }

    let resolve_v = |name: &str| -> Result<VRef, ParseError> {
        if let Some(v) = g.vertex(name) {
            return Ok(VRef::Base(v));
        }
        aug.vertices
            .iter()
            .position(|av| av.name == name)
            .map(VRef::Aug)
            .ok_or_else(|| ParseError::Semantic(format!("unknown vertex {name:?}")))
    };

    let mut rows = Vec::new();
    for lv in obj
        .get("levels")
        .and_then(Value::as_array)
        .ok_or_else(|| ParseError::Syntax("missing \"levels\" array".into()))?
    {
        let o = lv
            .as_object()
            .ok_or_else(|| ParseError::Syntax("level entries must be objects".into()))?;
        let level = level_from_value(
            o.get("level")
                .ok_or_else(|| ParseError::Syntax("level entry missing \"level\"".into()))?,
        )?;
        let mut items = Vec::new();
        for it in o
            .get("items")
            .and_then(Value::as_array)
            .ok_or_else(|| ParseError::Syntax("level entry missing \"items\"".into()))?
        {
            let io = it
                .as_object()
                .ok_or_else(|| ParseError::Syntax("item must be an object".into()))?;
            if let Some(vn) = io.get("v") {
                items.push(Item::Vertex(resolve_v(as_str(vn, "item vertex")?)?));
            } else if let Some(ev) = io.get("e") {
                let triple = ev
                    .as_array()
                    .filter(|a| a.len() == 3)
                    .ok_or_else(|| ParseError::Syntax("edge item must be [t,h,index]".into()))?;
                let tn = as_str(&triple[0], "edge tail")?;
                let hn = as_str(&triple[1], "edge head")?;
                let want = triple[2]
                    .as_u64()
                    .ok_or_else(|| ParseError::Syntax("edge index must be an integer".into()))?
                    as usize;
                // Resolve the parallel index over base edges first, then
                // registry order.
                let mut found = None;
                let mut idx = 0;
                for (bi, &(t, h)) in g.edges().iter().enumerate() {
                    if g.name(t) == tn && g.name(h) == hn {
                        if idx == want {
                            found = Some(ERef::Base(bi));
                        }
                        idx += 1;
                    }
                }
                if found.is_none() {
                    let name_of = |v: VRef| vref_name(g, &aug, v).to_string();
                    for (ai, ae) in aug.edges.iter().enumerate() {
                        if name_of(ae.tail) == tn && name_of(ae.head) == hn {
                            if idx == want {
                                found = Some(ERef::Aug(ai));
                            }
                            idx += 1;
                        }
                    }
                }
                items.push(Item::Passage(found.ok_or_else(|| {
                    ParseError::Semantic(format!("no edge ({tn}, {hn}) with index {want}"))
                })?));
            } else {
                return Err(ParseError::Syntax(format!("unrecognized item {it}")));
            }
        }
        rows.push(Row { level, items });
    }
    rows.sort_by(|a, b| a.level.cmp(&b.level));
    Ok(LevelEmbedding { rows, aug })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_round_trip() {
        let text = r#"{
            "vertices": [{"id":"u","level":1},{"id":"w","level":2},{"id":"v","level":3.5}],
            "edges": [["u","v"]],
            "constraints": []
        }"#;
        let g = parse_instance(text).unwrap();
        assert_eq!(g.level(g.vertex("v").unwrap()), Level::new(7, 2));
        let back = instance_to_json(&g).to_string();
        let g2 = parse_instance(&back).unwrap();
        assert_eq!(g2.n(), g.n());
        assert_eq!(g2.level(g2.vertex("v").unwrap()), Level::new(7, 2));
    }

    #[test]
    fn syntax_and_semantic_errors() {
        assert!(matches!(
            parse_instance("{nope"),
            Err(ParseError::Syntax(_))
        ));
        let bad = r#"{"vertices":[{"id":"a1","level":1},{"id":"b1","level":2}],
                      "edges":[["b1","a1"]],"constraints":[]}"#;
        assert!(matches!(parse_instance(bad), Err(ParseError::Semantic(_))));
        let cyc = r#"{"vertices":[{"id":"a1","level":1},{"id":"a2","level":1}],
                      "edges":[],
                      "constraints":[{"level":1,"pairs":[["a1","a2"],["a2","a1"]]}]}"#;
        assert!(matches!(parse_instance(cyc), Err(ParseError::Semantic(_))));
        let cross = r#"{"vertices":[{"id":"a1","level":1},{"id":"b1","level":2}],
                      "edges":[],
                      "constraints":[{"level":1,"pairs":[["a1","b1"]]}]}"#;
        assert!(matches!(
            parse_instance(cross),
            Err(ParseError::Semantic(_))
        ));
    }

    #[test]
    fn exact_levels_survive_json() {
        assert_eq!(level_to_value(Level::new(7, 2)).to_string(), "3.5");
        assert_eq!(level_to_value(Level::int(-3)).to_string(), "-3");
        assert_eq!(level_to_value(Level::new(1, 3)).to_string(), "\"1/3\"");
        for l in [Level::new(7, 2), Level::new(1, 3), Level::new(-9, 4)] {
            assert_eq!(level_from_value(&level_to_value(l)).unwrap(), l);
        }
    }
}
