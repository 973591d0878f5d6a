//! Random instance generation for testing and benchmarking.
//!
//! Instances are built around a planted vertex cover: `k` cover vertices
//! spread over `h` levels, with the remaining vertices attached as leaves,
//! ears (two edges to cover vertices, level outside their span), path
//! vertices (level strictly between two cover vertices), or high-degree
//! vertices (three or more cover neighbours). Constraints are sampled from
//! the row orders of an actual crossing-free drawing of the generated
//! graph, so feasible mode yields a feasible instance whenever the density
//! is at most 1; adversarial mode inverts every sampled pair, biasing
//! toward infeasibility. Everything is deterministic in the seed.

use crate::level::Level;
use crate::model::{ConstrainedLevelGraph, V};
use crate::oracle::{for_each_solution, DEFAULT_BUDGET};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use std::ops::ControlFlow;
use thiserror::Error;

/// Parameters for one generated instance.
#[derive(Clone, Copy, Debug)]
pub struct GenSpec {
    /// Total vertex count.
    pub n: usize,
    /// Planted cover size (0 produces isolated vertices only).
    pub k: usize,
    /// Number of levels.
    pub h: usize,
    /// Expected fraction of adjacent witness pairs turned into constraints.
    pub density: f64,
    pub seed: u64,
    /// Invert sampled pairs instead of keeping the witness order.
    pub adversarial: bool,
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("n = {0} is smaller than k = {1}")]
    TooFewVertices(usize, usize),
    #[error("h must be at least 1")]
    NoLevels,
    #[error("could not realize a crossing-free structure for this spec")]
    NoStructure,
}

/// Builds the underlying (unconstrained) level graph for a spec attempt.
fn build_structure(spec: &GenSpec, rng: &mut ChaCha8Rng) -> ConstrainedLevelGraph {
    let h = spec.h as i64;
    let mut levels: Vec<i64> = Vec::with_capacity(spec.n);
    let mut edges: Vec<(V, V)> = Vec::new();
    let mut edge_set: HashSet<(V, V)> = HashSet::new();

    // Cover vertices first, spread over the levels with jitter.
    for i in 0..spec.k {
        let base = if spec.k > 1 {
            1 + (i as i64) * (h - 1) / (spec.k as i64 - 1)
        } else {
            (h + 1) / 2
        };
        let jitter = rng.gen_range(-1..=1);
        levels.push((base + jitter).clamp(1, h));
    }

    let push_edge = |edges: &mut Vec<(V, V)>,
                         edge_set: &mut HashSet<(V, V)>,
                         levels: &[i64],
                         a: V,
                         b: V| {
        let (t, hh) = if levels[a] < levels[b] { (a, b) } else { (b, a) };
        if levels[t] != levels[hh] && edge_set.insert((t, hh)) {
            edges.push((t, hh));
        }
    };

    for _ in spec.k..spec.n {
        let x = levels.len();
        if spec.k == 0 {
            levels.push(rng.gen_range(1..=h));
            continue;
        }
        let roll: f64 = rng.gen();
        if roll < 0.5 || spec.k == 1 || h == 1 {
            // Leaf of a random cover vertex.
            let c = rng.gen_range(0..spec.k);
            let lc = levels[c];
            let lo = (lc - 2).max(1);
            let hi = (lc + 2).min(h);
            let mut lx = rng.gen_range(lo..=hi);
            if lx == lc {
                lx = if lc < h { lc + 1 } else { lc - 1 };
            }
            if lx == lc {
                // Single-level instance: isolated filler.
                levels.push(lc);
                continue;
            }
            levels.push(lx);
            push_edge(&mut edges, &mut edge_set, &levels, c, x);
        } else if roll < 0.7 {
            // Ear: level outside the span of two cover vertices.
            let a = rng.gen_range(0..spec.k);
            let mut b = rng.gen_range(0..spec.k);
            if a == b {
                b = (b + 1) % spec.k;
            }
            let top = levels[a].max(levels[b]);
            let bot = levels[a].min(levels[b]);
            let lx = if top < h {
                rng.gen_range(top + 1..=h)
            } else if bot > 1 {
                rng.gen_range(1..bot)
            } else {
                levels.push(rng.gen_range(1..=h));
                continue;
            };
            levels.push(lx);
            push_edge(&mut edges, &mut edge_set, &levels, a, x);
            push_edge(&mut edges, &mut edge_set, &levels, b, x);
        } else if roll < 0.9 {
            // Path vertex strictly between two cover vertices.
            let pairs: Vec<(usize, usize)> = (0..spec.k)
                .flat_map(|a| (0..spec.k).map(move |b| (a, b)))
                .filter(|&(a, b)| levels[a] + 1 < levels[b])
                .collect();
            if let Some(&(a, b)) = pairs.choose(rng) {
                let lx = rng.gen_range(levels[a] + 1..levels[b]);
                levels.push(lx);
                push_edge(&mut edges, &mut edge_set, &levels, a, x);
                push_edge(&mut edges, &mut edge_set, &levels, x, b);
            } else {
                levels.push(rng.gen_range(1..=h));
            }
        } else {
            // High-degree vertex: three cover neighbours when possible.
            let mut picks: Vec<usize> = (0..spec.k).collect();
            picks.shuffle(rng);
            picks.truncate(3);
            let lx = rng.gen_range(1..=h);
            levels.push(lx);
            for &c in &picks {
                if levels[c] != lx {
                    push_edge(&mut edges, &mut edge_set, &levels, c, x);
                }
            }
        }
    }

    let vertices: Vec<(String, Level)> = levels
        .iter()
        .enumerate()
        .map(|(i, &l)| (format!("v{i}"), Level::new(l, 1)))
        .collect();
    let named: Vec<(String, String)> = edges
        .iter()
        .map(|&(t, hh)| (format!("v{t}"), format!("v{hh}")))
        .collect();
    ConstrainedLevelGraph::build(vertices, named, Vec::new())
        .expect("generated structure is well-formed")
}

/// Samples constraints from the row orders of one drawing of `g`.
fn sample_constraints(
    g: &ConstrainedLevelGraph,
    spec: &GenSpec,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<(Level, Vec<(String, String)>)>> {
    // Collect a bounded batch of drawings and pick one at random.
    let mut drawings: Vec<Vec<Vec<V>>> = Vec::new();
    let walked = for_each_solution(g, DEFAULT_BUDGET, |emb| {
        let rows: Vec<Vec<V>> = emb
            .rows
            .iter()
            .map(|r| {
                r.items
                    .iter()
                    .filter_map(|it| match it {
                        crate::embedding::Item::Vertex(crate::embedding::VRef::Base(v)) => {
                            Some(*v)
                        }
                        _ => None,
                    })
                    .collect()
            })
            .collect();
        drawings.push(rows);
        if drawings.len() >= 64 {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    if drawings.is_empty() {
        let _ = walked;
        return None;
    }
    let witness = drawings.choose(rng).unwrap();
    let mut out: Vec<(Level, Vec<(String, String)>)> = Vec::new();
    for row in witness {
        if row.len() < 2 {
            continue;
        }
        let level = g.level(row[0]);
        let mut pairs: Vec<(String, String)> = Vec::new();
        for w in row.windows(2) {
            if rng.gen::<f64>() < spec.density {
                let (a, b) = if spec.adversarial {
                    (w[1], w[0])
                } else {
                    (w[0], w[1])
                };
                pairs.push((g.name(a).to_string(), g.name(b).to_string()));
            }
        }
        if !pairs.is_empty() {
            out.push((level, pairs));
        }
    }
    Some(out)
}

/// Generates one instance; deterministic in `spec.seed`.
pub fn generate_instance(spec: &GenSpec) -> Result<ConstrainedLevelGraph, GenError> {
    if spec.h == 0 {
        return Err(GenError::NoLevels);
    }
    if spec.n < spec.k {
        return Err(GenError::TooFewVertices(spec.n, spec.k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _attempt in 0..32 {
        let g = build_structure(spec, &mut rng);
        if spec.k == 0 || spec.density == 0.0 {
            // No constraints to sample; the bare structure may still need
            // a planarity check when edges exist.
            if g.edges().is_empty() {
                return Ok(g);
            }
        }
        match sample_constraints(&g, spec, &mut rng) {
            Some(cons) => {
                let vertices = (0..g.n())
                    .map(|v| (g.name(v).to_string(), g.level(v)))
                    .collect();
                let edges = g
                    .edges()
                    .iter()
                    .map(|&(t, h)| (g.name(t).to_string(), g.name(h).to_string()))
                    .collect();
                let constraints = cons;
                return Ok(ConstrainedLevelGraph::build(vertices, edges, constraints)
                    .expect("generated instance is well-formed"));
            }
            None => continue, // structure had no drawing; re-roll
        }
    }
    Err(GenError::NoStructure)
}

/// Leaf-heavy benchmark family with a cover of size 2: `c1` on level 1,
/// `c2` on level 2 joined by an edge, with the remaining vertices split
/// between leaves of `c2` on level 1 and leaves of `c1` on level 2.
/// Constraints are sampled from a known crossing-free drawing, so every
/// member is feasible.
pub fn leaf_heavy(n: usize, seed: u64) -> ConstrainedLevelGraph {
    assert!(n >= 2, "family needs the two cover vertices");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = (n - 2) / 2; // leaves of c2 on level 1
    let p = n - 2 - m; // leaves of c1 on level 2
    let mut vertices: Vec<(String, Level)> = vec![
        ("c1".into(), Level::new(1, 1)),
        ("c2".into(), Level::new(2, 1)),
    ];
    let mut edges: Vec<(String, String)> = vec![("c1".into(), "c2".into())];
    for i in 0..m {
        vertices.push((format!("w{i}"), Level::new(1, 1)));
        edges.push((format!("w{i}"), "c2".into()));
    }
    for i in 0..p {
        vertices.push((format!("x{i}"), Level::new(2, 1)));
        edges.push(("c1".into(), format!("x{i}")));
    }
    // Witness drawing: row 1 = [c1, w0..], row 2 = [x0.., c2].
    let row1: Vec<String> = std::iter::once("c1".to_string())
        .chain((0..m).map(|i| format!("w{i}")))
        .collect();
    let row2: Vec<String> = (0..p)
        .map(|i| format!("x{i}"))
        .chain(std::iter::once("c2".to_string()))
        .collect();
    let mut constraints: Vec<(Level, Vec<(String, String)>)> = Vec::new();
    for (level, row) in [(Level::new(1, 1), row1), (Level::new(2, 1), row2)] {
        let mut pairs = Vec::new();
        for w in row.windows(2) {
            if rng.gen::<f64>() < 0.9 {
                pairs.push((w[0].clone(), w[1].clone()));
            }
        }
        if !pairs.is_empty() {
            constraints.push((level, pairs));
        }
    }
    ConstrainedLevelGraph::build(vertices, edges, constraints)
        .expect("leaf-heavy family is well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::instance_to_json;
    use crate::oracle::{brute_force_solve, Outcome};

    #[test]
    fn deterministic_in_seed() {
        let spec = GenSpec {
            n: 4,
            k: 2,
            h: 3,
            density: 0.8,
            seed: 7,
            adversarial: false,
        };
        let a = generate_instance(&spec).unwrap();
        let b = generate_instance(&spec).unwrap();
        assert_eq!(instance_to_json(&a), instance_to_json(&b));
    }

    #[test]
    fn feasible_mode_is_feasible() {
        for seed in 0..20 {
            let spec = GenSpec {
                n: 8,
                k: 2,
                h: 3,
                density: 0.9,
                seed,
                adversarial: false,
            };
            let g = generate_instance(&spec).unwrap();
            assert!(
                matches!(brute_force_solve(&g, DEFAULT_BUDGET), Outcome::Feasible(_)),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn zero_cover_means_no_edges() {
        let spec = GenSpec {
            n: 3,
            k: 0,
            h: 2,
            density: 0.5,
            seed: 1,
            adversarial: false,
        };
        let g = generate_instance(&spec).unwrap();
        assert_eq!(g.n(), 3);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn leaf_heavy_is_feasible_and_sized() {
        let g = leaf_heavy(20, 3);
        assert_eq!(g.n(), 20);
        assert!(matches!(
            brute_force_solve(&g, DEFAULT_BUDGET),
            Outcome::Feasible(_)
        ));
    }

    #[test]
    fn n_below_k_is_rejected() {
        let spec = GenSpec {
            n: 1,
            k: 2,
            h: 2,
            density: 0.5,
            seed: 0,
            adversarial: false,
        };
        assert!(matches!(
            generate_instance(&spec),
            Err(GenError::TooFewVertices(1, 2))
        ));
    }
}
