//! End-to-end solver: strips isolated vertices, fixes a vertex cover, and
//! chains the three construction steps (core enumeration, transition
//! insertion, leaf/ear completion) over core candidates until one yields a
//! drawing; isolated vertices are merged back at the end. The returned
//! embedding always passes the validator — the gate runs before returning.
//!
//! A node budget caps the total search effort; exhausting it is reported
//! distinctly from infeasibility, because an exhausted search has proven
//! nothing. With `jobs > 1`, core candidates are distributed over a worker
//! pool with first-success cancellation; the verdict is deterministic, the
//! witness may differ between runs.

use crate::core_enum::{collect_candidates, enumerate_candidates, Caps, CoreCandidate};
use crate::cover::min_vertex_cover;
use crate::embedding::{AugRegistry, Item, LevelEmbedding, Row, VRef};
use crate::isolated::insert_isolated;
use crate::model::{ConstrainedLevelGraph, V};
use crate::step3::{claim15_pipeline, Certificate, Step3Result};
use crate::transitions::insert_transitions;
use crate::validator::{check_embedding, CheckOptions};
use std::collections::HashSet;
use std::ops::ControlFlow;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use thiserror::Error;

/// Default cap on the cover size; larger parameters are refused unless
/// forced, since the search is exponential in `k² log k`.
pub const DEFAULT_K_LIMIT: usize = 8;

/// Default total node budget for one solve call.
pub const DEFAULT_SOLVE_BUDGET: u64 = 50_000_000;

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Use this cover instead of computing a minimum one.
    pub cover: Option<HashSet<V>>,
    /// Enumeration caps; derived from `k` when absent.
    pub caps: Option<Caps>,
    pub budget: u64,
    pub k_limit: usize,
    /// Allow covers beyond `k_limit`.
    pub force: bool,
    /// Worker threads over core candidates (1 = sequential).
    pub jobs: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            cover: None,
            caps: None,
            budget: DEFAULT_SOLVE_BUDGET,
            k_limit: DEFAULT_K_LIMIT,
            force: false,
            jobs: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub enum SolveOutcome {
    /// A validating drawing of the full instance (augmentation included).
    Feasible(LevelEmbedding, Option<Box<Certificate>>),
    Infeasible,
    BudgetExhausted,
}

impl SolveOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, SolveOutcome::Feasible(..))
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("instance is malformed: {0}")]
    BadInstance(String),
    #[error("cover size {0} exceeds the limit {1}; pass --force to proceed")]
    KTooLarge(usize, usize),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Restriction of `g` to its non-isolated vertices, with the map from new
/// to old vertex ids. Edge order is preserved, so edge ids coincide.
fn strip_isolated(g: &ConstrainedLevelGraph) -> (ConstrainedLevelGraph, Vec<V>) {
    let mut degree = vec![0usize; g.n()];
    for &(t, h) in g.edges() {
        degree[t] += 1;
        degree[h] += 1;
    }
    let keep: Vec<V> = (0..g.n()).filter(|&v| degree[v] > 0).collect();
    let kept: HashSet<V> = keep.iter().copied().collect();
    let vertices: Vec<(String, crate::level::Level)> = keep
        .iter()
        .map(|&v| (g.name(v).to_string(), g.level(v)))
        .collect();
    let edges: Vec<(String, String)> = g
        .edges()
        .iter()
        .map(|&(t, h)| (g.name(t).to_string(), g.name(h).to_string()))
        .collect();
    // Project the constraint closure, not the raw pairs: a chain running
    // through an isolated vertex still orders its kept endpoints, and the
    // restricted instance must see that induced pair.
    let constraints: Vec<_> = g
        .constraints()
        .keys()
        .map(|&l| {
            let closure = g
                .constraint_closure(l)
                .expect("acyclic closure checked before stripping");
            let mut pairs: Vec<(V, V)> = closure
                .into_iter()
                .filter(|&(a, b)| kept.contains(&a) && kept.contains(&b))
                .collect();
            pairs.sort_unstable();
            (
                l,
                pairs
                    .into_iter()
                    .map(|(a, b)| (g.name(a).to_string(), g.name(b).to_string()))
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let sub = ConstrainedLevelGraph::build(vertices, edges, constraints)
        .expect("restriction of a valid instance is valid");
    (sub, keep)
}

/// Rewrites an embedding of the stripped instance in terms of the original
/// vertex ids (`map[new] = old`; edge ids are shared).
fn remap_embedding(emb: &LevelEmbedding, map: &[V]) -> LevelEmbedding {
    let fix_v = |v: VRef| match v {
        VRef::Base(b) => VRef::Base(map[b]),
        aug => aug,
    };
    let mut aug = AugRegistry {
        vertices: emb.aug.vertices.clone(),
        edges: emb.aug.edges.clone(),
    };
    for av in &mut aug.vertices {
        if let Some((a, b)) = av.pair {
            av.pair = Some((map[a], map[b]));
        }
    }
    for ae in &mut aug.edges {
        ae.tail = fix_v(ae.tail);
        ae.head = fix_v(ae.head);
    }
    LevelEmbedding {
        rows: emb
            .rows
            .iter()
            .map(|r| Row {
                level: r.level,
                items: r
                    .items
                    .iter()
                    .map(|it| match *it {
                        Item::Vertex(v) => Item::Vertex(fix_v(v)),
                        p => p,
                    })
                    .collect(),
            })
            .collect(),
        aug,
    }
}

/// Runs Steps 2 and 3 for one core candidate. Returns the completed
/// drawing of the stripped instance on success.
fn complete_candidate(
    sub: &ConstrainedLevelGraph,
    cover: &HashSet<V>,
    caps: &Caps,
    cand: &CoreCandidate,
    nodes: &mut u64,
    budget: u64,
) -> Step3Result {
    let t_out = match insert_transitions(sub, cover, &cand.emb) {
        Some(t) => t,
        None => return Step3Result::No,
    };
    claim15_pipeline(sub, cover, &cand.emb, &t_out, caps, nodes, budget)
}

/// Full solver: Step 1 → Step 2 → Step 3 → isolated reinsertion.
pub fn solve(g: &ConstrainedLevelGraph, opts: &SolveOptions) -> Result<SolveOutcome, SolveError> {
    let problems = g.validate();
    if !problems.is_empty() {
        return Err(SolveError::BadInstance(format!("{:?}", problems[0])));
    }
    // Constraint cycles make the instance infeasible outright.
    for (&l, _) in g.constraints() {
        if g.constraint_closure(l).is_none() {
            return Ok(SolveOutcome::Infeasible);
        }
    }
    let (sub, map) = strip_isolated(g);
    if sub.n() == 0 {
        let emb = insert_isolated(
            g,
            &LevelEmbedding {
                rows: Vec::new(),
                aug: AugRegistry::default(),
            },
        )
        .map_err(|e| SolveError::Internal(e.to_string()))?;
        return Ok(SolveOutcome::Feasible(emb, None));
    }
    // Translate a user-provided cover (original ids) to the stripped ids.
    let cover: HashSet<V> = match &opts.cover {
        Some(c) => {
            let back: std::collections::HashMap<V, V> =
                map.iter().enumerate().map(|(nw, &old)| (old, nw)).collect();
            let mut out = HashSet::new();
            for &v in c {
                match back.get(&v) {
                    Some(&nw) => {
                        out.insert(nw);
                    }
                    None => {} // isolated cover members are useless but harmless
                }
            }
            out
        }
        None => min_vertex_cover(&sub),
    };
    // A provided set must actually cover every edge.
    for &(t, h) in sub.edges() {
        if !cover.contains(&t) && !cover.contains(&h) {
            return Err(SolveError::BadInstance(format!(
                "provided cover misses edge ({}, {})",
                sub.name(t),
                sub.name(h)
            )));
        }
    }
    let k = cover.len();
    if k > opts.k_limit && !opts.force {
        return Err(SolveError::KTooLarge(k, opts.k_limit));
    }
    let caps = opts.caps.unwrap_or_else(|| Caps::for_k(k.max(1)));

    let found: Option<(LevelEmbedding, Box<Certificate>)>;
    let mut exhausted = false;
    if opts.jobs <= 1 {
        let mut nodes = 0u64;
        let mut win = None;
        let flow = enumerate_candidates(&sub, &cover, &caps, |cand| {
            match complete_candidate(&sub, &cover, &caps, &cand, &mut nodes, opts.budget) {
                Step3Result::Found(emb, cert) => {
                    win = Some((emb, cert));
                    ControlFlow::Break(())
                }
                Step3Result::Exhausted => {
                    exhausted = true;
                    ControlFlow::Break(())
                }
                Step3Result::No => ControlFlow::Continue(()),
            }
        })
        .map_err(|v| SolveError::Internal(format!("{v:?}")))?;
        let _ = flow;
        found = win;
    } else {
        let cands = collect_candidates(&sub, &cover, &caps, None)
            .map_err(|v| SolveError::Internal(format!("{v:?}")))?;
        let done = AtomicBool::new(false);
        let used = AtomicU64::new(0);
        let slot: Mutex<Option<(LevelEmbedding, Box<Certificate>)>> = Mutex::new(None);
        let hit_budget = AtomicBool::new(false);
        let next = AtomicU64::new(0);
        std::thread::scope(|scope| {
            for _ in 0..opts.jobs {
                scope.spawn(|| loop {
                    if done.load(Ordering::Relaxed) {
                        return;
                    }
                    let i = next.fetch_add(1, Ordering::Relaxed) as usize;
                    if i >= cands.len() {
                        return;
                    }
                    let mut nodes = used.load(Ordering::Relaxed);
                    let before = nodes;
                    let r = complete_candidate(
                        &sub,
                        &cover,
                        &caps,
                        &cands[i],
                        &mut nodes,
                        opts.budget,
                    );
                    used.fetch_add(nodes - before, Ordering::Relaxed);
                    match r {
                        Step3Result::Found(emb, cert) => {
                            *slot.lock().unwrap() = Some((emb, cert));
                            done.store(true, Ordering::Relaxed);
                            return;
                        }
                        Step3Result::Exhausted => {
                            hit_budget.store(true, Ordering::Relaxed);
                            done.store(true, Ordering::Relaxed);
                            return;
                        }
                        Step3Result::No => {}
                    }
                });
            }
        });
        exhausted = hit_budget.load(Ordering::Relaxed);
        found = slot.lock().unwrap().take();
    }

    match found {
        Some((emb, cert)) => {
            let remapped = remap_embedding(&emb, &map);
            let full = insert_isolated(g, &remapped)
                .map_err(|e| SolveError::Internal(e.to_string()))?;
            let verdict = check_embedding(
                g,
                &full,
                CheckOptions {
                    ignore_augmentation: true,
                },
            );
            if !verdict.violations.is_empty() {
                return Err(SolveError::Internal(format!(
                    "completed drawing fails validation: {:?}",
                    verdict.violations[0]
                )));
            }
            Ok(SolveOutcome::Feasible(full, Some(cert)))
        }
        None if exhausted => Ok(SolveOutcome::BudgetExhausted),
        None => Ok(SolveOutcome::Infeasible),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_instance;
    use crate::oracle::{brute_force_solve, Outcome, DEFAULT_BUDGET};

    fn solve_src(src: &str) -> SolveOutcome {
        let g = parse_instance(src).unwrap();
        solve(&g, &SolveOptions::default()).unwrap()
    }

    #[test]
    fn instance_a_is_feasible() {
        // Two independent edges over two levels.
        let out = solve_src(
            r#"{"vertices":[{"id":"a1","level":1},{"id":"a2","level":1},
                            {"id":"b1","level":2},{"id":"b2","level":2}],
                "edges":[["a1","b1"],["a2","b2"]],"constraints":[]}"#,
        );
        assert!(out.is_feasible());
    }

    #[test]
    fn instance_b_is_infeasible() {
        // Crossing forced by constraints on both levels.
        let out = solve_src(
            r#"{"vertices":[{"id":"a1","level":1},{"id":"a2","level":1},
                            {"id":"b1","level":2},{"id":"b2","level":2}],
                "edges":[["a1","b1"],["a2","b2"]],
                "constraints":[{"level":1,"pairs":[["a1","a2"]]},
                               {"level":2,"pairs":[["b2","b1"]]}]}"#,
        );
        assert!(matches!(out, SolveOutcome::Infeasible));
    }

    #[test]
    fn isolated_vertices_are_reinserted() {
        let src = r#"{"vertices":[{"id":"a","level":1},{"id":"b","level":2},
                                  {"id":"x","level":1},{"id":"y","level":3}],
                      "edges":[["a","b"]],
                      "constraints":[{"level":1,"pairs":[["x","a"]]}]}"#;
        let g = parse_instance(src).unwrap();
        let out = solve(&g, &SolveOptions::default()).unwrap();
        match out {
            SolveOutcome::Feasible(emb, _) => {
                for v in 0..g.n() {
                    assert!(emb.find_vertex(VRef::Base(v)).is_some(), "vertex {v}");
                }
            }
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn agrees_with_oracle_on_small_suite() {
        let suite = [
            // Ear + leaf around a two-vertex cover.
            r#"{"vertices":[{"id":"ca","level":1},{"id":"cb","level":3},
                            {"id":"v","level":4},{"id":"w","level":2}],
                "edges":[["ca","v"],["cb","v"],["ca","w"]],"constraints":[]}"#,
            // Transition forced between the pair.
            r#"{"vertices":[{"id":"ca","level":1},{"id":"cb","level":3},
                            {"id":"p","level":2}],
                "edges":[["ca","p"],["p","cb"]],"constraints":[]}"#,
            // K4-ish infeasible-leaning instance.
            r#"{"vertices":[{"id":"a1","level":1},{"id":"a2","level":1},
                            {"id":"b1","level":2},{"id":"b2","level":2}],
                "edges":[["a1","b1"],["a1","b2"],["a2","b1"],["a2","b2"]],
                "constraints":[]}"#,
            // Same with an order constraint flipped on one side.
            r#"{"vertices":[{"id":"a1","level":1},{"id":"a2","level":1},
                            {"id":"b1","level":2},{"id":"b2","level":2},
                            {"id":"m","level":1}],
                "edges":[["a1","b1"],["a2","b2"],["m","b1"],["m","b2"]],
                "constraints":[{"level":1,"pairs":[["a1","m"],["m","a2"]]}]}"#,
        ];
        for src in suite {
            let g = parse_instance(src).unwrap();
            let fpt = solve(&g, &SolveOptions::default()).unwrap();
            let oracle = brute_force_solve(&g, DEFAULT_BUDGET);
            assert_eq!(
                fpt.is_feasible(),
                matches!(oracle, Outcome::Feasible(_)),
                "disagreement on {src}"
            );
        }
    }

    #[test]
    fn parallel_mode_matches_sequential_verdict() {
        let src = r#"{"vertices":[{"id":"ca","level":1},{"id":"cb","level":3},
                                  {"id":"v","level":4},{"id":"w","level":2}],
                      "edges":[["ca","v"],["cb","v"],["ca","w"]],"constraints":[]}"#;
        let g = parse_instance(src).unwrap();
        let seq = solve(&g, &SolveOptions::default()).unwrap();
        let par = solve(
            &g,
            &SolveOptions {
                jobs: 4,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        assert_eq!(seq.is_feasible(), par.is_feasible());
    }

    #[test]
    fn oversized_cover_is_refused_without_force() {
        let src = r#"{"vertices":[{"id":"a","level":1},{"id":"b","level":2}],
                      "edges":[["a","b"]],"constraints":[]}"#;
        let g = parse_instance(src).unwrap();
        let out = solve(
            &g,
            &SolveOptions {
                k_limit: 0,
                ..SolveOptions::default()
            },
        );
        assert!(matches!(out, Err(SolveError::KTooLarge(_, _))));
    }
}
