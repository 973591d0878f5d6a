//! Exact brute-force CLP solver: the ground truth at desk scale.
//!
//! The instance is properized, then per-level linear extensions of the
//! constraints are enumerated level-by-level (lexicographic topological
//! order enumeration), pruning any partial order tuple that already forces
//! an edge inversion against the previous level. Subdivision vertices carry
//! no constraints; their positions become the passage-token positions of
//! the reported embedding.
//!
//! The module optimizes for auditability, not speed: the only pruning is
//! the adjacent-level inversion check, and a configurable node budget
//! guards against blowups (exceeding it is a distinct outcome, never a
//! verdict).

use crate::embedding::{ERef, Item, LevelEmbedding, Row, VRef};
use crate::model::{ConstrainedLevelGraph, V};
use crate::validator::{check_embedding, CheckOptions};
use std::collections::{HashMap, HashSet};
use std::ops::ControlFlow;

/// Default backtracking-node budget (seconds-scale for n ≤ 12).
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Solver outcome. Budget exhaustion is not a verdict.
#[derive(Clone, Debug)]
pub enum Outcome {
    Feasible(LevelEmbedding),
    Infeasible,
    BudgetExhausted,
}

impl Outcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Outcome::Feasible(_))
    }
}

/// Counting outcome: number of valid per-level order tuples of the
/// *original* vertices (distinct restrictions to V; token arrangements are
/// quotiented out).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CountOutcome {
    Count(u64),
    BudgetExhausted,
}

struct Search {
    /// Properized instance.
    p: ConstrainedLevelGraph,
    /// For each properized vertex: `Some(edge)` if it is a subdivision
    /// vertex of that original edge.
    sub_of: Vec<Option<usize>>,
    budget: u64,
    nodes: u64,
}

impl Search {
    fn new(g: &ConstrainedLevelGraph, budget: u64) -> Self {
        let (p, map) = g.properize();
        let mut sub_of = vec![None; p.n()];
        for (ei, chain) in map.iter().enumerate() {
            for &v in chain {
                sub_of[v] = Some(ei);
            }
        }
        Search {
            p,
            sub_of,
            budget,
            nodes: 0,
        }
    }

    /// Enumerates every valid solution (as an embedding of the original
    /// instance), in deterministic lexicographic order. The visitor may
    /// stop the search. Returns `Err(())` on budget exhaustion.
    fn run(
        &mut self,
        visit: &mut dyn FnMut(&LevelEmbedding) -> ControlFlow<()>,
    ) -> Result<(), ()> {
        let by_level = self.p.vertices_by_level();
        let levels: Vec<(crate::level::Level, Vec<V>)> =
            by_level.into_iter().collect();
        // Per level: direct constraint pairs (originals only; subdivision
        // vertices are unconstrained).
        let mut pairs: Vec<Vec<(V, V)>> = Vec::new();
        for (l, _) in &levels {
            pairs.push(self.p.constraints().get(l).cloned().unwrap_or_default());
        }
        // Edges of the properized instance grouped by tail level index.
        let mut eidx: HashMap<crate::level::Level, usize> = HashMap::new();
        for (i, (l, _)) in levels.iter().enumerate() {
            eidx.insert(*l, i);
        }
        let mut edges_into: Vec<Vec<(V, V)>> = vec![Vec::new(); levels.len()];
        for &(t, h) in self.p.edges() {
            let hi = eidx[&self.p.level(h)];
            edges_into[hi].push((t, h));
        }
        let mut orders: Vec<Vec<V>> = Vec::new();
        self.rec_level(&levels, &pairs, &edges_into, 0, &mut orders, visit)
            .map(|_| ())
    }

    fn rec_level(
        &mut self,
        levels: &[(crate::level::Level, Vec<V>)],
        pairs: &[Vec<(V, V)>],
        edges_into: &[Vec<(V, V)>],
        li: usize,
        orders: &mut Vec<Vec<V>>,
        visit: &mut dyn FnMut(&LevelEmbedding) -> ControlFlow<()>,
    ) -> Result<ControlFlow<()>, ()> {
        if li == levels.len() {
            let emb = self.build_embedding(levels, orders);
            return Ok(visit(&emb));
        }
        let members = &levels[li].1;
        // Positions of previous-level vertices.
        let prev_pos: HashMap<V, usize> = if li == 0 {
            HashMap::new()
        } else {
            orders[li - 1]
                .iter()
                .enumerate()
                .map(|(i, &v)| (v, i))
                .collect()
        };
        // Incoming-edge tail positions per member of this level.
        let mut tails: HashMap<V, Vec<usize>> = HashMap::new();
        for &(t, h) in &edges_into[li] {
            tails.entry(h).or_default().push(prev_pos[&t]);
        }
        let succs: HashMap<V, Vec<V>> = {
            let mut m: HashMap<V, Vec<V>> = HashMap::new();
            for &(u, w) in &pairs[li] {
                m.entry(u).or_default().push(w);
            }
            m
        };
        let mut pending: HashMap<V, usize> = members.iter().map(|&v| (v, 0)).collect();
        for &(_, w) in &pairs[li] {
            *pending.get_mut(&w).unwrap() += 1;
        }
        let mut order: Vec<V> = Vec::with_capacity(members.len());
        let mut placed: HashSet<V> = HashSet::new();
        self.rec_vertex(
            levels, pairs, edges_into, li, orders, visit, &tails, &succs, &mut pending,
            &mut order, &mut placed, 0,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn rec_vertex(
        &mut self,
        levels: &[(crate::level::Level, Vec<V>)],
        pairs: &[Vec<(V, V)>],
        edges_into: &[Vec<(V, V)>],
        li: usize,
        orders: &mut Vec<Vec<V>>,
        visit: &mut dyn FnMut(&LevelEmbedding) -> ControlFlow<()>,
        tails: &HashMap<V, Vec<usize>>,
        succs: &HashMap<V, Vec<V>>,
        pending: &mut HashMap<V, usize>,
        order: &mut Vec<V>,
        placed: &mut HashSet<V>,
        max_tail: usize,
    ) -> Result<ControlFlow<()>, ()> {
        let members = &levels[li].1;
        if order.len() == members.len() {
            orders.push(order.clone());
            let reply = self.rec_level(levels, pairs, edges_into, li + 1, orders, visit)?;
            orders.pop();
            return Ok(reply);
        }
        let candidates: Vec<V> = members
            .iter()
            .copied()
            .filter(|v| !placed.contains(v) && pending[v] == 0)
            .collect();
        for v in candidates {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(());
            }
            // Inversion pruning: every incoming-edge tail position of v
            // must be >= the maximum tail position seen so far.
            let vtails = tails.get(&v).map(Vec::as_slice).unwrap_or(&[]);
            if vtails.iter().any(|&p| p < max_tail) {
                continue;
            }
            let new_max = vtails.iter().copied().max().map_or(max_tail, |m| m.max(max_tail));
            order.push(v);
            placed.insert(v);
            for w in succs.get(&v).into_iter().flatten() {
                *pending.get_mut(w).unwrap() -= 1;
            }
            let reply = self.rec_vertex(
                levels, pairs, edges_into, li, orders, visit, tails, succs, pending, order,
                placed, new_max,
            )?;
            for w in succs.get(&v).into_iter().flatten() {
                *pending.get_mut(w).unwrap() += 1;
            }
            placed.remove(&v);
            order.pop();
            if reply == ControlFlow::Break(()) {
                return Ok(reply);
            }
        }
        Ok(ControlFlow::Continue(()))
    }

    /// Contracts a full properized solution to an embedding of the
    /// original instance (subdivision vertices become passage tokens).
    fn build_embedding(
        &self,
        levels: &[(crate::level::Level, Vec<V>)],
        orders: &[Vec<V>],
    ) -> LevelEmbedding {
        let rows: Vec<Row> = levels
            .iter()
            .zip(orders)
            .map(|((l, _), order)| Row {
                level: *l,
                items: order
                    .iter()
                    .map(|&v| match self.sub_of[v] {
                        Some(e) => Item::Passage(ERef::Base(e)),
                        None => Item::Vertex(VRef::Base(v)),
                    })
                    .collect(),
            })
            .filter(|r| r.items.iter().any(|i| matches!(i, Item::Vertex(_))))
            .collect();
        LevelEmbedding {
            rows,
            aug: Default::default(),
        }
    }
}

/// Decides the instance by exhaustive enumeration; returns the first
/// solution in deterministic order, validated before return.
pub fn brute_force_solve(g: &ConstrainedLevelGraph, budget: u64) -> Outcome {
    let mut found = None;
    let mut search = Search::new(g, budget);
    let result = search.run(&mut |emb| {
        found = Some(emb.clone());
        ControlFlow::Break(())
    });
    match (result, found) {
        (_, Some(emb)) => {
            debug_assert!(check_embedding(g, &emb, CheckOptions::default()).ok());
            Outcome::Feasible(emb)
        }
        (Err(()), None) => Outcome::BudgetExhausted,
        (Ok(()), None) => Outcome::Infeasible,
    }
}

/// Counts valid per-level order tuples of the original vertices (distinct
/// restrictions to V).
pub fn count_solutions(g: &ConstrainedLevelGraph, budget: u64) -> CountOutcome {
    let mut seen: HashSet<Vec<Vec<VRef>>> = HashSet::new();
    let mut search = Search::new(g, budget);
    let result = search.run(&mut |emb| {
        let signature: Vec<Vec<VRef>> = emb
            .rows
            .iter()
            .map(|r| {
                r.items
                    .iter()
                    .filter_map(|i| match i {
                        Item::Vertex(v) => Some(*v),
                        _ => None,
                    })
                    .collect()
            })
            .collect();
        seen.insert(signature);
        ControlFlow::Continue(())
    });
    match result {
        Ok(()) => CountOutcome::Count(seen.len() as u64),
        Err(()) => CountOutcome::BudgetExhausted,
    }
}

/// Visits every valid embedding (deterministic order); used by test
/// harnesses that need many oracle-produced embeddings.
pub fn for_each_solution(
    g: &ConstrainedLevelGraph,
    budget: u64,
    mut visit: impl FnMut(&LevelEmbedding) -> ControlFlow<()>,
) -> Result<(), ()> {
    Search::new(g, budget).run(&mut |emb| visit(emb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_instance;

    fn instance_a() -> ConstrainedLevelGraph {
        parse_instance(
            r#"{"vertices":[{"id":"a1","level":1},{"id":"a2","level":1},
                            {"id":"b1","level":2},{"id":"b2","level":2}],
                "edges":[["a1","b1"],["a2","b2"]],
                "constraints":[{"level":1,"pairs":[["a1","a2"]]},
                               {"level":2,"pairs":[["b1","b2"]]}]}"#,
        )
        .unwrap()
    }

    /// Instance B: like A but with the upper constraint reversed.
    fn instance_b() -> ConstrainedLevelGraph {
        parse_instance(
            r#"{"vertices":[{"id":"a1","level":1},{"id":"a2","level":1},
                            {"id":"b1","level":2},{"id":"b2","level":2}],
                "edges":[["a1","b1"],["a2","b2"]],
                "constraints":[{"level":1,"pairs":[["a1","a2"]]},
                               {"level":2,"pairs":[["b2","b1"]]}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn instance_a_feasible_canonical() {
        match brute_force_solve(&instance_a(), DEFAULT_BUDGET) {
            Outcome::Feasible(emb) => {
                let g = instance_a();
                let names: Vec<Vec<String>> = emb
                    .rows
                    .iter()
                    .map(|r| {
                        r.items
                            .iter()
                            .filter_map(|i| match i {
                                Item::Vertex(VRef::Base(v)) => Some(g.name(*v).to_string()),
                                _ => None,
                            })
                            .collect()
                    })
                    .collect();
                assert_eq!(names, vec![vec!["a1", "a2"], vec!["b1", "b2"]]);
            }
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn instance_b_infeasible() {
        assert!(matches!(
            brute_force_solve(&instance_b(), DEFAULT_BUDGET),
            Outcome::Infeasible
        ));
        assert_eq!(
            count_solutions(&instance_b(), DEFAULT_BUDGET),
            CountOutcome::Count(0)
        );
    }

    #[test]
    fn unconstrained_matching_has_two_solutions() {
        let g = parse_instance(
            r#"{"vertices":[{"id":"a1","level":1},{"id":"a2","level":1},
                            {"id":"b1","level":2},{"id":"b2","level":2}],
                "edges":[["a1","b1"],["a2","b2"]],"constraints":[]}"#,
        )
        .unwrap();
        assert_eq!(count_solutions(&g, DEFAULT_BUDGET), CountOutcome::Count(2));
    }

    #[test]
    fn single_vertex_counts_one() {
        let g = parse_instance(
            r#"{"vertices":[{"id":"v","level":1}],"edges":[],"constraints":[]}"#,
        )
        .unwrap();
        assert_eq!(count_solutions(&g, DEFAULT_BUDGET), CountOutcome::Count(1));
        assert!(brute_force_solve(&g, DEFAULT_BUDGET).is_feasible());
    }

    #[test]
    fn budget_exhaustion_is_distinct() {
        let g = instance_a();
        assert!(matches!(
            brute_force_solve(&g, 1),
            Outcome::BudgetExhausted
        ));
    }

    #[test]
    fn improper_edge_solved_via_tokens() {
        // u@1 -> v@3 must route its token around the level-2 vertices.
        let g = parse_instance(
            r#"{"vertices":[{"id":"u","level":1},{"id":"m1","level":2},
                            {"id":"m2","level":2},{"id":"v","level":3}],
                "edges":[["u","v"],["u","m1"],["u","m2"]],
                "constraints":[{"level":2,"pairs":[["m1","m2"]]}]}"#,
        )
        .unwrap();
        match brute_force_solve(&g, DEFAULT_BUDGET) {
            Outcome::Feasible(emb) => {
                assert!(check_embedding(&g, &emb, CheckOptions::default()).ok());
                // The long edge leaves exactly one token on level 2.
                let row2 = &emb.rows[emb.row_at(crate::level::Level::int(2)).unwrap()];
                let tokens = row2
                    .items
                    .iter()
                    .filter(|i| matches!(i, Item::Passage(_)))
                    .count();
                assert_eq!(tokens, 1);
            }
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn counting_quotients_token_positions() {
        // One long edge through a level with a single other vertex: the
        // token can sit left or right of m, but both restrict to the same
        // vertex orders.
        let g = parse_instance(
            r#"{"vertices":[{"id":"u","level":1},{"id":"m","level":2},
                            {"id":"v","level":3}],
                "edges":[["u","v"]],"constraints":[]}"#,
        )
        .unwrap();
        assert_eq!(count_solutions(&g, DEFAULT_BUDGET), CountOutcome::Count(1));
    }
}
