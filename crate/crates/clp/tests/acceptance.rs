//! Acceptance suite: seven end-to-end criteria, one test each, printing a
//! single pass/fail line per criterion (visible with `--nocapture`).

use clp::cover::{classify_vertices, min_vertex_cover};
use clp::edge_order::{compatible_order_of, embedding_from_order};
use clp::embedding::{LevelEmbedding, Scene, VRef};
use clp::generate::{generate_instance, leaf_heavy, GenSpec};
use clp::isolated::insert_isolated;
use clp::level::Level;
use clp::model::{ConstrainedLevelGraph, V};
use clp::oracle::{brute_force_solve, for_each_solution, Outcome, DEFAULT_BUDGET};
use clp::pipeline::{solve, SolveOptions, SolveOutcome};
use clp::validator::{check_embedding, CheckOptions};
use std::collections::{BTreeMap, HashSet};
use std::ops::ControlFlow;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

fn report(criterion: usize, what: &str, pass: bool) {
    println!(
        "criterion {criterion} ({what}): {}",
        if pass { "pass" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({what}) failed");
}

/// Builds an instance from vertex levels, index edges, and per-level
/// constraint pairs.
fn build(levels: &[i64], edges: &[(usize, usize)], cons: &[(i64, Vec<(usize, usize)>)]) -> ConstrainedLevelGraph {
    let vertices = levels
        .iter()
        .enumerate()
        .map(|(i, &l)| (format!("v{i}"), Level::new(l, 1)))
        .collect();
    let named = edges
        .iter()
        .map(|&(t, h)| (format!("v{t}"), format!("v{h}")))
        .collect();
    let constraints = cons
        .iter()
        .map(|(l, pairs)| {
            (
                Level::new(*l, 1),
                pairs
                    .iter()
                    .map(|&(a, b)| (format!("v{a}"), format!("v{b}")))
                    .collect(),
            )
        })
        .collect();
    ConstrainedLevelGraph::build(vertices, named, constraints).unwrap()
}

/// All antisymmetric subsets of ordered pairs over `verts`, size ≤ 2.
fn constraint_options(verts: &[usize]) -> Vec<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    for &a in verts {
        for &b in verts {
            if a != b {
                pairs.push((a, b));
            }
        }
    }
    let mut out = vec![Vec::new()];
    for &p in &pairs {
        out.push(vec![p]);
    }
    for i in 0..pairs.len() {
        for j in i + 1..pairs.len() {
            let (a, b) = pairs[i];
            if pairs[j] == (b, a) {
                continue;
            }
            out.push(vec![pairs[i], pairs[j]]);
        }
    }
    out
}

/// Nondecreasing level sequences over {1,2,3}; every instance is
/// isomorphic to one with sorted levels, and edges/constraints range over
/// all assignments, so this covers every isomorphism class.
fn level_sequences(n: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = vec![1i64; n];
    loop {
        out.push(cur.clone());
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < 3 {
                cur[i] += 1;
                let v = cur[i];
                for j in i + 1..n {
                    cur[j] = v;
                }
                break;
            }
        }
    }
}

#[test]
fn criterion_1_exhaustive_oracle_equivalence() {
    // Every constrained level graph with ≤ 5 vertices, ≤ 3 levels, every
    // edge set, and every antisymmetric constraint set with ≤ 2 pairs per
    // level, up to vertex relabeling.
    struct Case {
        levels: Vec<i64>,
        edges: Vec<(usize, usize)>,
        cons: Vec<(i64, Vec<(usize, usize)>)>,
    }
    let mut cases: Vec<Case> = Vec::new();
    for n in 1..=5usize {
        for levels in level_sequences(n) {
            let cross: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter(|&(i, j)| levels[i] < levels[j])
                .collect();
            // Per-level constraint option lists.
            let mut level_opts: Vec<(i64, Vec<Vec<(usize, usize)>>)> = Vec::new();
            for l in 1..=3i64 {
                let verts: Vec<usize> = (0..n).filter(|&v| levels[v] == l).collect();
                if verts.len() >= 2 {
                    level_opts.push((l, constraint_options(&verts)));
                }
            }
            for mask in 0u32..(1 << cross.len()) {
                let edges: Vec<(usize, usize)> = cross
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &p)| p)
                    .collect();
                // Cartesian product over per-level options.
                let mut idx = vec![0usize; level_opts.len()];
                loop {
                    let cons: Vec<(i64, Vec<(usize, usize)>)> = level_opts
                        .iter()
                        .zip(&idx)
                        .map(|(&(l, ref opts), &i)| (l, opts[i].clone()))
                        .filter(|(_, ps)| !ps.is_empty())
                        .collect();
                    cases.push(Case {
                        levels: levels.clone(),
                        edges: edges.clone(),
                        cons,
                    });
                    let mut d = level_opts.len();
                    loop {
                        if d == 0 {
                            break;
                        }
                        d -= 1;
                        idx[d] += 1;
                        if idx[d] < level_opts[d].1.len() {
                            break;
                        }
                        idx[d] = 0;
                    }
                    if idx.iter().all(|&i| i == 0) {
                        break;
                    }
                }
            }
        }
    }
    let total = cases.len();
    let next = AtomicUsize::new(0);
    let disagreements = Mutex::new(Vec::<String>::new());
    let threads = std::thread::available_parallelism().map_or(4, |p| p.get());
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= total {
                    return;
                }
                if i % 2000 == 0 {
                    eprintln!("  criterion 1 progress: {i}/{total}");
                }
                let case = &cases[i];
                let g = build(&case.levels, &case.edges, &case.cons);
                let fpt = solve(&g, &SolveOptions::default()).expect("solver error");
                let oracle = brute_force_solve(&g, DEFAULT_BUDGET);
                let agree = match (&fpt, &oracle) {
                    (SolveOutcome::Feasible(..), Outcome::Feasible(_)) => true,
                    (SolveOutcome::Infeasible, Outcome::Infeasible) => true,
                    _ => false,
                };
                if !agree {
                    disagreements.lock().unwrap().push(format!(
                        "levels {:?} edges {:?} cons {:?}: fpt {:?} vs oracle {}",
                        case.levels,
                        case.edges,
                        case.cons,
                        match fpt {
                            SolveOutcome::Feasible(..) => "feasible",
                            SolveOutcome::Infeasible => "infeasible",
                            SolveOutcome::BudgetExhausted => "exhausted",
                        },
                        match oracle {
                            Outcome::Feasible(_) => "feasible",
                            Outcome::Infeasible => "infeasible",
                            Outcome::BudgetExhausted => "exhausted",
                        }
                    ));
                }
            });
        }
    });
    let bad = disagreements.into_inner().unwrap();
    for d in bad.iter().take(10) {
        println!("  disagreement: {d}");
    }
    println!("  {} instances checked exhaustively", total);
    report(1, "exhaustive oracle equivalence", bad.is_empty());
}

/// Deterministic spec for the randomized suites.
fn random_spec(seed: u64, adversarial: bool) -> GenSpec {
    GenSpec {
        n: 4 + (seed % 7) as usize,
        k: 1 + (seed % 3) as usize,
        h: 2 + (seed % 2) as usize,
        density: 0.7,
        seed,
        adversarial,
    }
}

#[test]
fn criterion_2_randomized_oracle_equivalence() {
    let mut checked = 0usize;
    let mut ok = true;
    let mut seed = 0u64;
    while checked < 500 {
        let spec = random_spec(seed, seed % 2 == 1);
        seed += 1;
        let g = match generate_instance(&spec) {
            Ok(g) => g,
            Err(_) => continue,
        };
        let fpt = solve(&g, &SolveOptions::default()).expect("solver error");
        let oracle = brute_force_solve(&g, DEFAULT_BUDGET);
        match (&fpt, &oracle) {
            (SolveOutcome::Feasible(emb, _), Outcome::Feasible(_)) => {
                let verdict = check_embedding(
                    &g,
                    emb,
                    CheckOptions {
                        ignore_augmentation: true,
                    },
                );
                if !verdict.violations.is_empty() {
                    println!("  invalid witness on seed {}", spec.seed);
                    ok = false;
                }
            }
            (SolveOutcome::Infeasible, Outcome::Infeasible) => {}
            other => {
                println!("  disagreement on seed {}: {:?}", spec.seed, other.1);
                ok = false;
            }
        }
        checked += 1;
    }
    report(2, "randomized oracle equivalence, 500 instances", ok);
}

#[test]
fn criterion_3_structural_bounds() {
    let mut checked = 0usize;
    let mut ok = true;
    let mut seed = 10_000u64;
    while checked < 200 {
        let spec = random_spec(seed, false);
        seed += 1;
        let g = match generate_instance(&spec) {
            Ok(g) => g,
            Err(_) => continue,
        };
        // Only instances that actually admit a drawing count as planar.
        let oracle = brute_force_solve(&g, DEFAULT_BUDGET);
        let Outcome::Feasible(oracle_emb) = oracle else {
            continue;
        };
        let cover = min_vertex_cover(&g);
        let k = cover.len();
        let cl = classify_vertices(&g, &cover).expect("cover is a cover");
        if cl.high.len() > 2 * k {
            println!("  high-degree bound violated on seed {}", spec.seed);
            ok = false;
        }
        // Ears per level, in drawings produced by both solvers.
        let mut per_level: BTreeMap<Level, usize> = BTreeMap::new();
        for &(v, _, _) in &cl.ears {
            *per_level.entry(g.level(v)).or_default() += 1;
        }
        let fpt = solve(&g, &SolveOptions::default()).expect("solver error");
        let SolveOutcome::Feasible(fpt_emb, _) = fpt else {
            println!("  solver missed feasible seed {}", spec.seed);
            ok = false;
            continue;
        };
        for emb in [&oracle_emb, &fpt_emb] {
            let opts = CheckOptions {
                ignore_augmentation: true,
            };
            if !check_embedding(&g, emb, opts).violations.is_empty() {
                println!("  drawing fails validation on seed {}", spec.seed);
                ok = false;
            }
        }
        if per_level.values().any(|&c| c > 2 * k) {
            println!("  ears-per-level bound violated on seed {}", spec.seed);
            ok = false;
        }
        checked += 1;
    }
    report(3, "structural bounds on 200 planar instances", ok);
}

#[test]
fn criterion_4_edge_order_round_trip() {
    let mut checked = 0usize;
    let mut ok = true;
    let mut seed = 20_000u64;
    while checked < 1000 {
        let spec = random_spec(seed, false);
        seed += 1;
        let g = match generate_instance(&spec) {
            Ok(g) => g,
            Err(_) => continue,
        };
        let mut batch: Vec<LevelEmbedding> = Vec::new();
        let _ = for_each_solution(&g, DEFAULT_BUDGET, |emb| {
            batch.push(emb.clone());
            if batch.len() >= 25 {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        for emb in batch {
            if checked >= 1000 {
                break;
            }
            let scene = Scene::from_embedding(&g, emb.clone());
            let Some(order) = compatible_order_of(&scene) else {
                println!("  no compatible order for a valid drawing (seed {})", spec.seed);
                ok = false;
                checked += 1;
                continue;
            };
            match embedding_from_order(&g, &emb.aug, &order) {
                Some(rebuilt) if rebuilt == emb => {}
                _ => {
                    println!("  round trip failed on seed {}", spec.seed);
                    ok = false;
                }
            }
            checked += 1;
        }
    }
    report(4, "1000 edge-order round trips", ok);
}

#[test]
fn criterion_5_certificate_properties() {
    let mut ok = true;
    let mut certified = 0usize;
    let mut seed = 30_000u64;
    let mut attempts = 0usize;
    while certified < 60 && attempts < 2000 {
        attempts += 1;
        let spec = random_spec(seed, false);
        seed += 1;
        let g = match generate_instance(&spec) {
            Ok(g) => g,
            Err(_) => continue,
        };
        let fpt = solve(&g, &SolveOptions::default()).expect("solver error");
        let SolveOutcome::Feasible(_, Some(cert)) = fpt else {
            continue;
        };
        certified += 1;
        // The audit re-checks T1 inside every wave, the interval condition
        // T2, and the insertion-sequence invariants; it must be clean.
        if !cert.audit.is_empty() {
            println!("  audit violations on seed {}: {:?}", spec.seed, cert.audit);
            ok = false;
        }
        // Claim-10-style counting bound on the channel population.
        let r = &cert.channel_report;
        if !r.ok || r.channels > r.cells * (4 * r.cells + 2 * min_vertex_cover(&g).len()) {
            println!("  channel bound violated on seed {}", spec.seed);
            ok = false;
        }
        // Waves partition the used channels: consecutive waves differ and
        // no channel returns after its wave closes.
        let mut gone: HashSet<usize> = HashSet::new();
        for (i, wave) in cert.traversal.iter().enumerate() {
            if wave.is_empty() {
                println!("  empty wave on seed {}", spec.seed);
                ok = false;
            }
            if i > 0 && *wave == cert.traversal[i - 1] {
                println!("  repeated wave on seed {}", spec.seed);
                ok = false;
            }
            if i > 0 {
                for c in &cert.traversal[i - 1] {
                    if !wave.contains(c) {
                        gone.insert(*c);
                    }
                }
            }
            if wave.iter().any(|c| gone.contains(c)) {
                println!("  closed channel reused on seed {}", spec.seed);
                ok = false;
            }
        }
        // Each leaf is inserted exactly once (prefix invariant I1) and the
        // channel it used exists.
        let mut seen: HashSet<V> = HashSet::new();
        for seq in cert.insertion.values() {
            for &(w, _) in seq {
                if !seen.insert(w) {
                    println!("  leaf inserted twice on seed {}", spec.seed);
                    ok = false;
                }
            }
        }
        for (&w, &c) in &cert.leaf_channels {
            if c >= cert.channels.len() || !seen.contains(&w) {
                println!("  dangling leaf/channel record on seed {}", spec.seed);
                ok = false;
            }
        }
    }
    println!("  {certified} certificates audited");
    report(5, "certificate property suites", ok && certified >= 50);
}

#[test]
fn criterion_6_isolated_reinsertion() {
    let mut ok = true;
    let mut checked = 0usize;
    let mut seed = 40_000u64;
    while checked < 100 {
        let base_spec = GenSpec {
            n: 5,
            k: 2,
            h: 3,
            density: 0.6,
            seed,
            adversarial: false,
        };
        seed += 1;
        let base = match generate_instance(&base_spec) {
            Ok(g) => g,
            Err(_) => continue,
        };
        let Outcome::Feasible(sub_emb) = brute_force_solve(&base, DEFAULT_BUDGET) else {
            continue;
        };
        // Inject isolated vertices, each constrained against an existing
        // vertex on its level (new-before-old only, so no cycles).
        let mut vertices: Vec<(String, Level)> = (0..base.n())
            .map(|v| (base.name(v).to_string(), base.level(v)))
            .collect();
        let edges: Vec<(String, String)> = base
            .edges()
            .iter()
            .map(|&(t, h)| (base.name(t).to_string(), base.name(h).to_string()))
            .collect();
        let mut constraints: Vec<(Level, Vec<(String, String)>)> = base
            .constraints()
            .iter()
            .map(|(&l, ps)| {
                (
                    l,
                    ps.iter()
                        .map(|&(a, b)| (base.name(a).to_string(), base.name(b).to_string()))
                        .collect(),
                )
            })
            .collect();
        for j in 0..2 {
            let anchor = (seed as usize + j * 3) % base.n();
            let level = base.level(anchor);
            let iso = format!("iso{j}");
            vertices.push((iso.clone(), level));
            let pair = if j % 2 == 0 {
                (iso, base.name(anchor).to_string())
            } else {
                (base.name(anchor).to_string(), iso)
            };
            match constraints.iter_mut().find(|(l, _)| *l == level) {
                Some((_, ps)) => ps.push(pair),
                None => constraints.push((level, vec![pair])),
            }
        }
        let full = ConstrainedLevelGraph::build(vertices, edges, constraints).unwrap();
        if full
            .constraints()
            .keys()
            .any(|&l| full.constraint_closure(l).is_none())
        {
            continue; // injected pair collided into a cycle; skip
        }
        // Base vertex ids coincide with the full instance's first ids, and
        // the edge lists are identical, so the embedding carries over.
        let carried = LevelEmbedding {
            rows: sub_emb.rows.clone(),
            aug: sub_emb.aug.clone(),
        };
        let completed = match insert_isolated(&full, &carried) {
            Ok(e) => e,
            Err(e) => {
                println!("  reinsertion failed on seed {}: {e}", base_spec.seed);
                ok = false;
                checked += 1;
                continue;
            }
        };
        let verdict = check_embedding(&full, &completed, CheckOptions::default());
        if !verdict.violations.is_empty() {
            println!(
                "  completed embedding invalid on seed {}: {:?}",
                base_spec.seed, verdict.violations[0]
            );
            ok = false;
        }
        for v in 0..full.n() {
            if completed.find_vertex(VRef::Base(v)).is_none() {
                println!("  vertex missing after reinsertion on seed {}", base_spec.seed);
                ok = false;
            }
        }
        checked += 1;
    }
    report(6, "isolated reinsertion, 100 instances", ok);
}

#[test]
fn criterion_7_leaf_heavy_scaling() {
    let mut times = Vec::new();
    for n in [20usize, 40, 80] {
        let g = leaf_heavy(n, 7);
        // Best of three runs smooths scheduler noise.
        let mut best = f64::MAX;
        for _ in 0..3 {
            let t = Instant::now();
            let out = solve(&g, &SolveOptions::default()).expect("solver error");
            assert!(out.is_feasible(), "leaf-heavy n={n} must be feasible");
            best = best.min(t.elapsed().as_secs_f64());
        }
        times.push(best.max(1e-4));
    }
    let slope = (times[2] / times[0]).ln() / (80f64 / 20f64).ln();
    println!(
        "  times {:?} s, log-log slope {:.2}",
        times
            .iter()
            .map(|t| (t * 1000.0).round() / 1000.0)
            .collect::<Vec<_>>(),
        slope
    );
    report(7, "leaf-heavy scaling, slope < 4", slope < 4.0);
}
