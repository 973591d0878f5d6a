use clp::level::Level;
use clp::model::ConstrainedLevelGraph;
use clp::pipeline::{solve, SolveOptions};

fn build(
    levels: &[i64],
    edges: &[(usize, usize)],
    cons: &[(i64, Vec<(usize, usize)>)],
) -> ConstrainedLevelGraph {
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

fn main() {
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
    eprintln!("total cases: {}", cases.len());
    let args: Vec<String> = std::env::args().collect();
    let lo: usize = args[1].parse().unwrap();
    let hi: usize = args[2].parse().unwrap();
    for i in lo..hi.min(cases.len()) {
        let case = &cases[i];
        let t = std::time::Instant::now();
        let fpt = solve(
            &build(&case.levels, &case.edges, &case.cons),
            &SolveOptions::default(),
        )
        .unwrap();
        let ms = t.elapsed().as_millis();
        if ms > 200 {
            eprintln!(
                "case {i}: {ms}ms levels {:?} edges {:?} cons {:?} fpt_feasible={}",
                case.levels,
                case.edges,
                case.cons,
                fpt.is_feasible()
            );
        }
    }
    eprintln!("range done");
}
