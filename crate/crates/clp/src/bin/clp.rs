//! Command-line front end: solving, oracle checks, validation, instance
//! generation, solver comparison, and drawing export.
//!
//! Exit codes: 0 feasible/ok, 1 infeasible (or validation failure /
//! solver disagreement), 2 usage or format error, 3 budget exhausted.

use clap::{Args, Parser, Subcommand, ValueEnum};
use clp::core_enum::{collect_candidates, Caps};
use clp::cover::min_vertex_cover;
use clp::export::{export_dot, export_svg};
use clp::generate::{generate_instance, GenSpec};
use clp::io::{embedding_to_json, instance_to_json, parse_embedding, parse_instance};
use clp::model::{ConstrainedLevelGraph, V};
use clp::oracle::{brute_force_solve, Outcome, DEFAULT_BUDGET};
use clp::pipeline::{solve, SolveOptions, SolveOutcome, DEFAULT_SOLVE_BUDGET};
use clp::step3::Certificate;
use clp::validator::{check_embedding, CheckOptions};
use serde_json::{json, Value};
use std::collections::HashSet;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "clp", version, about = "Constrained level planarity toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args, Clone)]
struct SolveArgs {
    /// Instance file (JSON).
    instance: String,
    /// Total search node budget.
    #[arg(long)]
    budget: Option<u64>,
    /// Explicit cover as comma-separated vertex names.
    #[arg(long)]
    cover: Option<String>,
    /// Enumeration caps: m_vis=..,roster=..,traversal=..
    #[arg(long)]
    caps: Option<String>,
    /// Worker threads over core candidates.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Allow covers larger than the default limit of 8.
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Decide the instance with the cover-parameterized solver.
    Solve(SolveArgs),
    /// Decide the instance by exhaustive search.
    Oracle {
        instance: String,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Check an embedding file against its instance.
    Validate {
        instance: String,
        embedding: String,
    },
    /// Print a minimum vertex cover.
    Cover { instance: String },
    /// Enumerate core candidates for the cover.
    Cores {
        instance: String,
        #[arg(long)]
        cover: Option<String>,
        #[arg(long)]
        caps: Option<String>,
        /// Stop after this many candidates.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Solve and emit the completion certificate chain.
    Step3(SolveArgs),
    /// Generate a random instance.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        h: usize,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Invert sampled constraints (infeasible-biased).
        #[arg(long)]
        adversarial: bool,
    },
    /// Run both solvers on each instance and report agreement.
    Compare {
        instances: Vec<String>,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Render a drawing as SVG or DOT (chosen by output extension).
    Export {
        instance: String,
        /// Embedding file; when absent the instance is solved first.
        #[arg(long)]
        embedding: Option<String>,
        #[arg(long)]
        out: String,
        #[arg(long)]
        force: bool,
    },
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn load_instance(path: &str) -> Result<ConstrainedLevelGraph, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    let g = parse_instance(&text).map_err(|e| format!("{path}: {e}"))?;
    let problems = g.validate();
    if let Some(v) = problems.first() {
        return Err(format!("{path}: {v:?}"));
    }
    Ok(g)
}

fn parse_cover(g: &ConstrainedLevelGraph, spec: &str) -> Result<HashSet<V>, String> {
    let mut out = HashSet::new();
    for name in spec.split(',').filter(|s| !s.is_empty()) {
        let v = (0..g.n())
            .find(|&v| g.name(v) == name)
            .ok_or_else(|| format!("unknown vertex {name:?} in --cover"))?;
        out.insert(v);
    }
    Ok(out)
}

fn parse_caps(spec: &str) -> Result<Caps, String> {
    let mut caps = Caps::for_k(1);
    for part in spec.split(',').filter(|s| !s.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("bad --caps entry {part:?}, expected key=value"))?;
        let value: usize = value
            .parse()
            .map_err(|_| format!("bad --caps value in {part:?}"))?;
        match key {
            "m_vis" => caps.m_vis = value,
            "roster" => caps.roster = value,
            "traversal" => caps.traversal_factor = value,
            other => return Err(format!("unknown --caps key {other:?}")),
        }
    }
    Ok(caps)
}

fn solve_options(g: &ConstrainedLevelGraph, args: &SolveArgs) -> Result<SolveOptions, String> {
    Ok(SolveOptions {
        cover: match &args.cover {
            Some(spec) => Some(parse_cover(g, spec)?),
            None => None,
        },
        caps: match &args.caps {
            Some(spec) => Some(parse_caps(spec)?),
            None => None,
        },
        budget: args.budget.unwrap_or(DEFAULT_SOLVE_BUDGET),
        jobs: args.jobs.max(1),
        force: args.force,
        ..SolveOptions::default()
    })
}

fn certificate_to_json(cert: &Certificate) -> Value {
    json!({
        "channels": cert.channels.iter().map(|c| json!({
            "cover_vertex": c.v,
            "direction": if c.up { "up" } else { "down" },
            "cells": c.cells,
        })).collect::<Vec<_>>(),
        "traversal": cert.traversal.iter()
            .map(|wave| wave.iter().copied().collect::<Vec<_>>())
            .collect::<Vec<_>>(),
        "insertion": cert.insertion.iter().map(|(l, seq)| json!({
            "level": l.to_string(),
            "sequence": seq.iter().map(|&(v, p)| json!([v, p])).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "leaf_channels": cert.leaf_channels.iter()
            .map(|(&v, &c)| json!([v, c])).collect::<Vec<_>>(),
        "orientations": cert.orientations.iter().map(|(l, os)| json!({
            "level": l.to_string(),
            "ears": os.iter().map(|(v, s)| json!([v, format!("{s:?}")])).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "channel_report": {
            "cells": cert.channel_report.cells,
            "channels": cert.channel_report.channels,
            "bound": cert.channel_report.bound,
            "within_bound": cert.channel_report.ok,
        },
        "audit_violations": cert.audit,
    })
}

fn run_solve(args: &SolveArgs, format: Format, with_certificate: bool) -> ExitCode {
    let g = match load_instance(&args.instance) {
        Ok(g) => g,
        Err(e) => return usage_error(&e),
    };
    let opts = match solve_options(&g, args) {
        Ok(o) => o,
        Err(e) => return usage_error(&e),
    };
    match solve(&g, &opts) {
        Ok(SolveOutcome::Feasible(emb, cert)) => {
            match format {
                Format::Json => {
                    let mut doc = json!({
                        "verdict": "feasible",
                        "embedding": embedding_to_json(&g, &emb),
                    });
                    if with_certificate {
                        doc["certificate"] = cert
                            .as_deref()
                            .map(certificate_to_json)
                            .unwrap_or(Value::Null);
                    }
                    println!("{}", serde_json::to_string_pretty(&doc).unwrap());
                }
                Format::Text => {
                    println!("feasible");
                    for row in &emb.rows {
                        let names: Vec<&str> = row
                            .items
                            .iter()
                            .filter_map(|it| match *it {
                                clp::embedding::Item::Vertex(clp::embedding::VRef::Base(v)) => {
                                    Some(g.name(v))
                                }
                                _ => None,
                            })
                            .collect();
                        println!("  level {}: {}", row.level, names.join(" "));
                    }
                    if with_certificate {
                        match cert.as_deref() {
                            Some(c) => println!(
                                "certificate: {} channels over {} cells (bound {}), {} waves, audit {}",
                                c.channel_report.channels,
                                c.channel_report.cells,
                                c.channel_report.bound,
                                c.traversal.len(),
                                if c.audit.is_empty() { "clean" } else { "VIOLATIONS" },
                            ),
                            None => println!("certificate: none (no cover-side work needed)"),
                        }
                    }
                }
            }
            ExitCode::SUCCESS
        }
        Ok(SolveOutcome::Infeasible) => {
            report_verdict(format, "infeasible");
            ExitCode::from(1)
        }
        Ok(SolveOutcome::BudgetExhausted) => {
            report_verdict(format, "budget-exhausted");
            ExitCode::from(3)
        }
        Err(e) => usage_error(&e.to_string()),
    }
}

fn report_verdict(format: Format, verdict: &str) {
    match format {
        Format::Json => println!("{}", json!({ "verdict": verdict })),
        Format::Text => println!("{verdict}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Solve(args) => run_solve(args, cli.format, false),
        Command::Step3(args) => run_solve(args, cli.format, true),
        Command::Oracle { instance, budget } => {
            let g = match load_instance(instance) {
                Ok(g) => g,
                Err(e) => return usage_error(&e),
            };
            match brute_force_solve(&g, budget.unwrap_or(DEFAULT_BUDGET)) {
                Outcome::Feasible(emb) => {
                    match cli.format {
                        Format::Json => println!(
                            "{}",
                            json!({"verdict": "feasible",
                                   "embedding": embedding_to_json(&g, &emb)})
                        ),
                        Format::Text => println!("feasible"),
                    }
                    ExitCode::SUCCESS
                }
                Outcome::Infeasible => {
                    report_verdict(cli.format, "infeasible");
                    ExitCode::from(1)
                }
                Outcome::BudgetExhausted => {
                    report_verdict(cli.format, "budget-exhausted");
                    ExitCode::from(3)
                }
            }
        }
        Command::Validate {
            instance,
            embedding,
        } => {
            let g = match load_instance(instance) {
                Ok(g) => g,
                Err(e) => return usage_error(&e),
            };
            let text = match std::fs::read_to_string(embedding) {
                Ok(t) => t,
                Err(e) => return usage_error(&format!("{embedding}: {e}")),
            };
            let emb = match parse_embedding(&g, &text) {
                Ok(e) => e,
                Err(e) => return usage_error(&format!("{embedding}: {e}")),
            };
            let verdict = check_embedding(&g, &emb, CheckOptions::default());
            if verdict.violations.is_empty() {
                report_verdict(cli.format, "valid");
                ExitCode::SUCCESS
            } else {
                match cli.format {
                    Format::Json => println!(
                        "{}",
                        json!({"verdict": "invalid",
                               "violations": verdict.violations.iter()
                                   .map(|v| format!("{v:?}")).collect::<Vec<_>>()})
                    ),
                    Format::Text => {
                        println!("invalid");
                        for v in &verdict.violations {
                            println!("  {v:?}");
                        }
                    }
                }
                ExitCode::from(1)
            }
        }
        Command::Cover { instance } => {
            let g = match load_instance(instance) {
                Ok(g) => g,
                Err(e) => return usage_error(&e),
            };
            let mut cover: Vec<V> = min_vertex_cover(&g).into_iter().collect();
            cover.sort_unstable();
            let names: Vec<&str> = cover.iter().map(|&v| g.name(v)).collect();
            match cli.format {
                Format::Json => println!("{}", json!({"k": cover.len(), "cover": names})),
                Format::Text => println!("k={} cover: {}", cover.len(), names.join(" ")),
            }
            ExitCode::SUCCESS
        }
        Command::Cores {
            instance,
            cover,
            caps,
            limit,
        } => {
            let g = match load_instance(instance) {
                Ok(g) => g,
                Err(e) => return usage_error(&e),
            };
            let cover = match cover {
                Some(spec) => match parse_cover(&g, spec) {
                    Ok(c) => c,
                    Err(e) => return usage_error(&e),
                },
                None => min_vertex_cover(&g),
            };
            let caps = match caps {
                Some(spec) => match parse_caps(spec) {
                    Ok(c) => c,
                    Err(e) => return usage_error(&e),
                },
                None => Caps::for_k(cover.len().max(1)),
            };
            match collect_candidates(&g, &cover, &caps, *limit) {
                Ok(cands) => {
                    match cli.format {
                        Format::Json => println!(
                            "{}",
                            json!({"count": cands.len(),
                                   "candidates": cands.iter()
                                       .map(|c| embedding_to_json(&g, &c.emb))
                                       .collect::<Vec<_>>()})
                        ),
                        Format::Text => println!("{} core candidates", cands.len()),
                    }
                    ExitCode::SUCCESS
                }
                Err(v) => usage_error(&format!("{v:?}")),
            }
        }
        Command::Gen {
            n,
            k,
            h,
            density,
            seed,
            adversarial,
        } => {
            let spec = GenSpec {
                n: *n,
                k: *k,
                h: *h,
                density: *density,
                seed: *seed,
                adversarial: *adversarial,
            };
            match generate_instance(&spec) {
                Ok(g) => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&instance_to_json(&g)).unwrap()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => usage_error(&e.to_string()),
            }
        }
        Command::Compare {
            instances,
            budget,
            jobs,
        } => {
            if instances.is_empty() {
                return usage_error("compare needs at least one instance file");
            }
            let mut disagreements = 0usize;
            println!("{:<28} {:>10} {:>10} {:>9} {:>9}", "instance", "fpt", "oracle", "fpt_ms", "oracle_ms");
            for path in instances {
                let g = match load_instance(path) {
                    Ok(g) => g,
                    Err(e) => return usage_error(&e),
                };
                let opts = SolveOptions {
                    budget: budget.unwrap_or(DEFAULT_SOLVE_BUDGET),
                    jobs: jobs.unwrap_or(1).max(1),
                    ..SolveOptions::default()
                };
                let t0 = Instant::now();
                let fpt = match solve(&g, &opts) {
                    Ok(o) => o,
                    Err(e) => return usage_error(&format!("{path}: {e}")),
                };
                let fpt_ms = t0.elapsed().as_millis();
                let t1 = Instant::now();
                let oracle = brute_force_solve(&g, budget.unwrap_or(DEFAULT_BUDGET));
                let oracle_ms = t1.elapsed().as_millis();
                let fv = match &fpt {
                    SolveOutcome::Feasible(emb, _) => {
                        let ok = check_embedding(
                            &g,
                            emb,
                            CheckOptions {
                                ignore_augmentation: true,
                            },
                        )
                        .violations
                        .is_empty();
                        if ok { "feasible" } else { "INVALID" }
                    }
                    SolveOutcome::Infeasible => "infeasible",
                    SolveOutcome::BudgetExhausted => "exhausted",
                };
                let ov = match &oracle {
                    Outcome::Feasible(_) => "feasible",
                    Outcome::Infeasible => "infeasible",
                    Outcome::BudgetExhausted => "exhausted",
                };
                let decided = fv != "exhausted" && ov != "exhausted";
                if (decided && fv != ov) || fv == "INVALID" {
                    disagreements += 1;
                    println!("{path:<28} {fv:>10} {ov:>10} {fpt_ms:>9} {oracle_ms:>9}  <-- DISAGREE");
                } else {
                    println!("{path:<28} {fv:>10} {ov:>10} {fpt_ms:>9} {oracle_ms:>9}");
                }
            }
            if disagreements == 0 {
                println!("agreement on all {} instances", instances.len());
                ExitCode::SUCCESS
            } else {
                println!("{disagreements} disagreement(s)");
                ExitCode::from(1)
            }
        }
        Command::Export {
            instance,
            embedding,
            out,
            force,
        } => {
            let g = match load_instance(instance) {
                Ok(g) => g,
                Err(e) => return usage_error(&e),
            };
            let emb = match embedding {
                Some(path) => {
                    let text = match std::fs::read_to_string(path) {
                        Ok(t) => t,
                        Err(e) => return usage_error(&format!("{path}: {e}")),
                    };
                    match parse_embedding(&g, &text) {
                        Ok(e) => e,
                        Err(e) => return usage_error(&format!("{path}: {e}")),
                    }
                }
                None => {
                    let opts = SolveOptions {
                        force: *force,
                        ..SolveOptions::default()
                    };
                    match solve(&g, &opts) {
                        Ok(SolveOutcome::Feasible(emb, _)) => emb,
                        Ok(SolveOutcome::Infeasible) => {
                            eprintln!("instance is infeasible; nothing to draw");
                            return ExitCode::from(1);
                        }
                        Ok(SolveOutcome::BudgetExhausted) => {
                            eprintln!("budget exhausted before a drawing was found");
                            return ExitCode::from(3);
                        }
                        Err(e) => return usage_error(&e.to_string()),
                    }
                }
            };
            let rendered = if out.ends_with(".dot") {
                export_dot(&g, &emb)
            } else {
                export_svg(&g, &emb)
            };
            match rendered {
                Ok(doc) => match std::fs::write(out, doc) {
                    Ok(()) => {
                        println!("wrote {out}");
                        ExitCode::SUCCESS
                    }
                    Err(e) => usage_error(&format!("{out}: {e}")),
                },
                Err(e) => usage_error(&e.to_string()),
            }
        }
    }
}
