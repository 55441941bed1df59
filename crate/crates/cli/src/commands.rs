use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use kopt_core::alpha::{c_of_k, ck_cost_estimate, MAX_DEFAULT_K, MAX_PROFILE_K};
use kopt_core::buckets::{make_buckets, parse_rational};
use kopt_core::decomp::{treewidth_exact, DepGraph};
use kopt_core::dpengine::{default_alpha, Engine, Policy};
use kopt_core::instance::{
    gen_negative_triangle_reduction, gen_random, gen_random_tour, Instance, ReductionInput, Tour, Weight,
};
use kopt_core::moves::{apply_move, matching_count, valid_patterns, ConnectionPattern, KMove, MoveReport};
use kopt_core::oracle::{naive_best_move, negative_triangle, treewidth_bruteforce};
use kopt_core::Rational;
use serde_json::{json, Value};

use crate::io::{emit, parse_weights, read_instance, read_tour};
use crate::{BenchArgs, GenArgs, GenType, Mode, PolicyArg, SearchArgs};

struct Found {
    gain: Weight,
    pattern: ConnectionPattern,
    embedding: Vec<usize>,
    kmove: KMove,
    next: Tour,
}

fn alpha_for(alpha: Option<&str>, k: usize) -> Result<Rational> {
    let a = match alpha {
        Some(s) => parse_rational(s)?,
        None => default_alpha(k),
    };
    make_buckets(1, a)?;
    Ok(a)
}

fn policy(p: PolicyArg) -> Policy {
    match p {
        PolicyArg::Best => Policy::Best,
        PolicyArg::First => Policy::First,
    }
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Dp => "dp",
        Mode::Naive => "naive",
    }
}

#[derive(Copy, Clone)]
struct Query {
    k: usize,
    alpha: Rational,
    mode: Mode,
    policy: Policy,
    budget: u128,
}

impl Query {
    fn from_args(a: &SearchArgs) -> Result<Self> {
        let alpha = alpha_for(a.alpha.as_deref(), a.k)?;
        Ok(Query { k: a.k, alpha, mode: a.mode, policy: policy(a.policy), budget: a.budget })
    }
}

/// Best move by the chosen mode; naive mode ignores the policy.
fn search(engine: &Engine, inst: &Instance, tour: &Tour, q: Query) -> Result<Option<Found>> {
    let Query { k, alpha, mode, policy, budget } = q;
    match mode {
        Mode::Dp => {
            let r = engine.best_move(inst, tour, k, alpha, policy)?;
            let (Some(gain), Some(pattern), Some(embedding), Some(kmove), Some(next)) =
                (r.gain, r.pattern, r.embedding, r.kmove, r.new_tour)
            else {
                return Ok(None);
            };
            Ok(Some(Found { gain, pattern, embedding, kmove, next }))
        }
        Mode::Naive => {
            let r = naive_best_move(inst, tour, k, budget)?;
            let (Some(gain), Some(w)) = (r.value, r.witness) else { return Ok(None) };
            let pattern = ConnectionPattern::from_pairs(k, &w.pattern)?;
            let (next, kmove) = apply_move(inst, tour, &pattern, &w.embedding)?;
            if kmove.gain != gain {
                bail!("naive gain {gain} but the move evaluates to {}", kmove.gain);
            }
            Ok(Some(Found { gain, pattern, embedding: w.embedding, kmove, next }))
        }
    }
}

fn move_json(found: Option<&Found>, k: usize) -> Value {
    match found {
        Some(f) => {
            let mut v =
                serde_json::to_value(MoveReport::new(&f.kmove, &f.pattern, &f.embedding)).expect("serializable");
            v["improving"] = json!(f.gain > 0);
            v
        }
        None => json!({ "k": k, "gain": null, "improving": false }),
    }
}

pub fn find_move(a: &SearchArgs) -> Result<u8> {
    let inst = read_instance(&a.input)?;
    let tour = read_tour(a.tour.as_deref(), &inst)?;
    let q = Query::from_args(a)?;
    let alpha = q.alpha;
    let t = Instant::now();
    let found = search(&Engine::new(), &inst, &tour, q)?;
    let mut out = move_json(found.as_ref(), a.k);
    out["mode"] = json!(mode_name(a.mode));
    out["alpha"] = json!(alpha.to_string());
    out["tour_weight"] = json!(inst.tour_weight(&tour));
    emit(a.out.as_deref(), &serde_json::to_string(&out)?)?;
    let improving = found.as_ref().is_some_and(|f| f.gain > 0);
    match &found {
        Some(f) if improving => eprintln!(
            "{}-move with gain {} ({} -> {}), {:.1} ms",
            a.k,
            f.gain,
            inst.tour_weight(&tour),
            inst.tour_weight(&f.next),
            t.elapsed().as_secs_f64() * 1e3
        ),
        _ => eprintln!("no improving {}-move", a.k),
    }
    Ok(if improving { 0 } else { 1 })
}

pub fn local_search(a: &SearchArgs, max_steps: usize, tour_out: Option<&Path>) -> Result<u8> {
    let inst = read_instance(&a.input)?;
    let mut tour = read_tour(a.tour.as_deref(), &inst)?;
    let q = Query::from_args(a)?;
    let alpha = q.alpha;
    let engine = Engine::new();
    let initial = inst.tour_weight(&tour);
    let mut steps = Vec::new();
    while steps.len() < max_steps {
        let Some(f) = search(&engine, &inst, &tour, q)? else { break };
        if f.gain <= 0 {
            break;
        }
        tour = f.next;
        steps.push(json!({ "gain": f.gain, "weight": inst.tour_weight(&tour) }));
    }
    let final_weight = inst.tour_weight(&tour);
    let out = json!({
        "k": a.k,
        "mode": mode_name(a.mode),
        "alpha": alpha.to_string(),
        "initial_weight": initial,
        "final_weight": final_weight,
        "steps": steps,
        "tour": tour.to_json(),
    });
    emit(a.out.as_deref(), &serde_json::to_string(&out)?)?;
    if let Some(p) = tour_out {
        emit(Some(p), &tour.to_json_string())?;
    }
    eprintln!("{} steps, weight {initial} -> {final_weight}", steps.len());
    Ok(0)
}

pub fn ck(k: usize, per_pattern: bool, allow_large: bool) -> Result<u8> {
    if k > MAX_DEFAULT_K && k <= MAX_PROFILE_K && !allow_large {
        bail!("k = {k} needs about {} treewidth computations; pass --allow-large-k to run it", ck_cost_estimate(k));
    }
    let t = Instant::now();
    let rep = c_of_k(k, per_pattern, allow_large)?;
    let mut out = json!({ "k": k, "c": rep.c.to_string(), "alpha": rep.alpha.to_string() });
    out["c_global"] = json!(rep.c_global.to_string());
    out["valid_patterns"] = json!(rep.valid_patterns);
    out["distinct_profiles"] = json!(rep.distinct_profiles);
    if let Some(pp) = &rep.per_pattern {
        out["per_pattern"] = serde_json::to_value(pp)?;
    }
    println!("{}", serde_json::to_string(&out)?);
    eprintln!("c({k}) = {} at alpha = {}, {:.1} s", rep.c, rep.alpha, t.elapsed().as_secs_f64());
    Ok(0)
}

pub fn patterns(k: usize, list: bool) -> Result<u8> {
    let ps = valid_patterns(k)?;
    let mut out = json!({ "k": k, "matchings": matching_count(k).to_string(), "valid": ps.len() });
    if list {
        out["patterns"] = ps.iter().map(|m| json!(m.one_based_pairs())).collect();
    }
    println!("{}", serde_json::to_string(&out)?);
    Ok(0)
}

pub fn gen(a: &GenArgs) -> Result<u8> {
    let (inst, tour) = match a.kind {
        GenType::Random => {
            if a.weights.is_some() || a.nonnegative {
                bail!("--weights and --nonnegative only apply to --type neg-triangle");
            }
            let inst = gen_random(a.n, a.seed, a.wmax.unwrap_or(1000))?;
            let tour = gen_random_tour(a.n, a.seed)?;
            (inst, tour)
        }
        GenType::NegTriangle => {
            let g = match &a.weights {
                Some(w) => ReductionInput::from_upper_triangle(a.n, &parse_weights(w)?)?,
                None => ReductionInput::random(a.n, a.seed, a.wmax.unwrap_or(10))?,
            };
            gen_negative_triangle_reduction(&g, a.nonnegative)?
        }
    };
    emit(a.out.as_deref(), &inst.to_json_string())?;
    if let Some(p) = &a.tour_out {
        emit(Some(p), &tour.to_json_string())?;
    }
    eprintln!("{}-vertex instance, tour weight {}", inst.n(), inst.tour_weight(&tour));
    Ok(0)
}

pub fn oracle_best_move(k: usize, input: &Path, tour: Option<&Path>, budget: u128) -> Result<u8> {
    let inst = read_instance(input)?;
    let tour = read_tour(tour, &inst)?;
    let q = Query { k, alpha: Rational::from_integer(1), mode: Mode::Naive, policy: Policy::Best, budget };
    let found = search(&Engine::new(), &inst, &tour, q)?;
    let mut out = move_json(found.as_ref(), k);
    out["mode"] = json!("naive");
    println!("{}", serde_json::to_string(&out)?);
    Ok(if found.is_some_and(|f| f.gain > 0) { 0 } else { 1 })
}

pub fn oracle_treewidth(vertices: usize, edges: &str) -> Result<u8> {
    let mut g = DepGraph::empty(vertices);
    for e in edges.split(',').map(str::trim).filter(|e| !e.is_empty()) {
        let (u, v) = e.split_once('-').with_context(|| format!("bad edge `{e}`, expected u-v"))?;
        let (u, v): (usize, usize) = (u.trim().parse()?, v.trim().parse()?);
        if u == 0 || v == 0 || u > vertices || v > vertices {
            bail!("edge `{e}` outside 1..={vertices}");
        }
        g.add_edge(u - 1, v - 1);
    }
    let (exact, order) = treewidth_exact(&g)?;
    let brute = treewidth_bruteforce(&g)?;
    let out = json!({
        "treewidth": exact,
        "bruteforce": brute,
        "order": order.iter().map(|v| v + 1).collect::<Vec<_>>(),
    });
    println!("{}", serde_json::to_string(&out)?);
    if exact != brute {
        bail!("subset DP gives {exact} but brute force {brute}");
    }
    Ok(0)
}

pub fn oracle_neg_triangle(n: usize, weights: Option<&str>, seed: u64, wmax: i64) -> Result<u8> {
    let g = match weights {
        Some(w) => ReductionInput::from_upper_triangle(n, &parse_weights(w)?)?,
        None => ReductionInput::random(n, seed, wmax)?,
    };
    let tri = negative_triangle(&g)?;
    let out = json!({
        "negative_triangle": tri.is_some(),
        "witness": tri.map(|t| t.map(|v| v + 1)),
    });
    println!("{}", serde_json::to_string(&out)?);
    Ok(if tri.is_some() { 0 } else { 1 })
}

pub fn bench(a: &BenchArgs) -> Result<u8> {
    let mut csv = String::from("k,n,alpha,mode,wall_ms,gain\n");
    let engine = Engine::new();
    for &k in &a.k {
        let alpha = alpha_for(a.alpha.as_deref(), k)?;
        for &n in &a.n {
            let inst = gen_random(n, a.seed.wrapping_add(n as u64), 1000)?;
            let tour = gen_random_tour(n, a.seed)?;
            for &mode in &a.modes {
                let mut best_ms = f64::INFINITY;
                let mut gain = None;
                for _ in 0..a.reps.max(1) {
                    let t = Instant::now();
                    let found = search(
                        &engine,
                        &inst,
                        &tour,
                        Query { k, alpha, mode, policy: Policy::Best, budget: u128::MAX },
                    )?;
                    best_ms = best_ms.min(t.elapsed().as_secs_f64() * 1e3);
                    gain = found.map(|f| f.gain);
                }
                let gain = gain.map_or(String::new(), |g| g.to_string());
                csv.push_str(&format!("{k},{n},{alpha},{},{best_ms:.3},{gain}\n", mode_name(mode)));
                eprintln!("k={k} n={n} {}: {best_ms:.1} ms", mode_name(mode));
            }
        }
    }
    emit(a.out.as_deref(), csv.trim_end())?;
    Ok(0)
}
