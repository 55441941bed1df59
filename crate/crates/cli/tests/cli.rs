use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn kopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kopt")).args(args).env_remove("KOPT_THREADS").output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn random_instance(dir: &Path, n: usize, seed: u64) -> (PathBuf, PathBuf) {
    let (i, t) = (dir.join(format!("i{n}_{seed}.json")), dir.join(format!("t{n}_{seed}.json")));
    let out = kopt(&[
        "gen",
        "--type",
        "random",
        "--n",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        p(&i),
        "--tour-out",
        p(&t),
    ]);
    assert!(out.status.success());
    (i, t)
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = kopt(&["gen", "--type", "random", "--n", "10", "--seed", "1"]);
    let b = kopt(&["gen", "--type", "random", "--n", "10", "--seed", "1"]);
    assert_eq!(a.stdout, b.stdout);
    let (i, _) = random_instance(dir.path(), 10, 1);
    assert_eq!(std::fs::read(i).unwrap(), a.stdout);
}

#[test]
fn dp_and_naive_agree() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..3 {
        let (i, t) = random_instance(dir.path(), 10, seed);
        let dp = kopt(&["find-move", "--k", "4", "--mode", "dp", "--in", p(&i), "--tour", p(&t)]);
        let naive = kopt(&["find-move", "--k", "4", "--mode", "naive", "--in", p(&i), "--tour", p(&t)]);
        assert_eq!(json(&dp)["gain"], json(&naive)["gain"]);
        assert_eq!(dp.status.code(), naive.status.code());
    }
}

#[test]
fn move_report_shape() {
    let dir = tempfile::tempdir().unwrap();
    let (i, t) = random_instance(dir.path(), 9, 4);
    let out_file = dir.path().join("move.json");
    let out = kopt(&["find-move", "--k", "2", "--in", p(&i), "--tour", p(&t), "--out", p(&out_file)]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out_file).unwrap()).unwrap();
    let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
    assert_eq!(&keys[..6], ["k", "removed", "added", "gain", "pattern", "embedding"]);
    assert_eq!(v["k"], 2);
    assert!(v["gain"].as_i64().unwrap() > 0);
    assert_eq!(v["improving"], true);
}

#[test]
fn local_optimum_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let (i, t) = random_instance(dir.path(), 10, 2);
    let final_tour = dir.path().join("final.json");
    let ls = kopt(&["local-search", "--k", "3", "--in", p(&i), "--tour", p(&t), "--tour-out", p(&final_tour)]);
    assert_eq!(ls.status.code(), Some(0));
    let v = json(&ls);
    let steps = v["steps"].as_array().unwrap();
    assert!(!steps.is_empty());
    let weights: Vec<i64> = steps.iter().map(|s| s["weight"].as_i64().unwrap()).collect();
    assert!(weights.windows(2).all(|w| w[1] < w[0]));
    assert_eq!(v["final_weight"].as_i64(), weights.last().copied());

    let again = kopt(&["find-move", "--k", "3", "--in", p(&i), "--tour", p(&final_tour)]);
    assert_eq!(again.status.code(), Some(1));
    let v = json(&again);
    assert_eq!(v["improving"], false);
    assert!(v["gain"].as_i64().unwrap() <= 0);
}

#[test]
fn zero_steps_keep_the_tour() {
    let dir = tempfile::tempdir().unwrap();
    let (i, t) = random_instance(dir.path(), 10, 3);
    let out = kopt(&["local-search", "--k", "3", "--max-steps", "0", "--in", p(&i), "--tour", p(&t)]);
    assert_eq!(out.status.code(), Some(0));
    let given: Value = serde_json::from_str(&std::fs::read_to_string(t).unwrap()).unwrap();
    assert_eq!(json(&out)["tour"], given);
}

#[test]
fn ck_reports_exact_rationals() {
    for (k, c, alpha) in [(5, "11/3", "2/3"), (6, "4", "3/4"), (7, "17/4", "3/4")] {
        let out = kopt(&["ck", "--k", &k.to_string()]);
        assert!(out.status.success());
        let v = json(&out);
        assert_eq!((v["k"].as_u64(), v["c"].as_str(), v["alpha"].as_str()), (Some(k), Some(c), Some(alpha)));
    }
    let refused = kopt(&["ck", "--k", "9"]);
    assert_eq!(refused.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("--allow-large-k"));
}

#[test]
fn pattern_counts() {
    for (k, n) in [(2, 2), (3, 8), (4, 48), (5, 384)] {
        let v = json(&kopt(&["patterns", "--k", &k.to_string()]));
        assert_eq!(v["valid"], n);
    }
    let v = json(&kopt(&["patterns", "--k", "2", "--list"]));
    assert_eq!(v["patterns"], serde_json::json!([[[1, 2], [3, 4]], [[1, 3], [2, 4]]]));
}

#[test]
fn reduction_instances() {
    let dir = tempfile::tempdir().unwrap();
    let (i, t) = (dir.path().join("r.json"), dir.path().join("rt.json"));
    let out = kopt(&[
        "gen",
        "--type",
        "neg-triangle",
        "--n",
        "3",
        "--weights",
        "1,1,-3",
        "--out",
        p(&i),
        "--tour-out",
        p(&t),
    ]);
    assert!(out.status.success());
    let inst: Value = serde_json::from_str(&std::fs::read_to_string(&i).unwrap()).unwrap();
    let tour: Value = serde_json::from_str(&std::fs::read_to_string(&t).unwrap()).unwrap();
    assert_eq!(inst["n"], 12);
    assert_eq!(tour["order"].as_array().unwrap().len(), 12);
    let mv = kopt(&["find-move", "--k", "4", "--in", p(&i), "--tour", p(&t)]);
    assert_eq!(mv.status.code(), Some(0));

    let big = kopt(&["gen", "--type", "neg-triangle", "--n", "3", "--weights", "1,1,-99999999999"]);
    assert_eq!(big.status.code(), Some(2));
}

#[test]
fn oracles() {
    let v =
        json(&kopt(&["oracle", "treewidth", "--vertices", "5", "--edges", "1-2,1-3,1-4,1-5,2-3,2-4,2-5,3-4,3-5,4-5"]));
    assert_eq!((v["treewidth"].as_u64(), v["bruteforce"].as_u64()), (Some(4), Some(4)));
    let tri = kopt(&["oracle", "neg-triangle", "--n", "3", "--weights", "1,1,-3"]);
    assert_eq!(json(&tri)["witness"], serde_json::json!([1, 2, 3]));
    let none = kopt(&["oracle", "neg-triangle", "--n", "3", "--weights", "1,1,1"]);
    assert_eq!(none.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let (i, t) = random_instance(dir.path(), 8, 5);
    let naive = json(&kopt(&["oracle", "best-move", "--k", "3", "--in", p(&i), "--tour", p(&t)]));
    let dp = json(&kopt(&["find-move", "--k", "3", "--in", p(&i), "--tour", p(&t)]));
    assert_eq!(naive["gain"], dp["gain"]);
}

#[test]
fn tsplib_input() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("sq.tsp");
    std::fs::write(
        &f,
        "NAME: sq\nTYPE: TSP\nDIMENSION: 4\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 10 0\n3 10 10\n4 0 10\nEOF\n",
    )
    .unwrap();
    let t = dir.path().join("t.json");
    std::fs::write(&t, r#"{"order":[1,3,2,4]}"#).unwrap();
    let v = json(&kopt(&["find-move", "--k", "2", "--in", p(&f), "--tour", p(&t)]));
    assert_eq!(v["gain"], 8);
    let bad = dir.path().join("bad.tsp");
    std::fs::write(&bad, "NAME: x\nDIMENSION: 2\n").unwrap();
    assert_eq!(kopt(&["find-move", "--k", "2", "--in", p(&bad)]).status.code(), Some(2));
}

#[test]
fn bench_csv_is_deterministic() {
    let args = ["bench", "--k", "3", "--n", "10,12", "--seed", "7"];
    let a = String::from_utf8(kopt(&args).stdout).unwrap();
    let b = String::from_utf8(kopt(&args).stdout).unwrap();
    assert!(a.starts_with("k,n,alpha,mode,wall_ms,gain\n"));
    let gains = |s: &str| s.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().to_string()).collect::<Vec<_>>();
    assert_eq!(gains(&a), gains(&b));
    assert_eq!(a.lines().count(), 5);
}

#[test]
fn threads_do_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let (i, t) = random_instance(dir.path(), 12, 8);
    let one = kopt(&["--threads", "1", "find-move", "--k", "4", "--alpha", "1/2", "--in", p(&i), "--tour", p(&t)]);
    let four = kopt(&["find-move", "--k", "4", "--alpha", "1/2", "--threads", "4", "--in", p(&i), "--tour", p(&t)]);
    assert_eq!(one.stdout, four.stdout);
    let first = kopt(&["find-move", "--k", "4", "--policy", "first", "--threads", "3", "--in", p(&i), "--tour", p(&t)]);
    let first1 =
        kopt(&["find-move", "--k", "4", "--policy", "first", "--threads", "1", "--in", p(&i), "--tour", p(&t)]);
    assert_eq!(first.stdout, first1.stdout);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(kopt(&["find-move"]).status.code(), Some(2));
    assert_eq!(kopt(&["find-move", "--k", "2", "--in", "/nonexistent.json"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let (i, _) = random_instance(dir.path(), 8, 1);
    assert_eq!(kopt(&["find-move", "--k", "2", "--alpha", "3/2", "--in", p(&i)]).status.code(), Some(2));
    assert_eq!(kopt(&["find-move", "--k", "9", "--in", p(&i)]).status.code(), Some(2));
}
