use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hcbits::bitgen::{BitPool, BitSpec, PoolKind};
use hcbits::dataset::PairSet;
use hcbits::selection::{Descriptor, SelectionTrace};

fn hcbits(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hcbits"))
        .args(args)
        .current_dir(dir)
        .env_remove("HCBITS_OUT")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = hcbits(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Pool of 512 brief bits plus a small synthetic training set.
fn fixture(dir: &Path) {
    ok(dir, &["gen-pool", "--kind", "brief", "--B", "512", "--seed", "1"]);
    ok(dir, &["gen-synth", "--classes", "15", "--per-class", "5", "--seed", "2"]);
}

#[test]
fn brief_pool_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-pool", "--kind", "brief", "--B", "1024", "--seed", "1"]);
    let text = fs::read_to_string(dir.path().join("pool.txt")).unwrap();
    assert_eq!(text.lines().count(), 1 + 1024);
    let pool = BitPool::from_text(&text).unwrap();
    assert_eq!(pool.len(), 1024);
    assert_eq!(pool.to_text(), text);
}

#[test]
fn lbp_pool_is_vector_pairs() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-pool", "--kind", "lbp", "--B", "4096", "--out", "lbp.txt"]);
    let pool = BitPool::read(&dir.path().join("lbp.txt")).unwrap();
    assert_eq!(pool.kind(), PoolKind::Lbp);
    assert_eq!(pool.len(), 4096);
    assert!(pool.specs().iter().all(|s| matches!(s, BitSpec::VectorPair { .. })));
}

#[test]
fn invalid_pool_size_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = hcbits(dir.path(), &["gen-pool", "--B", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("pool.txt").exists());
}

#[test]
fn hillclimb_runs_write_descriptors_and_increasing_traces() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    ok(d, &["select", "--pool", "pool.txt", "--pairset", "synth-2.pairset", "--b", "64"]);
    for r in 0..10 {
        let (pool_ref, desc) = Descriptor::read(&d.join(format!("hillclimb-run{r}.desc"))).unwrap();
        assert_eq!(pool_ref, "pool.txt");
        assert_eq!(desc.len(), 64);
        let trace = SelectionTrace::from_csv(&fs::read_to_string(d.join(format!("hillclimb-run{r}.trace.csv"))).unwrap())
            .unwrap();
        let accepted: Vec<f64> = trace.accepted().map(|e| e.auc).collect();
        assert!(accepted.windows(2).all(|w| w[0] < w[1]));
    }
    let runs = fs::read_to_string(d.join("hillclimb-runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 11);
}

#[test]
fn boost_selects_distinct_bits() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    ok(d, &["select", "--pool", "pool.txt", "--pairset", "synth-2.pairset", "--method", "boost", "--shrinkage", "0.5"]);
    let (_, desc) = Descriptor::read(&d.join("boost-run0.desc")).unwrap();
    let mut s = desc.selected().to_vec();
    s.sort_unstable();
    s.dedup();
    assert_eq!(s.len(), 256);
    assert!(!d.join("boost-run1.desc").exists());
}

#[test]
fn eval_on_training_set_reproduces_trace_auc() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    ok(d, &["select", "--pool", "pool.txt", "--pairset", "synth-2.pairset", "--b", "48", "--runs", "1"]);
    ok(d, &["eval", "--descriptor", "hillclimb-run0.desc", "--pairset", "synth-2.pairset", "--train-name", "synth-2"]);
    let trace = SelectionTrace::from_csv(&fs::read_to_string(d.join("hillclimb-run0.trace.csv")).unwrap()).unwrap();
    let report = fs::read_to_string(d.join("hillclimb-report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(lines.next(), Some("method,train,test,run,auc,fpr95"));
    let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&fields[..4], &["hillclimb", "synth-2", "synth-2", "0"]);
    assert_eq!(fields[4].parse::<f64>().unwrap(), trace.final_auc().unwrap());

    let curve = fs::read_to_string(d.join("hillclimb-curve-run0.csv")).unwrap();
    assert_eq!(curve.lines().next(), Some("threshold,fpr,tpr"));
    assert_eq!(curve.lines().count(), 1 + 49);
}

#[test]
fn retrieve_reports_summary_and_tunes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    ok(d, &["select", "--pool", "pool.txt", "--pairset", "synth-2.pairset", "--method", "random", "--runs", "1"]);
    ok(d, &["gen-synth", "--kind", "images", "--groups", "10", "--per-group", "4", "--seed", "3"]);
    let stdout = ok(d, &["retrieve", "--manifest", "synth-db-3/manifest.txt", "--descriptor", "random-run0.desc", "--k", "3", "--tune"]);
    let summary = stdout.lines().find(|l| l.starts_with("precision_at_k,3,")).expect("summary line");
    let fields: Vec<&str> = summary.split(',').collect();
    assert_eq!(fields[3], "threshold");
    let tuned: f64 = fields[2].parse().unwrap();
    assert!((0.0..=1.0).contains(&tuned));

    let csv = fs::read_to_string(d.join("retrieval.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("query_id,rank,retrieved_id,match_count"));
    assert_eq!(csv.lines().count(), 1 + 40 * 3);

    // a fixed threshold can never beat the tuned one
    let fixed = ok(d, &["retrieve", "--manifest", "synth-db-3/manifest.txt", "--descriptor", "random-run0.desc", "--threshold", "0"]);
    let p0: f64 = fixed.trim().split(',').nth(2).unwrap().parse().unwrap();
    assert!(p0 <= tuned);
}

#[test]
fn missing_manifest_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    ok(dir.path(), &["select", "--pool", "pool.txt", "--pairset", "synth-2.pairset", "--method", "random", "--runs", "1"]);
    let out = hcbits(dir.path(), &["retrieve", "--manifest", "nope.txt", "--descriptor", "random-run0.desc"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_reports_two_labeled_timings() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(dir.path(), &["bench", "--num-pairs", "2000", "--B", "256", "--b", "64"]);
    let timing = |label: &str| -> f64 {
        let line = stdout.lines().find(|l| l.starts_with(label)).unwrap_or_else(|| panic!("no {label} in {stdout}"));
        line.split(',').nth(1).unwrap().parse().unwrap()
    };
    assert!(timing("cache_construction_seconds,") > 0.0);
    assert!(timing("selection_seconds,") > 0.0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(hcbits(d, &["no-such-command"]).status.code(), Some(1));
    assert_eq!(hcbits(d, &["select", "--pool", "pool.txt"]).status.code(), Some(1));
    assert_eq!(hcbits(d, &["select", "--pool", "missing.txt", "--pairset", "x"]).status.code(), Some(2));
    fs::write(d.join("garbage.txt"), "not a pool\n").unwrap();
    assert_eq!(hcbits(d, &["eval", "--descriptor", "garbage.txt", "--pairset", "x"]).status.code(), Some(2));
    assert_eq!(hcbits(d, &["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_and_environment_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    fs::write(d.join("run.conf"), "# defaults\nselect.b = 40\nruns = 1\nseed = 9\nmethod = random\n").unwrap();

    ok(d, &["--config", "run.conf", "select", "--pool", "pool.txt", "--pairset", "synth-2.pairset"]);
    let (_, desc) = Descriptor::read(&d.join("random-run0.desc")).unwrap();
    assert_eq!(desc.len(), 40);
    assert!(!d.join("random-run1.desc").exists());

    // explicit flags override the file
    ok(d, &["select", "--config", "run.conf", "--pool", "pool.txt", "--pairset", "synth-2.pairset", "--b", "24"]);
    let (_, desc) = Descriptor::read(&d.join("random-run0.desc")).unwrap();
    assert_eq!(desc.len(), 24);

    // unscoped keys that a command lacks are ignored; scoped unknown keys are errors
    ok(d, &["--config", "run.conf", "gen-pool", "--B", "64", "--out", "small.txt"]);
    fs::write(d.join("bad.conf"), "gen-pool.tau = 0.3\n").unwrap();
    assert_eq!(hcbits(d, &["--config", "bad.conf", "gen-pool"]).status.code(), Some(1));

    let out_env = d.join("from-env");
    let status = Command::new(env!("CARGO_BIN_EXE_hcbits"))
        .args(["gen-pool", "--B", "32"])
        .current_dir(d)
        .env("HCBITS_OUT", &out_env)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out_env.join("pool.txt").exists());
}

#[test]
fn pairset_container_from_cli_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-synth", "--classes", "4", "--per-class", "3", "--seed", "8"]);
    let bytes = fs::read(dir.path().join("synth-8.pairset")).unwrap();
    let set = PairSet::from_bytes("synth-8", &bytes).unwrap();
    assert_eq!(set.to_bytes(), bytes);
    assert_eq!(set.pairs().len(), 2 * 4 * 3);
}
