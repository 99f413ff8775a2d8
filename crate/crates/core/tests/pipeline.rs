//! End-to-end checks across modules: pool sampling, caches, selectors,
//! signatures and evaluation.

use hcbits::bitgen::{build_disagreement_table, build_response_matrix, sample_brief_pool, sample_lbp_pool, LbpParams};
use hcbits::dataset::{generate_synthetic_pairset, PlantedLayout};
use hcbits::eval::evaluate_descriptor;
use hcbits::rng::Rng;
use hcbits::selection::{
    compute_signature, select_boosting, select_correlation, select_hill_climb, select_random, PairDistanceState,
};

#[test]
fn boosting_finds_planted_bits() {
    let layout = PlantedLayout::new(31, &[0.05; 300], 724);
    let inst = layout.sample(32, 2000);
    let table = build_disagreement_table(&inst.responses, &inst.pairs).unwrap();
    let d = select_boosting(&table, &inst.labels(), 256, 0.5).unwrap();
    let informative = d.selected().iter().filter(|&&p| layout.flip_rate(p).is_some()).count();
    assert!(informative >= 200, "only {informative} informative bits selected");
}

#[test]
fn correlation_selection_beats_random_on_planted_instances() {
    // with 5% flip noise a random choice of 256 bits already separates the
    // classes perfectly, so the informative bits are made weak here
    let rates: Vec<f64> = (0..300).map(|i| 0.30 + 0.16 * i as f64 / 299.0).collect();
    let (mut corr, mut random) = (0.0, 0.0);
    for seed in 0..10 {
        let layout = PlantedLayout::new(40 + seed, &rates, 724);
        let inst = layout.sample(50 + seed, 2000);
        let table = build_disagreement_table(&inst.responses, &inst.pairs).unwrap();
        let labels = inst.labels();
        let c = select_correlation(&table, &inst.responses, &labels, 256, 0.2).unwrap();
        let r = select_random(1024, 256, seed).unwrap();
        corr += PairDistanceState::from_scratch(&table, &labels, c.selected()).auc_ratio().value();
        random += PairDistanceState::from_scratch(&table, &labels, r.selected()).auc_ratio().value();
    }
    assert!(corr > random, "corr {} vs random {}", corr / 10.0, random / 10.0);
}

#[test]
fn eval_on_training_pairs_reproduces_trace_auc() {
    let set = generate_synthetic_pairset(5, 20, 6, 0.3).unwrap();
    for pool in [
        sample_brief_pool(5, 256, 2, 2.0).unwrap(),
        sample_lbp_pool(5, 256, LbpParams::default()).unwrap(),
    ] {
        let responses = build_response_matrix(&pool, set.patches()).unwrap();
        let table = build_disagreement_table(&responses, set.pairs()).unwrap();
        let (d, trace) = select_hill_climb(&table, &set.labels(), 32, Some(300), 6).unwrap();
        let report = evaluate_descriptor(&d, &pool, &set).unwrap();
        assert_eq!(report.auc, trace.final_auc().unwrap());
        assert_eq!(report.curve.points.len(), 33);
    }
}

#[test]
fn signature_bits_equal_direct_evaluation() {
    let pool = sample_brief_pool(8, 1024, 2, 2.0).unwrap();
    let d = select_random(1024, 256, 7).unwrap();
    let set = generate_synthetic_pairset(9, 2, 2, 0.0).unwrap();
    let patch = &set.patches()[0];
    let sig = compute_signature(&d, &pool, patch).unwrap();
    assert_eq!(sig.bytes().len(), 32);
    assert_eq!(compute_signature(&d, &pool, &set.patches()[1]).unwrap(), sig);
    let prepared = pool.prepare(patch);
    let mut rng = Rng::new(10);
    for _ in 0..100 {
        let k = rng.below_usize(256);
        assert_eq!(sig.get(k), pool.eval(d.selected()[k], &prepared).unwrap());
    }
}

#[test]
fn random_baseline_shape() {
    let d = select_random(1024, 256, 7).unwrap();
    assert_eq!(d.len(), 256);
    let mut s = d.selected().to_vec();
    s.sort_unstable();
    s.dedup();
    assert_eq!(s.len(), 256);
    assert!(s.iter().all(|&p| p < 1024));
    assert_eq!(select_random(1024, 256, 7).unwrap(), d);
    let mut full = select_random(50, 50, 1).unwrap().selected().to_vec();
    full.sort_unstable();
    assert_eq!(full, (0..50).collect::<Vec<_>>());
}
