//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p longicog-cli --test acceptance`.

#[path = "../../core/tests/common/oracles.rs"]
mod oracles;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use longicog::cohort::{ChangeLabel, CognitiveState};
use longicog::evaluation::{
    cross_validate_probed, make_folds, metrics_from_confusion, FoldStrategy, Normalization,
};
use longicog::experiment::{compare, predict_change, Protocol};
use longicog::learners::forest::{Execution, ForestParams, RandomForest};
use longicog::learners::svm::{dual_objective, smo_solve};
use longicog::learners::tree::{DecisionTree, TreeParams};
use longicog::longitudinal::{
    build_change_dataset, build_state_dataset, change_dataset, change_label, enumerate_pairs, state_dataset,
    HistoryScheme, PairScheme, StateMode,
};
use longicog::synth::{generate_cohort, SynthConfig};
use longicog::{LearnerConfig, LearnerKind};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed <= limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn dataset_shape() -> Outcome {
    let store = generate_cohort(&SynthConfig::default()).map_err(|e| e.to_string())?;
    let modalities = vec!["acoustic".to_string()];
    let start = Instant::now();
    let states = build_state_dataset(&store, StateMode::Historical, &modalities, HistoryScheme::Mean).map_err(|e| e.to_string())?;
    let changes = build_change_dataset(&store, &modalities, PairScheme::Concat).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(states.len() == 243, || format!("state dataset has {} samples, expected 243", states.len()))?;
    ensure(changes.len() == 1448, || format!("change dataset has {} samples, expected 1448", changes.len()))?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("243 state / 1448 change samples in {elapsed:.2?}"))
}

fn directional_m1() -> Outcome {
    let start = Instant::now();
    let store = generate_cohort(&SynthConfig::default()).map_err(|e| e.to_string())?;
    let protocol = Protocol::new(vec!["acoustic".into()], LearnerConfig::new(LearnerKind::Forest));
    let cmp = compare(&store, &protocol, HistoryScheme::Mean).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let (base, hist) = (cmp.baseline.pooled.f1 * 100.0, cmp.proposed.pooled.f1 * 100.0);
    ensure(hist - base >= 5.0, || format!("historical F1 {hist:.1} vs baseline {base:.1}: gain below 5 points"))?;
    within(elapsed, Duration::from_secs(120))?;
    Ok(format!(
        "RF macro-F1 baseline {base:.1} → historical {hist:.1} (+{:.1} points) in {elapsed:.2?}",
        hist - base
    ))
}

fn m2_learnability() -> Outcome {
    let start = Instant::now();
    let store = generate_cohort(&SynthConfig {
        p_flip: 0.15,
        ..SynthConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let protocol = Protocol::new(vec!["acoustic".into()], LearnerConfig::new(LearnerKind::Forest));
    let report = predict_change(&store, &protocol, PairScheme::Concat).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    // Majority-class predictor scored on the same labels.
    let support: Vec<usize> = report.pooled.confusion.iter().map(|row| row.iter().sum()).collect();
    let majority = (0..support.len()).max_by_key(|&c| (support[c], std::cmp::Reverse(c))).unwrap_or(0);
    let mut confusion = vec![vec![0; support.len()]; support.len()];
    for (c, &n) in support.iter().enumerate() {
        confusion[c][majority] = n;
    }
    let floor = metrics_from_confusion(confusion).f1 * 100.0;
    let f1 = report.pooled.f1 * 100.0;
    ensure(f1 - floor >= 10.0, || format!("change F1 {f1:.1} vs majority {floor:.1}: margin below 10 points"))?;
    within(elapsed, Duration::from_secs(120))?;
    Ok(format!(
        "RF macro-F1 {f1:.1} vs majority-class {floor:.1} (+{:.1} points, {} pairs) in {elapsed:.2?}",
        f1 - floor,
        report.pooled.n
    ))
}

fn label_map_totality() -> Outcome {
    use CognitiveState::{Hc, Mci};
    let table = [
        (Mci, Hc, ChangeLabel::Improved),
        (Hc, Mci, ChangeLabel::Decline),
        (Hc, Hc, ChangeLabel::NoChange),
        (Mci, Mci, ChangeLabel::NoChange),
    ];
    for (from, to, want) in table {
        let got = change_label(from, to);
        ensure(got == want, || format!("{from} → {to} gave {got}, expected {want}"))?;
    }
    for n in 0u8..=10 {
        let indices: Vec<u8> = (1..=n).collect();
        let pairs = enumerate_pairs(&indices);
        let n = usize::from(n);
        let unique: BTreeSet<_> = pairs.iter().collect();
        ensure(pairs.len() == n * n.saturating_sub(1) && unique.len() == pairs.len(), || {
            format!("{n} sessions gave {} pairs", pairs.len())
        })?;
    }
    Ok("4/4 state pairs mapped; n(n−1) pairs for n = 0..=10".into())
}

fn learner_oracles() -> Outcome {
    let start = Instant::now();
    for seed in 0..500 {
        let (x, y, k) = oracles::small_dataset(seed);
        let tree = DecisionTree::fit(&x, &y, k, &TreeParams::default());
        oracles::check_tree(&tree, &x, &y, k).map_err(|e| format!("tree seed {seed}: {e}"))?;
    }
    let mut worst_dual: f64 = 0.0;
    for seed in 0..300 {
        let (kernel, labels, c) = oracles::small_svm_problem(seed);
        let sol = smo_solve(&kernel, &labels, c, 1e-3, 100_000).map_err(|e| format!("smo seed {seed}: {e}"))?;
        let gap = (dual_objective(&kernel, &labels, &sol.alpha) - oracles::brute_force_dual(&kernel, &labels, c)).abs();
        ensure(gap <= 1e-3, || format!("smo seed {seed}: dual objective off by {gap:e}"))?;
        worst_dual = worst_dual.max(gap);
    }
    let mut worst_grad: f64 = 0.0;
    for seed in 0..20 {
        let err = oracles::gradient_check(seed, 1e-5);
        ensure(err <= 1e-4, || format!("mlp seed {seed}: relative gradient error {err:e}"))?;
        worst_grad = worst_grad.max(err);
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!(
        "500 trees optimal; SMO max dual gap {worst_dual:.1e} over 300 problems; MLP max grad rel. err {worst_grad:.1e} over 20 configs; {elapsed:.2?}"
    ))
}

fn metric_oracle() -> Outcome {
    let fixtures = oracles::metric_fixtures();
    for f in &fixtures {
        let m = metrics_from_confusion(f.confusion.clone());
        for (what, got, want) in [
            ("accuracy", m.accuracy, f.accuracy),
            ("precision", m.precision, f.precision),
            ("recall", m.recall, f.recall),
            ("f1", m.f1, f.f1),
        ] {
            ensure((got - want).abs() <= 1e-12, || format!("{}: {what} {got} expected {want}", f.name))?;
        }
    }
    Ok(format!("{} confusion fixtures exact to 1e-12", fixtures.len()))
}

fn leakage_guards() -> Outcome {
    let store = generate_cohort(&SynthConfig::default()).map_err(|e| e.to_string())?;
    let samples = build_state_dataset(&store, StateMode::Historical, &["acoustic".to_string()], HistoryScheme::Mean)
        .map_err(|e| e.to_string())?;
    let data = state_dataset(&samples);
    let config = LearnerConfig::new(LearnerKind::Tree);
    for strategy in [FoldStrategy::Stratified, FoldStrategy::Grouped] {
        let plan = make_folds(&data.labels, &data.groups, 10, strategy, 42).map_err(|e| e.to_string())?;
        let reads = Mutex::new(Vec::new());
        cross_validate_probed(&data, &config, &plan, Normalization::PerFold, &|fold, row| {
            reads.lock().unwrap().push((fold, row));
        })
        .map_err(|e| e.to_string())?;
        let reads = reads.into_inner().unwrap();
        for fold in 0..plan.k {
            let test: BTreeSet<usize> = plan.test_indices(fold).into_iter().collect();
            let leaked = reads.iter().filter(|&&(f, r)| f == fold && test.contains(&r)).count();
            ensure(leaked == 0, || format!("{strategy} fold {fold}: scaler read {leaked} test rows"))?;
        }
        if strategy == FoldStrategy::Grouped {
            for fold in 0..plan.k {
                let test: BTreeSet<&str> = plan.test_indices(fold).iter().map(|&i| data.groups[i].as_str()).collect();
                let train: BTreeSet<&str> = plan.train_indices(fold).iter().map(|&i| data.groups[i].as_str()).collect();
                ensure(test.is_disjoint(&train), || format!("grouped fold {fold} shares participants"))?;
            }
        }
    }
    // The change dataset has many samples per participant; check it too.
    let changes = change_dataset(
        &build_change_dataset(&store, &["acoustic".to_string()], PairScheme::Concat).map_err(|e| e.to_string())?,
    );
    let plan = make_folds(&changes.labels, &changes.groups, 10, FoldStrategy::Grouped, 7).map_err(|e| e.to_string())?;
    for fold in 0..plan.k {
        let test: BTreeSet<&str> = plan.test_indices(fold).iter().map(|&i| changes.groups[i].as_str()).collect();
        let train: BTreeSet<&str> = plan.train_indices(fold).iter().map(|&i| changes.groups[i].as_str()).collect();
        ensure(test.is_disjoint(&train), || format!("grouped change fold {fold} shares participants"))?;
    }
    Ok("per-fold scalers read 0 test rows (stratified, grouped); grouped folds participant-disjoint".into())
}

fn run_cli(dir: &Path, threads: &str, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_longicog"))
        .args(args)
        .current_dir(dir)
        .env("LONGICOG_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("`longicog {}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))
    })
}

fn determinism() -> Outcome {
    let mut payloads = Vec::new();
    for threads in ["1", "4"] {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        run_cli(dir.path(), threads, &["synth", "--seed", "42", "--out", "cohort"])?;
        run_cli(
            dir.path(),
            threads,
            &["detect", "--mode", "historical", "--learner", "rf", "--out", "report.json"],
        )?;
        payloads.push(std::fs::read(dir.path().join("report.json")).map_err(|e| e.to_string())?);
    }
    ensure(payloads[0] == payloads[1], || "two identical CLI runs produced different reports".into())?;

    let store = generate_cohort(&SynthConfig::default()).map_err(|e| e.to_string())?;
    let data = state_dataset(
        &build_state_dataset(&store, StateMode::Baseline, &["acoustic".to_string()], HistoryScheme::Mean)
            .map_err(|e| e.to_string())?,
    );
    let params = ForestParams::default();
    let sequential = RandomForest::fit(&data.features, &data.labels, 2, &params, 42, Execution::Sequential);
    for threads in [2, 4, 8] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        let parallel = pool.install(|| RandomForest::fit(&data.features, &data.labels, 2, &params, 42, Execution::Parallel));
        ensure(parallel == sequential, || format!("parallel forest on {threads} threads differs from sequential"))?;
    }
    Ok(format!(
        "CLI reports byte-identical ({} bytes); parallel forest == sequential on 2/4/8 threads",
        payloads[0].len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("dataset shape", dataset_shape),
        ("directional M1", directional_m1),
        ("M2 learnability", m2_learnability),
        ("label-map totality", label_map_totality),
        ("learner oracles", learner_oracles),
        ("metric oracle", metric_oracle),
        ("leakage guards", leakage_guards),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
