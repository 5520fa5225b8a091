use std::process::{Command, Stdio};

use healthcast::harness::{evaluate_series, run_task, split, task_seed, Grid, TaskResult};
use healthcast::synth::{generate_synthetic, SyntheticSpec};
use healthcast_core::analysis::Horizon;
use healthcast_core::data::{IndicatorId, ProjectSeries};
use healthcast_core::learners::{cart_fit, CartHyperParams, LearnerKind};

fn corpus(projects: usize, months: u32, noise: f64, seed: u64) -> Vec<ProjectSeries> {
    generate_synthetic(&SyntheticSpec { projects, months, noise_scale: noise, seed }).unwrap()
}

fn with_short_project(mut series: Vec<ProjectSeries>) -> Vec<ProjectSeries> {
    let mut short = series[0].clone();
    short.project_id = "acme/short".into();
    short.records.truncate(5);
    series.push(short);
    series
}

#[test]
fn every_planned_task_is_run_or_skipped() {
    let series = with_short_project(corpus(2, 24, 0.1, 4));
    let grid = Grid::full();
    let r = evaluate_series(&series, &grid, 11, None).unwrap();
    assert_eq!(r.outcomes.len() + r.skips.len(), series.len() * grid.tasks_per_project());
    // Five months leave too little history only at horizons 6 and 12.
    assert_eq!(r.skips.len(), 7 * 2 * 5);
    for s in &r.skips {
        assert_eq!(s.project_id, "acme/short");
        assert!(matches!(s.horizon, Horizon::Months(6 | 12)), "{:?}", s.horizon);
        assert!(!s.reason.is_empty());
    }
    let mut keys: Vec<_> = r.outcomes.iter().map(|o| (&o.project_id, o.indicator, o.horizon, o.learner)).collect();
    let sorted = {
        let mut k = keys.clone();
        k.sort();
        k
    };
    assert_eq!(keys, sorted);
    keys.dedup();
    assert_eq!(keys.len(), r.outcomes.len());
}

#[test]
fn short_project_at_long_horizon_is_skipped() {
    let series = with_short_project(corpus(1, 20, 0.1, 1));
    let short = series.last().unwrap();
    for l in LearnerKind::ALL {
        match run_task(short, IndicatorId::Commit, Horizon::Months(12), l, 1).unwrap() {
            TaskResult::Skipped(s) => assert_eq!(s.learner, l),
            TaskResult::Done(_) => panic!("{l} ran on 5 months at h=12"),
        }
    }
}

#[test]
fn training_months_precede_the_test_month() {
    for s in corpus(3, 40, 0.1, 8) {
        for i in IndicatorId::ALL {
            for h in [1, 3, 6, 12] {
                let sp = split(&s, i, Horizon::Months(h)).unwrap();
                let months = sp.train.month_indices();
                assert_eq!(months, (1..=40 - h).collect::<Vec<_>>().as_slice());
                assert_eq!(sp.test.month_index, 40);
                assert_eq!(sp.test.month_index - months.last().unwrap(), h);
            }
            let mid = split(&s, i, Horizon::Midway).unwrap();
            assert_eq!(*mid.train.month_indices().last().unwrap(), 20);
            assert_eq!(mid.test.month_index, 32);
        }
    }
}

#[test]
fn tasks_do_not_depend_on_the_rest_of_the_grid() {
    let series = corpus(3, 30, 0.1, 5);
    let grid = Grid { horizons: vec![Horizon::Months(1), Horizon::Months(6)], ..Grid::full() };
    let all = evaluate_series(&series, &grid, 77, Some(4)).unwrap();
    let serial = evaluate_series(&series, &grid, 77, Some(1)).unwrap();
    assert_eq!(all.outcomes, serial.outcomes);
    for o in all.outcomes.iter().step_by(7) {
        let s = series.iter().find(|s| s.project_id == o.project_id).unwrap();
        match run_task(s, o.indicator, o.horizon, o.learner, 77).unwrap() {
            TaskResult::Done(alone) => assert_eq!(&alone, o),
            TaskResult::Skipped(_) => panic!("skipped alone but not in the grid"),
        }
    }
    let single = evaluate_series(&series[1..2], &grid, 77, None).unwrap();
    let from_all: Vec<_> = all.outcomes.iter().filter(|o| o.project_id == series[1].project_id).cloned().collect();
    assert_eq!(single.outcomes, from_all);
}

#[test]
fn noiseless_training_data_is_fit_exactly() {
    for s in corpus(5, 36, 0.0, 3) {
        for i in IndicatorId::ALL {
            let sp = split(&s, i, Horizon::Months(1)).unwrap();
            let tree = cart_fit(&sp.train, &CartHyperParams::default(), 0).unwrap();
            assert_eq!(tree.sse(&sp.train), 0.0, "{} {i}", s.project_id);
        }
    }
}

fn sha256sum(text: &str) -> String {
    let mut child = Command::new("sha256sum").stdin(Stdio::piped()).stdout(Stdio::piped()).spawn().unwrap();
    std::io::Write::write_all(&mut child.stdin.take().unwrap(), text.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    String::from_utf8(out.stdout).unwrap()[..16].to_string()
}

#[test]
fn task_seeds_match_an_external_digest() {
    let cases = [
        (1, "synth/p000", IndicatorId::Commit, Horizon::Months(1), LearnerKind::Decart),
        (2021, "acme/rocket", IndicatorId::OpenPr, Horizon::Months(12), LearnerKind::Knn),
        (0, "a/b", IndicatorId::Star, Horizon::Midway, LearnerKind::Rft),
    ];
    for (master, project, ind, h, l) in cases {
        let text = format!("{master}|{project}|{}|{h}|{}", ind.name(), l.name());
        assert_eq!(format!("{:016x}", task_seed(master, project, ind, h, l)), sha256sum(&text), "{text}");
    }
}
