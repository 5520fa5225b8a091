//! Outcome files, report tables and tree dumps.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{Read, Write};

use healthcast_core::analysis::{EvalOutcome, Horizon, ReportTables, Stat};
use healthcast_core::data::{Feature, IndicatorId};
use healthcast_core::learners::{LearnerKind, Node, RegressionTree};
use healthcast_core::metrics::{MetricKind, MetricValue};
use serde_json::{json, Value};

use crate::error::Error;

pub const OUTCOME_COLUMNS: [&str; 11] = [
    "project_id",
    "indicator",
    "horizon",
    "learner",
    "predict",
    "actual",
    "mre",
    "sa",
    "sa_defined",
    "fallback",
    "features_used",
];

/// Marks a learner without a tree in the `features_used` column.
const NO_TREE: &str = "-";
const MISSING: &str = "NA";

pub fn write_outcomes<W: Write>(out: W, outcomes: &[EvalOutcome]) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(OUTCOME_COLUMNS)?;
    for o in outcomes {
        let features = match &o.features_used {
            None => NO_TREE.to_string(),
            Some(set) => set.iter().map(|f| f.name()).collect::<Vec<_>>().join(";"),
        };
        w.write_record([
            o.project_id.clone(),
            o.indicator.name().to_string(),
            o.horizon.to_string(),
            o.learner.name().to_string(),
            o.predict.to_string(),
            o.actual.to_string(),
            o.mre.value.to_string(),
            o.sa.get().map(|v| v.to_string()).unwrap_or_default(),
            o.sa.defined.to_string(),
            o.fallback.to_string(),
            features,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_outcomes<R: Read>(input: R) -> Result<Vec<EvalOutcome>, Error> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != OUTCOME_COLUMNS {
        return Err(Error::data(format!("unexpected outcomes header {header:?}")));
    }
    let mut outcomes = Vec::new();
    for (line, row) in r.records().enumerate() {
        let row = row?;
        let bad = |what: &str| Error::data(format!("outcomes row {}: bad {what}", line + 1));
        let num = |i: usize, what: &str| row[i].parse::<f64>().map_err(|_| bad(what));
        let flag = |i: usize, what: &str| row[i].parse::<bool>().map_err(|_| bad(what));
        let sa_defined = flag(8, "sa_defined")?;
        let features_used = match &row[10] {
            NO_TREE => None,
            "" => Some(BTreeSet::new()),
            list => Some(
                list.split(';')
                    .map(|n| Feature::from_name(n).ok_or_else(|| bad("features_used")))
                    .collect::<Result<_, _>>()?,
            ),
        };
        outcomes.push(EvalOutcome {
            project_id: row[0].to_string(),
            indicator: IndicatorId::from_name(&row[1]).ok_or_else(|| bad("indicator"))?,
            horizon: row[2].parse().map_err(|_| bad("horizon"))?,
            learner: row[3].parse().map_err(|_| bad("learner"))?,
            predict: num(4, "predict")?,
            actual: num(5, "actual")?,
            mre: MetricValue {
                metric: MetricKind::Mre,
                value: num(6, "mre")?,
                defined: true,
            },
            sa: MetricValue {
                metric: MetricKind::Sa,
                value: if sa_defined { num(7, "sa")? } else { f64::NAN },
                defined: sa_defined,
            },
            features_used,
            fallback: flag(9, "fallback")?,
        });
    }
    Ok(outcomes)
}

fn fixed(v: Option<f64>, places: usize) -> String {
    match v {
        Some(v) if v.is_finite() => format!("{v:.places$}"),
        _ => MISSING.to_string(),
    }
}

fn csv_text(rows: Vec<Vec<String>>) -> Result<String, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn strings<const N: usize>(cols: [&str; N]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

/// Median and IQR of MRE and SA per (indicator, learner, horizon).
pub fn summary_csv(t: &ReportTables) -> Result<String, Error> {
    let mut rows = vec![strings([
        "indicator", "learner", "horizon", "projects", "mre_median", "mre_iqr", "sa_median", "sa_iqr", "sa_excluded",
    ])];
    for (&(i, l, h), c) in &t.cells {
        rows.push(vec![
            i.name().into(),
            l.name().into(),
            h.to_string(),
            c.projects.to_string(),
            fixed(c.mre_median, 6),
            fixed(c.mre_iqr, 6),
            fixed(c.sa_median, 4),
            fixed(c.sa_iqr, 4),
            c.sa_excluded.to_string(),
        ]);
    }
    csv_text(rows)
}

/// Each statistic at longer horizons as a percentage of its one-month value.
pub fn ratios_csv(t: &ReportTables) -> Result<String, Error> {
    let mut rows = vec![strings([
        "indicator", "learner", "horizon", "mre_median_pct", "mre_iqr_pct", "sa_median_pct", "sa_iqr_pct",
    ])];
    for &(i, l, h) in t.cells.keys() {
        if h == Horizon::Months(1) {
            continue;
        }
        let mut row = vec![i.name().to_string(), l.name().to_string(), h.to_string()];
        for stat in [Stat::MreMedian, Stat::MreIqr, Stat::SaMedian, Stat::SaIqr] {
            row.push(fixed(t.ratio(i, l, h, stat).map(f64::round), 0));
        }
        rows.push(row);
    }
    csv_text(rows)
}

pub fn win_rates_csv(t: &ReportTables) -> Result<String, Error> {
    let mut rows = vec![strings([
        "metric", "indicator", "horizon", "learner", "win_rate_pct", "projects", "excluded", "cohen_d",
    ])];
    for (metric, table) in [(MetricKind::Mre, &t.mre_wins), (MetricKind::Sa, &t.sa_wins)] {
        for (&(i, h), w) in table {
            for (l, rate) in &w.rates {
                rows.push(vec![
                    metric.name().into(),
                    i.name().into(),
                    h.to_string(),
                    l.name().into(),
                    fixed(Some(*rate), 1),
                    w.projects.to_string(),
                    w.excluded.to_string(),
                    fixed(Some(w.threshold.d), 6),
                ]);
            }
        }
    }
    csv_text(rows)
}

/// Share of projects whose tree splits on each feature, in whole percent.
pub fn feature_usage_csv(t: &ReportTables) -> Result<String, Error> {
    let mut header = strings(["target", "projects"]);
    header.extend(Feature::ALL.iter().map(|f| f.name().to_string()));
    let mut rows = vec![header];
    for u in &t.feature_usage {
        let mut row = vec![u.target.name().to_string(), u.projects.to_string()];
        row.extend(Feature::ALL.iter().map(|&f| match u.percentage(f) {
            Some(p) => format!("{}", p.round() as i64),
            None => "n/a".to_string(),
        }));
        rows.push(row);
    }
    csv_text(rows)
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "—".to_string(), |v| format!("{:.1}%", 100.0 * v))
}

/// Plain-text overview: median MRE per indicator and learner for each
/// horizon, followed by MRE win rates.
pub fn summary_text(t: &ReportTables) -> String {
    let mut s = String::new();
    for &h in &t.horizons {
        let _ = writeln!(s, "Median MRE, horizon {h}");
        let _ = write!(s, "{:<14}", "indicator");
        for l in &t.learners {
            let _ = write!(s, "{:>10}", l.name());
        }
        s.push('\n');
        for &i in &t.indicators {
            let _ = write!(s, "{:<14}", i.name());
            for &l in &t.learners {
                let v = t.cells.get(&(i, l, h)).and_then(|c| c.mre_median);
                let _ = write!(s, "{:>10}", pct(v));
            }
            s.push('\n');
        }
        s.push('\n');
        let _ = writeln!(s, "MRE win rate, horizon {h}");
        for &i in &t.indicators {
            let _ = write!(s, "{:<14}", i.name());
            match t.mre_wins.get(&(i, h)) {
                Some(w) => {
                    for l in &t.learners {
                        let r = w.rates.get(l).map_or("—".to_string(), |r| format!("{r:.0}%"));
                        let _ = write!(s, "{r:>10}");
                    }
                }
                None => {
                    let _ = write!(s, "{:>10}", "—");
                }
            }
            s.push('\n');
        }
        s.push('\n');
    }
    s
}

/// All report files as (file name, contents), in a fixed order.
pub fn render(t: &ReportTables) -> Result<Vec<(&'static str, String)>, Error> {
    Ok(vec![
        ("summary.csv", summary_csv(t)?),
        ("ratios.csv", ratios_csv(t)?),
        ("win_rates.csv", win_rates_csv(t)?),
        ("feature_usage.csv", feature_usage_csv(t)?),
        ("summary.txt", summary_text(t)),
    ])
}

/// Nested JSON for a fitted tree: splits are
/// `{"feature", "threshold", "samples", "left", "right"}`, leaves
/// `{"leaf", "n"}`.
pub fn tree_json(tree: &RegressionTree, feature_names: &[String]) -> Value {
    fn node(nodes: &[Node], id: usize, names: &[String]) -> Value {
        match &nodes[id] {
            Node::Leaf { value, samples } => json!({ "leaf": value, "n": samples }),
            Node::Split {
                feature,
                threshold,
                left,
                right,
                samples,
            } => json!({
                "feature": names.get(*feature).cloned().unwrap_or_else(|| format!("x{feature}")),
                "threshold": threshold,
                "samples": samples,
                "left": node(nodes, *left, names),
                "right": node(nodes, *right, names),
            }),
        }
    }
    node(tree.nodes(), 0, feature_names)
}

/// Learners present in `outcomes`, in canonical order.
pub fn learners_of(outcomes: &[EvalOutcome]) -> Vec<LearnerKind> {
    let set: BTreeSet<_> = outcomes.iter().map(|o| o.learner).collect();
    set.into_iter().collect()
}
