//! Per-project monthly CSV files.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use healthcast_core::data::{validate_series, Feature, MonthlyRecord, ProjectSeries, YearMonth};

use crate::error::Error;

pub const LEADING_COLUMNS: [&str; 3] = ["project_id", "month_index", "calendar_month"];

pub fn header() -> Vec<&'static str> {
    LEADING_COLUMNS
        .iter()
        .copied()
        .chain(Feature::ALL.iter().map(|f| f.name()))
        .collect()
}

/// File name for a project: `owner/name` becomes `owner__name.csv`.
pub fn file_name(project_id: &str) -> String {
    format!("{}.csv", project_id.replace('/', "__"))
}

pub fn write_series<W: Write>(out: W, series: &ProjectSeries) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header())?;
    for rec in &series.records {
        let mut row = vec![
            series.project_id.clone(),
            rec.month_index.to_string(),
            rec.calendar_month.to_string(),
        ];
        row.extend(rec.counts.iter().map(|c| c.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn series_to_string(series: &ProjectSeries) -> Result<String, Error> {
    let mut buf = Vec::new();
    write_series(&mut buf, series)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Parses one project file and checks the series invariants.
pub fn read_series<R: Read>(input: R, origin: &str) -> Result<ProjectSeries, Error> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header() {
        return Err(Error::data(format!("{origin}: unexpected header {found:?}")));
    }
    let mut project_id: Option<String> = None;
    let mut records = Vec::new();
    for (line, row) in r.records().enumerate() {
        let row = row?;
        let bad = |what: &str| Error::data(format!("{origin}: row {}: bad {what}", line + 1));
        match &project_id {
            None => project_id = Some(row[0].to_string()),
            Some(id) if id != &row[0] => return Err(bad("project_id (mixed projects)")),
            Some(_) => {}
        }
        let month_index: u32 = row[1].parse().map_err(|_| bad("month_index"))?;
        let calendar_month: YearMonth = row[2].parse().map_err(|_| bad("calendar_month"))?;
        let mut rec = MonthlyRecord::zero(month_index, calendar_month);
        for f in Feature::ALL {
            let v: i64 = row[3 + f.index()].parse().map_err(|_| bad(f.name()))?;
            rec.set(f, v);
        }
        records.push(rec);
    }
    let project_id = project_id.ok_or_else(|| Error::data(format!("{origin}: no data rows")))?;
    let series = ProjectSeries {
        project_id,
        start_month: records[0].calendar_month,
        records,
    };
    let report = validate_series(&series);
    if !report.is_valid() {
        let findings: Vec<String> = report.findings.iter().map(|f| f.to_string()).collect();
        return Err(Error::data(format!("{origin}: {}", findings.join("; "))));
    }
    Ok(series)
}

pub fn read_series_file(path: &Path) -> Result<ProjectSeries, Error> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_series(file, &path.display().to_string())
}

pub fn write_series_file(dir: &Path, series: &ProjectSeries) -> Result<PathBuf, Error> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(file_name(&series.project_id));
    fs::write(&path, series_to_string(series)?).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// All `*.csv` files directly under `dir`, sorted by name.
pub fn dataset_files(dir: &Path) -> Result<Vec<PathBuf>, Error> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "csv") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn read_dataset(dir: &Path) -> Result<Vec<(PathBuf, ProjectSeries)>, Error> {
    dataset_files(dir)?
        .into_iter()
        .map(|p| read_series_file(&p).map(|s| (p, s)))
        .collect()
}
