use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Floats are written with 17 significant digits so that values round-trip.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt_f64(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(if v { "pass" } else { "fail" }.into())
    }
}

/// A CSV table with a fixed column order.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.header.len(),
            "row width differs from header in table {}",
            self.name
        );
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(Cell::render).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    /// Column index by header name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Everything a scenario run produces. Numeric summary entries are always
/// accompanied by a `.se` or `.tol` entry; verdicts are `pass` or `fail`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReportBundle {
    pub provenance: Vec<(String, String)>,
    pub summary: Vec<(String, String)>,
    pub verdicts: Vec<(String, bool)>,
    pub skips: Vec<String>,
    pub tables: Vec<Table>,
    /// Wall time in seconds; written to `timing.txt`, apart from the
    /// reproducible files.
    pub wall_time: Option<f64>,
}

impl ReportBundle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn provenance(&mut self, key: &str, value: impl ToString) {
        self.provenance.push((key.into(), value.to_string()));
    }

    /// An estimate with its standard error.
    pub fn estimate(&mut self, key: &str, value: f64, se: f64) {
        self.summary.push((key.into(), fmt_f64(value)));
        self.summary.push((format!("{key}.se"), fmt_f64(se)));
    }

    /// A computed quantity with the tolerance it is judged against.
    pub fn measured(&mut self, key: &str, value: f64, tol: f64) {
        self.summary.push((key.into(), fmt_f64(value)));
        self.summary.push((format!("{key}.tol"), fmt_f64(tol)));
    }

    /// An exact count, judged against `tol`.
    pub fn count(&mut self, key: &str, value: usize, tol: usize) {
        self.summary.push((key.into(), value.to_string()));
        self.summary.push((format!("{key}.tol"), tol.to_string()));
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }

    pub fn verdict(&mut self, name: &str, pass: bool) -> bool {
        self.verdicts.push((name.into(), pass));
        pass
    }

    pub fn skip(&mut self, what: impl ToString) {
        self.skips.push(what.to_string());
    }

    pub fn table(&mut self, table: Table) {
        self.tables.push(table);
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|(_, v)| *v)
    }

    pub fn verdict_of(&self, name: &str) -> Option<bool> {
        self.verdicts
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    /// Raw summary value by key.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.summary
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(|v| v.parse().ok())
    }

    pub fn get_table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Contents of `summary.txt`.
    pub fn summary_text(&self) -> String {
        let mut s = String::from("# provenance\n");
        for (k, v) in &self.provenance {
            let _ = writeln!(s, "{k} = {v}");
        }
        if !self.summary.is_empty() {
            s.push_str("# results\n");
            for (k, v) in &self.summary {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        for (i, what) in self.skips.iter().enumerate() {
            let _ = writeln!(s, "skip.{i} = {what}");
        }
        if !self.verdicts.is_empty() {
            s.push_str("# verdicts\n");
            for (k, v) in &self.verdicts {
                let _ = writeln!(s, "verdict.{k} = {}", if *v { "pass" } else { "fail" });
            }
            let _ = writeln!(
                s,
                "verdict.all = {}",
                if self.all_pass() { "pass" } else { "fail" }
            );
        }
        s
    }
}

fn write(path: PathBuf, contents: &str) -> Result<()> {
    fs::write(&path, contents).map_err(|source| Error::Io { path, source })
}

/// Writes `summary.txt`, one CSV per table and `timing.txt` into `dir`,
/// creating it if needed. Returns the paths written.
pub fn emit_report(bundle: &ReportBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    let summary = dir.join("summary.txt");
    write(summary.clone(), &bundle.summary_text())?;
    written.push(summary);
    for t in &bundle.tables {
        let path = dir.join(format!("{}.csv", t.name));
        write(path.clone(), &t.to_csv())?;
        written.push(path);
    }
    if let Some(w) = bundle.wall_time {
        let path = dir.join("timing.txt");
        write(path.clone(), &format!("wall_time_seconds = {w:.3}\n"))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_bundle_has_provenance_only() {
        let mut b = ReportBundle::new();
        b.provenance("code_version", "1");
        assert_eq!(b.summary_text(), "# provenance\ncode_version = 1\n");
    }

    #[test]
    fn numeric_entries_carry_uncertainty() {
        let mut b = ReportBundle::new();
        b.estimate("p", 0.5, 0.01);
        b.measured("gap", 1e-12, 1e-8);
        b.count("violations", 0, 0);
        let keys: Vec<&str> = b.summary.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(
            keys,
            [
                "p",
                "p.se",
                "gap",
                "gap.tol",
                "violations",
                "violations.tol"
            ]
        );
        assert_eq!(b.get_f64("p"), Some(0.5));
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 12345.678901234567] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }

    #[test]
    fn verdict_all_aggregates() {
        let mut b = ReportBundle::new();
        b.verdict("a", true);
        b.verdict("b", false);
        let text = b.summary_text();
        assert!(text.contains("verdict.a = pass\n"));
        assert!(text.ends_with("verdict.all = fail\n"));
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new("x", &["i", "v", "ok"]);
        t.push(vec![1usize.into(), 0.25.into(), true.into()]);
        assert_eq!(t.to_csv(), "i,v,ok\n1,2.5000000000000000e-1,pass\n");
    }

    #[test]
    #[should_panic]
    fn ragged_row_is_a_bug() {
        Table::new("x", &["a"]).push(vec![1usize.into(), 2usize.into()]);
    }

    #[test]
    fn unwritable_directory_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("occupied");
        fs::write(&file, "x").unwrap();
        let err = emit_report(&ReportBundle::new(), &file.join("sub")).unwrap_err();
        assert!(matches!(err, Error::Io { ref path, .. } if path.starts_with(&file)));
    }
}
