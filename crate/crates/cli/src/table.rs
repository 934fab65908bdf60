use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("bad CSV {path}: {msg}")]
    BadCsv { path: String, msg: String },
}

/// A CSV table held as strings; written RFC 4180 style with LF endings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn row(&mut self, r: Vec<String>) {
        debug_assert_eq!(r.len(), self.header.len());
        self.rows.push(r);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// Reads a table with a header row and at least one record.
    pub fn read(path: &Path) -> Result<Self, CsvError> {
        let bad = |msg: String| CsvError::BadCsv { path: path.display().to_string(), msg };
        let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
        let header: Vec<String> = r.headers().map_err(|e| bad(e.to_string()))?.iter().map(String::from).collect();
        if header.iter().all(|h| h.is_empty()) {
            return Err(bad("no header row".into()));
        }
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
            .collect::<Result<Vec<Vec<String>>, _>>()
            .map_err(|e| bad(e.to_string()))?;
        if rows.is_empty() {
            return Err(bad("no data rows".into()));
        }
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lf_endings_and_quoting() {
        let mut t = Table::new(&["a", "b"]);
        t.row(vec!["1".into(), "x,y".into()]);
        assert_eq!(t.to_csv(), "a,b\n1,\"x,y\"\n");
    }

    #[test]
    fn empty_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        std::fs::write(&p, "").unwrap();
        assert!(Table::read(&p).is_err());
        std::fs::write(&p, "a,b\n").unwrap();
        assert!(Table::read(&p).is_err());
        std::fs::write(&p, "a,b\n1,2\n").unwrap();
        assert_eq!(Table::read(&p).unwrap().rows, vec![vec!["1".to_string(), "2".to_string()]]);
    }
}
