//! Per-sample detector scores and their `id,score` CSV form.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Ordered, id-unique list of scores in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreSet {
    entries: Vec<(String, f64)>,
    index: HashMap<String, usize>,
}

impl ScoreSet {
    pub fn new(entries: Vec<(String, f64)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, (id, score)) in entries.iter().enumerate() {
            if !(0.0..=1.0).contains(score) {
                return Err(Error::Validation(format!("score {score} for '{id}' is outside [0, 1]")));
            }
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate score id '{id}'")));
            }
        }
        Ok(Self { entries, index })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.index.get(id).map(|&i| self.entries[i].1)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(id, _)| id.as_str())
    }

    /// Ids present in exactly one of the two sets, sorted.
    pub fn id_difference(&self, other: &ScoreSet) -> Vec<String> {
        let mut diff: Vec<String> = self
            .ids()
            .filter(|id| !other.contains(id))
            .chain(other.ids().filter(|id| !self.contains(id)))
            .map(str::to_owned)
            .collect();
        diff.sort();
        diff
    }

    pub fn from_reader(reader: impl std::io::Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Parse { line: 1, message: e.to_string() })?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Parse { line: 1, message: format!("missing '{name}' column") })
        };
        let (id_col, score_col) = (col("id")?, col("score")?);
        let mut entries = Vec::new();
        for (n, row) in rdr.records().enumerate() {
            let line = n + 2;
            let row = row.map_err(|e| Error::Parse { line, message: e.to_string() })?;
            let id = row.get(id_col).unwrap_or_default().to_owned();
            let raw = row.get(score_col).unwrap_or_default();
            let score: f64 = raw
                .parse()
                .map_err(|_| Error::Parse { line, message: format!("'{raw}' is not a number") })?;
            entries.push((id, score));
        }
        Self::new(entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(file)).map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse { line, message: format!("{}: {message}", path.display()) },
            other => other,
        })
    }

    /// `id,score` header then one row per entry. Scores use the shortest
    /// representation that parses back to the same value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,score\n");
        for (id, score) in &self.entries {
            out.push_str(&csv_field(id));
            out.push(',');
            out.push_str(&score.to_string());
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let set = ScoreSet::new(vec![
            ("a".into(), 0.1),
            ("b,c".into(), 1.0 / 3.0),
            ("d".into(), 0.0),
            ("e".into(), 1.0),
        ])
        .unwrap();
        let text = set.to_csv();
        assert!(text.starts_with("id,score\na,0.1\n\"b,c\","));
        assert_eq!(ScoreSet::from_reader(text.as_bytes()).unwrap(), set);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(matches!(ScoreSet::from_reader("id,score\na,x\n".as_bytes()), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(ScoreSet::from_reader("id\na\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(ScoreSet::from_reader("id,score\na,1.5\n".as_bytes()), Err(Error::Validation(_))));
        assert!(matches!(ScoreSet::from_reader("id,score\na,0.1\na,0.2\n".as_bytes()), Err(Error::Validation(_))));
    }

    #[test]
    fn column_order_is_free() {
        let set = ScoreSet::from_reader("score,id\n0.5,x\n".as_bytes()).unwrap();
        assert_eq!(set.get("x"), Some(0.5));
    }

    #[test]
    fn symmetric_difference() {
        let a = ScoreSet::new(vec![("x".into(), 0.1), ("y".into(), 0.2)]).unwrap();
        let b = ScoreSet::new(vec![("y".into(), 0.1), ("z".into(), 0.2)]).unwrap();
        assert_eq!(a.id_difference(&b), vec!["x".to_string(), "z".to_string()]);
    }
}
