//! Deterministic CSV/JSON emission. Every file starts with (or contains)
//! the config hash; CSV floats use 17 significant digits.

use serde::Serialize;
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const HASH_PREFIX: &str = "# config_sha256: ";

/// 17 significant digits in scientific notation.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Blank,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Cell {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Cell {
        Cell::Int(x as i64)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Cell {
        Cell::Int(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Cell {
        x.map_or(Cell::Blank, Cell::Num)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => num(*x),
            Cell::Text(s) => s.clone(),
            Cell::Blank => String::new(),
        }
    }
}

pub struct Csv {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Csv {
    pub fn new(header: &[&'static str]) -> Csv {
        Csv { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self, hash: &str) -> String {
        let mut s = format!("{HASH_PREFIX}{hash}\n{}\n", self.header.join(","));
        for r in &self.rows {
            s.push_str(&r.iter().map(Cell::render).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }
}

/// Collects files in memory; they are written in name order at the end.
pub struct Bundle {
    pub dir: PathBuf,
    pub hash: String,
    files: BTreeMap<String, Vec<u8>>,
    /// file name → producing stage
    pub provenance: BTreeMap<String, String>,
}

impl Bundle {
    pub fn new(dir: &Path, hash: &str) -> Bundle {
        Bundle { dir: dir.to_path_buf(), hash: hash.to_string(), files: BTreeMap::new(), provenance: BTreeMap::new() }
    }

    pub fn add_bytes(&mut self, name: &str, stage: &str, bytes: Vec<u8>) {
        self.files.insert(name.to_string(), bytes);
        self.provenance.insert(name.to_string(), stage.to_string());
    }

    pub fn add_csv(&mut self, name: &str, stage: &str, csv: &Csv) {
        let s = csv.render(&self.hash);
        self.add_bytes(name, stage, s.into_bytes());
    }

    /// JSON object with a `config_hash` key added; keys come out sorted.
    pub fn add_json<T: Serialize>(&mut self, name: &str, stage: &str, value: &T) {
        let v = serde_json::to_value(value).expect("serializable report");
        let mut out = serde_json::Map::new();
        out.insert("config_hash".into(), serde_json::Value::String(self.hash.clone()));
        match v {
            serde_json::Value::Object(m) => out.extend(m),
            other => {
                out.insert("data".into(), other);
            }
        }
        let mut bytes = serde_json::to_vec_pretty(&serde_json::Value::Object(out)).expect("json");
        bytes.push(b'\n');
        self.add_bytes(name, stage, bytes);
    }

    /// Text file with the hash as a leading comment line.
    pub fn add_text(&mut self, name: &str, stage: &str, body: &[u8]) {
        let mut bytes = format!("{HASH_PREFIX}{}\n", self.hash).into_bytes();
        bytes.extend_from_slice(body);
        self.add_bytes(name, stage, bytes);
    }

    pub fn names(&self) -> Vec<String> {
        self.files.keys().cloned().collect()
    }

    pub fn write_all(&self) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        for (name, bytes) in &self.files {
            let mut f = fs::File::create(self.dir.join(name))?;
            f.write_all(bytes)?;
        }
        Ok(())
    }
}

/// Reads a CSV written by `Csv::render`: (hash, header, rows).
pub fn read_csv(path: &Path) -> Result<(String, Vec<String>, Vec<Vec<String>>), String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines();
    let hash = lines
        .next()
        .and_then(|l| l.strip_prefix(HASH_PREFIX))
        .ok_or_else(|| format!("{}: missing config hash line", path.display()))?
        .to_string();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| format!("{}: missing header", path.display()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    Ok((hash, header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_exactly() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0, -0.0] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(num(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn csv_rendering_is_stable() {
        let mut c = Csv::new(&["a", "b", "c"]);
        c.push(vec![Cell::Int(3), Cell::Num(0.5), Cell::Blank]);
        assert_eq!(c.render("ff"), "# config_sha256: ff\na,b,c\n3,5.0000000000000000e-1,\n");
    }

    #[test]
    fn json_carries_hash() {
        let mut b = Bundle::new(Path::new("/nonexistent"), "abc");
        b.add_json("x.json", "stage", &serde_json::json!({"z": 1, "a": 2}));
        let text = String::from_utf8(b.files["x.json"].clone()).unwrap();
        assert!(text.starts_with("{\n  \"a\": 2,\n  \"config_hash\": \"abc\""));
        assert_eq!(b.provenance["x.json"], "stage");
    }
}
