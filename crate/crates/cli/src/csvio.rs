//! Energy CSV files: a block of `# key = value` metadata lines, a header
//! row, then one row per sample. Values carry 17 significant digits so a
//! read-back is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeriesTable {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    /// One vector per column.
    pub data: Vec<Vec<f64>>,
}

impl SeriesTable {
    pub fn new(metadata: Vec<(String, String)>) -> Self {
        Self { metadata, ..Default::default() }
    }

    pub fn push_column(&mut self, name: &str, values: Vec<f64>) {
        debug_assert!(self.data.first().is_none_or(|c| c.len() == values.len()));
        self.columns.push(name.to_string());
        self.data.push(values);
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().position(|c| c == name).map(|k| self.data[k].as_slice())
    }

    pub fn rows(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            // keep each entry on one line
            let v = v.replace(['\n', '\r'], " ");
            let _ = writeln!(s, "# {k} = {v}");
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in 0..self.rows() {
            let row: Vec<String> = self.data.iter().map(|c| format!("{:.16e}", c[r])).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        fs::write(path, self.to_csv_string())
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut out = Self::default();
        let mut lines = text.lines().enumerate();
        for (k, line) in lines.by_ref() {
            if let Some(meta) = line.strip_prefix('#') {
                let (key, value) = meta
                    .split_once(" = ")
                    .ok_or_else(|| format!("line {}: malformed metadata '{line}'", k + 1))?;
                out.metadata.push((key.trim().to_string(), value.to_string()));
            } else {
                out.columns = line.split(',').map(|c| c.trim().to_string()).collect();
                out.data = vec![Vec::new(); out.columns.len()];
                break;
            }
        }
        if out.columns.is_empty() {
            return Err("missing header row".into());
        }
        for (k, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != out.columns.len() {
                return Err(format!(
                    "line {}: {} cells for {} columns",
                    k + 1,
                    cells.len(),
                    out.columns.len()
                ));
            }
            for (col, cell) in out.data.iter_mut().zip(cells) {
                let v = cell
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| format!("line {}: '{cell}' is not a number", k + 1))?;
                col.push(v);
            }
        }
        Ok(out)
    }

    pub fn read(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text)
    }
}
