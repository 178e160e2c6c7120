//! Outcome-plus-covariates datasets and CSV ingestion.

use std::path::Path;

use crate::error::{Error, Result};

/// A regression dataset: non-negative integer outcomes alongside named
/// numeric covariate columns. Immutable once constructed.
#[derive(Debug, Clone)]
pub struct Dataset {
    y: Vec<u32>,
    columns: Vec<Vec<f64>>,
    names: Vec<String>,
}

impl Dataset {
    pub fn new(y: Vec<u32>, columns: Vec<Vec<f64>>, names: Vec<String>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::InvalidData(
                "dataset must contain at least one row".into(),
            ));
        }
        if columns.len() != names.len() {
            return Err(Error::InvalidData(format!(
                "{} covariate columns but {} names",
                columns.len(),
                names.len()
            )));
        }
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != y.len() {
                return Err(Error::InvalidData(format!(
                    "column `{name}` has {} rows, outcome has {}",
                    col.len(),
                    y.len()
                )));
            }
            if let Some(v) = col.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!(
                    "column `{name}` contains non-finite value {v}"
                )));
            }
        }
        Ok(Dataset { y, columns, names })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn y(&self) -> &[u32] {
        &self.y
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        let idx = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))?;
        Ok(&self.columns[idx])
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.names
            .iter()
            .map(|n| n.as_str())
            .zip(self.columns.iter().map(|c| c.as_slice()))
    }

    /// Covariate row as a vector ordered like `names`.
    pub fn covariate_row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Keep only the rows where `mask` is true.
    pub fn filter(&self, mask: &[bool]) -> Result<Dataset> {
        assert_eq!(mask.len(), self.n());
        let keep: Vec<usize> = (0..self.n()).filter(|&i| mask[i]).collect();
        if keep.is_empty() {
            return Err(Error::EmptySubgroup);
        }
        let y = keep.iter().map(|&i| self.y[i]).collect();
        let columns = self
            .columns
            .iter()
            .map(|c| keep.iter().map(|&i| c[i]).collect())
            .collect();
        Dataset::new(y, columns, self.names.clone())
    }

    /// Read a CSV with a header row. The delimiter is sniffed between
    /// comma and semicolon; decimal separator is `.`; the outcome column
    /// must hold non-negative integers. Rows with missing or non-numeric
    /// fields are rejected, not dropped.
    pub fn from_csv(path: &Path, outcome: &str) -> Result<Dataset> {
        let raw = std::fs::read_to_string(path)?;
        let delim = sniff_delimiter(&raw);
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delim)
            .trim(csv::Trim::All)
            .from_reader(raw.as_bytes());

        let headers: Vec<String> = reader
            .headers()?
            .iter()
            .map(normalize_column_name)
            .collect();
        let outcome = normalize_column_name(outcome);
        let y_idx = headers
            .iter()
            .position(|h| *h == outcome)
            .ok_or_else(|| Error::UnknownColumn(outcome.clone()))?;

        let mut y = Vec::new();
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len() - 1];
        for (row_no, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() != headers.len() {
                return Err(Error::CsvParse {
                    row: row_no + 2,
                    message: format!("expected {} fields, found {}", headers.len(), record.len()),
                });
            }
            let mut col_cursor = 0;
            for (j, field) in record.iter().enumerate() {
                let value: f64 = field.parse().map_err(|_| Error::CsvParse {
                    row: row_no + 2,
                    message: format!("`{field}` in column `{}` is not numeric", headers[j]),
                })?;
                if j == y_idx {
                    let rounded = value.round();
                    if (value - rounded).abs() > 1e-9 || rounded < 0.0 || rounded > u32::MAX as f64
                    {
                        return Err(Error::CsvParse {
                            row: row_no + 2,
                            message: format!("outcome `{value}` is not a non-negative integer"),
                        });
                    }
                    y.push(rounded as u32);
                } else {
                    columns[col_cursor].push(value);
                    col_cursor += 1;
                }
            }
        }
        let names: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != y_idx)
            .map(|(_, h)| h.clone())
            .collect();
        Dataset::new(y, columns, names)
    }

    /// Write the dataset back out as a comma-separated file with the
    /// outcome in a column named `outcome`.
    pub fn to_csv(&self, path: &Path, outcome: &str) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header = vec![outcome.to_string()];
        header.extend(self.names.iter().cloned());
        writer.write_record(&header)?;
        for i in 0..self.n() {
            let mut record = vec![self.y[i].to_string()];
            for c in &self.columns {
                record.push(format!("{}", c[i]));
            }
            writer.write_record(&record)?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Column names are matched after trimming quotes and mapping spaces to
/// dots, so `"fixed acidity"` and `fixed.acidity` are the same column.
pub fn normalize_column_name(raw: &str) -> String {
    raw.trim().trim_matches('"').replace(' ', ".")
}

fn sniff_delimiter(raw: &str) -> u8 {
    let first_line = raw.lines().next().unwrap_or("");
    let semis = first_line.matches(';').count();
    let commas = first_line.matches(',').count();
    if semis > commas {
        b';'
    } else {
        b','
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> std::path::PathBuf {
        use std::sync::atomic::{AtomicU64, Ordering};
        static COUNTER: AtomicU64 = AtomicU64::new(0);
        let id = COUNTER.fetch_add(1, Ordering::Relaxed);
        let dir = std::env::temp_dir();
        let path = dir.join(format!("funres_test_{}_{id}.csv", std::process::id()));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn construct_checks_lengths() {
        assert!(Dataset::new(vec![], vec![], vec![]).is_err());
        assert!(Dataset::new(vec![1], vec![vec![1.0, 2.0]], vec!["x".into()]).is_err());
        let d = Dataset::new(vec![1, 0], vec![vec![1.0, 2.0]], vec!["x".into()]).unwrap();
        assert_eq!(d.n(), 2);
    }

    #[test]
    fn csv_roundtrip_comma() {
        let path = write_temp("y,x1,x2\n3,1.5,-2\n0,2.5,0.125\n");
        let d = Dataset::from_csv(&path, "y").unwrap();
        assert_eq!(d.y(), &[3, 0]);
        assert_eq!(d.column("x1").unwrap(), &[1.5, 2.5]);
        assert_eq!(d.column("x2").unwrap(), &[-2.0, 0.125]);
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn csv_semicolon_and_quoted_headers() {
        let path = write_temp("\"fixed acidity\";\"quality\"\n7.1;6\n6.3;5\n");
        let d = Dataset::from_csv(&path, "quality").unwrap();
        assert_eq!(d.y(), &[6, 5]);
        assert_eq!(d.column("fixed.acidity").unwrap(), &[7.1, 6.3]);
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn csv_rejects_missing_values() {
        let path = write_temp("y,x\n1,2.0\n2,\n");
        let err = Dataset::from_csv(&path, "y").unwrap_err();
        assert!(matches!(err, Error::CsvParse { row: 3, .. }));
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn csv_rejects_fractional_outcome() {
        let path = write_temp("y,x\n1.5,2.0\n");
        assert!(Dataset::from_csv(&path, "y").is_err());
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn unknown_outcome_column() {
        let path = write_temp("y,x\n1,2.0\n");
        assert!(matches!(
            Dataset::from_csv(&path, "outcome"),
            Err(Error::UnknownColumn(_))
        ));
        std::fs::remove_file(path).ok();
    }
}
