//! CSV reading and writing.
//!
//! Every file has a header row. Floats are written with 17 significant
//! digits, and non-finite values as the tokens `+inf`, `-inf` and `nan`.

use std::path::Path;

use brfp::{ObservationSet, SelectionMatrix, SpectralObservations, TemporalObservations};
use nalgebra::{DMatrix, DVector};

use crate::error::{CliError, Result};

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn parse_f64(s: &str) -> Option<f64> {
    match s.trim() {
        "nan" | "NaN" => Some(f64::NAN),
        "+inf" | "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

/// An in-memory table, rendered to CSV text.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("writing to memory");
        Self { writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("writing to memory");
    }

    pub fn finish(self) -> String {
        String::from_utf8(self.writer.into_inner().expect("writing to memory")).expect("CSV text is UTF-8")
    }
}

/// Rows of a headed CSV file together with their line numbers.
pub struct Records {
    path: std::path::PathBuf,
    pub headers: Vec<String>,
    pub rows: Vec<(u64, csv::StringRecord)>,
}

impl Records {
    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let headers =
            reader.headers().map_err(|e| parse_error(path, 1, e.to_string()))?.iter().map(str::to_owned).collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_error(path, line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            rows.push((line, rec));
        }
        Ok(Self { path: path.to_owned(), headers, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Validation(format!("{}: missing column `{name}` (have {:?})", self.path.display(), self.headers))
        })
    }

    pub fn error(&self, line: u64, message: impl Into<String>) -> CliError {
        parse_error(&self.path, line, message.into())
    }

    pub fn float(&self, line: u64, rec: &csv::StringRecord, col: usize) -> Result<f64> {
        let raw = rec.get(col).unwrap_or("");
        parse_f64(raw)
            .ok_or_else(|| self.error(line, format!("`{raw}` is not a number in column `{}`", self.headers[col])))
    }

    pub fn index(&self, line: u64, rec: &csv::StringRecord, col: usize) -> Result<usize> {
        let raw = rec.get(col).unwrap_or("");
        raw.parse().map_err(|_| self.error(line, format!("`{raw}` is not an index in column `{}`", self.headers[col])))
    }

    /// All values of a numeric column.
    pub fn floats(&self, name: &str) -> Result<DVector<f64>> {
        let col = self.column(name)?;
        let v = self.rows.iter().map(|(line, rec)| self.float(*line, rec, col)).collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(v))
    }
}

fn parse_error(path: &Path, line: u64, message: String) -> CliError {
    CliError::Parse { path: path.to_owned(), line, message }
}

pub const OBSERVATION_HEADER: [&str; 5] = ["domain", "index", "value_real", "value_imag", "noise_variance"];

/// Reads an observation file for a signal of length `n` (spectrum length `k`).
///
/// Rows may come in any order; each domain must use a single noise variance.
pub fn read_observations(path: &Path, n: usize, k: usize) -> Result<ObservationSet> {
    let recs = Records::read(path)?;
    let [domain, index, re, im, noise] = OBSERVATION_HEADER.map(|h| recs.column(h));
    let (domain, index, re, im, noise) = (domain?, index?, re?, im?, noise?);
    let mut time: Vec<(usize, f64)> = Vec::new();
    let mut freq: Vec<(usize, f64, f64)> = Vec::new();
    let (mut s2t, mut s2f): (Option<f64>, Option<f64>) = (None, None);
    for (line, rec) in &recs.rows {
        let line = *line;
        let i = recs.index(line, rec, index)?;
        let v = recs.float(line, rec, noise)?;
        if !(v.is_finite() && v >= 0.0) {
            return Err(recs.error(line, format!("noise variance {v} must be finite and >= 0")));
        }
        let slot = match rec.get(domain).unwrap_or("") {
            "time" => {
                if i >= n {
                    return Err(recs.error(line, format!("time index {i} out of range for length {n}")));
                }
                time.push((i, recs.float(line, rec, re)?));
                &mut s2t
            }
            "freq" => {
                if i >= k {
                    return Err(recs.error(line, format!("frequency index {i} out of range for length {k}")));
                }
                freq.push((i, recs.float(line, rec, re)?, recs.float(line, rec, im)?));
                &mut s2f
            }
            other => return Err(recs.error(line, format!("domain must be `time` or `freq`, got `{other}`"))),
        };
        match *slot {
            Some(prev) if prev != v => {
                return Err(recs.error(line, format!("noise variance {v} differs from {prev} earlier in this domain")))
            }
            _ => *slot = Some(v),
        }
    }
    time.sort_by_key(|r| r.0);
    freq.sort_by_key(|r| r.0);
    if time.windows(2).any(|w| w[0].0 == w[1].0) || freq.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(CliError::Validation(format!("{}: duplicate observation index", path.display())));
    }
    let temporal = TemporalObservations::new(
        SelectionMatrix::new(n, time.iter().map(|r| r.0).collect())?,
        DVector::from_iterator(time.len(), time.iter().map(|r| r.1)),
        s2t.unwrap_or(0.0),
    )?;
    let spectral = SpectralObservations::new(
        SelectionMatrix::new(k, freq.iter().map(|r| r.0).collect())?,
        DVector::from_iterator(freq.len(), freq.iter().map(|r| r.1)),
        DVector::from_iterator(freq.len(), freq.iter().map(|r| r.2)),
        s2f.unwrap_or(0.0),
    )?;
    Ok(ObservationSet::new(temporal, spectral))
}

pub fn observations_csv(obs: &ObservationSet) -> String {
    let mut t = Table::new(&OBSERVATION_HEADER);
    let s2t = fmt_f64(obs.temporal.noise_variance);
    for (&i, &v) in obs.temporal.selection.indices().iter().zip(obs.temporal.values.iter()) {
        t.row(["time".to_string(), i.to_string(), fmt_f64(v), String::new(), s2t.clone()]);
    }
    let s2f = fmt_f64(obs.spectral.noise_variance);
    let sp = &obs.spectral;
    for (q, &i) in sp.selection.indices().iter().enumerate() {
        t.row(["freq".to_string(), i.to_string(), fmt_f64(sp.real[q]), fmt_f64(sp.imag[q]), s2f.clone()]);
    }
    t.finish()
}

/// `block,index,mean,std` rows for each requested block.
pub fn posterior_csv(post: &brfp::PosteriorResult, blocks: &[brfp::Block]) -> String {
    let mut t = Table::new(&["block", "index", "mean", "std"]);
    for &b in blocks {
        let (m, s) = (post.block_mean(b).expect("block present"), post.block_std(b).expect("block present"));
        for i in 0..m.len() {
            t.row([b.name().to_string(), i.to_string(), fmt_f64(m[i]), fmt_f64(s[i])]);
        }
    }
    t.finish()
}

pub fn metrics_csv(rows: &[(String, f64)]) -> String {
    let mut t = Table::new(&["metric", "value"]);
    for (name, v) in rows {
        t.row([name.clone(), fmt_f64(*v)]);
    }
    t.finish()
}

/// A square grid as CSV: header `c0,...,c{n-1}`, one line per row.
pub fn grid_csv(m: &DMatrix<f64>) -> String {
    let header: Vec<String> = (0..m.ncols()).map(|c| format!("c{c}")).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new(&header);
    for r in 0..m.nrows() {
        t.row((0..m.ncols()).map(|c| fmt_f64(m[(r, c)])));
    }
    t.finish()
}

pub fn read_grid(path: &Path) -> Result<DMatrix<f64>> {
    let recs = Records::read(path)?;
    let cols = recs.headers.len();
    if recs.rows.len() != cols {
        return Err(CliError::Validation(format!(
            "{}: grid must be square, got {} rows and {cols} columns",
            path.display(),
            recs.rows.len()
        )));
    }
    let mut m = DMatrix::zeros(cols, cols);
    for (r, (line, rec)) in recs.rows.iter().enumerate() {
        for c in 0..cols {
            m[(r, c)] = recs.float(*line, rec, c)?;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_tokens_round_trip() {
        for v in [0.0, -1.5, 1.0 / 3.0, 1e-300, f64::MAX, f64::INFINITY, f64::NEG_INFINITY] {
            assert_eq!(parse_f64(&fmt_f64(v)).unwrap(), v);
        }
        assert!(parse_f64(&fmt_f64(f64::NAN)).unwrap().is_nan());
        assert_eq!(fmt_f64(f64::INFINITY), "+inf");
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert!(parse_f64("abc").is_none());
    }

    #[test]
    fn seventeen_significant_digits() {
        let s = fmt_f64(std::f64::consts::PI);
        let mantissa = s.split('e').next().unwrap().replace(['.', '-'], "");
        assert_eq!(mantissa.len(), 17);
    }
}
