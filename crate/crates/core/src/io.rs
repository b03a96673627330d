//! CSV readers and writers for the command-line formats.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::density::KnownComponentSpec;
use crate::em::{posterior_unknown, Degenerate, EmResult};
use crate::error::{Error, Result};
use crate::identifiability::IdentifiabilityReport;
use crate::logconcave::LogConcaveFit;

pub(crate) fn parse_field<T: std::str::FromStr>(raw: &str, line: usize, field: &str) -> Result<T> {
    raw.trim()
        .parse::<T>()
        .map_err(|_| Error::parse(line, format!("field `{field}`: cannot parse `{raw}`")))
}

fn parse_label(raw: &str, line: usize) -> Result<bool> {
    match raw.trim() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(Error::parse(line, format!("field `label`: expected 0 or 1, got `{other}`"))),
    }
}

fn finite(v: f64, line: usize, field: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::parse(line, format!("field `{field}`: non-finite value")))
    }
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r)
}

/// Observations with optional labels; `label = 1` marks a draw from `f0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub values: Vec<f64>,
    pub labels: Option<Vec<bool>>,
}

/// Reads the column named `column` and, when present, a `label` column.
/// Other columns are ignored.
pub fn read_data_csv<R: Read>(r: R, column: &str) -> Result<LabeledData> {
    let mut rdr = reader(r);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let Some(xi) = find(column) else {
        return Err(Error::parse(1, format!("no column named `{column}`")));
    };
    let li = find("label");
    let width = headers.len();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != width {
            return Err(Error::parse(line, format!("expected {width} fields, found {}", rec.len())));
        }
        values.push(finite(parse_field(&rec[xi], line, column)?, line, column)?);
        if let Some(li) = li {
            labels.push(parse_label(&rec[li], line)?);
        }
    }
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(LabeledData {
        values,
        labels: li.map(|_| labels),
    })
}

pub fn read_data_csv_path(path: impl AsRef<Path>, column: &str) -> Result<LabeledData> {
    read_data_csv(std::fs::File::open(path)?, column)
}

pub fn write_data_csv<W: Write>(w: W, values: &[f64], labels: Option<&[bool]>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    match labels {
        Some(labels) => {
            if labels.len() != values.len() {
                return Err(Error::LengthMismatch(values.len(), labels.len()));
            }
            out.write_record(["x", "label"])?;
            for (x, &l) in values.iter().zip(labels) {
                out.write_record([x.to_string(), u8::from(l).to_string()])?;
            }
        }
        None => {
            out.write_record(["x"])?;
            for x in values {
                out.write_record([x.to_string()])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads `x,weight`.
pub fn read_weighted_csv<R: Read>(r: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = reader(r);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != 2 {
            return Err(Error::parse(line, format!("expected 2 fields, found {}", rec.len())));
        }
        points.push(finite(parse_field(&rec[0], line, "x")?, line, "x")?);
        let w: f64 = finite(parse_field(&rec[1], line, "weight")?, line, "weight")?;
        if w < 0.0 {
            return Err(Error::parse(line, "field `weight`: negative"));
        }
        weights.push(w);
    }
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok((points, weights))
}

pub fn read_weighted_csv_path(path: impl AsRef<Path>) -> Result<(Vec<f64>, Vec<f64>)> {
    read_weighted_csv(std::fs::File::open(path)?)
}

/// Evenly spaced evaluation points `lo, ..., hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!("grid bounds {lo}, {hi}")));
        }
        if count < 2 {
            return Err(Error::invalid(format!("grid count {count} < 2")));
        }
        Ok(GridSpec { lo, hi, count })
    }

    /// Parses `lo,hi,count`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::invalid(format!("grid `{s}`: expected lo,hi,count")));
        }
        let num = |t: &str| t.parse::<f64>().map_err(|_| Error::invalid(format!("grid `{s}`: bad number `{t}`")));
        let count = parts[2]
            .parse::<usize>()
            .map_err(|_| Error::invalid(format!("grid `{s}`: bad count `{}`", parts[2])))?;
        Self::new(num(parts[0])?, num(parts[1])?, count)
    }

    pub fn points(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.hi } else { self.lo + step * i as f64 })
            .collect()
    }
}

/// Writes `x,phi,f_hat` for a log-concave fit.
pub fn write_fit_grid_csv<W: Write>(w: W, grid: &GridSpec, fit: &LogConcaveFit) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "phi", "f_hat"])?;
    for x in grid.points() {
        let phi = fit.log_density(x);
        out.write_record([x.to_string(), phi.to_string(), phi.exp().to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `x,f0,f_hat,g_hat,posterior`. The posterior is 0 where the
/// mixture density vanishes.
pub fn write_em_grid_csv<W: Write>(
    w: W,
    grid: &GridSpec,
    result: &EmResult,
    f0: &KnownComponentSpec,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "f0", "f_hat", "g_hat", "posterior"])?;
    for x in grid.points() {
        let a = f0.pdf(x);
        let b = result.f_hat.density(x);
        let g = result.mixture_density(x, f0);
        let post = posterior_unknown(result, x, f0).unwrap_or(0.0);
        out.write_record([x.to_string(), a.to_string(), b.to_string(), g.to_string(), post.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// JSON document written by the `fit` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmExport {
    pub p_hat: f64,
    pub iterations: usize,
    pub converged: bool,
    pub degenerate: Option<Degenerate>,
    pub loglik_trace: Vec<f64>,
    pub omega: Vec<f64>,
    pub fit: LogConcaveFit,
    pub identifiability: IdentifiabilityReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cla_error: Option<f64>,
}

impl EmExport {
    pub fn new(result: &EmResult, identifiability: IdentifiabilityReport, cla_error: Option<f64>) -> Self {
        EmExport {
            p_hat: result.p_hat,
            iterations: result.iterations,
            converged: result.converged,
            degenerate: result.degenerate,
            loglik_trace: result.loglik_trace.clone(),
            omega: result.omega.clone(),
            fit: result.f_hat.clone(),
            identifiability,
            cla_error,
        }
    }
}

pub fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_with_and_without_labels() {
        let d = read_data_csv("x\n1.5\n-2\n".as_bytes(), "x").unwrap();
        assert_eq!(d.values, vec![1.5, -2.0]);
        assert!(d.labels.is_none());
        let d = read_data_csv("x,label\n1.5,1\n-2,0\n".as_bytes(), "x").unwrap();
        assert_eq!(d.labels, Some(vec![true, false]));
    }

    #[test]
    fn data_errors_name_line_and_field() {
        let err = read_data_csv("x,label\n1.5,1\nabc,0\n".as_bytes(), "x").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(err.to_string().contains("`x`"));
        let err = read_data_csv("x,label\n1.5,2\n".as_bytes(), "x").unwrap_err();
        assert!(err.to_string().contains("label"));
        let err = read_data_csv("x,label\n1.5\n".as_bytes(), "x").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(matches!(read_data_csv("x\n".as_bytes(), "x"), Err(Error::EmptyInput)));
        assert!(read_data_csv("x\nNaN\n".as_bytes(), "x").is_err());
        assert!(read_data_csv("y\n1\n".as_bytes(), "x").is_err());
    }

    #[test]
    fn named_column_selection() {
        let d = read_data_csv("gene,t,p_value\ng1,0.5,0.61\ng2,-2,0.04\n".as_bytes(), "p_value").unwrap();
        assert_eq!(d.values, vec![0.61, 0.04]);
        assert!(d.labels.is_none());
    }

    #[test]
    fn data_round_trip() {
        let values = [0.1, -1.0 / 3.0, 1e-300, 12345.678];
        let labels = [true, false, false, true];
        let mut buf = Vec::new();
        write_data_csv(&mut buf, &values, Some(&labels)).unwrap();
        let back = read_data_csv(buf.as_slice(), "x").unwrap();
        assert_eq!(back.values, values);
        assert_eq!(back.labels.unwrap(), labels);
    }

    #[test]
    fn weighted_reader() {
        let (x, w) = read_weighted_csv("x,weight\n0,1\n1,2.5\n".as_bytes()).unwrap();
        assert_eq!(x, vec![0.0, 1.0]);
        assert_eq!(w, vec![1.0, 2.5]);
        assert!(read_weighted_csv("x,weight\n0,-1\n".as_bytes()).is_err());
        assert!(read_weighted_csv("x,weight\n0\n".as_bytes()).is_err());
    }

    #[test]
    fn grid_parsing() {
        let g = GridSpec::parse("0,1,5").unwrap();
        assert_eq!(g.points(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(GridSpec::parse("0,1,1").is_err());
        assert!(GridSpec::parse("1,0,5").is_err());
        assert!(GridSpec::parse("0,1").is_err());
    }
}
