//! Per-gene pooled two-sample t statistics and their two-sided p-values.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::parse_field;
use crate::special::student_t_two_sided;

/// Genes by samples. The first CSV column holds the gene id.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionMatrix {
    pub genes: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ExpressionMatrix {
    pub fn new(genes: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if genes.len() != rows.len() {
            return Err(Error::LengthMismatch(genes.len(), rows.len()));
        }
        if rows.is_empty() {
            return Err(Error::EmptyInput);
        }
        let width = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::parse(i + 2, format!("expected {width} sample columns, found {}", row.len())));
            }
        }
        Ok(ExpressionMatrix { genes, rows })
    }

    pub fn columns(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
        let width = csv.headers()?.len();
        if width < 2 {
            return Err(Error::parse(1, "header needs a gene column and at least one sample column"));
        }
        let mut genes = Vec::new();
        let mut rows = Vec::new();
        for (i, record) in csv.records().enumerate() {
            let record = record?;
            let line = i + 2;
            if record.len() != width {
                return Err(Error::parse(line, format!("expected {width} fields, found {}", record.len())));
            }
            genes.push(record[0].trim().to_string());
            let row = record
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, raw)| parse_field::<f64>(raw, line, &format!("column {}", j + 1)))
                .collect::<Result<Vec<f64>>>()?;
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::parse(line, format!("column {}: non-finite value", j + 2)));
            }
            rows.push(row);
        }
        Self::new(genes, rows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneStat {
    pub gene: String,
    pub t: f64,
    pub p_value: f64,
}

/// Pooled two-sample statistic
/// `t = (mean1 - mean2) / s` with
/// `s² = (1/m1 + 1/m2)(SS1 + SS2)/(m1 + m2 - 2)`.
pub fn pooled_t(group1: &[f64], group2: &[f64]) -> Result<f64> {
    let (m1, m2) = (group1.len(), group2.len());
    if m1 < 2 || m2 < 2 {
        return Err(Error::invalid(format!("each group needs at least 2 columns, got {m1} and {m2}")));
    }
    let mean = |g: &[f64]| g.iter().sum::<f64>() / g.len() as f64;
    let ss = |g: &[f64], mu: f64| g.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>();
    let (a, b) = (mean(group1), mean(group2));
    let diff = a - b;
    let s2 = (1.0 / m1 as f64 + 1.0 / m2 as f64) * (ss(group1, a) + ss(group2, b)) / (m1 + m2 - 2) as f64;
    if diff == 0.0 {
        return Ok(0.0);
    }
    Ok(diff / s2.sqrt())
}

/// Statistics for every gene, with the first `group1_cols` sample columns as group 1.
pub fn two_sample_tstats(matrix: &ExpressionMatrix, group1_cols: usize) -> Result<Vec<GeneStat>> {
    let m = matrix.columns();
    if group1_cols < 2 || m < group1_cols + 2 {
        return Err(Error::invalid(format!(
            "group sizes {group1_cols} and {} must both be at least 2",
            m.saturating_sub(group1_cols)
        )));
    }
    let df = (m - 2) as f64;
    matrix
        .genes
        .iter()
        .zip(&matrix.rows)
        .map(|(gene, row)| {
            let t = pooled_t(&row[..group1_cols], &row[group1_cols..])?;
            Ok(GeneStat {
                gene: gene.clone(),
                t,
                p_value: student_t_two_sided(df, t),
            })
        })
        .collect()
}

/// Writes `gene,t,p_value`.
pub fn write_tstats_csv<W: Write>(writer: W, stats: &[GeneStat]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["gene", "t", "p_value"])?;
    for s in stats {
        out.write_record([s.gene.clone(), s.t.to_string(), s.p_value.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_means_give_t_zero() {
        let t = pooled_t(&[1.0, 3.0], &[2.0, 2.0]).unwrap();
        assert_eq!(t, 0.0);
        assert_eq!(student_t_two_sided(2.0, t), 1.0);
    }

    #[test]
    fn hand_computed_statistic() {
        // means 2 and 5, SS 2 + 2, s² = (1/3+1/3)·4/4
        let t = pooled_t(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((t - (-3.0 / (2.0f64 / 3.0).sqrt())).abs() < 1e-14);
    }

    #[test]
    fn small_groups_rejected() {
        assert!(pooled_t(&[1.0], &[1.0, 2.0]).is_err());
        let m = ExpressionMatrix::new(vec!["g".into()], vec![vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(two_sample_tstats(&m, 2).is_err());
        assert!(two_sample_tstats(&m, 1).is_err());
    }

    #[test]
    fn ragged_rows_name_the_line() {
        let data = "gene,a,b,c,d\ng1,1,2,3,4\ng2,1,2,3\n";
        match ExpressionMatrix::from_csv_reader(data.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_number_names_the_field() {
        let data = "gene,a,b,c,d\ng1,1,2,x,4\n";
        let err = ExpressionMatrix::from_csv_reader(data.as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("column 4"), "{msg}");
    }

    #[test]
    fn csv_round_trip() {
        let data = "gene,a,b,c,d\ng1,1,2,3,5\ng2,0.5,0.25,1,2\n";
        let m = ExpressionMatrix::from_csv_reader(data.as_bytes()).unwrap();
        let stats = two_sample_tstats(&m, 2).unwrap();
        let mut buf = Vec::new();
        write_tstats_csv(&mut buf, &stats).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        let back: Vec<GeneStat> = rd.deserialize().collect::<std::result::Result<_, _>>().unwrap();
        assert_eq!(back, stats);
    }
}
