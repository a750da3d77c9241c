//! CSV ingestion of observation paths and serialization of results.
//!
//! Formats (UTF-8, LF line endings, reals in shortest round-trip form):
//!
//! * path: `t,<label1>,…,<labelD>`, one row per grid time;
//! * series: `t,u,v,sigma_uv`, upper triangle only, 1-based `u <= v`;
//! * spectrum: `t,rank,lambda`, 1-based rank, descending eigenvalues;
//! * truth: `t,v1,…,vD1`, the simulated variance factors.

use std::io::{Read, Write};

use crate::eig::SymMatrix;
use crate::error::{Error, Result};
use crate::sample::{PathSample, SpotMatrixSeries};
use crate::sim::GroundTruth;

/// Shortest decimal representation that parses back to the same `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => parse_error(p.line(), e.to_string()),
        None => Error::Csv(e),
    }
}

fn writer<W: Write>(sink: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink)
}

pub fn read_path_csv<R: Read>(source: R) -> Result<PathSample> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.len() < 2 || &header[0] != "t" {
        return Err(parse_error(1, "header must be `t,<label1>,...,<labelD>`"));
    }
    let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let d = labels.len();
    let mut times = Vec::new();
    let mut columns = vec![Vec::new(); d];
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let mut fields = record.iter().map(|f| {
            f.parse::<f64>()
                .map_err(|e| parse_error(line, format!("bad number `{f}`: {e}")))
        });
        times.push(fields.next().ok_or_else(|| parse_error(line, "empty row"))??);
        for col in columns.iter_mut() {
            col.push(fields.next().ok_or_else(|| parse_error(line, "short row"))??);
        }
    }
    if times.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 observation rows, got {}",
            times.len()
        )));
    }
    PathSample::new(times, columns, labels)
}

pub fn write_path_csv<W: Write>(path: &PathSample, sink: W) -> Result<()> {
    let mut w = writer(sink);
    let mut header = vec!["t".to_string()];
    header.extend(path.labels().iter().cloned());
    w.write_record(&header)?;
    for (i, &t) in path.times().iter().enumerate() {
        let mut row = vec![format_f64(t)];
        row.extend(path.columns().iter().map(|c| format_f64(c[i])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the upper triangle of every matrix to `sigma_sink` and the
/// spectra to `spectrum_sink`.
pub fn write_series_csv<W1: Write, W2: Write>(
    series: &SpotMatrixSeries,
    sigma_sink: W1,
    spectrum_sink: W2,
) -> Result<()> {
    let mut ws = writer(sigma_sink);
    let mut we = writer(spectrum_sink);
    ws.write_record(["t", "u", "v", "sigma_uv"])?;
    we.write_record(["t", "rank", "lambda"])?;
    for (t, m, s) in series.iter() {
        let tf = format_f64(t);
        for u in 0..m.dim() {
            for v in u..m.dim() {
                ws.write_record([
                    tf.as_str(),
                    &(u + 1).to_string(),
                    &(v + 1).to_string(),
                    &format_f64(m.get(u, v)),
                ])?;
            }
        }
        for (r, l) in s.values().iter().enumerate() {
            we.write_record([tf.as_str(), &(r + 1).to_string(), &format_f64(*l)])?;
        }
    }
    ws.flush()?;
    we.flush()?;
    Ok(())
}

/// Reads a `t,u,v,sigma_uv` file back into a series, mirroring each entry
/// across the diagonal. Spectra are recomputed.
pub fn read_series_csv<R: Read>(source: R) -> Result<SpotMatrixSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut rows: Vec<(f64, usize, usize, f64)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| {
            record
                .get(i)
                .ok_or_else(|| parse_error(line, "short row"))
        };
        let num = |i: usize| -> Result<f64> {
            let f = field(i)?;
            f.parse().map_err(|e| parse_error(line, format!("bad number `{f}`: {e}")))
        };
        let idx = |i: usize| -> Result<usize> {
            let f = field(i)?;
            match f.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(k - 1),
                _ => Err(parse_error(line, format!("bad index `{f}`"))),
            }
        };
        rows.push((num(0)?, idx(1)?, idx(2)?, num(3)?));
    }

    let mut series = SpotMatrixSeries::new();
    let mut start = 0;
    while start < rows.len() {
        let t = rows[start].0;
        let end = start + rows[start..].iter().take_while(|r| r.0 == t).count();
        let dim = rows[start..end]
            .iter()
            .map(|r| r.1.max(r.2) + 1)
            .max()
            .unwrap_or(1);
        let mut m = SymMatrix::zeros(dim);
        for &(_, u, v, x) in &rows[start..end] {
            m.set(u, v, x);
        }
        series.push(t, m)?;
        start = end;
    }
    Ok(series)
}

pub fn write_truth_csv<W: Write>(truth: &GroundTruth, sink: W) -> Result<()> {
    let mut w = writer(sink);
    let d1 = truth.variance_paths.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string()];
    header.extend((1..=d1).map(|j| format!("v{j}")));
    w.write_record(&header)?;
    for (t, v) in truth.times.iter().zip(&truth.variance_paths) {
        let mut row = vec![format_f64(*t)];
        row.extend(v.iter().map(|x| format_f64(*x)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_small_file() {
        let p = read_path_csv("t,x\n0,1\n0.5,1.1\n1,1.2\n".as_bytes()).unwrap();
        assert_eq!(p.n(), 2);
        assert_eq!(p.horizon(), 1.0);
        assert_eq!(p.labels(), &["x".to_string()]);
        assert_eq!(p.column(0), &[1.0, 1.1, 1.2]);
    }

    #[test]
    fn nan_is_validation_error() {
        let err = read_path_csv("t,x\n0,1\n0.5,NaN\n1,1.2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = read_path_csv("t,x\n0,1\n0.5,abc\n1,1.2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = read_path_csv("t,x\n0,1\n0.5\n1,1.2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn too_few_rows_and_irregular_grid() {
        assert!(matches!(
            read_path_csv("t,x\n0,1\n1,2\n".as_bytes()),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            read_path_csv("t,x\n0,1\n0.4,2\n1,3\n".as_bytes()),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            read_path_csv("time,x\n0,1\n0.5,2\n1,3\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn empty_series_header_only() {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_series_csv(&SpotMatrixSeries::new(), &mut a, &mut b).unwrap();
        assert_eq!(String::from_utf8(a).unwrap(), "t,u,v,sigma_uv\n");
        assert_eq!(String::from_utf8(b).unwrap(), "t,rank,lambda\n");
    }

    #[test]
    fn identity_series_rows() {
        let mut s = SpotMatrixSeries::new();
        s.push(1.0, SymMatrix::identity(2)).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_series_csv(&s, &mut a, &mut b).unwrap();
        assert_eq!(
            String::from_utf8(a).unwrap(),
            "t,u,v,sigma_uv\n1.0,1,1,1.0\n1.0,1,2,0.0\n1.0,2,2,1.0\n"
        );
        assert_eq!(
            String::from_utf8(b).unwrap(),
            "t,rank,lambda\n1.0,1,1.0\n1.0,2,1.0\n"
        );
    }

    #[test]
    fn series_round_trip_restores_symmetry() {
        let mut s = SpotMatrixSeries::new();
        s.push(0.25, SymMatrix::from_rows(&[vec![1.0, 0.1], vec![0.1, 2.0]]).unwrap())
            .unwrap();
        s.push(0.5, SymMatrix::from_rows(&[vec![0.3, -0.2], vec![-0.2, 0.7]]).unwrap())
            .unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_series_csv(&s, &mut a, &mut b).unwrap();
        let back = read_series_csv(a.as_slice()).unwrap();
        assert_eq!(back, s);
    }
}
