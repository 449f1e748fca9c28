//! CSV and JSON exchange formats. Every writer has a matching reader, and
//! numbers are written in shortest round-trip form, so write → read → write
//! reproduces files byte for byte.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::bath::DiscretizedBath;
use crate::error::{Error, Result};
use crate::gaussian::{self, CovarianceMatrix, WignerGrid};
use crate::propagation::PropagationResult;
use crate::pulse::{ControlPulse, DriveMode};

fn io_err(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

fn csv_err(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::Parse(format!("CSV at byte offset {}: {e}", p.byte())),
        None => match e.into_kind() {
            csv::ErrorKind::Io(io) => io_err(io),
            kind => Error::Parse(format!("CSV: {kind:?}")),
        },
    }
}

/// Byte offset of a 1-based (line, column) position in `text`.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let start: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Parses JSON, reporting failures with their byte offset.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        let at = byte_offset(text, e.line(), e.column());
        Error::Parse(format!("JSON at byte offset {at}: {e}"))
    })
}

pub fn write_covariance_json<W: Write>(sigma: &CovarianceMatrix, mut out: W) -> Result<()> {
    out.write_all(to_json(sigma)?.as_bytes()).map_err(io_err)
}

pub fn read_covariance_json<R: Read>(mut input: R) -> Result<CovarianceMatrix> {
    let mut text = String::new();
    input.read_to_string(&mut text).map_err(io_err)?;
    from_json(&text)
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn parse_num(s: &str, line: u64, field: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: field {field} = {s:?} is not a number")))
}

fn write_table<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| num(*v))).map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}

fn read_table<R: Read>(input: R, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_reader(input);
    let found: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if found != header {
        return Err(Error::Parse(format!("expected CSV header {header:?}, found {found:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .iter()
            .zip(header)
            .map(|(s, h)| parse_num(s, line, h))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub const TIME_SERIES_HEADER: [&str; 14] = [
    "t", "e_n", "neg_log_nu", "det_gamma", "s_qa_qa", "s_qa_pa", "s_qa_qb", "s_qa_pb", "s_pa_pa", "s_pa_qb",
    "s_pa_pb", "s_qb_qb", "s_qb_pb", "s_pb_pb",
];

/// One row of the time-series table.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSample {
    pub t: f64,
    pub e_n: f64,
    pub neg_log_nu: f64,
    pub det_gamma: f64,
    /// Upper triangle of σ_sys, row by row.
    pub sigma: [f64; 10],
}

impl TimeSample {
    pub fn of(t: f64, sigma: &CovarianceMatrix) -> Result<Self> {
        let m = sigma.as_matrix4()?;
        let nl = gaussian::neg_log_nu(sigma)?;
        let mut upper = [0.0; 10];
        let mut k = 0;
        for i in 0..4 {
            for j in i..4 {
                upper[k] = m[(i, j)];
                k += 1;
            }
        }
        Ok(Self {
            t,
            e_n: nl.max(0.0),
            neg_log_nu: nl,
            det_gamma: gaussian::det_gamma(sigma)?,
            sigma: upper,
        })
    }

    pub fn covariance(&self) -> Result<CovarianceMatrix> {
        let mut m = nalgebra::DMatrix::zeros(4, 4);
        let mut k = 0;
        for i in 0..4 {
            for j in i..4 {
                m[(i, j)] = self.sigma[k];
                m[(j, i)] = self.sigma[k];
                k += 1;
            }
        }
        CovarianceMatrix::new(m)
    }
}

pub fn time_series(result: &PropagationResult) -> Result<Vec<TimeSample>> {
    result
        .times
        .iter()
        .zip(&result.reduced)
        .map(|(&t, s)| TimeSample::of(t, s))
        .collect()
}

pub fn write_time_series_csv<W: Write>(samples: &[TimeSample], out: W) -> Result<()> {
    write_table(
        out,
        &TIME_SERIES_HEADER,
        samples.iter().map(|s| {
            let mut row = vec![s.t, s.e_n, s.neg_log_nu, s.det_gamma];
            row.extend_from_slice(&s.sigma);
            row
        }),
    )
}

pub fn read_time_series_csv<R: Read>(input: R) -> Result<Vec<TimeSample>> {
    read_table(input, &TIME_SERIES_HEADER)?
        .into_iter()
        .map(|r| {
            let mut sigma = [0.0; 10];
            sigma.copy_from_slice(&r[4..14]);
            Ok(TimeSample {
                t: r[0],
                e_n: r[1],
                neg_log_nu: r[2],
                det_gamma: r[3],
                sigma,
            })
        })
        .collect()
}

pub const PULSE_HEADER: [&str; 4] = ["t_start", "t_end", "u_a", "u_b"];

pub fn write_pulse_csv<W: Write>(pulse: &ControlPulse, out: W) -> Result<()> {
    write_table(
        out,
        &PULSE_HEADER,
        (0..pulse.n_segments()).map(|i| {
            let (a, b, ua, ub) = pulse.segment(i);
            vec![a, b, ua, ub]
        }),
    )
}

/// Reads a pulse table; segments must be contiguous from t = 0.
pub fn read_pulse_csv<R: Read>(input: R, mode: DriveMode, bound: f64) -> Result<ControlPulse> {
    let rows = read_table(input, &PULSE_HEADER)?;
    if rows.is_empty() {
        return Err(Error::Parse("pulse table has no segments".into()));
    }
    let mut edges = vec![rows[0][0]];
    for (i, r) in rows.iter().enumerate() {
        if r[0] != edges[i] {
            return Err(Error::Parse(format!("pulse segment {} starts at {} but the previous one ends at {}", i + 1, r[0], edges[i])));
        }
        edges.push(r[1]);
    }
    let a = rows.iter().map(|r| r[2]).collect();
    let b = rows.iter().map(|r| r[3]).collect();
    ControlPulse::with_edges(mode, bound, edges, a, b)
}

pub const WIGNER_HEADER: [&str; 3] = ["q", "p", "w"];

pub fn write_wigner_csv<W: Write>(grid: &WignerGrid, out: W) -> Result<()> {
    let qs = grid.grid.q_points();
    let ps = grid.grid.p_points();
    let mut rows = Vec::with_capacity(qs.len() * ps.len());
    for (i, &q) in qs.iter().enumerate() {
        for (j, &p) in ps.iter().enumerate() {
            rows.push(vec![q, p, grid.values[(i, j)]]);
        }
    }
    write_table(out, &WIGNER_HEADER, rows)
}

/// (Q, P, W) triples in file order.
pub fn read_wigner_csv<R: Read>(input: R) -> Result<Vec<[f64; 3]>> {
    Ok(read_table(input, &WIGNER_HEADER)?.into_iter().map(|r| [r[0], r[1], r[2]]).collect())
}

pub const BATH_HEADER: [&str; 2] = ["omega", "c"];

pub fn write_bath_csv<W: Write>(bath: &DiscretizedBath, out: W) -> Result<()> {
    write_table(out, &BATH_HEADER, bath.omegas.iter().zip(&bath.couplings).map(|(&w, &c)| vec![w, c]))
}

pub fn read_bath_csv<R: Read>(input: R) -> Result<Vec<(f64, f64)>> {
    Ok(read_table(input, &BATH_HEADER)?.into_iter().map(|r| (r[0], r[1])).collect())
}

pub const BARS_HEADER: [&str; 3] = ["i", "j", "sigma_ij"];

/// Every entry of σ as (i, j, σ_ij), for bar charts of the covariance.
pub fn write_bars_csv<W: Write>(sigma: &CovarianceMatrix, out: W) -> Result<()> {
    let d = sigma.dim();
    let m = sigma.entries();
    write_table(
        out,
        &BARS_HEADER,
        (0..d).flat_map(|i| (0..d).map(move |j| vec![i as f64, j as f64, m[(i, j)]])),
    )
}

pub fn read_bars_csv<R: Read>(input: R) -> Result<CovarianceMatrix> {
    let rows = read_table(input, &BARS_HEADER)?;
    let d = (rows.len() as f64).sqrt() as usize;
    if d * d != rows.len() {
        return Err(Error::Parse(format!("{} bar entries do not form a square matrix", rows.len())));
    }
    let mut m = nalgebra::DMatrix::zeros(d, d);
    for r in rows {
        let (i, j) = (r[0] as usize, r[1] as usize);
        if i >= d || j >= d || r[0] != i as f64 || r[1] != j as f64 {
            return Err(Error::Parse(format!("bad bar index ({}, {})", r[0], r[1])));
        }
        m[(i, j)] = r[2];
    }
    CovarianceMatrix::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{wigner_grid, PhaseGrid};
    use nalgebra::Vector2;

    fn roundtrip<T>(write: impl Fn(&T, &mut Vec<u8>) -> Result<()>, read: impl Fn(&[u8]) -> Result<T>, value: &T) {
        let mut first = Vec::new();
        write(value, &mut first).unwrap();
        let back = read(&first).unwrap();
        let mut second = Vec::new();
        write(&back, &mut second).unwrap();
        assert_eq!(String::from_utf8(first).unwrap(), String::from_utf8(second).unwrap());
    }

    #[test]
    fn covariance_json_round_trips() {
        let s = CovarianceMatrix::two_mode_squeezed_vacuum(0.37);
        roundtrip(|s, o| write_covariance_json(s, o), |b| read_covariance_json(b), &s);
    }

    #[test]
    fn json_errors_carry_byte_offset() {
        let text = "{\n  \"dim\": 2,\n  \"entries\": [0.5, 0.0, 0.0 0.5]\n}";
        match from_json::<CovarianceMatrix>(text) {
            Err(Error::Parse(m)) => assert!(m.contains("byte offset 42"), "{m}"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(from_json::<CovarianceMatrix>("{\"dim\": 2, \"entries\": [1, 0.3, 0, 1]}"), Err(Error::Parse(_))));
    }

    #[test]
    fn tables_round_trip() {
        let s = CovarianceMatrix::two_mode_squeezed_vacuum(0.2);
        let samples = vec![TimeSample::of(0.1, &s).unwrap(), TimeSample::of(1.0 / 3.0, &CovarianceMatrix::vacuum(2)).unwrap()];
        roundtrip(|v, o| write_time_series_csv(v, o), |b| read_time_series_csv(b), &samples);
        assert_eq!(read_time_series_csv(&b"t,e_n\n1,2\n"[..]).unwrap_err().to_string().contains("header"), true);

        let p = ControlPulse::uniform(DriveMode::Free, 1.0, 2.0, vec![0.1, -0.7, 1.9], vec![0.0, 1.0 / 3.0, -2.0]).unwrap();
        roundtrip(|v, o| write_pulse_csv(v, o), |b| read_pulse_csv(b, DriveMode::Free, 2.0), &p);

        let w = wigner_grid(&CovarianceMatrix::vacuum(1), Vector2::zeros(), PhaseGrid::square(2.0, 5)).unwrap();
        let mut buf = Vec::new();
        write_wigner_csv(&w, &mut buf).unwrap();
        let back = read_wigner_csv(&buf[..]).unwrap();
        assert_eq!(back.len(), 25);
        assert_eq!(back[12], [0.0, 0.0, w.values[(2, 2)]]);

        roundtrip(|v, o| write_bars_csv(v, o), |b| read_bars_csv(b), &s);
    }

    #[test]
    fn bad_numbers_are_parse_errors() {
        let e = read_pulse_csv(&b"t_start,t_end,u_a,u_b\n0,1,x,0\n"[..], DriveMode::Free, 1.0).unwrap_err();
        assert!(matches!(e, Error::Parse(m) if m.contains("u_a")));
    }
}
