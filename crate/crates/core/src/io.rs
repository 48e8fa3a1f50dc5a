//! Plain-text outputs: CSV tables with 17 significant digits and a simple
//! sectioned text format for matrices and reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::statespace::{StateSpaceModel, Trajectory};
use crate::sysid::EraResult;
use crate::tfmatch::IdentificationResult;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV with a header row; every column must have the same length.
pub fn write_csv(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    let rows = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != rows) || header.len() != columns.len() {
        return Err(Error::Shape("CSV columns must share one length and have one header each".into()));
    }
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| num(c[i])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// `t,y1,..,yL` followed by any extra named columns.
pub fn write_trajectory(path: &Path, traj: &Trajectory, extra: &[(&str, Vec<f64>)]) -> Result<()> {
    let times: Vec<f64> = traj.times().collect();
    let chans: Vec<Vec<f64>> = (0..traj.channels()).map(|l| traj.channel(l)).collect();
    let mut header: Vec<&str> = vec!["t"];
    header.extend(traj.channel_names.iter().map(|s| s.as_str()));
    header.extend(extra.iter().map(|(n, _)| *n));
    let mut cols: Vec<&[f64]> = vec![&times];
    cols.extend(chans.iter().map(|c| c.as_slice()));
    cols.extend(extra.iter().map(|(_, c)| c.as_slice()));
    write_csv(path, &header, &cols)
}

/// Reads the `t` column and every column named `y<k>`; other columns are
/// ignored. The sample interval is taken from the first two times.
pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read trajectory {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Parse("empty trajectory file".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    let t_col = header
        .iter()
        .position(|h| *h == "t")
        .ok_or_else(|| Error::Parse("trajectory has no t column".into()))?;
    let y_cols: Vec<usize> = (0..header.len())
        .filter(|&i| {
            let h = header[i];
            h.len() > 1 && h.starts_with('y') && h[1..].chars().all(|c| c.is_ascii_digit())
        })
        .collect();
    if y_cols.is_empty() {
        return Err(Error::Parse("trajectory has no y<k> columns".into()));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != header.len() {
            return Err(Error::Parse(format!("row {} has {} fields, header has {}", row + 1, fields.len(), header.len())));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("row {}: cannot parse {s:?}", row + 1)))
        };
        times.push(parse(fields[t_col])?);
        for &c in &y_cols {
            values.push(parse(fields[c])?);
        }
    }
    if times.len() < 2 {
        return Err(Error::Parse("trajectory needs at least two rows".into()));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::Parse("trajectory times must increase".into()));
    }
    let samples = DMatrix::from_row_slice(times.len(), y_cols.len(), &values);
    let names = y_cols.iter().map(|&c| header[c].to_string()).collect();
    Trajectory::new(dt, samples, names)
}

pub fn write_singular_values(path: &Path, sv: &[f64]) -> Result<()> {
    let idx: Vec<f64> = (1..=sv.len()).map(|i| i as f64).collect();
    let mut out = String::from("index,sigma\n");
    for (i, s) in idx.iter().zip(sv) {
        let _ = writeln!(out, "{},{}", *i as usize, num(*s));
    }
    fs::write(path, out)?;
    Ok(())
}

fn matrix_block(out: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(out, "[{name}] {} {}", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| num(*v)).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

fn vector_block(out: &mut String, name: &str, v: &DVector<f64>) {
    let _ = writeln!(out, "[{name}] {}", v.len());
    let row: Vec<String> = v.iter().map(|x| num(*x)).collect();
    let _ = writeln!(out, "{}", row.join(" "));
}

pub fn format_model(model: &StateSpaceModel) -> String {
    let mut out = String::new();
    let labels: Vec<String> = model.labels.iter().map(|l| l.to_string()).collect();
    let _ = writeln!(out, "[states] {}", labels.join(" "));
    matrix_block(&mut out, "A", &model.a);
    matrix_block(&mut out, "C", &model.c);
    vector_block(&mut out, "x0", &model.x0);
    out
}

pub fn format_realization(era: &EraResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[order] {}", era.order);
    let _ = writeln!(out, "[dt] {}", num(era.dt));
    let _ = writeln!(out, "[residual] {}", num(era.residual));
    let _ = writeln!(out, "[imag_residue] {}", num(era.imag_residue));
    matrix_block(&mut out, "Ad", &era.ad_hat);
    if let Some(a) = &era.a_hat {
        matrix_block(&mut out, "A", a);
    }
    matrix_block(&mut out, "C", &era.c_hat);
    vector_block(&mut out, "x0", &era.x0_hat);
    out
}

pub fn format_report(res: &IdentificationResult) -> String {
    let mut out = String::new();
    if let Some(real) = &res.realization {
        let _ = writeln!(out, "[order] {} (clear gap: {})", real.selection.order, real.selection.clear_gap);
        let sv: Vec<String> = real.singular_values.iter().map(|v| num(*v)).collect();
        let _ = writeln!(out, "[singular_values] {}", sv.join(" "));
    }
    let _ = writeln!(out, "[target]\n{}", res.target);
    let converged = res.runs.iter().filter(|r| r.converged).count();
    let _ = writeln!(out, "[starts] {} converged of {}", converged, res.runs.len());
    let _ = writeln!(out, "[solutions] {}", res.solutions.len());
    let _ = writeln!(out, "rank residual condition multiplicity {}", res.names.join(" "));
    for (k, s) in res.solutions.iter().enumerate() {
        let vals: Vec<String> = s.params.iter().map(|v| num(*v)).collect();
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            k + 1,
            num(s.residual),
            num(s.condition),
            s.multiplicity,
            vals.join(" ")
        );
    }
    let _ = writeln!(out, "[best] {}", res.best + 1);
    let _ = writeln!(out, "[equivalence]\n{}", res.equivalence_note);
    out
}

/// Residual norm per accepted iteration for every start, long format.
pub fn write_histories(path: &Path, res: &IdentificationResult) -> Result<()> {
    let mut out = String::from("start,iteration,residual\n");
    for (k, run) in res.runs.iter().enumerate() {
        for (i, r) in run.history.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", k + 1, i, num(*r));
        }
    }
    fs::write(path, out)?;
    Ok(())
}
