//! CSV formats shared by the command-line tools.
//!
//! Paths: `path_id,theta[,theta2],n,T_n,W_n,X_n`, one row per claim, and one
//! row `path_id,theta[,theta2],0,,,` for a path without claims.
//! Densities: `path_id,log_density,log_conditional,log_xi`.
//! Ruin: `u,psi,method,error_bound`.
//! Reports: `check_name,estimate,std_error,target,passed,n_paths,seed`.
//!
//! Numbers are written like C's `%.12g`.

use std::io::{Read, Write};

use crate::error::{CmrpError, Result};
use crate::model::Theta;
use crate::ruin::RuinResult;
use crate::simulate::Path;
use crate::verify::VerifyReport;

/// Format `x` as `%.12g` does.
pub fn fmt_g(x: f64) -> String {
    const PREC: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{:.*e}", (PREC - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..PREC).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PREC - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_err(e: csv::Error) -> CmrpError {
    CmrpError::Io(e.to_string())
}

fn theta_cells(theta: &Theta) -> Vec<String> {
    theta.as_slice().iter().map(|&v| fmt_g(v)).collect()
}

pub fn write_paths<W: Write>(out: W, paths: &[Path]) -> Result<()> {
    let dim = paths.first().map_or(1, |p| p.theta.dim());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["path_id", "theta"];
    if dim == 2 {
        header.push("theta2");
    }
    header.extend(["n", "T_n", "W_n", "X_n"]);
    w.write_record(&header).map_err(csv_err)?;
    for (id, p) in paths.iter().enumerate() {
        let mut lead = vec![id.to_string()];
        lead.extend(theta_cells(&p.theta));
        if p.n_jumps() == 0 {
            let mut row = lead.clone();
            row.extend(["0".to_string(), String::new(), String::new(), String::new()]);
            w.write_record(&row).map_err(csv_err)?;
        }
        for k in 0..p.n_jumps() {
            let mut row = lead.clone();
            row.extend([
                (k + 1).to_string(),
                fmt_g(p.arrivals[k]),
                fmt_g(p.interarrivals[k]),
                fmt_g(p.claims[k]),
            ]);
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_f64(s: &str, line: u64, col: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| {
        CmrpError::Io(format!(
            "paths csv line {line}: column {col}: bad number `{s}`"
        ))
    })
}

/// Read paths written by [`write_paths`]. Arrival times are taken from the
/// `T_n` column; the horizon of each path is set to `horizon`, which must
/// not precede its last arrival.
pub fn read_paths<R: Read>(input: R, horizon: f64) -> Result<Vec<(usize, Path)>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let dim = match headers.iter().collect::<Vec<_>>().as_slice() {
        ["path_id", "theta", "n", "T_n", "W_n", "X_n"] => 1,
        ["path_id", "theta", "theta2", "n", "T_n", "W_n", "X_n"] => 2,
        other => {
            return Err(CmrpError::Io(format!(
                "unexpected paths csv header {other:?}"
            )));
        }
    };
    let mut out: Vec<(usize, Theta, Vec<f64>, Vec<f64>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let id: usize = rec[0].trim().parse().map_err(|_| {
            CmrpError::Io(format!("paths csv line {line}: bad path_id `{}`", &rec[0]))
        })?;
        let th: Vec<f64> = (0..dim)
            .map(|k| parse_f64(&rec[1 + k], line, "theta"))
            .collect::<Result<_>>()?;
        let theta = Theta::from_slice(&th)?;
        let n: usize = rec[1 + dim].trim().parse().map_err(|_| {
            CmrpError::Io(format!("paths csv line {line}: bad n `{}`", &rec[1 + dim]))
        })?;
        if out.last().is_none_or(|p| p.0 != id) {
            out.push((id, theta, Vec::new(), Vec::new()));
        }
        if n == 0 {
            continue;
        }
        let entry = out.last_mut().expect("pushed above");
        if entry.2.len() + 1 != n {
            return Err(CmrpError::Io(format!(
                "paths csv line {line}: jump index {n} out of sequence for path {id}"
            )));
        }
        entry.2.push(parse_f64(&rec[2 + dim], line, "T_n")?);
        entry.3.push(parse_f64(&rec[4 + dim], line, "X_n")?);
    }
    out.into_iter()
        .map(|(id, theta, arrivals, claims)| {
            let h = arrivals.last().copied().unwrap_or(0.0).max(horizon);
            Ok((id, Path::from_arrivals(theta, arrivals, claims, h)?))
        })
        .collect()
}

pub struct DensityRow {
    pub path_id: usize,
    pub log_density: f64,
    pub log_conditional: f64,
    pub log_xi: f64,
}

pub fn write_densities<W: Write>(out: W, rows: &[DensityRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["path_id", "log_density", "log_conditional", "log_xi"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.path_id.to_string(),
            fmt_g(r.log_density),
            fmt_g(r.log_conditional),
            fmt_g(r.log_xi),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ruin<W: Write>(out: W, rows: &[RuinResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["u", "psi", "method", "error_bound"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            fmt_g(r.u),
            fmt_g(r.psi),
            r.method.to_string(),
            fmt_g(r.error_bound),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_reports<W: Write>(out: W, rows: &[VerifyReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "check_name",
        "estimate",
        "std_error",
        "target",
        "passed",
        "n_paths",
        "seed",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.check_name.clone(),
            fmt_g(r.estimate),
            fmt_g(r.std_error),
            fmt_g(r.target),
            r.passed.to_string(),
            r.n_paths.to_string(),
            r.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
