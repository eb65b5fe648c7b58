//! CSV and JSON emission. Floats in CSV carry 17 significant digits; JSON
//! uses shortest round-trip formatting, which is equally exact.

use std::path::{Path, PathBuf};

use mocg::pareto::Front;
use mocg::{SolveReport, Status};
use serde::Serialize;

use crate::error::CliError;

pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

fn status_str(status: Status) -> &'static str {
    match status {
        Status::Converged => "converged",
        Status::MaxIters => "max-iters",
        Status::Error => "error",
    }
}

/// Trajectory header for `n` variables and `m` objectives.
pub fn trajectory_header(n: usize, m: usize) -> Vec<String> {
    let mut h = vec!["k".to_string()];
    h.extend((1..=n).map(|i| format!("x{i}")));
    h.extend((1..=m).map(|i| format!("f{i}")));
    for c in [
        "norm_v",
        "theta",
        "psi_d",
        "beta",
        "t",
        "rho",
        "eta",
        "tau",
        "zoutendijk_partial",
        "restarted",
        "func_evals",
        "jac_evals",
    ] {
        h.push(c.to_string());
    }
    h
}

pub fn trajectory_csv(report: &SolveReport, n: usize, m: usize) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(trajectory_header(n, m))?;
    for r in &report.records {
        let mut row = vec![r.k.to_string()];
        row.extend(r.x.iter().copied().map(float));
        row.extend(r.f.iter().copied().map(float));
        row.extend([
            float(r.norm_v),
            float(r.theta),
            float(r.psi_d),
            opt(r.beta),
            opt(r.t),
            opt(r.rho),
            opt(r.eta),
            float(r.tau),
            float(r.zoutendijk_partial),
            u8::from(r.restarted).to_string(),
            (r.func_evals + r.linesearch_func_evals).to_string(),
            (r.jac_evals + r.linesearch_jac_evals).to_string(),
        ]);
        w.write_record(row)?;
    }
    finish(w)
}

pub fn front_header(n: usize, m: usize) -> Vec<String> {
    let mut h: Vec<String> = ["start", "status", "dominated"].map(String::from).to_vec();
    h.extend((1..=m).map(|i| format!("f{i}")));
    h.extend((1..=n).map(|i| format!("x{i}")));
    h
}

/// One row per start. `dominated` is empty for runs that did not converge.
pub fn front_csv(front: &Front, n: usize, m: usize) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(front_header(n, m))?;
    for run in &front.runs {
        let dominated = if run.status == Status::Converged {
            u8::from(!front.nondominated.contains(&run.start)).to_string()
        } else {
            String::new()
        };
        let mut row = vec![run.start.to_string(), status_str(run.status).to_string(), dominated];
        if run.final_objectives.len() == m {
            row.extend(run.final_objectives.iter().copied().map(float));
        } else {
            row.extend(std::iter::repeat_n(String::new(), m));
        }
        row.extend(run.final_x.iter().copied().map(float));
        w.write_record(row)?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>, CliError> {
    w.into_inner().map_err(|e| CliError::Io {
        path: "csv buffer".into(),
        source: e.into_error(),
    })
}

pub fn json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes `bytes` to `dir/name`, creating `dir` if needed.
pub fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let io = |path: &Path, source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        let s = float(0.1);
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
        for v in [1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            assert_eq!(float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn headers_are_stable() {
        assert_eq!(
            trajectory_header(2, 2).join(","),
            "k,x1,x2,f1,f2,norm_v,theta,psi_d,beta,t,rho,eta,tau,zoutendijk_partial,restarted,func_evals,jac_evals"
        );
        assert_eq!(front_header(1, 2).join(","), "start,status,dominated,f1,f2,x1");
    }
}
