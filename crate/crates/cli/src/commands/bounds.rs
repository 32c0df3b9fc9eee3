use std::io::Write;

use gap_core::moments::bounds::{crossover_solve, spike_family, uniform_family, BoundParams, BOUND_TAGS};
use gap_core::{BoundValue, Error};
use serde::Serialize;

use super::{aligned, emit};
use crate::bundle::write_atomic;
use crate::cli::{BoundsArgs, Family, Format};
use crate::error::{exit, CliError, CliResult};

const PARAMS: [&str; 11] = ["d_a", "dim", "d_r", "eps", "delta", "rho_norm", "purity", "eta", "b_norm", "a_norm", "r"];

#[derive(Debug, Serialize)]
struct BoundRow {
    bound: String,
    params: BoundParams,
    value: BoundValue,
}

fn lists(a: &BoundsArgs) -> [&Vec<f64>; 11] {
    [&a.d_a, &a.dim, &a.d_r, &a.eps, &a.delta, &a.rho_norm, &a.purity, &a.eta, &a.b_norm, &a.a_norm, &a.r]
}

fn params_from(values: &[Option<f64>; 11]) -> BoundParams {
    BoundParams {
        d_a: values[0],
        dim: values[1],
        d_r: values[2],
        eps: values[3],
        delta: values[4],
        rho_norm: values[5],
        purity: values[6],
        eta: values[7],
        b_norm: values[8],
        a_norm: values[9],
        r: values[10],
    }
}

/// Cartesian product of the given lists, first parameter varying slowest.
fn grid(a: &BoundsArgs) -> Vec<[Option<f64>; 11]> {
    let mut out = vec![[None; 11]];
    for (i, list) in lists(a).iter().enumerate() {
        if list.is_empty() {
            continue;
        }
        out = out
            .into_iter()
            .flat_map(|base| {
                list.iter().map(move |&v| {
                    let mut p = base;
                    p[i] = Some(v);
                    p
                })
            })
            .collect();
    }
    out
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn run(a: &BoundsArgs, out: &mut dyn Write) -> CliResult<i32> {
    if a.crossover {
        return crossover(a, out);
    }
    for t in &a.bound {
        if !BOUND_TAGS.contains(&t.as_str()) {
            return Err(CliError::Usage(format!("unknown bound `{t}`; expected one of {}", BOUND_TAGS.join(", "))));
        }
    }
    let explicit = !a.bound.is_empty();
    let tags: Vec<&str> = if explicit { BOUND_TAGS.iter().copied().filter(|t| a.bound.iter().any(|b| b == t)).collect() } else { BOUND_TAGS.to_vec() };
    let mut rows = Vec::new();
    for tag in tags {
        for values in grid(a) {
            let params = params_from(&values);
            let spec = match params.build(tag) {
                Ok(s) => s,
                Err(Error::MissingParameter(..)) if !explicit => continue,
                Err(e @ Error::MissingParameter(..)) => return Err(CliError::Usage(e.to_string())),
                Err(e) => return Err(e.into()),
            };
            let value = spec.evaluate()?;
            rows.push(BoundRow { bound: tag.to_string(), params, value });
        }
    }
    if rows.is_empty() {
        return Err(CliError::Usage("no bound can be evaluated from the given parameters".into()));
    }

    let mut header: Vec<String> = vec!["bound".into(), "kind".into()];
    header.extend(PARAMS.iter().map(|s| s.to_string()));
    header.extend(["log10".into(), "value".into(), "clamped".into(), "vacuous".into(), "applicable".into()]);
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let p = &r.params;
            let mut c = vec![r.bound.clone(), format!("{:?}", r.value.kind).to_lowercase()];
            for v in [p.d_a, p.dim, p.d_r, p.eps, p.delta, p.rho_norm, p.purity, p.eta, p.b_norm, p.a_norm, p.r] {
                c.push(fmt_opt(v));
            }
            c.push(r.value.log10().to_string());
            c.push(r.value.raw().to_string());
            c.push(r.value.clamped.to_string());
            c.push(r.value.is_vacuous().to_string());
            c.push(r.value.applicable.to_string());
            c
        })
        .collect();
    let csv_bytes = to_csv(&header, &cells)?;
    if let Some(path) = &a.out {
        write_atomic(path, &csv_bytes)?;
    }
    match a.format {
        Some(Format::Csv) => emit(out, &csv_bytes)?,
        Some(Format::Summary) => {
            let mut s = serde_json::to_vec_pretty(&rows)?;
            s.push(b'\n');
            emit(out, &s)?
        }
        None => {
            // Drop parameter columns that are empty in every row.
            let keep: Vec<usize> = (0..header.len()).filter(|&i| cells.iter().any(|r| !r[i].is_empty())).collect();
            let h: Vec<String> = keep.iter().map(|&i| header[i].clone()).collect();
            let rs: Vec<Vec<String>> = cells.iter().map(|r| keep.iter().map(|&i| r[i].clone()).collect()).collect();
            emit(out, aligned(&h, &rs).as_bytes())?
        }
    }
    Ok(exit::OK)
}

fn to_csv(header: &[String], rows: &[Vec<String>]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| CliError::io("<csv buffer>", e.into_error()))
}

fn crossover(a: &BoundsArgs, out: &mut dyn Write) -> CliResult<i32> {
    let single = |v: &Vec<f64>, name: &str, default: f64| -> CliResult<f64> {
        match v.as_slice() {
            [] => Ok(default),
            [x] => Ok(*x),
            _ => Err(CliError::Usage(format!("--{name} takes one value with --crossover"))),
        }
    };
    let d_a = single(&a.d_a, "d-a", 1000.0)?;
    let eps = single(&a.eps, "eps", 0.01)?;
    let (name, result) = match a.family {
        Family::Spike => ("spike", crossover_solve(d_a, eps, spike_family, a.max_log10)?),
        Family::Uniform => ("uniform", crossover_solve(d_a, eps, uniform_family, a.max_log10)?),
    };
    let header: Vec<String> = ["family", "d_a", "eps", "d_low", "d_high", "log10_low", "log10_high"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = result
        .intervals
        .iter()
        .map(|(lo, hi)| {
            vec![name.into(), d_a.to_string(), eps.to_string(), lo.to_string(), hi.to_string(), lo.log10().to_string(), hi.log10().to_string()]
        })
        .collect();
    let csv_bytes = to_csv(&header, &rows)?;
    if let Some(path) = &a.out {
        write_atomic(path, &csv_bytes)?;
    }
    match a.format {
        Some(Format::Csv) => emit(out, &csv_bytes)?,
        Some(Format::Summary) => {
            let v = serde_json::json!({ "family": name, "d_a": d_a, "eps": eps, "max_log10": a.max_log10, "crossover": result });
            let mut s = serde_json::to_vec_pretty(&v)?;
            s.push(b'\n');
            emit(out, &s)?
        }
        None => {
            if rows.is_empty() {
                emit(out, format!("no crossover for {name} family with d_a={d_a}, eps={eps} up to D=1e{}\n", a.max_log10).as_bytes())?;
            } else {
                let pretty: Vec<Vec<String>> = result
                    .intervals
                    .iter()
                    .map(|(lo, hi)| vec![name.into(), d_a.to_string(), eps.to_string(), format!("{lo:.6e}"), format!("{hi:.6e}")])
                    .collect();
                emit(out, aligned(&header[..5], &pretty).as_bytes())?;
            }
        }
    }
    Ok(exit::OK)
}
