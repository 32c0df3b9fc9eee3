use std::io::Write;

use gap_core::experiments::{default_workers, Engine};
use gap_core::linalg::{trace_norm_hermitian, HilbertDim};
use gap_core::measures::{AtomBasis, Measure, MeasureSpec, RhoSpec};
use gap_core::rng::purpose;
use gap_core::{CMatrix, Complex64};
use serde::Serialize;

use super::emit;
use crate::bundle::write_atomic;
use crate::cli::{Format, SampleArgs};
use crate::config::{hash_json, load, SampleConfig};
use crate::error::{exit, CliError, CliResult};

fn measure_from_name(name: &str, kappa: Option<f64>) -> CliResult<MeasureSpec> {
    Ok(match name {
        "gaussian" => MeasureSpec::Gaussian {},
        "gaussian_adjusted" => MeasureSpec::GaussianAdjusted {},
        "gap" => MeasureSpec::Gap {},
        "uniform_sphere" => MeasureSpec::UniformSphere {},
        "delta_mixture" => MeasureSpec::DeltaMixture { atoms: AtomBasis::Eigen },
        "von_mises_fisher" => MeasureSpec::VonMisesFisher {
            kappa: kappa.ok_or_else(|| CliError::Usage("von_mises_fisher needs --kappa".into()))?,
        },
        other => return Err(CliError::Usage(format!("unknown measure `{other}`"))),
    })
}

fn resolve(a: &SampleArgs) -> CliResult<SampleConfig> {
    let mut cfg = match &a.config {
        Some(path) => {
            if a.measure.is_some() || a.dim.is_some() || a.kappa.is_some() {
                return Err(CliError::Usage("--measure/--dim/--kappa cannot be combined with --config".into()));
            }
            load::<SampleConfig>(path)?
        }
        None => {
            let name = a.measure.as_deref().ok_or_else(|| CliError::Usage("give --config or --measure and --dim".into()))?;
            let dim = a.dim.ok_or_else(|| CliError::Usage("--dim is required with --measure".into()))?;
            SampleConfig {
                seed: None,
                workers: None,
                d_a: dim,
                d_b: 1,
                rho: RhoSpec::uniform(),
                measure: measure_from_name(name, a.kappa)?,
                samples: a.samples.ok_or_else(|| CliError::Usage("--samples is required with --measure".into()))?,
            }
        }
    };
    if let Some(n) = a.samples {
        cfg.samples = n;
    }
    if let Some(s) = a.seed {
        cfg.seed = Some(s);
    }
    Ok(cfg)
}

/// Hash of a sample config without seed and worker count.
pub fn sample_config_hash(cfg: &SampleConfig) -> String {
    let mut v = serde_json::to_value(cfg).expect("configs serialise");
    if let Some(obj) = v.as_object_mut() {
        obj.remove("seed");
        obj.remove("workers");
    }
    hash_json(&v)
}

#[derive(Debug, Serialize)]
struct MatrixJson {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl MatrixJson {
    fn of(m: &CMatrix) -> Self {
        let rows = |f: fn(&Complex64) -> f64| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect();
        Self { re: rows(|z| z.re), im: rows(|z| z.im) }
    }
}

#[derive(Debug, Serialize)]
struct SampleSummary {
    config: SampleConfig,
    config_hash: String,
    seed: u64,
    version: &'static str,
    samples: u64,
    empirical: MatrixJson,
    exact: MatrixJson,
    trace_distance: f64,
    max_off_diagonal: f64,
}

pub fn run(a: &SampleArgs, out: &mut dyn Write) -> CliResult<i32> {
    let cfg = resolve(a)?;
    let seed = cfg.seed.unwrap_or(0);
    let workers = a.workers.or(cfg.workers).unwrap_or_else(default_workers);
    let hash = sample_config_hash(&cfg);
    let engine = Engine::new(seed, workers)?;
    let shape = HilbertDim::bipartite(cfg.d_a, cfg.d_b)?;
    let rho = cfg.rho.build(shape, &mut engine.setup_stream(purpose::SETUP))?;
    let measure = Measure::build(&cfg.measure, &rho, &mut engine.setup_stream(purpose::BASIS))?;
    let d = measure.dim();
    let draws = engine.map_samples(purpose::SAMPLES, cfg.samples, |rng| measure.draw(rng));

    let bytes = match a.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["config_hash".to_string(), "seed".into(), "sample".into()];
            let (atoms, real) = match cfg.measure {
                MeasureSpec::DeltaMixture { .. } => (true, false),
                MeasureSpec::VonMisesFisher { .. } => (false, true),
                _ => (false, false),
            };
            if atoms {
                header.push("atom".into());
            } else if real {
                header.extend((0..d).map(|k| format!("x_{k}")));
            } else {
                for k in 0..d {
                    header.push(format!("re_{k}"));
                    header.push(format!("im_{k}"));
                }
            }
            w.write_record(&header)?;
            for (i, draw) in draws.iter().enumerate() {
                let mut rec = vec![hash.clone(), seed.to_string(), i.to_string()];
                if atoms {
                    rec.push(draw.atom.expect("delta mixtures report atoms").to_string());
                } else if real {
                    rec.extend(draw.vector.iter().map(|z| z.re.to_string()));
                } else {
                    for z in draw.vector.iter() {
                        rec.push(z.re.to_string());
                        rec.push(z.im.to_string());
                    }
                }
                w.write_record(&rec)?;
            }
            w.into_inner().map_err(|e| CliError::io("<csv buffer>", e.into_error()))?
        }
        Format::Summary => {
            let mut acc = CMatrix::zeros(d, d);
            for draw in &draws {
                acc += &draw.vector * draw.vector.adjoint();
            }
            if !draws.is_empty() {
                acc /= Complex64::new(draws.len() as f64, 0.0);
            }
            let exact = measure.density_matrix();
            let diff = &acc - &exact;
            let trace_distance = trace_norm_hermitian(&((&diff + diff.adjoint()) * Complex64::new(0.5, 0.0)));
            let max_off_diagonal = (0..d)
                .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| acc[(i, j)].norm())
                .fold(0.0, f64::max);
            let summary = SampleSummary {
                config: cfg.clone(),
                config_hash: hash.clone(),
                seed,
                version: crate::bundle::VERSION,
                samples: cfg.samples,
                empirical: MatrixJson::of(&acc),
                exact: MatrixJson::of(&exact),
                trace_distance,
                max_off_diagonal,
            };
            if a.out.is_some() {
                let mut text = String::from("empirical density matrix (re + i im):\n");
                for i in 0..d {
                    let row: Vec<String> = (0..d).map(|j| format!("{:+.4}{:+.4}i", acc[(i, j)].re, acc[(i, j)].im)).collect();
                    text.push_str(&row.join("  "));
                    text.push('\n');
                }
                text.push_str(&format!("trace distance to exact: {trace_distance:.4e}, max |off-diagonal|: {max_off_diagonal:.4e}\n"));
                emit(out, text.as_bytes())?;
            }
            let mut v = serde_json::to_vec_pretty(&summary)?;
            v.push(b'\n');
            v
        }
    };
    match &a.out {
        Some(path) => write_atomic(path, &bytes)?,
        None => emit(out, &bytes)?,
    }
    Ok(exit::OK)
}
