use std::fmt::Write as _;
use std::path::Path;

use cfsl_core::data::{self, estimate_omega, read_dataset, DatasetKind};
use cfsl_core::forward::{char_delta, delta_prime, solve_phi, solve_psi, solve_s, weyl_function};
use cfsl_core::inverse::reconstruct;
use cfsl_core::json::{format_float, to_string_full};
use cfsl_core::spectrum::{eigenvalues, second_spectrum};
use cfsl_core::verify::{self, VerifyOptions};
use cfsl_core::{Error, InverseConfig, Payload, Problem, SolveOptions, SpectralDataset};
use log::info;
use serde_json::{json, Value};

use crate::{Format, Solution};

pub const EXIT_IO: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_POLE: u8 = 4;
pub const EXIT_NOT_CONVERGED: u8 = 5;
pub const EXIT_VERIFY: u8 = 6;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. } | Error::Json(_) | Error::Usage(_) | Error::Domain(_) => EXIT_USAGE,
            Error::Pole { .. } => EXIT_POLE,
            Error::Io(_) => EXIT_IO,
            Error::Numeric(_) | Error::Integration { .. } | Error::Search { .. } | Error::Degenerate { .. } => {
                EXIT_SOLVER
            }
        };
        Failure::new(code, e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read_input(path: &Path, what: &str) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("malformed JSON in {what} {}: {e}", path.display())))
}

fn load_problem(path: &Path) -> Result<Problem, Failure> {
    Ok(Problem::from_json(&read_input(path, "problem")?)?)
}

fn emit(text: &str, output: Option<&Path>) -> Outcome {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::new(EXIT_IO, format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(value: &Value, output: Option<&Path>) -> Outcome {
    emit(&to_string_full(value)?, output)
}

pub fn forward(
    problem: &Path,
    lambda: f64,
    solution: Solution,
    grid_points: usize,
    format: Format,
    output: Option<&Path>,
) -> Outcome {
    let p = load_problem(problem)?;
    if grid_points < 2 {
        return Err(Failure::new(EXIT_USAGE, "grid-points must be at least 2"));
    }
    let opts = SolveOptions { grid_points, ..SolveOptions::default() };
    let traj = match solution {
        Solution::Phi => solve_phi(&p, lambda, &opts)?,
        Solution::Psi => solve_psi(&p, lambda, &opts)?,
        Solution::S => solve_s(&p, lambda, &opts)?,
    };
    match format {
        Format::Csv => emit(&traj.to_csv(), output),
        Format::Json => {
            let name = match solution {
                Solution::Phi => "phi",
                Solution::Psi => "psi",
                Solution::S => "S",
            };
            let value = json!({
                "alpha": p.order.value(),
                "lambda": lambda,
                "solution": name,
                "delta": char_delta(&p, lambda)?,
                "delta_prime": delta_prime(&p, lambda)?,
                "t": traj.t,
                "x": traj.x(),
                "u": traj.u,
                "du": traj.du,
            });
            emit_json(&value, output)
        }
    }
}

pub fn spectrum(problem: &Path, count: usize, second: bool, format: Format, output: Option<&Path>) -> Outcome {
    let p = load_problem(problem)?;
    if count == 0 {
        return Err(Failure::new(EXIT_USAGE, "count must be at least 1"));
    }
    let lambdas = eigenvalues(&p, count)?;
    let xis = if second { Some(second_spectrum(&p, count)?) } else { None };
    info!("{} eigenvalues computed", lambdas.len());
    match format {
        Format::Csv => {
            let mut out = String::from(if second { "n,lambda,xi\n" } else { "n,lambda\n" });
            for (n, l) in lambdas.iter().enumerate() {
                let _ = write!(out, "{n},{}", format_float(*l));
                if let Some(x) = &xis {
                    let _ = write!(out, ",{}", format_float(x[n]));
                }
                out.push('\n');
            }
            emit(&out, output)
        }
        Format::Json => {
            let omega = match estimate_omega(&lambdas, p.order) {
                Ok(est) => json!({
                    "estimate": est.omega,
                    "exact": p.omega(),
                    "residuals": est.residuals,
                }),
                Err(Error::Usage(msg)) => json!({ "estimate": null, "exact": p.omega(), "note": msg }),
                Err(e) => return Err(e.into()),
            };
            let mut value = json!({
                "alpha": p.order.value(),
                "lambda": lambdas,
                "omega": omega,
            });
            if let Some(x) = xis {
                value["xi"] = json!(x);
            }
            emit_json(&value, output)
        }
    }
}

fn parse_lambdas(spec: &str) -> Result<Vec<f64>, Failure> {
    let path = Path::new(spec);
    let text = if path.is_file() {
        std::fs::read_to_string(path)
            .map_err(|e| Failure::new(EXIT_USAGE, format!("cannot read {spec}: {e}")))?
    } else {
        spec.to_string()
    };
    let trimmed = text.trim();
    if trimmed.starts_with('[') {
        return serde_json::from_str(trimmed)
            .map_err(|e| Failure::new(EXIT_USAGE, format!("malformed lambda list: {e}")));
    }
    trimmed
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Failure::new(EXIT_USAGE, format!("not a number in lambda list: {s:?}")))
        })
        .collect()
}

pub fn weyl(problem: &Path, lambdas: &str, output: Option<&Path>) -> Outcome {
    let p = load_problem(problem)?;
    let lambdas = parse_lambdas(lambdas)?;
    if lambdas.is_empty() {
        return Err(Failure::new(EXIT_USAGE, "empty lambda list"));
    }
    let values = lambdas
        .iter()
        .map(|&l| weyl_function(&p, l))
        .collect::<Result<Vec<f64>, Error>>()?;
    let ds = SpectralDataset::new(p.order, Payload::WeylSamples { lambdas, values })?;
    emit_json(&ds.to_json(), output)
}

pub fn invert(dataset: &Path, config: Option<&Path>, history: Option<&Path>, output: Option<&Path>) -> Outcome {
    let ds = read_dataset(dataset).map_err(|e| match e {
        Error::Io(io) => Failure::new(EXIT_USAGE, format!("cannot read dataset {}: {io}", dataset.display())),
        other => other.into(),
    })?;
    let cfg = match config {
        Some(path) => InverseConfig::from_json(&read_input(path, "config")?)?,
        None => InverseConfig::default(),
    };
    let report = reconstruct(&ds, &cfg)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    emit_json(&report.to_json(), output)?;
    if let Some(path) = history {
        emit(&report.history_csv(), Some(path))?;
    }
    if report.converged {
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_NOT_CONVERGED,
            format!("not converged after {} iterations ({:?})", report.iterations, report.stop_reason),
        ))
    }
}

pub fn verify(problem: &Path, rtol: Option<f64>, output: Option<&Path>) -> Outcome {
    let p = load_problem(problem)?;
    let opts = match rtol {
        Some(r) if !(r > 0.0 && r < 1.0) => return Err(Failure::new(EXIT_USAGE, "rtol must lie in (0, 1)")),
        Some(r) => VerifyOptions::with_rtol(r),
        None => VerifyOptions::default(),
    };
    let report = verify::verify(&p, &opts);
    emit(&report.to_table(), output)?;
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report.rows.iter().filter(|r| !r.passed).map(|r| r.name).collect();
        Err(Failure::new(EXIT_VERIFY, format!("identities failed: {}", failed.join(", "))))
    }
}

pub fn generate(problem: &Path, kind: &str, count: usize, format: Format, output: Option<&Path>) -> Outcome {
    let p = load_problem(problem)?;
    let kind = DatasetKind::parse(kind)?;
    let ds = data::generate(&p, kind, count)?;
    match format {
        Format::Json => emit_json(&ds.to_json(), output),
        Format::Csv => emit(&ds.to_csv(), output),
    }
}

pub fn random_problem(seed: u64, alpha: f64, modes: usize, h: f64, big_h: f64, output: Option<&Path>) -> Outcome {
    if modes == 0 {
        return Err(Failure::new(EXIT_USAGE, "modes must be at least 1"));
    }
    let p = Problem::random_smooth(seed, alpha, modes, h, big_h)?;
    emit_json(&p.to_json(), output)
}
