//! The four spectral data sets, their JSON form and the first-moment
//! estimate from eigenvalue asymptotics.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::conformable::{Coordinate, Order, SampledFunction};
use crate::error::{Error, Result};
use crate::forward::weyl_function;
use crate::json;
use crate::problem::{prefix_field, Problem};
use crate::spectrum::{eigenvalues, norming_constants, second_spectrum};

/// Samples of the frozen potential tail on `[pi/2, pi]` written by [`generate`].
pub const TAIL_NODES: usize = 257;

/// Negative spectral parameters added to generated Weyl samples.
pub const WEYL_NEGATIVE_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DatasetKind {
    WeylSamples,
    TwoSpectra,
    SpectrumWithNorms,
    MixedHalf,
}

impl DatasetKind {
    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::WeylSamples => "WeylSamples",
            DatasetKind::TwoSpectra => "TwoSpectra",
            DatasetKind::SpectrumWithNorms => "SpectrumWithNorms",
            DatasetKind::MixedHalf => "MixedHalf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "WeylSamples" => DatasetKind::WeylSamples,
            "TwoSpectra" => DatasetKind::TwoSpectra,
            "SpectrumWithNorms" => DatasetKind::SpectrumWithNorms,
            "MixedHalf" => DatasetKind::MixedHalf,
            other => return Err(Error::parse("kind", format!("unknown dataset kind `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// `M(lambda_j)` at points off the spectrum.
    WeylSamples { lambdas: Vec<f64>, values: Vec<f64> },
    /// Robin spectrum and the spectrum with `y(0) = 0`.
    TwoSpectra { lambdas: Vec<f64>, xis: Vec<f64> },
    /// Eigenvalues with norming constants.
    SpectrumWithNorms { lambdas: Vec<f64>, norms: Vec<f64> },
    /// One spectrum, the known `H`, and `q` on `[pi/2, pi]` as uniform x-samples.
    MixedHalf {
        lambdas: Vec<f64>,
        big_h: f64,
        tail: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDataset {
    pub order: Order,
    pub payload: Payload,
}

fn strictly_increasing(xs: &[f64], field: &str) -> Result<()> {
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::parse(field, "spectrum not increasing"));
    }
    Ok(())
}

impl SpectralDataset {
    pub fn new(order: Order, payload: Payload) -> Result<Self> {
        let ds = SpectralDataset { order, payload };
        ds.validate()?;
        Ok(ds)
    }

    pub fn kind(&self) -> DatasetKind {
        match self.payload {
            Payload::WeylSamples { .. } => DatasetKind::WeylSamples,
            Payload::TwoSpectra { .. } => DatasetKind::TwoSpectra,
            Payload::SpectrumWithNorms { .. } => DatasetKind::SpectrumWithNorms,
            Payload::MixedHalf { .. } => DatasetKind::MixedHalf,
        }
    }

    /// Number of scalar data entries.
    pub fn len(&self) -> usize {
        match &self.payload {
            Payload::WeylSamples { lambdas, .. } => lambdas.len(),
            Payload::TwoSpectra { lambdas, xis } => lambdas.len() + xis.len(),
            Payload::SpectrumWithNorms { lambdas, norms } => lambdas.len() + norms.len(),
            Payload::MixedHalf { lambdas, .. } => lambdas.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Robin eigenvalues carried by the dataset, if any.
    pub fn eigenvalues(&self) -> Option<&[f64]> {
        match &self.payload {
            Payload::WeylSamples { .. } => None,
            Payload::TwoSpectra { lambdas, .. }
            | Payload::SpectrumWithNorms { lambdas, .. }
            | Payload::MixedHalf { lambdas, .. } => Some(lambdas),
        }
    }

    /// The frozen tail as an x-coordinate function on `[pi/2, pi]`.
    pub fn tail_function(&self) -> Option<Result<SampledFunction>> {
        match &self.payload {
            Payload::MixedHalf { tail, .. } => Some(SampledFunction::grid(
                PI / 2.0,
                PI,
                Coordinate::X,
                tail.clone(),
            )),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.payload {
            Payload::WeylSamples { lambdas, values } => {
                if lambdas.is_empty() || lambdas.len() != values.len() {
                    return Err(Error::parse(
                        "payload.M",
                        "need one value per sample point",
                    ));
                }
                if lambdas.iter().chain(values).any(|v| !v.is_finite()) {
                    return Err(Error::parse("payload", "non-finite Weyl sample"));
                }
                strictly_increasing(lambdas, "payload.lambda")?;
            }
            Payload::TwoSpectra { lambdas, xis } => {
                if lambdas.is_empty() || xis.is_empty() {
                    return Err(Error::parse("payload", "empty spectrum"));
                }
                strictly_increasing(lambdas, "payload.lambda")?;
                strictly_increasing(xis, "payload.xi")?;
            }
            Payload::SpectrumWithNorms { lambdas, norms } => {
                if lambdas.is_empty() || lambdas.len() != norms.len() {
                    return Err(Error::parse(
                        "payload.norming",
                        "need one norming constant per eigenvalue",
                    ));
                }
                strictly_increasing(lambdas, "payload.lambda")?;
                if norms.iter().any(|a| !(*a > 0.0)) {
                    return Err(Error::parse(
                        "payload.norming",
                        "norming constants must be positive",
                    ));
                }
            }
            Payload::MixedHalf {
                lambdas,
                big_h,
                tail,
            } => {
                if lambdas.is_empty() {
                    return Err(Error::parse("payload.lambda", "empty spectrum"));
                }
                strictly_increasing(lambdas, "payload.lambda")?;
                if !big_h.is_finite() {
                    return Err(Error::parse("payload.H", "expected a finite number"));
                }
                if tail.len() < 5 {
                    return Err(Error::parse(
                        "payload.tail",
                        "need at least 5 samples of the tail on [pi/2, pi]",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let payload = match &self.payload {
            Payload::WeylSamples { lambdas, values } => json!({"lambda": lambdas, "M": values}),
            Payload::TwoSpectra { lambdas, xis } => json!({"lambda": lambdas, "xi": xis}),
            Payload::SpectrumWithNorms { lambdas, norms } => {
                json!({"lambda": lambdas, "norming": norms})
            }
            Payload::MixedHalf {
                lambdas,
                big_h,
                tail,
            } => json!({"lambda": lambdas, "H": big_h, "tail": tail}),
        };
        json!({"kind": self.kind().name(), "alpha": self.order.value(), "payload": payload})
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = json::object(value, "dataset")?;
        let kind = DatasetKind::parse(json::get_str(obj, "kind")?)?;
        let alpha = json::get_f64(obj, "alpha")?;
        let order = Order::new(alpha).map_err(|_| Error::parse("alpha", "alpha out of (0,1]"))?;
        let pl = json::object(json::get(obj, "payload")?, "payload")?;
        let list = |name: &str| json::get_f64_list(pl, name).map_err(|e| prefix_field(e, "payload."));
        let payload = match kind {
            DatasetKind::WeylSamples => Payload::WeylSamples {
                lambdas: list("lambda")?,
                values: list("M")?,
            },
            DatasetKind::TwoSpectra => Payload::TwoSpectra {
                lambdas: list("lambda")?,
                xis: list("xi")?,
            },
            DatasetKind::SpectrumWithNorms => Payload::SpectrumWithNorms {
                lambdas: list("lambda")?,
                norms: list("norming")?,
            },
            DatasetKind::MixedHalf => Payload::MixedHalf {
                lambdas: list("lambda")?,
                big_h: json::get_f64(pl, "H").map_err(|e| prefix_field(e, "payload."))?,
                tail: list("tail")?,
            },
        };
        SpectralDataset::new(order, payload)
    }

    /// Table for plotting: one row per index with 17-digit floats.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut rows = |header: &str, cols: &[&[f64]]| {
            out.push_str(header);
            out.push('\n');
            let n = cols.iter().map(|c| c.len()).max().unwrap_or(0);
            for i in 0..n {
                let _ = write!(out, "{i}");
                for c in cols {
                    match c.get(i) {
                        Some(v) => {
                            let _ = write!(out, ",{v:.16e}");
                        }
                        None => out.push(','),
                    }
                }
                out.push('\n');
            }
        };
        match &self.payload {
            Payload::WeylSamples { lambdas, values } => rows("j,lambda,M", &[lambdas, values]),
            Payload::TwoSpectra { lambdas, xis } => rows("n,lambda,xi", &[lambdas, xis]),
            Payload::SpectrumWithNorms { lambdas, norms } => {
                rows("n,lambda,norming", &[lambdas, norms])
            }
            Payload::MixedHalf { lambdas, .. } => rows("n,lambda", &[lambdas]),
        }
        out
    }
}

/// Builds a dataset of the requested kind from a known problem.
///
/// `count` is the number of eigenvalues per spectrum, or the total number of
/// Weyl samples (spectral-gap midpoints plus up to ten negative points).
pub fn generate(p: &Problem, kind: DatasetKind, count: usize) -> Result<SpectralDataset> {
    if count == 0 {
        return Err(Error::Usage("dataset count must be at least 1".into()));
    }
    let payload = match kind {
        DatasetKind::TwoSpectra => Payload::TwoSpectra {
            lambdas: eigenvalues(p, count)?,
            xis: second_spectrum(p, count)?,
        },
        DatasetKind::SpectrumWithNorms => {
            let lambdas = eigenvalues(p, count)?;
            let norms = norming_constants(p, &lambdas)?
                .into_iter()
                .map(|r| r.norming)
                .collect();
            Payload::SpectrumWithNorms { lambdas, norms }
        }
        DatasetKind::WeylSamples => {
            let lambdas = weyl_points(p, count)?;
            let values = lambdas
                .iter()
                .map(|&l| weyl_function(p, l))
                .collect::<Result<_>>()?;
            Payload::WeylSamples { lambdas, values }
        }
        DatasetKind::MixedHalf => {
            let n = TAIL_NODES;
            let tail = (0..n)
                .map(|i| {
                    let x = if i + 1 == n {
                        PI
                    } else {
                        PI / 2.0 + (PI / 2.0) * i as f64 / (n - 1) as f64
                    };
                    p.q.eval_x(x, p.order)
                })
                .collect();
            Payload::MixedHalf {
                lambdas: eigenvalues(p, count)?,
                big_h: p.big_h,
                tail,
            }
        }
    };
    SpectralDataset::new(p.order, payload)
}

/// Sample points for the Weyl function: midpoints of consecutive eigenvalues
/// and points below the spectrum, in increasing order.
pub fn weyl_points(p: &Problem, count: usize) -> Result<Vec<f64>> {
    let negatives = WEYL_NEGATIVE_SAMPLES.min(count);
    let mids = count - negatives;
    let eigs = eigenvalues(p, (mids + 1).max(2))?;
    let step = 0.5 * (eigs[1] - eigs[0]);
    let floor = eigs[0].min(0.0);
    let mut pts: Vec<f64> = (0..negatives).rev().map(|j| floor - (j + 1) as f64 * step).collect();
    pts.extend(eigs.windows(2).take(mids).map(|w| 0.5 * (w[0] + w[1])));
    Ok(pts)
}

/// Estimate of `omega = h + H + (1/2) int q d_alpha t` from eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaEstimate {
    pub omega: f64,
    /// `n pi (sqrt(lambda_n) - n alpha pi^(1-alpha)) - omega` for `n >= 1`.
    pub residuals: Vec<f64>,
}

/// Median of `n pi (sqrt(lambda_n) - n alpha pi^(1-alpha))` over the upper
/// half of the indices.
pub fn estimate_omega(eigs: &[f64], order: Order) -> Result<OmegaEstimate> {
    if eigs.len() < 10 {
        return Err(Error::Usage(format!(
            "insufficient data: omega needs at least 10 eigenvalues, got {}",
            eigs.len()
        )));
    }
    let a = order.value();
    let spacing = a * PI.powf(1.0 - a);
    let moments: Vec<f64> = eigs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, &l)| {
            let n = n as f64;
            n * PI * (l.max(0.0).sqrt() - n * spacing)
        })
        .collect();
    let lo = eigs.len() / 2;
    let mut upper: Vec<f64> = eigs[lo..]
        .iter()
        .enumerate()
        .map(|(i, _)| moments[lo + i - 1])
        .collect();
    if eigs[lo..].iter().any(|l| *l < 0.0) {
        return Err(Error::Numeric("negative eigenvalue in the asymptotic range".into()));
    }
    upper.sort_by(f64::total_cmp);
    let k = upper.len();
    let omega = if k % 2 == 1 {
        upper[k / 2]
    } else {
        0.5 * (upper[k / 2 - 1] + upper[k / 2])
    };
    Ok(OmegaEstimate {
        omega,
        residuals: moments.iter().map(|m| m - omega).collect(),
    })
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<SpectralDataset> {
    let text = std::fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::parse("dataset", format!("malformed JSON: {e}")))?;
    SpectralDataset::from_json(&value)
}

pub fn write_dataset(dataset: &SpectralDataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, json::to_string_full(&dataset.to_json())?)?;
    Ok(())
}
