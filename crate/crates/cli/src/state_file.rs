//! JSON state files.
//!
//! ```json
//! {"format_version": 1, "kind": "dense", "n": 1, "amplitudes": [[1, 0], [0, 0]]}
//! {"format_version": 1, "kind": "mps", "n": 2,
//!  "tensors": [{"left": 1, "right": 1, "data": [[1, 0], [0, 0]]}, ...]}
//! {"format_version": 1, "kind": "mixture", "n": 1,
//!  "components": [{"weight": 0.5, "amplitudes": [[1, 0], [0, 0]]}, ...]}
//! ```
//!
//! MPS site data is row-major over `(left, physical, right)`. Squared norms
//! more than `1e-6` from 1 are rejected; deviations above `1e-9` are
//! renormalized with a warning.

use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use qcert::mps::DEFAULT_CHI_MAX;
use qcert::{DenseOracle, LabState, MpsOracle, MpsState, MpsTensor, StateVector, TargetOracle};

use crate::error::{CliError, CliResult};

pub const FORMAT_VERSION: u32 = 1;
const REJECT_TOL: f64 = 1e-6;
const WARN_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub format_version: u32,
    pub kind: String,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensors: Option<Vec<TensorFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<ComponentFile>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorFile {
    pub left: usize,
    pub right: usize,
    pub data: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentFile {
    pub weight: f64,
    pub amplitudes: Vec<[f64; 2]>,
}

fn to_pairs(a: &[C64]) -> Vec<[f64; 2]> {
    a.iter().map(|z| [z.re, z.im]).collect()
}

fn from_pairs(a: &[[f64; 2]]) -> Vec<C64> {
    a.iter().map(|p| C64::new(p[0], p[1])).collect()
}

impl StateFile {
    pub fn dense(s: &StateVector) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            kind: "dense".into(),
            n: s.n_qubits(),
            amplitudes: Some(to_pairs(s.amplitudes())),
            tensors: None,
            components: None,
        }
    }

    pub fn mps(s: &MpsState) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            kind: "mps".into(),
            n: s.n_qubits(),
            amplitudes: None,
            tensors: Some(
                s.tensors()
                    .iter()
                    .map(|t| TensorFile {
                        left: t.left(),
                        right: t.right(),
                        data: to_pairs(t.data()),
                    })
                    .collect(),
            ),
            components: None,
        }
    }

    pub fn mixture(components: &[(f64, StateVector)]) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            kind: "mixture".into(),
            n: components.first().map_or(0, |c| c.1.n_qubits()),
            amplitudes: None,
            tensors: None,
            components: Some(
                components
                    .iter()
                    .map(|(w, s)| ComponentFile {
                        weight: *w,
                        amplitudes: to_pairs(s.amplitudes()),
                    })
                    .collect(),
            ),
        }
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string(self).expect("state files always serialize");
        std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// A validated state loaded from disk.
#[derive(Clone, Debug)]
pub enum LoadedState {
    Dense(StateVector),
    Mps(MpsState),
    Mixture(Vec<(f64, StateVector)>),
}

pub struct Loaded {
    pub state: LoadedState,
    pub warnings: Vec<String>,
}

impl LoadedState {
    pub fn n_qubits(&self) -> usize {
        match self {
            Self::Dense(s) => s.n_qubits(),
            Self::Mps(s) => s.n_qubits(),
            Self::Mixture(c) => c[0].1.n_qubits(),
        }
    }

    /// Query oracle for a pure target.
    pub fn oracle(&self) -> CliResult<Box<dyn TargetOracle>> {
        match self {
            Self::Dense(s) => Ok(Box::new(DenseOracle::new(s.clone()))),
            Self::Mps(s) => Ok(Box::new(MpsOracle::new(s.clone()))),
            Self::Mixture(_) => Err(CliError::Usage("target must be a pure state".into())),
        }
    }

    /// Dense vector of a pure state; MPS input is contracted if `n ≤ cap`.
    pub fn dense(&self, cap: usize) -> CliResult<StateVector> {
        match self {
            Self::Dense(s) => Ok(s.clone()),
            Self::Mps(s) => Ok(s.to_dense(cap)?),
            Self::Mixture(_) => Err(CliError::Usage(
                "expected a pure state, found a mixture".into(),
            )),
        }
    }

    pub fn lab_state(&self, cap: usize) -> CliResult<LabState> {
        match self {
            Self::Mixture(c) => Ok(LabState::mixture(c.clone())?),
            other => Ok(LabState::Pure(other.dense(cap)?)),
        }
    }
}

fn parse_err(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.display().to_string(),
        message: message.into(),
    }
}

// Applies the ingest normalization rule to a squared norm.
fn check_norm(path: &Path, what: &str, ns: f64, warnings: &mut Vec<String>) -> CliResult<bool> {
    if !ns.is_finite() || (ns - 1.0).abs() > REJECT_TOL {
        return Err(parse_err(
            path,
            format!("{what} has squared norm {ns}, not 1"),
        ));
    }
    if (ns - 1.0).abs() > WARN_TOL {
        warnings.push(format!(
            "{}: {what} squared norm {ns} renormalized",
            path.display()
        ));
        return Ok(true);
    }
    Ok(false)
}

fn dense_from(
    path: &Path,
    n: usize,
    amps: &[[f64; 2]],
    what: &str,
    warnings: &mut Vec<String>,
) -> CliResult<StateVector> {
    if n == 0 || n >= usize::BITS as usize || amps.len() != 1usize << n {
        return Err(parse_err(
            path,
            format!("{what}: n = {n} needs 2^n amplitudes, found {}", amps.len()),
        ));
    }
    let amps = from_pairs(amps);
    let ns: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    let fix = check_norm(path, what, ns, warnings)?;
    let built = if fix {
        StateVector::from_unnormalized(amps)
    } else {
        StateVector::new(amps)
    };
    built.map_err(|e| parse_err(path, format!("{what}: {e}")))
}

pub fn parse_state(path: &Path, text: &str, chi_max: usize) -> CliResult<Loaded> {
    let file: StateFile =
        serde_json::from_str(text).map_err(|e| parse_err(path, format!("invalid JSON: {e}")))?;
    if file.format_version != FORMAT_VERSION {
        return Err(parse_err(
            path,
            format!("unsupported format_version {}", file.format_version),
        ));
    }
    let mut warnings = Vec::new();
    let state = match file.kind.as_str() {
        "dense" => {
            let amps = file
                .amplitudes
                .as_ref()
                .ok_or_else(|| parse_err(path, "dense state needs \"amplitudes\""))?;
            LoadedState::Dense(dense_from(path, file.n, amps, "state", &mut warnings)?)
        }
        "mps" => {
            let tensors = file
                .tensors
                .as_ref()
                .ok_or_else(|| parse_err(path, "mps state needs \"tensors\""))?;
            if tensors.len() != file.n || file.n == 0 {
                return Err(parse_err(
                    path,
                    format!("n = {} but {} site tensors", file.n, tensors.len()),
                ));
            }
            let sites = tensors
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    MpsTensor::new(t.left, t.right, from_pairs(&t.data))
                        .map_err(|e| parse_err(path, format!("site {i}: {e}")))
                })
                .collect::<CliResult<Vec<_>>>()?;
            let (mps, ns) =
                MpsState::normalized_with_norm(sites, chi_max).map_err(|e| match e {
                    qcert::Error::Capacity { .. } => CliError::from(e),
                    other => parse_err(path, other.to_string()),
                })?;
            check_norm(path, "state", ns, &mut warnings)?;
            LoadedState::Mps(mps)
        }
        "mixture" => {
            let comps = file
                .components
                .as_ref()
                .filter(|c| !c.is_empty())
                .ok_or_else(|| parse_err(path, "mixture needs nonempty \"components\""))?;
            let mut out = Vec::with_capacity(comps.len());
            for (i, c) in comps.iter().enumerate() {
                let what = format!("component {i}");
                out.push((
                    c.weight,
                    dense_from(path, file.n, &c.amplitudes, &what, &mut warnings)?,
                ));
            }
            let total: f64 = out.iter().map(|c| c.0).sum();
            if out.iter().any(|c| c.0.is_nan() || c.0 < 0.0) || (total - 1.0).abs() > REJECT_TOL {
                return Err(parse_err(
                    path,
                    format!("mixture weights must be nonnegative and sum to 1, got {total}"),
                ));
            }
            for c in &mut out {
                c.0 /= total;
            }
            LoadedState::Mixture(out)
        }
        other => return Err(parse_err(path, format!("unknown kind {other:?}"))),
    };
    Ok(Loaded { state, warnings })
}

pub fn load_state(path: &Path) -> CliResult<Loaded> {
    load_state_with(path, DEFAULT_CHI_MAX)
}

pub fn load_state_with(path: &Path, chi_max: usize) -> CliResult<Loaded> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_state(path, &text, chi_max)
}
