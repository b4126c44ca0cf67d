use std::path::Path;

use riccati_core::model::{load_model, validate};
use riccati_core::{Mat, ModelFile, RiccatiError, Tolerances};

/// Exit status of a failed run.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_INVARIANT: u8 = 4;

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<RiccatiError> for Failure {
    fn from(e: RiccatiError) -> Self {
        Self {
            code: if e.is_input_error() { EXIT_INPUT } else { EXIT_NUMERICAL },
            message: e.to_string(),
        }
    }
}

/// Reads a model file and rejects models that fail validation, naming every
/// failed entry.
pub fn load_validated(path: &Path, tol: &Tolerances) -> Result<ModelFile, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let file = load_model(&text)?;
    let report = validate(&file.model, tol);
    if !report.passed {
        let failed: Vec<String> = report
            .entries
            .iter()
            .filter(|e| !e.passed)
            .map(|e| format!("{} (value {:.6e}, threshold {:.6e})", e.name, e.value, e.threshold))
            .collect();
        return Err(Failure::input(format!("model validation failed: {}", failed.join("; "))));
    }
    Ok(file)
}

/// `Q` from the file, or the zero matrix when the file has none.
pub fn initial_condition(file: &ModelFile) -> Mat {
    file.q
        .clone()
        .unwrap_or_else(|| Mat::zeros(file.model.dim, file.model.dim))
}

/// A comma list `0.1,0.5,1` or an inclusive range `start:step:end`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let num = |x: &str| -> Result<f64, String> {
        let v: f64 = x.trim().parse().map_err(|_| format!("`{x}` is not a number"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("`{x}` is not finite"))
        }
    };
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, step, end] = parts[..] else {
            return Err(format!("range `{s}` must have the form start:step:end"));
        };
        let (start, step, end) = (num(start)?, num(step)?, num(end)?);
        if step <= 0.0 {
            return Err("range step must be positive".into());
        }
        if end < start {
            return Err("range end precedes its start".into());
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|k| start + k as f64 * step).collect())
    } else {
        s.split(',').map(num).collect()
    }
}

/// A second initial condition given inline as a JSON matrix, as a file
/// holding a JSON matrix, or as a model file carrying `Q`.
pub fn parse_matrix_arg(arg: &str, dim: usize) -> Result<Mat, Failure> {
    let text = if arg.trim_start().starts_with('[') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| Failure::input(format!("cannot read {arg}: {e}")))?
    };
    let m = match serde_json::from_str::<Vec<Vec<f64>>>(&text) {
        Ok(rows) => from_rows(&rows)?,
        Err(_) => load_model(&text)?.require_q()?.clone(),
    };
    if m.shape() != (dim, dim) {
        return Err(Failure::input(format!(
            "matrix is {}x{}, model dimension is {dim}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m)
}

fn from_rows(rows: &[Vec<f64>]) -> Result<Mat, Failure> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Failure::input("matrix must be a non-empty square array of rows"));
    }
    Ok(Mat::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| format!("`{x}` is not a valid value")))
        .collect()
}
