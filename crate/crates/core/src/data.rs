//! Datasets, standardization and CSV ingestion.

use std::path::Path;

use ndarray::{Array1, Array2, Axis};

use crate::error::{McbError, Result};

/// A response vector with its design matrix and predictor labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub names: Vec<String>,
    pub standardized: bool,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>, names: Vec<String>) -> Result<Self> {
        let (n, p) = x.dim();
        if n < 2 || p < 1 {
            return Err(McbError::InvalidInput(format!(
                "need n >= 2 and p >= 1, got n = {n}, p = {p}"
            )));
        }
        if y.len() != n {
            return Err(McbError::InvalidInput(format!(
                "response has length {} but design has {n} rows",
                y.len()
            )));
        }
        if names.len() != p {
            return Err(McbError::InvalidInput(format!(
                "{} names for {p} predictors",
                names.len()
            )));
        }
        let mut sorted = names.clone();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(McbError::InvalidInput(format!(
                "duplicate predictor name '{}'",
                w[0]
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(McbError::InvalidInput("non-finite value in data".into()));
        }
        Ok(Self {
            x,
            y,
            names,
            standardized: false,
        })
    }

    /// Dataset with generated labels `x1, .., xp`.
    pub fn unnamed(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        let names = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        Self::new(x, y, names)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Same design, new response.
    pub fn with_response(&self, y: Array1<f64>) -> Self {
        debug_assert_eq!(y.len(), self.n());
        Self {
            x: self.x.clone(),
            y,
            names: self.names.clone(),
            standardized: self.standardized,
        }
    }

    /// Reorders columns so that new column `perm[j]` holds old column `j`.
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        let p = self.p();
        let mut x = Array2::zeros(self.x.dim());
        let mut names = vec![String::new(); p];
        for (old, &new) in perm.iter().enumerate() {
            x.column_mut(new).assign(&self.x.column(old));
            names[new] = self.names[old].clone();
        }
        Self {
            x,
            y: self.y.clone(),
            names,
            standardized: self.standardized,
        }
    }
}

/// Centering and scaling applied by [`standardize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Scaling {
    pub x_mean: Array1<f64>,
    pub x_scale: Array1<f64>,
    pub y_mean: f64,
}

impl Scaling {
    /// Maps standardized-scale coefficients to the original units, returning
    /// `(intercept, slopes)`.
    pub fn to_original(&self, coefficients: &Array1<f64>) -> (f64, Array1<f64>) {
        let slopes = coefficients / &self.x_scale;
        let intercept = self.y_mean - slopes.dot(&self.x_mean);
        (intercept, slopes)
    }
}

/// Sample standard deviation with the `n - 1` divisor.
pub(crate) fn sample_sd(v: ndarray::ArrayView1<f64>, mean: f64) -> f64 {
    let n = v.len() as f64;
    (v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Centers every column of X to mean 0 and scales it to sample sd 1; centers y.
pub fn standardize(data: &Dataset) -> Result<(Dataset, Scaling)> {
    let p = data.p();
    let x_mean = data.x.mean_axis(Axis(0)).expect("n >= 2");
    let mut x_scale = Array1::zeros(p);
    let mut x = data.x.clone();
    for j in 0..p {
        let col = data.x.column(j);
        let sd = sample_sd(col, x_mean[j]);
        let magnitude = col.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if sd <= 1e-12 * magnitude.max(1.0) || sd == 0.0 {
            return Err(McbError::ConstantColumn(j));
        }
        x_scale[j] = sd;
        x.column_mut(j).mapv_inplace(|v| (v - x_mean[j]) / sd);
    }
    let y_mean = data.y.mean().expect("n >= 2");
    let y = data.y.mapv(|v| v - y_mean);
    Ok((
        Dataset {
            x,
            y,
            names: data.names.clone(),
            standardized: true,
        },
        Scaling {
            x_mean,
            x_scale,
            y_mean,
        },
    ))
}

/// Reads a comma-delimited file with a header row. `response` names the
/// response column; every other column becomes a predictor.
pub fn read_csv<P: AsRef<Path>>(path: P, response: &str) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv_from(file, response)
}

pub fn read_csv_from<R: std::io::Read>(reader: R, response: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| McbError::Csv(format!("header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let resp_col = header
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| McbError::MissingColumn(response.to_string()))?;
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != resp_col)
        .map(|(_, h)| h.clone())
        .collect();

    let mut rows: Vec<f64> = Vec::new();
    let mut y = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        // header is line 1
        let line = r + 2;
        let record = record.map_err(|e| McbError::Csv(format!("row {line}: {e}")))?;
        if record.len() != header.len() {
            return Err(McbError::Csv(format!(
                "row {line}: expected {} fields, found {}",
                header.len(),
                record.len()
            )));
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                McbError::Csv(format!(
                    "row {line}, column '{}': '{field}' is not numeric",
                    header[c]
                ))
            })?;
            if !v.is_finite() {
                return Err(McbError::Csv(format!(
                    "row {line}, column '{}': non-finite value",
                    header[c]
                )));
            }
            if c == resp_col {
                y.push(v);
            } else {
                rows.push(v);
            }
        }
    }
    let n = y.len();
    let p = names.len();
    let x = Array2::from_shape_vec((n, p), rows).map_err(|e| McbError::Csv(e.to_string()))?;
    Dataset::new(x, Array1::from(y), names)
}

/// Writes the dataset with the response as the last column.
pub fn write_csv<P: AsRef<Path>>(data: &Dataset, response: &str, path: P) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref()).map_err(|e| McbError::Csv(e.to_string()))?;
    let mut header = data.names.clone();
    header.push(response.to_string());
    w.write_record(&header)
        .map_err(|e| McbError::Csv(e.to_string()))?;
    for i in 0..data.n() {
        let mut rec: Vec<String> = data.x.row(i).iter().map(|v| v.to_string()).collect();
        rec.push(data.y[i].to_string());
        w.write_record(&rec).map_err(|e| McbError::Csv(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
