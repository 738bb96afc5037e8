//! Datasets and coefficient partitions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-column centering (and optional scaling) applied to the covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centering {
    pub means: Vec<f64>,
    pub scales: Option<Vec<f64>>,
}

/// Response vector plus an `n × p` covariate matrix with labels.
///
/// The intercept is never stored as a column; when `intercept` is set the
/// estimators prepend an implicit column of ones, and coefficient vectors
/// carry the intercept in position 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    labels: Vec<String>,
    response: String,
    intercept: bool,
    centering: Option<Centering>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, labels: Vec<String>) -> Result<Self> {
        Self::with_response(x, y, labels, "y".to_string())
    }

    pub fn with_response(
        x: DMatrix<f64>,
        y: DVector<f64>,
        labels: Vec<String>,
        response: String,
    ) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::Empty("dataset has no rows".into()));
        }
        if x.ncols() == 0 {
            return Err(Error::Empty("dataset has no covariates".into()));
        }
        if x.nrows() != y.len() {
            return Err(Error::Dimension(format!(
                "{} design rows but {} responses",
                x.nrows(),
                y.len()
            )));
        }
        if labels.len() != x.ncols() {
            return Err(Error::Dimension(format!(
                "{} labels for {} columns",
                labels.len(),
                x.ncols()
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite value in dataset".into()));
        }
        Ok(Dataset {
            x,
            y,
            labels,
            response,
            intercept: true,
            centering: None,
        })
    }

    /// Unlabelled dataset with columns named `x1..xp`.
    pub fn from_parts(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let labels = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        Self::new(x, y, labels)
    }

    pub fn without_intercept(mut self) -> Self {
        self.intercept = false;
        self
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn response(&self) -> &str {
        &self.response
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }

    pub fn centering(&self) -> Option<&Centering> {
        self.centering.as_ref()
    }

    /// Number of coefficients including the intercept.
    pub fn n_coef(&self) -> usize {
        self.p() + usize::from(self.intercept)
    }

    /// Coefficient labels, `(Intercept)` first when present.
    pub fn coef_labels(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.n_coef());
        if self.intercept {
            out.push("(Intercept)".to_string());
        }
        out.extend(self.labels.iter().cloned());
        out
    }

    /// Full design matrix, with the column of ones first when an intercept is fitted.
    pub fn design(&self) -> DMatrix<f64> {
        if !self.intercept {
            return self.x.clone();
        }
        let n = self.n();
        let mut z = DMatrix::from_element(n, self.p() + 1, 1.0);
        z.view_mut((0, 1), (n, self.p())).copy_from(&self.x);
        z
    }

    /// Design restricted to the given coefficient indices (intercept = 0 when present).
    pub fn design_columns(&self, coef_idx: &[usize]) -> DMatrix<f64> {
        let n = self.n();
        let off = usize::from(self.intercept);
        DMatrix::from_fn(n, coef_idx.len(), |i, c| {
            let j = coef_idx[c];
            if self.intercept && j == 0 {
                1.0
            } else {
                self.x[(i, j - off)]
            }
        })
    }

    pub fn column_means(&self) -> Vec<f64> {
        (0..self.p()).map(|j| self.x.column(j).mean()).collect()
    }

    /// Sample standard deviations (n − 1 denominator) of the covariates.
    pub fn column_sds(&self) -> Vec<f64> {
        let n = self.n() as f64;
        (0..self.p())
            .map(|j| {
                let col = self.x.column(j);
                let m = col.mean();
                let ss: f64 = col.iter().map(|v| (v - m) * (v - m)).sum();
                if n > 1.0 {
                    (ss / (n - 1.0)).sqrt()
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Subtract the given means from every covariate column.
    pub fn centered_by(&self, means: &[f64]) -> Result<Dataset> {
        if means.len() != self.p() {
            return Err(Error::Dimension(format!(
                "{} centering means for {} columns",
                means.len(),
                self.p()
            )));
        }
        let mut out = self.clone();
        for (j, m) in means.iter().enumerate() {
            out.x.column_mut(j).add_scalar_mut(-m);
        }
        out.centering = Some(Centering {
            means: means.to_vec(),
            scales: None,
        });
        Ok(out)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let x = DMatrix::from_fn(rows.len(), self.p(), |i, j| self.x[(rows[i], j)]);
        let y = DVector::from_fn(rows.len(), |i, _| self.y[rows[i]]);
        Dataset {
            x,
            y,
            labels: self.labels.clone(),
            response: self.response.clone(),
            intercept: self.intercept,
            centering: self.centering.clone(),
        }
    }

    /// Keep only the listed covariate columns (0-based), in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.p()) {
            return Err(Error::Dimension(format!("column index {bad} out of range")));
        }
        if cols.is_empty() {
            return Err(Error::Empty("no columns selected".into()));
        }
        let x = DMatrix::from_fn(self.n(), cols.len(), |i, c| self.x[(i, cols[c])]);
        Ok(Dataset {
            x,
            y: self.y.clone(),
            labels: cols.iter().map(|&c| self.labels[c].clone()).collect(),
            response: self.response.clone(),
            intercept: self.intercept,
            centering: None,
        })
    }

    /// Replace the covariate matrix, keeping response, labels and intercept flag.
    pub fn with_x(&self, x: DMatrix<f64>) -> Result<Dataset> {
        let mut d = Dataset::with_response(x, self.y.clone(), self.labels.clone(), self.response.clone())?;
        d.intercept = self.intercept;
        Ok(d)
    }

    pub fn with_y(&self, y: DVector<f64>) -> Result<Dataset> {
        let mut d = Dataset::with_response(self.x.clone(), y, self.labels.clone(), self.response.clone())?;
        d.intercept = self.intercept;
        d.centering = self.centering.clone();
        Ok(d)
    }

    /// Fitted values `Zβ` for a full-length coefficient vector.
    pub fn predict(&self, beta: &DVector<f64>) -> Result<DVector<f64>> {
        if beta.len() != self.n_coef() {
            return Err(Error::Dimension(format!(
                "coefficient vector has length {}, expected {}",
                beta.len(),
                self.n_coef()
            )));
        }
        let off = usize::from(self.intercept);
        let b0 = if self.intercept { beta[0] } else { 0.0 };
        let slopes = beta.rows(off, self.p());
        Ok(&self.x * slopes + DVector::from_element(self.n(), b0))
    }

    pub fn residuals(&self, beta: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.y - self.predict(beta)?)
    }
}

/// Split of the covariates into a retained block (β₁) and a tested block (β₂).
///
/// Indices are 0-based covariate positions and need not be contiguous. The
/// intercept, when fitted, always belongs to the retained block, so `keep`
/// may be empty for models with an intercept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSpec {
    keep: Vec<usize>,
    test: Vec<usize>,
}

impl PartitionSpec {
    pub fn new(keep: Vec<usize>, test: Vec<usize>, p: usize, intercept: bool) -> Result<Self> {
        let mut seen = vec![false; p];
        for &j in keep.iter().chain(test.iter()) {
            if j >= p {
                return Err(Error::InvalidArgument(format!(
                    "partition index {} exceeds p = {p}",
                    j + 1
                )));
            }
            if seen[j] {
                return Err(Error::InvalidArgument(format!(
                    "covariate {} appears twice in the partition",
                    j + 1
                )));
            }
            seen[j] = true;
        }
        if let Some(j) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!(
                "covariate {} is in neither keep nor test set",
                j + 1
            )));
        }
        if test.is_empty() {
            return Err(Error::InvalidArgument("test set is empty".into()));
        }
        if keep.is_empty() && !intercept {
            return Err(Error::InvalidArgument(
                "keep set is empty and no intercept is fitted".into(),
            ));
        }
        Ok(PartitionSpec { keep, test })
    }

    /// Keep set given explicitly; the test set is its complement in `0..p`.
    pub fn from_keep(keep: Vec<usize>, p: usize, intercept: bool) -> Result<Self> {
        let test = (0..p).filter(|j| !keep.contains(j)).collect();
        Self::new(keep, test, p, intercept)
    }

    pub fn keep(&self) -> &[usize] {
        &self.keep
    }

    pub fn test(&self) -> &[usize] {
        &self.test
    }

    pub fn p1(&self) -> usize {
        self.keep.len()
    }

    pub fn p2(&self) -> usize {
        self.test.len()
    }

    /// Coefficient positions of the retained block, intercept first.
    pub fn keep_coef(&self, intercept: bool) -> Vec<usize> {
        let off = usize::from(intercept);
        let mut v: Vec<usize> = if intercept { vec![0] } else { Vec::new() };
        v.extend(self.keep.iter().map(|j| j + off));
        v
    }

    pub fn test_coef(&self, intercept: bool) -> Vec<usize> {
        let off = usize::from(intercept);
        self.test.iter().map(|j| j + off).collect()
    }

    pub fn check_against(&self, data: &Dataset) -> Result<()> {
        let total = self.keep.len() + self.test.len();
        if total != data.p() {
            return Err(Error::Dimension(format!(
                "partition covers {total} covariates, dataset has {}",
                data.p()
            )));
        }
        if self.keep.is_empty() && !data.has_intercept() {
            return Err(Error::InvalidArgument(
                "keep set is empty and no intercept is fitted".into(),
            ));
        }
        Ok(())
    }
}

/// Parse a comma-separated list of 1-based indices such as `"1,2,5"` or `"1-3,7"`.
pub fn parse_index_list(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let parse_one = |t: &str| -> Result<usize> {
            let v: usize = t
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad index `{t}`")))?;
            if v == 0 {
                return Err(Error::InvalidArgument("indices are 1-based".into()));
            }
            Ok(v - 1)
        };
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (parse_one(a)?, parse_one(b)?);
                if b < a || b - a > 1 << 16 {
                    return Err(Error::InvalidArgument(format!("bad range `{part}`")));
                }
                out.extend(a..=b);
            }
            None => out.push(parse_one(part)?),
        }
    }
    Ok(out)
}
