//! Least squares by Householder QR for the small, tall design matrices of the
//! assisting models (p <= 4, n in the tens to hundreds).

use crate::error::{Error, Result};

/// Relative tolerance on `|R_kk| / ||x_k||` below which column `k` is taken
/// to be a linear combination of the columns before it.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Column-major design matrix with named columns.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    rows: usize,
}

impl DesignMatrix {
    pub fn new(rows: usize) -> Self {
        DesignMatrix {
            names: Vec::new(),
            columns: Vec::new(),
            rows,
        }
    }

    /// Starts a matrix with an intercept column of ones.
    pub fn with_intercept(rows: usize) -> Self {
        let mut m = DesignMatrix::new(rows);
        m.names.push("(intercept)".to_string());
        m.columns.push(vec![1.0; rows]);
        m
    }

    pub fn push(&mut self, name: impl Into<String>, column: Vec<f64>) -> Result<()> {
        if column.len() != self.rows {
            return Err(Error::Shape(format!(
                "column has {} rows, design matrix has {}",
                column.len(),
                self.rows
            )));
        }
        self.names.push(name.into());
        self.columns.push(column);
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// `X beta`.
    pub fn predict(&self, beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (col, b) in self.columns.iter().zip(beta) {
            for (o, x) in out.iter_mut().zip(col) {
                *o += b * x;
            }
        }
        out
    }
}

/// Ordinary least squares coefficients minimizing `||y - X beta||^2`.
pub fn ols_fit(design: &DesignMatrix, response: &[f64]) -> Result<Vec<f64>> {
    let n = design.rows;
    let p = design.cols();
    if response.len() != n {
        return Err(Error::Shape(format!(
            "response has {} values, design matrix has {n} rows",
            response.len()
        )));
    }
    if n <= p {
        return Err(Error::InsufficientSample { n, p });
    }

    let mut a: Vec<Vec<f64>> = design.columns.clone();
    let mut qty = response.to_vec();
    let mut r_diag = vec![0.0; p];

    for k in 0..p {
        let scale = norm(&design.columns[k]);
        let x = &a[k][k..];
        let tail = norm(x);
        if scale == 0.0 || tail <= RANK_TOLERANCE * scale {
            return Err(Error::Collinearity {
                column: design.names[k].clone(),
            });
        }
        let alpha = if x[0] > 0.0 { -tail } else { tail };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|t| t * t).sum();
        r_diag[k] = alpha;

        let reflect = |target: &mut [f64]| {
            let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vtv;
            for (t, vi) in target.iter_mut().zip(&v) {
                *t -= f * vi;
            }
        };
        for col in a.iter_mut().skip(k + 1) {
            reflect(&mut col[k..]);
        }
        reflect(&mut qty[k..]);
    }

    let mut beta = vec![0.0; p];
    for k in (0..p).rev() {
        let mut s = qty[k];
        for j in k + 1..p {
            s -= a[j][k] * beta[j];
        }
        beta[k] = s / r_diag[k];
    }
    Ok(beta)
}

fn norm(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intercept_only_is_the_mean() {
        let x = DesignMatrix::with_intercept(3);
        let b = ols_fit(&x, &[2.0, 4.0, 6.0]).unwrap();
        assert!((b[0] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn exact_line() {
        let mut x = DesignMatrix::with_intercept(3);
        x.push("x", vec![0.0, 1.0, 2.0]).unwrap();
        let b = ols_fit(&x, &[1.0, 3.0, 5.0]).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-14 && (b[1] - 2.0).abs() < 1e-14, "{b:?}");
    }

    #[test]
    fn duplicate_column_is_collinear() {
        let mut x = DesignMatrix::with_intercept(5);
        x.push("a", vec![1.0, 2.0, 3.0, 5.0, 8.0]).unwrap();
        x.push("b", vec![1.0, 2.0, 3.0, 5.0, 8.0]).unwrap();
        match ols_fit(&x, &[1.0, 2.0, 3.0, 4.0, 5.0]) {
            Err(Error::Collinearity { column }) => assert_eq!(column, "b"),
            other => panic!("{other:?}"),
        }
        let mut c = DesignMatrix::with_intercept(4);
        c.push("const", vec![3.0; 4]).unwrap();
        assert!(matches!(ols_fit(&c, &[1.0, 2.0, 3.0, 4.0]), Err(Error::Collinearity { .. })));
    }

    #[test]
    fn too_few_rows() {
        let mut x = DesignMatrix::with_intercept(2);
        x.push("a", vec![0.0, 1.0]).unwrap();
        assert!(matches!(ols_fit(&x, &[1.0, 2.0]), Err(Error::InsufficientSample { n: 2, p: 2 })));
    }

    #[test]
    fn matches_normal_equations_on_random_data() {
        use rand::Rng;
        let mut rng = crate::rng::stream(11, &[]);
        let n = 40;
        let mut x = DesignMatrix::with_intercept(n);
        let c1: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let c2: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 3.0).collect();
        let y: Vec<f64> = (0..n).map(|i| 1.0 + 2.0 * c1[i] - c2[i] + rng.random::<f64>() * 0.1).collect();
        x.push("c1", c1.clone()).unwrap();
        x.push("c2", c2.clone()).unwrap();
        let b = ols_fit(&x, &y).unwrap();
        // residuals are orthogonal to every column
        let fitted = x.predict(&b);
        for j in 0..3 {
            let dot: f64 = (0..n).map(|i| x.column(j)[i] * (y[i] - fitted[i])).sum();
            assert!(dot.abs() < 1e-10, "column {j}: {dot}");
        }
    }
}
