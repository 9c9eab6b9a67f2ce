//! Entity and relation feature matrices, dense or compressed sparse row.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from 0-based `(row, col, value)` triplets. Repeated coordinates
    /// are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::Dimension(format!(
                    "entry ({r}, {c}) outside a {nrows}x{ncols} matrix"
                )));
            }
            entries.push((r, c, v));
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));

        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            indptr[r + 1] += 1;
            indices.push(c);
            values.push(v);
            last = Some((r, c));
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out[(r, c)] = v;
            }
        }
        out
    }
}

/// Per-instance (or per-cell) covariates, one row per instance.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMatrix {
    Dense(DMatrix<f64>),
    Sparse(CsrMatrix),
}

impl FeatureMatrix {
    pub fn nrows(&self) -> usize {
        match self {
            FeatureMatrix::Dense(m) => m.nrows(),
            FeatureMatrix::Sparse(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            FeatureMatrix::Dense(m) => m.ncols(),
            FeatureMatrix::Sparse(m) => m.ncols(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, FeatureMatrix::Sparse(_))
    }

    /// `X · M`
    pub fn mul(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(self.ncols(), m.nrows());
        match self {
            FeatureMatrix::Dense(x) => x * m,
            FeatureMatrix::Sparse(x) => {
                let mut out = DMatrix::zeros(x.nrows, m.ncols());
                for r in 0..x.nrows {
                    let (cols, vals) = x.row(r);
                    for (&c, &v) in cols.iter().zip(vals) {
                        for k in 0..m.ncols() {
                            out[(r, k)] += v * m[(c, k)];
                        }
                    }
                }
                out
            }
        }
    }

    /// `Xᵀ · M`
    pub fn tr_mul(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(self.nrows(), m.nrows());
        match self {
            FeatureMatrix::Dense(x) => x.tr_mul(m),
            FeatureMatrix::Sparse(x) => {
                let mut out = DMatrix::zeros(x.ncols, m.ncols());
                for r in 0..x.nrows {
                    let (cols, vals) = x.row(r);
                    for (&c, &v) in cols.iter().zip(vals) {
                        for k in 0..m.ncols() {
                            out[(c, k)] += v * m[(r, k)];
                        }
                    }
                }
                out
            }
        }
    }

    /// `X · v`
    pub fn mul_vec(&self, v: &DVector<f64>, out: &mut DVector<f64>) {
        match self {
            FeatureMatrix::Dense(x) => x.mul_to(v, out),
            FeatureMatrix::Sparse(x) => {
                for r in 0..x.nrows {
                    let (cols, vals) = x.row(r);
                    out[r] = cols.iter().zip(vals).map(|(&c, &a)| a * v[c]).sum();
                }
            }
        }
    }

    /// `Xᵀ · v`
    pub fn tr_mul_vec(&self, v: &DVector<f64>, out: &mut DVector<f64>) {
        match self {
            FeatureMatrix::Dense(x) => x.tr_mul_to(v, out),
            FeatureMatrix::Sparse(x) => {
                out.fill(0.0);
                for r in 0..x.nrows {
                    let (cols, vals) = x.row(r);
                    let vr = v[r];
                    if vr == 0.0 {
                        continue;
                    }
                    for (&c, &a) in cols.iter().zip(vals) {
                        out[c] += a * vr;
                    }
                }
            }
        }
    }

    /// Dense `Xᵀ X`.
    pub fn gram(&self) -> DMatrix<f64> {
        match self {
            FeatureMatrix::Dense(x) => x.tr_mul(x),
            FeatureMatrix::Sparse(x) => {
                let mut out = DMatrix::zeros(x.ncols, x.ncols);
                for r in 0..x.nrows {
                    let (cols, vals) = x.row(r);
                    for (&a, &va) in cols.iter().zip(vals) {
                        for (&b, &vb) in cols.iter().zip(vals) {
                            out[(a, b)] += va * vb;
                        }
                    }
                }
                out
            }
        }
    }

    /// Dot product of row `r` with `w`.
    pub fn row_dot(&self, r: usize, w: &DVector<f64>) -> f64 {
        match self {
            FeatureMatrix::Dense(x) => x.row(r).transpose().dot(w),
            FeatureMatrix::Sparse(x) => {
                let (cols, vals) = x.row(r);
                cols.iter().zip(vals).map(|(&c, &v)| v * w[c]).sum()
            }
        }
    }

    /// New matrix made of the given rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        match self {
            FeatureMatrix::Dense(x) => FeatureMatrix::Dense(x.select_rows(rows)),
            FeatureMatrix::Sparse(x) => {
                let mut indptr = Vec::with_capacity(rows.len() + 1);
                indptr.push(0);
                let mut indices = Vec::new();
                let mut values = Vec::new();
                for &r in rows {
                    let (cols, vals) = x.row(r);
                    indices.extend_from_slice(cols);
                    values.extend_from_slice(vals);
                    indptr.push(indices.len());
                }
                FeatureMatrix::Sparse(CsrMatrix {
                    nrows: rows.len(),
                    ncols: x.ncols,
                    indptr,
                    indices,
                    values,
                })
            }
        }
    }
}
