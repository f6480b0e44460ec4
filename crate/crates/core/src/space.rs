//! Finite-dimensional inner-product spaces defined by a Gram operator.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, DVectorView};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Which inner product a Gram operator realises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GramKind {
    /// Euclidean inner product.
    Identity,
    /// FE mass matrix, the discrete L² product.
    Mass,
    /// FE stiffness matrix, the discrete H¹₀ product.
    Stiffness,
}

impl GramKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GramKind::Identity => "identity",
            GramKind::Mass => "mass",
            GramKind::Stiffness => "stiffness",
        }
    }
}

/// Inner-product space `R^N` with `(u, v) = uᵀ G v`.
///
/// The identity case stores no matrix. Dense Gram matrices are shared behind
/// an `Arc`, so cloning a space is cheap.
#[derive(Clone, Debug)]
pub struct HilbertSpace {
    dim: usize,
    kind: GramKind,
    gram: Option<Arc<DMatrix<f64>>>,
}

impl HilbertSpace {
    pub fn identity(dim: usize) -> Self {
        HilbertSpace {
            dim,
            kind: GramKind::Identity,
            gram: None,
        }
    }

    /// Wraps a dense Gram matrix. The matrix must be square and exactly
    /// symmetric as stored.
    pub fn with_gram(kind: GramKind, gram: DMatrix<f64>) -> Result<Self> {
        if gram.nrows() != gram.ncols() || gram.nrows() == 0 {
            return invalid(format!(
                "gram must be square and nonempty, got {}x{}",
                gram.nrows(),
                gram.ncols()
            ));
        }
        let n = gram.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if gram[(i, j)] != gram[(j, i)] {
                    return invalid(format!("gram is not symmetric at ({i}, {j})"));
                }
            }
            if !(gram[(i, i)] > 0.0) {
                return invalid(format!("gram has nonpositive diagonal at {i}"));
            }
        }
        Ok(HilbertSpace {
            dim: n,
            kind,
            gram: Some(Arc::new(gram)),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> GramKind {
        self.kind
    }

    /// Dense Gram matrix, `None` for the identity.
    pub fn gram(&self) -> Option<&DMatrix<f64>> {
        self.gram.as_deref()
    }

    /// Gram matrix as a dense matrix, materialising the identity.
    pub fn gram_dense(&self) -> DMatrix<f64> {
        match &self.gram {
            Some(g) => (**g).clone(),
            None => DMatrix::identity(self.dim, self.dim),
        }
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.gram {
            Some(g) => &**g * v,
            None => v.clone(),
        }
    }

    /// `G * U` for a block of column vectors.
    pub fn apply_block(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.gram {
            Some(g) => &**g * u,
            None => u.clone(),
        }
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.inner_view(u.as_view(), v.as_view())
    }

    pub fn inner_view(&self, u: DVectorView<'_, f64>, v: DVectorView<'_, f64>) -> f64 {
        match &self.gram {
            Some(g) => {
                // uᵀ (G v) without allocating.
                let mut acc = 0.0;
                for (j, vj) in v.iter().enumerate() {
                    if *vj != 0.0 {
                        acc += vj * g.column(j).dot(&u);
                    }
                }
                acc
            }
            None => u.dot(&v),
        }
    }

    pub fn norm(&self, u: &DVector<f64>) -> f64 {
        self.norm_view(u.as_view())
    }

    pub fn norm_view(&self, u: DVectorView<'_, f64>) -> f64 {
        self.inner_view(u, u).max(0.0).sqrt()
    }

    pub fn check_dim(&self, n: usize, what: &str) -> Result<()> {
        if n != self.dim {
            return invalid(format!(
                "{what}: dimension {n} does not match space dimension {}",
                self.dim
            ));
        }
        Ok(())
    }

    /// Same space with every Gram entry multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        HilbertSpace {
            dim: self.dim,
            kind: self.kind,
            gram: Some(Arc::new(self.gram_dense() * factor)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_inner_is_dot() {
        let s = HilbertSpace::identity(3);
        let u = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let v = DVector::from_vec(vec![-1.0, 0.5, 2.0]);
        assert_eq!(s.inner(&u, &v), u.dot(&v));
        assert!((s.norm(&u) - 14f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn dense_gram_inner() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let s = HilbertSpace::with_gram(GramKind::Mass, g.clone()).unwrap();
        let u = DVector::from_vec(vec![1.0, -2.0]);
        let v = DVector::from_vec(vec![0.5, 4.0]);
        let expected = (u.transpose() * &g * &v)[(0, 0)];
        assert!((s.inner(&u, &v) - expected).abs() < 1e-14);
        assert!((s.inner(&u, &v) - s.inner(&v, &u)).abs() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric_gram() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0 + 1e-15, 3.0]);
        assert!(HilbertSpace::with_gram(GramKind::Mass, g).is_err());
    }
}
