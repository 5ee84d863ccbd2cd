//! Quasi-Newton approximations of the Lagrangian Hessian.
//!
//! All variants start from the identity and use the BFGS formula
//!
//! ```text
//! H+ = H - (H s)(H s)^T / (s^T H s) + y y^T / (y^T s)
//! ```
//!
//! skipping any block where `y^T s <= 0`. The structured variants apply it
//! to sub-blocks of the packed vector so the sparsity of the true Hessian is
//! kept:
//!
//! * `BlockDiagonal`: one `(n+1)`-block per segment.
//! * `Banded`: one `2(n+1)`-element per pair of consecutive segments. The
//!   assembled matrix is the sum of the elements, so it is block-tridiagonal.
//!   Shared coordinates are split between the two elements that see them:
//!   element `k` receives `D_k y` where `D_k` weights each segment by one over
//!   the number of elements covering it. The weights sum to one, so the
//!   assembled matrix stays SPD and satisfies the secant condition whenever
//!   no element is skipped.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HessianKind {
    Full,
    #[default]
    #[serde(rename = "blockdiag")]
    BlockDiagonal,
    Banded,
}

impl fmt::Display for HessianKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HessianKind::Full => "full",
            HessianKind::BlockDiagonal => "blockdiag",
            HessianKind::Banded => "banded",
        })
    }
}

impl FromStr for HessianKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(HessianKind::Full),
            "blockdiag" => Ok(HessianKind::BlockDiagonal),
            "banded" => Ok(HessianKind::Banded),
            other => Err(Error::InvalidInput(format!(
                "unknown hessian variant {other:?}; expected full, blockdiag or banded"
            ))),
        }
    }
}

/// Outcome of one [`HessianApprox::update`] call, counted in blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct UpdateStats {
    pub applied: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HessianApprox {
    kind: HessianKind,
    n: usize,
    segments: usize,
    /// Full: one matrix. BlockDiagonal: one per segment. Banded: one per
    /// element (segment pair), or a single segment block when `N = 1`.
    blocks: Vec<DMatrix<f64>>,
    /// Per-segment share of `y` handed to each element (banded only).
    weights: Vec<f64>,
    skipped: usize,
}

impl HessianApprox {
    pub fn identity(kind: HessianKind, n: usize, segments: usize) -> Self {
        let m = n + 1;
        let (blocks, weights) = match kind {
            HessianKind::Full => (vec![DMatrix::identity(m * segments, m * segments)], Vec::new()),
            HessianKind::BlockDiagonal => (vec![DMatrix::identity(m, m); segments], Vec::new()),
            HessianKind::Banded if segments == 1 => (vec![DMatrix::identity(m, m)], vec![1.0]),
            HessianKind::Banded => {
                let weights: Vec<f64> = (0..segments)
                    .map(|i| if i == 0 || i + 1 == segments { 1.0 } else { 0.5 })
                    .collect();
                let blocks = (0..segments - 1)
                    .map(|k| {
                        let d = DVector::from_fn(2 * m, |r, _| weights[k + r / m]);
                        DMatrix::from_diagonal(&d)
                    })
                    .collect();
                (blocks, weights)
            }
        };
        Self {
            kind,
            n,
            segments,
            blocks,
            weights,
            skipped: 0,
        }
    }

    pub fn kind(&self) -> HessianKind {
        self.kind
    }

    /// `N (n + 1)`
    pub fn dim(&self) -> usize {
        self.segments * (self.n + 1)
    }

    /// Total number of skipped block updates since construction.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// The matrices the update acts on: the whole matrix, the diagonal
    /// blocks, or the banded elements.
    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    /// Offset of block `k` in the packed vector.
    fn offset(&self, k: usize) -> usize {
        match self.kind {
            HessianKind::Full => 0,
            _ => k * (self.n + 1),
        }
    }

    /// Largest `|i - j|` with a possibly nonzero entry.
    pub fn half_bandwidth(&self) -> usize {
        let m = self.n + 1;
        match self.kind {
            HessianKind::Full => self.dim().saturating_sub(1),
            HessianKind::BlockDiagonal => m - 1,
            HessianKind::Banded if self.segments == 1 => m - 1,
            HessianKind::Banded => 2 * m - 1,
        }
    }

    pub fn matvec(&self, v: &DVector<f64>) -> DVector<f64> {
        assert_eq!(v.len(), self.dim(), "vector length");
        let mut out = DVector::zeros(self.dim());
        for (k, b) in self.blocks.iter().enumerate() {
            let off = self.offset(k);
            let size = b.nrows();
            let part = b * v.rows(off, size);
            let mut dst = out.rows_mut(off, size);
            dst += part;
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        for (k, b) in self.blocks.iter().enumerate() {
            let off = self.offset(k);
            let size = b.nrows();
            let mut dst = out.view_mut((off, off), (size, size));
            dst += b;
        }
        out
    }

    #[cfg(test)]
    pub(crate) fn set_block_for_tests(&mut self, k: usize, block: DMatrix<f64>) {
        assert_eq!(block.shape(), self.blocks[k].shape());
        self.blocks[k] = block;
    }

    /// Applies the BFGS update with step `s` and gradient difference `y`
    /// block by block.
    pub fn update(&mut self, s: &DVector<f64>, y: &DVector<f64>) -> UpdateStats {
        assert_eq!(s.len(), self.dim(), "step length");
        assert_eq!(y.len(), self.dim(), "gradient difference length");
        let m = self.n + 1;
        let mut stats = UpdateStats::default();
        for k in 0..self.blocks.len() {
            let off = self.offset(k);
            let size = self.blocks[k].nrows();
            let sk = s.rows(off, size).into_owned();
            let mut yk = y.rows(off, size).into_owned();
            if self.kind == HessianKind::Banded {
                for (r, v) in yk.iter_mut().enumerate() {
                    *v *= self.weights[k + r / m];
                }
            }
            if bfgs_update(&mut self.blocks[k], &sk, &yk) {
                stats.applied += 1;
            } else {
                stats.skipped += 1;
            }
        }
        self.skipped += stats.skipped;
        stats
    }
}

/// One BFGS update in place. Returns `false` and leaves `h` untouched when
/// the curvature condition fails.
fn bfgs_update(h: &mut DMatrix<f64>, s: &DVector<f64>, y: &DVector<f64>) -> bool {
    let ys = y.dot(s);
    let hs = &*h * s;
    let shs = s.dot(&hs);
    if !(ys > 0.0 && shs > 0.0) || !ys.is_finite() || !shs.is_finite() {
        return false;
    }
    let size = h.nrows();
    for j in 0..size {
        for i in j..size {
            let v = h[(i, j)] - hs[i] * hs[j] / shs + y[i] * y[j] / ys;
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    true
}
