use nalgebra::{DMatrix, DVector};

/// Cholesky factor of a symmetric positive definite band matrix, stored
/// densely but only touched inside the band.
#[derive(Debug, Clone)]
pub(crate) struct BandCholesky {
    l: DMatrix<f64>,
    bandwidth: usize,
}

/// Largest `|i - j|` with a nonzero entry.
pub(crate) fn bandwidth(a: &DMatrix<f64>) -> usize {
    let mut bw = 0;
    for j in 0..a.ncols() {
        for i in j..a.nrows() {
            if a[(i, j)] != 0.0 {
                bw = bw.max(i - j);
            }
        }
    }
    bw
}

impl BandCholesky {
    /// Returns `None` if a pivot is not safely positive.
    pub(crate) fn factor(a: &DMatrix<f64>) -> Option<Self> {
        let m = a.nrows();
        let bw = bandwidth(a);
        let scale = (0..m).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
        let mut l = DMatrix::zeros(m, m);
        for j in 0..m {
            let lo = j.saturating_sub(bw);
            let mut d = a[(j, j)];
            for k in lo..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 1e-14 * scale) {
                return None;
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..(j + bw + 1).min(m) {
                let mut v = a[(i, j)];
                for k in i.saturating_sub(bw).max(lo)..j {
                    v -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = v / d;
            }
        }
        Some(Self { l, bandwidth: bw })
    }

    pub(crate) fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let m = self.l.nrows();
        let bw = self.bandwidth;
        let mut x = b.clone();
        for i in 0..m {
            let mut v = x[i];
            for k in i.saturating_sub(bw)..i {
                v -= self.l[(i, k)] * x[k];
            }
            x[i] = v / self.l[(i, i)];
        }
        for i in (0..m).rev() {
            let mut v = x[i];
            for k in i + 1..(i + bw + 1).min(m) {
                v -= self.l[(k, i)] * x[k];
            }
            x[i] = v / self.l[(i, i)];
        }
        x
    }
}
