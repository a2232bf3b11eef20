//! Dense symmetric positive (semi)definite factorization for the reduced
//! Newton systems.

/// Row-major square matrix, only the lower triangle is read.
#[derive(Debug, Clone)]
pub(crate) struct SymMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        // lower triangle only
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.data[r * self.n + c] += v;
    }
}

/// Lower Cholesky factor with static and dynamic regularization. The static
/// term scales every diagonal entry by `1 + static_reg`.
#[derive(Debug, Clone)]
pub(crate) struct Cholesky {
    n: usize,
    l: Vec<f64>,
    /// Pivots replaced because they fell below the dynamic threshold.
    pub bumped: usize,
}

/// Pivots smaller than this fraction of their own diagonal entry are treated
/// as numerically zero.
const DYNAMIC_PIVOT_TOL: f64 = 1e-15;
/// Replacement for a numerically zero pivot; decouples that direction.
const BIG_PIVOT: f64 = 1e64;

impl Cholesky {
    pub fn factor(m: &SymMatrix, static_reg: f64) -> Option<Self> {
        let n = m.n;
        let mut l = m.data.clone();
        let mut bumped = 0;
        for j in 0..n {
            let row_j = &l[j * n..j * n + j];
            let diag = l[j * n + j];
            let mut d = diag * (1.0 + static_reg) - row_j.iter().map(|v| v * v).sum::<f64>();
            if !d.is_finite() {
                return None;
            }
            if d <= DYNAMIC_PIVOT_TOL * diag.max(f64::MIN_POSITIVE) {
                d = BIG_PIVOT;
                bumped += 1;
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let (upper, lower) = l.split_at_mut(i * n);
                let row_j = &upper[j * n..j * n + j];
                let row_i = &mut lower[..=j];
                let dot: f64 = row_i[..j].iter().zip(row_j).map(|(a, b)| a * b).sum();
                row_i[j] = (row_i[j] - dot) / djj;
            }
        }
        Some(Self { n, l, bumped })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let s: f64 = row.iter().zip(&b[..i]).map(|(a, x)| a * x).sum();
            b[i] = (b[i] - s) / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let mut m = SymMatrix::zeros(3);
        let a = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        for i in 0..3 {
            for j in 0..=i {
                m.add(i, j, a[i][j]);
            }
        }
        let f = Cholesky::factor(&m, 0.0).unwrap();
        let x = [1.0, -2.0, 3.0];
        let mut b: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a[i][j] * x[j]).sum())
            .collect();
        f.solve_in_place(&mut b);
        for i in 0..3 {
            assert!((b[i] - x[i]).abs() < 1e-12);
        }
        assert_eq!(f.bumped, 0);
    }

    #[test]
    fn singular_direction_is_decoupled() {
        let mut m = SymMatrix::zeros(2);
        m.add(0, 0, 1.0);
        let f = Cholesky::factor(&m, 0.0).unwrap();
        assert_eq!(f.bumped, 1);
        let mut b = vec![2.0, 5.0];
        f.solve_in_place(&mut b);
        assert!((b[0] - 2.0).abs() < 1e-14);
        assert!(b[1].abs() < 1e-30);
    }
}
