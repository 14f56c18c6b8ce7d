use super::PortfolioError;

const SYMMETRY_TOLERANCE: f64 = 1e-12;
const PIVOT_TOLERANCE: f64 = 1e-12;

/// Lower-triangular `L` with `L L^T = corr`, stored row-major.
///
/// Semidefinite inputs are accepted: a pivot within tolerance of zero zeroes
/// its column instead of failing, so perfectly correlated assets factorize.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationFactor {
    n: usize,
    lower: Vec<f64>,
}

impl CorrelationFactor {
    pub fn new(corr: &[Vec<f64>]) -> Result<Self, PortfolioError> {
        let n = corr.len();
        if n == 0 || corr.iter().any(|row| row.len() != n) {
            return Err(PortfolioError::CorrelationShape { expected: n });
        }
        for i in 0..n {
            if !corr[i].iter().all(|x| x.is_finite()) {
                return Err(PortfolioError::CorrelationEntry { row: i, col: 0 });
            }
            if (corr[i][i] - 1.0).abs() > SYMMETRY_TOLERANCE {
                return Err(PortfolioError::CorrelationDiagonal { index: i, value: corr[i][i] });
            }
            for j in 0..i {
                if (corr[i][j] - corr[j][i]).abs() > SYMMETRY_TOLERANCE {
                    return Err(PortfolioError::CorrelationNotSymmetric { row: i, col: j });
                }
                if corr[i][j].abs() > 1.0 {
                    return Err(PortfolioError::CorrelationEntry { row: i, col: j });
                }
            }
        }

        let mut lower = vec![0.0; n * n];
        for j in 0..n {
            let mut pivot = corr[j][j];
            for k in 0..j {
                pivot -= lower[j * n + k] * lower[j * n + k];
            }
            if pivot < -PIVOT_TOLERANCE {
                return Err(PortfolioError::CorrelationNotPsd { pivot: j });
            }
            let diag = if pivot > PIVOT_TOLERANCE { pivot.sqrt() } else { 0.0 };
            lower[j * n + j] = diag;
            for i in j + 1..n {
                let mut s = corr[i][j];
                for k in 0..j {
                    s -= lower[i * n + k] * lower[j * n + k];
                }
                if diag > 0.0 {
                    lower[i * n + j] = s / diag;
                } else if s.abs() > 1e-9 {
                    return Err(PortfolioError::CorrelationNotPsd { pivot: j });
                }
            }
        }
        Ok(Self { n, lower })
    }

    pub fn identity(n: usize) -> Self {
        let mut lower = vec![0.0; n * n];
        for i in 0..n {
            lower[i * n + i] = 1.0;
        }
        Self { n, lower }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Writes `L * independent` into `out`.
    pub fn correlate(&self, independent: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let row = &self.lower[i * self.n..i * self.n + i + 1];
            out[i] = row.iter().zip(independent).map(|(l, z)| l * z).sum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(f: &CorrelationFactor) -> Vec<Vec<f64>> {
        let n = f.dim();
        (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| f.lower[i * n + k] * f.lower[j * n + k]).sum()).collect())
            .collect()
    }

    #[test]
    fn factorizes_positive_definite() {
        let corr = vec![vec![1.0, 0.5, 0.2], vec![0.5, 1.0, -0.3], vec![0.2, -0.3, 1.0]];
        let f = CorrelationFactor::new(&corr).unwrap();
        let back = reconstruct(&f);
        for i in 0..3 {
            for j in 0..3 {
                assert!((back[i][j] - corr[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn accepts_perfect_correlation() {
        let corr = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let f = CorrelationFactor::new(&corr).unwrap();
        let mut out = [0.0; 2];
        f.correlate(&[0.7, -2.0], &mut out);
        assert_eq!(out[0], out[1]);
    }

    #[test]
    fn rejects_invalid_matrices() {
        let not_psd = vec![vec![1.0, 0.9, 0.9], vec![0.9, 1.0, -0.9], vec![0.9, -0.9, 1.0]];
        assert!(matches!(CorrelationFactor::new(&not_psd), Err(PortfolioError::CorrelationNotPsd { .. })));
        let asym = vec![vec![1.0, 0.2], vec![0.3, 1.0]];
        assert!(matches!(CorrelationFactor::new(&asym), Err(PortfolioError::CorrelationNotSymmetric { .. })));
        let diag = vec![vec![2.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(CorrelationFactor::new(&diag), Err(PortfolioError::CorrelationDiagonal { .. })));
        let ragged = vec![vec![1.0, 0.0], vec![0.0]];
        assert!(matches!(CorrelationFactor::new(&ragged), Err(PortfolioError::CorrelationShape { .. })));
    }
}
