//! Moments of centred Gaussians by Isserlis/Stein recursion.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::hamiltonian::Polynomial;

/// E[Π x_i^{p_i}] for x ~ N(0, cov).
pub struct GaussianMoments<'a> {
    cov: &'a DMatrix<f64>,
    memo: HashMap<Vec<u32>, f64>,
}

impl<'a> GaussianMoments<'a> {
    pub fn new(cov: &'a DMatrix<f64>) -> Self {
        Self {
            cov,
            memo: HashMap::new(),
        }
    }

    pub fn moment(&mut self, powers: &[u32]) -> f64 {
        let total: u32 = powers.iter().sum();
        if total == 0 {
            return 1.0;
        }
        if total % 2 == 1 {
            return 0.0;
        }
        if let Some(v) = self.memo.get(powers) {
            return *v;
        }
        // E[x_i g(x)] = Σ_j Σ_ij E[∂_j g(x)]
        let i = powers.iter().position(|&p| p > 0).unwrap();
        let mut rest = powers.to_vec();
        rest[i] -= 1;
        let mut acc = 0.0;
        for j in 0..rest.len() {
            if rest[j] == 0 || self.cov[(i, j)] == 0.0 {
                continue;
            }
            let mut lower = rest.clone();
            let pj = lower[j] as f64;
            lower[j] -= 1;
            acc += self.cov[(i, j)] * pj * self.moment(&lower);
        }
        self.memo.insert(powers.to_vec(), acc);
        acc
    }

    /// E[p(x)].
    pub fn expectation(&mut self, p: &Polynomial) -> f64 {
        p.terms().iter().map(|t| t.coeff * self.moment(&t.powers)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_double_factorials() {
        let cov = DMatrix::from_element(1, 1, 0.5);
        let mut m = GaussianMoments::new(&cov);
        assert_eq!(m.moment(&[6]), 15.0 / 8.0);
        assert_eq!(m.moment(&[8]), 105.0 / 16.0);
        assert_eq!(m.moment(&[5]), 0.0);
    }

    #[test]
    fn correlated_pair() {
        // E[x²y²] = Σ11Σ22 + 2Σ12², E[x³y] = 3Σ11Σ12
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.5]);
        let mut m = GaussianMoments::new(&cov);
        assert!((m.moment(&[2, 2]) - (1.0 + 2.0 * 0.09)).abs() < 1e-14);
        assert!((m.moment(&[3, 1]) - 3.0 * 2.0 * 0.3).abs() < 1e-14);
        assert!((m.moment(&[0, 4]) - 3.0 * 0.25).abs() < 1e-14);
    }
}
