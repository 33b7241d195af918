//! Multivariate polynomials stored as monomial lists.
//!
//! Derivatives are exact (shift-and-scale of exponents). The same type is used
//! internally for shifted potentials and squared remainders, which may exceed
//! the degree caps enforced on user input.

use crate::error::{invalid, Result};

/// Maximum degree per axis accepted from configuration.
pub const MAX_AXIS_DEGREE: u32 = 8;
/// Maximum total degree of a monomial that involves more than one axis.
pub const MAX_CROSS_DEGREE: u32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub powers: Vec<u32>,
    pub coeff: f64,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.coeff;
        for (&p, &xi) in self.powers.iter().zip(x) {
            if p > 0 {
                v *= xi.powi(p as i32);
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<Monomial>,
}

impl Polynomial {
    /// Validated constructor for user-supplied potentials.
    pub fn new(dim: usize, terms: Vec<Monomial>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return invalid(format!("dimension {dim} not in 1..=3"));
        }
        for t in &terms {
            if t.powers.len() != dim {
                return invalid(format!(
                    "monomial has {} exponents, expected {dim}",
                    t.powers.len()
                ));
            }
            if !t.coeff.is_finite() {
                return invalid("non-finite polynomial coefficient");
            }
            let axes = t.powers.iter().filter(|&&p| p > 0).count();
            if axes > 1 && t.degree() > MAX_CROSS_DEGREE {
                return invalid(format!(
                    "cross term of total degree {} exceeds {MAX_CROSS_DEGREE}",
                    t.degree()
                ));
            }
            if t.powers.iter().any(|&p| p > MAX_AXIS_DEGREE) {
                return invalid(format!("axis degree exceeds {MAX_AXIS_DEGREE}"));
            }
        }
        Ok(Self::from_terms(dim, terms))
    }

    /// One-dimensional polynomial Σ c_k x^k.
    pub fn from_coeffs(coeffs: &[f64]) -> Result<Self> {
        let terms = coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| Monomial {
                powers: vec![k as u32],
                coeff: c,
            })
            .collect();
        Self::new(1, terms)
    }

    /// Unchecked constructor; merges equal exponents and drops zeros.
    pub(crate) fn from_terms(dim: usize, terms: Vec<Monomial>) -> Self {
        let mut merged: Vec<Monomial> = Vec::with_capacity(terms.len());
        for t in terms {
            if let Some(m) = merged.iter_mut().find(|m| m.powers == t.powers) {
                m.coeff += t.coeff;
            } else {
                merged.push(t);
            }
        }
        merged.retain(|m| m.coeff != 0.0);
        merged.sort_by(|a, b| (a.degree(), &a.powers).cmp(&(b.degree(), &b.powers)));
        Self { dim, terms: merged }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Dense 1D coefficient list, `None` for n > 1.
    pub fn coeffs_1d(&self) -> Option<Vec<f64>> {
        if self.dim != 1 {
            return None;
        }
        let mut c = vec![0.0; self.degree() as usize + 1];
        for t in &self.terms {
            c[t.powers[0] as usize] += t.coeff;
        }
        Some(c)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    pub fn partial(&self, axis: usize) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.powers[axis] > 0)
            .map(|t| {
                let mut powers = t.powers.clone();
                let p = powers[axis];
                powers[axis] -= 1;
                Monomial {
                    powers,
                    coeff: t.coeff * p as f64,
                }
            })
            .collect();
        Self::from_terms(self.dim, terms)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| self.partial(i).eval(x)).collect()
    }

    /// Row-major n×n Hessian.
    pub fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            let di = self.partial(i);
            for j in i..n {
                let v = di.partial(j).eval(x);
                h[i * n + j] = v;
                h[j * n + i] = v;
            }
        }
        h
    }

    /// Flat n×n×n third-derivative tensor.
    pub fn third(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut t = vec![0.0; n * n * n];
        for i in 0..n {
            let di = self.partial(i);
            for j in 0..n {
                let dij = di.partial(j);
                for k in 0..n {
                    t[(i * n + j) * n + k] = dij.partial(k).eval(x);
                }
            }
        }
        t
    }

    /// The polynomial y ↦ p(c + y).
    pub fn shifted(&self, c: &[f64]) -> Polynomial {
        let mut out = Vec::new();
        for t in &self.terms {
            // expand Π_i (c_i + y_i)^{p_i}
            let mut partial: Vec<Monomial> = vec![Monomial {
                powers: vec![0; self.dim],
                coeff: t.coeff,
            }];
            for (axis, &p) in t.powers.iter().enumerate() {
                if p == 0 {
                    continue;
                }
                let mut next = Vec::with_capacity(partial.len() * (p as usize + 1));
                for m in &partial {
                    for j in 0..=p {
                        let w = binomial(p, j) * c[axis].powi((p - j) as i32);
                        if w == 0.0 {
                            continue;
                        }
                        let mut powers = m.powers.clone();
                        powers[axis] += j;
                        next.push(Monomial {
                            powers,
                            coeff: m.coeff * w,
                        });
                    }
                }
                partial = next;
            }
            out.extend(partial);
        }
        Self::from_terms(self.dim, out)
    }

    /// Keep only monomials with total degree ≥ `min_degree`.
    pub fn truncate_below(&self, min_degree: u32) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.degree() >= min_degree)
            .cloned()
            .collect();
        Self::from_terms(self.dim, terms)
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                out.push(Monomial {
                    powers: a.powers.iter().zip(&b.powers).map(|(x, y)| x + y).collect(),
                    coeff: a.coeff * b.coeff,
                });
            }
        }
        Self::from_terms(self.dim, out)
    }

    /// Multiply each monomial coefficient by `f(total degree)`.
    pub fn scale_by_degree(&self, f: impl Fn(u32) -> f64) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .map(|t| Monomial {
                powers: t.powers.clone(),
                coeff: t.coeff * f(t.degree()),
            })
            .collect();
        Self::from_terms(self.dim, terms)
    }
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_matches_direct_evaluation() {
        let p = Polynomial::from_coeffs(&[0.3, -1.0, 0.5, 0.0, 0.25]).unwrap();
        let s = p.shifted(&[1.7]);
        for y in [-2.0, -0.3, 0.0, 0.9, 2.5] {
            assert!((s.eval(&[y]) - p.eval(&[1.7 + y])).abs() < 1e-12);
        }
    }

    #[test]
    fn cross_degree_cap_enforced() {
        let t = Monomial {
            powers: vec![3, 2],
            coeff: 1.0,
        };
        assert!(Polynomial::new(2, vec![t]).is_err());
        let ok = Monomial {
            powers: vec![8, 0],
            coeff: 1.0,
        };
        assert!(Polynomial::new(2, vec![ok]).is_ok());
    }

    #[test]
    fn two_dimensional_derivatives() {
        // p = x²y + y⁴
        let p = Polynomial::new(
            2,
            vec![
                Monomial {
                    powers: vec![2, 1],
                    coeff: 1.0,
                },
                Monomial {
                    powers: vec![0, 4],
                    coeff: 1.0,
                },
            ],
        )
        .unwrap();
        let g = p.gradient(&[2.0, 3.0]);
        assert_eq!(g, vec![12.0, 4.0 + 108.0]);
        let h = p.hessian(&[2.0, 3.0]);
        assert_eq!(h, vec![6.0, 4.0, 4.0, 108.0]);
        let t = p.third(&[2.0, 3.0]);
        // ∂x∂x∂y = 2, ∂y³ = 24·3
        assert_eq!(t[1], 2.0);
        assert_eq!(t[7], 72.0);
    }
}
