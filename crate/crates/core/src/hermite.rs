//! Normalised Hermite functions h_k(x) = (2^k k! √π)^{-1/2} H_k(x) e^{-x²/2}.

/// Rows h_0..=h_order evaluated at `xs`, via the stable three-term recurrence.
pub fn hermite_table(order: usize, xs: &[f64]) -> Vec<Vec<f64>> {
    let mut table = vec![vec![0.0; xs.len()]; order + 1];
    let c0 = std::f64::consts::PI.powf(-0.25);
    for (j, &x) in xs.iter().enumerate() {
        let mut prev = 0.0;
        let mut cur = c0 * (-0.5 * x * x).exp();
        table[0][j] = cur;
        for k in 0..order {
            let kf = k as f64;
            let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
            table[k + 1][j] = cur;
        }
    }
    table
}

pub fn hermite_function(k: usize, x: f64) -> f64 {
    hermite_table(k, &[x])[k][0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_by_quadrature() {
        let dx = 0.02;
        let xs: Vec<f64> = (0..2000).map(|j| -20.0 + dx * j as f64).collect();
        let t = hermite_table(40, &xs);
        for a in [0, 1, 7, 40] {
            for b in [0, 1, 7, 40] {
                let s: f64 = t[a].iter().zip(&t[b]).map(|(u, v)| u * v).sum::<f64>() * dx;
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-12, "{a} {b} {s}");
            }
        }
    }

    #[test]
    fn closed_forms() {
        let x: f64 = 0.83;
        let g = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
        assert!((hermite_function(1, x) - 2f64.sqrt() * x * g).abs() < 1e-15);
        assert!((hermite_function(2, x) - (2.0 * x * x - 1.0) / 2f64.sqrt() * g).abs() < 1e-15);
    }
}
