//! Generalized binomial coefficients and truncated real power series.

/// `binom(a, k) = a (a-1) ... (a-k+1) / k!`, exactly zero for `k > a` when `a` is a
/// non-negative integer.
pub fn binom(a: f64, k: usize) -> f64 {
    let mut c = 1.0;
    for j in 0..k {
        c *= (a - j as f64) / (j as f64 + 1.0);
    }
    c
}

/// Coefficients `c_0, c_1, ...` of a power series in one real variable,
/// truncated at a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries(pub Vec<f64>);

impl PowerSeries {
    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn constant(c: f64, n: usize) -> Self {
        let mut v = vec![0.0; n];
        v[0] = c;
        Self(v)
    }

    /// `(1 - x)^a`.
    pub fn one_minus_x_pow(a: f64, n: usize) -> Self {
        Self((0..n).map(|k| binom(a, k) * if k % 2 == 0 { 1.0 } else { -1.0 }).collect())
    }

    pub fn add(&self, o: &Self) -> Self {
        Self(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.iter().map(|a| a * s).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.order().min(o.order());
        let mut v = vec![0.0; n];
        for i in 0..n {
            for j in 0..n - i {
                v[i + j] += self.0[i] * o.0[j];
            }
        }
        Self(v)
    }

    /// Quotient; the divisor must have a non-zero constant term.
    pub fn div(&self, o: &Self) -> Self {
        let n = self.order().min(o.order());
        let mut q = vec![0.0; n];
        for k in 0..n {
            let mut s = self.0[k];
            for j in 1..=k {
                s -= o.0[j] * q[k - j];
            }
            q[k] = s / o.0[0];
        }
        Self(q)
    }

    /// Divide by `x^k`, dropping the (assumed vanishing) low coefficients.
    pub fn shift_down(&self, k: usize) -> Self {
        Self(self.0[k..].to_vec())
    }

    /// Multiply by `x^k`, keeping the order.
    pub fn shift_up(&self, k: usize) -> Self {
        let n = self.order();
        let mut v = vec![0.0; n];
        v[k..n].copy_from_slice(&self.0[..n - k]);
        Self(v)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}
