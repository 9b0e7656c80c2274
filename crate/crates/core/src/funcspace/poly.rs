//! Dense polynomials in the monomial basis, used wherever an input is known
//! to be polynomial so operators can take exact closed-form paths.

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    /// c[i] multiplies t^i.
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: vec![0.0] }
    }

    pub fn monomial(k: usize) -> Self {
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        Polynomial { coeffs: c }
    }

    /// ψ(t) = t − t².
    pub fn psi() -> Self {
        Polynomial { coeffs: vec![0.0, 1.0, -1.0] }
    }

    /// (t − x0)^k.
    pub fn shifted_power(x0: f64, k: usize) -> Self {
        let base = Polynomial::new(vec![-x0, 1.0]);
        let mut acc = Polynomial::new(vec![1.0]);
        for _ in 0..k {
            acc = acc.mul(&base);
        }
        acc
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn scale(&self, a: f64) -> Self {
        Polynomial::new(self.coeffs.iter().map(|c| a * c).collect())
    }

    pub fn lin_comb(a: f64, p: &Polynomial, b: f64, q: &Polynomial) -> Self {
        let n = p.coeffs.len().max(q.coeffs.len());
        let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
        Polynomial::new((0..n).map(|i| a * get(&p.coeffs, i) + b * get(&q.coeffs, i)).collect())
    }

    pub fn mul(&self, other: &Polynomial) -> Self {
        let mut c = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Polynomial::new(c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Polynomial::zero();
        }
        Polynomial::new(self.coeffs.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect())
    }

    /// p(1 − t).
    pub fn reflect(&self) -> Self {
        let base = Polynomial::new(vec![1.0, -1.0]);
        let mut acc = Polynomial::zero();
        let mut pow = Polynomial::new(vec![1.0]);
        for &c in &self.coeffs {
            acc = Polynomial::lin_comb(1.0, &acc, c, &pow);
            pow = pow.mul(&base);
        }
        acc
    }

    /// q with p = ψ·q, if p vanishes at both endpoints up to rounding.
    pub fn div_psi(&self) -> Option<Polynomial> {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(1e-300);
        if self.coeffs[0].abs() > 1e-13 * scale {
            return None;
        }
        // r = p / t, then q = r / (1 − t) by q_i = r_i + q_{i−1}
        let r = &self.coeffs[1..];
        if r.is_empty() {
            return Some(Polynomial::zero());
        }
        let mut q = Vec::with_capacity(r.len());
        let mut acc = 0.0;
        for &ri in r {
            acc += ri;
            q.push(acc);
        }
        let rem = q.pop().unwrap();
        if rem.abs() > 1e-13 * scale * r.len() as f64 {
            return None;
        }
        Some(Polynomial::new(q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let p = Polynomial::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(p.eval(2.0), 17.0);
        assert_eq!(p.derivative().coeffs(), &[2.0, 6.0]);
        assert_eq!(p.mul(&Polynomial::monomial(1)).coeffs(), &[0.0, 1.0, 2.0, 3.0]);
        let r = p.reflect();
        for t in [0.0, 0.3, 1.0] {
            assert!((r.eval(t) - p.eval(1.0 - t)).abs() < 1e-14);
        }
        let s = Polynomial::shifted_power(0.25, 3);
        assert!((s.eval(1.25) - 1.0).abs() < 1e-15);
        assert_eq!(Polynomial::new(vec![0.0, 0.0]).degree(), 0);
    }

    #[test]
    fn division_by_psi() {
        // x³ − x = −ψ·(1 + x)
        let p = Polynomial::new(vec![0.0, -1.0, 0.0, 1.0]);
        let q = p.div_psi().unwrap();
        assert_eq!(q.coeffs(), &[-1.0, -1.0]);
        assert!(Polynomial::monomial(2).div_psi().is_none());
        assert!(Polynomial::new(vec![1.0]).div_psi().is_none());
        assert_eq!(Polynomial::psi().div_psi().unwrap().coeffs(), &[1.0]);
    }
}
