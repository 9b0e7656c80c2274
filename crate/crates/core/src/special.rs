//! Log-gamma, Beta, binomials and the Bernstein / negative-binomial basis.
//!
//! Products of binomials with powers are assembled in log domain and
//! exponentiated once, so `C(n+k, k)` never has to be formed directly.

use crate::error::{Error, Result};

/// Half of ln(2π).
const LS2PI: f64 = 0.918_938_533_204_672_741_78;

// Rational approximation of ln Γ(2 + z) / z on z ∈ [0, 1) and the
// asymptotic correction for x ≥ 13 (Cephes `lgam` coefficient set).
const LGAM_A: [f64; 5] = [
    8.116_141_674_705_084_503_00E-4,
    -5.950_619_042_843_014_383_24E-4,
    7.936_503_404_577_169_439_45E-4,
    -2.777_777_777_300_996_872_05E-3,
    8.333_333_333_333_319_277_22E-2,
];
const LGAM_B: [f64; 6] = [
    -1.378_251_525_691_208_591_00E3,
    -3.880_163_151_346_378_409_24E4,
    -3.316_129_927_388_711_847_44E5,
    -1.162_370_974_927_623_073_83E6,
    -1.721_737_008_208_396_621_46E6,
    -8.535_556_642_457_654_656_27E5,
];
const LGAM_C: [f64; 6] = [
    -3.518_157_014_365_234_705_49E2,
    -1.706_421_066_518_811_592_23E4,
    -2.205_285_905_538_544_548_39E5,
    -1.139_334_443_679_825_072_07E6,
    -2.532_523_071_775_829_512_85E6,
    -2.018_891_414_335_327_732_31E6,
];

/// ζ(2), …, ζ(40) for the Taylor series of ln Γ about 1.
const ZETA: [f64; 39] = [
    1.6449340668482264365,
    1.2020569031595942854,
    1.0823232337111381915,
    1.0369277551433699263,
    1.0173430619844491397,
    1.0083492773819228268,
    1.0040773561979443394,
    1.0020083928260822144,
    1.0009945751278180853,
    1.0004941886041194646,
    1.0002460865533080483,
    1.0001227133475784891,
    1.0000612481350587048,
    1.0000305882363070205,
    1.0000152822594086519,
    1.0000076371976378998,
    1.0000038172932649998,
    1.0000019082127165539,
    1.0000009539620338728,
    1.0000004769329867878,
    1.0000002384505027277,
    1.0000001192199259653,
    1.0000000596081890513,
    1.0000000298035035147,
    1.0000000149015548284,
    1.0000000074507117898,
    1.0000000037253340248,
    1.0000000018626597235,
    1.0000000009313274324,
    1.0000000004656629065,
    1.0000000002328311834,
    1.0000000001164155017,
    1.0000000000582077209,
    1.0000000000291038504,
    1.0000000000145519219,
    1.0000000000072759598,
    1.0000000000036379795,
    1.0000000000018189897,
    1.0000000000009094948,
];
const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_6;

/// ln Γ(1 + e) for |e| ≤ 1/4 by its Taylor series; relative accuracy survives
/// the zero at e = 0, which the shifted rational form does not.
fn ln_gamma_1p_series(e: f64) -> f64 {
    let mut s = 0.0;
    let mut pow = -e;
    for (i, z) in ZETA.iter().enumerate() {
        pow *= -e;
        s += z * pow / (i + 2) as f64;
    }
    s - EULER_GAMMA * e
}

fn polevl(x: f64, coef: &[f64]) -> f64 {
    coef.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// `1·x^N + c[0]·x^(N-1) + …`, i.e. a monic polynomial.
fn p1evl(x: f64, coef: &[f64]) -> f64 {
    coef.iter().fold(1.0, |acc, &c| acc * x + c)
}

/// Natural log of Γ(x) for x > 0.
///
/// Within 1/4 of the zeros at 1 and 2 a Taylor series is used. Elsewhere below
/// 13 the argument is shifted into [2, 3) for a rational approximation; above,
/// Stirling's series with four correction terms.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("log_gamma needs x > 0, got {x}")));
    }
    if (x - 1.0).abs() <= 0.25 {
        return Ok(ln_gamma_1p_series(x - 1.0));
    }
    if (x - 2.0).abs() <= 0.25 {
        let e = x - 2.0;
        return Ok(ln_gamma_1p_series(e) + e.ln_1p());
    }
    if x < 13.0 {
        let mut z = 1.0;
        let mut u = x;
        while u >= 3.0 {
            u -= 1.0;
            z *= u;
        }
        while u < 2.0 {
            z /= u;
            u += 1.0;
        }
        let lz = z.abs().ln();
        if u == 2.0 {
            return Ok(lz);
        }
        let t = u - 2.0;
        return Ok(lz + t * polevl(t, &LGAM_B) / p1evl(t, &LGAM_C));
    }
    let q = (x - 0.5) * x.ln() - x + LS2PI;
    if x > 1.0e8 {
        return Ok(q);
    }
    let p = 1.0 / (x * x);
    Ok(q + polevl(p, &LGAM_A) / x)
}

/// ln B(a, b).
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!("beta needs a, b > 0, got ({a}, {b})")));
    }
    Ok(log_gamma(a)? + log_gamma(b)? - log_gamma(a + b)?)
}

/// Euler's Beta function B(a, b) = Γ(a)Γ(b)/Γ(a+b).
pub fn beta(a: f64, b: f64) -> Result<f64> {
    ln_beta(a, b).map(f64::exp)
}

/// Largest n for which binomials are computed in exact integer arithmetic.
pub const EXACT_BINOMIAL_MAX: u64 = 30;

fn binomial_u64(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 1..=k {
        // acc * (n - k + i) is divisible by i at every step
        acc = acc * (n - k + i) / i;
    }
    acc
}

/// ln C(n, k). Exact integers up to n = 30, a short product when
/// min(k, n−k) is small, log-gamma otherwise.
pub fn ln_binomial(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::Index { n, k });
    }
    if n <= EXACT_BINOMIAL_MAX {
        return Ok((binomial_u64(n, k) as f64).ln());
    }
    let j = k.min(n - k);
    if j <= 64 {
        let base = (n - j) as f64;
        let mut s = 0.0;
        for i in 1..=j {
            s += ((base + i as f64) / i as f64).ln();
        }
        return Ok(s);
    }
    Ok(log_gamma(n as f64 + 1.0)? - log_gamma(k as f64 + 1.0)? - log_gamma((n - k) as f64 + 1.0)?)
}

/// C(n, k) as a float.
pub fn binomial(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::Index { n, k });
    }
    if n <= EXACT_BINOMIAL_MAX {
        return Ok(binomial_u64(n, k) as f64);
    }
    ln_binomial(n, k).map(f64::exp)
}

/// A real number stored as sign and log-magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDomainValue {
    pub log_abs: f64,
    pub sign: i8,
}

impl LogDomainValue {
    pub const ZERO: LogDomainValue = LogDomainValue { log_abs: f64::NEG_INFINITY, sign: 0 };
    pub const ONE: LogDomainValue = LogDomainValue { log_abs: 0.0, sign: 1 };

    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            LogDomainValue { log_abs: v.abs().ln(), sign: if v > 0.0 { 1 } else { -1 } }
        }
    }

    /// Positive value from its natural log.
    pub fn from_ln(log_abs: f64) -> Self {
        LogDomainValue { log_abs, sign: 1 }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn to_f64(&self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.log_abs.exp(),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, other: Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        LogDomainValue { log_abs: self.log_abs + other.log_abs, sign: self.sign * other.sign }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(self, other: Self) -> Result<Self> {
        if other.is_zero() {
            return Err(Error::Domain("division by zero".into()));
        }
        if self.is_zero() {
            return Ok(Self::ZERO);
        }
        Ok(LogDomainValue { log_abs: self.log_abs - other.log_abs, sign: self.sign * other.sign })
    }

    /// self^p for integer p ≥ 0.
    pub fn powi(self, p: u64) -> Self {
        if p == 0 {
            return Self::ONE;
        }
        if self.is_zero() {
            return Self::ZERO;
        }
        let sign = if self.sign < 0 && p % 2 == 1 { -1 } else { 1 };
        LogDomainValue { log_abs: self.log_abs * p as f64, sign }
    }
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("x = {x} outside [0, 1]")))
    }
}

/// p_{n,k}(x) = C(n,k) x^k (1−x)^(n−k).
pub fn bernstein_basis(n: u64, k: u64, x: f64) -> Result<f64> {
    if k > n {
        return Err(Error::Index { n, k });
    }
    check_unit(x)?;
    if x == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    if x == 1.0 {
        return Ok(if k == n { 1.0 } else { 0.0 });
    }
    if n <= EXACT_BINOMIAL_MAX {
        let c = binomial_u64(n, k) as f64;
        return Ok(c * x.powi(k as i32) * (1.0 - x).powi((n - k) as i32));
    }
    let v = LogDomainValue::from_ln(ln_binomial(n, k)?)
        .mul(LogDomainValue::from_f64(x).powi(k))
        .mul(LogDomainValue::from_ln((-x).ln_1p()).powi(n - k));
    Ok(v.to_f64())
}

/// All of p_{n,0}(x), …, p_{n,n}(x) by the triangular recurrence
/// p_{j,i} = (1−x) p_{j−1,i} + x p_{j−1,i−1}.
pub fn bernstein_basis_all(n: usize, x: f64) -> Vec<f64> {
    let mut b = vec![0.0; n + 1];
    b[0] = 1.0;
    let s = 1.0 - x;
    for j in 1..=n {
        let mut prev = 0.0;
        for bi in b.iter_mut().take(j + 1) {
            let cur = *bi;
            *bi = s * cur + x * prev;
            prev = cur;
        }
    }
    b
}

/// The negative-binomial weight C(n+k, k)(1−x)^(n+1) x^k for x ∈ [0, 1).
pub fn mkz_basis_weight(n: u64, k: u64, x: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::Parameter("mkz weights need n >= 1".into()));
    }
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Domain(format!("mkz weight needs x in [0, 1), got {x}")));
    }
    if x == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    Ok(ln_mkz_weight(n, k, x).exp())
}

/// ln of the negative-binomial weight, x ∈ (0, 1).
pub(crate) fn ln_mkz_weight(n: u64, k: u64, x: f64) -> f64 {
    // ln C(n+k, k) = Σ_{i=1..n} ln(1 + k/i); n is small, so this is exact to a few ulps
    let kf = k as f64;
    let mut lc = 0.0;
    for i in 1..=n {
        lc += (kf / i as f64).ln_1p();
    }
    lc + (n as f64 + 1.0) * (-x).ln_1p() + kf * x.ln()
}
