//! Kato's lemma: `H'' >= B (t+R)^{-b} |H|^r`, `H >= A t^a` and
//! `M = (r-1)a/2 - b/2 + 1 > 0` force blow-up before `2^{2/M} T1`.

use core::fmt;

use libm::pow;

use crate::critcurve::{self, CritError};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KatoInstance {
    pub r: f64,
    pub a: f64,
    pub b: f64,
    #[cfg_attr(feature = "serde", serde(rename = "A"))]
    pub big_a: f64,
    #[cfg_attr(feature = "serde", serde(rename = "B"))]
    pub big_b: f64,
    #[cfg_attr(feature = "serde", serde(rename = "R"))]
    pub big_r: f64,
    #[cfg_attr(feature = "serde", serde(rename = "T0"))]
    pub t0: f64,
    #[cfg_attr(feature = "serde", serde(rename = "H0"))]
    pub h0: f64,
    #[cfg_attr(feature = "serde", serde(rename = "H0prime"))]
    pub h0_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KatoBound {
    #[cfg_attr(feature = "serde", serde(rename = "M"))]
    pub m: f64,
    #[cfg_attr(feature = "serde", serde(rename = "T1"))]
    pub t1: f64,
    /// `C0 A^{-(r-1)/(2M)}`, the lower bound `T1` must reach.
    pub threshold: f64,
    /// Exponent `(r-1)/(2M)` of `A` in the threshold.
    pub a_exponent: f64,
    /// `2^{2/M} T1`.
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KatoError {
    /// `M <= 0`: the lemma does not apply.
    Inapplicable { m: f64 },
    /// `T1 < C0 A^{-(r-1)/(2M)}`: no upper bound is licensed.
    SideConditionUnmet { t1: f64, threshold: f64 },
    InvalidParameter(&'static str),
    Crit(CritError),
}

impl fmt::Display for KatoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KatoError::Inapplicable { m } => write!(f, "lemma inapplicable: M = {m} <= 0"),
            KatoError::SideConditionUnmet { t1, threshold } => {
                write!(f, "side condition unmet: T1 = {t1} < C0 A^(-(r-1)/(2M)) = {threshold}")
            }
            KatoError::InvalidParameter(s) => write!(f, "invalid Kato parameter: {s}"),
            KatoError::Crit(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for KatoError {}

impl From<CritError> for KatoError {
    fn from(e: CritError) -> Self {
        KatoError::Crit(e)
    }
}

/// `M = (r-1)a/2 - b/2 + 1`.
pub fn kato_m(r: f64, a: f64, b: f64) -> f64 {
    (r - 1.0) * a / 2.0 - b / 2.0 + 1.0
}

// T1 and the threshold are computed along different floating paths; when they
// agree analytically they may differ in the last bits.
const SIDE_CONDITION_SLACK: f64 = 1e-12;

pub fn kato_bound(inst: &KatoInstance, c0: f64) -> Result<KatoBound, KatoError> {
    let KatoInstance { r, a, b, big_a, big_b, big_r, t0, h0, h0_prime } = *inst;
    if !(r > 1.0 && a > 0.0 && b > 0.0) {
        return Err(KatoError::InvalidParameter("need r > 1, a > 0, b > 0"));
    }
    if !(big_a > 0.0 && big_b > 0.0 && big_r > 0.0 && t0 > 0.0 && h0 >= 0.0 && h0_prime > 0.0) {
        return Err(KatoError::InvalidParameter("need A, B, R, T0, H0' > 0 and H0 >= 0"));
    }
    if !(c0 > 0.0) {
        return Err(KatoError::InvalidParameter("need C0 > 0"));
    }
    let m = kato_m(r, a, b);
    if !(m > 0.0) {
        return Err(KatoError::Inapplicable { m });
    }
    let t1 = t0.max(h0 / h0_prime).max(big_r);
    let a_exponent = (r - 1.0) / (2.0 * m);
    let threshold = c0 * pow(big_a, -a_exponent);
    if t1 < threshold * (1.0 - SIDE_CONDITION_SLACK) {
        return Err(KatoError::SideConditionUnmet { t1, threshold });
    }
    Ok(KatoBound { m, t1, threshold, a_exponent, bound: pow(2.0, 2.0 / m) * t1 })
}

/// The subcritical instantiation for the frame: `r = pq`, `a = 1`,
/// `b = (n-1)(pq-1)/2 + p(q-1)`, `A = A0 ε`, `T0 = (A0 ε)^{-1/Λ(n,p,q)}`,
/// `R = 1`, `H(0) = 0`.
pub fn subcritical_instance(
    n: u32,
    p: f64,
    q: f64,
    a0: f64,
    eps: f64,
) -> Result<KatoInstance, KatoError> {
    let lam = critcurve::lambda(n, p, q)?;
    if !(lam > 0.0) {
        return Err(KatoError::InvalidParameter("Λ(n,p,q) must be positive"));
    }
    if !(a0 > 0.0 && eps > 0.0) {
        return Err(KatoError::InvalidParameter("need A0 > 0 and eps > 0"));
    }
    let a = a0 * eps;
    Ok(KatoInstance {
        r: p * q,
        a: 1.0,
        b: (n as f64 - 1.0) * (p * q - 1.0) / 2.0 + p * (q - 1.0),
        big_a: a,
        big_b: 1.0,
        big_r: 1.0,
        t0: pow(a, -1.0 / lam),
        h0: 0.0,
        h0_prime: 1.0,
    })
}
