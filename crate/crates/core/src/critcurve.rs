//! The critical curve in the `p`–`q` plane.
//!
//! `Λ(n,p,q) = (p+1)/(pq-1) - (n-1)/2` and `Υ(n,p,q) = max{Λ(n,p,q), Λ(n,q,p)}`.
//! `Υ > 0` is subcritical (power-law lifespan), `Υ = 0` critical (exponential
//! lifespan), and `Υ < 0` is a region where the blow-up theorem says nothing.

use core::fmt;

use num_rational::Ratio;

/// Exact rational input type used by [`classify_exact`].
pub type Rational = Ratio<i128>;

/// Absolute tolerance used by [`classify`] to detect `Υ = 0` for float inputs.
pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CritError {
    /// `p <= 1` or `q <= 1`; `pq - 1` would not be positive.
    ExponentOutOfRange { p: f64, q: f64 },
    /// Dimension must be at least one.
    InvalidDimension(u32),
    /// `n = 1`: every `p > 1` blows up, there is no finite critical exponent.
    NoCriticalExponent,
    /// The regime is [`RegimeTag::OutsideTheorem`].
    TheoremSilent,
}

impl fmt::Display for CritError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CritError::ExponentOutOfRange { p, q } => {
                write!(f, "exponents must satisfy p > 1 and q > 1 (got p = {p}, q = {q})")
            }
            CritError::InvalidDimension(n) => write!(f, "dimension must be >= 1 (got {n})"),
            CritError::NoCriticalExponent => {
                f.write_str("n = 1 has no critical exponent: all p > 1 blow up")
            }
            CritError::TheoremSilent => {
                f.write_str("Υ(n,p,q) < 0: the blow-up theorem gives no lifespan bound")
            }
        }
    }
}

impl core::error::Error for CritError {}

/// A validated pair of nonlinearity exponents, `p > 1` and `q > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExponentPair {
    p: f64,
    q: f64,
}

impl ExponentPair {
    pub fn new(p: f64, q: f64) -> Result<Self, CritError> {
        if p > 1.0 && q > 1.0 && p.is_finite() && q.is_finite() {
            Ok(Self { p, q })
        } else {
            Err(CritError::ExponentOutOfRange { p, q })
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn swapped(&self) -> Self {
        Self { p: self.q, q: self.p }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RegimeTag {
    Subcritical,
    CriticalOffDiagonal,
    CriticalDiagonal,
    OutsideTheorem,
}

impl RegimeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeTag::Subcritical => "subcritical",
            RegimeTag::CriticalOffDiagonal => "critical_off_diagonal",
            RegimeTag::CriticalDiagonal => "critical_diagonal",
            RegimeTag::OutsideTheorem => "outside_theorem",
        }
    }

    pub fn is_critical(&self) -> bool {
        matches!(self, RegimeTag::CriticalOffDiagonal | RegimeTag::CriticalDiagonal)
    }
}

impl fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Regime {
    pub tag: RegimeTag,
    pub lambda_pq: f64,
    pub lambda_qp: f64,
    pub upsilon: f64,
}

/// Shape of the predicted lifespan upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LifespanLaw {
    /// `T(ε) <= C ε^{exponent}` with `exponent = -1/Υ`.
    PowerLaw { exponent: f64 },
    /// `log T(ε) <= C ε^{rate_exponent}`; `rate_exponent` is `-(pq-1)` off the
    /// diagonal and `-(p-1)` on it.
    ExpPower { rate_exponent: f64 },
}

impl LifespanLaw {
    /// Human readable formula, e.g. `T <= C eps^-2`.
    pub fn formula(&self) -> alloc::string::String {
        match self {
            LifespanLaw::PowerLaw { exponent } => alloc::format!("T <= C eps^({exponent})"),
            LifespanLaw::ExpPower { rate_exponent } => {
                alloc::format!("T <= exp(C eps^({rate_exponent}))")
            }
        }
    }
}

fn check(n: u32, p: f64, q: f64) -> Result<(), CritError> {
    if n == 0 {
        return Err(CritError::InvalidDimension(n));
    }
    ExponentPair::new(p, q).map(|_| ())
}

/// `Λ(n,p,q) = (p+1)/(pq-1) - (n-1)/2`.
pub fn lambda(n: u32, p: f64, q: f64) -> Result<f64, CritError> {
    check(n, p, q)?;
    Ok((p + 1.0) / (p * q - 1.0) - (n as f64 - 1.0) / 2.0)
}

/// `Υ(n,p,q) = max{Λ(n,p,q), Λ(n,q,p)}`.
pub fn upsilon(n: u32, p: f64, q: f64) -> Result<f64, CritError> {
    Ok(lambda(n, p, q)?.max(lambda(n, q, p)?))
}

/// Glassey exponent `(n+1)/(n-1)`.
pub fn glassey(n: u32) -> Result<f64, CritError> {
    match n {
        0 => Err(CritError::InvalidDimension(0)),
        1 => Err(CritError::NoCriticalExponent),
        _ => Ok((n as f64 + 1.0) / (n as f64 - 1.0)),
    }
}

fn tag_from(upsilon_sign: core::cmp::Ordering, diagonal: bool) -> RegimeTag {
    use core::cmp::Ordering::*;
    match upsilon_sign {
        Greater => RegimeTag::Subcritical,
        Less => RegimeTag::OutsideTheorem,
        Equal if diagonal => RegimeTag::CriticalDiagonal,
        Equal => RegimeTag::CriticalOffDiagonal,
    }
}

/// Classify with [`DEFAULT_TIE_TOLERANCE`].
pub fn classify(n: u32, p: f64, q: f64) -> Result<Regime, CritError> {
    classify_with_tolerance(n, p, q, DEFAULT_TIE_TOLERANCE)
}

/// Float classification; `|Υ| <= tol` counts as critical and `|p - q| <= tol`
/// as diagonal.
pub fn classify_with_tolerance(n: u32, p: f64, q: f64, tol: f64) -> Result<Regime, CritError> {
    let lambda_pq = lambda(n, p, q)?;
    let lambda_qp = lambda(n, q, p)?;
    let upsilon = lambda_pq.max(lambda_qp);
    let sign = if upsilon.abs() <= tol {
        core::cmp::Ordering::Equal
    } else if upsilon > 0.0 {
        core::cmp::Ordering::Greater
    } else {
        core::cmp::Ordering::Less
    };
    Ok(Regime { tag: tag_from(sign, (p - q).abs() <= tol), lambda_pq, lambda_qp, upsilon })
}

/// Exact `Λ` over the rationals.
pub fn lambda_exact(n: u32, p: Rational, q: Rational) -> Result<Rational, CritError> {
    let one = Rational::from_integer(1);
    check(n, to_f64(p), to_f64(q))?;
    Ok((p + one) / (p * q - one) - Rational::new(n as i128 - 1, 2))
}

/// Exact classification: ties on the critical curve are decided without
/// tolerance.
pub fn classify_exact(n: u32, p: Rational, q: Rational) -> Result<Regime, CritError> {
    let lpq = lambda_exact(n, p, q)?;
    let lqp = lambda_exact(n, q, p)?;
    let ups = if lpq > lqp { lpq } else { lqp };
    let zero = Rational::from_integer(0);
    Ok(Regime {
        tag: tag_from(ups.cmp(&zero), p == q),
        lambda_pq: to_f64(lpq),
        lambda_qp: to_f64(lqp),
        upsilon: to_f64(ups),
    })
}

pub fn to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Parse `"7/3"`, `"2"` or a finite decimal such as `"1.5"` into a rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: i128 = num.trim().parse().ok()?;
        let den: i128 = den.trim().parse().ok()?;
        if den == 0 {
            return None;
        }
        return Some(Rational::new(num, den));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    if frac_part.len() > 30 {
        return None;
    }
    let digits = alloc::format!("{int_part}{frac_part}");
    let numer: i128 = digits.parse().ok()?;
    let denom = 10i128.checked_pow(frac_part.len() as u32)?;
    let r = Rational::new(numer, denom);
    Some(if neg { -r } else { r })
}

/// Predicted lifespan law for a regime.
pub fn predicted_lifespan_exponent(
    regime: &Regime,
    _n: u32,
    p: f64,
    q: f64,
) -> Result<LifespanLaw, CritError> {
    match regime.tag {
        RegimeTag::Subcritical => Ok(LifespanLaw::PowerLaw { exponent: -1.0 / regime.upsilon }),
        RegimeTag::CriticalOffDiagonal => {
            Ok(LifespanLaw::ExpPower { rate_exponent: -(p * q - 1.0) })
        }
        RegimeTag::CriticalDiagonal => Ok(LifespanLaw::ExpPower { rate_exponent: -(p - 1.0) }),
        RegimeTag::OutsideTheorem => Err(CritError::TheoremSilent),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(a: i128, b: i128) -> Rational {
        Rational::new(a, b)
    }

    #[test]
    fn lambda_golden_values() {
        assert_eq!(lambda(1, 2.0, 2.0).unwrap(), 1.0);
        assert!((lambda(2, 2.0, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(lambda(3, 2.0, 2.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn lambda_rejects_bad_exponents() {
        assert!(matches!(lambda(2, 1.0, 3.0), Err(CritError::ExponentOutOfRange { .. })));
        assert!(matches!(lambda(2, 3.0, 0.5), Err(CritError::ExponentOutOfRange { .. })));
        assert!(lambda(0, 2.0, 2.0).is_err());
    }

    #[test]
    fn upsilon_golden_values() {
        assert!((upsilon(3, 2.0, 3.0).unwrap() - (-0.2)).abs() < 1e-15);
        assert_eq!(upsilon(1, 2.0, 2.0).unwrap(), 1.0);
        let u = upsilon(2, 1.5, 3.0).unwrap();
        assert!((u - (4.0 / 3.5 - 0.5)).abs() < 1e-15);
        assert!((u - 0.642_857_142_857).abs() < 1e-9);
    }

    #[test]
    fn glassey_values() {
        assert_eq!(glassey(2).unwrap(), 3.0);
        assert_eq!(glassey(3).unwrap(), 2.0);
        assert_eq!(glassey(5).unwrap(), 1.5);
        assert_eq!(glassey(1), Err(CritError::NoCriticalExponent));
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(3, 2.0, 2.0).unwrap().tag, RegimeTag::CriticalDiagonal);
        assert_eq!(classify(2, 2.0, 2.0).unwrap().tag, RegimeTag::Subcritical);
        let out = classify(3, 3.0, 3.0).unwrap();
        assert_eq!(out.tag, RegimeTag::OutsideTheorem);
        assert!((out.upsilon + 0.5).abs() < 1e-15);
    }

    #[test]
    fn off_diagonal_critical_needs_the_larger_exponent_on_the_curve() {
        // Λ(3, 1.5, 7/3) = 0 but Λ(3, 7/3, 1.5) = 1/3, so Υ > 0.
        let reg = classify_exact(3, r(3, 2), r(7, 3)).unwrap();
        assert_eq!(reg.tag, RegimeTag::Subcritical);
        assert!(reg.lambda_pq.abs() < 1e-15);
        assert!((reg.lambda_qp - 1.0 / 3.0).abs() < 1e-15);
        // (7/3, 13/7) sits on the curve: (p+1)/(pq-1) = 1 = (n-1)/2.
        let reg = classify_exact(3, r(7, 3), r(13, 7)).unwrap();
        assert_eq!(reg.tag, RegimeTag::CriticalOffDiagonal);
        assert_eq!(reg.upsilon, 0.0);
    }

    #[test]
    fn exact_and_float_agree_off_the_curve() {
        for &(n, p, q) in &[(2u32, (2, 1), (2, 1)), (3, (3, 1), (3, 1)), (2, (3, 2), (3, 1))] {
            let pe = r(p.0, p.1);
            let qe = r(q.0, q.1);
            let a = classify_exact(n, pe, qe).unwrap();
            let b = classify(n, to_f64(pe), to_f64(qe)).unwrap();
            assert_eq!(a.tag, b.tag);
            assert!((a.upsilon - b.upsilon).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_classification_of_glassey_diagonal() {
        for n in 2..8u32 {
            let pg = r(n as i128 + 1, n as i128 - 1);
            assert_eq!(classify_exact(n, pg, pg).unwrap().tag, RegimeTag::CriticalDiagonal);
        }
    }

    #[test]
    fn predicted_law_examples() {
        let reg = classify(2, 2.0, 2.0).unwrap();
        assert_eq!(
            predicted_lifespan_exponent(&reg, 2, 2.0, 2.0).unwrap(),
            LifespanLaw::PowerLaw { exponent: -2.0 }
        );
        let reg = classify(3, 2.0, 2.0).unwrap();
        assert_eq!(
            predicted_lifespan_exponent(&reg, 3, 2.0, 2.0).unwrap(),
            LifespanLaw::ExpPower { rate_exponent: -1.0 }
        );
        let reg = classify_exact(3, r(7, 3), r(13, 7)).unwrap();
        match predicted_lifespan_exponent(&reg, 3, 7.0 / 3.0, 13.0 / 7.0).unwrap() {
            LifespanLaw::ExpPower { rate_exponent } => {
                assert!((rate_exponent + 10.0 / 3.0).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
        let reg = classify(3, 3.0, 3.0).unwrap();
        assert_eq!(predicted_lifespan_exponent(&reg, 3, 3.0, 3.0), Err(CritError::TheoremSilent));
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("7/3"), Some(r(7, 3)));
        assert_eq!(parse_rational("1.5"), Some(r(3, 2)));
        assert_eq!(parse_rational("2"), Some(r(2, 1)));
        assert_eq!(parse_rational("-0.25"), Some(r(-1, 4)));
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("1/0"), None);
    }

    #[test]
    fn diagonal_reduction_on_grid() {
        for n in 2..7u32 {
            let pg = glassey(n).unwrap();
            assert!(lambda(n, pg, pg).unwrap().abs() < 1e-12);
            for k in 1..40 {
                let p = 1.0 + 0.1 * k as f64;
                let lhs = lambda(n, p, p).unwrap();
                let rhs = 1.0 / (p - 1.0) - (n as f64 - 1.0) / 2.0;
                assert!((lhs - rhs).abs() < 1e-12);
                if (p - pg).abs() > 1e-9 {
                    assert!(lhs.abs() > 1e-12);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn upsilon_symmetric(n in 1u32..8, p in 1.001f64..10.0, q in 1.001f64..10.0) {
            prop_assert_eq!(upsilon(n, p, q).unwrap(), upsilon(n, q, p).unwrap());
        }

        #[test]
        fn off_diagonal_dominance(p in 1.001f64..10.0, q in 1.001f64..10.0) {
            let m = p.max(q);
            let lhs = (m + 1.0) / (p * q - 1.0);
            let rhs = 1.0 / (m - 1.0);
            prop_assert!(lhs >= rhs * (1.0 - 1e-12));
            if (p - q).abs() > 1e-6 {
                prop_assert!(lhs > rhs);
            }
        }

        #[test]
        fn lambda_strictly_decreasing_in_n(n in 1u32..20, p in 1.001f64..10.0, q in 1.001f64..10.0) {
            prop_assert!(lambda(n + 1, p, q).unwrap() < lambda(n, p, q).unwrap());
        }

        #[test]
        fn regime_invariants(n in 1u32..6, p in 1.01f64..6.0, q in 1.01f64..6.0) {
            let reg = classify(n, p, q).unwrap();
            prop_assert_eq!(reg.upsilon, reg.lambda_pq.max(reg.lambda_qp));
            match reg.tag {
                RegimeTag::Subcritical => prop_assert!(reg.upsilon > 0.0),
                RegimeTag::OutsideTheorem => prop_assert!(reg.upsilon < 0.0),
                RegimeTag::CriticalDiagonal => prop_assert!((p - q).abs() <= 1e-12),
                RegimeTag::CriticalOffDiagonal => prop_assert!(reg.upsilon.abs() <= 1e-12),
            }
        }
    }
}
