//! Summable damping coefficients `b(t)` and their multipliers
//! `m(t) = exp(-∫_t^∞ b)`.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use libm::{exp, fabs, pow, sin};

use crate::quad::CompensatedSum;

#[derive(Debug, Clone, PartialEq)]
pub enum MultiplierError {
    /// `β <= 1`: the damping is not integrable.
    NotSummable { beta: f64 },
    /// Negative amplitude, nonpositive support length or non-finite parameters.
    InvalidParameter(&'static str),
    /// Tabulated values do not decay by the end of the grid.
    TailNotResolved { last: f64, max: f64 },
    NegativeTime(f64),
}

impl fmt::Display for MultiplierError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MultiplierError::NotSummable { beta } => {
                write!(f, "power tail with beta = {beta} <= 1 is not summable")
            }
            MultiplierError::InvalidParameter(what) => write!(f, "invalid damping parameter: {what}"),
            MultiplierError::TailNotResolved { last, max } => write!(
                f,
                "tail not resolved: tabulated damping ends at {last:e} (max {max:e}); extend the grid"
            ),
            MultiplierError::NegativeTime(t) => write!(f, "time must be nonnegative (got {t})"),
        }
    }
}

impl core::error::Error for MultiplierError {}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum DampingKind {
    Zero,
    /// `b(t) = mu (1+t)^{-beta}`.
    PowerTail { mu: f64, beta: f64 },
    /// `b(t) = mu sin²(π t / t_end)` on `[0, t_end]`, zero afterwards.
    CompactBump { mu: f64, t_end: f64 },
    /// Piecewise linear through `(grid[i], values[i])`, zero past the last node.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DampingProfile {
    pub kind: DampingKind,
    pub description: String,
}

/// A tail integral together with its error estimate (zero for closed forms).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tail {
    pub value: f64,
    pub error: f64,
}

/// Threshold relative to `max b` below which the last tabulated value counts
/// as decayed.
pub const TAIL_DECAY_TOL: f64 = 1e-8;

impl DampingProfile {
    pub fn zero() -> Self {
        Self { kind: DampingKind::Zero, description: String::from("zero") }
    }

    pub fn power_tail(mu: f64, beta: f64) -> Result<Self, MultiplierError> {
        let p = Self {
            kind: DampingKind::PowerTail { mu, beta },
            description: alloc::format!("{mu}*(1+t)^-{beta}"),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn compact_bump(mu: f64, t_end: f64) -> Result<Self, MultiplierError> {
        let p = Self {
            kind: DampingKind::CompactBump { mu, t_end },
            description: alloc::format!("{mu}*sin^2(pi t/{t_end}) on [0,{t_end}]"),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>) -> Result<Self, MultiplierError> {
        let description = alloc::format!("tabulated ({} nodes)", grid.len());
        let p = Self { kind: DampingKind::Tabulated { grid, values }, description };
        p.validate()?;
        Ok(p)
    }

    /// Checks the structural invariants: nonnegativity and summability.
    /// Decay of tabulated data is checked by [`DampingProfile::tail_integral`].
    pub fn validate(&self) -> Result<(), MultiplierError> {
        match &self.kind {
            DampingKind::Zero => Ok(()),
            DampingKind::PowerTail { mu, beta } => {
                if !(mu.is_finite() && *mu >= 0.0) {
                    return Err(MultiplierError::InvalidParameter("mu must be finite and >= 0"));
                }
                if !beta.is_finite() || *beta <= 1.0 {
                    return Err(MultiplierError::NotSummable { beta: *beta });
                }
                Ok(())
            }
            DampingKind::CompactBump { mu, t_end } => {
                if !(mu.is_finite() && *mu >= 0.0) {
                    return Err(MultiplierError::InvalidParameter("mu must be finite and >= 0"));
                }
                if !(t_end.is_finite() && *t_end > 0.0) {
                    return Err(MultiplierError::InvalidParameter("t_end must be positive"));
                }
                Ok(())
            }
            DampingKind::Tabulated { grid, values } => {
                if grid.len() < 2 || grid.len() != values.len() {
                    return Err(MultiplierError::InvalidParameter(
                        "tabulated profile needs >= 2 nodes and matching lengths",
                    ));
                }
                if grid[0] != 0.0 {
                    return Err(MultiplierError::InvalidParameter("tabulated grid must start at 0"));
                }
                if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|g| !g.is_finite()) {
                    return Err(MultiplierError::InvalidParameter(
                        "tabulated grid must be strictly increasing",
                    ));
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(MultiplierError::InvalidParameter(
                        "tabulated values must be finite and >= 0",
                    ));
                }
                Ok(())
            }
        }
    }

    /// The damping coefficient `b(t)`.
    pub fn b(&self, t: f64) -> f64 {
        match &self.kind {
            DampingKind::Zero => 0.0,
            DampingKind::PowerTail { mu, beta } => mu * pow(1.0 + t, -beta),
            DampingKind::CompactBump { mu, t_end } => {
                if t < 0.0 || t > *t_end {
                    0.0
                } else {
                    let s = sin(PI * t / t_end);
                    mu * s * s
                }
            }
            DampingKind::Tabulated { grid, values } => interp(grid, values, t),
        }
    }

    /// `∫_t^∞ b(τ) dτ`.
    pub fn tail_integral(&self, t: f64) -> Result<Tail, MultiplierError> {
        if !(t >= 0.0) {
            return Err(MultiplierError::NegativeTime(t));
        }
        self.validate()?;
        let exact = |value| Ok(Tail { value, error: 0.0 });
        match &self.kind {
            DampingKind::Zero => exact(0.0),
            DampingKind::PowerTail { mu, beta } => {
                exact(mu * pow(1.0 + t, 1.0 - beta) / (beta - 1.0))
            }
            DampingKind::CompactBump { mu, t_end } => {
                if t >= *t_end {
                    exact(0.0)
                } else {
                    // ∫ sin² = x/2 - sin(2x)/4 in x = π τ / t_end
                    let rest = (t_end - t) / 2.0 + t_end / (4.0 * PI) * sin(2.0 * PI * t / t_end);
                    exact(mu * rest)
                }
            }
            DampingKind::Tabulated { grid, values } => {
                check_decay(values)?;
                Ok(tabulated_tail(grid, values, t))
            }
        }
    }

    /// `m(t) = exp(-∫_t^∞ b)`.
    pub fn m(&self, t: f64) -> Result<f64, MultiplierError> {
        Ok(exp(-self.tail_integral(t)?.value))
    }
}

fn check_decay(values: &[f64]) -> Result<(), MultiplierError> {
    let max = values.iter().cloned().fold(0.0, f64::max);
    let last = *values.last().unwrap_or(&0.0);
    if last > TAIL_DECAY_TOL * max {
        Err(MultiplierError::TailNotResolved { last, max })
    } else {
        Ok(())
    }
}

fn interp(grid: &[f64], values: &[f64], t: f64) -> f64 {
    if t < grid[0] || t > grid[grid.len() - 1] {
        return 0.0;
    }
    let i = match grid.binary_search_by(|g| g.partial_cmp(&t).unwrap_or(core::cmp::Ordering::Less)) {
        Ok(i) => return values[i],
        Err(i) => i,
    };
    let (x0, x1) = (grid[i - 1], grid[i]);
    let w = (t - x0) / (x1 - x0);
    values[i - 1] * (1.0 - w) + values[i] * w
}

/// Trapezoid tail of the tabulated data from `t`, with a Richardson estimate
/// from the same sum on every other node.
fn tabulated_tail(grid: &[f64], values: &[f64], t: f64) -> Tail {
    let last = grid[grid.len() - 1];
    if t >= last {
        return Tail { value: 0.0, error: 0.0 };
    }
    let start = grid.partition_point(|g| *g <= t);
    let mut xs = Vec::with_capacity(grid.len() - start + 1);
    let mut ys = Vec::with_capacity(grid.len() - start + 1);
    xs.push(t);
    ys.push(interp(grid, values, t));
    xs.extend_from_slice(&grid[start..]);
    ys.extend_from_slice(&values[start..]);
    let fine = trap(&xs, &ys, 1);
    let coarse = trap(&xs, &ys, 2);
    Tail { value: fine, error: fabs(fine - coarse) / 3.0 }
}

fn trap(xs: &[f64], ys: &[f64], stride: usize) -> f64 {
    let mut s = CompensatedSum::new();
    let mut i = 0;
    while i + stride < xs.len() {
        let j = i + stride;
        s.add(0.5 * (xs[j] - xs[i]) * (ys[j] + ys[i]));
        i = j;
    }
    if i + 1 < xs.len() {
        let j = xs.len() - 1;
        s.add(0.5 * (xs[j] - xs[i]) * (ys[j] + ys[i]));
    }
    s.value()
}

/// A profile whose tail integral is known to be well defined, so that `m(t)`
/// is infallible.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Multiplier {
    pub profile: DampingProfile,
    pub m0: f64,
}

impl Multiplier {
    pub fn new(profile: DampingProfile) -> Result<Self, MultiplierError> {
        let m0 = profile.m(0.0)?;
        Ok(Self { profile, m0 })
    }

    pub fn m(&self, t: f64) -> f64 {
        self.profile.m(t.max(0.0)).unwrap_or(1.0)
    }

    pub fn b(&self, t: f64) -> f64 {
        self.profile.b(t)
    }
}

/// `|m'(t) - b(t) m(t)|` with `m'` from a second-order difference: centred
/// for `t >= h`, one-sided forward otherwise.
pub fn m_derivative_check(profile: &DampingProfile, t: f64, h: f64) -> Result<f64, MultiplierError> {
    let m = |s: f64| profile.m(s);
    let dm = if t >= h {
        (m(t + h)? - m(t - h)?) / (2.0 * h)
    } else {
        (-3.0 * m(t)? + 4.0 * m(t + h)? - m(t + 2.0 * h)?) / (2.0 * h)
    };
    Ok(fabs(dm - profile.b(t) * m(t)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tail_examples() {
        assert_eq!(DampingProfile::zero().tail_integral(3.0).unwrap().value, 0.0);
        let p = DampingProfile::power_tail(1.0, 2.0).unwrap();
        assert!((p.tail_integral(0.0).unwrap().value - 1.0).abs() < 1e-15);
        let p = DampingProfile::power_tail(3.0, 4.0).unwrap();
        assert!((p.tail_integral(1.0).unwrap().value - 0.125).abs() < 1e-15);
    }

    #[test]
    fn m_examples() {
        assert_eq!(DampingProfile::zero().m(7.0).unwrap(), 1.0);
        let p = DampingProfile::power_tail(1.0, 2.0).unwrap();
        assert!((p.m(0.0).unwrap() - 0.367_879_441_171_442_3).abs() < 1e-15);
        let p = DampingProfile::power_tail(2.0, 3.0).unwrap();
        assert!((p.m(1e5).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn derivative_check_examples() {
        let z = DampingProfile::zero();
        assert!(m_derivative_check(&z, 1.0, 1e-4).unwrap() < 1e-12);
        let p = DampingProfile::power_tail(1.0, 2.0).unwrap();
        assert!(m_derivative_check(&p, 0.5, 1e-4).unwrap() < 1e-7);
        let p = DampingProfile::power_tail(2.0, 3.0).unwrap();
        assert!(m_derivative_check(&p, 2.0, 1e-3).unwrap() < 1e-6);
        // one-sided stencil at the origin
        assert!(m_derivative_check(&p, 0.0, 1e-4).unwrap() < 1e-6);
    }

    #[test]
    fn derivative_check_is_second_order() {
        let p = DampingProfile::power_tail(1.0, 2.0).unwrap();
        let r1 = m_derivative_check(&p, 0.5, 1e-2).unwrap();
        let r2 = m_derivative_check(&p, 0.5, 5e-3).unwrap();
        assert!((r1 / r2 - 4.0).abs() < 0.2, "{}", r1 / r2);
    }

    #[test]
    fn rejects_non_summable_power() {
        assert_eq!(
            DampingProfile::power_tail(1.0, 1.0),
            Err(MultiplierError::NotSummable { beta: 1.0 })
        );
        assert!(DampingProfile::power_tail(-1.0, 2.0).is_err());
        assert!(DampingProfile::compact_bump(1.0, 0.0).is_err());
    }

    #[test]
    fn compact_bump_tail_matches_quadrature() {
        let p = DampingProfile::compact_bump(2.0, 3.0).unwrap();
        for &t in &[0.0f64, 0.7, 1.5, 2.9, 3.0, 10.0] {
            let q = crate::quad::gauss_kronrod(|s| p.b(s), t.min(3.0), 3.0, 1e-14, 1e-15);
            let exact = p.tail_integral(t).unwrap().value;
            assert!((q.value - exact).abs() < 1e-13, "t={t}: {} vs {}", q.value, exact);
        }
        assert!((p.tail_integral(0.0).unwrap().value - 3.0).abs() < 1e-14);
    }

    #[test]
    fn tabulated_tail_error_and_decay() {
        // sampled PowerTail(1, 3) truncated where it is tiny
        let grid: Vec<f64> = (0..=4000).map(|i| i as f64 * 0.05).collect();
        let mut values: Vec<f64> = grid.iter().map(|t| pow(1.0 + t, -3.0)).collect();
        let n = values.len();
        values[n - 1] = 0.0;
        let p = DampingProfile::tabulated(grid.clone(), values.clone()).unwrap();
        let tail = p.tail_integral(0.0).unwrap();
        // exact tail is 1/2 up to ~1e-5 of truncation; the trapezoid bias is ~6e-4
        assert!((tail.value - 0.5).abs() < 1.2 * tail.error, "{tail:?}");
        assert!(tail.error > 0.0 && tail.error < 1e-3);
        let mid = p.tail_integral(1.025).unwrap().value;
        assert!(mid < tail.value);

        let mut slow = values;
        slow[n - 1] = 1e-3;
        let p = DampingProfile::tabulated(grid, slow).unwrap();
        assert!(matches!(p.tail_integral(0.0), Err(MultiplierError::TailNotResolved { .. })));
        assert!(Multiplier::new(p).is_err());
    }

    #[test]
    fn tabulated_requires_origin_node() {
        assert!(DampingProfile::tabulated(alloc::vec![1.0, 2.0], alloc::vec![0.0, 0.0]).is_err());
        assert!(DampingProfile::tabulated(alloc::vec![0.0, 0.0], alloc::vec![0.0, 0.0]).is_err());
    }

    fn profiles() -> impl Strategy<Value = DampingProfile> {
        prop_oneof![
            Just(DampingProfile::zero()),
            (0.0f64..5.0, 1.05f64..5.0).prop_map(|(m, b)| DampingProfile::power_tail(m, b).unwrap()),
            (0.0f64..5.0, 0.1f64..10.0)
                .prop_map(|(m, t)| DampingProfile::compact_bump(m, t).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn multiplier_bounds_and_monotone(p in profiles()) {
            let mult = Multiplier::new(p).unwrap();
            let mut prev = mult.m0;
            for i in 0..400 {
                let t = 0.05 * i as f64 + 1e-3 * (i * i) as f64;
                let m = mult.m(t);
                prop_assert!(m >= mult.m0 - 1e-14 && m <= 1.0 + 1e-14);
                prop_assert!(m >= prev - 1e-14);
                prev = m;
            }
        }

        #[test]
        fn zero_profile_is_identically_one(t in 0.0f64..1e6) {
            prop_assert_eq!(DampingProfile::zero().m(t).unwrap(), 1.0);
        }
    }
}
