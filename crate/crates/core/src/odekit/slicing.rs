//! Slicing iteration for the critical cases.
//!
//! Off the diagonal (`Λ(n,p,q) = 0 < Λ(n,q,p)`) the iteration keeps lower
//! bounds `F(t) >= C_j (log(t/ℓ_j))^{a_j}` on shrinking slices
//! `ℓ_j = 2 - 2^{-j}`; on the diagonal the bounds read `C_j (log t)^{a_j}`.
//!
//! `C_j` and `a_j` grow like `(pq)^j`, so both are carried normalised:
//! `s_j = log C_j / (pq)^j` and `ā_j = a_j / (pq)^j`. The increments of `s_j`
//! decay geometrically and are accumulated with compensation.

use alloc::vec::Vec;
use core::fmt;

use libm::{ceil, exp, expm1, fabs, log, log1p};

use crate::critcurve::{self, CritError, RegimeTag};
use crate::quad::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SlicingCase {
    OffDiagonal,
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlicingInput {
    pub n: u32,
    pub p: f64,
    pub q: f64,
    pub eps: f64,
    /// Data integral `I_1[u_1]`, so that `C_0 = ε I_1`.
    pub i1: f64,
    /// Frame constant of the `F` inequality.
    pub c: f64,
    /// Frame constant of the `G` inequality.
    pub k: f64,
    pub jmax: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SlicingError {
    /// `Υ(n,p,q) != 0`.
    NotCritical { upsilon: f64 },
    InvalidParameter(&'static str),
    Crit(CritError),
}

impl fmt::Display for SlicingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlicingError::NotCritical { upsilon } => {
                write!(f, "slicing needs a critical triple, got Υ = {upsilon}")
            }
            SlicingError::InvalidParameter(s) => write!(f, "invalid slicing parameter: {s}"),
            SlicingError::Crit(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SlicingError {}

impl From<CritError> for SlicingError {
    fn from(e: CritError) -> Self {
        SlicingError::Crit(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlicingResult {
    pub case: SlicingCase,
    /// The roles of `(p, C)` and `(q, K)` were exchanged so that the
    /// vanishing `Λ` is the first one.
    pub swapped: bool,
    pub p: f64,
    pub q: f64,
    pub eps: f64,
    pub ell: Vec<f64>,
    /// `a_j` by the recursion (overflows to `+∞` for large `j`).
    pub a: Vec<f64>,
    /// `a_j` by the closed form.
    pub a_closed: Vec<f64>,
    /// `ā_j = a_j / (pq)^j`.
    pub a_norm: Vec<f64>,
    /// `log C_j = (pq)^j s_j`; may overflow to `±∞`.
    pub log_c: Vec<f64>,
    /// `s_j = log C_j / (pq)^j`.
    pub s: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(rename = "N"))]
    pub big_n: f64,
    #[cfg_attr(feature = "serde", serde(rename = "D"))]
    pub big_d: f64,
    pub j0: i64,
    /// `log(Dε)`, the floor for `s_j` once `j >= j0`.
    pub log_d_eps: f64,
    /// `ln T` of the bound `exp(2 (Dε)^{-(pq-1)})` or `exp((Dε)^{-(p-1)})`.
    pub ln_bound: f64,
    /// `ln t*` of the computed threshold where the lower bounds switch from
    /// decaying to diverging.
    pub ln_t_star: f64,
}

/// Compute the slicing sequences and the associated lifespan constants.
pub fn slicing_sequences(input: &SlicingInput) -> Result<SlicingResult, SlicingError> {
    let SlicingInput { n, p, q, eps, i1, c, k, jmax } = *input;
    if !(eps > 0.0 && i1 > 0.0 && c > 0.0 && k > 0.0) {
        return Err(SlicingError::InvalidParameter("eps, I1, C and K must be positive"));
    }
    if jmax == 0 {
        return Err(SlicingError::InvalidParameter("jmax must be >= 1"));
    }
    let reg = critcurve::classify(n, p, q)?;
    let (case, swapped, p, q, c, k) = match reg.tag {
        RegimeTag::CriticalDiagonal => (SlicingCase::Diagonal, false, p, q, c, k),
        RegimeTag::CriticalOffDiagonal => {
            if fabs(reg.lambda_pq) <= fabs(reg.lambda_qp) {
                (SlicingCase::OffDiagonal, false, p, q, c, k)
            } else {
                (SlicingCase::OffDiagonal, true, q, p, k, c)
            }
        }
        _ => return Err(SlicingError::NotCritical { upsilon: reg.upsilon }),
    };
    let pq = p * q;
    let ln_pq = log(pq);
    let ln2 = core::f64::consts::LN_2;
    let log_ck = log(c) + p * log(k);
    let inc = match case {
        SlicingCase::OffDiagonal => 1.0,
        SlicingCase::Diagonal => p + 1.0,
    };

    let mut ell = Vec::with_capacity(jmax + 1);
    let mut a = Vec::with_capacity(jmax + 1);
    let mut a_closed = Vec::with_capacity(jmax + 1);
    let mut a_norm = Vec::with_capacity(jmax + 1);
    let mut s = Vec::with_capacity(jmax + 1);
    let mut log_c = Vec::with_capacity(jmax + 1);

    let s0 = log(eps) + log(i1);
    let mut s_acc = CompensatedSum::new();
    s_acc.add(s0);
    let mut abar = CompensatedSum::new();
    let mut a_lin = 0.0f64;
    for j in 0..=jmax {
        let jf = j as f64;
        ell.push(2.0 - exp(-jf * ln2));
        a.push(a_lin);
        a_closed.push(a_closed_form(pq, p, case, j));
        a_norm.push(abar.value());
        s.push(s_acc.value());
        log_c.push(scale_up(s_acc.value(), jf * ln_pq));
        if j == jmax {
            break;
        }
        // ln a_{j+1} from ā_{j+1} = ā_j + inc/(pq)^{j+1}
        let next_abar = abar.value() + inc * exp(-(jf + 1.0) * ln_pq);
        let ln_a_next = log(next_abar) + (jf + 1.0) * ln_pq;
        let delta = match case {
            SlicingCase::OffDiagonal => {
                log_ck - ((jf + 3.0) * p + 1.0) * ln2 - ln_a_next
            }
            SlicingCase::Diagonal => {
                // ln(a_j q + 1) = j ln(pq) + ln(q ā_j + (pq)^{-j})
                let ln_aq1 = jf * ln_pq + log(q * abar.value() + exp(-jf * ln_pq));
                log_ck - p * ln_aq1 - ln_a_next
            }
        };
        s_acc.add(delta * exp(-(jf + 1.0) * ln_pq));
        abar.add(inc * exp(-(jf + 1.0) * ln_pq));
        a_lin = pq * a_lin + inc;
    }

    let (big_n, base) = match case {
        SlicingCase::OffDiagonal => (exp(log_ck) * exp(-(2.0 * p + 1.0) * ln2) * (pq - 1.0), exp(p * ln2) * pq),
        SlicingCase::Diagonal => {
            (exp(log_ck) * libm::pow(p - 1.0, p + 1.0) * libm::pow(p, p), libm::pow(pq, p + 1.0))
        }
    };
    let ln_base = log(base);
    let j0 = ceil(log(big_n) / ln_base - 1.0 - 1.0 / (pq - 1.0)) as i64;
    let big_d = exp(-pq / ((pq - 1.0) * (pq - 1.0)) * ln_base + log(big_n) / (pq - 1.0)) * i1;
    let log_d_eps = log(big_d) + log(eps);
    let ln_bound = match case {
        SlicingCase::OffDiagonal => 2.0 * exp(-(pq - 1.0) * log_d_eps),
        SlicingCase::Diagonal => exp(-(p - 1.0) * log_d_eps),
    };
    let s_inf = *s.last().unwrap();
    let a_inf = *a_norm.last().unwrap();
    // λ(t) = s∞ + ā∞ ln ln(t/ℓ∞) vanishes at t*
    let ln_ell_inf = match case {
        SlicingCase::OffDiagonal => ln2,
        SlicingCase::Diagonal => 0.0,
    };
    let ln_t_star = ln_ell_inf + exp(-s_inf / a_inf);

    Ok(SlicingResult {
        case,
        swapped,
        p,
        q,
        eps,
        ell,
        a,
        a_closed,
        a_norm,
        log_c,
        s,
        big_n,
        big_d,
        j0,
        log_d_eps,
        ln_bound,
        ln_t_star,
    })
}

fn scale_up(s: f64, ln_scale: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s * exp(ln_scale)
    }
}

impl SlicingResult {
    /// `λ_j(t) = s_j + ā_j ln log(t/ℓ_j)`, the normalised logarithm of the
    /// `j`-th lower bound at `ln t`. `NaN` when `t <= ℓ_j`.
    pub fn normalized_log_bound(&self, ln_t: f64, j: usize) -> f64 {
        let ln_ell = match self.case {
            SlicingCase::OffDiagonal => log(self.ell[j]),
            SlicingCase::Diagonal => 0.0,
        };
        let inner = ln_t - ln_ell;
        if !(inner > 0.0) {
            return f64::NAN;
        }
        if self.a_norm[j] == 0.0 {
            return self.s[j];
        }
        self.s[j] + self.a_norm[j] * log(inner)
    }

    /// `log(C_j (log(t/ℓ_j))^{a_j})`; may overflow to `±∞`.
    pub fn log_bound(&self, ln_t: f64, j: usize) -> f64 {
        scale_up(self.normalized_log_bound(ln_t, j), j as f64 * log(self.p * self.q))
    }

    /// Whether the lower bounds diverge at `ln t`: `Some(true)` if `λ_j > 0`
    /// for every `j` from `max(j0, 0)` on, `Some(false)` if `λ_j < 0` on
    /// the same range, `None` if the sign does not settle.
    pub fn diverges_at(&self, ln_t: f64) -> Option<bool> {
        let from = self.j0.max(0) as usize;
        let tail = self.s.len().saturating_sub(1);
        // judge on the last third so transients before j0 do not count
        let from = from.max(tail - tail / 3);
        let signs: Vec<f64> = (from..=tail).map(|j| self.normalized_log_bound(ln_t, j)).collect();
        if signs.iter().all(|v| *v > 0.0) {
            Some(true)
        } else if signs.iter().all(|v| *v < 0.0) {
            Some(false)
        } else {
            None
        }
    }
}

/// Closed form of `a_j`: `((pq)^j - 1)/(pq - 1)` off the diagonal and
/// `((pq)^j - 1)/(p - 1)` on it.
pub fn a_closed_form(pq: f64, p: f64, case: SlicingCase, j: usize) -> f64 {
    let num = expm1(j as f64 * log(pq));
    match case {
        SlicingCase::OffDiagonal => num / (pq - 1.0),
        SlicingCase::Diagonal => num / (p - 1.0),
    }
}

/// Exact `a_j` for integer `pq` by the recursion `a_{j+1} = pq a_j + inc`;
/// stops at the first overflow.
pub fn a_recursion_exact(pq: u128, inc: u128, jmax: usize) -> Vec<u128> {
    let mut out = Vec::with_capacity(jmax + 1);
    let mut a: u128 = 0;
    out.push(a);
    for _ in 0..jmax {
        match a.checked_mul(pq).and_then(|x| x.checked_add(inc)) {
            Some(next) => {
                a = next;
                out.push(a);
            }
            None => break,
        }
    }
    out
}

/// Both sides of `Σ_{k<j} (j-k)(pq)^k = (((pq)^{j+1}-1)/(pq-1) - (j+1))/(pq-1)`.
pub fn sum_identity_terms(pq: f64, j: u32) -> (f64, f64) {
    let mut lhs = CompensatedSum::new();
    let mut pw = 1.0;
    for k in 0..j {
        lhs.add((j - k) as f64 * pw);
        pw *= pq;
    }
    let d = pq - 1.0;
    let geom = expm1((j as f64 + 1.0) * log1p(d)) / d;
    let rhs = (geom - (j as f64 + 1.0)) / d;
    (lhs.value(), rhs)
}

/// Relative residual `|LHS - RHS| / |LHS|` of the sum identity.
pub fn sum_identity_check(pq: f64, j: u32) -> f64 {
    let (lhs, rhs) = sum_identity_terms(pq, j);
    fabs(lhs - rhs) / fabs(lhs).max(f64::MIN_POSITIVE)
}
