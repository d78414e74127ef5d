//! Admissible exponent sets: `Pi`, the family `Pi_r`, the balance point `r0`,
//! and the `p` and `sigma` ranges.
//!
//! Membership uses exact floating-point comparisons. Margins are signed so
//! that a satisfied constraint has a nonnegative margin; callers wanting a
//! tolerance apply it to the margins.

use crate::error::{Error, Result};

/// `sqrt(6)` at full double precision.
pub const SQRT6: f64 = 2.449_489_742_783_178;

/// `(6 - sqrt 6) / 4`, the open lower end of the `alpha` range of `Pi`.
pub const ALPHA_MIN: f64 = (6.0 - SQRT6) / 4.0;

/// `(8 + 2 sqrt 6) / 5`.
pub const R0: f64 = (8.0 + 2.0 * SQRT6) / 5.0;

/// `(7 + 2 sqrt 6) / 5`, slope of the first upper `beta` bound of `Pi`.
pub const B1_SLOPE: f64 = (7.0 + 2.0 * SQRT6) / 5.0;

pub fn r0() -> f64 {
    R0
}

pub fn b1(alpha: f64) -> f64 {
    B1_SLOPE * alpha - 2.0
}

pub fn b2(alpha: f64) -> f64 {
    alpha * (1.0 - alpha) / (SQRT6 - 2.0 * alpha)
}

pub fn b3(alpha: f64) -> f64 {
    2.0 - 2.0 * alpha
}

/// Lower `alpha` end of `Pi_r`, `(9r - 12) / (8r - 8)`.
pub fn alpha_min_r(r: f64) -> f64 {
    (9.0 * r - 12.0) / (8.0 * r - 8.0)
}

/// Upper `beta` bounds of `Pi_r`. A nonpositive denominator in the middle
/// bound means the constraint is void and is reported as `+inf`.
pub fn pi_r_bounds(alpha: f64, r: f64) -> [f64; 3] {
    let c1 = (5.0 * r - 4.0) / (3.0 * r - 4.0) * alpha - 2.0;
    let den = (4.0 / alpha) * (1.0 - 1.0 / r) - 2.0;
    let c2 = if den > 0.0 {
        (1.0 - alpha) / den
    } else {
        f64::INFINITY
    };
    [c1, c2, 2.0 - 2.0 * alpha]
}

/// Signed distance to one constraint and whether the constraint is closed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Margin {
    pub name: &'static str,
    pub value: f64,
    pub closed: bool,
}

impl Margin {
    fn holds(&self) -> bool {
        if self.closed {
            self.value >= 0.0
        } else {
            self.value > 0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionVerdict {
    pub inside: bool,
    pub margins: Vec<Margin>,
    /// Name of the smallest upper `beta` bound (`b1`, `b2` or `b3`).
    pub binding: &'static str,
    /// Value of the smallest upper `beta` bound.
    pub beta_max: f64,
}

impl RegionVerdict {
    fn from_parts(alpha_lo: f64, alpha: f64, beta: f64, bounds: [f64; 3]) -> Self {
        const NAMES: [&str; 3] = ["b1", "b2", "b3"];
        let (bi, beta_max) = bounds
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, b)| if b < acc.1 { (i, b) } else { acc });
        let mut margins = vec![
            Margin {
                name: "alpha_lower",
                value: alpha - alpha_lo,
                closed: false,
            },
            Margin {
                name: "alpha_upper",
                value: 1.0 - alpha,
                closed: false,
            },
            Margin {
                name: "beta_lower",
                value: beta - (1.0 - alpha),
                closed: false,
            },
        ];
        for (name, b) in NAMES.iter().zip(bounds) {
            margins.push(Margin {
                name,
                value: b - beta,
                closed: true,
            });
        }
        // Direct comparisons, so the verdict does not inherit rounding from the margins.
        let inside = alpha > alpha_lo
            && alpha < 1.0
            && beta > 1.0 - alpha
            && bounds.iter().all(|&b| beta <= b);
        debug_assert!(!inside || margins.iter().all(Margin::holds));
        Self {
            inside,
            margins,
            binding: NAMES[bi],
            beta_max,
        }
    }

    pub fn margin(&self, name: &str) -> Option<f64> {
        self.margins.iter().find(|m| m.name == name).map(|m| m.value)
    }
}

/// Membership in `Pi = ]ALPHA_MIN, 1[ x ]1 - alpha, min(b1, b2, b3)]`.
pub fn pi_contains(alpha: f64, beta: f64) -> RegionVerdict {
    RegionVerdict::from_parts(ALPHA_MIN, alpha, beta, [b1(alpha), b2(alpha), b3(alpha)])
}

/// Membership in `Pi_r` for `r` in `[2, 4)`.
pub fn pi_r_contains(alpha: f64, beta: f64, r: f64) -> Result<RegionVerdict> {
    if !(2.0..4.0).contains(&r) {
        return Err(Error::param("r", r, "must lie in [2, 4)"));
    }
    Ok(RegionVerdict::from_parts(
        alpha_min_r(r),
        alpha,
        beta,
        pi_r_bounds(alpha, r),
    ))
}

/// `2 / (alpha + beta - 1)`, the open lower end of the `p` range.
pub fn p_inf(alpha: f64, beta: f64) -> Result<f64> {
    let gap = alpha + beta - 1.0;
    if !(gap > 0.0) {
        return Err(Error::Undefined(format!(
            "p range needs alpha + beta > 1, got alpha + beta = {}",
            alpha + beta
        )));
    }
    Ok(2.0 / gap)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaRange {
    /// `alpha / (1 - alpha + 2/p)`, excluded from the range.
    pub sup: f64,
    /// Whether `[1, sup[` is nonempty.
    pub nonempty: bool,
}

pub fn sigma_sup(alpha: f64, p: f64) -> Result<SigmaRange> {
    if !(p > 0.0) {
        return Err(Error::param("p", p, "must be positive"));
    }
    let den = 1.0 - alpha + 2.0 / p;
    if !(den > 0.0) {
        return Err(Error::Undefined(format!(
            "1 - alpha + 2/p = {den} is not positive"
        )));
    }
    let sup = alpha / den;
    Ok(SigmaRange {
        sup,
        nonempty: sup > 1.0,
    })
}
