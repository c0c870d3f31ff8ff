//! Log-likelihood ratio arithmetic.
//!
//! LLRs follow the convention `log(P(y|x=0) / P(y|x=1))`. Certain decisions
//! are carried by the finite sentinel [`LLR_INF`]; every operation here clamps
//! to `[-LLR_INF, LLR_INF]` so decoder arithmetic stays total.

/// Magnitude treated as an infinite (certain) LLR.
pub const LLR_INF: f64 = 1e300;

/// Vector of per-position LLRs.
pub type LlrVector = Vec<f64>;

#[inline]
pub fn saturate(x: f64) -> f64 {
    x.clamp(-LLR_INF, LLR_INF)
}

#[inline]
pub fn is_infinite(x: f64) -> bool {
    x.abs() >= LLR_INF
}

/// Saturating sum. Opposite infinities cancel to 0.
#[inline]
pub fn sat_add(a: f64, b: f64) -> f64 {
    saturate(a + b)
}

/// Check-node rule used by the successive-cancellation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckNode {
    /// `2 atanh(tanh(a/2) tanh(b/2))`, evaluated in a form that is stable for
    /// large magnitudes.
    #[default]
    Exact,
    /// `sign(a) sign(b) min(|a|, |b|)`.
    MinSum,
}

impl CheckNode {
    #[inline]
    pub fn combine(self, a: f64, b: f64) -> f64 {
        match self {
            CheckNode::Exact => boxplus(a, b),
            CheckNode::MinSum => min_sum(a, b),
        }
    }
}

#[inline]
fn sign_product(a: f64, b: f64) -> f64 {
    if (a < 0.0) != (b < 0.0) {
        -1.0
    } else {
        1.0
    }
}

#[inline]
pub fn min_sum(a: f64, b: f64) -> f64 {
    sign_product(a, b) * a.abs().min(b.abs())
}

/// Exact box-plus. Uses
/// `min(|a|,|b|) + ln(1+e^-(|a|+|b|)) - ln(1+e^-||a|-|b||)` for the magnitude.
#[inline]
pub fn boxplus(a: f64, b: f64) -> f64 {
    let (x, y) = (a.abs(), b.abs());
    let mag = x.min(y) + (-(x + y)).exp().ln_1p() - (-(x - y).abs()).exp().ln_1p();
    sign_product(a, b) * mag.max(0.0)
}

/// Variable-node update with a hard partial sum.
#[inline]
pub fn g_hard(a: f64, b: f64, partial: u8) -> f64 {
    if partial == 0 {
        sat_add(b, a)
    } else {
        sat_add(b, -a)
    }
}

/// Outcome of [`combine_llrs`].
#[derive(Debug, Clone, PartialEq)]
pub struct Combined {
    pub llrs: LlrVector,
    /// Positions where `+inf` met `-inf`; those were set to 0.
    pub conflicts: usize,
}

/// Elementwise saturating sum of two LLR vectors.
pub fn combine_llrs(primary: &[f64], extra: &[f64]) -> crate::Result<Combined> {
    if primary.len() != extra.len() {
        return crate::error::invalid(format!(
            "length mismatch: {} vs {}",
            primary.len(),
            extra.len()
        ));
    }
    let mut conflicts = 0;
    let llrs = primary
        .iter()
        .zip(extra)
        .map(|(&a, &b)| {
            if is_infinite(a) && is_infinite(b) && (a > 0.0) != (b > 0.0) {
                conflicts += 1;
                0.0
            } else {
                sat_add(a, b)
            }
        })
        .collect();
    Ok(Combined { llrs, conflicts })
}

/// Hard decision; ties resolve to 0.
#[inline]
pub fn hard_decision(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}
