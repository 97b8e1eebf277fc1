use super::ModelError;

/// Combines two confirming certainty factors: `a + b - a*b`.
///
/// Evaluated as `hi + lo * (1 - hi)` over the sorted pair so that the result
/// is exactly commutative, exactly `x` for `(0, x)`, exactly `1` for `(1, x)`
/// and never below `max(a, b)` under floating-point rounding.
pub fn combine_certainty(a: f64, b: f64) -> Result<f64, ModelError> {
    check_certainty(a)?;
    check_certainty(b)?;
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    Ok(hi + lo * (1.0 - hi))
}

pub(crate) fn check_certainty(c: f64) -> Result<f64, ModelError> {
    if (0.0..=1.0).contains(&c) {
        Ok(c)
    } else {
        Err(ModelError::CertaintyOutOfRange(c))
    }
}
