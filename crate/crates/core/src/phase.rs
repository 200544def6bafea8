use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;

/// Wraps an angle into `[-π, π)`.
#[inline]
pub fn wrap(x: f64) -> f64 {
    let y = x - TWO_PI * ((x + PI) / TWO_PI).floor();
    // floor rounding can land exactly on +π for inputs just below an odd multiple
    if y >= PI {
        y - TWO_PI
    } else {
        y
    }
}
