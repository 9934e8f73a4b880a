//! Finite-depth approximations of the ternary Cantor function and its primitive.
//!
//! At depth `k` the Cantor function is replaced by the piecewise-linear `c_k`:
//! constant on the removed middle thirds of levels `< k` and linear, rising by
//! `2^-k`, on each of the `2^k` surviving intervals of length `3^-k`. Its
//! primitive `F_k` is evaluated through the self-similarity
//!
//! ```text
//! F(s) = F(3s)/6                                  s in [0, 1/3]
//! F(s) = F(1)/6 + (s - 1/3)/2                     s in [1/3, 2/3]
//! F(s) = F(2/3) + (s - 2/3)/2 + F(3s - 2)/6       s in [2/3, 1]
//! ```
//!
//! with `F_0(s) = s^2/2` and `F_k(1) = 1/2` at every depth.

/// `c_k(s)` for `s` in `[0, 1]`.
pub fn cantor_function(depth: u32, s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    if depth == 0 {
        return s;
    }
    if s <= 1.0 / 3.0 {
        0.5 * cantor_function(depth - 1, 3.0 * s)
    } else if s < 2.0 / 3.0 {
        0.5
    } else {
        0.5 + 0.5 * cantor_function(depth - 1, 3.0 * s - 2.0)
    }
}

/// `F_k(s) = ∫_0^s c_k`, for `s` in `[0, 1]`.
pub fn cantor_primitive(depth: u32, s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    if depth == 0 {
        return 0.5 * s * s;
    }
    const F_THIRD: f64 = 0.5 / 6.0;
    if s <= 1.0 / 3.0 {
        cantor_primitive(depth - 1, 3.0 * s) / 6.0
    } else if s <= 2.0 / 3.0 {
        F_THIRD + (s - 1.0 / 3.0) / 2.0
    } else {
        let f_two_thirds = F_THIRD + 1.0 / 6.0;
        f_two_thirds + (s - 2.0 / 3.0) / 2.0 + cantor_primitive(depth - 1, 3.0 * s - 2.0) / 6.0
    }
}

/// `c_k'(s)`: `(3/2)^k` on surviving intervals, 0 on removed thirds.
pub fn cantor_slope(depth: u32, s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    if depth == 0 {
        return 1.0;
    }
    if s < 1.0 / 3.0 {
        1.5 * cantor_slope(depth - 1, 3.0 * s)
    } else if s <= 2.0 / 3.0 {
        0.0
    } else {
        1.5 * cantor_slope(depth - 1, 3.0 * s - 2.0)
    }
}
