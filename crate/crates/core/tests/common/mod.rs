//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

/// Rodrigues rotation of `v` by `deg` degrees about the unit `axis`.
pub fn rotate(v: [f64; 3], axis: [f64; 3], deg: f64) -> [f64; 3] {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let k = [axis[0] / n, axis[1] / n, axis[2] / n];
    let (s, c) = deg.to_radians().sin_cos();
    let kxv = [
        k[1] * v[2] - k[2] * v[1],
        k[2] * v[0] - k[0] * v[2],
        k[0] * v[1] - k[1] * v[0],
    ];
    let kdv = k[0] * v[0] + k[1] * v[1] + k[2] * v[2];
    std::array::from_fn(|i| v[i] * c + kxv[i] * s + k[i] * kdv * (1.0 - c))
}

/// Rotates `v` by `deg` within the plane spanned by `v` and the blue axis,
/// i.e. about the axis `v x (0, 0, 1)`.
pub fn tilt(v: [f64; 3], deg: f64) -> [f64; 3] {
    let axis = [v[1], -v[0], 0.0];
    rotate(v, axis, deg)
}

/// Angle via the textbook clamped arccos, in degrees.
pub fn arccos_angle(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let na = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    let nb = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0).acos().to_degrees()
}
