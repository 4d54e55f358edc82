//! Small fixed-size vector helpers.

pub type P3 = [f64; 3];
pub type M3 = [[f64; 3]; 3];

#[inline]
pub fn add(a: P3, b: P3) -> P3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: P3, s: f64) -> P3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn axpy(a: P3, s: f64, b: P3) -> P3 {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

#[inline]
pub fn dot(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: P3, b: P3) -> P3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: P3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn normalize(a: P3) -> P3 {
    scale(a, 1.0 / norm(a))
}

#[inline]
pub fn det3(a: P3, b: P3, c: P3) -> f64 {
    dot(a, cross(b, c))
}

pub fn mat_vec(m: &M3, v: P3) -> P3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

/// Quadratic form v^T m w.
pub fn bilinear(m: &M3, v: P3, w: P3) -> f64 {
    dot(v, mat_vec(m, w))
}

/// Eigen-decomposition of a symmetric 2x2 matrix [[a, b], [b, c]].
/// Returns eigenvalues ascending and the matching unit eigenvectors.
pub fn sym2_eigen(a: f64, b: f64, c: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    let mean = 0.5 * (a + c);
    let diff = 0.5 * (a - c);
    let rad = (diff * diff + b * b).sqrt();
    let l0 = mean - rad;
    let l1 = mean + rad;
    if rad < 1e-300 {
        return ([l0, l1], [[1.0, 0.0], [0.0, 1.0]]);
    }
    // eigenvector for l1, then rotate for l0
    let v1 = if diff >= 0.0 {
        let x = diff + rad;
        let n = (x * x + b * b).sqrt();
        [x / n, b / n]
    } else {
        let y = -diff + rad;
        let n = (y * y + b * b).sqrt();
        [b / n, y / n]
    };
    let v0 = [-v1[1], v1[0]];
    ([l0, l1], [v0, v1])
}
