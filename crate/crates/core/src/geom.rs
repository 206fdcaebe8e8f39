//! Small fixed-size vector helpers. Points are always stored with three
//! coordinates; in 2D the third is zero.

pub type Point = [f64; 3];

#[inline]
pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: &Point) -> Point {
    let n = norm(a);
    if n == 0.0 {
        *a
    } else {
        scale(a, 1.0 / n)
    }
}

pub fn centroid(points: &[Point]) -> Point {
    let mut c = [0.0; 3];
    for p in points {
        c = add(&c, p);
    }
    scale(&c, 1.0 / points.len() as f64)
}

/// Signed measure of a simplex given by `dim + 1` vertices.
pub fn signed_volume(dim: usize, v: &[Point]) -> f64 {
    match dim {
        2 => {
            let a = sub(&v[1], &v[0]);
            let b = sub(&v[2], &v[0]);
            0.5 * (a[0] * b[1] - a[1] * b[0])
        }
        3 => {
            let a = sub(&v[1], &v[0]);
            let b = sub(&v[2], &v[0]);
            let c = sub(&v[3], &v[0]);
            dot(&a, &cross(&b, &c)) / 6.0
        }
        _ => unreachable!("unsupported dimension {dim}"),
    }
}

/// Unnormalized facet normal whose length equals the facet measure.
/// Orientation is arbitrary; callers orient it.
pub fn facet_area_normal(dim: usize, v: &[Point]) -> Point {
    match dim {
        2 => {
            let t = sub(&v[1], &v[0]);
            [t[1], -t[0], 0.0]
        }
        3 => scale(&cross(&sub(&v[1], &v[0]), &sub(&v[2], &v[0])), 0.5),
        _ => unreachable!("unsupported dimension {dim}"),
    }
}
