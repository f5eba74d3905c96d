//! Planar polyline helpers on complex coordinates.

use crate::scalar::{Real, C};

/// Distance from `p` to the segment `[a, b]`.
pub fn point_segment_distance<T: Real>(p: C<T>, a: C<T>, b: C<T>) -> T {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == T::zero() {
        return (p - a).norm();
    }
    let t = ((p - a) * ab.conj()).re / len2;
    let t = t.max(T::zero()).min(T::one());
    (p - (a + ab * t)).norm()
}

/// Distance from `p` to a polyline.
pub fn point_polyline_distance<T: Real>(p: C<T>, line: &[C<T>]) -> T {
    match line.len() {
        0 => T::infinity(),
        1 => (p - line[0]).norm(),
        _ => line
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]))
            .fold(T::infinity(), T::min),
    }
}

/// Symmetric Hausdorff distance between two polylines (vertices of each
/// against segments of the other).
pub fn hausdorff<T: Real>(a: &[C<T>], b: &[C<T>]) -> T {
    let one_way = |x: &[C<T>], y: &[C<T>]| {
        x.iter()
            .map(|&p| point_polyline_distance(p, y))
            .fold(T::zero(), T::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Intersection of segments `[p0, p1]` and `[q0, q1]` as parameters
/// `(t, u)` in `[0, 1]²`, or `None` when disjoint or parallel.
pub fn segment_intersection<T: Real>(p0: C<T>, p1: C<T>, q0: C<T>, q1: C<T>) -> Option<(T, T)> {
    let r = p1 - p0;
    let s = q1 - q0;
    let cross = |a: C<T>, b: C<T>| a.re * b.im - a.im * b.re;
    let denom = cross(r, s);
    if denom == T::zero() {
        return None;
    }
    let qp = q0 - p0;
    let t = cross(qp, s) / denom;
    let u = cross(qp, r) / denom;
    let (lo, hi) = (T::zero(), T::one());
    if t >= lo && t <= hi && u >= lo && u <= hi {
        Some((t, u))
    } else {
        None
    }
}

/// Euclidean length of a polyline.
pub fn polyline_length<T: Real>(line: &[C<T>]) -> T {
    line.windows(2).fold(T::zero(), |acc, w| acc + (w[1] - w[0]).norm())
}

/// Winding number of a closed polyline around `p` (the polyline is closed
/// implicitly if the last vertex differs from the first).
pub fn winding_number<T: Real>(line: &[C<T>], p: C<T>) -> i64 {
    if line.len() < 2 {
        return 0;
    }
    let mut total = T::zero();
    let n = line.len();
    for i in 0..n {
        let a = line[i] - p;
        let b = line[(i + 1) % n] - p;
        total += (b / a).arg();
    }
    (total / T::TAU()).round().to_i64().unwrap_or(0)
}

/// Axis-aligned bounding box `(min_re, min_im, max_re, max_im)`.
pub fn bounding_box<T: Real>(line: &[C<T>]) -> (T, T, T, T) {
    line.iter().fold(
        (T::infinity(), T::infinity(), T::neg_infinity(), T::neg_infinity()),
        |(a, b, c, d), z| (a.min(z.re), b.min(z.im), c.max(z.re), d.max(z.im)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as Z;

    #[test]
    fn segment_distance() {
        let d = point_segment_distance(Z::new(0.5, 1.0), Z::new(0.0, 0.0), Z::new(1.0, 0.0));
        assert!((d - 1.0).abs() < 1e-15);
        let d = point_segment_distance(Z::new(2.0, 0.0), Z::new(0.0, 0.0), Z::new(1.0, 0.0));
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn crossing_segments() {
        let (t, u) = segment_intersection(Z::new(0.0, -1.0), Z::new(0.0, 1.0), Z::new(-1.0, 0.0), Z::new(3.0, 0.0)).unwrap();
        assert!((t - 0.5).abs() < 1e-15 && (u - 0.25).abs() < 1e-15);
        assert!(segment_intersection(Z::new(0.0, 0.0), Z::new(1.0, 0.0), Z::new(0.0, 1.0), Z::new(1.0, 1.0)).is_none());
    }

    #[test]
    fn winding() {
        let circle: Vec<Z> = (0..32).map(|k| Z::from_polar(1.0, std::f64::consts::TAU * k as f64 / 32.0)).collect();
        assert_eq!(winding_number(&circle, Z::new(0.0, 0.0)), 1);
        assert_eq!(winding_number(&circle, Z::new(2.0, 0.0)), 0);
        let rev: Vec<Z> = circle.iter().rev().copied().collect();
        assert_eq!(winding_number(&rev, Z::new(0.1, 0.0)), -1);
    }

    #[test]
    fn hausdorff_of_parallel_lines() {
        let a = [Z::new(0.0, 0.0), Z::new(1.0, 0.0)];
        let b = [Z::new(0.0, 0.5), Z::new(1.0, 0.5)];
        assert!((hausdorff(&a, &b) - 0.5).abs() < 1e-15);
    }
}
