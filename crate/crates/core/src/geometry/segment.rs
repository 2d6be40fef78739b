use super::{GeometryError, Point3, PointCloud};
use crate::scalar::Real;

/// Sample parameters along a segment of length `len` clipped to `[tau, len - tau]`.
///
/// The interior lattice is anchored at the midpoint with spacing `step`, and both
/// clipped endpoints are always included, so no gap exceeds `step`. Anchoring at the
/// midpoint keeps the sample set of a smaller `tau` a superset of the interior lattice
/// of a larger one.
pub(crate) fn sample_params<T: Real>(len: T, tau: T, step: T) -> Vec<T> {
    let lo = tau;
    let hi = len - tau;
    if hi < lo {
        return Vec::new();
    }
    let mid = len / T::two();
    let half_count = ((hi - mid) / step).floor().to_usize().unwrap_or(0);
    let mut out = Vec::with_capacity(2 * half_count + 3);
    out.push(lo);
    for k in (1..=half_count).rev() {
        out.push(mid - T::of_usize(k) * step);
    }
    out.push(mid);
    for k in 1..=half_count {
        out.push(mid + T::of_usize(k) * step);
    }
    out.push(hi);
    out
}

/// Line-of-sight test between `v` and `p` with obstruction distance `tau`.
///
/// True iff every sample on the segment, clipped by `tau` at both ends, keeps a distance
/// of at least `tau` to all points of `scene`. Segments no longer than `2·tau` have no
/// samples and are clear. The result is symmetric in `v` and `p`.
pub fn segment_clear<T: Real>(
    v: &Point3<T>,
    p: &Point3<T>,
    scene: &PointCloud<T>,
    tau: T,
    step: T,
) -> Result<bool, GeometryError> {
    if !(tau > T::zero()) {
        return Err(GeometryError::InvalidParameter("obstruction distance must be positive"));
    }
    if !(step > T::zero()) {
        return Err(GeometryError::InvalidParameter("sampling step must be positive"));
    }
    if scene.is_empty() {
        return Ok(true);
    }
    let (a, b) = if v.lex_cmp(p).is_le() { (*v, *p) } else { (*p, *v) };
    let len = a.distance(&b);
    if len <= T::two() * tau {
        return Ok(true);
    }
    let dir = (b - a) * (T::one() / len);
    let shrink = T::one() - T::of(1e-9);
    let mut safe_until = -T::infinity();
    for t in sample_params(len, tau, step) {
        if t <= safe_until {
            continue;
        }
        let q = a + dir * t;
        let bound = scene.clearance_lower_bound(&q);
        if bound > tau {
            safe_until = t + (bound - tau) * shrink;
            continue;
        }
        if scene.any_within(&q, tau) {
            return Ok(false);
        }
    }
    Ok(true)
}
