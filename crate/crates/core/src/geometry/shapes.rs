use super::Point3;
use crate::scalar::Real;

/// Lattice points on the surface of the axis-aligned box `[min, max]`, no two further
/// apart along an axis than `spacing`. Degenerate axes give a single layer.
pub fn box_surface_points<T: Real>(min: Point3<T>, max: Point3<T>, spacing: T) -> Vec<Point3<T>> {
    let (lo, hi) = (min.min_components(&max), min.max_components(&max));
    let divisions = |a: T, b: T| ((b - a) / spacing).ceil().to_usize().unwrap_or(0);
    let (nx, ny, nz) = (divisions(lo.x, hi.x), divisions(lo.y, hi.y), divisions(lo.z, hi.z));
    let at = |a: T, b: T, i: usize, n: usize| if n == 0 { a } else { a + (b - a) * T::of_usize(i) / T::of_usize(n) };
    let mut out = Vec::new();
    for i in 0..=nx {
        for j in 0..=ny {
            for k in 0..=nz {
                let on_surface = i == 0 || i == nx || j == 0 || j == ny || k == 0 || k == nz;
                if on_surface {
                    out.push(Point3::new(at(lo.x, hi.x, i, nx), at(lo.y, hi.y, j, ny), at(lo.z, hi.z, k, nz)));
                }
            }
        }
    }
    out
}
