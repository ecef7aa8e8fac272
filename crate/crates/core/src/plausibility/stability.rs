use nalgebra::Vector2;

use crate::geometry::Vec3;

type P2 = Vector2<f64>;

const BOUNDARY_TOLERANCE: f64 = 1e-9;

fn cross(o: &P2, a: &P2, b: &P2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Counter-clockwise convex hull (Andrew's monotone chain). Collinear boundary points
/// are dropped; fewer than three distinct points are returned as-is (deduplicated).
pub fn convex_hull_2d(points: &[P2]) -> Vec<P2> {
    let mut pts: Vec<P2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<P2> = Vec::with_capacity(2 * pts.len());
    for p in pts.iter() {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    let lower = hull.len() + 1;
    for p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    hull
}

/// Inside-or-on test against a counter-clockwise convex polygon with an absolute
/// boundary tolerance. Degenerate polygons (fewer than three vertices) contain nothing.
pub fn point_in_convex_polygon(p: &P2, hull: &[P2], tolerance: f64) -> bool {
    if hull.len() < 3 {
        return false;
    }
    (0..hull.len()).all(|i| {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        let len = (b - a).norm();
        len == 0.0 || cross(&a, &b, p) / len >= -tolerance
    })
}

fn project_along(p: &Vec3, g: &Vec3) -> P2 {
    let s = p.z / g.z;
    P2::new(p.x - s * g.x, p.y - s * g.y)
}

/// Static stability: the center of mass projected along `g` onto the plane `z = 0` must
/// lie in the convex hull of the projected supported points. Fewer than three
/// non-collinear supports are never stable.
pub fn stability_check(com: &Vec3, supported: &[Vec3], g: &Vec3) -> bool {
    if g.z.abs() < 1e-12 || !com.iter().all(|c| c.is_finite()) {
        return false;
    }
    let projected: Vec<P2> = supported.iter().map(|p| project_along(p, g)).collect();
    let hull = convex_hull_2d(&projected);
    if hull.len() < 3 {
        return false;
    }
    point_in_convex_polygon(&project_along(com, g), &hull, BOUNDARY_TOLERANCE)
}
