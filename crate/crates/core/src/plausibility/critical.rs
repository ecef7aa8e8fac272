use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

use super::{stability_check, surface_distance, PlaneFrameScene, SurfaceDistanceField, SurfaceParams};

/// Index sets into the queried cloud.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalPoints {
    pub intersecting: Vec<usize>,
    pub contact: Vec<usize>,
    /// Subset of `contact`.
    pub supported: Vec<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlausibilityVerdict {
    pub intersecting: bool,
    pub floating: bool,
    pub feasible: bool,
    pub stable: bool,
}

/// Classifies each point of a distance field. A contact point is supported when a
/// quorum of the neighbour normals on the touching surface oppose gravity.
pub fn critical_points(field: &SurfaceDistanceField, g: &Vec3, epsilon: f64) -> CriticalPoints {
    let mut cp = CriticalPoints::default();
    for (i, &d) in field.distance.iter().enumerate() {
        if d < -epsilon {
            cp.intersecting.push(i);
        } else if d.abs() < epsilon {
            cp.contact.push(i);
            let normals = field.neighbor_normals(i);
            let votes = normals.iter().filter(|n| n.dot(g) < 0.0).count();
            if !normals.is_empty() && votes >= field.params.votes_needed(normals.len()) {
                cp.supported.push(i);
            }
        }
    }
    cp
}

pub fn plausibility_verdict(cp: &CriticalPoints, stability: bool) -> PlausibilityVerdict {
    let intersecting = !cp.intersecting.is_empty();
    let floating = cp.contact.is_empty();
    let feasible = !intersecting && !floating;
    PlausibilityVerdict { intersecting, floating, feasible, stable: feasible && stability }
}

/// Everything the plausibility check produced for one object.
#[derive(Clone, Debug)]
pub struct ObjectPlausibility {
    pub field: SurfaceDistanceField,
    pub critical: CriticalPoints,
    pub verdict: PlausibilityVerdict,
}

/// Evaluates object `index` of a plane-frame scene: surface distances of its placed
/// target against the plane and every other object, critical points and verdict.
pub fn evaluate_object(scene: &PlaneFrameScene, index: usize, epsilon: f64, params: SurfaceParams) -> ObjectPlausibility {
    let obj = &scene.objects[index];
    let field = surface_distance(&obj.target.points, scene, Some(index), params);
    let critical = critical_points(&field, &scene.gravity, epsilon);
    let supports: Vec<Vec3> = critical.supported.iter().map(|&i| obj.target.points[i]).collect();
    let stable = stability_check(&obj.com, &supports, &scene.gravity);
    let verdict = plausibility_verdict(&critical, stable);
    ObjectPlausibility { field, critical, verdict }
}
