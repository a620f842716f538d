//! Points, local frames and rotations on the unit sphere.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;
pub type Rotation = Matrix3<f64>;

/// A point given by colatitude and longitude, both in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub colat: f64,
    pub lon: f64,
}

impl SpherePoint {
    pub const NORTH_POLE: SpherePoint = SpherePoint { colat: 0.0, lon: 0.0 };

    pub fn new(colat: f64, lon: f64) -> Self {
        SpherePoint { colat, lon }
    }

    pub fn to_cartesian(self) -> Vec3 {
        let (sc, cc) = self.colat.sin_cos();
        let (sl, cl) = self.lon.sin_cos();
        Vec3::new(sc * cl, sc * sl, cc)
    }

    pub fn from_cartesian(v: &Vec3) -> Self {
        let r = v.norm();
        let z = (v.z / r).clamp(-1.0, 1.0);
        let lon = v.y.atan2(v.x);
        SpherePoint {
            colat: z.acos(),
            lon: if lon < 0.0 { lon + 2.0 * std::f64::consts::PI } else { lon },
        }
    }

    /// Unit vectors in the colatitude and longitude directions.
    pub fn frame(self) -> (Vec3, Vec3) {
        let (sc, cc) = self.colat.sin_cos();
        let (sl, cl) = self.lon.sin_cos();
        (Vec3::new(cc * cl, cc * sl, -sc), Vec3::new(-sl, cl, 0.0))
    }

    pub fn distance(self, other: SpherePoint) -> f64 {
        great_circle_distance(&self.to_cartesian(), &other.to_cartesian())
    }
}

/// Great-circle distance between unit vectors, accurate for small and
/// near-antipodal separations.
pub fn great_circle_distance(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Unit tangent at `x` of the gradient of `y ↦ d(center, y)`, i.e. the
/// direction pointing away from `center`. Returns zero at `center` and at its
/// antipode.
pub fn distance_gradient(center: &Vec3, x: &Vec3) -> Vec3 {
    let toward = center - x * x.dot(center);
    let n = toward.norm();
    if n < 1e-300 {
        Vec3::zeros()
    } else {
        -toward / n
    }
}

/// Rotation by `angle` about the unit `axis` (Rodrigues).
pub fn axis_angle(axis: &Vec3, angle: f64) -> Rotation {
    let k = axis.normalize();
    let kx = cross_matrix(&k);
    Rotation::identity() + kx * angle.sin() + kx * kx * (1.0 - angle.cos())
}

/// Matrix of `v ↦ w × v`.
pub fn cross_matrix(w: &Vec3) -> Rotation {
    Rotation::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Nearest proper rotation, by Gram–Schmidt on the columns.
pub fn reorthonormalize(r: &Rotation) -> Rotation {
    let c0 = r.column(0).normalize();
    let c1 = (r.column(1) - c0 * c0.dot(&r.column(1))).normalize();
    let c2 = c0.cross(&c1);
    Rotation::from_columns(&[c0, c1, c2])
}
