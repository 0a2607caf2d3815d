use serde::{Deserialize, Serialize};

use crate::cityworld::CityMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }

    pub fn horizontal_distance(&self, other: &Point3) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn axis(&self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn contains(&self, p: &Point3) -> bool {
        (0..3).all(|i| p.axis(i) >= self.min.axis(i) && p.axis(i) <= self.max.axis(i))
    }
}

/// Slab test for the closed segment `a → b` against a closed box.
/// Touching a face, edge or corner counts as a hit.
pub fn segment_hits_box(a: &Point3, b: &Point3, bx: &Aabb) -> bool {
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for i in 0..3 {
        let origin = a.axis(i);
        let dir = b.axis(i) - origin;
        let (lo, hi) = (bx.min.axis(i), bx.max.axis(i));
        if dir == 0.0 {
            if origin < lo || origin > hi {
                return false;
            }
            continue;
        }
        let mut ta = (lo - origin) / dir;
        let mut tb = (hi - origin) / dir;
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 > t1 {
            return false;
        }
    }
    true
}

/// Line of sight between the UAV and a base-station antenna: no building box
/// may intersect (or touch) the straight segment between them.
pub fn is_los(uav: &Point3, antenna: &Point3, city: &CityMap) -> bool {
    city.buildings.iter().all(|b| !segment_hits_box(uav, antenna, &b.aabb()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radiomap::Building;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_box() -> Aabb {
        Aabb { min: Point3::new(0.0, 0.0, 0.0), max: Point3::new(1.0, 1.0, 1.0) }
    }

    #[test]
    fn crossing_and_missing() {
        let b = unit_box();
        assert!(segment_hits_box(&Point3::new(-1.0, 0.5, 0.5), &Point3::new(2.0, 0.5, 0.5), &b));
        assert!(!segment_hits_box(&Point3::new(-1.0, 2.0, 0.5), &Point3::new(2.0, 2.0, 0.5), &b));
        // stops short
        assert!(!segment_hits_box(&Point3::new(-2.0, 0.5, 0.5), &Point3::new(-0.5, 0.5, 0.5), &b));
    }

    #[test]
    fn boundary_contact_is_blocked() {
        let b = unit_box();
        // grazes the top face
        assert!(segment_hits_box(&Point3::new(-1.0, 0.5, 1.0), &Point3::new(2.0, 0.5, 1.0), &b));
        // touches a corner
        assert!(segment_hits_box(&Point3::new(-1.0, -1.0, 0.5), &Point3::new(0.0, 0.0, 0.5), &b));
    }

    #[test]
    fn empty_city_always_los() {
        let city = CityMap::empty(1000.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = Point3::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0), 90.0);
            let b = Point3::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0), 20.0);
            assert!(is_los(&a, &b, &city));
        }
    }

    #[test]
    fn tall_building_between_blocks() {
        let mut city = CityMap::empty(1000.0);
        city.buildings.push(Building::new([400.0, 400.0], [600.0, 600.0], 95.0).unwrap());
        let uav = Point3::new(100.0, 500.0, 90.0);
        let bs = Point3::new(900.0, 500.0, 20.0);
        assert!(!is_los(&uav, &bs, &city));
        assert!(is_los(&uav, &Point3::new(100.0, 900.0, 20.0), &city));
    }

    /// Dense sampling oracle: 10,000 evenly spaced points, point-in-box.
    fn sampled_blocked(a: &Point3, b: &Point3, boxes: &[Aabb]) -> bool {
        let n = 10_000;
        (0..=n).any(|k| {
            let t = k as f64 / n as f64;
            let p = Point3::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), a.z + t * (b.z - a.z));
            boxes.iter().any(|bx| bx.contains(&p))
        })
    }

    #[test]
    fn matches_sampling_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut city = CityMap::empty(1000.0);
        for _ in 0..12 {
            let x = rng.gen_range(0.0..900.0);
            let y = rng.gen_range(0.0..900.0);
            let w = rng.gen_range(30.0..100.0);
            let d = rng.gen_range(30.0..100.0);
            city.buildings.push(Building::new([x, y], [x + w, y + d], rng.gen_range(10.0..85.0)).unwrap());
        }
        let boxes: Vec<Aabb> = city.buildings.iter().map(|b| b.aabb()).collect();
        for _ in 0..300 {
            let a = Point3::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0), 90.0);
            let b = Point3::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0), rng.gen_range(5.0..25.0));
            assert_eq!(is_los(&a, &b, &city), !sampled_blocked(&a, &b, &boxes), "{a:?} -> {b:?}");
        }
    }
}
