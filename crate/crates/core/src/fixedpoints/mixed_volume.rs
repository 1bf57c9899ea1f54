//! Mixed volume of two planar Newton polytopes.

use std::collections::BTreeSet;

use crate::error::{invalid, Result};

/// Monomial exponent vectors of one polynomial, without duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet(Vec<[i64; 2]>);

impl SupportSet {
    pub fn new(points: Vec<[i64; 2]>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("support set is empty"));
        }
        let unique: BTreeSet<[i64; 2]> = points.iter().copied().collect();
        if unique.len() != points.len() {
            return Err(invalid("support set has duplicate exponents"));
        }
        Ok(SupportSet(points))
    }

    pub fn points(&self) -> &[[i64; 2]] {
        &self.0
    }
}

fn cross(o: [i64; 2], a: [i64; 2], b: [i64; 2]) -> i64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise hull vertices (monotone chain), collinear points dropped.
pub fn convex_hull(points: &[[i64; 2]]) -> Vec<[i64; 2]> {
    let mut pts: Vec<[i64; 2]> = points.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if pts.len() < 3 {
        return pts;
    }
    pts.sort();
    let mut hull: Vec<[i64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let floor = hull.len();
        for &p in &pts {
            while hull.len() >= floor + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
        if pass == 0 {
            pts.reverse();
        }
    }
    hull
}

/// Twice the enclosed area (shoelace).
fn twice_area(points: &[[i64; 2]]) -> i64 {
    let hull = convex_hull(points);
    let n = hull.len();
    if n < 3 {
        return 0;
    }
    (0..n)
        .map(|k| {
            let (a, b) = (hull[k], hull[(k + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<i64>()
        .abs()
}

/// `M(Q1, Q2) = V(Q1 + Q2) − V(Q1) − V(Q2)` with Euclidean area; this is
/// the BKK root count of a generic system with these supports.
pub fn mixed_volume_2d(q1: &SupportSet, q2: &SupportSet) -> i64 {
    let sum: Vec<[i64; 2]> = q1
        .points()
        .iter()
        .flat_map(|a| q2.points().iter().map(move |b| [a[0] + b[0], a[1] + b[1]]))
        .collect();
    let twice = twice_area(&sum) - twice_area(q1.points()) - twice_area(q2.points());
    debug_assert!(twice % 2 == 0);
    twice / 2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn support(points: &[[i64; 2]]) -> SupportSet {
        SupportSet::new(points.to_vec()).unwrap()
    }

    #[test]
    fn worked_example() {
        let q1 = support(&[[0, 0], [1, 0], [2, 2]]);
        let q2 = support(&[[0, 0], [1, 0], [0, 1], [1, 2]]);
        assert_eq!(mixed_volume_2d(&q1, &q2), 4);
        assert_eq!(mixed_volume_2d(&q2, &q1), 4);
    }

    #[test]
    fn unit_squares() {
        let sq = support(&[[0, 0], [1, 0], [0, 1], [1, 1]]);
        assert_eq!(mixed_volume_2d(&sq, &sq), 2);
    }

    #[test]
    fn point_adds_nothing() {
        let q1 = support(&[[0, 0], [3, 0], [0, 2]]);
        assert_eq!(mixed_volume_2d(&q1, &support(&[[4, 7]])), 0);
    }

    #[test]
    fn degenerate_and_segments() {
        let a = support(&[[0, 0], [1, 1], [2, 2]]);
        let b = support(&[[0, 0], [3, 3]]);
        assert_eq!(mixed_volume_2d(&a, &b), 0);
        // a + b x = 0, c + d y = 0 has one root
        assert_eq!(mixed_volume_2d(&support(&[[0, 0], [1, 0]]), &support(&[[0, 0], [0, 1]])), 1);
    }

    #[test]
    fn total_degree_matches_bezout() {
        // degree-2 and degree-3 dense supports
        let simplex = |d: i64| {
            let pts: Vec<[i64; 2]> = (0..=d).flat_map(|i| (0..=d - i).map(move |j| [i, j])).collect();
            SupportSet::new(pts).unwrap()
        };
        assert_eq!(mixed_volume_2d(&simplex(2), &simplex(3)), 6);
    }

    #[test]
    fn hull_drops_interior_points() {
        let h = convex_hull(&[[0, 0], [2, 0], [1, 1], [2, 2], [0, 2], [1, 0]]);
        assert_eq!(h.len(), 4);
        assert!(SupportSet::new(vec![[0, 0], [0, 0]]).is_err());
        assert!(SupportSet::new(vec![]).is_err());
    }
}
