//! The n-dimensional axisymmetric cross.
//!
//! A cross has a center `g0` and `n` cohorts, one per coordinate axis. Cohort
//! `χ` holds `K` points on the line through `g0` parallel to axis `χ`, spaced
//! `s` apart and placed symmetrically around the center. A point is named by a
//! [`Marker`] `(χ, η)` with `1 <= |η| <= K/2`; its coordinates are
//! `g0 + η·s·e_χ`. The center belongs to no cohort, so the cross has
//! `nK + 1` points.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marker {
    pub cohort: usize,
    pub offset: i64,
}

impl Marker {
    pub fn new(cohort: usize, offset: i64) -> Self {
        Self { cohort, offset }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cross {
    center: Vec<f64>,
    spacing: f64,
    points_per_cohort: usize,
}

impl Cross {
    pub fn new(center: Vec<f64>, spacing: f64, points_per_cohort: usize) -> Result<Self> {
        if center.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "cross dimension must be at least 2, got {}",
                center.len()
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        if points_per_cohort < 2 || !points_per_cohort.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "points per cohort must be even and >= 2, got {points_per_cohort}"
            )));
        }
        if !center.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite cross center".into()));
        }
        Ok(Self {
            center,
            spacing,
            points_per_cohort,
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn points_per_cohort(&self) -> usize {
        self.points_per_cohort
    }

    pub fn dimension(&self) -> usize {
        self.center.len()
    }

    /// Points excluding the center, `nK`.
    pub fn cohort_point_count(&self) -> usize {
        self.dimension() * self.points_per_cohort
    }

    /// `nK + 1`.
    pub fn total_points(&self) -> usize {
        self.cohort_point_count() + 1
    }

    fn half(&self) -> i64 {
        (self.points_per_cohort / 2) as i64
    }

    pub fn is_valid(&self, m: Marker) -> bool {
        m.cohort < self.dimension() && m.offset != 0 && m.offset.abs() <= self.half()
    }

    fn check_cohort(&self, cohort: usize) -> Result<()> {
        if cohort >= self.dimension() {
            return Err(Error::IndexOutOfRange {
                what: "cohort",
                index: cohort,
                bound: self.dimension(),
            });
        }
        Ok(())
    }

    pub fn point_of(&self, m: Marker) -> Result<Vec<f64>> {
        if !self.is_valid(m) {
            return Err(Error::InvalidArgument(format!(
                "marker ({}, {}) is not on this cross",
                m.cohort, m.offset
            )));
        }
        let mut p = self.center.clone();
        self.place(m, &mut p);
        Ok(p)
    }

    /// Writes the coordinates of a valid marker into `buf`, which must hold
    /// the center.
    #[inline]
    pub(crate) fn place(&self, m: Marker, buf: &mut [f64]) {
        buf[m.cohort] = self.center[m.cohort] + m.offset as f64 * self.spacing;
    }

    /// Offsets of one cohort in ascending order, skipping 0.
    fn offsets(&self) -> impl Iterator<Item = i64> {
        let h = self.half();
        (-h..=h).filter(|&e| e != 0)
    }

    /// All `nK` markers, cohort-major with ascending offsets.
    pub fn markers(&self) -> Vec<Marker> {
        (0..self.dimension())
            .flat_map(|c| self.offsets().map(move |e| Marker::new(c, e)))
            .collect()
    }

    pub fn cohort_markers(&self, cohort: usize) -> Result<Vec<Marker>> {
        self.check_cohort(cohort)?;
        Ok(self.offsets().map(|e| Marker::new(cohort, e)).collect())
    }

    pub fn recenter(&self, new_center: Vec<f64>) -> Result<Cross> {
        if new_center.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: new_center.len(),
            });
        }
        Cross::new(new_center, self.spacing, self.points_per_cohort)
    }

    /// Same center and `K`, new spacing.
    pub fn with_spacing(&self, spacing: f64) -> Result<Cross> {
        Cross::new(self.center.clone(), spacing, self.points_per_cohort)
    }

    /// Recovers the marker of a cross point; `None` for the center or for
    /// points not on the cross.
    pub fn marker_of(&self, point: &[f64]) -> Option<Marker> {
        if point.len() != self.dimension() {
            return None;
        }
        let mut differing = point
            .iter()
            .zip(&self.center)
            .enumerate()
            .filter(|(_, (p, g))| p.to_bits() != g.to_bits());
        let (cohort, (p, g)) = differing.next()?;
        if differing.next().is_some() {
            return None;
        }
        let offset = ((p - g) / self.spacing).round() as i64;
        let m = Marker::new(cohort, offset);
        (self.is_valid(m) && self.point_of(m).ok()?.as_slice() == point).then_some(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn construction_invariants() {
        assert!(Cross::new(vec![0.0], 1.0, 2).is_err());
        assert!(Cross::new(vec![0.0, 0.0], 0.0, 2).is_err());
        assert!(Cross::new(vec![0.0, 0.0], 1.0, 3).is_err());
        assert!(Cross::new(vec![0.0, 0.0], 1.0, 0).is_err());
        let c = Cross::new(vec![0.0, 0.0], 1.0, 2).unwrap();
        assert_eq!(c.cohort_point_count(), 4);
        assert_eq!(c.total_points(), 5);
    }

    #[test]
    fn point_of_examples() {
        let c = Cross::new(vec![0.0, 0.0], 1.0, 4).unwrap();
        assert_eq!(c.point_of(Marker::new(0, 2)).unwrap(), vec![2.0, 0.0]);
        let c = Cross::new(vec![1.0, 1.0], 0.5, 6).unwrap();
        assert_eq!(c.point_of(Marker::new(1, -3)).unwrap(), vec![1.0, -0.5]);
        assert!(c.point_of(Marker::new(1, 0)).is_err());
        assert!(c.point_of(Marker::new(1, 4)).is_err());
        assert!(c.point_of(Marker::new(2, 1)).is_err());
    }

    #[test]
    fn two_dimensional_k6_layout() {
        let c = Cross::new(vec![0.0, 0.0], 1.0, 6).unwrap();
        let ms = c.markers();
        assert_eq!(ms.len(), 12);
        let mut pts: Vec<Vec<f64>> = ms.iter().map(|&m| c.point_of(m).unwrap()).collect();
        pts.push(c.center().to_vec());
        assert_eq!(pts.len(), 13);
        for axis in 0..2 {
            let mut on_axis: Vec<f64> = pts
                .iter()
                .filter(|p| p[1 - axis] == 0.0 && p[axis] != 0.0)
                .map(|p| p[axis])
                .collect();
            on_axis.sort_by(f64::total_cmp);
            assert_eq!(on_axis, vec![-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]);
        }
    }

    #[test]
    fn markers_smallest_cross() {
        let c = Cross::new(vec![0.0, 0.0], 1.0, 2).unwrap();
        assert_eq!(
            c.markers(),
            vec![
                Marker::new(0, -1),
                Marker::new(0, 1),
                Marker::new(1, -1),
                Marker::new(1, 1)
            ]
        );
    }

    #[test]
    fn cohort_markers_example() {
        let c = Cross::new(vec![0.0; 3], 1.0, 4).unwrap();
        assert_eq!(
            c.cohort_markers(1).unwrap(),
            vec![
                Marker::new(1, -2),
                Marker::new(1, -1),
                Marker::new(1, 1),
                Marker::new(1, 2)
            ]
        );
        assert!(c.cohort_markers(3).is_err());
    }

    #[test]
    fn recenter_examples() {
        let c = Cross::new(vec![1.0, 2.0], 0.5, 4).unwrap();
        assert_eq!(c.recenter(vec![1.0, 2.0]).unwrap(), c);
        let moved = c.recenter(vec![3.0, -1.0]).unwrap();
        for m in c.markers() {
            let p = c.point_of(m).unwrap();
            let q = moved.point_of(m).unwrap();
            assert_eq!(q[0] - p[0], 2.0);
            assert_eq!(q[1] - p[1], -3.0);
        }
        assert!(c.recenter(vec![1.0]).is_err());
    }

    fn dist(p: &[f64], q: &[f64]) -> f64 {
        p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    proptest! {
        #[test]
        fn cohorts_partition_markers(n in 2usize..12, half in 1usize..6) {
            let c = Cross::new(vec![0.0; n], 1.0, 2 * half).unwrap();
            let all = c.markers();
            prop_assert_eq!(all.len(), n * 2 * half);
            let joined: Vec<Marker> = (0..n).flat_map(|k| c.cohort_markers(k).unwrap()).collect();
            prop_assert_eq!(&joined, &all);
            let set: std::collections::HashSet<_> = all.iter().collect();
            prop_assert_eq!(set.len(), all.len());
        }

        #[test]
        fn geometry_properties(
            center in proptest::collection::vec(-50.0f64..50.0, 2..8),
            spacing in 0.01f64..10.0,
            half in 1usize..6,
        ) {
            let c = Cross::new(center.clone(), spacing, 2 * half).unwrap();
            let n = center.len();
            for m in c.markers() {
                let p = c.point_of(m).unwrap();
                // only coordinate χ differs from the center
                for j in 0..n {
                    if j != m.cohort {
                        prop_assert_eq!(p[j].to_bits(), center[j].to_bits());
                    }
                }
                prop_assert_eq!(c.marker_of(&p), Some(m));
                // reflection through the center
                let q = c.point_of(Marker::new(m.cohort, -m.offset)).unwrap();
                let mid = (p[m.cohort] + q[m.cohort]) / 2.0;
                prop_assert!((mid - center[m.cohort]).abs() <= 1e-9 * (1.0 + center[m.cohort].abs()));
            }
            prop_assert_eq!(c.marker_of(&center), None);
            // neighbour spacing along each cohort, through the center
            for k in 0..n {
                let mut line: Vec<Vec<f64>> = c.cohort_markers(k).unwrap()
                    .into_iter().map(|m| c.point_of(m).unwrap()).collect();
                line.insert(half, center.clone());
                for w in line.windows(2) {
                    prop_assert!((dist(&w[0], &w[1]) - spacing).abs() <= 1e-9 * (1.0 + spacing + center[k].abs()));
                }
            }
        }
    }
}
