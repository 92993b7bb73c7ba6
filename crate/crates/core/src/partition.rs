//! Partitions of a time interval.

use serde::Serialize;

use crate::error::{Error, Result};

/// Relative tolerance below which two partition points are identified.
const MERGE_TOL: f64 = 1e-12;

/// A partition `s = t₀ < t₁ < ⋯ < tₙ = t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Partition {
    times: Vec<f64>,
}

impl Partition {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidParameter("a partition needs at least two points".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter("partition points must be finite".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("partition points must be strictly increasing".into()));
        }
        Ok(Self { times })
    }

    /// `n` equal pieces of `[s, t]`.
    pub fn uniform(s: f64, t: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one interval".into()));
        }
        let h = (t - s) / n as f64;
        let mut times: Vec<f64> = (0..n).map(|i| s + h * i as f64).collect();
        times.push(t);
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("non-empty partition")
    }

    pub fn len(&self) -> usize {
        self.times.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The subintervals `(tᵢ₋₁, tᵢ)`.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn increments(&self) -> Vec<f64> {
        self.intervals().map(|(a, b)| b - a).collect()
    }

    /// `‖α‖ = max(tᵢ − tᵢ₋₁)`.
    pub fn mesh(&self) -> f64 {
        self.increments().into_iter().fold(0.0, f64::max)
    }

    fn same_point(a: f64, b: f64) -> bool {
        (a - b).abs() <= MERGE_TOL * (1.0 + a.abs().max(b.abs()))
    }

    /// Common refinement `α ∪ β`; both must cover the same interval.
    pub fn union(&self, other: &Partition) -> Result<Partition> {
        if !Self::same_point(self.start(), other.start()) || !Self::same_point(self.end(), other.end()) {
            return Err(Error::InvalidParameter("partitions cover different intervals".into()));
        }
        let mut all: Vec<f64> = self.times.iter().chain(other.times.iter()).copied().collect();
        all.sort_by(f64::total_cmp);
        let mut merged: Vec<f64> = Vec::with_capacity(all.len());
        for t in all {
            match merged.last() {
                Some(&l) if Self::same_point(l, t) => {}
                _ => merged.push(t),
            }
        }
        let n = merged.len();
        merged[0] = self.start();
        merged[n - 1] = self.end();
        Partition::new(merged)
    }

    /// Whether every point of `other` is a point of `self`.
    pub fn refines(&self, other: &Partition) -> bool {
        other.times.iter().all(|t| self.times.iter().any(|s| Self::same_point(*s, *t)))
    }

    /// Index of the interval of `self` containing the interval `(a, b)` of a refinement.
    pub fn locate(&self, a: f64, b: f64) -> Option<usize> {
        self.intervals().position(|(s, t)| {
            (s < a || Self::same_point(s, a)) && (b < t || Self::same_point(b, t))
        })
    }

    /// Each interval split into `k` equal pieces.
    pub fn refine_uniform(&self, k: usize) -> Result<Partition> {
        if k == 0 {
            return Err(Error::InvalidParameter("refinement factor must be positive".into()));
        }
        let mut times = Vec::with_capacity(self.len() * k + 1);
        for (a, b) in self.intervals() {
            let h = (b - a) / k as f64;
            for i in 0..k {
                times.push(a + h * i as f64);
            }
        }
        times.push(self.end());
        Partition::new(times)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_mesh_and_union() {
        let a = Partition::uniform(0.0, 1.0, 4).unwrap();
        assert_eq!(a.len(), 4);
        assert!((a.mesh() - 0.25).abs() < 1e-15);
        let b = Partition::uniform(0.0, 1.0, 6).unwrap();
        let g = a.union(&b).unwrap();
        // {0, 1/6, 1/4, 1/3, 1/2, 2/3, 3/4, 5/6, 1}
        assert_eq!(g.len(), 8);
        assert!(g.refines(&a) && g.refines(&b));
        assert!(!a.refines(&b));
        assert_eq!(a.locate(0.25, 1.0 / 3.0), Some(1));
    }

    #[test]
    fn invalid_partitions_are_rejected() {
        assert!(Partition::new(vec![0.0]).is_err());
        assert!(Partition::new(vec![0.0, 0.0, 1.0]).is_err());
        assert!(Partition::uniform(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn refine_uniform_splits_each_interval() {
        let a = Partition::new(vec![0.0, 0.5, 2.0]).unwrap();
        let r = a.refine_uniform(3).unwrap();
        assert_eq!(r.len(), 6);
        assert!(r.refines(&a));
        assert!((r.mesh() - 0.5).abs() < 1e-15);
    }
}
