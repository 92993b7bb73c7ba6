//! Finite linear combinations over an ordered key set.
//!
//! Every algebraic object in the crate (polynomials, tensors, Sweedler
//! expansions, group-like carrier elements) is a `LinComb` over some key.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use num_complex::Complex64;

/// Coefficients with modulus at or below this value are dropped.
pub const DROP_TOL: f64 = 1e-14;

pub type C64 = Complex64;

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinComb<K: Ord> {
    terms: BTreeMap<K, C64>,
}

impl<K: Ord> Default for LinComb<K> {
    fn default() -> Self {
        Self { terms: BTreeMap::new() }
    }
}

impl<K: Ord + Clone> LinComb<K> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(key: K, coeff: C64) -> Self {
        let mut out = Self::zero();
        out.add_term(key, coeff);
        out.prune();
        out
    }

    pub fn from_terms<I: IntoIterator<Item = (K, C64)>>(iter: I) -> Self {
        let mut out = Self::zero();
        for (k, c) in iter {
            out.add_term(k, c);
        }
        out.prune();
        out
    }

    /// Accumulates without pruning; call [`LinComb::prune`] after a pass.
    pub fn add_term(&mut self, key: K, coeff: C64) {
        if coeff == C64::new(0.0, 0.0) {
            return;
        }
        *self.terms.entry(key).or_insert(C64::new(0.0, 0.0)) += coeff;
    }

    pub fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() > DROP_TOL);
        // canonical zero sign so that bitwise keys agree
        for c in self.terms.values_mut() {
            c.re += 0.0;
            c.im += 0.0;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &C64)> {
        self.terms.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.terms.keys()
    }

    pub fn coeff(&self, key: &K) -> C64 {
        self.terms.get(key).copied().unwrap_or_default()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_terms(self.terms.iter().map(|(k, c)| (k.clone(), c * s)))
    }

    pub fn conj(&self) -> Self {
        Self::from_terms(self.terms.iter().map(|(k, c)| (k.clone(), c.conj())))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(C64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    /// `self + s * other`
    pub fn axpy(&self, s: C64, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in other.iter() {
            out.add_term(k.clone(), c * s);
        }
        out.prune();
        out
    }

    /// Largest coefficient modulus (0 for the zero combination).
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn into_terms(self) -> BTreeMap<K, C64> {
        self.terms
    }

    /// Applies a linear map given on keys.
    pub fn map_linear<K2: Ord + Clone, E, F>(&self, mut f: F) -> Result<LinComb<K2>, E>
    where
        F: FnMut(&K) -> Result<LinComb<K2>, E>,
    {
        let mut out = LinComb::zero();
        for (k, c) in self.iter() {
            for (k2, c2) in f(k)?.iter() {
                out.add_term(k2.clone(), c * c2);
            }
        }
        out.prune();
        Ok(out)
    }
}

impl<K: Ord> FromIterator<(K, C64)> for LinComb<K>
where
    K: Clone,
{
    fn from_iter<I: IntoIterator<Item = (K, C64)>>(iter: I) -> Self {
        Self::from_terms(iter)
    }
}

fn bits(c: &C64) -> (u64, u64) {
    (c.re.to_bits(), c.im.to_bits())
}

// Bitwise identity of coefficients: two combinations are the same key only if
// they were produced by identical arithmetic.
impl<K: Ord> Eq for LinComb<K> {}

impl<K: Ord> Hash for LinComb<K>
where
    K: Hash,
{
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.terms.len().hash(state);
        for (k, c) in &self.terms {
            k.hash(state);
            bits(c).hash(state);
        }
    }
}

impl<K: Ord> PartialOrd for LinComb<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K: Ord> Ord for LinComb<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        let a = self.terms.iter().map(|(k, c)| (k, bits(c)));
        let b = other.terms.iter().map(|(k, c)| (k, bits(c)));
        a.cmp(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cancellation_prunes() {
        let p = LinComb::single(1u8, c64(2.0, 0.0));
        assert!(p.sub(&p).is_zero());
    }

    #[test]
    fn tiny_coefficients_are_dropped() {
        let p = LinComb::from_terms([(1u8, c64(1.0, 0.0)), (2u8, c64(1e-16, 0.0))]);
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn equal_combinations_compare_equal() {
        let a = LinComb::from_terms([(1u8, c64(0.5, 0.0)), (2, c64(0.0, 1.0))]);
        let b = LinComb::from_terms([(2u8, c64(0.0, 1.0)), (1, c64(0.5, 0.0))]);
        assert_eq!(a.cmp(&b), Ordering::Equal);
        assert_eq!(a, b);
    }
}
