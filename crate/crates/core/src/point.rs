//! Points of `C^k` and the `[re, im]` JSON encoding shared by every payload.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::ops::{Index, IndexMut};

use crate::error::{BallError, Result};

pub type C64 = Complex64;

/// Shorthand constructor for a complex scalar.
#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A vector of `k` complex coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<C64>);

impl Point {
    pub fn new(coords: Vec<C64>) -> Self {
        Point(coords)
    }

    pub fn from_real(coords: &[f64]) -> Self {
        Point(coords.iter().map(|&x| c64(x, 0.0)).collect())
    }

    /// The unit `e = (1, ..., 1)`.
    pub fn unit(k: usize) -> Self {
        Point(vec![c64(1.0, 0.0); k])
    }

    pub fn zero(k: usize) -> Self {
        Point(vec![C64::default(); k])
    }

    /// Standard basis vector `e_i` (0-based).
    pub fn basis(k: usize, i: usize) -> Self {
        let mut p = Self::zero(k);
        p.0[i] = c64(1.0, 0.0);
        p
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[C64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<C64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `max_i |w_i|`, the polydisk norm.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: C64) -> Point {
        Point(self.0.iter().map(|&z| z * s).collect())
    }

    pub fn scale_real(&self, s: f64) -> Point {
        Point(self.0.iter().map(|&z| z * s).collect())
    }

    /// Coordinatewise product, the multiplication of the algebra `C^k`.
    pub fn hadamard(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect())
    }

    pub fn add(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// Max-coordinate distance.
    pub fn dist_max(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Drops the first coordinate.
    pub fn tail(&self) -> Point {
        Point(self.0[1..].to_vec())
    }

    /// Prepends a coordinate.
    pub fn prepend(&self, first: C64) -> Point {
        let mut v = Vec::with_capacity(self.dim() + 1);
        v.push(first);
        v.extend_from_slice(&self.0);
        Point(v)
    }

    pub fn check_dim(&self, k: usize) -> Result<()> {
        if self.dim() != k {
            return Err(BallError::DimensionMismatch {
                expected: k,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

impl Index<usize> for Point {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Point {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

impl From<Vec<C64>> for Point {
    fn from(v: Vec<C64>) -> Self {
        Point(v)
    }
}

pub(crate) fn to_pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub(crate) fn from_pairs(v: &[[f64; 2]]) -> Vec<C64> {
    v.iter().map(|p| c64(p[0], p[1])).collect()
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_pairs(&self.0).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(Point(from_pairs(&pairs)))
    }
}

/// serde adapter for a single complex scalar as `[re, im]`.
pub mod complex_pair {
    use super::*;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<C64, D::Error> {
        let p = <[f64; 2]>::deserialize(d)?;
        Ok(c64(p[0], p[1]))
    }
}

/// serde adapter for `Vec<C64>` as a list of `[re, im]` pairs.
pub mod complex_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
        to_pairs(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<C64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(from_pairs(&pairs))
    }
}
