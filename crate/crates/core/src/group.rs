//! Finite abelian groups presented as products of cyclic factors.
//!
//! Elements are stored as flat indices in mixed radix with the first factor
//! most significant, so index order coincides with lexicographic coordinate
//! order. The dual group is identified with the group itself: the character
//! with coordinates `g` pairs with `x` as `exp(2πi Σ g_j x_j / N_j)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest group order the toolkit will enumerate.
pub const MAX_ORDER: usize = 1 << 24;

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct FiniteAbelianGroup {
    factors: Vec<u64>,
    strides: Vec<usize>,
    order: usize,
    exponent: u64,
}

impl FiniteAbelianGroup {
    pub fn new(factors: Vec<u64>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidGroup("no cyclic factors".into()));
        }
        if let Some(&bad) = factors.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidGroup(format!("factor {bad} < 2")));
        }
        let mut order: usize = 1;
        for &n in &factors {
            order = order
                .checked_mul(n as usize)
                .filter(|&o| o <= MAX_ORDER)
                .ok_or(Error::TooLarge(usize::MAX))?;
        }
        let mut strides = vec![1usize; factors.len()];
        for j in (0..factors.len().saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * factors[j + 1] as usize;
        }
        let exponent = factors.iter().fold(1u64, |acc, &n| lcm(acc, n));
        Ok(Self {
            factors,
            strides,
            order,
            exponent,
        })
    }

    /// Cyclic group `Z/n`.
    pub fn cyclic(n: u64) -> Result<Self> {
        Self::new(vec![n])
    }

    /// `(Z/n)^d`.
    pub fn power(n: u64, d: usize) -> Result<Self> {
        Self::new(vec![n; d])
    }

    pub fn factors(&self) -> &[u64] {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Least common multiple of the factors.
    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    /// `Some(n)` when every factor equals `n`.
    pub fn uniform_modulus(&self) -> Option<u64> {
        let n = self.factors[0];
        self.factors.iter().all(|&m| m == n).then_some(n)
    }

    pub fn zero(&self) -> usize {
        0
    }

    pub fn coords(&self, idx: usize) -> Vec<u64> {
        debug_assert!(idx < self.order);
        self.factors
            .iter()
            .zip(&self.strides)
            .map(|(&n, &s)| ((idx / s) as u64) % n)
            .collect()
    }

    /// Index of the element with the given coordinates; coordinates are
    /// reduced into canonical residues first.
    pub fn index_of(&self, coords: &[i64]) -> Result<usize> {
        if coords.len() != self.rank() {
            return Err(Error::Arity {
                expected: self.rank(),
                got: coords.len(),
            });
        }
        Ok(coords
            .iter()
            .zip(&self.factors)
            .zip(&self.strides)
            .map(|((&c, &n), &s)| c.rem_euclid(n as i64) as usize * s)
            .sum())
    }

    pub fn index_of_residues(&self, coords: &[u64]) -> usize {
        coords
            .iter()
            .zip(&self.factors)
            .zip(&self.strides)
            .map(|((&c, &n), &s)| (c % n) as usize * s)
            .sum()
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        let mut out = 0;
        for (&n, &s) in self.factors.iter().zip(&self.strides) {
            let n = n as usize;
            let x = (a / s) % n + (b / s) % n;
            out += if x >= n { x - n } else { x } * s;
        }
        out
    }

    pub fn neg(&self, a: usize) -> usize {
        let mut out = 0;
        for (&n, &s) in self.factors.iter().zip(&self.strides) {
            let n = n as usize;
            let x = (a / s) % n;
            out += if x == 0 { 0 } else { n - x } * s;
        }
        out
    }

    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg(b))
    }

    /// Phase of `chi(x)` as a numerator over [`Self::exponent`]:
    /// `chi(x) = exp(2πi · phase / exponent)`.
    pub fn pairing_phase(&self, chi: usize, x: usize) -> u64 {
        let l = self.exponent as u128;
        let mut acc: u128 = 0;
        for (&n, &s) in self.factors.iter().zip(&self.strides) {
            let g = ((chi / s) as u64 % n) as u128;
            let y = ((x / s) as u64 % n) as u128;
            acc += (g * y % n as u128) * (l / n as u128);
        }
        (acc % l) as u64
    }

    /// `|1 - chi(x)| = 2 |sin(π · phase / exponent)|`.
    pub fn chord(&self, chi: usize, x: usize) -> f64 {
        chord_from_phase(self.pairing_phase(chi, x), self.exponent)
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.order
    }
}

pub(crate) fn chord_from_phase(phase: u64, exponent: u64) -> f64 {
    // fold into [0, 1/2] of a turn before taking the sine
    let folded = phase.min(exponent - phase);
    2.0 * (std::f64::consts::PI * folded as f64 / exponent as f64).sin()
}

impl TryFrom<Vec<u64>> for FiniteAbelianGroup {
    type Error = Error;
    fn try_from(v: Vec<u64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FiniteAbelianGroup> for Vec<u64> {
    fn from(g: FiniteAbelianGroup) -> Self {
        g.factors
    }
}

impl fmt::Debug for FiniteAbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for FiniteAbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.factors.iter().map(|n| format!("Z/{n}")).collect();
        write!(f, "{}", parts.join(" x "))
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// An element given by canonical residues.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    pub coords: Vec<u64>,
}

impl GroupElement {
    pub fn from_index(group: &FiniteAbelianGroup, idx: usize) -> Self {
        Self {
            coords: group.coords(idx),
        }
    }

    pub fn index(&self, group: &FiniteAbelianGroup) -> usize {
        group.index_of_residues(&self.coords)
    }
}

/// A character of the group, in the canonical self-dual identification.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Character {
    pub coords: Vec<u64>,
}

impl Character {
    pub fn from_index(group: &FiniteAbelianGroup, idx: usize) -> Self {
        Self {
            coords: group.coords(idx),
        }
    }

    pub fn index(&self, group: &FiniteAbelianGroup) -> usize {
        group.index_of_residues(&self.coords)
    }

    pub fn is_trivial(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    pub fn eval(&self, group: &FiniteAbelianGroup, x: usize) -> num_complex::Complex64 {
        let phase = group.pairing_phase(self.index(group), x);
        let theta = 2.0 * std::f64::consts::PI * phase as f64 / group.exponent() as f64;
        num_complex::Complex64::from_polar(1.0, theta)
    }
}

/// A subset of a finite abelian group, kept as a sorted index list plus a
/// membership mask.
#[derive(Clone, PartialEq, Eq)]
pub struct Subset {
    group: FiniteAbelianGroup,
    members: Vec<usize>,
    mask: Vec<bool>,
}

impl Subset {
    pub fn from_indices<I: IntoIterator<Item = usize>>(group: &FiniteAbelianGroup, it: I) -> Self {
        let mut mask = vec![false; group.order()];
        for i in it {
            mask[i] = true;
        }
        Self::from_mask(group, mask)
    }

    pub fn from_mask(group: &FiniteAbelianGroup, mask: Vec<bool>) -> Self {
        assert_eq!(mask.len(), group.order());
        let members = mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect();
        Self {
            group: group.clone(),
            members,
            mask,
        }
    }

    pub fn from_coords(group: &FiniteAbelianGroup, coords: &[Vec<i64>]) -> Result<Self> {
        let idx = coords
            .iter()
            .map(|c| group.index_of(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_indices(group, idx))
    }

    pub fn empty(group: &FiniteAbelianGroup) -> Self {
        Self::from_mask(group, vec![false; group.order()])
    }

    pub fn full(group: &FiniteAbelianGroup) -> Self {
        Self::from_mask(group, vec![true; group.order()])
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.mask[x]
    }

    /// Density `|X| / |G|`.
    pub fn density(&self) -> f64 {
        self.len() as f64 / self.group.order() as f64
    }

    pub fn is_subset_of(&self, other: &Subset) -> bool {
        self.group == other.group && self.members.iter().all(|&x| other.contains(x))
    }

    pub fn intersection(&self, other: &Subset) -> Result<Subset> {
        self.check_group(other)?;
        Ok(Subset::from_indices(
            &self.group,
            self.members.iter().copied().filter(|&x| other.contains(x)),
        ))
    }

    pub fn union(&self, other: &Subset) -> Result<Subset> {
        self.check_group(other)?;
        Ok(Subset::from_indices(
            &self.group,
            self.members.iter().chain(other.members.iter()).copied(),
        ))
    }

    /// `X + t`.
    pub fn translate(&self, t: usize) -> Subset {
        Subset::from_indices(&self.group, self.members.iter().map(|&x| self.group.add(x, t)))
    }

    /// `-X`.
    pub fn negate(&self) -> Subset {
        Subset::from_indices(&self.group, self.members.iter().map(|&x| self.group.neg(x)))
    }

    /// Image under an arbitrary index map.
    pub fn map<F: Fn(usize) -> usize>(&self, f: F) -> Subset {
        Subset::from_indices(&self.group, self.members.iter().map(|&x| f(x)))
    }

    pub fn to_coords(&self) -> Vec<Vec<u64>> {
        self.members.iter().map(|&x| self.group.coords(x)).collect()
    }

    fn check_group(&self, other: &Subset) -> Result<()> {
        if self.group != other.group {
            return Err(Error::GroupMismatch);
        }
        Ok(())
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Subset")
            .field("group", &self.group)
            .field("members", &self.members)
            .finish()
    }
}

#[derive(Serialize, Deserialize)]
struct SubsetRepr {
    factors: Vec<u64>,
    elements: Vec<Vec<i64>>,
}

impl Serialize for Subset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SubsetRepr {
            factors: self.group.factors().to_vec(),
            elements: self
                .to_coords()
                .into_iter()
                .map(|c| c.into_iter().map(|v| v as i64).collect())
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Subset {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SubsetRepr::deserialize(d)?;
        let group = FiniteAbelianGroup::new(repr.factors).map_err(serde::de::Error::custom)?;
        Subset::from_coords(&group, &repr.elements).map_err(serde::de::Error::custom)
    }
}
