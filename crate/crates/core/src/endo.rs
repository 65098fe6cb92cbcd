//! Endomorphisms of finite abelian groups, validated coefficient systems
//! `T1 a1 + T2 a2 + T3 a3 = 0`, and the word sets generated by
//! `{Id, T2, T3, T2⁻¹, T3⁻¹}`.
//!
//! On `(Z/N)^d` an endomorphism is a `d × d` matrix of residues. On a product
//! of cyclic groups with unequal factors only scalar multiplications are
//! supported.

use std::collections::HashSet;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::group::{gcd, FiniteAbelianGroup, Subset};

#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    /// Multiplication by a residue modulo the group exponent.
    Scalar(u64),
    /// Row-major `d × d` matrix of residues modulo the common factor.
    Matrix(Vec<u64>),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Endomorphism {
    group: FiniteAbelianGroup,
    repr: Repr,
}

impl Endomorphism {
    /// `x ↦ s·x`. On a group with equal factors this is stored as `s·Id`.
    pub fn scalar(group: &FiniteAbelianGroup, s: i64) -> Self {
        match group.uniform_modulus() {
            Some(n) => {
                let d = group.rank();
                let v = s.rem_euclid(n as i64) as u64;
                let mut m = vec![0; d * d];
                for i in 0..d {
                    m[i * d + i] = v;
                }
                Self {
                    group: group.clone(),
                    repr: Repr::Matrix(m),
                }
            }
            None => Self {
                group: group.clone(),
                repr: Repr::Scalar(s.rem_euclid(group.exponent() as i64) as u64),
            },
        }
    }

    pub fn identity(group: &FiniteAbelianGroup) -> Self {
        Self::scalar(group, 1)
    }

    /// Integer matrix acting on column vectors of `(Z/N)^d`.
    pub fn matrix(group: &FiniteAbelianGroup, rows: &[Vec<i64>]) -> Result<Self> {
        let n = group.uniform_modulus().ok_or_else(|| {
            Error::Shape(format!("matrix coefficients need equal factors, got {group}"))
        })?;
        let d = group.rank();
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(Error::Shape(format!("expected a {d}x{d} matrix")));
        }
        let m = rows
            .iter()
            .flatten()
            .map(|&v| v.rem_euclid(n as i64) as u64)
            .collect();
        Ok(Self {
            group: group.clone(),
            repr: Repr::Matrix(m),
        })
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    /// Matrix rows as residues, or `None` for a scalar on a mixed group.
    pub fn matrix_rows(&self) -> Option<Vec<Vec<u64>>> {
        match &self.repr {
            Repr::Matrix(m) => {
                let d = self.group.rank();
                Some(m.chunks(d).map(|r| r.to_vec()).collect())
            }
            Repr::Scalar(_) => None,
        }
    }

    fn modulus(&self) -> u64 {
        match self.repr {
            Repr::Scalar(_) => self.group.exponent(),
            Repr::Matrix(_) => self.group.factors()[0],
        }
    }

    pub fn apply(&self, x: usize) -> usize {
        let g = &self.group;
        match &self.repr {
            Repr::Scalar(s) => {
                let c: Vec<u64> = g
                    .coords(x)
                    .iter()
                    .zip(g.factors())
                    .map(|(&v, &n)| ((v as u128 * (*s % n) as u128) % n as u128) as u64)
                    .collect();
                g.index_of_residues(&c)
            }
            Repr::Matrix(m) => {
                let n = g.factors()[0] as u128;
                let c = g.coords(x);
                let d = c.len();
                let out: Vec<u64> = (0..d)
                    .map(|i| {
                        let s: u128 = (0..d).map(|j| m[i * d + j] as u128 * c[j] as u128).sum();
                        (s % n) as u64
                    })
                    .collect();
                g.index_of_residues(&out)
            }
        }
    }

    /// Action on characters by precomposition: `γ ↦ γ ∘ T`, i.e. the
    /// transpose matrix acting on the character's coordinates.
    pub fn dual_apply(&self, chi: usize) -> usize {
        self.transpose().apply(chi)
    }

    pub fn transpose(&self) -> Self {
        match &self.repr {
            Repr::Scalar(_) => self.clone(),
            Repr::Matrix(m) => {
                let d = self.group.rank();
                let mut t = vec![0; d * d];
                for i in 0..d {
                    for j in 0..d {
                        t[j * d + i] = m[i * d + j];
                    }
                }
                Self {
                    group: self.group.clone(),
                    repr: Repr::Matrix(t),
                }
            }
        }
    }

    pub fn image(&self, set: &Subset) -> Subset {
        set.map(|x| self.apply(x))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_group(other)?;
        let n = self.modulus() as u128;
        let repr = match (&self.repr, &other.repr) {
            (Repr::Scalar(a), Repr::Scalar(b)) => Repr::Scalar((*a as u128 * *b as u128 % n) as u64),
            (Repr::Matrix(a), Repr::Matrix(b)) => {
                let d = self.group.rank();
                let mut c = vec![0u64; d * d];
                for i in 0..d {
                    for j in 0..d {
                        let s: u128 = (0..d).map(|k| a[i * d + k] as u128 * b[k * d + j] as u128).sum();
                        c[i * d + j] = (s % n) as u64;
                    }
                }
                Repr::Matrix(c)
            }
            _ => unreachable!("representation is determined by the group"),
        };
        Ok(Self {
            group: self.group.clone(),
            repr,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_group(other)?;
        let n = self.modulus();
        let repr = match (&self.repr, &other.repr) {
            (Repr::Scalar(a), Repr::Scalar(b)) => Repr::Scalar((a + b) % n),
            (Repr::Matrix(a), Repr::Matrix(b)) => {
                Repr::Matrix(a.iter().zip(b).map(|(x, y)| (x + y) % n).collect())
            }
            _ => unreachable!("representation is determined by the group"),
        };
        Ok(Self {
            group: self.group.clone(),
            repr,
        })
    }

    pub fn neg(&self) -> Self {
        let n = self.modulus();
        let repr = match &self.repr {
            Repr::Scalar(a) => Repr::Scalar((n - a) % n),
            Repr::Matrix(m) => Repr::Matrix(m.iter().map(|&x| (n - x) % n).collect()),
        };
        Self {
            group: self.group.clone(),
            repr,
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.repr {
            Repr::Scalar(a) => *a == 0,
            Repr::Matrix(m) => m.iter().all(|&x| x == 0),
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(&self.group)
    }

    /// Determinant modulo the matrix modulus; for a scalar on a mixed group,
    /// the scalar itself modulo the exponent.
    pub fn determinant(&self) -> u64 {
        match &self.repr {
            Repr::Scalar(s) => *s,
            Repr::Matrix(m) => det_mod(m, self.group.rank(), self.modulus()),
        }
    }

    /// Modulus the determinant is taken against.
    pub fn determinant_modulus(&self) -> u64 {
        self.modulus()
    }

    pub fn is_automorphism(&self) -> bool {
        gcd(self.determinant(), self.modulus()) == 1
    }

    /// Inverse via the adjugate, `M⁻¹ = det(M)⁻¹ adj(M)`.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.modulus();
        let det_inv = mod_inverse(self.determinant(), n)?;
        let repr = match &self.repr {
            Repr::Scalar(_) => Repr::Scalar(det_inv),
            Repr::Matrix(m) => {
                let d = self.group.rank();
                let adj = adjugate_mod(m, d, n);
                Repr::Matrix(
                    adj.into_iter()
                        .map(|v| (v as u128 * det_inv as u128 % n as u128) as u64)
                        .collect(),
                )
            }
        };
        Some(Self {
            group: self.group.clone(),
            repr,
        })
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        match (self.compose(other), other.compose(self)) {
            (Ok(a), Ok(b)) => a == b,
            _ => false,
        }
    }

    fn check_group(&self, other: &Self) -> Result<()> {
        if self.group != other.group {
            return Err(Error::GroupMismatch);
        }
        Ok(())
    }
}

impl fmt::Debug for Endomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Scalar(s) => write!(f, "x{s} on {}", self.group),
            Repr::Matrix(_) => write!(f, "{:?} on {}", self.matrix_rows().unwrap(), self.group),
        }
    }
}

impl Serialize for Endomorphism {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match &self.repr {
            Repr::Scalar(v) => s.serialize_u64(*v),
            Repr::Matrix(_) => self.matrix_rows().unwrap().serialize(s),
        }
    }
}

/// Determinant of a row-major `d × d` residue matrix modulo `n`, by integer
/// row reduction (Euclid on each column) so that composite `n` is handled.
pub fn det_mod(m: &[u64], d: usize, n: u64) -> u64 {
    if n == 1 {
        return 0;
    }
    let n128 = n as u128;
    let mut a: Vec<Vec<u128>> = m.chunks(d).map(|r| r.iter().map(|&v| v as u128 % n128).collect()).collect();
    let mut negate = false;
    for c in 0..d {
        for r in (c + 1)..d {
            while a[r][c] != 0 {
                let q = a[c][c] / a[r][c];
                if q != 0 {
                    for k in c..d {
                        let sub = q * a[r][k] % n128;
                        a[c][k] = (a[c][k] + n128 - sub) % n128;
                    }
                }
                a.swap(c, r);
                negate = !negate;
            }
        }
        if a[c][c] == 0 {
            return 0;
        }
    }
    let mut det: u128 = 1;
    for (c, row) in a.iter().enumerate() {
        det = det * row[c] % n128;
    }
    if negate && det != 0 {
        det = n128 - det;
    }
    det as u64
}

/// Row-major adjugate modulo `n`.
pub fn adjugate_mod(m: &[u64], d: usize, n: u64) -> Vec<u64> {
    let mut adj = vec![0u64; d * d];
    for i in 0..d {
        for j in 0..d {
            let minor: Vec<u64> = (0..d)
                .filter(|&r| r != i)
                .flat_map(|r| (0..d).filter(move |&c| c != j).map(move |c| m[r * d + c]))
                .collect();
            let cof = if d == 1 { 1 % n } else { det_mod(&minor, d - 1, n) };
            let signed = if (i + j) % 2 == 1 { (n - cof) % n } else { cof };
            adj[j * d + i] = signed;
        }
    }
    adj
}

pub fn mod_inverse(a: u64, n: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128 % n as i128, n as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    (old_r == 1).then(|| old_s.rem_euclid(n as i128) as u64)
}

/// A translation-invariant equation `T1 a1 + T2 a2 + T3 a3 = 0` with
/// automorphism coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EquationSystem {
    #[serde(serialize_with = "ser_group")]
    group: FiniteAbelianGroup,
    coefficients: [Endomorphism; 3],
    determinants: [u64; 3],
    determinant_gcds: [u64; 3],
}

fn ser_group<S: Serializer>(g: &FiniteAbelianGroup, s: S) -> std::result::Result<S::Ok, S::Error> {
    g.factors().serialize(s)
}

impl EquationSystem {
    pub fn new(group: &FiniteAbelianGroup, t: [Endomorphism; 3]) -> Result<Self> {
        if t.iter().any(|ti| ti.group() != group) {
            return Err(Error::GroupMismatch);
        }
        let sum = t[0].add(&t[1])?.add(&t[2])?;
        if !sum.is_zero() {
            return Err(Error::NotTranslationInvariant);
        }
        let mut determinants = [0; 3];
        let mut determinant_gcds = [0; 3];
        for (i, ti) in t.iter().enumerate() {
            let det = ti.determinant();
            let modulus = ti.determinant_modulus();
            let g = gcd(det, modulus);
            if g != 1 {
                return Err(Error::NotAutomorphism {
                    index: i + 1,
                    det,
                    modulus,
                    gcd: g,
                });
            }
            determinants[i] = det;
            determinant_gcds[i] = g;
        }
        Ok(Self {
            group: group.clone(),
            coefficients: t,
            determinants,
            determinant_gcds,
        })
    }

    pub fn from_scalars(group: &FiniteAbelianGroup, s: [i64; 3]) -> Result<Self> {
        Self::new(group, s.map(|v| Endomorphism::scalar(group, v)))
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn coefficients(&self) -> &[Endomorphism; 3] {
        &self.coefficients
    }

    pub fn t(&self, i: usize) -> &Endomorphism {
        &self.coefficients[i - 1]
    }

    pub fn determinants(&self) -> [u64; 3] {
        self.determinants
    }

    pub fn determinant_gcds(&self) -> [u64; 3] {
        self.determinant_gcds
    }

    pub fn is_canonical(&self) -> bool {
        self.coefficients[0].is_identity()
    }

    /// Rewrite as `(Id, T2 T1⁻¹, T3 T1⁻¹)`. A triple `(a1, a2, a3)` solves the
    /// original equation iff `(T1 a1, T1 a2, T1 a3)` solves the canonical one,
    /// so sets transform by `A ↦ T1 A`.
    pub fn canonicalize(&self) -> Canonical {
        let t1 = &self.coefficients[0];
        let t1_inv = t1.inverse().expect("validated automorphism");
        let t2 = self.coefficients[1].compose(&t1_inv).expect("same group");
        let t3 = self.coefficients[2].compose(&t1_inv).expect("same group");
        let system = EquationSystem::new(&self.group, [Endomorphism::identity(&self.group), t2, t3])
            .expect("canonical form of a valid system is valid");
        Canonical {
            system,
            set_map: t1.clone(),
        }
    }

    /// `{Id, T2, T3, T2⁻¹, T3⁻¹}`.
    pub fn word_generators(&self) -> Vec<Endomorphism> {
        let t2 = self.coefficients[1].clone();
        let t3 = self.coefficients[2].clone();
        let t2i = t2.inverse().expect("validated automorphism");
        let t3i = t3.inverse().expect("validated automorphism");
        vec![Endomorphism::identity(&self.group), t2, t3, t2i, t3i]
    }

    /// `W_i`: all compositions of exactly `i` elements of
    /// `{Id, T2, T3, T2⁻¹, T3⁻¹}`.
    pub fn word_set(&self, i: usize) -> Result<WordSet> {
        if !self.is_canonical() {
            return Err(Error::NotCanonical);
        }
        Ok(WordSet::generate(&self.group, &self.word_generators(), i))
    }
}

#[derive(Clone, Debug)]
pub struct Canonical {
    pub system: EquationSystem,
    /// `T1`; a set `A` for the original system corresponds to `T1 A`.
    pub set_map: Endomorphism,
}

impl Canonical {
    pub fn map_set(&self, set: &Subset) -> Subset {
        self.set_map.image(set)
    }
}

#[derive(Clone, Debug)]
pub struct WordSet {
    pub index: usize,
    pub elements: Vec<Endomorphism>,
}

impl WordSet {
    /// Exact-length words over `generators`, deduplicated by matrix.
    pub fn generate(group: &FiniteAbelianGroup, generators: &[Endomorphism], len: usize) -> Self {
        let mut layer = vec![Endomorphism::identity(group)];
        for _ in 0..len {
            let mut seen = HashSet::new();
            let mut next = Vec::new();
            for w in &layer {
                for g in generators {
                    let c = g.compose(w).expect("same group");
                    if seen.insert(c.clone()) {
                        next.push(c);
                    }
                }
            }
            layer = next;
        }
        Self {
            index: len,
            elements: layer,
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, t: &Endomorphism) -> bool {
        self.elements.contains(t)
    }

    /// `(2i + 1)²`.
    pub fn commuting_bound(&self) -> usize {
        (2 * self.index + 1).pow(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(n: u64) -> FiniteAbelianGroup {
        FiniteAbelianGroup::cyclic(n).unwrap()
    }

    #[test]
    fn scalar_systems_validate() {
        let sys = EquationSystem::from_scalars(&z(7), [1, 2, 4]).unwrap();
        assert_eq!(sys.determinants(), [1, 2, 4]);
        assert_eq!(sys.determinant_gcds(), [1, 1, 1]);

        assert_eq!(
            EquationSystem::from_scalars(&z(6), [1, 2, 3]),
            Err(Error::NotAutomorphism {
                index: 2,
                det: 2,
                modulus: 6,
                gcd: 2
            })
        );
        assert_eq!(
            EquationSystem::from_scalars(&z(7), [1, 1, 1]),
            Err(Error::NotTranslationInvariant)
        );
    }

    #[test]
    fn all_ones_over_f2_power_is_not_translation_invariant() {
        // 1 + 1 + 1 = 1 in F_2, so x + y + z = 0 is rejected; the set of
        // vectors with first coordinate 1 has density 1/2 and no solutions.
        let g = FiniteAbelianGroup::power(2, 4).unwrap();
        assert_eq!(
            EquationSystem::from_scalars(&g, [1, 1, 1]),
            Err(Error::NotTranslationInvariant)
        );
        let a: Vec<usize> = g.elements().filter(|&x| g.coords(x)[0] == 1).collect();
        assert_eq!(a.len(), g.order() / 2);
        for &x in &a {
            for &y in &a {
                for &w in &a {
                    assert_ne!(g.add(g.add(x, y), w), 0);
                }
            }
        }
    }

    #[test]
    fn canonical_form_of_scalars_mod_7() {
        let sys = EquationSystem::from_scalars(&z(7), [2, 1, 4]).unwrap();
        let c = sys.canonicalize();
        let want = EquationSystem::from_scalars(&z(7), [1, 4, 2]).unwrap();
        assert_eq!(c.system, want);
        assert_eq!(c.set_map, Endomorphism::scalar(&z(7), 2));

        let already = EquationSystem::from_scalars(&z(7), [1, 2, 4]).unwrap();
        assert_eq!(already.canonicalize().system, already);
    }

    #[test]
    fn det_and_inverse_on_matrices() {
        let g = FiniteAbelianGroup::power(12, 3).unwrap();
        let m = Endomorphism::matrix(&g, &[vec![2, 3, 1], vec![1, 1, 0], vec![5, 0, 7]]).unwrap();
        // det over Z: 2(7) - 3(7) + 1(-5) = -12 ≡ 0 mod 12
        assert_eq!(m.determinant(), 0);
        assert!(m.inverse().is_none());

        let m = Endomorphism::matrix(&g, &[vec![1, 3, 1], vec![1, 2, 0], vec![5, 0, 7]]).unwrap();
        // det over Z: 1(14) - 3(7) + 1(-10) = -17 ≡ 7 mod 12
        assert_eq!(m.determinant(), 7);
        let inv = m.inverse().unwrap();
        assert!(m.compose(&inv).unwrap().is_identity());
        assert!(inv.compose(&m).unwrap().is_identity());
    }

    #[test]
    fn det_mod_matches_integer_determinant_on_small_cases() {
        let cases: [(&[i64], usize); 4] = [
            (&[4], 1),
            (&[0, 1, -1, 0], 2),
            (&[3, 5, 2, 7], 2),
            (&[6, 1, 1, 4, -2, 5, 2, 8, 7], 3),
        ];
        let ints = [4i64, 1, 11, -306];
        for ((m, d), want) in cases.iter().zip(ints) {
            for n in [2u64, 9, 10, 97, 360] {
                let res: Vec<u64> = m.iter().map(|v| v.rem_euclid(n as i64) as u64).collect();
                assert_eq!(det_mod(&res, *d, n), want.rem_euclid(n as i64) as u64, "n={n}");
            }
        }
    }

    #[test]
    fn mixed_factor_groups_only_take_scalars() {
        let g = FiniteAbelianGroup::new(vec![3, 5]).unwrap();
        assert!(Endomorphism::matrix(&g, &[vec![1, 0], vec![0, 1]]).is_err());
        let t = Endomorphism::scalar(&g, 7);
        assert!(t.is_automorphism());
        let x = g.index_of(&[1, 2]).unwrap();
        assert_eq!(g.coords(t.apply(x)), vec![1, 4]);
        assert!(t.compose(&t.inverse().unwrap()).unwrap().is_identity());
        assert!(!Endomorphism::scalar(&g, 3).is_automorphism());
    }

    #[test]
    fn dual_action_is_precomposition() {
        let g = FiniteAbelianGroup::power(5, 2).unwrap();
        let t = Endomorphism::matrix(&g, &[vec![1, 2], vec![3, 1]]).unwrap();
        for chi in g.elements() {
            let moved = t.dual_apply(chi);
            for x in g.elements() {
                assert_eq!(g.pairing_phase(moved, x), g.pairing_phase(chi, t.apply(x)));
            }
        }
    }

    #[test]
    fn small_word_sets() {
        let sys = EquationSystem::from_scalars(&z(101), [1, 2, 98]).unwrap();
        let w0 = sys.word_set(0).unwrap();
        assert_eq!(w0.len(), 1);
        assert!(w0.elements[0].is_identity());
        let w1 = sys.word_set(1).unwrap();
        assert!(w1.len() <= 5);
        let w3 = sys.word_set(3).unwrap();
        assert!(w3.len() <= 49);

        let non_canonical = EquationSystem::from_scalars(&z(7), [2, 1, 4]).unwrap();
        assert!(matches!(non_canonical.word_set(1), Err(Error::NotCanonical)));
    }

    #[test]
    fn word_set_of_z101_matches_exhaustive_enumeration() {
        let g = z(101);
        let sys = EquationSystem::from_scalars(&g, [1, 2, 98]).unwrap();
        let gens = [1i64, 2, 98, mod_inverse(2, 101).unwrap() as i64, mod_inverse(98, 101).unwrap() as i64];
        let mut words = HashSet::new();
        for a in gens {
            for b in gens {
                for c in gens {
                    words.insert((a * b % 101 * c).rem_euclid(101));
                }
            }
        }
        let w3 = sys.word_set(3).unwrap();
        let got: HashSet<i64> = w3
            .elements
            .iter()
            .map(|t| t.matrix_rows().unwrap()[0][0] as i64)
            .collect();
        assert_eq!(got, words);
        assert!(got.len() <= 49);
    }

    #[test]
    fn mod_inverse_basics() {
        assert_eq!(mod_inverse(2, 7), Some(4));
        assert_eq!(mod_inverse(3, 9), None);
        assert_eq!(mod_inverse(1, 2), Some(1));
    }
}
