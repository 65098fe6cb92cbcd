//! Integer matrix equations on `Z^d`, their embedding into `(Z/p)^d`, and
//! similar triangles in lattices with complex multiplication.
//!
//! Everything here is exact: entries are `i64`, determinants and norms are
//! accumulated in `i128` with overflow checks.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::endo::{Endomorphism, EquationSystem};
use crate::error::{Error, Result};
use crate::group::{FiniteAbelianGroup, Subset};

pub type IntMatrix = Vec<Vec<i64>>;

fn checked(v: Option<i128>, what: &'static str) -> Result<i128> {
    v.ok_or(Error::Overflow(what))
}

/// Determinant by fraction-free (Bareiss) elimination.
pub fn determinant(m: &IntMatrix) -> Result<i128> {
    let n = m.len();
    if m.iter().any(|r| r.len() != n) {
        return Err(Error::Shape("matrix is not square".into()));
    }
    if n == 0 {
        return Ok(1);
    }
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let x = checked(a[i][j].checked_mul(a[k][k]), "determinant")?;
                let y = checked(a[i][k].checked_mul(a[k][j]), "determinant")?;
                a[i][j] = checked(x.checked_sub(y), "determinant")? / prev;
            }
        }
        prev = a[k][k];
    }
    Ok(sign * a[n - 1][n - 1])
}

fn mat_vec(m: &IntMatrix, v: &[i64]) -> Result<Vec<i128>> {
    m.iter()
        .map(|row| {
            row.iter().zip(v).try_fold(0i128, |acc, (&a, &b)| {
                checked(acc.checked_add(a as i128 * b as i128), "matrix product")
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntegerMatrixTriple {
    pub d: usize,
    pub matrices: [IntMatrix; 3],
    pub determinants: [i128; 3],
}

impl IntegerMatrixTriple {
    pub fn new(matrices: [IntMatrix; 3]) -> Result<Self> {
        let d = matrices[0].len();
        if d == 0 {
            return Err(Error::Shape("dimension must be positive".into()));
        }
        for m in &matrices {
            if m.len() != d || m.iter().any(|r| r.len() != d) {
                return Err(Error::Shape(format!("expected {d}x{d} matrices")));
            }
        }
        for i in 0..d {
            for j in 0..d {
                let s = matrices.iter().map(|m| m[i][j] as i128).sum::<i128>();
                if s != 0 {
                    return Err(Error::NotTranslationInvariant);
                }
            }
        }
        let mut determinants = [0i128; 3];
        for (k, m) in matrices.iter().enumerate() {
            determinants[k] = determinant(m)?;
            if determinants[k] == 0 {
                return Err(Error::Degenerate(format!("M{} is singular", k + 1)));
            }
        }
        Ok(Self {
            d,
            matrices,
            determinants,
        })
    }

    /// `(aI, bI, cI)`.
    pub fn scalars(d: usize, s: [i64; 3]) -> Result<Self> {
        Self::new(s.map(|v| {
            (0..d)
                .map(|i| (0..d).map(|j| if i == j { v } else { 0 }).collect())
                .collect()
        }))
    }

    /// `M₁a₁ + M₂a₂ + M₃a₃`.
    pub fn evaluate(&self, a: [&[i64]; 3]) -> Result<Vec<i128>> {
        let mut out = vec![0i128; self.d];
        for (m, v) in self.matrices.iter().zip(a) {
            for (o, x) in out.iter_mut().zip(mat_vec(m, v)?) {
                *o = checked(o.checked_add(x), "matrix product")?;
            }
        }
        Ok(out)
    }
}

/// `C = max_i max(‖M_i‖_{∞→∞}, |det M_i|)`.
pub fn embedding_constant(triple: &IntegerMatrixTriple) -> i128 {
    let mut c = 0i128;
    for (m, det) in triple.matrices.iter().zip(&triple.determinants) {
        for row in m {
            c = c.max(row.iter().map(|&v| (v as i128).abs()).sum());
        }
        c = c.max(det.abs());
    }
    c
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller–Rabin, exact for all `u64`.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for p in BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime `p` with `4CT < p ≤ 8CT`.
pub fn find_prime(c: u64, t: u64) -> Result<u64> {
    if c == 0 || t == 0 {
        return Err(Error::InvalidParameter("C and T must be at least 1".into()));
    }
    let lo = c
        .checked_mul(t)
        .and_then(|v| v.checked_mul(4))
        .ok_or(Error::Overflow("4CT"))?;
    let hi = lo.checked_mul(2).ok_or(Error::Overflow("8CT"))?;
    (lo + 1..=hi)
        .find(|&p| is_prime(p))
        .ok_or_else(|| Error::Degenerate("no prime in (4CT, 8CT]".into()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LatticePointSet {
    pub d: usize,
    pub points: Vec<Vec<i64>>,
}

impl LatticePointSet {
    pub fn new(d: usize, points: Vec<Vec<i64>>) -> Result<Self> {
        let mut seen = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(Error::Arity {
                    expected: d,
                    got: p.len(),
                });
            }
            if let Some(j) = seen.insert(p.clone(), i) {
                return Err(Error::Degenerate(format!(
                    "point {p:?} repeated at positions {j} and {i}"
                )));
            }
        }
        Ok(Self { d, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `A_T = A ∩ [-T, T]^d`, with the number of dropped points.
    pub fn truncate(&self, t: i64) -> (Self, usize) {
        let kept: Vec<Vec<i64>> = self
            .points
            .iter()
            .filter(|p| p.iter().all(|&v| v.abs() <= t))
            .cloned()
            .collect();
        let dropped = self.points.len() - kept.len();
        (Self { d: self.d, points: kept }, dropped)
    }
}

fn triples_of_solutions(
    points: &[Vec<i64>],
    triple: &IntegerMatrixTriple,
) -> Result<HashSet<[usize; 3]>> {
    let m3_index: HashMap<Vec<i128>, usize> = points
        .iter()
        .enumerate()
        .map(|(k, p)| Ok((mat_vec(&triple.matrices[2], p)?, k)))
        .collect::<Result<_>>()?;
    let mut out = HashSet::new();
    for (i, p) in points.iter().enumerate() {
        let v1 = mat_vec(&triple.matrices[0], p)?;
        for (j, q) in points.iter().enumerate() {
            let v2 = mat_vec(&triple.matrices[1], q)?;
            let target: Vec<i128> = v1.iter().zip(&v2).map(|(a, b)| -(a + b)).collect();
            if let Some(&k) = m3_index.get(&target) {
                out.insert([i, j, k]);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct LiftReport {
    pub t: i64,
    pub constant: i128,
    pub prime: u64,
    pub dropped: usize,
    pub points: usize,
    pub reduced_determinants: [u64; 3],
    /// `3CT < p`.
    pub box_bound_ok: bool,
    pub integer_solutions: usize,
    pub integer_trivial: usize,
    pub modular_solutions: usize,
    pub solution_sets_equal: bool,
}

/// Truncates to `[-T, T]^d`, reduces modulo the prime from [`find_prime`]
/// and compares the integer and modular solution sets triple by triple.
pub fn embed_and_lift_check(
    a: &LatticePointSet,
    t: i64,
    triple: &IntegerMatrixTriple,
) -> Result<(Subset, EquationSystem, LiftReport)> {
    if a.d != triple.d {
        return Err(Error::Arity {
            expected: triple.d,
            got: a.d,
        });
    }
    if t < 1 {
        return Err(Error::InvalidParameter("T must be at least 1".into()));
    }
    let (at, dropped) = a.truncate(t);
    let c = embedding_constant(triple);
    let p = find_prime(u64::try_from(c).map_err(|_| Error::Overflow("C"))?, t as u64)?;
    let group = FiniteAbelianGroup::power(p, triple.d)?;
    let endos = triple
        .matrices
        .iter()
        .map(|m| Endomorphism::matrix(&group, m))
        .collect::<Result<Vec<_>>>()?;
    let reduced_determinants = [endos[0].determinant(), endos[1].determinant(), endos[2].determinant()];
    if reduced_determinants.contains(&0) {
        return Err(Error::Degenerate("a reduced matrix is singular mod p".into()));
    }
    let sys = EquationSystem::new(&group, [endos[0].clone(), endos[1].clone(), endos[2].clone()])?;

    let residues: Vec<usize> = at
        .points
        .iter()
        .map(|pt| group.index_of(pt))
        .collect::<Result<_>>()?;
    let embedded = Subset::from_indices(&group, residues.iter().copied());
    if embedded.len() != at.len() {
        return Err(Error::Degenerate("reduction mod p is not injective on A_T".into()));
    }
    let back: HashMap<usize, usize> = residues.iter().enumerate().map(|(k, &r)| (r, k)).collect();

    let integer = triples_of_solutions(&at.points, triple)?;
    let t3_inv = sys.t(3).inverse().expect("determinants are units mod p");
    let mut modular = HashSet::new();
    for &x in embedded.members() {
        let t1x = sys.t(1).apply(x);
        for &y in embedded.members() {
            let z = t3_inv.apply(group.neg(group.add(t1x, sys.t(2).apply(y))));
            if let Some(&k) = back.get(&z) {
                modular.insert([back[&x], back[&y], k]);
            }
        }
    }
    let report = LiftReport {
        t,
        constant: c,
        prime: p,
        dropped,
        points: at.len(),
        reduced_determinants,
        box_bound_ok: 3 * c * (t as i128) < p as i128,
        integer_solutions: integer.len(),
        integer_trivial: integer.iter().filter(|s| s[0] == s[1] && s[1] == s[2]).count(),
        modular_solutions: modular.len(),
        solution_sets_equal: integer == modular,
    };
    Ok((embedded, sys, report))
}

/// An element `a + bτ` of `Z[τ]`.
pub type RingElement = (i64, i64);

/// The lattice `Z ⊕ τZ` with `τ² = u + vτ` and `v² + 4u < 0`, which makes
/// `τ` non-real and `Z[τ]` a lattice in the plane closed under
/// multiplication by its basis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComplexLattice {
    pub name: String,
    pub u: i64,
    pub v: i64,
}

impl ComplexLattice {
    pub fn new(name: &str, u: i64, v: i64) -> Result<Self> {
        if v as i128 * v as i128 + 4 * u as i128 >= 0 {
            return Err(Error::InvalidParameter(format!(
                "tau^2 = {u} + {v} tau has a real root"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            u,
            v,
        })
    }

    /// `Z[i]`.
    pub fn gaussian() -> Self {
        Self::new("gaussian", -1, 0).expect("valid preset")
    }

    /// `Z[ω]`, `ω² = -1 - ω`.
    pub fn eisenstein() -> Self {
        Self::new("eisenstein", -1, -1).expect("valid preset")
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "gaussian" => Ok(Self::gaussian()),
            "eisenstein" => Ok(Self::eisenstein()),
            other => Err(Error::InvalidParameter(format!("unknown lattice preset '{other}'"))),
        }
    }

    /// `ω_i ω_j` in the basis `(1, τ)`.
    pub fn multiplication_table(&self) -> [[RingElement; 2]; 2] {
        [[(1, 0), (0, 1)], [(0, 1), (self.u, self.v)]]
    }

    pub fn mul(&self, x: RingElement, y: RingElement) -> Result<RingElement> {
        let (a, b) = (x.0 as i128, x.1 as i128);
        let (c, d) = (y.0 as i128, y.1 as i128);
        let re = a * c + b * d * self.u as i128;
        let im = a * d + b * c + b * d * self.v as i128;
        Ok((
            i64::try_from(re).map_err(|_| Error::Overflow("ring product"))?,
            i64::try_from(im).map_err(|_| Error::Overflow("ring product"))?,
        ))
    }

    pub fn sub(x: RingElement, y: RingElement) -> RingElement {
        (x.0 - y.0, x.1 - y.1)
    }

    /// Matrix of `w ↦ zw` in the basis `(1, τ)`: its columns are `z·1` and `z·τ`.
    pub fn multiplication_matrix(&self, z: RingElement) -> Result<IntMatrix> {
        let c0 = self.mul(z, (1, 0))?;
        let c1 = self.mul(z, (0, 1))?;
        Ok(vec![vec![c0.0, c1.0], vec![c0.1, c1.1]])
    }

    /// `ω_i Λ ⊆ Λ`: every product in the table has integer coordinates,
    /// which holds by construction; kept as an explicit check.
    pub fn is_closed(&self) -> bool {
        self.multiplication_table()
            .iter()
            .flatten()
            .all(|&(a, b)| a.checked_add(b).is_some())
    }
}

/// Matrices of multiplication by `p₃ - p₂`, `p₁ - p₃`, `p₂ - p₁`.
pub fn triangle_to_matrices(
    lattice: &ComplexLattice,
    spec: [RingElement; 3],
) -> Result<IntegerMatrixTriple> {
    let [p1, p2, p3] = spec;
    if p1 == p2 || p2 == p3 || p1 == p3 {
        return Err(Error::Degenerate("triangle vertices must be distinct".into()));
    }
    IntegerMatrixTriple::new([
        lattice.multiplication_matrix(ComplexLattice::sub(p3, p2))?,
        lattice.multiplication_matrix(ComplexLattice::sub(p1, p3))?,
        lattice.multiplication_matrix(ComplexLattice::sub(p2, p1))?,
    ])
}

/// `(a₃ - a₁)(p₂ - p₁) = (p₃ - p₁)(a₂ - a₁)`: the triangle `a` is directly
/// similar to `p` (as ordered triples).
pub fn directly_similar(
    lattice: &ComplexLattice,
    a: [RingElement; 3],
    p: [RingElement; 3],
) -> Result<bool> {
    let lhs = lattice.mul(ComplexLattice::sub(a[2], a[0]), ComplexLattice::sub(p[1], p[0]))?;
    let rhs = lattice.mul(ComplexLattice::sub(p[2], p[0]), ComplexLattice::sub(a[1], a[0]))?;
    Ok(lhs == rhs)
}

/// All ordered triples of distinct points solving `M₁a₁ + M₂a₂ + M₃a₃ = 0`
/// for the matrices of `spec`; each is re-checked against
/// [`directly_similar`]. With `unordered`, triples with the same point set
/// are reported once.
pub fn find_similar_triangles(
    points: &LatticePointSet,
    lattice: &ComplexLattice,
    spec: [RingElement; 3],
    unordered: bool,
) -> Result<Vec<[usize; 3]>> {
    if points.d != 2 {
        return Err(Error::Arity {
            expected: 2,
            got: points.d,
        });
    }
    let triple = triangle_to_matrices(lattice, spec)?;
    let mut found: Vec<[usize; 3]> = triples_of_solutions(&points.points, &triple)?
        .into_iter()
        .filter(|s| s[0] != s[1] && s[1] != s[2] && s[0] != s[2])
        .collect();
    found.sort_unstable();
    let elem = |k: usize| (points.points[k][0], points.points[k][1]);
    for s in &found {
        if !directly_similar(lattice, [elem(s[0]), elem(s[1]), elem(s[2])], spec)? {
            return Err(Error::Degenerate(format!("triple {s:?} fails the similarity check")));
        }
    }
    if unordered {
        let mut seen = HashSet::new();
        found.retain(|s| {
            let mut k = *s;
            k.sort_unstable();
            seen.insert(k)
        });
    }
    Ok(found)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    Max,
    Euclidean,
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceRow {
    /// Truncation level `N` (an `∞`-norm value present in the set).
    pub level: i64,
    /// `#{a : ‖a‖_∞ = N}`.
    pub shell: usize,
    /// `Σ_{a ∈ A_N \ {0}} ‖a‖^{-d}`.
    pub partial_sum: f64,
    /// `Σ_{M ≤ N} M^{-d} #{a : ‖a‖_∞ = M}`.
    pub shell_sum: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceReport {
    pub d: usize,
    pub norm: Norm,
    pub rows: Vec<DivergenceRow>,
    pub total: f64,
}

/// Partial sums of `Σ ‖a‖^{-d}` over the nested truncations of `A`.
pub fn divergence_diagnostic(points: &LatticePointSet, norm: Norm) -> DivergenceReport {
    let d = points.d as i32;
    let mut by_level: Vec<(i64, f64)> = points
        .points
        .iter()
        .filter(|p| p.iter().any(|&v| v != 0))
        .map(|p| {
            let level = p.iter().map(|v| v.abs()).max().unwrap_or(0);
            let n = match norm {
                Norm::Max => level as f64,
                Norm::Euclidean => p.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt(),
            };
            (level, n.powi(d).recip())
        })
        .collect();
    by_level.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.partial_cmp(&a.1).unwrap()));
    let mut rows: Vec<DivergenceRow> = Vec::new();
    let (mut partial, mut shell_sum) = (0.0, 0.0);
    let mut i = 0;
    while i < by_level.len() {
        let level = by_level[i].0;
        let mut count = 0;
        while i < by_level.len() && by_level[i].0 == level {
            partial += by_level[i].1;
            count += 1;
            i += 1;
        }
        shell_sum += count as f64 * (level as f64).powi(d).recip();
        rows.push(DivergenceRow {
            level,
            shell: count,
            partial_sum: partial,
            shell_sum,
        });
    }
    DivergenceReport {
        d: points.d,
        norm,
        rows,
        total: partial,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_prime(n: u64) -> bool {
        n >= 2 && (2..).take_while(|k| k * k <= n).all(|k| n % k != 0)
    }

    #[test]
    fn constants() {
        let t = IntegerMatrixTriple::scalars(2, [1, 1, -2]).unwrap();
        assert_eq!(embedding_constant(&t), 4);
        let t = IntegerMatrixTriple::scalars(1, [1, 1, -2]).unwrap();
        assert_eq!(embedding_constant(&t), 2);
        let g = triangle_to_matrices(&ComplexLattice::gaussian(), [(0, 0), (1, 0), (0, 1)]).unwrap();
        assert_eq!(embedding_constant(&g), 2);
    }

    #[test]
    fn primes() {
        assert_eq!(find_prime(4, 3).unwrap(), 53);
        assert_eq!(find_prime(1, 1).unwrap(), 5);
        assert_eq!(find_prime(2, 10).unwrap(), 83);
        for n in 0..5000 {
            assert_eq!(is_prime(n), naive_prime(n), "{n}");
        }
        assert!(is_prime(18446744073709551557));
        assert!(!is_prime(3215031751));
        assert!(find_prime(u64::MAX / 2, 3).is_err());
        assert!(find_prime(0, 3).is_err());
    }

    #[test]
    fn determinants() {
        assert_eq!(determinant(&vec![vec![2, 1], vec![1, 1]]).unwrap(), 1);
        assert_eq!(
            determinant(&vec![vec![0, 2, 1], vec![3, 1, 4], vec![1, 5, 9]]).unwrap(),
            -32
        );
        assert_eq!(determinant(&vec![vec![1, 2], vec![2, 4]]).unwrap(), 0);
    }

    #[test]
    fn gaussian_triangle() {
        let t = triangle_to_matrices(&ComplexLattice::gaussian(), [(0, 0), (1, 0), (0, 1)]).unwrap();
        assert_eq!(t.matrices[0], vec![vec![-1, -1], vec![1, -1]]);
        assert_eq!(t.matrices[1], vec![vec![0, 1], vec![-1, 0]]);
        assert_eq!(t.matrices[2], vec![vec![1, 0], vec![0, 1]]);
        assert_eq!(t.determinants, [2, 1, 1]);
    }

    #[test]
    fn eisenstein_triangle() {
        let l = ComplexLattice::eisenstein();
        let t = triangle_to_matrices(&l, [(0, 0), (1, 0), (0, -1)]).unwrap();
        // multipliers ω², ω, 1
        assert_eq!(t.matrices[0], l.multiplication_matrix((-1, -1)).unwrap());
        assert_eq!(t.matrices[1], l.multiplication_matrix((0, 1)).unwrap());
        assert_eq!(t.matrices[2], l.multiplication_matrix((1, 0)).unwrap());
        let pts = LatticePointSet::new(2, vec![vec![0, 0], vec![1, 0], vec![0, -1]]).unwrap();
        let found = find_similar_triangles(&pts, &l, [(0, 0), (1, 0), (0, -1)], false).unwrap();
        assert!(found.contains(&[0, 1, 2]));
        assert_eq!(found.len(), 3);
    }

    #[test]
    fn degenerate_triangles() {
        let l = ComplexLattice::gaussian();
        assert!(triangle_to_matrices(&l, [(1, 1), (1, 1), (0, 0)]).is_err());
        assert!(ComplexLattice::new("real", 2, 0).is_err());
    }

    #[test]
    fn unit_right_triangle() {
        let l = ComplexLattice::gaussian();
        let pts = LatticePointSet::new(2, vec![vec![0, 0], vec![1, 0], vec![0, 1]]).unwrap();
        let spec = [(0, 0), (1, 0), (0, 1)];
        let found = find_similar_triangles(&pts, &l, spec, false).unwrap();
        let mut oracle = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    if i == j || j == k || i == k {
                        continue;
                    }
                    let e = |m: usize| (pts.points[m][0], pts.points[m][1]);
                    if directly_similar(&l, [e(i), e(j), e(k)], spec).unwrap() {
                        oracle.push([i, j, k]);
                    }
                }
            }
        }
        assert_eq!(found, oracle);
        assert_eq!(found, vec![[0, 1, 2]]);
        let few = LatticePointSet::new(2, vec![vec![0, 0], vec![1, 0]]).unwrap();
        assert!(find_similar_triangles(&few, &l, spec, false).unwrap().is_empty());
    }

    #[test]
    fn lift_on_small_sets() {
        let t = IntegerMatrixTriple::scalars(2, [1, 1, -2]).unwrap();
        let zero = LatticePointSet::new(2, vec![vec![0, 0]]).unwrap();
        let (_, _, r) = embed_and_lift_check(&zero, 1, &t).unwrap();
        assert_eq!((r.integer_solutions, r.modular_solutions), (1, 1));
        assert!(r.solution_sets_equal && r.box_bound_ok);

        // no three-term progressions among these points
        let pts = LatticePointSet::new(2, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1], vec![12, 0]]).unwrap();
        let (_, _, r) = embed_and_lift_check(&pts, 3, &t).unwrap();
        assert_eq!(r.dropped, 1);
        assert_eq!(r.integer_solutions, r.integer_trivial);
        assert_eq!(r.modular_solutions, r.integer_trivial);
        assert!(r.solution_sets_equal);
    }

    #[test]
    fn divergence_sums() {
        let zero = LatticePointSet::new(2, vec![vec![0, 0]]).unwrap();
        assert_eq!(divergence_diagnostic(&zero, Norm::Max).total, 0.0);
        let pts: Vec<Vec<i64>> = (1..=20).map(|k| vec![1i64 << k, 0]).collect();
        let r = divergence_diagnostic(&LatticePointSet::new(2, pts).unwrap(), Norm::Max);
        assert_eq!(r.rows.len(), 20);
        assert!(r.total < 1.0 / 3.0);
        let expect: f64 = (1..=20).map(|k| 4f64.powi(-k)).sum();
        assert!((r.total - expect).abs() < 1e-15);
        let mut grid = Vec::new();
        for x in -10..=10i64 {
            for y in -10..=10i64 {
                grid.push(vec![x, y]);
            }
        }
        let r = divergence_diagnostic(&LatticePointSet::new(2, grid).unwrap(), Norm::Max);
        assert_eq!(r.rows.iter().map(|row| row.shell).sum::<usize>(), 440);
        assert!((r.total - r.rows.last().unwrap().shell_sum).abs() < 1e-12);
    }
}
