//! Counting solutions of `T₁a₁ + T₂a₂ + T₃a₃ = 0`, balanced functions, large
//! spectra and the explicit-constant dichotomy between many solutions and
//! large spectral mass.

use num_complex::Complex64;
use serde::Serialize;

use crate::bohr::BohrSet;
use crate::endo::EquationSystem;
use crate::error::{Error, Result};
use crate::fourier::{
    convolve, fourier_transform, inner_product, normalized_indicator, DensityFunction, Side,
};
use crate::group::{FiniteAbelianGroup, Subset};

/// Absolute slack when testing `|μ̂_X(γ)| ≥ η`.
pub const SPECTRUM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolutionCount {
    pub total: u64,
    pub trivial: u64,
    pub nontrivial: u64,
    /// `total / |G|²`.
    pub t_value: f64,
}

fn check_sets(sys: &EquationSystem, sets: [&Subset; 3]) -> Result<()> {
    if sets.iter().any(|s| s.group() != sys.group()) {
        return Err(Error::GroupMismatch);
    }
    Ok(())
}

/// Calls `f(a₁, a₂, a₃)` for every solution with `aᵢ ∈ Aᵢ`.
fn for_each_solution<F: FnMut(usize, usize, usize)>(
    a1: &Subset,
    a2: &Subset,
    a3: &Subset,
    sys: &EquationSystem,
    mut f: F,
) {
    let g = sys.group();
    let t3_inv = sys
        .t(3)
        .inverse()
        .expect("coefficients of a valid system are automorphisms");
    let t2a2: Vec<(usize, usize)> = a2.members().iter().map(|&y| (y, sys.t(2).apply(y))).collect();
    for &x in a1.members() {
        let t1x = sys.t(1).apply(x);
        for &(y, t2y) in &t2a2 {
            let z = t3_inv.apply(g.neg(g.add(t1x, t2y)));
            if a3.contains(z) {
                f(x, y, z);
            }
        }
    }
}

/// Exact count over `A₁ × A₂`, solving for `a₃ = -T₃⁻¹(T₁a₁ + T₂a₂)`.
pub fn enumerate_solutions(
    a1: &Subset,
    a2: &Subset,
    a3: &Subset,
    sys: &EquationSystem,
) -> Result<SolutionCount> {
    check_sets(sys, [a1, a2, a3])?;
    let (mut total, mut trivial) = (0u64, 0u64);
    for_each_solution(a1, a2, a3, sys, |x, y, z| {
        total += 1;
        if x == y && y == z {
            trivial += 1;
        }
    });
    let n = sys.group().order() as f64;
    Ok(SolutionCount {
        total,
        trivial,
        nontrivial: total - trivial,
        t_value: total as f64 / (n * n),
    })
}

/// Up to `limit` nontrivial solutions, in lexicographic order of `(a₁, a₂)`.
pub fn nontrivial_solutions(
    a1: &Subset,
    a2: &Subset,
    a3: &Subset,
    sys: &EquationSystem,
    limit: usize,
) -> Result<Vec<[usize; 3]>> {
    check_sets(sys, [a1, a2, a3])?;
    let mut out = Vec::new();
    for_each_solution(a1, a2, a3, sys, |x, y, z| {
        if out.len() < limit && !(x == y && y == z) {
            out.push([x, y, z]);
        }
    });
    Ok(out)
}

/// Whether `(a₁, a₂, a₃)` solves the equation.
pub fn is_solution(sys: &EquationSystem, a: [usize; 3]) -> bool {
    let g = sys.group();
    let s = g.add(g.add(sys.t(1).apply(a[0]), sys.t(2).apply(a[1])), sys.t(3).apply(a[2]));
    s == g.zero()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Fourier,
}

/// `T(A₁,A₂,A₃) = ⟨1_{T₁A₁} ∗ 1_{T₂A₂}, 1_{-T₃A₃}⟩`.
pub fn t_functional(
    a1: &Subset,
    a2: &Subset,
    a3: &Subset,
    sys: &EquationSystem,
    method: Method,
) -> Result<f64> {
    check_sets(sys, [a1, a2, a3])?;
    let f1 = DensityFunction::indicator(&sys.t(1).image(a1));
    let f2 = DensityFunction::indicator(&sys.t(2).image(a2));
    let f3 = DensityFunction::indicator(&sys.t(3).image(a3).negate());
    let value = match method {
        Method::Direct => {
            let conv = crate::fourier::convolve_direct(&f1, &f2)?;
            inner_product(&conv, &f3, Side::Group)?
        }
        Method::Fourier => {
            let (h1, h2, h3) = (
                fourier_transform(&f1)?,
                fourier_transform(&f2)?,
                fourier_transform(&f3)?,
            );
            h1.values()
                .iter()
                .zip(h2.values())
                .zip(h3.values())
                .map(|((a, b), c)| a * b * c.conj())
                .sum::<Complex64>()
        }
    };
    Ok(value.re)
}

/// `|A ∩ (x + B)|` for every `x`.
pub fn translate_counts(a: &Subset, b: &Subset) -> Result<Vec<usize>> {
    if a.group() != b.group() {
        return Err(Error::GroupMismatch);
    }
    let g = a.group();
    let work = a.len().saturating_mul(b.len());
    if work <= 1 << 24 {
        let mut out = vec![0usize; g.order()];
        for &x in a.members() {
            for &y in b.members() {
                out[g.sub(x, y)] += 1;
            }
        }
        return Ok(out);
    }
    // 1_A ∗ 1_{-B}(x) = |G|⁻¹ |A ∩ (x + B)|
    let conv = convolve(
        &DensityFunction::indicator(a),
        &DensityFunction::indicator(&b.negate()),
    )?;
    let n = g.order() as f64;
    Ok(conv.values().iter().map(|v| (v.re * n).round() as usize).collect())
}

/// `μ_{A/B} = μ_A - μ_B` together with its Fourier transform.
#[derive(Clone, Debug)]
pub struct BalancedFunction {
    pub values: DensityFunction,
    pub fourier: DensityFunction,
}

pub fn balanced_function(a: &Subset, b: &Subset) -> Result<BalancedFunction> {
    if a.group() != b.group() {
        return Err(Error::GroupMismatch);
    }
    if !a.is_subset_of(b) {
        return Err(Error::NotSubset("A"));
    }
    let values = normalized_indicator(a)?.sub(&normalized_indicator(b)?)?;
    let fourier = fourier_transform(&values)?;
    Ok(BalancedFunction { values, fourier })
}

/// `Δ_η(X) = {γ : |μ̂_X(γ)| ≥ η}`.
#[derive(Clone, Debug, Serialize)]
pub struct Spectrum {
    pub eta: f64,
    /// `(character index, |μ̂_X(γ)|)` in index order.
    pub members: Vec<(usize, f64)>,
}

impl Spectrum {
    pub fn contains(&self, chi: usize) -> bool {
        self.members.binary_search_by_key(&chi, |m| m.0).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

pub fn spectrum_from_transform(transform: &DensityFunction, eta: f64) -> Result<Spectrum> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("eta = {eta} outside (0, 1]")));
    }
    let members = transform
        .values()
        .iter()
        .enumerate()
        .filter_map(|(i, v)| {
            let m = v.norm();
            (m >= eta - SPECTRUM_TOL).then_some((i, m))
        })
        .collect();
    Ok(Spectrum { eta, members })
}

pub fn large_spectrum(x: &Subset, eta: f64) -> Result<Spectrum> {
    spectrum_from_transform(&fourier_transform(&normalized_indicator(x)?)?, eta)
}

pub fn balanced_and_spectrum(
    a: &Subset,
    b: &Subset,
    x: &Subset,
    eta: f64,
) -> Result<(BalancedFunction, Spectrum)> {
    Ok((balanced_function(a, b)?, large_spectrum(x, eta)?))
}

/// One asserted or reported inequality `lhs ≥ rhs`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_least(name: &str, lhs: f64, rhs: f64, rel_tol: f64) -> Self {
        let slack = rel_tol * rhs.abs().max(lhs.abs()).max(1.0);
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            pass: lhs >= rhs - slack,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DyadicLevel {
    /// Shell `η ≤ |μ̂_X(γ)| < 2η`.
    pub eta: f64,
    pub characters: usize,
    pub mass: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralMass {
    /// `"A1"` or `"T2A2"`.
    pub set: &'static str,
    pub relative_density: f64,
    /// `Σ_{γ ∈ Δ_{α/8}(-T₃A₃)} |μ̂_{A/B}(γ)|² |μ̂_{-T₃A₃}(γ)|`.
    pub mass: f64,
    pub levels: Vec<DyadicLevel>,
    pub best_level: Option<f64>,
    /// `(character, |μ̂_{A/B}(γ)|² |μ̂_X(γ)|)` over the restricted spectrum,
    /// largest first, trivial character excluded.
    #[serde(skip)]
    pub contributions: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DichotomyReport {
    pub alpha: f64,
    pub mu_b: f64,
    pub mu_b_prime: f64,
    pub relative_densities: [f64; 3],
    pub densities_in_range: bool,
    pub subsets_ok: bool,
    pub b_regular: bool,
    pub t: f64,
    pub many_solutions: Check,
    pub error_term: f64,
    pub error_term_large: Check,
    pub spectrum_size: usize,
    pub masses: [SpectralMass; 2],
    pub mass_check: Check,
    /// `E ≥ (3/4)μ(B)⁻¹` and the many-solutions branch fails.
    pub contract_applies: bool,
    pub contract_holds: bool,
}

impl DichotomyReport {
    pub fn contract_violated(&self) -> bool {
        self.contract_applies && !self.contract_holds
    }

    pub fn spectral_set(&self) -> &SpectralMass {
        if self.masses[1].mass > self.masses[0].mass {
            &self.masses[1]
        } else {
            &self.masses[0]
        }
    }
}

/// Evaluates both sides of the many-solutions / spectral-mass dichotomy for
/// `A₁ ⊆ B`, `A₂ ⊆ T₂⁻¹B`, `A₃ ⊆ B′`. Precondition failures are reported;
/// only empty sets are rejected.
pub fn progressions_dichotomy(
    a1: &Subset,
    a2: &Subset,
    a3: &Subset,
    b: &BohrSet,
    b_prime: &BohrSet,
    sys: &EquationSystem,
    alpha: f64,
) -> Result<DichotomyReport> {
    check_sets(sys, [a1, a2, a3])?;
    if b.group() != sys.group() || b_prime.group() != sys.group() {
        return Err(Error::GroupMismatch);
    }
    if [a1, a2, a3].iter().any(|s| s.is_empty()) || b.is_empty() || b_prime.is_empty() {
        return Err(Error::Degenerate("dichotomy needs nonempty sets".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} outside (0, 1]")));
    }
    let g = sys.group();
    let t2 = sys.t(2);
    let t2a2 = t2.image(a2);
    let x = sys.t(3).image(a3).negate();
    let bset = b.elements();

    let rel = [
        a1.len() as f64 / b.len() as f64,
        a2.len() as f64 / b.len() as f64,
        a3.len() as f64 / b_prime.len() as f64,
    ];
    let densities_in_range = rel.iter().all(|&r| r >= alpha / 2.0 && r <= 2.0 * alpha);
    let subsets_ok =
        a1.is_subset_of(bset) && t2a2.is_subset_of(bset) && a3.is_subset_of(b_prime.elements());

    let (mu_b, mu_bp) = (b.density(), b_prime.density());
    let t = t_functional(a1, a2, a3, sys, Method::Fourier)?;
    let threshold = alpha.powi(3) * mu_b * mu_bp / 16.0;
    let many_solutions = Check::at_least("T >= alpha^3 mu(B) mu(B') / 16", t, threshold, 0.0);

    let mu_x = normalized_indicator(&x)?;
    let mu_bf = normalized_indicator(bset)?;
    let conv = convolve(&mu_x, &mu_bf)?;
    let error_term = inner_product(&normalized_indicator(a1)?, &conv, Side::Group)?.re
        + inner_product(&normalized_indicator(&t2a2)?, &conv, Side::Group)?.re
        - inner_product(&mu_bf, &conv, Side::Group)?.re;
    let error_term_large =
        Check::at_least("E >= (3/4) mu(B)^-1", error_term, 0.75 / mu_b, 0.0);

    let xhat = fourier_transform(&mu_x)?;
    let spec = spectrum_from_transform(&xhat, (alpha / 8.0).min(1.0))?;
    let masses = [
        spectral_mass("A1", a1, bset, &spec, g)?,
        spectral_mass("T2A2", &t2a2, bset, &spec, g)?,
    ];
    let best = masses[0].mass.max(masses[1].mass);
    let mass_check = Check::at_least("max mass >= (1/8) mu(B)^-1", best, 0.125 / mu_b, 1e-9);

    let contract_applies = error_term_large.pass && !many_solutions.pass;
    Ok(DichotomyReport {
        alpha,
        mu_b,
        mu_b_prime: mu_bp,
        relative_densities: rel,
        densities_in_range,
        subsets_ok,
        b_regular: b.is_regular(),
        t,
        many_solutions,
        error_term,
        error_term_large,
        spectrum_size: spec.len(),
        contract_holds: !contract_applies || mass_check.pass,
        masses,
        mass_check,
        contract_applies,
    })
}

fn spectral_mass(
    name: &'static str,
    a: &Subset,
    b: &Subset,
    spec: &Spectrum,
    g: &FiniteAbelianGroup,
) -> Result<SpectralMass> {
    let relative_density = a.len() as f64 / b.len() as f64;
    let bal = if a.is_subset_of(b) {
        balanced_function(a, b)?
    } else {
        // outside the precondition: measure μ_A - μ_B anyway
        let values = normalized_indicator(a)?.sub(&normalized_indicator(b)?)?;
        let fourier = fourier_transform(&values)?;
        BalancedFunction { values, fourier }
    };
    let mut contributions: Vec<(usize, f64)> = spec
        .members
        .iter()
        .map(|&(chi, xm)| (chi, bal.fourier.get(chi).norm_sqr() * xm))
        .collect();
    let mass = contributions.iter().map(|c| c.1).sum();

    let mut levels: Vec<DyadicLevel> = Vec::new();
    for &(chi, xm) in &spec.members {
        if xm <= 0.0 {
            continue;
        }
        let j = (-xm.log2()).ceil().max(0.0) as i32;
        let eta = 2f64.powi(-j);
        let c = bal.fourier.get(chi).norm_sqr() * xm;
        match levels.iter_mut().find(|l| l.eta == eta) {
            Some(l) => {
                l.characters += 1;
                l.mass += c;
            }
            None => levels.push(DyadicLevel {
                eta,
                characters: 1,
                mass: c,
            }),
        }
    }
    levels.sort_by(|a, b| b.eta.partial_cmp(&a.eta).unwrap());
    let best_level = levels
        .iter()
        .max_by(|a, b| a.mass.partial_cmp(&b.mass).unwrap())
        .map(|l| l.eta);

    contributions.retain(|c| c.0 != g.zero());
    contributions.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    Ok(SpectralMass {
        set: name,
        relative_density,
        mass,
        levels,
        best_level,
        contributions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endo::Endomorphism;

    fn z(n: u64) -> FiniteAbelianGroup {
        FiniteAbelianGroup::cyclic(n).unwrap()
    }

    #[test]
    fn z7_example() {
        let g = z(7);
        let sys = EquationSystem::from_scalars(&g, [1, 2, 4]).unwrap();
        let a = Subset::from_indices(&g, [1, 2]);
        let c = enumerate_solutions(&a, &a, &a, &sys).unwrap();
        assert_eq!((c.total, c.trivial, c.nontrivial), (2, 2, 0));
        for m in [Method::Direct, Method::Fourier] {
            let t = t_functional(&a, &a, &a, &sys, m).unwrap();
            assert!((t - 2.0 / 49.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_and_empty_sets() {
        let g = FiniteAbelianGroup::new(vec![3, 5]).unwrap();
        let sys = EquationSystem::from_scalars(&g, [1, 1, -2]).unwrap();
        let full = Subset::full(&g);
        let empty = Subset::empty(&g);
        let c = enumerate_solutions(&full, &full, &full, &sys).unwrap();
        assert_eq!(c.total, 225);
        assert_eq!(c.trivial, 15);
        assert!((t_functional(&full, &full, &full, &sys, Method::Fourier).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(enumerate_solutions(&full, &empty, &full, &sys).unwrap().total, 0);
    }

    #[test]
    fn counts_against_triple_loop() {
        let g = FiniteAbelianGroup::power(5, 2).unwrap();
        let t1 = Endomorphism::matrix(&g, &[vec![1, 1], vec![0, 1]]).unwrap();
        let t2 = Endomorphism::matrix(&g, &[vec![1, 2], vec![3, 4]]).unwrap();
        let t3 = t1.add(&t2).unwrap().neg();
        let sys = EquationSystem::new(&g, [t1, t2, t3]).unwrap();
        let a1 = Subset::from_indices(&g, [0, 3, 7, 8, 12, 19, 24]);
        let a2 = Subset::from_indices(&g, [1, 2, 3, 9, 10, 11, 20]);
        let a3 = Subset::from_indices(&g, [0, 4, 5, 6, 13, 14, 15, 22]);
        let mut naive = 0;
        for &x in a1.members() {
            for &y in a2.members() {
                for &w in a3.members() {
                    if is_solution(&sys, [x, y, w]) {
                        naive += 1;
                    }
                }
            }
        }
        let c = enumerate_solutions(&a1, &a2, &a3, &sys).unwrap();
        assert_eq!(c.total, naive);
        let d = t_functional(&a1, &a2, &a3, &sys, Method::Direct).unwrap();
        let f = t_functional(&a1, &a2, &a3, &sys, Method::Fourier).unwrap();
        assert!((d - f).abs() < 1e-12);
        assert_eq!((f * 625.0).round() as u64, c.total);
    }

    #[test]
    fn spectra() {
        let g = z(9);
        let x = Subset::from_indices(&g, [0, 3, 6]);
        let s = large_spectrum(&x, 0.5).unwrap();
        assert_eq!(s.members.iter().map(|m| m.0).collect::<Vec<_>>(), vec![0, 3, 6]);
        let full = large_spectrum(&Subset::full(&g), 0.01).unwrap();
        assert_eq!(full.members.len(), 1);
        assert_eq!(full.members[0].0, 0);
        assert!(large_spectrum(&x, 0.0).is_err());
    }

    #[test]
    fn balanced_functions() {
        let g = z(10);
        let b = Subset::from_indices(&g, [0, 1, 2, 8, 9]);
        let bal = balanced_function(&b, &b).unwrap();
        assert!(bal.fourier.sup_norm() < 1e-12);
        let a = Subset::from_indices(&g, [0, 2]);
        let bal = balanced_function(&a, &b).unwrap();
        assert!(bal.fourier.get(0).norm() < 1e-12);
        assert_eq!(
            balanced_function(&Subset::from_indices(&g, [5]), &b).unwrap_err(),
            Error::NotSubset("A")
        );
    }

    #[test]
    fn translate_counts_paths_agree() {
        let g = z(11);
        let a = Subset::from_indices(&g, [0, 1, 5, 7]);
        let b = Subset::from_indices(&g, [0, 1, 10]);
        let c = translate_counts(&a, &b).unwrap();
        for x in g.elements() {
            let n = b.members().iter().filter(|&&y| a.contains(g.add(x, y))).count();
            assert_eq!(c[x], n);
        }
    }

    #[test]
    fn full_density_dichotomy() {
        let g = z(31);
        let sys = EquationSystem::from_scalars(&g, [1, 1, -2]).unwrap();
        let b = BohrSet::from_indexed(&g, vec![(1, 1.0)]).unwrap();
        let bp = b.dilate(0.3).unwrap();
        let t3_inv = sys.t(3).inverse().unwrap();
        let bp = bp.apply_automorphism(&t3_inv).unwrap();
        let a2 = sys.t(2).inverse().unwrap().image(b.elements());
        let r = progressions_dichotomy(b.elements(), &a2, bp.elements(), &b, &bp, &sys, 1.0)
            .unwrap();
        assert!(r.many_solutions.pass);
        assert!(r.subsets_ok);
        assert!(!r.contract_violated());
    }
}
