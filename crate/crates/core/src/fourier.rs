//! Functions on a group and on its dual, with the averaging conventions
//!
//! ```text
//! <f, g>_G   = 1/|G| Σ_x f(x) conj(g(x))      (f * g)(x) = 1/|G| Σ_y f(y) g(x - y)
//! <f, g>_dual =       Σ_γ f(γ) conj(g(γ))      (f * g)(γ) =       Σ_λ f(λ) g(γ - λ)
//! f̂(γ) = 1/|G| Σ_x f(x) conj(γ(x))
//! ```
//!
//! Under these choices Parseval reads `<f, g>_G = <f̂, ĝ>_dual` and the
//! convolution theorem reads `(f * g)^ = f̂ ĝ`. Transforms run a mixed-radix
//! FFT along each cyclic factor.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{FiniteAbelianGroup, Subset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Group,
    Dual,
}

impl Side {
    fn name(self) -> &'static str {
        match self {
            Side::Group => "group",
            Side::Dual => "dual",
        }
    }
}

/// A complex-valued function on `G` or on `Ĝ`, stored densely by index.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityFunction {
    group: FiniteAbelianGroup,
    side: Side,
    values: Vec<Complex64>,
}

impl DensityFunction {
    pub fn new(group: &FiniteAbelianGroup, side: Side, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != group.order() {
            return Err(Error::Shape(format!(
                "{} values for a group of order {}",
                values.len(),
                group.order()
            )));
        }
        Ok(Self {
            group: group.clone(),
            side,
            values,
        })
    }

    pub fn from_real(group: &FiniteAbelianGroup, side: Side, values: &[f64]) -> Result<Self> {
        Self::new(
            group,
            side,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn zeros(group: &FiniteAbelianGroup, side: Side) -> Self {
        Self {
            group: group.clone(),
            side,
            values: vec![Complex64::new(0.0, 0.0); group.order()],
        }
    }

    pub fn constant(group: &FiniteAbelianGroup, side: Side, c: f64) -> Self {
        Self {
            group: group.clone(),
            side,
            values: vec![Complex64::new(c, 0.0); group.order()],
        }
    }

    /// Plain indicator `1_X`.
    pub fn indicator(set: &Subset) -> Self {
        let values = set
            .mask()
            .iter()
            .map(|&m| Complex64::new(if m { 1.0 } else { 0.0 }, 0.0))
            .collect();
        Self {
            group: set.group().clone(),
            side: Side::Group,
            values,
        }
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, idx: usize) -> Complex64 {
        self.values[idx]
    }

    /// Pointwise map, keeping the side.
    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        Self {
            group: self.group.clone(),
            side: self.side,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    /// `x ↦ f(x - t)`.
    pub fn translate(&self, t: usize) -> Self {
        let g = &self.group;
        let values = g.elements().map(|x| self.values[g.sub(x, t)]).collect();
        Self {
            group: g.clone(),
            side: self.side,
            values,
        }
    }

    /// Mean with respect to the side's measure: the average on `G`, the
    /// plain sum on `Ĝ`.
    pub fn mean(&self) -> Complex64 {
        let s: Complex64 = self.values.iter().sum();
        match self.side {
            Side::Group => s / self.group.order() as f64,
            Side::Dual => s,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn zip_with<F: Fn(Complex64, Complex64) -> Complex64>(&self, other: &Self, f: F) -> Result<Self> {
        check_pair(self, other)?;
        Ok(Self {
            group: self.group.clone(),
            side: self.side,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

fn check_pair(f: &DensityFunction, g: &DensityFunction) -> Result<()> {
    if f.group != g.group {
        return Err(Error::GroupMismatch);
    }
    if f.side != g.side {
        return Err(Error::SideMismatch {
            expected: f.side.name(),
            got: g.side.name(),
        });
    }
    Ok(())
}

fn expect_side(f: &DensityFunction, side: Side) -> Result<()> {
    if f.side != side {
        return Err(Error::SideMismatch {
            expected: side.name(),
            got: f.side.name(),
        });
    }
    Ok(())
}

/// In-place multidimensional DFT along every cyclic factor, unnormalized.
/// `inverse = false` uses the kernel `exp(-2πi jk/N)`.
fn fft_all_axes(group: &FiniteAbelianGroup, data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let factors = group.factors();
    let order = group.order();
    let mut stride = order;
    for &n in factors {
        let n = n as usize;
        stride /= n;
        let fft = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let block = n * stride;
        for outer in (0..order).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (k, v) in line.iter().enumerate() {
                    data[base + k * stride] = *v;
                }
            }
        }
    }
}

/// `f̂(γ) = 1/|G| Σ_x f(x) conj(γ(x))`.
pub fn fourier_transform(f: &DensityFunction) -> Result<DensityFunction> {
    expect_side(f, Side::Group)?;
    let mut values = f.values.clone();
    fft_all_axes(&f.group, &mut values, false);
    let scale = 1.0 / f.group.order() as f64;
    values.iter_mut().for_each(|v| *v *= scale);
    Ok(DensityFunction {
        group: f.group.clone(),
        side: Side::Dual,
        values,
    })
}

/// `f(x) = Σ_γ f̂(γ) γ(x)`.
pub fn inverse_fourier(fhat: &DensityFunction) -> Result<DensityFunction> {
    expect_side(fhat, Side::Dual)?;
    let mut values = fhat.values.clone();
    fft_all_axes(&fhat.group, &mut values, true);
    Ok(DensityFunction {
        group: fhat.group.clone(),
        side: Side::Group,
        values,
    })
}

/// Convolution with the side's normalization, computed spectrally.
pub fn convolve(f: &DensityFunction, g: &DensityFunction) -> Result<DensityFunction> {
    check_pair(f, g)?;
    let group = &f.group;
    let n = group.order() as f64;
    // the dual is a copy of G: its unnormalized convolution is |G| times
    // the group-side one
    let (fg, gg) = match f.side {
        Side::Group => (f.clone(), g.clone()),
        Side::Dual => (
            DensityFunction { side: Side::Group, ..f.clone() },
            DensityFunction { side: Side::Group, ..g.clone() },
        ),
    };
    let prod = fourier_transform(&fg)?.mul(&fourier_transform(&gg)?)?;
    let mut out = inverse_fourier(&prod)?;
    if f.side == Side::Dual {
        out = out.scale(n);
        out.side = Side::Dual;
    }
    Ok(out)
}

/// Convolution by direct summation over the support of `f`; the reference
/// path used to cross-check the spectral one.
pub fn convolve_direct(f: &DensityFunction, g: &DensityFunction) -> Result<DensityFunction> {
    check_pair(f, g)?;
    let group = &f.group;
    let mut out = vec![Complex64::new(0.0, 0.0); group.order()];
    for (y, &fy) in f.values.iter().enumerate() {
        if fy == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (z, &gz) in g.values.iter().enumerate() {
            if gz == Complex64::new(0.0, 0.0) {
                continue;
            }
            out[group.add(y, z)] += fy * gz;
        }
    }
    let scale = match f.side {
        Side::Group => 1.0 / group.order() as f64,
        Side::Dual => 1.0,
    };
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(DensityFunction {
        group: group.clone(),
        side: f.side,
        values: out,
    })
}

/// `<f, g>` on the requested side; conjugate-linear in `g`.
pub fn inner_product(f: &DensityFunction, g: &DensityFunction, side: Side) -> Result<Complex64> {
    expect_side(f, side)?;
    check_pair(f, g)?;
    let s: Complex64 = f
        .values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| a * b.conj())
        .sum();
    Ok(match side {
        Side::Group => s / f.group.order() as f64,
        Side::Dual => s,
    })
}

/// `μ_X = μ(X)⁻¹ 1_X`.
pub fn normalized_indicator(set: &Subset) -> Result<DensityFunction> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(DensityFunction::indicator(set).scale(1.0 / set.density()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Character;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn naive_transform(f: &DensityFunction) -> Vec<Complex64> {
        let g = f.group();
        g.elements()
            .map(|chi| {
                let ch = Character::from_index(g, chi);
                g.elements()
                    .map(|x| f.get(x) * ch.eval(g, x).conj())
                    .sum::<Complex64>()
                    / g.order() as f64
            })
            .collect()
    }

    #[test]
    fn transform_of_constant_is_delta_at_trivial_character() {
        let g = FiniteAbelianGroup::new(vec![3, 4]).unwrap();
        let fhat = fourier_transform(&DensityFunction::constant(&g, Side::Group, 1.0)).unwrap();
        assert!((fhat.get(0) - c(1.0)).norm() < 1e-12);
        assert!(fhat.values()[1..].iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn indicator_of_even_residues_mod_4() {
        let g = FiniteAbelianGroup::cyclic(4).unwrap();
        let f = DensityFunction::indicator(&Subset::from_indices(&g, [0, 2]));
        let fhat = fourier_transform(&f).unwrap();
        let want = [0.5, 0.0, 0.5, 0.0];
        for (v, w) in fhat.values().iter().zip(want) {
            assert!((v - c(w)).norm() < 1e-12);
        }
    }

    #[test]
    fn fft_agrees_with_naive_sum_on_mixed_factors() {
        let g = FiniteAbelianGroup::new(vec![6, 5, 3]).unwrap();
        let f = DensityFunction::new(
            &g,
            Side::Group,
            g.elements()
                .map(|x| Complex64::new((x as f64 * 0.37).sin(), (x as f64).cos()))
                .collect(),
        )
        .unwrap();
        let fast = fourier_transform(&f).unwrap();
        for (a, b) in fast.values().iter().zip(naive_transform(&f)) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn normalized_indicator_values() {
        let g = FiniteAbelianGroup::cyclic(6).unwrap();
        let mu = normalized_indicator(&Subset::from_indices(&g, [0])).unwrap();
        assert_eq!(mu.get(0), c(6.0));
        assert_eq!(
            normalized_indicator(&Subset::full(&g)).unwrap().values(),
            &[c(1.0); 6]
        );
        let g8 = FiniteAbelianGroup::cyclic(8).unwrap();
        let odd = normalized_indicator(&Subset::from_indices(&g8, [1, 3, 5, 7])).unwrap();
        for x in g8.elements() {
            assert_eq!(odd.get(x), c(if x % 2 == 1 { 2.0 } else { 0.0 }));
        }
        assert!((odd.mean() - c(1.0)).norm() < 1e-15);
        assert_eq!(
            normalized_indicator(&Subset::empty(&g)),
            Err(Error::EmptySet)
        );
    }

    #[test]
    fn convolution_examples() {
        let g = FiniteAbelianGroup::cyclic(5).unwrap();
        let a = DensityFunction::indicator(&Subset::from_indices(&g, [1]));
        let b = DensityFunction::indicator(&Subset::from_indices(&g, [2]));
        for conv in [convolve(&a, &b).unwrap(), convolve_direct(&a, &b).unwrap()] {
            for x in g.elements() {
                let want = if x == 3 { 0.2 } else { 0.0 };
                assert!((conv.get(x) - c(want)).norm() < 1e-12);
            }
        }
        let one = DensityFunction::constant(&g, Side::Group, 1.0);
        let conv = convolve(&one, &one).unwrap();
        assert!(conv.values().iter().all(|v| (v - c(1.0)).norm() < 1e-12));

        let mut delta = vec![0.0; 5];
        delta[0] = 5.0;
        let delta = DensityFunction::from_real(&g, Side::Group, &delta).unwrap();
        let f = DensityFunction::from_real(&g, Side::Group, &[0.3, -1.0, 2.5, 0.0, 7.0]).unwrap();
        let conv = convolve(&f, &delta).unwrap();
        for x in g.elements() {
            assert!((conv.get(x) - f.get(x)).norm() < 1e-12);
        }
    }

    #[test]
    fn dual_convolution_is_unnormalized() {
        let g = FiniteAbelianGroup::cyclic(6).unwrap();
        let f = DensityFunction::from_real(&g, Side::Dual, &[1.0, 2.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let h = DensityFunction::from_real(&g, Side::Dual, &[0.0, 0.0, 3.0, 0.0, 0.0, 1.0]).unwrap();
        let fast = convolve(&f, &h).unwrap();
        let slow = convolve_direct(&f, &h).unwrap();
        assert_eq!(fast.side(), Side::Dual);
        for x in g.elements() {
            assert!((fast.get(x) - slow.get(x)).norm() < 1e-12);
        }
        // (f*h)(3) = f(1) h(2), (f*h)(0) = f(1) h(5)
        assert!((fast.get(3) - c(6.0)).norm() < 1e-12);
        assert!((fast.get(0) - c(2.0)).norm() < 1e-12);
    }

    #[test]
    fn inner_products_and_parseval_spot_value() {
        let g = FiniteAbelianGroup::cyclic(3).unwrap();
        let one = DensityFunction::constant(&g, Side::Group, 1.0);
        assert!((inner_product(&one, &one, Side::Group).unwrap() - c(1.0)).norm() < 1e-15);
        let mu = normalized_indicator(&Subset::from_indices(&g, [2])).unwrap();
        assert!((inner_product(&mu, &one, Side::Group).unwrap() - c(1.0)).norm() < 1e-15);

        let f = DensityFunction::indicator(&Subset::from_indices(&g, [1]));
        let lhs = inner_product(&f, &f, Side::Group).unwrap();
        let fhat = fourier_transform(&f).unwrap();
        let rhs = inner_product(&fhat, &fhat, Side::Dual).unwrap();
        assert!((lhs - c(1.0 / 3.0)).norm() < 1e-15);
        assert!((rhs - c(1.0 / 3.0)).norm() < 1e-12);
    }

    #[test]
    fn side_and_group_mismatches_are_rejected() {
        let g = FiniteAbelianGroup::cyclic(4).unwrap();
        let h = FiniteAbelianGroup::cyclic(5).unwrap();
        let f = DensityFunction::constant(&g, Side::Group, 1.0);
        let d = DensityFunction::constant(&g, Side::Dual, 1.0);
        assert!(matches!(fourier_transform(&d), Err(Error::SideMismatch { .. })));
        assert!(matches!(inverse_fourier(&f), Err(Error::SideMismatch { .. })));
        assert!(matches!(inner_product(&f, &d, Side::Group), Err(Error::SideMismatch { .. })));
        assert!(matches!(inner_product(&f, &f, Side::Dual), Err(Error::SideMismatch { .. })));
        let other = DensityFunction::constant(&h, Side::Group, 1.0);
        assert_eq!(convolve(&f, &other), Err(Error::GroupMismatch));
        assert!(DensityFunction::from_real(&g, Side::Group, &[1.0]).is_err());
    }

    #[test]
    fn translation_twists_the_transform() {
        let g = FiniteAbelianGroup::new(vec![4, 3]).unwrap();
        let f = DensityFunction::new(
            &g,
            Side::Group,
            g.elements().map(|x| Complex64::new(x as f64, 1.0 - x as f64)).collect(),
        )
        .unwrap();
        let t = 7;
        let lhs = fourier_transform(&f.translate(t)).unwrap();
        let fhat = fourier_transform(&f).unwrap();
        for chi in g.elements() {
            let twist = Character::from_index(&g, chi).eval(&g, t).conj();
            assert!((lhs.get(chi) - twist * fhat.get(chi)).norm() < 1e-10);
        }
    }
}
