//! Bohr sets `Bohr_ν(Γ) = {x : |1 - γ(x)| ≤ ν(γ) for all γ ∈ Γ}`.
//!
//! A [`BohrSet`] is the triple (element set, frequency set, width function);
//! two Bohr sets with equal element sets but different frequency data are
//! different objects. Membership is evaluated as `2|sin(π·phase)|` against the
//! width with an absolute tolerance of [`MEMBERSHIP_TOL`], ties counting as
//! members.
//!
//! Regularity is decided exactly. For a fixed Bohr set every element `x` has
//! a threshold `t(x)` such that `x ∈ B_s` iff `t(x) ≤ s`, so `s ↦ |B_s|` is a
//! right-continuous step function and the regularity inequalities only need
//! to be checked at its breakpoints (and their left limits).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::endo::Endomorphism;
use crate::error::{Error, Result};
use crate::group::{Character, FiniteAbelianGroup, Subset};

pub const MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct BohrSet {
    group: FiniteAbelianGroup,
    /// Character indices, strictly increasing.
    frequencies: Vec<usize>,
    widths: Vec<f64>,
    elements: Subset,
}

impl BohrSet {
    /// Builds and enumerates `Bohr_ν(Γ)`. Repeated characters are merged
    /// with the smaller width.
    pub fn new(group: &FiniteAbelianGroup, spec: &[(Character, f64)]) -> Result<Self> {
        let pairs = spec
            .iter()
            .map(|(c, w)| {
                if c.coords.len() != group.rank() {
                    return Err(Error::Arity {
                        expected: group.rank(),
                        got: c.coords.len(),
                    });
                }
                Ok((c.index(group), *w))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_indexed(group, pairs)
    }

    pub fn from_indexed(group: &FiniteAbelianGroup, pairs: Vec<(usize, f64)>) -> Result<Self> {
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for (chi, w) in pairs {
            if !(0.0..=2.0).contains(&w) {
                return Err(Error::WidthOutOfRange(w));
            }
            if chi == 0 {
                return Err(Error::TrivialFrequency);
            }
            merged
                .entry(chi)
                .and_modify(|v| *v = v.min(w))
                .or_insert(w);
        }
        let (frequencies, widths): (Vec<usize>, Vec<f64>) = merged.into_iter().unzip();
        let elements = enumerate(group, &frequencies, &widths);
        Ok(Self {
            group: group.clone(),
            frequencies,
            widths,
            elements,
        })
    }

    /// The rank-0 Bohr set, equal to the whole group.
    pub fn full(group: &FiniteAbelianGroup) -> Self {
        Self {
            group: group.clone(),
            frequencies: Vec::new(),
            widths: Vec::new(),
            elements: Subset::full(group),
        }
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn rank(&self) -> usize {
        self.frequencies.len()
    }

    pub fn frequency_indices(&self) -> &[usize] {
        &self.frequencies
    }

    pub fn frequencies(&self) -> Vec<Character> {
        self.frequencies
            .iter()
            .map(|&c| Character::from_index(&self.group, c))
            .collect()
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn width_of(&self, chi: usize) -> Option<f64> {
        self.frequencies
            .binary_search(&chi)
            .ok()
            .map(|i| self.widths[i])
    }

    pub fn elements(&self) -> &Subset {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.elements.contains(x)
    }

    /// `μ(B) = |B| / |G|`.
    pub fn density(&self) -> f64 {
        self.elements.density()
    }

    /// Frequency sets and widths agree (which forces equal element sets).
    pub fn same_triple(&self, other: &BohrSet) -> bool {
        self.group == other.group
            && self.frequencies == other.frequencies
            && self.widths == other.widths
    }

    /// Same frequency set with a new width function.
    pub fn with_widths(&self, widths: &[f64]) -> Result<Self> {
        if widths.len() != self.rank() {
            return Err(Error::Shape(format!(
                "{} widths for rank {}",
                widths.len(),
                self.rank()
            )));
        }
        Self::from_indexed(
            &self.group,
            self.frequencies.iter().copied().zip(widths.iter().copied()).collect(),
        )
    }

    /// `B_ρ = Bohr_{ρν}(Γ)`, widths clipped at 2.
    pub fn dilate(&self, rho: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::NonPositiveDilation(rho));
        }
        let widths: Vec<f64> = self.widths.iter().map(|w| (rho * w).min(2.0)).collect();
        let elements = enumerate(&self.group, &self.frequencies, &widths);
        Ok(Self {
            group: self.group.clone(),
            frequencies: self.frequencies.clone(),
            widths,
            elements,
        })
    }

    /// Union of frequency sets, pointwise-minimum width on shared characters.
    pub fn intersect(&self, other: &BohrSet) -> Result<Self> {
        if self.group != other.group {
            return Err(Error::GroupMismatch);
        }
        let pairs = self
            .frequencies
            .iter()
            .copied()
            .zip(self.widths.iter().copied())
            .chain(other.frequencies.iter().copied().zip(other.widths.iter().copied()))
            .collect();
        let out = Self::from_indexed(&self.group, pairs)?;
        debug_assert_eq!(out.elements, self.elements.intersection(&other.elements)?);
        Ok(out)
    }

    /// `TB`, with frequency set `{γ ∘ T⁻¹ : γ ∈ Γ}` and the same widths.
    pub fn apply_automorphism(&self, t: &Endomorphism) -> Result<Self> {
        if t.group() != &self.group {
            return Err(Error::GroupMismatch);
        }
        let inv = t.inverse().ok_or(Error::NotAutomorphism {
            index: 0,
            det: t.determinant(),
            modulus: t.determinant_modulus(),
            gcd: crate::group::gcd(t.determinant(), t.determinant_modulus()),
        })?;
        let mut pairs: Vec<(usize, f64)> = self
            .frequencies
            .iter()
            .zip(&self.widths)
            .map(|(&chi, &w)| (inv.dual_apply(chi), w))
            .collect();
        pairs.sort_by_key(|p| p.0);
        let (frequencies, widths): (Vec<usize>, Vec<f64>) = pairs.into_iter().unzip();
        let elements = t.image(&self.elements);
        debug_assert_eq!(elements, enumerate(&self.group, &frequencies, &widths));
        Ok(Self {
            group: self.group.clone(),
            frequencies,
            widths,
            elements,
        })
    }

    /// For each element, the least dilation factor `s` with `x ∈ B_s`
    /// (`-∞` if every constraint is met at every scale, `+∞` if never).
    pub fn thresholds(&self) -> Vec<f64> {
        let g = &self.group;
        g.elements()
            .map(|x| {
                let mut t = f64::NEG_INFINITY;
                for (&chi, &w) in self.frequencies.iter().zip(&self.widths) {
                    let chord = g.chord(chi, x);
                    let need = if w > 0.0 {
                        (chord - MEMBERSHIP_TOL) / w
                    } else if chord <= MEMBERSHIP_TOL {
                        f64::NEG_INFINITY
                    } else {
                        f64::INFINITY
                    };
                    t = t.max(need);
                }
                t
            })
            .collect()
    }

    pub fn size_profile(&self) -> SizeProfile {
        SizeProfile::new(self.thresholds())
    }

    /// Exact regularity decision with the worst offending `κ`.
    pub fn regularity(&self) -> RegularityReport {
        regularity_at(&self.size_profile(), self.rank(), 1.0)
    }

    pub fn is_regular(&self) -> bool {
        self.regularity().regular
    }

    /// Largest `ρ ∈ [1/2, 1]` (within the breakpoint-induced candidates) for
    /// which `B_ρ` is regular.
    pub fn find_regular_dilate(&self) -> Result<f64> {
        let d = self.rank();
        if d == 0 || self.is_regular() {
            return Ok(1.0);
        }
        let profile = self.size_profile();
        for rho in regular_candidates(&profile, d) {
            if self.dilate(rho)?.is_regular() {
                return Ok(rho);
            }
        }
        Err(Error::Degenerate(
            "no regular dilate in [1/2, 1] among breakpoint candidates".into(),
        ))
    }

    /// `B_ρ` for the `ρ` returned by [`Self::find_regular_dilate`].
    pub fn regularize(&self) -> Result<(f64, Self)> {
        let rho = self.find_regular_dilate()?;
        let b = if rho == 1.0 { self.clone() } else { self.dilate(rho)? };
        Ok((rho, b))
    }

    /// The size guarantee `(∏ ν'(γ) / 4ν(γ)) |Bohr_ν(Γ)|` for a Bohr set
    /// with the same frequency set and pointwise smaller widths.
    pub fn size_lower_bound_for(&self, narrower: &BohrSet) -> Result<f64> {
        if self.group != narrower.group || self.frequencies != narrower.frequencies {
            return Err(Error::Shape("frequency sets differ".into()));
        }
        let mut factor = 1.0;
        for (&w, &w2) in self.widths.iter().zip(&narrower.widths) {
            if w2 > w {
                return Err(Error::InvalidParameter(format!(
                    "width {w2} exceeds {w}"
                )));
            }
            if w > 0.0 {
                factor *= w2 / (4.0 * w);
            }
        }
        Ok(factor * self.len() as f64)
    }

    pub fn to_spec(&self, with_elements: bool) -> BohrSpec {
        BohrSpec {
            frequencies: self
                .frequencies()
                .into_iter()
                .map(|c| c.coords.into_iter().map(|v| v as i64).collect())
                .collect(),
            widths: self.widths.clone(),
            elements: with_elements.then(|| {
                self.elements
                    .to_coords()
                    .into_iter()
                    .map(|c| c.into_iter().map(|v| v as i64).collect())
                    .collect()
            }),
        }
    }
}

fn enumerate(group: &FiniteAbelianGroup, frequencies: &[usize], widths: &[f64]) -> Subset {
    let mask = group
        .elements()
        .map(|x| {
            frequencies
                .iter()
                .zip(widths)
                .all(|(&chi, &w)| group.chord(chi, x) <= w.min(2.0) + MEMBERSHIP_TOL)
        })
        .collect();
    Subset::from_mask(group, mask)
}

/// Serialized form `{"frequencies": [[..], ..], "widths": [..], "elements": [[..], ..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BohrSpec {
    pub frequencies: Vec<Vec<i64>>,
    pub widths: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<Vec<i64>>>,
}

impl BohrSpec {
    pub fn build(&self, group: &FiniteAbelianGroup) -> Result<BohrSet> {
        if self.frequencies.len() != self.widths.len() {
            return Err(Error::Shape(format!(
                "{} frequencies but {} widths",
                self.frequencies.len(),
                self.widths.len()
            )));
        }
        let pairs = self
            .frequencies
            .iter()
            .zip(&self.widths)
            .map(|(c, &w)| Ok((group.index_of(c)?, w)))
            .collect::<Result<Vec<_>>>()?;
        let b = BohrSet::from_indexed(group, pairs)?;
        if let Some(listed) = &self.elements {
            let listed = Subset::from_coords(group, listed)?;
            if &listed != b.elements() {
                return Err(Error::Shape(
                    "cached elements disagree with the enumerated Bohr set".into(),
                ));
            }
        }
        Ok(b)
    }
}

/// `s ↦ |B_s|` as a sorted list of element thresholds.
#[derive(Clone, Debug)]
pub struct SizeProfile {
    sorted: Vec<f64>,
}

impl SizeProfile {
    pub fn new(mut thresholds: Vec<f64>) -> Self {
        thresholds.sort_by(|a, b| a.partial_cmp(b).expect("thresholds are never NaN"));
        Self { sorted: thresholds }
    }

    /// `|B_s| = #{x : t(x) ≤ s}`.
    pub fn count_at(&self, s: f64) -> usize {
        self.sorted.partition_point(|&t| t <= s)
    }

    /// `lim_{s' → s⁻} |B_{s'}| = #{x : t(x) < s}`.
    pub fn count_below(&self, s: f64) -> usize {
        self.sorted.partition_point(|&t| t < s)
    }

    /// Distinct finite breakpoints inside `[lo, hi]`.
    pub fn breakpoints_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let start = self.sorted.partition_point(|&t| t < lo);
        let mut out: Vec<f64> = Vec::new();
        for &t in &self.sorted[start..] {
            if t > hi {
                break;
            }
            if t.is_finite() && out.last() != Some(&t) {
                out.push(t);
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub regular: bool,
    pub rank: usize,
    pub size: usize,
    /// `κ` at which the inequality has the least slack (most negative if
    /// violated); `None` when no breakpoint falls in the window.
    pub worst_kappa: Option<f64>,
    /// `allowed - observed` size at `worst_kappa`.
    pub worst_slack: Option<f64>,
}

/// Regularity of `B_scale` from the profile of `B`.
fn regularity_at(profile: &SizeProfile, d: usize, scale: f64) -> RegularityReport {
    let size = profile.count_at(scale);
    if d == 0 {
        return RegularityReport {
            regular: true,
            rank: 0,
            size,
            worst_kappa: None,
            worst_slack: None,
        };
    }
    let k = 1.0 / (100.0 * d as f64);
    let c = 100.0 * d as f64;
    let size_f = size as f64;
    let mut worst: Option<(f64, f64)> = None;
    let mut note = |kappa: f64, slack: f64| {
        if worst.map_or(true, |(_, s)| slack < s) {
            worst = Some((kappa, slack));
        }
    };
    for b in profile.breakpoints_in(scale * (1.0 - k), scale * (1.0 + k)) {
        let kappa = b / scale - 1.0;
        if kappa > 0.0 {
            let allowed = (1.0 + c * kappa) * size_f;
            note(kappa, allowed - profile.count_at(b) as f64);
        } else if b > scale * (1.0 - k) {
            // left limit just below the breakpoint
            let allowed = (1.0 - c * kappa.abs()) * size_f;
            note(kappa, profile.count_below(b) as f64 - allowed);
        }
    }
    let regular = worst.map_or(true, |(_, s)| s >= -1e-9);
    RegularityReport {
        regular,
        rank: d,
        size,
        worst_kappa: worst.map(|w| w.0),
        worst_slack: worst.map(|w| w.1),
    }
}

/// Candidate dilation factors in `[1/2, 1]`, largest first: for each gap
/// between consecutive breakpoints, the midpoint of the sub-interval on which
/// every breakpoint constraint of the regularity inequality holds.
fn regular_candidates(profile: &SizeProfile, d: usize) -> Vec<f64> {
    let k = 1.0 / (100.0 * d as f64);
    let c = 100.0 * d as f64;
    let mut edges = vec![0.5];
    edges.extend(profile.breakpoints_in(0.5, 1.0).into_iter().filter(|&b| b > 0.5 && b < 1.0));
    edges.push(1.0);
    edges.dedup();
    let window = profile.breakpoints_in(0.5 * (1.0 - k), 1.0 + k);

    let mut out = Vec::new();
    for gap in edges.windows(2).rev() {
        let (lo, hi) = (gap[0], gap[1]);
        let count = profile.count_at(0.5 * (lo + hi)) as f64;
        if count == 0.0 {
            continue;
        }
        let mut lower = lo;
        let mut upper = hi;
        for &b in &window {
            if b >= hi {
                // growth side: ρ(1+K) < b, or |B_b| ≤ (1 + c(b/ρ - 1)) |B_ρ|
                let excess = (profile.count_at(b) as f64 - count) / (c * count);
                let u = b / (1.0 + excess);
                upper = upper.min(u.max(b / (1.0 + k)));
            } else if b <= lo {
                // shrinking side: b ≤ ρ(1-K), or |B_{b⁻}| ≥ (1 - c(1 - b/ρ)) |B_ρ|
                let deficit = (count - profile.count_below(b) as f64) / (c * count);
                let l = if deficit < 1.0 { b / (1.0 - deficit) } else { f64::INFINITY };
                lower = lower.max(l.min(b / (1.0 - k)));
            }
        }
        if lower < upper {
            out.push(0.5 * (lower + upper));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endo::Endomorphism;

    fn z(n: u64) -> FiniteAbelianGroup {
        FiniteAbelianGroup::cyclic(n).unwrap()
    }

    fn chi(c: u64) -> Character {
        Character { coords: vec![c] }
    }

    #[test]
    fn full_width_gives_whole_group() {
        let g = FiniteAbelianGroup::new(vec![6, 4]).unwrap();
        let b = BohrSet::new(&g, &[(Character { coords: vec![1, 3] }, 2.0)]).unwrap();
        assert_eq!(b.len(), g.order());
        assert_eq!(BohrSet::full(&g).len(), g.order());
    }

    #[test]
    fn interval_in_z12() {
        let g = z(12);
        let b = BohrSet::new(&g, &[(chi(1), 1.0)]).unwrap();
        assert_eq!(b.elements().members(), &[0, 1, 2, 10, 11]);
        let half = b.dilate(0.5).unwrap();
        assert_eq!(half.elements().members(), &[0]);
        let bound = b.size_lower_bound_for(&half).unwrap();
        assert!((bound - 0.625).abs() < 1e-12);
        assert!(half.len() as f64 >= bound);
    }

    #[test]
    fn zero_width_is_the_joint_kernel() {
        let g = z(12);
        let b = BohrSet::new(&g, &[(chi(1), 0.0)]).unwrap();
        assert_eq!(b.elements().members(), &[0]);
        let b = BohrSet::new(&g, &[(chi(4), 0.0)]).unwrap();
        assert_eq!(b.elements().members(), &[0, 3, 6, 9]);
    }

    #[test]
    fn construction_errors() {
        let g = z(12);
        assert_eq!(
            BohrSet::new(&g, &[(chi(1), 2.5)]).unwrap_err(),
            Error::WidthOutOfRange(2.5)
        );
        assert_eq!(
            BohrSet::new(&g, &[(chi(1), -0.1)]).unwrap_err(),
            Error::WidthOutOfRange(-0.1)
        );
        assert_eq!(
            BohrSet::new(&g, &[(chi(0), 1.0)]).unwrap_err(),
            Error::TrivialFrequency
        );
        let b = BohrSet::new(&g, &[(chi(1), 1.0)]).unwrap();
        assert_eq!(b.dilate(0.0).unwrap_err(), Error::NonPositiveDilation(0.0));
    }

    #[test]
    fn duplicates_merge_to_min_width() {
        let g = z(12);
        let b = BohrSet::new(&g, &[(chi(1), 1.5), (chi(1), 1.0)]).unwrap();
        assert_eq!(b.rank(), 1);
        assert_eq!(b.widths(), &[1.0]);
    }

    #[test]
    fn intersection_in_z12() {
        let g = z(12);
        let b1 = BohrSet::new(&g, &[(chi(1), 1.0)]).unwrap();
        let b2 = BohrSet::new(&g, &[(chi(2), 1.0)]).unwrap();
        assert_eq!(b2.elements().members(), &[0, 1, 5, 6, 7, 11]);
        let both = b1.intersect(&b2).unwrap();
        assert_eq!(both.rank(), 2);
        assert_eq!(both.elements().members(), &[0, 1, 11]);
        assert!(b1.intersect(&b1).unwrap().same_triple(&b1));
        assert!(b1.intersect(&BohrSet::full(&g)).unwrap().same_triple(&b1));
    }

    #[test]
    fn automorphism_images() {
        let g = z(7);
        let b = BohrSet::new(&g, &[(chi(1), 1.0)]).unwrap();
        let id = Endomorphism::identity(&g);
        assert!(b.apply_automorphism(&id).unwrap().same_triple(&b));

        let neg = Endomorphism::scalar(&g, -1);
        let nb = b.apply_automorphism(&neg).unwrap();
        assert_eq!(nb.elements(), b.elements());
        assert_eq!(nb.frequency_indices(), &[6]);

        let two = Endomorphism::scalar(&g, 2);
        let tb = b.apply_automorphism(&two).unwrap();
        let image = two.image(b.elements());
        let direct = BohrSet::from_indexed(&g, vec![(4, 1.0)]).unwrap();
        assert_eq!(tb.elements(), &image);
        assert_eq!(direct.elements(), &image);
        assert!(tb.same_triple(&direct));

        let zero = Endomorphism::scalar(&g, 0);
        assert!(matches!(b.apply_automorphism(&zero), Err(Error::NotAutomorphism { .. })));
    }

    #[test]
    fn dilation_commutes_with_automorphisms() {
        let g = FiniteAbelianGroup::power(11, 2).unwrap();
        let t = Endomorphism::matrix(&g, &[vec![2, 1], vec![1, 1]]).unwrap();
        let b = BohrSet::new(
            &g,
            &[
                (Character { coords: vec![1, 0] }, 1.2),
                (Character { coords: vec![3, 4] }, 0.9),
            ],
        )
        .unwrap();
        let lhs = b.dilate(0.6).unwrap().apply_automorphism(&t).unwrap();
        let rhs = b.apply_automorphism(&t).unwrap().dilate(0.6).unwrap();
        assert!(lhs.same_triple(&rhs));
        assert_eq!(lhs.elements(), rhs.elements());
    }

    #[test]
    fn rank_zero_and_full_width_regularity() {
        let g = z(7);
        assert!(BohrSet::full(&g).is_regular());
        assert_eq!(BohrSet::full(&g).find_regular_dilate().unwrap(), 1.0);
        // on Z/7 the chord never exceeds 2cos(π/14), so every element stays
        // inside B_{1+κ} for |κ| ≤ 1/100
        let b = BohrSet::new(&g, &[(chi(1), 2.0)]).unwrap();
        assert!(b.is_regular());
        assert_eq!(b.find_regular_dilate().unwrap(), 1.0);
    }

    #[test]
    fn boundary_points_make_a_bohr_set_irregular() {
        // x = ±2 sits exactly on the boundary of the Z/12 interval
        let b = BohrSet::new(&z(12), &[(chi(1), 1.0)]).unwrap();
        let report = b.regularity();
        assert!(!report.regular);
        assert!(report.worst_kappa.unwrap() < 0.0);
        let rho = b.find_regular_dilate().unwrap();
        assert!((0.5..=1.0).contains(&rho));
        assert!(b.dilate(rho).unwrap().is_regular());
    }

    #[test]
    fn regularity_matches_grid_enumeration() {
        let g = z(97);
        let b = BohrSet::new(&g, &[(chi(5), 0.83), (chi(17), 1.41)]).unwrap();
        let report = b.regularity();
        let d = b.rank() as f64;
        let k = 1.0 / (100.0 * d);
        let size = b.len() as f64;
        let mut grid_ok = true;
        for i in 0..=2000 {
            let kappa = -k + 2.0 * k * i as f64 / 2000.0;
            if kappa == 0.0 {
                continue;
            }
            let n = b.dilate(1.0 + kappa).unwrap().len() as f64;
            let lo = (1.0 - 100.0 * d * kappa.abs()) * size;
            let hi = (1.0 + 100.0 * d * kappa.abs()) * size;
            if n < lo - 1e-9 || n > hi + 1e-9 {
                grid_ok = false;
            }
        }
        // the grid can only miss violations, never invent them
        if !grid_ok {
            assert!(!report.regular);
        }
        let profile = b.size_profile();
        for s in [0.5, 0.77, 0.99, 1.0, 1.005] {
            assert_eq!(profile.count_at(s), b.dilate(s).unwrap().len());
        }
    }

    #[test]
    fn spec_round_trip() {
        let g = FiniteAbelianGroup::new(vec![5, 10]).unwrap();
        let b = BohrSet::new(&g, &[(Character { coords: vec![1, 2] }, 0.7)]).unwrap();
        let spec = b.to_spec(true);
        let back = spec.build(&g).unwrap();
        assert!(back.same_triple(&b));
        let mut bad = spec.clone();
        bad.elements = Some(vec![vec![0, 0]]);
        assert!(bad.build(&g).is_err());
    }
}
