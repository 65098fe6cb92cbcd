use std::f64::consts::PI;

use bohr_roth::bohr::BohrSet;
use bohr_roth::counting::{enumerate_solutions, large_spectrum, t_functional, Method};
use bohr_roth::endo::EquationSystem;
use bohr_roth::fourier::{
    convolve, convolve_direct, fourier_transform, inner_product, inverse_fourier, DensityFunction, Side,
};
use bohr_roth::group::{FiniteAbelianGroup, Subset};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn factors() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(2u64..=12, 1..=3).prop_filter("order at most 512", |f| f.iter().product::<u64>() <= 512)
}

fn random_function(g: &FiniteAbelianGroup, seed: u64) -> DensityFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..g.order())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    DensityFunction::new(g, Side::Group, values).unwrap()
}

fn random_subset(g: &FiniteAbelianGroup, p: f64, rng: &mut ChaCha8Rng) -> Subset {
    Subset::from_indices(g, g.elements().filter(|_| rng.gen_bool(p)))
}

/// Direct `1/|G| Σ f(x) conj(γ(x))` with the pairing computed from coordinates.
fn naive_transform(f: &DensityFunction) -> Vec<Complex64> {
    let g = f.group();
    (0..g.order())
        .map(|chi| {
            let c = g.coords(chi);
            let s: Complex64 = (0..g.order())
                .map(|x| {
                    let y = g.coords(x);
                    let turns: f64 = g
                        .factors()
                        .iter()
                        .zip(c.iter().zip(&y))
                        .map(|(&n, (&a, &b))| ((a * b) % n) as f64 / n as f64)
                        .sum();
                    f.get(x) * Complex64::from_polar(1.0, -2.0 * PI * turns)
                })
                .sum();
            s / g.order() as f64
        })
        .collect()
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * b.norm().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transform_matches_direct_sum(f in factors(), seed in any::<u64>()) {
        let g = FiniteAbelianGroup::new(f).unwrap();
        prop_assume!(g.order() <= 128);
        let x = random_function(&g, seed);
        let fast = fourier_transform(&x).unwrap();
        for (a, b) in fast.values().iter().zip(naive_transform(&x)) {
            prop_assert!(close(*a, b, 1e-9));
        }
    }

    #[test]
    fn parseval_and_inversion(f in factors(), seed in any::<u64>()) {
        let g = FiniteAbelianGroup::new(f).unwrap();
        let x = random_function(&g, seed);
        let y = random_function(&g, seed.wrapping_add(1));
        let (xh, yh) = (fourier_transform(&x).unwrap(), fourier_transform(&y).unwrap());
        let lhs = inner_product(&x, &y, Side::Group).unwrap();
        let rhs = inner_product(&xh, &yh, Side::Dual).unwrap();
        prop_assert!(close(lhs, rhs, 1e-9));
        let back = inverse_fourier(&xh).unwrap();
        for (a, b) in back.values().iter().zip(x.values()) {
            prop_assert!(close(*a, *b, 1e-9));
        }
    }

    #[test]
    fn convolution_theorem(f in factors(), seed in any::<u64>()) {
        let g = FiniteAbelianGroup::new(f).unwrap();
        let x = random_function(&g, seed);
        let y = random_function(&g, seed ^ 0x9e37);
        let conv = convolve(&x, &y).unwrap();
        let direct = convolve_direct(&x, &y).unwrap();
        for (a, b) in conv.values().iter().zip(direct.values()) {
            prop_assert!(close(*a, *b, 1e-9));
        }
        let lhs = fourier_transform(&conv).unwrap();
        let rhs = fourier_transform(&x).unwrap().mul(&fourier_transform(&y).unwrap()).unwrap();
        for (a, b) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!(close(*a, *b, 1e-9));
        }
    }

    #[test]
    fn translation_leaves_counts_unchanged(n in 3u64..60, seed in any::<u64>()) {
        let g = FiniteAbelianGroup::cyclic(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let units: Vec<i64> = (1..n as i64).filter(|&u| bohr_roth::group::gcd(u as u64, n) == 1).collect();
        let a = units[rng.gen_range(0..units.len())];
        let b = units[rng.gen_range(0..units.len())];
        let sys = match EquationSystem::from_scalars(&g, [a, b, -(a + b)]) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        let s = random_subset(&g, 0.3, &mut rng);
        let t = rng.gen_range(0..g.order());
        let base = enumerate_solutions(&s, &s, &s, &sys).unwrap();
        let moved = s.translate(t);
        prop_assert_eq!(&base, &enumerate_solutions(&moved, &moved, &moved, &sys).unwrap());
        let tf = t_functional(&s, &s, &s, &sys, Method::Fourier).unwrap();
        prop_assert!((tf - base.t_value).abs() <= 1e-9);
    }

    #[test]
    fn canonical_form_preserves_counts(n in 3u64..40, seed in any::<u64>()) {
        let g = FiniteAbelianGroup::cyclic(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let units: Vec<i64> = (1..n as i64).filter(|&u| bohr_roth::group::gcd(u as u64, n) == 1).collect();
        let a = units[rng.gen_range(0..units.len())];
        let b = units[rng.gen_range(0..units.len())];
        let Ok(sys) = EquationSystem::from_scalars(&g, [a, b, -(a + b)]) else { return Ok(()) };
        let canon = sys.canonicalize();
        prop_assert!(canon.system.is_canonical());
        let s = random_subset(&g, 0.4, &mut rng);
        let mapped = canon.map_set(&s);
        let c0 = enumerate_solutions(&s, &s, &s, &sys).unwrap();
        let c1 = enumerate_solutions(&mapped, &mapped, &mapped, &canon.system).unwrap();
        prop_assert_eq!(c0, c1);
    }

    #[test]
    fn spectrum_shrinks_as_eta_grows(f in factors(), seed in any::<u64>(), e1 in 0.05f64..1.0, e2 in 0.05f64..1.0) {
        let g = FiniteAbelianGroup::new(f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_subset(&g, 0.3, &mut rng);
        prop_assume!(!s.is_empty());
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let big = large_spectrum(&s, lo).unwrap();
        let small = large_spectrum(&s, hi).unwrap();
        prop_assert!(small.members.iter().all(|(c, _)| big.contains(*c)));
        prop_assert!(big.contains(0));
    }

    #[test]
    fn bohr_dilates_are_nested(n in 5u64..200, seed in any::<u64>(), r1 in 0.01f64..1.0, r2 in 0.01f64..1.0) {
        let g = FiniteAbelianGroup::cyclic(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(1..=3usize);
        let pairs: Vec<(usize, f64)> = (0..k)
            .map(|_| (rng.gen_range(1..g.order()), rng.gen_range(0.05..2.0)))
            .collect();
        let b = BohrSet::from_indexed(&g, pairs).unwrap();
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let (bl, bh) = (b.dilate(lo).unwrap(), b.dilate(hi).unwrap());
        prop_assert!(bl.elements().is_subset_of(bh.elements()));
        prop_assert!(bh.elements().is_subset_of(b.elements()));
        prop_assert!(b.contains(0));
        prop_assert!(bl.elements().negate() == *bl.elements());
    }
}
