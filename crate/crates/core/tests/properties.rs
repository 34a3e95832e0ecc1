//! Property-based invariants over randomly generated states, kernels and
//! regions.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use proptest::prelude::*;
use sepsim_core::grid::{GridSpace, KernelOperator, Region, WaveFunction};
use sepsim_core::hilbert::{max_abs, DensityOperator, StateVector};
use sepsim_core::identicals::{build_symmetrizer, Statistics};

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
        .prop_map(|pairs| pairs.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
}

fn state(dim: usize) -> impl Strategy<Value = StateVector> {
    complex_vec(dim).prop_filter_map("norm too small", move |amps| {
        StateVector::new(vec![dim], Array1::from_vec(amps))
            .ok()
            .and_then(|v| v.normalized().ok())
    })
}

fn hermitian(dim: usize) -> impl Strategy<Value = Array2<Complex64>> {
    complex_vec(dim * dim).prop_map(move |entries| {
        let g = Array2::from_shape_vec((dim, dim), entries).unwrap();
        let adj = g.t().mapv(|z| z.conj());
        (g + adj).mapv(|z| z * 0.5)
    })
}

fn density(dim: usize) -> impl Strategy<Value = DensityOperator> {
    (
        prop::collection::vec(complex_vec(dim), 2),
        prop::collection::vec(0.1f64..1.0, 2),
    )
        .prop_filter_map("degenerate pure states", move |(vecs, weights)| {
            let total: f64 = weights.iter().sum();
            let mut entries = Array2::<Complex64>::zeros((dim, dim));
            for (raw, w) in vecs.into_iter().zip(weights) {
                let v = StateVector::new(vec![dim], Array1::from_vec(raw))
                    .ok()?
                    .normalized()
                    .ok()?;
                entries = entries + v.outer().mapv(|z| z * (w / total));
            }
            DensityOperator::new(vec![dim], entries).ok()
        })
}

/// Membership levels: 0 = outside both regions, 1 = in the large region
/// only, 2 = in both. Guarantees `small` is a subset of `large`.
fn nested_regions(n: usize) -> impl Strategy<Value = (Region, Region)> {
    prop::collection::vec(0u8..3, n).prop_map(|levels| {
        let small = Region::new(
            levels
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == 2)
                .map(|(i, _)| i),
        );
        let large = Region::new(
            levels
                .iter()
                .enumerate()
                .filter(|(_, &l)| l >= 1)
                .map(|(i, _)| i),
        );
        (small, large)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tensor_is_associative((a, b, c) in (state(2), state(3), state(2))) {
        let left = a.tensor(&b).tensor(&c);
        let right = a.tensor(&b.tensor(&c));
        prop_assert_eq!(left.dims(), right.dims());
        for (x, y) in left.amplitudes().iter().zip(right.amplitudes()) {
            prop_assert!((x - y).norm() <= 1e-12);
        }
    }

    #[test]
    fn partial_trace_preserves_trace(rho in density(6)) {
        let rho = rho.reshaped(vec![2, 3]).unwrap();
        for keep in [vec![0usize], vec![1], vec![0, 1]] {
            let reduced = rho.partial_trace(&keep).unwrap();
            let trace = reduced.trace();
            prop_assert!((trace.re - 1.0).abs() <= 1e-10);
            prop_assert!(trace.im.abs() <= 1e-10);
        }
    }

    #[test]
    fn normalization_is_idempotent(v in state(5)) {
        prop_assert!(v.is_normalized());
        let twice = v.normalized().unwrap();
        for (x, y) in twice.amplitudes().iter().zip(v.amplitudes()) {
            prop_assert!((x - y).norm() <= 1e-12);
        }
    }

    #[test]
    fn localize_is_idempotent(entries in hermitian(6), (small, _) in nested_regions(6)) {
        let space = GridSpace::new(6, 0.5).unwrap();
        let a = KernelOperator::new(space, entries).unwrap();
        let once = a.localize(&small);
        let twice = once.localize(&small);
        prop_assert_eq!(once.entries(), twice.entries());
        prop_assert!(once.is_d_local(&small));
    }

    #[test]
    fn locality_is_monotone(entries in hermitian(6), (small, large) in nested_regions(6)) {
        let space = GridSpace::new(6, 1.0).unwrap();
        let a = KernelOperator::new(space, entries).unwrap().localize(&small);
        if a.is_d_local(&small) {
            prop_assert!(a.is_d_local(&large));
        }
    }

    #[test]
    fn hermitian_expectation_is_real(entries in hermitian(5), amps in complex_vec(5)) {
        let space = GridSpace::new(5, 0.8).unwrap();
        let a = KernelOperator::new(space, entries).unwrap();
        let psi = match WaveFunction::normalized(space, Array1::from_vec(amps)) {
            Ok(psi) => psi,
            Err(_) => return Ok(()),
        };
        // Complex-valued double sum; the library discards the imaginary part
        // only after it is negligible.
        let mut value = Complex64::ZERO;
        for i in 0..5 {
            for j in 0..5 {
                value += a.entries()[(i, j)]
                    * psi.amplitudes()[i].conj()
                    * psi.amplitudes()[j];
            }
        }
        let weighted = value * space.spacing() * space.spacing();
        prop_assert!(weighted.im.abs() <= 1e-10);
        prop_assert!((a.expectation(&psi).unwrap() - weighted.re).abs() <= 1e-12);
    }

    #[test]
    fn symmetrizers_are_hermitian_idempotent_projectors(
        n in 1usize..4,
        d in 2usize..4,
        fermi in any::<bool>(),
    ) {
        let stats = if fermi { Statistics::Fermi } else { Statistics::Bose };
        let p = build_symmetrizer(n, d, stats).unwrap();
        let m = p.matrix();
        prop_assert!(m.hermiticity_residual() <= 1e-10);
        let squared = m.compose(m).unwrap();
        prop_assert!(max_abs(&(squared.entries() - m.entries())) <= 1e-10);
    }

    #[test]
    fn unitary_conjugation_preserves_density_invariants(rho in density(4)) {
        let mut rng = sepsim_core::random::rng_from_seed(2024);
        let u = sepsim_core::random::random_unitary(&mut rng, &[4]);
        let evolved = rho.conjugated_by(&u).unwrap();
        prop_assert!((evolved.trace().re - 1.0).abs() <= 1e-10);
        let herm = max_abs(&(evolved.entries() - &evolved.entries().t().mapv(|z| z.conj())));
        prop_assert!(herm <= 1e-10);
    }
}
