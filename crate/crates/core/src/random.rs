//! Seeded fixture generation: random states, Hermitian matrices, density
//! operators and orthonormal families.
//!
//! Everything takes an explicit RNG so that callers (CLI trials, tests) stay
//! reproducible; no global RNG state is used anywhere in the crate.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

use crate::hilbert::{DensityOperator, Operator, StateVector};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_complex_vector(rng: &mut impl Rng, len: usize) -> Array1<Complex64> {
    Array1::from_iter((0..len).map(|_| random_complex(rng)))
}

/// Normalised random vector with the given factor dims.
pub fn random_state_vector(rng: &mut impl Rng, dims: &[usize]) -> StateVector {
    let len = dims.iter().product();
    loop {
        let v = StateVector::new(dims.to_vec(), random_complex_vector(rng, len))
            .expect("dims/length consistent by construction");
        if let Ok(n) = v.normalized() {
            return n;
        }
    }
}

/// Random Hermitian matrix `(G + G†)/2` with entries of order one.
pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> Array2<Complex64> {
    let g = Array2::from_shape_fn((n, n), |_| random_complex(rng));
    let adj = g.t().mapv(|z| z.conj());
    (g + adj).mapv(|z| z * 0.5)
}

/// Random unitary from Gram-Schmidt on random columns.
pub fn random_unitary(rng: &mut impl Rng, dims: &[usize]) -> Operator {
    let n: usize = dims.iter().product();
    let columns = random_orthonormal_set(rng, n, n);
    let mut entries = Array2::<Complex64>::zeros((n, n));
    for (j, v) in columns.iter().enumerate() {
        for i in 0..n {
            entries[(i, j)] = v.amplitudes()[i];
        }
    }
    Operator::square(dims.to_vec(), entries).expect("square by construction")
}

/// Random orthonormal family of `count <= dim` vectors (modified
/// Gram-Schmidt with one re-orthogonalisation pass).
pub fn random_orthonormal_set(rng: &mut impl Rng, dim: usize, count: usize) -> Vec<StateVector> {
    assert!(count <= dim, "cannot fit {count} orthonormal vectors in dim {dim}");
    let mut family: Vec<Array1<Complex64>> = Vec::with_capacity(count);
    while family.len() < count {
        let mut v = random_complex_vector(rng, dim);
        for _ in 0..2 {
            for b in &family {
                let overlap: Complex64 = b.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
                v = v - b.mapv(|z| z * overlap);
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            family.push(v.mapv(|z| z / norm));
        }
    }
    family
        .into_iter()
        .map(|v| StateVector::new(vec![dim], v).expect("length matches dim"))
        .collect()
}

/// Random density operator as a convex mixture of `rank` random pure states.
pub fn random_density(rng: &mut impl Rng, dims: &[usize], rank: usize) -> DensityOperator {
    let n: usize = dims.iter().product();
    let mut weights: Vec<f64> = (0..rank.max(1)).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let mut entries = Array2::<Complex64>::zeros((n, n));
    for w in weights {
        let v = random_state_vector(rng, dims);
        entries = entries + v.outer().mapv(|z| z * w);
    }
    DensityOperator::trusted(dims.to_vec(), entries).expect("convex mixture of pure states")
}
