//! Permutation symmetrizers for bosons and fermions, the symmetrised
//! two-particle state and observable, and the status-changing injection of a
//! single particle into an N-particle (anti)symmetric state.

use itertools::Itertools;
use ndarray::Array2;
use num_complex::Complex64;

use crate::grid::{KernelOperator, WaveFunction};
use crate::hilbert::{Operator, StateVector};
use crate::{Error, Result, TOL_OPERATOR};

/// Largest dense dimension a symmetrizer construction may produce.
pub const DIMENSION_BUDGET: usize = 4096;

/// Exchange statistics of a particle species.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistics {
    Bose,
    Fermi,
}

impl Statistics {
    /// Sign attached to a transposition: +1 for bosons, -1 for fermions.
    pub fn exchange_sign(self) -> f64 {
        match self {
            Statistics::Bose => 1.0,
            Statistics::Fermi => -1.0,
        }
    }

    fn permutation_weight(self, perm: &[usize]) -> f64 {
        match self {
            Statistics::Bose => 1.0,
            Statistics::Fermi => permutation_sign(perm),
        }
    }
}

/// Parity of a permutation given in one-line notation.
fn permutation_sign(perm: &[usize]) -> f64 {
    let mut inversions = 0usize;
    for i in 0..perm.len() {
        for j in (i + 1)..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// The unitary that moves tensor factor `a` to position `perm[a]` on a space
/// of `perm.len()` factors of dimension `d` each.
pub fn permutation_operator(perm: &[usize], d: usize) -> Operator {
    let n = perm.len();
    let total = d.pow(n as u32);
    let mut entries = Array2::<Complex64>::zeros((total, total));
    let mut index = vec![0usize; n];
    for col in 0..total {
        let mut image = vec![0usize; n];
        for a in 0..n {
            image[perm[a]] = index[a];
        }
        let row = image.iter().fold(0usize, |acc, &i| acc * d + i);
        entries[(row, col)] = Complex64::ONE;
        for pos in (0..n).rev() {
            index[pos] += 1;
            if index[pos] < d {
                break;
            }
            index[pos] = 0;
        }
    }
    Operator::square(vec![d; n], entries).expect("square by construction")
}

/// The projector onto the (anti)symmetric sector of `d^n`.
#[derive(Debug, Clone)]
pub struct Symmetrizer {
    n_particles: usize,
    one_particle_dim: usize,
    stats: Statistics,
    matrix: Operator,
}

impl Symmetrizer {
    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn one_particle_dim(&self) -> usize {
        self.one_particle_dim
    }

    pub fn stats(&self) -> Statistics {
        self.stats
    }

    pub fn matrix(&self) -> &Operator {
        &self.matrix
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        self.matrix.apply(v)
    }

    /// `||P v - v||`: zero iff `v` already lies in the sector.
    pub fn sector_residual(&self, v: &StateVector) -> Result<f64> {
        let projected = self.matrix.apply(v)?;
        let diff = crate::hilbert::linear_combination(&[
            (Complex64::ONE, &projected),
            (-Complex64::ONE, v),
        ])?;
        Ok(diff.norm())
    }
}

/// `P = (1/N!) sum_pi sgn(pi) U_pi` over all `N!` factor permutations, with
/// `sgn = 1` for bosons.
pub fn build_symmetrizer(n: usize, d: usize, stats: Statistics) -> Result<Symmetrizer> {
    if n < 1 || d < 2 {
        return Err(Error::InvalidModel {
            reason: format!("symmetrizer needs n >= 1 particles and d >= 2, got n={n}, d={d}"),
        });
    }
    let required = d
        .checked_pow(n as u32)
        .filter(|&t| t <= DIMENSION_BUDGET)
        .ok_or(Error::SizeBudget {
            required: d.saturating_pow(n as u32),
            budget: DIMENSION_BUDGET,
        })?;
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    let mut entries = Array2::<Complex64>::zeros((required, required));
    for perm in (0..n).permutations(n) {
        let weight = stats.permutation_weight(&perm) / factorial;
        let op = permutation_operator(&perm, d);
        entries = entries + op.entries().mapv(|z| z * weight);
    }
    Ok(Symmetrizer {
        n_particles: n,
        one_particle_dim: d,
        stats,
        matrix: Operator::square(vec![d; n], entries)?,
    })
}

/// The normalised two-particle symmetrised state
/// `(psi x phi +/- phi x psi) / norm` as Euclidean amplitudes.
///
/// For orthogonal inputs this reproduces the `2^{-1/2}` two-term form
/// exactly; otherwise the normalisation constant is recomputed. Fermions
/// with parallel inputs annihilate and yield the degenerate-vector error.
pub fn symmetrize_two_particle_state(
    psi: &WaveFunction,
    phi: &WaveFunction,
    stats: Statistics,
) -> Result<StateVector> {
    if psi.space() != phi.space() {
        return Err(Error::DimensionMismatch {
            context: "two-particle state needs both wavefunctions on the same grid".into(),
        });
    }
    let v = psi.to_state_vector();
    let w = phi.to_state_vector();
    let direct = v.tensor(&w);
    let exchanged = w.tensor(&v);
    let sign = Complex64::new(stats.exchange_sign(), 0.0);
    crate::hilbert::linear_combination(&[(Complex64::ONE, &direct), (sign, &exchanged)])?
        .normalized()
}

/// The two-particle observable `a x I + I x a` induced by registering the
/// one-particle kernel `a` on a pair of identical particles. The delta
/// kernels of the exact expression become plain identity matrices here; the
/// quadrature weight they carry is applied by the expectation routines in
/// [`crate::separability`].
pub fn symmetrize_two_particle_observable(a: &KernelOperator) -> Result<Operator> {
    let residual = a.hermiticity_residual();
    if residual > TOL_OPERATOR {
        return Err(Error::NotHermitian { residual });
    }
    let n = a.space().len();
    let single = Operator::square(vec![n], a.entries().clone())?;
    let identity = Operator::identity(vec![n]);
    let left = single.tensor(&identity);
    let right = identity.tensor(&single);
    Operator::square(
        vec![n, n],
        left.entries() + right.entries(),
    )
}

/// Absorbs `psi` into the N-particle (anti)symmetric state `big`:
/// `normalize(P_{N+1} (psi x big))`.
///
/// `big` must already lie in the sector for the given statistics. The map is
/// non-invertible (distinct inputs can merge) and non-linear: any positive
/// rescaling of `psi` leaves the output unchanged. Fermionic exclusion
/// (psi already occupied in `big`) surfaces as the degenerate-vector error.
pub fn inject(psi: &StateVector, big: &StateVector, stats: Statistics) -> Result<StateVector> {
    let d = psi.total_dim();
    if big.dims().iter().any(|&f| f != d) {
        return Err(Error::DimensionMismatch {
            context: format!(
                "injection of dim {} into factors {:?}",
                d,
                big.dims()
            ),
        });
    }
    let n = big.dims().len();
    let sector = build_symmetrizer(n, d, stats)?;
    let residual = sector.sector_residual(big)?;
    if residual > TOL_OPERATOR {
        return Err(Error::InvalidModel {
            reason: format!(
                "injection target is not in the {stats:?} sector: residual {residual:.3e}"
            ),
        });
    }
    let extended = build_symmetrizer(n + 1, d, stats)?;
    extended.apply(&psi.tensor(big))?.normalized()
}
