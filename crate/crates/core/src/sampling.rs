//! Seeded random states, unitaries, channels and measurements.
//!
//! Every generator takes the RNG explicitly; `seeded_rng(seed, stream)` gives
//! independent reproducible streams for parallel work.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use crate::channels::{CpMap, KrausChannel};
use crate::measure::Measurement;
use crate::qmath::{eig_hermitian, ComplexMatrix, DensityOperator, UnitaryOperator};

/// ChaCha8 generator on an independent stream of `seed`.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = ginibre(rng, dim, dim);
    (&g + &g.adjoint()).scale(0.5)
}

/// Haar-distributed unitary (QR of a Ginibre matrix with the phase correction).
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> UnitaryOperator {
    let g = ginibre(rng, dim, dim);
    let mut q: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut v = g.column(j);
        for u in &q {
            let proj: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= proj * ui;
            }
        }
        // second pass for numerical orthogonality
        for u in &q {
            let proj: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= proj * ui;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        q.push(v.into_iter().map(|z| z / norm).collect());
    }
    UnitaryOperator::from_matrix_unchecked(ComplexMatrix::from_fn(dim, dim, |i, j| q[j][i]))
}

pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..dim).map(|_| complex_normal(rng)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// `G G† / Tr` with `G` of shape `dim × rank`; `rank = dim` gives the Hilbert–Schmidt measure.
pub fn random_density_with_rank<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> DensityOperator {
    let g = ginibre(rng, dim, rank.max(1));
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    DensityOperator::from_matrix_unchecked(m.scale(1.0 / tr))
}

pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityOperator {
    random_density_with_rank(rng, dim, dim)
}

/// Mixture of Hilbert–Schmidt, low-rank and pure samples, for property sweeps.
pub fn random_density_varied<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityOperator {
    let rank = rng.random_range(1..=dim);
    random_density_with_rank(rng, dim, rank)
}

/// Stacks Ginibre blocks and orthonormalises: `K_k = G_k (Σ G†G)^{-1/2}`.
fn random_tp_kraus<R: Rng + ?Sized>(rng: &mut R, dim_in: usize, dim_out: usize, count: usize) -> Vec<ComplexMatrix> {
    let blocks: Vec<ComplexMatrix> = (0..count).map(|_| ginibre(rng, dim_out, dim_in)).collect();
    let mut s = ComplexMatrix::zeros(dim_in, dim_in);
    for g in &blocks {
        s = &s + &(&g.adjoint() * g);
    }
    let inv_sqrt = eig_hermitian(&s)
        .expect("Gram matrix is Hermitian")
        .map_values(|l| 1.0 / l.sqrt());
    blocks.iter().map(|g| g * &inv_sqrt).collect()
}

/// Random CPTP map with `kraus_rank` Kraus operators.
pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, dim: usize, kraus_rank: usize) -> KrausChannel {
    KrausChannel::new(random_tp_kraus(rng, dim, dim, kraus_rank.max(1))).expect("orthonormalised Kraus set is TP")
}

/// `Σ p_i U_i ρ U_i†` with Haar unitaries and Dirichlet-like weights.
pub fn random_mixed_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize, terms: usize) -> (Vec<UnitaryOperator>, Vec<f64>) {
    let unitaries: Vec<UnitaryOperator> = (0..terms).map(|_| haar_unitary(rng, dim)).collect();
    let raw: Vec<f64> = (0..terms).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let total: f64 = raw.iter().sum();
    (unitaries, raw.into_iter().map(|x| x / total).collect())
}

pub fn random_mixed_unitary_channel<R: Rng + ?Sized>(rng: &mut R, dim: usize, terms: usize) -> KrausChannel {
    let (us, ps) = random_mixed_unitary(rng, dim, terms);
    KrausChannel::mixed_unitary(&us, &ps).expect("valid mixture")
}

/// Random measurement with `outcomes` outcomes, each with `kraus_per_outcome` operators.
pub fn random_measurement<R: Rng + ?Sized>(rng: &mut R, dim: usize, outcomes: usize, kraus_per_outcome: usize) -> Measurement {
    let k = kraus_per_outcome.max(1);
    let all = random_tp_kraus(rng, dim, dim, outcomes * k);
    let fragments = all
        .chunks(k)
        .map(|chunk| CpMap::new(chunk.to_vec()).expect("consistent shapes"))
        .collect();
    Measurement::new(fragments).expect("orthonormalised Kraus set is complete")
}
