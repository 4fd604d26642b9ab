//! Finite-truncation verification of the Fourier-mode representation of the
//! twisted lattice algebra: the product rule
//! π(R_λ)π(R_η) = σ(λ,η)·π(R_{λ+η}) on basis modes E_ζ with the action
//! π(R_λ)E_ζ = exp(πi·u·λ∧ζ)·E_{λ+ζ}, and the commutator identity of the
//! mode Dirac operator against the generators.
//!
//! The identities are exact on the infinite lattice; on a truncation box
//! they are asserted only on basis vectors whose translates stay inside the
//! box, since boundary rows are truncation artifacts. The wedge
//! normalization u is an explicit parameter (conventions in the literature
//! differ by factors of 2 and of θ'−θ); for lattice coordinates the natural
//! default is ι₁(θ), the value induced by u_Λ = θ(θ'−θ)⁻¹ on (n,m) indices.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ncalgebra::cocycle::{wedge, FluxValue, TorusCocycle};
use crate::quadfield::UnitSystem;

/// π(R_λ) on the mode box |n|, |m| ≤ R, stored as a scaled shift: the
/// matrix with entries M[λ+ζ, ζ] = phase(λ, ζ) and zeros elsewhere.
#[derive(Clone, Debug)]
pub struct ShiftOp {
    pub shift: (i64, i64),
    pub radius: i64,
    /// phase at each source mode ζ in box order, 0 where the target leaves
    /// the box (truncated row).
    pub column_phase: Vec<Complex64>,
}

pub fn box_modes(radius: i64) -> Vec<(i64, i64)> {
    let mut v = Vec::new();
    for n in -radius..=radius {
        for m in -radius..=radius {
            v.push((n, m));
        }
    }
    v
}

fn in_box(p: (i64, i64), radius: i64) -> bool {
    p.0.abs() <= radius && p.1.abs() <= radius
}

/// Builds the truncated matrix of π(R_λ) for the cocycle normalization u:
/// π(R_λ) E_ζ = exp(πi·u·(λ∧ζ))·E_{λ+ζ}.
pub fn generator_matrix(flux: FluxValue, lambda: (i64, i64), radius: i64) -> ShiftOp {
    let modes = box_modes(radius);
    let mut column_phase = vec![Complex64::new(0.0, 0.0); modes.len()];
    for (idx, &zeta) in modes.iter().enumerate() {
        let target = (lambda.0 + zeta.0, lambda.1 + zeta.1);
        if in_box(target, radius) {
            column_phase[idx] = flux.half_turn_phase(wedge(lambda, zeta));
        }
    }
    ShiftOp { shift: lambda, radius, column_phase }
}

impl ShiftOp {
    /// Operator product self∘other (apply `other` first), still a scaled
    /// shift. Columns whose intermediate or final target leaves the box get
    /// phase 0.
    pub fn compose(&self, other: &ShiftOp) -> ShiftOp {
        assert_eq!(self.radius, other.radius);
        let radius = self.radius;
        let modes = box_modes(radius);
        let shift = (self.shift.0 + other.shift.0, self.shift.1 + other.shift.1);
        let mut column_phase = vec![Complex64::new(0.0, 0.0); modes.len()];
        for (idx, &zeta) in modes.iter().enumerate() {
            let mid = (other.shift.0 + zeta.0, other.shift.1 + zeta.1);
            if !in_box(mid, radius) {
                continue;
            }
            let fin = (self.shift.0 + mid.0, self.shift.1 + mid.1);
            if !in_box(fin, radius) {
                continue;
            }
            let mid_idx = ((mid.0 + radius) * (2 * radius + 1) + (mid.1 + radius)) as usize;
            column_phase[idx] = other.column_phase[idx] * self.column_phase[mid_idx];
        }
        ShiftOp { shift, radius, column_phase }
    }
}

/// Max deviation |π(R_λ)π(R_η) − σ(λ,η)π(R_{λ+η})| over interior modes
/// (those whose image under both factors stays inside the box), for
/// `trials` random pairs with |entries| ≤ entry_bound.
pub fn rep_product_check(
    flux: FluxValue,
    radius: i64,
    entry_bound: i64,
    trials: u32,
    seed: u64,
) -> f64 {
    let sigma = TorusCocycle::new(flux);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let lambda = (
            rng.gen_range(-entry_bound..=entry_bound),
            rng.gen_range(-entry_bound..=entry_bound),
        );
        let eta = (
            rng.gen_range(-entry_bound..=entry_bound),
            rng.gen_range(-entry_bound..=entry_bound),
        );
        worst = worst.max(rep_product_deviation(&sigma, lambda, eta, radius));
    }
    worst
}

/// Deviation for one generator pair.
pub fn rep_product_deviation(
    sigma: &TorusCocycle,
    lambda: (i64, i64),
    eta: (i64, i64),
    radius: i64,
) -> f64 {
    let flux = sigma.flux;
    let m_lambda = generator_matrix(flux, lambda, radius);
    let m_eta = generator_matrix(flux, eta, radius);
    let m_sum = generator_matrix(flux, (lambda.0 + eta.0, lambda.1 + eta.1), radius);
    let product = m_lambda.compose(&m_eta);
    let phase = sigma.eval(lambda, eta);

    let modes = box_modes(radius);
    let mut worst: f64 = 0.0;
    for (idx, &zeta) in modes.iter().enumerate() {
        let mid = (eta.0 + zeta.0, eta.1 + zeta.1);
        let fin = (mid.0 + lambda.0, mid.1 + lambda.1);
        if !in_box(mid, radius) || !in_box(fin, radius) {
            continue; // boundary artifact, not part of the identity
        }
        let lhs = product.column_phase[idx];
        let rhs = phase * m_sum.column_phase[idx];
        worst = worst.max((lhs - rhs).norm());
    }
    worst
}

/// The spinor-block value of the mode operator at λ: the 2×2 matrix
/// [[0, λ₂ − iλ₁], [λ₂ + iλ₁, 0]] whose square is (λ₁² + λ₂²)·Id.
pub fn mode_block(l1: f64, l2: f64) -> [[Complex64; 2]; 2] {
    let zero = Complex64::new(0.0, 0.0);
    [
        [zero, Complex64::new(l2, -l1)],
        [Complex64::new(l2, l1), zero],
    ]
}

/// Max deviation of the commutator identity
/// [D, π(R_η)] E_ζ = phase(η,ζ)·(block(η+ζ) − block(ζ))·E_{η+ζ}
///                 = phase(η,ζ)·block(η)·E_{η+ζ}
/// over interior modes, for `trials` random generators. The left side is
/// assembled from independently computed mode values at ζ and η+ζ.
pub fn commutator_check(
    us: &UnitSystem,
    flux: FluxValue,
    radius: i64,
    entry_bound: i64,
    trials: u32,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = box_modes(radius);
    let lam = |p: (i64, i64)| {
        let pt = crate::lattice::LatticePoint::new(p.0, p.1);
        pt.to_f64_pair(us)
    };
    let mut worst: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let eta = (
            rng.gen_range(-entry_bound..=entry_bound),
            rng.gen_range(-entry_bound..=entry_bound),
        );
        let (e1, e2) = lam(eta);
        let rhs_block = mode_block(e1, e2);
        for &zeta in &modes {
            let target = (eta.0 + zeta.0, eta.1 + zeta.1);
            if !in_box(target, radius) {
                continue;
            }
            let phase = flux.half_turn_phase(wedge(eta, zeta));
            let (z1, z2) = lam(zeta);
            let (t1, t2) = lam(target);
            let b_z = mode_block(z1, z2);
            let b_t = mode_block(t1, t2);
            for i in 0..2 {
                for j in 0..2 {
                    let lhs = phase * (b_t[i][j] - b_z[i][j]);
                    let rhs = phase * rhs_block[i][j];
                    worst = worst.max((lhs - rhs).norm());
                }
            }
        }
    }
    worst
}

/// The lattice-coordinate flux induced by the wedge normalization
/// u_Λ = θ(θ'−θ)⁻¹ of the trace range: on (n,m) indices the same cocycle is
/// exp(πi·ι₁(θ)·(n,m)∧(k,r)).
pub fn induced_lattice_flux(us: &UnitSystem) -> f64 {
    us.theta_f64()
}
