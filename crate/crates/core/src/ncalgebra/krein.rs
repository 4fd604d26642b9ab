//! The Krein space over K spanned by lattice basis vectors e_{λ,±} with the
//! Galois-twisted pairing (v, w) = Σ c(a_λ)·b_λ, the involution κ given by
//! coefficient conjugation, the unit-twisted shift operators R^ϖ_λ, and the
//! operators D_K, T_ε, J, U_ε that resolve the infinite spectral
//! multiplicity of the Lorentzian Dirac factor. All identities here are
//! checked in exact field arithmetic; sites are arbitrary-precision lattice
//! points so the checks stay exact along whole unit orbits.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::lattice::{act, reduce, LatticePoint};
use crate::ncalgebra::cocycle::ArithmeticCocycle;
use crate::quadfield::{FieldElement, UnitSystem};

/// Spinor component of a basis vector e_{λ,±}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Spin {
    Plus,
    Minus,
}

/// A finitely supported vector Σ a_{λ,s}·e_{λ,s} with coefficients in K.
#[derive(Clone, Debug, PartialEq)]
pub struct KreinVector {
    d: u64,
    coeffs: BTreeMap<(LatticePoint, Spin), FieldElement>,
}

impl KreinVector {
    pub fn zero(d: u64) -> Self {
        Self { d, coeffs: BTreeMap::new() }
    }

    pub fn basis(d: u64, site: impl Into<LatticePoint>, spin: Spin) -> Self {
        let mut v = Self::zero(d);
        v.insert_add(site.into(), spin, FieldElement::one(d));
        v
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = (&(LatticePoint, Spin), &FieldElement)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, site: &LatticePoint, spin: Spin) -> FieldElement {
        self.coeffs
            .get(&(site.clone(), spin))
            .cloned()
            .unwrap_or_else(|| FieldElement::zero(self.d))
    }

    pub fn insert_add(&mut self, site: LatticePoint, spin: Spin, c: FieldElement) {
        assert_eq!(c.d(), self.d);
        let key = (site, spin);
        let v = match self.coeffs.remove(&key) {
            Some(old) => old.add(&c),
            None => c,
        };
        if !v.is_zero() {
            self.coeffs.insert(key, v);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for ((site, spin), c) in &other.coeffs {
            out.insert_add(site.clone(), *spin, c.clone());
        }
        out
    }

    pub fn scale(&self, c: &FieldElement) -> Self {
        let mut out = Self::zero(self.d);
        for ((site, spin), v) in &self.coeffs {
            out.insert_add(site.clone(), *spin, v.mul(c));
        }
        out
    }

    /// κ: coefficient-wise Galois conjugation.
    pub fn kappa(&self) -> Self {
        let mut out = Self::zero(self.d);
        for ((site, spin), v) in &self.coeffs {
            out.insert_add(site.clone(), *spin, v.conj());
        }
        out
    }
}

impl From<(i64, i64)> for LatticePoint {
    fn from(p: (i64, i64)) -> Self {
        LatticePoint::new(p.0, p.1)
    }
}

/// The Lorentzian pairing (v, w) = Σ c(a_{λ,s})·b_{λ,s} ∈ K: conjugate
/// linear in the first slot, linear in the second.
pub fn krein_pairing(v: &KreinVector, w: &KreinVector) -> FieldElement {
    assert_eq!(v.d, w.d);
    let mut acc = FieldElement::zero(v.d);
    for (key, a) in &v.coeffs {
        if let Some(b) = w.coeffs.get(key) {
            acc = acc.add(&a.conj().mul(b));
        }
    }
    acc
}

/// ⟨v, w⟩ = (κv, w), the positive definite inner product.
pub fn inner_product(v: &KreinVector, w: &KreinVector) -> FieldElement {
    krein_pairing(&v.kappa(), w)
}

/// R^ϖ_λ: e_{η,±} ↦ ϖ(η, λ)·e_{λ+η,±}, diagonally on the two components.
pub fn apply_r_varpi(
    cocycle: &ArithmeticCocycle,
    lambda: (i64, i64),
    v: &KreinVector,
) -> KreinVector {
    let mut out = KreinVector::zero(v.d);
    for ((site, spin), c) in &v.coeffs {
        let sn: i64 = (&site.n).try_into().expect("twisted shift site fits i64");
        let sm: i64 = (&site.m).try_into().expect("twisted shift site fits i64");
        let phase = cocycle.eval((sn, sm), lambda);
        out.insert_add(
            LatticePoint::new(sn + lambda.0, sm + lambda.1),
            *spin,
            c.mul(&phase),
        );
    }
    out
}

/// The Lorentzian Dirac factor on the doubled space:
/// D_K e_{λ,+} = c(ℓ_λ)·e_{λ,−} and D_K e_{λ,−} = ℓ_λ·e_{λ,+}
/// with ℓ_λ = n + mθ. Krein-self-adjoint: D_K = c(D_Kᵗ).
pub fn apply_dk(us: &UnitSystem, v: &KreinVector) -> KreinVector {
    let mut out = KreinVector::zero(v.d);
    for ((site, spin), c) in &v.coeffs {
        let ell = site.lambda1(us);
        match spin {
            Spin::Plus => out.insert_add(site.clone(), Spin::Minus, c.mul(&ell.conj())),
            Spin::Minus => out.insert_add(site.clone(), Spin::Plus, c.mul(&ell)),
        }
    }
    out
}

/// Reduction exponent ρ(λ), with ρ(0) = 0 (zero modes are fixed).
pub fn rho_of(us: &UnitSystem, site: &LatticePoint) -> i64 {
    if site.is_zero() {
        return 0;
    }
    let (_, rho) = reduce(us, site).expect("nonzero site");
    rho
}

/// J(λ) = A_ε^{−ρ(λ)}(μ) = A_ε^{−2ρ(λ)}(λ): the reflection through the
/// fundamental domain.
pub fn j_site(us: &UnitSystem, site: &LatticePoint) -> LatticePoint {
    if site.is_zero() {
        return site.clone();
    }
    let rho = rho_of(us, site);
    act(us, site, -2 * rho)
}

/// T_ε e_{λ,+} = ε^{ρ(λ)} e_{λ,+}, T_ε e_{λ,−} = ε^{−ρ(λ)} e_{λ,−};
/// pass `inverse = true` for T_ε† = T_ε⁻¹.
pub fn apply_t_eps(us: &UnitSystem, v: &KreinVector, inverse: bool) -> KreinVector {
    let mut out = KreinVector::zero(v.d);
    for ((site, spin), c) in &v.coeffs {
        let mut rho = rho_of(us, site);
        if inverse {
            rho = -rho;
        }
        let factor = match spin {
            Spin::Plus => us.epsilon_pow(rho),
            Spin::Minus => us.epsilon_pow(-rho),
        };
        out.insert_add(site.clone(), *spin, c.mul(&factor));
    }
    out
}

/// The involution J: e_{λ,±} ↦ e_{J(λ),±}.
pub fn apply_j(us: &UnitSystem, v: &KreinVector) -> KreinVector {
    let mut out = KreinVector::zero(v.d);
    for ((site, spin), c) in &v.coeffs {
        out.insert_add(j_site(us, site), *spin, c.clone());
    }
    out
}

/// U_ε = T_ε∘J: the Krein isometry resolving the unit-orbit multiplicity.
/// It is an involution, and its Krein adjoint equals itself.
pub fn apply_u_eps(us: &UnitSystem, v: &KreinVector) -> KreinVector {
    apply_t_eps(us, &apply_j(us, v), false)
}

/// U_ε† = J∘T_ε⁻¹ (equal to U_ε as an operator).
pub fn apply_u_eps_dagger(us: &UnitSystem, v: &KreinVector) -> KreinVector {
    apply_j(us, &apply_t_eps(us, v, true))
}

/// Exact check of U_ε†·D_K·U_ε = D_K on the basis vectors at `site`.
pub fn krein_symmetry_holds(us: &UnitSystem, site: &LatticePoint) -> bool {
    for spin in [Spin::Plus, Spin::Minus] {
        let e = KreinVector::basis(us.d(), site.clone(), spin);
        let lhs = apply_u_eps_dagger(us, &apply_dk(us, &apply_u_eps(us, &e)));
        let rhs = apply_dk(us, &e);
        if lhs != rhs {
            return false;
        }
    }
    true
}

/// Dense K-linear operator on an explicit finite basis window (single
/// component; used for adjoint arithmetic checks).
#[derive(Clone, Debug, PartialEq)]
pub struct KMat {
    pub d: u64,
    pub n: usize,
    entries: Vec<FieldElement>,
}

impl KMat {
    pub fn zeros(d: u64, n: usize) -> Self {
        Self { d, n, entries: vec![FieldElement::zero(d); n * n] }
    }

    pub fn get(&self, i: usize, j: usize) -> &FieldElement {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: FieldElement) {
        self.entries[i * self.n + j] = v;
    }

    /// Krein adjoint T† = c(Tᵗ): transpose with Galois-conjugated entries.
    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.d, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn apply(&self, v: &[FieldElement]) -> Vec<FieldElement> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| {
                let mut acc = FieldElement::zero(self.d);
                for (j, vj) in v.iter().enumerate() {
                    if !vj.is_zero() {
                        acc = acc.add(&self.get(i, j).mul(vj));
                    }
                }
                acc
            })
            .collect()
    }
}

/// (x, y) = Σ c(x_i)·y_i on dense vectors.
pub fn dense_pairing(d: u64, x: &[FieldElement], y: &[FieldElement]) -> FieldElement {
    let mut acc = FieldElement::zero(d);
    for (a, b) in x.iter().zip(y) {
        acc = acc.add(&a.conj().mul(b));
    }
    acc
}

fn random_field_element(rng: &mut ChaCha8Rng, d: u64) -> FieldElement {
    FieldElement::new(
        rng.gen_range(-4i64..=4),
        rng.gen_range(-4i64..=4),
        rng.gen_range(1i64..=3),
        d,
    )
    .expect("valid element")
}

/// Verifies (v, T·w) = (T†·v, w) and T† = κ∘Tᵗ∘κ on random vectors, both
/// exactly. Returns false on the first discrepancy.
pub fn krein_adjoint_check(t: &KMat, trials: u32, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dag = t.dagger();
    for _ in 0..trials.max(1) {
        let v: Vec<FieldElement> = (0..t.n).map(|_| random_field_element(&mut rng, t.d)).collect();
        let w: Vec<FieldElement> = (0..t.n).map(|_| random_field_element(&mut rng, t.d)).collect();
        let lhs = dense_pairing(t.d, &v, &t.apply(&w));
        let rhs = dense_pairing(t.d, &dag.apply(&v), &w);
        if lhs != rhs {
            return false;
        }
        // T†v = κ(Tᵗ(κ v))
        let kv: Vec<FieldElement> = v.iter().map(FieldElement::conj).collect();
        let mut t_transpose = KMat::zeros(t.d, t.n);
        for i in 0..t.n {
            for j in 0..t.n {
                t_transpose.set(j, i, t.get(i, j).clone());
            }
        }
        let route: Vec<FieldElement> =
            t_transpose.apply(&kv).iter().map(FieldElement::conj).collect();
        if route != dag.apply(&v) {
            return false;
        }
    }
    true
}

/// Random dense operator for the adjoint suite.
pub fn random_kmat(d: u64, n: usize, seed: u64) -> KMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = KMat::zeros(d, n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, random_field_element(&mut rng, d));
        }
    }
    m
}

/// Random finitely supported Krein vector.
pub fn random_krein_vector(d: u64, seed: u64) -> KreinVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = KreinVector::zero(d);
    for _ in 0..rng.gen_range(1..=5) {
        let site = LatticePoint::new(rng.gen_range(-5i64..=5), rng.gen_range(-5i64..=5));
        let spin = if rng.gen_bool(0.5) { Spin::Plus } else { Spin::Minus };
        v.insert_add(site, spin, random_field_element(&mut rng, d));
    }
    v
}

/// |⟨U e_{λ,±}, |D²| U e_{λ,±}⟩| = (ε^{2ρ} + ε^{−2ρ})·|N(λ)| as an exact
/// rational: the squared magnitude of the resolved mode.
pub fn resolved_mode_weight(us: &UnitSystem, site: &LatticePoint) -> Result<dashu::rational::RBig> {
    let rho = rho_of(us, site);
    let t = us.unit_trace(2 * rho.unsigned_abs());
    let n = crate::lattice::abs_rbig(&site.norm(us));
    Ok(dashu::rational::RBig::from(t) * n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(n: i64, m: i64) -> LatticePoint {
        LatticePoint::new(n, m)
    }

    #[test]
    fn basis_vectors_are_orthonormal() {
        let e = KreinVector::basis(5, (2, -1), Spin::Plus);
        assert!(krein_pairing(&e, &e).is_one());
        let f = KreinVector::basis(5, (2, -1), Spin::Minus);
        assert!(krein_pairing(&e, &f).is_zero());
    }

    #[test]
    fn pairing_first_slot_conjugate_linear() {
        let d = 5;
        let a = FieldElement::new(1, 1, 2, d).unwrap();
        let e = KreinVector::basis(d, (0, 0), Spin::Plus);
        let v = e.scale(&a);
        assert_eq!(krein_pairing(&v, &e), a.conj());
        assert_eq!(krein_pairing(&e, &v), a);
    }

    #[test]
    fn kappa_compatibility() {
        // (κv, w) = c((v, κw)) exactly
        for seed in 0..20u64 {
            let v = random_krein_vector(5, seed);
            let w = random_krein_vector(5, seed + 1000);
            let lhs = krein_pairing(&v.kappa(), &w);
            let rhs = krein_pairing(&v, &w.kappa()).conj();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn inner_product_totally_positive() {
        for seed in 0..50u64 {
            let v = random_krein_vector(13, seed);
            if v.is_zero() {
                continue;
            }
            let q = inner_product(&v, &v);
            assert!(q.is_totally_positive(), "seed {seed}: ⟨v,v⟩ = {q:?}");
        }
    }

    #[test]
    fn r_varpi_is_krein_isometry() {
        let us = UnitSystem::new(5).unwrap();
        let cocycle = ArithmeticCocycle::new(us.epsilon().clone()).unwrap();
        for seed in 0..20u64 {
            let v = random_krein_vector(5, seed);
            let rv = apply_r_varpi(&cocycle, (3, -2), &v);
            assert_eq!(krein_pairing(&rv, &rv), krein_pairing(&v, &v));
        }
    }

    #[test]
    fn dk_is_krein_self_adjoint_on_vectors() {
        let us = UnitSystem::new(5).unwrap();
        for seed in 0..20u64 {
            let v = random_krein_vector(5, seed);
            let w = random_krein_vector(5, seed + 7777);
            let lhs = krein_pairing(&v, &apply_dk(&us, &w));
            let rhs = krein_pairing(&apply_dk(&us, &v), &w);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn u_eps_is_involution_and_isometry() {
        let us = UnitSystem::new(5).unwrap();
        for seed in 0..10u64 {
            let v = random_krein_vector(5, seed);
            let uv = apply_u_eps(&us, &v);
            assert_eq!(apply_u_eps(&us, &uv), v);
            assert_eq!(krein_pairing(&uv, &uv), krein_pairing(&v, &v));
            assert_eq!(apply_u_eps_dagger(&us, &v), uv);
        }
    }

    #[test]
    fn krein_symmetry_of_dirac() {
        let us = UnitSystem::new(5).unwrap();
        for site in [pt(1, 0), pt(0, 1), pt(5, 3), pt(-7, 2), pt(0, 0)] {
            assert!(krein_symmetry_holds(&us, &site), "site {site:?}");
        }
    }

    #[test]
    fn krein_symmetry_far_along_orbit() {
        // sites with huge coordinates (deep in a unit orbit) still check out
        let us = UnitSystem::new(5).unwrap();
        let far = act(&us, &pt(1, 0), 40);
        assert!(krein_symmetry_holds(&us, &far));
    }

    #[test]
    fn adjoint_check_random_matrices() {
        for seed in 0..5u64 {
            let t = random_kmat(5, 4, seed);
            assert!(krein_adjoint_check(&t, 10, seed + 1));
        }
    }

    #[test]
    fn j_preserves_norm_and_flips_rho() {
        let us = UnitSystem::new(2).unwrap();
        for site in [pt(3, 1), pt(1, 4), pt(-2, 5)] {
            let j = j_site(&us, &site);
            assert_eq!(site.norm(&us), j.norm(&us));
            assert_eq!(rho_of(&us, &j), -rho_of(&us, &site));
        }
    }
}
