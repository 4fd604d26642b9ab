//! Finitely supported elements of twisted group rings: ℂ(ℤ², σ_θ) (the
//! noncommutative torus), ℂ(ℤ²⋊ℤ, σ̃), and the arithmetic twisted ring
//! K(Λ, ϖ) with exact unit-valued phases.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ncalgebra::cocycle::{ArithmeticCocycle, SolvCocycle, TorusCocycle};
use crate::quadfield::FieldElement;

/// A group-with-cocycle a twisted ring is built over. Implementations carry
/// the cocycle parameters; elements are plain Copy tuples.
pub trait TwistedRing: Clone + PartialEq {
    type Elem: Copy + Ord + std::fmt::Debug;
    type Coeff: Clone + std::fmt::Debug;

    fn identity(&self) -> Self::Elem;
    fn compose(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    fn invert(&self, a: Self::Elem) -> Self::Elem;
    fn cocycle(&self, a: Self::Elem, b: Self::Elem) -> Self::Coeff;

    fn coeff_one(&self) -> Self::Coeff;
    fn coeff_zero(&self) -> Self::Coeff;
    fn coeff_add(x: &Self::Coeff, y: &Self::Coeff) -> Self::Coeff;
    fn coeff_mul(x: &Self::Coeff, y: &Self::Coeff) -> Self::Coeff;
    fn coeff_conj(x: &Self::Coeff) -> Self::Coeff;
    fn coeff_is_zero(x: &Self::Coeff) -> bool;
    fn coeff_dist(x: &Self::Coeff, y: &Self::Coeff) -> f64;
}

/// ℂ(ℤ², σ_θ).
#[derive(Clone, Debug, PartialEq)]
pub struct TorusRing(pub TorusCocycle);

impl TwistedRing for TorusRing {
    type Elem = (i64, i64);
    type Coeff = Complex64;

    fn identity(&self) -> Self::Elem {
        (0, 0)
    }
    fn compose(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem {
        (a.0 + b.0, a.1 + b.1)
    }
    fn invert(&self, a: Self::Elem) -> Self::Elem {
        (-a.0, -a.1)
    }
    fn cocycle(&self, a: Self::Elem, b: Self::Elem) -> Self::Coeff {
        self.0.eval(a, b)
    }
    fn coeff_one(&self) -> Self::Coeff {
        Complex64::new(1.0, 0.0)
    }
    fn coeff_zero(&self) -> Self::Coeff {
        Complex64::new(0.0, 0.0)
    }
    fn coeff_add(x: &Self::Coeff, y: &Self::Coeff) -> Self::Coeff {
        x + y
    }
    fn coeff_mul(x: &Self::Coeff, y: &Self::Coeff) -> Self::Coeff {
        x * y
    }
    fn coeff_conj(x: &Self::Coeff) -> Self::Coeff {
        x.conj()
    }
    fn coeff_is_zero(x: &Self::Coeff) -> bool {
        x.re == 0.0 && x.im == 0.0
    }
    fn coeff_dist(x: &Self::Coeff, y: &Self::Coeff) -> f64 {
        (x - y).norm()
    }
}

/// Element (n, m, k) of ℤ² ⋊_φ ℤ with the product
/// (n,m,k)·(n',m',k') = ((n,m) + (n',m')·φ^k, k + k').
pub type SolvElem = (i64, i64, i64);

/// ℂ(ℤ²⋊ℤ, σ̃).
#[derive(Clone, Debug, PartialEq)]
pub struct SolvRing(pub SolvCocycle);

impl SolvRing {
    fn apply_phi(&self, v: (i64, i64), k: i64) -> (i64, i64) {
        let phi_k = self.0.phi.pow(k);
        let (n, m) = phi_k.act_row(&v.0.into(), &v.1.into());
        (
            (&n).try_into().expect("solv coordinate overflow"),
            (&m).try_into().expect("solv coordinate overflow"),
        )
    }
}

impl TwistedRing for SolvRing {
    type Elem = SolvElem;
    type Coeff = Complex64;

    fn identity(&self) -> Self::Elem {
        (0, 0, 0)
    }
    fn compose(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem {
        let (bn, bm) = self.apply_phi((b.0, b.1), a.2);
        (a.0 + bn, a.1 + bm, a.2 + b.2)
    }
    fn invert(&self, a: Self::Elem) -> Self::Elem {
        let (n, m) = self.apply_phi((-a.0, -a.1), -a.2);
        (n, m, -a.2)
    }
    fn cocycle(&self, a: Self::Elem, b: Self::Elem) -> Self::Coeff {
        self.0.eval(a, b)
    }
    fn coeff_one(&self) -> Self::Coeff {
        Complex64::new(1.0, 0.0)
    }
    fn coeff_zero(&self) -> Self::Coeff {
        Complex64::new(0.0, 0.0)
    }
    fn coeff_add(x: &Self::Coeff, y: &Self::Coeff) -> Self::Coeff {
        x + y
    }
    fn coeff_mul(x: &Self::Coeff, y: &Self::Coeff) -> Self::Coeff {
        x * y
    }
    fn coeff_conj(x: &Self::Coeff) -> Self::Coeff {
        x.conj()
    }
    fn coeff_is_zero(x: &Self::Coeff) -> bool {
        x.re == 0.0 && x.im == 0.0
    }
    fn coeff_dist(x: &Self::Coeff, y: &Self::Coeff) -> f64 {
        (x - y).norm()
    }
}

/// K(Λ, ϖ): coefficients in the quadratic field, phases ω^{λ∧η}, the
/// Galois involution as coefficient conjugation.
#[derive(Clone, Debug, PartialEq)]
pub struct ArithRing(pub ArithmeticCocycle);

impl TwistedRing for ArithRing {
    type Elem = (i64, i64);
    type Coeff = FieldElement;

    fn identity(&self) -> Self::Elem {
        (0, 0)
    }
    fn compose(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem {
        (a.0 + b.0, a.1 + b.1)
    }
    fn invert(&self, a: Self::Elem) -> Self::Elem {
        (-a.0, -a.1)
    }
    fn cocycle(&self, a: Self::Elem, b: Self::Elem) -> Self::Coeff {
        self.0.eval(a, b)
    }
    fn coeff_one(&self) -> Self::Coeff {
        FieldElement::one(self.0.d())
    }
    fn coeff_zero(&self) -> Self::Coeff {
        FieldElement::zero(self.0.d())
    }
    fn coeff_add(x: &Self::Coeff, y: &Self::Coeff) -> Self::Coeff {
        x.add(y)
    }
    fn coeff_mul(x: &Self::Coeff, y: &Self::Coeff) -> Self::Coeff {
        x.mul(y)
    }
    fn coeff_conj(x: &Self::Coeff) -> Self::Coeff {
        x.conj()
    }
    fn coeff_is_zero(x: &Self::Coeff) -> bool {
        x.is_zero()
    }
    fn coeff_dist(x: &Self::Coeff, y: &Self::Coeff) -> f64 {
        if x == y {
            0.0
        } else {
            (x.to_f64_embedding1() - y.to_f64_embedding1()).abs().max(f64::MIN_POSITIVE)
        }
    }
}

/// A finitely supported element Σ a_γ R_γ of a twisted group ring. Zero
/// coefficients are pruned on construction and after every operation; the
/// ring unit is δ at the group identity.
#[derive(Clone, Debug)]
pub struct TwistedElement<R: TwistedRing> {
    ring: R,
    coeffs: BTreeMap<R::Elem, R::Coeff>,
}

impl<R: TwistedRing> TwistedElement<R> {
    pub fn zero(ring: R) -> Self {
        Self { ring, coeffs: BTreeMap::new() }
    }

    pub fn unit(ring: R) -> Self {
        let id = ring.identity();
        Self::delta(ring, id)
    }

    /// The generator R_γ.
    pub fn delta(ring: R, gamma: R::Elem) -> Self {
        let one = ring.coeff_one();
        let mut coeffs = BTreeMap::new();
        coeffs.insert(gamma, one);
        Self { ring, coeffs }
    }

    pub fn from_terms(ring: R, terms: impl IntoIterator<Item = (R::Elem, R::Coeff)>) -> Self {
        let mut out = Self::zero(ring);
        for (g, c) in terms {
            out.insert_add(g, c);
        }
        out
    }

    pub fn ring(&self) -> &R {
        &self.ring
    }

    pub fn support(&self) -> impl Iterator<Item = (&R::Elem, &R::Coeff)> {
        self.coeffs.iter()
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeff(&self, gamma: &R::Elem) -> Option<&R::Coeff> {
        self.coeffs.get(gamma)
    }

    fn insert_add(&mut self, gamma: R::Elem, c: R::Coeff) {
        let entry = match self.coeffs.remove(&gamma) {
            Some(old) => R::coeff_add(&old, &c),
            None => c,
        };
        if !R::coeff_is_zero(&entry) {
            self.coeffs.insert(gamma, entry);
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.ring != other.ring {
            return Err(Error::CocycleMismatch);
        }
        let mut out = self.clone();
        for (g, c) in &other.coeffs {
            out.insert_add(*g, c.clone());
        }
        Ok(out)
    }

    /// Twisted convolution: (x·y)(γ) = Σ_{αβ=γ} x(α) y(β) σ(α, β).
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.ring != other.ring {
            return Err(Error::CocycleMismatch);
        }
        let mut out = Self::zero(self.ring.clone());
        for (ga, ca) in &self.coeffs {
            for (gb, cb) in &other.coeffs {
                let target = self.ring.compose(*ga, *gb);
                let phase = self.ring.cocycle(*ga, *gb);
                let c = R::coeff_mul(&R::coeff_mul(ca, cb), &phase);
                out.insert_add(target, c);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &R::Coeff) -> Self {
        let mut out = Self::zero(self.ring.clone());
        for (g, v) in &self.coeffs {
            out.insert_add(*g, R::coeff_mul(v, c));
        }
        out
    }

    /// The ring involution: star(Σ a_γ R_γ) = Σ conj(a_γ)·conj(σ(γ, γ⁻¹))·R_{γ⁻¹},
    /// so that star(R_γ) is the adjoint of R_γ in the regular representation.
    pub fn star(&self) -> Self {
        let mut out = Self::zero(self.ring.clone());
        for (g, c) in &self.coeffs {
            let ginv = self.ring.invert(*g);
            let norm_phase = self.ring.cocycle(*g, ginv);
            let coeff = R::coeff_conj(&R::coeff_mul(c, &norm_phase));
            out.insert_add(ginv, coeff);
        }
        out
    }

    /// max_γ |x(γ) − y(γ)| in the coefficient metric.
    pub fn distance(&self, other: &Self) -> f64 {
        let zero = self.ring.coeff_zero();
        let mut worst: f64 = 0.0;
        let gammas: std::collections::BTreeSet<R::Elem> = self
            .coeffs
            .keys()
            .chain(other.coeffs.keys())
            .copied()
            .collect();
        for g in gammas {
            let dist = match (self.coeffs.get(&g), other.coeffs.get(&g)) {
                (Some(a), Some(b)) => R::coeff_dist(a, b),
                (Some(a), None) | (None, Some(a)) => R::coeff_dist(a, &zero),
                (None, None) => 0.0,
            };
            worst = worst.max(dist);
        }
        worst
    }

    pub fn equal_exact(&self, other: &Self) -> bool
    where
        R::Coeff: PartialEq,
    {
        self.ring == other.ring && self.coeffs == other.coeffs
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncalgebra::cocycle::FluxValue;
    use crate::quadfield::UnitSystem;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn torus_ring(theta: f64) -> TorusRing {
        TorusRing(TorusCocycle::new(FluxValue::Real(theta)))
    }

    #[test]
    fn uv_commutation_phase() {
        // U = R_(0,1), V = R_(1,0): VU = e^{2πiθ}·UV
        let theta = 0.3819660112501051;
        let ring = torus_ring(theta);
        let u = TwistedElement::delta(ring.clone(), (0, 1));
        let v = TwistedElement::delta(ring.clone(), (1, 0));
        let uv = u.mul(&v).unwrap();
        let vu = v.mul(&u).unwrap();
        let cu = uv.coeff(&(1, 1)).unwrap();
        let cv = vu.coeff(&(1, 1)).unwrap();
        let ratio = cv / cu;
        let want = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * theta);
        assert!((ratio - want).norm() < 1e-14);
    }

    #[test]
    fn unit_is_neutral() {
        let ring = torus_ring(0.123456789);
        let x = TwistedElement::from_terms(
            ring.clone(),
            [
                ((0i64, 1i64), Complex64::new(0.5, -0.25)),
                ((2, -3), Complex64::new(-1.5, 2.0)),
            ],
        );
        let e = TwistedElement::unit(ring);
        let xe = x.mul(&e).unwrap();
        let ex = e.mul(&x).unwrap();
        assert!(x.distance(&xe) < 1e-15);
        assert!(x.distance(&ex) < 1e-15);
    }

    #[test]
    fn cocycle_mismatch_rejected() {
        let x = TwistedElement::unit(torus_ring(0.25));
        let y = TwistedElement::unit(torus_ring(0.75));
        assert!(matches!(x.mul(&y), Err(Error::CocycleMismatch)));
    }

    #[test]
    fn solv_generators_associate() {
        // (R_(1,0,0)·R_(0,1,0))·R_(0,0,1) = R_(1,0,0)·(R_(0,1,0)·R_(0,0,1))
        let us = UnitSystem::new(5).unwrap();
        let ring = SolvRing(SolvCocycle::for_unit_system(FluxValue::Real(0.71), &us));
        let a = TwistedElement::delta(ring.clone(), (1, 0, 0));
        let b = TwistedElement::delta(ring.clone(), (0, 1, 0));
        let c = TwistedElement::delta(ring.clone(), (0, 0, 1));
        let lhs = a.mul(&b).unwrap().mul(&c).unwrap();
        let rhs = a.mul(&b.mul(&c).unwrap()).unwrap();
        assert!(lhs.distance(&rhs) < 1e-14);
    }

    #[test]
    fn solv_associativity_direct_expansion_oracle() {
        // independent check of the triple product against the raw formula
        // R_x R_y = σ((x₁,x₂),(y₁,y₂)φ^{x₃}) R_{xy}
        let us = UnitSystem::new(2).unwrap();
        let flux = 0.437;
        let ring = SolvRing(SolvCocycle::for_unit_system(FluxValue::Real(flux), &us));
        let x = (1i64, -2i64, 1i64);
        let y = (0i64, 3i64, -1i64);
        let z = (2i64, 1i64, 1i64);
        let dx = TwistedElement::delta(ring.clone(), x);
        let dy = TwistedElement::delta(ring.clone(), y);
        let dz = TwistedElement::delta(ring.clone(), z);
        let lhs = dx.mul(&dy).unwrap().mul(&dz).unwrap();

        // oracle: multiply group elements and accumulate phases by hand
        let phi_pow = |v: (i64, i64), k: i64| {
            let m = us.phi_pow(k);
            let (n, mm) = m.act_row(&v.0.into(), &v.1.into());
            let n: i64 = (&n).try_into().unwrap();
            let mm: i64 = (&mm).try_into().unwrap();
            (n, mm)
        };
        let sigma = |a: (i64, i64), b: (i64, i64)| {
            let w = (a.0 * b.1 - a.1 * b.0) as f64;
            Complex64::from_polar(1.0, std::f64::consts::PI * flux * w)
        };
        let xy_vec = {
            let t = phi_pow((y.0, y.1), x.2);
            (x.0 + t.0, x.1 + t.1, x.2 + y.2)
        };
        let phase_xy = sigma((x.0, x.1), phi_pow((y.0, y.1), x.2));
        let xyz_vec = {
            let t = phi_pow((z.0, z.1), xy_vec.2);
            (xy_vec.0 + t.0, xy_vec.1 + t.1, xy_vec.2 + z.2)
        };
        let phase_xyz = phase_xy * sigma((xy_vec.0, xy_vec.1), phi_pow((z.0, z.1), xy_vec.2));

        let got = lhs.coeff(&xyz_vec).expect("support at the triple product");
        assert!((got - phase_xyz).norm() < 1e-13);
    }

    #[test]
    fn star_is_involutive_and_antimultiplicative() {
        let ring = torus_ring(0.577215664901532);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let rand_elem = |rng: &mut ChaCha8Rng| {
            let terms: Vec<((i64, i64), Complex64)> = (0..4)
                .map(|_| {
                    (
                        (rng.gen_range(-3..=3), rng.gen_range(-3..=3)),
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    )
                })
                .collect();
            TwistedElement::from_terms(ring.clone(), terms)
        };
        for _ in 0..50 {
            let x = rand_elem(&mut rng);
            let y = rand_elem(&mut rng);
            assert!(x.star().star().distance(&x) < 1e-13);
            let lhs = x.mul(&y).unwrap().star();
            let rhs = y.star().mul(&x.star()).unwrap();
            assert!(lhs.distance(&rhs) < 1e-12);
        }
    }

    #[test]
    fn arithmetic_star_is_group_inverse() {
        // (R_λ)* = R_{−λ} in K(Λ, ϖ), exactly
        let us = UnitSystem::new(5).unwrap();
        let ring = ArithRing(ArithmeticCocycle::new(us.epsilon().clone()).unwrap());
        let r = TwistedElement::delta(ring.clone(), (2, -3));
        let star = r.star();
        assert_eq!(star.support_len(), 1);
        let c = star.coeff(&(-2, 3)).unwrap();
        assert!(c.is_one());
    }

    #[test]
    fn arithmetic_product_exact() {
        let us = UnitSystem::new(5).unwrap();
        let ring = ArithRing(ArithmeticCocycle::new(us.epsilon().clone()).unwrap());
        let a = TwistedElement::delta(ring.clone(), (1, 0));
        let b = TwistedElement::delta(ring.clone(), (0, 1));
        let ab = a.mul(&b).unwrap();
        assert_eq!(ab.coeff(&(1, 1)).unwrap(), us.epsilon());
        // x·star(x) at the identity carries N(ω^w) = 1 phases: coefficient 1
        let sa = a.star();
        let prod = a.mul(&sa).unwrap();
        assert!(prod.coeff(&(0, 0)).unwrap().is_one());
    }

    #[test]
    fn associativity_random_supports() {
        let ring = torus_ring(1.0 / std::f64::consts::SQRT_2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let rand_elem = |rng: &mut ChaCha8Rng| {
                let terms: Vec<((i64, i64), Complex64)> = (0..rng.gen_range(1..=5))
                    .map(|_| {
                        (
                            (rng.gen_range(-4..=4), rng.gen_range(-4..=4)),
                            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                        )
                    })
                    .collect();
                TwistedElement::from_terms(ring.clone(), terms)
            };
            let (x, y, z) = (rand_elem(&mut rng), rand_elem(&mut rng), rand_elem(&mut rng));
            let lhs = x.mul(&y).unwrap().mul(&z).unwrap();
            let rhs = x.mul(&y.mul(&z).unwrap()).unwrap();
            assert!(lhs.distance(&rhs) < 1e-12);
        }
    }
}
