//! The planar lattice Λ = (ι₁, ι₂)(L) attached to L = ℤ + ℤθ, the hyperbolic
//! unit action A_ε: λ ↦ (ε·λ₁, ε⁻¹·λ₂), exact reduction to a fundamental
//! domain for the unit group, bounded-norm orbit enumeration, and the lift
//! z(ℓ, t) = ι₁(ℓ)e^t + i·ι₂(ℓ)e^{−t} of closed geodesics.
//!
//! The fundamental domain is fixed once and for all as
//!   F_V = { λ ≠ 0 : |N(λ)| ≤ λ₁² < ε²·|N(λ)| },
//! i.e. |N|^{1/2} ≤ |λ₁| < ε·|N|^{1/2}, right-open so the reduction exponent
//! ρ(λ) is unique. Membership is decided by exact field comparisons.

use std::io::Write;

use dashu::integer::IBig;
use dashu::rational::RBig;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadfield::{FieldElement, UnitSystem};

/// A lattice point λ = (n + mθ, n + mθ') in coordinates (n, m).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    pub n: IBig,
    pub m: IBig,
}

impl LatticePoint {
    pub fn new(n: impl Into<IBig>, m: impl Into<IBig>) -> Self {
        Self { n: n.into(), m: m.into() }
    }

    pub fn is_zero(&self) -> bool {
        self.n == IBig::ZERO && self.m == IBig::ZERO
    }

    /// λ₁ = n + mθ as an exact field element.
    pub fn lambda1(&self, us: &UnitSystem) -> FieldElement {
        FieldElement::from_integer(self.n.clone(), us.d()).add(
            &FieldElement::from_integer(self.m.clone(), us.d()).mul(us.theta()),
        )
    }

    /// λ₂ = n + mθ' = conj(λ₁).
    pub fn lambda2(&self, us: &UnitSystem) -> FieldElement {
        self.lambda1(us).conj()
    }

    /// N(λ) = λ₁·λ₂ as an exact rational.
    pub fn norm(&self, us: &UnitSystem) -> RBig {
        self.lambda1(us).norm()
    }

    pub fn to_f64_pair(&self, us: &UnitSystem) -> (f64, f64) {
        let l1 = self.lambda1(us);
        (l1.to_f64_embedding1(), l1.to_f64_embedding2())
    }
}

/// A_ε^k in coordinates: (n, m) ↦ (n, m)·φ_ε^k (row-vector convention).
/// Matches ε^k·λ₁ componentwise and preserves N(λ) exactly.
pub fn act(us: &UnitSystem, p: &LatticePoint, k: i64) -> LatticePoint {
    let phi_k = us.phi_pow(k);
    let (n, m) = phi_k.act_row(&p.n, &p.m);
    LatticePoint { n, m }
}

/// True when λ lies in the fundamental domain F_V (exact comparisons).
pub fn in_fundamental_domain(us: &UnitSystem, p: &LatticePoint) -> Result<bool> {
    if p.is_zero() {
        return Err(Error::ZeroPoint);
    }
    let l1 = p.lambda1(us);
    let l1sq = l1.mul(&l1);
    let abs_norm = abs_rbig(&p.norm(us));
    let lower = FieldElement::from_rational(&abs_norm, us.d());
    // |N| ≤ λ₁²
    if l1sq.cmp_embedding(&lower, 1) == std::cmp::Ordering::Less {
        return Ok(false);
    }
    // λ₁² < ε²·|N|
    let eps2 = us.epsilon_pow(2);
    let upper = eps2.mul(&lower);
    Ok(l1sq.cmp_embedding(&upper, 1) == std::cmp::Ordering::Less)
}

pub(crate) fn abs_rbig(x: &RBig) -> RBig {
    if x < &RBig::ZERO {
        -x.clone()
    } else {
        x.clone()
    }
}

/// Reduces p ≠ 0 to its fundamental domain representative:
/// returns (μ, ρ) with μ ∈ F_V and act(us, μ, ρ) = p. The exponent ρ is
/// found by exact galloping bisection on k — no floating logarithms.
pub fn reduce(us: &UnitSystem, p: &LatticePoint) -> Result<(LatticePoint, i64)> {
    if p.is_zero() {
        return Err(Error::ZeroPoint);
    }
    let l1 = p.lambda1(us);
    let v = l1.mul(&l1);
    let abs_norm = FieldElement::from_rational(&abs_rbig(&p.norm(us)), us.d());

    // condition(k): |N|·ε^{2k} ≤ λ₁², i.e. ρ(p) ≥ k.
    let holds = |k: i64| -> bool {
        let w = abs_norm.mul(&us.epsilon_pow(2 * k));
        v.cmp_embedding(&w, 1) != std::cmp::Ordering::Less
    };

    // gallop for bracketing exponents
    let mut lo: i64;
    let mut hi: i64;
    if holds(0) {
        lo = 0;
        let mut step = 1i64;
        while holds(lo + step) {
            lo += step;
            step *= 2;
        }
        hi = lo + step - 1;
    } else {
        hi = -1;
        let mut step = 1i64;
        while !holds(hi - step + 1) {
            hi -= step;
            step *= 2;
        }
        lo = hi - step + 1;
    }
    // binary search for the largest k with holds(k)
    while lo < hi {
        let mid = lo + (hi - lo + 1) / 2;
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let rho = lo;
    let rep = act(us, p, -rho);
    debug_assert!(in_fundamental_domain(us, &rep)?);
    Ok((rep, rho))
}

/// One fundamental domain representative together with its exact norm.
#[derive(Clone, Debug)]
pub struct OrbitRep {
    pub point: LatticePoint,
    pub norm: RBig,
}

/// All orbit representatives μ ∈ F_V with 0 < |N(μ)| ≤ B, sorted by
/// (|N|, n, m). Exactly one representative per unit orbit.
#[derive(Clone, Debug)]
pub struct OrbitTable {
    pub bound: RBig,
    pub reps: Vec<OrbitRep>,
}

/// Human-readable record of the fundamental domain convention used
/// throughout (right-open in the unit direction).
pub const FUNDAMENTAL_DOMAIN: &str = "|N(lambda)|^(1/2) <= |lambda_1| < eps*|N(lambda)|^(1/2)";

/// Enumerates the orbit representatives with 0 < |N| ≤ B. The search box on
/// (n, m) is derived from |λ₂| ≤ B^{1/2}, |λ₁| < ε·B^{1/2} through the
/// inverse of the basis matrix; each candidate is then kept or dropped by
/// exact membership tests only.
pub fn enumerate_orbits(us: &UnitSystem, bound: &RBig) -> Result<OrbitTable> {
    if bound <= &RBig::ZERO {
        return Err(Error::InvalidParameter("orbit norm bound must be positive".into()));
    }
    let sqrt_b = rbig_to_f64(bound).sqrt();
    let eps = us.epsilon_f64();
    let theta = us.theta_f64();
    let theta_c = us.theta_conj().to_f64_embedding1();
    let lam1_max = eps * sqrt_b;
    let lam2_max = sqrt_b;
    let gap = (theta - theta_c).abs();
    let m_max = ((lam1_max + lam2_max) / gap).ceil() as i64 + 2;
    let n_max = (lam1_max + m_max as f64 * theta.abs()).ceil() as i64 + 2;

    let mut reps = Vec::new();
    for n in -n_max..=n_max {
        for m in -m_max..=m_max {
            if n == 0 && m == 0 {
                continue;
            }
            let p = LatticePoint::new(n, m);
            let norm = p.norm(us);
            let abs_n = abs_rbig(&norm);
            if abs_n > *bound || abs_n == RBig::ZERO {
                continue;
            }
            if in_fundamental_domain(us, &p)? {
                reps.push(OrbitRep { point: p, norm });
            }
        }
    }
    reps.sort_by(|x, y| {
        abs_rbig(&x.norm)
            .cmp(&abs_rbig(&y.norm))
            .then_with(|| x.point.n.cmp(&y.point.n))
            .then_with(|| x.point.m.cmp(&y.point.m))
    });
    Ok(OrbitTable { bound: bound.clone(), reps })
}

impl OrbitTable {
    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    /// CSV export: n, m, norm_num, norm_den, rho_of_reduction_test.
    /// The last column re-runs the reduction on each representative and
    /// prints the resulting exponent (0 for a correct table).
    pub fn write_csv<W: Write>(&self, us: &UnitSystem, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,m,norm_num,norm_den,rho_of_reduction_test")?;
        for rep in &self.reps {
            let (_, rho) = reduce(us, &rep.point).expect("representatives are nonzero");
            writeln!(
                w,
                "{},{},{},{},{}",
                rep.point.n,
                rep.point.m,
                rep.norm.numerator(),
                rep.norm.denominator(),
                rho
            )?;
        }
        Ok(())
    }
}

/// Hecke lift z(ℓ, t) = ι₁(ℓ)·e^t + i·ι₂(ℓ)·e^{−t} of a lattice point along
/// the geodesic parameter t. Satisfies z(ελ, t) = z(λ, t + log ε).
pub fn hecke_point(us: &UnitSystem, ell: &LatticePoint, t: f64) -> Complex64 {
    let (l1, l2) = ell.to_f64_pair(us);
    Complex64::new(l1 * t.exp(), l2 * (-t).exp())
}

pub(crate) fn rbig_to_f64(x: &RBig) -> f64 {
    x.to_f64().value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn act_d5_unit_vector() {
        // (1,0) is ℓ = 1; A_ε sends it to ε = 1 + 1·θ for d = 5
        let us = UnitSystem::new(5).unwrap();
        let p = act(&us, &LatticePoint::new(1, 0), 1);
        assert_eq!(p, LatticePoint::new(1, 1));
        assert_eq!(p.lambda1(&us), us.epsilon().clone());
    }

    #[test]
    fn act_identity_at_k_zero() {
        let us = UnitSystem::new(5).unwrap();
        let p = LatticePoint::new(7, -3);
        assert_eq!(act(&us, &p, 0), p);
    }

    #[test]
    fn act_d2_row_vector_oracle() {
        // (0,1)·[[3,2],[4,3]] = (4,3)
        let us = UnitSystem::new(2).unwrap();
        assert_eq!(act(&us, &LatticePoint::new(0, 1), 1), LatticePoint::new(4, 3));
    }

    #[test]
    fn act_preserves_norm_exactly() {
        let us = UnitSystem::new(13).unwrap();
        for (n, m) in [(1i64, 0i64), (0, 1), (5, 3), (-2, 7)] {
            let p = LatticePoint::new(n, m);
            let nn = p.norm(&us);
            for k in -10..=10 {
                assert_eq!(act(&us, &p, k).norm(&us), nn);
            }
        }
    }

    #[test]
    fn reduce_fixes_domain_points() {
        let us = UnitSystem::new(5).unwrap();
        let mu = LatticePoint::new(1, 0); // |N| = 1 = λ₁², in F_V
        assert!(in_fundamental_domain(&us, &mu).unwrap());
        let (rep, rho) = reduce(&us, &mu).unwrap();
        assert_eq!(rep, mu);
        assert_eq!(rho, 0);
    }

    #[test]
    fn reduce_inverts_act() {
        let us = UnitSystem::new(5).unwrap();
        let mu = LatticePoint::new(1, 0);
        let p = act(&us, &mu, 3);
        let (rep, rho) = reduce(&us, &p).unwrap();
        assert_eq!((rep, rho), (mu, 3));
    }

    #[test]
    fn reduce_round_trip_box() {
        let us = UnitSystem::new(5).unwrap();
        for n in -20i64..=20 {
            for m in -20i64..=20 {
                if n == 0 && m == 0 {
                    continue;
                }
                let p = LatticePoint::new(n, m);
                let (rep, rho) = reduce(&us, &p).unwrap();
                assert!(in_fundamental_domain(&us, &rep).unwrap());
                assert_eq!(act(&us, &rep, rho), p, "round trip at ({n},{m})");
                // neighbours of the representative leave the domain
                assert!(!in_fundamental_domain(&us, &act(&us, &rep, 1)).unwrap());
                assert!(!in_fundamental_domain(&us, &act(&us, &rep, -1)).unwrap());
            }
        }
    }

    #[test]
    fn reduce_rejects_zero() {
        let us = UnitSystem::new(5).unwrap();
        assert!(matches!(
            reduce(&us, &LatticePoint::new(0, 0)),
            Err(Error::ZeroPoint)
        ));
    }

    #[test]
    fn empty_table_below_minimal_norm() {
        let us = UnitSystem::new(5).unwrap();
        let table =
            enumerate_orbits(&us, &RBig::from_parts(IBig::from(1), 100u32.into())).unwrap();
        assert!(table.is_empty());
    }

    #[test]
    fn orbits_d5_bound_one() {
        let us = UnitSystem::new(5).unwrap();
        let table = enumerate_orbits(&us, &RBig::ONE).unwrap();
        // must contain the orbit of (1,0) (N = 1) and of (0,1) (N = θθ' = −1)
        let contains_orbit_of = |p: &LatticePoint| {
            let (rep, _) = reduce(&us, p).unwrap();
            table.reps.iter().any(|r| r.point == rep)
        };
        assert!(contains_orbit_of(&LatticePoint::new(1, 0)));
        assert!(contains_orbit_of(&LatticePoint::new(0, 1)));
        let norms: Vec<RBig> = table.reps.iter().map(|r| r.norm.clone()).collect();
        assert!(norms.contains(&RBig::ONE));
        assert!(norms.contains(&RBig::from(-1)));
    }

    #[test]
    fn orbit_completeness_brute_force() {
        // every λ in a test ball reduces to some listed representative
        let us = UnitSystem::new(2).unwrap();
        let bound = RBig::from(6);
        let table = enumerate_orbits(&us, &bound).unwrap();
        for n in -15i64..=15 {
            for m in -15i64..=15 {
                if n == 0 && m == 0 {
                    continue;
                }
                let p = LatticePoint::new(n, m);
                let abs_n = abs_rbig(&p.norm(&us));
                if abs_n > bound {
                    continue;
                }
                let (rep, _) = reduce(&us, &p).unwrap();
                assert!(
                    table.reps.iter().any(|r| r.point == rep),
                    "missing orbit of ({n},{m}) with |N|={abs_n}"
                );
            }
        }
    }

    #[test]
    fn orbit_reps_pairwise_inequivalent() {
        let us = UnitSystem::new(5).unwrap();
        let table = enumerate_orbits(&us, &RBig::from(30)).unwrap();
        for (i, a) in table.reps.iter().enumerate() {
            for b in table.reps.iter().skip(i + 1) {
                let (ra, _) = reduce(&us, &a.point).unwrap();
                let (rb, _) = reduce(&us, &b.point).unwrap();
                assert_ne!(ra, rb, "duplicate orbit in table");
            }
        }
    }

    #[test]
    fn hecke_point_basics() {
        let us = UnitSystem::new(5).unwrap();
        let z = hecke_point(&us, &LatticePoint::new(1, 0), 0.0);
        assert!((z - Complex64::new(1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn hecke_unit_covariance() {
        // z(ελ, t) = z(λ, t + log ε) to 1e-12
        let us = UnitSystem::new(5).unwrap();
        let log_eps = us.log_epsilon();
        let mut worst: f64 = 0.0;
        for (i, (n, m)) in (-4i64..=5)
            .flat_map(|n| (-4i64..=5).map(move |m| (n, m)))
            .enumerate()
        {
            if n == 0 && m == 0 {
                continue;
            }
            let t = -1.5 + (i as f64) * 0.031;
            let p = LatticePoint::new(n, m);
            let lhs = hecke_point(&us, &act(&us, &p, 1), t);
            let rhs = hecke_point(&us, &p, t + log_eps);
            worst = worst.max((lhs - rhs).norm());
        }
        assert!(worst < 1e-12, "covariance deviation {worst}");
    }

    #[test]
    fn hecke_module_ratio_at_zero() {
        // τ_0 = z((0,1),0)/z((1,0),0) = (θ + iθ')/(1 + i)
        let us = UnitSystem::new(5).unwrap();
        let tau = hecke_point(&us, &LatticePoint::new(0, 1), 0.0)
            / hecke_point(&us, &LatticePoint::new(1, 0), 0.0);
        let theta = us.theta_f64();
        let theta_c = us.theta_conj().to_f64_embedding1();
        let expect = Complex64::new(theta, theta_c) / Complex64::new(1.0, 1.0);
        assert!((tau - expect).norm() < 1e-14);
    }

    #[test]
    fn csv_header_and_rho_column() {
        let us = UnitSystem::new(5).unwrap();
        let table = enumerate_orbits(&us, &RBig::from(5)).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&us, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n,m,norm_num,norm_den,rho_of_reduction_test"
        );
        for line in lines {
            assert!(line.ends_with(",0"), "representative not fixed by reduction: {line}");
        }
    }
}
