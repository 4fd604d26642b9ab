//! Exact arithmetic in a real quadratic field K = ℚ(√d), its two real
//! embeddings, the Galois involution, continued fractions of quadratic
//! irrationals, and the totally positive fundamental unit of the stabilizer
//! of a lattice L = ℤ + ℤθ.
//!
//! Every comparison (signs of embeddings, fundamental-domain membership,
//! floors of quadratic irrationals) is decided exactly on integers; no
//! floating point enters any decision.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use dashu::base::{Abs, DivEuclid, Gcd, SquareRoot};
use dashu::integer::{IBig, UBig};
use dashu::rational::RBig;

use crate::error::{Error, Result};

/// Returns true when `d` is squarefree.
pub fn is_squarefree(d: u64) -> bool {
    if d == 0 {
        return false;
    }
    let mut n = d;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return false;
            }
        }
        p += 1;
    }
    true
}

/// An element (a + b√d)/c of K = ℚ(√d), kept in normalized form:
/// gcd(a, b, c) = 1 and c ≥ 1. `d` is a squarefree tag shared by all
/// elements that may be combined arithmetically.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldElement {
    a: IBig,
    b: IBig,
    c: IBig,
    d: u64,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {}*sqrt({}))/{}", self.a, self.b, self.d, self.c)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}+{}√{})/{}", self.a, self.b, self.d, self.c)
    }
}

fn gcd3(a: &IBig, b: &IBig, c: &IBig) -> IBig {
    let g = a.clone().abs().gcd(&b.clone().abs());
    IBig::from(g.gcd(&c.clone().abs()))
}

impl FieldElement {
    /// Builds (a + b√d)/c, normalizing gcd and the sign of c.
    pub fn new(a: impl Into<IBig>, b: impl Into<IBig>, c: impl Into<IBig>, d: u64) -> Result<Self> {
        if !is_squarefree(d) || d < 2 {
            return Err(Error::NotSquarefree(d));
        }
        let (a, b, mut c) = (a.into(), b.into(), c.into());
        if c == IBig::ZERO {
            return Err(Error::DivisionByZero);
        }
        let (mut a, mut b) = (a, b);
        if c < IBig::ZERO {
            a = -a;
            b = -b;
            c = -c;
        }
        if a == IBig::ZERO && b == IBig::ZERO {
            return Ok(Self { a, b, c: IBig::ONE, d });
        }
        let g = gcd3(&a, &b, &c);
        if g > IBig::ONE {
            a /= &g;
            b /= &g;
            c /= &g;
        }
        Ok(Self { a, b, c, d })
    }

    pub fn zero(d: u64) -> Self {
        Self { a: IBig::ZERO, b: IBig::ZERO, c: IBig::ONE, d }
    }

    pub fn one(d: u64) -> Self {
        Self { a: IBig::ONE, b: IBig::ZERO, c: IBig::ONE, d }
    }

    pub fn from_integer(n: impl Into<IBig>, d: u64) -> Self {
        Self { a: n.into(), b: IBig::ZERO, c: IBig::ONE, d }
    }

    pub fn from_rational(r: &RBig, d: u64) -> Self {
        Self {
            a: r.numerator().clone(),
            b: IBig::ZERO,
            c: IBig::from(r.denominator().clone()),
            d,
        }
    }

    /// √d itself.
    pub fn sqrt_d(d: u64) -> Result<Self> {
        Self::new(0, 1, 1, d)
    }

    pub fn coeff_a(&self) -> &IBig {
        &self.a
    }
    pub fn coeff_b(&self) -> &IBig {
        &self.b
    }
    pub fn coeff_c(&self) -> &IBig {
        &self.c
    }
    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        self.a == IBig::ZERO && self.b == IBig::ZERO
    }

    pub fn is_one(&self) -> bool {
        self.a == IBig::ONE && self.b == IBig::ZERO && self.c == IBig::ONE
    }

    /// True when the element lies in ℚ (b = 0).
    pub fn is_rational(&self) -> bool {
        self.b == IBig::ZERO
    }

    fn assert_same_d(&self, other: &Self) {
        assert_eq!(
            self.d, other.d,
            "field elements with different squarefree tags cannot be combined"
        );
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_same_d(other);
        Self::new(
            &self.a * &other.c + &other.a * &self.c,
            &self.b * &other.c + &other.b * &self.c,
            &self.c * &other.c,
            self.d,
        )
        .expect("denominators are nonzero")
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self { a: -self.a.clone(), b: -self.b.clone(), c: self.c.clone(), d: self.d }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.assert_same_d(other);
        let d = IBig::from(self.d);
        Self::new(
            &self.a * &other.a + &self.b * &other.b * &d,
            &self.a * &other.b + &self.b * &other.a,
            &self.c * &other.c,
            self.d,
        )
        .expect("denominators are nonzero")
    }

    pub fn mul_rational(&self, r: &RBig) -> Self {
        Self::new(
            &self.a * r.numerator(),
            &self.b * r.numerator(),
            &self.c * IBig::from(r.denominator().clone()),
            self.d,
        )
        .expect("denominators are nonzero")
    }

    /// The Galois conjugate x' = (a - b√d)/c.
    pub fn conj(&self) -> Self {
        Self { a: self.a.clone(), b: -self.b.clone(), c: self.c.clone(), d: self.d }
    }

    /// N(x) = x·x' = (a² - b²d)/c² as an exact rational.
    pub fn norm(&self) -> RBig {
        let num = &self.a * &self.a - &self.b * &self.b * IBig::from(self.d);
        RBig::from_parts(num, (&self.c * &self.c).try_into().expect("c > 0"))
    }

    /// Tr(x) = x + x' = 2a/c as an exact rational.
    pub fn trace(&self) -> RBig {
        RBig::from_parts(2 * &self.a, self.c.clone().try_into().expect("c > 0"))
    }

    /// Multiplicative inverse; errors on zero.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        // 1/x = x'/N(x)
        let n = self.norm();
        let conj = self.conj();
        Ok(Self::new(
            &conj.a * n.denominator(),
            &conj.b * n.denominator(),
            &conj.c * n.numerator(),
            self.d,
        )
        .expect("norm of a nonzero element is nonzero"))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow(&self, k: i64) -> Result<Self> {
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Self::one(self.d);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq);
            }
            sq = sq.mul(&sq);
            e >>= 1;
        }
        Ok(acc)
    }

    /// Exact sign of ι₁(x) = (a + b√d)/c: decided by comparing a² with b²d,
    /// never by floating evaluation.
    pub fn sign_embedding1(&self) -> i32 {
        sign_of_surd(&self.a, &self.b, self.d)
    }

    /// Exact sign of ι₂(x) = (a - b√d)/c.
    pub fn sign_embedding2(&self) -> i32 {
        sign_of_surd(&self.a, &(-self.b.clone()), self.d)
    }

    /// Exact sign of the i-th embedding (i ∈ {1, 2}).
    pub fn sign_embedding(&self, i: u8) -> i32 {
        match i {
            1 => self.sign_embedding1(),
            2 => self.sign_embedding2(),
            _ => panic!("embedding index must be 1 or 2"),
        }
    }

    /// ι₁(x) > 0 and ι₂(x) > 0, exactly.
    pub fn is_totally_positive(&self) -> bool {
        self.sign_embedding1() > 0 && self.sign_embedding2() > 0
    }

    /// Exact comparison of ι_i(self) with ι_i(other).
    pub fn cmp_embedding(&self, other: &Self, i: u8) -> std::cmp::Ordering {
        let diff = self.sub(other);
        let s = diff.sign_embedding(i);
        s.cmp(&0)
    }

    /// Floating value of ι₁(x).
    pub fn to_f64_embedding1(&self) -> f64 {
        let a = ibig_f64(&self.a);
        let b = ibig_f64(&self.b);
        let c = ibig_f64(&self.c);
        (a + b * (self.d as f64).sqrt()) / c
    }

    /// Floating value of ι₂(x).
    pub fn to_f64_embedding2(&self) -> f64 {
        self.conj().to_f64_embedding1()
    }

    /// Exact floor of ι₁(x), via integer square roots only.
    pub fn floor_embedding1(&self) -> IBig {
        // b√d lies in [s, s+1) for b ≥ 0 and in (-(s+1), -s] for b < 0,
        // where s = isqrt(b²·d).
        let b2d: UBig = (&self.b * &self.b * IBig::from(self.d))
            .try_into()
            .expect("b²d ≥ 0");
        let s = IBig::from(b2d.sqrt());
        let (lo, hi) = if self.b >= IBig::ZERO {
            (&self.a + &s, &self.a + &s + IBig::ONE)
        } else {
            (&self.a - &s - IBig::ONE, &self.a - &s)
        };
        // The numerator a + b√d lies in [lo, hi]; floor over c can differ by
        // at most one across that window, so fix up exactly.
        let mut n = lo.div_euclid(&self.c);
        loop {
            let next = &n + IBig::ONE;
            // is x >= next ?  check sign of x - next
            let diff = self.sub(&Self::from_integer(next.clone(), self.d));
            if diff.sign_embedding1() >= 0 {
                n = next;
            } else {
                break;
            }
        }
        let _ = hi;
        n
    }
}

fn ibig_f64(x: &IBig) -> f64 {
    x.to_f64().value()
}

/// Exact sign of a + b√d.
fn sign_of_surd(a: &IBig, b: &IBig, d: u64) -> i32 {
    let sa = if *a > IBig::ZERO {
        1
    } else if *a < IBig::ZERO {
        -1
    } else {
        0
    };
    let sb = if *b > IBig::ZERO {
        1
    } else if *b < IBig::ZERO {
        -1
    } else {
        0
    };
    if sb == 0 {
        return sa;
    }
    if sa == 0 || sa == sb {
        return sb;
    }
    // opposite signs: compare a² with b²·d
    let a2 = a * a;
    let b2d = b * b * IBig::from(d);
    match a2.cmp(&b2d) {
        std::cmp::Ordering::Greater => sa,
        std::cmp::Ordering::Less => sb,
        // a² = b²d is impossible for squarefree d ≥ 2 and b ≠ 0
        std::cmp::Ordering::Equal => unreachable!("a² = b²d contradicts d squarefree"),
    }
}

/// Parses a `--theta` style spec "a,b,c" into its three integer components.
pub fn parse_theta_spec(s: &str) -> Result<(IBig, IBig, IBig)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!(
            "theta spec must be three comma-separated integers a,b,c, got {s:?}"
        )));
    }
    let mut vals = Vec::with_capacity(3);
    for p in &parts {
        let v = IBig::from_str(p)
            .map_err(|e| Error::Parse(format!("bad integer {p:?} in theta spec: {e}")))?;
        vals.push(v);
    }
    let c = vals.pop().unwrap();
    let b = vals.pop().unwrap();
    let a = vals.pop().unwrap();
    if c == IBig::ZERO {
        return Err(Error::Parse("theta spec denominator c must be nonzero".into()));
    }
    Ok((a, b, c))
}

/// Eventually periodic continued fraction of a quadratic irrational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContinuedFraction {
    pub preperiod: Vec<IBig>,
    pub period: Vec<IBig>,
}

/// Exact continued fraction expansion of an irrational θ ∈ K. The period is
/// detected by recurrence of the exact complete quotient.
pub fn continued_fraction_period(theta: &FieldElement) -> Result<ContinuedFraction> {
    if theta.is_rational() {
        return Err(Error::RationalTheta);
    }
    let mut x = theta.clone();
    let mut quotients: Vec<IBig> = Vec::new();
    let mut seen: HashMap<FieldElement, usize> = HashMap::new();
    loop {
        if let Some(&start) = seen.get(&x) {
            let preperiod = quotients[..start].to_vec();
            let period = quotients[start..].to_vec();
            return Ok(ContinuedFraction { preperiod, period });
        }
        seen.insert(x.clone(), quotients.len());
        let a = x.floor_embedding1();
        let frac = x.sub(&FieldElement::from_integer(a.clone(), x.d()));
        quotients.push(a);
        x = frac.inv().expect("fractional part of an irrational is nonzero");
        if quotients.len() > 100_000 {
            return Err(Error::InvalidParameter(
                "continued fraction period not found within 100000 steps".into(),
            ));
        }
    }
}

/// 2×2 integer matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat2 {
    pub m: [[IBig; 2]; 2],
}

impl Mat2 {
    pub fn new(a: impl Into<IBig>, b: impl Into<IBig>, c: impl Into<IBig>, d: impl Into<IBig>) -> Self {
        Self { m: [[a.into(), b.into()], [c.into(), d.into()]] }
    }

    pub fn identity() -> Self {
        Self::new(1, 0, 0, 1)
    }

    pub fn det(&self) -> IBig {
        &self.m[0][0] * &self.m[1][1] - &self.m[0][1] * &self.m[1][0]
    }

    pub fn trace(&self) -> IBig {
        &self.m[0][0] + &self.m[1][1]
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::new(0, 0, 0, 0);
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] =
                    &self.m[i][0] * &other.m[0][j] + &self.m[i][1] * &other.m[1][j];
            }
        }
        out
    }

    /// Inverse of a matrix with det = ±1.
    pub fn inv_unimodular(&self) -> Self {
        let det = self.det();
        let adj = Self::new(
            self.m[1][1].clone(),
            -self.m[0][1].clone(),
            -self.m[1][0].clone(),
            self.m[0][0].clone(),
        );
        if det == IBig::ONE {
            adj
        } else if det == IBig::NEG_ONE {
            Self::new(-adj.m[0][0].clone(), -adj.m[0][1].clone(), -adj.m[1][0].clone(), -adj.m[1][1].clone())
        } else {
            panic!("matrix is not unimodular (det = {det})")
        }
    }

    pub fn pow(&self, k: i64) -> Self {
        let base = if k < 0 { self.inv_unimodular() } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Self::identity();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq);
            }
            sq = sq.mul(&sq);
            e >>= 1;
        }
        acc
    }

    /// Row-vector action (n, m) ↦ (n, m)·M.
    pub fn act_row(&self, n: &IBig, m: &IBig) -> (IBig, IBig) {
        (
            n * &self.m[0][0] + m * &self.m[1][0],
            n * &self.m[0][1] + m * &self.m[1][1],
        )
    }
}

/// Checks that 1/θ and 1/θ' are fixed by the fractional linear action of
/// `phi` = [[a, b], [c, d]]: (a·x + b)/(c·x + d) = x, exactly.
pub fn fixed_points_hold(phi: &Mat2, theta: &FieldElement) -> Result<bool> {
    let d = theta.d();
    let a = FieldElement::from_integer(phi.m[0][0].clone(), d);
    let b = FieldElement::from_integer(phi.m[0][1].clone(), d);
    let c = FieldElement::from_integer(phi.m[1][0].clone(), d);
    let dd = FieldElement::from_integer(phi.m[1][1].clone(), d);
    for x in [theta.inv()?, theta.conj().inv()?] {
        // (a·x + b) - x·(c·x + d) = 0
        let lhs = a.mul(&x).add(&b).sub(&x.mul(&c.mul(&x).add(&dd)));
        if !lhs.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The unit data of a lattice L = ℤ + ℤθ: the smallest totally positive unit
/// ε > 1 with N(ε) = 1 and εL ⊆ L, the matrix φ_ε expressing its action in
/// the basis {1, θ}, and the continued fraction of θ it was derived from.
#[derive(Clone, Debug)]
pub struct UnitSystem {
    d: u64,
    theta: FieldElement,
    epsilon: FieldElement,
    phi: Mat2,
    phi_inv: Mat2,
    cf: ContinuedFraction,
    /// Optional exponent multiplier: the acting group is ε^(multiplier·ℤ),
    /// i.e. a finite index subgroup of the full totally positive stabilizer.
    multiplier: u32,
    /// Integer trace of ε (ε + ε' ∈ ℤ whenever εL ⊆ L).
    trace_eps: IBig,
}

impl UnitSystem {
    /// Unit system for the maximal-order convention: θ = (1+√d)/2 when
    /// d ≡ 1 (mod 4), θ = √d otherwise.
    pub fn new(d: u64) -> Result<Self> {
        let theta = if d % 4 == 1 {
            FieldElement::new(1, 1, 2, d)?
        } else {
            FieldElement::sqrt_d(d)?
        };
        Self::with_theta(theta)
    }

    /// Unit system for an arbitrary irrational θ generating L = ℤ + ℤθ.
    pub fn with_theta(theta: FieldElement) -> Result<Self> {
        if theta.is_rational() {
            return Err(Error::RationalTheta);
        }
        let d = theta.d();
        let cf = continued_fraction_period(&theta)?;

        // Fold the period and conjugate through the preperiod: the resulting
        // matrix g fixes θ under the fractional linear action, and its
        // bottom row evaluates to a unit of the stabilizer of L.
        let fold = |digits: &[IBig]| {
            let mut m = Mat2::identity();
            for a in digits {
                m = m.mul(&Mat2::new(a.clone(), 1, 1, 0));
            }
            m
        };
        let m_pre = fold(&cf.preperiod);
        let m_per = fold(&cf.period);
        let g = m_pre.mul(&m_per).mul(&m_pre.inv_unimodular());

        // θ = (p·θ + q)/(r·θ + s)  ⇒  ε₀ = r·θ + s is a unit with ε₀·L ⊆ L.
        let r = FieldElement::from_integer(g.m[1][0].clone(), d);
        let s = FieldElement::from_integer(g.m[1][1].clone(), d);
        let mut eps = r.mul(&theta).add(&s);
        if eps.sign_embedding1() < 0 {
            eps = eps.neg();
        }
        // ensure ι₁(ε₀) > 1
        if eps.sub(&FieldElement::one(d)).sign_embedding1() < 0 {
            eps = eps.inv()?;
            if eps.sign_embedding1() < 0 {
                eps = eps.neg();
            }
        }
        let norm = eps.norm();
        if norm == RBig::from(-1) {
            eps = eps.mul(&eps.clone());
        } else {
            debug_assert_eq!(norm, RBig::ONE, "CF automorph must have norm ±1");
        }
        debug_assert!(eps.is_totally_positive());

        let phi = phi_of_unit(&eps, &theta)?;
        debug_assert_eq!(phi.det(), IBig::ONE);
        let trace_eps_rat = eps.trace();
        debug_assert_eq!(trace_eps_rat.denominator(), &UBig::ONE);
        let trace_eps = trace_eps_rat.numerator().clone();
        let phi_inv = phi.inv_unimodular();
        Ok(Self { d, theta, epsilon: eps, phi, phi_inv, cf, multiplier: 1, trace_eps })
    }

    /// Replaces the acting group by the index-m subgroup generated by ε^m.
    pub fn with_exponent(self, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("exponent multiplier must be >= 1".into()));
        }
        if m == 1 {
            return Ok(self);
        }
        let eps = self.epsilon.pow(m as i64)?;
        let phi = phi_of_unit(&eps, &self.theta)?;
        let phi_inv = phi.inv_unimodular();
        let trace_eps = {
            let t = eps.trace();
            debug_assert_eq!(t.denominator(), &UBig::ONE);
            t.numerator().clone()
        };
        Ok(Self {
            d: self.d,
            theta: self.theta,
            epsilon: eps,
            phi,
            phi_inv,
            cf: self.cf,
            multiplier: m,
            trace_eps,
        })
    }

    pub fn d(&self) -> u64 {
        self.d
    }
    pub fn theta(&self) -> &FieldElement {
        &self.theta
    }
    pub fn theta_conj(&self) -> FieldElement {
        self.theta.conj()
    }
    pub fn epsilon(&self) -> &FieldElement {
        &self.epsilon
    }
    pub fn phi(&self) -> &Mat2 {
        &self.phi
    }
    pub fn phi_inv(&self) -> &Mat2 {
        &self.phi_inv
    }
    pub fn continued_fraction(&self) -> &ContinuedFraction {
        &self.cf
    }
    pub fn multiplier(&self) -> u32 {
        self.multiplier
    }

    pub fn epsilon_pow(&self, k: i64) -> FieldElement {
        self.epsilon.pow(k).expect("epsilon is a unit")
    }

    pub fn phi_pow(&self, k: i64) -> Mat2 {
        self.phi.pow(k)
    }

    /// ι₁(ε) as f64 (> 1).
    pub fn epsilon_f64(&self) -> f64 {
        self.epsilon.to_f64_embedding1()
    }

    /// log ι₁(ε).
    pub fn log_epsilon(&self) -> f64 {
        self.epsilon_f64().ln()
    }

    /// Integer trace ε^k + ε^{-k} via the Lucas recurrence
    /// t_{k+1} = Tr(ε)·t_k − t_{k−1}, exact for N(ε) = 1.
    pub fn unit_trace(&self, k: u64) -> IBig {
        let mut t0 = IBig::from(2);
        if k == 0 {
            return t0;
        }
        let mut t1 = self.trace_eps.clone();
        for _ in 1..k {
            let t2 = &self.trace_eps * &t1 - &t0;
            t0 = t1;
            t1 = t2;
        }
        t1
    }

    /// Checks the fixed point relation of φ_ε at 1/θ and 1/θ', exactly.
    pub fn fixed_points_check(&self) -> bool {
        fixed_points_hold(&self.phi, &self.theta).expect("theta is irrational and nonzero")
    }

    /// f64 value of ι₁(θ).
    pub fn theta_f64(&self) -> f64 {
        self.theta.to_f64_embedding1()
    }
}

/// Solves ε = A + Bθ and εθ = C + Dθ exactly and returns φ = [[A,B],[C,D]].
/// Errors when ε does not stabilize L = ℤ + ℤθ (non-integer solution).
pub fn phi_of_unit(eps: &FieldElement, theta: &FieldElement) -> Result<Mat2> {
    let decompose = |x: &FieldElement| -> Result<(IBig, IBig)> {
        // x = A + Bθ with A, B ∈ ℚ determined by matching √d coefficients:
        // B = (x.b/x.c) / (θ.b/θ.c), A = x.a/x.c − B·θ.a/θ.c.
        let bx = RBig::from_parts(x.b.clone(), x.c.clone().try_into().unwrap());
        let bt = RBig::from_parts(theta.b.clone(), theta.c.clone().try_into().unwrap());
        let ax = RBig::from_parts(x.a.clone(), x.c.clone().try_into().unwrap());
        let at = RBig::from_parts(theta.a.clone(), theta.c.clone().try_into().unwrap());
        let b_coef = bx / bt;
        let a_coef = ax - &b_coef * at;
        if a_coef.denominator() != &UBig::ONE || b_coef.denominator() != &UBig::ONE {
            return Err(Error::InvalidParameter(format!(
                "{x:?} does not lie in ℤ + ℤθ"
            )));
        }
        Ok((a_coef.numerator().clone(), b_coef.numerator().clone()))
    };
    let (a, b) = decompose(eps)?;
    let (c, d) = decompose(&eps.mul(theta))?;
    Ok(Mat2::new(a, b, c, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fe(a: i64, b: i64, c: i64, d: u64) -> FieldElement {
        FieldElement::new(a, b, c, d).unwrap()
    }

    /// Independent oracle: multiply (a₁+b₁√d)/c₁ by (a₂+b₂√d)/c₂ with plain
    /// i128 arithmetic, no normalization shortcuts.
    fn mul_oracle(x: (i64, i64, i64), y: (i64, i64, i64), d: u64) -> (i128, i128, i128) {
        let (a1, b1, c1) = (x.0 as i128, x.1 as i128, x.2 as i128);
        let (a2, b2, c2) = (y.0 as i128, y.1 as i128, y.2 as i128);
        (a1 * a2 + b1 * b2 * d as i128, a1 * b2 + b1 * a2, c1 * c2)
    }

    #[test]
    fn golden_mean_times_conjugate_is_minus_one() {
        let theta = fe(1, 1, 2, 5);
        let prod = theta.mul(&theta.conj());
        assert_eq!(prod, fe(-1, 0, 1, 5));
    }

    #[test]
    fn conjugation_flips_sqrt_coefficient() {
        let x = fe(3, 2, 1, 2);
        assert_eq!(x.conj(), fe(3, -2, 1, 2));
        assert_eq!(x.conj().conj(), x);
    }

    #[test]
    fn norm_of_unit_d5() {
        // ((3+√5)/2)·((3−√5)/2) computed against the direct expansion oracle
        let x = (3i64, 1i64, 2i64);
        let y = (3i64, -1i64, 2i64);
        let (oa, ob, oc) = mul_oracle(x, y, 5);
        assert_eq!((oa, ob, oc), (4, 0, 4));
        let prod = fe(x.0, x.1, x.2, 5).mul(&fe(y.0, y.1, y.2, 5));
        assert!(prod.is_one());
    }

    #[test]
    fn inverse_errors_on_zero() {
        let z = FieldElement::zero(5);
        assert!(matches!(z.inv(), Err(Error::DivisionByZero)));
    }

    #[test]
    fn rejects_non_squarefree_tag() {
        assert!(matches!(FieldElement::new(1, 1, 1, 4), Err(Error::NotSquarefree(4))));
        assert!(matches!(FieldElement::new(1, 1, 1, 12), Err(Error::NotSquarefree(12))));
        assert!(FieldElement::new(1, 1, 1, 30).is_ok());
    }

    #[test]
    fn exact_signs() {
        // 7 - 5√2 < 0 since 49 < 50
        assert_eq!(fe(7, -5, 1, 2).sign_embedding1(), -1);
        // 8 - 5√2 > 0 since 64 > 50
        assert_eq!(fe(8, -5, 1, 2).sign_embedding1(), 1);
        assert_eq!(fe(0, 0, 1, 2).sign_embedding1(), 0);
        // ι₂ of 1+√2 is 1-√2 < 0
        assert_eq!(fe(1, 1, 1, 2).sign_embedding2(), -1);
    }

    #[test]
    fn exact_floor() {
        assert_eq!(fe(0, 1, 1, 2).floor_embedding1(), IBig::from(1)); // √2
        assert_eq!(fe(1, 1, 2, 5).floor_embedding1(), IBig::from(1)); // golden
        assert_eq!(fe(0, -1, 1, 2).floor_embedding1(), IBig::from(-2)); // -√2
        assert_eq!(fe(10, 0, 3, 5).floor_embedding1(), IBig::from(3)); // 10/3
        assert_eq!(fe(-10, 0, 3, 5).floor_embedding1(), IBig::from(-4)); // -10/3
        assert_eq!(fe(6, 0, 3, 5).floor_embedding1(), IBig::from(2)); // exact integer
    }

    /// Classical (P, Q, D) integer recurrence for the continued fraction of
    /// (P + √D)/Q — the oracle is independent of the FieldElement-based path.
    fn cf_oracle(p0: i64, q0: i64, big_d: i64, steps: usize) -> (Vec<i64>, Vec<i64>) {
        // ensure Q | D - P²
        let (mut p, mut q, mut dd) = (p0, q0, big_d);
        if (dd - p * p) % q != 0 {
            p *= q.abs();
            dd *= q * q;
            q *= q.abs();
        }
        let sq = |n: i64| (n as f64).sqrt() as i64;
        let mut states = Vec::new();
        let mut quots = Vec::new();
        for _ in 0..steps {
            if let Some(pos) = states.iter().position(|&s| s == (p, q)) {
                return (quots[..pos].to_vec(), quots[pos..].to_vec());
            }
            states.push((p, q));
            let mut s = sq(dd);
            while (s + 1) * (s + 1) <= dd {
                s += 1;
            }
            let a = (p + s).div_euclid(q);
            quots.push(a);
            let p1 = a * q - p;
            let q1 = (dd - p1 * p1) / q;
            p = p1;
            q = q1;
        }
        panic!("oracle found no period");
    }

    #[test]
    fn continued_fractions_match_oracle() {
        // √2 → [1; 2,2,2,...]
        let cf = continued_fraction_period(&fe(0, 1, 1, 2)).unwrap();
        let (pre, per) = cf_oracle(0, 1, 2, 100);
        assert_eq!(cf.preperiod, pre.iter().map(|&x| IBig::from(x)).collect::<Vec<_>>());
        assert_eq!(cf.period, per.iter().map(|&x| IBig::from(x)).collect::<Vec<_>>());
        assert_eq!(cf.preperiod, vec![IBig::from(1)]);
        assert_eq!(cf.period, vec![IBig::from(2)]);

        // golden mean → pure period [1]
        let cf = continued_fraction_period(&fe(1, 1, 2, 5)).unwrap();
        assert!(cf.preperiod.is_empty());
        assert_eq!(cf.period, vec![IBig::from(1)]);

        // √7 → preperiod [2], period [1,1,1,4]
        let cf = continued_fraction_period(&fe(0, 1, 1, 7)).unwrap();
        let (pre, per) = cf_oracle(0, 1, 7, 100);
        assert_eq!(cf.preperiod, pre.iter().map(|&x| IBig::from(x)).collect::<Vec<_>>());
        assert_eq!(cf.period, per.iter().map(|&x| IBig::from(x)).collect::<Vec<_>>());
        assert_eq!(
            cf.period,
            vec![IBig::from(1), IBig::from(1), IBig::from(1), IBig::from(4)]
        );
    }

    #[test]
    fn continued_fraction_rejects_rational() {
        assert!(matches!(
            continued_fraction_period(&fe(3, 0, 2, 5)),
            Err(Error::RationalTheta)
        ));
    }

    /// Exhaustive-search oracle for the minimal totally positive unit of
    /// ℤ + ℤθ: scan ε = a + bθ over a small box, keep N(ε) = 1, ε totally
    /// positive, ι₁(ε) > 1 and εθ ∈ ℤ + ℤθ, return the ι₁-smallest.
    fn minimal_unit_oracle(theta: &FieldElement) -> FieldElement {
        let d = theta.d();
        let one = FieldElement::one(d);
        let mut best: Option<FieldElement> = None;
        for a in -60i64..=60 {
            for b in -60i64..=60 {
                let cand = FieldElement::from_integer(a, d)
                    .add(&FieldElement::from_integer(b, d).mul(theta));
                if cand.norm() != RBig::ONE || !cand.is_totally_positive() {
                    continue;
                }
                if cand.cmp_embedding(&one, 1) != std::cmp::Ordering::Greater {
                    continue;
                }
                if phi_of_unit(&cand, theta).is_err() {
                    continue;
                }
                match &best {
                    None => best = Some(cand),
                    Some(b0) => {
                        if cand.cmp_embedding(b0, 1) == std::cmp::Ordering::Less {
                            best = Some(cand)
                        }
                    }
                }
            }
        }
        best.expect("oracle box too small")
    }

    #[test]
    fn unit_system_d5() {
        let us = UnitSystem::new(5).unwrap();
        assert_eq!(us.epsilon(), &fe(3, 1, 2, 5));
        assert_eq!(us.phi(), &Mat2::new(1, 1, 1, 2));
        assert_eq!(us.epsilon(), &minimal_unit_oracle(us.theta()));
    }

    #[test]
    fn unit_system_d2() {
        let us = UnitSystem::new(2).unwrap();
        assert_eq!(us.epsilon(), &fe(3, 2, 1, 2));
        assert_eq!(us.phi(), &Mat2::new(3, 2, 4, 3));
        assert_eq!(us.epsilon(), &minimal_unit_oracle(us.theta()));
    }

    #[test]
    fn unit_system_invariants_several_d() {
        for d in [2u64, 3, 5, 7, 13, 11] {
            let us = UnitSystem::new(d).unwrap();
            assert_eq!(us.phi().det(), IBig::ONE, "d={d}");
            assert_eq!(us.epsilon().norm(), RBig::ONE, "d={d}");
            assert!(us.epsilon().is_totally_positive(), "d={d}");
            // trace φ_ε = ε + ε' exactly
            let tr = us.epsilon().trace();
            assert_eq!(
                tr,
                RBig::from_parts(us.phi().trace(), UBig::ONE),
                "d={d}"
            );
            assert!(us.fixed_points_check(), "d={d}");
            assert_eq!(us.epsilon(), &minimal_unit_oracle(us.theta()), "d={d}");
        }
    }

    #[test]
    fn fixed_points_of_identity() {
        let id = Mat2::identity();
        for d in [2u64, 5] {
            let us = UnitSystem::new(d).unwrap();
            assert!(fixed_points_hold(&id, us.theta()).unwrap());
        }
    }

    #[test]
    fn fixed_points_d2_explicit() {
        // x = 1/√2 under [[3,2],[4,3]]: (3x+2)/(4x+3) = x, exact field check
        let us = UnitSystem::new(2).unwrap();
        assert!(us.fixed_points_check());
    }

    #[test]
    fn unit_system_rejects_rational_theta() {
        assert!(matches!(
            UnitSystem::with_theta(fe(1, 0, 2, 5)),
            Err(Error::RationalTheta)
        ));
    }

    #[test]
    fn unit_trace_matches_powers() {
        for d in [2u64, 5, 13] {
            let us = UnitSystem::new(d).unwrap();
            for k in 0u64..8 {
                let pow = us.epsilon_pow(k as i64);
                let tr = pow.trace();
                assert_eq!(tr, RBig::from_parts(us.unit_trace(k), UBig::ONE));
            }
        }
    }

    #[test]
    fn exponent_multiplier_squares_unit() {
        let us = UnitSystem::new(5).unwrap();
        let sq = us.clone().with_exponent(2).unwrap();
        assert_eq!(sq.epsilon(), &us.epsilon().mul(us.epsilon()));
        assert_eq!(sq.phi(), &us.phi().mul(us.phi()));
        assert_eq!(sq.phi().det(), IBig::ONE);
    }

    #[test]
    fn cf_fold_reconstructs_unit_power() {
        // Folding the period matrices yields a matrix whose bottom row
        // evaluates at θ to ε or a root of ε (ε = that unit squared when the
        // CF automorph has norm −1). Checked exactly.
        for d in [2u64, 3, 5, 7, 13] {
            let us = UnitSystem::new(d).unwrap();
            let cf = us.continued_fraction();
            let fold = |digits: &[IBig]| {
                let mut m = Mat2::identity();
                for a in digits {
                    m = m.mul(&Mat2::new(a.clone(), 1, 1, 0));
                }
                m
            };
            let m_pre = fold(&cf.preperiod);
            let g = m_pre.mul(&fold(&cf.period)).mul(&m_pre.inv_unimodular());
            let mut e0 = FieldElement::from_integer(g.m[1][0].clone(), d)
                .mul(us.theta())
                .add(&FieldElement::from_integer(g.m[1][1].clone(), d));
            if e0.sign_embedding1() < 0 {
                e0 = e0.neg();
            }
            let eps = us.epsilon();
            let matches_power =
                &e0 == eps || e0.mul(&e0) == *eps || e0.inv().unwrap() == *eps;
            assert!(matches_power, "d={d}: folded unit {e0:?} vs epsilon {eps:?}");
        }
    }

    #[test]
    fn parse_theta_spec_roundtrip() {
        let (a, b, c) = parse_theta_spec("1, 1, 2").unwrap();
        assert_eq!((a, b, c), (IBig::from(1), IBig::from(1), IBig::from(2)));
        assert!(parse_theta_spec("1,1").is_err());
        assert!(parse_theta_spec("1,1,0").is_err());
        assert!(parse_theta_spec("x,1,2").is_err());
    }
}
