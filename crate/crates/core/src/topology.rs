//! Integer-matrix topology of the hyperbolic torus bundle X_ε: Smith normal
//! form, homology and K-theory groups from Coker(1 − φ_ε), and the range
//! ℤ + ℤ·θ(θ'−θ)⁻¹ of the canonical trace on K₀ with a membership search.

use dashu::integer::IBig;
use dashu::rational::RBig;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadfield::{FieldElement, Mat2, UnitSystem};

/// Dense integer matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<IBig>,
}

impl IMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![IBig::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = IBig::ONE;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = IBig::from(*v);
            }
        }
        m
    }

    pub fn from_mat2(m2: &Mat2) -> Self {
        let mut m = Self::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                m[(i, j)] = m2.m[i][j].clone();
            }
        }
        m
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = IBig::ZERO;
                for k in 0..self.cols {
                    acc += &self[(i, k)] * &other[(k, j)];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            let ia = a * self.cols + j;
            let ib = b * self.cols + j;
            self.data.swap(ia, ib);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            let ia = i * self.cols + a;
            let ib = i * self.cols + b;
            self.data.swap(ia, ib);
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let v = -self[(r, j)].clone();
            self[(r, j)] = v;
        }
    }

    /// row a += q * row b
    fn add_row_multiple(&mut self, a: usize, b: usize, q: &IBig) {
        for j in 0..self.cols {
            let v = &self[(a, j)] + q * &self[(b, j)];
            self[(a, j)] = v;
        }
    }

    /// col a += q * col b
    fn add_col_multiple(&mut self, a: usize, b: usize, q: &IBig) {
        for i in 0..self.rows {
            let v = &self[(i, a)] + q * &self[(i, b)];
            self[(i, a)] = v;
        }
    }
}

impl std::ops::Index<(usize, usize)> for IMat {
    type Output = IBig;
    fn index(&self, (i, j): (usize, usize)) -> &IBig {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut IBig {
        &mut self.data[i * self.cols + j]
    }
}

/// Result of a Smith decomposition U·M·V = D with U, V unimodular and D
/// diagonal with a divisibility chain d₁ | d₂ | …
#[derive(Clone, Debug)]
pub struct Snf {
    pub u: IMat,
    pub d: IMat,
    pub v: IMat,
    pub det_u: i8,
    pub det_v: i8,
}

fn abs_ibig(x: &IBig) -> IBig {
    if x < &IBig::ZERO {
        -x.clone()
    } else {
        x.clone()
    }
}

/// Smith normal form of an arbitrary integer matrix by elementary row and
/// column operations with minimal-pivot selection.
pub fn smith_normal_form(m: &IMat) -> Snf {
    let mut d = m.clone();
    let mut u = IMat::identity(m.rows);
    let mut v = IMat::identity(m.cols);
    let mut det_u: i8 = 1;
    let mut det_v: i8 = 1;
    let rank_bound = m.rows.min(m.cols);

    for t in 0..rank_bound {
        // find a nonzero pivot of minimal absolute value in the submatrix
        let mut pivot: Option<(usize, usize)> = None;
        for i in t..m.rows {
            for j in t..m.cols {
                if d[(i, j)] != IBig::ZERO {
                    match pivot {
                        None => pivot = Some((i, j)),
                        Some((pi, pj)) => {
                            if abs_ibig(&d[(i, j)]) < abs_ibig(&d[(pi, pj)]) {
                                pivot = Some((i, j));
                            }
                        }
                    }
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        d.swap_rows(t, pi);
        u.swap_rows(t, pi);
        if t != pi {
            det_u = -det_u;
        }
        d.swap_cols(t, pj);
        v.swap_cols(t, pj);
        if t != pj {
            det_v = -det_v;
        }

        // eliminate row and column t
        loop {
            let mut dirty = false;
            for i in t + 1..m.rows {
                if d[(i, t)] != IBig::ZERO {
                    let q = -(&d[(i, t)] / &d[(t, t)]);
                    d.add_row_multiple(i, t, &q);
                    u.add_row_multiple(i, t, &q);
                    if d[(i, t)] != IBig::ZERO {
                        // remainder smaller than pivot: swap it up and restart
                        d.swap_rows(t, i);
                        u.swap_rows(t, i);
                        det_u = -det_u;
                        dirty = true;
                    }
                }
            }
            for j in t + 1..m.cols {
                if d[(t, j)] != IBig::ZERO {
                    let q = -(&d[(t, j)] / &d[(t, t)]);
                    d.add_col_multiple(j, t, &q);
                    v.add_col_multiple(j, t, &q);
                    if d[(t, j)] != IBig::ZERO {
                        d.swap_cols(t, j);
                        v.swap_cols(t, j);
                        det_v = -det_v;
                        dirty = true;
                    }
                }
            }
            if !dirty {
                let row_clear = (t + 1..m.rows).all(|i| d[(i, t)] == IBig::ZERO);
                let col_clear = (t + 1..m.cols).all(|j| d[(t, j)] == IBig::ZERO);
                if row_clear && col_clear {
                    break;
                }
            }
        }

        if d[(t, t)] < IBig::ZERO {
            d.negate_row(t);
            u.negate_row(t);
            det_u = -det_u;
        }
    }

    // enforce the divisibility chain d_t | d_{t+1}
    loop {
        let mut fixed = true;
        for t in 0..rank_bound.saturating_sub(1) {
            let a = d[(t, t)].clone();
            let b = d[(t + 1, t + 1)].clone();
            if a == IBig::ZERO && b != IBig::ZERO {
                // zero before nonzero: swap diagonal entries
                d.swap_rows(t, t + 1);
                u.swap_rows(t, t + 1);
                det_u = -det_u;
                d.swap_cols(t, t + 1);
                v.swap_cols(t, t + 1);
                det_v = -det_v;
                fixed = false;
                continue;
            }
            if a != IBig::ZERO && b != IBig::ZERO && &b % &a != IBig::ZERO {
                // mix the two diagonal positions and re-reduce the 2×2 block
                d.add_col_multiple(t, t + 1, &IBig::ONE);
                v.add_col_multiple(t, t + 1, &IBig::ONE);
                // now column t has entries (a, b); clear with euclidean steps
                loop {
                    if d[(t + 1, t)] == IBig::ZERO {
                        break;
                    }
                    let q = -(&d[(t, t)] / &d[(t + 1, t)]);
                    if q != IBig::ZERO {
                        d.add_row_multiple(t, t + 1, &q);
                        u.add_row_multiple(t, t + 1, &q);
                    }
                    if d[(t, t)] == IBig::ZERO
                        || abs_ibig(&d[(t + 1, t)]) > abs_ibig(&d[(t, t)])
                    {
                        d.swap_rows(t, t + 1);
                        u.swap_rows(t, t + 1);
                        det_u = -det_u;
                    }
                }
                // clear the (t, t+1) entry reintroduced by the column mix
                let q = -(&d[(t, t + 1)] / &d[(t, t)]);
                if q != IBig::ZERO {
                    d.add_col_multiple(t + 1, t, &q);
                    v.add_col_multiple(t + 1, t, &q);
                }
                debug_assert_eq!(d[(t, t + 1)], IBig::ZERO);
                if d[(t, t)] < IBig::ZERO {
                    d.negate_row(t);
                    u.negate_row(t);
                    det_u = -det_u;
                }
                if d[(t + 1, t + 1)] < IBig::ZERO {
                    d.negate_row(t + 1);
                    u.negate_row(t + 1);
                    det_u = -det_u;
                }
                fixed = false;
            }
        }
        if fixed {
            break;
        }
    }

    Snf { u, d, v, det_u, det_v }
}

/// A finitely generated abelian group ℤ^r ⊕ ℤ/d₁ ⊕ … with d₁ | d₂ | …
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AbelianGroup {
    pub free_rank: usize,
    pub torsion: Vec<u64>,
}

impl AbelianGroup {
    pub fn free(rank: usize) -> Self {
        Self { free_rank: rank, torsion: Vec::new() }
    }

    pub fn order(&self) -> Option<u64> {
        if self.free_rank > 0 {
            return None;
        }
        Some(self.torsion.iter().product())
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        for _ in 0..self.free_rank {
            parts.push("Z".to_string());
        }
        for t in &self.torsion {
            parts.push(format!("Z/{t}"));
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    }
}

/// Cokernel ℤ^rows / M·ℤ^cols read off the Smith form of M.
pub fn cokernel(m: &IMat) -> AbelianGroup {
    let snf = smith_normal_form(m);
    let mut torsion = Vec::new();
    let mut rank = m.rows;
    for t in 0..m.rows.min(m.cols) {
        let e = &snf.d[(t, t)];
        if *e != IBig::ZERO {
            rank -= 1;
            if *e != IBig::ONE {
                torsion.push(u64::try_from(e).expect("torsion exponent fits u64"));
            }
        }
    }
    AbelianGroup { free_rank: rank, torsion }
}

/// Integral homology of the torus bundle, indexed 0..=3.
/// H₀ = H₃ = ℤ, H₁ = ℤ ⊕ Coker(1 − φ_ε), H₂ = ℤ (the torsion of the
/// cokernel contributes nothing to H₂ since Hom of a finite group into ℤ
/// vanishes).
pub fn homology(us: &UnitSystem) -> [AbelianGroup; 4] {
    let coker = cokernel(&one_minus_phi(us));
    let h1 = AbelianGroup { free_rank: 1 + coker.free_rank, torsion: coker.torsion };
    [AbelianGroup::free(1), h1, AbelianGroup::free(1), AbelianGroup::free(1)]
}

/// 1 − φ_ε as an integer matrix.
pub fn one_minus_phi(us: &UnitSystem) -> IMat {
    let mut m = IMat::identity(2);
    for i in 0..2 {
        for j in 0..2 {
            let v = &m[(i, j)] - &us.phi().m[i][j];
            m[(i, j)] = v;
        }
    }
    m
}

/// K-theory of the twisted algebra of the bundle group together with the
/// matching against the cohomology of the bundle.
#[derive(Clone, Debug, Serialize)]
pub struct KTheory {
    pub k0: AbelianGroup,
    pub k1: AbelianGroup,
    pub h_even: AbelianGroup,
    pub h_odd: AbelianGroup,
    /// K₀ ≅ H^odd and K₁ ≅ H^even, as computed groups.
    pub matches_cohomology: bool,
}

pub fn k_theory(us: &UnitSystem) -> KTheory {
    let coker = cokernel(&one_minus_phi(us));
    let k0 = AbelianGroup::free(2);
    let k1 = AbelianGroup { free_rank: 2 + coker.free_rank, torsion: coker.torsion.clone() };
    // H^even = H⁰ ⊕ H² with H² = ℤ ⊕ Coker, H^odd = H¹ ⊕ H³ = ℤ²
    let h_even = AbelianGroup { free_rank: 2 + coker.free_rank, torsion: coker.torsion };
    let h_odd = AbelianGroup::free(2);
    let matches_cohomology = k0 == h_odd && k1 == h_even;
    KTheory { k0, k1, h_even, h_odd, matches_cohomology }
}

/// Search cap for trace-range membership; ℤ + ℤu is dense in ℝ for
/// irrational u, so an uncapped search is ill-posed.
pub const MEMBERSHIP_CAP: i64 = 1_000_000;

/// The range ℤ + ℤu of the canonical trace on K₀, with u = θ(θ'−θ)⁻¹.
#[derive(Clone, Debug)]
pub struct TraceRange {
    u: FieldElement,
    irrational: bool,
}

impl TraceRange {
    pub fn u(&self) -> &FieldElement {
        &self.u
    }

    /// Exact irrationality of the generator. u is rational precisely when θ
    /// is a pure surd b√d/c (then u = −1/2), in which case ℤ + ℤu is not
    /// dense; the flag records this.
    pub fn is_irrational(&self) -> bool {
        self.irrational
    }

    pub fn u_f64(&self) -> f64 {
        self.u.to_f64_embedding1()
    }

    /// Finds integers (p, q), |q| ≤ cap, with |x − p − q·ι₁(u)| < tol and
    /// (|p|, |q|) minimal lexicographically. Returns None when no pair
    /// within the cap matches.
    pub fn membership(&self, x: f64, tol: f64, cap: i64) -> Option<(i64, i64)> {
        if !(tol > 0.0) {
            return None;
        }
        let u = self.u_f64();
        let mut best: Option<(i64, i64)> = None;
        let mut best_key = (i64::MAX, i64::MAX, i64::MAX, i64::MAX);
        for q in -cap..=cap {
            let target = x - q as f64 * u;
            let p = target.round();
            if (target - p).abs() < tol {
                let p = p as i64;
                let key = (p.abs(), q.abs(), p, q);
                if key < best_key {
                    best_key = key;
                    best = Some((p, q));
                }
            }
        }
        best
    }
}

/// u = θ(θ'−θ)⁻¹, exactly.
pub fn trace_range(us: &UnitSystem) -> Result<TraceRange> {
    let theta = us.theta();
    let gap = theta.conj().sub(theta);
    if gap.is_zero() {
        return Err(Error::RationalTheta);
    }
    let u = theta.div(&gap)?;
    let irrational = !u.is_rational();
    Ok(TraceRange { u, irrational })
}

/// Machine-readable topology report (the `topology` CLI payload).
#[derive(Clone, Debug, Serialize)]
pub struct TopologyReport {
    pub d: u64,
    pub phi: [[i64; 2]; 2],
    /// H₀ … H₃
    pub h: Vec<AbelianGroup>,
    pub k0: AbelianGroup,
    pub k1: AbelianGroup,
    pub matches_cohomology: bool,
    pub coker_order: u64,
    pub trace_range_u: TraceRangeJson,
}

/// u = (num_a + num_b·√d)/den.
#[derive(Clone, Debug, Serialize)]
pub struct TraceRangeJson {
    pub num_a: i64,
    pub num_b: i64,
    pub den: i64,
    pub irrational: bool,
    pub value: f64,
}

pub fn report(us: &UnitSystem) -> Result<TopologyReport> {
    let h = homology(us).to_vec();
    let kt = k_theory(us);
    let tr = trace_range(us)?;
    let coker = cokernel(&one_minus_phi(us));
    let phi = &us.phi().m;
    let as_i64 = |x: &IBig| i64::try_from(x).expect("phi entry fits i64");
    Ok(TopologyReport {
        d: us.d(),
        phi: [
            [as_i64(&phi[0][0]), as_i64(&phi[0][1])],
            [as_i64(&phi[1][0]), as_i64(&phi[1][1])],
        ],
        h,
        k0: kt.k0,
        k1: kt.k1,
        matches_cohomology: kt.matches_cohomology,
        coker_order: coker.order().unwrap_or(0),
        trace_range_u: TraceRangeJson {
            num_a: i64::try_from(tr.u().coeff_a()).expect("small"),
            num_b: i64::try_from(tr.u().coeff_b()).expect("small"),
            den: i64::try_from(tr.u().coeff_c()).expect("small"),
            irrational: tr.is_irrational(),
            value: tr.u_f64(),
        },
    })
}

/// Determinant by cofactor expansion (small matrices only).
pub fn det_small(m: &IMat) -> IBig {
    assert_eq!(m.rows, m.cols);
    match m.rows {
        0 => IBig::ONE,
        1 => m[(0, 0)].clone(),
        2 => &m[(0, 0)] * &m[(1, 1)] - &m[(0, 1)] * &m[(1, 0)],
        n => {
            // cofactor expansion along the first row; fine for the small
            // unimodular factors produced here
            let mut acc = IBig::ZERO;
            for j in 0..n {
                if m[(0, j)] == IBig::ZERO {
                    continue;
                }
                let mut sub = IMat::zeros(n - 1, n - 1);
                for i in 1..n {
                    let mut jj = 0;
                    for k in 0..n {
                        if k == j {
                            continue;
                        }
                        sub[(i - 1, jj)] = m[(i, k)].clone();
                        jj += 1;
                    }
                }
                let sign = if j % 2 == 0 { IBig::ONE } else { IBig::NEG_ONE };
                acc += sign * &m[(0, j)] * det_small(&sub);
            }
            acc
        }
    }
}

/// The exact rational N(λ) of the trace-range generator etc. — shared by
/// callers needing |2 − tr φ| checks.
pub fn coker_order_from_trace(us: &UnitSystem) -> RBig {
    let tr = us.epsilon().trace();
    let two = RBig::from(2);
    let v = two - tr;
    crate::lattice::abs_rbig(&v)
}
