//! Harper operators: the rational-flux Bloch family U + U* + V + V* on the
//! twisted ℤ²-algebra (whose flux sweep is the Hofstadter butterfly), the
//! six-generator operator U + U* + V + V* + W + W* of the twisted ℤ²⋊ℤ
//! algebra on an open finite section, integrated densities of states, gap
//! detection, and gap labelling against the trace-range module ℤ + ℤu.

use std::fmt;
use std::str::FromStr;

use faer::complex_native::c64;
use faer::{Mat, Side};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ncalgebra::cocycle::{gcd_i64, FluxValue, SolvCocycle};
use crate::ncalgebra::twisted::{SolvRing, TwistedElement};
use crate::quadfield::UnitSystem;
use crate::topology::TraceRange;

/// A rational magnetic flux p/q in lowest terms with 0 ≤ p < q.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Flux {
    pub p: u64,
    pub q: u64,
}

impl Flux {
    /// Strict constructor: errors on non-reduced or out-of-range input.
    pub fn new(p: i64, q: i64) -> Result<Self> {
        if q <= 0 || p < 0 || p >= q || gcd_i64(p.max(1), q) != 1 {
            return Err(Error::BadFlux(p, q));
        }
        if p == 0 && q != 1 {
            return Err(Error::BadFlux(p, q));
        }
        Ok(Self { p: p as u64, q: q as u64 })
    }

    /// Wrapping constructor: reduces p mod q (gcd must still be 1), so
    /// spectra computed through it are bit-identical to the canonical
    /// representative.
    pub fn wrapped(p: i64, q: i64) -> Result<Self> {
        if q <= 0 {
            return Err(Error::BadFlux(p, q));
        }
        let pm = p.rem_euclid(q);
        if pm == 0 {
            return Ok(Self { p: 0, q: 1 });
        }
        if gcd_i64(pm, q) != 1 {
            return Err(Error::BadFlux(p, q));
        }
        Ok(Self { p: pm as u64, q: q as u64 })
    }

    /// Best rational approximation with denominator ≤ max_q, by continued
    /// fraction convergents (for irrational flux values).
    pub fn approximating(x: f64, max_q: u64) -> Self {
        let frac = x.rem_euclid(1.0);
        let (mut h0, mut k0, mut h1, mut k1) = (1i64, 0i64, frac.floor() as i64, 1i64);
        let mut rem = frac;
        loop {
            rem = rem.fract();
            if rem.abs() < 1e-15 {
                break;
            }
            rem = 1.0 / rem;
            let a = rem.floor() as i64;
            let h2 = a * h1 + h0;
            let k2 = a * k1 + k0;
            if k2 as u64 > max_q {
                break;
            }
            h0 = h1;
            k0 = k1;
            h1 = h2;
            k1 = k2;
        }
        Flux::wrapped(h1, k1).unwrap_or(Flux { p: 0, q: 1 })
    }

    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

impl fmt::Display for Flux {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for Flux {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (ps, qs) = s
            .split_once('/')
            .ok_or_else(|| Error::Parse(format!("flux must be p/q, got {s:?}")))?;
        let p: i64 = ps.trim().parse().map_err(|e| Error::Parse(format!("bad p in flux: {e}")))?;
        let q: i64 = qs.trim().parse().map_err(|e| Error::Parse(format!("bad q in flux: {e}")))?;
        Flux::new(p, q)
    }
}

/// One spectral band [lo, hi].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

/// One detected gap with the integrated density of states on it.
#[derive(Clone, Debug, Serialize)]
pub struct Gap {
    pub lo: f64,
    pub hi: f64,
    pub ids: f64,
    /// exact eigenvalue-count fraction below the gap (numerator, denominator)
    pub ids_count: (u64, u64),
}

/// Sorted eigenvalue samples with band/gap structure and IDS data.
#[derive(Clone, Debug)]
pub struct SpectrumResult {
    /// all sampled eigenvalues, ascending
    pub eigenvalues: Vec<f64>,
    /// trust mask (false = boundary-dominated finite-section artifact)
    pub trusted: Vec<bool>,
    pub bands: Vec<Band>,
    pub gaps: Vec<Gap>,
    pub hermiticity_defect: f64,
    pub generator_count: usize,
}

impl SpectrumResult {
    /// IDS over the trusted eigenvalues.
    pub fn ids_at(&self, e: f64) -> f64 {
        let total = self.trusted.iter().filter(|t| **t).count();
        if total == 0 {
            return 0.0;
        }
        let below = self
            .eigenvalues
            .iter()
            .zip(&self.trusted)
            .filter(|(x, t)| **t && **x <= e)
            .count();
        below as f64 / total as f64
    }

    pub fn trusted_count(&self) -> usize {
        self.trusted.iter().filter(|t| **t).count()
    }

    pub fn untrusted_count(&self) -> usize {
        self.trusted.len() - self.trusted_count()
    }

    pub fn spectral_radius_bound_ok(&self) -> bool {
        let bound = self.generator_count as f64 + 1e-9;
        self.eigenvalues.iter().all(|e| e.abs() <= bound)
    }
}

/// Gap detection on a sorted (trusted) eigenvalue list: a gap is a spacing
/// of distinct values larger than 10× the local mean distinct spacing and
/// larger than 1e−3 absolute. Spacing statistics run over distinct values
/// (grid samples carry high multiplicities); IDS counts keep multiplicity.
fn detect_gaps(sorted: &[f64]) -> (Vec<Band>, Vec<Gap>) {
    let n = sorted.len();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    // distinct values with multiplicities (merge within 1e−12)
    let mut vals: Vec<f64> = Vec::new();
    let mut mult: Vec<u64> = Vec::new();
    for &e in sorted {
        match vals.last() {
            Some(&v) if (e - v).abs() <= 1e-12 => *mult.last_mut().unwrap() += 1,
            _ => {
                vals.push(e);
                mult.push(1);
            }
        }
    }
    let nd = vals.len();
    if nd == 1 {
        return (vec![Band { lo: vals[0], hi: vals[0] }], Vec::new());
    }
    let spacings: Vec<f64> = (0..nd - 1).map(|i| vals[i + 1] - vals[i]).collect();
    let window = 25usize;
    let mut cut_after: Vec<usize> = Vec::new();
    for i in 0..spacings.len() {
        let delta = spacings[i];
        if delta <= 1e-3 {
            continue;
        }
        let lo_w = i.saturating_sub(window);
        let hi_w = (i + window).min(spacings.len() - 1);
        let mut sum = 0.0;
        let mut cnt = 0.0;
        for (j, s) in spacings[lo_w..=hi_w].iter().enumerate() {
            if lo_w + j != i {
                sum += s;
                cnt += 1.0;
            }
        }
        let local_mean = if cnt > 0.0 { sum / cnt } else { 0.0 };
        if delta > 10.0 * local_mean {
            cut_after.push(i);
        }
    }
    let cumulative: Vec<u64> = mult
        .iter()
        .scan(0u64, |acc, &m| {
            *acc += m;
            Some(*acc)
        })
        .collect();
    let mut bands = Vec::new();
    let mut gaps = Vec::new();
    let mut start = 0usize;
    for &cut in &cut_after {
        bands.push(Band { lo: vals[start], hi: vals[cut] });
        let below = cumulative[cut];
        gaps.push(Gap {
            lo: vals[cut],
            hi: vals[cut + 1],
            ids: below as f64 / n as f64,
            ids_count: reduce_fraction(below, n as u64),
        });
        start = cut + 1;
    }
    bands.push(Band { lo: vals[start], hi: vals[nd - 1] });
    (bands, gaps)
}

fn reduce_fraction(num: u64, den: u64) -> (u64, u64) {
    let g = gcd_i64(num as i64, den as i64).max(1) as u64;
    (num / g, den / g)
}

fn hermitian_eigen_sorted(h: &Mat<c64>, with_vectors: bool) -> (Vec<f64>, Option<Mat<c64>>) {
    if with_vectors {
        let evd = h.selfadjoint_eigendecomposition(Side::Lower);
        let s = evd.s();
        let n = h.nrows();
        let vals: Vec<f64> = (0..n).map(|i| s.column_vector().read(i).re).collect();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
        let sorted_vals: Vec<f64> = idx.iter().map(|&i| vals[i]).collect();
        let u = evd.u();
        let mut vectors = Mat::<c64>::zeros(n, n);
        for (col_new, &col_old) in idx.iter().enumerate() {
            for r in 0..n {
                vectors.write(r, col_new, u.read(r, col_old));
            }
        }
        (sorted_vals, Some(vectors))
    } else {
        let mut vals = h.selfadjoint_eigenvalues(Side::Lower);
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        (vals, None)
    }
}

fn hermiticity_defect(h: &Mat<c64>) -> f64 {
    let n = h.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let a = h.read(i, j);
            let b = h.read(j, i);
            let diff = ((a.re - b.re).powi(2) + (a.im + b.im).powi(2)).sqrt();
            worst = worst.max(diff);
        }
    }
    worst
}

/// The q×q Bloch matrix of the rational-flux Harper operator at momentum
/// (x = q·k₁, k₂): diagonal 2cos(2π·(j·p mod q)/q + k₂), unit hopping, and
/// the e^{±ix} boundary twist. The cosine argument is reduced with exact
/// integer arithmetic so the spectrum depends on p only through p mod q.
pub fn bloch_matrix(flux: Flux, x: f64, k2: f64) -> Mat<c64> {
    let q = flux.q as usize;
    let mut h = Mat::<c64>::zeros(q, q);
    for j in 0..q {
        let red = (j as u64 * flux.p) % flux.q;
        let diag = 2.0 * (2.0 * std::f64::consts::PI * red as f64 / flux.q as f64 + k2).cos();
        h.write(j, j, c64::new(diag, 0.0));
    }
    if q == 1 {
        let v = h.read(0, 0);
        h.write(0, 0, c64::new(v.re + 2.0 * x.cos(), 0.0));
        return h;
    }
    for j in 0..q - 1 {
        h.write(j, j + 1, c64::new(1.0, 0.0));
        h.write(j + 1, j, c64::new(1.0, 0.0));
    }
    let tw = Complex64::from_polar(1.0, x);
    let a = h.read(q - 1, 0);
    h.write(q - 1, 0, c64::new(a.re + tw.re, a.im + tw.im));
    let b = h.read(0, q - 1);
    h.write(0, q - 1, c64::new(b.re + tw.re, b.im - tw.im));
    h
}

/// Harper spectrum at rational flux over a G×G momentum grid. Exactly q
/// bands counted with multiplicity: q·G² eigenvalue samples in total.
pub fn torus_spectrum(flux: Flux, grid: u32) -> Result<SpectrumResult> {
    if grid < 8 {
        return Err(Error::TruncationTooSmall(format!(
            "momentum grid must be >= 8, got {grid}"
        )));
    }
    let g = grid as usize;
    let mut eigenvalues = Vec::with_capacity(flux.q as usize * g * g);
    let mut defect: f64 = 0.0;
    let tau = 2.0 * std::f64::consts::PI;
    for i1 in 0..g {
        let x = tau * i1 as f64 / g as f64;
        for i2 in 0..g {
            let k2 = tau * i2 as f64 / g as f64;
            let h = bloch_matrix(flux, x, k2);
            defect = defect.max(hermiticity_defect(&h));
            let (vals, _) = hermitian_eigen_sorted(&h, false);
            eigenvalues.extend(vals);
        }
    }
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (bands, gaps) = detect_gaps(&eigenvalues);
    let trusted = vec![true; eigenvalues.len()];
    Ok(SpectrumResult {
        eigenvalues,
        trusted,
        bands,
        gaps,
        hermiticity_defect: defect,
        generator_count: 4,
    })
}

/// One row of the butterfly dataset.
#[derive(Clone, Debug, Serialize)]
pub struct ButterflyRow {
    pub p: u64,
    pub q: u64,
    pub band_index: usize,
    pub lo: f64,
    pub hi: f64,
}

/// All reduced fluxes p/q with q ≤ q_max (including 0/1), ordered by (q, p).
pub fn farey_fluxes(q_max: u64) -> Vec<Flux> {
    let mut out = vec![Flux { p: 0, q: 1 }];
    for q in 2..=q_max {
        for p in 1..q {
            if gcd_i64(p as i64, q as i64) == 1 {
                out.push(Flux { p, q });
            }
        }
    }
    out
}

/// Band dataset over all reduced fluxes with q ≤ q_max: the butterfly.
pub fn butterfly(q_max: u64, grid: u32) -> Result<Vec<ButterflyRow>> {
    if q_max < 2 {
        return Err(Error::InvalidParameter("q_max must be >= 2".into()));
    }
    let mut rows = Vec::new();
    for flux in farey_fluxes(q_max) {
        let spec = torus_spectrum(flux, grid)?;
        for (i, band) in spec.bands.iter().enumerate() {
            rows.push(ButterflyRow {
                p: flux.p,
                q: flux.q,
                band_index: i,
                lo: band.lo,
                hi: band.hi,
            });
        }
    }
    Ok(rows)
}

pub fn write_butterfly_csv<W: std::io::Write>(
    rows: &[ButterflyRow],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "p,q,band_index,lo,hi")?;
    for r in rows {
        writeln!(w, "{},{},{},{:.17e},{:.17e}", r.p, r.q, r.band_index, r.lo, r.hi)?;
    }
    Ok(())
}

/// The Harper element U + U* + V + V* + W + W* of the twisted ℤ²⋊ℤ ring.
pub fn solv_harper_element(ring: &SolvRing) -> TwistedElement<SolvRing> {
    let gens: [(i64, i64, i64); 3] = [(0, 1, 0), (1, 0, 0), (0, 0, 1)];
    let mut acc = TwistedElement::zero(ring.clone());
    for g in gens {
        let r = TwistedElement::delta(ring.clone(), g);
        acc = acc.add(&r).expect("same ring");
        acc = acc.add(&r.star()).expect("same ring");
    }
    acc
}

/// Finite-section parameters of the solvable-group Harper operator.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolvTruncation {
    pub r: i64,
    pub kc: i64,
}

fn solv_basis(r: i64, kc: i64) -> Vec<(i64, i64, i64)> {
    let mut basis = Vec::new();
    for k in -kc..=kc {
        for n in -r..=r {
            for m in -r..=r {
                basis.push((n, m, k));
            }
        }
    }
    basis
}

/// Materializes the right-regular matrix of a ring element on the finite
/// basis box: R_g δ_α = σ̃(α·g⁻¹, g)·δ_{α·g⁻¹}; hops leaving the box are
/// dropped (open boundary).
pub fn right_regular_matrix(
    elem: &TwistedElement<SolvRing>,
    basis: &[(i64, i64, i64)],
) -> Mat<c64> {
    use crate::ncalgebra::twisted::TwistedRing;
    use std::collections::HashMap;
    let ring = elem.ring().clone();
    let index: HashMap<(i64, i64, i64), usize> =
        basis.iter().copied().enumerate().map(|(i, b)| (b, i)).collect();
    let n = basis.len();
    let mut h = Mat::<c64>::zeros(n, n);
    for (g, coeff) in elem.support() {
        let ginv = ring.invert(*g);
        for (col, &alpha) in basis.iter().enumerate() {
            let target = ring.compose(alpha, ginv);
            if let Some(&row) = index.get(&target) {
                let phase = ring.cocycle(target, *g);
                let v = coeff * phase;
                let old = h.read(row, col);
                h.write(row, col, c64::new(old.re + v.re, old.im + v.im));
            }
        }
    }
    h
}

/// Spectrum of the six-generator Harper operator of the twisted ℤ²⋊ℤ
/// algebra on the open box |n|,|m| ≤ R, |k| ≤ Kc. Eigenvalues whose
/// eigenvector carries more than half of its weight on the box boundary are
/// flagged untrusted; IDS and gaps are computed over the trusted part.
pub fn solv_spectrum(
    us: &UnitSystem,
    flux: FluxValue,
    r: i64,
    kc: i64,
    potential: Option<&TwistedElement<SolvRing>>,
) -> Result<SpectrumResult> {
    use crate::ncalgebra::twisted::TwistedRing;
    if r < 4 || kc < 1 {
        return Err(Error::TruncationTooSmall(format!(
            "need R >= 4 and Kc >= 1, got R={r}, Kc={kc}"
        )));
    }
    let ring = SolvRing(SolvCocycle::for_unit_system(flux, us));
    let basis = solv_basis(r, kc);
    let mut elem = solv_harper_element(&ring);
    if let Some(v) = potential {
        let vdev = v.distance(&v.star());
        if vdev > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "potential must be self-adjoint; star deviation {vdev}"
            )));
        }
        elem = elem.add(v).map_err(|_| Error::CocycleMismatch)?;
    }

    // interior = sites from which every generator hop stays in the box
    let interior = {
        let hops: Vec<(i64, i64, i64)> = elem.support().map(|(g, _)| *g).collect();
        basis
            .iter()
            .filter(|&&alpha| {
                hops.iter().all(|g| {
                    let t = ring.compose(alpha, ring.invert(*g));
                    t.0.abs() <= r && t.1.abs() <= r && t.2.abs() <= kc
                })
            })
            .count()
    };
    if interior < 100 {
        return Err(Error::TruncationTooSmall(format!(
            "only {interior} interior sites; need at least 100"
        )));
    }

    let h = right_regular_matrix(&elem, &basis);
    let defect = hermiticity_defect(&h);
    let (vals, vectors) = hermitian_eigen_sorted(&h, true);
    let vectors = vectors.expect("requested vectors");

    // boundary concentration flags
    let boundary: Vec<bool> = basis
        .iter()
        .map(|&(n, m, k)| n.abs() == r || m.abs() == r || k.abs() == kc)
        .collect();
    let ndim = basis.len();
    let mut trusted = Vec::with_capacity(ndim);
    for col in 0..ndim {
        let mut total = 0.0f64;
        let mut on_boundary = 0.0f64;
        for (row, on_b) in boundary.iter().enumerate() {
            let a = vectors.read(row, col);
            let w = a.re * a.re + a.im * a.im;
            total += w;
            if *on_b {
                on_boundary += w;
            }
        }
        trusted.push(on_boundary <= 0.5 * total);
    }

    let trusted_vals: Vec<f64> = vals
        .iter()
        .zip(&trusted)
        .filter(|(_, t)| **t)
        .map(|(v, _)| *v)
        .collect();
    let (bands, gaps) = detect_gaps(&trusted_vals);
    Ok(SpectrumResult {
        eigenvalues: vals,
        trusted,
        bands,
        gaps,
        hermiticity_defect: defect,
        generator_count: 6,
    })
}

/// The label module the gap IDS values are matched against.
#[derive(Clone, Copy, Debug)]
pub enum LabelModule {
    /// ℤ + ℤθ mod 1 (torus case)
    Theta(f64),
    /// ℤ + ℤu mod 1 with u = θ(θ'−θ)⁻¹ (solvable case)
    TraceU(f64),
}

impl LabelModule {
    pub fn generator(&self) -> f64 {
        match self {
            Self::Theta(t) | Self::TraceU(t) => *t,
        }
    }

    pub fn from_trace_range(tr: &TraceRange) -> Self {
        Self::TraceU(tr.u_f64())
    }
}

/// Search cap |q| ≤ 50 for gap labels; ℤ + ℤu is dense, so unbounded
/// matching is meaningless.
pub const LABEL_CAP: i64 = 50;

/// A gap IDS matched to the nearest point p + q·u of the label module.
#[derive(Clone, Debug, Serialize)]
pub struct GapLabel {
    pub lo: f64,
    pub hi: f64,
    pub ids: f64,
    pub label_p: i64,
    pub label_q: i64,
    pub residual: f64,
}

/// Matches every detected gap IDS against the label module, reporting the
/// best (p, q) with |q| ≤ cap and the residual |ids − p − q·u|.
pub fn gap_labels(spec: &SpectrumResult, module: LabelModule, cap: i64) -> Vec<GapLabel> {
    let u = module.generator();
    spec.gaps
        .iter()
        .map(|gap| {
            let x = gap.ids;
            let mut best = (f64::INFINITY, 0i64, 0i64);
            for q in -cap..=cap {
                let target = x - q as f64 * u;
                let p = target.round() as i64;
                let residual = (target - p as f64).abs();
                let better = residual < best.0 - 1e-18
                    || (residual <= best.0 + 1e-18
                        && (q.abs(), q, p) < (best.2.abs(), best.2, best.1));
                if better {
                    best = (residual, p, q);
                }
            }
            GapLabel {
                lo: gap.lo,
                hi: gap.hi,
                ids: gap.ids,
                label_p: best.1,
                label_q: best.2,
                residual: best.0,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flux_parsing_and_validation() {
        assert_eq!(Flux::from_str("3/7").unwrap(), Flux { p: 3, q: 7 });
        assert!(Flux::from_str("4/8").is_err()); // not reduced
        assert!(Flux::from_str("7/3").is_err()); // out of range
        assert!(Flux::from_str("x/3").is_err());
        assert_eq!(Flux::new(0, 1).unwrap(), Flux { p: 0, q: 1 });
        assert!(Flux::new(0, 3).is_err());
        assert_eq!(Flux::wrapped(7, 3).unwrap(), Flux { p: 1, q: 3 });
        assert_eq!(Flux::wrapped(-1, 3).unwrap(), Flux { p: 2, q: 3 });
    }

    #[test]
    fn flux_approximant_golden() {
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let f = Flux::approximating(golden, 21);
        assert_eq!((f.p, f.q), (13, 21));
    }

    #[test]
    fn zero_flux_single_band() {
        let spec = torus_spectrum(Flux { p: 0, q: 1 }, 64).unwrap();
        assert_eq!(spec.bands.len(), 1);
        assert!(spec.gaps.is_empty());
        assert!((spec.bands[0].lo + 4.0).abs() < 1e-3);
        assert!((spec.bands[0].hi - 4.0).abs() < 1e-3);
        assert!(spec.spectral_radius_bound_ok());
        assert_eq!(spec.eigenvalues.len(), 64 * 64);
    }

    #[test]
    fn eigenvalue_count_q_g_squared() {
        for (p, q) in [(1i64, 2i64), (1, 3), (2, 5)] {
            let flux = Flux::new(p, q).unwrap();
            let spec = torus_spectrum(flux, 12).unwrap();
            assert_eq!(spec.eigenvalues.len(), q as usize * 12 * 12, "{p}/{q}");
            assert!(spec.spectral_radius_bound_ok());
        }
    }

    #[test]
    fn half_flux_symmetric_and_matches_dense_truncation_oracle() {
        // independent oracle: Harper on a 40×40 twisted torus with
        // Landau-gauge phases, dense diagonalization, compare band support
        let flux = Flux::new(1, 2).unwrap();
        let spec = torus_spectrum(flux, 40).unwrap();
        // symmetry about zero
        let n = spec.eigenvalues.len();
        for i in 0..n {
            let mirrored = -spec.eigenvalues[n - 1 - i];
            assert!((spec.eigenvalues[i] - mirrored).abs() < 1e-9);
        }

        let l = 40usize;
        let mut h = Mat::<c64>::zeros(l * l, l * l);
        let idx = |x: usize, y: usize| x * l + y;
        let alpha = 0.5f64;
        for x in 0..l {
            for y in 0..l {
                let i = idx(x, y);
                // hop in x with phase e^{2πiαy}, periodic
                let xp = (x + 1) % l;
                let phase =
                    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * alpha * y as f64);
                let j = idx(xp, y);
                let old = h.read(j, i);
                h.write(j, i, c64::new(old.re + phase.re, old.im + phase.im));
                let old = h.read(i, j);
                h.write(i, j, c64::new(old.re + phase.re, old.im - phase.im));
                // hop in y, no phase
                let yp = (y + 1) % l;
                let j = idx(x, yp);
                let old = h.read(j, i);
                h.write(j, i, c64::new(old.re + 1.0, old.im));
                let old = h.read(i, j);
                h.write(i, j, c64::new(old.re + 1.0, old.im));
            }
        }
        let (dense_vals, _) = hermitian_eigen_sorted(&h, false);
        let lo_b = spec.eigenvalues.first().unwrap();
        let hi_b = spec.eigenvalues.last().unwrap();
        assert!((dense_vals.first().unwrap() - lo_b).abs() < 1e-2);
        assert!((dense_vals.last().unwrap() - hi_b).abs() < 1e-2);
        for &e in dense_vals.iter() {
            let inside = spec.bands.iter().any(|b| e >= b.lo - 1e-2 && e <= b.hi + 1e-2);
            assert!(inside, "dense eigenvalue {e} outside Bloch bands");
        }
    }

    #[test]
    fn flux_periodicity_bit_identical() {
        let a = torus_spectrum(Flux::wrapped(7, 3).unwrap(), 8).unwrap();
        let b = torus_spectrum(Flux::new(1, 3).unwrap(), 8).unwrap();
        assert_eq!(a.eigenvalues, b.eigenvalues);
    }

    #[test]
    fn butterfly_qmax_two() {
        let rows = butterfly(2, 8).unwrap();
        let fluxes: std::collections::BTreeSet<(u64, u64)> =
            rows.iter().map(|r| (r.p, r.q)).collect();
        assert_eq!(fluxes.len(), 2);
        assert!(fluxes.contains(&(0, 1)));
        assert!(fluxes.contains(&(1, 2)));
    }

    #[test]
    fn butterfly_farey_count() {
        // 1 + Σ_{q=2..6} φ(q) = 1 + 1 + 2 + 2 + 4 + 2 = 12
        assert_eq!(farey_fluxes(6).len(), 12);
    }

    #[test]
    fn butterfly_symmetries() {
        let g = 12u32;
        for (p, q) in [(1i64, 3i64), (2, 5)] {
            let spec = torus_spectrum(Flux::new(p, q).unwrap(), g).unwrap();
            let spec_c = torus_spectrum(Flux::new(q - p, q).unwrap(), g).unwrap();
            let n = spec.eigenvalues.len();
            for i in 0..n {
                // flux ↦ 1 − flux: same spectrum
                assert!((spec.eigenvalues[i] - spec_c.eigenvalues[i]).abs() < 1e-10);
                // E ↦ −E at fixed flux
                assert!((spec.eigenvalues[i] + spec.eigenvalues[n - 1 - i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn torus_gap_ids_are_j_over_q() {
        let flux = Flux::new(1, 3).unwrap();
        let spec = torus_spectrum(flux, 16).unwrap();
        assert!(!spec.gaps.is_empty());
        for gap in &spec.gaps {
            let (num, den) = gap.ids_count;
            assert_eq!(3 % den, 0, "ids {num}/{den} not of the form j/3");
            assert!(num < den);
        }
    }

    #[test]
    fn gap_labels_in_theta_module() {
        let flux = Flux::new(1, 3).unwrap();
        let spec = torus_spectrum(flux, 16).unwrap();
        let labels = gap_labels(&spec, LabelModule::Theta(flux.value()), LABEL_CAP);
        for l in &labels {
            assert!(l.residual < 1e-9, "gap at ids {} has residual {}", l.ids, l.residual);
        }
        assert_eq!(labels.len(), spec.gaps.len());
    }

    #[test]
    fn golden_approximant_largest_gap_near_theta() {
        // band-count oracle at the rational approximant 13/21 of the golden
        // mean: the widest gap carries IDS within 5e−2 of θ mod 1
        let flux = Flux::new(13, 21).unwrap();
        let spec = torus_spectrum(flux, 12).unwrap();
        let widest = spec
            .gaps
            .iter()
            .max_by(|a, b| (a.hi - a.lo).partial_cmp(&(b.hi - b.lo)).unwrap())
            .expect("gaps at flux 13/21");
        let theta = (5f64.sqrt() - 1.0) / 2.0;
        let dist = (widest.ids - theta).abs().min((widest.ids - (1.0 - theta)).abs());
        assert!(dist < 5e-2, "widest gap ids {} vs theta {}", widest.ids, theta);
    }

    #[test]
    fn empty_gaps_empty_labels() {
        let spec = torus_spectrum(Flux { p: 0, q: 1 }, 16).unwrap();
        let labels = gap_labels(&spec, LabelModule::Theta(0.0), LABEL_CAP);
        assert!(labels.is_empty());
    }

    #[test]
    fn solv_spectrum_basics() {
        let us = UnitSystem::new(5).unwrap();
        let tr = crate::topology::trace_range(&us).unwrap();
        let spec = solv_spectrum(&us, FluxValue::Real(tr.u_f64()), 6, 1, None).unwrap();
        assert!(spec.hermiticity_defect < 1e-15, "defect {}", spec.hermiticity_defect);
        assert!(spec.spectral_radius_bound_ok());
        assert!(spec.trusted_count() > 0);
        assert_eq!(spec.ids_at(-7.0), 0.0);
        assert!((spec.ids_at(7.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn solv_rejects_tiny_truncation() {
        let us = UnitSystem::new(5).unwrap();
        let r = solv_spectrum(&us, FluxValue::Real(0.3), 4, 1, None);
        assert!(matches!(r, Err(Error::TruncationTooSmall(_))));
    }

    #[test]
    fn solv_potential_must_be_self_adjoint() {
        let us = UnitSystem::new(5).unwrap();
        let ring = SolvRing(SolvCocycle::for_unit_system(FluxValue::Real(0.3), &us));
        let bad = TwistedElement::delta(ring.clone(), (1, 0, 0));
        let r = solv_spectrum(&us, FluxValue::Real(0.3), 6, 1, Some(&bad));
        assert!(r.is_err());
        let good = bad.add(&bad.star()).unwrap();
        let r = solv_spectrum(&us, FluxValue::Real(0.3), 6, 1, Some(&good));
        assert!(r.is_ok());
    }
}
