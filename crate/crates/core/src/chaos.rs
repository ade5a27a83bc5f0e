//! Dynamics of `(1/ν)T`: sub- and super-unit eigenvalue regions, unimodular
//! roots and periodic points, the shifted-heat threshold and orbit simulation.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{radial_eigenfunction, RadialEigenfunction};
use crate::error::{Error, Result};
use crate::model::{lp_norm_radial, strip_halfwidth, ManifoldModel, RadialFunction};
use crate::multiplier::{kernel_realization, nonconstancy_check, symbol_eval, Multiplier};
use crate::transform::{translate_radial, AxialField};

pub const REGION_MARGIN: f64 = 1e-3;
pub const REFINEMENT_LEVELS: usize = 3;
pub const ROOT_TOLERANCE: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 100;
pub const NEWTON_SEEDS: usize = 8;
pub const FD_STEP: f64 = 1e-6;
pub const MAX_ORBIT_STEPS: usize = 200;
pub const ORBIT_OVERFLOW: f64 = 1e12;
/// Gap kept between a root and the strip boundary.
pub const STRIP_GUARD: f64 = 1e-9;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// A rotation number `p/q` in lowest terms, `q ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Rotation {
    pub p: i64,
    pub q: u64,
}

impl Rotation {
    pub fn new(p: i64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::Input("rotation denominator must be positive".into()));
        }
        if gcd(p.unsigned_abs(), q) != 1 && !(p == 0 && q == 1) {
            return Err(Error::Input(format!("rotation {p}/{q} is not in lowest terms")));
        }
        Ok(Self { p, q })
    }

    /// `e^{2πi p/q}`.
    pub fn unit(&self) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * self.p as f64 / self.q as f64)
    }
}

impl fmt::Display for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for Rotation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Input(format!("cannot parse rotation '{s}', expected P/Q"));
        let (p, q) = s.trim().split_once('/').ok_or_else(bad)?;
        Rotation::new(p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?)
    }
}

impl TryFrom<String> for Rotation {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Rotation> for String {
    fn from(r: Rotation) -> String {
        r.to_string()
    }
}

/// Rotations tried by `certify_mixing`.
pub fn default_rotations() -> Vec<Rotation> {
    let mut out = vec![Rotation { p: 0, q: 1 }];
    for q in [24, 12, 8] {
        out.push(Rotation { p: 1, q });
        out.push(Rotation { p: -1, q });
    }
    out
}

/// `c_p = 4ρ²/(p q)` with `1/p + 1/q = 1`.
pub fn chaos_threshold(model: &ManifoldModel, p: f64) -> Result<f64> {
    if !(p > 2.0) || !p.is_finite() {
        return Err(Error::Input(format!("the threshold needs 2 < p < ∞, got {p}")));
    }
    let q = p / (p - 1.0);
    Ok(4.0 * model.rho * model.rho / (p * q))
}

/// `λ = s + it ∈ S_p` with `s² − t² + ρ² = Re c`. The imaginary part starts
/// at `0.8 b` and approaches `b = (1 − 2/p)ρ` geometrically until `s² > 0`.
pub fn solve_strip_parameter(model: &ManifoldModel, p: f64, c: Complex64) -> Result<Complex64> {
    let cp = chaos_threshold(model, p)?;
    let threshold = Error::Threshold { re_c: c.re, threshold: cp };
    if !(c.re > cp) || !c.re.is_finite() {
        return Err(threshold);
    }
    let b = strip_halfwidth(model, p)?;
    let rho2 = model.rho * model.rho;
    for k in 0..53 {
        let t = b * (1.0 - 0.2 * 0.5_f64.powi(k));
        let s2 = c.re + t * t - rho2;
        if s2 > 0.0 && t < b {
            return Ok(Complex64::new(s2.sqrt(), t));
        }
    }
    Err(threshold)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    MixingCertified,
    PeriodicCertified,
    ChaoticCertified,
    Inconclusive,
}

/// `λ_n` with `m(λ_n)/ν = e^{2πi p_n/q_n}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnimodularRoot {
    pub lambda: Complex64,
    pub rotation: Rotation,
    /// `|m(λ_n)/ν − e^{2πi p_n/q_n}|`.
    pub residual: f64,
    /// `m(λ_n)/ν`.
    pub ratio: Complex64,
}

/// Outcome of the root search for one rotation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RootSearch {
    pub rotation: Rotation,
    pub root: Option<UnimodularRoot>,
    /// Why no root was accepted, when none was.
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChaosCertificate {
    pub multiplier: String,
    pub nu: Complex64,
    pub lambda0: Complex64,
    pub p: f64,
    pub strip_halfwidth: f64,
    pub margin: f64,
    pub disc_radius: f64,
    pub levels: usize,
    pub samples: usize,
    pub u_plus: Vec<Complex64>,
    pub u_minus: Vec<Complex64>,
    pub roots: Vec<UnimodularRoot>,
    pub not_found: Vec<RootSearch>,
    pub verdict: Verdict,
}

impl ChaosCertificate {
    /// Rotations among the accepted roots, without repeats.
    pub fn distinct_rotations(&self) -> usize {
        let mut seen: Vec<Rotation> = Vec::new();
        for r in &self.roots {
            if !seen.contains(&r.rotation) {
                seen.push(r.rotation);
            }
        }
        seen.len()
    }
}

/// Checks shared by certification and root finding; returns `(b, m(λ₀))`.
fn check_pair(model: &ManifoldModel, t: &Multiplier, nu: Complex64, lambda0: Complex64, p: f64) -> Result<(f64, Complex64)> {
    let b = strip_halfwidth(model, p)?;
    if !(lambda0.im.abs() < b) {
        return Err(Error::Domain { lambda: lambda0.to_string(), halfwidth: b });
    }
    let m0 = symbol_eval(model, t, lambda0)?;
    if m0.norm() == 0.0 || !m0.norm().is_normal() {
        return Err(Error::Input(format!("m_T(λ₀) = {m0} is zero at λ₀ = {lambda0}")));
    }
    if (nu.norm() - m0.norm()).abs() > 1e-10 * m0.norm() {
        return Err(Error::Input(format!("|ν| = {} differs from |m_T(λ₀)| = {}", nu.norm(), m0.norm())));
    }
    Ok((b, m0))
}

/// Largest usable halfwidth: inside `S_p` and inside the symbol's strip.
fn usable_halfwidth(t: &Multiplier, b: f64) -> f64 {
    b.min(t.strip_halfwidth)
}

/// Polar sample of the disc `|λ − λ₀| < R` at the given level: `4·2^ℓ`
/// rings at midpoints of equal radial bins, `8·2^ℓ` angles per ring.
fn disc_level(lambda0: Complex64, radius: f64, level: usize) -> Vec<Complex64> {
    let rings = 4usize << level;
    let angles = 8usize << level;
    let mut out = Vec::with_capacity(rings * angles);
    for k in 0..rings {
        let r = radius * (k as f64 + 0.5) / rings as f64;
        for j in 0..angles {
            let a = 2.0 * PI * j as f64 / angles as f64;
            out.push(lambda0 + Complex64::from_polar(r, a));
        }
    }
    out
}

fn disc_radius(lambda0: Complex64, halfwidth: f64) -> f64 {
    0.5_f64.min(0.9 * (halfwidth - lambda0.im.abs()))
}

/// Symbol values at every disc point strictly inside the usable strip.
fn sample_disc(
    model: &ManifoldModel,
    t: &Multiplier,
    lambda0: Complex64,
    radius: f64,
    halfwidth: f64,
    levels: usize,
) -> Result<Vec<(Complex64, Complex64)>> {
    let pts: Vec<Complex64> = (0..levels)
        .flat_map(|l| disc_level(lambda0, radius, l))
        .filter(|l| l.im.abs() < halfwidth)
        .collect();
    pts.par_iter().map(|&l| symbol_eval(model, t, l).map(|m| (l, m))).collect()
}

/// Godefroy–Shapiro witness for `(1/ν)T` around `λ₀`, together with the
/// unimodular roots for [`default_rotations`].
pub fn certify_mixing(model: &ManifoldModel, t: &Multiplier, nu: Complex64, lambda0: Complex64, p: f64) -> Result<ChaosCertificate> {
    certify_with_rotations(model, t, nu, lambda0, p, &default_rotations())
}

pub fn certify_with_rotations(
    model: &ManifoldModel,
    t: &Multiplier,
    nu: Complex64,
    lambda0: Complex64,
    p: f64,
    rotations: &[Rotation],
) -> Result<ChaosCertificate> {
    let (b, _) = check_pair(model, t, nu, lambda0, p)?;
    if !nonconstancy_check(model, t, p)? {
        return Err(Error::ConstantSymbol);
    }
    let hw = usable_halfwidth(t, b);
    let radius = disc_radius(lambda0, hw);
    let samples = sample_disc(model, t, lambda0, radius, hw, REFINEMENT_LEVELS)?;
    let scale = nu.norm();
    let mut u_plus = Vec::new();
    let mut u_minus = Vec::new();
    for (l, m) in &samples {
        let ratio = m.norm() / scale;
        if ratio <= 1.0 - REGION_MARGIN {
            u_plus.push(*l);
        } else if ratio >= 1.0 + REGION_MARGIN {
            u_minus.push(*l);
        }
    }
    let searches = search_roots(model, t, nu, lambda0, b, rotations, &samples)?;
    let (found, not_found): (Vec<RootSearch>, Vec<RootSearch>) = searches.into_iter().partition(|s| s.root.is_some());
    let roots: Vec<UnimodularRoot> = found.into_iter().filter_map(|s| s.root).collect();
    let mut cert = ChaosCertificate {
        multiplier: t.label(),
        nu,
        lambda0,
        p,
        strip_halfwidth: b,
        margin: REGION_MARGIN,
        disc_radius: radius,
        levels: REFINEMENT_LEVELS,
        samples: samples.len(),
        u_plus,
        u_minus,
        roots,
        not_found,
        verdict: Verdict::Inconclusive,
    };
    let mixing = !cert.u_plus.is_empty() && !cert.u_minus.is_empty();
    let periodic = cert.distinct_rotations() >= 2;
    cert.verdict = match (mixing, periodic) {
        (true, true) => Verdict::ChaoticCertified,
        (true, false) => Verdict::MixingCertified,
        (false, true) => Verdict::PeriodicCertified,
        (false, false) => Verdict::Inconclusive,
    };
    Ok(cert)
}

/// Newton search for `m(λ) = ν e^{2πi p/q}` inside `S_p`, one result per
/// rotation.
pub fn find_unimodular_roots(
    model: &ManifoldModel,
    t: &Multiplier,
    nu: Complex64,
    lambda0: Complex64,
    rotations: &[Rotation],
    p: f64,
) -> Result<Vec<RootSearch>> {
    let (b, _) = check_pair(model, t, nu, lambda0, p)?;
    let hw = usable_halfwidth(t, b);
    let samples = sample_disc(model, t, lambda0, disc_radius(lambda0, hw), hw, 2)?;
    search_roots(model, t, nu, lambda0, b, rotations, &samples)
}

fn search_roots(
    model: &ManifoldModel,
    t: &Multiplier,
    nu: Complex64,
    lambda0: Complex64,
    b: f64,
    rotations: &[Rotation],
    samples: &[(Complex64, Complex64)],
) -> Result<Vec<RootSearch>> {
    rotations
        .par_iter()
        .map(|rot| {
            let target = rot.unit();
            let mut seeds: Vec<(f64, Complex64)> =
                samples.iter().map(|(l, m)| ((m / nu - target).norm(), *l)).collect();
            seeds.sort_by(|a, c| a.0.total_cmp(&c.0));
            let mut starts = vec![lambda0];
            starts.extend(seeds.iter().take(NEWTON_SEEDS).map(|s| s.1));

            let mut best: Option<UnimodularRoot> = None;
            let mut outside = None;
            let mut best_residual = f64::INFINITY;
            for start in starts {
                let Some((l, res)) = newton(model, t, nu * target, start) else { continue };
                best_residual = best_residual.min(res);
                if res >= ROOT_TOLERANCE {
                    continue;
                }
                if l.im.abs() >= b - STRIP_GUARD {
                    outside.get_or_insert(l);
                    continue;
                }
                let ratio = symbol_eval(model, t, l)? / nu;
                let cand = UnimodularRoot { lambda: l, rotation: *rot, residual: (ratio - target).norm(), ratio };
                let closer = best.as_ref().map_or(true, |r| (l - lambda0).norm() < (r.lambda - lambda0).norm());
                if cand.residual < ROOT_TOLERANCE && closer {
                    best = Some(cand);
                }
            }
            let note = match (&best, outside) {
                (Some(_), _) => None,
                (None, Some(l)) => Some(format!("Newton converged to λ = {l}, outside the strip |Im λ| < {b}")),
                (None, None) => Some(format!("no seed converged; best residual {best_residual:e}")),
            };
            Ok(RootSearch { rotation: *rot, root: best, note })
        })
        .collect()
}

/// Newton on `F(λ) = m(λ) − α` with a central-difference derivative; returns
/// the final iterate and `|F/α|`, or `None` when the iteration leaves the
/// symbol's domain or stalls on a flat derivative.
fn newton(model: &ManifoldModel, t: &Multiplier, alpha: Complex64, start: Complex64) -> Option<(Complex64, f64)> {
    let h = Complex64::new(FD_STEP, 0.0);
    let scale = alpha.norm();
    let mut l = start;
    let mut res = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITER {
        let f = symbol_eval(model, t, l).ok()? - alpha;
        res = f.norm() / scale;
        if res < 1e-14 {
            break;
        }
        let d = (symbol_eval(model, t, l + h).ok()? - symbol_eval(model, t, l - h).ok()?) / (2.0 * FD_STEP);
        if d.norm() == 0.0 || !d.norm().is_finite() {
            return None;
        }
        let step = f / d;
        l -= step;
        if step.norm() < 1e-15 * (1.0 + l.norm()) {
            res = (symbol_eval(model, t, l).ok()? - alpha).norm() / scale;
            break;
        }
    }
    res.is_finite().then_some((l, res))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicTerm {
    pub lambda: Complex64,
    pub rotation: Rotation,
    /// `m(λ)/ν`.
    pub ratio: Complex64,
    pub center: f64,
    pub coeff: Complex64,
}

/// `φ = Σ a_j τ_{R_j} φ_{λ_j}` with `((1/ν)T)^q φ = φ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicPoint {
    pub terms: Vec<PeriodicTerm>,
    pub period: u64,
}

impl PeriodicPoint {
    /// `max_j |a_j (m_j/ν)^q − a_j| / max_j |a_j|`.
    pub fn diagonal_defect(&self) -> f64 {
        self.diagonal_defect_for(self.period)
    }

    pub fn diagonal_defect_for(&self, q: u64) -> f64 {
        let scale = self.terms.iter().map(|t| t.coeff.norm()).fold(0.0, f64::max);
        let worst = self
            .terms
            .iter()
            .map(|t| (t.coeff * t.ratio.powu(q as u32) - t.coeff).norm())
            .fold(0.0, f64::max);
        worst / scale
    }

    /// `Π q_j`, which also fixes `φ`.
    pub fn product_period(&self) -> u64 {
        self.terms.iter().map(|t| t.rotation.q).product()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.terms.iter_mut().for_each(|t| t.coeff *= c);
        out
    }
}

pub fn build_periodic_point(roots: &[UnimodularRoot], centers: &[f64], coeffs: &[Complex64]) -> Result<PeriodicPoint> {
    if roots.is_empty() {
        return Err(Error::Input("a periodic point needs at least one root".into()));
    }
    if roots.len() != centers.len() || roots.len() != coeffs.len() {
        return Err(Error::Input(format!(
            "{} roots, {} centers and {} coefficients do not match",
            roots.len(),
            centers.len(),
            coeffs.len()
        )));
    }
    if let Some(r) = centers.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
        return Err(Error::Input(format!("center distance must be nonnegative, got {r}")));
    }
    let period = roots.iter().fold(1, |acc, r| lcm(acc, r.rotation.q));
    if period > u32::MAX as u64 {
        return Err(Error::Input(format!("period {period} is too large")));
    }
    let terms = roots
        .iter()
        .zip(centers)
        .zip(coeffs)
        .map(|((r, &center), &coeff)| PeriodicTerm { lambda: r.lambda, rotation: r.rotation, ratio: r.ratio, center, coeff })
        .collect();
    let point = PeriodicPoint { terms, period };
    let defect = point.diagonal_defect();
    if !(defect < 1e-10) {
        return Err(Error::Numerical(format!("diagonal action misses the identity by {defect:e}")));
    }
    Ok(point)
}

/// Axial evaluation points `s ∈ [−r_max/4, r_max/4]` for kernel-side checks.
pub fn periodic_axis_points(model: &ManifoldModel) -> Vec<f64> {
    let n = 25;
    let half = 0.25 * model.r_max;
    (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect()
}

/// Fraction of the kernel's L¹ mass beyond the truncation radius.
fn kernel_tail(model: &ManifoldModel, t: &Multiplier) -> Result<f64> {
    use crate::multiplier::MultiplierKind;
    let g = match &t.kind {
        MultiplierKind::Heat { t } => crate::multiplier::heat_kernel_profile(model, *t)?,
        MultiplierKind::ConvKernel { g } => g.clone(),
        MultiplierKind::ConvMeasure { mu } => match &mu.density {
            Some(g) => g.clone(),
            None => return Ok(0.0),
        },
        _ => return Ok(0.0),
    };
    let half = 0.5 * model.r_max;
    let dens = model.density_at_nodes();
    let (mut all, mut tail) = (0.0, 0.0);
    for ((v, &r), (w, a)) in g.values.iter().zip(&model.grid.nodes).zip(model.grid.weights.iter().zip(dens)) {
        let x = v.norm() * w * a;
        all += x;
        if r > half {
            tail += x;
        }
    }
    Ok(if all > 0.0 { tail / all } else { 0.0 })
}

/// Kernel-side check of `((1/ν)T)^q φ = φ` on the axis through the centers.
///
/// Each term `τ_R φ_λ` is pushed through the truncated kernel once; the image
/// is re-expanded in the term basis by least squares on the axial points and
/// the resulting matrix is iterated `q` times. The returned relative sup
/// defect includes the re-expansion residual.
pub fn verify_periodic(model: &ManifoldModel, t: &Multiplier, phi: &PeriodicPoint, nu: Complex64) -> Result<f64> {
    verify_periodic_steps(model, t, phi, nu, phi.period)
}

pub fn verify_periodic_steps(model: &ManifoldModel, t: &Multiplier, phi: &PeriodicPoint, nu: Complex64, steps: u64) -> Result<f64> {
    let kernel = kernel_realization(model, t)?;
    let tail = kernel_tail(model, t)?;
    if tail > 1e-6 {
        return Err(Error::Truncation(format!(
            "kernel mass beyond r_max/2 is {tail:e} of the total; enlarge r_max"
        )));
    }
    let pts = periodic_axis_points(model);
    let n = phi.terms.len();
    let eig: Vec<RadialEigenfunction> =
        phi.terms.par_iter().map(|term| radial_eigenfunction(model, term.lambda)).collect::<Result<_>>()?;
    let images: Vec<Vec<Complex64>> = phi
        .terms
        .par_iter()
        .zip(&eig)
        .map(|(term, e)| {
            let d: Vec<f64> = pts.iter().map(|s| (s - term.center).abs()).collect();
            kernel.apply(model, &e.to_radial_function(), &d)
        })
        .collect::<Result<_>>()?;
    let basis = DMatrix::from_fn(pts.len(), n, |i, j| eig[j].value_at((pts[i] - phi.terms[j].center).abs()));
    let image = DMatrix::from_fn(pts.len(), n, |i, j| images[j][i]);
    let svd = basis.clone().svd(true, true);
    let g = svd.solve(&image, 1e-13).map_err(|e| Error::Numerical(format!("re-expansion failed: {e}")))?;

    let a0 = nalgebra::DVector::from_iterator(n, phi.terms.iter().map(|t| t.coeff));
    let f0 = &basis * &a0;
    let scale = f0.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Input("the periodic point vanishes on the sample axis".into()));
    }
    let fit = (&basis * &g - &image).iter().map(|v| v.norm()).fold(0.0, f64::max);
    let image_scale = image.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let inv_nu = nu.inv();
    let mut a = a0.clone();
    for _ in 0..steps {
        a = (&g * &a) * inv_nu;
    }
    let back = &basis * &a;
    let defect = (back - f0).iter().map(|v| v.norm()).fold(0.0, f64::max) / scale;
    Ok(defect + fit / image_scale)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitComponent {
    pub lambda: Complex64,
    pub center: f64,
    pub coeff: Complex64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub p: f64,
    /// `||((1/ν)T)^n v||_p` for `n = 0..=N` (fewer after an early stop).
    pub norms: Vec<f64>,
    /// `|m(λ_j)/ν|`.
    pub moduli: Vec<f64>,
    /// Measured `|a_j^{(n+1)}| / |a_j^{(n)}|` per step and component.
    pub step_factors: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    pub stopped_at: Option<usize>,
    pub seed: Option<u64>,
}

impl OrbitRecord {
    pub fn log_norms(&self) -> Vec<f64> {
        self.norms.iter().map(|v| v.ln()).collect()
    }
}

/// Diagonal evolution `a_j ← (m(λ_j)/ν) a_j` with the L^p norm of the
/// reconstructed function recorded each step.
pub fn simulate_orbit(
    model: &ManifoldModel,
    t: &Multiplier,
    nu: Complex64,
    initial: &[OrbitComponent],
    steps: usize,
    p: f64,
) -> Result<OrbitRecord> {
    if initial.is_empty() {
        return Err(Error::Input("the initial state has no components".into()));
    }
    if steps > MAX_ORBIT_STEPS {
        return Err(Error::Input(format!("at most {MAX_ORBIT_STEPS} steps, got {steps}")));
    }
    if nu.norm() == 0.0 || !nu.norm().is_finite() {
        return Err(Error::Input(format!("ν = {nu} must be nonzero and finite")));
    }
    let b = strip_halfwidth(model, p)?;
    for c in initial {
        if !(c.lambda.im.abs() < b) {
            return Err(Error::Domain { lambda: c.lambda.to_string(), halfwidth: b });
        }
        if !(c.center >= 0.0) {
            return Err(Error::Input(format!("center distance must be nonnegative, got {}", c.center)));
        }
    }
    let ratios: Vec<Complex64> =
        initial.par_iter().map(|c| symbol_eval(model, t, c.lambda).map(|m| m / nu)).collect::<Result<_>>()?;
    let radial = initial.iter().all(|c| c.center == 0.0);
    let pieces: Vec<OrbitPiece> = initial
        .par_iter()
        .map(|c| {
            let e = radial_eigenfunction(model, c.lambda)?.to_radial_function();
            if radial {
                Ok(OrbitPiece::Radial(e))
            } else {
                translate_radial(model, &e, c.center).map(OrbitPiece::Axial)
            }
        })
        .collect::<Result<_>>()?;

    let mut coeffs: Vec<Complex64> = initial.iter().map(|c| c.coeff).collect();
    let mut norms = vec![combined_norm(model, &pieces, &coeffs, p)?];
    let mut step_factors = Vec::with_capacity(steps);
    let mut stopped_at = None;
    for n in 1..=steps {
        let next: Vec<Complex64> = coeffs.iter().zip(&ratios).map(|(a, r)| a * r).collect();
        step_factors.push(next.iter().zip(&coeffs).map(|(x, y)| x.norm() / y.norm()).collect());
        coeffs = next;
        let norm = combined_norm(model, &pieces, &coeffs, p)?;
        norms.push(norm);
        if !(norm <= ORBIT_OVERFLOW) {
            stopped_at = Some(n);
            break;
        }
    }
    Ok(OrbitRecord {
        p,
        norms,
        moduli: ratios.iter().map(|r| r.norm()).collect(),
        step_factors,
        labels: initial.iter().map(|c| format!("tau[{}] phi[{}]", c.center, c.lambda)).collect(),
        stopped_at,
        seed: None,
    })
}

enum OrbitPiece {
    Radial(RadialFunction),
    Axial(AxialField),
}

fn combined_norm(model: &ManifoldModel, pieces: &[OrbitPiece], coeffs: &[Complex64], p: f64) -> Result<f64> {
    match &pieces[0] {
        OrbitPiece::Radial(first) => {
            let mut values = vec![Complex64::new(0.0, 0.0); first.len()];
            for (piece, a) in pieces.iter().zip(coeffs) {
                if let OrbitPiece::Radial(f) = piece {
                    values.iter_mut().zip(&f.values).for_each(|(v, x)| *v += a * x);
                }
            }
            lp_norm_radial(model, &RadialFunction::new(first.grid.clone(), values, "orbit")?, p)
        }
        OrbitPiece::Axial(first) => {
            let mut field = first.clone();
            field.values.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            for (piece, a) in pieces.iter().zip(coeffs) {
                if let OrbitPiece::Axial(f) = piece {
                    field.values.iter_mut().zip(&f.values).for_each(|(v, x)| *v += a * x);
                }
            }
            field.lp_norm(model, p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h3() -> ManifoldModel {
        ManifoldModel::hyperbolic(3, 20.0, 1024).unwrap()
    }

    #[test]
    fn threshold_values() {
        let m = h3();
        assert!((chaos_threshold(&m, 4.0).unwrap() - 0.75).abs() < 1e-15);
        assert!(matches!(chaos_threshold(&m, 2.0), Err(Error::Input(_))));
        let h2 = ManifoldModel::hyperbolic(2, 20.0, 1024).unwrap();
        assert!((chaos_threshold(&h2, 4.0).unwrap() - 0.1875).abs() < 1e-15);
    }

    #[test]
    fn strip_parameter_tie_break() {
        let m = h3();
        let l = solve_strip_parameter(&m, 4.0, Complex64::new(1.0, 0.0)).unwrap();
        assert!((l.re - 0.4).abs() < 1e-12 && (l.im - 0.4).abs() < 1e-15);
        assert!(matches!(
            solve_strip_parameter(&m, 4.0, Complex64::new(0.75, 5.0)),
            Err(Error::Threshold { .. })
        ));
    }

    #[test]
    fn rotation_parsing() {
        assert_eq!("1/24".parse::<Rotation>().unwrap(), Rotation { p: 1, q: 24 });
        assert_eq!("-1/8".parse::<Rotation>().unwrap(), Rotation { p: -1, q: 8 });
        assert!("2/4".parse::<Rotation>().is_err());
        assert!("1/0".parse::<Rotation>().is_err());
        assert_eq!(lcm(24, 8), 24);
    }

    #[test]
    fn disc_levels_do_not_overlap() {
        let z = Complex64::new(0.5, 0.0);
        let a = disc_level(z, 0.4, 0);
        let b = disc_level(z, 0.4, 1);
        assert!(a.iter().all(|x| b.iter().all(|y| (x - y).norm() > 1e-6)));
    }
}
