//! Randomized property suite spanning every layer.
//!
//! Each `check_*` function draws its own seeded samples and returns the worst
//! residual it saw; [`run`] strings them together with tolerances into a
//! [`Report`]. The same functions back the acceptance tests, with larger
//! sample counts.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::double::{
    free_flow, hamiltonian_free, iwasawa_maps, lax_free, moment_map, quasi_adjoint, FreeFlow, MuWeights,
};
use crate::dynamics::{
    flow_via_double, flow_via_ode, flow_via_projection_seeded, max_deviation, poisson_bracket, spectrum_drift,
    OdeSettings, ProjectionSeed,
};
use crate::error::{Error, Result};
use crate::matcore::{
    frobenius, herm_exp, hermitian_eigenvalues, identity, iwasawa_left, iwasawa_right, unitary_eig, uu_dagger_factor,
    CMatrix, Tolerances, UnitaryMatrix, C64,
};
use crate::reduction::{
    constraint_residual, decompose_to_slice, gamma_phases, kks_vector, kks_vector_from_factor, kks_vector_from_minors,
    lax_components, lax_reduced, lax_reduced_with, lift, n_matrix, n_matrix_inverse, nu, reduced_hamiltonian,
    rs_hamiltonian, rs_lax, rs_lax_spectrum, slice_point, Coupling, DarbouxConvention, PhasePoint,
};
use crate::sampling::{
    random_borel, random_coupling, random_double_point, random_hermitian, random_isotropy, random_phase_point,
    random_unitary, seeded, SeededRng,
};

/// Deliberate faults the suite must detect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mutation {
    /// Use this coefficient in front of the logarithmic sums of `ζ`.
    ZetaCoefficient(f64),
    /// Swap the signs of the two logarithmic sums of `ζ`.
    ZetaSignFlip,
    /// Add `delta` to the `(row, col)` entry of the reference `ν(x)`.
    NuOffDiagonal { row: usize, col: usize, delta: f64 },
}

impl Mutation {
    fn convention(mutation: Option<Mutation>) -> DarbouxConvention {
        let mut conv = DarbouxConvention::default();
        match mutation {
            Some(Mutation::ZetaCoefficient(c)) => conv.coefficient = c,
            Some(Mutation::ZetaSignFlip) => conv.flip_signs = true,
            _ => {}
        }
        conv
    }
}

impl FromStr for Mutation {
    type Err = Error;

    /// `zeta-half`, `zeta-coefficient=<c>`, `zeta-sign` or `nu-offdiag`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "zeta-half" => Ok(Mutation::ZetaCoefficient(0.5)),
            "zeta-sign" => Ok(Mutation::ZetaSignFlip),
            "nu-offdiag" => Ok(Mutation::NuOffDiagonal {
                row: 0,
                col: 1,
                delta: 1e-3,
            }),
            other => match other.strip_prefix("zeta-coefficient=") {
                Some(c) => c
                    .parse()
                    .map(Mutation::ZetaCoefficient)
                    .map_err(|_| Error::InvalidInput(format!("bad coefficient in {other:?}"))),
                None => Err(Error::InvalidInput(format!("unknown mutation {other:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub n_max: usize,
    pub seed: u64,
    /// Halve every tolerance.
    pub strict: bool,
    pub mutation: Option<Mutation>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            n_max: 5,
            seed: 0,
            strict: false,
            mutation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub module: &'static str,
    pub property: &'static str,
    pub worst_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub n_max: usize,
    pub seed: u64,
    pub strict: bool,
    pub results: Vec<PropertyResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyResult> {
        self.results.iter().filter(|r| !r.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "verify: n_max = {}, seed = {}, strict = {}",
            self.n_max, self.seed, self.strict
        )?;
        for r in &self.results {
            write!(
                f,
                "{} {:<10} {:<44} worst {:>10.3e}  tol {:.1e}",
                if r.passed { "PASS" } else { "FAIL" },
                r.module,
                r.property,
                r.worst_residual,
                r.tolerance
            )?;
            if let Some(e) = &r.error {
                write!(f, "  ({e})")?;
            }
            writeln!(f)?;
        }
        let failed = self.failures().count();
        write!(f, "{} properties, {} failed", self.results.len(), failed)
    }
}

/// Independent stream per property and size.
pub fn property_rng(seed: u64, tag: u64, n: usize) -> SeededRng {
    seeded(seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (n as u64).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

fn sample_point(rng: &mut SeededRng, n: usize) -> (PhasePoint, Coupling) {
    let x = random_coupling(rng, 0.2, 2.0);
    (random_phase_point(rng, n, 0.15, 1.0), x)
}

fn worst<I: IntoIterator<Item = Result<f64>>>(it: I) -> Result<f64> {
    let mut acc: f64 = 0.0;
    for r in it {
        let r = r?;
        acc = if r.is_nan() { f64::NAN } else { acc.max(r) };
    }
    Ok(acc)
}

fn relative(m: &CMatrix, reference: &CMatrix) -> f64 {
    frobenius(m) / frobenius(reference).max(1.0)
}

// matcore

/// `uu_dagger_factor(b·b†)` returns `b`.
pub fn check_uu_uniqueness(n: usize, samples: usize, seed: u64, tol: &Tolerances) -> Result<f64> {
    let mut rng = property_rng(seed, 1, n);
    worst((0..samples).map(|_| {
        let b = random_borel(&mut rng, n);
        let h = b.matrix() * b.matrix().adjoint();
        let f = uu_dagger_factor(&h, tol)?;
        Ok(relative(&(f.matrix() - b.matrix()), b.matrix()))
    }))
}

/// `K = b_L·g_R⁻¹ = g_L·b_R⁻¹` and `b_R·b_R† = (K†K)⁻¹`.
pub fn check_iwasawa(n: usize, samples: usize, seed: u64, tol: &Tolerances) -> Result<f64> {
    let mut rng = property_rng(seed, 2, n);
    worst((0..samples).map(|_| {
        let k = random_double_point(&mut rng, n);
        let (b_l, g_r) = iwasawa_left(k.matrix(), tol)?;
        let (g_l, b_r) = iwasawa_right(k.matrix(), tol)?;
        let left = b_l.matrix() * g_r.matrix().adjoint() - k.matrix();
        let right = g_l.matrix() * b_r.inverse().matrix() - k.matrix();
        let gram = lax_free(&k)?;
        let bridge = b_r.matrix() * b_r.matrix().adjoint() - &gram;
        Ok(relative(&left, k.matrix())
            .max(relative(&right, k.matrix()))
            .max(relative(&bridge, &gram)))
    }))
}

/// `V·diag(e^{iθ})·V† = U`, and the angles of `W·U·W†` match those of `U`.
pub fn check_unitary_eig(n: usize, samples: usize, seed: u64, tol: &Tolerances) -> Result<f64> {
    let mut rng = property_rng(seed, 3, n);
    worst((0..samples).map(|_| {
        let u = random_unitary(&mut rng, n);
        let w = random_unitary(&mut rng, n);
        let eig = unitary_eig(&u, tol)?;
        let phases = UnitaryMatrix::from_angles(&eig.angles);
        let rebuilt = eig.vectors.matrix() * phases.matrix() * eig.vectors.matrix().adjoint();
        let conj = unitary_eig(&w.mul(&u).mul(&w.inverse()), tol)?;
        let angle_gap = eig
            .angles
            .iter()
            .zip(&conj.angles)
            .map(|(a, b)| {
                let d = (a - b).rem_euclid(std::f64::consts::TAU);
                d.min(std::f64::consts::TAU - d)
            })
            .fold(0.0, f64::max);
        Ok(frobenius(&(rebuilt - u.matrix())).max(angle_gap))
    }))
}

/// `e^{isH}·e^{itH} = e^{i(s+t)H}`.
pub fn check_herm_exp(n: usize, samples: usize, seed: u64, tol: &Tolerances) -> Result<f64> {
    let mut rng = property_rng(seed, 4, n);
    worst((0..samples).map(|_| {
        let h = random_hermitian(&mut rng, n);
        let (s, t) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let lhs = herm_exp(&h, s, tol)?.mul(&herm_exp(&h, t, tol)?);
        let rhs = herm_exp(&h, s + t, tol)?;
        Ok(frobenius(&(lhs.matrix() - rhs.matrix())))
    }))
}

// double

/// `Λ(g▷K)·Λ(g▷K)† = g·Λ(K)·Λ(K)†·g⁻¹`, relative to `‖Λ·Λ†‖`.
pub fn check_equivariance(n: usize, samples: usize, seed: u64, tol: &Tolerances) -> Result<f64> {
    let mut rng = property_rng(seed, 5, n);
    worst((0..samples).map(|_| {
        let k = random_double_point(&mut rng, n);
        let g = random_unitary(&mut rng, n);
        let lam = moment_map(&k, tol)?;
        let lam_g = moment_map(&quasi_adjoint(&g, &k, tol)?, tol)?;
        let lhs = lam_g.matrix() * lam_g.matrix().adjoint();
        let rhs = g.matrix() * lam.matrix() * lam.matrix().adjoint() * g.matrix().adjoint();
        Ok(relative(&(&lhs - &rhs), &rhs))
    }))
}

/// `g₁▷(g₂▷K) = (g₁g₂)▷K` and `H_μ(g▷K) = H_μ(K)`.
pub fn check_action(n: usize, samples: usize, seed: u64, tol: &Tolerances) -> Result<f64> {
    let mut rng = property_rng(seed, 6, n);
    let mu = MuWeights::relativistic();
    worst((0..samples).map(|_| {
        let k = random_double_point(&mut rng, n);
        let (g1, g2) = (random_unitary(&mut rng, n), random_unitary(&mut rng, n));
        let nested = quasi_adjoint(&g1, &quasi_adjoint(&g2, &k, tol)?, tol)?;
        let direct = quasi_adjoint(&g1.mul(&g2), &k, tol)?;
        let h0 = hamiltonian_free(&k, &mu, tol)?;
        let h1 = hamiltonian_free(&direct, &mu, tol)?;
        Ok(relative(&(nested.matrix() - direct.matrix()), k.matrix()).max((h1 - h0).abs() / h0.abs().max(1.0)))
    }))
}

/// Along the free flow: spectrum of `L`, the moment map and `Λ_L` are
/// constant.
pub fn check_free_flow_invariants(n: usize, samples: usize, seed: u64, tol: &Tolerances) -> Result<f64> {
    let mut rng = property_rng(seed, 7, n);
    let mu = MuWeights::from_pairs(&[(1, 1.0), (-1, -1.0), (2, 0.5)])?;
    worst((0..samples).map(|_| {
        let k = random_double_point(&mut rng, n);
        let t = rng.random_range(-1.5..1.5);
        let kt = free_flow(&k, &mu, t, tol)?;
        let s0 = hermitian_eigenvalues(&lax_free(&k)?, tol)?;
        let st = hermitian_eigenvalues(&lax_free(&kt)?, tol)?;
        let scale = s0.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        let spec = s0.iter().zip(&st).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
        let (m0, mt) = (moment_map(&k, tol)?, moment_map(&kt, tol)?);
        let (l0, lt) = (iwasawa_maps(&k, tol)?.lambda_l, iwasawa_maps(&kt, tol)?.lambda_l);
        Ok(spec
            .max(relative(&(mt.matrix() - m0.matrix()), m0.matrix()))
            .max(relative(&(lt.matrix() - l0.matrix()), l0.matrix())))
    }))
}

/// `Φ_t∘Φ_s = Φ_{t+s}` for one Hamiltonian, and `Φ^{μ}_t∘Φ^{μ'}_s =
/// Φ^{μ'}_s∘Φ^{μ}_t` for two.
pub fn check_flow_commutation(n: usize, samples: usize, seed: u64, tol: &Tolerances) -> Result<f64> {
    let mut rng = property_rng(seed, 8, n);
    let mu1 = MuWeights::relativistic();
    let mu2 = MuWeights::from_pairs(&[(2, 1.0)])?;
    worst((0..samples).map(|_| {
        let k = random_double_point(&mut rng, n);
        let (t, s) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let composed = free_flow(&free_flow(&k, &mu1, s, tol)?, &mu1, t, tol)?;
        let direct = free_flow(&k, &mu1, t + s, tol)?;
        let ab = free_flow(&free_flow(&k, &mu2, s, tol)?, &mu1, t, tol)?;
        let ba = free_flow(&free_flow(&k, &mu1, t, tol)?, &mu2, s, tol)?;
        Ok(relative(&(composed.matrix() - direct.matrix()), k.matrix())
            .max(relative(&(ab.matrix() - ba.matrix()), k.matrix())))
    }))
}

// reduction

/// `‖n(T)·T·n(T)⁻¹·T⁻¹ − ν(x)‖_F`, against a possibly mutated `ν`.
pub fn check_constraint_identity(n: usize, samples: usize, seed: u64, mutation: Option<Mutation>) -> Result<f64> {
    let mut rng = property_rng(seed, 9, n);
    worst((0..samples).map(|_| {
        let (pt, x) = sample_point(&mut rng, n);
        let t = pt.q().torus();
        let lhs = n_matrix(pt.q(), x) * t.matrix() * n_matrix_inverse(pt.q(), x) * t.inverse().matrix();
        let mut target = nu(x, n).into_matrix();
        if let Some(Mutation::NuOffDiagonal { row, col, delta }) = mutation {
            if row < n && col < n {
                target[(row, col)] += C64::new(delta, 0.0);
            }
        }
        Ok(frobenius(&(lhs - target)))
    }))
}

/// `n(T)⁻¹` from the closed form times `n(T)` is the identity.
pub fn check_n_inverse(n: usize, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = property_rng(seed, 10, n);
    worst((0..samples).map(|_| {
        let (pt, x) = sample_point(&mut rng, n);
        Ok(frobenius(
            &(n_matrix_inverse(pt.q(), x) * n_matrix(pt.q(), x) - identity(n)),
        ))
    }))
}

/// `ν ν† = e^{−x}[1 + ((e^{nx}−1)/n)·v v†]`, relative to `‖ν ν†‖_F`.
pub fn check_kks_exponential(n: usize, x: Coupling) -> f64 {
    let v = kks_vector(x, n);
    let b = nu(x, n);
    let lhs = b.matrix() * b.matrix().adjoint();
    let xv = x.value();
    let c = (n as f64 * xv).exp_m1() / n as f64;
    let rhs = CMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        C64::new((-xv).exp() * (delta + c * v[i] * v[j]), 0.0)
    });
    relative(&(&lhs - rhs), &lhs)
}

/// Minor solve from the Borel factor of `ν ν†`.
pub fn check_kks_minors(n: usize, x: Coupling) -> Result<f64> {
    let solved = kks_vector_from_factor(&nu(x, n), x)?;
    Ok(max_deviation(&[solved], &[kks_vector(x, n)]))
}

/// Minor solve from the dense `ν ν†`, scaled by its conditioning
/// `e^{(n−1)·max(x,0)}`.
pub fn check_kks_dense(n: usize, x: Coupling, tol: &Tolerances) -> Result<f64> {
    let b = nu(x, n);
    let solved = kks_vector_from_minors(&(b.matrix() * b.matrix().adjoint()), x, tol)?;
    let scale = ((n - 1) as f64 * x.value().max(0.0)).exp();
    Ok(max_deviation(&[solved], &[kks_vector(x, n)]) / scale)
}

/// Pairwise distance of `lax_reduced`, `lax_components` and `Γ·𝐋·Γ⁻¹`.
/// A `ζ` mutation feeds the wrong convention into `lax_reduced`.
pub fn check_cross_formula(n: usize, samples: usize, seed: u64, mutation: Option<Mutation>) -> Result<f64> {
    let mut rng = property_rng(seed, 11, n);
    let conv = Mutation::convention(mutation);
    worst((0..samples).map(|_| {
        let (pt, x) = sample_point(&mut rng, n);
        let reduced = lax_reduced_with(&pt, x, conv);
        let components = lax_components(&pt, x);
        let gamma = gamma_phases(pt.q(), x);
        let conjugated = gamma.matrix() * rs_lax(&pt, x) * gamma.inverse().matrix();
        Ok(frobenius(&(&reduced - &components))
            .max(frobenius(&(&reduced - &conjugated)))
            .max(frobenius(&(&components - &conjugated))))
    }))
}

/// Spectrum of `𝐋` against the spectrum of `L(K)` at the slice point,
/// relative to `max(1, ‖spectrum‖_∞)`.
pub fn check_spectrum_bridge(n: usize, samples: usize, seed: u64, tol: &Tolerances) -> Result<f64> {
    let mut rng = property_rng(seed, 12, n);
    worst((0..samples).map(|_| {
        let (pt, x) = sample_point(&mut rng, n);
        let a = rs_lax_spectrum(&pt, x, tol)?;
        let b = hermitian_eigenvalues(&lax_free(&slice_point(&pt, x))?, tol)?;
        let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        Ok(max_deviation(&[a], &[b]) / scale)
    }))
}

/// `H_μ(point)` against `H_μ(slice_point(point))`, relative to `max(1, |H_μ|)`.
pub fn check_hamiltonian_reduction(
    n: usize,
    samples: usize,
    seed: u64,
    mu: &MuWeights,
    tol: &Tolerances,
) -> Result<f64> {
    let mut rng = property_rng(seed, 13, n);
    worst((0..samples).map(|_| {
        let (pt, x) = sample_point(&mut rng, n);
        let reduced = reduced_hamiltonian(&pt, x, mu, tol)?;
        let free = hamiltonian_free(&slice_point(&pt, x), mu, tol)?;
        Ok((reduced - free).abs() / free.abs().max(1.0))
    }))
}

/// The closed-form Ruijsenaars–Schneider Hamiltonian is `H_μ` for
/// `μ = {1:1, −1:−1}`; relative to `max(1, |H|)`.
pub fn check_rs_closed_form(n: usize, samples: usize, seed: u64, tol: &Tolerances) -> Result<f64> {
    let mut rng = property_rng(seed, 14, n);
    let mu = MuWeights::relativistic();
    worst((0..samples).map(|_| {
        let (pt, x) = sample_point(&mut rng, n);
        let h = rs_hamiltonian(&pt, x);
        Ok((h - reduced_hamiltonian(&pt, x, &mu, tol)?).abs() / h.abs().max(1.0))
    }))
}

/// On the slice `Ξ_R = T` and `Λ_R·Λ_R† = T·L(T, a)·T⁻¹`.
pub fn check_slice_iwasawa(n: usize, samples: usize, seed: u64, tol: &Tolerances) -> Result<f64> {
    let mut rng = property_rng(seed, 15, n);
    worst((0..samples).map(|_| {
        let (pt, x) = sample_point(&mut rng, n);
        let maps = iwasawa_maps(&slice_point(&pt, x), tol)?;
        let t = pt.q().torus();
        let lax = t.matrix() * lax_reduced(&pt, x) * t.inverse().matrix();
        let lr = maps.lambda_r.matrix() * maps.lambda_r.matrix().adjoint();
        Ok(frobenius(&(maps.xi_r.matrix() - t.matrix())).max(relative(&(lr - &lax), &lax)))
    }))
}

/// Decomposition of `g₀▷slice_point(point)`: the same point comes back
/// for isotropy `g₀`, and the returned `g` reconstructs the input.
pub fn check_decompose_gauge(n: usize, samples: usize, seed: u64, tol: &Tolerances) -> Result<f64> {
    let mut rng = property_rng(seed, 16, n);
    worst((0..samples).map(|_| {
        let (pt, x) = sample_point(&mut rng, n);
        let g0 = random_isotropy(&mut rng, x, n);
        let k = quasi_adjoint(&g0, &slice_point(&pt, x), tol)?;
        let (g, back) = decompose_to_slice(&k, x, tol)?;
        let rebuilt = lift(&g, &back, x, tol)?;
        let dq = max_deviation(&[back.angles().to_vec()], &[pt.angles().to_vec()]);
        let dp = max_deviation(&[back.p().to_vec()], &[pt.p().to_vec()]);
        Ok(dq.max(dp).max(relative(&(rebuilt.matrix() - k.matrix()), k.matrix())))
    }))
}

// dynamics

fn engine_start(rng: &mut SeededRng, n: usize) -> (PhasePoint, Coupling) {
    let x = random_coupling(rng, 0.3, 1.5);
    (random_phase_point(rng, n, 0.3, 0.5), x)
}

fn unit_grid(samples: usize) -> Vec<f64> {
    (0..samples).map(|i| i as f64 / (samples - 1) as f64).collect()
}

/// Worst `(projection vs double q, ODE vs double (q, p))` deviation over
/// `t ∈ [0, 1]` for the relativistic flow.
pub fn check_engine_agreement(n: usize, starts: usize, seed: u64, tol: &Tolerances) -> Result<(f64, f64)> {
    let mut rng = property_rng(seed, 17, n);
    let mu = MuWeights::relativistic();
    let times = unit_grid(21);
    let (mut proj, mut ode) = (0.0f64, 0.0f64);
    for _ in 0..starts {
        let (pt, x) = engine_start(&mut rng, n);
        let d = flow_via_double(&pt, x, &mu, &times, tol)?;
        let pr = flow_via_projection_seeded(&pt, x, &mu, &times, ProjectionSeed::RsLax, tol)?;
        let o = flow_via_ode(&pt, x, &mu, &times, &OdeSettings::default(), tol)?;
        proj = proj.max(max_deviation(&d.q, &pr.q));
        let dp = max_deviation(d.p.as_deref().unwrap_or(&[]), o.p.as_deref().unwrap_or(&[]));
        ode = ode.max(max_deviation(&d.q, &o.q)).max(dp);
    }
    Ok((proj, ode))
}

/// Conservation along [`flow_via_double`] and [`flow_via_ode`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Conservation {
    pub double_energy: f64,
    pub double_spectrum: f64,
    pub moment_map: f64,
    pub lambda_l: f64,
    pub ode_energy: f64,
}

pub fn check_conservation(n: usize, starts: usize, seed: u64, tol: &Tolerances) -> Result<Conservation> {
    let mut rng = property_rng(seed, 18, n);
    let mu = MuWeights::relativistic();
    let times = unit_grid(21);
    let mut out = Conservation::default();
    for _ in 0..starts {
        let (pt, x) = engine_start(&mut rng, n);
        let d = flow_via_double(&pt, x, &mu, &times, tol)?;
        out.double_energy = out.double_energy.max(d.energy_drift());
        out.double_spectrum = out.double_spectrum.max(spectrum_drift(&d)?);
        out.moment_map = out.moment_map.max(d.max_constraint_residual().unwrap_or(0.0));
        let flow = FreeFlow::new(&slice_point(&pt, x), &mu, tol)?;
        let l0 = iwasawa_maps(&flow.at(0.0), tol)?.lambda_l;
        for &t in &times {
            let lt = iwasawa_maps(&flow.at(t), tol)?.lambda_l;
            out.lambda_l = out.lambda_l.max(frobenius(&(lt.matrix() - l0.matrix())));
        }
        let o = flow_via_ode(&pt, x, &mu, &times, &OdeSettings::default(), tol)?;
        out.ode_energy = out.ode_energy.max(o.energy_drift());
    }
    Ok(out)
}

/// Difference step for the bracket checks.
pub const BRACKET_STEP: f64 = 1e-3;

/// `|{H_{1,−1}, H_2}|` and `|{H, F} + {F, H}|` by finite differences, at
/// points drawn like the engine starts.
pub fn check_brackets(n: usize, samples: usize, seed: u64, tol: &Tolerances) -> Result<(f64, f64)> {
    let mut rng = property_rng(seed, 19, n);
    let mu1 = MuWeights::relativistic();
    let mu2 = MuWeights::from_pairs(&[(2, 1.0)])?;
    let (mut commute, mut antisym) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let (pt, x) = loop {
            let (pt, x) = engine_start(&mut rng, n);
            let q = pt.angles();
            if q[n - 1] > 20.0 * BRACKET_STEP && q[0] < std::f64::consts::PI - 20.0 * BRACKET_STEP {
                break (pt, x);
            }
        };
        let h1 = |p: &PhasePoint| reduced_hamiltonian(p, x, &mu1, tol);
        let h2 = |p: &PhasePoint| reduced_hamiltonian(p, x, &mu2, tol);
        let qp = |p: &PhasePoint| Ok(p.angles()[0] * p.p()[n - 1].cosh());
        commute = commute.max(poisson_bracket(h1, h2, &pt, BRACKET_STEP, tol)?.abs());
        let ab = poisson_bracket(h1, qp, &pt, BRACKET_STEP, tol)?;
        let ba = poisson_bracket(qp, h1, &pt, BRACKET_STEP, tol)?;
        antisym = antisym.max((ab + ba).abs());
    }
    Ok((commute, antisym))
}

/// Projection engine seeded with `𝐋(0)` against seeding with `L(0)`.
pub fn check_projection_seeds(n: usize, starts: usize, seed: u64, tol: &Tolerances) -> Result<f64> {
    let mut rng = property_rng(seed, 20, n);
    let mu = MuWeights::from_pairs(&[(1, 1.0), (-1, -1.0), (2, 0.3)])?;
    let times = unit_grid(11);
    worst((0..starts).map(|_| {
        let (pt, x) = engine_start(&mut rng, n);
        let a = flow_via_projection_seeded(&pt, x, &mu, &times, ProjectionSeed::RsLax, tol)?;
        let b = flow_via_projection_seeded(&pt, x, &mu, &times, ProjectionSeed::ReducedLax, tol)?;
        Ok(max_deviation(&a.q, &b.q))
    }))
}

/// Slice points satisfy the moment-map constraint.
pub fn check_slice_constraint(n: usize, samples: usize, seed: u64, tol: &Tolerances) -> Result<f64> {
    let mut rng = property_rng(seed, 21, n);
    worst((0..samples).map(|_| {
        let (pt, x) = sample_point(&mut rng, n);
        constraint_residual(&slice_point(&pt, x), x, tol)
    }))
}

struct Suite {
    results: Vec<PropertyResult>,
    scale: f64,
}

impl Suite {
    fn record(&mut self, module: &'static str, property: &'static str, tolerance: f64, residual: Result<f64>) {
        let tolerance = tolerance * self.scale;
        let (worst_residual, error) = match residual {
            Ok(r) => (r, None),
            Err(e) => (f64::INFINITY, Some(e.to_string())),
        };
        self.results.push(PropertyResult {
            module,
            property,
            worst_residual,
            tolerance,
            passed: worst_residual <= tolerance,
            error,
        });
    }
}

fn over_sizes(sizes: impl Iterator<Item = usize>, mut f: impl FnMut(usize) -> Result<f64>) -> Result<f64> {
    worst(sizes.map(&mut f))
}

/// Runs every property for `n ∈ 2..=n_max`.
pub fn run(config: &VerifyConfig) -> Result<Report> {
    if !(2..=8).contains(&config.n_max) {
        return Err(Error::InvalidInput(format!(
            "n_max must lie in [2, 8], got {}",
            config.n_max
        )));
    }
    let tol = Tolerances::default();
    let seed = config.seed;
    let m = config.mutation;
    let sizes = || 2..=config.n_max;
    let small = || 2..=config.n_max.min(4);
    let mut s = Suite {
        results: Vec::new(),
        scale: if config.strict { 0.5 } else { 1.0 },
    };
    const S: usize = 10;

    s.record(
        "matcore",
        "uu_dagger factor uniqueness",
        1e-10,
        over_sizes(sizes(), |n| check_uu_uniqueness(n, S, seed, &tol)),
    );
    s.record(
        "matcore",
        "iwasawa round trips and bridge",
        1e-10,
        over_sizes(sizes(), |n| check_iwasawa(n, S, seed, &tol)),
    );
    s.record(
        "matcore",
        "unitary eigen reconstruction",
        1e-9,
        over_sizes(sizes(), |n| check_unitary_eig(n, S, seed, &tol)),
    );
    s.record(
        "matcore",
        "hermitian exponential group law",
        1e-10,
        over_sizes(sizes(), |n| check_herm_exp(n, S, seed, &tol)),
    );

    s.record(
        "double",
        "moment map equivariance",
        1e-9,
        over_sizes(sizes(), |n| check_equivariance(n, S, seed, &tol)),
    );
    s.record(
        "double",
        "action property and H invariance",
        1e-9,
        over_sizes(sizes(), |n| check_action(n, S, seed, &tol)),
    );
    s.record(
        "double",
        "free flow invariants",
        1e-9,
        over_sizes(sizes(), |n| check_free_flow_invariants(n, S, seed, &tol)),
    );
    s.record(
        "double",
        "flow composition and commutation",
        1e-8,
        over_sizes(sizes(), |n| check_flow_commutation(n, S, seed, &tol)),
    );

    s.record(
        "reduction",
        "constraint identity",
        1e-9,
        over_sizes(sizes(), |n| check_constraint_identity(n, S, seed, m)),
    );
    s.record(
        "reduction",
        "closed-form inverse of n(T)",
        1e-10,
        over_sizes(sizes(), |n| check_n_inverse(n, S, seed)),
    );
    let xs = [0.3, -0.3, 1.0, -1.0, 2.5, -2.5];
    s.record(
        "reduction",
        "kks vector exponential relation",
        1e-10,
        over_sizes(sizes(), |n| {
            worst(xs.iter().map(|&x| Ok(check_kks_exponential(n, Coupling::new(x)?))))
        }),
    );
    s.record(
        "reduction",
        "kks vector minor solve",
        1e-9,
        over_sizes(sizes(), |n| {
            worst(xs.iter().map(|&x| check_kks_minors(n, Coupling::new(x)?)))
        }),
    );
    s.record(
        "reduction",
        "kks vector minor solve (dense, scaled)",
        1e-12,
        over_sizes(sizes(), |n| {
            worst(xs.iter().map(|&x| check_kks_dense(n, Coupling::new(x)?, &tol)))
        }),
    );
    s.record(
        "reduction",
        "cross-formula lax agreement",
        1e-9,
        over_sizes(sizes().take(5), |n| check_cross_formula(n, S, seed, m)),
    );
    s.record(
        "reduction",
        "spectrum bridge",
        1e-9,
        over_sizes(sizes(), |n| check_spectrum_bridge(n, S, seed, &tol)),
    );
    let mus = [
        MuWeights::relativistic(),
        MuWeights::from_pairs(&[(2, 1.0)])?,
        MuWeights::from_pairs(&[(1, 1.0), (3, -2.0)])?,
    ];
    s.record(
        "reduction",
        "hamiltonian reduction",
        1e-9,
        over_sizes(sizes(), |n| {
            worst(mus.iter().map(|mu| check_hamiltonian_reduction(n, S, seed, mu, &tol)))
        }),
    );
    s.record(
        "reduction",
        "closed-form RS hamiltonian",
        1e-9,
        over_sizes(sizes(), |n| check_rs_closed_form(n, S, seed, &tol)),
    );
    s.record(
        "reduction",
        "iwasawa maps on the slice",
        1e-9,
        over_sizes(sizes(), |n| check_slice_iwasawa(n, S, seed, &tol)),
    );
    s.record(
        "reduction",
        "slice satisfies the constraint",
        1e-9,
        over_sizes(sizes(), |n| check_slice_constraint(n, S, seed, &tol)),
    );
    s.record(
        "reduction",
        "decomposition gauge invariance",
        1e-7,
        over_sizes(sizes(), |n| check_decompose_gauge(n, S, seed, &tol)),
    );

    let agreement: Vec<Result<(f64, f64)>> = small().map(|n| check_engine_agreement(n, 2, seed, &tol)).collect();
    let pick = |i: usize| {
        worst(
            agreement
                .iter()
                .map(|r| r.as_ref().map(|p| if i == 0 { p.0 } else { p.1 }).map_err(Clone::clone)),
        )
    };
    s.record("dynamics", "projection vs double positions", 1e-7, pick(0));
    s.record("dynamics", "ode vs double phase space", 1e-5, pick(1));
    let cons: Vec<Result<Conservation>> = small().map(|n| check_conservation(n, 2, seed, &tol)).collect();
    let field = |f: fn(&Conservation) -> f64| worst(cons.iter().map(|r| r.as_ref().map(f).map_err(Clone::clone)));
    s.record("dynamics", "double energy drift", 1e-8, field(|c| c.double_energy));
    s.record(
        "dynamics",
        "double lax spectrum drift",
        1e-8,
        field(|c| c.double_spectrum),
    );
    s.record("dynamics", "moment map along the flow", 1e-7, field(|c| c.moment_map));
    s.record("dynamics", "lambda_L along the flow", 1e-9, field(|c| c.lambda_l));
    s.record("dynamics", "ode energy drift", 1e-6, field(|c| c.ode_energy));
    let brackets: Vec<Result<(f64, f64)>> = small().map(|n| check_brackets(n, 5, seed, &tol)).collect();
    let bracket = |i: usize| {
        worst(
            brackets
                .iter()
                .map(|r| r.as_ref().map(|p| if i == 0 { p.0 } else { p.1 }).map_err(Clone::clone)),
        )
    };
    s.record("dynamics", "hamiltonians in involution", 1e-5, bracket(0));
    s.record("dynamics", "bracket antisymmetry", 1e-9, bracket(1));
    s.record(
        "dynamics",
        "projection seed equivalence",
        1e-9,
        over_sizes(small(), |n| check_projection_seeds(n, 2, seed, &tol)),
    );

    Ok(Report {
        n_max: config.n_max,
        seed,
        strict: config.strict,
        results: s.results,
    })
}
