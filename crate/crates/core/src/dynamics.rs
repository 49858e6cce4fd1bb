//! Three independent ways to follow a reduced trajectory, plus numerical
//! Poisson brackets and conservation diagnostics.
//!
//! * [`flow_via_double`]: closed-form free flow on the Heisenberg double,
//!   projected back to the slice sample by sample.
//! * [`flow_via_projection`]: ordered eigenvalues of the unitary geodesic
//!   `T(0)·exp(it Σ_j μ_j 𝐋(0)^j)` (positions only).
//! * [`flow_via_ode`]: fixed-step RK4 on Hamilton's equations with
//!   central-difference gradients.

use std::f64::consts::PI;

use serde::Serialize;

use crate::double::{FreeFlow, MuWeights};
use crate::error::{Error, Result};
use crate::matcore::{diag, hermitian_eig, unitary_eig, Tolerances, UnitaryMatrix, C64};
use crate::reduction::{
    constraint_residual, decompose_to_slice, lax_reduced, reduced_hamiltonian, reduced_hamiltonian_raw, rs_lax,
    rs_lax_spectrum, slice_point, Coupling, PhasePoint,
};

/// Energy drift above which the ODE engine gives up.
pub const ODE_UNSTABLE_DRIFT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Double,
    Projection,
    Ode,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Double => "double",
            Engine::Projection => "projection",
            Engine::Ode => "ode",
        }
    }
}

/// Time samples of a reduced trajectory with diagnostics.
///
/// `p` is absent for the projection engine, which only determines positions;
/// its `energy` and `lax_spectrum` stay empty until filled from a double run
/// (see [`Trajectory::adopt_diagnostics`]). `constraint_residual` is only
/// recorded by the double engine.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub engine: Engine,
    pub times: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub p: Option<Vec<Vec<f64>>>,
    pub energy: Vec<f64>,
    pub lax_spectrum: Vec<Vec<f64>>,
    pub constraint_residual: Option<Vec<f64>>,
}

impl Trajectory {
    fn empty(engine: Engine, with_p: bool) -> Self {
        Self {
            engine,
            times: Vec::new(),
            q: Vec::new(),
            p: with_p.then(Vec::new),
            energy: Vec::new(),
            lax_spectrum: Vec::new(),
            constraint_residual: (engine == Engine::Double).then(Vec::new),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Phase point of sample `i`, when momenta are available.
    pub fn phase_point(&self, i: usize, tol: &Tolerances) -> Option<PhasePoint> {
        let p = self.p.as_ref()?.get(i)?;
        PhasePoint::new(self.q[i].clone(), p.clone(), tol).ok()
    }

    /// Copies energy and Lax spectrum from a trajectory over the same times.
    pub fn adopt_diagnostics(&mut self, other: &Trajectory) {
        let n = self.len().min(other.len());
        self.energy = other.energy[..n].to_vec();
        self.lax_spectrum = other.lax_spectrum[..n].to_vec();
    }

    /// `max_t |E(t) − E(0)|`.
    pub fn energy_drift(&self) -> f64 {
        match self.energy.first() {
            Some(e0) => self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max),
            None => 0.0,
        }
    }

    pub fn max_constraint_residual(&self) -> Option<f64> {
        self.constraint_residual
            .as_ref()
            .map(|r| r.iter().copied().fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OdeMethod {
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeSettings {
    pub step: f64,
    pub gradient_step: f64,
    pub method: OdeMethod,
}

impl Default for OdeSettings {
    fn default() -> Self {
        Self {
            step: 1e-3,
            gradient_step: 1e-6,
            method: OdeMethod::Rk4,
        }
    }
}

impl OdeSettings {
    pub fn validate(&self) -> Result<()> {
        if self.step > 0.0 && self.gradient_step > 0.0 && self.step.is_finite() && self.gradient_step.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "ode step sizes must be positive: {self:?}"
            )))
        }
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.first() != Some(&0.0) {
        return Err(Error::InvalidInput("times must start at 0".into()));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "times must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

fn collision(t: f64, err: Error, partial: Trajectory) -> Error {
    match err {
        Error::DegenerateAlcove(reason) => Error::Collision {
            t,
            reason,
            partial: Box::new(partial),
        },
        other => other,
    }
}

/// Samples `K(t) = free_flow(slice_point(start), μ, t)` and maps each sample
/// back to the slice with [`decompose_to_slice`].
pub fn flow_via_double(
    start: &PhasePoint,
    x: Coupling,
    mu: &MuWeights,
    times: &[f64],
    tol: &Tolerances,
) -> Result<Trajectory> {
    check_times(times)?;
    let flow = FreeFlow::new(&slice_point(start, x), mu, tol)?;
    let mut traj = Trajectory::empty(Engine::Double, true);
    for &t in times {
        let sample = (|| {
            let k = flow.at(t);
            let residual = constraint_residual(&k, x, tol)?;
            let point = if t == 0.0 {
                start.clone()
            } else {
                decompose_to_slice(&k, x, tol)?.1
            };
            let energy = reduced_hamiltonian(&point, x, mu, tol)?;
            let spectrum = rs_lax_spectrum(&point, x, tol)?;
            Ok::<_, Error>((point, residual, energy, spectrum))
        })();
        let (point, residual, energy, spectrum) = match sample {
            Ok(s) => s,
            Err(e) => return Err(collision(t, e, traj)),
        };
        traj.times.push(t);
        traj.q.push(point.angles().to_vec());
        if let Some(p) = traj.p.as_mut() {
            p.push(point.p().to_vec());
        }
        traj.energy.push(energy);
        traj.lax_spectrum.push(spectrum);
        if let Some(r) = traj.constraint_residual.as_mut() {
            r.push(residual);
        }
    }
    Ok(traj)
}

/// Which Lax matrix generates the unitary geodesic of the projection engine.
/// Both give the same eigenangles, since they differ by a diagonal
/// conjugation that commutes with `T(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionSeed {
    /// The Ruijsenaars–Schneider matrix `𝐋(0)`.
    #[default]
    RsLax,
    /// The reduced matrix `L(0) = Γ·𝐋(0)·Γ⁻¹`.
    ReducedLax,
}

pub fn flow_via_projection(
    start: &PhasePoint,
    x: Coupling,
    mu: &MuWeights,
    times: &[f64],
    tol: &Tolerances,
) -> Result<Trajectory> {
    flow_via_projection_seeded(start, x, mu, times, ProjectionSeed::default(), tol)
}

/// Positions from the ordered eigenangles of `T(0)·exp(it Σ_j μ_j 𝐋(0)^j)`.
///
/// Eigenvalues are followed from sample to sample by maximal eigenvector
/// overlap and their angles unwrapped along each branch; each sample is then
/// reduced modulo 2π, halved and sorted into the alcove.
pub fn flow_via_projection_seeded(
    start: &PhasePoint,
    x: Coupling,
    mu: &MuWeights,
    times: &[f64],
    seed: ProjectionSeed,
    tol: &Tolerances,
) -> Result<Trajectory> {
    check_times(times)?;
    let lax = match seed {
        ProjectionSeed::RsLax => rs_lax(start, x),
        ProjectionSeed::ReducedLax => lax_reduced(start, x),
    };
    let generator = hermitian_eig(&lax, tol)?;
    let rates: Vec<f64> = generator.values.iter().map(|&l| mu.flow_generator(l)).collect();
    let t0 = start.q().torus();
    let n = start.dim();

    let mut traj = Trajectory::empty(Engine::Projection, false);
    let mut branches: Vec<f64> = start.angles().iter().map(|q| 2.0 * q).collect();
    let mut previous: Option<UnitaryMatrix> = None;
    for &t in times {
        let phases: Vec<C64> = rates.iter().map(|r| C64::from_polar(1.0, t * r)).collect();
        let geodesic = t0.matrix() * &generator.vectors * diag(&phases) * generator.vectors.adjoint();
        let eig = match unitary_eig(&UnitaryMatrix::from_matrix_unchecked(geodesic), tol) {
            Ok(e) => e,
            Err(e) => return Err(collision(t, e, traj)),
        };
        if eig.degenerate {
            let reason = format!("eigenvalues of the geodesic collide: {:?}", eig.angles);
            return Err(collision(t, Error::DegenerateAlcove(reason), traj));
        }
        match &previous {
            None if t == 0.0 => {}
            _ => {
                let assignment = match &previous {
                    Some(prev) => match_by_overlap(prev, &eig.vectors),
                    None => match_by_angle(&branches, &eig.angles),
                };
                for (branch, &col) in assignment.iter().enumerate() {
                    let step = (eig.angles[col] - branches[branch] + PI).rem_euclid(2.0 * PI) - PI;
                    branches[branch] += step;
                }
            }
        }
        previous = Some(eig.vectors.clone());

        let mut q: Vec<f64> = branches.iter().map(|b| 0.5 * b.rem_euclid(2.0 * PI)).collect();
        q.iter_mut().filter(|v| **v >= PI).for_each(|v| *v = 0.0);
        q.sort_by(|a, b| b.total_cmp(a));
        if let Err(e) = crate::reduction::AlcovePoint::new(q.clone(), tol) {
            return Err(collision(t, e, traj));
        }
        debug_assert_eq!(q.len(), n);
        traj.times.push(t);
        traj.q.push(q);
    }
    Ok(traj)
}

/// Greedy assignment of current eigenvector columns to previous branches by
/// largest `|⟨v_prev, v_cur⟩|`.
fn match_by_overlap(prev: &UnitaryMatrix, cur: &UnitaryMatrix) -> Vec<usize> {
    let overlap = prev.matrix().adjoint() * cur.matrix();
    let n = overlap.nrows();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            pairs.push((overlap[(i, j)].norm(), i, j));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut assignment = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for (_, i, j) in pairs {
        if assignment[i] == usize::MAX && !taken[j] {
            assignment[i] = j;
            taken[j] = true;
        }
    }
    assignment
}

/// Used when the first sample is not at t = 0: nearest angle on the circle.
fn match_by_angle(branches: &[f64], angles: &[f64]) -> Vec<usize> {
    let n = branches.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (i, b) in branches.iter().enumerate() {
        for (j, a) in angles.iter().enumerate() {
            let d = ((a - b + PI).rem_euclid(2.0 * PI) - PI).abs();
            pairs.push((d, i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut assignment = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for (_, i, j) in pairs {
        if assignment[i] == usize::MAX && !taken[j] {
            assignment[i] = j;
            taken[j] = true;
        }
    }
    assignment
}

struct HamiltonianField<'a> {
    x: Coupling,
    mu: &'a MuWeights,
    h: f64,
    tol: &'a Tolerances,
}

impl HamiltonianField<'_> {
    fn energy(&self, q: &[f64], p: &[f64]) -> Result<f64> {
        reduced_hamiltonian_raw(q, p, self.x, self.mu, self.tol)
    }

    /// `(∂H/∂p, −∂H/∂q)` by central differences.
    fn rhs(&self, state: &[f64]) -> Result<Vec<f64>> {
        let n = state.len() / 2;
        let mut out = vec![0.0; 2 * n];
        let mut work = state.to_vec();
        for i in 0..2 * n {
            let orig = work[i];
            work[i] = orig + self.h;
            let plus = self.energy(&work[..n], &work[n..])?;
            work[i] = orig - self.h;
            let minus = self.energy(&work[..n], &work[n..])?;
            work[i] = orig;
            let d = (plus - minus) / (2.0 * self.h);
            if i < n {
                out[n + i] = -d;
            } else {
                out[i - n] = d;
            }
        }
        Ok(out)
    }

    fn rk4_step(&self, state: &[f64], dt: f64) -> Result<Vec<f64>> {
        let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };
        let k1 = self.rhs(state)?;
        let k2 = self.rhs(&axpy(state, 0.5 * dt, &k1))?;
        let k3 = self.rhs(&axpy(state, 0.5 * dt, &k2))?;
        let k4 = self.rhs(&axpy(state, dt, &k3))?;
        Ok(state
            .iter()
            .enumerate()
            .map(|(i, s)| s + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect())
    }
}

/// Integrates `q̇ = ∂H/∂p`, `ṗ = −∂H/∂q` for the reduced Hamiltonian with
/// RK4 steps no longer than `settings.step`, landing exactly on each sample
/// time. Samples are reported in the alcove chart.
pub fn flow_via_ode(
    start: &PhasePoint,
    x: Coupling,
    mu: &MuWeights,
    times: &[f64],
    settings: &OdeSettings,
    tol: &Tolerances,
) -> Result<Trajectory> {
    check_times(times)?;
    settings.validate()?;
    let field = HamiltonianField {
        x,
        mu,
        h: settings.gradient_step,
        tol,
    };
    let n = start.dim();
    let mut state: Vec<f64> = start.angles().iter().chain(start.p()).copied().collect();
    let mut traj = Trajectory::empty(Engine::Ode, true);
    let mut now = 0.0;
    let mut e0 = None;
    for &t in times {
        let span = t - now;
        if span > 0.0 {
            let steps = (span / settings.step).ceil().max(1.0) as usize;
            let dt = span / steps as f64;
            for _ in 0..steps {
                state = match field.rk4_step(&state, dt) {
                    Ok(s) => s,
                    Err(e) => return Err(collision(t, e, traj)),
                };
            }
            now = t;
        }
        let sample = (|| {
            let point = PhasePoint::canonical(&state[..n], &state[n..], tol)?;
            let energy = reduced_hamiltonian(&point, x, mu, tol)?;
            let spectrum = rs_lax_spectrum(&point, x, tol)?;
            Ok::<_, Error>((point, energy, spectrum))
        })();
        let (point, energy, spectrum) = match sample {
            Ok(s) => s,
            Err(e) => return Err(collision(t, e, traj)),
        };
        let drift = (energy - *e0.get_or_insert(energy)).abs();
        if drift > ODE_UNSTABLE_DRIFT {
            return Err(Error::StepUnstable { drift });
        }
        traj.times.push(t);
        traj.q.push(point.angles().to_vec());
        if let Some(p) = traj.p.as_mut() {
            p.push(point.p().to_vec());
        }
        traj.energy.push(energy);
        traj.lax_spectrum.push(spectrum);
    }
    Ok(traj)
}

/// Canonical bracket `Σ_k (∂F/∂q_k ∂G/∂p_k − ∂F/∂p_k ∂G/∂q_k)` with
/// fourth-order central differences of step `h`. Needs every gap of `at`
/// (including the distance to the alcove walls) above `10·h`.
pub fn poisson_bracket<F, G>(f: F, g: G, at: &PhasePoint, h: f64, tol: &Tolerances) -> Result<f64>
where
    F: Fn(&PhasePoint) -> Result<f64>,
    G: Fn(&PhasePoint) -> Result<f64>,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!("gradient step {h} must be positive")));
    }
    let q = at.angles();
    let n = at.dim();
    let mut margin = q[0].min(PI - q[0]).min(q[n - 1]);
    for w in q.windows(2) {
        margin = margin.min(w[0] - w[1]);
    }
    if n > 1 {
        margin = margin.min(q[n - 1] + PI - q[0]);
    }
    if margin <= 10.0 * h {
        return Err(Error::DegenerateAlcove(format!(
            "regularity margin {margin:e} too small for gradient step {h:e}"
        )));
    }
    let gradient = |func: &dyn Fn(&PhasePoint) -> Result<f64>| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut dq = vec![0.0; n];
        let mut dp = vec![0.0; n];
        for k in 0..n {
            let shifted = |dqk: f64, dpk: f64| -> Result<PhasePoint> {
                let mut qs = q.to_vec();
                let mut ps = at.p().to_vec();
                qs[k] += dqk;
                ps[k] += dpk;
                PhasePoint::new(qs, ps, tol)
            };
            let stencil = |dir_q: f64, dir_p: f64| -> Result<f64> {
                let at = |s: f64| func(&shifted(s * h * dir_q, s * h * dir_p)?);
                Ok((8.0 * (at(1.0)? - at(-1.0)?) - (at(2.0)? - at(-2.0)?)) / (12.0 * h))
            };
            dq[k] = stencil(1.0, 0.0)?;
            dp[k] = stencil(0.0, 1.0)?;
        }
        Ok((dq, dp))
    };
    let (fq, fp) = gradient(&f)?;
    let (gq, gp) = gradient(&g)?;
    Ok((0..n).map(|k| fq[k] * gp[k] - fp[k] * gq[k]).sum())
}

/// `max_t ‖spec 𝐋(t) − spec 𝐋(0)‖_∞` over the recorded Lax spectra.
pub fn spectrum_drift(traj: &Trajectory) -> Result<f64> {
    let first = traj
        .lax_spectrum
        .first()
        .ok_or_else(|| Error::InvalidInput(format!("{} trajectory has no Lax spectra", traj.engine.name())))?;
    Ok(traj
        .lax_spectrum
        .iter()
        .flat_map(|s| s.iter().zip(first).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max))
}

/// `max_t ‖a_t − b_t‖_∞` between two sequences of vectors.
pub fn max_deviation(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(u, v)| u.iter().zip(v).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn grid(t_end: f64, samples: usize) -> Vec<f64> {
        (0..samples).map(|i| t_end * i as f64 / (samples - 1) as f64).collect()
    }

    fn start3() -> (PhasePoint, Coupling) {
        let pt = PhasePoint::new(vec![2.2, 1.3, 0.5], vec![0.3, -0.2, 0.1], &tol()).unwrap();
        (pt, Coupling::new(0.8).unwrap())
    }

    #[test]
    fn times_are_validated() {
        let (pt, x) = start3();
        let mu = MuWeights::relativistic();
        assert!(flow_via_double(&pt, x, &mu, &[0.1, 0.2], &tol()).is_err());
        assert!(flow_via_projection(&pt, x, &mu, &[0.0, 0.2, 0.2], &tol()).is_err());
        let bad = OdeSettings {
            step: 0.0,
            ..OdeSettings::default()
        };
        assert!(flow_via_ode(&pt, x, &mu, &[0.0, 0.1], &bad, &tol()).is_err());
    }

    #[test]
    fn empty_mu_gives_constant_trajectories() {
        let (pt, x) = start3();
        let mu = MuWeights::empty();
        let times = grid(1.0, 5);
        let d = flow_via_double(&pt, x, &mu, &times, &tol()).unwrap();
        let pr = flow_via_projection(&pt, x, &mu, &times, &tol()).unwrap();
        let o = flow_via_ode(&pt, x, &mu, &times, &OdeSettings::default(), &tol()).unwrap();
        for traj in [&d, &pr, &o] {
            for q in &traj.q {
                assert!(max_deviation(std::slice::from_ref(q), &[pt.angles().to_vec()]) < 1e-8);
            }
        }
        assert!(spectrum_drift(&d).unwrap() < 1e-10);
        assert!(o.energy_drift() < 1e-12);
    }

    #[test]
    fn double_engine_starts_at_start_and_conserves() {
        let (pt, x) = start3();
        let mu = MuWeights::relativistic();
        let traj = flow_via_double(&pt, x, &mu, &grid(1.0, 21), &tol()).unwrap();
        assert_eq!(traj.len(), 21);
        assert_eq!(traj.q[0], pt.angles());
        assert!(traj.energy_drift() < 1e-8);
        assert!(spectrum_drift(&traj).unwrap() < 1e-8);
        assert!(traj.max_constraint_residual().unwrap() < 1e-7);
    }

    #[test]
    fn projection_scalar_geodesic() {
        let x = Coupling::new(0.5).unwrap();
        let mu = MuWeights::relativistic();
        let (q0, p0) = (0.4, 0.9);
        let pt = PhasePoint::new(vec![q0], vec![p0], &tol()).unwrap();
        let times = grid(2.0, 9);
        let traj = flow_via_projection(&pt, x, &mu, &times, &tol()).unwrap();
        for (t, q) in times.iter().zip(&traj.q) {
            let expected = (2.0 * q0 + t * (p0.exp() - (-p0).exp())).rem_euclid(2.0 * PI) / 2.0;
            assert!((q[0] - expected).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn ode_scalar_free_particle() {
        let x = Coupling::new(0.5).unwrap();
        let mu = MuWeights::relativistic();
        let (q0, p0) = (0.4, 0.3);
        let pt = PhasePoint::new(vec![q0], vec![p0], &tol()).unwrap();
        let times = grid(1.0, 6);
        let traj = flow_via_ode(&pt, x, &mu, &times, &OdeSettings::default(), &tol()).unwrap();
        for (i, t) in times.iter().enumerate() {
            assert!((traj.q[i][0] - (q0 + t * p0.sinh())).abs() < 1e-8);
            assert!((traj.p.as_ref().unwrap()[i][0] - p0).abs() < 1e-8);
        }
    }

    #[test]
    fn engines_agree_for_three_particles() {
        let (pt, x) = start3();
        let mu = MuWeights::relativistic();
        let times = grid(1.0, 21);
        let d = flow_via_double(&pt, x, &mu, &times, &tol()).unwrap();
        let pr = flow_via_projection(&pt, x, &mu, &times, &tol()).unwrap();
        let o = flow_via_ode(&pt, x, &mu, &times, &OdeSettings::default(), &tol()).unwrap();
        assert!(max_deviation(&d.q, &pr.q) < 1e-7);
        assert!(max_deviation(&d.q, &o.q) < 1e-5);
        assert!(max_deviation(d.p.as_ref().unwrap(), o.p.as_ref().unwrap()) < 1e-5);
        assert!(o.energy_drift() < 1e-6);
        assert!(spectrum_drift(&o).unwrap() < 1e-5);
    }

    #[test]
    fn engines_agree_across_wrap() {
        // the lowest particle crosses q = 0 early on
        let pt = PhasePoint::new(vec![2.2, 1.3, 0.05], vec![0.3, -0.2, -0.6], &tol()).unwrap();
        let x = Coupling::new(0.8).unwrap();
        let mu = MuWeights::relativistic();
        let times = grid(0.5, 11);
        let d = flow_via_double(&pt, x, &mu, &times, &tol()).unwrap();
        let pr = flow_via_projection(&pt, x, &mu, &times, &tol()).unwrap();
        let o = flow_via_ode(&pt, x, &mu, &times, &OdeSettings::default(), &tol()).unwrap();
        assert!(d.q.last().unwrap()[0] > 2.5, "expected the wrap to occur");
        assert!(max_deviation(&d.q, &pr.q) < 1e-7);
        assert!(max_deviation(&d.q, &o.q) < 1e-5);
        assert!(max_deviation(d.p.as_ref().unwrap(), o.p.as_ref().unwrap()) < 1e-5);
    }

    #[test]
    fn projection_seed_equivalence() {
        let (pt, x) = start3();
        let mu = MuWeights::from_pairs(&[(1, 1.0), (-1, -1.0), (2, 0.3)]).unwrap();
        let times = grid(1.0, 11);
        let a = flow_via_projection_seeded(&pt, x, &mu, &times, ProjectionSeed::RsLax, &tol()).unwrap();
        let b = flow_via_projection_seeded(&pt, x, &mu, &times, ProjectionSeed::ReducedLax, &tol()).unwrap();
        assert!(max_deviation(&a.q, &b.q) < 1e-9);
    }

    #[test]
    fn bracket_of_coordinates() {
        let (pt, x) = start3();
        let qf = |p: &PhasePoint| Ok(p.angles()[0]);
        let pf = |p: &PhasePoint| Ok(p.p()[0]);
        let b = poisson_bracket(qf, pf, &pt, 1e-6, &tol()).unwrap();
        assert!((b - 1.0).abs() < 1e-9);
        let h = |p: &PhasePoint| reduced_hamiltonian(p, x, &MuWeights::relativistic(), &tol());
        assert_eq!(poisson_bracket(h, h, &pt, 1e-6, &tol()).unwrap(), 0.0);
    }

    #[test]
    fn hamiltonians_commute() {
        let (pt, x) = start3();
        let h1 = |p: &PhasePoint| reduced_hamiltonian(p, x, &MuWeights::relativistic(), &tol());
        let h2 = |p: &PhasePoint| reduced_hamiltonian(p, x, &MuWeights::from_pairs(&[(2, 1.0)]).unwrap(), &tol());
        assert!(poisson_bracket(h1, h2, &pt, 1e-3, &tol()).unwrap().abs() < 1e-5);
    }

    #[test]
    fn bracket_requires_margin() {
        let pt = PhasePoint::new(vec![1.0, 1.0 - 5e-6], vec![0.0, 0.0], &tol()).unwrap();
        let f = |p: &PhasePoint| Ok(p.angles()[0]);
        assert!(matches!(
            poisson_bracket(f, f, &pt, 1e-6, &tol()),
            Err(Error::DegenerateAlcove(_))
        ));
    }

    #[test]
    fn spectrum_drift_needs_spectra() {
        let (pt, x) = start3();
        let traj = flow_via_projection(&pt, x, &MuWeights::relativistic(), &grid(1.0, 3), &tol()).unwrap();
        assert!(spectrum_drift(&traj).is_err());
    }

    #[test]
    fn collision_is_reported_with_partial_trajectory() {
        // two particles with opposite momenta run into the repulsive core;
        // a tiny coupling lets them get within alcove_gap only if the
        // coarse tolerance is huge, so raise it
        let coarse = Tolerances {
            alcove_gap: 0.5,
            ..Tolerances::default()
        };
        let pt = PhasePoint::new(vec![1.8, 1.0], vec![-1.0, 1.0], &coarse).unwrap();
        let x = Coupling::new(0.01).unwrap();
        let err = flow_via_double(&pt, x, &MuWeights::relativistic(), &grid(1.0, 11), &coarse).unwrap_err();
        match err {
            Error::Collision { t, partial, .. } => {
                assert!(t > 0.0);
                assert!(!partial.is_empty() && partial.len() < 11);
                assert!(*partial.times.last().unwrap() < t);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
