//! The reduced system: the moment map value `ν(x)`, the gauge slice
//! `S = {n(T)·a·T⁻¹}`, its Darboux coordinates `(q, p)` and the
//! trigonometric Ruijsenaars–Schneider Lax matrices and Hamiltonians.
//!
//! Conventions: `T = diag(e^{2iq_k})` with `π > q_1 > … > q_n ≥ 0`,
//! `a = diag(e^{ζ_k})` with `ζ` given by [`zeta`]. Indices in the closed forms
//! below are 0-based versions of the usual 1-based ones.

use std::f64::consts::PI;

use crate::double::{iwasawa_maps, moment_map, quasi_adjoint, DoublePoint, MuWeights};
use crate::error::{Error, Result};
use crate::matcore::{
    hermitian_eigenvalues, iwasawa_right, min_circular_gap, unitary_eig, uu_dagger_factor, BorelElement, CMatrix,
    Tolerances, UnitaryMatrix, C64,
};

/// Largest `‖Λ(K) − ν(x)‖_F` accepted by [`decompose_to_slice`].
pub const CONSTRAINT_TOL: f64 = 1e-6;

/// The coupling `x ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling(f64);

impl Coupling {
    pub fn new(x: f64) -> Result<Self> {
        if !x.is_finite() || x.abs() <= 1e-12 {
            return Err(Error::InvalidInput(format!(
                "coupling x = {x} must be finite and non-zero"
            )));
        }
        Ok(Self(x))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Strictly decreasing angles in `[0, π)` describing a regular torus element
/// `T = diag(e^{2iq_k})`. Regularity includes the wrap-around gap
/// `q_n + π − q_1`, since `e^{2iq_1}` and `e^{2iq_n}` collide when it closes.
#[derive(Debug, Clone, PartialEq)]
pub struct AlcovePoint(Vec<f64>);

impl AlcovePoint {
    pub fn new(q: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::InvalidInput("q must have at least one entry".into()));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("q has non-finite entries".into()));
        }
        if !(q[0] < PI && q[q.len() - 1] >= 0.0) {
            return Err(Error::DegenerateAlcove(format!("angles {q:?} leave [0, π)")));
        }
        if let Some(w) = q.windows(2).find(|w| w[0] - w[1] <= tol.alcove_gap) {
            return Err(Error::DegenerateAlcove(format!(
                "q = {:.17} and {:.17} are not strictly decreasing with gap > {:e}",
                w[0], w[1], tol.alcove_gap
            )));
        }
        if q.len() > 1 && q[q.len() - 1] + PI - q[0] <= tol.alcove_gap {
            return Err(Error::DegenerateAlcove(format!(
                "q_1 = {} and q_n = {} coincide modulo π",
                q[0],
                q[q.len() - 1]
            )));
        }
        Ok(Self(q))
    }

    pub(crate) fn from_sorted_unchecked(q: Vec<f64>) -> Self {
        Self(q)
    }

    pub fn angles(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Diagonal entries `T_k = e^{2iq_k}`.
    pub fn torus_entries(&self) -> Vec<C64> {
        torus_entries(&self.0)
    }

    pub fn torus(&self) -> UnitaryMatrix {
        let doubled: Vec<f64> = self.0.iter().map(|q| 2.0 * q).collect();
        UnitaryMatrix::from_angles(&doubled)
    }
}

/// Darboux coordinates of the reduced phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    q: AlcovePoint,
    p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        Self::from_parts(AlcovePoint::new(q, tol)?, p)
    }

    pub fn from_parts(q: AlcovePoint, p: Vec<f64>) -> Result<Self> {
        if q.dim() != p.len() {
            return Err(Error::InvalidInput(format!(
                "q has {} entries, p has {}",
                q.dim(),
                p.len()
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("p has non-finite entries".into()));
        }
        Ok(Self { q, p })
    }

    pub(crate) fn from_parts_unchecked(q: AlcovePoint, p: Vec<f64>) -> Self {
        Self { q, p }
    }

    /// Brings arbitrary `(q, p)` into the alcove chart: angles reduced
    /// modulo π, then sorted decreasingly with the momenta carried along.
    pub fn canonical(q: &[f64], p: &[f64], tol: &Tolerances) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::InvalidInput(format!(
                "q has {} entries, p has {}",
                q.len(),
                p.len()
            )));
        }
        let mut pairs: Vec<(f64, f64)> = q
            .iter()
            .zip(p)
            .map(|(&qk, &pk)| {
                let w = qk.rem_euclid(PI);
                (if w >= PI { 0.0 } else { w }, pk)
            })
            .collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (q, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        Self::new(q, p, tol)
    }

    pub fn q(&self) -> &AlcovePoint {
        &self.q
    }

    pub fn angles(&self) -> &[f64] {
        self.q.angles()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }
}

/// Form of the logarithmic correction in `ζ`. The default is the one that
/// turns the reduced symplectic form into `Σ dp_k ∧ dq_k`; the other settings
/// exist so the cross-formula checks can be shown to catch a wrong choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarbouxConvention {
    pub coefficient: f64,
    /// Swap the signs of the `m < k` and `m > k` sums.
    pub flip_signs: bool,
}

impl Default for DarbouxConvention {
    fn default() -> Self {
        Self {
            coefficient: 0.25,
            flip_signs: false,
        }
    }
}

fn torus_entries(q: &[f64]) -> Vec<C64> {
    q.iter().map(|&qk| C64::from_polar(1.0, 2.0 * qk)).collect()
}

/// `1 + sinh²(x/2) / sin²(Δq)`.
fn pair_factor(x: f64, dq: f64) -> f64 {
    let s = (0.5 * x).sinh() / dq.sin();
    1.0 + s * s
}

/// `Π_{m≠k} (1 + sinh²(x/2)/sin²(q_k − q_m))^{power}`.
fn pair_product(q: &[f64], x: f64, k: usize, power: f64) -> f64 {
    (0..q.len())
        .filter(|&m| m != k)
        .map(|m| pair_factor(x, q[k] - q[m]).powf(power))
        .product()
}

/// Requires `e^{2iq_k}` pairwise distinct; no ordering assumed.
pub(crate) fn check_distinct(q: &[f64], tol: &Tolerances) -> Result<()> {
    let doubled: Vec<f64> = q.iter().map(|v| 2.0 * v).collect();
    let gap = 0.5 * min_circular_gap(&doubled);
    if q.iter().any(|v| !v.is_finite()) || gap <= tol.alcove_gap {
        return Err(Error::DegenerateAlcove(format!(
            "angles {q:?} coincide modulo π (gap {gap:e})"
        )));
    }
    Ok(())
}

/// `ν(x)`: unit diagonal, `ν_{jk} = (1 − e^{−x})·e^{(k−j)x/2}` above it.
pub fn nu(x: Coupling, n: usize) -> BorelElement {
    let x = x.value();
    let m = CMatrix::from_fn(n, n, |j, k| {
        if j == k {
            C64::new(1.0, 0.0)
        } else if j < k {
            C64::new(-(-x).exp_m1() * ((k - j) as f64 * 0.5 * x).exp(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    BorelElement::from_upper_unchecked(m)
}

/// The positive vector `v` with `ln(ν ν†) = x(v v† − 1)`:
/// `v_k = sqrt(n(e^x − 1)/(1 − e^{−nx}))·e^{−kx/2}`.
pub fn kks_vector(x: Coupling, n: usize) -> Vec<f64> {
    let x = x.value();
    let nf = n as f64;
    let scale = (nf * x.exp_m1() / -(-nf * x).exp_m1()).sqrt();
    (1..=n).map(|k| scale * (-0.5 * k as f64 * x).exp()).collect()
}

/// Recovers `v` from the trailing principal minors of `b·b†`:
/// `|v_k|² = n/(e^{nx} − 1)·e^{(n−k)x}·[e^x det M_{k−1} − det M_k]`, where
/// `M_k` drops the first `k` rows and columns and `det M_n = 1`.
///
/// For upper triangular `b` the trailing blocks of `b·b†` are `b_k·b_k†`,
/// so `det M_k = Π_{j≥k} |b_jj|²` with no cancellation.
pub fn kks_vector_from_factor(b: &BorelElement, x: Coupling) -> Result<Vec<f64>> {
    let n = b.dim();
    let pivots: Vec<f64> = b.diagonal().iter().map(|d| d * d).collect();
    let mut dets = vec![1.0; n + 1];
    for k in (0..n).rev() {
        dets[k] = dets[k + 1] * pivots[k];
    }
    let x = x.value();
    let nf = n as f64;
    (1..=n)
        .map(|k| {
            let bracket = dets[k] * (x.exp() * pivots[k - 1] - 1.0);
            let sq = nf / (nf * x).exp_m1() * ((nf - k as f64) * x).exp() * bracket;
            if sq < -1e-12 || !sq.is_finite() {
                Err(Error::InvalidInput(format!("minor solve gave |v_{k}|² = {sq}")))
            } else {
                Ok(sq.max(0.0).sqrt())
            }
        })
        .collect()
}

/// Same as [`kks_vector_from_factor`] for a dense Hermitian input, factored
/// first with [`uu_dagger_factor`]. The Schur pivots of `ν ν†` shrink like
/// `e^{−(n−1)|x|}` relative to its entries for `x > 0`, so the absolute error
/// grows like `ε·e^{(n−1)x}`.
pub fn kks_vector_from_minors(nu_nu_dagger: &CMatrix, x: Coupling, tol: &Tolerances) -> Result<Vec<f64>> {
    kks_vector_from_factor(&uu_dagger_factor(nu_nu_dagger, tol)?, x)
}

fn n_matrix_raw(q: &[f64], x: f64) -> CMatrix {
    let t = torus_entries(q);
    let (up, down) = ((0.5 * x).exp(), (-0.5 * x).exp());
    CMatrix::from_fn(q.len(), q.len(), |k, l| {
        if k == l {
            C64::new(1.0, 0.0)
        } else if k > l {
            C64::new(0.0, 0.0)
        } else {
            (1..=l - k)
                .map(|m| (t[l] * up - t[k + m] * down) / (t[l] - t[k + m - 1]))
                .product()
        }
    })
}

fn n_matrix_inverse_raw(q: &[f64], x: f64) -> CMatrix {
    let tbar: Vec<C64> = torus_entries(q).iter().map(|z| z.conj()).collect();
    let (up, down) = ((0.5 * x).exp(), (-0.5 * x).exp());
    CMatrix::from_fn(q.len(), q.len(), |k, l| {
        if k == l {
            C64::new(1.0, 0.0)
        } else if k > l {
            C64::new(0.0, 0.0)
        } else {
            (1..=l - k)
                .map(|m| (tbar[k] * down - tbar[k + m - 1] * up) / (tbar[k] - tbar[k + m]))
                .product()
        }
    })
}

/// The unit upper-triangular `n(T)` solving `n(T)·T·n(T)⁻¹·T⁻¹ = ν(x)`:
/// `n_{kl} = Π_{m=1}^{l−k} (e^{x/2}T_l − e^{−x/2}T_{k+m}) / (T_l − T_{k+m−1})`.
pub fn n_matrix(q: &AlcovePoint, x: Coupling) -> CMatrix {
    n_matrix_raw(q.angles(), x.value())
}

/// Closed-form inverse of [`n_matrix`].
pub fn n_matrix_inverse(q: &AlcovePoint, x: Coupling) -> CMatrix {
    n_matrix_inverse_raw(q.angles(), x.value())
}

/// Signed log sums `Σ_{m<k} ln f − Σ_{m>k} ln f` (or the flipped pattern).
fn log_sums(q: &[f64], x: f64, k: usize, flip: bool) -> f64 {
    let mut below = 0.0;
    let mut above = 0.0;
    for m in 0..q.len() {
        if m < k {
            below += pair_factor(x, q[k] - q[m]).ln();
        } else if m > k {
            above += pair_factor(x, q[k] - q[m]).ln();
        }
    }
    if flip {
        above - below
    } else {
        below - above
    }
}

fn zeta_raw(q: &[f64], p: &[f64], x: f64, conv: DarbouxConvention) -> Vec<f64> {
    (0..q.len())
        .map(|k| -0.5 * p[k] - conv.coefficient * log_sums(q, x, k, conv.flip_signs))
        .collect()
}

/// `ζ_k = −p_k/2 − ¼ Σ_{m<k} ln(1 + sinh²(x/2)/sin²(q_k−q_m)) + ¼ Σ_{m>k} ln(…)`.
pub fn zeta(point: &PhasePoint, x: Coupling) -> Vec<f64> {
    zeta_with(point, x, DarbouxConvention::default())
}

pub fn zeta_with(point: &PhasePoint, x: Coupling, conv: DarbouxConvention) -> Vec<f64> {
    zeta_raw(point.angles(), point.p(), x.value(), conv)
}

/// Inverts [`zeta`] for the momenta.
pub fn momenta_from_zeta(q: &AlcovePoint, zeta: &[f64], x: Coupling) -> Vec<f64> {
    let conv = DarbouxConvention::default();
    (0..q.dim())
        .map(|k| -2.0 * (zeta[k] + conv.coefficient * log_sums(q.angles(), x.value(), k, false)))
        .collect()
}

/// The slice point `K = n(T)·a·T⁻¹`.
pub fn slice_point(point: &PhasePoint, x: Coupling) -> DoublePoint {
    let q = point.angles();
    let n = n_matrix_raw(q, x.value());
    let a: Vec<f64> = zeta(point, x).iter().map(|z| z.exp()).collect();
    let k = CMatrix::from_fn(q.len(), q.len(), |i, j| n[(i, j)] * C64::from_polar(a[j], -2.0 * q[j]));
    DoublePoint::from_matrix_unchecked(k)
}

fn lax_reduced_raw(q: &[f64], p: &[f64], x: f64, conv: DarbouxConvention) -> CMatrix {
    let n_inv = n_matrix_inverse_raw(q, x);
    let a_inv: Vec<f64> = zeta_raw(q, p, x, conv).iter().map(|z| (-z).exp()).collect();
    let core = &n_inv * n_inv.adjoint();
    let l = CMatrix::from_fn(q.len(), q.len(), |i, j| core[(i, j)] * (a_inv[i] * a_inv[j]));
    (&l + l.adjoint()).unscale(2.0)
}

/// `L(T, a)⁻¹ = a·n(T)†·n(T)·a`.
fn lax_reduced_inverse_raw(q: &[f64], p: &[f64], x: f64) -> CMatrix {
    let n = n_matrix_raw(q, x);
    let a: Vec<f64> = zeta_raw(q, p, x, DarbouxConvention::default())
        .iter()
        .map(|z| z.exp())
        .collect();
    let core = n.adjoint() * &n;
    let l = CMatrix::from_fn(q.len(), q.len(), |i, j| core[(i, j)] * (a[i] * a[j]));
    (&l + l.adjoint()).unscale(2.0)
}

/// `L(T, a) = a⁻¹·n(T)⁻¹·(n(T)†)⁻¹·a⁻¹`.
pub fn lax_reduced(point: &PhasePoint, x: Coupling) -> CMatrix {
    lax_reduced_with(point, x, DarbouxConvention::default())
}

pub fn lax_reduced_with(point: &PhasePoint, x: Coupling, conv: DarbouxConvention) -> CMatrix {
    lax_reduced_raw(point.angles(), point.p(), x.value(), conv)
}

fn gamma_raw(q: &[f64], x: f64) -> Vec<C64> {
    let (up, down) = ((0.5 * x).exp(), (-0.5 * x).exp());
    let tbar: Vec<C64> = torus_entries(q).iter().map(|z| z.conj()).collect();
    (0..q.len())
        .map(|k| {
            let z: C64 = ((k + 1)..q.len())
                .map(|m| (tbar[k] * down - tbar[m] * up) / (tbar[k] - tbar[m]))
                .product::<C64>()
                * C64::from_polar(1.0, -q[k]);
            z / z.norm()
        })
        .collect()
}

/// Diagonal phases `Γ_k` of `e^{−iq_k} Π_{m>k} (e^{−x/2}T̄_k − e^{x/2}T̄_m)/(T̄_k − T̄_m)`.
pub fn gamma_phases(q: &AlcovePoint, x: Coupling) -> UnitaryMatrix {
    UnitaryMatrix::from_phases_of(&gamma_raw(q.angles(), x.value()))
}

/// `e^{(p_k+p_l)/2}·sinh(x/2)/sinh(x/2 + i(q_k − q_l))·P_k·P_l` with
/// `P_k = Π_{m≠k}(1 + sinh²(x/2)/sin²(q_k−q_m))^{1/4}`.
fn rs_lax_raw(q: &[f64], p: &[f64], x: f64) -> CMatrix {
    let n = q.len();
    let quartic: Vec<f64> = (0..n).map(|k| pair_product(q, x, k, 0.25)).collect();
    let sh = (0.5 * x).sinh();
    CMatrix::from_fn(n, n, |k, l| {
        let kernel = C64::new(sh, 0.0) / C64::new(0.5 * x, q[k] - q[l]).sinh();
        kernel * (0.5 * (p[k] + p[l])).exp() * quartic[k] * quartic[l]
    })
}

/// Components of `L(T, a)` in Darboux variables: `Γ_k Γ̄_l` times the
/// Ruijsenaars–Schneider entry.
pub fn lax_components(point: &PhasePoint, x: Coupling) -> CMatrix {
    let gamma = gamma_raw(point.angles(), x.value());
    let rs = rs_lax_raw(point.angles(), point.p(), x.value());
    CMatrix::from_fn(rs.nrows(), rs.ncols(), |k, l| gamma[k] * gamma[l].conj() * rs[(k, l)])
}

/// The trigonometric Ruijsenaars–Schneider Lax matrix `𝐋 = Γ⁻¹·L·Γ`.
pub fn rs_lax(point: &PhasePoint, x: Coupling) -> CMatrix {
    rs_lax_raw(point.angles(), point.p(), x.value())
}

/// `Σ_k cosh(p_k)·Π_{m≠k}(1 + sinh²(x/2)/sin²(q_k − q_m))^{1/2}`.
pub fn rs_hamiltonian(point: &PhasePoint, x: Coupling) -> f64 {
    let q = point.angles();
    (0..q.len())
        .map(|k| point.p()[k].cosh() * pair_product(q, x.value(), k, 0.5))
        .sum()
}

pub(crate) fn reduced_hamiltonian_raw(
    q: &[f64],
    p: &[f64],
    x: Coupling,
    mu: &MuWeights,
    tol: &Tolerances,
) -> Result<f64> {
    check_distinct(q, tol)?;
    if mu.is_empty() {
        return Ok(0.0);
    }
    let l = lax_reduced_raw(q, p, x.value(), DarbouxConvention::default());
    let spectrum = hermitian_eigenvalues(&l, tol)?;
    if !mu.has_negative_powers() {
        return Ok(mu.hamiltonian_of_spectrum(&spectrum));
    }
    let inverse = hermitian_eigenvalues(&lax_reduced_inverse_raw(q, p, x.value()), tol)?;
    Ok(mu.hamiltonian_of_spectra(&spectrum, &inverse))
}

/// `H_μ(T, a) = ½ Σ_j (μ_j/j) tr L(T, a)^j`.
pub fn reduced_hamiltonian(point: &PhasePoint, x: Coupling, mu: &MuWeights, tol: &Tolerances) -> Result<f64> {
    reduced_hamiltonian_raw(point.angles(), point.p(), x, mu, tol)
}

/// Sorted eigenvalues of [`rs_lax`].
pub fn rs_lax_spectrum(point: &PhasePoint, x: Coupling, tol: &Tolerances) -> Result<Vec<f64>> {
    hermitian_eigenvalues(&rs_lax(point, x), tol)
}

/// Writes a constrained `K` (with `Λ(K) = ν(x)`) as `g ▷ (n(T)·a·T⁻¹)` and
/// returns `g` together with the Darboux coordinates of the slice point.
///
/// Steps: diagonalize `Ξ_R(K) = h·T·h⁻¹` with alcove-ordered `T`; factor
/// `Λ_L(K)·h = g₀·b_R⁻¹`, so that `g₀⁻¹ ▷ K = b_R⁻¹·T⁻¹`; split
/// `b_R⁻¹ = n·a`. The diagonal torus left free by `h` is fixed by matching
/// the superdiagonal of `n` to that of `n(T)`, and the central phase by
/// `g·v = v` with `v` from [`kks_vector`]. The output is therefore
/// deterministic.
pub fn decompose_to_slice(k: &DoublePoint, x: Coupling, tol: &Tolerances) -> Result<(UnitaryMatrix, PhasePoint)> {
    let dim = k.dim();
    let residual = (moment_map(k, tol)?.matrix() - nu(x, dim).matrix()).norm();
    if !(residual < CONSTRAINT_TOL) {
        return Err(Error::ConstraintViolated { residual });
    }
    let maps = iwasawa_maps(k, tol)?;
    let eig = unitary_eig(&maps.xi_r, tol)?;
    if eig.degenerate {
        return Err(Error::DegenerateAlcove(format!(
            "eigenangles of Ξ_R(K) collide: {:?}",
            eig.angles
        )));
    }
    let q = AlcovePoint::new(eig.angles.iter().map(|t| 0.5 * t).collect(), tol)?;
    let h = eig.vectors.matrix();

    let (g0, b_r) = iwasawa_right(&(maps.lambda_l.matrix() * h), tol)?;
    let (unit, a) = b_r.inverse().split_unipotent();

    let target = n_matrix(&q, x);
    let mut tau = vec![C64::new(1.0, 0.0); dim];
    for j in 0..dim.saturating_sub(1) {
        let ratio = target[(j, j + 1)] / unit[(j, j + 1)];
        tau[j + 1] = tau[j] * ratio / ratio.norm();
    }
    let mut g = g0.into_matrix();
    for (j, t) in tau.iter().enumerate() {
        g.column_mut(j).iter_mut().for_each(|z| *z *= t);
    }
    let v = kks_vector(x, dim);
    let mut overlap = C64::new(0.0, 0.0);
    for i in 0..dim {
        for j in 0..dim {
            overlap += v[i] * g[(i, j)] * v[j];
        }
    }
    let central = overlap.conj() / overlap.norm();
    g.iter_mut().for_each(|z| *z *= central);

    let zeta: Vec<f64> = a.iter().map(|ak| ak.ln()).collect();
    let p = momenta_from_zeta(&q, &zeta, x);
    let point = PhasePoint::from_parts(q, p)?;
    Ok((UnitaryMatrix::from_matrix_unchecked(g), point))
}

/// `‖Λ(K) − ν(x)‖_F`.
pub fn constraint_residual(k: &DoublePoint, x: Coupling, tol: &Tolerances) -> Result<f64> {
    Ok((moment_map(k, tol)?.matrix() - nu(x, k.dim()).matrix()).norm())
}

/// Reconstructs `g ▷ slice_point(point)`.
pub fn lift(g: &UnitaryMatrix, point: &PhasePoint, x: Coupling, tol: &Tolerances) -> Result<DoublePoint> {
    quasi_adjoint(g, &slice_point(point, x), tol)
}
