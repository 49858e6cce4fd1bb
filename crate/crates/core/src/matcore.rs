//! Dense complex linear algebra for the small matrices (n ≤ 16) used by the
//! rest of the crate.
//!
//! Storage, Householder QR and the Hermitian eigensolver come from
//! `nalgebra`. Everything specific to the groups involved is built here: the
//! upper-triangular `b·b†` factorization, the two Iwasawa decompositions
//! `K = b_L·g_R⁻¹ = g_L·b_R⁻¹`, the eigendecomposition of unitary matrices and
//! functions of Hermitian matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Numerical thresholds shared by every module. Passed explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Structural zero (below-diagonal entries, imaginary parts, symmetry).
    pub tol_zero: f64,
    /// Bound on `‖U†U − 1‖_F` for a matrix to count as unitary.
    pub tol_unitary: f64,
    /// Eigensolver convergence target.
    pub tol_eig: f64,
    /// Minimum angle separation for a torus element to count as regular.
    pub alcove_gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_zero: 1e-10,
            tol_unitary: 1e-9,
            tol_eig: 1e-12,
            alcove_gap: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [self.tol_zero, self.tol_unitary, self.tol_eig, self.alcove_gap];
        if all.iter().all(|t| t.is_finite() && *t > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("tolerances must be positive: {self:?}")))
        }
    }
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn diag(values: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_column_slice(values))
}

pub fn real_diag(values: &[f64]) -> CMatrix {
    CMatrix::from_fn(values.len(), values.len(), |i, j| {
        if i == j {
            C64::new(values[i], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `diag(e^{iθ_k})`.
pub fn phase_diag(angles: &[f64]) -> CMatrix {
    let phases: Vec<C64> = angles.iter().map(|&a| C64::from_polar(1.0, a)).collect();
    diag(&phases)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm()
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn hermitian_residual(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

pub fn unitarity_residual(m: &CMatrix) -> f64 {
    (m.adjoint() * m - identity(m.nrows())).norm()
}

/// Frobenius norm of the part of `m` off its diagonal.
pub fn off_diagonal_norm(m: &CMatrix) -> f64 {
    let mut acc = 0.0;
    for (idx, z) in m.iter().enumerate() {
        if idx % m.nrows() != idx / m.nrows() {
            acc += z.norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn smallest_singular_value(m: &CMatrix) -> f64 {
    m.clone().singular_values().min()
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    m.clone().try_inverse().ok_or_else(|| Error::Singular {
        sigma_min: smallest_singular_value(m),
    })
}

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() == 0 || m.nrows() != m.ncols() {
        return Err(Error::InvalidInput(format!(
            "expected a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !is_finite(m) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    Ok(())
}

fn check_hermitian(m: &CMatrix, tol: &Tolerances) -> Result<()> {
    check_square(m)?;
    let residual = hermitian_residual(m);
    if residual > tol.tol_zero * m.norm().max(1.0) {
        return Err(Error::NotHermitian { residual });
    }
    Ok(())
}

fn check_invertible(m: &CMatrix, tol: &Tolerances) -> Result<()> {
    check_square(m)?;
    let sigma_min = smallest_singular_value(m);
    if !(sigma_min > tol.tol_zero * m.norm()) {
        return Err(Error::Singular { sigma_min });
    }
    Ok(())
}

/// Element of the group B: upper triangular with real positive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct BorelElement(CMatrix);

impl BorelElement {
    pub fn new(m: CMatrix, tol: &Tolerances) -> Result<Self> {
        check_square(&m)?;
        let n = m.nrows();
        for i in 0..n {
            for j in 0..i {
                if m[(i, j)].norm() >= tol.tol_zero {
                    return Err(Error::NotBorel(format!(
                        "entry ({i},{j}) below the diagonal has modulus {:e}",
                        m[(i, j)].norm()
                    )));
                }
            }
            let d = m[(i, i)];
            if d.im.abs() >= tol.tol_zero || d.re <= 0.0 {
                return Err(Error::NotBorel(format!("diagonal entry {i} is {d}")));
            }
        }
        Ok(Self::from_upper_unchecked(m))
    }

    /// Zeroes the strictly lower part and the imaginary part of the diagonal.
    pub(crate) fn from_upper_unchecked(mut m: CMatrix) -> Self {
        let n = m.nrows();
        for i in 0..n {
            for j in 0..i {
                m[(i, j)] = C64::new(0.0, 0.0);
            }
            m[(i, i)].im = 0.0;
        }
        Self(m)
    }

    pub fn identity(n: usize) -> Self {
        Self(identity(n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    /// Inverse by back substitution; stays in B.
    pub fn inverse(&self) -> Self {
        let n = self.dim();
        let inv = self.0.solve_upper_triangular(&identity(n)).expect("positive diagonal");
        Self::from_upper_unchecked(inv)
    }

    /// Splits `b = n·a` into its unit upper-triangular part `n` and the
    /// positive diagonal `a`.
    pub fn split_unipotent(&self) -> (CMatrix, Vec<f64>) {
        let a = self.diagonal();
        let mut unit = self.0.clone();
        for (j, aj) in a.iter().enumerate() {
            unit.column_mut(j).unscale_mut(*aj);
        }
        (unit, a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    pub fn new(m: CMatrix, tol: &Tolerances) -> Result<Self> {
        check_square(&m)?;
        let residual = unitarity_residual(&m);
        if residual >= tol.tol_unitary {
            return Err(Error::NotUnitary { residual });
        }
        Ok(Self(m))
    }

    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        Self(m)
    }

    pub fn identity(n: usize) -> Self {
        Self(identity(n))
    }

    /// `diag(e^{iθ_k})`.
    pub fn from_angles(angles: &[f64]) -> Self {
        Self(phase_diag(angles))
    }

    /// Diagonal unitary from arbitrary non-zero complex numbers, keeping only
    /// their phases.
    pub fn from_phases_of(values: &[C64]) -> Self {
        let phases: Vec<C64> = values.iter().map(|z| z / z.norm()).collect();
        Self(diag(&phases))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn mul(&self, other: &UnitaryMatrix) -> Self {
        Self(&self.0 * &other.0)
    }
}

/// Unique factorization `H = b·b†` of a positive-definite Hermitian matrix
/// with `b` upper triangular with positive diagonal (Cholesky run from the
/// bottom-right corner).
pub fn uu_dagger_factor(h: &CMatrix, tol: &Tolerances) -> Result<BorelElement> {
    check_hermitian(h, tol)?;
    let n = h.nrows();
    let herm = (h + h.adjoint()).unscale(2.0);
    let mut b = CMatrix::zeros(n, n);
    for j in (0..n).rev() {
        let mut pivot = herm[(j, j)].re;
        for k in j + 1..n {
            pivot -= b[(j, k)].norm_sqr();
        }
        if !(pivot > 0.0) {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let bjj = pivot.sqrt();
        b[(j, j)] = C64::new(bjj, 0.0);
        for i in 0..j {
            let mut acc = herm[(i, j)];
            for k in j + 1..n {
                acc -= b[(i, k)] * b[(j, k)].conj();
            }
            b[(i, j)] = acc / bjj;
        }
    }
    Ok(BorelElement::from_upper_unchecked(b))
}

/// Householder QR with the phases moved so that `R` has a positive diagonal.
fn qr_positive(m: &CMatrix) -> (CMatrix, CMatrix) {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for k in 0..m.nrows() {
        let d = r[(k, k)];
        let norm = d.norm();
        if norm > 0.0 {
            let phase = d / norm;
            for i in 0..m.nrows() {
                q[(i, k)] *= phase;
            }
            for j in 0..m.ncols() {
                r[(k, j)] *= phase.conj();
            }
        }
    }
    (q, r)
}

/// Conjugation by the reversal permutation: `J·M·J`.
fn reverse_both(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    CMatrix::from_fn(n, n, |i, j| m[(n - 1 - i, n - 1 - j)])
}

/// `K = b_L·g_R⁻¹`; returns `(b_L, g_R)`.
pub fn iwasawa_left(k: &CMatrix, tol: &Tolerances) -> Result<(BorelElement, UnitaryMatrix)> {
    check_invertible(k, tol)?;
    // J K† J = Q R  ⇒  K = (J R J)† (J Q J)†
    let (q, r) = qr_positive(&reverse_both(&k.adjoint()));
    let g_r = UnitaryMatrix::new(reverse_both(&q), tol)?;
    let b_l = BorelElement::from_upper_unchecked(reverse_both(&r).adjoint());
    Ok((b_l, g_r))
}

/// `K = g_L·b_R⁻¹`; returns `(g_L, b_R)`.
pub fn iwasawa_right(k: &CMatrix, tol: &Tolerances) -> Result<(UnitaryMatrix, BorelElement)> {
    check_invertible(k, tol)?;
    let (q, r) = qr_positive(k);
    let g_l = UnitaryMatrix::new(q, tol)?;
    let b_r = BorelElement::from_upper_unchecked(r).inverse();
    Ok((g_l, b_r))
}

/// Eigenvalues ascending, eigenvectors as matching columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// `V·diag(f(λ))·V†`.
    pub fn apply(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let fvals: Vec<C64> = self.values.iter().map(|&l| f(l)).collect();
        &self.vectors * diag(&fvals) * self.vectors.adjoint()
    }
}

pub fn hermitian_eig(h: &CMatrix, tol: &Tolerances) -> Result<HermitianEigen> {
    check_hermitian(h, tol)?;
    let herm = (h + h.adjoint()).unscale(2.0);
    let eig = SymmetricEigen::try_new(herm, f64::EPSILON, 10_000).ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(h.nrows(), h.ncols(), |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

pub fn hermitian_eigenvalues(h: &CMatrix, tol: &Tolerances) -> Result<Vec<f64>> {
    Ok(hermitian_eig(h, tol)?.values)
}

/// `e^{isH}` for Hermitian `H`.
pub fn herm_exp(h: &CMatrix, s: f64, tol: &Tolerances) -> Result<UnitaryMatrix> {
    let eig = hermitian_eig(h, tol)?;
    Ok(UnitaryMatrix::from_matrix_unchecked(
        eig.apply(|l| C64::from_polar(1.0, s * l)),
    ))
}

/// Principal logarithm of a positive-definite Hermitian matrix.
pub fn hermitian_log(h: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    let eig = hermitian_eig(h, tol)?;
    if let Some((index, &pivot)) = eig.values.iter().enumerate().find(|(_, &l)| l <= 0.0) {
        return Err(Error::NotPositiveDefinite { index, pivot });
    }
    Ok(eig.apply(|l| C64::new(l.ln(), 0.0)))
}

#[derive(Debug, Clone)]
pub struct UnitaryEigen {
    /// Eigenangles in `[0, 2π)`, strictly decreasing unless degenerate.
    pub angles: Vec<f64>,
    /// Eigenvectors as columns, matching `angles`.
    pub vectors: UnitaryMatrix,
    /// Set when two eigenvalues are closer than `alcove_gap` on the circle.
    pub degenerate: bool,
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TWO_PI);
    if w >= TWO_PI {
        0.0
    } else {
        w
    }
}

/// Smallest separation between points on the circle given by their angles.
pub fn min_circular_gap(angles: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = angles.iter().map(|&a| wrap_angle(a)).collect();
    sorted.sort_by(f64::total_cmp);
    if sorted.len() < 2 {
        return f64::INFINITY;
    }
    let mut gap = sorted[0] + TWO_PI - sorted[sorted.len() - 1];
    for w in sorted.windows(2) {
        gap = gap.min(w[1] - w[0]);
    }
    gap
}

/// Multiplies each column by a phase so that its largest-modulus entry
/// (first one on ties) is real positive.
pub(crate) fn normalize_column_phases(v: &mut CMatrix) {
    for j in 0..v.ncols() {
        let col = v.column(j);
        let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let pivot = col
            .iter()
            .find(|z| z.norm() >= max * (1.0 - 1e-12))
            .copied()
            .unwrap_or(C64::new(1.0, 0.0));
        if pivot.norm() > 0.0 {
            let phase = pivot.conj() / pivot.norm();
            v.column_mut(j).iter_mut().for_each(|z| *z *= phase);
        }
    }
}

/// Eigendecomposition `U = V·diag(e^{iθ_k})·V†` of a unitary matrix.
///
/// `U` is normal, so its Hermitian and anti-Hermitian parts commute and a
/// generic real combination of them has the eigenvectors of `U`. A few fixed
/// combinations are tried; the first whose eigenbasis diagonalizes `U` is
/// kept.
pub fn unitary_eig(u: &UnitaryMatrix, tol: &Tolerances) -> Result<UnitaryEigen> {
    let m = u.matrix();
    check_square(m)?;
    let residual = unitarity_residual(m);
    if residual >= tol.tol_unitary {
        return Err(Error::NotUnitary { residual });
    }
    let n = m.nrows();
    let herm = (m + m.adjoint()).unscale(2.0);
    let anti = (m - m.adjoint()) * C64::new(0.0, -0.5);
    let accept = 1e-12 * (n as f64);

    let mut best: Option<(f64, CMatrix, CMatrix)> = None;
    for gamma in [
        0.577_215_664_901_532_9,
        -1.324_717_957_244_746,
        std::f64::consts::E,
        std::f64::consts::FRAC_1_PI,
    ] {
        let pencil = &herm + &anti * C64::new(gamma, 0.0);
        let eig = hermitian_eig(&pencil, tol)?;
        let d = eig.vectors.adjoint() * m * &eig.vectors;
        let off = off_diagonal_norm(&d);
        let better = best.as_ref().is_none_or(|(b, _, _)| off < *b);
        if better {
            best = Some((off, eig.vectors, d));
        }
        if off < accept {
            break;
        }
    }
    let (off, vectors, d) = best.ok_or(Error::NoConvergence)?;
    if off > tol.tol_unitary {
        return Err(Error::NoConvergence);
    }

    let raw: Vec<f64> = (0..n).map(|k| wrap_angle(d[(k, k)].arg())).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]));
    let angles: Vec<f64> = order.iter().map(|&k| raw[k]).collect();
    let mut sorted = CMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    normalize_column_phases(&mut sorted);
    let degenerate = min_circular_gap(&angles) < tol.alcove_gap;
    Ok(UnitaryEigen {
        angles,
        vectors: UnitaryMatrix::from_matrix_unchecked(sorted),
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_borel, random_hermitian, random_invertible, random_unitary, seeded};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn uu_factor_identity_and_diagonal() {
        let b = uu_dagger_factor(&identity(3), &tol()).unwrap();
        assert!((b.matrix() - identity(3)).norm() < 1e-15);
        let b = uu_dagger_factor(&real_diag(&[4.0, 9.0]), &tol()).unwrap();
        assert!((b.matrix() - real_diag(&[2.0, 3.0])).norm() < 1e-15);
    }

    #[test]
    fn uu_factor_rejects_bad_input() {
        let mut h = identity(2);
        h[(0, 1)] = C64::new(0.5, 0.0);
        assert!(matches!(uu_dagger_factor(&h, &tol()), Err(Error::NotHermitian { .. })));
        let h = real_diag(&[1.0, -2.0]);
        assert!(matches!(
            uu_dagger_factor(&h, &tol()),
            Err(Error::NotPositiveDefinite { index: 1, .. })
        ));
    }

    #[test]
    fn uu_factor_is_unique_on_borel() {
        let mut rng = seeded(11);
        for n in 1..=8 {
            let b = random_borel(&mut rng, n);
            let h = b.matrix() * b.matrix().adjoint();
            let back = uu_dagger_factor(&h, &tol()).unwrap();
            assert!((back.matrix() - b.matrix()).norm() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn iwasawa_trivial_cases() {
        let mut rng = seeded(3);
        let u = random_unitary(&mut rng, 3);
        let (b, g) = iwasawa_left(u.matrix(), &tol()).unwrap();
        assert!((b.matrix() - identity(3)).norm() < 1e-12);
        assert!((g.matrix() - u.matrix().adjoint()).norm() < 1e-12);
        let (g, b) = iwasawa_right(u.matrix(), &tol()).unwrap();
        assert!((g.matrix() - u.matrix()).norm() < 1e-12);
        assert!((b.matrix() - identity(3)).norm() < 1e-12);

        let borel = random_borel(&mut rng, 3);
        let (b, g) = iwasawa_left(borel.matrix(), &tol()).unwrap();
        assert!((b.matrix() - borel.matrix()).norm() < 1e-10);
        assert!((g.matrix() - identity(3)).norm() < 1e-10);

        let d = real_diag(&[2.0, 0.5, 3.0]);
        let (g, b) = iwasawa_right(&d, &tol()).unwrap();
        assert!((g.matrix() - identity(3)).norm() < 1e-14);
        assert!((b.matrix() - real_diag(&[0.5, 2.0, 1.0 / 3.0])).norm() < 1e-14);
    }

    #[test]
    fn iwasawa_roundtrip_and_bridge() {
        let mut rng = seeded(5);
        for n in 2..=8 {
            let k = random_invertible(&mut rng, n);
            let (b_l, g_r) = iwasawa_left(&k, &tol()).unwrap();
            let (g_l, b_r) = iwasawa_right(&k, &tol()).unwrap();
            let scale = k.norm();
            assert!((b_l.matrix() * g_r.matrix().adjoint() - &k).norm() < 1e-10 * scale);
            assert!((g_l.matrix() * b_r.inverse().matrix() - &k).norm() < 1e-10 * scale);
            let bridge = b_r.matrix() * b_r.matrix().adjoint() - inverse(&(k.adjoint() * &k)).unwrap();
            assert!(bridge.norm() < 1e-10, "n={n}: {}", bridge.norm());
            // second route for the Borel factor
            let via_uu = uu_dagger_factor(&(&k * k.adjoint()), &tol()).unwrap();
            assert!((via_uu.matrix() - b_l.matrix()).norm() < 1e-9 * scale);
        }
    }

    #[test]
    fn iwasawa_rejects_singular() {
        let mut k = identity(3);
        k[(2, 2)] = C64::new(0.0, 0.0);
        assert!(matches!(iwasawa_left(&k, &tol()), Err(Error::Singular { .. })));
        assert!(matches!(iwasawa_right(&k, &tol()), Err(Error::Singular { .. })));
    }

    #[test]
    fn unitary_eig_examples() {
        let e = unitary_eig(&UnitaryMatrix::identity(3), &tol()).unwrap();
        assert_eq!(e.angles, vec![0.0; 3]);
        assert!(e.degenerate);

        let u = UnitaryMatrix::from_angles(&[1.8, 0.6]);
        let e = unitary_eig(&u, &tol()).unwrap();
        assert!((e.angles[0] - 1.8).abs() < 1e-14 && (e.angles[1] - 0.6).abs() < 1e-14);
        assert!((e.vectors.matrix() - identity(2)).norm() < 1e-14);
        assert!(!e.degenerate);
    }

    #[test]
    fn unitary_eig_reconstructs_random() {
        let mut rng = seeded(7);
        for n in 1..=8 {
            let u = random_unitary(&mut rng, n);
            let e = unitary_eig(&u, &tol()).unwrap();
            let v = e.vectors.matrix();
            let rebuilt = v * phase_diag(&e.angles) * v.adjoint();
            assert!((rebuilt - u.matrix()).norm() < 1e-9);
            assert!(unitarity_residual(v) < 1e-10);
            assert!(e.angles.windows(2).all(|w| w[0] > w[1]));
            assert!(e.angles.iter().all(|a| (0.0..TWO_PI).contains(a)));
        }
    }

    #[test]
    fn unitary_eig_wraps_negative_angles() {
        let u = UnitaryMatrix::from_angles(&[-0.25, 3.0]);
        let e = unitary_eig(&u, &tol()).unwrap();
        assert!((e.angles[0] - (TWO_PI - 0.25)).abs() < 1e-14);
        assert!((e.angles[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn herm_exp_examples() {
        let mut rng = seeded(9);
        let h = random_hermitian(&mut rng, 4);
        let e0 = herm_exp(&h, 0.0, &tol()).unwrap();
        assert!((e0.matrix() - identity(4)).norm() < 1e-13);

        let e = herm_exp(&real_diag(&[1.0, 2.0]), std::f64::consts::PI, &tol()).unwrap();
        assert!((e.matrix() - real_diag(&[-1.0, 1.0])).norm() < 1e-14);

        let fwd = herm_exp(&h, 0.37, &tol()).unwrap();
        let back = herm_exp(&h, -0.37, &tol()).unwrap();
        assert!((fwd.matrix() * back.matrix() - identity(4)).norm() < 1e-10);
        assert!(unitarity_residual(fwd.matrix()) < 1e-10);
    }

    #[test]
    fn herm_exp_rejects_non_hermitian() {
        let mut h = identity(2);
        h[(1, 0)] = C64::new(0.0, 1.0);
        assert!(matches!(herm_exp(&h, 1.0, &tol()), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn borel_validation() {
        let mut m = identity(2);
        m[(1, 0)] = C64::new(1e-3, 0.0);
        assert!(BorelElement::new(m, &tol()).is_err());
        let m = real_diag(&[1.0, -1.0]);
        assert!(BorelElement::new(m, &tol()).is_err());
        let mut m = real_diag(&[2.0, 4.0]);
        m[(0, 1)] = C64::new(1.0, 1.0);
        let b = BorelElement::new(m, &tol()).unwrap();
        assert!((b.matrix() * b.inverse().matrix() - identity(2)).norm() < 1e-15);
        let (unit, a) = b.split_unipotent();
        assert_eq!(a, vec![2.0, 4.0]);
        assert!((unit[(0, 1)] - C64::new(0.25, 0.25)).norm() < 1e-15);
    }

    #[test]
    fn tolerances_validate() {
        assert!(Tolerances::default().validate().is_ok());
        let bad = Tolerances {
            tol_eig: 0.0,
            ..Tolerances::default()
        };
        assert!(bad.validate().is_err());
    }
}
