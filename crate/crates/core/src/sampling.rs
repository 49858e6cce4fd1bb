//! Seeded random fills for tests, the verification suite and the CLI.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::double::DoublePoint;
use crate::matcore::{identity, smallest_singular_value, BorelElement, CMatrix, UnitaryMatrix, C64};
use crate::reduction::{kks_vector, AlcovePoint, Coupling, PhasePoint};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex_normal<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| complex_normal(rng))
}

/// Haar-distributed unitary (QR of a complex Gaussian with phase fixing).
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> UnitaryMatrix {
    let qr = gaussian_matrix(rng, n).qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        q.column_mut(k).iter_mut().for_each(|z| *z *= phase);
    }
    UnitaryMatrix::from_matrix_unchecked(q)
}

/// Gaussian matrix with smallest singular value bounded below.
pub fn random_invertible<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    loop {
        let k = gaussian_matrix(rng, n);
        if smallest_singular_value(&k) > 0.05 {
            return k;
        }
    }
}

pub fn random_double_point<R: Rng>(rng: &mut R, n: usize) -> DoublePoint {
    DoublePoint::from_matrix_unchecked(random_invertible(rng, n))
}

/// Upper triangular with log-uniform diagonal in `[0.1, 10]`.
pub fn random_borel<R: Rng>(rng: &mut R, n: usize) -> BorelElement {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = C64::new(10f64.powf(rng.random_range(-1.0..1.0)), 0.0);
        for j in i + 1..n {
            m[(i, j)] = complex_normal(rng);
        }
    }
    BorelElement::from_upper_unchecked(m)
}

pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let g = gaussian_matrix(rng, n);
    (&g + g.adjoint()).unscale(2.0)
}

/// Coupling with `|x|` uniform in `[lo, hi]` and random sign.
pub fn random_coupling<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Coupling {
    let mag = rng.random_range(lo..=hi);
    let x = if rng.random::<bool>() { mag } else { -mag };
    Coupling::new(x).expect("non-zero coupling")
}

/// Raw angles `π > q_1 > … > q_n ≥ 0` whose circular gaps (on the circle of
/// circumference π) all exceed `min_gap`.
pub fn random_angles<R: Rng>(rng: &mut R, n: usize, min_gap: f64) -> Vec<f64> {
    assert!(n as f64 * min_gap < PI, "gap too large for n = {n}");
    loop {
        let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..PI)).collect();
        q.sort_by(|a, b| b.total_cmp(a));
        let wrap_ok = n < 2 || q[n - 1] + PI - q[0] > min_gap;
        if wrap_ok && q.windows(2).all(|w| w[0] - w[1] > min_gap) {
            return q;
        }
    }
}

pub fn random_alcove<R: Rng>(rng: &mut R, n: usize, min_gap: f64) -> AlcovePoint {
    AlcovePoint::from_sorted_unchecked(random_angles(rng, n, min_gap))
}

/// Phase point with gaps above `min_gap` and momenta uniform in `[-p_max, p_max]`.
pub fn random_phase_point<R: Rng>(rng: &mut R, n: usize, min_gap: f64, p_max: f64) -> PhasePoint {
    let q = random_alcove(rng, n, min_gap);
    let p = (0..n).map(|_| rng.random_range(-p_max..=p_max)).collect();
    PhasePoint::from_parts_unchecked(q, p)
}

/// Random element of the isotropy group of `ν(x)ν(x)†`: unitaries that
/// preserve the line through `v` and its orthogonal complement.
pub fn random_isotropy<R: Rng>(rng: &mut R, x: Coupling, n: usize) -> UnitaryMatrix {
    let v = kks_vector(x, n);
    let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    // orthonormal basis whose first vector is v/|v|
    let mut seed_cols = gaussian_matrix(rng, n);
    for i in 0..n {
        seed_cols[(i, 0)] = C64::new(v[i] / norm, 0.0);
    }
    let basis = seed_cols.qr().q();
    let first_phase = basis[(0, 0)] / basis[(0, 0)].norm() * (v[0] / norm).signum();
    let mut w = basis;
    w.column_mut(0).iter_mut().for_each(|z| *z /= first_phase);

    let mut block = identity(n);
    block[(0, 0)] = C64::from_polar(1.0, rng.random_range(-PI..PI));
    if n > 1 {
        let inner = random_unitary(rng, n - 1);
        block.view_mut((1, 1), (n - 1, n - 1)).copy_from(inner.matrix());
    }
    UnitaryMatrix::from_matrix_unchecked(&w * block * w.adjoint())
}
