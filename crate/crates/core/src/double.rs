//! The Heisenberg double of U(n): `GL(n,ℂ)` with its two Iwasawa
//! factorizations, the free Lax matrix, the quasi-adjoint action of U(n) and
//! its Poisson–Lie moment map, and the explicit free flows.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matcore::{
    hermitian_eig, hermitian_eigenvalues, inverse, iwasawa_left, iwasawa_right, smallest_singular_value, BorelElement,
    CMatrix, HermitianEigen, Tolerances, UnitaryMatrix, C64,
};

/// A point `K ∈ GL(n,ℂ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoublePoint(CMatrix);

impl DoublePoint {
    pub fn new(k: CMatrix, tol: &Tolerances) -> Result<Self> {
        if k.nrows() == 0 || k.nrows() != k.ncols() {
            return Err(Error::InvalidInput(format!(
                "K must be square, got {}x{}",
                k.nrows(),
                k.ncols()
            )));
        }
        if k.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("K has non-finite entries".into()));
        }
        let sigma_min = smallest_singular_value(&k);
        if !(sigma_min > tol.tol_zero * k.norm()) {
            return Err(Error::Singular { sigma_min });
        }
        Ok(Self(k))
    }

    pub(crate) fn from_matrix_unchecked(k: CMatrix) -> Self {
        Self(k)
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
}

/// Finitely supported real weights `μ_j`, `j ≠ 0`, selecting the Hamiltonian
/// `H_μ = ½ Σ_j (μ_j / j) tr L^j`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MuWeights(BTreeMap<i32, f64>);

impl MuWeights {
    pub fn new(weights: BTreeMap<i32, f64>) -> Result<Self> {
        if weights.contains_key(&0) {
            return Err(Error::InvalidInput("mu has a weight for j = 0".into()));
        }
        if let Some((j, w)) = weights.iter().find(|(_, w)| !w.is_finite()) {
            return Err(Error::InvalidInput(format!("mu_{j} = {w} is not finite")));
        }
        Ok(Self(weights))
    }

    pub fn from_pairs(pairs: &[(i32, f64)]) -> Result<Self> {
        Self::new(pairs.iter().copied().collect())
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// `μ_{±1} = ±1`: the Ruijsenaars–Schneider Hamiltonian.
    pub fn relativistic() -> Self {
        Self([(1, 1.0), (-1, -1.0)].into_iter().collect())
    }

    pub fn is_empty(&self) -> bool {
        self.0.values().all(|w| *w == 0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.0.iter().map(|(j, w)| (*j, *w))
    }

    /// `Σ_j μ_j λ^j`, the generator of the flow in the eigenbasis of `L`.
    pub fn flow_generator(&self, lambda: f64) -> f64 {
        self.iter().map(|(j, w)| w * lambda.powi(j)).sum()
    }

    /// `½ Σ_j (μ_j/j) λ^j`; summing it over the spectrum of `L` gives `H_μ`.
    pub fn hamiltonian_density(&self, lambda: f64) -> f64 {
        0.5 * self.iter().map(|(j, w)| w / j as f64 * lambda.powi(j)).sum::<f64>()
    }

    pub fn hamiltonian_of_spectrum(&self, spectrum: &[f64]) -> f64 {
        spectrum.iter().map(|&l| self.hamiltonian_density(l)).sum()
    }

    pub fn has_negative_powers(&self) -> bool {
        self.0.keys().any(|&j| j < 0)
    }

    /// `H_μ` with the negative powers taken from the spectrum of `L⁻¹`,
    /// which keeps full relative accuracy when `L` has tiny eigenvalues.
    pub fn hamiltonian_of_spectra(&self, spectrum: &[f64], inverse_spectrum: &[f64]) -> f64 {
        let power_sum = |values: &[f64], j: i32| values.iter().map(|v| v.powi(j)).sum::<f64>();
        0.5 * self
            .iter()
            .map(|(j, w)| {
                let trace = if j > 0 {
                    power_sum(spectrum, j)
                } else {
                    power_sum(inverse_spectrum, -j)
                };
                w / j as f64 * trace
            })
            .sum::<f64>()
    }
}

/// Parses `"1:1,-1:-1"`; the empty string gives empty weights.
impl FromStr for MuWeights {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut weights = BTreeMap::new();
        for pair in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (j, w) = pair
                .split_once(':')
                .ok_or_else(|| Error::InvalidInput(format!("mu entry '{pair}' is not j:weight")))?;
            let j: i32 = j
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("mu index '{j}' is not an integer")))?;
            let w: f64 = w
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("mu weight '{w}' is not a number")))?;
            if weights.insert(j, w).is_some() {
                return Err(Error::InvalidInput(format!("mu index {j} given twice")));
            }
        }
        Self::new(weights)
    }
}

impl fmt::Display for MuWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(j, w)| format!("{j}:{w}")).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Clone)]
pub struct IwasawaMaps {
    pub lambda_l: BorelElement,
    pub lambda_r: BorelElement,
    pub xi_l: UnitaryMatrix,
    pub xi_r: UnitaryMatrix,
}

/// `K = Λ_L·Ξ_R⁻¹ = Ξ_L·Λ_R⁻¹`.
pub fn iwasawa_maps(k: &DoublePoint, tol: &Tolerances) -> Result<IwasawaMaps> {
    let (lambda_l, xi_r) = iwasawa_left(k.matrix(), tol)?;
    let (xi_l, lambda_r) = iwasawa_right(k.matrix(), tol)?;
    Ok(IwasawaMaps {
        lambda_l,
        lambda_r,
        xi_l,
        xi_r,
    })
}

/// `L(K) = (K†K)⁻¹ = K⁻¹·K⁻†`, Hermitian positive definite.
pub fn lax_free(k: &DoublePoint) -> Result<CMatrix> {
    let k_inv = inverse(k.matrix())?;
    let l = &k_inv * k_inv.adjoint();
    Ok((&l + l.adjoint()).unscale(2.0))
}

/// `H_μ(K) = ½ Σ_j (μ_j/j) tr L(K)^j`, evaluated on the spectrum of `L(K)`.
pub fn hamiltonian_free(k: &DoublePoint, mu: &MuWeights, tol: &Tolerances) -> Result<f64> {
    if mu.is_empty() {
        return Ok(0.0);
    }
    let spectrum = hermitian_eigenvalues(&lax_free(k)?, tol)?;
    if !mu.has_negative_powers() {
        return Ok(mu.hamiltonian_of_spectrum(&spectrum));
    }
    let gram = k.matrix().adjoint() * k.matrix();
    let inverse_spectrum = hermitian_eigenvalues(&(&gram + gram.adjoint()).unscale(2.0), tol)?;
    Ok(mu.hamiltonian_of_spectra(&spectrum, &inverse_spectrum))
}

/// `g ▷ K = g·K·Ξ_R(g·Λ_L(K))`.
pub fn quasi_adjoint(g: &UnitaryMatrix, k: &DoublePoint, tol: &Tolerances) -> Result<DoublePoint> {
    if g.dim() != k.dim() {
        return Err(Error::InvalidInput(format!(
            "g is {}x{}, K is {}x{}",
            g.dim(),
            g.dim(),
            k.dim(),
            k.dim()
        )));
    }
    let (lambda_l, _) = iwasawa_left(k.matrix(), tol)?;
    let (_, xi) = iwasawa_left(&(g.matrix() * lambda_l.matrix()), tol)?;
    Ok(DoublePoint(g.matrix() * k.matrix() * xi.matrix()))
}

/// Poisson–Lie moment map `Λ(K) = Λ_L(K)·Λ_R(K)`.
pub fn moment_map(k: &DoublePoint, tol: &Tolerances) -> Result<BorelElement> {
    let (lambda_l, _) = iwasawa_left(k.matrix(), tol)?;
    let (_, lambda_r) = iwasawa_right(k.matrix(), tol)?;
    Ok(BorelElement::from_upper_unchecked(
        lambda_l.matrix() * lambda_r.matrix(),
    ))
}

/// The free flow of `H_μ` through a fixed initial point, factored once.
///
/// With `K₀ = b·g⁻¹` the flow is `K(t) = b·exp(−it Σ_j μ_j (b†b)^{−j})·g⁻¹`;
/// `b†b` is diagonalized once and the exponential taken on its spectrum.
#[derive(Debug, Clone)]
pub struct FreeFlow {
    b: BorelElement,
    g_inv: CMatrix,
    gram: HermitianEigen,
    rates: Vec<f64>,
    k0: DoublePoint,
    trivial: bool,
}

impl FreeFlow {
    pub fn new(k0: &DoublePoint, mu: &MuWeights, tol: &Tolerances) -> Result<Self> {
        let (b, g) = iwasawa_left(k0.matrix(), tol)?;
        let gram = hermitian_eig(&(b.matrix().adjoint() * b.matrix()), tol)?;
        let rates = gram.values.iter().map(|&l| mu.flow_generator(1.0 / l)).collect();
        Ok(Self {
            g_inv: g.inverse().into_matrix(),
            b,
            gram,
            rates,
            k0: k0.clone(),
            trivial: mu.is_empty(),
        })
    }

    pub fn at(&self, t: f64) -> DoublePoint {
        if t == 0.0 || self.trivial {
            return self.k0.clone();
        }
        let v = &self.gram.vectors;
        let phases: Vec<C64> = self.rates.iter().map(|r| C64::from_polar(1.0, -t * r)).collect();
        let evolution = v * crate::matcore::diag(&phases) * v.adjoint();
        DoublePoint(self.b.matrix() * evolution * &self.g_inv)
    }
}

pub fn free_flow(k0: &DoublePoint, mu: &MuWeights, t: f64, tol: &Tolerances) -> Result<DoublePoint> {
    Ok(FreeFlow::new(k0, mu, tol)?.at(t))
}
