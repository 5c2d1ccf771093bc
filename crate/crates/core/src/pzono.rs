//! Zonotopes and probabilistic zonotopes (p-Zonotopes).
//!
//! A p-Zonotope `(c, G, Σ)` encloses every Gaussian density whose mean lies in
//! the zonotope `⟨c, G⟩ = { c + G β : β ∈ [-1, 1]^e }` and whose covariance is
//! dominated by `Σ`. With `G` empty it is a single Gaussian overbound, with
//! `Σ = 0` it is an ordinary zonotope.
//!
//! All operations are pure functions over immutable values.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erf_inv};

use crate::error::{ensure_dim, Error, Result};

/// Relative tolerance used when checking symmetry and positive semidefiniteness.
const PSD_TOL: f64 = 1e-10;

fn all_finite<'a>(values: impl IntoIterator<Item = &'a f64>) -> bool {
    values.into_iter().all(|v| v.is_finite())
}

/// Drops generator columns that are exactly zero.
fn prune_zero_columns(g: DMatrix<f64>) -> DMatrix<f64> {
    let keep: Vec<usize> = (0..g.ncols())
        .filter(|&j| g.column(j).iter().any(|v| *v != 0.0))
        .collect();
    if keep.len() == g.ncols() {
        return g;
    }
    DMatrix::from_fn(g.nrows(), keep.len(), |i, j| g[(i, keep[j])])
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn is_diagonal(m: &DMatrix<f64>) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == 0.0))
}

/// Symmetric square root `S` with `S Sᵀ = Σ`; negative eigenvalues from
/// round-off are clamped to zero.
pub fn symmetric_sqrt(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    if is_diagonal(sigma) {
        return DMatrix::from_fn(sigma.nrows(), sigma.ncols(), |i, j| {
            if i == j {
                sigma[(i, i)].max(0.0).sqrt()
            } else {
                0.0
            }
        });
    }
    let eig = SymmetricEigen::new(symmetrize(sigma));
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    symmetrize(&(v * DMatrix::from_diagonal(&roots) * v.transpose()))
}

/// A zonotope `⟨c, G⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ZonotopeRepr", into = "ZonotopeRepr")]
pub struct Zonotope {
    center: DVector<f64>,
    generators: DMatrix<f64>,
}

impl Zonotope {
    pub fn new(center: DVector<f64>, generators: DMatrix<f64>) -> Result<Self> {
        ensure_dim(center.len(), generators.nrows())?;
        if !all_finite(center.iter()) || !all_finite(generators.iter()) {
            return Err(Error::invalid("zonotope entries must be finite"));
        }
        Ok(Self { center, generators })
    }

    pub fn point(center: DVector<f64>) -> Result<Self> {
        let n = center.len();
        Self::new(center, DMatrix::zeros(n, 0))
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Per-axis radius `Σ_k |G[j, k]|`.
    pub fn radius(&self) -> DVector<f64> {
        DVector::from_fn(self.dim(), |j, _| self.generators.row(j).iter().map(|v| v.abs()).sum())
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn interval_hull(&self) -> (DVector<f64>, DVector<f64>) {
        let r = self.radius();
        (&self.center - &r, &self.center + &r)
    }
}

/// A probabilistic zonotope `(c, G, Σ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PZonotopeRepr", into = "PZonotopeRepr")]
pub struct PZonotope {
    center: DVector<f64>,
    generators: DMatrix<f64>,
    covariance: DMatrix<f64>,
}

impl PZonotope {
    /// Validated constructor: consistent dimensions, finite entries and a
    /// symmetric positive semidefinite covariance.
    pub fn new(
        center: DVector<f64>,
        generators: DMatrix<f64>,
        covariance: DMatrix<f64>,
    ) -> Result<Self> {
        let n = center.len();
        ensure_dim(n, generators.nrows())?;
        ensure_dim(n, covariance.nrows())?;
        ensure_dim(n, covariance.ncols())?;
        if !all_finite(center.iter())
            || !all_finite(generators.iter())
            || !all_finite(covariance.iter())
        {
            return Err(Error::invalid("p-Zonotope entries must be finite"));
        }
        let scale = covariance.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
        let asym = (&covariance - covariance.transpose()).amax();
        if asym > 1e-9 * scale {
            return Err(Error::invalid(format!(
                "covariance is not symmetric (max asymmetry {asym:e})"
            )));
        }
        if n > 0 {
            let min_eig = SymmetricEigen::new(symmetrize(&covariance)).eigenvalues.min();
            if min_eig < -PSD_TOL * scale {
                return Err(Error::invalid(format!(
                    "covariance is not positive semidefinite (min eigenvalue {min_eig:e})"
                )));
            }
        }
        Ok(Self {
            center,
            generators,
            covariance: symmetrize(&covariance),
        })
    }

    /// Operations that provably preserve validity skip the eigen check.
    pub(crate) fn from_parts(
        center: DVector<f64>,
        generators: DMatrix<f64>,
        covariance: DMatrix<f64>,
    ) -> Self {
        debug_assert_eq!(center.len(), generators.nrows());
        debug_assert_eq!(center.len(), covariance.nrows());
        Self {
            center,
            generators,
            covariance: symmetrize(&covariance),
        }
    }

    /// A single point with no uncertainty.
    pub fn point(center: DVector<f64>) -> Self {
        let n = center.len();
        Self::from_parts(center, DMatrix::zeros(n, 0), DMatrix::zeros(n, n))
    }

    /// A Gaussian overbound with a certain mean.
    pub fn gaussian(center: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let n = center.len();
        Self::new(center, DMatrix::zeros(n, 0), covariance)
    }

    pub fn from_zonotope(z: &Zonotope) -> Self {
        let n = z.dim();
        Self::from_parts(z.center.clone(), z.generators.clone(), DMatrix::zeros(n, n))
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.generators
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.ncols()
    }

    /// The zonotope of possible means.
    pub fn mean_set(&self) -> Zonotope {
        Zonotope {
            center: self.center.clone(),
            generators: self.generators.clone(),
        }
    }

    /// Gershgorin row sums `Σ_k |Σ[j, k]|`.
    pub fn gershgorin_rows(&self) -> DVector<f64> {
        DVector::from_fn(self.dim(), |j, _| self.covariance.row(j).iter().map(|v| v.abs()).sum())
    }
}

/// Builds a p-Zonotope from per-axis bounds on the mean and the variance.
///
/// The mean interval becomes the zonotope part (midpoint center, half-width
/// generators) and the variance upper bound, multiplied by `factor`, becomes
/// the diagonal covariance.
pub fn from_bounds(mean_intervals: &[(f64, f64)], cov_upper: &[f64], factor: f64) -> Result<PZonotope> {
    ensure_dim(mean_intervals.len(), cov_upper.len())?;
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::invalid(format!("covariance factor must be positive, got {factor}")));
    }
    for (axis, &(lo, hi)) in mean_intervals.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::invalid(format!("inverted or non-finite mean interval on axis {axis}: [{lo}, {hi}]")));
        }
    }
    if let Some(axis) = cov_upper.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid(format!("variance upper bound on axis {axis} must be >= 0")));
    }
    let n = mean_intervals.len();
    let center = DVector::from_iterator(n, mean_intervals.iter().map(|(lo, hi)| 0.5 * (lo + hi)));
    let half: Vec<f64> = mean_intervals.iter().map(|(lo, hi)| 0.5 * (hi - lo)).collect();
    let generators = prune_zero_columns(DMatrix::from_diagonal(&DVector::from_vec(half)));
    let covariance = DMatrix::from_diagonal(&DVector::from_iterator(n, cov_upper.iter().map(|v| v * factor)));
    Ok(PZonotope::from_parts(center, generators, covariance))
}

/// `a ⊕ b = (c_a + c_b, [G_a G_b], Σ_a + Σ_b)`.
pub fn minkowski_sum(a: &PZonotope, b: &PZonotope) -> Result<PZonotope> {
    ensure_dim(a.dim(), b.dim())?;
    let n = a.dim();
    let (ea, eb) = (a.num_generators(), b.num_generators());
    let mut g = DMatrix::zeros(n, ea + eb);
    g.columns_mut(0, ea).copy_from(&a.generators);
    g.columns_mut(ea, eb).copy_from(&b.generators);
    Ok(PZonotope::from_parts(
        &a.center + &b.center,
        g,
        &a.covariance + &b.covariance,
    ))
}

/// `A p = (A c, A G, A Σ Aᵀ)`; the output dimension is the row count of `A`.
pub fn linear_map(a: &DMatrix<f64>, p: &PZonotope) -> Result<PZonotope> {
    ensure_dim(p.dim(), a.ncols())?;
    Ok(PZonotope::from_parts(
        a * &p.center,
        a * &p.generators,
        a * &p.covariance * a.transpose(),
    ))
}

/// `μ + p = (μ + c, G, Σ)`.
pub fn translate(mu: &DVector<f64>, p: &PZonotope) -> Result<PZonotope> {
    ensure_dim(p.dim(), mu.len())?;
    Ok(PZonotope::from_parts(
        mu + &p.center,
        p.generators.clone(),
        p.covariance.clone(),
    ))
}

/// Linear map by `s·I`.
pub fn scale(s: f64, p: &PZonotope) -> PZonotope {
    PZonotope::from_parts(&p.center * s, &p.generators * s, &p.covariance * (s * s))
}

/// Over-approximates the union of `members` by a single p-Zonotope.
///
/// The zonotope parts are enclosed by their per-axis interval hull and the
/// covariances by the diagonal Gershgorin bound `d_j = max Σ_k |Σ[j, k]|`,
/// which dominates every member covariance in the Loewner order.
pub fn enclose_union(members: &[PZonotope]) -> Result<PZonotope> {
    let first = members
        .first()
        .ok_or_else(|| Error::invalid("cannot enclose an empty union"))?;
    let n = first.dim();
    let mut lo = DVector::from_element(n, f64::INFINITY);
    let mut hi = DVector::from_element(n, f64::NEG_INFINITY);
    let mut d = DVector::zeros(n);
    for m in members {
        ensure_dim(n, m.dim())?;
        let (mlo, mhi) = m.mean_set().interval_hull();
        let rows = m.gershgorin_rows();
        for j in 0..n {
            lo[j] = lo[j].min(mlo[j]);
            hi[j] = hi[j].max(mhi[j]);
            d[j] = f64::max(d[j], rows[j]);
        }
    }
    let center = (&lo + &hi) * 0.5;
    let half = (&hi - &lo) * 0.5;
    let generators = prune_zero_columns(DMatrix::from_diagonal(&half));
    Ok(PZonotope::from_parts(center, generators, DMatrix::from_diagonal(&d)))
}

/// Standard-normal multiplier `m = √2 · erf⁻¹(γ)`, so that a scalar Gaussian
/// lies within `m` standard deviations with probability `γ`.
pub fn gaussian_multiplier(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!("confidence level must lie in (0, 1), got {gamma}")));
    }
    let mut m = std::f64::consts::SQRT_2 * erf_inv(gamma);
    // one Newton polish against erf
    let slope = (2.0 / std::f64::consts::PI).sqrt() * (-0.5 * m * m).exp();
    if slope > 0.0 {
        m -= (erf(m / std::f64::consts::SQRT_2) - gamma) / slope;
    }
    Ok(m)
}

/// Truncates the Gaussian tails of `p` at confidence `gamma`, returning the
/// zonotope `⟨c, [G, m·S]⟩` with `S` the symmetric square root of `Σ`.
pub fn confidence_cut(p: &PZonotope, gamma: f64) -> Result<Zonotope> {
    let m = gaussian_multiplier(gamma)?;
    if p.covariance.iter().all(|v| *v == 0.0) {
        return Ok(p.mean_set());
    }
    let s = prune_zero_columns(symmetric_sqrt(&p.covariance) * m);
    let n = p.dim();
    let e = p.num_generators();
    let mut g = DMatrix::zeros(n, e + s.ncols());
    g.columns_mut(0, e).copy_from(&p.generators);
    g.columns_mut(e, s.ncols()).copy_from(&s);
    Zonotope::new(p.center.clone(), g)
}

/// Non-negative axis weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("weight vector is empty"));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::invalid(format!("weights must be non-negative, found {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("weights must sum to 1, sum is {sum}")));
        }
        Ok(Self(weights))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    /// Equal weight on the three position axes of the navigation state.
    pub fn position_only() -> Self {
        let t = 1.0 / 3.0;
        Self(vec![t, t, t, 0.0, 0.0, 0.0, 0.0])
    }

    /// Equal weight on the two horizontal position axes.
    pub fn horizontal_only() -> Self {
        Self(vec![0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

/// Axis-weighted size `Σ_n w_n ‖row_n(G)‖²`, the weighted trace of `G Gᵀ`.
pub fn zonotope_size(z: &Zonotope, w: &WeightVector) -> Result<f64> {
    ensure_dim(z.dim(), w.len())?;
    Ok(w.0
        .iter()
        .enumerate()
        .filter(|(_, wn)| **wn > 0.0)
        .map(|(n, wn)| wn * z.generators.row(n).norm_squared())
        .sum())
}

/// Minimum over `β ∈ [-1, 1]^e` of `‖b - A β‖²` by a bounded-variable
/// active-set method. Each pass solves the free variables in the
/// minimum-norm least squares sense and steps toward that point until a bound
/// is hit, then releases held bounds whose gradient points inward.
fn box_least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
    let e = a.ncols();
    if e == 0 {
        return b.norm_squared();
    }
    // 0 = free, ±1 = held at that bound
    let mut held = vec![0i8; e];
    let mut beta = DVector::<f64>::zeros(e);
    let scale = a.amax().max(1.0);
    for _ in 0..(20 * e + 50) {
        let free: Vec<usize> = (0..e).filter(|&k| held[k] == 0).collect();
        let mut target = beta.clone();
        if !free.is_empty() {
            let fixed_part = a * beta.map_with_location(|k, _, v| if held[k] == 0 { 0.0 } else { v });
            let rhs = b - fixed_part;
            let af = a.select_columns(free.iter());
            let size = af.nrows().max(af.ncols()) as f64;
            let svd = af.svd(true, true);
            let tol = 1e-12 * svd.singular_values.max() * size;
            let Ok(z) = svd.solve(&rhs, tol) else {
                return coordinate_descent(a, b);
            };
            for (i, &k) in free.iter().enumerate() {
                target[k] = z[i];
            }
        }
        // step toward the target, stopping at the first bound crossed
        let mut t = 1.0;
        let mut blocking = None;
        for k in 0..e {
            let d = target[k] - beta[k];
            if held[k] == 0 && target[k].abs() > 1.0 && d != 0.0 {
                let tk = ((d.signum() - beta[k]) / d).clamp(0.0, 1.0);
                if tk < t {
                    t = tk;
                    blocking = Some(k);
                }
            }
        }
        beta += (&target - &beta) * t;
        if let Some(k) = blocking {
            beta[k] = beta[k].signum();
            held[k] = beta[k].signum() as i8;
            for j in 0..e {
                if held[j] == 0 && beta[j].abs() >= 1.0 {
                    beta[j] = beta[j].signum();
                    held[j] = beta[j].signum() as i8;
                }
            }
            continue;
        }
        // release the held bound whose gradient most favors moving inward
        let grad = a.transpose() * (a * &beta - b);
        let release = (0..e)
            .filter(|&k| held[k] != 0)
            .map(|k| (k, f64::from(held[k]) * grad[k]))
            .filter(|(_, g)| *g < -1e-12 * scale * scale * (1.0 + b.norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1));
        match release {
            Some((k, _)) => held[k] = 0,
            None => return (b - a * &beta).norm_squared(),
        }
    }
    coordinate_descent(a, b)
}

/// Cyclic coordinate descent on the same problem, used when the active-set
/// iteration does not settle.
fn coordinate_descent(a: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
    let e = a.ncols();
    let col_sq: Vec<f64> = (0..e).map(|k| a.column(k).norm_squared()).collect();
    let mut beta = DVector::<f64>::zeros(e);
    let mut resid = b.clone();
    let mut obj = resid.norm_squared();
    for _sweep in 0..20_000 {
        for k in 0..e {
            if col_sq[k] == 0.0 {
                continue;
            }
            let col = a.column(k);
            let target = (beta[k] + col.dot(&resid) / col_sq[k]).clamp(-1.0, 1.0);
            let delta = target - beta[k];
            if delta != 0.0 {
                resid.axpy(-delta, &col, 1.0);
                beta[k] = target;
            }
        }
        let next = resid.norm_squared();
        let done = obj - next <= 1e-13 * (1.0 + next);
        obj = next;
        if done {
            break;
        }
    }
    obj
}

/// Cholesky factor of `Σ`, regularized with `εI` (`ε = 1e-9·tr(Σ)/n`) when
/// `Σ` is singular.
fn regularized_cholesky(sigma: &DMatrix<f64>) -> Cholesky<f64, nalgebra::Dyn> {
    if let Some(c) = Cholesky::new(sigma.clone()) {
        if c.l_dirty().diagonal().iter().all(|v| *v > 0.0) {
            return c;
        }
    }
    let n = sigma.nrows();
    let mut eps = 1e-9 * sigma.trace() / n as f64;
    if eps <= 0.0 {
        eps = 1e-18;
    }
    loop {
        let reg = sigma + DMatrix::identity(n, n) * eps;
        if let Some(c) = Cholesky::new(reg) {
            return c;
        }
        eps *= 10.0;
    }
}

/// Squared Mahalanobis distance from `x` to the nearest admissible mean.
pub fn mahalanobis_to_mean_set(p: &PZonotope, x: &DVector<f64>) -> Result<f64> {
    ensure_dim(p.dim(), x.len())?;
    let chol = regularized_cholesky(&p.covariance);
    let l = chol.l();
    let r = x - &p.center;
    let b = l
        .solve_lower_triangular(&r)
        .ok_or_else(|| Error::invalid("singular covariance factor"))?;
    let a = l
        .solve_lower_triangular(&p.generators)
        .ok_or_else(|| Error::invalid("singular covariance factor"))?;
    Ok(box_least_squares(&a, &b))
}

/// Supremum over the enclosed densities evaluated at `x`:
/// `max_{c' ∈ ⟨c, G⟩} 𝒩(x; c', Σ)`.
pub fn density_sup(p: &PZonotope, x: &DVector<f64>) -> Result<f64> {
    let d2 = mahalanobis_to_mean_set(p, x)?;
    let chol = regularized_cholesky(&p.covariance);
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    let n = p.dim() as f64;
    Ok((-0.5 * d2 - 0.5 * n * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det).exp())
}

/// Fault status `1 - sup f(x) / sup f(c)` in `[0, 1]`: zero on the zonotope
/// part, approaching one as `x` recedes from it.
pub fn fault_status_point(p: &PZonotope, x: &DVector<f64>) -> Result<f64> {
    let d2 = mahalanobis_to_mean_set(p, x)?;
    Ok((1.0 - (-0.5 * d2).exp()).clamp(0.0, 1.0))
}

#[derive(Serialize, Deserialize)]
struct ZonotopeRepr {
    c: Vec<f64>,
    #[serde(rename = "G")]
    g: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct PZonotopeRepr {
    c: Vec<f64>,
    #[serde(rename = "G")]
    g: Vec<Vec<f64>>,
    #[serde(rename = "Sigma")]
    sigma: Vec<Vec<f64>>,
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], nrows: usize, field: &str) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Ok(DMatrix::zeros(nrows, 0));
    }
    ensure_dim(nrows, rows.len())?;
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::invalid(format!("`{field}` rows have unequal lengths")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl TryFrom<ZonotopeRepr> for Zonotope {
    type Error = Error;
    fn try_from(r: ZonotopeRepr) -> Result<Self> {
        let n = r.c.len();
        let g = matrix_from_rows(&r.g, n, "G")?;
        Zonotope::new(DVector::from_vec(r.c), g)
    }
}

impl From<Zonotope> for ZonotopeRepr {
    fn from(z: Zonotope) -> Self {
        Self {
            c: z.center.iter().copied().collect(),
            g: rows_of(&z.generators),
        }
    }
}

impl TryFrom<PZonotopeRepr> for PZonotope {
    type Error = Error;
    fn try_from(r: PZonotopeRepr) -> Result<Self> {
        let n = r.c.len();
        let g = matrix_from_rows(&r.g, n, "G")?;
        let s = if r.sigma.is_empty() {
            DMatrix::zeros(n, n)
        } else {
            matrix_from_rows(&r.sigma, n, "Sigma")?
        };
        ensure_dim(n, s.ncols())?;
        PZonotope::new(DVector::from_vec(r.c), g, s)
    }
}

impl From<PZonotope> for PZonotopeRepr {
    fn from(p: PZonotope) -> Self {
        Self {
            c: p.center.iter().copied().collect(),
            g: rows_of(&p.generators),
            sigma: rows_of(&p.covariance),
        }
    }
}
