//! Finite random tridiagonal and band matrices: samplers, trace powers, and
//! seeded Monte Carlo runners that estimate the quantities whose limits the
//! combinatorial modules predict.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Gamma, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{eigen, Error, Result};

/// Approximate operation budget for literal walk-sum traces.
const PATH_SUM_BUDGET: f64 = 2.0e9;
/// Dense eigensolves are cubic; cap the size where we allow them.
const DENSE_EIGEN_MAX_N: usize = 600;

/// Symmetric tridiagonal matrix stored as its two defining sequences.
///
/// `diag[i]` holds `d_{i+1}` and `offdiag[i]` holds `b_{i+1}`, with index 1
/// sitting at the lower-right corner of the realized matrix; growth in the
/// entry index therefore runs toward the upper-left.  Spectra and traces do
/// not depend on that orientation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TridiagonalMatrix {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidParameter(
                "matrix dimension must be at least 1".into(),
            ));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::LengthMismatch(format!(
                "need exactly n - 1 = {} off-diagonal entries, got {}",
                diag.len() - 1,
                offdiag.len()
            )));
        }
        if diag.iter().chain(offdiag.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "matrix entries must be finite".into(),
            ));
        }
        Ok(Self { diag, offdiag })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// All eigenvalues, ascending, by Sturm bisection.  `tol` defaults to
    /// `1e-12` times the Gershgorin radius.
    pub fn eigenvalues(&self, tol: Option<f64>) -> Result<Vec<f64>> {
        eigen::tridiagonal_eigenvalues(&self.diag, &self.offdiag, tol)
    }
}

/// Distribution of the off-diagonal sequence `b_1, b_2, ..`.
#[derive(Debug, Clone)]
pub enum OffdiagFamily {
    /// `b_k = chi_{k beta} / sqrt(beta)`.
    BetaHermite { beta: f64 },
    /// `b_k = k^alpha (1 + Z_k / k^epsilon)` with `Z_k ~ N(0, sigma_z^2)`.
    PowerPerturbed {
        alpha: f64,
        epsilon: f64,
        sigma_z: f64,
    },
    /// `b_k = k^alpha * Bernoulli(theta)`.
    BernoulliScaled { alpha: f64, theta: f64 },
    /// Deterministic table `b_k = values[k - 1]`.
    Explicit { alpha: f64, values: Vec<f64> },
}

/// Distribution of the diagonal sequence.
#[derive(Debug, Clone, Copy)]
pub enum DiagFamily {
    Zero,
    Gaussian { std_dev: f64 },
}

/// A tridiagonal ensemble: off-diagonal family, diagonal family, and the
/// scaling exponent `alpha` of `X = n^{-alpha} A` implied by the former.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    offdiag: OffdiagFamily,
    diag: DiagFamily,
}

impl EnsembleSpec {
    /// The classical tridiagonal beta ensemble: chi off-diagonals and a
    /// Gaussian diagonal of variance `2 / beta`.
    pub fn beta_hermite(beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        Ok(Self {
            offdiag: OffdiagFamily::BetaHermite { beta },
            diag: DiagFamily::Gaussian {
                std_dev: (2.0 / beta).sqrt(),
            },
        })
    }

    /// Multiplicatively perturbed powers `b_k = k^alpha (1 + Z_k / k^epsilon)`.
    pub fn power_perturbed(alpha: f64, epsilon: f64, sigma_z: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        if !epsilon.is_finite() || epsilon < 0.0 || epsilon > alpha {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in [0, alpha] = [0, {alpha}], got {epsilon}"
            )));
        }
        if !sigma_z.is_finite() || sigma_z < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "sigma_z must be nonnegative and finite, got {sigma_z}"
            )));
        }
        Ok(Self {
            offdiag: OffdiagFamily::PowerPerturbed {
                alpha,
                epsilon,
                sigma_z,
            },
            diag: DiagFamily::Gaussian { std_dev: 1.0 },
        })
    }

    /// Randomly thinned powers `b_k = k^alpha * Bernoulli(theta)`.
    pub fn bernoulli_scaled(alpha: f64, theta: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        if !theta.is_finite() || !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in [0, 1], got {theta}"
            )));
        }
        Ok(Self {
            offdiag: OffdiagFamily::BernoulliScaled { alpha, theta },
            diag: DiagFamily::Gaussian { std_dev: 1.0 },
        })
    }

    /// Deterministic off-diagonal table; `alpha` declares the scaling.
    pub fn explicit(alpha: f64, values: Vec<f64>) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "explicit off-diagonal entries must be finite".into(),
            ));
        }
        Ok(Self {
            offdiag: OffdiagFamily::Explicit { alpha, values },
            diag: DiagFamily::Zero,
        })
    }

    /// Replaces the diagonal family (the constructors install the
    /// conventional one).
    pub fn with_diag(mut self, diag: DiagFamily) -> Result<Self> {
        if let DiagFamily::Gaussian { std_dev } = diag {
            if !std_dev.is_finite() || std_dev < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "diagonal std_dev must be nonnegative and finite, got {std_dev}"
                )));
            }
        }
        self.diag = diag;
        Ok(self)
    }

    pub fn offdiag_family(&self) -> &OffdiagFamily {
        &self.offdiag
    }

    pub fn diag_family(&self) -> DiagFamily {
        self.diag
    }

    /// Exponent `alpha` in the scaling `X = n^{-alpha} A`.
    pub fn scaling_alpha(&self) -> f64 {
        match &self.offdiag {
            OffdiagFamily::BetaHermite { .. } => 0.5,
            OffdiagFamily::PowerPerturbed { alpha, .. }
            | OffdiagFamily::BernoulliScaled { alpha, .. }
            | OffdiagFamily::Explicit { alpha, .. } => *alpha,
        }
    }

    /// Rate `epsilon` at which the off-diagonal fluctuations decay; trace
    /// fluctuations are magnified by `n^{epsilon + 1/2}`.
    pub fn fluctuation_rate(&self) -> f64 {
        match &self.offdiag {
            // chi_{k beta}/sqrt(beta) = k^(1/2) (1 + O(k^{-1/2})).
            OffdiagFamily::BetaHermite { .. } => 0.5,
            OffdiagFamily::PowerPerturbed { epsilon, .. } => *epsilon,
            OffdiagFamily::BernoulliScaled { .. } | OffdiagFamily::Explicit { .. } => 0.0,
        }
    }

    /// Draws one matrix of dimension `n`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<TridiagonalMatrix> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "matrix dimension must be at least 1".into(),
            ));
        }
        let mut offdiag = Vec::with_capacity(n - 1);
        match &self.offdiag {
            OffdiagFamily::BetaHermite { beta } => {
                for k in 1..n {
                    // chi_r as the square root of a gamma(r/2, scale 2) draw;
                    // r = k beta need not be integral.
                    let gamma = Gamma::new(k as f64 * beta / 2.0, 2.0)
                        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
                    offdiag.push(gamma.sample(rng).sqrt() / beta.sqrt());
                }
            }
            OffdiagFamily::PowerPerturbed {
                alpha,
                epsilon,
                sigma_z,
            } => {
                let z = Normal::new(0.0, *sigma_z)
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?;
                for k in 1..n {
                    let kf = k as f64;
                    offdiag.push(kf.powf(*alpha) * (1.0 + z.sample(rng) / kf.powf(*epsilon)));
                }
            }
            OffdiagFamily::BernoulliScaled { alpha, theta } => {
                let coin = Bernoulli::new(*theta)
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?;
                for k in 1..n {
                    let hit = if coin.sample(rng) { 1.0 } else { 0.0 };
                    offdiag.push((k as f64).powf(*alpha) * hit);
                }
            }
            OffdiagFamily::Explicit { values, .. } => {
                if values.len() < n - 1 {
                    return Err(Error::LengthMismatch(format!(
                        "explicit table holds {} entries, need {}",
                        values.len(),
                        n - 1
                    )));
                }
                offdiag.extend_from_slice(&values[..n - 1]);
            }
        }
        let diag = sample_diag(self.diag, n, rng)?;
        TridiagonalMatrix::new(diag, offdiag)
    }
}

fn sample_diag<R: Rng + ?Sized>(family: DiagFamily, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    match family {
        DiagFamily::Zero => Ok(vec![0.0; n]),
        DiagFamily::Gaussian { std_dev } => {
            let normal =
                Normal::new(0.0, std_dev).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            Ok((0..n).map(|_| normal.sample(rng)).collect())
        }
    }
}

/// How to evaluate `Tr A^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMethod {
    /// Sum `lambda_i^k` over the computed spectrum.
    Eigen,
    /// Sum entry products over all closed walks of length `k`, anchored at
    /// every site — the combinatorial route, independent of any eigensolve.
    PathSum,
}

/// All step sequences in `{-w..w}^k` that sum to zero; a walk shape is
/// applied at every anchor site that keeps it inside `[1, n]`.
fn closed_shapes(k: usize, w: usize) -> Vec<Vec<i32>> {
    let mut shapes = Vec::new();
    let mut steps = Vec::with_capacity(k);
    fn rec(shapes: &mut Vec<Vec<i32>>, steps: &mut Vec<i32>, level: i32, left: usize, w: i32) {
        if left == 0 {
            if level == 0 {
                shapes.push(steps.clone());
            }
            return;
        }
        // Prune branches that cannot return to zero in the remaining steps.
        if level.abs() > w * left as i32 {
            return;
        }
        for s in -w..=w {
            steps.push(s);
            rec(shapes, steps, level + s, left - 1, w);
            steps.pop();
        }
    }
    rec(&mut shapes, &mut steps, 0, k, w as i32);
    shapes
}

/// Walk-sum trace of a tridiagonal matrix over precomputed shapes.
fn trace_tridiagonal_shapes(t: &TridiagonalMatrix, shapes: &[Vec<i32>]) -> f64 {
    let n = t.n() as i64;
    let mut total = 0.0;
    for shape in shapes {
        for anchor in 1..=n {
            let mut pos = anchor;
            let mut prod = 1.0;
            let mut alive = true;
            for &s in shape {
                match s {
                    0 => prod *= t.diag[(pos - 1) as usize],
                    1 => {
                        if pos >= n {
                            alive = false;
                            break;
                        }
                        prod *= t.offdiag[(pos - 1) as usize];
                        pos += 1;
                    }
                    _ => {
                        if pos <= 1 {
                            alive = false;
                            break;
                        }
                        pos -= 1;
                        prod *= t.offdiag[(pos - 1) as usize];
                    }
                }
            }
            if alive {
                total += prod;
            }
        }
    }
    total
}

/// `Tr A^k` by the requested method.  The walk sum enumerates all closed
/// shapes of length `k` (with the convention that the length-0 walk has
/// product 1, so `k = 0` returns `n`) and is rejected when
/// `3^k * k * n` exceeds the operation budget.
pub fn trace_power(t: &TridiagonalMatrix, k: usize, method: TraceMethod) -> Result<f64> {
    if k == 0 {
        return Ok(t.n() as f64);
    }
    match method {
        TraceMethod::Eigen => {
            let eig = t.eigenvalues(None)?;
            Ok(eig.iter().map(|l| l.powi(k as i32)).sum())
        }
        TraceMethod::PathSum => {
            let cost = 3f64.powi(k as i32) * k as f64 * t.n() as f64;
            if cost > PATH_SUM_BUDGET {
                return Err(Error::BudgetExceeded(format!(
                    "walk sum needs ~{cost:.1e} operations (budget {PATH_SUM_BUDGET:.0e}); \
                     use the eigenvalue method"
                )));
            }
            Ok(trace_tridiagonal_shapes(t, &closed_shapes(k, 1)))
        }
    }
}

/// Mean and standard error of one scaled trace power.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub k: usize,
    pub mean: f64,
    pub std_err: f64,
}

fn summarize(k: usize, values: &[f64]) -> MomentEstimate {
    let reps = values.len() as f64;
    let mean = values.iter().sum::<f64>() / reps;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    MomentEstimate {
        k,
        mean,
        std_err: (ss / (reps * (reps - 1.0))).sqrt(),
    }
}

/// Per-replicate scaled trace powers `tr_n(X^k) = n^{-alpha k - 1} Tr(A^k)`
/// for `k = 0..=k_max`, gathered in replicate order.
///
/// Replicates run in parallel; each one draws from its own seed-derived
/// stream, and aggregation is performed in fixed replicate order, so results
/// are bit-identical across thread counts.
fn mc_trace_table(
    spec: &EnsembleSpec,
    n: usize,
    k_max: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "matrix dimension must be at least 1".into(),
        ));
    }
    let cost = 3f64.powi(k_max as i32) * k_max.max(1) as f64 * n as f64;
    if cost > PATH_SUM_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "per-replicate walk sums need ~{cost:.1e} operations (budget {PATH_SUM_BUDGET:.0e})"
        )));
    }
    let shapes: Vec<Vec<Vec<i32>>> = (0..=k_max).map(|k| closed_shapes(k, 1)).collect();
    let alpha = spec.scaling_alpha();
    let scales: Vec<f64> = (0..=k_max)
        .map(|k| (n as f64).powf(-(alpha * k as f64) - 1.0))
        .collect();
    (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(rep as u64);
            let t = spec.sample(n, &mut rng)?;
            Ok((0..=k_max)
                .map(|k| {
                    if k == 0 {
                        1.0
                    } else {
                        trace_tridiagonal_shapes(&t, &shapes[k]) * scales[k]
                    }
                })
                .collect())
        })
        .collect()
}

/// Monte Carlo estimates of `E[tr_n(X^k)]` for `k = 0..=k_max` over `reps`
/// independent draws.  Deterministic given the seed.
pub fn mc_moments(
    spec: &EnsembleSpec,
    n: usize,
    k_max: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<MomentEstimate>> {
    if reps < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 replicates for a standard error, got {reps}"
        )));
    }
    let table = mc_trace_table(spec, n, k_max, reps, seed)?;
    Ok((0..=k_max)
        .map(|k| {
            let col: Vec<f64> = table.iter().map(|row| row[k]).collect();
            summarize(k, &col)
        })
        .collect())
}

/// Empirical joint statistics of the scaled centered trace powers
/// `n^{epsilon + 1/2} (tr_n X^k - mean)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FluctuationEstimate {
    pub orders: Vec<usize>,
    /// Scaled sample covariance, indexed like `orders`.
    pub covariance: Vec<Vec<f64>>,
    pub skewness: Vec<f64>,
    pub excess_kurtosis: Vec<f64>,
    pub reps: usize,
}

/// Estimates the fluctuation covariance of the trace powers in `k_list`,
/// along with per-component skewness and excess kurtosis as Gaussianity
/// diagnostics.
pub fn mc_fluctuations(
    spec: &EnsembleSpec,
    n: usize,
    k_list: &[usize],
    reps: usize,
    seed: u64,
) -> Result<FluctuationEstimate> {
    if reps < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 replicates for covariance estimates, got {reps}"
        )));
    }
    if k_list.is_empty() || k_list.contains(&0) {
        return Err(Error::InvalidParameter(
            "k_list must be nonempty with orders >= 1".into(),
        ));
    }
    let k_max = *k_list.iter().max().unwrap();
    let table = mc_trace_table(spec, n, k_max, reps, seed)?;
    let scale = (n as f64).powf(spec.fluctuation_rate() + 0.5);
    let d = k_list.len();
    let means: Vec<f64> = k_list
        .iter()
        .map(|&k| table.iter().map(|row| row[k]).sum::<f64>() / reps as f64)
        .collect();
    // Centered, scaled replicate vectors.
    let z: Vec<Vec<f64>> = table
        .iter()
        .map(|row| {
            k_list
                .iter()
                .zip(&means)
                .map(|(&k, &m)| scale * (row[k] - m))
                .collect()
        })
        .collect();
    let mut covariance = vec![vec![0.0; d]; d];
    for row in &z {
        for i in 0..d {
            for j in 0..d {
                covariance[i][j] += row[i] * row[j];
            }
        }
    }
    for r in covariance.iter_mut() {
        for c in r.iter_mut() {
            *c /= (reps - 1) as f64;
        }
    }
    let mut skewness = vec![0.0; d];
    let mut excess_kurtosis = vec![0.0; d];
    for i in 0..d {
        let m2 = z.iter().map(|r| r[i] * r[i]).sum::<f64>() / reps as f64;
        if m2 > 0.0 {
            let m3 = z.iter().map(|r| r[i].powi(3)).sum::<f64>() / reps as f64;
            let m4 = z.iter().map(|r| r[i].powi(4)).sum::<f64>() / reps as f64;
            skewness[i] = m3 / m2.powf(1.5);
            excess_kurtosis[i] = m4 / (m2 * m2) - 3.0;
        }
    }
    Ok(FluctuationEstimate {
        orders: k_list.to_vec(),
        covariance,
        skewness,
        excess_kurtosis,
        reps,
    })
}

/// Symmetric band matrix stored by diagonal offset: `bands[v][i]` holds
/// `b_{v, i+1} = a_{i+1, i+1+v}`, for offsets `v = 0..=w`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandMatrix {
    bands: Vec<Vec<f64>>,
}

impl BandMatrix {
    pub fn new(bands: Vec<Vec<f64>>) -> Result<Self> {
        if bands.is_empty() || bands[0].is_empty() {
            return Err(Error::InvalidParameter(
                "need a nonempty main diagonal".into(),
            ));
        }
        let n = bands[0].len();
        let w = bands.len() - 1;
        if w >= n {
            return Err(Error::InvalidParameter(format!(
                "band width {w} must be smaller than the dimension {n}"
            )));
        }
        for (v, band) in bands.iter().enumerate() {
            if band.len() != n - v {
                return Err(Error::LengthMismatch(format!(
                    "offset-{v} diagonal must hold {} entries, got {}",
                    n - v,
                    band.len()
                )));
            }
            if band.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter(
                    "matrix entries must be finite".into(),
                ));
            }
        }
        Ok(Self { bands })
    }

    pub fn n(&self) -> usize {
        self.bands[0].len()
    }

    pub fn w(&self) -> usize {
        self.bands.len() - 1
    }

    pub fn band(&self, v: usize) -> &[f64] {
        &self.bands[v]
    }

    /// Row-major dense realization (index 1 at the top-left; the spectrum
    /// does not depend on orientation).
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut a = vec![0.0; n * n];
        for (v, band) in self.bands.iter().enumerate() {
            for (i, &x) in band.iter().enumerate() {
                a[i * n + (i + v)] = x;
                a[(i + v) * n + i] = x;
            }
        }
        a
    }

    /// All eigenvalues, ascending, via dense reduction; rejected above desk
    /// scale because the reduction is cubic in `n`.
    pub fn eigenvalues(&self, tol: Option<f64>) -> Result<Vec<f64>> {
        let n = self.n();
        if n > DENSE_EIGEN_MAX_N {
            return Err(Error::BudgetExceeded(format!(
                "dense eigensolve capped at n = {DENSE_EIGEN_MAX_N}, got {n}"
            )));
        }
        eigen::symmetric_eigenvalues_dense(&self.to_dense(), n, tol)
    }
}

/// Entry noise of one band diagonal, multiplying the deterministic profile
/// `i^alpha`.
#[derive(Debug, Clone, Copy)]
pub enum BandEntry {
    /// `xi = 1`: all positive-order moments equal 1.
    Deterministic,
    /// `xi ~ Bernoulli(theta)`: all positive-order moments equal `theta`.
    Bernoulli { theta: f64 },
    /// `xi ~ N(0, std_dev^2)`.
    Gaussian { std_dev: f64 },
}

/// One diagonal of a band ensemble: `b_{v,i} = i^alpha * xi_{v,i}`.
#[derive(Debug, Clone, Copy)]
pub struct BandDiagonalSpec {
    pub alpha: f64,
    pub entry: BandEntry,
}

impl BandDiagonalSpec {
    fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "diagonal exponent must be nonnegative and finite, got {}",
                self.alpha
            )));
        }
        match self.entry {
            BandEntry::Deterministic => Ok(()),
            BandEntry::Bernoulli { theta } => {
                if !theta.is_finite() || !(0.0..=1.0).contains(&theta) {
                    Err(Error::InvalidParameter(format!(
                        "theta must lie in [0, 1], got {theta}"
                    )))
                } else {
                    Ok(())
                }
            }
            BandEntry::Gaussian { std_dev } => {
                if !std_dev.is_finite() || std_dev < 0.0 {
                    Err(Error::InvalidParameter(format!(
                        "std_dev must be nonnegative and finite, got {std_dev}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Draws one band matrix with `w = specs.len() - 1`, diagonal `v` following
/// `specs[v]`.
pub fn sample_band<R: Rng + ?Sized>(
    specs: &[BandDiagonalSpec],
    n: usize,
    rng: &mut R,
) -> Result<BandMatrix> {
    if specs.is_empty() {
        return Err(Error::InvalidParameter(
            "need at least the main diagonal spec".into(),
        ));
    }
    let w = specs.len() - 1;
    if w >= n {
        return Err(Error::InvalidParameter(format!(
            "band width {w} must be smaller than the dimension {n}"
        )));
    }
    for s in specs {
        s.validate()?;
    }
    let mut bands = Vec::with_capacity(specs.len());
    for (v, s) in specs.iter().enumerate() {
        let mut band = Vec::with_capacity(n - v);
        for i in 1..=(n - v) {
            let xi = match s.entry {
                BandEntry::Deterministic => 1.0,
                BandEntry::Bernoulli { theta } => {
                    if rng.gen_bool(theta) {
                        1.0
                    } else {
                        0.0
                    }
                }
                BandEntry::Gaussian { std_dev } => {
                    Normal::new(0.0, std_dev)
                        .map_err(|e| Error::InvalidParameter(e.to_string()))?
                        .sample(rng)
                }
            };
            band.push((i as f64).powf(s.alpha) * xi);
        }
        bands.push(band);
    }
    BandMatrix::new(bands)
}

/// Walk-sum trace of a band matrix over precomputed shapes with steps in
/// `{-w..w}`.
fn trace_band_shapes(b: &BandMatrix, shapes: &[Vec<i32>]) -> f64 {
    let n = b.n() as i64;
    let mut total = 0.0;
    for shape in shapes {
        for anchor in 1..=n {
            let mut pos = anchor;
            let mut prod = 1.0;
            let mut alive = true;
            for &s in shape {
                let next = pos + s as i64;
                if next < 1 || next > n {
                    alive = false;
                    break;
                }
                let lo = pos.min(next);
                prod *= b.bands[s.unsigned_abs() as usize][(lo - 1) as usize];
                pos = next;
            }
            if alive {
                total += prod;
            }
        }
    }
    total
}

/// `Tr B^k` for a band matrix, by spectrum or by closed walks with steps up
/// to the band width.
pub fn band_trace_power(b: &BandMatrix, k: usize, method: TraceMethod) -> Result<f64> {
    if k == 0 {
        return Ok(b.n() as f64);
    }
    match method {
        TraceMethod::Eigen => {
            let eig = b.eigenvalues(None)?;
            Ok(eig.iter().map(|l| l.powi(k as i32)).sum())
        }
        TraceMethod::PathSum => {
            let width = 2 * b.w() + 1;
            let cost = (width as f64).powi(k as i32) * k as f64 * b.n() as f64;
            if cost > PATH_SUM_BUDGET {
                return Err(Error::BudgetExceeded(format!(
                    "band walk sum needs ~{cost:.1e} operations (budget {PATH_SUM_BUDGET:.0e})"
                )));
            }
            Ok(trace_band_shapes(b, &closed_shapes(k, b.w())))
        }
    }
}

/// Monte Carlo estimates of `E[tr_n(X^k)]` for a band ensemble, where
/// `X = n^{-alpha} B` scales by the largest diagonal exponent.
pub fn mc_band_moments(
    specs: &[BandDiagonalSpec],
    n: usize,
    k_list: &[usize],
    reps: usize,
    seed: u64,
) -> Result<Vec<MomentEstimate>> {
    if reps < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 replicates for a standard error, got {reps}"
        )));
    }
    if specs.is_empty() {
        return Err(Error::InvalidParameter(
            "need at least the main diagonal spec".into(),
        ));
    }
    let w = specs.len() - 1;
    let alpha = specs.iter().map(|s| s.alpha).fold(0.0, f64::max);
    if alpha <= 0.0 {
        return Err(Error::InvalidParameter(
            "the largest diagonal exponent must be positive".into(),
        ));
    }
    let k_max = k_list.iter().copied().max().unwrap_or(0);
    let width = (2 * w + 1) as f64;
    let cost = width.powi(k_max as i32) * k_max.max(1) as f64 * n as f64;
    if cost > PATH_SUM_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "per-replicate band walk sums need ~{cost:.1e} operations \
             (budget {PATH_SUM_BUDGET:.0e})"
        )));
    }
    let shapes: Vec<Vec<Vec<i32>>> = k_list.iter().map(|&k| closed_shapes(k, w)).collect();
    let table: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(rep as u64);
            let b = sample_band(specs, n, &mut rng)?;
            Ok(k_list
                .iter()
                .zip(&shapes)
                .map(|(&k, sh)| {
                    let scale = (n as f64).powf(-(alpha * k as f64) - 1.0);
                    if k == 0 {
                        1.0
                    } else {
                        trace_band_shapes(&b, sh) * scale
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(k_list
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let col: Vec<f64> = table.iter().map(|row| row[i]).collect();
            summarize(k, &col)
        })
        .collect())
}
