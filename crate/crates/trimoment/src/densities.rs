//! Limiting spectral laws: evaluation, sampling and integration.
//!
//! Three families live here: the Ullman densities `h_alpha` (the laws whose
//! moments are `C(k, k/2) / (alpha k + 1)`), the arcsine-based sampler that
//! realizes them as `T^alpha * W`, and the Bernoulli mixtures assembled from
//! Chebyshev block spectra.  Every density is paired with a quadrature-based
//! moment evaluator so analytic and numeric routes can be cross-checked.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::quad::{integrate, integrate_with_budget};
use crate::{Error, Result};

fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "scaling exponent alpha must be positive and finite, got {alpha}"
        )));
    }
    Ok(())
}

/// Ullman's density `h_alpha` at `x`.
///
/// Zero outside `[-2, 2]`.  For `alpha` in `{1/4, 1/2, 1}` the closed forms
/// are used; otherwise the integral representation is evaluated by adaptive
/// quadrature.  `h_1` diverges logarithmically at the origin and `h_alpha`
/// for `alpha > 1` diverges like a power there; those evaluations report
/// `f64::INFINITY` (the singularities are integrable).
pub fn ullman_pdf(x: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !x.is_finite() {
        return Err(Error::InvalidParameter(format!("x must be finite, got {x}")));
    }
    if x.abs() >= 2.0 {
        return Ok(0.0);
    }
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    if close(alpha, 0.25) {
        Ok((2.0 + x * x) * (4.0 - x * x).sqrt() / (6.0 * PI))
    } else if close(alpha, 0.5) {
        Ok((4.0 - x * x).sqrt() / (2.0 * PI))
    } else if close(alpha, 1.0) {
        if x == 0.0 {
            Ok(f64::INFINITY)
        } else {
            Ok(((2.0 + (4.0 - x * x).sqrt()) / x.abs()).ln() / (2.0 * PI))
        }
    } else {
        ullman_pdf_integral(x, alpha)
    }
}

/// Ullman's density via its integral representation, for any `alpha > 0`.
///
/// The density of `T^alpha * W` (with `T` uniform on `[0,1]` and `W`
/// arcsine on `[-2, 2]`) is
///
/// ```text
/// h_alpha(x) = 2^(-1/alpha) / (alpha pi) * int_{|x|}^{2} u^(1/alpha - 1) / sqrt(u^2 - x^2) du.
/// ```
///
/// Substituting `u = sqrt(x^2 + (4 - x^2) v^2)` maps the range to `[0, 1]`
/// and removes the inverse-square-root endpoint factor, leaving a smooth
/// integrand for every `x != 0`.
pub fn ullman_pdf_integral(x: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !x.is_finite() {
        return Err(Error::InvalidParameter(format!("x must be finite, got {x}")));
    }
    if x.abs() >= 2.0 {
        return Ok(0.0);
    }
    if x == 0.0 && alpha >= 1.0 {
        return Ok(f64::INFINITY);
    }
    let x2 = x * x;
    let spread = 4.0 - x2;
    let exponent = 0.5 / alpha - 1.0;
    if alpha > 1.0 {
        // Here 2 * exponent + 1 = 1/alpha - 1 < 0: the integrand peaks at
        // v = 0 with height |x|^(2 exponent), which outgrows any absolute
        // tolerance as x approaches the origin singularity.  Substituting
        // v = |x| sinh(t) / sqrt(spread) pulls the |x|^(1/alpha - 1)
        // blow-up out in closed form and leaves cosh(t)^(1/alpha - 1), an
        // order-one integrand with exponential tail decay.
        let q = 1.0 / alpha - 1.0;
        let t_max = (spread.sqrt() / x.abs()).asinh();
        let tail = integrate(|t| t.cosh().powf(q), 0.0, t_max, 1e-12)?;
        return Ok(2f64.powf(-1.0 / alpha) / (alpha * PI) * x.abs().powf(q) * tail);
    }
    // Prefactor folded into the integrand so the quadrature target is the
    // density itself (order one) rather than a quantity that can overflow
    // the absolute tolerance for small alpha.
    let scale = 2f64.powf(-1.0 / alpha) * spread.sqrt() / (alpha * PI);
    // For 1/2 < alpha < 1 the integrand behaves like v^(1/alpha - 2) near
    // v = 0 when x is small — integrable but too steep for bisection alone.
    // v = s^p with p = alpha/(1 - alpha) flattens that power exactly.
    let p = if alpha > 0.5 && alpha < 1.0 {
        (alpha / (1.0 - alpha)).clamp(1.0, 200.0)
    } else {
        1.0
    };
    integrate(
        |s| {
            let v = s.powf(p);
            scale * p * s.powf(p - 1.0) * (x2 + spread * v * v).powf(exponent)
        },
        0.0,
        1.0,
        1e-12,
    )
}

/// One draw from Ullman's law: `T^alpha * W` with `T` uniform on `[0, 1]`
/// and `W = 2 cos(pi U)` arcsine on `[-2, 2]`.
pub fn ullman_sample<R: rand::Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    check_alpha(alpha)?;
    let t: f64 = rng.gen();
    let u: f64 = rng.gen();
    Ok(t.powf(alpha) * 2.0 * (PI * u).cos())
}

/// Eigenvalues of the `(N+1) x (N+1)` tridiagonal 0/1 block:
/// `2 cos(u pi / (N+2))` for `u = 1..=N+1`, in descending order.
pub fn chebyshev_block_eigenvalues(n: usize) -> Vec<f64> {
    let m = (n + 2) as f64;
    (1..=n + 1)
        .map(|u| 2.0 * (u as f64 * PI / m).cos())
        .collect()
}

/// Precomputed weights of the Chebyshev-block series behind the Bernoulli
/// mixture density.
///
/// For each block size `M = N + 2` the inner sum of the density runs over
/// `u = 1..=floor(M * arccos(|x|/2) / pi)`; storing prefix sums of the
/// `u`-weights makes one density evaluation `O(N_max)`.  Terms with an
/// exactly zero block eigenvalue (`u = M/2`) belong to the atom at the
/// origin and carry weight zero here.
#[derive(Debug)]
struct BernoulliTables {
    theta: f64,
    alpha: f64,
    /// `prefix[N-1][j]` = sum of the first `j` weights for block size `N+2`.
    prefix: Vec<Vec<f64>>,
    /// `theta^N` for `N = 1..=N_max`.
    theta_pow: Vec<f64>,
}

impl BernoulliTables {
    fn new(theta: f64, alpha: f64, n_max: usize) -> Self {
        let base = 1.0 / (alpha * 2f64.powf(1.0 / alpha));
        let mut prefix = Vec::with_capacity(n_max);
        let mut theta_pow = Vec::with_capacity(n_max);
        let mut pow = 1.0;
        for n in 1..=n_max {
            let m = n + 2;
            let mut row = Vec::with_capacity(m / 2 + 1);
            row.push(0.0);
            let mut acc = 0.0;
            for u in 1..=m / 2 {
                let c = (u as f64 * PI / m as f64).cos();
                if 2 * u != m {
                    acc += base / c.abs().powf(1.0 / alpha);
                }
                row.push(acc);
            }
            prefix.push(row);
            pow *= theta;
            theta_pow.push(pow);
        }
        Self {
            theta,
            alpha,
            prefix,
            theta_pow,
        }
    }

    /// The series `sum_N theta^N * W_{N+2}[floor((N+2) arccos(|x|/2)/pi)]`,
    /// without the `|x|^(1/alpha - 1)` prefactor or the `(1-theta)^2` scale.
    fn series_sum(&self, abs_x: f64) -> f64 {
        let ratio = (abs_x / 2.0).clamp(-1.0, 1.0).acos() / PI;
        let mut total = 0.0;
        for (idx, row) in self.prefix.iter().enumerate() {
            let m = idx + 3;
            let j = ((m as f64 * ratio).floor() as usize).min(row.len() - 1);
            total += self.theta_pow[idx] * row[j];
        }
        total
    }

    /// Full density at `x`, excluding only points outside `(-2, 2)`.
    fn density(&self, x: f64) -> f64 {
        if x.abs() >= 2.0 {
            return 0.0;
        }
        let shape = (1.0 - self.theta).powi(2) * self.series_sum(x.abs());
        x.abs().powf(1.0 / self.alpha - 1.0) * shape
    }
}

/// The continuous part of a spectral measure.
#[derive(Debug, Clone)]
enum Density {
    Zero,
    Ullman { alpha: f64 },
    BernoulliSeries(Arc<BernoulliTables>),
}

/// A spectral law with point masses and a density on a compact support.
#[derive(Debug, Clone)]
pub struct SpectralMeasure {
    atoms: Vec<(f64, f64)>,
    support: (f64, f64),
    density: Density,
    truncation_error: f64,
}

impl SpectralMeasure {
    /// Point masses as `(location, weight)` pairs.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// Closed interval carrying all the mass.
    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// Density of the continuous part at `x` (zero off the support).
    ///
    /// May return `f64::INFINITY` at an integrable interior singularity
    /// (the origin, for the power-divergent laws).
    pub fn density(&self, x: f64) -> f64 {
        match &self.density {
            Density::Zero => 0.0,
            Density::Ullman { alpha } => ullman_pdf(x, *alpha).unwrap_or(0.0),
            Density::BernoulliSeries(t) => t.density(x),
        }
    }

    /// Upper bound on the mass dropped by truncating an infinite series
    /// representation; zero for exactly represented measures.
    pub fn truncation_error(&self) -> f64 {
        self.truncation_error
    }
}

/// Ullman's law `nu_alpha` as a measure: no atoms, density `h_alpha` on
/// `[-2, 2]`.
pub fn ullman_measure(alpha: f64) -> Result<SpectralMeasure> {
    check_alpha(alpha)?;
    Ok(SpectralMeasure {
        atoms: Vec::new(),
        support: (-2.0, 2.0),
        density: Density::Ullman { alpha },
        truncation_error: 0.0,
    })
}

/// The limiting law of the Bernoulli-coefficient operator: a point mass
/// `(1-theta)/(1+theta)` at the origin plus a density built from Chebyshev
/// block spectra.
///
/// `theta = 0` degenerates to the point mass at zero and `theta = 1` to
/// Ullman's law.  In between, the density series is truncated at `n_max`
/// blocks; `None` selects the smallest `N` with `theta^N < 1e-10`, capped
/// at `10^4`.  The reported truncation error bounds the dropped mass.
pub fn bernoulli_measure(theta: f64, alpha: f64, n_max: Option<usize>) -> Result<SpectralMeasure> {
    check_alpha(alpha)?;
    if !theta.is_finite() || !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in [0, 1], got {theta}"
        )));
    }
    if theta == 0.0 {
        return Ok(SpectralMeasure {
            atoms: vec![(0.0, 1.0)],
            support: (0.0, 0.0),
            density: Density::Zero,
            truncation_error: 0.0,
        });
    }
    if theta == 1.0 {
        return ullman_measure(alpha);
    }
    let n_max = match n_max {
        Some(n) => {
            if n == 0 {
                return Err(Error::InvalidParameter(
                    "the series needs at least one block (n_max >= 1)".into(),
                ));
            }
            n
        }
        None => {
            let n = (1e-10f64.ln() / theta.ln()).ceil();
            (n as usize).clamp(1, 10_000)
        }
    };
    // Dropped continuous mass: (1-theta)^2 sum_{N > n_max} (N+1) theta^N,
    // summed exactly as a derivative of the geometric series.
    let tail = theta.powi(n_max as i32 + 1)
        * ((n_max as f64 + 2.0) * (1.0 - theta) + theta);
    Ok(SpectralMeasure {
        atoms: vec![(0.0, (1.0 - theta) / (1.0 + theta))],
        support: (-2.0, 2.0),
        density: Density::BernoulliSeries(Arc::new(BernoulliTables::new(theta, alpha, n_max))),
        truncation_error: tail,
    })
}

/// `k`-th moment of a spectral measure: exact atom contributions plus
/// adaptive quadrature of `x^k` against the density.
///
/// The quadrature always splits at the origin (several of the densities
/// have an integrable singularity there), and for `alpha > 1` integrates in
/// the variable `y = |x|^(1/alpha)`, which removes the singular prefactor
/// of the Bernoulli series entirely.
pub fn measure_moment(mu: &SpectralMeasure, k: usize) -> Result<f64> {
    let mut total: f64 = mu
        .atoms
        .iter()
        .map(|&(loc, w)| w * loc.powi(k as i32))
        .sum();
    let (lo, hi) = mu.support;
    match &mu.density {
        Density::Zero => {}
        Density::Ullman { alpha } => {
            let alpha = *alpha;
            // A failed density evaluation must surface, not integrate as
            // zero; NaN trips the quadrature's non-finite check.
            let pdf = |x: f64| ullman_pdf(x, alpha).unwrap_or(f64::NAN);
            if alpha > 1.0 {
                // x = sign * y^alpha, as in the series branch: the Jacobian
                // cancels the |x|^(1/alpha - 1) origin singularity, so the
                // integrand stays bounded.
                let edge = hi.powf(1.0 / alpha);
                for sign in [-1.0f64, 1.0] {
                    let f = |y: f64| {
                        let x = y.powf(alpha);
                        alpha * y.powf(alpha - 1.0) * (sign * x).powi(k as i32) * pdf(x)
                    };
                    total += integrate(f, 0.0, edge, 5e-9)?;
                }
            } else {
                let f = |x: f64| x.powi(k as i32) * pdf(x);
                total += integrate(f, lo, 0.0, 5e-9)? + integrate(f, 0.0, hi, 5e-9)?;
            }
        }
        Density::BernoulliSeries(tables) => {
            let alpha = tables.alpha;
            let scale = (1.0 - tables.theta).powi(2);
            for sign in [-1.0f64, 1.0] {
                let edge = if sign < 0.0 { -lo } else { hi };
                if alpha > 1.0 {
                    // x = sign * y^alpha; the |x|^(1/alpha - 1) prefactor and
                    // the Jacobian combine to the constant alpha.
                    let f = |y: f64| {
                        let x = y.powf(alpha);
                        alpha * scale
                            * (sign * x).powi(k as i32)
                            * tables.series_sum(x)
                    };
                    total +=
                        integrate_with_budget(f, 0.0, edge.powf(1.0 / alpha), 1e-6, 200_000)?;
                } else {
                    let f = |x: f64| (sign * x).powi(k as i32) * tables.density(sign * x);
                    total += integrate_with_budget(f, 0.0, edge, 1e-6, 200_000)?;
                }
            }
        }
    }
    Ok(total)
}
