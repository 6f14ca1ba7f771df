//! Limiting Gaussian covariance of centered trace powers.
//!
//! Scaled trace powers fluctuate jointly Gaussian around their limits; this
//! module evaluates the limiting covariances.  The entrywise covariance
//! `C(k, l)` of the off-diagonal fluctuations is an input (closed form in
//! the perturbative model, a user table otherwise); the trace covariance
//! `D(k, l)` is assembled from it by summing a per-level kernel over pairs
//! of lattice paths.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::moments::MomentSequence;
use crate::paths::{enumerate_gamma_pairs, level_stats, LevelStats};
use crate::{Error, Result};

/// Limiting covariance of the scaled entry fluctuations,
/// `C(k, l) = lim cov` of the centered `k`-th and `l`-th entry powers.
#[derive(Clone)]
pub enum CovKernel {
    /// `C(k, l) = m_{k+l} - m_k m_l`: the kernel forced at `epsilon = 0`,
    /// where the entry distribution itself carries the fluctuation.
    MomentGap,
    /// `C(k, l) = k l sigma_Z^2`: multiplicative-noise entries.
    Perturbative { sigma_z_sq: f64 },
    /// Explicit values, `table[k][l]`.
    Table(Vec<Vec<f64>>),
    /// Arbitrary reentrant evaluator.
    Custom(Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>),
}

impl fmt::Debug for CovKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovKernel::MomentGap => write!(f, "MomentGap"),
            CovKernel::Perturbative { sigma_z_sq } => {
                write!(f, "Perturbative {{ sigma_z_sq: {sigma_z_sq} }}")
            }
            CovKernel::Table(t) => write!(f, "Table({} rows)", t.len()),
            CovKernel::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl CovKernel {
    fn eval(&self, k: usize, l: usize, m: &[f64]) -> Result<f64> {
        match self {
            CovKernel::MomentGap => {
                if m.len() <= k + l {
                    return Err(Error::MomentOutOfRange {
                        needed: k + l,
                        have: m.len() - 1,
                    });
                }
                Ok(m[k + l] - m[k] * m[l])
            }
            CovKernel::Perturbative { sigma_z_sq } => Ok(k as f64 * l as f64 * sigma_z_sq),
            CovKernel::Table(t) => t
                .get(k)
                .and_then(|row| row.get(l))
                .copied()
                .ok_or(Error::MomentOutOfRange {
                    needed: k.max(l),
                    have: t.len().saturating_sub(1),
                }),
            CovKernel::Custom(f) => Ok(f(k, l)),
        }
    }
}

/// Everything the trace-covariance evaluator needs: the entry moments and
/// their exponent, the fluctuation rate `epsilon`, the entry covariance
/// kernel, and the diagonal variance.
#[derive(Debug, Clone)]
pub struct FluctuationSpec {
    m: MomentSequence,
    epsilon: f64,
    kernel: CovKernel,
    sigma_d_sq: f64,
}

impl FluctuationSpec {
    /// Builds and validates a spec.
    ///
    /// `epsilon` must lie in `[0, alpha]`.  At `epsilon = 0` the kernel must
    /// be [`CovKernel::MomentGap`] (nothing else is consistent with that
    /// regime); for `epsilon > 0` a genuine kernel must be supplied instead,
    /// and the entry moments must collapse as `m_k = m_2^(k/2)` for even `k`
    /// — a requirement of the regime that is checked here, not assumed.
    pub fn new(
        m: MomentSequence,
        epsilon: f64,
        kernel: CovKernel,
        sigma_d_sq: f64,
    ) -> Result<Self> {
        let alpha = m.alpha();
        if !epsilon.is_finite() || epsilon < 0.0 || epsilon > alpha + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in [0, alpha] = [0, {alpha}], got {epsilon}"
            )));
        }
        if !sigma_d_sq.is_finite() || sigma_d_sq < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "sigma_d_sq must be nonnegative and finite, got {sigma_d_sq}"
            )));
        }
        let gap = matches!(kernel, CovKernel::MomentGap);
        if epsilon == 0.0 && !gap {
            return Err(Error::InvalidParameter(
                "at epsilon = 0 the entry covariance is the moment gap m_{k+l} - m_k m_l; \
                 use CovKernel::MomentGap"
                    .into(),
            ));
        }
        if epsilon > 0.0 {
            if gap {
                return Err(Error::InvalidParameter(
                    "for epsilon > 0 the moment-gap kernel degenerates; supply the \
                     entry covariance C(k, l) explicitly"
                        .into(),
                ));
            }
            let v = m.values();
            let m2 = if v.len() > 2 { v[2] } else { 1.0 };
            for k in (4..v.len()).step_by(2) {
                let collapsed = m2.powi(k as i32 / 2);
                if (v[k] - collapsed).abs() > 1e-9 * collapsed.abs().max(1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "epsilon > 0 requires m_k = m_2^(k/2) for even k; \
                         m_{k} = {} but m_2^{} = {collapsed}",
                        v[k],
                        k / 2
                    )));
                }
            }
        }
        Ok(Self {
            m,
            epsilon,
            kernel,
            sigma_d_sq,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.m.alpha()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn moments(&self) -> &MomentSequence {
        &self.m
    }

    pub fn kernel(&self) -> &CovKernel {
        &self.kernel
    }

    pub fn sigma_d_sq(&self) -> f64 {
        self.sigma_d_sq
    }

    /// `1 / (alpha (k+l) + 1 - 2 epsilon)`, the scaling normalizer shared by
    /// every regime.
    fn normalizer(&self, k: usize, l: usize) -> f64 {
        1.0 / (self.alpha() * (k + l) as f64 + 1.0 - 2.0 * self.epsilon)
    }
}

/// Entry covariance in the perturbative model: `C(k, l) = k l sigma_Z^2`.
pub fn cov_entry_perturbative(k: usize, l: usize, sigma_z_sq: f64) -> f64 {
    k as f64 * l as f64 * sigma_z_sq
}

/// Per-level covariance kernel for one ordered pair of paths: levels below
/// the active one contribute joint moments, the active level contributes
/// `C`, and levels above contribute split moments.
fn pair_kernel(
    s1: &LevelStats,
    s2: &LevelStats,
    kernel: &CovKernel,
    m: &[f64],
) -> Result<f64> {
    let levels: BTreeSet<i32> = s1
        .crossings
        .keys()
        .chain(s2.crossings.keys())
        .copied()
        .collect();
    let counts: Vec<(u32, u32)> = levels
        .iter()
        .map(|&i| (s1.crossing(i), s2.crossing(i)))
        .collect();
    let mut total = 0.0;
    for (idx, &(c1, c2)) in counts.iter().enumerate() {
        let c = kernel.eval(c1 as usize, c2 as usize, m)?;
        if c == 0.0 {
            continue;
        }
        let mut term = c;
        for (jdx, &(d1, d2)) in counts.iter().enumerate() {
            if jdx < idx {
                term *= m[(d1 + d2) as usize];
            } else if jdx > idx {
                term *= m[d1 as usize] * m[d2 as usize];
            }
        }
        total += term;
    }
    Ok(total)
}

/// Limiting covariance `D(k, l)` of the scaled centered trace powers.
///
/// Mixed parity always vanishes.  Even orders sum the per-level kernel over
/// path pairs sharing a level; at `epsilon = 0` this telescopes into the
/// difference of joint and split moment products, which is evaluated
/// directly.  Odd orders contribute only at `epsilon = alpha`, through the
/// diagonal variance on pairs of one-flat paths with aligned flats.  Orders
/// `0` never fluctuate.
pub fn cov_trace(k: usize, l: usize, spec: &FluctuationSpec) -> Result<f64> {
    if k == 0 || l == 0 {
        return Ok(0.0);
    }
    if (k + l) % 2 == 1 {
        return Ok(0.0);
    }
    let m = spec.m.values();
    if k % 2 == 1 {
        // Odd-odd: diagonal-variance term, alive only at epsilon = alpha.
        if (spec.epsilon - spec.alpha()).abs() > 1e-12 {
            return Ok(0.0);
        }
        if m.len() <= k.max(l).saturating_sub(1) {
            return Err(Error::MomentOutOfRange {
                needed: k.max(l) - 1,
                have: m.len() - 1,
            });
        }
        let total: f64 = enumerate_gamma_pairs(k, l)
            .iter()
            .map(|(g1, g2)| {
                let p1: f64 = level_stats(g1)
                    .crossings
                    .values()
                    .map(|&c| m[c as usize])
                    .product();
                let p2: f64 = level_stats(g2)
                    .crossings
                    .values()
                    .map(|&c| m[c as usize])
                    .product();
                p1 * p2
            })
            .sum();
        return Ok(spec.sigma_d_sq * total * spec.normalizer(k, l));
    }
    // Even-even.
    if m.len() <= k + l {
        return Err(Error::MomentOutOfRange {
            needed: k + l,
            have: m.len() - 1,
        });
    }
    let pairs = enumerate_gamma_pairs(k, l);
    let total = if spec.epsilon == 0.0 {
        pairs
            .iter()
            .map(|(g1, g2)| {
                let (s1, s2) = (level_stats(g1), level_stats(g2));
                let levels: BTreeSet<i32> = s1
                    .crossings
                    .keys()
                    .chain(s2.crossings.keys())
                    .copied()
                    .collect();
                let joint: f64 = levels
                    .iter()
                    .map(|&i| m[(s1.crossing(i) + s2.crossing(i)) as usize])
                    .product();
                let split: f64 = levels
                    .iter()
                    .map(|&i| m[s1.crossing(i) as usize] * m[s2.crossing(i) as usize])
                    .product();
                joint - split
            })
            .sum::<f64>()
    } else {
        let mut acc = 0.0;
        for (g1, g2) in &pairs {
            acc += pair_kernel(&level_stats(g1), &level_stats(g2), &spec.kernel, m)?;
        }
        acc
    };
    Ok(total * spec.normalizer(k, l))
}

/// Limiting variance of the linear statistic with polynomial weights
/// `P(x) = sum_k w_k x^k`: the quadratic form of `cov_trace` over
/// `weights = (w_1, .., w_N)`.
pub fn sigma_poly(weights: &[f64], spec: &FluctuationSpec) -> Result<f64> {
    if let Some(bad) = weights.iter().find(|w| !w.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "polynomial weights must be finite, got {bad}"
        )));
    }
    let mut total = 0.0;
    for (i, &wk) in weights.iter().enumerate() {
        if wk == 0.0 {
            continue;
        }
        for (j, &wl) in weights.iter().enumerate() {
            if wl == 0.0 {
                continue;
            }
            total += wk * wl * cov_trace(i + 1, j + 1, spec)?;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{gamma_count, Path};

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn choose(k: usize) -> f64 {
        gamma_count(k).to_string().parse().unwrap()
    }

    /// beta-Hermite style spec: alpha = epsilon = 1/2, unit entry moments,
    /// perturbative kernel.
    fn hermite_spec(beta: f64, up_to: usize) -> FluctuationSpec {
        FluctuationSpec::new(
            MomentSequence::new(0.5, vec![1.0; up_to + 1]).unwrap(),
            0.5,
            CovKernel::Perturbative {
                sigma_z_sq: 1.0 / (2.0 * beta),
            },
            2.0 / beta,
        )
        .unwrap()
    }

    #[test]
    fn entry_covariance_closed_form() {
        assert_eq!(cov_entry_perturbative(2, 2, 0.25), 1.0);
        assert_eq!(cov_entry_perturbative(2, 4, 0.25), 2.0);
        assert_eq!(cov_entry_perturbative(5, 0, 3.0), 0.0);
    }

    #[test]
    fn hermite_trace_covariances_at_beta_two() {
        let spec = hermite_spec(2.0, 10);
        close(cov_trace(1, 1, &spec).unwrap(), 1.0, 1e-12);
        close(cov_trace(2, 2, &spec).unwrap(), 2.0, 1e-12);
        close(cov_trace(2, 4, &spec).unwrap(), 8.0, 1e-12);
        close(cov_trace(4, 4, &spec).unwrap(), 36.0, 1e-12);
        close(cov_trace(3, 3, &spec).unwrap(), 12.0, 1e-12);
        assert_eq!(cov_trace(2, 3, &spec).unwrap(), 0.0);
        assert_eq!(cov_trace(1, 2, &spec).unwrap(), 0.0);
        assert_eq!(cov_trace(0, 2, &spec).unwrap(), 0.0);
    }

    #[test]
    fn perturbative_sliding_count_closed_form() {
        // Summing the kernel over all pairs equals
        // k l C(k,k/2) C(l,l/2) sigma_Z^2 / (alpha(k+l) + 1 - 2 epsilon):
        // each step of the slid path crosses a fixed line at exactly one
        // offset, so the level sums decouple.
        for alpha in [0.5, 0.8] {
            let ms = MomentSequence::new(alpha, vec![1.0; 13]).unwrap();
            let spec = FluctuationSpec::new(
                ms,
                alpha,
                CovKernel::Perturbative { sigma_z_sq: 0.37 },
                0.0,
            )
            .unwrap();
            for (k, l) in [(2usize, 2usize), (2, 4), (4, 4), (4, 6)] {
                let expect = (k * l) as f64 * choose(k) * choose(l) * 0.37
                    / (alpha * (k + l) as f64 + 1.0 - 2.0 * alpha);
                close(cov_trace(k, l, &spec).unwrap(), expect, 1e-10 * expect.abs());
            }
        }
    }

    #[test]
    fn zero_rate_closed_form_is_the_telescoped_kernel() {
        // With C = m_{k+l} - m_k m_l the per-level kernel telescopes into
        // the joint-minus-split product difference; both evaluations must
        // agree for arbitrary (non-collapsing) moments.
        let m = vec![1.0, 0.0, 1.4, 0.0, 2.9, 0.0, 9.1, 0.0, 40.0, 0.0, 210.0, 0.0, 1.3e3];
        let alpha = 0.6;
        let ms = MomentSequence::new(alpha, m.clone()).unwrap();
        let spec = FluctuationSpec::new(ms, 0.0, CovKernel::MomentGap, 0.4).unwrap();
        for (k, l) in [(2usize, 2usize), (2, 4), (4, 4), (2, 6)] {
            let direct = cov_trace(k, l, &spec).unwrap();
            let mut kernel_sum = 0.0;
            for (g1, g2) in &enumerate_gamma_pairs(k, l) {
                kernel_sum +=
                    pair_kernel(&level_stats(g1), &level_stats(g2), &CovKernel::MomentGap, &m)
                        .unwrap();
            }
            let expect = kernel_sum / (alpha * (k + l) as f64 + 1.0);
            close(direct, expect, 1e-9 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn worked_pair_kernel_value() {
        // The hat-over-valley pair whose covariance reduces to
        // E[b^2] cov(b^4, b^2): a single shared level with counts (2, 4),
        // so the kernel is C(2,4) = 8 sigma_Z^2 times unit moments.
        let g1 = Path::new(vec![-2, -1, 0, -1, -2]).unwrap();
        let g2 = Path::new(vec![-2, -1, -2, -1, -2]).unwrap();
        let kernel = CovKernel::Perturbative { sigma_z_sq: 0.25 };
        let m = vec![1.0; 9];
        let v = pair_kernel(&level_stats(&g1), &level_stats(&g2), &kernel, &m).unwrap();
        close(v, 8.0 * 0.25, 1e-14);
    }

    #[test]
    fn odd_odd_closed_forms() {
        // Pairs of one-flat paths contribute sigma_d^2 times split moment
        // products; under the collapse m_k = m_2^(k/2) the total is
        // k l C(k-1,(k-1)/2) C(l-1,(l-1)/2) sigma_d^2 m_2^((k+l-2)/2).
        let (alpha, m2, sd) = (0.7, 1.6, 0.9);
        let ms = MomentSequence::new(alpha, vec![1.0, 0.0, m2, 0.0, m2 * m2]).unwrap();
        let spec = FluctuationSpec::new(
            ms,
            alpha,
            CovKernel::Perturbative { sigma_z_sq: 0.1 },
            sd,
        )
        .unwrap();
        close(cov_trace(1, 1, &spec).unwrap(), sd, 1e-13);
        close(
            cov_trace(1, 3, &spec).unwrap(),
            6.0 * sd * m2 / (2.0 * alpha + 1.0),
            1e-13,
        );
        close(
            cov_trace(3, 3, &spec).unwrap(),
            36.0 * sd * m2 * m2 / (4.0 * alpha + 1.0),
            1e-12,
        );
    }

    #[test]
    fn odd_orders_are_silent_below_the_critical_rate() {
        let ms = MomentSequence::new(0.5, vec![1.0; 7]).unwrap();
        let spec = FluctuationSpec::new(
            ms,
            0.3,
            CovKernel::Perturbative { sigma_z_sq: 1.0 },
            5.0,
        )
        .unwrap();
        assert_eq!(cov_trace(1, 1, &spec).unwrap(), 0.0);
        assert_eq!(cov_trace(3, 3, &spec).unwrap(), 0.0);
        assert!(cov_trace(2, 2, &spec).unwrap() > 0.0);
    }

    #[test]
    fn symmetry_in_the_two_orders() {
        let spec = hermite_spec(1.3, 12);
        for (k, l) in [(2usize, 4usize), (2, 6), (4, 6), (1, 3), (3, 5), (2, 3)] {
            close(
                cov_trace(k, l, &spec).unwrap(),
                cov_trace(l, k, &spec).unwrap(),
                1e-11,
            );
        }
    }

    #[test]
    fn covariance_matrix_is_positive_semidefinite() {
        let spec = hermite_spec(0.7, 16);
        let n = 6;
        let mut d = vec![0.0; n * n];
        for k in 1..=n {
            for l in 1..=n {
                d[(k - 1) * n + (l - 1)] = cov_trace(k, l, &spec).unwrap();
            }
        }
        let eigs = crate::eigen::symmetric_eigenvalues_dense(&d, n, None).unwrap();
        for e in eigs {
            assert!(e >= -1e-8, "negative eigenvalue {e}");
        }
    }

    #[test]
    fn polynomial_variance_combinations() {
        let spec = hermite_spec(2.0, 12);
        // P = x^2 alone.
        close(
            sigma_poly(&[0.0, 0.7], &spec).unwrap(),
            0.49 * cov_trace(2, 2, &spec).unwrap(),
            1e-12,
        );
        // P = x + x^2 at epsilon = alpha: parity kills the cross term.
        let v = sigma_poly(&[1.0, 1.0], &spec).unwrap();
        close(
            v,
            cov_trace(1, 1, &spec).unwrap() + cov_trace(2, 2, &spec).unwrap(),
            1e-12,
        );
        assert!(v >= -1e-9);
        // Odd-only polynomial below the critical rate.
        let ms = MomentSequence::new(0.5, vec![1.0; 9]).unwrap();
        let sub = FluctuationSpec::new(
            ms,
            0.2,
            CovKernel::Perturbative { sigma_z_sq: 1.0 },
            3.0,
        )
        .unwrap();
        assert_eq!(sigma_poly(&[1.0, 0.0, 2.0], &sub).unwrap(), 0.0);
    }

    #[test]
    fn spec_validation_rules() {
        let ms = |v: Vec<f64>| MomentSequence::new(0.5, v).unwrap();
        // epsilon = 0 demands the moment-gap kernel.
        assert!(FluctuationSpec::new(
            ms(vec![1.0; 5]),
            0.0,
            CovKernel::Perturbative { sigma_z_sq: 1.0 },
            0.0
        )
        .is_err());
        // epsilon > 0 rejects the moment-gap kernel.
        assert!(
            FluctuationSpec::new(ms(vec![1.0; 5]), 0.3, CovKernel::MomentGap, 0.0).is_err()
        );
        // epsilon > alpha is out of range.
        assert!(FluctuationSpec::new(
            ms(vec![1.0; 5]),
            0.7,
            CovKernel::Perturbative { sigma_z_sq: 1.0 },
            0.0
        )
        .is_err());
        // Collapse violation: m_4 != m_2^2 with a positive rate.
        assert!(FluctuationSpec::new(
            ms(vec![1.0, 0.0, 1.0, 0.0, 3.0]),
            0.4,
            CovKernel::Perturbative { sigma_z_sq: 1.0 },
            0.0
        )
        .is_err());
        // The same moments are fine at epsilon = 0.
        assert!(FluctuationSpec::new(
            ms(vec![1.0, 0.0, 1.0, 0.0, 3.0]),
            0.0,
            CovKernel::MomentGap,
            0.0
        )
        .is_ok());
        // Negative diagonal variance.
        assert!(FluctuationSpec::new(
            ms(vec![1.0; 5]),
            0.5,
            CovKernel::Perturbative { sigma_z_sq: 1.0 },
            -1.0
        )
        .is_err());
    }

    #[test]
    fn table_kernel_is_usable_and_bounds_checked() {
        let mut table = vec![vec![0.0; 3]; 3];
        for k in 0..3 {
            for l in 0..3 {
                table[k][l] = (k * l) as f64 * 0.25;
            }
        }
        let ms = MomentSequence::new(0.5, vec![1.0; 9]).unwrap();
        let with_table = FluctuationSpec::new(
            ms.clone(),
            0.5,
            CovKernel::Table(table),
            0.0,
        )
        .unwrap();
        let with_formula = FluctuationSpec::new(
            ms,
            0.5,
            CovKernel::Perturbative { sigma_z_sq: 0.25 },
            0.0,
        )
        .unwrap();
        close(
            cov_trace(2, 2, &with_table).unwrap(),
            cov_trace(2, 2, &with_formula).unwrap(),
            1e-13,
        );
        // Orders beyond the table are a reported error, not a panic.
        assert!(cov_trace(4, 2, &with_table).is_err());
    }
}
