//! Closed-form limit statistics assembled from path sums.
//!
//! Everything in this module is a finite, exact sum over one of the path
//! families from [`crate::paths`], weighted by products of entry moments.
//! The integer combinatorics (which path contributes which monomial) is
//! exact; only the final combination with the real-valued moments runs in
//! floating point.

use crate::paths::{
    enumerate_gamma, enumerate_gamma_band, enumerate_gamma_two_flat, colored_stats, level_stats,
    ColorWord, LevelStats,
};
use crate::{Error, Result};

/// Moments of the scaled off-diagonal entry, `m_k = lim E[(b_n / n^alpha)^k]`,
/// together with the scaling exponent `alpha`.
///
/// Only the even entries drive the single-matrix formulas (crossing counts are
/// even), but the vector stores every order so that callers can hand the same
/// data to the multi-matrix table, which does consume odd orders.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    alpha: f64,
    values: Vec<f64>,
}

impl MomentSequence {
    /// Builds a moment sequence, checking `alpha > 0`, `m_0 = 1` and
    /// finiteness of every entry.
    pub fn new(alpha: f64, values: Vec<f64>) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "scaling exponent alpha must be positive and finite, got {alpha}"
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidParameter(
                "moment sequence must contain at least m_0".into(),
            ));
        }
        if (values[0] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "m_0 must equal 1, got {}",
                values[0]
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "moment sequence contains a non-finite entry {bad}"
            )));
        }
        Ok(Self { alpha, values })
    }

    /// The scaling exponent `alpha`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The stored moments `m_0..=m_K`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest order `K` held by the sequence.
    pub fn max_order(&self) -> usize {
        self.values.len() - 1
    }

    /// Errors unless the sequence covers orders up to `k`.
    fn require(&self, k: usize) -> Result<()> {
        if self.max_order() < k {
            Err(Error::MomentOutOfRange {
                needed: k,
                have: self.max_order(),
            })
        } else {
            Ok(())
        }
    }
}

/// Product of `m[count]` over the crossing counts of a path.
///
/// Flat counts are deliberately ignored: in every formula that uses this
/// helper the diagonal entries are centered, so flats contribute through
/// dedicated correction terms rather than through moment factors.
fn crossing_product(stats: &LevelStats, m: &[f64]) -> f64 {
    stats
        .crossings
        .values()
        .map(|&c| m[c as usize])
        .product()
}

/// `sum_j xi[l_j] * prod_{i != j} m[l_i]` over the crossing levels of a path.
fn xi_weighted_sum(stats: &LevelStats, m: &[f64], xi: &[f64]) -> f64 {
    let counts: Vec<u32> = stats.crossings.values().copied().collect();
    let mut total = 0.0;
    for j in 0..counts.len() {
        let mut term = xi[counts[j] as usize];
        for (i, &c) in counts.iter().enumerate() {
            if i != j {
                term *= m[c as usize];
            }
        }
        total += term;
    }
    total
}

/// `sum_i i * l_i` over the crossing levels of a path.
fn level_weighted_crossings(stats: &LevelStats) -> f64 {
    stats
        .crossings
        .iter()
        .map(|(&i, &c)| f64::from(i) * f64::from(c))
        .sum()
}

/// Limiting expected trace moment `L_k` of the scaled matrix.
///
/// `L_0 = 1`, odd orders vanish, and for even `k`
/// `L_k = (1 / (alpha k + 1)) * sum over flat-free paths of prod m[l_i]`.
pub fn limit_moment(k: usize, ms: &MomentSequence) -> Result<f64> {
    if k == 0 {
        return Ok(1.0);
    }
    if k % 2 == 1 {
        return Ok(0.0);
    }
    ms.require(k)?;
    let total: f64 = enumerate_gamma(k)
        .iter()
        .map(|g| crossing_product(&level_stats(g), ms.values()))
        .sum();
    Ok(total / (ms.alpha * k as f64 + 1.0))
}

/// The renormalized moments `M_k = (alpha k + 1) L_k` for even `k <= k_max`.
///
/// `M_k` is a polynomial in the entry moments with integer coefficients and no
/// dependence on `alpha`; it is computed here directly as the bare path sum.
/// Odd slots of the returned vector are zero.
pub fn forward_system(ms: &MomentSequence, k_max: usize) -> Result<Vec<f64>> {
    if k_max % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "k_max must be even, got {k_max}"
        )));
    }
    ms.require(k_max)?;
    let mut out = vec![0.0; k_max + 1];
    out[0] = 1.0;
    for k in (2..=k_max).step_by(2) {
        out[k] = enumerate_gamma(k)
            .iter()
            .map(|g| crossing_product(&level_stats(g), ms.values()))
            .sum();
    }
    Ok(out)
}

/// Recovers the even entry moments from `M_0..=M_{k_max}`.
///
/// The system is triangular: at each even order `k` exactly the two
/// alternating paths contribute the bare monomial `2 m_k`, and every other
/// path involves only lower even orders.  Peeling that leading term solves for
/// `m_k` unconditionally.  Odd slots of the input are ignored and the odd
/// slots of the output are zero.
pub fn invert_system(big_m: &[f64], k_max: usize) -> Result<Vec<f64>> {
    if k_max % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "k_max must be even, got {k_max}"
        )));
    }
    if big_m.len() <= k_max {
        return Err(Error::LengthMismatch(format!(
            "need M_0..=M_{k_max} but only {} entries were given",
            big_m.len()
        )));
    }
    if let Some(bad) = big_m.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "renormalized moments contain a non-finite entry {bad}"
        )));
    }
    if (big_m[0] - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "M_0 must equal 1, got {}",
            big_m[0]
        )));
    }
    let mut m = vec![0.0; k_max + 1];
    m[0] = 1.0;
    for k in (2..=k_max).step_by(2) {
        let mut residual = 0.0;
        for g in &enumerate_gamma(k) {
            let stats = level_stats(&g.clone());
            // The two alternating paths are exactly those with a crossing
            // count of k; they carry the unknown m_k and are peeled off.
            if stats.crossings.values().any(|&c| c as usize == k) {
                continue;
            }
            residual += crossing_product(&stats, &m);
        }
        m[k] = (big_m[k] - residual) / 2.0;
    }
    Ok(m)
}

/// Inputs for the first-order deviation of the expected trace moments:
/// the convergence rate `upsilon`, the entry-moment deviations
/// `xi_k = lim n^upsilon (E[(b_n/n^alpha)^k] - m_k)`, and the variance
/// `sigma_d_sq` of the (centered) diagonal entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationInput {
    pub upsilon: f64,
    pub xi: Vec<f64>,
    pub sigma_d_sq: f64,
}

impl DeviationInput {
    /// Checks the fields against the scaling exponent `alpha`.
    fn validate(&self, alpha: f64) -> Result<()> {
        let cap = 1.0_f64.min(2.0 * alpha);
        if !self.upsilon.is_finite() || self.upsilon <= 0.0 || self.upsilon > cap + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "upsilon must lie in (0, min(1, 2 alpha)] = (0, {cap}], got {}",
                self.upsilon
            )));
        }
        if self.xi.is_empty() || self.xi[0] != 0.0 {
            return Err(Error::InvalidParameter(
                "xi_0 must be present and equal to 0 (the order-zero moment never deviates)"
                    .into(),
            ));
        }
        if let Some(bad) = self.xi.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "xi contains a non-finite entry {bad}"
            )));
        }
        if !self.sigma_d_sq.is_finite() || self.sigma_d_sq < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "sigma_d_sq must be nonnegative and finite, got {}",
                self.sigma_d_sq
            )));
        }
        Ok(())
    }
}

/// First-order deviation `lim n^upsilon (E[tr_n X^k] - L_k)`.
///
/// Four regimes, selected by how `upsilon` compares with `1` and `2 alpha`:
///
/// * `upsilon < min(1, 2 alpha)` — only the entry-moment deviations `xi`
///   enter, through a product rule over the crossing levels;
/// * `upsilon = 2 alpha < 1` — the diagonal variance joins in through the
///   paths with exactly two flats at a common level;
/// * `upsilon = 1 < 2 alpha` — the finite-`n` trace normalization
///   contributes drift terms proportional to `L_k` and to the
///   level-weighted crossing sums;
/// * `upsilon = 1 = 2 alpha` — all three effects are present.
///
/// Returns `0` for `k = 0` and odd `k`.
pub fn first_order_deviation(k: usize, ms: &MomentSequence, dev: &DeviationInput) -> Result<f64> {
    dev.validate(ms.alpha)?;
    if k == 0 || k % 2 == 1 {
        return Ok(0.0);
    }
    ms.require(k)?;
    if dev.xi.len() <= k {
        return Err(Error::MomentOutOfRange {
            needed: k,
            have: dev.xi.len() - 1,
        });
    }
    let alpha = ms.alpha;
    let m = ms.values();
    let kf = k as f64;

    let gamma: Vec<LevelStats> = enumerate_gamma(k).iter().map(level_stats).collect();
    let xi_sum: f64 = gamma.iter().map(|s| xi_weighted_sum(s, m, &dev.xi)).sum();
    let two_flat_sum = || -> f64 {
        enumerate_gamma_two_flat(k)
            .iter()
            .map(|g| crossing_product(&level_stats(g), m))
            .sum()
    };

    let eq = |x: f64, y: f64| (x - y).abs() < 1e-12;
    let at_one = eq(dev.upsilon, 1.0);
    let at_two_alpha = eq(dev.upsilon, 2.0 * alpha);

    if at_one && at_two_alpha {
        // upsilon = 1 = 2 alpha
        let l_k = limit_moment(k, ms)?;
        let drift: f64 = gamma
            .iter()
            .map(|s| level_weighted_crossings(s) * crossing_product(s, m))
            .sum();
        Ok((kf + 2.0) / 4.0 * l_k
            + drift / kf
            + 2.0 / kf * (dev.sigma_d_sq * two_flat_sum() + xi_sum))
    } else if at_one {
        // upsilon = 1 < 2 alpha
        let l_k = limit_moment(k, ms)?;
        let drift: f64 = gamma
            .iter()
            .map(|s| level_weighted_crossings(s) * crossing_product(s, m))
            .sum();
        Ok((alpha * kf + 1.0) / 2.0 * l_k + drift / kf + xi_sum / (alpha * kf))
    } else if at_two_alpha {
        // upsilon = 2 alpha < 1
        Ok((dev.sigma_d_sq * two_flat_sum() + xi_sum) / (alpha * kf - dev.upsilon + 1.0))
    } else {
        // upsilon < min(1, 2 alpha)
        Ok(xi_sum / (alpha * kf - dev.upsilon + 1.0))
    }
}

/// Scaling exponent and entry moments for one diagonal of a band matrix:
/// `m_k = lim E[(b_{v,n} / n^alpha_v)^k]` for the entries at offset `v`
/// from the main diagonal (`v = 0` is the main diagonal itself).
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalMoments {
    pub alpha: f64,
    pub m: Vec<f64>,
}

/// Limiting trace moment of a band matrix with half-width `w`, scaled by the
/// largest per-diagonal exponent `alpha = max_v alpha_v`.
///
/// `per_diagonal[v]` describes the entries at offset `v` for `v = 0..=w`.
/// Only diagonals whose exponent attains the maximum survive the scaling:
/// a step on a sub-maximal diagonal annihilates its path (its moment factor
/// is `0` for any positive count, `1` for count zero).  Each surviving path
/// contributes the product of `m_{v, count}` over its banded step counts.
///
/// With `w = 1` and a sub-maximal main diagonal this reduces exactly to
/// [`limit_moment`]: flat-bearing paths drop out and the unit-step pair
/// counts are the crossing counts.
pub fn band_limit_moment(k: usize, w: usize, per_diagonal: &[DiagonalMoments]) -> Result<f64> {
    if w == 0 {
        return Err(Error::InvalidParameter(
            "band half-width w must be at least 1".into(),
        ));
    }
    if per_diagonal.len() != w + 1 {
        return Err(Error::LengthMismatch(format!(
            "expected {} diagonal specs for half-width {w}, got {}",
            w + 1,
            per_diagonal.len()
        )));
    }
    for (v, d) in per_diagonal.iter().enumerate() {
        if !d.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "diagonal {v} has non-finite exponent {}",
                d.alpha
            )));
        }
        if d.m.is_empty() || (d.m[0] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "diagonal {v} must have moments starting with m_0 = 1"
            )));
        }
        if let Some(bad) = d.m.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "diagonal {v} has a non-finite moment {bad}"
            )));
        }
    }
    let alpha = per_diagonal
        .iter()
        .map(|d| d.alpha)
        .fold(f64::NEG_INFINITY, f64::max);
    if alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "the largest diagonal exponent must be positive, got {alpha}"
        )));
    }
    let maximal: Vec<bool> = per_diagonal
        .iter()
        .map(|d| d.alpha >= alpha - 1e-12)
        .collect();
    for (v, d) in per_diagonal.iter().enumerate() {
        if maximal[v] && d.m.len() <= k {
            return Err(Error::MomentOutOfRange {
                needed: k,
                have: d.m.len() - 1,
            });
        }
    }
    if k == 0 {
        return Ok(1.0);
    }

    let mut total = 0.0;
    for g in &enumerate_gamma_band(k, w)? {
        let stats = level_stats(g);
        let mut product = 1.0;
        for (&(i, j), &count) in &stats.banded {
            let v = (j - i) as usize;
            if maximal[v] {
                product *= per_diagonal[v].m[count as usize];
            } else {
                product = 0.0;
                break;
            }
        }
        total += product;
    }
    Ok(total / (alpha * k as f64 + 1.0))
}

/// Per-color scaling exponents and entry moments for products of several
/// independent scaled matrices.  Odd orders matter here: the joint moments
/// depend on them even though each single-matrix limit does not.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiMomentTable {
    alphas: Vec<f64>,
    moments: Vec<Vec<f64>>,
}

impl MultiMomentTable {
    /// Builds a table from per-color `(alpha_u, m_u)` pairs, colors numbered
    /// `1..=r` in order.
    pub fn new(colors: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        if colors.is_empty() {
            return Err(Error::InvalidParameter(
                "the color palette must not be empty".into(),
            ));
        }
        for (u, (alpha, m)) in colors.iter().enumerate() {
            if !alpha.is_finite() || *alpha <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "color {}: exponent must be positive and finite, got {alpha}",
                    u + 1
                )));
            }
            if m.is_empty() || (m[0] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "color {}: moments must start with m_0 = 1",
                    u + 1
                )));
            }
            if let Some(bad) = m.iter().find(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "color {}: non-finite moment {bad}",
                    u + 1
                )));
            }
        }
        let (alphas, moments) = colors.into_iter().unzip();
        Ok(Self { alphas, moments })
    }

    /// Number of colors in the palette.
    pub fn palette(&self) -> usize {
        self.alphas.len()
    }

    /// Exponent of 1-based color `u`.
    pub fn alpha(&self, u: usize) -> f64 {
        self.alphas[u - 1]
    }

    /// Moments of 1-based color `u`.
    pub fn moments(&self, u: usize) -> &[f64] {
        &self.moments[u - 1]
    }
}

/// Limiting trace moment of the word product `X_{i_1} X_{i_2} ... X_{i_k}`.
///
/// Sums over the flat-free paths of length `k`, coloring step `u` with the
/// word letter `i_u` and weighting each path by the product of per-color
/// crossing moments.  The normalizer is one plus the sum of the letters'
/// exponents.  Odd-length words give `0`.
pub fn mixed_moment(word: &ColorWord, table: &MultiMomentTable) -> Result<f64> {
    let k = word.len();
    if k == 0 {
        return Err(Error::InvalidParameter("the color word must be nonempty".into()));
    }
    let mut occurrences = vec![0usize; table.palette() + 1];
    for &u in word.colors() {
        if u == 0 || u > table.palette() {
            return Err(Error::InvalidParameter(format!(
                "word uses color {u} but the palette has colors 1..={}",
                table.palette()
            )));
        }
        occurrences[u] += 1;
    }
    for u in 1..=table.palette() {
        if table.moments(u).len() <= occurrences[u] {
            return Err(Error::MomentOutOfRange {
                needed: occurrences[u],
                have: table.moments(u).len() - 1,
            });
        }
    }
    if k % 2 == 1 {
        return Ok(0.0);
    }

    let mut total = 0.0;
    for g in &enumerate_gamma(k) {
        let stats = colored_stats(g, word)?;
        let mut product = 1.0;
        for (&(_, u), &count) in &stats.colored_crossings {
            product *= table.moments(u)[count as usize];
        }
        total += product;
    }
    let exponent_sum: f64 = word.colors().iter().map(|&u| table.alpha(u)).sum();
    Ok(total / (exponent_sum + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::gamma_count;
    use std::collections::BTreeMap;

    fn ones(alpha: f64, up_to: usize) -> MomentSequence {
        MomentSequence::new(alpha, vec![1.0; up_to + 1]).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    /// Groups the order-k path sum by the multiset of crossing counts, giving
    /// the integer coefficient of each monomial in the entry moments.
    fn monomial_coefficients(k: usize) -> BTreeMap<Vec<usize>, usize> {
        let mut out = BTreeMap::new();
        for g in &enumerate_gamma(k) {
            let mut profile: Vec<usize> = level_stats(g)
                .crossings
                .values()
                .map(|&c| c as usize)
                .collect();
            profile.sort_unstable_by(|a, b| b.cmp(a));
            *out.entry(profile).or_insert(0) += 1;
        }
        out
    }

    #[test]
    fn semicircle_moments_are_catalan_numbers() {
        let ms = ones(0.5, 8);
        assert_eq!(limit_moment(0, &ms).unwrap(), 1.0);
        assert_eq!(limit_moment(2, &ms).unwrap(), 1.0);
        assert_eq!(limit_moment(4, &ms).unwrap(), 2.0);
        assert_eq!(limit_moment(6, &ms).unwrap(), 5.0);
        assert_eq!(limit_moment(8, &ms).unwrap(), 14.0);
    }

    #[test]
    fn odd_limit_moments_vanish() {
        let ms = ones(0.7, 9);
        for k in [1, 3, 5, 7, 9] {
            assert_eq!(limit_moment(k, &ms).unwrap(), 0.0);
        }
    }

    #[test]
    fn order_four_closed_form() {
        let (m2, m4) = (1.7, 0.4);
        for alpha in [0.3, 0.5, 1.0, 2.5] {
            let ms = MomentSequence::new(alpha, vec![1.0, 0.0, m2, 0.0, m4]).unwrap();
            close(
                limit_moment(4, &ms).unwrap(),
                (2.0 * m4 + 4.0 * m2 * m2) / (4.0 * alpha + 1.0),
                1e-14,
            );
        }
    }

    #[test]
    fn renormalized_moments_drop_alpha() {
        let values = vec![1.0, 0.0, 1.3, 0.0, 0.8, 0.0, 2.1, 0.0, 0.5];
        let a = MomentSequence::new(0.4, values.clone()).unwrap();
        let b = MomentSequence::new(1.9, values).unwrap();
        assert_eq!(forward_system(&a, 8).unwrap(), forward_system(&b, 8).unwrap());
    }

    #[test]
    fn forward_system_coefficients_match_hand_expansion() {
        // M_2 = 2 m_2 and M_4 = 2 m_4 + 4 m_2^2.
        assert_eq!(
            monomial_coefficients(2),
            BTreeMap::from([(vec![2], 2)])
        );
        assert_eq!(
            monomial_coefficients(4),
            BTreeMap::from([(vec![4], 2), (vec![2, 2], 4)])
        );
        // M_6 = 2 m_6 + 12 m_4 m_2 + 6 m_2^3.
        assert_eq!(
            monomial_coefficients(6),
            BTreeMap::from([(vec![6], 2), (vec![4, 2], 12), (vec![2, 2, 2], 6)])
        );
        // M_8 = 2 m_8 + 16 m_6 m_2 + 12 m_4^2 + 32 m_4 m_2^2 + 8 m_2^4.
        assert_eq!(
            monomial_coefficients(8),
            BTreeMap::from([
                (vec![8], 2),
                (vec![6, 2], 16),
                (vec![4, 4], 12),
                (vec![4, 2, 2], 32),
                (vec![2, 2, 2, 2], 8),
            ])
        );
    }

    #[test]
    fn forward_system_numeric_probe() {
        let (m2, m4, m6, m8) = (0.9, 1.6, 0.3, 2.2);
        let ms =
            MomentSequence::new(0.8, vec![1.0, 0.0, m2, 0.0, m4, 0.0, m6, 0.0, m8]).unwrap();
        let big = forward_system(&ms, 8).unwrap();
        close(big[2], 2.0 * m2, 1e-13);
        close(big[4], 2.0 * m4 + 4.0 * m2 * m2, 1e-13);
        close(big[6], 2.0 * m6 + 12.0 * m4 * m2 + 6.0 * m2.powi(3), 1e-13);
        close(
            big[8],
            2.0 * m8 + 16.0 * m6 * m2 + 12.0 * m4 * m4 + 32.0 * m4 * m2 * m2
                + 8.0 * m2.powi(4),
            1e-12,
        );
        for k in [1, 3, 5, 7] {
            assert_eq!(big[k], 0.0);
        }
    }

    #[test]
    fn inversion_peels_the_leading_coefficient() {
        // M = (1, _, 2, _, 6): m_2 = 1, m_4 = (6 - 4)/2 = 1.
        let m = invert_system(&[1.0, 0.0, 2.0, 0.0, 6.0], 4).unwrap();
        assert_eq!(m[2], 1.0);
        assert_eq!(m[4], 1.0);
    }

    #[test]
    fn inversion_round_trips() {
        let values = vec![1.0, 0.0, 1.1, 0.0, 0.2, 0.0, -0.7, 0.0, 1.3, 0.0, 0.6];
        let ms = MomentSequence::new(0.6, values.clone()).unwrap();
        let recovered = invert_system(&forward_system(&ms, 10).unwrap(), 10).unwrap();
        for k in (2..=10).step_by(2) {
            close(recovered[k], values[k], 1e-12);
        }
    }

    #[test]
    fn deviation_vanishes_for_odd_and_zero_orders() {
        let ms = ones(0.5, 8);
        let dev = DeviationInput {
            upsilon: 0.3,
            xi: vec![0.0; 9],
            sigma_d_sq: 1.0,
        };
        assert_eq!(first_order_deviation(0, &ms, &dev).unwrap(), 0.0);
        assert_eq!(first_order_deviation(3, &ms, &dev).unwrap(), 0.0);
    }

    #[test]
    fn deviation_slow_rate_closed_forms() {
        // upsilon < min(1, 2 alpha): only xi enters.  Both order-2 paths have
        // the single crossing count 2, so the sum is 2 xi_2; at order 4 the
        // two alternating paths give 2 xi_4 and the four two-level paths give
        // 8 xi_2 m_2.
        let m2 = 1.4;
        let (xi2, xi4) = (0.7, -0.3);
        let alpha = 0.8;
        let upsilon = 0.5;
        let ms = MomentSequence::new(alpha, vec![1.0, 0.0, m2, 0.0, 0.9]).unwrap();
        let dev = DeviationInput {
            upsilon,
            xi: vec![0.0, 0.0, xi2, 0.0, xi4],
            sigma_d_sq: 3.0, // must be inert in this regime
        };
        close(
            first_order_deviation(2, &ms, &dev).unwrap(),
            2.0 * xi2 / (2.0 * alpha - upsilon + 1.0),
            1e-14,
        );
        close(
            first_order_deviation(4, &ms, &dev).unwrap(),
            (2.0 * xi4 + 8.0 * xi2 * m2) / (4.0 * alpha - upsilon + 1.0),
            1e-14,
        );
    }

    #[test]
    fn deviation_diagonal_regime_adds_two_flat_paths() {
        // upsilon = 2 alpha < 1: the two-flat path sums are 1 (order 2,
        // the all-flat path) and 8 m_2 (order 4).
        let alpha = 0.3;
        let m2 = 0.6;
        let (xi2, xi4) = (0.2, 1.1);
        let sd = 1.7;
        let ms = MomentSequence::new(alpha, vec![1.0, 0.0, m2, 0.0, 0.4]).unwrap();
        let dev = DeviationInput {
            upsilon: 2.0 * alpha,
            xi: vec![0.0, 0.0, xi2, 0.0, xi4],
            sigma_d_sq: sd,
        };
        close(
            first_order_deviation(2, &ms, &dev).unwrap(),
            (sd + 2.0 * xi2) / (2.0 * alpha - 2.0 * alpha + 1.0),
            1e-14,
        );
        close(
            first_order_deviation(4, &ms, &dev).unwrap(),
            (sd * 8.0 * m2 + 2.0 * xi4 + 8.0 * xi2 * m2) / (4.0 * alpha - 2.0 * alpha + 1.0),
            1e-14,
        );
    }

    #[test]
    fn deviation_trace_drift_regime() {
        // upsilon = 1 < 2 alpha with xi = 0 and unit moments: the value is
        // (alpha k + 1)/2 * L_k + (1/k) * sum_gamma (sum_i i l_i), and the
        // level-weighted sum over all flat-free paths is -k 2^(k-1).
        let alpha = 1.0;
        let ms = ones(alpha, 8);
        let dev = DeviationInput {
            upsilon: 1.0,
            xi: vec![0.0; 9],
            sigma_d_sq: 5.0, // inert: no two-flat term in this regime
        };
        for k in [2usize, 4, 6, 8] {
            let catalan = gamma_count(k).to_string().parse::<f64>().unwrap();
            let expected = catalan / 2.0 - 2f64.powi(k as i32 - 1);
            close(first_order_deviation(k, &ms, &dev).unwrap(), expected, 1e-12);
        }
    }

    #[test]
    fn deviation_critical_regime_hermite_style_inputs() {
        // upsilon = 1 = 2 alpha, m = 1, xi_k = k(k-2)/(4 beta), sigma_d_sq =
        // 2/beta: the deviation collapses to (2/beta - 1)(2^(k-1) - C(k,k/2)/2).
        for beta in [0.5, 1.0, 2.0, 4.0] {
            let ms = ones(0.5, 8);
            let xi: Vec<f64> = (0..=8)
                .map(|k| (k * k) as f64 / (4.0 * beta) - 2.0 * k as f64 / (4.0 * beta))
                .collect();
            let dev = DeviationInput {
                upsilon: 1.0,
                xi,
                sigma_d_sq: 2.0 / beta,
            };
            for k in [2usize, 4, 6, 8] {
                let choose = gamma_count(k).to_string().parse::<f64>().unwrap();
                let expected =
                    (2.0 / beta - 1.0) * (2f64.powi(k as i32 - 1) - choose / 2.0);
                close(first_order_deviation(k, &ms, &dev).unwrap(), expected, 1e-11);
            }
        }
    }

    #[test]
    fn deviation_critical_regime_is_drift_plus_diagonal_term() {
        // At alpha = 1/2 the critical case must equal the trace-drift case
        // plus (2/k) sigma_d_sq * (two-flat path sum).
        let ms = MomentSequence::new(0.5, vec![1.0, 0.0, 0.8, 0.0, 1.3]).unwrap();
        let xi = vec![0.0, 0.0, 0.4, 0.0, -0.9];
        let sd = 2.3;
        let with_sd = DeviationInput {
            upsilon: 1.0,
            xi: xi.clone(),
            sigma_d_sq: sd,
        };
        let without_sd = DeviationInput {
            upsilon: 1.0,
            xi,
            sigma_d_sq: 0.0,
        };
        let k = 4;
        let two_flat: f64 = enumerate_gamma_two_flat(k)
            .iter()
            .map(|g| crossing_product(&level_stats(g), ms.values()))
            .sum();
        let diff = first_order_deviation(k, &ms, &with_sd).unwrap()
            - first_order_deviation(k, &ms, &without_sd).unwrap();
        close(diff, 2.0 / k as f64 * sd * two_flat, 1e-12);
    }

    #[test]
    fn deviation_rejects_out_of_range_rate() {
        let ms = ones(0.3, 4);
        let dev = DeviationInput {
            upsilon: 0.9, // exceeds 2 alpha = 0.6
            xi: vec![0.0; 5],
            sigma_d_sq: 0.0,
        };
        assert!(first_order_deviation(2, &ms, &dev).is_err());
    }

    #[test]
    fn deviation_requires_zero_order_anchor() {
        let ms = ones(0.5, 4);
        let dev = DeviationInput {
            upsilon: 0.5,
            xi: vec![0.1, 0.0, 0.0, 0.0, 0.0],
            sigma_d_sq: 0.0,
        };
        assert!(first_order_deviation(2, &ms, &dev).is_err());
    }

    #[test]
    fn band_width_one_matches_unit_step_formula() {
        let values = vec![1.0, 0.0, 1.2, 0.0, 0.7, 0.0, 2.4, 0.0, 0.1];
        let alpha = 0.9;
        let ms = MomentSequence::new(alpha, values.clone()).unwrap();
        let diag = DiagonalMoments {
            alpha: 0.2,
            m: vec![1.0],
        };
        let off = DiagonalMoments { alpha, m: values };
        for k in 0..=8 {
            assert_eq!(
                band_limit_moment(k, 1, &[diag.clone(), off.clone()]).unwrap(),
                limit_moment(k, &ms).unwrap(),
            );
        }
    }

    #[test]
    fn band_width_two_order_two_closed_form() {
        // Both step diagonals maximal, main diagonal sub-maximal: the order-2
        // paths without flats are the two unit-step hats/valleys and the two
        // double-step ones, giving (2 m_{1,2} + 2 m_{2,2}) / (2 alpha + 1).
        let alpha = 0.7;
        let (m12, m22) = (1.5, 0.4);
        let spec = [
            DiagonalMoments {
                alpha: 0.1,
                m: vec![1.0],
            },
            DiagonalMoments {
                alpha,
                m: vec![1.0, 0.0, m12],
            },
            DiagonalMoments {
                alpha,
                m: vec![1.0, 0.0, m22],
            },
        ];
        close(
            band_limit_moment(2, 2, &spec).unwrap(),
            (2.0 * m12 + 2.0 * m22) / (2.0 * alpha + 1.0),
            1e-14,
        );
    }

    #[test]
    fn band_sub_maximal_steps_leave_only_flats() {
        // Main diagonal maximal, both step diagonals sub-maximal: only the
        // all-flat path survives, so L_k = m_{0,k} / (alpha k + 1).
        let alpha = 1.1;
        let m0 = vec![1.0, 0.3, 0.9, -0.2, 1.8];
        let spec = [
            DiagonalMoments {
                alpha,
                m: m0.clone(),
            },
            DiagonalMoments {
                alpha: 0.4,
                m: vec![1.0],
            },
            DiagonalMoments {
                alpha: 0.2,
                m: vec![1.0],
            },
        ];
        for k in 1..=4 {
            close(
                band_limit_moment(k, 2, &spec).unwrap(),
                m0[k] / (alpha * k as f64 + 1.0),
                1e-14,
            );
        }
    }

    #[test]
    fn band_rejects_malformed_specs() {
        let good = DiagonalMoments {
            alpha: 1.0,
            m: vec![1.0, 0.0, 1.0],
        };
        assert!(band_limit_moment(2, 0, &[good.clone()]).is_err());
        assert!(band_limit_moment(2, 2, &[good.clone(), good.clone()]).is_err());
        assert!(band_limit_moment(2, 1, std::slice::from_ref(&good)).is_err());
        let negative = DiagonalMoments {
            alpha: -0.5,
            m: vec![1.0, 0.0, 1.0],
        };
        assert!(band_limit_moment(2, 1, &[negative.clone(), negative]).is_err());
    }

    #[test]
    fn single_color_words_reduce_to_limit_moments() {
        let values = vec![1.0, 0.6, 1.2, -0.1, 0.7];
        let alpha = 0.8;
        let table = MultiMomentTable::new(vec![(alpha, values.clone())]).unwrap();
        let ms = MomentSequence::new(alpha, values).unwrap();
        for k in [2usize, 4] {
            let word = ColorWord::new(vec![1; k]).unwrap();
            close(
                mixed_moment(&word, &table).unwrap(),
                limit_moment(k, &ms).unwrap(),
                1e-14,
            );
        }
    }

    #[test]
    fn two_color_worked_examples() {
        // psi-probe values chosen with nonzero odd moments so every term of
        // the expansions is exercised.
        let (a1, a2, a3, a4) = (0.31, 1.21, -0.44, 2.05);
        let (b1, b2) = (-0.62, 0.83);
        let (alpha_a, alpha_b) = (0.6, 1.3);
        let table = MultiMomentTable::new(vec![
            (alpha_a, vec![1.0, a1, a2, a3, a4]),
            (alpha_b, vec![1.0, b1, b2]),
        ])
        .unwrap();
        let phi = |letters: &[usize]| {
            let word = ColorWord::new(letters.to_vec()).unwrap();
            let scale: f64 = letters
                .iter()
                .map(|&u| if u == 1 { alpha_a } else { alpha_b })
                .sum::<f64>()
                + 1.0;
            scale * mixed_moment(&word, &table).unwrap()
        };
        close(phi(&[1, 1]), 2.0 * a2, 1e-13);
        close(phi(&[1, 2]), 2.0 * a1 * b1, 1e-13);
        close(phi(&[1, 1, 1, 1]), 2.0 * a4 + 4.0 * a2 * a2, 1e-13);
        close(
            phi(&[1, 2, 1, 2]),
            2.0 * a2 * b2 + 4.0 * a1 * a1 * b1 * b1,
            1e-13,
        );
        close(
            phi(&[1, 1, 2, 2]),
            4.0 * a2 * b2 + 2.0 * a1 * a1 * b1 * b1,
            1e-13,
        );
        close(
            phi(&[1, 1, 1, 2]),
            2.0 * a3 * b1 + 4.0 * a2 * a1 * b1,
            1e-13,
        );
    }

    #[test]
    fn odd_words_vanish_and_invalid_colors_are_rejected() {
        let table = MultiMomentTable::new(vec![(0.5, vec![1.0, 0.0, 1.0, 0.0])]).unwrap();
        let odd = ColorWord::new(vec![1, 1, 1]).unwrap();
        assert_eq!(mixed_moment(&odd, &table).unwrap(), 0.0);
        let stray = ColorWord::new(vec![1, 2]).unwrap();
        assert!(mixed_moment(&stray, &table).is_err());
    }

    #[test]
    fn moment_sequence_validation() {
        assert!(MomentSequence::new(0.5, vec![]).is_err());
        assert!(MomentSequence::new(0.5, vec![0.9]).is_err());
        assert!(MomentSequence::new(-1.0, vec![1.0]).is_err());
        assert!(MomentSequence::new(0.5, vec![1.0, f64::NAN]).is_err());
        let short = MomentSequence::new(0.5, vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            limit_moment(4, &short),
            Err(Error::MomentOutOfRange { needed: 4, have: 1 })
        ));
    }
}
