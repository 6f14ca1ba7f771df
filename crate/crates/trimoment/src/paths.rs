//! Closed lattice paths with bounded steps, and their level statistics.
//!
//! A path is a finite sequence of integer levels `j_1, ..., j_{k+1}`; the
//! `k` steps are the consecutive differences.  Everything downstream is a
//! weighted sum over one of a handful of structured families:
//!
//! * [`enumerate_gamma`] — ±1 steps, closed, maximum level exactly 0
//!   (the flat-free family behind the limit moments);
//! * [`enumerate_gamma_minus`] — steps in {-1, 0, +1}, closed, maximum 0,
//!   at least one flat step;
//! * [`enumerate_gamma_two_flat`] — the subfamily with exactly two flat
//!   steps, both at the same level (drives diagonal-variance corrections);
//! * [`enumerate_gamma_pairs`] — pairs of paths sharing a level with joint
//!   maximum 0 (drives trace-power covariances);
//! * [`enumerate_gamma_band`] — steps bounded by a band width `w`, closed,
//!   maximum 0 (band matrices).
//!
//! All enumerators return the full family sorted lexicographically by level
//! sequence, so output order is deterministic and reproducible.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed lattice path, stored as its level sequence.
///
/// Invariant: non-empty and closed (first level == last level).  The step
/// bound is whatever the originating family imposed; `Path` itself only
/// checks closure.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path {
    levels: Vec<i32>,
}

impl Path {
    /// Builds a path from its level sequence, validating closure.
    pub fn new(levels: Vec<i32>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidParameter("path must be non-empty".into()));
        }
        if levels.first() != levels.last() {
            return Err(Error::InvalidParameter(format!(
                "path must be closed: starts at {} but ends at {}",
                levels.first().unwrap(),
                levels.last().unwrap()
            )));
        }
        Ok(Self { levels })
    }

    /// The level sequence `j_1, ..., j_{k+1}`.
    #[must_use]
    pub fn levels(&self) -> &[i32] {
        &self.levels
    }

    /// Number of steps `k` (one less than the number of levels).
    #[must_use]
    pub fn len(&self) -> usize {
        self.levels.len() - 1
    }

    /// True for the trivial zero-step path.
    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest level visited.
    #[must_use]
    pub fn max_level(&self) -> i32 {
        *self.levels.iter().max().unwrap()
    }

    /// Smallest level visited.
    #[must_use]
    pub fn min_level(&self) -> i32 {
        *self.levels.iter().min().unwrap()
    }

    /// Largest |step|, 0 for the trivial path.
    #[must_use]
    pub fn step_bound(&self) -> i32 {
        self.steps().map(|(a, b)| (b - a).abs()).max().unwrap_or(0)
    }

    /// Number of flat steps (steps of size 0).
    #[must_use]
    pub fn flat_count(&self) -> usize {
        self.steps().filter(|(a, b)| a == b).count()
    }

    /// True when the path has no flat step.
    #[must_use]
    pub fn is_flat_free(&self) -> bool {
        self.flat_count() == 0
    }

    /// The same path translated by `p` levels.
    #[must_use]
    pub fn shift(&self, p: i32) -> Self {
        Self {
            levels: self.levels.iter().map(|j| j + p).collect(),
        }
    }

    /// Iterator over steps as `(from, to)` level pairs.
    pub fn steps(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        self.levels.windows(2).map(|w| (w[0], w[1]))
    }

    /// If the path has exactly one flat step, the level it sits at.
    #[must_use]
    pub fn single_flat_level(&self) -> Option<i32> {
        let mut found = None;
        for (a, b) in self.steps() {
            if a == b {
                if found.is_some() {
                    return None;
                }
                found = Some(a);
            }
        }
        found
    }
}

/// Per-level step statistics of a path.
///
/// * `crossings[i]` — number of steps that cross the horizontal line
///   `y = i + 1/2` (for unit-step paths this is the number of steps between
///   levels `i` and `i+1`);
/// * `flats[i]` — number of flat steps at level `i`;
/// * `banded[(i, j)]` for `i <= j` — number of steps whose endpoint set is
///   exactly `{i, j}` (so `banded[(i, i+1)] == crossings[i]` for unit-step
///   paths and `banded[(i, i)] == flats[i]`);
/// * `colored_crossings[(i, u)]` / `colored_flats[(i, u)]` — as above but
///   restricted to steps carrying color `u`; populated by [`colored_stats`]
///   and left empty by [`level_stats`].
///
/// Maps only hold nonzero entries; absent keys mean a count of zero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LevelStats {
    pub crossings: BTreeMap<i32, u32>,
    pub flats: BTreeMap<i32, u32>,
    pub banded: BTreeMap<(i32, i32), u32>,
    pub colored_crossings: BTreeMap<(i32, usize), u32>,
    pub colored_flats: BTreeMap<(i32, usize), u32>,
}

impl LevelStats {
    /// Crossing count at level `i` (0 when absent).
    #[must_use]
    pub fn crossing(&self, i: i32) -> u32 {
        self.crossings.get(&i).copied().unwrap_or(0)
    }

    /// Flat count at level `i` (0 when absent).
    #[must_use]
    pub fn flat(&self, i: i32) -> u32 {
        self.flats.get(&i).copied().unwrap_or(0)
    }

    /// Banded count for the unordered level pair `{i, j}` (0 when absent).
    #[must_use]
    pub fn banded_count(&self, i: i32, j: i32) -> u32 {
        let key = (i.min(j), i.max(j));
        self.banded.get(&key).copied().unwrap_or(0)
    }
}

/// A word of colors, one per step, for multi-matrix traces.
///
/// Colors are 1-based indices into a palette of matrices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColorWord {
    colors: Vec<usize>,
}

impl ColorWord {
    /// Builds a word, validating that every color is >= 1.
    pub fn new(colors: Vec<usize>) -> Result<Self> {
        if colors.iter().any(|&c| c == 0) {
            return Err(Error::InvalidParameter(
                "colors are 1-based; 0 is not a valid color".into(),
            ));
        }
        Ok(Self { colors })
    }

    #[must_use]
    pub fn colors(&self) -> &[usize] {
        &self.colors
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.colors.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    /// Largest color index appearing in the word.
    #[must_use]
    pub fn max_color(&self) -> usize {
        self.colors.iter().copied().max().unwrap_or(0)
    }
}

/// Computes crossing, flat and banded counts for a path.
///
/// A step from `a` to `b` crosses every line `y = i + 1/2` with
/// `min(a,b) <= i < max(a,b)`; a flat step at level `i` contributes to
/// `flats[i]`.  The banded map counts steps by their unordered endpoint
/// pair, which for unit steps carries the same information as
/// crossings+flats.  Colored maps are left empty; see [`colored_stats`].
#[must_use]
pub fn level_stats(path: &Path) -> LevelStats {
    let mut stats = LevelStats::default();
    for (a, b) in path.steps() {
        let (lo, hi) = (a.min(b), a.max(b));
        if lo == hi {
            *stats.flats.entry(lo).or_insert(0) += 1;
        } else {
            for i in lo..hi {
                *stats.crossings.entry(i).or_insert(0) += 1;
            }
        }
        *stats.banded.entry((lo, hi)).or_insert(0) += 1;
    }
    stats
}

/// Computes level statistics split by step color.
///
/// The word must have exactly one color per step.  The returned stats also
/// carry the color-blind counts, so this is a strict refinement of
/// [`level_stats`].
pub fn colored_stats(path: &Path, word: &ColorWord) -> Result<LevelStats> {
    if word.len() != path.len() {
        return Err(Error::LengthMismatch(format!(
            "word has {} colors but path has {} steps",
            word.len(),
            path.len()
        )));
    }
    let mut stats = level_stats(path);
    for ((a, b), &color) in path.steps().zip(word.colors()) {
        let (lo, hi) = (a.min(b), a.max(b));
        if lo == hi {
            *stats.colored_flats.entry((lo, color)).or_insert(0) += 1;
        } else {
            for i in lo..hi {
                *stats.colored_crossings.entry((i, color)).or_insert(0) += 1;
            }
        }
    }
    Ok(stats)
}

/// Ceiling of `a / b` for positive `b` and non-negative `a`.
fn ceil_div(a: i32, b: i32) -> i32 {
    debug_assert!(a >= 0 && b > 0);
    (a + b - 1) / b
}

/// Enumerates all closed paths of length `k` with steps bounded by `w`
/// (flats permitted iff `allow_flat`) whose maximum level is exactly 0.
///
/// Levels are confined structurally: the search starts no lower than the
/// deepest start that can still touch 0 and close, and prunes any prefix
/// that can no longer close up or reach 0 in the remaining steps.
fn enumerate_closed_max0(k: usize, w: i32, allow_flat: bool) -> Vec<Path> {
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    let k = k as i32;
    // To touch 0 and return to the start, a start at -s needs at least
    // 2*ceil(s/w) steps.
    let deepest = -w * (k / 2);
    let mut levels = Vec::with_capacity(k as usize + 1);
    for start in deepest..=0 {
        levels.clear();
        levels.push(start);
        dfs_max0(&mut levels, start, k, w, allow_flat, start == 0, &mut out);
    }
    out.sort_unstable_by(|a, b| a.levels.cmp(&b.levels));
    out
}

fn dfs_max0(
    levels: &mut Vec<i32>,
    start: i32,
    k: i32,
    w: i32,
    allow_flat: bool,
    touched_zero: bool,
    out: &mut Vec<Path>,
) {
    let cur = *levels.last().unwrap();
    let remaining = k - (levels.len() as i32 - 1);
    if remaining == 0 {
        if cur == start && touched_zero {
            out.push(Path {
                levels: levels.clone(),
            });
        }
        return;
    }
    for step in -w..=w {
        if step == 0 && !allow_flat {
            continue;
        }
        let next = cur + step;
        if next > 0 {
            continue;
        }
        let left = remaining - 1;
        // Must still be able to close ...
        if ceil_div((next - start).abs(), w) > left {
            continue;
        }
        // ... and to visit level 0 at some point.
        let touched = touched_zero || next == 0;
        if !touched && ceil_div(-next, w) + ceil_div(-start, w) > left {
            continue;
        }
        levels.push(next);
        dfs_max0(levels, start, k, w, allow_flat, touched, out);
        levels.pop();
    }
}

/// Closed paths of length `k`, steps ±1, maximum level exactly 0.
///
/// Empty for odd `k` (and for `k == 0`).  For even `k` the family has
/// exactly `C(k, k/2)` members.
#[must_use]
pub fn enumerate_gamma(k: usize) -> Vec<Path> {
    if k % 2 == 1 {
        return Vec::new();
    }
    enumerate_closed_max0(k, 1, false)
}

/// Closed paths of length `k`, steps in {-1, 0, +1}, maximum level exactly
/// 0, with at least one flat step.
#[must_use]
pub fn enumerate_gamma_minus(k: usize) -> Vec<Path> {
    enumerate_closed_max0(k, 1, true)
        .into_iter()
        .filter(|p| p.flat_count() >= 1)
        .collect()
}

/// The subfamily of [`enumerate_gamma_minus`] with exactly two flat steps,
/// both at the same level.  Empty for odd `k`; has `k * 2^(k-3)` members
/// for even `k >= 2`.
#[must_use]
pub fn enumerate_gamma_two_flat(k: usize) -> Vec<Path> {
    if k % 2 == 1 {
        return Vec::new();
    }
    enumerate_closed_max0(k, 1, true)
        .into_iter()
        .filter(|p| {
            let flats: Vec<i32> = p
                .steps()
                .filter(|(a, b)| a == b)
                .map(|(a, _)| a)
                .collect();
            flats.len() == 2 && flats[0] == flats[1]
        })
        .collect()
}

/// Closed paths of length `k` with steps bounded by `w` in absolute value
/// (flats included), maximum level exactly 0.  `w == 1` gives exactly the
/// union of [`enumerate_gamma`] and [`enumerate_gamma_minus`].
pub fn enumerate_gamma_band(k: usize, w: usize) -> Result<Vec<Path>> {
    if w == 0 {
        return Err(Error::InvalidParameter(
            "band width w must be >= 1".into(),
        ));
    }
    Ok(enumerate_closed_max0(k, w as i32, true))
}

/// Paths of length `k`, steps in {-1, 0, +1}, maximum 0, with exactly one
/// flat step.  Empty for even `k`; building block of the odd-odd pairs.
fn enumerate_one_flat(k: usize) -> Vec<Path> {
    if k % 2 == 0 {
        return Vec::new();
    }
    enumerate_closed_max0(k, 1, true)
        .into_iter()
        .filter(|p| p.flat_count() == 1)
        .collect()
}

/// True when the two paths have a common level at which both have a
/// positive crossing count or both have a positive flat count.
fn share_level(s1: &LevelStats, s2: &LevelStats) -> bool {
    s1.crossings
        .iter()
        .any(|(i, &c)| c > 0 && s2.crossing(*i) > 0)
        || s1.flats.iter().any(|(i, &c)| c > 0 && s2.flat(*i) > 0)
}

/// Enumerates connected path pairs of lengths `(k, l)` with joint maximum
/// level exactly 0.
///
/// * `k`, `l` both even: both paths flat-free, and they share a level
///   (some line is crossed by both).
/// * `k`, `l` both odd: each path has exactly one flat step, and the two
///   flats sit at the same level.
/// * Mixed parity: empty (such pairs carry no limiting covariance).
///
/// Pairs are produced by anchoring one path at maximum 0 and sliding a
/// translated copy of the other below it, which reaches every pair exactly
/// once; output is sorted lexicographically by (first, second) levels.
#[must_use]
pub fn enumerate_gamma_pairs(k: usize, l: usize) -> Vec<(Path, Path)> {
    let mut out: Vec<(Path, Path)> = Vec::new();
    if k == 0 || l == 0 || (k % 2) != (l % 2) {
        return out;
    }
    if k % 2 == 0 {
        let left = enumerate_gamma(k);
        let right = enumerate_gamma(l);
        let left_stats: Vec<LevelStats> = left.iter().map(level_stats).collect();
        let right_stats: Vec<LevelStats> = right.iter().map(level_stats).collect();
        // Sliding range: beyond half the combined length the level spans
        // cannot overlap.
        let reach = (k as i32) / 2 + (l as i32) / 2 + 1;
        for (g1, s1) in left.iter().zip(&left_stats) {
            for (g2, s2) in right.iter().zip(&right_stats) {
                for q in -reach..=0 {
                    let shifted = shift_stats(s2, q);
                    if share_level(s1, &shifted) {
                        out.push((g1.clone(), g2.shift(q)));
                    }
                }
                for q in -reach..0 {
                    let shifted = shift_stats(s1, q);
                    if share_level(&shifted, s2) {
                        out.push((g1.shift(q), g2.clone()));
                    }
                }
            }
        }
    } else {
        let left = enumerate_one_flat(k);
        let right = enumerate_one_flat(l);
        for g1 in &left {
            for g2 in &right {
                let f1 = g1.single_flat_level().unwrap();
                let f2 = g2.single_flat_level().unwrap();
                // Align the flats; whichever side would rise above 0 stays
                // anchored and the other is lowered.
                let q = f1 - f2;
                if q <= 0 {
                    out.push((g1.clone(), g2.shift(q)));
                } else {
                    out.push((g1.shift(-q), g2.clone()));
                }
            }
        }
    }
    out.sort_unstable_by(|a, b| {
        a.0.levels
            .cmp(&b.0.levels)
            .then_with(|| a.1.levels.cmp(&b.1.levels))
    });
    out
}

/// Translates every level key in a stats table by `q`.
fn shift_stats(stats: &LevelStats, q: i32) -> LevelStats {
    let mut out = LevelStats::default();
    out.crossings = stats
        .crossings
        .iter()
        .map(|(&i, &c)| (i + q, c))
        .collect();
    out.flats = stats.flats.iter().map(|(&i, &c)| (i + q, c)).collect();
    out.banded = stats
        .banded
        .iter()
        .map(|(&(i, j), &c)| ((i + q, j + q), c))
        .collect();
    out
}

/// Exact binomial coefficient.
#[must_use]
pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Closed-form size of the flat-free family: `C(k, k/2)` for even `k`,
/// 0 for odd `k`.
#[must_use]
pub fn gamma_count(k: usize) -> BigUint {
    if k % 2 == 1 {
        return BigUint::from(0u32);
    }
    binomial(k, k / 2)
}

/// Closed-form size of the same-level two-flat family: `k * 2^(k-3)` for
/// even `k >= 2`.
#[must_use]
pub fn gamma_two_flat_count(k: usize) -> BigUint {
    if k % 2 == 1 || k < 2 {
        return BigUint::from(0u32);
    }
    if k == 2 {
        // k * 2^(k-3) with the fractional power resolved exactly: 2 * 1/2.
        return BigUint::from(1u32);
    }
    BigUint::from(k) << (k - 3)
}

/// Closed-form size of the odd-odd pair family:
/// `k * l * C(k-1, (k-1)/2) * C(l-1, (l-1)/2)` for odd `k`, `l`.
#[must_use]
pub fn gamma_pair_count_odd(k: usize, l: usize) -> BigUint {
    if k % 2 == 0 || l % 2 == 0 {
        return BigUint::from(0u32);
    }
    BigUint::from(k) * BigUint::from(l) * binomial(k - 1, (k - 1) / 2) * binomial(l - 1, (l - 1) / 2)
}
