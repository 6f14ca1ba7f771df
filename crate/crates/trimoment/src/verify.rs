//! Self-verification harness: recomputes the library's predictions and
//! confronts them with exact counting identities, closed forms, quadrature,
//! and seeded Monte Carlo simulation, reporting pass/fail per criterion.

use std::collections::HashSet;
use std::time::Instant;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::densities::{
    bernoulli_measure, chebyshev_block_eigenvalues, measure_moment, ullman_measure, ullman_pdf,
    ullman_pdf_integral,
};
use crate::ensembles::{
    mc_band_moments, mc_fluctuations, mc_moments, BandDiagonalSpec, BandEntry, EnsembleSpec,
    TridiagonalMatrix,
};
use crate::fluctuations::{cov_trace, CovKernel, FluctuationSpec};
use crate::moments::{
    band_limit_moment, first_order_deviation, forward_system, invert_system, limit_moment,
    mixed_moment, DeviationInput, DiagonalMoments, MomentSequence, MultiMomentTable,
};
use crate::paths::{
    binomial, enumerate_gamma, enumerate_gamma_band, enumerate_gamma_pairs,
    enumerate_gamma_two_flat, gamma_count, gamma_pair_count_odd, gamma_two_flat_count,
    level_stats, ColorWord,
};
use crate::Result;

/// Problem sizes for a verification run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Shrunk sizes; the whole run stays under a minute.
    Quick,
    /// Full desk-scale sizes.
    Default,
}

impl Scale {
    pub fn name(self) -> &'static str {
        match self {
            Scale::Quick => "quick",
            Scale::Default => "default",
        }
    }
}

/// Deliberate fault injections for testing the harness itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    None,
    /// Skews the predicted limiting moments by one unit in the scaling
    /// normalizer; the moment criteria must then fail with visible deltas.
    WrongLimitNormalizer,
}

/// One predicted-vs-observed comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub label: String,
    pub predicted: f64,
    pub observed: f64,
    pub delta: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// All checks belonging to one named criterion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionReport {
    pub name: String,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

/// Full harness output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub version: String,
    pub scale: String,
    pub seed: u64,
    pub passed: bool,
    pub wall_secs: f64,
    pub criteria: Vec<CriterionReport>,
}

impl VerifyReport {
    /// Flat view of every failing check.
    pub fn failures(&self) -> Vec<&CheckResult> {
        self.criteria
            .iter()
            .flat_map(|c| c.checks.iter().filter(|ch| !ch.passed))
            .collect()
    }
}

struct Criterion {
    name: &'static str,
    checks: Vec<CheckResult>,
}

impl Criterion {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checks: Vec::new(),
        }
    }

    fn check(&mut self, label: impl Into<String>, predicted: f64, observed: f64, tolerance: f64) {
        let delta = (predicted - observed).abs();
        self.checks.push(CheckResult {
            label: label.into(),
            predicted,
            observed,
            delta,
            tolerance,
            passed: delta <= tolerance,
        });
    }

    fn finish(self) -> CriterionReport {
        CriterionReport {
            passed: self.checks.iter().all(|c| c.passed),
            name: self.name.to_string(),
            checks: self.checks,
        }
    }
}

fn guarded(
    name: &'static str,
    body: impl FnOnce(&mut Criterion) -> Result<()>,
) -> CriterionReport {
    let mut c = Criterion::new(name);
    if let Err(e) = body(&mut c) {
        c.checks.push(CheckResult {
            label: format!("criterion aborted: {e}"),
            predicted: f64::NAN,
            observed: f64::NAN,
            delta: f64::NAN,
            tolerance: 0.0,
            passed: false,
        });
    }
    c.finish()
}

struct Params {
    count_k_max: usize,
    consistency_k_max: usize,
    semi_n: usize,
    semi_reps: usize,
    semi_k_max: usize,
    dev_sizes: Vec<usize>,
    dev_reps: usize,
    density_alphas: Vec<f64>,
    density_k_max: usize,
    density_grid: usize,
    bern_thetas: Vec<f64>,
    bern_k_max: usize,
    cheb_max: usize,
    fluct_n: usize,
    fluct_reps: usize,
    fluct_orders: Vec<usize>,
    kurt_bound: f64,
    band_random_specs: usize,
    band_n: usize,
    band_reps: usize,
    band_orders: Vec<usize>,
}

impl Params {
    fn for_scale(scale: Scale) -> Self {
        match scale {
            Scale::Quick => Params {
                count_k_max: 8,
                consistency_k_max: 6,
                semi_n: 200,
                semi_reps: 60,
                semi_k_max: 6,
                dev_sizes: vec![250, 500],
                dev_reps: 300,
                density_alphas: vec![0.5, 1.0],
                density_k_max: 4,
                density_grid: 100,
                bern_thetas: vec![0.6],
                bern_k_max: 4,
                cheb_max: 10,
                fluct_n: 300,
                fluct_reps: 400,
                fluct_orders: vec![2, 3],
                kurt_bound: 1.0,
                band_random_specs: 50,
                band_n: 400,
                band_reps: 60,
                band_orders: vec![2],
            },
            Scale::Default => Params {
                count_k_max: 12,
                consistency_k_max: 8,
                semi_n: 1000,
                semi_reps: 200,
                semi_k_max: 8,
                dev_sizes: vec![500, 1000, 2000],
                dev_reps: 800,
                density_alphas: vec![0.25, 0.5, 1.0, 2.0],
                density_k_max: 8,
                density_grid: 1000,
                bern_thetas: vec![0.4, 0.6, 0.95],
                bern_k_max: 6,
                cheb_max: 20,
                fluct_n: 2000,
                fluct_reps: 2000,
                fluct_orders: vec![2, 3, 4],
                kurt_bound: 0.3,
                band_random_specs: 200,
                band_n: 2000,
                band_reps: 200,
                band_orders: vec![2, 4],
            },
        }
    }
}

fn big_f64(x: BigUint) -> f64 {
    x.to_string().parse().unwrap()
}

/// The limiting moment as predicted for the report, with the optional
/// deliberate normalizer fault applied.
fn predicted_limit(k: usize, ms: &MomentSequence, mutation: Mutation) -> Result<f64> {
    let v = limit_moment(k, ms)?;
    Ok(match mutation {
        Mutation::None => v,
        Mutation::WrongLimitNormalizer => {
            let a = ms.alpha() * k as f64;
            v * (a + 1.0) / (a + 2.0)
        }
    })
}

/// Runs the harness with no fault injection.
pub fn run(scale: Scale, seed: u64) -> VerifyReport {
    run_with_mutation(scale, seed, Mutation::None)
}

/// Runs the harness, optionally with a deliberate fault injected into the
/// predictions (used to prove the harness can actually fail).
pub fn run_with_mutation(scale: Scale, seed: u64, mutation: Mutation) -> VerifyReport {
    let p = Params::for_scale(scale);
    let start = Instant::now();
    let criteria = vec![
        guarded("path-counts", |c| counts(c, &p)),
        guarded("enumerator-consistency", |c| consistency(c, &p)),
        guarded("moment-closed-forms", |c| moment_forms(c, seed, mutation)),
        guarded("semicircle-simulation", |c| semicircle(c, &p, seed, mutation)),
        guarded("finite-size-deviation", |c| deviation(c, &p, seed)),
        guarded("spectral-densities", |c| densities(c, &p)),
        guarded("thinned-limit-law", |c| thinned_law(c, &p)),
        guarded("trace-fluctuations", |c| fluctuations(c, &p, seed)),
        guarded("joint-moments", |c| joint_moments(c, seed)),
        guarded("band-reduction", |c| band(c, &p, seed)),
    ];
    VerifyReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        scale: scale.name().to_string(),
        seed,
        passed: criteria.iter().all(|c| c.passed),
        wall_secs: start.elapsed().as_secs_f64(),
        criteria,
    }
}

fn counts(c: &mut Criterion, p: &Params) -> Result<()> {
    for k in (2..=p.count_k_max).step_by(2) {
        c.check(
            format!("closed path count k={k}"),
            big_f64(gamma_count(k)),
            enumerate_gamma(k).len() as f64,
            0.0,
        );
    }
    c.check(
        "length-4 family size",
        6.0,
        enumerate_gamma(4).len() as f64,
        0.0,
    );
    for k in (4..=p.count_k_max.min(10)).step_by(2) {
        c.check(
            format!("two-flat family count k={k}"),
            big_f64(gamma_two_flat_count(k)),
            enumerate_gamma_two_flat(k).len() as f64,
            0.0,
        );
        let weighted: i64 = enumerate_gamma(k)
            .iter()
            .map(|g| {
                let s = level_stats(g);
                s.crossings
                    .iter()
                    .map(|(&i, &n)| i as i64 * n as i64)
                    .sum::<i64>()
            })
            .sum();
        c.check(
            format!("level-weighted crossing sum k={k}"),
            -((k as f64) * 2f64.powi(k as i32 - 1)),
            weighted as f64,
            0.0,
        );
        let squared: i64 = enumerate_gamma(k)
            .iter()
            .map(|g| {
                let s = level_stats(g);
                s.crossings
                    .values()
                    .map(|&n| (n as i64) * (n as i64))
                    .sum::<i64>()
            })
            .sum();
        c.check(
            format!("squared crossing sum k={k}"),
            (k as f64) * 2f64.powi(k as i32),
            squared as f64,
            0.0,
        );
    }
    Ok(())
}

fn consistency(c: &mut Criterion, p: &Params) -> Result<()> {
    for k in (2..=p.consistency_k_max).step_by(2) {
        let paths = enumerate_gamma(k);
        let mut structure_violations = 0usize;
        let mut stat_mismatches = 0usize;
        let mut shift_mismatches = 0usize;
        for g in &paths {
            let closed = g.levels()[0] == g.levels()[k];
            let unit_steps = g.step_bound() == 1;
            if !closed || g.max_level() != 0 || !g.is_flat_free() || !unit_steps {
                structure_violations += 1;
            }
            let s = level_stats(g);
            let total: u32 = s.crossings.values().sum();
            if total as usize != k {
                stat_mismatches += 1;
            }
            for (&i, &n) in &s.crossings {
                if s.banded_count(i, i + 1) != n {
                    stat_mismatches += 1;
                }
            }
            for (&i, &n) in &s.flats {
                if s.banded_count(i, i) != n {
                    stat_mismatches += 1;
                }
            }
            let t = level_stats(&g.shift(-3));
            for (&i, &n) in &s.crossings {
                if t.crossing(i - 3) != n {
                    shift_mismatches += 1;
                }
            }
        }
        c.check(
            format!("structural violations k={k}"),
            0.0,
            structure_violations as f64,
            0.0,
        );
        c.check(
            format!("statistic mismatches k={k}"),
            0.0,
            stat_mismatches as f64,
            0.0,
        );
        c.check(
            format!("shift mismatches k={k}"),
            0.0,
            shift_mismatches as f64,
            0.0,
        );
        // The unit-step band family contains every unit-step path.
        let band: HashSet<Vec<i32>> = enumerate_gamma_band(k, 1)?
            .iter()
            .map(|g| g.levels().to_vec())
            .collect();
        let missing = paths
            .iter()
            .filter(|g| !band.contains(g.levels()))
            .count();
        c.check(
            format!("band embedding misses k={k}"),
            0.0,
            missing as f64,
            0.0,
        );
    }
    for (k, l) in [(1usize, 3usize), (3, 3), (3, 5)] {
        if k.max(l) > p.consistency_k_max {
            continue;
        }
        c.check(
            format!("one-flat pair count ({k},{l})"),
            big_f64(gamma_pair_count_odd(k, l)),
            enumerate_gamma_pairs(k, l).len() as f64,
            0.0,
        );
    }
    let forward = enumerate_gamma_pairs(2, 4).len();
    let backward = enumerate_gamma_pairs(4, 2).len();
    c.check(
        "pair count symmetry (2,4)",
        forward as f64,
        backward as f64,
        0.0,
    );
    let unshared = enumerate_gamma_pairs(2, 4)
        .iter()
        .filter(|(g1, g2)| {
            let (s1, s2) = (level_stats(g1), level_stats(g2));
            !s1.crossings
                .iter()
                .any(|(&i, &n)| n > 0 && s2.crossing(i) > 0)
        })
        .count();
    c.check("pairs without a shared level (2,4)", 0.0, unshared as f64, 0.0);
    Ok(())
}

fn moment_forms(c: &mut Criterion, seed: u64, mutation: Mutation) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d6f6d);
    let alpha = 0.7;
    let mut m = vec![0.0; 11];
    m[0] = 1.0;
    for j in (2..=10).step_by(2) {
        m[j] = rng.gen_range(0.5..1.5);
    }
    let ms = MomentSequence::new(alpha, m.clone())?;
    let (m2, m4, m6, m8) = (m[2], m[4], m[6], m[8]);
    let closed = [
        (2usize, 2.0 * m2),
        (4, 2.0 * m4 + 4.0 * m2 * m2),
        (6, 2.0 * m6 + 12.0 * m4 * m2 + 6.0 * m2.powi(3)),
        (
            8,
            2.0 * m8 + 16.0 * m6 * m2 + 12.0 * m4 * m4 + 32.0 * m4 * m2 * m2
                + 8.0 * m2.powi(4),
        ),
    ];
    for (k, want) in closed {
        let scaled = (alpha * k as f64 + 1.0) * predicted_limit(k, &ms, mutation)?;
        c.check(format!("scaled moment closed form k={k}"), want, scaled, 1e-10);
    }
    let forward = forward_system(&ms, 10)?;
    let back = invert_system(&forward, 10)?;
    let worst = m
        .iter()
        .zip(&back)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    c.check("round trip max error", 0.0, worst, 1e-12);
    Ok(())
}

fn semicircle(c: &mut Criterion, p: &Params, seed: u64, mutation: Mutation) -> Result<()> {
    let spec = EnsembleSpec::beta_hermite(2.0)?;
    let est = mc_moments(&spec, p.semi_n, p.semi_k_max, p.semi_reps, seed)?;
    let ms = MomentSequence::new(0.5, vec![1.0; p.semi_k_max + 1])?;
    for k in 1..=p.semi_k_max {
        let predicted = if k % 2 == 0 {
            predicted_limit(k, &ms, mutation)?
        } else {
            0.0
        };
        c.check(
            format!("mean scaled trace k={k}"),
            predicted,
            est[k].mean,
            4.0 * est[k].std_err,
        );
    }
    Ok(())
}

fn deviation(c: &mut Criterion, p: &Params, seed: u64) -> Result<()> {
    let beta = 4.0;
    let ms = MomentSequence::new(0.5, vec![1.0; 9])?;
    // Entry moments expand as 1 + xi_j / k with xi_j = j (j - 2) / (4 beta)
    // for the chi off-diagonals; the diagonal variance is 2 / beta.
    let xi: Vec<f64> = (0..=8i64).map(|j| (j * (j - 2)) as f64 / (4.0 * beta)).collect();
    let dev = DeviationInput {
        upsilon: 1.0,
        xi,
        sigma_d_sq: 2.0 / beta,
    };
    let d2 = first_order_deviation(2, &ms, &dev)?;
    c.check("quadratic finite-size coefficient", 2.0 / beta - 1.0, d2, 1e-10);
    let d4 = first_order_deviation(4, &ms, &dev)?;
    c.check("quartic finite-size coefficient", 10.0 / beta - 5.0, d4, 1e-10);

    let spec = EnsembleSpec::beta_hermite(beta)?;
    let l4 = limit_moment(4, &ms)?;
    let mut ys = Vec::new();
    let mut ses = Vec::new();
    for (i, &n) in p.dev_sizes.iter().enumerate() {
        let est = mc_moments(&spec, n, 4, p.dev_reps, seed.wrapping_add(100 + i as u64))?;
        ys.push(n as f64 * (est[4].mean - l4));
        ses.push(n as f64 * est[4].std_err);
    }
    // Extrapolate away the next-order 1/n term using the two largest sizes.
    let last = ys.len() - 1;
    let y_hat = 2.0 * ys[last] - ys[last - 1];
    let se_hat = (4.0 * ses[last] * ses[last] + ses[last - 1] * ses[last - 1]).sqrt();
    c.check("quartic deviation vs simulation", d4, y_hat, 5.0 * se_hat);
    Ok(())
}

fn densities(c: &mut Criterion, p: &Params) -> Result<()> {
    for &alpha in &p.density_alphas {
        let mu = ullman_measure(alpha)?;
        c.check(
            format!("unit mass alpha={alpha}"),
            1.0,
            measure_moment(&mu, 0)?,
            1e-6,
        );
        for k in (2..=p.density_k_max).step_by(2) {
            let predicted = big_f64(binomial(k, k / 2)) / (alpha * k as f64 + 1.0);
            c.check(
                format!("density moment alpha={alpha} k={k}"),
                predicted,
                measure_moment(&mu, k)?,
                1e-5,
            );
        }
    }
    for &alpha in &[0.25, 0.5, 1.0] {
        if !p.density_alphas.contains(&alpha) {
            continue;
        }
        let mut worst = 0.0f64;
        for i in 0..p.density_grid {
            let x = -2.0 + 4.0 * (i as f64 + 0.5) / p.density_grid as f64;
            worst = worst.max((ullman_pdf(x, alpha)? - ullman_pdf_integral(x, alpha)?).abs());
        }
        c.check(
            format!("closed vs integral density alpha={alpha}"),
            0.0,
            worst,
            1e-9,
        );
    }
    Ok(())
}

fn thinned_law(c: &mut Criterion, p: &Params) -> Result<()> {
    for &theta in &p.bern_thetas {
        let mu = bernoulli_measure(theta, 0.5, None)?;
        c.check(
            format!("atom weight theta={theta}"),
            (1.0 - theta) / (1.0 + theta),
            mu.atoms()[0].1,
            0.0,
        );
        let mut m = vec![theta; p.bern_k_max + 1];
        m[0] = 1.0;
        let ms = MomentSequence::new(0.5, m)?;
        for k in (2..=p.bern_k_max).step_by(2) {
            c.check(
                format!("thinned moment theta={theta} k={k}"),
                limit_moment(k, &ms)?,
                measure_moment(&mu, k)?,
                1e-4,
            );
        }
    }
    let mut worst = 0.0f64;
    for n_levels in 1..=p.cheb_max {
        let t = TridiagonalMatrix::new(vec![0.0; n_levels + 1], vec![1.0; n_levels])?;
        let mut eig = t.eigenvalues(Some(1e-14))?;
        eig.reverse();
        for (a, b) in eig.iter().zip(&chebyshev_block_eigenvalues(n_levels)) {
            worst = worst.max((a - b).abs());
        }
    }
    c.check("block spectra vs eigensolver", 0.0, worst, 1e-12);
    Ok(())
}

fn fluctuations(c: &mut Criterion, p: &Params, seed: u64) -> Result<()> {
    let beta = 2.0;
    let k_max = *p.fluct_orders.iter().max().unwrap();
    let fspec = FluctuationSpec::new(
        MomentSequence::new(0.5, vec![1.0; 2 * k_max + 1])?,
        0.5,
        CovKernel::Perturbative {
            sigma_z_sq: 1.0 / (2.0 * beta),
        },
        2.0 / beta,
    )?;
    let est = mc_fluctuations(
        &EnsembleSpec::beta_hermite(beta)?,
        p.fluct_n,
        &p.fluct_orders,
        p.fluct_reps,
        seed.wrapping_add(800),
    )?;
    let reps = est.reps as f64;
    for i in 0..p.fluct_orders.len() {
        for j in i..p.fluct_orders.len() {
            let (k, l) = (p.fluct_orders[i], p.fluct_orders[j]);
            let predicted = cov_trace(k, l, &fspec)?;
            // Large-sample standard error of a Gaussian covariance entry.
            let se = ((est.covariance[i][i] * est.covariance[j][j]
                + est.covariance[i][j] * est.covariance[i][j])
                / reps)
                .sqrt();
            let tol = (0.15 * predicted.abs()).max(5.0 * se);
            c.check(
                format!("trace covariance ({k},{l})"),
                predicted,
                est.covariance[i][j],
                tol,
            );
        }
        c.check(
            format!("excess kurtosis k={}", p.fluct_orders[i]),
            0.0,
            est.excess_kurtosis[i],
            p.kurt_bound,
        );
    }
    Ok(())
}

fn joint_moments(c: &mut Criterion, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6a6f696e);
    let mut draw = |n: usize| -> Vec<f64> {
        let mut v = vec![1.0];
        v.extend((0..n).map(|_| rng.gen_range(0.4..1.6)));
        v
    };
    let (pa, pb) = (draw(4), draw(4));
    let (aa, ab) = (0.6, 0.9);
    let table = MultiMomentTable::new(vec![(aa, pa.clone()), (ab, pb.clone())])?;
    let phi = |word: &[usize], table: &MultiMomentTable| -> Result<f64> {
        let w = ColorWord::new(word.to_vec())?;
        let norm: f64 = word.iter().map(|&u| table.alpha(u)).sum::<f64>() + 1.0;
        Ok(norm * mixed_moment(&w, table)?)
    };
    let cases: Vec<(&str, Vec<usize>, f64)> = vec![
        ("a^2", vec![1, 1], 2.0 * pa[2]),
        ("b^2", vec![2, 2], 2.0 * pb[2]),
        ("ab", vec![1, 2], 2.0 * pa[1] * pb[1]),
        ("a^4", vec![1, 1, 1, 1], 2.0 * pa[4] + 4.0 * pa[2] * pa[2]),
        ("b^4", vec![2, 2, 2, 2], 2.0 * pb[4] + 4.0 * pb[2] * pb[2]),
        (
            "abab",
            vec![1, 2, 1, 2],
            2.0 * pa[2] * pb[2] + 4.0 * pa[1] * pa[1] * pb[1] * pb[1],
        ),
        (
            "a^2b^2",
            vec![1, 1, 2, 2],
            4.0 * pa[2] * pb[2] + 2.0 * pa[1] * pa[1] * pb[1] * pb[1],
        ),
        (
            "a^3b",
            vec![1, 1, 1, 2],
            2.0 * pa[3] * pb[1] + 4.0 * pa[2] * pa[1] * pb[1],
        ),
    ];
    for (name, word, want) in cases {
        c.check(
            format!("joint moment {name}"),
            want,
            phi(&word, &table)?,
            1e-10,
        );
    }
    // With vanishing odd moments the alternating word factorizes.
    let strip = |mut v: Vec<f64>| {
        v[1] = 0.0;
        v[3] = 0.0;
        v
    };
    let even = MultiMomentTable::new(vec![(aa, strip(pa)), (ab, strip(pb))])?;
    c.check(
        "alternating word factorizes",
        0.5 * phi(&[1, 1], &even)? * phi(&[2, 2], &even)?,
        phi(&[1, 2, 1, 2], &even)?,
        1e-10,
    );
    Ok(())
}

fn band(c: &mut Criterion, p: &Params, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x62616e64);
    let mut mismatches = 0usize;
    let mut worst = 0.0f64;
    for _ in 0..p.band_random_specs {
        let alpha = rng.gen_range(0.2..1.5);
        let k = 2 * rng.gen_range(0..=4usize);
        let mut m = vec![1.0];
        m.extend((0..k).map(|_| rng.gen_range(0.3..1.7)));
        let per = [
            DiagonalMoments {
                alpha: alpha * rng.gen_range(0.1..0.9),
                m: vec![1.0],
            },
            DiagonalMoments {
                alpha,
                m: m.clone(),
            },
        ];
        let wide = band_limit_moment(k, 1, &per)?;
        let narrow = limit_moment(k, &MomentSequence::new(alpha, m)?)?;
        if wide != narrow {
            mismatches += 1;
            worst = worst.max((wide - narrow).abs());
        }
    }
    c.check(
        format!("width-1 mismatches over {} specs", p.band_random_specs),
        0.0,
        mismatches as f64,
        0.0,
    );
    c.check("width-1 worst gap", 0.0, worst, 0.0);

    // Width-2 simulation: noisy maximal off-diagonals so the sampling error
    // honestly dominates the O(1/n) finite-size bias.
    let (t1, t2) = (0.5, 0.7);
    let specs = [
        BandDiagonalSpec {
            alpha: 0.0,
            entry: BandEntry::Gaussian { std_dev: 1.0 },
        },
        BandDiagonalSpec {
            alpha: 0.5,
            entry: BandEntry::Bernoulli { theta: t1 },
        },
        BandDiagonalSpec {
            alpha: 0.5,
            entry: BandEntry::Bernoulli { theta: t2 },
        },
    ];
    let k_max = *p.band_orders.iter().max().unwrap();
    let per = [
        DiagonalMoments {
            alpha: 0.0,
            m: vec![1.0],
        },
        DiagonalMoments {
            alpha: 0.5,
            m: {
                let mut m = vec![t1; k_max + 1];
                m[0] = 1.0;
                m
            },
        },
        DiagonalMoments {
            alpha: 0.5,
            m: {
                let mut m = vec![t2; k_max + 1];
                m[0] = 1.0;
                m
            },
        },
    ];
    let est = mc_band_moments(
        &specs,
        p.band_n,
        &p.band_orders,
        p.band_reps,
        seed.wrapping_add(1000),
    )?;
    for (i, &k) in p.band_orders.iter().enumerate() {
        let predicted = band_limit_moment(k, 2, &per)?;
        c.check(
            format!("width-2 mean scaled trace k={k}"),
            predicted,
            est[i].mean,
            4.0 * est[i].std_err,
        );
    }
    Ok(())
}
