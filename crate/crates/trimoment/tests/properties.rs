//! Randomized invariants: structural identities that must hold for every
//! input, exercised through proptest-generated cases.

mod common;

use common::binom;
use proptest::prelude::*;
use trimoment::fluctuations::{cov_trace, CovKernel, FluctuationSpec};
use trimoment::moments::{
    band_limit_moment, first_order_deviation, forward_system, invert_system, limit_moment,
    mixed_moment, DeviationInput, DiagonalMoments, MomentSequence, MultiMomentTable,
};
use trimoment::paths::{
    enumerate_gamma, enumerate_gamma_band, enumerate_gamma_minus, enumerate_gamma_pairs,
    enumerate_gamma_two_flat, level_stats, ColorWord, Path,
};

fn moment_values(k_max: usize, seed: &[f64]) -> Vec<f64> {
    let mut m = vec![1.0];
    m.extend(seed.iter().take(k_max).copied());
    m
}

proptest! {
    /// Translating a path translates its level statistics and nothing else.
    #[test]
    fn level_stats_shift_equivariance(
        k in 1usize..=6,
        w in 1usize..=2,
        pick in any::<prop::sample::Index>(),
        shift in -5i32..=5,
    ) {
        let family = enumerate_gamma_band(k, w).unwrap();
        prop_assume!(!family.is_empty());
        let path = &family[pick.index(family.len())];
        let moved = Path::new(path.levels().iter().map(|l| l + shift).collect()).unwrap();
        let base = level_stats(path);
        let got = level_stats(&moved);
        let crossings: std::collections::BTreeMap<_, _> = base
            .crossings
            .iter()
            .map(|(&i, &n)| (i + shift, n))
            .collect();
        let flats: std::collections::BTreeMap<_, _> =
            base.flats.iter().map(|(&i, &n)| (i + shift, n)).collect();
        let banded: std::collections::BTreeMap<_, _> = base
            .banded
            .iter()
            .map(|(&(a, b), &n)| ((a + shift, b + shift), n))
            .collect();
        prop_assert_eq!(got.crossings, crossings);
        prop_assert_eq!(got.flats, flats);
        prop_assert_eq!(got.banded, banded);
    }

    /// In a flat-free path every step crosses exactly one line, so the
    /// crossing counts partition the steps; with flats allowed the flats
    /// absorb the rest.
    #[test]
    fn step_counts_partition(k in 1usize..=8) {
        for g in enumerate_gamma(k) {
            let s = level_stats(&g);
            prop_assert!(s.flats.is_empty());
            prop_assert_eq!(s.crossings.values().map(|&n| n as usize).sum::<usize>(), k);
        }
        for g in enumerate_gamma_band(k, 1).unwrap() {
            let s = level_stats(&g);
            let total: usize = s
                .crossings
                .values()
                .chain(s.flats.values())
                .map(|&n| n as usize)
                .sum();
            prop_assert_eq!(total, k);
        }
        for g in enumerate_gamma_minus(k) {
            prop_assert!(g.flat_count() >= 1);
        }
        for g in enumerate_gamma_two_flat(k) {
            let s = level_stats(&g);
            prop_assert_eq!(g.flat_count(), 2);
            prop_assert_eq!(s.flats.len(), 1);
        }
        if k % 2 == 0 {
            prop_assert_eq!(enumerate_gamma(k).len() as f64, binom(k, k / 2));
        } else {
            prop_assert!(enumerate_gamma(k).is_empty());
        }
    }

    /// Every produced pair peaks jointly at zero and satisfies the
    /// parity-specific sharing rule.
    #[test]
    fn pair_families_respect_their_invariants(k in 1usize..=5, l in 1usize..=5) {
        let pairs = enumerate_gamma_pairs(k, l);
        if k % 2 != l % 2 {
            prop_assert!(pairs.is_empty());
            return Ok(());
        }
        for (a, b) in &pairs {
            prop_assert_eq!(a.max_level().max(b.max_level()), 0);
            let (sa, sb) = (level_stats(a), level_stats(b));
            if k % 2 == 0 {
                prop_assert!(a.is_flat_free() && b.is_flat_free());
                prop_assert!(sa.crossings.keys().any(|i| sb.crossings.contains_key(i)));
            } else {
                prop_assert_eq!(a.flat_count(), 1);
                prop_assert_eq!(b.flat_count(), 1);
                prop_assert_eq!(
                    sa.flats.keys().next().copied(),
                    sb.flats.keys().next().copied()
                );
            }
        }
    }

    /// Scaled moments computed forward then inverted reproduce the even
    /// inputs (odd orders never reach the forward map: every level line of
    /// a closed path is crossed an even number of times).
    #[test]
    fn forward_invert_round_trip(
        alpha in 0.1f64..3.0,
        half in 1usize..=5,
        seed in prop::collection::vec(0.1f64..2.0, 10),
    ) {
        let k_max = 2 * half;
        let m = moment_values(k_max, &seed);
        let ms = MomentSequence::new(alpha, m.clone()).unwrap();
        let back = invert_system(&forward_system(&ms, k_max).unwrap(), k_max).unwrap();
        for j in (0..=k_max).step_by(2) {
            prop_assert!(
                (m[j] - back[j]).abs() <= 1e-9 * (1.0 + m[j].abs()),
                "order {}: {} vs {}", j, m[j], back[j]
            );
        }
    }

    /// A width-1 band with a silent sub-diagonal is the tridiagonal case.
    #[test]
    fn band_width_one_reduces_exactly(
        alpha in 0.1f64..2.0,
        sub_scale in 0.1f64..0.9,
        half in 0usize..=4,
        seed in prop::collection::vec(0.1f64..2.0, 8),
    ) {
        let k = 2 * half;
        let m = moment_values(k, &seed);
        let per = [
            DiagonalMoments { alpha: alpha * sub_scale, m: vec![1.0] },
            DiagonalMoments { alpha, m: m.clone() },
        ];
        let wide = band_limit_moment(k, 1, &per).unwrap();
        let narrow = limit_moment(k, &MomentSequence::new(alpha, m).unwrap()).unwrap();
        prop_assert_eq!(wide.to_bits(), narrow.to_bits());
    }

    /// At a fixed rate the deviation is affine in the moment deviations and
    /// the diagonal variance, so it commutes with convex mixing.
    #[test]
    fn deviation_commutes_with_convex_mixing(
        alpha in 0.3f64..1.5,
        half in 1usize..=3,
        seed in prop::collection::vec(0.1f64..2.0, 6),
        xi1 in prop::collection::vec(-2.0f64..2.0, 6),
        xi2 in prop::collection::vec(-2.0f64..2.0, 6),
        s1 in 0.0f64..3.0,
        s2 in 0.0f64..3.0,
        weight in 0.0f64..1.0,
        tight in proptest::bool::ANY,
    ) {
        let k = 2 * half;
        let ms = MomentSequence::new(alpha, moment_values(k, &seed)).unwrap();
        let cap = 1.0f64.min(2.0 * alpha);
        let upsilon = if tight { cap } else { 0.5 * cap };
        let pad = |v: &[f64]| {
            let mut xi = vec![0.0];
            xi.extend_from_slice(v);
            xi
        };
        let d1 = DeviationInput { upsilon, xi: pad(&xi1), sigma_d_sq: s1 };
        let d2 = DeviationInput { upsilon, xi: pad(&xi2), sigma_d_sq: s2 };
        let mix = DeviationInput {
            upsilon,
            xi: d1.xi.iter().zip(&d2.xi).map(|(a, b)| weight * a + (1.0 - weight) * b).collect(),
            sigma_d_sq: weight * s1 + (1.0 - weight) * s2,
        };
        let f1 = first_order_deviation(k, &ms, &d1).unwrap();
        let f2 = first_order_deviation(k, &ms, &d2).unwrap();
        let fm = first_order_deviation(k, &ms, &mix).unwrap();
        let want = weight * f1 + (1.0 - weight) * f2;
        prop_assert!(
            (fm - want).abs() <= 1e-9 * (1.0 + f1.abs() + f2.abs()),
            "{fm} vs {want}"
        );
    }

    /// Trace covariances are symmetric in the two orders.
    #[test]
    fn cov_trace_is_symmetric(
        alpha in 0.3f64..2.0,
        m2 in 0.2f64..2.0,
        sigma in 0.05f64..1.0,
        sigma_d in 0.0f64..2.0,
        eps_frac in 0.1f64..1.0,
        gap in proptest::bool::ANY,
        k in 1usize..=5,
        l in 1usize..=5,
    ) {
        let k_max = k.max(l);
        let spec = if gap {
            let mut m = vec![1.0];
            for j in 1..=2 * k_max {
                m.push(if j % 2 == 0 { m2.powi(j as i32 / 2) * 1.3 } else { 0.4 });
            }
            FluctuationSpec::new(
                MomentSequence::new(alpha, m).unwrap(),
                0.0,
                CovKernel::MomentGap,
                sigma_d,
            )
            .unwrap()
        } else {
            let mut m = vec![1.0];
            for j in 1..=2 * k_max {
                m.push(if j % 2 == 0 { m2.powi(j as i32 / 2) } else { 0.0 });
            }
            FluctuationSpec::new(
                MomentSequence::new(alpha, m).unwrap(),
                eps_frac * alpha.min(1.0),
                CovKernel::Perturbative { sigma_z_sq: sigma },
                sigma_d,
            )
            .unwrap()
        };
        let a = cov_trace(k, l, &spec).unwrap();
        let b = cov_trace(l, k, &spec).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
    }

    /// The joint-moment functional is a trace: invariant under cyclic
    /// rotation and reversal of the word, and a single-color word reduces
    /// to the one-matrix moment.
    #[test]
    fn mixed_moments_have_trace_symmetry(
        alpha1 in 0.2f64..1.5,
        alpha2 in 0.2f64..1.5,
        m1 in prop::collection::vec(0.1f64..1.8, 6),
        m2 in prop::collection::vec(0.1f64..1.8, 6),
        word in prop::collection::vec(1usize..=2, 1..=6),
        turn in any::<prop::sample::Index>(),
    ) {
        let table = MultiMomentTable::new(vec![
            (alpha1, moment_values(6, &m1)),
            (alpha2, moment_values(6, &m2)),
        ])
        .unwrap();
        let value = mixed_moment(&ColorWord::new(word.clone()).unwrap(), &table).unwrap();
        let mut rotated = word.clone();
        rotated.rotate_left(turn.index(word.len()));
        let mut reversed = word.clone();
        reversed.reverse();
        let rot = mixed_moment(&ColorWord::new(rotated).unwrap(), &table).unwrap();
        let rev = mixed_moment(&ColorWord::new(reversed).unwrap(), &table).unwrap();
        prop_assert!((value - rot).abs() <= 1e-12 * (1.0 + value.abs()));
        prop_assert!((value - rev).abs() <= 1e-12 * (1.0 + value.abs()));

        let k = word.len();
        let single = mixed_moment(&ColorWord::new(vec![1; k]).unwrap(), &table).unwrap();
        let direct = limit_moment(
            k,
            &MomentSequence::new(alpha1, moment_values(6, &m1)).unwrap(),
        )
        .unwrap();
        prop_assert!((single - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
    }
}
