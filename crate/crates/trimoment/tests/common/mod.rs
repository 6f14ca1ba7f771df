//! Shared helpers for the integration suites: check bookkeeping with one
//! printed line per criterion, brute-force path generation that is
//! deliberately independent of the library's pruned search, and small
//! statistical utilities.

#![allow(dead_code)]

use std::collections::BTreeSet;

/// Collects labelled comparisons for one acceptance criterion and prints a
/// single PASS/FAIL line; failures then panic with every offending check.
pub struct Checks {
    name: &'static str,
    total: usize,
    failures: Vec<String>,
}

impl Checks {
    pub fn new(name: &'static str) -> Self {
        Self {
            name,
            total: 0,
            failures: Vec::new(),
        }
    }

    /// Requires `|want - got| <= tol`.
    pub fn close(&mut self, label: impl Into<String>, want: f64, got: f64, tol: f64) {
        self.total += 1;
        let delta = (want - got).abs();
        if !(delta <= tol) {
            self.failures.push(format!(
                "{}: want {want:.9e} got {got:.9e} delta {delta:.3e} tol {tol:.3e}",
                label.into()
            ));
        }
    }

    /// Requires bit-for-bit equality.
    pub fn exact(&mut self, label: impl Into<String>, want: f64, got: f64) {
        self.total += 1;
        if want != got {
            self.failures.push(format!(
                "{}: want {want:.17e} got {got:.17e} (exact)",
                label.into()
            ));
        }
    }

    pub fn require(&mut self, label: impl Into<String>, ok: bool) {
        self.total += 1;
        if !ok {
            self.failures.push(label.into());
        }
    }

    pub fn finish(self) {
        if self.failures.is_empty() {
            println!("acceptance {}: PASS ({} checks)", self.name, self.total);
        } else {
            println!(
                "acceptance {}: FAIL ({} of {} checks)",
                self.name,
                self.failures.len(),
                self.total
            );
            for f in &self.failures {
                println!("  FAIL {f}");
            }
            panic!(
                "acceptance {}: {} of {} checks failed",
                self.name,
                self.failures.len(),
                self.total
            );
        }
    }
}

/// Every closed level sequence of length `k` with steps bounded by `w`,
/// maximum level exactly 0, generated by filtering the full box of step
/// vectors and start levels — no pruning, no recursion shared with the
/// library.
pub fn brute_closed_max0(k: usize, w: i32, allow_flat: bool) -> BTreeSet<Vec<i32>> {
    let mut steps: Vec<i32> = (-w..=w).collect();
    if !allow_flat {
        steps.retain(|&s| s != 0);
    }
    let mut out = BTreeSet::new();
    let lowest = -(k as i32) * w;
    for start in lowest..=0 {
        let mut seq = vec![start];
        brute_extend(&mut seq, k, &steps, &mut out);
    }
    out
}

fn brute_extend(seq: &mut Vec<i32>, k: usize, steps: &[i32], out: &mut BTreeSet<Vec<i32>>) {
    if seq.len() == k + 1 {
        let closed = seq[0] == seq[k];
        let peak = *seq.iter().max().unwrap();
        if closed && peak == 0 {
            out.insert(seq.clone());
        }
        return;
    }
    for &s in steps {
        let next = seq.last().unwrap() + s;
        if next > 0 {
            continue;
        }
        seq.push(next);
        brute_extend(seq, k, steps, out);
        seq.pop();
    }
}

/// Number of flat steps in a level sequence.
pub fn flat_steps(seq: &[i32]) -> usize {
    seq.windows(2).filter(|p| p[0] == p[1]).count()
}

/// Levels of the flat steps, one entry per flat.
pub fn flat_levels(seq: &[i32]) -> Vec<i32> {
    seq.windows(2)
        .filter(|p| p[0] == p[1])
        .map(|p| p[0])
        .collect()
}

/// Levels crossed by an up or down step, i.e. the lower level of each
/// non-flat step, one entry per crossing.
pub fn crossing_levels(seq: &[i32]) -> Vec<i32> {
    seq.windows(2)
        .filter(|p| p[0] != p[1])
        .map(|p| p[0].min(p[1]))
        .collect()
}

/// `E[chi_r^(2m)] = r (r+2) .. (r+2m-2)`: the even moments of a chi
/// variable with `r` degrees of freedom.
pub fn chi_even_moment(r: f64, m: usize) -> f64 {
    (0..m).map(|i| r + 2.0 * i as f64).product()
}

/// Two-point Richardson extrapolation of a sequence `y_i = y(n_i)` with
/// `n` doubling between the last two entries: removes the leading `1/n`
/// error term.
pub fn richardson(ys: &[f64]) -> f64 {
    assert!(ys.len() >= 2);
    2.0 * ys[ys.len() - 1] - ys[ys.len() - 2]
}

/// Standard error of the Richardson combination given the per-size errors.
pub fn richardson_se(ses: &[f64]) -> f64 {
    assert!(ses.len() >= 2);
    let a = ses[ses.len() - 1];
    let b = ses[ses.len() - 2];
    (4.0 * a * a + b * b).sqrt()
}

/// `C(n, k)` as f64, exact for the small arguments used here.
pub fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}
