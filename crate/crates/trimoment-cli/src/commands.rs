//! Argument structs and runners for every subcommand, plus the flat-document
//! echo behind `--dump-config`.

use std::path::{Path as FsPath, PathBuf};
use std::time::Instant;

use clap::{Args, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use trimoment::densities::{bernoulli_measure, ullman_pdf, ullman_sample};
use trimoment::ensembles::{
    mc_band_moments, mc_fluctuations, mc_moments, BandDiagonalSpec, BandEntry, EnsembleSpec,
};
use trimoment::fluctuations::{cov_trace, sigma_poly, CovKernel, FluctuationSpec};
use trimoment::moments::{
    band_limit_moment, first_order_deviation, invert_system, limit_moment, mixed_moment,
    DeviationInput, DiagonalMoments, MomentSequence, MultiMomentTable,
};
use trimoment::paths::{
    enumerate_gamma, enumerate_gamma_band, enumerate_gamma_minus, enumerate_gamma_pairs,
    enumerate_gamma_two_flat, ColorWord, Path,
};
use trimoment::verify::{self, Mutation, Scale, VerifyReport};
use trimoment::{Error, Result};

use crate::emit::{self, csv_num, json_num, Format, SimRow, Target};

/// Seed used by every stochastic subcommand when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 42;

fn kv(key: &str, value: impl ToString) -> (String, String) {
    (key.to_string(), value.to_string())
}

// ---------------------------------------------------------------------------
// shared parsing helpers

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("{what}: bad number '{tok}'")))
        })
        .collect()
}

fn parse_usize_list(s: &str, what: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidParameter(format!("{what}: bad integer '{tok}'")))
        })
        .collect()
}

fn read_file(path: &FsPath) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))
}

fn json_vec_f64(path: &FsPath) -> Result<Vec<f64>> {
    serde_json::from_str(&read_file(path)?).map_err(|e| {
        Error::InvalidParameter(format!(
            "malformed JSON in {} (expected an array of numbers): {e}",
            path.display()
        ))
    })
}

fn json_mat_f64(path: &FsPath) -> Result<Vec<Vec<f64>>> {
    serde_json::from_str(&read_file(path)?).map_err(|e| {
        Error::InvalidParameter(format!(
            "malformed JSON in {} (expected an array of number arrays): {e}",
            path.display()
        ))
    })
}

/// Resolves a `--m LIST|ones` / `--m-file FILE` pair; `ones_len` is the
/// length the literal `ones` expands to.
fn resolve_moments(
    inline: &Option<String>,
    file: &Option<PathBuf>,
    ones_len: usize,
    flag: &str,
) -> Result<Option<Vec<f64>>> {
    match (inline, file) {
        (Some(spec), None) => {
            if spec == "ones" {
                Ok(Some(vec![1.0; ones_len]))
            } else {
                parse_f64_list(spec, flag).map(Some)
            }
        }
        (None, Some(path)) => json_vec_f64(path).map(Some),
        (None, None) => Ok(None),
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    }
}

fn require_moments(
    inline: &Option<String>,
    file: &Option<PathBuf>,
    ones_len: usize,
    flag: &str,
    file_flag: &str,
) -> Result<Vec<f64>> {
    resolve_moments(inline, file, ones_len, flag)?.ok_or_else(|| {
        Error::InvalidParameter(format!("provide entry moments via {flag} or {file_flag}"))
    })
}

fn z_score(delta: f64, se: f64) -> f64 {
    if se > 0.0 {
        delta / se
    } else if delta == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

// ---------------------------------------------------------------------------
// paths

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PathFamily {
    /// Closed single-step paths peaking exactly at level 0, no flat steps.
    Gamma,
    /// Same support, at least one flat step.
    GammaMinus,
    /// Exactly two flat steps sharing a level.
    #[value(name = "gamma-2flat")]
    Gamma2Flat,
    /// Pairs sharing a crossing level (even lengths) or a flat level (odd).
    Pairs,
    /// Steps bounded by the band half-width w.
    Band,
}

impl PathFamily {
    fn as_str(self) -> &'static str {
        match self {
            PathFamily::Gamma => "gamma",
            PathFamily::GammaMinus => "gamma-minus",
            PathFamily::Gamma2Flat => "gamma-2flat",
            PathFamily::Pairs => "pairs",
            PathFamily::Band => "band",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum PathsVerb {
    /// List every path of a family as JSON level arrays.
    Enumerate(PathsEnumerateArgs),
}

#[derive(Debug, Args)]
pub struct PathsEnumerateArgs {
    /// Which path family to enumerate.
    #[arg(long, value_enum)]
    pub family: PathFamily,
    /// Step count (of the first component, for pairs).
    #[arg(long)]
    pub k: usize,
    /// Step count of the second component; pairs only.
    #[arg(long)]
    pub l: Option<usize>,
    /// Band half-width; band only.
    #[arg(long)]
    pub w: Option<usize>,
    /// 'json' for stdout or a file path ending in .json.
    #[arg(long, default_value = "json")]
    pub out: String,
}

impl PathsEnumerateArgs {
    pub fn doc(&self) -> Vec<(String, String)> {
        let mut d = vec![kv("family", self.family.as_str()), kv("k", self.k)];
        if let Some(l) = self.l {
            d.push(kv("l", l));
        }
        if let Some(w) = self.w {
            d.push(kv("w", w));
        }
        d.push(kv("out", &self.out));
        d
    }
}

fn render_levels(p: &Path) -> String {
    let cells: Vec<String> = p.levels().iter().map(|v| v.to_string()).collect();
    format!("[{}]", cells.join(","))
}

fn render_path_set(paths: &[Path]) -> String {
    if paths.is_empty() {
        return "[]\n".into();
    }
    let rows: Vec<String> = paths.iter().map(|p| format!("  {}", render_levels(p))).collect();
    format!("[\n{}\n]\n", rows.join(",\n"))
}

fn render_pair_set(pairs: &[(Path, Path)]) -> String {
    if pairs.is_empty() {
        return "[]\n".into();
    }
    let rows: Vec<String> = pairs
        .iter()
        .map(|(a, b)| format!("  [{},{}]", render_levels(a), render_levels(b)))
        .collect();
    format!("[\n{}\n]\n", rows.join(",\n"))
}

pub fn run_paths_enumerate(a: &PathsEnumerateArgs) -> Result<i32> {
    let target = emit::parse_target(&a.out)?;
    if target.format() == Format::Csv {
        return Err(Error::InvalidParameter(
            "path families serialize as JSON; use --out json or a .json path".into(),
        ));
    }
    if a.l.is_some() && a.family != PathFamily::Pairs {
        return Err(Error::InvalidParameter(
            "--l applies only to --family pairs".into(),
        ));
    }
    if a.w.is_some() && a.family != PathFamily::Band {
        return Err(Error::InvalidParameter(
            "--w applies only to --family band".into(),
        ));
    }
    let payload = match a.family {
        PathFamily::Gamma => render_path_set(&enumerate_gamma(a.k)),
        PathFamily::GammaMinus => render_path_set(&enumerate_gamma_minus(a.k)),
        PathFamily::Gamma2Flat => render_path_set(&enumerate_gamma_two_flat(a.k)),
        PathFamily::Band => {
            let w = a
                .w
                .ok_or_else(|| Error::InvalidParameter("--family band requires --w".into()))?;
            render_path_set(&enumerate_gamma_band(a.k, w)?)
        }
        PathFamily::Pairs => {
            let l = a
                .l
                .ok_or_else(|| Error::InvalidParameter("--family pairs requires --l".into()))?;
            render_pair_set(&enumerate_gamma_pairs(a.k, l))
        }
    };
    target.deliver(&payload)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// moments

#[derive(Debug, Subcommand)]
pub enum MomentsVerb {
    /// Limiting renormalized trace moments L_k for k = 0..=k-max.
    Limit(MomentsLimitArgs),
    /// Recover entry moments m_k from renormalized limits M_k.
    Invert(MomentsInvertArgs),
    /// First-order 1/n deviation of one trace moment.
    Deviation(MomentsDeviationArgs),
    /// Limiting mixed moment of a word in several scaled families.
    Mixed(MomentsMixedArgs),
}

#[derive(Debug, Args)]
pub struct MomentsLimitArgs {
    /// Growth exponent of the entry scale.
    #[arg(long)]
    pub alpha: f64,
    /// Largest moment order to report.
    #[arg(long)]
    pub k_max: usize,
    /// Entry moments m_0,m_1,.. as a comma list, or the literal 'ones'.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "m_file")]
    pub m: Option<String>,
    /// JSON file holding the entry moment array.
    #[arg(long)]
    pub m_file: Option<PathBuf>,
    /// 'json'/'csv' for stdout or a file path ending in .json/.csv.
    #[arg(long, default_value = "csv")]
    pub out: String,
}

impl MomentsLimitArgs {
    pub fn doc(&self) -> Vec<(String, String)> {
        let mut d = vec![kv("alpha", self.alpha), kv("k-max", self.k_max)];
        if let Some(m) = &self.m {
            d.push(kv("m", m));
        }
        if let Some(f) = &self.m_file {
            d.push(kv("m-file", f.display()));
        }
        d.push(kv("out", &self.out));
        d
    }
}

fn deliver_index_map(target: &Target, pairs: &[(usize, f64)]) -> Result<i32> {
    let text = match target.format() {
        Format::Json => emit::json_index_map(pairs),
        Format::Csv => emit::csv_index_map(pairs),
    };
    target.deliver(&text)?;
    Ok(0)
}

pub fn run_moments_limit(a: &MomentsLimitArgs) -> Result<i32> {
    let target = emit::parse_target(&a.out)?;
    let m = require_moments(&a.m, &a.m_file, a.k_max + 1, "--m", "--m-file")?;
    let ms = MomentSequence::new(a.alpha, m)?;
    let pairs: Vec<(usize, f64)> = (0..=a.k_max)
        .map(|k| limit_moment(k, &ms).map(|v| (k, v)))
        .collect::<Result<_>>()?;
    deliver_index_map(&target, &pairs)
}

#[derive(Debug, Args)]
pub struct MomentsInvertArgs {
    /// JSON file holding M_0,M_1,.. (odd slots are ignored).
    #[arg(long = "M-file")]
    pub m_file: PathBuf,
    /// Largest recovered order; defaults to the largest even order present.
    #[arg(long)]
    pub k_max: Option<usize>,
    /// 'json'/'csv' for stdout or a file path ending in .json/.csv.
    #[arg(long, default_value = "csv")]
    pub out: String,
}

impl MomentsInvertArgs {
    pub fn doc(&self) -> Vec<(String, String)> {
        let mut d = vec![kv("M-file", self.m_file.display())];
        if let Some(k) = self.k_max {
            d.push(kv("k-max", k));
        }
        d.push(kv("out", &self.out));
        d
    }
}

pub fn run_moments_invert(a: &MomentsInvertArgs) -> Result<i32> {
    let target = emit::parse_target(&a.out)?;
    let big_m = json_vec_f64(&a.m_file)?;
    if big_m.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "{}: the moment array is empty",
            a.m_file.display()
        )));
    }
    let k_max = match a.k_max {
        Some(k) => k,
        None => (big_m.len() - 1) & !1,
    };
    let m = invert_system(&big_m, k_max)?;
    let pairs: Vec<(usize, f64)> = m.iter().copied().enumerate().collect();
    deliver_index_map(&target, &pairs)
}

#[derive(Debug, Args)]
pub struct MomentsDeviationArgs {
    /// Growth exponent of the entry scale.
    #[arg(long)]
    pub alpha: f64,
    /// Moment order.
    #[arg(long)]
    pub k: usize,
    /// Second-order strength of the entry-scale correction.
    #[arg(long)]
    pub upsilon: f64,
    /// Entry moments m_0,m_1,.. as a comma list, or the literal 'ones'.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "m_file")]
    pub m: Option<String>,
    /// JSON file holding the entry moment array.
    #[arg(long)]
    pub m_file: Option<PathBuf>,
    /// Per-index corrections xi_0,xi_1,.. (xi_0 = 0) as a comma list.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "xi_file")]
    pub xi: Option<String>,
    /// JSON file holding the xi array.
    #[arg(long)]
    pub xi_file: Option<PathBuf>,
    /// Diagonal entry variance.
    #[arg(long, default_value_t = 0.0)]
    pub sigma_d2: f64,
    /// 'json'/'csv' for stdout or a file path ending in .json/.csv.
    #[arg(long, default_value = "csv")]
    pub out: String,
}

impl MomentsDeviationArgs {
    pub fn doc(&self) -> Vec<(String, String)> {
        let mut d = vec![
            kv("alpha", self.alpha),
            kv("k", self.k),
            kv("upsilon", self.upsilon),
        ];
        if let Some(m) = &self.m {
            d.push(kv("m", m));
        }
        if let Some(f) = &self.m_file {
            d.push(kv("m-file", f.display()));
        }
        if let Some(xi) = &self.xi {
            d.push(kv("xi", xi));
        }
        if let Some(f) = &self.xi_file {
            d.push(kv("xi-file", f.display()));
        }
        d.push(kv("sigma-d2", self.sigma_d2));
        d.push(kv("out", &self.out));
        d
    }
}

pub fn run_moments_deviation(a: &MomentsDeviationArgs) -> Result<i32> {
    let target = emit::parse_target(&a.out)?;
    let m = require_moments(&a.m, &a.m_file, a.k + 1, "--m", "--m-file")?;
    let ms = MomentSequence::new(a.alpha, m)?;
    let xi = match (&a.xi, &a.xi_file) {
        (Some(spec), None) => parse_f64_list(spec, "--xi")?,
        (None, Some(path)) => json_vec_f64(path)?,
        (None, None) => {
            return Err(Error::InvalidParameter(
                "provide per-index corrections via --xi or --xi-file".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    };
    let dev = DeviationInput {
        upsilon: a.upsilon,
        xi,
        sigma_d_sq: a.sigma_d2,
    };
    let value = first_order_deviation(a.k, &ms, &dev)?;
    deliver_index_map(&target, &[(a.k, value)])
}

#[derive(Debug, Args)]
pub struct MomentsMixedArgs {
    /// Word over 1-based colors, e.g. "1,2,1,2".
    #[arg(long)]
    pub word: String,
    /// JSON file with one {"alpha": A, "m": [..]} object per color.
    #[arg(long)]
    pub table: PathBuf,
    /// 'json'/'csv' for stdout or a file path ending in .json/.csv.
    #[arg(long, default_value = "csv")]
    pub out: String,
}

impl MomentsMixedArgs {
    pub fn doc(&self) -> Vec<(String, String)> {
        vec![
            kv("word", &self.word),
            kv("table", self.table.display()),
            kv("out", &self.out),
        ]
    }
}

#[derive(Debug, Deserialize)]
struct TableEntryFile {
    alpha: f64,
    m: Vec<f64>,
}

fn load_table(path: &FsPath) -> Result<MultiMomentTable> {
    let entries: Vec<TableEntryFile> = serde_json::from_str(&read_file(path)?).map_err(|e| {
        Error::InvalidParameter(format!(
            "malformed JSON in {} (expected [{{\"alpha\": A, \"m\": [..]}}, ..]): {e}",
            path.display()
        ))
    })?;
    MultiMomentTable::new(entries.into_iter().map(|t| (t.alpha, t.m)).collect())
}

fn deliver_scalar(target: &Target, value: f64) -> Result<i32> {
    let text = match target.format() {
        Format::Json => format!("{{\n  \"value\": {}\n}}\n", json_num(value)),
        Format::Csv => format!("value\n{}\n", csv_num(value)),
    };
    target.deliver(&text)?;
    Ok(0)
}

pub fn run_moments_mixed(a: &MomentsMixedArgs) -> Result<i32> {
    let target = emit::parse_target(&a.out)?;
    let word = ColorWord::new(parse_usize_list(&a.word, "--word")?)?;
    let table = load_table(&a.table)?;
    let value = mixed_moment(&word, &table)?;
    deliver_scalar(&target, value)
}

// ---------------------------------------------------------------------------
// fluct

#[derive(Debug, Subcommand)]
pub enum FluctVerb {
    /// Limiting covariance D(k, l) of two scaled centered trace powers.
    #[command(name = "D", alias = "d")]
    D(FluctDArgs),
    /// Limiting variance of a polynomial linear statistic.
    Sigma(FluctSigmaArgs),
}

/// Kernel and regime flags shared by the fluct verbs.
#[derive(Debug, Args)]
pub struct FluctSpecOpts {
    /// Growth exponent of the entry scale.
    #[arg(long)]
    pub alpha: f64,
    /// Decay rate of the entry fluctuations; 0 means static randomness.
    #[arg(long)]
    pub epsilon: f64,
    /// Perturbative entry covariance scale: C(k, l) = k l sigma_Z^2.
    #[arg(long, conflicts_with = "c_file")]
    pub sigma_z2: Option<f64>,
    /// JSON file with an explicit entry covariance table C[k][l].
    #[arg(long = "C-file")]
    pub c_file: Option<PathBuf>,
    /// Diagonal entry variance.
    #[arg(long, default_value_t = 0.0)]
    pub sigma_d2: f64,
    /// Entry moments m_0,m_1,.. as a comma list, or the literal 'ones'.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "m_file")]
    pub m: Option<String>,
    /// JSON file holding the entry moment array.
    #[arg(long)]
    pub m_file: Option<PathBuf>,
}

impl FluctSpecOpts {
    fn build(&self, ones_len: usize) -> Result<FluctuationSpec> {
        let kernel = match (&self.sigma_z2, &self.c_file) {
            (Some(s), None) => CovKernel::Perturbative { sigma_z_sq: *s },
            (None, Some(path)) => CovKernel::Table(json_mat_f64(path)?),
            (None, None) => {
                if self.epsilon > 0.0 {
                    return Err(Error::InvalidParameter(
                        "epsilon > 0 needs an entry covariance: give --sigma-z2 or --C-file"
                            .into(),
                    ));
                }
                CovKernel::MomentGap
            }
            (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
        };
        if self.epsilon == 0.0 && !matches!(kernel, CovKernel::MomentGap) {
            return Err(Error::InvalidParameter(
                "at epsilon = 0 the entry covariance is determined by the moment gap; \
                 drop --sigma-z2/--C-file"
                    .into(),
            ));
        }
        let m = resolve_moments(&self.m, &self.m_file, ones_len, "--m")?
            .unwrap_or_else(|| vec![1.0; ones_len]);
        FluctuationSpec::new(MomentSequence::new(self.alpha, m)?, self.epsilon, kernel, self.sigma_d2)
    }

    fn doc(&self) -> Vec<(String, String)> {
        let mut d = vec![kv("alpha", self.alpha), kv("epsilon", self.epsilon)];
        if let Some(s) = self.sigma_z2 {
            d.push(kv("sigma-z2", s));
        }
        if let Some(f) = &self.c_file {
            d.push(kv("C-file", f.display()));
        }
        d.push(kv("sigma-d2", self.sigma_d2));
        if let Some(m) = &self.m {
            d.push(kv("m", m));
        }
        if let Some(f) = &self.m_file {
            d.push(kv("m-file", f.display()));
        }
        d
    }
}

#[derive(Debug, Args)]
pub struct FluctDArgs {
    /// First trace power.
    #[arg(long)]
    pub k: usize,
    /// Second trace power.
    #[arg(long)]
    pub l: usize,
    #[command(flatten)]
    pub spec: FluctSpecOpts,
    /// 'json'/'csv' for stdout or a file path ending in .json/.csv.
    #[arg(long, default_value = "csv")]
    pub out: String,
}

impl FluctDArgs {
    pub fn doc(&self) -> Vec<(String, String)> {
        let mut d = vec![kv("k", self.k), kv("l", self.l)];
        d.extend(self.spec.doc());
        d.push(kv("out", &self.out));
        d
    }
}

pub fn run_fluct_d(a: &FluctDArgs) -> Result<i32> {
    let target = emit::parse_target(&a.out)?;
    let spec = a.spec.build(a.k + a.l + 1)?;
    let value = cov_trace(a.k, a.l, &spec)?;
    let text = match target.format() {
        Format::Json => format!(
            "{{\n  \"k\": {},\n  \"l\": {},\n  \"value\": {}\n}}\n",
            a.k,
            a.l,
            json_num(value)
        ),
        Format::Csv => format!("k,l,value\n{},{},{}\n", a.k, a.l, csv_num(value)),
    };
    target.deliver(&text)?;
    Ok(0)
}

#[derive(Debug, Args)]
pub struct FluctSigmaArgs {
    /// Weights of x^1,x^2,.. as a comma list, e.g. "0,1,0,2" for x^2 + 2x^4.
    #[arg(long, allow_hyphen_values = true)]
    pub poly: String,
    #[command(flatten)]
    pub spec: FluctSpecOpts,
    /// 'json'/'csv' for stdout or a file path ending in .json/.csv.
    #[arg(long, default_value = "csv")]
    pub out: String,
}

impl FluctSigmaArgs {
    pub fn doc(&self) -> Vec<(String, String)> {
        let mut d = vec![kv("poly", &self.poly)];
        d.extend(self.spec.doc());
        d.push(kv("out", &self.out));
        d
    }
}

pub fn run_fluct_sigma(a: &FluctSigmaArgs) -> Result<i32> {
    let target = emit::parse_target(&a.out)?;
    let weights = parse_f64_list(&a.poly, "--poly")?;
    let spec = a.spec.build(2 * weights.len() + 1)?;
    let value = sigma_poly(&weights, &spec)?;
    deliver_scalar(&target, value)
}

// ---------------------------------------------------------------------------
// density

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LawArg {
    /// Continuous limit law of growing-entry ensembles.
    Ullman,
    /// Thinned limit law: atoms plus rescaled continuous blocks.
    Bernoulli,
}

impl LawArg {
    fn as_str(self) -> &'static str {
        match self {
            LawArg::Ullman => "ullman",
            LawArg::Bernoulli => "bernoulli",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum DensityVerb {
    /// Tabulate a limiting spectral density on a grid.
    Eval(DensityEvalArgs),
    /// Draw i.i.d. samples from a limiting spectral density.
    Sample(DensitySampleArgs),
}

#[derive(Debug, Args)]
pub struct DensityEvalArgs {
    /// Which limit law to evaluate.
    #[arg(long, value_enum)]
    pub law: LawArg,
    /// Growth exponent of the entry scale.
    #[arg(long)]
    pub alpha: f64,
    /// Retention probability; bernoulli only.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Evaluation grid lo:hi:n (n evenly spaced points, endpoints included).
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    /// 'json'/'csv' for stdout or a file path ending in .json/.csv.
    #[arg(long, default_value = "csv")]
    pub out: String,
}

impl DensityEvalArgs {
    pub fn doc(&self) -> Vec<(String, String)> {
        let mut d = vec![kv("law", self.law.as_str()), kv("alpha", self.alpha)];
        if let Some(t) = self.theta {
            d.push(kv("theta", t));
        }
        d.push(kv("grid", &self.grid));
        d.push(kv("out", &self.out));
        d
    }
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(Error::InvalidParameter(format!(
            "--grid must be lo:hi:n, got '{s}'"
        )));
    };
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("--grid: bad lower bound '{lo}'")))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("--grid: bad upper bound '{hi}'")))?;
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("--grid: bad point count '{n}'")))?;
    if n == 0 {
        return Err(Error::InvalidParameter("--grid needs at least one point".into()));
    }
    if n > 1 && hi <= lo {
        return Err(Error::InvalidParameter(format!(
            "--grid upper bound must exceed the lower bound, got {lo}:{hi}"
        )));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n).map(|i| lo + step * i as f64).collect())
}

fn render_xy(target: &Target, rows: &[(f64, f64)], y_name: &str) -> String {
    match target.format() {
        Format::Json => {
            if rows.is_empty() {
                return "[]\n".into();
            }
            let body: Vec<String> = rows
                .iter()
                .map(|(x, y)| format!("  [{}, {}]", json_num(*x), json_num(*y)))
                .collect();
            format!("[\n{}\n]\n", body.join(",\n"))
        }
        Format::Csv => {
            let mut s = format!("x,{y_name}\n");
            for (x, y) in rows {
                s.push_str(&format!("{},{}\n", csv_num(*x), csv_num(*y)));
            }
            s
        }
    }
}

pub fn run_density_eval(a: &DensityEvalArgs) -> Result<i32> {
    let target = emit::parse_target(&a.out)?;
    let xs = parse_grid(&a.grid)?;
    let rows: Vec<(f64, f64)> = match a.law {
        LawArg::Ullman => {
            if a.theta.is_some() {
                return Err(Error::InvalidParameter(
                    "--theta applies only to --law bernoulli".into(),
                ));
            }
            xs.iter()
                .map(|&x| {
                    let pdf = ullman_pdf(x, a.alpha)?;
                    if !pdf.is_finite() {
                        return Err(Error::Numerical(format!(
                            "the density is unbounded at x = {x}; exclude it from the grid"
                        )));
                    }
                    Ok((x, pdf))
                })
                .collect::<Result<_>>()?
        }
        LawArg::Bernoulli => {
            let theta = a.theta.ok_or_else(|| {
                Error::InvalidParameter("--law bernoulli requires --theta".into())
            })?;
            // Continuous part only; the atom at 0 carries weight
            // (1 - theta) / (1 + theta) and is reported by the library API.
            let mu = bernoulli_measure(theta, a.alpha, None)?;
            xs.iter().map(|&x| (x, mu.density(x))).collect()
        }
    };
    target.deliver(&render_xy(&target, &rows, "pdf"))?;
    Ok(0)
}

#[derive(Debug, Args)]
pub struct DensitySampleArgs {
    /// Which limit law to sample (only ullman has a sampler).
    #[arg(long, value_enum, default_value_t = LawArg::Ullman)]
    pub law: LawArg,
    /// Growth exponent of the entry scale.
    #[arg(long)]
    pub alpha: f64,
    /// Number of draws.
    #[arg(long)]
    pub n: usize,
    /// Deterministic stream seed.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// 'json'/'csv' for stdout or a file path ending in .json/.csv.
    #[arg(long, default_value = "csv")]
    pub out: String,
}

impl DensitySampleArgs {
    pub fn doc(&self) -> Vec<(String, String)> {
        vec![
            kv("law", self.law.as_str()),
            kv("alpha", self.alpha),
            kv("n", self.n),
            kv("seed", self.seed),
            kv("out", &self.out),
        ]
    }
}

pub fn run_density_sample(a: &DensitySampleArgs) -> Result<i32> {
    let target = emit::parse_target(&a.out)?;
    if a.law != LawArg::Ullman {
        return Err(Error::InvalidParameter(
            "sampling is implemented for the ullman law only".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let draws: Vec<f64> = (0..a.n)
        .map(|_| ullman_sample(a.alpha, &mut rng))
        .collect::<Result<_>>()?;
    let text = match target.format() {
        Format::Json => {
            if draws.is_empty() {
                "[]\n".into()
            } else {
                let body: Vec<String> =
                    draws.iter().map(|x| format!("  {}", json_num(*x))).collect();
                format!("[\n{}\n]\n", body.join(",\n"))
            }
        }
        Format::Csv => {
            let mut s = String::from("x\n");
            for x in &draws {
                s.push_str(&csv_num(*x));
                s.push('\n');
            }
            s
        }
    };
    target.deliver(&text)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// sim

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    /// Chi off-diagonals, Gaussian diagonal of variance 2/beta.
    BetaHermite,
    /// b_k = k^alpha (1 + Z_k / k^epsilon) with Gaussian Z.
    Power,
    /// b_k = k^alpha Bernoulli(theta).
    Bernoulli,
}

impl Model {
    fn as_str(self) -> &'static str {
        match self {
            Model::BetaHermite => "beta-hermite",
            Model::Power => "power",
            Model::Bernoulli => "bernoulli",
        }
    }
}

/// Ensemble selection shared by the sim verbs.
#[derive(Debug, Args)]
pub struct ModelOpts {
    /// Ensemble family.
    #[arg(long, value_enum)]
    pub model: Model,
    /// Inverse temperature; beta-hermite only.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Growth exponent; power and bernoulli only.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Perturbation decay rate; power only.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Perturbation standard deviation; power only.
    #[arg(long)]
    pub sigma_z: Option<f64>,
    /// Retention probability; bernoulli only.
    #[arg(long)]
    pub theta: Option<f64>,
}

impl ModelOpts {
    fn forbid(&self, flag: &str, present: bool) -> Result<()> {
        if present {
            Err(Error::InvalidParameter(format!(
                "--{flag} does not apply to the {} model",
                self.model.as_str()
            )))
        } else {
            Ok(())
        }
    }

    fn require<T: Copy>(&self, flag: &str, v: &Option<T>) -> Result<T> {
        v.ok_or_else(|| {
            Error::InvalidParameter(format!(
                "the {} model requires --{flag}",
                self.model.as_str()
            ))
        })
    }

    pub fn build(&self) -> Result<EnsembleSpec> {
        match self.model {
            Model::BetaHermite => {
                self.forbid("alpha", self.alpha.is_some())?;
                self.forbid("epsilon", self.epsilon.is_some())?;
                self.forbid("sigma-z", self.sigma_z.is_some())?;
                self.forbid("theta", self.theta.is_some())?;
                EnsembleSpec::beta_hermite(self.require("beta", &self.beta)?)
            }
            Model::Power => {
                self.forbid("beta", self.beta.is_some())?;
                self.forbid("theta", self.theta.is_some())?;
                EnsembleSpec::power_perturbed(
                    self.require("alpha", &self.alpha)?,
                    self.require("epsilon", &self.epsilon)?,
                    self.require("sigma-z", &self.sigma_z)?,
                )
            }
            Model::Bernoulli => {
                self.forbid("beta", self.beta.is_some())?;
                self.forbid("epsilon", self.epsilon.is_some())?;
                self.forbid("sigma-z", self.sigma_z.is_some())?;
                EnsembleSpec::bernoulli_scaled(
                    self.require("alpha", &self.alpha)?,
                    self.require("theta", &self.theta)?,
                )
            }
        }
    }

    /// Limiting entry moments implied by the model, m_0..m_(len-1).
    fn limit_moments(&self, len: usize) -> Result<MomentSequence> {
        let spec = self.build()?;
        let mut m = vec![1.0; len];
        if let Model::Bernoulli = self.model {
            let theta = self.theta.expect("validated by build");
            for v in m.iter_mut().skip(1) {
                *v = theta;
            }
        }
        MomentSequence::new(spec.scaling_alpha(), m)
    }

    /// Fluctuation spec implied by the model: kernel, rate, and diagonal
    /// variance consistent with what `build` samples.
    fn fluct_spec(&self, len: usize) -> Result<FluctuationSpec> {
        let ms = self.limit_moments(len)?;
        match self.model {
            Model::BetaHermite => {
                let beta = self.beta.expect("validated by build");
                FluctuationSpec::new(
                    ms,
                    0.5,
                    CovKernel::Perturbative {
                        sigma_z_sq: 1.0 / (2.0 * beta),
                    },
                    2.0 / beta,
                )
            }
            Model::Power => {
                let sigma_z = self.sigma_z.expect("validated by build");
                FluctuationSpec::new(
                    ms,
                    self.epsilon.expect("validated by build"),
                    CovKernel::Perturbative {
                        sigma_z_sq: sigma_z * sigma_z,
                    },
                    1.0,
                )
            }
            Model::Bernoulli => FluctuationSpec::new(ms, 0.0, CovKernel::MomentGap, 1.0),
        }
    }

    fn doc(&self) -> Vec<(String, String)> {
        let mut d = vec![kv("model", self.model.as_str())];
        if let Some(b) = self.beta {
            d.push(kv("beta", b));
        }
        if let Some(a) = self.alpha {
            d.push(kv("alpha", a));
        }
        if let Some(e) = self.epsilon {
            d.push(kv("epsilon", e));
        }
        if let Some(s) = self.sigma_z {
            d.push(kv("sigma-z", s));
        }
        if let Some(t) = self.theta {
            d.push(kv("theta", t));
        }
        d
    }
}

#[derive(Debug, Subcommand)]
pub enum SimVerb {
    /// Monte Carlo trace moments against their predicted limits.
    Moments(SimMomentsArgs),
    /// Monte Carlo trace-fluctuation covariance against predictions.
    Fluct(SimFluctArgs),
    /// Monte Carlo band-matrix moments against predicted limits.
    Band(SimBandArgs),
    /// Draw one matrix and export it as JSON diag/offdiag arrays.
    Sample(SimSampleArgs),
}

fn deliver_sim_rows(
    target: &Target,
    command: &str,
    inputs: &[(String, String)],
    wall: f64,
    rows: &[SimRow],
) -> Result<i32> {
    let text = match (target.format(), target.is_file()) {
        (Format::Csv, _) => emit::sim_rows_csv(rows),
        (Format::Json, false) => format!("{}\n", emit::sim_rows_json(rows, 0)),
        (Format::Json, true) => {
            emit::report_json(command, inputs, wall, &emit::sim_rows_json(rows, 2))
        }
    };
    target.deliver(&text)?;
    Ok(0)
}

#[derive(Debug, Args)]
pub struct SimMomentsArgs {
    #[command(flatten)]
    pub model: ModelOpts,
    /// Matrix dimension.
    #[arg(long)]
    pub n: usize,
    /// Largest trace power.
    #[arg(long, default_value_t = 8)]
    pub k_max: usize,
    /// Number of independent replicates.
    #[arg(long)]
    pub reps: usize,
    /// Deterministic stream seed.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// 'json'/'csv' for stdout or a file path ending in .json/.csv.
    #[arg(long, default_value = "csv")]
    pub out: String,
}

impl SimMomentsArgs {
    pub fn doc(&self) -> Vec<(String, String)> {
        let mut d = self.model.doc();
        d.push(kv("n", self.n));
        d.push(kv("k-max", self.k_max));
        d.push(kv("reps", self.reps));
        d.push(kv("seed", self.seed));
        d.push(kv("out", &self.out));
        d
    }
}

pub fn run_sim_moments(a: &SimMomentsArgs) -> Result<i32> {
    let target = emit::parse_target(&a.out)?;
    let spec = a.model.build()?;
    let ms = a.model.limit_moments(a.k_max + 1)?;
    let t0 = Instant::now();
    let estimates = mc_moments(&spec, a.n, a.k_max, a.reps, a.seed)?;
    let wall = t0.elapsed().as_secs_f64();
    let rows: Vec<SimRow> = estimates
        .iter()
        .map(|e| {
            let predicted = limit_moment(e.k, &ms)?;
            Ok(SimRow {
                k: e.k,
                estimate: e.mean,
                stderr: e.std_err,
                predicted,
                z_score: z_score(e.mean - predicted, e.std_err),
            })
        })
        .collect::<Result<_>>()?;
    deliver_sim_rows(&target, "sim moments", &a.doc(), wall, &rows)
}

#[derive(Debug, Args)]
pub struct SimFluctArgs {
    #[command(flatten)]
    pub model: ModelOpts,
    /// Matrix dimension.
    #[arg(long)]
    pub n: usize,
    /// Trace powers whose joint fluctuations are estimated.
    #[arg(long, default_value = "2,3,4")]
    pub orders: String,
    /// Number of independent replicates (at least 100).
    #[arg(long)]
    pub reps: usize,
    /// Deterministic stream seed.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// 'json'/'csv' for stdout or a file path ending in .json/.csv.
    #[arg(long, default_value = "csv")]
    pub out: String,
}

impl SimFluctArgs {
    pub fn doc(&self) -> Vec<(String, String)> {
        let mut d = self.model.doc();
        d.push(kv("n", self.n));
        d.push(kv("orders", &self.orders));
        d.push(kv("reps", self.reps));
        d.push(kv("seed", self.seed));
        d.push(kv("out", &self.out));
        d
    }
}

pub fn run_sim_fluct(a: &SimFluctArgs) -> Result<i32> {
    let target = emit::parse_target(&a.out)?;
    let orders = parse_usize_list(&a.orders, "--orders")?;
    let spec = a.model.build()?;
    let k_max = orders.iter().copied().max().unwrap_or(0);
    let fspec = a.model.fluct_spec(2 * k_max + 1)?;
    let predicted: Vec<Vec<f64>> = orders
        .iter()
        .map(|&k| orders.iter().map(|&l| cov_trace(k, l, &fspec)).collect())
        .collect::<Result<_>>()?;
    let t0 = Instant::now();
    let est = mc_fluctuations(&spec, a.n, &orders, a.reps, a.seed)?;
    let wall = t0.elapsed().as_secs_f64();
    // Diagonal rows in the simulation schema; the standard error of a sample
    // covariance c_ij is sqrt((c_ii c_jj + c_ij^2) / reps).
    let rows: Vec<SimRow> = orders
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let c = est.covariance[i][i];
            let se = (2.0 * c * c / est.reps as f64).sqrt();
            SimRow {
                k,
                estimate: c,
                stderr: se,
                predicted: predicted[i][i],
                z_score: z_score(c - predicted[i][i], se),
            }
        })
        .collect();
    match target.format() {
        Format::Csv => {
            target.deliver(&emit::sim_rows_csv(&rows))?;
        }
        Format::Json => {
            let indent = if target.is_file() { 2 } else { 0 };
            let pad = " ".repeat(indent);
            let orders_text: Vec<String> = orders.iter().map(|k| k.to_string()).collect();
            let body = format!(
                "{{\n{pad}  \"orders\": [{}],\n{pad}  \"reps\": {},\n{pad}  \"covariance\": {},\n{pad}  \"predicted\": {},\n{pad}  \"skewness\": {},\n{pad}  \"excess_kurtosis\": {},\n{pad}  \"rows\": {}\n{pad}}}",
                orders_text.join(", "),
                est.reps,
                emit::json_matrix(&est.covariance, indent + 2),
                emit::json_matrix(&predicted, indent + 2),
                emit::json_vector(&est.skewness),
                emit::json_vector(&est.excess_kurtosis),
                emit::sim_rows_json(&rows, indent + 2),
            );
            let text = if target.is_file() {
                emit::report_json("sim fluct", &a.doc(), wall, &body)
            } else {
                format!("{body}\n")
            };
            target.deliver(&text)?;
        }
    }
    Ok(0)
}

#[derive(Debug, Args)]
pub struct SimBandArgs {
    /// One band diagonal ALPHA[:det | :bern:THETA | :gauss:STD], repeated
    /// from the main diagonal outward; the half-width is the count minus 1.
    #[arg(long = "diag", value_name = "SPEC")]
    pub diag: Vec<String>,
    /// Matrix dimension.
    #[arg(long)]
    pub n: usize,
    /// Trace powers to estimate.
    #[arg(long, default_value = "2,4")]
    pub orders: String,
    /// Number of independent replicates.
    #[arg(long)]
    pub reps: usize,
    /// Deterministic stream seed.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// 'json'/'csv' for stdout or a file path ending in .json/.csv.
    #[arg(long, default_value = "csv")]
    pub out: String,
}

impl SimBandArgs {
    pub fn doc(&self) -> Vec<(String, String)> {
        let mut d: Vec<(String, String)> =
            self.diag.iter().map(|s| kv("diag", s)).collect();
        d.push(kv("n", self.n));
        d.push(kv("orders", &self.orders));
        d.push(kv("reps", self.reps));
        d.push(kv("seed", self.seed));
        d.push(kv("out", &self.out));
        d
    }
}

fn parse_band_diag(s: &str) -> Result<BandDiagonalSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    let alpha: f64 = parts[0].trim().parse().map_err(|_| {
        Error::InvalidParameter(format!("band diagonal '{s}': bad exponent '{}'", parts[0]))
    })?;
    let entry = match &parts[1..] {
        [] | ["det"] => BandEntry::Deterministic,
        ["bern", t] => BandEntry::Bernoulli {
            theta: t.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("band diagonal '{s}': bad theta '{t}'"))
            })?,
        },
        ["gauss", sd] => BandEntry::Gaussian {
            std_dev: sd.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("band diagonal '{s}': bad std '{sd}'"))
            })?,
        },
        _ => {
            return Err(Error::InvalidParameter(format!(
                "band diagonal '{s}': expected ALPHA[:det | :bern:THETA | :gauss:STD]"
            )))
        }
    };
    Ok(BandDiagonalSpec { alpha, entry })
}

/// Moments of the entry noise, m_0..m_(len-1).
fn entry_moments(entry: BandEntry, len: usize) -> Vec<f64> {
    let mut m = vec![1.0; len];
    match entry {
        BandEntry::Deterministic => {}
        BandEntry::Bernoulli { theta } => {
            for v in m.iter_mut().skip(1) {
                *v = theta;
            }
        }
        BandEntry::Gaussian { std_dev } => {
            let s2 = std_dev * std_dev;
            for (j, v) in m.iter_mut().enumerate().skip(1) {
                *v = if j % 2 == 1 {
                    0.0
                } else {
                    // E[N(0, s^2)^j] = (j-1)!! s^j for even j.
                    let mut acc = 1.0;
                    let mut i = 1;
                    while i < j {
                        acc *= i as f64;
                        i += 2;
                    }
                    acc * s2.powi(j as i32 / 2)
                };
            }
        }
    }
    m
}

pub fn run_sim_band(a: &SimBandArgs) -> Result<i32> {
    let target = emit::parse_target(&a.out)?;
    if a.diag.is_empty() {
        return Err(Error::InvalidParameter(
            "give at least the main diagonal via --diag".into(),
        ));
    }
    let specs: Vec<BandDiagonalSpec> = a
        .diag
        .iter()
        .map(|s| parse_band_diag(s))
        .collect::<Result<_>>()?;
    let orders = parse_usize_list(&a.orders, "--orders")?;
    let k_max = orders.iter().copied().max().unwrap_or(0);
    let w = specs.len() - 1;
    let per_diagonal: Vec<DiagonalMoments> = specs
        .iter()
        .map(|s| DiagonalMoments {
            alpha: s.alpha,
            m: entry_moments(s.entry, k_max + 1),
        })
        .collect();
    let t0 = Instant::now();
    let estimates = mc_band_moments(&specs, a.n, &orders, a.reps, a.seed)?;
    let wall = t0.elapsed().as_secs_f64();
    let rows: Vec<SimRow> = estimates
        .iter()
        .map(|e| {
            let predicted = band_limit_moment(e.k, w, &per_diagonal)?;
            Ok(SimRow {
                k: e.k,
                estimate: e.mean,
                stderr: e.std_err,
                predicted,
                z_score: z_score(e.mean - predicted, e.std_err),
            })
        })
        .collect::<Result<_>>()?;
    deliver_sim_rows(&target, "sim band", &a.doc(), wall, &rows)
}

#[derive(Debug, Args)]
pub struct SimSampleArgs {
    #[command(flatten)]
    pub model: ModelOpts,
    /// Matrix dimension.
    #[arg(long)]
    pub n: usize,
    /// Deterministic stream seed.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// 'json' for stdout or a file path ending in .json.
    #[arg(long, default_value = "json")]
    pub out: String,
}

impl SimSampleArgs {
    pub fn doc(&self) -> Vec<(String, String)> {
        let mut d = self.model.doc();
        d.push(kv("n", self.n));
        d.push(kv("seed", self.seed));
        d.push(kv("out", &self.out));
        d
    }
}

pub fn run_sim_sample(a: &SimSampleArgs) -> Result<i32> {
    let target = emit::parse_target(&a.out)?;
    if target.format() == Format::Csv {
        return Err(Error::InvalidParameter(
            "matrices export as JSON; use --out json or a .json path".into(),
        ));
    }
    let spec = a.model.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let t = spec.sample(a.n, &mut rng)?;
    let text = format!(
        "{{\n  \"diag\": {},\n  \"offdiag\": {}\n}}\n",
        emit::json_vector(t.diag()),
        emit::json_vector(t.offdiag())
    );
    target.deliver(&text)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// verify

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    /// Shrunk sizes, completing well under a minute.
    Quick,
    /// Full desk-scale sizes.
    Default,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Scale {
        match s {
            ScaleArg::Quick => Scale::Quick,
            ScaleArg::Default => Scale::Default,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MutationArg {
    /// No fault injection.
    None,
    /// Skew the predicted limits' normalizer; the moment criteria must fail.
    WrongLimitNormalizer,
}

impl From<MutationArg> for Mutation {
    fn from(m: MutationArg) -> Mutation {
        match m {
            MutationArg::None => Mutation::None,
            MutationArg::WrongLimitNormalizer => Mutation::WrongLimitNormalizer,
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Problem sizes for the stochastic criteria.
    #[arg(long, value_enum, default_value_t = ScaleArg::Default)]
    pub scale: ScaleArg,
    /// Seed shared by every stochastic criterion.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Deliberate fault injection for testing the harness itself.
    #[arg(long, value_enum, default_value_t = MutationArg::None)]
    pub mutate: MutationArg,
    /// Optional machine report: 'json' for stdout or a .json file path.
    #[arg(long)]
    pub out: Option<String>,
}

impl VerifyArgs {
    pub fn doc(&self) -> Vec<(String, String)> {
        let scale = match self.scale {
            ScaleArg::Quick => "quick",
            ScaleArg::Default => "default",
        };
        let mutate = match self.mutate {
            MutationArg::None => "none",
            MutationArg::WrongLimitNormalizer => "wrong-limit-normalizer",
        };
        let mut d = vec![kv("scale", scale), kv("seed", self.seed), kv("mutate", mutate)];
        if let Some(out) = &self.out {
            d.push(kv("out", out));
        }
        d
    }
}

fn render_verify(r: &VerifyReport) -> String {
    let mut s = String::new();
    for c in &r.criteria {
        s.push_str(&format!(
            "criterion {}: {} ({} checks)\n",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.checks.len()
        ));
        for ch in c.checks.iter().filter(|ch| !ch.passed) {
            s.push_str(&format!(
                "  FAIL {}: predicted {:.9e} observed {:.9e} delta {:.3e} tolerance {:.3e}\n",
                ch.label, ch.predicted, ch.observed, ch.delta, ch.tolerance
            ));
        }
    }
    let passed = r.criteria.iter().filter(|c| c.passed).count();
    s.push_str(&format!(
        "verify ({}): {}/{} criteria passed in {:.1} s (scale={}, seed={})\n",
        r.version,
        passed,
        r.criteria.len(),
        r.wall_secs,
        r.scale,
        r.seed
    ));
    s
}

pub fn run_verify(a: &VerifyArgs) -> Result<i32> {
    let report = verify::run_with_mutation(a.scale.into(), a.seed, a.mutate.into());
    let mut human_stdout = true;
    if let Some(out) = &a.out {
        let target = emit::parse_target(out)?;
        if target.format() == Format::Csv {
            return Err(Error::InvalidParameter(
                "the verification report serializes as JSON; use --out json or a .json path"
                    .into(),
            ));
        }
        let json = serde_json::to_string_pretty(&report).map_err(|e| {
            Error::Numerical(format!("cannot serialize the verification report: {e}"))
        })?;
        match &target {
            Target::Stdout(_) => {
                println!("{json}");
                human_stdout = false;
            }
            Target::File(path, _) => emit::write_file(path, &format!("{json}\n"))?,
        }
    }
    if human_stdout {
        print!("{}", render_verify(&report));
    }
    Ok(if report.passed { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
