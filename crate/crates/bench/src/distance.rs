//! One fixed query against `n` random codes: Hamming distance, projected
//! Hamming dissimilarity over stored negated codes, and the inner product of
//! `m`-float vectors.

use std::fmt;
use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use hashcf_core::bitcode::kernels::{hamming_words, phd_fast_words};
use hashcf_core::bitcode::{tail_mask, words_for};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{BenchError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    Hamming,
    Phd,
    InnerProduct,
}

impl Kernel {
    pub const ALL: [Kernel; 3] = [Kernel::Hamming, Kernel::Phd, Kernel::InnerProduct];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Hamming => "hamming",
            Kernel::Phd => "phd",
            Kernel::InnerProduct => "inner-product",
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Kernel::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| BenchError::InvalidInput(format!("unknown kernel {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceConfig {
    pub n: usize,
    pub m: usize,
    pub reps: usize,
    pub seed: u64,
    pub kernels: Vec<Kernel>,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        Self {
            n: 10_000_000,
            m: 64,
            reps: 100,
            seed: 0,
            kernels: Kernel::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub kernel: Kernel,
    pub n: usize,
    pub m: usize,
    pub reps: usize,
    pub mean_seconds: f64,
    /// Relative to the Hamming kernel, in percent; `None` when Hamming was
    /// not run.
    pub overhead_pct: Option<f64>,
    /// Spread of the per-rep times, to spot reps hit by preemption.
    pub median_seconds: f64,
    pub max_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checksum {
    pub kernel: Kernel,
    pub optimized: f64,
    pub reference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildInfo {
    pub arch: String,
    pub debug_assertions: bool,
    pub popcnt: bool,
}

impl BuildInfo {
    pub fn current() -> Self {
        Self {
            arch: std::env::consts::ARCH.to_owned(),
            debug_assertions: cfg!(debug_assertions),
            popcnt: has_popcnt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceBench {
    pub config: DistanceConfig,
    pub results: Vec<BenchResult>,
    pub checksums: Vec<Checksum>,
    pub build: BuildInfo,
}

impl DistanceBench {
    pub fn result(&self, kernel: Kernel) -> Option<&BenchResult> {
        self.results.iter().find(|r| r.kernel == kernel)
    }

    /// `kernel,n,m,reps,mean_seconds,overhead_pct`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kernel,n,m,reps,mean_seconds,overhead_pct\n");
        for r in &self.results {
            let overhead = r.overhead_pct.map(|o| format!("{o:.1}")).unwrap_or_default();
            out += &format!("{},{},{},{},{:.9},{}\n", r.kernel, r.n, r.m, r.reps, r.mean_seconds, overhead);
        }
        out
    }
}

pub fn has_popcnt() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::arch::is_x86_feature_detected!("popcnt")
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

fn alloc<T: Clone + Default>(len: usize, what: &str) -> Result<Vec<T>> {
    let mut v = Vec::new();
    v.try_reserve_exact(len).map_err(|_| {
        BenchError::Resource(format!(
            "cannot allocate {what} ({len} x {} bytes); lower n",
            std::mem::size_of::<T>()
        ))
    })?;
    v.resize(len, T::default());
    Ok(v)
}

fn checked_len(n: usize, per: usize, what: &str) -> Result<usize> {
    n.checked_mul(per)
        .ok_or_else(|| BenchError::Resource(format!("{what}: {n} x {per} overflows; lower n")))
}

/// Single-word codes: four independent accumulators, so the loop body is
/// long enough that its placement in the binary stops mattering.
#[inline(always)]
fn one_word_loop(q: u64, codes: &[u64], op: impl Fn(u64, u64) -> u64) -> u64 {
    let mut acc = [0u64; 4];
    let chunks = codes.chunks_exact(4);
    let rest = chunks.remainder();
    for c in chunks {
        for l in 0..4 {
            acc[l] += op(q, c[l]).count_ones() as u64;
        }
    }
    let tail: u64 = rest.iter().map(|&c| op(q, c).count_ones() as u64).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline(always)]
fn hamming_loop(q: &[u64], codes: &[u64], stride: usize) -> u64 {
    if stride == 1 {
        return one_word_loop(q[0], codes, |a, b| a ^ b);
    }
    codes.chunks_exact(stride).map(|c| hamming_words(q, c) as u64).sum()
}

#[inline(always)]
fn phd_loop(q: &[u64], negated: &[u64], stride: usize) -> u64 {
    if stride == 1 {
        return one_word_loop(q[0], negated, |a, b| a & b);
    }
    negated.chunks_exact(stride).map(|c| phd_fast_words(q, c) as u64).sum()
}

#[cfg(target_arch = "x86_64")]
mod popcnt {
    #[target_feature(enable = "popcnt")]
    pub(super) unsafe fn hamming(q: &[u64], codes: &[u64], stride: usize) -> u64 {
        super::hamming_loop(q, codes, stride)
    }

    #[target_feature(enable = "popcnt")]
    pub(super) unsafe fn phd(q: &[u64], negated: &[u64], stride: usize) -> u64 {
        super::phd_loop(q, negated, stride)
    }
}

/// Sum of Hamming distances from `q` to every code.
pub fn hamming_checksum(q: &[u64], codes: &[u64], stride: usize) -> u64 {
    #[cfg(target_arch = "x86_64")]
    if has_popcnt() {
        // SAFETY: the CPU supports popcnt.
        return unsafe { popcnt::hamming(q, codes, stride) };
    }
    hamming_loop(q, codes, stride)
}

/// Sum of projected Hamming dissimilarities from `q` to every item, given
/// the negated item codes.
pub fn phd_checksum(q: &[u64], negated: &[u64], stride: usize) -> u64 {
    #[cfg(target_arch = "x86_64")]
    if has_popcnt() {
        // SAFETY: the CPU supports popcnt.
        return unsafe { popcnt::phd(q, negated, stride) };
    }
    phd_loop(q, negated, stride)
}

const LANES: usize = 8;

/// Dot product with eight interleaved accumulators.
#[inline(always)]
fn dot_lanes(q: &[f32], v: &[f32]) -> f32 {
    let mut acc = [0f32; LANES];
    for (qc, vc) in q.chunks_exact(LANES).zip(v.chunks_exact(LANES)) {
        for l in 0..LANES {
            acc[l] += qc[l] * vc[l];
        }
    }
    let body = q.len() / LANES * LANES;
    let mut tail = 0f32;
    for j in body..q.len() {
        tail += q[j] * v[j];
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Sum (in `f64`) of the inner products of `q` with every row.
pub fn inner_product_checksum(q: &[f32], rows: &[f32]) -> f64 {
    rows.chunks_exact(q.len()).map(|r| dot_lanes(q, r) as f64).sum()
}

/// Bit-by-bit references for the checksums.
pub mod reference {
    fn bit(words: &[u64], j: usize) -> bool {
        words[j / 64] >> (j % 64) & 1 == 1
    }

    pub fn hamming(q: &[u64], codes: &[u64], m: usize) -> u64 {
        let stride = q.len();
        let mut total = 0;
        for c in codes.chunks_exact(stride) {
            for j in 0..m {
                total += (bit(q, j) != bit(c, j)) as u64;
            }
        }
        total
    }

    /// Uses the original (not negated) item codes.
    pub fn phd(q: &[u64], items: &[u64], m: usize) -> u64 {
        let stride = q.len();
        let mut total = 0;
        for c in items.chunks_exact(stride) {
            for j in 0..m {
                total += (bit(q, j) && !bit(c, j)) as u64;
            }
        }
        total
    }

    /// Same lane assignment and reduction order as the optimized kernel,
    /// written as a plain indexed loop.
    pub fn inner_product(q: &[f32], rows: &[f32]) -> f64 {
        let d = q.len();
        let body = d / 8 * 8;
        let mut total = 0f64;
        for r in 0..rows.len() / d {
            let v = &rows[r * d..(r + 1) * d];
            let mut acc = [0f32; 8];
            for j in 0..body {
                acc[j % 8] += q[j] * v[j];
            }
            let mut tail = 0f32;
            for j in body..d {
                tail += q[j] * v[j];
            }
            let s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail;
            total += s as f64;
        }
        total
    }
}

struct Data {
    stride: usize,
    query: Vec<u64>,
    codes: Vec<u64>,
    negated: Vec<u64>,
    query_f: Vec<f32>,
    rows: Vec<f32>,
}

fn generate(cfg: &DistanceConfig) -> Result<Data> {
    let stride = words_for(cfg.m);
    let mask = tail_mask(cfg.m);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut random_code = |out: &mut [u64]| {
        for (w, slot) in out.iter_mut().enumerate() {
            let v: u64 = rng.random();
            *slot = if w + 1 == stride { v & mask } else { v };
        }
    };
    let mut query = vec![0u64; stride];
    random_code(&mut query);
    let needs_codes = cfg.kernels.iter().any(|k| *k != Kernel::InnerProduct);
    let len = if needs_codes { checked_len(cfg.n, stride, "codes")? } else { 0 };
    let mut codes: Vec<u64> = alloc(len, "codes")?;
    for c in codes.chunks_exact_mut(stride) {
        random_code(c);
    }
    let mut negated: Vec<u64> = alloc(len, "negated codes")?;
    for (k, (n, c)) in negated.iter_mut().zip(&codes).enumerate() {
        *n = if (k + 1) % stride == 0 { !c & mask } else { !c };
    }
    let flen = if cfg.kernels.contains(&Kernel::InnerProduct) {
        checked_len(cfg.n, cfg.m, "float vectors")?
    } else {
        0
    };
    let mut rows: Vec<f32> = alloc(flen, "float vectors")?;
    let mut frng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let query_f: Vec<f32> = (0..cfg.m).map(|_| frng.random_range(-1.0..1.0)).collect();
    for v in rows.iter_mut() {
        *v = frng.random_range(-1.0..1.0);
    }
    Ok(Data {
        stride,
        query,
        codes,
        negated,
        query_f,
        rows,
    })
}

/// With `flip` the complement set plays the items, so its negation is the
/// original array. Both code kernels then read each array equally often.
fn run(kernel: Kernel, d: &Data, flip: bool) -> f64 {
    let (items, negated) = if flip { (&d.negated, &d.codes) } else { (&d.codes, &d.negated) };
    match kernel {
        Kernel::Hamming => hamming_checksum(black_box(&d.query), black_box(items), d.stride) as f64,
        Kernel::Phd => phd_checksum(black_box(&d.query), black_box(negated), d.stride) as f64,
        Kernel::InnerProduct => inner_product_checksum(black_box(&d.query_f), black_box(&d.rows)),
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Times each kernel `reps` times, interleaving kernels within every rep.
/// Reps cycle through every kernel order, so each kernel runs after each
/// other one equally often, and alternate which array holds the items (see
/// [`run`]); on small machines memory placement alone moves a streaming
/// loop by several percent.
/// Only the distance loop is timed. Checksums are verified against the
/// bit-level references before timing.
fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

pub fn bench_distance(cfg: &DistanceConfig) -> Result<DistanceBench> {
    if cfg.n == 0 || cfg.reps == 0 {
        return Err(BenchError::InvalidInput("n and reps must be at least 1".into()));
    }
    if !(1..=hashcf_core::bitcode::MAX_BITS).contains(&cfg.m) {
        return Err(BenchError::InvalidInput(format!("bit length {} out of range", cfg.m)));
    }
    let mut kernels = cfg.kernels.clone();
    kernels.dedup();
    if kernels.is_empty() {
        return Err(BenchError::InvalidInput("no kernels selected".into()));
    }
    let data = generate(cfg)?;

    let mut checksums = Vec::new();
    for &k in &kernels {
        for flip in [false, true] {
            let items = if flip { &data.negated } else { &data.codes };
            let optimized = run(k, &data, flip);
            let reference = match k {
                Kernel::Hamming => reference::hamming(&data.query, items, cfg.m) as f64,
                Kernel::Phd => reference::phd(&data.query, items, cfg.m) as f64,
                Kernel::InnerProduct => reference::inner_product(&data.query_f, &data.rows),
            };
            if optimized.to_bits() != reference.to_bits() {
                return Err(BenchError::ChecksumMismatch {
                    kernel: k.name(),
                    optimized,
                    reference,
                });
            }
            if !flip {
                checksums.push(Checksum {
                    kernel: k,
                    optimized,
                    reference,
                });
            }
        }
    }

    let orders = permutations(kernels.len());
    let mut samples = vec![Vec::with_capacity(cfg.reps); kernels.len()];
    for rep in 0..cfg.reps {
        let flip = rep % 2 == 1;
        for &idx in &orders[(rep / 2) % orders.len()] {
            let start = Instant::now();
            let sum = run(kernels[idx], &data, flip);
            samples[idx].push(start.elapsed().as_secs_f64());
            black_box(sum);
        }
    }
    let means: Vec<f64> = samples
        .iter()
        .map(|s| (s.iter().sum::<f64>() / cfg.reps as f64).max(f64::MIN_POSITIVE))
        .collect();
    let hamming = kernels.iter().position(|k| *k == Kernel::Hamming).map(|i| means[i]);
    let results = kernels
        .iter()
        .zip(&means)
        .zip(&mut samples)
        .map(|((&kernel, &mean), s)| {
            s.sort_by(f64::total_cmp);
            BenchResult {
                kernel,
                n: cfg.n,
                m: cfg.m,
                reps: cfg.reps,
                mean_seconds: mean,
                overhead_pct: hamming.map(|h| if kernel == Kernel::Hamming { 0.0 } else { (mean / h - 1.0) * 100.0 }),
                median_seconds: median(s),
                max_seconds: s[s.len() - 1],
            }
        })
        .collect();
    Ok(DistanceBench {
        config: cfg.clone(),
        results,
        checksums,
        build: BuildInfo::current(),
    })
}
