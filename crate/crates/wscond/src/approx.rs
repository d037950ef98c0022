//! Karp-Luby style (ε, δ)-approximation of confidence.
//!
//! One trial samples a descriptor `d` with probability `P(d)/U` where
//! `U = Σ P(d')`, samples a world from `ω(d)`, and returns `U` if `d` is
//! the canonically first descriptor covering that world (0 otherwise).
//! The trial is unbiased for the exact confidence, and since it is a
//! scaled Bernoulli draw, estimating the confidence reduces to estimating
//! the hit rate.
//!
//! The default driver is a two-phase scheme in the stopping-rule family:
//! a pilot phase samples until enough hits accumulate to pin down the hit
//! rate (and with it the trial variance), then a main phase of a computed
//! length produces the returned estimate. The main-phase length is capped
//! by the classical fixed bound `⌈4·m·ln(2/δ)/ε²⌉`, which is also
//! available verbatim as the fixed mode. Trials are consumed in fixed
//! chunks of a counter-based RNG, so results are identical no matter how
//! many worker threads run the main phase.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::model::{WorldTable, WsDescriptor, WsSet};

/// Identifier of the pseudo-random generator, reported in CLI metadata.
pub const RNG_ALGORITHM: &str = "chacha12";

const CHUNK: u64 = 4096;

#[derive(Debug, Clone)]
pub struct KlOptions {
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    /// Use the fixed iteration bound instead of the adaptive two-phase
    /// scheme.
    pub fixed: bool,
    /// Worker threads for the main phase (1 = sequential).
    pub threads: usize,
}

impl KlOptions {
    pub fn new(epsilon: f64, delta: f64, seed: u64) -> KlOptions {
        KlOptions {
            epsilon,
            delta,
            seed,
            fixed: false,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlOutcome {
    pub estimate: f64,
    pub iterations: u64,
}

/// Shared per-instance state for trials: descriptor weights and lazy
/// world-sampling buffers.
pub struct KlSampler<'a> {
    table: &'a WorldTable,
    descriptors: &'a [WsDescriptor],
    /// Cumulative descriptor weights.
    cumulative: Vec<f64>,
    total: f64,
    /// Lazily sampled value per variable, validity tracked by epoch.
    values: Vec<u32>,
    stamps: Vec<u64>,
    epoch: u64,
}

impl<'a> KlSampler<'a> {
    pub fn new(s: &'a WsSet, table: &'a WorldTable) -> Result<KlSampler<'a>> {
        s.validate(table)?;
        let mut cumulative = Vec::with_capacity(s.len());
        let mut total = 0.0;
        for d in s {
            total += d.probability_unchecked(table);
            cumulative.push(total);
        }
        Ok(KlSampler {
            table,
            descriptors: s.descriptors(),
            cumulative,
            total,
            values: vec![0; table.num_vars()],
            stamps: vec![0; table.num_vars()],
            epoch: 0,
        })
    }

    /// Sum of the descriptor probabilities (the trial scale).
    pub fn total_weight(&self) -> f64 {
        self.total
    }

    #[inline]
    fn value_of<R: Rng>(&mut self, var: usize, rng: &mut R) -> u32 {
        if self.stamps[var] != self.epoch {
            self.stamps[var] = self.epoch;
            let probs = self.table.probs(crate::model::VariableId(var as u32));
            let mut u: f64 = rng.gen::<f64>();
            let mut code = probs.len() - 1;
            for (i, p) in probs.iter().enumerate() {
                if u < *p {
                    code = i;
                    break;
                }
                u -= p;
            }
            self.values[var] = code as u32;
        }
        self.values[var]
    }

    /// One estimator draw: `U` on a hit, 0 otherwise. Unbiased for the
    /// exact confidence of the ws-set.
    pub fn trial<R: Rng>(&mut self, rng: &mut R) -> f64 {
        if self.descriptors.is_empty() || self.total <= 0.0 {
            return 0.0;
        }
        self.epoch += 1;
        // pick a descriptor proportional to its probability
        let target = rng.gen::<f64>() * self.total;
        let chosen = self.cumulative.partition_point(|&c| c <= target);
        let chosen = chosen.min(self.descriptors.len() - 1);
        // pin its assignments, then sample the rest of the world lazily
        for a in self.descriptors[chosen].iter() {
            self.values[a.var.index()] = a.value;
            self.stamps[a.var.index()] = self.epoch + 1;
        }
        self.epoch += 1;
        // a hit iff no earlier descriptor covers the sampled world
        for d in &self.descriptors[..chosen] {
            let covered = d
                .iter()
                .all(|a| self.value_of(a.var.index(), rng) == a.value);
            if covered {
                return 0.0;
            }
        }
        self.total
    }

    fn run_chunk(&mut self, seed: u64, stream: u64, trials: u64) -> u64 {
        let mut rng = chunk_rng(seed, stream);
        let mut hits = 0;
        for _ in 0..trials {
            if self.trial(&mut rng) > 0.0 {
                hits += 1;
            }
        }
        hits
    }
}

fn chunk_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One estimator draw over a fresh sampler (unbiasedness tests drive the
/// sampler directly to avoid the setup cost per trial).
pub fn kl_trial<R: Rng>(s: &WsSet, table: &WorldTable, rng: &mut R) -> Result<f64> {
    Ok(KlSampler::new(s, table)?.trial(rng))
}

/// Run `n` main-phase trials split into deterministic chunks, optionally
/// in parallel. Hit counts are integers, so the result does not depend on
/// thread count or scheduling.
fn run_main_phase(
    s: &WsSet,
    table: &WorldTable,
    seed: u64,
    first_stream: u64,
    n: u64,
    threads: usize,
) -> Result<u64> {
    let chunks: Vec<(u64, u64)> = (0..n.div_ceil(CHUNK))
        .map(|i| (first_stream + i, CHUNK.min(n - i * CHUNK)))
        .collect();
    let run_one = |&(stream, trials): &(u64, u64)| -> Result<u64> {
        let mut sampler = KlSampler::new(s, table)?;
        Ok(sampler.run_chunk(seed, stream, trials))
    };
    let hits: Result<Vec<u64>> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
        pool.install(|| chunks.par_iter().map(run_one).collect())
    } else {
        chunks.iter().map(run_one).collect()
    };
    Ok(hits?.iter().sum())
}

/// (ε, δ)-approximation of the confidence of a nonempty ws-set:
/// `Pr[|c - ĉ| ≤ ε·c] ≥ 1 - δ`. Deterministic given the seed; the budget
/// is charged per trial (sequential phases only poll it there, the
/// parallel main phase is pre-charged).
pub fn karp_luby_confidence(
    s: &WsSet,
    table: &WorldTable,
    opts: &KlOptions,
    budget: &mut Budget,
) -> Result<KlOutcome> {
    if !(opts.epsilon > 0.0 && opts.epsilon < 1.0) {
        return Err(Error::Invalid(format!(
            "epsilon must be in (0,1), got {}",
            opts.epsilon
        )));
    }
    if !(opts.delta > 0.0 && opts.delta < 1.0) {
        return Err(Error::Invalid(format!(
            "delta must be in (0,1), got {}",
            opts.delta
        )));
    }
    let m = s.len();
    if m == 0 {
        return Ok(KlOutcome {
            estimate: 0.0,
            iterations: 0,
        });
    }
    let mut sampler = KlSampler::new(s, table)?;
    let total = sampler.total_weight();
    if total <= 0.0 {
        return Ok(KlOutcome {
            estimate: 0.0,
            iterations: 0,
        });
    }
    let eps = opts.epsilon;
    let fixed_bound = (4.0 * m as f64 * (2.0 / opts.delta).ln() / (eps * eps)).ceil() as u64;

    if opts.fixed {
        charge_trials(budget, fixed_bound)?;
        let hits = run_main_phase(s, table, opts.seed, 1, fixed_bound, opts.threads)?;
        return Ok(KlOutcome {
            estimate: total * hits as f64 / fixed_bound as f64,
            iterations: fixed_bound,
        });
    }

    // Pilot phase: a stopping rule on stream 0. Failure probability is
    // split δ/2 to each phase.
    let delta_half = opts.delta / 2.0;
    let lambda = 4.0 * (std::f64::consts::E - 2.0) * (2.0 / delta_half).ln() / (eps * eps);
    let hits_target = (1.0 + (1.0 + eps) * lambda).ceil() as u64;
    let mut rng = chunk_rng(opts.seed, 0);
    let mut pilot_trials = 0u64;
    let mut pilot_hits = 0u64;
    while pilot_hits < hits_target && pilot_trials < fixed_bound {
        budget.charge()?;
        pilot_trials += 1;
        if sampler.trial(&mut rng) > 0.0 {
            pilot_hits += 1;
        }
    }
    if pilot_hits < hits_target {
        // hit rate so low that the classical bound is the cheaper
        // guarantee; the pilot already ran that many trials
        return Ok(KlOutcome {
            estimate: total * pilot_hits as f64 / pilot_trials as f64,
            iterations: pilot_trials,
        });
    }
    let rate = pilot_hits as f64 / pilot_trials as f64;
    // Main phase: Bernoulli variance rate·(1-rate) from the pilot gives
    // the trial count; never more than the classical bound.
    let main_trials = (2.0 * lambda * (1.0 - rate).max(eps) / rate).ceil() as u64;
    let main_trials = main_trials.clamp(1, fixed_bound);
    charge_trials(budget, main_trials)?;
    let hits = run_main_phase(s, table, opts.seed, 1, main_trials, opts.threads)?;
    Ok(KlOutcome {
        estimate: total * hits as f64 / main_trials as f64,
        iterations: pilot_trials + main_trials,
    })
}

fn charge_trials(budget: &mut Budget, n: u64) -> Result<()> {
    for _ in 0..n {
        budget.charge()?;
    }
    Ok(())
}
