//! Symbolic trace datasets labelled by the crisp oracle.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use log::warn;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tilr_core::crisp::trace_count;
use tilr_core::{enumerate_traces, satisfies, Alphabet, Formula, SymbolicTrace, TraceMode};

use crate::error::{Error, Result};

/// How traces are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    /// Every trace with length in `min_len..=max_len`; train and test use the
    /// same symbolic traces.
    Exhaustive,
    /// `total` traces drawn stratified by (length, label) and split evenly
    /// into train and test with no trace in both.
    Stratified,
    /// Every trace of length at most 4 split at random, a fraction to
    /// training and the rest to test, each split then brought to
    /// `total / 2` traces, by subsampling or by adding sampled longer traces.
    ShortExhaustiveSplit,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Exhaustive => "exhaustive",
            Protocol::Stratified => "stratified",
            Protocol::ShortExhaustiveSplit => "short-split",
        })
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(Protocol::Exhaustive),
            "stratified" => Ok(Protocol::Stratified),
            "short-split" => Ok(Protocol::ShortExhaustiveSplit),
            _ => Err(Error::Config(format!(
                "unknown protocol `{s}` (expected exhaustive|stratified|short-split)"
            ))),
        }
    }
}

/// Longest length whose traces [`Protocol::ShortExhaustiveSplit`] enumerates.
pub const SHORT_LEN: usize = 4;

/// Lengths with more traces than this are sampled rather than enumerated.
pub const ENUMERATION_LIMIT: u128 = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    pub n_atoms: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub mode: TraceMode,
    pub protocol: Protocol,
    /// Symbolic traces over both splits (ignored by `Exhaustive`).
    pub total: usize,
    /// Share of the short traces sent to training (`ShortExhaustiveSplit`).
    pub train_fraction: f64,
    pub seed: u64,
}

impl SamplingPlan {
    /// All traces of length 1 to 4.
    pub fn exhaustive(n_atoms: usize, mode: TraceMode, seed: u64) -> Self {
        SamplingPlan {
            n_atoms,
            min_len: 1,
            max_len: 4,
            mode,
            protocol: Protocol::Exhaustive,
            total: 0,
            train_fraction: 1.0,
            seed,
        }
    }

    /// 1000 traces, 500 per split: stratified from length 2 for
    /// mutually exclusive atoms, short-trace split with 20% to training
    /// otherwise.
    pub fn benchmark(n_atoms: usize, max_len: usize, mode: TraceMode, seed: u64) -> Self {
        SamplingPlan {
            n_atoms,
            min_len: if mode == TraceMode::Me { 2 } else { 1 },
            max_len,
            mode,
            protocol: match mode {
                TraceMode::Me => Protocol::Stratified,
                TraceMode::Nme => Protocol::ShortExhaustiveSplit,
            },
            total: 1000,
            train_fraction: 0.2,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_atoms == 0 || self.n_atoms > 10 {
            return Err(Error::Config(format!(
                "{} atoms: between 1 and 10 are supported (one digit per atom)",
                self.n_atoms
            )));
        }
        if self.min_len < 1 || self.min_len > self.max_len {
            return Err(Error::Config(format!(
                "length range {}..={} is empty or starts below 1",
                self.min_len, self.max_len
            )));
        }
        if self.protocol != Protocol::Exhaustive
            && (self.total < 2 || !self.total.is_multiple_of(2))
        {
            return Err(Error::Config(format!(
                "total {} must be a positive even number",
                self.total
            )));
        }
        if !(0.0..=1.0).contains(&self.train_fraction) {
            return Err(Error::Config("train fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelledTrace {
    pub trace: SymbolicTrace,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicDataset {
    pub train: Vec<LabelledTrace>,
    pub test: Vec<LabelledTrace>,
    /// Whether some split repeats traces because too few distinct ones exist.
    pub with_replacement: bool,
    pub warnings: Vec<String>,
}

impl SymbolicDataset {
    /// `(length, label) -> count` over one split.
    pub fn strata(traces: &[LabelledTrace]) -> BTreeMap<(usize, bool), usize> {
        let mut out = BTreeMap::new();
        for t in traces {
            *out.entry((t.trace.len(), t.label)).or_insert(0) += 1;
        }
        out
    }
}

struct Sampler<'a> {
    formula: &'a Formula,
    alphabet: &'a Alphabet,
    plan: &'a SamplingPlan,
    rng: ChaCha8Rng,
    warnings: Vec<String>,
}

type Pools = BTreeMap<(usize, bool), Vec<SymbolicTrace>>;

impl Sampler<'_> {
    fn warn(&mut self, message: String) {
        warn!("{message}");
        self.warnings.push(message);
    }

    fn label(&self, trace: SymbolicTrace) -> Result<LabelledTrace> {
        let label = satisfies(&trace, self.alphabet, self.formula)?;
        Ok(LabelledTrace { trace, label })
    }

    fn random_trace(&mut self, len: usize) -> SymbolicTrace {
        let choices = self.plan.mode.instant_choices(self.plan.n_atoms);
        let masks = (0..len)
            .map(|_| choices[self.rng.gen_range(0..choices.len())])
            .collect();
        SymbolicTrace::from_masks(masks).expect("non-empty trace")
    }

    /// Distinct traces per (length, label). Lengths too long to enumerate
    /// are sampled until each label has `want` traces or the attempts run out.
    fn pools(&mut self, lengths: std::ops::RangeInclusive<usize>, want: usize) -> Result<Pools> {
        let (n_atoms, mode) = (self.plan.n_atoms, self.plan.mode);
        let mut pools = Pools::new();
        for len in lengths {
            pools.entry((len, false)).or_default();
            pools.entry((len, true)).or_default();
            if trace_count(n_atoms, len, mode) <= ENUMERATION_LIMIT {
                for trace in enumerate_traces(n_atoms, len, len, mode) {
                    let t = self.label(trace)?;
                    pools.get_mut(&(len, t.label)).expect("entry").push(t.trace);
                }
            } else {
                let mut seen = HashSet::new();
                let attempts = 200 * want.max(1);
                for _ in 0..attempts {
                    let done =
                        pools[&(len, false)].len() >= want && pools[&(len, true)].len() >= want;
                    if done {
                        break;
                    }
                    let trace = self.random_trace(len);
                    if !seen.insert(trace.clone()) {
                        continue;
                    }
                    let t = self.label(trace)?;
                    let pool = pools.get_mut(&(len, t.label)).expect("entry");
                    if pool.len() < want {
                        pool.push(t.trace);
                    }
                }
            }
        }
        for pool in pools.values_mut() {
            pool.shuffle(&mut self.rng);
        }
        let empty: Vec<(usize, bool)> = pools
            .iter()
            .filter(|(_, p)| p.is_empty())
            .map(|(k, _)| *k)
            .collect();
        for (len, label) in empty {
            pools.remove(&(len, label));
            self.warn(format!(
                "no {} trace of length {len}; stratum dropped",
                if label { "accepted" } else { "rejected" }
            ));
        }
        if !pools.is_empty()
            && pools
                .keys()
                .all(|(_, l)| *l == pools.keys().next().unwrap().1)
        {
            self.warn("every sampled trace has the same label".into());
        }
        Ok(pools)
    }
}

/// Spread `total` units over cells with the given capacities as evenly as
/// possible; earlier cells absorb the remainder.
fn water_fill(capacities: &[usize], total: usize) -> Vec<usize> {
    let mut alloc = vec![0; capacities.len()];
    let mut left = total;
    loop {
        let open: Vec<usize> = (0..capacities.len())
            .filter(|&k| alloc[k] < capacities[k])
            .collect();
        if left == 0 || open.is_empty() {
            return alloc;
        }
        let share = (left / open.len()).max(1);
        for k in open {
            let add = share.min(capacities[k] - alloc[k]).min(left);
            alloc[k] += add;
            left -= add;
            if left == 0 {
                break;
            }
        }
    }
}

fn tag(traces: impl IntoIterator<Item = SymbolicTrace>, label: bool) -> Vec<LabelledTrace> {
    traces
        .into_iter()
        .map(|trace| LabelledTrace { trace, label })
        .collect()
}

/// Draw `count` traces per split from disjoint halves of the pools,
/// repeating traces only when a stratum has too few.
fn stratified_pairs(
    sampler: &mut Sampler<'_>,
    pools: &Pools,
    per_split: usize,
) -> Result<(Vec<LabelledTrace>, Vec<LabelledTrace>, bool)> {
    let keys: Vec<(usize, bool)> = pools.keys().copied().collect();
    let pair_caps: Vec<usize> = keys.iter().map(|k| pools[k].len() / 2).collect();
    let mut alloc = water_fill(&pair_caps, per_split);
    let mut short = per_split - alloc.iter().sum::<usize>();
    let mut repeated = false;
    if short > 0 {
        let usable: Vec<usize> = (0..keys.len()).filter(|&k| pair_caps[k] > 0).collect();
        if usable.is_empty() {
            return Err(Error::Data(
                "no stratum has two distinct traces to split between train and test".into(),
            ));
        }
        sampler.warn(format!(
            "only {} distinct trace pairs available for {per_split}; sampling with replacement",
            alloc.iter().sum::<usize>()
        ));
        repeated = true;
        let extra = water_fill(&vec![usize::MAX; usable.len()], short);
        for (k, e) in usable.iter().zip(extra) {
            alloc[*k] += e;
        }
        short = 0;
    }
    debug_assert_eq!(short, 0);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (k, &key) in keys.iter().enumerate() {
        let pool = &pools[&key];
        let half = pair_caps[k];
        let (a, b) = (&pool[..half], &pool[half..2 * half]);
        for (side, out) in [(a, &mut train), (b, &mut test)] {
            let mut chosen: Vec<SymbolicTrace> = side.iter().take(alloc[k]).cloned().collect();
            while chosen.len() < alloc[k] {
                chosen.push(side[sampler.rng.gen_range(0..side.len())].clone());
            }
            out.extend(tag(chosen, key.1));
        }
    }
    Ok((train, test, repeated))
}

/// Bring `split` to exactly `target` traces, never using a trace in `avoid`.
fn resize_split(
    sampler: &mut Sampler<'_>,
    mut split: Vec<LabelledTrace>,
    target: usize,
    avoid: &HashSet<SymbolicTrace>,
    name: &str,
) -> Result<(Vec<LabelledTrace>, bool)> {
    if split.len() >= target {
        split.shuffle(&mut sampler.rng);
        split.truncate(target);
        return Ok((split, false));
    }
    let plan = sampler.plan;
    let lo = (SHORT_LEN + 1).max(plan.min_len);
    let need = target - split.len();
    let mut repeated = false;
    if lo <= plan.max_len {
        let pools = sampler.pools(lo..=plan.max_len, need + avoid.len().min(need))?;
        let mut pools: Pools = pools
            .into_iter()
            .map(|(k, p)| {
                (
                    k,
                    p.into_iter()
                        .filter(|t| !avoid.contains(t))
                        .collect::<Vec<_>>(),
                )
            })
            .filter(|(_, p)| !p.is_empty())
            .collect();
        let keys: Vec<(usize, bool)> = pools.keys().copied().collect();
        let caps: Vec<usize> = keys.iter().map(|k| pools[k].len()).collect();
        let alloc = water_fill(&caps, need);
        for (key, n) in keys.iter().zip(alloc) {
            let pool = pools.get_mut(key).expect("key");
            split.extend(tag(pool.drain(..n), key.1));
        }
    }
    if split.len() < target {
        if split.is_empty() {
            return Err(Error::Data(format!(
                "no traces available for the {name} split"
            )));
        }
        sampler.warn(format!(
            "{name} split has {} distinct traces for {target}; sampling with replacement",
            split.len()
        ));
        repeated = true;
        let distinct = split.len();
        while split.len() < target {
            let pick = split[sampler.rng.gen_range(0..distinct)].clone();
            split.push(pick);
        }
    }
    Ok((split, repeated))
}

/// Labelled train and test traces for `formula` following `plan`.
/// Deterministic given the plan's seed.
pub fn sample_symbolic_dataset(
    formula: &Formula,
    alphabet: &Alphabet,
    plan: &SamplingPlan,
) -> Result<SymbolicDataset> {
    plan.validate()?;
    if alphabet.len() != plan.n_atoms {
        return Err(Error::Config(format!(
            "plan has {} atoms, alphabet has {}",
            plan.n_atoms,
            alphabet.len()
        )));
    }
    if let Some(a) = formula.atoms().into_iter().find(|a| !alphabet.contains(a)) {
        return Err(tilr_core::Error::UnknownAtom(a.to_string()).into());
    }
    let mut sampler = Sampler {
        formula,
        alphabet,
        plan,
        rng: ChaCha8Rng::seed_from_u64(plan.seed),
        warnings: Vec::new(),
    };
    let (train, test, with_replacement) = match plan.protocol {
        Protocol::Exhaustive => {
            let all = enumerate_traces(plan.n_atoms, plan.min_len, plan.max_len, plan.mode)
                .map(|t| sampler.label(t))
                .collect::<Result<Vec<_>>>()?;
            if all.iter().all(|t| t.label == all[0].label) {
                sampler.warn("every trace has the same label".into());
            }
            (all.clone(), all, false)
        }
        Protocol::Stratified => {
            let per_split = plan.total / 2;
            let pools = sampler.pools(plan.min_len..=plan.max_len, 2 * per_split)?;
            if pools.is_empty() {
                return Err(Error::Data(
                    "no traces in the requested length range".into(),
                ));
            }
            stratified_pairs(&mut sampler, &pools, per_split)?
        }
        Protocol::ShortExhaustiveSplit => {
            let per_split = plan.total / 2;
            let short_max = SHORT_LEN.min(plan.max_len);
            let mut short: Vec<LabelledTrace> =
                enumerate_traces(plan.n_atoms, plan.min_len, short_max, plan.mode)
                    .map(|t| sampler.label(t))
                    .collect::<Result<_>>()?;
            short.shuffle(&mut sampler.rng);
            let cut = (short.len() as f64 * plan.train_fraction).round() as usize;
            let test_part = short.split_off(cut);
            let test_set: HashSet<SymbolicTrace> =
                test_part.iter().map(|t| t.trace.clone()).collect();
            let (train, r1) = resize_split(&mut sampler, short, per_split, &test_set, "train")?;
            let train_set: HashSet<SymbolicTrace> = train.iter().map(|t| t.trace.clone()).collect();
            let (test, r2) = resize_split(&mut sampler, test_part, per_split, &train_set, "test")?;
            (train, test, r1 || r2)
        }
    };
    Ok(SymbolicDataset {
        train,
        test,
        with_replacement,
        warnings: sampler.warnings,
    })
}
