//! Pivot global optimization of exchange-coefficient distributions.
//!
//! A population of K probes samples the coupling hypercube; each round keeps
//! the K/2 probes with the largest transferred population and regenerates the
//! rest by Gaussian relocation around surviving pivots, with a geometrically
//! shrinking relocation scale. Runs can be chained over hypercubes of growing
//! side length, seeding each run with the previous best so the best cost
//! forms a non-decreasing sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{build_hamiltonian, ChainSpec, Model, MIN_GAP};
use crate::dynamics::decompose;
use crate::{Error, Result};

/// How many of the mirror-independent chain parameters are optimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptCount {
    /// Optimize `m` parameters, counted from the chain ends inward.
    Count(usize),
    /// Optimize every mirror-independent parameter (⌈(N-1)/2⌉ of them).
    All,
}

impl Serialize for OptCount {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            OptCount::Count(m) => s.serialize_u64(*m as u64),
            OptCount::All => s.serialize_str("all"),
        }
    }
}

impl<'de> Deserialize<'de> for OptCount {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct Visitor;
        impl serde::de::Visitor<'_> for Visitor {
            type Value = OptCount;

            fn expecting(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str("a positive integer or the string \"all\"")
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<OptCount, E> {
                Ok(OptCount::Count(v as usize))
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<OptCount, E> {
                if v < 0 {
                    return Err(E::custom("opt count must be positive"));
                }
                Ok(OptCount::Count(v as usize))
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<OptCount, E> {
                if v == "all" {
                    Ok(OptCount::All)
                } else {
                    Err(E::custom(format!("expected \"all\", got \"{v}\"")))
                }
            }
        }
        d.deserialize_any(Visitor)
    }
}

/// Maps an m-dimensional free vector onto the N-1 physical parameters of a
/// centro-symmetric chain: free entry k (1-based) controls positions k and
/// N-k, everything else stays at `fill_value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParameterization")]
pub struct Parameterization {
    model: Model,
    n: usize,
    opt_count: OptCount,
    fill_value: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParameterization {
    model: Model,
    n: usize,
    opt_count: OptCount,
    #[serde(default = "one")]
    fill_value: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<RawParameterization> for Parameterization {
    type Error = Error;

    fn try_from(raw: RawParameterization) -> Result<Self> {
        Parameterization::new(raw.model, raw.n, raw.opt_count, raw.fill_value)
    }
}

impl Parameterization {
    pub fn new(model: Model, n: usize, opt_count: OptCount, fill_value: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("chain length must be >= 2, got {n}")));
        }
        if !fill_value.is_finite() || fill_value <= 0.0 {
            return Err(Error::invalid(format!("fill value must be positive, got {fill_value}")));
        }
        if model == Model::LongRange && fill_value < MIN_GAP {
            return Err(Error::invalid(format!(
                "fill value {fill_value} below the minimum gap {MIN_GAP}"
            )));
        }
        if let OptCount::Count(m) = opt_count {
            let max = Self::max_free(n);
            if m == 0 || m > max {
                return Err(Error::invalid(format!(
                    "opt count must lie in 1..={max} for n = {n}, got {m}"
                )));
            }
        }
        Ok(Parameterization { model, n, opt_count, fill_value })
    }

    /// Number of mirror-independent parameters of a length-n chain.
    pub fn max_free(n: usize) -> usize {
        n / 2
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn opt_count(&self) -> OptCount {
        self.opt_count
    }

    pub fn fill_value(&self) -> f64 {
        self.fill_value
    }

    /// Dimension of the free vector.
    pub fn free_count(&self) -> usize {
        match self.opt_count {
            OptCount::All => Self::max_free(self.n),
            OptCount::Count(m) => m,
        }
    }

    /// Expand a free vector to the N-1 physical couplings or gaps.
    pub fn expand(&self, free: &[f64]) -> Result<Vec<f64>> {
        let m = self.free_count();
        if free.len() != m {
            return Err(Error::invalid(format!(
                "expected {m} free parameters, got {}",
                free.len()
            )));
        }
        let len = self.n - 1;
        let mut physical = vec![self.fill_value; len];
        for (k, &v) in free.iter().enumerate() {
            physical[k] = v;
            physical[len - 1 - k] = v;
        }
        Ok(physical)
    }

    /// Build the chain described by a free vector.
    pub fn chain_spec(&self, free: &[f64]) -> Result<ChainSpec> {
        let physical = self.expand(free)?;
        match self.model {
            Model::ShortRange => ChainSpec::short_range(physical),
            Model::LongRange => ChainSpec::long_range(physical, 1.0),
        }
    }
}

/// Knobs of one pivot run. `perturbation_scale` is the initial relocation
/// scale as a fraction of the box side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PivotConfig {
    pub population: usize,
    pub box_low: f64,
    pub box_high: f64,
    pub perturbation_scale: f64,
    pub shrink: f64,
    pub max_iterations: usize,
    pub stall_window: usize,
    pub stall_tol: f64,
    pub target_epsilon: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

impl PivotConfig {
    /// Defaults for a given hypercube: K = 64 probes, shrink 0.95, at most
    /// 2000 iterations, stall after 200 iterations below 1e-8 improvement.
    pub fn for_box(box_low: f64, box_high: f64) -> Self {
        PivotConfig {
            population: 64,
            box_low,
            box_high,
            perturbation_scale: 0.25,
            shrink: 0.95,
            max_iterations: 2000,
            stall_window: 200,
            stall_tol: 1e-8,
            target_epsilon: 1e-4,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 4 || self.population % 2 != 0 {
            return Err(Error::invalid(format!(
                "population must be even and >= 4, got {}",
                self.population
            )));
        }
        if !self.box_low.is_finite() || !self.box_high.is_finite() || self.box_low >= self.box_high
        {
            return Err(Error::invalid(format!(
                "box bounds must satisfy low < high, got [{}, {}]",
                self.box_low, self.box_high
            )));
        }
        if self.box_low <= 0.0 {
            return Err(Error::invalid("box_low must be strictly positive"));
        }
        if !(self.perturbation_scale > 0.0) {
            return Err(Error::invalid("perturbation_scale must be positive"));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::invalid(format!("shrink must lie in (0, 1), got {}", self.shrink)));
        }
        if self.max_iterations == 0 || self.stall_window == 0 {
            return Err(Error::invalid("max_iterations and stall_window must be >= 1"));
        }
        if !(self.stall_tol >= 0.0) {
            return Err(Error::invalid("stall_tol must be >= 0"));
        }
        if !(self.target_epsilon > 0.0 && self.target_epsilon < 1.0) {
            return Err(Error::invalid("target_epsilon must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Why a pivot run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    TargetReached,
    Stalled,
    MaxIterations,
}

/// One point of the convergence trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    pub best_cost: f64,
    pub evaluations: u64,
}

/// Outcome of one pivot run: the best distribution found, expanded to a full
/// chain spec, plus the convergence trace.
#[derive(Debug, Clone)]
pub struct OptimizerRun {
    pub best_free: Vec<f64>,
    pub best_spec: ChainSpec,
    pub best_cost: f64,
    pub trace: Vec<TracePoint>,
    pub evaluations: u64,
    pub termination: Termination,
}

/// A best-so-far chain captured the first time the cost crossed `threshold`.
#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub population: Option<f64>,
}

/// Cost of a free vector: the transferred population P(T) of the chain it
/// describes. Pure and deterministic.
pub fn cost(ctx: &Parameterization, free: &[f64], arrival_time: f64) -> Result<f64> {
    let spec = ctx.chain_spec(free)?;
    let h = build_hamiltonian(&spec)?;
    let sd = decompose(&h)?;
    Ok(sd.transferred_population(arrival_time))
}

/// Indices of the K/2 probes with the largest costs, descending, ties broken
/// by probe index so selection is stable.
fn select_survivors(costs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by(|&a, &b| costs[b].total_cmp(&costs[a]).then(a.cmp(&b)));
    order.truncate(costs.len() / 2);
    order
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn uniform_probe<R: Rng>(rng: &mut R, dim: usize, cfg: &PivotConfig) -> Vec<f64> {
    (0..dim)
        .map(|_| cfg.box_low + rng.gen::<f64>() * (cfg.box_high - cfg.box_low))
        .collect()
}

fn relocate<R: Rng>(pivot: &[f64], sigma: f64, cfg: &PivotConfig, rng: &mut R) -> Vec<f64> {
    pivot
        .iter()
        .map(|&x| (x + sigma * standard_normal(rng)).clamp(cfg.box_low, cfg.box_high))
        .collect()
}

/// One pivot round: keep the top half of the population unchanged, replace
/// every discarded probe by a uniformly chosen survivor plus an isotropic
/// Gaussian displacement of scale `sigma`, clipped to the box. The returned
/// population lists survivors first, in descending cost order.
pub fn pivot_step<R: Rng>(
    probes: &[Vec<f64>],
    costs: &[f64],
    sigma: f64,
    cfg: &PivotConfig,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    assert_eq!(probes.len(), costs.len());
    assert_eq!(probes.len(), cfg.population);
    let survivors = select_survivors(costs);
    let half = survivors.len();
    let mut next: Vec<Vec<f64>> = survivors.iter().map(|&i| probes[i].clone()).collect();
    for _ in 0..half {
        let pick = rng.gen_range(0..half);
        let child = relocate(&next[pick], sigma, cfg, rng);
        next.push(child);
    }
    next
}

fn evaluate_with_regeneration<R: Rng>(
    ctx: &Parameterization,
    probe: &mut Vec<f64>,
    arrival_time: f64,
    cfg: &PivotConfig,
    rng: &mut R,
    evaluations: &mut u64,
) -> Result<f64> {
    let mut last = None;
    for _ in 0..100 {
        *evaluations += 1;
        match cost(ctx, probe, arrival_time) {
            Ok(c) => return Ok(c),
            Err(e) => {
                last = Some(e);
                *probe = uniform_probe(rng, probe.len(), cfg);
            }
        }
    }
    Err(Error::numerical(format!(
        "cost evaluation kept failing after regeneration: {}",
        last.expect("at least one failure")
    )))
}

fn validate_thresholds(thresholds: &[f64]) -> Result<()> {
    for w in thresholds.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid("snapshot thresholds must be strictly ascending"));
        }
    }
    if let Some(bad) = thresholds.iter().find(|t| !(0.0..1.0).contains(*t)) {
        return Err(Error::invalid(format!("snapshot thresholds must lie in [0, 1), got {bad}")));
    }
    Ok(())
}

fn run_engine(
    ctx: &Parameterization,
    arrival_time: f64,
    cfg: &PivotConfig,
    seeds: &[Vec<f64>],
    thresholds: &[f64],
) -> Result<(OptimizerRun, Vec<Snapshot>)> {
    cfg.validate()?;
    validate_thresholds(thresholds)?;
    if !(arrival_time > 0.0) || !arrival_time.is_finite() {
        return Err(Error::invalid(format!(
            "arrival time must be positive, got {arrival_time}"
        )));
    }
    if ctx.model() == Model::LongRange && cfg.box_low < MIN_GAP {
        return Err(Error::invalid(format!(
            "long-range box_low {} below the minimum gap {MIN_GAP}",
            cfg.box_low
        )));
    }
    if seeds.len() > cfg.population {
        return Err(Error::invalid("more seed probes than population slots"));
    }

    let dim = ctx.free_count();
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.rng_seed);

    let mut probes: Vec<Vec<f64>> = Vec::with_capacity(cfg.population);
    for slot in 0..cfg.population {
        match seeds.get(slot) {
            Some(seed) => {
                if seed.len() != dim {
                    return Err(Error::invalid(format!(
                        "seed probe has {} entries, expected {dim}",
                        seed.len()
                    )));
                }
                probes.push(
                    seed.iter().map(|&x| x.clamp(cfg.box_low, cfg.box_high)).collect(),
                );
            }
            None => probes.push(uniform_probe(&mut rng, dim, cfg)),
        }
    }

    let mut evaluations = 0u64;
    let mut costs = Vec::with_capacity(cfg.population);
    for probe in &mut probes {
        costs.push(evaluate_with_regeneration(
            ctx,
            probe,
            arrival_time,
            cfg,
            &mut rng,
            &mut evaluations,
        )?);
    }

    let mut best_idx = 0;
    for i in 1..costs.len() {
        if costs[i] > costs[best_idx] {
            best_idx = i;
        }
    }
    let mut best_cost = costs[best_idx];
    let mut best_probe = probes[best_idx].clone();

    let mut snapshots: Vec<Snapshot> = thresholds
        .iter()
        .map(|&t| Snapshot { threshold: t, chain: None, population: None })
        .collect();
    let mut next_snapshot = 0usize;
    let capture = |best_cost: f64, best_probe: &[f64], next: &mut usize,
                   snaps: &mut Vec<Snapshot>|
     -> Result<()> {
        while *next < snaps.len() && best_cost >= snaps[*next].threshold {
            snaps[*next].chain = Some(ctx.chain_spec(best_probe)?);
            snaps[*next].population = Some(best_cost);
            *next += 1;
        }
        Ok(())
    };
    capture(best_cost, &best_probe, &mut next_snapshot, &mut snapshots)?;

    let mut trace = vec![TracePoint { iteration: 0, best_cost, evaluations }];
    let target = 1.0 - cfg.target_epsilon;
    let mut sigma = cfg.perturbation_scale * (cfg.box_high - cfg.box_low);
    let mut termination = None;
    if best_cost >= target {
        termination = Some(Termination::TargetReached);
    }

    let half = cfg.population / 2;
    let mut iteration = 0usize;
    while termination.is_none() {
        if iteration >= cfg.max_iterations {
            termination = Some(Termination::MaxIterations);
            break;
        }
        iteration += 1;

        let survivors = select_survivors(&costs);
        let mut next_probes: Vec<Vec<f64>> =
            survivors.iter().map(|&i| probes[i].clone()).collect();
        let mut next_costs: Vec<f64> = survivors.iter().map(|&i| costs[i]).collect();
        for _ in 0..half {
            let pick = rng.gen_range(0..half);
            let mut child = relocate(&next_probes[pick], sigma, cfg, &mut rng);
            let c = evaluate_with_regeneration(
                ctx,
                &mut child,
                arrival_time,
                cfg,
                &mut rng,
                &mut evaluations,
            )?;
            next_probes.push(child);
            next_costs.push(c);
        }
        probes = next_probes;
        costs = next_costs;
        sigma *= cfg.shrink;

        for (i, &c) in costs.iter().enumerate() {
            if c > best_cost {
                best_cost = c;
                best_probe = probes[i].clone();
            }
        }
        trace.push(TracePoint { iteration, best_cost, evaluations });
        capture(best_cost, &best_probe, &mut next_snapshot, &mut snapshots)?;

        if best_cost >= target {
            termination = Some(Termination::TargetReached);
        } else if iteration >= cfg.stall_window {
            let past = trace[iteration - cfg.stall_window].best_cost;
            if best_cost - past < cfg.stall_tol {
                termination = Some(Termination::Stalled);
            }
        }
    }

    let run = OptimizerRun {
        best_spec: ctx.chain_spec(&best_probe)?,
        best_free: best_probe,
        best_cost,
        trace,
        evaluations,
        termination: termination.expect("loop sets termination"),
    };
    Ok((run, snapshots))
}

/// Run the pivot method from a fresh random population.
pub fn run_pivot(
    ctx: &Parameterization,
    arrival_time: f64,
    cfg: &PivotConfig,
) -> Result<OptimizerRun> {
    run_engine(ctx, arrival_time, cfg, &[], &[]).map(|(run, _)| run)
}

/// Run the pivot method with the given probes injected into the initial
/// population (clipped to the box); the rest is drawn uniformly.
pub fn run_pivot_seeded(
    ctx: &Parameterization,
    arrival_time: f64,
    cfg: &PivotConfig,
    seeds: &[Vec<f64>],
) -> Result<OptimizerRun> {
    run_engine(ctx, arrival_time, cfg, seeds, &[]).map(|(run, _)| run)
}

/// Run the pivot method and capture the first best distribution whose cost
/// crosses each threshold (ascending, in [0, 1)). Thresholds never reached
/// stay empty in the returned list.
pub fn suboptimal_snapshots(
    ctx: &Parameterization,
    arrival_time: f64,
    cfg: &PivotConfig,
    thresholds: &[f64],
) -> Result<(OptimizerRun, Vec<Snapshot>)> {
    run_engine(ctx, arrival_time, cfg, &[], thresholds)
}

/// Growing-hypercube schedule: run k uses side length
/// `initial_side + (k-1)·delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub initial_side: f64,
    pub delta: f64,
    pub runs: usize,
}

impl ScheduleConfig {
    pub fn validate(&self, box_low: f64) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::invalid(format!("delta must be positive, got {}", self.delta)));
        }
        if self.runs == 0 {
            return Err(Error::invalid("schedule needs at least one run"));
        }
        if !(self.initial_side > box_low) {
            return Err(Error::invalid(format!(
                "initial side {} must exceed box_low {box_low}",
                self.initial_side
            )));
        }
        Ok(())
    }
}

/// Per-run outcome of a completed schedule.
#[derive(Debug, Clone)]
pub struct ScheduleRecord {
    pub run: usize,
    pub side: f64,
    pub result: OptimizerRun,
}

/// A completed hypercube schedule; `records` is ordered by run index and the
/// recorded best costs are non-decreasing by construction.
#[derive(Debug, Clone)]
pub struct HypercubeSchedule {
    pub initial_side: f64,
    pub delta: f64,
    pub records: Vec<ScheduleRecord>,
}

impl HypercubeSchedule {
    /// The best run, which seeded elitism makes the last one.
    pub fn best(&self) -> &OptimizerRun {
        &self.records.last().expect("schedule has at least one run").result
    }
}

/// Run the pivot method once per hypercube side length, seeding every run
/// after the first with the best probe found so far. Run k draws its RNG
/// stream from `cfg.rng_seed + (k-1)`.
pub fn run_schedule(
    ctx: &Parameterization,
    arrival_time: f64,
    cfg: &PivotConfig,
    schedule: &ScheduleConfig,
) -> Result<HypercubeSchedule> {
    cfg.validate()?;
    schedule.validate(cfg.box_low)?;

    let mut records = Vec::with_capacity(schedule.runs);
    let mut carried: Option<Vec<f64>> = None;
    for k in 0..schedule.runs {
        let side = schedule.initial_side + (k as f64) * schedule.delta;
        let mut run_cfg = cfg.clone();
        run_cfg.box_high = side;
        run_cfg.rng_seed = cfg.rng_seed.wrapping_add(k as u64);

        let seeds: Vec<Vec<f64>> = carried.iter().cloned().collect();
        let result = run_pivot_seeded(ctx, arrival_time, &run_cfg, &seeds)?;
        debug_assert!(
            carried.is_none()
                || result.best_cost >= records.last().map_or(0.0, |r: &ScheduleRecord| r.result.best_cost)
        );
        carried = Some(result.best_free.clone());
        records.push(ScheduleRecord { run: k + 1, side, result });
    }
    Ok(HypercubeSchedule { initial_side: schedule.initial_side, delta: schedule.delta, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn expansion_mirrors_free_entries() {
        let ctx =
            Parameterization::new(Model::ShortRange, 5, OptCount::Count(2), 1.0).unwrap();
        assert_eq!(ctx.expand(&[0.3, 0.7]).unwrap(), vec![0.3, 0.7, 0.7, 0.3]);

        let ctx = Parameterization::new(Model::ShortRange, 6, OptCount::All, 1.0).unwrap();
        assert_eq!(ctx.free_count(), 3);
        assert_eq!(ctx.expand(&[0.1, 0.2, 0.3]).unwrap(), vec![0.1, 0.2, 0.3, 0.2, 0.1]);

        let ctx =
            Parameterization::new(Model::ShortRange, 6, OptCount::Count(1), 2.0).unwrap();
        assert_eq!(ctx.expand(&[0.5]).unwrap(), vec![0.5, 2.0, 2.0, 2.0, 0.5]);
    }

    #[test]
    fn parameterization_validation() {
        assert!(Parameterization::new(Model::ShortRange, 5, OptCount::Count(3), 1.0).is_err());
        assert!(Parameterization::new(Model::ShortRange, 5, OptCount::Count(0), 1.0).is_err());
        assert!(Parameterization::new(Model::ShortRange, 1, OptCount::All, 1.0).is_err());
        assert!(Parameterization::new(Model::ShortRange, 5, OptCount::All, 0.0).is_err());
        assert!(Parameterization::new(Model::LongRange, 5, OptCount::All, 0.05).is_err());
    }

    #[test]
    fn opt_count_serde_round_trip() {
        let all: OptCount = serde_json::from_str("\"all\"").unwrap();
        assert_eq!(all, OptCount::All);
        let three: OptCount = serde_json::from_str("3").unwrap();
        assert_eq!(three, OptCount::Count(3));
        assert_eq!(serde_json::to_string(&OptCount::All).unwrap(), "\"all\"");
        assert_eq!(serde_json::to_string(&OptCount::Count(2)).unwrap(), "2");
        assert!(serde_json::from_str::<OptCount>("\"some\"").is_err());
    }

    #[test]
    fn cost_of_two_site_chain() {
        let ctx = Parameterization::new(Model::ShortRange, 2, OptCount::All, 1.0).unwrap();
        let p = cost(&ctx, &[1.0], std::f64::consts::FRAC_PI_4).unwrap();
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fill_value_reproduces_homogeneous_chain() {
        let ctx =
            Parameterization::new(Model::ShortRange, 8, OptCount::Count(1), 1.0).unwrap();
        let p = cost(&ctx, &[1.0], 5.0).unwrap();
        let spec = crate::homogeneous_baseline(Model::ShortRange, 8, 1.0).unwrap();
        let sd = decompose(&build_hamiltonian(&spec).unwrap()).unwrap();
        assert_abs_diff_eq!(p, sd.transferred_population(5.0), epsilon = 1e-14);
    }

    #[test]
    fn survivors_use_stable_index_order_on_ties() {
        let costs = vec![0.5; 6];
        assert_eq!(select_survivors(&costs), vec![0, 1, 2]);

        let costs = vec![0.1, 0.9, 0.5, 0.9, 0.2, 0.0];
        assert_eq!(select_survivors(&costs), vec![1, 3, 2]);
    }

    #[test]
    fn pivot_step_keeps_the_best_probe() {
        let mut cfg = PivotConfig::for_box(0.1, 2.0);
        cfg.population = 4;
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let probes = vec![vec![0.2], vec![1.7], vec![0.9], vec![1.1]];
        let costs = vec![0.1, 0.9, 0.3, 0.2];
        let next = pivot_step(&probes, &costs, 0.3, &cfg, &mut rng);
        assert_eq!(next.len(), 4);
        assert_eq!(next[0], vec![1.7]);
        assert_eq!(next[1], vec![0.9]);
        for probe in &next {
            for &x in probe {
                assert!((0.1..=2.0).contains(&x));
            }
        }
    }

    #[test]
    fn relocation_respects_box() {
        let cfg = PivotConfig::for_box(0.5, 1.5);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let child = relocate(&[1.0, 0.6, 1.4], 5.0, &cfg, &mut rng);
            for x in child {
                assert!((0.5..=1.5).contains(&x));
            }
        }
    }

    #[test]
    fn run_is_deterministic_and_monotone() {
        let ctx = Parameterization::new(Model::ShortRange, 4, OptCount::All, 1.0).unwrap();
        let mut cfg = PivotConfig::for_box(0.05, 2.0);
        cfg.population = 16;
        cfg.max_iterations = 60;
        cfg.stall_window = 60;
        cfg.rng_seed = 42;

        let a = run_pivot(&ctx, 8.0, &cfg).unwrap();
        let b = run_pivot(&ctx, 8.0, &cfg).unwrap();
        assert_eq!(a.best_free, b.best_free);
        assert_eq!(a.best_cost.to_bits(), b.best_cost.to_bits());
        assert_eq!(a.evaluations, b.evaluations);
        assert_eq!(a.trace.len(), b.trace.len());

        for w in a.trace.windows(2) {
            assert!(w[1].best_cost >= w[0].best_cost);
        }
        for &x in &a.best_free {
            assert!((0.05..=2.0).contains(&x));
        }
    }

    #[test]
    fn seeded_run_never_falls_below_its_seed() {
        let ctx = Parameterization::new(Model::ShortRange, 6, OptCount::All, 1.0).unwrap();
        let mut cfg = PivotConfig::for_box(0.05, 1.5);
        cfg.population = 16;
        cfg.max_iterations = 40;
        cfg.stall_window = 40;
        cfg.rng_seed = 7;
        let first = run_pivot(&ctx, 12.0, &cfg).unwrap();

        cfg.box_high = 2.0;
        cfg.rng_seed = 8;
        let second =
            run_pivot_seeded(&ctx, 12.0, &cfg, std::slice::from_ref(&first.best_free)).unwrap();
        assert!(second.best_cost >= first.best_cost);
    }

    #[test]
    fn schedule_sides_and_monotone_chain() {
        let ctx = Parameterization::new(Model::ShortRange, 6, OptCount::Count(2), 1.0).unwrap();
        let mut cfg = PivotConfig::for_box(0.05, 1.0);
        cfg.population = 16;
        cfg.max_iterations = 30;
        cfg.stall_window = 30;
        cfg.rng_seed = 5;
        let schedule = ScheduleConfig { initial_side: 0.8, delta: 0.4, runs: 4 };
        let done = run_schedule(&ctx, 12.0, &cfg, &schedule).unwrap();

        for (k, record) in done.records.iter().enumerate() {
            assert_eq!(record.run, k + 1);
            assert_eq!(record.side, 0.8 + k as f64 * 0.4);
        }
        for w in done.records.windows(2) {
            assert!(w[1].result.best_cost >= w[0].result.best_cost);
        }
        assert_eq!(done.best().best_cost, done.records.last().unwrap().result.best_cost);
    }

    #[test]
    fn snapshots_capture_crossings() {
        let ctx = Parameterization::new(Model::ShortRange, 4, OptCount::All, 1.0).unwrap();
        let mut cfg = PivotConfig::for_box(0.05, 2.0);
        cfg.population = 16;
        cfg.max_iterations = 80;
        cfg.stall_window = 80;
        cfg.rng_seed = 19;
        let (run, snaps) =
            suboptimal_snapshots(&ctx, 8.0, &cfg, &[0.0, 0.5, 0.9]).unwrap();

        assert_eq!(snaps.len(), 3);
        // Threshold 0 is crossed by the initial population.
        assert_eq!(snaps[0].population.unwrap(), run.trace[0].best_cost);
        for snap in &snaps {
            if let Some(p) = snap.population {
                assert!(p >= snap.threshold);
                assert!(snap.chain.is_some());
            }
        }
        assert!(suboptimal_snapshots(&ctx, 8.0, &cfg, &[0.5, 0.2]).is_err());
        assert!(suboptimal_snapshots(&ctx, 8.0, &cfg, &[1.0]).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = PivotConfig::for_box(0.1, 1.0);
        cfg.population = 5;
        assert!(cfg.validate().is_err());
        cfg = PivotConfig::for_box(1.0, 0.5);
        assert!(cfg.validate().is_err());
        cfg = PivotConfig::for_box(0.0, 1.0);
        assert!(cfg.validate().is_err());
        cfg = PivotConfig::for_box(0.1, 1.0);
        cfg.shrink = 1.0;
        assert!(cfg.validate().is_err());

        let ctx = Parameterization::new(Model::LongRange, 4, OptCount::All, 1.0).unwrap();
        let cfg = PivotConfig::for_box(0.05, 1.0);
        assert!(run_pivot(&ctx, 4.0, &cfg).is_err());
    }
}
