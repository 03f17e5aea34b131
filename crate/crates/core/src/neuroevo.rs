//! Topology-augmenting neuroevolution (NEAT-style) for single-output
//! decision networks.
//!
//! Genomes start minimal (every input and the bias wired straight to the
//! output) and grow through add-connection and add-node mutations. Structural
//! genes carry innovation ids from a run-wide registry, so crossover can align
//! genes by history and the population can be speciated by compatibility
//! distance. Selection minimizes RMSE against the training targets.

use std::collections::{HashMap, HashSet};

use rand::seq::IndexedRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics;
use crate::models::{Activation, ConnectionGene, ModelError, NetGenome, NodeGene, NodeRole};
use crate::rng::{self, Rng};

#[derive(Debug, Error)]
pub enum NeatError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training row {row} has {got} inputs, expected {expected}")]
    Arity { row: usize, expected: usize, got: usize },
    #[error("training target {0} outside [0,1]")]
    TargetRange(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompatibilityCoeffs {
    /// Excess genes.
    pub c1: f64,
    /// Disjoint genes.
    pub c2: f64,
    /// Mean weight difference of matching genes.
    pub c3: f64,
}

impl Default for CompatibilityCoeffs {
    fn default() -> Self {
        CompatibilityCoeffs { c1: 1.0, c2: 1.0, c3: 0.4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeatConfig {
    pub population_size: usize,
    pub generations: usize,
    pub weight_mutate_rate: f64,
    pub weight_perturb_sigma: f64,
    pub add_connection_rate: f64,
    pub add_node_rate: f64,
    pub compatibility_coeffs: CompatibilityCoeffs,
    pub compatibility_threshold: f64,
    pub survival_fraction: f64,
    pub crossover_rate: f64,
    /// Generations without improvement after which a species stops
    /// receiving offspring (unless it holds the champion).
    pub staleness_limit: usize,
    pub seed: u64,
}

impl Default for NeatConfig {
    fn default() -> Self {
        NeatConfig {
            population_size: 150,
            generations: 100,
            weight_mutate_rate: 0.8,
            weight_perturb_sigma: 0.5,
            add_connection_rate: 0.1,
            add_node_rate: 0.03,
            compatibility_coeffs: CompatibilityCoeffs::default(),
            compatibility_threshold: 3.0,
            survival_fraction: 0.25,
            crossover_rate: 0.75,
            staleness_limit: 15,
            seed: 0,
        }
    }
}

impl NeatConfig {
    pub fn validate(&self) -> Result<(), NeatError> {
        let rates = [
            ("weight_mutate_rate", self.weight_mutate_rate),
            ("add_connection_rate", self.add_connection_rate),
            ("add_node_rate", self.add_node_rate),
            ("survival_fraction", self.survival_fraction),
            ("crossover_rate", self.crossover_rate),
        ];
        for (name, r) in rates {
            if !(0.0..=1.0).contains(&r) {
                return Err(NeatError::Config(format!("{name} = {r} outside [0,1]")));
            }
        }
        if self.population_size < 2 {
            return Err(NeatError::Config("population_size must be at least 2".into()));
        }
        if !(self.compatibility_threshold > 0.0) {
            return Err(NeatError::Config("compatibility_threshold must be positive".into()));
        }
        if !(self.weight_perturb_sigma >= 0.0) {
            return Err(NeatError::Config("weight_perturb_sigma must be non-negative".into()));
        }
        Ok(())
    }
}

/// Run-wide record of structural innovations. The same connection (by
/// endpoints) or the same connection split always maps to the same ids.
#[derive(Clone, Debug)]
pub struct InnovationRegistry {
    next_innovation: u64,
    next_node: usize,
    connections: HashMap<(usize, usize), u64>,
    splits: HashMap<u64, (usize, Activation)>,
}

impl InnovationRegistry {
    pub fn new(input_count: usize, output_count: usize) -> Self {
        InnovationRegistry {
            next_innovation: 0,
            next_node: input_count + 1 + output_count,
            connections: HashMap::new(),
            splits: HashMap::new(),
        }
    }

    pub fn connection(&mut self, from: usize, to: usize) -> u64 {
        let next = &mut self.next_innovation;
        *self.connections.entry((from, to)).or_insert_with(|| {
            *next += 1;
            *next - 1
        })
    }

    /// Hidden node created by splitting connection `innovation`. The
    /// activation is drawn once, when the split first happens.
    pub fn split(&mut self, innovation: u64, rng: &mut Rng) -> (usize, Activation) {
        if let Some(&known) = self.splits.get(&innovation) {
            return known;
        }
        let node = (self.next_node, *Activation::ALL.choose(rng).expect("nonempty"));
        self.next_node += 1;
        self.splits.insert(innovation, node);
        node
    }
}

/// Minimal-topology population with weights uniform in [-1,1].
pub fn init_population(
    cfg: &NeatConfig,
    input_count: usize,
    output_count: usize,
    registry: &mut InnovationRegistry,
    rng: &mut Rng,
) -> Vec<NetGenome> {
    (0..cfg.population_size)
        .map(|_| {
            let mut g = NetGenome::bare(input_count, output_count);
            for o in 0..output_count {
                let to = input_count + 1 + o;
                for from in 0..=input_count {
                    g.connections.push(ConnectionGene {
                        innovation: registry.connection(from, to),
                        from,
                        to,
                        weight: rng.random_range(-1.0..=1.0),
                        enabled: true,
                    });
                }
            }
            g
        })
        .collect()
}

fn sort_genes(g: &mut NetGenome) {
    g.connections.sort_by_key(|c| c.innovation);
}

fn add_connection(g: &mut NetGenome, registry: &mut InnovationRegistry, rng: &mut Rng) {
    let sources: Vec<usize> = g.nodes.iter().filter(|n| n.role != NodeRole::Output).map(|n| n.id).collect();
    let targets: Vec<usize> =
        g.nodes.iter().filter(|n| matches!(n.role, NodeRole::Hidden | NodeRole::Output)).map(|n| n.id).collect();
    let mut outgoing: HashMap<usize, Vec<usize>> = HashMap::new();
    for c in &g.connections {
        outgoing.entry(c.from).or_default().push(c.to);
    }
    // a link from -> to closes a cycle exactly when `from` descends from `to`
    let descendants: Vec<HashSet<usize>> = targets
        .iter()
        .map(|&to| {
            let mut seen = HashSet::from([to]);
            let mut stack = vec![to];
            while let Some(n) = stack.pop() {
                for &m in outgoing.get(&n).into_iter().flatten() {
                    if seen.insert(m) {
                        stack.push(m);
                    }
                }
            }
            seen
        })
        .collect();
    let taken: HashSet<(usize, usize)> = g.connections.iter().map(|c| (c.from, c.to)).collect();
    let mut candidates = Vec::new();
    for &from in &sources {
        for (&to, below) in targets.iter().zip(&descendants) {
            if !taken.contains(&(from, to)) && !below.contains(&from) {
                candidates.push((from, to));
            }
        }
    }
    if let Some(&(from, to)) = candidates.choose(rng) {
        let innovation = registry.connection(from, to);
        g.connections.push(ConnectionGene {
            innovation,
            from,
            to,
            weight: rng.random_range(-1.0..=1.0),
            enabled: true,
        });
    }
}

fn add_node(g: &mut NetGenome, registry: &mut InnovationRegistry, rng: &mut Rng) {
    let enabled: Vec<usize> = (0..g.connections.len()).filter(|&i| g.connections[i].enabled).collect();
    let Some(&i) = enabled.choose(rng) else {
        return;
    };
    let old = g.connections[i];
    let (node, activation) = registry.split(old.innovation, rng);
    if g.node(node).is_some() {
        // this split already happened in the genome's lineage
        return;
    }
    g.connections[i].enabled = false;
    g.nodes.push(NodeGene { id: node, role: NodeRole::Hidden, activation });
    let into = registry.connection(old.from, node);
    let out = registry.connection(node, old.to);
    g.connections.push(ConnectionGene { innovation: into, from: old.from, to: node, weight: 1.0, enabled: true });
    g.connections.push(ConnectionGene { innovation: out, from: node, to: old.to, weight: old.weight, enabled: true });
}

/// Applies weight perturbation, add-connection and add-node, each with its
/// configured probability. Operators that cannot apply are skipped.
pub fn mutate(genome: &NetGenome, cfg: &NeatConfig, registry: &mut InnovationRegistry, rng: &mut Rng) -> NetGenome {
    let mut g = genome.clone();
    if rng.random_bool(cfg.weight_mutate_rate) && cfg.weight_perturb_sigma > 0.0 {
        let noise = Normal::new(0.0, cfg.weight_perturb_sigma).expect("valid sigma");
        for c in &mut g.connections {
            c.weight += noise.sample(rng);
        }
    }
    if rng.random_bool(cfg.add_connection_rate) {
        add_connection(&mut g, registry, rng);
    }
    if rng.random_bool(cfg.add_node_rate) {
        add_node(&mut g, registry, rng);
    }
    sort_genes(&mut g);
    g
}

/// Innovation-aligned crossover. Matching genes take their weight and enabled
/// flag from either parent at random; disjoint and excess genes come from
/// `fitter`, so the child's structure is exactly the fitter parent's.
pub fn crossover(fitter: &NetGenome, other: &NetGenome, rng: &mut Rng) -> NetGenome {
    let theirs: HashMap<u64, &ConnectionGene> = other.connections.iter().map(|c| (c.innovation, c)).collect();
    let mut child = fitter.clone();
    for c in &mut child.connections {
        if let Some(o) = theirs.get(&c.innovation) {
            if rng.random_bool(0.5) {
                c.weight = o.weight;
                c.enabled = o.enabled;
            }
        }
    }
    sort_genes(&mut child);
    child
}

/// Compatibility distance `c1*E/N + c2*D/N + c3*W`, with `N` the larger gene
/// count (1 when both genomes have fewer than 20 genes).
pub fn compatibility(g1: &NetGenome, g2: &NetGenome, coeffs: &CompatibilityCoeffs) -> f64 {
    let mut a: Vec<&ConnectionGene> = g1.connections.iter().collect();
    let mut b: Vec<&ConnectionGene> = g2.connections.iter().collect();
    a.sort_by_key(|c| c.innovation);
    b.sort_by_key(|c| c.innovation);
    let (max_a, max_b) = (a.last().map(|c| c.innovation), b.last().map(|c| c.innovation));
    let (mut i, mut j) = (0, 0);
    let (mut excess, mut disjoint, mut matching, mut wdiff) = (0usize, 0usize, 0usize, 0.0);
    let classify = |innov: u64, other_max: Option<u64>| other_max.is_none_or(|m| innov > m);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x.innovation == y.innovation => {
                matching += 1;
                wdiff += (x.weight - y.weight).abs();
                i += 1;
                j += 1;
            }
            (Some(x), y) if y.is_none_or(|y| x.innovation < y.innovation) => {
                if classify(x.innovation, max_b) {
                    excess += 1;
                } else {
                    disjoint += 1;
                }
                i += 1;
            }
            (_, Some(y)) => {
                if classify(y.innovation, max_a) {
                    excess += 1;
                } else {
                    disjoint += 1;
                }
                j += 1;
            }
            (None, None) => unreachable!(),
            (Some(_), None) => unreachable!(),
        }
    }
    let n = if a.len() < 20 && b.len() < 20 { 1.0 } else { a.len().max(b.len()) as f64 };
    let mean_w = if matching > 0 { wdiff / matching as f64 } else { 0.0 };
    coeffs.c1 * excess as f64 / n + coeffs.c2 * disjoint as f64 / n + coeffs.c3 * mean_w
}

#[derive(Clone, Debug)]
pub struct Species {
    pub representative: NetGenome,
    /// Indices into the current population.
    pub members: Vec<usize>,
    pub best_rmse: f64,
    pub staleness: usize,
}

/// RMSE of the genome over `train`.
pub fn genome_rmse(genome: &NetGenome, train: &[(Vec<f64>, f64)]) -> Result<f64, NeatError> {
    let net = genome.compile()?;
    let mut predicted = Vec::with_capacity(train.len());
    for (x, _) in train {
        predicted.push(net.eval(x)?);
    }
    let expected: Vec<f64> = train.iter().map(|(_, t)| *t).collect();
    metrics::rmse(&expected, &predicted).map_err(|_| NeatError::EmptyTrainingSet)
}

fn evaluate(population: &[NetGenome], train: &[(Vec<f64>, f64)]) -> Result<Vec<f64>, NeatError> {
    population.par_iter().map(|g| genome_rmse(g, train)).collect()
}

/// Per-generation summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_rmse: f64,
    pub generation_best_rmse: f64,
    pub species: usize,
    pub max_hidden: usize,
}

#[derive(Clone, Debug)]
pub struct NeatReport {
    pub best: NetGenome,
    pub best_rmse: f64,
    pub history: Vec<GenerationStats>,
}

fn check_training(train: &[(Vec<f64>, f64)], input_count: usize) -> Result<(), NeatError> {
    if train.is_empty() {
        return Err(NeatError::EmptyTrainingSet);
    }
    for (row, (x, t)) in train.iter().enumerate() {
        if x.len() != input_count {
            return Err(NeatError::Arity { row, expected: input_count, got: x.len() });
        }
        if !(0.0..=1.0).contains(t) {
            return Err(NeatError::TargetRange(*t));
        }
    }
    Ok(())
}

/// Evolves a single-output network minimizing RMSE on `train`; returns the
/// best genome seen in any generation.
pub fn evolve(train: &[(Vec<f64>, f64)], cfg: &NeatConfig, input_count: usize) -> Result<NetGenome, NeatError> {
    Ok(evolve_with(train, cfg, input_count, |_, _| {})?.best)
}

/// As [`evolve`], calling `observe(stats, population)` after every
/// generation (including the initial one, as generation 0).
pub fn evolve_with(
    train: &[(Vec<f64>, f64)],
    cfg: &NeatConfig,
    input_count: usize,
    mut observe: impl FnMut(&GenerationStats, &[NetGenome]),
) -> Result<NeatReport, NeatError> {
    cfg.validate()?;
    check_training(train, input_count)?;
    let mut rng = rng::seeded(cfg.seed);
    let mut registry = InnovationRegistry::new(input_count, 1);
    let mut population = init_population(cfg, input_count, 1, &mut registry, &mut rng);
    let mut fitness = evaluate(&population, train)?;
    let mut species: Vec<Species> = Vec::new();

    let champion = argmin(&fitness);
    let mut best = population[champion].clone();
    let mut best_rmse = fitness[champion];
    let mut history = Vec::with_capacity(cfg.generations + 1);
    let mut record = |generation: usize, pop: &[NetGenome], fit: &[f64], best_rmse: f64, n_species: usize| {
        let stats = GenerationStats {
            generation,
            best_rmse,
            generation_best_rmse: fit.iter().copied().fold(f64::INFINITY, f64::min),
            species: n_species,
            max_hidden: pop.iter().map(NetGenome::hidden_count).max().unwrap_or(0),
        };
        observe(&stats, pop);
        history.push(stats);
    };
    record(0, &population, &fitness, best_rmse, 0);

    for generation in 1..=cfg.generations {
        speciate(&population, &fitness, &mut species, cfg, &mut rng);
        population = reproduce(&population, &fitness, &species, cfg, &mut registry, &mut rng);
        fitness = evaluate(&population, train)?;
        let champion = argmin(&fitness);
        if fitness[champion] < best_rmse {
            best_rmse = fitness[champion];
            best = population[champion].clone();
        }
        record(generation, &population, &fitness, best_rmse, species.len());
    }
    Ok(NeatReport { best, best_rmse, history })
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = i;
        }
    }
    best
}

/// Assigns every genome to the first species whose representative is within
/// the compatibility threshold, opening new species as needed, then refreshes
/// staleness counters and picks next generation's representatives.
fn speciate(population: &[NetGenome], fitness: &[f64], species: &mut Vec<Species>, cfg: &NeatConfig, rng: &mut Rng) {
    for s in species.iter_mut() {
        s.members.clear();
    }
    for (i, g) in population.iter().enumerate() {
        let home = species
            .iter()
            .position(|s| compatibility(g, &s.representative, &cfg.compatibility_coeffs) < cfg.compatibility_threshold);
        match home {
            Some(k) => species[k].members.push(i),
            None => species.push(Species {
                representative: g.clone(),
                members: vec![i],
                best_rmse: f64::INFINITY,
                staleness: 0,
            }),
        }
    }
    species.retain(|s| !s.members.is_empty());
    for s in species.iter_mut() {
        let best = s.members.iter().map(|&i| fitness[i]).fold(f64::INFINITY, f64::min);
        if best < s.best_rmse {
            s.best_rmse = best;
            s.staleness = 0;
        } else {
            s.staleness += 1;
        }
        let rep = *s.members.choose(rng).expect("nonempty species");
        s.representative = population[rep].clone();
    }
}

/// Splits `total` proportionally to `weights` by largest remainder.
fn apportion(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() {
        return Vec::new();
    }
    let shares: Vec<f64> = if sum > 0.0 {
        weights.iter().map(|w| w / sum * total as f64).collect()
    } else {
        vec![total as f64 / weights.len() as f64; weights.len()]
    };
    let mut counts: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let mut rest = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&i, &j| (shares[j] - shares[j].floor()).total_cmp(&(shares[i] - shares[i].floor())).then(i.cmp(&j)));
    for &i in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        counts[i] += 1;
        rest -= 1;
    }
    counts
}

fn reproduce(
    population: &[NetGenome],
    fitness: &[f64],
    species: &[Species],
    cfg: &NeatConfig,
    registry: &mut InnovationRegistry,
    rng: &mut Rng,
) -> Vec<NetGenome> {
    let champion = argmin(fitness);
    // Fitness sharing: a member's shared score is (1 - rmse) / |species|, so a
    // species' total is its mean score.
    let weights: Vec<f64> = species
        .iter()
        .map(|s| {
            let stale = s.staleness >= cfg.staleness_limit && !s.members.contains(&champion);
            if stale {
                0.0
            } else {
                s.members.iter().map(|&i| (1.0 - fitness[i]).max(0.0)).sum::<f64>() / s.members.len() as f64
            }
        })
        .collect();
    let alive = weights.iter().any(|w| *w > 0.0);
    let weights = if alive {
        weights
    } else {
        species.iter().map(|s| if s.members.contains(&champion) { 1.0 } else { 0.0 }).collect()
    };
    let quotas = apportion(&weights, cfg.population_size);

    let mut next = Vec::with_capacity(cfg.population_size);
    for (s, &quota) in species.iter().zip(&quotas) {
        if quota == 0 {
            continue;
        }
        let mut ranked = s.members.clone();
        ranked.sort_by(|&i, &j| fitness[i].total_cmp(&fitness[j]).then(i.cmp(&j)));
        next.push(population[ranked[0]].clone());
        let keep = ((s.members.len() as f64 * cfg.survival_fraction).ceil() as usize).clamp(1, ranked.len());
        let parents = &ranked[..keep];
        for _ in 1..quota {
            let child = if parents.len() >= 2 && rng.random_bool(cfg.crossover_rate) {
                let picks: Vec<usize> = rand::seq::index::sample(rng, parents.len(), 2).into_iter().collect();
                let (p, q) = (parents[picks[0]], parents[picks[1]]);
                let (fit, other) = if (fitness[p], p) <= (fitness[q], q) { (p, q) } else { (q, p) };
                crossover(&population[fit], &population[other], rng)
            } else {
                population[*parents.choose(rng).expect("nonempty")].clone()
            };
            next.push(mutate(&child, cfg, registry, rng));
        }
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ann_forward;

    fn registry_and_rng() -> (InnovationRegistry, Rng) {
        (InnovationRegistry::new(2, 1), rng::seeded(3))
    }

    #[test]
    fn minimal_population() {
        let cfg = NeatConfig { population_size: 10, ..NeatConfig::default() };
        let mut reg = InnovationRegistry::new(5, 1);
        let pop = init_population(&cfg, 5, 1, &mut reg, &mut rng::seeded(1));
        assert_eq!(pop.len(), 10);
        for g in &pop {
            g.validate().unwrap();
            assert_eq!(g.connections.len(), 6);
            assert_eq!(g.hidden_count(), 0);
            assert!(g.connections.iter().all(|c| (-1.0..=1.0).contains(&c.weight)));
            let ids: Vec<u64> = g.connections.iter().map(|c| c.innovation).collect();
            assert_eq!(ids, (0..6).collect::<Vec<_>>());
        }
        let again = init_population(&cfg, 5, 1, &mut InnovationRegistry::new(5, 1), &mut rng::seeded(1));
        assert_eq!(pop, again);
    }

    #[test]
    fn add_node_splits_one_connection() {
        let (mut reg, mut rng) = registry_and_rng();
        let mut g = NetGenome::bare(2, 1);
        g.connections.push(ConnectionGene {
            innovation: reg.connection(0, 3),
            from: 0,
            to: 3,
            weight: 0.7,
            enabled: true,
        });
        let cfg = NeatConfig {
            weight_mutate_rate: 0.0,
            add_connection_rate: 0.0,
            add_node_rate: 1.0,
            ..NeatConfig::default()
        };
        let m = mutate(&g, &cfg, &mut reg, &mut rng);
        m.validate().unwrap();
        assert_eq!(m.hidden_count(), 1);
        assert_eq!(m.connections.iter().filter(|c| c.enabled).count(), 2);
        assert_eq!(m.connections.iter().filter(|c| !c.enabled).count(), 1);
        let x = [0.3, 0.9];
        let h = m.node(4).unwrap().activation.apply(0.3);
        assert!((ann_forward(&m, &x).unwrap() - crate::models::sigmoid(0.7 * h)).abs() < 1e-15);
    }

    #[test]
    fn same_split_gets_same_ids() {
        let (mut reg, mut rng) = registry_and_rng();
        let base = {
            let mut g = NetGenome::bare(2, 1);
            g.connections.push(ConnectionGene {
                innovation: reg.connection(0, 3),
                from: 0,
                to: 3,
                weight: 0.7,
                enabled: true,
            });
            g
        };
        let cfg = NeatConfig {
            weight_mutate_rate: 0.0,
            add_connection_rate: 0.0,
            add_node_rate: 1.0,
            ..NeatConfig::default()
        };
        let a = mutate(&base, &cfg, &mut reg, &mut rng);
        let b = mutate(&base, &cfg, &mut reg, &mut rng);
        assert_eq!(a.nodes, b.nodes);
        let ids = |g: &NetGenome| g.connections.iter().map(|c| (c.innovation, c.from, c.to)).collect::<Vec<_>>();
        assert_eq!(ids(&a), ids(&b));
    }

    #[test]
    fn zero_rates_leave_structure_alone() {
        let (mut reg, mut rng) = registry_and_rng();
        let cfg = NeatConfig {
            population_size: 4,
            weight_mutate_rate: 0.0,
            add_connection_rate: 0.0,
            add_node_rate: 0.0,
            ..NeatConfig::default()
        };
        let pop = init_population(&cfg, 2, 1, &mut reg, &mut rng);
        for g in &pop {
            assert_eq!(&mutate(g, &cfg, &mut reg, &mut rng), g);
        }
    }

    #[test]
    fn self_crossover_is_identity() {
        let (mut reg, mut rng) = registry_and_rng();
        let cfg =
            NeatConfig { population_size: 3, add_node_rate: 1.0, add_connection_rate: 1.0, ..NeatConfig::default() };
        let pop = init_population(&cfg, 2, 1, &mut reg, &mut rng);
        let g = mutate(&mutate(&pop[0], &cfg, &mut reg, &mut rng), &cfg, &mut reg, &mut rng);
        assert_eq!(crossover(&g, &g, &mut rng), g);
    }

    #[test]
    fn disjoint_hidden_structure_follows_the_fitter_parent() {
        let (mut reg, mut rng) = registry_and_rng();
        let cfg = NeatConfig {
            population_size: 2,
            weight_mutate_rate: 0.0,
            add_connection_rate: 0.0,
            add_node_rate: 1.0,
            ..NeatConfig::default()
        };
        let pop = init_population(&cfg, 2, 1, &mut reg, &mut rng);
        let mut a = pop[0].clone();
        let mut b = pop[1].clone();
        // split different connections in the two parents
        while a.hidden_count() == 0 || b.hidden_count() == 0 || a.nodes == b.nodes {
            a = mutate(&pop[0], &cfg, &mut reg, &mut rng);
            b = mutate(&pop[1], &cfg, &mut reg, &mut rng);
        }
        let child = crossover(&a, &b, &mut rng);
        let structure = |g: &NetGenome| g.connections.iter().map(|c| (c.innovation, c.from, c.to)).collect::<Vec<_>>();
        assert_eq!(structure(&child), structure(&a));
        assert_eq!(child.nodes, a.nodes);
    }

    #[test]
    fn compatibility_hand_pair() {
        // a: innovations 0,1,5 ; b: 0,3
        let gene = |innovation, weight| ConnectionGene { innovation, from: 0, to: 3, weight, enabled: true };
        let mut a = NetGenome::bare(2, 1);
        a.connections = vec![gene(0, 1.0), gene(1, 0.0), gene(5, 0.0)];
        let mut b = NetGenome::bare(2, 1);
        b.connections = vec![gene(0, 0.5), gene(3, 0.0)];
        // excess: 5 ; disjoint: 1,3 ; W = 0.5
        let c = CompatibilityCoeffs { c1: 1.0, c2: 1.0, c3: 0.4 };
        assert!((compatibility(&a, &b, &c) - 3.2).abs() < 1e-12);
        assert_eq!(compatibility(&a, &b, &c), compatibility(&b, &a, &c));
        assert_eq!(compatibility(&a, &a, &c), 0.0);
    }

    #[test]
    fn apportion_sums_to_total() {
        assert_eq!(apportion(&[1.0, 1.0, 1.0], 10).iter().sum::<usize>(), 10);
        assert_eq!(apportion(&[0.0, 2.0], 5), vec![0, 5]);
        assert_eq!(apportion(&[0.0, 0.0], 4), vec![2, 2]);
    }

    #[test]
    fn zero_generations_returns_initial_best() {
        let train = vec![(vec![0.0], 0.2), (vec![1.0], 0.8)];
        let cfg = NeatConfig { population_size: 12, generations: 0, seed: 5, ..NeatConfig::default() };
        let report = evolve_with(&train, &cfg, 1, |_, _| {}).unwrap();
        let mut reg = InnovationRegistry::new(1, 1);
        let init = init_population(&cfg, 1, 1, &mut reg, &mut rng::seeded(5));
        let best = init.iter().map(|g| genome_rmse(g, &train).unwrap()).fold(f64::INFINITY, f64::min);
        assert_eq!(report.best_rmse, best);
        assert_eq!(report.history.len(), 1);
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(evolve(&[], &NeatConfig::default(), 2), Err(NeatError::EmptyTrainingSet)));
        assert!(matches!(evolve(&[(vec![0.0], 0.5)], &NeatConfig::default(), 2), Err(NeatError::Arity { .. })));
        assert!(matches!(evolve(&[(vec![0.0], 1.5)], &NeatConfig::default(), 1), Err(NeatError::TargetRange(_))));
        let cfg = NeatConfig { population_size: 1, ..NeatConfig::default() };
        assert!(matches!(evolve(&[(vec![0.0], 0.5)], &cfg, 1), Err(NeatError::Config(_))));
    }
}
