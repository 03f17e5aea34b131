//! Discrete genetic algorithm over quantized fuzzy systems.
//!
//! A chromosome holds integer levels: nine per input for the vertices of its
//! three triangles, then one consequent per rule of the complete rule grid.
//! Decoding maps a level `q` to `q / (levels - 1)`, sorts each triangle's
//! vertices and repairs coverage of [0,1].

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics;
use crate::models::{repair_coverage, FuzzyRule, FuzzySystem, ModelError, Triangle, TERMS};
use crate::rng::{self, Rng};

/// Vertex genes per input: three triangles of three vertices.
pub const GENES_PER_INPUT: usize = TERMS * 3;

#[derive(Debug, Error)]
pub enum FgaError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training row {row} has {got} inputs, expected {expected}")]
    Arity { row: usize, expected: usize, got: usize },
    #[error("training value {0} outside [0,1]")]
    Range(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("chromosome shapes differ")]
    ShapeMismatch,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FuzzyChromosome {
    /// Quantization resolution Q; genes lie in `0..levels`.
    pub levels: u16,
    pub mf_genes: Vec<u16>,
    pub rule_genes: Vec<u16>,
}

/// Number of rules in the complete grid over `input_count` inputs.
pub fn rule_count(input_count: usize) -> usize {
    TERMS.pow(input_count as u32)
}

/// Antecedent of grid rule `index`; the first input is the most significant
/// digit.
pub fn grid_antecedent(index: usize, input_count: usize) -> Vec<u8> {
    let mut digits = vec![0u8; input_count];
    let mut rest = index;
    for d in digits.iter_mut().rev() {
        *d = (rest % TERMS) as u8;
        rest /= TERMS;
    }
    digits
}

impl FuzzyChromosome {
    pub fn random(input_count: usize, levels: u16, rng: &mut Rng) -> Self {
        let mut gene = || rng.random_range(0..levels);
        let mf_genes = (0..input_count * GENES_PER_INPUT).map(|_| gene()).collect();
        let rule_genes = (0..rule_count(input_count)).map(|_| gene()).collect();
        FuzzyChromosome { levels, mf_genes, rule_genes }
    }

    pub fn input_count(&self) -> usize {
        self.mf_genes.len() / GENES_PER_INPUT
    }

    /// Total length of the flattened gene string.
    pub fn len(&self) -> usize {
        self.mf_genes.len() + self.rule_genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn gene(&self, i: usize) -> u16 {
        if i < self.mf_genes.len() {
            self.mf_genes[i]
        } else {
            self.rule_genes[i - self.mf_genes.len()]
        }
    }

    fn set_gene(&mut self, i: usize, v: u16) {
        let split = self.mf_genes.len();
        if i < split {
            self.mf_genes[i] = v;
        } else {
            self.rule_genes[i - split] = v;
        }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.levels == other.levels
            && self.mf_genes.len() == other.mf_genes.len()
            && self.rule_genes.len() == other.rule_genes.len()
    }

    pub fn validate(&self) -> Result<(), FgaError> {
        let n = self.input_count();
        if self.levels < 2
            || n == 0
            || self.mf_genes.len() != n * GENES_PER_INPUT
            || self.rule_genes.len() != rule_count(n)
        {
            return Err(FgaError::ShapeMismatch);
        }
        if let Some(&g) = self.mf_genes.iter().chain(&self.rule_genes).find(|&&g| g >= self.levels) {
            return Err(FgaError::Config(format!("gene level {g} outside 0..{}", self.levels)));
        }
        Ok(())
    }
}

fn level_value(q: u16, levels: u16) -> f64 {
    f64::from(q) / f64::from(levels - 1)
}

fn nearest_level(v: f64, levels: u16) -> u16 {
    (v.clamp(0.0, 1.0) * f64::from(levels - 1)).round() as u16
}

pub fn decode(chrom: &FuzzyChromosome) -> FuzzySystem {
    let n = chrom.input_count();
    let lv = |q| level_value(q, chrom.levels);
    let mfs = chrom
        .mf_genes
        .chunks(GENES_PER_INPUT)
        .map(|genes| {
            let mut set = [0, 1, 2].map(|t| {
                let mut v = [lv(genes[3 * t]), lv(genes[3 * t + 1]), lv(genes[3 * t + 2])];
                v.sort_by(f64::total_cmp);
                Triangle::new(v[0], v[1], v[2])
            });
            repair_coverage(&mut set);
            set
        })
        .collect();
    let rules = chrom
        .rule_genes
        .iter()
        .enumerate()
        .map(|(r, &q)| FuzzyRule { antecedent: grid_antecedent(r, n), consequent: lv(q) })
        .collect();
    FuzzySystem { input_count: n, mfs, rules }
}

/// Nearest-level encoding of a system whose rules form the complete grid in
/// grid order.
pub fn encode(fs: &FuzzySystem, levels: u16) -> Result<FuzzyChromosome, FgaError> {
    let n = fs.input_count;
    if fs.rules.len() != rule_count(n)
        || fs.rules.iter().enumerate().any(|(r, rule)| rule.antecedent != grid_antecedent(r, n))
    {
        return Err(FgaError::ShapeMismatch);
    }
    let mf_genes = fs
        .mfs
        .iter()
        .flat_map(|set| set.iter().flat_map(|t| [t.a, t.b, t.c]))
        .map(|v| nearest_level(v, levels))
        .collect();
    let rule_genes = fs.rules.iter().map(|r| nearest_level(r.consequent, levels)).collect();
    Ok(FuzzyChromosome { levels, mf_genes, rule_genes })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Crossover {
    /// One-point over the flattened gene string.
    X1,
    /// Uniform, each gene from either parent with p = 0.5.
    X2,
    /// Membership genes from one parent, rule genes from the other.
    X3,
    /// Two-point over the flattened gene string.
    X4,
}

impl Crossover {
    pub const ALL: [Crossover; 4] = [Crossover::X1, Crossover::X2, Crossover::X3, Crossover::X4];

    pub fn name(self) -> &'static str {
        match self {
            Crossover::X1 => "X1",
            Crossover::X2 => "X2",
            Crossover::X3 => "X3",
            Crossover::X4 => "X4",
        }
    }
}

impl fmt::Display for Crossover {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Crossover {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Crossover::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown crossover `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FgaConfig {
    pub population_size: usize,
    pub generations: usize,
    /// M1: shift one vertex gene by one level.
    pub vertex_shift_rate: f64,
    /// M2: reset one consequent gene to a uniform level.
    pub consequent_reset_rate: f64,
    /// Sampling weights of X1..X4.
    pub crossover_weights: [f64; 4],
    pub tournament_size: usize,
    pub elitism: usize,
    pub quantization: u16,
    pub seed: u64,
}

impl Default for FgaConfig {
    fn default() -> Self {
        FgaConfig {
            population_size: 100,
            generations: 200,
            vertex_shift_rate: 0.6,
            consequent_reset_rate: 0.3,
            crossover_weights: [0.25; 4],
            tournament_size: 3,
            elitism: 2,
            quantization: 64,
            seed: 0,
        }
    }
}

impl FgaConfig {
    pub fn validate(&self) -> Result<(), FgaError> {
        let bad = |m: String| Err(FgaError::Config(m));
        for (name, r) in
            [("vertex_shift_rate", self.vertex_shift_rate), ("consequent_reset_rate", self.consequent_reset_rate)]
        {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("{name} = {r} outside [0,1]"));
            }
        }
        if self.crossover_weights.iter().any(|w| !(*w >= 0.0)) {
            return bad("crossover weights must be non-negative".into());
        }
        let sum: f64 = self.crossover_weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("crossover weights sum to {sum}, not 1"));
        }
        if self.quantization < 8 {
            return bad("quantization must be at least 8".into());
        }
        if self.population_size < 2 {
            return bad("population_size must be at least 2".into());
        }
        if self.tournament_size == 0 {
            return bad("tournament_size must be positive".into());
        }
        if self.elitism > self.population_size {
            return bad("elitism exceeds population_size".into());
        }
        Ok(())
    }
}

/// M1 with an explicit gene and direction; the level is clamped to range.
pub fn shift_vertex(chrom: &FuzzyChromosome, gene: usize, up: bool) -> FuzzyChromosome {
    let mut c = chrom.clone();
    let g = &mut c.mf_genes[gene];
    *g = if up { (*g + 1).min(c.levels - 1) } else { g.saturating_sub(1) };
    c
}

/// Applies M1 and M2, each with its own probability.
pub fn mutate(chrom: &FuzzyChromosome, cfg: &FgaConfig, rng: &mut Rng) -> FuzzyChromosome {
    let mut c = chrom.clone();
    if rng.random_bool(cfg.vertex_shift_rate) && !c.mf_genes.is_empty() {
        let gene = rng.random_range(0..c.mf_genes.len());
        let up = rng.random_bool(0.5);
        c = shift_vertex(&c, gene, up);
    }
    if rng.random_bool(cfg.consequent_reset_rate) && !c.rule_genes.is_empty() {
        let gene = rng.random_range(0..c.rule_genes.len());
        c.rule_genes[gene] = rng.random_range(0..c.levels);
    }
    c
}

/// `p1[..k] ++ p2[k..]` over the flattened gene string.
pub fn one_point(p1: &FuzzyChromosome, p2: &FuzzyChromosome, k: usize) -> Result<FuzzyChromosome, FgaError> {
    two_point(p1, p2, k, p1.len())
}

/// Genes in `[i, j)` from `p2`, the rest from `p1`.
pub fn two_point(p1: &FuzzyChromosome, p2: &FuzzyChromosome, i: usize, j: usize) -> Result<FuzzyChromosome, FgaError> {
    if !p1.same_shape(p2) {
        return Err(FgaError::ShapeMismatch);
    }
    let mut child = p1.clone();
    for k in i..j.min(p1.len()) {
        child.set_gene(k, p2.gene(k));
    }
    Ok(child)
}

pub fn crossover(
    p1: &FuzzyChromosome,
    p2: &FuzzyChromosome,
    strategy: Crossover,
    rng: &mut Rng,
) -> Result<FuzzyChromosome, FgaError> {
    if !p1.same_shape(p2) {
        return Err(FgaError::ShapeMismatch);
    }
    let len = p1.len();
    match strategy {
        Crossover::X1 => one_point(p1, p2, rng.random_range(1..len.max(2))),
        Crossover::X2 => {
            let mut child = p1.clone();
            for k in 0..len {
                if rng.random_bool(0.5) {
                    child.set_gene(k, p2.gene(k));
                }
            }
            Ok(child)
        }
        Crossover::X3 => {
            let (mf, rules) = if rng.random_bool(0.5) { (p1, p2) } else { (p2, p1) };
            Ok(FuzzyChromosome {
                levels: p1.levels,
                mf_genes: mf.mf_genes.clone(),
                rule_genes: rules.rule_genes.clone(),
            })
        }
        Crossover::X4 => {
            let i = rng.random_range(0..len);
            let j = rng.random_range(i + 1..=len);
            two_point(p1, p2, i, j)
        }
    }
}

/// Index drawn with probability proportional to `weights` from one uniform
/// draw. A trailing zero weight never changes which index a draw selects.
pub fn sample_index(weights: &[f64], rng: &mut Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

pub fn chromosome_rmse(chrom: &FuzzyChromosome, train: &[(Vec<f64>, f64)]) -> Result<f64, FgaError> {
    let fs = decode(chrom);
    let mut predicted = Vec::with_capacity(train.len());
    for (x, _) in train {
        predicted.push(fs.infer(x)?);
    }
    let expected: Vec<f64> = train.iter().map(|(_, t)| *t).collect();
    metrics::rmse(&expected, &predicted).map_err(|_| FgaError::EmptyTrainingSet)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FgaGeneration {
    pub generation: usize,
    pub best_rmse: f64,
    pub generation_best_rmse: f64,
}

#[derive(Clone, Debug)]
pub struct FgaReport {
    pub best: FuzzySystem,
    pub best_chromosome: FuzzyChromosome,
    pub best_rmse: f64,
    pub history: Vec<FgaGeneration>,
    /// Offspring produced by each of X1..X4.
    pub strategy_counts: [usize; 4],
}

fn check_training(train: &[(Vec<f64>, f64)], input_count: usize) -> Result<(), FgaError> {
    if train.is_empty() {
        return Err(FgaError::EmptyTrainingSet);
    }
    for (row, (x, t)) in train.iter().enumerate() {
        if x.len() != input_count {
            return Err(FgaError::Arity { row, expected: input_count, got: x.len() });
        }
        if let Some(&v) = x.iter().chain(std::iter::once(t)).find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(FgaError::Range(v));
        }
    }
    Ok(())
}

pub fn evolve(train: &[(Vec<f64>, f64)], cfg: &FgaConfig, input_count: usize) -> Result<FuzzySystem, FgaError> {
    Ok(evolve_with(train, cfg, input_count, |_| {})?.best)
}

/// As [`evolve`], reporting each generation (generation 0 is the initial
/// population) to `observe`.
pub fn evolve_with(
    train: &[(Vec<f64>, f64)],
    cfg: &FgaConfig,
    input_count: usize,
    observe: impl FnMut(&FgaGeneration),
) -> Result<FgaReport, FgaError> {
    run(train, cfg, input_count, &Crossover::ALL, &cfg.crossover_weights, observe)
}

/// The GA restricted to X1..X3 with the first three configured weights
/// (renormalized), i.e. without the two-point crossover.
pub fn evolve_three_strategy(
    train: &[(Vec<f64>, f64)],
    cfg: &FgaConfig,
    input_count: usize,
) -> Result<FgaReport, FgaError> {
    let w = &cfg.crossover_weights[..3];
    let sum: f64 = w.iter().sum();
    if !(sum > 0.0) {
        return Err(FgaError::Config("X1..X3 weights are all zero".into()));
    }
    let weights: Vec<f64> = w.iter().map(|x| x / sum).collect();
    let mut check = cfg.clone();
    check.crossover_weights = [weights[0], weights[1], weights[2], 0.0];
    check.validate()?;
    run(train, cfg, input_count, &Crossover::ALL[..3], &cfg.crossover_weights[..3], |_| {})
}

fn run(
    train: &[(Vec<f64>, f64)],
    cfg: &FgaConfig,
    input_count: usize,
    strategies: &[Crossover],
    weights: &[f64],
    mut observe: impl FnMut(&FgaGeneration),
) -> Result<FgaReport, FgaError> {
    if strategies.len() == Crossover::ALL.len() {
        cfg.validate()?;
    }
    if input_count == 0 {
        return Err(FgaError::Config("input_count must be positive".into()));
    }
    check_training(train, input_count)?;
    let mut rng = rng::seeded(cfg.seed);
    let evaluate = |pop: &[FuzzyChromosome]| -> Result<Vec<f64>, FgaError> {
        pop.par_iter().map(|c| chromosome_rmse(c, train)).collect()
    };

    let mut population: Vec<FuzzyChromosome> =
        (0..cfg.population_size).map(|_| FuzzyChromosome::random(input_count, cfg.quantization, &mut rng)).collect();
    let mut fitness = evaluate(&population)?;
    let mut best_i = argmin(&fitness);
    let mut best = population[best_i].clone();
    let mut best_rmse = fitness[best_i];
    let mut history = Vec::with_capacity(cfg.generations + 1);
    let mut strategy_counts = [0usize; 4];
    let mut record = |generation, fit: &[f64], best_rmse| {
        let g = FgaGeneration {
            generation,
            best_rmse,
            generation_best_rmse: fit.iter().copied().fold(f64::INFINITY, f64::min),
        };
        observe(&g);
        history.push(g);
    };
    record(0, &fitness, best_rmse);

    for generation in 1..=cfg.generations {
        let mut ranked: Vec<usize> = (0..population.len()).collect();
        ranked.sort_by(|&i, &j| fitness[i].total_cmp(&fitness[j]).then(i.cmp(&j)));
        let mut next: Vec<FuzzyChromosome> = ranked[..cfg.elitism].iter().map(|&i| population[i].clone()).collect();
        while next.len() < cfg.population_size {
            let a = tournament(&fitness, cfg.tournament_size, &mut rng);
            let b = tournament(&fitness, cfg.tournament_size, &mut rng);
            let strategy = strategies[sample_index(weights, &mut rng)];
            strategy_counts[strategy as usize] += 1;
            let child = crossover(&population[a], &population[b], strategy, &mut rng)?;
            next.push(mutate(&child, cfg, &mut rng));
        }
        population = next;
        fitness = evaluate(&population)?;
        best_i = argmin(&fitness);
        if fitness[best_i] < best_rmse {
            best_rmse = fitness[best_i];
            best = population[best_i].clone();
        }
        record(generation, &fitness, best_rmse);
    }
    Ok(FgaReport { best: decode(&best), best_chromosome: best, best_rmse, history, strategy_counts })
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

fn tournament(fitness: &[f64], size: usize, rng: &mut Rng) -> usize {
    let mut best = rng.random_range(0..fitness.len());
    for _ in 1..size {
        let i = rng.random_range(0..fitness.len());
        if (fitness[i], i) < (fitness[best], best) {
            best = i;
        }
    }
    best
}
