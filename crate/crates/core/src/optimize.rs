//! NSGA-II over `(h, γ₁..γ_K)` and augmented-scalarization selection.
//!
//! Both objectives are maximised: `j1` is SSIM between the original and the
//! enhanced image, `j2` the RGB entropy of the enhanced image.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enhance::PreparedImage;
use crate::error::{invalid, Result};
use crate::metrics::{entropy_rgb, lenient_f64, ssim, ssim_global, PEAK};
use crate::reconstruct::SpectraCache;

pub const H_BOUNDS: (f64, f64) = (0.05, 20.0);
pub const GAMMA_BOUNDS: (f64, f64) = (1.0, 15.0);

/// Augmentation coefficient of the scalarization.
const ASF_RHO: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chromosome {
    pub h: f64,
    pub gammas: Vec<f64>,
}

impl Chromosome {
    fn genes(&self) -> Vec<f64> {
        std::iter::once(self.h).chain(self.gammas.iter().copied()).collect()
    }

    fn from_genes(genes: &[f64]) -> Self {
        Self {
            h: genes[0],
            gammas: genes[1..].to_vec(),
        }
    }

    pub fn within_bounds(&self) -> bool {
        (H_BOUNDS.0..=H_BOUNDS.1).contains(&self.h)
            && self.gammas.iter().all(|g| (GAMMA_BOUNDS.0..=GAMMA_BOUNDS.1).contains(g))
    }
}

fn gene_bounds(idx: usize) -> (f64, f64) {
    if idx == 0 {
        H_BOUNDS
    } else {
        GAMMA_BOUNDS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objectives {
    #[serde(with = "lenient_f64")]
    pub j1: f64,
    pub j2: f64,
}

impl Objectives {
    /// Marker for evaluations that failed.
    pub const INFEASIBLE: Self = Self {
        j1: f64::NEG_INFINITY,
        j2: 0.0,
    };

    fn values(&self) -> [f64; 2] {
        [self.j1, self.j2]
    }

    /// Maximisation dominance: no worse in both, better in at least one.
    pub fn dominates(&self, other: &Self) -> bool {
        self.j1 >= other.j1 && self.j2 >= other.j2 && (self.j1 > other.j1 || self.j2 > other.j2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub chromosome: Chromosome,
    pub objectives: Objectives,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    pub members: Vec<Member>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    /// Probability that a mating pair undergoes SBX.
    pub crossover_prob: f64,
    /// Per-gene mutation probability.
    pub mutation_prob: f64,
    pub eta_c: f64,
    pub eta_m: f64,
    pub seed: u64,
    /// One γ shared by every cluster instead of one per cluster.
    pub shared_gamma: bool,
    /// Use whole-image SSIM for `j1` instead of the windowed index.
    pub global_ssim: bool,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 20,
            generations: 10,
            crossover_prob: 0.2,
            mutation_prob: 0.5,
            eta_c: 15.0,
            eta_m: 20.0,
            seed: 0,
            shared_gamma: false,
            global_ssim: false,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(invalid("population size must be at least 2"));
        }
        for (name, p) in [("crossover", self.crossover_prob), ("mutation", self.mutation_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(format!("{name} probability must lie in [0, 1], got {p}")));
            }
        }
        if !(self.eta_c >= 0.0 && self.eta_m >= 0.0) || !self.eta_c.is_finite() || !self.eta_m.is_finite() {
            return Err(invalid("distribution indices must be non-negative and finite"));
        }
        Ok(())
    }
}

// stream tags for the per-operation RNGs
const TAG_INIT: u64 = 1;
const TAG_VARIATION: u64 = 2;

/// Independent, reproducible RNG for `(tag, generation, index)`.
fn stream(seed: u64, tag: u64, generation: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << 56) | ((generation & 0xff_ffff) << 32) | (index & 0xffff_ffff));
    rng
}

/// Uniform random chromosomes inside the bounds.
pub fn init_population(config: &GaConfig, k: usize) -> Vec<Chromosome> {
    let n_gammas = if config.shared_gamma { 1 } else { k.max(1) };
    (0..config.population_size)
        .map(|i| {
            let mut rng = stream(config.seed, TAG_INIT, 0, i as u64);
            Chromosome {
                h: rng.random_range(H_BOUNDS.0..=H_BOUNDS.1),
                gammas: (0..n_gammas).map(|_| rng.random_range(GAMMA_BOUNDS.0..=GAMMA_BOUNDS.1)).collect(),
            }
        })
        .collect()
}

/// Scores chromosomes. Implementations must be pure so that evaluation can
/// run in parallel.
pub trait Evaluator: Sync {
    fn evaluate(&self, chromosome: &Chromosome) -> Objectives;
}

/// Objectives of the enhancement pipeline on one prepared image.
pub struct ImageEvaluator<'a> {
    prepared: &'a PreparedImage,
    cache: &'a SpectraCache,
    global_ssim: bool,
    reference_luma: crate::Plane,
}

impl<'a> ImageEvaluator<'a> {
    pub fn new(prepared: &'a PreparedImage, cache: &'a SpectraCache, global_ssim: bool) -> Self {
        Self {
            prepared,
            cache,
            global_ssim,
            reference_luma: prepared.original().luma(PEAK),
        }
    }

    /// Broadcasts a shared γ to every cluster.
    pub fn expand(&self, gammas: &[f64]) -> Vec<f64> {
        let k = self.prepared.model().k();
        if gammas.len() == 1 && k > 1 {
            vec![gammas[0]; k]
        } else {
            gammas.to_vec()
        }
    }

    fn try_evaluate(&self, chromosome: &Chromosome) -> Result<Objectives> {
        let enhanced = self
            .prepared
            .render(chromosome.h, &self.expand(&chromosome.gammas), self.cache)?;
        let luma = enhanced.luma(PEAK);
        let j1 = if self.global_ssim {
            ssim_global(&self.reference_luma, &luma)?
        } else {
            ssim(&self.reference_luma, &luma)?
        };
        Ok(Objectives {
            j1,
            j2: entropy_rgb(&enhanced),
        })
    }
}

impl Evaluator for ImageEvaluator<'_> {
    fn evaluate(&self, chromosome: &Chromosome) -> Objectives {
        self.try_evaluate(chromosome).unwrap_or(Objectives::INFEASIBLE)
    }
}

/// Fast non-dominated sort. Front 0 is the non-dominated set; indices inside
/// each front are ascending.
pub fn non_dominated_sort(objectives: &[Objectives]) -> Vec<Vec<usize>> {
    let n = objectives.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates: Vec<Vec<usize>> = vec![Vec::new(); n];
    for p in 0..n {
        for q in 0..n {
            if objectives[p].dominates(&objectives[q]) {
                dominates[p].push(q);
            } else if objectives[q].dominates(&objectives[p]) {
                dominated_by_count[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&p| dominated_by_count[p] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominates[p] {
                dominated_by_count[q] -= 1;
                if dominated_by_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of one front.
///
/// Boundary members of each objective get `+∞`; interior members sum their
/// neighbour gaps normalised by the objective's span. Objectives with a zero
/// or non-finite span add nothing to interior members.
pub fn crowding_distance(front: &[Objectives]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    for m in 0..2 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| front[a].values()[m].total_cmp(&front[b].values()[m]).then(a.cmp(&b)));
        let lo = front[order[0]].values()[m];
        let hi = front[order[n - 1]].values()[m];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let span = hi - lo;
        if !(span.is_finite() && span > 0.0) {
            continue;
        }
        for w in order.windows(3) {
            let gap = front[w[2]].values()[m] - front[w[0]].values()[m];
            dist[w[1]] += gap / span;
        }
    }
    dist
}

fn sbx_beta_q(u: f64, beta: f64, eta: f64) -> f64 {
    let alpha = 2.0 - beta.powf(-(eta + 1.0));
    if u <= 1.0 / alpha {
        (u * alpha).powf(1.0 / (eta + 1.0))
    } else {
        (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
    }
}

/// Bounded simulated binary crossover. With probability `crossover_prob`
/// every gene of the pair is recombined; otherwise the parents are copied.
pub fn sbx_crossover(
    p1: &Chromosome,
    p2: &Chromosome,
    config: &GaConfig,
    rng: &mut impl Rng,
) -> (Chromosome, Chromosome) {
    let mut c1 = p1.genes();
    let mut c2 = p2.genes();
    if rng.random::<f64>() >= config.crossover_prob {
        return (p1.clone(), p2.clone());
    }
    for idx in 0..c1.len() {
        let u: f64 = rng.random();
        let swap: bool = rng.random();
        let (x1, x2) = (c1[idx], c2[idx]);
        if (x1 - x2).abs() <= 1e-14 {
            continue;
        }
        let (lo, hi) = gene_bounds(idx);
        let (y1, y2) = (x1.min(x2), x1.max(x2));
        let span = y2 - y1;
        let bq1 = sbx_beta_q(u, 1.0 + 2.0 * (y1 - lo) / span, config.eta_c);
        let bq2 = sbx_beta_q(u, 1.0 + 2.0 * (hi - y2) / span, config.eta_c);
        let a = (0.5 * ((y1 + y2) - bq1 * span)).clamp(lo, hi);
        let b = (0.5 * ((y1 + y2) + bq2 * span)).clamp(lo, hi);
        (c1[idx], c2[idx]) = if swap { (b, a) } else { (a, b) };
    }
    (Chromosome::from_genes(&c1), Chromosome::from_genes(&c2))
}

/// Bounded polynomial mutation applied gene by gene.
pub fn poly_mutation(chromosome: &Chromosome, config: &GaConfig, rng: &mut impl Rng) -> Chromosome {
    let mut genes = chromosome.genes();
    let power = 1.0 / (config.eta_m + 1.0);
    for (idx, y) in genes.iter_mut().enumerate() {
        if rng.random::<f64>() >= config.mutation_prob {
            continue;
        }
        let (lo, hi) = gene_bounds(idx);
        let span = hi - lo;
        let d1 = (*y - lo) / span;
        let d2 = (hi - *y) / span;
        let u: f64 = rng.random();
        let delta_q = if u < 0.5 {
            let val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(config.eta_m + 1.0);
            val.powf(power) - 1.0
        } else {
            let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(config.eta_m + 1.0);
            1.0 - val.powf(power)
        };
        *y = (*y + delta_q * span).clamp(lo, hi);
    }
    Chromosome::from_genes(&genes)
}

/// Best objective values present in one generation's population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationBest {
    #[serde(with = "lenient_f64")]
    pub j1: f64,
    pub j2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaRun {
    pub front: ParetoFront,
    /// Entry 0 is the initial population, entry `g` generation `g`.
    pub history: Vec<GenerationBest>,
    /// Every chromosome produced, in order of creation.
    pub evaluated: Vec<Member>,
}

fn evaluate_all<E: Evaluator>(evaluator: &E, population: &[Chromosome]) -> Vec<Objectives> {
    population.par_iter().map(|c| evaluator.evaluate(c)).collect()
}

fn generation_best(objectives: &[Objectives]) -> GenerationBest {
    GenerationBest {
        j1: objectives.iter().map(|o| o.j1).fold(f64::NEG_INFINITY, f64::max),
        j2: objectives.iter().map(|o| o.j2).fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Rank and crowding distance of every individual.
fn rank_and_crowd(objectives: &[Objectives]) -> (Vec<usize>, Vec<f64>) {
    let mut rank = vec![0; objectives.len()];
    let mut crowd = vec![0.0; objectives.len()];
    for (r, front) in non_dominated_sort(objectives).iter().enumerate() {
        let objs: Vec<Objectives> = front.iter().map(|&i| objectives[i]).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&objs)) {
            rank[i] = r;
            crowd[i] = d;
        }
    }
    (rank, crowd)
}

fn tournament(rank: &[usize], crowd: &[f64], rng: &mut impl Rng) -> usize {
    let a = rng.random_range(0..rank.len());
    let b = rng.random_range(0..rank.len());
    let key = |i: usize| (rank[i], std::cmp::Reverse(ordered(crowd[i])), i);
    if key(a) <= key(b) {
        a
    } else {
        b
    }
}

/// Total order on crowding distances (`+∞` largest).
fn ordered(v: f64) -> u64 {
    let bits = v.to_bits();
    if v.is_sign_negative() {
        !bits
    } else {
        bits | (1 << 63)
    }
}

/// Elitist environmental selection of `n` survivors.
fn select_survivors(objectives: &[Objectives], n: usize) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(n);
    for front in non_dominated_sort(objectives) {
        if chosen.len() + front.len() <= n {
            chosen.extend(front);
            continue;
        }
        let objs: Vec<Objectives> = front.iter().map(|&i| objectives[i]).collect();
        let crowd = crowding_distance(&objs);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| crowd[b].total_cmp(&crowd[a]).then(a.cmp(&b)));
        chosen.extend(order.into_iter().take(n - chosen.len()).map(|i| front[i]));
        break;
    }
    chosen
}

/// Canonical member order: `j1` desc, `j2` desc, `h` asc, `gammas` lexicographic.
fn canonical_cmp(a: &Member, b: &Member) -> std::cmp::Ordering {
    b.objectives
        .j1
        .total_cmp(&a.objectives.j1)
        .then(b.objectives.j2.total_cmp(&a.objectives.j2))
        .then(a.chromosome.h.total_cmp(&b.chromosome.h))
        .then_with(|| {
            a.chromosome
                .gammas
                .iter()
                .zip(&b.chromosome.gammas)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(a.chromosome.gammas.len().cmp(&b.chromosome.gammas.len()))
        })
}

/// Runs NSGA-II for `config.generations` generations and returns the first
/// front of the final population.
pub fn run_nsga2<E: Evaluator>(evaluator: &E, k: usize, config: &GaConfig) -> Result<GaRun> {
    config.validate()?;
    if k == 0 {
        return Err(invalid("cluster count must be positive"));
    }
    let n = config.population_size;
    let mut population = init_population(config, k);
    let mut objectives = evaluate_all(evaluator, &population);
    let mut evaluated: Vec<Member> = population
        .iter()
        .zip(&objectives)
        .map(|(c, o)| Member {
            chromosome: c.clone(),
            objectives: *o,
        })
        .collect();
    let mut history = vec![generation_best(&objectives)];

    for generation in 1..=config.generations {
        let (rank, crowd) = rank_and_crowd(&objectives);
        let mut children = Vec::with_capacity(n);
        let mut pair = 0u64;
        while children.len() < n {
            let mut rng = stream(config.seed, TAG_VARIATION, generation as u64, pair);
            let a = tournament(&rank, &crowd, &mut rng);
            let b = tournament(&rank, &crowd, &mut rng);
            let (c1, c2) = sbx_crossover(&population[a], &population[b], config, &mut rng);
            children.push(poly_mutation(&c1, config, &mut rng));
            if children.len() < n {
                children.push(poly_mutation(&c2, config, &mut rng));
            }
            pair += 1;
        }
        let child_objectives = evaluate_all(evaluator, &children);
        evaluated.extend(children.iter().zip(&child_objectives).map(|(c, o)| Member {
            chromosome: c.clone(),
            objectives: *o,
        }));

        population.extend(children);
        objectives.extend(child_objectives);
        let survivors = select_survivors(&objectives, n);
        population = survivors.iter().map(|&i| population[i].clone()).collect();
        objectives = survivors.iter().map(|&i| objectives[i]).collect();
        history.push(generation_best(&objectives));
    }

    let first = non_dominated_sort(&objectives).into_iter().next().unwrap_or_default();
    let mut members: Vec<Member> = first
        .into_iter()
        .map(|i| Member {
            chromosome: population[i].clone(),
            objectives: objectives[i],
        })
        .collect();
    members.sort_by(canonical_cmp);
    members.dedup_by(|a, b| a.chromosome == b.chromosome);
    Ok(GaRun {
        front: ParetoFront { members },
        history,
        evaluated,
    })
}

/// Picks one front member by the augmented scalarization function.
///
/// Objectives are min-max normalised over the front; the ideal point is the
/// per-objective maximum unless `ref_point` (in raw objective units) is
/// given. Ties go to the earlier member in canonical order.
pub fn asf_select(front: &ParetoFront, weights: [f64; 2], ref_point: Option<[f64; 2]>) -> Result<Member> {
    if front.members.is_empty() {
        return Err(invalid("cannot select from an empty front"));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(invalid("ASF weights must be positive"));
    }
    let mut members = front.members.clone();
    members.sort_by(canonical_cmp);

    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for m in &members {
        for (i, v) in m.objectives.values().into_iter().enumerate() {
            lo[i] = lo[i].min(v);
            hi[i] = hi[i].max(v);
        }
    }
    let norm = |i: usize, v: f64| {
        let span = hi[i] - lo[i];
        if span.is_finite() && span > 0.0 && v.is_finite() {
            (v - lo[i]) / span
        } else {
            0.0
        }
    };
    let ideal: [f64; 2] = match ref_point {
        Some(r) => [norm(0, r[0]), norm(1, r[1])],
        None => [norm(0, hi[0]), norm(1, hi[1])],
    };

    let score = |m: &Member| {
        let gaps: Vec<f64> = (0..2)
            .map(|i| weights[i] * (ideal[i] - norm(i, m.objectives.values()[i])))
            .collect();
        gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max) + ASF_RHO * gaps.iter().sum::<f64>()
    };
    let mut best = 0;
    let mut best_score = score(&members[0]);
    for (i, m) in members.iter().enumerate().skip(1) {
        let s = score(m);
        if s < best_score {
            best = i;
            best_score = s;
        }
    }
    Ok(members.swap_remove(best))
}
