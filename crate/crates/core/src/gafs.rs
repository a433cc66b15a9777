//! Wrapper feature selection: a generational GA over binary feature masks,
//! with SVM cross-validated accuracy as fitness.
//!
//! Fitness is a pure function of the mask (the fold split is fixed by the
//! master seed), so results are cached per mask and a generation can be
//! scored in parallel without affecting reproducibility. All random draws
//! happen on one sequential generator.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::binarize::BinaryMatrix;
use crate::bits::BitVec;
use crate::error::{Error, Result};
use crate::eval::stratified_kfold;
use crate::svm::{self, Gram, Kernel, SvmConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMask {
    pub bits: BitVec,
    pub fitness: Option<f64>,
}

impl FeatureMask {
    pub fn new(bits: BitVec) -> Self {
        Self { bits, fitness: None }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn selected(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.bits.ones_indices().collect()
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub crossover_rate: f64,
    /// Per-bit flip probability; `None` means `1 / mask length`.
    pub mutation_rate: Option<f64>,
    pub elitism_count: usize,
    pub max_generations: usize,
    pub target_fitness: Option<f64>,
    pub seed: u64,
    pub fitness_folds: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 50,
            crossover_rate: 0.9,
            mutation_rate: None,
            elitism_count: 2,
            max_generations: 100,
            target_fitness: None,
            seed: 0,
            fitness_folds: 5,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Param(m));
        if self.population_size < 2 {
            return bad("population_size must be at least 2".into());
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return bad(format!("crossover_rate {} outside [0, 1]", self.crossover_rate));
        }
        if let Some(r) = self.mutation_rate {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("mutation_rate {r} outside [0, 1]"));
            }
        }
        if self.elitism_count >= self.population_size {
            return bad("elitism_count must be below population_size".into());
        }
        if self.max_generations == 0 {
            return bad("max_generations must be at least 1".into());
        }
        if self.fitness_folds < 2 {
            return bad("fitness_folds must be at least 2".into());
        }
        Ok(())
    }
}

/// Per-generation summary.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub best_ever: f64,
    pub best_ever_selected: usize,
}

#[derive(Debug, Clone)]
pub struct GaResult {
    pub best: FeatureMask,
    pub fitness: f64,
    pub history: Vec<GenerationStats>,
    pub evaluations: usize,
}

/// Shared, immutable inputs for fitness evaluation.
pub struct FitnessContext {
    rows: Vec<BitVec>,
    labels: Vec<bool>,
    folds: Vec<(Vec<usize>, Vec<usize>)>,
    svm: SvmConfig,
}

impl FitnessContext {
    pub fn new(data: &BinaryMatrix, svm: &SvmConfig, folds: usize, seed: u64) -> Result<Self> {
        svm.validate()?;
        let labels: Vec<bool> = data.target.iter().collect();
        let folds = stratified_kfold(data.n_records, &labels, folds, seed)?;
        Ok(Self {
            rows: data.rows(),
            labels,
            folds,
            svm: *svm,
        })
    }

    pub fn n_features(&self) -> usize {
        self.rows.first().map_or(0, BitVec::len)
    }

    /// Kernel over all records with unselected columns zeroed. Default
    /// gamma is resolved against the number of selected columns.
    pub fn gram(&self, mask: &BitVec) -> Result<Gram> {
        let kernel: Kernel = self.svm.kernel.resolve(mask.count_ones());
        let masked: Vec<BitVec> = self.rows.iter().map(|r| r.and(mask)).collect();
        Gram::new(&masked, &kernel)
    }

    /// Out-of-fold SVM decision values under `mask`.
    pub fn scores(&self, mask: &BitVec) -> Result<Vec<f64>> {
        svm::out_of_fold_scores(&self.gram(mask)?, &self.labels, &self.folds, &self.svm)
    }

    /// Mean per-fold accuracy.
    pub fn evaluate(&self, mask: &BitVec) -> Result<f64> {
        if mask.len() != self.n_features() {
            return Err(Error::Param(format!(
                "mask has {} bits, data has {} features",
                mask.len(),
                self.n_features()
            )));
        }
        if !mask.any() {
            return Err(Error::Param("cannot evaluate an empty mask".into()));
        }
        let scores = self.scores(mask)?;
        let mut total = 0.0;
        for (_, test) in &self.folds {
            let correct = test
                .iter()
                .filter(|&&t| svm::predict_from_value(scores[t]) == self.labels[t])
                .count();
            total += correct as f64 / test.len() as f64;
        }
        Ok(total / self.folds.len() as f64)
    }
}

pub fn fitness(
    mask: &FeatureMask,
    data: &BinaryMatrix,
    svm: &SvmConfig,
    folds: usize,
    seed: u64,
) -> Result<f64> {
    FitnessContext::new(data, svm, folds, seed)?.evaluate(&mask.bits)
}

fn repair<R: Rng>(bits: &mut BitVec, candidates: &BitVec, rng: &mut R) {
    if bits.any() || bits.is_empty() {
        return;
    }
    let on: Vec<usize> = candidates.ones_indices().collect();
    let i = if on.is_empty() {
        rng.gen_range(0..bits.len())
    } else {
        on[rng.gen_range(0..on.len())]
    };
    bits.set(i, true);
}

/// Uniform crossover: each position is swapped between the children with
/// probability 1/2. An empty child gets one of its parents' set bits.
pub fn crossover<R: Rng>(a: &FeatureMask, b: &FeatureMask, rng: &mut R) -> Result<(FeatureMask, FeatureMask)> {
    if a.len() != b.len() {
        return Err(Error::Param(format!("mask lengths differ: {} vs {}", a.len(), b.len())));
    }
    let mut c1 = a.bits.clone();
    let mut c2 = b.bits.clone();
    for i in 0..a.len() {
        if rng.gen_bool(0.5) {
            let (x, y) = (c1.get(i), c2.get(i));
            c1.set(i, y);
            c2.set(i, x);
        }
    }
    let parents = a.bits.or(&b.bits);
    repair(&mut c1, &parents, rng);
    repair(&mut c2, &parents, rng);
    Ok((FeatureMask::new(c1), FeatureMask::new(c2)))
}

/// Flip each bit independently with probability `rate`; an empty result
/// gets one random bit set.
pub fn mutate<R: Rng>(m: &FeatureMask, rate: f64, rng: &mut R) -> Result<FeatureMask> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Param(format!("mutation rate {rate} outside [0, 1]")));
    }
    let mut bits = m.bits.clone();
    let mut changed = false;
    if rate > 0.0 {
        for i in 0..bits.len() {
            if rng.gen_bool(rate) {
                bits.flip(i);
                changed = true;
            }
        }
    }
    let all = BitVec::ones(bits.len());
    repair(&mut bits, &all, rng);
    Ok(FeatureMask {
        fitness: if changed { None } else { m.fitness },
        bits,
    })
}

/// Better first: higher fitness, then fewer selected features.
fn better(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}

pub fn run_ga(data: &BinaryMatrix, ga: &GaConfig, svm: &SvmConfig) -> Result<GaResult> {
    ga.validate()?;
    let ctx = FitnessContext::new(data, svm, ga.fitness_folds, ga.seed)?;
    run_ga_with(&ctx, ga)
}

pub fn run_ga_with(ctx: &FitnessContext, ga: &GaConfig) -> Result<GaResult> {
    ga.validate()?;
    let len = ctx.n_features();
    if len == 0 {
        return Err(Error::Param("no features to select from".into()));
    }
    let rate = ga.mutation_rate.unwrap_or(1.0 / len as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(ga.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut cache: HashMap<BitVec, f64> = HashMap::new();

    let mut population: Vec<FeatureMask> = Vec::with_capacity(ga.population_size);
    population.push(FeatureMask::new(BitVec::ones(len)));
    while population.len() < ga.population_size {
        let mut bits: BitVec = (0..len).map(|_| rng.gen_bool(0.5)).collect();
        repair(&mut bits, &BitVec::ones(len), &mut rng);
        population.push(FeatureMask::new(bits));
    }

    let mut history = Vec::new();
    let mut best: Option<FeatureMask> = None;
    for generation in 1..=ga.max_generations {
        // score unseen masks in parallel, then fill in from the cache
        let mut pending: Vec<&BitVec> = population
            .iter()
            .filter(|m| !cache.contains_key(&m.bits))
            .map(|m| &m.bits)
            .collect();
        pending.sort_by(|a, b| a.words().cmp(b.words()));
        pending.dedup();
        let scored: Vec<(BitVec, f64)> = pending
            .par_iter()
            .map(|bits| Ok(((*bits).clone(), ctx.evaluate(bits)?)))
            .collect::<Result<_>>()?;
        cache.extend(scored);
        for m in &mut population {
            m.fitness = Some(cache[&m.bits]);
        }

        let key = |m: &FeatureMask| (m.fitness.expect("scored"), m.selected());
        let gen_best = population
            .iter()
            .reduce(|a, b| if better(key(b), key(a)) { b } else { a })
            .expect("non-empty population");
        if best.as_ref().is_none_or(|b| better(key(gen_best), key(b))) {
            best = Some(gen_best.clone());
        }
        let best_ref = best.as_ref().expect("set above");
        let mean = population.iter().map(|m| m.fitness.expect("scored")).sum::<f64>() / population.len() as f64;
        history.push(GenerationStats {
            generation,
            best: key(gen_best).0,
            mean,
            best_ever: key(best_ref).0,
            best_ever_selected: best_ref.selected(),
        });
        log::debug!(
            "generation {generation}: best {:.4} mean {mean:.4} ({} masks cached)",
            key(gen_best).0,
            cache.len()
        );

        let reached = ga.target_fitness.is_some_and(|t| key(best_ref).0 >= t);
        if reached || generation == ga.max_generations {
            break;
        }

        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| {
            let (ka, kb) = (key(&population[a]), key(&population[b]));
            kb.0.total_cmp(&ka.0).then(ka.1.cmp(&kb.1)).then(a.cmp(&b))
        });
        let mut next: Vec<FeatureMask> = order[..ga.elitism_count].iter().map(|&i| population[i].clone()).collect();
        let tournament = |rng: &mut ChaCha8Rng| {
            let a = rng.gen_range(0..population.len());
            let b = rng.gen_range(0..population.len());
            let (ka, kb) = (key(&population[a]), key(&population[b]));
            if better(kb, ka) || (kb == ka && b < a) {
                b
            } else {
                a
            }
        };
        while next.len() < ga.population_size {
            let pa = &population[tournament(&mut rng)];
            let pb = &population[tournament(&mut rng)];
            let (c1, c2) = if rng.gen_bool(ga.crossover_rate) {
                crossover(pa, pb, &mut rng)?
            } else {
                (pa.clone(), pb.clone())
            };
            next.push(mutate(&c1, rate, &mut rng)?);
            if next.len() < ga.population_size {
                next.push(mutate(&c2, rate, &mut rng)?);
            }
        }
        population = next;
    }

    let best = best.expect("at least one generation");
    Ok(GaResult {
        fitness: best.fitness.expect("scored"),
        best,
        history,
        evaluations: cache.len(),
    })
}

pub fn write_history_csv(history: &[GenerationStats]) -> String {
    let mut s = String::from("generation,best,mean,best_ever,best_ever_selected\n");
    for h in history {
        s += &format!(
            "{},{:.6},{:.6},{:.6},{}\n",
            h.generation, h.best, h.mean, h.best_ever, h.best_ever_selected
        );
    }
    s
}
