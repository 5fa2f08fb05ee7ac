//! Mean-variance robust-design baseline: Monte Carlo moments and an
//! NSGA-II genetic algorithm producing a Pareto archive of
//! `(1/mean, variance)` trade-offs for comparison with density matching.

use alloc::vec::Vec;

use rand::Rng;

use crate::chunks;
use crate::densities::SampleSet;
use crate::error::{Error, Result};
use crate::math;
use crate::models::{BoxBounds, ResponseModel};
use crate::objective::SurrogateSpec;
use crate::rng::StreamRng;

/// Population (divide-by-M) moments of a response sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSummary {
    pub mean: f64,
    pub variance: f64,
    /// Third standardized moment; defined as zero for a constant sample.
    pub skewness: f64,
    pub count: usize,
}

pub fn sample_moments(values: &[f64]) -> Result<MomentSummary> {
    if values.is_empty() {
        return Err(Error::InvalidConfig(alloc::string::String::from(
            "moments need at least one sample",
        )));
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    for v in values {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= m;
    m3 /= m;
    let skewness = if m2 > 0.0 {
        m3 / math::powf(m2, 1.5)
    } else {
        0.0
    };
    Ok(MomentSummary {
        mean,
        variance: m2,
        skewness,
        count: values.len(),
    })
}

/// The two RDO objectives at one design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdoObjectives {
    pub inv_mean: f64,
    pub variance: f64,
    /// True when a nonpositive mean was replaced by the penalty value.
    pub penalized: bool,
}

/// `(1/mean, variance)` from raw response values; a nonpositive mean gets
/// the (large, finite) penalty instead of an unusable reciprocal.
pub fn objectives_from_values(values: &[f64], penalty: f64) -> Result<RdoObjectives> {
    let m = sample_moments(values)?;
    if m.mean <= 0.0 {
        return Ok(RdoObjectives {
            inv_mean: penalty,
            variance: m.variance,
            penalized: true,
        });
    }
    Ok(RdoObjectives {
        inv_mean: 1.0 / m.mean,
        variance: m.variance,
        penalized: false,
    })
}

/// Evaluate the RDO objectives for `model` at `s` over a frozen omega set.
pub fn rdo_objectives(
    model: &ResponseModel,
    s: &[f64],
    samples: &SampleSet,
    penalty: f64,
) -> Result<RdoObjectives> {
    let values = model.eval_batch(s, samples.values())?;
    objectives_from_values(&values, penalty)
}

/// Ranked non-domination fronts (minimization in both coordinates);
/// front 0 is the non-dominated set.
pub fn nondominated_sort(points: &[[f64; 2]]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
    let mut count = alloc::vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            if dominates(&points[i], &points[j]) {
                dominated_by[i].push(j);
            } else if dominates(&points[j], &points[i]) {
                count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                count[j] -= 1;
                if count[j] == 0 {
                    next.push(j);
                }
            }
        }
        fronts.push(core::mem::take(&mut current));
        current = next;
    }
    fronts
}

/// `a` dominates `b`: no worse in both coordinates, strictly better in one.
#[inline]
pub fn dominates(a: &[f64; 2], b: &[f64; 2]) -> bool {
    a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1])
}

/// Crowding distances within one front; boundary points are infinite.
pub fn crowding_distance(points: &[[f64; 2]], front: &[usize]) -> Vec<f64> {
    let len = front.len();
    let mut dist = alloc::vec![0.0f64; len];
    if len <= 2 {
        return alloc::vec![f64::INFINITY; len];
    }
    for axis in 0..2 {
        let mut order: Vec<usize> = (0..len).collect();
        order.sort_by(|&a, &b| {
            points[front[a]][axis]
                .partial_cmp(&points[front[b]][axis])
                .unwrap()
        });
        let lo = points[front[order[0]]][axis];
        let hi = points[front[order[len - 1]]][axis];
        dist[order[0]] = f64::INFINITY;
        dist[order[len - 1]] = f64::INFINITY;
        if hi > lo {
            for w in 1..len - 1 {
                let below = points[front[order[w - 1]]][axis];
                let above = points[front[order[w + 1]]][axis];
                dist[order[w]] += (above - below) / (hi - lo);
            }
        }
    }
    dist
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nsga2Config {
    pub population: usize,
    pub generations: usize,
    pub crossover_probability: f64,
    /// Per-variable mutation probability; defaults to `1/n`.
    pub mutation_probability: Option<f64>,
    pub crossover_index: f64,
    pub mutation_index: f64,
}

impl Default for Nsga2Config {
    fn default() -> Self {
        Self {
            population: 100,
            generations: 35,
            crossover_probability: 0.9,
            mutation_probability: None,
            crossover_index: 20.0,
            mutation_index: 20.0,
        }
    }
}

impl Nsga2Config {
    pub fn resolved_mutation_probability(&self, n: usize) -> f64 {
        self.mutation_probability.unwrap_or(1.0 / n as f64)
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.population < 4 || self.population % 2 != 0 {
            return Err(Error::InvalidConfig(alloc::format!(
                "population must be even and at least 4, got {}",
                self.population
            )));
        }
        if self.generations == 0 {
            return Err(Error::InvalidConfig(alloc::string::String::from(
                "need at least one generation",
            )));
        }
        let pm = self.resolved_mutation_probability(n);
        if !(0.0..=1.0).contains(&self.crossover_probability) || !(0.0..=1.0).contains(&pm) {
            return Err(Error::InvalidConfig(alloc::string::String::from(
                "probabilities must lie in [0, 1]",
            )));
        }
        if !(self.crossover_index > 0.0 && self.mutation_index > 0.0) {
            return Err(Error::InvalidConfig(alloc::string::String::from(
                "distribution indices must be positive",
            )));
        }
        Ok(())
    }
}

/// Raw engine output: the final population's first front plus the
/// per-generation best of each objective (for elitism checks).
#[derive(Debug, Clone, PartialEq)]
pub struct Nsga2Outcome {
    pub front_designs: Vec<Vec<f64>>,
    pub front_objectives: Vec<[f64; 2]>,
    pub generations_run: usize,
    pub per_generation_best: Vec<[f64; 2]>,
}

/// Canonical NSGA-II (binary tournament on rank and crowding, simulated
/// binary crossover, polynomial mutation, mu+lambda elitist selection)
/// minimizing a deterministic bi-objective fitness over a box.
pub fn nsga2_minimize<F>(
    fitness: F,
    bounds: &BoxBounds,
    cfg: &Nsga2Config,
    seed: u64,
) -> Result<Nsga2Outcome>
where
    F: Fn(&[f64]) -> Result<[f64; 2]> + Sync + Send,
{
    let n = bounds.dim();
    cfg.validate(n)?;
    let pm = cfg.resolved_mutation_probability(n);
    let mut rng = crate::rng::stream(seed, 0x6e73_6761);
    let pop_size = cfg.population;

    let mut pop: Vec<Vec<f64>> = (0..pop_size)
        .map(|_| {
            (0..n)
                .map(|k| rng.gen_range(bounds.lower()[k]..=bounds.upper()[k]))
                .collect()
        })
        .collect();
    let mut objs = eval_population(&fitness, &pop)?;
    let (mut ranks, mut crowd) = rank_and_crowd(&objs);
    let mut per_generation_best = Vec::with_capacity(cfg.generations);

    for _gen in 0..cfg.generations {
        let mut offspring: Vec<Vec<f64>> = Vec::with_capacity(pop_size);
        while offspring.len() < pop_size {
            let p1 = tournament(&mut rng, pop_size, &ranks, &crowd);
            let p2 = tournament(&mut rng, pop_size, &ranks, &crowd);
            let (mut c1, mut c2) = if rng.gen::<f64>() < cfg.crossover_probability {
                sbx_crossover(&pop[p1], &pop[p2], cfg.crossover_index, &mut rng)
            } else {
                (pop[p1].clone(), pop[p2].clone())
            };
            polynomial_mutation(&mut c1, pm, cfg.mutation_index, bounds, &mut rng);
            polynomial_mutation(&mut c2, pm, cfg.mutation_index, bounds, &mut rng);
            offspring.push(bounds.clamp(&c1));
            if offspring.len() < pop_size {
                offspring.push(bounds.clamp(&c2));
            }
        }
        let off_objs = eval_population(&fitness, &offspring)?;

        let mut all = pop;
        all.extend(offspring);
        let mut all_objs = objs;
        all_objs.extend(off_objs);

        let fronts = nondominated_sort(&all_objs);
        let mut chosen: Vec<usize> = Vec::with_capacity(pop_size);
        for front in &fronts {
            if chosen.len() + front.len() <= pop_size {
                chosen.extend_from_slice(front);
            } else {
                let cd = crowding_distance(&all_objs, front);
                let mut order: Vec<usize> = (0..front.len()).collect();
                order.sort_by(|&a, &b| cd[b].partial_cmp(&cd[a]).unwrap().then(a.cmp(&b)));
                for &w in order.iter().take(pop_size - chosen.len()) {
                    chosen.push(front[w]);
                }
                break;
            }
        }
        pop = chosen.iter().map(|&i| all[i].clone()).collect();
        objs = chosen.iter().map(|&i| all_objs[i]).collect();
        let rc = rank_and_crowd(&objs);
        ranks = rc.0;
        crowd = rc.1;
        per_generation_best.push([
            objs.iter().map(|o| o[0]).fold(f64::INFINITY, f64::min),
            objs.iter().map(|o| o[1]).fold(f64::INFINITY, f64::min),
        ]);
    }

    let fronts = nondominated_sort(&objs);
    let first = &fronts[0];
    Ok(Nsga2Outcome {
        front_designs: first.iter().map(|&i| pop[i].clone()).collect(),
        front_objectives: first.iter().map(|&i| objs[i]).collect(),
        generations_run: cfg.generations,
        per_generation_best,
    })
}

fn eval_population<F>(fitness: &F, pop: &[Vec<f64>]) -> Result<Vec<[f64; 2]>>
where
    F: Fn(&[f64]) -> Result<[f64; 2]> + Sync + Send,
{
    chunks::par_map(pop, |s| fitness(s))
        .into_iter()
        .collect::<Result<Vec<_>>>()
}

fn rank_and_crowd(objs: &[[f64; 2]]) -> (Vec<usize>, Vec<f64>) {
    let fronts = nondominated_sort(objs);
    let mut ranks = alloc::vec![0usize; objs.len()];
    let mut crowd = alloc::vec![0.0f64; objs.len()];
    for (r, front) in fronts.iter().enumerate() {
        let cd = crowding_distance(objs, front);
        for (w, &i) in front.iter().enumerate() {
            ranks[i] = r;
            crowd[i] = cd[w];
        }
    }
    (ranks, crowd)
}

/// Binary tournament on (rank, crowding distance); deterministic given
/// the generator state.
fn tournament(rng: &mut StreamRng, len: usize, ranks: &[usize], crowd: &[f64]) -> usize {
    let a = rng.gen_range(0..len);
    let b = rng.gen_range(0..len);
    if ranks[a] < ranks[b] {
        a
    } else if ranks[b] < ranks[a] {
        b
    } else if crowd[a] >= crowd[b] {
        a
    } else {
        b
    }
}

/// Simulated binary crossover (Deb & Agrawal), variable-wise with
/// probability one half; offspring are clamped by the caller.
fn sbx_crossover(
    p1: &[f64],
    p2: &[f64],
    eta: f64,
    rng: &mut StreamRng,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    for k in 0..p1.len() {
        if rng.gen::<f64>() > 0.5 || (p1[k] - p2[k]).abs() < 1e-14 {
            continue;
        }
        let u: f64 = rng.gen();
        let beta = if u <= 0.5 {
            math::powf(2.0 * u, 1.0 / (eta + 1.0))
        } else {
            math::powf(1.0 / (2.0 * (1.0 - u)), 1.0 / (eta + 1.0))
        };
        c1[k] = 0.5 * ((1.0 + beta) * p1[k] + (1.0 - beta) * p2[k]);
        c2[k] = 0.5 * ((1.0 - beta) * p1[k] + (1.0 + beta) * p2[k]);
    }
    (c1, c2)
}

/// Polynomial mutation with distribution index `eta`, per variable.
fn polynomial_mutation(
    s: &mut [f64],
    pm: f64,
    eta: f64,
    bounds: &BoxBounds,
    rng: &mut StreamRng,
) {
    for k in 0..s.len() {
        if rng.gen::<f64>() >= pm {
            continue;
        }
        let u: f64 = rng.gen();
        let delta = if u < 0.5 {
            math::powf(2.0 * u, 1.0 / (eta + 1.0)) - 1.0
        } else {
            1.0 - math::powf(2.0 * (1.0 - u), 1.0 / (eta + 1.0))
        };
        s[k] += delta * (bounds.upper()[k] - bounds.lower()[k]);
    }
}

/// One non-dominated design with its recorded statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveMember {
    pub design: Vec<f64>,
    pub inv_mean: f64,
    pub variance: f64,
    pub moments: MomentSummary,
    pub penalized: bool,
}

/// The final population's non-dominated set.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoArchive {
    pub members: Vec<ArchiveMember>,
    pub generation: usize,
}

impl ParetoArchive {
    /// No member dominates another.
    pub fn is_pareto_pure(&self) -> bool {
        let pts: Vec<[f64; 2]> = self
            .members
            .iter()
            .map(|m| [m.inv_mean, m.variance])
            .collect();
        for (i, a) in pts.iter().enumerate() {
            for (j, b) in pts.iter().enumerate() {
                if i != j && dominates(a, b) {
                    return false;
                }
            }
        }
        true
    }
}

/// RDO driver settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RdoRunConfig {
    pub ga: Nsga2Config,
    pub seed: u64,
    /// Objective value substituted for a nonpositive mean.
    pub penalty: f64,
    /// When set, each fitness call fits a fresh response surface at the
    /// candidate design and estimates the moments on it.
    pub surrogate: Option<SurrogateSpec>,
}

impl Default for RdoRunConfig {
    fn default() -> Self {
        Self {
            ga: Nsga2Config::default(),
            seed: 0,
            penalty: 1e6,
            surrogate: None,
        }
    }
}

/// NSGA-II over `(1/mean, variance)` of the model response, using one
/// frozen omega draw for every fitness evaluation.
pub fn nsga2_run(
    model: &ResponseModel,
    bounds: &BoxBounds,
    samples: &SampleSet,
    cfg: &RdoRunConfig,
) -> Result<ParetoArchive> {
    let eval_values = |s: &[f64]| -> Result<Vec<f64>> {
        match &cfg.surrogate {
            Some(spec) => {
                let sur = crate::models::surrogate_model(model, s, spec.points, spec.degree)?;
                sur.eval_batch(s, samples.values())
            }
            None => model.eval_batch(s, samples.values()),
        }
    };
    let fitness = |s: &[f64]| -> Result<[f64; 2]> {
        let o = objectives_from_values(&eval_values(s)?, cfg.penalty)?;
        Ok([o.inv_mean, o.variance])
    };
    let outcome = nsga2_minimize(fitness, bounds, &cfg.ga, cfg.seed)?;
    let mut members = Vec::with_capacity(outcome.front_designs.len());
    for design in outcome.front_designs {
        let values = eval_values(&design)?;
        let moments = sample_moments(&values)?;
        let o = objectives_from_values(&values, cfg.penalty)?;
        members.push(ArchiveMember {
            design,
            inv_mean: o.inv_mean,
            variance: o.variance,
            moments,
            penalized: o.penalized,
        });
    }
    Ok(ParetoArchive {
        members,
        generation: outcome.generations_run,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::Distribution;
    use approx::assert_relative_eq;

    #[test]
    fn moments_of_constants_and_symmetric_triples() {
        let m = sample_moments(&[4.2, 4.2, 4.2]).unwrap();
        assert_eq!((m.mean, m.variance, m.skewness), (4.2, 0.0, 0.0));
        let m = sample_moments(&[-1.0, 0.0, 1.0]).unwrap();
        assert_relative_eq!(m.mean, 0.0);
        assert_relative_eq!(m.variance, 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(m.skewness, 0.0);
        assert!(sample_moments(&[]).is_err());
    }

    #[test]
    fn standard_normal_skewness_is_near_zero() {
        let d = Distribution::gaussian(0.0, 1.0).unwrap();
        let s = d.sample(19, 1_000_000).unwrap();
        let m = sample_moments(s.values()).unwrap();
        let se = (6.0 / 1e6f64).sqrt();
        assert!(m.skewness.abs() < 3.0 * se, "skewness {}", m.skewness);
    }

    #[test]
    fn rdo_objectives_of_the_linear_model() {
        let model = ResponseModel::LinearShift;
        let omegas = model.uncertainty().sample(7, 100_000).unwrap();
        let o = rdo_objectives(&model, &[0.3], &omegas, 1e6).unwrap();
        assert!(!o.penalized);
        assert!((o.inv_mean - 1.0 / 3.5).abs() < 2e-3, "1/mean {}", o.inv_mean);
        assert!((o.variance - 0.09).abs() < 2e-3, "variance {}", o.variance);
    }

    #[test]
    fn constant_and_nonpositive_value_sets() {
        let o = objectives_from_values(&[5.0; 64], 1e6).unwrap();
        assert_eq!((o.inv_mean, o.variance, o.penalized), (0.2, 0.0, false));
        let o = objectives_from_values(&[-1.0, -3.0], 1e6).unwrap();
        assert!(o.penalized);
        assert_eq!(o.inv_mean, 1e6);
        assert_eq!(o.variance, 1.0);
    }

    #[test]
    fn hand_checked_domination_fronts() {
        let pts = [[1.0, 2.0], [2.0, 1.0], [3.0, 3.0], [0.5, 4.0]];
        let fronts = nondominated_sort(&pts);
        assert_eq!(fronts.len(), 2);
        let mut f1 = fronts[0].clone();
        f1.sort_unstable();
        assert_eq!(f1, alloc::vec![0, 1, 3]);
        assert_eq!(fronts[1], alloc::vec![2]);

        assert_eq!(nondominated_sort(&[[1.0, 1.0]]).len(), 1);

        let equal = [[2.0, 2.0]; 5];
        let fronts = nondominated_sort(&equal);
        assert_eq!(fronts.len(), 1);
        assert_eq!(fronts[0].len(), 5);
    }

    #[test]
    fn sort_matches_brute_force_on_random_instances() {
        use rand::Rng;
        let mut rng = crate::rng::stream(41, 7);
        for trial in 0..20 {
            let n = rng.gen_range(1..=200);
            let pts: Vec<[f64; 2]> = (0..n)
                .map(|_| [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)])
                .collect();
            let fronts = nondominated_sort(&pts);
            // brute force: rank = longest chain of strict dominators
            let mut rank = alloc::vec![0usize; n];
            let mut changed = true;
            while changed {
                changed = false;
                for i in 0..n {
                    for j in 0..n {
                        if dominates(&pts[j], &pts[i]) && rank[i] < rank[j] + 1 {
                            rank[i] = rank[j] + 1;
                            changed = true;
                        }
                    }
                }
            }
            for (r, front) in fronts.iter().enumerate() {
                for &i in front {
                    assert_eq!(rank[i], r, "trial {trial}, point {i}");
                }
            }
            let total: usize = fronts.iter().map(|f| f.len()).sum();
            assert_eq!(total, n);
        }
    }

    #[test]
    fn boundary_crowding_is_infinite() {
        let pts = [[0.0, 3.0], [1.0, 2.0], [2.0, 1.0], [3.0, 0.0]];
        let front: Vec<usize> = (0..4).collect();
        let cd = crowding_distance(&pts, &front);
        assert_eq!(cd[0], f64::INFINITY);
        assert_eq!(cd[3], f64::INFINITY);
        assert!(cd[1].is_finite() && cd[2].is_finite());
    }

    fn toy_fitness(s: &[f64]) -> Result<[f64; 2]> {
        Ok([s[0] * s[0], (s[0] - 2.0) * (s[0] - 2.0)])
    }

    fn toy_bounds() -> BoxBounds {
        BoxBounds::new(alloc::vec![0.0; 16], alloc::vec![2.0; 16]).unwrap()
    }

    #[test]
    fn toy_front_spans_the_pareto_segment() {
        let cfg = Nsga2Config::default();
        assert_eq!(cfg.resolved_mutation_probability(16), 0.0625);
        let out = nsga2_minimize(toy_fitness, &toy_bounds(), &cfg, 3).unwrap();
        let s1: Vec<f64> = out.front_designs.iter().map(|d| d[0]).collect();
        let lo = s1.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = s1.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo >= 1.8, "front spans [{lo}, {hi}]");
        // archive is mutually non-dominated
        for (i, a) in out.front_objectives.iter().enumerate() {
            for (j, b) in out.front_objectives.iter().enumerate() {
                assert!(i == j || !dominates(a, b), "{i} dominates {j}");
            }
        }
    }

    #[test]
    fn reruns_with_one_seed_are_bit_identical() {
        let cfg = Nsga2Config {
            population: 40,
            generations: 10,
            ..Nsga2Config::default()
        };
        let a = nsga2_minimize(toy_fitness, &toy_bounds(), &cfg, 9).unwrap();
        let b = nsga2_minimize(toy_fitness, &toy_bounds(), &cfg, 9).unwrap();
        assert_eq!(a, b);
        let c = nsga2_minimize(toy_fitness, &toy_bounds(), &cfg, 10).unwrap();
        assert_ne!(a.front_objectives, c.front_objectives);
    }

    #[test]
    fn elitism_never_worsens_single_objective_bests() {
        let cfg = Nsga2Config {
            population: 30,
            generations: 25,
            ..Nsga2Config::default()
        };
        let out = nsga2_minimize(toy_fitness, &toy_bounds(), &cfg, 17).unwrap();
        for w in out.per_generation_best.windows(2) {
            assert!(w[1][0] <= w[0][0], "objective 0 worsened: {w:?}");
            assert!(w[1][1] <= w[0][1], "objective 1 worsened: {w:?}");
        }
    }

    #[test]
    fn rdo_run_produces_a_pure_archive_on_the_synthetic_model() {
        let model = ResponseModel::SyntheticAirfoil;
        let omegas = model.uncertainty().sample(5, 4000).unwrap();
        let cfg = RdoRunConfig {
            ga: Nsga2Config {
                population: 24,
                generations: 8,
                ..Nsga2Config::default()
            },
            seed: 5,
            penalty: 1e6,
            surrogate: None,
        };
        let archive = nsga2_run(&model, &model.design_box(), &omegas, &cfg).unwrap();
        assert!(!archive.members.is_empty());
        assert!(archive.is_pareto_pure());
        assert!(archive.members.iter().all(|m| !m.penalized));
        assert_eq!(archive.generation, 8);
    }
}
