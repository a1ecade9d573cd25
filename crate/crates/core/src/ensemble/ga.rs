//! Real-coded genetic algorithm over the weight simplex.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::EnsembleError;

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub population: usize,
    pub max_generations: usize,
    /// Stop after this many generations without improvement of the best genome.
    pub stall_generations: usize,
    pub tournament_size: usize,
    pub crossover_prob: f64,
    /// Blend crossover extension factor.
    pub blend_alpha: f64,
    /// Per-gene mutation probability.
    pub mutation_prob: f64,
    pub mutation_sigma: f64,
    pub elitism: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 50,
            max_generations: 200,
            stall_generations: 30,
            tournament_size: 3,
            crossover_prob: 0.8,
            blend_alpha: 0.5,
            mutation_prob: 0.1,
            mutation_sigma: 0.1,
            elitism: 2,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), EnsembleError> {
        let bad = |m: String| Err(EnsembleError::Config(m));
        if self.population < 4 {
            return bad(format!("population {} must be >= 4", self.population));
        }
        for (name, p) in [("crossover_prob", self.crossover_prob), ("mutation_prob", self.mutation_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} {p} outside [0, 1]"));
            }
        }
        if !(self.mutation_sigma >= 0.0 && self.mutation_sigma.is_finite()) {
            return bad(format!("mutation_sigma {} must be >= 0", self.mutation_sigma));
        }
        if !(self.blend_alpha >= 0.0 && self.blend_alpha.is_finite()) {
            return bad(format!("blend_alpha {} must be >= 0", self.blend_alpha));
        }
        if self.tournament_size == 0 || self.tournament_size > self.population {
            return bad(format!("tournament_size {} outside 1..={}", self.tournament_size, self.population));
        }
        if self.elitism >= self.population {
            return bad(format!("elitism {} must be below the population size", self.elitism));
        }
        if self.max_generations == 0 {
            return bad("max_generations must be >= 1".into());
        }
        Ok(())
    }
}

/// Maps a genome onto the simplex; an all-zero genome becomes uniform.
pub fn normalize(genome: &[f64]) -> Vec<f64> {
    let s: f64 = genome.iter().sum();
    if s > 0.0 {
        genome.iter().map(|g| g / s).collect()
    } else {
        vec![1.0 / genome.len() as f64; genome.len()]
    }
}

/// Minimizes `objective` over normalized genomes. Returns the best normalized genome.
pub fn minimize(n: usize, cfg: &GaConfig, objective: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mutation = Normal::new(0.0, cfg.mutation_sigma).expect("sigma validated");
    let eval = |g: &[f64]| {
        let v = objective(&normalize(g));
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    // seed the corners and the centroid so the best single member is always present
    let mut pop: Vec<Vec<f64>> = Vec::with_capacity(cfg.population);
    for k in 0..n.min(cfg.population) {
        let mut g = vec![0.0; n];
        g[k] = 1.0;
        pop.push(g);
    }
    if pop.len() < cfg.population {
        pop.push(vec![1.0; n]);
    }
    while pop.len() < cfg.population {
        pop.push((0..n).map(|_| rng.gen::<f64>()).collect());
    }
    let mut scored: Vec<(f64, Vec<f64>)> = pop.into_iter().map(|g| (eval(&g), g)).collect();
    sort(&mut scored);

    let mut best = scored[0].0;
    let mut stall = 0;
    for _ in 0..cfg.max_generations {
        let mut next: Vec<(f64, Vec<f64>)> = scored[..cfg.elitism].to_vec();
        while next.len() < cfg.population {
            let a = tournament(&scored, cfg.tournament_size, &mut rng);
            let b = tournament(&scored, cfg.tournament_size, &mut rng);
            let mut child =
                if rng.gen::<f64>() < cfg.crossover_prob { blend(a, b, cfg.blend_alpha, &mut rng) } else { a.clone() };
            for g in child.iter_mut() {
                if rng.gen::<f64>() < cfg.mutation_prob {
                    *g = (*g + mutation.sample(&mut rng)).clamp(0.0, 1.0);
                }
            }
            next.push((eval(&child), child));
        }
        sort(&mut next);
        scored = next;
        if scored[0].0 < best {
            best = scored[0].0;
            stall = 0;
        } else {
            stall += 1;
            if stall >= cfg.stall_generations {
                break;
            }
        }
    }
    normalize(&scored[0].1)
}

fn sort(pop: &mut [(f64, Vec<f64>)]) {
    pop.sort_by(|a, b| a.0.total_cmp(&b.0));
}

fn tournament<'a>(pop: &'a [(f64, Vec<f64>)], k: usize, rng: &mut ChaCha8Rng) -> &'a Vec<f64> {
    // population is sorted, so the smallest index wins
    let winner = (0..k).map(|_| rng.gen_range(0..pop.len())).min().expect("k >= 1");
    &pop[winner].1
}

fn blend(a: &[f64], b: &[f64], alpha: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let (lo, hi) = (x.min(y), x.max(y));
            let d = hi - lo;
            let (lo, hi) = ((lo - alpha * d).max(0.0), (hi + alpha * d).min(1.0));
            if hi > lo {
                rng.gen_range(lo..=hi)
            } else {
                lo
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        GaConfig::default().validate().unwrap();
        let c = GaConfig { population: 3, ..GaConfig::default() };
        assert!(c.validate().is_err());
        let c = GaConfig { crossover_prob: 1.5, ..GaConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn finds_interior_minimum() {
        let target = [0.2, 0.5, 0.3];
        let w = minimize(3, &GaConfig::default(), |w| w.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum());
        for (a, b) in w.iter().zip(target) {
            assert!((a - b).abs() < 0.01, "{w:?}");
        }
    }

    #[test]
    fn deterministic() {
        let f = |w: &[f64]| (w[0] - 0.7).powi(2) + w[1];
        let cfg = GaConfig { seed: 9, ..GaConfig::default() };
        assert_eq!(minimize(2, &cfg, f), minimize(2, &cfg, f));
    }
}
