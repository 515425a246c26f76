//! Simulation of stationary paths and empirical moment vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::shift::{birkhoff_sum, ParameterPoint, PotentialFamily, SubshiftSpec, Word};
use crate::thermo::GibbsSystem;

/// Generator for `(seed, stream)`. Distinct streams of one seed are
/// independent, so parallel workers never share state.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSeq {
    pub symbols: Word,
    pub theta_true: Option<ParameterPoint>,
    pub seed: u64,
    pub stream: u64,
}

/// Precomputed cumulative tables of the stationary order-`r` chain.
#[derive(Debug, Clone)]
pub struct PathSampler {
    order: usize,
    words: Vec<Vec<usize>>,
    initial: Vec<f64>,
    // Per word: (cumulative probability, appended symbol, next word).
    steps: Vec<Vec<(f64, usize, usize)>>,
    theta: ParameterPoint,
}

fn pick<T>(table: &[(f64, T)], u: f64) -> &T {
    let i = table.partition_point(|(c, _)| *c <= u);
    &table[i.min(table.len() - 1)].1
}

impl PathSampler {
    pub fn new(sys: &GibbsSystem) -> Self {
        let graph = sys.graph();
        let r = graph.order();
        let mut acc = 0.0;
        let initial = sys
            .mu()
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        let steps = (0..graph.words().len())
            .map(|w| {
                let mut acc = 0.0;
                graph
                    .out_edges(w)
                    .map(|e| {
                        acc += sys.transitions()[e];
                        let edge = graph.edges()[e];
                        let sym = graph.edge_symbols(e)[r];
                        (acc, sym, edge.to)
                    })
                    .collect()
            })
            .collect();
        PathSampler {
            order: r,
            words: graph.words().iter().map(|w| w.symbols().to_vec()).collect(),
            initial,
            steps,
            theta: sys.theta().clone(),
        }
    }

    /// A path of length `n ≥ r` from the invariant measure.
    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        if n < self.order {
            return Err(Error::WordTooShort {
                need: self.order,
                got: n,
            });
        }
        let mut out = Vec::with_capacity(n);
        let u: f64 = rng.random();
        let init: Vec<(f64, usize)> = self.initial.iter().copied().zip(0..).collect();
        let mut cur = *pick(&init, u * self.initial[self.initial.len() - 1]);
        out.extend_from_slice(&self.words[cur]);
        while out.len() < n {
            let table = &self.steps[cur];
            let u: f64 = rng.random::<f64>() * table[table.len() - 1].0;
            let i = table
                .partition_point(|(c, _, _)| *c <= u)
                .min(table.len() - 1);
            let (_, sym, next) = table[i];
            out.push(sym);
            cur = next;
        }
        Ok(out)
    }

    pub fn sample_seq(&self, n: usize, seed: u64, stream: u64) -> Result<SampleSeq> {
        let mut rng = stream_rng(seed, stream);
        Ok(SampleSeq {
            symbols: Word::new(self.sample(n, &mut rng)?),
            theta_true: Some(self.theta.clone()),
            seed,
            stream,
        })
    }
}

pub fn sample_path(sys: &GibbsSystem, n: usize, seed: u64) -> Result<SampleSeq> {
    sample_path_stream(sys, n, seed, 0)
}

pub fn sample_path_stream(
    sys: &GibbsSystem,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<SampleSeq> {
    PathSampler::new(sys).sample_seq(n, seed, stream)
}

/// `count` independent paths on streams `0 … count−1`, generated in parallel.
pub fn sample_paths(
    sys: &GibbsSystem,
    n: usize,
    seed: u64,
    count: usize,
) -> Result<Vec<SampleSeq>> {
    let sampler = PathSampler::new(sys);
    (0..count as u64)
        .into_par_iter()
        .map(|s| sampler.sample_seq(n, seed, s))
        .collect()
}

/// `α_n = S_n F̄ / n` for `F̄ = (f₀, …, f_d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    pub alpha: Vec<f64>,
}

impl MomentVector {
    /// Components `1 … d`.
    pub fn directions(&self) -> &[f64] {
        &self.alpha[1..]
    }
}

pub fn empirical_moments(
    spec: &SubshiftSpec,
    fam: &PotentialFamily,
    w: &Word,
) -> Result<MomentVector> {
    let n = w.len();
    if n < fam.common_depth() {
        return Err(Error::WordTooShort {
            need: fam.common_depth(),
            got: n,
        });
    }
    let alpha = fam
        .all_functions()
        .map(|f| Ok(birkhoff_sum(spec, f, w)? / n as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(MomentVector { alpha })
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::models::{
        bernoulli_family, markov_family, markov_to_theta, stationary_distribution,
    };
    use crate::shift::{enumerate_admissible_words, LocallyConstantFn};
    use crate::thermo::{invariant_cylinder_prob, solve_gibbs, GibbsModel, DEFAULT_TOL};

    #[test]
    fn fair_coin_frequency() {
        let (spec, fam) = bernoulli_family(2).unwrap();
        let sys = solve_gibbs(&spec, &fam, &ParameterPoint::zeros(1), DEFAULT_TOL).unwrap();
        let n = 100_000;
        let path = sample_path(&sys, n, 7).unwrap();
        let ones = path.symbols.symbols().iter().filter(|&&s| s == 0).count() as f64;
        let band = 3.0 * (0.25f64 / n as f64).sqrt();
        assert!((ones / n as f64 - 0.5).abs() < band);
        let again = sample_path(&sys, n, 7).unwrap();
        assert_eq!(path, again);
        let other = sample_path_stream(&sys, n, 7, 1).unwrap();
        assert_ne!(path.symbols, other.symbols);
    }

    #[test]
    fn markov_pair_frequencies() {
        let spec = SubshiftSpec::full_shift(2).unwrap();
        let fam = markov_family(&spec).unwrap();
        let p = vec![vec![0.3, 0.7], vec![0.6, 0.4]];
        let theta = markov_to_theta(&spec, &p).unwrap();
        let sys = solve_gibbs(&spec, &fam, &theta, DEFAULT_TOL).unwrap();
        let n = 200_000;
        let path = sample_path(&sys, n, 3).unwrap();
        let s = path.symbols.symbols();
        let pi = stationary_distribution(&p);
        for i in 0..2 {
            for j in 0..2 {
                let c = s.windows(2).filter(|w| w[0] == i && w[1] == j).count() as f64;
                let f = c / (n - 1) as f64;
                let target = pi[i] * p[i][j];
                // Dependence inflates the variance; a 5σ iid band is ample.
                let sd = (target * (1.0 - target) / n as f64).sqrt();
                assert!((f - target).abs() < 5.0 * sd, "{i}{j}: {f} vs {target}");
            }
        }
    }

    // Chi-square goodness of fit of 3-cylinder frequencies on non-overlapping
    // blocks, against the exact invariant masses.
    #[test]
    fn block_frequencies_chi_square() {
        let spec = SubshiftSpec::golden_mean();
        let base = LocallyConstantFn::from_table(&spec, 2, &[0.3, -0.2, 0.5]).unwrap();
        let dir = LocallyConstantFn::from_table(&spec, 1, &[1.0, -0.5]).unwrap();
        let fam = crate::shift::PotentialFamily::new(&spec, base, vec![dir]).unwrap();
        let model = GibbsModel::new(&spec, &fam).unwrap();
        let sys = model.solve(&[0.4], DEFAULT_TOL).unwrap();
        let n = 100_000;
        let words = enumerate_admissible_words(&spec, 3);
        let s = sample_path(&sys, n, 99).unwrap().symbols.into_inner();
        // Blocks separated by a gap of 20 symbols are nearly independent.
        let mut counts = vec![0usize; words.len()];
        let mut total = 0usize;
        let mut k = 0;
        while k + 3 <= s.len() {
            let pos = words
                .iter()
                .position(|w| w.symbols() == &s[k..k + 3])
                .unwrap();
            counts[pos] += 1;
            total += 1;
            k += 23;
        }
        let mut chi2 = 0.0;
        for (w, c) in words.iter().zip(&counts) {
            let e = invariant_cylinder_prob(&sys, w).unwrap() * total as f64;
            chi2 += (*c as f64 - e).powi(2) / e;
        }
        // 4 degrees of freedom: the 0.1% critical value is 18.47.
        assert!(chi2 < 18.47, "chi2 = {chi2}");
    }

    #[test]
    fn moments_examples() {
        let spec = SubshiftSpec::full_shift(2).unwrap();
        let fam = crate::shift::PotentialFamily::new(
            &spec,
            LocallyConstantFn::constant(&spec, 2.5),
            vec![LocallyConstantFn::indicator(&spec, &[0])],
        )
        .unwrap();
        let w = Word::new(vec![0, 1, 1, 0, 0]);
        let m = empirical_moments(&spec, &fam, &w).unwrap();
        assert!((m.alpha[0] - 2.5).abs() < 1e-15);
        assert!((m.alpha[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn moments_converge() {
        let (spec, fam) = bernoulli_family(3).unwrap();
        let model = GibbsModel::new(&spec, &fam).unwrap();
        let sys = model.solve(&[0.5, -0.3], DEFAULT_TOL).unwrap();
        let path = sample_path(&sys, 100_000, 5).unwrap();
        let m = empirical_moments(&spec, &fam, &path.symbols).unwrap();
        let exact = model.gradient(&sys);
        for (a, b) in m.directions().iter().zip(&exact) {
            assert!((a - b).abs() < 0.01 * b);
        }
    }

    #[test]
    fn streams_are_uncorrelated() {
        let (spec, fam) = bernoulli_family(2).unwrap();
        let sys = solve_gibbs(&spec, &fam, &ParameterPoint::zeros(1), DEFAULT_TOL).unwrap();
        let n = 2000;
        let paths = sample_paths(&sys, n, 42, 100).unwrap();
        let centred: Vec<Vec<f64>> = paths
            .iter()
            .map(|p| {
                p.symbols
                    .symbols()
                    .iter()
                    .map(|&s| if s == 0 { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        let bound = 4.0 / (n as f64).sqrt();
        let mut worst: f64 = 0.0;
        for i in 0..centred.len() {
            for j in 0..i {
                let c: f64 = centred[i]
                    .iter()
                    .zip(&centred[j])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    / n as f64;
                worst = worst.max(c.abs());
            }
        }
        // 4950 pairs: the maximum of that many near-normal values stays
        // below 4.5σ with high probability.
        assert!(worst < 1.125 * bound, "max correlation {worst}");
    }
}
