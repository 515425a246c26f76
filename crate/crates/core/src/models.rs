//! Canonical model builders: i.i.d. (Bernoulli) and first-order Markov
//! families, with the conversion between transition matrices and parameters.

use crate::error::{Error, Result};
use crate::shift::{
    enumerate_admissible_words, LocallyConstantFn, ParameterPoint, PotentialFamily, SubshiftSpec,
};
use crate::thermo::{GibbsModel, DEFAULT_TOL};

/// Full shift on `a` symbols with `f₀ = 0` and the indicators of symbols
/// `1 … a−1` as directions. The Gibbs measure at θ is the product measure
/// with `πᵢ = e^{θᵢ} / (1 + Σⱼ e^{θⱼ})`, `π_a = 1 / (1 + Σⱼ e^{θⱼ})`.
pub fn bernoulli_family(a: usize) -> Result<(SubshiftSpec, PotentialFamily)> {
    let spec = SubshiftSpec::full_shift(a)?;
    let dirs = (0..a - 1)
        .map(|i| LocallyConstantFn::indicator(&spec, &[i]))
        .collect();
    let fam = PotentialFamily::new(&spec, LocallyConstantFn::zero(&spec), dirs)?;
    Ok((spec, fam))
}

/// Product-measure probabilities `π` for a Bernoulli parameter.
pub fn bernoulli_probabilities(theta: &[f64]) -> Vec<f64> {
    let top = theta.iter().copied().fold(0.0, f64::max);
    let mut w: Vec<f64> = theta.iter().map(|t| (t - top).exp()).collect();
    w.push((-top).exp());
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

/// Admissible pairs in lexicographic order, without the last pair `(a, a)`.
pub fn markov_pairs(spec: &SubshiftSpec) -> Vec<(usize, usize)> {
    let a = spec.alphabet_size();
    enumerate_admissible_words(spec, 2)
        .into_iter()
        .map(|w| (w.symbols()[0], w.symbols()[1]))
        .filter(|&(i, j)| !(i == a - 1 && j == a - 1))
        .collect()
}

/// Depth-2 indicator directions for every admissible pair except `(a, a)`,
/// with `f₀ = 0`.
pub fn markov_family(spec: &SubshiftSpec) -> Result<PotentialFamily> {
    let a = spec.alphabet_size();
    if !spec.allows(a - 1, a - 1) {
        return Err(Error::InvalidTransition(format!(
            "the reference pair ({a},{a}) must be admissible"
        )));
    }
    let dirs = markov_pairs(spec)
        .into_iter()
        .map(|(i, j)| LocallyConstantFn::indicator(spec, &[i, j]))
        .collect();
    let base = LocallyConstantFn::from_fn(spec, 2, |_| 0.0);
    PotentialFamily::new(spec, base, dirs)
}

fn check_stochastic(spec: &SubshiftSpec, p: &[Vec<f64>]) -> Result<()> {
    let a = spec.alphabet_size();
    if p.len() != a || p.iter().any(|r| r.len() != a) {
        return Err(Error::InvalidTransition(format!(
            "transition matrix must be {a}x{a}"
        )));
    }
    if !spec.allows(a - 1, a - 1) {
        return Err(Error::InvalidTransition(format!(
            "the reference pair ({a},{a}) must be admissible"
        )));
    }
    for (i, row) in p.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidTransition(format!(
                    "entry ({},{}) = {v} is not a probability",
                    i + 1,
                    j + 1
                )));
            }
            if spec.allows(i, j) != (v > 0.0) {
                return Err(Error::InvalidTransition(format!(
                    "support of entry ({},{}) does not match the incidence matrix",
                    i + 1,
                    j + 1
                )));
            }
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidTransition(format!(
                "row {} sums to {s}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// `t_{ij} = log p_{ij} − log(a − Σ_{(l,k) ≠ (a,a)} p_{lk})` over the
/// family's pairs. For a stochastic `p` the normaliser equals `p_{aa}`.
pub fn markov_to_theta(spec: &SubshiftSpec, p: &[Vec<f64>]) -> Result<ParameterPoint> {
    check_stochastic(spec, p)?;
    let a = spec.alphabet_size();
    let pairs = markov_pairs(spec);
    let others: f64 = pairs.iter().map(|&(i, j)| p[i][j]).sum();
    let norm = a as f64 - others;
    if !(norm > 0.0) {
        return Err(Error::InvalidTransition(
            "normaliser a − Σ p must be positive".into(),
        ));
    }
    ParameterPoint::new(
        pairs
            .iter()
            .map(|&(i, j)| p[i][j].ln() - norm.ln())
            .collect(),
    )
}

/// Transition matrix of the stationary chain of the Gibbs measure at `t`.
pub fn theta_to_markov(spec: &SubshiftSpec, t: &ParameterPoint) -> Result<Vec<Vec<f64>>> {
    let fam = markov_family(spec)?;
    let model = GibbsModel::new(spec, &fam)?;
    let sys = model.solve(t.as_slice(), DEFAULT_TOL)?;
    let a = spec.alphabet_size();
    let mut p = vec![vec![0.0; a]; a];
    let graph = sys.graph();
    for (e, q) in sys.transitions().iter().enumerate() {
        let s = graph.edge_symbols(e);
        p[s[0]][s[1]] = *q;
    }
    Ok(p)
}

/// Stationary distribution of an irreducible stochastic matrix.
pub fn stationary_distribution(p: &[Vec<f64>]) -> Vec<f64> {
    let a = p.len();
    let mut pi = vec![1.0 / a as f64; a];
    // Lazy chain: aperiodic, same stationary vector.
    for _ in 0..100_000 {
        let mut next = vec![0.0; a];
        for i in 0..a {
            for j in 0..a {
                next[j] += pi[i] * 0.5 * (p[i][j] + if i == j { 1.0 } else { 0.0 });
            }
        }
        let change = next
            .iter()
            .zip(&pi)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        pi = next;
        if change < 1e-16 {
            break;
        }
    }
    let s: f64 = pi.iter().sum();
    pi.iter().map(|v| v / s).collect()
}
