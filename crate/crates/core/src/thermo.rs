//! Transfer-operator linear algebra for locally constant potentials.
//!
//! A potential of depth `r + 1` makes the transfer operator an exact finite
//! matrix on functions of `r`-words. The matrix is stored as an edge list:
//! every admissible `(r+1)`-word `e = w·j` is an edge from its prefix
//! `r`-word `w` to its suffix `r`-word `w[1..]·j`, carrying weight
//! `exp F(e)`. Writing `B[from][to] = exp F(e)`, the operator acting on
//! functions is `Bᵀ`, so the eigenfunction is the left Perron vector of `B`
//! and the eigenmeasure is the right one.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::shift::{
    assemble_potential, decode_word, enumerate_admissible_words, word_code, LocallyConstantFn,
    ParameterPoint, PotentialFamily, SubshiftSpec, Word,
};

/// Default relative residual for the leading eigenpair.
pub const DEFAULT_TOL: f64 = 1e-13;

const MAX_ITER: usize = 100_000;
const SQUARINGS: u32 = 6;
const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// Base-`a` code of the `(r+1)`-word.
    pub code: usize,
}

/// Shift structure at a fixed order `r`, independent of the potential.
#[derive(Debug, Clone)]
pub struct EdgeGraph {
    spec: SubshiftSpec,
    order: usize,
    words: Vec<Word>,
    word_index: Vec<usize>,
    edges: Vec<Edge>,
    edge_index: Vec<usize>,
    out_start: Vec<usize>,
}

impl EdgeGraph {
    pub fn new(spec: &SubshiftSpec, order: usize) -> Self {
        assert!(order >= 1, "operator order must be at least 1");
        let a = spec.alphabet_size();
        let words = enumerate_admissible_words(spec, order);
        let mut word_index = vec![NONE; a.pow(order as u32)];
        for (i, w) in words.iter().enumerate() {
            word_index[word_code(w.symbols(), a)] = i;
        }
        let long = enumerate_admissible_words(spec, order + 1);
        let mut edge_index = vec![NONE; a.pow(order as u32 + 1)];
        let mut edges = Vec::with_capacity(long.len());
        let mut out_start = vec![0usize; words.len() + 1];
        for w in &long {
            let s = w.symbols();
            let from = word_index[word_code(&s[..order], a)];
            let to = word_index[word_code(&s[1..], a)];
            let code = word_code(s, a);
            edge_index[code] = edges.len();
            edges.push(Edge { from, to, code });
            out_start[from + 1] += 1;
        }
        for i in 0..words.len() {
            out_start[i + 1] += out_start[i];
        }
        EdgeGraph {
            spec: spec.clone(),
            order,
            words,
            word_index,
            edges,
            edge_index,
            out_start,
        }
    }

    pub fn spec(&self) -> &SubshiftSpec {
        &self.spec
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Admissible `r`-words in lexicographic order.
    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edges leaving word `from`, in order of the appended symbol.
    pub fn out_edges(&self, from: usize) -> std::ops::Range<usize> {
        self.out_start[from]..self.out_start[from + 1]
    }

    pub fn word_position(&self, symbols: &[usize]) -> Option<usize> {
        debug_assert_eq!(symbols.len(), self.order);
        if symbols.iter().any(|&s| s >= self.spec.alphabet_size()) {
            return None;
        }
        let i = self.word_index[word_code(symbols, self.spec.alphabet_size())];
        (i != NONE).then_some(i)
    }

    pub fn edge_position(&self, symbols: &[usize]) -> Option<usize> {
        debug_assert_eq!(symbols.len(), self.order + 1);
        if symbols.iter().any(|&s| s >= self.spec.alphabet_size()) {
            return None;
        }
        let i = self.edge_index[word_code(symbols, self.spec.alphabet_size())];
        (i != NONE).then_some(i)
    }

    pub fn edge_symbols(&self, e: usize) -> Vec<usize> {
        decode_word(
            self.edges[e].code,
            self.order + 1,
            self.spec.alphabet_size(),
        )
    }

    /// Per-edge values of a function of depth at most `r + 1`.
    pub fn edge_values(&self, f: &LocallyConstantFn) -> Result<Vec<f64>> {
        if f.depth() > self.order + 1 {
            return Err(Error::InvalidPotential(format!(
                "function of depth {} does not fit operator order {}",
                f.depth(),
                self.order
            )));
        }
        Ok((0..self.edges.len())
            .map(|e| f.eval(&self.edge_symbols(e)))
            .collect())
    }
}

/// The finite transfer matrix `B` with `B[from][to] = exp F(from·j)`.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    graph: Arc<EdgeGraph>,
    log_weights: Vec<f64>,
}

impl TransferMatrix {
    pub fn new(graph: Arc<EdgeGraph>, log_weights: Vec<f64>) -> Self {
        assert_eq!(graph.edges.len(), log_weights.len());
        TransferMatrix { graph, log_weights }
    }

    pub fn order(&self) -> usize {
        self.graph.order
    }

    pub fn index(&self) -> &[Word] {
        &self.graph.words
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Dense entries, rows indexed by the predecessor word.
    pub fn entries(&self) -> DMatrix<f64> {
        self.dense(0.0)
    }

    fn dense(&self, shift: f64) -> DMatrix<f64> {
        let n = self.graph.words.len();
        let mut m = DMatrix::zeros(n, n);
        for (e, edge) in self.graph.edges.iter().enumerate() {
            m[(edge.from, edge.to)] = (self.log_weights[e] - shift).exp();
        }
        m
    }

    /// `(L g)(w') = Σ_{w → w'} exp F(w·j) g(w)`.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.graph.words.len()];
        for (e, edge) in self.graph.edges.iter().enumerate() {
            out[edge.to] += self.log_weights[e].exp() * g[edge.from];
        }
        out
    }

    /// Dual action on measures over `r`-words.
    pub fn apply_dual(&self, nu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.graph.words.len()];
        for (e, edge) in self.graph.edges.iter().enumerate() {
            out[edge.from] += self.log_weights[e].exp() * nu[edge.to];
        }
        out
    }
}

struct Perron {
    value: f64,
    vector: Vec<f64>,
}

// Power iteration driven by a repeatedly squared copy of the matrix, so each
// step advances 2^SQUARINGS plain iterations. The residual is always
// measured against the original matrix.
fn perron_vector(base: &DMatrix<f64>, init: Option<&[f64]>, tol: f64) -> Result<Perron> {
    let n = base.nrows();
    let mut acc = base.clone();
    for _ in 0..SQUARINGS {
        let m = acc.max();
        if m > 0.0 {
            acc /= m;
        }
        acc = &acc * &acc;
    }
    let m = acc.max();
    if m > 0.0 {
        acc /= m;
    }
    let mut v = match init {
        Some(x) if x.len() == n && x.iter().all(|v| *v > 0.0 && v.is_finite()) => {
            DVector::from_column_slice(x)
        }
        _ => DVector::from_element(n, 1.0),
    };
    v /= v.sum();
    let mut steps = 0usize;
    let mut residual;
    loop {
        let bv = base * &v;
        let value = bv.sum() / v.sum();
        residual = (&bv - &v * value).amax() / (value * v.amax());
        if residual <= tol {
            return Ok(Perron {
                value,
                vector: v.iter().copied().collect(),
            });
        }
        if steps >= MAX_ITER {
            break;
        }
        let mut next = &acc * &v;
        let s = next.sum();
        if !(s > 0.0) || !s.is_finite() {
            break;
        }
        next /= s;
        let change = (&next - &v).amax() / next.amax();
        v = next;
        steps += 1 << SQUARINGS;
        // Floating-point floor: the iterate no longer moves.
        if change <= 4.0 * f64::EPSILON && residual <= 1e-10 {
            let bv = base * &v;
            let value = bv.sum() / v.sum();
            return Ok(Perron {
                value,
                vector: v.iter().copied().collect(),
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: steps,
        residual,
    })
}

/// Solved thermodynamic state at one parameter.
#[derive(Debug, Clone)]
pub struct GibbsSystem {
    theta: ParameterPoint,
    lambda: f64,
    pressure: f64,
    phi: Vec<f64>,
    nu: Vec<f64>,
    mu: Vec<f64>,
    matrix: TransferMatrix,
    transitions: Vec<f64>,
    edge_mass: Vec<f64>,
}

impl GibbsSystem {
    pub fn theta(&self) -> &ParameterPoint {
        &self.theta
    }

    /// Leading eigenvalue. Overflows to infinity for pressures above ~709;
    /// use [`GibbsSystem::pressure`] for numerics.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn pressure(&self) -> f64 {
        self.pressure
    }

    /// Eigenfunction over `r`-words, normalised so that `∫φ dν = 1`.
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Eigenmeasure masses of the `r`-cylinders.
    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    /// Invariant measure masses of the `r`-cylinders.
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn order(&self) -> usize {
        self.matrix.graph.order
    }

    pub fn graph(&self) -> &EdgeGraph {
        &self.matrix.graph
    }

    pub fn transfer_matrix(&self) -> &TransferMatrix {
        &self.matrix
    }

    /// Forward transition probabilities of the stationary order-`r` chain,
    /// one per edge.
    pub fn transitions(&self) -> &[f64] {
        &self.transitions
    }

    /// Invariant masses of the `(r+1)`-cylinders, one per edge.
    pub fn edge_mass(&self) -> &[f64] {
        &self.edge_mass
    }

    /// `∫ g dμ` for per-edge values `g`.
    pub fn edge_mean(&self, values: &[f64]) -> f64 {
        self.edge_mass.iter().zip(values).map(|(m, v)| m * v).sum()
    }

    /// `max |Σ_{e→w} μ_e − μ_w|`, the stationarity defect of the chain.
    pub fn stationarity_defect(&self) -> f64 {
        let mut inflow = vec![0.0; self.mu.len()];
        for (e, edge) in self.matrix.graph.edges.iter().enumerate() {
            inflow[edge.to] += self.edge_mass[e];
        }
        inflow
            .iter()
            .zip(&self.mu)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A potential family bound to its shift, with the edge structure and the
/// per-edge direction values cached for repeated solves.
#[derive(Debug, Clone)]
pub struct GibbsModel {
    spec: SubshiftSpec,
    family: PotentialFamily,
    graph: Arc<EdgeGraph>,
    base_values: Vec<f64>,
    direction_values: Vec<Vec<f64>>,
}

impl GibbsModel {
    pub fn new(spec: &SubshiftSpec, fam: &PotentialFamily) -> Result<Self> {
        let depth = fam.common_depth().max(2);
        let family = fam.lifted(spec, depth)?;
        let graph = Arc::new(EdgeGraph::new(spec, depth - 1));
        let base_values = graph.edge_values(family.base())?;
        let direction_values = family
            .directions()
            .iter()
            .map(|f| graph.edge_values(f))
            .collect::<Result<Vec<_>>>()?;
        Ok(GibbsModel {
            spec: spec.clone(),
            family,
            graph,
            base_values,
            direction_values,
        })
    }

    pub fn spec(&self) -> &SubshiftSpec {
        &self.spec
    }

    /// The family lifted to the operator depth `r + 1`.
    pub fn family(&self) -> &PotentialFamily {
        &self.family
    }

    pub fn order(&self) -> usize {
        self.graph.order
    }

    pub fn dim(&self) -> usize {
        self.direction_values.len()
    }

    pub fn graph(&self) -> &Arc<EdgeGraph> {
        &self.graph
    }

    /// Per-edge values of `f₀` followed by `f₁ … f_d`.
    pub fn edge_values(&self, i: usize) -> &[f64] {
        if i == 0 {
            &self.base_values
        } else {
            &self.direction_values[i - 1]
        }
    }

    pub fn edge_potential(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = self.base_values.clone();
        for (vals, &t) in self.direction_values.iter().zip(theta) {
            for (o, v) in out.iter_mut().zip(vals) {
                *o += t * v;
            }
        }
        out
    }

    pub fn solve(&self, theta: &[f64], tol: f64) -> Result<GibbsSystem> {
        self.solve_warm(theta, tol, None)
    }

    /// Solve with the eigenvectors of `warm` as starting iterates.
    pub fn solve_warm(
        &self,
        theta: &[f64],
        tol: f64,
        warm: Option<&GibbsSystem>,
    ) -> Result<GibbsSystem> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: theta.len(),
            });
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "solver tolerance must be positive, got {tol}"
            )));
        }
        let theta_pt = ParameterPoint::new(theta.to_vec())?;
        let log_w = self.edge_potential(theta);
        let shift = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let matrix = TransferMatrix::new(self.graph.clone(), log_w);
        let b = matrix.dense(shift);

        let right = perron_vector(&b, warm.map(|s| s.nu.as_slice()), tol)?;
        let left = perron_vector(&b.transpose(), warm.map(|s| s.phi.as_slice()), tol)?;
        let scaled = 0.5 * (right.value + left.value);
        let pressure = scaled.ln() + shift;

        let mut nu = right.vector;
        let total: f64 = nu.iter().sum();
        nu.iter_mut().for_each(|v| *v /= total);
        let mut phi = left.vector;
        let pairing: f64 = phi.iter().zip(&nu).map(|(a, b)| a * b).sum();
        phi.iter_mut().for_each(|v| *v /= pairing);
        let mut mu: Vec<f64> = phi.iter().zip(&nu).map(|(a, b)| a * b).collect();
        let total: f64 = mu.iter().sum();
        mu.iter_mut().for_each(|v| *v /= total);

        let mut transitions = vec![0.0; self.graph.edges.len()];
        for (w, nu_w) in nu.iter().enumerate() {
            let range = self.graph.out_edges(w);
            let mut row = 0.0;
            for e in range.clone() {
                let edge = self.graph.edges[e];
                let q = (matrix.log_weights[e] - pressure).exp() * nu[edge.to] / nu_w;
                transitions[e] = q;
                row += q;
            }
            for e in range {
                transitions[e] /= row;
            }
        }
        let edge_mass = self
            .graph
            .edges
            .iter()
            .zip(&transitions)
            .map(|(edge, q)| mu[edge.from] * q)
            .collect();

        Ok(GibbsSystem {
            theta: theta_pt,
            lambda: pressure.exp(),
            pressure,
            phi,
            nu,
            mu,
            matrix,
            transitions,
            edge_mass,
        })
    }

    /// `(∫f₀dμ, ∫f₁dμ, …, ∫f_d dμ)`.
    pub fn all_means(&self, sys: &GibbsSystem) -> Vec<f64> {
        (0..=self.dim())
            .map(|i| sys.edge_mean(self.edge_values(i)))
            .collect()
    }

    /// Pressure gradient `(∫f₁dμ, …, ∫f_d dμ)`.
    pub fn gradient(&self, sys: &GibbsSystem) -> Vec<f64> {
        (1..=self.dim())
            .map(|i| sys.edge_mean(self.edge_values(i)))
            .collect()
    }

    /// Asymptotic covariance of the directions through the resolvent of the
    /// normalised operator.
    pub fn covariance(&self, sys: &GibbsSystem) -> Result<CovarianceMatrix> {
        let centred = self.centred_directions(sys);
        let lt = normalised_operator(sys);
        let k = sys.mu.len();
        let mu = DVector::from_column_slice(&sys.mu);
        let ones = DVector::from_element(k, 1.0);
        let a = DMatrix::identity(k, k) - &lt.matrix + &ones * mu.transpose();
        let lu = a.lu();
        let mut potentials = Vec::with_capacity(centred.len());
        for f in &centred {
            let u = lt.apply_edge(f);
            let h = lu
                .solve(&u)
                .ok_or_else(|| Error::Internal("normalised resolvent is singular".into()))?;
            potentials.push(h);
        }
        Ok(assemble_covariance(sys, &centred, &potentials))
    }

    /// Same quantity by summing the correlation series until its terms drop
    /// below `1e-14`.
    pub fn covariance_series(&self, sys: &GibbsSystem) -> Result<CovarianceMatrix> {
        let centred = self.centred_directions(sys);
        let lt = normalised_operator(sys);
        let mut potentials = Vec::with_capacity(centred.len());
        for f in &centred {
            let mut term = lt.apply_edge(f);
            let mut sum = term.clone();
            let mut iters = 0;
            while term.amax() >= 1e-14 {
                term = &lt.matrix * &term;
                sum += &term;
                iters += 1;
                if iters > MAX_ITER {
                    return Err(Error::NoConvergence {
                        iterations: iters,
                        residual: term.amax(),
                    });
                }
            }
            potentials.push(sum);
        }
        Ok(assemble_covariance(sys, &centred, &potentials))
    }

    fn centred_directions(&self, sys: &GibbsSystem) -> Vec<Vec<f64>> {
        (1..=self.dim())
            .map(|i| {
                let vals = self.edge_values(i);
                let m = sys.edge_mean(vals);
                vals.iter().map(|v| v - m).collect()
            })
            .collect()
    }

    /// Log-likelihood pieces of a sample: the `n − r` window sums of
    /// `f₀ … f_d` and the position of the final `r`-word.
    pub fn window_sums(&self, w: &Word) -> Result<(Vec<f64>, usize)> {
        let r = self.order();
        let s = w.symbols();
        if s.len() < r + 1 {
            return Err(Error::WordTooShort {
                need: r + 1,
                got: s.len(),
            });
        }
        let mut sums = vec![0.0; self.dim() + 1];
        for (k, win) in s.windows(r + 1).enumerate() {
            let e = self.graph.edge_position(win).ok_or_else(|| {
                Error::InadmissibleWord(format!("window at position {k} is not admissible"))
            })?;
            for (i, acc) in sums.iter_mut().enumerate() {
                *acc += self.edge_values(i)[e];
            }
        }
        let last = self
            .graph
            .word_position(&s[s.len() - r..])
            .ok_or_else(|| Error::InadmissibleWord("final word is not admissible".into()))?;
        Ok((sums, last))
    }
}

struct NormalisedOperator {
    matrix: DMatrix<f64>,
    edge_prob: Vec<f64>,
    edges: Vec<Edge>,
}

impl NormalisedOperator {
    // (L̃ g)(x) for an edge function g.
    fn apply_edge(&self, g: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.matrix.nrows());
        for (e, edge) in self.edges.iter().enumerate() {
            out[edge.to] += self.edge_prob[e] * g[e];
        }
        out
    }
}

fn normalised_operator(sys: &GibbsSystem) -> NormalisedOperator {
    let graph = &sys.matrix.graph;
    let k = sys.mu.len();
    let mut edge_prob: Vec<f64> = graph
        .edges
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            (sys.matrix.log_weights[e] - sys.pressure).exp() * sys.phi[edge.from] / sys.phi[edge.to]
        })
        .collect();
    let mut col = vec![0.0; k];
    for (e, edge) in graph.edges.iter().enumerate() {
        col[edge.to] += edge_prob[e];
    }
    for (e, edge) in graph.edges.iter().enumerate() {
        edge_prob[e] /= col[edge.to];
    }
    let mut matrix = DMatrix::zeros(k, k);
    for (e, edge) in graph.edges.iter().enumerate() {
        matrix[(edge.to, edge.from)] += edge_prob[e];
    }
    NormalisedOperator {
        matrix,
        edge_prob,
        edges: graph.edges.clone(),
    }
}

fn assemble_covariance(
    sys: &GibbsSystem,
    centred: &[Vec<f64>],
    potentials: &[DVector<f64>],
) -> CovarianceMatrix {
    let d = centred.len();
    let edges = &sys.matrix.graph.edges;
    let mut sigma = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for (e, edge) in edges.iter().enumerate() {
                let m = sys.edge_mass[e];
                s += m * centred[i][e] * centred[j][e];
                s += m * centred[j][e] * potentials[i][edge.from];
                s += m * centred[i][e] * potentials[j][edge.from];
            }
            sigma[(i, j)] = s;
        }
    }
    CovarianceMatrix::from_matrix_unchecked(sigma)
}

/// Symmetric positive semidefinite `d × d` covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix(DMatrix<f64>);

impl CovarianceMatrix {
    /// Accepts a square matrix that is symmetric up to `1e-10` relative and
    /// stores its symmetric part.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "covariance has non-finite entries".into(),
            ));
        }
        let scale = m.amax().max(1e-300);
        if (&m - m.transpose()).amax() > 1e-10 * scale {
            return Err(Error::InvalidArgument("covariance is not symmetric".into()));
        }
        Ok(Self::from_matrix_unchecked(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidArgument("covariance must be square".into()));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<f64>) -> Self {
        let sym = (&m + m.transpose()) * 0.5;
        CovarianceMatrix(sym)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    pub fn eigen(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        self.0.clone().symmetric_eigen()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest absolute entry.
    pub fn norm_max(&self) -> f64 {
        self.0.amax()
    }

    /// Orthonormal basis (columns) of the eigenspace with eigenvalues above
    /// `rel_tol · λ_max`.
    pub fn range_basis(&self, rel_tol: f64) -> DMatrix<f64> {
        let eig = self.eigen();
        let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..self.dim())
            .filter(|&i| eig.eigenvalues[i] > rel_tol * top && top > 0.0)
            .collect();
        DMatrix::from_fn(self.dim(), keep.len(), |r, c| {
            eig.eigenvectors[(r, keep[c])]
        })
    }
}

pub fn solve_gibbs(
    spec: &SubshiftSpec,
    fam: &PotentialFamily,
    p: &ParameterPoint,
    tol: f64,
) -> Result<GibbsSystem> {
    GibbsModel::new(spec, fam)?.solve(p.as_slice(), tol)
}

pub fn pressure(spec: &SubshiftSpec, fam: &PotentialFamily, p: &ParameterPoint) -> Result<f64> {
    Ok(solve_gibbs(spec, fam, p, DEFAULT_TOL)?.pressure())
}

pub fn pressure_gradient(
    spec: &SubshiftSpec,
    fam: &PotentialFamily,
    p: &ParameterPoint,
) -> Result<Vec<f64>> {
    let model = GibbsModel::new(spec, fam)?;
    let sys = model.solve(p.as_slice(), DEFAULT_TOL)?;
    Ok(model.gradient(&sys))
}

pub fn asymptotic_covariance(
    spec: &SubshiftSpec,
    fam: &PotentialFamily,
    p: &ParameterPoint,
) -> Result<CovarianceMatrix> {
    let model = GibbsModel::new(spec, fam)?;
    let sys = model.solve(p.as_slice(), DEFAULT_TOL)?;
    model.covariance(&sys)
}

/// Central finite-difference Hessian of the pressure with step `1e-3`.
pub fn second_derivative_check(
    spec: &SubshiftSpec,
    fam: &PotentialFamily,
    p: &ParameterPoint,
) -> Result<DMatrix<f64>> {
    second_derivative_with_step(spec, fam, p, 1e-3)
}

pub fn second_derivative_with_step(
    spec: &SubshiftSpec,
    fam: &PotentialFamily,
    p: &ParameterPoint,
    h: f64,
) -> Result<DMatrix<f64>> {
    let model = GibbsModel::new(spec, fam)?;
    let d = model.dim();
    let base = p.to_vec();
    let eval = |di: f64, i: usize, dj: f64, j: usize| -> Result<f64> {
        let mut t = base.clone();
        t[i] += di;
        t[j] += dj;
        Ok(model.solve(&t, DEFAULT_TOL)?.pressure())
    };
    let p0 = model.solve(&base, DEFAULT_TOL)?.pressure();
    let mut hess = DMatrix::zeros(d, d);
    for i in 0..d {
        let plus = eval(h, i, 0.0, i)?;
        let minus = eval(-h, i, 0.0, i)?;
        hess[(i, i)] = (plus - 2.0 * p0 + minus) / (h * h);
        for j in 0..i {
            let pp = eval(h, i, h, j)?;
            let pm = eval(h, i, -h, j)?;
            let mp = eval(-h, i, h, j)?;
            let mm = eval(-h, i, -h, j)?;
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess)
}

fn check_word(graph: &EdgeGraph, w: &Word) -> Result<()> {
    if w.is_empty() {
        return Err(Error::WordTooShort { need: 1, got: 0 });
    }
    w.check(graph.spec())
}

/// `log ν([w])` by peeling one symbol per step off the front of the word.
pub fn cylinder_log_prob(sys: &GibbsSystem, w: &Word) -> Result<f64> {
    let graph = sys.graph();
    check_word(graph, w)?;
    let r = graph.order;
    let s = w.symbols();
    if s.len() < r {
        let mass: f64 = graph
            .words
            .iter()
            .zip(&sys.nu)
            .filter(|(word, _)| word.symbols().starts_with(s))
            .map(|(_, v)| v)
            .sum();
        return Ok(mass.ln());
    }
    let mut total = 0.0;
    for win in s.windows(r + 1) {
        let e = graph
            .edge_position(win)
            .expect("admissible word has admissible windows");
        total += sys.matrix.log_weights[e] - sys.pressure;
    }
    let last = graph
        .word_position(&s[s.len() - r..])
        .expect("admissible word has admissible suffix");
    Ok(total + sys.nu[last].ln())
}

/// `μ([w])` from the stationary order-`r` chain.
pub fn invariant_cylinder_prob(sys: &GibbsSystem, w: &Word) -> Result<f64> {
    let graph = sys.graph();
    check_word(graph, w)?;
    let r = graph.order;
    let s = w.symbols();
    if s.len() < r {
        return Ok(graph
            .words
            .iter()
            .zip(&sys.mu)
            .filter(|(word, _)| word.symbols().starts_with(s))
            .map(|(_, v)| v)
            .sum());
    }
    let first = graph
        .word_position(&s[..r])
        .expect("admissible word has admissible prefix");
    let mut p = sys.mu[first];
    for win in s.windows(r + 1) {
        let e = graph
            .edge_position(win)
            .expect("admissible word has admissible windows");
        p *= sys.transitions[e];
    }
    Ok(p)
}

/// `∫ f dμ` for a locally constant `f` of any depth.
pub fn integrate(sys: &GibbsSystem, f: &LocallyConstantFn) -> Result<f64> {
    let graph = sys.graph();
    if f.depth() <= graph.order + 1 {
        return Ok(sys.edge_mean(&graph.edge_values(f)?));
    }
    let mut total = 0.0;
    for w in enumerate_admissible_words(graph.spec(), f.depth()) {
        total += invariant_cylinder_prob(sys, &w)? * f.eval(w.symbols());
    }
    Ok(total)
}

/// Cylinder probability from the ratio `∫ Lᵐ 1_C dm / ∫ Lᵐ 1 dm`, with `m`
/// uniform on `r`-words and uniform over successors after that.
///
/// Uses only the shift and the assembled potential; it shares no code with
/// the eigen-solver.
pub fn oracle_cylinder_prob(
    spec: &SubshiftSpec,
    fam: &PotentialFamily,
    p: &ParameterPoint,
    w: &Word,
    iters: usize,
) -> Result<f64> {
    if iters == 0 {
        return Err(Error::InvalidArgument("iters must be at least 1".into()));
    }
    w.check(spec)?;
    if w.is_empty() {
        return Err(Error::WordTooShort { need: 1, got: 0 });
    }
    let depth = fam.common_depth().max(2);
    let r = depth - 1;
    let pot = assemble_potential(fam, p)?.lift(spec, depth)?;
    let a = spec.alphabet_size();
    let n = w.len();
    let start = n.max(r);

    let mut words_at: Vec<Vec<Word>> = vec![Vec::new(); start + 1];
    for (k, slot) in words_at.iter_mut().enumerate().skip(r) {
        *slot = enumerate_admissible_words(spec, k);
    }
    let table = |k: usize| vec![0.0; a.pow(k as u32)];
    let mut cur = start;
    let mut ind = table(cur);
    let mut one = table(cur);
    for x in &words_at[cur] {
        let c = word_code(x.symbols(), a);
        one[c] = 1.0;
        if x.symbols().starts_with(w.symbols()) {
            ind[c] = 1.0;
        }
    }
    for _ in 0..iters {
        let next = cur.saturating_sub(1).max(r);
        let mut ind2 = table(next);
        let mut one2 = table(next);
        let mut buf = vec![0usize; next + 1];
        for x in &words_at[next] {
            let xs = x.symbols();
            buf[1..].copy_from_slice(xs);
            let mut si = 0.0;
            let mut so = 0.0;
            for j in 0..a {
                if !spec.allows(j, xs[0]) {
                    continue;
                }
                buf[0] = j;
                let wgt = pot.eval(&buf[..depth]).exp();
                let c = word_code(&buf[..cur], a);
                si += wgt * ind[c];
                so += wgt * one[c];
            }
            let c = word_code(xs, a);
            ind2[c] = si;
            one2[c] = so;
        }
        let scale = one2.iter().copied().fold(0.0, f64::max);
        ind = ind2.into_iter().map(|v| v / scale).collect();
        one = one2.into_iter().map(|v| v / scale).collect();
        cur = next;
    }
    let n_r = words_at[r].len() as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for x in &words_at[cur] {
        let xs = x.symbols();
        let mut m = 1.0 / n_r;
        for k in r..xs.len() {
            m /= spec.successors(xs[k - 1]).count() as f64;
        }
        let c = word_code(xs, a);
        num += m * ind[c];
        den += m * one[c];
    }
    Ok(num / den)
}

/// Result of the covariance-rank gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndependenceCheck {
    pub independent: bool,
    pub min_eigenvalue: f64,
}

/// Checks that the directions are independent as cohomology classes by
/// testing whether the covariance is positive definite.
pub fn cohomology_independence_check(
    spec: &SubshiftSpec,
    fam: &PotentialFamily,
    p: &ParameterPoint,
    tol: f64,
) -> Result<IndependenceCheck> {
    let sigma = asymptotic_covariance(spec, fam, p)?;
    let min_eigenvalue = sigma.min_eigenvalue();
    Ok(IndependenceCheck {
        independent: min_eigenvalue > tol,
        min_eigenvalue,
    })
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::models::{bernoulli_family, markov_family, markov_to_theta};

    fn zero_family(spec: &SubshiftSpec) -> PotentialFamily {
        PotentialFamily::new(
            spec,
            LocallyConstantFn::zero(spec),
            vec![LocallyConstantFn::indicator(spec, &[0])],
        )
        .unwrap()
    }

    #[test]
    fn full_shift_constant_potential() {
        for a in 2..=4 {
            let spec = SubshiftSpec::full_shift(a).unwrap();
            let sys = solve_gibbs(
                &spec,
                &zero_family(&spec),
                &ParameterPoint::zeros(1),
                DEFAULT_TOL,
            )
            .unwrap();
            assert!((sys.pressure() - (a as f64).ln()).abs() < 1e-12);
            assert!((sys.lambda() - a as f64).abs() < 1e-11);
            for (&phi, (&nu, &mu)) in sys.phi().iter().zip(sys.nu().iter().zip(sys.mu())) {
                assert!((phi - 1.0).abs() < 1e-12);
                assert!((nu - 1.0 / a as f64).abs() < 1e-12);
                assert!((mu - 1.0 / a as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn golden_mean_pressure() {
        let spec = SubshiftSpec::golden_mean();
        let p = pressure(&spec, &zero_family(&spec), &ParameterPoint::zeros(1)).unwrap();
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((p - golden.ln()).abs() < 1e-12);
        assert!((p - 0.4812118250596).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_eigendata() {
        let (spec, fam) = bernoulli_family(2).unwrap();
        for &t in &[-2.0, -0.3, 0.0, 0.7, 3.1] {
            let sys = solve_gibbs(
                &spec,
                &fam,
                &ParameterPoint::new(vec![t]).unwrap(),
                DEFAULT_TOL,
            )
            .unwrap();
            assert!((sys.lambda() - (1.0 + t.exp())).abs() < 1e-11 * (1.0 + t.exp()));
            let pi = t.exp() / (1.0 + t.exp());
            let mu1 = invariant_cylinder_prob(&sys, &Word::new(vec![0])).unwrap();
            assert!((mu1 - pi).abs() < 1e-12);
            let g = pressure_gradient(&spec, &fam, sys.theta()).unwrap();
            assert!((g[0] - pi).abs() < 1e-12);
            let nu121 = cylinder_log_prob(&sys, &Word::new(vec![0, 1, 0]))
                .unwrap()
                .exp();
            assert!((nu121 - pi * pi * (1.0 - pi)).abs() < 1e-12);
        }
    }

    #[test]
    fn eigen_equations_hold() {
        let spec = SubshiftSpec::full_shift(3).unwrap();
        let fam = markov_family(&spec).unwrap();
        let theta: Vec<f64> = (0..fam.dim()).map(|i| 0.3 * (i as f64) - 0.8).collect();
        let model = GibbsModel::new(&spec, &fam).unwrap();
        let sys = model.solve(&theta, DEFAULT_TOL).unwrap();
        let lphi = sys.transfer_matrix().apply(sys.phi());
        let lnu = sys.transfer_matrix().apply_dual(sys.nu());
        let lam = sys.lambda();
        for i in 0..sys.phi().len() {
            assert!((lphi[i] - lam * sys.phi()[i]).abs() <= 1e-11 * lam);
            assert!((lnu[i] - lam * sys.nu()[i]).abs() <= 1e-11 * lam);
        }
        assert!((sys.nu().iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((sys.mu().iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(sys.stationarity_defect() < 1e-12);
    }

    #[test]
    fn markov_pair_masses() {
        let spec = SubshiftSpec::full_shift(2).unwrap();
        let fam = markov_family(&spec).unwrap();
        let p = vec![vec![0.3, 0.7], vec![0.6, 0.4]];
        let theta = markov_to_theta(&spec, &p).unwrap();
        let sys = solve_gibbs(&spec, &fam, &theta, DEFAULT_TOL).unwrap();
        // Stationary vector of p: π ∝ (0.6, 0.7).
        let pi = [0.6 / 1.3, 0.7 / 1.3];
        for i in 0..2 {
            for j in 0..2 {
                let m = invariant_cylinder_prob(&sys, &Word::new(vec![i, j])).unwrap();
                assert!((m - pi[i] * p[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn oracle_examples() {
        let spec = SubshiftSpec::full_shift(2).unwrap();
        let fam = zero_family(&spec);
        for iters in [1, 5, 60] {
            let v = oracle_cylinder_prob(
                &spec,
                &fam,
                &ParameterPoint::zeros(1),
                &Word::new(vec![0, 1]),
                iters,
            )
            .unwrap();
            assert!((v - 0.25).abs() < 1e-14);
        }
        let (spec, fam) = bernoulli_family(2).unwrap();
        let p = ParameterPoint::new(vec![3f64.ln()]).unwrap();
        let v = oracle_cylinder_prob(&spec, &fam, &p, &Word::new(vec![0]), 10).unwrap();
        assert!((v - 0.75).abs() < 1e-12);

        let spec = SubshiftSpec::golden_mean();
        let fam = zero_family(&spec);
        let sys = solve_gibbs(&spec, &fam, &ParameterPoint::zeros(1), DEFAULT_TOL).unwrap();
        let exact = cylinder_log_prob(&sys, &Word::new(vec![0, 1]))
            .unwrap()
            .exp();
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        let ratio = 1.0 / (golden * golden);
        let mut prev = f64::INFINITY;
        for iters in [2, 6, 12, 24] {
            let v = oracle_cylinder_prob(
                &spec,
                &fam,
                &ParameterPoint::zeros(1),
                &Word::new(vec![0, 1]),
                iters,
            )
            .unwrap();
            let err = (v - exact).abs();
            assert!(err <= 4.0 * ratio.powi(iters as i32) + 1e-15);
            assert!(err <= prev);
            prev = err;
        }
    }

    #[test]
    fn bernoulli_covariance_closed_form() {
        let (spec, fam) = bernoulli_family(2).unwrap();
        for &t in &[-1.5, 0.0, 0.4, 2.0] {
            let p = ParameterPoint::new(vec![t]).unwrap();
            let s = asymptotic_covariance(&spec, &fam, &p).unwrap();
            let pi = t.exp() / (1.0 + t.exp());
            assert!((s.get(0, 0) - pi * (1.0 - pi)).abs() < 1e-12);
        }
    }

    #[test]
    fn coboundary_has_zero_variance() {
        let spec = SubshiftSpec::golden_mean();
        let g = LocallyConstantFn::from_table(&spec, 1, &[0.7, -1.2]).unwrap();
        let cob = LocallyConstantFn::coboundary(&spec, &g);
        let base = LocallyConstantFn::from_table(&spec, 2, &[0.1, -0.4, 0.25]).unwrap();
        let fam = PotentialFamily::new(&spec, base, vec![cob]).unwrap();
        let p = ParameterPoint::new(vec![0.3]).unwrap();
        let s = asymptotic_covariance(&spec, &fam, &p).unwrap();
        assert!(s.get(0, 0).abs() < 1e-12);
        let check = cohomology_independence_check(&spec, &fam, &p, 1e-8).unwrap();
        assert!(!check.independent);
    }

    #[test]
    fn series_and_resolvent_agree() {
        let spec = SubshiftSpec::full_shift(3).unwrap();
        let fam = markov_family(&spec).unwrap();
        let model = GibbsModel::new(&spec, &fam).unwrap();
        let theta: Vec<f64> = (0..fam.dim())
            .map(|i| ((i * 7) % 5) as f64 * 0.2 - 0.4)
            .collect();
        let sys = model.solve(&theta, DEFAULT_TOL).unwrap();
        let a = model.covariance(&sys).unwrap();
        let b = model.covariance_series(&sys).unwrap();
        assert!((a.matrix() - b.matrix()).amax() < 1e-12);
    }

    #[test]
    fn short_word_marginalises() {
        let spec = SubshiftSpec::full_shift(2).unwrap();
        let base =
            LocallyConstantFn::from_table(&spec, 3, &[0.1, 0.5, -0.2, 0.3, 0.0, 0.4, -0.6, 0.2])
                .unwrap();
        let fam =
            PotentialFamily::new(&spec, base, vec![LocallyConstantFn::indicator(&spec, &[1])])
                .unwrap();
        let p = ParameterPoint::new(vec![0.2]).unwrap();
        let sys = solve_gibbs(&spec, &fam, &p, DEFAULT_TOL).unwrap();
        let one = cylinder_log_prob(&sys, &Word::new(vec![1])).unwrap().exp();
        let oracle = oracle_cylinder_prob(&spec, &fam, &p, &Word::new(vec![1]), 60).unwrap();
        assert!((one - oracle).abs() < 1e-12);
        assert!(cylinder_log_prob(&sys, &Word::new(vec![0, 2])).is_err());
    }
}
