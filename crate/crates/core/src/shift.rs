//! Subshifts of finite type, admissible words and locally constant functions.
//!
//! Symbols are 0-based internally. [`Word::from_one_based`] and the
//! `Display` impl of [`Word`] use the external 1-based convention. Word
//! tables are always in lexicographic order.

use std::fmt;

use crate::error::{Error, Result};

/// A one-sided subshift of finite type given by a {0,1} incidence matrix.
///
/// `incidence[i][j] == 1` means symbol `j` may follow symbol `i`. The matrix
/// must have no dead symbols and must be primitive (topologically mixing).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubshiftSpec {
    alphabet_size: usize,
    incidence: Vec<bool>,
}

impl SubshiftSpec {
    pub fn new(alphabet_size: usize, incidence: &[Vec<u8>]) -> Result<Self> {
        if alphabet_size < 2 {
            return Err(Error::InvalidShift(format!(
                "alphabet size must be at least 2, got {alphabet_size}"
            )));
        }
        if incidence.len() != alphabet_size || incidence.iter().any(|r| r.len() != alphabet_size) {
            return Err(Error::InvalidShift(format!(
                "incidence matrix must be {alphabet_size}x{alphabet_size}"
            )));
        }
        let mut flat = Vec::with_capacity(alphabet_size * alphabet_size);
        for row in incidence {
            for &v in row {
                match v {
                    0 => flat.push(false),
                    1 => flat.push(true),
                    other => {
                        return Err(Error::InvalidShift(format!(
                            "incidence entries must be 0 or 1, got {other}"
                        )))
                    }
                }
            }
        }
        let spec = SubshiftSpec {
            alphabet_size,
            incidence: flat,
        };
        for i in 0..alphabet_size {
            if !(0..alphabet_size).any(|j| spec.allows(i, j)) {
                return Err(Error::InvalidShift(format!(
                    "symbol {} has no successor",
                    i + 1
                )));
            }
            if !(0..alphabet_size).any(|j| spec.allows(j, i)) {
                return Err(Error::InvalidShift(format!(
                    "symbol {} has no predecessor",
                    i + 1
                )));
            }
        }
        if !spec.is_primitive() {
            return Err(Error::InvalidShift(
                "incidence matrix is not primitive (subshift is not topologically mixing)".into(),
            ));
        }
        Ok(spec)
    }

    /// The full shift on `a` symbols.
    pub fn full_shift(a: usize) -> Result<Self> {
        Self::new(a, &vec![vec![1; a]; a])
    }

    /// The golden-mean shift: two symbols, the word `11` is forbidden.
    pub fn golden_mean() -> Self {
        Self::new(2, &[vec![0, 1], vec![1, 1]]).expect("golden-mean shift is primitive")
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    #[inline]
    pub fn allows(&self, from: usize, to: usize) -> bool {
        self.incidence[from * self.alphabet_size + to]
    }

    pub fn incidence_rows(&self) -> Vec<Vec<u8>> {
        (0..self.alphabet_size)
            .map(|i| {
                (0..self.alphabet_size)
                    .map(|j| u8::from(self.allows(i, j)))
                    .collect()
            })
            .collect()
    }

    pub fn successors(&self, from: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.alphabet_size).filter(move |&j| self.allows(from, j))
    }

    /// True when every symbol is in range and every consecutive pair is allowed.
    pub fn is_admissible(&self, symbols: &[usize]) -> bool {
        symbols.iter().all(|&s| s < self.alphabet_size)
            && symbols.windows(2).all(|p| self.allows(p[0], p[1]))
    }

    /// Lexicographically smallest admissible continuation of length `len`
    /// after the symbol `last`.
    pub fn canonical_continuation(&self, last: usize, len: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(len);
        let mut cur = last;
        for _ in 0..len {
            cur = self
                .successors(cur)
                .next()
                .expect("no dead symbols by construction");
            out.push(cur);
        }
        out
    }

    /// Number of admissible words of length `n` (count of paths in the
    /// incidence graph).
    pub fn count_words(&self, n: usize) -> usize {
        if n == 0 {
            return 1;
        }
        let a = self.alphabet_size;
        let mut counts = vec![1usize; a];
        for _ in 1..n {
            let mut next = vec![0usize; a];
            for (i, &c) in counts.iter().enumerate() {
                for j in self.successors(i) {
                    next[j] += c;
                }
            }
            counts = next;
        }
        counts.iter().sum()
    }

    // Wielandt: a primitive n x n matrix has A^k > 0 for k = (n-1)^2 + 1.
    fn is_primitive(&self) -> bool {
        let a = self.alphabet_size;
        let bound = (a - 1) * (a - 1) + 1;
        let mut power = self.incidence.clone();
        for _ in 1..bound {
            let mut next = vec![false; a * a];
            for i in 0..a {
                for k in 0..a {
                    if power[i * a + k] {
                        for j in 0..a {
                            if self.incidence[k * a + j] {
                                next[i * a + j] = true;
                            }
                        }
                    }
                }
            }
            power = next;
        }
        power.iter().all(|&b| b)
    }
}

/// A finite word over the alphabet, stored 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(symbols: Vec<usize>) -> Self {
        Word(symbols)
    }

    /// Build a word from 1-based symbols, checking admissibility.
    pub fn from_one_based(spec: &SubshiftSpec, symbols: &[usize]) -> Result<Self> {
        let mut out = Vec::with_capacity(symbols.len());
        for (pos, &s) in symbols.iter().enumerate() {
            if s == 0 || s > spec.alphabet_size() {
                return Err(Error::InadmissibleWord(format!(
                    "symbol {s} at position {pos} is outside 1..={}",
                    spec.alphabet_size()
                )));
            }
            out.push(s - 1);
        }
        let w = Word(out);
        w.check(spec)?;
        Ok(w)
    }

    pub fn check(&self, spec: &SubshiftSpec) -> Result<()> {
        if let Some(bad) = self.0.iter().position(|&s| s >= spec.alphabet_size()) {
            return Err(Error::InadmissibleWord(format!(
                "symbol index {} at position {bad} out of range",
                self.0[bad]
            )));
        }
        if let Some(pos) = self.0.windows(2).position(|p| !spec.allows(p[0], p[1])) {
            return Err(Error::InadmissibleWord(format!(
                "transition {} -> {} at position {pos} is forbidden",
                self.0[pos] + 1,
                self.0[pos + 1] + 1
            )));
        }
        Ok(())
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|s| s + 1).collect()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for s in &self.0 {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{}", s + 1)?;
            first = false;
        }
        Ok(())
    }
}

/// Base-`a` code of a word; lexicographic order on words of equal length
/// matches numeric order on codes.
#[inline]
pub(crate) fn word_code(symbols: &[usize], a: usize) -> usize {
    symbols.iter().fold(0usize, |acc, &s| acc * a + s)
}

pub(crate) fn decode_word(mut code: usize, len: usize, a: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = code % a;
        code /= a;
    }
    out
}

/// All admissible words of length `n`, in lexicographic order.
pub fn enumerate_admissible_words(spec: &SubshiftSpec, n: usize) -> Vec<Word> {
    assert!(n >= 1, "word length must be at least 1");
    let mut out = Vec::with_capacity(spec.count_words(n));
    let mut stack = Vec::with_capacity(n);
    fn rec(spec: &SubshiftSpec, n: usize, stack: &mut Vec<usize>, out: &mut Vec<Word>) {
        if stack.len() == n {
            out.push(Word(stack.clone()));
            return;
        }
        for s in 0..spec.alphabet_size() {
            if stack.last().is_none_or(|&p| spec.allows(p, s)) {
                stack.push(s);
                rec(spec, n, stack, out);
                stack.pop();
            }
        }
    }
    rec(spec, n, &mut stack, &mut out);
    out
}

/// A real function on the sequence space depending only on the first
/// `depth` coordinates.
///
/// Values are stored densely by word code; entries for inadmissible words
/// are NaN and are never read.
#[derive(Debug, Clone, PartialEq)]
pub struct LocallyConstantFn {
    depth: usize,
    alphabet: usize,
    values: Vec<f64>,
}

impl LocallyConstantFn {
    /// Build from one value per admissible `depth`-word, lexicographic order.
    pub fn from_table(spec: &SubshiftSpec, depth: usize, table: &[f64]) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidPotential("depth must be at least 1".into()));
        }
        let words = enumerate_admissible_words(spec, depth);
        if words.len() != table.len() {
            return Err(Error::InvalidPotential(format!(
                "depth-{depth} table needs {} entries (one per admissible word), got {}",
                words.len(),
                table.len()
            )));
        }
        if let Some(bad) = table.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPotential(format!(
                "table entry {bad} is not finite"
            )));
        }
        let a = spec.alphabet_size();
        let mut values = vec![f64::NAN; a.pow(depth as u32)];
        for (w, &v) in words.iter().zip(table) {
            values[word_code(w.symbols(), a)] = v;
        }
        Ok(LocallyConstantFn {
            depth,
            alphabet: a,
            values,
        })
    }

    pub fn from_fn(spec: &SubshiftSpec, depth: usize, f: impl Fn(&[usize]) -> f64) -> Self {
        assert!(depth >= 1, "depth must be at least 1");
        let a = spec.alphabet_size();
        let mut values = vec![f64::NAN; a.pow(depth as u32)];
        for w in enumerate_admissible_words(spec, depth) {
            values[word_code(w.symbols(), a)] = f(w.symbols());
        }
        LocallyConstantFn {
            depth,
            alphabet: a,
            values,
        }
    }

    pub fn constant(spec: &SubshiftSpec, c: f64) -> Self {
        Self::from_fn(spec, 1, |_| c)
    }

    pub fn zero(spec: &SubshiftSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    /// Indicator of the cylinder `[pattern]` (0-based symbols).
    pub fn indicator(spec: &SubshiftSpec, pattern: &[usize]) -> Self {
        Self::from_fn(
            spec,
            pattern.len(),
            |w| {
                if w == pattern {
                    1.0
                } else {
                    0.0
                }
            },
        )
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Value on any admissible word of length at least `depth`; only the
    /// first `depth` symbols are read.
    #[inline]
    pub fn eval(&self, symbols: &[usize]) -> f64 {
        debug_assert!(symbols.len() >= self.depth);
        self.values[word_code(&symbols[..self.depth], self.alphabet)]
    }

    /// Same function viewed at a larger depth.
    pub fn lift(&self, spec: &SubshiftSpec, depth: usize) -> Result<Self> {
        if depth < self.depth {
            return Err(Error::InvalidPotential(format!(
                "cannot lift depth-{} function down to depth {depth}",
                self.depth
            )));
        }
        if depth == self.depth {
            return Ok(self.clone());
        }
        Ok(Self::from_fn(spec, depth, |w| self.eval(w)))
    }

    /// One value per admissible `depth`-word, lexicographic order.
    pub fn table(&self, spec: &SubshiftSpec) -> Vec<f64> {
        enumerate_admissible_words(spec, self.depth)
            .iter()
            .map(|w| self.eval(w.symbols()))
            .collect()
    }

    pub fn min_value(&self) -> f64 {
        self.values
            .iter()
            .filter(|v| !v.is_nan())
            .fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .filter(|v| !v.is_nan())
            .fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// Pointwise `self * c + other * k` at the larger of the two depths.
    pub fn combine(
        &self,
        spec: &SubshiftSpec,
        c: f64,
        other: &LocallyConstantFn,
        k: f64,
    ) -> LocallyConstantFn {
        let depth = self.depth.max(other.depth);
        Self::from_fn(spec, depth, |w| c * self.eval(w) + k * other.eval(w))
    }

    pub fn scaled(&self, c: f64) -> LocallyConstantFn {
        LocallyConstantFn {
            depth: self.depth,
            alphabet: self.alphabet,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// `self - c`.
    pub fn shifted(&self, c: f64) -> LocallyConstantFn {
        LocallyConstantFn {
            depth: self.depth,
            alphabet: self.alphabet,
            values: self.values.iter().map(|v| v - c).collect(),
        }
    }

    /// The coboundary `g - g∘σ`, a function of depth `depth(g) + 1`.
    pub fn coboundary(spec: &SubshiftSpec, g: &LocallyConstantFn) -> LocallyConstantFn {
        Self::from_fn(spec, g.depth + 1, |w| g.eval(w) - g.eval(&w[1..]))
    }
}

/// Linear family `F_θ = f₀ + Σ θᵢ fᵢ`, every member stored at the common depth.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialFamily {
    base: LocallyConstantFn,
    directions: Vec<LocallyConstantFn>,
    common_depth: usize,
}

impl PotentialFamily {
    pub fn new(
        spec: &SubshiftSpec,
        base: LocallyConstantFn,
        directions: Vec<LocallyConstantFn>,
    ) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::InvalidPotential(
                "a family needs at least one direction".into(),
            ));
        }
        let a = spec.alphabet_size();
        if base.alphabet != a || directions.iter().any(|f| f.alphabet != a) {
            return Err(Error::InvalidPotential(
                "functions were built for a different alphabet".into(),
            ));
        }
        let common_depth = directions
            .iter()
            .map(|f| f.depth)
            .chain(std::iter::once(base.depth))
            .max()
            .unwrap_or(1);
        let base = base.lift(spec, common_depth)?;
        let directions = directions
            .iter()
            .map(|f| f.lift(spec, common_depth))
            .collect::<Result<Vec<_>>>()?;
        Ok(PotentialFamily {
            base,
            directions,
            common_depth,
        })
    }

    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    pub fn common_depth(&self) -> usize {
        self.common_depth
    }

    pub fn base(&self) -> &LocallyConstantFn {
        &self.base
    }

    pub fn directions(&self) -> &[LocallyConstantFn] {
        &self.directions
    }

    /// `(f₀, f₁, …, f_d)`.
    pub fn all_functions(&self) -> impl Iterator<Item = &LocallyConstantFn> {
        std::iter::once(&self.base).chain(self.directions.iter())
    }

    /// Same family with every member lifted to `depth`.
    pub fn lifted(&self, spec: &SubshiftSpec, depth: usize) -> Result<Self> {
        if depth == self.common_depth {
            return Ok(self.clone());
        }
        PotentialFamily::new(
            spec,
            self.base.lift(spec, depth)?,
            self.directions
                .iter()
                .map(|f| f.lift(spec, depth))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// Family with direction `k` (0-based) removed. Fails when `d = 1`.
    pub fn without_direction(&self, spec: &SubshiftSpec, k: usize) -> Result<Self> {
        if k >= self.dim() {
            return Err(Error::InvalidArgument(format!(
                "direction index {k} out of range for d = {}",
                self.dim()
            )));
        }
        let dirs = self
            .directions
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, f)| f.clone())
            .collect();
        PotentialFamily::new(spec, self.base.clone(), dirs)
    }
}

/// A parameter vector θ ∈ ℝ^d with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPoint(Vec<f64>);

impl ParameterPoint {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if let Some(i) = theta.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "parameter component {i} is not finite"
            )));
        }
        Ok(ParameterPoint(theta))
    }

    pub fn zeros(d: usize) -> Self {
        ParameterPoint(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.clone()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl From<ParameterPoint> for Vec<f64> {
    fn from(p: ParameterPoint) -> Self {
        p.0
    }
}

/// `F_θ` at the family's common depth.
pub fn assemble_potential(fam: &PotentialFamily, p: &ParameterPoint) -> Result<LocallyConstantFn> {
    if p.dim() != fam.dim() {
        return Err(Error::DimensionMismatch {
            expected: fam.dim(),
            got: p.dim(),
        });
    }
    let mut values = fam.base.values.clone();
    for (f, &t) in fam.directions.iter().zip(p.as_slice()) {
        for (v, fv) in values.iter_mut().zip(&f.values) {
            *v += t * fv;
        }
    }
    Ok(LocallyConstantFn {
        depth: fam.common_depth,
        alphabet: fam.base.alphabet,
        values,
    })
}

/// Birkhoff sum `S_n f` over the cylinder `[w]`, `n = |w|`.
///
/// The `n - m + 1` windows inside `w` are exact. The trailing `m - 1`
/// windows are completed with the lexicographically smallest admissible
/// continuation of `w`, so the result is `S_n f(z)` for that canonical
/// point `z ∈ [w]`. It differs from the supremum over the cylinder by at
/// most `(m - 1)·osc(f)`.
pub fn birkhoff_sum(spec: &SubshiftSpec, f: &LocallyConstantFn, w: &Word) -> Result<f64> {
    let m = f.depth();
    let n = w.len();
    if n < m {
        return Err(Error::WordTooShort { need: m, got: n });
    }
    w.check(spec)?;
    let s = w.symbols();
    let mut total: f64 = s.windows(m).map(|win| f.eval(win)).sum();
    if m > 1 {
        let mut tail = s[n - (m - 1)..].to_vec();
        tail.extend(spec.canonical_continuation(s[n - 1], m - 1));
        total += tail
            .windows(m)
            .take(m - 1)
            .map(|win| f.eval(win))
            .sum::<f64>();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(v: &[usize]) -> Vec<usize> {
        v.iter().map(|s| s - 1).collect()
    }

    #[test]
    fn full_shift_words_of_length_two() {
        let spec = SubshiftSpec::full_shift(2).unwrap();
        let words: Vec<Vec<usize>> = enumerate_admissible_words(&spec, 2)
            .into_iter()
            .map(|w| w.to_one_based())
            .collect();
        assert_eq!(words, vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);
    }

    #[test]
    fn golden_mean_words() {
        let spec = SubshiftSpec::golden_mean();
        let words: Vec<Vec<usize>> = enumerate_admissible_words(&spec, 2)
            .into_iter()
            .map(|w| w.to_one_based())
            .collect();
        assert_eq!(words, vec![vec![1, 2], vec![2, 1], vec![2, 2]]);
        // Brute force over all 2^3 strings.
        let brute = (0..8usize)
            .filter(|code| {
                let w = decode_word(*code, 3, 2);
                w.windows(2).all(|p| !(p[0] == 0 && p[1] == 0))
            })
            .count();
        assert_eq!(brute, 5);
        assert_eq!(enumerate_admissible_words(&spec, 3).len(), 5);
        // Fibonacci growth.
        let counts: Vec<usize> = (1..=8).map(|n| spec.count_words(n)).collect();
        assert_eq!(counts, vec![2, 3, 5, 8, 13, 21, 34, 55]);
    }

    #[test]
    fn rejects_bad_incidence() {
        assert!(SubshiftSpec::new(1, &[vec![1]]).is_err());
        assert!(SubshiftSpec::new(2, &[vec![1, 0], vec![0, 1]]).is_err()); // reducible
        assert!(SubshiftSpec::new(2, &[vec![0, 1], vec![1, 0]]).is_err()); // periodic
        assert!(SubshiftSpec::new(2, &[vec![1, 1], vec![0, 0]]).is_err()); // dead symbol
        assert!(SubshiftSpec::new(2, &[vec![1, 2], vec![1, 1]]).is_err());
    }

    #[test]
    fn word_from_one_based_checks_transitions() {
        let spec = SubshiftSpec::golden_mean();
        assert!(Word::from_one_based(&spec, &[2, 1, 2]).is_ok());
        assert!(Word::from_one_based(&spec, &[1, 1]).is_err());
        assert!(Word::from_one_based(&spec, &[3]).is_err());
        assert_eq!(
            Word::from_one_based(&spec, &[2, 1, 2]).unwrap().to_string(),
            "2 1 2"
        );
    }

    #[test]
    fn assemble_potential_examples() {
        let spec = SubshiftSpec::full_shift(2).unwrap();
        let f0 = LocallyConstantFn::zero(&spec);
        let f1 = LocallyConstantFn::indicator(&spec, &[0]);
        let fam = PotentialFamily::new(&spec, f0.clone(), vec![f1]).unwrap();
        let zero = assemble_potential(&fam, &ParameterPoint::zeros(1)).unwrap();
        assert_eq!(zero, f0);
        let two = assemble_potential(&fam, &ParameterPoint::new(vec![2.0]).unwrap()).unwrap();
        assert_eq!(two.table(&spec), vec![2.0, 0.0]);
        assert!(assemble_potential(&fam, &ParameterPoint::zeros(2)).is_err());
    }

    #[test]
    fn assemble_is_affine() {
        let spec = SubshiftSpec::golden_mean();
        let f0 = LocallyConstantFn::from_table(&spec, 2, &[0.3, -0.1, 0.7]).unwrap();
        let f1 = LocallyConstantFn::from_table(&spec, 1, &[1.0, -2.0]).unwrap();
        let f2 = LocallyConstantFn::from_table(&spec, 2, &[0.5, 0.25, -1.0]).unwrap();
        let fam = PotentialFamily::new(&spec, f0, vec![f1, f2]).unwrap();
        let t = ParameterPoint::new(vec![0.4, -1.3]).unwrap();
        let u = ParameterPoint::new(vec![-2.0, 0.6]).unwrap();
        let tu = ParameterPoint::new(vec![0.4 - 2.0, -1.3 + 0.6]).unwrap();
        let a = |p: &ParameterPoint| assemble_potential(&fam, p).unwrap().table(&spec);
        let (x, y, z, w) = (a(&tu), a(&t), a(&u), a(&ParameterPoint::zeros(2)));
        for i in 0..x.len() {
            assert!((x[i] - y[i] - z[i] + w[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn birkhoff_sum_examples() {
        let spec = SubshiftSpec::full_shift(2).unwrap();
        let c = LocallyConstantFn::constant(&spec, 1.75);
        let w = Word::new(ones(&[1, 2, 1, 1, 2]));
        assert!((birkhoff_sum(&spec, &c, &w).unwrap() - 5.0 * 1.75).abs() < 1e-12);

        let ind = LocallyConstantFn::indicator(&spec, &[0]);
        let w = Word::new(ones(&[1, 2, 1]));
        assert_eq!(birkhoff_sum(&spec, &ind, &w).unwrap(), 2.0);
    }

    #[test]
    fn birkhoff_sum_depth_two_golden_mean() {
        let spec = SubshiftSpec::golden_mean();
        // f(12) = 1, f(21) = 10, f(22) = 100
        let f = LocallyConstantFn::from_table(&spec, 2, &[1.0, 10.0, 100.0]).unwrap();
        let w = Word::new(ones(&[2, 1, 2, 2]));
        // interior windows 21, 12, 22; trailing window completes 2 with its
        // smallest successor 1, giving 21.
        let expected = 10.0 + 1.0 + 100.0 + 10.0;
        assert_eq!(birkhoff_sum(&spec, &f, &w).unwrap(), expected);
        // Word ending in 1: the only successor is 2.
        let w = Word::new(ones(&[2, 2, 1]));
        assert_eq!(birkhoff_sum(&spec, &f, &w).unwrap(), 100.0 + 10.0 + 1.0);
        assert!(birkhoff_sum(&spec, &f, &Word::new(vec![1])).is_err());
    }

    #[test]
    fn canonical_continuation_is_smallest() {
        let spec = SubshiftSpec::golden_mean();
        assert_eq!(spec.canonical_continuation(0, 4), vec![1, 0, 1, 0]);
        assert_eq!(spec.canonical_continuation(1, 3), vec![0, 1, 0]);
    }

    #[test]
    fn table_length_is_checked() {
        let spec = SubshiftSpec::golden_mean();
        assert!(LocallyConstantFn::from_table(&spec, 2, &[1.0, 2.0]).is_err());
        assert!(LocallyConstantFn::from_table(&spec, 2, &[1.0, 2.0, f64::NAN]).is_err());
        assert!(LocallyConstantFn::from_table(&spec, 0, &[]).is_err());
    }
}
