//! Alphabets, distributions, distortion measures and seeded sources.
//!
//! Symbols are carried as indices into an ordered alphabet; labels are kept
//! only for I/O. Every random quantity in the crate is drawn from a
//! [`substream`], a ChaCha8 generator keyed by a 64-bit seed and selected by a
//! 64-bit stream counter, so replicas can be split without coordination.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-12;
const GRID_TOL: f64 = 1e-9;
/// Largest number of Markov contexts (|A|^k) we solve stationary equations for.
const MAX_CONTEXTS: usize = 1024;
pub const MAX_MARKOV_ORDER: usize = 4;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based split of an experiment seed: stream `stream` of key `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives the seed of replica `index` from a master seed.
pub fn replica_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(0x5bd1_e995)))
}

/// Probability vector over an ordered finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution {
    symbols: Vec<String>,
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl FiniteDistribution {
    pub fn new(symbols: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        if symbols.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} symbols but {} weights",
                symbols.len(),
                probs.len()
            )));
        }
        let mut seen = HashSet::new();
        for s in &symbols {
            if !seen.insert(s.as_str()) {
                return Err(Error::InvalidDistribution(format!("duplicate symbol {s:?}")));
            }
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("weight {p} is not a probability")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { symbols, probs, cdf })
    }

    /// Distribution labelled `0..k-1`.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let symbols = (0..probs.len()).map(|i| i.to_string()).collect();
        Self::new(symbols, probs)
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        Self::from_probs(vec![1.0 / k as f64; k])
    }

    /// Bernoulli(p) on {0, 1}: P(1) = p.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::from_probs(vec![1.0 - p, p])
    }

    /// Point mass on symbol `index` of a `k`-letter alphabet.
    pub fn point_mass(k: usize, index: usize) -> Result<Self> {
        let mut probs = vec![0.0; k];
        *probs
            .get_mut(index)
            .ok_or_else(|| Error::InvalidDistribution(format!("index {index} outside alphabet of size {k}")))? = 1.0;
        Self::from_probs(probs)
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.probs[index]
    }

    /// Indices with strictly positive mass.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(i, _)| i)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == label)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        match self.cdf.iter().position(|c| u < *c) {
            Some(i) => i,
            // u landed in the rounding gap above the last cumulative weight
            None => self.probs.iter().rposition(|p| *p > 0.0).unwrap_or(0),
        }
    }

    /// Relative entropy H(self || other) in nats; infinite when not absolutely continuous.
    pub fn relative_entropy(&self, other: &FiniteDistribution) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, q)| if *q > 0.0 { p * (p / q).ln() } else { f64::INFINITY })
            .sum()
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.probs.iter().filter(|p| **p > 0.0).map(|p| -p * p.ln()).sum()
    }
}

/// Per-letter cost matrix rho(x, y) on A x Â.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMeasure {
    matrix: Vec<Vec<f64>>,
    grid: Option<f64>,
}

impl DistortionMeasure {
    pub fn new(matrix: Vec<Vec<f64>>, grid: Option<f64>) -> Result<Self> {
        let cols = matrix.first().map(Vec::len).unwrap_or(0);
        if matrix.is_empty() || cols == 0 {
            return Err(Error::InvalidDistortion("empty matrix".into()));
        }
        if matrix.iter().any(|row| row.len() != cols) {
            return Err(Error::InvalidDistortion("ragged matrix".into()));
        }
        if matrix.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidDistortion("entries must be finite and nonnegative".into()));
        }
        if let Some(step) = grid {
            if !(step.is_finite() && step > 0.0) {
                return Err(Error::InvalidDistortion(format!("grid step {step} must be positive")));
            }
            for v in matrix.iter().flatten() {
                let k = v / step;
                if (k - k.round()).abs() > GRID_TOL {
                    return Err(Error::InvalidDistortion(format!(
                        "entry {v} is not a multiple of grid step {step}"
                    )));
                }
            }
        }
        Ok(Self { matrix, grid })
    }

    /// Hamming distortion on a k-letter alphabet (grid step 1).
    pub fn hamming(k: usize) -> Self {
        let matrix = (0..k)
            .map(|x| (0..k).map(|y| if x == y { 0.0 } else { 1.0 }).collect())
            .collect();
        Self { matrix, grid: Some(1.0) }
    }

    pub fn rows(&self) -> usize {
        self.matrix.len()
    }

    pub fn cols(&self) -> usize {
        self.matrix[0].len()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn grid(&self) -> Option<f64> {
        self.grid
    }

    #[inline]
    pub fn cost(&self, x: usize, y: usize) -> f64 {
        self.matrix[x][y]
    }

    /// Costs in units of the grid step, if a grid is declared.
    pub fn integer_costs(&self) -> Option<Vec<Vec<u64>>> {
        let step = self.grid?;
        Some(
            self.matrix
                .iter()
                .map(|row| row.iter().map(|v| (v / step).round() as u64).collect())
                .collect(),
        )
    }

    /// Reproduction letter minimizing rho(x, ·) for each source letter.
    pub fn column_minimizers(&self) -> Vec<usize> {
        self.matrix
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0, f64::INFINITY), |best, (y, v)| if *v < best.1 { (y, *v) } else { best })
                    .0
            })
            .collect()
    }

    pub fn max_entry(&self) -> f64 {
        self.matrix.iter().flatten().fold(0.0, |m, v| m.max(*v))
    }

    fn check_conformable(&self, p: &FiniteDistribution, q: &FiniteDistribution) -> Result<()> {
        if self.rows() != p.len() || self.cols() != q.len() {
            return Err(Error::DimensionMismatch(format!(
                "rho is {}x{} but |A| = {}, |Â| = {}",
                self.rows(),
                self.cols(),
                p.len(),
                q.len()
            )));
        }
        Ok(())
    }
}

/// Integer-or-float comparison of a block total against n·D.
///
/// With a value grid the costs become exact integers and the limit is
/// floor(nD/Δ + 1e-9), so boundary ties resolve identically everywhere.
#[derive(Debug, Clone)]
pub struct BlockBudget {
    costs: Vec<Vec<f64>>,
    limit: f64,
}

impl BlockBudget {
    pub fn new(rho: &DistortionMeasure, n: usize, d: f64) -> Self {
        let total = n as f64 * d;
        match rho.grid {
            Some(step) => {
                let costs = rho
                    .matrix
                    .iter()
                    .map(|row| row.iter().map(|v| (v / step).round()).collect())
                    .collect();
                Self { costs, limit: (total / step + 1e-9).floor() }
            }
            None => Self {
                costs: rho.matrix.clone(),
                limit: total + 1e-9 * total.abs().max(1.0),
            },
        }
    }

    #[inline]
    pub fn cost(&self, x: usize, y: usize) -> f64 {
        self.costs[x][y]
    }

    #[inline]
    pub fn limit(&self) -> f64 {
        self.limit
    }

    #[inline]
    pub fn within(&self, total: f64) -> bool {
        total <= self.limit
    }
}

/// The four distortion levels attached to a (P, Q, rho) triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionStats {
    pub d_min: f64,
    pub d_av: f64,
    pub d_max: f64,
    pub d_bar: f64,
}

impl DistortionStats {
    /// True when rho(X, Y) is essentially constant (d_min = d_av).
    pub fn is_degenerate(&self) -> bool {
        self.d_av - self.d_min <= 1e-14 * self.d_av.abs().max(1.0)
    }
}

pub fn distortion_stats(
    p: &FiniteDistribution,
    q: &FiniteDistribution,
    rho: &DistortionMeasure,
) -> Result<DistortionStats> {
    rho.check_conformable(p, q)?;
    let q_support: Vec<usize> = q.support().collect();
    if q_support.is_empty() || p.support().next().is_none() {
        return Err(Error::Empty("distribution support".into()));
    }
    let mut d_min = 0.0;
    let mut d_av = 0.0;
    let mut d_max: f64 = 0.0;
    for x in p.support() {
        let px = p.prob(x);
        let mut row_min = f64::INFINITY;
        for &y in &q_support {
            let c = rho.cost(x, y);
            row_min = row_min.min(c);
            d_av += px * q.prob(y) * c;
            d_max = d_max.max(c);
        }
        d_min += px * row_min;
    }
    let d_bar = (0..q.len())
        .map(|y| (0..p.len()).map(|x| p.prob(x) * rho.cost(x, y)).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    Ok(DistortionStats { d_min, d_av, d_max, d_bar })
}

/// Empirical measure of a symbol sequence over the given alphabet.
pub fn empirical_measure(x: &[usize], symbols: &[String]) -> Result<FiniteDistribution> {
    if x.is_empty() {
        return Err(Error::Empty("sequence".into()));
    }
    let mut counts = vec![0u64; symbols.len()];
    for &s in x {
        *counts
            .get_mut(s)
            .ok_or_else(|| Error::DimensionMismatch(format!("symbol index {s} outside alphabet")))? += 1;
    }
    let n = x.len() as f64;
    FiniteDistribution::new(symbols.to_vec(), counts.iter().map(|c| *c as f64 / n).collect())
}

/// Finite-order Markov chain with stationary initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    symbols: Vec<String>,
    order: usize,
    /// `transitions[context][next]`, contexts in base-|A| with the oldest symbol most significant.
    transitions: Vec<Vec<f64>>,
    stationary: Vec<f64>,
}

impl MarkovChain {
    pub fn new(symbols: Vec<String>, order: usize, transitions: Vec<Vec<f64>>) -> Result<Self> {
        let a = symbols.len();
        if a == 0 {
            return Err(Error::InvalidModel("empty alphabet".into()));
        }
        if order == 0 || order > MAX_MARKOV_ORDER {
            return Err(Error::InvalidModel(format!("order {order} outside 1..={MAX_MARKOV_ORDER}")));
        }
        let contexts = a.checked_pow(order as u32).filter(|c| *c <= MAX_CONTEXTS).ok_or_else(|| {
            Error::InvalidModel(format!("|A|^k exceeds {MAX_CONTEXTS} contexts"))
        })?;
        if transitions.len() != contexts {
            return Err(Error::InvalidModel(format!(
                "expected {contexts} transition rows, got {}",
                transitions.len()
            )));
        }
        for (c, row) in transitions.iter().enumerate() {
            if row.len() != a {
                return Err(Error::InvalidModel(format!("row {c} has {} entries", row.len())));
            }
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::InvalidModel(format!("row {c} has a negative entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > SUM_TOL {
                return Err(Error::InvalidModel(format!("row {c} sums to {s}")));
            }
        }
        let mut chain = Self { symbols, order, transitions, stationary: Vec::new() };
        chain.stationary = chain.solve_stationary()?;
        Ok(chain)
    }

    /// Two-state chain on {0,1} that stays put with probability `p_stay`.
    pub fn two_state(p_stay: f64) -> Result<Self> {
        Self::new(
            vec!["0".into(), "1".into()],
            1,
            vec![vec![p_stay, 1.0 - p_stay], vec![1.0 - p_stay, p_stay]],
        )
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn transitions(&self) -> &[Vec<f64>] {
        &self.transitions
    }

    pub fn num_contexts(&self) -> usize {
        self.transitions.len()
    }

    /// Stationary law over contexts.
    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    #[inline]
    pub fn next_context(&self, context: usize, symbol: usize) -> usize {
        (context * self.symbols.len() + symbol) % self.num_contexts()
    }

    #[inline]
    pub fn last_symbol(&self, context: usize) -> usize {
        context % self.symbols.len()
    }

    /// One-dimensional stationary marginal on A.
    pub fn marginal(&self) -> FiniteDistribution {
        let mut probs = vec![0.0; self.symbols.len()];
        for (c, pi) in self.stationary.iter().enumerate() {
            probs[self.last_symbol(c)] += pi;
        }
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        FiniteDistribution {
            cdf: probs
                .iter()
                .scan(0.0, |acc, p| {
                    *acc += p;
                    Some(*acc)
                })
                .collect(),
            symbols: self.symbols.clone(),
            probs,
        }
    }

    /// Context-to-context transition matrix.
    pub fn context_matrix(&self) -> Vec<Vec<f64>> {
        let m = self.num_contexts();
        let mut t = vec![vec![0.0; m]; m];
        for (c, row) in self.transitions.iter().enumerate() {
            for (s, p) in row.iter().enumerate() {
                t[c][self.next_context(c, s)] += p;
            }
        }
        t
    }

    fn solve_stationary(&self) -> Result<Vec<f64>> {
        let t = self.context_matrix();
        let m = t.len();
        let closed = closed_classes(&t);
        if closed != 1 {
            return Err(Error::NonErgodic(format!("{closed} closed communicating classes")));
        }
        // (T^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
        let mut a = vec![vec![0.0; m + 1]; m];
        for i in 0..m {
            for j in 0..m {
                a[i][j] = t[j][i] - if i == j { 1.0 } else { 0.0 };
            }
        }
        for j in 0..m {
            a[m - 1][j] = 1.0;
        }
        a[m - 1][m] = 1.0;
        let mut pi = gauss_solve(a)?;
        pi.iter_mut().for_each(|p| *p = p.max(0.0));
        let s: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= s);
        Ok(pi)
    }
}

/// Number of closed communicating classes of a stochastic matrix.
fn closed_classes(t: &[Vec<f64>]) -> usize {
    let m = t.len();
    let reach: Vec<Vec<bool>> = (0..m)
        .map(|s| {
            let mut seen = vec![false; m];
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(u) = stack.pop() {
                for (v, p) in t[u].iter().enumerate() {
                    if *p > 0.0 && !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            seen
        })
        .collect();
    // s is in a closed class iff everything it reaches reaches back.
    let mut class_of = vec![usize::MAX; m];
    let mut classes = 0;
    for s in 0..m {
        if class_of[s] != usize::MAX {
            continue;
        }
        let closed = (0..m).all(|v| !reach[s][v] || reach[v][s]);
        if closed {
            for v in 0..m {
                if reach[s][v] {
                    class_of[v] = classes;
                }
            }
            classes += 1;
        }
    }
    classes
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
pub(crate) fn gauss_solve(mut a: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let m = a.len();
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|i, j| a[*i][col].abs().total_cmp(&a[*j][col].abs()))
            .unwrap_or(col);
        if a[pivot][col].abs() < 1e-14 {
            return Err(Error::Numerical("singular linear system".into()));
        }
        a.swap(col, pivot);
        let inv = 1.0 / a[col][col];
        for row in col + 1..m {
            let f = a[row][col] * inv;
            if f != 0.0 {
                for k in col..=m {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let s: f64 = (row + 1..m).map(|k| a[row][k] * x[k]).sum();
        x[row] = (a[row][m] - s) / a[row][row];
    }
    Ok(x)
}

/// d-dimensional cube of symbols, row-major (last coordinate fastest).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeBlock {
    dim: usize,
    side: usize,
    values: Vec<usize>,
}

impl LatticeBlock {
    pub fn new(dim: usize, side: usize, values: Vec<usize>) -> Result<Self> {
        let expected = side
            .checked_pow(dim as u32)
            .ok_or_else(|| Error::TooLarge("lattice block volume overflows".into()))?;
        if values.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "lattice block of side {side} in {dim} dimensions needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Self { dim, side, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn get(&self, coords: &[usize]) -> usize {
        self.values[coords.iter().fold(0, |acc, c| acc * self.side + c)]
    }
}

/// I.i.d. random field on the positive orthant of Z^d.
///
/// Cell values are a pure function of (key, coordinates), so any finite
/// window can be materialized in any order.
#[derive(Debug, Clone)]
pub struct FieldSampler {
    dist: FiniteDistribution,
    dim: usize,
    key: u64,
}

impl FieldSampler {
    pub fn new(dist: FiniteDistribution, dim: usize, key: u64) -> Self {
        Self { dist, dim, key }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell(&self, coords: &[usize]) -> usize {
        let mut h = self.key;
        for c in coords {
            h = mix64(h ^ (*c as u64).wrapping_mul(0xd6e8_feb8_6659_fd93));
        }
        let u = (mix64(h) >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        match self.dist.cdf.iter().position(|c| u < *c) {
            Some(i) => i,
            None => self.dist.probs.iter().rposition(|p| *p > 0.0).unwrap_or(0),
        }
    }

    /// The cube `origin + [0, side)^d`.
    pub fn block(&self, origin: &[usize], side: usize) -> Result<LatticeBlock> {
        let volume = side.pow(self.dim as u32);
        let mut values = Vec::with_capacity(volume);
        let mut coords = vec![0usize; self.dim];
        for idx in 0..volume {
            let mut rem = idx;
            for k in (0..self.dim).rev() {
                coords[k] = origin[k] + rem % side;
                rem /= side;
            }
            values.push(self.cell(&coords));
        }
        LatticeBlock::new(self.dim, side, values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceKind {
    Iid(FiniteDistribution),
    Markov(MarkovChain),
    GaussianIid { mean: f64, variance: f64 },
    FieldIid { dist: FiniteDistribution, dim: usize },
}

/// Generative source specification with its own seed namespace.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceModel {
    pub kind: SourceKind,
    pub seed_domain: u64,
}

/// One realization drawn by [`sample_path`].
#[derive(Debug, Clone, PartialEq)]
pub enum Realization {
    Symbols(Vec<usize>),
    Reals(Vec<f64>),
    Field(LatticeBlock),
}

impl Realization {
    pub fn into_symbols(self) -> Option<Vec<usize>> {
        match self {
            Realization::Symbols(v) => Some(v),
            _ => None,
        }
    }
}

impl SourceModel {
    pub fn new(kind: SourceKind, seed_domain: u64) -> Result<Self> {
        let model = Self { kind, seed_domain };
        model.validate()?;
        Ok(model)
    }

    pub fn iid(dist: FiniteDistribution) -> Self {
        Self { kind: SourceKind::Iid(dist), seed_domain: 0 }
    }

    pub fn markov(chain: MarkovChain) -> Self {
        Self { kind: SourceKind::Markov(chain), seed_domain: 0 }
    }

    pub fn field(dist: FiniteDistribution, dim: usize) -> Result<Self> {
        Self::new(SourceKind::FieldIid { dist, dim }, 0)
    }

    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        Self::new(SourceKind::GaussianIid { mean, variance }, 0)
    }

    pub fn with_seed_domain(mut self, seed_domain: u64) -> Self {
        self.seed_domain = seed_domain;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            SourceKind::GaussianIid { mean, variance } => {
                if !(variance.is_finite() && *variance > 0.0 && mean.is_finite()) {
                    return Err(Error::InvalidModel(format!("gaussian variance {variance} must be > 0")));
                }
            }
            SourceKind::FieldIid { dim, .. } if *dim < 2 => {
                return Err(Error::InvalidModel(format!("field dimension {dim} must be >= 2")));
            }
            _ => {}
        }
        Ok(())
    }

    /// Marginal law of one symbol (stationary marginal for Markov sources).
    pub fn marginal(&self) -> Option<FiniteDistribution> {
        match &self.kind {
            SourceKind::Iid(d) | SourceKind::FieldIid { dist: d, .. } => Some(d.clone()),
            SourceKind::Markov(c) => Some(c.marginal()),
            SourceKind::GaussianIid { .. } => None,
        }
    }

    pub fn alphabet(&self) -> Option<&[String]> {
        match &self.kind {
            SourceKind::Iid(d) | SourceKind::FieldIid { dist: d, .. } => Some(d.symbols()),
            SourceKind::Markov(c) => Some(c.symbols()),
            SourceKind::GaussianIid { .. } => None,
        }
    }

    fn key(&self, seed: u64) -> u64 {
        seed ^ mix64(self.seed_domain)
    }

    /// Unbounded symbol stream for i.i.d. and Markov sources.
    pub fn stream(&self, seed: u64) -> Result<SymbolStream> {
        let rng = substream(self.key(seed), 0);
        match &self.kind {
            SourceKind::Iid(d) => Ok(SymbolStream { rng, state: StreamState::Iid(d.clone()) }),
            SourceKind::Markov(c) => Ok(SymbolStream {
                rng,
                state: StreamState::Markov { chain: c.clone(), context: None, pending: Vec::new() },
            }),
            _ => Err(Error::InvalidModel("symbol streams need an i.i.d. or Markov source".into())),
        }
    }

    pub fn field_sampler(&self, seed: u64) -> Result<FieldSampler> {
        match &self.kind {
            SourceKind::FieldIid { dist, dim } => Ok(FieldSampler::new(dist.clone(), *dim, mix64(self.key(seed)))),
            _ => Err(Error::InvalidModel("not a random field".into())),
        }
    }
}

#[derive(Debug, Clone)]
enum StreamState {
    Iid(FiniteDistribution),
    Markov { chain: MarkovChain, context: Option<usize>, pending: Vec<usize> },
}

/// Lazily generated realization of a one-dimensional source.
#[derive(Debug, Clone)]
pub struct SymbolStream {
    rng: ChaCha8Rng,
    state: StreamState,
}

impl SymbolStream {
    pub fn next_symbol(&mut self) -> usize {
        match &mut self.state {
            StreamState::Iid(d) => d.sample(&mut self.rng),
            StreamState::Markov { chain, context, pending } => {
                if let Some(s) = pending.pop() {
                    return s;
                }
                match context {
                    None => {
                        // Draw the initial context from the stationary law and
                        // emit its digits oldest first.
                        let u: f64 = self.rng.gen();
                        let mut acc = 0.0;
                        let pi = chain.stationary();
                        let mut c = pi.iter().rposition(|p| *p > 0.0).unwrap_or(0);
                        for (i, p) in pi.iter().enumerate() {
                            acc += p;
                            if u < acc {
                                c = i;
                                break;
                            }
                        }
                        *context = Some(c);
                        let a = chain.symbols().len();
                        let mut digits = Vec::with_capacity(chain.order());
                        let mut rem = c;
                        for _ in 0..chain.order() {
                            digits.push(rem % a);
                            rem /= a;
                        }
                        // digits holds newest first; pop() yields oldest first
                        *pending = digits;
                        pending.pop().unwrap_or(0)
                    }
                    Some(c) => {
                        let row = &chain.transitions()[*c];
                        let u: f64 = self.rng.gen();
                        let mut acc = 0.0;
                        let mut s = row.iter().rposition(|p| *p > 0.0).unwrap_or(0);
                        for (i, p) in row.iter().enumerate() {
                            acc += p;
                            if u < acc {
                                s = i;
                                break;
                            }
                        }
                        *c = chain.next_context(*c, s);
                        s
                    }
                }
            }
        }
    }

    pub fn take_vec(&mut self, n: usize) -> Vec<usize> {
        (0..n).map(|_| self.next_symbol()).collect()
    }

    pub fn extend(&mut self, buf: &mut Vec<usize>, n: usize) {
        buf.reserve(n);
        for _ in 0..n {
            let s = self.next_symbol();
            buf.push(s);
        }
    }
}

/// Deterministic realization of length `n` (side `n` for random fields).
pub fn sample_path(src: &SourceModel, n: usize, seed: u64) -> Result<Realization> {
    if n == 0 {
        return Err(Error::Empty("path length must be >= 1".into()));
    }
    src.validate()?;
    match &src.kind {
        SourceKind::Iid(_) | SourceKind::Markov(_) => Ok(Realization::Symbols(src.stream(seed)?.take_vec(n))),
        SourceKind::GaussianIid { mean, variance } => {
            let normal = Normal::new(*mean, variance.sqrt()).map_err(|e| Error::InvalidModel(e.to_string()))?;
            let mut rng = substream(src.key(seed), 0);
            Ok(Realization::Reals((0..n).map(|_| normal.sample(&mut rng)).collect()))
        }
        SourceKind::FieldIid { dim, .. } => {
            let sampler = src.field_sampler(seed)?;
            Ok(Realization::Field(sampler.block(&vec![0; *dim], n)?))
        }
    }
}
