//! Waiting times and match lengths between independent realizations.
//!
//! Wₙ is the first (overlapping) start position i at which y_i^{i+n-1} is
//! D-close to x₁ⁿ; Lₘ is the longest ℓ such that x₁^ℓ is D-close to some
//! window of y starting at j ≤ m. Lattice versions search d-dimensional
//! cubes shell by shell.

use crate::ballprob::{ball_prob_exact_dp, BallQuery};
use crate::error::{Error, Result};
use crate::model::{mix64, BlockBudget, DistortionMeasure, FieldSampler, FiniteDistribution, LatticeBlock, SourceKind, SourceModel};
use crate::ratefn::{rate_r1, FiniteProblem, Regime};

pub const DEFAULT_HORIZON: u64 = 1 << 32;

/// One draw of Wₙ (or Lₘ, with `n` holding m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchSample {
    pub n: usize,
    /// `None` when no match was found within the horizon.
    pub value: Option<u64>,
    /// Lₘ stopped at its search cap.
    pub capped: bool,
    /// Natural log of Qⁿ(B(x, D)).
    pub ball_log_prob: Option<f64>,
    pub x_seed: u64,
    pub y_seed: u64,
}

/// One draw of the lattice waiting time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldMatchSample {
    pub dim: usize,
    pub n: usize,
    pub w: Option<u64>,
    pub horizon: u64,
    pub ball_log_prob: Option<f64>,
    pub x_seed: u64,
    pub y_seed: u64,
}

impl FieldMatchSample {
    pub fn as_match_sample(&self) -> MatchSample {
        MatchSample {
            n: self.n,
            value: self.w,
            capped: false,
            ball_log_prob: self.ball_log_prob,
            x_seed: self.x_seed,
            y_seed: self.y_seed,
        }
    }
}

fn check_inputs(x: &[usize], rho: &DistortionMeasure, d: f64) -> Result<()> {
    if x.is_empty() {
        return Err(Error::Empty("pattern".into()));
    }
    if !d.is_finite() || d < 0.0 {
        return Err(Error::InvalidDistortion(format!("D = {d} must be finite and >= 0")));
    }
    if let Some(s) = x.iter().find(|s| **s >= rho.rows()) {
        return Err(Error::DimensionMismatch(format!("symbol {s} outside source alphabet")));
    }
    Ok(())
}

/// Wₙ over an arbitrary symbol sequence; `None` if no start in `1..=horizon` matches.
pub fn waiting_time_in<I>(x: &[usize], y: I, rho: &DistortionMeasure, d: f64, horizon: u64) -> Result<Option<u64>>
where
    I: IntoIterator<Item = usize>,
{
    check_inputs(x, rho, d)?;
    if horizon == 0 {
        return Err(Error::Config("horizon must be >= 1".into()));
    }
    let n = x.len();
    let budget = BlockBudget::new(rho, n, d);
    let limit = budget.limit();
    let table: Vec<Vec<f64>> = x.iter().map(|&a| (0..rho.cols()).map(|b| budget.cost(a, b)).collect()).collect();
    let mut y = y.into_iter();
    let mut ring = Vec::with_capacity(n);
    for _ in 0..n {
        match y.next() {
            Some(s) => ring.push(check_symbol(s, rho)?),
            None => return Ok(None),
        }
    }
    // ring[head] holds y_i; the window is ring[head..] followed by ring[..head].
    let mut head = 0usize;
    let mut i = 1u64;
    loop {
        let (tail, front) = ring.split_at(head);
        let mut total = 0.0;
        let mut inside = true;
        for (row, &s) in table.iter().zip(front.iter().chain(tail)) {
            total += row[s];
            if total > limit {
                inside = false;
                break;
            }
        }
        if inside {
            return Ok(Some(i));
        }
        if i == horizon {
            return Ok(None);
        }
        match y.next() {
            Some(s) => ring[head] = check_symbol(s, rho)?,
            None => return Ok(None),
        }
        head = if head + 1 == n { 0 } else { head + 1 };
        i += 1;
    }
}

fn check_symbol(s: usize, rho: &DistortionMeasure) -> Result<usize> {
    if s >= rho.cols() {
        return Err(Error::DimensionMismatch(format!("reproduction symbol {s} outside alphabet")));
    }
    Ok(s)
}

/// ⌈4 ln m / R₁⌉, or `m` when the rate vanishes.
pub fn default_cap(m: usize, r1_nats: f64) -> usize {
    if r1_nats <= 0.0 || !r1_nats.is_finite() {
        return m.max(1);
    }
    ((4.0 * (m.max(2) as f64).ln() / r1_nats).ceil() as usize).max(1)
}

/// R₁(P, Q, D) in nats, including the boundary value at D = d_min.
pub fn rate_for_cap(p: &FiniteDistribution, q: &FiniteDistribution, rho: &DistortionMeasure, d: f64) -> Result<f64> {
    let problem = FiniteProblem::new(p, q, rho)?;
    let stats = *problem.stats();
    if stats.is_degenerate() {
        return Ok(0.0);
    }
    if d <= stats.d_min + 1e-12 {
        // Limit λ → −∞: only the cheapest reproductions of each letter survive.
        let mut r = 0.0;
        for x in p.support() {
            let best = q.support().map(|y| rho.cost(x, y)).fold(f64::INFINITY, f64::min);
            let mass: f64 = q.support().filter(|&y| rho.cost(x, y) <= best + 1e-12).map(|y| q.prob(y)).sum();
            r -= p.prob(x) * mass.ln();
        }
        return Ok(r);
    }
    let point = rate_r1(&problem, d)?;
    Ok(if point.regime == Regime::ZeroRate { 0.0 } else { point.r1_nats })
}

/// Per-length thresholds limit[ℓ] for ℓ = 0..=cap.
fn limits(rho: &DistortionMeasure, d: f64, cap: usize) -> (BlockBudget, Vec<f64>) {
    let unit = BlockBudget::new(rho, 1, d);
    let lim = (0..=cap).map(|l| BlockBudget::new(rho, l, d).limit()).collect();
    (unit, lim)
}

/// Lₘ: the longest ℓ ≤ `cap` with some start j ≤ m where y_j^{j+ℓ-1} is D-close to x₁^ℓ.
///
/// `x` must hold at least `cap` symbols and `y` at least `m + cap - 1`.
/// Returns (Lₘ, capped); Lₘ = 0 when not even one letter matches.
pub fn match_length(x: &[usize], y: &[usize], m: usize, rho: &DistortionMeasure, d: f64, cap: usize) -> Result<(usize, bool)> {
    check_inputs(x, rho, d)?;
    if m == 0 || cap == 0 {
        return Err(Error::Config("m and the length cap must be >= 1".into()));
    }
    if x.len() < cap || y.len() < m + cap - 1 {
        return Err(Error::DimensionMismatch(format!(
            "need |x| >= {cap} and |y| >= {}, got {} and {}",
            m + cap - 1,
            x.len(),
            y.len()
        )));
    }
    if let Some(s) = y.iter().find(|s| **s >= rho.cols()) {
        return Err(Error::DimensionMismatch(format!("reproduction symbol {s} outside alphabet")));
    }
    let (unit, lim) = limits(rho, d, cap);
    let ceiling = lim[cap];
    let mut best = 0usize;
    for j in 0..m {
        let mut total = 0.0;
        for l in 1..=cap {
            total += unit.cost(x[l - 1], y[j + l - 1]);
            // Costs are nonnegative, so no longer window can recover.
            if total > ceiling {
                break;
            }
            if l > best && total <= lim[l] {
                best = l;
            }
        }
        if best == cap {
            break;
        }
    }
    Ok((best, best == cap))
}

/// A pair of sources compared by waiting times and match lengths.
#[derive(Debug, Clone)]
pub struct MatchSetup {
    pub x_src: SourceModel,
    pub y_src: SourceModel,
    pub rho: DistortionMeasure,
    pub d: f64,
}

impl MatchSetup {
    /// Sources sharing a seed namespace get the y side moved to a fresh one.
    pub fn new(x_src: SourceModel, mut y_src: SourceModel, rho: DistortionMeasure, d: f64) -> Result<Self> {
        if y_src.seed_domain == x_src.seed_domain {
            y_src.seed_domain = mix64(x_src.seed_domain ^ 0x7965_7363_6f64_6500);
        }
        for (src, side) in [(&x_src, "x"), (&y_src, "y")] {
            src.validate()?;
            let k = src.alphabet().ok_or_else(|| Error::InvalidModel(format!("{side} source must be finite-alphabet")))?.len();
            let expected = if side == "x" { rho.rows() } else { rho.cols() };
            if k != expected {
                return Err(Error::DimensionMismatch(format!("{side} alphabet has {k} letters, rho expects {expected}")));
            }
        }
        if !d.is_finite() || d < 0.0 {
            return Err(Error::InvalidDistortion(format!("D = {d} must be finite and >= 0")));
        }
        Ok(Self { x_src, y_src, rho, d })
    }

    fn q(&self) -> Option<&FiniteDistribution> {
        match &self.y_src.kind {
            SourceKind::Iid(q) | SourceKind::FieldIid { dist: q, .. } => Some(q),
            _ => None,
        }
    }

    /// R₁(P, Q, D) for the x marginal against the y law, in nats.
    pub fn r1(&self) -> Result<f64> {
        let p = self.x_src.marginal().ok_or_else(|| Error::InvalidModel("x source has no marginal".into()))?;
        let q = self.y_src.marginal().ok_or_else(|| Error::InvalidModel("y source has no marginal".into()))?;
        rate_for_cap(&p, &q, &self.rho, self.d)
    }

    /// Draws x₁ⁿ from `x_seed` and waits for it in the y stream of `y_seed`.
    /// The ball probability is attached when Y is i.i.d.
    pub fn waiting_time(&self, n: usize, horizon: u64, x_seed: u64, y_seed: u64) -> Result<MatchSample> {
        let x = self.x_src.stream(x_seed)?.take_vec(n);
        let mut ys = self.y_src.stream(y_seed)?;
        let value = waiting_time_in(&x, std::iter::from_fn(|| Some(ys.next_symbol())), &self.rho, self.d, horizon)?;
        let ball_log_prob = match self.q() {
            Some(q) => Some(ball_prob_exact_dp(&BallQuery::new(&x, q, &self.rho, self.d)?)?.log_prob),
            None => None,
        };
        Ok(MatchSample { n, value, capped: false, ball_log_prob, x_seed, y_seed })
    }

    /// Lₘ for a database y₁^{m+cap-1} of `y_seed` and the x stream of `x_seed`.
    pub fn match_length(&self, m: usize, cap: usize, x_seed: u64, y_seed: u64) -> Result<MatchSample> {
        let x = self.x_src.stream(x_seed)?.take_vec(cap);
        let y = self.y_src.stream(y_seed)?.take_vec(m + cap - 1);
        let (l, capped) = match_length(&x, &y, m, &self.rho, self.d, cap)?;
        Ok(MatchSample { n: m, value: Some(l as u64), capped, ball_log_prob: None, x_seed, y_seed })
    }

    pub fn duality_audit(&self, n_max: usize, m: usize, x_seed: u64, y_seed: u64) -> Result<DualityReport> {
        let cap = default_cap(m, self.r1()?).max(n_max);
        let x = self.x_src.stream(x_seed)?.take_vec(cap);
        let y = self.y_src.stream(y_seed)?.take_vec(m + cap - 1);
        duality_check(&x, &y, m, &self.rho, self.d, n_max, cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualityRule {
    /// D = 0: Wₙ ≤ m exactly when Lₘ ≥ n.
    Equivalence,
    /// Wₙ ≤ m implies Lₘ ≥ n.
    WaitImpliesLength,
    /// Lₘ ≥ n implies inf_{k ≥ n} W_k ≤ m.
    LengthImpliesWait,
    /// The rolling scan and the per-start prefix sums disagree on Wₙ.
    ScanAgreement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DualityViolation {
    pub n: usize,
    pub rule: DualityRule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualityReport {
    pub m: usize,
    pub cap: usize,
    /// Wₙ for n = 1..=n_max, `None` when no start j ≤ m matches.
    pub waits: Vec<Option<u64>>,
    pub match_length: usize,
    pub capped: bool,
    pub checks: usize,
    pub violations: Vec<DualityViolation>,
}

/// Audits the waiting-time / match-length duality on one realization pair.
pub fn duality_check(
    x: &[usize],
    y: &[usize],
    m: usize,
    rho: &DistortionMeasure,
    d: f64,
    n_max: usize,
    cap: usize,
) -> Result<DualityReport> {
    if n_max == 0 || n_max > cap {
        return Err(Error::Config(format!("need 1 <= n_max <= cap, got n_max = {n_max}, cap = {cap}")));
    }
    let (l, capped) = match_length(x, y, m, rho, d, cap)?;

    // first[ℓ]: smallest start j ≤ m matching at length ℓ, from unpruned prefix sums.
    let (unit, lim) = limits(rho, d, cap);
    let mut first: Vec<Option<u64>> = vec![None; cap + 1];
    for j in 0..m {
        let mut total = 0.0;
        for len in 1..=cap {
            total += unit.cost(x[len - 1], y[j + len - 1]);
            if first[len].is_none() && total <= lim[len] {
                first[len] = Some(j as u64 + 1);
            }
        }
    }
    // inf_{k ∈ [n, cap]} W_k
    let mut inf_from = vec![None; cap + 2];
    for len in (1..=cap).rev() {
        inf_from[len] = match (first[len], inf_from[len + 1]) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
    }

    let exact = d == 0.0;
    let mut violations = Vec::new();
    let mut waits = Vec::with_capacity(n_max);
    let mut checks = 0;
    for n in 1..=n_max {
        let w = waiting_time_in(&x[..n], y.iter().copied(), rho, d, m as u64)?;
        waits.push(w);
        let mut check = |ok: bool, rule| {
            checks += 1;
            if !ok {
                violations.push(DualityViolation { n, rule });
            }
        };
        check(w == first[n], DualityRule::ScanAgreement);
        let w_hit = w.is_some();
        let l_hit = l >= n;
        if exact {
            check(w_hit == l_hit, DualityRule::Equivalence);
        } else {
            check(!w_hit || l_hit, DualityRule::WaitImpliesLength);
            check(!l_hit || inf_from[n].is_some(), DualityRule::LengthImpliesWait);
        }
    }
    Ok(DualityReport { m, cap, waits, match_length: l, capped, checks, violations })
}

/// Lattice waiting time: the smallest i such that some u ∈ [0, i-1]^d gives a
/// D-close window `y[u + C(n)]`. Shells are visited in lexicographic order.
pub fn waiting_time_field(x: &LatticeBlock, y: &FieldSampler, rho: &DistortionMeasure, d: f64, horizon: u64) -> Result<Option<u64>> {
    check_inputs(x.values(), rho, d)?;
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch(format!("block is {}-D but field is {}-D", x.dim(), y.dim())));
    }
    if horizon == 0 {
        return Err(Error::Config("horizon must be >= 1".into()));
    }
    let dim = x.dim();
    let side = x.side();
    let volume = x.values().len();
    let budget = BlockBudget::new(rho, volume, d);
    let limit = budget.limit();
    // Offsets of the template cells, in the block's row-major order.
    let offsets: Vec<Vec<usize>> = (0..volume)
        .map(|idx| {
            let mut c = vec![0; dim];
            let mut rem = idx;
            for k in (0..dim).rev() {
                c[k] = rem % side;
                rem /= side;
            }
            c
        })
        .collect();
    let mut coords = vec![0usize; dim];
    let mut fits = |u: &[usize]| -> bool {
        let mut total = 0.0;
        for (off, &a) in offsets.iter().zip(x.values()) {
            for k in 0..dim {
                coords[k] = u[k] + off[k];
            }
            total += budget.cost(a, y.cell(&coords));
            if total > limit {
                return false;
            }
        }
        true
    };
    let mut u = vec![0usize; dim];
    for i in 1..=horizon {
        if shell_search(&mut u, 0, (i - 1) as usize, false, &mut fits) {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// Visits u ∈ [0, top]^d with max coordinate = top, lexicographically.
fn shell_search<F: FnMut(&[usize]) -> bool>(u: &mut [usize], k: usize, top: usize, has_top: bool, fits: &mut F) -> bool {
    if k + 1 == u.len() {
        let start = if has_top { 0 } else { top };
        for v in start..=top {
            u[k] = v;
            if fits(u) {
                return true;
            }
        }
        return false;
    }
    for v in 0..=top {
        u[k] = v;
        if shell_search(u, k + 1, top, has_top || v == top, fits) {
            return true;
        }
    }
    false
}

/// Draws an n^d template from `x_seed` and searches the `y_seed` field for it.
pub fn sample_field_wait(
    x_src: &SourceModel,
    y_src: &SourceModel,
    rho: &DistortionMeasure,
    d: f64,
    n: usize,
    horizon: u64,
    seeds: (u64, u64),
) -> Result<FieldMatchSample> {
    let (x_seed, y_seed) = seeds;
    let xs = x_src.field_sampler(x_seed)?;
    let mut y_src = y_src.clone();
    if y_src.seed_domain == x_src.seed_domain {
        y_src.seed_domain = mix64(x_src.seed_domain ^ 0x7965_7363_6f64_6500);
    }
    let ys = y_src.field_sampler(y_seed)?;
    let block = xs.block(&vec![0; xs.dim()], n)?;
    let w = waiting_time_field(&block, &ys, rho, d, horizon)?;
    let ball_log_prob = match &y_src.kind {
        SourceKind::FieldIid { dist, .. } => Some(ball_prob_exact_dp(&BallQuery::new(block.values(), dist, rho, d)?)?.log_prob),
        _ => None,
    };
    Ok(FieldMatchSample { dim: xs.dim(), n, w, horizon, ball_log_prob, x_seed, y_seed })
}

/// Inside-fraction of the strong-approximation band at one block size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandRow {
    pub n: usize,
    pub samples: usize,
    pub inside: usize,
    pub fraction: f64,
    /// −(1+ε) ln n
    pub lower: f64,
    /// (d+1+ε) ln n
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrongApproxReport {
    pub epsilon: f64,
    pub dim: usize,
    pub rows: Vec<BandRow>,
    pub nondecreasing: bool,
}

impl StrongApproxReport {
    pub fn last_fraction(&self) -> Option<f64> {
        self.rows.last().map(|r| r.fraction)
    }
}

/// Checks −(1+ε) ln n ≤ ln(W^d · Qⁿ(B)) ≤ (d+1+ε) ln n per block size n.
/// Samples without a match count as outside.
pub fn strong_approx_audit(samples: &[MatchSample], epsilon: f64, dim: usize) -> Result<StrongApproxReport> {
    if !(epsilon > 0.0) || dim == 0 {
        return Err(Error::Config(format!("need ε > 0 and d >= 1, got {epsilon}, {dim}")));
    }
    let mut sizes: Vec<usize> = samples.iter().map(|s| s.n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let mut rows = Vec::with_capacity(sizes.len());
    for n in sizes {
        let ln_n = (n as f64).ln();
        let lower = -(1.0 + epsilon) * ln_n;
        let upper = (dim as f64 + 1.0 + epsilon) * ln_n;
        let mut count = 0;
        let mut inside = 0;
        for s in samples.iter().filter(|s| s.n == n) {
            let lb = s.ball_log_prob.ok_or_else(|| Error::InvalidModel("sample lacks a ball probability".into()))?;
            count += 1;
            if let Some(w) = s.value {
                let v = dim as f64 * (w as f64).ln() + lb;
                if v >= lower - 1e-12 && v <= upper + 1e-12 {
                    inside += 1;
                }
            }
        }
        rows.push(BandRow { n, samples: count, inside, fraction: inside as f64 / count as f64, lower, upper });
    }
    let nondecreasing = rows.windows(2).all(|w| w[1].fraction >= w[0].fraction);
    Ok(StrongApproxReport { epsilon, dim, rows, nondecreasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MarkovChain;

    fn binary() -> DistortionMeasure {
        DistortionMeasure::hamming(2)
    }

    #[test]
    fn single_letter_reproduction_waits_one() {
        let rho = DistortionMeasure::new(vec![vec![0.0], vec![1.0]], Some(1.0)).unwrap();
        let w = waiting_time_in(&[0, 1, 1, 0], std::iter::repeat(0), &rho, 1.0, 10).unwrap();
        assert_eq!(w, Some(1));
    }

    #[test]
    fn horizon_exhaustion_is_a_value() {
        let w = waiting_time_in(&[1, 1], std::iter::repeat(0), &binary(), 0.0, 50).unwrap();
        assert_eq!(w, None);
        assert!(waiting_time_in(&[1], std::iter::repeat(0), &binary(), 0.0, 0).is_err());
    }

    #[test]
    fn overlapping_windows() {
        // 0 0 1 1 contains "01" starting at position 2
        let w = waiting_time_in(&[0, 1], [0, 0, 1, 1], &binary(), 0.0, 10).unwrap();
        assert_eq!(w, Some(2));
    }

    #[test]
    fn toy_duality_table() {
        let x = [0, 0, 0];
        let y: Vec<usize> = (0..10).map(|i| i % 2).collect();
        let r = duality_check(&x, &y, 8, &binary(), 1.0 / 3.0, 3, 3).unwrap();
        assert_eq!(r.waits, vec![Some(1), None, Some(1)]);
        assert_eq!((r.match_length, r.capped), (3, true));
        assert!(r.violations.is_empty());
    }

    #[test]
    fn match_length_not_monotone_in_length() {
        let x = [0, 0, 0, 0, 0];
        let y = [0, 1, 0, 1, 1, 1, 1, 1, 1];
        // ℓ = 1 and 3 match at j = 1, ℓ = 2 never does
        let (l, capped) = match_length(&x, &y, 5, &binary(), 1.0 / 3.0, 5).unwrap();
        assert_eq!((l, capped), (3, false));
    }

    #[test]
    fn saturated_distortion_hits_cap() {
        let (l, capped) = match_length(&[1; 6], &[0; 10], 5, &binary(), 1.0, 6).unwrap();
        assert_eq!((l, capped), (6, true));
    }

    #[test]
    fn cap_rule() {
        assert_eq!(default_cap(1 << 16, 0.130812), 340);
        assert_eq!(default_cap(100, 0.0), 100);
    }

    #[test]
    fn zero_distortion_rate() {
        let q = FiniteDistribution::uniform(2).unwrap();
        let r = rate_for_cap(&q, &q, &binary(), 0.0).unwrap();
        assert!((r - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn setup_separates_namespaces() {
        let q = FiniteDistribution::uniform(2).unwrap();
        let s = MatchSetup::new(SourceModel::iid(q.clone()), SourceModel::iid(q), binary(), 0.0).unwrap();
        assert_ne!(s.x_src.seed_domain, s.y_src.seed_domain);
        let x = s.x_src.stream(5).unwrap().take_vec(64);
        let y = s.y_src.stream(5).unwrap().take_vec(64);
        assert_ne!(x, y);
    }

    #[test]
    fn markov_pair_audit_runs() {
        let chain = MarkovChain::two_state(0.8).unwrap();
        let q = FiniteDistribution::uniform(2).unwrap();
        let s = MatchSetup::new(SourceModel::markov(chain), SourceModel::iid(q), binary(), 0.25).unwrap();
        let r = s.duality_audit(16, 512, 1, 2).unwrap();
        assert!(r.violations.is_empty());
        assert!(r.checks >= 32);
    }

    #[test]
    fn field_shells_cover_the_cube() {
        let mut seen = Vec::new();
        let mut u = vec![0; 2];
        for top in 0..4 {
            shell_search(&mut u, 0, top, false, &mut |v: &[usize]| {
                seen.push((v[0], v[1]));
                false
            });
        }
        assert_eq!(seen.len(), 16);
        let mut sorted = seen.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 16);
        assert_eq!(&seen[..4], &[(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn field_wait_saturated() {
        let q = FiniteDistribution::uniform(2).unwrap();
        let src = SourceModel::field(q, 2).unwrap();
        let s = sample_field_wait(&src, &src, &binary(), 1.0, 3, 10, (1, 2)).unwrap();
        assert_eq!(s.w, Some(1));
        assert_eq!(s.ball_log_prob, Some(0.0));
    }

    #[test]
    fn degenerate_band_is_inside() {
        let sample = MatchSample { n: 8, value: Some(1), capped: false, ball_log_prob: Some(0.0), x_seed: 0, y_seed: 0 };
        let r = strong_approx_audit(&[sample], 1.0, 1).unwrap();
        assert_eq!(r.rows[0].fraction, 1.0);
        let missing = MatchSample { ball_log_prob: None, ..sample };
        assert!(strong_approx_audit(&[missing], 1.0, 1).is_err());
    }
}
