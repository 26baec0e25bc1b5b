//! Rate functions by convex duality.
//!
//! For a source marginal P, reproduction law Q and per-letter distortion rho,
//!
//! ```text
//! Λ_x(λ) = log E_Q[e^{λ ρ(x, Y)}],      Λ(λ) = E_P[Λ_x(λ)],
//! R₁(P, Q, D) = sup_{λ ≤ 0} [λD − Λ(λ)] = λ*·D − Λ(λ*),   Λ'(λ*) = D.
//! ```
//!
//! All rates are computed in nats; bits appear only in [`RatePoint::r1_bits`]
//! and the coding-side quantities (h, σ²) that are defined in bits.

use std::f64::consts::LOG2_E;

use crate::error::{Error, Result};
use crate::model::{distortion_stats, DistortionMeasure, DistortionStats, FiniteDistribution, MarkovChain, SourceKind, SourceModel};

/// Λ_x(λ) with its first two derivatives in λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMgf {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

/// Log-moment generating function of rho(x, Y), Y ~ Q.
pub fn logmgf(q: &FiniteDistribution, rho: &DistortionMeasure, x: usize, lambda: f64) -> Result<LogMgf> {
    if lambda > 0.0 {
        return Err(Error::PositiveLambda(lambda));
    }
    if x >= rho.rows() || q.len() != rho.cols() {
        return Err(Error::DimensionMismatch(format!("symbol {x} / Q of size {} vs rho {}x{}", q.len(), rho.rows(), rho.cols())));
    }
    let terms: Vec<(f64, f64)> = q.support().map(|y| (q.prob(y).ln(), rho.cost(x, y))).collect();
    if terms.is_empty() {
        return Err(Error::Empty("Q support".into()));
    }
    Ok(tilted(&terms, lambda))
}

/// Tilted log-partition over `(log weight, cost)` pairs.
fn tilted(terms: &[(f64, f64)], lambda: f64) -> LogMgf {
    let shift = terms.iter().map(|(lw, c)| lw + lambda * c).fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (lw, c) in terms {
        let w = (lw + lambda * c - shift).exp();
        z += w;
        m1 += w * c;
        m2 += w * c * c;
    }
    let mean = m1 / z;
    LogMgf { value: shift + z.ln(), first: mean, second: (m2 / z - mean * mean).max(0.0) }
}

/// Closed form for Y ~ N(0, τ²) under squared error.
pub fn gaussian_logmgf(tau2: f64, x: f64, lambda: f64) -> Result<LogMgf> {
    if lambda > 0.0 {
        return Err(Error::PositiveLambda(lambda));
    }
    Ok(gaussian_terms(tau2, x * x, lambda))
}

/// Same closed form with x² replaced by a second moment (averaging over P).
fn gaussian_terms(tau2: f64, x2: f64, lambda: f64) -> LogMgf {
    let a = 1.0 - 2.0 * lambda * tau2;
    LogMgf {
        value: -0.5 * a.ln() + lambda * x2 / a,
        first: tau2 / a + x2 / (a * a),
        second: 2.0 * tau2 * tau2 / (a * a) + 4.0 * tau2 * x2 / (a * a * a),
    }
}

/// A (P, Q, rho) triple seen through its averaged log-MGF Λ.
pub trait DualProblem {
    fn d_min(&self) -> f64;
    fn d_av(&self) -> f64;
    /// Λ(λ) = E_P[Λ_X(λ)] and derivatives, for λ ≤ 0.
    fn big_lambda(&self, lambda: f64) -> LogMgf;
}

/// Finite-alphabet problem.
#[derive(Debug, Clone)]
pub struct FiniteProblem<'a> {
    pub p: &'a FiniteDistribution,
    pub q: &'a FiniteDistribution,
    pub rho: &'a DistortionMeasure,
    stats: DistortionStats,
    /// Per source letter: (P(x), [(log Q(y), rho(x,y)) for y in supp Q]).
    rows: Vec<(usize, f64, Vec<(f64, f64)>)>,
}

impl<'a> FiniteProblem<'a> {
    pub fn new(p: &'a FiniteDistribution, q: &'a FiniteDistribution, rho: &'a DistortionMeasure) -> Result<Self> {
        let stats = distortion_stats(p, q, rho)?;
        let rows = p
            .support()
            .map(|x| {
                let terms = q.support().map(|y| (q.prob(y).ln(), rho.cost(x, y))).collect();
                (x, p.prob(x), terms)
            })
            .collect();
        Ok(Self { p, q, rho, stats, rows })
    }

    pub fn stats(&self) -> &DistortionStats {
        &self.stats
    }

    /// Λ_x(λ) for any source letter, including letters outside supp P.
    pub fn letter(&self, x: usize, lambda: f64) -> Result<LogMgf> {
        logmgf(self.q, self.rho, x, lambda)
    }
}

impl DualProblem for FiniteProblem<'_> {
    fn d_min(&self) -> f64 {
        self.stats.d_min
    }

    fn d_av(&self) -> f64 {
        self.stats.d_av
    }

    fn big_lambda(&self, lambda: f64) -> LogMgf {
        let mut out = LogMgf { value: 0.0, first: 0.0, second: 0.0 };
        for (_, px, terms) in &self.rows {
            let t = tilted(terms, lambda);
            out.value += px * t.value;
            out.first += px * t.first;
            out.second += px * t.second;
        }
        out
    }
}

/// Real-valued source with E[X²] = `second_moment` against a N(0, τ²) codebook.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianProblem {
    pub second_moment: f64,
    pub tau2: f64,
}

impl GaussianProblem {
    pub fn new(sigma2: f64, tau2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && tau2 > 0.0 && sigma2.is_finite() && tau2.is_finite()) {
            return Err(Error::InvalidModel(format!("need σ² > 0 and τ² > 0, got {sigma2}, {tau2}")));
        }
        Ok(Self { second_moment: sigma2, tau2 })
    }
}

impl DualProblem for GaussianProblem {
    fn d_min(&self) -> f64 {
        0.0
    }

    fn d_av(&self) -> f64 {
        self.second_moment + self.tau2
    }

    fn big_lambda(&self, lambda: f64) -> LogMgf {
        gaussian_terms(self.tau2, self.second_moment, lambda)
    }
}

/// Which side of the feasible interval a dual solution came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// D in (d_min, d_av): λ* < 0.
    Interior,
    /// D ≥ d_av: λ* = 0 and the rate vanishes.
    ZeroRate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualRoot {
    pub lambda: f64,
    pub regime: Regime,
}

const ROOT_LAMBDA_TOL: f64 = 1e-12;
const ROOT_VALUE_TOL: f64 = 1e-10;
const MAX_BRACKET_DOUBLINGS: usize = 200;

/// Solves Λ'(λ*) = D on λ < 0 by safeguarded Newton inside an expanding bracket.
pub fn lambda_star<P: DualProblem + ?Sized>(problem: &P, d: f64) -> Result<DualRoot> {
    let (d_min, d_av) = (problem.d_min(), problem.d_av());
    if d_av - d_min <= 1e-14 * d_av.abs().max(1.0) {
        return Err(Error::Degenerate(d_av));
    }
    if !d.is_finite() || d <= d_min {
        return Err(Error::InfeasibleLow { d, d_min });
    }
    if d >= d_av {
        return Ok(DualRoot { lambda: 0.0, regime: Regime::ZeroRate });
    }
    let tol = ROOT_VALUE_TOL * d.abs().max(1.0);
    let f = |l: f64| problem.big_lambda(l);

    let mut lo = -1.0;
    let mut doublings = 0;
    while f(lo).first >= d {
        lo *= 2.0;
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS {
            return Err(Error::InfeasibleLow { d, d_min });
        }
    }
    let mut hi: f64 = 0.0;
    let mut x = 0.5 * lo;
    for _ in 0..500 {
        let v = f(x);
        let g = v.first - d;
        if g.abs() <= tol {
            return Ok(DualRoot { lambda: x, regime: Regime::Interior });
        }
        if g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= ROOT_LAMBDA_TOL * x.abs().max(1.0) {
            return Ok(DualRoot { lambda: x, regime: Regime::Interior });
        }
        let newton = if v.second > 0.0 { x - g / v.second } else { f64::NAN };
        x = if newton.is_finite() && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    Err(Error::Numerical(format!("dual root did not converge for D = {d}")))
}

/// Solved dual point for one distortion level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub distortion: f64,
    pub lambda_star: f64,
    pub big_lambda: f64,
    pub r1_nats: f64,
    pub r1_bits: f64,
    pub regime: Regime,
}

impl RatePoint {
    fn zero(d: f64) -> Self {
        Self { distortion: d, lambda_star: 0.0, big_lambda: 0.0, r1_nats: 0.0, r1_bits: 0.0, regime: Regime::ZeroRate }
    }
}

/// R₁ = λ*·D − Λ(λ*).
pub fn rate_r1<P: DualProblem + ?Sized>(problem: &P, d: f64) -> Result<RatePoint> {
    let root = lambda_star(problem, d)?;
    if root.regime == Regime::ZeroRate {
        return Ok(RatePoint::zero(d));
    }
    let big = problem.big_lambda(root.lambda).value;
    let r1 = (root.lambda * d - big).max(0.0);
    Ok(RatePoint {
        distortion: d,
        lambda_star: root.lambda,
        big_lambda: big,
        r1_nats: r1,
        r1_bits: r1 * LOG2_E,
        regime: Regime::Interior,
    })
}

/// Closed-form R₁ in nats for an N(0,σ²)-marginal source and N(0,τ²) codebook.
pub fn gaussian_rate_closed_form(sigma2: f64, tau2: f64, d: f64) -> f64 {
    if d <= 0.0 {
        return f64::INFINITY;
    }
    if d >= sigma2 + tau2 {
        return 0.0;
    }
    let v = 0.5 * (tau2 + (tau2 * tau2 + 4.0 * d * sigma2).sqrt());
    0.5 * (v / d).ln() - (v - d) * (v - sigma2) / (2.0 * v * tau2)
}

/// Per-letter corrections g (nats), h (bits) and the minimal coding variance.
#[derive(Debug, Clone, PartialEq)]
pub struct PerLetterTerms {
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    /// Var_P[h(X)] in bits².
    pub sigma2_coding: f64,
    pub rate: RatePoint,
}

pub fn per_letter_terms(problem: &FiniteProblem<'_>, d: f64) -> Result<PerLetterTerms> {
    let rate = rate_r1(problem, d)?;
    let lambda = rate.lambda_star;
    let big = problem.big_lambda(lambda).value;
    let g: Vec<f64> = (0..problem.p.len())
        .map(|x| problem.letter(x, lambda).map(|l| big - l.value))
        .collect::<Result<_>>()?;
    let h: Vec<f64> = g.iter().map(|v| v * LOG2_E).collect();
    let mean: f64 = problem.p.probs().iter().zip(&h).map(|(p, v)| p * v).sum();
    let sigma2_coding = problem.p.probs().iter().zip(&h).map(|(p, v)| p * (v - mean).powi(2)).sum();
    Ok(PerLetterTerms { g, h, sigma2_coding, rate })
}

/// Long-run variance of Σ g(X_i) for the waiting-time CLT.
#[derive(Debug, Clone, PartialEq)]
pub struct WaitingVariance {
    /// σ² in nats².
    pub sigma2: f64,
    /// E[g(X_1) g(X_{1+j})] for j = 0..=K.
    pub lag_covariances: Vec<f64>,
    /// Bound on the discarded tail 2·Σ_{j>K} |E[g(X_1) g(X_{1+j})]|.
    pub tail_bound: f64,
    pub g: Vec<f64>,
}

pub fn waiting_variance(
    src: &SourceModel,
    q: &FiniteDistribution,
    rho: &DistortionMeasure,
    d: f64,
    truncation: usize,
) -> Result<WaitingVariance> {
    let p = src
        .marginal()
        .ok_or_else(|| Error::InvalidModel("waiting variance needs a finite-alphabet source".into()))?;
    let problem = FiniteProblem::new(&p, q, rho)?;
    let terms = per_letter_terms(&problem, d)?;
    match &src.kind {
        SourceKind::Iid(_) => {
            let var: f64 = p.probs().iter().zip(&terms.g).map(|(pp, g)| pp * g * g).sum();
            Ok(WaitingVariance { sigma2: var, lag_covariances: vec![var], tail_bound: 0.0, g: terms.g })
        }
        SourceKind::Markov(chain) => {
            let mut out = lag_covariance_series(chain, &terms.g, truncation)?;
            out.g = terms.g;
            Ok(out)
        }
        _ => Err(Error::InvalidModel("waiting variance needs an i.i.d. or Markov source".into())),
    }
}

/// σ² = E[g²] + 2 Σ_{j=1}^{K} E[g(X_1) g(X_{1+j})] for a stationary chain,
/// with a Dobrushin-contraction bound on the truncated tail.
pub fn lag_covariance_series(chain: &MarkovChain, g: &[f64], truncation: usize) -> Result<WaitingVariance> {
    if g.len() != chain.symbols().len() {
        return Err(Error::DimensionMismatch("g must have one entry per symbol".into()));
    }
    let t = chain.context_matrix();
    let pi = chain.stationary();
    let m = pi.len();
    let mean: f64 = (0..m).map(|c| pi[c] * g[chain.last_symbol(c)]).sum();
    let centered: Vec<f64> = (0..m).map(|c| g[chain.last_symbol(c)] - mean).collect();
    let abs_mean: f64 = (0..m).map(|c| pi[c] * centered[c].abs()).sum();

    let mut v = centered.clone();
    let mut lags = Vec::with_capacity(truncation + 1);
    for j in 0..=truncation {
        if j > 0 {
            v = (0..m).map(|c| (0..m).map(|k| t[c][k] * v[k]).sum()).collect();
        }
        lags.push((0..m).map(|c| pi[c] * centered[c] * v[c]).sum::<f64>());
    }
    let sigma2 = lags[0] + 2.0 * lags[1..].iter().sum::<f64>();

    // Contraction of T^s in oscillation, for the smallest s with coefficient < 1.
    let mut power = t.clone();
    let mut step = 1;
    let mut delta = dobrushin(&power);
    while delta >= 1.0 - 1e-15 && step < 64 {
        power = matmul(&power, &t);
        step += 1;
        delta = dobrushin(&power);
    }
    let osc = v.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b)) - v.iter().fold(f64::INFINITY, |a, b| a.min(*b));
    let tail_bound = if delta < 1.0 - 1e-15 {
        2.0 * abs_mean * 0.5 * osc * step as f64 / (1.0 - delta)
    } else {
        f64::INFINITY
    };
    Ok(WaitingVariance { sigma2, lag_covariances: lags, tail_bound, g: g.to_vec() })
}

fn dobrushin(t: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 0..t.len() {
        for b in a + 1..t.len() {
            let d: f64 = t[a].iter().zip(&t[b]).map(|(x, y)| (x - y).abs()).sum();
            worst = worst.max(0.5 * d);
        }
    }
    worst
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = a.len();
    (0..m)
        .map(|i| (0..m).map(|j| (0..m).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

/// Output of the alternating-minimization solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct RDSolution {
    pub rate_bits: f64,
    pub q_star: FiniteDistribution,
    pub iterations: usize,
    /// Upper minus lower bound on the rate, in bits.
    pub gap_bound: f64,
    /// Slope s = λ* of the supporting line at D (0 in the zero-rate regime).
    pub slope: f64,
}

pub const DEFAULT_BA_TOL: f64 = 1e-9;
const INNER_GAP: f64 = 1e-15;
const INNER_MAX_ITERS: usize = 200_000;
const OUTER_D_TOL: f64 = 1e-12;
const REVIVE_FLOOR: f64 = 1e-12;

struct InnerState {
    r: Vec<f64>,
    distortion: f64,
    upper: f64,
    lower_parts: (f64, f64),
    output: Vec<f64>,
    iterations: usize,
}

/// Minimizes I(X;Y) + E[log M(Y)] − s·E[ρ] over channels, at fixed slope s ≤ 0.
fn inner_solve(p: &FiniteDistribution, rho: &DistortionMeasure, log_m: &[f64], s: f64, r0: &[f64]) -> InnerState {
    let rows: Vec<usize> = p.support().collect();
    let k = log_m.len();
    let mut r = r0.to_vec();
    let a: Vec<Vec<f64>> = rows
        .iter()
        .map(|&x| (0..k).map(|y| (s * rho.cost(x, y) - log_m[y]).exp()).collect())
        .collect();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let z: Vec<f64> = a.iter().map(|row| row.iter().zip(&r).map(|(av, rv)| av * rv).sum()).collect();
        let mut c = vec![0.0; k];
        for (i, &x) in rows.iter().enumerate() {
            let w = p.prob(x) / z[i];
            for y in 0..k {
                c[y] += w * a[i][y];
            }
        }
        let max_log_c = c.iter().map(|v| v.ln()).fold(f64::NEG_INFINITY, f64::max);
        let mean_c_log_c: f64 = c.iter().zip(&r).filter(|(_, rv)| **rv > 0.0).map(|(cv, rv)| rv * cv * cv.ln()).sum();
        // Letters whose weight collapsed but whose KKT multiplier still says
        // "increase" are re-seeded; multiplicative updates cannot revive zeros.
        let mut next: Vec<f64> = r
            .iter()
            .zip(&c)
            .map(|(rv, cv)| if *rv < REVIVE_FLOOR && *cv > 1.0 + 1e-12 { REVIVE_FLOOR } else { rv * cv })
            .collect();
        let norm: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= norm);
        let gap = max_log_c - mean_c_log_c;
        r = next;
        if gap <= INNER_GAP || iterations >= INNER_MAX_ITERS {
            // Final channel and bounds from the converged r.
            let z: Vec<f64> = a.iter().map(|row| row.iter().zip(&r).map(|(av, rv)| av * rv).sum()).collect();
            let mut output = vec![0.0; k];
            let mut distortion = 0.0;
            let mut c = vec![0.0; k];
            for (i, &x) in rows.iter().enumerate() {
                let px = p.prob(x);
                for y in 0..k {
                    let w = r[y] * a[i][y] / z[i];
                    output[y] += px * w;
                    distortion += px * w * rho.cost(x, y);
                    c[y] += px * a[i][y] / z[i];
                }
            }
            let mut upper = 0.0;
            for (i, &x) in rows.iter().enumerate() {
                let px = p.prob(x);
                for y in 0..k {
                    let w = r[y] * a[i][y] / z[i];
                    if w > 0.0 && output[y] > 0.0 {
                        upper += px * w * (w / output[y]).ln();
                    }
                }
            }
            upper += output.iter().zip(log_m).map(|(o, lm)| o * lm).sum::<f64>();
            let g_val: f64 = -rows.iter().enumerate().map(|(i, &x)| p.prob(x) * z[i].ln()).sum::<f64>();
            let max_log_c = c.iter().map(|v| v.ln()).fold(f64::NEG_INFINITY, f64::max);
            return InnerState { r, distortion, upper, lower_parts: (g_val, max_log_c), output, iterations };
        }
    }
}

struct AltSolution {
    value: f64,
    gap: f64,
    output: Vec<f64>,
    iterations: usize,
    slope: f64,
}

/// r(D) = inf { I(X;Y) + E log M(Y) : X ~ P, E ρ(X,Y) ≤ D } in nats.
fn alternating(p: &FiniteDistribution, rho: &DistortionMeasure, log_m: &[f64], d: f64) -> Result<AltSolution> {
    if rho.rows() != p.len() || rho.cols() != log_m.len() {
        return Err(Error::DimensionMismatch("rho does not match P and the reproduction alphabet".into()));
    }
    let k = log_m.len();
    let floor: f64 = p
        .support()
        .map(|x| p.prob(x) * (0..k).map(|y| rho.cost(x, y)).fold(f64::INFINITY, f64::min))
        .sum();
    if !(d > floor) || d <= 0.0 {
        return Err(Error::InfeasibleLow { d, d_min: floor });
    }
    // s -> 0 limit: Y independent of X, concentrated on the cheapest letters of M.
    let min_lm = log_m.iter().copied().fold(f64::INFINITY, f64::min);
    let (best_y, d_zero) = (0..k)
        .filter(|y| log_m[*y] <= min_lm + 1e-15)
        .map(|y| (y, p.support().map(|x| p.prob(x) * rho.cost(x, y)).sum::<f64>()))
        .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
    if d >= d_zero {
        let mut output = vec![0.0; k];
        output[best_y] = 1.0;
        return Ok(AltSolution { value: min_lm, gap: 0.0, output, iterations: 0, slope: 0.0 });
    }

    let mut r = vec![1.0 / k as f64; k];
    let mut iterations = 0;
    let eval = |s: f64, r: &mut Vec<f64>, iterations: &mut usize| {
        let st = inner_solve(p, rho, log_m, s, r);
        *iterations += st.iterations;
        *r = st.r.clone();
        st
    };

    let mut s_lo = -1.0;
    let mut lo_state = eval(s_lo, &mut r, &mut iterations);
    let mut s_hi = 0.0;
    let mut guard = 0;
    while lo_state.distortion > d {
        s_hi = s_lo;
        s_lo *= 2.0;
        lo_state = eval(s_lo, &mut r, &mut iterations);
        guard += 1;
        if guard > 60 {
            return Err(Error::InfeasibleLow { d, d_min: floor });
        }
    }
    for _ in 0..200 {
        if d - lo_state.distortion <= OUTER_D_TOL || (s_hi - s_lo) <= 1e-15 * s_lo.abs() {
            break;
        }
        let mid = 0.5 * (s_lo + s_hi);
        let st = eval(mid, &mut r, &mut iterations);
        if st.distortion <= d {
            s_lo = mid;
            lo_state = st;
        } else {
            s_hi = mid;
        }
    }
    let lower = s_lo * d + lo_state.lower_parts.0 - lo_state.lower_parts.1;
    let upper = lo_state.upper;
    Ok(AltSolution {
        value: upper,
        gap: (upper - lower).max(0.0),
        output: lo_state.output,
        iterations,
        slope: s_lo,
    })
}

/// Rate-distortion function R(D) and optimal reproduction law Q*.
pub fn blahut_arimoto(p: &FiniteDistribution, rho: &DistortionMeasure, d: f64, tol: f64) -> Result<RDSolution> {
    let q_symbols: Vec<String> = (0..rho.cols()).map(|i| i.to_string()).collect();
    let sol = alternating(p, rho, &vec![0.0; rho.cols()], d)?;
    if sol.gap * LOG2_E > tol {
        return Err(Error::Numerical(format!("duality gap {} bits exceeds tolerance {tol}", sol.gap * LOG2_E)));
    }
    let total: f64 = sol.output.iter().sum();
    let q_star = FiniteDistribution::new(q_symbols, sol.output.iter().map(|v| v / total).collect())?;
    Ok(RDSolution {
        rate_bits: sol.value.max(0.0) * LOG2_E,
        q_star,
        iterations: sol.iterations,
        gap_bound: sol.gap * LOG2_E,
        slope: sol.slope,
    })
}

/// Weighted-codebook rate r(D; P, M) in nats.
pub fn weighted_rate(p: &FiniteDistribution, mass: &[f64], rho: &DistortionMeasure, d: f64, tol: f64) -> Result<f64> {
    if let Some(m) = mass.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
        return Err(Error::InvalidModel(format!("mass function must be positive, got {m}")));
    }
    let log_m: Vec<f64> = mass.iter().map(|m| m.ln()).collect();
    let sol = alternating(p, rho, &log_m, d)?;
    if sol.gap > tol {
        return Err(Error::Numerical(format!("duality gap {} nats exceeds tolerance {tol}", sol.gap)));
    }
    Ok(sol.value)
}
