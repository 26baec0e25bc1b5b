//! Distortion-ball probabilities Qⁿ(B(x, D)) and the second-order split of
//! −log Qⁿ(B) into nR₁(P̂ₙ, Q, D) + ½ log n + residual.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{empirical_measure, substream, BlockBudget, DistortionMeasure, FiniteDistribution};
use crate::ratefn::{per_letter_terms, rate_r1, FiniteProblem};

/// Largest DP state count (⌊nD/Δ⌋ + 1) we accept.
pub const MAX_DP_STATES: u64 = 50_000_000;
/// Largest |Â|ⁿ the enumerator will walk.
pub const MAX_BRUTEFORCE: u64 = 10_000_000;

#[derive(Debug, Clone)]
pub struct BallQuery<'a> {
    pub x: &'a [usize],
    pub q: &'a FiniteDistribution,
    pub rho: &'a DistortionMeasure,
    pub d: f64,
}

impl<'a> BallQuery<'a> {
    pub fn new(x: &'a [usize], q: &'a FiniteDistribution, rho: &'a DistortionMeasure, d: f64) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Empty("ball center".into()));
        }
        if !d.is_finite() || d < 0.0 {
            return Err(Error::InvalidDistortion(format!("radius {d} must be finite and >= 0")));
        }
        if q.len() != rho.cols() {
            return Err(Error::DimensionMismatch(format!("|Q| = {} but rho has {} columns", q.len(), rho.cols())));
        }
        if let Some(s) = x.iter().find(|s| **s >= rho.rows()) {
            return Err(Error::DimensionMismatch(format!("symbol {s} outside source alphabet")));
        }
        Ok(Self { x, q, rho, d })
    }
}

/// Ball probability in linear and log domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallProb {
    pub prob: f64,
    /// Natural log; −∞ for an empty ball.
    pub log_prob: f64,
}

/// Exact Qⁿ(B(x, D)) by convolution over integer total-cost states.
pub fn ball_prob_exact_dp(query: &BallQuery<'_>) -> Result<BallProb> {
    let costs = query.rho.integer_costs().ok_or(Error::NoValueGrid)?;
    let n = query.x.len();
    let budget = BlockBudget::new(query.rho, n, query.d);
    let limit = budget.limit();
    if limit < 0.0 {
        return Ok(BallProb { prob: 0.0, log_prob: f64::NEG_INFINITY });
    }
    // Largest total cost any codeword can reach; beyond it the ball is everything.
    let worst: u64 = query
        .x
        .iter()
        .map(|&x| query.q.support().map(|y| costs[x][y]).max().unwrap_or(0))
        .sum();
    if limit >= worst as f64 {
        return Ok(BallProb { prob: 1.0, log_prob: 0.0 });
    }
    let states = limit as u64 + 1;
    if states > MAX_DP_STATES {
        return Err(Error::TooLarge(format!("{states} DP states")));
    }
    let t = states as usize;

    // Per source letter: the reproduction cost law as (cost, mass) pairs.
    let laws: Vec<Vec<(usize, f64)>> = (0..query.rho.rows())
        .map(|x| {
            let mut law: Vec<(usize, f64)> = Vec::new();
            for y in query.q.support() {
                let c = costs[x][y] as usize;
                match law.iter_mut().find(|(cc, _)| *cc == c) {
                    Some(e) => e.1 += query.q.prob(y),
                    None => law.push((c, query.q.prob(y))),
                }
            }
            law
        })
        .collect();

    let mut f = vec![0.0f64; t];
    let mut g = vec![0.0f64; t];
    f[0] = 1.0;
    let mut log_scale = 0.0;
    for &x in query.x {
        g.iter_mut().for_each(|v| *v = 0.0);
        for &(c, mass) in &laws[x] {
            if c >= t {
                continue;
            }
            for s in 0..t - c {
                g[s + c] += mass * f[s];
            }
        }
        std::mem::swap(&mut f, &mut g);
        let peak = f.iter().fold(0.0f64, |m, v| m.max(*v));
        if peak == 0.0 {
            return Ok(BallProb { prob: 0.0, log_prob: f64::NEG_INFINITY });
        }
        if !(1e-150..=1e150).contains(&peak) {
            f.iter_mut().for_each(|v| *v /= peak);
            log_scale += peak.ln();
        }
    }
    let mass: f64 = f.iter().sum();
    let log_prob = log_scale + mass.ln();
    Ok(BallProb { prob: log_prob.exp().min(1.0), log_prob: log_prob.min(0.0) })
}

/// Enumerates every reproduction string; the oracle for the DP.
pub fn ball_prob_bruteforce(query: &BallQuery<'_>) -> Result<f64> {
    let n = query.x.len();
    let k = query.q.len();
    let total = (k as u64)
        .checked_pow(n as u32)
        .filter(|t| *t <= MAX_BRUTEFORCE)
        .ok_or_else(|| Error::TooLarge(format!("|Â|^n = {k}^{n}")))?;
    let threshold = n as f64 * query.d;
    let slack = 1e-9 * threshold.max(1.0);
    let mut digits = vec![0usize; n];
    let mut sum = 0.0;
    for _ in 0..total {
        let mut cost = 0.0;
        let mut prob = 1.0;
        for (i, &y) in digits.iter().enumerate() {
            cost += query.rho.cost(query.x[i], y);
            prob *= query.q.prob(y);
        }
        if cost <= threshold + slack {
            sum += prob;
        }
        for d in digits.iter_mut() {
            *d += 1;
            if *d < k {
                break;
            }
            *d = 0;
        }
    }
    Ok(sum)
}

/// Monte Carlo estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub hits: u64,
    pub replicas: u64,
}

pub fn ball_prob_mc(query: &BallQuery<'_>, replicas: u64, seed: u64) -> Result<McEstimate> {
    if replicas < 100 {
        return Err(Error::InvalidModel(format!("need at least 100 replicas, got {replicas}")));
    }
    let budget = BlockBudget::new(query.rho, query.x.len(), query.d);
    let mut rng = substream(seed, 0);
    let mut hits = 0u64;
    for _ in 0..replicas {
        let mut total = 0.0;
        let mut inside = true;
        for &x in query.x {
            total += budget.cost(x, query.q.sample(&mut rng));
            if !budget.within(total) {
                inside = false;
                break;
            }
        }
        hits += inside as u64;
    }
    let p = hits as f64 / replicas as f64;
    Ok(McEstimate { estimate: p, std_error: (p * (1.0 - p) / replicas as f64).sqrt(), hits, replicas })
}

/// Draws one reproduction string from Qⁿ; used by tests and diagnostics.
pub fn sample_reproduction<R: Rng + ?Sized>(q: &FiniteDistribution, n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| q.sample(rng)).collect()
}

/// −log Qⁿ(B) = nR₁(P̂ₙ,Q,D) + ½ log n + residual.
#[derive(Debug, Clone, PartialEq)]
pub struct AepDecomposition {
    pub n: usize,
    /// +∞ when the ball is empty.
    pub neg_log_ball: f64,
    pub n_r1_empirical: f64,
    pub half_log_n: f64,
    pub residual: f64,
    pub model_split: Option<ModelSplit>,
}

/// The alternative split nR₁(P,Q,D) + Σ g(Xᵢ) + ½ log n + residual₂.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSplit {
    pub n_r1_model: f64,
    pub sum_g: f64,
    pub residual: f64,
}

pub fn aep_decompose(
    x: &[usize],
    q: &FiniteDistribution,
    rho: &DistortionMeasure,
    d: f64,
    model: Option<&FiniteDistribution>,
) -> Result<AepDecomposition> {
    let query = BallQuery::new(x, q, rho, d)?;
    let ball = ball_prob_exact_dp(&query)?;
    let n = x.len();
    let half_log_n = 0.5 * (n as f64).ln();
    if ball.log_prob == f64::NEG_INFINITY {
        return Ok(AepDecomposition {
            n,
            neg_log_ball: f64::INFINITY,
            n_r1_empirical: f64::INFINITY,
            half_log_n,
            residual: f64::NAN,
            model_split: None,
        });
    }
    let labels: Vec<String> = (0..rho.rows()).map(|i| i.to_string()).collect();
    let p_hat = empirical_measure(x, &labels)?;
    let problem = FiniteProblem::new(&p_hat, q, rho)?;
    let n_r1_empirical = n as f64 * rate_r1(&problem, d)?.r1_nats;
    let neg_log_ball = -ball.log_prob;
    let residual = neg_log_ball - n_r1_empirical - half_log_n;
    let model_split = match model {
        Some(p) => {
            let problem = FiniteProblem::new(p, q, rho)?;
            let terms = per_letter_terms(&problem, d)?;
            let n_r1_model = n as f64 * terms.rate.r1_nats;
            let sum_g: f64 = x.iter().map(|s| terms.g[*s]).sum();
            Some(ModelSplit { n_r1_model, sum_g, residual: neg_log_ball - n_r1_model - sum_g - half_log_n })
        }
        None => None,
    };
    Ok(AepDecomposition { n, neg_log_ball, n_r1_empirical, half_log_n, residual, model_split })
}

/// (1/n) log[Pⁿ(B(x,D)) / Qⁿ(B(x,D))] for product measures, both balls exact.
pub fn densities_vs_balls(x: &[usize], p: &FiniteDistribution, q: &FiniteDistribution, rho: &DistortionMeasure, d: f64) -> Result<f64> {
    let bp = ball_prob_exact_dp(&BallQuery::new(x, p, rho, d)?)?;
    let bq = ball_prob_exact_dp(&BallQuery::new(x, q, rho, d)?)?;
    Ok((bp.log_prob - bq.log_prob) / x.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_binary() -> (FiniteDistribution, DistortionMeasure) {
        (FiniteDistribution::uniform(2).unwrap(), DistortionMeasure::hamming(2))
    }

    #[test]
    fn three_zeros_third_radius() {
        let (q, rho) = uniform_binary();
        let x = [0, 0, 0];
        let query = BallQuery::new(&x, &q, &rho, 1.0 / 3.0).unwrap();
        assert!((ball_prob_exact_dp(&query).unwrap().prob - 0.5).abs() < 1e-15);
        assert!((ball_prob_bruteforce(&query).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_radius_is_product() {
        let q = FiniteDistribution::from_probs(vec![0.2, 0.5, 0.3]).unwrap();
        let rho = DistortionMeasure::hamming(3);
        let x = [2, 0, 1, 1];
        let dp = ball_prob_exact_dp(&BallQuery::new(&x, &q, &rho, 0.0).unwrap()).unwrap();
        assert!((dp.prob - 0.3 * 0.2 * 0.5 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn full_radius_is_one() {
        let (q, rho) = uniform_binary();
        let x = [0, 1, 1, 0, 1];
        let query = BallQuery::new(&x, &q, &rho, 1.0).unwrap();
        assert_eq!(ball_prob_exact_dp(&query).unwrap().prob, 1.0);
        let mc = ball_prob_mc(&query, 1000, 3).unwrap();
        assert_eq!((mc.estimate, mc.std_error), (1.0, 0.0));
    }

    #[test]
    fn two_letter_bruteforce_by_hand() {
        let q = FiniteDistribution::bernoulli(0.25).unwrap();
        let rho = DistortionMeasure::hamming(2);
        let x = [0, 1];
        let query = BallQuery::new(&x, &q, &rho, 0.5).unwrap();
        assert!((ball_prob_bruteforce(&query).unwrap() - 0.8125).abs() < 1e-15);
        assert!((ball_prob_exact_dp(&query).unwrap().prob - 0.8125).abs() < 1e-15);
    }

    #[test]
    fn single_letter_zero_radius() {
        let q = FiniteDistribution::from_probs(vec![0.1, 0.6, 0.3]).unwrap();
        let rho = DistortionMeasure::hamming(3);
        for x in 0..3 {
            let xs = [x];
            let v = ball_prob_bruteforce(&BallQuery::new(&xs, &q, &rho, 0.0).unwrap()).unwrap();
            assert_eq!(v, q.prob(x));
        }
    }

    #[test]
    fn missing_grid_is_reported() {
        let q = FiniteDistribution::uniform(2).unwrap();
        let rho = DistortionMeasure::new(vec![vec![0.0, 0.7], vec![0.3, 0.0]], None).unwrap();
        let x = [0, 1];
        let r = ball_prob_exact_dp(&BallQuery::new(&x, &q, &rho, 0.5).unwrap());
        assert!(matches!(r, Err(Error::NoValueGrid)));
    }

    #[test]
    fn mc_matches_exact_on_small_instance() {
        let (q, rho) = uniform_binary();
        let x = [0, 0, 0];
        let query = BallQuery::new(&x, &q, &rho, 1.0 / 3.0).unwrap();
        let mc = ball_prob_mc(&query, 100_000, 17).unwrap();
        assert!((mc.estimate - 0.5).abs() < 3.0 * mc.std_error);
        assert!(ball_prob_mc(&query, 50, 1).is_err());
    }

    #[test]
    fn log_domain_survives_long_blocks() {
        let (q, rho) = uniform_binary();
        let x = vec![0usize; 5000];
        let dp = ball_prob_exact_dp(&BallQuery::new(&x, &q, &rho, 0.0).unwrap()).unwrap();
        assert_eq!(dp.prob, 0.0);
        assert!((dp.log_prob - 5000.0 * 0.5f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn decomposition_three_zeros() {
        // P̂ = δ₀, Q uniform: R₁ = KL(1/3 || 1/2) = (1/3)ln(2/3) + (2/3)ln(4/3).
        let (q, rho) = uniform_binary();
        let dec = aep_decompose(&[0, 0, 0], &q, &rho, 1.0 / 3.0, None).unwrap();
        let r1 = (1.0f64 / 3.0) * (2.0f64 / 3.0).ln() + (2.0 / 3.0) * (4.0f64 / 3.0).ln();
        assert!((dec.neg_log_ball - 2.0f64.ln()).abs() < 1e-12);
        assert!((dec.n_r1_empirical - 3.0 * r1).abs() < 1e-9);
        assert!((dec.half_log_n - 0.549_306_144_334_054_8).abs() < 1e-12);
        assert!((dec.residual - (-0.026_058_3)).abs() < 1e-6, "{}", dec.residual);
        assert_eq!(dec.neg_log_ball, dec.n_r1_empirical + dec.half_log_n + dec.residual);
    }

    #[test]
    fn decomposition_zero_rate_at_dav() {
        let q = FiniteDistribution::bernoulli(0.5).unwrap();
        let rho = DistortionMeasure::hamming(2);
        let dec = aep_decompose(&[0, 1, 0, 1], &q, &rho, 0.5, None).unwrap();
        assert_eq!(dec.n_r1_empirical, 0.0);
    }

    #[test]
    fn decomposition_empty_ball_is_infinite() {
        let q = FiniteDistribution::from_probs(vec![1.0, 0.0]).unwrap();
        let rho = DistortionMeasure::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], Some(1.0)).unwrap();
        let query = BallQuery::new(&[1, 1], &q, &rho, 0.0).unwrap();
        let b = ball_prob_exact_dp(&query).unwrap();
        assert_eq!(b.prob, 0.0);
        assert_eq!(b.log_prob, f64::NEG_INFINITY);
        let dec = aep_decompose(&[1, 1], &q, &rho, 0.0, None).unwrap();
        assert_eq!(dec.neg_log_ball, f64::INFINITY);
        assert!(dec.residual.is_nan());
    }
}
