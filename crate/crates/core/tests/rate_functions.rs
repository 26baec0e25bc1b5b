use gaep::model::{distortion_stats, sample_path, DistortionMeasure, FiniteDistribution, MarkovChain, SourceModel};
use gaep::ratefn::{
    blahut_arimoto, gaussian_rate_closed_form, lag_covariance_series, logmgf, per_letter_terms, rate_r1, waiting_variance,
    weighted_rate, DualProblem, FiniteProblem, GaussianProblem, Regime,
};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const LOG2_E: f64 = std::f64::consts::LOG2_E;

fn dist(raw: &[f64]) -> FiniteDistribution {
    let total: f64 = raw.iter().sum();
    FiniteDistribution::from_probs(raw.iter().map(|v| v / total).collect()).unwrap()
}

fn arb_dist(k: usize) -> impl Strategy<Value = FiniteDistribution> {
    prop::collection::vec(0.05f64..1.0, k).prop_map(|v| dist(&v))
}

fn arb_matrix(rows: usize, cols: usize) -> impl Strategy<Value = DistortionMeasure> {
    prop::collection::vec(prop::collection::vec(0.0f64..3.0, cols), rows)
        .prop_map(|m| DistortionMeasure::new(m, None).unwrap())
}

fn golden<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..120 {
        let a = hi - r * (hi - lo);
        let b = lo + r * (hi - lo);
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Minimizes a jointly convex objective over binary channels W(1|0) = a,
/// W(1|1) = b with Hamming distortion P0·a + P1·(1 − b) ≤ D.
fn min_over_binary_channels<F: Fn(f64, f64) -> f64>(p0: f64, d: f64, objective: F) -> f64 {
    let p1 = 1.0 - p0;
    let a_hi = (d / p0).min(1.0);
    golden(
        |a| {
            let b_lo = (1.0 - (d - p0 * a) / p1).clamp(0.0, 1.0);
            golden(|b| objective(a, b), b_lo, 1.0).1
        },
        0.0,
        a_hi,
    )
    .1
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * (x / y).ln()
    }
}

fn channel_divergence(p0: f64, q1: f64, a: f64, b: f64) -> f64 {
    let p1 = 1.0 - p0;
    p0 * (xlogy(1.0 - a, 1.0 - q1) + xlogy(a, q1)) + p1 * (xlogy(1.0 - b, 1.0 - q1) + xlogy(b, q1))
}

fn mutual_information(p0: f64, a: f64, b: f64) -> f64 {
    let out1 = p0 * a + (1.0 - p0) * b;
    channel_divergence(p0, out1, a, b)
}

#[test]
fn reference_rates() {
    let u = FiniteDistribution::uniform(2).unwrap();
    let h = DistortionMeasure::hamming(2);
    let pt = rate_r1(&FiniteProblem::new(&u, &u, &h).unwrap(), 0.25).unwrap();
    assert!((pt.r1_bits - 0.188722).abs() < 1e-6);
    assert!((pt.lambda_star + 3f64.ln()).abs() < 1e-9);

    let p = FiniteDistribution::bernoulli(0.3).unwrap();
    let sol = blahut_arimoto(&p, &h, 0.1, 1e-10).unwrap();
    assert!((sol.rate_bits - 0.412295).abs() < 1e-6);
    assert!((sol.q_star.prob(1) - 0.25).abs() < 1e-6);

    let above = blahut_arimoto(&p, &h, 0.35, 1e-10).unwrap();
    assert_eq!(above.rate_bits, 0.0);
    assert!((above.q_star.prob(0) - 1.0).abs() < 1e-9);
}

#[test]
fn distortion_level_examples() {
    let h = DistortionMeasure::hamming(2);
    let u = FiniteDistribution::uniform(2).unwrap();
    let s = distortion_stats(&u, &u, &h).unwrap();
    assert_eq!((s.d_min, s.d_av, s.d_max), (0.0, 0.5, 1.0));
    let s = distortion_stats(&FiniteDistribution::bernoulli(0.2).unwrap(), &FiniteDistribution::bernoulli(0.5).unwrap(), &h).unwrap();
    assert!((s.d_av - 0.5).abs() < 1e-15);
    let s = distortion_stats(&FiniteDistribution::bernoulli(0.3).unwrap(), &FiniteDistribution::bernoulli(0.2).unwrap(), &h).unwrap();
    assert!((s.d_av - 0.38).abs() < 1e-15);
    let flat = DistortionMeasure::new(vec![vec![1.0; 2]; 2], None).unwrap();
    assert!(distortion_stats(&u, &u, &flat).unwrap().is_degenerate());
}

#[test]
fn gaussian_closed_form_grid() {
    let mut worst: f64 = 0.0;
    for i in 1..=10 {
        let sigma2 = 0.25 * i as f64;
        for j in 1..=10 {
            let tau2 = 0.3 * j as f64;
            let problem = GaussianProblem::new(sigma2, tau2).unwrap();
            for k in 1..=10 {
                let d = (sigma2 + tau2) * k as f64 / 11.0;
                let numeric = rate_r1(&problem, d).unwrap().r1_nats;
                worst = worst.max((numeric - gaussian_rate_closed_form(sigma2, tau2, d)).abs());
            }
        }
    }
    assert!(worst <= 1e-9, "max deviation {worst}");
    let half_bit = rate_r1(&GaussianProblem::new(2.0, 1.0).unwrap(), 1.0).unwrap().r1_bits;
    assert!((half_bit - 0.5).abs() < 1e-9);
}

#[test]
fn gaussian_matched_variance_gives_shannon_rate() {
    for (sigma2, d) in [(1.0, 0.3), (2.0, 0.5), (5.0, 4.0), (0.7, 0.01)] {
        let closed = gaussian_rate_closed_form(sigma2, sigma2 - d, d);
        assert!((closed - 0.5 * (sigma2 / d).ln()).abs() < 1e-12);
        let numeric = rate_r1(&GaussianProblem::new(sigma2, sigma2 - d).unwrap(), d).unwrap().r1_nats;
        assert!((numeric - closed).abs() < 1e-9);
    }
}

#[test]
fn lossless_limit_of_per_letter_terms() {
    let p = FiniteDistribution::bernoulli(0.3).unwrap();
    let h = DistortionMeasure::hamming(2);
    let terms = per_letter_terms(&FiniteProblem::new(&p, &p, &h).unwrap(), 1e-8).unwrap();
    assert!((terms.h[0] + 0.36672).abs() < 1e-4, "{:?}", terms.h);
    assert!((terms.h[1] - 0.85568).abs() < 1e-4, "{:?}", terms.h);
}

#[test]
fn waiting_variance_of_sticky_chain() {
    let chain = MarkovChain::two_state(0.9).unwrap();
    let series = lag_covariance_series(&chain, &[1.0, -1.0], 400).unwrap();
    for (k, c) in series.lag_covariances.iter().take(30).enumerate() {
        assert!((c - 0.8f64.powi(k as i32)).abs() < 1e-12, "lag {k}: {c}");
    }
    assert!((series.sigma2 - 9.0).abs() < 1e-9);
    let short = lag_covariance_series(&chain, &[1.0, -1.0], 10).unwrap();
    assert!((short.sigma2 - 9.0).abs() <= short.tail_bound);
}

#[test]
fn waiting_variance_iid_and_degenerate() {
    let h = DistortionMeasure::hamming(2);
    let q = FiniteDistribution::bernoulli(0.3).unwrap();
    let p = FiniteDistribution::uniform(2).unwrap();
    let wv = waiting_variance(&SourceModel::iid(p.clone()), &q, &h, 0.25, 50).unwrap();
    let var: f64 = wv.g.iter().map(|g| 0.5 * g * g).sum();
    assert!((wv.sigma2 - var).abs() < 1e-15 && var > 0.01, "{var}");
    let flat = waiting_variance(&SourceModel::iid(p.clone()), &p, &h, 0.25, 50).unwrap();
    assert!(flat.sigma2.abs() < 1e-24);
    let markov = waiting_variance(&SourceModel::markov(MarkovChain::two_state(0.9).unwrap()), &q, &h, 0.25, 400).unwrap();
    let g0 = markov.g[0];
    assert!((markov.sigma2 - 9.0 * g0 * g0).abs() < 1e-9);
}

#[test]
fn identity_chain_is_rejected_and_absorbing_chain_is_constant() {
    assert!(MarkovChain::two_state(1.0).is_err());
    let sym = vec!["a".to_string(), "b".to_string()];
    let absorbing = MarkovChain::new(sym, 1, vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
    let path = sample_path(&SourceModel::markov(absorbing), 500, 3).unwrap().into_symbols().unwrap();
    assert!(path.iter().all(|s| *s == 0));
}

#[test]
fn streams_from_distinct_seeds_are_independent() {
    let src = SourceModel::iid(FiniteDistribution::uniform(2).unwrap());
    let n = 100_000;
    let chi = ChiSquared::new(1.0).unwrap();
    for (s1, s2) in [(1u64, 2u64), (0, 1 << 40), (7, 8)] {
        let a = sample_path(&src, n, s1).unwrap().into_symbols().unwrap();
        let b = sample_path(&src, n, s2).unwrap().into_symbols().unwrap();
        let mut table = [[0f64; 2]; 2];
        for (x, y) in a.iter().zip(&b) {
            table[*x][*y] += 1.0;
        }
        let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
        let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
        let mut stat = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let e = rows[i] * cols[j] / n as f64;
                stat += (table[i][j] - e).powi(2) / e;
            }
        }
        let p = 1.0 - chi.cdf(stat);
        assert!(p > 0.001, "seeds {s1},{s2}: p = {p}");
    }
}

#[test]
fn sample_means_converge() {
    let src = SourceModel::iid(FiniteDistribution::bernoulli(0.3).unwrap());
    let x = sample_path(&src, 1_000_000, 11).unwrap().into_symbols().unwrap();
    let mean = x.iter().sum::<usize>() as f64 / x.len() as f64;
    assert!((mean - 0.3).abs() < 4.0 * (0.21f64 / 1e6).sqrt());
    let again = sample_path(&src, 1000, 11).unwrap().into_symbols().unwrap();
    assert_eq!(&x[..1000], &again[..]);
}

#[test]
fn binary_rate_matches_variational_form() {
    for (p0, q1, d) in [(0.5, 0.5, 0.25), (0.7, 0.3, 0.1), (0.3, 0.6, 0.2), (0.9, 0.5, 0.05)] {
        let p = dist(&[p0, 1.0 - p0]);
        let q = dist(&[1.0 - q1, q1]);
        let r1 = rate_r1(&FiniteProblem::new(&p, &q, &DistortionMeasure::hamming(2)).unwrap(), d).unwrap().r1_nats;
        let brute = min_over_binary_channels(p0, d, |a, b| channel_divergence(p0, q1, a, b));
        assert!((r1 - brute).abs() < 1e-8, "P0={p0} Q1={q1} D={d}: {r1} vs {brute}");
    }
}

#[test]
fn weighted_rate_matches_brute_force() {
    let h = DistortionMeasure::hamming(2);
    for (p0, m, d) in [(0.5, [1.0, 1.0], 0.2), (0.7, [0.5, 2.0], 0.1), (0.4, [3.0, 0.2], 0.25), (0.6, [1.0, 0.1], 0.3)] {
        let p = dist(&[p0, 1.0 - p0]);
        let r = weighted_rate(&p, &m, &h, d, 1e-10).unwrap();
        let brute = min_over_binary_channels(p0, d, |a, b| {
            let out1 = p0 * a + (1.0 - p0) * b;
            mutual_information(p0, a, b) + (1.0 - out1) * m[0].ln() + out1 * m[1].ln()
        });
        assert!((r - brute).abs() < 1e-7, "P0={p0} M={m:?} D={d}: {r} vs {brute}");
        let scaled = weighted_rate(&p, &[3.0 * m[0], 3.0 * m[1]], &h, d, 1e-10).unwrap();
        assert!((scaled - r - 3f64.ln()).abs() < 1e-8);
    }
    let p = FiniteDistribution::bernoulli(0.3).unwrap();
    let unit = weighted_rate(&p, &[1.0, 1.0], &h, 0.1, 1e-10).unwrap();
    assert!((unit * LOG2_E - 0.412295).abs() < 1e-6);
}

#[test]
fn permutation_measures_have_zero_coding_variance() {
    let u = FiniteDistribution::uniform(3).unwrap();
    let perm = DistortionMeasure::new(vec![vec![0.0, 1.0, 2.0], vec![2.0, 0.0, 1.0], vec![1.0, 2.0, 0.0]], None).unwrap();
    for d in [0.2, 0.6, 0.9] {
        let t = per_letter_terms(&FiniteProblem::new(&u, &u, &perm).unwrap(), d).unwrap();
        assert!(t.sigma2_coding < 1e-12);
    }
    let skew = DistortionMeasure::new(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![1.0, 2.0, 0.0]], None).unwrap();
    let t = per_letter_terms(&FiniteProblem::new(&u, &u, &skew).unwrap(), 0.4).unwrap();
    assert!(t.sigma2_coding > 1e-6);
}

#[test]
fn zero_rate_regime() {
    let p = FiniteDistribution::bernoulli(0.3).unwrap();
    let q = FiniteDistribution::bernoulli(0.4).unwrap();
    let h = DistortionMeasure::hamming(2);
    let problem = FiniteProblem::new(&p, &q, &h).unwrap();
    let d_av = problem.stats().d_av;
    for d in [d_av, d_av + 0.1, 5.0] {
        let pt = rate_r1(&problem, d).unwrap();
        assert_eq!((pt.r1_nats, pt.regime), (0.0, Regime::ZeroRate));
    }
    assert!(rate_r1(&problem, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn distortion_levels_are_ordered(p in arb_dist(3), q in arb_dist(4), rho in arb_matrix(3, 4)) {
        let s = distortion_stats(&p, &q, &rho).unwrap();
        prop_assert!(s.d_min <= s.d_av + 1e-12 && s.d_av <= s.d_max + 1e-12);
    }

    #[test]
    fn larger_support_never_raises_d_min(p in arb_dist(3), q in arb_dist(4), rho in arb_matrix(3, 4), drop in 0usize..4) {
        let mut thin = q.probs().to_vec();
        thin[drop] = 0.0;
        let thin = dist(&thin);
        let full = distortion_stats(&p, &q, &rho).unwrap().d_min;
        let restricted = distortion_stats(&p, &thin, &rho).unwrap().d_min;
        prop_assert!(full <= restricted + 1e-12);
    }

    #[test]
    fn log_mgf_is_convex_and_vanishes_at_zero(q in arb_dist(4), rho in arb_matrix(2, 4), x in 0usize..2, l in -20.0f64..0.0) {
        let at0 = logmgf(&q, &rho, x, 0.0).unwrap();
        prop_assert!(at0.value.abs() < 1e-12);
        let v = logmgf(&q, &rho, x, l).unwrap();
        prop_assert!(v.second >= 0.0);
        let e = 1e-4;
        let lo = logmgf(&q, &rho, x, l - e).unwrap().value;
        let hi = logmgf(&q, &rho, x, (l + e).min(0.0)).unwrap().value;
        let mid = logmgf(&q, &rho, x, (l + e).min(0.0) - e).unwrap().value;
        prop_assert!(lo + hi - 2.0 * mid >= -1e-9);
    }

    #[test]
    fn rate_is_nonincreasing_and_convex(p in arb_dist(3), q in arb_dist(3), rho in arb_matrix(3, 3)) {
        let problem = FiniteProblem::new(&p, &q, &rho).unwrap();
        let s = *problem.stats();
        prop_assume!(s.d_av - s.d_min > 1e-3);
        let ds: Vec<f64> = (1..=20).map(|i| s.d_min + (s.d_av - s.d_min) * i as f64 / 20.0).collect();
        let r: Vec<f64> = ds.iter().map(|d| rate_r1(&problem, *d).unwrap().r1_nats).collect();
        for w in r.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10);
        }
        for w in r.windows(3) {
            prop_assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-8);
        }
    }

    #[test]
    fn per_letter_terms_are_centered(p in arb_dist(3), q in arb_dist(3), rho in arb_matrix(3, 3), t in 0.05f64..0.95) {
        let problem = FiniteProblem::new(&p, &q, &rho).unwrap();
        let s = *problem.stats();
        prop_assume!(s.d_av - s.d_min > 1e-3);
        let terms = per_letter_terms(&problem, s.d_min + t * (s.d_av - s.d_min)).unwrap();
        let mean: f64 = p.probs().iter().zip(&terms.g).map(|(a, b)| a * b).sum();
        prop_assert!(mean.abs() < 1e-9);
        prop_assert!((problem.big_lambda(0.0).value).abs() < 1e-12);
    }

    #[test]
    fn mismatch_penalty_bound(p in arb_dist(2), q in arb_dist(2), t in 0.05f64..0.9) {
        let h = DistortionMeasure::hamming(2);
        let d = t * p.probs().iter().cloned().fold(1.0, f64::min);
        let sol = blahut_arimoto(&p, &h, d, 1e-10).unwrap();
        let r = sol.rate_bits / LOG2_E;
        let problem = FiniteProblem::new(&p, &q, &h).unwrap();
        prop_assume!(d > problem.stats().d_min);
        let r1 = rate_r1(&problem, d).unwrap().r1_nats;
        prop_assert!(r1 <= r + sol.q_star.relative_entropy(&q) + 1e-6);
        let optimal = rate_r1(&FiniteProblem::new(&p, &sol.q_star, &h).unwrap(), d).unwrap().r1_nats;
        prop_assert!((optimal - r).abs() < 1e-6, "{optimal} vs {r}");
    }
}
