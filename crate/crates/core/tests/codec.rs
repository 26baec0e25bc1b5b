use gaep::ballprob::{ball_prob_exact_dp, BallQuery};
use gaep::codec::{
    conditioned_sampler, decode_block, decode_block_file, elias_delta_len, elias_delta_read, elias_delta_write, encode_block,
    encode_block_file, first_match_index, simulate_codelength, simulate_universal_codelength, universal_decode,
    universal_decode_file, universal_encode, universal_encode_file, BitReader, BitWriter, CodebookSpec, Rational, UniversalSpec,
};
use gaep::model::{replica_seed, sample_path, substream, DistortionMeasure, FiniteDistribution, SourceModel};
use gaep::ratefn::{blahut_arimoto, rate_r1, FiniteProblem};
use gaep::stats::median;
use rand::Rng;
use statrs::distribution::{Binomial, DiscreteCDF};

fn hamming_distortion(x: &[usize], y: &[usize]) -> f64 {
    x.iter().zip(y).filter(|(a, b)| a != b).count() as f64 / x.len() as f64
}

#[test]
fn elias_round_trips_every_small_integer() {
    let mut w = BitWriter::new();
    for n in 1..=(1u64 << 20) {
        elias_delta_write(&mut w, n).unwrap();
    }
    let total: u64 = (1..=(1u64 << 20)).map(elias_delta_len).sum();
    assert_eq!(w.len(), total);
    let mut r = BitReader::new(w.as_bytes(), w.len());
    for n in 1..=(1u64 << 20) {
        assert_eq!(elias_delta_read(&mut r).unwrap(), n);
    }
    assert_eq!(r.remaining(), 0);
}

#[test]
fn elias_is_prefix_free() {
    let words: Vec<String> = (1..=4096u64).map(|n| gaep::codec::elias_encode(n).unwrap()).collect();
    let mut sorted = words.clone();
    sorted.sort();
    for pair in sorted.windows(2) {
        assert!(!pair[1].starts_with(&pair[0]), "{} prefixes {}", pair[0], pair[1]);
    }
}

#[test]
fn full_radius_matches_first_codeword() {
    let q = FiniteDistribution::uniform(3).unwrap();
    let spec = CodebookSpec::new(12, q, 4, 16).unwrap();
    let x = vec![2; 12];
    assert_eq!(first_match_index(&x, &spec, &DistortionMeasure::hamming(3), 1.0).unwrap(), Some(1));
}

#[test]
fn decoded_blocks_respect_distortion() {
    let h = DistortionMeasure::hamming(2);
    let src = SourceModel::iid(FiniteDistribution::bernoulli(0.3).unwrap());
    let q = blahut_arimoto(&FiniteDistribution::bernoulli(0.3).unwrap(), &h, 0.2, 1e-10).unwrap().q_star;
    let mut fallbacks = 0;
    for seed in 0..1000u64 {
        let x = sample_path(&src, 20, seed).unwrap().into_symbols().unwrap();
        let spec = CodebookSpec::new(20, q.clone(), replica_seed(77, seed), 256).unwrap();
        let (block, bits) = encode_block(&x, &spec, &h, 0.2).unwrap();
        let y = decode_block(&bits, &spec).unwrap();
        assert!(hamming_distortion(&x, &y) <= 0.2 + 1e-12);
        assert_eq!(block.payload_bits, bits.len());
        fallbacks += block.fallback_used as usize;
    }
    assert!(fallbacks > 0 && fallbacks < 1000, "{fallbacks}");
}

#[test]
fn file_format_round_trips() {
    let h = DistortionMeasure::hamming(2);
    let d = Rational::new(1, 4).unwrap();
    let x = sample_path(&SourceModel::iid(FiniteDistribution::uniform(2).unwrap()), 16, 3).unwrap().into_symbols().unwrap();
    let spec = CodebookSpec::new(16, FiniteDistribution::uniform(2).unwrap(), 9, 1 << 16).unwrap();
    let (_, bytes) = encode_block_file(&x, &spec, &h, d).unwrap();
    let y = decode_block_file(&bytes, &spec, d).unwrap();
    assert!(hamming_distortion(&x, &y) <= 0.25);
    let other = CodebookSpec::new(16, FiniteDistribution::uniform(2).unwrap(), 10, 1 << 16).unwrap();
    assert!(decode_block_file(&bytes, &other, d).is_err());
    let mut corrupt = bytes.clone();
    corrupt[6] ^= 0xff;
    assert!(decode_block_file(&corrupt, &spec, d).is_err());

    let uspec = UniversalSpec::new(8, 2, 5, 1 << 12).unwrap();
    let (_, ubytes) = universal_encode_file(&x[..8], &uspec, &h, d).unwrap();
    let z = universal_decode_file(&ubytes, &uspec, d).unwrap();
    assert!(hamming_distortion(&x[..8], &z) <= 0.25);
}

#[test]
fn first_match_index_is_geometric() {
    let h = DistortionMeasure::hamming(2);
    let u = FiniteDistribution::uniform(2).unwrap();
    let x = vec![0usize; 16];
    let p = ball_prob_exact_dp(&BallQuery::new(&x, &u, &h, 0.25).unwrap()).unwrap().prob;
    let trials = 10_000u64;
    let indices: Vec<u64> = (0..trials)
        .map(|s| first_match_index(&x, &CodebookSpec::new(16, u.clone(), replica_seed(1, s), 1 << 20).unwrap(), &h, 0.25).unwrap().unwrap())
        .collect();
    for k in [1u64, 2, 5, 10] {
        let expected = (1.0 - p).powi(k as i32);
        let observed = indices.iter().filter(|i| **i > k).count() as f64 / trials as f64;
        let se = (expected * (1.0 - expected) / trials as f64).sqrt();
        assert!((observed - expected).abs() <= 3.0 * se, "k={k}: {observed} vs {expected}");
    }
}

#[test]
fn real_search_codelength_band() {
    let h = DistortionMeasure::hamming(2);
    let u = FiniteDistribution::uniform(2).unwrap();
    let src = SourceModel::iid(u.clone());
    let n = 64;
    let mut inside = 0;
    for s in 0..100u64 {
        let x = sample_path(&src, n, s).unwrap().into_symbols().unwrap();
        let spec = CodebookSpec::new(n, u.clone(), replica_seed(3, s), 1 << 30).unwrap();
        let i = first_match_index(&x, &spec, &h, 0.25).unwrap().unwrap();
        let neg_log2_ball = -ball_prob_exact_dp(&BallQuery::new(&x, &u, &h, 0.25).unwrap()).unwrap().log_prob / std::f64::consts::LN_2;
        inside += ((i as f64).log2() <= neg_log2_ball + (n as f64).log2().log2() + 3.0) as usize;
    }
    assert!(inside >= 99, "{inside}/100");
}

#[test]
fn simulated_rate_tracks_rate_distortion() {
    let h = DistortionMeasure::hamming(2);
    let p = FiniteDistribution::bernoulli(0.3).unwrap();
    let sol = blahut_arimoto(&p, &h, 0.1, 1e-10).unwrap();
    let src = SourceModel::iid(p.clone());
    let n = 512;
    let mut rng = substream(8, 0);
    let rates: Vec<f64> = (0..200u64)
        .map(|s| {
            let x = sample_path(&src, n, s).unwrap().into_symbols().unwrap();
            simulate_codelength(&x, &sol.q_star, &h, 0.1, &mut rng).unwrap().payload_bits as f64 / n as f64
        })
        .collect();
    assert!((median(&rates) - 0.412295).abs() <= 0.05, "{}", median(&rates));

    let q = FiniteDistribution::uniform(2).unwrap();
    let r1 = rate_r1(&FiniteProblem::new(&p, &q, &h).unwrap(), 0.1).unwrap().r1_bits;
    let mismatched: Vec<f64> = (0..200u64)
        .map(|s| {
            let x = sample_path(&src, n, s).unwrap().into_symbols().unwrap();
            simulate_codelength(&x, &q, &h, 0.1, &mut rng).unwrap().payload_bits as f64 / n as f64
        })
        .collect();
    assert!((median(&mismatched) - r1).abs() <= 0.08, "{} vs {r1}", median(&mismatched));
}

#[test]
fn universal_rate_approaches_rate_distortion() {
    let h = DistortionMeasure::hamming(2);
    let src = SourceModel::iid(FiniteDistribution::uniform(2).unwrap());
    let mut rng = substream(21, 0);
    let rates: Vec<f64> = (0..60u64)
        .map(|s| {
            let x = sample_path(&src, 256, s).unwrap().into_symbols().unwrap();
            simulate_universal_codelength(&x, 2, &h, 0.25, &mut rng).unwrap().payload_bits as f64 / 256.0
        })
        .collect();
    assert!((median(&rates) - 0.188722).abs() <= 0.08, "{}", median(&rates));
}

/// Exact law of the winning type: independent geometric indices per type,
/// ties to the lowest type index.
fn winning_type_law(x: &[usize], spec: &UniversalSpec, rho: &DistortionMeasure, d: f64) -> Vec<f64> {
    let n = x.len() as f64;
    let p: Vec<f64> = spec
        .types()
        .iter()
        .map(|t| {
            let q = FiniteDistribution::from_probs(t.iter().map(|c| *c as f64 / n).collect()).unwrap();
            ball_prob_exact_dp(&BallQuery::new(x, &q, rho, d).unwrap()).unwrap().prob
        })
        .collect();
    let miss_all: f64 = p.iter().map(|v| 1.0 - v).product();
    let mut before = 1.0;
    p.iter()
        .map(|pk| {
            let w = pk * before / (1.0 - miss_all);
            before *= 1.0 - pk;
            w
        })
        .collect()
}

#[test]
fn universal_search_prefers_the_source_type() {
    let h = DistortionMeasure::hamming(2);
    let p = FiniteDistribution::bernoulli(0.25).unwrap();
    let n = 8;
    let types = UniversalSpec::new(n, 2, 0, 1).unwrap();
    let mut law = vec![0.0; types.types().len()];
    for code in 0..1usize << n {
        let x: Vec<usize> = (0..n).map(|i| (code >> i) & 1).collect();
        let px: f64 = x.iter().map(|s| p.prob(*s)).product();
        for (l, w) in law.iter_mut().zip(winning_type_law(&x, &types, &h, 0.0)) {
            *l += px * w;
        }
    }
    let source_type = types.types().iter().position(|t| t == &vec![6, 2]).unwrap();
    let oracle_mode = (0..law.len()).max_by(|a, b| law[*a].total_cmp(&law[*b])).unwrap();
    assert_eq!(oracle_mode, source_type, "{law:?}");

    let src = SourceModel::iid(p);
    let trials = 2000u64;
    let mut counts = vec![0usize; law.len()];
    for s in 0..trials {
        let spec = UniversalSpec::new(n, 2, replica_seed(5, s), 1 << 16).unwrap();
        let x = sample_path(&src, n, s).unwrap().into_symbols().unwrap();
        let (block, bits) = universal_encode(&x, &spec, &h, 0.0).unwrap();
        assert_eq!(universal_decode(&bits, &spec).unwrap(), x);
        counts[block.type_index.unwrap() as usize] += 1;
    }
    for (k, (c, w)) in counts.iter().zip(&law).enumerate() {
        let se = (w * (1.0 - w) / trials as f64).sqrt();
        assert!((*c as f64 / trials as f64 - w).abs() <= 4.0 * se + 1e-12, "type {k}: {c} vs {w}");
    }
}

#[test]
fn conditioned_sampler_acceptance_matches_binomial() {
    let q = FiniteDistribution::uniform(2).unwrap();
    let batch = conditioned_sampler(&q, 0.1, 100, 20_000, 12).unwrap();
    let bin = Binomial::new(0.5, 100).unwrap();
    let expected = bin.cdf(60) - bin.cdf(39);
    assert!((expected - 0.9648).abs() < 1e-4);
    let se = (expected * (1.0 - expected) / batch.attempts as f64).sqrt();
    assert!((batch.acceptance_rate - expected).abs() <= 3.0 * se, "{} vs {expected}", batch.acceptance_rate);
    for y in &batch.samples {
        let ones = y.iter().filter(|s| **s == 1).count();
        assert!((40..=60).contains(&ones));
    }
}

#[test]
fn tiny_search_cap_falls_back_exactly() {
    let h = DistortionMeasure::hamming(4);
    let mut rng = substream(2, 2);
    let x: Vec<usize> = (0..40).map(|_| rng.gen_range(0..4)).collect();
    let spec = CodebookSpec::new(40, FiniteDistribution::uniform(4).unwrap(), 1, 1).unwrap();
    let (block, bits) = encode_block(&x, &spec, &h, 0.05).unwrap();
    assert!(block.fallback_used);
    assert_eq!(decode_block(&bits, &spec).unwrap(), x);
    assert_eq!(block.payload_bits, 1 + 2 * 40);
}
