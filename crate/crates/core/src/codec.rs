//! Lossy block coding with Shannon random codebooks.
//!
//! A codebook is virtual: codeword `i` is regenerated from `(seed, i)` by a
//! dedicated ChaCha stream, so encoder and decoder share it without storage.
//! The encoder sends the index of the first codeword inside the distortion
//! ball with an Elias-delta code; if the search cap is exhausted it falls
//! back to a per-letter column-minimizer quantizer.
//!
//! Payload layout (big-endian bit order):
//!
//! ```text
//! fixed codebook:  0 | elias(i)              or  1 | ⌈log2|Â|⌉ bits per letter
//! universal:       0 | type (⌈log2 #types⌉) | elias(i)   or  1 | fallback
//! ```
//!
//! Block files wrap a payload as `"AEPK1" | n:u32 | D num:u32 | D den:u32 |
//! seed:u64 | checksum:u32 | mode:u8 | payload`, zero-padded to a byte.

use std::f64::consts::LN_2;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::ballprob::{ball_prob_exact_dp, BallProb, BallQuery};
use crate::error::{Error, Result};
use crate::model::{mix64, substream, BlockBudget, DistortionMeasure, FiniteDistribution};

pub const MAGIC: &[u8; 5] = b"AEPK1";
pub const HEADER_BYTES: usize = 5 + 4 + 4 + 4 + 8 + 4 + 1;
pub const MAX_INDEX_CAP: u64 = 1 << 30;
pub const MAX_TYPES: usize = 1 << 20;

/// Append-only bit buffer.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BitWriter {
    bytes: Vec<u8>,
    len: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bit: bool) {
        let offset = (self.len % 8) as u8;
        if offset == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().expect("byte pushed above") |= 0x80 >> offset;
        }
        self.len += 1;
    }

    /// Writes the low `width` bits of `value`, most significant first.
    pub fn write_bits(&mut self, value: u64, width: u32) {
        for k in (0..width).rev() {
            self.push((value >> k) & 1 == 1);
        }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn to_bit_string(&self) -> String {
        BitReader::new(&self.bytes, self.len).map(|b| if b { '1' } else { '0' }).collect()
    }
}

/// Cursor over a bit buffer.
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    len: u64,
    pos: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8], len: u64) -> Self {
        Self { bytes, len: len.min(bytes.len() as u64 * 8), pos: 0 }
    }

    pub fn position(&self) -> u64 {
        self.pos
    }

    pub fn remaining(&self) -> u64 {
        self.len - self.pos
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        if self.pos >= self.len {
            return Err(Error::Bitstream("truncated stream".into()));
        }
        let byte = self.bytes[(self.pos / 8) as usize];
        let bit = byte & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, width: u32) -> Result<u64> {
        let mut v = 0u64;
        for _ in 0..width {
            v = (v << 1) | self.read_bit()? as u64;
        }
        Ok(v)
    }
}

impl Iterator for BitReader<'_> {
    type Item = bool;

    fn next(&mut self) -> Option<bool> {
        self.read_bit().ok()
    }
}

fn floor_log2(n: u64) -> u32 {
    63 - n.leading_zeros()
}

/// Appends the Elias-delta codeword of `n ≥ 1`.
pub fn elias_delta_write(out: &mut BitWriter, n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Bitstream("Elias codes start at 1".into()));
    }
    let l = floor_log2(n);
    let ll = floor_log2(l as u64 + 1);
    out.write_bits(0, ll);
    out.write_bits(l as u64 + 1, ll + 1);
    out.write_bits(n, l);
    Ok(())
}

pub fn elias_delta_read(input: &mut BitReader<'_>) -> Result<u64> {
    let mut ll = 0u32;
    while !input.read_bit()? {
        ll += 1;
        if ll > 6 {
            return Err(Error::Bitstream("Elias prefix too long for a 64-bit integer".into()));
        }
    }
    let l_plus_one = (1u64 << ll) | input.read_bits(ll)?;
    let l = (l_plus_one - 1) as u32;
    if l > 63 {
        return Err(Error::Bitstream("Elias length field overflows 64 bits".into()));
    }
    Ok((1u64 << l) | input.read_bits(l)?)
}

/// Codeword length L + 2·LL + 1.
pub fn elias_delta_len(n: u64) -> u64 {
    let l = floor_log2(n.max(1)) as u64;
    let ll = floor_log2(l + 1) as u64;
    l + 2 * ll + 1
}

/// Elias-delta codeword as a '0'/'1' string.
pub fn elias_encode(n: u64) -> Result<String> {
    let mut w = BitWriter::new();
    elias_delta_write(&mut w, n)?;
    Ok(w.to_bit_string())
}

pub fn elias_decode(bits: &str) -> Result<u64> {
    let mut w = BitWriter::new();
    for c in bits.chars() {
        match c {
            '0' => w.push(false),
            '1' => w.push(true),
            other => return Err(Error::Bitstream(format!("unexpected character {other:?}"))),
        }
    }
    let mut r = BitReader::new(w.as_bytes(), w.len());
    let v = elias_delta_read(&mut r)?;
    if r.remaining() != 0 {
        return Err(Error::Bitstream("trailing bits after codeword".into()));
    }
    Ok(v)
}

/// A distortion level as an exact fraction, used in block-file headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    pub num: u32,
    pub den: u32,
}

impl Rational {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if den == 0 {
            return Err(Error::Config("zero denominator".into()));
        }
        Ok(Self { num, den })
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Parses `p/q` or a decimal literal such as `0.25`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let num = a.trim().parse().map_err(|_| Error::Config(format!("bad numerator in {s:?}")))?;
            let den = b.trim().parse().map_err(|_| Error::Config(format!("bad denominator in {s:?}")))?;
            return Self::new(num, den);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 9 {
            return Err(Error::Config(format!("too many decimals in {s:?}")));
        }
        let den = 10u32.pow(frac.len() as u32);
        let int: u32 = if int.is_empty() { 0 } else { int.parse().map_err(|_| Error::Config(format!("bad number {s:?}")))? };
        let frac_v: u32 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| Error::Config(format!("bad number {s:?}")))? };
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac_v))
            .ok_or_else(|| Error::Config(format!("{s:?} overflows u32")))?;
        let g = gcd(num, den);
        Self::new(num / g.max(1), den / g.max(1))
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl std::fmt::Display for Rational {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Shared description of a Shannon random codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookSpec {
    pub n: usize,
    pub distribution: FiniteDistribution,
    pub seed: u64,
    pub max_index: u64,
}

impl CodebookSpec {
    pub fn new(n: usize, distribution: FiniteDistribution, seed: u64, max_index: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("block length must be >= 1".into()));
        }
        if max_index == 0 {
            return Err(Error::InvalidModel("max_index must be >= 1".into()));
        }
        Ok(Self { n, distribution, seed, max_index })
    }

    /// The search cap ⌈2^{n(𝓡 + 0.25)}⌉, clipped to 2³⁰.
    pub fn default_max_index(n: usize, rate_bits: f64) -> u64 {
        let exponent = n as f64 * (rate_bits + 0.25);
        if exponent >= 30.0 {
            MAX_INDEX_CAP
        } else {
            (exponent.exp2().ceil() as u64).clamp(1, MAX_INDEX_CAP)
        }
    }

    pub fn codebook(&self) -> Codebook<'_> {
        Codebook { dist: &self.distribution, n: self.n, base: substream(self.seed, 0) }
    }
}

/// Regenerates codewords on demand.
#[derive(Debug, Clone)]
pub struct Codebook<'a> {
    dist: &'a FiniteDistribution,
    n: usize,
    base: ChaCha8Rng,
}

impl Codebook<'_> {
    fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng
    }

    pub fn codeword(&self, index: u64) -> Vec<usize> {
        let mut rng = self.stream(index);
        (0..self.n).map(|_| self.dist.sample(&mut rng)).collect()
    }

    /// Whether codeword `index` lies within the budget, drawing only as many
    /// letters as needed to decide.
    pub fn matches(&self, index: u64, x: &[usize], budget: &BlockBudget) -> bool {
        let mut rng = self.stream(index);
        let mut total = 0.0;
        for &s in x {
            total += budget.cost(s, self.dist.sample(&mut rng));
            if !budget.within(total) {
                return false;
            }
        }
        true
    }
}

/// First i ≤ max_index with ρₙ(x, Y(i)) ≤ D.
pub fn first_match_index(x: &[usize], spec: &CodebookSpec, rho: &DistortionMeasure, d: f64) -> Result<Option<u64>> {
    if x.len() != spec.n {
        return Err(Error::DimensionMismatch(format!("block has {} letters, codebook expects {}", x.len(), spec.n)));
    }
    if spec.distribution.len() != rho.cols() {
        return Err(Error::DimensionMismatch("codebook alphabet does not match rho".into()));
    }
    let budget = BlockBudget::new(rho, spec.n, d);
    let book = spec.codebook();
    Ok((1..=spec.max_index).find(|&i| book.matches(i, x, &budget)))
}

/// Summary of one encoded block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedBlock {
    pub match_index: Option<u64>,
    pub type_index: Option<u64>,
    /// Exact payload length in bits (header excluded).
    pub payload_bits: u64,
    pub fallback_used: bool,
}

fn fallback_width(alphabet: usize) -> u32 {
    if alphabet <= 1 {
        0
    } else {
        64 - ((alphabet - 1) as u64).leading_zeros()
    }
}

fn write_fallback(out: &mut BitWriter, x: &[usize], rho: &DistortionMeasure, d: f64) -> Result<()> {
    let minimizers = rho.column_minimizers();
    let budget = BlockBudget::new(rho, x.len(), d);
    let total: f64 = x.iter().map(|s| budget.cost(*s, minimizers[*s])).sum();
    if !budget.within(total) {
        return Err(Error::FallbackInfeasible(d));
    }
    let width = fallback_width(rho.cols());
    out.push(true);
    for s in x {
        out.write_bits(minimizers[*s] as u64, width);
    }
    Ok(())
}

fn read_fallback(input: &mut BitReader<'_>, n: usize, alphabet: usize) -> Result<Vec<usize>> {
    let width = fallback_width(alphabet);
    (0..n)
        .map(|_| {
            let v = input.read_bits(width)? as usize;
            if v >= alphabet {
                return Err(Error::Bitstream(format!("fallback letter {v} outside alphabet")));
            }
            Ok(v)
        })
        .collect()
}

pub fn encode_block(x: &[usize], spec: &CodebookSpec, rho: &DistortionMeasure, d: f64) -> Result<(EncodedBlock, BitWriter)> {
    let mut out = BitWriter::new();
    let found = first_match_index(x, spec, rho, d)?;
    match found {
        Some(i) => {
            out.push(false);
            elias_delta_write(&mut out, i)?;
        }
        None => write_fallback(&mut out, x, rho, d)?,
    }
    let block = EncodedBlock { match_index: found, type_index: None, payload_bits: out.len(), fallback_used: found.is_none() };
    Ok((block, out))
}

pub fn decode_block(bits: &BitWriter, spec: &CodebookSpec) -> Result<Vec<usize>> {
    let mut r = BitReader::new(bits.as_bytes(), bits.len());
    decode_payload(&mut r, spec)
}

fn decode_payload(r: &mut BitReader<'_>, spec: &CodebookSpec) -> Result<Vec<usize>> {
    if r.read_bit()? {
        read_fallback(r, spec.n, spec.distribution.len())
    } else {
        let i = elias_delta_read(r)?;
        if i > spec.max_index {
            return Err(Error::Bitstream(format!("index {i} beyond codebook size {}", spec.max_index)));
        }
        Ok(spec.codebook().codeword(i))
    }
}

/// Compositions of n into k nonnegative parts, lexicographically.
pub fn enumerate_types(n: usize, k: usize) -> Result<Vec<Vec<usize>>> {
    if k == 0 {
        return Err(Error::Empty("alphabet".into()));
    }
    let count = type_count(n, k);
    if count > MAX_TYPES as f64 {
        return Err(Error::TooLarge(format!("{count} n-types")));
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut cur = vec![0usize; k];
    fn rec(pos: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[pos] = v;
            rec(pos + 1, left - v, cur, out);
        }
    }
    rec(0, n, &mut cur, &mut out);
    Ok(out)
}

/// C(n + k − 1, k − 1) as a float.
pub fn type_count(n: usize, k: usize) -> f64 {
    (1..k).fold(1.0, |acc, j| acc * (n + j) as f64 / j as f64).round()
}

fn bits_for(count: usize) -> u32 {
    if count <= 1 {
        0
    } else {
        64 - ((count - 1) as u64).leading_zeros()
    }
}

/// Universal scheme: one codebook per n-type of the reproduction alphabet.
#[derive(Debug, Clone)]
pub struct UniversalSpec {
    pub n: usize,
    pub seed: u64,
    pub max_index: u64,
    types: Vec<Vec<usize>>,
    books: Vec<CodebookSpec>,
}

impl UniversalSpec {
    pub fn new(n: usize, alphabet: usize, seed: u64, max_index: u64) -> Result<Self> {
        let types = enumerate_types(n, alphabet)?;
        let books = types
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let dist = FiniteDistribution::from_probs(t.iter().map(|c| *c as f64 / n as f64).collect())?;
                CodebookSpec::new(n, dist, mix64(seed ^ mix64(k as u64 + 1)), max_index)
            })
            .collect::<Result<_>>()?;
        Ok(Self { n, seed, max_index, types, books })
    }

    pub fn types(&self) -> &[Vec<usize>] {
        &self.types
    }

    pub fn type_bits(&self) -> u32 {
        bits_for(self.types.len())
    }

    pub fn book(&self, type_index: usize) -> &CodebookSpec {
        &self.books[type_index]
    }
}

/// Searches all type codebooks in lockstep; the earliest index wins, ties go
/// to the lowest type.
pub fn universal_encode(x: &[usize], spec: &UniversalSpec, rho: &DistortionMeasure, d: f64) -> Result<(EncodedBlock, BitWriter)> {
    if x.len() != spec.n {
        return Err(Error::DimensionMismatch(format!("block has {} letters, codebook expects {}", x.len(), spec.n)));
    }
    let budget = BlockBudget::new(rho, spec.n, d);
    let books: Vec<Codebook<'_>> = spec.books.iter().map(CodebookSpec::codebook).collect();
    let mut found = None;
    'search: for i in 1..=spec.max_index {
        for (k, book) in books.iter().enumerate() {
            if book.matches(i, x, &budget) {
                found = Some((k, i));
                break 'search;
            }
        }
    }
    let mut out = BitWriter::new();
    match found {
        Some((k, i)) => {
            out.push(false);
            out.write_bits(k as u64, spec.type_bits());
            elias_delta_write(&mut out, i)?;
        }
        None => write_fallback(&mut out, x, rho, d)?,
    }
    let block = EncodedBlock {
        match_index: found.map(|f| f.1),
        type_index: found.map(|f| f.0 as u64),
        payload_bits: out.len(),
        fallback_used: found.is_none(),
    };
    Ok((block, out))
}

pub fn universal_decode(bits: &BitWriter, spec: &UniversalSpec) -> Result<Vec<usize>> {
    let mut r = BitReader::new(bits.as_bytes(), bits.len());
    universal_payload(&mut r, spec)
}

fn universal_payload(r: &mut BitReader<'_>, spec: &UniversalSpec) -> Result<Vec<usize>> {
    if r.read_bit()? {
        let alphabet = spec.types.first().map(Vec::len).unwrap_or(0);
        return read_fallback(r, spec.n, alphabet);
    }
    let k = r.read_bits(spec.type_bits())? as usize;
    let book = spec.books.get(k).ok_or_else(|| Error::Bitstream(format!("type index {k} out of range")))?;
    let i = elias_delta_read(r)?;
    Ok(book.codebook().codeword(i))
}

/// Header fields of a block file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockHeader {
    pub n: u32,
    pub distortion: Rational,
    pub seed: u64,
    pub checksum: u32,
    pub mode: u8,
}

pub const MODE_FIXED: u8 = 0;
pub const MODE_UNIVERSAL: u8 = 1;

/// CRC-32 over (n, D, seed, reproduction law, mode).
pub fn spec_checksum(n: usize, distortion: Rational, seed: u64, law: &[f64], mode: u8) -> u32 {
    let mut h = crc32fast::Hasher::new();
    h.update(&(n as u32).to_be_bytes());
    h.update(&distortion.num.to_be_bytes());
    h.update(&distortion.den.to_be_bytes());
    h.update(&seed.to_be_bytes());
    for p in law {
        h.update(&p.to_bits().to_be_bytes());
    }
    h.update(&[mode]);
    h.finalize()
}

fn universal_law(alphabet: usize) -> Vec<f64> {
    vec![alphabet as f64]
}

fn write_file(header: BlockHeader, payload: &BitWriter) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_BYTES + payload.as_bytes().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&header.n.to_be_bytes());
    out.extend_from_slice(&header.distortion.num.to_be_bytes());
    out.extend_from_slice(&header.distortion.den.to_be_bytes());
    out.extend_from_slice(&header.seed.to_be_bytes());
    out.extend_from_slice(&header.checksum.to_be_bytes());
    out.push(header.mode);
    out.extend_from_slice(payload.as_bytes());
    out
}

pub fn read_header(bytes: &[u8]) -> Result<BlockHeader> {
    if bytes.len() < HEADER_BYTES || &bytes[..5] != MAGIC {
        return Err(Error::Bitstream("missing AEPK1 header".into()));
    }
    let u32_at = |o: usize| u32::from_be_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    Ok(BlockHeader {
        n: u32_at(5),
        distortion: Rational::new(u32_at(9), u32_at(13))?,
        seed: u64::from_be_bytes(bytes[17..25].try_into().expect("8 bytes")),
        checksum: u32_at(25),
        mode: bytes[29],
    })
}

/// Rejects a header whose fields or checksum disagree with the local spec.
fn check_header(header: &BlockHeader, n: usize, d: Rational, seed: u64, law: &[f64], mode: u8) -> Result<()> {
    let expected = spec_checksum(n, d, seed, law, mode);
    let fields = spec_checksum(header.n as usize, header.distortion, header.seed, law, header.mode);
    if header.checksum != expected || fields != expected {
        return Err(Error::SpecMismatch { expected, found: header.checksum });
    }
    Ok(())
}

/// Encodes one block into a self-describing file image.
pub fn encode_block_file(x: &[usize], spec: &CodebookSpec, rho: &DistortionMeasure, d: Rational) -> Result<(EncodedBlock, Vec<u8>)> {
    let (block, payload) = encode_block(x, spec, rho, d.value())?;
    let header = BlockHeader {
        n: spec.n as u32,
        distortion: d,
        seed: spec.seed,
        checksum: spec_checksum(spec.n, d, spec.seed, spec.distribution.probs(), MODE_FIXED),
        mode: MODE_FIXED,
    };
    Ok((block, write_file(header, &payload)))
}

/// Decodes a block file, refusing it if the local spec disagrees with the header.
pub fn decode_block_file(bytes: &[u8], spec: &CodebookSpec, d: Rational) -> Result<Vec<usize>> {
    let header = read_header(bytes)?;
    check_header(&header, spec.n, d, spec.seed, spec.distribution.probs(), MODE_FIXED)?;
    let payload = &bytes[HEADER_BYTES..];
    let mut r = BitReader::new(payload, payload.len() as u64 * 8);
    decode_payload(&mut r, spec)
}

pub fn universal_encode_file(x: &[usize], spec: &UniversalSpec, rho: &DistortionMeasure, d: Rational) -> Result<(EncodedBlock, Vec<u8>)> {
    let (block, payload) = universal_encode(x, spec, rho, d.value())?;
    let header = BlockHeader {
        n: spec.n as u32,
        distortion: d,
        seed: spec.seed,
        checksum: spec_checksum(spec.n, d, spec.seed, &universal_law(rho.cols()), MODE_UNIVERSAL),
        mode: MODE_UNIVERSAL,
    };
    Ok((block, write_file(header, &payload)))
}

pub fn universal_decode_file(bytes: &[u8], spec: &UniversalSpec, d: Rational) -> Result<Vec<usize>> {
    let header = read_header(bytes)?;
    let alphabet = spec.types.first().map(Vec::len).unwrap_or(0);
    check_header(&header, spec.n, d, spec.seed, &universal_law(alphabet), MODE_UNIVERSAL)?;
    let payload = &bytes[HEADER_BYTES..];
    let mut r = BitReader::new(payload, payload.len() as u64 * 8);
    universal_payload(&mut r, spec)
}

/// A geometric index that may be far beyond 64 bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledIndex {
    pub exact: Option<u64>,
    pub log2: f64,
}

impl SampledIndex {
    pub fn elias_len(&self) -> u64 {
        match self.exact {
            Some(i) => elias_delta_len(i),
            None => {
                let l = self.log2.floor() as u64;
                let ll = floor_log2(l + 1) as u64;
                l + 2 * ll + 1
            }
        }
    }
}

/// Draws i ~ Geometric(p) on {1, 2, ...} given log p.
pub fn sample_geometric<R: Rng + ?Sized>(log_p: f64, rng: &mut R) -> SampledIndex {
    if log_p >= 0.0 {
        return SampledIndex { exact: Some(1), log2: 0.0 };
    }
    let u: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let e = -u.ln(); // Exp(1)
    let p = log_p.exp();
    let rate = if p > 1e-12 { -(-p).ln_1p() } else { p };
    let ratio = e / rate;
    if p > 0.0 && ratio < 9.0e15 {
        let i = ratio.floor() as u64 + 1;
        return SampledIndex { exact: Some(i), log2: (i as f64).log2() };
    }
    // i ≈ E/p to relative accuracy 1/i.
    SampledIndex { exact: None, log2: (e.ln() - log_p) / LN_2 }
}

/// Codelength of the random-codebook scheme drawn from its exact conditional law.
///
/// Given x, the first matching index over independent codewords is
/// Geometric(Qⁿ(B(x,D))); sampling it directly reproduces the distribution
/// of `payload_bits` at block lengths where the search itself is infeasible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulatedCode {
    pub ball: BallProb,
    pub index: SampledIndex,
    pub type_index: Option<u64>,
    pub payload_bits: u64,
}

pub fn simulate_codelength<R: Rng + ?Sized>(x: &[usize], q: &FiniteDistribution, rho: &DistortionMeasure, d: f64, rng: &mut R) -> Result<SimulatedCode> {
    let ball = ball_prob_exact_dp(&BallQuery::new(x, q, rho, d)?)?;
    if ball.log_prob == f64::NEG_INFINITY {
        return Err(Error::Numerical("empty distortion ball".into()));
    }
    let index = sample_geometric(ball.log_prob, rng);
    Ok(SimulatedCode { ball, index, type_index: None, payload_bits: 1 + index.elias_len() })
}

/// Universal-scheme codelength: independent geometric indices per type codebook,
/// minimum taken with ties to the lowest type.
pub fn simulate_universal_codelength<R: Rng + ?Sized>(x: &[usize], alphabet: usize, rho: &DistortionMeasure, d: f64, rng: &mut R) -> Result<SimulatedCode> {
    let n = x.len();
    let types = enumerate_types(n, alphabet)?;
    let mut best: Option<(usize, BallProb, SampledIndex)> = None;
    for (k, t) in types.iter().enumerate() {
        let q = FiniteDistribution::from_probs(t.iter().map(|c| *c as f64 / n as f64).collect())?;
        let ball = ball_prob_exact_dp(&BallQuery::new(x, &q, rho, d)?)?;
        if ball.log_prob == f64::NEG_INFINITY {
            continue;
        }
        let idx = sample_geometric(ball.log_prob, rng);
        let better = match &best {
            None => true,
            Some((_, _, b)) => match (idx.exact, b.exact) {
                (Some(a), Some(c)) => a < c,
                _ => idx.log2 < b.log2,
            },
        };
        if better {
            best = Some((k, ball, idx));
        }
    }
    let (k, ball, index) = best.ok_or_else(|| Error::Numerical("every type codebook has an empty ball".into()))?;
    Ok(SimulatedCode {
        ball,
        index,
        type_index: Some(k as u64),
        payload_bits: 1 + bits_for(types.len()) as u64 + index.elias_len(),
    })
}

/// Membership in G_n = {y : P̂_y(b) ≤ Q*(b) + δ for all b}.
pub fn in_conditioned_set(y: &[usize], q_star: &FiniteDistribution, delta: f64) -> bool {
    let mut counts = vec![0usize; q_star.len()];
    for s in y {
        counts[*s] += 1;
    }
    let n = y.len() as f64;
    counts.iter().enumerate().all(|(b, c)| *c as f64 <= n * (q_star.prob(b) + delta) + 1e-9)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedBatch {
    pub samples: Vec<Vec<usize>>,
    pub attempts: u64,
    pub acceptance_rate: f64,
}

/// Probe length after which a zero-acceptance run is declared stalled.
pub const REJECTION_PROBE: u64 = 1 << 20;

/// Rejection sampler for (Q*)ⁿ conditioned on G_n.
pub fn conditioned_sampler(q_star: &FiniteDistribution, delta: f64, n: usize, count: usize, seed: u64) -> Result<ConditionedBatch> {
    if !(delta > 0.0) {
        return Err(Error::InvalidModel(format!("delta must be > 0, got {delta}")));
    }
    let mut rng = substream(seed, 0);
    let mut samples = Vec::with_capacity(count);
    let mut attempts = 0u64;
    let mut y = vec![0usize; n];
    while samples.len() < count {
        y.iter_mut().for_each(|s| *s = q_star.sample(&mut rng));
        attempts += 1;
        if in_conditioned_set(&y, q_star, delta) {
            samples.push(y.clone());
        }
        if attempts >= REJECTION_PROBE && (samples.len() as f64) < 1e-6 * attempts as f64 {
            return Err(Error::RejectionStalled { rate: samples.len() as f64 / attempts as f64, attempts });
        }
    }
    Ok(ConditionedBatch { acceptance_rate: samples.len() as f64 / attempts as f64, samples, attempts })
}
