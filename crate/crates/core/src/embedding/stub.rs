//! Deterministic text embedder used when no model sidecar is configured.
//!
//! Each token seeds an xorshift64* stream with its FNV-1a hash; the stream's
//! first `dim` outputs, mapped to [-1, 1) and normalized, are the token's
//! vector. A text embeds to the (unnormalized) sum of its token vectors, so
//! texts sharing tokens land near each other. All arithmetic is f64 and the
//! result is rounded to f32 once at the end. Tokens are summed in sorted order
//! so the output depends only on the token multiset.

use super::{EmbeddingVector, VectorError};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const XORSHIFT_MULTIPLIER: u64 = 2_685_821_657_736_338_717;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

struct XorShift64Star(u64);

impl XorShift64Star {
    fn next_unit(&mut self) -> f64 {
        let mut s = self.0;
        s ^= s >> 12;
        s ^= s << 25;
        s ^= s >> 27;
        self.0 = s;
        let u = s.wrapping_mul(XORSHIFT_MULTIPLIER);
        ((u >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }
}

/// Lowercase and split on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn token_vector(token: &str, dim: usize) -> Vec<f64> {
    let mut rng = XorShift64Star(fnv1a(token.as_bytes()) | 1);
    let raw: Vec<f64> = (0..dim).map(|_| rng.next_unit()).collect();
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    raw.into_iter().map(|x| x / norm).collect()
}

pub fn stub_embed(text: &str, dim: usize) -> Result<EmbeddingVector, VectorError> {
    if dim < 2 {
        return Err(VectorError::DimensionTooSmall(dim));
    }
    let mut tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(VectorError::EmptyText);
    }
    tokens.sort_unstable();
    let mut sum = vec![0.0f64; dim];
    for token in &tokens {
        for (acc, x) in sum.iter_mut().zip(token_vector(token, dim)) {
            *acc += x;
        }
    }
    EmbeddingVector::new(sum.into_iter().map(|x| x as f32).collect())
}
