//! Random streams and seed derivation.
//!
//! Every stochastic computation in this crate takes a caller-supplied random
//! stream, so results are a pure function of the seed. Seeds for repetitions
//! and sample blocks are derived with [`derive_seed`], a SplitMix64-style
//! mixing chain over `(base, tag, n, rep)`.

use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// The random stream used throughout the workspace.
pub type Stream = Xoshiro256PlusPlus;

/// Creates a stream from a 64-bit seed.
pub fn stream(seed: u64) -> Stream {
    Stream::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a hash, used to turn algorithm ids into seed tags.
pub fn tag_hash(tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// `mix64(mix64(mix64(mix64(base + G) ^ tag) + G ^ n) + G ^ rep)`, with
/// `G = 0x9e3779b97f4a7c15` and wrapping arithmetic. Each component passes
/// through a full avalanche before the next is folded in.
pub fn derive_seed(base: u64, tag: u64, n: u64, rep: u64) -> u64 {
    let mut s = mix64(base.wrapping_add(GOLDEN));
    s = mix64(s ^ tag);
    s = mix64(s.wrapping_add(GOLDEN) ^ n);
    mix64(s.wrapping_add(GOLDEN) ^ rep)
}

/// Uniform variate on the half-open interval `[0, 1)`.
#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

const LANES: usize = 8;
const ROUNDS: usize = 4;
const BLOCK: usize = LANES * ROUNDS;

/// Eight xoshiro256++ states advanced in lockstep, laid out so the update
/// vectorizes. Each lane is an independent generator.
#[derive(Clone)]
pub struct LaneCore {
    s: [[u64; LANES]; 4],
}

impl LaneCore {
    /// Seeds every lane from the parent stream. Consumes exactly
    /// `4 · 8` words of `parent`.
    pub fn from_parent<R: Rng + ?Sized>(parent: &mut R) -> Self {
        let mut s = [[0u64; LANES]; 4];
        for word in s.iter_mut() {
            for v in word.iter_mut() {
                *v = parent.next_u64();
            }
        }
        // An all-zero lane would stay zero forever.
        let dead: Vec<usize> = (0..LANES)
            .filter(|&l| s.iter().all(|word| word[l] == 0))
            .collect();
        for l in dead {
            s[0][l] = GOLDEN;
        }
        Self { s }
    }

    #[inline(always)]
    fn fill(&mut self, out: &mut [u64; BLOCK]) {
        let [mut s0, mut s1, mut s2, mut s3] = self.s;
        for round in out.chunks_exact_mut(LANES) {
            for l in 0..LANES {
                round[l] = s0[l]
                    .wrapping_add(s3[l])
                    .rotate_left(23)
                    .wrapping_add(s0[l]);
                let t = s1[l] << 17;
                s2[l] ^= s0[l];
                s3[l] ^= s1[l];
                s1[l] ^= s2[l];
                s0[l] ^= s3[l];
                s2[l] ^= t;
                s3[l] = s3[l].rotate_left(45);
            }
        }
        self.s = [s0, s1, s2, s3];
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx512f,avx512vl")]
    unsafe fn fill_avx512(&mut self, out: &mut [u64; BLOCK]) {
        self.fill(out)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn fill_avx2(&mut self, out: &mut [u64; BLOCK]) {
        self.fill(out)
    }
}

impl LaneCore {
    #[inline]
    fn generate(&mut self, results: &mut [u64; BLOCK]) {
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx512vl") {
            // SAFETY: the features were detected at runtime.
            return unsafe { self.fill_avx512(results) };
        }
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the feature was detected at runtime.
            return unsafe { self.fill_avx2(results) };
        }
        self.fill(results)
    }
}

/// A buffered stream for hot loops that draw many words. Words come out
/// round by round, lane 0 first, and the sequence is a deterministic
/// function of the words taken from the parent.
#[derive(Clone)]
pub struct LaneStream {
    core: LaneCore,
    buf: [u64; BLOCK],
    next: usize,
}

impl LaneStream {
    /// Forks a stream off `parent`, consuming `4 · 8` of its words.
    pub fn fork<R: Rng + ?Sized>(parent: &mut R) -> Self {
        Self {
            core: LaneCore::from_parent(parent),
            buf: [0; BLOCK],
            next: BLOCK,
        }
    }

    /// Fills `out` with uniforms on `[0, 1)`, taking the same words that
    /// repeated [`uniform`] calls would.
    pub fn fill_uniform(&mut self, out: &mut [f64]) {
        #[cfg(target_arch = "x86_64")]
        if wide_lanes() {
            // SAFETY: the features were detected at runtime.
            return unsafe { self.fill_uniform_avx512(out) };
        }
        self.fill_body(out, |core, buf| core.generate(buf), to_unit)
    }

    /// Fills `out` with raw words, the same ones `next_u64` would return.
    pub fn fill_words(&mut self, out: &mut [u64]) {
        #[cfg(target_arch = "x86_64")]
        if wide_lanes() {
            // SAFETY: the features were detected at runtime.
            return unsafe { self.fill_words_avx512(out) };
        }
        self.fill_body(out, |core, buf| core.generate(buf), |w| w)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx512f,avx512vl,avx512dq")]
    unsafe fn fill_uniform_avx512(&mut self, out: &mut [f64]) {
        self.fill_body(out, |core, buf| core.fill(buf), to_unit)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx512f,avx512vl,avx512dq")]
    unsafe fn fill_words_avx512(&mut self, out: &mut [u64]) {
        self.fill_body(out, |core, buf| core.fill(buf), |w| w)
    }

    #[inline(always)]
    fn fill_body<T>(
        &mut self,
        out: &mut [T],
        refill: impl Fn(&mut LaneCore, &mut [u64; BLOCK]),
        convert: impl Fn(u64) -> T,
    ) {
        let mut rest = out;
        while !rest.is_empty() {
            if self.next == BLOCK {
                refill(&mut self.core, &mut self.buf);
                self.next = 0;
            }
            let k = rest.len().min(BLOCK - self.next);
            let (head, tail) = rest.split_at_mut(k);
            for (o, &w) in head.iter_mut().zip(&self.buf[self.next..self.next + k]) {
                *o = convert(w);
            }
            self.next += k;
            rest = tail;
        }
    }
}

#[cfg(target_arch = "x86_64")]
fn wide_lanes() -> bool {
    std::arch::is_x86_feature_detected!("avx512dq")
        && std::arch::is_x86_feature_detected!("avx512vl")
}

#[inline(always)]
fn to_unit(w: u64) -> f64 {
    (w >> 11) as f64 * UNIT
}

const UNIT: f64 = 1.0 / (1u64 << 53) as f64;

impl RngCore for LaneStream {
    #[inline]
    fn next_u64(&mut self) -> u64 {
        if self.next == BLOCK {
            self.core.generate(&mut self.buf);
            self.next = 0;
        }
        let w = self.buf[self.next];
        self.next += 1;
        w
    }

    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        rand::rand_core::impls::fill_bytes_via_next(self, dest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_seed_separates_components() {
        let a = derive_seed(1, tag_hash("mc"), 100, 0);
        assert_ne!(a, derive_seed(1, tag_hash("mc"), 100, 1));
        assert_ne!(a, derive_seed(1, tag_hash("pc"), 100, 0));
        assert_ne!(a, derive_seed(1, tag_hash("mc"), 101, 0));
        assert_ne!(a, derive_seed(2, tag_hash("mc"), 100, 0));
        assert_eq!(a, derive_seed(1, tag_hash("mc"), 100, 0));
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(tag_hash(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(tag_hash("a"), 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn lanes_match_scalar_xoshiro() {
        let mut parent = stream(11);
        let core = LaneCore::from_parent(&mut parent);
        let mut lanes: Vec<Stream> = (0..LANES)
            .map(|l| {
                let mut seed = [0u8; 32];
                for w in 0..4 {
                    seed[8 * w..8 * w + 8].copy_from_slice(&core.s[w][l].to_le_bytes());
                }
                Stream::from_seed(seed)
            })
            .collect();
        let mut fast = LaneStream {
            core,
            buf: [0; BLOCK],
            next: BLOCK,
        };
        for _ in 0..3 {
            for _ in 0..ROUNDS {
                for lane in lanes.iter_mut() {
                    assert_eq!(fast.next_u64(), lane.next_u64());
                }
            }
        }
    }

    #[test]
    fn bulk_uniforms_match_single_draws() {
        let mut a = LaneStream::fork(&mut stream(4));
        let mut b = a.clone();
        let mut bulk = vec![0.0; 1000];
        a.fill_uniform(&mut bulk[..7]);
        a.fill_uniform(&mut bulk[7..]);
        for &x in &bulk {
            assert_eq!(x, uniform(&mut b));
        }
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut rng = stream(3);
        for _ in 0..10_000 {
            let u = uniform(&mut rng);
            assert!((0.0..1.0).contains(&u));
        }
    }
}
