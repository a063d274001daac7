//! Counter-based random number generation.
//!
//! Every random draw in this crate comes from a Philox4x64-10 stream
//! addressed by a `(seed, stream)` pair. Because the generator is a pure
//! function of `(key, counter)`, any consumer can be handed its own stream
//! id and produce its values independently of scheduling, thread count or
//! the order in which other streams are consumed. Reproducing a pipeline
//! bit-exactly only requires the seed and the stream-id conventions below.
//!
//! # Generator definition
//!
//! Philox4x64-10 (Salmon et al., "Parallel random numbers: as easy as
//! 1, 2, 3") maps a 256-bit counter `(x0, x1, x2, x3)` and a 128-bit key
//! `(k0, k1)` to four 64-bit words through ten S-P rounds:
//!
//! ```text
//! round:  hi0,lo0 = mulhilo(0xD2E7470EE14C6C93, x0)
//!         hi1,lo1 = mulhilo(0xCA5A826395121157, x2)
//!         (x0, x1, x2, x3) <- (hi1 ^ x1 ^ k0, lo1, hi0 ^ x3 ^ k1, lo0)
//! key bump between rounds:
//!         k0 += 0x9E3779B97F4A7C15,  k1 += 0xBB67AE8584CAA73B
//! ```
//!
//! [`CounterRng::new(seed, stream)`](CounterRng::new) fixes the key to
//! `(seed, stream)` and walks the counter `(block, 0, 0, 0)` for
//! `block = 0, 1, 2, ...`, emitting the four output words of each block in
//! order. This matches the Philox4x64-10 reference function; known-answer
//! vectors cross-checked against an independent implementation are frozen
//! in the tests of this module.
//!
//! # Derived values
//!
//! * `next_u64` — next raw word.
//! * `next_f64` — `(word >> 11) as f64 * 2^-53`, uniform on `[0, 1)`.
//! * `next_open_f64` — `((word >> 11) + 1) as f64 * 2^-53`, uniform on
//!   `(0, 1]`; used where `ln` must not see zero.
//! * `next_gaussian` — Box-Muller: `sqrt(-2 ln u1) * cos(2 pi u2)` with
//!   `u1` drawn open, `u2` half-open. Consumes exactly two words.
//!
//! # Stream-id conventions
//!
//! Stream ids are derived with [`derive_stream`] (a SplitMix64 mixing
//! chain, defined below) from small integer tuples, and seeds for
//! sub-computations with [`derive_seed`]. Labels are folded in through
//! [`hash_label`] (FNV-1a 64). The fixed assignments used by this crate:
//!
//! * embedder weights: stream `derive_stream(&[0])` of `weight_seed`;
//! * dropout mask, pass `j`, layer `l`: stream `derive_stream(&[1, j, l])`
//!   of `sample_seed`;
//! * noise augmentation: stream `derive_stream(&[2, 0])` of the per-image
//!   seed `derive_seed(spec.seed, &[i])` for image index `i`;
//! * overlay augmentation, patch `t`: stream `derive_stream(&[3, t])` of
//!   the same per-image seed;
//! * synthetic image `i` of family `f`: stream `derive_stream(&[4, f, i])`
//!   of the set seed;
//! * experiment sub-computations: seed
//!   `derive_seed(master, &[hash_label(kind), hash_label(part), ...])`.

const PHILOX_M0: u64 = 0xD2E7_470E_E14C_6C93;
const PHILOX_M1: u64 = 0xCA5A_8263_9512_1157;
const PHILOX_W0: u64 = 0x9E37_79B9_7F4A_7C15;
const PHILOX_W1: u64 = 0xBB67_AE85_84CA_A73B;

#[inline]
fn mulhilo(a: u64, b: u64) -> (u64, u64) {
    let p = (a as u128) * (b as u128);
    ((p >> 64) as u64, p as u64)
}

/// One Philox4x64-10 block: counter + key -> four output words.
#[inline]
pub fn philox4x64(ctr: [u64; 4], key: [u64; 2]) -> [u64; 4] {
    let [mut x0, mut x1, mut x2, mut x3] = ctr;
    let [mut k0, mut k1] = key;
    for round in 0..10 {
        if round > 0 {
            k0 = k0.wrapping_add(PHILOX_W0);
            k1 = k1.wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, x0);
        let (hi1, lo1) = mulhilo(PHILOX_M1, x2);
        x0 = hi1 ^ x1 ^ k0;
        x1 = lo1;
        x2 = hi0 ^ x3 ^ k1;
        x3 = lo0;
    }
    [x0, x1, x2, x3]
}

/// A Philox4x64-10 stream, keyed by `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: [u64; 2],
    block: u64,
    buf: [u64; 4],
    pos: usize,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self {
            key: [seed, stream],
            block: 0,
            buf: [0; 4],
            pos: 4,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        if self.pos == 4 {
            self.buf = philox4x64([self.block, 0, 0, 0], self.key);
            self.block = self.block.wrapping_add(1);
            self.pos = 0;
        }
        let w = self.buf[self.pos];
        self.pos += 1;
        w
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1]`; safe to feed into `ln`.
    #[inline]
    pub fn next_open_f64(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller; consumes exactly two words.
    #[inline]
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_open_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Uniform integer in `[0, n)` by multiply-shift on one word.
    ///
    /// Bias is at most `n / 2^64`, negligible for the desk-scale `n`
    /// used here; kept branch-free so word consumption stays fixed.
    #[inline]
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (((self.next_u64() as u128) * (n as u128)) >> 64) as usize
    }
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold a tuple of integers into a stream id.
///
/// `derive_stream(parts)` chains SplitMix64 over the parts; distinct
/// tuples map to distinct streams for all practical purposes.
pub fn derive_stream(parts: &[u64]) -> u64 {
    let mut h = splitmix64(0xA076_1D64_78BD_642F);
    for &p in parts {
        h = splitmix64(h ^ splitmix64(p));
    }
    h
}

/// Derive a child seed from a master seed and a tuple of parts.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ 0xE703_7ED1_A0B4_28DB);
    for &p in parts {
        h = splitmix64(h ^ splitmix64(p));
    }
    h
}

/// FNV-1a 64 over the UTF-8 bytes of a label.
pub fn hash_label(label: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in label.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    // Known-answer vectors for the Philox4x64-10 block function,
    // cross-checked against an independent implementation of the
    // reference algorithm. These pin the stream bit-exactly.
    #[test]
    fn philox_known_answers() {
        assert_eq!(
            philox4x64([0, 0, 0, 0], [0, 0]),
            [
                0x16554d9eca36314c,
                0xdb20fe9d672d0fdc,
                0xd7e772cee186176b,
                0x7e68b68aec7ba23b
            ]
        );
        assert_eq!(
            philox4x64([0, 0, 0, 0], [1, 0]),
            [
                0xcb7ea744cf19bb4c,
                0xa34eacbe1377d650,
                0xe8dbce5eb7b8301f,
                0x344790248cacfe2f
            ]
        );
        assert_eq!(
            philox4x64([u64::MAX; 4], [u64::MAX; 2]),
            [
                0x87b092c3013fe90b,
                0x438c3c67be8d0224,
                0x9cc7d7c69cd777b6,
                0xa09caebf594f0ba0
            ]
        );
        assert_eq!(
            philox4x64(
                [
                    0x243f6a8885a308d4,
                    0x13198a2e03707344,
                    0xa4093822299f31d0,
                    0x082efa98ec4e6c89
                ],
                [0x452821e638d01377, 0xbe5466cf34e90c6c]
            ),
            [
                0x4c8e672094922aa3,
                0x527061cd2884102a,
                0xf4c265b2d783d553,
                0x0556e76cb0298c8d
            ]
        );
    }

    #[test]
    fn stream_words_walk_blocks_in_order() {
        let mut rng = CounterRng::new(5, 6);
        let block0 = philox4x64([0, 0, 0, 0], [5, 6]);
        let block1 = philox4x64([1, 0, 0, 0], [5, 6]);
        let got: Vec<u64> = (0..8).map(|_| rng.next_u64()).collect();
        assert_eq!(&got[..4], &block0);
        assert_eq!(&got[4..], &block1);
    }

    #[test]
    fn streams_are_independent_of_consumption_order() {
        let a: Vec<u64> = {
            let mut r = CounterRng::new(9, 1);
            (0..3).map(|_| r.next_u64()).collect()
        };
        let mut other = CounterRng::new(9, 2);
        other.next_u64();
        let b: Vec<u64> = {
            let mut r = CounterRng::new(9, 1);
            (0..3).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
        let _ = other;
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut rng = CounterRng::new(42, 0);
        for _ in 0..10_000 {
            let u = rng.next_f64();
            assert!((0.0..1.0).contains(&u));
            let v = rng.next_open_f64();
            assert!(v > 0.0 && v <= 1.0);
        }
    }

    #[test]
    fn gaussian_moments() {
        let mut rng = CounterRng::new(7, 0);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let g = rng.next_gaussian();
            sum += g;
            sumsq += g * g;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    // Frozen outputs of the derivation helpers; any change to these
    // breaks reproducibility of previously recorded runs.
    #[test]
    fn derivation_vectors() {
        assert_eq!(derive_stream(&[0]), 0x576d_0cf8_aced_5b32);
        assert_eq!(derive_stream(&[1, 2, 3]), 0xf302_155f_9621_c556);
        assert_eq!(derive_seed(0, &[0]), 0xbb26_7476_0da6_3e37);
        assert_eq!(derive_seed(42, &[7, 9]), 0x84f9_a261_9c9e_4215);
        assert_eq!(hash_label(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(hash_label("sensitivity"), 0xe2d2_563b_91bd_c56c);
    }

    #[test]
    fn next_index_bounds_and_determinism() {
        let mut a = CounterRng::new(3, 4);
        let mut b = CounterRng::new(3, 4);
        for _ in 0..1000 {
            let i = a.next_index(17);
            assert!(i < 17);
            assert_eq!(i, b.next_index(17));
        }
    }
}
