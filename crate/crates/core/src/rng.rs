//! Counter-based random bits.
//!
//! Every random decision in a simulation is a pure function of
//! `(seed, replicate, vertex, time, stream)`, evaluated with the Philox4x64-10
//! block function. There is no generator state to thread through the
//! simulation, so results do not depend on evaluation order or thread count.

const PHILOX_M0: u64 = 0xD2E7_470E_E14C_6C93;
const PHILOX_M1: u64 = 0xCA5A_8263_9512_1157;
const PHILOX_W0: u64 = 0x9E37_79B9_7F4A_7C15;
const PHILOX_W1: u64 = 0xBB67_AE85_84CA_A73B;

#[inline(always)]
fn mulhilo(a: u64, b: u64) -> (u64, u64) {
    let p = (a as u128) * (b as u128);
    ((p >> 64) as u64, p as u64)
}

/// Philox4x64 with 10 rounds.
#[inline]
pub fn philox4x64(counter: [u64; 4], key: [u64; 2]) -> [u64; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// Which family of random decisions a draw belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Transient = 0,
    Manufacturing = 1,
    Test = 0xFFFF,
}

/// Keyed by `(seed, replicate)`; draws are indexed by `(vertex, time, stream)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: [u64; 2],
}

impl CounterRng {
    pub fn new(seed: u64, replicate: u64) -> Self {
        Self {
            key: [seed, replicate],
        }
    }

    #[inline]
    pub fn draw(&self, vertex: u64, time: u64, stream: Stream) -> u64 {
        philox4x64([vertex, time, stream as u64, 0], self.key)[0]
    }

    /// A Bernoulli(`rate`) bit. `rate <= 0` never fires, `rate >= 1` always does.
    #[inline]
    pub fn bernoulli(&self, vertex: u64, time: u64, stream: Stream, rate: f64) -> bool {
        bernoulli_from_u64(self.draw(vertex, time, stream), rate)
    }
}

/// Maps a uniform 64-bit word to a Bernoulli(`rate`) outcome using the top 53 bits.
#[inline]
pub fn bernoulli_from_u64(word: u64, rate: f64) -> bool {
    if rate <= 0.0 {
        return false;
    }
    if rate >= 1.0 {
        return true;
    }
    let u = (word >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0);
    u < rate
}
