//! Seedable generator used for every dice draw in the engine.
//!
//! The state is part of [`crate::GameState`] and is serialized with it, so the
//! algorithm is fixed here rather than delegated to a crate whose internal
//! layout could change between versions.

use serde::{Deserialize, Serialize};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// One step of splitmix64 applied to `x` (the stateless mixing form).
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stateful splitmix64 stream, used to expand a 64-bit seed into 256 bits.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        let out = splitmix64(self.state);
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RngAlgorithm {
    #[serde(rename = "xoshiro256**")]
    Xoshiro256StarStar,
}

/// xoshiro256** generator with its full 256-bit state exposed for hashing
/// and persistence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub algorithm: RngAlgorithm,
    pub state: [u64; 4],
}

impl RngState {
    pub fn from_seed(seed: u64) -> Self {
        let mut sm = SplitMix64::new(seed);
        let mut state = [0u64; 4];
        for word in &mut state {
            *word = sm.next_u64();
        }
        // An all-zero state is a fixed point of xoshiro; splitmix64 cannot
        // produce four zero outputs in a row, but keep the guard explicit.
        if state == [0; 4] {
            state[0] = GOLDEN_GAMMA;
        }
        Self {
            algorithm: RngAlgorithm::Xoshiro256StarStar,
            state,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }
}
