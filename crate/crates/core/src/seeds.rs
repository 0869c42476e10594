//! Seed derivation.
//!
//! A run seed is `mix(mix(base, grid_index), replication_index)`, where `mix`
//! is one splitmix64 round over the xor-combined inputs. The construction is
//! part of the public contract: any cell of any sweep can be rerun from the
//! base seed and its two indices.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One splitmix64 output for state `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(a) ^ b.wrapping_mul(GOLDEN))
}

/// Seed of grid point `index` in a sweep started from `base`.
pub fn grid_seed(base: u64, index: u64) -> u64 {
    mix(base, index)
}

/// Seed of replication `rep` of a scenario whose seed is `scenario_seed`.
pub fn replication_seed(scenario_seed: u64, rep: u64) -> u64 {
    mix(scenario_seed, rep)
}

/// Independent sub-streams of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Draws,
    Shuffles,
}

pub fn stream_seed(run_seed: u64, stream: Stream) -> u64 {
    let tag = match stream {
        Stream::Draws => 0x6472_6177,
        Stream::Shuffles => 0x7368_7566,
    };
    mix(run_seed, tag)
}
