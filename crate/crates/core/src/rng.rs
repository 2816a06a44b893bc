//! Reproducible random streams.
//!
//! Every stream is a ChaCha12 keystream keyed by the master seed and selected
//! by a 64-bit stream id built from the chain index and a purpose tag. ChaCha
//! is counter based, so streams never overlap and the position of a stream can
//! be saved and restored exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha12Rng;

/// What a stream is used for. Distinct purposes of one chain are independent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StreamPurpose {
    Init,
    Noise,
    Accept,
    Target,
}

impl StreamPurpose {
    pub fn tag(self) -> &'static str {
        match self {
            StreamPurpose::Init => "init",
            StreamPurpose::Noise => "noise",
            StreamPurpose::Accept => "accept",
            StreamPurpose::Target => "target",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "init" => StreamPurpose::Init,
            "noise" => StreamPurpose::Noise,
            "accept" => StreamPurpose::Accept,
            "target" => StreamPurpose::Target,
            _ => return None,
        })
    }

    fn code(self) -> u64 {
        match self {
            StreamPurpose::Init => 1,
            StreamPurpose::Noise => 2,
            StreamPurpose::Accept => 3,
            StreamPurpose::Target => 4,
        }
    }
}

/// Opens the stream for `(master_seed, chain_index, purpose)` at position zero.
pub fn make_rng_stream(master_seed: u64, chain_index: u32, purpose: StreamPurpose) -> StreamRng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream((u64::from(chain_index) << 8) | purpose.code());
    rng
}

/// Position of a stream, enough to resume it bit-exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamPosition {
    pub stream: u64,
    pub word_pos: u128,
}

pub fn stream_position(rng: &StreamRng) -> StreamPosition {
    StreamPosition {
        stream: rng.get_stream(),
        word_pos: rng.get_word_pos(),
    }
}

pub fn restore_stream(master_seed: u64, pos: StreamPosition) -> StreamRng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(pos.stream);
    rng.set_word_pos(pos.word_pos);
    rng
}
