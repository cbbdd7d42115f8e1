//! Polar codes used as a Slepian-Wolf engine: construction, the Arikan
//! transform, syndrome formation and a syndrome-pinned CRC-aided list
//! decoder.

mod code;
mod crc;
mod decoder;
mod slepian_wolf;
mod transform;

pub use code::{construct_code, CodeDescription, PolarCode, DEFAULT_LIST_SIZE};
pub use crc::CrcSpec;
pub use decoder::{sc_decode, scl_decode, DecodeOutput};
pub use slepian_wolf::{llr_from_side_info, sw_encode, LlrVector, Syndrome, SwEncoding, LLR_CLAMP};
pub use transform::{polar_transform, polar_transform_in_place};
