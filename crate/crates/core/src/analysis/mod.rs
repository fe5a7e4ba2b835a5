//! Impulse-response bases, latent decompositions, separability and basis
//! similarity.

mod assignment;
mod basis;
mod decoder;
mod decompose;
mod separability;
mod similarity;

pub use assignment::max_weight_assignment;
pub use basis::{
    amplitudes_from_images, extract_basis, extract_basis_with, AmplitudeMode, Amplitudes, BasisEntry, BasisIndex,
    BasisIndexEntry, BasisOptions, BasisSet,
};
pub use decoder::{offset_free_decode, Decoder, Encoder, LinearBlockCodec, LinearBlockDecoder, OffsetFree};
pub use decompose::{
    aggregate_channel, aggregate_spatial, channel_component, channel_components, channel_impulse,
    channel_impulse_with_extent, spatial_component, spatial_components,
};
pub use separability::{
    separability, LatentSeparability, SeparabilityOptions, SeparabilityReport, SpatialSubset, STD_ESTIMAND,
};
pub use similarity::{
    abs_cosine, basis_set_from_2d, basis_set_from_images, basis_similarity, resize_nearest, MatchedPair,
    SimilarityReference, SimilarityReport,
};
