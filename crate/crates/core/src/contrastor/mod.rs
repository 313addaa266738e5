//! Contrastive learning support: perturbed negative summaries and the NT-Xent
//! loss kernel.

mod loss;
mod negatives;

pub use loss::{
    combined_loss, cosine_sim, max_gradient_error, mean_pool, nt_xent, nt_xent_loss, LossConfig, NtXent,
    RepresentationVector,
};
pub use negatives::{
    derive_seed, factual_mentions, generate_negatives, harvest_entity_bank, EntityBank, EntityCategory,
    NegativeMode, NegativeSample, NegativeSet, DEFAULT_NEGATIVES,
};
