//! Littlewood–Paley decomposition on Z^d, Besov norms B^s_{p,q}(T^d) and
//! statistical certifiers for the classical Besov-space inequalities.

pub mod certify;
pub mod cutoff;
pub mod norm;

pub use certify::{
    certify_diffeo_invariance, certify_embedding, certify_max_regularity, certify_nikolskij,
    certify_product_law, max_regularity_ratio, CertificateReport, EmbeddingConfig,
    MaxRegularityConfig, NikolskijConfig, ProductLawConfig,
};
pub use cutoff::{chi, phi};
pub use norm::{
    apply_multiplier, besov_from_blocks, besov_norm, block_norms, blocks, lp_block, BesovIndex,
    BlockDecomposition,
};
