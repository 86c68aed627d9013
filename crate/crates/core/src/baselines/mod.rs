//! Comparison methods: k-means++ / ABBA digitization and the SAX family.

pub mod abba;
pub mod kmeans;
pub mod normal;
pub mod sax;

pub use abba::{abba_digitize, abba_digitize_k, abba_transform_k, AbbaDigitization};
pub use kmeans::{kmeans_pp, kmeans_pp_with, KMeansOptions, KMeansResult};
pub use normal::{gaussian_breakpoints, inverse_normal_cdf, normal_cdf};
pub use sax::{
    onedsax_inverse, onedsax_transform, sax_inverse, sax_transform, split_symbol_budget, OneDSaxConfig,
    OneDSaxEncoding, SaxConfig, SaxEncoding,
};
