//! Positivity-cone machinery for flavored forward-limit scattering.
//!
//! The crate builds the space of crossing-symmetric four-tensors on up to
//! eight flavors, its spectrahedral cone of positive elements, the complete
//! three-flavor extremal-ray families, and checkers deciding whether a
//! Wilson-coefficient tensor satisfies the elastic and sampled inelastic
//! positivity bounds.
//!
//! Everything is pure and deterministic: samplers carry explicit seeds,
//! values are immutable after construction, and parallel scans merge by
//! cell index.

pub mod bounds;
pub mod chpt;
pub mod coeffs;
pub mod error;
pub mod maps;
pub mod optim;
pub mod rays;
pub mod spectra;
pub mod symmetry;
pub mod tensor;

pub use bounds::{membership, region_scan, BoundReport, RegionScan, Verdict};
pub use coeffs::{coeffs_from_json, coeffs_to_json, from_coeffs, to_coeffs, CoeffVector};
pub use error::{Error, Result};
pub use rays::{classify, ray_type1, ray_type2, ray_type3, Classification, ExtremalRay};
pub use spectra::{face_space, in_cone, is_extremal};
pub use tensor::{dim_w, project_w, CrossingTensor, FlavorDim};
