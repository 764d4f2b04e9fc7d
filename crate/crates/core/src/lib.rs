//! Robust interval estimates under the Imprecise Dirichlet Model.
//!
//! Given category counts `n` and a prior strength `s`, the model's posterior
//! means form the set `{ (n + s t) / (n + s) : t in simplex }`. The crate
//! computes the range an estimator takes over that set:
//!
//! * [`exact`]: closed-form extremes for separable concave estimators, including
//!   the expected Shannon entropy.
//! * [`conservative`]: outer bounds and inner witnesses for any differentiable
//!   estimator, with propagation through sums and products.
//! * [`mutual_info`]: the expected mutual information of a contingency table.
//! * [`credible`]: credible intervals that hold under every prior in the set.
//! * [`oracle`]: grid scans and Monte-Carlo sampling used to check the above.
//!
//! ```
//! use idm_core::{entropy_interval_exact, Counts, IdmConfig};
//!
//! let counts = Counts::new(vec![3, 6]).unwrap();
//! let iv = entropy_interval_exact(&counts, &IdmConfig::new(1.0).unwrap());
//! assert!(iv.lower() < iv.upper());
//! ```

// `!(a <= b)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conservative;
pub mod credible;
pub mod error;
pub mod exact;
pub mod model;
pub mod mutual_info;
pub mod oracle;
pub mod special;

pub use conservative::{
    combine_product, combine_sum, residues_box, residues_concave, sandwich, IndexSpace, ResidueBundle, Sandwich,
};
pub use credible::{
    default_t_set, mean_plus_kappa_sigma, robust_credible_union, shortest_interval_from_samples, CredibleMethod,
    CredibleMode, CredibleSpec, PriorDetail, RobustCredibleResult,
};
pub use error::{IdmError, Result};
pub use exact::{
    entropy_interval_exact, exact_interval, exact_max_point, exact_min_vertex, expected_entropy, ExtremaWitness,
    SeparableConcave,
};
pub use model::{
    sigma, u_at_vertex, u_from_t, u_zero, Counts, IdmConfig, Interval, IntervalKind, Region, TVector, UPoint,
};
pub use mutual_info::{expected_mi, mi_crude_interval, mi_sandwich, JointCounts, TableDims, TensorT};
pub use oracle::{grid_extrema, mc_functional, GridSpec, McSpec, McSummary};
pub use special::{digamma, h, h_prime, kappa_from_alpha, trigamma, EntropyContext};
