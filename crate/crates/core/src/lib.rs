//! Finite metric and ultrametric spaces and the denseness constructions on them:
//! distances between metrics, quantitative moduli for doubling, uniform
//! disconnectedness and uniform perfectness, amalgamation and extension,
//! truncated Cantor spaces, and approximation pipelines that move a metric by
//! at most a few `eps` while giving it a chosen property profile.
//!
//! ```
//! use metric_dense::space::FiniteMetricSpace;
//! use metric_dense::moduli::{classify, Thresholds};
//!
//! let line = FiniteMetricSpace::arithmetic_progression(9, 1.0).unwrap();
//! let t = classify(&line, &Thresholds::default(), None).unwrap();
//! assert_eq!(t.measured.delta_star, 1.0 / 8.0);
//! ```

pub mod build;
pub mod cantor;
pub mod error;
pub mod lab;
pub mod moduli;
pub mod space;

pub use error::{Error, Result};
pub use space::{FiniteMetricSpace, Flavor};
