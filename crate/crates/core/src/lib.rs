//! Unsupervised classification with a pool of valley-seeking hyperplanes.
//!
//! A pool of hyperplanes is spread over the feature domain and updated online,
//! one sample at a time. Each plane shifts and rotates away from nearby
//! samples, so it drifts out of dense regions and settles in the low-density
//! valleys between classes. After training, a small labelled set maps planes
//! to class labels ([`headmap`]).
//!
//! The remaining modules provide the experiment harness: seeded Gaussian
//! mixtures ([`synthdata`]), kNN and k-Means references ([`baselines`]),
//! metrics ([`evalkit`]) and the command-line driver ([`cli`]).

pub mod baselines;
pub mod cli;
pub mod error;
pub mod evalkit;
pub mod headmap;
pub mod learner;
pub mod rng;
pub mod synthdata;
pub mod vecgeom;

pub use error::{Error, Result};
pub use headmap::{associate_labels, AssociationConfig, ClassHead, HeadSet, Weighting};
pub use learner::{DomainBox, Hyperplane, LearnerConfig, Pool};
pub use synthdata::{LabeledSample, MixtureSpec};

/// Class label as written in sample files.
pub type Label = i64;
