//! Unsupervised single-object tracking for long video sequences.
//!
//! The tracker runs a spatially and temporally regularized correlation
//! filter as its baseline and adds two modules on top of it:
//!
//! * lost-object recovery ([`motion`], [`recovery`]): background motion is
//!   compensated, the residual motion yields a second box proposal, and a
//!   trusted template arbitrates between the two;
//! * shape proposals ([`shape`]): color-saliency-seeded MRF segmentation with
//!   a superpixel fallback, fused with the location proposals by IoU.
//!
//! [`tracker::Tracker`] wires everything together per frame and [`bench`]
//! provides dataset I/O, synthetic sequences and DP/AUC scoring.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod dcf;
pub mod error;
pub mod features;
mod fft;
pub mod imaging;
pub mod motion;
pub mod recovery;
pub mod shape;
pub mod tracker;

pub use error::{Error, Result};
pub use imaging::{BoundingBox, Frame, ScalarMap};
pub use tracker::{Ablation, Tracker, TrackerConfig};
