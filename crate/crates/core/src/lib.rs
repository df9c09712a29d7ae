//! Accident-severity modelling toolkit.
//!
//! The crate covers the whole tabular pipeline: a small columnar table with
//! explicit missing cells, the cleaning and feature-engineering steps for the
//! US-Accidents schema, hypothesis tests used for variable screening, seeded
//! partitioning and class rebalancing, CART trees and random forests with
//! Mean Decrease Gini importance, and confusion-matrix / ROC evaluation.

pub mod eval;
pub mod forest;
pub mod partition;
pub mod prep;
pub mod rng;
pub mod screening;
pub mod stats;
pub mod synth;
pub mod table;

mod error;

pub use error::{Error, Result};
pub use table::{Cell, Column, ColumnKind, ColumnSpec, ColumnTable};
