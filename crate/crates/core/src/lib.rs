//! Forecasting monthly health indicators of open-source projects.
//!
//! This crate holds the allocation-only algorithmic core: the monthly feature
//! schema and its supervised/horizon transforms, from-scratch regression
//! learners (CART, KNN, OLS, random forest), the differential-evolution tuner
//! and DECART, the MRE/SA metrics and the effect-size based comparison of
//! learners. Everything that touches the filesystem or the network lives in
//! the `healthcast` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod analysis;
pub mod data;
pub mod learners;
pub mod metrics;
pub mod tuning;

pub use data::{
    Feature, HorizonSplit, IndicatorId, MonthlyRecord, ProjectSeries, SupervisedTable, TestPoint,
    YearMonth,
};
pub use learners::{CartHyperParams, LearnerKind, LearnerSpec, RegressionTree};
pub use metrics::{EvalPoint, MetricKind, MetricValue};
pub use tuning::{DeConfig, SearchBox};
