//! Decomposition machinery, reduction theory and limit classification for
//! translates of homogeneous measures on `SL_n(ℤ)\SL_n(ℝ)` and products of
//! `SL_2`.

pub mod error;
pub mod identities;
pub mod rational;
pub mod limits;
pub mod lingrp;
pub mod measures;
pub mod reduction;
pub mod scenario;
pub mod rootsys;

pub use error::{Error, Result};
pub use rational::{Direction, Q};
pub use rootsys::{ChamberFace, RootSet, RootSystem, WeightVector, WeylElement};
pub use lingrp::{GroupElement, LanglandsParts, ParabolicIndex, RootValueVector};
pub use reduction::{ReducedPoint, SiegelSet};
pub use measures::{BoundaryHistogram, EmpiricalMeasure, SubgroupKind, SubgroupSpec};
pub use limits::{LimitDescriptor, SequenceSpec, SupportKind};
pub use scenario::{Report, Scenario, Verdict};
