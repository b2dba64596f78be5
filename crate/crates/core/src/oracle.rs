//! Membership oracles: the common currency between the ball constructions.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use crate::error::Result;
use crate::point::Point;

/// Tri-state membership answer. `Unknown` only comes from search-based or
/// inner-approximation oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Member,
    NonMember,
    Unknown,
}

impl Membership {
    pub fn from_bool(member: bool) -> Self {
        if member {
            Membership::Member
        } else {
            Membership::NonMember
        }
    }

    pub fn is_member(self) -> bool {
        self == Membership::Member
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Membership::Member => "member",
            Membership::NonMember => "non_member",
            Membership::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Membership {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which construction produced an oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Pick,
    SchurPerp,
    Idempotent,
    Generated,
    HcSample,
    Custom,
}

pub type MembershipFn = dyn Fn(&Point) -> Result<Membership> + Send + Sync;

/// A membership predicate on `C^k` with its metadata.
#[derive(Clone)]
pub struct BallOracle {
    k: usize,
    family: Family,
    tol: f64,
    membership: Arc<MembershipFn>,
}

impl BallOracle {
    pub fn new(
        k: usize,
        family: Family,
        tol: f64,
        membership: impl Fn(&Point) -> Result<Membership> + Send + Sync + 'static,
    ) -> Self {
        BallOracle {
            k,
            family,
            tol,
            membership: Arc::new(membership),
        }
    }

    /// The closed unit polydisk `max |w_i| <= 1 + tol`.
    pub fn polydisk(k: usize, tol: f64) -> Self {
        Self::new(k, Family::Pick, tol, move |w| {
            Ok(Membership::from_bool(w.max_abs() <= 1.0 + tol))
        })
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn with_family(mut self, family: Family) -> Self {
        self.family = family;
        self
    }

    pub fn membership(&self, w: &Point) -> Result<Membership> {
        w.check_dim(self.k)?;
        (self.membership)(w)
    }
}

impl fmt::Debug for BallOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BallOracle")
            .field("k", &self.k)
            .field("family", &self.family)
            .field("tol", &self.tol)
            .finish_non_exhaustive()
    }
}
