//! The restricted averaging operator `A_V f = (f * sigma)|_V`, its adjoint,
//! the constant/oscillatory decompositions, and `L^p -> L^r` norm estimates.

mod audit;
mod decomposition;
mod estimate;
mod operator;
mod search;

pub use audit::{restriction_l2_audit, split_estimate_audit, AuditCase, AuditResult, RestrictionAudit};
pub use decomposition::{decompose, Decomposition, Part};
pub use estimate::{
    boyd_iteration, norm_exact_p1, norm_exact_rinf, norm_exhaustive_indicators, norm_power_22,
    norm_svd_22, norm_upper_interp, witness_hash, BoydOptions, InputFamily, Method, NormEstimate,
    EXHAUSTIVE_LIMIT, GRAM_SIZE_LIMIT, SVD_ENTRY_LIMIT,
};
pub use operator::{ApplyPath, OutputNorm, RestrictedAveragingOperator};
pub use search::{
    norm_search, norm_search_class, random_set_sizes, CandidateClass, SearchOptions,
    HILL_CLIMB_LIMIT,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;

/// Estimator selection for `A_V(p -> r)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMethod {
    /// Exact formula when one applies, otherwise the full search.
    Auto,
    /// The `p = 1` or `r = inf` formula.
    Exact,
    Svd,
    PowerIteration,
    Exhaustive,
    Search,
    Delta,
    AdjointDelta,
    Subspace,
}

impl std::str::FromStr for NormMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => NormMethod::Auto,
            "exact" => NormMethod::Exact,
            "svd" => NormMethod::Svd,
            "power-iteration" => NormMethod::PowerIteration,
            "exhaustive" => NormMethod::Exhaustive,
            "search" => NormMethod::Search,
            "delta" => NormMethod::Delta,
            "adjoint-delta" => NormMethod::AdjointDelta,
            "subspace" => NormMethod::Subspace,
            other => return Err(Error::InvalidParameter(format!("unknown method {other}"))),
        })
    }
}

/// Dispatches to the requested estimator.
pub fn estimate_norm(
    op: &RestrictedAveragingOperator,
    p: Exponent,
    r: Exponent,
    method: NormMethod,
    options: &SearchOptions,
) -> Result<NormEstimate> {
    p.require_admissible()?;
    r.require_admissible()?;
    let strong = options.output == OutputNorm::Strong || r.is_infinite();
    match method {
        NormMethod::Auto => {
            if r.is_infinite() {
                norm_exact_rinf(op, p)
            } else if p == Exponent::ONE && strong {
                norm_exact_p1(op, r)
            } else if p == Exponent::TWO
                && r == Exponent::TWO
                && strong
                && options.family == InputFamily::General
                && (op.size() * op.grid_len() <= SVD_ENTRY_LIMIT || op.size() <= GRAM_SIZE_LIMIT)
            {
                norm_svd_22(op)
            } else if options.family == InputFamily::Indicators && op.grid_len() <= EXHAUSTIVE_LIMIT {
                norm_exhaustive_indicators(op, p, r, options.output)
            } else {
                norm_search(op, p, r, options)
            }
        }
        NormMethod::Exact => {
            if r.is_infinite() {
                norm_exact_rinf(op, p)
            } else if p == Exponent::ONE && strong {
                norm_exact_p1(op, r)
            } else {
                Err(Error::InvalidParameter(format!(
                    "no exact formula at (p, r) = ({p}, {r})"
                )))
            }
        }
        NormMethod::Svd => {
            if p != Exponent::TWO || r != Exponent::TWO {
                return Err(Error::InvalidParameter("svd applies to (2, 2) only".into()));
            }
            norm_svd_22(op)
        }
        NormMethod::PowerIteration => {
            if p != Exponent::TWO || r != Exponent::TWO {
                return Err(Error::InvalidParameter(
                    "power iteration applies to (2, 2) only".into(),
                ));
            }
            norm_power_22(op)
        }
        NormMethod::Exhaustive => norm_exhaustive_indicators(op, p, r, options.output),
        NormMethod::Search => norm_search(op, p, r, options),
        NormMethod::Delta => norm_search_class(op, p, r, options, CandidateClass::Delta),
        NormMethod::AdjointDelta => norm_search_class(op, p, r, options, CandidateClass::AdjointDelta),
        NormMethod::Subspace => norm_search_class(op, p, r, options, CandidateClass::Subspace),
    }
}
