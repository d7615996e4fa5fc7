use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::channel::Channel;
use crate::error::{invalid, Result};

/// Budgets of a binary domain `{0, 1}`: `eps12` bounds `Q(.|0) / Q(.|1)`
/// and `eps21` bounds `Q(.|1) / Q(.|0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryMechanismParams {
    pub eps12: Budget,
    pub eps21: Budget,
}

impl BinaryMechanismParams {
    pub fn new(eps12: Budget, eps21: Budget) -> Result<Self> {
        for b in [eps12, eps21] {
            if let Budget::Finite(v) = b {
                if !(v > 0.0) {
                    return Err(invalid(format!("binary budgets must be positive, got {v}")));
                }
            }
        }
        Ok(BinaryMechanismParams { eps12, eps21 })
    }

    pub fn symmetric(eps: f64) -> Result<Self> {
        Self::new(Budget::new(eps)?, Budget::new(eps)?)
    }
}

/// Warner's randomized response, `1/(e^eps+1) [[e^eps, 1], [1, e^eps]]`.
pub fn warner(eps: f64) -> Result<Channel> {
    super::check_eps(eps)?;
    let e = eps.exp();
    let keep = e / (e + 1.0);
    let flip = 1.0 / (e + 1.0);
    Channel::new(vec![vec![keep, flip], vec![flip, keep]])
}

/// Mangat's improved response `[[1-p, p], [0, 1]]` with `p = e^{-eps21}`.
pub fn mangat(eps21: f64) -> Result<Channel> {
    super::check_eps(eps21)?;
    let p = (-eps21).exp();
    Channel::new(vec![vec![1.0 - p, p], vec![0.0, 1.0]])
}

/// Finite-budget closed form, rows indexed by input.
fn general_rows(eps12: f64, eps21: f64) -> [[f64; 2]; 2] {
    let a = eps21.exp_m1(); // e^{eps21} - 1
    let b = -(-eps12).exp_m1(); // 1 - e^{-eps12}
    let denom = a + b; // e^{eps21} - e^{-eps12}
    [
        [a / denom, b / denom],
        [(-eps12).exp() * a / denom, eps21.exp() * b / denom],
    ]
}

/// The optimal binary mechanism for the given budgets.
///
/// Equal budgets give Warner's matrix and `eps12 = inf` gives Mangat's, both
/// evaluated in their closed forms. `eps12 = eps21 = inf` is the identity.
/// Only `eps12` may be unbounded on its own.
pub fn binary_optimal_channel(params: BinaryMechanismParams) -> Result<Channel> {
    let params = BinaryMechanismParams::new(params.eps12, params.eps21)?;
    match (params.eps12, params.eps21) {
        (Budget::Unbounded, Budget::Unbounded) => {
            log::warn!("both binary budgets unbounded; returning the identity channel");
            Channel::identity(2)
        }
        (Budget::Unbounded, Budget::Finite(eps21)) => mangat(eps21),
        (Budget::Finite(_), Budget::Unbounded) => Err(invalid(
            "eps21 = inf is only supported together with eps12 = inf; relabel the inputs instead",
        )),
        (Budget::Finite(a), Budget::Finite(b)) if a == b => warner(a),
        (Budget::Finite(a), Budget::Finite(b)) => {
            let rows = general_rows(a, b);
            Channel::new(rows.iter().map(|r| r.to_vec()).collect())
        }
    }
}
