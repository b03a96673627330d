//! Sufficient conditions for identifiability of the mixture given `f0` and,
//! optionally, a fitted log-concave `f`.

use serde::{Deserialize, Serialize};

use crate::density::KnownComponentSpec;
use crate::logconcave::LogConcaveFit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Identifiable for every log-concave `f`.
    Identifiable,
    ConditionHolds,
    ConditionFails,
    Inconclusive,
}

impl Verdict {
    fn rank(self) -> u8 {
        match self {
            Verdict::Identifiable => 3,
            Verdict::ConditionHolds => 2,
            Verdict::Inconclusive => 1,
            Verdict::ConditionFails => 0,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Identifiable => "identifiable",
            Verdict::ConditionHolds => "condition holds",
            Verdict::ConditionFails => "condition fails",
            Verdict::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    HeavyTail,
    SupportContainment,
    NormalTail,
    ExponentialTail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseReport {
    pub clause: Clause,
    pub verdict: Verdict,
    pub condition: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifiabilityReport {
    pub verdict: Verdict,
    pub clauses: Vec<ClauseReport>,
}

impl IdentifiabilityReport {
    fn from_clauses(clauses: Vec<ClauseReport>) -> Self {
        let verdict = clauses
            .iter()
            .map(|c| c.verdict)
            .max_by_key(|v| v.rank())
            .unwrap_or(Verdict::Inconclusive);
        IdentifiabilityReport { verdict, clauses }
    }

    pub fn clause(&self, clause: Clause) -> Option<&ClauseReport> {
        self.clauses.iter().find(|c| c.clause == clause)
    }
}

fn support_clause(f0: &KnownComponentSpec, fit: Option<&LogConcaveFit>) -> ClauseReport {
    let (a, b) = f0.support();
    let condition = format!(
        "supp f strictly inside supp f0 = [{a}, {b}] with smaller Lebesgue measure"
    );
    let (verdict, detail) = match fit {
        None => (Verdict::Inconclusive, "no fitted density supplied".to_string()),
        Some(fit) => {
            let (lo, hi) = fit.support();
            let contained = a <= lo && hi <= b;
            let smaller = hi - lo < b - a;
            let verdict = if contained && smaller {
                Verdict::ConditionHolds
            } else {
                Verdict::ConditionFails
            };
            (verdict, format!("fitted support [{lo}, {hi}]"))
        }
    };
    ClauseReport {
        clause: Clause::SupportContainment,
        verdict,
        condition,
        detail,
    }
}

/// Evaluates the sufficient conditions that apply to `f0`.
///
/// The overall verdict is the strongest clause verdict, ordered
/// `Identifiable > ConditionHolds > Inconclusive > ConditionFails`.
pub fn check_identifiability(f0: &KnownComponentSpec, fit: Option<&LogConcaveFit>) -> IdentifiabilityReport {
    let clauses = match f0 {
        KnownComponentSpec::StudentT { nu } => vec![ClauseReport {
            clause: Clause::HeavyTail,
            verdict: Verdict::Identifiable,
            condition: "log f0(x) = O(|x|^k) for some 0 < k < 1".to_string(),
            detail: format!("log f0(x) ~ -{}·log|x| for t with nu = {nu}", (nu + 1.0) / 2.0),
        }],
        KnownComponentSpec::Uniform { .. } | KnownComponentSpec::Tabulated(_) => {
            vec![support_clause(f0, fit)]
        }
        KnownComponentSpec::Normal { sigma, .. } => {
            let detail = match fit {
                Some(fit) => {
                    let (lo, hi) = fit.support();
                    format!("phi = -inf outside [{lo}, {hi}]")
                }
                None => "log-concave MLEs are supported on the sample range".to_string(),
            };
            vec![
                ClauseReport {
                    clause: Clause::NormalTail,
                    verdict: Verdict::ConditionHolds,
                    condition: format!(
                        "lim phi(x)/x^2 < -1/(2 sigma^2) = {} as x -> +inf or x -> -inf",
                        -1.0 / (2.0 * sigma * sigma)
                    ),
                    detail,
                },
                support_clause(f0, fit),
            ]
        }
        KnownComponentSpec::Exponential { lambda } => {
            let condition = format!("lim phi(x)/x < -lambda = {} as x -> +inf", -lambda);
            let tail = match fit {
                None => ClauseReport {
                    clause: Clause::ExponentialTail,
                    verdict: Verdict::Inconclusive,
                    condition,
                    detail: "no fitted density supplied".to_string(),
                },
                Some(fit) => {
                    let last = fit.slopes().last().copied().unwrap_or(f64::NAN);
                    ClauseReport {
                        clause: Clause::ExponentialTail,
                        verdict: if last < -lambda {
                            Verdict::ConditionHolds
                        } else {
                            Verdict::ConditionFails
                        },
                        condition,
                        detail: format!("rightmost fitted slope {last}"),
                    }
                }
            };
            vec![tail, support_clause(f0, fit)]
        }
    };
    IdentifiabilityReport::from_clauses(clauses)
}
