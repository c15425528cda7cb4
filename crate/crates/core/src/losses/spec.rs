use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default generalized cross-entropy parameter.
pub const DEFAULT_ALPHA: f64 = 0.7;
/// Default margin of the rho-margin losses.
pub const DEFAULT_RHO: f64 = 1.0;

/// Base-loss family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    CompSum,
    Sum,
    Constrained,
}

/// Which base loss drives the deferral surrogate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SurrogateSpec {
    CompSumExp,
    CompSumLog,
    CompSumGce { alpha: f64 },
    CompSumMae,
    SumSq,
    SumExp,
    SumRho { rho: f64 },
    ConstrainedHinge,
    ConstrainedSq,
    ConstrainedExp,
    ConstrainedRho { rho: f64 },
}

const VALID_TOKENS: &str = "comp_sum:exp, comp_sum:log, comp_sum:gce(alpha=A), comp_sum:mae, \
sum:sq, sum:exp, sum:rho(rho=R), constrained:hinge, constrained:sq, constrained:exp, \
constrained:rho(rho=R)";

impl SurrogateSpec {
    /// The eleven shipped variants with default parameters.
    pub fn all() -> Vec<SurrogateSpec> {
        use SurrogateSpec::*;
        vec![
            CompSumExp,
            CompSumLog,
            CompSumGce {
                alpha: DEFAULT_ALPHA,
            },
            CompSumMae,
            SumSq,
            SumExp,
            SumRho { rho: DEFAULT_RHO },
            ConstrainedHinge,
            ConstrainedSq,
            ConstrainedExp,
            ConstrainedRho { rho: DEFAULT_RHO },
        ]
    }

    pub fn family(&self) -> Family {
        use SurrogateSpec::*;
        match self {
            CompSumExp | CompSumLog | CompSumGce { .. } | CompSumMae => Family::CompSum,
            SumSq | SumExp | SumRho { .. } => Family::Sum,
            ConstrainedHinge | ConstrainedSq | ConstrainedExp | ConstrainedRho { .. } => {
                Family::Constrained
            }
        }
    }

    /// Whether scores must satisfy the zero-sum constraint.
    pub fn is_constrained(&self) -> bool {
        self.family() == Family::Constrained
    }

    /// Whether the base loss is convex in the scores.
    pub fn is_convex(&self) -> bool {
        use SurrogateSpec::*;
        matches!(
            self,
            CompSumExp | CompSumLog | SumSq | SumExp | ConstrainedHinge | ConstrainedSq
                | ConstrainedExp
        )
    }

    /// Whether the base loss is bounded above on all score vectors.
    pub fn is_bounded(&self) -> bool {
        use SurrogateSpec::*;
        matches!(
            self,
            CompSumGce { .. } | CompSumMae | SumRho { .. } | ConstrainedRho { .. }
        )
    }

    fn variant_name(&self) -> &'static str {
        use SurrogateSpec::*;
        match self {
            CompSumExp | SumExp | ConstrainedExp => "exp",
            CompSumLog => "log",
            CompSumGce { .. } => "gce",
            CompSumMae => "mae",
            SumSq | ConstrainedSq => "sq",
            SumRho { .. } | ConstrainedRho { .. } => "rho",
            ConstrainedHinge => "hinge",
        }
    }

    fn family_name(&self) -> &'static str {
        match self.family() {
            Family::CompSum => "comp_sum",
            Family::Sum => "sum",
            Family::Constrained => "constrained",
        }
    }
}

impl fmt::Display for SurrogateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.family_name(), self.variant_name())?;
        match self {
            SurrogateSpec::CompSumGce { alpha } => write!(f, "(alpha={alpha:?})"),
            SurrogateSpec::SumRho { rho } | SurrogateSpec::ConstrainedRho { rho } => {
                write!(f, "(rho={rho:?})")
            }
            _ => Ok(()),
        }
    }
}

fn parse_error(token: &str, reason: impl Into<String>) -> Error {
    Error::SpecParse {
        token: token.to_string(),
        reason: reason.into(),
        valid: VALID_TOKENS.to_string(),
    }
}

fn parse_parameter(token: &str, body: &str, name: &str) -> Result<f64> {
    let (key, value) = body
        .split_once('=')
        .ok_or_else(|| parse_error(token, format!("expected `{name}=<value>`")))?;
    if key.trim() != name {
        return Err(parse_error(
            token,
            format!("unknown parameter `{}` (expected `{name}`)", key.trim()),
        ));
    }
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| parse_error(token, format!("`{}` is not a number", value.trim())))
}

impl FromStr for SurrogateSpec {
    type Err = Error;

    fn from_str(token: &str) -> Result<Self> {
        let trimmed = token.trim();
        let (head, params) = match trimmed.split_once('(') {
            Some((head, rest)) => {
                let inner = rest
                    .strip_suffix(')')
                    .ok_or_else(|| parse_error(token, "unbalanced parenthesis"))?;
                (head, Some(inner))
            }
            None => (trimmed, None),
        };
        let (family, variant) = head
            .split_once(':')
            .ok_or_else(|| parse_error(token, "expected `family:variant`"))?;
        let no_params = |spec: SurrogateSpec| match params {
            None => Ok(spec),
            Some(_) => Err(parse_error(token, "this variant takes no parameters")),
        };
        let spec = match (family.trim(), variant.trim()) {
            ("comp_sum", "exp") => no_params(SurrogateSpec::CompSumExp)?,
            ("comp_sum", "log") => no_params(SurrogateSpec::CompSumLog)?,
            ("comp_sum", "mae") => no_params(SurrogateSpec::CompSumMae)?,
            ("comp_sum", "gce") => {
                let alpha = match params {
                    Some(body) => parse_parameter(token, body, "alpha")?,
                    None => DEFAULT_ALPHA,
                };
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(parse_error(token, "alpha must lie in (0, 1]"));
                }
                SurrogateSpec::CompSumGce { alpha }
            }
            ("sum", "sq") => no_params(SurrogateSpec::SumSq)?,
            ("sum", "exp") => no_params(SurrogateSpec::SumExp)?,
            ("constrained", "hinge") => no_params(SurrogateSpec::ConstrainedHinge)?,
            ("constrained", "sq") => no_params(SurrogateSpec::ConstrainedSq)?,
            ("constrained", "exp") => no_params(SurrogateSpec::ConstrainedExp)?,
            (fam @ ("sum" | "constrained"), "rho") => {
                let rho = match params {
                    Some(body) => parse_parameter(token, body, "rho")?,
                    None => DEFAULT_RHO,
                };
                if !(rho > 0.0 && rho.is_finite()) {
                    return Err(parse_error(token, "rho must be positive"));
                }
                if fam == "sum" {
                    SurrogateSpec::SumRho { rho }
                } else {
                    SurrogateSpec::ConstrainedRho { rho }
                }
            }
            _ => return Err(parse_error(token, "unknown family or variant")),
        };
        Ok(spec)
    }
}

impl TryFrom<String> for SurrogateSpec {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<SurrogateSpec> for String {
    fn from(spec: SurrogateSpec) -> String {
        spec.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_round_trip() {
        for spec in SurrogateSpec::all() {
            let token = spec.to_string();
            assert_eq!(token.parse::<SurrogateSpec>().unwrap(), spec, "{token}");
        }
        assert_eq!(
            SurrogateSpec::all()[2].to_string(),
            "comp_sum:gce(alpha=0.7)"
        );
        assert_eq!(SurrogateSpec::all()[6].to_string(), "sum:rho(rho=1.0)");
    }

    #[test]
    fn parses_parameters_and_defaults() {
        assert_eq!(
            "comp_sum:gce".parse::<SurrogateSpec>().unwrap(),
            SurrogateSpec::CompSumGce { alpha: 0.7 }
        );
        assert_eq!(
            "constrained:rho(rho=2.5)".parse::<SurrogateSpec>().unwrap(),
            SurrogateSpec::ConstrainedRho { rho: 2.5 }
        );
        assert_eq!(
            " sum:rho( rho = 0.5 ) ".parse::<SurrogateSpec>().unwrap(),
            SurrogateSpec::SumRho { rho: 0.5 }
        );
    }

    #[test]
    fn rejects_bad_tokens_with_valid_list() {
        for bad in [
            "comp_sum:lgo",
            "comp_sum",
            "sum:hinge",
            "comp_sum:log(alpha=0.5)",
            "comp_sum:gce(alpha=1.5)",
            "comp_sum:gce(beta=0.5)",
            "sum:rho(rho=-1)",
            "sum:rho(rho=1",
        ] {
            let err = bad.parse::<SurrogateSpec>().unwrap_err();
            assert!(err.to_string().contains("constrained:hinge"), "{bad}: {err}");
        }
    }

    #[test]
    fn serde_uses_tokens() {
        let json = serde_json::to_string(&SurrogateSpec::CompSumGce { alpha: 0.5 }).unwrap();
        assert_eq!(json, "\"comp_sum:gce(alpha=0.5)\"");
        let back: SurrogateSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, SurrogateSpec::CompSumGce { alpha: 0.5 });
        assert!(serde_json::from_str::<SurrogateSpec>("\"sum:nope\"").is_err());
    }
}
