//! Exploration functions `f(t)`; `f(t) / N_a(t)` is the KL radius of arm
//! `a`'s confidence region.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExplorationSchedule {
    /// `max(0, log t)`; the recommended practical choice.
    LogT,
    /// `log t + 3 log log t` for `t ≥ 3`, and `f(1) = f(2) = f(3)`.
    LogPlus3LogLog,
    /// `log t + log log t` for `t ≥ 2`, and `f(1) = f(2)`.
    LogPlusLogLog,
    /// Constant level, independent of `t`.
    Constant(f64),
}

impl ExplorationSchedule {
    pub fn at(&self, t: u64) -> f64 {
        match *self {
            Self::LogT => (t.max(1) as f64).ln(),
            Self::LogPlus3LogLog => {
                let t = t.max(3) as f64;
                t.ln() + 3.0 * t.ln().ln()
            }
            Self::LogPlusLogLog => {
                let t = t.max(2) as f64;
                t.ln() + t.ln().ln()
            }
            Self::Constant(v) => v,
        }
    }
}

impl fmt::Display for ExplorationSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LogT => f.write_str("logt"),
            Self::LogPlus3LogLog => f.write_str("log3loglog"),
            Self::LogPlusLogLog => f.write_str("logloglog"),
            Self::Constant(v) => write!(f, "const:{v}"),
        }
    }
}

impl FromStr for ExplorationSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "logt" => Ok(Self::LogT),
            "log3loglog" => Ok(Self::LogPlus3LogLog),
            "logloglog" => Ok(Self::LogPlusLogLog),
            other => match other.strip_prefix("const:") {
                Some(v) => {
                    let v: f64 = v
                        .parse()
                        .map_err(|_| invalid(format!("bad constant schedule level '{v}'")))?;
                    if !(v.is_finite() && v >= 0.0) {
                        return Err(invalid(format!("schedule level must be finite and >= 0, got {v}")));
                    }
                    Ok(Self::Constant(v))
                }
                None => Err(invalid(format!(
                    "unknown schedule '{other}' (expected logt, log3loglog, logloglog or const:<v>)"
                ))),
            },
        }
    }
}
