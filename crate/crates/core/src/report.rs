//! CSV output.

use std::fmt::Write;

use crate::analysis::{self, BoundReport, CheckReport, LowerBoundLine, KINF_PANELS};
use crate::empirical::kinf_atoms;
use crate::error::{invalid, Result};
use crate::policy::PolicySpec;
use crate::simulator::{RegretSummary, Scenario};

pub const RUN_HEADER: &str = "checkpoint,policy,mean_regret,q0005,q0995,q09995,lower_bound";

/// Nine significant digits; plain notation for moderate magnitudes.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        format!("{:.*}", (8 - exp).max(0) as usize, x)
    } else {
        format!("{x:.8e}")
    }
}

/// Regret table sorted by policy label, then checkpoint. The last column is
/// empty when no lower bound is available.
pub fn run_csv(summaries: &[RegretSummary], lower: Option<&LowerBoundLine>) -> String {
    let mut order: Vec<&RegretSummary> = summaries.iter().collect();
    order.sort_by(|a, b| a.label.cmp(&b.label));
    let mut out = String::from(RUN_HEADER);
    out.push('\n');
    for s in order {
        for (i, &t) in s.checkpoints.iter().enumerate() {
            let lb = lower.map(|l| format_sig(l.at(t))).unwrap_or_default();
            writeln!(
                out,
                "{t},{},{},{},{},{},{lb}",
                s.label,
                format_sig(s.mean[i]),
                format_sig(s.q0005[i]),
                format_sig(s.q0995[i]),
                format_sig(s.q09995[i]),
            )
            .unwrap();
        }
    }
    out
}

/// One `arm,term,value` line.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    /// 1-based arm number.
    pub arm: usize,
    pub term: String,
    pub value: f64,
}

pub fn bounds_csv(rows: &[BoundRow]) -> String {
    let mut out = String::from("arm,term,value\n");
    for r in rows {
        writeln!(out, "{},{},{}", r.arm, r.term, format_sig(r.value)).unwrap();
    }
    out
}

fn push_report(rows: &mut Vec<BoundRow>, arm: usize, prefix: &str, report: &BoundReport) {
    for term in report.terms() {
        rows.push(BoundRow { arm, term: format!("{prefix}/{}", term.label), value: term.value });
    }
    rows.push(BoundRow { arm, term: format!("{prefix}/total"), value: report.total });
    rows.push(BoundRow { arm, term: format!("{prefix}/regret"), value: report.regret_contribution });
}

/// Finite-time bounds on the pulls of every suboptimal arm, once per distinct
/// analysis among the policies: the kl-UCB bound for each kl-UCB divergence,
/// the quadratic bound for UCB, and the `log T / K_inf` leading term for
/// empirical KL-UCB. UCB-V and UCB-Tuned contribute nothing.
pub fn bound_rows(scenario: &Scenario, policies: &[PolicySpec]) -> Result<Vec<BoundRow>> {
    let raw = scenario.means();
    let b = scenario.rescale_bound;
    let scaled: Vec<f64> = raw.iter().map(|m| m / b).collect();
    let best = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let horizon = scenario.horizon as f64;
    let suboptimal: Vec<usize> = (0..raw.len()).filter(|&a| raw[a] < best).collect();

    let mut seen: Vec<String> = Vec::new();
    let mut rows = Vec::new();
    for policy in policies {
        let prefix = match policy {
            PolicySpec::KlUcb { divergence, .. } => format!("klucb/{divergence}"),
            PolicySpec::Ucb { .. } => "hoeffding".to_string(),
            PolicySpec::EmpiricalKlUcb { .. } => "kinf".to_string(),
            PolicySpec::UcbV | PolicySpec::UcbTuned => continue,
        };
        if seen.contains(&prefix) {
            continue;
        }
        seen.push(prefix.clone());
        for &a in &suboptimal {
            let context = |e: crate::Error| invalid(format!("{prefix} bound for arm {}: {e}", a + 1));
            match policy {
                PolicySpec::KlUcb { divergence, .. } => {
                    let means = if policy.is_rescaled() { &scaled } else { &raw };
                    let star = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let report = analysis::klucb_pull_bound(horizon, means[a], star, divergence).map_err(context)?;
                    push_report(&mut rows, a + 1, &prefix, &report);
                }
                PolicySpec::Ucb { .. } => {
                    let star = best / b;
                    let report = analysis::hoeffding_pull_bound(horizon, scaled[a], star).map_err(context)?;
                    push_report(&mut rows, a + 1, &prefix, &report);
                }
                PolicySpec::EmpiricalKlUcb { .. } => {
                    let (values, weights) = scenario.arms[a]
                        .atoms(b, KINF_PANELS)
                        .ok_or_else(|| invalid(format!("arm {} is unbounded; no K_inf", a + 1)))?;
                    let kinf = kinf_atoms(&values, &weights, best / b).map_err(context)?.value;
                    let leading = analysis::empirical_leading_term(horizon, kinf).map_err(context)?;
                    rows.push(BoundRow { arm: a + 1, term: format!("{prefix}/leading"), value: leading });
                    rows.push(BoundRow { arm: a + 1, term: format!("{prefix}/regret"), value: (best - raw[a]) * leading });
                }
                PolicySpec::UcbV | PolicySpec::UcbTuned => unreachable!(),
            }
        }
    }
    Ok(rows)
}

/// Header plus one row.
pub fn check_csv(report: &CheckReport) -> String {
    format!("empirical,bound\n{},{}\n", format_sig(report.empirical), format_sig(report.bound))
}
