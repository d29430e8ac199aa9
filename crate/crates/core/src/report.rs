//! Table rendering for audit results: one row per split round with the
//! per-group accuracy estimates, the two unfairness levels, the component
//! p-values, and the combined p-value; then a median line with the
//! verdict. Utilities print with 2 decimals, p-values with 4; fields that
//! a failed round never produced print as an em dash.

use crate::procedure::{ProcedureResult, SweepGrid};

/// The same table as machine-readable CSV and aligned text.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedReport {
    pub csv: String,
    pub text: String,
}

const CSV_HEADER: &str = "round,candidate,acc_r_candidate,acc_r_status_quo,p_r,\
acc_b_candidate,acc_b_status_quo,p_b,unfairness_candidate,unfairness_status_quo,p_f,p";

const MISSING: &str = "—";

fn fmt_util(v: f64) -> String {
    format!("{v:.2}")
}

fn fmt_p(v: f64) -> String {
    format!("{v:.4}")
}

/// Renders a procedure result as CSV plus aligned text.
pub fn render_report(result: &ProcedureResult) -> RenderedReport {
    let mut rows: Vec<[String; 12]> = Vec::with_capacity(result.rounds.len());
    for r in &result.rounds {
        let round = (r.round + 1).to_string();
        match &r.outcome {
            Some(o) => rows.push([
                round,
                r.candidate.clone(),
                fmt_util(o.estimates.accuracy[1][0]),
                fmt_util(o.estimates.accuracy[0][0]),
                fmt_p(o.p_r),
                fmt_util(o.estimates.accuracy[1][1]),
                fmt_util(o.estimates.accuracy[0][1]),
                fmt_p(o.p_b),
                fmt_util(o.estimates.unfairness(1)),
                fmt_util(o.estimates.unfairness(0)),
                fmt_p(o.p_f),
                fmt_p(o.p),
            ]),
            None => {
                let why = r.failure.clone().unwrap_or_else(|| MISSING.into());
                rows.push([
                    round,
                    why,
                    MISSING.into(),
                    MISSING.into(),
                    MISSING.into(),
                    MISSING.into(),
                    MISSING.into(),
                    MISSING.into(),
                    MISSING.into(),
                    MISSING.into(),
                    MISSING.into(),
                    fmt_p(r.p_value),
                ]);
            }
        }
    }

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        let escaped: Vec<String> = row
            .iter()
            .map(|f| {
                if f.contains(',') || f.contains('"') {
                    format!("\"{}\"", f.replace('"', "\"\""))
                } else {
                    f.clone()
                }
            })
            .collect();
        csv.push_str(&escaped.join(","));
        csv.push('\n');
    }
    csv.push_str(&format!(
        "median,,,,,,,,,,,{}\nverdict,,,,,,,,,,,{}\n",
        fmt_p(result.p_med),
        if result.reject { "reject" } else { "no-rejection" }
    ));

    let headers = [
        "round",
        "candidate",
        "acc-r a1",
        "acc-r a0",
        "p_r",
        "acc-b a1",
        "acc-b a0",
        "p_b",
        "unfair a1",
        "unfair a0",
        "p_f",
        "p",
    ];
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, f) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(f.chars().count());
        }
    }
    let mut text = String::new();
    let mut line = Vec::new();
    for (h, w) in headers.iter().zip(&widths) {
        line.push(format!("{h:>w$}", w = w));
    }
    text.push_str(&line.join("  "));
    text.push('\n');
    for row in &rows {
        let mut line = Vec::new();
        for (f, w) in row.iter().zip(&widths) {
            let pad = w.saturating_sub(f.chars().count());
            line.push(format!("{}{}", " ".repeat(pad), f));
        }
        text.push_str(&line.join("  "));
        text.push('\n');
    }
    text.push_str(&format!(
        "median p-value: {}  ({} at alpha/2 = {})\n",
        fmt_p(result.p_med),
        if result.reject {
            "reject: an improvement is detectable"
        } else {
            "no rejection"
        },
        result.alpha / 2.0
    ));
    RenderedReport { csv, text }
}

/// Long-format CSV for a margin sweep: one row per grid cell.
pub fn render_sweep(grid: &SweepGrid) -> String {
    let mut out = String::from("delta_a,delta_f,p_med\n");
    for (i, da) in grid.delta_a.iter().enumerate() {
        for (j, df) in grid.delta_f.iter().enumerate() {
            out.push_str(&format!("{da},{df},{}\n", fmt_p(grid.p_med[i][j])));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::improvement::{ComponentStatistics, DeltaTriple, TestOutcome};
    use crate::procedure::RoundRecord;
    use crate::utility::UtilityEstimates;

    fn fixture() -> ProcedureResult {
        let estimates = UtilityEstimates {
            accuracy: [[6.33, 5.77], [7.44, 6.64]],
            fairness: [[6.33, 5.77], [7.44, 6.64]],
        };
        let outcome = TestOutcome {
            p_r: 0.0,
            p_b: 0.00005,
            p_f: 0.0001,
            p: 0.0001,
            reject_r: true,
            reject_b: true,
            reject_f: true,
            reject: true,
            estimates,
            statistics: ComponentStatistics {
                t_r: 1.11,
                t_b: 0.87,
                t_f: -0.24,
                ell: 100,
            },
            delta: DeltaTriple::ZERO,
            alpha: 0.05,
        };
        ProcedureResult {
            rounds: vec![
                RoundRecord {
                    round: 0,
                    candidate: "ols score > 1.250000".into(),
                    outcome: Some(outcome),
                    failure: None,
                    p_value: 0.0001,
                },
                RoundRecord {
                    round: 1,
                    candidate: "—".into(),
                    outcome: None,
                    failure: Some("selection failed: candidate search is infeasible".into()),
                    p_value: 1.0,
                },
            ],
            p_med: 0.0001,
            reject: true,
            alpha: 0.05,
            delta: DeltaTriple::ZERO,
        }
    }

    #[test]
    fn utilities_use_two_decimals_and_pvalues_four() {
        let rep = render_report(&fixture());
        assert!(rep.csv.contains("7.44"));
        assert!(rep.csv.contains("6.33"));
        assert!(rep.csv.contains("0.0001"));
        assert!(rep.csv.starts_with(CSV_HEADER));
    }

    #[test]
    fn failed_rounds_render_as_dashes_with_unit_p() {
        let rep = render_report(&fixture());
        let failed_line = rep
            .csv
            .lines()
            .find(|l| l.starts_with("2,"))
            .expect("round 2 present");
        assert!(failed_line.contains(MISSING));
        assert!(failed_line.ends_with("1.0000"));
    }

    #[test]
    fn median_line_carries_the_verdict() {
        let rep = render_report(&fixture());
        assert!(rep.csv.contains("median,,,,,,,,,,,0.0001"));
        assert!(rep.csv.contains("verdict,,,,,,,,,,,reject"));
        assert!(rep.text.contains("median p-value: 0.0001"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let a = render_report(&fixture());
        let b = render_report(&fixture());
        assert_eq!(a, b);
    }
}
