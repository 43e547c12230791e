use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EstimandDraws, PosteriorDraws};
use crate::stats;

/// Posterior median, central 95% interval and split-R-hat of one column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryRow {
    pub median: f64,
    pub ci95: [f64; 2],
    pub rhat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub estimands: BTreeMap<String, SummaryRow>,
    pub parameters: BTreeMap<String, SummaryRow>,
}

fn by_chain(chain: &[usize], values: &[f64]) -> Vec<Vec<f64>> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (&c, &v) in chain.iter().zip(values) {
        groups.entry(c).or_default().push(v);
    }
    groups.into_values().collect()
}

/// One row per column; R-hat is `None` with fewer than two chains.
pub fn summarize_columns(chain: &[usize], columns: &BTreeMap<String, Vec<f64>>) -> BTreeMap<String, SummaryRow> {
    columns
        .iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(name, values)| {
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let groups = by_chain(chain, values);
            let refs: Vec<&[f64]> = groups.iter().map(Vec::as_slice).collect();
            let row = SummaryRow {
                median: stats::quantile_sorted(&sorted, 0.5),
                ci95: [stats::quantile_sorted(&sorted, 0.025), stats::quantile_sorted(&sorted, 0.975)],
                rhat: stats::split_rhat(&refs).filter(|r| r.is_finite()),
            };
            (name.clone(), row)
        })
        .collect()
}

pub fn summarize(draws: &PosteriorDraws, estimands: &EstimandDraws) -> Summary {
    Summary {
        estimands: summarize_columns(&estimands.chain, &estimands.columns()),
        parameters: summarize_columns(&draws.chain, &draws.columns),
    }
}
