//! Aggregate convergence summaries across repetitions.
//!
//! Histories have unevenly spaced cost axes, so repetitions are aligned on
//! the union of all cost points with step-function interpolation of the
//! incumbent trace.

use mfbo_core::campaign::BOHistory;

/// One row of the aggregate: spread of the best-HF trace at a cost level.
pub struct AggregateRow {
    pub cost: f64,
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub max: f64,
}

/// Build the per-cost-grid summary. Grid points where some repetition has
/// no HF observation yet are dropped.
pub fn convergence_summary(histories: &[BOHistory]) -> Vec<AggregateRow> {
    let mut grid: Vec<f64> = histories
        .iter()
        .flat_map(|h| h.records.iter().map(|r| r.cost_cumulative))
        .collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();

    // Step-interpolated incumbent per repetition: the last best_hf at cost
    // <= c.
    let traces: Vec<Vec<(f64, f64)>> = histories
        .iter()
        .map(|h| {
            h.records
                .iter()
                .filter_map(|r| r.best_hf.map(|b| (r.cost_cumulative, b)))
                .collect()
        })
        .collect();

    let mut rows = Vec::new();
    'grid: for &cost in &grid {
        let mut values = Vec::with_capacity(traces.len());
        for trace in &traces {
            let mut last = None;
            for &(c, b) in trace {
                if c <= cost + 1e-9 {
                    last = Some(b);
                } else {
                    break;
                }
            }
            match last {
                Some(v) => values.push(v),
                None => continue 'grid,
            }
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = values.len();
        let median = if n % 2 == 1 {
            values[n / 2]
        } else {
            0.5 * (values[n / 2 - 1] + values[n / 2])
        };
        rows.push(AggregateRow {
            cost,
            min: values[0],
            median,
            mean: values.iter().sum::<f64>() / n as f64,
            max: values[n - 1],
        });
    }
    rows
}

pub fn summary_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from("cost,best_hf_min,best_hf_median,best_hf_mean,best_hf_max\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.cost, r.min, r.median, r.mean, r.max
        ));
    }
    out
}
