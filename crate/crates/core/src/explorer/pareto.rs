//! Accuracy / efficiency Pareto frontier.

use std::cmp::Ordering;

/// A point to maximize on both axes.
pub trait Objectives {
    fn sqnr_db(&self) -> f64;
    fn efficiency(&self) -> f64;
}

/// `a` dominates `b`: no worse on both axes and strictly better on one.
pub fn dominates<T: Objectives>(a: &T, b: &T) -> bool {
    a.sqnr_db() >= b.sqnr_db()
        && a.efficiency() >= b.efficiency()
        && (a.sqnr_db() > b.sqnr_db() || a.efficiency() > b.efficiency())
}

/// Returns one flag per row: true iff no other row dominates it.
pub fn pareto_flags<T: Objectives>(rows: &[T]) -> Vec<bool> {
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| {
        rows[b]
            .efficiency()
            .partial_cmp(&rows[a].efficiency())
            .unwrap_or(Ordering::Equal)
    });

    let mut flags = vec![false; rows.len()];
    // best sqnr among rows with strictly higher efficiency
    let mut best_above = f64::NEG_INFINITY;
    let mut i = 0;
    while i < order.len() {
        let eff = rows[order[i]].efficiency();
        let mut j = i;
        while j < order.len() && rows[order[j]].efficiency() == eff {
            j += 1;
        }
        let tier = &order[i..j];
        let tier_best = tier
            .iter()
            .map(|&r| rows[r].sqnr_db())
            .fold(f64::NEG_INFINITY, f64::max);
        for &r in tier {
            let s = rows[r].sqnr_db();
            flags[r] = s >= tier_best && s > best_above;
        }
        best_above = best_above.max(tier_best);
        i = j;
    }
    flags
}
