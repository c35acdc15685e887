//! Shape measurements on rate-region grids.
//!
//! Edges are where the unserved fraction first rises through a threshold,
//! linearly interpolated between the two grid points that bracket it. An
//! edge that is never crossed inside the grid is reported as `None`.

use super::sweep::RateGrid;

/// Unserved fraction below which a point counts as servable.
pub const LOW_UNSERVED: f64 = 0.10;

/// Noise allowance used by the monotonicity and dominance checks.
pub const NOISE_TOLERANCE: f64 = 0.05;

fn crossing(xs: &[f64], ys: &[f64], threshold: f64) -> Option<f64> {
    if ys.first().is_some_and(|&y| y >= threshold) {
        return xs.first().copied();
    }
    for k in 1..xs.len() {
        if ys[k] >= threshold {
            let (x0, x1, y0, y1) = (xs[k - 1], xs[k], ys[k - 1], ys[k]);
            return Some(x0 + (threshold - y0) / (y1 - y0) * (x1 - x0));
        }
    }
    None
}

/// Edge along beta1 with beta2 at its grid minimum.
pub fn edge_beta1(grid: &RateGrid, threshold: f64) -> Option<f64> {
    row_edge(grid, 0, threshold)
}

/// Edge along beta2 with beta1 at its grid minimum.
pub fn edge_beta2(grid: &RateGrid, threshold: f64) -> Option<f64> {
    let ys: Vec<f64> = (0..grid.beta2.len()).map(|i2| grid.get(0, i2)).collect();
    crossing(&grid.beta2, &ys, threshold)
}

/// Edge along beta1 at the `i2`-th value of beta2.
pub fn row_edge(grid: &RateGrid, i2: usize, threshold: f64) -> Option<f64> {
    let ys: Vec<f64> = (0..grid.beta1.len()).map(|i1| grid.get(i1, i2)).collect();
    crossing(&grid.beta1, &ys, threshold)
}

/// Cumulative demand `beta1 + beta2` at the edge along the equal-rate
/// diagonal. Needs a square grid with matching axes.
pub fn diagonal_edge(grid: &RateGrid, threshold: f64) -> Option<f64> {
    let n = grid.beta1.len().min(grid.beta2.len());
    let xs: Vec<f64> = (0..n).map(|i| grid.beta1[i] + grid.beta2[i]).collect();
    let ys: Vec<f64> = (0..n).map(|i| grid.get(i, i)).collect();
    crossing(&xs, &ys, threshold)
}

/// Cells `(i1, i2)` whose value is below `threshold`.
pub fn servable_cells(grid: &RateGrid, threshold: f64) -> Vec<(usize, usize)> {
    let (n1, n2) = grid.shape();
    (0..n1)
        .flat_map(|i1| (0..n2).map(move |i2| (i1, i2)))
        .filter(|&(i1, i2)| grid.get(i1, i2) < threshold)
        .collect()
}

/// Cells that are exceeded by `tol` by a cell at least two steps further
/// out along either axis. A drop to the immediate neighbour is tolerated
/// as single-cell noise.
pub fn monotonicity_violations(grid: &RateGrid, tol: f64) -> Vec<(usize, usize)> {
    let (n1, n2) = grid.shape();
    let mut bad = Vec::new();
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            let v = grid.get(i1, i2);
            let along1 = (i1 + 2..n1).any(|j| grid.get(j, i2) < v - tol);
            let along2 = (i2 + 2..n2).any(|j| grid.get(i1, j) < v - tol);
            if along1 || along2 {
                bad.push((i1, i2));
            }
        }
    }
    bad
}

/// Cells where `lower` exceeds `upper` by more than `tol` even after
/// allowing `upper` its largest value within one cell.
pub fn dominance_violations(lower: &RateGrid, upper: &RateGrid, tol: f64) -> Vec<(usize, usize)> {
    assert_eq!(lower.shape(), upper.shape(), "grids must have the same shape");
    let (n1, n2) = lower.shape();
    let mut bad = Vec::new();
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            let mut best = f64::NEG_INFINITY;
            for j1 in i1.saturating_sub(1)..=(i1 + 1).min(n1 - 1) {
                for j2 in i2.saturating_sub(1)..=(i2 + 1).min(n2 - 1) {
                    best = best.max(upper.get(j1, j2));
                }
            }
            if lower.get(i1, i2) > best + tol {
                bad.push((i1, i2));
            }
        }
    }
    bad
}

/// Least-squares slope of the row edges against beta2, over rows whose edge
/// lies inside the grid. A region bounded by `beta1 + beta2 = c` has
/// slope -1.
pub fn edge_slope(grid: &RateGrid, rows: impl IntoIterator<Item = usize>, threshold: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .into_iter()
        .filter_map(|i2| row_edge(grid, i2, threshold).map(|e| (grid.beta2[i2], e)))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(f: impl Fn(f64, f64) -> f64) -> RateGrid {
        let axis: Vec<f64> = (0..11).map(|i| i as f64 * 0.09).collect();
        let values = axis
            .iter()
            .flat_map(|&b1| axis.iter().map(move |&b2| (b1, b2)))
            .map(|(b1, b2)| f(b1, b2))
            .collect();
        RateGrid {
            beta1: axis.clone(),
            beta2: axis,
            values,
        }
    }

    // Unserved fraction of an ideal server with capacity c under load x.
    fn ramp(x: f64, c: f64) -> f64 {
        if x <= c {
            0.0
        } else {
            1.0 - c / x
        }
    }

    #[test]
    fn square_region() {
        let g = grid(|b1, b2| ramp(b1, 0.3).max(ramp(b2, 0.3)));
        // 1 - 0.3/x = 0.1 at x = 1/3.
        let e = edge_beta1(&g, LOW_UNSERVED).unwrap();
        assert!((e - 1.0 / 3.0).abs() < 0.01, "{e}");
        assert!((edge_beta2(&g, LOW_UNSERVED).unwrap() - e).abs() < 1e-12);
        assert!(monotonicity_violations(&g, NOISE_TOLERANCE).is_empty());
        let slope = edge_slope(&g, 0..4, LOW_UNSERVED).unwrap();
        assert!(slope.abs() < 1e-9);
    }

    #[test]
    fn diagonal_region() {
        let g = grid(|b1, b2| ramp(b1 + b2, 0.8).max(ramp(b1, 0.6)).max(ramp(b2, 0.6)));
        let d = diagonal_edge(&g, LOW_UNSERVED).unwrap();
        assert!((d - 0.8 / 0.9).abs() < 0.03, "{d}");
        let slope = edge_slope(&g, 3..7, LOW_UNSERVED).unwrap();
        assert!((slope + 1.0).abs() < 0.05, "{slope}");
    }

    #[test]
    fn uncrossed_edge_is_none() {
        let g = grid(|_, _| 0.0);
        assert_eq!(edge_beta1(&g, LOW_UNSERVED), None);
        assert_eq!(servable_cells(&g, LOW_UNSERVED).len(), 121);
    }

    #[test]
    fn detects_dips_and_dominance() {
        let mut g = grid(|b1, _| b1);
        assert!(monotonicity_violations(&g, NOISE_TOLERANCE).is_empty());
        g.values[5 * 11 + 2] = 0.0;
        assert_eq!(
            monotonicity_violations(&g, NOISE_TOLERANCE),
            vec![(1, 2), (2, 2), (3, 2), (5, 0)]
        );

        let low = grid(|b1, _| b1 * 0.5);
        let high = grid(|b1, _| b1);
        assert!(dominance_violations(&low, &high, 0.0).is_empty());
        assert!(!dominance_violations(&high, &low, 0.0).is_empty());
    }
}
