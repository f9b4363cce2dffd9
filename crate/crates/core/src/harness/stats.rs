//! Order statistics and checkpoint curves over trial traces.

/// Linearly interpolated quantile (the "type 7" rule) of unsorted data.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of empty data");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Median with first and third quartiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Self {
        Quartiles {
            q1: quantile(values, 0.25),
            median: quantile(values, 0.5),
            q3: quantile(values, 0.75),
        }
    }
}

/// Roughly log-spaced evaluation counts covering `[first, last]` inclusive.
pub fn checkpoint_grid(first: usize, last: usize, points: usize) -> Vec<usize> {
    assert!(first >= 1 && first <= last, "invalid checkpoint range");
    if points <= 1 || first == last {
        return if first == last { vec![first] } else { vec![first, last] };
    }
    let (lf, ll) = ((first as f64).ln(), (last as f64).ln());
    let mut grid: Vec<usize> = (0..points)
        .map(|i| (lf + (ll - lf) * i as f64 / (points - 1) as f64).exp().round() as usize)
        .map(|e| e.clamp(first, last))
        .collect();
    grid[0] = first;
    *grid.last_mut().unwrap() = last;
    grid.dedup();
    grid
}

/// Best value recorded at or before `evals`. Before the first record the
/// first recorded value is returned.
pub fn best_at(trace: &[(usize, f64)], evals: usize) -> f64 {
    match trace.partition_point(|(e, _)| *e <= evals) {
        0 => trace.first().map_or(f64::NAN, |t| t.1),
        k => trace[k - 1].1,
    }
}
