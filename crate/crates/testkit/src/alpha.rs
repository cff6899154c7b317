/// Interval alpha from its pairwise definition: observed disagreement is
/// the mean squared difference over ordered within-unit pairs (each unit's
/// pairs weighted by `1 / (m_u - 1)`), expected disagreement the mean over
/// all ordered pairs of pairable values. Returns `None` when undefined.
pub fn interval_alpha(ratings: &[(usize, usize, f64)]) -> Option<f64> {
    let max_unit = ratings.iter().map(|r| r.0).max()?;
    let mut units: Vec<Vec<f64>> = vec![Vec::new(); max_unit + 1];
    for &(u, _, v) in ratings {
        units[u].push(v);
    }
    units.retain(|u| u.len() >= 2);
    if units.len() < 2 {
        return None;
    }
    let pooled: Vec<f64> = units.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    let mut observed = 0.0;
    for u in &units {
        let mut s = 0.0;
        for a in u {
            for b in u {
                s += (a - b) * (a - b);
            }
        }
        observed += s / (u.len() as f64 - 1.0);
    }
    observed /= n;
    let mut expected = 0.0;
    for a in &pooled {
        for b in &pooled {
            expected += (a - b) * (a - b);
        }
    }
    expected /= n * (n - 1.0);
    if observed == 0.0 {
        return Some(1.0);
    }
    Some(1.0 - observed / expected)
}
