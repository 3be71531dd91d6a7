//! Curve post-processing: threshold crossings and log-log slopes.

/// First abscissa where `y` reaches `level` from below, interpolating
/// linearly in `x` and in `log10 y` (or `y` when `log_y` is false). Points
/// must be sorted by `x`.
pub fn crossing(points: &[(f64, f64)], level: f64, log_y: bool) -> Option<f64> {
    let f = |y: f64| if log_y { y.log10() } else { y };
    for w in points.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if y0 < level && y1 >= level {
            if log_y && (y0 <= 0.0 || y1 <= 0.0) {
                return Some(x1);
            }
            let (a, b, l) = (f(y0), f(y1), f(level));
            return Some(x0 + (x1 - x0) * (l - a) / (b - a));
        }
    }
    None
}

/// First abscissa where `y` falls to `level` from above.
pub fn falling_crossing(points: &[(f64, f64)], level: f64, log_y: bool) -> Option<f64> {
    let flipped: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, y)| if log_y { (x, 1.0 / y) } else { (x, -y) })
        .collect();
    crossing(&flipped, if log_y { 1.0 / level } else { -level }, log_y)
}

/// Least-squares slope of `log10 y` against `log10 x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.log10(), y.log10())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
