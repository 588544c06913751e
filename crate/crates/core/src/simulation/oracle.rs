/// Central-difference gradient of a scalar function.
pub fn finite_diff_gradient<F>(f: F, point: &[f64], step: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    assert!(step > 0.0, "step must be positive");
    let mut x = point.to_vec();
    (0..point.len())
        .map(|k| {
            x[k] = point[k] + step;
            let up = f(&x);
            x[k] = point[k] - step;
            let down = f(&x);
            x[k] = point[k];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Central-difference Jacobian of a vector function; row `r` holds the
/// derivatives of output `r`.
pub fn finite_diff_jacobian<F>(f: F, point: &[f64], step: f64) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    assert!(step > 0.0, "step must be positive");
    let mut x = point.to_vec();
    let mut columns = Vec::with_capacity(point.len());
    for k in 0..point.len() {
        x[k] = point[k] + step;
        let up = f(&x);
        x[k] = point[k] - step;
        let down = f(&x);
        x[k] = point[k];
        columns.push(
            up.iter()
                .zip(&down)
                .map(|(u, d)| (u - d) / (2.0 * step))
                .collect::<Vec<_>>(),
        );
    }
    let rows = columns.first().map_or(0, Vec::len);
    (0..rows)
        .map(|r| columns.iter().map(|c| c[r]).collect())
        .collect()
}
