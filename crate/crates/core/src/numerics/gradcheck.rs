/// Compares an analytic gradient against central differences.
///
/// `f` returns the function value and its reverse-mode gradient at a point.
/// The result is the largest per-coordinate relative error
/// `|g_fd − g_ad| / max(1e-12, |g_fd| + |g_ad|)`.
pub fn grad_check<F>(f: F, point: &[f64], h: f64) -> f64
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let (_, analytic) = f(point);
    assert_eq!(analytic.len(), point.len(), "gradient length must match the point");
    let mut x = point.to_vec();
    let mut worst = 0.0f64;
    for i in 0..point.len() {
        let orig = x[i];
        x[i] = orig + h;
        let (fp, _) = f(&x);
        x[i] = orig - h;
        let (fm, _) = f(&x);
        x[i] = orig;
        let fd = (fp - fm) / (2.0 * h);
        let ad = analytic[i];
        let err = (fd - ad).abs() / (fd.abs() + ad.abs()).max(1e-12);
        worst = worst.max(err);
    }
    worst
}
