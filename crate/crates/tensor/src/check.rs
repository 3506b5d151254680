//! Central finite-difference gradient checking.
//!
//! The checker re-evaluates a user-supplied forward closure at perturbed
//! inputs; it never touches the tape's backward pass, so it stays an
//! independent oracle for it.

/// Maximum relative error between an analytic gradient and central finite
/// differences of `forward` around `point`.
///
/// `forward` must rebuild the computation from scratch for the given flat
/// input vector and return the scalar loss. Differences use step `h`;
/// relative error is `|a - n| / max(1, |a|, |n|)` so that near-zero entries
/// compare absolutely.
pub fn max_rel_error<F>(forward: &mut F, point: &[f64], analytic: &[f64], h: f64) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(point.len(), analytic.len());
    let mut buf = point.to_vec();
    let mut worst = 0.0f64;
    for i in 0..point.len() {
        let orig = buf[i];
        buf[i] = orig + h;
        let up = forward(&buf);
        buf[i] = orig - h;
        let down = forward(&buf);
        buf[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let denom = 1.0f64.max(analytic[i].abs()).max(numeric.abs());
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}
