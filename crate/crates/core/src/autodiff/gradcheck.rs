//! Finite-difference gradient verification.

use super::optim::ParamSet;
use super::tensor::Tensor;

/// Central-difference check of an analytic gradient.
///
/// `f` evaluates the scalar objective for a parameter set; `analytic` are
/// the gradients to verify, aligned with the set's registration order.
/// Returns the maximum relative error
/// `|g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|)` over all scalar entries.
pub fn finite_diff_check(
    f: &mut dyn FnMut(&ParamSet) -> f64,
    params: &ParamSet,
    analytic: &[Tensor],
    eps: f64,
) -> f64 {
    assert_eq!(analytic.len(), params.len());
    let mut worst: f64 = 0.0;
    let mut probe = params.clone();
    for i in 0..params.len() {
        let n = params.by_index(i).1.len();
        for j in 0..n {
            let orig = probe.by_index_mut(i).data()[j];
            probe.by_index_mut(i).data_mut()[j] = orig + eps;
            let up = f(&probe);
            probe.by_index_mut(i).data_mut()[j] = orig - eps;
            let down = f(&probe);
            probe.by_index_mut(i).data_mut()[j] = orig;
            let g_fd = (up - down) / (2.0 * eps);
            let g_ad = analytic[i].data()[j];
            let rel = (g_ad - g_fd).abs() / (g_ad.abs() + g_fd.abs()).max(1e-8);
            if rel > worst {
                worst = rel;
            }
        }
    }
    worst
}
