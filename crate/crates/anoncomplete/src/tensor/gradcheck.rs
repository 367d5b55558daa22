use crate::rng::Rng;
use crate::tensor::params::ParamSet;

/// Outcome of a finite-difference comparison.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// (parameter name, flat coordinate) of the worst disagreement.
    pub worst: Option<(String, usize)>,
    pub coords_checked: usize,
}

/// Compares analytic gradients against central finite differences in
/// 64-bit precision.
///
/// `loss_fn` must be a pure function of the parameter values. `analytic`
/// holds one gradient vector per parameter, aligned with `params` (missing
/// or empty entries are treated as zero). Above `max_coords` coordinates a
/// parameter is subsampled with the seeded generator.
pub fn grad_check(
    params: &ParamSet<f64>,
    analytic: &[Vec<f64>],
    mut loss_fn: impl FnMut(&ParamSet<f64>) -> f64,
    eps: f64,
    max_coords: Option<usize>,
    seed: u64,
) -> GradCheckReport {
    assert_eq!(analytic.len(), params.len(), "one gradient per parameter");
    let mut work = params.clone();
    let mut rng = Rng::new(seed);
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst: None,
        coords_checked: 0,
    };

    for p in 0..params.len() {
        let n = params.tensor(p).len();
        let coords: Vec<usize> = match max_coords {
            Some(m) if n > m => {
                let mut picks = rng.sample_distinct(n, m);
                picks.sort_unstable();
                picks
            }
            _ => (0..n).collect(),
        };
        for &k in &coords {
            let orig = work.tensor(p).data[k];
            work.tensor_mut(p).data[k] = orig + eps;
            let up = loss_fn(&work);
            work.tensor_mut(p).data[k] = orig - eps;
            let down = loss_fn(&work);
            work.tensor_mut(p).data[k] = orig;

            let fd = (up - down) / (2.0 * eps);
            let an = analytic[p].get(k).copied().unwrap_or(0.0);
            let err = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-3);
            report.coords_checked += 1;
            if err > report.max_rel_err {
                report.max_rel_err = err;
                report.worst = Some((params.name(p).to_string(), k));
            }
        }
    }
    report
}
