//! Post-processing: RMSE convergence knees, linear fits, and the
//! Stuart-Landau vs Kuramoto comparison table.

use super::{run_plan, Axes, ExperimentPlan, PlanKind};
use crate::dynamics::SimConfig;
use crate::error::{Error, Result};

/// Locate the convergence knee of an RMSE-vs-coupling curve.
///
/// The discrete derivative of `ln(eta)` with respect to `j_c` is taken by
/// central differences (one-sided at the ends); the knee is the largest
/// `j_c` whose derivative magnitude still exceeds `slope_tol`. A curve that
/// never exceeds the tolerance has no knee.
pub fn eta_threshold(eta_vs_jc: &[(f64, f64)], slope_tol: f64) -> Result<Option<f64>> {
    if eta_vs_jc.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 points to estimate a slope, got {}",
            eta_vs_jc.len()
        )));
    }
    for pair in eta_vs_jc.windows(2) {
        if !(pair[0].0 < pair[1].0) {
            return Err(Error::InvalidArgument(
                "j_c values must be strictly increasing".into(),
            ));
        }
    }
    if eta_vs_jc.iter().any(|&(_, eta)| !(eta > 0.0)) {
        return Err(Error::InvalidArgument(
            "eta values must be positive to take logarithms".into(),
        ));
    }
    let n = eta_vs_jc.len();
    let ln: Vec<f64> = eta_vs_jc.iter().map(|&(_, eta)| eta.ln()).collect();
    let jc: Vec<f64> = eta_vs_jc.iter().map(|&(j, _)| j).collect();
    let deriv = |i: usize| -> f64 {
        if i == 0 {
            (ln[1] - ln[0]) / (jc[1] - jc[0])
        } else if i == n - 1 {
            (ln[n - 1] - ln[n - 2]) / (jc[n - 1] - jc[n - 2])
        } else {
            (ln[i + 1] - ln[i - 1]) / (jc[i + 1] - jc[i - 1])
        }
    };
    Ok((0..n)
        .rev()
        .find(|&i| deriv(i).abs() > slope_tol)
        .map(|i| jc[i]))
}

/// Ordinary least-squares line through `(x, y)` points.
///
/// Returns `(slope, intercept, rms_residual)`.
pub fn fit_linear(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 points for a line, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "all x values coincide; the fit is degenerate".into(),
        ));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss: f64 = points
        .iter()
        .map(|p| {
            let r = p.1 - (slope * p.0 + intercept);
            r * r
        })
        .sum();
    Ok((slope, intercept, (ss / n).sqrt()))
}

/// Compare Stuart-Landau and Kuramoto dynamics at minimizing the XY energy
/// on random complete graphs, from matched seeds, with identical oscillators.
///
/// Returns `(n, mean, std)` of the half-normalized energy difference
/// `(E_KM - E_SL) / (2 E_KM)` per network size.
pub fn kuramoto_vs_sl(
    ns: &[usize],
    realizations: usize,
    master_seed: u64,
    sim: &SimConfig,
) -> Result<Vec<(usize, f64, f64)>> {
    let plan = ExperimentPlan {
        format_version: super::PLAN_FORMAT_VERSION,
        kind: PlanKind::KuramotoComparison,
        axes: Axes {
            n: Some(ns.to_vec()),
            ..Default::default()
        },
        realizations,
        master_seed,
        sim: *sim,
        output_path: None,
    };
    let result = run_plan(&plan)?;
    Ok(result
        .aggregate
        .iter()
        .map(|agg| {
            let (mean, std) = agg.stats["ediff_half"];
            (agg.point.n, mean, std)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_absent_on_flat_curves() {
        let flat: Vec<(f64, f64)> = (1..=10).map(|j| (j as f64, 0.3)).collect();
        assert_eq!(eta_threshold(&flat, 0.05).unwrap(), None);
    }

    #[test]
    fn threshold_on_pure_exponential_is_grid_bounded() {
        // eta = exp(-j_c): d ln(eta)/d j_c = -1 everywhere, so the knee sits
        // at the last grid point.
        let curve: Vec<(f64, f64)> = (1..=20).map(|j| (j as f64, (-(j as f64)).exp())).collect();
        assert_eq!(eta_threshold(&curve, 0.05).unwrap(), Some(20.0));
    }

    #[test]
    fn threshold_finds_the_knee_of_a_piecewise_curve() {
        // Steep exponential drop up to j_c = 8, constant afterwards.
        let curve: Vec<(f64, f64)> = (1..=20)
            .map(|j| {
                let j = j as f64;
                let eta = if j <= 8.0 { (-j).exp() } else { (-8.0f64).exp() };
                (j, eta)
            })
            .collect();
        let knee = eta_threshold(&curve, 0.05).unwrap().unwrap();
        assert!((knee - 9.0).abs() <= 1.0, "knee at {knee}");
    }

    #[test]
    fn threshold_rejects_bad_inputs() {
        assert!(eta_threshold(&[(1.0, 0.1), (2.0, 0.1)], 0.05).is_err());
        assert!(eta_threshold(&[(1.0, 0.1), (1.0, 0.2), (2.0, 0.1)], 0.05).is_err());
        assert!(eta_threshold(&[(1.0, 0.1), (2.0, 0.0), (3.0, 0.1)], 0.05).is_err());
    }

    #[test]
    fn fit_recovers_exact_lines() {
        let points: Vec<(f64, f64)> = [5.0, 10.0, 15.0, 20.0]
            .iter()
            .map(|&x| (x, 0.34 * x + 2.39))
            .collect();
        let (slope, intercept, residual) = fit_linear(&points).unwrap();
        assert!((slope - 0.34).abs() < 1e-12);
        assert!((intercept - 2.39).abs() < 1e-12);
        assert!(residual < 1e-12);
    }

    #[test]
    fn fit_two_points_has_zero_residual() {
        let (_, _, residual) = fit_linear(&[(0.0, 1.0), (2.0, 5.0)]).unwrap();
        assert!(residual < 1e-12);
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        assert!(fit_linear(&[(1.0, 2.0)]).is_err());
        assert!(fit_linear(&[(1.0, 2.0), (1.0, 3.0)]).is_err());
    }

    #[test]
    fn kuramoto_vs_sl_pair_matches_exactly() {
        // On a 2-vertex graph both models land on the pair optimum, so the
        // energy difference vanishes to integrator accuracy.
        let sim = SimConfig {
            t_end: 60.0,
            record_stride: 100,
            ..SimConfig::default()
        };
        let table = kuramoto_vs_sl(&[2], 4, 17, &sim).unwrap();
        assert_eq!(table.len(), 1);
        let (n, mean, _std) = table[0];
        assert_eq!(n, 2);
        assert!(mean.abs() < 1e-3, "pair difference should vanish, got {mean}");
    }
}
