use ndarray::{Array3, ArrayViewMut1, Axis};

use crate::error::{Error, Result};

/// Scales `v` by `max(0, 1 - threshold / ||v||)`; groups with norm at or
/// below the threshold become exactly zero.
pub fn block_soft_threshold(mut v: ArrayViewMut1<'_, f64>, threshold: f64) {
    let norm = v.dot(&v).sqrt();
    if norm <= threshold {
        v.fill(0.0);
    } else if threshold > 0.0 {
        v *= 1.0 - threshold / norm;
    }
}

/// Proximal map of `threshold * sum_j (||W[:, j, :]|| + sum_k ||W[:, j, k]||)`.
///
/// The per-lag groups nest inside the per-source group, so the exact prox is
/// the per-lag shrink followed by the whole-group shrink.
pub fn prox_gsgl(w1: &mut Array3<f64>, threshold: f64) -> Result<()> {
    if !(threshold >= 0.0) {
        return Err(Error::Config(format!(
            "prox threshold {threshold} must be non-negative"
        )));
    }
    if threshold == 0.0 {
        return Ok(());
    }
    for mut source in w1.axis_iter_mut(Axis(1)) {
        for lag in source.axis_iter_mut(Axis(1)) {
            block_soft_threshold(lag, threshold);
        }
        let norm = source.iter().map(|w| w * w).sum::<f64>().sqrt();
        if norm <= threshold {
            source.fill(0.0);
        } else {
            source *= 1.0 - threshold / norm;
        }
    }
    Ok(())
}

/// Value of the hierarchical group penalty (without the lambda factor).
pub fn penalty(w1: &Array3<f64>) -> f64 {
    w1.axis_iter(Axis(1))
        .map(|source| {
            let whole = source.iter().map(|w| w * w).sum::<f64>().sqrt();
            let lags: f64 = source
                .axis_iter(Axis(1))
                .map(|g| g.iter().map(|w| w * w).sum::<f64>().sqrt())
                .sum();
            whole + lags
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, Array3};
    use proptest::prelude::*;

    #[test]
    fn zero_threshold_is_identity() {
        let w = Array3::from_shape_fn((3, 2, 4), |(h, j, k)| {
            (h as f64 - 1.3) * (j as f64 + 0.2) / (k as f64 + 1.0)
        });
        let mut out = w.clone();
        prox_gsgl(&mut out, 0.0).unwrap();
        assert_eq!(out, w);
    }

    #[test]
    fn single_level_closed_form() {
        let mut v = arr1(&[3.0, 4.0]);
        block_soft_threshold(v.view_mut(), 2.0);
        assert!((v[0] - 1.8).abs() < 1e-15 && (v[1] - 2.4).abs() < 1e-15);
    }

    #[test]
    fn small_lag_group_is_absorbed() {
        let mut w = Array3::zeros((2, 1, 2));
        w[[0, 0, 0]] = 0.1; // norm 0.1 <= 0.5, pruned at the lag level
        w[[0, 0, 1]] = 3.0;
        w[[1, 0, 1]] = 4.0;
        prox_gsgl(&mut w, 0.5).unwrap();
        assert_eq!(w[[0, 0, 0]], 0.0);
        assert_eq!(w[[1, 0, 0]], 0.0);
        // surviving lag: 5 -> 4.5 -> 4.0
        let norm = (w[[0, 0, 1]].powi(2) + w[[1, 0, 1]].powi(2)).sqrt();
        assert!((norm - 4.0).abs() < 1e-12);
    }

    #[test]
    fn negative_threshold_rejected() {
        let mut w = Array3::zeros((1, 1, 1));
        assert!(matches!(prox_gsgl(&mut w, -1e-3), Err(Error::Config(_))));
    }

    fn weights() -> impl Strategy<Value = Array3<f64>> {
        prop::collection::vec(-2.0f64..2.0, 24).prop_map(|v| Array3::from_shape_vec((3, 2, 4), v).unwrap())
    }

    proptest! {
        #[test]
        fn nonexpansive(a in weights(), b in weights(), t in 0.0f64..3.0) {
            let (mut pa, mut pb) = (a.clone(), b.clone());
            prox_gsgl(&mut pa, t).unwrap();
            prox_gsgl(&mut pb, t).unwrap();
            let before = (&a - &b).mapv(|x| x * x).sum().sqrt();
            let after = (&pa - &pb).mapv(|x| x * x).sum().sqrt();
            prop_assert!(after <= before + 1e-12);
        }

        #[test]
        fn zero_groups_stay_zero(mut a in weights(), t in 0.0f64..3.0, j in 0usize..2, k in 0usize..4) {
            a.slice_mut(ndarray::s![.., j, k]).fill(0.0);
            prox_gsgl(&mut a, t).unwrap();
            prop_assert!(a.slice(ndarray::s![.., j, k]).iter().all(|&w| w == 0.0));
        }

        #[test]
        fn penalty_never_increases(a in weights(), t in 0.0f64..3.0) {
            let mut p = a.clone();
            prox_gsgl(&mut p, t).unwrap();
            prop_assert!(penalty(&p) <= penalty(&a) + 1e-12);
        }
    }
}
