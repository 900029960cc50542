use gridfuse::matrix::Matrix;
use gridfuse::normalize::{bc_zscore, column_stats, zscore_columns, Data, LambdaGrid, LAMBDA_MAX, LAMBDA_MIN};
use proptest::prelude::*;

fn grid() -> LambdaGrid {
    LambdaGrid::new(-5.0, 5.0, 0.01).unwrap()
}

/// Non-constant positive-or-mixed columns with a wide range of offsets and scales.
fn column() -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec(-1.0f64..1.0, 5..60), -1e4f64..1e4, 1e-3f64..1e3).prop_filter_map(
        "needs spread",
        |(v, offset, scale)| {
            let out: Vec<f64> = v.iter().map(|x| offset + scale * x.exp()).collect();
            let stats = column_stats(&out).ok()?;
            (stats.sample_std > 1e-6 * stats.mean.abs().max(1.0)).then_some(out)
        },
    )
}

proptest! {
    #[test]
    fn zscore_has_zero_mean_unit_std(cols in prop::collection::vec(column(), 1..4)) {
        let n = cols.iter().map(Vec::len).min().unwrap();
        let trimmed: Vec<Vec<f64>> = cols.iter().map(|c| c[..n].to_vec()).collect();
        let z = zscore_columns(&Matrix::from_columns(&trimmed)).unwrap();
        for j in 0..z.values.cols() {
            if z.degenerate[j] {
                continue;
            }
            let s = column_stats(&z.values.column(j)).unwrap();
            prop_assert!(s.mean.abs() <= 1e-12);
            prop_assert!((s.sample_std - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn bc_zscore_is_standardized_and_lambda_in_grid(col in column()) {
        let out = bc_zscore(&Data::Vector(col), None, &grid()).unwrap();
        let report = &out.columns[0];
        prop_assert!((LAMBDA_MIN..=LAMBDA_MAX).contains(&report.lambda));
        if !report.degenerate {
            let Data::Vector(v) = &out.output else { unreachable!() };
            let s = column_stats(v).unwrap();
            prop_assert!(s.mean.abs() <= 1e-9);
            prop_assert!((s.sample_std - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn renormalizing_changes_nothing(col in column()) {
        let first = bc_zscore(&Data::Vector(col), None, &grid()).unwrap();
        let second = bc_zscore(&first.output, None, &grid()).unwrap();
        let (Data::Vector(a), Data::Vector(b)) = (&first.output, &second.output) else { unreachable!() };
        for (x, y) in a.iter().zip(b) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn stored_params_reproduce_the_fit(col in column()) {
        let fitted = bc_zscore(&Data::Vector(col.clone()), None, &grid()).unwrap();
        let reused = bc_zscore(&Data::Vector(col), Some(&fitted.params), &grid()).unwrap();
        prop_assert_eq!(&fitted.params, &reused.params);
        let (Data::Vector(a), Data::Vector(b)) = (&fitted.output, &reused.output) else { unreachable!() };
        for (x, y) in a.iter().zip(b) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }
}
