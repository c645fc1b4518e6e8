use erw_core::bounds::{
    certify, pi_norm_bound, pi_norm_series_bound, rho_chi_gamma_bounds, summary_sums, BoundInputs, BoundsError,
    Verdict,
};

#[test]
fn closed_form_agrees_with_level_by_level_sum() {
    for d in 8..=12 {
        let report = summary_sums(&BoundInputs::for_dimension(d, 1e-6).unwrap()).unwrap();
        assert!(report.closed_form_matches_iterated(), "d={d}: {report:?}");
        let parts = report.rho_sum + report.chi_sum + report.gamma_sum;
        assert!(parts.contains(report.total.mid()));
        assert!(report.a_d_condition);
    }
    // At d = 7 the Δ-factor piece needs G_6^{*3}(0), which is infinite.
    let seven = summary_sums(&BoundInputs::for_dimension(7, 1e-6).unwrap());
    assert!(matches!(seven, Err(BoundsError::Divergent { d: 7, .. })));
}

#[test]
fn certificate_totals_decrease_from_nine_dimensions() {
    let mut prev = f64::INFINITY;
    for d in 9..=14 {
        let c = certify(d, 1e-5);
        assert_eq!(c.verdict, Verdict::MonotoneAllBeta, "d={d}");
        let total = c.total.unwrap();
        assert!(total <= prev, "d={d}: {total} > {prev}");
        prev = total;
    }
}

#[test]
fn verdicts_by_dimension() {
    for d in 2..=5 {
        assert_eq!(certify(d, 1e-4).verdict, Verdict::Divergent, "d={d}");
    }
    for d in 6..=7 {
        assert_eq!(certify(d, 1e-4).verdict, Verdict::Inconclusive, "d={d}");
    }
    let eight = certify(8, 1e-4);
    assert_eq!(eight.verdict, Verdict::MonotoneSmallBeta);
    assert!(eight.e0.unwrap().hi() < 1.0);
    assert!(eight.total.unwrap() >= 1.0);
}

#[test]
fn a_d_condition_from_six_dimensions() {
    for d in 6..=12 {
        let i = BoundInputs::for_dimension(d, 1e-5).unwrap();
        assert!(i.constants.a_d_below_one(), "d={d}");
    }
    for d in 4..=5 {
        assert!(BoundInputs::for_dimension(d, 1e-5).unwrap().constants.a_d.is_none());
    }
}

#[test]
fn bounds_are_nonnegative_and_vanish_with_beta_where_displayed() {
    for d in [8, 9, 12] {
        let i = BoundInputs::for_dimension(d, 1e-6).unwrap();
        for n in 1..=8 {
            for beta in [0.0, 0.3, 1.0] {
                let t = rho_chi_gamma_bounds(&i, beta, n);
                for v in [t.rho, t.chi, t.gamma] {
                    assert!(v.unwrap().lo() >= 0.0);
                }
                assert!(pi_norm_bound(&i, beta, n).unwrap().lo() >= 0.0);
            }
            let zero = rho_chi_gamma_bounds(&i, 0.0, n);
            assert_eq!(zero.rho.unwrap().hi(), 0.0);
            assert_eq!(zero.gamma.unwrap().hi(), 0.0);
            // Only the first interior-kernel term survives β = 0.
            if n == 1 {
                assert!(zero.chi.unwrap().lo() > 0.0);
            } else if n > 1 {
                // β^{N-1} still vanishes for N ≥ 2.
                assert_eq!(zero.chi.unwrap().hi(), 0.0);
            }
        }
        assert!(pi_norm_series_bound(&i, 1.0).unwrap().hi() < 1.0);
    }
}
