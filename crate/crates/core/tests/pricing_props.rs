mod common;

use attribmkt::{
    consumer_surplus, demand, iterative_bertrand, monopoly_equilibrium, monopoly_profit, reentry_intercept,
    single_product_equilibrium, FactorStructure, Market, Preferences,
};
use common::{matrix, vector};
use nalgebra::DVector;
use proptest::prelude::*;

/// Positive loadings and tastes keep every mean utility positive.
fn positive_market() -> impl Strategy<Value = (FactorStructure<f64>, Preferences<f64>)> {
    (2usize..10, 1usize..5)
        .prop_flat_map(|(n, k)| (matrix(n, k, 0.05, 1.5), vector(k, 0.05, 3.0), vector(k, 0.2, 2.0), -3.0f64..-0.2))
        .prop_map(|(s, g, b, phi)| {
            (
                FactorStructure::with_unit_baseline(s, g).unwrap(),
                Preferences::new(b, phi, 1.0).unwrap(),
            )
        })
}

/// Loadings of either sign, so some goods may not be viable.
fn mixed_market() -> impl Strategy<Value = (FactorStructure<f64>, Preferences<f64>)> {
    (2usize..10, 1usize..5)
        .prop_flat_map(|(n, k)| (matrix(n, k, -0.5, 1.5), vector(k, 0.05, 3.0), vector(k, 0.2, 2.0), -3.0f64..-0.2))
        .prop_map(|(s, g, b, phi)| {
            (
                FactorStructure::with_unit_baseline(s, g).unwrap(),
                Preferences::new(b, phi, 1.0).unwrap(),
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn monopoly_profit_is_sum_of_margins((fs, prefs) in positive_market()) {
        let eq = monopoly_equilibrium(&fs, &prefs).unwrap();
        prop_assume!(eq.flagged.is_empty());
        let market = Market::new(fs, &prefs).unwrap();
        let closed = monopoly_profit(&market);
        prop_assert!((eq.total_profit() - closed).abs() < 1e-10 * closed.abs().max(1.0));
    }

    #[test]
    fn monopoly_prices_ignore_interaction((fs, prefs) in positive_market(), scale in 0.1f64..10.0) {
        let p1 = monopoly_equilibrium(&fs, &prefs).unwrap().prices;
        let other = FactorStructure::with_unit_baseline(fs.loadings().clone(), fs.weights() * scale).unwrap();
        let p2 = monopoly_equilibrium(&other, &prefs).unwrap().prices;
        prop_assert_eq!(p1, p2);
    }

    #[test]
    fn closed_form_prices_are_own_profit_stationary((fs, prefs) in positive_market()) {
        let eq = single_product_equilibrium(&fs, &prefs).unwrap();
        prop_assume!(eq.flagged.is_empty());
        let h = 1e-6;
        for n in 0..fs.n_goods() {
            let profit = |dp: f64| {
                let mut p = eq.prices.clone();
                p[n] += dp;
                p[n] * demand(&fs, &prefs, &p).unwrap()[n]
            };
            let slope = (profit(h) - profit(-h)) / (2.0 * h);
            prop_assert!(slope.abs() < 1e-6, "good {n}: {slope}");
        }
    }

    #[test]
    fn iterative_solver_matches_closed_form((fs, prefs) in positive_market()) {
        let closed = single_product_equilibrium(&fs, &prefs).unwrap();
        prop_assume!(closed.quantities.iter().all(|q| *q > 0.0));
        let iter = iterative_bertrand(&fs, &prefs).unwrap();
        prop_assert_eq!(iter.active.len(), fs.n_goods());
        prop_assert!((iter.prices - closed.prices).amax() < 1e-7);
    }

    #[test]
    fn surplus_falls_with_any_price((fs, prefs) in positive_market()) {
        let h = 1e-6;
        let eq = single_product_equilibrium(&fs, &prefs).unwrap();
        prop_assume!(eq.quantities.iter().all(|q| *q > 0.0));
        let base = consumer_surplus(&fs, &prefs, &eq.prices).unwrap();
        for n in 0..fs.n_goods() {
            let mut p = eq.prices.clone();
            p[n] += h;
            let cs = consumer_surplus(&fs, &prefs, &p).unwrap();
            prop_assert!(cs - base <= 1e-8);
        }
    }

    #[test]
    fn shutdown_leaves_a_consistent_active_set((fs, prefs) in mixed_market()) {
        let eq = iterative_bertrand(&fs, &prefs).unwrap();
        let market = Market::new(fs.clone(), &prefs).unwrap();
        for &g in &eq.active {
            prop_assert!(eq.quantities[g] > 0.0);
        }
        let active_prices = DVector::from_iterator(eq.active.len(), eq.active.iter().map(|&g| eq.prices[g]));
        for g in (0..fs.n_goods()).filter(|g| !eq.is_active(*g) && !eq.unsettled.contains(g)) {
            prop_assert_eq!(eq.quantities[g], 0.0);
            let intercept = reentry_intercept(&market, &eq.active, &active_prices, g).unwrap();
            prop_assert!(intercept <= 1e-12, "good {g} would re-enter: {intercept}");
        }
    }
}

#[test]
fn kinked_entry_is_reported() {
    // No active set works here: with all three goods the first sells a negative
    // quantity, without it its re-entry intercept is 0.026.
    let s = nalgebra::DMatrix::from_row_slice(3, 2, &[1.0578879915294872, -0.4942440142909413, -0.1462533967707816, 1.2576442214662675, 1.3738665461571706, 0.0]);
    let fs = FactorStructure::with_unit_baseline(s, DVector::from_vec(vec![1.6200686377839137, 0.5839713392722018])).unwrap();
    let prefs = Preferences::new(DVector::from_vec(vec![0.509966317902223, 0.8886785035206437]), -0.2, 1.0).unwrap();
    let eq = iterative_bertrand(&fs, &prefs).unwrap();
    assert_eq!(eq.active, vec![1, 2]);
    assert_eq!(eq.unsettled, vec![0]);
}
