mod common;

use attribmkt::design::{
    monopoly_net_profit, one_attribute_net_profit, symmetric_foc_gap, symmetric_gross_profit, symmetric_u,
};
use attribmkt::search::golden_max;
use attribmkt::{
    alignment_gradient, effective_taste, exclusivity_equilibrium, monopoly_aligned_profit, monopoly_intensity,
    monopoly_profit, one_attribute_norm, orientation_rule, pairwise_profit, symmetric_intensity, AttributePair,
    ExclusivityPartition, FactorStructure, Market,
};
use common::vector;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn allocations(n: usize) -> Vec<DVector<f64>> {
    let mut single = DVector::zeros(n);
    single[0] = 1.0;
    let ladder = DVector::from_fn(n, |i, _| (n - i) as f64).normalize();
    let uniform = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    vec![single, ladder, uniform]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn profit_depends_only_on_column_length(n in 2usize..9, len in 0.1f64..3.0, b in 0.1f64..3.0, g in 0.05f64..5.0, phi in -3.0f64..-0.2) {
        let values: Vec<f64> = allocations(n)
            .into_iter()
            .map(|y| {
                let s = DMatrix::from_column_slice(n, 1, (y * len).as_slice());
                let fs = FactorStructure::with_unit_baseline(s.clone(), DVector::from_element(1, g)).unwrap();
                let delta = &s * DVector::from_element(1, b);
                monopoly_profit(&Market::from_delta(fs, delta, phi).unwrap())
            })
            .collect();
        for v in &values[1..] {
            prop_assert!((v - values[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn orientation_maximizes_aligned_taste_per_unit_cost(
        (b, g, d) in (1usize..6).prop_flat_map(|k| (vector(k, 0.05, 2.0), vector(k, 0.1, 5.0), vector(k, -1.0, 1.0))),
    ) {
        // (b̂'x)² / x'Γx is maximized by x ∝ Γ⁻¹b̂ = Γ^{-3/2}b
        prop_assume!(d.norm() > 1e-3);
        let bhat = DVector::from_fn(b.len(), |k, _| b[k] / g[k].sqrt());
        let ratio = |x: &DVector<f64>| {
            let num = bhat.dot(x);
            let den: f64 = (0..x.len()).map(|k| g[k] * x[k] * x[k]).sum();
            num * num / den
        };
        let best = ratio(&orientation_rule(&b, &g).unwrap());
        prop_assert!(ratio(&d) <= best * (1.0 + 1e-10));
    }

    #[test]
    fn orientation_is_net_optimal_at_fixed_intensity(
        (b, d) in (2usize..6).prop_flat_map(|k| (vector(k, 0.05, 2.0), vector(k, -1.0, 1.0))),
        g in 0.2f64..3.0,
        c in 0.01f64..0.2,
        phi in -2.0f64..-0.5,
    ) {
        let k = b.len();
        prop_assume!(d.norm() > 1e-3);
        let gamma = DVector::from_element(k, g);
        let t = monopoly_intensity(&b, &gamma, c, phi).unwrap();
        let net = |dir: &DVector<f64>| {
            let r = dir.normalize().map(|x| t * x / g.sqrt());
            monopoly_aligned_profit(&b, &gamma, &r, phi).unwrap() - 0.5 * c * t * t
        };
        let star = net(&orientation_rule(&b, &gamma).unwrap());
        prop_assert!(net(&d) <= star + 1e-10);
    }

    #[test]
    fn symmetric_condition_changes_sign_once(bh in 0.1f64..5.0, frac in 0.01f64..0.99, phi in -3.0f64..-0.2, n in 1usize..12) {
        let c = frac * bh / (-2.0 * phi);
        let grid: Vec<f64> = (0..=1200).map(|i| 10f64.powf(-8.0 + 12.0 * i as f64 / 1200.0)).collect();
        let signs: Vec<bool> = grid.iter().map(|&u| symmetric_foc_gap(u, bh, c, phi, n) > 0.0).collect();
        let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
        prop_assert_eq!(changes, 1);
    }

    #[test]
    fn symmetric_root_is_a_stationary_point(bh in 0.1f64..5.0, frac in 0.01f64..0.9, phi in -3.0f64..-0.2, n in 1usize..12) {
        let c = frac * bh / (-2.0 * phi);
        let u = symmetric_u(bh, c, phi, n).unwrap();
        let net = |u: f64| symmetric_gross_profit(u, bh, phi, n) - 0.5 * c * u;
        let h = 1e-6 * u.max(1e-3);
        let slope = (net(u + h) - net(u - h)) / (2.0 * h);
        prop_assert!(slope.abs() < 1e-6, "slope {slope} at u = {u}");
    }

    #[test]
    fn monopoly_invests_more_than_competitors(b in vector(3, 0.1, 2.0), g in vector(3, 0.2, 3.0), frac in 0.01f64..0.99, phi in -3.0f64..-0.2, n in 2usize..12) {
        let c = frac * effective_taste(&b, &g) / (-2.0 * phi);
        let mono = monopoly_intensity(&b, &g, c, phi).unwrap();
        let comp = symmetric_intensity(&b, &g, c, phi, n).unwrap();
        prop_assert!(mono > comp);
    }

    #[test]
    fn alignment_gradient_matches_finite_differences(
        bi in 0.05f64..2.0, bj in 0.05f64..2.0, gi in 0.1f64..3.0, gj in 0.1f64..3.0,
        d in 0.2f64..2.0, f in 0.2f64..2.0, frac in 0.0f64..0.95, phi in -2.0f64..-0.2,
    ) {
        let pair = AttributePair { b_i: bi, b_j: bj, gamma_i: gi, gamma_j: gj, d, f, inner: frac * (d * f).sqrt() };
        let h = 1e-6;
        let fd = (pairwise_profit(&pair.with_inner(pair.inner + h), phi).unwrap()
            - pairwise_profit(&pair.with_inner(pair.inner - h), phi).unwrap())
            / (2.0 * h);
        let an = alignment_gradient(&pair, phi).unwrap();
        prop_assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "fd {fd} analytic {an}");
    }
}

fn oracle(f: impl Fn(f64) -> f64, hi: f64) -> f64 {
    golden_max(f, 0.0, hi, 1e-12).0
}

#[test]
fn intensities_match_golden_section_oracle() {
    for bh in [0.5f64, 1.0, 4.0] {
        for i in 0..20 {
            for j in 0..20 {
                let c = 0.02 + 0.58 * i as f64 / 19.0;
                let phi = -2.0 + 1.75 * j as f64 / 19.0;
                let b = DVector::from_vec(vec![bh.sqrt()]);
                let g = DVector::from_element(1, 1.0);
                let t = monopoly_intensity(&b, &g, c, phi).unwrap();
                let t_oracle = oracle(|t| monopoly_net_profit(t, bh, c, phi), 20.0);
                assert!((t - t_oracle).abs() < 1e-6, "monopoly B={bh} c={c} φ={phi}: {t} vs {t_oracle}");

                let gamma = 1.7;
                let s = one_attribute_norm(bh.sqrt(), gamma, c, phi).unwrap();
                let u = oracle(|u| one_attribute_net_profit(u, bh.sqrt(), gamma, c, phi), 400.0);
                assert!((s - u.sqrt()).abs() < 1e-6, "one attribute: {s} vs {}", u.sqrt());

                let b3 = DVector::from_vec(vec![bh.sqrt(), 0.5 * bh.sqrt(), 0.3]);
                let g3 = DVector::from_vec(vec![1.0, 0.5, 2.0]);
                let part = ExclusivityPartition::new(vec![0, 0, 1], 2).unwrap();
                let out = exclusivity_equilibrium(&part, &b3, &g3, c, phi).unwrap();
                for (firm, design) in out.designs.iter().enumerate() {
                    let attrs = part.attributes_of(firm);
                    let bn = b3.select_rows(&attrs);
                    let gn = g3.select_rows(&attrs);
                    let taste = effective_taste(&bn, &gn);
                    let t_oracle = oracle(|t| monopoly_net_profit(t, taste, c, phi), 20.0);
                    assert!((design.intensity - t_oracle).abs() < 1e-6);
                }
            }
        }
    }
}

#[test]
fn symmetric_root_reduces_to_monopoly_for_one_firm() {
    for (bh, c, phi) in [(1.0f64, 0.1f64, -1.0f64), (4.0, 0.25, -1.0), (2.5, 0.3, -0.7)] {
        let u = symmetric_u(bh, c, phi, 1).unwrap();
        let mono = (-bh / (2.0 * c * phi)).sqrt() - 1.0;
        assert!((u - mono).abs() < 1e-9);
    }
}

#[test]
fn misaligned_tastes_make_alignment_costly() {
    // The derivative of pair profit in the inner product is −(1/4φ)·2x₁x₂ with
    // x = A⁻¹Γ⁻¹b, which is negative when tastes are unbalanced.
    let pair = AttributePair { b_i: 0.1, b_j: 1.0, gamma_i: 1.0, gamma_j: 1.0, d: 1.0, f: 1.0, inner: 0.0 };
    let at_zero: f64 = pairwise_profit(&pair, -1.0).unwrap();
    let at_one = pairwise_profit(&pair.with_inner(1.0 - 1e-9), -1.0).unwrap();
    assert!((at_zero - 0.12625).abs() < 1e-12);
    assert!(at_one < at_zero);
}
