use proptest::prelude::*;

use routescan::detector::{adaptive_regularization_strength, fit_logistic, logistic_gradient, logistic_objective, RegularizerConfig};
use routescan::eval::{auroc, structural_similarity};
use routescan::selector::{adaptive_support, normalize_scores, soft_weights, DimensionScore, SelectorConfig};
use routescan::telemetry::{layer_structural_stats, normalize_loads, FeatureKey};

fn scores(rho: &[f64]) -> Vec<DimensionScore> {
    let mut s: Vec<DimensionScore> = rho
        .iter()
        .enumerate()
        .map(|(e, &r)| DimensionScore {
            key: FeatureKey::Raw { layer: 1 + e % 3, expert: e },
            invariance: 0.0,
            auc_score: 0.0,
            stability: 0.0,
            consistency: 0.0,
            disc: 0.0,
            cons: 0.0,
            prior: 0.0,
            layer_prior: 1.0,
            edge_penalty: 0.0,
            rho: r,
            rho_norm: 0.0,
            mass: 0.0,
        })
        .collect();
    normalize_scores(&mut s);
    s
}

proptest! {
    #[test]
    fn normalized_loads_are_a_distribution(loads in prop::collection::vec(0.0f64..1e6, 1..80)) {
        let p = normalize_loads(&loads).unwrap();
        let sum: f64 = p.iter().sum();
        prop_assert!(sum == 0.0 || (sum - 1.0).abs() < 1e-12);
        let s = layer_structural_stats(&p, p.len(), 1e-9);
        prop_assert!(s.eff_rate <= s.act_rate + 1e-12);
        prop_assert!(s.cov_conc < 1.0);
    }

    #[test]
    fn auroc_ignores_monotone_rescaling(
        pairs in prop::collection::vec((-50i32..50, any::<bool>()), 2..120),
        shift in -10.0f64..10.0,
    ) {
        let mut labels: Vec<bool> = pairs.iter().map(|p| p.1).collect();
        labels[0] = true;
        labels[1] = false;
        let raw: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let moved: Vec<f64> = raw.iter().map(|x| (x / 7.0 + shift).exp()).collect();
        let flipped: Vec<f64> = raw.iter().map(|x| -x).collect();
        let a = auroc(&raw, &labels).unwrap();
        prop_assert_eq!(a, auroc(&moved, &labels).unwrap());
        prop_assert!((a + auroc(&flipped, &labels).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn support_weights_are_bounded(rho in prop::collection::vec(-1.0f64..1.0, 1..50)) {
        let cfg = SelectorConfig::default();
        let s = scores(&rho);
        let sel = adaptive_support(&s, &cfg);
        let w = soft_weights(&sel, &s, &cfg);
        for (j, wj) in w.iter().enumerate() {
            if sel.indices.contains(&j) {
                prop_assert!((cfg.eta..=1.0).contains(wj));
                prop_assert!(s[j].rho > 0.0);
            } else {
                prop_assert_eq!(*wj, 0.0);
            }
        }
        let mass: f64 = s.iter().map(|d| d.mass).sum();
        prop_assert!(mass == 0.0 || (mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn regularization_stays_in_bounds(delta in -50.0f64..50.0, r in 0.0f64..1e3) {
        let cfg = RegularizerConfig::default();
        let c = adaptive_regularization_strength(delta, r, &cfg);
        prop_assert!((cfg.c_min..=cfg.c_max).contains(&c));
    }

    #[test]
    fn logistic_fit_is_stationary(
        rows in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, any::<bool>()), 4..40),
        log_c in -2.0f64..2.0,
    ) {
        let x: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.0, r.1]).collect();
        let mut y: Vec<bool> = rows.iter().map(|r| r.2).collect();
        y[0] = true;
        y[1] = false;
        let c = 10f64.powf(log_c);
        let m = fit_logistic(&x, &y, c).unwrap();
        let loss = logistic_objective(&x, &y, None, c, &m.coefficients, m.intercept);
        let g = logistic_gradient(&x, &y, None, c, &m.coefficients, m.intercept);
        prop_assert!(g.iter().all(|v| v.abs() <= 1e-6 * (1.0 + loss.abs())));
        prop_assert!(m.converged);
    }

    #[test]
    fn similarity_is_symmetric_and_bounded(a in "[a-c ]{0,20}", b in "[a-c ]{0,20}") {
        let s = structural_similarity(&a, &b);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s, structural_similarity(&b, &a));
    }
}
