//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use routescan::detector::{
    adaptive_regularization_strength, fit_logistic, fit_platt, logistic_gradient, logistic_objective,
    source_margin_stats, DetectorConfig, Provenance, RegularizerConfig, PLATT_C,
};
use routescan::eval::{
    attribute_probe_eval, make_lodo_folds, make_mixed_positive_fold, ranking_metrics, run_fold, FoldOutcome,
    FoldSpec, ProbeConfig, ProbeData,
};
use routescan::io::{run_pipeline, RunConfig};
use routescan::routing::{
    generate_scenario_corpus, generate_synthetic_corpus, DeploymentProfile, ScenarioCorpusSpec, SyntheticCorpusSpec,
};
use routescan::selector::{
    adaptive_support, fit_selector, invariance_score, layer_prior, normalize_scores, soft_weights, DimensionScore,
    SelectorConfig,
};
use routescan::telemetry::{
    assemble_representation, featurize_all, layer_structural_stats, normalize_loads, ClassLabel, FeatureKey,
    FeatureMatrix, SplitRole, TelemetryRecord,
};
use routescan::Error;

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> std::result::Result<(), String> {
    ensure((a - b).abs() <= tol, || format!("{what}: got {a:.8}, expected {b:.8} (tol {tol:e})"))
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// --- representation -------------------------------------------------------

fn random_loads(rng: &mut ChaCha8Rng, e: usize) -> Vec<f64> {
    match rng.random_range(0..4) {
        0 => vec![0.0; e],
        1 => (0..e).map(|_| rng.random_range(0..5u32) as f64).collect(),
        2 => (0..e)
            .map(|_| if rng.random_bool(0.7) { 0.0 } else { rng.random_range(0.0..1e4) })
            .collect(),
        _ => (0..e).map(|_| rng.random_range(0.0..1.0) * 10f64.powi(rng.random_range(-6..6))).collect(),
    }
}

fn record_with(profile: &DeploymentProfile, layers: &[Vec<f64>]) -> TelemetryRecord {
    let mut r = TelemetryRecord {
        request_id: "r".into(),
        profile_id: profile.profile_id.clone(),
        group_id: "g".into(),
        class_label: ClassLabel::Benign,
        domain: "d".into(),
        wrapper: None,
        attributes: BTreeMap::new(),
        layers: BTreeMap::new(),
    };
    for (i, l) in layers.iter().enumerate() {
        r.set_dense_layer(i + 1, l);
    }
    r
}

fn representation_invariants() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sizes = [4usize, 8, 64];
    let n = 10_000;
    for i in 0..n {
        let e = sizes[i % sizes.len()];
        let loads = random_loads(&mut rng, e);
        let p = normalize_loads(&loads).map_err(fail)?;
        let sum: f64 = p.iter().sum();
        ensure(sum.abs() <= 1e-12 || (sum - 1.0).abs() <= 1e-12, || format!("vector {i}: sum {sum}"))?;
        let s = layer_structural_stats(&p, e, 1e-9);
        ensure(s.eff_rate <= s.act_rate + 1e-12, || format!("vector {i}: v_eff {} > v_act {}", s.eff_rate, s.act_rate))?;
        ensure(s.cov_gap >= -1e-12, || format!("vector {i}: g_cov {}", s.cov_gap))?;
        ensure((-1e-12..1.0).contains(&s.cov_conc), || format!("vector {i}: c_cov {}", s.cov_conc))?;

        // Rescale one layer of a two-layer record.
        let profile = DeploymentProfile::uniform("inv", 2, e, 1);
        let other = random_loads(&mut rng, e);
        let base = assemble_representation(&record_with(&profile, &[loads.clone(), other.clone()]), &profile)
            .map_err(fail)?;
        let c = 10f64.powf(rng.random_range(-3.0..3.0));
        let scaled: Vec<f64> = loads.iter().map(|v| v * c).collect();
        let moved = assemble_representation(&record_with(&profile, &[scaled, other]), &profile).map_err(fail)?;
        let worst = base
            .values
            .iter()
            .zip(&moved.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        ensure(worst <= 1e-12, || format!("vector {i}: rescaling by {c} moved a feature by {worst:e}"))?;
    }
    Ok(format!("{n} vectors over E in {sizes:?}"))
}

// --- AUROC oracle ------------------------------------------------------------

fn brute_force_auroc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut doubled, mut pairs) = (0u128, 0u128);
    for (i, &yi) in labels.iter().enumerate() {
        if !yi {
            continue;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yj {
                continue;
            }
            pairs += 2;
            if scores[i] > scores[j] {
                doubled += 2;
            } else if scores[i] == scores[j] {
                doubled += 1;
            }
        }
    }
    doubled as f64 / pairs as f64
}

fn auroc_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let sets = 500;
    for s in 0..sets {
        let n = rng.random_range(2..=200);
        let tied = s % 2 == 0;
        let scores: Vec<f64> = (0..n)
            .map(|_| if tied { rng.random_range(0..6u32) as f64 / 5.0 } else { rng.random::<f64>() })
            .collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        labels[0] = true;
        labels[1] = false;
        let (a, _) = ranking_metrics(&scores, &labels).map_err(fail)?;
        let b = brute_force_auroc(&scores, &labels);
        ensure(a == b, || format!("set {s} (n={n}): {a} vs brute force {b}"))?;
    }
    Ok(format!("{sets} score sets, exact equality"))
}

// --- selector ------------------------------------------------------------------

fn scores_from(rho: &[f64]) -> Vec<DimensionScore> {
    let mut s: Vec<DimensionScore> = rho
        .iter()
        .enumerate()
        .map(|(e, &r)| DimensionScore {
            key: FeatureKey::Raw { layer: 1, expert: e },
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

fn selector_plugin() -> Check {
    let cfg = SelectorConfig::default();
    let cases: [(&[f64], f64, f64, usize); 3] = [
        (&[4.0, 2.0, 1.0, 1.0], 0.84090, 0.99758, 4),
        (&[100.0, 1.0, 1.0, 1.0, 1.0], 0.24831, 0.94589, 1),
        (&[1.0; 10], 1.0, 0.99794, 10),
    ];
    for (rho, delta, q, size) in cases {
        let sel = adaptive_support(&scores_from(rho), &cfg);
        close(sel.diffuseness, delta, 1e-4, "diffuseness")?;
        close(sel.target_mass, q, 1e-4, "target mass")?;
        ensure(sel.support.len() == size, || format!("{rho:?}: support {} instead of {size}", sel.support.len()))?;
    }
    let quarter = scores_from(&[1.0, 0.25]);
    let sel = adaptive_support(&quarter, &cfg);
    let w = soft_weights(&sel, &quarter, &cfg);
    close(w[1], 0.875, 1e-4, "soft weight at 0.25")?;
    for (l, expected) in [1.0, 0.875, 0.75, 0.625, 0.5].into_iter().enumerate() {
        close(layer_prior(l + 1, 5), expected, 1e-4, "layer prior")?;
    }
    close(invariance_score(1.0, 1.0, 0.0, 0.0), 1.0, 1e-4, "invariance |d|=1 c=1")?;
    close(invariance_score(0.0, 1.0, 0.3, 0.2), 0.0, 1e-4, "invariance d=0")?;
    close(invariance_score(-1.0, 0.0, 0.0, 0.0), 0.25, 1e-4, "invariance |d|=1 c=0")?;

    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let vectors = 1000;
    for v in 0..vectors {
        let n = rng.random_range(1..=60);
        let rho: Vec<f64> = (0..n)
            .map(|_| match rng.random_range(0..5) {
                0 => 0.0,
                1 => -rng.random::<f64>(),
                2 => 0.5,
                _ => rng.random::<f64>().powi(3),
            })
            .collect();
        let scores = scores_from(&rho);
        let sel = adaptive_support(&scores, &cfg);
        if rho.iter().all(|&r| r <= 0.0) {
            ensure(sel.support.is_empty(), || format!("vector {v}: support without positive scores"))?;
            continue;
        }
        let masses: Vec<f64> = sel.indices.iter().map(|&j| scores[j].mass).collect();
        let total: f64 = masses.iter().sum();
        let without_last: f64 = masses[..masses.len() - 1].iter().sum();
        ensure(total >= sel.target_mass - 1e-12, || format!("vector {v}: covered {total} < q {}", sel.target_mass))?;
        ensure(without_last < sel.target_mass, || format!("vector {v}: support not minimal"))?;
        let w = soft_weights(&sel, &scores, &cfg);
        for (j, wj) in w.iter().enumerate() {
            let inside = sel.indices.contains(&j);
            ensure(if inside { (cfg.eta..=1.0).contains(wj) } else { *wj == 0.0 }, || {
                format!("vector {v}: weight {wj} at {j}")
            })?;
        }
    }
    Ok(format!("plug-in values within 1e-4; minimal support on {vectors} vectors"))
}

// --- adaptive regularization -------------------------------------------------

fn adaptive_c() -> Check {
    let cfg = RegularizerConfig::default();
    close(adaptive_regularization_strength(0.65, 0.0, &cfg), 0.094868, 1e-5, "C at 0.65/0")?;
    close(adaptive_regularization_strength(2.0, 0.0, &cfg), 0.30, 1e-5, "C at 2/0")?;
    close(adaptive_regularization_strength(0.65, 5.0, &cfg), 0.03, 1e-5, "C at 0.65/5")?;
    let mut subsets = BTreeMap::new();
    subsets.insert("a".to_string(), vec![2.0]);
    subsets.insert("b".to_string(), vec![0.5]);
    let stats = source_margin_stats(&[-1.0], &subsets, cfg.eps_sep).map_err(fail)?;
    close(stats.delta_sep, 1.5, 1e-9, "delta_sep")?;
    close(stats.r_sub, 1.0, 1e-5, "r_sub")?;

    let grid = 50;
    let delta = |i: usize| -2.0 + 6.0 * i as f64 / (grid - 1) as f64;
    let ratio = |k: usize| 5.0 * k as f64 / (grid - 1) as f64;
    for i in 0..grid {
        for k in 0..grid {
            let c = adaptive_regularization_strength(delta(i), ratio(k), &cfg);
            ensure((0.03..=0.30).contains(&c), || format!("C {c} out of bounds at ({}, {})", delta(i), ratio(k)))?;
            if i > 0 {
                let prev = adaptive_regularization_strength(delta(i - 1), ratio(k), &cfg);
                ensure(c >= prev, || format!("C decreases in delta_sep at ({}, {})", delta(i), ratio(k)))?;
            }
            if k > 0 {
                let prev = adaptive_regularization_strength(delta(i), ratio(k - 1), &cfg);
                ensure(c <= prev, || format!("C increases in r_sub at ({}, {})", delta(i), ratio(k)))?;
            }
        }
    }
    Ok(format!("formula values within 1e-5; {grid}x{grid} grid monotone and bounded"))
}

// --- logistic and Platt oracle ---------------------------------------------------

/// Coordinate grid around the incumbent, zoomed in until the step is negligible.
fn grid_minimize(f: impl Fn(&[f64]) -> f64, dim: usize, radius: f64) -> Vec<f64> {
    const POINTS: i64 = 10;
    let mut center = vec![0.0; dim];
    let mut half = radius;
    while half > 1e-9 {
        let step = half / POINTS as f64;
        let mut best = (f(&center), center.clone());
        let total = (2 * POINTS + 1).pow(dim as u32);
        for idx in 0..total {
            let mut rem = idx;
            let p: Vec<f64> = (0..dim)
                .map(|d| {
                    let o = rem % (2 * POINTS + 1) - POINTS;
                    rem /= 2 * POINTS + 1;
                    center[d] + o as f64 * step
                })
                .collect();
            let v = f(&p);
            if v < best.0 {
                best = (v, p);
            }
        }
        center = best.1;
        half = 3.0 * step;
    }
    center
}

fn logistic_oracle() -> Check {
    let datasets: Vec<(Vec<Vec<f64>>, Vec<bool>, f64)> = vec![
        (
            vec![vec![-2.0], vec![-1.0], vec![-0.5], vec![0.0], vec![0.5], vec![1.0], vec![1.5], vec![2.0]],
            vec![false, false, true, false, true, false, true, true],
            1.0,
        ),
        (
            vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![2.0, 1.5], vec![-1.0, 0.5], vec![0.5, -1.0], vec![1.5, 0.5], vec![-0.5, -0.5]],
            vec![false, true, true, true, false, false, true, false],
            0.5,
        ),
        (
            (0..20).map(|i| vec![(i as f64 * 0.37).sin() * 2.0, (i as f64 * 0.91).cos()]).collect(),
            (0..20).map(|i| (i * 7) % 3 == 0).collect(),
            10.0,
        ),
        (
            vec![vec![3.0, -1.0], vec![2.5, 0.0], vec![0.0, 2.0], vec![-1.0, 1.0], vec![1.0, 1.0], vec![2.0, 2.0]],
            vec![true, true, false, false, true, false],
            0.1,
        ),
    ];
    for (n, (x, y, c)) in datasets.iter().enumerate() {
        let p = x[0].len();
        let model = fit_logistic(x, y, *c).map_err(fail)?;
        let oracle = grid_minimize(|t| logistic_objective(x, y, None, *c, &t[..p], t[p]), p + 1, 16.0);
        let mut fitted = model.coefficients.clone();
        fitted.push(model.intercept);
        for (a, b) in fitted.iter().zip(&oracle) {
            close(*a, *b, 1e-3, &format!("dataset {n} parameter"))?;
        }
        let loss = logistic_objective(x, y, None, *c, &model.coefficients, model.intercept);
        let grad = logistic_gradient(x, y, None, *c, &model.coefficients, model.intercept);
        let g = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        ensure(g <= 1e-6 * (1.0 + loss.abs()), || format!("dataset {n}: gradient {g:e}"))?;
    }

    // Platt scaling: one-dimensional fit of labels on overlapping margins.
    let margins = [-2.0, -1.2, -0.4, 0.3, -0.1, 0.6, 1.1, 0.2, 1.8, -0.6, 2.4, 0.9];
    let labels = [false, false, false, true, false, true, true, false, true, true, true, false];
    let cal = fit_platt(&margins, &labels).map_err(fail)?;
    let x: Vec<Vec<f64>> = margins.iter().map(|&m| vec![m]).collect();
    let oracle = grid_minimize(|t| logistic_objective(&x, &labels, None, PLATT_C, &t[..1], t[1]), 2, 16.0);
    close(cal.slope, oracle[0], 1e-3, "Platt slope")?;
    close(cal.offset, oracle[1], 1e-3, "Platt offset")?;
    let loss = logistic_objective(&x, &labels, None, PLATT_C, &[cal.slope], cal.offset);
    let grad = logistic_gradient(&x, &labels, None, PLATT_C, &[cal.slope], cal.offset);
    let g = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    ensure(g <= 1e-6 * (1.0 + loss.abs()), || format!("Platt gradient {g:e}"))?;
    Ok(format!("{} logistic datasets and one Platt dataset within 1e-3", datasets.len()))
}

// --- end-to-end --------------------------------------------------------------------

fn desk_profile() -> DeploymentProfile {
    DeploymentProfile::uniform("desk", 4, 16, 2).with_thread_noise(5.0)
}

fn synthetic(bias: f64, domains: usize, wrappers: &[&str], seed: u64) -> Vec<TelemetryRecord> {
    generate_synthetic_corpus(&SyntheticCorpusSpec {
        profile: desk_profile(),
        domains: (0..domains).map(|d| format!("bench{d}")).collect(),
        wrappers: wrappers.iter().map(|w| w.to_string()).collect(),
        requests_per_cell: 200,
        min_tokens: 16,
        max_tokens: 64,
        class_bias_strength: bias,
        seed,
    })
    .expect("corpus")
}

fn fold_outcome(fold: &FoldSpec, records: &[TelemetryRecord], seed: u64) -> routescan::Result<FoldOutcome> {
    run_fold(
        fold,
        records,
        &desk_profile(),
        &SelectorConfig { seed, ..Default::default() },
        &DetectorConfig::default(),
        Provenance::default(),
    )
}

fn loto_means(bias: f64, seed: u64) -> std::result::Result<(f64, f64), String> {
    let records = synthetic(bias, 4, &[], seed);
    let folds = make_lodo_folds(&records, 0.75, seed).map_err(fail)?;
    let (mut a, mut f) = (0.0, 0.0);
    for fold in &folds {
        let o = fold_outcome(fold, &records, seed).map_err(fail)?;
        a += o.metrics.auroc;
        f += o.metrics.f1_at_05;
    }
    Ok((a / folds.len() as f64, f / folds.len() as f64))
}

fn planted_loto() -> Check {
    let (a, f) = loto_means(2.0, 0)?;
    ensure(a >= 0.95 && f >= 0.85, || format!("mean AUROC {a:.4}, F1 {f:.4}"))?;
    Ok(format!("mean AUROC {a:.4}, F1@0.5 {f:.4} over 4 folds"))
}

fn null_loto() -> Check {
    let seeds = 20;
    let mut total = 0.0;
    for seed in 0..seeds {
        total += loto_means(0.0, seed)?.0;
    }
    let mean = total / seeds as f64;
    ensure((0.45..=0.55).contains(&mean), || format!("mean AUROC {mean:.4}"))?;
    Ok(format!("mean AUROC {mean:.4} over {seeds} seeds"))
}

fn mixed_positive() -> Check {
    let records = synthetic(2.0, 1, &["wa", "wb"], 3);
    let fold = make_mixed_positive_fold(&records, "bench0", "wa", "wb", 0.5, 0.2, 3).map_err(fail)?;
    let o = fold_outcome(&fold, &records, 3).map_err(fail)?;
    let m = &o.bundle.regularization.margins;
    ensure(m.subset_means.len() == 2, || format!("{} source subsets", m.subset_means.len()))?;
    ensure(o.metrics.auroc >= 0.90 && m.r_sub > 0.0, || format!("AUROC {:.4}, r_sub {:.4}", o.metrics.auroc, m.r_sub))?;
    Ok(format!("target AUROC {:.4}, r_sub {:.4}", o.metrics.auroc, m.r_sub))
}

fn probe_confound() -> Check {
    let spec = ScenarioCorpusSpec {
        profile: DeploymentProfile::uniform("probe", 2, 24, 2),
        num_scenarios: 16,
        records_per_scenario: 120,
        min_tokens: 8,
        max_tokens: 64,
        template_strength: 2.5,
        attribute: "acute".into(),
        attribute_high_rate: 0.75,
        attribute_low_rate: 0.25,
        direct_attribute_strength: 0.0,
        seed: 5,
    };
    let records = generate_scenario_corpus(&spec).map_err(fail)?;
    let features: Vec<Vec<f64>> =
        featurize_all(&records, &spec.profile).map_err(fail)?.into_iter().map(|v| v.values).collect();
    let attribute: Vec<bool> = records.iter().map(|r| r.attributes["acute"]).collect();
    let scenario: Vec<String> = records.iter().map(|r| r.domain.clone()).collect();
    let group: Vec<String> = records.iter().map(|r| r.group_id.clone()).collect();
    let data = ProbeData {
        features: &features,
        attribute: &attribute,
        scenario: &scenario,
        group: &group,
    };
    let r = attribute_probe_eval(&data, &ProbeConfig { seed: 5, ..Default::default() }).map_err(fail)?;
    let loso = r.loso.ok_or("leave-one-scenario-out was skipped")?.auroc;
    let f1 = r.random_split.f1_at_05;
    let base = r.baselines.scenario_only_f1;
    ensure((f1 - base).abs() <= 0.05 && (0.40..=0.60).contains(&loso), || {
        format!("random-split F1 {f1:.4} vs scenario-only {base:.4}, LOSO AUROC {loso:.4}")
    })?;
    Ok(format!("random-split F1 {f1:.4} vs scenario-only {base:.4}, LOSO AUROC {loso:.4}"))
}

const DETERMINISM_CONFIG: &str = r#"
seed = 13

[profile]
profile_id = "desk"
num_layers = 4
experts_per_layer = [16, 16, 16, 16]
top_k_per_layer = [2, 2, 2, 2]
thread_noise_std = 5.0

[simulate]
kind = "synthetic"
domains = ["alpha", "beta", "gamma"]
requests_per_cell = 60
min_tokens = 16
max_tokens = 48
class_bias_strength = 1.0

[protocol]
kind = "leave_one_target_out"
"#;

fn run_into(dir: &std::path::Path) -> std::result::Result<BTreeMap<String, Vec<u8>>, String> {
    let mut cfg = RunConfig::from_toml_str(DETERMINISM_CONFIG).map_err(fail)?;
    cfg.output_dir = dir.to_path_buf();
    let out = run_pipeline(&cfg).map_err(fail)?;
    let mut files = BTreeMap::new();
    for path in out.files {
        let rel = path.strip_prefix(dir).map_err(fail)?.to_string_lossy().into_owned();
        files.insert(rel, std::fs::read(&path).map_err(fail)?);
    }
    Ok(files)
}

fn determinism() -> Check {
    let (a, b) = (tempfile::tempdir().map_err(fail)?, tempfile::tempdir().map_err(fail)?);
    let first = run_into(a.path())?;
    let second = run_into(b.path())?;
    ensure(first.keys().eq(second.keys()), || "runs wrote different file sets".into())?;
    for kind in ["selector/", "bundles/", "metrics.csv"] {
        ensure(first.keys().any(|k| k.starts_with(kind)), || format!("no {kind} output"))?;
    }
    for (name, bytes) in &first {
        ensure(second[name] == *bytes, || format!("{name} differs between runs"))?;
    }
    Ok(format!("{} files byte-identical across two runs", first.len()))
}

fn leakage_guard() -> Check {
    let mut records = synthetic(1.0, 3, &[], 9);
    let folds = make_lodo_folds(&records, 0.75, 9).map_err(fail)?;
    let fold = &folds[0];
    let before = fold_outcome(fold, &records, 9).map_err(fail)?.bundle.to_json().map_err(fail)?;

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut mutated = 0;
    for r in records.iter_mut().filter(|r| fold.target_ids.contains(&r.request_id)) {
        for loads in r.layers.values_mut() {
            for v in loads.values_mut() {
                *v = rng.random_range(0.0..500.0);
            }
        }
        r.class_label = if rng.random_bool(0.5) { ClassLabel::Positive } else { ClassLabel::Benign };
        mutated += 1;
    }
    let after = fold_outcome(fold, &records, 9).map_err(fail)?.bundle.to_json().map_err(fail)?;
    ensure(before == after, || "bundle changed after mutating target records".into())?;

    let profile = desk_profile();
    let target: Vec<TelemetryRecord> =
        records.iter().filter(|r| fold.target_ids.contains(&r.request_id)).cloned().collect();
    let matrix = FeatureMatrix::from_records(&target, &profile, SplitRole::Target).map_err(fail)?;
    let refused = fit_selector(&matrix, profile.num_layers, None, &SelectorConfig::default());
    ensure(matches!(refused, Err(Error::Leakage(_))), || format!("target matrix accepted for fitting: {refused:?}"))?;
    Ok(format!("bundle unchanged after mutating {mutated} target records; target matrix refused"))
}

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Check,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { name: "representation invariants", budget: Duration::from_secs(10), run: representation_invariants },
        Criterion { name: "AUROC oracle", budget: Duration::from_secs(10), run: auroc_oracle },
        Criterion { name: "selector plug-in suite", budget: Duration::from_secs(60), run: selector_plugin },
        Criterion { name: "adaptive-C suite", budget: Duration::from_secs(60), run: adaptive_c },
        Criterion { name: "logistic/Platt oracle", budget: Duration::from_secs(30), run: logistic_oracle },
        Criterion { name: "end-to-end planted signal", budget: Duration::from_secs(120), run: planted_loto },
        Criterion { name: "end-to-end null signal", budget: Duration::from_secs(300), run: null_loto },
        Criterion { name: "mixed-positive transfer", budget: Duration::from_secs(120), run: mixed_positive },
        Criterion { name: "probing confound check", budget: Duration::from_secs(120), run: probe_confound },
        Criterion { name: "determinism", budget: Duration::from_secs(120), run: determinism },
        Criterion { name: "leakage guard", budget: Duration::from_secs(120), run: leakage_guard },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if elapsed <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; took {elapsed:.1?}, budget {:?}", c.budget)),
            Err(e) => (false, e),
        };
        if !ok {
            failed += 1;
        }
        println!("[{}] {}: {} ({:.2?})", if ok { "PASS" } else { "FAIL" }, c.name, detail, elapsed);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
