//! Shared test oracles, implemented independently of the library's own
//! numerical paths.

#![allow(dead_code)]

use deplda_core::{
    compute_eer, fit_global, generate, log_spaced_epsilon, make_trials, score_trialset,
    train_local, Family, GlobalModel, LnMode, LocalModel, LocalTrainConfig, MonitorSpec,
    ScorerConfig, SynthSpec, TrainHistory, Variant, VectorSet,
};

pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let diff = x - mean;
    (-(diff * diff) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Adaptive Simpson integration with an absolute tolerance.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Posterior over a 1-D class mean from enrollment values, from first
/// principles: precision `n + 1/eps`, mean from the scaled sum.
pub fn posterior_1d(eps: f64, enroll: &[f64]) -> (f64, f64) {
    let n = enroll.len() as f64;
    let xbar: f64 = enroll.iter().sum::<f64>() / n;
    let mean = n * eps / (n * eps + 1.0) * xbar;
    let var = eps / (n * eps + 1.0);
    (mean, var)
}

/// Quadrature evaluation of the 1-D normalized likelihood: the integral of
/// the prediction density (of `m * x` for the decoupled case) against the
/// enrollment posterior, normalized by the marginal of `x`.
pub fn quadrature_nl_1d(eps: f64, enroll: &[f64], x: f64, m: f64) -> f64 {
    let (pm, pv) = posterior_1d(eps, enroll);
    let y = m * x;
    let lo = (y.min(pm)) - 15.0 * (1.0 + pv.sqrt());
    let hi = (y.max(pm)) + 15.0 * (1.0 + pv.sqrt());
    let integrand = move |mu: f64| normal_pdf(y, mu, 1.0) * normal_pdf(mu, pm, pv);
    let numerator = adaptive_simpson(&integrand, lo, hi, 1e-13);
    numerator.ln() - normal_pdf(x, 0.0, eps + 1.0).ln()
}

/// Quadrature evaluation of the tied 1-D class objective: one integral per
/// class over the product of per-sample prediction densities against the
/// enrollment posterior.
pub fn quadrature_tied_class_1d(eps: f64, raw: &[f64], m: f64) -> f64 {
    let (pm, pv) = posterior_1d(eps, raw);
    let ys: Vec<f64> = raw.iter().map(|&x| m * x).collect();
    let center = ys.iter().sum::<f64>() / ys.len() as f64;
    let lo = center.min(pm) - 18.0;
    let hi = center.max(pm) + 18.0;
    let integrand = move |mu: f64| {
        ys.iter().map(|&y| normal_pdf(y, mu, 1.0)).product::<f64>() * normal_pdf(mu, pm, pv)
    };
    adaptive_simpson(&integrand, lo, hi, 1e-15).ln()
}

/// Brute-force EER: sweep thresholds below, at, between, and above every
/// distinct score, then interpolate the miss/false-alarm crossing.
pub fn brute_force_eer(targets: &[f64], nontargets: &[f64]) -> f64 {
    let mut scores: Vec<f64> = targets.iter().chain(nontargets).copied().collect();
    scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
    scores.dedup();
    let mut thresholds = Vec::with_capacity(2 * scores.len() + 1);
    thresholds.push(scores[0] - 1.0);
    for pair in scores.windows(2) {
        thresholds.push(pair[0]);
        thresholds.push(0.5 * (pair[0] + pair[1]));
    }
    thresholds.push(*scores.last().unwrap());
    thresholds.push(scores.last().unwrap() + 1.0);
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let n_t = targets.len() as f64;
    let n_n = nontargets.len() as f64;
    let rates: Vec<(f64, f64)> = thresholds
        .iter()
        .map(|&t| {
            let fa = nontargets.iter().filter(|&&s| s >= t).count() as f64 / n_n;
            let miss = targets.iter().filter(|&&s| s < t).count() as f64 / n_t;
            (fa, miss)
        })
        .collect();
    let mut prev = (0.0, 1.0);
    for &(fa, miss) in &rates {
        let diff = miss - fa;
        if diff == 0.0 {
            return fa;
        }
        if diff < 0.0 {
            let prev_diff = prev.1 - prev.0;
            let alpha = prev_diff / (prev_diff - diff);
            return prev.0 + alpha * (fa - prev.0);
        }
        prev = (fa, miss);
    }
    1.0
}

/// Central finite differences of the local objective with respect to one
/// transform entry.
pub fn finite_difference_gradient(
    global: &GlobalModel,
    m: &[f64],
    set: &VectorSet,
    h: f64,
) -> Vec<f64> {
    (0..m.len())
        .map(|j| {
            let mut plus = m.to_vec();
            plus[j] += h;
            let mut minus = m.to_vec();
            minus[j] -= h;
            let f_plus = deplda_core::local_log_likelihood(global, &plus, set).unwrap();
            let f_minus = deplda_core::local_log_likelihood(global, &minus, set).unwrap();
            (f_plus - f_minus) / (2.0 * h)
        })
        .collect()
}

/// Closed-form per-dimension maximizer of the local objective (a weighted
/// least-squares solution), recomputed from first principles.
pub fn closed_form_optimum(global: &GlobalModel, projected: &VectorSet) -> Vec<f64> {
    let d = global.dim;
    let mut numerator = vec![0.0; d];
    let mut denominator = vec![0.0; d];
    for group in projected.classes() {
        let n = group.members.len() as f64;
        for j in 0..d {
            let eps = global.epsilon[j];
            let mut xbar = 0.0;
            for &idx in &group.members {
                xbar += projected.records()[idx].values[j];
            }
            xbar /= n;
            let post_mean = n * eps / (n * eps + 1.0) * xbar;
            let pred_var = 1.0 + eps / (n * eps + 1.0);
            for &idx in &group.members {
                let x = projected.records()[idx].values[j];
                numerator[j] += x * post_mean / pred_var;
                denominator[j] += x * x / pred_var;
            }
        }
    }
    numerator
        .iter()
        .zip(&denominator)
        .map(|(&n, &d)| n / d)
        .collect()
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

pub fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// One full run of the synthetic decoupling protocol: train on 300 classes,
/// monitor on trials over the training set, evaluate vanilla and decoupled
/// scorers on a disjoint 100-class set.
pub struct ProtocolOutcome {
    pub plda_eer: f64,
    pub deplda_eer: f64,
    pub local: LocalModel,
    pub history: TrainHistory,
}

pub fn run_decoupling_protocol(family: Family, seed: u64) -> ProtocolOutcome {
    let dim = 8;
    let epsilon = log_spaced_epsilon(dim, 0.5, 8.0);
    let train = generate(&SynthSpec {
        classes: 300,
        per_class: 10,
        dim,
        epsilon: epsilon.clone(),
        family,
        seed,
    })
    .unwrap();
    let (global, _) = fit_global(&train, 10).unwrap();

    let (monitor_map, monitor_trials, _) = make_trials(&train, 3, 2000, 2000, seed + 3000).unwrap();
    let monitor = MonitorSpec {
        trials: &monitor_trials,
        vectors: &train,
        enroll_map: &monitor_map,
    };
    let config = LocalTrainConfig {
        learning_rate: 0.01,
        patience: 10,
        max_epochs: 100,
        seed,
        ..Default::default()
    };
    let (local, history) = train_local(&global, &train, &monitor, &config).unwrap();

    let eval = generate(&SynthSpec {
        classes: 100,
        per_class: 23,
        dim,
        epsilon,
        family,
        seed: seed + 1000,
    })
    .unwrap();
    let (eval_map, eval_trials, eval_tests) = make_trials(&eval, 3, 2000, 2000, seed + 2000).unwrap();

    let plda_config = ScorerConfig {
        variant: Variant::Plda,
        ln_mode: LnMode::None,
        global: global.clone(),
        local: None,
        lda: None,
    };
    let plda_scored = score_trialset(&plda_config, &eval_map, &eval, &eval_tests, &eval_trials).unwrap();
    let plda_eer = compute_eer(&plda_scored).unwrap().eer;

    let deplda_config = ScorerConfig {
        variant: Variant::Deplda,
        ln_mode: LnMode::None,
        global,
        local: Some(local.clone()),
        lda: None,
    };
    let deplda_scored =
        score_trialset(&deplda_config, &eval_map, &eval, &eval_tests, &eval_trials).unwrap();
    let deplda_eer = compute_eer(&deplda_scored).unwrap().eer;

    ProtocolOutcome {
        plda_eer,
        deplda_eer,
        local,
        history,
    }
}

/// Vanilla-scorer EER on heavy-tailed data, with and without length
/// normalization applied consistently at training and scoring time.
pub fn run_ln_protocol(seed: u64) -> (f64, f64) {
    let dim = 32;
    let epsilon = log_spaced_epsilon(dim, 0.1, 1.0);
    let family = Family::StudentT { nu: 5.0 };
    let train = generate(&SynthSpec {
        classes: 300,
        per_class: 10,
        dim,
        epsilon: epsilon.clone(),
        family,
        seed,
    })
    .unwrap();
    let eval = generate(&SynthSpec {
        classes: 100,
        per_class: 23,
        dim,
        epsilon,
        family,
        seed: seed + 1000,
    })
    .unwrap();
    let (eval_map, eval_trials, eval_tests) = make_trials(&eval, 3, 2000, 2000, seed + 2000).unwrap();

    let (global_raw, _) = fit_global(&train, 10).unwrap();
    let raw_config = ScorerConfig {
        variant: Variant::Plda,
        ln_mode: LnMode::None,
        global: global_raw,
        local: None,
        lda: None,
    };
    let raw_scored =
        score_trialset(&raw_config, &eval_map, &eval, &eval_tests, &eval_trials).unwrap();
    let raw_eer = compute_eer(&raw_scored).unwrap().eer;

    let train_ln = deplda_core::length_normalize_set(&train).unwrap();
    let (global_ln, _) = fit_global(&train_ln, 10).unwrap();
    let ln_config = ScorerConfig {
        variant: Variant::Plda,
        ln_mode: LnMode::Full,
        global: global_ln,
        local: None,
        lda: None,
    };
    let ln_scored = score_trialset(&ln_config, &eval_map, &eval, &eval_tests, &eval_trials).unwrap();
    let ln_eer = compute_eer(&ln_scored).unwrap().eer;

    (raw_eer, ln_eer)
}
