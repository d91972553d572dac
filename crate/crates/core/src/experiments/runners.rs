//! The five experiment drivers.

use rayon::prelude::*;
use serde_json::json;

use super::report::{json_num, CsvTable, ExperimentReport};
use super::{thread_pool, ExperimentConfig, ExperimentError, RunOutput};
use crate::adic::AdicError;
use crate::beta::Beta;
use crate::skew::{self, Observable, SkewPoint, Window};
use crate::spectral::{self, SigmaMethodSpec};
use crate::stats;
use crate::word::Word;

struct Setup {
    beta: Beta,
    obs: Observable,
    window: Window,
    sigma2: f64,
    mean: f64,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup, ExperimentError> {
    let beta = Beta::from_str_depth(&cfg.beta, crate::beta::DEFAULT_ONE_DEPTH)?;
    let obs = cfg.observable.build(&beta)?;
    let window = match &cfg.window {
        Some(spec) => spec.build(obs.group())?,
        None => Window::default_for(obs.group()),
    };
    let sigma2 = match cfg.sigma2_override {
        Some(s) => s,
        None => {
            spectral::sigma_squared(
                &beta,
                &obs,
                SigmaMethodSpec::Spectral {
                    bins: cfg.bins,
                    dt: 1e-3,
                },
            )?
            .sigma2
        }
    };
    let mean = obs.mean_m();
    Ok(Setup {
        beta,
        obs,
        window,
        sigma2,
        mean,
    })
}

fn report_shell(cfg: &ExperimentConfig, s: &Setup, trials: u64) -> ExperimentReport {
    ExperimentReport {
        kind: cfg.kind.to_string(),
        beta: s.beta.label(),
        n: cfg.n,
        trials,
        seed: cfg.seed,
        sigma2: s.sigma2,
        mean_m: s.mean,
        resamples: 0,
        verdict: String::new(),
        summary: json!({}),
        config: cfg.clone(),
    }
}

/// Effective block rank for step budget `n`: `floor(log_beta(n/scale))`,
/// at least 1, so the orbit holds roughly `scale` rank-l fibers.
fn block_rank(beta: &Beta, n: u64, scale: f64) -> usize {
    let l = ((n as f64 / scale).ln() / beta.value_f64().ln() + 1e-12).floor();
    (l.max(1.0) as usize).max(1)
}

/// Occupation counts of the window at each checkpoint of one skew orbit.
fn occupation_checkpoints(
    beta: &Beta,
    obs: &Observable,
    word: Word,
    window: &Window,
    checkpoints: &[u64],
) -> Result<Vec<u64>, AdicError> {
    debug_assert!(checkpoints.windows(2).all(|w| w[0] < w[1]));
    let n_max = *checkpoints.last().expect("nonempty schedule");
    let mut point = SkewPoint::new(word, obs.group());
    let mut counts = Vec::with_capacity(checkpoints.len());
    let mut count = 0u64;
    let mut next = 0usize;
    for step in 0..n_max {
        if window.contains(&point.fiber) {
            count += 1;
        }
        while next < checkpoints.len() && step + 1 == checkpoints[next] {
            counts.push(count);
            next += 1;
        }
        if step + 1 < n_max {
            skew::tau_phi_step_in_place(beta, obs, &mut point)?;
        }
    }
    Ok(counts)
}

/// Central limit check: the distribution of centered, scaled Birkhoff sums
/// under the invariant measure against the standard Gaussian.
pub fn run_clt(cfg: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    let s = setup(cfg)?;
    let n = cfg.n as usize;
    let sigma = s.sigma2.sqrt();
    if s.sigma2 < 1e-12 {
        return degenerate(cfg, &s, "clt needs sigma^2 > 0");
    }
    let h_max = 1.0 / (1.0 - 1.0 / s.beta.value_f64());
    let pool = thread_pool();
    let results: Result<Vec<(f64, f64)>, ExperimentError> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = super::rng_stream(cfg.seed, trial);
                let word = spectral::sample_invariant_word(&s.beta, n, h_max, &mut rng)?;
                let phi_n = skew::birkhoff_forward_f64(&s.beta, &s.obs, &word, n);
                let z = (phi_n - n as f64 * s.mean) / (sigma * (n as f64).sqrt());
                Ok((phi_n, z))
            })
            .collect()
    });
    let results = results?;

    let mut table = CsvTable::new(&["trial", "n", "phi_n", "z"]);
    let mut zs = Vec::with_capacity(results.len());
    for (trial, (phi_n, z)) in results.iter().enumerate() {
        table.push(vec![
            trial.to_string(),
            cfg.n.to_string(),
            json_num(*phi_n),
            json_num(*z),
        ]);
        zs.push(*z);
    }
    let ks = stats::ks_statistic(&mut zs, stats::normal_cdf);

    let mut report = report_shell(cfg, &s, cfg.trials);
    report.verdict = if ks < cfg.thresholds.clt_ks {
        "PASS".into()
    } else {
        "FAIL".into()
    };
    report.summary = json!({
        "ks": ks,
        "threshold": cfg.thresholds.clt_ks,
    });
    Ok(RunOutput { report, table })
}

struct OrbitTrial {
    s_n: u64,
    phibar_ln: f64,
    resamples: u64,
}

/// One skew orbit of length `n` from a fresh Lebesgue-uniform start,
/// resampling the rare starts whose successor search fails.
fn orbit_trial(
    cfg: &ExperimentConfig,
    s: &Setup,
    trial: u64,
    l_n: usize,
) -> Result<OrbitTrial, ExperimentError> {
    let mut rng = super::rng_stream(cfg.seed, trial);
    let mut resamples = 0u64;
    loop {
        let word = s.beta.sample_uniform(cfg.depth, &mut rng);
        let phibar_ln = skew::birkhoff_forward_f64(&s.beta, &s.obs, &word, l_n)
            - l_n as f64 * s.mean;
        match occupation_checkpoints(&s.beta, &s.obs, word, &s.window, &[cfg.n]) {
            Ok(counts) => {
                return Ok(OrbitTrial {
                    s_n: counts[0],
                    phibar_ln,
                    resamples,
                })
            }
            Err(AdicError::MaximalPoint) => {
                resamples += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        }
    }
}

fn degenerate(
    cfg: &ExperimentConfig,
    s: &Setup,
    why: &str,
) -> Result<RunOutput, ExperimentError> {
    let mut report = report_shell(cfg, &s, 0);
    report.verdict = "DEGENERATE".into();
    report.summary = json!({ "reason": why });
    Ok(RunOutput {
        report,
        table: CsvTable::new(&["trial", "n", "s_n", "normalized", "phibar_ln"]),
    })
}

/// Occupancy distribution: normalized window counts of the skew orbit
/// against the two candidate limit laws.
pub fn run_ds(cfg: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    let s = setup(cfg)?;
    if s.sigma2 < 1e-12 {
        return degenerate(cfg, &s, "occupancy collapses when sigma^2 = 0");
    }
    let sigma = s.sigma2.sqrt();
    let l_n = block_rank(&s.beta, cfg.n, cfg.block_scale);
    let haar = s.window.haar();
    let scale = sigma * (2.0 * std::f64::consts::PI * l_n as f64).sqrt() / (cfg.n as f64 * haar);

    let pool = thread_pool();
    let results: Result<Vec<OrbitTrial>, ExperimentError> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|trial| orbit_trial(cfg, &s, trial, l_n))
            .collect()
    });
    let results = results?;

    let mut table = CsvTable::new(&["trial", "n", "s_n", "normalized", "phibar_ln"]);
    let mut normalized = Vec::with_capacity(results.len());
    let mut resamples = 0u64;
    for (trial, r) in results.iter().enumerate() {
        let v = scale * r.s_n as f64;
        table.push(vec![
            trial.to_string(),
            cfg.n.to_string(),
            r.s_n.to_string(),
            json_num(v),
            json_num(r.phibar_ln),
        ]);
        normalized.push(v);
        resamples += r.resamples;
    }

    let mut a = normalized.clone();
    let ks_half = stats::ks_statistic(&mut a, |v| {
        stats::cdf_exp_half_chi2(v.clamp(0.0, 1.0)).unwrap_or(1.0)
    });
    let mut b = normalized.clone();
    let ks_full = stats::ks_statistic(&mut b, |v| {
        stats::cdf_exp_chi2(v.clamp(0.0, 1.0)).unwrap_or(1.0)
    });
    let ks_best = ks_half.min(ks_full);

    normalized.sort_unstable_by(f64::total_cmp);
    let median = normalized[normalized.len() / 2];

    let mut report = report_shell(cfg, &s, cfg.trials);
    report.resamples = resamples;
    report.verdict = if ks_best < cfg.thresholds.ds_ks {
        "PASS".into()
    } else {
        "FAIL".into()
    };
    report.summary = json!({
        "block_rank": l_n as f64,
        "ks_half_chi2": ks_half,
        "ks_exp_chi2": ks_full,
        "ks_best": ks_best,
        "median_normalized": median,
        "threshold": cfg.thresholds.ds_ks,
    });
    Ok(RunOutput { report, table })
}

/// Pointwise identity: gated by the centered block sum, the scaled
/// occupation count must match the Gaussian exponential within `epsilon`.
pub fn run_lemma_final(cfg: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    let s = setup(cfg)?;
    if s.sigma2 < 1e-12 {
        return degenerate(cfg, &s, "identity collapses when sigma^2 = 0");
    }
    let sigma = s.sigma2.sqrt();
    let l_n = block_rank(&s.beta, cfg.n, cfg.block_scale);
    let haar = s.window.haar();
    let amplitude = haar / (sigma * (2.0 * std::f64::consts::PI).sqrt());

    let pool = thread_pool();
    let results: Result<Vec<OrbitTrial>, ExperimentError> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|trial| orbit_trial(cfg, &s, trial, l_n))
            .collect()
    });
    let results = results?;

    let mut table = CsvTable::new(&[
        "trial",
        "n",
        "s_n",
        "measured",
        "phibar_ln",
        "gated",
        "passed",
    ]);
    let mut gated = 0u64;
    let mut passed = 0u64;
    let mut resamples = 0u64;
    for (trial, r) in results.iter().enumerate() {
        let measured = (l_n as f64).sqrt() / cfg.n as f64 * r.s_n as f64;
        let in_gate =
            (r.phibar_ln / (sigma * (l_n as f64).sqrt())).abs() <= cfg.delta;
        let target = (-r.phibar_ln * r.phibar_ln / (2.0 * s.sigma2 * l_n as f64)).exp();
        let ok = in_gate
            && measured >= amplitude * (target - cfg.epsilon)
            && measured <= amplitude * (target + cfg.epsilon);
        if in_gate {
            gated += 1;
            if ok {
                passed += 1;
            }
        }
        resamples += r.resamples;
        table.push(vec![
            trial.to_string(),
            cfg.n.to_string(),
            r.s_n.to_string(),
            json_num(measured),
            json_num(r.phibar_ln),
            u8::from(in_gate).to_string(),
            u8::from(ok).to_string(),
        ]);
    }
    let pass_fraction = if gated > 0 {
        passed as f64 / gated as f64
    } else {
        0.0
    };

    let mut report = report_shell(cfg, &s, cfg.trials);
    report.resamples = resamples;
    report.verdict = if pass_fraction >= cfg.thresholds.lemma_pass_fraction {
        "PASS".into()
    } else {
        "FAIL".into()
    };
    report.summary = json!({
        "block_rank": l_n as f64,
        "gated_fraction": gated as f64 / cfg.trials as f64,
        "pass_fraction": pass_fraction,
        "threshold": cfg.thresholds.lemma_pass_fraction,
        "epsilon": cfg.epsilon,
        "delta": cfg.delta,
    });
    Ok(RunOutput { report, table })
}

/// Occupancy growth along a checkpoint schedule: sup/mean ratios and the
/// fitted exponent of the normalized means.
pub fn run_bre(cfg: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    let s = setup(cfg)?;
    if s.sigma2 < 1e-12 {
        return degenerate(cfg, &s, "occupancy collapses when sigma^2 = 0");
    }
    let schedule: Vec<u64> = match &cfg.schedule {
        Some(list) => {
            let mut v = list.clone();
            v.sort_unstable();
            v.dedup();
            if v.is_empty() || v[0] == 0 {
                return Err(ExperimentError::Config("schedule needs entries >= 1".into()));
            }
            v
        }
        None => vec![1_000, 10_000, 100_000, 1_000_000],
    };
    let n_max = *schedule.last().unwrap();
    let work = n_max.saturating_mul(cfg.trials);
    if work > 40_000_000_000 {
        return Err(ExperimentError::FeasibilityExceeded(format!(
            "points * n_max = {work}"
        )));
    }

    let pool = thread_pool();
    let results: Result<Vec<(Vec<u64>, u64)>, ExperimentError> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = super::rng_stream(cfg.seed, trial);
                let mut resamples = 0u64;
                loop {
                    let word = s.beta.sample_uniform(cfg.depth, &mut rng);
                    match occupation_checkpoints(&s.beta, &s.obs, word, &s.window, &schedule) {
                        Ok(counts) => return Ok((counts, resamples)),
                        Err(AdicError::MaximalPoint) => {
                            resamples += 1;
                            continue;
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
            })
            .collect()
    });
    let results = results?;

    let mut table = CsvTable::new(&["point", "n", "s_n", "normalized"]);
    let mut resamples = 0u64;
    for (point, (counts, re)) in results.iter().enumerate() {
        resamples += re;
        for (i, &n) in schedule.iter().enumerate() {
            let y = counts[i] as f64 * (n as f64).ln().sqrt() / n as f64;
            table.push(vec![
                point.to_string(),
                n.to_string(),
                counts[i].to_string(),
                json_num(y),
            ]);
        }
    }

    let mut ratios = Vec::with_capacity(schedule.len());
    let mut log_norm_means = Vec::with_capacity(schedule.len());
    let mut loglog_n = Vec::with_capacity(schedule.len());
    for (i, &n) in schedule.iter().enumerate() {
        let counts: Vec<f64> = results.iter().map(|(c, _)| c[i] as f64).collect();
        let sup = counts.iter().cloned().fold(0.0, f64::max);
        let mean = stats::mean(&counts);
        ratios.push(if mean > 0.0 { sup / mean } else { f64::INFINITY });
        let y = mean * (n as f64).ln().sqrt() / n as f64;
        log_norm_means.push(y.ln());
        loglog_n.push((n as f64).ln().ln());
    }
    let slope = stats::fit_slope(&loglog_n, &log_norm_means);
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);

    let mut report = report_shell(cfg, &s, cfg.trials);
    report.n = n_max;
    report.resamples = resamples;
    let pass = max_ratio < cfg.thresholds.bre_ratio && slope.abs() <= cfg.thresholds.bre_slope;
    report.verdict = if pass { "PASS".into() } else { "FAIL".into() };
    report.summary = json!({
        "max_sup_mean_ratio": max_ratio,
        "slope": slope,
        "ratio_threshold": cfg.thresholds.bre_ratio,
        "slope_threshold": cfg.thresholds.bre_slope,
        "schedule": schedule,
        "ratios": ratios,
    });
    Ok(RunOutput { report, table })
}

/// Local-limit profiles on preimage trees for a ladder of depths, checking
/// the Gaussian match at the deepest profile and a uniform scaled bound.
pub fn run_llt(cfg: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    let s = setup(cfg)?;
    if s.sigma2 < 1e-12 {
        return degenerate(cfg, &s, "profile collapses when sigma^2 = 0");
    }
    let n_hi = cfg.n as usize;
    if n_hi < 4 || n_hi > 18 {
        return Err(ExperimentError::Config(
            "profile depth must lie in 4..=18".into(),
        ));
    }
    let n_lo = n_hi.saturating_sub(6).max(4);
    let x = {
        let third = crate::ratio::parse_ratio("1/3")?;
        let (w, _) = s.beta.expand(&third, cfg.depth)?;
        w
    };

    let mut table = CsvTable::new(&["n", "k", "t", "value", "scaled", "gauss"]);
    let mut max_scaled_by_n = Vec::new();
    let mut max_rel_err = 0.0f64;
    let mut mass_hi = 0.0f64;
    for n in n_lo..=n_hi {
        let profile = spectral::llt_profile(&s.beta, &s.obs, &x, n, None, s.sigma2)?;
        let mut max_scaled = 0.0f64;
        for p in &profile.points {
            max_scaled = max_scaled.max(p.scaled);
            if n == n_hi && p.t.abs() <= 2.0 {
                let rel = (p.scaled / p.gauss - 1.0).abs();
                max_rel_err = max_rel_err.max(rel);
            }
            table.push(vec![
                n.to_string(),
                p.target.to_string(),
                json_num(p.t),
                json_num(p.raw),
                json_num(p.scaled),
                json_num(p.gauss),
            ]);
        }
        if n == n_hi {
            mass_hi = profile.mass;
        }
        max_scaled_by_n.push(max_scaled);
    }
    let uniform_max = max_scaled_by_n.iter().cloned().fold(0.0, f64::max);

    let mut report = report_shell(cfg, &s, 0);
    let pass = max_rel_err <= cfg.thresholds.llt_rel && uniform_max <= cfg.thresholds.llt_uniform;
    report.verdict = if pass { "PASS".into() } else { "FAIL".into() };
    report.summary = json!({
        "profile_n": n_hi as f64,
        "max_rel_err_t2": max_rel_err,
        "rel_threshold": cfg.thresholds.llt_rel,
        "uniform_max": uniform_max,
        "uniform_threshold": cfg.thresholds.llt_uniform,
        "mass": mass_hi,
        "max_scaled_by_n": max_scaled_by_n,
    });
    Ok(RunOutput { report, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::ExperimentKind;

    fn quick_ds_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Ds);
        cfg.n = 2_000;
        cfg.trials = 60;
        cfg.seed = 9;
        cfg.bins = 512;
        cfg
    }

    #[test]
    fn ds_run_is_bit_deterministic() {
        let cfg = quick_ds_config();
        let a = run_ds(&cfg).unwrap();
        let b = run_ds(&cfg).unwrap();
        assert_eq!(a.report.to_json(), b.report.to_json());
        assert_eq!(a.table.to_csv(), b.table.to_csv());
    }

    #[test]
    fn ds_determinism_is_independent_of_worker_count() {
        let cfg = quick_ds_config();
        let before = std::env::var("BETA_ADIC_THREADS").ok();
        std::env::set_var("BETA_ADIC_THREADS", "1");
        let a = run_ds(&cfg).unwrap();
        std::env::set_var("BETA_ADIC_THREADS", "4");
        let b = run_ds(&cfg).unwrap();
        match before {
            Some(v) => std::env::set_var("BETA_ADIC_THREADS", v),
            None => std::env::remove_var("BETA_ADIC_THREADS"),
        }
        assert_eq!(a.report.to_json(), b.report.to_json());
        assert_eq!(a.table.to_csv(), b.table.to_csv());
    }

    #[test]
    fn ds_flags_degenerate_observable() {
        let mut cfg = quick_ds_config();
        cfg.observable.kind = "constant".into();
        cfg.observable.value = Some("0".into());
        let out = run_ds(&cfg).unwrap();
        assert_eq!(out.report.verdict, "DEGENERATE");
    }

    #[test]
    fn ds_median_normalized_is_in_unit_interval() {
        let out = run_ds(&quick_ds_config()).unwrap();
        let median = out.report.summary["median_normalized"].as_f64().unwrap();
        assert!(median > 0.0 && median <= 1.0, "median {median}");
    }

    #[test]
    fn clt_small_run_reports_ks() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Clt);
        cfg.n = 400;
        cfg.trials = 400;
        cfg.bins = 512;
        cfg.seed = 5;
        let out = run_clt(&cfg).unwrap();
        let ks = out.report.summary["ks"].as_f64().unwrap();
        // Small-n run: generous bound, the acceptance suite pins the real one.
        assert!(ks < 0.10, "ks = {ks}");
        assert_eq!(out.table.rows.len(), 400);
    }

    #[test]
    fn bre_schedule_counts_are_monotone() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Bre);
        cfg.trials = 20;
        cfg.schedule = Some(vec![500, 1_000, 2_000]);
        cfg.bins = 512;
        let out = run_bre(&cfg).unwrap();
        let s: Vec<f64> = out.table.column_f64("s_n").unwrap();
        for chunk in s.chunks(3) {
            assert!(chunk[0] <= chunk[1] && chunk[1] <= chunk[2]);
        }
    }

    #[test]
    fn feasibility_guard_rejects_absurd_configs() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Ds);
        cfg.n = u64::MAX / 2;
        cfg.trials = 1_000;
        assert!(matches!(
            crate::experiments::run_experiment(&cfg),
            Err(ExperimentError::FeasibilityExceeded(_))
        ));
    }
}
