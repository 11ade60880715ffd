//! Execution of one configured subcommand.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use selgen::coaltheory::{
    beta_rate_closed_form, check_consistency, choose_f64, simulate_lambda_coalescent,
    simulate_xi_discrete, xi_discrete_prob, xi_no_merge_prob, xi_signature_distribution,
    BetaClosedForm, Kingman, MeasureSpec, RateSource, RateTable,
};
use selgen::fitnesswf::{wf_generation, FitnessSpec};
use selgen::frontprop::{
    front_position, gumbel_speed_reference, measure_front_speed_from, sample_invariant_gumbel,
    simulate_front, write_trajectory_csv, NoiseSpec, PopulationState,
};
use selgen::genealogy::{
    estimate_cn, first_merger_statistics, CnReport, FirstMergerStats, PopulationModel,
};
use selgen::moments::{
    asymptotic_eta_moment, eta_moment_mc, eta_moment_quadrature, write_moment_csv, MomentRow,
    QuadratureSpec,
};
use selgen::rng::{derive_seed, streams};
use selgen::stats::{chi_square_gof, mean_se, Accumulator};
use selgen::MergerSignature;

use crate::config::{
    EstimateCnConfig, ExperimentConfig, FrontSpeedConfig, MergerStatsConfig, Params,
    ReferenceConfig, ReferenceKind, SimulateFrontConfig, SimulateWfConfig, Start,
    VerifyMomentsConfig, VerifyRatesConfig,
};
use crate::CliError;

/// Outcome of a run: the data payload of the JSON summary, whether every
/// tolerance held, and the CSV tables to write.
pub struct Outcome {
    pub results: Value,
    pub pass: bool,
    pub tables: Vec<(String, Vec<u8>)>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    match &cfg.params {
        Params::SimulateFront(p) => simulate_front_cmd(p, cfg.seed),
        Params::SimulateWf(p) => simulate_wf_cmd(p, cfg.seed),
        Params::EstimateCn(p) => estimate_cn_cmd(p, cfg.seed),
        Params::MergerStats(p) => merger_stats_cmd(p, cfg.seed),
        Params::VerifyRates(p) => verify_rates_cmd(p),
        Params::VerifyMoments(p) => verify_moments_cmd(p, cfg.seed),
        Params::FrontSpeed(p) => front_speed_cmd(p, cfg.seed),
        Params::Reference(p) => reference_cmd(p, cfg.seed),
    }
}

fn csv_table<R: Serialize>(rows: &[R]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

fn initial_front(n: usize, noise: &NoiseSpec, start: Start, seed: u64) -> Result<PopulationState, CliError> {
    Ok(match (start, noise) {
        (Start::Invariant, NoiseSpec::Gumbel { beta, .. }) => {
            sample_invariant_gumbel(n, *beta, derive_seed(seed, streams::SAMPLE, 0))?
        }
        _ => PopulationState::zeros(n)?,
    })
}

fn simulate_front_cmd(p: &SimulateFrontConfig, seed: u64) -> Result<Outcome, CliError> {
    let x0 = initial_front(p.n_pop, &p.noise, p.start, seed)?;
    let traj = simulate_front(&x0, &p.noise, p.generations, seed, true)?;
    let phi: Vec<f64> = traj
        .states
        .iter()
        .map(|s| front_position(s, p.beta))
        .collect::<selgen::Result<_>>()?;
    let nf = p.n_pop as f64;
    let mut pairs = Accumulator::default();
    if p.n_pop > 1 {
        for row in &traj.rows {
            pairs.push(row.to_record().pair_sum() / (nf * (nf - 1.0)));
        }
    }
    let mut csv = Vec::new();
    write_trajectory_csv(&mut csv, &traj)?;
    #[derive(Serialize)]
    struct PhiRow {
        generation: usize,
        front_position: f64,
    }
    let phi_rows: Vec<PhiRow> = phi
        .iter()
        .enumerate()
        .map(|(generation, &front_position)| PhiRow { generation, front_position })
        .collect();
    let last = *phi.last().expect("trajectory has a state");
    Ok(Outcome {
        results: json!({
            "initial_front_position": phi[0],
            "final_front_position": last,
            "mean_speed": (last - phi[0]) / p.generations as f64,
            "pair_coalescence_mean": if p.n_pop > 1 { Some(pairs.mean()) } else { None },
        }),
        pass: true,
        tables: vec![
            ("trajectory.csv".into(), csv),
            ("front_position.csv".into(), csv_table(&phi_rows)?),
        ],
    })
}

fn simulate_wf_cmd(p: &SimulateWfConfig, seed: u64) -> Result<Outcome, CliError> {
    #[derive(Serialize)]
    struct Row {
        generation: usize,
        individual: usize,
        eta: f64,
        parent: u32,
        offspring: u32,
    }
    let mut rows = Vec::new();
    let mut pairs = Accumulator::default();
    let nf = p.n_pop as f64;
    for g in 0..p.generations {
        let (eta, rec) = wf_generation(&p.fitness, p.n_pop, derive_seed(seed, streams::GENERATION, g as u64))?;
        if p.n_pop > 1 {
            pairs.push(rec.pair_sum() / (nf * (nf - 1.0)));
        }
        for i in 0..p.n_pop {
            rows.push(Row {
                generation: g,
                individual: i,
                eta: eta.weights()[i],
                parent: rec.parent_of[i],
                offspring: rec.offspring_counts[i],
            });
        }
    }
    let est = pairs.estimate();
    Ok(Outcome {
        results: json!({
            "fitness": p.fitness.name(),
            "pair_coalescence_mean": if p.n_pop > 1 { Some(est.mean) } else { None },
            "pair_coalescence_se": if p.n_pop > 1 { Some(est.se) } else { None },
        }),
        pass: true,
        tables: vec![("generations.csv".into(), csv_table(&rows)?)],
    })
}

fn estimate_cn_cmd(p: &EstimateCnConfig, seed: u64) -> Result<Outcome, CliError> {
    #[derive(Serialize)]
    struct Row {
        #[serde(rename = "N")]
        n_pop: usize,
        pair_estimate: f64,
        pair_se: f64,
        accumulated_estimate: f64,
        accumulated_se: f64,
    }
    let mut pass = true;
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for (i, &n_pop) in p.n_grid.iter().enumerate() {
        let stats = estimate_cn(&p.model, n_pop, p.n, p.replicates, derive_seed(seed, streams::REPLICATE, i as u64))?;
        let se = stats.standard_error.hypot(stats.accumulated_se);
        let gap = (stats.pair_coalescence_estimate - stats.accumulated_estimate).abs();
        let agree = gap == 0.0 || gap <= p.agreement_z * se;
        let expected_ok = p
            .expected
            .map(|e| (stats.pair_coalescence_estimate - e).abs() <= p.rel_tol * e);
        pass &= agree && expected_ok.unwrap_or(true);
        let report = CnReport::new(&p.model, n_pop, p.n, p.replicates, &stats);
        let mut value = serde_json::to_value(&report)?;
        let obj = value.as_object_mut().expect("report is an object");
        obj.insert("accumulated_estimate".into(), json!(stats.accumulated_estimate));
        obj.insert("accumulated_se".into(), json!(stats.accumulated_se));
        obj.insert("estimators_agree".into(), json!(agree));
        if let Some(ok) = expected_ok {
            obj.insert("expected".into(), json!(p.expected));
            obj.insert("within_tolerance".into(), json!(ok));
        }
        reports.push(value);
        rows.push(Row {
            n_pop,
            pair_estimate: stats.pair_coalescence_estimate,
            pair_se: stats.standard_error,
            accumulated_estimate: stats.accumulated_estimate,
            accumulated_se: stats.accumulated_se,
        });
    }
    Ok(Outcome {
        results: json!({ "runs": reports }),
        pass,
        tables: vec![("cn.csv".into(), csv_table(&rows)?)],
    })
}

/// Limit share of first mergers among `n` lineages that join all of them
/// at once, when the model's limit coalescent is known.
pub fn predicted_full_merger_fraction(model: &PopulationModel, n: usize) -> Result<Option<f64>, CliError> {
    let alpha = match model {
        PopulationModel::Front { noise: NoiseSpec::Gumbel { .. }, .. } => Some(1.0),
        PopulationModel::Front { .. } => None,
        PopulationModel::Wf { fitness } => match fitness {
            FitnessSpec::ParetoTail { alpha } => Some(*alpha),
            FitnessSpec::InverseExponential => Some(1.0),
            FitnessSpec::ExponentialY | FitnessSpec::ConstantY => Some(f64::INFINITY),
        },
    };
    let Some(alpha) = alpha else { return Ok(None) };
    if n == 2 {
        return Ok(Some(1.0));
    }
    if alpha >= 2.0 {
        return Ok(Some(0.0));
    }
    if alpha >= 1.0 {
        let total: f64 = (2..=n)
            .map(|k| Ok(choose_f64(n, k) * beta_rate_closed_form(alpha, n, k)?))
            .sum::<selgen::Result<f64>>()?;
        return Ok(Some(beta_rate_closed_form(alpha, n, n)? / total));
    }
    if n > 30 {
        return Ok(None);
    }
    let all = MergerSignature::new(vec![n], 0)?;
    Ok(Some(xi_discrete_prob(alpha, &all)? / (1.0 - xi_no_merge_prob(alpha, n)?)))
}

fn merger_stats_cmd(p: &MergerStatsConfig, seed: u64) -> Result<Outcome, CliError> {
    let target = MergerSignature::new(vec![p.n], 0)?;
    let (stats, per) = first_merger_statistics(
        &p.model,
        p.n_pop,
        p.n,
        &target,
        p.min_events,
        p.min_generations,
        p.max_generations,
        seed,
    )?;
    let fraction = FirstMergerStats::fraction(&per);
    let expected = match p.expected_fraction {
        Some(e) => Some(e),
        None => predicted_full_merger_fraction(&p.model, p.n)?,
    };
    let within = expected.map(|e| (fraction.mean - e).abs() <= p.tolerance);
    #[derive(Serialize)]
    struct Row {
        signature: String,
        count: u64,
        fraction: f64,
    }
    let rows: Vec<Row> = stats
        .first_mergers
        .iter()
        .map(|(sig, &count)| Row {
            signature: sig.to_string(),
            count,
            fraction: count as f64 / stats.merge_events as f64,
        })
        .collect();
    let histogram: BTreeMap<String, u64> =
        stats.first_mergers.iter().map(|(s, &c)| (s.to_string(), c)).collect();
    Ok(Outcome {
        results: json!({
            "model": p.model.name(),
            "N": p.n_pop,
            "n": p.n,
            "full_merger_signature": target.to_string(),
            "full_merger_fraction": fraction.mean,
            "full_merger_se": fraction.se,
            "expected_fraction": expected,
            "within_tolerance": within,
            "merge_events": stats.merge_events,
            "samples": stats.samples,
            "generations": stats.generations,
            "first_merger_histogram": histogram,
        }),
        pass: within.unwrap_or(true),
        tables: vec![("first_mergers.csv".into(), csv_table(&rows)?)],
    })
}

fn verify_rates_cmd(p: &VerifyRatesConfig) -> Result<Outcome, CliError> {
    let closed = RateTable::build(&BetaClosedForm { alpha: p.alpha }, p.max_b)?;
    let quad = RateTable::from_measure(&MeasureSpec::beta_coalescent(p.alpha), p.max_b)?;
    #[derive(Serialize)]
    struct Row {
        b: usize,
        k: usize,
        closed_form: f64,
        quadrature: f64,
        rel_err: f64,
    }
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for b in 2..=p.max_b {
        for k in 2..=b {
            let c = closed.get(b, k)?;
            let q = quad.get(b, k)?;
            let rel_err = ((c - q) / c).abs();
            worst = worst.max(rel_err);
            rows.push(Row { b, k, closed_form: c, quadrature: q, rel_err });
        }
    }
    let cons_closed = check_consistency(&closed, p.consistency_tol);
    let cons_quad = check_consistency(&quad, p.consistency_tol);
    let pass = worst <= p.rel_tol && cons_closed.failing.is_empty() && cons_quad.failing.is_empty();
    Ok(Outcome {
        results: json!({
            "alpha": p.alpha,
            "max_rel_err": worst,
            "consistency_closed_form": cons_closed,
            "consistency_quadrature": cons_quad,
        }),
        pass,
        tables: vec![("rates.csv".into(), csv_table(&rows)?)],
    })
}

fn verify_moments_cmd(p: &VerifyMomentsConfig, seed: u64) -> Result<Outcome, CliError> {
    let q = QuadratureSpec::default();
    let mut rows = Vec::new();
    let mut pass = true;
    let alpha = p.fitness.tail_index();
    for (i, &n) in p.n_grid.iter().enumerate() {
        let quad = eta_moment_quadrature(&p.fitness, n, &p.b_list, &q)?;
        let mc = if p.mc_samples > 0 {
            Some(eta_moment_mc(&p.fitness, n, &p.b_list, p.mc_samples, derive_seed(seed, streams::MOMENTS, i as u64))?)
        } else {
            None
        };
        if let Some(m) = mc {
            // heavy tails make the sample error dominate; accept either bound
            pass &= (m.mean - quad.value).abs() <= (p.rel_tol * quad.value).max(4.0 * m.se);
        }
        let asymptotic = match alpha {
            Some(a) if a <= 2.0 && n >= 2 => asymptotic_eta_moment(a, p.fitness.mean(), n, &p.b_list).ok(),
            _ => None,
        };
        rows.push(MomentRow {
            n,
            alpha,
            b_list: p.b_list.clone(),
            quadrature_value: quad.value,
            mc_value: mc.map(|m| m.mean),
            mc_se: mc.map(|m| m.se),
            asymptotic_value: asymptotic,
            ratio: asymptotic.map(|a| quad.value / a),
        });
    }
    let mut csv = Vec::new();
    write_moment_csv(&mut csv, &rows)?;
    Ok(Outcome {
        results: json!({ "fitness": p.fitness.name(), "rows": rows }),
        pass,
        tables: vec![("moments.csv".into(), csv)],
    })
}

fn front_speed_cmd(p: &FrontSpeedConfig, seed: u64) -> Result<Outcome, CliError> {
    let x0 = initial_front(p.n_pop, &p.noise, p.start, seed)?;
    let speed = measure_front_speed_from(&x0, &p.noise, p.beta, p.generations, p.burn_in, seed)?;
    let reference = match p.noise {
        NoiseSpec::Gumbel { rho, beta } if p.oracle_samples > 0 => Some(gumbel_speed_reference(
            p.n_pop,
            rho,
            beta,
            p.oracle_samples,
            derive_seed(seed, streams::SAMPLE, 1),
        )?),
        NoiseSpec::Deterministic { value } => Some(mean_se(&[value])),
        _ => None,
    };
    let rel_err = reference.map(|r| ((speed - r.mean) / r.mean).abs());
    let pass = rel_err.is_none_or(|e| e <= p.rel_tol);
    Ok(Outcome {
        results: json!({
            "speed": speed,
            "reference_speed": reference.map(|r| r.mean),
            "reference_se": reference.map(|r| r.se),
            "rel_err": rel_err,
        }),
        pass,
        tables: Vec::new(),
    })
}

fn reference_cmd(p: &ReferenceConfig, seed: u64) -> Result<Outcome, CliError> {
    #[derive(Serialize)]
    struct Row {
        replicate: usize,
        tmrca: Option<f64>,
        events: usize,
        first_signature: String,
    }
    let source: Option<Box<dyn RateSource>> = match p.kind {
        ReferenceKind::Kingman => Some(Box::new(Kingman)),
        ReferenceKind::Beta => Some(Box::new(BetaClosedForm { alpha: p.alpha.expect("validated") })),
        ReferenceKind::BolthausenSznitman => Some(Box::new(BetaClosedForm { alpha: 1.0 })),
        ReferenceKind::Xi => None,
    };
    let mut rows = Vec::new();
    let mut first: BTreeMap<MergerSignature, u64> = BTreeMap::new();
    let mut tmrca = Accumulator::default();
    for r in 0..p.replicates {
        let s = derive_seed(seed, streams::COALESCENT, r as u64);
        let path = match &source {
            Some(src) => simulate_lambda_coalescent(p.n, src.as_ref(), p.horizon, s)?,
            None => simulate_xi_discrete(p.n, p.alpha.expect("validated"), p.generations, s)?,
        };
        let sigs = path.signatures();
        let done = path.last().block_count() == 1;
        let t = done.then(|| *path.times().last().expect("nonempty"));
        if let Some(t) = t {
            tmrca.push(t);
        }
        let first_sig = sigs.first().cloned();
        if let Some(sig) = &first_sig {
            *first.entry(sig.clone()).or_insert(0) += 1;
        }
        rows.push(Row {
            replicate: r,
            tmrca: t,
            events: sigs.len(),
            first_signature: first_sig.map(|s| s.to_string()).unwrap_or_default(),
        });
    }
    // Predicted law of the first merger.
    let predicted: Vec<(MergerSignature, f64)> = match &source {
        Some(src) => {
            let w: Vec<f64> = (2..=p.n)
                .map(|k| Ok(choose_f64(p.n, k) * src.rate(p.n, k)?))
                .collect::<selgen::Result<_>>()?;
            let total: f64 = w.iter().sum();
            (2..=p.n)
                .map(|k| Ok((MergerSignature::new(vec![k], p.n - k)?, w[k - 2] / total)))
                .collect::<selgen::Result<_>>()?
        }
        None => {
            let dist = xi_signature_distribution(p.alpha.expect("validated"), p.n)?;
            let merge: f64 = dist.iter().filter(|(s, _)| s.is_merge()).map(|(_, q)| q).sum();
            dist.into_iter()
                .filter(|(s, _)| s.is_merge())
                .map(|(s, q)| (s, q / merge))
                .collect()
        }
    };
    let observed: Vec<u64> = predicted.iter().map(|(s, _)| first.get(s).copied().unwrap_or(0)).collect();
    let probs: Vec<f64> = predicted.iter().map(|(_, q)| *q).collect();
    let total_first: u64 = first.values().sum();
    let support: Vec<&(MergerSignature, f64)> = predicted.iter().filter(|(_, q)| *q > 0.0).collect();
    let outside = total_first - observed.iter().sum::<u64>();
    let (p_value, pass) = if support.len() < 2 {
        let only = support.first().map(|(s, _)| first.get(s).copied().unwrap_or(0)).unwrap_or(0);
        (None, only == total_first)
    } else {
        let keep: Vec<usize> = (0..probs.len()).filter(|&i| probs[i] > 0.0).collect();
        let obs: Vec<u64> = keep.iter().map(|&i| observed[i]).collect();
        let pr: Vec<f64> = keep.iter().map(|&i| probs[i]).collect();
        let t = chi_square_gof(&obs, &pr, 5.0)?;
        (Some(t.p_value), t.p_value > 1e-3 && outside == 0)
    };
    let predicted_json: BTreeMap<String, f64> = predicted.iter().map(|(s, q)| (s.to_string(), *q)).collect();
    let observed_json: BTreeMap<String, u64> = first.iter().map(|(s, c)| (s.to_string(), *c)).collect();
    let t = tmrca.estimate();
    Ok(Outcome {
        results: json!({
            "kind": p.kind,
            "n": p.n,
            "replicates": p.replicates,
            "completed": tmrca.n,
            "tmrca_mean": if tmrca.n > 0 { Some(t.mean) } else { None },
            "tmrca_se": if tmrca.n > 0 { Some(t.se) } else { None },
            "first_merger_observed": observed_json,
            "first_merger_predicted": predicted_json,
            "chi_square_p_value": p_value,
        }),
        pass,
        tables: vec![("reference.csv".into(), csv_table(&rows)?)],
    })
}
