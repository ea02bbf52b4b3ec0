use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use tula_core::{
    check_assumption, classify_regime, estimate_lsi, gradient_check, radial_diagnostics, run_tula,
    Assumption, RegimeInput, TransformedPotential, TulaError,
};

use crate::config::{build_potential, read_partial, ExperimentConfig, TargetSpec, TransformSpec};
use crate::{CheckArgs, ClassifyArgs, Failure, GradcheckArgs, LsiArgs, SampleArgs, TargetArgs};

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn io_error(path: &Path, e: std::io::Error) -> Failure {
    Failure::Usage(format!("cannot write {}: {e}", path.display()))
}

fn core_error(e: TulaError) -> Failure {
    match e {
        TulaError::InvalidArgument(_) | TulaError::MomentDoesNotExist { .. } => {
            Failure::Usage(e.to_string())
        }
        _ => Failure::Check(e.to_string()),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, text + "\n").map_err(|e| io_error(path, e))
}

fn print_json(value: &impl Serialize, output: Option<&Path>) -> Result<(), Failure> {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("report serializes")
    );
    match output {
        Some(p) => write_json(p, value),
        None => Ok(()),
    }
}

/// Merges the optional config file with target flags (flags win).
fn resolve(args: &TargetArgs) -> Result<ExperimentConfig, Failure> {
    let partial = match &args.config {
        Some(p) => read_partial(p)?,
        None => Default::default(),
    };
    let file_target = partial.target.clone().unwrap_or_default();
    let name = args.target.clone().or(file_target.name).ok_or_else(|| {
        usage("the following required argument was not provided: --target <TARGET>")
    })?;
    let mut parameters = file_target.parameters;
    for (k, v) in [
        ("kappa", args.kappa),
        ("vartheta", args.vartheta),
        ("upsilon", args.upsilon),
    ] {
        if let Some(v) = v {
            parameters.insert(k.to_string(), v);
        }
    }
    for (k, v) in &args.params {
        parameters.insert(k.clone(), *v);
    }
    let target = TargetSpec {
        name,
        d: args.d.or(file_target.d),
        parameters,
    };
    let mut cfg = ExperimentConfig::new(target);
    if let Some(t) = partial.transform {
        cfg.transform = t;
    }
    if let (Some(b), Some(beta)) = (args.transform_b, args.transform_beta) {
        cfg.transform = TransformSpec::Exponential { b, beta };
    }
    if let Some(s) = partial.sampler {
        let c = &mut cfg.sampler;
        c.step_size = s.step_size.unwrap_or(c.step_size);
        c.num_steps = s.num_steps.unwrap_or(c.num_steps);
        c.seed = s.seed.unwrap_or(c.seed);
        c.thin = s.thin.unwrap_or(c.thin);
        c.num_chains = s.num_chains.unwrap_or(c.num_chains);
        if let Some(i) = s.initial {
            c.initial = i;
        }
    }
    cfg.analyses = partial.analyses.unwrap_or_default();
    if let Some(o) = partial.output_dir {
        cfg.output_dir = o;
    }
    cfg.burn_in = partial.burn_in;
    cfg.moments = partial.moments.unwrap_or_default();
    cfg.thresholds = partial.thresholds.unwrap_or_default();
    Ok(cfg)
}

fn target_summary(cfg: &ExperimentConfig, tp: &TransformedPotential) -> Value {
    json!({
        "name": cfg.target.name,
        "dimension": tp.dimension(),
        "parameters": cfg.target.parameters,
        "tail_index": tp.target.tail_index(),
        "transform": tp.transform,
    })
}

pub fn sample(args: &SampleArgs) -> Result<(), Failure> {
    let mut cfg = resolve(&args.target)?;
    let s = &mut cfg.sampler;
    s.step_size = args.gamma.unwrap_or(s.step_size);
    s.num_steps = args.steps.unwrap_or(s.num_steps);
    s.seed = args.seed.unwrap_or(s.seed);
    s.num_chains = args.chains.unwrap_or(s.num_chains);
    s.thin = args.thin.unwrap_or(s.thin);
    if let Some(b) = args.burn_in {
        cfg.burn_in = Some(b);
    }
    if let Some(o) = &args.output_dir {
        cfg.output_dir = o.clone();
    }
    if let Some(m) = &args.moments {
        cfg.moments = m.clone();
    }
    if let Some(t) = &args.thresholds {
        cfg.thresholds = t.clone();
    }
    if let Some(a) = &args.analyses {
        cfg.analyses = a.clone();
    }
    for a in &cfg.analyses {
        if !matches!(a.as_str(), "lsi" | "assumptions") {
            return Err(usage(format!(
                "unknown analysis '{a}' (expected lsi or assumptions)"
            )));
        }
    }
    let tp = build_potential(&cfg.target, &cfg.transform)?;
    let d = tp.dimension();
    if cfg.moments.is_empty() && tp.target.tail_index().is_none_or(|k| k > 1.0) {
        cfg.moments.push(1.0);
    }
    if let Some(k) = tp.target.tail_index() {
        if let Some(q) = cfg.moments.iter().find(|q| **q >= k) {
            return Err(core_error(TulaError::MomentDoesNotExist {
                order: *q,
                tail_index: k,
            }));
        }
    }
    cfg.sampler.validate(d).map_err(core_error)?;

    let run = run_tula(&tp, &cfg.sampler).map_err(core_error)?;

    let out = &cfg.output_dir;
    fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
    fs::write(out.join("config.toml"), cfg.to_toml()).map_err(|e| io_error(out, e))?;

    let chains_path = out.join("chains.csv");
    let traces_path = out.join("traces.csv");
    let mut w = csv::Writer::from_path(&chains_path)
        .map_err(|e| usage(format!("{}: {e}", chains_path.display())))?;
    let mut tr = csv::Writer::from_path(&traces_path)
        .map_err(|e| usage(format!("{}: {e}", traces_path.display())))?;
    let mut header = vec!["chain".to_string(), "step".to_string(), "space".to_string()];
    header.extend((0..d).map(|i| format!("coord{i}")));
    w.write_record(&header).map_err(usage)?;
    tr.write_record(["chain", "step", "radius"])
        .map_err(usage)?;
    for (c, chain) in run.chains.iter().enumerate() {
        for k in 0..chain.len() {
            let step = chain.steps[k].to_string();
            let y = run.y_sample(c, k);
            let x = run.x_sample(c, k);
            for (space, v) in [("y", y), ("x", x.as_slice())] {
                let mut row = vec![c.to_string(), step.clone(), space.to_string()];
                row.extend(v.iter().map(f64::to_string));
                w.write_record(&row).map_err(usage)?;
            }
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            tr.write_record([c.to_string(), step, r.to_string()])
                .map_err(usage)?;
        }
    }
    w.flush().map_err(|e| io_error(&chains_path, e))?;
    tr.flush().map_err(|e| io_error(&traces_path, e))?;

    let recorded = run.chains.iter().map(|c| c.len()).min().unwrap_or(0);
    let burn_in = cfg.burn_in.unwrap_or(recorded / 10);
    let diverged: Vec<Value> = run
        .chains
        .iter()
        .filter_map(|c| c.diverged_at.map(|s| json!({"chain": c.index, "step": s})))
        .collect();
    let mut report = serde_json::Map::new();
    let mut moments = Value::Null;
    if !run.divergence_flag {
        match radial_diagnostics(&run, &tp.target, burn_in, &cfg.moments, &cfg.thresholds) {
            Ok(diag) => {
                moments = serde_json::to_value(&diag.moments).expect("serializes");
                report.insert(
                    "radial".into(),
                    serde_json::to_value(diag).expect("serializes"),
                );
            }
            Err(TulaError::InvalidArgument(msg)) => {
                report.insert("radial".into(), json!({ "skipped": msg }));
            }
            Err(e) => return Err(core_error(e)),
        }
    }
    let summary = json!({
        "target": target_summary(&cfg, &tp),
        "seed": cfg.sampler.seed,
        "config": toml::from_str::<Value>(&cfg.to_toml()).expect("config echoes"),
        "recorded_per_chain": run.chains.iter().map(|c| c.len()).collect::<Vec<_>>(),
        "burn_in": burn_in,
        "divergence_flag": run.divergence_flag,
        "diverged": diverged,
        "moments": moments,
    });
    write_json(&out.join("summary.json"), &summary)?;

    if run.divergence_flag {
        return Err(Failure::Check(format!(
            "chain diverged (see {}); outputs cover the finite prefix",
            out.join("summary.json").display()
        )));
    }

    if cfg.analyses.iter().any(|a| a == "lsi") {
        let v = match estimate_lsi(&tp, 10.0, 2001) {
            Ok(est) => {
                json!({"a0": est.a0, "bound": est.bound, "root_residual": est.root_residual})
            }
            Err(e) => json!({ "error": e.to_string() }),
        };
        report.insert("lsi".into(), v);
    }
    if cfg.analyses.iter().any(|a| a == "assumptions") {
        let mut all = serde_json::Map::new();
        for which in Assumption::ALL {
            let v = match check_assumption(&tp, which, None, &BTreeMap::new()) {
                Ok(r) => json!({
                    "pass": r.pass,
                    "satisfied_from_radius": r.satisfied_from_radius,
                    "fitted_constants": r.fitted_constants,
                }),
                Err(e) => json!({ "error": e.to_string() }),
            };
            all.insert(which.to_string(), v);
        }
        report.insert("assumptions".into(), Value::Object(all));
    }
    write_json(&out.join("diagnostics.json"), &Value::Object(report))?;
    eprintln!("tula: wrote {}", out.display());
    Ok(())
}

pub fn check(args: &CheckArgs) -> Result<(), Failure> {
    let cfg = resolve(&args.target)?;
    let tp = build_potential(&cfg.target, &cfg.transform)?;
    let mut which = Vec::new();
    for a in &args.assumptions {
        if a.eq_ignore_ascii_case("all") {
            which.extend(Assumption::ALL);
        } else {
            which.push(a.parse::<Assumption>().map_err(core_error)?);
        }
    }
    which.sort();
    which.dedup();
    let grid = match (args.r_min, args.r_max) {
        (None, None) => None,
        (lo, hi) => {
            let lo = lo.unwrap_or_else(|| tp.transform.knot().max(0.1));
            let hi = hi.unwrap_or(100.0);
            if !(hi > lo && lo > 0.0) || args.grid_size < 2 {
                return Err(usage(format!(
                    "invalid grid [{lo}, {hi}] with {} points",
                    args.grid_size
                )));
            }
            let (a, b) = (lo.ln(), hi.ln());
            let n = args.grid_size;
            Some(
                (0..n)
                    .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                    .collect::<Vec<f64>>(),
            )
        }
    };
    let mut reports = Vec::new();
    let mut all_pass = true;
    for w in which {
        // Constants that belong to other assumptions are ignored here.
        let constants: BTreeMap<String, f64> = args
            .constants
            .iter()
            .filter(|(k, _)| owns(w, k))
            .cloned()
            .collect();
        let r = check_assumption(&tp, w, grid.as_deref(), &constants).map_err(core_error)?;
        all_pass &= r.pass;
        reports.push(json!({
            "assumption": r.assumption,
            "pass": r.pass,
            "satisfied_from_radius": r.satisfied_from_radius,
            "fitted_constants": r.fitted_constants,
            "note": r.note,
            "grid": r.grid,
            "lhs": r.lhs,
        }));
    }
    for (k, _) in &args.constants {
        if !Assumption::ALL.iter().any(|w| owns(*w, k)) {
            return Err(usage(format!("unknown constant '{k}'")));
        }
    }
    let out = json!({ "target": target_summary(&cfg, &tp), "pass": all_pass, "reports": reports });
    print_json(&out, args.output.as_deref())?;
    if all_pass {
        Ok(())
    } else {
        Err(Failure::Check("assumption check failed".into()))
    }
}

fn owns(w: Assumption, key: &str) -> bool {
    let names: &[&str] = match w {
        Assumption::A1Dissipativity => &["A", "B", "alpha"],
        Assumption::A2DegenerateConvexity => &["mu", "theta"],
        Assumption::A3StrongConvexity => &["rho"],
        Assumption::A4GradientLipschitz => &["L"],
        Assumption::A5Tail => &["m", "alpha1", "C_tail"],
    };
    names.contains(&key)
}

pub fn lsi(args: &LsiArgs) -> Result<(), Failure> {
    let cfg = resolve(&args.target)?;
    let tp = build_potential(&cfg.target, &cfg.transform)?;
    let est = estimate_lsi(&tp, args.r_max, args.grid_size).map_err(core_error)?;
    if let Some(p) = &args.csv {
        fs::write(p, est.to_csv()).map_err(|e| io_error(p, e))?;
    }
    let out = json!({
        "target": target_summary(&cfg, &tp),
        "r_max": args.r_max,
        "grid_size": args.grid_size,
        "a0": est.a0,
        "bound": est.bound,
        "root_residual": est.root_residual,
        "tail_floor": est.tail_floor,
        "beta_bar_min": est.beta_bar.first(),
    });
    print_json(&out, args.output.as_deref())
}

pub fn classify(args: &ClassifyArgs) -> Result<(), Failure> {
    let need = |name: &str, v: Option<f64>| {
        v.ok_or_else(|| usage(format!("--{name} is required for this assumption")))
    };
    let key = args.assumption.to_ascii_lowercase().replace('-', "_");
    let input = match key.as_str() {
        "dissipativity" | "a3" => RegimeInput::Dissipativity {
            alpha: need("alpha", args.alpha)?,
            beta: args.beta,
            b: args.b,
            a: need("A", args.a)?,
            b_const: args.b_const,
        },
        "degenerate_convexity" | "a5" => RegimeInput::DegenerateConvexity {
            mu: need("mu", args.mu)?,
            theta: need("theta", args.theta)?,
            beta: args.beta,
            b: args.b,
        },
        "strong_convexity" | "a1" => RegimeInput::StrongConvexity {
            rho: need("rho", args.rho)?,
            beta: args.beta,
            b: args.b,
        },
        _ => return Err(usage(format!("unknown assumption '{}'", args.assumption))),
    };
    let verdict = classify_regime(&input, args.vartheta, args.d).map_err(core_error)?;
    let out = json!({
        "input": input,
        "vartheta": args.vartheta,
        "d": args.d,
        "regime": verdict.regime,
        "rule_fired": verdict.rule_fired,
        "witness": verdict.witness,
        "witness_text": verdict.witness.as_ref().map(|w| w.to_string()),
    });
    print_json(&out, None)
}

pub fn gradcheck(args: &GradcheckArgs) -> Result<(), Failure> {
    let cfg = resolve(&args.target)?;
    let tp = build_potential(&cfg.target, &cfg.transform)?;
    let r_max = args.r_max.unwrap_or(3.0 * tp.transform.knot().max(1.0));
    let rep = gradient_check(&tp, args.points, args.r_min, r_max, args.seed).map_err(core_error)?;
    let pass = rep.max_gradient_rel_error < 1e-5 && rep.max_eigenvalue_rel_error < 1e-4;
    let out = json!({
        "target": target_summary(&cfg, &tp),
        "report": rep,
        "tolerances": {"gradient": 1e-5, "eigenvalue": 1e-4},
        "pass": pass,
    });
    print_json(&out, None)?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Check(
            "finite-difference check exceeded tolerance".into(),
        ))
    }
}
