//! Command-line front end: loads scenario files, runs the analyses and
//! simulators, and prints JSON (or CSV for sweeps) to stdout or --out.
//!
//! Exit codes: 0 success, 2 scenario/argument validation failure, 1 internal
//! inconsistency (e.g. an off-path announcement during inference).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use msrlab::{
    adversarial_structure, classify, classify_separability, cost_sweep, format_rat,
    full_support_priors, kappa_separability_scan, market_value, parse_rat, run_market,
    run_market_exact, run_poll, run_poll_exact, AccuracyRecord, KappaVerdict, MarketError,
    MarketTrace, Rat, Scenario, ScanGrid, Security, SecurityClass, SeparabilityVerdict,
};

#[derive(Parser)]
#[command(name = "msrlab", version, about = "Scoring-rule market laboratory")]
struct Cli {
    /// write output to this file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify a security's payoff shape (cases 0-3)
    Classify {
        /// comma-separated payoffs, e.g. 0,1,2,3 ("p/q" rationals allowed)
        #[arg(long, value_delimiter = ',', conflicts_with = "scenario")]
        payoffs: Option<Vec<String>>,
        /// scenario file supplying the security
        scenario: Option<PathBuf>,
        /// for case-2 securities: emit the adversarial structure with this
        /// mass on each repeated-value state ("p/q" in (0, 1/2))
        #[arg(long)]
        mass: Option<String>,
    },
    /// Structure-level separability: non-separability witness or certificate
    CheckSeparable { scenario: PathBuf },
    /// Cost-aware separability scan at the scenario's menu and cost
    CheckKappa {
        scenario: PathBuf,
        /// override the scenario's marginal cost
        #[arg(long)]
        c: Option<f64>,
    },
    /// Run the sequential market, printing one JSON line per trace
    Simulate {
        scenario: PathBuf,
        /// true state by name (default: every state in the prior's support)
        #[arg(long)]
        state: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_rounds: Option<usize>,
        /// enumerate every realization branch instead of sampling
        #[arg(long)]
        exact: bool,
    },
    /// Run the one-shot poll at a true state
    Poll {
        scenario: PathBuf,
        #[arg(long)]
        state: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// enumerate realization branches instead of sampling
        #[arg(long)]
        exact: bool,
    },
    /// Sweep marginal cost downward, printing a CSV of accuracies
    SweepCost {
        scenario: PathBuf,
        /// grid as start:step:stop, e.g. 6:0.1:0.1 (strictly decreasing)
        #[arg(long)]
        c_grid: String,
    },
    /// Worst-case market-minus-poll accuracy over a full-support prior grid
    Value {
        scenario: PathBuf,
        /// prior grid resolution: probabilities are multiples of 1/denominator
        #[arg(long, default_value_t = 16)]
        denominator: u32,
    },
}

enum CliError {
    Validation(String),
    Internal(String),
}

impl From<msrlab::ScenarioError> for CliError {
    fn from(e: msrlab::ScenarioError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<MarketError> for CliError {
    fn from(e: MarketError) -> Self {
        match e {
            MarketError::ImpossibleState(_) => CliError::Validation(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = String::new();
    let result = run(&cli.cmd, &mut out);
    match result {
        Ok(()) => match &cli.out {
            None => {
                print!("{out}");
                ExitCode::SUCCESS
            }
            Some(path) => match std::fs::write(path, &out) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    ExitCode::from(2)
                }
            },
        },
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: &Cmd, out: &mut String) -> Result<(), CliError> {
    match cmd {
        Cmd::Classify {
            payoffs,
            scenario,
            mass,
        } => cmd_classify(payoffs.as_deref(), scenario.as_deref(), mass.as_deref(), out),
        Cmd::CheckSeparable { scenario } => {
            let sc = Scenario::from_file(scenario)?;
            let verdict = classify_separability(&sc.security, &sc.structure);
            push_json(out, &separability_json(&sc, &verdict));
            Ok(())
        }
        Cmd::CheckKappa { scenario, c } => {
            let sc = Scenario::from_file(scenario)?;
            let kappa = match c {
                Some(c) if *c > 0.0 && c.is_finite() => sc.kappa.with_marginal_cost(*c),
                Some(c) => {
                    return Err(CliError::Validation(format!(
                        "marginal cost must be positive and finite, got {c}"
                    )))
                }
                None => sc.kappa.clone(),
            };
            let verdict = kappa_separability_scan(
                &sc.security,
                &sc.structure,
                &kappa,
                &sc.menu,
                &sc.rule,
                &ScanGrid::default(),
            );
            push_json(out, &kappa_json(&sc, kappa.c, &verdict));
            Ok(())
        }
        Cmd::Simulate {
            scenario,
            state,
            seed,
            max_rounds,
            exact,
        } => {
            let mut sc = Scenario::from_file(scenario)?;
            if let Some(m) = max_rounds {
                sc.max_rounds = *m;
            }
            let cfg = sc.market_config();
            let exact = *exact || sc.rational_mode;
            for s in states_to_run(&sc, state.as_deref())? {
                if exact {
                    for (prob, trace) in run_market_exact(&cfg, s)? {
                        push_json(out, &trace_json(&sc, &trace, Some(&prob)));
                    }
                } else {
                    let trace = run_market(&cfg, s, *seed)?;
                    push_json(out, &trace_json(&sc, &trace, None));
                }
            }
            Ok(())
        }
        Cmd::Poll {
            scenario,
            state,
            seed,
            exact,
        } => {
            let sc = Scenario::from_file(scenario)?;
            let cfg = sc.market_config();
            let exact = *exact || sc.rational_mode;
            for s in states_to_run(&sc, state.as_deref())? {
                if exact {
                    let branches = run_poll_exact(&cfg, s)?;
                    let v = json!({
                        "true_state": sc.states.name(s),
                        "branches": branches.iter().map(|(p, mean)| json!({
                            "prob": format_rat(p),
                            "mean": format_rat(mean),
                        })).collect::<Vec<_>>(),
                    });
                    push_json(out, &v);
                } else {
                    let poll = run_poll(&cfg, s, *seed)?;
                    let v = json!({
                        "true_state": sc.states.name(s),
                        "announcements": rats(&poll.announcements),
                        "mean": format_rat(&poll.mean),
                        "accuracy": poll.accuracy,
                    });
                    push_json(out, &v);
                }
            }
            Ok(())
        }
        Cmd::SweepCost { scenario, c_grid } => {
            let sc = Scenario::from_file(scenario)?;
            let grid = parse_c_grid(c_grid)?;
            let cfg = sc.market_config();
            let sweep =
                cost_sweep(&cfg, &grid).map_err(|e| CliError::Validation(e.to_string()))?;
            out.push_str("c,a_market,a_poll,jumped\n");
            for r in &sweep.records {
                out.push_str(&csv_row(r));
            }
            if let Some(t) = sweep.threshold {
                out.push_str(&format!("# threshold,{t}\n"));
            }
            Ok(())
        }
        Cmd::Value {
            scenario,
            denominator,
        } => {
            let sc = Scenario::from_file(scenario)?;
            let priors = full_support_priors(sc.states.len(), *denominator);
            if priors.is_empty() {
                return Err(CliError::Validation(format!(
                    "denominator {denominator} is too small for {} states",
                    sc.states.len()
                )));
            }
            let cfg = sc.market_config();
            let mv = market_value(&cfg, &priors)?;
            let v = json!({
                "value": mv.value,
                "argmin_prior": rats(priors[mv.argmin].probs()),
                "denominator": denominator,
                "grid_size": priors.len(),
            });
            push_json(out, &v);
            Ok(())
        }
    }
}

fn cmd_classify(
    payoffs: Option<&[String]>,
    scenario: Option<&std::path::Path>,
    mass: Option<&str>,
    out: &mut String,
) -> Result<(), CliError> {
    let x = match (payoffs, scenario) {
        (Some(list), _) => {
            let parsed: Result<Vec<Rat>, _> = list.iter().map(|s| parse_rat(s)).collect();
            Security::new(parsed.map_err(CliError::Validation)?)
        }
        (None, Some(path)) => Scenario::from_file(path)?.security,
        (None, None) => {
            return Err(CliError::Validation(
                "classify needs --payoffs or a scenario file".into(),
            ))
        }
    };
    let class = classify(&x).map_err(|e| CliError::Validation(e.to_string()))?;
    let mut v = class_json(&class);
    if let Some(m) = mass {
        let m = parse_rat(m).map_err(CliError::Validation)?;
        let adv = adversarial_structure(&x, &m).map_err(|e| CliError::Validation(e.to_string()))?;
        v["adversarial"] = json!({
            "partitions": (0..adv.structure.num_traders())
                .map(|i| adv.structure.cells(i).to_vec())
                .collect::<Vec<_>>(),
            "witness_prior": rats(adv.witness.prior.probs()),
            "witness_value": format_rat(&adv.witness.value),
            "mass": format_rat(&adv.m),
            "states": adv.states,
        });
    }
    push_json(out, &v);
    Ok(())
}

fn class_json(class: &SecurityClass) -> Value {
    match class {
        SecurityClass::Constant { value } => json!({
            "case": 0, "kind": "constant", "value": format_rat(value),
        }),
        SecurityClass::AlwaysSeparable {
            kind,
            repeated,
            outside,
        } => json!({
            "case": 1,
            "kind": "always_separable",
            "shape": format!("{kind:?}"),
            "repeated_value": format_rat(repeated),
            "outside_states": outside,
        }),
        SecurityClass::NonSeparableForAllCosts {
            states,
            pay_a,
            pay_b,
            pay_d,
        } => json!({
            "case": 2,
            "kind": "non_separable_for_all_costs",
            "states": states,
            "pay_a": format_rat(pay_a),
            "pay_b": format_rat(pay_b),
            "pay_d": format_rat(pay_d),
        }),
        SecurityClass::SeparableForSomeCost => json!({
            "case": 3, "kind": "separable_for_some_cost",
        }),
    }
}

fn separability_json(sc: &Scenario, verdict: &SeparabilityVerdict) -> Value {
    match verdict {
        SeparabilityVerdict::NonSeparable(w) => json!({
            "verdict": "non_separable",
            "witness": {
                "prior": named_rats(sc, w.prior.probs()),
                "value": format_rat(&w.value),
            },
        }),
        SeparabilityVerdict::Separable(cert) => json!({
            "verdict": "separable",
            "certificate": cert.regions.iter().map(|r| json!({
                "region_rep": format_rat(&r.region.rep),
                "lambdas": r.lambdas.iter().map(|row| rats(row)).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        }),
    }
}

fn kappa_json(sc: &Scenario, c: f64, verdict: &KappaVerdict) -> Value {
    match verdict {
        KappaVerdict::NonSeparable { witness, report } => json!({
            "c": c,
            "verdict": "non_separable",
            "witness": {
                "prior": named_rats(sc, witness.prior.probs()),
                "value": format_rat(&witness.value),
            },
            "cells": report.decisions.iter().map(|d| json!({
                "trader": d.trader,
                "cell": d.cell.iter().map(|w| sc.states.name(*w)).collect::<Vec<_>>(),
                "best_signal": d.best_signal,
                "net_gain": d.net_gain,
                "acquired": d.acquired,
            })).collect::<Vec<_>>(),
        }),
        KappaVerdict::SeparableUpToResolution { grid } => json!({
            "c": c,
            "verdict": "separable_up_to_resolution",
            "grid": {
                "interior_per_interval": grid.interior_per_interval,
                "geometric_depth": grid.geometric_depth,
                "pair_steps": grid.pair_steps,
            },
        }),
    }
}

fn trace_json(sc: &Scenario, trace: &MarketTrace, branch_prob: Option<&Rat>) -> Value {
    let verdict = match &trace.verdict {
        msrlab::Verdict::ConvergedTo(v) => json!({"type": "converged", "value": format_rat(v)}),
        msrlab::Verdict::StalledAt(v) => json!({"type": "stalled", "value": format_rat(v)}),
        msrlab::Verdict::RoundLimit => json!({"type": "round_limit"}),
    };
    let mut v = json!({
        "true_state": sc.states.name(trace.true_state),
        "initial": format_rat(&trace.initial),
        "final": format_rat(trace.final_announcement()),
        "verdict": verdict,
        "rounds": trace.rounds.iter().map(|r| json!({
            "round": r.round,
            "announcer": r.announcer,
            "signal": r.signal,
            "realization": r.realization,
            "announcement": format_rat(&r.announcement),
            "public_marginal": rats(&r.public_marginal),
            "payoff": r.payoff,
            "cost": r.cost,
        })).collect::<Vec<_>>(),
    });
    if let Some(p) = branch_prob {
        v["branch_prob"] = Value::String(format_rat(p));
    }
    v
}

fn states_to_run(sc: &Scenario, state: Option<&str>) -> Result<Vec<usize>, CliError> {
    match state {
        Some(name) => {
            let idx = sc
                .states
                .index_of(name)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            Ok(vec![idx])
        }
        None => Ok(sc.prior.support()),
    }
}

fn parse_c_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Validation(format!("bad cost grid {spec:?}: want start:step:stop with start > stop > 0 and step > 0"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, step, stop] = parts[..] else {
        return Err(bad());
    };
    let (start, step, stop): (f64, f64, f64) = match (start.parse(), step.parse(), stop.parse()) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        _ => return Err(bad()),
    };
    if !(start > stop && stop > 0.0 && step > 0.0) || !start.is_finite() || !step.is_finite() {
        return Err(bad());
    }
    let n = ((start - stop) / step).round() as usize;
    let grid: Vec<f64> = (0..=n)
        .map(|i| start - i as f64 * step)
        .filter(|c| *c > 0.0)
        .collect();
    Ok(grid)
}

fn csv_row(r: &AccuracyRecord) -> String {
    format!(
        "{},{},{},{}\n",
        r.c,
        r.a_market,
        r.a_poll,
        if r.jumped { 1 } else { 0 }
    )
}

fn rats(xs: &[Rat]) -> Vec<String> {
    xs.iter().map(format_rat).collect()
}

fn named_rats(sc: &Scenario, xs: &[Rat]) -> Value {
    let mut map = serde_json::Map::new();
    for (w, p) in xs.iter().enumerate() {
        map.insert(sc.states.name(w).to_string(), Value::String(format_rat(p)));
    }
    Value::Object(map)
}

fn push_json(out: &mut String, v: &Value) {
    out.push_str(&serde_json::to_string(v).expect("json serializes"));
    out.push('\n');
}
