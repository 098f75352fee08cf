use flipdyn::lp::{self, BadRows, Enumeration, LPInstance};
use flipdyn::rational::{self, to_f64};
use flipdyn::{Error, Result};

use crate::{emit, io_err, LpArgs, LpCommand, LpKind, Outcome};

pub(crate) fn instance(args: &LpArgs) -> Result<LPInstance> {
    if let Some(path) = &args.input {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| io_err(path, e))?;
        return LPInstance::from_json(&value);
    }
    let enumeration = if args.full {
        Enumeration::Full
    } else {
        Enumeration::Canonical
    };
    match args.kind {
        LpKind::Vigoda => lp::build_vigoda_lp_with(args.nmax, args.mstar, enumeration),
        LpKind::Tight if args.without_p6 => Ok(lp::build_tight_lp_without_p6()),
        LpKind::Tight => Ok(lp::build_tight_lp()),
        LpKind::Mixed => {
            let gamma = rational::parse64(&args.gamma)?;
            let bad = if args.seven_only {
                BadRows::SevenOnly
            } else {
                BadRows::SixAndSeven
            };
            lp::build_mixed_lp_with(args.nmax, args.mstar, gamma, args.cap3, bad, enumeration)
        }
    }
}

pub(crate) fn run(cmd: LpCommand) -> Outcome {
    match cmd {
        LpCommand::Build { lp, out, cplex } => {
            let inst = instance(&lp)?;
            let text = if cplex {
                inst.to_cplex()
            } else {
                serde_json::to_string(&inst.to_json()).expect("serializable") + "\n"
            };
            emit(out.as_deref(), &text)?;
            if out.is_some() {
                eprintln!(
                    "{}: {} rows over {} variables",
                    inst.name,
                    inst.constraint_count(),
                    inst.variables.len()
                );
            }
            Ok(true)
        }
        LpCommand::Solve { lp, float_check, json } => {
            let inst = instance(&lp)?;
            let sol = lp::solve(&inst)?;
            let float = if float_check { Some(lp::solve_f64(&inst)?) } else { None };
            let value = to_f64(&sol.objective_value);
            let agrees = float.is_none_or(|f| (f - value).abs() <= 1e-9);
            if json {
                let mut v = serde_json::to_value(&sol).expect("serializable");
                v["name"] = inst.name.clone().into();
                v["objective_float"] = value.into();
                if let Some(f) = float {
                    v["float_check"] = f.into();
                }
                println!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
            } else {
                println!(
                    "{}: objective {} ≈ {value:.9}",
                    inst.name,
                    rational::fmt(&sol.objective_value)
                );
                if let Some(f) = float {
                    println!(
                        "float re-solve {f:.12} ({})",
                        if agrees { "agrees" } else { "DISAGREES" }
                    );
                }
                for (name, x) in &sol.assignment {
                    println!("  {name:<12} {:<28} {:.6}", rational::fmt(x), to_f64(x));
                }
                println!(
                    "{} rounds, {} pivots, {} active rows",
                    sol.rounds, sol.pivots, sol.active_rows
                );
            }
            Ok(agrees)
        }
        LpCommand::Slack {
            lp,
            vector,
            lambda,
            json,
        } => {
            let inst = instance(&lp)?;
            let probs = vector.parse::<flipdyn::experiment::VectorSource>()?.load()?;
            let lambda = rational::parse(&lambda)?;
            let assignment = lp::trial_assignment(&inst, &probs, &lambda);
            let report = lp::slack_report(&inst, &assignment)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
            } else {
                println!(
                    "{} rows, {} tight, {} violated",
                    report.slack.len(),
                    report.tight.len(),
                    report.violated.len()
                );
                for l in &report.tight {
                    println!("  tight    {l}");
                }
                for l in &report.violated {
                    println!("  VIOLATED {l}  slack {}", rational::fmt(&report.slack[l]));
                }
            }
            Ok(report.is_feasible())
        }
        LpCommand::Bound { n, k, d, lambda, nmax } => {
            let lambda = rational::parse(&lambda)?;
            if nmax == 0 {
                return Err(Error::Input("nmax must be positive".into()));
            }
            let t = lp::mixing_time_bound(n, k, d, &lambda, nmax)?;
            println!("{t}");
            Ok(true)
        }
    }
}
