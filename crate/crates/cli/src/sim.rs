use std::path::PathBuf;

use flipdyn::constructions::{build_construction, ConstructionSpec};
use flipdyn::experiment::{
    estimate_gamma_empirical, run_coupling_experiment, run_stage_experiment, ExperimentConfig, ExperimentReport,
    StartState,
};
use flipdyn::graph::GraphFile;
use flipdyn::{Error, Result};

use crate::{emit, io_err, Outcome, SimArgs, SimCommand};

fn config(args: &SimArgs) -> Result<ExperimentConfig> {
    let start = match &args.graph {
        Some(path) => StartState::File(path.clone()),
        None => {
            let (Some(d), Some(k)) = (args.d, args.k) else {
                return Err(Error::Input("a construction needs both --d and --k".into()));
            };
            StartState::Construction(ConstructionSpec::new(args.index, d, k)?)
        }
    };
    let mut cfg = ExperimentConfig::new(start, args.vector.parse()?);
    cfg.seed = args.seed;
    cfg.replicas = args.replicas;
    cfg.step_cap = args.step_cap;
    if args.graph.is_some() {
        cfg.k = args.k;
        cfg.d = args.d;
    }
    Ok(cfg)
}

fn write_csv(path: &PathBuf, report: &ExperimentReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let mut header = vec!["replica".to_string()];
    header.extend(report.columns.iter().cloned());
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for (i, row) in report.samples.iter().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub(crate) fn run(cmd: SimCommand) -> Outcome {
    let (args, report) = match cmd {
        SimCommand::Couple(args) => {
            let r = run_coupling_experiment(&config(&args)?)?;
            (args, r)
        }
        SimCommand::Stages { sim, color } => {
            let r = run_stage_experiment(&config(&sim)?, color)?;
            (sim, r)
        }
        SimCommand::Gamma(args) => {
            let r = estimate_gamma_empirical(&config(&args)?)?;
            (args, r)
        }
    };
    if let Some(path) = &args.csv {
        write_csv(path, &report)?;
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    } else {
        print!("{}", report.to_table());
    }
    Ok(report.passed())
}

pub(crate) fn construct(index: usize, d: usize, k: usize, out: Option<PathBuf>) -> Outcome {
    let pair = build_construction(ConstructionSpec::new(index, d, k)?)?;
    let file = GraphFile {
        graph: (*pair.graph).clone(),
        sigma: pair.sigma.clone(),
        tau: Some(pair.tau.clone()),
    };
    emit(out.as_deref(), &file.to_text())?;
    Ok(true)
}
