use std::sync::Arc;

use flipdyn::coupling::marginals_match;
use flipdyn::dynamics::stationary_check_tiny;
use flipdyn::experiment::VectorSource;
use flipdyn::graph::{neighboring_pairs, nonisomorphic_graphs, GraphFile};
use flipdyn::lp::observation_check;
use flipdyn::{Error, FlipProbabilities, Result};

use crate::{io_err, CheckCommand, Outcome};

fn vectors(spec: Option<&str>) -> Result<Vec<(String, FlipProbabilities)>> {
    match spec {
        Some(s) => Ok(vec![(s.to_string(), s.parse::<VectorSource>()?.load()?)]),
        None => Ok(vec![
            ("vigoda".into(), FlipProbabilities::vigoda()),
            ("alt".into(), FlipProbabilities::alt()),
        ]),
    }
}

pub(crate) fn run(cmd: CheckCommand) -> Outcome {
    match cmd {
        CheckCommand::Marginals { n, k, vector } => {
            if k < 2 {
                return Err(Error::Input("need k ≥ 2 for a neighboring pair".into()));
            }
            let mut ok = true;
            for (name, probs) in vectors(vector.as_deref())? {
                let (mut pairs, mut bad) = (0usize, 0usize);
                for size in 1..=n {
                    for g in nonisomorphic_graphs(size)? {
                        let g = Arc::new(g);
                        for colors in 2..=k {
                            for p in neighboring_pairs(&g, colors)? {
                                pairs += 1;
                                if !marginals_match(&p, &probs)? {
                                    bad += 1;
                                    if bad <= 5 {
                                        println!(
                                            "  mismatch: edges {:?} sigma {:?} tau {:?}",
                                            g.edges(),
                                            p.sigma.as_slice(),
                                            p.tau.as_slice()
                                        );
                                    }
                                }
                            }
                        }
                    }
                }
                println!("{name}: {pairs} pairs with n ≤ {n}, k ≤ {k}; {bad} mismatches");
                ok &= bad == 0;
            }
            Ok(ok)
        }
        CheckCommand::Stationary { graph, k, vector } => {
            let text = std::fs::read_to_string(&graph).map_err(|e| io_err(&graph, e))?;
            let file = GraphFile::parse(&text)?;
            let k = k.unwrap_or(file.sigma.k());
            let probs = vector.parse::<VectorSource>()?.load()?;
            let r = stationary_check_tiny(&file.graph, k, &probs)?;
            println!(
                "{} colorings, {} asymmetric pairs, {} reachable from the first proper coloring (all proper: {}), uniform stationary: {}",
                r.states, r.asymmetric_pairs, r.reachable, r.reachable_all_proper, r.uniform_stationary
            );
            Ok(r.passed())
        }
        CheckCommand::Observation { vector, nmax, json } => {
            let probs = vector.parse::<VectorSource>()?.load()?;
            let r = observation_check(&probs, nmax)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&r).expect("serializable"));
            } else {
                println!(
                    "N_max = {}: {} tight tuples, {} expected",
                    r.n_max,
                    r.tight.len(),
                    r.expected.len()
                );
                for l in &r.tight {
                    println!("  tight   {l}");
                }
                for l in &r.missing {
                    println!("  MISSING {l}");
                }
                for l in &r.extra {
                    println!("  EXTRA   {l}");
                }
                for l in &r.violated {
                    println!("  VIOLATED {l}");
                }
                println!("{}", if r.passed() { "match" } else { "MISMATCH" });
            }
            Ok(r.passed())
        }
    }
}
