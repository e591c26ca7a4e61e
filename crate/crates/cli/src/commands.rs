use std::collections::BTreeSet;
use std::path::Path;

use clusterbell::bell::{cluster4_settings, evaluate_settings, mabk4_polynomial, window5_polynomial, window5_settings};
use clusterbell::quantum::QuantumState;
use clusterbell::{
    cluster4_polynomial, find_ghz_arguments, find_ghz_arguments_within, full_group, make_cluster_state, make_ghz,
    make_w4, optimize_settings, stabilizer_sum_polynomial, window_argument_1d, BellPolynomial, Graph, GraphSpec,
    OptimizerConfig, DEFAULT_GROUP_LIMIT,
};
use serde_json::{json, Value};

use crate::args::{Cli, Command, Inequality, StateSpec};
use crate::paper::{run_checks, PaperOptions};
use crate::report::Body;
use crate::CliError;

pub fn dispatch(cli: &Cli) -> Result<Body, CliError> {
    match &cli.command {
        Command::Group { graph } => cmd_group(graph),
        Command::Paradox { graph, max_size, sites } => cmd_paradox(graph, *max_size, sites.as_deref()),
        Command::Bounds {
            ineq,
            state,
            graph,
            restarts,
        } => cmd_bounds(*ineq, *state, graph.as_deref(), *restarts, cli.seed),
        Command::ReportPaper {
            debug_perturb,
            restarts,
        } => cmd_report_paper(&PaperOptions {
            perturb: *debug_perturb,
            restarts: *restarts,
            seed: cli.seed,
        }),
    }
}

/// Parses a shorthand spec, falling back to a graph file.
pub fn load_graph(arg: &str) -> Result<(Graph, String), CliError> {
    match arg.parse::<GraphSpec>() {
        Ok(spec) => Ok((spec.build()?, spec.to_string())),
        Err(spec_err) => {
            let path = Path::new(arg);
            if path.is_file() {
                let text =
                    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {arg}: {e}")))?;
                Ok((Graph::from_file_format(&text)?, format!("file:{arg}")))
            } else {
                Err(CliError::Usage(format!("{spec_err} (and no file named `{arg}`)")))
            }
        }
    }
}

fn graph_json(g: &Graph, description: &str) -> Value {
    json!({
        "description": description,
        "sites": g.site_count(),
        "edges": g.edges().map(|(a, b)| [a, b]).collect::<Vec<_>>(),
    })
}

fn cmd_group(graph: &str) -> Result<Body, CliError> {
    let (g, description) = load_graph(graph)?;
    let group = full_group(&g, DEFAULT_GROUP_LIMIT)?;
    let (plus, minus) = group.sign_counts();
    let elements: Vec<Value> = group
        .elements()
        .iter()
        .map(|e| json!({ "word": e.to_string(), "generators": e.mask_indices() }))
        .collect();
    Ok(Body {
        command: "group",
        graph: Some(graph_json(&g, &description)),
        results: json!({
            "size": group.len(),
            "sign_counts": { "+1": plus, "-1": minus },
            "elements": elements,
        }),
        passed: true,
    })
}

fn cmd_paradox(graph: &str, max_size: usize, sites: Option<&[usize]>) -> Result<Body, CliError> {
    let (g, description) = load_graph(graph)?;
    if let Some(sites) = sites {
        if let Some(&bad) = sites.iter().find(|&&s| s >= g.site_count()) {
            return Err(clusterbell::Error::SiteOutOfRange {
                site: bad,
                site_count: g.site_count(),
            }
            .into());
        }
    }
    let group = full_group(&g, DEFAULT_GROUP_LIMIT)?;
    let args = match sites {
        Some(s) => find_ghz_arguments_within(&group, s, max_size),
        None => find_ghz_arguments(&group, max_size),
    };
    let mut windows = BTreeSet::new();
    let mut rows = Vec::with_capacity(args.len());
    for a in &args {
        let best = a.verify()?;
        windows.insert(a.window().to_vec());
        rows.push(json!({
            "elements": a.elements().iter().map(|e| e.to_string()).collect::<Vec<_>>(),
            "window": a.window(),
            "cooperating_sites": a.cooperating_sites(),
            "max_satisfied": best,
        }));
    }
    Ok(Body {
        command: "paradox",
        graph: Some(graph_json(&g, &description)),
        results: json!({
            "max_size": max_size,
            "sites": sites,
            "count": args.len(),
            "windows": windows.into_iter().collect::<Vec<_>>(),
            "arguments": rows,
        }),
        passed: true,
    })
}

fn polynomial(ineq: Inequality, graph: Option<&str>) -> Result<(BellPolynomial, Option<(Graph, String)>), CliError> {
    Ok(match ineq {
        Inequality::Cluster4 => (cluster4_polynomial(), None),
        Inequality::Window5 => (window5_polynomial(), None),
        Inequality::Mabk4 => (mabk4_polynomial(), None),
        Inequality::Stabsum => {
            let (g, d) = load_graph(graph.unwrap_or("1d:4"))?;
            let group = full_group(&g, DEFAULT_GROUP_LIMIT)?;
            (stabilizer_sum_polynomial(&group)?, Some((g, d)))
        }
    })
}

fn build_state(
    spec: StateSpec,
    parties: usize,
    graph: Option<(Graph, String)>,
) -> Result<(Box<dyn QuantumState>, Option<Value>), CliError> {
    Ok(match spec {
        StateSpec::Cluster => {
            let (g, d) = match graph {
                Some(gd) => gd,
                None => load_graph(&format!("1d:{parties}"))?,
            };
            let psi = make_cluster_state(&g)?;
            (Box::new(psi), Some(graph_json(&g, &d)))
        }
        StateSpec::Ghz => (Box::new(make_ghz(parties)?), None),
        StateSpec::W4 => {
            if parties != 4 {
                return Err(CliError::Usage(format!(
                    "w4 has 4 sites but the inequality has {parties} parties"
                )));
            }
            (Box::new(make_w4()), None)
        }
        StateSpec::ReducedWindow { n, k } => {
            let arg = window_argument_1d(n, k)?;
            let (g, d) = load_graph(&format!("1d:{n}"))?;
            let rho = make_cluster_state(&g)?.reduce(arg.window())?;
            (Box::new(rho), Some(json!({ "description": d, "window": arg.window() })))
        }
    })
}

fn cmd_bounds(
    ineq: Inequality,
    state: StateSpec,
    graph: Option<&str>,
    restarts: usize,
    seed: u64,
) -> Result<Body, CliError> {
    let (p, group_graph) = polynomial(ineq, graph)?;
    let cluster_graph = match (group_graph, graph) {
        (Some(g), _) => Some(g),
        (None, Some(spec)) => Some(load_graph(spec)?),
        (None, None) => None,
    };
    let (psi, graph_value) = build_state(state, p.parties().len(), cluster_graph)?;
    if psi.sites() != p.parties().len() {
        return Err(CliError::Usage(format!(
            "{} has {} parties but the state has {} sites",
            ineq.name(),
            p.parties().len(),
            psi.sites()
        )));
    }
    let config = OptimizerConfig {
        restarts,
        seed,
        ..OptimizerConfig::default()
    };
    let report = optimize_settings(&p, psi.as_ref(), &config)?;
    report.check()?;
    // The optimizer searches spins only; these fixed settings may use the identity.
    let reference = match ineq {
        Inequality::Cluster4 => Some(evaluate_settings(&p, &cluster4_settings(), psi.as_ref())?),
        Inequality::Window5 => Some(evaluate_settings(&p, &window5_settings(), psi.as_ref())?),
        Inequality::Mabk4 | Inequality::Stabsum => None,
    };
    Ok(Body {
        command: "bounds",
        graph: graph_value,
        results: json!({
            "inequality": ineq.name(),
            "polynomial": p.to_string(),
            "state": state.to_string(),
            "optimizer": {
                "restarts": config.restarts,
                "seed": config.seed,
                "tolerance": config.tolerance,
            },
            "report": report,
            "reference_settings": reference,
        }),
        passed: true,
    })
}

fn cmd_report_paper(options: &PaperOptions) -> Result<Body, CliError> {
    let checks = run_checks(options);
    let failed = checks.iter().filter(|c| !c.passed).count();
    Ok(Body {
        command: "report-paper",
        graph: None,
        results: json!({
            "perturbed": options.perturb,
            "checks": checks,
            "passed": checks.len() - failed,
            "failed": failed,
        }),
        passed: failed == 0,
    })
}
