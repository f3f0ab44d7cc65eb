use std::fmt::Write as _;
use std::path::Path;

use log::info;
use maxent_core::counter::{count_via_entropy, generalized_count, CountConfig, ThresholdSolver};
use maxent_core::counting::{exact_oracle, NoiseSpec};
use maxent_core::family::{Family, FamilyFile, FamilyKind, Polytope};
use maxent_core::sampler::{sample_enumerate, sample_spanning_tree_ordered, SampleBatch};
use maxent_core::solver::{marginal_gap_bound, verify_marginals, Certificate, MaxEntSolver, SolveResult};
use maxent_core::Error;
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::args::{Cli, Command, Format, SampleMethod};
use crate::atsp::{atsp_demo, AtspConfig, AtspInstance, AtspReport};
use crate::report::{CountReport, Envelope, Report, SampleReport, SolveReport, VerifyReport};
use crate::CliError;

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|source| CliError::Json {
        what: what.to_string(),
        source,
    })
}

fn load_family(path: &Path) -> Result<Family, CliError> {
    let file: FamilyFile = parse_json(&read(path)?, &path.display().to_string())?;
    Ok(file.into_family()?)
}

/// An inline JSON array, or a path to a file holding one.
fn parse_vector(arg: &str, what: &str) -> Result<DVector<f64>, CliError> {
    let text = if arg.trim_start().starts_with('[') {
        arg.to_string()
    } else {
        read(Path::new(arg))?
    };
    let raw: Vec<f64> = parse_json(&text, what)?;
    Ok(DVector::from_vec(raw))
}

fn expect_len(v: &DVector<f64>, m: usize) -> Result<(), CliError> {
    if v.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: v.len(),
        }
        .into());
    }
    Ok(())
}

fn resolve_eta(family: &Family, theta: &DVector<f64>, eta: Option<f64>) -> Result<(f64, String), CliError> {
    match eta {
        Some(eta) => Ok((eta, "given".into())),
        None => {
            let p = Polytope::new(family)?;
            let eta = p.boundary_distance(theta)?;
            if !(eta > 0.0) {
                return Err(Error::NotInterior(format!("θ is on the boundary (distance {eta:.3e})")).into());
            }
            Ok((eta, "certified".into()))
        }
    }
}

pub fn run(cli: &Cli) -> Result<Envelope, CliError> {
    let report = match &cli.command {
        Command::Solve {
            family,
            theta,
            eta,
            eps,
            noise,
            seed,
        } => {
            let family = load_family(family)?;
            let theta = parse_vector(theta, "--theta")?;
            expect_len(&theta, family.m())?;
            let (eta, eta_source) = resolve_eta(&family, &theta, *eta)?;
            let solver = MaxEntSolver::new(&family)?;
            let (result, name) = match noise {
                None => (solver.solve_exact(&theta, eta, *eps)?, "exact"),
                Some(noise) => (
                    solver.solve_approx(&theta, eta, *eps, NoiseSpec::seeded(*noise, *seed))?,
                    "approximate",
                ),
            };
            info!("solve finished: f = {}", result.f_value);
            Report::Solve(SolveReport {
                m: family.m(),
                theta: theta.as_slice().to_vec(),
                eta,
                eta_source,
                solver: name.into(),
                result,
            })
        }
        Command::SolveKl {
            family,
            theta,
            mu,
            eta,
            eps,
            noise,
            seed,
        } => {
            let family = load_family(family)?;
            let theta = parse_vector(theta, "--theta")?;
            let mu = parse_vector(mu, "--mu")?;
            expect_len(&theta, family.m())?;
            expect_len(&mu, family.m())?;
            let (eta, eta_source) = resolve_eta(&family, &theta, *eta)?;
            let result =
                MaxEntSolver::new(&family)?.solve_kl(&theta, eta, *eps, NoiseSpec::seeded(*noise, *seed), &mu)?;
            Report::SolveKl(SolveReport {
                m: family.m(),
                theta: theta.as_slice().to_vec(),
                eta,
                eta_source,
                solver: "kl".into(),
                result,
            })
        }
        Command::Count { family, eps } => {
            let family = load_family(family)?;
            let p = Polytope::new(&family)?;
            let estimate = count_via_entropy(&p, &ThresholdSolver::for_polytope(&p), *eps, &CountConfig::default())?;
            Report::Count(CountReport {
                m: family.m(),
                epsilon: *eps,
                mu: None,
                estimate,
            })
        }
        Command::CountMu { family, mu, eps } => {
            let family = load_family(family)?;
            let mu = parse_vector(mu, "--mu")?;
            expect_len(&mu, family.m())?;
            let p = Polytope::new(&family)?;
            let estimate = generalized_count(&p, &ThresholdSolver::for_polytope(&p), &mu, *eps, &CountConfig::default())?;
            Report::CountMu(CountReport {
                m: family.m(),
                epsilon: *eps,
                mu: Some(mu.as_slice().to_vec()),
                estimate,
            })
        }
        Command::Sample {
            family,
            lambda,
            n,
            seed,
            method,
        } => {
            let family = load_family(family)?;
            let lambda = parse_vector(lambda, "--lambda")?;
            expect_len(&lambda, family.m())?;
            let batch = match method {
                SampleMethod::Enumerate => sample_enumerate(&family, &lambda, *n, *seed)?,
                SampleMethod::Conditional => {
                    let FamilyKind::SpanningTrees(graph) = family.kind() else {
                        return Err(CliError::Input("conditional sampling supports spanning-tree families only".into()));
                    };
                    let order: Vec<usize> = (0..family.m()).collect();
                    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                    let members = (0..*n)
                        .map(|_| {
                            sample_spanning_tree_ordered(graph, &lambda, &order, &mut rng)
                                .map(|t| t.iter().map(|&x| x as u8).collect())
                        })
                        .collect::<Result<Vec<Vec<u8>>, _>>()?;
                    SampleBatch {
                        members,
                        seed: *seed,
                        lambda: lambda.clone(),
                    }
                }
            };
            let member_indices = batch
                .members
                .iter()
                .map(|x| x.iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i).collect())
                .collect();
            Report::Sample(SampleReport {
                method: format!("{method:?}").to_lowercase(),
                member_indices,
                batch,
            })
        }
        Command::Verify { family, theta, result } => {
            let family = load_family(family)?;
            let theta = parse_vector(theta, "--theta")?;
            expect_len(&theta, family.m())?;
            let text = read(result)?;
            let result: SolveResult = match serde_json::from_str::<Envelope>(&text) {
                Ok(Envelope {
                    report: Report::Solve(r) | Report::SolveKl(r),
                    ..
                }) => r.result,
                _ => parse_json(&text, &result.display().to_string())?,
            };
            expect_len(&result.lambda, family.m())?;
            let oracle = exact_oracle(&family)?;
            let gap = verify_marginals(&result, &theta, oracle.as_ref())?;
            Report::Verify(VerifyReport {
                gap,
                bound: marginal_gap_bound(result.epsilon),
                f_value: result.f_value,
            })
        }
        Command::AtspDemo {
            instance,
            x,
            rounds,
            beta,
            seed,
            eps,
            mix,
        } => {
            let instance: AtspInstance = parse_json(&read(instance)?, &instance.display().to_string())?;
            let x = parse_vector(x, "--x")?;
            let config = AtspConfig {
                rounds: *rounds,
                beta: *beta,
                seed: *seed,
                epsilon: *eps,
                mix: *mix,
            };
            Report::AtspDemo(atsp_demo(&instance, &x, &config)?)
        }
    };
    Ok(Envelope::new(report))
}

pub fn render(envelope: &Envelope, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(envelope).expect("reports serialize") + "\n",
        Format::Text => render_text(&envelope.report),
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", items.join(", "))
}

fn table(title: &str, rows: &[(&str, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    let mut out = format!("{title}\n");
    for (k, v) in rows {
        let _ = writeln!(out, "  {k:<width$}  {v}");
    }
    out
}

fn render_solve(title: &str, r: &SolveReport) -> String {
    let res = &r.result;
    let mut rows = vec![
        ("solver", r.solver.clone()),
        ("f_value", format!("{:.9}", res.f_value)),
        ("marginal_gap", format!("{:.3e}", res.marginal_gap)),
        ("eta", format!("{:.4e} ({})", r.eta, r.eta_source)),
        ("epsilon", format!("{:.1e}", res.epsilon)),
        ("iterations", res.iterations.to_string()),
        ("oracle_calls", res.oracle_calls.to_string()),
        ("lambda", fmt_vec(res.lambda.as_slice())),
        ("marginals", fmt_vec(res.marginals.as_slice())),
    ];
    if let Some(est) = res.f_estimate {
        rows.insert(2, ("f_estimate", format!("{est:.9}")));
    }
    let mut out = table(title, &rows);
    if let Certificate::GuessLedger(ledger) = &res.certificate {
        out.push_str("  guesses\n    zeta         result   iterations\n");
        for g in ledger {
            let _ = writeln!(
                out,
                "    {:<12.6} {:<8} {}",
                g.zeta,
                if g.succeeded { "success" } else { "failure" },
                g.iterations
            );
        }
    }
    out
}

fn render_count(title: &str, r: &CountReport) -> String {
    let e = &r.estimate;
    let mut out = table(
        title,
        &[
            ("z_tilde", format!("{:.6}", e.z_tilde)),
            ("ln z_tilde", format!("{:.6}", e.zeta_final)),
            ("epsilon", format!("{}", r.epsilon)),
            ("eta", format!("{:.3e} (certified {:.3e})", e.eta, e.eta_certified)),
            ("guesses", e.guess_trace.len().to_string()),
        ],
    );
    out.push_str("  trace\n    zeta         result   iterations  separation_cuts  entropy_cuts\n");
    for g in &e.guess_trace {
        let _ = writeln!(
            out,
            "    {:<12.6} {:<8} {:<11} {:<16} {}",
            g.zeta,
            if g.succeeded { "success" } else { "failure" },
            g.iterations,
            g.hyperplane_cuts,
            g.entropy_cuts
        );
    }
    out
}

fn render_atsp(r: &AtspReport) -> String {
    let mut rows = vec![
        ("vertices", r.n.to_string()),
        ("trials", r.trials.len().to_string()),
        ("best_tour", format!("{:?}", r.best_tour)),
        ("best_cost", format!("{:.6}", r.best_cost)),
    ];
    if let Some(o) = r.optimum {
        rows.push(("optimum", format!("{o:.6}")));
    }
    if let Some(q) = r.empirical_ratio {
        rows.push(("ratio", format!("{q:.4}")));
    }
    rows.push(("note", r.note.clone()));
    let mut out = table("atsp-demo", &rows);
    for (i, t) in r.trials.iter().enumerate() {
        let _ = writeln!(out, "  trial {i}: tour cost {:.6}, kept arcs cost {:.6}", t.tour_cost, t.kept_cost);
        for s in &t.stages {
            let _ = writeln!(
                out,
                "    {} vertices, marginals {}{}, cycles {:?}, cover cost {:.4}",
                s.vertices.len(),
                s.marginal_source,
                if s.mixed { " (mixed inward)" } else { "" },
                s.cycles,
                s.cover_cost
            );
        }
    }
    out
}

fn render_text(report: &Report) -> String {
    match report {
        Report::Solve(r) => render_solve("solve", r),
        Report::SolveKl(r) => render_solve("solve-kl", r),
        Report::Count(r) => render_count("count", r),
        Report::CountMu(r) => render_count("count-mu", r),
        Report::Sample(r) => {
            let mut out = table(
                "sample",
                &[
                    ("method", r.method.clone()),
                    ("seed", r.batch.seed.to_string()),
                    ("draws", r.member_indices.len().to_string()),
                ],
            );
            for (i, s) in r.member_indices.iter().enumerate() {
                let _ = writeln!(out, "  {i:>5}  {s:?}");
            }
            out
        }
        Report::Verify(r) => table(
            "verify",
            &[
                ("gap", format!("{:.3e}", r.gap)),
                ("bound", format!("{:.3e}", r.bound)),
                ("f_value", format!("{:.9}", r.f_value)),
                ("status", "ok".into()),
            ],
        ),
        Report::AtspDemo(r) => render_atsp(r),
    }
}
