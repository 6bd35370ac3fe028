mod emit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use chaoscope_core::{
    accumulate_log_volume, c_graphical, cbar_sample, certify_graphical_family,
    certify_mwu_chaos_domination, certify_mwu_chaos_lp, certify_potential_negativity,
    chebyshev_fit, decompose, ensemble_divergence, extract_bimatrix_potential, in_region,
    induced_graphical_game, io, potential_deviation, run_trajectory, Algorithm, AnyGame,
    DualPoint, Error as CoreError, Regularizer, RegionSpec, RuleKind, SamplePlan, UpdateRule,
};

use emit::{json_to_writer_17, CsvWriter, JsonMap};

/// Game decomposition, volume-change analysis and chaos certificates for
/// learning dynamics.
#[derive(Parser)]
#[command(name = "chaoscope", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Mwu,
    Omwu,
    OmwuSurrogate,
    FtrlEntropic,
    FtrlL2,
}

impl RuleArg {
    fn build(self, epsilon: f64) -> Result<UpdateRule, CoreError> {
        match self {
            RuleArg::Mwu => UpdateRule::mwu(epsilon),
            RuleArg::Omwu => UpdateRule::omwu(epsilon),
            RuleArg::OmwuSurrogate => UpdateRule::omwu_surrogate(epsilon),
            RuleArg::FtrlEntropic => UpdateRule::ftrl(epsilon, Regularizer::Entropic),
            RuleArg::FtrlL2 => UpdateRule::ftrl(epsilon, Regularizer::SquaredEuclidean),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    Domination,
    Lp,
    Graphical,
    Potential,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Mwu,
    Omwu,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Algorithm {
        match a {
            AlgorithmArg::Mwu => Algorithm::Mwu,
            AlgorithmArg::Omwu => Algorithm::Omwu,
        }
    }
}

#[derive(Args)]
struct OutputArg {
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Split a two-player game into zero-sum and coordination parts and
    /// report their Chebyshev radii.
    Decompose {
        #[arg(long)]
        game: PathBuf,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Evaluate the volume-change coefficient at a list of dual points.
    Cfun {
        #[arg(long)]
        game: PathBuf,
        /// JSON file with a list of dual points.
        #[arg(long)]
        points: PathBuf,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Try to certify chaotic behavior over an interior region.
    Certify {
        #[arg(long)]
        game: PathBuf,
        #[arg(long, value_enum)]
        criterion: CriterionArg,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long, value_enum, default_value = "mwu")]
        algorithm: AlgorithmArg,
        /// Potential tensor (nested JSON arrays); required for the
        /// potential criterion.
        #[arg(long)]
        potential: Option<PathBuf>,
        /// Samples for the fallback region minimum.
        #[arg(long, default_value_t = 4096)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Simulate a learning rule and record the dual trajectory.
    Simulate {
        #[arg(long)]
        game: PathBuf,
        #[arg(long, value_enum)]
        rule: RuleArg,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long)]
        steps: usize,
        /// Region threshold for exit detection.
        #[arg(long)]
        delta: Option<f64>,
        /// JSON dual point, or the word "uniform".
        #[arg(long, default_value = "uniform")]
        start: String,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Accumulate log volume-change factors along a trajectory.
    Volume {
        #[arg(long)]
        game: PathBuf,
        #[arg(long, value_enum, default_value = "mwu")]
        rule: RuleArg,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value = "uniform")]
        start: String,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Fit the divergence rate of a perturbation ensemble.
    Lyapunov {
        #[arg(long)]
        game: PathBuf,
        #[arg(long, value_enum, default_value = "mwu")]
        rule: RuleArg,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value = "uniform")]
        start: String,
        #[arg(long, default_value_t = 1e-6)]
        ball_radius: f64,
        #[arg(long, default_value_t = 64)]
        ensemble: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Samples for the region coefficient estimate.
        #[arg(long, default_value_t = 4096)]
        samples: usize,
        /// Write the per-step sup-distance CSV here (JSON summary goes to
        /// --out or standard output).
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Check the pointwise equivalence between a dense game and its
    /// induced pairwise game.
    Equivalence {
        #[arg(long)]
        game: PathBuf,
        /// JSON dual point, or the word "uniform".
        #[arg(long, default_value = "uniform")]
        point: String,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Verify or recover a potential for a game.
    PotentialCheck {
        #[arg(long)]
        game: PathBuf,
        /// Candidate potential tensor (nested JSON arrays). Optional for
        /// two-player games, where one is recovered when it exists.
        #[arg(long)]
        potential: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        output: OutputArg,
    },
}

fn main() -> ExitCode {
    if let Ok(raw) = std::env::var("CHAOSCOPE_THREADS") {
        match raw.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = chaoscope_core::set_worker_threads(n);
            }
            _ => {
                eprintln!("error: CHAOSCOPE_THREADS must be a positive integer, got {raw:?}");
                return ExitCode::from(1);
            }
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help/version are not failures
            use clap::error::ErrorKind;
            let benign = matches!(
                err.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            );
            let _ = err.print();
            return if benign {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err.downcast_ref::<CoreError>() {
                Some(CoreError::NonFiniteState { .. }) => 2,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

fn parse_start(text: &str, counts: &[usize]) -> Result<DualPoint, CoreError> {
    if text.trim() == "uniform" {
        Ok(DualPoint::zeros(counts))
    } else {
        io::dual_point_from_str(text, counts)
    }
}

fn write_json(map: JsonMap, out: &Option<PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            let mut file = std::fs::File::create(path)?;
            json_to_writer_17(&mut file, &map.into_value())?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            json_to_writer_17(&mut stdout, &map.into_value())?;
        }
    }
    Ok(())
}

fn require_bimatrix(game: AnyGame) -> anyhow::Result<chaoscope_core::BimatrixGame> {
    match game {
        AnyGame::Bimatrix(g) => Ok(g),
        _ => anyhow::bail!("this subcommand needs a bimatrix game file"),
    }
}

fn region_for(
    delta: f64,
    counts: &[usize],
) -> Result<RegionSpec, CoreError> {
    RegionSpec::for_game(delta, counts)
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Decompose { game, output } => {
            let g = require_bimatrix(io::load_game(&game)?)?;
            let parts = decompose(&g);
            let r_z = chebyshev_fit(&parts.z).r;
            let r_c = chebyshev_fit(&parts.c).r;
            let mut map = JsonMap::new();
            map.push_matrix("Z", &parts.z);
            map.push_matrix("C", &parts.c);
            map.push_f64("r_Z", r_z);
            map.push_f64("r_C", r_c);
            write_json(map, &output.out)
        }

        Command::Cfun {
            game,
            points,
            output,
        } => {
            let g = io::load_game(&game)?;
            let pts = io::load_dual_points(&points, &g.strategy_counts())?;
            let mut csv = CsvWriter::new(vec!["point_index", "C_value"]);
            for (index, p) in pts.iter().enumerate() {
                let value = g.c_value(p)?;
                csv.row(|r| {
                    r.int(index as i64);
                    r.float(value);
                });
            }
            csv.finish(&output.out)
        }

        Command::Certify {
            game,
            criterion,
            delta,
            epsilon,
            algorithm,
            potential,
            samples,
            seed,
            output,
        } => {
            let g = io::load_game(&game)?;
            let counts = g.strategy_counts();
            let region = region_for(delta, &counts)?;
            let algorithm: Algorithm = algorithm.into();
            let plan = SamplePlan::Random {
                count: samples,
                seed,
            };
            let certificate = match criterion {
                CriterionArg::Domination => {
                    certify_mwu_chaos_domination(&require_bimatrix(g.clone())?, &region, epsilon)?
                }
                CriterionArg::Lp => {
                    certify_mwu_chaos_lp(&require_bimatrix(g.clone())?, &region, epsilon)?
                }
                CriterionArg::Graphical => match &g {
                    AnyGame::Graphical(gg) => certify_graphical_family(gg, &region, epsilon)?,
                    _ => anyhow::bail!("the graphical criterion needs a graphical game file"),
                },
                CriterionArg::Potential => {
                    let AnyGame::NormalForm(nf) = &g else {
                        anyhow::bail!("the potential criterion needs a normal_form game file")
                    };
                    let path = potential
                        .ok_or_else(|| anyhow::anyhow!("--potential is required here"))?;
                    let value: serde_json::Value =
                        serde_json::from_str(&std::fs::read_to_string(path)?)?;
                    let tensor = io::tensor_from_json(&value, nf.strategy_counts())?;
                    let report = certify_potential_negativity(
                        nf, &tensor, &region, epsilon, 1e-9, &plan,
                    )?;
                    let mut map = JsonMap::new();
                    match report.certificate {
                        Some(cert) => {
                            map.push_bool("certified", true);
                            map.push_certificate(&cert);
                        }
                        None => map.push_bool("certified", false),
                    }
                    map.push_f64("sampled_min", report.sampled_min);
                    return write_json(map, &output.out);
                }
            };
            let mut map = JsonMap::new();
            match certificate {
                Some(cert) => {
                    if cert.algorithm != algorithm {
                        anyhow::bail!(
                            "criterion certifies the {} rule; pass the matching --algorithm",
                            match cert.algorithm {
                                Algorithm::Mwu => "mwu",
                                Algorithm::Omwu => "omwu",
                            }
                        );
                    }
                    map.push_bool("certified", true);
                    map.push_certificate(&cert);
                }
                None => {
                    map.push_bool("certified", false);
                    let sampled = cbar_sample(&g, &region, &plan, algorithm)?;
                    map.push_f64("sampled_min", sampled);
                }
            }
            write_json(map, &output.out)
        }

        Command::Simulate {
            game,
            rule,
            epsilon,
            steps,
            delta,
            start,
            output,
        } => {
            let g = io::load_game(&game)?;
            let counts = g.strategy_counts();
            let p0 = parse_start(&start, &counts)?;
            let rule = rule.build(epsilon)?;
            let region = delta.map(|d| region_for(d, &counts)).transpose()?;
            let record = run_trajectory(&g, &p0, &rule, steps, region.as_ref())?;
            let mut header = vec!["t".to_string()];
            for (i, &n) in counts.iter().enumerate() {
                for j in 0..n {
                    header.push(format!("p_{i}_{j}"));
                }
            }
            header.push("in_region".to_string());
            let mut csv = CsvWriter::new_owned(header);
            for (t, point) in record.points.iter().enumerate() {
                let inside = region.as_ref().is_none_or(|r| in_region(point, r));
                csv.row(|r| {
                    r.int(t as i64);
                    for v in point.to_flat() {
                        r.float(v);
                    }
                    r.int(inside as i64);
                });
            }
            csv.finish(&output.out)
        }

        Command::Volume {
            game,
            rule,
            epsilon,
            steps,
            delta,
            start,
            output,
        } => {
            let g = io::load_game(&game)?;
            let counts = g.strategy_counts();
            let p0 = parse_start(&start, &counts)?;
            let rule = rule.build(epsilon)?;
            let region = delta.map(|d| region_for(d, &counts)).transpose()?;
            let ledger = accumulate_log_volume(&g, &p0, &rule, steps, region.as_ref())?;
            let mut csv = CsvWriter::new(vec!["t", "log_det", "cumulative"]);
            for (t, step) in ledger.steps.iter().enumerate() {
                csv.row(|r| {
                    r.int(t as i64);
                    r.float(step.log_det);
                    r.float(step.cumulative);
                });
            }
            csv.finish(&output.out)
        }

        Command::Lyapunov {
            game,
            rule,
            epsilon,
            steps,
            delta,
            start,
            ball_radius,
            ensemble,
            seed,
            samples,
            csv,
            output,
        } => {
            let g = io::load_game(&game)?;
            let counts = g.strategy_counts();
            let p0 = parse_start(&start, &counts)?;
            let rule = rule.build(epsilon)?;
            let region = delta.map(|d| region_for(d, &counts)).transpose()?;
            let cbar = match (&region, rule.kind()) {
                (Some(r), kind) => {
                    let algorithm = match kind {
                        RuleKind::Omwu | RuleKind::OmwuSurrogate => Algorithm::Omwu,
                        _ => Algorithm::Mwu,
                    };
                    Some(cbar_sample(
                        &g,
                        r,
                        &SamplePlan::Random {
                            count: samples,
                            seed,
                        },
                        algorithm,
                    )?)
                }
                (None, _) => None,
            };
            let report = ensemble_divergence(
                &g,
                &p0,
                &rule,
                steps,
                region.as_ref(),
                ball_radius,
                ensemble,
                seed,
                cbar,
            )?;
            if let Some(path) = csv {
                let mut table = CsvWriter::new(vec!["t", "sup_distance"]);
                for (t, v) in report.sup_distance.iter().enumerate() {
                    table.row(|r| {
                        r.int(t as i64);
                        r.float(*v);
                    });
                }
                table.finish(&Some(path))?;
            }
            let mut map = JsonMap::new();
            map.push_f64("fitted_gamma", report.fitted_gamma);
            map.push_f64("lambda_intercept", report.lambda_intercept);
            map.push_int("fit_start", report.fit_start as i64);
            map.push_int("fit_end", report.fit_end as i64);
            if let Some(predicted) = report.predicted_gamma {
                map.push_f64("predicted_gamma", predicted);
            }
            if let Some(cbar) = cbar {
                map.push_f64("cbar_estimate", cbar);
            }
            write_json(map, &output.out)
        }

        Command::Equivalence {
            game,
            point,
            output,
        } => {
            let g = io::load_game(&game)?;
            let AnyGame::NormalForm(nf) = &g else {
                anyhow::bail!("the equivalence check needs a normal_form game file")
            };
            let p = parse_start(&point, &g.strategy_counts())?;
            let dense = g.c_value(&p)?;
            let induced = induced_graphical_game(nf, &p)?;
            let via_edges = c_graphical(&induced, &p);
            let difference = (dense - via_edges).abs();
            let mut map = JsonMap::new();
            map.push_f64("c_normal_form", dense);
            map.push_f64("c_induced_graphical", via_edges);
            map.push_f64("abs_difference", difference);
            map.push_bool("within_tolerance", difference <= 1e-9);
            write_json(map, &output.out)
        }

        Command::PotentialCheck {
            game,
            potential,
            tol,
            output,
        } => {
            let g = io::load_game(&game)?;
            let mut map = JsonMap::new();
            match (&g, potential) {
                (AnyGame::Bimatrix(bg), None) => match extract_bimatrix_potential(bg, tol) {
                    Some(p) => {
                        map.push_bool("is_potential_game", true);
                        map.push_matrix("potential", &p);
                    }
                    None => map.push_bool("is_potential_game", false),
                },
                (_, Some(path)) => {
                    let AnyGame::NormalForm(nf) = &g else {
                        anyhow::bail!(
                            "a supplied potential needs a normal_form game file"
                        )
                    };
                    let value: serde_json::Value =
                        serde_json::from_str(&std::fs::read_to_string(path)?)?;
                    let tensor = io::tensor_from_json(&value, nf.strategy_counts())?;
                    let deviation = potential_deviation(nf, &tensor)?;
                    map.push_bool("is_potential_game", deviation <= tol);
                    map.push_f64("max_deviation", deviation);
                }
                (_, None) => anyhow::bail!(
                    "--potential is required for normal_form and graphical game files"
                ),
            }
            write_json(map, &output.out)
        }
    }
}
