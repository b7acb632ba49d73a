use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use glottokit_cli::{
    error_code, homeland_csv, homeland_json, load_locations_input, load_matrix_input,
    run_pipeline, scatter_svg, validate, PipelineConfig,
};
use glottokit_core::corpus::{self, geo_table};
use glottokit_core::error::Result;
use glottokit_core::phylo::{self, newick};
use glottokit_core::util::{fmt_sig, round_sig};
use glottokit_core::{homeland, lexdist, sca, EmbedConfig};

#[derive(Parser)]
#[command(name = "glottokit", version, about = "Lexicostatistical phylogenetics toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeMethod {
    Upgma,
    Nj,
}

#[derive(Clone, Copy, ValueEnum)]
enum Ranking {
    /// Smallest kernel eigenvalues first (default).
    KernelAscending,
    /// 2nd-4th eigenvectors by descending transition eigenvalue.
    TransitionDescending,
}

impl From<Ranking> for sca::ComponentRanking {
    fn from(r: Ranking) -> Self {
        match r {
            Ranking::KernelAscending => sca::ComponentRanking::KernelAscending,
            Ranking::TransitionDescending => sca::ComponentRanking::TransitionDescending,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute the pairwise distance matrix from word lists.
    Dist {
        #[arg(long)]
        wordlists: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write entries multiplied by 1000 with a scale directive.
        #[arg(long)]
        permille: bool,
        /// Dump per-pair aggregation details as JSON.
        #[arg(long)]
        breakdown: Option<PathBuf>,
        /// Keep only the first form of multi-form cells.
        #[arg(long)]
        first_form: bool,
    },
    /// Build a tree from a distance matrix.
    Tree {
        /// Matrix CSV; defaults to the bundled reference matrix.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, value_enum)]
        method: TreeMethod,
        #[arg(long, default_value_t = 650.0)]
        calibrate_root_year: f64,
        #[arg(long, default_value_t = 2010.0)]
        survey_year: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report triples violating the ultrametric inequality.
    Ultra {
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, default_value_t = 0.01)]
        tol: f64,
    },
    /// Spectral embedding, azimuth groups, and radial dating.
    Sca {
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2010.0)]
        survey_year: f64,
        #[arg(long, default_value_t = sca::DEFAULT_PACE)]
        pace: f64,
        /// Doculects whose mean azimuth anchors the rotation.
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        central_group: Vec<String>,
        #[arg(long, value_enum, default_value = "kernel-ascending")]
        ranking: Ranking,
        /// Static (q3,q4) scatter plot.
        #[arg(long)]
        scatter: Option<PathBuf>,
    },
    /// Diversity-based homeland ranking.
    Homeland {
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        locations: Option<PathBuf>,
        #[arg(long, default_value_t = homeland::REGRESSION_FRACTION)]
        fraction: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run the full pipeline and write every artifact.
    Run {
        #[arg(long)]
        wordlists: Option<PathBuf>,
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        locations: Option<PathBuf>,
        #[arg(long, default_value_t = 2010.0)]
        survey_year: f64,
        #[arg(long, default_value_t = sca::DEFAULT_PACE)]
        pace: f64,
        #[arg(long, default_value_t = 650.0)]
        root_year: f64,
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        central_group: Vec<String>,
        #[arg(long, value_enum, default_value = "kernel-ascending")]
        ranking: Ranking,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long)]
        svg: bool,
    },
    /// Dry-run input checks; prints findings without writing outputs.
    Validate {
        #[arg(long)]
        wordlists: Option<PathBuf>,
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        locations: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}: {e}", error_code(&e));
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Dist { wordlists, out, permille, breakdown, first_form } => {
            let lists = corpus::load_wordlists(&std::fs::read_to_string(&wordlists)?, first_form)?;
            let m = lexdist::build_matrix(&lists)?;
            let csv = if permille {
                let mut s = String::from("# scale: permille\n,");
                s.push_str(&m.labels().join(","));
                s.push('\n');
                for i in 0..m.n() {
                    s.push_str(&m.labels()[i]);
                    for j in 0..m.n() {
                        s.push_str(&format!(",{}", fmt_sig(m.get(i, j) * 1000.0)));
                    }
                    s.push('\n');
                }
                s
            } else {
                m.to_csv()
            };
            std::fs::write(&out, csv)?;
            if let Some(path) = breakdown {
                let mut pairs = Vec::new();
                for i in 0..lists.len() {
                    for j in (i + 1)..lists.len() {
                        let b = lexdist::doculect_distance(&lists[i], &lists[j])?;
                        pairs.push(json!({
                            "a": lists[i].doculect_id,
                            "b": lists[j].doculect_id,
                            "shared_concepts": b.shared_concepts,
                            "sum_ldn": round_sig(b.sum_ldn),
                            "distance": round_sig(b.distance),
                        }));
                    }
                }
                std::fs::write(&path, serde_json::to_string_pretty(&pairs).expect("serializable"))?;
            }
        }
        Command::Tree { matrix, method, calibrate_root_year, survey_year, out } => {
            let m = load_matrix_input(matrix.as_deref())?;
            let tree = match method {
                TreeMethod::Upgma => {
                    let scale = phylo::TimeScale::calibrate(&m, survey_year, calibrate_root_year)?;
                    phylo::upgma(&m, &scale)?
                }
                TreeMethod::Nj => phylo::neighbor_joining(&m)?.midpoint_root()?,
            };
            std::fs::write(&out, newick::to_newick(&tree) + "\n")?;
        }
        Command::Ultra { matrix, tol } => {
            let m = load_matrix_input(matrix.as_deref())?;
            let violations = phylo::check_ultrametric(&m, tol);
            for v in &violations {
                println!(
                    "violation: ({}, {}, {}) gap {}",
                    v.triple[0],
                    v.triple[1],
                    v.triple[2],
                    fmt_sig(v.gap)
                );
            }
            println!("{} of {} triples violate tol {}", violations.len(), n_triples(m.n()), tol);
        }
        Command::Sca { matrix, out, survey_year, pace, central_group, ranking, scatter } => {
            let m = load_matrix_input(matrix.as_deref())?;
            let mut cfg = EmbedConfig { ranking: ranking.into(), ..EmbedConfig::default() };
            if !central_group.is_empty() {
                cfg.central_group = central_group;
            }
            let e = sca::embed(&m, &cfg)?;
            let groups = sca::classify_by_azimuth(
                &e,
                sca::DEFAULT_AZIMUTH_THRESHOLDS,
                sca::DEFAULT_OUTLIER_FACTOR,
            );
            let fit = sca::fit_radial_variance(&e)?;
            let dating = sca::date_from_variance(fit.sigma2, pace, survey_year);
            let doc: Vec<_> = e
                .labels
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    json!({
                        "id": l,
                        "q2": round_sig(e.q2[i]),
                        "q3": round_sig(e.q3[i]),
                        "q4": round_sig(e.q4[i]),
                        "r": round_sig(e.r[i]),
                        "phi": round_sig(e.phi[i]),
                        "group": groups[i].1,
                    })
                })
                .collect();
            let payload = json!({
                "mu": e.mu.iter().map(|&v| round_sig(v)).collect::<Vec<_>>(),
                "kernel": e.kernel.iter().map(|&v| round_sig(v)).collect::<Vec<_>>(),
                "doculects": doc,
                "sigma2": round_sig(fit.sigma2),
                "r_squared": round_sig(fit.r_squared),
                "age_years": round_sig(dating.age_years),
                "landing_year": round_sig(dating.landing_year),
            });
            std::fs::write(&out, serde_json::to_string_pretty(&payload).expect("serializable"))?;
            if let Some(path) = scatter {
                std::fs::write(&path, scatter_svg(&e, &groups))?;
            }
        }
        Command::Homeland { matrix, locations, fraction, out, json: json_path } => {
            let m = load_matrix_input(matrix.as_deref())?;
            let doculects = load_locations_input(locations.as_deref())?;
            let geo = geo_table(&doculects);
            let report = homeland::diversity_with_fraction(&m, &geo, fraction)?;
            std::fs::write(&out, homeland_csv(&report))?;
            if let Some(path) = json_path {
                std::fs::write(
                    &path,
                    serde_json::to_string_pretty(&homeland_json(&report)).expect("serializable"),
                )?;
            }
        }
        Command::Run {
            wordlists,
            matrix,
            locations,
            survey_year,
            pace,
            root_year,
            central_group,
            ranking,
            out_dir,
            svg,
        } => {
            let mut cfg = PipelineConfig {
                wordlists,
                matrix,
                locations,
                survey_year,
                pace,
                root_year,
                ranking: ranking.into(),
                out_dir,
                emit_svg: svg,
                ..PipelineConfig::default()
            };
            if !central_group.is_empty() {
                cfg.central_group = central_group;
            }
            let written = run_pipeline(&cfg)?;
            for p in written {
                println!("wrote {}", p.display());
            }
        }
        Command::Validate { wordlists, matrix, locations } => {
            let cfg = PipelineConfig { wordlists, matrix, locations, ..PipelineConfig::default() };
            let findings = validate(&cfg);
            for f in &findings {
                println!("finding: {f}");
            }
            println!("{} finding(s)", findings.len());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn n_triples(n: usize) -> usize {
    n * (n - 1) * (n - 2) / 6
}
