//! Pipeline orchestration and report emission for the `glottokit` binary.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use glottokit_core::corpus::{self, geo_table};
use glottokit_core::error::{Error, Result};
use glottokit_core::fixtures;
use glottokit_core::homeland;
use glottokit_core::lexdist;
use glottokit_core::phylo::{self, newick};
use glottokit_core::sca;
use glottokit_core::util::{fmt_sig, round_sig};
use glottokit_core::{DistanceMatrix, Doculect, EmbedConfig};

/// Everything `glottokit run` needs. Defaults reproduce the bundled study.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Word-list TSV; mutually exclusive with `matrix`.
    pub wordlists: Option<PathBuf>,
    /// Distance-matrix CSV. Neither input set = bundled fixture matrix.
    pub matrix: Option<PathBuf>,
    /// Locations CSV; defaults to the bundled table.
    pub locations: Option<PathBuf>,
    pub survey_year: f64,
    /// Years of age per unit of radial variance.
    pub pace: f64,
    /// Calendar year the calibrated UPGMA root is pinned to.
    pub root_year: f64,
    pub central_group: Vec<String>,
    pub ranking: sca::ComponentRanking,
    pub out_dir: PathBuf,
    pub emit_svg: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            wordlists: None,
            matrix: None,
            locations: None,
            survey_year: 2010.0,
            pace: sca::DEFAULT_PACE,
            root_year: 650.0,
            central_group: sca::DEFAULT_CENTRAL_GROUP.iter().map(|s| s.to_string()).collect(),
            ranking: sca::ComponentRanking::KernelAscending,
            out_dir: PathBuf::from("out"),
            emit_svg: false,
        }
    }
}

impl PipelineConfig {
    pub fn check(&self) -> Result<()> {
        if self.wordlists.is_some() && self.matrix.is_some() {
            return Err(Error::Parse {
                line: 0,
                message: "pass either word lists or a matrix, not both".into(),
            });
        }
        for (name, y) in [("survey-year", self.survey_year), ("root-year", self.root_year)] {
            if !(0.0..=3000.0).contains(&y) {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("{name} {y} outside the plausible range 0-3000"),
                });
            }
        }
        Ok(())
    }
}

/// Stable one-word code per error kind, for scripted consumers.
pub fn error_code(e: &Error) -> &'static str {
    match e {
        Error::EmptyForm(_) => "empty-form",
        Error::Parse { .. } => "parse",
        Error::DuplicateDoculect(_) => "duplicate-doculect",
        Error::UnknownConcept(_) => "unknown-concept",
        Error::DuplicateConcept(_) => "duplicate-concept",
        Error::Asymmetric { .. } => "asymmetric",
        Error::NonzeroDiagonal(_) => "nonzero-diagonal",
        Error::EntryOutOfRange { .. } => "entry-out-of-range",
        Error::PercentageOutOfRange { .. } => "percentage-out-of-range",
        Error::UndefinedPair => "undefined-pair",
        Error::IncomparablePair(_, _) => "incomparable-pair",
        Error::CoordinateOutOfRange { .. } => "coordinate-out-of-range",
        Error::Saturated(_) => "saturated",
        Error::InvalidTimeScale { .. } => "invalid-time-scale",
        Error::DegenerateTree => "degenerate-tree",
        Error::DisconnectedDoculect(_) => "disconnected-doculect",
        Error::EigenSolver { .. } => "eigensolver",
        Error::DegenerateFit => "degenerate-fit",
        Error::SingularRegression => "singular-regression",
        Error::NonpositiveDenominator(_, _) => "nonpositive-denominator",
        Error::MissingCoordinates(_) => "missing-coordinates",
        Error::TooFew { .. } => "too-few",
        Error::UnknownLabel(_) => "unknown-label",
        Error::Newick(_) => "newick",
        Error::Io(_) => "io",
    }
}

/// Directory holding replacement fixture files, if the user set one.
fn fixtures_dir() -> Option<PathBuf> {
    std::env::var_os("GLOTTOKIT_FIXTURES").map(PathBuf::from)
}

pub fn load_matrix_input(path: Option<&Path>) -> Result<DistanceMatrix> {
    match path {
        Some(p) => corpus::load_matrix_file(p, None),
        None => match fixtures_dir() {
            Some(dir) => corpus::load_matrix_file(dir.join("appendix_a_matrix.csv"), None),
            None => corpus::load_matrix(fixtures::MATRIX_CSV, None),
        },
    }
}

pub fn load_locations_input(path: Option<&Path>) -> Result<Vec<Doculect>> {
    let src = match path {
        Some(p) => std::fs::read_to_string(p)?,
        None => match fixtures_dir() {
            Some(dir) => std::fs::read_to_string(dir.join("locations.csv"))?,
            None => fixtures::LOCATIONS_CSV.to_string(),
        },
    };
    corpus::load_locations(&src)
}

fn rounded(v: f64) -> Value {
    json!(round_sig(v))
}

fn embedding_json(
    e: &sca::ScaEmbedding,
    groups: &[(String, sca::Group)],
    fit: &sca::RadialFit,
    dating: &sca::DatingResult,
) -> Value {
    let doculects: Vec<Value> = e
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            json!({
                "id": l,
                "q2": rounded(e.q2[i]),
                "q3": rounded(e.q3[i]),
                "q4": rounded(e.q4[i]),
                "r": rounded(e.r[i]),
                "phi": rounded(e.phi[i]),
                "group": groups[i].1,
            })
        })
        .collect();
    json!({
        "mu": e.mu.iter().map(|&v| rounded(v)).collect::<Vec<_>>(),
        "kernel": e.kernel.iter().map(|&v| rounded(v)).collect::<Vec<_>>(),
        "components": e.components,
        "rotation": rounded(e.rotation),
        "doculects": doculects,
        "sigma2": rounded(fit.sigma2),
        "r_squared": rounded(fit.r_squared),
        "age_years": rounded(dating.age_years),
        "landing_year": rounded(dating.landing_year),
    })
}

fn dating_json(fit: &sca::RadialFit, dating: &sca::DatingResult, survey_year: f64) -> Value {
    json!({
        "sigma2": rounded(dating.sigma2),
        "slope": rounded(fit.slope),
        "intercept": rounded(fit.intercept),
        "r_squared": rounded(fit.r_squared),
        "pace": rounded(dating.pace),
        "survey_year": rounded(survey_year),
        "age_years": rounded(dating.age_years),
        "landing_year": rounded(dating.landing_year),
    })
}

pub fn homeland_csv(report: &homeland::DiversityReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# intercept: {}", fmt_sig(report.regression.intercept));
    let _ = writeln!(out, "# slope: {}", fmt_sig(report.regression.slope));
    let _ = writeln!(out, "# pairs_used: {}", report.regression.pairs_used);
    out.push_str("id,diversity,normalized\n");
    for e in &report.entries {
        let _ = writeln!(out, "{},{},{}", e.id, fmt_sig(e.diversity), fmt_sig(e.normalized));
    }
    out
}

pub fn homeland_json(report: &homeland::DiversityReport) -> Value {
    json!({
        "regression": {
            "intercept": rounded(report.regression.intercept),
            "slope": rounded(report.regression.slope),
            "pairs_used": report.regression.pairs_used,
            "max_angle": rounded(report.regression.max_angle),
        },
        "entries": report.entries.iter().map(|e| json!({
            "id": e.id,
            "diversity": rounded(e.diversity),
            "normalized": rounded(e.normalized),
        })).collect::<Vec<_>>(),
    })
}

/// Static (q3,q4) scatter, colored by azimuth group.
pub fn scatter_svg(e: &sca::ScaEmbedding, groups: &[(String, sca::Group)]) -> String {
    let (w, h, pad) = (640.0, 640.0, 60.0);
    let max = e
        .q3
        .iter()
        .chain(e.q4.iter())
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(1e-9);
    let sx = |v: f64| pad + (v / max + 1.0) / 2.0 * (w - 2.0 * pad);
    let sy = |v: f64| h - pad - (v / max + 1.0) / 2.0 * (h - 2.0 * pad);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    );
    let _ = writeln!(
        out,
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#ccc\"/>",
        sx(-max), sy(0.0), sx(max), sy(0.0)
    );
    let _ = writeln!(
        out,
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#ccc\"/>",
        sx(0.0), sy(-max), sx(0.0), sy(max)
    );
    for (i, l) in e.labels.iter().enumerate() {
        let color = match groups[i].1 {
            sca::Group::North => "#c0392b",
            sca::Group::South => "#2980b9",
            sca::Group::Center => "#27ae60",
            sca::Group::Outlier => "#7f8c8d",
        };
        let (x, y) = (sx(e.q3[i]), sy(e.q4[i]));
        let _ = writeln!(out, "  <circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"{color}\"/>");
        let _ = writeln!(
            out,
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" font-family=\"sans-serif\">{}</text>",
            x + 6.0,
            y - 4.0,
            l
        );
    }
    out.push_str("</svg>\n");
    out
}

fn write_artifact(dir: &Path, name: &str, content: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, content)?;
    written.push(path);
    Ok(())
}

fn json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Run every analysis stage and write the artifact set into `out_dir`.
/// Outputs are byte-identical across runs on identical input.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    cfg.check()?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut written = Vec::new();

    let matrix = match &cfg.wordlists {
        Some(p) => {
            let lists = corpus::load_wordlists(&std::fs::read_to_string(p)?, true)?;
            let m = lexdist::build_matrix(&lists)?;
            write_artifact(&cfg.out_dir, "matrix.csv", &m.to_csv(), &mut written)?;
            m
        }
        None => load_matrix_input(cfg.matrix.as_deref())?,
    };
    let doculects = load_locations_input(cfg.locations.as_deref())?;

    // Trees.
    let scale = phylo::TimeScale::calibrate(&matrix, cfg.survey_year, cfg.root_year)?;
    let upgma_tree = phylo::upgma(&matrix, &scale)?;
    write_artifact(&cfg.out_dir, "upgma.nwk", &(newick::to_newick(&upgma_tree) + "\n"), &mut written)?;
    let nj_tree = phylo::neighbor_joining(&matrix)?.midpoint_root()?;
    write_artifact(&cfg.out_dir, "nj.nwk", &(newick::to_newick(&nj_tree) + "\n"), &mut written)?;

    // Embedding, grouping, dating.
    let embed_cfg = EmbedConfig { ranking: cfg.ranking, central_group: cfg.central_group.clone() };
    let embedding = sca::embed(&matrix, &embed_cfg)?;
    let groups = sca::classify_by_azimuth(
        &embedding,
        sca::DEFAULT_AZIMUTH_THRESHOLDS,
        sca::DEFAULT_OUTLIER_FACTOR,
    );
    let fit = sca::fit_radial_variance(&embedding)?;
    let dating = sca::date_from_variance(fit.sigma2, cfg.pace, cfg.survey_year);
    write_artifact(
        &cfg.out_dir,
        "embedding.json",
        &json_string(&embedding_json(&embedding, &groups, &fit, &dating)),
        &mut written,
    )?;
    write_artifact(
        &cfg.out_dir,
        "dating.json",
        &json_string(&dating_json(&fit, &dating, cfg.survey_year)),
        &mut written,
    )?;
    if cfg.emit_svg {
        write_artifact(&cfg.out_dir, "scatter.svg", &scatter_svg(&embedding, &groups), &mut written)?;
    }

    // Homeland.
    let geo = geo_table(&doculects);
    let report = homeland::diversity(&matrix, &geo)?;
    write_artifact(&cfg.out_dir, "homeland.csv", &homeland_csv(&report), &mut written)?;

    // Aggregate summary.
    let ranking: Vec<Value> = lexdist::average_distances(&matrix)
        .into_iter()
        .map(|(id, d)| json!({"id": id, "mean_distance": rounded(d)}))
        .collect();
    let bipartition: Vec<Vec<String>> = upgma_tree
        .root_bipartition()
        .into_iter()
        .map(|s| s.into_iter().collect())
        .collect();
    let summary = json!({
        "doculects": matrix.n(),
        "calibration": {
            "rate_per_year": rounded(scale.rate),
            "root_year": rounded(cfg.root_year),
            "survey_year": rounded(cfg.survey_year),
        },
        "average_distance_ranking": ranking,
        "upgma_root_bipartition": bipartition,
        "dating": dating_json(&fit, &dating, cfg.survey_year),
        "homeland_top3": report.entries.iter().take(3).map(|e| json!({
            "id": e.id,
            "normalized": rounded(e.normalized),
        })).collect::<Vec<_>>(),
    });
    write_artifact(&cfg.out_dir, "summary.json", &json_string(&summary), &mut written)?;
    Ok(written)
}

/// Dry-run diagnostics: reported as findings, never as failures.
pub fn validate(cfg: &PipelineConfig) -> Vec<String> {
    let mut findings = Vec::new();
    if let Err(e) = cfg.check() {
        findings.push(format!("config: {e}"));
        return findings;
    }

    let matrix = match &cfg.wordlists {
        Some(p) => {
            let lists = std::fs::read_to_string(p)
                .map_err(Error::from)
                .and_then(|s| corpus::load_wordlists(&s, true));
            match lists {
                Err(e) => {
                    findings.push(format!("wordlists: {e}"));
                    None
                }
                Ok(lists) => {
                    for l in &lists {
                        let missing =
                            usize::from(corpus::SWADESH_CONCEPTS) - l.entries.len();
                        if missing > 0 {
                            findings.push(format!(
                                "wordlists: doculect {:?} is missing {missing} of 200 concepts",
                                l.doculect_id
                            ));
                        }
                    }
                    lexdist::build_matrix(&lists)
                        .map_err(|e| findings.push(format!("matrix: {e}")))
                        .ok()
                }
            }
        }
        None => load_matrix_input(cfg.matrix.as_deref())
            .map_err(|e| findings.push(format!("matrix: {e}")))
            .ok(),
    };

    match load_locations_input(cfg.locations.as_deref()) {
        Err(e) => findings.push(format!("locations: {e}")),
        Ok(doculects) => {
            if let Some(m) = &matrix {
                let with_geo: BTreeSet<&str> = doculects
                    .iter()
                    .filter(|d| d.geo().is_some())
                    .map(|d| d.id.as_str())
                    .collect();
                for l in m.labels() {
                    if !with_geo.contains(l.as_str()) {
                        findings.push(format!(
                            "locations: doculect {l:?} has no coordinates; excluded from homeland"
                        ));
                    }
                }
            }
        }
    }
    findings
}
