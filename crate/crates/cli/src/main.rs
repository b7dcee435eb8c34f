use std::collections::BTreeSet;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use firecase::assembly::{assemble_case, emit_report, SafetyCaseProject};
use firecase::data_eval::DataEvalConfig;
use firecase::detector::{serve, BaselineParams};
use firecase::evidence::{EvidenceKind, EvidenceRegistry};
use firecase::gsn::{
    merge_fragments, parse_argument, render_dot, validate_argument, validate_with_bindings, ArgumentGraph,
};
use firecase::passsim::{frames_per_month, Scenario};
use firecase::requirements::{
    enumerate_in_context_combinations, load_requirements, traceability_matrix_csv, validate_traceability,
    RequirementSet,
};
use firecase::synthetic::SyntheticConfig;
use firecase::verification::CampaignConfig;
use firecase::workflow::{self, DemoConfig, DemoDetector};
use firecase::Finding;

/// Safety-case toolchain for an ML wildfire-detection component.
#[derive(Parser)]
#[command(name = "firecase", version)]
struct Cli {
    /// Project manifest (project.json).
    #[arg(long, global = true)]
    project: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for stochastic steps.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate GSN fragments (files, or the project's fragments).
    Validate { files: Vec<PathBuf> },
    /// Render GSN to Graphviz DOT.
    Render { files: Vec<PathBuf> },
    /// Requirement traceability checks and matrix.
    Trace {
        /// Requirement set JSON; the project's or the built-in set otherwise.
        #[arg(long)]
        requirements: Option<PathBuf>,
        #[arg(long)]
        check: bool,
        #[arg(long)]
        matrix: bool,
        /// Print the number of in-context robustness combinations.
        #[arg(long)]
        combinations: bool,
    },
    /// Evaluate a dataset against the data requirements.
    EvalData {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        requirements: Option<PathBuf>,
    },
    /// Sample-level results over the internal test splits.
    InternalTest {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        detector: Option<PathBuf>,
        #[arg(long)]
        requirements: Option<PathBuf>,
    },
    /// Run the verification campaign on the verification split.
    RunVerification {
        #[arg(long)]
        dataset: PathBuf,
        /// Detector spec JSON; the baseline when absent.
        #[arg(long)]
        detector: Option<PathBuf>,
        /// Campaign config JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Pass scenario used for the frames-per-month figure.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        frames_per_month: Option<f64>,
        #[arg(long)]
        dev_team: Option<String>,
        #[arg(long)]
        requirements: Option<PathBuf>,
    },
    /// Simulate constellation passes for a scenario.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Assemble the safety case and print the verdict summary.
    Assemble,
    /// Assemble and write the report bundle.
    Report,
    /// Register an evidence file in the project registry.
    Register {
        file: PathBuf,
        #[arg(long)]
        kind: EvidenceKind,
        #[arg(long, default_value = "firecase")]
        producer: String,
        /// Bind the artifact to these Solution ids.
        #[arg(long)]
        bind: Vec<String>,
    },
    /// Create a complete demo project.
    InitDemo {
        dir: PathBuf,
        /// Replay truth masks instead of running the baseline.
        #[arg(long)]
        truth_detector: bool,
        /// Development tiles for every n-th class combination only.
        #[arg(long)]
        sample_stride: Option<usize>,
    },
    #[command(hide = true)]
    ServeBaseline {
        #[arg(long)]
        params: Option<PathBuf>,
    },
}

enum Outcome {
    Ok,
    Findings,
}

fn print_findings(findings: &[Finding]) -> Outcome {
    for f in findings {
        println!("{f}");
    }
    if findings.iter().any(Finding::is_error) {
        Outcome::Findings
    } else {
        Outcome::Ok
    }
}

fn project(cli: &Cli) -> Result<SafetyCaseProject> {
    let Some(p) = &cli.project else {
        bail!(UsageError("--project <manifest> is required"));
    };
    Ok(SafetyCaseProject::load(p)?)
}

fn requirements(cli: &Cli, explicit: &Option<PathBuf>) -> Result<RequirementSet> {
    if let Some(p) = explicit {
        return Ok(load_requirements(p)?);
    }
    match &cli.project {
        Some(_) => Ok(project(cli)?.requirements()?),
        None => Ok(RequirementSet::canonical()),
    }
}

fn out_dir(cli: &Cli, default: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

#[derive(Debug)]
struct UsageError(&'static str);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.0)
    }
}

impl std::error::Error for UsageError {}

fn read_graph(path: &Path) -> Result<Result<ArgumentGraph, Finding>> {
    let src = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_argument(&src).map_err(|e| Finding::error("parse", path.display().to_string(), e.to_string())))
}

fn graphs(cli: &Cli, files: &[PathBuf]) -> Result<Vec<(String, Result<ArgumentGraph, Finding>)>> {
    if !files.is_empty() {
        return files
            .iter()
            .map(|f| {
                let name = f
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                Ok((name, read_graph(f)?))
            })
            .collect();
    }
    let p = project(cli)?;
    Ok(p.fragments()?.into_iter().map(|(slot, g)| (slot, Ok(g))).collect())
}

fn validate(cli: &Cli, files: &[PathBuf]) -> Result<Outcome> {
    let gs = graphs(cli, files)?;
    let mut all = Vec::new();
    let bound: Option<BTreeSet<String>> = if files.is_empty() {
        Some(project(cli)?.manifest.bindings.into_keys().collect())
    } else {
        None
    };
    let mut parsed = Vec::new();
    for (name, g) in gs {
        match g {
            Ok(g) => {
                let f = match &bound {
                    Some(b) => validate_with_bindings(&g, b),
                    None => validate_argument(&g),
                };
                println!("{name}: {} nodes, {} finding(s)", g.nodes.len(), f.len());
                all.extend(f);
                parsed.push(g);
            }
            Err(f) => {
                println!("{name}: parse error");
                all.push(f);
            }
        }
    }
    if files.is_empty() && parsed.len() > 1 {
        let p = project(cli)?;
        let others: Vec<&ArgumentGraph> = parsed[1..].iter().collect();
        match merge_fragments(&p.manifest.name, &parsed[0], &others) {
            Ok(m) => {
                let f = validate_argument(&m);
                println!("merged: {} nodes, {} finding(s)", m.nodes.len(), f.len());
                all.extend(f);
            }
            Err(e) => all.push(Finding::error("merge", &p.manifest.name, e.to_string())),
        }
    }
    Ok(print_findings(&all))
}

fn render(cli: &Cli, files: &[PathBuf]) -> Result<Outcome> {
    let gs = graphs(cli, files)?;
    let mut findings = Vec::new();
    let mut rendered = Vec::new();
    for (name, g) in gs {
        match g.map(|g| render_dot(&g).map_err(|e| Finding::error("render", &name, e.to_string()))) {
            Ok(Ok(dot)) => rendered.push((name, dot)),
            Ok(Err(f)) | Err(f) => findings.push(f),
        }
    }
    match &cli.out {
        None if rendered.len() == 1 => print!("{}", rendered[0].1),
        _ => {
            let out = out_dir(cli, "dot");
            std::fs::create_dir_all(&out)?;
            for (name, dot) in &rendered {
                let p = out.join(format!("{name}.dot"));
                std::fs::write(&p, dot)?;
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(print_findings(&findings))
}

fn trace(cli: &Cli, req: &Option<PathBuf>, check: bool, matrix: bool, combinations: bool) -> Result<Outcome> {
    let rs = requirements(cli, req)?;
    let mut outcome = Outcome::Ok;
    let none = !check && !matrix && !combinations;
    if check || none {
        let f = validate_traceability(&rs);
        println!("{} trace link(s), {} finding(s)", rs.traces.len(), f.len());
        outcome = print_findings(&f);
    }
    if combinations {
        let (c, f) = enumerate_in_context_combinations(&rs);
        println!("in-context combinations: {}", c.len());
        if let Outcome::Findings = print_findings(&f) {
            outcome = Outcome::Findings;
        }
    }
    if matrix {
        let csv = traceability_matrix_csv(&rs);
        match &cli.out {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("traceability.csv"), csv)?;
            }
            None => print!("{csv}"),
        }
    }
    Ok(outcome)
}

fn detector_spec(cli: &Cli, path: &Option<PathBuf>) -> Result<firecase::detector::DetectorSpec> {
    let _ = cli;
    match path {
        Some(p) => Ok(workflow::load_detector_spec(p)?),
        None => Ok(firecase::detector::DetectorSpec::baseline()),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_verification(
    cli: &Cli,
    dataset: &Path,
    detector: &Option<PathBuf>,
    config: &Option<PathBuf>,
    scenario: &Option<PathBuf>,
    fpm: Option<f64>,
    dev_team: &Option<String>,
    req: &Option<PathBuf>,
) -> Result<Outcome> {
    let rs = requirements(cli, req)?;
    let spec = detector_spec(cli, detector)?;
    let mut cfg = match config {
        Some(p) => workflow::load_json::<CampaignConfig>(p)?,
        None => CampaignConfig::from_requirements(&rs),
    };
    if let Some(s) = scenario {
        let s = Scenario::load(s)?;
        cfg.frames_per_month = Some(frames_per_month(&s.constellation, &s.roi)?);
    }
    if fpm.is_some() {
        cfg.frames_per_month = fpm;
    }
    let team = dev_team
        .clone()
        .or_else(|| cli.project.as_ref().and_then(|_| project(cli).ok()?.manifest.dev_team));
    let out = out_dir(cli, "out");
    let v = workflow::run_verification(dataset, &rs, &spec, &cfg, team.as_deref(), &out)?;
    print!("{}", v.campaign.findings_text());
    for f in &v.independence.findings {
        println!("{f}");
    }
    println!("wrote {}", out.display());
    let ok = v.campaign.all_passed() && v.independence.independent;
    Ok(if ok { Outcome::Ok } else { Outcome::Findings })
}

fn simulate(cli: &Cli, scenario: &Path) -> Result<Outcome> {
    let mut s = Scenario::load(scenario)?;
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    let out = out_dir(cli, "out");
    let r = workflow::run_simulation(&s, &out)?;
    let sum = r.summary(s.fires.len());
    println!(
        "{} passes, {} frames, {} of {} fires detected, {} false alerts",
        sum.passes, sum.frames, sum.detected, sum.fires, sum.false_alerts
    );
    if let (Some(p50), Some(max)) = (sum.response_p50_min, sum.response_max_min) {
        println!("response time: median {p50:.2} min, max {max:.2} min");
    }
    println!("uncovered region fraction: {:.4}", sum.uncovered_roi_fraction);
    println!("frames per month: {:.1}", frames_per_month(&s.constellation, &s.roi)?);
    println!("wrote {}", out.display());
    Ok(print_findings(&r.findings))
}

fn assemble(cli: &Cli, write_report: bool) -> Result<Outcome> {
    let p = project(cli)?;
    let case = match assemble_case(&p) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("assembly failed: {e}");
            return Ok(Outcome::Findings);
        }
    };
    print!("{}", case.summary.to_text());
    if write_report {
        let out = out_dir(cli, "report");
        let files = emit_report(&case, &out)?;
        println!("wrote {} files to {}", files.len(), out.display());
    }
    Ok(if case.assured() { Outcome::Ok } else { Outcome::Findings })
}

fn register(cli: &Cli, file: &Path, kind: EvidenceKind, producer: &str, bind: &[String]) -> Result<Outcome> {
    let mut p = project(cli)?;
    let mut reg = EvidenceRegistry::load(&p.registry_path())?;
    let base = std::fs::canonicalize(&p.base)?;
    let file = std::fs::canonicalize(file).with_context(|| format!("reading {}", file.display()))?;
    let a = reg.register(&base, &file, kind, producer)?;
    reg.save(&p.registry_path())?;
    println!("{} {} {} {}", a.id, a.kind.name(), a.path, a.sha256);
    if !bind.is_empty() {
        for sn in bind {
            p.manifest.bindings.insert(sn.clone(), a.id.clone());
        }
        p.save_manifest()?;
    }
    Ok(Outcome::Ok)
}

fn init_demo(cli: &Cli, dir: &Path, truth: bool, stride: Option<usize>) -> Result<Outcome> {
    let mut synthetic = SyntheticConfig::default();
    if let Some(seed) = cli.seed {
        synthetic.seed = seed;
    }
    if let Some(s) = stride {
        synthetic.full_coverage = false;
        synthetic.dev_stride = s;
    }
    let cfg = DemoConfig {
        synthetic,
        detector: if truth {
            DemoDetector::Truth
        } else {
            DemoDetector::Baseline
        },
    };
    let manifest = workflow::init_demo(dir, &cfg)?;
    println!("{}", manifest.display());
    Ok(Outcome::Ok)
}

fn serve_baseline(params: &Option<PathBuf>) -> Result<Outcome> {
    let params = match params {
        Some(p) => workflow::load_json::<BaselineParams>(p)?,
        None => BaselineParams::defaults(),
    };
    let scratch = tempfile_dir()?;
    let stdin = io::stdin();
    let stdout = io::stdout();
    serve(&params, stdin.lock(), stdout.lock(), &scratch)?;
    io::stdout().flush()?;
    let _ = std::fs::remove_dir_all(&scratch);
    Ok(Outcome::Ok)
}

fn tempfile_dir() -> Result<PathBuf> {
    let dir = std::env::temp_dir().join(format!("firecase-serve-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Validate { files } => validate(cli, files),
        Command::Render { files } => render(cli, files),
        Command::Trace {
            requirements,
            check,
            matrix,
            combinations,
        } => trace(cli, requirements, *check, *matrix, *combinations),
        Command::EvalData {
            dataset,
            requirements: req,
        } => {
            let rs = requirements(cli, req)?;
            let out = out_dir(cli, "out");
            let r = workflow::run_data_eval(dataset, &rs, &DataEvalConfig::default(), &out)?;
            print!("{}", r.to_text());
            println!("wrote {}", out.display());
            Ok(if r.has_fail() { Outcome::Findings } else { Outcome::Ok })
        }
        Command::InternalTest {
            dataset,
            detector,
            requirements: req,
        } => {
            let rs = requirements(cli, req)?;
            let spec = detector_spec(cli, detector)?;
            let out = out_dir(cli, "out");
            let r = workflow::run_internal_test(dataset, &rs, &spec, &out)?;
            let s = &r.summary;
            println!(
                "{} samples: FN {} ({:.2}%), FP {} ({:.2}%), mean IoU {:.4}",
                s.samples, s.false_negatives, s.fn_pct, s.false_positives, s.fp_pct, s.mean_iou
            );
            Ok(Outcome::Ok)
        }
        Command::RunVerification {
            dataset,
            detector,
            config,
            scenario,
            frames_per_month,
            dev_team,
            requirements: req,
        } => run_verification(
            cli,
            dataset,
            detector,
            config,
            scenario,
            *frames_per_month,
            dev_team,
            req,
        ),
        Command::Simulate { scenario } => simulate(cli, scenario),
        Command::Assemble => assemble(cli, false),
        Command::Report => assemble(cli, true),
        Command::Register {
            file,
            kind,
            producer,
            bind,
        } => register(cli, file, *kind, producer, bind),
        Command::InitDemo {
            dir,
            truth_detector,
            sample_stride,
        } => init_demo(cli, dir, *truth_detector, *sample_stride),
        Command::ServeBaseline { params } => serve_baseline(params),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Findings) => ExitCode::from(1),
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
