//! `zipshoe`: build and verify N-to-1 horseshoe models, export refinement
//! trees, enumerate periodic orbits, check the symbolic conjugacy, and run
//! the perturbation experiment.
//!
//! Exit codes: 0 all checks pass, 1 verification failure, 2 configuration
//! or I/O error.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use zipshoe_core::conjugacy::{conjugacy_check, decode, entropy_estimate, periodic_orbit_solve};
use zipshoe_core::horseshoe::{ConeParams, HorseshoeModel, HorseshoeParams, RefinementTree};
use zipshoe_core::stability::{match_conjugacy, perturb, PerturbationConfig, ShapeParams};
use zipshoe_core::symbolic::{SSymbol, ZSymbol, ZipSequence, ZipSystem, DEFAULT_ENUMERATION_CAP};

#[derive(Parser)]
#[command(
    name = "zipshoe",
    about = "N-to-1 horseshoe and zip-shift verification toolkit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Fold count N; the model has 2N branches.
    #[arg(long = "N", default_value_t = 2)]
    n: usize,
    /// Stretch excess: alpha = 2N + eps.
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Lower horizontal strip anchor (auto-spaced when omitted).
    #[arg(long)]
    y_a: Option<f64>,
    /// Upper horizontal strip anchor (auto-spaced when omitted).
    #[arg(long)]
    y_b: Option<f64>,
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Dump the model: parameters, branch coefficients, induced alphabets.
    Build {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Check the strip-mapping and cone conditions.
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        /// Growth constant (default 1/alpha, the exact-margin choice).
        #[arg(long)]
        mu: Option<f64>,
        /// Unstable cone aperture.
        #[arg(long, default_value_t = 0.3)]
        mu_h: f64,
        /// Stable cone aperture.
        #[arg(long, default_value_t = 0.3)]
        mu_v: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Export the strip refinement tree to the given depth.
    Refine {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Also emit the horizontal (backward) strips in CSV output.
        #[arg(long)]
        include_backward: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Enumerate symbolic and geometric periodic points of the given period.
    Orbits {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2)]
        period: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Print log(#words of length depth)/depth for the refined model.
    Entropy {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 5)]
        depth: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sample coded points and verify the commuting diagram.
    Conjugacy {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Perturb the model, re-verify, and match the refinement trees.
    Perturb {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1e-3)]
        eta: f64,
        #[arg(long, default_value_t = 1.0)]
        c1: f64,
        #[arg(long, default_value_t = 1.0)]
        c2: f64,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Worked demonstrations on small systems.
    Demo {
        #[command(subcommand)]
        what: DemoCommand,
    },
}

#[derive(Subcommand)]
enum DemoCommand {
    /// Code orbits of the circle doubling map into the singleton-Z system.
    Doubling {
        #[arg(long, default_value_t = 8)]
        points: usize,
        #[arg(long, default_value_t = 16)]
        steps: usize,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn cap() -> u64 {
    std::env::var("ZIPSHOE_CAP")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_ENUMERATION_CAP)
}

fn params_from(args: &ModelArgs) -> Result<HorseshoeParams<f64>, String> {
    if args.n == 0 {
        return Err("N must be >= 1".into());
    }
    match (args.y_a, args.y_b) {
        (None, None) => HorseshoeParams::new(args.n, args.eps).map_err(|e| e.to_string()),
        (y_a, y_b) => {
            let base = HorseshoeParams::new(args.n, args.eps).map_err(|e| e.to_string())?;
            HorseshoeParams::with_anchors(
                args.n,
                args.eps,
                y_a.unwrap_or(base.y_a),
                y_b.unwrap_or(base.y_b),
            )
            .map_err(|e| e.to_string())
        }
    }
}

/// Like [`params_from`] but keeps geometrically broken anchors so `verify`
/// reports them as findings instead of refusing to run.
fn params_unchecked(args: &ModelArgs) -> Result<HorseshoeParams<f64>, String> {
    if args.n == 0 {
        return Err("N must be >= 1".into());
    }
    let base = HorseshoeParams::new(args.n, args.eps).map_err(|e| e.to_string())?;
    Ok(HorseshoeParams {
        folds: args.n,
        eps: args.eps,
        y_a: args.y_a.unwrap_or(base.y_a),
        y_b: args.y_b.unwrap_or(base.y_b),
    })
}

fn emit(out: &OutArgs, content: &str) -> Result<(), String> {
    match &out.out {
        None => {
            println!("{content}");
            Ok(())
        }
        Some(path) => fs::write(path, format!("{content}\n"))
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
    }
}

fn json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string_pretty(value).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Build { model, out } => {
            let m = HorseshoeModel::build(params_from(&model)?).map_err(|e| e.to_string())?;
            emit(&out, &json(&m.dump())?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { model, mu, mu_h, mu_v, out } => {
            let params = params_unchecked(&model)?;
            let m = HorseshoeModel::build_unchecked(params);
            let mut report = zipshoe_core::report::CheckReport::default();
            report.push(
                "parameter invariants",
                params.validate().is_ok(),
                params.validate().err().map(|e| e.to_string()).unwrap_or_default(),
            );
            report.merge(m.verify_assumption1());
            let cone = ConeParams {
                mu: mu.unwrap_or_else(|| m.params.beta()),
                mu_h,
                mu_v,
                grid_points: 5,
            };
            let cones = m.verify_cones(&cone).map_err(|e| e.to_string())?;
            let passed = report.all_passed() && cones.passed;

            #[derive(Serialize)]
            struct VerifyReport<'a> {
                checks: &'a zipshoe_core::report::CheckReport,
                cones: &'a zipshoe_core::report::ConeReport,
                passed: bool,
            }
            emit(&out, &json(&VerifyReport { checks: &report, cones: &cones, passed })?)?;
            if !passed {
                for item in report.failures() {
                    eprintln!("FAIL {}: {}", item.name, item.detail);
                }
                if !cones.passed {
                    eprintln!("FAIL cone conditions");
                }
                return Ok(ExitCode::from(1));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Refine { model, depth, format, include_backward, out } => {
            let m = HorseshoeModel::build(params_from(&model)?).map_err(|e| e.to_string())?;
            let tree = m.refine(depth, cap()).map_err(|e| e.to_string())?;
            let content = match format {
                Format::Csv => tree_to_csv(&m.zip_system, &tree, include_backward),
                Format::Json => json(&tree_to_json(&m.zip_system, &tree))?,
            };
            emit(&out, &content)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Orbits { model, period, out } => {
            let m = HorseshoeModel::build(params_from(&model)?).map_err(|e| e.to_string())?;
            if period == 0 {
                return Err("period must be >= 1".into());
            }
            let sys = &m.zip_system;
            let symbolic = sys.enumerate_periodic(period, cap()).map_err(|e| e.to_string())?;
            let mut geometric = Vec::new();
            for word in sys.s_blocks(period) {
                let p = periodic_orbit_solve(&m, &word).map_err(|e| e.to_string())?;
                let backward: Vec<ZSymbol> = word.iter().map(|&s| sys.tau(s)).collect();
                let rect = decode(&m, &backward, &word).map_err(|e| e.to_string())?;
                if !rect.contains(&p, 1e-12) {
                    return Err(format!(
                        "orbit for {} escapes its decode box",
                        sys.format_s_word(&word)
                    ));
                }
                geometric.push(OrbitEntry { word: sys.format_s_word(&word), x: p.x, y: p.y });
            }
            let report = OrbitsReport {
                period,
                count: symbolic.len(),
                symbolic: symbolic.iter().map(|p| p.to_repr(sys)).collect(),
                geometric,
            };
            emit(&out, &json(&report)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Entropy { model, depth, out } => {
            let m = HorseshoeModel::build(params_from(&model)?).map_err(|e| e.to_string())?;
            if depth == 0 {
                return Err("depth must be >= 1".into());
            }
            let h = entropy_estimate(&m, depth, cap()).map_err(|e| e.to_string())?;
            emit(&out, &format!("{h:.7}"))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Conjugacy { model, depth, samples, seed, out } => {
            let m = HorseshoeModel::build(params_from(&model)?).map_err(|e| e.to_string())?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let report =
                conjugacy_check(&m, depth, samples, &mut rng).map_err(|e| e.to_string())?;
            emit(&out, &json(&report)?)?;
            if report.failures > 0 {
                for example in &report.failure_examples {
                    eprintln!("FAIL {example}");
                }
                return Ok(ExitCode::from(1));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Perturb { model, eta, c1, c2, depth, out } => {
            let m = HorseshoeModel::build(params_from(&model)?).map_err(|e| e.to_string())?;
            let shape = ShapeParams { c1, c2 };
            let pm = perturb(&m, eta, shape).map_err(|e| e.to_string())?;
            let verification =
                pm.verify(&pm.default_cone_params()).map_err(|e| e.to_string())?;
            let matched = match_conjugacy(&m, &pm, depth, cap()).map_err(|e| e.to_string())?;
            let passed = verification.passed && matched.passed;
            let report = PerturbReport {
                perturbation: PerturbationConfig { eta, shape: "sin2pi".into(), c1, c2 },
                verification,
                matching: matched,
                passed,
            };
            emit(&out, &json(&report)?)?;
            Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Demo { what } => match what {
            DemoCommand::Doubling { points, steps, out } => demo_doubling(points, steps, &out),
        },
    }
}

#[derive(Serialize)]
struct OrbitEntry {
    word: String,
    x: f64,
    y: f64,
}

#[derive(Serialize)]
struct OrbitsReport {
    period: usize,
    count: usize,
    symbolic: Vec<zipshoe_core::symbolic::ZipSequenceRepr>,
    geometric: Vec<OrbitEntry>,
}

#[derive(Serialize)]
struct PerturbReport {
    perturbation: PerturbationConfig,
    verification: zipshoe_core::stability::StabilityReport,
    matching: zipshoe_core::stability::MatchReport,
    passed: bool,
}

/// Codes orbits of `x -> 2x mod 1` into the zip system S = {0, 1}, Z = {a}:
/// the forward word is the binary itinerary, and shifting a code matches
/// coding the image point on the shared window.
fn demo_doubling(points: usize, steps: usize, out: &OutArgs) -> Result<ExitCode, String> {
    if points == 0 || steps < 2 {
        return Err("need at least one point and two steps".into());
    }
    let sys = ZipSystem::doubling();
    let code = |x: f64| -> Vec<SSymbol> {
        let mut word = Vec::with_capacity(steps);
        let mut t = x;
        for _ in 0..steps {
            let bit = if t < 0.5 { 0 } else { 1 };
            word.push(SSymbol(bit));
            t = (2.0 * t).fract();
        }
        word
    };
    let sequence = |word: &[SSymbol]| {
        ZipSequence::new(vec![ZSymbol(0)], vec![], word.to_vec(), vec![SSymbol(0)]).unwrap()
    };

    #[derive(Serialize)]
    struct DoublingEntry {
        x: f64,
        itinerary: Vec<String>,
    }
    #[derive(Serialize)]
    struct DoublingReport {
        system: zipshoe_core::symbolic::ZipSystemConfig,
        steps: usize,
        entries: Vec<DoublingEntry>,
        shift_consistent: bool,
    }

    let mut entries = Vec::with_capacity(points);
    let mut consistent = true;
    for i in 0..points {
        let x = (i as f64 + 0.5) / points as f64;
        let word = code(x);
        let shifted = sys.shift(&sequence(&word));
        let image_code = code((2.0 * x).fract());
        for (j, &sym) in image_code.iter().take(steps - 1).enumerate() {
            use zipshoe_core::symbolic::Letter;
            if shifted.symbol_at(j as i64) != Letter::S(sym) {
                consistent = false;
            }
        }
        entries.push(DoublingEntry {
            x,
            itinerary: word.iter().map(|&s| sys.s_name(s).to_string()).collect(),
        });
    }
    let report = DoublingReport {
        system: sys.to_config(),
        steps,
        entries,
        shift_consistent: consistent,
    };
    emit(out, &json(&report)?)?;
    Ok(if consistent { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn tree_to_csv(sys: &ZipSystem, tree: &RefinementTree<f64>, include_backward: bool) -> String {
    let mut csv = String::from("word,x_lo,x_hi,y_lo,y_hi");
    for node in tree.deepest_forward() {
        let _ = write!(
            csv,
            "\n{},{},{},0,1",
            sys.format_s_word(&node.word),
            node.x.lo,
            node.x.hi
        );
    }
    if include_backward {
        for node in tree.deepest_backward() {
            let _ = write!(
                csv,
                "\n{},0,1,{},{}",
                sys.format_z_word(&node.word),
                node.y.lo,
                node.y.hi
            );
        }
    }
    csv
}

#[derive(Serialize)]
struct TreeJson {
    depth: usize,
    alpha_v: Option<f64>,
    alpha_h: Option<f64>,
    forward: Vec<TreeNodeJson>,
    backward: Vec<TreeNodeJson>,
}

#[derive(Serialize)]
struct TreeNodeJson {
    word: String,
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
    children: Vec<TreeNodeJson>,
}

/// Nested view of the tree: children extend a word by one symbol, and the
/// lexicographic level ordering makes each child block contiguous.
fn tree_to_json(sys: &ZipSystem, tree: &RefinementTree<f64>) -> TreeJson {
    fn forward_subtree(
        sys: &ZipSystem,
        tree: &RefinementTree<f64>,
        level: usize,
        index: usize,
        base: usize,
    ) -> TreeNodeJson {
        let node = &tree.forward_levels[level][index];
        let children = if level + 1 < tree.forward_levels.len() {
            (0..base)
                .map(|k| forward_subtree(sys, tree, level + 1, index * base + k, base))
                .collect()
        } else {
            Vec::new()
        };
        TreeNodeJson {
            word: sys.format_s_word(&node.word),
            x_lo: node.x.lo,
            x_hi: node.x.hi,
            y_lo: 0.0,
            y_hi: 1.0,
            children,
        }
    }
    fn backward_subtree(
        sys: &ZipSystem,
        tree: &RefinementTree<f64>,
        level: usize,
        index: usize,
        base: usize,
    ) -> TreeNodeJson {
        let node = &tree.backward_levels[level][index];
        // A backward child extends the word on its old end (the prepended
        // symbol is the lexicographically major digit), so the children of
        // node `index` sit at `k * level_len + index`.
        let level_len = tree.backward_levels[level].len();
        let children = if level + 1 < tree.backward_levels.len() {
            (0..base)
                .map(|k| backward_subtree(sys, tree, level + 1, k * level_len + index, base))
                .collect()
        } else {
            Vec::new()
        };
        TreeNodeJson {
            word: sys.format_z_word(&node.word),
            x_lo: 0.0,
            x_hi: 1.0,
            y_lo: node.y.lo,
            y_hi: node.y.hi,
            children,
        }
    }
    TreeJson {
        depth: tree.depth,
        alpha_v: tree.alpha_v,
        alpha_h: tree.alpha_h,
        forward: (0..tree.forward_levels[0].len())
            .map(|i| forward_subtree(sys, tree, 0, i, sys.s_len()))
            .collect(),
        backward: (0..tree.backward_levels[0].len())
            .map(|i| backward_subtree(sys, tree, 0, i, sys.z_len()))
            .collect(),
    }
}
