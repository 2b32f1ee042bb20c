//! `compose`: command-line driver for the composition-analysis library.
//! One subcommand per pipeline stage plus batch indexing, retrieval
//! queries, and metric evaluation. All outputs are deterministic for
//! identical inputs, flags, and seed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use compose_core::error::Error;
use compose_core::geometry::Point2;
use compose_core::imagebuf::{resize_canonical, ImageBuffer};
use compose_core::labels::RegionLabelMap;
use compose_core::line_segments::detect_line_segments;
use compose_core::metrics::{
    precision_recall, rand_index, segmentation_covering, variation_of_information,
    vp_success_curve, CoveringDirection, PartitionPair,
};
use compose_core::overlay;
use compose_core::retrieval::{
    build_index, load_index, query_scene, query_sketch, AnalysisMode,
};
use compose_core::segmentation::{segment_at, segment_image, StopRule};
use compose_core::triangles::{match_sketch, ransac_detect, Opening, SketchQuery};
use compose_core::vanishing_point::detect_dominant_vp;

mod params;
use params::ParamFlags;

#[derive(Parser)]
#[command(
    name = "compose",
    version,
    about = "Triangle-based photographic composition analysis",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full analysis: vanishing point, segmentation, line segments, triangles
    Analyze {
        image: PathBuf,
        /// Output directory
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        params: ParamFlags,
    },
    /// Hierarchical region merging around a pole
    Segment {
        image: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Pole as X,Y; the dominant vanishing point is detected when omitted
        #[arg(long)]
        pole: Option<String>,
        /// Stop at exactly this many regions instead of the weight threshold
        #[arg(long)]
        regions: Option<u32>,
        #[command(flatten)]
        params: ParamFlags,
    },
    /// Dominant vanishing point via consensus grid search
    Vp {
        image: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        params: ParamFlags,
    },
    /// Line segment detection
    Lines {
        image: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        params: ParamFlags,
    },
    /// Triangle detection (optionally filtered by a two-line sketch)
    Triangles {
        image: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Sketch line 1 orientation in degrees
        #[arg(long)]
        l1: Option<f64>,
        /// Sketch line 2 orientation in degrees
        #[arg(long)]
        l2: Option<f64>,
        /// Sketch opening direction: up|down|left|right
        #[arg(long)]
        open: Option<String>,
        #[command(flatten)]
        params: ParamFlags,
    },
    /// Composition index maintenance
    Index {
        #[command(subcommand)]
        action: IndexCmd,
    },
    /// Retrieval against a composition index
    Query {
        #[command(subcommand)]
        action: QueryCmd,
    },
    /// Metric evaluation against ground truth; emits CSV rows
    Eval {
        #[command(subcommand)]
        action: EvalCmd,
    },
}

#[derive(Subcommand)]
enum IndexCmd {
    /// Analyze every image in a directory (incremental on rebuilds)
    Build {
        dir: PathBuf,
        /// Analysis stages: scene|portrait|full
        #[arg(long, default_value = "full")]
        mode: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        params: ParamFlags,
    },
}

#[derive(Subcommand)]
enum QueryCmd {
    /// Rank indexed images by scene-composition distance to a photo
    Scene {
        image: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[arg(long, default_value_t = 8)]
        topk: usize,
        #[command(flatten)]
        params: ParamFlags,
    },
    /// Rank indexed images against a two-line sketch
    Sketch {
        #[arg(long)]
        l1: f64,
        #[arg(long)]
        l2: f64,
        /// Opening direction: up|down|left|right
        #[arg(long)]
        open: String,
        #[arg(long)]
        index: PathBuf,
        #[arg(long, default_value_t = 20)]
        topk: usize,
        #[command(flatten)]
        params: ParamFlags,
    },
}

#[derive(Subcommand)]
enum EvalCmd {
    /// Vanishing-point success-rate curve: predictions and truths are JSON
    /// arrays of {"x","y"}
    Vp {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// CSV output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Segmentation metrics between two 16-bit label-map PNGs
    Seg {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Triangle precision/recall: JSON arrays of 3-point triangles
    Triangles {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Vertex-distance match threshold
        #[arg(long, default_value_t = 0.3)]
        delta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    compose_core::par::init_thread_pool_from_env();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with exit 0
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// 1 for bad input, 2 for internal failures.
fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_)
        | Error::DimensionMismatch(_)
        | Error::Io(_)
        | Error::Image(_)
        | Error::Json(_) => 1,
        _ => 2,
    }
}

fn load_canonical(path: &Path) -> Result<ImageBuffer, Error> {
    let img = ImageBuffer::load(path)?;
    resize_canonical(&img)
}

fn stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("image").to_string()
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Error> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes)?;
    Ok(())
}

fn point_json(p: Point2) -> serde_json::Value {
    serde_json::json!({ "x": p.x, "y": p.y })
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Analyze { image, out, params } => {
            let (p, _) = params.resolve()?;
            let img = load_canonical(&image)?;
            std::fs::create_dir_all(&out)?;
            let (mut record, labels) =
                compose_core::retrieval::analyze_image(&img, &p)?;
            record.image_id = stem(&image);
            let base = out.join(stem(&image));
            labels.save_png(base.with_extension("labels.png"))?;
            std::fs::write(
                base.with_extension("analysis.json"),
                serde_json::to_vec_pretty(&record)?,
            )?;
            let mut view = img.clone();
            overlay::overlay_triangles(&mut view, &record.triangles);
            if let Some(vp) = record.vp {
                overlay::overlay_vp(&mut view, vp);
            }
            view.save_png(base.with_extension("overlay.png"))?;
            println!("{}", serde_json::to_string(&record)?);
            Ok(())
        }
        Command::Segment { image, out, pole, regions, params } => {
            let (p, _) = params.resolve()?;
            let img = load_canonical(&image)?;
            std::fs::create_dir_all(&out)?;
            let pole = match pole {
                Some(s) => parse_point(&s)?,
                None => detect_dominant_vp(&img, &p.vp)?.best,
            };
            let (labels, hierarchy) = segment_image(&img, pole, &p.seg)?;
            let labels = match regions {
                Some(k) => segment_at(&hierarchy, StopRule::Regions(k)),
                None => labels,
            };
            let base = out.join(stem(&image));
            labels.save_png(base.with_extension("labels.png"))?;
            overlay::region_mean_fill(&img, &labels).save_png(base.with_extension("regions.png"))?;
            let sidecar = serde_json::json!({
                "lambda": p.seg.lambda,
                "stop_delta": p.seg.stop_delta,
                "num_regions": labels.num_regions(),
                "vp": point_json(pole),
            });
            write_json(&base.with_extension("segmentation.json"), &sidecar)?;
            println!("{sidecar}");
            Ok(())
        }
        Command::Vp { image, out, params } => {
            let (p, _) = params.resolve()?;
            let img = load_canonical(&image)?;
            std::fs::create_dir_all(&out)?;
            let map = detect_dominant_vp(&img, &p.vp)?;
            let base = out.join(stem(&image));
            let result = serde_json::json!({
                "vp": point_json(map.best),
                "score": map.best_score,
                "grid": [map.grid_cols, map.grid_rows],
            });
            write_json(&base.with_extension("vp.json"), &result)?;
            heatmap(&map.scores, map.grid_cols, map.grid_rows)?
                .save_png(base.with_extension("vp_heatmap.png"))?;
            let mut view = img.clone();
            overlay::overlay_vp(&mut view, map.best);
            view.save_png(base.with_extension("vp_overlay.png"))?;
            println!("{result}");
            Ok(())
        }
        Command::Lines { image, out, params } => {
            let (p, _) = params.resolve()?;
            let img = load_canonical(&image)?;
            std::fs::create_dir_all(&out)?;
            let segments = detect_line_segments(&img, &p.lsd, None)?;
            let json: Vec<serde_json::Value> = segments
                .iter()
                .map(|s| {
                    serde_json::json!({
                        "p0": point_json(s.p0),
                        "p1": point_json(s.p1),
                        "confidence": s.confidence,
                    })
                })
                .collect();
            let base = out.join(stem(&image));
            write_json(&base.with_extension("lines.json"), &serde_json::Value::Array(json.clone()))?;
            let mut view = img.clone();
            overlay::overlay_segments(&mut view, &segments);
            view.save_png(base.with_extension("lines_overlay.png"))?;
            println!("{}", serde_json::Value::Array(json));
            Ok(())
        }
        Command::Triangles { image, out, l1, l2, open, params } => {
            let (p, _) = params.resolve()?;
            let img = load_canonical(&image)?;
            std::fs::create_dir_all(&out)?;
            let segments = detect_line_segments(&img, &p.lsd, None)?;
            let mut candidates = ransac_detect(&segments, &p.ransac, img.width(), img.height())?;
            match (l1, l2, open) {
                (Some(a), Some(b), Some(o)) => {
                    let query = SketchQuery::new(a, b, o.parse::<Opening>()?)?;
                    candidates = match_sketch(&query, &candidates);
                }
                (None, None, None) => {}
                _ => {
                    return Err(Error::InvalidInput(
                        "sketch queries need all of --l1, --l2, and --open".into(),
                    ))
                }
            }
            let json: Vec<serde_json::Value> = candidates
                .iter()
                .map(|c| {
                    serde_json::json!({
                        "apex": point_json(c.apex),
                        "v1": point_json(c.vertex1),
                        "v2": point_json(c.vertex2),
                        "cr": c.continuity_ratio,
                        "tr": c.total_ratio,
                        "opening": c.opening,
                    })
                })
                .collect();
            let base = out.join(stem(&image));
            write_json(
                &base.with_extension("triangles.json"),
                &serde_json::Value::Array(json.clone()),
            )?;
            let mut view = img.clone();
            overlay::overlay_triangles(&mut view, &candidates);
            view.save_png(base.with_extension("triangles_overlay.png"))?;
            println!("{}", serde_json::Value::Array(json));
            Ok(())
        }
        Command::Index { action } => match action {
            IndexCmd::Build { dir, mode, out, params } => {
                let (mut p, _) = params.resolve()?;
                p.mode = mode.parse::<AnalysisMode>()?;
                let outcome = build_index(&dir, &out, &p)?;
                for w in &outcome.warnings {
                    eprintln!("warning: {w}");
                }
                let summary = serde_json::json!({
                    "indexed": outcome.index.entries.len(),
                    "reused": outcome.reused,
                    "warnings": outcome.warnings.len(),
                });
                println!("{summary}");
                Ok(())
            }
        },
        Command::Query { action } => match action {
            QueryCmd::Scene { image, index, topk, params } => {
                let (_, mut r) = params.resolve()?;
                r.topk = topk;
                let idx = load_index(&index)?;
                let img = load_canonical(&image)?;
                let ranked = query_scene(&img, &idx, &r)?;
                print_ranking(&ranked, "distance")
            }
            QueryCmd::Sketch { l1, l2, open, index, topk, params } => {
                let (_, mut r) = params.resolve()?;
                r.topk = topk;
                let idx = load_index(&index)?;
                let query = SketchQuery::new(l1, l2, open.parse::<Opening>()?)?;
                let ranked = query_sketch(&query, &idx, &r)?;
                print_ranking(&ranked, "continuity_ratio")
            }
        },
        Command::Eval { action } => match action {
            EvalCmd::Vp { pred, gt, out } => {
                let pred = read_points(&pred)?;
                let gt = read_points(&gt)?;
                let ts: Vec<f64> =
                    [1.0, 2.0, 5.0, 10.0, 15.0, 20.0, 30.0, 50.0, 75.0, 100.0].to_vec();
                let curve = vp_success_curve(&pred, &gt, &ts)?;
                let mut csv = String::from("metric,parameter,value\n");
                for (t, rate) in curve {
                    csv.push_str(&format!("vp_success,{t},{rate}\n"));
                }
                emit_csv(out.as_deref(), &csv)
            }
            EvalCmd::Seg { pred, gt, out } => {
                let pred = RegionLabelMap::load_png(&pred)?;
                let gt = RegionLabelMap::load_png(&gt)?;
                let pair = PartitionPair::new(&gt, &pred)?;
                let mut csv = String::from("metric,parameter,value\n");
                csv.push_str(&format!("rand_index,,{}\n", rand_index(&pair)));
                csv.push_str(&format!("voi,,{}\n", variation_of_information(&pair)));
                csv.push_str(&format!(
                    "covering,pred_covers_gt,{}\n",
                    segmentation_covering(&pair, CoveringDirection::S2CoversS1)
                ));
                csv.push_str(&format!(
                    "covering,gt_covers_pred,{}\n",
                    segmentation_covering(&pair, CoveringDirection::S1CoversS2)
                ));
                emit_csv(out.as_deref(), &csv)
            }
            EvalCmd::Triangles { pred, gt, delta, out } => {
                let pred = read_triangles(&pred)?;
                let gt = read_triangles(&gt)?;
                let (precision, recall) = precision_recall(&gt, &pred, delta)?;
                let mut csv = String::from("metric,parameter,value\n");
                csv.push_str(&format!("precision,delta={delta},{precision}\n"));
                csv.push_str(&format!("recall,delta={delta},{recall}\n"));
                emit_csv(out.as_deref(), &csv)
            }
        },
    }
}

fn print_ranking(ranked: &[(String, f64)], score_name: &str) -> Result<(), Error> {
    let json: Vec<serde_json::Value> = ranked
        .iter()
        .map(|(id, v)| serde_json::json!({ "image_id": id, score_name: v }))
        .collect();
    println!("{}", serde_json::Value::Array(json));
    Ok(())
}

fn emit_csv(out: Option<&Path>, csv: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn parse_point(s: &str) -> Result<Point2, Error> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| Error::InvalidInput(format!("expected X,Y point, got '{s}'")))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| Error::InvalidInput(format!("bad coordinate '{v}'")))
    };
    Ok(Point2::new(parse(x)?, parse(y)?))
}

fn read_points(path: &Path) -> Result<Vec<Point2>, Error> {
    let v: Vec<Point2> = serde_json::from_slice(&std::fs::read(path)?)?;
    Ok(v)
}

fn read_triangles(path: &Path) -> Result<Vec<compose_core::geometry::Triangle2>, Error> {
    let raw: Vec<[Point2; 3]> = serde_json::from_slice(&std::fs::read(path)?)?;
    Ok(raw
        .into_iter()
        .map(|[a, b, c]| compose_core::geometry::Triangle2::new(a, b, c))
        .collect())
}

/// Grayscale rendering of the score grid, upscaled 8x per cell.
fn heatmap(scores: &[f64], cols: u32, rows: u32) -> Result<ImageBuffer, Error> {
    let max = scores.iter().cloned().fold(0.0f64, f64::max);
    let scale = 8u32;
    ImageBuffer::from_fn(cols * scale, rows * scale, |x, y| {
        let (c, r) = (x / scale, y / scale);
        let s = scores[(r * cols + c) as usize];
        let v = if max > 0.0 { (s / max * 255.0).round() as u8 } else { 0 };
        [v, v, v]
    })
}
