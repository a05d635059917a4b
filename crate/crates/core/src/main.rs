use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use geowarp::chemistry::{read_assays, LikelihoodTable};
use geowarp::config::RunConfig;
use geowarp::geoprior::GeozoneModel;
use geowarp::gp::{self, GpError};
use geowarp::mesh::{read_mesh, write_mesh_string, ConflictBounds, HeightField, TriMesh};
use geowarp::synth;
use geowarp::validate::{self, ValidateError};
use geowarp::warp::{self, WarpError};
use geowarp::zone::ZoneId;

#[derive(Parser, Debug)]
#[command(name = "geowarp", version, about = "Bayesian surface warping, GP grade inference and r2 reconciliation")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the class-given-geozone likelihood table from labelled assays.
    BuildTable {
        #[arg(long)]
        train: PathBuf,
    },
    /// Warp a boundary mesh towards the assay evidence.
    Warp(WarpArgs),
    /// Train a GP model for one element in one geozone.
    GpTrain(GpTrainArgs),
    /// Predict with a trained GP model at query points or intervals.
    GpPredict {
        #[arg(long)]
        model: PathBuf,
        /// CSV with columns x,y,z and optional h.
        #[arg(long)]
        queries: PathBuf,
    },
    /// Reconcile grade blocks against GP predictions for each pipeline.
    Validate(ValidateArgs),
    /// Generate a synthetic scene.
    Synth,
}

#[derive(Args, Debug)]
struct WarpArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    assays: PathBuf,
    /// Comma-separated surface meshes (top to bottom) or a label-grid file.
    #[arg(long)]
    geoprior: String,
    #[arg(long)]
    table: PathBuf,
    /// Surface that the warped mesh must stay below.
    #[arg(long)]
    upper: Option<PathBuf>,
    /// Surface that the warped mesh must stay above.
    #[arg(long)]
    lower: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GpTrainArgs {
    #[arg(long)]
    assays: PathBuf,
    #[arg(long)]
    element: String,
    /// Zone to train on; omitted means every sample.
    #[arg(long)]
    geozone: Option<ZoneId>,
    /// Assign zones from this model instead of the assay geozone column.
    #[arg(long)]
    geoprior: Option<String>,
    /// Output file name inside the output directory.
    #[arg(long, default_value = "model.gpm")]
    name: String,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    blocks: PathBuf,
    #[arg(long)]
    assays: PathBuf,
    /// `name=geoprior` pairs, one per pipeline.
    #[arg(long = "pipeline", required = true)]
    pipelines: Vec<String>,
    /// `name=mesh` surfaces to stratify samples against.
    #[arg(long = "surface")]
    surfaces: Vec<String>,
}

enum Failure {
    Input(String),
    Numerical(String),
    Unsupported(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Input(_) => 2,
            Self::Numerical(_) => 3,
            Self::Unsupported(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Input(m) | Self::Numerical(m) | Self::Unsupported(m) => m,
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn at<V, E: std::fmt::Display>(what: impl std::fmt::Display, r: Result<V, E>) -> Result<V, Failure> {
    r.map_err(|e| input(format!("{what}: {e}")))
}

fn from_gp(e: GpError) -> Failure {
    match e {
        GpError::NotPositiveDefinite => Failure::Numerical(e.to_string()),
        e => input(e),
    }
}

fn from_warp(e: WarpError) -> Failure {
    match e {
        WarpError::Unsupported { .. } => Failure::Unsupported(e.to_string()),
        e => input(e),
    }
}

fn from_validate(e: ValidateError) -> Failure {
    match e {
        ValidateError::Gp(g) => from_gp(g),
        e => input(e),
    }
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    fs::write(dir.join(name), text).map_err(|e| input(format!("{}: {e}", dir.join(name).display())))
}

fn named(pairs: &[String]) -> Result<Vec<(String, String)>, Failure> {
    pairs
        .iter()
        .map(|p| {
            p.split_once('=')
                .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                .ok_or_else(|| input(format!("expected name=path, got '{p}'")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::parse(&fs::read_to_string(p).map_err(|e| input(format!("{}: {e}", p.display())))?).map_err(input)?,
        None => RunConfig::default(),
    };
    cfg.seed = cli.seed;
    eprint!("{}", cfg.to_text());
    let out = cli.out_dir.as_path();
    fs::create_dir_all(out).map_err(input)?;
    let scheme = cfg.scheme().map_err(input)?;

    match cli.command {
        Command::BuildTable { train } => {
            let samples = at(train.display(), read_assays::<f64>(&train))?;
            let table = LikelihoodTable::build(&scheme, &samples, None, cfg.smoothing_alpha().map_err(input)?).map_err(input)?;
            write(out, "table.csv", &table.to_csv_string())
        }
        Command::Warp(a) => {
            let mesh: TriMesh<f64> = at(a.mesh.display(), read_mesh(&a.mesh))?;
            let samples = at(a.assays.display(), read_assays::<f64>(&a.assays))?;
            let prior = at(&a.geoprior, GeozoneModel::load(&a.geoprior))?;
            let table = at(a.table.display(), LikelihoodTable::read_csv(&a.table))?;
            let field = |p: &Option<PathBuf>| -> Result<Option<HeightField<f64>>, Failure> {
                p.as_ref()
                    .map(|p| at(p.display(), read_mesh(p).and_then(|m| HeightField::new(&m))))
                    .transpose()
            };
            let (upper, lower) = (field(&a.upper)?, field(&a.lower)?);
            let bounds = ConflictBounds {
                upper: upper.as_ref(),
                lower: lower.as_ref(),
            };
            let result = warp::warp_surface(&mesh, &samples, &scheme, &table, &prior, &cfg.warp().map_err(input)?, bounds)
                .map_err(from_warp)?;
            write(out, "warped.obj", &write_mesh_string(&result.mesh))?;
            write(out, "displacements.csv", &warp::displacement_csv(&mesh, &result))?;
            write(out, "diagnostics.txt", &result.diagnostics.to_text())
        }
        Command::GpTrain(a) => {
            let samples = at(a.assays.display(), read_assays::<f64>(&a.assays))?;
            let prior = a.geoprior.as_deref().map(|g| at(g, GeozoneModel::<f64>::load(g))).transpose()?;
            let support = cfg.support().map_err(input)?;
            let chosen: Vec<_> = samples
                .iter()
                .filter(|s| match a.geozone {
                    None => true,
                    Some(g) => match &prior {
                        Some(p) => p.zone_at(s.midpoint()) == g,
                        None => s.geozone == Some(g),
                    },
                })
                .collect();
            let mut inputs = Vec::with_capacity(chosen.len());
            let mut targets = Vec::with_capacity(chosen.len());
            for s in &chosen {
                let v = s.grade(&a.element).ok_or_else(|| input(format!("hole {} lacks {}", s.hole_id, a.element)))?;
                inputs.push(gp::sample_input(s, support));
                targets.push(v);
            }
            let model = gp::train(
                &a.element,
                a.geozone.unwrap_or(ZoneId::EXTERIOR),
                support,
                &inputs,
                &targets,
                None,
                &cfg.train().map_err(input)?,
            )
            .map_err(from_gp)?;
            write(out, &a.name, &gp::model_to_string(&model))
        }
        Command::GpPredict { model, queries } => {
            let model = at(model.display(), gp::read_model::<f64>(&model))?;
            let q = at(queries.display(), gp::read_queries::<f64>(&queries))?;
            let with_h = q.iter().any(|i| !i.is_point());
            let preds = model.predict(&q);
            write(out, "predictions.csv", &gp::predictions_csv(&q, &preds, with_h))
        }
        Command::Validate(a) => {
            let rc = cfg.reconcile().map_err(input)?;
            let samples = at(a.assays.display(), read_assays::<f64>(&a.assays))?;
            let mut blocks = at(a.blocks.display(), validate::read_blocks::<f64>(&a.blocks, rc.bench_height))?;
            validate::assign_members(&mut blocks, &samples, &scheme).map_err(from_validate)?;
            let models: Vec<(String, GeozoneModel<f64>)> = named(&a.pipelines)?
                .into_iter()
                .map(|(n, p)| at(&p, GeozoneModel::load(&p)).map(|m| (n, m)))
                .collect::<Result<_, _>>()?;
            let pipelines: Vec<(String, &GeozoneModel<f64>)> = models.iter().map(|(n, m)| (n.clone(), m)).collect();
            let report = validate::reconcile(&samples, &blocks, &pipelines, &rc).map_err(from_validate)?;
            write(out, "report.csv", &report.to_csv())?;
            write(out, "cdf.csv", &report.cdf_csv())?;
            for (name, path) in named(&a.surfaces)? {
                let field = at(&path, read_mesh::<f64>(&path).and_then(|m| HeightField::new(&m)))?;
                let st = validate::stratify(&samples, &scheme, &field).map_err(from_validate)?;
                write(out, &format!("stratification_{name}.csv"), &st.to_csv())?;
            }
            Ok(())
        }
        Command::Synth => {
            let spec = cfg.synth().map_err(input)?;
            let scene = synth::generate::<f64>(&spec, &scheme).map_err(input)?;
            synth::write_scene(&scene, out).map_err(input)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
