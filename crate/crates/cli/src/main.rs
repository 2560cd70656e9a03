//! `cubecut` command line: segment volumes, generate phantoms, compare
//! masks and run the HTTP service.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 when the command
//! itself fails. Warnings go to standard error without changing the status.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cubecut::eval::{dsc, gen_phantom, write_report, PhantomSpec, ReportRow};
use cubecut::segment::{segment, BoundaryPlacement, Params, TemplateKind};
use cubecut::volume::{load_mask_mhd, load_mhd, save_mask_mhd, save_volume_mhd, Geometry};
use cubecut_server::AppState;

#[derive(Parser)]
#[command(
    name = "cubecut",
    version,
    about = "Seeded graph-cut segmentation with cubic ray templates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment the object around a seed point.
    Segment(SegmentArgs),
    /// Generate a synthetic volume and its ground-truth mask from a JSON spec.
    Phantom {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        out_truth: PathBuf,
    },
    /// Dice similarity of two masks, printed with four decimals.
    Dsc {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Print grid dimensions, spacing, origin and grey range of a volume.
    Info {
        #[arg(long)]
        input: PathBuf,
    },
    /// Serve the HTTP API. Volumes in the data directory are preloaded.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SeedUnits {
    Mm,
    Voxel,
}

#[derive(Clone, Copy, ValueEnum)]
enum Template {
    Cube,
    Sphere,
}

#[derive(Clone, Copy, ValueEnum)]
enum Placement {
    Node,
    Midpoint,
}

#[derive(clap::Args)]
struct SegmentArgs {
    #[arg(long)]
    input: PathBuf,
    /// Seed as X,Y,Z.
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
    seed: [f64; 3],
    #[arg(long, value_enum, default_value = "mm")]
    seed_units: SeedUnits,
    #[arg(long, value_enum, default_value = "cube")]
    template: Template,
    /// Cube edge length, or sphere diameter, in mm.
    #[arg(long, default_value_t = TemplateKind::DEFAULT_EDGE_MM)]
    edge: f64,
    #[arg(long, default_value_t = TemplateKind::DEFAULT_RAYS_PER_EDGE)]
    rays_per_edge: usize,
    /// Sphere only: number of latitude rings.
    #[arg(long, default_value_t = TemplateKind::DEFAULT_RINGS)]
    rings: usize,
    /// Sphere only: rays per ring.
    #[arg(long, default_value_t = TemplateKind::DEFAULT_RAYS_PER_RING)]
    rays_per_ring: usize,
    #[arg(long, default_value_t = Params::DEFAULT_K)]
    nodes_per_ray: usize,
    #[arg(long, default_value_t = Params::DEFAULT_DELTA)]
    delta: usize,
    #[arg(long, default_value_t = Params::DEFAULT_STATS_HALFWIDTH)]
    stats_halfwidth: usize,
    #[arg(long, value_enum, default_value = "midpoint")]
    placement: Placement,
    #[arg(long)]
    out_mask: PathBuf,
    #[arg(long)]
    out_mesh: Option<PathBuf>,
    /// CSV row with mask volumes and, given --truth, the DSC.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Reference mask for the report.
    #[arg(long, requires = "report")]
    truth: Option<PathBuf>,
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [x, y, z] = parts[..] else {
        return Err(format!("expected X,Y,Z, got {s:?}"));
    };
    let num = |p: &str| {
        p.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("{p:?} is not a finite number"))
    };
    Ok([num(x)?, num(y)?, num(z)?])
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cubecut: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Segment(args) => run_segment(&args),
        Command::Phantom {
            spec,
            out,
            out_truth,
        } => {
            let text =
                std::fs::read_to_string(&spec).map_err(|e| format!("{}: {e}", spec.display()))?;
            let spec: PhantomSpec =
                serde_json::from_str(&text).map_err(|e| format!("{}: {e}", spec.display()))?;
            let (volume, truth) = gen_phantom(&spec)?;
            save_volume_mhd(&volume, &out)?;
            save_mask_mhd(&truth, &out_truth)?;
            Ok(())
        }
        Command::Dsc { a, b } => {
            let d = dsc(&load_mask_mhd(&a)?, &load_mask_mhd(&b)?)?;
            println!("{d:.4}");
            Ok(())
        }
        Command::Info { input } => {
            let v = load_mhd(&input)?;
            let (min, max) = v.min_max();
            let (lo, hi) = v.geometry().bounds();
            println!("dims     {:?}", v.dims());
            println!("spacing  {:?}", v.spacing());
            println!("origin   {:?}", v.origin());
            println!("extent   {lo:?} .. {hi:?}");
            println!("grey     {min} .. {max}");
            Ok(())
        }
        Command::Serve { port, data_dir } => {
            let state = match &data_dir {
                Some(dir) => AppState::with_data_dir(dir)?,
                None => AppState::in_memory(),
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(cubecut_server::serve(port, state))?;
            Ok(())
        }
    }
}

fn seed_mm(seed: [f64; 3], units: SeedUnits, g: &Geometry) -> [f64; 3] {
    match units {
        SeedUnits::Mm => seed,
        SeedUnits::Voxel => {
            let (o, s) = (g.origin, g.spacing);
            [0, 1, 2].map(|a| o[a] + seed[a] * s[a])
        }
    }
}

fn run_segment(args: &SegmentArgs) -> CliResult {
    let volume = load_mhd(&args.input)?;
    let mut params = Params::new(seed_mm(args.seed, args.seed_units, volume.geometry()));
    params.template = match args.template {
        Template::Cube => TemplateKind::Cube {
            edge_mm: args.edge,
            m: args.rays_per_edge,
        },
        Template::Sphere => TemplateKind::Sphere {
            diameter_mm: args.edge,
            n_theta: args.rings,
            n_phi: args.rays_per_ring,
        },
    };
    params.k = args.nodes_per_ray;
    params.delta = args.delta;
    params.stats_halfwidth = args.stats_halfwidth;
    params.placement = match args.placement {
        Placement::Node => BoundaryPlacement::Node,
        Placement::Midpoint => BoundaryPlacement::Midpoint,
    };

    let seg = segment(&volume, &params)?;
    for w in &seg.warnings {
        eprintln!("cubecut: warning: {w}");
    }
    save_mask_mhd(&seg.mask, &args.out_mask)?;
    if let Some(path) = &args.out_mesh {
        let mut w = BufWriter::new(create(path)?);
        seg.mesh.write_stl(&mut w, "cubecut")?;
        w.flush()?;
    }
    if let Some(path) = &args.report {
        let truth = args.truth.as_deref().map(load_mask_mhd).transpose()?;
        let row = ReportRow::new(&case_id(&args.input), &seg.mask, truth.as_ref())?;
        let mut w = BufWriter::new(create(path)?);
        write_report(&mut w, &[row])?;
        w.flush()?;
    }
    println!(
        "cut {:.6}  voxels {}  rays {}",
        seg.cut_value,
        seg.mask.count(),
        seg.boundaries.len()
    );
    Ok(())
}

fn create(path: &Path) -> Result<File, String> {
    File::create(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn case_id(input: &Path) -> String {
    input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}
