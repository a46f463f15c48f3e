//! Command-line front end over the distributed sparse linear algebra
//! library: generate gallery problems, apply matrices read from coordinate
//! files and solve them with conjugate gradients, at either global index
//! width and on a chosen number of simulated ranks.
//!
//! All regular output is `key=value`, one pair per line, printed by rank 0.
//! Exit codes: 0 success, 1 runtime or solve failure, 2 usage errors.

use clap::{Args, Parser, Subcommand};
use dualgid::{
    cg_solve, count_entries, generate_crs_problem, read_coordinate_file, run_on_ranks,
    write_coordinate_file, Comm, GalleryKind, IndexWidth, MultiVector, Preconditioner, Result,
    RowMatrix,
};
use std::path::PathBuf;
use std::process::ExitCode;

fn parse_width(s: &str) -> std::result::Result<IndexWidth, String> {
    match s {
        "32" => Ok(IndexWidth::I32),
        "64" => Ok(IndexWidth::I64),
        other => Err(format!("width must be 32 or 64, got {other}")),
    }
}

fn parse_kind(s: &str) -> std::result::Result<GalleryKind, String> {
    match s {
        "laplace2d" => Ok(GalleryKind::Laplace2d),
        other => Err(format!("unknown problem kind {other}")),
    }
}

#[derive(Args, Debug, Clone)]
struct WidthArgs {
    /// Global index width of the constructed maps.
    #[arg(long, value_parser = parse_width, default_value = "32")]
    width: IndexWidth,
    /// Offset added to every global index at construction.
    #[arg(long, default_value_t = 0)]
    offset: i64,
    /// Number of simulated ranks to run on.
    #[arg(long, default_value_t = 1)]
    ranks: i32,
}

#[derive(Parser, Debug)]
#[command(name = "dualgid", version, about = "Distributed sparse linear algebra driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic problem and optionally write it to a file.
    Gallery {
        /// Problem kind; currently `laplace2d`.
        #[arg(long, value_parser = parse_kind)]
        kind: GalleryKind,
        #[arg(long)]
        nx: i32,
        #[arg(long)]
        ny: i32,
        #[command(flatten)]
        width_args: WidthArgs,
        /// Write the matrix as a Matrix Market coordinate file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Read a matrix and print the norm of A times ones.
    Spmv {
        #[arg(long)]
        matrix: PathBuf,
        #[command(flatten)]
        width_args: WidthArgs,
    },
    /// Read a matrix and solve A x = b with CG, where b = A * ones.
    Solve {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 500)]
        max_iters: i32,
        #[command(flatten)]
        width_args: WidthArgs,
    },
    /// Read a matrix and print its global counts and index range.
    Info {
        #[arg(long)]
        matrix: PathBuf,
        #[command(flatten)]
        width_args: WidthArgs,
    },
}

/// Per-rank body outcome: lines for rank 0 to print plus this run's
/// process-level success flag.
type RankOutcome = Result<(Vec<String>, bool)>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (ranks, body): (i32, Box<dyn Fn(Comm) -> RankOutcome + Send + Sync>) = match cli.command {
        Command::Gallery {
            kind,
            nx,
            ny,
            width_args,
            out,
        } => (
            width_args.ranks,
            Box::new(move |comm| gallery_body(kind, nx, ny, &width_args, out.as_deref(), comm)),
        ),
        Command::Spmv { matrix, width_args } => (
            width_args.ranks,
            Box::new(move |comm| spmv_body(&matrix, &width_args, comm)),
        ),
        Command::Solve {
            matrix,
            tol,
            max_iters,
            width_args,
        } => (
            width_args.ranks,
            Box::new(move |comm| solve_body(&matrix, tol, max_iters, &width_args, comm)),
        ),
        Command::Info { matrix, width_args } => (
            width_args.ranks,
            Box::new(move |comm| info_body(&matrix, &width_args, comm)),
        ),
    };

    if ranks < 1 {
        eprintln!("error: --ranks must be at least 1");
        return ExitCode::from(2);
    }
    let results = run_on_ranks(ranks, &body);
    let mut ok = true;
    for (rank, result) in results.into_iter().enumerate() {
        match result {
            Ok((lines, success)) => {
                if rank == 0 {
                    for line in lines {
                        println!("{line}");
                    }
                }
                ok &= success;
            }
            Err(e) => {
                if rank == 0 {
                    eprintln!("error: {e}");
                }
                ok = false;
            }
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn gallery_body(
    kind: GalleryKind,
    nx: i32,
    ny: i32,
    width_args: &WidthArgs,
    out: Option<&std::path::Path>,
    comm: Comm,
) -> RankOutcome {
    let problem = generate_crs_problem(
        kind,
        nx,
        ny,
        width_args.width,
        width_args.offset,
        &comm,
    )?;
    if let Some(path) = out {
        write_coordinate_file(&problem.matrix, path)?;
    }
    Ok((
        vec![
            format!("rows={}", problem.matrix.num_global_rows64()?),
            format!("cols={}", problem.matrix.num_global_cols64()?),
            format!("nnz={}", problem.matrix.num_global_nonzeros64()?),
        ],
        true,
    ))
}

fn spmv_body(path: &std::path::Path, width_args: &WidthArgs, comm: Comm) -> RankOutcome {
    let (map, matrix) = read_coordinate_file(path, &comm, width_args.width, width_args.offset)?;
    let mut x = MultiVector::new(&map, 1)?;
    x.put_scalar(1.0);
    let mut y = MultiVector::new(&map, 1)?;
    matrix.multiply(&x, &mut y)?;
    let norm = y.norm2()?[0];
    Ok((
        vec![
            format!("rows={}", matrix.num_global_rows64()?),
            format!("nnz={}", matrix.num_global_nonzeros64()?),
            format!("norm2={norm:.17e}"),
        ],
        true,
    ))
}

fn solve_body(
    path: &std::path::Path,
    tol: f64,
    max_iters: i32,
    width_args: &WidthArgs,
    comm: Comm,
) -> RankOutcome {
    let (map, matrix) = read_coordinate_file(path, &comm, width_args.width, width_args.offset)?;
    let mut ones = MultiVector::new(&map, 1)?;
    ones.put_scalar(1.0);
    let mut b = MultiVector::new(&map, 1)?;
    matrix.multiply(&ones, &mut b)?;
    let mut x = MultiVector::new(&map, 1)?;
    let report = cg_solve(&matrix, &b, &mut x, tol, max_iters, Preconditioner::None)?;
    Ok((
        vec![
            format!("converged={}", report.converged),
            format!("iters={}", report.iterations),
            format!("residual={:.17e}", report.final_relative_residual),
        ],
        report.converged,
    ))
}

fn info_body(path: &std::path::Path, width_args: &WidthArgs, comm: Comm) -> RankOutcome {
    let counts = count_entries(path, &comm)?;
    let (map, matrix) = read_coordinate_file(path, &comm, width_args.width, width_args.offset)?;
    let width = if map.global_indices_i64() { 64 } else { 32 };
    Ok((
        vec![
            format!("rows={}", matrix.num_global_rows64()?),
            format!("cols={}", matrix.num_global_cols64()?),
            format!("nnz={}", matrix.num_global_nonzeros64()?),
            format!("diagonals={}", matrix.num_global_diagonals64()?),
            format!("stated_nnz={}", counts.nnz),
            format!("width={width}"),
            format!("index_base={}", map.index_base64()),
            format!("min_gid={}", map.min_all_gid64()),
            format!("max_gid={}", map.max_all_gid64()),
        ],
        true,
    ))
}
