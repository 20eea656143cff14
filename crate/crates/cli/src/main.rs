use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use voronoi_core::isometry::Group;
use voronoi_core::pipeline::{run, EmitFormat, PipelineConfig, Stage};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GroupArg {
    Gl,
    Sl,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EmitArg {
    Json,
    Text,
}

/// Voronoi complex of perfect forms modulo GL_N(Z) or SL_N(Z), its homology
/// and the derived cohomology table.
#[derive(Debug, Parser)]
#[command(name = "voronoi", version)]
struct Args {
    /// Rank N of the lattice (2..=6).
    #[arg(long)]
    rank: usize,
    #[arg(long, value_enum, default_value = "gl")]
    group: GroupArg,
    /// Comma-separated subset of perfect-forms,complex,homology,report.
    #[arg(long, value_delimiter = ',', default_value = "perfect-forms,complex,homology,report")]
    stages: Vec<String>,
    #[arg(long, default_value = "voronoi-out")]
    checkpoint_dir: PathBuf,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Skip stages whose recorded outputs are intact and continue partial ones.
    #[arg(long)]
    resume: bool,
    /// Torsion with prime factors up to this bound is discarded (default N+1).
    #[arg(long)]
    serre_bound: Option<u64>,
    #[arg(long, value_enum, default_value = "text")]
    emit: EmitArg,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let stages = match args.stages.iter().map(|s| s.parse::<Stage>()).collect::<Result<Vec<_>, _>>() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cfg = PipelineConfig {
        rank: args.rank,
        group: match args.group {
            GroupArg::Gl => Group::GL,
            GroupArg::Sl => Group::SL,
        },
        stages,
        checkpoint_dir: args.checkpoint_dir,
        workers: args.workers,
        resume: args.resume,
        serre_bound: args.serre_bound,
        emit: match args.emit {
            EmitArg::Json => EmitFormat::Json,
            EmitArg::Text => EmitFormat::Text,
        },
    };
    match run(&cfg) {
        Ok(summary) => {
            for s in &summary.skipped {
                eprintln!("{s}: up to date");
            }
            for s in &summary.executed {
                eprintln!("{s}: done");
            }
            if let Some(out) = summary.emitted {
                print!("{out}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
