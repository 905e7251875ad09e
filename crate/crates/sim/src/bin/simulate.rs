use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Parser};
use otfs_isac_sim::output::{write_allocations_csv, write_manifest, write_mf_csv, write_paths, write_results_csv, write_track_csv};
use otfs_isac_sim::plots::{emit_figure, FIGURES};
use otfs_isac_sim::sweep::Legs;
use otfs_isac_sim::tracking::{run_tracking, TrackingSetup};
use otfs_isac_sim::{load_config, run_sweep, RunOptions, ScenarioConfig, Variant};

#[derive(Debug, Parser)]
#[command(name = "simulate", version, about = "Monte Carlo sweeps of the NOMA-assisted OTFS-ISAC link")]
#[command(group(ArgGroup::new("scale").args(["desk", "paper_scale"])))]
struct Args {
    /// Scenario file; omitted keys take the reference defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Overrides `sweep.trials`.
    #[arg(long)]
    trials: Option<usize>,
    /// 64 x 64 frame with the reference sample interval (the default).
    #[arg(long)]
    desk: bool,
    /// Use the frame from the config file (1024 x 1024 unless overridden).
    #[arg(long)]
    paper_scale: bool,
    /// all, noma_isac, noma_no_sensing or oma_no_sensing.
    #[arg(long, default_value = "all")]
    variant: String,
    /// Produce only this figure (4 to 9) and the sweep leg it needs.
    #[arg(long)]
    figure: Option<u8>,
}

fn main() -> Result<()> {
    let args = Args::parse();
    let mut cfg = match &args.config {
        Some(path) => load_config(path).with_context(|| format!("loading {}", path.display()))?,
        None => ScenarioConfig::default(),
    };
    if !args.paper_scale {
        cfg = cfg.desk_scale();
    }
    if let Some(trials) = args.trials {
        cfg.sweep.trials = trials;
    }
    cfg.sweep.seed = args.seed;
    cfg.validate()?;

    let variants = if args.variant == "all" {
        Variant::ALL.to_vec()
    } else {
        vec![args.variant.parse::<Variant>().map_err(anyhow::Error::msg)?]
    };
    let figures: Vec<u8> = match args.figure {
        Some(f) if FIGURES.contains(&f) => vec![f],
        Some(f) => bail!("unknown figure {f}; expected one of 4 to 9"),
        None => FIGURES.to_vec(),
    };
    let legs = Legs {
        snr: figures.iter().any(|f| matches!(f, 5 | 6)),
        e: figures.iter().any(|f| matches!(f, 7 | 8)),
        speed: figures.contains(&9),
    };

    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let started = Instant::now();

    let setup = TrackingSetup::from_config(&cfg);
    let run = run_tracking(&cfg, &setup, args.seed)?;
    write_track_csv(&run, &args.out.join("track.csv"))?;
    write_mf_csv(&run.first_look.map, &args.out.join("mf_map.csv"))?;
    write_paths(&run.first_look.paths, &args.out.join("paths.txt"))?;

    let mut results = Vec::new();
    if legs.snr || legs.e || legs.speed {
        let opts = RunOptions { seed: args.seed, variants: variants.clone(), legs };
        let out = run_sweep(&cfg, &opts)?;
        write_results_csv(&out.results, &args.out.join("results.csv"))?;
        if !out.allocations.is_empty() {
            write_allocations_csv(&out.allocations, &args.out.join("allocations.csv"))?;
        }
        results = out.results;
    }
    for &f in &figures {
        emit_figure(f, &cfg, &results, Some(&run), &args.out)?;
    }

    let variant_names: Vec<&str> = variants.iter().map(|v| v.name()).collect();
    write_manifest(
        &cfg,
        args.seed,
        &[
            ("variants", variant_names.join(",")),
            ("figures", figures.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(",")),
            ("rows", results.len().to_string()),
        ],
        &args.out.join("manifest.txt"),
    )?;
    eprintln!(
        "{} rows, tracking error {:.2}%, {:.1} s",
        results.len(),
        run.mean_error_pct(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}
