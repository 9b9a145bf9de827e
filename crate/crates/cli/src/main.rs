mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use chaingrav::chains::{Attribution, DyadMode, SectorFilter};
use chaingrav::frictions::{Control, DEFAULT_WORKDAY};
use chaingrav::ppml::Normalization;
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "chaingrav", version, about = "Ownership chains and structural gravity estimation")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GraphArgs {
    /// Firm table (`firm_id,country,sector`).
    #[arg(long)]
    pub firms: PathBuf,
    /// Shareholding table (`shareholder_id,target_id,share_pct`).
    #[arg(long)]
    pub edges: PathBuf,
    /// Allowed excess of incoming shares above 100 per target.
    #[arg(long, default_value_t = 0.5)]
    pub share_tolerance: f64,
    /// Keep only chains passing `role=groups` clauses separated by `;`,
    /// e.g. `parent=manufacturing;final=31-33,52`.
    #[arg(long, value_parser = parse_with::<SectorFilter>)]
    pub sector_filter: Option<SectorFilter>,
}

#[derive(Args, Debug, Clone)]
pub struct FrictionArgs {
    /// Country table (`iso2,utc_offset,profit_tax,labour_cost`).
    #[arg(long)]
    pub countries: PathBuf,
    /// Pair table (`iso_o,iso_d,dist_km,contig,comlang,colony,legal,rta,cli_index`).
    #[arg(long)]
    pub dyads: PathBuf,
    /// Comma-separated controls; `gravity` expands to the standard six.
    #[arg(long, default_value = "log_dist", value_parser = parse_controls)]
    pub controls: Controls,
    /// Length of the office day, in hours.
    #[arg(long, default_value_t = DEFAULT_WORKDAY)]
    pub workday: f64,
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, env = "CHAINGRAV_OUT", default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct SimArgs {
    #[arg(long)]
    pub seed: u64,
    /// Flat TOML world configuration; omitted keys take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check an equity graph and write `validation.csv`.
    Validate {
        #[command(flatten)]
        graph: GraphArgs,
        /// Country table used to flag unknown firm countries.
        #[arg(long)]
        countries: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Identify ultimate parents and write `networks.csv`.
    Identify {
        #[command(flatten)]
        graph: GraphArgs,
        /// Also write `network_<parent>.dot` for this parent.
        #[arg(long)]
        dot: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Write `chains.csv`, `table2.csv` and `table1.csv`.
    Chains {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Write `dyadic_counts.csv` (every mode) and `triadic_counts.csv`.
    Counts {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value = "last", value_parser = parse_with::<Attribution>)]
        attribution: Attribution,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Write `design_triad.csv` and `design_dyad.csv`.
    Frictions {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        frictions: FrictionArgs,
        #[arg(long, default_value = "last", value_parser = parse_with::<Attribution>)]
        attribution: Attribution,
        /// Count mode of the bilateral design.
        #[arg(long, default_value = "final_all", value_parser = parse_with::<DyadMode>)]
        mode: DyadMode,
        /// Add parent-to-final controls to the triad design.
        #[arg(long)]
        ij_controls: bool,
        #[arg(long)]
        interaction: bool,
        /// Keep home pairs in the bilateral design.
        #[arg(long)]
        home: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Bilateral gravity per count mode and triangular gravity with origin,
    /// middleman and destination effects.
    EstimateMotivating {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        frictions: FrictionArgs,
        #[arg(long, default_value = "last", value_parser = parse_with::<Attribution>)]
        attribution: Attribution,
        /// Count modes for the bilateral fits (repeatable; default: all).
        #[arg(long, value_parser = parse_with::<DyadMode>)]
        mode: Vec<DyadMode>,
        #[arg(long)]
        interaction: bool,
        #[arg(long)]
        home: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Triangular count model with dyad effects; writes `triangular.json`
    /// and the recovered costs `cij.csv`.
    EstimateTriangular {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        frictions: FrictionArgs,
        #[arg(long, default_value = "last", value_parser = parse_with::<Attribution>)]
        attribution: Attribution,
        #[arg(long, default_value = "shift", value_parser = parse_with::<Normalization>)]
        normalization: Normalization,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Final-investment gravity on the square root of recovered costs.
    EstimateBilateral {
        #[command(flatten)]
        graph: GraphArgs,
        /// Recovered costs (`cij.csv`).
        #[arg(long)]
        cij: PathBuf,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Predicted triangular counts over a lattice of (wh_ij, wh_kj).
    Grid {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        frictions: FrictionArgs,
        #[arg(long, default_value = "last", value_parser = parse_with::<Attribution>)]
        attribution: Attribution,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 10.0)]
        to: f64,
        /// Lattice points per axis.
        #[arg(long, default_value_t = 11)]
        points: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Simulate a world; writes `sim_chains.csv`, `sim_truth.json` and
    /// firm, edge, country and pair tables.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Simulate, estimate and compare; writes `recovery_report.json`.
    Recover {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value = "last", value_parser = parse_with::<Attribution>)]
        attribution: Attribution,
        #[arg(long, default_value = "shift", value_parser = parse_with::<Normalization>)]
        normalization: Normalization,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn parse_with<T: std::str::FromStr<Err = chaingrav::Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: chaingrav::Error| e.to_string())
}

#[derive(Debug, Clone)]
pub struct Controls(pub Vec<Control>);

fn parse_controls(s: &str) -> Result<Controls, String> {
    Control::parse_list(s).map(Controls).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
