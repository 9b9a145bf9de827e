use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use chaingrav::chains::{
    count_dyadic, count_triadic, enumerate_all, filter_networks, summary_tables, write_chains, write_dyadic,
    write_table1, write_table2, write_triadic, Attribution, DyadMode, TriadTable,
};
use chaingrav::frame::Frame;
use chaingrav::frictions::{
    build_dyad_design, build_dyad_table, build_triad_design, read_countries, read_dyads, Control, DyadDesignOptions,
    FrictionTable, TriadDesignOptions,
};
use chaingrav::numfmt::{fmt_sig, round_sig};
use chaingrav::ownership::{
    export_network_dot, read_graph, ultimate_parents, validate_graph, write_networks, ControlNetwork, EquityGraph,
    IdentifyOptions,
};
use chaingrav::ppml::{
    estimates_json, fit_bilateral, fit_ppml, predict, read_cij, recover_cij, write_cij, LevelPolicy, PpmlFit,
    RegressionSpec,
};
use chaingrav::recovery::{recover, triangular_spec, RecoveryOptions};
use chaingrav::structural::{simulate_world, WorldConfig};
use chaingrav::tabular::{open_csv, CsvOut};
use chaingrav::{Error, Iso2, Result};
use serde_json::{json, Value};

use crate::{Command, FrictionArgs, GraphArgs, OutArgs, SimArgs};

/// `println!` that tolerates a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn out_dir(out: &OutArgs) -> Result<&Path> {
    fs::create_dir_all(&out.out).map_err(io_err(&out.out))?;
    Ok(&out.out)
}

fn csv(dir: &Path, name: &str) -> Result<CsvOut<fs::File>> {
    CsvOut::create(&dir.join(name))
}

fn create(dir: &Path, name: &str) -> Result<fs::File> {
    let path = dir.join(name);
    fs::File::create(&path).map_err(io_err(&path))
}

fn write_json(dir: &Path, name: &str, value: &Value) -> Result<()> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    fs::write(&path, text).map_err(io_err(&path))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn written(dir: &Path, names: &[&str]) {
    for n in names {
        eprintln!("wrote {}", dir.join(n).display());
    }
}

struct Corpus {
    graph: EquityGraph,
    networks: Vec<ControlNetwork>,
}

impl Corpus {
    fn load(args: &GraphArgs) -> Result<Self> {
        let graph = read_graph(&args.firms, &args.edges)?;
        let mut networks = ultimate_parents(
            &graph,
            &IdentifyOptions {
                tolerance: args.share_tolerance,
            },
        )?;
        if let Some(filter) = &args.sector_filter {
            let outcome = filter_networks(&networks, &graph, filter)?;
            if !outcome.missing_sector.is_empty() {
                eprintln!(
                    "warning: {} firm(s) without a sector failed the sector filter",
                    outcome.missing_sector.len()
                );
            }
            networks = outcome.networks;
        }
        Ok(Corpus { graph, networks })
    }

    /// Every country of the firm table.
    fn countries(&self) -> BTreeSet<Iso2> {
        self.graph.firms().iter().map(|f| f.country).collect()
    }

    fn triads(&self, attribution: Attribution) -> Result<TriadTable> {
        count_triadic(&self.networks, &self.graph, attribution)
    }
}

fn friction_table(args: &FrictionArgs) -> Result<FrictionTable> {
    let countries = read_countries(open_csv(&args.countries)?, &args.countries.display().to_string())?;
    let dyads = read_dyads(open_csv(&args.dyads)?, &args.dyads.display().to_string())?;
    build_dyad_table(&countries, &dyads, args.workday)
}

fn columns(controls: &[Control], suffixes: &[&str]) -> Vec<String> {
    suffixes
        .iter()
        .flat_map(|s| controls.iter().map(move |c| format!("{}_{s}", c.name())))
        .collect()
}

fn report_excluded<T: std::fmt::Debug>(what: &str, excluded: &[T]) {
    if !excluded.is_empty() {
        eprintln!("warning: {} {what} row(s) excluded for missing controls", excluded.len());
    }
}

fn fit(frame: &Frame, outcome: &str, regressors: &[String], factors: &[&str]) -> Result<PpmlFit> {
    let spec = RegressionSpec {
        regressors: regressors.to_vec(),
        ..RegressionSpec::new(outcome)
    }
    .factors(factors)
    .cluster("ij");
    fit_ppml(frame, &spec)
}

/// Triangular gravity with origin, middleman and destination effects and
/// parent-to-final controls.
fn motivating_triangular(
    corpus: &Corpus,
    frictions: &FrictionArgs,
    table: &FrictionTable,
    attribution: Attribution,
    interaction: bool,
) -> Result<(Frame, PpmlFit)> {
    let controls = &frictions.controls.0;
    let design = build_triad_design(
        &corpus.triads(attribution)?,
        table,
        &corpus.countries(),
        &TriadDesignOptions {
            controls: controls.clone(),
            include_ij_controls: true,
            include_interaction: interaction,
        },
    )?;
    report_excluded("triad", &design.excluded);
    let mut regs: Vec<String> = ["wh_ik", "wh_kj", "wh_ij"].iter().map(|s| s.to_string()).collect();
    regs.extend(columns(controls, &["ik", "kj", "ij"]));
    if interaction {
        regs.push("wh_ij_x_wh_kj".into());
    }
    let f = fit(&design.frame, "m_ikj", &regs, &["i", "k", "j"])?;
    Ok((design.frame, f))
}

fn print_coefficients(label: &str, f: &PpmlFit) {
    for (name, (b, se)) in f.names.iter().zip(f.beta.iter().zip(&f.se)) {
        say!("{label}\t{name}\t{}\t{}", fmt_sig(*b), fmt_sig(*se));
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Validate { graph, countries, out } => {
            let dir = out_dir(&out)?;
            let g = read_graph(&graph.firms, &graph.edges)?;
            let known = match &countries {
                Some(p) => Some(
                    read_countries(open_csv(p)?, &p.display().to_string())?
                        .into_iter()
                        .map(|c| c.iso2)
                        .collect::<BTreeSet<_>>(),
                ),
                None => None,
            };
            let report = validate_graph(&g, graph.share_tolerance, known.as_ref());
            let mut w = csv(dir, "validation.csv")?;
            w.row(["kind", "firm_id", "detail"])?;
            for v in &report.violations {
                w.row([v.kind.as_str(), v.firm.as_str(), v.detail.as_str()])?;
            }
            w.finish()?;
            written(dir, &["validation.csv"]);
            for (kind, n) in report.counts() {
                say!("{}\t{n}", kind.as_str());
            }
            if report.is_empty() {
                say!("ok\t{} firms\t{} edges", g.firms().len(), g.edges().len());
                Ok(())
            } else {
                Err(Error::Data(format!("{} violation(s); see validation.csv", report.violations.len())))
            }
        }
        Command::Identify { graph, dot, out } => {
            let dir = out_dir(&out)?;
            let c = Corpus::load(&graph)?;
            write_networks(create(dir, "networks.csv")?, &c.networks)?;
            written(dir, &["networks.csv"]);
            if let Some(parent) = dot {
                let net = c
                    .networks
                    .iter()
                    .find(|n| n.parent == parent)
                    .ok_or_else(|| Error::UnknownFirm(format!("{parent} (not an ultimate parent)")))?;
                let name = format!("network_{parent}.dot");
                let path = dir.join(&name);
                fs::write(&path, export_network_dot(net, &c.graph)).map_err(io_err(&path))?;
                written(dir, &[&name]);
            }
            say!("{} networks", c.networks.len());
            Ok(())
        }
        Command::Chains { graph, out } => {
            let dir = out_dir(&out)?;
            let c = Corpus::load(&graph)?;
            let chains = enumerate_all(&c.networks, &c.graph)?;
            write_chains(create(dir, "chains.csv")?, &chains)?;
            let summary = summary_tables(&c.networks, &c.graph)?;
            write_table2(create(dir, "table2.csv")?, &summary)?;
            write_table1(create(dir, "table1.csv")?, &summary)?;
            written(dir, &["chains.csv", "table2.csv", "table1.csv"]);
            say!("{} networks, {} chains", summary.n_networks, summary.n_chains);
            Ok(())
        }
        Command::Counts { graph, attribution, out } => {
            let dir = out_dir(&out)?;
            let c = Corpus::load(&graph)?;
            let tables = DyadMode::ALL
                .iter()
                .map(|&m| Ok((m, count_dyadic(&c.networks, &c.graph, m)?)))
                .collect::<Result<Vec<_>>>()?;
            write_dyadic(create(dir, "dyadic_counts.csv")?, &tables)?;
            write_triadic(create(dir, "triadic_counts.csv")?, &c.triads(attribution)?)?;
            written(dir, &["dyadic_counts.csv", "triadic_counts.csv"]);
            Ok(())
        }
        Command::Frictions {
            graph,
            frictions,
            attribution,
            mode,
            ij_controls,
            interaction,
            home,
            out,
        } => {
            let dir = out_dir(&out)?;
            let c = Corpus::load(&graph)?;
            let table = friction_table(&frictions)?;
            let triad = build_triad_design(
                &c.triads(attribution)?,
                &table,
                &c.countries(),
                &TriadDesignOptions {
                    controls: frictions.controls.0.clone(),
                    include_ij_controls: ij_controls,
                    include_interaction: interaction,
                },
            )?;
            report_excluded("triad", &triad.excluded);
            triad.frame.write_csv(create(dir, "design_triad.csv")?, "design_triad.csv")?;
            let (dyad, excluded) = build_dyad_design(
                &count_dyadic(&c.networks, &c.graph, mode)?,
                &table,
                &c.countries(),
                &DyadDesignOptions {
                    controls: frictions.controls.0.clone(),
                    include_home: home,
                },
            )?;
            report_excluded("dyad", &excluded);
            dyad.write_csv(create(dir, "design_dyad.csv")?, "design_dyad.csv")?;
            written(dir, &["design_triad.csv", "design_dyad.csv"]);
            Ok(())
        }
        Command::EstimateMotivating {
            graph,
            frictions,
            attribution,
            mode,
            interaction,
            home,
            out,
        } => {
            let dir = out_dir(&out)?;
            let c = Corpus::load(&graph)?;
            let table = friction_table(&frictions)?;
            let modes = if mode.is_empty() { DyadMode::ALL.to_vec() } else { mode };
            let mut bilateral = serde_json::Map::new();
            let mut regs = vec!["wh_ij".to_string()];
            regs.extend(columns(&frictions.controls.0, &["ij"]));
            for m in modes {
                let (frame, excluded) = build_dyad_design(
                    &count_dyadic(&c.networks, &c.graph, m)?,
                    &table,
                    &c.countries(),
                    &DyadDesignOptions {
                        controls: frictions.controls.0.clone(),
                        include_home: home,
                    },
                )?;
                report_excluded("dyad", &excluded);
                let f = fit(&frame, "count", &regs, &["i", "j"])?;
                print_coefficients(m.as_str(), &f);
                bilateral.insert(m.as_str().to_string(), estimates_json(&f));
            }
            let (_, tri) = motivating_triangular(&c, &frictions, &table, attribution, interaction)?;
            print_coefficients("triangular", &tri);
            write_json(
                dir,
                "motivating.json",
                &json!({"bilateral": bilateral, "triangular": estimates_json(&tri)}),
            )
        }
        Command::EstimateTriangular {
            graph,
            frictions,
            attribution,
            normalization,
            out,
        } => {
            let dir = out_dir(&out)?;
            let c = Corpus::load(&graph)?;
            let table = friction_table(&frictions)?;
            let design = build_triad_design(
                &c.triads(attribution)?,
                &table,
                &c.countries(),
                &TriadDesignOptions {
                    controls: frictions.controls.0.clone(),
                    ..Default::default()
                },
            )?;
            report_excluded("triad", &design.excluded);
            let mut regs = vec!["wh_ik".to_string(), "wh_kj".to_string()];
            regs.extend(columns(&frictions.controls.0, &["ik", "kj"]));
            let refs: Vec<&str> = regs.iter().map(String::as_str).collect();
            let f = fit_ppml(&design.frame, &triangular_spec(&refs))?;
            print_coefficients("triangular", &f);
            write_json(dir, "triangular.json", &estimates_json(&f))?;
            let costs = recover_cij(&f, "ij", normalization)?;
            write_cij(create(dir, "cij.csv")?, &costs)?;
            written(dir, &["cij.csv"]);
            Ok(())
        }
        Command::EstimateBilateral { graph, cij, out } => {
            let dir = out_dir(&out)?;
            let c = Corpus::load(&graph)?;
            let costs = read_cij(open_csv(&cij)?, &cij.display().to_string())?;
            let counts = count_dyadic(&c.networks, &c.graph, DyadMode::FinalAll)?;
            let b = fit_bilateral(&counts, &costs)?;
            print_coefficients("bilateral", &b.fit);
            let mut v = estimates_json(&b.fit);
            v["theta"] = json!({
                "estimate": b.theta.map(round_sig),
                "se": b.theta_se.map(round_sig),
            });
            write_json(dir, "bilateral.json", &v)
        }
        Command::Grid {
            graph,
            frictions,
            attribution,
            from,
            to,
            points,
            out,
        } => {
            if points == 0 || !(from.is_finite() && to.is_finite()) {
                return Err(Error::Usage("the grid needs at least one point and finite bounds".into()));
            }
            let dir = out_dir(&out)?;
            let c = Corpus::load(&graph)?;
            let table = friction_table(&frictions)?;
            let (frame, f) = motivating_triangular(&c, &frictions, &table, attribution, true)?;
            let axis: Vec<f64> = (0..points)
                .map(|p| if points == 1 { from } else { from + (to - from) * p as f64 / (points - 1) as f64 })
                .collect();
            let (mut ij, mut kj) = (Vec::new(), Vec::new());
            for &a in &axis {
                for &b in &axis {
                    ij.push(a);
                    kj.push(b);
                }
            }
            // other regressors held at their sample means, fixed effects at 0
            let mut rows = Frame::new();
            for name in &f.spec.regressors {
                let col = match name.as_str() {
                    "wh_ij" => ij.clone(),
                    "wh_kj" => kj.clone(),
                    "wh_ij_x_wh_kj" => ij.iter().zip(&kj).map(|(a, b)| a * b).collect(),
                    other => {
                        let x = frame.numeric(other)?;
                        vec![x.iter().sum::<f64>() / x.len() as f64; ij.len()]
                    }
                };
                rows.insert_numeric(name.clone(), col)?;
            }
            let mu = predict(&f, &rows, LevelPolicy::ReferenceZero)?;
            let mut w = csv(dir, "grid.csv")?;
            w.row(["wh_ij", "wh_kj", "mu_hat"])?;
            for ((a, b), m) in ij.iter().zip(&kj).zip(&mu) {
                w.row([fmt_sig(*a), fmt_sig(*b), fmt_sig(*m)])?;
            }
            w.finish()?;
            written(dir, &["grid.csv"]);
            Ok(())
        }
        Command::Simulate { sim, out } => {
            let dir = out_dir(&out)?;
            let s = simulate_world(&world_config(&sim)?)?;
            s.write_chains(create(dir, "sim_chains.csv")?)?;
            write_json(dir, "sim_truth.json", &s.truth_json())?;
            s.write_graph(create(dir, "firms.csv")?, create(dir, "edges.csv")?)?;
            s.write_countries(create(dir, "countries.csv")?)?;
            s.write_dyads(create(dir, "dyads.csv")?)?;
            written(dir, &["sim_chains.csv", "firms.csv", "edges.csv", "countries.csv", "dyads.csv"]);
            say!("{} records", s.records.len());
            Ok(())
        }
        Command::Recover {
            sim,
            attribution,
            normalization,
            out,
        } => {
            let dir = out_dir(&out)?;
            let s = simulate_world(&world_config(&sim)?)?;
            let r = recover(
                &s,
                &RecoveryOptions {
                    attribution,
                    normalization,
                },
            )?;
            for c in &r.coefficients {
                say!(
                    "{}\ttruth {}\testimate {}\tse {}",
                    c.name,
                    fmt_sig(c.truth),
                    fmt_sig(c.estimate),
                    fmt_sig(c.se)
                );
            }
            say!("corr(C_hat, C)\t{}", fmt_sig(r.alignment.corr));
            say!("theta\ttruth {}\testimate {}", fmt_sig(r.theta_true), fmt_sig(r.theta_hat));
            write_json(dir, "recovery_report.json", &r.to_json())
        }
    }
}

fn world_config(sim: &SimArgs) -> Result<WorldConfig> {
    let base = match &sim.config {
        Some(p) => WorldConfig::load(p)?,
        None => WorldConfig::default(),
    };
    let cfg = WorldConfig { seed: sim.seed, ..base };
    cfg.validate()?;
    Ok(cfg)
}
