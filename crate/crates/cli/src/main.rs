use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use graphlap::bridge::kde_report;
use graphlap::eigen::smallest_k;
use graphlap::geometry::{quadrature_cloud, read_cloud, sample, DensitySpec, ManifoldKind, ManifoldSpec, PointCloud};
use graphlap::graph::{build_graph_with, WeightedGraph};
use graphlap::kernel::{make_kernel, KernelProfile};
use graphlap::laplacian::{assemble, LaplacianKind};
use graphlap::study::{
    compute_fits, emit, emit_timings, report_from_json, run_study, scheduled_h, EmitFormat, FitReport, StudyConfig,
};
use graphlap::transport::{estimate_eps, Metric};

/// Random geometric graph Laplacians on model manifolds and their
/// convergence to the weighted Laplace-Beltrami operator.
#[derive(Parser)]
#[command(name = "graphlap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence studies
    #[command(subcommand)]
    Study(StudyCommand),
    /// Graph construction
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Graph Laplacian eigenpairs
    #[command(subcommand)]
    Eig(EigCommand),
    /// Transport distance between samples and a quadrature cloud
    #[command(subcommand)]
    Transport(TransportCommand),
    /// Degree versus density comparison
    #[command(subcommand)]
    Kde(KdeCommand),
}

#[derive(Subcommand)]
enum StudyCommand {
    /// Run a study from a TOML config; writes report.json, report.csv,
    /// report.svg and timings.json
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Recompute and print rate fits from a report
    Rates {
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Build the weighted graph and write it as triplets or binary CSR
    Build {
        #[command(flatten)]
        cloud: CloudArgs,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, value_enum, default_value_t = GraphFormat::Triplets)]
        format: GraphFormat,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum EigCommand {
    /// Smallest eigenpairs; writes <out>.json and <out>.vec, or prints the
    /// summary when no output is given
    Solve {
        #[command(flatten)]
        cloud: CloudArgs,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value = "un")]
        kind: LaplacianKind,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = graphlap::eigen::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = graphlap::eigen::DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum TransportCommand {
    /// Bottleneck transport distance from N quadrature points onto the sample
    Eps {
        #[command(flatten)]
        cloud: CloudArgs,
        /// Quadrature size; defaults to 20 n
        #[arg(long = "N")]
        big: Option<usize>,
        #[arg(long, default_value = "geodesic")]
        metric: Metric,
        /// Write the transport plan as JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum KdeCommand {
    /// Max |m_i - p(x_i)| and the pieces of its bound
    Check {
        #[command(flatten)]
        cloud: CloudArgs,
        #[command(flatten)]
        graph: GraphArgs,
        /// Quadrature size for the transport term; 0 skips it
        #[arg(long = "N", default_value_t = 0)]
        big: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormat {
    Triplets,
    Csr,
}

#[derive(Args)]
struct CloudArgs {
    /// torus or sphere
    #[arg(long, default_value = "torus")]
    manifold: String,
    /// Intrinsic dimension
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// uniform, tilt:<strength> (sphere) or cosine:<amplitude>[:<axis>] (torus)
    #[arg(long, default_value = "uniform")]
    density: String,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Read the sample from a binary cloud file instead of drawing it
    #[arg(long)]
    cloud: Option<PathBuf>,
}

#[derive(Args)]
struct GraphArgs {
    /// Bandwidth; defaults to the scheduled value for n and m
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, default_value = "gauss")]
    kernel: KernelProfile,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    self_loops: bool,
}

impl CloudArgs {
    fn manifold(&self) -> Result<ManifoldSpec> {
        let kind = match self.manifold.as_str() {
            "torus" => ManifoldKind::Torus,
            "sphere" => ManifoldKind::Sphere,
            other => bail!("unknown manifold {other:?}"),
        };
        Ok(ManifoldSpec::from_kind(kind, self.m)?)
    }

    fn density(&self, man: &ManifoldSpec) -> Result<DensitySpec> {
        let parts: Vec<&str> = self.density.split(':').collect();
        let num = |i: usize| -> Result<f64> {
            parts
                .get(i)
                .context("density parameter missing")?
                .parse::<f64>()
                .context("bad density parameter")
        };
        Ok(match parts[0] {
            "uniform" => DensitySpec::uniform(man),
            "tilt" => DensitySpec::sphere_tilt(man, num(1)?)?,
            "cosine" => {
                let axis = if parts.len() > 2 { num(2)? as usize } else { 0 };
                DensitySpec::torus_cosine(man, num(1)?, axis)?
            }
            other => bail!("unknown density {other:?}"),
        })
    }

    fn load(&self) -> Result<PointCloud> {
        if let Some(path) = &self.cloud {
            let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            return Ok(read_cloud(BufReader::new(f))?);
        }
        let man = self.manifold()?;
        let dens = self.density(&man)?;
        Ok(sample(&man, &dens, self.n, self.seed)?)
    }
}

impl GraphArgs {
    fn build(&self, cloud: &PointCloud) -> Result<WeightedGraph> {
        let m = cloud.manifold.m;
        let h = self.h.unwrap_or_else(|| scheduled_h(cloud.len(), m));
        let kernel = make_kernel(self.kernel, m)?;
        let g = build_graph_with(cloud, h, &kernel, self.self_loops)?;
        for w in &g.warnings {
            eprintln!("warning: {w}");
        }
        Ok(g)
    }
}

fn print_fit(f: &FitReport) {
    let fit = match &f.fit {
        Some(r) => match r.stderr {
            Some(se) => format!("slope {:.4} ± {:.4}", r.slope, se),
            None => format!("slope {:.4}", r.slope),
        },
        None => "slope undefined".to_string(),
    };
    let medians: Vec<String> = f.medians.iter().map(|(n, e)| format!("{n}:{e:.4e}")).collect();
    println!(
        "entry {} {:?} {:?}: {} decreasing={} medians [{}]",
        f.entry,
        f.quantity,
        f.subset,
        fit,
        f.strictly_decreasing,
        medians.join(", ")
    );
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Study(StudyCommand::Run { config, out_dir }) => {
            let cfg = StudyConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let (report, timings) = run_study(&cfg)?;
            std::fs::create_dir_all(&out_dir)?;
            emit(&report, EmitFormat::Json, &out_dir.join("report.json"))?;
            emit(&report, EmitFormat::Csv, &out_dir.join("report.csv"))?;
            emit(&report, EmitFormat::SvgPlotData, &out_dir.join("report.svg"))?;
            emit_timings(&timings, &out_dir.join("timings.json"))?;
            for row in &report.rows {
                println!(
                    "n={} seed={} h={:.4} eps={:.4} flags=[{}]",
                    row.n,
                    row.seed,
                    row.h.unwrap_or(f64::NAN),
                    row.eps_hat.unwrap_or(f64::NAN),
                    row.flags.join(",")
                );
            }
            report.fits.iter().for_each(print_fit);
        }
        Command::Study(StudyCommand::Rates { report }) => {
            let text = std::fs::read_to_string(&report).with_context(|| format!("reading {}", report.display()))?;
            let rep = report_from_json(&text)?;
            compute_fits(&rep.rows).iter().for_each(print_fit);
        }
        Command::Graph(GraphCommand::Build { cloud, graph, format, out }) => {
            let g = graph.build(&cloud.load()?)?;
            let w = BufWriter::new(File::create(&out)?);
            match format {
                GraphFormat::Triplets => g.write_triplets(w)?,
                GraphFormat::Csr => g.write_csr(w)?,
            }
            println!("n={} nnz={} h={}", g.n, g.nnz(), g.h);
        }
        Command::Eig(EigCommand::Solve { cloud, graph, kind, k, tol, max_iter, out }) => {
            let g = graph.build(&cloud.load()?)?;
            let op = assemble(&g, kind)?;
            let res = smallest_k(&op, k, tol, max_iter)?;
            match out {
                Some(prefix) => {
                    let vec_path = prefix.with_extension("vec");
                    res.write_vectors(BufWriter::new(File::create(&vec_path)?))?;
                    let name = vec_path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                    res.write_json(BufWriter::new(File::create(prefix.with_extension("json"))?), &name)?;
                }
                None => {
                    let mut stdout = std::io::stdout().lock();
                    res.write_json(&mut stdout, "")?;
                    writeln!(stdout)?;
                }
            }
            if !res.converged {
                eprintln!("warning: eigensolver did not converge in {} iterations", res.iterations);
            }
        }
        Command::Transport(TransportCommand::Eps { cloud, big, metric, out }) => {
            let x = cloud.load()?;
            let big = big.unwrap_or(20 * x.len());
            let q = quadrature_cloud(&x.manifold, &x.density, big, x.seed)?;
            let plan = estimate_eps(&x, &q, metric)?;
            if let Some(path) = out {
                plan.write_json(BufWriter::new(File::create(path)?))?;
            }
            println!(
                "{}",
                serde_json::json!({
                    "n": x.len(), "N": big, "capacity": plan.capacity,
                    "metric": plan.metric, "eps_hat": plan.eps_hat,
                })
            );
        }
        Command::Kde(KdeCommand::Check { cloud, graph, big }) => {
            let x = cloud.load()?;
            let g = graph.build(&x)?;
            let eps = if big > 0 {
                let q = quadrature_cloud(&x.manifold, &x.density, big, x.seed)?;
                Some(estimate_eps(&x, &q, Metric::Geodesic)?.eps_hat)
            } else {
                None
            };
            let rep = kde_report(&g, &x, eps);
            println!(
                "{}",
                serde_json::json!({
                    "n": x.len(), "h": g.h, "eps_hat": eps, "max_error": rep.max_error,
                    "lipschitz_term": rep.lipschitz_term, "transport_term": rep.transport_term,
                    "curvature_term": rep.curvature_term,
                })
            );
        }
    }
    Ok(())
}
