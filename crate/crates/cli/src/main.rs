use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sdpcolor_core::batch::{self, ReportFormat};
use sdpcolor_core::certificates::{blend_colorings, certify_cost, certify_ktree, independent_cost};
use sdpcolor_core::formulations::{build_svcn, clique_indicator_sum, reference_solution, solve_svcn};
use sdpcolor_core::graph::{
    all_cliques, chromatic_oracle, count_colorings, enumerate_colorings, find_clique, find_coloring, generate_ktree,
    is_ktree, parse_edge_list, parse_plantri_ascii, to_edge_list, to_plantri_ascii, Graph,
};
use sdpcolor_core::heuristics::{finalize_certificate, run_heuristic, Algorithm, HeuristicStatus};
use sdpcolor_core::numlin::{self, SymMatrix};
use sdpcolor_core::sdp::{check_complementarity, SdpStatus};
use sdpcolor_core::{Config, Error};

/// Graphs larger than this need `--long` in batch mode.
const DESK_SCALE_MAX_N: usize = 11;

#[derive(Parser)]
#[command(name = "sdpcolor", version, about = "SDP formulations, certificates and heuristics for graph coloring")]
struct Cli {
    /// key=value file overriding tolerances (rank_tau, align_tol, solver_gap, ...)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GraphArg {
    /// Edge-list file ("n m" header, then "i j" lines) or plantri ascii file
    #[arg(long)]
    graph: PathBuf,

    /// Which graph of a plantri file to use (0-based)
    #[arg(long, default_value_t = 0)]
    index: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormat {
    Edges,
    Plantri,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the strict vector chromatic number SDP and report ranks
    Svcn {
        #[command(flatten)]
        graph: GraphArg,
    },
    /// Verify the closed-form dual certificate of a (k-1)-tree
    CertifyKtree {
        #[arg(long)]
        k: usize,
        /// Certify this graph instead of generating one
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Skip the SDP solve (closed-form checks only)
        #[arg(long)]
        no_solve: bool,
        /// Print the key=value block instead of the text report
        #[arg(long)]
        kv: bool,
    },
    /// Verify the coloring-dependent cost certificate for an oracle coloring
    CertifyCost {
        #[command(flatten)]
        graph: GraphArg,
        /// Palette size (default: chromatic number)
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        no_solve: bool,
        #[arg(long)]
        kv: bool,
    },
    /// Run a four-coloring heuristic on one graph
    Color {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2))]
        algo: u32,
        /// Print the step trace
        #[arg(long)]
        trace: bool,
        /// Verify the post-hoc cost certificate of a colored result
        #[arg(long)]
        certify: bool,
    },
    /// Run a heuristic over a plantri corpus
    Batch {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2))]
        algo: u32,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Allow corpora above desk scale; progress goes to a checkpoint file
        #[arg(long)]
        long: bool,
        /// Checkpoint path for --long (default: <corpus>.checkpoint)
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Keep graphs without a K_4 (reported as no-k4)
        #[arg(long)]
        no_filter: bool,
    },
    /// Brute-force chromatic number, coloring count and (k-1)-tree test
    Oracle {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Generate a random (k-1)-tree
    GenKtree {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = GraphFormat::Edges)]
        format: GraphFormat,
    },
    /// Blend the reference solutions of two distinct colorings
    Blend {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
    },
    /// Verify the coloring-independent cost matrix and its dual
    IndependentCost {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, default_value_t = 4)]
        k: usize,
    },
}

fn load_graph(arg: &GraphArg) -> Result<Graph, Error> {
    let text = fs::read_to_string(&arg.graph).map_err(|e| Error::Io(format!("{}: {e}", arg.graph.display())))?;
    let plantri =
        text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#')).is_some_and(|l| l.contains(','));
    if plantri {
        let mut gs = parse_plantri_ascii(&text)?;
        if arg.index >= gs.len() {
            return Err(Error::Domain(format!("file has {} graphs, index {} requested", gs.len(), arg.index)));
        }
        Ok(gs.swap_remove(arg.index))
    } else {
        parse_edge_list(&text)
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, Error> {
    match path {
        Some(p) => Config::parse(&fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?),
        None => Ok(Config::default()),
    }
}

fn labels(vs: &[usize]) -> String {
    vs.iter().map(|v| (v + 1).to_string()).collect::<Vec<_>>().join(",")
}

fn verdict(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Svcn { graph } => {
            let g = load_graph(&graph)?;
            let res = solve_svcn(&build_svcn(&g)?, &cfg.solver(), cfg.rank_tau)?;
            let comp = check_complementarity(&res.solution.x, &res.solution.s, 1e-5, cfg.rank_tau)?;
            println!("status {}", res.solution.status);
            println!("objective {:.8}", res.objective);
            println!("primal rank {}", res.primal_rank);
            println!("dual rank {}", res.dual_rank);
            println!("full primal rank {}", res.primal_rank_full);
            println!("full dual rank {}", res.dual_rank_full);
            println!("rank sum {} <= {}", comp.rank_sum, comp.dim);
            println!("iterations {}", res.solution.iterations);
            Ok(verdict(res.solution.status == SdpStatus::Optimal))
        }
        Command::CertifyKtree { k, graph, n, seed, no_solve, kv } => {
            let g = match graph {
                Some(p) => load_graph(&GraphArg { graph: p, index: 0 })?,
                None => generate_ktree(k, n, seed)?.0,
            };
            if is_ktree(&g, k).is_none() {
                println!("graph is not a {}-tree; no certificate exists", k.saturating_sub(1));
                println!("verdict: false");
                return Ok(ExitCode::from(1));
            }
            let rep = certify_ktree(&g, k, &cfg, !no_solve)?;
            print!("{}", if kv { rep.to_kv() } else { rep.to_text() });
            Ok(verdict(rep.verdict))
        }
        Command::CertifyCost { graph, k, no_solve, kv } => {
            let g = load_graph(&graph)?;
            let k = k.unwrap_or_else(|| chromatic_oracle(&g).0);
            let c = find_coloring(&g, k).ok_or_else(|| Error::Domain(format!("graph is not {k}-colorable")))?;
            let rep = certify_cost(&g, &c, &cfg, !no_solve)?;
            print!("{}", if kv { rep.to_kv() } else { rep.to_text() });
            Ok(verdict(rep.verdict))
        }
        Command::Color { graph, algo, trace, certify } => {
            let g = load_graph(&graph)?;
            let algo = Algorithm::from_number(algo).expect("clap restricts the range");
            let out = run_heuristic(&g, algo, &cfg)?;
            if trace {
                print!("{}", out.log_text());
            }
            println!("clique {}", labels(&out.clique));
            println!("solves {}", out.solves);
            match (&out.status, &out.coloring) {
                (HeuristicStatus::Colored, Some(c)) => {
                    println!("COLORED rank {}", out.final_rank);
                    let colors: Vec<String> = c.colors().iter().map(|x| (x + 1).to_string()).collect();
                    println!("coloring {}", colors.join(" "));
                    if certify {
                        print!("{}", finalize_certificate(&g, &out, &cfg)?.to_text());
                    }
                    Ok(ExitCode::SUCCESS)
                }
                _ => {
                    println!("FAILED ({})", out.status);
                    if let Some(r) = &out.reason {
                        println!("reason {r}");
                    }
                    println!("aligned {}", labels(&out.aligned));
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Batch { corpus, algo, format, jobs, long, checkpoint, no_filter } => {
            let text = fs::read_to_string(&corpus).map_err(|e| Error::Io(format!("{}: {e}", corpus.display())))?;
            let graphs = parse_plantri_ascii(&text)?;
            let algo = Algorithm::from_number(algo).expect("clap restricts the range");
            let max_n = graphs.iter().map(Graph::n).max().unwrap_or(0);
            if max_n > DESK_SCALE_MAX_N && !long {
                eprintln!("corpus has graphs with {max_n} vertices; pass --long to run above n = {DESK_SCALE_MAX_N}");
                return Ok(ExitCode::from(2));
            }
            let report = if long {
                let ck = checkpoint.unwrap_or_else(|| {
                    let mut p = corpus.clone().into_os_string();
                    p.push(".checkpoint");
                    PathBuf::from(p)
                });
                batch::run_batch_resumable(&graphs, algo, !no_filter, &cfg, jobs, &ck)?
            } else {
                batch::run_batch(&graphs, algo, !no_filter, &cfg, jobs)?
            };
            let fmt = match format {
                Format::Text => ReportFormat::Text,
                Format::Csv => ReportFormat::Csv,
            };
            print!("{}", batch::emit_report(&report, fmt));
            Ok(verdict(report.failures() == 0))
        }
        Command::Oracle { graph, k } => {
            let g = load_graph(&graph)?;
            let (chi, c) = chromatic_oracle(&g);
            let k = k.unwrap_or(chi);
            println!("vertices {} edges {}", g.n(), g.edge_count());
            println!("chromatic number {chi}");
            let colors: Vec<String> = c.colors().iter().map(|x| (x + 1).to_string()).collect();
            println!("coloring {}", colors.join(" "));
            println!("colorings with {k} colors {}", count_colorings(&g, k));
            println!("{}-tree {}", k.saturating_sub(1), is_ktree(&g, k).is_some());
            if let Some(q) = find_clique(&g, k) {
                println!("clique {}", labels(&q));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::GenKtree { k, n, seed, format } => {
            let (g, _) = generate_ktree(k, n, seed)?;
            match format {
                GraphFormat::Edges => print!("{}", to_edge_list(&g)),
                GraphFormat::Plantri => println!("{}", to_plantri_ascii(&g)),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Blend { graph, k, alpha } => {
            let g = load_graph(&graph)?;
            let clique = find_clique(&g, k).ok_or_else(|| Error::Domain(format!("graph has no K_{k}")))?;
            let cs = enumerate_colorings(&g, k, 2);
            if cs.len() < 2 {
                println!("graph has {} {k}-coloring(s) up to permutation; nothing to blend", cs.len());
                return Ok(ExitCode::from(1));
            }
            let x = blend_colorings(&g, &cs[0], &cs[1], &clique, alpha)?;
            let rank = numlin::numerical_rank(&x, cfg.rank_tau)?;
            let inst = sdpcolor_core::formulations::build_cost_sdp(&g, k, &SymMatrix::zeros(g.n()))?;
            let res = inst.problem.primal_residual(&x);
            let psd = numlin::is_psd(&x, None)?;
            println!("rank {rank} (k-1 = {})", k - 1);
            println!("max constraint residual {res:.1e}");
            println!("psd {psd}");
            Ok(verdict(rank > k - 1 && res <= 1e-12 && psd))
        }
        Command::IndependentCost { graph, k } => {
            let g = load_graph(&graph)?;
            let (c, dual) = independent_cost(&g, k)?;
            let decomposition = clique_indicator_sum(g.n(), &all_cliques(&g, k));
            let psd = numlin::is_psd(&dual.s, None)?;
            let exact = dual.s == decomposition;
            println!("cliques {}", all_cliques(&g, k).len());
            println!("psd {psd}");
            println!("equals clique sum {exact}");
            println!("dual objective {:.12}", dual.dual_obj);
            let mut ok = psd && exact;
            if let Some(col) = find_coloring(&g, k) {
                let primal = c.dot(&reference_solution(&g, &col)?);
                let agree = (primal - dual.dual_obj).abs() <= 1e-10;
                println!("C . X_ref {primal:.12} ({})", if agree { "equal" } else { "DIFFERENT" });
                ok &= agree;
            }
            Ok(verdict(ok))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Numerical(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
